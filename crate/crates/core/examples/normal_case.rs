//! The matrix picture of the range of Q: (A, B) pairs, the normal case and
//! the appendix bound (3d-4)/d².
//!
//! `cargo run --release --example normal_case -- [samples]`

use distilcheck::matrix_iso::{
    appendix_max, is_normal_projection, normal_pair_experiment, normal_projection_fraction, psiq_to_ab,
    top2_singular_sq_sum, QSubspaceVector,
};
use distilcheck::rng::stream_rng;
use distilcheck::sropt::equality_state;

fn main() -> distilcheck::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);

    let mut rng = stream_rng(5, 0, 0);
    let v = QSubspaceVector::random(&mut rng, 4)?;
    let pair = psiq_to_ab(&v)?;
    println!(
        "random vector on the range of Q: constraint residual {:.1e}, normal {}, σ1²+σ2² = {:.6}",
        pair.constraint_residual(),
        pair.is_normal(1e-9),
        top2_singular_sq_sum(&pair)
    );

    let eq = is_normal_projection(&equality_state(0.5)?)?;
    println!("equality state: {:?}, overlap {:.12}, certified {}", eq.classification, eq.overlap, eq.certified);

    let s = normal_pair_experiment(samples, 4, 11);
    println!(
        "{} random normal pairs: max σ1²+σ2² = {:.9}, exceedances {}",
        s.samples,
        s.max_value,
        s.exceedances.len()
    );

    let f = normal_projection_fraction(500, 11)?;
    println!(
        "random rank-two states: {} normal, {} non-normal, {} unclassified out of {}",
        f.normal, f.non_normal, f.unclassified, f.samples
    );

    for d in [3, 4, 5, 6] {
        let r = appendix_max(d, 100, 11)?;
        println!(
            "d = {d}: (3d-4)/d² = {:.9}, reduction {:.9}, spectral {:.9}, ascent {:.9}",
            r.closed_form, r.reduction, r.spectral, r.ascent
        );
    }
    Ok(())
}
