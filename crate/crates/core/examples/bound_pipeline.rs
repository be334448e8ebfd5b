//! Product-state maxima, the closed forms for maximal-form superpositions and
//! the γ argument behind the upper bound on rank-two overlaps.
//!
//! `cargo run --release --example bound_pipeline -- [restarts]`

use distilcheck::bounds::{
    coherence_term, coherence_term_dense, f_of_gamma, final_bound, lambda0, product_max, product_pair_estimate,
    strict_three_quarters_report, superposition_overlap, superposition_overlap_dense, PairObjective,
};
use distilcheck::rng::{haar_vector, stream_rng};

fn main() -> distilcheck::Result<()> {
    let restarts = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);

    for n in 1..=3 {
        let r = product_max(n, 10, 1)?;
        println!(
            "n = {n}: λ0 = {:.6}, rank-one seesaw {:.9} (matrix-free {})",
            lambda0(n, 4),
            r.numerical,
            r.matrix_free
        );
    }

    let mut rng = stream_rng(2, 0, 0);
    let psis = [haar_vector(&mut rng, 4), haar_vector(&mut rng, 4)];
    let mut tildes = [haar_vector(&mut rng, 4), haar_vector(&mut rng, 4)];
    println!(
        "coherence: closed form {:.12}, dense {:.12}",
        coherence_term(&psis, &tildes)?,
        coherence_term_dense(&psis, &tildes)?.re
    );
    // Make the first copy orthogonal so the two product states are orthogonal.
    let unit = psis[0].normalize();
    let t = &tildes[0] - &unit * unit.dotc(&tildes[0]);
    tildes[0] = t.normalize();
    println!(
        "superposition at p = 0.3: closed form {:.12}, dense {:.12}",
        superposition_overlap(0.3, &psis, &tildes)?,
        superposition_overlap_dense(0.3, &psis, &tildes)?
    );

    for gamma in [0.3125, 0.35, 0.37, 0.375] {
        let f = f_of_gamma(gamma)?;
        println!("f({gamma:.4}) = {:.7} at a = ({:.4}, {:.4})", f.value, f.argmax[0], f.argmax[1]);
    }
    let fb = final_bound()?;
    println!("crossing γ* = {:.7}, bound 3/8 + γ* = {:.7}", fb.gamma, fb.resulting_bound);

    let sum = product_pair_estimate(PairObjective::DiagonalPlusCoherence, restarts, 4)?;
    let coh = product_pair_estimate(PairObjective::Coherence, restarts, 4)?;
    println!("orthogonal product pairs, {restarts} restarts:");
    println!("  max ⟨φ1|Q|φ1⟩ + |⟨φ1|Q|φ1⊥⟩| = {:.7} (17/32 = 0.53125)", sum.value);
    println!("  3/8 + max |⟨φ1|Q|φ1⊥⟩|       = {:.7} (5/8)", 0.375 + coh.value);

    let strict = strict_three_quarters_report(50, 200, 4)?;
    println!("maximal-form sum {:.6}, below 3/4: {}", strict.maximal_form_sum, strict.strictly_below_three_quarters);
    Ok(())
}
