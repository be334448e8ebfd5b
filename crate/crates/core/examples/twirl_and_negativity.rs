//! The twirled two-pair family σ(p, s): negativity, the two-positive witness
//! and the monotonicity bound for rank-two states.
//!
//! `cargo run --release --example twirl_and_negativity`

use distilcheck::measures::{
    monotonicity_bound, negativity_sigma, negativity_sigma_dense, schmidt_form_state, twirl_state, witness_scan,
    IsotropicTwoPairState,
};
use distilcheck::rng::stream_rng;
use distilcheck::sropt::equality_state;

fn main() -> distilcheck::Result<()> {
    for (p, s) in [(0.5, 0.0), (0.75, 0.1), (0.3, 0.4)] {
        let st = IsotropicTwoPairState::new(4, p, s)?;
        println!(
            "σ(p={p}, s={s}): ‖σ^Γ‖₁ closed form {:.12}, dense {:.12}",
            negativity_sigma(&st)?,
            negativity_sigma_dense(&st)?
        );
    }

    let tw = twirl_state(&equality_state(0.5)?)?;
    println!("twirl of the equality state: p = {:.12}, s = {:.12}", tw.p, tw.s);

    for row in witness_scan(&[0.5, 0.74, 0.76, 0.9], 20)? {
        println!(
            "witness at p = {:.2}: min eigenvalue over s {:+.5}, at s = 0 {:+.5}, detects for all s {}",
            row.p, row.min_eigenvalue, row.at_s_zero, row.detects_for_all_s
        );
    }

    let mut rng = stream_rng(8, 0, 0);
    for (a, b) in [(1.0, 0.0), (0.8, 0.6), (0.5f64.sqrt(), 0.5f64.sqrt())] {
        let r = monotonicity_bound(&schmidt_form_state(&mut rng, a, b)?)?;
        println!(
            "Schmidt coefficients ({a:.3}, {b:.3}): p = {:.6}, exact bound {:.6}, holds {}",
            r.p, r.exact_bound, r.holds
        );
    }
    Ok(())
}
