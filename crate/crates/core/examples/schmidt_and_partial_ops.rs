//! Schmidt decompositions, partial traces and subsystem reordering on
//! two-pair states.
//!
//! `cargo run --release --example schmidt_and_partial_ops`

use distilcheck::io::{state_from_json, state_to_json};
use distilcheck::rng::stream_rng;
use distilcheck::sropt::{equality_state, random_rank_k_two_pair};
use distilcheck::tensor::{partial_trace, reorder_subsystems, schmidt, trace, Cut, ZERO_TOL};

fn main() -> distilcheck::Result<()> {
    let phi = equality_state(0.5)?;
    let cut = Cut::two_pair();
    let dec = schmidt(&phi, &cut)?;
    println!("equality state (r = 1/2), cut AA':BB'");
    println!("  Schmidt rank {}, coefficients {:?}", dec.rank(ZERO_TOL), &dec.coefficients[..3]);

    // The same state seen across the A:A'BB' cut.
    let single = Cut::new(vec![0], 4)?;
    println!("  rank across A:A'BB' = {}", schmidt(&phi, &single)?.rank(ZERO_TOL));

    let rho = phi.density_matrix();
    let rho_ab = partial_trace(&rho, phi.dims(), &[1, 3])?;
    println!("  reduced state on AB: side {}, trace {:.12}", rho_ab.nrows(), trace(&rho_ab).re);

    // Cut order (A, A', B, B') to pair order (A, B, A', B').
    let pair_order = reorder_subsystems(&phi, &[0, 2, 1, 3])?;
    println!("  pair-order amplitudes differ from cut order: {}", pair_order.amplitudes() != phi.amplitudes());

    let mut rng = stream_rng(3, 0, 0);
    let random = random_rank_k_two_pair(&mut rng, 4, 2)?;
    let text = state_to_json(&random)?;
    let back = state_from_json(&text)?;
    println!(
        "random rank-two state: rank {}, JSON round trip exact: {}",
        schmidt(&random, &cut)?.rank(ZERO_TOL),
        back.amplitudes() == random.amplitudes()
    );
    Ok(())
}
