//! Half-property certificates: common degrees of freedom, single-subsystem
//! Schmidt ranks and the normal-projection test.
//!
//! `cargo run --release --example certificates`

use distilcheck::certs::{
    cdf, certify_by_cdf, certify_by_normality, certify_by_schmidt_ranks, q_invariance_check, random_state_with_cdf,
    Certificate, Pair,
};
use distilcheck::rng::{haar_unitary, stream_rng};
use distilcheck::sropt::{equality_state, random_rank_k_two_pair};
use distilcheck::PureState;

fn show(label: &str, c: distilcheck::Result<Certificate>) {
    match c {
        Ok(c) => match &c.refusal {
            None => println!("  {label:<7} certified, overlap {:.9}", c.overlap),
            Some(why) => println!("  {label:<7} refused: {why}"),
        },
        Err(e) => println!("  {label:<7} not applicable: {e}"),
    }
}

fn report(name: &str, phi: &PureState) -> distilcheck::Result<()> {
    println!(
        "{name}: cdf(AB) = {:?}, cdf(A'B') = {:?}",
        cdf(phi, Pair::AB, 1e-10)?,
        cdf(phi, Pair::APrimeBPrime, 1e-10)?
    );
    show("cdf", certify_by_cdf(phi, 1e-10));
    show("ranks", certify_by_schmidt_ranks(phi, 1e-10));
    show("normal", certify_by_normality(phi));
    Ok(())
}

fn main() -> distilcheck::Result<()> {
    report("equality state", &equality_state(0.5)?)?;

    let mut rng = stream_rng(9, 0, 0);
    report("state with cdf {1} and {0, 2}", &random_state_with_cdf(&mut rng, 4, &[1], &[0, 2])?)?;
    report("generic rank-two state", &random_rank_k_two_pair(&mut rng, 4, 2)?)?;

    let u = haar_unitary(&mut rng, 4);
    let v = haar_unitary(&mut rng, 4);
    println!("max |W Q W† - Q| for W = U⊗V⊗U*⊗V*: {:.2e}", q_invariance_check(&u, &v)?);
    Ok(())
}
