//! Probe the largest overlap of Schmidt-rank-two states with Q on two pairs.
//!
//! Run with `cargo run --release --example rank_two_probe -- [restarts] [seed]`.

use distilcheck::projectors::q_two_pair;
use distilcheck::sropt::{max_overlap_rank_k, SeesawConfig};
use distilcheck::tensor::{schmidt, Cut};

fn main() -> distilcheck::Result<()> {
    let mut args = std::env::args().skip(1);
    let restarts = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let q = q_two_pair(4)?;
    let cut = Cut::two_pair();
    let config = SeesawConfig::default().with_restarts(restarts).with_seed(seed);
    for rank in [1, 2] {
        let report = max_overlap_rank_k(&q, &[4; 4], &cut, rank, &config)?;
        let mean_iters =
            report.iterations.iter().sum::<usize>() as f64 / report.iterations.len() as f64;
        println!(
            "rank {rank}: best {:.12} (restart {}, converged {}, mean iterations {mean_iters:.0})",
            report.best_value, report.best_restart, report.converged
        );
        let dec = schmidt(&report.best_pure_state(), &cut)?;
        let coeffs: Vec<String> = dec.coefficients.iter().take(rank + 1).map(|c| format!("{c:.6}")).collect();
        println!("  Schmidt coefficients: {}", coeffs.join(", "));
    }
    Ok(())
}
