//! The boundary Werner state, its partial transpose and the projectors Qₙ.
//!
//! `cargo run --release --example werner_and_qn`

use distilcheck::projectors::{
    build_qn_direct_dense, build_qn_recursive, build_qn_recursive_dense, qn_gamma, qn_gamma_spectrum,
    werner_density, WernerParams, DEFAULT_MEMORY_CAP,
};
use distilcheck::tensor::{hermitian_eigenvalues, max_abs_diff, partial_transpose, projector_residual, trace};

fn main() -> distilcheck::Result<()> {
    let params = WernerParams::boundary(4)?;
    let rho = werner_density(params)?;
    let rho_gamma = partial_transpose(&rho, &[4, 4], &[1])?;
    let min_eig = hermitian_eigenvalues(&rho_gamma)[0];
    println!("boundary Werner state: p = {:.6}, alpha = {:.6}", params.p, params.alpha());
    println!("  tr ρ = {:.12}, smallest eigenvalue of ρ^Γ = {min_eig:.3e} (PPT boundary)", trace(&rho).re);

    for n in 1..=2 {
        let q = build_qn_recursive_dense(n, 4, DEFAULT_MEMORY_CAP)?;
        let direct = build_qn_direct_dense(n, 4, DEFAULT_MEMORY_CAP)?;
        println!(
            "Q{n}: side {}, rank {:.0}, projector residual {:.1e}, recursive vs direct {:.1e}",
            q.nrows(),
            trace(&q).re,
            projector_residual(&q),
            max_abs_diff(&q, &direct)
        );
    }

    let q2 = build_qn_recursive_dense(2, 4, DEFAULT_MEMORY_CAP)?;
    let eig = hermitian_eigenvalues(&qn_gamma(&q2, 4, 2)?);
    println!("dense spectrum of Q2^Γ:");
    for lam in [0.375, 0.125, -0.625] {
        let count = eig.iter().filter(|&&e| (e - lam).abs() < 1e-10).count();
        println!("  {lam:>7} x {count}");
    }

    for n in 1..=4 {
        let rows: Vec<String> = qn_gamma_spectrum(n, 4)?
            .iter()
            .map(|e| format!("{:+.5} x {}", e.eigenvalue, e.multiplicity))
            .collect();
        println!("closed-form spectrum of Q{n}^Γ: {}", rows.join(", "));
    }

    let q3 = build_qn_recursive(3, 4)?;
    println!("Q3 is applied matrix-free: {}", !q3.is_dense());
    Ok(())
}
