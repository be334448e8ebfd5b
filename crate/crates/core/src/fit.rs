//! Fidelity of a state with structured product families, by alternating
//! maximization.
//!
//! Each family is a product over pairs of a simple two-party vector. Holding
//! all but one factor fixed turns the overlap into a small quadratic problem on
//! the remaining factor that is solved exactly, so every sweep is monotone.
//! Several deterministic starts guard against poor local optima.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{haar_vector, module_id, stream_rng};
use crate::tensor::{
    c64, hermitian_eigen, sorted_svd, ComplexMatrix, ComplexVector, PureState, C64,
};

const SWEEP_LIMIT: usize = 500;
const SWEEP_TOL: f64 = 1e-14;
const RANDOM_STARTS: usize = 8;

/// `max |ψ†Wψ|` over unit `ψ`, with a maximizer.
///
/// Uses `r(W) = max_θ λ_max((e^{iθ}W + e^{-iθ}W†)/2)`: a coarse scan over θ
/// followed by golden-section refinement around the best grid point.
pub fn numerical_radius(w: &ComplexMatrix) -> (f64, ComplexVector) {
    let top = |theta: f64| -> (f64, ComplexVector) {
        let rot = c64(theta.cos(), theta.sin());
        let h = (w * rot + w.adjoint() * rot.conj()) * c64(0.5, 0.0);
        let (vals, vecs) = hermitian_eigen(&h);
        let last = vals.len() - 1;
        (vals[last], vecs.column(last).into_owned())
    };
    let grid = 96;
    let step = std::f64::consts::TAU / grid as f64;
    let mut best_theta = 0.0;
    let mut best_val = f64::NEG_INFINITY;
    for g in 0..grid {
        let th = g as f64 * step;
        let (v, _) = top(th);
        if v > best_val {
            best_val = v;
            best_theta = th;
        }
    }
    let (mut lo, mut hi) = (best_theta - step, best_theta + step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = top(x1).0;
    let mut f2 = top(x2).0;
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = top(x2).0;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = top(x1).0;
        }
    }
    let (_, v) = top(0.5 * (lo + hi));
    let (_, v0) = top(best_theta);
    let val = v.dotc(&(w * &v)).norm();
    let val0 = v0.dotc(&(w * &v0)).norm();
    if val >= val0 {
        (val, v)
    } else {
        (val0, v0)
    }
}

/// `max |zᵀSz|` over unit `z`, with a maximizer. Only the symmetric part of
/// `S` contributes; its largest singular value is the maximum, reached at the
/// Takagi vector, which the fixed-point iteration `z ← conj(S z)/‖·‖` polishes.
pub fn takagi_max(s: &ComplexMatrix) -> (f64, ComplexVector) {
    let sym = (s + s.transpose()) * c64(0.5, 0.0);
    let svd = sorted_svd(&sym);
    let mut z: ComplexVector = svd.u.column(0).map(|x| x.conj());
    let value = |z: &ComplexVector| (z.transpose() * &sym * z)[(0, 0)].norm();
    let mut best = (value(&z), z.clone());
    for _ in 0..200 {
        let next = (&sym * &z).map(|x| x.conj());
        let n = next.norm();
        if n == 0.0 {
            break;
        }
        z = next.unscale(n);
        let v = value(&z);
        if v > best.0 + 1e-16 {
            best = (v, z.clone());
        } else {
            break;
        }
    }
    best
}

fn check_cut_order(state: &PureState, n: usize, d: usize) -> Result<()> {
    if state.dims() != vec![d; 2 * n].as_slice() {
        return Err(Error::Dimension(format!(
            "expected {n} pairs of dimension {d} in cut order, got dims {:?}",
            state.dims()
        )));
    }
    Ok(())
}

/// How the `B` factor of each pair is tied to the `A` factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PairTie {
    /// `|x⟩|x*⟩`
    Conjugate,
    /// `|x⟩|x⟩`
    Equal,
}

#[derive(Clone, Debug)]
pub struct PairedProductFit {
    pub fidelity: f64,
    /// One unit vector per pair.
    pub vectors: Vec<ComplexVector>,
    pub overlap: C64,
}

/// Contract every pair except `skip` against `|x_j⟩_{A_j}|x̃_j⟩_{B_j}` and
/// return the `d×d` remainder indexed by `(a_skip, b_skip)`.
fn contract_pairs(
    amps: &ComplexVector,
    n: usize,
    d: usize,
    left: &[ComplexVector],
    right: &[ComplexVector],
    skip: usize,
) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d, d);
    let total = 2 * n;
    for (flat, amp) in amps.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let digit = |pos: usize| (flat / d.pow((total - 1 - pos) as u32)) % d;
        let mut w = *amp;
        for j in 0..n {
            if j != skip {
                w *= left[j][digit(j)].conj() * right[j][digit(n + j)].conj();
            }
        }
        out[(digit(skip), digit(n + skip))] += w;
    }
    out
}

fn tied(v: &ComplexVector, tie: PairTie) -> ComplexVector {
    match tie {
        PairTie::Conjugate => v.map(|z| z.conj()),
        PairTie::Equal => v.clone(),
    }
}

fn paired_overlap(amps: &ComplexVector, n: usize, d: usize, vectors: &[ComplexVector], tie: PairTie) -> C64 {
    let right: Vec<ComplexVector> = vectors.iter().map(|v| tied(v, tie)).collect();
    let m = contract_pairs(amps, n, d, vectors, &right, 0);
    let x = &vectors[0];
    let y = &right[0];
    (x.adjoint() * m * y.map(|z| z.conj()))[(0, 0)]
}

fn sweep_from(
    amps: &ComplexVector,
    n: usize,
    d: usize,
    mut vectors: Vec<ComplexVector>,
    tie: PairTie,
) -> PairedProductFit {
    let mut last = paired_overlap(amps, n, d, &vectors, tie).norm();
    for _ in 0..SWEEP_LIMIT {
        for i in 0..n {
            let right: Vec<ComplexVector> = vectors.iter().map(|v| tied(v, tie)).collect();
            let m = contract_pairs(amps, n, d, &vectors, &right, i);
            vectors[i] = match tie {
                // overlap = Σ conj(x_a) x_b M_ab = x†Mx
                PairTie::Conjugate => numerical_radius(&m).1,
                // overlap = Σ conj(x_a) conj(x_b) M_ab = zᵀMz with z = x̄
                PairTie::Equal => takagi_max(&m).1.map(|z| z.conj()),
            };
        }
        let now = paired_overlap(amps, n, d, &vectors, tie).norm();
        if now - last < SWEEP_TOL {
            last = last.max(now);
            break;
        }
        last = now;
    }
    let overlap = paired_overlap(amps, n, d, &vectors, tie);
    PairedProductFit { fidelity: overlap.norm_sqr().max(last * last), vectors, overlap }
}

/// `sup |⟨⊗ᵢ xᵢ x̃ᵢ | φ⟩|²` over unit `xᵢ`, where `x̃ᵢ` is `xᵢ*` or `xᵢ` per
/// `tie`. The state is `n` pairs of local dimension `d` in cut order.
pub fn fit_paired_product(state: &PureState, n: usize, d: usize, tie: PairTie) -> Result<PairedProductFit> {
    check_cut_order(state, n, d)?;
    let amps = state.amplitudes();
    let mut starts: Vec<Vec<ComplexVector>> = Vec::new();
    // Structured start: dominant direction of each pair's reduced operator.
    let uniform = vec![ComplexVector::from_element(d, c64(1.0 / (d as f64).sqrt(), 0.0)); n];
    let mut guess = uniform.clone();
    for i in 0..n {
        let right: Vec<ComplexVector> = guess.iter().map(|v| tied(v, tie)).collect();
        let m = contract_pairs(amps, n, d, &guess, &right, i);
        guess[i] = sorted_svd(&m).u.column(0).into_owned();
    }
    starts.push(guess);
    starts.push(uniform);
    let mut rng = stream_rng(0, module_id::FIT, 0);
    for _ in 0..RANDOM_STARTS {
        starts.push((0..n).map(|_| haar_vector(&mut rng, d)).collect());
    }
    let mut best: Option<PairedProductFit> = None;
    for s in starts {
        let f = sweep_from(amps, n, d, s, tie);
        if best.as_ref().is_none_or(|b| f.fidelity > b.fidelity) {
            best = Some(f);
        }
    }
    Ok(best.expect("at least one start"))
}

#[derive(Clone, Debug)]
pub struct ProductOfCutsFit {
    pub fidelity: f64,
    pub x: ComplexVector,
    pub y: ComplexVector,
    /// `d×d` coefficient matrix of the `A'B'` factor (unit Frobenius norm).
    pub phi2: ComplexMatrix,
}

/// `sup |⟨x_A y_B φ₂^{A'B'} | φ⟩|²` over unit `x, y` and unit `φ₂` of
/// Schmidt rank at most `rank`, for a two-pair state in cut order.
pub fn fit_product_of_cuts(state: &PureState, d: usize, rank: usize) -> Result<ProductOfCutsFit> {
    check_cut_order(state, 2, d)?;
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    let amps = state.amplitudes();
    // t(a, a', b, b') at flat index ((a·d + a')·d + b)·d + b'
    let at = |a: usize, ap: usize, b: usize, bp: usize| amps[((a * d + ap) * d + b) * d + bp];

    let given_xy = |x: &ComplexVector, y: &ComplexVector| -> (f64, ComplexMatrix) {
        let n = ComplexMatrix::from_fn(d, d, |ap, bp| {
            let mut s = C64::new(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    s += x[a].conj() * y[b].conj() * at(a, ap, b, bp);
                }
            }
            s
        });
        let svd = sorted_svd(&n);
        let k = rank.min(d);
        let weight: f64 = svd.values[..k].iter().map(|s| s * s).sum();
        let mut f = ComplexMatrix::zeros(d, d);
        for i in 0..k {
            f += svd.u.column(i) * svd.v.column(i).adjoint() * c64(svd.values[i], 0.0);
        }
        let norm = f.norm();
        if norm > 0.0 {
            f /= c64(norm, 0.0);
        }
        (weight, f)
    };
    let given_phi2 = |f: &ComplexMatrix| -> (f64, ComplexVector, ComplexVector) {
        let m = ComplexMatrix::from_fn(d, d, |a, b| {
            let mut s = C64::new(0.0, 0.0);
            for ap in 0..d {
                for bp in 0..d {
                    s += f[(ap, bp)].conj() * at(a, ap, b, bp);
                }
            }
            s
        });
        let svd = sorted_svd(&m);
        let x = svd.u.column(0).into_owned();
        let y = svd.v.column(0).map(|z| z.conj());
        (svd.values[0] * svd.values[0], x, y)
    };

    // Structured start: dominant AB-part across the AB : A'B' split.
    let ab = ComplexMatrix::from_fn(d * d, d * d, |r, c| at(r / d, c / d, r % d, c % d));
    let top = sorted_svd(&ab).u.column(0).into_owned();
    let top_m = ComplexMatrix::from_fn(d, d, |a, b| top[a * d + b]);
    let svd = sorted_svd(&top_m);
    let mut starts = vec![(svd.u.column(0).into_owned(), svd.v.column(0).map(|z| z.conj()))];
    let mut rng = stream_rng(1, module_id::FIT, 0);
    for _ in 0..RANDOM_STARTS {
        starts.push((haar_vector(&mut rng, d), haar_vector(&mut rng, d)));
    }

    let mut best: Option<ProductOfCutsFit> = None;
    for (mut x, mut y) in starts {
        let (mut val, mut f) = given_xy(&x, &y);
        for _ in 0..SWEEP_LIMIT {
            let (_, nx, ny) = given_phi2(&f);
            x = nx;
            y = ny;
            let (nv, nf) = given_xy(&x, &y);
            f = nf;
            let gain = nv - val;
            val = nv.max(val);
            if gain < SWEEP_TOL {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| val > b.fidelity) {
            best = Some(ProductOfCutsFit { fidelity: val, x, y, phi2: f });
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{haar_unitary, stream_rng};
    use crate::tensor::{kron_vec, kron_vec_all, reorder_subsystems};
    use crate::projectors::pair_to_cut_permutation;

    fn paired_state(vs: &[ComplexVector], tie: PairTie) -> PureState {
        let n = vs.len();
        let d = vs[0].len();
        let parts: Vec<ComplexVector> = vs.iter().map(|v| kron_vec(v, &tied(v, tie))).collect();
        let refs: Vec<&ComplexVector> = parts.iter().collect();
        let pair_order = PureState::new(vec![d; 2 * n], kron_vec_all(&refs)).unwrap();
        reorder_subsystems(&pair_order, &pair_to_cut_permutation(n)).unwrap()
    }

    #[test]
    fn numerical_radius_of_normal_matrix_is_spectral_radius() {
        let mut rng = stream_rng(41, 0, 0);
        let u = haar_unitary(&mut rng, 4);
        let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
            c64(0.3, 0.4),
            c64(-0.9, 0.1),
            c64(0.2, 0.0),
            c64(0.0, -0.5),
        ]));
        let w = &u * diag * u.adjoint();
        let (r, v) = numerical_radius(&w);
        assert!((r - (0.81f64 + 0.01).sqrt()).abs() < 1e-10);
        assert!((v.dotc(&(&w * &v)).norm() - r).abs() < 1e-12);
    }

    #[test]
    fn numerical_radius_of_nilpotent_is_half_norm() {
        let mut w = ComplexMatrix::zeros(2, 2);
        w[(0, 1)] = c64(1.0, 0.0);
        assert!((numerical_radius(&w).0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn takagi_matches_symmetric_singular_value() {
        let mut rng = stream_rng(42, 0, 0);
        let v = haar_vector(&mut rng, 16);
        let s = ComplexMatrix::from_fn(4, 4, |r, c| v[r * 4 + c]);
        let sym = (&s + s.transpose()) * c64(0.5, 0.0);
        let (val, z) = takagi_max(&s);
        assert!((val - sorted_svd(&sym).values[0]).abs() < 1e-10);
        assert!(((z.transpose() * &s * &z)[(0, 0)].norm() - val).abs() < 1e-12);
    }

    #[test]
    fn recovers_exact_paired_products() {
        let mut rng = stream_rng(43, 0, 0);
        for tie in [PairTie::Conjugate, PairTie::Equal] {
            for n in 1..=3 {
                let vs: Vec<ComplexVector> = (0..n).map(|_| haar_vector(&mut rng, 4)).collect();
                let fit = fit_paired_product(&paired_state(&vs, tie), n, 4, tie).unwrap();
                assert!((fit.fidelity - 1.0).abs() < 1e-9, "{tie:?} n={n}: {}", fit.fidelity);
            }
        }
    }

    #[test]
    fn product_of_cuts_bounds() {
        let mut rng = stream_rng(44, 0, 0);
        let s = PureState::two_pair(3, haar_vector(&mut rng, 81)).unwrap();
        let f1 = fit_product_of_cuts(&s, 3, 1).unwrap();
        let f3 = fit_product_of_cuts(&s, 3, 3).unwrap();
        assert!(f1.fidelity <= f3.fidelity + 1e-12);
        assert!(f3.fidelity <= 1.0 + 1e-12);
    }
}
