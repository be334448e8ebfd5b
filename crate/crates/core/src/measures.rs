//! Entanglement-measure arguments on the twirled two-parameter family.
//!
//! Twirling a two-pair state with `U⊗U*` on each pair and a random swap of
//! the pairs leaves
//! `σ = (p/2)(P_ort⊗P₊ + P₊⊗P_ort) + s P₊⊗P₊ + (1-p-s) P_ort⊗P_ort`, with
//! `P_ort = (I - P₊)/(d² - 1)`. Since `tr σQ = p = ⟨φ|Q|φ⟩`, any bound on `p`
//! for twirled states of Schmidt number two is a bound on the overlap.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projectors::{pair_order_to_cut_order, q_two_pair};
use crate::rng::{haar_vector, module_id, stream_rng};
use crate::sropt::{equality_state, max_overlap_rank_k, overlap, random_rank_k_two_pair, SeesawConfig};
use crate::tensor::{
    c64, hermitian_eigenvalues, hermiticity_residual, kron_vec, partial_trace, partial_transpose, schmidt,
    standard_ops, tensor_product, trace, trace_norm_hermitian, ComplexMatrix, Cut, PureState,
};

const WEIGHT_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-9;

/// A point of the twirled family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsotropicTwoPairState {
    pub d: usize,
    /// Weight of `(P_ort⊗P₊ + P₊⊗P_ort)/2`, equal to `tr σQ`.
    pub p: f64,
    /// Weight of `P₊⊗P₊`.
    pub s: f64,
}

impl IsotropicTwoPairState {
    pub fn new(d: usize, p: f64, s: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("local dimension {d} is below 2")));
        }
        if !(p >= -WEIGHT_TOL && s >= -WEIGHT_TOL && p + s <= 1.0 + WEIGHT_TOL) {
            return Err(Error::InvalidParameter(format!("(p, s) = ({p}, {s}) is outside the simplex")));
        }
        Ok(Self { d, p: p.max(0.0), s: s.max(0.0) })
    }

    /// Weight of `P_ort⊗P_ort`.
    pub fn rest(&self) -> f64 {
        (1.0 - self.p - self.s).max(0.0)
    }

    /// Density matrix in cut order `(A, A', B, B')`.
    pub fn assemble(&self) -> Result<ComplexMatrix> {
        let w = PairWeights::projectors(self.d)?;
        let m = &w.plus_orth * c64(self.p / 2.0 / w.orth_rank, 0.0)
            + &w.orth_plus * c64(self.p / 2.0 / w.orth_rank, 0.0)
            + &w.plus_plus * c64(self.s, 0.0)
            + &w.orth_orth * c64(self.rest() / (w.orth_rank * w.orth_rank), 0.0);
        Ok(m)
    }
}

/// The four products of `P₊` and `I - P₊` on two pairs (unnormalized), cut
/// order.
struct PairWeights {
    plus_plus: ComplexMatrix,
    plus_orth: ComplexMatrix,
    orth_plus: ComplexMatrix,
    orth_orth: ComplexMatrix,
    orth_rank: f64,
}

impl PairWeights {
    fn projectors(d: usize) -> Result<Self> {
        let ops = standard_ops(d)?;
        let to_cut = |a: &ComplexMatrix, b: &ComplexMatrix| -> Result<ComplexMatrix> {
            pair_order_to_cut_order(&tensor_product(a, b)?, d, 2)
        };
        Ok(Self {
            plus_plus: to_cut(&ops.p_plus, &ops.p_plus)?,
            plus_orth: to_cut(&ops.p_plus, &ops.p_orth)?,
            orth_plus: to_cut(&ops.p_orth, &ops.p_plus)?,
            orth_orth: to_cut(&ops.p_orth, &ops.p_orth)?,
            orth_rank: (d * d - 1) as f64,
        })
    }
}

fn two_pair_side(dim: usize) -> Result<usize> {
    let d = (dim as f64).powf(0.25).round() as usize;
    if d.pow(4) != dim || d < 2 {
        return Err(Error::Dimension(format!("side {dim} is not d⁴ for a local dimension d >= 2")));
    }
    Ok(d)
}

/// Projects a two-pair density matrix (cut order) onto the twirled family.
/// The weights `tr ρ(P₊⊗P₊)` and `tr ρ(P₊⊗O + O⊗P₊)` are kept exactly.
pub fn twirl(rho: &ComplexMatrix) -> Result<IsotropicTwoPairState> {
    if !rho.is_square() {
        return Err(Error::NotDensity("matrix is not square".into()));
    }
    let d = two_pair_side(rho.nrows())?;
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(Error::NotDensity(format!("trace is {tr}")));
    }
    let herm = hermiticity_residual(rho);
    if herm > DENSITY_TOL {
        return Err(Error::NotDensity(format!("Hermiticity residual {herm:e}")));
    }
    let min = hermitian_eigenvalues(rho)[0];
    if min < -DENSITY_TOL {
        return Err(Error::NotDensity(format!("eigenvalue {min:e} is negative")));
    }
    let w = PairWeights::projectors(d)?;
    let weight = |m: &ComplexMatrix| rho.component_mul(&m.transpose()).sum().re;
    let s = weight(&w.plus_plus);
    let p = weight(&w.plus_orth) + weight(&w.orth_plus);
    IsotropicTwoPairState::new(d, p.clamp(0.0, 1.0), s.clamp(0.0, 1.0 - p.clamp(0.0, 1.0)))
}

/// Twirl of a pure state, computed from expectation values.
pub fn twirl_state(phi: &PureState) -> Result<IsotropicTwoPairState> {
    let d = two_pair_side(phi.amplitudes().len())?;
    let phi = phi.normalized()?;
    let w = PairWeights::projectors(d)?;
    let s = overlap(&phi, &w.plus_plus)?;
    let p = overlap(&phi, &w.plus_orth)? + overlap(&phi, &w.orth_plus)?;
    IsotropicTwoPairState::new(d, p, s)
}

/// `‖σ^Γ‖₁ = ¼(2|1 - 16s| + |1 + 8s - 4p| + 1 + 24s + 4p)` for ququarts.
pub fn negativity_sigma(state: &IsotropicTwoPairState) -> Result<f64> {
    if state.d != 4 {
        return Err(Error::UnsupportedDimension { d: state.d, reason: "the closed form is for ququarts" });
    }
    let (p, s) = (state.p, state.s);
    Ok(0.25 * (2.0 * (1.0 - 16.0 * s).abs() + (1.0 + 8.0 * s - 4.0 * p).abs() + 1.0 + 24.0 * s + 4.0 * p))
}

/// Trace norm of the partial transpose across `AA':BB'` of any two-pair
/// density matrix in cut order.
pub fn gamma_trace_norm(rho: &ComplexMatrix) -> Result<f64> {
    let d = two_pair_side(rho.nrows())?;
    Ok(trace_norm_hermitian(&partial_transpose(rho, &[d; 4], &[2, 3])?))
}

pub fn negativity_sigma_dense(state: &IsotropicTwoPairState) -> Result<f64> {
    gamma_trace_norm(&state.assemble()?)
}

/// `‖φ^Γ‖₁ = (a + b)²` for Schmidt coefficients `a, b`.
pub fn negativity_pure_rank2(a: f64, b: f64) -> Result<f64> {
    if a < 0.0 || b < 0.0 || (a * a + b * b - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("({a}, {b}) are not Schmidt coefficients of a unit vector")));
    }
    Ok((a + b) * (a + b))
}

/// Top two Schmidt coefficients across `AA':BB'` of a two-pair state.
pub fn rank2_coefficients(phi: &PureState) -> Result<(f64, f64)> {
    let sd = schmidt(&phi.normalized()?, &Cut::two_pair())?;
    if sd.coefficients.get(2).copied().unwrap_or(0.0) > 1e-9 {
        return Err(Error::InvalidParameter("state has Schmidt rank above two across AA':BB'".into()));
    }
    Ok((sd.coefficients[0], sd.coefficients.get(1).copied().unwrap_or(0.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub a: f64,
    pub b: f64,
    /// `tr σQ` of the twirled state, equal to `⟨φ|Q|φ⟩`.
    pub p: f64,
    /// `⟨φ|P₊⊗P₊|φ⟩`
    pub s: f64,
    /// `¼ - 6s + 2(a+b)²`
    pub stated_bound: f64,
    /// `¼ - 6s + ½(a+b)²`, the linear bound implied by the closed form.
    pub linear_bound: f64,
    /// Largest `p' ≤ 1 - s` with `‖σ(p', s)^Γ‖₁ ≤ (a+b)²`.
    pub exact_bound: f64,
    /// `(a+b)²/16`, the largest possible `s` at these coefficients.
    pub plus_plus_cap: f64,
    pub holds: bool,
}

/// Consequences of `‖σ^Γ‖₁ ≤ ‖φ^Γ‖₁` for a Schmidt-rank-two state.
pub fn monotonicity_bound(phi2: &PureState) -> Result<MonotonicityReport> {
    let (a, b) = rank2_coefficients(phi2)?;
    let t = twirl_state(phi2)?;
    if t.d != 4 {
        return Err(Error::UnsupportedDimension { d: t.d, reason: "the closed-form negativity is for ququarts" });
    }
    let budget = (a + b) * (a + b);
    let (p, s) = (t.p, t.s);
    let neg = |pp: f64| negativity_sigma(&IsotropicTwoPairState { d: 4, p: pp, s }).expect("d = 4");
    // ‖σ^Γ‖ is non-decreasing in p at fixed s.
    let top = (1.0 - s).max(0.0);
    let exact_bound = if neg(top) <= budget {
        top
    } else {
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if neg(mid) <= budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let stated_bound = 0.25 - 6.0 * s + 2.0 * budget;
    let linear_bound = 0.25 - 6.0 * s + 0.5 * budget;
    let plus_plus_cap = budget / 16.0;
    let slack = 1e-9;
    Ok(MonotonicityReport {
        a,
        b,
        p,
        s,
        stated_bound,
        linear_bound,
        exact_bound,
        plus_plus_cap,
        holds: p <= stated_bound + slack && p <= linear_bound + slack && p <= exact_bound + slack && s <= plus_plus_cap + slack,
    })
}

/// `(id ⊗ Λ)(X)` with `Λ(Y) = I·tr Y - Y/2` acting on `BB'`.
pub fn apply_witness_map(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = two_pair_side(x.nrows())?;
    let reduced = partial_trace(x, &[d; 4], &[2, 3])?;
    let id = ComplexMatrix::identity(d * d, d * d);
    Ok(tensor_product(&reduced, &id)? - x * c64(0.5, 0.0))
}

/// Minimum eigenvalue of `(id⊗Λ)σ`; negative values certify Schmidt number
/// above two.
pub fn two_positive_witness(state: &IsotropicTwoPairState) -> Result<f64> {
    Ok(hermitian_eigenvalues(&apply_witness_map(&state.assemble()?)?)[0])
}

/// Closed form of [`two_positive_witness`]: the reduced state on `AA'` is
/// maximally mixed, so `(id⊗Λ)σ = I/d² - σ/2` and the minimum is
/// `1/d² - ½·max(s, p/(2(d²-1)), (1-p-s)/(d²-1)²)`.
pub fn two_positive_witness_closed(state: &IsotropicTwoPairState) -> f64 {
    let r = (state.d * state.d - 1) as f64;
    let top = state.s.max(state.p / (2.0 * r)).max(state.rest() / (r * r));
    1.0 / (state.d * state.d) as f64 - 0.5 * top
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessScanRow {
    pub p: f64,
    /// Minimum over the `s` grid.
    pub min_eigenvalue: f64,
    /// Minimum at `s = 0`.
    pub at_s_zero: f64,
    pub detects_for_all_s: bool,
    pub detects_for_some_s: bool,
}

/// Witness eigenvalues for each `p` over an `s` grid on `[0, 1 - p]`.
pub fn witness_scan(ps: &[f64], s_steps: usize) -> Result<Vec<WitnessScanRow>> {
    ps.par_iter()
        .map(|&p| {
            let mut vals = Vec::with_capacity(s_steps + 1);
            for j in 0..=s_steps {
                let s = (1.0 - p) * j as f64 / s_steps as f64;
                vals.push(two_positive_witness(&IsotropicTwoPairState::new(4, p, s)?)?);
            }
            Ok(WitnessScanRow {
                p,
                min_eigenvalue: vals.iter().copied().fold(f64::INFINITY, f64::min),
                at_s_zero: vals[0],
                detects_for_all_s: vals.iter().all(|&v| v < 0.0),
                detects_for_some_s: vals.iter().any(|&v| v < 0.0),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GridPoint {
    pub p: f64,
    pub s: f64,
    pub closed_form: f64,
    pub dense: f64,
    pub trace_q: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NegativityGrid {
    pub steps: usize,
    pub max_negativity_error: f64,
    pub max_trace_q_error: f64,
    pub points: Vec<GridPoint>,
}

/// `steps × steps` points `p = i/(steps-1)`, `s = (1-p)·j/(steps-1)`,
/// comparing the closed-form negativity with a dense trace norm and checking
/// `tr σQ = p`.
pub fn negativity_grid(steps: usize) -> Result<NegativityGrid> {
    if steps < 2 {
        return Err(Error::InvalidParameter("the grid needs at least two steps per axis".into()));
    }
    let q = q_two_pair(4)?;
    let points: Vec<GridPoint> = (0..steps * steps)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / steps, k % steps);
            let p = i as f64 / (steps - 1) as f64;
            let s = (1.0 - p) * j as f64 / (steps - 1) as f64;
            let st = IsotropicTwoPairState::new(4, p, s)?;
            let sigma = st.assemble()?;
            Ok(GridPoint {
                p,
                s,
                closed_form: negativity_sigma(&st)?,
                dense: gamma_trace_norm(&sigma)?,
                trace_q: trace(&(&sigma * &q)).re,
            })
        })
        .collect::<Result<_>>()?;
    let max_negativity_error = points.iter().map(|g| (g.closed_form - g.dense).abs()).fold(0.0, f64::max);
    let max_trace_q_error = points.iter().map(|g| (g.trace_q - g.p).abs()).fold(0.0, f64::max);
    Ok(NegativityGrid { steps, max_negativity_error, max_trace_q_error, points })
}

#[derive(Clone, Debug, Serialize)]
pub struct FactCheck {
    pub equality_state_p: f64,
    pub maximal_product_p: f64,
    pub optimizer_p: f64,
    pub optimizer_overlap: f64,
    pub random_samples: usize,
    /// Largest `|p - ⟨φ|Q|φ⟩|` over every checked state.
    pub max_deviation: f64,
    pub agrees: bool,
}

/// Spot-checks `p(twirl(φ)) = ⟨φ|Q|φ⟩` on the equality state, a maximal
/// product state, an optimizer-found rank-two state and random rank-two
/// states.
pub fn halfp_schmidt_fact_report(samples: usize, restarts: usize, seed: u64) -> Result<FactCheck> {
    let q = q_two_pair(4)?;
    let check = |phi: &PureState| -> Result<(f64, f64)> { Ok((twirl_state(phi)?.p, overlap(phi, &q)?)) };

    let (eq_p, eq_q) = check(&equality_state(0.5)?)?;
    let mut rng = stream_rng(seed, module_id::MEASURES, 0);
    let x = haar_vector(&mut rng, 4);
    let y = haar_vector(&mut rng, 4);
    let prod = crate::bounds::maximal_form_state(&[x, y])?;
    let (mp_p, mp_q) = check(&prod)?;
    let config = SeesawConfig::default().with_restarts(restarts.max(1)).with_seed(seed);
    let report = max_overlap_rank_k(&q, &[4; 4], &Cut::two_pair(), 2, &config)?;
    let (opt_p, opt_q) = check(&report.best_pure_state())?;

    let mut dev = (eq_p - eq_q).abs().max((mp_p - mp_q).abs()).max((opt_p - opt_q).abs());
    for i in 0..samples {
        let mut r = stream_rng(seed, module_id::MEASURES, 1 + i as u64);
        let (p, o) = check(&random_rank_k_two_pair(&mut r, 4, 2)?)?;
        dev = dev.max((p - o).abs());
    }
    Ok(FactCheck {
        equality_state_p: eq_p,
        maximal_product_p: mp_p,
        optimizer_p: opt_p,
        optimizer_overlap: opt_q,
        random_samples: samples,
        max_deviation: dev,
        agrees: dev <= 1e-10,
    })
}

/// `a e₁⊗f₁ + b e₂⊗f₂` across `AA':BB'` with Haar-random orthonormal pairs.
pub fn schmidt_form_state<R: rand::Rng>(rng: &mut R, a: f64, b: f64) -> Result<PureState> {
    let side = 16;
    let e1 = haar_vector(rng, side);
    let e2 = orthonormal(&haar_vector(rng, side), &e1);
    let f1 = haar_vector(rng, side);
    let f2 = orthonormal(&haar_vector(rng, side), &f1);
    let v = kron_vec(&e1, &f1) * c64(a, 0.0) + kron_vec(&e2, &f2) * c64(b, 0.0);
    PureState::two_pair(4, v)
}

fn orthonormal(v: &crate::tensor::ComplexVector, against: &crate::tensor::ComplexVector) -> crate::tensor::ComplexVector {
    (v - against * against.dotc(v)).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certs::local_q_symmetry;
    use crate::rng::haar_unitary;
    use crate::tensor::{max_abs_diff, psi_plus};

    #[test]
    fn assembled_states_are_densities() {
        for (p, s) in [(0.0, 0.0), (0.3, 0.2), (1.0, 0.0), (0.0, 1.0)] {
            let st = IsotropicTwoPairState::new(4, p, s).unwrap();
            let m = st.assemble().unwrap();
            assert!((trace(&m).re - 1.0).abs() < 1e-12);
            let ev = hermitian_eigenvalues(&m);
            assert!(ev[0] > -1e-10, "({p}, {s}): {:?} herm {}", &ev[..3], hermiticity_residual(&m));
        }
        assert!(IsotropicTwoPairState::new(4, 0.7, 0.5).is_err());
        assert!(IsotropicTwoPairState::new(4, -0.1, 0.5).is_err());
    }

    #[test]
    fn twirl_examples() {
        let pp = crate::sropt::two_pair_from_pair_order(kron_vec(&psi_plus(4), &psi_plus(4)), 4).unwrap();
        let t = twirl(&pp.density_matrix()).unwrap();
        assert!((t.p).abs() < 1e-12 && (t.s - 1.0).abs() < 1e-12);
        let e = twirl(&equality_state(0.5).unwrap().density_matrix()).unwrap();
        assert!((e.p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn twirl_rejects_non_densities() {
        let m = ComplexMatrix::identity(256, 256);
        assert!(matches!(twirl(&m), Err(Error::NotDensity(_))));
        let mut rng = stream_rng(91, 0, 0);
        let v = haar_vector(&mut rng, 256);
        let w = haar_vector(&mut rng, 256);
        let bad = (&v * v.adjoint()) * c64(2.0, 0.0) - &w * w.adjoint();
        assert!(matches!(twirl(&bad), Err(Error::NotDensity(_))));
    }

    #[test]
    fn twirled_state_is_invariant_and_idempotent() {
        let mut rng = stream_rng(92, 0, 0);
        let phi = PureState::two_pair(4, haar_vector(&mut rng, 256)).unwrap();
        let t = twirl(&phi.density_matrix()).unwrap();
        let sigma = t.assemble().unwrap();
        for _ in 0..10 {
            let w = local_q_symmetry(&haar_unitary(&mut rng, 4), &haar_unitary(&mut rng, 4)).unwrap();
            assert!(max_abs_diff(&(&w * &sigma * w.adjoint()), &sigma) < 1e-9);
        }
        let again = twirl(&sigma).unwrap();
        assert!((again.p - t.p).abs() < 1e-12 && (again.s - t.s).abs() < 1e-12);
        let q = q_two_pair(4).unwrap();
        assert!((trace(&(&sigma * &q)).re - t.p).abs() < 1e-12);
        let direct = twirl_state(&phi).unwrap();
        assert!((direct.p - t.p).abs() < 1e-12 && (direct.s - t.s).abs() < 1e-12);
    }

    #[test]
    fn negativity_examples() {
        let corner = IsotropicTwoPairState::new(4, 0.0, 0.0).unwrap();
        assert!((negativity_sigma(&corner).unwrap() - 1.0).abs() < 1e-15);
        assert!((negativity_sigma_dense(&corner).unwrap() - 1.0).abs() < 1e-10);
        // P₊⊗P₊ has partial transpose V⊗V/16, trace norm 16.
        let top = IsotropicTwoPairState::new(4, 0.0, 1.0).unwrap();
        assert!((negativity_sigma_dense(&top).unwrap() - 16.0).abs() < 1e-10);
        assert!((negativity_sigma(&top).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn negativity_matches_dense_on_small_grid() {
        let g = negativity_grid(5).unwrap();
        assert!(g.max_negativity_error < 1e-10, "{}", g.max_negativity_error);
        assert!(g.max_trace_q_error < 1e-12);
    }

    #[test]
    fn pure_rank2_negativity() {
        assert_eq!(negativity_pure_rank2(1.0, 0.0).unwrap(), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((negativity_pure_rank2(h, h).unwrap() - 2.0).abs() < 1e-15);
        let mut rng = stream_rng(93, 0, 0);
        for (a, b) in [(h, h), (0.8, 0.6), (1.0, 0.0)] {
            let s = schmidt_form_state(&mut rng, a, b).unwrap();
            let dense = gamma_trace_norm(&s.density_matrix()).unwrap();
            assert!((dense - negativity_pure_rank2(a, b).unwrap()).abs() < 1e-10);
        }
        assert!(negativity_pure_rank2(0.5, 0.5).is_err());
    }

    #[test]
    fn monotonicity_on_random_rank_two_states() {
        let mut rng = stream_rng(94, 0, 0);
        for _ in 0..30 {
            let phi = random_rank_k_two_pair(&mut rng, 4, 2).unwrap();
            let r = monotonicity_bound(&phi).unwrap();
            assert!(r.holds, "{r:?}");
            assert!(r.exact_bound <= r.linear_bound + 1e-12);
        }
    }

    #[test]
    fn positive_c_states_reach_the_plus_plus_cap() {
        let mut rng = stream_rng(95, 0, 0);
        let u = haar_unitary(&mut rng, 16);
        let (a, b) = (0.6, 0.8);
        let phi =
            crate::matrix_iso::positive_c_state(&u.column(0).into_owned(), &u.column(1).into_owned(), a, b, 4).unwrap();
        let r = monotonicity_bound(&phi).unwrap();
        assert!((r.s - r.plus_plus_cap).abs() < 1e-12);
        assert!(r.linear_bound <= 0.5 + 1e-12);
        assert!(r.p <= 0.5 + 1e-12);
        // At (a+b)² = 2 the linear bound is exactly 1/2.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = crate::matrix_iso::positive_c_state(&u.column(2).into_owned(), &u.column(3).into_owned(), h, h, 4).unwrap();
        let r = monotonicity_bound(&phi).unwrap();
        assert!((r.linear_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_to_plus_plus_gives_three_quarters() {
        let phi = equality_state(0.5).unwrap();
        let r = monotonicity_bound(&phi).unwrap();
        assert!(r.s.abs() < 1e-12);
        assert!((r.exact_bound - 0.75).abs() < 1e-9);
        assert!((r.stated_bound - 4.25).abs() < 1e-12);
    }

    #[test]
    fn witness_closed_form_matches_dense() {
        for (p, s) in [(0.5, 0.1), (0.8, 0.2), (0.2, 0.5), (0.0, 0.0)] {
            let st = IsotropicTwoPairState::new(4, p, s).unwrap();
            let dense = two_positive_witness(&st).unwrap();
            assert!((dense - two_positive_witness_closed(&st)).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_map_is_two_positive() {
        let mut rng = stream_rng(96, 0, 0);
        for _ in 0..20 {
            let phi = random_rank_k_two_pair(&mut rng, 4, 2).unwrap();
            let m = apply_witness_map(&phi.density_matrix()).unwrap();
            assert!(hermitian_eigenvalues(&m)[0] >= -1e-9);
        }
        // Schmidt rank three is detected for a maximally correlated state.
        let mut v = crate::tensor::ComplexVector::zeros(256);
        for i in 0..3 {
            v[i * 16 + i] = c64(1.0 / 3f64.sqrt(), 0.0);
        }
        let m = apply_witness_map(&PureState::two_pair(4, v).unwrap().density_matrix()).unwrap();
        assert!(hermitian_eigenvalues(&m)[0] < 0.0);
    }

    #[test]
    fn witness_depends_on_s_only_near_three_quarters() {
        let rows = witness_scan(&[0.70, 0.74, 0.76, 0.80], 10).unwrap();
        for r in &rows {
            assert!(r.at_s_zero > 0.0);
            assert!(r.detects_for_some_s);
        }
    }

    #[test]
    fn fact_check_agrees() {
        let r = halfp_schmidt_fact_report(10, 4, 3).unwrap();
        assert!(r.agrees, "{r:?}");
        assert!((r.equality_state_p - 0.5).abs() < 1e-12);
        assert!((r.maximal_product_p - 0.375).abs() < 1e-12);
    }
}
