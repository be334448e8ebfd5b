//! Maximizing `⟨φ|P|φ⟩` over states of bounded Schmidt rank.
//!
//! The search is a seesaw. From a rank-`k` state `φ` it moves to
//! `ψ = Pφ/‖Pφ‖`, the closest point of the range of `P`, and then back to the
//! best rank-`k` approximation of `ψ` (its top-`k` Schmidt truncation). For a
//! projector `⟨φ'|P|φ'⟩ ≥ |⟨φ'|ψ⟩|² ≥ |⟨φ|ψ⟩|² = ⟨φ|P|φ⟩`, so the objective
//! never decreases. Each restart owns a random stream, restarts run on the rayon
//! pool and the best value wins, with ties going to the lowest restart index.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_product_of_cuts;
use crate::projectors::pair_to_cut_permutation;
use crate::rng::{haar_vector, module_id, stream_rng};
use crate::tensor::{
    c64, kron_vec, psi_plus, reorder_subsystems, sorted_svd, ComplexMatrix,
    ComplexVector, Cut, CutReshaper, LinearOperator, PureState, C64, ZERO_TOL, max_abs_diff_vec,
};

/// Imaginary part tolerated when a real expectation value is requested.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `⟨φ|Op|φ⟩` as a complex number.
pub fn overlap_complex<O: LinearOperator + ?Sized>(state: &PureState, op: &O) -> Result<C64> {
    let v = state.amplitudes();
    if v.len() != op.dim() {
        return Err(Error::Dimension(format!(
            "state of length {} against operator of side {}",
            v.len(),
            op.dim()
        )));
    }
    Ok(v.dotc(&op.apply(v)))
}

/// `⟨φ|Op|φ⟩` for a Hermitian operator. A nonzero imaginary part beyond
/// [`HERMITIAN_TOL`] is reported as [`Error::NotHermitian`].
pub fn overlap<O: LinearOperator + ?Sized>(state: &PureState, op: &O) -> Result<f64> {
    let z = overlap_complex(state, op)?;
    if z.im.abs() > HERMITIAN_TOL {
        return Err(Error::NotHermitian { residue: z.im.abs() });
    }
    Ok(z.re)
}

/// Σᵢ cᵢ|aᵢ⟩|bᵢ⟩ across a fixed cut.
#[derive(Clone, Debug)]
pub struct RankKState {
    pub k: usize,
    pub coefficients: Vec<C64>,
    pub left_vectors: Vec<ComplexVector>,
    pub right_vectors: Vec<ComplexVector>,
    dims: Vec<usize>,
    cut: Cut,
}

impl RankKState {
    /// Best rank-`k` approximation of `state` across `cut`, renormalized.
    pub fn truncate(state: &PureState, cut: &Cut, k: usize) -> Result<Self> {
        let reshaper = CutReshaper::new(state.dims(), cut)?;
        let (st, _) = truncate_matrix(&reshaper.to_matrix(state.amplitudes()), k)?;
        Ok(Self {
            k,
            coefficients: st.values.iter().map(|&s| c64(s, 0.0)).collect(),
            left_vectors: st.left,
            right_vectors: st.right,
            dims: state.dims().to_vec(),
            cut: cut.clone(),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cut(&self) -> &Cut {
        &self.cut
    }

    pub fn to_pure_state(&self) -> Result<PureState> {
        let reshaper = CutReshaper::new(&self.dims, &self.cut)?;
        let mut m = ComplexMatrix::zeros(reshaper.rows(), reshaper.cols());
        for ((c, a), b) in self.coefficients.iter().zip(&self.left_vectors).zip(&self.right_vectors) {
            m += a * b.transpose() * *c;
        }
        PureState::new(self.dims.clone(), reshaper.to_vector(&m))
    }
}

struct Truncation {
    values: Vec<f64>,
    left: Vec<ComplexVector>,
    right: Vec<ComplexVector>,
}

/// Top-`k` singular triplets, normalized so Σσᵢ² = 1. The flag reports a
/// degenerate cut-off `σ_k ≈ σ_{k+1}`.
fn truncate_matrix(m: &ComplexMatrix, k: usize) -> Result<(Truncation, bool)> {
    if k == 0 {
        return Err(Error::InvalidParameter("Schmidt rank bound k must be at least 1".into()));
    }
    let svd = sorted_svd(m);
    let kk = k.min(svd.values.len());
    let norm = svd.values[..kk].iter().map(|s| s * s).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("cannot truncate the zero vector".into()));
    }
    let degenerate = kk < svd.values.len()
        && svd.values[kk - 1] > ZERO_TOL
        && (svd.values[kk - 1] - svd.values[kk]).abs() <= 1e-12 * svd.values[0];
    Ok((
        Truncation {
            values: svd.values[..kk].iter().map(|s| s / norm).collect(),
            left: (0..kk).map(|i| svd.u.column(i).into_owned()).collect(),
            right: (0..kk).map(|i| svd.v.column(i).map(|z| z.conj())).collect(),
        },
        degenerate,
    ))
}

fn truncation_to_matrix(t: &Truncation, rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for ((s, a), b) in t.values.iter().zip(&t.left).zip(&t.right) {
        m += a * b.transpose() * c64(*s, 0.0);
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once an iteration gains less than this.
    pub tolerance: f64,
    pub seed: u64,
    /// Keep the per-iteration objective of every restart.
    pub record_trace: bool,
    /// Run restarts on the rayon pool.
    pub parallel: bool,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iterations: 10_000,
            tolerance: 1e-12,
            seed: 0,
            record_trace: false,
            parallel: true,
        }
    }
}

impl SeesawConfig {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub reseeds: usize,
    pub degenerate_truncations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationReport {
    pub best_value: f64,
    pub best_restart: usize,
    #[serde(skip)]
    pub best_state: RankKState,
    pub rank: usize,
    pub restarts: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: Vec<usize>,
    pub outcomes: Vec<RestartOutcome>,
}

impl OptimizationReport {
    pub fn best_pure_state(&self) -> PureState {
        self.best_state.to_pure_state().expect("report state has consistent dims")
    }
}

/// Cheap randomized check that `op` is a Hermitian idempotent.
pub fn projector_probe<O: LinearOperator + ?Sized>(op: &O, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, module_id::SEESAW, u64::MAX);
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let v = haar_vector(&mut rng, op.dim());
        let w = haar_vector(&mut rng, op.dim());
        let pv = op.apply(&v);
        let ppv = op.apply(&pv);
        worst = worst.max(max_abs_diff_vec(&ppv, &pv));
        worst = worst.max((w.dotc(&pv) - op.apply(&w).dotc(&v)).norm());
    }
    worst
}

struct RestartResult {
    outcome: RestartOutcome,
    state: Truncation,
}

fn random_rank_k<R: Rng>(rng: &mut R, rows: usize, cols: usize, k: usize) -> ComplexMatrix {
    let c = haar_vector(rng, k);
    let mut m = ComplexMatrix::zeros(rows, cols);
    for ci in c.iter() {
        let a = haar_vector(rng, rows);
        let b = haar_vector(rng, cols);
        m += a * b.transpose() * *ci;
    }
    m
}

fn run_restart<O: LinearOperator + ?Sized>(
    op: &O,
    reshaper: &CutReshaper,
    k: usize,
    config: &SeesawConfig,
    index: usize,
) -> Result<RestartResult> {
    let mut rng = stream_rng(config.seed, module_id::SEESAW, index as u64);
    let (rows, cols) = (reshaper.rows(), reshaper.cols());
    let mut reseeds = 0;
    let (mut phi_t, mut pphi) = loop {
        let m = random_rank_k(&mut rng, rows, cols, k);
        let (t, _) = truncate_matrix(&m, k)?;
        let phi = reshaper.to_vector(&truncation_to_matrix(&t, rows, cols));
        let pphi = op.apply(&phi);
        if pphi.norm() > 1e-12 {
            break (t, (phi, pphi));
        }
        reseeds += 1;
        if reseeds > 1000 {
            return Err(Error::InvalidParameter("operator annihilates every random start".into()));
        }
    };
    let mut value = pphi.0.dotc(&pphi.1).re;
    let mut trace = if config.record_trace { vec![value] } else { Vec::new() };
    let mut degenerate = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let psi = &pphi.1;
        let (t, deg) = truncate_matrix(&reshaper.to_matrix(psi), k)?;
        degenerate += deg as usize;
        let phi = reshaper.to_vector(&truncation_to_matrix(&t, rows, cols));
        let p_new = op.apply(&phi);
        let new_value = phi.dotc(&p_new).re;
        if config.record_trace {
            trace.push(new_value);
        }
        let gain = new_value - value;
        if new_value >= value {
            phi_t = t;
            pphi = (phi, p_new);
            value = new_value;
        }
        if gain < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(RestartResult {
        outcome: RestartOutcome {
            index,
            value,
            iterations,
            converged,
            reseeds,
            degenerate_truncations: degenerate,
            trace,
        },
        state: phi_t,
    })
}

/// Seesaw search for `sup ⟨φ|op|φ⟩` over states of Schmidt rank at most `k`
/// across `cut` of a system with local dimensions `dims`.
pub fn max_overlap_rank_k<O: LinearOperator + ?Sized>(
    op: &O,
    dims: &[usize],
    cut: &Cut,
    k: usize,
    config: &SeesawConfig,
) -> Result<OptimizationReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("Schmidt rank bound k must be at least 1".into()));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    if dims.iter().product::<usize>() != op.dim() {
        return Err(Error::Dimension(format!(
            "dims {dims:?} do not match operator side {}",
            op.dim()
        )));
    }
    let residue = projector_probe(op, config.seed);
    if residue > 1e-10 {
        return Err(Error::NotProjector { residue });
    }
    let reshaper = CutReshaper::new(dims, cut)?;
    let run = |i: usize| run_restart(op, &reshaper, k, config, i);
    let results: Vec<RestartResult> = if config.parallel {
        (0..config.restarts).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..config.restarts).map(run).collect::<Result<_>>()?
    };
    let best = results
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.outcome.value > results[b].outcome.value { i } else { b });
    let best_trunc = &results[best].state;
    let best_state = RankKState {
        k,
        coefficients: best_trunc.values.iter().map(|&s| c64(s, 0.0)).collect(),
        left_vectors: best_trunc.left.clone(),
        right_vectors: best_trunc.right.clone(),
        dims: dims.to_vec(),
        cut: cut.clone(),
    };
    Ok(OptimizationReport {
        best_value: results[best].outcome.value,
        best_restart: best,
        best_state,
        rank: k,
        restarts: config.restarts,
        seed: config.seed,
        converged: results[best].outcome.converged,
        iterations: results.iter().map(|r| r.outcome.iterations).collect(),
        outcomes: results.into_iter().map(|r| r.outcome).collect(),
    })
}

/// Two-pair state in cut order `(A, A', B, B')` from a pair-`AB` vector and a
/// pair-`A'B'` vector.
pub fn pair_product_state(phi_ab: &ComplexVector, phi_apbp: &ComplexVector, d: usize) -> Result<PureState> {
    if phi_ab.len() != d * d || phi_apbp.len() != d * d {
        return Err(Error::Dimension(format!("pair vectors must have length {}", d * d)));
    }
    let pair_order = PureState::new(vec![d; 4], kron_vec(phi_ab, phi_apbp))?;
    let cut_order = reorder_subsystems(&pair_order, &pair_to_cut_permutation(2))?;
    PureState::two_pair(d, cut_order.into_amplitudes())
}

/// Two-pair state in cut order from amplitudes written in pair order
/// `(A, B, A', B')`.
pub fn two_pair_from_pair_order(amplitudes: ComplexVector, d: usize) -> Result<PureState> {
    let pair_order = PureState::new(vec![d; 4], amplitudes)?;
    let cut_order = reorder_subsystems(&pair_order, &pair_to_cut_permutation(2))?;
    PureState::two_pair(d, cut_order.into_amplitudes())
}

/// `(|00⟩ + |11⟩)/√2` embedded in `C^d⊗C^d`.
pub fn psi_plus_two_levels(d: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d * d);
    let a = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = c64(a, 0.0);
    v[d + 1] = c64(a, 0.0);
    v
}

/// `|e_i e_j⟩` in `C^d⊗C^d`.
pub fn basis_pair(d: usize, i: usize, j: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d * d);
    v[i * d + j] = c64(1.0, 0.0);
    v
}

/// `√r|01⟩|ψ₊²⟩ + √(1-r)|ψ₊²⟩|01⟩` on two pairs of ququarts: Schmidt rank two
/// across `AA':BB'` with overlap exactly 1/2 on `Q` for every `r ∈ [0, 1]`.
pub fn equality_state(r: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("r = {r} is outside [0, 1]")));
    }
    let d = 4;
    let e01 = basis_pair(d, 0, 1);
    let pp = psi_plus_two_levels(d);
    let v = kron_vec(&e01, &pp) * c64(r.sqrt(), 0.0) + kron_vec(&pp, &e01) * c64((1.0 - r).sqrt(), 0.0);
    two_pair_from_pair_order(v, d)
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximizerFormReport {
    pub value: f64,
    /// Fidelity with the nearest `|x⟩_A|y⟩_B ⊗ φ₂^{A'B'}`, φ₂ of rank ≤ 2.
    pub fidelity: f64,
    pub matches_form: bool,
    pub value_is_maximal: bool,
}

/// Checks that a maximizer of `I⊗P₊` is a product of an `AB` product state and
/// an `A'B'` rank-two state.
pub fn verify_ip_maximizer_form(report: &OptimizationReport, d: usize) -> Result<MaximizerFormReport> {
    let state = report.best_pure_state();
    let fit = fit_product_of_cuts(&state, d, 2)?;
    Ok(MaximizerFormReport {
        value: report.best_value,
        fidelity: fit.fidelity,
        matches_form: fit.fidelity >= 1.0 - 1e-6,
        value_is_maximal: (report.best_value - 2.0 / d as f64).abs() <= 1e-6,
    })
}

/// `I⊗P₊` on two pairs, cut order.
pub fn identity_tensor_p_plus(d: usize) -> Result<ComplexMatrix> {
    let ops = crate::tensor::standard_ops(d)?;
    let word = crate::tensor::tensor_product(&ops.identity, &ops.p_plus)?;
    crate::projectors::pair_order_to_cut_order(&word, d, 2)
}

/// The analytic maximizer `|x⟩|y⟩ ⊗ ψ₊²` of `I⊗P₊` used as a reference.
pub fn ip_reference_maximizer<R: Rng>(rng: &mut R, d: usize) -> Result<PureState> {
    let x = haar_vector(rng, d);
    let y = haar_vector(rng, d);
    pair_product_state(&kron_vec(&x, &y), &psi_plus_two_levels(d), d)
}

/// Random two-pair state whose cut-`AA':BB'` Schmidt rank is at most `k`.
pub fn random_rank_k_two_pair<R: Rng>(rng: &mut R, d: usize, k: usize) -> Result<PureState> {
    let m = random_rank_k(rng, d * d, d * d, k);
    let v = ComplexVector::from_fn(d.pow(4), |i, _| m[(i / (d * d), i % (d * d))]);
    let n = v.norm();
    PureState::two_pair(d, v.unscale(n))
}

/// `|ψ₊⟩` on one pair as a state vector.
pub fn psi_plus_state(d: usize) -> Result<PureState> {
    PureState::new(vec![d, d], psi_plus(d))
}
