//! Upper bounds on `⟨φ|Q|φ⟩` built from product states.
//!
//! Product states reach at most `λ₀ = (1 - 2⁻ⁿ)/2` on `Qₙ` (ququarts), and
//! only in the form `⊗ᵢ|ψᵢ⟩|ψᵢ*⟩`. A Schmidt-rank-two state is a
//! superposition of two orthogonal product states, so its overlap is bounded
//! by `⟨φ₁|Q|φ₁⟩ + |⟨φ₁|Q|φ₁⊥⟩| ≤ 3/4`. This module evaluates the closed forms
//! along that route, checks them against dense linear algebra and runs the
//! quantitative refinement `3/8 + min(γ, f(γ))`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_paired_product, PairTie};
use crate::projectors::{build_qn_recursive, pair_order_to_cut_order, pair_to_cut_permutation, qn_matrix_free, QnOperator};
use crate::rng::{haar_vector, module_id, stream_rng};
use crate::sropt::{max_overlap_rank_k, overlap, SeesawConfig};
use crate::tensor::{
    c64, kron_vec, kron_vec_all, reorder_subsystems, schmidt, standard_ops, tensor_product, ComplexVector, Cut,
    LinearOperator, PureState, C64,
};

/// Local dimension of the bound pipeline.
pub const D: usize = 4;

/// `(1 - (1 - 2/d)ⁿ)/2`, the largest product-state overlap with `Qₙ`.
pub fn lambda0(n: usize, d: usize) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 / d as f64).powi(n as i32))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductMax {
    pub n: usize,
    pub closed_form: f64,
    pub numerical: f64,
    pub restarts: usize,
    pub matrix_free: bool,
    pub confirmed: bool,
}

fn qn_for_search(n: usize) -> Result<QnOperator> {
    build_qn_recursive(n, D)
}

fn first_half_cut(n: usize) -> Result<Cut> {
    Cut::new((0..n).collect(), 2 * n)
}

/// Largest product-state overlap with `Qₙ`, confirmed by a rank-one seesaw.
pub fn product_max(n: usize, restarts: usize, seed: u64) -> Result<ProductMax> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let op = qn_for_search(n)?;
    let config = SeesawConfig::default().with_restarts(restarts).with_seed(seed);
    let report = max_overlap_rank_k(&op, &op.dims(), &first_half_cut(n)?, 1, &config)?;
    let closed = lambda0(n, D);
    Ok(ProductMax {
        n,
        closed_form: closed,
        numerical: report.best_value,
        restarts,
        matrix_free: !op.is_dense(),
        confirmed: (report.best_value - closed).abs() <= 1e-6 && report.best_value <= closed + 1e-9,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximizerForm {
    pub n: usize,
    pub value: f64,
    /// Fidelity of the optimizer's state with the nearest `⊗ᵢ|ψᵢ⟩|ψᵢ*⟩`.
    pub fidelity: f64,
    pub matches_form: bool,
}

/// Runs the rank-one seesaw on `Qₙ` and fits its best state to the paired
/// conjugate form.
pub fn rank1_maximizer_form_check(n: usize, restarts: usize, seed: u64) -> Result<MaximizerForm> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("maximizer form check supports n in 1..=3, got {n}")));
    }
    let op = qn_for_search(n)?;
    let config = SeesawConfig::default().with_restarts(restarts).with_seed(seed);
    let report = max_overlap_rank_k(&op, &op.dims(), &first_half_cut(n)?, 1, &config)?;
    let fit = fit_paired_product(&report.best_pure_state(), n, D, PairTie::Conjugate)?;
    Ok(MaximizerForm { n, value: report.best_value, fidelity: fit.fidelity, matches_form: fit.fidelity >= 1.0 - 1e-6 })
}

fn check_family(psis: &[ComplexVector]) -> Result<(usize, usize)> {
    let n = psis.len();
    if n == 0 {
        return Err(Error::InvalidParameter("at least one pair is required".into()));
    }
    let d = psis[0].len();
    if d < 2 || psis.iter().any(|v| v.len() != d) {
        return Err(Error::Dimension("all local vectors must share one dimension d >= 2".into()));
    }
    if psis.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::InvalidParameter("zero local vector".into()));
    }
    Ok((n, d))
}

/// `⊗ᵢ |ψᵢ⟩_{Aᵢ}|ψᵢ*⟩_{Bᵢ}` in cut order. Inputs are normalized.
pub fn maximal_form_state(psis: &[ComplexVector]) -> Result<PureState> {
    let (n, d) = check_family(psis)?;
    let pairs: Vec<ComplexVector> = psis
        .iter()
        .map(|v| {
            let u = v.normalize();
            kron_vec(&u, &u.map(|z| z.conj()))
        })
        .collect();
    let refs: Vec<&ComplexVector> = pairs.iter().collect();
    let pair_order = PureState::new(vec![d; 2 * n], kron_vec_all(&refs))?;
    let cut = reorder_subsystems(&pair_order, &pair_to_cut_permutation(n))?;
    PureState::new(vec![d; 2 * n], cut.into_amplitudes())
}

fn squared_overlaps(psis: &[ComplexVector], tildes: &[ComplexVector]) -> Result<(usize, usize, Vec<f64>)> {
    let (n, d) = check_family(psis)?;
    let (m, e) = check_family(tildes)?;
    if (n, d) != (m, e) {
        return Err(Error::Dimension("the two families differ in length or dimension".into()));
    }
    let c = psis
        .iter()
        .zip(tildes)
        .map(|(a, b)| a.normalize().dotc(&b.normalize()).norm_sqr())
        .collect();
    Ok((n, d, c))
}

/// `⟨φ₁|Qₙ|φ₁⊥⟩` for `φ₁ = ⊗|ψᵢψᵢ*⟩`, `φ₁⊥ = ⊗|ψ̃ᵢψ̃ᵢ*⟩`:
/// `½(∏cᵢ - ∏(cᵢ - 2/d))` with `cᵢ = |⟨ψᵢ|ψ̃ᵢ⟩|²`. It is real. When the two
/// product states are orthogonal the first product vanishes.
pub fn coherence_term(psis: &[ComplexVector], tildes: &[ComplexVector]) -> Result<f64> {
    let (_, d, c) = squared_overlaps(psis, tildes)?;
    Ok(coherence_from_overlaps(&c, d))
}

/// The coherence closed form as a function of the squared overlaps `cᵢ`.
pub fn coherence_from_overlaps(c: &[f64], d: usize) -> f64 {
    let shift = 2.0 / d as f64;
    let all: f64 = c.iter().product();
    let shifted: f64 = c.iter().map(|x| x - shift).product();
    0.5 * (all - shifted)
}

/// Dense evaluation of `⟨φ₁|Qₙ|φ₁⊥⟩`.
pub fn coherence_term_dense(psis: &[ComplexVector], tildes: &[ComplexVector]) -> Result<C64> {
    let (n, d, _) = squared_overlaps(psis, tildes)?;
    let a = maximal_form_state(psis)?;
    let b = maximal_form_state(tildes)?;
    let q = build_qn_recursive(n, d)?;
    Ok(a.amplitudes().dotc(&q.apply(b.amplitudes())))
}

fn check_orthogonal_family(psis: &[ComplexVector], tildes: &[ComplexVector]) -> Result<(usize, usize)> {
    let (n, d, c) = squared_overlaps(psis, tildes)?;
    let ov: f64 = c.iter().product();
    if ov > 1e-12 {
        return Err(Error::InvalidParameter(format!("product states are not orthogonal (|⟨φ₁|φ₁⊥⟩|² = {ov:e})")));
    }
    Ok((n, d))
}

/// `√p φ₁ + √(1-p) φ₁⊥` for two orthogonal maximal-form product states.
pub fn superposition_state(p: f64, psis: &[ComplexVector], tildes: &[ComplexVector]) -> Result<PureState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let (n, d) = check_orthogonal_family(psis, tildes)?;
    let a = maximal_form_state(psis)?;
    let b = maximal_form_state(tildes)?;
    let v = a.amplitudes() * c64(p.sqrt(), 0.0) + b.amplitudes() * c64((1.0 - p).sqrt(), 0.0);
    PureState::new(vec![d; 2 * n], v)
}

/// Closed form `λ₀ + 2√(p(1-p))·⟨φ₁|Qₙ|φ₁⊥⟩`, which for ququarts reads
/// `(1-2⁻ⁿ)/2 - √(p(1-p))∏(cᵢ - ½)`.
pub fn superposition_overlap(p: f64, psis: &[ComplexVector], tildes: &[ComplexVector]) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let (n, d) = check_orthogonal_family(psis, tildes)?;
    Ok(lambda0(n, d) + 2.0 * (p * (1.0 - p)).sqrt() * coherence_term(psis, tildes)?)
}

pub fn superposition_overlap_dense(p: f64, psis: &[ComplexVector], tildes: &[ComplexVector]) -> Result<f64> {
    let s = superposition_state(p, psis, tildes)?;
    let q = build_qn_recursive(psis.len(), psis[0].len())?;
    overlap(&s, &q)
}

/// Maximum of a 1-D function: uniform grid then golden-section refinement
/// around the best grid point.
pub(crate) fn grid_golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let step = (hi - lo) / grid as f64;
    let (mut bx, mut bf) = (lo, f(lo));
    for g in 1..=grid {
        let x = lo + g as f64 * step;
        let v = f(x);
        if v > bf {
            bx = x;
            bf = v;
        }
    }
    let (mut a, mut b) = ((bx - step).max(lo), (bx + step).min(hi));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-13 * (1.0 + a.abs()) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if fm >= bf {
        (xm, fm)
    } else {
        (bx, bf)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockValue {
    pub q11: f64,
    pub q22: f64,
    pub q12: [f64; 2],
    /// Largest eigenvalue of `[[q11, Re q12], [Re q12, q22]]`.
    pub value: f64,
}

/// `½(q₁₁ + q₂₂ + √((q₁₁ - q₂₂)² + 4 (Re q₁₂)²))`.
pub fn block_value(q11: f64, q22: f64, re_q12: f64) -> f64 {
    0.5 * (q11 + q22 + ((q11 - q22).powi(2) + 4.0 * re_q12 * re_q12).sqrt())
}

/// `max_θ cos²θ q₁₁ + sin²θ q₂₂ + 2 sinθ cosθ Re q₁₂` by direct search.
pub fn block_value_by_search(q11: f64, q22: f64, re_q12: f64) -> f64 {
    let form = |t: f64| t.cos().powi(2) * q11 + t.sin().powi(2) * q22 + 2.0 * t.sin() * t.cos() * re_q12;
    grid_golden_max(form, 0.0, std::f64::consts::PI, 2000).1
}

/// Best real mixture `√p φ₁ ± √(1-p) φ₁⊥` of an orthonormal pair on `op`.
pub fn two_state_block_value<O: LinearOperator + ?Sized>(phi1: &PureState, phi1perp: &PureState, op: &O) -> Result<BlockValue> {
    let (a, b) = (phi1.amplitudes(), phi1perp.amplitudes());
    if a.len() != op.dim() || b.len() != op.dim() {
        return Err(Error::Dimension("states do not match the operator".into()));
    }
    let norm_err = (a.norm() - 1.0).abs().max((b.norm() - 1.0).abs());
    let cross = a.dotc(b).norm();
    if norm_err > 1e-10 || cross > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "states are not orthonormal (norm error {norm_err:e}, overlap {cross:e})"
        )));
    }
    let qa = op.apply(a);
    let qb = op.apply(b);
    let q11 = a.dotc(&qa).re;
    let q22 = b.dotc(&qb).re;
    let q12 = a.dotc(&qb);
    Ok(BlockValue { q11, q22, q12: [q12.re, q12.im], value: block_value(q11, q22, q12.re) })
}

/// `⟨χ|Q|χ̃⟩ = -1/8 + ¼(|⟨x|x̃⟩|² + |⟨y|ỹ⟩|²)` for `χ = |xx*⟩|yy*⟩`.
pub fn chi_overlap(x: &ComplexVector, y: &ComplexVector, xt: &ComplexVector, yt: &ComplexVector) -> Result<f64> {
    check_family(&[x.clone(), y.clone(), xt.clone(), yt.clone()])?;
    if x.len() != D {
        return Err(Error::UnsupportedDimension { d: x.len(), reason: "the χ overlap formula is for ququarts" });
    }
    let c1 = x.normalize().dotc(&xt.normalize()).norm_sqr();
    let c2 = y.normalize().dotc(&yt.normalize()).norm_sqr();
    Ok(-0.125 + 0.25 * (c1 + c2))
}

pub fn chi_overlap_dense(x: &ComplexVector, y: &ComplexVector, xt: &ComplexVector, yt: &ComplexVector) -> Result<C64> {
    coherence_term_dense(&[x.clone(), y.clone()], &[xt.clone(), yt.clone()])
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureLemmas {
    /// `⟨φ^Γ|Q|φ^Γ⟩`
    pub q_of_gamma: f64,
    /// `⟨φ|Pₛ⊗Pₛ|φ⟩`
    pub sym_sym: f64,
    /// `sup |⟨φ|xx⟩|yy⟩|²`
    pub sup_xxyy: f64,
    /// `⟨φ|Q|φ⟩`
    pub q: f64,
    /// `sup |⟨φ|xx*⟩|yy*⟩|²`
    pub sup_chi: f64,
    pub sym_sym_bound_holds: bool,
    pub xxyy_bound_holds: bool,
    pub chi_bound_holds: bool,
}

/// Evaluates three inequalities for a state that is product across `AA':BB'`:
/// `⟨φ|Pₛ⊗Pₛ|φ⟩ ≥ 4⟨φ^Γ|Q|φ^Γ⟩ - ½`, `sup|⟨φ|xxyy⟩|² ≥ 4⟨φ|Pₛ⊗Pₛ|φ⟩ - 3` and
/// `sup|⟨φ|χ⟩|² ≥ 16⟨φ|Q|φ⟩ - 5`. For a product state `e⊗f`, `φ^Γ = e⊗f*`.
pub fn product_state_structure_lemmas(phi: &PureState) -> Result<StructureLemmas> {
    if phi.dims() != [D; 4] {
        return Err(Error::Dimension(format!("expected a two-pair ququart state, got {:?}", phi.dims())));
    }
    let phi = phi.normalized()?;
    let sd = schmidt(&phi, &Cut::two_pair())?;
    if sd.coefficients.get(1).copied().unwrap_or(0.0) > 1e-9 {
        return Err(Error::InvalidParameter("state is not product across AA':BB'".into()));
    }
    let e = &sd.left_vectors[0];
    let f = &sd.right_vectors[0];
    let gamma = PureState::two_pair(D, kron_vec(e, &f.map(|z| z.conj())))?;
    let q = crate::projectors::q_two_pair(D)?;
    let ops = standard_ops(D)?;
    let sym_sym = pair_order_to_cut_order(&tensor_product(&ops.p_sym, &ops.p_sym)?, D, 2)?;

    let q_of_gamma = overlap(&gamma, &q)?;
    let ss = overlap(&phi, &sym_sym)?;
    let sup_xxyy = fit_paired_product(&phi, 2, D, PairTie::Equal)?.fidelity;
    let qv = overlap(&phi, &q)?;
    let sup_chi = fit_paired_product(&phi, 2, D, PairTie::Conjugate)?.fidelity;
    let slack = 1e-9;
    Ok(StructureLemmas {
        q_of_gamma,
        sym_sym: ss,
        sup_xxyy,
        q: qv,
        sup_chi,
        sym_sym_bound_holds: ss >= 4.0 * q_of_gamma - 0.5 - slack,
        xxyy_bound_holds: sup_xxyy >= 4.0 * ss - 3.0 - slack,
        chi_bound_holds: sup_chi >= 16.0 * qv - 5.0 - slack,
    })
}

/// `g(a₁,a₂) = a₁a₂(-1/8 + ¼(1 + a₁b₂ + a₂b₁)) + √(3/8)(a₁b₂ + a₂b₁) + b₁b₂`
/// with `bᵢ = √(1 - aᵢ²)`.
pub fn g_function(a1: f64, a2: f64) -> f64 {
    let b1 = (1.0 - a1 * a1).max(0.0).sqrt();
    let b2 = (1.0 - a2 * a2).max(0.0).sqrt();
    let cross = a1 * b2 + a2 * b1;
    a1 * a2 * (-0.125 + 0.25 * (1.0 + cross)) + (3.0f64 / 8.0).sqrt() * cross + b1 * b2
}

/// Lower end of `aᵢ` allowed at `γ`: `aᵢ² ≥ 16γ - 5`, clamped to `[0, 1]`.
pub fn a_lower(gamma: f64) -> f64 {
    (16.0 * gamma - 5.0).clamp(0.0, 1.0).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct FOfGamma {
    pub gamma: f64,
    pub value: f64,
    pub argmax: [f64; 2],
    /// Maximum restricted to `a₁ = a₂`.
    pub diagonal_value: f64,
}

const F_GRID: usize = 120;
const F_AGREEMENT: f64 = 1e-6;

fn maximize_g_on_box(lo: f64) -> ([f64; 2], f64) {
    let hi = 1.0;
    let n = F_GRID;
    let step = (hi - lo) / n as f64;
    let (mut best, mut bv) = ([lo, lo], g_function(lo, lo));
    for i in 0..=n {
        for j in 0..=n {
            let (x, y) = (lo + i as f64 * step, lo + j as f64 * step);
            let v = g_function(x, y);
            if v > bv {
                best = [x, y];
                bv = v;
            }
        }
    }
    // Alternating golden refinement from the best grid point.
    let mut p = best;
    for _ in 0..60 {
        let before = bv;
        let (x, _) = grid_golden_max(|t| g_function(t, p[1]), lo, hi, 16);
        p[0] = x;
        let (y, v) = grid_golden_max(|t| g_function(p[0], t), lo, hi, 16);
        p[1] = y;
        bv = bv.max(v);
        if bv - before < 1e-15 {
            break;
        }
    }
    (p, g_function(p[0], p[1]))
}

/// `f(γ) = sup g` over `16γ - 5 ≤ aᵢ² ≤ 1`. The diagonal `a₁ = a₂` is
/// searched first and must agree with the full 2-D maximum to 1e-6.
pub fn f_of_gamma(gamma: f64) -> Result<FOfGamma> {
    if !(0.0..=0.375 + 1e-12).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("γ = {gamma} is outside [0, 3/8]")));
    }
    let lo = a_lower(gamma);
    let (a_diag, diag) = grid_golden_max(|a| g_function(a, a), lo, 1.0, 2000);
    let (arg_full, full) = maximize_g_on_box(lo);
    let (argmax, value) = if diag >= full { ([a_diag, a_diag], diag) } else { (arg_full, full) };
    if (diag - value).abs() > F_AGREEMENT {
        return Err(Error::Numerical(format!(
            "f({gamma}): diagonal maximum {diag} differs from 2-D maximum {value}"
        )));
    }
    Ok(FOfGamma { gamma, value, argmax, diagonal_value: diag })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaBound {
    pub gamma: f64,
    pub f_of_gamma: f64,
    pub resulting_bound: f64,
}

/// `3/8 + max_γ min(γ, f(γ))`. `f` is non-increasing in `γ`, so the maximum
/// sits at the crossing `γ = f(γ)`, found by bisection on `[5/16, 3/8]`.
pub fn final_bound() -> Result<GammaBound> {
    let (mut lo, mut hi) = (5.0 / 16.0, 3.0 / 8.0);
    let f_hi = f_of_gamma(hi)?.value;
    if f_hi >= hi {
        return Ok(GammaBound { gamma: hi, f_of_gamma: f_hi, resulting_bound: 0.375 + hi });
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f_of_gamma(mid)?.value >= mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let f = f_of_gamma(lo)?.value;
    let gamma = lo;
    Ok(GammaBound { gamma, f_of_gamma: f, resulting_bound: 0.375 + gamma.min(f) })
}

/// Orthogonal product pair `φ₁ = e⊗f`, `φ₁⊥ = e'⊗f'` with `e ⊥ e'` (the case
/// `f ⊥ f'` is the same up to swapping the parties, which leaves `Q`
/// invariant).
#[derive(Clone, Debug)]
pub struct ProductPair {
    pub e: ComplexVector,
    pub f: ComplexVector,
    pub e_perp: ComplexVector,
    pub f_perp: ComplexVector,
}

impl ProductPair {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let side = D * D;
        let e = haar_vector(rng, side);
        let e_perp = orthonormal_to(&haar_vector(rng, side), &e);
        Self { e, f: haar_vector(rng, side), e_perp, f_perp: haar_vector(rng, side) }
    }

    pub fn phi1(&self) -> ComplexVector {
        kron_vec(&self.e, &self.f)
    }

    pub fn phi1_perp(&self) -> ComplexVector {
        kron_vec(&self.e_perp, &self.f_perp)
    }
}

fn orthonormal_to(v: &ComplexVector, against: &ComplexVector) -> ComplexVector {
    let w = v - against * against.dotc(v);
    let n = w.norm();
    if n < 1e-300 {
        // v parallel to `against`: any orthogonal direction will do.
        let mut alt = ComplexVector::zeros(v.len());
        let k = (0..v.len()).min_by(|&i, &j| against[i].norm().total_cmp(&against[j].norm())).unwrap_or(0);
        alt[k] = c64(1.0, 0.0);
        return orthonormal_to(&alt, against);
    }
    w.unscale(n)
}

/// `(I ⊗ f†) w` for `w` on `AA'⊗BB'`.
fn contract_right(w: &ComplexVector, f: &ComplexVector) -> ComplexVector {
    let side = f.len();
    ComplexVector::from_fn(w.len() / side, |i, _| (0..side).map(|j| f[j].conj() * w[i * side + j]).sum())
}

/// `(e† ⊗ I) w`.
fn contract_left(w: &ComplexVector, e: &ComplexVector) -> ComplexVector {
    let side = w.len() / e.len();
    ComplexVector::from_fn(side, |j, _| (0..e.len()).map(|i| e[i].conj() * w[i * side + j]).sum())
}

/// Which objective the product-pair ascent maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairObjective {
    /// `⟨φ₁|Q|φ₁⟩ + |⟨φ₁|Q|φ₁⊥⟩|`
    DiagonalPlusCoherence,
    /// `|⟨φ₁|Q|φ₁⊥⟩|`
    Coherence,
}

fn pair_objective(q: &QnOperator, p: &ProductPair, obj: PairObjective) -> f64 {
    let a = p.phi1();
    let qa = q.apply(&a);
    let coh = qa.dotc(&p.phi1_perp()).norm();
    match obj {
        PairObjective::DiagonalPlusCoherence => a.dotc(&qa).re + coh,
        PairObjective::Coherence => coh,
    }
}

fn ascent_direction(quad: Option<ComplexVector>, h: ComplexVector, current: &ComplexVector) -> ComplexVector {
    // Gradient of the convex x†Mx + |x†h| at x; normalizing it never
    // decreases the objective on the sphere.
    let ip = h.dotc(current);
    let lin = if ip.norm() > 0.0 { &h * (ip / ip.norm()) } else { h.clone() };
    match quad {
        Some(mx) => mx * c64(2.0, 0.0) + lin,
        None => lin,
    }
}

/// Block-coordinate ascent over orthogonal product pairs. Each block update
/// is monotone: `e` and `f` take a normalized gradient step of a convex
/// function, `e'` and `f'` are solved exactly.
pub fn product_pair_ascent(start: ProductPair, obj: PairObjective, max_sweeps: usize) -> (f64, ProductPair) {
    let q = qn_matrix_free(2, D).expect("valid Q");
    let with_diag = obj == PairObjective::DiagonalPlusCoherence;
    let mut p = start;
    let mut value = pair_objective(&q, &p, obj);
    for _ in 0..max_sweeps {
        // e, keeping e ⊥ e'
        let w1 = q.apply(&p.phi1());
        let w2 = q.apply(&p.phi1_perp());
        let quad = with_diag.then(|| contract_right(&w1, &p.f));
        let dir = ascent_direction(quad, contract_right(&w2, &p.f), &p.e);
        p.e = orthonormal_to(&dir, &p.e_perp);
        // f
        let w1 = q.apply(&p.phi1());
        let quad = with_diag.then(|| contract_left(&w1, &p.e));
        let dir = ascent_direction(quad, contract_left(&w2, &p.e), &p.f);
        p.f = dir.normalize();
        // e' ⊥ e, then f'
        let w1 = q.apply(&p.phi1());
        p.e_perp = orthonormal_to(&contract_right(&w1, &p.f_perp), &p.e);
        let g = contract_left(&w1, &p.e_perp);
        if g.norm() > 0.0 {
            p.f_perp = g.normalize();
        }
        let now = pair_objective(&q, &p, obj);
        let gain = now - value;
        value = value.max(now);
        if gain < 1e-13 {
            break;
        }
    }
    (value, p)
}

#[derive(Clone, Debug, Serialize)]
pub struct PairEstimate {
    pub objective: PairObjective,
    pub value: f64,
    pub restarts: usize,
    pub best_restart: usize,
}

/// Best value of the product-pair ascent over seeded random restarts.
pub fn product_pair_estimate(obj: PairObjective, restarts: usize, seed: u64) -> Result<PairEstimate> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let stream = match obj {
        PairObjective::DiagonalPlusCoherence => 0u64,
        PairObjective::Coherence => 1u64 << 32,
    };
    let values: Vec<f64> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::BOUNDS, stream + i as u64);
            product_pair_ascent(ProductPair::random(&mut rng), obj, 3000).0
        })
        .collect();
    let best = values.iter().enumerate().fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
    Ok(PairEstimate { objective: obj, value: values[best], restarts, best_restart: best })
}

#[derive(Clone, Debug, Serialize)]
pub struct StrictReport {
    /// `max |Re⟨φ₁|Q|φ₁⊥⟩|` over orthogonal maximal-form pairs, from the
    /// closed form on a grid of squared overlaps.
    pub maximal_form_grid_sup: f64,
    /// The same maximum over random maximal-form pairs, evaluated densely.
    pub maximal_form_sampled_sup: f64,
    pub maximal_form_samples: usize,
    /// `3/8 + max |Re⟨φ₁|Q|φ₁⊥⟩|` over maximal-form pairs.
    pub maximal_form_sum: f64,
    pub strictly_below_three_quarters: bool,
    pub sum_estimate: PairEstimate,
    pub coherence_estimate: PairEstimate,
    /// `3/8 + coherence_estimate`
    pub separate_terms_bound: f64,
}

/// Numerical assembly of the argument that no rank-two state reaches 3/4.
pub fn strict_three_quarters_report(restarts: usize, samples: usize, seed: u64) -> Result<StrictReport> {
    // Orthogonal maximal-form pairs have c₁c₂ = 0; the coherence is then
    // -½(c₁ - ½)(c₂ - ½) with one factor equal to -½.
    let grid = 1000;
    let mut grid_sup: f64 = 0.0;
    for i in 0..=grid {
        let c = i as f64 / grid as f64;
        for cs in [[0.0, c], [c, 0.0]] {
            grid_sup = grid_sup.max(coherence_from_overlaps(&cs, D).abs());
        }
    }
    let sampled: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = stream_rng(seed, module_id::BOUNDS, (2u64 << 32) + i as u64);
            let x = haar_vector(&mut rng, D);
            let y = haar_vector(&mut rng, D);
            let xt = orthonormal_to(&haar_vector(&mut rng, D), &x);
            let yt = if i % 2 == 0 { haar_vector(&mut rng, D) } else { y.clone() };
            Ok(coherence_term_dense(&[x, y], &[xt, yt])?.re.abs())
        })
        .collect::<Result<_>>()?;
    let sampled_sup = sampled.into_iter().fold(0.0, f64::max);
    let sum_estimate = product_pair_estimate(PairObjective::DiagonalPlusCoherence, restarts, seed)?;
    let coherence_estimate = product_pair_estimate(PairObjective::Coherence, restarts, seed)?;
    let sup = grid_sup.max(sampled_sup);
    Ok(StrictReport {
        maximal_form_grid_sup: grid_sup,
        maximal_form_sampled_sup: sampled_sup,
        maximal_form_samples: samples,
        maximal_form_sum: 0.375 + sup,
        strictly_below_three_quarters: 0.375 + sup < 0.75,
        separate_terms_bound: 0.375 + coherence_estimate.value,
        sum_estimate,
        coherence_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{haar_vector, stream_rng};

    fn e(i: usize) -> ComplexVector {
        let mut v = ComplexVector::zeros(D);
        v[i] = c64(1.0, 0.0);
        v
    }

    #[test]
    fn lambda0_values() {
        assert_eq!(lambda0(1, 4), 0.25);
        assert_eq!(lambda0(2, 4), 0.375);
        assert_eq!(lambda0(3, 4), 0.4375);
    }

    #[test]
    fn product_max_dense_cases() {
        for n in [1, 2] {
            let r = product_max(n, 8, 3).unwrap();
            assert!(r.confirmed, "{r:?}");
            assert!(!r.matrix_free);
        }
    }

    #[test]
    fn constructed_maximal_form_reaches_three_eighths() {
        let mut rng = stream_rng(71, 0, 0);
        let s = maximal_form_state(&[haar_vector(&mut rng, D), haar_vector(&mut rng, D)]).unwrap();
        let q = build_qn_recursive(2, D).unwrap();
        assert!((overlap(&s, &q).unwrap() - 0.375).abs() < 1e-14);
    }

    #[test]
    fn maximizer_form_fit_for_two_copies() {
        let r = rank1_maximizer_form_check(2, 8, 5).unwrap();
        assert!((r.value - 0.375).abs() < 1e-6);
        assert!(r.matches_form, "{r:?}");
    }

    #[test]
    fn coherence_examples() {
        // One copy, orthogonal vectors.
        assert!((coherence_term(&[e(0)], &[e(1)]).unwrap() - 0.25).abs() < 1e-15);
        let dense = coherence_term_dense(&[e(0)], &[e(1)]).unwrap();
        assert!((dense.re - 0.25).abs() < 1e-14 && dense.im.abs() < 1e-14);
        // Equal on every copy: the two states coincide and the value is λ₀.
        let mut rng = stream_rng(72, 0, 0);
        for n in 1..=2 {
            let v: Vec<_> = (0..n).map(|_| haar_vector(&mut rng, D)).collect();
            let c = coherence_term(&v, &v).unwrap();
            assert!((c - lambda0(n, D)).abs() < 1e-14);
            assert!((coherence_term_dense(&v, &v).unwrap().re - c).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_matches_dense_on_random_families() {
        let mut rng = stream_rng(73, 0, 0);
        for n in 1..=2 {
            for _ in 0..40 {
                let a: Vec<_> = (0..n).map(|_| haar_vector(&mut rng, D)).collect();
                let b: Vec<_> = (0..n).map(|_| haar_vector(&mut rng, D)).collect();
                let dense = coherence_term_dense(&a, &b).unwrap();
                assert!((dense.re - coherence_term(&a, &b).unwrap()).abs() < 1e-12);
                assert!(dense.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coherence_three_copies_matrix_free() {
        let mut rng = stream_rng(74, 0, 0);
        let a: Vec<_> = (0..3).map(|_| haar_vector(&mut rng, D)).collect();
        let b: Vec<_> = (0..3).map(|_| haar_vector(&mut rng, D)).collect();
        let dense = coherence_term_dense(&a, &b).unwrap();
        assert!((dense.re - coherence_term(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn superposition_examples() {
        let mut rng = stream_rng(75, 0, 0);
        let x = haar_vector(&mut rng, D);
        let y = haar_vector(&mut rng, D);
        let xp = orthonormal_to(&haar_vector(&mut rng, D), &x);
        let yp = orthonormal_to(&haar_vector(&mut rng, D), &y);
        // Orthogonal on one copy, equal on the other.
        let (a, b) = (vec![x.clone(), y.clone()], vec![xp.clone(), y.clone()]);
        assert!((superposition_overlap(0.5, &a, &b).unwrap() - 0.5).abs() < 1e-14);
        assert!((superposition_overlap_dense(0.5, &a, &b).unwrap() - 0.5).abs() < 1e-12);
        assert!((superposition_overlap(0.0, &a, &b).unwrap() - 0.375).abs() < 1e-15);
        // Orthogonal on both copies.
        let b2 = vec![xp, yp];
        assert!((superposition_overlap(0.5, &a, &b2).unwrap() - 0.25).abs() < 1e-14);
        assert!((superposition_overlap_dense(0.5, &a, &b2).unwrap() - 0.25).abs() < 1e-12);
        // Non-orthogonal input is rejected.
        assert!(superposition_overlap(0.5, &a, &a).is_err());
    }

    #[test]
    fn block_value_examples() {
        assert_eq!(block_value(0.3, 0.1, 0.0), 0.3);
        assert_eq!(block_value(0.1, 0.3, 0.0), 0.3);
        let mut rng = stream_rng(76, 0, 0);
        let q = build_qn_recursive(2, D).unwrap();
        for _ in 0..10 {
            let a = haar_vector(&mut rng, 256);
            let b = orthonormal_to(&haar_vector(&mut rng, 256), &a);
            let pa = PureState::two_pair(D, a).unwrap();
            let pb = PureState::two_pair(D, b).unwrap();
            let v = two_state_block_value(&pa, &pb, &q).unwrap();
            let s = block_value_by_search(v.q11, v.q22, v.q12[0]);
            assert!((v.value - s).abs() < 1e-10, "{} vs {}", v.value, s);
        }
        // Two maximal product states orthogonal on one copy give 1/2.
        let x = haar_vector(&mut rng, D);
        let y = haar_vector(&mut rng, D);
        let xp = orthonormal_to(&haar_vector(&mut rng, D), &x);
        let a = maximal_form_state(&[x, y.clone()]).unwrap();
        let b = maximal_form_state(&[xp, y]).unwrap();
        let v = two_state_block_value(&a, &b, &q).unwrap();
        assert!((v.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi_overlap_examples() {
        let mut rng = stream_rng(77, 0, 0);
        let x = haar_vector(&mut rng, D);
        let y = haar_vector(&mut rng, D);
        assert!((chi_overlap(&x, &y, &x, &y).unwrap() - 0.375).abs() < 1e-14);
        let xp = orthonormal_to(&haar_vector(&mut rng, D), &x);
        let yp = orthonormal_to(&haar_vector(&mut rng, D), &y);
        assert!((chi_overlap(&x, &y, &xp, &yp).unwrap() + 0.125).abs() < 1e-14);
        assert!((chi_overlap_dense(&x, &y, &xp, &yp).unwrap().re + 0.125).abs() < 1e-12);
        for _ in 0..20 {
            let v: Vec<_> = (0..4).map(|_| haar_vector(&mut rng, D)).collect();
            let closed = chi_overlap(&v[0], &v[1], &v[2], &v[3]).unwrap();
            let dense = chi_overlap_dense(&v[0], &v[1], &v[2], &v[3]).unwrap();
            assert!((closed - dense.re).abs() < 1e-12);
        }
    }

    #[test]
    fn structure_lemmas_on_chi_are_tight() {
        let mut rng = stream_rng(78, 0, 0);
        let s = maximal_form_state(&[haar_vector(&mut rng, D), haar_vector(&mut rng, D)]).unwrap();
        let r = product_state_structure_lemmas(&s).unwrap();
        assert!((r.sup_chi - 1.0).abs() < 1e-9);
        assert!((16.0 * r.q - 5.0 - 1.0).abs() < 1e-12);
        assert!(r.sym_sym_bound_holds && r.xxyy_bound_holds && r.chi_bound_holds);
    }

    #[test]
    fn structure_lemmas_on_random_products() {
        let mut rng = stream_rng(79, 0, 0);
        for _ in 0..10 {
            let v = kron_vec(&haar_vector(&mut rng, 16), &haar_vector(&mut rng, 16));
            let s = PureState::two_pair(D, v).unwrap();
            let r = product_state_structure_lemmas(&s).unwrap();
            assert!(r.sym_sym_bound_holds && r.xxyy_bound_holds && r.chi_bound_holds, "{r:?}");
            if r.q < 5.0 / 16.0 {
                assert!(16.0 * r.q - 5.0 < 0.0);
            }
        }
        let entangled = PureState::two_pair(D, haar_vector(&mut rng, 256)).unwrap();
        assert!(product_state_structure_lemmas(&entangled).is_err());
    }

    #[test]
    fn g_values() {
        assert!((g_function(1.0, 1.0) - 0.125).abs() < 1e-15);
        assert!((g_function(0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn g_box_maximum_matches_fine_grid() {
        for gamma in [0.33, 0.36, 0.374] {
            let f = f_of_gamma(gamma).unwrap();
            let lo = a_lower(gamma);
            let mut grid_max = f64::NEG_INFINITY;
            let steps = ((1.0 - lo) / 1e-3).ceil() as usize;
            for i in 0..=steps {
                for j in 0..=steps {
                    let a = (lo + i as f64 * 1e-3).min(1.0);
                    let b = (lo + j as f64 * 1e-3).min(1.0);
                    grid_max = grid_max.max(g_function(a, b));
                }
            }
            assert!(f.value >= grid_max - 1e-12);
            assert!(f.value - grid_max < 1e-5, "γ={gamma}: {} vs {}", f.value, grid_max);
            assert!((f.diagonal_value - f.value).abs() <= 1e-6);
        }
    }

    #[test]
    fn f_is_nonincreasing_and_bound_is_below_three_quarters() {
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            let g = 5.0 / 16.0 + k as f64 * (1.0 / 16.0) / 10.0;
            let f = f_of_gamma(g).unwrap().value;
            assert!(f <= last + 1e-12);
            last = f;
        }
        let b = final_bound().unwrap();
        assert!(b.resulting_bound < 0.75);
        assert!((b.gamma - b.f_of_gamma).abs() < 1e-8);
        // Independent crossing: scan γ on a fine grid.
        let mut best: f64 = 0.0;
        for k in 0..=2000 {
            let g = 5.0 / 16.0 + k as f64 * (1.0 / 16.0) / 2000.0;
            best = best.max(g.min(f_of_gamma(g).unwrap().value));
        }
        assert!((0.375 + best - b.resulting_bound).abs() < 1e-4);
    }

    #[test]
    fn out_of_range_gamma_is_rejected() {
        assert!(f_of_gamma(0.5).is_err());
        assert!(f_of_gamma(-0.1).is_err());
    }

    #[test]
    fn pair_ascent_is_monotone_and_bounded() {
        let mut rng = stream_rng(80, 0, 0);
        let q = qn_matrix_free(2, D).unwrap();
        for obj in [PairObjective::DiagonalPlusCoherence, PairObjective::Coherence] {
            let start = ProductPair::random(&mut rng);
            let v0 = pair_objective(&q, &start, obj);
            let (v, p) = product_pair_ascent(start, obj, 200);
            assert!(v >= v0 - 1e-12);
            assert!(p.e.dotc(&p.e_perp).norm() < 1e-12);
            assert!(v <= 0.75 + 1e-12);
        }
    }

    #[test]
    fn maximal_form_coherence_stays_below_one_eighth() {
        let r = strict_three_quarters_report(4, 200, 9).unwrap();
        assert!(r.maximal_form_grid_sup <= 0.125 + 1e-12);
        assert!((r.maximal_form_grid_sup - 0.125).abs() < 1e-12);
        assert!(r.maximal_form_sampled_sup <= 0.125 + 1e-9);
        assert!(r.strictly_below_three_quarters);
    }
}
