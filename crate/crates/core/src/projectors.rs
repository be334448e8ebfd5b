//! Werner states and the n-copy projectors `Qₙ`.
//!
//! `Qₙ` acts on `n` pairs `(A₁B₁)…(AₙBₙ)`. Everything this module returns is in
//! *cut order* `(A₁,…,Aₙ,B₁,…,Bₙ)`, so the Alice/Bob cut is a contiguous
//! reshape. Builders work in pair order first and then conjugate by
//! [`pair_to_cut_permutation`].

use crate::error::{Error, Result};
use crate::tensor::{
    c64, partial_transpose, permute_operator, standard_ops, tensor_all_capped,
    tensor_product_capped, ComplexMatrix, ComplexVector, LinearOperator, StandardOps,
    DEFAULT_SIDE_CAP,
};

/// Default ceiling for a single dense operator, in bytes.
pub const DEFAULT_MEMORY_CAP: usize = 100 * 1024 * 1024;

const BYTES_PER_ENTRY: usize = std::mem::size_of::<crate::tensor::C64>();

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WernerParams {
    pub d: usize,
    /// Weight of the symmetric part.
    pub p: f64,
}

impl WernerParams {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::UnsupportedDimension { d, reason: "Werner states need d >= 2" });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
        }
        Ok(Self { d, p })
    }

    /// Parameters from `ρ = (I + αV)/(d² + αd)`.
    pub fn from_alpha(d: usize, alpha: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} is outside [-1, 1]")));
        }
        let df = d as f64;
        Self::new(d, (df + 1.0) * (1.0 + alpha) / (2.0 * (df + alpha)))
    }

    /// The PPT-boundary state, `p₀ = (d+1)/(4d-2)`.
    pub fn boundary(d: usize) -> Result<Self> {
        let df = d as f64;
        Self::new(d, (df + 1.0) / (4.0 * df - 2.0))
    }

    pub fn alpha(&self) -> f64 {
        let d = self.d as f64;
        (d + 1.0 - 2.0 * self.p * d) / (2.0 * self.p - d - 1.0)
    }
}

/// `ρ = p·Pₛ/dₛ + (1-p)·Pₐ/dₐ`.
pub fn werner_density(params: WernerParams) -> Result<ComplexMatrix> {
    let ops = standard_ops(params.d)?;
    let d = params.d as f64;
    let ds = d * (d + 1.0) / 2.0;
    let da = d * (d - 1.0) / 2.0;
    Ok(ops.p_sym * c64(params.p / ds, 0.0) + ops.p_anti * c64((1.0 - params.p) / da, 0.0))
}

/// `ρ = (I + αV)/(d² + αd)`.
pub fn werner_density_alpha(d: usize, alpha: f64) -> Result<ComplexMatrix> {
    let ops = standard_ops(d)?;
    let df = d as f64;
    Ok((ops.identity + ops.swap * c64(alpha, 0.0)) * c64(1.0 / (df * df + alpha * df), 0.0))
}

/// Position `k` of the cut order holds pair-order subsystem `perm[k]`.
pub fn pair_to_cut_permutation(n: usize) -> Vec<usize> {
    (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect()
}

/// Move an operator written in pair order into cut order.
pub fn pair_order_to_cut_order(m: &ComplexMatrix, d: usize, n: usize) -> Result<ComplexMatrix> {
    permute_operator(m, &vec![d; 2 * n], &pair_to_cut_permutation(n))
}

fn check_qn_args(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("copy count n must be at least 1".into()));
    }
    if d < 2 {
        return Err(Error::UnsupportedDimension { d, reason: "local dimension must be at least 2" });
    }
    Ok(())
}

fn dense_bytes(n: usize, d: usize) -> Option<usize> {
    let side = d.checked_pow(2 * n as u32)?;
    side.checked_mul(side)?.checked_mul(BYTES_PER_ENTRY)
}

fn check_memory(n: usize, d: usize, cap: usize) -> Result<()> {
    match dense_bytes(n, d) {
        Some(b) if b <= cap => Ok(()),
        b => Err(Error::MemoryCap { needed: b.unwrap_or(usize::MAX), cap }),
    }
}

/// `P₊` on pair `pair` of an `n`-pair vector in cut order.
pub fn apply_p_plus_on_pair(v: &ComplexVector, d: usize, n: usize, pair: usize) -> ComplexVector {
    let total = 2 * n;
    let stride_a = d.pow((total - 1 - pair) as u32);
    let stride_b = d.pow((total - 1 - (n + pair)) as u32);
    let diag = stride_a + stride_b;
    let inv_d = 1.0 / d as f64;
    let mut out = ComplexVector::zeros(v.len());
    for base in 0..v.len() {
        if (base / stride_a) % d != 0 || (base / stride_b) % d != 0 {
            continue;
        }
        let s: crate::tensor::C64 = (0..d).map(|i| v[base + i * diag]).sum();
        let s = s * inv_d;
        for i in 0..d {
            out[base + i * diag] = s;
        }
    }
    out
}

#[derive(Clone, Debug)]
enum Representation {
    Dense(ComplexMatrix),
    /// `Q_m v = Q_{m-1} v + P_m v - 2 Q_{m-1} P_m v`.
    Recursive,
    /// `Qₙ v = ½(v - ∏(I - 2P_m) v)`, valid for `d = 4`.
    Direct,
}

/// The projector `Qₙ` on `n` pairs in cut order.
#[derive(Clone, Debug)]
pub struct QnOperator {
    n: usize,
    d: usize,
    repr: Representation,
}

impl QnOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Local dimensions in cut order.
    pub fn dims(&self) -> Vec<usize> {
        vec![self.d; 2 * self.n]
    }

    pub fn dense(&self) -> Option<&ComplexMatrix> {
        match &self.repr {
            Representation::Dense(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        self.dense().is_some()
    }

    /// Dense matrix, materialized column by column if needed.
    pub fn to_dense(&self, memory_cap: usize) -> Result<ComplexMatrix> {
        if let Some(m) = self.dense() {
            return Ok(m.clone());
        }
        check_memory(self.n, self.d, memory_cap)?;
        let side = self.dim();
        let mut out = ComplexMatrix::zeros(side, side);
        let mut e = ComplexVector::zeros(side);
        for j in 0..side {
            e[j] = c64(1.0, 0.0);
            out.set_column(j, &self.apply(&e));
            e[j] = c64(0.0, 0.0);
        }
        Ok(out)
    }

    fn apply_recursive(&self, v: &ComplexVector, m: usize) -> ComplexVector {
        let pv = apply_p_plus_on_pair(v, self.d, self.n, m - 1);
        if m == 1 {
            return pv;
        }
        let qv = self.apply_recursive(v, m - 1);
        let qpv = self.apply_recursive(&pv, m - 1);
        qv + pv - qpv * c64(2.0, 0.0)
    }

    fn apply_direct(&self, v: &ComplexVector) -> ComplexVector {
        let mut w = v.clone();
        for pair in 0..self.n {
            let pw = apply_p_plus_on_pair(&w, self.d, self.n, pair);
            w -= pw * c64(2.0, 0.0);
        }
        (v - w) * c64(0.5, 0.0)
    }
}

impl LinearOperator for QnOperator {
    fn dim(&self) -> usize {
        self.d.pow(2 * self.n as u32)
    }

    fn apply(&self, v: &ComplexVector) -> ComplexVector {
        match &self.repr {
            Representation::Dense(m) => m * v,
            Representation::Recursive => self.apply_recursive(v, self.n),
            Representation::Direct => self.apply_direct(v),
        }
    }
}

/// Dense `Qₙ` from the recursion `Q₁ = P₊`, `Q_{m+1} = Q_m⊗O + (I-Q_m)⊗P₊`.
pub fn build_qn_recursive_dense(n: usize, d: usize, memory_cap: usize) -> Result<ComplexMatrix> {
    check_qn_args(n, d)?;
    check_memory(n, d, memory_cap)?;
    let ops = standard_ops(d)?;
    let mut q = ops.p_plus.clone();
    for _ in 1..n {
        let side = q.nrows();
        let comp = ComplexMatrix::identity(side, side) - &q;
        let cap = usize::MAX;
        q = tensor_product_capped(&q, &ops.p_orth, cap)? + tensor_product_capped(&comp, &ops.p_plus, cap)?;
    }
    pair_order_to_cut_order(&q, d, n)
}

/// `Qₙ` from the recursion: dense for `n ≤ 2`, matrix-free otherwise.
pub fn build_qn_recursive(n: usize, d: usize) -> Result<QnOperator> {
    check_qn_args(n, d)?;
    let repr = if n <= 2 {
        Representation::Dense(build_qn_recursive_dense(n, d, usize::MAX)?)
    } else {
        Representation::Recursive
    };
    Ok(QnOperator { n, d, repr })
}

/// Matrix-free recursive `Qₙ` for any `n`.
pub fn qn_matrix_free(n: usize, d: usize) -> Result<QnOperator> {
    check_qn_args(n, d)?;
    Ok(QnOperator { n, d, repr: Representation::Recursive })
}

fn check_direct(d: usize) -> Result<()> {
    if d != 4 {
        return Err(Error::UnsupportedDimension {
            d,
            reason: "the closed form needs (I - (d/2)P₊)² = I, which holds only for d = 4",
        });
    }
    Ok(())
}

/// Dense `Qₙ = ½(I - (I - (d/2)P₊)^{⊗n})`.
pub fn build_qn_direct_dense(n: usize, d: usize, memory_cap: usize) -> Result<ComplexMatrix> {
    check_qn_args(n, d)?;
    check_direct(d)?;
    check_memory(n, d, memory_cap)?;
    let ops = standard_ops(d)?;
    let reflection = &ops.identity - &ops.p_plus * c64(d as f64 / 2.0, 0.0);
    let factors = vec![&reflection; n];
    let power = tensor_all_capped(&factors, usize::MAX)?;
    let side = power.nrows();
    let q = (ComplexMatrix::identity(side, side) - power) * c64(0.5, 0.0);
    pair_order_to_cut_order(&q, d, n)
}

/// `Qₙ` from the closed form: dense for `n ≤ 2`, matrix-free otherwise.
pub fn build_qn_direct(n: usize, d: usize) -> Result<QnOperator> {
    check_qn_args(n, d)?;
    check_direct(d)?;
    let repr = if n <= 2 {
        Representation::Dense(build_qn_direct_dense(n, d, usize::MAX)?)
    } else {
        Representation::Direct
    };
    Ok(QnOperator { n, d, repr })
}

/// `Q = O⊗P₊ + P₊⊗O` on two pairs, in cut order `(A, A', B, B')`.
pub fn q_two_pair(d: usize) -> Result<ComplexMatrix> {
    build_qn_recursive_dense(2, d, usize::MAX)
}

/// `ρ^{Γ⊗n}` in cut order, Γ acting on every `B` factor. With `normalized =
/// false` each factor is `I - (d/2)·P₊`-like up to the dropped positive scale
/// `d² + αd`.
pub fn werner_gamma_power(params: WernerParams, n: usize, normalized: bool) -> Result<ComplexMatrix> {
    check_qn_args(n, params.d)?;
    let d = params.d;
    let mut rho = werner_density(params)?;
    if !normalized {
        let df = d as f64;
        rho *= c64(df * df + params.alpha() * df, 0.0);
    }
    let rho_gamma = partial_transpose(&rho, &[d, d], &[1])?;
    let factors = vec![&rho_gamma; n];
    let power = tensor_all_capped(&factors, DEFAULT_SIDE_CAP)?;
    pair_order_to_cut_order(&power, d, n)
}

/// `Qₙ^Γ` (Γ on all `B` factors) from a dense `Qₙ` in cut order.
pub fn qn_gamma(q: &ComplexMatrix, d: usize, n: usize) -> Result<ComplexMatrix> {
    let b_sides: Vec<usize> = (n..2 * n).collect();
    partial_transpose(q, &vec![d; 2 * n], &b_sides)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaEigenspace {
    /// Number of antisymmetric factors in the words spanning the eigenspace.
    pub weight: usize,
    pub eigenvalue: f64,
    pub multiplicity: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Spectrum of `Qₙ^Γ`: `λᵢ = (1 - 3ⁱ/2ⁿ)/2` on the span of `Pₛ/Pₐ` words with
/// `i` antisymmetric letters, listed with decreasing eigenvalue.
pub fn qn_gamma_spectrum(n: usize, d: usize) -> Result<Vec<GammaEigenspace>> {
    check_qn_args(n, d)?;
    check_direct(d)?;
    let ds = (d * (d + 1) / 2) as u64;
    let da = (d * (d - 1) / 2) as u64;
    Ok((0..=n)
        .map(|i| GammaEigenspace {
            weight: i,
            eigenvalue: 0.5 * (1.0 - 3f64.powi(i as i32) / 2f64.powi(n as i32)),
            multiplicity: binomial(n as u64, i as u64) * ds.pow((n - i) as u32) * da.pow(i as u32),
        })
        .collect())
}

/// Eigenprojector `Aᵢ` of `Qₙ^Γ`: the sum of all `n`-letter `Pₛ/Pₐ` words with
/// exactly `weight` antisymmetric letters, in cut order.
pub fn gamma_eigenprojector(n: usize, d: usize, weight: usize, memory_cap: usize) -> Result<ComplexMatrix> {
    check_qn_args(n, d)?;
    if weight > n {
        return Err(Error::InvalidParameter(format!("weight {weight} exceeds n = {n}")));
    }
    check_memory(n, d, memory_cap)?;
    let StandardOps { p_sym, p_anti, .. } = standard_ops(d)?;
    let side = d.pow(2 * n as u32);
    let mut sum = ComplexMatrix::zeros(side, side);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != weight {
            continue;
        }
        let word: Vec<&ComplexMatrix> = (0..n)
            .map(|k| if mask >> k & 1 == 1 { &p_anti } else { &p_sym })
            .collect();
        sum += tensor_all_capped(&word, usize::MAX)?;
    }
    pair_order_to_cut_order(&sum, d, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{haar_vector, stream_rng};
    use crate::tensor::{
        expectation, hermitian_eigenvalues, hermiticity_residual, max_abs, max_abs_diff,
        max_abs_diff_vec, projector_residual, tensor_product, trace,
    };

    #[test]
    fn werner_endpoints_and_trace() {
        let ops = standard_ops(4).unwrap();
        let rho = werner_density(WernerParams::new(4, 1.0).unwrap()).unwrap();
        assert!(max_abs_diff(&rho, &(&ops.p_sym * c64(0.1, 0.0))) < 1e-15);
        for p in [0.0, 0.13, 0.5, 0.77] {
            let rho = werner_density(WernerParams::new(4, p).unwrap()).unwrap();
            assert!((trace(&rho).re - 1.0).abs() < 1e-12);
            assert!(hermiticity_residual(&rho) < 1e-15);
            assert!(hermitian_eigenvalues(&rho)[0] > -1e-14);
        }
    }

    #[test]
    fn boundary_parametrizations_agree() {
        let b = WernerParams::boundary(4).unwrap();
        assert!((b.p - 5.0 / 14.0).abs() < 1e-15);
        assert!((b.alpha() + 0.5).abs() < 1e-12);
        let from_alpha = WernerParams::from_alpha(4, -0.5).unwrap();
        assert!((from_alpha.p - 5.0 / 14.0).abs() < 1e-15);
        let r1 = werner_density(b).unwrap();
        let r2 = werner_density_alpha(4, -0.5).unwrap();
        assert!(max_abs_diff(&r1, &r2) < 1e-12);
    }

    #[test]
    fn alpha_round_trip() {
        for d in [2, 3, 4, 7] {
            for alpha in [-1.0, -0.3, 0.0, 0.6, 1.0] {
                let w = WernerParams::from_alpha(d, alpha).unwrap();
                assert!((w.alpha() - alpha).abs() < 1e-12);
                let r1 = werner_density(w).unwrap();
                let r2 = werner_density_alpha(d, alpha).unwrap();
                assert!(max_abs_diff(&r1, &r2) < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_gamma_is_reflection() {
        let ops = standard_ops(4).unwrap();
        let rho = werner_density(WernerParams::boundary(4).unwrap()).unwrap();
        let g = partial_transpose(&rho, &[4, 4], &[1]).unwrap() * c64(14.0, 0.0);
        let reflection = &ops.identity - &ops.p_plus * c64(2.0, 0.0);
        assert!(max_abs_diff(&g, &reflection) < 1e-12);
        assert!(max_abs_diff(&(&reflection * &reflection), &ops.identity) < 1e-15);
    }

    #[test]
    fn q1_is_p_plus() {
        let ops = standard_ops(4).unwrap();
        let q = build_qn_recursive(1, 4).unwrap();
        assert!(max_abs_diff(q.dense().unwrap(), &ops.p_plus) < 1e-15);
        let q = build_qn_direct(1, 4).unwrap();
        assert!(max_abs_diff(q.dense().unwrap(), &ops.p_plus) < 1e-15);
    }

    #[test]
    fn q2_matches_two_term_form_for_several_d() {
        for d in [2, 3, 4] {
            let ops = standard_ops(d).unwrap();
            let pair = tensor_product(&ops.p_orth, &ops.p_plus).unwrap()
                + tensor_product(&ops.p_plus, &ops.p_orth).unwrap();
            let want = pair_order_to_cut_order(&pair, d, 2).unwrap();
            let q = q_two_pair(d).unwrap();
            assert!(max_abs_diff(&q, &want) < 1e-12);
            assert!(projector_residual(&q) < 1e-12);
        }
    }

    #[test]
    fn direct_matches_recursive_n2() {
        let a = build_qn_direct_dense(2, 4, usize::MAX).unwrap();
        let b = build_qn_recursive_dense(2, 4, usize::MAX).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn direct_rejects_other_dimensions() {
        assert!(matches!(build_qn_direct(2, 3), Err(Error::UnsupportedDimension { d: 3, .. })));
        assert!(build_qn_recursive(0, 4).is_err());
    }

    #[test]
    fn memory_cap_is_respected() {
        assert!(matches!(
            build_qn_recursive_dense(3, 4, DEFAULT_MEMORY_CAP),
            Err(Error::MemoryCap { .. })
        ));
        assert!(!build_qn_recursive(3, 4).unwrap().is_dense());
    }

    #[test]
    fn matrix_free_agrees_with_dense_n2() {
        let dense = q_two_pair(4).unwrap();
        let rec = qn_matrix_free(2, 4).unwrap();
        let dir = QnOperator { n: 2, d: 4, repr: Representation::Direct };
        let mut rng = stream_rng(11, 0, 0);
        for _ in 0..5 {
            let v = haar_vector(&mut rng, 256);
            let want = &dense * &v;
            assert!(max_abs_diff_vec(&rec.apply(&v), &want) < 1e-13);
            assert!(max_abs_diff_vec(&dir.apply(&v), &want) < 1e-13);
        }
        assert!(max_abs_diff(&rec.to_dense(usize::MAX).unwrap(), &dense) < 1e-13);
    }

    #[test]
    fn matrix_free_q3_is_projector_and_matches_direct() {
        let rec = build_qn_recursive(3, 4).unwrap();
        let dir = build_qn_direct(3, 4).unwrap();
        let mut rng = stream_rng(12, 0, 0);
        for _ in 0..3 {
            let v = haar_vector(&mut rng, 4096);
            let qv = rec.apply(&v);
            assert!(max_abs_diff_vec(&qv, &dir.apply(&v)) < 1e-12);
            assert!(max_abs_diff_vec(&rec.apply(&qv), &qv) < 1e-12);
            let w = haar_vector(&mut rng, 4096);
            let lhs = w.dotc(&qv);
            let rhs = rec.apply(&w).dotc(&v);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn undistillability_sign_equivalence() {
        let q = q_two_pair(4).unwrap();
        let rho2 = werner_gamma_power(WernerParams::boundary(4).unwrap(), 2, false).unwrap();
        let id = ComplexMatrix::identity(256, 256);
        assert!(max_abs_diff(&rho2, &(&id - &q * c64(2.0, 0.0))) < 1e-12);
        let mut rng = stream_rng(13, 0, 0);
        for _ in 0..50 {
            let v = haar_vector(&mut rng, 256);
            let qv = expectation(&q, &v).re;
            let rv = expectation(&rho2, &v).re;
            assert_eq!(qv <= 0.5, rv >= 0.0);
        }
    }

    #[test]
    fn spectrum_n1_n2() {
        let s1 = qn_gamma_spectrum(1, 4).unwrap();
        assert_eq!(s1.len(), 2);
        assert!((s1[0].eigenvalue - 0.25).abs() < 1e-15 && s1[0].multiplicity == 10);
        assert!((s1[1].eigenvalue + 0.25).abs() < 1e-15 && s1[1].multiplicity == 6);
        let s2 = qn_gamma_spectrum(2, 4).unwrap();
        let vals: Vec<f64> = s2.iter().map(|e| e.eigenvalue).collect();
        let mult: Vec<u64> = s2.iter().map(|e| e.multiplicity).collect();
        assert_eq!(vals, vec![0.375, 0.125, -0.625]);
        assert_eq!(mult, vec![100, 120, 36]);
    }

    #[test]
    fn q1_gamma_is_swap_over_four() {
        let ops = standard_ops(4).unwrap();
        let g = qn_gamma(&ops.p_plus, 4, 1).unwrap();
        assert!(max_abs_diff(&g, &(&ops.swap * c64(0.25, 0.0))) < 1e-15);
    }

    #[test]
    fn q2_gamma_decomposes_into_word_projectors() {
        let q = q_two_pair(4).unwrap();
        let g = qn_gamma(&q, 4, 2).unwrap();
        let mut sum = ComplexMatrix::zeros(256, 256);
        let mut identity = ComplexMatrix::zeros(256, 256);
        for e in qn_gamma_spectrum(2, 4).unwrap() {
            let a = gamma_eigenprojector(2, 4, e.weight, usize::MAX).unwrap();
            assert!(projector_residual(&a) < 1e-12);
            assert!((trace(&a).re - e.multiplicity as f64).abs() < 1e-9);
            sum += &a * c64(e.eigenvalue, 0.0);
            identity += a;
        }
        assert!(max_abs_diff(&g, &sum) < 1e-12);
        assert!(max_abs_diff(&identity, &ComplexMatrix::identity(256, 256)) < 1e-12);
        assert!(max_abs(&(&g - &g.adjoint())) < 1e-15);
    }

    #[test]
    fn p_plus_on_pair_matches_dense() {
        let ops = standard_ops(3).unwrap();
        let id = ComplexMatrix::identity(9, 9);
        let mut rng = stream_rng(14, 0, 0);
        let v = haar_vector(&mut rng, 81);
        for pair in 0..2 {
            let word = if pair == 0 {
                tensor_product(&ops.p_plus, &id).unwrap()
            } else {
                tensor_product(&id, &ops.p_plus).unwrap()
            };
            let dense = pair_order_to_cut_order(&word, 3, 2).unwrap();
            let got = apply_p_plus_on_pair(&v, 3, 2, pair);
            assert!(max_abs_diff_vec(&got, &(&dense * &v)) < 1e-14);
        }
    }
}
