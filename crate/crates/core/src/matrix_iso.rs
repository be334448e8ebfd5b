//! The state–operator isomorphism `Σ aᵢⱼ|i⟩|j⟩ ↔ Σ aᵢⱼ|i⟩⟨j|` and what it
//! says about the range of `Q`.
//!
//! A vector in the range of `Q` maps to `X = A⊗I + I⊗B` with traceless `A, B`
//! and `tr A†A + tr B†B = 1/d`. The largest overlap of a Schmidt-rank-two
//! state with that vector is `σ₁² + σ₂²` of `X`, so the two-copy question
//! becomes a singular-value problem for Kronecker sums. When `X` is normal its
//! singular values are `|aᵢ + bⱼ|` and the problem reduces to the eigenvalue
//! optimization solved by [`appendix_max`].

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projectors::q_two_pair;
use crate::rng::{complex_gaussian, haar_unitary, haar_vector, module_id, stream_rng};
use crate::sropt::{overlap, two_pair_from_pair_order};
use crate::tensor::{
    c64, kron_vec, max_abs, partial_trace, psi_plus, schmidt, singular_values, tensor_product,
    trace, ComplexMatrix, ComplexVector, Cut, CutReshaper, PureState, ZERO_TOL,
};

/// Residual below which a matrix counts as normal.
pub const NORMAL_TOL: f64 = 1e-9;
/// Residual above which a matrix counts as clearly non-normal.
pub const NON_NORMAL_TOL: f64 = 1e-6;
const CONSTRAINT_TOL: f64 = 1e-10;

/// Matrix of a pure state across `cut`: rows index the left side.
pub fn state_to_operator(state: &PureState, cut: &Cut) -> Result<ComplexMatrix> {
    Ok(CutReshaper::new(state.dims(), cut)?.to_matrix(state.amplitudes()))
}

/// Inverse of [`state_to_operator`].
pub fn operator_to_state(x: &ComplexMatrix, dims: &[usize], cut: &Cut) -> Result<PureState> {
    let reshaper = CutReshaper::new(dims, cut)?;
    if x.shape() != (reshaper.rows(), reshaper.cols()) {
        return Err(Error::Dimension(format!(
            "operator of shape {:?} does not match cut sides {}x{}",
            x.shape(),
            reshaper.rows(),
            reshaper.cols()
        )));
    }
    PureState::new(dims.to_vec(), reshaper.to_vector(x))
}

/// `√p |ψ⁽¹⁾⟩|ψ₊⟩ + √(1-p) |ψ₊⟩|ψ⁽²⁾⟩` with `ψ⁽ⁱ⁾ ⊥ ψ₊`.
#[derive(Clone, Debug)]
pub struct QSubspaceVector {
    pub p: f64,
    pub psi1: ComplexVector,
    pub psi2: ComplexVector,
    d: usize,
}

impl QSubspaceVector {
    pub fn new(d: usize, p: f64, psi1: ComplexVector, psi2: ComplexVector) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
        }
        if psi1.len() != d * d || psi2.len() != d * d {
            return Err(Error::Dimension(format!("pair vectors must have length {}", d * d)));
        }
        let pp = psi_plus(d);
        for v in [&psi1, &psi2] {
            if (v.norm() - 1.0).abs() > CONSTRAINT_TOL {
                return Err(Error::InvalidParameter("pair vectors must be normalized".into()));
            }
            let overlap = pp.dotc(v).norm();
            if overlap > CONSTRAINT_TOL {
                return Err(Error::NotOrthogonal { overlap });
            }
        }
        Ok(Self { p, psi1, psi2, d })
    }

    /// Random unit vector on the range of `Q`.
    pub fn random<R: Rng>(rng: &mut R, d: usize) -> Result<Self> {
        let pp = psi_plus(d);
        let mut draw = || {
            let v = haar_vector(rng, d * d);
            let w = &v - &pp * pp.dotc(&v);
            let n = w.norm();
            w.unscale(n)
        };
        let (psi1, psi2) = (draw(), draw());
        let p = rng.random::<f64>();
        Self::new(d, p, psi1, psi2)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The two-pair state in cut order.
    pub fn to_state(&self) -> Result<PureState> {
        let pp = psi_plus(self.d);
        let v = kron_vec(&self.psi1, &pp) * c64(self.p.sqrt(), 0.0)
            + kron_vec(&pp, &self.psi2) * c64((1.0 - self.p).sqrt(), 0.0);
        two_pair_from_pair_order(v, self.d)
    }
}

/// Traceless `(A, B)` with `tr A†A + tr B†B = 1/d`, standing for
/// `X = A⊗I + I⊗B`.
#[derive(Clone, Debug)]
pub struct ABPair {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
}

impl ABPair {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        let pair = Self { a, b };
        pair.check()?;
        Ok(pair)
    }

    pub fn d(&self) -> usize {
        self.a.nrows()
    }

    /// Largest violation of the trace and norm constraints.
    pub fn constraint_residual(&self) -> f64 {
        let d = self.d() as f64;
        let norm = self.a.norm_squared() + self.b.norm_squared();
        trace(&self.a)
            .norm()
            .max(trace(&self.b).norm())
            .max((norm - 1.0 / d).abs())
    }

    fn check(&self) -> Result<()> {
        let d = self.a.nrows();
        if !self.a.is_square() || self.b.shape() != (d, d) {
            return Err(Error::Dimension("A and B must be square of equal size".into()));
        }
        let r = self.constraint_residual();
        if r > CONSTRAINT_TOL {
            return Err(Error::InvalidParameter(format!("A, B violate the constraints by {r:e}")));
        }
        Ok(())
    }

    /// `A⊗I + I⊗B`.
    pub fn x(&self) -> ComplexMatrix {
        let d = self.d();
        let id = ComplexMatrix::identity(d, d);
        tensor_product(&self.a, &id).expect("small") + tensor_product(&id, &self.b).expect("small")
    }

    pub fn is_normal(&self, tol: f64) -> bool {
        normality_residual(&self.x()) < tol
    }
}

/// `(A, B)` for a vector on the range of `Q`: `A = √(p/d)·Ã`, `B = √((1-p)/d)·B̃`
/// with `Ã, B̃` the operators of `ψ⁽¹⁾, ψ⁽²⁾`.
pub fn psiq_to_ab(v: &QSubspaceVector) -> Result<ABPair> {
    let d = v.d;
    let op = |w: &ComplexVector| ComplexMatrix::from_fn(d, d, |i, j| w[i * d + j]);
    let df = d as f64;
    ABPair::new(
        op(&v.psi1) * c64((v.p / df).sqrt(), 0.0),
        op(&v.psi2) * c64(((1.0 - v.p) / df).sqrt(), 0.0),
    )
}

/// `max |X†X - XX†|`.
pub fn normality_residual(x: &ComplexMatrix) -> f64 {
    max_abs(&(x.adjoint() * x - x * x.adjoint()))
}

/// `σ₁² + σ₂²` of `A⊗I + I⊗B`.
pub fn top2_singular_sq_sum(pair: &ABPair) -> f64 {
    let s = singular_values(&pair.x());
    s.iter().take(2).map(|v| v * v).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normality {
    /// `Q|φ⟩ = 0`; the overlap is zero.
    ZeroProjection,
    Normal,
    /// Residual between the two tolerances; no certificate is issued.
    Unclassified,
    NonNormal,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalityReport {
    pub classification: Normality,
    pub residual: f64,
    pub overlap: f64,
    /// `σ₁² + σ₂²` of the normalized projection's operator.
    pub top2_weight: f64,
    pub certified: bool,
}

/// Classify the operator of `Q|φ₂⟩`. A normal image certifies
/// `⟨φ₂|Q|φ₂⟩ ≤ 1/2`; the directly computed overlap is carried along.
pub fn is_normal_projection(phi2: &PureState) -> Result<NormalityReport> {
    check_two_pair_four(phi2)?;
    let phi = phi2.normalized()?;
    let cut = Cut::two_pair();
    let rank = schmidt(&phi, &cut)?.rank(ZERO_TOL);
    if rank > 2 {
        return Err(Error::InvalidParameter(format!(
            "state has Schmidt rank {rank} across AA':BB', expected at most 2"
        )));
    }
    let q = q_two_pair(4)?;
    let overlap = overlap(&phi, &q)?;
    let projected = &q * phi.amplitudes();
    let norm = projected.norm();
    if norm < 1e-12 {
        return Ok(NormalityReport {
            classification: Normality::ZeroProjection,
            residual: 0.0,
            overlap,
            top2_weight: 0.0,
            certified: true,
        });
    }
    let psi = PureState::new(phi.dims().to_vec(), projected.unscale(norm))?;
    let x = state_to_operator(&psi, &cut)?;
    let residual = normality_residual(&x);
    let s = singular_values(&x);
    let top2_weight = s[0] * s[0] + s[1] * s[1];
    let classification = if residual < NORMAL_TOL {
        Normality::Normal
    } else if residual < NON_NORMAL_TOL {
        Normality::Unclassified
    } else {
        Normality::NonNormal
    };
    Ok(NormalityReport {
        classification,
        residual,
        overlap,
        top2_weight,
        certified: classification == Normality::Normal && top2_weight <= 0.5 + 1e-9,
    })
}

fn check_two_pair_four(phi: &PureState) -> Result<()> {
    if phi.dims() != [4, 4, 4, 4] {
        return Err(Error::Dimension(format!(
            "expected a two-pair state of ququarts, got dims {:?}",
            phi.dims()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct CPipeline {
    /// `|φ₂⟩ = Σ C_{ii',jj'} |ii'⟩_{AA'} |jj'⟩_{BB'}`.
    pub c: ComplexMatrix,
    pub c_a: ComplexMatrix,
    pub c_a_prime: ComplexMatrix,
    pub y: ComplexMatrix,
    pub y_prime: ComplexMatrix,
}

impl CPipeline {
    /// Operator of `Q|φ₂⟩`: `Y⊗I + I⊗Y'`.
    pub fn projection_operator(&self) -> ComplexMatrix {
        let d = self.y.nrows();
        let id = ComplexMatrix::identity(d, d);
        tensor_product(&self.y, &id).expect("small") + tensor_product(&id, &self.y_prime).expect("small")
    }

    /// `Q|φ₂⟩` rebuilt in pair form as
    /// `√d [(Y⊗I)|Φ⟩ ⊗ |ψ₊⟩ + |ψ₊⟩ ⊗ (Y'⊗I)|Φ⟩]` with `|Φ⟩ = Σᵢ|ii⟩`,
    /// returned in cut order.
    pub fn reconstruct_projection(&self) -> Result<PureState> {
        let d = self.y.nrows();
        let df = d as f64;
        let pp = psi_plus(d);
        let unnormalized = &pp * c64(df.sqrt(), 0.0);
        let id = ComplexMatrix::identity(d, d);
        let y_on_a = tensor_product(&self.y, &id)? * &unnormalized;
        let yp_on_a = tensor_product(&self.y_prime, &id)? * &unnormalized;
        let v = (kron_vec(&y_on_a, &pp) + kron_vec(&pp, &yp_on_a)) * c64(df.sqrt(), 0.0);
        two_pair_from_pair_order(v, d)
    }
}

/// `C`, its partial traces and the traceless `Y, Y'` for a two-pair state.
pub fn c_matrix_pipeline(phi2: &PureState) -> Result<CPipeline> {
    let dims = phi2.dims();
    if dims.len() != 4 || dims.iter().any(|&x| x != dims[0]) {
        return Err(Error::Dimension(format!("expected a two-pair state, got dims {dims:?}")));
    }
    let d = dims[0];
    let df = d as f64;
    let c = state_to_operator(phi2, &Cut::two_pair())?;
    let c_a = partial_trace(&c, &[d, d], &[1])?;
    let c_a_prime = partial_trace(&c, &[d, d], &[0])?;
    let shift = ComplexMatrix::identity(d, d) * (trace(&c) / c64(df * df, 0.0));
    let y = &c_a / c64(df, 0.0) - &shift;
    let y_prime = &c_a_prime / c64(df, 0.0) - &shift;
    Ok(CPipeline { c, c_a, c_a_prime, y, y_prime })
}

/// `a|e₁⟩|e₁*⟩ + b|e₂⟩|e₂*⟩` with orthonormal `e₁, e₂ ∈ C^{d²}` on `AA'`:
/// its `C` matrix is positive semidefinite.
pub fn positive_c_state(e1: &ComplexVector, e2: &ComplexVector, a: f64, b: f64, d: usize) -> Result<PureState> {
    if e1.len() != d * d || e2.len() != d * d {
        return Err(Error::Dimension(format!("vectors must have length {}", d * d)));
    }
    let c = e1 * e1.adjoint() * c64(a, 0.0) + e2 * e2.adjoint() * c64(b, 0.0);
    let s = operator_to_state(&c, &[d; 4], &Cut::two_pair())?;
    let n = s.norm();
    PureState::two_pair(d, s.amplitudes().unscale(n))
}

/// Random normal pair: `A = U diag(a) U†`, `B = V diag(b) V†` with eigenvalue
/// vectors supported on random subsets of size 0, 2, 3 or d, made traceless on
/// their support and jointly scaled onto `tr A†A + tr B†B = 1/d`. Sparse
/// supports keep the extremal region of the constraint set well sampled.
pub fn sample_normal_pair<R: Rng>(rng: &mut R, d: usize) -> ABPair {
    let eig = |rng: &mut R| -> ComplexVector {
        let sizes = [0, 2, 3, d];
        let size = sizes[rng.random_range(0..sizes.len())].min(d);
        let mut idx: Vec<usize> = (0..d).collect();
        for i in 0..size {
            let j = rng.random_range(i..d);
            idx.swap(i, j);
        }
        let mut v = ComplexVector::zeros(d);
        if size >= 2 {
            for &i in &idx[..size] {
                v[i] = complex_gaussian(rng);
            }
            let mean = idx[..size].iter().map(|&i| v[i]).sum::<crate::tensor::C64>() / c64(size as f64, 0.0);
            for &i in &idx[..size] {
                v[i] -= mean;
            }
        }
        v
    };
    loop {
        let a = eig(rng);
        let b = eig(rng);
        let norm = (a.norm_squared() + b.norm_squared()).sqrt();
        if norm < 1e-8 {
            continue;
        }
        let scale = c64(1.0 / (norm * (d as f64).sqrt()), 0.0);
        let u = haar_unitary(rng, d);
        let v = haar_unitary(rng, d);
        let am = &u * ComplexMatrix::from_diagonal(&(a * scale)) * u.adjoint();
        let bm = &v * ComplexMatrix::from_diagonal(&(b * scale)) * v.adjoint();
        return ABPair { a: am, b: bm };
    }
}

/// Random pair with Gaussian entries, projected onto the constraints.
pub fn sample_ab_pair<R: Rng>(rng: &mut R, d: usize) -> ABPair {
    let draw = |rng: &mut R| {
        let m = ComplexMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
        let t = trace(&m) / c64(d as f64, 0.0);
        m - ComplexMatrix::identity(d, d) * t
    };
    let a = draw(rng);
    let b = draw(rng);
    let scale = c64(1.0 / ((a.norm_squared() + b.norm_squared()) * d as f64).sqrt(), 0.0);
    ABPair { a: a * scale, b: b * scale }
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplingSummary {
    pub samples: usize,
    pub max_value: f64,
    pub argmax: usize,
    /// Samples with `σ₁² + σ₂² > 1/2 + 1e-9`.
    pub exceedances: Vec<usize>,
}

fn summarize(values: Vec<f64>) -> SamplingSummary {
    let argmax = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    SamplingSummary {
        samples: values.len(),
        max_value: values.get(argmax).copied().unwrap_or(f64::NAN),
        argmax,
        exceedances: values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.5 + 1e-9)
            .map(|(i, _)| i)
            .collect(),
    }
}

/// `σ₁² + σ₂²` over `samples` random normal pairs at dimension `d`.
pub fn normal_pair_experiment(samples: usize, d: usize, seed: u64) -> SamplingSummary {
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::NORMAL_SAMPLER, i as u64);
            top2_singular_sq_sum(&sample_normal_pair(&mut rng, d))
        })
        .collect();
    summarize(values)
}

/// Same experiment over generic (usually non-normal) pairs. Exceedances would
/// be counterexample candidates.
pub fn generic_pair_experiment(samples: usize, d: usize, seed: u64) -> SamplingSummary {
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::ISO, i as u64);
            top2_singular_sq_sum(&sample_ab_pair(&mut rng, d))
        })
        .collect();
    summarize(values)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFraction {
    pub samples: usize,
    pub normal: usize,
    pub unclassified: usize,
    pub non_normal: usize,
    pub zero_projection: usize,
}

/// How often a random Schmidt-rank-two state has a normal `Q`-projection.
pub fn normal_projection_fraction(samples: usize, seed: u64) -> Result<NormalFraction> {
    let classes: Vec<Normality> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::ISO, (1 << 40) + i as u64);
            let s = crate::sropt::random_rank_k_two_pair(&mut rng, 4, 2)?;
            Ok(is_normal_projection(&s)?.classification)
        })
        .collect::<Result<_>>()?;
    let count = |c: Normality| classes.iter().filter(|&&x| x == c).count();
    Ok(NormalFraction {
        samples,
        normal: count(Normality::Normal),
        unclassified: count(Normality::Unclassified),
        non_normal: count(Normality::NonNormal),
        zero_projection: count(Normality::ZeroProjection),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AppendixReport {
    pub d: usize,
    /// `(3d-4)/d²`.
    pub closed_form: f64,
    /// Maximum of the one-variable reduction `2(a₁ + √(x - y·a₁²))²`.
    pub reduction: f64,
    /// Stationary point `a₁* = √(x/(y² + y))` of the reduction.
    pub a1_star: f64,
    /// Largest eigenvalue of the constrained quadratic form.
    pub spectral: f64,
    /// Best value of projected ascent over random starts.
    pub ascent: f64,
    pub starts: usize,
}

impl AppendixReport {
    pub fn max_deviation(&self) -> f64 {
        [self.reduction, self.spectral, self.ascent]
            .iter()
            .map(|v| (v - self.closed_form).abs())
            .fold(0.0, f64::max)
    }
}

/// `|ã₁ + b̃₁|² + |ã₁ + b̃₂|²` for eigenvalue tuples `(ã, b̃)`.
pub fn appendix_objective(a: &ComplexVector, b: &ComplexVector) -> f64 {
    (a[0] + b[0]).norm_sqr() + (a[0] + b[1]).norm_sqr()
}

/// The reduced one-variable objective: real phases, `b̃₁ = b̃₂`, and the
/// remaining mass split equally over the tails.
pub fn appendix_reduction(d: usize, a1: f64) -> f64 {
    let df = d as f64;
    let x = (df - 2.0) / (2.0 * df * df);
    let y = (df - 2.0) / (2.0 * (df - 1.0));
    let rest = (x - y * a1 * a1).max(0.0);
    2.0 * (a1 + rest.sqrt()).powi(2)
}

/// Constrained maximum of [`appendix_objective`] for `d ≥ 3`, computed three
/// ways and reported alongside `(3d-4)/d²`.
pub fn appendix_max(d: usize, starts: usize, seed: u64) -> Result<AppendixReport> {
    if d < 3 {
        return Err(Error::UnsupportedDimension { d, reason: "the bound is stated for d >= 3" });
    }
    let df = d as f64;
    let x = (df - 2.0) / (2.0 * df * df);
    let y = (df - 2.0) / (2.0 * (df - 1.0));
    let a1_star = (x / (y * y + y)).sqrt();

    // Golden-section search of the reduction on [0, √(x/y)], independent of a₁*.
    let (mut lo, mut hi) = (0.0, (x / y).sqrt());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if appendix_reduction(d, m1) < appendix_reduction(d, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let reduction = appendix_reduction(d, 0.5 * (lo + hi));

    // z = (ã, b̃) ∈ C^{2d}; objective z†Mz with M = uu† + ww†.
    let n = 2 * d;
    let mut u = ComplexVector::zeros(n);
    u[0] = c64(1.0, 0.0);
    u[d] = c64(1.0, 0.0);
    let mut w = ComplexVector::zeros(n);
    w[0] = c64(1.0, 0.0);
    w[d + 1] = c64(1.0, 0.0);
    let m = &u * u.adjoint() + &w * w.adjoint();
    // Projector onto Σã = 0, Σb̃ = 0.
    let mut pi = ComplexMatrix::identity(n, n);
    for block in [0, d] {
        for i in 0..d {
            for j in 0..d {
                pi[(block + i, block + j)] -= c64(1.0 / df, 0.0);
            }
        }
    }
    let restricted = &pi * &m * &pi;
    let spectral = crate::tensor::hermitian_eigenvalues(&restricted)
        .last()
        .copied()
        .unwrap_or(0.0)
        / df;

    let objective = |z: &ComplexVector| z.dotc(&(&m * z)).re;
    let shifted = &pi * (ComplexMatrix::identity(n, n) + &m) * &pi;
    let ascent = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, module_id::APPENDIX, s as u64);
            let mut z = &pi * haar_vector(&mut rng, n);
            z = z.unscale(z.norm() * df.sqrt());
            let mut val = objective(&z);
            for _ in 0..2000 {
                let next = &shifted * &z;
                let nz = next.unscale(next.norm() * df.sqrt());
                let nv = objective(&nz);
                z = nz;
                if nv - val < 1e-15 {
                    val = val.max(nv);
                    break;
                }
                val = nv;
            }
            val
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    Ok(AppendixReport {
        d,
        closed_form: (3.0 * df - 4.0) / (df * df),
        reduction,
        a1_star,
        spectral,
        ascent,
        starts,
    })
}

/// Random eigenvalue tuple on the constraint set: sum-zero `ã, b̃` with
/// `Σ|ãᵢ|² + Σ|b̃ᵢ|² = 1/d`.
pub fn random_eig_tuple<R: Rng>(rng: &mut R, d: usize) -> (ComplexVector, ComplexVector) {
    let draw = |rng: &mut R| {
        let v = ComplexVector::from_fn(d, |_, _| complex_gaussian(rng));
        let mean = v.sum() / c64(d as f64, 0.0);
        v.map(|z| z - mean)
    };
    let a = draw(rng);
    let b = draw(rng);
    let s = c64(1.0 / ((a.norm_squared() + b.norm_squared()) * d as f64).sqrt(), 0.0);
    (a * s, b * s)
}
