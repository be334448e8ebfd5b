//! Dense complex linear algebra and pure-state primitives.
//!
//! Matrices are `nalgebra` dense matrices over `Complex<f64>`. Multi-partite
//! indices are row-major: the first subsystem in `dims` is the most
//! significant digit, so `|i⟩⊗|j⟩` with local dimensions `(d0, d1)` sits at
//! flat index `i * d1 + j`. This matches the Kronecker product ordering.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Largest matrix side any dense constructor will produce unless told otherwise.
pub const DEFAULT_SIDE_CAP: usize = 4096;

/// Numerical-zero threshold for ranks and support tests.
pub const ZERO_TOL: f64 = 1e-9;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_vector(values: &[f64]) -> ComplexVector {
    ComplexVector::from_iterator(values.len(), values.iter().map(|&x| c64(x, 0.0)))
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn max_abs_diff_vec(a: &ComplexVector, b: &ComplexVector) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch in max_abs_diff_vec");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |M - M†|`.
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

/// `max |U†U - I|`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &ComplexMatrix::identity(n, n))
}

/// `max(|P² - P|, |P - P†|)`.
pub fn projector_residual(p: &ComplexMatrix) -> f64 {
    if !p.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(p * p), p).max(hermiticity_residual(p))
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Kronecker product with the default side cap.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_product_capped(a, b, DEFAULT_SIDE_CAP)
}

/// Kronecker product; entry `(i·rows_b + k, j·cols_b + l)` is `a[i,j]·b[k,l]`.
pub fn tensor_product_capped(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    cap: usize,
) -> Result<ComplexMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= cap && c <= cap => Ok(a.kronecker(b)),
        (r, c) => Err(Error::SizeCap {
            side: r.unwrap_or(usize::MAX).max(c.unwrap_or(usize::MAX)),
            cap,
        }),
    }
}

/// Kronecker product of a sequence of factors, left to right.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    tensor_all_capped(factors, DEFAULT_SIDE_CAP)
}

pub fn tensor_all_capped(factors: &[&ComplexMatrix], cap: usize) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(1, 1);
    for f in factors {
        acc = tensor_product_capped(&acc, f, cap)?;
    }
    Ok(acc)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let n = b.len();
    ComplexVector::from_fn(a.len() * n, |i, _| a[i / n] * b[i % n])
}

pub fn kron_vec_all(factors: &[&ComplexVector]) -> ComplexVector {
    let mut acc = ComplexVector::from_element(1, ONE);
    for f in factors {
        acc = kron_vec(&acc, f);
    }
    acc
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn check_side(dims: &[usize], side: usize) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || prod != side {
        return Err(Error::Dimension(format!(
            "product of dims {dims:?} is {prod}, expected {side}"
        )));
    }
    Ok(())
}

fn check_subset(subsystems: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &s in subsystems {
        if s >= n || seen[s] {
            return Err(Error::Dimension(format!(
                "subsystem list {subsystems:?} is not a subset of 0..{n}"
            )));
        }
        seen[s] = true;
    }
    Ok(())
}

/// For each flat index, the part of the index contributed by `subsystems`.
fn selected_offsets(dims: &[usize], subsystems: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let side: usize = dims.iter().product();
    (0..side)
        .map(|i| {
            subsystems
                .iter()
                .map(|&s| ((i / st[s]) % dims[s]) * st[s])
                .sum()
        })
        .collect()
}

/// Transpose the tensor factors listed in `subsystems`.
pub fn partial_transpose(
    m: &ComplexMatrix,
    dims: &[usize],
    subsystems: &[usize],
) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("partial transpose needs a square matrix".into()));
    }
    check_side(dims, m.nrows())?;
    check_subset(subsystems, dims.len())?;
    let sel = selected_offsets(dims, subsystems);
    let n = m.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            let r2 = r - sel[r] + sel[c];
            let c2 = c - sel[c] + sel[r];
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Trace out the factors listed in `traced`; the result acts on the remaining
/// factors in their original order.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: &[usize],
    traced: &[usize],
) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("partial trace needs a square matrix".into()));
    }
    check_side(dims, m.nrows())?;
    check_subset(traced, dims.len())?;
    let kept: Vec<usize> = (0..dims.len()).filter(|s| !traced.contains(s)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&s| dims[s]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&s| dims[s]).collect();
    let st = strides(dims);
    let digits = |i: usize, subs: &[usize], sub_dims: &[usize]| -> usize {
        subs.iter()
            .zip(sub_dims)
            .fold(0, |acc, (&s, &d)| acc * d + (i / st[s]) % dims[s])
    };
    let n = m.nrows();
    let kept_index: Vec<usize> = (0..n).map(|i| digits(i, &kept, &kept_dims)).collect();
    let traced_index: Vec<usize> = (0..n).map(|i| digits(i, traced, &traced_dims)).collect();

    let out_side: usize = kept_dims.iter().product();
    let tr_side: usize = traced_dims.iter().product();
    let mut groups: Vec<Vec<usize>> = vec![Vec::with_capacity(out_side); tr_side];
    for i in 0..n {
        groups[traced_index[i]].push(i);
    }
    let mut out = ComplexMatrix::zeros(out_side, out_side);
    for group in &groups {
        for &c in group {
            for &r in group {
                out[(kept_index[r], kept_index[c])] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// `map[new_flat] = old_flat` for a subsystem permutation where new position
/// `k` holds old subsystem `perm[k]`.
pub fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let n = dims.len();
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    let old_st = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_st = strides(&new_dims);
    let side: usize = dims.iter().product();
    Ok((0..side)
        .map(|j| {
            (0..n)
                .map(|k| ((j / new_st[k]) % new_dims[k]) * old_st[perm[k]])
                .sum()
        })
        .collect())
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// Conjugate an operator by a subsystem permutation (same convention as
/// [`reorder_subsystems`]).
pub fn permute_operator(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("operator must be square".into()));
    }
    check_side(dims, m.nrows())?;
    let map = permutation_index_map(dims, perm)?;
    let n = m.nrows();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| m[(map[r], map[c])]))
}

/// Anything that can act linearly on a state vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &ComplexVector) -> ComplexVector;
}

impl LinearOperator for ComplexMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &ComplexVector) -> ComplexVector {
        self * v
    }
}

/// `⟨v|M|v⟩`.
pub fn expectation<O: LinearOperator + ?Sized>(op: &O, v: &ComplexVector) -> C64 {
    v.dotc(&op.apply(v))
}

/// A pure state over an ordered list of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: ComplexVector,
    labels: Vec<String>,
}

pub const TWO_PAIR_LABELS: [&str; 4] = ["A", "A'", "B", "B'"];

impl PureState {
    pub fn new(dims: Vec<usize>, amplitudes: ComplexVector) -> Result<Self> {
        check_side(&dims, amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        let labels = (0..dims.len()).map(|k| format!("S{k}")).collect();
        Ok(Self { dims, amplitudes, labels })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dims.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} subsystems",
                labels.len(),
                self.dims.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Two-pair state on `C^d ⊗ C^d ⊗ C^d ⊗ C^d` in canonical order (A, A', B, B').
    pub fn two_pair(d: usize, amplitudes: ComplexVector) -> Result<Self> {
        Self::new(vec![d; 4], amplitudes)?
            .with_labels(TWO_PAIR_LABELS.iter().map(|s| s.to_string()).collect())
    }

    /// Tensor product of single-subsystem vectors.
    pub fn product(factors: &[ComplexVector]) -> Result<Self> {
        let dims = factors.iter().map(|f| f.len()).collect();
        let refs: Vec<&ComplexVector> = factors.iter().collect();
        Self::new(dims, kron_vec_all(&refs))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> ComplexVector {
        self.amplitudes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-12
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            dims: self.dims.clone(),
            amplitudes: self.amplitudes.unscale(n),
            labels: self.labels.clone(),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!(
                "inner product of states with dims {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Reorder subsystems: position `k` of the result holds subsystem `perm[k]`.
pub fn reorder_subsystems(state: &PureState, perm: &[usize]) -> Result<PureState> {
    let map = permutation_index_map(state.dims(), perm)?;
    let amps = ComplexVector::from_fn(map.len(), |j, _| state.amplitudes[map[j]]);
    let dims = perm.iter().map(|&p| state.dims[p]).collect();
    let labels = perm.iter().map(|&p| state.labels[p].clone()).collect();
    PureState::new(dims, amps)?.with_labels(labels)
}

/// A bipartition of subsystem indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Cut {
    /// `left` lists the subsystems on the left side; everything else goes right.
    pub fn new(left: Vec<usize>, num_subsystems: usize) -> Result<Self> {
        let mut seen = vec![false; num_subsystems];
        for &s in &left {
            if s >= num_subsystems || seen[s] {
                return Err(Error::InvalidCut(format!(
                    "left side {left:?} is not a subset of 0..{num_subsystems}"
                )));
            }
            seen[s] = true;
        }
        let right: Vec<usize> = (0..num_subsystems).filter(|&s| !seen[s]).collect();
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidCut("both sides of a cut must be nonempty".into()));
        }
        Ok(Self { left, right })
    }

    /// AA':BB' in canonical two-pair order.
    pub fn two_pair() -> Self {
        Self { left: vec![0, 1], right: vec![2, 3] }
    }

    /// First `n` subsystems versus the rest.
    pub fn contiguous(n: usize, num_subsystems: usize) -> Result<Self> {
        Self::new((0..n).collect(), num_subsystems)
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn num_subsystems(&self) -> usize {
        self.left.len() + self.right.len()
    }

    /// Left subsystems followed by right subsystems.
    pub fn permutation(&self) -> Vec<usize> {
        self.left.iter().chain(&self.right).copied().collect()
    }

    pub fn side_dims(&self, dims: &[usize]) -> (usize, usize) {
        (
            self.left.iter().map(|&s| dims[s]).product(),
            self.right.iter().map(|&s| dims[s]).product(),
        )
    }
}

/// Flat-index bookkeeping for reshaping states across a fixed cut.
#[derive(Clone, Debug)]
pub struct CutReshaper {
    rows: usize,
    cols: usize,
    /// `map[r * cols + c]` is the flat index in the original subsystem order.
    map: Vec<usize>,
}

impl CutReshaper {
    pub fn new(dims: &[usize], cut: &Cut) -> Result<Self> {
        if cut.num_subsystems() != dims.len() {
            return Err(Error::InvalidCut(format!(
                "cut over {} subsystems applied to {} subsystems",
                cut.num_subsystems(),
                dims.len()
            )));
        }
        let map = permutation_index_map(dims, &cut.permutation())?;
        let (rows, cols) = cut.side_dims(dims);
        Ok(Self { rows, cols, map })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn to_matrix(&self, v: &ComplexVector) -> ComplexMatrix {
        let cols = self.cols;
        ComplexMatrix::from_fn(self.rows, cols, |r, c| v[self.map[r * cols + c]])
    }

    pub fn to_vector(&self, m: &ComplexMatrix) -> ComplexVector {
        let mut v = ComplexVector::zeros(self.map.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                v[self.map[r * self.cols + c]] = m[(r, c)];
            }
        }
        v
    }
}

/// Rotates columns `p < q` of a column-major buffer with `rows` rows by the
/// 2×2 unitary `[[c, s·e^{iθ}], [-s·e^{-iθ}, c]]`.
fn rotate_columns(data: &mut [C64], rows: usize, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    let sp = phase * s;
    let sm = phase.conj() * s;
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = xp * c - xq * sm;
        *y = xp * sp + xq * c;
    }
}

/// One-sided (Hestenes) Jacobi SVD for `m ≥ n`: columns are rotated pairwise
/// until mutually orthogonal, so `M·V` has orthogonal columns of length `σⱼ`.
/// Returns `(U, σ, V)` with `M = U·diag(σ)·V†`, in the backend's column order;
/// `U` and `V` are only formed when `vectors` is set.
fn jacobi_svd_tall(m: &ComplexMatrix, vectors: bool) -> (Option<ComplexMatrix>, Vec<f64>, Option<ComplexMatrix>) {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = vectors.then(|| ComplexMatrix::identity(cols, cols));
    let mut norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm_squared()).collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta) = (norms[p], norms[q]);
                let data = a.as_slice();
                let gamma: C64 = data[p * rows..(p + 1) * rows]
                    .iter()
                    .zip(&data[q * rows..(q + 1) * rows])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate_columns(a.as_mut_slice(), rows, p, q, c, sn, phase);
                if let Some(v) = v.as_mut() {
                    rotate_columns(v.as_mut_slice(), cols, p, q, c, sn, phase);
                }
                norms[p] = a.column(p).norm_squared();
                norms[q] = a.column(q).norm_squared();
            }
        }
        if !rotated {
            break;
        }
    }
    let values: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    if !vectors {
        return (None, values, None);
    }
    // Columns this small carry no usable direction; they are completed below.
    let floor = values.iter().copied().fold(0.0, f64::max) * 1e-14;
    let mut u = ComplexMatrix::zeros(rows, cols);
    let mut missing = Vec::new();
    for j in 0..cols {
        if values[j] > floor {
            u.set_column(j, &a.column(j).unscale(values[j]));
        } else {
            missing.push(j);
        }
    }
    // Complete U on zero singular values with Gram-Schmidt over basis vectors.
    let mut e = 0;
    for j in missing {
        while e < rows {
            let mut w = ComplexVector::zeros(rows);
            w[e] = ONE;
            e += 1;
            for k in 0..cols {
                let col = u.column(k).into_owned();
                let proj = col.dotc(&w);
                w -= col * proj;
            }
            let n = w.norm();
            if n > 1e-8 {
                u.set_column(j, &w.unscale(n));
                break;
            }
        }
    }
    (Some(u), values, v)
}

/// SVD as `(U, σ, V)` with `M = U·diag(σ)·V†`. nalgebra's bidiagonal SVD
/// loses up to ~1e-3 accuracy on rank-deficient or nearly degenerate complex
/// inputs, which are exactly the Schmidt matrices this crate works with, so a
/// one-sided Jacobi iteration is used instead.
fn jacobi_svd(m: &ComplexMatrix, vectors: bool) -> (Option<ComplexMatrix>, Vec<f64>, Option<ComplexMatrix>) {
    if m.nrows() >= m.ncols() {
        jacobi_svd_tall(m, vectors)
    } else {
        let (u, s, v) = jacobi_svd_tall(&m.adjoint(), vectors);
        (v, s, u)
    }
}

/// Singular triplets sorted by descending singular value.
#[derive(Clone, Debug)]
pub struct SortedSvd {
    pub values: Vec<f64>,
    /// Columns are left singular vectors.
    pub u: ComplexMatrix,
    /// Columns are right singular vectors (`m = u·diag(values)·v†`).
    pub v: ComplexMatrix,
}

/// SVD with columns ordered by descending singular value. Ties keep the
/// backend's output order.
pub fn sorted_svd(m: &ComplexMatrix) -> SortedSvd {
    let (u, values, v) = jacobi_svd(m, true);
    let (u, v) = (u.expect("vectors requested"), v.expect("vectors requested"));
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let k = order.len();
    SortedSvd {
        values: order.iter().map(|&i| values[i]).collect(),
        u: ComplexMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]),
        v: ComplexMatrix::from_fn(v.nrows(), k, |r, c| v[(r, order[c])]),
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s = jacobi_svd(m, false).1;
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigendecomposition with a fallback: nalgebra's tridiagonalization can
/// produce NaN on some exactly structured inputs (e.g. `P₊⊗P₊`). When that
/// happens the matrix is conjugated by a fixed pseudo-random unitary first.
fn robust_symmetric_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|x| x.is_finite()) && eig.eigenvectors.iter().all(|z| z.is_finite()) {
        return (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors);
    }
    let mut rng = crate::rng::stream_rng(0x5eed, u64::MAX, m.nrows() as u64);
    let u = crate::rng::haar_unitary(&mut rng, m.nrows());
    let rotated = u.adjoint() * m * &u;
    let rotated = (&rotated + rotated.adjoint()) * c64(0.5, 0.0);
    let eig = SymmetricEigen::new(rotated);
    (eig.eigenvalues.iter().copied().collect(), u * eig.eigenvectors)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut e = robust_symmetric_eigen(m).0;
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Ascending eigenvalues with the matching eigenvectors as columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let (vals, vecs) = robust_symmetric_eigen(m);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, c| vecs[(r, order[c])]);
    (order.iter().map(|&i| vals[i]).collect(), sorted)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Nonnegative, descending.
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<ComplexVector>,
    pub right_vectors: Vec<ComplexVector>,
}

impl SchmidtDecomposition {
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// `Σ_{i<k} μ_i²`.
    pub fn top_weight(&self, k: usize) -> f64 {
        self.coefficients.iter().take(k).map(|c| c * c).sum()
    }
}

/// Schmidt decomposition of `state` across `cut`.
pub fn schmidt(state: &PureState, cut: &Cut) -> Result<SchmidtDecomposition> {
    let reshaper = CutReshaper::new(state.dims(), cut)?;
    let svd = sorted_svd(&reshaper.to_matrix(state.amplitudes()));
    let k = svd.values.len();
    Ok(SchmidtDecomposition {
        coefficients: svd.values.clone(),
        left_vectors: (0..k).map(|i| svd.u.column(i).into_owned()).collect(),
        right_vectors: (0..k).map(|i| svd.v.column(i).map(|z| z.conj())).collect(),
    })
}

/// `|ψ₊⟩ = d^{-1/2} Σ_i |ii⟩`.
pub fn psi_plus(d: usize) -> ComplexVector {
    let a = 1.0 / (d as f64).sqrt();
    ComplexVector::from_fn(d * d, |i, _| if i / d == i % d { c64(a, 0.0) } else { ZERO })
}

/// Single-pair operators on `C^d ⊗ C^d`.
#[derive(Clone, Debug)]
pub struct StandardOps {
    pub d: usize,
    pub identity: ComplexMatrix,
    /// Swap `V|ij⟩ = |ji⟩`.
    pub swap: ComplexMatrix,
    pub p_plus: ComplexMatrix,
    pub p_sym: ComplexMatrix,
    pub p_anti: ComplexMatrix,
    /// `I - P₊`.
    pub p_orth: ComplexMatrix,
}

pub fn standard_ops(d: usize) -> Result<StandardOps> {
    if d < 2 {
        return Err(Error::UnsupportedDimension { d, reason: "local dimension must be at least 2" });
    }
    let n = d * d;
    let identity = ComplexMatrix::identity(n, n);
    let swap = ComplexMatrix::from_fn(n, n, |r, c| {
        if r == (c % d) * d + c / d { ONE } else { ZERO }
    });
    let pp = psi_plus(d);
    let p_plus = &pp * pp.adjoint();
    let half = c64(0.5, 0.0);
    let p_sym = (&identity + &swap) * half;
    let p_anti = (&identity - &swap) * half;
    let p_orth = &identity - &p_plus;
    Ok(StandardOps { d, identity, swap, p_plus, p_sym, p_anti, p_orth })
}
