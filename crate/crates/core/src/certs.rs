//! Certificates that a two-pair state has overlap at most 1/2 with `Q`, from
//! its structure alone.
//!
//! * Common degrees of freedom: the indices `i` with weight on `|ii⟩` of a
//!   pair. With at most `d/2` of them on each pair, `⟨φ|Q|φ⟩ = ½⟨φ|Q̃|φ⟩` for a
//!   projector `Q̃` built from maximally entangled states on `d/2`-level
//!   blocks.
//! * Single-subsystem Schmidt ranks: when one side of each pair is supported
//!   on at most `d/2` levels, a local unitary of the form `U⊗V⊗U*⊗V*` (which
//!   leaves `Q` invariant) moves that support onto the first `d/2` levels and
//!   the cdf certificate applies.
//! * Normal projection: delegated to [`crate::matrix_iso`].

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix_iso::{is_normal_projection, Normality};
use crate::projectors::{pair_order_to_cut_order, q_two_pair};
use crate::rng::complex_gaussian;
use crate::sropt::overlap;
use crate::tensor::{
    c64, max_abs_diff, projector_residual, schmidt, sorted_svd, tensor_all, tensor_product,
    unitarity_residual, ComplexMatrix, ComplexVector, Cut, CutReshaper, PureState,
};

/// Which pair of a two-pair state (cut order `A, A', B, B'`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pair {
    AB,
    APrimeBPrime,
}

impl Pair {
    fn positions(self) -> (usize, usize) {
        match self {
            Pair::AB => (0, 2),
            Pair::APrimeBPrime => (1, 3),
        }
    }
}

fn two_pair_dim(phi: &PureState) -> Result<usize> {
    let dims = phi.dims();
    if dims.len() != 4 || dims.iter().any(|&x| x != dims[0]) {
        return Err(Error::Dimension(format!("expected a two-pair state, got dims {dims:?}")));
    }
    Ok(dims[0])
}

/// Per-index weights `⟨φ|(|ii⟩⟨ii| ⊗ I)|φ⟩` on the chosen pair.
pub fn diagonal_weights(phi: &PureState, pair: Pair) -> Result<Vec<f64>> {
    let d = two_pair_dim(phi)?;
    let (pa, pb) = pair.positions();
    let mut w = vec![0.0; d];
    for (flat, amp) in phi.amplitudes().iter().enumerate() {
        let digit = |pos: usize| (flat / d.pow(3 - pos as u32)) % d;
        let (a, b) = (digit(pa), digit(pb));
        if a == b {
            w[a] += amp.norm_sqr();
        }
    }
    Ok(w)
}

/// Common degrees of freedom of a pair at threshold `tol`.
pub fn cdf(phi: &PureState, pair: Pair, tol: f64) -> Result<Vec<usize>> {
    Ok(diagonal_weights(phi, pair)?
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > tol)
        .map(|(i, _)| i)
        .collect())
}

/// Extend `set` to exactly `size` indices with the smallest unused ones.
fn extend_set(set: &[usize], size: usize, d: usize) -> Vec<usize> {
    let mut out = set.to_vec();
    for i in 0..d {
        if out.len() >= size {
            break;
        }
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out.sort_unstable();
    out
}

/// `(2/d) Σ_{i,j∈S} |ii⟩⟨jj|` on one pair.
fn block_maximally_entangled(d: usize, set: &[usize]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    let w = c64(1.0 / set.len() as f64, 0.0);
    for &i in set {
        for &j in set {
            m[(i * d + i, j * d + j)] = w;
        }
    }
    m
}

/// `Q̃ = P_{AB}⊗I + I⊗P_{A'B'} - P_{AB}⊗P_{A'B'}` in cut order.
pub fn q_tilde(d: usize, set_ab: &[usize], set_apbp: &[usize]) -> Result<ComplexMatrix> {
    let p1 = block_maximally_entangled(d, set_ab);
    let p2 = block_maximally_entangled(d, set_apbp);
    let id = ComplexMatrix::identity(d * d, d * d);
    let pair_order = tensor_product(&p1, &id)? + tensor_product(&id, &p2)? - tensor_product(&p1, &p2)?;
    pair_order_to_cut_order(&pair_order, d, 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cdf,
    Rank,
    Normal,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub method: Method,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refusal: Option<String>,
    /// Threshold used for cdf membership and numerical ranks.
    pub tolerance: f64,
    /// `⟨φ|Q|φ⟩`, computed directly on the input state.
    pub overlap: f64,
    pub cdf_ab: Vec<usize>,
    pub cdf_apbp: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended_ab: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended_apbp: Option<Vec<usize>>,
    /// `⟨φ|Q̃|φ⟩` on the (possibly rotated) state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tilde_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tilde_residual: Option<f64>,
    /// Single-subsystem Schmidt ranks of `A, A', B, B'`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<[usize; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotated_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normality: Option<Normality>,
}

impl Certificate {
    fn refused(method: Method, tolerance: f64, overlap: f64, reason: String) -> Self {
        Self {
            method,
            certified: false,
            refusal: Some(reason),
            tolerance,
            overlap,
            cdf_ab: Vec::new(),
            cdf_apbp: Vec::new(),
            extended_ab: None,
            extended_apbp: None,
            q_tilde_overlap: None,
            q_tilde_residual: None,
            ranks: None,
            rotated_overlap: None,
            normality: None,
        }
    }
}

fn normalized_two_pair(phi: &PureState) -> Result<(usize, PureState)> {
    let d = two_pair_dim(phi)?;
    Ok((d, phi.normalized()?))
}

/// Certificate from common degrees of freedom, or a refusal when a pair has
/// more than `d/2` of them.
pub fn certify_by_cdf(phi: &PureState, tol: f64) -> Result<Certificate> {
    let (d, phi) = normalized_two_pair(phi)?;
    if d % 2 != 0 {
        return Err(Error::UnsupportedDimension { d, reason: "the cdf certificate needs even d" });
    }
    let q = q_two_pair(d)?;
    let ov = overlap(&phi, &q)?;
    let set_ab = cdf(&phi, Pair::AB, tol)?;
    let set_apbp = cdf(&phi, Pair::APrimeBPrime, tol)?;
    let half = d / 2;
    if set_ab.len() > half || set_apbp.len() > half {
        let mut c = Certificate::refused(
            Method::Cdf,
            tol,
            ov,
            format!(
                "{} and {} common degrees of freedom, at most {half} allowed per pair",
                set_ab.len(),
                set_apbp.len()
            ),
        );
        c.cdf_ab = set_ab;
        c.cdf_apbp = set_apbp;
        return Ok(c);
    }
    let ext_ab = extend_set(&set_ab, half, d);
    let ext_apbp = extend_set(&set_apbp, half, d);
    let qt = q_tilde(d, &ext_ab, &ext_apbp)?;
    let residual = projector_residual(&qt);
    let qt_ov = overlap(&phi, &qt)?;
    let consistent = residual < 1e-10 && (ov - 0.5 * qt_ov).abs() < 1e-10;
    Ok(Certificate {
        method: Method::Cdf,
        certified: consistent && ov <= 0.5 + 1e-10,
        refusal: (!consistent).then(|| "Q̃ identity failed numerically".to_string()),
        tolerance: tol,
        overlap: ov,
        cdf_ab: set_ab,
        cdf_apbp: set_apbp,
        extended_ab: Some(ext_ab),
        extended_apbp: Some(ext_apbp),
        q_tilde_overlap: Some(qt_ov),
        q_tilde_residual: Some(residual),
        ranks: None,
        rotated_overlap: None,
        normality: None,
    })
}

/// Numerical Schmidt ranks of each single subsystem against the rest.
pub fn single_subsystem_ranks(phi: &PureState, tol: f64) -> Result<[usize; 4]> {
    two_pair_dim(phi)?;
    let mut out = [0; 4];
    for (s, r) in out.iter_mut().enumerate() {
        *r = schmidt(phi, &Cut::new(vec![s], 4)?)?.rank(tol);
    }
    Ok(out)
}

/// Left singular vectors of the `(subsystem : rest)` reshape, by descending
/// singular value.
fn support_basis(phi: &PureState, subsystem: usize) -> Result<ComplexMatrix> {
    let reshaper = CutReshaper::new(phi.dims(), &Cut::new(vec![subsystem], 4)?)?;
    Ok(sorted_svd(&reshaper.to_matrix(phi.amplitudes())).u)
}

/// `U_A ⊗ V_{A'} ⊗ U*_B ⊗ V*_{B'}` in cut order.
pub fn local_q_symmetry(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let uc = u.map(|z| z.conj());
    let vc = v.map(|z| z.conj());
    tensor_all(&[u, v, &uc, &vc])
}

/// Certificate from single-subsystem Schmidt ranks.
pub fn certify_by_schmidt_ranks(phi: &PureState, tol: f64) -> Result<Certificate> {
    let (d, phi) = normalized_two_pair(phi)?;
    let q = q_two_pair(d)?;
    let ov = overlap(&phi, &q)?;
    let ranks = single_subsystem_ranks(&phi, tol)?;
    let half = d / 2;
    // For each pair pick the side with small support; the rotation on the
    // other side is the conjugate, as Q's symmetry requires.
    let pick = |a: usize, b: usize| -> Option<usize> {
        if ranks[a] <= half {
            Some(a)
        } else if ranks[b] <= half {
            Some(b)
        } else {
            None
        }
    };
    let (Some(first), Some(second)) = (pick(0, 2), pick(1, 3)) else {
        let mut c = Certificate::refused(
            Method::Rank,
            tol,
            ov,
            format!("single-subsystem ranks {ranks:?} exceed {half} on both sides of a pair"),
        );
        c.ranks = Some(ranks);
        return Ok(c);
    };
    // Rotation R on the chosen side with R·basis = identity; the partner side
    // gets R*. Expressed as U on A-type and its conjugate on B-type slots.
    let rotation = |side: usize| -> Result<ComplexMatrix> {
        let basis = support_basis(&phi, side)?;
        let r = basis.adjoint();
        Ok(if side < 2 { r } else { r.map(|z| z.conj()) })
    };
    let u = rotation(first)?;
    let v = rotation(second)?;
    let w = local_q_symmetry(&u, &v)?;
    let rotated = PureState::two_pair(d, &w * phi.amplitudes())?;
    let mut cert = certify_by_cdf(&rotated, tol)?;
    cert.method = Method::Rank;
    cert.rotated_overlap = Some(cert.overlap);
    cert.overlap = ov;
    cert.ranks = Some(ranks);
    cert.certified = cert.certified && (ov - cert.rotated_overlap.unwrap_or(f64::NAN)).abs() < 1e-10;
    Ok(cert)
}

/// Certificate from normality of the `Q`-projection.
pub fn certify_by_normality(phi: &PureState) -> Result<Certificate> {
    let (_, phi) = normalized_two_pair(phi)?;
    let report = is_normal_projection(&phi)?;
    let mut c = Certificate::refused(Method::Normal, crate::matrix_iso::NORMAL_TOL, report.overlap, String::new());
    c.certified = report.certified && report.overlap <= 0.5 + 1e-10;
    c.refusal = (!c.certified).then(|| format!("projection classified as {:?}", report.classification));
    c.normality = Some(report.classification);
    Ok(c)
}

/// `max |W Q W† - Q|` for `W = U⊗V⊗U*⊗V*`.
pub fn q_invariance_check(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    for m in [u, v] {
        let r = unitarity_residual(m);
        if r > 1e-10 {
            return Err(Error::NotUnitary { residue: r });
        }
    }
    if u.nrows() != v.nrows() {
        return Err(Error::Dimension("U and V must act on the same dimension".into()));
    }
    let q = q_two_pair(u.nrows())?;
    let w = local_q_symmetry(u, v)?;
    Ok(max_abs_diff(&(&w * &q * w.adjoint()), &q))
}

/// Random normalized two-pair state with prescribed common degrees of freedom
/// (a subset of `set_ab` / `set_apbp`): every `|ii⟩` amplitude of a pair
/// outside the given set is zeroed.
pub fn random_state_with_cdf<R: Rng>(rng: &mut R, d: usize, set_ab: &[usize], set_apbp: &[usize]) -> Result<PureState> {
    let mut v = ComplexVector::from_fn(d.pow(4), |_, _| complex_gaussian(rng));
    for (flat, amp) in v.iter_mut().enumerate() {
        let digit = |pos: u32| (flat / d.pow(3 - pos)) % d;
        let (a, ap, b, bp) = (digit(0), digit(1), digit(2), digit(3));
        if (a == b && !set_ab.contains(&a)) || (ap == bp && !set_apbp.contains(&ap)) {
            *amp = c64(0.0, 0.0);
        }
    }
    let n = v.norm();
    PureState::two_pair(d, v.unscale(n))
}

/// Random subset of `0..d` with at most `max` elements.
pub fn random_index_set<R: Rng>(rng: &mut R, d: usize, max: usize) -> Vec<usize> {
    let size = rng.random_range(0..=max.min(d));
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..size {
        let j = rng.random_range(i..d);
        idx.swap(i, j);
    }
    let mut out = idx[..size].to_vec();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{haar_unitary, haar_vector, stream_rng};
    use crate::sropt::{basis_pair, equality_state, two_pair_from_pair_order};
    use crate::tensor::{kron_vec, psi_plus, ZERO_TOL};

    fn psi_plus_pair() -> PureState {
        let pp = psi_plus(4);
        two_pair_from_pair_order(kron_vec(&pp, &pp), 4).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let mut rng = stream_rng(61, 0, 0);
        let s = two_pair_from_pair_order(kron_vec(&basis_pair(4, 0, 0), &haar_vector(&mut rng, 16)), 4).unwrap();
        assert_eq!(cdf(&s, Pair::AB, ZERO_TOL).unwrap(), vec![0]);
        assert_eq!(cdf(&psi_plus_pair(), Pair::AB, ZERO_TOL).unwrap(), vec![0, 1, 2, 3]);
        // |01⟩ carries no diagonal weight, ψ₊ on two levels puts 1/4 on |00⟩ and |11⟩.
        let e = equality_state(0.5).unwrap();
        assert_eq!(cdf(&e, Pair::AB, ZERO_TOL).unwrap(), vec![0, 1]);
        assert_eq!(cdf(&e, Pair::APrimeBPrime, ZERO_TOL).unwrap(), vec![0, 1]);
        let w = diagonal_weights(&e, Pair::AB).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cdf_ignores_basis_phases() {
        let mut rng = stream_rng(62, 0, 0);
        let s = random_state_with_cdf(&mut rng, 4, &[1, 3], &[2]).unwrap();
        let phased = s.amplitudes().map(|z| z * c64(0.0, 1.0).powf(z.re * 7.0));
        let t = PureState::two_pair(4, phased).unwrap();
        for pair in [Pair::AB, Pair::APrimeBPrime] {
            assert_eq!(cdf(&s, pair, ZERO_TOL).unwrap(), cdf(&t, pair, ZERO_TOL).unwrap());
        }
        assert_eq!(cdf(&s, Pair::AB, ZERO_TOL).unwrap(), vec![1, 3]);
    }

    #[test]
    fn low_support_states_are_certified() {
        let mut rng = stream_rng(63, 0, 0);
        for _ in 0..20 {
            let v = ComplexVector::from_fn(256, |i, _| {
                let digit = |p: u32| (i / 4usize.pow(3 - p)) % 4;
                if (0..4).all(|p| digit(p) < 2) { complex_gaussian(&mut rng) } else { c64(0.0, 0.0) }
            });
            let n = v.norm();
            let s = PureState::two_pair(4, v.unscale(n)).unwrap();
            let c = certify_by_cdf(&s, ZERO_TOL).unwrap();
            assert!(c.certified, "{c:?}");
            assert!(c.overlap <= 0.5 + 1e-10);
            assert!((c.overlap - 0.5 * c.q_tilde_overlap.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn psi_plus_pair_is_refused() {
        let s = psi_plus_pair();
        assert!(!certify_by_cdf(&s, ZERO_TOL).unwrap().certified);
        let r = certify_by_schmidt_ranks(&s, ZERO_TOL).unwrap();
        assert!(!r.certified);
        assert_eq!(r.ranks, Some([4, 4, 4, 4]));
    }

    #[test]
    fn random_low_cdf_states_satisfy_identity() {
        let mut rng = stream_rng(64, 0, 0);
        for _ in 0..30 {
            let sa = random_index_set(&mut rng, 4, 2);
            let sb = random_index_set(&mut rng, 4, 2);
            let s = random_state_with_cdf(&mut rng, 4, &sa, &sb).unwrap();
            let c = certify_by_cdf(&s, ZERO_TOL).unwrap();
            assert!(c.certified);
            assert_eq!(c.q_tilde_residual.map(|r| r < 1e-12), Some(true));
        }
    }

    #[test]
    fn extension_appends_smallest_unused() {
        assert_eq!(extend_set(&[3], 2, 4), vec![0, 3]);
        assert_eq!(extend_set(&[], 2, 4), vec![0, 1]);
        assert_eq!(extend_set(&[2, 1], 2, 4), vec![1, 2]);
    }

    fn low_rank_state<R: Rng>(rng: &mut R) -> PureState {
        // A and A' supported on two levels, B and B' arbitrary.
        let v = ComplexVector::from_fn(256, |i, _| {
            let digit = |p: u32| (i / 4usize.pow(3 - p)) % 4;
            if digit(0) < 2 && digit(1) < 2 { complex_gaussian(rng) } else { c64(0.0, 0.0) }
        });
        let n = v.norm();
        PureState::two_pair(4, v.unscale(n)).unwrap()
    }

    #[test]
    fn rank_certificate_survives_local_rotations() {
        let mut rng = stream_rng(65, 0, 0);
        for _ in 0..10 {
            let s = low_rank_state(&mut rng);
            let c = certify_by_schmidt_ranks(&s, ZERO_TOL).unwrap();
            assert!(c.certified, "{c:?}");
            let u = haar_unitary(&mut rng, 4);
            let v = haar_unitary(&mut rng, 4);
            let w = local_q_symmetry(&u, &v).unwrap();
            let moved = PureState::two_pair(4, &w * s.amplitudes()).unwrap();
            let c2 = certify_by_schmidt_ranks(&moved, ZERO_TOL).unwrap();
            assert!(c2.certified);
            assert!((c2.overlap - c.overlap).abs() < 1e-12);
        }
    }

    #[test]
    fn b_side_support_is_also_used() {
        let mut rng = stream_rng(66, 0, 0);
        let v = ComplexVector::from_fn(256, |i, _| {
            let digit = |p: u32| (i / 4usize.pow(3 - p)) % 4;
            if digit(2) >= 2 && digit(3) != 0 && digit(3) != 3 { complex_gaussian(&mut rng) } else { c64(0.0, 0.0) }
        });
        let n = v.norm();
        let s = PureState::two_pair(4, v.unscale(n)).unwrap();
        let u = haar_unitary(&mut rng, 4);
        let w = local_q_symmetry(&u, &haar_unitary(&mut rng, 4)).unwrap();
        let moved = PureState::two_pair(4, &w * s.amplitudes()).unwrap();
        let c = certify_by_schmidt_ranks(&moved, ZERO_TOL).unwrap();
        assert!(c.certified, "{c:?}");
    }

    #[test]
    fn cdf_certified_state_can_have_full_single_ranks() {
        // (|01⟩+|12⟩+|23⟩+|30⟩)/2 on AB has no common degrees of freedom yet
        // every single-subsystem rank on A and B is 4.
        let mut ab = ComplexVector::zeros(16);
        for i in 0..4 {
            ab[i * 4 + (i + 1) % 4] = c64(0.5, 0.0);
        }
        let s = two_pair_from_pair_order(kron_vec(&ab, &basis_pair(4, 0, 0)), 4).unwrap();
        assert!(certify_by_cdf(&s, ZERO_TOL).unwrap().certified);
        let r = certify_by_schmidt_ranks(&s, ZERO_TOL).unwrap();
        assert!(!r.certified);
        assert_eq!(r.ranks.unwrap()[0], 4);
        assert_eq!(r.ranks.unwrap()[2], 4);
    }

    #[test]
    fn invariance_residuals() {
        let id = ComplexMatrix::identity(4, 4);
        assert_eq!(q_invariance_check(&id, &id).unwrap(), 0.0);
        let mut rng = stream_rng(67, 0, 0);
        let u = haar_unitary(&mut rng, 4);
        let v = haar_unitary(&mut rng, 4);
        assert!(q_invariance_check(&u, &v).unwrap() < 1e-10);
        assert!(q_invariance_check(&u, &id).unwrap() < 1e-10);
        let bad = &id * c64(1.1, 0.0);
        assert!(matches!(q_invariance_check(&bad, &id), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn normal_certificate_for_positive_c() {
        let mut rng = stream_rng(68, 0, 0);
        let u = haar_unitary(&mut rng, 16);
        let s = crate::matrix_iso::positive_c_state(
            &u.column(0).into_owned(),
            &u.column(1).into_owned(),
            0.6,
            0.8,
            4,
        )
        .unwrap();
        let c = certify_by_normality(&s).unwrap();
        assert!(c.certified, "{c:?}");
    }
}
