//! Randomized properties over seeds and parameters.

use distilcheck::bounds::{
    block_value, block_value_by_search, coherence_term, coherence_term_dense, lambda0, superposition_overlap,
    superposition_overlap_dense, D,
};
use distilcheck::certs::{certify_by_cdf, q_invariance_check, random_index_set, random_state_with_cdf};
use distilcheck::io::{state_from_json, state_to_json};
use distilcheck::matrix_iso::{appendix_objective, random_eig_tuple, sample_normal_pair, top2_singular_sq_sum};
use distilcheck::measures::{negativity_sigma, negativity_sigma_dense, twirl_state, IsotropicTwoPairState};
use distilcheck::projectors::q_two_pair;
use distilcheck::rng::{haar_unitary, haar_vector, stream_rng};
use distilcheck::sropt::{overlap, random_rank_k_two_pair};
use distilcheck::tensor::{
    max_abs_diff, partial_trace, partial_transpose, schmidt, trace, ComplexVector, Cut, ZERO_TOL,
};
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn orthogonalize(v: &ComplexVector, to: &ComplexVector) -> ComplexVector {
    let t = to.normalize();
    (v - &t * t.dotc(v)).normalize()
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn partial_transpose_is_an_involution_preserving_trace(seed in any::<u64>(), side in 0usize..4) {
        let mut rng = stream_rng(seed, 0, 0);
        let phi = random_rank_k_two_pair(&mut rng, 2, 2).unwrap();
        let rho = phi.density_matrix();
        let dims = [2; 4];
        let t = partial_transpose(&rho, &dims, &[side]).unwrap();
        let back = partial_transpose(&t, &dims, &[side]).unwrap();
        prop_assert!(max_abs_diff(&rho, &back) == 0.0);
        prop_assert!((trace(&t) - trace(&rho)).norm() < 1e-12);
        let reduced = partial_trace(&rho, &dims, &[side]).unwrap();
        prop_assert!((trace(&reduced).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_weights_sum_to_one_and_rank_is_bounded(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = stream_rng(seed, 0, 1);
        let phi = random_rank_k_two_pair(&mut rng, 4, k).unwrap();
        let dec = schmidt(&phi, &Cut::two_pair()).unwrap();
        let total: f64 = dec.coefficients.iter().map(|c| c * c).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "weight {} coefficients {:?}", total, &dec.coefficients[..5]);
        prop_assert_eq!(dec.rank(ZERO_TOL), k);
        prop_assert!(dec.coefficients.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn state_json_round_trip_is_exact(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0, 2);
        let phi = random_rank_k_two_pair(&mut rng, 4, 2).unwrap();
        let back = state_from_json(&state_to_json(&phi).unwrap()).unwrap();
        prop_assert_eq!(back.amplitudes(), phi.amplitudes());
        prop_assert_eq!(back.dims(), phi.dims());
    }

    #[test]
    fn coherence_closed_form_matches_dense(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = stream_rng(seed, 0, 3);
        let psis: Vec<ComplexVector> = (0..n).map(|_| haar_vector(&mut rng, D)).collect();
        let tildes: Vec<ComplexVector> = (0..n).map(|_| haar_vector(&mut rng, D)).collect();
        let closed = coherence_term(&psis, &tildes).unwrap();
        let dense = coherence_term_dense(&psis, &tildes).unwrap();
        prop_assert!((closed - dense.re).abs() < 1e-12 && dense.im.abs() < 1e-12);
    }

    #[test]
    fn superposition_closed_form_matches_dense(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let mut rng = stream_rng(seed, 0, 4);
        let psis = vec![haar_vector(&mut rng, D), haar_vector(&mut rng, D)];
        let mut tildes = vec![haar_vector(&mut rng, D), haar_vector(&mut rng, D)];
        tildes[1] = orthogonalize(&tildes[1], &psis[1]);
        let closed = superposition_overlap(p, &psis, &tildes).unwrap();
        let dense = superposition_overlap_dense(p, &psis, &tildes).unwrap();
        prop_assert!((closed - dense).abs() < 1e-12);
        prop_assert!(closed <= 0.75);
    }

    #[test]
    fn block_value_closed_form_matches_search(q11 in 0.0f64..1.0, q22 in 0.0f64..1.0, q12 in -0.5f64..0.5) {
        let closed = block_value(q11, q22, q12);
        prop_assert!(closed >= q11.max(q22) - 1e-12);
        prop_assert!((closed - block_value_by_search(q11, q22, q12)).abs() < 1e-9);
    }

    #[test]
    fn negativity_closed_form_matches_dense(p in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let s = (1.0 - p) * t;
        let st = IsotropicTwoPairState::new(4, p, s).unwrap();
        let closed = negativity_sigma(&st).unwrap();
        let dense = negativity_sigma_dense(&st).unwrap();
        prop_assert!((closed - dense).abs() < 1e-10, "p={} s={} closed={} dense={}", p, s, closed, dense);
    }

    #[test]
    fn normal_pairs_never_exceed_half(seed in any::<u64>(), d in 3usize..=5) {
        let mut rng = stream_rng(seed, 0, 5);
        let pair = sample_normal_pair(&mut rng, d);
        prop_assert!(pair.is_normal(1e-9));
        // Two largest eigenvalues of A⊗I + I⊗B either share an index, bounded
        // by (3d-4)/d², or not, bounded by 2/d. Both equal 1/2 at d = 4.
        let df = d as f64;
        let bound = (2.0 / df).max((3.0 * df - 4.0) / (df * df));
        prop_assert!(top2_singular_sq_sum(&pair) <= bound + 1e-9);
    }

    #[test]
    fn appendix_objective_respects_closed_form(seed in any::<u64>(), d in 3usize..=6) {
        let mut rng = stream_rng(seed, 0, 6);
        let (a, b) = random_eig_tuple(&mut rng, d);
        let df = d as f64;
        prop_assert!(appendix_objective(&a, &b) <= (3.0 * df - 4.0) / (df * df) + 1e-9);
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn twirl_weight_equals_q_overlap(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0, 7);
        let phi = random_rank_k_two_pair(&mut rng, 4, 2).unwrap();
        let q = q_two_pair(4).unwrap();
        let tw = twirl_state(&phi).unwrap();
        prop_assert!((tw.p - overlap(&phi, &q).unwrap()).abs() < 1e-10);
        prop_assert!(tw.s >= -1e-12 && tw.s <= 1.0 - tw.p + 1e-12);
    }

    #[test]
    fn cdf_certificates_hold_and_bound_overlap(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0, 8);
        let ab = random_index_set(&mut rng, 4, 2);
        let apbp = random_index_set(&mut rng, 4, 2);
        let phi = random_state_with_cdf(&mut rng, 4, &ab, &apbp).unwrap();
        let c = certify_by_cdf(&phi, 1e-10).unwrap();
        prop_assert!(c.certified, "{:?}", c.refusal);
        prop_assert!(c.overlap <= 0.5 + 1e-10);
    }

    #[test]
    fn q_is_invariant_under_local_unitaries(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0, 9);
        let u = haar_unitary(&mut rng, 4);
        let v = haar_unitary(&mut rng, 4);
        prop_assert!(q_invariance_check(&u, &v).unwrap() < 1e-10);
    }

    #[test]
    fn random_rank_two_overlap_stays_below_half(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0, 10);
        let phi = random_rank_k_two_pair(&mut rng, 4, 2).unwrap();
        prop_assert!(overlap(&phi, &q_two_pair(4).unwrap()).unwrap() <= 0.5 + 1e-9);
        let product = random_rank_k_two_pair(&mut rng, 4, 1).unwrap();
        prop_assert!(overlap(&product, &q_two_pair(4).unwrap()).unwrap() <= lambda0(2, 4) + 1e-9);
    }
}
