//! The property suite behind `distilcheck verify` and `distilcheck report`.
//!
//! Each `section_*` function runs one family of checks and returns a
//! [`Section`]: a deterministic results map plus named checks. Checks marked
//! `fatal` are invariants the library guarantees; a violation makes `verify`
//! exit nonzero. Non-fatal checks compare against published reference values
//! and are reported without failing the run.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    chi_overlap, chi_overlap_dense, coherence_term, coherence_term_dense, final_bound, lambda0,
    product_max, product_pair_estimate, superposition_overlap, superposition_overlap_dense, PairObjective, D,
};
use crate::certs::{certify_by_cdf, q_invariance_check, random_index_set, random_state_with_cdf};
use crate::error::Result;
use crate::matrix_iso::{appendix_max, normal_pair_experiment};
use crate::measures::{
    monotonicity_bound, negativity_grid, two_positive_witness, two_positive_witness_closed, witness_scan,
    IsotropicTwoPairState,
};
use crate::projectors::{
    apply_p_plus_on_pair, build_qn_direct, build_qn_direct_dense, build_qn_recursive, build_qn_recursive_dense,
    pair_order_to_cut_order, q_two_pair, qn_gamma, DEFAULT_MEMORY_CAP,
};
use crate::rng::{gaussian_vector, haar_unitary, haar_vector, module_id, stream_rng};
use crate::sropt::{equality_state, max_overlap_rank_k, overlap, random_rank_k_two_pair, SeesawConfig};
use crate::tensor::{
    hermitian_eigenvalues, max_abs_diff, max_abs_diff_vec, schmidt, standard_ops, tensor_product, ComplexVector,
    Cut, LinearOperator, ZERO_TOL,
};

/// Named tolerances with their defaults. `--tol name=value` overrides them.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("consistency", 1e-12),
    ("spectrum", 1e-10),
    ("product_gap", 1e-6),
    ("excess", 1e-9),
    ("rank2_gap", 1e-6),
    ("equality", 1e-12),
    ("appendix", 1e-6),
    ("certificate", 1e-10),
    ("invariance", 1e-10),
    ("closed_form", 1e-12),
    ("negativity", 1e-10),
    ("trace_q", 1e-12),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    /// Overrides one tolerance. Unknown names and non-positive values are
    /// rejected.
    pub fn set(&mut self, name: &str, value: f64) -> std::result::Result<(), String> {
        if !self.0.contains_key(name) {
            let known: Vec<&str> = self.0.keys().map(String::as_str).collect();
            return Err(format!("unknown tolerance '{name}' (known: {})", known.join(", ")));
        }
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance '{name}' must be positive, got {value}"));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }
}

/// Sample and restart counts for the suite.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteScale {
    pub product_restarts: usize,
    pub rank2_restarts: usize,
    pub normal_samples: usize,
    pub appendix_starts: usize,
    pub cert_states: usize,
    pub conjugations: usize,
    pub closed_form_instances: usize,
    pub pair_restarts: usize,
    pub grid_steps: usize,
    pub monotonicity_states: usize,
}

impl SuiteScale {
    pub fn full() -> Self {
        Self {
            product_restarts: 20,
            rank2_restarts: 200,
            normal_samples: 100_000,
            appendix_starts: 200,
            cert_states: 1000,
            conjugations: 50,
            closed_form_instances: 1000,
            pair_restarts: 500,
            grid_steps: 20,
            monotonicity_states: 1000,
        }
    }

    pub fn quick() -> Self {
        Self {
            product_restarts: 6,
            rank2_restarts: 24,
            normal_samples: 5000,
            appendix_starts: 20,
            cert_states: 60,
            conjugations: 10,
            closed_form_instances: 100,
            pair_restarts: 40,
            grid_steps: 6,
            monotonicity_states: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Invariant (true) or reference comparison (false).
    pub fatal: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Section {
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
}

impl Section {
    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.results.insert(key.to_string(), v);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, fatal: true, detail });
    }

    pub fn reference(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, fatal: false, detail });
    }

    /// Folds `other` in with its keys and check names prefixed by `prefix.`.
    pub fn absorb(&mut self, prefix: &str, other: Section) {
        for (k, v) in other.results {
            self.results.insert(format!("{prefix}.{k}"), v);
        }
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
    }

    pub fn failed_invariants(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.fatal && !c.passed).collect()
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Recursive and direct constructions of `Q₂` and `Q₃` against each other and
/// against the explicit tensor-product forms.
pub fn section_qn_consistency(tol: &Tolerances, seed: u64) -> Result<Section> {
    let mut s = Section::default();
    let eps = tol.get("consistency");
    let d = 4;
    let rec = build_qn_recursive_dense(2, d, DEFAULT_MEMORY_CAP)?;
    let dir = build_qn_direct_dense(2, d, DEFAULT_MEMORY_CAP)?;
    let ops = standard_ops(d)?;
    let explicit = pair_order_to_cut_order(
        &(tensor_product(&ops.p_orth, &ops.p_plus)? + tensor_product(&ops.p_plus, &ops.p_orth)?),
        d,
        2,
    )?;
    let rec_dir = max_abs_diff(&rec, &dir);
    let rec_explicit = max_abs_diff(&rec, &explicit);
    s.put("q2_recursive_vs_direct", rec_dir);
    s.put("q2_vs_two_term_form", rec_explicit);
    s.check("q2_recursive_vs_direct", rec_dir <= eps, format!("max entry difference {rec_dir:e} (tol {eps:e})"));
    s.check("q2_two_term_form", rec_explicit <= eps, format!("max entry difference {rec_explicit:e} (tol {eps:e})"));

    // Q₃ = O O P + O P O + P O O + P P P, applied word by word.
    let q3_rec = build_qn_recursive(3, d)?;
    let q3_dir = build_qn_direct(3, d)?;
    let four_term = |v: &ComplexVector| -> ComplexVector {
        let words: [[bool; 3]; 4] = [[false, false, true], [false, true, false], [true, false, false], [true, true, true]];
        let mut out = ComplexVector::zeros(v.len());
        for word in words {
            let mut w = v.clone();
            for (pair, &is_p) in word.iter().enumerate() {
                let pw = apply_p_plus_on_pair(&w, d, 3, pair);
                w = if is_p { pw } else { &w - pw };
            }
            out += w;
        }
        out
    };
    let mut q3_err: f64 = 0.0;
    for i in 0..3 {
        let mut rng = stream_rng(seed, module_id::TESTS, 100 + i);
        let v = gaussian_vector(&mut rng, d.pow(6));
        let reference = four_term(&v);
        q3_err = q3_err
            .max(max_abs_diff_vec(&q3_rec.apply(&v), &reference))
            .max(max_abs_diff_vec(&q3_dir.apply(&v), &reference));
    }
    s.put("q3_vs_four_term_form", q3_err);
    s.check("q3_four_term_form", q3_err <= eps, format!("max difference on random vectors {q3_err:e} (tol {eps:e})"));
    Ok(s)
}

/// Dense eigensolve of `Q₂^Γ`: eigenvalues 3/8, 1/8, -5/8 with multiplicities
/// 100, 120, 36.
pub fn section_gamma_spectrum(tol: &Tolerances) -> Result<Section> {
    let mut s = Section::default();
    let eps = tol.get("spectrum");
    let gamma = qn_gamma(&q_two_pair(4)?, 4, 2)?;
    let eig = hermitian_eigenvalues(&gamma);
    let expected = [(0.375, 100usize), (0.125, 120), (-0.625, 36)];
    let mut counts = Vec::new();
    for (lam, _) in expected {
        counts.push(eig.iter().filter(|&&e| (e - lam).abs() <= eps).count());
    }
    let unmatched = eig.len() - counts.iter().sum::<usize>();
    s.put("eigenvalues", expected.iter().map(|e| e.0).collect::<Vec<_>>());
    s.put("multiplicities", &counts);
    s.put("unmatched", unmatched);
    let ok = counts == [100, 120, 36] && unmatched == 0;
    s.check("q2_gamma_spectrum", ok, format!("multiplicities {counts:?}, {unmatched} unmatched (tol {eps:e})"));
    Ok(s)
}

/// Rank-one seesaw on `Qₙ`, n = 1, 2, 3, against `(1 - 2⁻ⁿ)/2`.
pub fn section_product_maxima(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    let mut s = Section::default();
    let gap = tol.get("product_gap");
    let excess = tol.get("excess");
    for n in 1..=3 {
        let r = product_max(n, scale.product_restarts, seed)?;
        let name = format!("n{n}");
        s.put(&name, &r);
        s.check(
            &format!("{name}_reaches_lambda0"),
            (r.numerical - r.closed_form).abs() <= gap,
            format!("seesaw {:.12} vs {:.12} (tol {gap:e})", r.numerical, r.closed_form),
        );
        s.check(
            &format!("{name}_never_exceeds_lambda0"),
            r.numerical <= lambda0(n, D) + excess,
            format!("excess {:e} (tol {excess:e})", r.numerical - r.closed_form),
        );
    }
    Ok(s)
}

/// Rank-two seesaw on `Q₂`. A value above 1/2 would be a counterexample
/// candidate and fails the suite.
pub fn section_rank2_probe(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    let mut s = Section::default();
    let q = q_two_pair(4)?;
    let config = SeesawConfig::default().with_restarts(scale.rank2_restarts).with_seed(seed);
    let report = max_overlap_rank_k(&q, &[4; 4], &Cut::two_pair(), 2, &config)?;
    let best = report.best_value;
    let gap = tol.get("rank2_gap");
    let excess = tol.get("excess");
    s.put("best_value", best);
    s.put("best_restart", report.best_restart);
    s.put("restarts", report.restarts);
    s.check("rank2_reaches_half", best >= 0.5 - gap, format!("best {best:.12} (tol {gap:e})"));
    let over = report.outcomes.iter().filter(|o| o.value > 0.5 + excess).count();
    s.check(
        "rank2_no_counterexample",
        over == 0,
        if over == 0 {
            format!("no restart above 1/2 + {excess:e}")
        } else {
            format!("{over} restarts above 1/2 + {excess:e}: potential counterexample, best {best:.15}")
        },
    );
    Ok(s)
}

/// The equality family `√r|01⟩ψ₊² + √(1-r)ψ₊²|01⟩`.
pub fn section_equality_family(tol: &Tolerances) -> Result<Section> {
    let mut s = Section::default();
    let eps = tol.get("equality");
    let q = q_two_pair(4)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut ranks_ok = true;
    for r in [0.0, 0.25, 0.5, 1.0] {
        let phi = equality_state(r)?;
        let ov = overlap(&phi, &q)?;
        let rank = schmidt(&phi, &Cut::two_pair())?.rank(ZERO_TOL);
        worst = worst.max((ov - 0.5).abs());
        ranks_ok &= rank == 2;
        rows.push(json!({ "r": r, "overlap": ov, "schmidt_rank": rank }));
    }
    s.put("states", rows);
    s.check("equality_overlap_half", worst <= eps, format!("max |overlap - 1/2| = {worst:e} (tol {eps:e})"));
    s.check("equality_schmidt_rank_two", ranks_ok, "Schmidt rank across AA':BB'".into());
    Ok(s)
}

/// Random constrained normal pairs: `σ₁² + σ₂² ≤ 1/2` with a supremum close
/// to 1/2.
pub fn section_normal_case(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    let mut s = Section::default();
    let excess = tol.get("excess");
    let summary = normal_pair_experiment(scale.normal_samples, 4, seed);
    let over = summary.max_value - 0.5;
    s.put("samples", summary.samples);
    s.put("max_value", summary.max_value);
    s.put("exceedances", summary.exceedances.len());
    s.check("normal_pairs_bounded", over <= excess, format!("max {:.12} (tol {excess:e})", summary.max_value));
    s.check("normal_pairs_supremum_above_0_49", summary.max_value > 0.49, format!("max {:.6}", summary.max_value));
    Ok(s)
}

/// Constrained maximum from the appendix against `(3d - 4)/d²`.
pub fn section_appendix(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    let mut s = Section::default();
    let eps = tol.get("appendix");
    for d in [3, 4, 5] {
        let r = appendix_max(d, scale.appendix_starts, seed)?;
        let dev = r.max_deviation();
        s.put(&format!("d{d}"), &r);
        s.check(&format!("d{d}_matches_closed_form"), dev <= eps, format!("max deviation {dev:e} (tol {eps:e})"));
        if d == 4 {
            s.check("d4_closed_form_is_half", r.closed_form == 0.5, format!("(3d-4)/d² = {}", r.closed_form));
        }
    }
    Ok(s)
}

/// cdf certificates on random states with at most two common degrees of
/// freedom per pair, plus local-unitary invariance of `Q`.
pub fn section_certificates(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    use rayon::prelude::*;
    let mut s = Section::default();
    let eps = tol.get("certificate");
    let rows: Vec<(bool, f64)> = (0..scale.cert_states)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::CERTS, (1 << 36) + i as u64);
            let ab = random_index_set(&mut rng, 4, 2);
            let apbp = random_index_set(&mut rng, 4, 2);
            let phi = random_state_with_cdf(&mut rng, 4, &ab, &apbp)?;
            let c = certify_by_cdf(&phi, eps)?;
            Ok((c.certified, c.overlap))
        })
        .collect::<Result<_>>()?;
    let refused = rows.iter().filter(|r| !r.0).count();
    let max_overlap = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    s.put("states", rows.len());
    s.put("refused", refused);
    s.put("max_overlap", max_overlap);
    s.check("cdf_certificates_issued", refused == 0, format!("{refused} of {} refused", rows.len()));
    s.check(
        "cdf_overlaps_bounded",
        max_overlap <= 0.5 + eps,
        format!("max direct overlap {max_overlap:.12} (tol {eps:e})"),
    );

    let inv = tol.get("invariance");
    let residuals: Vec<f64> = (0..scale.conjugations)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::CERTS, (2 << 36) + i as u64);
            let u = haar_unitary(&mut rng, 4);
            let v = haar_unitary(&mut rng, 4);
            q_invariance_check(&u, &v)
        })
        .collect::<Result<_>>()?;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    s.put("conjugations", residuals.len());
    s.put("max_invariance_residual", worst);
    s.check("q_local_unitary_invariance", worst < inv, format!("max residual {worst:e} (tol {inv:e})"));
    Ok(s)
}

fn orthogonal_to(v: &ComplexVector, to: &ComplexVector) -> ComplexVector {
    let t = to.normalize();
    let w = v - &t * t.dotc(v);
    w.normalize()
}

/// Closed forms against dense evaluation on random maximal-form instances,
/// the γ pipeline and the two soft targets.
pub fn section_bound_pipeline(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    use rayon::prelude::*;
    let mut s = Section::default();
    let eps = tol.get("closed_form");
    let errors: Vec<[f64; 3]> = (0..scale.closed_form_instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::BOUNDS, (3 << 32) + i as u64);
            let n = 1 + i % 2;
            let psis: Vec<ComplexVector> = (0..n).map(|_| haar_vector(&mut rng, D)).collect();
            let mut tildes: Vec<ComplexVector> = (0..n).map(|_| haar_vector(&mut rng, D)).collect();
            // General overlaps for the coherence term.
            let coh = (coherence_term(&psis, &tildes)? - coherence_term_dense(&psis, &tildes)?.re).abs();
            // Orthogonal on one copy for the superposition value.
            let k = i % n;
            tildes[k] = orthogonal_to(&tildes[k], &psis[k]);
            let p: f64 = rand::Rng::random(&mut rng);
            let sup = (superposition_overlap(p, &psis, &tildes)? - superposition_overlap_dense(p, &psis, &tildes)?).abs();
            let x = haar_vector(&mut rng, D);
            let y = haar_vector(&mut rng, D);
            let xt = haar_vector(&mut rng, D);
            let yt = haar_vector(&mut rng, D);
            let chi = (chi_overlap(&x, &y, &xt, &yt)? - chi_overlap_dense(&x, &y, &xt, &yt)?.re).abs();
            Ok([coh, sup, chi])
        })
        .collect::<Result<_>>()?;
    let worst = |j: usize| errors.iter().map(|e| e[j]).fold(0.0, f64::max);
    let (coh, sup, chi) = (worst(0), worst(1), worst(2));
    s.put("closed_form_instances", errors.len());
    s.put("max_coherence_error", coh);
    s.put("max_superposition_error", sup);
    s.put("max_chi_error", chi);
    s.check("coherence_closed_form", coh <= eps, format!("max error {coh:e} (tol {eps:e})"));
    s.check("superposition_closed_form", sup <= eps, format!("max error {sup:e} (tol {eps:e})"));
    s.check("chi_closed_form", chi <= eps, format!("max error {chi:e} (tol {eps:e})"));

    let fb = final_bound()?;
    s.put("final_bound", fb.resulting_bound);
    s.put("final_bound_gamma", fb.gamma);
    s.put("final_bound_f_of_gamma", fb.f_of_gamma);
    let crossing = (fb.f_of_gamma - fb.gamma).abs();
    s.check("final_bound_crossing", crossing <= 1e-7, format!("|f(γ*) - γ*| = {crossing:e} after bisection to 1e-10 in γ"));
    let in_range = (0.7496..=0.7498).contains(&fb.resulting_bound);
    s.reference(
        "final_bound_reference_0_74971",
        in_range,
        format!("computed {:.7} at γ* = {:.7}; reference window [0.7496, 0.7498]", fb.resulting_bound, fb.gamma),
    );

    let sum = product_pair_estimate(PairObjective::DiagonalPlusCoherence, scale.pair_restarts, seed)?;
    let coherence = product_pair_estimate(PairObjective::Coherence, scale.pair_restarts, seed)?;
    let five_eighths = 0.375 + coherence.value;
    s.put("product_pair_sum_estimate", &sum);
    s.put("product_pair_coherence_estimate", &coherence);
    s.put("separate_terms_bound", five_eighths);
    s.reference(
        "soft_target_17_32",
        (sum.value - 17.0 / 32.0).abs() <= 2e-3,
        format!("estimate {:.7} vs 17/32 = 0.53125 ({} restarts)", sum.value, sum.restarts),
    );
    s.reference(
        "soft_target_5_8",
        (five_eighths - 0.625).abs() <= 2e-3,
        format!("3/8 + {:.7} = {five_eighths:.7} vs 5/8 ({} restarts)", coherence.value, coherence.restarts),
    );
    Ok(s)
}

/// Negativity closed form on a (p, s) grid, `tr(σQ) = p`, the witness scan
/// and the monotonicity bound on random rank-two states.
pub fn section_measures(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    use rayon::prelude::*;
    let mut s = Section::default();
    let neg = tol.get("negativity");
    let tq = tol.get("trace_q");
    let grid = negativity_grid(scale.grid_steps)?;
    s.put("grid_steps", grid.steps);
    s.put("grid_points", grid.points.len());
    s.put("max_negativity_error", grid.max_negativity_error);
    s.put("max_trace_q_error", grid.max_trace_q_error);
    s.check(
        "negativity_closed_form",
        grid.max_negativity_error <= neg,
        format!("max error {:e} (tol {neg:e})", grid.max_negativity_error),
    );
    s.check("trace_sigma_q_equals_p", grid.max_trace_q_error <= tq, format!("max error {:e} (tol {tq:e})", grid.max_trace_q_error));

    let mut witness_err: f64 = 0.0;
    for (p, sv) in [(0.74, 0.0), (0.76, 0.0), (0.5, 0.3), (0.8, 0.1), (0.2, 0.05)] {
        let st = IsotropicTwoPairState::new(4, p, sv)?;
        witness_err = witness_err.max((two_positive_witness(&st)? - two_positive_witness_closed(&st)).abs());
    }
    s.put("witness_closed_form_error", witness_err);
    s.check("witness_closed_form", witness_err <= 1e-10, format!("max error {witness_err:e}"));

    let rows = witness_scan(&[0.74, 0.76], 20)?;
    s.put("witness_scan", &rows);
    let flips = !rows[0].detects_for_some_s && rows[1].detects_for_all_s;
    s.reference(
        "witness_sign_flip_0_74_to_0_76",
        flips,
        format!(
            "min eigenvalue over s: {:.6} at p = 0.74, {:.6} at p = 0.76; at s = 0: {:.6}, {:.6}",
            rows[0].min_eigenvalue, rows[1].min_eigenvalue, rows[0].at_s_zero, rows[1].at_s_zero
        ),
    );

    let reports: Vec<bool> = (0..scale.monotonicity_states)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, module_id::MEASURES, (1 << 40) + i as u64);
            let phi = random_rank_k_two_pair(&mut rng, 4, 2)?;
            Ok(monotonicity_bound(&phi)?.holds)
        })
        .collect::<Result<_>>()?;
    let violations = reports.iter().filter(|h| !**h).count();
    s.put("monotonicity_states", reports.len());
    s.put("monotonicity_violations", violations);
    s.check("monotonicity_bound", violations == 0, format!("{violations} of {} states violate", reports.len()));
    Ok(s)
}

/// Every section, keyed by its name.
pub fn run_all(tol: &Tolerances, scale: &SuiteScale, seed: u64) -> Result<Section> {
    let mut all = Section::default();
    all.absorb("qn_consistency", section_qn_consistency(tol, seed)?);
    all.absorb("gamma_spectrum", section_gamma_spectrum(tol)?);
    all.absorb("product_maxima", section_product_maxima(tol, scale, seed)?);
    all.absorb("rank2_probe", section_rank2_probe(tol, scale, seed)?);
    all.absorb("equality_family", section_equality_family(tol)?);
    all.absorb("normal_case", section_normal_case(tol, scale, seed)?);
    all.absorb("appendix", section_appendix(tol, scale, seed)?);
    all.absorb("certificates", section_certificates(tol, scale, seed)?);
    all.absorb("bound_pipeline", section_bound_pipeline(tol, scale, seed)?);
    all.absorb("measures", section_measures(tol, scale, seed)?);
    Ok(all)
}
