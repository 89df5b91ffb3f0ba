//! Randomized verification of the classification pipeline.
//!
//! [`run_suite`] draws random instances for every `(n, σ, trial)` and checks a
//! fixed list of properties, recording the worst residual and the first
//! counterexample of each. Every trial seeds its own generator from the
//! configuration seed, the property and the trial coordinates, so a report
//! does not depend on the order in which properties run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::thread;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::affine::{act, compose, inverse, transform_worldline, AffineElement, Event, LineKind, WorldLine};
use crate::classify::{
    bracket_closure, case_label, classify_algebra_mutated, collinearity_defect, CaseLabel, Outcome,
    Sigma,
};
use crate::error::{Error, Result};
use crate::groups::{
    boost_closed_form, cartan_decompose_mutated, check_membership_mutated, in_normalizer_mutated,
    k_element, mixing_norm, p_basis, p_generator, random_boost_vector, random_element_with,
    random_k, random_orthogonal, Group,
};
use crate::isotypic::{self, ad_rotation, m3_basis, orthogonality_residual, skew_basis, IsotypicSplit};
use crate::matcore::{block_split, bracket, mat_exp, Metric, SquareMatrix};
use crate::{Mutation, DEFAULT_TOL};

pub const DEFAULT_SIGMAS: [Sigma; 5] = [
    Sigma::Finite(1.0),
    Sigma::Finite(0.5),
    Sigma::Finite(-1.0),
    Sigma::Finite(0.0),
    Sigma::Infinite,
];

pub const DEFAULT_TRIALS: usize = 20;

/// Identifiers of the report entries, in report order.
pub const PROPERTY_IDS: [&str; 11] = [
    "p01_isotypic_equivariance",
    "p02_collinearity",
    "p03_classification_round_trip",
    "p04_normalizer",
    "p05_cartan_round_trip",
    "p06_group_closure",
    "p07_k_intersection",
    "p08_invariant_structures",
    "p09_affine_and_speed",
    "p10_negative_controls",
    "wraparound_demo",
];

/// Boost norm cap for sampled group elements.
const BOOST_BOUND: f64 = 5.0;
/// Cap for factors whose product is tested, keeping products within
/// [`BOOST_BOUND`].
const FACTOR_BOOST_BOUND: f64 = 2.5;
/// Entry size of the perturbation added to generated generator sets.
const GENERATOR_NOISE: f64 = 1e-13;
/// Step of the shear that moves a group element off the normalizer.
const SHEAR_STEP: f64 = 1e-2;
/// Tolerance on the wrap-around reflection, relative to `max(1, C, 1/C)`.
const WRAP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub n_values: Vec<usize>,
    pub sigma_values: Vec<Sigma>,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Deliberate defect switched on for every property.
    pub mutation: Option<Mutation>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_values: vec![2, 3],
            sigma_values: DEFAULT_SIGMAS.to_vec(),
            trials: DEFAULT_TRIALS,
            tol: DEFAULT_TOL,
            seed: 0,
            mutation: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidConfig("no spatial dimensions given".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::DimensionTooSmall(n + 1, 3));
        }
        if let Some(s) = self.sigma_values.iter().find(|s| s.finite().is_some_and(|v| !v.is_finite())) {
            return Err(Error::InvalidConfig(format!("sigma must be finite or inf, got {s}")));
        }
        Ok(())
    }
}

/// The first failing instance of a property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub n: usize,
    pub sigma: Option<Sigma>,
    pub trial: usize,
    pub detail: String,
    /// Matrices involved, row-major.
    pub matrices: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub pass: bool,
    pub worst_residual: f64,
    pub checks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

/// Property id to result; serializes as a plain JSON object.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SuiteReport {
    pub properties: BTreeMap<String, PropertyReport>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.properties.values().all(|p| p.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.properties
            .iter()
            .filter(|(_, p)| !p.pass)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

type Runner = fn(&SuiteConfig) -> Option<PropertyReport>;

const RUNNERS: [Runner; 11] = [
    isotypic_property,
    collinearity_property,
    classification_property,
    normalizer_property,
    cartan_property,
    closure_property,
    k_intersection_property,
    invariant_structures_property,
    affine_property,
    negative_controls_property,
    wraparound_property,
];

/// Runs every property for every `(n, σ, trial)`. Properties run on separate
/// threads; failures are report entries, and only an invalid configuration
/// is an error.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let properties = thread::scope(|scope| {
        let handles: Vec<_> = PROPERTY_IDS
            .iter()
            .zip(RUNNERS)
            .map(|(id, run)| (*id, scope.spawn(move || run(cfg))))
            .collect();
        handles
            .into_iter()
            .filter_map(|(id, handle)| {
                let report = handle.join().unwrap_or_else(|e| std::panic::resume_unwind(e));
                report.map(|r| (id.to_string(), r))
            })
            .collect()
    });
    Ok(SuiteReport { properties })
}

/// `boost_closed_form(πC·u, σ = -1/C²)`: a boost through half a period, which
/// lands in `K` as the reflection `diag(1 - 2uu^t, -1)`.
pub fn wraparound_demo(scale: f64, u: &DVector<f64>) -> Result<SquareMatrix> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidConfig(format!("compact scale must be positive, got {scale}")));
    }
    if u.len() < 2 {
        return Err(Error::DimensionTooSmall(u.len() + 1, 3));
    }
    let norm = u.norm();
    if norm.is_nan() || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnit(norm));
    }
    let m = boost_closed_form(&(u * (PI * scale)), Sigma::Finite(-1.0 / (scale * scale)));
    let blocks = block_split(&m);
    let residual = mixing_norm(&m)
        .max(orthogonality_residual(&blocks.a))
        .max((blocks.a.determinant() + 1.0).abs())
        .max((blocks.d + 1.0).abs());
    if residual > WRAP_TOL * scale.max(1.0 / scale).max(1.0) {
        return Err(Error::NotInK(residual));
    }
    Ok(m)
}

/// `Z ∈ M3` with `b = e1`, `c = e2`, the rotation generator
/// `A = b c^t - c b^t`, and the bottom-right entry of `[Z, [Z, A]]`, which is
/// `2`. Since that entry lies outside `M1 ⊕ M3`, the sum is not a subalgebra.
pub fn nonalgebra_witness(n: usize) -> Result<(SquareMatrix, SquareMatrix, f64)> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n + 1, 3));
    }
    let (z, a, entry) = nested_bracket(&unit(n, 0), &unit(n, 1));
    Ok((z, a, entry))
}

fn nested_bracket(b: &DVector<f64>, c: &DVector<f64>) -> (SquareMatrix, SquareMatrix, f64) {
    let n = b.len();
    let mut split = IsotypicSplit::zeros(n);
    split.b = b.clone();
    split.c = c.clone();
    let z = split.m3();
    let mut rot = IsotypicSplit::zeros(n);
    rot.skew = b * c.transpose() - c * b.transpose();
    let a = rot.m1();
    let inner = bracket(&z, &a).expect("equal dimensions");
    let entry = bracket(&z, &inner).expect("equal dimensions")[(n, n)];
    (z, a, entry)
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

#[derive(Clone, Copy, Debug)]
struct Site {
    n: usize,
    sigma: Option<Sigma>,
    trial: usize,
}

struct Tally {
    report: PropertyReport,
}

impl Tally {
    fn new() -> Self {
        Self {
            report: PropertyReport {
                pass: true,
                worst_residual: 0.0,
                checks: 0,
                counterexample: None,
            },
        }
    }

    /// Passes when `residual <= bound`; NaN fails.
    fn check<D: FnOnce() -> String>(
        &mut self,
        at: &Site,
        residual: f64,
        bound: f64,
        detail: D,
        matrices: &[&SquareMatrix],
    ) {
        self.observe(residual);
        self.flag(at, residual <= bound, detail, matrices);
    }

    fn observe(&mut self, residual: f64) {
        let r = &mut self.report.worst_residual;
        if residual.is_nan() {
            *r = f64::INFINITY;
        } else if residual > *r {
            *r = residual;
        }
    }

    fn flag<D: FnOnce() -> String>(&mut self, at: &Site, ok: bool, detail: D, matrices: &[&SquareMatrix]) {
        self.report.checks += 1;
        if ok {
            return;
        }
        self.report.pass = false;
        if self.report.counterexample.is_none() {
            self.report.counterexample = Some(Counterexample {
                n: at.n,
                sigma: at.sigma,
                trial: at.trial,
                detail: detail(),
                matrices: matrices.iter().map(|m| m.to_row_major()).collect(),
            });
        }
    }

    fn fail(&mut self, at: &Site, detail: String, matrices: &[&SquareMatrix]) {
        self.flag(at, false, || detail, matrices);
    }

    fn finish(self) -> Option<PropertyReport> {
        Some(self.report)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0, |h, &p| splitmix(h ^ p))
}

fn for_each_trial<F>(cfg: &SuiteConfig, property: u64, sigmas: &[Option<Sigma>], mut f: F)
where
    F: FnMut(&Site, &mut ChaCha8Rng),
{
    for &n in &cfg.n_values {
        for (si, &sigma) in sigmas.iter().enumerate() {
            for trial in 0..cfg.trials {
                let seed = trial_seed(&[cfg.seed, property, n as u64, si as u64, trial as u64]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                f(&Site { n, sigma, trial }, &mut rng);
            }
        }
    }
}

fn sigmas(cfg: &SuiteConfig) -> Vec<Option<Sigma>> {
    cfg.sigma_values.iter().copied().map(Some).collect()
}

/// The configured σ values followed by `None` for the Aristotle group.
fn sigmas_and_aristotle(cfg: &SuiteConfig) -> Vec<Option<Sigma>> {
    let mut all = sigmas(cfg);
    all.push(None);
    all
}

fn group_of(sigma: Option<Sigma>) -> Group {
    sigma.map_or(Group::Aristotle, Group::for_sigma)
}

fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn gaussian_matrix(dim: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
    SquareMatrix::new(DMatrix::from_fn(dim, dim, |_, _| rng.sample(StandardNormal)))
        .expect("finite square matrix")
}

fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = gaussian_vector(n, rng);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

fn noise(dim: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
    let m = DMatrix::from_fn(dim, dim, |_, _| GENERATOR_NOISE * rng.random_range(-1.0..1.0));
    SquareMatrix::new(m).expect("finite square matrix")
}

fn conjugate(k: &SquareMatrix, z: &SquareMatrix) -> SquareMatrix {
    // k is orthogonal, so its inverse is its transpose.
    &(k * z) * &k.transpose()
}

/// Rotation algebra plus a basis of `p_σ`, conjugated by a random `k` and
/// perturbed at the level of [`GENERATOR_NOISE`].
fn noisy_generators(n: usize, sigma: Option<Sigma>, rng: &mut ChaCha8Rng) -> Vec<SquareMatrix> {
    let k = random_k(n, rng);
    let mut gens = skew_basis(n);
    if let Some(s) = sigma {
        gens.extend(p_basis(n, s));
    }
    gens.iter()
        .map(|g| conjugate(&k, g) + noise(n + 1, rng))
        .collect()
}

fn scale_of(m: &SquareMatrix) -> f64 {
    1.0 + m.max_abs()
}

fn isotypic_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 1, &[None], |at, rng| {
        let n = at.n;
        let z = gaussian_matrix(n + 1, rng);
        let parts = isotypic::split(&z).expect("n >= 2");
        let comps = [parts.m0(), parts.m1(), parts.m2(), parts.m3()];
        let total = comps.iter().fold(SquareMatrix::zeros(n + 1), |acc, c| acc + c);
        t.check(at, (&total - &z).max_abs(), tol * scale_of(&z), || "components do not sum to Z".into(), &[&z]);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let ip = comps[i].as_matrix().dot(comps[j].as_matrix()).abs();
                t.check(
                    at,
                    ip,
                    tol * (1.0 + z.frobenius_norm().powi(2)),
                    || format!("components {i} and {j} are not orthogonal"),
                    &[&z],
                );
            }
        }

        let r = random_orthogonal(n, rng);
        let eps = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let k = k_element(&r, eps).expect("orthogonal block");
        let moved = conjugate(&k, &z);
        let moved_parts = isotypic::split(&moved).expect("n >= 2");
        let moved_comps = [moved_parts.m0(), moved_parts.m1(), moved_parts.m2(), moved_parts.m3()];
        for (i, (mc, c)) in moved_comps.iter().zip(&comps).enumerate() {
            let expected = conjugate(&k, c);
            t.check(
                at,
                (mc - &expected).max_abs(),
                tol * scale_of(&z),
                || format!("component {i} does not commute with Ad(k)"),
                &[&z, &k],
            );
        }
        match ad_rotation(&r, eps, &z) {
            Ok(ad) => t.check(
                at,
                (&ad - &moved).max_abs(),
                tol * scale_of(&z),
                || "block formula for Ad(k) disagrees with conjugation".into(),
                &[&z, &k],
            ),
            Err(e) => t.fail(at, format!("ad_rotation failed: {e}"), &[&z, &k]),
        }
    });
    t.finish()
}

fn collinearity_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 2, &sigmas(cfg), |at, rng| {
        let sigma = at.sigma.expect("sigma given");
        let b = random_boost_vector(at.n, BOOST_BOUND, rng);
        let p = p_generator(&b, sigma);
        let parts = isotypic::split(&p).expect("n >= 2");
        let scale = 1.0 + parts.b.norm_squared() * parts.c.norm_squared();
        t.check(
            at,
            collinearity_defect(&parts.b, &parts.c),
            tol * scale,
            || "boost generator has non-collinear blocks".into(),
            &[&p],
        );

        let (x, y) = (gaussian_vector(at.n, rng), gaussian_vector(at.n, rng));
        let (z, a, entry) = nested_bracket(&x, &y);
        let direct = 2.0 * (x.norm_squared() * y.norm_squared() - x.dot(&y).powi(2));
        let scale = 1.0 + x.norm_squared() * y.norm_squared();
        t.check(
            at,
            (entry - direct).abs(),
            tol * scale,
            || format!("nested bracket entry {entry} differs from {direct}"),
            &[&z, &a],
        );
        t.check(
            at,
            (collinearity_defect(&x, &y) - entry).abs(),
            tol * scale,
            || "collinearity defect differs from the nested bracket entry".into(),
            &[&z, &a],
        );
        t.flag(at, entry > 0.0, || "generic pair has zero nested bracket entry".into(), &[&z, &a]);
    });
    t.finish()
}

fn classification_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 3, &sigmas_and_aristotle(cfg), |at, rng| {
        let gens = noisy_generators(at.n, at.sigma, rng);
        let result = match classify_algebra_mutated(&gens, tol, cfg.mutation) {
            Ok(r) => r,
            Err(e) => return t.fail(at, format!("classification failed: {e}"), &[]),
        };
        let expected = at.sigma.map_or(CaseLabel::Aristotle, CaseLabel::for_sigma);
        let label = case_label(&result).ok();
        let m: Vec<&SquareMatrix> = gens.iter().collect();
        t.flag(
            at,
            label == Some(expected),
            || format!("expected {expected}, got {:?}", result.outcome),
            &m,
        );
        if let (Some(sigma), Outcome::Kinematical(found)) = (at.sigma, result.outcome) {
            let residual = match (sigma, found) {
                (Sigma::Finite(a), Sigma::Finite(b)) => (a - b).abs() / (1.0 + a.abs()),
                (Sigma::Infinite, Sigma::Infinite) => 0.0,
                _ => f64::INFINITY,
            };
            t.check(at, residual, tol, || format!("recovered sigma {found}, expected {sigma}"), &m);
        }
    });
    t.finish()
}

fn nonzero_finite(cfg: &SuiteConfig) -> Vec<Option<Sigma>> {
    sigmas(cfg)
        .into_iter()
        .filter(|s| s.and_then(|s| s.finite()).is_some_and(|v| v != 0.0))
        .collect()
}

fn positive(cfg: &SuiteConfig) -> Vec<Option<Sigma>> {
    sigmas(cfg)
        .into_iter()
        .filter(|s| s.and_then(|s| s.finite()).is_some_and(|v| v > 0.0))
        .collect()
}

fn normalizer_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 4, &nonzero_finite(cfg), |at, rng| {
        let sigma = at.sigma.expect("sigma given");
        let s = sigma.finite().expect("finite sigma");
        let g = random_element_with(&Group::for_sigma(sigma), at.n, BOOST_BOUND, rng);
        match in_normalizer_mutated(&g, s, tol, cfg.mutation) {
            Ok(c) => {
                t.check(at, c.residual, c.bound, || "group element fails the normalizer test".into(), &[&g]);
                t.check(at, (c.lambda - 1.0).abs(), c.bound, || format!("lambda {} for a group element", c.lambda), &[&g]);
            }
            Err(e) => t.fail(at, format!("normalizer test failed: {e}"), &[&g]),
        }

        let lambda: f64 = rng.random_range(0.1..10.0);
        let scaled = &g * lambda.sqrt();
        match in_normalizer_mutated(&scaled, s, tol, cfg.mutation) {
            Ok(c) => {
                t.flag(at, c.member, || "scaled group element fails the normalizer test".into(), &[&scaled]);
                t.check(
                    at,
                    (c.lambda - lambda).abs() / lambda,
                    tol,
                    || format!("recovered lambda {} instead of {lambda}", c.lambda),
                    &[&scaled],
                );
            }
            Err(e) => t.fail(at, format!("normalizer test failed: {e}"), &[&scaled]),
        }

        // A spatial shear moves g off the normalizer.
        let mut shear = IsotypicSplit::zeros(at.n);
        let w = DMatrix::from_fn(at.n, at.n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sym = &w + w.transpose();
        let trace = sym.trace() / at.n as f64;
        shear.sym_traceless = (sym - DMatrix::identity(at.n, at.n) * trace).normalize();
        let sheared = &g * &(SquareMatrix::identity(at.n + 1) + shear.m2() * SHEAR_STEP);
        if let Ok(c) = in_normalizer_mutated(&sheared, s, tol, cfg.mutation) {
            t.flag(at, !c.member, || "sheared element passes the normalizer test".into(), &[&sheared]);
        }
    });
    t.finish()
}

fn cartan_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 5, &positive(cfg), |at, rng| {
        let sigma = at.sigma.expect("sigma given");
        let s = sigma.finite().expect("finite sigma");
        let lambda: f64 = rng.random_range(0.1..10.0);
        let k = random_k(at.n, rng);
        // |Z| <= 2 in operator norm.
        let b = random_boost_vector(at.n, 2.0 / s.max(1.0), rng);
        let z = p_generator(&b, sigma);
        let a = &(&k * &mat_exp(&z)) * lambda.sqrt();
        let f = match cartan_decompose_mutated(&a, s, tol, cfg.mutation) {
            Ok(f) => f,
            Err(e) => return t.fail(at, format!("decomposition failed: {e}"), &[&a]),
        };
        let m = [&a, &f.k, &f.z];
        t.check(at, (f.lambda - lambda).abs() / lambda, tol, || format!("lambda {} instead of {lambda}", f.lambda), &m);
        t.check(at, (&f.k - &k).max_abs(), tol, || "k factor differs".into(), &m);
        t.check(at, (&f.z - &z).max_abs(), tol, || "Z factor differs".into(), &m);
        t.check(
            at,
            (&f.reconstruct() - &a).max_abs(),
            tol * scale_of(&a),
            || "factors do not reconstruct the input".into(),
            &m,
        );
    });
    t.finish()
}

fn closure_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 6, &sigmas_and_aristotle(cfg), |at, rng| {
        let group = group_of(at.sigma);
        let bound = match at.sigma {
            Some(Sigma::Finite(s)) if s > 0.0 => FACTOR_BOOST_BOUND,
            _ => BOOST_BOUND,
        };
        let g = random_element_with(&group, at.n, bound, rng);
        let h = random_element_with(&group, at.n, bound, rng);
        let Some(g_inv) = g.inverse() else {
            return t.fail(at, "group element is singular".into(), &[&g]);
        };
        let gh = &g * &h;
        for (name, m) in [("g", &g), ("h", &h), ("gh", &gh), ("g^-1", &g_inv)] {
            let check = check_membership_mutated(m, &group, tol, cfg.mutation);
            t.observe(check.residual);
            t.flag(at, check.member, || format!("{name} is not a member"), &[&g, &h]);
        }
    });
    t.finish()
}

fn k_residual(m: &SquareMatrix) -> f64 {
    let blocks = block_split(m);
    mixing_norm(m)
        .max(orthogonality_residual(&blocks.a))
        .max((blocks.d.abs() - 1.0).abs())
}

fn k_intersection_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 7, &sigmas(cfg), |at, rng| {
        let sigma = at.sigma.expect("sigma given");
        let group = Group::for_sigma(sigma);
        let k = random_k(at.n, rng);
        let b = random_boost_vector(at.n, BOOST_BOUND, rng);
        let boost = boost_closed_form(&b, sigma);
        let g = &(&k * &boost) * &boost_closed_form(&-&b, sigma);
        let bound = tol * scale_of(&boost).powi(2);
        t.check(at, mixing_norm(&g), bound, || "mixing blocks do not vanish".into(), &[&g]);
        t.check(at, k_residual(&g), bound, || "element without mixing is not in K".into(), &[&g]);
        let check = check_membership_mutated(&g, &group, tol, cfg.mutation);
        t.flag(at, check.member, || "element is not a member".into(), &[&g]);

        if let Some(scale) = sigma.compact_scale() {
            let u = unit_vector(at.n, rng);
            let bound = tol * (1.0 + scale + 1.0 / scale);
            let half = boost_closed_form(&(&u * (PI * scale)), sigma);
            t.check(at, k_residual(&half), bound, || "half-period boost is not in K".into(), &[&half]);
            let full = boost_closed_form(&(&u * (2.0 * PI * scale)), sigma);
            let eye = SquareMatrix::identity(at.n + 1);
            t.check(at, (&full - &eye).max_abs(), bound, || "full-period boost is not the identity".into(), &[&full]);
        }
    });
    t.finish()
}

fn invariant_structures_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 8, &sigmas_and_aristotle(cfg), |at, rng| {
        let n = at.n;
        let g = random_element_with(&group_of(at.sigma), n, BOOST_BOUND, rng);
        match at.sigma {
            Some(Sigma::Finite(s)) if s != 0.0 => {
                let gamma = Metric::plus(s).expect("nonzero sigma").gram(n + 1);
                let moved = &(&g.transpose() * &gamma) * &g;
                t.check(
                    at,
                    (&moved - &gamma).max_abs(),
                    tol * scale_of(&g).powi(2),
                    || "metric is not preserved".into(),
                    &[&g],
                );
            }
            Some(Sigma::Finite(_)) => {
                // dt is preserved up to sign, exactly.
                let blocks = block_split(&g);
                let residual = blocks.c.amax().max((blocks.d.abs() - 1.0).abs());
                t.check(at, residual, 0.0, || "time row is not (0, ±1)".into(), &[&g]);
            }
            Some(Sigma::Infinite) => {
                let x = gaussian_vector(n + 1, rng);
                let y = g.as_matrix() * &x;
                let before = x.rows(0, n).norm();
                let after = y.rows(0, n).norm();
                t.check(at, (after - before).abs(), tol * (1.0 + before), || "spatial length is not preserved".into(), &[&g]);
            }
            None => {
                t.check(at, k_residual(&g), tol, || "element is not in K".into(), &[&g]);
            }
        }
    });
    t.finish()
}

fn random_affine(group: &Group, n: usize, rng: &mut ChaCha8Rng) -> AffineElement {
    let linear = random_element_with(group, n, FACTOR_BOOST_BOUND, rng);
    AffineElement::new(linear, gaussian_vector(n + 1, rng)).expect("invertible linear part")
}

fn affine_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 9, &sigmas_and_aristotle(cfg), |at, rng| {
        let n = at.n;
        let group = group_of(at.sigma);
        let (f, g, h) = (random_affine(&group, n, rng), random_affine(&group, n, rng), random_affine(&group, n, rng));
        let x = Event::unpack(&gaussian_vector(n + 1, rng));
        let mags = |e: &AffineElement| 1.0 + e.linear().max_abs() + e.translation().amax();
        let scale = (n + 1) as f64 * mags(&f) * mags(&g) * mags(&h) * (1.0 + x.pack().amax());
        let m = [f.linear(), g.linear(), h.linear()];
        let (Ok(gh), Ok(fg), Ok(g_inv)) = (compose(&g, &h), compose(&f, &g), inverse(&g)) else {
            return t.fail(at, "affine composition failed".into(), &m);
        };
        let (Ok(left), Ok(right), Ok(unit)) = (compose(&fg, &h), compose(&f, &gh), compose(&g, &g_inv)) else {
            return t.fail(at, "affine composition failed".into(), &m);
        };
        t.check(
            at,
            (left.to_homogeneous() - right.to_homogeneous()).amax(),
            tol * scale,
            || "composition is not associative".into(),
            &m,
        );
        let inv_scale = (n + 1) as f64 * mags(&g) * mags(&g_inv);
        t.check(
            at,
            (unit.to_homogeneous() - AffineElement::identity(n).to_homogeneous()).amax(),
            tol * inv_scale,
            || "g g^-1 is not the identity".into(),
            &m,
        );
        match (act(&gh, &x), act(&h, &x).and_then(|hx| act(&g, &hx))) {
            (Ok(a), Ok(b)) => t.check(
                at,
                (a.pack() - b.pack()).amax(),
                tol * scale,
                || "action is not compatible with composition".into(),
                &m,
            ),
            _ => t.fail(at, "affine action failed".into(), &m),
        }
        for (name, e) in [("f", &f), ("gh", &gh)] {
            let check = check_membership_mutated(e.linear(), &group, tol, cfg.mutation);
            t.flag(at, check.member, || format!("linear part of {name} is not a member"), &m);
        }

        let through = Event::unpack(&gaussian_vector(n + 1, rng));
        let u = unit_vector(n, rng);
        let g_lin = g.linear();
        match at.sigma {
            Some(sigma) if sigma.invariant_speed().is_some() => {
                let c = sigma.invariant_speed().expect("positive sigma");
                for (frac, exact) in [(1.0, true), (0.5, false)] {
                    let line = WorldLine::with_velocity(through.clone(), &u * (frac * c));
                    let speed = transform_worldline(&g, &line).ok().and_then(|w| w.speed());
                    match speed {
                        Some(v) if exact => t.check(
                            at,
                            (v - c).abs() / c,
                            tol,
                            || format!("light-like speed {c} mapped to {v}"),
                            &[g_lin],
                        ),
                        Some(v) => t.flag(at, v < c, || format!("speed {} mapped to {v} >= {c}", frac * c), &[g_lin]),
                        None => t.fail(at, "image world-line has no velocity".into(), &[g_lin]),
                    }
                }
            }
            Some(Sigma::Finite(0.0)) => {
                let mut d = DVector::zeros(n + 1);
                d.rows_mut(0, n).copy_from(&u);
                let line = WorldLine::with_direction(through, d).expect("nonzero direction");
                let ok = transform_worldline(&g, &line)
                    .is_ok_and(|w| matches!(w.kind, LineKind::Direction(ref v) if v[n] == 0.0));
                t.flag(at, ok, || "simultaneous events stop being simultaneous".into(), &[g_lin]);
            }
            Some(Sigma::Infinite) | None => {
                let speed = |v: DVector<f64>| {
                    transform_worldline(&g, &WorldLine::with_velocity(through.clone(), v))
                        .ok()
                        .and_then(|w| w.speed())
                };
                match speed(DVector::zeros(n)) {
                    Some(v) => t.check(at, v, tol, || format!("rest world-line moves at speed {v}"), &[g_lin]),
                    None => t.fail(at, "image world-line has no velocity".into(), &[g_lin]),
                }
            }
            Some(_) => {}
        }
    });
    t.finish()
}

fn negative_controls_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let tol = cfg.tol;
    let mut t = Tally::new();
    for_each_trial(cfg, 10, &sigmas(cfg), |at, rng| {
        let n = at.n;
        let sigma = at.sigma.expect("sigma given");
        let base = noisy_generators(n, Some(sigma), rng);

        let mut trivial = IsotypicSplit::zeros(n);
        trivial.lambda = rng.sample(StandardNormal);
        trivial.mu = rng.sample(StandardNormal);
        let mut sym = IsotypicSplit::zeros(n);
        let w = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = &w + w.transpose();
        let trace = s.trace() / n as f64;
        sym.sym_traceless = s - DMatrix::identity(n, n) * trace;
        let other = match sigma {
            Sigma::Infinite => Sigma::Finite(0.0),
            Sigma::Finite(v) => Sigma::Finite(v + 1.0),
        };
        let mixed = p_generator(&unit_vector(n, rng), other);

        for (name, extra) in [("M0", trivial.m0()), ("M2", sym.m2()), ("mixed sigma", mixed)] {
            let mut gens = base.clone();
            gens.push(extra.clone());
            match classify_algebra_mutated(&gens, tol, cfg.mutation) {
                Ok(r) => t.flag(
                    at,
                    !r.is_kinematical(),
                    || format!("{name} contamination accepted as {:?}", r.outcome),
                    &[&extra],
                ),
                Err(e) => t.fail(at, format!("classification failed: {e}"), &[&extra]),
            }
        }
    });

    for &n in &cfg.n_values {
        let at = Site { n, sigma: None, trial: 0 };
        match nonalgebra_witness(n) {
            Ok((z, a, entry)) => {
                t.check(&at, (entry - 2.0).abs(), 1e-12, || format!("witness entry is {entry}"), &[&z, &a])
            }
            Err(e) => t.fail(&at, format!("witness failed: {e}"), &[]),
        }
        let mut m1_m3 = skew_basis(n);
        m1_m3.extend(m3_basis(n));
        match bracket_closure(&m1_m3, tol) {
            Ok(report) => t.flag(
                &at,
                !report.closed && report.worst_residual >= 1.0,
                || format!("M1 + M3 closure residual {}", report.worst_residual),
                &[],
            ),
            Err(e) => t.fail(&at, format!("closure test failed: {e}"), &[]),
        }
    }
    t.finish()
}

fn wraparound_property(cfg: &SuiteConfig) -> Option<PropertyReport> {
    let negative: Vec<Option<Sigma>> = sigmas(cfg)
        .into_iter()
        .filter(|s| s.and_then(|s| s.compact_scale()).is_some())
        .collect();
    if negative.is_empty() {
        return None;
    }
    let mut t = Tally::new();
    for_each_trial(cfg, 11, &negative, |at, rng| {
        let scale = at.sigma.and_then(|s| s.compact_scale()).expect("negative sigma");
        let u = unit_vector(at.n, rng);
        match wraparound_demo(scale, &u) {
            Ok(m) => {
                t.observe(k_residual(&m));
                t.flag(at, true, String::new, &[]);
            }
            Err(e) => t.fail(at, format!("wrap-around failed: {e}"), &[]),
        }
    });
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::in_k;

    fn small(trials: usize) -> SuiteConfig {
        SuiteConfig {
            trials,
            seed: 11,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn default_suite_passes() {
        let report = run_suite(&small(4)).unwrap();
        assert_eq!(report.properties.len(), PROPERTY_IDS.len());
        for (id, p) in &report.properties {
            assert!(p.pass, "{id}: {:?}", p.counterexample);
            assert!(p.checks > 0, "{id} ran no checks");
        }
    }

    #[test]
    fn suite_is_deterministic() {
        let cfg = SuiteConfig {
            trials: 1,
            seed: 1,
            ..SuiteConfig::default()
        };
        assert_eq!(run_suite(&cfg).unwrap(), run_suite(&cfg).unwrap());
    }

    #[test]
    fn each_mutation_is_detected() {
        for mutation in Mutation::ALL {
            let cfg = SuiteConfig {
                mutation: Some(mutation),
                ..small(3)
            };
            let report = run_suite(&cfg).unwrap();
            assert!(!report.all_pass(), "{mutation} went unnoticed");
        }
        let cfg = SuiteConfig {
            mutation: Some(Mutation::DaggerSignFlip),
            ..small(2)
        };
        let report = run_suite(&cfg).unwrap();
        let normalizer = &report.properties["p04_normalizer"];
        assert!(!normalizer.pass);
        assert!(normalizer.worst_residual > 0.0);
    }

    #[test]
    fn wraparound_entry_only_with_negative_sigma() {
        let cfg = SuiteConfig {
            sigma_values: vec![Sigma::Finite(1.0)],
            ..small(1)
        };
        assert!(!run_suite(&cfg).unwrap().properties.contains_key("wraparound_demo"));
        let cfg = SuiteConfig {
            sigma_values: vec![Sigma::Finite(-1.0)],
            ..small(1)
        };
        assert!(run_suite(&cfg).unwrap().properties["wraparound_demo"].pass);
    }

    #[test]
    fn config_validation() {
        let bad = [
            SuiteConfig { trials: 0, ..SuiteConfig::default() },
            SuiteConfig { tol: 0.0, ..SuiteConfig::default() },
            SuiteConfig { tol: f64::NAN, ..SuiteConfig::default() },
            SuiteConfig { n_values: vec![], ..SuiteConfig::default() },
            SuiteConfig { n_values: vec![1], ..SuiteConfig::default() },
            SuiteConfig { sigma_values: vec![Sigma::Finite(f64::INFINITY)], ..SuiteConfig::default() },
        ];
        for cfg in bad {
            assert!(run_suite(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn wraparound_examples() {
        let m = wraparound_demo(1.0, &unit(2, 0)).unwrap();
        let expected = SquareMatrix::from_row_major(3, &[-1., 0., 0., 0., 1., 0., 0., 0., -1.]).unwrap();
        assert!((&m - &expected).max_abs() < 1e-15);
        assert!(in_k(&m, 1e-12));

        // C = 2, u = e2: reflection of the second axis.
        let m = wraparound_demo(2.0, &unit(3, 1)).unwrap();
        let expected = SquareMatrix::from_row_major(
            4,
            &[1., 0., 0., 0., 0., -1., 0., 0., 0., 0., 1., 0., 0., 0., 0., -1.],
        )
        .unwrap();
        assert!((&m - &expected).max_abs() < 1e-15);

        // A full period is the identity.
        let full = boost_closed_form(&(unit(2, 0) * (2.0 * PI * 2.0)), Sigma::Finite(-0.25));
        assert!((&full - &SquareMatrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn wraparound_errors() {
        let u = DVector::from_row_slice(&[0.6, 0.8 + 1e-9]);
        assert!(matches!(wraparound_demo(1.0, &u), Err(Error::NotUnit(_))));
        assert!(wraparound_demo(0.0, &unit(2, 0)).is_err());
        assert!(wraparound_demo(-1.0, &unit(2, 0)).is_err());
        assert!(wraparound_demo(1.0, &unit(1, 0)).is_err());
    }

    #[test]
    fn witness_examples() {
        for n in [2, 3] {
            let (z, a, entry) = nonalgebra_witness(n).unwrap();
            // Brute force: expand both commutators.
            let zz = z.as_matrix();
            let aa = a.as_matrix();
            let inner = zz * aa - aa * zz;
            let outer = zz * &inner - &inner * zz;
            assert_eq!(outer[(n, n)], 2.0);
            assert_eq!(entry, 2.0);
        }
        // Collinear control.
        let (_, _, entry) = nested_bracket(&unit(3, 0), &unit(3, 0));
        assert_eq!(entry, 0.0);
        assert!(nonalgebra_witness(1).is_err());
    }

    #[test]
    fn report_serializes_as_object() {
        let cfg = SuiteConfig {
            sigma_values: vec![Sigma::Infinite],
            ..small(1)
        };
        let json = serde_json::to_value(run_suite(&cfg).unwrap()).unwrap();
        let obj = json.as_object().unwrap();
        assert!(obj.contains_key("p03_classification_round_trip"));
        assert_eq!(obj["p02_collinearity"]["pass"], true);
        assert!(obj["p02_collinearity"].get("counterexample").is_none());
    }

    #[test]
    fn seeds_differ_across_coordinates() {
        let a = trial_seed(&[0, 1, 2, 0, 0]);
        let b = trial_seed(&[0, 1, 2, 0, 1]);
        let c = trial_seed(&[0, 2, 2, 0, 0]);
        assert!(a != b && a != c && b != c);
    }

    #[test]
    fn noisy_generators_classify() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gens = noisy_generators(3, Some(Sigma::Infinite), &mut rng);
        let r = classify_algebra_mutated(&gens, 1e-9, None).unwrap();
        assert_eq!(r.outcome, Outcome::Kinematical(Sigma::Infinite));
        let r = classify_algebra_mutated(&gens, 1e-9, Some(Mutation::NoSigmaThreshold)).unwrap();
        assert_ne!(r.outcome, Outcome::Kinematical(Sigma::Infinite));
    }
}
