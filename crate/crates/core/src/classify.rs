//! Classification of generator sets: decides whether a set of matrices spans
//! the rotation algebra alone, the rotation algebra plus a boost space
//! `p_σ`, or something that cannot be the Lie algebra of a kinematical group.
//!
//! The engine splits an orthonormal basis of the span into isotypic parts.
//! Any `M0` or `M2` content is fatal (its exponentials would be rescalings or
//! shears that the group is not allowed to contain). Every `M3` part must have
//! collinear `b` and `c` with one common ratio `σ`, and the result is checked
//! for closure under brackets.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::isotypic::{self, IsotypicSplit};
use crate::matcore::{bracket, column_svd, SquareMatrix};
use crate::Mutation;

/// The classification parameter `σ ∈ R ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sigma {
    Finite(f64),
    Infinite,
}

impl Sigma {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Sigma::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Sigma::Finite(v) => Some(v),
            Sigma::Infinite => None,
        }
    }

    /// The invariant speed `c = 1/√σ`, defined for `σ > 0`.
    pub fn invariant_speed(&self) -> Option<f64> {
        match *self {
            Sigma::Finite(v) if v > 0.0 => Some(1.0 / v.sqrt()),
            _ => None,
        }
    }

    /// The compact scale `C = 1/√(-σ)`, defined for `σ < 0`.
    pub fn compact_scale(&self) -> Option<f64> {
        match *self {
            Sigma::Finite(v) if v < 0.0 => Some(1.0 / (-v).sqrt()),
            _ => None,
        }
    }

    /// Relative agreement `|σ1 - σ2| <= tol (1 + |σ1| + |σ2|)`; finite and
    /// infinite values never agree.
    pub fn agrees_with(&self, other: &Sigma, tol: f64) -> bool {
        match (*self, *other) {
            (Sigma::Infinite, Sigma::Infinite) => true,
            (Sigma::Finite(a), Sigma::Finite(b)) => {
                (a - b).abs() <= tol * (1.0 + a.abs() + b.abs())
            }
            _ => false,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Finite(v) => write!(f, "{v}"),
            Sigma::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" | "∞" => return Ok(Sigma::Infinite),
            _ => {}
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Sigma::Finite(v)),
            _ => Err(Error::InvalidConfig(format!("cannot parse sigma from {s:?}"))),
        }
    }
}

impl Serialize for Sigma {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Sigma::Finite(v) => serializer.serialize_f64(v),
            Sigma::Infinite => serializer.serialize_str("inf"),
        }
    }
}

/// The five kinematical groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CaseLabel {
    Lorentz,
    Galilei,
    Orthogonal,
    Carroll,
    Aristotle,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 5] = [
        CaseLabel::Lorentz,
        CaseLabel::Galilei,
        CaseLabel::Orthogonal,
        CaseLabel::Carroll,
        CaseLabel::Aristotle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CaseLabel::Lorentz => "Lorentz",
            CaseLabel::Galilei => "Galilei",
            CaseLabel::Orthogonal => "Orthogonal",
            CaseLabel::Carroll => "Carroll",
            CaseLabel::Aristotle => "Aristotle",
        }
    }

    /// Case for a boost space `p_σ`.
    pub fn for_sigma(sigma: Sigma) -> Self {
        match sigma {
            Sigma::Infinite => CaseLabel::Carroll,
            Sigma::Finite(v) if v > 0.0 => CaseLabel::Lorentz,
            Sigma::Finite(v) if v < 0.0 => CaseLabel::Orthogonal,
            Sigma::Finite(_) => CaseLabel::Galilei,
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseLabel::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown case {s:?}")))
    }
}

/// Why a generator set was rejected.
#[derive(Clone, Debug, PartialEq)]
pub enum Rejection {
    /// Nonzero component along `(λ·1, 0; 0, μ)`.
    TrivialComponent(f64),
    /// Nonzero symmetric traceless spatial component.
    TracelessSymmetric(f64),
    /// A boost part whose `b` and `c` are not collinear.
    NotCollinear(f64),
    /// Two boost parts with different `σ`.
    InconsistentSigma(Sigma, Sigma),
    /// The candidate algebra failed the bracket closure check.
    NotClosed(f64),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::TrivialComponent(r) => write!(
                f,
                "span has a scalar (M0) component of norm {r:.3e}; its exponentials are excluded rescalings"
            ),
            Rejection::TracelessSymmetric(r) => write!(
                f,
                "span has a symmetric traceless (M2) component of norm {r:.3e}; its exponentials are excluded"
            ),
            Rejection::NotCollinear(d) => {
                write!(f, "boost part has non-collinear b and c (defect {d:.3e})")
            }
            Rejection::InconsistentSigma(a, b) => {
                write!(f, "boost parts disagree on sigma ({a} vs {b})")
            }
            Rejection::NotClosed(r) => {
                write!(f, "candidate algebra is not closed under brackets (residual {r:.3e})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    AristotleOnly,
    Kinematical(Sigma),
    NotKinematical(Rejection),
}

/// Largest norm of each isotypic component over the orthonormal span basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ComponentResiduals {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub input_count: usize,
    pub span_rank: usize,
    pub rank_deficient: bool,
    pub components: ComponentResiduals,
    pub sigma_estimates: Vec<Sigma>,
    pub closure_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationResult {
    pub outcome: Outcome,
    pub diagnostics: Diagnostics,
}

impl ClassificationResult {
    pub fn sigma(&self) -> Option<Sigma> {
        match self.outcome {
            Outcome::Kinematical(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_kinematical(&self) -> bool {
        !matches!(self.outcome, Outcome::NotKinematical(_))
    }
}

/// `2 (|b|^2 |c|^2 - (b·c)^2)`, evaluated through the Lagrange identity
/// `sum_{i<j} (b_i c_j - b_j c_i)^2` so the result is never negative.
pub fn collinearity_defect(b: &DVector<f64>, c: &DVector<f64>) -> f64 {
    assert_eq!(b.len(), c.len(), "collinearity_defect: length mismatch");
    let n = b.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = b[i] * c[j] - b[j] * c[i];
            sum += w * w;
        }
    }
    2.0 * sum
}

/// Reads `σ` off a boost-type pair `(b, c)`: `c = σ b`, or `b = 0` for `σ = ∞`.
pub fn sigma_from_m3(b: &DVector<f64>, c: &DVector<f64>, tol: f64) -> Result<Sigma> {
    sigma_from_m3_mutated(b, c, tol, None)
}

pub(crate) fn sigma_from_m3_mutated(
    b: &DVector<f64>,
    c: &DVector<f64>,
    tol: f64,
    mutation: Option<Mutation>,
) -> Result<Sigma> {
    if b.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: c.len(),
        });
    }
    let (nb, nc) = (b.norm(), c.norm());
    if nb == 0.0 && nc == 0.0 {
        return Err(Error::ZeroGenerator);
    }
    let defect = collinearity_defect(b, c);
    if defect > tol * (1.0 + nb * nb * nc * nc) {
        return Err(Error::NotCollinear(defect));
    }
    let cutoff = match mutation {
        Some(Mutation::NoSigmaThreshold) => 0.0,
        _ => tol * nc,
    };
    if nb > cutoff {
        Ok(Sigma::Finite(b.dot(c) / (nb * nb)))
    } else {
        Ok(Sigma::Infinite)
    }
}

fn check_common_dim(mats: &[SquareMatrix]) -> Result<usize> {
    let first = mats.first().ok_or(Error::EmptyInput)?;
    let dim = first.dim();
    if let Some(bad) = mats.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    Ok(dim)
}

/// Frobenius-orthonormal basis of the linear span, via SVD with singular
/// values below `tol · σ_max` treated as zero.
pub fn span_basis(mats: &[SquareMatrix], tol: f64) -> Result<Vec<SquareMatrix>> {
    let dim = check_common_dim(mats)?;
    let cols = dim * dim;
    // One flattened matrix per column.
    let data = DMatrix::from_fn(cols, mats.len(), |k, c| mats[c][(k / dim, k % dim)]);
    if data.amax() == 0.0 {
        return Ok(Vec::new());
    }
    let (values, u) = column_svd(&data);
    let cutoff = tol * values[0];
    Ok(values
        .iter()
        .enumerate()
        .take_while(|(_, &s)| s > cutoff)
        .map(|(i, _)| SquareMatrix::wrap(DMatrix::from_fn(dim, dim, |r, c| u[(r * dim + c, i)])))
        .collect())
}

fn project_out(basis: &[SquareMatrix], v: &SquareMatrix) -> f64 {
    let mut r = v.as_matrix().clone();
    for q in basis {
        let coeff = q.as_matrix().dot(&r);
        r -= q.as_matrix() * coeff;
    }
    r.norm()
}

/// Result of a bracket-closure test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosureReport {
    pub closed: bool,
    /// Largest least-squares residual of a bracket of two unit-normalized
    /// inputs against the span.
    pub worst_residual: f64,
    pub rank: usize,
    pub input_count: usize,
    pub worst_pair: Option<(usize, usize)>,
}

impl ClosureReport {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.input_count
    }
}

pub fn bracket_closure(basis: &[SquareMatrix], tol: f64) -> Result<ClosureReport> {
    check_common_dim(basis)?;
    let span = span_basis(basis, tol)?;
    let units: Vec<Option<SquareMatrix>> = basis
        .iter()
        .map(|m| {
            let norm = m.frobenius_norm();
            (norm > 0.0).then(|| m * (1.0 / norm))
        })
        .collect();
    let mut report = ClosureReport {
        closed: true,
        worst_residual: 0.0,
        rank: span.len(),
        input_count: basis.len(),
        worst_pair: None,
    };
    for i in 0..units.len() {
        for j in (i + 1)..units.len() {
            let (Some(x), Some(y)) = (&units[i], &units[j]) else {
                continue;
            };
            let br = bracket(x, y)?;
            let residual = project_out(&span, &br);
            if residual > report.worst_residual {
                report.worst_residual = residual;
                report.worst_pair = Some((i, j));
            }
            if residual > tol * (1.0 + br.frobenius_norm()) {
                report.closed = false;
            }
        }
    }
    Ok(report)
}

/// True iff every pairwise bracket lies in the span, up to `tol`.
pub fn is_closed_under_bracket(basis: &[SquareMatrix], tol: f64) -> Result<bool> {
    Ok(bracket_closure(basis, tol)?.closed)
}

/// Smallest subspace containing `seeds` and stable under `[a, ·]` for every
/// `a` in `acting`, as an orthonormal basis. Terminates after at most
/// `dim^2` rounds since the rank grows strictly until it stops.
pub fn saturate_under(
    acting: &[SquareMatrix],
    seeds: &[SquareMatrix],
    tol: f64,
) -> Result<Vec<SquareMatrix>> {
    let dim = check_common_dim(seeds)?;
    let mut basis = span_basis(seeds, tol)?;
    for _ in 0..dim * dim {
        let mut candidates = basis.clone();
        for a in acting {
            for v in &basis {
                candidates.push(bracket(a, v)?);
            }
        }
        let next = span_basis(&candidates, tol)?;
        if next.len() == basis.len() {
            return Ok(next);
        }
        basis = next;
    }
    Ok(basis)
}

/// Orthonormal basis of the Lie algebra generated by `gens`.
pub fn saturate(gens: &[SquareMatrix], tol: f64) -> Result<Vec<SquareMatrix>> {
    let dim = check_common_dim(gens)?;
    let mut basis = span_basis(gens, tol)?;
    for _ in 0..dim * dim {
        let mut candidates = basis.clone();
        for i in 0..basis.len() {
            for j in (i + 1)..basis.len() {
                candidates.push(bracket(&basis[i], &basis[j])?);
            }
        }
        let next = span_basis(&candidates, tol)?;
        if next.len() == basis.len() {
            return Ok(next);
        }
        basis = next;
    }
    Ok(basis)
}

pub fn classify_algebra(generators: &[SquareMatrix], tol: f64) -> Result<ClassificationResult> {
    classify_algebra_mutated(generators, tol, None)
}

pub(crate) fn classify_algebra_mutated(
    generators: &[SquareMatrix],
    tol: f64,
    mutation: Option<Mutation>,
) -> Result<ClassificationResult> {
    let dim = check_common_dim(generators)?;
    let n = dim - 1;
    if n < 2 {
        return Err(Error::DimensionTooSmall(dim, 3));
    }

    let basis = span_basis(generators, tol)?;
    let parts: Vec<IsotypicSplit> = basis.iter().map(isotypic::split).collect::<Result<_>>()?;

    let mut diagnostics = Diagnostics {
        input_count: generators.len(),
        span_rank: basis.len(),
        rank_deficient: basis.len() < generators.len(),
        ..Diagnostics::default()
    };
    for p in &parts {
        let [n0, n1, n2, n3] = p.component_norms();
        let c = &mut diagnostics.components;
        c.m0 = c.m0.max(n0);
        c.m1 = c.m1.max(n1);
        c.m2 = c.m2.max(n2);
        c.m3 = c.m3.max(n3);
    }
    let reject = |diagnostics: Diagnostics, why: Rejection| {
        Ok(ClassificationResult {
            outcome: Outcome::NotKinematical(why),
            diagnostics,
        })
    };

    if diagnostics.components.m0 > tol {
        let r = diagnostics.components.m0;
        return reject(diagnostics, Rejection::TrivialComponent(r));
    }
    if diagnostics.components.m2 > tol && mutation != Some(Mutation::SkipTracelessCheck) {
        let r = diagnostics.components.m2;
        return reject(diagnostics, Rejection::TracelessSymmetric(r));
    }

    let mut boosts = Vec::new();
    for p in &parts {
        let norm = (p.b.norm_squared() + p.c.norm_squared()).sqrt();
        if norm <= tol {
            continue;
        }
        let (b, c) = (&p.b / norm, &p.c / norm);
        match sigma_from_m3_mutated(&b, &c, tol, mutation) {
            Ok(s) => diagnostics.sigma_estimates.push(s),
            Err(Error::NotCollinear(d)) => {
                return reject(diagnostics, Rejection::NotCollinear(d));
            }
            Err(e) => return Err(e),
        }
        let mut unit = IsotypicSplit::zeros(n);
        unit.b = b;
        unit.c = c;
        boosts.push(unit.m3());
    }

    let Some(&first) = diagnostics.sigma_estimates.first() else {
        return Ok(ClassificationResult {
            outcome: Outcome::AristotleOnly,
            diagnostics,
        });
    };
    if let Some(&other) = diagnostics
        .sigma_estimates
        .iter()
        .find(|s| !s.agrees_with(&first, tol))
    {
        return reject(diagnostics, Rejection::InconsistentSigma(first, other));
    }
    let sigma = match first {
        Sigma::Infinite => Sigma::Infinite,
        Sigma::Finite(_) => {
            let vals: Vec<f64> = diagnostics
                .sigma_estimates
                .iter()
                .filter_map(Sigma::finite)
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            // |σ| <= tol is |c| <= tol |b|, the mirror of the cutoff for ∞.
            Sigma::Finite(if mean.abs() <= tol { 0.0 } else { mean })
        }
    };

    // The rotation algebra is adjoined implicitly, and the boost parts are
    // completed to their orbit under it before the closure check.
    let k = isotypic::skew_basis(n);
    let mut full = k.clone();
    full.extend(saturate_under(&k, &boosts, tol)?);
    let closure = bracket_closure(&full, tol)?;
    diagnostics.closure_residual = Some(closure.worst_residual);
    if !closure.closed {
        return reject(diagnostics, Rejection::NotClosed(closure.worst_residual));
    }

    Ok(ClassificationResult {
        outcome: Outcome::Kinematical(sigma),
        diagnostics,
    })
}

pub fn case_label(result: &ClassificationResult) -> Result<CaseLabel> {
    match &result.outcome {
        Outcome::AristotleOnly => Ok(CaseLabel::Aristotle),
        Outcome::Kinematical(s) => Ok(CaseLabel::for_sigma(*s)),
        Outcome::NotKinematical(why) => Err(Error::NotKinematical(why.to_string())),
    }
}
