//! The five kinematical groups `K exp(p_σ)` and `K`.
//!
//! `K = O(n) x {±1}` is the block-diagonal group `diag(R, ±1)`. A boost
//! generator in `p_σ` has blocks `(0, b; σ b^t, 0)`, or `(0, 0; c^t, 0)` for
//! `σ = ∞`. For finite nonzero `σ` the normalizer of `k ⊕ p_σ` is the set of
//! `a` with `a⁺a = λ·1` (adjoint for `gamma_+`), and for `σ > 0` each such `a`
//! factors uniquely as `√λ · k · exp(Z)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classify::{CaseLabel, Sigma};
use crate::error::{Error, Result};
use crate::isotypic::{check_orthogonal, check_time_sign, orthogonality_residual, skew_basis};
use crate::matcore::{
    block_split, dagger_mutated, mat_exp, mat_log_positive_with, LogOptions, Metric,
    SquareMatrix,
};
use crate::Mutation;

/// One of the five kinematical groups, with its parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Group {
    Lorentz { sigma: f64 },
    Galilei,
    Orthogonal { sigma: f64 },
    Carroll,
    Aristotle,
}

impl Group {
    /// Checks that `sigma` is consistent with `case`: `σ > 0` for Lorentz,
    /// `σ < 0` for Orthogonal, `σ = 0` (or omitted) for Galilei, `∞` (or
    /// omitted) for Carroll, omitted for Aristotle.
    pub fn new(case: CaseLabel, sigma: Option<Sigma>) -> Result<Self> {
        let group = match (case, sigma) {
            (CaseLabel::Lorentz, Some(Sigma::Finite(s))) if s > 0.0 => Group::Lorentz { sigma: s },
            (CaseLabel::Orthogonal, Some(Sigma::Finite(s))) if s < 0.0 => {
                Group::Orthogonal { sigma: s }
            }
            (CaseLabel::Galilei, None | Some(Sigma::Finite(0.0))) => Group::Galilei,
            (CaseLabel::Carroll, None | Some(Sigma::Infinite)) => Group::Carroll,
            (CaseLabel::Aristotle, None) => Group::Aristotle,
            _ => {
                return Err(Error::InvalidCase {
                    case: case.to_string(),
                    sigma: sigma.map_or_else(|| "none".to_owned(), |s| s.to_string()),
                })
            }
        };
        Ok(group)
    }

    pub fn for_sigma(sigma: Sigma) -> Self {
        match sigma {
            Sigma::Infinite => Group::Carroll,
            Sigma::Finite(s) if s > 0.0 => Group::Lorentz { sigma: s },
            Sigma::Finite(s) if s < 0.0 => Group::Orthogonal { sigma: s },
            Sigma::Finite(_) => Group::Galilei,
        }
    }

    pub fn case(&self) -> CaseLabel {
        match self {
            Group::Lorentz { .. } => CaseLabel::Lorentz,
            Group::Galilei => CaseLabel::Galilei,
            Group::Orthogonal { .. } => CaseLabel::Orthogonal,
            Group::Carroll => CaseLabel::Carroll,
            Group::Aristotle => CaseLabel::Aristotle,
        }
    }

    /// `None` for the Aristotle group, which has no boosts.
    pub fn sigma(&self) -> Option<Sigma> {
        match *self {
            Group::Lorentz { sigma } | Group::Orthogonal { sigma } => Some(Sigma::Finite(sigma)),
            Group::Galilei => Some(Sigma::Finite(0.0)),
            Group::Carroll => Some(Sigma::Infinite),
            Group::Aristotle => None,
        }
    }
}

/// `diag(R, eps)` for orthogonal `R` and `eps = ±1`.
pub fn k_element(r: &DMatrix<f64>, eps: f64) -> Result<SquareMatrix> {
    check_orthogonal(r, 1e-10)?;
    check_time_sign(eps)?;
    let n = r.nrows();
    if n < 1 {
        return Err(Error::DimensionTooSmall(n + 1, 2));
    }
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(r);
    m[(n, n)] = eps;
    Ok(SquareMatrix::wrap(m))
}

/// Boost generator: `(0, b; σ b^t, 0)`, or `(0, 0; b^t, 0)` for `σ = ∞`
/// (there `b` plays the role of the bottom-row vector).
///
/// # Panics
/// If `b` is empty.
pub fn p_generator(b: &DVector<f64>, sigma: Sigma) -> SquareMatrix {
    let n = b.len();
    assert!(n >= 1, "p_generator requires n >= 1");
    let mut m = DMatrix::zeros(n + 1, n + 1);
    match sigma {
        Sigma::Finite(s) => {
            m.view_mut((0, n), (n, 1)).copy_from(b);
            m.view_mut((n, 0), (1, n)).copy_from(&(b.transpose() * s));
        }
        Sigma::Infinite => m.view_mut((n, 0), (1, n)).copy_from(&b.transpose()),
    }
    SquareMatrix::wrap(m)
}

/// `p_generator(e_i, σ)` for `i = 1..n`.
pub fn p_basis(n: usize, sigma: Sigma) -> Vec<SquareMatrix> {
    (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            p_generator(&e, sigma)
        })
        .collect()
}

/// `exp(p_generator(b, σ))` in closed form.
///
/// With `b = |b| u`: for `σ < 0` and `C = 1/√(-σ)` the result is
///
/// ```text
/// | 1 - u u^t + cos(|b|/C) u u^t    sin(|b|/C) C u |
/// | -sin(|b|/C) u^t / C             cos(|b|/C)     |
/// ```
///
/// and for `σ > 0` the same with hyperbolic functions, `C = 1/√σ` and a
/// positive lower-left block. For `σ = 0` and `σ = ∞` the generator squares
/// to zero, so the exponential is `1 + generator`.
pub fn boost_closed_form(b: &DVector<f64>, sigma: Sigma) -> SquareMatrix {
    let n = b.len();
    let norm = b.norm();
    let gen = p_generator(b, sigma);
    let s = match sigma {
        Sigma::Finite(s) if s != 0.0 && norm > 0.0 => s,
        _ => return SquareMatrix::identity(n + 1) + gen,
    };
    let u = b / norm;
    let uut = &u * u.transpose();
    let scale = 1.0 / s.abs().sqrt();
    let angle = norm / scale;
    let (ch, sh, lower_sign) = if s < 0.0 {
        (angle.cos(), angle.sin(), -1.0)
    } else {
        (angle.cosh(), angle.sinh(), 1.0)
    };
    let mut m = DMatrix::zeros(n + 1, n + 1);
    let top_left = DMatrix::identity(n, n) - &uut + &uut * ch;
    m.view_mut((0, 0), (n, n)).copy_from(&top_left);
    m.view_mut((0, n), (n, 1)).copy_from(&(&u * (sh * scale)));
    m.view_mut((n, 0), (1, n))
        .copy_from(&(u.transpose() * (lower_sign * sh / scale)));
    m[(n, n)] = ch;
    SquareMatrix::wrap(m)
}

/// Size of the two off-diagonal (space-time mixing) blocks.
pub fn mixing_norm(a: &SquareMatrix) -> f64 {
    let blocks = block_split(a);
    blocks.b.amax().max(blocks.c.amax())
}

/// Block test for `K`: `a = diag(R, eps)` with `R^t R = 1` and `|eps| = 1`.
pub fn in_k(a: &SquareMatrix, tol: f64) -> bool {
    let blocks = block_split(a);
    mixing_norm(a) <= tol
        && orthogonality_residual(&blocks.a) <= tol
        && (blocks.d.abs() - 1.0).abs() <= tol
}

/// The metric characterization `k⁺k = 1` and `k⁻k = 1`, for finite `σ ≠ 0`.
/// Agrees with [`in_k`]; kept as an independent cross-check.
pub fn in_k_metric(a: &SquareMatrix, sigma: f64, tol: f64) -> Result<bool> {
    let eye = SquareMatrix::identity(a.dim());
    for metric in [Metric::plus(sigma)?, Metric::minus(sigma)?] {
        let prod = dagger_mutated(a, &metric, None) * a;
        if (&prod - &eye).max_abs() > tol * (1.0 + prod.max_abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of the normalizer test `a⁺a = λ·1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizerCheck {
    pub member: bool,
    /// Mean of the diagonal of `a⁺a`.
    pub lambda: f64,
    /// `||a⁺a - λ·1||` (operator norm).
    pub residual: f64,
    /// The acceptance bound `tol (1 + ||a⁺a||)`.
    pub bound: f64,
}

pub fn in_normalizer(a: &SquareMatrix, sigma: f64, tol: f64) -> Result<NormalizerCheck> {
    in_normalizer_mutated(a, sigma, tol, None)
}

pub(crate) fn in_normalizer_mutated(
    a: &SquareMatrix,
    sigma: f64,
    tol: f64,
    mutation: Option<Mutation>,
) -> Result<NormalizerCheck> {
    let plus = Metric::plus(sigma)?;
    if a.determinant().abs() <= tol {
        return Err(Error::Singular);
    }
    let q = dagger_mutated(a, &plus, mutation) * a;
    let dim = q.dim();
    let lambda = q.diagonal().sum() / dim as f64;
    let residual = (&q - &(SquareMatrix::identity(dim) * lambda)).op_norm();
    let bound = tol * (1.0 + q.op_norm());
    Ok(NormalizerCheck {
        member: residual <= bound && lambda > 0.0,
        lambda,
        residual,
        bound,
    })
}

/// Factors of `a = √λ · k · exp(Z)` with `k ∈ K` and `Z ∈ p_σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CartanFactors {
    pub lambda: f64,
    pub k: SquareMatrix,
    pub z: SquareMatrix,
}

impl CartanFactors {
    pub fn reconstruct(&self) -> SquareMatrix {
        &self.k * &mat_exp(&self.z) * self.lambda.sqrt()
    }
}

/// Cartan decomposition for `σ > 0`: `Z = ½ log(a⁻a / λ)` (the positive
/// logarithm for the positive definite form `gamma_-`) and
/// `k = a exp(-Z) / √λ`.
pub fn cartan_decompose(a: &SquareMatrix, sigma: f64, tol: f64) -> Result<CartanFactors> {
    cartan_decompose_mutated(a, sigma, tol, None)
}

pub(crate) fn cartan_decompose_mutated(
    a: &SquareMatrix,
    sigma: f64,
    tol: f64,
    mutation: Option<Mutation>,
) -> Result<CartanFactors> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::UnsupportedSigma(sigma));
    }
    let check = in_normalizer_mutated(a, sigma, tol, mutation)?;
    if check.residual > check.bound {
        return Err(Error::NotInNormalizer(check.residual));
    }
    if check.lambda <= 0.0 {
        return Err(Error::NonPositiveLambda(check.lambda));
    }
    let lambda = check.lambda;
    let minus = Metric::minus(sigma)?;
    let p = dagger_mutated(a, &minus, mutation) * a * (1.0 / lambda);
    let log_p = mat_log_positive_with(&p, &minus.gram(a.dim()), &LogOptions::default())
        .map_err(|e| Error::LogarithmFailure(e.to_string()))?;
    let z = log_p * 0.5;
    let k = a * &mat_exp(&-&z) * (1.0 / lambda.sqrt());
    Ok(CartanFactors { lambda, k, z })
}

/// Membership verdict with the defect that decided it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipCheck {
    pub member: bool,
    pub residual: f64,
}

pub fn membership(a: &SquareMatrix, group: &Group, tol: f64) -> bool {
    check_membership(a, group, tol).member
}

pub fn check_membership(a: &SquareMatrix, group: &Group, tol: f64) -> MembershipCheck {
    check_membership_mutated(a, group, tol, None)
}

pub(crate) fn check_membership_mutated(
    a: &SquareMatrix,
    group: &Group,
    tol: f64,
    mutation: Option<Mutation>,
) -> MembershipCheck {
    let verdict = |residual: f64, bound: f64| MembershipCheck {
        member: residual <= bound,
        residual,
    };
    let blocks = block_split(a);
    match *group {
        Group::Lorentz { sigma } => {
            match cartan_decompose_mutated(a, sigma, tol, mutation) {
                Ok(f) => verdict((f.lambda - 1.0).abs(), tol),
                Err(Error::NotInNormalizer(r)) => MembershipCheck {
                    member: false,
                    residual: r,
                },
                Err(_) => MembershipCheck {
                    member: false,
                    residual: f64::INFINITY,
                },
            }
        }
        Group::Orthogonal { sigma } => {
            // gamma_+ is positive definite for σ < 0; the group is its
            // linear isometry group.
            let gram = Metric::plus(sigma)
                .expect("Orthogonal group carries nonzero sigma")
                .gram(a.dim());
            let pulled = a.transpose() * &gram * a;
            verdict((&pulled - &gram).max_abs(), tol * (1.0 + gram.max_abs()))
        }
        Group::Galilei => {
            let residual = blocks
                .c
                .amax()
                .max(orthogonality_residual(&blocks.a))
                .max((blocks.d.abs() - 1.0).abs());
            verdict(residual, tol)
        }
        Group::Carroll => {
            let residual = blocks
                .b
                .amax()
                .max(orthogonality_residual(&blocks.a))
                .max((blocks.d.abs() - 1.0).abs());
            verdict(residual, tol)
        }
        Group::Aristotle => {
            let residual = mixing_norm(a)
                .max(orthogonality_residual(&blocks.a))
                .max((blocks.d.abs() - 1.0).abs());
            verdict(residual, tol)
        }
    }
}

/// Orthonormalizes a standard Gaussian matrix (modified Gram-Schmidt, two
/// passes), then flips one column with probability 1/2 so both components of
/// `O(n)` occur.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let mut q = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut ok = true;
        for j in 0..n {
            for _ in 0..2 {
                for i in 0..j {
                    let proj = q.column(i).dot(&q.column(j));
                    let qi = q.column(i).into_owned();
                    q.column_mut(j).axpy(-proj, &qi, 1.0);
                }
            }
            let norm = q.column(j).norm();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            q.column_mut(j).scale_mut(1.0 / norm);
        }
        if ok {
            if rng.random_bool(0.5) {
                q.column_mut(0).neg_mut();
            }
            return q;
        }
    }
}

/// Uniformly random direction with norm uniform in `[0, bound]`.
pub fn random_boost_vector<R: Rng + ?Sized>(n: usize, bound: f64, rng: &mut R) -> DVector<f64> {
    let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    while v.norm() == 0.0 {
        v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    }
    let radius = bound * rng.random::<f64>();
    let norm = v.norm();
    v * (radius / norm)
}

pub fn random_k<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SquareMatrix {
    let r = random_orthogonal(n, rng);
    let eps = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    k_element(&r, eps).expect("random_orthogonal returns an orthogonal matrix")
}

/// `k · exp(p(b))` with random `k ∈ K` and `|b| <= boost_bound`; just `k` for
/// the Aristotle group.
pub fn random_element_with<R: Rng + ?Sized>(
    group: &Group,
    n: usize,
    boost_bound: f64,
    rng: &mut R,
) -> SquareMatrix {
    let k = random_k(n, rng);
    match group.sigma() {
        None => k,
        Some(sigma) => {
            let b = random_boost_vector(n, boost_bound, rng);
            k * boost_closed_form(&b, sigma)
        }
    }
}

/// Deterministic in `seed`.
pub fn random_element(group: &Group, n: usize, boost_bound: f64, seed: u64) -> Result<SquareMatrix> {
    Ok(random_elements(group, n, 1, boost_bound, seed)?.remove(0))
}

pub(crate) fn check_sampling(n: usize, boost_bound: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n + 1, 3));
    }
    if !(boost_bound.is_finite() && boost_bound >= 0.0) {
        return Err(Error::InvalidConfig(format!("boost bound must be finite and >= 0, got {boost_bound}")));
    }
    Ok(())
}

/// `count` members drawn from one generator seeded with `seed`.
pub fn random_elements(
    group: &Group,
    n: usize,
    count: usize,
    boost_bound: f64,
    seed: u64,
) -> Result<Vec<SquareMatrix>> {
    check_sampling(n, boost_bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| random_element_with(group, n, boost_bound, &mut rng))
        .collect())
}

/// The rotation basis followed by `count` random elements of `p_σ`, which
/// together generate the Lie algebra of `group`. The Aristotle group gets the
/// rotation basis only.
pub fn random_generators(
    group: &Group,
    n: usize,
    count: usize,
    boost_bound: f64,
    seed: u64,
) -> Result<Vec<SquareMatrix>> {
    check_sampling(n, boost_bound)?;
    if boost_bound == 0.0 && count > 0 && group.sigma().is_some() {
        return Err(Error::InvalidConfig("boost generators need a positive boost bound".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gens = skew_basis(n);
    if let Some(sigma) = group.sigma() {
        for _ in 0..count {
            let mut b = random_boost_vector(n, boost_bound, &mut rng);
            while b.norm() == 0.0 {
                b = random_boost_vector(n, boost_bound, &mut rng);
            }
            gens.push(p_generator(&b, sigma));
        }
    }
    Ok(gens)
}
