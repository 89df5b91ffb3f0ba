//! Inhomogeneous transformations `Γ ⋉ R^{n+1}`: a linear part acting on
//! spacetime followed by a spacetime translation, and their action on events
//! and straight world-lines.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::groups::{check_membership, check_sampling, random_element_with, Group};
use crate::matcore::SquareMatrix;

/// Below this ratio `|dt| / |d|` an image line is treated as having no time
/// extent and is returned as a bare direction.
const TIMELESS_RATIO: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct AffineElement {
    linear: SquareMatrix,
    translation: DVector<f64>,
}

impl AffineElement {
    pub fn new(linear: SquareMatrix, translation: DVector<f64>) -> Result<Self> {
        if translation.len() != linear.dim() {
            return Err(Error::DimensionMismatch {
                expected: linear.dim(),
                found: translation.len(),
            });
        }
        if translation.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if linear.inverse().is_none() {
            return Err(Error::Singular);
        }
        Ok(Self {
            linear,
            translation,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            linear: SquareMatrix::identity(n + 1),
            translation: DVector::zeros(n + 1),
        }
    }

    pub fn translation_by(v: DVector<f64>) -> Result<Self> {
        let dim = v.len();
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim, 2));
        }
        Self::new(SquareMatrix::identity(dim), v)
    }

    pub fn linear_only(linear: SquareMatrix) -> Result<Self> {
        let dim = linear.dim();
        Self::new(linear, DVector::zeros(dim))
    }

    pub fn linear(&self) -> &SquareMatrix {
        &self.linear
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    /// Spatial dimension `n`.
    pub fn n(&self) -> usize {
        self.linear.n()
    }

    /// The `(n+2)x(n+2)` matrix `(Γ, v; 0, 1)`.
    pub fn to_homogeneous(&self) -> DMatrix<f64> {
        let d = self.linear.dim();
        let mut m = DMatrix::identity(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(self.linear.as_matrix());
        m.view_mut((0, d), (d, 1)).copy_from(&self.translation);
        m
    }
}

/// `(g.linear · h.linear, g.linear · h.translation + g.translation)`.
pub fn compose(g: &AffineElement, h: &AffineElement) -> Result<AffineElement> {
    if g.linear.dim() != h.linear.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.linear.dim(),
            found: h.linear.dim(),
        });
    }
    Ok(AffineElement {
        linear: &g.linear * &h.linear,
        translation: g.linear.as_matrix() * &h.translation + &g.translation,
    })
}

pub fn inverse(g: &AffineElement) -> Result<AffineElement> {
    let inv = g.linear.inverse().ok_or(Error::Singular)?;
    let translation = -(inv.as_matrix() * &g.translation);
    Ok(AffineElement {
        linear: inv,
        translation,
    })
}

/// A spacetime event: position `r` and time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub r: DVector<f64>,
    pub t: f64,
}

impl Event {
    pub fn new(r: DVector<f64>, t: f64) -> Self {
        Self { r, t }
    }

    pub fn origin(n: usize) -> Self {
        Self::new(DVector::zeros(n), 0.0)
    }

    /// `(r_1, ..., r_n, t)`.
    pub fn pack(&self) -> DVector<f64> {
        let n = self.r.len();
        DVector::from_fn(n + 1, |i, _| if i < n { self.r[i] } else { self.t })
    }

    pub fn unpack(x: &DVector<f64>) -> Self {
        let n = x.len() - 1;
        Self::new(x.rows(0, n).into_owned(), x[n])
    }
}

pub fn act(g: &AffineElement, x: &Event) -> Result<Event> {
    if x.r.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: x.r.len(),
        });
    }
    Ok(Event::unpack(
        &(g.linear.as_matrix() * x.pack() + &g.translation),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub enum LineKind {
    /// Parametrized by time, `r(t) = r0 + v (t - t0)`.
    Velocity(DVector<f64>),
    /// A spacetime direction `(dr, dt)`, used when `dt` vanishes.
    Direction(DVector<f64>),
}

/// A straight world-line through `origin`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldLine {
    pub origin: Event,
    pub kind: LineKind,
}

impl WorldLine {
    pub fn with_velocity(origin: Event, velocity: DVector<f64>) -> Self {
        Self {
            origin,
            kind: LineKind::Velocity(velocity),
        }
    }

    pub fn with_direction(origin: Event, direction: DVector<f64>) -> Result<Self> {
        if direction.len() != origin.r.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: origin.r.len() + 1,
                found: direction.len(),
            });
        }
        if direction.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidConfig("world-line direction is zero".into()));
        }
        Ok(Self {
            origin,
            kind: LineKind::Direction(direction),
        })
    }

    /// Spacetime direction `(dr, dt)`; `(v, 1)` for a velocity line.
    pub fn direction(&self) -> DVector<f64> {
        match &self.kind {
            LineKind::Velocity(v) => Event::new(v.clone(), 1.0).pack(),
            LineKind::Direction(d) => d.clone(),
        }
    }

    pub fn velocity(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            LineKind::Velocity(v) => Some(v),
            LineKind::Direction(_) => None,
        }
    }

    pub fn speed(&self) -> Option<f64> {
        self.velocity().map(|v| v.norm())
    }

    /// The event at parameter `s` along [`Self::direction`].
    pub fn point_at(&self, s: f64) -> Event {
        Event::unpack(&(self.origin.pack() + self.direction() * s))
    }
}

/// Image of a world-line, determined by the images of two of its events.
pub fn transform_worldline(g: &AffineElement, w: &WorldLine) -> Result<WorldLine> {
    let x0 = act(g, &w.point_at(0.0))?;
    let x1 = act(g, &w.point_at(1.0))?;
    let d = x1.pack() - x0.pack();
    let n = d.len() - 1;
    let dt = d[n];
    if dt.abs() > TIMELESS_RATIO * d.norm() {
        let velocity = d.rows(0, n) / dt;
        Ok(WorldLine::with_velocity(x0, velocity))
    } else {
        WorldLine::with_direction(x0, d)
    }
}

/// `count` elements of `G ⋉ R^{n+1}`: random members of `group` paired with
/// standard normal translations, all from one generator seeded with `seed`.
pub fn random_affine_elements(
    group: &Group,
    n: usize,
    count: usize,
    boost_bound: f64,
    seed: u64,
) -> Result<Vec<AffineElement>> {
    check_sampling(n, boost_bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let linear = random_element_with(group, n, boost_bound, &mut rng);
            let t = DVector::from_fn(n + 1, |_, _| rng.sample(StandardNormal));
            AffineElement::new(linear, t)
        })
        .collect()
}

/// Membership in `G ⋉ R^{n+1}`: the linear part must lie in `G`; the
/// translation is unconstrained.
pub fn membership_affine(g: &AffineElement, group: &Group, tol: f64) -> bool {
    check_membership(&g.linear, group, tol).member
}
