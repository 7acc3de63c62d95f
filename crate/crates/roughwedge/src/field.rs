//! Scalar fields with certified Hölder data.
//!
//! A [`ScalarField`] is an evaluable function ℝ²→ℝ together with a Hölder
//! exponent `α`, a certified upper bound for the seminorm `[δf]_α` on the
//! working box, and a certified sup bound. The bounds feed every inequality
//! downstream, so they are computed analytically per constructor, never
//! estimated. [`ScalarField::estimate_seminorm`] exists to audit them.

use crate::simplex::{Point2, point};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

/// Axis-aligned rectangle; the domain on which field bounds are certified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    /// Default working box `[−1,2]²`: every triangle used in tests and
    /// experiments fits with margin.
    pub fn working_box() -> Self {
        Self::new(point(-1.0, -1.0), point(2.0, 2.0))
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x1 >= self.min.x1 && p.x1 <= self.max.x1 && p.x2 >= self.min.x2 && p.x2 <= self.max.x2
    }

    pub fn width(&self) -> f64 {
        self.max.x1 - self.min.x1
    }

    pub fn height(&self) -> f64 {
        self.max.x2 - self.min.x2
    }

    pub fn diam(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            point(self.max.x1, self.min.x2),
            self.max,
            point(self.min.x1, self.max.x2),
        ]
    }

    fn sample(&self, rng: &mut impl Rng) -> Point2 {
        point(
            rng.gen_range(self.min.x1..=self.max.x1),
            rng.gen_range(self.min.x2..=self.max.x2),
        )
    }
}

type EvalFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

/// An evaluable field with certified Hölder metadata.
#[derive(Clone)]
pub struct ScalarField {
    eval: EvalFn,
    exponent: f64,
    seminorm: f64,
    sup: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("exponent", &self.exponent)
            .field("seminorm", &self.seminorm)
            .field("sup", &self.sup)
            .finish()
    }
}

impl ScalarField {
    /// Wraps a closure with declared bounds. The caller certifies that on
    /// the working box `|f(v)−f(u)| ≤ seminorm·|v−u|^exponent` and
    /// `|f| ≤ sup`.
    pub fn from_fn<F>(exponent: f64, seminorm: f64, sup: f64, eval: F) -> Result<Self>
    where
        F: Fn(Point2) -> f64 + Send + Sync + 'static,
    {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::OutOfRange {
                name: "exponent",
                message: format!("must lie in (0,1], got {exponent}"),
            });
        }
        if !(seminorm >= 0.0) || !(sup >= 0.0) {
            return Err(Error::OutOfRange {
                name: "bounds",
                message: "seminorm and sup bounds must be nonnegative".into(),
            });
        }
        Ok(Self {
            eval: Arc::new(eval),
            exponent,
            seminorm,
            sup,
        })
    }

    #[inline]
    pub fn value(&self, p: Point2) -> f64 {
        (self.eval)(p)
    }

    /// `δf_{uv} = f(v) − f(u)`.
    #[inline]
    pub fn increment(&self, u: Point2, v: Point2) -> f64 {
        self.value(v) - self.value(u)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn seminorm_bound(&self) -> f64 {
        self.seminorm
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup
    }

    /// Hölder norm bound `‖f‖_α = ‖f‖_∞ + [δf]_α`.
    pub fn norm_bound(&self) -> f64 {
        self.sup + self.seminorm
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(1.0, 0.0, c.abs(), move |_| c).expect("constant bounds valid")
    }

    /// `c0 + c1·x1 + c2·x2` with exact Lipschitz constant and the sup taken
    /// over the given box (affine functions peak at corners).
    pub fn affine_on(c0: f64, c1: f64, c2: f64, boxr: Rect) -> Self {
        let sup = boxr
            .corners()
            .iter()
            .map(|p| (c0 + c1 * p.x1 + c2 * p.x2).abs())
            .fold(0.0, f64::max);
        Self::from_fn(1.0, c1.hypot(c2), sup, move |p| c0 + c1 * p.x1 + c2 * p.x2)
            .expect("affine bounds valid")
    }

    pub fn affine(c0: f64, c1: f64, c2: f64) -> Self {
        Self::affine_on(c0, c1, c2, Rect::working_box())
    }

    /// The coordinate fields `x1` and `x2`.
    pub fn coordinate(axis: usize) -> Self {
        match axis {
            1 => Self::affine(0.0, 1.0, 0.0),
            2 => Self::affine(0.0, 0.0, 1.0),
            _ => panic!("axis must be 1 or 2"),
        }
    }

    /// Builds from a [`FieldSpec`] on the default working box.
    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        spec.build_on(Rect::working_box())
    }

    /// Empirical seminorm: max of `|δf|/|u−v|^α` over `samples` random pairs
    /// with separations log-spaced between `scale_min` and the box diameter.
    /// Must stay below the certified bound; the property suite enforces it.
    pub fn estimate_seminorm(&self, boxr: Rect, samples: usize, scale_min: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale_max = boxr.diam();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let u = boxr.sample(&mut rng);
            let s = scale_min * (scale_max / scale_min).powf(rng.gen::<f64>());
            let ang = rng.gen_range(0.0..TAU);
            let v = point(u.x1 + s * ang.cos(), u.x2 + s * ang.sin());
            if !boxr.contains(v) {
                continue;
            }
            let d = u.dist(v);
            if d == 0.0 {
                continue;
            }
            worst = worst.max(self.increment(u, v).abs() / d.powf(self.exponent));
        }
        worst
    }
}

/// One monomial `coef · x1^deg1 · x2^deg2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub coef: f64,
    pub deg1: u32,
    pub deg2: u32,
}

/// Univariate outer functions available for composition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterFn {
    Sin,
    Cos,
}

impl OuterFn {
    fn apply(self, t: f64) -> f64 {
        match self {
            OuterFn::Sin => t.sin(),
            OuterFn::Cos => t.cos(),
        }
    }
}

/// Serializable description of a built-in field. The JSON encoding is
/// `{"kind": "...", "params": {...}}` and round-trips exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FieldSpec {
    Affine {
        c0: f64,
        c1: f64,
        c2: f64,
    },
    Polynomial {
        terms: Vec<MonomialTerm>,
    },
    Trig {
        amplitude: f64,
        wave: [f64; 2],
        phase: f64,
    },
    Weierstrass {
        beta: f64,
        base: u32,
        terms: u32,
        seed: u64,
    },
    Composed {
        outer: OuterFn,
        inner: Box<FieldSpec>,
    },
}

impl FieldSpec {
    pub fn build_on(&self, boxr: Rect) -> Result<ScalarField> {
        match self {
            FieldSpec::Affine { c0, c1, c2 } => Ok(ScalarField::affine_on(*c0, *c1, *c2, boxr)),
            FieldSpec::Polynomial { terms } => build_polynomial(terms, boxr),
            FieldSpec::Trig { amplitude, wave, phase } => {
                let (a, w, phi) = (*amplitude, *wave, *phase);
                ScalarField::from_fn(1.0, a.abs() * w[0].hypot(w[1]), a.abs(), move |p| {
                    a * (w[0] * p.x1 + w[1] * p.x2 + phi).cos()
                })
            }
            FieldSpec::Weierstrass { beta, base, terms, seed } => {
                make_weierstrass(*beta, *base, *terms, *seed)
            }
            FieldSpec::Composed { outer, inner } => {
                let inner_field = inner.build_on(boxr)?;
                let outer = *outer;
                // sin and cos are 1-Lipschitz and bounded by 1
                ScalarField::from_fn(
                    inner_field.exponent(),
                    inner_field.seminorm_bound(),
                    1.0,
                    move |p| outer.apply(inner_field.value(p)),
                )
            }
        }
    }
}

fn build_polynomial(terms: &[MonomialTerm], boxr: Rect) -> Result<ScalarField> {
    let m1 = boxr.min.x1.abs().max(boxr.max.x1.abs());
    let m2 = boxr.min.x2.abs().max(boxr.max.x2.abs());
    let mut sup = 0.0;
    let mut d1 = 0.0; // sup bound for |∂1 p|
    let mut d2 = 0.0;
    for t in terms {
        let a = t.coef.abs();
        sup += a * m1.powi(t.deg1 as i32) * m2.powi(t.deg2 as i32);
        if t.deg1 > 0 {
            d1 += a * t.deg1 as f64 * m1.powi(t.deg1 as i32 - 1) * m2.powi(t.deg2 as i32);
        }
        if t.deg2 > 0 {
            d2 += a * t.deg2 as f64 * m1.powi(t.deg1 as i32) * m2.powi(t.deg2 as i32 - 1);
        }
    }
    let terms = terms.to_vec();
    ScalarField::from_fn(1.0, d1.hypot(d2), sup, move |p| {
        terms
            .iter()
            .map(|t| t.coef * p.x1.powi(t.deg1 as i32) * p.x2.powi(t.deg2 as i32))
            .sum()
    })
}

/// Finite Weierstrass-type sum
/// `W(x) = Σ_{k<terms} base^{−kβ} cos(base^k (θ_k·x) + φ_k)`
/// with directions and phases drawn deterministically from `seed`.
///
/// The field is Lipschitz below scale `base^{−terms}` but exhibits genuine
/// exponent-β oscillation above it; experiments must keep their finest
/// scale `2^{−n}` at or above `base^{−terms}` for the Hölder model to be
/// honest. The certified seminorm uses the two-scale bound
/// `|cos a − cos b| ≤ min(2, |a−b|) ≤ 2^{1−β} |a−b|^β` termwise, giving
/// `[δW]_β ≤ 2^{1−β} · terms`.
pub fn make_weierstrass(beta: f64, base: u32, terms: u32, seed: u64) -> Result<ScalarField> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::OutOfRange {
            name: "beta",
            message: format!("must lie in (0,1), got {beta}"),
        });
    }
    if base < 2 {
        return Err(Error::OutOfRange {
            name: "base",
            message: format!("must be ≥ 2, got {base}"),
        });
    }
    if terms < 1 {
        return Err(Error::OutOfRange {
            name: "terms",
            message: "must be ≥ 1".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = base as f64;
    let mut amp = Vec::with_capacity(terms as usize);
    let mut freq = Vec::with_capacity(terms as usize);
    let mut dir = Vec::with_capacity(terms as usize);
    let mut phase = Vec::with_capacity(terms as usize);
    let mut sup = 0.0;
    for k in 0..terms {
        amp.push(b.powf(-(k as f64) * beta));
        freq.push(b.powi(k as i32));
        let ang: f64 = rng.gen_range(0.0..TAU);
        dir.push((ang.cos(), ang.sin()));
        phase.push(rng.gen_range(0.0..TAU));
        sup += amp[k as usize];
    }
    let seminorm = 2f64.powf(1.0 - beta) * terms as f64;
    ScalarField::from_fn(beta, seminorm, sup, move |p| {
        let mut acc = 0.0;
        for k in 0..amp.len() {
            acc += amp[k] * (freq[k] * (dir[k].0 * p.x1 + dir[k].1 * p.x2) + phase[k]).cos();
        }
        acc
    })
}

/// Weierstrass field with a fixed direction and phase (no randomness);
/// `terms = 1, axis (1,0), phase 0` reduces to `cos(x1)`.
pub fn make_weierstrass_axis(beta: f64, base: u32, terms: u32) -> Result<ScalarField> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::OutOfRange {
            name: "beta",
            message: format!("must lie in (0,1), got {beta}"),
        });
    }
    let b = base as f64;
    let n = terms as usize;
    let sup: f64 = (0..n).map(|k| b.powf(-(k as f64) * beta)).sum();
    let seminorm = 2f64.powf(1.0 - beta) * terms as f64;
    ScalarField::from_fn(beta, seminorm, sup, move |p| {
        (0..n)
            .map(|k| b.powf(-(k as f64) * beta) * (b.powi(k as i32) * p.x1).cos())
            .sum()
    })
}
