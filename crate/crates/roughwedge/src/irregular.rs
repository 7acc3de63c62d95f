//! Stratonovich integrals of composed integrands `F(x, g(x))`, where extra
//! regularity of `F` buys back roughness of `g`: the coboundary of the
//! composed Stratonovich germ gains the exponent
//! `d = (α ∧ (1+γ)(β₁∧β₂)) + β₁ + β₂`, so the dyadic sums converge even
//! when `F(·,g(·))` alone is too rough for the plain theorem. Also the
//! chain rule, planar winding numbers and the degree identity, and the
//! four components of the graph current.

use crate::field::ScalarField;
use crate::germ::{Germ2, GermBounds};
use crate::integrate::{IntegralResult, Scheme};
use crate::sewing::{dyadic_sum, SewingParams};
use crate::simplex::{point, Chain, Point2, Simplex1, Simplex2};
use crate::sum::pairwise_sum;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

/// The y-box on which built-in integrand bounds are certified: `‖y‖_∞ ≤ 4`.
pub const Y_RANGE: f64 = 4.0;

type XyFn = Arc<dyn Fn(Point2, Point2) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Point2, Point2) -> (f64, f64) + Send + Sync>;

/// An integrand `F(x, y)` with its y-gradient and certified regularity
/// data: `F(·,y) ∈ C^α` uniformly, `∇_y F(u,·) ∈ C^γ` uniformly.
#[derive(Clone)]
pub struct ComposedIntegrand {
    f: XyFn,
    grad_y: GradFn,
    pub alpha: f64,
    pub gamma: f64,
    pub sup_f: f64,
    pub sup_grad: f64,
    /// `[∇_y F]_γ` (uniform in the first argument).
    pub grad_seminorm: f64,
    /// `sup_y [F(·,y)]_α`.
    pub x_seminorm: f64,
}

impl fmt::Debug for ComposedIntegrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComposedIntegrand")
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .field("sup_f", &self.sup_f)
            .field("sup_grad", &self.sup_grad)
            .finish()
    }
}

impl ComposedIntegrand {
    #[allow(clippy::too_many_arguments)]
    pub fn new<F, G>(
        f: F,
        grad_y: G,
        alpha: f64,
        gamma: f64,
        sup_f: f64,
        sup_grad: f64,
        grad_seminorm: f64,
        x_seminorm: f64,
    ) -> Self
    where
        F: Fn(Point2, Point2) -> f64 + Send + Sync + 'static,
        G: Fn(Point2, Point2) -> (f64, f64) + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            grad_y: Arc::new(grad_y),
            alpha,
            gamma,
            sup_f,
            sup_grad,
            grad_seminorm,
            x_seminorm,
        }
    }

    #[inline]
    pub fn value(&self, x: Point2, y: Point2) -> f64 {
        (self.f)(x, y)
    }

    #[inline]
    pub fn grad(&self, x: Point2, y: Point2) -> (f64, f64) {
        (self.grad_y)(x, y)
    }

    /// Max relative mismatch between the declared gradient and a central
    /// finite difference, over random sample points in the certified box.
    pub fn grad_consistency(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = point(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0));
            let y = point(
                rng.gen_range(-Y_RANGE * 0.9..Y_RANGE * 0.9),
                rng.gen_range(-Y_RANGE * 0.9..Y_RANGE * 0.9),
            );
            let fd1 = (self.value(x, point(y.x1 + h, y.x2)) - self.value(x, point(y.x1 - h, y.x2)))
                / (2.0 * h);
            let fd2 = (self.value(x, point(y.x1, y.x2 + h)) - self.value(x, point(y.x1, y.x2 - h)))
                / (2.0 * h);
            let (g1, g2) = self.grad(x, y);
            let scale = g1.abs().max(g2.abs()).max(1.0);
            worst = worst.max((fd1 - g1).abs() / scale).max((fd2 - g2).abs() / scale);
        }
        worst
    }

    /// Built-in registry addressed by name from CLI configs.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "one" => Some(Self::new(|_, _| 1.0, |_, _| (0.0, 0.0), 1.0, 1.0, 1.0, 0.0, 0.0, 0.0)),
            "y1" => Some(Self::new(
                |_, y| y.x1,
                |_, _| (1.0, 0.0),
                1.0,
                1.0,
                Y_RANGE,
                1.0,
                0.0,
                0.0,
            )),
            "y2" => Some(Self::new(
                |_, y| y.x2,
                |_, _| (0.0, 1.0),
                1.0,
                1.0,
                Y_RANGE,
                1.0,
                0.0,
                0.0,
            )),
            "y1y2" => Some(Self::new(
                |_, y| y.x1 * y.x2,
                |_, y| (y.x2, y.x1),
                1.0,
                1.0,
                Y_RANGE * Y_RANGE,
                (2.0 * Y_RANGE * Y_RANGE).sqrt(),
                1.0,
                0.0,
            )),
            "gauss_y" => Some(Self::new(
                |_, y| (-(y.x1 * y.x1 + y.x2 * y.x2)).exp(),
                |_, y| {
                    let e = (-(y.x1 * y.x1 + y.x2 * y.x2)).exp();
                    (-2.0 * y.x1 * e, -2.0 * y.x2 * e)
                },
                1.0,
                1.0,
                1.0,
                0.86,
                2.0,
                0.0,
            )),
            _ => None,
        }
    }
}

/// The two exponent conditions of the weakened-regularity theorem.
#[derive(Clone, Copy, Debug)]
pub struct ExponentCertificate {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    /// `α + β₁ + β₂ > 2`.
    pub cond1: bool,
    /// `(1+γ)βᵢ + β₁ + β₂ > 2` for both i.
    pub cond2: bool,
}

impl ExponentCertificate {
    pub fn evaluate(alpha: f64, gamma: f64, beta1: f64, beta2: f64) -> Self {
        let bsum = beta1 + beta2;
        Self {
            alpha,
            beta1,
            beta2,
            gamma,
            cond1: alpha + bsum > 2.0,
            cond2: (1.0 + gamma) * beta1 + bsum > 2.0 && (1.0 + gamma) * beta2 + bsum > 2.0,
        }
    }

    pub fn certified(&self) -> bool {
        self.cond1 && self.cond2
    }

    /// `d = (α ∧ (1+γ)(β₁∧β₂)) + β₁ + β₂`, the coboundary exponent of the
    /// composed Stratonovich germ.
    pub fn d_exponent(&self) -> f64 {
        self.alpha.min((1.0 + self.gamma) * self.beta1.min(self.beta2)) + self.beta1 + self.beta2
    }
}

/// Composed Stratonovich germ for `f(x) = F(x, g(x))` with the certified
/// coboundary constant assembled from the Taylor-remainder estimate.
pub fn composed_strat_germ(
    c: &ComposedIntegrand,
    g1: &ScalarField,
    g2: &ScalarField,
    diam_cap: f64,
) -> (Germ2, ExponentCertificate) {
    let cert = ExponentCertificate::evaluate(c.alpha, c.gamma, g1.exponent(), g2.exponent());
    let d = cert.d_exponent();
    let deff = diam_cap.max(1.0);
    let bmin = cert.beta1.min(cert.beta2);
    let (s1, s2) = (g1.seminorm_bound(), g2.seminorm_bound());
    // |δgⁱ| ≤ Hᵢ r^{β_min} on scales r ≤ deff
    let h1 = s1 * deff.powf(cert.beta1 - bmin);
    let h2 = s2 * deff.powf(cert.beta2 - bmin);
    let c_r = c.grad_seminorm / (1.0 + c.gamma);
    // x-regularity determinant: exponent α + β₁ + β₂
    let term_x = c.x_seminorm * s1 * s2 * deff.powf(cert.alpha + cert.beta1 + cert.beta2 - d);
    // Taylor-remainder determinant: exponent (1+γ)β_min + β₁ + β₂
    let term_r = c_r
        * (h1 + h2)
        * (h1 * h1 + h2 * h2).powf(c.gamma / 2.0)
        * s1
        * s2
        * deff.powf((1.0 + c.gamma) * bmin + cert.beta1 + cert.beta2 - d);
    let bounds = GermBounds {
        gamma1: cert.beta1 + cert.beta2,
        c1: c.sup_f * s1 * s2,
        gamma2: d,
        c2: term_x + term_r,
    };
    let (cf, g1c, g2c) = (c.clone(), g1.clone(), g2.clone());
    let germ = Germ2::from_fn(true, Some(bounds), move |s: &Simplex2| {
        let [p, q, r] = s.vertices;
        let fat = |u: Point2| cf.value(u, point(g1c.value(u), g2c.value(u)));
        let avg = (fat(p) + fat(q) + fat(r)) / 3.0;
        let det =
            g1c.increment(p, q) * g2c.increment(p, r) - g1c.increment(p, r) * g2c.increment(p, q);
        0.5 * avg * det
    });
    (germ, cert)
}

/// Result of [`integrate_composed`].
#[derive(Clone, Debug)]
pub struct ComposedIntegral {
    pub result: IntegralResult,
    pub certificate: ExponentCertificate,
    /// Whether the plain dyadic-sum theorem would already certify the
    /// composed field `F(·,g(·))` as a `C^{min(α,β₁,β₂)}` integrand.
    pub plain_certified: bool,
}

/// `∫_{[pqr]} F(x,g(x)) dg¹∧dg²` by Stratonovich summation; certified
/// under the weakened exponent conditions even when the plain route fails.
pub fn integrate_composed(
    c: &ComposedIntegrand,
    g1: &ScalarField,
    g2: &ScalarField,
    s: &Simplex2,
    level: u32,
) -> Result<ComposedIntegral> {
    let bsum = g1.exponent() + g2.exponent();
    if bsum <= 1.0 {
        return Err(Error::ExponentCondition(format!(
            "β₁+β₂ = {bsum} ≤ 1: dyadic sums are not even size-bounded"
        )));
    }
    let (germ, cert) = composed_strat_germ(c, g1, g2, s.diam());
    let value = dyadic_sum(&germ, s, level)?;
    // base-point (Itô-style) companion purely as a diagnostic
    let (cf, g1c, g2c) = (c.clone(), g1.clone(), g2.clone());
    let ito = Germ2::from_fn(false, None, move |t: &Simplex2| {
        let [p, q, r] = t.vertices;
        let det =
            g1c.increment(p, q) * g2c.increment(p, r) - g1c.increment(p, r) * g2c.increment(p, q);
        0.5 * cf.value(p, point(g1c.value(p), g2c.value(p))) * det
    });
    let ito_value = dyadic_sum(&ito, s, level)?;
    let error_bound = if cert.certified() {
        SewingParams::from_bounds(germ.bounds().unwrap(), level, 0.0).tail_bound(s.diam(), level)
    } else {
        f64::INFINITY
    };
    let plain_alpha = c.alpha.min(g1.exponent()).min(g2.exponent());
    Ok(ComposedIntegral {
        result: IntegralResult {
            value,
            scheme: Scheme::Strat,
            level,
            error_bound,
            ito_strat_gap: (ito_value - value).abs(),
            certified: cert.certified(),
        },
        certificate: cert,
        plain_certified: plain_alpha + bsum > 2.0,
    })
}

type MapFn = Arc<dyn Fn(Point2) -> Point2 + Send + Sync>;
type JacFn = Arc<dyn Fn(Point2) -> [[f64; 2]; 2] + Send + Sync>;

/// A smooth map `ψ: ℝ² → ℝ²` with its Jacobian and `C^{2,γ}` bounds on
/// the certified y-box.
#[derive(Clone)]
pub struct SmoothMap2 {
    eval: MapFn,
    jacobian: JacFn,
    /// `sup ‖∇ψⁱ‖` over both components.
    pub lip: f64,
    pub sup: f64,
    /// Bound on all second derivatives.
    pub hess_bound: f64,
    pub gamma: f64,
    /// `[D²ψ]_γ`.
    pub hess_seminorm: f64,
}

impl SmoothMap2 {
    pub fn new<E, J>(eval: E, jacobian: J, lip: f64, sup: f64, hess_bound: f64, gamma: f64, hess_seminorm: f64) -> Self
    where
        E: Fn(Point2) -> Point2 + Send + Sync + 'static,
        J: Fn(Point2) -> [[f64; 2]; 2] + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            jacobian: Arc::new(jacobian),
            lip,
            sup,
            hess_bound,
            gamma,
            hess_seminorm,
        }
    }

    #[inline]
    pub fn value(&self, y: Point2) -> Point2 {
        (self.eval)(y)
    }

    #[inline]
    pub fn jacobian_at(&self, y: Point2) -> [[f64; 2]; 2] {
        (self.jacobian)(y)
    }

    pub fn jacobian_det(&self, y: Point2) -> f64 {
        let j = self.jacobian_at(y);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    pub fn identity() -> Self {
        Self::new(|y| y, |_| [[1.0, 0.0], [0.0, 1.0]], 1.0, Y_RANGE, 0.0, 1.0, 0.0)
    }

    /// `ψ(y) = (y₁², y₂)`.
    pub fn square_first() -> Self {
        Self::new(
            |y| point(y.x1 * y.x1, y.x2),
            |y| [[2.0 * y.x1, 0.0], [0.0, 1.0]],
            2.0 * Y_RANGE,
            Y_RANGE * Y_RANGE,
            2.0,
            1.0,
            0.0,
        )
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(
            move |y| point(c * y.x1 - s * y.x2, s * y.x1 + c * y.x2),
            move |_| [[c, -s], [s, c]],
            1.0,
            Y_RANGE * 2f64.sqrt(),
            0.0,
            1.0,
            0.0,
        )
    }

    /// Built-in registry addressed by name from CLI configs.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::identity()),
            "square_first" => Some(Self::square_first()),
            "rotation_30deg" => Some(Self::rotation(std::f64::consts::PI / 6.0)),
            _ => None,
        }
    }
}

/// Both sides of the chain-rule identity with their certified bounds.
#[derive(Clone, Copy, Debug)]
pub struct ChainRuleReport {
    /// `∫ F(x,h(x)) d(ψ¹∘h) ∧ d(ψ²∘h)`.
    pub lhs: f64,
    /// `∫ F(x,h(x)) det Dψ(h(x)) dh¹ ∧ dh²`.
    pub rhs: f64,
    pub residual: f64,
    pub combined_bound: f64,
    pub certified: bool,
}

/// Checks `∫ F(x,h) dg¹∧dg² = ∫ F(x,h) det Dψ(h) dh¹∧dh²` for
/// `gⁱ = ψⁱ∘h`, by evaluating both sides at the given dyadic level.
pub fn chain_rule_residual(
    c: &ComposedIntegrand,
    psi: &SmoothMap2,
    h1: &ScalarField,
    h2: &ScalarField,
    s: &Simplex2,
    level: u32,
) -> Result<ChainRuleReport> {
    let (b1, b2) = (h1.exponent(), h2.exponent());
    if b1 <= 0.5 || b2 <= 0.5 {
        return Err(Error::ExponentCondition(format!(
            "chain rule needs βᵢ > 1/2, got β₁ = {b1}, β₂ = {b2}"
        )));
    }
    if c.alpha + b1 + b2 <= 2.0 {
        return Err(Error::ExponentCondition(format!(
            "chain rule needs α+β₁+β₂ > 2, got {}",
            c.alpha + b1 + b2
        )));
    }

    // left side: legs ψⁱ∘h, still summed with the composed integrand f(x)=F(x,h(x))
    let deff = s.diam().max(1.0);
    let bmin = b1.min(b2);
    let hh1 = h1.seminorm_bound() * deff.powf(b1 - bmin);
    let hh2 = h2.seminorm_bound() * deff.powf(b2 - bmin);
    let hn = hh1.hypot(hh2);
    let leg_seminorm = psi.lip * hn;
    let (cf, h1c, h2c, psic) = (c.clone(), h1.clone(), h2.clone(), psi.clone());
    let lhs_germ = {
        // certified coboundary bound per the generalized-composition estimate:
        // exponents α+2β_min, (3+γ)β_min, 4β_min
        let d = (c.alpha + 2.0 * bmin)
            .min((3.0 + c.gamma) * bmin)
            .min(4.0 * bmin);
        let term_x = c.x_seminorm * leg_seminorm * leg_seminorm
            * deff.powf(c.alpha + 2.0 * bmin - d);
        let term_r = c.grad_seminorm / (1.0 + c.gamma)
            * (hh1 + hh2)
            * hn.powf(c.gamma)
            * leg_seminorm
            * leg_seminorm
            * deff.powf((3.0 + c.gamma) * bmin - d);
        let term_psi = c.sup_grad * psi.hess_bound * psi.lip * hn.powf(4.0)
            * deff.powf(4.0 * bmin - d);
        let bounds = GermBounds {
            gamma1: 2.0 * bmin,
            c1: c.sup_f * leg_seminorm * leg_seminorm,
            gamma2: d,
            c2: term_x + term_r + term_psi,
        };
        Germ2::from_fn(true, Some(bounds), move |t: &Simplex2| {
            let [p, q, r] = t.vertices;
            let h = |u: Point2| point(h1c.value(u), h2c.value(u));
            let g = |u: Point2| psic.value(h(u));
            let fat = |u: Point2| cf.value(u, h(u));
            let avg = (fat(p) + fat(q) + fat(r)) / 3.0;
            let (gp, gq, gr) = (g(p), g(q), g(r));
            let det = (gq.x1 - gp.x1) * (gr.x2 - gp.x2) - (gr.x1 - gp.x1) * (gq.x2 - gp.x2);
            0.5 * avg * det
        })
    };
    let lhs = dyadic_sum(&lhs_germ, s, level)?;
    let lhs_bound = if lhs_germ.bounds().unwrap().gamma2 > 2.0 {
        SewingParams::from_bounds(lhs_germ.bounds().unwrap(), level, 0.0).tail_bound(s.diam(), level)
    } else {
        f64::INFINITY
    };

    // right side: integrand F·detDψ against the raw legs h¹, h²
    let dy = (2.0 * Y_RANGE * Y_RANGE).sqrt().max(1.0);
    let det_sup = 2.0 * psi.lip * psi.lip;
    let grad_det_sup = 4.0 * psi.lip * psi.hess_bound;
    let gmin = c.gamma.min(psi.gamma);
    let grad_seminorm_rhs = c.grad_seminorm * det_sup * dy.powf(c.gamma - gmin)
        + 2.0 * c.sup_grad * grad_det_sup * dy.powf(1.0 - gmin)
        + c.sup_f * 4.0 * (psi.lip * psi.hess_seminorm * dy.powf(psi.gamma - gmin)
            + psi.hess_bound * psi.hess_bound * dy.powf(1.0 - gmin));
    let (cf2, psic2) = (c.clone(), psi.clone());
    let fd = 1e-6;
    let (cf3, psic3) = (c.clone(), psi.clone());
    let rhs_integrand = ComposedIntegrand::new(
        move |x, y| cf2.value(x, y) * psic2.jacobian_det(y),
        // finite-difference gradient: values of the germ never use it
        move |x, y| {
            let f = |yy: Point2| cf3.value(x, yy) * psic3.jacobian_det(yy);
            (
                (f(point(y.x1 + fd, y.x2)) - f(point(y.x1 - fd, y.x2))) / (2.0 * fd),
                (f(point(y.x1, y.x2 + fd)) - f(point(y.x1, y.x2 - fd))) / (2.0 * fd),
            )
        },
        c.alpha,
        gmin,
        c.sup_f * det_sup,
        c.sup_grad * det_sup + c.sup_f * grad_det_sup,
        grad_seminorm_rhs,
        c.x_seminorm * det_sup,
    );
    let rhs_res = integrate_composed(&rhs_integrand, h1, h2, s, level)?;
    let rhs = rhs_res.result.value;
    let combined_bound = lhs_bound + rhs_res.result.error_bound;
    Ok(ChainRuleReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        combined_bound,
        certified: combined_bound.is_finite(),
    })
}

/// Winding number of `t ↦ g(boundary(t)) − x` around the origin, from the
/// total of atan2 angle increments over `2^level` sample intervals per
/// segment. Guards: the sampled curve must stay away from `x`, and no
/// single angle increment may reach π (ambiguous half-turn).
pub fn winding_number(
    g1: &ScalarField,
    g2: &ScalarField,
    boundary: &Chain<Simplex1>,
    x: Point2,
    level: u32,
) -> Result<i32> {
    let mut total = 0.0;
    let n = 1usize << level;
    let mut curve_scale: f64 = 0.0;
    let mut min_dist = f64::INFINITY;
    let mut contributions = Vec::new();
    for &(coef, seg) in boundary.terms() {
        let mut angle = 0.0;
        let mut prev = {
            let p = seg.at(0.0);
            point(g1.value(p), g2.value(p)) - x
        };
        curve_scale = curve_scale.max(prev.norm());
        min_dist = min_dist.min(prev.norm());
        for j in 1..=n {
            let p = seg.at(j as f64 / n as f64);
            let v = point(g1.value(p), g2.value(p)) - x;
            curve_scale = curve_scale.max(v.norm());
            min_dist = min_dist.min(v.norm());
            let step = prev.cross(v).atan2(prev.dot(v));
            if step.abs() >= std::f64::consts::PI * (1.0 - 1e-9) {
                return Err(Error::GuardViolation {
                    distance: v.norm().min(prev.norm()),
                    guard: (v - prev).norm(),
                });
            }
            angle += step;
            prev = v;
        }
        contributions.push(coef * angle);
    }
    let guard = 1e-12 * curve_scale.max(1e-300);
    if min_dist <= guard {
        return Err(Error::GuardViolation { distance: min_dist, guard });
    }
    total += pairwise_sum(&contributions);
    Ok((total / std::f64::consts::TAU).round() as i32)
}

/// Exact winding of the sampled image polyline around `x` by signed ray
/// crossings; `None` when `x` lies on the polyline (within `eps`).
fn polyline_winding(pts: &[Point2], x: Point2, eps: f64) -> Option<i32> {
    let mut wind = 0i32;
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        // on-segment check
        let ab = b - a;
        let len2 = ab.dot(ab);
        if len2 == 0.0 {
            if (x - a).norm() <= eps {
                return None;
            }
            continue;
        }
        let t = (ab.dot(x - a) / len2).clamp(0.0, 1.0);
        let foot = a + ab * t;
        if (x - foot).norm() <= eps {
            return None;
        }
        let (ay, by) = (a.x2, b.x2);
        if (ay <= x.x2) != (by <= x.x2) {
            let cx = a.x1 + (x.x2 - ay) / (by - ay) * (b.x1 - a.x1);
            if cx > x.x1 {
                wind += if by > ay { 1 } else { -1 };
            }
        }
    }
    Some(wind)
}

/// Result of [`degree_identity_check`].
#[derive(Clone, Copy, Debug)]
pub struct DegreeReport {
    /// Grid Riemann sum of `φ(u) · deg(h, [pqr], u)`.
    pub lhs: f64,
    /// `∫ φ(h¹,h²) dh¹∧dh²` by composed Stratonovich summation.
    pub rhs: f64,
    pub gap: f64,
    /// `Σ |φ| · area` over excluded (on-curve) sample points.
    pub excluded_mass: f64,
    pub cells: usize,
    pub near_cells: usize,
}

/// Degree identity: integrates the topological degree of `h` against `φ`
/// over the image plane and compares with the composed Stratonovich
/// integral. The boundary image is sampled at `2^grid_level` points per
/// side; grid cells near the sampled curve are subsampled 8×8, and only
/// sample points falling onto the curve itself are excluded (their mass
/// is reported).
pub fn degree_identity_check(
    phi: &ComposedIntegrand,
    h1: &ScalarField,
    h2: &ScalarField,
    s: &Simplex2,
    grid_level: u32,
    sew_level: u32,
) -> Result<DegreeReport> {
    const SUB: usize = 8;
    // closed image polyline, orientation p0 → p1 → p2 → p0
    let m = 1usize << grid_level;
    let mut pts = Vec::with_capacity(3 * m);
    for side in s.sides() {
        for j in 0..m {
            let p = side.at(j as f64 / m as f64);
            pts.push(point(h1.value(p), h2.value(p)));
        }
    }
    let mesh = (0..pts.len())
        .map(|i| (pts[(i + 1) % pts.len()] - pts[i]).norm())
        .fold(0.0, f64::max);

    let (mut lo1, mut lo2, mut hi1, mut hi2) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        lo1 = lo1.min(p.x1);
        lo2 = lo2.min(p.x2);
        hi1 = hi1.max(p.x1);
        hi2 = hi2.max(p.x2);
    }
    let extent = (hi1 - lo1).max(hi2 - lo2).max(1e-12);
    // four distinct margins so that neither axis-parallel nor slope-±1
    // features of the image curve can align with the sample lattice
    let (ml1, mr1) = (extent * 0.0531, extent * 0.0779);
    let (ml2, mr2) = (extent * 0.0713, extent * 0.0397);
    let (ox, oy) = (lo1 - ml1, lo2 - ml2);
    let cells_per_axis = 1usize << grid_level;
    let cw = (hi1 - lo1 + ml1 + mr1) / cells_per_axis as f64;
    let ch = (hi2 - lo2 + ml2 + mr2) / cells_per_axis as f64;
    let cell_area = cw * ch;
    let eps = 1e-12 * extent;
    let near_radius = cw.hypot(ch) + 2.0 * mesh;

    // mark cells near the sampled curve
    let mut near = vec![false; cells_per_axis * cells_per_axis];
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        let (l1, h1b) = (a.x1.min(b.x1) - near_radius, a.x1.max(b.x1) + near_radius);
        let (l2, h2b) = (a.x2.min(b.x2) - near_radius, a.x2.max(b.x2) + near_radius);
        let i_lo = (((l1 - ox) / cw).floor().max(0.0)) as usize;
        let i_hi = (((h1b - ox) / cw).ceil().min(cells_per_axis as f64)) as usize;
        let j_lo = (((l2 - oy) / ch).floor().max(0.0)) as usize;
        let j_hi = (((h2b - oy) / ch).ceil().min(cells_per_axis as f64)) as usize;
        for jj in j_lo..j_hi {
            for ii in i_lo..i_hi {
                near[jj * cells_per_axis + ii] = true;
            }
        }
    }
    let near_cells = near.iter().filter(|&&b| b).count();

    let phi_at = |u: Point2| phi.value(point(0.0, 0.0), u);
    let rows: Vec<usize> = (0..cells_per_axis).collect();
    let row_results: Vec<(f64, f64)> = rows
        .par_iter()
        .map(|&j| {
            let mut acc = 0.0;
            let mut excluded = 0.0;
            for i in 0..cells_per_axis {
                if !near[j * cells_per_axis + i] {
                    let u = point(ox + (i as f64 + 0.5) * cw, oy + (j as f64 + 0.5) * ch);
                    match polyline_winding(&pts, u, eps) {
                        Some(w) if w != 0 => acc += phi_at(u) * w as f64 * cell_area,
                        Some(_) => {}
                        None => excluded += phi_at(u).abs() * cell_area,
                    }
                } else {
                    let sub_area = cell_area / (SUB * SUB) as f64;
                    for sj in 0..SUB {
                        for si in 0..SUB {
                            let u = point(
                                ox + (i as f64 + (si as f64 + 0.5) / SUB as f64) * cw,
                                oy + (j as f64 + (sj as f64 + 0.5) / SUB as f64) * ch,
                            );
                            match polyline_winding(&pts, u, eps) {
                                Some(w) if w != 0 => acc += phi_at(u) * w as f64 * sub_area,
                                Some(_) => {}
                                None => excluded += phi_at(u).abs() * sub_area,
                            }
                        }
                    }
                }
            }
            (acc, excluded)
        })
        .collect();
    let lhs = pairwise_sum(&row_results.iter().map(|r| r.0).collect::<Vec<_>>());
    let excluded_mass: f64 = row_results.iter().map(|r| r.1).sum();

    let rhs = integrate_composed(phi, h1, h2, s, sew_level)?.result.value;
    Ok(DegreeReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        excluded_mass,
        cells: cells_per_axis * cells_per_axis,
        near_cells,
    })
}

/// The four 2-form components a graph current can be tested against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurrentComponent {
    Dx1Dx2,
    Dx1Dy2,
    Dx2Dy1,
    Dy1Dy2,
}

/// Evaluates the graph current of `g = (g¹, g²)` on `F · (component)`.
///
/// `dx¹∧dx²` is a centroid Riemann sum; the mixed components reduce to
/// composed Stratonovich integration with a coordinate leg; `dy¹∧dy²` is
/// the full composed integral. Certified under `3β₁+β₂ > 2 ∧ 3β₂+β₁ > 2`.
pub fn current_eval(
    g1: &ScalarField,
    g2: &ScalarField,
    component: CurrentComponent,
    big_f: &ComposedIntegrand,
    s: &Simplex2,
    level: u32,
) -> Result<IntegralResult> {
    let (b1, b2) = (g1.exponent(), g2.exponent());
    let dim_ok = 3.0 * b1 + b2 > 2.0 && 3.0 * b2 + b1 > 2.0;
    match component {
        CurrentComponent::Dx1Dx2 => {
            let (f, g1c, g2c) = (big_f.clone(), g1.clone(), g2.clone());
            let w = Germ2::from_fn(false, None, move |t: &Simplex2| {
                let c = t.centroid();
                f.value(c, point(g1c.value(c), g2c.value(c))) * t.signed_area()
            });
            let value = dyadic_sum(&w, s, level)?;
            // midpoint-rule bound: oscillation of F(·,g(·)) at the child scale
            let hd = s.diam() * 2f64.powi(-(level as i32));
            let osc = big_f.x_seminorm * hd.powf(big_f.alpha)
                + big_f.sup_grad
                    * (g1.seminorm_bound() * hd.powf(b1) + g2.seminorm_bound() * hd.powf(b2));
            Ok(IntegralResult {
                value,
                scheme: Scheme::Strat,
                level,
                error_bound: osc * s.signed_area().abs(),
                ito_strat_gap: 0.0,
                certified: true,
            })
        }
        CurrentComponent::Dy1Dy2 => {
            let r = integrate_composed(big_f, g1, g2, s, level)?;
            Ok(IntegralResult { certified: r.result.certified && dim_ok, ..r.result })
        }
        CurrentComponent::Dx1Dy2 => {
            // F̄(x, (u, v)) = F(x, (g¹(x), v)), legs (x₁, g²)
            let (f, g1c) = (big_f.clone(), g1.clone());
            let (f2, g1c2) = (big_f.clone(), g1.clone());
            let deff = s.diam().max(1.0);
            let me = big_f.alpha.min(b1);
            let wrapped = ComposedIntegrand::new(
                move |x, y| f.value(x, point(g1c.value(x), y.x2)),
                move |x, y| {
                    let (_, d2) = f2.grad(x, point(g1c2.value(x), y.x2));
                    (0.0, d2)
                },
                me,
                big_f.gamma,
                big_f.sup_f,
                big_f.sup_grad,
                big_f.grad_seminorm,
                big_f.x_seminorm * deff.powf(big_f.alpha - me)
                    + big_f.sup_grad * g1.seminorm_bound() * deff.powf(b1 - me),
            );
            let r = integrate_composed(&wrapped, &ScalarField::coordinate(1), g2, s, level)?;
            Ok(IntegralResult { certified: r.result.certified && dim_ok, ..r.result })
        }
        CurrentComponent::Dx2Dy1 => {
            // F̄(x, (u, v)) = F(x, (v, g²(x))), legs (x₂, g¹)
            let (f, g2c) = (big_f.clone(), g2.clone());
            let (f2, g2c2) = (big_f.clone(), g2.clone());
            let deff = s.diam().max(1.0);
            let me = big_f.alpha.min(b2);
            let wrapped = ComposedIntegrand::new(
                move |x, y| f.value(x, point(y.x2, g2c.value(x))),
                move |x, y| {
                    let (d1, _) = f2.grad(x, point(y.x2, g2c2.value(x)));
                    (0.0, d1)
                },
                me,
                big_f.gamma,
                big_f.sup_f,
                big_f.sup_grad,
                big_f.grad_seminorm,
                big_f.x_seminorm * deff.powf(big_f.alpha - me)
                    + big_f.sup_grad * g2.seminorm_bound() * deff.powf(b2 - me),
            );
            let r = integrate_composed(&wrapped, &ScalarField::coordinate(2), g1, s, level)?;
            Ok(IntegralResult { certified: r.result.certified && dim_ok, ..r.result })
        }
    }
}
