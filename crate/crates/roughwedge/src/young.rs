//! One-dimensional dyadic integrals on segments: left-point (Young/Itô)
//! and trapezoidal-in-the-integrand (Stratonovich) sums.
//!
//! Partition points are the dyadic parameters `i/2^n`, exactly
//! representable, so sums are bit-reproducible. No sewing acceleration
//! here: plain level-`n` sums keep this module a trustworthy oracle for
//! the two-dimensional machinery.

use crate::field::ScalarField;
use crate::simplex::{Point2, Simplex1};
use crate::sum::pairwise_sum_by;

/// A level-`n` segment sum with its Cauchy increment `|value_n − value_{n−1}|`.
#[derive(Clone, Copy, Debug)]
pub struct SegmentIntegralResult {
    pub value: f64,
    pub level: u32,
    pub cauchy_increment: f64,
}

fn left_sum(u: &ScalarField, v: &ScalarField, seg: &Simplex1, level: u32) -> f64 {
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    pairwise_sum_by(n, &|i| {
        let a = seg.at(i as f64 * h);
        let b = seg.at((i + 1) as f64 * h);
        u.value(a) * (v.value(b) - v.value(a))
    })
}

/// Left-point Riemann–Stieltjes sum `Σ u(xᵢ) (v(xᵢ₊₁) − v(xᵢ))` over the
/// dyadic partition of `seg` into `2^level` pieces.
pub fn young_integral(
    u: &ScalarField,
    v: &ScalarField,
    seg: &Simplex1,
    level: u32,
) -> SegmentIntegralResult {
    let value = left_sum(u, v, seg, level);
    let cauchy_increment = if level == 0 {
        0.0
    } else {
        (value - left_sum(u, v, seg, level - 1)).abs()
    };
    SegmentIntegralResult {
        value,
        level,
        cauchy_increment,
    }
}

fn strat_sum<F: Fn(Point2, f64) -> f64>(big_f: &F, g: &ScalarField, seg: &Simplex1, level: u32) -> f64 {
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    pairwise_sum_by(n, &|i| {
        let a = seg.at(i as f64 * h);
        let b = seg.at((i + 1) as f64 * h);
        let (ga, gb) = (g.value(a), g.value(b));
        0.5 * (big_f(a, ga) + big_f(b, gb)) * (gb - ga)
    })
}

/// One-dimensional Stratonovich sum
/// `Σ ½ (F(xᵢ, g(xᵢ)) + F(xᵢ₊₁, g(xᵢ₊₁))) (g(xᵢ₊₁) − g(xᵢ))`.
pub fn strat1d_sum<F: Fn(Point2, f64) -> f64>(
    big_f: F,
    g: &ScalarField,
    seg: &Simplex1,
    level: u32,
) -> SegmentIntegralResult {
    let value = strat_sum(&big_f, g, seg, level);
    let cauchy_increment = if level == 0 {
        0.0
    } else {
        (value - strat_sum(&big_f, g, seg, level - 1)).abs()
    };
    SegmentIntegralResult {
        value,
        level,
        cauchy_increment,
    }
}

/// Left-point (Itô-style) companion of [`strat1d_sum`]:
/// `Σ F(xᵢ, g(xᵢ)) (g(xᵢ₊₁) − g(xᵢ))`.
pub fn ito1d_sum<F: Fn(Point2, f64) -> f64>(
    big_f: F,
    g: &ScalarField,
    seg: &Simplex1,
    level: u32,
) -> SegmentIntegralResult {
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    let value = pairwise_sum_by(n, &|i| {
        let a = seg.at(i as f64 * h);
        let b = seg.at((i + 1) as f64 * h);
        big_f(a, g.value(a)) * (g.value(b) - g.value(a))
    });
    SegmentIntegralResult {
        value,
        level,
        cauchy_increment: f64::NAN,
    }
}

/// Discrete quadratic variation `Σ (δg)²` over the dyadic partition.
pub fn quadratic_variation(g: &ScalarField, seg: &Simplex1, level: u32) -> f64 {
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    pairwise_sum_by(n, &|i| {
        let d = g.value(seg.at((i + 1) as f64 * h)) - g.value(seg.at(i as f64 * h));
        d * d
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_weierstrass, ScalarField};
    use crate::simplex::point;

    fn unit_seg() -> Simplex1 {
        Simplex1::new(point(0.0, 0.0), point(1.0, 0.0))
    }

    #[test]
    fn constant_integrand_telescopes_exactly() {
        let u = ScalarField::constant(1.0);
        let v = make_weierstrass(0.5, 2, 10, 9).unwrap();
        let seg = Simplex1::new(point(0.2, 0.1), point(0.9, 0.8));
        let exact = v.value(seg.end()) - v.value(seg.start());
        for level in 0..=10 {
            let r = young_integral(&u, &v, &seg, level);
            // telescoping up to summation rounding over 2^level terms
            assert!((r.value - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn young_integral_of_t_dt() {
        let x1 = ScalarField::coordinate(1);
        let r = young_integral(&x1, &x1, &unit_seg(), 12);
        // left sums of ∫ t dt underestimate by h/2 = 2^-13
        assert!((r.value - 0.5).abs() <= 2.0 * 2f64.powi(-12));

        let sq = ScalarField::from_spec(&crate::field::FieldSpec::Polynomial {
            terms: vec![crate::field::MonomialTerm { coef: 1.0, deg1: 2, deg2: 0 }],
        })
        .unwrap();
        let r2 = young_integral(&sq, &x1, &unit_seg(), 12);
        assert!((r2.value - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn reversal_converges_to_negation() {
        let u = make_weierstrass(0.9, 2, 8, 2).unwrap();
        let v = ScalarField::from_spec(&crate::field::FieldSpec::Trig {
            amplitude: 1.0,
            wave: [2.0, 0.0],
            phase: 0.1,
        })
        .unwrap();
        let fwd = young_integral(&u, &v, &unit_seg(), 14).value;
        let bwd = young_integral(&u, &v, &unit_seg().reversed(), 14).value;
        assert!((fwd + bwd).abs() < 1e-3);
    }

    #[test]
    fn integration_by_parts_for_smooth_fields() {
        let u = ScalarField::from_spec(&crate::field::FieldSpec::Trig {
            amplitude: 1.0,
            wave: [1.0, 0.0],
            phase: 0.0,
        })
        .unwrap();
        let v = ScalarField::from_spec(&crate::field::FieldSpec::Polynomial {
            terms: vec![crate::field::MonomialTerm { coef: 1.0, deg1: 2, deg2: 0 }],
        })
        .unwrap();
        let seg = unit_seg();
        let s = young_integral(&u, &v, &seg, 12).value + young_integral(&v, &u, &seg, 12).value;
        let boundary = u.value(seg.end()) * v.value(seg.end()) - u.value(seg.start()) * v.value(seg.start());
        assert!((s - boundary).abs() < 1e-3);
    }

    #[test]
    fn strat1d_is_exact_for_f_equals_y() {
        // F(x,y) = y telescopes: Σ ½(g_i + g_{i+1})(g_{i+1} − g_i) = ½ δ(g²)
        for (g, seg) in [
            (make_weierstrass(0.4, 2, 12, 5).unwrap(), unit_seg()),
            (ScalarField::affine(0.3, 2.0, 0.0), Simplex1::new(point(-0.4, 0.0), point(0.7, 0.2))),
        ] {
            let exact = 0.5 * (g.value(seg.end()).powi(2) - g.value(seg.start()).powi(2));
            for level in 0..=12 {
                let r = strat1d_sum(|_, y| y, &g, &seg, level);
                assert!(
                    (r.value - exact).abs() <= 8.0 * f64::EPSILON * exact.abs().max(1.0),
                    "level {level}: {} vs {exact}",
                    r.value
                );
            }
        }
    }

    #[test]
    fn strat1d_with_constant_f_telescopes() {
        let g = make_weierstrass(0.45, 2, 12, 8).unwrap();
        let seg = unit_seg();
        let exact = g.value(seg.end()) - g.value(seg.start());
        for level in [0, 3, 9] {
            let r = strat1d_sum(|_, _| 1.0, &g, &seg, level);
            assert!((r.value - exact).abs() <= 8.0 * f64::EPSILON * exact.abs().max(1.0));
        }
    }

    #[test]
    fn ito_drifts_by_half_the_quadratic_variation() {
        // the difference between Stratonovich and left-point sums with
        // F(x,y)=y is exactly Σ (δg)²/2 at every level
        let g = make_weierstrass(0.4, 2, 14, 3).unwrap();
        let seg = unit_seg();
        for level in [6, 8, 10] {
            let s = strat1d_sum(|_, y| y, &g, &seg, level).value;
            let i = ito1d_sum(|_, y| y, &g, &seg, level).value;
            let qv = quadratic_variation(&g, &seg, level);
            assert!(((s - i) - 0.5 * qv).abs() <= 1e-12 * qv.max(1.0));
            // below β = 1/2 the quadratic variation does not die out
            assert!(qv > 0.01, "qv at level {level} = {qv}");
        }
    }

    #[test]
    fn young_levels_are_cauchy_at_the_predicted_rate() {
        // u ∈ C^{β₁}, v ∈ C^{β₂}, β₁+β₂ > 1: increments shrink like
        // 2^{n(1−β₁−β₂)}; fit the log-ratio over levels 6..14
        let u = make_weierstrass(0.8, 2, 16, 31).unwrap();
        let v = make_weierstrass(0.8, 2, 16, 32).unwrap();
        let seg = unit_seg();
        let mut logs = Vec::new();
        for level in 6..=14 {
            let inc = young_integral(&u, &v, &seg, level).cauchy_increment;
            if inc > 0.0 {
                logs.push((level as f64, inc.log2()));
            }
        }
        let n = logs.len() as f64;
        let (sx, sy): (f64, f64) = logs.iter().fold((0.0, 0.0), |a, &(x, y)| (a.0 + x, a.1 + y));
        let sxx: f64 = logs.iter().map(|&(x, _)| x * x).sum();
        let sxy: f64 = logs.iter().map(|&(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let predicted = 1.0 - 0.8 - 0.8;
        assert!(
            (slope - predicted).abs() < 0.2,
            "slope {slope} vs predicted {predicted}"
        );
    }
}
