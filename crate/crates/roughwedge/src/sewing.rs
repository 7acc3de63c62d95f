//! The abstract two-dimensional sewing engine: dyadic sums `ωⁿ`, side
//! correctors `Sⁿ`, limit extraction with constructive error bounds, and a
//! stability probe — generic over any alternating 2-germ with declared
//! `(γ₁, C₁, γ₂, C₂)` bounds.
//!
//! Constructive constants. For an alternating germ with
//! `|ω| ≤ C₁ diam^γ₁` and `|δω| ≤ C₂ diam^γ₂`, the level increments obey
//! `|Sⁿ⁺¹−Sⁿ| ≤ C₁ diam^γ₁ 2^{n(1−γ₁)}` (2ⁿ flattened midpoint triangles)
//! and `|(ωⁿ−δSⁿ)−(ωⁿ⁺¹−δSⁿ⁺¹)| ≤ 4C₂ diam^γ₂ 2^{n(2−γ₂)}` (each dyadic
//! cell contributes a prism of four 3-simplices). Summing the geometric
//! tails gives, for γ₁ > 1 and γ₂ > 2,
//!
//! `|ωⁿ − V| ≤ 4C₂ diam^γ₂ 2^{n(2−γ₂)}/(1−2^{2−γ₂})
//!            + 3C₁ diam^γ₁ 2^{n(1−γ₁)}/(1−2^{1−γ₁})`,
//!
//! which is the bound reported by [`sew`].

use crate::germ::{Germ2, GermBounds};
use crate::simplex::{cut_iter, fill, Simplex1, Simplex2};
use crate::sum::Kahan;
use crate::{Error, Result};

/// Hard cap on the dyadic level: `4^14 ≈ 2.7·10⁸` germ evaluations.
pub const MAX_DYADIC_LEVEL: u32 = 14;

/// Depth down to which the recursion forks rayon tasks. The reduction tree
/// is the recursion tree itself, so results are bitwise independent of the
/// number of worker threads.
const PARALLEL_DEPTH: u32 = 4;

/// Summation mode for the 4ⁿ-term kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SumMode {
    /// Fixed-tree pairwise reduction following the `dya` recursion;
    /// parallelizable.
    #[default]
    Pairwise,
    /// Sequential depth-first traversal with Kahan compensation.
    Compensated,
}

fn sum_rec(w: &Germ2, s: &Simplex2, n: u32, fork: u32) -> f64 {
    if n == 0 {
        return w.value(s);
    }
    let ch = s.dyadic_children();
    if fork > 0 {
        let ((a, b), (c, d)) = rayon::join(
            || {
                rayon::join(
                    || sum_rec(w, &ch[0], n - 1, fork - 1),
                    || sum_rec(w, &ch[1], n - 1, fork - 1),
                )
            },
            || {
                rayon::join(
                    || sum_rec(w, &ch[2], n - 1, fork - 1),
                    || sum_rec(w, &ch[3], n - 1, fork - 1),
                )
            },
        );
        (a + b) + (c + d)
    } else {
        let a = sum_rec(w, &ch[0], n - 1, 0);
        let b = sum_rec(w, &ch[1], n - 1, 0);
        let c = sum_rec(w, &ch[2], n - 1, 0);
        let d = sum_rec(w, &ch[3], n - 1, 0);
        (a + b) + (c + d)
    }
}

fn kahan_rec(w: &Germ2, s: &Simplex2, n: u32, acc: &mut Kahan) {
    if n == 0 {
        acc.add(w.value(s));
        return;
    }
    for c in s.dyadic_children() {
        kahan_rec(w, &c, n - 1, acc);
    }
}

/// `ωⁿ_{pqr} = ⟨dyaⁿ [pqr], ω⟩`: the germ summed over the `4^n` level-`n`
/// children with the exact orientations produced by iterated `dya`.
/// Children are streamed through the recursion, never materialized.
pub fn dyadic_sum(w: &Germ2, s: &Simplex2, n: u32) -> Result<f64> {
    dyadic_sum_with(w, s, n, SumMode::Pairwise)
}

pub fn dyadic_sum_with(w: &Germ2, s: &Simplex2, n: u32, mode: SumMode) -> Result<f64> {
    if n > MAX_DYADIC_LEVEL {
        return Err(Error::BudgetExceeded { level: n, max: MAX_DYADIC_LEVEL });
    }
    Ok(match mode {
        SumMode::Pairwise => sum_rec(w, s, n, PARALLEL_DEPTH.min(n)),
        SumMode::Compensated => {
            let mut acc = Kahan::new();
            kahan_rec(w, s, n, &mut acc);
            acc.value()
        }
    })
}

/// Side corrector `Sⁿ_{pq} = Σ_{i<n} ⟨fill cutⁱ [pq], ω⟩`; the empty sum
/// `S⁰ = 0`.
pub fn side_corrector(w: &Germ2, seg: &Simplex1, n: u32) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        total += cut_iter(seg, i).pair(|e| w.value(&fill(e)));
    }
    total
}

/// Parameters for [`sew`]: declared germ bounds plus stopping data.
#[derive(Clone, Copy, Debug)]
pub struct SewingParams {
    pub gamma1: f64,
    pub c1: f64,
    pub gamma2: f64,
    pub c2: f64,
    pub max_level: u32,
    pub target_tol: f64,
}

impl SewingParams {
    pub fn new(gamma1: f64, c1: f64, gamma2: f64, c2: f64, max_level: u32, target_tol: f64) -> Self {
        Self { gamma1, c1, gamma2, c2, max_level, target_tol }
    }

    pub fn from_bounds(b: GermBounds, max_level: u32, target_tol: f64) -> Self {
        Self::new(b.gamma1, b.c1, b.gamma2, b.c2, max_level, target_tol)
    }

    /// The hypotheses of the limit theorem: `γ₁ > 1` and `γ₂ > 2` with
    /// finite constants.
    pub fn certified_exponents(&self) -> bool {
        self.gamma1 > 1.0 && self.gamma2 > 2.0 && self.c1.is_finite() && self.c2.is_finite()
    }

    /// Constructive tail bound `|ωⁿ − V|` at level `n` on a simplex of the
    /// given diameter; infinite when the exponent hypotheses fail.
    pub fn tail_bound(&self, diam: f64, n: u32) -> f64 {
        if !self.certified_exponents() || diam == 0.0 {
            return if diam == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let nf = n as f64;
        let coboundary_tail = 4.0 * self.c2 * diam.powf(self.gamma2) * 2f64.powf(nf * (2.0 - self.gamma2))
            / (1.0 - 2f64.powf(2.0 - self.gamma2));
        let side_tail = 3.0 * self.c1 * diam.powf(self.gamma1) * 2f64.powf(nf * (1.0 - self.gamma1))
            / (1.0 - 2f64.powf(1.0 - self.gamma1));
        coboundary_tail + side_tail
    }

    /// Bound for a single side-corrector tail `|Sⁿ_{pq} − S_{pq}|`.
    pub fn side_tail_bound(&self, diam: f64, n: u32) -> f64 {
        if self.gamma1 <= 1.0 {
            return f64::INFINITY;
        }
        self.c1 * diam.powf(self.gamma1) * 2f64.powf(n as f64 * (1.0 - self.gamma1))
            / (1.0 - 2f64.powf(1.0 - self.gamma1))
    }
}

/// One row of the refinement trace.
#[derive(Clone, Copy, Debug)]
pub struct LevelTrace {
    pub level: u32,
    pub omega_n: f64,
    pub side_correctors: [f64; 3],
    pub error_bound: f64,
}

/// Output of [`sew`].
#[derive(Clone, Debug)]
pub struct SewingResult {
    /// `ωⁿ` at the final level: the estimate of the limit `V_{pqr}`.
    pub value: f64,
    /// Side correctors `Sⁿ` for the sides `[p0 p1]`, `[p1 p2]`, `[p2 p0]`.
    pub side_correctors: [f64; 3],
    pub level_used: u32,
    /// Constructive `|ωⁿ − V|` bound at the final level; infinite if the
    /// exponent hypotheses fail.
    pub error_bound: f64,
    /// False when `γ₁ ≤ 1` or `γ₂ ≤ 2` (limit not certified).
    pub certified: bool,
    pub trace: Vec<LevelTrace>,
}

/// Iterates dyadic sums of an alternating germ until the constructive
/// error bound drops below `target_tol` or `max_level` is reached.
///
/// Refuses non-alternating germs: the cancellation of interior `fill`
/// terms, on which the whole estimate rests, needs the alternating
/// hypothesis.
pub fn sew(w: &Germ2, s: &Simplex2, params: &SewingParams) -> Result<SewingResult> {
    if !w.is_alternating() {
        return Err(Error::NonAlternatingGerm);
    }
    let max_level = params.max_level.min(MAX_DYADIC_LEVEL);
    let diam = s.diam();
    let certified = params.certified_exponents();
    let sides = s.sides();
    let mut trace = Vec::with_capacity(max_level as usize + 1);
    let mut value = 0.0;
    let mut bound = f64::INFINITY;
    let mut level_used = 0;
    for n in 0..=max_level {
        let omega_n = dyadic_sum(w, s, n)?;
        if !omega_n.is_finite() {
            return Err(Error::NonFiniteGermValue { level: n });
        }
        let side_correctors = [
            side_corrector(w, &sides[0], n),
            side_corrector(w, &sides[1], n),
            side_corrector(w, &sides[2], n),
        ];
        bound = params.tail_bound(diam, n);
        trace.push(LevelTrace { level: n, omega_n, side_correctors, error_bound: bound });
        value = omega_n;
        level_used = n;
        if certified && bound <= params.target_tol {
            break;
        }
    }
    Ok(SewingResult {
        value,
        side_correctors: trace.last().map(|t| t.side_correctors).unwrap_or([0.0; 3]),
        level_used,
        error_bound: bound,
        certified,
        trace,
    })
}

/// Result of [`stability_probe`].
#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// `|V_k − V|` for each germ of the sequence.
    pub gaps: Vec<f64>,
    /// False when some germ declares bounds exceeding the uniform ones.
    pub certified: bool,
}

/// Sews every germ of a sequence and its declared limit germ with the same
/// uniform parameters and reports the distances `|V_k − V|`. When the
/// sequence converges pointwise with uniform `(C₁, C₂)`, the gaps must
/// decay — the discrete face of the stability lemma.
pub fn stability_probe(
    germs: &[Germ2],
    limit: &Germ2,
    s: &Simplex2,
    params: &SewingParams,
) -> Result<StabilityReport> {
    let v = sew(limit, s, params)?.value;
    let mut gaps = Vec::with_capacity(germs.len());
    let mut certified = params.certified_exponents();
    for g in germs {
        if let Some(b) = g.bounds() {
            if b.c1 > params.c1 * (1.0 + 1e-9) || b.c2 > params.c2 * (1.0 + 1e-9) {
                certified = false;
            }
        }
        let vk = sew(g, s, params)?.value;
        gaps.push((vk - v).abs());
    }
    Ok(StabilityReport { gaps, certified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_weierstrass, ScalarField};
    use crate::germ::{strat_germ, FormTriple};
    use crate::simplex::point;

    fn identity_triple(f: ScalarField) -> FormTriple {
        FormTriple::new(f, ScalarField::coordinate(1), ScalarField::coordinate(2))
    }

    fn std_tri() -> Simplex2 {
        Simplex2::standard()
    }

    #[test]
    fn dyadic_sum_of_signed_area_is_exact() {
        let w = strat_germ(&identity_triple(ScalarField::constant(1.0)));
        for n in 0..=8 {
            let v = dyadic_sum(&w, &std_tri(), n).unwrap();
            assert!((v - 0.5).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn dyadic_sum_level_zero_is_the_germ() {
        let t = FormTriple::new(
            make_weierstrass(0.7, 2, 8, 1).unwrap(),
            make_weierstrass(0.8, 2, 8, 2).unwrap(),
            make_weierstrass(0.9, 2, 8, 3).unwrap(),
        );
        let w = strat_germ(&t);
        let s = Simplex2::new(point(0.3, 0.1), point(1.2, 0.4), point(0.5, 1.3));
        assert_eq!(dyadic_sum(&w, &s, 0).unwrap(), w.value(&s));
    }

    #[test]
    fn centroid_rule_is_exact_for_affine_f_at_level_one() {
        // f = x1, g = identity on the standard triangle: ∫∫ x1 = 1/6, and
        // the centroid rule is exact per child for affine integrands
        let w = strat_germ(&identity_triple(ScalarField::coordinate(1)));
        for n in 1..=6 {
            let v = dyadic_sum(&w, &std_tri(), n).unwrap();
            assert!((v - 1.0 / 6.0).abs() <= 16.0 * f64::EPSILON, "level {n}: {v}");
        }
    }

    #[test]
    fn summation_modes_agree_to_rounding() {
        let t = FormTriple::new(
            make_weierstrass(0.9, 2, 10, 4).unwrap(),
            make_weierstrass(0.85, 2, 10, 5).unwrap(),
            make_weierstrass(0.85, 2, 10, 6).unwrap(),
        );
        let w = strat_germ(&t);
        let a = dyadic_sum_with(&w, &std_tri(), 6, SumMode::Pairwise).unwrap();
        let b = dyadic_sum_with(&w, &std_tri(), 6, SumMode::Compensated).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn budget_is_enforced() {
        let w = strat_germ(&identity_triple(ScalarField::constant(1.0)));
        assert!(matches!(
            dyadic_sum(&w, &std_tri(), MAX_DYADIC_LEVEL + 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn side_corrector_vanishes_for_affine_legs() {
        // fill produces collinear triangles; the g-increment determinant is 0
        let w = strat_germ(&identity_triple(make_weierstrass(0.6, 2, 8, 7).unwrap()));
        let seg = Simplex1::new(point(0.0, 0.0), point(1.0, 0.5));
        assert_eq!(side_corrector(&w, &seg, 0), 0.0); // empty sum
        for n in 1..=6 {
            assert_eq!(side_corrector(&w, &seg, n), 0.0);
        }
    }

    #[test]
    fn side_corrector_increments_obey_the_certified_bound() {
        let t = FormTriple::new(
            ScalarField::constant(1.0),
            make_weierstrass(0.8, 2, 12, 31).unwrap(),
            make_weierstrass(0.8, 2, 12, 32).unwrap(),
        );
        let w = strat_germ(&t);
        let b = w.bounds().unwrap();
        let seg = Simplex1::new(point(0.1, 0.2), point(0.9, 0.7));
        let d = seg.diam();
        let mut prev = 0.0;
        for n in 0..=8 {
            let s_n = side_corrector(&w, &seg, n);
            if n > 0 {
                let inc = (s_n - prev).abs();
                let bound = b.c1 * d.powf(b.gamma1) * 2f64.powf((n - 1) as f64 * (1.0 - b.gamma1));
                assert!(inc <= bound * (1.0 + 1e-12), "n={n}: {inc} > {bound}");
            }
            prev = s_n;
        }
    }

    #[test]
    fn sew_refuses_non_alternating_germs() {
        let t = identity_triple(ScalarField::coordinate(1));
        let ito = crate::germ::ito_germ(&t);
        let params = SewingParams::new(2.0, 1.0, 3.0, 1.0, 6, 1e-9);
        assert!(matches!(sew(&ito, &std_tri(), &params), Err(Error::NonAlternatingGerm)));
    }

    #[test]
    fn sew_flags_uncertified_exponents() {
        let w = strat_germ(&identity_triple(ScalarField::constant(1.0)));
        let params = SewingParams::new(2.0, 1.0, 1.9, 1.0, 4, 1e-9);
        let r = sew(&w, &std_tri(), &params).unwrap();
        assert!(!r.certified);
        assert!(r.error_bound.is_infinite());
    }

    #[test]
    fn sew_converges_on_degenerate_triangles() {
        // collinear triangle with rough fields: the germ itself is nonzero
        // but the dyadic sums die out — nonatomicity of the limit
        let t = FormTriple::new(
            ScalarField::constant(1.0),
            make_weierstrass(0.85, 2, 12, 41).unwrap(),
            make_weierstrass(0.85, 2, 12, 42).unwrap(),
        );
        let w = strat_germ(&t);
        let degenerate = Simplex2::new(point(0.0, 0.0), point(0.4, 0.2), point(1.0, 0.5));
        assert!(w.value(&degenerate).abs() > 1e-6);
        let params = SewingParams::from_bounds(w.bounds().unwrap(), 11, 0.0);
        let r = sew(&w, &degenerate, &params).unwrap();
        assert!(r.certified);
        assert!(r.value.abs() < 1e-4, "value {}", r.value);
        // decreasing trend across the trace tail
        let head = r.trace[0].omega_n.abs();
        let tail = r.trace.last().unwrap().omega_n.abs();
        assert!(tail < head * 0.1);
    }

    #[test]
    fn coboundary_increment_bound_holds_along_levels() {
        // |(ωⁿ−δSⁿ)−(ωⁿ⁺¹−δSⁿ⁺¹)| ≤ 4 C₂ diam^γ₂ 2^{n(2−γ₂)}
        let t = FormTriple::new(
            make_weierstrass(0.9, 2, 10, 51).unwrap(),
            make_weierstrass(0.8, 2, 10, 52).unwrap(),
            make_weierstrass(0.8, 2, 10, 53).unwrap(),
        );
        let w = strat_germ(&t);
        let b = w.bounds().unwrap();
        let s = Simplex2::new(point(0.0, 0.0), point(0.9, 0.1), point(0.2, 0.8));
        let d = s.diam();
        let sides = s.sides();
        let delta_s = |n: u32| {
            side_corrector(&w, &sides[1], n) - side_corrector(&w, &Simplex1::new(s.vertices[0], s.vertices[2]), n)
                + side_corrector(&w, &sides[0], n)
        };
        for n in 0..=7u32 {
            let a = dyadic_sum(&w, &s, n).unwrap() - delta_s(n);
            let b_next = dyadic_sum(&w, &s, n + 1).unwrap() - delta_s(n + 1);
            let inc = (a - b_next).abs();
            let bound = 4.0 * b.c2 * d.powf(b.gamma2) * 2f64.powf(n as f64 * (2.0 - b.gamma2));
            assert!(inc <= bound * (1.0 + 1e-12), "n={n}: {inc} > {bound}");
        }
    }

    #[test]
    fn stability_probe_detects_convergence() {
        let bump = |scale: f64| {
            let g1 = make_weierstrass(0.85, 2, 10, 61).unwrap();
            let g2p = move |p: crate::simplex::Point2| {
                (p.x1 * 2.1 + 0.3 * p.x2).cos() + scale * (3.0 * p.x1).sin() * (2.0 * p.x2).cos()
            };
            let g2 = ScalarField::from_fn(1.0, 2.4 + 3.6 * scale.abs(), 1.0 + scale.abs(), g2p).unwrap();
            FormTriple::new(ScalarField::constant(1.0), g1, g2)
        };
        let limit = strat_germ(&bump(0.0));
        let seq: Vec<_> = (1..=6).map(|k| strat_germ(&bump(1.0 / k as f64))).collect();
        let params = SewingParams::new(
            1.85,
            limit.bounds().unwrap().c1 * 3.0,
            2.85,
            limit.bounds().unwrap().c2.max(1.0) * 40.0,
            8,
            0.0,
        );
        let report = stability_probe(&seq, &limit, &std_tri(), &params).unwrap();
        assert!(report.certified);
        // identical germ → zero gap
        let same = stability_probe(&[limit.clone()], &limit, &std_tri(), &params).unwrap();
        assert!(same.gaps[0] == 0.0);
        // gaps shrink along the sequence
        assert!(report.gaps.last().unwrap() < &report.gaps[0]);
        assert!(*report.gaps.last().unwrap() < 0.05);
    }
}
