//! Germs of rough differential forms: coboundary, cup product,
//! antisymmetrization, and the concrete 2-germs (Stratonovich, Itô,
//! boundary-integral) together with their certified estimates.

use crate::field::ScalarField;
use crate::simplex::{Point2, Simplex1, Simplex2, Simplex3};
use crate::young::young_integral;
use std::fmt;
use std::sync::Arc;

/// `⟨[pq], δf⟩ = f(q) − f(p)` for a 0-germ `f`.
pub fn coboundary0<F: Fn(Point2) -> f64>(f: &F, s: &Simplex1) -> f64 {
    f(s.vertices[1]) - f(s.vertices[0])
}

/// `⟨[pqr], δω⟩ = ω_{qr} − ω_{pr} + ω_{pq}` for a 1-germ `ω`.
pub fn coboundary1<W: Fn(&Simplex1) -> f64>(w: &W, s: &Simplex2) -> f64 {
    w(&s.face(0)) - w(&s.face(1)) + w(&s.face(2))
}

/// `⟨[pqrs], δω⟩ = ω_{qrs} − ω_{prs} + ω_{pqs} − ω_{pqr}` for a 2-germ `ω`.
pub fn coboundary2<W: Fn(&Simplex2) -> f64>(w: &W, s: &Simplex3) -> f64 {
    w(&s.face(0)) - w(&s.face(1)) + w(&s.face(2)) - w(&s.face(3))
}

/// Cup product of a 0-germ with a 1-germ, a 1-germ:
/// `⟨[p0 p1], f ∪ ω⟩ = f(p0) · ω_{p0 p1}`.
pub fn cup01<F: Fn(Point2) -> f64, W: Fn(&Simplex1) -> f64>(f: &F, w: &W, s: &Simplex1) -> f64 {
    f(s.vertices[0]) * w(s)
}

/// Cup product of two 1-germs, a 2-germ:
/// `⟨[p0 p1 p2], ω ∪ ω̃⟩ = ω_{p0 p1} · ω̃_{p1 p2}`.
pub fn cup11<A: Fn(&Simplex1) -> f64, B: Fn(&Simplex1) -> f64>(a: &A, b: &B, s: &Simplex2) -> f64 {
    let v = &s.vertices;
    a(&Simplex1::new(v[0], v[1])) * b(&Simplex1::new(v[1], v[2]))
}

/// Cup product of a 0-germ with a 2-germ, a 2-germ:
/// `⟨[p0 p1 p2], f ∪ ω⟩ = f(p0) · ω_{p0 p1 p2}`.
pub fn cup02<F: Fn(Point2) -> f64, W: Fn(&Simplex2) -> f64>(f: &F, w: &W, s: &Simplex2) -> f64 {
    f(s.vertices[0]) * w(s)
}

/// Triple cup of 1-germs on a 3-simplex:
/// `⟨[p0 p1 p2 p3], a ∪ b ∪ c⟩ = a_{p0p1} · b_{p1p2} · c_{p2p3}`.
pub fn cup111<A, B, C>(a: &A, b: &B, c: &C, s: &Simplex3) -> f64
where
    A: Fn(&Simplex1) -> f64,
    B: Fn(&Simplex1) -> f64,
    C: Fn(&Simplex1) -> f64,
{
    let v = &s.vertices;
    a(&Simplex1::new(v[0], v[1])) * b(&Simplex1::new(v[1], v[2])) * c(&Simplex1::new(v[2], v[3]))
}

/// Determinant of g-increments over the columns `[pq]`, `[pr]`:
/// `det (δg¹_pq  δg¹_pr ; δg²_pq  δg²_pr)`.
pub fn increment_det(g1: &ScalarField, g2: &ScalarField, s: &Simplex2) -> f64 {
    let [p, q, r] = s.vertices;
    let a = g1.increment(p, q);
    let b = g1.increment(p, r);
    let c = g2.increment(p, q);
    let d = g2.increment(p, r);
    a * d - b * c
}

/// `𝒜(δg¹ ∪ δg²) = ½ (δg¹∪δg² − δg²∪δg¹)`, evaluated on a 2-simplex.
/// Equals half the increment determinant.
pub fn antisymmetrize_eval(g1: &ScalarField, g2: &ScalarField, s: &Simplex2) -> f64 {
    let d1 = |e: &Simplex1| g1.increment(e.vertices[0], e.vertices[1]);
    let d2 = |e: &Simplex1| g2.increment(e.vertices[0], e.vertices[1]);
    0.5 * (cup11(&d1, &d2, s) - cup11(&d2, &d1, s))
}

/// The data of a rough 2-form `f dg¹ ∧ dg²`.
#[derive(Clone, Debug)]
pub struct FormTriple {
    pub f: ScalarField,
    pub g1: ScalarField,
    pub g2: ScalarField,
}

impl FormTriple {
    pub fn new(f: ScalarField, g1: ScalarField, g2: ScalarField) -> Self {
        Self { f, g1, g2 }
    }

    /// `α + β₁ + β₂`.
    pub fn exponent_sum(&self) -> f64 {
        self.f.exponent() + self.g1.exponent() + self.g2.exponent()
    }

    /// Whether the exponents meet the dyadic-convergence regime
    /// `α + β₁ + β₂ > 2`.
    pub fn sewable(&self) -> bool {
        self.exponent_sum() > 2.0
    }

    /// `[g¹]·[g²]` (certified).
    pub fn g_seminorm_product(&self) -> f64 {
        self.g1.seminorm_bound() * self.g2.seminorm_bound()
    }
}

/// Size data attached to a 2-germ `ω`:
/// `|ω_{pqr}| ≤ c1 · diam^γ1` and `|δω_{pqrs}| ≤ c2 · diam^γ2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GermBounds {
    pub gamma1: f64,
    pub c1: f64,
    pub gamma2: f64,
    pub c2: f64,
}

type Germ2Fn = Arc<dyn Fn(&Simplex2) -> f64 + Send + Sync>;

/// A 2-germ: a real-valued function of oriented triangles, with an
/// alternation flag and optional certified bounds.
#[derive(Clone)]
pub struct Germ2 {
    eval: Germ2Fn,
    alternating: bool,
    bounds: Option<GermBounds>,
}

impl fmt::Debug for Germ2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Germ2")
            .field("alternating", &self.alternating)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl Germ2 {
    pub fn from_fn<F>(alternating: bool, bounds: Option<GermBounds>, eval: F) -> Self
    where
        F: Fn(&Simplex2) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            alternating,
            bounds,
        }
    }

    #[inline]
    pub fn value(&self, s: &Simplex2) -> f64 {
        (self.eval)(s)
    }

    pub fn is_alternating(&self) -> bool {
        self.alternating
    }

    pub fn bounds(&self) -> Option<GermBounds> {
        self.bounds
    }
}

/// The Stratonovich germ
/// `strat_{pqr} = ½ ((f_p+f_q+f_r)/3) det(δg | [pq],[pr])`.
///
/// Alternating; carries the certified bounds
/// `γ₁ = β₁+β₂, C₁ = ‖f‖_∞ [g¹][g²]` and
/// `γ₂ = α+β₁+β₂, C₂ = 8 [f]_α [g¹][g²]`.
pub fn strat_germ(t: &FormTriple) -> Germ2 {
    let bounds = GermBounds {
        gamma1: t.g1.exponent() + t.g2.exponent(),
        c1: t.f.sup_bound() * t.g_seminorm_product(),
        gamma2: t.exponent_sum(),
        c2: 8.0 * t.f.seminorm_bound() * t.g_seminorm_product(),
    };
    let (f, g1, g2) = (t.f.clone(), t.g1.clone(), t.g2.clone());
    Germ2::from_fn(true, Some(bounds), move |s| {
        let [p, q, r] = s.vertices;
        let avg = (f.value(p) + f.value(q) + f.value(r)) / 3.0;
        let det = g1.increment(p, q) * g2.increment(p, r) - g1.increment(p, r) * g2.increment(p, q);
        0.5 * avg * det
    })
}

/// The Itô germ `ito_{pqr} = ½ f_p det(δg | [pq],[pr])`.
///
/// Base-point sensitive (first listed vertex), not alternating. Its
/// coboundary still satisfies `|δito| ≤ [f]_α [g¹][g²] diam^{α+β₁+β₂}`.
pub fn ito_germ(t: &FormTriple) -> Germ2 {
    let bounds = GermBounds {
        gamma1: t.g1.exponent() + t.g2.exponent(),
        c1: t.f.sup_bound() * t.g_seminorm_product(),
        gamma2: t.exponent_sum(),
        c2: t.f.seminorm_bound() * t.g_seminorm_product(),
    };
    let (f, g1, g2) = (t.f.clone(), t.g1.clone(), t.g2.clone());
    Germ2::from_fn(false, Some(bounds), move |s| {
        let [p, q, r] = s.vertices;
        let det = g1.increment(p, q) * g2.increment(p, r) - g1.increment(p, r) * g2.increment(p, q);
        0.5 * f.value(p) * det
    })
}

/// The boundary-integral germ `η_{pqr} = f_p ∮_{∂[pqr]} g¹ dg²`, with the
/// side integrals computed as dyadic Young sums at `boundary_level`.
/// Nonatomic by construction: on a collinear triple the three side
/// integrals cancel pairwise.
pub fn zust_germ(t: &FormTriple, boundary_level: u32) -> Germ2 {
    let (f, g1, g2) = (t.f.clone(), t.g1.clone(), t.g2.clone());
    Germ2::from_fn(false, None, move |s| {
        let young = |e: &Simplex1| young_integral(&g1, &g2, e, boundary_level).value;
        f.value(s.vertices[0]) * coboundary1(&young, s)
    })
}

/// `δstrat` as the 3×3 determinant identity:
/// `(δ strat)_{pqrs} = (1/6) det (δf, δg¹, δg² | [pq],[pr],[ps])`.
pub fn delta_strat_det(t: &FormTriple, s: &Simplex3) -> f64 {
    let [p, q, r, w] = s.vertices;
    let row = |f: &ScalarField| [f.increment(p, q), f.increment(p, r), f.increment(p, w)];
    let a = row(&t.f);
    let b = row(&t.g1);
    let c = row(&t.g2);
    let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]);
    det / 6.0
}

/// A `(value, certified bound)` pair; `value ≤ bound` whenever the field
/// bounds are honest.
#[derive(Clone, Copy, Debug)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.value <= self.bound * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

/// Checks on a triangle:
/// `|ito − strat| ≤ 2 [f]_α [g¹][g²] diam^{α+β₁+β₂}` and
/// `|strat| ≤ ‖f‖_∞ [g¹][g²] diam^{β₁+β₂}`.
pub fn germ_bound_check2(t: &FormTriple, s: &Simplex2) -> [BoundCheck; 2] {
    let strat = strat_germ(t);
    let ito = ito_germ(t);
    let d = s.diam();
    let gap = BoundCheck {
        value: (ito.value(s) - strat.value(s)).abs(),
        bound: 2.0 * t.f.seminorm_bound() * t.g_seminorm_product() * d.powf(t.exponent_sum()),
    };
    let size = BoundCheck {
        value: strat.value(s).abs(),
        bound: t.f.sup_bound()
            * t.g_seminorm_product()
            * d.powf(t.g1.exponent() + t.g2.exponent()),
    };
    [gap, size]
}

/// Check on a quadruple: `|δstrat| ≤ 8 [f]_α [g¹][g²] diam^{α+β₁+β₂}`.
pub fn germ_bound_check3(t: &FormTriple, s: &Simplex3) -> BoundCheck {
    let strat = strat_germ(t);
    let value = coboundary2(&|tri: &Simplex2| strat.value(tri), s).abs();
    BoundCheck {
        value,
        bound: 8.0 * t.f.seminorm_bound() * t.g_seminorm_product() * s.diam().powf(t.exponent_sum()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_weierstrass;
    use crate::simplex::point;

    fn identity_triple(f: ScalarField) -> FormTriple {
        FormTriple::new(f, ScalarField::coordinate(1), ScalarField::coordinate(2))
    }

    fn std_tri() -> Simplex2 {
        Simplex2::standard()
    }

    #[test]
    fn coboundary_of_zero_form_telescopes() {
        let f = |p: Point2| p.x1 * p.x1 - 3.0 * p.x2;
        let s = Simplex1::new(point(0.2, 0.4), point(1.5, -0.9));
        let expected = f(s.end()) - f(s.start());
        assert_eq!(coboundary0(&f, &s), expected);

        // δδf = 0 on any triangle, exactly up to reassociation
        let tri = Simplex2::new(point(0.1, 0.9), point(2.0, 0.3), point(-0.4, 1.2));
        let df = |e: &Simplex1| coboundary0(&f, e);
        assert!(coboundary1(&df, &tri).abs() < 1e-14);
    }

    #[test]
    fn coboundary_of_constant_one_germ() {
        let w = |_: &Simplex1| 2.5;
        assert_eq!(coboundary1(&w, &std_tri()), 2.5);
    }

    #[test]
    fn cup_examples() {
        let f = |p: Point2| p.x1 + 1.0;
        let g = |p: Point2| p.x2 * 2.0;
        let dg = |e: &Simplex1| coboundary0(&g, e);
        let s = Simplex1::new(point(0.5, 0.0), point(0.5, 1.75));
        assert_eq!(cup01(&f, &dg, &s), 1.5 * 3.5);

        // (δg¹ ∪ δg²) with identity coordinates on p=(0,0), q=(1,0), r=(1,1)
        let d1 = |e: &Simplex1| e.vertices[1].x1 - e.vertices[0].x1;
        let d2 = |e: &Simplex1| e.vertices[1].x2 - e.vertices[0].x2;
        let tri = Simplex2::new(point(0.0, 0.0), point(1.0, 0.0), point(1.0, 1.0));
        assert_eq!(cup11(&d1, &d2, &tri), 1.0);
    }

    #[test]
    fn leibniz_rule_for_cup_products() {
        // δ(f ∪ δg) = δf ∪ δg on triangles (δδg = 0)
        let f = |p: Point2| (1.3 * p.x1 - 0.7 * p.x2).sin();
        let g = |p: Point2| p.x1 * p.x2 + 0.25 * p.x2;
        let fdg = |e: &Simplex1| cup01(&f, &|e2: &Simplex1| coboundary0(&g, e2), e);
        let tri = Simplex2::new(point(0.3, -0.2), point(1.1, 0.8), point(-0.6, 1.4));
        let lhs = coboundary1(&fdg, &tri);
        let df = |e: &Simplex1| coboundary0(&f, e);
        let dg = |e: &Simplex1| coboundary0(&g, e);
        let rhs = cup11(&df, &dg, &tri);
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * scale);

        // δ(δf ∪ δg) = 0 on quadruples
        let dfdg = |s: &Simplex2| cup11(&df, &dg, s);
        let quad = Simplex3::new(point(0.0, 0.0), point(1.0, 0.25), point(0.5, 1.5), point(-0.75, 0.5));
        let v = coboundary2(&dfdg, &quad);
        assert!(v.abs() <= 8.0 * f64::EPSILON);
    }

    #[test]
    fn antisymmetrization_matches_half_determinant() {
        let g1 = ScalarField::coordinate(1);
        let g2 = ScalarField::coordinate(2);
        assert_eq!(antisymmetrize_eval(&g1, &g2, &std_tri()), 0.5);
        assert_eq!(antisymmetrize_eval(&g2, &g1, &std_tri()), -0.5);
        assert_eq!(antisymmetrize_eval(&g1, &g1, &std_tri()), 0.0);
    }

    #[test]
    fn strat_examples_on_the_standard_triangle() {
        let one = identity_triple(ScalarField::constant(1.0));
        assert_eq!(strat_germ(&one).value(&std_tri()), 0.5);

        let x1 = identity_triple(ScalarField::coordinate(1));
        assert!((strat_germ(&x1).value(&std_tri()) - 1.0 / 6.0).abs() < 1e-16);

        let reversed = Simplex2::new(point(0.0, 0.0), point(0.0, 1.0), point(1.0, 0.0));
        assert_eq!(strat_germ(&one).value(&reversed), -0.5);
    }

    #[test]
    fn strat_sign_relations() {
        let t = FormTriple::new(
            make_weierstrass(0.7, 2, 8, 3).unwrap(),
            make_weierstrass(0.8, 2, 8, 4).unwrap(),
            make_weierstrass(0.9, 2, 8, 5).unwrap(),
        );
        let w = strat_germ(&t);
        let (p, q, r) = (point(0.12, 0.34), point(0.9, -0.1), point(0.4, 0.77));
        let v = |a, b, c| w.value(&Simplex2::new(a, b, c));
        let base = v(p, q, r);
        let scale = base.abs().max(1e-30);
        for (got, sign) in [
            (v(r, p, q), 1.0),
            (v(q, r, p), 1.0),
            (v(r, q, p), -1.0),
            (v(p, r, q), -1.0),
            (v(q, p, r), -1.0),
        ] {
            assert!((got - sign * base).abs() <= 16.0 * f64::EPSILON * scale);
        }
    }

    #[test]
    fn ito_is_base_point_sensitive() {
        let t = identity_triple(ScalarField::coordinate(1));
        let g = ito_germ(&t);
        assert_eq!(g.value(&std_tri()), 0.0); // f(p) = 0 at the origin

        // rebased at q = (1,0): [q r p]
        let rebased = Simplex2::new(point(1.0, 0.0), point(0.0, 1.0), point(0.0, 0.0));
        assert_eq!(g.value(&rebased), 0.5);

        // constant f: ito = strat = c · signed area
        let c = identity_triple(ScalarField::constant(2.0));
        assert_eq!(ito_germ(&c).value(&std_tri()), 2.0 * 0.5);
        assert_eq!(strat_germ(&c).value(&std_tri()), 2.0 * 0.5);
    }

    #[test]
    fn zust_germ_examples() {
        let one = identity_triple(ScalarField::constant(1.0));
        // ∮ x1 dx2 around the standard triangle = area = ½, first-order in
        // the boundary level
        let eta = zust_germ(&one, 12);
        assert!((eta.value(&std_tri()) - 0.5).abs() < 1e-3);

        // f = x1 vanishes at the base point
        let x1 = identity_triple(ScalarField::coordinate(1));
        assert_eq!(zust_germ(&x1, 8).value(&std_tri()), 0.0);

        let rough = FormTriple::new(
            ScalarField::constant(1.0),
            make_weierstrass(0.6, 2, 10, 1).unwrap(),
            make_weierstrass(0.6, 2, 10, 2).unwrap(),
        );
        // repeated-vertex triple: the two copies of the same side integral
        // cancel exactly and the point side is exactly zero
        let repeated = Simplex2::new(point(0.1, 0.7), point(0.8, 0.2), point(0.8, 0.2));
        assert!(zust_germ(&rough, 10).value(&repeated).abs() < 1e-12);
        // collinear triple: cancellation is asymptotic in the level
        let collinear = Simplex2::new(point(0.0, 0.0), point(0.3, 0.3), point(1.0, 1.0));
        let coarse = zust_germ(&rough, 4).value(&collinear).abs();
        let fine = zust_germ(&rough, 12).value(&collinear).abs();
        assert!(fine < coarse.max(1e-4), "fine {fine} vs coarse {coarse}");
        // ...whereas strat is atomic there at every level
        assert!(strat_germ(&rough).value(&collinear).abs() > 1e-6);
    }

    #[test]
    fn delta_strat_det_identity() {
        // affine data: rank ≤ 2, determinant vanishes
        let affine = FormTriple::new(
            ScalarField::affine(0.5, 1.0, 2.0),
            ScalarField::affine(0.0, -1.0, 3.0),
            ScalarField::affine(1.0, 0.5, 0.5),
        );
        let s = Simplex3::new(point(0.0, 0.0), point(1.0, 0.0), point(0.0, 1.0), point(0.6, 0.7));
        assert!(delta_strat_det(&affine, &s).abs() < 1e-15);

        // nonlinear data: matches the alternating face sum of strat
        let t = FormTriple::new(
            ScalarField::from_spec(&crate::field::FieldSpec::Polynomial {
                terms: vec![
                    crate::field::MonomialTerm { coef: 1.0, deg1: 3, deg2: 0 },
                    crate::field::MonomialTerm { coef: -0.5, deg1: 0, deg2: 2 },
                ],
            })
            .unwrap(),
            ScalarField::from_spec(&crate::field::FieldSpec::Polynomial {
                terms: vec![crate::field::MonomialTerm { coef: 1.0, deg1: 2, deg2: 1 }],
            })
            .unwrap(),
            ScalarField::from_spec(&crate::field::FieldSpec::Trig {
                amplitude: 1.0,
                wave: [0.7, -1.2],
                phase: 0.3,
            })
            .unwrap(),
        );
        let quad = Simplex3::new(point(0.1, 0.2), point(0.9, 0.1), point(0.5, 0.8), point(0.3, 0.5));
        let lhs = delta_strat_det(&t, &quad);
        let w = strat_germ(&t);
        let rhs = coboundary2(&|tri: &Simplex2| w.value(tri), &quad);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-3));

        // repeated vertex: repeated column
        let rep = Simplex3::new(point(0.1, 0.2), point(0.9, 0.1), point(0.9, 0.1), point(0.3, 0.5));
        assert!(delta_strat_det(&t, &rep).abs() < 1e-15);
    }

    #[test]
    fn bound_checks_hold_on_random_triangles() {
        let t = FormTriple::new(
            make_weierstrass(0.7, 2, 10, 21).unwrap(),
            make_weierstrass(0.8, 2, 10, 22).unwrap(),
            make_weierstrass(0.75, 2, 10, 23).unwrap(),
        );
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..2000 {
            let mut pts = [point(0.0, 0.0); 4];
            for p in pts.iter_mut() {
                *p = point(rnd() * 2.0 - 0.5, rnd() * 2.0 - 0.5);
            }
            let tri = Simplex2::new(pts[0], pts[1], pts[2]);
            for check in germ_bound_check2(&t, &tri) {
                assert!(check.holds(), "value {} > bound {}", check.value, check.bound);
            }
            let quad = Simplex3::new(pts[0], pts[1], pts[2], pts[3]);
            let c3 = germ_bound_check3(&t, &quad);
            assert!(c3.holds(), "δstrat {} > bound {}", c3.value, c3.bound);
        }

        // constant f: strat = ito exactly
        let cf = FormTriple::new(
            ScalarField::constant(2.0),
            make_weierstrass(0.8, 2, 10, 22).unwrap(),
            make_weierstrass(0.75, 2, 10, 23).unwrap(),
        );
        let tri = Simplex2::new(point(0.1, 0.1), point(0.8, 0.3), point(0.4, 0.9));
        let [gap, _] = germ_bound_check2(&cf, &tri);
        assert_eq!(gap.value, 0.0);

        // degenerate triangle: size bound still holds
        let degenerate = Simplex2::new(point(0.0, 0.0), point(0.5, 0.5), point(1.0, 1.0));
        let [_, size] = germ_bound_check2(&t, &degenerate);
        assert!(size.holds());
    }
}
