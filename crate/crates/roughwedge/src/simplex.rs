//! Oriented simplices of the plane, real-weighted chains, and the midpoint
//! refinement operators `dya`, `cut`, `fill`.
//!
//! Orientation is the vertex order and nothing else: no operation reorders
//! vertices behind the caller's back, because every germ in this crate is
//! orientation-sensitive. Degenerate simplices (repeated or collinear
//! vertices) are ordinary values, not errors.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point of the plane. Serializes as the two-element array `[x1, x2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x1, p.x2]
    }
}

impl Point2 {
    pub fn new(x1: f64, x2: f64) -> Self {
        debug_assert!(x1.is_finite() && x2.is_finite(), "non-finite coordinate");
        Self { x1, x2 }
    }

    pub fn dist(self, other: Self) -> f64 {
        (other - self).norm()
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    /// Exact in binary floating point whenever both coordinates are.
    pub fn midpoint(a: Self, b: Self) -> Self {
        Self::new((a.x1 + b.x1) / 2.0, (a.x2 + b.x2) / 2.0)
    }

    /// Cross product of the vectors `self` and `other` (z-component).
    pub fn cross(self, other: Self) -> f64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x1 * rhs, self.x2 * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x1, -self.x2)
    }
}

pub fn point(x1: f64, x2: f64) -> Point2 {
    Point2::new(x1, x2)
}

/// Oriented segment `[p0 p1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex1 {
    pub vertices: [Point2; 2],
}

/// Oriented (pointed) triangle `[p0 p1 p2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex2 {
    pub vertices: [Point2; 3],
}

/// Ordered quadruple `[p0 p1 p2 p3]`; in the plane these are always
/// "flat" 3-simplices, used only as arguments of coboundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex3 {
    pub vertices: [Point2; 4],
}

fn diam_of(points: &[Point2]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max(points[i].dist(points[j]));
        }
    }
    d
}

impl Simplex1 {
    pub fn new(p0: Point2, p1: Point2) -> Self {
        Self { vertices: [p0, p1] }
    }

    pub fn start(&self) -> Point2 {
        self.vertices[0]
    }

    pub fn end(&self) -> Point2 {
        self.vertices[1]
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.vertices[1], self.vertices[0])
    }

    /// Affine parametrization by `t` in `[0,1]`.
    pub fn at(&self, t: f64) -> Point2 {
        self.vertices[0] + (self.vertices[1] - self.vertices[0]) * t
    }

    pub fn diam(&self) -> f64 {
        self.vertices[0].dist(self.vertices[1])
    }

    /// `∂[p q] = [q] − [p]`.
    pub fn boundary(&self) -> Chain<Point2> {
        Chain::from_terms(vec![(1.0, self.vertices[1]), (-1.0, self.vertices[0])])
    }
}

impl Simplex2 {
    pub fn new(p0: Point2, p1: Point2, p2: Point2) -> Self {
        Self { vertices: [p0, p1, p2] }
    }

    /// The reference triangle `[(0,0) (1,0) (0,1)]`.
    pub fn standard() -> Self {
        Self::new(point(0.0, 0.0), point(1.0, 0.0), point(0.0, 1.0))
    }

    /// Face obtained by removing vertex `i`, orientation kept as listed.
    pub fn face(&self, i: usize) -> Simplex1 {
        let v = &self.vertices;
        match i {
            0 => Simplex1::new(v[1], v[2]),
            1 => Simplex1::new(v[0], v[2]),
            2 => Simplex1::new(v[0], v[1]),
            _ => panic!("face index out of range"),
        }
    }

    /// `∂[p q r] = [q r] − [p r] + [p q]`.
    pub fn boundary(&self) -> Chain<Simplex1> {
        Chain::from_terms(vec![
            (1.0, self.face(0)),
            (-1.0, self.face(1)),
            (1.0, self.face(2)),
        ])
    }

    /// The three sides traversed in the cycle p0→p1→p2→p0.
    pub fn sides(&self) -> [Simplex1; 3] {
        let v = &self.vertices;
        [
            Simplex1::new(v[0], v[1]),
            Simplex1::new(v[1], v[2]),
            Simplex1::new(v[2], v[0]),
        ]
    }

    pub fn diam(&self) -> f64 {
        diam_of(&self.vertices)
    }

    /// Signed area: `½ det(p1−p0, p2−p0)`. Positive for counterclockwise
    /// vertex order, negated by odd permutations.
    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        0.5 * (v[1] - v[0]).cross(v[2] - v[0])
    }

    pub fn centroid(&self) -> Point2 {
        let v = &self.vertices;
        Point2::new(
            (v[0].x1 + v[1].x1 + v[2].x1) / 3.0,
            (v[0].x2 + v[1].x2 + v[2].x2) / 3.0,
        )
    }

    pub fn measures(&self) -> GeomMeasures {
        GeomMeasures {
            diam: self.diam(),
            area2: self.signed_area(),
        }
    }

    /// Midpoint refinement into four children:
    /// `dya [p0 p1 p2] = [q0 q1 q2] + [q1 q0 p2] + [q2 p1 q0] + [p0 q2 q1]`
    /// with `q_i` the midpoint of the side opposite to `p_i`. Order and
    /// orientations are exactly as listed.
    pub fn dyadic_children(&self) -> [Simplex2; 4] {
        let [p0, p1, p2] = self.vertices;
        let q0 = Point2::midpoint(p1, p2);
        let q1 = Point2::midpoint(p0, p2);
        let q2 = Point2::midpoint(p0, p1);
        [
            Simplex2::new(q0, q1, q2),
            Simplex2::new(q1, q0, p2),
            Simplex2::new(q2, p1, q0),
            Simplex2::new(p0, q2, q1),
        ]
    }
}

impl Simplex3 {
    pub fn new(p0: Point2, p1: Point2, p2: Point2, p3: Point2) -> Self {
        Self { vertices: [p0, p1, p2, p3] }
    }

    /// Face obtained by removing vertex `i`.
    pub fn face(&self, i: usize) -> Simplex2 {
        let v = &self.vertices;
        match i {
            0 => Simplex2::new(v[1], v[2], v[3]),
            1 => Simplex2::new(v[0], v[2], v[3]),
            2 => Simplex2::new(v[0], v[1], v[3]),
            3 => Simplex2::new(v[0], v[1], v[2]),
            _ => panic!("face index out of range"),
        }
    }

    /// `∂[p q r s] = [qrs] − [prs] + [pqs] − [pqr]`.
    pub fn boundary(&self) -> Chain<Simplex2> {
        Chain::from_terms(vec![
            (1.0, self.face(0)),
            (-1.0, self.face(1)),
            (1.0, self.face(2)),
            (-1.0, self.face(3)),
        ])
    }

    pub fn diam(&self) -> f64 {
        diam_of(&self.vertices)
    }
}

/// Diameter and signed area of a 2-simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomMeasures {
    pub diam: f64,
    pub area2: f64,
}

/// A formal real combination of simplices of one fixed rank (the rank is
/// the type parameter). An empty chain is the zero chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain<S> {
    terms: Vec<(f64, S)>,
}

impl<S: Copy + PartialEq> Chain<S> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn from_terms(terms: Vec<(f64, S)>) -> Self {
        Self { terms }
    }

    pub fn single(s: S) -> Self {
        Self::from_terms(vec![(1.0, s)])
    }

    pub fn terms(&self) -> &[(f64, S)] {
        &self.terms
    }

    pub fn push(&mut self, coefficient: f64, simplex: S) {
        self.terms.push((coefficient, simplex));
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(c, s)| (c * factor, s)).collect(),
        }
    }

    /// Collects coefficients of bit-identical simplices and drops exact
    /// zeros. This is enough for cancellation checks such as `∂∂ = 0`,
    /// where both occurrences of a face carry the very same coordinates.
    pub fn simplified(&self) -> Self {
        let mut out: Vec<(f64, S)> = Vec::new();
        for &(c, s) in &self.terms {
            if let Some(entry) = out.iter_mut().find(|(_, t)| *t == s) {
                entry.0 += c;
            } else {
                out.push((c, s));
            }
        }
        out.retain(|&(c, _)| c != 0.0);
        Self { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.simplified().terms.is_empty()
    }

    /// Pairs the chain with a germ: `⟨Σ cᵢ Sᵢ, ω⟩ = Σ cᵢ ω(Sᵢ)`.
    pub fn pair<F: Fn(&S) -> f64>(&self, germ: F) -> f64 {
        crate::sum::pairwise_sum_by(self.terms.len(), &|i| {
            let (c, ref s) = self.terms[i];
            c * germ(s)
        })
    }

    /// Extends a simplex-wise map linearly.
    pub fn map<T: Copy + PartialEq, F: Fn(&S) -> T>(&self, f: F) -> Chain<T> {
        Chain {
            terms: self.terms.iter().map(|&(c, ref s)| (c, f(s))).collect(),
        }
    }
}

impl<S: Copy + PartialEq> Chain<S>
where
    Chain<S>: Sized,
{
    /// Applies a simplex-to-chain map and flattens, scaling by coefficients.
    pub fn bind<T: Copy + PartialEq, F: Fn(&S) -> Chain<T>>(&self, f: F) -> Chain<T> {
        let mut out = Chain::zero();
        for &(c, ref s) in &self.terms {
            for &(d, t) in f(s).terms() {
                out.push(c * d, t);
            }
        }
        out
    }
}

/// Boundary of a chain of triangles, extended linearly.
pub fn boundary2(chain: &Chain<Simplex2>) -> Chain<Simplex1> {
    chain.bind(|s| s.boundary())
}

/// `dya` as a unit-coefficient 2-chain.
pub fn dya(s: &Simplex2) -> Chain<Simplex2> {
    Chain::from_terms(s.dyadic_children().iter().map(|&c| (1.0, c)).collect())
}

/// `cut [p0 p1] = [p0 q] + [q p1]` with `q` the midpoint.
pub fn cut(s: &Simplex1) -> Chain<Simplex1> {
    let q = Point2::midpoint(s.vertices[0], s.vertices[1]);
    Chain::from_terms(vec![
        (1.0, Simplex1::new(s.vertices[0], q)),
        (1.0, Simplex1::new(q, s.vertices[1])),
    ])
}

/// `fill [p0 p1] = [p0 q p1]`, a degenerate triangle through the midpoint.
pub fn fill(s: &Simplex1) -> Simplex2 {
    let q = Point2::midpoint(s.vertices[0], s.vertices[1]);
    Simplex2::new(s.vertices[0], q, s.vertices[1])
}

/// `cut` iterated `n` times: `2^n` equal subsegments, in order.
pub fn cut_iter(s: &Simplex1, n: u32) -> Chain<Simplex1> {
    let mut chain = Chain::single(*s);
    for _ in 0..n {
        chain = chain.bind(cut);
    }
    chain
}

/// `fill` applied termwise to a 1-chain.
pub fn fill_chain(chain: &Chain<Simplex1>) -> Chain<Simplex2> {
    chain.map(fill)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_tri() -> Simplex2 {
        Simplex2::standard()
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let t = Simplex3::new(
            point(0.1, 0.2),
            point(1.3, -0.4),
            point(0.7, 1.9),
            point(-0.5, 0.6),
        );
        let dd = boundary2(&t.boundary()).bind(|s| s.boundary().map(|&p| p));
        assert!(dd.is_zero());

        let tri = std_tri();
        let dd1 = tri.boundary().bind(|s| s.boundary());
        assert!(dd1.is_zero());
    }

    #[test]
    fn boundary_segment() {
        let s = Simplex1::new(point(0.0, 0.0), point(1.0, 0.0));
        let b = s.boundary();
        assert_eq!(b.terms(), &[(1.0, point(1.0, 0.0)), (-1.0, point(0.0, 0.0))]);
    }

    #[test]
    fn dya_matches_the_listed_children() {
        let t = std_tri();
        let [c0, c1, c2, c3] = t.dyadic_children();
        assert_eq!(c0, Simplex2::new(point(0.5, 0.5), point(0.0, 0.5), point(0.5, 0.0)));
        assert_eq!(c1, Simplex2::new(point(0.0, 0.5), point(0.5, 0.5), point(0.0, 1.0)));
        assert_eq!(c2, Simplex2::new(point(0.5, 0.0), point(1.0, 0.0), point(0.5, 0.5)));
        assert_eq!(c3, Simplex2::new(point(0.0, 0.0), point(0.5, 0.0), point(0.0, 0.5)));
    }

    #[test]
    fn dya_preserves_signed_area_and_halves_diameter() {
        let t = Simplex2::new(point(0.25, -0.75), point(1.5, 0.125), point(-0.5, 2.0));
        let children = t.dyadic_children();
        let total: f64 = children.iter().map(|c| c.signed_area()).sum();
        assert_eq!(total, t.signed_area()); // exact for dyadic-rational inputs
        for c in &children {
            assert!((c.diam() - t.diam() / 2.0).abs() <= 1e-15 * t.diam());
        }
    }

    #[test]
    fn cut_and_fill() {
        let s = Simplex1::new(point(0.0, 0.0), point(1.0, 0.0));
        let c = cut(&s);
        assert_eq!(
            c.terms(),
            &[
                (1.0, Simplex1::new(point(0.0, 0.0), point(0.5, 0.0))),
                (1.0, Simplex1::new(point(0.5, 0.0), point(1.0, 0.0))),
            ]
        );
        let f = fill(&s);
        assert_eq!(f, Simplex2::new(point(0.0, 0.0), point(0.5, 0.0), point(1.0, 0.0)));
        assert_eq!(f.signed_area(), 0.0);
    }

    #[test]
    fn cut_iterated_gives_dyadic_segments() {
        let s = Simplex1::new(point(0.0, 0.0), point(1.0, 0.0));
        let n = 6;
        let c = cut_iter(&s, n);
        assert_eq!(c.terms().len(), 1 << n);
        for &(coef, seg) in c.terms() {
            assert_eq!(coef, 1.0);
            assert_eq!(seg.diam(), 1.0 / (1u64 << n) as f64);
        }
        // consecutive segments tile [0,1]
        assert_eq!(c.terms()[0].1.start(), point(0.0, 0.0));
        assert_eq!(c.terms().last().unwrap().1.end(), point(1.0, 0.0));
    }

    #[test]
    fn measures_of_standard_triangle() {
        let m = std_tri().measures();
        assert_eq!(m.area2, 0.5);
        assert!((m.diam - 2f64.sqrt()).abs() < 1e-15);

        let collinear = Simplex2::new(point(0.0, 0.0), point(0.5, 0.5), point(1.0, 1.0));
        assert_eq!(collinear.signed_area(), 0.0);

        let swapped = Simplex2::new(point(1.0, 0.0), point(0.0, 0.0), point(0.0, 1.0));
        assert_eq!(swapped.signed_area(), -0.5);
        assert_eq!(swapped.diam(), std_tri().diam());
    }
}
