//! User-facing integrals of `f dg¹∧dg²`: over a triangle, over a validated
//! partition, over a simple polygon (fan formula), and over open sets with
//! small boundary box-dimension (dyadic grid exhaustion).

use crate::field::Rect;
use crate::germ::{ito_germ, strat_germ, FormTriple, Germ2};
use crate::sewing::{dyadic_sum, SewingParams};
use crate::simplex::{point, Point2, Simplex1, Simplex2};
use crate::sum::pairwise_sum;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

/// Which germ family a result was summed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Strat,
    Ito,
}

/// A dyadic-sum integral estimate with its constructive error bound.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub scheme: Scheme,
    pub level: u32,
    /// Constructive bound on `|value − ∫|`; infinite when the exponent
    /// hypotheses fail (the result is then best-effort).
    pub error_bound: f64,
    /// `|itoⁿ − stratⁿ|` at the reported level.
    pub ito_strat_gap: f64,
    /// True when `α+β₁+β₂ > 2` (and, for domains, the dimension condition).
    pub certified: bool,
}

/// Bound on `|itoⁿ − stratⁿ|`: per-cell gaps `2[f]_α[g¹][g²] d^{α+β₁+β₂}`
/// summed over the `4^n` cells.
fn ito_gap_bound(t: &FormTriple, diam: f64, level: u32) -> f64 {
    let g2 = t.exponent_sum();
    2.0 * t.f.seminorm_bound()
        * t.g_seminorm_product()
        * diam.powf(g2)
        * 2f64.powf(level as f64 * (2.0 - g2))
}

/// `∫_{[pqr]} f dg¹∧dg²` estimated by the level-`n` dyadic sum of the
/// Stratonovich or Itô germ. Both sums are computed; the Itô bound adds
/// the germ-gap bound to the Stratonovich tail.
pub fn integrate_simplex(
    t: &FormTriple,
    s: &Simplex2,
    scheme: Scheme,
    level: u32,
) -> Result<IntegralResult> {
    let strat = strat_germ(t);
    let ito = ito_germ(t);
    let strat_value = dyadic_sum(&strat, s, level)?;
    let ito_value = dyadic_sum(&ito, s, level)?;
    let params = SewingParams::from_bounds(strat.bounds().unwrap(), level, 0.0);
    let strat_bound = params.tail_bound(s.diam(), level);
    let (value, error_bound) = match scheme {
        Scheme::Strat => (strat_value, strat_bound),
        Scheme::Ito => (ito_value, strat_bound + ito_gap_bound(t, s.diam(), level)),
    };
    Ok(IntegralResult {
        value,
        scheme,
        level,
        error_bound,
        ito_strat_gap: (ito_value - strat_value).abs(),
        certified: t.sewable(),
    })
}

/// `|value − ∫|` as accepted by the theorem on dyadic sums, with no
/// refinement: used per partition cell.
fn cell_bound(params: &SewingParams, diam: f64) -> f64 {
    if !(params.gamma2 > 2.0) {
        return f64::INFINITY;
    }
    4.0 * params.c2 * diam.powf(params.gamma2) / (1.0 - 2f64.powf(2.0 - params.gamma2))
}

/// A finite family of triangles intended to partition a target simplex.
#[derive(Clone, Debug)]
pub struct Partition {
    pub cells: Vec<Simplex2>,
}

/// A partition that passed the chain-identity validation, together with
/// the degenerate gluing simplices found on the target's sides.
#[derive(Clone, Debug)]
pub struct ValidatedPartition {
    pub cells: Vec<Simplex2>,
    /// Degenerate 2-simplices `Q_j` expressing subdivided sides; their
    /// free side `q_j` spans from the side start to each interior break.
    pub qjs: Vec<Simplex2>,
}

fn edge_key(a: Point2, b: Point2) -> ([u64; 4], f64, Point2, Point2) {
    // canonical lexicographic key with a direction sign
    let fwd = (a.x1, a.x2) <= (b.x1, b.x2);
    let (lo, hi) = if fwd { (a, b) } else { (b, a) };
    (
        [lo.x1.to_bits(), lo.x2.to_bits(), hi.x1.to_bits(), hi.x2.to_bits()],
        if fwd { 1.0 } else { -1.0 },
        lo,
        hi,
    )
}

/// Checks the discrete chain identity: cell areas sum to the target area,
/// interior edges cancel in opposite pairs, and the leftover boundary
/// edges tile each side of the target in the correct direction. Returns
/// the cells together with the `Q_j` bookkeeping for the side breaks.
pub fn validate_partition(target: &Simplex2, part: &Partition) -> Result<ValidatedPartition> {
    if part.cells.is_empty() {
        return Err(Error::InvalidPartition("empty cell list".into()));
    }
    let scale = target.diam();
    let total_area: f64 = pairwise_sum(&part.cells.iter().map(|c| c.signed_area()).collect::<Vec<_>>());
    if (total_area - target.signed_area()).abs() > 1e-9 * scale * scale {
        return Err(Error::InvalidPartition(format!(
            "cell areas sum to {total_area}, target has {}",
            target.signed_area()
        )));
    }

    let mut net: HashMap<[u64; 4], (f64, Point2, Point2)> = HashMap::new();
    for cell in &part.cells {
        for side in cell.sides() {
            let (key, sign, lo, hi) = edge_key(side.start(), side.end());
            let entry = net.entry(key).or_insert((0.0, lo, hi));
            entry.0 += sign;
        }
    }

    let sides = target.sides();
    // per side: interior break parameters
    let mut breaks: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (_, (mult, a, b)) in net.iter() {
        if *mult == 0.0 {
            continue;
        }
        if mult.abs() != 1.0 {
            return Err(Error::InvalidPartition(format!(
                "edge [{a:?} {b:?}] has net multiplicity {mult}"
            )));
        }
        // orient the edge the way it actually appears on the boundary
        let (from, to) = if *mult > 0.0 { (*a, *b) } else { (*b, *a) };
        let mut placed = false;
        for (i, side) in sides.iter().enumerate() {
            let dir = side.end() - side.start();
            let len2 = dir.dot(dir);
            let cross_a = dir.cross(from - side.start());
            let cross_b = dir.cross(to - side.start());
            if cross_a.abs() > 1e-9 * len2 || cross_b.abs() > 1e-9 * len2 {
                continue;
            }
            let ta = dir.dot(from - side.start()) / len2;
            let tb = dir.dot(to - side.start()) / len2;
            if ta < -1e-9 || ta > 1.0 + 1e-9 || tb < -1e-9 || tb > 1.0 + 1e-9 {
                continue;
            }
            if tb <= ta {
                return Err(Error::InvalidPartition(format!(
                    "boundary edge [{from:?} {to:?}] runs against side {i}"
                )));
            }
            breaks[i].push(ta);
            breaks[i].push(tb);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::InvalidPartition(format!(
                "uncancelled interior edge [{from:?} {to:?}]"
            )));
        }
    }

    let mut qjs = Vec::new();
    for (i, side) in sides.iter().enumerate() {
        let ts = &mut breaks[i];
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if ts.is_empty() {
            return Err(Error::InvalidPartition(format!("side {i} is not covered")));
        }
        // endpoints must be 0 and 1; interior breaks appear twice (end of
        // one edge, start of the next)
        if ts[0].abs() > 1e-9 || (ts[ts.len() - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPartition(format!("side {i} tiling misses an endpoint")));
        }
        let mut uniq: Vec<f64> = Vec::new();
        let mut idx = 1;
        while idx + 1 < ts.len() {
            if (ts[idx] - ts[idx + 1]).abs() > 1e-9 {
                return Err(Error::InvalidPartition(format!("side {i} has a gap or overlap")));
            }
            uniq.push(ts[idx]);
            idx += 2;
        }
        // fan of degenerate simplices from the side start through each break
        let mut prev = side.start();
        for &tb in &uniq {
            let b = side.at(tb);
            qjs.push(Simplex2::new(side.start(), prev, b));
            prev = b;
        }
        if !uniq.is_empty() {
            qjs.push(Simplex2::new(side.start(), prev, side.end()));
        }
    }
    // drop the zero-length leading fans
    qjs.retain(|q| q.vertices[0] != q.vertices[1]);

    Ok(ValidatedPartition { cells: part.cells.clone(), qjs })
}

/// Single-germ-per-cell Stratonovich summation over a validated partition:
/// returns the value and the constructive bound
/// `4C₂/(1−2^{2−γ₂}) Σ diam(Δᵢ)^{γ₂} + C₁/(1−2^{1−γ₁}) Σ diam(q_j)^{γ₁}`.
pub fn integrate_partition(t: &FormTriple, s: &Simplex2, part: &Partition) -> Result<(f64, f64)> {
    let validated = validate_partition(s, part)?;
    let w = strat_germ(t);
    let values: Vec<f64> = validated.cells.iter().map(|c| w.value(c)).collect();
    let value = pairwise_sum(&values);
    let params = SewingParams::from_bounds(w.bounds().unwrap(), 0, 0.0);
    let mut bound = 0.0;
    for c in &validated.cells {
        bound += cell_bound(&params, c.diam());
    }
    for q in &validated.qjs {
        bound += params.side_tail_bound(q.diam(), 0);
    }
    Ok((value, bound))
}

/// An oriented simple polygon (counterclockwise = positive orientation).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PolygonSpec", into = "PolygonSpec")]
pub struct Polygon {
    vertices: Vec<Point2>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PolygonSpec {
    vertices: Vec<[f64; 2]>,
}

impl TryFrom<PolygonSpec> for Polygon {
    type Error = Error;
    fn try_from(spec: PolygonSpec) -> Result<Self> {
        Polygon::new(spec.vertices.into_iter().map(|[a, b]| point(a, b)).collect())
    }
}

impl From<Polygon> for PolygonSpec {
    fn from(p: Polygon) -> Self {
        PolygonSpec { vertices: p.vertices.iter().map(|v| [v.x1, v.x2]).collect() }
    }
}

fn proper_crossing(a: &Simplex1, b: &Simplex1) -> bool {
    let side = |s: &Simplex1, p: Point2| (s.end() - s.start()).cross(p - s.start());
    let s1 = side(a, b.start());
    let s2 = side(a, b.end());
    let s3 = side(b, a.start());
    let s4 = side(b, a.end());
    s1 * s2 < 0.0 && s3 * s4 < 0.0
}

impl Polygon {
    /// Validates vertex count and simplicity. Only *proper* crossings are
    /// rejected: collinear or touching configurations pass, so zero-area
    /// polygons are representable (they integrate to zero in the limit).
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        let n = vertices.len();
        for i in 0..n {
            let ei = Simplex1::new(vertices[i], vertices[(i + 1) % n]);
            for j in i + 1..n {
                if j == i || (j + 1) % n == i || (i + 1) % n == j {
                    continue;
                }
                let ej = Simplex1::new(vertices[j], vertices[(j + 1) % n]);
                if proper_crossing(&ei, &ej) {
                    return Err(Error::SelfIntersectingPolygon(i, j));
                }
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn unit_square() -> Self {
        Self::new(vec![point(0.0, 0.0), point(1.0, 0.0), point(1.0, 1.0), point(0.0, 1.0)]).unwrap()
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let terms: Vec<f64> = (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .collect();
        0.5 * pairwise_sum(&terms)
    }

    /// Fan triangles `[aⱼ a_{j+1} b]` around an arbitrary apex `b`.
    pub fn fan(&self, apex: Point2) -> Vec<Simplex2> {
        let n = self.vertices.len();
        (0..n)
            .map(|j| Simplex2::new(self.vertices[j], self.vertices[(j + 1) % n], apex))
            .collect()
    }

    /// Ear-clipping triangulation; an independent cross-check for the fan
    /// formula. Requires nonzero area.
    pub fn earclip(&self) -> Result<Vec<Simplex2>> {
        let orientation = self.signed_area();
        if orientation == 0.0 {
            return Err(Error::InvalidPartition("zero-area polygon cannot be ear-clipped".into()));
        }
        let sign = orientation.signum();
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        let mut tris = Vec::new();
        let inside = |a: Point2, b: Point2, c: Point2, p: Point2| {
            let d1 = (b - a).cross(p - a) * sign;
            let d2 = (c - b).cross(p - b) * sign;
            let d3 = (a - c).cross(p - c) * sign;
            d1 > 0.0 && d2 > 0.0 && d3 > 0.0
        };
        let mut guard = 0;
        while idx.len() > 3 {
            let n = idx.len();
            let mut clipped = false;
            for k in 0..n {
                let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
                let (a, b, c) = (self.vertices[ia], self.vertices[ib], self.vertices[ic]);
                if (b - a).cross(c - a) * sign <= 0.0 {
                    continue; // reflex or degenerate corner
                }
                let mut blocked = false;
                for &other in &idx {
                    if other == ia || other == ib || other == ic {
                        continue;
                    }
                    if inside(a, b, c, self.vertices[other]) {
                        blocked = true;
                        break;
                    }
                }
                if !blocked {
                    tris.push(Simplex2::new(a, b, c));
                    idx.remove(k);
                    clipped = true;
                    break;
                }
            }
            guard += 1;
            if !clipped || guard > 10 * self.vertices.len() {
                return Err(Error::InvalidPartition("ear clipping failed".into()));
            }
        }
        tris.push(Simplex2::new(
            self.vertices[idx[0]],
            self.vertices[idx[1]],
            self.vertices[idx[2]],
        ));
        Ok(tris)
    }
}

/// Polygon integral by the apex-fan formula
/// `Σⱼ ∫_{[aⱼ a_{j+1} b]} f dg¹∧dg²`. The result is independent of the
/// apex within the summed error bounds.
pub fn integrate_polygon(
    t: &FormTriple,
    poly: &Polygon,
    apex: Point2,
    scheme: Scheme,
    level: u32,
) -> Result<IntegralResult> {
    integrate_triangle_family(t, &poly.fan(apex), scheme, level)
}

fn integrate_triangle_family(
    t: &FormTriple,
    tris: &[Simplex2],
    scheme: Scheme,
    level: u32,
) -> Result<IntegralResult> {
    let strat = strat_germ(t);
    let ito = ito_germ(t);
    let params = SewingParams::from_bounds(strat.bounds().unwrap(), level, 0.0);
    let parts: Vec<(f64, f64, f64)> = tris
        .par_iter()
        .map(|tri| {
            let sv = dyadic_sum(&strat, tri, level)?;
            let iv = dyadic_sum(&ito, tri, level)?;
            let b = params.tail_bound(tri.diam(), level)
                + if scheme == Scheme::Ito { ito_gap_bound(t, tri.diam(), level) } else { 0.0 };
            Ok((sv, iv, b))
        })
        .collect::<Result<_>>()?;
    let strat_total = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let ito_total = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
    let bound: f64 = parts.iter().map(|p| p.2).sum();
    Ok(IntegralResult {
        value: match scheme {
            Scheme::Strat => strat_total,
            Scheme::Ito => ito_total,
        },
        scheme,
        level,
        error_bound: bound,
        ito_strat_gap: (ito_total - strat_total).abs(),
        certified: t.sewable(),
    })
}

/// A bounded open set described by a containment predicate, a bounding
/// box, and an (estimated or known) upper box dimension of its boundary.
#[derive(Clone)]
pub struct DyadicDomain {
    inside: Arc<dyn Fn(Point2) -> bool + Send + Sync>,
    pub bbox: Rect,
    pub boundary_dim_estimate: f64,
}

impl DyadicDomain {
    pub fn new<F>(bbox: Rect, boundary_dim_estimate: f64, inside: F) -> Self
    where
        F: Fn(Point2) -> bool + Send + Sync + 'static,
    {
        Self { inside: Arc::new(inside), bbox, boundary_dim_estimate }
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        (self.inside)(p)
    }

    pub fn disk(center: Point2, radius: f64) -> Self {
        Self::new(
            Rect::new(
                point(center.x1 - radius, center.x2 - radius),
                point(center.x1 + radius, center.x2 + radius),
            ),
            1.0,
            move |p| (p - center).norm() < radius,
        )
    }

    pub fn square(r: Rect) -> Self {
        Self::new(r, 1.0, move |p| {
            p.x1 > r.min.x1 && p.x1 < r.max.x1 && p.x2 > r.min.x2 && p.x2 < r.max.x2
        })
    }

    /// Region between the x₁-axis and the graph of `offset + scale·W`.
    pub fn weierstrass_hypograph(
        beta: f64,
        base: u32,
        terms: u32,
        seed: u64,
        offset: f64,
        scale: f64,
    ) -> Result<Self> {
        let w = crate::field::make_weierstrass(beta, base, terms, seed)?;
        let top = offset + scale.abs() * w.sup_bound();
        Ok(Self::new(
            Rect::new(point(0.0, 0.0), point(1.0, top.max(1e-9))),
            2.0 - beta,
            move |p| {
                p.x1 > 0.0
                    && p.x1 < 1.0
                    && p.x2 > 0.0
                    && p.x2 < offset + scale * w.value(point(p.x1, 0.0))
            },
        ))
    }
}

/// Serializable description of the built-in domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk { center: [f64; 2], radius: f64 },
    Square { min: [f64; 2], max: [f64; 2] },
    WeierstrassHypograph { beta: f64, base: u32, terms: u32, seed: u64, offset: f64, scale: f64 },
}

impl DomainSpec {
    pub fn build(&self) -> Result<DyadicDomain> {
        match *self {
            DomainSpec::Disk { center, radius } => {
                if !(radius > 0.0) {
                    return Err(Error::OutOfRange { name: "radius", message: "must be positive".into() });
                }
                Ok(DyadicDomain::disk(point(center[0], center[1]), radius))
            }
            DomainSpec::Square { min, max } => Ok(DyadicDomain::square(Rect::new(
                point(min[0], min[1]),
                point(max[0], max[1]),
            ))),
            DomainSpec::WeierstrassHypograph { beta, base, terms, seed, offset, scale } => {
                DyadicDomain::weierstrass_hypograph(beta, base, terms, seed, offset, scale)
            }
        }
    }
}

/// One refinement step of the grid exhaustion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DomainTraceRow {
    pub k: u32,
    pub squares: usize,
    pub strat_value: f64,
    pub ito_value: f64,
    /// `|value_k − value_{k−1}|` for the scheme requested.
    pub diff_from_prev: f64,
}

/// Result of [`integrate_domain`]: the P_k exhaustion trace plus the final
/// integral estimate.
#[derive(Clone, Debug)]
pub struct DomainIntegral {
    pub result: IntegralResult,
    pub trace: Vec<DomainTraceRow>,
}

/// `∫_Ω f dg¹∧dg²` via the inner grid polygons `P_k` (squares with corners
/// in `2^{−k}ℤ²` fully inside Ω, each split along its main diagonal into
/// two counterclockwise triangles, integrated at the given dyadic level).
///
/// Certified when `α+β₁+β₂ > 2` and the declared boundary dimension is
/// below `β₁+β₂`; the reported error adds the certified per-triangle tails
/// to a geometric extrapolation of the measured `|P_{k+1} − P_k|` (the
/// truncation constant of the limit theorem is not constructive).
pub fn integrate_domain(
    t: &FormTriple,
    dom: &DyadicDomain,
    k_min: u32,
    k_max: u32,
    scheme: Scheme,
    level: u32,
) -> Result<DomainIntegral> {
    integrate_domain_with(t, dom, k_min, k_max, scheme, level, 0.0)
}

/// [`integrate_domain`] on a grid rotated by `grid_angle`; any grid family
/// yields the same limit, so a nonzero angle is a cross-check.
pub fn integrate_domain_with(
    t: &FormTriple,
    dom: &DyadicDomain,
    k_min: u32,
    k_max: u32,
    scheme: Scheme,
    level: u32,
    grid_angle: f64,
) -> Result<DomainIntegral> {
    if k_max < k_min {
        return Err(Error::OutOfRange { name: "k_max", message: "k_max < k_min".into() });
    }
    let strat = strat_germ(t);
    let ito = ito_germ(t);
    let params = SewingParams::from_bounds(strat.bounds().unwrap(), level, 0.0);
    let (sin_a, cos_a) = grid_angle.sin_cos();
    let rot = move |p: Point2| point(cos_a * p.x1 - sin_a * p.x2, sin_a * p.x1 + cos_a * p.x2);
    let rot_inv = move |p: Point2| point(cos_a * p.x1 + sin_a * p.x2, -sin_a * p.x1 + cos_a * p.x2);

    // scan range: the bbox corners pulled back to grid coordinates
    let grid_corners: Vec<Point2> = dom.bbox.corners().iter().map(|&c| rot_inv(c)).collect();
    let gx_min = grid_corners.iter().map(|c| c.x1).fold(f64::INFINITY, f64::min);
    let gx_max = grid_corners.iter().map(|c| c.x1).fold(f64::NEG_INFINITY, f64::max);
    let gy_min = grid_corners.iter().map(|c| c.x2).fold(f64::INFINITY, f64::min);
    let gy_max = grid_corners.iter().map(|c| c.x2).fold(f64::NEG_INFINITY, f64::max);

    let mut trace: Vec<DomainTraceRow> = Vec::new();
    let mut tail_bound_total = 0.0;
    for k in k_min..=k_max {
        let h = 2f64.powi(-(k as i32));
        let i_lo = (gx_min / h).floor() as i64 - 1;
        let i_hi = (gx_max / h).ceil() as i64 + 1;
        let j_lo = (gy_min / h).floor() as i64 - 1;
        let j_hi = (gy_max / h).ceil() as i64 + 1;
        let rows: Vec<i64> = (j_lo..j_hi).collect();
        // row-major accumulation: pairwise within each row, pairwise over
        // rows, so memory stays O(row) and the reduction tree is fixed
        let row_sums: Vec<(f64, f64, usize)> = rows
            .par_iter()
            .map(|&j| {
                let cells: Vec<(f64, f64)> = (i_lo..i_hi)
                    .filter_map(|i| {
                        let x0 = i as f64 * h;
                        let y0 = j as f64 * h;
                        // sampled containment: corners, edge midpoints,
                        // center, nudged inward so open squares count as
                        // contained in open sets they tile exactly
                        const INSET: f64 = 1e-9;
                        let offsets = [INSET, 0.5, 1.0 - INSET];
                        for &di in &offsets {
                            for &dj in &offsets {
                                let p = rot(point(x0 + h * di, y0 + h * dj));
                                if !dom.contains(p) {
                                    return None;
                                }
                            }
                        }
                        let ll = rot(point(x0, y0));
                        let lr = rot(point(x0 + h, y0));
                        let ur = rot(point(x0 + h, y0 + h));
                        let ul = rot(point(x0, y0 + h));
                        let t1 = Simplex2::new(ll, lr, ur);
                        let t2 = Simplex2::new(ll, ur, ul);
                        let sv = dyadic_sum(&strat, &t1, level).unwrap()
                            + dyadic_sum(&strat, &t2, level).unwrap();
                        let iv = dyadic_sum(&ito, &t1, level).unwrap()
                            + dyadic_sum(&ito, &t2, level).unwrap();
                        Some((sv, iv))
                    })
                    .collect();
                (
                    pairwise_sum(&cells.iter().map(|c| c.0).collect::<Vec<_>>()),
                    pairwise_sum(&cells.iter().map(|c| c.1).collect::<Vec<_>>()),
                    cells.len(),
                )
            })
            .collect();
        let strat_value = pairwise_sum(&row_sums.iter().map(|c| c.0).collect::<Vec<_>>());
        let ito_value = pairwise_sum(&row_sums.iter().map(|c| c.1).collect::<Vec<_>>());
        let squares: usize = row_sums.iter().map(|c| c.2).sum();
        let diam = h * 2f64.sqrt();
        tail_bound_total = squares as f64
            * 2.0
            * (params.tail_bound(diam, level)
                + if scheme == Scheme::Ito { ito_gap_bound(t, diam, level) } else { 0.0 });
        let prev = trace.last().map(|r| match scheme {
            Scheme::Strat => r.strat_value,
            Scheme::Ito => r.ito_value,
        });
        let cur = match scheme {
            Scheme::Strat => strat_value,
            Scheme::Ito => ito_value,
        };
        trace.push(DomainTraceRow {
            k,
            squares,
            strat_value,
            ito_value,
            diff_from_prev: prev.map(|p| (cur - p).abs()).unwrap_or(f64::NAN),
        });
    }

    let last = *trace.last().unwrap();
    let beta_sum = t.g1.exponent() + t.g2.exponent();
    let dim_ok = dom.boundary_dim_estimate < beta_sum;
    // geometric extrapolation of the exhaustion truncation
    let rho = 2f64.powf(dom.boundary_dim_estimate - beta_sum);
    let truncation = if dim_ok && trace.len() >= 2 && last.diff_from_prev.is_finite() {
        last.diff_from_prev * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    let (value, ito_strat_gap) = match scheme {
        Scheme::Strat => (last.strat_value, (last.ito_value - last.strat_value).abs()),
        Scheme::Ito => (last.ito_value, (last.ito_value - last.strat_value).abs()),
    };
    Ok(DomainIntegral {
        result: IntegralResult {
            value,
            scheme,
            level,
            error_bound: tail_bound_total + truncation,
            ito_strat_gap,
            certified: t.sewable() && dim_ok,
        },
        trace,
    })
}

/// Least-squares slope of `log₂ N(2^{−k})` against `k`, where `N` counts
/// grid squares whose 4×4 point sample meets both the inside and the
/// outside of the domain.
pub fn box_dimension(dom: &DyadicDomain, k_min: u32, k_max: u32) -> Result<f64> {
    if k_max <= k_min + 2 {
        return Err(Error::OutOfRange {
            name: "k_max",
            message: format!("need k_max > k_min + 2, got {k_min}..{k_max}"),
        });
    }
    let mut points = Vec::new();
    for k in k_min..=k_max {
        let h = 2f64.powi(-(k as i32));
        let i_lo = (dom.bbox.min.x1 / h).floor() as i64 - 1;
        let i_hi = (dom.bbox.max.x1 / h).ceil() as i64 + 1;
        let j_lo = (dom.bbox.min.x2 / h).floor() as i64 - 1;
        let j_hi = (dom.bbox.max.x2 / h).ceil() as i64 + 1;
        let rows: Vec<i64> = (j_lo..j_hi).collect();
        let count: usize = rows
            .par_iter()
            .map(|&j| {
                (i_lo..i_hi)
                    .filter(|&i| {
                        let mut any_in = false;
                        let mut any_out = false;
                        // offsets include the cell edges so boundaries that
                        // lie exactly on grid lines are still detected
                        for u in 0..4 {
                            for v in 0..4 {
                                let p = point(
                                    (i as f64 + u as f64 / 3.0) * h,
                                    (j as f64 + v as f64 / 3.0) * h,
                                );
                                if dom.contains(p) {
                                    any_in = true;
                                } else {
                                    any_out = true;
                                }
                                if any_in && any_out {
                                    return true;
                                }
                            }
                        }
                        false
                    })
                    .count()
            })
            .sum();
        if count == 0 {
            return Err(Error::DegenerateFit(format!("no boundary squares at k = {k}")));
        }
        points.push((k as f64, (count as f64).log2()));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::DegenerateFit("collinear abscissae".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// `|stratⁿ|` for a triple whose legs are functions of a common field:
/// the integral must vanish in the limit.
pub fn vanishing_form_check(t: &FormTriple, s: &Simplex2, level: u32) -> Result<f64> {
    Ok(dyadic_sum(&strat_germ(t), s, level)?.abs())
}

/// Convenience: builds the strat germ and its sewing parameters at once.
pub fn strat_with_params(t: &FormTriple, max_level: u32, target_tol: f64) -> (Germ2, SewingParams) {
    let w = strat_germ(t);
    let params = SewingParams::from_bounds(w.bounds().unwrap(), max_level, target_tol);
    (w, params)
}
