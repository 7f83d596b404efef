//! Planar geometry: points, arc-length parameterised polylines, convex
//! polygons, capsules and occupancy grids.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::math::{wrap_angle, Real};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2 { x: v[0], y: v[1] }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_heading(psi: f64) -> Self {
        Point2::new(psi.cos(), psi.sin())
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Left-hand perpendicular.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Distance from `p` to segment `ab` and the closest point on it.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> (f64, Point2) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = a + ab * t;
    (p.distance(c), c)
}

/// Whether the closed segments `ab` and `cd` intersect.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    fn orient(p: Point2, q: Point2, r: Point2) -> f64 {
        (q - p).cross(r - p)
    }
    fn on_segment(p: Point2, q: Point2, r: Point2) -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub fn segment_segment_distance(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .0
        .min(point_segment_distance(b, c, d).0)
        .min(point_segment_distance(c, a, b).0)
        .min(point_segment_distance(d, a, b).0)
}

/// Result of projecting a point onto a [`Polyline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub station: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub lateral: f64,
    pub distance: f64,
    pub segment: usize,
    pub point: Point2,
}

/// An arc-length parameterised piecewise-linear curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polyline {
    points: Vec<Point2>,
    cum: Vec<f64>,
}

impl TryFrom<Vec<Point2>> for Polyline {
    type Error = crate::Error;
    fn try_from(points: Vec<Point2>) -> Result<Self> {
        Polyline::new(points)
    }
}

impl From<Polyline> for Vec<Point2> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate vertices. Fails when
    /// fewer than two distinct vertices remain or a vertex is not finite.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(param("polyline vertex is not finite"));
        }
        let mut clean: Vec<Point2> = Vec::with_capacity(points.len());
        for p in points {
            if clean.last().is_none_or(|q| q.distance(p) > 1e-12) {
                clean.push(p);
            }
        }
        if clean.len() < 2 {
            return Err(param("polyline needs at least two distinct vertices"));
        }
        let mut cum = Vec::with_capacity(clean.len());
        cum.push(0.0);
        for w in clean.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + w[0].distance(w[1]));
        }
        Ok(Polyline { points: clean, cum })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn stations(&self) -> &[f64] {
        &self.cum
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn end(&self) -> Point2 {
        *self.points.last().unwrap()
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    /// Index of the segment containing station `s` (clamped to the ends).
    pub fn segment_at(&self, s: f64) -> usize {
        let n = self.segment_count();
        match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap_or(core::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    fn direction(&self, seg: usize) -> Point2 {
        let d = self.points[seg + 1] - self.points[seg];
        d * (1.0 / d.norm())
    }

    /// Point at station `s`; stations outside `[0, length]` extrapolate
    /// linearly along the first or last segment.
    pub fn point_at(&self, s: f64) -> Point2 {
        let i = self.segment_at(s);
        self.points[i] + self.direction(i) * (s - self.cum[i])
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.direction(self.segment_at(s)).heading()
    }

    /// Unit normal pointing to the left of the travel direction.
    pub fn normal_at(&self, s: f64) -> Point2 {
        self.direction(self.segment_at(s)).perp()
    }

    pub fn project(&self, p: Point2) -> Projection {
        self.project_range(p, 0, self.segment_count())
    }

    /// Projection restricted to segments whose start station lies within
    /// `[lo, hi]`.
    pub fn project_window(&self, p: Point2, lo: f64, hi: f64) -> Projection {
        let first = self.segment_at(lo);
        let last = self.segment_at(hi) + 1;
        self.project_range(p, first, last.min(self.segment_count()))
    }

    fn project_range(&self, p: Point2, first: usize, last: usize) -> Projection {
        let mut best: Option<Projection> = None;
        for i in first..last {
            let a = self.points[i];
            let b = self.points[i + 1];
            let (d, c) = point_segment_distance(p, a, b);
            if best.is_none_or(|bp| d < bp.distance) {
                let dir = self.direction(i);
                let lateral = dir.cross(p - c);
                let sign_lat = if d > 0.0 { lateral.signum() * d } else { 0.0 };
                best = Some(Projection {
                    station: self.cum[i] + (c - a).norm(),
                    lateral: sign_lat,
                    distance: d,
                    segment: i,
                    point: c,
                });
            }
        }
        let mut pr = best.expect("non-empty segment range");
        // Points beyond the ends project onto the extension of the end
        // segments so stations stay monotone along the travel direction.
        let n = self.segment_count();
        if pr.segment == 0 {
            let t = (p - self.points[0]).dot(self.direction(0));
            if t < 0.0 {
                pr.station = t;
                pr.lateral = self.direction(0).cross(p - self.points[0]);
                pr.point = self.points[0] + self.direction(0) * t;
            }
        }
        if pr.segment == n - 1 {
            let t = (p - self.points[n - 1]).dot(self.direction(n - 1));
            let seg_len = self.cum[n] - self.cum[n - 1];
            if t > seg_len {
                pr.station = self.cum[n - 1] + t;
                pr.lateral = self.direction(n - 1).cross(p - self.points[n - 1]);
                pr.point = self.points[n - 1] + self.direction(n - 1) * t;
            }
        }
        pr
    }

    /// Station of `(px, py)` as a differentiable function of the point. The
    /// segment is selected by value; within it the station is linear.
    pub fn station_of<T: Real>(&self, px: T, py: T) -> T {
        let p = Point2::new(px.value(), py.value());
        let pr = self.project(p);
        let i = pr.segment;
        let a = self.points[i];
        let dir = self.direction(i);
        (px - a.x) * dir.x + (py - a.y) * dir.y + self.cum[i]
    }

    /// Polyline resampled at a fixed spacing; the end vertex is always kept.
    pub fn resample(&self, spacing: f64) -> Result<Polyline> {
        if !(spacing > 0.0) {
            return Err(param("resample spacing must be positive"));
        }
        let n = libm::ceil(self.length() / spacing) as usize;
        let pts = (0..=n)
            .map(|k| self.point_at((k as f64 * spacing).min(self.length())))
            .collect();
        Polyline::new(pts)
    }

    /// Signed turning angle between the segments meeting at each interior
    /// vertex divided by the mean adjacent segment length.
    pub fn vertex_curvatures(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut k = alloc::vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = self.direction(i - 1).heading();
            let h1 = self.direction(i).heading();
            let l = 0.5 * (self.cum[i + 1] - self.cum[i - 1]);
            k[i] = wrap_angle(h1 - h0) / l;
        }
        k
    }
}

/// A convex polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for ConvexPolygon {
    type Error = crate::Error;
    fn try_from(v: Vec<Point2>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point2> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 || vertices.iter().any(|p| !p.is_finite()) {
            return Err(param("polygon needs at least three finite vertices"));
        }
        let n = vertices.len();
        let area2: f64 = (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum();
        if area2.abs() < 1e-12 {
            return Err(param("polygon has zero area"));
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -1e-9 {
                return Err(param("polygon is not convex"));
            }
        }
        Ok(ConvexPolygon { vertices })
    }

    /// Axis-aligned rectangle rotated by `heading` about its centre.
    pub fn oriented_box(center: Point2, heading: f64, length: f64, width: f64) -> Self {
        let f = Point2::from_heading(heading) * (0.5 * length);
        let l = Point2::from_heading(heading).perp() * (0.5 * width);
        ConvexPolygon {
            vertices: alloc::vec![center - f - l, center + f - l, center + f + l, center - f + l],
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= 0.0)
    }

    /// Distance from `p` to the polygon (zero inside) and the closest
    /// boundary point.
    pub fn distance(&self, p: Point2) -> (f64, Point2) {
        let mut best = (f64::INFINITY, p);
        for (a, b) in self.edges() {
            let (d, c) = point_segment_distance(p, a, b);
            if d < best.0 {
                best = (d, c);
            }
        }
        if self.contains(p) {
            (0.0, best.1)
        } else {
            best
        }
    }

    pub fn segment_distance(&self, a: Point2, b: Point2) -> f64 {
        if self.contains(a) || self.contains(b) {
            return 0.0;
        }
        self.edges()
            .map(|(c, d)| segment_segment_distance(a, b, c, d))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        self.segment_distance(a, b) == 0.0
    }
}

/// A segment inflated by a radius: the region swept by a disc moving along
/// a straight line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub a: Point2,
    pub b: Point2,
    pub radius: f64,
}

impl Capsule {
    pub fn distance(&self, p: Point2) -> (f64, Point2) {
        let (d, c) = point_segment_distance(p, self.a, self.b);
        if d <= self.radius {
            (0.0, c)
        } else {
            let dir = (p - c) * (1.0 / d);
            (d - self.radius, c + dir * self.radius)
        }
    }

    pub fn segment_distance(&self, a: Point2, b: Point2) -> f64 {
        (segment_segment_distance(a, b, self.a, self.b) - self.radius).max(0.0)
    }
}

/// Row-major boolean occupancy grid; cell `(i, j)` covers
/// `origin + [i, i+1) x [j, j+1) * resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub origin: Point2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(origin: Point2, resolution: f64, width: usize, height: usize) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(param("occupancy grid resolution must be positive"));
        }
        Ok(OccupancyGrid {
            origin,
            resolution,
            width,
            height,
            occupied: alloc::vec![false; width * height],
        })
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if i < self.width && j < self.height {
            self.occupied[j * self.width + i] = value;
        }
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        i < self.width && j < self.height && self.occupied[j * self.width + i]
    }

    fn cell_box(&self, i: usize, j: usize) -> (Point2, Point2) {
        let lo = self.origin + Point2::new(i as f64, j as f64) * self.resolution;
        (lo, lo + Point2::new(self.resolution, self.resolution))
    }

    /// Distance to the nearest occupied cell within `max_range`; returns
    /// `(inf, p)` when none is that close.
    pub fn distance(&self, p: Point2, max_range: f64) -> (f64, Point2) {
        let r = self.resolution;
        let ci = libm::floor((p.x - self.origin.x) / r);
        let cj = libm::floor((p.y - self.origin.y) / r);
        let span = libm::ceil(max_range / r) + 1.0;
        let i0 = (ci - span).max(0.0) as usize;
        let j0 = (cj - span).max(0.0) as usize;
        let i1 = ((ci + span).max(-1.0) as isize).min(self.width as isize - 1);
        let j1 = ((cj + span).max(-1.0) as isize).min(self.height as isize - 1);
        let mut best = (f64::INFINITY, p);
        if i1 < 0 || j1 < 0 {
            return best;
        }
        for j in j0..=j1 as usize {
            for i in i0..=i1 as usize {
                if !self.is_occupied(i, j) {
                    continue;
                }
                let (lo, hi) = self.cell_box(i, j);
                let c = Point2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y));
                let d = p.distance(c);
                if d < best.0 {
                    best = (d, c);
                }
            }
        }
        if best.0 > max_range {
            (f64::INFINITY, p)
        } else {
            best
        }
    }
}

/// Everything a point or segment can collide with.
#[derive(Debug, Clone, Default)]
pub struct ObstacleField {
    pub polygons: Vec<ConvexPolygon>,
    pub capsules: Vec<Capsule>,
    pub grid: Option<OccupancyGrid>,
}

impl ObstacleField {
    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty() && self.capsules.is_empty() && self.grid.is_none()
    }

    /// Per-obstacle distance and closest point; grid cells count as one
    /// obstacle (the nearest occupied cell within `grid_range`).
    pub fn distances(&self, p: Point2, grid_range: f64) -> Vec<(f64, Point2)> {
        let mut out: Vec<(f64, Point2)> = self.polygons.iter().map(|o| o.distance(p)).collect();
        out.extend(self.capsules.iter().map(|c| c.distance(p)));
        if let Some(g) = &self.grid {
            let d = g.distance(p, grid_range);
            if d.0.is_finite() {
                out.push(d);
            }
        }
        out
    }

    /// Smallest distance from `p` to any obstacle (infinite when empty).
    pub fn clearance(&self, p: Point2) -> f64 {
        let mut d = f64::INFINITY;
        for o in &self.polygons {
            d = d.min(o.distance(p).0);
        }
        for c in &self.capsules {
            d = d.min(c.distance(p).0);
        }
        if let Some(g) = &self.grid {
            d = d.min(g.distance(p, 10.0 * g.resolution).0);
        }
        d
    }

    /// Smallest distance from segment `ab` to any obstacle.
    pub fn segment_clearance(&self, a: Point2, b: Point2) -> f64 {
        let mut d = f64::INFINITY;
        for o in &self.polygons {
            d = d.min(o.segment_distance(a, b));
        }
        for c in &self.capsules {
            d = d.min(c.segment_distance(a, b));
        }
        if let Some(g) = &self.grid {
            let len = a.distance(b);
            let steps = libm::ceil(len / (0.25 * g.resolution)).max(1.0) as usize;
            for k in 0..=steps {
                let p = a + (b - a) * (k as f64 / steps as f64);
                d = d.min(g.distance(p, 10.0 * g.resolution).0);
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn l_shape() -> Polyline {
        Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 10.0),
        ])
        .unwrap()
    }

    #[test]
    fn polyline_arc_length_and_points() {
        let p = l_shape();
        assert_eq!(p.length(), 20.0);
        assert_eq!(p.point_at(5.0), Point2::new(5.0, 0.0));
        assert_eq!(p.point_at(15.0), Point2::new(10.0, 5.0));
        assert_eq!(p.point_at(-2.0), Point2::new(-2.0, 0.0));
        assert_eq!(p.point_at(22.0), Point2::new(10.0, 12.0));
        assert!((p.heading_at(12.0) - core::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn polyline_projection() {
        let p = l_shape();
        let pr = p.project(Point2::new(4.0, 1.5));
        assert_eq!(pr.station, 4.0);
        assert_eq!(pr.lateral, 1.5);
        let pr = p.project(Point2::new(11.0, 6.0));
        assert_eq!(pr.station, 16.0);
        assert_eq!(pr.lateral, -1.0);
        let pr = p.project(Point2::new(-3.0, 0.5));
        assert_eq!(pr.station, -3.0);
    }

    #[test]
    fn polyline_rejects_degenerate_input() {
        assert!(Polyline::new(vec![Point2::new(1.0, 1.0)]).is_err());
        assert!(Polyline::new(vec![Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn polygon_queries() {
        let sq = ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 2.0),
            Point2::new(2.0, 2.0),
            Point2::new(2.0, 0.0),
        ])
        .unwrap();
        assert!(sq.contains(Point2::new(1.0, 1.0)));
        assert!(!sq.contains(Point2::new(3.0, 1.0)));
        assert_eq!(sq.distance(Point2::new(5.0, 1.0)).0, 3.0);
        assert!(sq.intersects_segment(Point2::new(-1.0, 1.0), Point2::new(3.0, 1.0)));
        assert!(!sq.intersects_segment(Point2::new(-1.0, 3.0), Point2::new(3.0, 3.0)));
        assert!((sq.segment_distance(Point2::new(-1.0, 3.0), Point2::new(3.0, 3.0)) - 1.0).abs() < 1e-12);
        assert!(ConvexPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.3),
            Point2::new(2.0, 2.0),
            Point2::new(0.0, 2.0),
        ])
        .is_err());
    }

    #[test]
    fn grid_distance() {
        let mut g = OccupancyGrid::new(Point2::new(0.0, 0.0), 1.0, 10, 10).unwrap();
        g.set(5, 5, true);
        assert_eq!(g.distance(Point2::new(5.5, 5.5), 3.0).0, 0.0);
        assert!((g.distance(Point2::new(3.0, 5.5), 3.0).0 - 2.0).abs() < 1e-12);
        assert!(g.distance(Point2::new(0.5, 0.5), 2.0).0.is_infinite());
    }

    #[test]
    fn capsule_distance() {
        let c = Capsule {
            a: Point2::new(0.0, 0.0),
            b: Point2::new(10.0, 0.0),
            radius: 1.0,
        };
        assert_eq!(c.distance(Point2::new(5.0, 3.0)).0, 2.0);
        assert_eq!(c.distance(Point2::new(5.0, 0.5)).0, 0.0);
        assert_eq!(c.segment_distance(Point2::new(5.0, 4.0), Point2::new(5.0, 2.0)), 1.0);
    }
}
