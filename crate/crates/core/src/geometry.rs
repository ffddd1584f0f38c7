//! Planar primitives shared by localization, rectification and evaluation.
//!
//! Coordinates are continuous pixel coordinates: pixel `(i, j)` covers
//! `[i, i+1) x [j, j+1)` and its centre sits at `(i + 0.5, j + 0.5)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }

    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// A line in implicit form `n . p = d`, with `n` a unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub nx: f64,
    pub ny: f64,
    pub d: f64,
}

impl Line {
    /// Line `a*x + b*y = c`; fails when `(a, b)` is zero.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let n = a.hypot(b);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateGeometry("line with zero normal".into()));
        }
        Ok(Self {
            nx: a / n,
            ny: b / n,
            d: c / n,
        })
    }

    /// `y = slope * x + intercept`.
    pub fn from_slope_y(slope: f64, intercept: f64) -> Self {
        Self::new(-slope, 1.0, intercept).expect("normal has unit y component")
    }

    /// `x = slope * y + intercept`.
    pub fn from_slope_x(slope: f64, intercept: f64) -> Self {
        Self::new(1.0, -slope, intercept).expect("normal has unit x component")
    }

    pub fn through(p: Point, q: Point) -> Result<Self> {
        let dir = q.sub(p);
        Self::new(-dir.y, dir.x, -dir.y * p.x + dir.x * p.y)
    }

    /// Signed distance of `p` from the line along the normal.
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.nx * p.x + self.ny * p.y - self.d
    }

    /// The line moved by `offset` along its normal.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            d: self.d + offset,
            ..*self
        }
    }

    /// Intersection point, or `None` when the lines are (nearly) parallel.
    pub fn intersect(&self, o: &Line) -> Option<Point> {
        let det = self.nx * o.ny - self.ny * o.nx;
        if det.abs() < 1e-12 {
            return None;
        }
        let x = (self.d * o.ny - self.ny * o.d) / det;
        let y = (self.nx * o.d - self.d * o.nx) / det;
        Some(Point::new(x, y))
    }

    /// Applies a similarity or any map that is affine: the image of two points on the line.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        let foot = Point::new(self.nx * self.d, self.ny * self.d);
        let along = Point::new(-self.ny, self.nx);
        Line::through(f(foot), f(foot.add(along.scale(100.0))))
    }
}

/// Four corners in canonical order: `a` top-left, `b` top-right,
/// `c` bottom-left, `d` bottom-right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrilateral {
    pub a: Point,
    pub b: Point,
    pub c: Point,
    pub d: Point,
}

#[derive(Serialize, Deserialize)]
struct QuadJson {
    #[serde(rename = "A")]
    a: [f64; 2],
    #[serde(rename = "B")]
    b: [f64; 2],
    #[serde(rename = "C")]
    c: [f64; 2],
    #[serde(rename = "D")]
    d: [f64; 2],
}

impl Serialize for Quadrilateral {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let p = |q: Point| [q.x, q.y];
        QuadJson {
            a: p(self.a),
            b: p(self.b),
            c: p(self.c),
            d: p(self.d),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quadrilateral {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let q = QuadJson::deserialize(d)?;
        let p = |v: [f64; 2]| Point::new(v[0], v[1]);
        Ok(Quadrilateral {
            a: p(q.a),
            b: p(q.b),
            c: p(q.c),
            d: p(q.d),
        })
    }
}

impl Quadrilateral {
    pub const fn new(a: Point, b: Point, c: Point, d: Point) -> Self {
        Self { a, b, c, d }
    }

    /// Axis-aligned rectangle with top-left `(x, y)`.
    pub fn rect(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self::new(
            Point::new(x, y),
            Point::new(x + w, y),
            Point::new(x, y + h),
            Point::new(x + w, y + h),
        )
    }

    /// Orders four arbitrary corners canonically.
    ///
    /// Corners are sorted by angle around their centroid; the corner with the
    /// smallest `x + y` becomes `a`, and the traversal continues clockwise
    /// (in image coordinates, y down) through `b`, `d`, `c`.
    pub fn canonical(points: [Point; 4]) -> Self {
        let cx = points.iter().map(|p| p.x).sum::<f64>() / 4.0;
        let cy = points.iter().map(|p| p.y).sum::<f64>() / 4.0;
        let mut sorted = points;
        sorted.sort_by(|p, q| {
            let ap = (p.y - cy).atan2(p.x - cx);
            let aq = (q.y - cy).atan2(q.x - cx);
            ap.total_cmp(&aq)
        });
        let start = (0..4)
            .min_by(|&i, &j| {
                (sorted[i].x + sorted[i].y).total_cmp(&(sorted[j].x + sorted[j].y))
            })
            .unwrap_or(0);
        let at = |k: usize| sorted[(start + k) % 4];
        Self::new(at(0), at(1), at(3), at(2))
    }

    pub fn corners(&self) -> [Point; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Corners in boundary order A, B, D, C.
    pub fn ring(&self) -> [Point; 4] {
        [self.a, self.b, self.d, self.c]
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Self {
        Self::new(f(self.a), f(self.b), f(self.c), f(self.d))
    }

    /// Shoelace area of the boundary ring (positive for clockwise on screen).
    pub fn signed_area(&self) -> f64 {
        polygon_signed_area(&self.ring())
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// No two non-adjacent edges intersect and the area is positive.
    pub fn is_simple(&self) -> bool {
        let r = self.ring();
        if !(self.area() > 1e-12) {
            return false;
        }
        !segments_intersect(r[0], r[1], r[2], r[3]) && !segments_intersect(r[1], r[2], r[3], r[0])
    }

    pub fn is_convex(&self) -> bool {
        let r = self.ring();
        let mut sign = 0.0f64;
        for i in 0..4 {
            let e1 = r[(i + 1) % 4].sub(r[i]);
            let e2 = r[(i + 2) % 4].sub(r[(i + 1) % 4]);
            let z = e1.cross(e2);
            if z.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = z.signum();
            } else if z.signum() != sign {
                return false;
            }
        }
        sign != 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.corners().iter().all(|p| p.x.is_finite() && p.y.is_finite())
    }
}

pub fn polygon_signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        acc += p.x * q.y - q.x * p.y;
    }
    acc / 2.0
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Proper or touching intersection of segments `p1p2` and `q1q2`.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Projective map `x' = (a1 x + b1 y + c1) / (a0 x + b0 y + 1)`,
/// `y' = (a2 x + b2 y + c2) / (a0 x + b0 y + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub a0: f64,
    pub b0: f64,
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        a1: 1.0,
        b1: 0.0,
        c1: 0.0,
        a2: 0.0,
        b2: 1.0,
        c2: 0.0,
        a0: 0.0,
        b0: 0.0,
    };

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            c1: dx,
            c2: dy,
            ..Self::IDENTITY
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.a1, self.b1, self.c1],
            [self.a2, self.b2, self.c2],
            [self.a0, self.b0, 1.0],
        ]
    }

    /// Normalizes a 3x3 matrix so its bottom-right entry is one.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let k = m[2][2];
        if k.abs() < 1e-12 || !k.is_finite() {
            return Err(Error::DegenerateHomography);
        }
        Ok(Self {
            a1: m[0][0] / k,
            b1: m[0][1] / k,
            c1: m[0][2] / k,
            a2: m[1][0] / k,
            b2: m[1][1] / k,
            c2: m[1][2] / k,
            a0: m[2][0] / k,
            b0: m[2][1] / k,
        })
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.matrix())
    }

    /// Rejects maps whose linear part or full matrix is singular.
    pub fn check_invertible(&self) -> Result<()> {
        let lin = self.a1 * self.b2 - self.a2 * self.b1;
        let det = self.determinant();
        if lin.abs() < 1e-12 || det.abs() < 1e-12 || !det.is_finite() {
            return Err(Error::DegenerateHomography);
        }
        Ok(())
    }

    pub fn apply(&self, p: Point) -> Option<Point> {
        let w = self.a0 * p.x + self.b0 * p.y + 1.0;
        if w.abs() < 1e-12 {
            return None;
        }
        Some(Point::new(
            (self.a1 * p.x + self.b1 * p.y + self.c1) / w,
            (self.a2 * p.x + self.b2 * p.y + self.c2) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.check_invertible()?;
        let m = self.matrix();
        let det = det3(&m);
        let mut inv = [[0.0; 3]; 3];
        for (r, row) in inv.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                // adjugate: transpose of the cofactor matrix
                let (r1, r2) = others(c);
                let (c1, c2) = others(r);
                let minor = m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                *v = sign * minor / det;
            }
        }
        Self::from_matrix(inv)
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Homography) -> Result<Self> {
        let a = self.matrix();
        let b = first.matrix();
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[r][k] * b[k][c]).sum();
            }
        }
        Self::from_matrix(m)
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_from_shuffled_rect() {
        let q = Quadrilateral::rect(2.0, 3.0, 10.0, 5.0);
        let shuffled = [q.d, q.a, q.c, q.b];
        assert_eq!(Quadrilateral::canonical(shuffled), q);
    }

    #[test]
    fn rect_area_and_simplicity() {
        let q = Quadrilateral::rect(0.0, 0.0, 4.0, 3.0);
        assert_eq!(q.area(), 12.0);
        assert!(q.is_simple());
        assert!(q.is_convex());
        let bowtie = Quadrilateral::new(q.a, q.b, q.d, q.c);
        assert!(!bowtie.is_simple());
    }

    #[test]
    fn line_intersection() {
        let h = Line::from_slope_y(0.0, 10.0);
        let v = Line::from_slope_x(0.0, 4.0);
        let p = h.intersect(&v).unwrap();
        assert!((p.x - 4.0).abs() < 1e-12 && (p.y - 10.0).abs() < 1e-12);
        assert!(h.intersect(&Line::from_slope_y(0.0, 3.0)).is_none());
    }

    #[test]
    fn homography_inverse_round_trip() {
        let h = Homography {
            a1: 1.1,
            b1: 0.05,
            c1: 12.0,
            a2: -0.03,
            b2: 0.95,
            c2: -4.0,
            a0: 1e-4,
            b0: -2e-4,
        };
        let inv = h.inverse().unwrap();
        for p in [Point::new(0.0, 0.0), Point::new(100.0, 40.0), Point::new(-7.0, 300.0)] {
            let q = inv.apply(h.apply(p).unwrap()).unwrap();
            assert!(q.dist(p) < 1e-9);
        }
    }

    #[test]
    fn singular_homography_rejected() {
        let h = Homography {
            a1: 1.0,
            b1: 2.0,
            a2: 2.0,
            b2: 4.0,
            ..Homography::IDENTITY
        };
        assert!(h.check_invertible().is_err());
        assert!(h.inverse().is_err());
    }

    #[test]
    fn quad_json_shape() {
        let q = Quadrilateral::rect(0.0, 0.0, 2.0, 1.0);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"A":[0.0,0.0],"B":[2.0,0.0],"C":[0.0,1.0],"D":[2.0,1.0]}"#);
        let back: Quadrilateral = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
