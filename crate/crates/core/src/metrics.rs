//! Localization and payload quality measures.

use crate::geometry::{polygon_signed_area, Point, Quadrilateral};
use crate::imaging::RasterImage;

/// Clips `subject` against the convex polygon `clip` (both in the same
/// winding); returns the intersection polygon.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let orient = polygon_signed_area(clip).signum();
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let inside = |p: Point| orient * b.sub(a).cross(p.sub(a)) >= 0.0;
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(cur), inside(prev));
            if ci != pi {
                let e = cur.sub(prev);
                let denom = b.sub(a).cross(e);
                if denom != 0.0 {
                    let t = b.sub(a).cross(a.sub(prev)) / denom;
                    out.push(prev.add(e.scale(t)));
                }
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

/// Intersection over union of two quadrilaterals; 0 when the union is empty.
pub fn iou(pred: &Quadrilateral, truth: &Quadrilateral) -> f64 {
    if !pred.is_finite() || !truth.is_finite() {
        return 0.0;
    }
    let (ap, at) = (pred.area(), truth.area());
    if pred.is_convex() && truth.is_convex() {
        let inter = polygon_signed_area(&clip_convex(&pred.ring(), &truth.ring())).abs();
        let union = ap + at - inter;
        if union <= 0.0 {
            return 0.0;
        }
        (inter / union).clamp(0.0, 1.0)
    } else {
        raster_iou(pred, truth, 4)
    }
}

/// Even-odd point-in-polygon test.
pub fn contains(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// IoU by sampling `supersample`^2 points per unit cell over the joint
/// bounding box.
pub fn raster_iou(p: &Quadrilateral, q: &Quadrilateral, supersample: usize) -> f64 {
    let (rp, rq) = (p.ring(), q.ring());
    let all: Vec<Point> = rp.iter().chain(rq.iter()).copied().collect();
    let x0 = all.iter().map(|p| p.x).fold(f64::MAX, f64::min).floor();
    let y0 = all.iter().map(|p| p.y).fold(f64::MAX, f64::min).floor();
    let x1 = all.iter().map(|p| p.x).fold(f64::MIN, f64::max).ceil();
    let y1 = all.iter().map(|p| p.y).fold(f64::MIN, f64::max).ceil();
    let step = 1.0 / supersample.max(1) as f64;
    let (nx, ny) = (((x1 - x0) / step) as usize, ((y1 - y0) / step) as usize);
    let (mut inter, mut union) = (0usize, 0usize);
    for j in 0..ny {
        for i in 0..nx {
            let s = Point::new(x0 + (i as f64 + 0.5) * step, y0 + (j as f64 + 0.5) * step);
            let (a, b) = (contains(&rp, s), contains(&rq, s));
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Area of the content outline over the area of the shot.
pub fn area_proportion(truth: &Quadrilateral, shot: &RasterImage) -> f64 {
    let total = (shot.width() * shot.height()) as f64;
    if total == 0.0 {
        return 0.0;
    }
    truth.area() / total
}
