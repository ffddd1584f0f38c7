//! Quadrilateral proposals from heat-map peaks.
//!
//! Positive peaks trace the top and bottom margins, negative peaks the left
//! and right ones. Each (scale, peak count) pair yields one candidate box
//! from four regressed lines; the candidate with the largest local cost
//! (area times corner-angle penalty) wins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Line, Point, Quadrilateral};
use crate::localizer::{IntensityHeatMap, ScaleSweep};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxParams {
    /// Smallest peak count per sign.
    pub alpha: usize,
    /// Largest peak count per sign.
    pub beta: usize,
    /// Angle penalty weight.
    pub lambda_ap: f64,
    /// Heat maps examined around the decided scale.
    pub scales_used: usize,
    /// Outward shift of each fitted line, as a fraction of the window side.
    pub edge_offset: f64,
    /// Corners may lie at most this fraction of the shot size outside it.
    pub max_overhang: f64,
    /// `|d|` a heat-map cell needs to support a margin line.
    pub support_d: i32,
    /// Mean line support below this means no mark was found.
    pub min_support: f64,
}

impl Default for BoxParams {
    fn default() -> Self {
        Self {
            alpha: 13,
            beta: 18,
            lambda_ap: 5.0,
            scales_used: 4,
            edge_offset: 0.5,
            max_overhang: 0.25,
            support_d: 4,
            min_support: 0.65,
        }
    }
}

impl BoxParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 || self.alpha > self.beta {
            return Err(Error::InvalidInput("need 0 < alpha <= beta".into()));
        }
        if self.scales_used == 0 {
            return Err(Error::InvalidInput("scales_used must be positive".into()));
        }
        if !(self.lambda_ap > 0.0) {
            return Err(Error::InvalidInput("lambda_ap must be positive".into()));
        }
        Ok(())
    }
}

/// A heat-map extremum at grid cell `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub col: usize,
    pub row: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakSets {
    pub max_peaks: Vec<Peak>,
    pub min_peaks: Vec<Peak>,
    pub source_scale: f64,
}

/// Alternately takes the largest and the smallest cell of a shared working
/// grid, zeroing the 3x3 neighbourhood of every pick, for `count` rounds.
///
/// A sign stops early once its best remaining value is no longer strictly
/// positive (negative). Ties go to the first cell in row-major order.
pub fn extract_peaks_grid(
    values: &[f64],
    rows: usize,
    cols: usize,
    count: usize,
) -> (Vec<Peak>, Vec<Peak>) {
    assert_eq!(values.len(), rows * cols);
    let mut work = values.to_vec();
    let mut max_peaks = Vec::new();
    let mut min_peaks = Vec::new();
    let (mut max_open, mut min_open) = (true, true);
    let suppress = |work: &mut [f64], idx: usize| {
        let (r, c) = ((idx / cols) as isize, (idx % cols) as isize);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let (rr, cc) = (r + dr, c + dc);
                if rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols {
                    work[rr as usize * cols + cc as usize] = 0.0;
                }
            }
        }
    };
    for _ in 0..count {
        if max_open {
            match best(&work, |a, b| a > b) {
                Some((idx, v)) if v > 0.0 => {
                    max_peaks.push(Peak { col: idx % cols, row: idx / cols, value: v });
                    suppress(&mut work, idx);
                }
                _ => max_open = false,
            }
        }
        if min_open {
            match best(&work, |a, b| a < b) {
                Some((idx, v)) if v < 0.0 => {
                    min_peaks.push(Peak { col: idx % cols, row: idx / cols, value: v });
                    suppress(&mut work, idx);
                }
                _ => min_open = false,
            }
        }
        if !max_open && !min_open {
            break;
        }
    }
    (max_peaks, min_peaks)
}

fn best(values: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<(usize, f64)> {
    let mut out: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if out.is_none_or(|(_, b)| better(v, b)) {
            out = Some((i, v));
        }
    }
    out
}

pub fn extract_peaks(ihm: &IntensityHeatMap, count: usize) -> PeakSets {
    let (max_peaks, min_peaks) = extract_peaks_grid(&ihm.values, ihm.rows, ihm.cols, count);
    PeakSets {
        max_peaks,
        min_peaks,
        source_scale: ihm.scale,
    }
}

/// Peak positions split into the four margins, in heat-map pixel coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Clusters {
    pub top: Vec<Point>,
    pub bottom: Vec<Point>,
    pub left: Vec<Point>,
    pub right: Vec<Point>,
}

impl Clusters {
    /// True when any margin has fewer than two points.
    pub fn degenerate(&self) -> bool {
        [&self.top, &self.bottom, &self.left, &self.right]
            .iter()
            .any(|c| c.len() < 2)
    }

    fn any_empty(&self) -> bool {
        [&self.top, &self.bottom, &self.left, &self.right]
            .iter()
            .any(|c| c.is_empty())
    }
}

/// Splits positive peaks by `y` and negative peaks by `x` around their means.
/// Points exactly on a mean belong to neither side.
pub fn cluster_points(max_pts: &[Point], min_pts: &[Point]) -> Result<Clusters> {
    if max_pts.is_empty() || min_pts.is_empty() {
        return Err(Error::LocalizationFailed("a peak set is empty".into()));
    }
    let my = max_pts.iter().map(|p| p.y).sum::<f64>() / max_pts.len() as f64;
    let mx = min_pts.iter().map(|p| p.x).sum::<f64>() / min_pts.len() as f64;
    let c = Clusters {
        top: max_pts.iter().copied().filter(|p| p.y < my).collect(),
        bottom: max_pts.iter().copied().filter(|p| p.y > my).collect(),
        left: min_pts.iter().copied().filter(|p| p.x < mx).collect(),
        right: min_pts.iter().copied().filter(|p| p.x > mx).collect(),
    };
    if c.any_empty() {
        return Err(Error::LocalizationFailed("a margin cluster is empty".into()));
    }
    Ok(c)
}

/// Cell `(col, row)` mapped to its window centre in heat-map pixel coordinates.
pub fn cell_point(ihm: &IntensityHeatMap, p: &Peak) -> Point {
    let (x, y) = ihm.cell_center(p.col as f64, p.row as f64);
    Point::new(x, y)
}

pub fn cluster_peaks(ihm: &IntensityHeatMap, peaks: &PeakSets) -> Result<Clusters> {
    let max_pts: Vec<Point> = peaks.max_peaks.iter().map(|p| cell_point(ihm, p)).collect();
    let min_pts: Vec<Point> = peaks.min_peaks.iter().map(|p| cell_point(ihm, p)).collect();
    cluster_points(&max_pts, &min_pts)
}

/// Least-squares `v = m*u + c` over `(u, v)` pairs; `None` when `u` is constant.
fn regress(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> (Option<(f64, f64)>, f64, f64) {
    let n = pairs.clone().count() as f64;
    let mu = pairs.clone().map(|p| p.0).sum::<f64>() / n;
    let mv = pairs.clone().map(|p| p.1).sum::<f64>() / n;
    let suu: f64 = pairs.clone().map(|p| (p.0 - mu).powi(2)).sum();
    let suv: f64 = pairs.map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    if suu <= 1e-12 * n.max(1.0) {
        return (None, mu, mv);
    }
    let m = suv / suu;
    (Some((m, mv - m * mu)), mu, mv)
}

/// Near-horizontal line `y = m*x + c`.
pub fn fit_horizontal(pts: &[Point]) -> Result<Line> {
    if pts.is_empty() {
        return Err(Error::LocalizationFailed("empty cluster".into()));
    }
    match regress(pts.iter().map(|p| (p.x, p.y))) {
        (Some((m, c)), _, _) => Ok(Line::from_slope_y(m, c)),
        (None, _, mean_y) => Ok(Line::from_slope_y(0.0, mean_y)),
    }
}

/// Near-vertical line `x = m*y + c`.
pub fn fit_vertical(pts: &[Point]) -> Result<Line> {
    if pts.is_empty() {
        return Err(Error::LocalizationFailed("empty cluster".into()));
    }
    match regress(pts.iter().map(|p| (p.y, p.x))) {
        (Some((m, c)), _, _) => Ok(Line::from_slope_x(m, c)),
        (None, _, mean_x) => Ok(Line::from_slope_x(0.0, mean_x)),
    }
}

/// Top, bottom, left and right margin lines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginLines {
    pub top: Line,
    pub bottom: Line,
    pub left: Line,
    pub right: Line,
}

pub fn fit_lines(c: &Clusters) -> Result<MarginLines> {
    Ok(MarginLines {
        top: fit_horizontal(&c.top)?,
        bottom: fit_horizontal(&c.bottom)?,
        left: fit_vertical(&c.left)?,
        right: fit_vertical(&c.right)?,
    })
}

impl MarginLines {
    /// Each line moved by `offset` away from the middle of the box.
    pub fn pushed_out(&self, offset: f64) -> Result<MarginLines> {
        let q = intersect_corners(self)?;
        let centre = q
            .corners()
            .iter()
            .fold(Point::new(0.0, 0.0), |acc, p| acc.add(p.scale(0.25)));
        let push = |l: &Line| {
            let side = l.signed_distance(centre).signum();
            l.shifted(-side * offset)
        };
        Ok(MarginLines {
            top: push(&self.top),
            bottom: push(&self.bottom),
            left: push(&self.left),
            right: push(&self.right),
        })
    }
}

/// Corners `A = top x left`, `B = top x right`, `C = bottom x left`,
/// `D = bottom x right`, put in canonical order.
pub fn intersect_corners(l: &MarginLines) -> Result<Quadrilateral> {
    let meet = |p: &Line, q: &Line| {
        p.intersect(q)
            .ok_or_else(|| Error::DegenerateGeometry("parallel margin lines".into()))
    };
    let raw = Quadrilateral::new(
        meet(&l.top, &l.left)?,
        meet(&l.top, &l.right)?,
        meet(&l.bottom, &l.left)?,
        meet(&l.bottom, &l.right)?,
    );
    if !raw.is_finite() || !raw.is_simple() {
        return Err(Error::DegenerateGeometry("margin lines do not bound a box".into()));
    }
    Ok(Quadrilateral::canonical(raw.corners()))
}

/// Dot products of the two unit edge vectors pointing into each corner, in
/// the order A, B, C, D. A right angle contributes 0.
pub fn corner_dots(q: &Quadrilateral) -> Result<[f64; 4]> {
    // neighbours along the ring A-B-D-C
    let around = [(q.a, q.b, q.c), (q.b, q.a, q.d), (q.c, q.a, q.d), (q.d, q.b, q.c)];
    let mut out = [0.0; 4];
    for (k, (p, n1, n2)) in around.into_iter().enumerate() {
        let u = p.sub(n1);
        let v = p.sub(n2);
        let (lu, lv) = (u.norm(), v.norm());
        if !(lu > 1e-12 && lv > 1e-12) {
            return Err(Error::DegenerateGeometry("zero-length edge".into()));
        }
        out[k] = u.scale(1.0 / lu).dot(v.scale(1.0 / lv));
    }
    Ok(out)
}

/// `lambda * exp(-sum of corner dots)`; exactly `lambda` for rectangles.
pub fn angle_penalty(q: &Quadrilateral, lambda: f64) -> Result<f64> {
    let v: f64 = corner_dots(q)?.iter().sum();
    Ok(lambda * (-v).exp())
}

/// Shoelace area of `q` (heat-map pixel coordinates) divided by `scale`.
pub fn area_cost(q: &Quadrilateral, scale: f64) -> Result<f64> {
    let s = q.area();
    if !(s > 0.0) || !(scale > 0.0) {
        return Err(Error::DegenerateGeometry("non-positive area".into()));
    }
    Ok(s / scale)
}

pub fn local_cost(ap_cost: f64, a_cost: f64) -> f64 {
    ap_cost * a_cost
}

/// Fraction of heat-map cells along the segment `p`-`q` (heat-map pixel
/// coordinates) whose `d` has the wanted sign and reaches `min_d`.
pub fn line_support(ihm: &IntensityHeatMap, p: Point, q: Point, positive: bool, min_d: i32) -> f64 {
    let len = p.dist(q);
    let step = ihm.stride as f64;
    let n = ((len / step).round() as usize).max(1) + 1;
    let half = ihm.window_side as f64 / 2.0;
    let mut hit = 0;
    for k in 0..n {
        let t = k as f64 / (n - 1).max(1) as f64;
        let s = p.add(q.sub(p).scale(t));
        let c = ((s.x - half) / step).round();
        let r = ((s.y - half) / step).round();
        if c < 0.0 || r < 0.0 || c as usize >= ihm.cols || r as usize >= ihm.rows {
            continue;
        }
        let d = ihm.d[r as usize * ihm.cols + c as usize];
        if (positive && d >= min_d) || (!positive && d <= -min_d) {
            hit += 1;
        }
    }
    hit as f64 / n as f64
}

/// Mean support of the four fitted (unshifted) margin lines.
pub fn box_support(ihm: &IntensityHeatMap, lines: &MarginLines, min_d: i32) -> Result<f64> {
    let q = intersect_corners(lines)?;
    let s = line_support(ihm, q.a, q.b, true, min_d)
        + line_support(ihm, q.c, q.d, true, min_d)
        + line_support(ihm, q.a, q.c, false, min_d)
        + line_support(ihm, q.b, q.d, false, min_d);
    Ok(s / 4.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadCandidate {
    /// Box in original shot pixels.
    pub quad: Quadrilateral,
    pub ap_cost: f64,
    pub a_cost: f64,
    pub local_cost: f64,
    pub peak_count: usize,
    pub scale_index: usize,
    pub scale: f64,
    /// Mean fraction of heat-map cells backing the margin lines.
    pub support: f64,
}

/// Builds the candidate for one heat map and peak count.
pub fn build_candidate(
    ihm: &IntensityHeatMap,
    scale_index: usize,
    peak_count: usize,
    params: &BoxParams,
) -> Result<QuadCandidate> {
    let peaks = extract_peaks(ihm, peak_count);
    let clusters = cluster_peaks(ihm, &peaks)?;
    let lines = fit_lines(&clusters)?;
    let support = box_support(ihm, &lines, params.support_d)?;
    let outer = lines.pushed_out(params.edge_offset * ihm.window_side as f64)?;
    let local = intersect_corners(&outer)?;
    let ap_cost = angle_penalty(&local, params.lambda_ap)?;
    let a_cost = area_cost(&local, ihm.scale)?;
    let (sx, sy) = ihm.axis_scales();
    let quad = local.map(|p| Point::new(p.x / sx, p.y / sy));
    let (w, h) = (ihm.shot_width as f64, ihm.shot_height as f64);
    let (mw, mh) = (params.max_overhang * w, params.max_overhang * h);
    let inside = quad
        .corners()
        .iter()
        .all(|p| p.x >= -mw && p.x <= w + mw && p.y >= -mh && p.y <= h + mh);
    if !inside {
        return Err(Error::DegenerateGeometry("box reaches far outside the shot".into()));
    }
    if !quad.is_convex() {
        return Err(Error::DegenerateGeometry("box is not convex".into()));
    }
    Ok(QuadCandidate {
        quad,
        ap_cost,
        a_cost,
        local_cost: local_cost(ap_cost, a_cost),
        peak_count,
        scale_index,
        scale: ihm.scale,
        support,
    })
}

/// The decided index and its nearest neighbours (ties toward larger scales,
/// i.e. smaller indices), at most `k` in total.
pub fn scales_around(decision: usize, len: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.sort_by_key(|&i| (i.abs_diff(decision), i));
    idx.truncate(k);
    idx
}

/// Every valid candidate over the examined scales and peak counts.
pub fn generate_candidates(sweep: &ScaleSweep, params: &BoxParams) -> Result<Vec<QuadCandidate>> {
    params.validate()?;
    let decision = sweep.decision.ok_or(Error::NoWatermarkFound)?;
    let mut out = Vec::new();
    for s in scales_around(decision, sweep.ihms.len(), params.scales_used) {
        let ihm = &sweep.ihms[s];
        if ihm.is_empty() {
            continue;
        }
        for p in params.alpha..=params.beta {
            match build_candidate(ihm, s, p, params) {
                Ok(c) => out.push(c),
                Err(e) => log::debug!("candidate scale {s} p {p} rejected: {e}"),
            }
        }
    }
    Ok(out)
}

/// Largest local cost; ties prefer more peaks, then the scale nearest the decision.
pub fn select_best(candidates: &[QuadCandidate], decision: usize) -> Result<&QuadCandidate> {
    candidates
        .iter()
        .filter(|c| c.local_cost.is_finite())
        .max_by(|x, y| {
            x.local_cost
                .total_cmp(&y.local_cost)
                .then(x.peak_count.cmp(&y.peak_count))
                .then(
                    y.scale_index
                        .abs_diff(decision)
                        .cmp(&x.scale_index.abs_diff(decision)),
                )
                .then(y.scale_index.cmp(&x.scale_index))
        })
        .ok_or_else(|| Error::LocalizationFailed("no valid box candidate".into()))
}

/// Outcome of box generation for one sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Localization {
    pub best: QuadCandidate,
    pub candidates: Vec<QuadCandidate>,
    pub decision: usize,
}

/// Candidates plus the winner; a winner without enough line support means
/// the shot carries no mark.
pub fn localize(sweep: &ScaleSweep, params: &BoxParams) -> Result<Localization> {
    let decision = sweep.decision.ok_or(Error::NoWatermarkFound)?;
    let candidates = generate_candidates(sweep, params)?;
    let best = select_best(&candidates, decision)?.clone();
    if best.support < params.min_support {
        log::info!(
            "best box has line support {:.2} < {:.2}",
            best.support,
            params.min_support
        );
        return Err(Error::NoWatermarkFound);
    }
    Ok(Localization {
        best,
        candidates,
        decision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ihm(rows: usize, cols: usize, values: Vec<f64>) -> IntensityHeatMap {
        IntensityHeatMap {
            rows,
            cols,
            d: values.iter().map(|v| v.signum() as i32 * 10).collect(),
            values,
            scale: 1.0,
            scaled_width: cols * 64 + 64,
            scaled_height: rows * 64 + 64,
            shot_width: cols * 64 + 64,
            shot_height: rows * 64 + 64,
            window_side: 128,
            stride: 64,
        }
    }

    #[test]
    fn single_cell_stops_early() {
        let mut v = vec![0.0; 25];
        v[12] = 3.0;
        let (mx, mn) = extract_peaks_grid(&v, 5, 5, 13);
        assert_eq!(mx, vec![Peak { col: 2, row: 2, value: 3.0 }]);
        assert!(mn.is_empty());
    }

    #[test]
    fn neighbour_is_suppressed() {
        let mut v = vec![0.0; 25];
        v[12] = 3.0;
        v[13] = 2.0;
        let (mx, _) = extract_peaks_grid(&v, 5, 5, 13);
        assert_eq!(mx.len(), 1);
    }

    #[test]
    fn fifteen_largest_of_twenty_isolated() {
        let (rows, cols) = (15, 15);
        let mut v = vec![0.0; rows * cols];
        let mut k = 0;
        for r in (0..rows).step_by(3) {
            for c in (0..cols).step_by(3) {
                if k < 20 {
                    v[r * cols + c] = (k * 7 % 20 + 1) as f64;
                    k += 1;
                }
            }
        }
        let (mx, _) = extract_peaks_grid(&v, rows, cols, 15);
        assert_eq!(mx.len(), 15);
        let least = mx.iter().map(|p| p.value).fold(f64::MAX, f64::min);
        assert_eq!(least, 6.0);
    }

    #[test]
    fn cluster_examples() {
        let max = [(0., 0.), (5., 0.), (0., 9.), (5., 9.)].map(|(x, y)| Point::new(x, y));
        let min = [(0., 3.), (9., 3.)].map(|(x, y)| Point::new(x, y));
        let c = cluster_points(&max, &min).unwrap();
        assert_eq!(c.top.len(), 2);
        assert_eq!(c.bottom.len(), 2);
        assert!(c.degenerate());
        let flat = [(0., 4.), (5., 4.)].map(|(x, y)| Point::new(x, y));
        assert!(cluster_points(&flat, &min).is_err());
    }

    #[test]
    fn line_fits() {
        let l = fit_horizontal(&[Point::new(0., 0.), Point::new(10., 0.)]).unwrap();
        assert!(l.signed_distance(Point::new(5.0, 0.0)).abs() < 1e-12);
        let l = fit_vertical(&[Point::new(0., 0.), Point::new(0., 10.)]).unwrap();
        assert!(l.signed_distance(Point::new(0.0, 3.0)).abs() < 1e-12);
        // constant regressor falls back to an axis-aligned line
        let l = fit_horizontal(&[Point::new(2., 1.), Point::new(2., 5.)]).unwrap();
        assert!(l.signed_distance(Point::new(7.0, 3.0)).abs() < 1e-12);
    }

    #[test]
    fn box_from_axis_lines() {
        let lines = MarginLines {
            top: Line::from_slope_y(0.0, 0.0),
            bottom: Line::from_slope_y(0.0, 10.0),
            left: Line::from_slope_x(0.0, 0.0),
            right: Line::from_slope_x(0.0, 10.0),
        };
        let q = intersect_corners(&lines).unwrap();
        assert_eq!(q, Quadrilateral::rect(0.0, 0.0, 10.0, 10.0));
        let out = lines.pushed_out(2.0).unwrap();
        assert_eq!(intersect_corners(&out).unwrap(), Quadrilateral::rect(-2.0, -2.0, 14.0, 14.0));
        let parallel = MarginLines {
            left: Line::from_slope_y(0.0, 5.0),
            ..lines
        };
        assert!(intersect_corners(&parallel).is_err());
    }

    #[test]
    fn costs() {
        let sq = Quadrilateral::rect(0.0, 0.0, 10.0, 10.0);
        assert_eq!(angle_penalty(&sq, 5.0).unwrap(), 5.0);
        let a = area_cost(&sq, 0.5).unwrap();
        assert_eq!(a, 200.0);
        assert_eq!(local_cost(5.0, a), 1000.0);
        let half = Quadrilateral::rect(0.0, 0.0, 5.0, 5.0);
        assert_eq!(area_cost(&half, 0.5).unwrap(), 50.0);
    }

    #[test]
    fn sheared_square_penalty() {
        // parallelogram with 60/120 degree corners: cosines cancel
        let s = 3f64.sqrt() / 2.0;
        let q = Quadrilateral::new(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, s),
            Point::new(1.5, s),
        );
        let dots = corner_dots(&q).unwrap();
        let want = [0.5, -0.5, -0.5, 0.5];
        for k in 0..4 {
            assert!((dots[k] - want[k]).abs() < 1e-12);
        }
        assert!((angle_penalty(&q, 5.0).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn selection_tie_breaks() {
        let mk = |lc: f64, p: usize, s: usize| QuadCandidate {
            quad: Quadrilateral::rect(0.0, 0.0, 1.0, 1.0),
            ap_cost: 5.0,
            a_cost: lc / 5.0,
            local_cost: lc,
            peak_count: p,
            scale_index: s,
            scale: 1.0,
            support: 1.0,
        };
        let c = vec![mk(1000.0, 13, 0), mk(900.0, 18, 0)];
        assert_eq!(select_best(&c, 0).unwrap().local_cost, 1000.0);
        let c = vec![mk(1000.0, 13, 0), mk(1000.0, 15, 1)];
        assert_eq!(select_best(&c, 0).unwrap().peak_count, 15);
        let c = vec![mk(1000.0, 15, 0), mk(1000.0, 15, 2)];
        assert_eq!(select_best(&c, 2).unwrap().scale_index, 2);
        assert!(select_best(&[], 0).is_err());
    }

    #[test]
    fn neighbour_scales() {
        assert_eq!(scales_around(0, 9, 4), vec![0, 1, 2, 3]);
        assert_eq!(scales_around(4, 9, 4), vec![4, 3, 5, 2]);
        assert_eq!(scales_around(8, 9, 4), vec![8, 7, 6, 5]);
    }

    #[test]
    fn frame_shaped_map_gives_its_box() {
        let (rows, cols) = (10, 14);
        let mut v = vec![0.0; rows * cols];
        for c in 1..cols - 1 {
            v[c] = 5.0 + c as f64 * 0.01;
            v[(rows - 1) * cols + c] = 5.0 + c as f64 * 0.02;
        }
        for r in 1..rows - 1 {
            v[r * cols] = -5.0 - r as f64 * 0.01;
            v[r * cols + cols - 1] = -5.0 - r as f64 * 0.02;
        }
        let h = ihm(rows, cols, v);
        let cand = build_candidate(&h, 0, 15, &BoxParams::default()).unwrap();
        let q = cand.quad;
        // window centres sit 64 px inside, the shift restores the frame edge
        assert!((q.a.x - 0.0).abs() < 1e-6 && (q.a.y - 0.0).abs() < 1e-6, "{q:?}");
        assert!((q.d.x - (13.0 * 64.0 + 128.0)).abs() < 1e-6);
        assert!((q.d.y - (9.0 * 64.0 + 128.0)).abs() < 1e-6);
        assert!(cand.support > 0.7);
    }
}
