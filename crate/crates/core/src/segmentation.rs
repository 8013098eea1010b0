//! Splits a traced contour into contour strokes.
//!
//! From a start pixel `s`, the stroke end is hypothesized at successive
//! contour pixels. The chord angle `θ_k` from `s` to the `k`-th hypothesis
//! is tracked, and runs of hypotheses over which `Δθ_k = θ_k − θ_{k−1}` keeps
//! one sign form trend groups. A large turn inside a group, or a long group
//! after enough pixels, ends the stroke at the previous group boundary. The
//! chosen end is then nudged to the nearby pixel whose forward and backward
//! step orientations are most uniform.

use serde::{Deserialize, Serialize};

use crate::contour::Contour;
use crate::error::{Error, Result};
use crate::geom::wrap_angle;

/// Sign changes below this magnitude count as a flat trend.
const FLAT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegConfig {
    pub theta_threshold: f64,
    pub n_threshold: usize,
    pub refine_window: usize,
}

impl Default for SegConfig {
    fn default() -> Self {
        Self {
            theta_threshold: 0.7,
            n_threshold: 5,
            refine_window: 3,
        }
    }
}

impl SegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_threshold.is_nan() || self.theta_threshold <= 0.0 {
            return Err(Error::Config("theta_threshold must be positive".into()));
        }
        if self.n_threshold < 2 {
            return Err(Error::Config("n_threshold must be at least 2".into()));
        }
        if self.refine_window < 2 {
            return Err(Error::Config("refine_window must be at least 2".into()));
        }
        Ok(())
    }
}

/// A cyclic index span `start..=end` of one contour. `start == end` marks a
/// stroke covering the whole cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourStroke {
    pub contour: usize,
    #[serde(rename = "s")]
    pub start: usize,
    #[serde(rename = "e")]
    pub end: usize,
    #[serde(skip)]
    pub chord_angle: f64,
}

impl ContourStroke {
    /// Number of steps from start to end.
    pub fn span(&self, n: usize) -> usize {
        if self.end > self.start {
            self.end - self.start
        } else {
            self.end + n - self.start
        }
    }

    /// Contour indices from start to end inclusive.
    pub fn indices(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.start;
        (0..=self.span(n)).map(move |k| (start + k) % n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendGroup {
    /// Contour index where the trend begins (shared with the previous group).
    pub first_idx: usize,
    pub last_idx: usize,
    pub trend: i8,
    pub delta_theta: f64,
    pub count: usize,
}

/// Angle of the chord from point `s` to point `e`, in `(−π, π]`.
pub fn chord_angle(contour: &Contour, s: usize, e: usize) -> f64 {
    debug_assert_ne!(s, e, "chord of a single point");
    let a = contour.at(s as isize);
    let b = contour.at(e as isize);
    wrap_angle(f64::from(b.y - a.y).atan2(f64::from(b.x - a.x)))
}

fn trend_of(delta: f64) -> i8 {
    if delta.abs() < FLAT_EPS {
        0
    } else if delta > 0.0 {
        1
    } else {
        -1
    }
}

/// Incremental trend-group builder over hypotheses `s + k`, `k = 1, 2, …`.
/// Offsets are relative to `s`.
struct TrendScan<'a> {
    contour: &'a Contour,
    s: usize,
    k: usize,
    /// Unwrapped chord angle of the latest hypothesis.
    theta: f64,
    groups: Vec<GroupAcc>,
}

#[derive(Debug, Clone, Copy)]
struct GroupAcc {
    first: usize,
    last: usize,
    trend: i8,
    theta_first: f64,
    theta_last: f64,
}

impl GroupAcc {
    fn delta(&self) -> f64 {
        self.theta_last - self.theta_first
    }

    fn count(&self) -> usize {
        self.last - self.first + 1
    }
}

impl<'a> TrendScan<'a> {
    fn new(contour: &'a Contour, s: usize) -> Self {
        let n = contour.len();
        Self {
            contour,
            s,
            k: 1,
            theta: chord_angle(contour, s, (s + 1) % n),
            groups: Vec::new(),
        }
    }

    /// Adds hypothesis `k + 1` and returns the index of the group it joined.
    fn advance(&mut self) -> usize {
        let n = self.contour.len();
        self.k += 1;
        let raw = chord_angle(self.contour, self.s, (self.s + self.k) % n);
        let delta = wrap_angle(raw - self.theta);
        let prev_theta = self.theta;
        self.theta += delta;
        let trend = trend_of(delta);
        match self.groups.last_mut() {
            Some(g) if g.trend == trend => {
                g.last = self.k;
                g.theta_last = self.theta;
            }
            _ => self.groups.push(GroupAcc {
                first: self.k - 1,
                last: self.k,
                trend,
                theta_first: prev_theta,
                theta_last: self.theta,
            }),
        }
        self.groups.len() - 1
    }
}

/// Trend groups for hypotheses `s+1 ..= s+max_offset`.
pub fn trend_groups(contour: &Contour, s: usize, max_offset: usize) -> Vec<TrendGroup> {
    let n = contour.len();
    assert!(
        max_offset >= 1 && max_offset < n,
        "lookahead must stay within one cycle"
    );
    let mut scan = TrendScan::new(contour, s);
    while scan.k < max_offset {
        scan.advance();
    }
    scan.groups
        .iter()
        .map(|g| TrendGroup {
            first_idx: (s + g.first) % n,
            last_idx: (s + g.last) % n,
            trend: g.trend,
            delta_theta: g.delta(),
            count: g.count(),
        })
        .collect()
}

/// Candidate stroke end as an offset from `s`, scanning at most `limit`
/// hypotheses. Returns `limit` when no rule fires.
fn candidate_offset(contour: &Contour, s: usize, limit: usize, cfg: &SegConfig) -> usize {
    if limit < 2 {
        return limit;
    }
    let mut scan = TrendScan::new(contour, s);
    // A chord back to `s` itself carries no direction.
    let last = limit.min(contour.len() - 1);
    while scan.k < last {
        let p = scan.advance();
        let g = scan.groups[p];
        if g.delta().abs() > cfg.theta_threshold || (p == 0 && g.delta().abs() >= cfg.theta_threshold) {
            // The first group is cut where the turn reaches the threshold,
            // which is the hypothesis just added.
            return if p == 0 { scan.k } else { scan.groups[p - 1].last };
        }
        if p > 0 && g.count() > cfg.n_threshold {
            let prev_end = scan.groups[p - 1].last;
            if prev_end + 1 > cfg.n_threshold {
                return prev_end;
            }
        }
    }
    limit
}

/// Candidate end index for a stroke starting at `s`, scanning the rest of
/// the cycle.
pub fn find_candidate_end(contour: &Contour, s: usize, cfg: &SegConfig) -> usize {
    let n = contour.len();
    (s + candidate_offset(contour, s, n - 1, cfg)) % n
}

fn step_angle(contour: &Contour, i: isize) -> f64 {
    let a = contour.at(i);
    let b = contour.at(i + 1);
    f64::from(b.y - a.y).atan2(f64::from(b.x - a.x))
}

/// Mean and variance of step orientations for the `window` steps starting
/// at `from`, measured relative to the first step so the ±π seam does not
/// matter.
fn step_stats(contour: &Contour, from: isize, window: usize) -> (f64, f64) {
    let base = step_angle(contour, from);
    let vals: Vec<f64> = (0..window as isize)
        .map(|k| wrap_angle(step_angle(contour, from + k) - base))
        .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
    (base + mean, var)
}

/// `max(forward, backward)` orientation variance around contour index `j`.
pub fn end_score(contour: &Contour, j: isize, window: usize) -> f64 {
    let (_, fwd) = step_stats(contour, j, window);
    let (_, bwd) = step_stats(contour, j - window as isize, window);
    fwd.max(bwd)
}

/// Turn between the mean backward and mean forward step orientations.
fn end_turn(contour: &Contour, j: isize, window: usize) -> f64 {
    let (fwd, _) = step_stats(contour, j, window);
    let (bwd, _) = step_stats(contour, j - window as isize, window);
    wrap_angle(fwd - bwd).abs()
}

/// Refines `candidate` to the index within `±window` with the lowest
/// `max(forward, backward)` variance. Among equal scores the sharpest turn
/// wins, then the index nearest the candidate, then the earlier one.
pub fn refine_end(contour: &Contour, candidate: usize, window: usize) -> usize {
    let w = window as isize;
    refine_in(contour, candidate as isize, -w, w, window).rem_euclid(contour.len() as isize) as usize
}

fn refine_in(contour: &Contour, candidate: isize, lo: isize, hi: isize, window: usize) -> isize {
    const EPS: f64 = 1e-9;
    let mut best = (f64::INFINITY, 0.0, 0isize);
    for off in lo..=hi {
        let score = end_score(contour, candidate + off, window);
        let turn = end_turn(contour, candidate + off, window);
        let better = score < best.0 - EPS
            || ((score - best.0).abs() <= EPS
                && (turn > best.1 + EPS || ((turn - best.1).abs() <= EPS && off.abs() < best.2.abs())));
        if better {
            best = (score, turn, off);
        }
    }
    candidate + best.2
}

/// Segments a contour into strokes starting from index 0 and walking the
/// cycle once. Contours shorter than four points give a single stroke.
pub fn segment_contour(contour: &Contour, contour_id: usize, cfg: &SegConfig) -> Vec<ContourStroke> {
    let n = contour.len();
    let stroke = |start: usize, end: usize| ContourStroke {
        contour: contour_id,
        start,
        end,
        chord_angle: if start == end || n < 2 {
            0.0
        } else {
            chord_angle(contour, start, end)
        },
    };
    if n < 4 {
        return vec![stroke(0, 0)];
    }

    let w = cfg.refine_window as isize;
    let mut strokes = Vec::new();
    let mut pos = 0usize;
    while pos < n {
        let limit = n - pos;
        let mut off = candidate_offset(contour, pos, limit, cfg);
        if off < limit {
            let lo = (2 - off as isize).max(-w);
            let hi = (limit as isize - 2 - off as isize).min(w);
            if lo <= hi {
                let refined = refine_in(contour, (pos + off) as isize, lo, hi, cfg.refine_window);
                off = refined as usize - pos;
            }
            off = off.max(2.min(limit));
            if limit - off < 2 {
                off = limit;
            }
        }
        strokes.push(stroke(pos, (pos + off) % n));
        pos += off;
    }
    strokes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{trace_contours, ContourKind};
    use crate::geom::Pixel;
    use crate::raster::{connected_components, BinaryImage};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn open_path(points: Vec<Pixel>) -> Contour {
        Contour {
            kind: ContourKind::Outer,
            points,
        }
    }

    fn ell_path() -> Contour {
        // 10 px east, 10 px south, then back home along the diagonal.
        let mut pts: Vec<Pixel> = (0..=10).map(|x| Pixel::new(x, 0)).collect();
        pts.extend((1..=10).map(|y| Pixel::new(10, y)));
        pts.extend((1..10).map(|k| Pixel::new(10 - k, 10 - k)));
        open_path(pts)
    }

    fn outer(img: &BinaryImage) -> Contour {
        trace_contours(&connected_components(img)[0]).remove(0)
    }

    #[test]
    fn chord_angles_on_axes() {
        let c = open_path(vec![
            Pixel::new(0, 0),
            Pixel::new(5, 0),
            Pixel::new(0, 5),
            Pixel::new(3, 3),
        ]);
        assert_eq!(chord_angle(&c, 0, 1), 0.0);
        assert!((chord_angle(&c, 0, 2) - FRAC_PI_2).abs() < 1e-12);
        assert!((chord_angle(&c, 0, 3) - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn straight_run_is_one_flat_group() {
        let g = trend_groups(&ell_path(), 0, 10);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].trend, 0);
        assert_eq!(g[0].delta_theta, 0.0);
        assert_eq!(g[0].count, 10);
    }

    #[test]
    fn ell_trend_changes_at_corner() {
        let c = ell_path();
        // Oracle: recompute θ_k directly and find where the sign first changes.
        let theta: Vec<f64> = (1..=18)
            .map(|k| {
                let p = c.points[k];
                f64::from(p.y).atan2(f64::from(p.x))
            })
            .collect();
        let first_change = (1..theta.len())
            .find(|&i| theta[i] - theta[i - 1] > 1e-9)
            .map(|i| i + 1)
            .unwrap();
        let g = trend_groups(&c, 0, 18);
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].trend, 1);
        assert_eq!(g[1].first_idx, first_change - 1);
        assert!((g[1].first_idx as isize - 10).abs() <= 1);
        assert!((g[1].delta_theta - (theta[17] - theta[9])).abs() < 1e-12);
    }

    #[test]
    fn arc_groups_agree_with_direct_theta_sequence() {
        let img = BinaryImage::from_fn(61, 61, |x, y| {
            let (dx, dy) = (x as f64 - 30.0, y as f64 - 30.0);
            dx * dx + dy * dy <= 400.0
        });
        let c = outer(&img);
        let m = c.len() / 3;
        let theta: Vec<f64> = (1..=m)
            .map(|k| {
                let (a, b) = (c.points[0], c.points[k]);
                f64::from(b.y - a.y).atan2(f64::from(b.x - a.x))
            })
            .collect();
        let mut unwrapped = vec![theta[0]];
        for w in theta.windows(2) {
            let last = *unwrapped.last().unwrap();
            unwrapped.push(last + wrap_angle(w[1] - w[0]));
        }
        let groups = trend_groups(&c, 0, m);
        let total: f64 = groups.iter().map(|g| g.delta_theta).sum();
        assert!((total - (unwrapped[m - 1] - unwrapped[0])).abs() < 1e-9);
        for g in &groups {
            assert!(g.trend == 0 || g.delta_theta.signum() == f64::from(g.trend));
        }
        // A convex outline turns one way overall.
        assert!(total.abs() > 0.5);
        let dominant = groups.iter().filter(|g| g.trend as f64 == total.signum()).count();
        assert!(dominant * 2 >= groups.iter().filter(|g| g.trend != 0).count());
    }

    fn block(w: usize, h: usize) -> BinaryImage {
        BinaryImage::from_fn(w + 4, h + 4, |x, y| (2..w + 2).contains(&x) && (2..h + 2).contains(&y))
    }

    #[test]
    fn straight_segment_candidate_lands_on_the_run() {
        let c = outer(&block(20, 20));
        // Index 0 is the top-left corner; the left side runs 19 steps down.
        let e = find_candidate_end(&c, 0, &SegConfig::default());
        assert_eq!(c.points[e], Pixel::new(2, 21));
    }

    #[test]
    fn corner_ahead_stops_before_the_turn() {
        let c = outer(&block(20, 20));
        // Start mid-way down the left side; the corner is 10 steps on.
        let e = find_candidate_end(&c, 9, &SegConfig::default());
        assert!((e as isize - 19).abs() <= 1, "end {e}");
    }

    #[test]
    fn start_on_corner_cuts_first_group_at_threshold() {
        // Start one pixel before a square corner: the first hypotheses swing
        // by more than 0.7 immediately.
        let c = outer(&block(20, 20));
        let s = 18;
        let cfg = SegConfig::default();
        let e = find_candidate_end(&c, s, &cfg);
        let oracle = (2..c.len())
            .find(|&k| {
                let t1 = chord_angle(&c, s, s + 1);
                (wrap_angle(chord_angle(&c, s, (s + k) % c.len()) - t1)).abs() >= cfg.theta_threshold
            })
            .unwrap();
        assert_eq!(e, s + oracle);
    }

    #[test]
    fn refine_keeps_exact_corner_and_recovers_displaced_one() {
        let c = ell_path();
        assert_eq!(refine_end(&c, 10, 3), 10);
        // Oracle: brute-force table of (max variance, turn) over the window,
        // computed from raw step directions.
        let dirs: Vec<f64> = (0..c.len() as isize)
            .map(|i| {
                let (a, b) = (c.at(i), c.at(i + 1));
                f64::from(b.y - a.y).atan2(f64::from(b.x - a.x))
            })
            .collect();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let table: Vec<(isize, f64, f64)> = (9..=15)
            .map(|j: isize| {
                let f = &dirs[j as usize..j as usize + 3];
                let b = &dirs[j as usize - 3..j as usize];
                let turn = (f.iter().sum::<f64>() - b.iter().sum::<f64>()).abs() / 3.0;
                (j, var(f).max(var(b)), turn)
            })
            .collect();
        let min_var = table.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
        let best = table
            .iter()
            .filter(|t| t.1 <= min_var + 1e-12)
            .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            .unwrap()
            .0;
        assert_eq!(best, 10);
        assert_eq!(refine_end(&c, 12, 3), 10);
    }

    #[test]
    fn refine_on_straight_line_keeps_candidate() {
        let c = outer(&block(30, 10));
        assert_eq!(refine_end(&c, 4, 3), 4);
    }

    fn check_partition(c: &Contour, strokes: &[ContourStroke]) {
        let n = c.len();
        assert_eq!(strokes[0].start, 0);
        for w in strokes.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        assert_eq!(strokes.last().unwrap().end, 0);
        assert_eq!(strokes.iter().map(|s| s.span(n)).sum::<usize>(), n);
    }

    #[test]
    fn square_breaks_at_corners() {
        let img = block(20, 20);
        let c = outer(&img);
        let strokes = segment_contour(&c, 0, &SegConfig::default());
        check_partition(&c, &strokes);
        assert_eq!(strokes.len(), 4);
        let corners = [
            Pixel::new(2, 2),
            Pixel::new(2, 21),
            Pixel::new(21, 21),
            Pixel::new(21, 2),
        ];
        for s in &strokes {
            let hit = corners
                .iter()
                .any(|&k| (0..=1).any(|d| c.at(s.start as isize + d) == k || c.at(s.start as isize - d) == k));
            assert!(hit, "break at {:?}", c.points[s.start]);
        }
    }

    #[test]
    fn circle_strokes_have_bounded_turn() {
        let img = BinaryImage::from_fn(50, 50, |x, y| {
            let (dx, dy) = (x as f64 - 24.0, y as f64 - 24.0);
            dx * dx + dy * dy <= 400.0
        });
        let c = outer(&img);
        let cfg = SegConfig::default();
        let strokes = segment_contour(&c, 0, &cfg);
        check_partition(&c, &strokes);
        let n = c.len();
        for s in &strokes {
            let span = s.span(n);
            if span < 3 {
                continue;
            }
            // Accumulated turn of the chord between consecutive hypotheses,
            // measured from the first hypothesis.
            let t1 = chord_angle(&c, s.start, (s.start + 1) % n);
            let mut acc = 0.0f64;
            let mut prev = t1;
            let mut max_step = 0.0f64;
            let mut max_acc = 0.0f64;
            for k in 2..span {
                let t = chord_angle(&c, s.start, (s.start + k) % n);
                let d = wrap_angle(t - prev);
                acc += d;
                prev = t;
                max_step = max_step.max(d.abs());
                max_acc = max_acc.max(acc.abs());
            }
            assert!(
                max_acc <= cfg.theta_threshold + max_step + 1e-9,
                "stroke {s:?} turned {max_acc}"
            );
        }
    }

    #[test]
    fn bar_gives_two_sides_and_two_caps() {
        let img = block(40, 8);
        let c = outer(&img);
        let strokes = segment_contour(&c, 0, &SegConfig::default());
        check_partition(&c, &strokes);
        let mut spans: Vec<usize> = strokes.iter().map(|s| s.span(c.len())).collect();
        spans.sort_unstable();
        assert_eq!(spans.len(), 4);
        assert!(spans[0] <= 8 && spans[1] <= 8, "{spans:?}");
        assert!(spans[2] >= 36 && spans[3] >= 36, "{spans:?}");
    }

    #[test]
    fn tiny_contour_is_one_stroke() {
        let c = open_path(vec![Pixel::new(0, 0), Pixel::new(1, 0), Pixel::new(1, 1)]);
        let s = segment_contour(&c, 7, &SegConfig::default());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].span(3), 3);
        assert_eq!(s[0].contour, 7);
    }

    #[test]
    fn config_validation() {
        assert!(SegConfig::default().validate().is_ok());
        assert!(SegConfig {
            theta_threshold: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SegConfig {
            n_threshold: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn strokes_partition_every_contour(bits in proptest::collection::vec(proptest::bool::weighted(0.7), 144)) {
            let img = BinaryImage::from_fn(12, 12, |x, y| bits[y * 12 + x]);
            for comp in connected_components(&img) {
                for (i, c) in trace_contours(&comp).iter().enumerate() {
                    let strokes = segment_contour(c, i, &SegConfig::default());
                    let n = c.len();
                    proptest::prop_assert!(!strokes.is_empty());
                    proptest::prop_assert_eq!(strokes[0].start, 0);
                    for k in 0..strokes.len() {
                        proptest::prop_assert_eq!(strokes[k].end, strokes[(k + 1) % strokes.len()].start);
                    }
                    if n > 1 {
                        proptest::prop_assert_eq!(strokes.iter().map(|s| s.span(n)).sum::<usize>(), n);
                    }
                }
            }
        }
    }
}
