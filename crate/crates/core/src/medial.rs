//! Medial-axis segments from pairs of parallel contour strokes.
//!
//! Each unprocessed contour pixel casts a ray perpendicular to its local
//! orientation across the ink. The first boundary pixel reached on another
//! stroke is its partner. The midpoint of the pair is marked as medial only
//! when both ends have nearly the same undirected orientation and the pair
//! is closer than the pen width; otherwise the pixel is left alone because
//! it most likely sits in a junction of several pen strokes.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::contour::{is_boundary_pixel, Contour};
use crate::error::{Error, Result};
use crate::geom::{circular_mean, fold_orientation, line_pixels, undirected_diff, Pixel, Point};
use crate::raster::BinaryImage;
use crate::segmentation::ContourStroke;

use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedialConfig {
    /// Largest undirected orientation difference of a valid pair, radians.
    pub angle_tol: f64,
    /// Pairs must be strictly closer than this, pixels.
    pub pen_width: f64,
    pub neighbor_depth: usize,
    /// Chains with fewer midpoints are dropped.
    pub min_segment_len: usize,
    /// A larger gap between consecutive midpoints starts a new segment.
    pub chain_radius: f64,
    /// A midpoint this close to one already emitted by another pairing is
    /// not emitted again.
    pub dedup_radius: f64,
    /// A midpoint must be at least half the pair distance minus this from
    /// every contour pixel, so its inscribed disc touches both generators.
    pub clearance_tol: f64,
}

impl Default for MedialConfig {
    fn default() -> Self {
        Self {
            angle_tol: 0.45,
            pen_width: 12.0,
            neighbor_depth: 5,
            min_segment_len: 3,
            chain_radius: 2.0,
            dedup_radius: 1.0,
            clearance_tol: 1.0,
        }
    }
}

impl MedialConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.angle_tol > 0.0
            && self.pen_width > 0.0
            && self.neighbor_depth > 0
            && self.chain_radius > 0.0
            && self.dedup_radius >= 0.0
            && self.clearance_tol >= 0.0;
        if positive {
            Ok(())
        } else {
            Err(Error::Config("medial parameters must be positive".into()))
        }
    }
}

/// Pen width proportional to glyph height.
pub fn auto_pen_width(bbox_height: usize) -> f64 {
    (0.25 * bbox_height as f64).max(2.0)
}

/// Ordered medial midpoints produced by one pairing of contour strokes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedialSegment {
    pub points: Vec<Point>,
    /// Indices of the source and partner strokes.
    pub source_strokes: (usize, usize),
}

impl MedialSegment {
    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().expect("segments are nonempty")
    }
}

/// Undirected local orientation at contour index `i`, in `(−π/2, π/2]`.
/// Chords to the preceding neighbours are flipped by π so both averages
/// estimate the same tangent, then the two means are averaged as directions.
pub fn local_orientation(contour: &Contour, i: usize, depth: usize) -> f64 {
    let here = contour.at(i as isize);
    let chord = |j: isize| {
        let q = contour.at(i as isize + j);
        f64::from(q.y - here.y).atan2(f64::from(q.x - here.x))
    };
    let fwd = circular_mean((1..=depth as isize).map(chord));
    let bwd = circular_mean((1..=depth as isize).map(|j| chord(-j) + PI));
    let dir = match (fwd, bwd) {
        (Some(f), Some(b)) => circular_mean([f, b]).unwrap_or(f),
        (Some(f), None) => f,
        (None, Some(b)) => b,
        (None, None) => 0.0,
    };
    fold_orientation(dir)
}

/// Marches along the perpendicular of `theta` from the boundary pixel
/// `from` and returns the first boundary pixel reached that `is_own` does
/// not claim. Only senses whose first step lands on ink are marched; when
/// both do, the nearer hit wins. The march gives up after `max_dist`.
pub fn perpendicular_hit(
    img: &BinaryImage,
    from: Pixel,
    theta: f64,
    max_dist: f64,
    is_own: &dyn Fn(Pixel) -> bool,
) -> Option<Pixel> {
    // Aim at a fixed far point so the digital ray does not depend on `max_dist`.
    let (w, h) = img.dims();
    let reach = (w + h) as f64 + 2.0;
    let mut best: Option<(f64, Pixel)> = None;
    for sense in [1.0, -1.0] {
        let dir = theta + sense * FRAC_PI_2;
        let target = from.to_point().along(dir, reach).to_pixel();
        let ray = line_pixels(from, target);
        if ray.len() < 2 || !img.get(ray[1]) {
            continue;
        }
        let mut hit = None;
        for k in 1..ray.len() {
            let q = ray[k];
            if !img.get(q) {
                // Slipped out through a diagonal gap: the last ink pixel
                // touches background, so it is on a boundary.
                let last = ray[k - 1];
                if k > 1 && !is_own(last) {
                    hit = Some(last);
                }
                break;
            }
            if from.distance(q) >= max_dist {
                break;
            }
            if is_boundary_pixel(img, q) && !is_own(q) {
                hit = Some(q);
                break;
            }
        }
        if let Some(h) = hit {
            let d = from.distance(h);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, h));
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Where a contour pixel sits: contour, index and the strokes sharing it.
#[derive(Debug, Clone, Default)]
struct Membership {
    at: Vec<(usize, usize)>,
    strokes: Vec<usize>,
}

/// Pixel lookups over the contours and strokes of one component.
pub struct StrokeMap<'a> {
    contours: &'a [Contour],
    members: HashMap<Pixel, Membership>,
}

impl<'a> StrokeMap<'a> {
    pub fn new(contours: &'a [Contour], strokes: &'a [ContourStroke]) -> Self {
        let mut members: HashMap<Pixel, Membership> = HashMap::new();
        for (ci, c) in contours.iter().enumerate() {
            for (i, &p) in c.points.iter().enumerate() {
                members.entry(p).or_default().at.push((ci, i));
            }
        }
        for (si, s) in strokes.iter().enumerate() {
            let c = &contours[s.contour];
            for i in s.indices(c.len()) {
                let m = members.get_mut(&c.points[i]).expect("stroke indexes its contour");
                if !m.strokes.contains(&si) {
                    m.strokes.push(si);
                }
            }
        }
        Self { contours, members }
    }

    fn on_stroke(&self, p: Pixel, stroke: usize) -> bool {
        self.members.get(&p).is_some_and(|m| m.strokes.contains(&stroke))
    }

    fn orientation(&self, p: Pixel, depth: usize) -> Option<f64> {
        let &(c, i) = self.members.get(&p)?.at.first()?;
        Some(local_orientation(&self.contours[c], i, depth))
    }

    /// True when no contour pixel is closer to `m` than `r`.
    fn clear_of_contour(&self, m: Point, r: f64) -> bool {
        let reach = r.ceil() as i32 + 1;
        let c = m.to_pixel();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let q = c.offset(dx, dy);
                if self.members.contains_key(&q) && q.to_point().distance(m) < r {
                    return false;
                }
            }
        }
        true
    }

    fn primary_stroke(&self, p: Pixel) -> Option<usize> {
        self.members.get(&p)?.strokes.first().copied()
    }
}

/// One accepted perpendicular pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub source: Pixel,
    pub target: Pixel,
    pub source_stroke: usize,
    pub target_stroke: usize,
    pub midpoint: Point,
}

/// Evaluates the pairing conditions for `source` on `stroke`, ignoring any
/// processing flags.
fn try_pair(
    img: &BinaryImage,
    map: &StrokeMap<'_>,
    source: Pixel,
    stroke: usize,
    cfg: &MedialConfig,
) -> Option<Pairing> {
    let theta = map.orientation(source, cfg.neighbor_depth)?;
    let target = perpendicular_hit(img, source, theta, cfg.pen_width, &|q| map.on_stroke(q, stroke))?;
    let d = source.distance(target);
    if d >= cfg.pen_width {
        return None;
    }
    let theta_t = map.orientation(target, cfg.neighbor_depth)?;
    if undirected_diff(theta, theta_t) >= cfg.angle_tol {
        return None;
    }
    if !line_pixels(source, target).into_iter().all(|q| img.get(q)) {
        return None;
    }
    let midpoint = source.to_point().midpoint(target.to_point());
    if !map.clear_of_contour(midpoint, d / 2.0 - cfg.clearance_tol) {
        return None;
    }
    Some(Pairing {
        source,
        target,
        source_stroke: stroke,
        target_stroke: map.primary_stroke(target)?,
        midpoint,
    })
}

/// Every (stroke, pixel) whose perpendicular pairing satisfies the angle and
/// pen-width conditions, before processing flags are applied. Grows
/// monotonically with `angle_tol` and `pen_width`.
pub fn accepted_pairings(
    contours: &[Contour],
    strokes: &[ContourStroke],
    img: &BinaryImage,
    cfg: &MedialConfig,
) -> Vec<Pairing> {
    let map = StrokeMap::new(contours, strokes);
    let mut out = Vec::new();
    for (si, s) in strokes.iter().enumerate() {
        let c = &contours[s.contour];
        for i in s.indices(c.len()) {
            if let Some(p) = try_pair(img, &map, c.points[i], si, cfg) {
                out.push(p);
            }
        }
    }
    out
}

/// Half-pixel grid for midpoint lookups.
#[derive(Default)]
struct MidpointGrid {
    cells: HashMap<(i64, i64), Vec<(Point, (usize, usize))>>,
}

impl MidpointGrid {
    fn key(p: Point) -> (i64, i64) {
        (p.x.floor() as i64, p.y.floor() as i64)
    }

    fn near_other(&self, p: Point, radius: f64, pairing: (usize, usize)) -> bool {
        let (kx, ky) = Self::key(p);
        let r = radius.ceil() as i64 + 1;
        for dy in -r..=r {
            for dx in -r..=r {
                if let Some(v) = self.cells.get(&(kx + dx, ky + dy)) {
                    if v.iter().any(|&(q, k)| k != pairing && q.distance(p) < radius) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn insert(&mut self, p: Point, pairing: (usize, usize)) {
        self.cells.entry(Self::key(p)).or_default().push((p, pairing));
    }
}

/// Walks the strokes in order, pairing each unflagged pixel and flagging
/// both ends of every accepted pair. Accepted midpoints of the same stroke
/// pairing are chained; a gap wider than `chain_radius` starts a new chain.
pub fn extract_medial_segments(
    contours: &[Contour],
    strokes: &[ContourStroke],
    img: &BinaryImage,
    cfg: &MedialConfig,
) -> Vec<MedialSegment> {
    let map = StrokeMap::new(contours, strokes);
    let mut flagged: HashSet<Pixel> = HashSet::new();
    let mut grid = MidpointGrid::default();
    let mut out = Vec::new();

    let close = |chain: Vec<Point>, key: (usize, usize), out: &mut Vec<MedialSegment>| {
        if chain.len() >= cfg.min_segment_len {
            out.push(MedialSegment {
                points: chain,
                source_strokes: key,
            });
        }
    };

    for (si, s) in strokes.iter().enumerate() {
        let c = &contours[s.contour];
        let mut open: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
        for i in s.indices(c.len()) {
            let p = c.points[i];
            if flagged.contains(&p) {
                continue;
            }
            let Some(pair) = try_pair(img, &map, p, si, cfg) else {
                continue;
            };
            let key = (si, pair.target_stroke);
            flagged.insert(p);
            if grid.near_other(pair.midpoint, cfg.dedup_radius, key) {
                continue;
            }
            flagged.insert(pair.target);
            grid.insert(pair.midpoint, key);
            let chain = open.entry(pair.target_stroke).or_default();
            if chain
                .last()
                .is_some_and(|q| q.distance(pair.midpoint) > cfg.chain_radius)
            {
                close(std::mem::take(chain), key, &mut out);
            }
            chain.push(pair.midpoint);
        }
        for (t, chain) in open {
            close(chain, (si, t), &mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{trace_contours, ContourKind};
    use crate::raster::connected_components;
    use crate::segmentation::{segment_contour, SegConfig};
    use std::f64::consts::FRAC_PI_4;

    fn path(points: Vec<Pixel>) -> Contour {
        Contour {
            kind: ContourKind::Outer,
            points,
        }
    }

    fn analyze(img: &BinaryImage) -> (Vec<Contour>, Vec<ContourStroke>) {
        let comp = connected_components(img).remove(0);
        let contours = trace_contours(&comp);
        let strokes = contours
            .iter()
            .enumerate()
            .flat_map(|(i, c)| segment_contour(c, i, &SegConfig::default()))
            .collect();
        (contours, strokes)
    }

    fn rect(w: usize, h: usize, pad: usize) -> BinaryImage {
        BinaryImage::from_fn(w + 2 * pad, h + 2 * pad, |x, y| {
            (pad..w + pad).contains(&x) && (pad..h + pad).contains(&y)
        })
    }

    #[test]
    fn straight_runs_have_axis_orientation() {
        let horizontal = path((0..20).map(|x| Pixel::new(x, 3)).collect());
        assert!(local_orientation(&horizontal, 10, 5).abs() < 1e-12);
        let reversed = path((0..20).rev().map(|x| Pixel::new(x, 3)).collect());
        assert!(local_orientation(&reversed, 10, 5).abs() < 1e-12);
        let vertical = path((0..20).map(|y| Pixel::new(4, y)).collect());
        assert!((local_orientation(&vertical, 10, 5) - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn corner_apex_orientation_is_the_bisector() {
        // Five pixels in from the west, apex, five pixels up to the north.
        let mut pts: Vec<Pixel> = (-5..=0).map(|x| Pixel::new(x, 0)).collect();
        pts.extend((1..=5).map(|k| Pixel::new(0, -k)));
        let c = path(pts);
        let apex = 5;
        // Direct evaluation of the ten chord angles.
        let fwd: f64 = (1..=5).map(|_| -FRAC_PI_2).sum::<f64>() / 5.0;
        let bwd: f64 = (1..=5).map(|_| PI - PI).sum::<f64>() / 5.0;
        let expected = 0.5 * (fwd + bwd);
        assert!((expected + FRAC_PI_4).abs() < 1e-12);
        assert!((local_orientation(&c, apex, 5) - expected).abs() < 1e-9);
    }

    #[test]
    fn ray_crosses_a_bar_to_the_opposite_edge() {
        let img = rect(30, 8, 2);
        let from = Pixel::new(15, 2);
        let hit = perpendicular_hit(&img, from, 0.0, 12.0, &|q| q.y == 2).unwrap();
        assert_eq!(hit, Pixel::new(15, 9));
        assert_eq!(from.distance(hit), 7.0);
    }

    #[test]
    fn ray_crosses_an_annulus_ring() {
        let img = BinaryImage::from_fn(24, 24, |x, y| {
            let outer = (2..22).contains(&x) && (2..22).contains(&y);
            let hole = (5..19).contains(&x) && (5..19).contains(&y);
            outer && !hole
        });
        let (contours, strokes) = analyze(&img);
        let map = StrokeMap::new(&contours, &strokes);
        let from = Pixel::new(12, 2);
        let own = map.primary_stroke(from).unwrap();
        let hit = perpendicular_hit(&img, from, 0.0, 12.0, &|q| map.on_stroke(q, own)).unwrap();
        let hole_pixels: HashSet<Pixel> = contours
            .iter()
            .filter(|c| c.kind == ContourKind::Hole)
            .flat_map(|c| c.points.clone())
            .collect();
        assert!(hole_pixels.contains(&hit));
        assert!((from.distance(hit) - 2.0).abs() <= 1.0);
    }

    #[test]
    fn ray_along_the_bar_finds_nothing() {
        let img = rect(40, 8, 2);
        // From the middle of the left cap, the perpendicular runs along the bar.
        let hit = perpendicular_hit(&img, Pixel::new(2, 5), FRAC_PI_2, 12.0, &|q| q.x == 2);
        assert_eq!(hit, None);
    }

    #[test]
    fn bar_yields_one_segment_on_the_midline() {
        let img = rect(40, 8, 2);
        let (contours, strokes) = analyze(&img);
        let segs = extract_medial_segments(&contours, &strokes, &img, &MedialConfig::default());
        assert_eq!(segs.len(), 1);
        // Analytic midline: y = 2 + 3.5.
        for p in &segs[0].points {
            assert!((p.y - 5.5).abs() <= 1.0, "{p:?}");
        }
        assert!(segs[0].points.len() > 25);
    }

    fn plus(arm: usize, w: usize) -> BinaryImage {
        let size = arm + 4;
        let lo = 2 + (arm - w) / 2;
        BinaryImage::from_fn(size, size, |x, y| {
            let inside = (2..2 + arm).contains(&x) && (2..2 + arm).contains(&y);
            let hbar = (lo..lo + w).contains(&y);
            let vbar = (lo..lo + w).contains(&x);
            inside && (hbar || vbar)
        })
    }

    #[test]
    fn plus_skips_the_junction_square() {
        let img = plus(40, 8);
        let (contours, strokes) = analyze(&img);
        let segs = extract_medial_segments(&contours, &strokes, &img, &MedialConfig::default());
        assert_eq!(segs.len(), 4, "{segs:?}");
        let (lo, hi) = (18.0, 25.0);
        for s in &segs {
            for p in &s.points {
                assert!(!(p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi), "{p:?} in junction");
            }
        }
    }

    #[test]
    fn thick_bar_exceeds_pen_width() {
        let img = rect(60, 20, 2);
        let (contours, strokes) = analyze(&img);
        let segs = extract_medial_segments(&contours, &strokes, &img, &MedialConfig::default());
        assert!(segs.is_empty());
    }

    #[test]
    fn midpoints_sit_between_their_generators_on_ink() {
        let img = plus(40, 8);
        let (contours, strokes) = analyze(&img);
        for p in accepted_pairings(&contours, &strokes, &img, &MedialConfig::default()) {
            assert!(line_pixels(p.source, p.target).iter().all(|&q| img.get(q)));
            let (da, db) = (
                p.midpoint.distance(p.source.to_point()),
                p.midpoint.distance(p.target.to_point()),
            );
            assert!((da - db).abs() <= 0.5);
            assert!(img.get(p.midpoint.to_pixel()));
        }
    }

    #[test]
    fn no_pixel_generates_two_pairings() {
        let img = plus(40, 8);
        let (contours, strokes) = analyze(&img);
        let segs = extract_medial_segments(&contours, &strokes, &img, &MedialConfig::default());
        let mut seen = HashSet::new();
        for s in &segs {
            for p in &s.points {
                assert!(seen.insert(((p.x * 2.0) as i64, (p.y * 2.0) as i64)), "duplicate {p:?}");
            }
        }
    }

    #[test]
    fn auto_pen_width_scales_with_height() {
        assert_eq!(auto_pen_width(48), 12.0);
        assert_eq!(auto_pen_width(4), 2.0);
    }

    proptest::proptest! {
        #[test]
        fn looser_thresholds_never_lose_pairings(len in 20.0f64..45.0, width in 3.0f64..10.0, deg in 0.0f64..180.0) {
            let img = crate::synth::synthesize("rotated-bar", &[len, width.floor(), deg]).unwrap().image;
            let (contours, strokes) = analyze(&img);
            let count = |angle_tol: f64, pen_width: f64| {
                let cfg = MedialConfig { angle_tol, pen_width, ..MedialConfig::default() };
                accepted_pairings(&contours, &strokes, &img, &cfg).len()
            };
            let base = count(0.45, 12.0);
            proptest::prop_assert!(count(0.9, 12.0) >= base);
            proptest::prop_assert!(count(0.45, 24.0) >= base);
        }
    }
}
