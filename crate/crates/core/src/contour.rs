//! Boundary detection and Moore-neighbour tracing of outer and hole contours.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::geom::Pixel;
use crate::raster::{BinaryImage, Component, NEIGHBOURS_8};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContourKind {
    Outer,
    Hole,
}

/// Closed, ordered boundary of one background region around a component.
/// Outer contours run counterclockwise on screen, holes clockwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub kind: ContourKind,
    pub points: Vec<Pixel>,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cyclic access.
    pub fn at(&self, i: isize) -> Pixel {
        let n = self.points.len() as isize;
        self.points[i.rem_euclid(n) as usize]
    }

    /// Shoelace sum in image coordinates (y down). Negative for
    /// counterclockwise-on-screen traversal.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut acc = 0i64;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            acc += i64::from(a.x) * i64::from(b.y) - i64::from(b.x) * i64::from(a.y);
        }
        acc as f64 / 2.0
    }
}

/// True when the 3×3 neighbourhood of `p` holds background. Off-image
/// neighbours count as background.
pub fn is_boundary_pixel(img: &BinaryImage, p: Pixel) -> bool {
    debug_assert!(img.get(p), "boundary test on a background pixel");
    NEIGHBOURS_8.iter().any(|&(dx, dy)| !img.get(p.offset(dx, dy)))
}

// Counterclockwise on screen: E, NE, N, NW, W, SW, S, SE.
const CCW: [(i32, i32); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];
const WEST: usize = 4;
const SOUTH: usize = 6;

fn dir_index(dx: i32, dy: i32) -> usize {
    CCW.iter()
        .position(|&d| d == (dx, dy))
        .expect("offset is a unit neighbour")
}

/// Moore-neighbour boundary following. Stops when a (pixel, backtrack)
/// state repeats, which generalizes Jacob's criterion. Diagonal moves whose
/// inner corner pixel is ink get that pixel inserted, so corner-only
/// boundary pixels are not skipped.
fn moore_trace(mask: &BinaryImage, start: Pixel, backtrack: usize) -> Vec<Pixel> {
    let mut raw: Vec<Pixel> = Vec::new();
    let mut seen: HashMap<(Pixel, usize), usize> = HashMap::new();
    let (mut p, mut b) = (start, backtrack);
    loop {
        if let Some(&pos) = seen.get(&(p, b)) {
            raw.drain(..pos);
            return raw;
        }
        seen.insert((p, b), raw.len());
        raw.push(p);

        let mut next = None;
        for k in 1..=8 {
            let d = (b + k) % 8;
            let c = p.offset(CCW[d].0, CCW[d].1);
            if mask.get(c) {
                next = Some((d, c, (b + k - 1) % 8));
                break;
            }
        }
        let Some((d, c, prev)) = next else {
            return raw;
        };
        if d % 2 == 1 {
            let o = p.offset(CCW[(d + 1) % 8].0, CCW[(d + 1) % 8].1);
            if mask.get(o) {
                raw.push(o);
            }
        }
        let back = p.offset(CCW[prev].0, CCW[prev].1);
        b = dir_index(back.x - c.x, back.y - c.y);
        p = c;
    }
}

/// Rotates to start at the topmost-then-leftmost pixel and keeps each
/// pixel's first visit only.
fn normalize(raw: Vec<Pixel>) -> Vec<Pixel> {
    let Some(start) = raw.iter().enumerate().min_by_key(|(_, p)| (p.y, p.x)).map(|(i, _)| i) else {
        return raw;
    };
    let mut seen = HashSet::with_capacity(raw.len());
    let n = raw.len();
    (0..n)
        .map(|k| raw[(start + k) % n])
        .filter(|p| seen.insert(*p))
        .collect()
}

/// Background regions of a padded mask that do not reach the border, as
/// 4-connected pixel lists in scanline order of their first pixel.
pub(crate) fn hole_regions(mask: &BinaryImage) -> Vec<Vec<Pixel>> {
    let (w, h) = mask.dims();
    let mut region = vec![usize::MAX; w * h];
    let idx = |p: Pixel| p.y as usize * w + p.x as usize;
    const OUTSIDE: usize = usize::MAX - 1;

    let flood = |seed: Pixel, id: usize, region: &mut Vec<usize>| -> Vec<Pixel> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([seed]);
        region[idx(seed)] = id;
        while let Some(p) = queue.pop_front() {
            out.push(p);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let q = p.offset(dx, dy);
                if mask.in_bounds(q) && !mask.get(q) && region[idx(q)] == usize::MAX {
                    region[idx(q)] = id;
                    queue.push_back(q);
                }
            }
        }
        out
    };

    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let p = Pixel::new(x, y);
            let border = x == 0 || y == 0 || x == w as i32 - 1 || y == h as i32 - 1;
            if border && !mask.get(p) && region[idx(p)] == usize::MAX {
                flood(p, OUTSIDE, &mut region);
            }
        }
    }
    let mut holes = Vec::new();
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let p = Pixel::new(x, y);
            if !mask.get(p) && region[idx(p)] == usize::MAX {
                let mut px = flood(p, holes.len(), &mut region);
                px.sort_by_key(|q| (q.y, q.x));
                holes.push(px);
            }
        }
    }
    holes
}

/// Traces the outer contour and one contour per hole of a component.
/// Coordinates are image coordinates.
pub fn trace_contours(comp: &Component) -> Vec<Contour> {
    raw_traces(comp)
        .into_iter()
        .map(|(kind, raw)| Contour {
            kind,
            points: normalize(raw),
        })
        .collect()
}

/// Closed traversals before revisits are dropped.
fn raw_traces(comp: &Component) -> Vec<(ContourKind, Vec<Pixel>)> {
    let (mask, origin) = comp.to_mask(1);
    let to_image = |pts: Vec<Pixel>| -> Vec<Pixel> { pts.into_iter().map(|p| p.offset(origin.x, origin.y)).collect() };

    let start = comp.pixels[0].offset(-origin.x, -origin.y);
    let mut out = vec![(ContourKind::Outer, to_image(moore_trace(&mask, start, WEST)))];
    for hole in hole_regions(&mask) {
        let start = hole[0].offset(0, -1);
        out.push((ContourKind::Hole, to_image(moore_trace(&mask, start, SOUTH))));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::connected_components;
    use proptest::prelude::*;

    fn boundary_set(img: &BinaryImage) -> HashSet<Pixel> {
        img.pixels().filter(|&p| is_boundary_pixel(img, p)).collect()
    }

    fn single(img: &BinaryImage) -> Component {
        let mut cc = connected_components(img);
        assert_eq!(cc.len(), 1);
        cc.remove(0)
    }

    #[test]
    fn boundary_predicate_cases() {
        let dot = BinaryImage::from_ascii(&["...", ".#.", "..."]);
        assert!(is_boundary_pixel(&dot, Pixel::new(1, 1)));
        let block = BinaryImage::from_ascii(&["###", "###", "###"]);
        assert!(!is_boundary_pixel(&block, Pixel::new(1, 1)));
        // Edge pixels see off-image background.
        assert!(is_boundary_pixel(&block, Pixel::new(0, 1)));
        assert!(is_boundary_pixel(&block, Pixel::new(2, 2)));
    }

    #[test]
    fn block_contour_has_eight_points() {
        let img = BinaryImage::from_ascii(&[".....", ".###.", ".###.", ".###.", "....."]);
        let cs = trace_contours(&single(&img));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].len(), 8);
        assert_eq!(cs[0].points[0], Pixel::new(1, 1));
        assert!(cs[0].signed_area() < 0.0);
    }

    #[test]
    fn one_pixel_bar_visits_each_pixel_once() {
        let img = BinaryImage::from_fn(12, 3, |x, y| y == 1 && (1..=10).contains(&x));
        let cs = trace_contours(&single(&img));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].len(), 10);
        let set: HashSet<_> = cs[0].points.iter().copied().collect();
        assert_eq!(set, boundary_set(&img));
        assert!(cs[0].points.windows(2).all(|w| w[0].is_8_adjacent(w[1])));
    }

    #[test]
    fn square_annulus_has_outer_and_hole() {
        let img = BinaryImage::from_fn(9, 9, |x, y| {
            let inside = (1..=7).contains(&x) && (1..=7).contains(&y);
            let hole = (3..=5).contains(&x) && (3..=5).contains(&y);
            inside && !hole
        });
        let cs = trace_contours(&single(&img));
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].kind, ContourKind::Outer);
        assert_eq!(cs[1].kind, ContourKind::Hole);
        // Oracle: boundary predicate restricted to each background region.
        let outer: HashSet<Pixel> = boundary_set(&img)
            .into_iter()
            .filter(|p| {
                NEIGHBOURS_8.iter().any(|&(dx, dy)| {
                    let q = p.offset(dx, dy);
                    !img.get(q) && !(3..=5).contains(&q.x) | !(3..=5).contains(&q.y)
                })
            })
            .collect();
        assert_eq!(outer.len(), 24);
        assert_eq!(cs[0].len(), 24);
        assert_eq!(cs[1].len(), 16);
        assert!(cs[0].signed_area() < 0.0);
        assert!(cs[1].signed_area() > 0.0);
    }

    #[test]
    fn concave_corner_pixel_is_traced() {
        let img = BinaryImage::from_ascii(&["......", ".##...", ".##...", ".####.", ".####.", "......"]);
        let cs = trace_contours(&single(&img));
        let set: HashSet<_> = cs.iter().flat_map(|c| c.points.clone()).collect();
        assert_eq!(set, boundary_set(&img));
        assert!(set.contains(&Pixel::new(2, 3)));
        assert!(cs[0].points.windows(2).all(|w| w[0].is_8_adjacent(w[1])));
    }

    fn random_mask() -> impl Strategy<Value = BinaryImage> {
        (3usize..14, 3usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h)
                .prop_map(move |bits| BinaryImage::from_fn(w, h, |x, y| bits[y * w + x]))
        })
    }

    proptest! {
        #[test]
        fn traced_points_equal_boundary_predicate(img in random_mask()) {
            for comp in connected_components(&img) {
                let (mask, origin) = comp.to_mask(1);
                let expected: HashSet<Pixel> = boundary_set(&mask)
                    .into_iter()
                    .map(|p| p.offset(origin.x, origin.y))
                    .collect();
                let contours = trace_contours(&comp);
                let mut got = HashSet::new();
                for c in &contours {
                    let unique: HashSet<_> = c.points.iter().copied().collect();
                    prop_assert_eq!(unique.len(), c.len());
                    got.extend(unique);
                }
                prop_assert_eq!(got, expected);
                prop_assert_eq!(trace_contours(&comp), contours);
            }
        }

        #[test]
        fn raw_loops_are_adjacent_and_dedup_keeps_them_when_simple(img in random_mask()) {
            for comp in connected_components(&img) {
                for (kind, raw) in raw_traces(&comp) {
                    let n = raw.len();
                    if n > 1 {
                        prop_assert!((0..n).all(|i| raw[i].is_8_adjacent(raw[(i + 1) % n])));
                    }
                    let unique: HashSet<_> = raw.iter().collect();
                    if unique.len() == n && n > 2 {
                        let c = Contour { kind, points: normalize(raw.clone()) };
                        prop_assert!((0..n).all(|i| c.at(i as isize).is_8_adjacent(c.at(i as isize + 1))));
                    }
                }
            }
        }
    }
}
