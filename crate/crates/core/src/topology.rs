//! Digital topology on 8-connected foreground: simple points, Euler-number
//! hole counting and homotopic thinning.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::geom::Pixel;
use crate::raster::{connected_components, BinaryImage};

/// Neighbours of `p` in the order E, NE, N, NW, W, SW, S, SE.
fn ring(img: &BinaryImage, p: Pixel) -> [bool; 8] {
    const OFF: [(i32, i32); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];
    OFF.map(|(dx, dy)| img.get(p.offset(dx, dy)))
}

/// Yokoi connectivity number for 8-connected foreground.
pub fn connectivity_number(img: &BinaryImage, p: Pixel) -> u8 {
    let x = ring(img, p).map(|b| u8::from(!b));
    let mut n = 0;
    for k in [0, 2, 4, 6] {
        n += x[k] - x[k] * x[(k + 1) % 8] * x[(k + 2) % 8];
    }
    n
}

/// A foreground pixel whose removal changes neither the number of
/// components nor the number of holes.
pub fn is_simple(img: &BinaryImage, p: Pixel) -> bool {
    img.get(p) && connectivity_number(img, p) == 1
}

/// Euler number of the 8-connected foreground from 2×2 bit-quad counts.
pub fn euler_number(img: &BinaryImage) -> i64 {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let (mut q1, mut q3, mut qd) = (0i64, 0i64, 0i64);
    for y in -1..h {
        for x in -1..w {
            let a = img.get(Pixel::new(x, y));
            let b = img.get(Pixel::new(x + 1, y));
            let c = img.get(Pixel::new(x, y + 1));
            let d = img.get(Pixel::new(x + 1, y + 1));
            match u8::from(a) + u8::from(b) + u8::from(c) + u8::from(d) {
                1 => q1 += 1,
                3 => q3 += 1,
                2 if a == d => qd += 1,
                _ => {}
            }
        }
    }
    (q1 - q3 - 2 * qd) / 4
}

pub fn component_count(img: &BinaryImage) -> usize {
    connected_components(img).len()
}

/// Holes of the 8-connected foreground: components minus Euler number.
pub fn hole_count(img: &BinaryImage) -> usize {
    (component_count(img) as i64 - euler_number(img)).max(0) as usize
}

/// Number of 2×2 windows that are entirely foreground.
pub fn block_count(img: &BinaryImage) -> usize {
    img.pixels()
        .filter(|p| img.get(p.offset(1, 0)) && img.get(p.offset(0, 1)) && img.get(p.offset(1, 1)))
        .count()
}

/// Foreground pixels with exactly one foreground neighbour.
pub fn leaf_pixels(img: &BinaryImage) -> Vec<Pixel> {
    img.pixels().filter(|&p| img.neighbour_count(p) == 1).collect()
}

/// Chessboard distance of each foreground pixel to the nearest background
/// pixel (pixels outside the image count as background).
fn distance_to_background(img: &BinaryImage) -> Vec<u32> {
    let (w, h) = img.dims();
    let mut dist = vec![u32::MAX; w * h];
    let mut queue = VecDeque::new();
    for p in img.pixels() {
        let border = (-1..=1).any(|dy| (-1..=1).any(|dx| !img.get(p.offset(dx, dy))));
        if border {
            dist[p.y as usize * w + p.x as usize] = 1;
            queue.push_back(p);
        }
    }
    while let Some(p) = queue.pop_front() {
        let d = dist[p.y as usize * w + p.x as usize];
        for dy in -1..=1 {
            for dx in -1..=1 {
                let q = p.offset(dx, dy);
                if img.get(q) {
                    let i = q.y as usize * w + q.x as usize;
                    if dist[i] > d + 1 {
                        dist[i] = d + 1;
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    dist
}

/// Sequentially deletes simple pixels of `fg` that are not in `anchors`,
/// outermost first. The result contains every anchor on `fg`, lies inside
/// `fg` and has the same components and holes.
pub fn anchored_reduction(fg: &BinaryImage, anchors: &BinaryImage) -> BinaryImage {
    let (w, _) = fg.dims();
    let dist = distance_to_background(fg);
    let mut out = fg.clone();
    let key = |p: Pixel| Reverse((dist[p.y as usize * w + p.x as usize], p.y, p.x));
    let mut heap: BinaryHeap<_> = fg.pixels().filter(|&p| !anchors.get(p)).map(key).collect();
    while let Some(Reverse((_, y, x))) = heap.pop() {
        let p = Pixel::new(x, y);
        if !out.get(p) || anchors.get(p) || !is_simple(&out, p) {
            continue;
        }
        out.set(p, false);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let q = p.offset(dx, dy);
                if out.get(q) && !anchors.get(q) {
                    heap.push(key(q));
                }
            }
        }
    }
    out
}

/// Removes simple pixels that are not line ends and whose removal does not
/// turn a neighbour into a line end, plus corners of pixel triangles, until
/// none is left. Clears doubled pixels at corners and junctions without
/// shortening any branch.
pub fn prune_to_unit_width(img: &BinaryImage) -> BinaryImage {
    let mut out = img.clone();
    loop {
        let mut changed = false;
        for p in img.pixels() {
            if !out.get(p) || out.neighbour_count(p) < 2 || !is_simple(&out, p) {
                continue;
            }
            let nbrs: Vec<Pixel> = (-1..=1)
                .flat_map(|dy| (-1..=1).map(move |dx| p.offset(dx, dy)))
                .filter(|&q| q != p && out.get(q))
                .collect();
            let strands = nbrs.iter().any(|&q| out.neighbour_count(q) == 2);
            // Corner of a three-pixel triangle: its two neighbours already touch.
            let corner = nbrs.len() == 2 && nbrs[0].is_8_adjacent(nbrs[1]);
            if !strands || corner {
                out.set(p, false);
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}
