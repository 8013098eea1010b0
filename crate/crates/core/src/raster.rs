//! Image ingestion, Otsu binarization, connected components and
//! vertical-profile splitting of headline-joined words.

use crate::error::{Error, Result};
use crate::geom::Pixel;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if samples.len() != width * height {
            return Err(Error::SampleCount {
                expected: width * height,
                actual: samples.len(),
            });
        }
        Ok(Self { width, height, samples })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut h = [0u64; 256];
        for &s in &self.samples {
            h[s as usize] += 1;
        }
        h
    }
}

/// Foreground/background raster. `true` is ink.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        Self { width, height, mask }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: impl IntoIterator<Item = Pixel>) -> Self {
        let mut img = Self::new(width, height);
        for p in pixels {
            img.set(p, true);
        }
        img
    }

    /// Parses rows of `#` (ink) and `.` (background). Handy for fixtures.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        Self::from_fn(width, height, |x, y| rows[y].as_bytes().get(x) == Some(&b'#'))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn in_bounds(&self, p: Pixel) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Off-image pixels read as background.
    pub fn get(&self, p: Pixel) -> bool {
        self.in_bounds(p) && self.mask[p.y as usize * self.width + p.x as usize]
    }

    pub fn set(&mut self, p: Pixel, value: bool) {
        if self.in_bounds(p) {
            self.mask[p.y as usize * self.width + p.x as usize] = value;
        }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Foreground pixels in scanline order.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| Pixel::new((i % self.width) as i32, (i / self.width) as i32))
    }

    /// Number of foreground pixels among the 8 neighbours of `p`.
    pub fn neighbour_count(&self, p: Pixel) -> usize {
        NEIGHBOURS_8
            .iter()
            .filter(|&&(dx, dy)| self.get(p.offset(dx, dy)))
            .count()
    }

    /// Renders ink as 0 and background as 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            samples: self.mask.iter().map(|&b| if b { 0 } else { 255 }).collect(),
        }
    }
}

pub(crate) const NEIGHBOURS_8: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Which intensity class is ink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    #[default]
    DarkInk,
    LightInk,
}

/// Inclusive axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rect {
    pub fn width(&self) -> usize {
        (self.x1 - self.x0 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0 + 1) as usize
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    fn bounding(pixels: &[Pixel]) -> Option<Self> {
        let first = pixels.first()?;
        let mut r = Rect {
            x0: first.x,
            y0: first.y,
            x1: first.x,
            y1: first.y,
        };
        for p in pixels {
            r.x0 = r.x0.min(p.x);
            r.y0 = r.y0.min(p.y);
            r.x1 = r.x1.max(p.x);
            r.y1 = r.y1.max(p.y);
        }
        Some(r)
    }
}

/// A labelled set of foreground pixels, normally one 8-connected blob.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: usize,
    pub bbox: Rect,
    /// Scanline-ordered pixel list.
    pub pixels: Vec<Pixel>,
}

impl Component {
    pub fn new(label: usize, mut pixels: Vec<Pixel>) -> Option<Self> {
        pixels.sort_by_key(|p| (p.y, p.x));
        pixels.dedup();
        let bbox = Rect::bounding(&pixels)?;
        Some(Self { label, bbox, pixels })
    }

    /// Rasterizes the component into a tight mask with `pad` background
    /// pixels on each side. Returns the mask and the image coordinate of its
    /// top-left corner.
    pub fn to_mask(&self, pad: usize) -> (BinaryImage, Pixel) {
        let pad_i = pad as i32;
        let origin = Pixel::new(self.bbox.x0 - pad_i, self.bbox.y0 - pad_i);
        let w = self.bbox.width() + 2 * pad;
        let h = self.bbox.height() + 2 * pad;
        let mask = BinaryImage::from_pixels(w, h, self.pixels.iter().map(|p| p.offset(-origin.x, -origin.y)));
        (mask, origin)
    }
}

/// Otsu threshold maximizing between-class variance of the 256-bin
/// histogram. Pixels `<= t` form the dark class. `None` for images whose
/// histogram admits no split (uniform intensity).
pub fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    let hist = img.histogram();
    let total = img.samples.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut best: Option<(u8, f64)> = None;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for t in 0..=255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if best.is_none_or(|(_, v)| var > v) {
            best = Some((t as u8, var));
        }
    }
    best.filter(|&(_, v)| v > 0.0).map(|(t, _)| t)
}

/// Binarizes with Otsu's threshold. Uniform images yield no foreground.
pub fn otsu_binarize(img: &GrayImage, polarity: Polarity) -> BinaryImage {
    let Some(t) = otsu_threshold(img) else {
        return BinaryImage::new(img.width, img.height);
    };
    BinaryImage {
        width: img.width,
        height: img.height,
        mask: img
            .samples
            .iter()
            .map(|&s| match polarity {
                Polarity::DarkInk => s <= t,
                Polarity::LightInk => s > t,
            })
            .collect(),
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller root so label order follows first appearance.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Two-pass 8-connected labelling. Components come back in scanline order of
/// their first pixel, labelled densely from 0.
pub fn connected_components(img: &BinaryImage) -> Vec<Component> {
    const UNSET: usize = usize::MAX;
    let (w, h) = img.dims();
    let mut labels = vec![UNSET; w * h];
    let mut sets = DisjointSet::new();

    for y in 0..h {
        for x in 0..w {
            if !img.mask[y * w + x] {
                continue;
            }
            let mut current = UNSET;
            // Already-visited neighbours: W, NW, N, NE.
            for (dx, dy) in [(-1i32, 0i32), (-1, -1), (0, -1), (1, -1)] {
                let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                if nx < 0 || ny < 0 || nx as usize >= w {
                    continue;
                }
                let l = labels[ny as usize * w + nx as usize];
                if l == UNSET {
                    continue;
                }
                if current == UNSET {
                    current = l;
                } else {
                    sets.union(current, l);
                }
            }
            if current == UNSET {
                current = sets.make();
            }
            labels[y * w + x] = current;
        }
    }

    let mut dense = vec![UNSET; sets.parent.len()];
    let mut groups: Vec<Vec<Pixel>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == UNSET {
                continue;
            }
            let root = sets.find(l);
            if dense[root] == UNSET {
                dense[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[dense[root]].push(Pixel::new(x as i32, y as i32));
        }
    }
    groups
        .into_iter()
        .enumerate()
        .filter_map(|(i, px)| Component::new(i, px))
        .collect()
}

/// Column-sum profile over the component's bounding box.
pub fn vertical_profile(comp: &Component) -> Vec<usize> {
    let mut profile = vec![0usize; comp.bbox.width()];
    for p in &comp.pixels {
        profile[(p.x - comp.bbox.x0) as usize] += 1;
    }
    profile
}

/// Columns (relative to the bbox) where the profile has an interior local
/// minimum no higher than `min_ratio` times the median nonzero column sum.
/// A flat-bottomed minimum reports its leftmost column.
pub fn profile_split_columns(profile: &[usize], min_ratio: f64) -> Vec<usize> {
    let mut nonzero: Vec<usize> = profile.iter().copied().filter(|&v| v > 0).collect();
    if nonzero.is_empty() || profile.len() < 3 {
        return Vec::new();
    }
    nonzero.sort_unstable();
    let median = if nonzero.len() % 2 == 1 {
        nonzero[nonzero.len() / 2] as f64
    } else {
        (nonzero[nonzero.len() / 2 - 1] + nonzero[nonzero.len() / 2]) as f64 / 2.0
    };
    let limit = min_ratio * median;

    let mut out = Vec::new();
    let mut c = 1;
    while c + 1 < profile.len() {
        let v = profile[c];
        let mut end = c;
        while end + 1 < profile.len() && profile[end + 1] == v {
            end += 1;
        }
        let is_min = profile[c - 1] > v && end + 1 < profile.len() && profile[end + 1] > v;
        if is_min && (v as f64) <= limit {
            out.push(c);
        }
        c = end + 1;
    }
    out
}

/// Splits a component at qualifying profile minima. Pixels in a split
/// column stay with the piece on their left. Returns the input unchanged
/// when no column qualifies.
pub fn split_by_vertical_profile(comp: &Component, min_ratio: f64) -> Vec<Component> {
    let cuts = profile_split_columns(&vertical_profile(comp), min_ratio);
    if cuts.is_empty() {
        return vec![comp.clone()];
    }
    let mut pieces: Vec<Vec<Pixel>> = vec![Vec::new(); cuts.len() + 1];
    for &p in &comp.pixels {
        let col = (p.x - comp.bbox.x0) as usize;
        let piece = cuts.partition_point(|&c| c < col);
        pieces[piece].push(p);
    }
    pieces
        .into_iter()
        .filter(|p| !p.is_empty())
        .enumerate()
        .filter_map(|(i, px)| Component::new(i, px))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn brute_force_otsu(img: &GrayImage) -> Option<u8> {
        let mut best: Option<(u8, f64)> = None;
        for t in 0..=255u16 {
            let (mut n0, mut n1, mut s0, mut s1) = (0f64, 0f64, 0f64, 0f64);
            for &v in img.samples() {
                if u16::from(v) <= t {
                    n0 += 1.0;
                    s0 += f64::from(v);
                } else {
                    n1 += 1.0;
                    s1 += f64::from(v);
                }
            }
            if n0 == 0.0 || n1 == 0.0 {
                continue;
            }
            let d = s0 / n0 - s1 / n1;
            let var = n0 * n1 * d * d;
            if best.is_none_or(|(_, b)| var > b) {
                best = Some((t as u8, var));
            }
        }
        best.map(|(t, _)| t)
    }

    #[test]
    fn otsu_separates_two_levels() {
        let img = GrayImage::new(4, 2, vec![0, 0, 0, 0, 255, 255, 255, 255]).unwrap();
        let b = otsu_binarize(&img, Polarity::DarkInk);
        assert_eq!(b.mask(), &[true, true, true, true, false, false, false, false]);
    }

    #[test]
    fn otsu_uniform_image_has_no_ink() {
        let img = GrayImage::new(5, 5, vec![117; 25]).unwrap();
        assert!(otsu_binarize(&img, Polarity::DarkInk).is_empty());
        assert!(otsu_binarize(&img, Polarity::LightInk).is_empty());
    }

    #[test]
    fn otsu_matches_exhaustive_sweep_on_bimodal_histogram() {
        // Deterministic Gaussian-shaped modes at 60 and 200.
        let mut samples = Vec::new();
        for (mode, sigma, weight) in [(60.0f64, 12.0f64, 700.0f64), (200.0, 18.0, 500.0)] {
            for v in 0..=255u32 {
                let z = (f64::from(v) - mode) / sigma;
                let n = (weight * (-0.5 * z * z).exp()).round() as usize;
                samples.extend(std::iter::repeat_n(v as u8, n));
            }
        }
        let len = samples.len();
        let img = GrayImage::new(len, 1, samples).unwrap();
        let t = otsu_threshold(&img);
        assert_eq!(t, brute_force_otsu(&img));
        let t = t.unwrap();
        assert!((100..160).contains(&t), "threshold {t}");
    }

    #[test]
    fn light_ink_inverts() {
        let img = GrayImage::new(2, 1, vec![10, 240]).unwrap();
        let b = otsu_binarize(&img, Polarity::LightInk);
        assert_eq!(b.mask(), &[false, true]);
    }

    #[test]
    fn gray_image_rejects_bad_sizes() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn components_of_empty_mask() {
        assert!(connected_components(&BinaryImage::new(4, 4)).is_empty());
    }

    #[test]
    fn two_blocks_are_two_components() {
        let img = BinaryImage::from_ascii(&["##...", "##...", ".....", "...##", "...##"]);
        let cc = connected_components(&img);
        assert_eq!(cc.len(), 2);
        assert!(cc.iter().all(|c| c.pixels.len() == 4));
        assert_eq!(cc[0].label, 0);
        assert_eq!(cc[1].label, 1);
        assert_eq!(cc[0].pixels[0], Pixel::new(0, 0));
    }

    #[test]
    fn diagonal_chain_is_one_component() {
        let img = BinaryImage::from_ascii(&["#....", ".#...", "..#..", "...#.", "....#"]);
        assert_eq!(connected_components(&img).len(), 1);
    }

    #[test]
    fn merging_labels_u_shape() {
        // Two arms joined only at the bottom force a label merge.
        let img = BinaryImage::from_ascii(&["#...#", "#...#", "#####"]);
        let cc = connected_components(&img);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].pixels.len(), 9);
    }

    fn solid(x0: i32, y0: i32, w: i32, h: i32) -> Vec<Pixel> {
        (y0..y0 + h)
            .flat_map(|y| (x0..x0 + w).map(move |x| Pixel::new(x, y)))
            .collect()
    }

    #[test]
    fn solid_rectangle_is_not_split() {
        let comp = Component::new(0, solid(0, 0, 12, 20)).unwrap();
        assert_eq!(split_by_vertical_profile(&comp, 0.2), vec![comp]);
    }

    #[test]
    fn headline_joined_blocks_split_at_thinnest_column() {
        let mut px = solid(0, 0, 10, 20);
        px.extend(solid(16, 0, 10, 20));
        px.extend(solid(10, 0, 6, 1));
        let comp = Component::new(0, px).unwrap();
        let profile = vertical_profile(&comp);
        // Independent oracle: first index of the global minimum.
        let argmin = profile
            .iter()
            .enumerate()
            .min_by_key(|&(i, &v)| (v, i))
            .map(|(i, _)| i)
            .unwrap();
        assert_eq!(profile_split_columns(&profile, 0.2), vec![argmin]);
        let parts = split_by_vertical_profile(&comp, 0.2);
        assert_eq!(parts.len(), 2);
        assert!(parts[0].pixels.iter().all(|p| p.x <= argmin as i32));
        assert!(parts[1].pixels.iter().all(|p| p.x > argmin as i32));
    }

    #[test]
    fn zero_column_always_splits() {
        let mut px = solid(0, 0, 4, 8);
        px.extend(solid(5, 0, 4, 8));
        let comp = Component::new(3, px).unwrap();
        assert_eq!(profile_split_columns(&vertical_profile(&comp), 0.2), vec![4]);
        let parts = split_by_vertical_profile(&comp, 0.2);
        assert_eq!(parts.len(), 2);
        let all: HashSet<Pixel> = parts.iter().flat_map(|c| c.pixels.clone()).collect();
        assert_eq!(all.len(), comp.pixels.len());
    }
}
