//! Synthetic test shapes with analytic ground truth.
//!
//! Shapes are rasterized by sampling pixel centres, with a 4-pixel
//! background margin. Lengths are in pixels; a bar of length `L` and width
//! `W` covers exactly `L × W` pixels when axis-aligned.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_polyline_distance, Pixel, Point};
use crate::raster::BinaryImage;

const MARGIN: f64 = 4.0;

pub const SHAPES: [&str; 7] = ["bar", "rotated-bar", "plus", "tee", "ell", "annulus", "circle"];

/// Sidecar describing what a correct skeleton of the shape looks like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub shape: String,
    pub params: Vec<f64>,
    pub expected_leaves: usize,
    /// Analytic midline as one or more polylines.
    pub midline: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub junctions: Vec<[f64; 2]>,
    /// Where the strokes end on the shape outline.
    #[serde(default)]
    pub extremities: Vec<[f64; 2]>,
    /// Outline corner pixels.
    #[serde(default)]
    pub corners: Vec<[i32; 2]>,
}

impl GroundTruth {
    pub fn midline_points(&self) -> Vec<Vec<Point>> {
        self.midline
            .iter()
            .map(|l| l.iter().map(|&[x, y]| Point::new(x, y)).collect())
            .collect()
    }

    /// Distance from `p` to the nearest midline polyline.
    pub fn midline_distance(&self, p: Point) -> f64 {
        self.midline_points()
            .iter()
            .map(|l| point_polyline_distance(p, l))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub image: BinaryImage,
    pub truth: GroundTruth,
}

fn pt(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

fn canvas(w: f64, h: f64, inside: impl Fn(Point) -> bool) -> BinaryImage {
    let (w, h) = ((w + 2.0 * MARGIN).ceil() as usize, (h + 2.0 * MARGIN).ceil() as usize);
    BinaryImage::from_fn(w, h, |x, y| inside(Point::new(x as f64, y as f64)))
}

/// Pixel-centre coordinate of the middle of a run of `n` pixels starting at
/// the margin.
fn mid(n: f64) -> f64 {
    MARGIN + (n - 1.0) / 2.0
}

fn bar(l: f64, w: f64, deg: f64) -> (BinaryImage, Point, Point, Point, Point) {
    let (s, c) = deg.to_radians().sin_cos();
    let hx = (l / 2.0 * c).abs() + (w / 2.0 * s).abs();
    let hy = (l / 2.0 * s).abs() + (w / 2.0 * c).abs();
    let (cw, ch) = ((2.0 * hx).round(), (2.0 * hy).round());
    let centre = Point::new(mid(cw), mid(ch));
    let eps = 1e-9;
    let img = canvas(cw, ch, |p| {
        let (dx, dy) = p.sub(centre);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        u.abs() <= l / 2.0 + eps && v.abs() <= w / 2.0 + eps
    });
    let half = (l - w) / 2.0;
    let along = |t: f64| Point::new(centre.x + t * c, centre.y + t * s);
    (img, along(-half), along(half), along(-l / 2.0), along(l / 2.0))
}

fn check(shape: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n || params.iter().any(|&v| !(v.is_finite()) || v < 0.0) {
        return Err(Error::Params(format!("{shape} takes {n} non-negative numbers")));
    }
    Ok(())
}

/// Builds the named shape from its numeric parameters.
///
/// | shape | params |
/// |---|---|
/// | `bar` | length width |
/// | `rotated-bar` | length width degrees |
/// | `plus` | arm-span width |
/// | `tee` | span width |
/// | `ell` | span width |
/// | `annulus` | outer-side inner-side |
/// | `circle` | outer-radius width |
pub fn synthesize(shape: &str, params: &[f64]) -> Result<Synthetic> {
    let truth = |expected_leaves, midline: Vec<Vec<Point>>| GroundTruth {
        shape: shape.to_string(),
        params: params.to_vec(),
        expected_leaves,
        midline: midline.into_iter().map(|l| l.into_iter().map(pt).collect()).collect(),
        junctions: Vec::new(),
        extremities: Vec::new(),
        corners: Vec::new(),
    };
    match shape {
        "bar" | "rotated-bar" => {
            let deg = if shape == "bar" {
                check(shape, params, 2)?;
                0.0
            } else {
                check(shape, params, 3)?;
                params[2]
            };
            let (l, w) = (params[0], params[1]);
            if w <= 0.0 || l < w {
                return Err(Error::Params("bar needs length >= width > 0".into()));
            }
            let (image, a, b, ea, eb) = bar(l, w, deg);
            let mut t = truth(2, vec![vec![a, b]]);
            t.extremities = vec![pt(ea), pt(eb)];
            Ok(Synthetic { image, truth: t })
        }
        "plus" => {
            check(shape, params, 2)?;
            let (l, w) = (params[0], params[1]);
            if w <= 0.0 || l < 3.0 * w {
                return Err(Error::Params("plus needs span >= 3 × width".into()));
            }
            let c = mid(l);
            let image = canvas(l, l, |p| {
                let (dx, dy) = ((p.x - c).abs(), (p.y - c).abs());
                dx <= l / 2.0 && dy <= l / 2.0 && (dx <= w / 2.0 || dy <= w / 2.0)
            });
            let r = (l - w) / 2.0;
            let mut t = truth(
                4,
                vec![
                    vec![Point::new(c - r, c), Point::new(c + r, c)],
                    vec![Point::new(c, c - r), Point::new(c, c + r)],
                ],
            );
            t.junctions = vec![[c, c]];
            let e = l / 2.0;
            t.extremities = vec![[c - e, c], [c + e, c], [c, c - e], [c, c + e]];
            Ok(Synthetic { image, truth: t })
        }
        "tee" => {
            check(shape, params, 2)?;
            let (l, w) = (params[0], params[1]);
            if w <= 0.0 || l < 3.0 * w {
                return Err(Error::Params("tee needs span >= 3 × width".into()));
            }
            let cx = mid(l);
            let cy = mid(w);
            let bottom = MARGIN + l - 0.5;
            let image = canvas(l, l, |p| {
                let in_bar = (p.x - cx).abs() <= l / 2.0 && (p.y - cy).abs() <= w / 2.0;
                let in_stem = (p.x - cx).abs() <= w / 2.0 && p.y >= cy && p.y <= bottom;
                in_bar || in_stem
            });
            let r = (l - w) / 2.0;
            let mut t = truth(
                3,
                vec![
                    vec![Point::new(cx - r, cy), Point::new(cx + r, cy)],
                    vec![Point::new(cx, cy), Point::new(cx, bottom - w / 2.0)],
                ],
            );
            t.junctions = vec![[cx, cy]];
            t.extremities = vec![[cx - l / 2.0, cy], [cx + l / 2.0, cy], [cx, bottom]];
            Ok(Synthetic { image, truth: t })
        }
        "ell" => {
            check(shape, params, 2)?;
            let (l, w) = (params[0], params[1]);
            if w <= 0.0 || l < 2.0 * w {
                return Err(Error::Params("ell needs span >= 2 × width".into()));
            }
            let (lo, hi) = (MARGIN - 0.5, MARGIN + l - 0.5);
            let vx = mid(w);
            let fy = hi - w / 2.0;
            let image = canvas(l, l, |p| {
                let inside = p.x >= lo && p.x <= hi && p.y >= lo && p.y <= hi;
                inside && (p.x <= lo + w || p.y >= hi - w)
            });
            let mut t = truth(
                2,
                vec![vec![
                    Point::new(vx, lo + w / 2.0),
                    Point::new(vx, fy),
                    Point::new(hi - w / 2.0, fy),
                ]],
            );
            t.extremities = vec![[vx, lo], [hi, fy]];
            let (m, wi, li) = (MARGIN as i32, w as i32, l as i32);
            t.corners = vec![
                [m, m],
                [m + wi - 1, m],
                [m + wi - 1, m + li - wi],
                [m + li - 1, m + li - wi],
                [m + li - 1, m + li - 1],
                [m, m + li - 1],
            ];
            Ok(Synthetic { image, truth: t })
        }
        "annulus" => {
            check(shape, params, 2)?;
            let (outer, inner) = (params[0], params[1]);
            if inner <= 0.0 || outer < inner + 2.0 {
                return Err(Error::Params("annulus needs outer >= inner + 2".into()));
            }
            let c = mid(outer);
            let image = canvas(outer, outer, |p| {
                let d = (p.x - c).abs().max((p.y - c).abs());
                d <= outer / 2.0 && d > inner / 2.0
            });
            let h = (outer + inner) / 4.0;
            let ring = vec![
                Point::new(c - h, c - h),
                Point::new(c + h, c - h),
                Point::new(c + h, c + h),
                Point::new(c - h, c + h),
                Point::new(c - h, c - h),
            ];
            Ok(Synthetic {
                image,
                truth: truth(0, vec![ring]),
            })
        }
        "circle" => {
            check(shape, params, 2)?;
            let (r, w) = (params[0], params[1]);
            if w <= 0.0 || r <= w {
                return Err(Error::Params("circle needs radius > width > 0".into()));
            }
            let c = MARGIN + r;
            let image = canvas(2.0 * r + 1.0, 2.0 * r + 1.0, |p| {
                let d = p.distance(Point::new(c, c));
                d <= r && d > r - w
            });
            let m = r - w / 2.0;
            let ring = (0..=72)
                .map(|k| {
                    let a = k as f64 / 72.0 * TAU;
                    Point::new(c + m * a.cos(), c + m * a.sin())
                })
                .collect();
            Ok(Synthetic {
                image,
                truth: truth(0, vec![ring]),
            })
        }
        other => Err(Error::UnknownShape(other.to_string())),
    }
}

impl Synthetic {
    pub fn corner_pixels(&self) -> Vec<Pixel> {
        self.truth.corners.iter().map(|&[x, y]| Pixel::new(x, y)).collect()
    }
}
