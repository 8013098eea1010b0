//! Raster baseline and skeleton quality metrics.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{point_polyline_distance, Pixel, Point};
use crate::pipeline::{thin_binary, PipelineConfig};
use crate::raster::BinaryImage;
use crate::synth::GroundTruth;
use crate::topology::{block_count, component_count, hole_count, leaf_pixels};

/// Classic two-subiteration parallel thinning, run to convergence.
pub fn zhang_suen_thin(img: &BinaryImage) -> BinaryImage {
    let mut out = img.clone();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut doomed = Vec::new();
            for p in out.pixels() {
                // P2..P9 clockwise from north.
                let n = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)]
                    .map(|(dx, dy)| out.get(p.offset(dx, dy)));
                let b = n.iter().filter(|&&v| v).count();
                let a = (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count();
                let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
                let cond = if pass == 0 {
                    !(p2 && p4 && p6) && !(p4 && p6 && p8)
                } else {
                    !(p2 && p4 && p8) && !(p2 && p6 && p8)
                };
                if (2..=6).contains(&b) && a == 1 && cond {
                    doomed.push(p);
                }
            }
            changed |= !doomed.is_empty();
            for p in doomed {
                out.set(p, false);
            }
        }
        if !changed {
            return out;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinMetrics {
    /// Skeleton components minus original components.
    pub component_count_delta: i64,
    pub hole_count_delta: i64,
    /// Number of 2×2 all-foreground windows in the skeleton.
    pub max_width_violations: usize,
    pub leaf_count: usize,
    pub spurious_branch_count: Option<usize>,
    pub midline_hausdorff: Option<f64>,
    pub containment_violations: usize,
}

/// Symmetric Hausdorff distance between skeleton pixels and a set of
/// polylines, sampled every quarter pixel along the polylines.
pub fn midline_hausdorff(skeleton: &BinaryImage, midline: &[Vec<Point>]) -> f64 {
    let pts: Vec<Point> = skeleton.pixels().map(Pixel::to_point).collect();
    if pts.is_empty() || midline.iter().all(|l| l.is_empty()) {
        return f64::INFINITY;
    }
    let to_line = pts
        .iter()
        .map(|&p| {
            midline
                .iter()
                .map(|l| point_polyline_distance(p, l))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let mut to_skel: f64 = 0.0;
    for line in midline {
        let samples: Vec<Point> = match line.as_slice() {
            [only] => vec![*only],
            _ => line
                .windows(2)
                .flat_map(|w| {
                    let n = (w[0].distance(w[1]) * 4.0).ceil().max(1.0) as usize;
                    (0..=n).map(move |k| {
                        let t = k as f64 / n as f64;
                        Point::new(w[0].x + t * (w[1].x - w[0].x), w[0].y + t * (w[1].y - w[0].y))
                    })
                })
                .collect(),
        };
        for s in samples {
            let d = pts.iter().map(|p| p.distance(s)).fold(f64::INFINITY, f64::min);
            to_skel = to_skel.max(d);
        }
    }
    to_line.max(to_skel)
}

/// Largest distance from a stroke extremity to its nearest skeleton leaf.
pub fn extremity_gap(skeleton: &BinaryImage, extremities: &[Point]) -> Option<f64> {
    let leaves = leaf_pixels(skeleton);
    if extremities.is_empty() {
        return None;
    }
    Some(
        extremities
            .iter()
            .map(|e| {
                leaves
                    .iter()
                    .map(|l| l.to_point().distance(*e))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max),
    )
}

pub fn compute_metrics(
    original: &BinaryImage,
    skeleton: &BinaryImage,
    expected_leaves: Option<usize>,
    midline_oracle: Option<&[Vec<Point>]>,
) -> Result<ThinMetrics> {
    if original.dims() != skeleton.dims() {
        return Err(Error::DimensionMismatch(original.dims(), skeleton.dims()));
    }
    let leaf_count = leaf_pixels(skeleton).len();
    Ok(ThinMetrics {
        component_count_delta: component_count(skeleton) as i64 - component_count(original) as i64,
        hole_count_delta: hole_count(skeleton) as i64 - hole_count(original) as i64,
        max_width_violations: block_count(skeleton),
        leaf_count,
        spurious_branch_count: expected_leaves.map(|e| leaf_count.saturating_sub(e)),
        midline_hausdorff: midline_oracle.map(|m| midline_hausdorff(skeleton, m)),
        containment_violations: skeleton.pixels().filter(|&p| !original.get(p)).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    ZhangSuen,
}

impl Method {
    pub fn thin(self, img: &BinaryImage, cfg: &PipelineConfig) -> Result<BinaryImage> {
        match self {
            Method::Proposed => Ok(thin_binary(img, cfg)?.skeleton),
            Method::ZhangSuen => Ok(zhang_suen_thin(img)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::ZhangSuen => "zhang_suen",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "zhang_suen" | "zhang-suen" | "zs" => Ok(Method::ZhangSuen),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub input: String,
    pub method: Method,
    #[serde(flatten)]
    pub metrics: ThinMetrics,
    pub extremity_gap: Option<f64>,
}

/// One metrics row per method for a single input.
pub fn compare_run(
    input: &str,
    img: &BinaryImage,
    truth: Option<&GroundTruth>,
    methods: &[Method],
    cfg: &PipelineConfig,
) -> Result<Vec<ReportRow>> {
    let midline = truth.map(GroundTruth::midline_points);
    let extremities: Vec<Point> = truth
        .map(|t| t.extremities.iter().map(|&[x, y]| Point::new(x, y)).collect())
        .unwrap_or_default();
    methods
        .iter()
        .map(|&method| {
            let skeleton = method.thin(img, cfg)?;
            let metrics = compute_metrics(img, &skeleton, truth.map(|t| t.expected_leaves), midline.as_deref())?;
            Ok(ReportRow {
                input: input.to_string(),
                method,
                metrics,
                extremity_gap: extremity_gap(&skeleton, &extremities),
            })
        })
        .collect()
}
