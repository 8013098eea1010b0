//! End-to-end thinning of an image, one connected component at a time.

use serde::Serialize;

use crate::contour::{trace_contours, Contour};
use crate::error::{Error, Result};
use crate::extrapolation::{
    assemble_skeleton, extrapolate, rasterize_skeleton, ExtrapolationConfig, ExtrapolationStats, SkeletonGraph,
};
use crate::geom::{Pixel, Point};
use crate::medial::{auto_pen_width, extract_medial_segments, MedialConfig, MedialSegment};
use crate::raster::{
    connected_components, otsu_binarize, split_by_vertical_profile, BinaryImage, Component, GrayImage, Polarity,
};
use crate::segmentation::{segment_contour, ContourStroke, SegConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PenWidth {
    Fixed(f64),
    /// A quarter of each component's bounding-box height.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub theta_threshold: f64,
    pub n_threshold: usize,
    pub angle_tol: f64,
    pub pen_width: PenWidth,
    /// Defaults to the effective pen width.
    pub proximity_radius: Option<f64>,
    pub min_ratio: f64,
    pub refine_window: usize,
    pub polarity: Polarity,
    /// Cut touching characters at deep vertical-profile minima.
    pub split_words: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            theta_threshold: 0.7,
            n_threshold: 5,
            angle_tol: 0.45,
            pen_width: PenWidth::Fixed(12.0),
            proximity_radius: None,
            min_ratio: 0.2,
            refine_window: 3,
            polarity: Polarity::DarkInk,
            split_words: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let pen_ok = match self.pen_width {
            PenWidth::Fixed(w) => w > 0.0,
            PenWidth::Auto => true,
        };
        let ok = pen_ok
            && self.theta_threshold > 0.0
            && self.n_threshold > 0
            && self.angle_tol > 0.0
            && self.proximity_radius.is_none_or(|r| r > 0.0)
            && self.min_ratio > 0.0
            && self.refine_window > 0;
        if ok {
            self.seg().validate()
        } else {
            Err(Error::Config("all numeric parameters must be positive".into()))
        }
    }

    fn seg(&self) -> SegConfig {
        SegConfig {
            theta_threshold: self.theta_threshold,
            n_threshold: self.n_threshold,
            refine_window: self.refine_window,
        }
    }

    /// Pen width in pixels for one component.
    pub fn effective_pen_width(&self, comp: &Component) -> f64 {
        match self.pen_width {
            PenWidth::Fixed(w) => w,
            PenWidth::Auto => auto_pen_width(comp.bbox.height()),
        }
    }
}

/// Stage outputs for one component, in image coordinates.
#[derive(Debug, Clone)]
pub struct ComponentResult {
    pub contours: Vec<Contour>,
    pub strokes: Vec<ContourStroke>,
    pub segments: Vec<MedialSegment>,
    pub graph: SkeletonGraph,
    pub stats: ExtrapolationStats,
    pub pen_width: f64,
}

#[derive(Debug, Clone)]
pub struct ThinResult {
    pub binary: BinaryImage,
    pub components: Vec<ComponentResult>,
    pub skeleton: BinaryImage,
}

impl ThinResult {
    pub fn graph(&self) -> SkeletonGraph {
        let mut g = SkeletonGraph::default();
        for c in &self.components {
            let base = g.nodes.len();
            g.nodes.extend(c.graph.nodes.iter().cloned().map(|mut n| {
                n.id += base;
                n
            }));
            g.edges.extend(c.graph.edges.iter().cloned().map(|mut e| {
                e.from += base;
                e.to += base;
                e
            }));
        }
        g
    }
}

fn shift_pixel(p: Pixel, o: Pixel) -> Pixel {
    p.offset(o.x, o.y)
}

fn shift_point(p: Point, o: Pixel) -> Point {
    Point::new(p.x + f64::from(o.x), p.y + f64::from(o.y))
}

/// Thins one component. Work happens on a padded local mask; the returned
/// skeleton mask is in the same local frame, with its origin.
fn thin_component(comp: &Component, cfg: &PipelineConfig, pen_width: f64) -> (ComponentResult, BinaryImage, Pixel) {
    let (mask, origin) = comp.to_mask(1);
    let local = Component::new(
        comp.label,
        comp.pixels.iter().map(|p| p.offset(-origin.x, -origin.y)).collect(),
    )
    .expect("component is nonempty");
    let contours = trace_contours(&local);
    let seg = cfg.seg();
    let strokes: Vec<ContourStroke> = contours
        .iter()
        .enumerate()
        .flat_map(|(i, c)| segment_contour(c, i, &seg))
        .collect();
    let mcfg = MedialConfig {
        angle_tol: cfg.angle_tol,
        pen_width,
        ..MedialConfig::default()
    };
    let segments = extract_medial_segments(&contours, &strokes, &mask, &mcfg);
    let xcfg = ExtrapolationConfig {
        proximity_radius: cfg.proximity_radius.unwrap_or(pen_width),
        collinear_tol: cfg.angle_tol,
    };
    let (polys, stats) = extrapolate(&segments, &mask, xcfg);
    let mut graph = assemble_skeleton(&polys);
    let skeleton = rasterize_skeleton(&graph, &mask);

    let contours = contours
        .into_iter()
        .map(|c| Contour {
            kind: c.kind,
            points: c.points.into_iter().map(|p| shift_pixel(p, origin)).collect(),
        })
        .collect();
    let segments = segments
        .into_iter()
        .map(|mut s| {
            for p in &mut s.points {
                *p = shift_point(*p, origin);
            }
            s
        })
        .collect();
    graph.translate(f64::from(origin.x), f64::from(origin.y));
    (
        ComponentResult {
            contours,
            strokes,
            segments,
            graph,
            stats,
            pen_width,
        },
        skeleton,
        origin,
    )
}

/// Thins a binary image.
pub fn thin_binary(binary: &BinaryImage, cfg: &PipelineConfig) -> Result<ThinResult> {
    cfg.validate()?;
    let mut comps = connected_components(binary);
    if cfg.split_words {
        comps = comps
            .iter()
            .flat_map(|c| split_by_vertical_profile(c, cfg.min_ratio))
            .collect();
    }
    let (w, h) = binary.dims();
    let mut skeleton = BinaryImage::new(w, h);
    let mut components = Vec::with_capacity(comps.len());
    for comp in &comps {
        let (res, local, origin) = thin_component(comp, cfg, cfg.effective_pen_width(comp));
        for p in local.pixels() {
            skeleton.set(shift_pixel(p, origin), true);
        }
        components.push(res);
    }
    Ok(ThinResult {
        binary: binary.clone(),
        components,
        skeleton,
    })
}

/// Binarizes a grey image with Otsu's threshold and thins it.
pub fn thin(img: &GrayImage, cfg: &PipelineConfig) -> Result<ThinResult> {
    thin_binary(&otsu_binarize(img, cfg.polarity), cfg)
}
