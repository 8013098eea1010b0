//! Image files and per-stage artifacts.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, Rgb, RgbImage};
use serde::Serialize;

use crate::contour::ContourKind;
use crate::error::{Error, Result};
use crate::extrapolation::{Provenance, SkeletonGraph};
use crate::geom::Point;
use crate::pipeline::ThinResult;
use crate::raster::{BinaryImage, GrayImage};

/// Decodes a PGM or PNG file (any format the decoder supports) to grey.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let decode = |reason: String| Error::Decode {
        path: path.to_path_buf(),
        reason,
    };
    let bytes = std::fs::read(path)?;
    let format = image::guess_format(&bytes).map_err(|e| decode(e.to_string()))?;
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| decode(e.to_string()))?;
    let luma = img.to_luma8();
    let (w, h) = luma.dimensions();
    GrayImage::new(w as usize, h as usize, luma.into_raw())
}

/// Binary (P5) PGM bytes.
pub fn encode_pgm(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            img.samples(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(out)
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(out.into_inner())
}

fn xy(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

#[derive(Serialize)]
struct ContourOut {
    component: usize,
    kind: ContourKind,
    points: Vec<[i32; 2]>,
}

#[derive(Serialize)]
struct StrokeOut {
    contour: usize,
    s: usize,
    e: usize,
}

#[derive(Serialize)]
struct SegmentOut {
    component: usize,
    points: Vec<[f64; 2]>,
    provenance: Provenance,
    strokes: [usize; 2],
}

#[derive(Serialize)]
struct NodeOut {
    id: usize,
    x: f64,
    y: f64,
    degree: usize,
}

#[derive(Serialize)]
struct EdgeOut {
    from: usize,
    to: usize,
    points: Vec<[f64; 2]>,
    provenance: Vec<Provenance>,
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    Ok(s)
}

/// `{"contours":[{"component","kind","points"}]}` with global contour order.
pub fn contour_json(r: &ThinResult) -> Result<Vec<u8>> {
    let contours: Vec<ContourOut> = r
        .components
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.contours.iter().map(move |k| ContourOut {
                component: ci,
                kind: k.kind,
                points: k.points.iter().map(|p| [p.x, p.y]).collect(),
            })
        })
        .collect();
    json(&serde_json::json!({ "contours": contours }))
}

/// `{"strokes":[{"contour","s","e"}]}`; `contour` indexes contour.json.
pub fn strokes_json(r: &ThinResult) -> Result<Vec<u8>> {
    let mut base = 0;
    let mut strokes = Vec::new();
    for c in &r.components {
        strokes.extend(c.strokes.iter().map(|s| StrokeOut {
            contour: base + s.contour,
            s: s.start,
            e: s.end,
        }));
        base += c.contours.len();
    }
    json(&serde_json::json!({ "strokes": strokes }))
}

/// `{"segments":[{"component","points","provenance","strokes"}]}`.
pub fn medial_json(r: &ThinResult) -> Result<Vec<u8>> {
    let mut base = 0;
    let mut segments = Vec::new();
    for (ci, c) in r.components.iter().enumerate() {
        segments.extend(c.segments.iter().map(|s| SegmentOut {
            component: ci,
            points: s.points.iter().copied().map(xy).collect(),
            provenance: Provenance::Medial,
            strokes: [base + s.source_strokes.0, base + s.source_strokes.1],
        }));
        base += c.strokes.len();
    }
    json(&serde_json::json!({ "segments": segments }))
}

/// `{"nodes":[{"id","x","y","degree"}],"edges":[{"from","to","points","provenance"}]}`.
pub fn skeleton_json(g: &SkeletonGraph) -> Result<Vec<u8>> {
    let nodes: Vec<NodeOut> = g
        .nodes
        .iter()
        .map(|n| NodeOut {
            id: n.id,
            x: n.x,
            y: n.y,
            degree: n.degree,
        })
        .collect();
    let edges: Vec<EdgeOut> = g
        .edges
        .iter()
        .map(|e| EdgeOut {
            from: e.from,
            to: e.to,
            points: e.points.iter().copied().map(xy).collect(),
            provenance: e.provenance.clone(),
        })
        .collect();
    json(&serde_json::json!({ "nodes": nodes, "edges": edges }))
}

/// SVG 1.1 document with one path per skeleton edge over the ink mask.
pub fn skeleton_svg(g: &SkeletonGraph, ink: &BinaryImage) -> Vec<u8> {
    let (w, h) = ink.dims();
    let mut s = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"-0.5 -0.5 {w} {h}\">\n"
    );
    s.push_str("<g fill=\"#d8d8d8\" stroke=\"none\">\n");
    for p in ink.pixels() {
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"1\" height=\"1\"/>\n",
            f64::from(p.x) - 0.5,
            f64::from(p.y) - 0.5
        ));
    }
    s.push_str("</g>\n<g fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n");
    for e in &g.edges {
        let d: Vec<String> = e
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}{} {}", if i == 0 { 'M' } else { 'L' }, p.x, p.y))
            .collect();
        s.push_str(&format!("<path d=\"{}\"/>\n", d.join(" ")));
    }
    s.push_str("</g>\n<g fill=\"#2c3e50\">\n");
    for n in &g.nodes {
        s.push_str(&format!("<circle cx=\"{}\" cy=\"{}\" r=\"1\"/>\n", n.x, n.y));
    }
    s.push_str("</g>\n</svg>\n");
    s.into_bytes()
}

const PALETTE: [[u8; 3]; 6] = [
    [214, 39, 40],
    [31, 119, 180],
    [44, 160, 44],
    [255, 127, 14],
    [148, 103, 189],
    [23, 190, 207],
];

fn backdrop(ink: &BinaryImage) -> RgbImage {
    let (w, h) = ink.dims();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        if ink.get(crate::geom::Pixel::new(x as i32, y as i32)) {
            Rgb([210, 210, 210])
        } else {
            Rgb([255, 255, 255])
        }
    })
}

fn paint(img: &mut RgbImage, p: crate::geom::Pixel, c: [u8; 3]) {
    if p.x >= 0 && p.y >= 0 && (p.x as u32) < img.width() && (p.y as u32) < img.height() {
        img.put_pixel(p.x as u32, p.y as u32, Rgb(c));
    }
}

/// Outer contours in red, holes in blue.
pub fn render_contours(r: &ThinResult) -> RgbImage {
    let mut img = backdrop(&r.binary);
    for c in r.components.iter().flat_map(|c| &c.contours) {
        let color = if c.kind == ContourKind::Outer {
            PALETTE[0]
        } else {
            PALETTE[1]
        };
        for &p in &c.points {
            paint(&mut img, p, color);
        }
    }
    img
}

/// Each contour stroke in its own colour, stroke ends in black.
pub fn render_strokes(r: &ThinResult) -> RgbImage {
    let mut img = backdrop(&r.binary);
    let mut k = 0;
    for c in &r.components {
        for s in &c.strokes {
            let contour = &c.contours[s.contour];
            for i in s.indices(contour.len()) {
                paint(&mut img, contour.points[i], PALETTE[k % PALETTE.len()]);
            }
            k += 1;
        }
        for s in &c.strokes {
            paint(&mut img, c.contours[s.contour].points[s.start], [0, 0, 0]);
        }
    }
    img
}

/// Medial segments, one colour per segment.
pub fn render_medial(r: &ThinResult) -> RgbImage {
    let mut img = backdrop(&r.binary);
    for (k, s) in r.components.iter().flat_map(|c| &c.segments).enumerate() {
        for p in &s.points {
            paint(&mut img, p.to_pixel(), PALETTE[k % PALETTE.len()]);
        }
    }
    img
}

/// Everything `thin` writes, keyed by file name, in write order.
pub fn stage_files(r: &ThinResult) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let graph = r.graph();
    Ok(vec![
        ("contour.json", contour_json(r)?),
        ("contour.png", encode_png(&render_contours(r))?),
        ("strokes.json", strokes_json(r)?),
        ("strokes.png", encode_png(&render_strokes(r))?),
        ("medial.json", medial_json(r)?),
        ("medial.png", encode_png(&render_medial(r))?),
        ("skeleton.json", skeleton_json(&graph)?),
        ("skeleton.svg", skeleton_svg(&graph, &r.binary)),
        ("skeleton.pgm", encode_pgm(&r.skeleton.to_gray())?),
    ])
}
