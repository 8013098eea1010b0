//! Subcommand implementations for the `glyphskel` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use glyphskel_core::bench::compare_run;
use glyphskel_core::io::{encode_pgm, read_gray, stage_files};
use glyphskel_core::raster::otsu_binarize;
use glyphskel_core::{synthesize, GroundTruth, Method, PenWidth, PipelineConfig, Polarity, ReportRow};

/// Pipeline thresholds shared by `thin` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Pen width in pixels, or `auto` for a quarter of each component's height.
    #[arg(long, default_value = "12", value_parser = parse_pen_width)]
    pub pen_width: PenWidth,
    /// Direction change (radians) that opens a new contour stroke.
    #[arg(long, default_value_t = 0.7)]
    pub theta_threshold: f64,
    /// Minimum run of steps for a trend group.
    #[arg(long, default_value_t = 5)]
    pub n_threshold: usize,
    /// Largest orientation difference (radians) for paired strokes.
    #[arg(long, default_value_t = 0.45)]
    pub angle_tol: f64,
    /// Endpoint grouping radius in pixels; defaults to the pen width.
    #[arg(long)]
    pub proximity_radius: Option<f64>,
    /// Treat light pixels as ink.
    #[arg(long)]
    pub invert: bool,
    /// Cut touching characters at deep vertical-profile minima.
    #[arg(long)]
    pub split_words: bool,
}

impl Default for ConfigArgs {
    fn default() -> Self {
        Self::from(&PipelineConfig::default())
    }
}

impl From<&PipelineConfig> for ConfigArgs {
    fn from(c: &PipelineConfig) -> Self {
        Self {
            pen_width: c.pen_width,
            theta_threshold: c.theta_threshold,
            n_threshold: c.n_threshold,
            angle_tol: c.angle_tol,
            proximity_radius: c.proximity_radius,
            invert: c.polarity == Polarity::LightInk,
            split_words: c.split_words,
        }
    }
}

impl ConfigArgs {
    pub fn to_config(&self) -> PipelineConfig {
        PipelineConfig {
            pen_width: self.pen_width,
            theta_threshold: self.theta_threshold,
            n_threshold: self.n_threshold,
            angle_tol: self.angle_tol,
            proximity_radius: self.proximity_radius,
            polarity: if self.invert {
                Polarity::LightInk
            } else {
                Polarity::DarkInk
            },
            split_words: self.split_words,
            ..PipelineConfig::default()
        }
    }
}

pub fn parse_pen_width(s: &str) -> std::result::Result<PenWidth, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(PenWidth::Auto);
    }
    match s.parse::<f64>() {
        Ok(w) if w > 0.0 => Ok(PenWidth::Fixed(w)),
        _ => Err(format!("expected a positive number or `auto`, got `{s}`")),
    }
}

/// What a successful `thin` run produced.
#[derive(Debug, Clone)]
pub struct ThinOutcome {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Effective pen width of each component.
    pub pen_widths: Vec<f64>,
}

/// Thins one image and writes every stage file into `out_dir`. Nothing is
/// written unless the input decodes and the pipeline succeeds.
pub fn cmd_thin(input: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<ThinOutcome> {
    let gray = read_gray(input).with_context(|| format!("reading {}", input.display()))?;
    let result = glyphskel_core::thin(&gray, cfg)?;
    let files = stage_files(&result)?;
    let mut warnings = Vec::new();
    if result.binary.is_empty() {
        warnings.push(format!(
            "{}: no foreground pixels, stage outputs are empty",
            input.display()
        ));
    }
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(ThinOutcome {
        written,
        warnings,
        pen_widths: result.components.iter().map(|c| c.pen_width).collect(),
    })
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
}

/// Image files in `dir`, sorted by name.
pub fn corpus_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut images = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading corpus {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && is_image(&path) {
            images.push(path);
        }
    }
    images.sort();
    Ok(images)
}

/// Optional ground truth stored next to an image as `<stem>.json`.
pub fn read_sidecar(image: &Path) -> Result<Option<GroundTruth>> {
    let path = image.with_extension("json");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let truth = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Some(truth))
}

const COLUMNS: [&str; 10] = [
    "input",
    "method",
    "component_count_delta",
    "hole_count_delta",
    "max_width_violations",
    "leaf_count",
    "spurious_branch_count",
    "midline_hausdorff",
    "containment_violations",
    "extremity_gap",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn fixed(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

fn cells(r: &ReportRow) -> [String; 10] {
    let m = &r.metrics;
    [
        r.input.clone(),
        r.method.to_string(),
        m.component_count_delta.to_string(),
        m.hole_count_delta.to_string(),
        m.max_width_violations.to_string(),
        m.leaf_count.to_string(),
        opt(m.spurious_branch_count),
        fixed(m.midline_hausdorff),
        m.containment_violations.to_string(),
        fixed(r.extremity_gap),
    ]
}

pub fn report_csv(rows: &[ReportRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(cells(r))?;
    }
    Ok(w.into_inner()?)
}

pub fn report_markdown(rows: &[ReportRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", COLUMNS.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(COLUMNS.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", cells(r).join(" | "));
    }
    s
}

/// Runs every method on every image in `dir` and writes `report.csv` and
/// `report.md` into `out_dir`.
pub fn cmd_compare(dir: &Path, methods: &[Method], cfg: &PipelineConfig, out_dir: &Path) -> Result<Vec<ReportRow>> {
    let images = corpus_images(dir)?;
    if images.is_empty() {
        bail!("no PGM or PNG images in {}", dir.display());
    }
    if methods.is_empty() {
        bail!("no methods selected");
    }
    let mut rows = Vec::new();
    for path in &images {
        let truth = read_sidecar(path)?;
        let gray = read_gray(path).with_context(|| format!("reading {}", path.display()))?;
        let binary = otsu_binarize(&gray, cfg.polarity);
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        rows.extend(compare_run(&name, &binary, truth.as_ref(), methods, cfg)?);
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.csv"), report_csv(&rows)?)?;
    fs::write(out_dir.join("report.md"), report_markdown(&rows))?;
    Ok(rows)
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(|m| m.parse::<Method>().map_err(Into::into))
        .collect()
}

/// Writes a synthetic shape as PGM plus its ground truth as `<stem>.json`.
pub fn cmd_synth(shape: &str, params: &[f64], out: &Path) -> Result<PathBuf> {
    let s = synthesize(shape, params)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let sidecar = out.with_extension("json");
    let pgm = encode_pgm(&s.image.to_gray())?;
    let json = serde_json::to_vec_pretty(&s.truth)?;
    fs::write(out, pgm).with_context(|| format!("writing {}", out.display()))?;
    fs::write(&sidecar, json).with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(sidecar)
}
