//! CSV and manifest files for scan results.
//!
//! Reals are written with 17 significant digits so that reading them back
//! reproduces every bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{MinimalSetResult, Quality, ScanConfig, ScanResult};
use crate::error::{Error, Result};
use crate::steering::{Criterion, CriterionConfig};

pub const GRID_FILE: &str = "grid.csv";
pub const CONTOUR_FILE: &str = "contours.csv";
pub const MINIMAL_SET_FILE: &str = "minimal_set.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const NA: &str = "NA";

pub const GRID_HEADER: [&str; 13] = [
    "gamma",
    "mu",
    "alpha",
    "criterion",
    "n",
    "nprime",
    "lhs",
    "rhs",
    "margin",
    "steerable",
    "entangled",
    "trace_deficit",
    "quality_flag",
];

pub const CONTOUR_HEADER: [&str; 6] = ["criterion", "n", "nprime", "segment_id", "gamma", "mu"];

pub const MINIMAL_SET_HEADER: [&str; 14] = [
    "gamma",
    "mu",
    "alpha",
    "nprime",
    "nmax",
    "lhs",
    "rhs",
    "margin",
    "steerable",
    "entangled",
    "minimal_m",
    "detecting_m",
    "trace_deficit",
    "quality_flag",
];

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| NA.to_string(), |v| v.to_string())
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config: ScanConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_prime: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_max: Option<usize>,
    pub cells: usize,
    pub flagged_cells: usize,
    pub errors: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    fn new(kind: &str, config: &ScanConfig) -> Self {
        Manifest {
            tool: "steerscan".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            kind: kind.into(),
            config: config.clone(),
            n_prime: None,
            n_max: None,
            cells: 0,
            flagged_cells: 0,
            errors: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(FileEntry {
        name: name.into(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    })
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// One line of the grid CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub gamma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub config: CriterionConfig,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub steerable: bool,
    pub entangled: bool,
    pub trace_deficit: Option<f64>,
    pub quality: Quality,
}

impl GridRow {
    fn record(&self) -> Vec<String> {
        vec![
            format_real(self.gamma),
            format_real(self.mu),
            format_real(self.alpha),
            self.config.criterion.name().into(),
            self.config.n.to_string(),
            self.config.n_prime.to_string(),
            format_real(self.lhs),
            format_real(self.rhs),
            format_real(self.margin),
            flag(self.steerable).into(),
            flag(self.entangled).into(),
            format_opt(self.trace_deficit.map(format_real)),
            self.quality.as_str().into(),
        ]
    }
}

/// Grid rows in cell order, criteria in configured order within a cell.
/// Failed cells get NaN values.
pub fn grid_rows(result: &ScanResult) -> Vec<GridRow> {
    let alpha = result.config.alpha;
    let mut rows = Vec::with_capacity(result.cells.len() * result.config.criteria.len());
    for cell in &result.cells {
        for (k, &config) in result.config.criteria.iter().enumerate() {
            let v = cell.verdicts.get(k);
            rows.push(GridRow {
                gamma: cell.gamma,
                mu: cell.mu,
                alpha,
                config,
                lhs: v.map_or(f64::NAN, |v| v.lhs),
                rhs: v.map_or(f64::NAN, |v| v.rhs),
                margin: v.map_or(f64::NAN, |v| v.margin),
                steerable: v.is_some_and(|v| v.steerable),
                entangled: cell.entangled,
                trace_deficit: cell.trace_deficit,
                quality: cell.quality,
            });
        }
    }
    rows
}

/// Writes the grid and contour CSVs plus the manifest into `dir`.
pub fn write_outputs(result: &ScanResult, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::new("scan", &result.config);
    manifest.cells = result.cells.len();
    manifest.flagged_cells = result.flagged();
    manifest.errors = result.errors();
    if !result.config.criteria.is_empty() {
        let grid = csv_bytes(&GRID_HEADER, grid_rows(result).iter().map(GridRow::record))?;
        manifest.files.push(write_file(dir, GRID_FILE, &grid)?);

        let mut rows = Vec::new();
        for contour in &result.contours {
            for (id, line) in contour.polylines.iter().enumerate() {
                for &(g, m) in &line.points {
                    rows.push(vec![
                        contour.config.criterion.name().to_string(),
                        contour.config.n.to_string(),
                        contour.config.n_prime.to_string(),
                        id.to_string(),
                        format_real(g),
                        format_real(m),
                    ]);
                }
            }
        }
        let contours = csv_bytes(&CONTOUR_HEADER, rows)?;
        manifest.files.push(write_file(dir, CONTOUR_FILE, &contours)?);
    }
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn write_minimal_set(result: &MinimalSetResult, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::new("minimal-set", &result.config);
    manifest.n_prime = Some(result.n_prime);
    manifest.n_max = Some(result.n_max);
    manifest.cells = result.cells.len();
    manifest.flagged_cells = result.cells.iter().filter(|c| c.quality != Quality::Ok).count();
    manifest.errors = result
        .cells
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| format!("({}, {}): {e}", c.gamma, c.mu)))
        .collect();
    let rows = result.cells.iter().map(|c| {
        let v = c.verdict.as_ref();
        vec![
            format_real(c.gamma),
            format_real(c.mu),
            format_real(result.config.alpha),
            result.n_prime.to_string(),
            result.n_max.to_string(),
            format_real(v.map_or(f64::NAN, |v| v.lhs)),
            format_real(v.map_or(f64::NAN, |v| v.rhs)),
            format_real(v.map_or(f64::NAN, |v| v.margin)),
            flag(v.is_some_and(|v| v.steerable)).into(),
            flag(c.entangled).into(),
            format_opt(c.minimal_order),
            format_opt(c.detecting_order),
            format_real(c.trace_deficit),
            c.quality.as_str().into(),
        ]
    });
    let bytes = csv_bytes(&MINIMAL_SET_HEADER, rows)?;
    manifest.files.push(write_file(dir, MINIMAL_SET_FILE, &bytes)?);
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

fn parse_real(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("bad number `{s}`")))
}

fn parse_flag(s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::Config(format!("bad flag `{s}`"))),
    }
}

pub fn read_grid_csv(path: &Path) -> Result<Vec<GridRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if header.iter().ne(GRID_HEADER) {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let criterion: Criterion = r[3].parse()?;
        let usize_field = |s: &str| s.parse::<usize>().map_err(|_| Error::Config(format!("bad order `{s}`")));
        rows.push(GridRow {
            gamma: parse_real(&r[0])?,
            mu: parse_real(&r[1])?,
            alpha: parse_real(&r[2])?,
            config: CriterionConfig {
                criterion,
                n: usize_field(&r[4])?,
                n_prime: usize_field(&r[5])?,
            },
            lhs: parse_real(&r[6])?,
            rhs: parse_real(&r[7])?,
            margin: parse_real(&r[8])?,
            steerable: parse_flag(&r[9])?,
            entangled: parse_flag(&r[10])?,
            trace_deficit: if &r[11] == NA { None } else { Some(parse_real(&r[11])?) },
            quality: Quality::parse(&r[12]).ok_or_else(|| Error::Config(format!("bad quality flag `{}`", &r[12])))?,
        });
    }
    Ok(rows)
}
