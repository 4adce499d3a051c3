//! Sweeps of the `(gamma, mu)` plane at fixed `alpha`.

pub mod contour;
pub mod output;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_state, DEFAULT_CUTOFF, DEFAULT_DEFICIT_LIMIT, DEFAULT_PAD};
use crate::gaussian::{is_entangled, output_cm, SymParams};
use crate::steering::{evaluate_all, Criterion, CriterionConfig, SteeringContext, SteeringVerdict};

pub use contour::{extract_contour, Field, Point, Polyline};
pub use output::{read_grid_csv, write_minimal_set, write_outputs, FileEntry, GridRow, Manifest};

pub const DEFAULT_GRID: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub alpha: f64,
    pub gamma_range: (f64, f64),
    pub mu_range: (f64, f64),
    pub grid: usize,
    pub cutoff: usize,
    pub pad: usize,
    pub deficit_limit: f64,
    pub criteria: Vec<CriterionConfig>,
    /// Worker threads; 0 lets the pool decide. Never part of the output.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            alpha: 1.0,
            gamma_range: (0.2, 1.0),
            mu_range: (0.2, 1.0),
            grid: DEFAULT_GRID,
            cutoff: DEFAULT_CUTOFF,
            pad: DEFAULT_PAD,
            deficit_limit: DEFAULT_DEFICIT_LIMIT,
            criteria: vec![CriterionConfig::gaussian()],
            workers: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(Error::Domain {
                name: "alpha",
                value: self.alpha,
                range: "[0, 1]",
            });
        }
        for (name, (lo, hi)) in [("gamma", self.gamma_range), ("mu", self.mu_range)] {
            if !(lo > 0.0 && hi <= 1.0 && lo <= hi) {
                return Err(Error::Config(format!("{name} range [{lo}, {hi}] must lie within (0, 1]")));
            }
        }
        if self.grid < 2 {
            return Err(Error::Config(format!("grid must be at least 2, got {}", self.grid)));
        }
        if self.cutoff < 1 {
            return Err(Error::Config("cutoff must be at least 1".into()));
        }
        for c in &self.criteria {
            if c.n.max(c.n_prime) > self.cutoff + 1 {
                return Err(Error::OrderTooLarge {
                    order: c.n.max(c.n_prime),
                    cutoff: self.cutoff,
                });
            }
        }
        Ok(())
    }

    pub fn gammas(&self) -> Vec<f64> {
        axis(self.gamma_range, self.grid)
    }

    pub fn mus(&self) -> Vec<f64> {
        axis(self.mu_range, self.grid)
    }

    fn needs_fock(&self) -> bool {
        self.criteria.iter().any(|c| c.criterion != Criterion::Gaussian)
    }
}

fn axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Ok,
    /// Fock truncation lost more weight than the configured limit.
    Truncation,
    Error,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Ok => "ok",
            Quality::Truncation => "truncation",
            Quality::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(Quality::Ok),
            "truncation" => Some(Quality::Truncation),
            "error" => Some(Quality::Error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub gamma: f64,
    pub mu: f64,
    pub entangled: bool,
    /// Absent when no Fock state was built.
    pub trace_deficit: Option<f64>,
    pub quality: Quality,
    /// One per configured criterion, in order; empty on error.
    pub verdicts: Vec<SteeringVerdict>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub config: CriterionConfig,
    pub polylines: Vec<Polyline>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub config: ScanConfig,
    /// Row-major in `(gamma index, mu index)`.
    pub cells: Vec<Cell>,
    pub contours: Vec<Contour>,
}

impl ScanResult {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.config.grid + j]
    }

    /// Margins of criterion `k`, NaN where the cell failed.
    pub fn margins(&self, k: usize) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| c.verdicts.get(k).map_or(f64::NAN, |v| v.margin))
            .collect()
    }

    pub fn errors(&self) -> Vec<String> {
        self.cells
            .iter()
            .filter_map(|c| c.error.as_ref().map(|e| format!("({}, {}): {e}", c.gamma, c.mu)))
            .collect()
    }

    pub fn flagged(&self) -> usize {
        self.cells.iter().filter(|c| c.quality != Quality::Ok).count()
    }

    /// Contours of criterion `k` recomputed from the stored margins.
    pub fn extract(&self, k: usize) -> Vec<Polyline> {
        let (xs, ys) = (self.config.gammas(), self.config.mus());
        let values = self.margins(k);
        extract_contour(Field {
            xs: &xs,
            ys: &ys,
            values: &values,
        })
    }
}

/// Maps `f` over the grid points in row-major order, on `workers` threads
/// when the `parallel` feature is on.
fn map_grid<T, F>(points: &[(f64, f64)], workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64, f64) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(|| points.par_iter().map(|&(g, m)| f(g, m)).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(points.iter().map(|&(g, m)| f(g, m)).collect())
    }
}

fn grid_points(config: &ScanConfig) -> Vec<(f64, f64)> {
    let mus = config.mus();
    config
        .gammas()
        .into_iter()
        .flat_map(|g| mus.iter().map(move |&m| (g, m)))
        .collect()
}

fn quality_of(deficit: Option<f64>, limit: f64) -> Quality {
    match deficit {
        Some(d) if d > limit => Quality::Truncation,
        _ => Quality::Ok,
    }
}

fn evaluate_cell(config: &ScanConfig, gamma: f64, mu: f64) -> Cell {
    let failed = |error: String, trace_deficit| Cell {
        gamma,
        mu,
        entangled: gamma < mu,
        trace_deficit,
        quality: Quality::Error,
        verdicts: Vec::new(),
        error: Some(error),
    };
    let params = match SymParams::new(gamma, mu, config.alpha) {
        Ok(p) => p,
        Err(e) => return failed(e.to_string(), None),
    };
    let cm = match output_cm(params) {
        Ok(cm) => cm,
        Err(e) => return failed(e.to_string(), None),
    };
    let state = if config.needs_fock() {
        match build_state(params, config.cutoff, config.pad) {
            Ok(s) => s,
            Err(e) => return failed(e.to_string(), None),
        }
    } else {
        crate::fock::FockState::vacuum(0)
    };
    let trace_deficit = config.needs_fock().then_some(state.trace_deficit);
    match evaluate_all(&state, &cm, &config.criteria) {
        Ok(verdicts) => Cell {
            gamma,
            mu,
            entangled: is_entangled(params),
            trace_deficit,
            quality: quality_of(trace_deficit, config.deficit_limit),
            verdicts,
            error: None,
        },
        Err(e) => failed(e.to_string(), trace_deficit),
    }
}

/// Evaluates every grid cell. Failures are recorded per cell; the result
/// does not depend on the number of workers.
pub fn run_scan(config: &ScanConfig) -> Result<ScanResult> {
    config.validate()?;
    let cells = map_grid(&grid_points(config), config.workers, |g, m| evaluate_cell(config, g, m))?;
    let mut result = ScanResult {
        config: config.clone(),
        cells,
        contours: Vec::new(),
    };
    result.contours = (0..config.criteria.len())
        .map(|k| Contour {
            config: config.criteria[k],
            polylines: result.extract(k),
        })
        .collect();
    Ok(result)
}

/// Per-cell smallest Alice order for the linear-estimate test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalSetCell {
    pub gamma: f64,
    pub mu: f64,
    pub entangled: bool,
    pub trace_deficit: f64,
    pub quality: Quality,
    /// Linear-estimate verdict at the full order `n_max`.
    pub verdict: Option<SteeringVerdict>,
    /// Smallest order reproducing the full left-hand side; only reported
    /// where steering is detected.
    pub minimal_order: Option<usize>,
    /// Smallest order that still detects steering.
    pub detecting_order: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalSetResult {
    pub config: ScanConfig,
    pub n_prime: usize,
    pub n_max: usize,
    pub cells: Vec<MinimalSetCell>,
}

pub fn run_minimal_set(config: &ScanConfig, n_prime: usize, n_max: usize) -> Result<MinimalSetResult> {
    let mut config = config.clone();
    config.criteria = vec![CriterionConfig::new(Criterion::LinearEstimate, n_max, n_prime)?];
    config.validate()?;
    let cells = map_grid(&grid_points(&config), config.workers, |gamma, mu| {
        let run = || -> Result<MinimalSetCell> {
            let params = SymParams::new(gamma, mu, config.alpha)?;
            let state = build_state(params, config.cutoff, config.pad)?;
            let ctx = SteeringContext::new(&state, n_max, n_prime)?;
            let verdict = ctx.linear_estimate(n_max, n_prime)?;
            let (minimal_order, detecting_order) = if verdict.steerable {
                (
                    Some(ctx.minimal_alice_order(n_prime, n_max)?),
                    ctx.minimal_detecting_order(n_prime, n_max)?,
                )
            } else {
                (None, None)
            };
            Ok(MinimalSetCell {
                gamma,
                mu,
                entangled: is_entangled(params),
                trace_deficit: state.trace_deficit,
                quality: quality_of(Some(state.trace_deficit), config.deficit_limit),
                verdict: Some(verdict),
                minimal_order,
                detecting_order,
                error: None,
            })
        };
        run().unwrap_or_else(|e| MinimalSetCell {
            gamma,
            mu,
            entangled: gamma < mu,
            trace_deficit: f64::NAN,
            quality: Quality::Error,
            verdict: None,
            minimal_order: None,
            detecting_order: None,
            error: Some(e.to_string()),
        })
    })?;
    Ok(MinimalSetResult {
        config,
        n_prime,
        n_max,
        cells,
    })
}
