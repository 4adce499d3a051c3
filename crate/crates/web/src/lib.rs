//! Browser bindings. Every export returns a JSON string; the plain `*_json`
//! functions carry the logic so they can be tested on the host.

use serde::Serialize;
use steerscan::gaussian::{
    gaussian_boundary, gaussian_steerable, is_entangled, output_cm, ppt_eigenvalue, purity, sym_to_standard,
    threshold_variance, SymParams,
};
use steerscan::scan::{run_scan, Polyline, ScanConfig};
use steerscan::steering::CriterionConfig;
use wasm_bindgen::prelude::*;

/// Fock maps run on the main thread, so keep them small.
pub const MAX_FOCK_GRID: usize = 15;
pub const MAX_FOCK_CUTOFF: usize = 14;
pub const MAX_GAUSSIAN_GRID: usize = 201;

#[derive(Serialize)]
struct MapView {
    alpha: f64,
    criterion: String,
    gammas: Vec<f64>,
    mus: Vec<f64>,
    /// margins[i][j] at (gammas[i], mus[j]); null where the cell failed.
    margins: Vec<Vec<Option<f64>>>,
    entangled: Vec<Vec<bool>>,
    flagged: usize,
    contours: Vec<Polyline>,
}

#[derive(Serialize)]
struct StateView {
    gamma: f64,
    mu: f64,
    alpha: f64,
    cm: [[f64; 4]; 4],
    standard_form: [f64; 4],
    purity: f64,
    entangled: bool,
    ppt_eigenvalue: f64,
    gaussian_steerable: bool,
    gaussian_margin: f64,
    threshold_variance: f64,
    boundary_gamma: Option<f64>,
}

fn map_json(config: ScanConfig) -> Result<String, String> {
    let result = run_scan(&config).map_err(|e| e.to_string())?;
    let (gammas, mus) = (config.gammas(), config.mus());
    let at = |i: usize, j: usize| result.cell(i, j);
    let view = MapView {
        alpha: config.alpha,
        criterion: config.criteria[0].to_string(),
        margins: (0..gammas.len())
            .map(|i| (0..mus.len()).map(|j| at(i, j).verdicts.first().map(|v| v.margin)).collect())
            .collect(),
        entangled: (0..gammas.len()).map(|i| (0..mus.len()).map(|j| at(i, j).entangled).collect()).collect(),
        flagged: result.flagged(),
        contours: result.contours[0].polylines.clone(),
        gammas,
        mus,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub fn gaussian_map_json(alpha: f64, grid: usize) -> Result<String, String> {
    map_json(ScanConfig {
        alpha,
        gamma_range: (0.05, 1.0),
        mu_range: (0.05, 1.0),
        grid: grid.min(MAX_GAUSSIAN_GRID),
        criteria: vec![CriterionConfig::gaussian()],
        ..ScanConfig::default()
    })
}

pub fn steering_map_json(alpha: f64, criterion: &str, grid: usize, cutoff: usize) -> Result<String, String> {
    let criteria = CriterionConfig::parse_list(criterion).map_err(|e| e.to_string())?;
    if criteria.len() != 1 {
        return Err("give exactly one criterion".into());
    }
    map_json(ScanConfig {
        alpha,
        grid: grid.min(MAX_FOCK_GRID),
        cutoff: cutoff.min(MAX_FOCK_CUTOFF),
        criteria,
        ..ScanConfig::default()
    })
}

pub fn state_json(gamma: f64, mu: f64, alpha: f64) -> Result<String, String> {
    let p = SymParams::new(gamma, mu, alpha).map_err(|e| e.to_string())?;
    let cm = output_cm(p).map_err(|e| e.to_string())?;
    let sf = sym_to_standard(p).map_err(|e| e.to_string())?;
    let g = gaussian_steerable(&cm);
    let view = StateView {
        gamma,
        mu,
        alpha,
        cm: std::array::from_fn(|i| std::array::from_fn(|j| cm.get(i, j))),
        standard_form: [sf.p, sf.m, sf.n, sf.u],
        purity: purity(&cm),
        entangled: is_entangled(p),
        ppt_eigenvalue: ppt_eigenvalue(&cm).map_err(|e| e.to_string())?,
        gaussian_steerable: g.steerable,
        gaussian_margin: g.margin,
        threshold_variance: threshold_variance(alpha).map_err(|e| e.to_string())?,
        boundary_gamma: gaussian_boundary(alpha, mu).ok(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn gaussian_map(alpha: f64, grid: usize) -> Result<String, JsError> {
    js(gaussian_map_json(alpha, grid))
}

#[wasm_bindgen]
pub fn steering_map(alpha: f64, criterion: &str, grid: usize, cutoff: usize) -> Result<String, JsError> {
    js(steering_map_json(alpha, criterion, grid, cutoff))
}

#[wasm_bindgen]
pub fn state_summary(gamma: f64, mu: f64, alpha: f64) -> Result<String, JsError> {
    js(state_json(gamma, mu, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn gaussian_map_shape() {
        let v: Value = serde_json::from_str(&gaussian_map_json(1.0, 11).unwrap()).unwrap();
        assert_eq!(v["gammas"].as_array().unwrap().len(), 11);
        assert_eq!(v["margins"][0].as_array().unwrap().len(), 11);
        assert!(!v["contours"].as_array().unwrap().is_empty());
        assert_eq!(v["criterion"], "gaussian");
    }

    #[test]
    fn state_matches_core() {
        let v: Value = serde_json::from_str(&state_json(0.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(v["gaussian_steerable"], true);
        assert!((v["gaussian_margin"].as_f64().unwrap() - 0.5625).abs() < 1e-12);
        assert!((v["purity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert!(state_json(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn steering_map_is_clamped() {
        let v: Value = serde_json::from_str(&steering_map_json(0.0, "linear:2:2", 99, 99).unwrap()).unwrap();
        assert_eq!(v["gammas"].as_array().unwrap().len(), MAX_FOCK_GRID);
        assert_eq!(v["criterion"], "linear:2:2");
        assert!(steering_map_json(0.0, "linear,gaussian", 3, 6).is_err());
        assert!(steering_map_json(0.0, "nonsense", 3, 6).is_err());
    }
}
