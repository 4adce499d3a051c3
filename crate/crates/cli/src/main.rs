mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use steerscan::fock::{build_state, FockState, DEFAULT_CUTOFF, DEFAULT_DEFICIT_LIMIT, DEFAULT_PAD};
use steerscan::gaussian::{
    gaussian_boundary, gaussian_steerable, input_cm, is_entangled, output_cm, ppt_eigenvalue, purity,
    standard_form_input_cm, standard_to_sym, sym_to_standard, threshold_variance, CovarianceMatrix4, SymParams,
};
use steerscan::observables::{ji_set, JiKind};
use steerscan::scan::{run_minimal_set, run_scan, write_minimal_set, write_outputs, ScanConfig, DEFAULT_GRID};
use steerscan::steering::{evaluate_all, Criterion, CriterionConfig, SteeringVerdict, DEFAULT_ORDER};

use settings::Settings;

const EXIT_DETECTED: u8 = 0;
const EXIT_NOT_DETECTED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_QUALITY: u8 = 3;

const WORKERS_ENV: &str = "STEERSCAN_WORKERS";

#[derive(Parser)]
#[command(name = "steerscan", version, about = "Steering of symmetric two-mode Gaussian states")]
struct Cli {
    /// Flat key = value file; keys mirror the long flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covariance matrices, standard form and Gaussian verdicts of one state.
    State(StateArgs),
    /// Evaluate one steering criterion on one state.
    Steer(SteerArgs),
    /// Sweep the (gamma, mu) plane at fixed alpha.
    Scan(ScanArgs),
    /// Per-cell smallest Alice order for the linear-estimate test.
    MinimalSet(MinimalSetArgs),
}

#[derive(Args)]
struct Point {
    gamma: f64,
    mu: f64,
    alpha: f64,
}

#[derive(Args)]
struct StateArgs {
    #[command(flatten)]
    point: Point,
    /// Also print the standard-form input matrix and the inverse map.
    #[arg(long)]
    standard_form: bool,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    pad: Option<usize>,
    /// Build the Fock state and report truncation and its largest entries.
    #[arg(long)]
    fock_summary: bool,
    #[arg(long, default_value_t = 8)]
    top: usize,
}

#[derive(Args)]
struct SteerArgs {
    #[command(flatten)]
    point: Point,
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nprime: Option<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    pad: Option<usize>,
    #[arg(long)]
    deficit_limit: Option<f64>,
    /// Exit with 3 when the truncation deficit exceeds the limit.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    mu_min: Option<f64>,
    #[arg(long)]
    mu_max: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    pad: Option<usize>,
    #[arg(long)]
    deficit_limit: Option<f64>,
    /// Worker threads (0 = all cores). Defaults to $STEERSCAN_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with 3 when any cell is flagged.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated `name[:n[:nprime]]`, e.g. `gaussian,linear:4:3,min-var:3:3`.
    #[arg(long)]
    criteria: Option<String>,
}

#[derive(Args)]
struct MinimalSetArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    nprime: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut settings = match &cli.config {
        Some(path) => match Settings::from_file(path) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        },
        None => Settings::default(),
    };
    let result = match cli.command {
        Command::State(args) => cmd_state(args, &mut settings),
        Command::Steer(args) => cmd_steer(args, &mut settings),
        Command::Scan(args) => cmd_scan(args, &mut settings),
        Command::MinimalSet(args) => cmd_minimal_set(args, &mut settings),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(&e),
    }
}

fn fail(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn finish_settings(settings: &Settings) -> Result<(), String> {
    let unknown = settings.unknown_keys();
    if !unknown.is_empty() {
        return Err(format!("unknown config keys: {}", unknown.join(", ")));
    }
    print!("{}", settings.report());
    Ok(())
}

fn params(point: &Point) -> Result<SymParams, String> {
    SymParams::new(point.gamma, point.mu, point.alpha).map_err(|e| e.to_string())
}

fn record_point(settings: &mut Settings, point: &Point) -> Result<(), String> {
    settings.get("gamma", Some(point.gamma), None, point.gamma)?;
    settings.get("mu", Some(point.mu), None, point.mu)?;
    settings.get("alpha", Some(point.alpha), None, point.alpha)?;
    Ok(())
}

fn print_cm(title: &str, cm: &CovarianceMatrix4) {
    println!("{title}");
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:>12.6}", cm.get(i, j))).collect();
        println!("  {}", row.join(" "));
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_state(args: StateArgs, settings: &mut Settings) -> Result<u8, String> {
    record_point(settings, &args.point)?;
    let cutoff = settings.get("cutoff", args.cutoff, None, DEFAULT_CUTOFF)?;
    let pad = settings.get("pad", args.pad, None, DEFAULT_PAD)?;
    finish_settings(settings)?;
    let p = params(&args.point)?;

    let vin = input_cm(p).map_err(|e| e.to_string())?;
    let vout = output_cm(p).map_err(|e| e.to_string())?;
    print_cm("input covariance matrix", &vin);
    print_cm("output covariance matrix", &vout);
    let sf = sym_to_standard(p).map_err(|e| e.to_string())?;
    println!("standard form      p = {:.9}  m = {:.9}  n = {:.9}  u = {:.9}", sf.p, sf.m, sf.n, sf.u);
    if args.standard_form {
        let canon = sf.canonical();
        let vsf = standard_form_input_cm(&canon).map_err(|e| e.to_string())?;
        print_cm("standard-form input matrix (canonical ordering)", &vsf);
        let back = standard_to_sym(&canon).map_err(|e| e.to_string())?;
        println!(
            "inverse map        gamma = {:.9}  mu = {:.9}  alpha = {:.9}  u = {:.9}{}",
            back.params.gamma,
            back.params.mu,
            back.params.alpha,
            back.u,
            if back.degenerate { "  (alpha not determined: pure state)" } else { "" }
        );
    }
    println!("purity             {:.9}", purity(&vout));
    let ppt = ppt_eigenvalue(&vout).map_err(|e| e.to_string())?;
    println!("entangled          {} (gamma < mu); PPT symplectic eigenvalue {:.9}", yes_no(is_entangled(p)), ppt);
    let g = gaussian_steerable(&vout);
    println!("gaussian steering  {} (det A - det V = {:.6e})", yes_no(g.steerable), g.margin);
    let vth = threshold_variance(p.alpha).map_err(|e| e.to_string())?;
    println!("threshold variance {:.9}", vth);
    match gaussian_boundary(p.alpha, p.mu) {
        Ok(b) => println!("gaussian boundary  gamma = {:.9} at this mu", b),
        Err(e) => println!("gaussian boundary  none ({e})"),
    }

    if args.fock_summary {
        let st = build_state(p, cutoff, pad).map_err(|e| e.to_string())?;
        println!("fock cutoff        {cutoff} (pad {pad})");
        println!("trace deficit      {:.6e}", st.trace_deficit);
        if st.truncation_warning(DEFAULT_DEFICIT_LIMIT) {
            println!("warning: truncation deficit above {DEFAULT_DEFICIT_LIMIT:e}");
        }
        println!("largest |rho| entries (n_A n_B | m_A m_B):");
        for (na, nb, ma, mb, v) in largest_entries(&st, args.top) {
            println!("  {na:>2} {nb:>2} | {ma:>2} {mb:>2}  {:>+.9e} {:>+.3e}i", v.re, v.im);
        }
    }
    Ok(EXIT_DETECTED)
}

fn largest_entries(st: &FockState, top: usize) -> Vec<(usize, usize, usize, usize, Complex64)> {
    let d = st.mode_dim();
    let mut entries: Vec<(usize, usize, Complex64)> = (0..d * d)
        .flat_map(|r| (0..d * d).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, st.rho[(r, c)]))
        .collect();
    // Stable sort keeps row-major order among equal magnitudes.
    entries.sort_by(|a, b| b.2.norm().total_cmp(&a.2.norm()));
    entries
        .into_iter()
        .take(top)
        .map(|(r, c, v)| (r / d, r % d, c / d, c % d, v))
        .collect()
}

fn operator_label(kind: JiKind) -> String {
    match kind {
        JiKind::Diagonal(k) => format!("L{k}"),
        JiKind::Symmetric(k, l) => format!("L{k}{l}+"),
        JiKind::Antisymmetric(k, l) => format!("L{k}{l}-"),
    }
}

fn print_verdict(v: &SteeringVerdict, cutoff: usize) {
    println!("criterion          {}", v.config());
    println!("lhs                {:.12e}", v.lhs);
    println!("rhs                {:.12e}", v.rhs);
    println!("margin             {:+.12e}", v.margin);
    println!("steering detected  {}", yes_no(v.steerable));
    if !v.chosen_alice_indices.is_empty() {
        if let (Ok(alice), Ok(bob)) = (ji_set(v.n, cutoff), ji_set(v.n_prime, cutoff)) {
            let pairs: Vec<String> = v
                .chosen_alice_indices
                .iter()
                .zip(&bob.operators)
                .map(|(&i, b)| format!("{}<-{}", operator_label(b.kind), operator_label(alice.operators[i].kind)))
                .collect();
            println!("alice choice       {}", pairs.join(" "));
        }
    }
}

fn cmd_steer(args: SteerArgs, settings: &mut Settings) -> Result<u8, String> {
    record_point(settings, &args.point)?;
    let name = settings.get("criterion", args.criterion, None, "gaussian".to_string())?;
    let n = settings.get("n", args.n, None, DEFAULT_ORDER)?;
    let n_prime = settings.get("nprime", args.nprime, None, n)?;
    let cutoff = settings.get("cutoff", args.cutoff, None, DEFAULT_CUTOFF)?;
    let pad = settings.get("pad", args.pad, None, DEFAULT_PAD)?;
    let limit = settings.get("deficit-limit", args.deficit_limit, None, DEFAULT_DEFICIT_LIMIT)?;
    let strict = settings.get("strict", Some(args.strict).filter(|&b| b), None, false)?;
    finish_settings(settings)?;

    let p = params(&args.point)?;
    let criterion: Criterion = name.parse().map_err(|e: steerscan::Error| e.to_string())?;
    let config = CriterionConfig::new(criterion, n, n_prime).map_err(|e| e.to_string())?;
    let cm = output_cm(p).map_err(|e| e.to_string())?;
    let mut quality_failed = false;
    let state = if criterion == Criterion::Gaussian {
        FockState::vacuum(0)
    } else {
        if n.max(n_prime) > cutoff + 1 {
            return Err(format!("order {} does not fit in cutoff {cutoff}", n.max(n_prime)));
        }
        let st = build_state(p, cutoff, pad).map_err(|e| e.to_string())?;
        println!("trace deficit      {:.6e}", st.trace_deficit);
        if st.trace_deficit > limit {
            println!("warning: truncation deficit above {limit:e}; raise --cutoff");
            quality_failed = true;
        }
        st
    };
    if config.structurally_null() {
        println!("warning: with n' = 1 this inequality cannot be violated by any state");
    }
    let verdict = evaluate_all(&state, &cm, &[config]).map_err(|e| e.to_string())?.remove(0);
    print_verdict(&verdict, cutoff);
    if strict && quality_failed {
        return Ok(EXIT_QUALITY);
    }
    Ok(if verdict.steerable { EXIT_DETECTED } else { EXIT_NOT_DETECTED })
}

struct ResolvedGrid {
    config: ScanConfig,
    out: Option<PathBuf>,
    strict: bool,
}

fn resolve_grid(args: GridArgs, settings: &mut Settings) -> Result<ResolvedGrid, String> {
    let defaults = ScanConfig::default();
    let alpha = settings.get("alpha", args.alpha, None, defaults.alpha)?;
    let gamma_min = settings.get("gamma-min", args.gamma_min, None, defaults.gamma_range.0)?;
    let gamma_max = settings.get("gamma-max", args.gamma_max, None, defaults.gamma_range.1)?;
    let mu_min = settings.get("mu-min", args.mu_min, None, defaults.mu_range.0)?;
    let mu_max = settings.get("mu-max", args.mu_max, None, defaults.mu_range.1)?;
    let grid = settings.get("grid", args.grid, None, DEFAULT_GRID)?;
    let cutoff = settings.get("cutoff", args.cutoff, None, DEFAULT_CUTOFF)?;
    let pad = settings.get("pad", args.pad, None, DEFAULT_PAD)?;
    let deficit_limit = settings.get("deficit-limit", args.deficit_limit, None, DEFAULT_DEFICIT_LIMIT)?;
    let workers = settings.get("workers", args.workers, Some(WORKERS_ENV), 0)?;
    let out = settings
        .get("out", args.out.map(|p| p.display().to_string()), None, String::new())
        .map(|s| (!s.is_empty()).then(|| PathBuf::from(s)))?;
    let strict = settings.get("strict", Some(args.strict).filter(|&b| b), None, false)?;
    Ok(ResolvedGrid {
        config: ScanConfig {
            alpha,
            gamma_range: (gamma_min, gamma_max),
            mu_range: (mu_min, mu_max),
            grid,
            cutoff,
            pad,
            deficit_limit,
            criteria: Vec::new(),
            workers,
        },
        out,
        strict,
    })
}

fn cmd_scan(args: ScanArgs, settings: &mut Settings) -> Result<u8, String> {
    let mut resolved = resolve_grid(args.grid, settings)?;
    let spec = settings.get("criteria", args.criteria, None, "gaussian".to_string())?;
    finish_settings(settings)?;
    resolved.config.criteria = CriterionConfig::parse_list(&spec).map_err(|e| e.to_string())?;
    let result = run_scan(&resolved.config).map_err(|e| e.to_string())?;

    println!("{:<20} {:>9} {:>9} {:>9}", "criterion", "detected", "cells", "contours");
    for (k, c) in resolved.config.criteria.iter().enumerate() {
        let detected = result.cells.iter().filter(|cell| cell.verdicts.get(k).is_some_and(|v| v.steerable)).count();
        let label = if c.structurally_null() { format!("{c} (null)") } else { c.to_string() };
        println!("{:<20} {:>9} {:>9} {:>9}", label, detected, result.cells.len(), result.contours[k].polylines.len());
    }
    let flagged = result.flagged();
    println!("flagged cells      {flagged}");
    for e in result.errors() {
        println!("cell error         {e}");
    }
    if let Some(dir) = &resolved.out {
        let manifest = write_outputs(&result, dir).map_err(|e| e.to_string())?;
        for f in &manifest.files {
            println!("wrote {}  sha256 {}", dir.join(&f.name).display(), f.sha256);
        }
        println!("wrote {}", dir.join("manifest.json").display());
    }
    Ok(if resolved.strict && flagged > 0 { EXIT_QUALITY } else { EXIT_DETECTED })
}

fn cmd_minimal_set(args: MinimalSetArgs, settings: &mut Settings) -> Result<u8, String> {
    let resolved = resolve_grid(args.grid, settings)?;
    let n_prime = settings.get("nprime", args.nprime, None, 7)?;
    let n_max = settings.get("nmax", args.nmax, None, 7)?;
    finish_settings(settings)?;
    let result = run_minimal_set(&resolved.config, n_prime, n_max).map_err(|e| e.to_string())?;

    let grid = resolved.config.grid;
    let gammas = resolved.config.gammas();
    let mus = resolved.config.mus();
    for (title, pick) in [
        ("smallest order reproducing the full lhs", 0),
        ("smallest order that detects steering", 1),
    ] {
        println!("{title} (rows: mu descending; '.' separable, '-' not detected, '!' error)");
        for j in (0..grid).rev() {
            let row: String = (0..grid)
                .map(|i| {
                    let c = &result.cells[i * grid + j];
                    let m = if pick == 0 { c.minimal_order } else { c.detecting_order };
                    match (c.error.is_some(), c.entangled, m) {
                        (true, _, _) => '!',
                        (_, false, _) => '.',
                        (_, _, None) => '-',
                        (_, _, Some(m)) => char::from_digit(m as u32, 36).unwrap_or('#'),
                    }
                })
                .collect();
            println!("  mu={:<8.4} {row}", mus[j]);
        }
        println!("  gamma: {:.4} .. {:.4}", gammas[0], gammas[grid - 1]);
    }
    let flagged = result.cells.iter().filter(|c| c.quality != steerscan::scan::Quality::Ok).count();
    println!("flagged cells      {flagged}");
    if let Some(dir) = &resolved.out {
        let manifest = write_minimal_set(&result, dir).map_err(|e| e.to_string())?;
        for f in &manifest.files {
            println!("wrote {}  sha256 {}", dir.join(&f.name).display(), f.sha256);
        }
    }
    Ok(if resolved.strict && flagged > 0 { EXIT_QUALITY } else { EXIT_DETECTED })
}
