//! Steering inequalities built on Ji observables: trace norm of the
//! correlation matrix, inferred variance with a linear estimate, and
//! minimum inferred variance. Plus the Gaussian determinant test for
//! side-by-side use.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::gaussian::{gaussian_steerable, CovarianceMatrix4};
use crate::observables::{ji_set, trace_norm, truncated_identity, JiOperator, ObservableSet};

/// Outcomes less likely than this carry no conditional state.
pub const PROBABILITY_FLOOR: f64 = 1e-14;
/// Alice observables with smaller variance add nothing to a linear estimate.
pub const VARIANCE_FLOOR: f64 = 1e-14;
/// Relative tolerance when comparing left-hand sides across Alice orders.
pub const MINIMAL_ORDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gaussian,
    TraceNorm,
    LinearEstimate,
    MinVariance,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Gaussian => "gaussian",
            Criterion::TraceNorm => "trace-norm",
            Criterion::LinearEstimate => "linear",
            Criterion::MinVariance => "min-var",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "gaussian" | "gauss" => Ok(Criterion::Gaussian),
            "trace-norm" | "tracenorm" | "trace" => Ok(Criterion::TraceNorm),
            "linear" | "linear-estimate" | "lin" => Ok(Criterion::LinearEstimate),
            "min-var" | "min-variance" | "minvar" => Ok(Criterion::MinVariance),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

/// Default Alice/Bob order when a criterion is named without one.
pub const DEFAULT_ORDER: usize = 4;

/// A criterion with Alice's order `n` and Bob's order `n_prime`. Both are
/// 0 for the Gaussian test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CriterionConfig {
    pub criterion: Criterion,
    pub n: usize,
    pub n_prime: usize,
}

impl CriterionConfig {
    pub fn gaussian() -> Self {
        CriterionConfig {
            criterion: Criterion::Gaussian,
            n: 0,
            n_prime: 0,
        }
    }

    pub fn new(criterion: Criterion, n: usize, n_prime: usize) -> Result<Self> {
        if criterion == Criterion::Gaussian {
            return Ok(Self::gaussian());
        }
        if n == 0 || n_prime == 0 {
            return Err(Error::Config(format!("{criterion}: orders must be at least 1")));
        }
        if criterion == Criterion::TraceNorm && n < n_prime {
            return Err(Error::Unsupported(format!(
                "trace-norm needs n >= n' (got n = {n}, n' = {n_prime})"
            )));
        }
        Ok(CriterionConfig {
            criterion,
            n,
            n_prime,
        })
    }

    /// Parses `name[:n[:nprime]]` items separated by commas. A missing
    /// `nprime` copies `n`.
    pub fn parse_list(spec: &str) -> Result<Vec<CriterionConfig>> {
        spec.split(',')
            .filter(|item| !item.trim().is_empty())
            .map(str::parse)
            .collect()
    }

    /// With `n' = 1` no state can violate any of the Fock-space
    /// inequalities: each reduces to a Cauchy-Schwarz bound.
    pub fn structurally_null(&self) -> bool {
        self.criterion != Criterion::Gaussian && self.n_prime == 1
    }
}

impl FromStr for CriterionConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let criterion: Criterion = parts.next().unwrap_or("").parse()?;
        let order = |p: Option<&str>, default: usize| -> Result<usize> {
            match p {
                None => Ok(default),
                Some(t) => t
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad order `{t}` in `{s}`"))),
            }
        };
        let n = order(parts.next(), DEFAULT_ORDER)?;
        let n_prime = order(parts.next(), n)?;
        if parts.next().is_some() {
            return Err(Error::Config(format!("too many fields in `{s}`")));
        }
        CriterionConfig::new(criterion, n, n_prime)
    }
}

impl fmt::Display for CriterionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.criterion {
            Criterion::Gaussian => f.write_str("gaussian"),
            c => write!(f, "{c}:{}:{}", self.n, self.n_prime),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringVerdict {
    pub criterion: Criterion,
    pub n: usize,
    pub n_prime: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Positive means steering detected.
    pub margin: f64,
    pub steerable: bool,
    /// Per Bob operator, the Alice operator index achieving the optimum.
    pub chosen_alice_indices: Vec<usize>,
}

impl SteeringVerdict {
    fn new(config: CriterionConfig, lhs: f64, rhs: f64, margin: f64, chosen: Vec<usize>) -> Self {
        SteeringVerdict {
            criterion: config.criterion,
            n: config.n,
            n_prime: config.n_prime,
            lhs,
            rhs,
            margin,
            steerable: margin > 0.0,
            chosen_alice_indices: chosen,
        }
    }

    pub fn config(&self) -> CriterionConfig {
        CriterionConfig {
            criterion: self.criterion,
            n: self.n,
            n_prime: self.n_prime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    ConditionalMean,
    Linear,
}

/// Alice's outcome `a` together with Bob's unnormalized conditional
/// moments `Tr(sigma_a B_j)` and `Tr(sigma_a B_j^2)`.
#[derive(Debug, Clone)]
struct Outcome {
    value: f64,
    prob: f64,
    b_mean: Vec<f64>,
    b_square: Vec<f64>,
}

/// Everything the three inequalities need from one state, for Alice
/// orders up to `n_max` and Bob orders up to `n_prime_max`.
#[derive(Debug, Clone)]
pub struct SteeringContext {
    n_max: usize,
    n_prime_max: usize,
    /// `<1_k>` on Alice's and Bob's marginals, indexed by `k`.
    identity_a: Vec<f64>,
    identity_b: Vec<f64>,
    mean_a: Vec<f64>,
    var_a: Vec<f64>,
    mean_b: Vec<f64>,
    var_b: Vec<f64>,
    /// `[i][j]`: `<A_i B_j>`.
    joint: Vec<Vec<f64>>,
    /// `[i][j]`: minimum inferred variance of `B_j` given `A_i`.
    min_inferred: Vec<Vec<f64>>,
}

impl SteeringContext {
    /// Works on the normalized state.
    pub fn new(state: &FockState, n_max: usize, n_prime_max: usize) -> Result<Self> {
        let alice = ji_set(n_max, state.cutoff)?;
        let bob = ji_set(n_prime_max, state.cutoff)?;
        let state = state.normalized();
        let d = state.mode_dim();
        let rho_a = state.reduced_a().rho;
        let rho_b = state.reduced_b().rho;

        let mean_b: Vec<f64> = bob.operators.iter().map(|b| b.expectation(&rho_b)).collect();
        let square_b: Vec<f64> = bob.operators.iter().map(|b| b.square_expectation(&rho_b)).collect();
        let var_b = mean_b.iter().zip(&square_b).map(|(m, s)| s - m * m).collect();
        let mean_a: Vec<f64> = alice.operators.iter().map(|a| a.expectation(&rho_a)).collect();
        let var_a = alice
            .operators
            .iter()
            .zip(&mean_a)
            .map(|(a, m)| a.square_expectation(&rho_a) - m * m)
            .collect();

        let mut joint = Vec::with_capacity(alice.len());
        let mut min_inferred = Vec::with_capacity(alice.len());
        for a in &alice.operators {
            let outcomes = outcomes(&state.rho, d, a, &bob, &mean_b, &square_b);
            joint.push(
                (0..bob.len())
                    .map(|j| outcomes.iter().map(|o| o.value * o.b_mean[j]).sum())
                    .collect(),
            );
            min_inferred.push(
                (0..bob.len())
                    .map(|j| {
                        outcomes
                            .iter()
                            .filter(|o| o.prob >= PROBABILITY_FLOOR)
                            .map(|o| o.b_square[j] - o.b_mean[j] * o.b_mean[j] / o.prob)
                            .sum()
                    })
                    .collect(),
            );
        }

        let identity = |rho: &DMatrix<Complex64>, max: usize| (0..=max).map(|k| truncated_identity(rho, k)).collect();
        Ok(SteeringContext {
            n_max,
            n_prime_max,
            identity_a: identity(&rho_a, n_max),
            identity_b: identity(&rho_b, n_prime_max),
            mean_a,
            var_a,
            mean_b,
            var_b,
            joint,
            min_inferred,
        })
    }

    fn check(&self, n: usize, n_prime: usize) -> Result<()> {
        if n == 0 || n_prime == 0 || n > self.n_max || n_prime > self.n_prime_max {
            return Err(Error::Config(format!(
                "orders ({n}, {n_prime}) outside the prepared range ({}, {})",
                self.n_max, self.n_prime_max
            )));
        }
        Ok(())
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.joint[i][j] - self.mean_a[i] * self.mean_b[j]
    }

    pub fn inferred_variance(&self, i: usize, j: usize, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::ConditionalMean => self.min_inferred[i][j],
            Estimator::Linear => self.var_b[j] - self.linear_gain(i, j),
        }
    }

    /// `Cov(A_i, B_j)^2 / Var(A_i)`, the variance removed by the best linear
    /// estimate.
    fn linear_gain(&self, i: usize, j: usize) -> f64 {
        if self.var_a[i] < VARIANCE_FLOOR {
            0.0
        } else {
            let c = self.covariance(i, j);
            c * c / self.var_a[i]
        }
    }

    /// `<1_B> - sum_j <B_j>^2`, shared by the linear and trace-norm tests.
    fn bob_spread(&self, n_prime: usize) -> f64 {
        self.identity_b[n_prime] - self.mean_b[..n_prime * n_prime].iter().map(|m| m * m).sum::<f64>()
    }

    pub fn min_variance(&self, n: usize, n_prime: usize) -> Result<SteeringVerdict> {
        self.check(n, n_prime)?;
        let mut lhs = 0.0;
        let mut chosen = Vec::with_capacity(n_prime * n_prime);
        for j in 0..n_prime * n_prime {
            let (best, value) = argbest(n * n, |i| self.min_inferred[i][j], |new, old| new < old);
            lhs += value;
            chosen.push(best);
        }
        let rhs = (n_prime as f64 - 1.0) * self.identity_b[n_prime];
        let config = CriterionConfig::new(Criterion::MinVariance, n, n_prime)?;
        Ok(SteeringVerdict::new(config, lhs, rhs, rhs - lhs, chosen))
    }

    pub fn linear_estimate(&self, n: usize, n_prime: usize) -> Result<SteeringVerdict> {
        self.check(n, n_prime)?;
        let mut lhs = 0.0;
        let mut chosen = Vec::with_capacity(n_prime * n_prime);
        for j in 0..n_prime * n_prime {
            let (best, value) = argbest(n * n, |i| self.linear_gain(i, j), |new, old| new > old);
            lhs += value;
            chosen.push(best);
        }
        let rhs = self.bob_spread(n_prime);
        let config = CriterionConfig::new(Criterion::LinearEstimate, n, n_prime)?;
        Ok(SteeringVerdict::new(config, lhs, rhs, lhs - rhs, chosen))
    }

    pub fn correlation(&self, n: usize, n_prime: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n * n, n_prime * n_prime, |i, j| self.covariance(i, j))
    }

    pub fn trace_norm(&self, n: usize, n_prime: usize) -> Result<SteeringVerdict> {
        let config = CriterionConfig::new(Criterion::TraceNorm, n, n_prime)?;
        self.check(n, n_prime)?;
        let lhs = trace_norm(&self.correlation(n, n_prime));
        let spread_a = n as f64 * self.identity_a[n] - self.mean_a[..n * n].iter().map(|m| m * m).sum::<f64>();
        let rhs = (spread_a.max(0.0) * self.bob_spread(n_prime).max(0.0)).sqrt();
        Ok(SteeringVerdict::new(config, lhs, rhs, lhs - rhs, Vec::new()))
    }

    pub fn evaluate(&self, config: CriterionConfig) -> Result<SteeringVerdict> {
        match config.criterion {
            Criterion::TraceNorm => self.trace_norm(config.n, config.n_prime),
            Criterion::LinearEstimate => self.linear_estimate(config.n, config.n_prime),
            Criterion::MinVariance => self.min_variance(config.n, config.n_prime),
            Criterion::Gaussian => Err(Error::Config("the Gaussian test needs a covariance matrix".into())),
        }
    }

    /// Smallest Alice order whose linear-estimate left-hand side equals the
    /// one at `n_max`.
    pub fn minimal_alice_order(&self, n_prime: usize, n_max: usize) -> Result<usize> {
        let target = self.linear_estimate(n_max, n_prime)?.lhs;
        for m in 1..n_max {
            let lhs = self.linear_estimate(m, n_prime)?.lhs;
            if target - lhs <= MINIMAL_ORDER_TOL * target.abs().max(1.0) {
                return Ok(m);
            }
        }
        Ok(n_max)
    }

    /// Smallest Alice order that still detects steering with Bob's order
    /// `n_prime`, if any order up to `n_max` does.
    pub fn minimal_detecting_order(&self, n_prime: usize, n_max: usize) -> Result<Option<usize>> {
        for m in 1..=n_max {
            if self.linear_estimate(m, n_prime)?.steerable {
                return Ok(Some(m));
            }
        }
        Ok(None)
    }
}

/// Index and value of the best entry, first index winning ties.
fn argbest(count: usize, value: impl Fn(usize) -> f64, better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, value(0));
    for i in 1..count {
        let v = value(i);
        if better(v, best.1) {
            best = (i, v);
        }
    }
    best
}

/// Spectral outcomes of Alice's `a`, with Bob's conditional moments. The
/// zero eigenspace is the complement of the listed eigenvectors, so its
/// moments are Bob's marginal ones minus the rest.
fn outcomes(
    rho: &DMatrix<Complex64>,
    d: usize,
    a: &JiOperator,
    bob: &ObservableSet,
    mean_b: &[f64],
    square_b: &[f64],
) -> Vec<Outcome> {
    let mut out = Vec::with_capacity(3);
    let mut rest = Outcome {
        value: 0.0,
        prob: 1.0,
        b_mean: mean_b.to_vec(),
        b_square: square_b.to_vec(),
    };
    for term in a.spectrum() {
        // sigma[b, b'] = sum_{x, x'} conj(v_x) rho[(x, b), (x', b')] v_x'
        let sigma = DMatrix::from_fn(d, d, |b, b2| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(x, vx) in &term.vector {
                for &(x2, vx2) in &term.vector {
                    acc += vx.conj() * rho[(x * d + b, x2 * d + b2)] * vx2;
                }
            }
            acc
        });
        let prob = sigma.trace().re;
        let b_mean: Vec<f64> = bob.operators.iter().map(|b| b.expectation(&sigma)).collect();
        let b_square: Vec<f64> = bob.operators.iter().map(|b| b.square_expectation(&sigma)).collect();
        rest.prob -= prob;
        for j in 0..bob.len() {
            rest.b_mean[j] -= b_mean[j];
            rest.b_square[j] -= b_square[j];
        }
        out.push(Outcome {
            value: term.eigenvalue,
            prob,
            b_mean,
            b_square,
        });
    }
    out.push(rest);
    out
}

/// Inferred variance of `b` (on Bob) from `a` (on Alice) for a single pair.
pub fn inferred_variance(state: &FockState, b: &JiOperator, a: &JiOperator, estimator: Estimator) -> Result<f64> {
    let state = state.normalized();
    let d = state.mode_dim();
    let bob = ObservableSet {
        order: 1,
        dim: d,
        operators: vec![b.clone()],
    };
    let rho_a = state.reduced_a().rho;
    let rho_b = state.reduced_b().rho;
    let mean_b = b.expectation(&rho_b);
    let square_b = b.square_expectation(&rho_b);
    let outs = outcomes(&state.rho, d, a, &bob, &[mean_b], &[square_b]);
    Ok(match estimator {
        Estimator::ConditionalMean => outs
            .iter()
            .filter(|o| o.prob >= PROBABILITY_FLOOR)
            .map(|o| o.b_square[0] - o.b_mean[0] * o.b_mean[0] / o.prob)
            .sum(),
        Estimator::Linear => {
            let mean_a = a.expectation(&rho_a);
            let var_a = a.square_expectation(&rho_a) - mean_a * mean_a;
            let var_b = square_b - mean_b * mean_b;
            if var_a < VARIANCE_FLOOR {
                var_b
            } else {
                let joint: f64 = outs.iter().map(|o| o.value * o.b_mean[0]).sum();
                let cov = joint - mean_a * mean_b;
                var_b - cov * cov / var_a
            }
        }
    })
}

pub fn min_variance_test(state: &FockState, n: usize, n_prime: usize) -> Result<SteeringVerdict> {
    SteeringContext::new(state, n, n_prime)?.min_variance(n, n_prime)
}

pub fn linear_estimate_test(state: &FockState, n: usize, n_prime: usize) -> Result<SteeringVerdict> {
    SteeringContext::new(state, n, n_prime)?.linear_estimate(n, n_prime)
}

pub fn trace_norm_test(state: &FockState, n: usize, n_prime: usize) -> Result<SteeringVerdict> {
    CriterionConfig::new(Criterion::TraceNorm, n, n_prime)?;
    SteeringContext::new(state, n, n_prime)?.trace_norm(n, n_prime)
}

pub fn minimal_alice_order(state: &FockState, n_prime: usize, n_max: usize) -> Result<usize> {
    SteeringContext::new(state, n_max, n_prime)?.minimal_alice_order(n_prime, n_max)
}

pub fn minimal_detecting_order(state: &FockState, n_prime: usize, n_max: usize) -> Result<Option<usize>> {
    SteeringContext::new(state, n_max, n_prime)?.minimal_detecting_order(n_prime, n_max)
}

pub fn gaussian_verdict(cm: &CovarianceMatrix4) -> SteeringVerdict {
    let g = gaussian_steerable(cm);
    let det_a = cm.block_a().determinant();
    SteeringVerdict::new(CriterionConfig::gaussian(), det_a, det_a - g.margin, g.margin, Vec::new())
}

/// Evaluates every config against one shared context.
pub fn evaluate_all(
    state: &FockState,
    cm: &CovarianceMatrix4,
    configs: &[CriterionConfig],
) -> Result<Vec<SteeringVerdict>> {
    let fock: Vec<&CriterionConfig> = configs.iter().filter(|c| c.criterion != Criterion::Gaussian).collect();
    let ctx = if fock.is_empty() {
        None
    } else {
        let n = fock.iter().map(|c| c.n).max().unwrap_or(1);
        let n_prime = fock.iter().map(|c| c.n_prime).max().unwrap_or(1);
        Some(SteeringContext::new(state, n, n_prime)?)
    };
    configs
        .iter()
        .map(|&c| match (c.criterion, &ctx) {
            (Criterion::Gaussian, _) => Ok(gaussian_verdict(cm)),
            (_, Some(ctx)) => ctx.evaluate(c),
            (_, None) => unreachable!("context exists whenever a Fock criterion is requested"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_state, SingleModeState};
    use crate::gaussian::{output_cm, SymParams};
    use crate::observables::ji_set;

    fn tmsv() -> FockState {
        build_state(SymParams::new(0.5, 1.0, 1.0).unwrap(), 19, 8).unwrap()
    }

    fn mixed_product() -> FockState {
        let mut r = DMatrix::zeros(6, 6);
        let w = [0.4, 0.25, 0.15, 0.1, 0.06, 0.04];
        for k in 0..6 {
            r[(k, k)] = Complex64::new(w[k], 0.0);
        }
        r[(0, 1)] = Complex64::new(0.1, 0.05);
        r[(1, 0)] = Complex64::new(0.1, -0.05);
        r[(1, 3)] = Complex64::new(0.02, -0.04);
        r[(3, 1)] = Complex64::new(0.02, 0.04);
        let a = SingleModeState::new(r.clone()).unwrap();
        let b = SingleModeState::new(r.map(|z| z.conj())).unwrap();
        FockState::product(&a, &b).unwrap()
    }

    #[test]
    fn parses_criteria_grammar() {
        let list = CriterionConfig::parse_list("gaussian,linear:4:3,min-var:3:3").unwrap();
        assert_eq!(list[0], CriterionConfig::gaussian());
        assert_eq!(list[1], CriterionConfig::new(Criterion::LinearEstimate, 4, 3).unwrap());
        assert_eq!(list[2], CriterionConfig::new(Criterion::MinVariance, 3, 3).unwrap());
        assert_eq!("trace-norm:2".parse::<CriterionConfig>().unwrap().n_prime, 2);
        assert_eq!("linear".parse::<CriterionConfig>().unwrap().n, DEFAULT_ORDER);
        assert_eq!(list[1].to_string(), "linear:4:3");
        assert!("foo:1".parse::<CriterionConfig>().is_err());
        assert!("linear:x".parse::<CriterionConfig>().is_err());
        assert!("linear:1:2:3".parse::<CriterionConfig>().is_err());
        assert!(matches!("trace-norm:2:3".parse::<CriterionConfig>(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn trace_norm_rejects_small_alice() {
        assert!(matches!(trace_norm_test(&tmsv(), 2, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn product_state_never_detected() {
        let st = mixed_product();
        for n in 1..=4 {
            for np in 1..=4 {
                let lin = linear_estimate_test(&st, n, np).unwrap();
                assert!(lin.lhs.abs() < 1e-14 && !lin.steerable);
                let mv = min_variance_test(&st, n, np).unwrap();
                assert!(!mv.steerable);
                if n >= np {
                    let tn = trace_norm_test(&st, n, np).unwrap();
                    assert!(tn.lhs < 1e-14 && !tn.steerable);
                }
            }
        }
    }

    #[test]
    fn product_inferred_variance_is_marginal() {
        let st = mixed_product();
        let set = ji_set(3, 5).unwrap();
        let rho_b = st.reduced_b().rho;
        for a in &set.operators {
            for b in &set.operators {
                let m = b.expectation(&rho_b);
                let var = b.square_expectation(&rho_b) - m * m;
                for est in [Estimator::ConditionalMean, Estimator::Linear] {
                    assert!((inferred_variance(&st, b, a, est).unwrap() - var).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn vacuum_is_marginal() {
        let vac = FockState::vacuum(5);
        let lin = linear_estimate_test(&vac, 2, 2).unwrap();
        assert_eq!((lin.lhs, lin.rhs, lin.margin), (0.0, 0.0, 0.0));
        assert!(!lin.steerable);
        let tn = trace_norm_test(&vac, 2, 2).unwrap();
        assert_eq!((tn.lhs, tn.rhs), (0.0, 0.0));
        assert!(!tn.steerable);
        assert_eq!(minimal_alice_order(&vac, 3, 5).unwrap(), 1);
        assert_eq!(minimal_detecting_order(&vac, 3, 5).unwrap(), None);
    }

    #[test]
    fn tmsv_vacuum_projector_pair() {
        let st = tmsv();
        let p0 = &ji_set(1, 19).unwrap().operators[0];
        let cond = inferred_variance(&st, p0, p0, Estimator::ConditionalMean).unwrap();
        assert!(cond.abs() < 1e-12);

        // Geometric oracle: both marginals put weight q = 1 - lambda^2 on |0>,
        // and the joint weight on |0,0> is also q.
        let lam2: f64 = 1.0 / 9.0;
        let q = 1.0 - lam2;
        let var = q * (1.0 - q);
        let cov = q - q * q;
        let expected = var - cov * cov / var;
        let lin = inferred_variance(&st, p0, p0, Estimator::Linear).unwrap();
        assert!((lin - expected).abs() < 1e-10, "{lin} vs {expected}");
    }

    #[test]
    fn tmsv_detected_at_order_four() {
        let st = tmsv();
        let lin = linear_estimate_test(&st, 4, 4).unwrap();
        let mv = min_variance_test(&st, 4, 4).unwrap();
        let tn = trace_norm_test(&st, 4, 4).unwrap();
        assert!(lin.steerable && mv.steerable && tn.steerable);
        assert!((lin.margin - TMSV_LINEAR_44).abs() < 1e-9, "{}", lin.margin);
        assert!((mv.margin - TMSV_MINVAR_44).abs() < 1e-9, "{}", mv.margin);
        assert!((tn.margin - TMSV_TRACE_44).abs() < 1e-9, "{}", tn.margin);
    }

    // Regression values from the dense reference in tests/steering_oracle.rs.
    const TMSV_LINEAR_44: f64 = 0.452500186764087;
    const TMSV_MINVAR_44: f64 = 0.45250018676408654;
    const TMSV_TRACE_44: f64 = 0.3513031667729415;

    #[test]
    fn linear_regression_point() {
        let st = build_state(SymParams::new(0.7, 0.6, 1.0).unwrap(), 19, 8).unwrap();
        let lin = linear_estimate_test(&st, 2, 2).unwrap();
        assert!((lin.lhs - POINT_LHS).abs() < 1e-10, "{}", lin.lhs);
        assert!((lin.rhs - POINT_RHS).abs() < 1e-10, "{}", lin.rhs);
    }

    const POINT_LHS: f64 = 0.03971830618381676;
    const POINT_RHS: f64 = 0.36183183952570885;

    #[test]
    fn evaluate_all_matches_single_calls() {
        let p = SymParams::new(0.5, 1.0, 1.0).unwrap();
        let st = tmsv();
        let cm = output_cm(p).unwrap();
        assert!(evaluate_all(&st, &cm, &[]).unwrap().is_empty());
        let configs = CriterionConfig::parse_list("gaussian,linear:3:3,linear:4:3,min-var:2:3,trace-norm:3:2").unwrap();
        let all = evaluate_all(&st, &cm, &configs).unwrap();
        assert!(all[0].steerable);
        assert!((all[0].lhs - 25.0 / 16.0).abs() < 1e-12);
        assert!((all[0].rhs - 1.0).abs() < 1e-12);
        assert_eq!(all[1], linear_estimate_test(&st, 3, 3).unwrap());
        assert_eq!(all[2], linear_estimate_test(&st, 4, 3).unwrap());
        assert_eq!(all[3], min_variance_test(&st, 2, 3).unwrap());
        assert_eq!(all[4], trace_norm_test(&st, 3, 2).unwrap());
        assert!(all[2].lhs >= all[1].lhs);
    }

    #[test]
    fn argmax_ties_take_first() {
        assert_eq!(argbest(4, |_| 1.0, |a, b| a > b), (0, 1.0));
        assert_eq!(argbest(4, |i| [0.0, 2.0, 2.0, 1.0][i], |a, b| a > b), (1, 2.0));
    }
}
