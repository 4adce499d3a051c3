//! Ji projective observables on the first `n` Fock levels, their spectra,
//! correlation matrices and the single-mode uncertainty functional.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockState, SingleModeState};

/// Eigenvalues closer than this are merged into one spectral projector.
pub const EIGEN_GROUP_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JiKind {
    /// `|k><k|`
    Diagonal(usize),
    /// `(|k><l| + |l><k|) / sqrt 2`
    Symmetric(usize, usize),
    /// `(|k><l| - |l><k|) / (i sqrt 2)`
    Antisymmetric(usize, usize),
}

/// Eigenvector with nonzero eigenvalue, stored by its (at most two)
/// nonzero components.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTerm {
    pub eigenvalue: f64,
    pub vector: Vec<(usize, Complex64)>,
}

#[derive(Debug, Clone)]
pub struct JiOperator {
    pub kind: JiKind,
    entries: Vec<(usize, usize, Complex64)>,
    square: Vec<(usize, f64)>,
    spectrum: Vec<SpectralTerm>,
}

impl JiOperator {
    fn new(kind: JiKind) -> Self {
        let h = FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match kind {
            JiKind::Diagonal(k) => JiOperator {
                kind,
                entries: vec![(k, k, ONE)],
                square: vec![(k, 1.0)],
                spectrum: vec![SpectralTerm {
                    eigenvalue: 1.0,
                    vector: vec![(k, ONE)],
                }],
            },
            JiKind::Symmetric(k, l) => JiOperator {
                kind,
                entries: vec![(k, l, c(h, 0.0)), (l, k, c(h, 0.0))],
                square: vec![(k, 0.5), (l, 0.5)],
                spectrum: vec![
                    SpectralTerm {
                        eigenvalue: h,
                        vector: vec![(k, c(h, 0.0)), (l, c(h, 0.0))],
                    },
                    SpectralTerm {
                        eigenvalue: -h,
                        vector: vec![(k, c(h, 0.0)), (l, c(-h, 0.0))],
                    },
                ],
            },
            JiKind::Antisymmetric(k, l) => JiOperator {
                kind,
                entries: vec![(k, l, c(0.0, -h)), (l, k, c(0.0, h))],
                square: vec![(k, 0.5), (l, 0.5)],
                spectrum: vec![
                    SpectralTerm {
                        eigenvalue: h,
                        vector: vec![(k, c(h, 0.0)), (l, c(0.0, h))],
                    },
                    SpectralTerm {
                        eigenvalue: -h,
                        vector: vec![(k, c(h, 0.0)), (l, c(0.0, -h))],
                    },
                ],
            },
        }
    }

    /// Nonzero matrix entries `(row, col, value)`.
    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    /// The square is diagonal: `(level, value)` pairs.
    pub fn square_diagonal(&self) -> &[(usize, f64)] {
        &self.square
    }

    /// Nonzero-eigenvalue part of the spectrum; the zero eigenspace is the
    /// orthogonal complement.
    pub fn spectrum(&self) -> &[SpectralTerm] {
        &self.spectrum
    }

    pub fn matrix(&self, dim: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(dim, dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// `Tr(rho X)` for a single-mode matrix.
    pub fn expectation(&self, rho: &DMatrix<Complex64>) -> f64 {
        self.entries.iter().map(|&(r, c, v)| (v * rho[(c, r)]).re).sum()
    }

    pub fn square_expectation(&self, rho: &DMatrix<Complex64>) -> f64 {
        self.square.iter().map(|&(k, v)| v * rho[(k, k)].re).sum()
    }
}

/// The `n^2` Ji operators, nested so that the first `m^2` form the set of
/// order `m`.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    pub order: usize,
    pub dim: usize,
    pub operators: Vec<JiOperator>,
}

impl ObservableSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Operators of the order-`m` subset.
    pub fn prefix(&self, m: usize) -> &[JiOperator] {
        &self.operators[..(m * m).min(self.operators.len())]
    }

    /// Spectral decomposition of operator `j` with merged eigenspaces,
    /// including the zero eigenspace.
    pub fn projectors(&self, j: usize) -> Vec<(f64, DMatrix<Complex64>)> {
        let op = &self.operators[j];
        let mut out = Vec::with_capacity(3);
        let mut zero = DMatrix::identity(self.dim, self.dim);
        for term in &op.spectrum {
            let p = rank_one(&term.vector, self.dim);
            zero -= &p;
            out.push((term.eigenvalue, p));
        }
        if self.dim > out.len() {
            out.push((0.0, zero));
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// `<1_n>`, the weight on the first `order` levels.
    pub fn identity_expectation(&self, rho: &DMatrix<Complex64>) -> f64 {
        truncated_identity(rho, self.order)
    }
}

pub(crate) fn truncated_identity(rho: &DMatrix<Complex64>, order: usize) -> f64 {
    (0..order).map(|k| rho[(k, k)].re).sum()
}

fn rank_one(vector: &[(usize, Complex64)], dim: usize) -> DMatrix<Complex64> {
    let mut p = DMatrix::zeros(dim, dim);
    for &(r, a) in vector {
        for &(c, b) in vector {
            p[(r, c)] = a * b.conj();
        }
    }
    p
}

pub fn ji_set(n: usize, cutoff: usize) -> Result<ObservableSet> {
    if n == 0 || n > cutoff + 1 {
        return Err(Error::OrderTooLarge { order: n, cutoff });
    }
    let mut operators = Vec::with_capacity(n * n);
    for l in 0..n {
        operators.push(JiOperator::new(JiKind::Diagonal(l)));
        for k in 0..l {
            operators.push(JiOperator::new(JiKind::Symmetric(k, l)));
            operators.push(JiOperator::new(JiKind::Antisymmetric(k, l)));
        }
    }
    Ok(ObservableSet {
        order: n,
        dim: cutoff + 1,
        operators,
    })
}

/// Hermitian eigendecomposition with eigenvalues grouped within `tol`.
/// Used to cross-check the analytic spectra.
pub fn spectral_decomposition(matrix: &DMatrix<Complex64>, tol: f64) -> Vec<(f64, DMatrix<Complex64>)> {
    let dim = matrix.nrows();
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut groups: Vec<(f64, DMatrix<Complex64>, usize)> = Vec::new();
    for idx in order {
        let lambda = eig.eigenvalues[idx];
        let v = eig.eigenvectors.column(idx);
        let proj = v * v.adjoint();
        match groups.last_mut() {
            Some((value, p, count)) if (lambda - *value / *count as f64).abs() < tol => {
                *value += lambda;
                *p += proj;
                *count += 1;
            }
            _ => groups.push((lambda, proj, 1)),
        }
    }
    groups.into_iter().map(|(v, p, c)| (v / c as f64, p)).collect()
}

/// Connected correlations `<A_i B_j> - <A_i><B_j>`.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub entries: DMatrix<f64>,
    pub means_a: Vec<f64>,
    pub means_b: Vec<f64>,
    /// Largest discarded imaginary part of `<A_i B_j>`.
    pub imag_residue: f64,
}

/// Direct contraction of the sparse operator entries against `rho`.
pub fn correlation_matrix(state: &FockState, set_a: &ObservableSet, set_b: &ObservableSet) -> Result<CorrelationMatrix> {
    let d = state.mode_dim();
    if set_a.dim != d || set_b.dim != d {
        return Err(Error::DimensionMismatch(format!(
            "observables act on {} and {} levels, state has {d}",
            set_a.dim, set_b.dim
        )));
    }
    let rho_a = state.reduced_a().rho;
    let rho_b = state.reduced_b().rho;
    let means_a: Vec<f64> = set_a.operators.iter().map(|a| a.expectation(&rho_a)).collect();
    let means_b: Vec<f64> = set_b.operators.iter().map(|b| b.expectation(&rho_b)).collect();
    let mut entries = DMatrix::zeros(set_a.len(), set_b.len());
    let mut imag_residue: f64 = 0.0;
    for (i, a) in set_a.operators.iter().enumerate() {
        for (j, b) in set_b.operators.iter().enumerate() {
            let mut joint = ZERO;
            for &(ra, ca, va) in &a.entries {
                for &(rb, cb, vb) in &b.entries {
                    joint += va * vb * state.rho[(ca * d + cb, ra * d + rb)];
                }
            }
            imag_residue = imag_residue.max(joint.im.abs());
            entries[(i, j)] = joint.re - means_a[i] * means_b[j];
        }
    }
    Ok(CorrelationMatrix {
        entries,
        means_a,
        means_b,
        imag_residue,
    })
}

/// Sum of singular values.
pub fn trace_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().sum()
}

/// `(sum_j Var(B_j), (n - 1) <1_n>)`; the first never falls below the second.
pub fn uncertainty_sum(state_b: &SingleModeState, set: &ObservableSet) -> (f64, f64) {
    let rho = &state_b.rho;
    let lhs = set
        .operators
        .iter()
        .map(|b| {
            let mean = b.expectation(rho);
            b.square_expectation(rho) - mean * mean
        })
        .sum();
    let rhs = (set.order as f64 - 1.0) * set.identity_expectation(rho);
    (lhs, rhs)
}
