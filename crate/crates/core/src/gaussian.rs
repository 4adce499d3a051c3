//! Covariance-matrix algebra for symmetric two-mode Gaussian states.
//!
//! Quadratures are ordered `(x_A, p_A, x_B, p_B)` and variances are
//! dimensionless with the vacuum at 1. A symmetric state is located either
//! by [`SymParams`] (two squeezed thermal inputs mixed on a 50:50
//! beamsplitter) or by its local standard form [`StandardForm`].

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Physicality tolerance on symplectic eigenvalues.
pub const PHYSICAL_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;

/// Transmittance of the symmetric beamsplitter.
pub const BALANCED: f64 = 0.5;

/// Point of the `(gamma, mu, alpha)` unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymParams {
    pub gamma: f64,
    pub mu: f64,
    pub alpha: f64,
}

impl SymParams {
    pub fn new(gamma: f64, mu: f64, alpha: f64) -> Result<Self> {
        let params = SymParams { gamma, mu, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("gamma", self.gamma, self.gamma > 0.0 && self.gamma <= 1.0, "(0, 1]")?;
        check_range("mu", self.mu, self.mu > 0.0 && self.mu <= 1.0, "(0, 1]")?;
        check_range("alpha", self.alpha, (0.0..=1.0).contains(&self.alpha), "[0, 1]")
    }

    /// Squeezed quadrature variance `v = gamma / mu` of the first input.
    pub fn squeezed_variance(&self) -> f64 {
        self.gamma / self.mu
    }
}

/// Standard-form parameters `(p, m, n, u)` of a symmetric two-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardForm {
    pub p: f64,
    pub m: f64,
    pub n: f64,
    pub u: f64,
}

impl StandardForm {
    pub fn new(p: f64, m: f64, n: f64, u: f64) -> Result<Self> {
        let sf = StandardForm { p, m, n, u };
        sf.validate()?;
        Ok(sf)
    }

    pub fn validate(&self) -> Result<()> {
        let StandardForm { p, m, n, u } = *self;
        let slack = PHYSICAL_TOL * p.abs().max(1.0);
        let fail = |why: &str| Err(Error::InvalidStandardForm(format!("{why} (p={p}, m={m}, n={n}, u={u})")));
        if ![p, m, n, u].iter().all(|v| v.is_finite()) {
            return fail("non-finite entry");
        }
        if p < 1.0 - slack {
            return fail("p < 1");
        }
        if p < m.abs() - slack || p < n.abs() - slack {
            return fail("p < |m| or p < |n|");
        }
        if u <= 0.0 {
            return fail("u <= 0");
        }
        let det_like = (p * p - 1.0).powi(2) - 2.0 * m * n - p * p * (m * m + n * n) + (m * n).powi(2);
        if det_like < -slack * p.powi(4).max(1.0) {
            return fail("uncertainty polynomial negative");
        }
        // Both beamsplitter-input modes must be physical on their own.
        if (p + m) * (p + n) < 1.0 - slack || (p - m) * (p - n) < 1.0 - slack {
            return fail("(p+m)(p+n) < 1 or (p-m)(p-n) < 1");
        }
        Ok(())
    }

    /// Local phase rotations bring any standard form to `m >= |n|`.
    ///
    /// Swapping the quadratures of both modes exchanges `m` and `n` (and
    /// inverts `u`); a rotation by pi on one mode flips both signs.
    pub fn canonical(&self) -> StandardForm {
        let mut sf = *self;
        if sf.n.abs() > sf.m.abs() {
            std::mem::swap(&mut sf.m, &mut sf.n);
            sf.u = 1.0 / sf.u;
        }
        if sf.m < 0.0 {
            sf.m = -sf.m;
            sf.n = -sf.n;
        }
        sf
    }

    /// The standard-form covariance matrix itself.
    pub fn cm(&self) -> CovarianceMatrix4 {
        let StandardForm { p, m, n, u } = *self;
        CovarianceMatrix4::from_matrix_unchecked(Matrix4::new(
            p * u, 0.0, m * u, 0.0,
            0.0, p / u, 0.0, n / u,
            m * u, 0.0, p * u, 0.0,
            0.0, n / u, 0.0, p / u,
        ))
    }
}

/// 4x4 covariance matrix checked for symmetry and physicality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix4 {
    entries: Matrix4<f64>,
}

impl CovarianceMatrix4 {
    pub fn new(entries: Matrix4<f64>) -> Result<Self> {
        let scale = entries.amax().max(1.0);
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unphysical("non-finite entry".into()));
        }
        let asym = (entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Unphysical(format!("asymmetry {asym:.3e}")));
        }
        let cm = CovarianceMatrix4 { entries };
        let nu = cm.symplectic_eigenvalues()?;
        if nu[0] < 1.0 - PHYSICAL_TOL {
            return Err(Error::Unphysical(format!(
                "smallest symplectic eigenvalue {:.12} < 1",
                nu[0]
            )));
        }
        Ok(cm)
    }

    pub(crate) fn from_matrix_unchecked(entries: Matrix4<f64>) -> Self {
        CovarianceMatrix4 { entries }
    }

    pub fn from_diagonal(d: [f64; 4]) -> Result<Self> {
        Self::new(Matrix4::from_diagonal(&d.into()))
    }

    pub fn identity() -> Self {
        CovarianceMatrix4 {
            entries: Matrix4::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Local block of mode A.
    pub fn block_a(&self) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Local block of mode B.
    pub fn block_b(&self) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2, 2).into_owned()
    }

    /// Correlation block between A (rows) and B (columns).
    pub fn block_c(&self) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    /// Ascending symplectic eigenvalues, the moduli of the eigenvalues of
    /// `i Omega V`. Computed from the Hermitian matrix
    /// `V^{1/2} (i Omega) V^{1/2}`, which has the same spectrum.
    pub fn symplectic_eigenvalues(&self) -> Result<[f64; 2]> {
        let eig = self.entries.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::Unphysical("covariance matrix not positive definite".into()));
        }
        let sqrt_v = eig.eigenvectors
            * Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let sqrt_v = sqrt_v.map(|x| Complex64::new(x, 0.0));
        let i_omega = symplectic_form().map(|x| Complex64::new(0.0, x));
        let herm = sqrt_v * i_omega * sqrt_v;
        let herm = (herm + herm.adjoint()).unscale(2.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().filter(|&l| l > 0.0).collect();
        if ev.len() != 2 {
            // Spectrum is {±nu1, ±nu2}; fall back to absolute values when
            // rounding puts a zero on the wrong side.
            ev = herm.symmetric_eigenvalues().iter().map(|l| l.abs()).collect();
            ev.sort_by(f64::total_cmp);
            ev = vec![ev[0], ev[2]];
        }
        ev.sort_by(f64::total_cmp);
        Ok([ev[0], ev[1]])
    }

    /// Partial transpose on mode B (momentum sign flip).
    pub fn partial_transpose(&self) -> CovarianceMatrix4 {
        let flip = Matrix4::from_diagonal(&[1.0, 1.0, 1.0, -1.0].into());
        CovarianceMatrix4 {
            entries: flip * self.entries * flip,
        }
    }
}

/// Symplectic form built from 2x2 blocks `[[0, 1], [-1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, -1.0, 0.0,
    )
}

/// Covariance matrix of the two squeezed thermal states entering the
/// beamsplitter.
pub fn input_cm(params: SymParams) -> Result<CovarianceMatrix4> {
    params.validate()?;
    let SymParams { gamma, mu, alpha } = params;
    let big = 1.0 / (gamma * mu);
    let small = gamma / mu;
    CovarianceMatrix4::from_diagonal([big, small, small.powf(alpha), big.powf(alpha)])
}

/// Transforms `V -> S V S^T` with
/// `S = [[sqrt(t) I, -sqrt(1-t) I], [sqrt(1-t) I, sqrt(t) I]]`.
///
/// Block products are expanded with `t`, `1 - t` and `sqrt(t (1 - t))` so
/// that the balanced case is exact on fixed points.
pub fn apply_beamsplitter(cm: &CovarianceMatrix4, transmittance: f64) -> Result<CovarianceMatrix4> {
    check_range(
        "transmittance",
        transmittance,
        transmittance > 0.0 && transmittance < 1.0,
        "(0, 1)",
    )?;
    let t = transmittance;
    let r = 1.0 - t;
    let cs = (t * r).sqrt();
    let p = cm.block_a();
    let q = cm.block_c();
    let rr = cm.block_b();
    let qt = q.transpose();
    let tl = p * t - (q + qt) * cs + rr * r;
    let tr = p * cs - qt * r + q * t - rr * cs;
    let br = p * r + (q + qt) * cs + rr * t;
    let mut out = Matrix4::zeros();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(&tl);
    out.fixed_view_mut::<2, 2>(0, 2).copy_from(&tr);
    out.fixed_view_mut::<2, 2>(2, 0).copy_from(&tr.transpose());
    out.fixed_view_mut::<2, 2>(2, 2).copy_from(&br);
    Ok(CovarianceMatrix4::from_matrix_unchecked(out))
}

/// Output state of the symmetric beamsplitter for `params`.
pub fn output_cm(params: SymParams) -> Result<CovarianceMatrix4> {
    apply_beamsplitter(&input_cm(params)?, BALANCED)
}

/// Diagonal input state that the beamsplitter maps onto `sf`.
pub fn standard_form_input_cm(sf: &StandardForm) -> Result<CovarianceMatrix4> {
    sf.validate()?;
    let StandardForm { p, m, n, u } = *sf;
    CovarianceMatrix4::from_diagonal([u * (p + m), (p + n) / u, u * (p - m), (p - n) / u])
}

/// Result of mapping a standard form into the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymConversion {
    pub params: SymParams,
    pub u: f64,
    /// Set when `alpha` is not determined by the standard form.
    pub degenerate: bool,
}

const DEGENERATE_LOG_TOL: f64 = 1e-12;

/// Inverts the beamsplitter parameterization.
///
/// `(p+m)(p+n) = mu^-2` and `(p-m)(p-n) = mu^(-2 alpha)`, so `alpha` is a
/// ratio of logarithms that is 0/0 whenever `mu = 1`. For those pure
/// states only `gamma^(1 + alpha)` is fixed; `alpha = 1` is reported, which
/// for `m = -n` reproduces `u` unchanged.
pub fn standard_to_sym(sf: &StandardForm) -> Result<SymConversion> {
    sf.validate()?;
    let StandardForm { p, m, n, .. } = sf.canonical();
    let plus = (p + m) * (p + n);
    let minus = (p - m) * (p - n);
    let mu = (1.0 / plus.sqrt()).min(1.0);
    let log_plus = plus.ln();
    let (alpha, degenerate) = if log_plus.abs() < DEGENERATE_LOG_TOL {
        (1.0, true)
    } else {
        ((minus.ln() / log_plus).clamp(0.0, 1.0), false)
    };
    let expo = 1.0 / (2.0 * (alpha + 1.0));
    let gamma = (((p + n) * (p - m)) / ((p - n) * (p + m))).powf(expo).min(1.0);
    let u = (((p - n) / (p - m)) * ((p + n) / (p + m)).powf(alpha)).powf(expo);
    Ok(SymConversion {
        params: SymParams { gamma, mu, alpha },
        u,
        degenerate,
    })
}

/// Reads `(p, m, n, u)` off the blocks of [`output_cm`].
pub fn sym_to_standard(params: SymParams) -> Result<StandardForm> {
    let cm = output_cm(params)?;
    let a = cm.block_a();
    let c = cm.block_c();
    let p = (a[(0, 0)] * a[(1, 1)]).sqrt();
    let u = (a[(0, 0)] / a[(1, 1)]).sqrt();
    Ok(StandardForm {
        p,
        m: c[(0, 0)] / u,
        n: c[(1, 1)] * u,
        u,
    })
}

/// Entanglement in the cube is the strict inequality `gamma < mu`.
pub fn is_entangled(params: SymParams) -> bool {
    params.gamma < params.mu
}

/// Smallest symplectic eigenvalue of the partially transposed state.
pub fn ppt_eigenvalue(cm: &CovarianceMatrix4) -> Result<f64> {
    Ok(cm.partial_transpose().symplectic_eigenvalues()?[0])
}

/// Gaussian PPT check, independent of the cube parameterization.
pub fn ppt_entangled(cm: &CovarianceMatrix4) -> Result<bool> {
    Ok(ppt_eigenvalue(cm)? < 1.0 - PHYSICAL_TOL)
}

/// `1 / sqrt(det V)`.
pub fn purity(cm: &CovarianceMatrix4) -> f64 {
    1.0 / cm.determinant().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianVerdict {
    pub steerable: bool,
    /// `det(A) - det(V)`.
    pub margin: f64,
}

/// Steering by Gaussian measurements: `det(A) > det(V)`. For symmetric
/// states this holds in both directions at once.
pub fn gaussian_steerable(cm: &CovarianceMatrix4) -> GaussianVerdict {
    let margin = cm.block_a().determinant() - cm.determinant();
    GaussianVerdict {
        steerable: margin > 0.0,
        margin,
    }
}

/// Steering polynomial `mu^(2(1+a)) X^2 - (4 - mu^(2a) - mu^2) X + 1` with
/// `X = (gamma/mu)^(1+a)`; positive means Gaussian-steerable.
pub fn steering_polynomial(params: SymParams) -> f64 {
    let SymParams { gamma, mu, alpha } = params;
    let x = (gamma / mu).powf(1.0 + alpha);
    mu.powf(2.0 * (1.0 + alpha)) * x * x - (4.0 - mu.powf(2.0 * alpha) - mu * mu) * x + 1.0
}

/// `gamma` on the Gaussian steering surface for given `(alpha, mu)`.
///
/// States with smaller `gamma` are steerable. The smaller root of the
/// steering polynomial is taken in closed form and then refined by
/// bisection on the polynomial's sign.
pub fn gaussian_boundary(alpha: f64, mu: f64) -> Result<f64> {
    check_range("alpha", alpha, (0.0..=1.0).contains(&alpha), "[0, 1]")?;
    check_range("mu", mu, mu > 0.0 && mu <= 1.0, "(0, 1]")?;
    let a = mu.powf(2.0 * (1.0 + alpha));
    let b = 4.0 - mu.powf(2.0 * alpha) - mu * mu;
    let disc = b * b - 4.0 * a;
    if disc < -1e-12 * b * b {
        return Err(Error::NoBoundary { alpha, mu });
    }
    let x = 2.0 / (b + disc.max(0.0).sqrt());
    let gamma = mu * x.powf(1.0 / (1.0 + alpha));
    if !gamma.is_finite() || gamma <= 0.0 || gamma > 1.0 + 1e-12 {
        return Err(Error::NoBoundary { alpha, mu });
    }
    let gamma = gamma.min(1.0);
    Ok(refine_boundary(alpha, mu, gamma))
}

fn refine_boundary(alpha: f64, mu: f64, guess: f64) -> f64 {
    let poly = |g: f64| steering_polynomial(SymParams { gamma: g, mu, alpha });
    let width = 1e-6 * guess;
    let mut lo = (guess - width).max(f64::MIN_POSITIVE);
    let mut hi = (guess + width).min(1.0);
    if !(poly(lo) > 0.0 && poly(hi) < 0.0) {
        return guess;
    }
    // Relative stopping rule: near mu -> 0 the root itself is tiny.
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if poly(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Squeezed variance `gamma / mu` below which Gaussian steering holds for
/// every purity.
pub fn threshold_variance(alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, (0.0..=1.0).contains(&alpha), "[0, 1]")?;
    if alpha == 0.0 {
        Ok(1.0 / 3.0)
    } else {
        Ok(0.25f64.powf(1.0 / (1.0 + alpha)))
    }
}
