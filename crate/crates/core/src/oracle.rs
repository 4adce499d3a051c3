//! Reference construction of the output state by literal matrix
//! exponentials of the squeeze and beamsplitter generators.
//!
//! Shares nothing with [`crate::fock::build_state`] beyond the public
//! parameter types; used to validate it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::fock::{FockState, DEFAULT_PAD};
use crate::gaussian::SymParams;

/// `exp((r/2)(a^+2 - a^2))` on `dim` Fock levels.
pub fn squeeze_operator(r: f64, dim: usize) -> DMatrix<f64> {
    let mut gen = DMatrix::zeros(dim, dim);
    for n in 0..dim.saturating_sub(2) {
        // a^+2 |n> = sqrt((n+1)(n+2)) |n+2>
        let amp = (((n + 1) * (n + 2)) as f64).sqrt() * r / 2.0;
        gen[(n + 2, n)] += amp;
        gen[(n, n + 2)] -= amp;
    }
    gen.exp()
}

/// `exp((pi/4)(a b^+ - a^+ b))` restricted to total photon number `total`,
/// on the basis `|a, total - a>`.
pub fn beamsplitter_block(total: usize) -> DMatrix<f64> {
    let theta = std::f64::consts::FRAC_PI_4;
    let mut gen = DMatrix::zeros(total + 1, total + 1);
    for a in 0..=total {
        let b = total - a;
        if a >= 1 {
            // a b^+ |a, b> = sqrt(a) sqrt(b+1) |a-1, b+1>
            gen[(a - 1, a)] += theta * ((a * (b + 1)) as f64).sqrt();
        }
        if b >= 1 {
            // a^+ b |a, b> = sqrt(a+1) sqrt(b) |a+1, b-1>
            gen[(a + 1, a)] -= theta * (((a + 1) * b) as f64).sqrt();
        }
    }
    gen.exp()
}

fn input_mode(var_x: f64, var_p: f64, dim: usize) -> DMatrix<f64> {
    let r = 0.25 * (var_x / var_p).ln();
    let nbar = (((var_x * var_p).sqrt() - 1.0) / 2.0).max(0.0);
    let thermal = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            nbar.powi(i as i32) / (nbar + 1.0).powi(i as i32 + 1)
        } else {
            0.0
        }
    });
    let s = squeeze_operator(r, dim);
    &s * thermal * s.transpose()
}

/// Oracle state with the default padding.
pub fn oracle_state(params: SymParams, cutoff: usize) -> Result<FockState> {
    oracle_state_with_pad(params, cutoff, DEFAULT_PAD)
}

/// Inputs live on `2 cutoff + 1 + 2 pad` levels; each total-photon block of
/// the beamsplitter is exponentiated on its own, which is exact because the
/// generator conserves total photon number.
pub fn oracle_state_with_pad(params: SymParams, cutoff: usize, pad: usize) -> Result<FockState> {
    params.validate()?;
    let SymParams { gamma, mu, alpha } = params;
    let dim = 2 * cutoff + 1 + 2 * pad;
    let mode1 = input_mode(1.0 / (gamma * mu), gamma / mu, dim);
    let mode2 = input_mode((gamma / mu).powf(alpha), (1.0 / (gamma * mu)).powf(alpha), dim);
    let blocks: Vec<DMatrix<f64>> = (0..=2 * cutoff).map(beamsplitter_block).collect();

    let d = cutoff + 1;
    let mut rho = DMatrix::from_element(d * d, d * d, Complex64::new(0.0, 0.0));
    for na in 0..d {
        for nb in 0..d {
            let t = na + nb;
            for ma in 0..d {
                for mb in 0..d {
                    let t2 = ma + mb;
                    let mut acc = 0.0;
                    for a in 0..=t.min(dim - 1) {
                        if t - a >= dim {
                            continue;
                        }
                        let u = blocks[t][(na, a)];
                        if u == 0.0 {
                            continue;
                        }
                        for a2 in 0..=t2.min(dim - 1) {
                            if t2 - a2 >= dim {
                                continue;
                            }
                            acc += u * mode1[(a, a2)] * mode2[(t - a, t2 - a2)] * blocks[t2][(ma, a2)];
                        }
                    }
                    rho[(na * d + nb, ma * d + mb)] = Complex64::new(acc, 0.0);
                }
            }
        }
    }
    let mut state = FockState::from_matrix(rho, cutoff)?;
    state.params = Some(params);
    Ok(state)
}
