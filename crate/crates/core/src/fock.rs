//! Truncated Fock-basis density matrices of the beamsplitter output.
//!
//! Each input is a squeezed thermal state `S(r) rho_th S(r)^T` with the
//! squeeze matrix elements generated by an exact recurrence. The two inputs
//! are mixed by the Fock representation of the same beamsplitter used in
//! [`crate::gaussian::apply_beamsplitter`], block by block in total photon
//! number, and the result is truncated to `n_A, n_B <= cutoff`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_range, Error, Result};
use crate::gaussian::{CovarianceMatrix4, SymParams, BALANCED};

pub const DEFAULT_CUTOFF: usize = 19;
pub const DEFAULT_PAD: usize = 8;
/// Deficit above which a single-mode construction is flagged.
pub const SINGLE_MODE_WARN: f64 = 1e-4;
/// Default deficit bound for two-mode states.
pub const DEFAULT_DEFICIT_LIMIT: f64 = 1e-3;
/// `cm_from_fock` refuses states truncated worse than this.
pub const CM_DEFICIT_LIMIT: f64 = 0.01;

/// Single-mode truncated density matrix on `|0>, ..., |cutoff>`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeState {
    pub cutoff: usize,
    pub rho: DMatrix<Complex64>,
}

impl SingleModeState {
    pub fn new(rho: DMatrix<Complex64>) -> Result<Self> {
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "single-mode density matrix must be square, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(SingleModeState {
            cutoff: rho.nrows() - 1,
            rho,
        })
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    /// Whether the truncation lost more than [`SINGLE_MODE_WARN`].
    pub fn truncation_warning(&self) -> bool {
        self.trace_deficit() > SINGLE_MODE_WARN
    }

    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.rho[(k, k)].re).collect()
    }

    /// `(Var x, Var p)` from normal-ordered moments, vacuum = 1.
    pub fn quadrature_variances(&self) -> (f64, f64) {
        let d = self.dim();
        let tr = self.trace();
        let mut a = Complex64::new(0.0, 0.0);
        let mut a2 = Complex64::new(0.0, 0.0);
        let mut n = 0.0;
        for k in 0..d {
            n += k as f64 * self.rho[(k, k)].re;
            if k >= 1 {
                // <a> = sum_k sqrt(k) rho[k, k-1]
                a += self.rho[(k, k - 1)] * (k as f64).sqrt();
            }
            if k >= 2 {
                a2 += self.rho[(k, k - 2)] * ((k * (k - 1)) as f64).sqrt();
            }
        }
        let (a, a2, n) = (a / tr, a2 / tr, n / tr);
        let var_x = 2.0 * a2.re + 2.0 * n + 1.0 - (2.0 * a.re).powi(2);
        let var_p = -2.0 * a2.re + 2.0 * n + 1.0 - (2.0 * a.im).powi(2);
        (var_x, var_p)
    }
}

/// `f64` factorials `0!, ..., n!`.
fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Matrix elements `<m|S(r)|n>` of `S(r) = exp((r/2)(a^+2 - a^2))` for
/// `m < rows`, `n < cols`.
///
/// Row 0 is the squeezed vacuum of `S(-r)`; the remaining rows follow from
/// `S a = (a cosh r - a^+ sinh r) S`, which only references lower rows and
/// the previous column, so no basis truncation enters the elements.
pub(crate) fn squeeze_elements(r: f64, rows: usize, cols: usize) -> DMatrix<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    let t = r.tanh();
    let mut out = DMatrix::zeros(rows, cols);
    let mut amp = 1.0 / c.sqrt();
    for n in (0..cols).step_by(2) {
        if rows > 0 {
            out[(0, n)] = amp;
        }
        let k = (n / 2) as f64;
        amp *= -t * ((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0));
    }
    for n in 0..cols {
        for m in 0..rows.saturating_sub(1) {
            let from_prev_col = if n > 0 { (n as f64).sqrt() * out[(m, n - 1)] } else { 0.0 };
            let from_lower_row = if m > 0 { s * (m as f64).sqrt() * out[(m - 1, n)] } else { 0.0 };
            out[(m + 1, n)] = (from_prev_col + from_lower_row) / (c * ((m + 1) as f64).sqrt());
        }
    }
    out
}

/// Real symmetric squeezed thermal matrix on `rows` Fock levels, using
/// `levels` thermal occupation levels.
pub(crate) fn squeezed_thermal_matrix(var_x: f64, var_p: f64, rows: usize, levels: usize) -> Result<DMatrix<f64>> {
    check_range("var_x", var_x, var_x > 0.0, "(0, inf)")?;
    check_range("var_p", var_p, var_p > 0.0, "(0, inf)")?;
    let product = var_x * var_p;
    if product < 1.0 - 1e-12 {
        return Err(Error::Unphysical(format!(
            "single-mode variances {var_x} x {var_p} violate the uncertainty bound"
        )));
    }
    let nbar = ((product.max(1.0).sqrt() - 1.0) / 2.0).max(0.0);
    let q = nbar / (nbar + 1.0);
    let r = 0.25 * (var_x / var_p).ln();
    let s = squeeze_elements(r, rows, levels);
    let mut weighted = s.clone();
    let mut w = 1.0 - q;
    for k in 0..levels {
        weighted.column_mut(k).scale_mut(w);
        w *= q;
    }
    Ok(&weighted * s.transpose())
}

/// Squeezed thermal state with quadrature variances `(var_x, var_p)`.
///
/// Thermal occupation follows `2 nbar + 1 = sqrt(var_x var_p)` and the
/// squeezing `r = ln(var_x / var_p) / 4`; `r > 0` stretches `x`. The state is
/// built from `cutoff + pad + 1` thermal levels and truncated to `cutoff`.
pub fn squeezed_thermal(var_x: f64, var_p: f64, cutoff: usize, pad: usize) -> Result<SingleModeState> {
    if cutoff < 1 {
        return Err(Error::Config("cutoff must be at least 1".into()));
    }
    let rho = squeezed_thermal_matrix(var_x, var_p, cutoff + 1, cutoff + 1 + pad)?;
    SingleModeState::new(rho.map(|x| Complex64::new(x, 0.0)))
}

/// Fock representation of the beamsplitter, one block per total photon
/// number `T`. Block `T` acts on `|a, T - a>`, `a = 0..=T`, and is indexed
/// `[(a_out, a_in)]`.
#[derive(Debug, Clone)]
pub struct BeamsplitterUnitary {
    pub transmittance: f64,
    blocks: Vec<DMatrix<f64>>,
}

impl BeamsplitterUnitary {
    /// Blocks for total photon numbers `0..=max_total`.
    pub fn new(transmittance: f64, max_total: usize) -> Result<Self> {
        check_range(
            "transmittance",
            transmittance,
            transmittance > 0.0 && transmittance < 1.0,
            "(0, 1)",
        )?;
        let c = transmittance.sqrt();
        let s = (1.0 - transmittance).sqrt();
        let fact = factorials(max_total);
        let binom = |n: usize, k: usize| fact[n] / (fact[k] * fact[n - k]);
        let blocks = (0..=max_total)
            .map(|total| {
                let mut u = DMatrix::zeros(total + 1, total + 1);
                // U a^+ U^+ = c a^+ + s b^+,  U b^+ U^+ = -s a^+ + c b^+
                for j in 0..=total {
                    let k = total - j;
                    let norm = (fact[j] * fact[k]).sqrt();
                    for p in 0..=j {
                        for q in 0..=k {
                            let out = p + q;
                            let sign = if q % 2 == 1 { -1.0 } else { 1.0 };
                            let coeff = binom(j, p)
                                * binom(k, q)
                                * c.powi((p + k - q) as i32)
                                * s.powi((j - p + q) as i32)
                                * (fact[out] * fact[total - out]).sqrt()
                                / norm;
                            u[(out, j)] += sign * coeff;
                        }
                    }
                }
                u
            })
            .collect();
        Ok(BeamsplitterUnitary { transmittance, blocks })
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    /// Dense matrix on the truncated two-mode space `n_A, n_B <= cutoff`,
    /// indexed `n_A * (cutoff + 1) + n_B`. Only blocks with `T <= cutoff`
    /// fit entirely; larger blocks are cut.
    pub fn dense(&self, cutoff: usize) -> DMatrix<f64> {
        let d = cutoff + 1;
        let mut u = DMatrix::zeros(d * d, d * d);
        for (total, block) in self.blocks.iter().enumerate() {
            for a_out in 0..=total {
                for a_in in 0..=total {
                    let (b_out, b_in) = (total - a_out, total - a_in);
                    if a_out < d && b_out < d && a_in < d && b_in < d {
                        u[(a_out * d + b_out, a_in * d + b_in)] = block[(a_out, a_in)];
                    }
                }
            }
        }
        u
    }
}

/// Balanced beamsplitter blocks covering every total photon number of the
/// truncated two-mode space.
pub fn bs_fock_unitary(cutoff: usize) -> Result<BeamsplitterUnitary> {
    if cutoff < 1 {
        return Err(Error::Config("cutoff must be at least 1".into()));
    }
    BeamsplitterUnitary::new(BALANCED, 2 * cutoff)
}

/// Truncated two-mode density matrix indexed `n_A * (cutoff + 1) + n_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub cutoff: usize,
    pub params: Option<SymParams>,
    pub rho: DMatrix<Complex64>,
    pub trace_deficit: f64,
}

impl FockState {
    pub fn from_matrix(rho: DMatrix<Complex64>, cutoff: usize) -> Result<Self> {
        let d = (cutoff + 1) * (cutoff + 1);
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} for cutoff {cutoff}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let trace_deficit = 1.0 - rho.trace().re;
        Ok(FockState {
            cutoff,
            params: None,
            rho,
            trace_deficit,
        })
    }

    pub fn product(a: &SingleModeState, b: &SingleModeState) -> Result<Self> {
        if a.cutoff != b.cutoff {
            return Err(Error::DimensionMismatch(format!(
                "mode cutoffs differ: {} vs {}",
                a.cutoff, b.cutoff
            )));
        }
        FockState::from_matrix(a.rho.kronecker(&b.rho), a.cutoff)
    }

    /// `|0,0><0,0|`.
    pub fn vacuum(cutoff: usize) -> Self {
        let d = (cutoff + 1) * (cutoff + 1);
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        FockState {
            cutoff,
            params: None,
            rho,
            trace_deficit: 0.0,
        }
    }

    pub fn mode_dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.mode_dim() + n_b
    }

    pub fn get(&self, n_a: usize, n_b: usize, m_a: usize, m_b: usize) -> Complex64 {
        self.rho[(self.index(n_a, n_b), self.index(m_a, m_b))]
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn reduced_a(&self) -> SingleModeState {
        let d = self.mode_dim();
        let rho = DMatrix::from_fn(d, d, |i, j| (0..d).map(|b| self.rho[(i * d + b, j * d + b)]).sum());
        SingleModeState { cutoff: self.cutoff, rho }
    }

    pub fn reduced_b(&self) -> SingleModeState {
        let d = self.mode_dim();
        let rho = DMatrix::from_fn(d, d, |i, j| (0..d).map(|a| self.rho[(a * d + i, a * d + j)]).sum());
        SingleModeState { cutoff: self.cutoff, rho }
    }

    /// Same state with the roles of A and B exchanged.
    pub fn swap_modes(&self) -> FockState {
        let d = self.mode_dim();
        let swap = |i: usize| (i % d) * d + i / d;
        let rho = DMatrix::from_fn(self.rho.nrows(), self.rho.ncols(), |i, j| self.rho[(swap(i), swap(j))]);
        FockState {
            rho,
            params: None,
            ..*self
        }
    }

    /// The state rescaled to unit trace; the deficit is kept for reporting.
    pub fn normalized(&self) -> FockState {
        let tr = self.trace();
        FockState {
            rho: self.rho.unscale(tr),
            ..self.clone()
        }
    }

    /// Whether the deficit exceeds `limit`.
    pub fn truncation_warning(&self, limit: f64) -> bool {
        self.trace_deficit > limit
    }

    /// Binary dump: magic `b"STRHO001"`, cutoff as `u32`, a params flag byte
    /// followed by `gamma, mu, alpha`, the deficit, then `rho` row-major as
    /// `(re, im)` pairs. All numbers little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.cutoff as u32).to_le_bytes())?;
        let params = self.params.map(|p| [p.gamma, p.mu, p.alpha]);
        w.write_all(&[params.is_some() as u8])?;
        for v in params.unwrap_or([0.0; 3]) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.trace_deficit.to_le_bytes())?;
        for i in 0..self.rho.nrows() {
            for j in 0..self.rho.ncols() {
                let z = self.rho[(i, j)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<FockState> {
        let io = |e| Error::io("<fock dump>", e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Config("not a density-matrix dump".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(io)?;
        let cutoff = u32::from_le_bytes(u32buf) as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag).map_err(io)?;
        let mut read_f64 = || -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(io)?;
            Ok(f64::from_le_bytes(b))
        };
        let (gamma, mu, alpha) = (read_f64()?, read_f64()?, read_f64()?);
        let trace_deficit = read_f64()?;
        let d = (cutoff + 1) * (cutoff + 1);
        let mut rho = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rho[(i, j)] = Complex64::new(read_f64()?, read_f64()?);
            }
        }
        Ok(FockState {
            cutoff,
            params: (flag[0] == 1).then_some(SymParams { gamma, mu, alpha }),
            rho,
            trace_deficit,
        })
    }

    /// JSON dump with the same content as [`FockState::write_binary`].
    pub fn to_json(&self) -> serde_json::Value {
        let d = self.rho.nrows();
        let re: Vec<f64> = (0..d * d).map(|k| self.rho[(k / d, k % d)].re).collect();
        let im: Vec<f64> = (0..d * d).map(|k| self.rho[(k / d, k % d)].im).collect();
        serde_json::json!({
            "cutoff": self.cutoff,
            "params": self.params,
            "trace_deficit": self.trace_deficit,
            "rho_re": re,
            "rho_im": im,
        })
    }
}

const DUMP_MAGIC: &[u8; 8] = b"STRHO001";

/// Input-mode variances `(var_x, var_p)` for both beamsplitter ports. The
/// second port is squeezed along the opposite axis.
pub fn input_variances(params: SymParams) -> [(f64, f64); 2] {
    let SymParams { gamma, mu, alpha } = params;
    let big = 1.0 / (gamma * mu);
    let small = gamma / mu;
    [(big, small), (small.powf(alpha), big.powf(alpha))]
}

/// Fock-basis density matrix of the beamsplitter output for `params`.
///
/// Output entries are exact up to the thermal occupation levels dropped
/// beyond `2 cutoff + 1 + pad`.
pub fn build_state(params: SymParams, cutoff: usize, pad: usize) -> Result<FockState> {
    params.validate()?;
    if cutoff < 1 {
        return Err(Error::Config("cutoff must be at least 1".into()));
    }
    let d = cutoff + 1;
    // Output blocks reach total photon number 2 cutoff, so each input mode
    // needs levels up to 2 cutoff; `pad` extra thermal levels feed them.
    let input_dim = 2 * cutoff + 1;
    let [(x1, p1), (x2, p2)] = input_variances(params);
    let rho1 = squeezed_thermal_matrix(x1, p1, input_dim, input_dim + pad)?;
    let rho2 = squeezed_thermal_matrix(x2, p2, input_dim, input_dim + pad)?;
    let bs = BeamsplitterUnitary::new(BALANCED, 2 * cutoff)?;

    // Per total photon number: output rows a_out with both modes <= cutoff,
    // input columns a_in with both modes inside the padded input space.
    let out_range = |t: usize| t.saturating_sub(cutoff)..=t.min(cutoff);
    let in_range = |t: usize| t.saturating_sub(input_dim - 1)..=t.min(input_dim - 1);
    let cut_blocks: Vec<DMatrix<f64>> = (0..=2 * cutoff)
        .map(|t| {
            let rows: Vec<usize> = out_range(t).collect();
            let cols: Vec<usize> = in_range(t).collect();
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| bs.block(t)[(rows[i], cols[j])])
        })
        .collect();

    let mut rho = DMatrix::from_element(d * d, d * d, Complex64::new(0.0, 0.0));
    for t in 0..=2 * cutoff {
        for t2 in (t % 2..=2 * cutoff).step_by(2) {
            // Single-mode factors only couple equal parities.
            let ins: Vec<usize> = in_range(t).collect();
            let ins2: Vec<usize> = in_range(t2).collect();
            let joint = DMatrix::from_fn(ins.len(), ins2.len(), |i, j| {
                let (a, a2) = (ins[i], ins2[j]);
                rho1[(a, a2)] * rho2[(t - a, t2 - a2)]
            });
            let block = &cut_blocks[t] * joint * cut_blocks[t2].transpose();
            for (i, a_out) in out_range(t).enumerate() {
                for (j, a2_out) in out_range(t2).enumerate() {
                    rho[(a_out * d + (t - a_out), a2_out * d + (t2 - a2_out))] = Complex64::new(block[(i, j)], 0.0);
                }
            }
        }
    }
    let mut state = FockState::from_matrix(rho, cutoff)?;
    state.params = Some(params);
    Ok(state)
}

/// Covariance matrix from quadrature moments of the (renormalized)
/// truncated state.
pub fn cm_from_fock(state: &FockState) -> Result<CovarianceMatrix4> {
    if state.trace_deficit.is_nan() || state.trace_deficit >= CM_DEFICIT_LIMIT {
        return Err(Error::Truncation {
            deficit: state.trace_deficit,
            limit: CM_DEFICIT_LIMIT,
        });
    }
    let d = state.mode_dim();
    let tr = state.trace();
    let zero = Complex64::new(0.0, 0.0);
    // Normal-ordered moments; <O> = sum rho[(i, j)] O[(j, i)].
    let (mut a, mut b) = (zero, zero);
    let (mut aa, mut bb, mut ab, mut adag_b) = (zero, zero, zero, zero);
    let (mut na, mut nb) = (0.0, 0.0);
    let sq = |k: usize| (k as f64).sqrt();
    for ia in 0..d {
        for ib in 0..d {
            let row = ia * d + ib;
            let diag = state.rho[(row, row)].re;
            na += ia as f64 * diag;
            nb += ib as f64 * diag;
            if ia >= 1 {
                a += state.rho[(row, (ia - 1) * d + ib)] * sq(ia);
            }
            if ib >= 1 {
                b += state.rho[(row, ia * d + ib - 1)] * sq(ib);
            }
            if ia >= 2 {
                aa += state.rho[(row, (ia - 2) * d + ib)] * (sq(ia) * sq(ia - 1));
            }
            if ib >= 2 {
                bb += state.rho[(row, ia * d + ib - 2)] * (sq(ib) * sq(ib - 1));
            }
            if ia >= 1 && ib >= 1 {
                ab += state.rho[(row, (ia - 1) * d + ib - 1)] * (sq(ia) * sq(ib));
            }
            // a^+ b |ia-1, ib+1> = sqrt(ia) sqrt(ib+1) |ia, ib>
            if ia >= 1 && ib + 1 < d {
                adag_b += state.rho[((ia - 1) * d + ib + 1, row)] * (sq(ia) * sq(ib + 1));
            }
        }
    }
    let (a, b, aa, bb, ab, adag_b) = (a / tr, b / tr, aa / tr, bb / tr, ab / tr, adag_b / tr);
    let (na, nb) = (na / tr, nb / tr);

    let means = [2.0 * a.re, 2.0 * a.im, 2.0 * b.re, 2.0 * b.im];
    let mut v = nalgebra::Matrix4::zeros();
    v[(0, 0)] = 2.0 * aa.re + 2.0 * na + 1.0;
    v[(1, 1)] = -2.0 * aa.re + 2.0 * na + 1.0;
    v[(0, 1)] = 2.0 * aa.im;
    v[(2, 2)] = 2.0 * bb.re + 2.0 * nb + 1.0;
    v[(3, 3)] = -2.0 * bb.re + 2.0 * nb + 1.0;
    v[(2, 3)] = 2.0 * bb.im;
    v[(0, 2)] = 2.0 * ab.re + 2.0 * adag_b.re;
    v[(0, 3)] = 2.0 * ab.im + 2.0 * adag_b.im;
    v[(1, 2)] = 2.0 * ab.im - 2.0 * adag_b.im;
    v[(1, 3)] = -2.0 * ab.re + 2.0 * adag_b.re;
    for i in 0..4 {
        for j in i..4 {
            v[(i, j)] -= means[i] * means[j];
            v[(j, i)] = v[(i, j)];
        }
    }
    CovarianceMatrix4::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::output_cm;
    use approx::assert_relative_eq;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn sp(g: f64, m: f64, a: f64) -> SymParams {
        SymParams::new(g, m, a).unwrap()
    }

    #[test]
    fn vacuum_input() {
        let st = squeezed_thermal(1.0, 1.0, 10, 4).unwrap();
        assert_relative_eq!(st.rho[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(st.rho.iter().map(|z| z.norm()).sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn thermal_input_is_geometric() {
        let st = squeezed_thermal(2.0, 2.0, 19, 8).unwrap();
        for k in 0..=19 {
            let expected = (2.0 / 3.0) * (1.0f64 / 3.0).powi(k as i32);
            assert_relative_eq!(st.rho[(k, k)].re, expected, epsilon = 1e-15);
        }
        let (vx, vp) = st.quadrature_variances();
        assert!((vx - 2.0).abs() < 1e-6 && (vp - 2.0).abs() < 1e-6, "{vx} {vp}");
    }

    #[test]
    fn squeezed_vacuum_has_even_support() {
        let st = squeezed_thermal(2.0, 0.5, 19, 8).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                if i % 2 == 1 || j % 2 == 1 {
                    assert_eq!(st.rho[(i, j)].norm(), 0.0);
                }
            }
        }
        // Pure state: rank one up to truncation.
        let p: f64 = st.rho.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(p, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn variance_recovery() {
        for &(vx, vp, cutoff) in &[(2.0, 0.5, 19), (0.5, 2.0, 19), (1.3, 1.3, 19), (3.0, 0.6, 40), (1.0 / 0.3, 0.3 / 0.9, 40)] {
            let st = squeezed_thermal(vx, vp, cutoff, 8).unwrap();
            let tol = 1e-6f64.max(10.0 * st.trace_deficit());
            let (rx, rp) = st.quadrature_variances();
            assert!((rx - vx).abs() < tol && (rp - vp).abs() < tol, "({vx},{vp}) -> ({rx},{rp})");
        }
    }

    #[test]
    fn unphysical_variances_rejected() {
        assert!(matches!(squeezed_thermal(0.5, 0.5, 5, 2), Err(Error::Unphysical(_))));
        assert!(squeezed_thermal(1.0, 1.0, 0, 2).is_err());
    }

    #[test]
    fn heavy_states_warn() {
        assert!(squeezed_thermal(20.0, 20.0, 10, 0).unwrap().truncation_warning());
        assert!(!squeezed_thermal(2.0, 0.5, 19, 8).unwrap().truncation_warning());
    }

    #[test]
    fn squeeze_recurrence_matches_series() {
        // <2k|S|0> = (cosh r)^(-1/2) tanh(r)^k sqrt((2k)!) / (2^k k!)
        let r: f64 = 0.4;
        let s = squeeze_elements(r, 12, 3);
        let f = factorials(12);
        for k in 0..6 {
            let expected = r.tanh().powi(k as i32) * f[2 * k].sqrt() / (2f64.powi(k as i32) * f[k]) / r.cosh().sqrt();
            assert_relative_eq!(s[(2 * k, 0)], expected, epsilon = 1e-14);
            assert_eq!(s[(2 * k + 1, 0)], 0.0);
        }
        // <0|S|2> = -<2|S|0>
        assert_relative_eq!(s[(0, 2)], -s[(2, 0)], epsilon = 1e-15);
    }

    #[test]
    fn beamsplitter_small_blocks() {
        let bs = bs_fock_unitary(3).unwrap();
        assert_eq!(bs.block(0)[(0, 0)], 1.0);
        // Block 1 in the basis (|0,1>, |1,0>), indexed by photons in A.
        let b1 = bs.block(1);
        assert_relative_eq!(b1[(1, 1)], H, epsilon = 1e-15); // |1,0> -> |1,0>
        assert_relative_eq!(b1[(0, 1)], H, epsilon = 1e-15); // |1,0> -> |0,1>
        assert_relative_eq!(b1[(1, 0)], -H, epsilon = 1e-15); // |0,1> -> |1,0>
        assert_relative_eq!(b1[(0, 0)], H, epsilon = 1e-15);
        // Hong-Ou-Mandel: |1,1> never exits as |1,1>.
        assert!(bs.block(2)[(1, 1)].abs() < 1e-15);
    }

    #[test]
    fn beamsplitter_blocks_are_unitary() {
        for t in [0.3, 0.5, 0.7] {
            let bs = BeamsplitterUnitary::new(t, 40).unwrap();
            for total in 0..=40 {
                let u = bs.block(total);
                let err = (u.transpose() * u - DMatrix::identity(total + 1, total + 1)).amax();
                assert!(err < 1e-10, "t={t} T={total} err={err}");
            }
        }
    }

    #[test]
    fn beamsplitter_commutes_with_total_number() {
        let cutoff = 6;
        let d = cutoff + 1;
        let u = bs_fock_unitary(cutoff).unwrap().dense(cutoff);
        let n = DMatrix::from_fn(d * d, d * d, |i, j| if i == j { (i / d + i % d) as f64 } else { 0.0 });
        assert!((&u * &n - &n * &u).amax() < 1e-10);
    }

    #[test]
    fn build_vacuum() {
        let st = build_state(sp(1.0, 1.0, 0.4), 5, 3).unwrap();
        assert_relative_eq!(st.rho[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert!(st.rho.iter().skip(1).all(|z| z.norm() < 1e-14));
        assert!(st.trace_deficit.abs() < 1e-14);
    }

    #[test]
    fn build_tmsv_matches_schmidt_form() {
        let st = build_state(sp(0.5, 1.0, 1.0), 19, 8).unwrap();
        let lam: f64 = 1.0 / 3.0;
        let d = 20;
        for i in 0..d * d {
            for j in 0..d * d {
                let (na, nb, ma, mb) = (i / d, i % d, j / d, j % d);
                let expected = if na == nb && ma == mb {
                    (1.0 - lam * lam) * lam.powi((na + ma) as i32)
                } else {
                    0.0
                };
                assert!((st.rho[(i, j)].re - expected).abs() < 1e-10, "({na},{nb};{ma},{mb})");
            }
        }
    }

    #[test]
    fn build_state_basic_invariants() {
        let st = build_state(sp(0.5, 0.8, 0.0), 19, 8).unwrap();
        assert!(st.hermiticity_error() < 1e-10);
        assert!(st.trace_deficit >= -1e-10 && st.trace_deficit < 1e-6);
        let eig = st.rho.clone().symmetric_eigenvalues();
        assert!(eig.iter().all(|&l| l >= -1e-9));
        // Mode-B marginal is mixed.
        let rb = st.reduced_b();
        let pb: f64 = rb.rho.iter().map(|z| z.norm_sqr()).sum();
        assert!(pb < 0.99);
        // Coherences between equal-parity sectors, none across parity.
        assert!(st.get(0, 0, 1, 1).norm() > 1e-3);
        assert!(st.get(0, 0, 0, 2).norm() > 1e-3);
        for i in 0..400 {
            for j in 0..400 {
                let parity = (i / 20 + i % 20 + j / 20 + j % 20) % 2;
                if parity == 1 {
                    assert_eq!(st.rho[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn cm_from_fock_examples() {
        let cm = cm_from_fock(&FockState::vacuum(5)).unwrap();
        assert!((cm.matrix() - nalgebra::Matrix4::identity()).amax() < 1e-15);

        let p = sp(0.5, 1.0, 1.0);
        let cm = cm_from_fock(&build_state(p, 19, 8).unwrap()).unwrap();
        assert!((cm.matrix() - output_cm(p).unwrap().matrix()).amax() < 1e-6);

        let th = squeezed_thermal(1.5, 1.5, 19, 8).unwrap();
        let prod = FockState::product(&th, &th).unwrap();
        let bs = bs_fock_unitary(19).unwrap().dense(19).map(|x| Complex64::new(x, 0.0));
        let mixed = FockState::from_matrix(&bs * &prod.rho * bs.adjoint(), 19).unwrap();
        let cm = cm_from_fock(&mixed).unwrap();
        assert!(cm.block_c().amax() < 1e-6);
        assert!((cm.block_a() - nalgebra::Matrix2::identity() * 1.5).amax() < 1e-6);
    }

    #[test]
    fn cm_from_fock_refuses_heavy_truncation() {
        let st = build_state(sp(0.1, 0.1, 1.0), 5, 2).unwrap();
        assert!(matches!(cm_from_fock(&st), Err(Error::Truncation { .. })));
    }

    #[test]
    fn swap_and_reduce() {
        let st = build_state(sp(0.6, 0.7, 0.3), 8, 4).unwrap();
        let sw = st.swap_modes();
        assert!((sw.reduced_a().rho - st.reduced_b().rho).iter().all(|z| z.norm() < 1e-15));
        assert_eq!(sw.swap_modes().rho, st.rho);
    }

    #[test]
    fn binary_dump_round_trip() {
        let st = build_state(sp(0.6, 0.9, 0.5), 4, 2).unwrap();
        let mut buf = Vec::new();
        st.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 1 + 3 * 8 + 8 + 25 * 25 * 16);
        assert_eq!(FockState::read_binary(buf.as_slice()).unwrap(), st);
        assert!(FockState::read_binary(&b"garbage!xxxx"[..]).is_err());
        let js = st.to_json();
        assert_eq!(js["cutoff"], 4);
        assert_eq!(js["rho_re"].as_array().unwrap().len(), 625);
    }
}
