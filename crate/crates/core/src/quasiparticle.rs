//! Quasiparticle and saddle-point predictions for the unitary SSH quench,
//! the block-Toeplitz asymptotic coefficient, and the slow-mode criterion
//! for the XY Mpemba effect.

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{moment_block_log_det, Basis, SymbolGrid};
use crate::linalg::{cis, inverse, log_det};
use crate::quadrature::{pairwise_sum, shifted_grid};
use crate::ssh::{
    grid_from_entries, ssh_dispersion, ssh_ground_coeffs, ssh_time_averaged_symbol, QuenchParamsSSH, SshSymbolEvaluator,
};
use crate::xy::{xy_symbol, QuenchParamsXY};

pub const DEFAULT_NK: usize = 4096;

fn as_mat(m: &[[c64; 4]; 4]) -> Mat<c64> {
    Mat::from_fn(4, 4, |i, j| m[i][j])
}

fn deltas_of(alphas: &[f64]) -> Vec<f64> {
    let n = alphas.len();
    (0..n).map(|j| alphas[j] - alphas[(j + 1) % n]).collect()
}

/// `det M^(n)_α(k)` for a 4×4 cell symbol, `n = alphas.len()`.
pub fn m_determinant(symbol: &[[c64; 4]; 4], alphas: &[f64]) -> Result<c64> {
    Ok(m_log_determinant(symbol, alphas)?.exp())
}

/// Principal logarithm of [`m_determinant`].
pub fn m_log_determinant(symbol: &[[c64; 4]; 4], alphas: &[f64]) -> Result<c64> {
    if alphas.len() < 2 {
        return Err(Error::Invalid("M-matrix needs n >= 2".into()));
    }
    let g = as_mat(symbol);
    let ld = moment_block_log_det(g.as_ref(), Basis::NambuCell.mask_block(), &deltas_of(alphas));
    Ok(ld.as_complex())
}

/// Per-momentum ingredients of the quasiparticle formulas on one grid.
#[derive(Debug, Clone)]
pub struct QpKernel {
    pub ks: Vec<f64>,
    pub velocity: Vec<f64>,
    /// `log det M_α(k, t→0)`
    pub log_m0: Vec<f64>,
    /// `log det M_α(k, t→∞)`
    pub log_minf: Vec<f64>,
    /// `log det M_0(k, t→∞)`
    pub log_minf_zero: Vec<f64>,
}

fn require_unitary(p: &QuenchParamsSSH) -> Result<()> {
    p.validate()?;
    if p.gamma != 0.0 {
        return Err(Error::Domain("quasiparticle predictions need the unitary evolution (gamma = 0)".into()));
    }
    Ok(())
}

/// The initial and dephased 4×4 symbols on the shifted `nk`-grid.
pub fn ssh_limit_symbols(p: &QuenchParamsSSH, nk: usize) -> Result<(SymbolGrid, SymbolGrid)> {
    require_unitary(p)?;
    let ks = shifted_grid(nk);
    let t0 = SshSymbolEvaluator::new(ks.clone(), p)?.grid_at(0.0)?;
    let entries =
        ks.par_iter().map(|&k| ssh_time_averaged_symbol(k, p).map(|a| a.entries)).collect::<Result<Vec<_>>>()?;
    Ok((t0, grid_from_entries(&ks, &entries)))
}

fn grid_mat(g: &SymbolGrid, m: usize) -> [[c64; 4]; 4] {
    let s = g.at(m);
    let mut out = [[c64::new(0.0, 0.0); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = s[4 * a + b];
        }
    }
    out
}

impl QpKernel {
    pub fn new(p: &QuenchParamsSSH, alphas: &[f64], nk: usize) -> Result<Self> {
        let (g0, ginf) = ssh_limit_symbols(p, nk)?;
        Self::from_symbols(p, alphas, &g0, &ginf)
    }

    pub fn from_symbols(p: &QuenchParamsSSH, alphas: &[f64], g0: &SymbolGrid, ginf: &SymbolGrid) -> Result<Self> {
        let zero = vec![0.0; alphas.len()];
        let rows = (0..g0.len())
            .into_par_iter()
            .map(|m| -> Result<(f64, f64, f64)> {
                let s0 = grid_mat(g0, m);
                let si = grid_mat(ginf, m);
                Ok((
                    m_log_determinant(&s0, alphas)?.re,
                    m_log_determinant(&si, alphas)?.re,
                    m_log_determinant(&si, &zero)?.re,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let velocity = g0.ks.iter().map(|&k| ssh_dispersion(k, p.h_ev, 0.0).1).collect();
        Ok(Self {
            ks: g0.ks.clone(),
            velocity,
            log_m0: rows.iter().map(|r| r.0).collect(),
            log_minf: rows.iter().map(|r| r.1).collect(),
            log_minf_zero: rows.iter().map(|r| r.2).collect(),
        })
    }

    fn weighted_mean(&self, tau: f64, f: impl Fn(usize) -> f64) -> f64 {
        let vals: Vec<f64> = (0..self.ks.len()).map(|m| (2.0 * self.velocity[m] * tau).min(1.0) * f(m)).collect();
        pairwise_sum(&vals) / vals.len() as f64
    }

    /// `log[Z_n(α,t)/Z_n(α,0)] / ℓ` at `τ = t/ℓ`.
    pub fn log_ratio(&self, tau: f64) -> f64 {
        0.25 * self.weighted_mean(tau, |m| self.log_minf[m] - self.log_m0[m])
    }

    /// `(1-n) S_n(t) / ℓ` from the quasiparticle picture.
    pub fn entropy_part(&self, tau: f64) -> f64 {
        0.25 * self.weighted_mean(tau, |m| self.log_minf_zero[m])
    }

    pub fn decomposition(&self, tau: f64) -> QPDecomposition {
        let a = 0.25 * pairwise_sum(&self.log_m0) / self.log_m0.len() as f64;
        QPDecomposition {
            a_n: a,
            b_n: -0.25 * self.weighted_mean(tau, |m| self.log_m0[m]),
            b_prime_n: 0.25 * self.weighted_mean(tau, |m| self.log_minf[m] - self.log_minf_zero[m]),
        }
    }
}

/// `log Z_n(α,t) = log Z_n(0,t) + ℓ (A_n + B_n + B'_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPDecomposition {
    pub a_n: f64,
    pub b_n: f64,
    pub b_prime_n: f64,
}

/// Quasiparticle estimate with a grid-halving residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpEstimate {
    pub value: f64,
    pub residual: f64,
}

/// `log[Z_n(α,t)/Z_n(α,0)] / ℓ` at `τ = t/ℓ` for the unitary SSH quench.
pub fn qp_charged_moment_ratio(p: &QuenchParamsSSH, alphas: &[f64], tau: f64, nk: usize) -> Result<QpEstimate> {
    if tau < 0.0 {
        return Err(Error::Invalid(format!("tau must be >= 0, got {tau}")));
    }
    let fine = QpKernel::new(p, alphas, nk)?.log_ratio(tau);
    let coarse = QpKernel::new(p, alphas, nk / 2)?.log_ratio(tau);
    Ok(QpEstimate { value: fine, residual: (fine - coarse).abs() })
}

pub fn qp_decomposition(p: &QuenchParamsSSH, alphas: &[f64], tau: f64, nk: usize) -> Result<QPDecomposition> {
    Ok(QpKernel::new(p, alphas, nk)?.decomposition(tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaddleTime {
    T0,
    TInf,
}

/// `m^(∞)_α(k)` from the dephased symbol, via `log det M^(2) = 2 log(m/4)`.
pub fn m_inf(symbol_inf: &[[c64; 4]; 4], alpha: f64) -> Result<f64> {
    let ld = m_log_determinant(symbol_inf, &[alpha, 0.0])?;
    Ok(4.0 * (0.5 * ld.re).exp())
}

/// Saddle-point coefficient `g^(2)` at early or late times.
pub fn saddle_coefficient(which: SaddleTime, p: &QuenchParamsSSH, nk: usize) -> Result<f64> {
    if p.kappa == 0.0 {
        return Err(Error::Domain("saddle-point asymmetry is ill-defined for kappa = 0".into()));
    }
    let ks = shifted_grid(nk);
    let vals: Vec<f64> = match which {
        SaddleTime::T0 => ks
            .par_iter()
            .map(|&k| ssh_ground_coeffs(k, p.h, p.kappa).map(|m| 16.0 * m.u[0].norm_sqr()))
            .collect::<Result<_>>()?,
        SaddleTime::TInf => {
            let (_, ginf) = ssh_limit_symbols(p, nk)?;
            (0..nk)
                .into_par_iter()
                .map(|m| {
                    let s = grid_mat(&ginf, m);
                    m_inf(&s, 0.0).map(|m0| 4.0 * s[0][3].norm_sqr() / m0)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(pairwise_sum(&vals) / nk as f64)
}

/// `½ log ℓ + ½ log(π g^(2)/2)`; an asymptotic prediction for `ℓ ≫ 1`.
pub fn saddle_asymmetry(which: SaddleTime, p: &QuenchParamsSSH, ell: usize, nk: usize) -> Result<f64> {
    require_unitary(p)?;
    let g = saddle_coefficient(which, p, nk)?;
    Ok(0.5 * (ell as f64).ln() + 0.5 * (std::f64::consts::PI * g / 2.0).ln())
}

/// `∫ dk/2π log det[I + Π_m g_m(k)]`, with flagged factors inverted.
pub fn toeplitz_asymptotic_coefficient(symbols: &[SymbolGrid], inverses: &[bool]) -> Result<f64> {
    let first = symbols.first().ok_or_else(|| Error::Invalid("need at least one symbol".into()))?;
    if inverses.len() != symbols.len() {
        return Err(Error::Invalid("one inverse flag per symbol".into()));
    }
    let (d, n) = (first.d, first.len());
    if symbols.iter().any(|s| s.d != d || s.len() != n) {
        return Err(Error::Invalid("symbols must share block size and grid".into()));
    }
    let vals = (0..n)
        .into_par_iter()
        .map(|m| -> Result<f64> {
            let mut prod = crate::linalg::identity(d);
            for (s, &inv) in symbols.iter().zip(inverses) {
                let g = Mat::from_fn(d, d, |a, b| s.at(m)[a * d + b]);
                let factor = if inv {
                    if log_det(g.as_ref()).ln_abs < -30.0 {
                        return Err(Error::Domain(format!("symbol is not invertible at k = {}", s.ks[m])));
                    }
                    inverse(g.as_ref())
                } else {
                    g
                };
                prod = &prod * &factor;
            }
            let full = Mat::from_fn(d, d, |a, b| prod[(a, b)] + if a == b { 1.0 } else { 0.0 });
            Ok(log_det(full.as_ref()).ln_abs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&vals) / n as f64)
}

/// `e^{iβ m} G(k) e^{-iβ m}` for a symbol grid and per-block charge mask.
pub fn phase_rotated(grid: &SymbolGrid, mask: &[f64], beta: f64) -> SymbolGrid {
    let d = grid.d;
    let mut out = grid.clone();
    for m in 0..grid.len() {
        let src = grid.at(m).to_vec();
        let dst = out.at_mut(m);
        for a in 0..d {
            for b in 0..d {
                dst[a * d + b] = src[a * d + b] * cis(beta * (mask[a] - mask[b]));
            }
        }
    }
    out
}

/// Protocol-1 symbol on the shifted `nk`-grid.
pub fn xy_symbol_grid(p: &QuenchParamsXY, t: f64, nk: usize) -> Result<SymbolGrid> {
    SymbolGrid::from_fn(2, shifted_grid(nk), |k| Ok(xy_symbol(k, t, p)?.matrix().iter().flatten().copied().collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MpembaVerdict {
    /// The first state ends with the smaller asymmetry.
    FirstSmaller,
    SecondSmaller,
    Equal,
    /// Different window widths disagree.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowWeights {
    pub half_width: f64,
    pub first: f64,
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpembaPrediction {
    pub verdict: MpembaVerdict,
    pub windows: Vec<WindowWeights>,
}

pub const DEFAULT_WINDOW: f64 = 0.1 * std::f64::consts::PI;
const WINDOW_SAMPLES: usize = 256;

/// Mean of `|g(k,t)|²` over `|k| < w` plus its mean over `|k - π| < w`.
pub fn slow_mode_weight(p: &QuenchParamsXY, t: f64, half_width: f64) -> Result<f64> {
    let pi = std::f64::consts::PI;
    let mean_on = |lo: f64| -> Result<f64> {
        let vals = (0..WINDOW_SAMPLES)
            .map(|j| {
                let k = lo + (j as f64 + 0.5) * half_width / WINDOW_SAMPLES as f64;
                xy_symbol(k, t, p).map(|s| s.g.norm_sqr())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pairwise_sum(&vals) / WINDOW_SAMPLES as f64)
    };
    // |g|² is even in k, so the half-windows [0, w) and [π - w, π) suffice
    Ok(mean_on(0.0)? + mean_on(pi - half_width)?)
}

/// Predicted late-time asymmetry ordering from the slow-mode pairing content.
pub fn xy_mpemba_criterion(
    p1: &QuenchParamsXY,
    p2: &QuenchParamsXY,
    t: f64,
    half_width: f64,
) -> Result<MpembaPrediction> {
    if p1.gamma != p2.gamma {
        return Err(Error::Invalid("both states must share gamma".into()));
    }
    if !(half_width > 0.0 && half_width <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::Invalid(format!("window half-width {half_width} out of (0, π/2]")));
    }
    let widths = [0.5 * half_width, half_width, (2.0 * half_width).min(std::f64::consts::FRAC_PI_2)];
    let mut windows = Vec::new();
    let mut verdicts = Vec::new();
    for w in widths {
        let a = slow_mode_weight(p1, t, w)?;
        let b = slow_mode_weight(p2, t, w)?;
        let scale = a.abs().max(b.abs());
        verdicts.push(if (a - b).abs() <= 1e-12 * scale || scale == 0.0 {
            MpembaVerdict::Equal
        } else if a < b {
            MpembaVerdict::FirstSmaller
        } else {
            MpembaVerdict::SecondSmaller
        });
        windows.push(WindowWeights { half_width: w, first: a, second: b });
    }
    let verdict = if verdicts.iter().all(|v| *v == verdicts[1]) { verdicts[1] } else { MpembaVerdict::Mixed };
    Ok(MpembaPrediction { verdict, windows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p() -> QuenchParamsSSH {
        QuenchParamsSSH { h: 0.6, kappa: 0.8, h_ev: 0.4, gamma: 0.0 }
    }

    #[test]
    fn pure_symbol_gives_unit_m_determinant_at_zero_charge() {
        let (g0, _) = ssh_limit_symbols(&p(), 64).unwrap();
        for m in [0, 17, 40] {
            let ld = m_log_determinant(&grid_mat(&g0, m), &[0.0, 0.0]).unwrap();
            assert!(ld.norm() < 1e-10);
        }
    }

    #[test]
    fn initial_m_determinant_closed_form() {
        let (g0, _) = ssh_limit_symbols(&p(), 64).unwrap();
        let alpha = 0.9;
        for m in [3, 20, 50] {
            let u1 = ssh_ground_coeffs(g0.ks[m], 0.6, 0.8).unwrap().u[0];
            let ld = m_log_determinant(&grid_mat(&g0, m), &[alpha, 0.0]).unwrap();
            let expect = 2.0 * (1.0 - 4.0 * u1.norm_sqr() * alpha.sin().powi(2)).ln();
            assert!((ld.re - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn late_m_closed_form_at_zero_charge() {
        let (_, ginf) = ssh_limit_symbols(&p(), 64).unwrap();
        for m in [1, 30, 60] {
            let s = grid_mat(&ginf, m);
            let (phi, zeta) = (s[0][1], s[0][3]);
            let closed = 1.0 + zeta.norm_sqr() * (2.0 + zeta.norm_sqr()) + phi.norm_sqr() * (2.0 + phi.norm_sqr())
                - 2.0 * (phi.conj() * phi.conj() * zeta * zeta).re;
            assert!((m_inf(&s, 0.0).unwrap() - closed).abs() < 1e-10);
        }
    }

    #[test]
    fn ratio_vanishes_at_zero_time_and_reduces_to_entropy() {
        let k = QpKernel::new(&p(), &[PI / 3.0, 0.0], 256).unwrap();
        assert_eq!(k.log_ratio(0.0), 0.0);
        let z = QpKernel::new(&p(), &[0.0, 0.0], 256).unwrap();
        for tau in [0.1, 0.5, 2.0] {
            assert!((z.log_ratio(tau) - z.entropy_part(tau)).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_reconstructs_ratio() {
        let k = QpKernel::new(&p(), &[1.1, 0.0], 256).unwrap();
        for tau in [0.0, 0.13, 0.6, 3.0] {
            let d = k.decomposition(tau);
            let lhs = d.b_n + d.b_prime_n;
            assert!((lhs - (k.log_ratio(tau) - k.entropy_part(tau))).abs() < 1e-10);
        }
        let d = k.decomposition(1e6);
        assert!((d.b_n + d.a_n).abs() < 1e-12);
        assert!(d.b_prime_n.abs() > 1e-4);
    }

    #[test]
    fn saddle_rejects_symmetric_state() {
        let q = QuenchParamsSSH { kappa: 0.0, ..p() };
        assert!(matches!(saddle_asymmetry(SaddleTime::T0, &q, 100, 256), Err(Error::Domain(_))));
    }

    #[test]
    fn early_coefficient_tends_to_four_at_large_anisotropy() {
        let q = QuenchParamsSSH { h: 0.6, kappa: 200.0, h_ev: 0.0, gamma: 0.0 };
        let g = saddle_coefficient(SaddleTime::T0, &q, 1024).unwrap();
        assert!((g - 4.0).abs() < 0.05, "{g}");
    }

    #[test]
    fn scalar_symbol_coefficient() {
        let c = 0.7;
        let grid = SymbolGrid::from_fn(2, shifted_grid(16), |_| {
            Ok(vec![c64::new(c, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0), c64::new(c, 0.0)])
        })
        .unwrap();
        let a = toeplitz_asymptotic_coefficient(&[grid.clone()], &[false]).unwrap();
        assert!((a - 2.0 * (1.0 + c).ln()).abs() < 1e-14);
        let pair = toeplitz_asymptotic_coefficient(&[grid.clone(), grid], &[false, true]).unwrap();
        assert!((pair - 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn criterion_equal_and_symmetric_cases() {
        let a = QuenchParamsXY { kappa: 0.6, h: 0.2, gamma: 0.5 };
        assert_eq!(xy_mpemba_criterion(&a, &a, 8.0, DEFAULT_WINDOW).unwrap().verdict, MpembaVerdict::Equal);
        let sym = QuenchParamsXY { kappa: 0.0, h: 0.2, gamma: 0.5 };
        assert_eq!(xy_mpemba_criterion(&sym, &a, 8.0, DEFAULT_WINDOW).unwrap().verdict, MpembaVerdict::FirstSmaller);
    }
}
