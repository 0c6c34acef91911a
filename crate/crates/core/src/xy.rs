//! Protocol 1: the XY ground state evolved by the monitored XX chain.
//!
//! Each momentum pair `(k, -k)` carries a two-level state `v|0⟩ + u|k,-k⟩`.
//! Under the no-click XX evolution the amplitudes only pick up phases and
//! an imbalance `e^{±γt/2}`, so the symbol has a closed form.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cis;
use crate::quadrature::{periodic_mean, shifted_grid};

/// Initial `(κ, h)` of the XY Hamiltonian and the measurement rate `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchParamsXY {
    pub kappa: f64,
    pub h: f64,
    pub gamma: f64,
}

impl QuenchParamsXY {
    pub fn new(kappa: f64, h: f64, gamma: f64) -> Result<Self> {
        let p = Self { kappa, h, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.h.is_finite() && self.gamma.is_finite()) {
            return Err(Error::Invalid("XY parameters must be finite".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::Invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Amplitudes of one momentum pair. Stored un-normalized for `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeStateXY {
    pub k: f64,
    pub u: c64,
    pub v: c64,
}

impl ModeStateXY {
    pub fn norm2(&self) -> f64 {
        self.u.norm_sqr() + self.v.norm_sqr()
    }

    /// Symbol entries assembled from the amplitudes.
    pub fn symbol(&self) -> SymbolXY {
        let nrm = self.norm2();
        SymbolXY { n: (self.u.norm_sqr() - self.v.norm_sqr()) / nrm, g: -2.0 * self.u.conj() * self.v / nrm }
    }
}

/// Diagonal occupation function `n(k,t)` and pairing amplitude `g(k,t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolXY {
    pub n: f64,
    pub g: c64,
}

impl SymbolXY {
    /// `[[n, g], [g*, -n]]`.
    pub fn matrix(&self) -> [[c64; 2]; 2] {
        [[c64::new(self.n, 0.0), self.g], [self.g.conj(), c64::new(-self.n, 0.0)]]
    }

    pub fn purity(&self) -> f64 {
        self.n * self.n + self.g.norm_sqr()
    }
}

/// Sign with `sgn(0) = +1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

const SINGULAR_EPS: f64 = 1e-14;

fn dispersion_parts(k: f64, kappa: f64, h: f64) -> Result<(f64, f64, f64)> {
    let c = k.cos() - h;
    let s = kappa * k.sin();
    let r = c.hypot(s);
    if r < SINGULAR_EPS {
        return Err(Error::RemovableSingularity { k });
    }
    Ok((c, s, r))
}

/// Normalized ground-state amplitudes of the XY pair at momentum `k`.
pub fn xy_ground_coeffs(k: f64, kappa: f64, h: f64) -> Result<ModeStateXY> {
    let (c, s, r) = dispersion_parts(k, kappa, h)?;
    // branch on the sign of c to avoid cancellation in c + R or R - c
    let (u, v) = if c >= 0.0 {
        let d = (2.0 * r * (c + r)).sqrt();
        (c64::new(0.0, s / d), c64::new(((c + r) / (2.0 * r)).sqrt(), 0.0))
    } else {
        let d = (2.0 * r * (r - c)).sqrt();
        (c64::new(0.0, sgn(s) * ((r - c) / (2.0 * r)).sqrt()), c64::new(s.abs() / d, 0.0))
    };
    Ok(ModeStateXY { k, u, v })
}

/// Un-normalized amplitudes after time `t` of no-click XX evolution.
pub fn xy_evolve_coeffs(mode: &ModeStateXY, t: f64, gamma: f64) -> ModeStateXY {
    let ph = 2.0 * t * mode.k.cos();
    let grow = (0.5 * gamma * t).exp();
    ModeStateXY { k: mode.k, u: mode.u * cis(-ph) * grow, v: mode.v * cis(ph) / grow }
}

/// `1 - tanh(x)` without cancellation.
fn one_minus_tanh(x: f64) -> f64 {
    let e = (-2.0 * x).exp();
    2.0 * e / (1.0 + e)
}

/// Closed-form symbol of protocol 1 at `(k, t)`.
pub fn xy_symbol(k: f64, t: f64, p: &QuenchParamsXY) -> Result<SymbolXY> {
    let (c, s, r) = dispersion_parts(k, p.kappa, p.h)?;
    let x = p.gamma * t;
    let th = x.tanh();
    let sech = if x.abs() > 350.0 { 0.0 } else { 1.0 / x.cosh() };
    let r_minus_c = if c > 0.0 { s * s / (r + c) } else { r - c };
    if r_minus_c == 0.0 {
        // u = 0: the pair stays empty for all times
        return Ok(SymbolXY { n: -1.0, g: c64::new(0.0, 0.0) });
    }
    let (num, den) = if x >= 0.0 {
        let d = one_minus_tanh(x);
        (r_minus_c - d * r, r_minus_c + d * c)
    } else {
        (th * r - c, r - th * c)
    };
    let n = num / den;
    let g = c64::new(0.0, s) * cis(4.0 * t * k.cos()) * (sech / den);
    Ok(SymbolXY { n, g })
}

/// `|g(k,t;h,κ)|² + |g(k,t;-h,κ)|²`, the Cooper-pair density of the criterion insets.
pub fn cooper_density(k: f64, t: f64, h: f64, kappa: f64, gamma: f64) -> Result<f64> {
    let plus = xy_symbol(k, t, &QuenchParamsXY { kappa, h, gamma })?;
    let minus = xy_symbol(k, t, &QuenchParamsXY { kappa, h: -h, gamma })?;
    Ok(plus.g.norm_sqr() + minus.g.norm_sqr())
}

/// Binary Rényi entropy of a fermionic mode with symbol eigenvalue `±nu`.
pub fn mode_entropy(nu: f64, n: u32) -> f64 {
    let nu = nu.abs().min(1.0);
    let p = 0.5 * (1.0 + nu);
    let q = 0.5 * (1.0 - nu);
    if n == 1 {
        let f = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
        f(p) + f(q)
    } else {
        (p.powi(n as i32) + q.powi(n as i32)).ln() / (1.0 - n as f64)
    }
}

/// Late-time Rényi entropy per site from the dephased occupation function.
///
/// Valid once `t` exceeds the time needed for the pairing terms to
/// dephase across the subsystem (roughly `ℓ / 4` plus a few `1/γ`).
pub fn xy_late_entropy_density(p: &QuenchParamsXY, t: f64, n: u32, nk: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Invalid("Renyi index must be >= 1".into()));
    }
    let coarse = late_density_on(p, t, n, nk / 2)?;
    let fine = late_density_on(p, t, n, nk)?;
    let residual = (fine - coarse).abs();
    let tol = 1e-8_f64.max(1e-6 * fine.abs());
    if residual > tol {
        return Err(Error::Quadrature { residual, tol });
    }
    Ok(fine)
}

fn late_density_on(p: &QuenchParamsXY, t: f64, n: u32, nk: usize) -> Result<f64> {
    let vals = shifted_grid(nk.max(2))
        .into_iter()
        .map(|k| xy_symbol(k, t, p).map(|s| mode_entropy(s.n, n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(periodic_mean(&vals))
}

/// `∫ dk/2π |g(k,0)|²` for the XY ground state.
///
/// Closed form: `|κ|/(1+|κ|)` for `|h| ≤ 1`, and
/// `κ²/(1-κ²)·(|h|/√(h²+κ²-1) - 1)` for `|h| > 1`.
pub fn pairing_weight(kappa: f64, h: f64) -> f64 {
    let ka = kappa.abs();
    if h.abs() <= 1.0 {
        return ka / (1.0 + ka);
    }
    if (1.0 - ka * ka).abs() < 1e-6 {
        return pairing_weight_quadrature(kappa, h, 1 << 14);
    }
    ka * ka / (1.0 - ka * ka) * (h.abs() / (h * h + ka * ka - 1.0).sqrt() - 1.0)
}

/// Same weight by direct quadrature of the ground-state symbol.
pub fn pairing_weight_quadrature(kappa: f64, h: f64, nk: usize) -> f64 {
    let p = QuenchParamsXY { kappa, h, gamma: 0.0 };
    let vals: Vec<f64> =
        shifted_grid(nk).into_iter().filter_map(|k| xy_symbol(k, 0.0, &p).ok().map(|s| s.g.norm_sqr())).collect();
    periodic_mean(&vals)
}

/// Large-ℓ prediction for the initial Rényi asymmetry of the XY ground state.
pub fn xy_initial_asymmetry_prediction(ell: usize, n: u32, kappa: f64, h: f64) -> Result<f64> {
    if kappa == 0.0 {
        return Err(Error::Domain("initial asymmetry prediction is ill-defined for kappa = 0".into()));
    }
    if n < 2 {
        return Err(Error::Domain("prediction requires n >= 2".into()));
    }
    let s = pairing_weight(kappa, h);
    let nf = n as f64;
    Ok(0.5 * (ell as f64).ln() + 0.5 * (std::f64::consts::PI * s * nf.powf(1.0 / (nf - 1.0)) / 4.0).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn ground_coeffs_at_symmetric_point() {
        let m = xy_ground_coeffs(PI / 2.0, 1.0, 0.0).unwrap();
        assert!((m.u - c64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!((m.v - c64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unpaired_mode_is_filled_by_v() {
        let m = xy_ground_coeffs(PI / 4.0, 0.0, 0.0).unwrap();
        assert!(m.u.norm() < 1e-15);
        assert!((m.v.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ground_coeffs_are_normalized() {
        let m = xy_ground_coeffs(1.0, 0.3, 0.5).unwrap();
        assert!((m.norm2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_point_is_reported() {
        assert!(matches!(xy_ground_coeffs(0.0, 0.7, 1.0), Err(Error::RemovableSingularity { .. })));
    }

    #[test]
    fn evolution_identity_and_unitary_moduli() {
        let m = xy_ground_coeffs(0.9, 0.4, 0.2).unwrap();
        let same = xy_evolve_coeffs(&m, 0.0, 0.7);
        assert!((same.u - m.u).norm() < 1e-15 && (same.v - m.v).norm() < 1e-15);
        let unit = xy_evolve_coeffs(&m, 3.3, 0.0);
        assert!((unit.u.norm() - m.u.norm()).abs() < 1e-14);
        assert!((unit.v.norm() - m.v.norm()).abs() < 1e-14);
    }

    #[test]
    fn evolved_weight_against_scalar_exponentials() {
        let m = ModeStateXY { k: PI / 2.0, u: c64::new(FRAC_1_SQRT_2, 0.0), v: c64::new(FRAC_1_SQRT_2, 0.0) };
        let (gamma, t) = (1.0, 2.0);
        let e = xy_evolve_coeffs(&m, t, gamma);
        let frac = e.v.norm_sqr() / e.norm2();
        let up = 0.5 * f64::exp(gamma * t);
        let vp = 0.5 * f64::exp(-gamma * t);
        assert!((frac - vp / (up + vp)).abs() < 1e-14);
    }

    #[test]
    fn symmetric_state_has_no_pairing() {
        let p = QuenchParamsXY { kappa: 0.0, h: 0.3, gamma: 0.4 };
        for k in [0.2, 1.0, 2.5, -1.7] {
            let s = xy_symbol(k, 0.0, &p).unwrap();
            assert_eq!(s.g.norm(), 0.0);
            assert!((s.n + sgn(k.cos() - 0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn late_time_limit_empties_pairing() {
        let p = QuenchParamsXY { kappa: 0.6, h: 0.2, gamma: 0.5 };
        let s = xy_symbol(1.1, 200.0, &p).unwrap();
        assert!((s.n - 1.0).abs() < 1e-12);
        assert!(s.g.norm() < 1e-12);
    }

    #[test]
    fn closed_form_matches_amplitudes() {
        let p = QuenchParamsXY { kappa: 0.5, h: 0.3, gamma: 0.5 };
        let (k, t) = (0.7, 1.3);
        let direct = xy_symbol(k, t, &p).unwrap();
        let m = xy_evolve_coeffs(&xy_ground_coeffs(k, p.kappa, p.h).unwrap(), t, p.gamma);
        let built = m.symbol();
        assert!((direct.n - built.n).abs() < 1e-12);
        assert!((direct.g - built.g).norm() < 1e-12);
    }

    #[test]
    fn cooper_density_cases() {
        assert_eq!(cooper_density(0.4, 2.0, 0.3, 0.0, 0.5).unwrap(), 0.0);
        let even = cooper_density(0.4, 2.0, 0.0, 0.7, 0.5).unwrap();
        let g = xy_symbol(0.4, 2.0, &QuenchParamsXY { kappa: 0.7, h: 0.0, gamma: 0.5 }).unwrap();
        assert!((even - 2.0 * g.g.norm_sqr()).abs() < 1e-15);
        let (k, t) = (0.1, 5.0);
        let y = cooper_density(k, t, 0.5, 0.7, 0.5).unwrap();
        let a = xy_symbol(k, t, &QuenchParamsXY { kappa: 0.7, h: 0.5, gamma: 0.5 }).unwrap();
        let b = xy_symbol(k, t, &QuenchParamsXY { kappa: 0.7, h: -0.5, gamma: 0.5 }).unwrap();
        assert!(y > 0.0);
        assert!((y - a.g.norm_sqr() - b.g.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn mode_entropy_limits() {
        for n in 1..4 {
            assert!(mode_entropy(1.0, n).abs() < 1e-15);
            assert!((mode_entropy(0.0, n) - 2f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn pairing_weight_closed_form_against_quadrature() {
        for (kappa, h) in [(0.8, 0.2), (0.3, -0.9), (1.4, 0.5), (0.5, 1.7), (2.0, -3.0)] {
            let a = pairing_weight(kappa, h);
            let b = pairing_weight_quadrature(kappa, h, 1 << 14);
            assert!((a - b).abs() < 1e-9, "kappa={kappa} h={h}: {a} vs {b}");
        }
    }

    #[test]
    fn pairing_weight_is_continuous_across_unit_field() {
        let eps = 1e-6;
        let lo = pairing_weight(0.6, 1.0 - eps);
        let hi = pairing_weight(0.6, 1.0 + eps);
        assert!((lo - hi).abs() < 1e-3);
    }

    #[test]
    fn prediction_rejects_symmetric_state() {
        assert!(matches!(xy_initial_asymmetry_prediction(100, 2, 0.0, 0.2), Err(Error::Domain(_))));
    }
}
