//! Protocol 2: the dimerized SSH-type ground state evolved by an SSH chain
//! with staggered imaginary potential.
//!
//! Per cell momentum the state lives in a 6-dimensional space spanned by
//! `|0⟩, |k_1,-k_1⟩, |k_2,-k_2⟩, |k_1,-k_2⟩, |k_2,-k_1⟩, |k_1,k_2,-k_1,-k_2⟩`
//! (amplitudes `u_1..u_6`), and the dynamics is a 6×6 linear ODE.

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::SymbolGrid;
use crate::linalg::{cis, czero, eigen, expm, fro_norm, herm_eigen, inverse, CMat};
use crate::quadrature::mirror;

/// Initial `(h, κ)`, the evolution dimerization `h_ev` and the rate `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchParamsSSH {
    pub h: f64,
    pub kappa: f64,
    pub h_ev: f64,
    pub gamma: f64,
}

impl QuenchParamsSSH {
    pub fn new(h: f64, kappa: f64, h_ev: f64, gamma: f64) -> Result<Self> {
        let p = Self { h, kappa, h_ev, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.h, self.kappa, self.h_ev, self.gamma];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid("SSH parameters must be finite".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::Invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

pub fn hopping_a(k: f64, h: f64) -> c64 {
    -cis(k) * (1.0 - 0.5 * h) - c64::new(1.0 + 0.5 * h, 0.0)
}

pub fn pairing_b(k: f64, kappa: f64) -> c64 {
    (cis(k) - 1.0) * kappa
}

/// The 6×6 generator `M` with `i d/dt u = M u`.
pub fn ssh_generator(k: f64, h: f64, kappa: f64, gamma: f64) -> CMat {
    let (a, b) = (hopping_a(k, h), pairing_b(k, kappa));
    let (am, bm) = (hopping_a(-k, h), pairing_b(-k, kappa));
    let z = czero();
    let ig = c64::new(0.0, gamma);
    let rows = [
        [z, z, z, z, b, -bm],
        [z, -ig, z, z, a, am],
        [z, z, ig, z, a, am],
        [z, z, z, z, b, -bm],
        [bm, am, am, bm, z, z],
        [-b, a, a, -b, z, z],
    ];
    Mat::from_fn(6, 6, |i, j| rows[i][j])
}

/// Amplitudes `u_1..u_6` of one cell momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeStateSSH {
    pub k: f64,
    pub u: [c64; 6],
}

impl ModeStateSSH {
    pub fn norm2(&self) -> f64 {
        self.u.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn entries(&self) -> SymbolEntries {
        let n = self.norm2();
        let [u1, u2, u3, u4, u5, u6] = self.u;
        SymbolEntries {
            xi: (-u1.norm_sqr() + u2.norm_sqr() - u3.norm_sqr() + u4.norm_sqr() + u5.norm_sqr() - u6.norm_sqr()) / n,
            phi: (u3 * u5.conj() + u6 * u2.conj()) * (2.0 / n),
            ups: (u1 * u2.conj() + u3 * u4.conj()) * (2.0 / n),
            zeta: (u1 * u5.conj() - u6 * u4.conj()) * (2.0 / n),
        }
    }
}

/// The four independent symbol entries at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolEntries {
    pub xi: f64,
    pub phi: c64,
    pub ups: c64,
    pub zeta: c64,
}

impl SymbolEntries {
    /// 4×4 cell symbol from the entries at `k` and at `-k`.
    pub fn assemble(&self, minus: &SymbolEntries) -> [[c64; 4]; 4] {
        let r = |x: f64| c64::new(x, 0.0);
        let (xi, phi, ups, zeta) = (self.xi, self.phi, self.ups, self.zeta);
        let (xm, pm, zm) = (minus.xi, minus.phi, minus.zeta);
        [
            [r(xi), phi, ups, zeta],
            [phi.conj(), r(-xi), -zm, ups.conj()],
            [ups.conj(), -zm.conj(), r(-xm), -pm.conj()],
            [zeta.conj(), ups, -pm, r(xm)],
        ]
    }
}

/// Full 4×4 symbol at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSSH {
    pub k: f64,
    pub plus: SymbolEntries,
    pub minus: SymbolEntries,
}

impl SymbolSSH {
    pub fn matrix(&self) -> [[c64; 4]; 4] {
        self.plus.assemble(&self.minus)
    }
}

const GAP_TOL: f64 = 1e-10;

fn fix_phase(u: &mut [c64; 6]) {
    let big = u.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(czero());
    if big.norm() > 0.0 {
        let ph = big.conj() / big.norm();
        for x in u.iter_mut() {
            *x *= ph;
        }
    }
}

/// Ground state of `M(k, h, κ, 0)`, with its largest component real and positive.
pub fn ssh_ground_coeffs(k: f64, h: f64, kappa: f64) -> Result<ModeStateSSH> {
    let m = ssh_generator(k, h, kappa, 0.0);
    let (w, v) = herm_eigen(m.as_ref())?;
    let gap = w[1] - w[0];
    if gap < GAP_TOL {
        return Err(Error::DegenerateGround { k, gap });
    }
    let mut u = [czero(); 6];
    for (i, x) in u.iter_mut().enumerate() {
        *x = v[(i, 0)];
    }
    fix_phase(&mut u);
    Ok(ModeStateSSH { k, u })
}

/// Closed-form ground state, up to a global phase.
pub fn ssh_ground_coeffs_closed(k: f64, h: f64, kappa: f64) -> Result<ModeStateSSH> {
    let (a, b) = (hopping_a(k, h), pairing_b(k, kappa));
    let (am, bm) = (hopping_a(-k, h), pairing_b(-k, kappa));
    let f = a * a - b * b;
    let fa = f.norm();
    if fa < 1e-14 {
        return Err(Error::DegenerateGround { k, gap: fa });
    }
    let s = a.norm_sqr() + b.norm_sqr() + fa;
    let lam_min = -(2.0 * s).sqrt();
    let u1 = c64::new(0.0, std::f64::consts::FRAC_1_SQRT_2) * (a * bm).im * s.sqrt() / (am * f + a * fa);
    let u5 = c64::new(0.5 * fa, 0.0) / f;
    let u6 = c64::new(0.5, 0.0);
    let u2 = (u5 * lam_min - bm * u1 * 2.0) / (am * 2.0);
    Ok(ModeStateSSH { k, u: [u1, u2, u2, u1, u5, u6] })
}

/// Un-normalized `e^{-iMt} u(0)` via the eigendecomposition of `M`.
pub fn ssh_evolve_coeffs(mode: &ModeStateSSH, t: f64, h_ev: f64, gamma: f64) -> Result<ModeStateSSH> {
    let ev = SshEvolver::new(mode, h_ev, gamma)?;
    ev.evolve_raw(t)
}

/// Unitary (`γ = 0`) evolution in closed form.
pub fn ssh_evolve_unitary_closed(mode: &ModeStateSSH, h_ev: f64, t: f64) -> ModeStateSSH {
    let a = hopping_a(mode.k, h_ev);
    let eps = a.norm();
    let [u1, u2, _, u4, u5, u6] = mode.u;
    let i = c64::new(0.0, 1.0);
    let (s1, c1) = (t * eps).sin_cos();
    let s2 = (2.0 * t * eps).sin();
    let c2 = (2.0 * t * eps).cos();
    let u2t = (u2 * (2.0 * eps * c2) - i * s2 * (a * u5 + a.conj() * u6)) / (2.0 * eps);
    let e3 = eps * eps * eps;
    let u5t = a.conj() / e3 * (a * eps * u5 * c1 * c1 - a.conj() * (u6 * eps * s1 * s1 + i * s2 * a * u2));
    let u6t = a / e3 * (-a * eps * u5 * s1 * s1 + a.conj() * (u6 * eps * c1 * c1 - i * s2 * a * u2));
    ModeStateSSH { k: mode.k, u: [u1, u2t, u2t, u4, u5t, u6t] }
}

const COND_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
enum Propagator {
    Eigen { lam: [c64; 6], v: CMat, coeffs: [c64; 6], u0: [c64; 6] },
    Expm { step: CMat, generator: CMat, u0: [c64; 6] },
}

/// Precomputed propagation of one mode under `M(k, h_ev, 0, γ)`.
///
/// Uses the eigendecomposition when the eigenvector matrix is well
/// conditioned, and stepped `expm` near exceptional points.
#[derive(Debug, Clone)]
pub struct SshEvolver {
    pub k: f64,
    prop: Propagator,
}

impl SshEvolver {
    pub fn new(mode: &ModeStateSSH, h_ev: f64, gamma: f64) -> Result<Self> {
        let m = ssh_generator(mode.k, h_ev, 0.0, gamma);
        match Self::eigen_path(mode, &m)? {
            Some(prop) => Ok(Self { k: mode.k, prop }),
            None => Ok(Self::with_expm(mode, h_ev, gamma)),
        }
    }

    /// Forces the `expm` propagator.
    pub fn with_expm(mode: &ModeStateSSH, h_ev: f64, gamma: f64) -> Self {
        let m = ssh_generator(mode.k, h_ev, 0.0, gamma);
        let step = expm(Mat::from_fn(6, 6, |i, j| m[(i, j)] * c64::new(0.0, -1.0)).as_ref());
        Self { k: mode.k, prop: Propagator::Expm { step, generator: m, u0: mode.u } }
    }

    fn eigen_path(mode: &ModeStateSSH, m: &CMat) -> Result<Option<Propagator>> {
        let (vals, v) = eigen(m.as_ref())?;
        let vinv = inverse(v.as_ref());
        let cond = fro_norm(v.as_ref()) * fro_norm(vinv.as_ref());
        if !cond.is_finite() || cond > COND_LIMIT {
            return Ok(None);
        }
        let mut lam = [czero(); 6];
        let mut coeffs = [czero(); 6];
        for j in 0..6 {
            lam[j] = vals[j];
            coeffs[j] = (0..6).map(|i| vinv[(j, i)] * mode.u[i]).sum();
        }
        Ok(Some(Propagator::Eigen { lam, v, coeffs, u0: mode.u }))
    }

    pub fn uses_eigen(&self) -> bool {
        matches!(self.prop, Propagator::Eigen { .. })
    }

    /// State at time `t`, rescaled by an arbitrary positive factor.
    fn scaled(&self, t: f64, normalize_growth: bool) -> [c64; 6] {
        match &self.prop {
            Propagator::Eigen { lam, v, coeffs, u0 } => {
                let expo: Vec<c64> = lam.iter().map(|l| c64::new(0.0, -t) * l).collect();
                let shift = if normalize_growth {
                    expo.iter()
                        .zip(coeffs)
                        .filter(|(_, c)| c.norm() > 0.0)
                        .map(|(e, _)| e.re)
                        .fold(f64::NEG_INFINITY, f64::max)
                } else {
                    0.0
                };
                let shift = if shift.is_finite() { shift } else { 0.0 };
                let mut u = [czero(); 6];
                for j in 0..6 {
                    let w = coeffs[j] * (expo[j] - shift).exp();
                    for (i, x) in u.iter_mut().enumerate() {
                        *x += v[(i, j)] * w;
                    }
                }
                // rows 1 and 4 of the generator vanish, so u_1 and u_4 are conserved
                let keep = (-shift).exp();
                u[0] = u0[0] * keep;
                u[3] = u0[3] * keep;
                u
            }
            Propagator::Expm { step, generator, u0 } => {
                let whole = t.floor().max(0.0) as usize;
                let frac = t - whole as f64;
                let mut u = *u0;
                let apply = |m: &CMat, u: &[c64; 6]| -> [c64; 6] {
                    let mut out = [czero(); 6];
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = (0..6).map(|j| m[(i, j)] * u[j]).sum();
                    }
                    out[0] = u[0];
                    out[3] = u[3];
                    out
                };
                for _ in 0..whole {
                    u = apply(step, &u);
                    if normalize_growth {
                        let n = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                        if n > 0.0 {
                            u.iter_mut().for_each(|x| *x /= n);
                        }
                    }
                }
                if frac > 0.0 {
                    let m = Mat::from_fn(6, 6, |i, j| generator[(i, j)] * c64::new(0.0, -frac));
                    u = apply(&expm(m.as_ref()), &u);
                }
                u
            }
        }
    }

    /// Unit-norm state at time `t`.
    pub fn at(&self, t: f64) -> Result<ModeStateSSH> {
        let mut u = self.scaled(t, true);
        let n = u.iter().map(|x| x.norm_sqr()).sum::<f64>();
        if !(n > 1e-250 && n.is_finite()) {
            return Err(Error::NormUnderflow { k: self.k, t });
        }
        let inv = 1.0 / n.sqrt();
        u.iter_mut().for_each(|x| *x *= inv);
        Ok(ModeStateSSH { k: self.k, u })
    }

    /// The un-normalized state `e^{-iMt} u(0)`.
    pub fn evolve_raw(&self, t: f64) -> Result<ModeStateSSH> {
        let u = self.scaled(t, false);
        let n: f64 = u.iter().map(|x| x.norm_sqr()).sum();
        if !(n > 1e-250 && n.is_finite()) {
            return Err(Error::NormUnderflow { k: self.k, t });
        }
        Ok(ModeStateSSH { k: self.k, u })
    }
}

fn ground(k: f64, p: &QuenchParamsSSH) -> Result<ModeStateSSH> {
    ssh_ground_coeffs(k, p.h, p.kappa)
}

/// Symbol of protocol 2 at `(k, t)`.
pub fn ssh_symbol(k: f64, t: f64, p: &QuenchParamsSSH) -> Result<SymbolSSH> {
    let at = |q: f64| -> Result<SymbolEntries> {
        let ev = SshEvolver::new(&ground(q, p)?, p.h_ev, p.gamma)?;
        Ok(ev.at(t)?.entries())
    };
    Ok(SymbolSSH { k, plus: at(k)?, minus: at(-k)? })
}

/// Per-momentum evolvers on a mirror-symmetric grid, for many evaluation times.
pub struct SshSymbolEvaluator {
    ks: Vec<f64>,
    evolvers: Vec<SshEvolver>,
}

impl SshSymbolEvaluator {
    pub fn new(ks: Vec<f64>, p: &QuenchParamsSSH) -> Result<Self> {
        p.validate()?;
        let evolvers =
            ks.par_iter().map(|&k| SshEvolver::new(&ground(k, p)?, p.h_ev, p.gamma)).collect::<Result<Vec<_>>>()?;
        Ok(Self { ks, evolvers })
    }

    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    pub fn entries_at(&self, t: f64) -> Result<Vec<SymbolEntries>> {
        self.evolvers.par_iter().map(|e| e.at(t).map(|m| m.entries())).collect()
    }

    pub fn grid_at(&self, t: f64) -> Result<SymbolGrid> {
        Ok(grid_from_entries(&self.ks, &self.entries_at(t)?))
    }
}

/// Assembles a 4×4 symbol grid; `ks` must satisfy `ks[N-1-m] = -ks[m]`.
pub fn grid_from_entries(ks: &[f64], entries: &[SymbolEntries]) -> SymbolGrid {
    let n = ks.len();
    let mut grid = SymbolGrid::zeros(4, ks.to_vec());
    for m in 0..n {
        let mat = entries[m].assemble(&entries[mirror(m, n)]);
        let slot = grid.at_mut(m);
        for a in 0..4 {
            for b in 0..4 {
                slot[4 * a + b] = mat[a][b];
            }
        }
    }
    grid
}

/// Printed dispersion `√((4 + h² + (4 - h²) cos k)/2 - γ²)` (principal root) and the
/// quasiparticle velocity `2|∂_k ε_k|` of the unitary (`γ = 0`) band.
pub fn ssh_dispersion(k: f64, h_ev: f64, gamma: f64) -> (c64, f64) {
    let a2 = 0.5 * (4.0 + h_ev * h_ev + (4.0 - h_ev * h_ev) * k.cos());
    let eps = c64::new(a2 - gamma * gamma, 0.0).sqrt();
    let e0 = a2.max(0.0).sqrt();
    let slope = if e0 < 1e-12 {
        0.5 * (4.0 - h_ev * h_ev).sqrt() * (0.5 * k).sin().abs()
    } else {
        ((4.0 - h_ev * h_ev) * k.sin() / (4.0 * e0)).abs()
    };
    (eps, 2.0 * slope)
}

/// Rate above which the mode at `k` has a purely growing eigenvalue.
pub fn growth_threshold(k: f64, h_ev: f64) -> f64 {
    2.0 * hopping_a(k, h_ev).norm()
}

/// Largest growth rate `max Im λ` of the evolution generator at `k`.
pub fn growth_rate(k: f64, h_ev: f64, gamma: f64) -> Result<f64> {
    let m = ssh_generator(k, h_ev, 0.0, gamma);
    let (vals, _) = eigen(m.as_ref())?;
    Ok(vals.iter().map(|l| l.im).fold(f64::NEG_INFINITY, f64::max))
}

/// True when the generator at `k` has a growing eigenvalue.
pub fn is_growth_dominated(k: f64, h_ev: f64, gamma: f64) -> Result<bool> {
    let scale = 1.0 + gamma + growth_threshold(k, h_ev);
    Ok(growth_rate(k, h_ev, gamma)? > 1e-7 * scale)
}

/// How a time average was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum AverageMethod {
    Dephasing,
    HannWindow { t0: f64, t1: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverage {
    pub entries: SymbolEntries,
    pub method: AverageMethod,
}

const DEGENERATE_SPLIT: f64 = 1e-6;
const SAME_EIGENVALUE: f64 = 1e-9;

/// Infinite-time average of the `γ = 0` symbol entries at `k`.
///
/// Projects onto the eigenspaces of the unitary generator. If two distinct
/// eigenvalues are closer than `1e-6`, falls back to a Hann-weighted window
/// average over `t ∈ [200, 400]` and reports it.
pub fn ssh_time_averaged_symbol(k: f64, p: &QuenchParamsSSH) -> Result<TimeAverage> {
    if p.gamma != 0.0 {
        return Err(Error::Domain("time averages are defined for the unitary evolution (gamma = 0)".into()));
    }
    let u0 = ground(k, p)?;
    let m = ssh_generator(k, p.h_ev, 0.0, 0.0);
    let (w, v) = herm_eigen(m.as_ref())?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..6 {
        match groups.last_mut() {
            Some(g) if (w[i] - w[*g.last().unwrap()]).abs() < SAME_EIGENVALUE => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let near_degenerate = groups.windows(2).any(|g| (w[g[1][0]] - w[*g[0].last().unwrap()]).abs() < DEGENERATE_SPLIT);
    if near_degenerate {
        let (t0, t1, dt) = (200.0, 400.0, 0.05);
        let entries = ssh_window_average(k, p, t0, t1, dt)?;
        return Ok(TimeAverage { entries, method: AverageMethod::HannWindow { t0, t1, dt } });
    }
    // R = Σ_λ P_λ u0 u0† P_λ holds the dephased bilinears ⟨u_a u_b*⟩
    let mut r = [[czero(); 6]; 6];
    for g in &groups {
        let mut pu = [czero(); 6];
        for &j in g {
            let overlap: c64 = (0..6).map(|i| v[(i, j)].conj() * u0.u[i]).sum();
            for (i, x) in pu.iter_mut().enumerate() {
                *x += v[(i, j)] * overlap;
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                r[a][b] += pu[a] * pu[b].conj();
            }
        }
    }
    let n: f64 = (0..6).map(|a| r[a][a].re).sum();
    let d = |a: usize| r[a - 1][a - 1].re;
    let o = |a: usize, b: usize| r[a - 1][b - 1];
    let entries = SymbolEntries {
        xi: (-d(1) + d(2) - d(3) + d(4) + d(5) - d(6)) / n,
        phi: (o(3, 5) + o(6, 2)) * (2.0 / n),
        ups: (o(1, 2) + o(3, 4)) * (2.0 / n),
        zeta: (o(1, 5) - o(6, 4)) * (2.0 / n),
    };
    Ok(TimeAverage { entries, method: AverageMethod::Dephasing })
}

/// Hann-weighted average of the symbol entries over `[t0, t1]`.
pub fn ssh_window_average(k: f64, p: &QuenchParamsSSH, t0: f64, t1: f64, dt: f64) -> Result<SymbolEntries> {
    if !(t1 > t0 && dt > 0.0) {
        return Err(Error::Invalid("window needs t1 > t0 and dt > 0".into()));
    }
    let ev = SshEvolver::new(&ground(k, p)?, p.h_ev, p.gamma)?;
    let steps = ((t1 - t0) / dt).round() as usize;
    let mut acc = (0.0, czero(), czero(), czero());
    let mut wsum = 0.0;
    for s in 0..=steps {
        let x = s as f64 / steps as f64;
        let w = (std::f64::consts::PI * x).sin().powi(2);
        if w == 0.0 {
            continue;
        }
        let e = ev.at(t0 + x * (t1 - t0))?.entries();
        acc.0 += w * e.xi;
        acc.1 += e.phi * w;
        acc.2 += e.ups * w;
        acc.3 += e.zeta * w;
        wsum += w;
    }
    Ok(SymbolEntries { xi: acc.0 / wsum, phi: acc.1 / wsum, ups: acc.2 / wsum, zeta: acc.3 / wsum })
}

/// Leading coefficient `ζ̃(k) = lim ζ(k,t)·e^{g_k t}` in the growth regime,
/// where `g_k` is the growth rate of the dominant eigenvalue.
pub fn ssh_zeta_tilde(k: f64, p: &QuenchParamsSSH) -> Result<c64> {
    if !is_growth_dominated(k, p.h_ev, p.gamma)? {
        return Err(Error::Domain(format!(
            "k = {k} is not growth-dominated at gamma = {} (threshold {:.6})",
            p.gamma,
            growth_threshold(k, p.h_ev)
        )));
    }
    let u0 = ground(k, p)?;
    let m = ssh_generator(k, p.h_ev, 0.0, p.gamma);
    let (vals, v) = eigen(m.as_ref())?;
    let vinv = inverse(v.as_ref());
    let coeff = |j: usize| -> c64 { (0..6).map(|i| vinv[(j, i)] * u0.u[i]).sum() };
    let d = (0..6).max_by(|&a, &b| vals[a].im.total_cmp(&vals[b].im)).expect("six eigenvalues");
    let cd = coeff(d);
    let dom: Vec<c64> = (0..6).map(|i| v[(i, d)] * cd).collect();
    let dom_norm: f64 = dom.iter().map(|x| x.norm_sqr()).sum();
    if dom_norm < 1e-300 {
        return Err(Error::Domain(format!("k = {k}: the growing mode is not populated")));
    }
    let scale = 1.0 + p.gamma + growth_threshold(k, p.h_ev);
    let mut w = [czero(); 6];
    for j in (0..6).filter(|&j| vals[j].norm() < 1e-7 * scale) {
        let cj = coeff(j);
        for (i, x) in w.iter_mut().enumerate() {
            *x += v[(i, j)] * cj;
        }
    }
    Ok((w[0] * dom[4].conj() - dom[5] * w[3].conj()) * (2.0 / dom_norm))
}
