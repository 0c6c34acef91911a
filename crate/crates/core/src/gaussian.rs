//! Gaussian-state machinery: block-Toeplitz correlation matrices built from
//! a momentum-space symbol, Rényi entropies, charged moments and the
//! Rényi entanglement asymmetry.
//!
//! Charged moments are evaluated as the determinant of an `n·dim` block
//! matrix with `(I-Γ)/2` on the diagonal and `(I+Γ)/2·e^{iα n_A}` on the
//! cyclic off-diagonal. Its determinant equals `Z_n(α)²` and needs no
//! inverse of `I-Γ`, so pure-state symbols (spectrum `±1`) are safe.

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, herm_eigenvalues, hermiticity_defect, log_det, wrap_phase, CMat, LogDet};
use crate::quadrature::{pairwise_sum, pairwise_sum_c, shifted_grid, PhaseTable};
use crate::xy::mode_entropy;

/// Operator ordering of the correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// Per site `(c_j, c_j†)`; entries `2⟨a_a a_b†⟩ - δ_ab`.
    NambuSite,
    /// Per two-site cell `(c_{2j-1}, c_{2j}, c†_{2j-1}, c†_{2j})`; entries `2⟨a_a† a_b⟩ - δ_ab`.
    NambuCell,
}

impl Basis {
    pub fn block(&self) -> usize {
        match self {
            Basis::NambuSite => 2,
            Basis::NambuCell => 4,
        }
    }

    pub fn sites_per_block(&self) -> usize {
        match self {
            Basis::NambuSite => 1,
            Basis::NambuCell => 2,
        }
    }

    /// Charge signature of one block: `-1` on annihilation slots, `+1` on creation slots.
    pub fn mask_block(&self) -> &'static [f64] {
        match self {
            Basis::NambuSite => &[-1.0, 1.0],
            Basis::NambuCell => &[-1.0, -1.0, 1.0, 1.0],
        }
    }
}

/// A `d×d` symbol sampled on a momentum grid, row-major per momentum.
#[derive(Debug, Clone)]
pub struct SymbolGrid {
    pub d: usize,
    pub ks: Vec<f64>,
    pub data: Vec<c64>,
}

impl SymbolGrid {
    pub fn zeros(d: usize, ks: Vec<f64>) -> Self {
        let data = vec![c64::new(0.0, 0.0); ks.len() * d * d];
        Self { d, ks, data }
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn at(&self, m: usize) -> &[c64] {
        let dd = self.d * self.d;
        &self.data[m * dd..(m + 1) * dd]
    }

    pub fn at_mut(&mut self, m: usize) -> &mut [c64] {
        let dd = self.d * self.d;
        &mut self.data[m * dd..(m + 1) * dd]
    }

    pub fn from_fn<F>(d: usize, ks: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Vec<c64>> + Sync,
    {
        let dd = d * d;
        let rows: Vec<Vec<c64>> = ks.par_iter().map(|&k| f(k)).collect::<Result<_>>()?;
        let mut out = Self::zeros(d, ks);
        for (m, row) in rows.into_iter().enumerate() {
            if row.len() != dd {
                return Err(Error::Invalid(format!("symbol returned {} entries, expected {dd}", row.len())));
            }
            out.at_mut(m).copy_from_slice(&row);
        }
        Ok(out)
    }
}

/// How the momentum integral of the symbol is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMode {
    /// Uniform `nk`-point rule approximating the infinite chain.
    Thermodynamic { nk: usize },
    /// Exact sum over the antiperiodic momenta of an `l`-site ring.
    FiniteL { l: usize },
}

/// Subsystem correlation matrix `Γ`.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub basis: Basis,
    /// Subsystem size in sites.
    pub ell: usize,
    pub mat: CMat,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mask(&self) -> Vec<f64> {
        let blocks = self.ell / self.basis.sites_per_block();
        self.basis.mask_block().repeat(blocks)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(self.mat.as_ref())
    }

    pub fn spectrum(&self) -> Result<Vec<f64>> {
        herm_eigenvalues(self.mat.as_ref())
    }
}

fn block_count(basis: Basis, ell: usize) -> Result<usize> {
    if ell == 0 {
        return Err(Error::Invalid("subsystem size must be >= 1".into()));
    }
    if basis == Basis::NambuCell && ell % 2 != 0 {
        return Err(Error::Invalid(format!("cell basis needs an even subsystem size, got {ell}")));
    }
    Ok(ell / basis.sites_per_block())
}

/// Assembles `Γ` from a symbol sampled on the shifted grid.
pub fn correlation_from_grid(grid: &SymbolGrid, basis: Basis, ell: usize) -> Result<CorrelationMatrix> {
    let d = basis.block();
    if grid.d != d {
        return Err(Error::Invalid(format!("symbol block {} does not match basis block {d}", grid.d)));
    }
    let cells = block_count(basis, ell)?;
    let n = grid.len();
    let table = PhaseTable::new(n);
    let inv_n = 1.0 / n as f64;
    let dd = d * d;
    let span = 2 * cells - 1;
    let blocks: Vec<Vec<c64>> = (0..span)
        .into_par_iter()
        .map(|idx| {
            let r = idx as i64 - (cells as i64 - 1);
            let mut acc = vec![c64::new(0.0, 0.0); dd];
            for m in 0..n {
                let ph = table.phase(m, r);
                for (a, g) in acc.iter_mut().zip(grid.at(m)) {
                    *a += ph * g;
                }
            }
            acc.iter().map(|a| a * inv_n).collect()
        })
        .collect();
    let dim = cells * d;
    let mat = Mat::from_fn(dim, dim, |i, j| {
        let (ci, a) = (i / d, i % d);
        let (cj, b) = (j / d, j % d);
        let idx = (ci as i64 - cj as i64 + cells as i64 - 1) as usize;
        blocks[idx][a * d + b]
    });
    Ok(CorrelationMatrix { basis, ell, mat })
}

/// Samples `symbol_fn` on the grid implied by `mode` and assembles `Γ`.
pub fn build_correlation<F>(symbol_fn: F, basis: Basis, ell: usize, mode: CorrelationMode) -> Result<CorrelationMatrix>
where
    F: Fn(f64) -> Result<Vec<c64>> + Sync,
{
    let nk = grid_size(basis, ell, mode)?;
    let grid = SymbolGrid::from_fn(basis.block(), shifted_grid(nk), symbol_fn)?;
    correlation_from_grid(&grid, basis, ell)
}

/// Number of momenta for a given mode; validates ring sizes.
pub fn grid_size(basis: Basis, ell: usize, mode: CorrelationMode) -> Result<usize> {
    block_count(basis, ell)?;
    match mode {
        CorrelationMode::Thermodynamic { nk } => {
            if nk < 2 {
                return Err(Error::Invalid("nk must be >= 2".into()));
            }
            Ok(nk)
        }
        CorrelationMode::FiniteL { l } => {
            if l % 2 != 0 {
                return Err(Error::Invalid(format!("ring size L must be even, got {l}")));
            }
            if l < 2 * ell {
                return Err(Error::Invalid(format!("ring size L = {l} must be at least 2·ell = {}", 2 * ell)));
            }
            Ok(l / basis.sites_per_block())
        }
    }
}

const CLIP: f64 = 1e-12;

/// Rényi entropy `S_n` of the Gaussian state with correlation matrix `Γ`.
/// `n = 1` gives the von Neumann entropy.
pub fn renyi_entropy(g: &CorrelationMatrix, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("Renyi index must be >= 1".into()));
    }
    let spec = g.spectrum()?;
    let vals: Vec<f64> = spec.iter().map(|&nu| mode_entropy(nu.clamp(-1.0 + CLIP, 1.0 - CLIP), n)).collect();
    Ok(0.5 * pairwise_sum(&vals))
}

/// `ln Z_2(β)` where `β = α_1 - α_2`; `Z_2` is real and non-negative.
pub fn log_z2(g: &CorrelationMatrix, beta: f64) -> f64 {
    log_z2_raw(g.mat.as_ref(), &g.mask(), beta)
}

fn log_z2_raw(gm: MatRef<'_, c64>, mask: &[f64], beta: f64) -> f64 {
    let dim = gm.nrows();
    let ph: Vec<c64> = mask.iter().map(|&m| cis(beta * m)).collect();
    let gb = Mat::from_fn(dim, dim, |i, j| gm[(i, j)] * ph[i] * ph[j].conj());
    let prod = gm * &gb;
    let m = Mat::from_fn(dim, dim, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (prod[(i, j)] + id) * 0.5
    });
    0.5 * log_det(m.as_ref()).ln_abs
}

/// `det` of the cyclic block matrix whose determinant is `Z_n(α)²`.
///
/// `deltas[j] = α_j - α_{j+1}` (cyclic). The phase matrices enter in
/// reverse order, which matches `Tr Π_j ρ_A e^{iα_{j,j+1} Q_A}` exactly.
pub fn moment_block_log_det(gm: MatRef<'_, c64>, mask: &[f64], deltas: &[f64]) -> LogDet {
    let n = deltas.len();
    let m = gm.nrows();
    assert_eq!(mask.len(), m, "mask length must match the correlation matrix");
    let x = Mat::from_fn(m, m, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (c64::new(id, 0.0) - gm[(i, j)]) * 0.5
    });
    let p = Mat::from_fn(m, m, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (c64::new(id, 0.0) + gm[(i, j)]) * 0.5
    });
    let mut k = Mat::<c64>::zeros(n * m, n * m);
    for j in 0..n {
        let jn = (j + 1) % n;
        let delta = deltas[n - 1 - j];
        let sign = if jn == 0 { 1.0 } else { -1.0 };
        let ph: Vec<c64> = mask.iter().map(|&s| cis(delta * s) * sign).collect();
        for a in 0..m {
            for b in 0..m {
                k[(j * m + a, j * m + b)] = x[(a, b)];
                k[(j * m + a, jn * m + b)] += p[(a, b)] * ph[b];
            }
        }
    }
    log_det(k.as_ref())
}

fn deltas_of(alphas: &[f64]) -> Vec<f64> {
    let n = alphas.len();
    (0..n).map(|j| alphas[j] - alphas[(j + 1) % n]).collect()
}

/// Charged moment `Z_n(α)`, with its logarithm for underflow-prone cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargedMoment {
    pub value: c64,
    pub log: c64,
}

const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_4;
const MIN_PATH_STEP: f64 = 1e-7;

/// Continues the phase of `det K` along the straight path between two
/// difference vectors, returning the unwrapped phase at the endpoint.
fn continue_phase(gm: MatRef<'_, c64>, mask: &[f64], from: &[f64], from_phase: f64, to: &[f64]) -> (LogDet, f64) {
    let lerp = |s: f64| -> Vec<f64> { from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect() };
    let mut s: f64 = 0.0;
    let mut phase = from_phase;
    let mut step: f64 = 1.0;
    loop {
        let s_next = (s + step).min(1.0);
        let ld = moment_block_log_det(gm, mask, &lerp(s_next));
        let dphi = wrap_phase(ld.phase - wrap_phase(phase));
        if dphi.abs() > MAX_PHASE_STEP && step > MIN_PATH_STEP {
            step *= 0.5;
            continue;
        }
        phase += dphi;
        s = s_next;
        if s >= 1.0 {
            return (ld, phase);
        }
        step = (step * 2.0).min(1.0 - s);
    }
}

fn moment_from_logdet(ld: LogDet, phase: f64) -> ChargedMoment {
    let log = c64::new(0.5 * ld.ln_abs, 0.5 * phase);
    let value = if ld.ln_abs == f64::NEG_INFINITY { c64::new(0.0, 0.0) } else { log.exp() };
    ChargedMoment { value, log }
}

/// `Z_n(α) = Tr Π_j ρ_A e^{i(α_j - α_{j+1}) Q_A}` for `n = alphas.len() ≥ 2`.
///
/// The square-root branch is fixed by continuity from `α = 0`, where the
/// moment equals `Tr ρ_A^n > 0`.
pub fn charged_moment(g: &CorrelationMatrix, alphas: &[f64]) -> Result<ChargedMoment> {
    if alphas.len() < 2 {
        return Err(Error::Invalid("charged moments need at least two replicas".into()));
    }
    let mask = g.mask();
    if alphas.len() == 2 {
        let l = log_z2(g, alphas[0] - alphas[1]);
        return Ok(ChargedMoment { value: c64::new(l.exp(), 0.0), log: c64::new(l, 0.0) });
    }
    let zero = vec![0.0; alphas.len()];
    let (ld, phase) = continue_phase(g.mat.as_ref(), &mask, &zero, 0.0, &deltas_of(alphas));
    Ok(moment_from_logdet(ld, phase))
}

/// Rényi entanglement asymmetry and its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryResult {
    pub value: f64,
    pub n: u32,
    pub ell: usize,
    pub quadrature_points: usize,
    pub residual_estimate: f64,
    /// `S_n(ρ_A)` from the same moments at `α = 0`.
    pub renyi: f64,
}

impl AsymmetryResult {
    pub fn check_residual(&self, tol: f64) -> Result<()> {
        if self.residual_estimate > tol {
            return Err(Error::Quadrature { residual: self.residual_estimate, tol });
        }
        Ok(())
    }
}

pub const DEFAULT_NALPHA_N2: usize = 128;
pub const DEFAULT_NALPHA_N3: usize = 48;

/// `ΔS_A^(n)` by uniform quadrature over the `n-1` independent phase
/// differences; the residual compares the `N_α` grid with its `N_α/2` subgrid.
pub fn entanglement_asymmetry(g: &CorrelationMatrix, n: u32, n_alpha: usize) -> Result<AsymmetryResult> {
    if n < 2 {
        return Err(Error::Invalid("the Gaussian asymmetry needs n >= 2; use the exact oracle for n = 1".into()));
    }
    if n_alpha < 16 || n_alpha % 2 != 0 {
        return Err(Error::Invalid(format!("N_alpha must be even and >= 16, got {n_alpha}")));
    }
    if n == 2 {
        asymmetry_n2(g, n_alpha)
    } else {
        asymmetry_general(g, n, n_alpha)
    }
}

fn asymmetry_n2(g: &CorrelationMatrix, n_alpha: usize) -> Result<AsymmetryResult> {
    let half = n_alpha / 2;
    let mask = g.mask();
    // Z_2(β) is even in β, so only 0..=N/2 is evaluated
    let logs: Vec<f64> = (0..=half)
        .into_par_iter()
        .map(|j| {
            let beta = 2.0 * std::f64::consts::PI * j as f64 / n_alpha as f64;
            log_z2_raw(g.mat.as_ref(), &mask, beta)
        })
        .collect();
    let l0 = logs[0];
    let ratio = |j: usize| (logs[j] - l0).exp();
    let full: Vec<f64> = (0..n_alpha).map(|j| ratio(j.min(n_alpha - j))).collect();
    let sub: Vec<f64> = (0..n_alpha / 2).map(|j| full[2 * j]).collect();
    let mean_full = pairwise_sum(&full) / n_alpha as f64;
    let mean_sub = pairwise_sum(&sub) / sub.len() as f64;
    Ok(AsymmetryResult {
        value: -mean_full.ln(),
        n: 2,
        ell: g.ell,
        quadrature_points: n_alpha,
        residual_estimate: (mean_full.ln() - mean_sub.ln()).abs(),
        renyi: -l0,
    })
}

/// Reflected mixed-radix ordering: consecutive points differ by one step in one coordinate.
fn snake_order(dims: usize, n: usize) -> Vec<Vec<usize>> {
    if dims == 0 {
        return vec![vec![]];
    }
    let inner = snake_order(dims - 1, n);
    let mut out = Vec::with_capacity(inner.len() * n);
    for i in 0..n {
        let forward = i % 2 == 0;
        let iter: Box<dyn Iterator<Item = &Vec<usize>>> =
            if forward { Box::new(inner.iter()) } else { Box::new(inner.iter().rev()) };
        for rest in iter {
            let mut p = Vec::with_capacity(dims);
            p.push(i);
            p.extend_from_slice(rest);
            out.push(p);
        }
    }
    out
}

fn asymmetry_general(g: &CorrelationMatrix, n: u32, n_alpha: usize) -> Result<AsymmetryResult> {
    let dims = n as usize - 1;
    let mask = g.mask();
    let gm = g.mat.as_ref();
    let step = 2.0 * std::f64::consts::PI / n_alpha as f64;
    let to_deltas = |idx: &[usize]| -> Vec<f64> {
        let mut alphas: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
        alphas.push(0.0);
        deltas_of(&alphas)
    };
    let order = snake_order(dims, n_alpha);
    let mut values = std::collections::HashMap::with_capacity(order.len());
    let mut prev = to_deltas(&order[0]);
    let mut prev_phase = 0.0;
    for idx in &order {
        let cur = to_deltas(idx);
        let (ld, phase) = continue_phase(gm, &mask, &prev, prev_phase, &cur);
        values.insert(idx.clone(), moment_from_logdet(ld, phase));
        prev = cur;
        prev_phase = phase;
    }
    let z0 = values[&vec![0usize; dims]];
    let ordered: Vec<c64> = order_lex(dims, n_alpha).iter().map(|idx| values[idx].value / z0.value).collect();
    let sub: Vec<c64> = order_lex(dims, n_alpha / 2)
        .iter()
        .map(|idx| {
            let full: Vec<usize> = idx.iter().map(|i| 2 * i).collect();
            values[&full].value / z0.value
        })
        .collect();
    let mean_full = pairwise_sum_c(&ordered) / ordered.len() as f64;
    let mean_sub = pairwise_sum_c(&sub) / sub.len() as f64;
    let nf = n as f64;
    Ok(AsymmetryResult {
        value: mean_full.re.ln() / (1.0 - nf),
        n,
        ell: g.ell,
        quadrature_points: ordered.len(),
        residual_estimate: ((mean_full.re.ln() - mean_sub.re.ln()) / (1.0 - nf)).abs(),
        renyi: z0.log.re / (1.0 - nf),
    })
}

fn order_lex(dims: usize, n: usize) -> Vec<Vec<usize>> {
    let total = n.pow(dims as u32);
    (0..total)
        .map(|mut i| {
            let mut v = vec![0; dims];
            for d in (0..dims).rev() {
                v[d] = i % n;
                i /= n;
            }
            v
        })
        .collect()
}
