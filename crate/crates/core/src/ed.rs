//! Exact diagonalization on the full `2^L` Fock space.
//!
//! Basis states are occupation bitstrings with site 0 the least significant
//! bit; `c_i` carries the Jordan-Wigner sign `(-1)^{#occupied sites < i}`.
//! The subsystem `A` is sites `0..ℓ`, i.e. the low bits.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, czero, eigen, expm, fro_norm, herm_eigen, herm_eigenvalues, inverse, CMat};

pub const MAX_SITES: usize = 12;

/// Many-body state in the occupation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub l: usize,
    pub amps: Vec<c64>,
}

impl FockState {
    pub fn norm2(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn normalized(mut self) -> Result<Self> {
        let n = self.norm2();
        if !(n > 1e-280 && n.is_finite()) {
            return Err(Error::NormUnderflow { k: f64::NAN, t: f64::NAN });
        }
        let inv = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }
}

/// Hamiltonians and no-click generators of both protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EdHamiltonian {
    XyInit { kappa: f64, h: f64 },
    XxEvolve { gamma: f64 },
    SshInit { h: f64, kappa: f64 },
    SshEvolve { h_ev: f64, gamma: f64 },
}

#[derive(Clone, Copy)]
enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// `coef · ops[0] ops[1] ...`, applied right to left.
#[derive(Clone)]
struct Term {
    coef: c64,
    ops: Vec<Ladder>,
}

impl Term {
    fn adjoint(&self) -> Term {
        let ops = self
            .ops
            .iter()
            .rev()
            .map(|o| match *o {
                Ladder::Create(i) => Ladder::Annihilate(i),
                Ladder::Annihilate(i) => Ladder::Create(i),
            })
            .collect();
        Term { coef: self.coef.conj(), ops }
    }
}

fn jw_sign(s: usize, i: usize) -> f64 {
    if (s & ((1usize << i) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn apply_ladder(op: Ladder, s: usize) -> Option<(f64, usize)> {
    match op {
        Ladder::Create(i) if s >> i & 1 == 0 => Some((jw_sign(s, i), s | 1 << i)),
        Ladder::Annihilate(i) if s >> i & 1 == 1 => Some((jw_sign(s, i), s ^ 1 << i)),
        _ => None,
    }
}

fn apply_term(term: &Term, s: usize) -> Option<(f64, usize)> {
    let mut sign = 1.0;
    let mut cur = s;
    for op in term.ops.iter().rev() {
        let (sg, next) = apply_ladder(*op, cur)?;
        sign *= sg;
        cur = next;
    }
    Some((sign, cur))
}

fn hop(i: usize, j: usize, coef: f64) -> Term {
    Term { coef: c64::new(coef, 0.0), ops: vec![Ladder::Create(i), Ladder::Annihilate(j)] }
}

fn pair(i: usize, j: usize, coef: f64) -> Term {
    Term { coef: c64::new(coef, 0.0), ops: vec![Ladder::Create(i), Ladder::Create(j)] }
}

fn number(i: usize, coef: c64) -> Term {
    Term { coef, ops: vec![Ladder::Create(i), Ladder::Annihilate(i)] }
}

fn with_adjoints(terms: Vec<Term>) -> Vec<Term> {
    let adj: Vec<Term> = terms.iter().map(Term::adjoint).collect();
    terms.into_iter().chain(adj).collect()
}

/// XY chain with antiperiodic boundary `c_{L+1} = -c_1`.
fn xy_terms(l: usize, kappa: f64, h: f64) -> Vec<Term> {
    let mut hermitian = Vec::new();
    let mut diag = Vec::new();
    for j in 0..l {
        let (b, s) = if j + 1 < l { (j + 1, 1.0) } else { (0, -1.0) };
        hermitian.push(hop(j, b, -s));
        hermitian.push(pair(j, b, -s * kappa));
        diag.push(number(j, c64::new(2.0 * h, 0.0)));
    }
    let mut out = with_adjoints(hermitian);
    out.extend(diag);
    out
}

/// Dimerized chain with the explicit boundary terms of the two-site-cell model.
fn ssh_terms(l: usize, h: f64, kappa: f64) -> Vec<Term> {
    let mut t = Vec::new();
    for j in 1..=l / 2 {
        t.push(hop(2 * j - 2, 2 * j - 1, -(1.0 + 0.5 * h)));
    }
    for j in 1..l / 2 {
        t.push(hop(2 * j - 1, 2 * j, -(1.0 - 0.5 * h)));
    }
    for j in 2..=l {
        t.push(pair(j - 2, j - 1, -kappa));
    }
    t.push(hop(l - 1, 0, 1.0 - 0.5 * h));
    t.push(pair(l - 1, 0, kappa));
    with_adjoints(t)
}

fn terms_for(ham: EdHamiltonian, l: usize) -> Vec<Term> {
    match ham {
        EdHamiltonian::XyInit { kappa, h } => xy_terms(l, kappa, h),
        EdHamiltonian::XxEvolve { gamma } => {
            let mut t = xy_terms(l, 0.0, 0.0);
            t.extend((0..l).map(|j| number(j, c64::new(0.0, -0.5 * gamma))));
            t
        }
        EdHamiltonian::SshInit { h, kappa } => ssh_terms(l, h, kappa),
        EdHamiltonian::SshEvolve { h_ev, gamma } => {
            let mut t = ssh_terms(l, h_ev, 0.0);
            // 1-based even sites gain, odd sites lose
            t.extend((0..l).map(|j| {
                let s = if j % 2 == 1 { 0.5 } else { -0.5 };
                number(j, c64::new(0.0, s * gamma))
            }));
            t
        }
    }
}

pub fn check_size(l: usize) -> Result<()> {
    if l > MAX_SITES {
        return Err(Error::Invalid(format!("ED supports L <= {MAX_SITES}, got {l}")));
    }
    if l < 2 || l % 2 != 0 {
        return Err(Error::Invalid(format!("ED needs an even L >= 2, got {l}")));
    }
    Ok(())
}

/// Dense `2^L × 2^L` matrix of a Hamiltonian or no-click generator.
pub fn build_hamiltonian(ham: EdHamiltonian, l: usize) -> Result<CMat> {
    check_size(l)?;
    let dim = 1usize << l;
    let mut m = Mat::<c64>::zeros(dim, dim);
    for term in terms_for(ham, l) {
        for s in 0..dim {
            if let Some((sign, out)) = apply_term(&term, s) {
                m[(out, s)] += term.coef * sign;
            }
        }
    }
    Ok(m)
}

/// Total number operator, diagonal in the occupation basis.
pub fn number_operator(l: usize) -> Vec<f64> {
    (0..1usize << l).map(|s| s.count_ones() as f64).collect()
}

const ED_GAP_TOL: f64 = 1e-9;

/// Lowest eigenvector of a Hermitian Hamiltonian; errors on a degenerate ground state.
pub fn ground_state(h: &CMat, l: usize) -> Result<(FockState, f64)> {
    let (w, v) = herm_eigen(h.as_ref())?;
    if w.len() > 1 && w[1] - w[0] < ED_GAP_TOL {
        return Err(Error::Domain(format!("degenerate many-body ground state (gap {:.3e})", w[1] - w[0])));
    }
    let amps = (0..w.len()).map(|i| v[(i, 0)]).collect();
    Ok((FockState { l, amps }, w[0]))
}

const ED_COND_LIMIT: f64 = 1e10;

/// Cached propagator `e^{-iGt}` for one generator.
pub struct NoClickPropagator {
    l: usize,
    kind: PropKind,
}

enum PropKind {
    Eigen { lam: Vec<c64>, v: CMat, vinv: CMat },
    Expm { gen: CMat },
}

impl NoClickPropagator {
    pub fn new(gen: &CMat, l: usize) -> Result<Self> {
        let (lam, v) = eigen(gen.as_ref())?;
        let vinv = inverse(v.as_ref());
        let cond = fro_norm(v.as_ref()) * fro_norm(vinv.as_ref());
        let kind = if cond.is_finite() && cond < ED_COND_LIMIT {
            PropKind::Eigen { lam, v, vinv }
        } else {
            PropKind::Expm { gen: gen.clone() }
        };
        Ok(Self { l, kind })
    }

    pub fn uses_eigen(&self) -> bool {
        matches!(self.kind, PropKind::Eigen { .. })
    }

    /// `e^{-iGt}|ψ⟩` scaled by `e^{-shift}`; the shift is returned so the raw norm can be recovered.
    fn propagate(&self, psi: &FockState, t: f64) -> (FockState, f64) {
        let dim = psi.amps.len();
        match &self.kind {
            PropKind::Eigen { lam, v, vinv } => {
                let coeffs: Vec<c64> = (0..dim).map(|j| (0..dim).map(|i| vinv[(j, i)] * psi.amps[i]).sum()).collect();
                let expo: Vec<c64> = lam.iter().map(|l| c64::new(0.0, -t) * l).collect();
                let shift = expo
                    .iter()
                    .zip(&coeffs)
                    .filter(|(_, c)| c.norm() > 1e-300)
                    .map(|(e, _)| e.re)
                    .fold(f64::NEG_INFINITY, f64::max);
                let shift = if shift.is_finite() { shift } else { 0.0 };
                let w: Vec<c64> = coeffs.iter().zip(&expo).map(|(c, e)| c * (e - shift).exp()).collect();
                let amps = (0..dim).map(|i| (0..dim).map(|j| v[(i, j)] * w[j]).sum()).collect();
                (FockState { l: self.l, amps }, shift)
            }
            PropKind::Expm { gen } => {
                let a = Mat::from_fn(dim, dim, |i, j| gen[(i, j)] * c64::new(0.0, -t));
                let e = expm(a.as_ref());
                let amps = (0..dim).map(|i| (0..dim).map(|j| e[(i, j)] * psi.amps[j]).sum()).collect();
                (FockState { l: self.l, amps }, 0.0)
            }
        }
    }

    /// Normalized no-click state at time `t`.
    pub fn at(&self, psi: &FockState, t: f64) -> Result<FockState> {
        if t < 0.0 {
            return Err(Error::Invalid(format!("t must be >= 0, got {t}")));
        }
        self.propagate(psi, t).0.normalized()
    }

    /// Un-normalized `e^{-iGt}|ψ⟩`.
    pub fn at_raw(&self, psi: &FockState, t: f64) -> FockState {
        let (mut s, shift) = self.propagate(psi, t);
        let f = shift.exp();
        s.amps.iter_mut().for_each(|a| *a *= f);
        s
    }
}

/// `e^{-iGt}|ψ⟩ / ‖·‖`.
pub fn evolve_noclick(psi: &FockState, gen: &CMat, t: f64) -> Result<FockState> {
    NoClickPropagator::new(gen, psi.l)?.at(psi, t)
}

fn apply_op(op: Ladder, psi: &[c64]) -> Vec<c64> {
    let mut out = vec![czero(); psi.len()];
    for (s, a) in psi.iter().enumerate() {
        if let Some((sign, t)) = apply_ladder(op, s) {
            out[t] += a * sign;
        }
    }
    out
}

fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Site-basis correlation matrix `2⟨a_a a_b†⟩ - δ_ab` with `a = (c_j, c_j†)`.
pub fn correlation_site(psi: &FockState, ell: usize) -> CMat {
    // a_a† ψ for every slot
    let vecs: Vec<Vec<c64>> =
        (0..ell).flat_map(|j| [Ladder::Create(j), Ladder::Annihilate(j)]).map(|op| apply_op(op, &psi.amps)).collect();
    gram(&vecs)
}

/// Cell-basis correlation matrix `2⟨a_a† a_b⟩ - δ_ab`, `a = (c_{2j}, c_{2j+1}, c†_{2j}, c†_{2j+1})`.
pub fn correlation_cell(psi: &FockState, ell: usize) -> CMat {
    let vecs: Vec<Vec<c64>> = (0..ell / 2)
        .flat_map(|j| {
            [Ladder::Annihilate(2 * j), Ladder::Annihilate(2 * j + 1), Ladder::Create(2 * j), Ladder::Create(2 * j + 1)]
        })
        .map(|op| apply_op(op, &psi.amps))
        .collect();
    gram(&vecs)
}

fn gram(vecs: &[Vec<c64>]) -> CMat {
    let d = vecs.len();
    Mat::from_fn(d, d, |a, b| {
        let id = if a == b { 1.0 } else { 0.0 };
        inner(&vecs[a], &vecs[b]) * 2.0 - id
    })
}

/// `ρ_A` on the first `ℓ` sites.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub ell: usize,
    pub mat: CMat,
}

fn charges(ell: usize) -> Vec<u32> {
    (0..1usize << ell).map(|s| s.count_ones()).collect()
}

impl ReducedDensityMatrix {
    pub fn from_state(psi: &FockState, ell: usize) -> Result<Self> {
        if ell == 0 || ell > psi.l {
            return Err(Error::Invalid(format!("need 1 <= ell <= L, got {ell}")));
        }
        let da = 1usize << ell;
        let db = 1usize << (psi.l - ell);
        let nrm = psi.norm2();
        let mat = Mat::from_fn(da, da, |a, b| {
            let mut acc = czero();
            for r in 0..db {
                acc += psi.amps[a + da * r] * psi.amps[b + da * r].conj();
            }
            acc / nrm
        });
        Ok(Self { ell, mat })
    }

    pub fn trace(&self) -> c64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn spectrum(&self) -> Result<Vec<f64>> {
        herm_eigenvalues(self.mat.as_ref())
    }

    pub fn renyi(&self, n: u32) -> Result<f64> {
        renyi_of(&self.spectrum()?, n)
    }

    /// `Σ_q Π_q ρ Π_q`.
    pub fn decohere(&self) -> Self {
        let q = charges(self.ell);
        let mat =
            Mat::from_fn(
                self.mat.nrows(),
                self.mat.ncols(),
                |a, b| {
                    if q[a] == q[b] {
                        self.mat[(a, b)]
                    } else {
                        czero()
                    }
                },
            );
        Self { ell: self.ell, mat }
    }

    /// `(1/N) Σ_j e^{-iα_j Q} ρ e^{iα_j Q}` on `N` uniform nodes.
    pub fn decohere_fourier(&self, nodes: usize) -> Self {
        let q = charges(self.ell);
        let mat = Mat::from_fn(self.mat.nrows(), self.mat.ncols(), |a, b| {
            let dq = q[a] as f64 - q[b] as f64;
            let mut acc = czero();
            for j in 0..nodes {
                let alpha = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
                acc += cis(-alpha * dq);
            }
            self.mat[(a, b)] * acc / nodes as f64
        });
        Self { ell: self.ell, mat }
    }

    /// `Tr Π_j ρ e^{i(α_j - α_{j+1}) Q}`.
    pub fn charged_moment(&self, alphas: &[f64]) -> c64 {
        let n = alphas.len();
        let q = charges(self.ell);
        let d = self.mat.nrows();
        let mut acc = crate::linalg::identity(d);
        for j in 0..n {
            let a = alphas[j] - alphas[(j + 1) % n];
            let step = Mat::from_fn(d, d, |r, c| self.mat[(r, c)] * cis(a * q[c] as f64));
            acc = &acc * &step;
        }
        (0..d).map(|i| acc[(i, i)]).sum()
    }
}

fn renyi_of(spec: &[f64], n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("Renyi index must be >= 1".into()));
    }
    let p: Vec<f64> = spec.iter().copied().filter(|&x| x > 1e-15).collect();
    if n == 1 {
        return Ok(-p.iter().map(|x| x * x.ln()).sum::<f64>());
    }
    Ok(p.iter().map(|x| x.powi(n as i32)).sum::<f64>().ln() / (1.0 - n as f64))
}

/// `S_n(Σ_q Π_q ρ Π_q) - S_n(ρ)`; `n = 1` is von Neumann.
pub fn exact_asymmetry(rho: &ReducedDensityMatrix, n: u32) -> Result<f64> {
    Ok(rho.decohere().renyi(n)? - rho.renyi(n)?)
}

/// State on `L` sites after ground-state preparation and `t` of no-click evolution.
pub struct EdQuench {
    pub l: usize,
    pub psi0: FockState,
    prop: NoClickPropagator,
}

impl EdQuench {
    pub fn new(init: EdHamiltonian, evolve: EdHamiltonian, l: usize) -> Result<Self> {
        let h0 = build_hamiltonian(init, l)?;
        let (psi0, _) = ground_state(&h0, l)?;
        let gen = build_hamiltonian(evolve, l)?;
        let prop = NoClickPropagator::new(&gen, l)?;
        Ok(Self { l, psi0, prop })
    }

    pub fn state_at(&self, t: f64) -> Result<FockState> {
        self.prop.at(&self.psi0, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_guard() {
        assert!(build_hamiltonian(EdHamiltonian::XxEvolve { gamma: 0.0 }, 14).is_err());
        assert!(build_hamiltonian(EdHamiltonian::XxEvolve { gamma: 0.0 }, 5).is_err());
    }

    #[test]
    fn symmetric_xy_conserves_number() {
        let h = build_hamiltonian(EdHamiltonian::XyInit { kappa: 0.0, h: 0.0 }, 4).unwrap();
        let q = number_operator(4);
        for i in 0..16 {
            for j in 0..16 {
                assert!((h[(i, j)] * (q[j] - q[i])).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn xx_generator_loss_part_is_number_operator() {
        let g = build_hamiltonian(EdHamiltonian::XxEvolve { gamma: 0.8 }, 4).unwrap();
        let q = number_operator(4);
        for i in 0..16 {
            for j in 0..16 {
                let anti = (g[(i, j)] - g[(j, i)].conj()) * 0.5;
                let expect = if i == j { c64::new(0.0, -0.4 * q[i]) } else { czero() };
                assert!((anti - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn unitary_evolution_keeps_norm_and_energy() {
        let g = build_hamiltonian(EdHamiltonian::XxEvolve { gamma: 0.0 }, 6).unwrap();
        let h0 = build_hamiltonian(EdHamiltonian::XyInit { kappa: 0.5, h: 0.3 }, 6).unwrap();
        let (psi, _) = ground_state(&h0, 6).unwrap();
        let p = NoClickPropagator::new(&g, 6).unwrap();
        let raw = p.at_raw(&psi, 2.5);
        assert!((raw.norm2() - 1.0).abs() < 1e-12);
        let energy = |s: &FockState| -> f64 {
            let hs: Vec<c64> = (0..64).map(|i| (0..64).map(|j| g[(i, j)] * s.amps[j]).sum()).collect();
            inner(&s.amps, &hs).re
        };
        assert!((energy(&psi) - energy(&raw)).abs() < 1e-10);
        let same = p.at(&psi, 0.0).unwrap();
        assert!(same.amps.iter().zip(&psi.amps).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn diagonal_rdm_has_no_asymmetry() {
        let mut amps = vec![czero(); 16];
        amps[0b0101] = c64::new(0.6, 0.0);
        amps[0b1010] = c64::new(0.0, 0.8);
        let psi = FockState { l: 4, amps };
        let rho = ReducedDensityMatrix::from_state(&psi, 2).unwrap();
        for n in 1..4 {
            assert!(exact_asymmetry(&rho, n).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn bell_pair_asymmetry_is_log2() {
        let mut amps = vec![czero(); 4];
        amps[0b00] = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0b11] = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = FockState { l: 2, amps };
        let rho = ReducedDensityMatrix::from_state(&psi, 2).unwrap();
        assert!((exact_asymmetry(&rho, 2).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn decoherence_is_idempotent() {
        let h0 = build_hamiltonian(EdHamiltonian::XyInit { kappa: 0.5, h: 0.3 }, 6).unwrap();
        let (psi, _) = ground_state(&h0, 6).unwrap();
        let rho = ReducedDensityMatrix::from_state(&psi, 3).unwrap();
        let once = rho.decohere();
        let twice = once.decohere();
        let diff = Mat::from_fn(8, 8, |i, j| once.mat[(i, j)] - twice.mat[(i, j)]);
        assert!(fro_norm(diff.as_ref()) < 1e-14);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
}
