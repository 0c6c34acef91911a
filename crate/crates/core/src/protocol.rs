//! Protocol-level glue: from quench parameters to correlation matrices,
//! for both the Gaussian engine and the exact oracle.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::ed::{correlation_cell, correlation_site, EdHamiltonian, EdQuench, FockState};
use crate::error::{Error, Result};
use crate::gaussian::{
    correlation_from_grid, entanglement_asymmetry, grid_size, AsymmetryResult, Basis, CorrelationMatrix,
    CorrelationMode, SymbolGrid,
};
use crate::linalg::CMat;
use crate::quadrature::shifted_grid;
use crate::ssh::{QuenchParamsSSH, SshSymbolEvaluator};
use crate::xy::{xy_symbol, QuenchParamsXY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum Protocol {
    Xy(QuenchParamsXY),
    Ssh(QuenchParamsSSH),
}

impl Protocol {
    pub fn basis(&self) -> Basis {
        match self {
            Protocol::Xy(_) => Basis::NambuSite,
            Protocol::Ssh(_) => Basis::NambuCell,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Protocol::Xy(p) => p.gamma,
            Protocol::Ssh(p) => p.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Protocol::Xy(p) => p.validate(),
            Protocol::Ssh(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Xy(_) => "xy",
            Protocol::Ssh(_) => "ssh",
        }
    }

    fn ed_hamiltonians(&self) -> (EdHamiltonian, EdHamiltonian) {
        match *self {
            Protocol::Xy(p) => {
                (EdHamiltonian::XyInit { kappa: p.kappa, h: p.h }, EdHamiltonian::XxEvolve { gamma: p.gamma })
            }
            Protocol::Ssh(p) => (
                EdHamiltonian::SshInit { h: p.h, kappa: p.kappa },
                EdHamiltonian::SshEvolve { h_ev: p.h_ev, gamma: p.gamma },
            ),
        }
    }
}

/// Symbol sampler and `Γ` builder for one protocol, subsystem size and grid.
pub struct GaussianEngine {
    pub protocol: Protocol,
    pub ell: usize,
    ks: Vec<f64>,
    ssh: Option<SshSymbolEvaluator>,
}

impl GaussianEngine {
    pub fn new(protocol: Protocol, ell: usize, mode: CorrelationMode) -> Result<Self> {
        protocol.validate()?;
        let nk = grid_size(protocol.basis(), ell, mode)?;
        let ks = shifted_grid(nk);
        let ssh = match protocol {
            Protocol::Ssh(p) => Some(SshSymbolEvaluator::new(ks.clone(), &p)?),
            Protocol::Xy(_) => None,
        };
        Ok(Self { protocol, ell, ks, ssh })
    }

    pub fn symbol_grid(&self, t: f64) -> Result<SymbolGrid> {
        match (&self.protocol, &self.ssh) {
            (_, Some(ev)) => ev.grid_at(t),
            (Protocol::Xy(p), None) => SymbolGrid::from_fn(2, self.ks.clone(), |k| {
                let s = xy_symbol(k, t, p)?;
                Ok(s.matrix().iter().flatten().copied().collect::<Vec<c64>>())
            }),
            (Protocol::Ssh(_), None) => Err(Error::Invalid("SSH evaluator missing".into())),
        }
    }

    pub fn correlation(&self, t: f64) -> Result<CorrelationMatrix> {
        correlation_from_grid(&self.symbol_grid(t)?, self.protocol.basis(), self.ell)
    }

    pub fn asymmetry(&self, t: f64, n: u32, n_alpha: usize) -> Result<AsymmetryResult> {
        entanglement_asymmetry(&self.correlation(t)?, n, n_alpha)
    }
}

/// Exact-diagonalization counterpart of [`GaussianEngine`] on an `L`-site ring.
pub struct OracleEngine {
    pub protocol: Protocol,
    pub ell: usize,
    quench: EdQuench,
}

impl OracleEngine {
    pub fn new(protocol: Protocol, l: usize, ell: usize) -> Result<Self> {
        protocol.validate()?;
        grid_size(protocol.basis(), ell, CorrelationMode::FiniteL { l })?;
        let (init, evolve) = protocol.ed_hamiltonians();
        Ok(Self { protocol, ell, quench: EdQuench::new(init, evolve, l)? })
    }

    pub fn state(&self, t: f64) -> Result<FockState> {
        self.quench.state_at(t)
    }

    pub fn correlation(&self, t: f64) -> Result<CMat> {
        let psi = self.state(t)?;
        Ok(match self.protocol.basis() {
            Basis::NambuSite => correlation_site(&psi, self.ell),
            Basis::NambuCell => correlation_cell(&psi, self.ell),
        })
    }

    pub fn rdm(&self, t: f64) -> Result<crate::ed::ReducedDensityMatrix> {
        crate::ed::ReducedDensityMatrix::from_state(&self.state(t)?, self.ell)
    }
}
