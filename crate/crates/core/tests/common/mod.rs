#![allow(dead_code)]

use faer::c64;
use noclick_core::gaussian::{correlation_from_grid, Basis, CorrelationMatrix, SymbolGrid};
use noclick_core::quadrature::shifted_grid;
use proptest::prelude::*;

/// Site-basis symbol `[[n, g], [g*, -n]]` with even `n`, odd `g` and
/// `n² + |g|² ≤ 1` on the whole circle: a valid Gaussian state.
#[derive(Debug, Clone)]
pub struct RandomSymbol {
    pub even: Vec<f64>,
    pub odd: Vec<(f64, f64)>,
    pub radius: f64,
    pub ell: usize,
}

pub fn random_symbol() -> impl Strategy<Value = RandomSymbol> {
    (
        prop::collection::vec(-1.0..1.0f64, 1..5),
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..5),
        0.05..1.0f64,
        2usize..9,
    )
        .prop_map(|(even, odd, radius, ell)| RandomSymbol { even, odd, radius, ell })
}

impl RandomSymbol {
    fn raw(&self, k: f64) -> (f64, c64) {
        let n: f64 = self.even.iter().enumerate().map(|(m, a)| a * (m as f64 * k).cos()).sum();
        let g: c64 =
            self.odd.iter().enumerate().map(|(m, &(re, im))| c64::new(re, im) * ((m + 1) as f64 * k).sin()).sum();
        (n, g)
    }

    pub fn grid(&self, nk: usize, anomalous: bool) -> SymbolGrid {
        let ks = shifted_grid(nk);
        let peak = ks
            .iter()
            .map(|&k| {
                let (n, g) = self.raw(k);
                (n * n + g.norm_sqr()).sqrt()
            })
            .fold(1e-300, f64::max);
        let s = self.radius / peak;
        SymbolGrid::from_fn(2, ks, |k| {
            let (n, g) = self.raw(k);
            let g = if anomalous { g * s } else { c64::new(0.0, 0.0) };
            let n = n * s;
            Ok(vec![c64::new(n, 0.0), g, g.conj(), c64::new(-n, 0.0)])
        })
        .expect("symbol grid")
    }

    pub fn correlation(&self, nk: usize, anomalous: bool) -> CorrelationMatrix {
        correlation_from_grid(&self.grid(nk, anomalous), Basis::NambuSite, self.ell).expect("correlation")
    }
}
