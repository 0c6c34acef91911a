use noclick_core::ed::exact_asymmetry;
use noclick_core::gaussian::{renyi_entropy, CorrelationMode};
use noclick_core::linalg::fro_norm;
use noclick_core::protocol::{GaussianEngine, OracleEngine, Protocol};
use noclick_core::ssh::QuenchParamsSSH;
use noclick_core::xy::QuenchParamsXY;

fn compare(protocol: Protocol, l: usize, ell: usize, times: &[f64]) {
    let gauss = GaussianEngine::new(protocol, ell, CorrelationMode::FiniteL { l }).unwrap();
    let exact = OracleEngine::new(protocol, l, ell).unwrap();
    for &t in times {
        let g = gauss.correlation(t).unwrap();
        let e = exact.correlation(t).unwrap();
        let diff = faer::Mat::from_fn(e.nrows(), e.ncols(), |i, j| g.mat[(i, j)] - e[(i, j)]);
        assert!(fro_norm(diff.as_ref()) < 1e-10, "t={t}: correlation mismatch {}", fro_norm(diff.as_ref()));
        let rho = exact.rdm(t).unwrap();
        let ds = gauss.asymmetry(t, 2, 64).unwrap();
        assert!((ds.value - exact_asymmetry(&rho, 2).unwrap()).abs() < 1e-8, "t={t}");
        assert!((renyi_entropy(&g, 2).unwrap() - rho.renyi(2).unwrap()).abs() < 1e-9);
        for alphas in [[0.7, -0.2, 1.9].as_slice(), &[0.3, 1.1, -2.0, 0.4]] {
            let zg = noclick_core::gaussian::charged_moment(&g, alphas).unwrap().value;
            let ze = rho.charged_moment(alphas);
            assert!((zg - ze).norm() < 1e-10, "t={t} alphas={alphas:?}: {zg} vs {ze}");
        }
    }
}

#[test]
fn xy_quench_matches_exact_diagonalization() {
    let p = Protocol::Xy(QuenchParamsXY { kappa: 0.5, h: 0.3, gamma: 0.5 });
    compare(p, 8, 4, &[0.0, 0.5, 1.0, 2.0]);
}

#[test]
fn ssh_quench_matches_exact_diagonalization() {
    let p = Protocol::Ssh(QuenchParamsSSH { h: 0.6, kappa: 0.8, h_ev: 0.0, gamma: 1.0 });
    compare(p, 8, 4, &[0.0, 0.5, 1.0, 2.0]);
}

#[test]
fn ssh_quench_with_dimerized_evolution() {
    let p = Protocol::Ssh(QuenchParamsSSH { h: 0.3, kappa: 0.9, h_ev: 0.5, gamma: 0.8 });
    compare(p, 8, 4, &[0.8, 1.7]);
}
