use num_complex::Complex64;

use fbs_herald::analytic::{wavefunction_closed_form, weak_coherent_branch};
use fbs_herald::herald::{click_distribution, post_click_state, DetectorModel};
use fbs_herald::integrator::{integrate_lindblad, integrate_schrodinger, IntegratorSpec};
use fbs_herald::{DensityBlock, LadderState, SystemConfig};

const E_INV: f64 = 0.367_879_441_171_442_3;

#[test]
fn weak_coherent_click_probability_matches_integrated_branch() {
    let cfg = SystemConfig::lossless(1.0, 30).unwrap();
    let alpha = Complex64::new(0.1, 0.0);
    let branches = weak_coherent_branch(1.0, alpha, &cfg).unwrap();
    let table = click_distribution(&branches, &DetectorModel::ideal(), &cfg);
    assert!((table.genuine[1] - 0.01 * E_INV).abs() < 1e-14);

    // The vacuum branch does not evolve, so the photon branch is α times the
    // integrated single-photon state.
    let psi = &integrate_schrodinger(
        &LadderState::single_photon(30),
        &cfg,
        &IntegratorSpec::rk4(vec![1.0]),
    )
    .unwrap()[0];
    let p1 = (alpha * psi.amps[1]).norm_sqr();
    assert!((p1 - table.genuine[1]).abs() < 1e-10);

    let state = branches.normalized_state();
    assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    let rho = DensityBlock::from_pure(&state);
    for j in 0..4 {
        let report = post_click_state(&rho, j).unwrap();
        assert!((report.fidelity - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lossy_integration_from_a_mixed_start() {
    // Restart the lossy evolution halfway; the result must agree with one run.
    let cfg = SystemConfig::lossless(1.0, 30)
        .unwrap()
        .with_gamma(1.0)
        .unwrap();
    let rho0 = DensityBlock::single_photon(30);
    let whole = integrate_lindblad(&rho0, &cfg, &IntegratorSpec::rk4(vec![2.0])).unwrap();
    let half = integrate_lindblad(&rho0, &cfg, &IntegratorSpec::rk4(vec![1.0])).unwrap();
    let rest = integrate_lindblad(&half[0], &cfg, &IntegratorSpec::rk4(vec![2.0])).unwrap();
    let diff = whole[0]
        .alpha
        .iter()
        .zip(rest[0].alpha.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10);
    assert!((whole[0].beta[0] - rest[0].beta[0]).abs() < 1e-10);
}

#[test]
fn closed_form_is_reachable_only_without_lower_stop_bands() {
    let cfg = SystemConfig::lossless(1.0, 10)
        .unwrap()
        .with_suppressed([-2])
        .unwrap();
    assert!(wavefunction_closed_form(1.0, &cfg).is_err());
    // The integrator still runs: the photon is trapped above the stop-band.
    let traj = integrate_schrodinger(
        &LadderState::single_photon(10),
        &cfg,
        &IntegratorSpec::rk4(vec![1.0, 2.0]),
    )
    .unwrap();
    for s in &traj {
        let trapped: f64 = s.probabilities()[..2].iter().sum();
        assert!((trapped - 1.0).abs() < 1e-12);
    }
}
