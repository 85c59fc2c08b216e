//! Closed-form solutions of the single-photon ladder.
//!
//! Lossless evolution from `|φ_0⟩⊗|0⟩` is a displaced phonon vacuum mirrored
//! onto the ladder,
//! `amps[n] = e^{-(gt)²/2} (-i gt)^n / √n!`, so herald probabilities are
//! Poisson with mean `(gt)²`. With optical loss the single-photon block decays
//! as `e^{-γt}` without losing its rank-one structure, and the lost weight
//! accumulates in the vacuum block.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ladder::{DensityBlock, LadderState};
use crate::linalg::CMatrix;
use crate::quadrature;
use crate::special::{ln_factorial, poisson_pmf};

/// Absolute tolerance for each vacuum-block coefficient.
pub const BETA_QUAD_TOL: f64 = 1e-12;

/// Above this input amplitude the first-order coherent-state expansion is
/// visibly off.
pub const WEAK_COHERENT_WARN: f64 = 0.3;

/// `(-i)^n`.
fn minus_i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `|(-i gt)^n / √n!|`, in log space.
fn ln_series_magnitude(gt: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else if gt == 0.0 {
        f64::NEG_INFINITY
    } else {
        n as f64 * gt.ln() - 0.5 * ln_factorial(n)
    }
}

fn elapsed(gt: f64, cfg: &SystemConfig) -> f64 {
    if cfg.g > 0.0 {
        gt / cfg.g
    } else {
        gt
    }
}

fn require_reachable_ladder(cfg: &SystemConfig) -> Result<()> {
    if cfg.suppresses_reachable_mode() {
        return Err(Error::Usage(
            "closed forms assume no stop-band on modes m ≤ 0; integrate numerically instead".into(),
        ));
    }
    Ok(())
}

/// Probability of detecting the photon in mode `-j` (and heralding `|j⟩`).
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldProbabilityTable {
    pub gt: f64,
    pub probs: Vec<f64>,
    /// Vacuum (photon lost) plus the weight beyond `n_max`.
    pub no_click: f64,
}

impl HeraldProbabilityTable {
    pub fn total_click(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean_phonon_number(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * p)
            .sum()
    }
}

/// Lossless interaction-picture state at dimensionless time `gt`.
pub fn wavefunction_closed_form(gt: f64, cfg: &SystemConfig) -> Result<LadderState> {
    if cfg.gamma != 0.0 {
        return Err(Error::Usage(
            "wavefunction_closed_form is lossless; use density_closed_form when gamma > 0".into(),
        ));
    }
    require_reachable_ladder(cfg)?;
    let envelope = -0.5 * gt * gt;
    let amps = (0..=cfg.n_max)
        .map(|n| minus_i_pow(n) * (envelope + ln_series_magnitude(gt, n)).exp())
        .collect();
    Ok(LadderState {
        amps,
        vac_amp: Complex64::new(0.0, 0.0),
        t: elapsed(gt, cfg),
    })
}

/// Herald probabilities for `j ≤ n_max`; everything else lands in `no_click`.
pub fn herald_probabilities(gt: f64, cfg: &SystemConfig) -> Result<HeraldProbabilityTable> {
    if !(gt >= 0.0) {
        return Err(Error::Usage(format!("gt must be nonnegative, got {gt}")));
    }
    require_reachable_ladder(cfg)?;
    let survival = (-cfg.loss_exponent(gt)?).exp();
    let mean = gt * gt;
    let probs: Vec<f64> = (0..=cfg.n_max)
        .map(|j| poisson_pmf(mean, j) * survival)
        .collect();
    let no_click = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(HeraldProbabilityTable {
        gt,
        probs,
        no_click,
    })
}

/// First-order weak coherent input `|0⟩ + α|1⟩` in mode 0.
#[derive(Clone, Debug)]
pub struct WeakCoherentBranches {
    /// Weight of the undisturbed vacuum branch; 1 at first order.
    pub vacuum_weight: f64,
    /// `α` times the single-photon evolution.
    pub photon_branch: LadderState,
    pub alpha_in: Complex64,
}

impl WeakCoherentBranches {
    /// Probability of a click in channel `j`, `|α|² P_j` at first order.
    pub fn click_probabilities(&self) -> Vec<f64> {
        self.photon_branch.probabilities()
    }

    /// The two branches as one normalized pure state.
    pub fn normalized_state(&self) -> LadderState {
        let norm = (self.vacuum_weight + self.photon_branch.norm_sqr()).sqrt();
        LadderState {
            amps: self.photon_branch.amps.iter().map(|a| a / norm).collect(),
            vac_amp: Complex64::new(self.vacuum_weight.sqrt() / norm, 0.0),
            t: self.photon_branch.t,
        }
    }
}

pub fn weak_coherent_branch(
    gt: f64,
    alpha_in: Complex64,
    cfg: &SystemConfig,
) -> Result<WeakCoherentBranches> {
    if alpha_in.norm() > WEAK_COHERENT_WARN {
        log::warn!(
            "|alpha_in| = {:.3} exceeds {WEAK_COHERENT_WARN}; the single-photon truncation of the coherent state is inaccurate",
            alpha_in.norm()
        );
    }
    let mut photon_branch = wavefunction_closed_form(gt, cfg)?;
    photon_branch.amps.iter_mut().for_each(|a| *a *= alpha_in);
    Ok(WeakCoherentBranches {
        vacuum_weight: 1.0,
        photon_branch,
        alpha_in,
    })
}

/// `α_{n,n'}` and `β_n` at physical time `t` with loss rate `cfg.gamma`.
pub fn density_closed_form(t: f64, cfg: &SystemConfig) -> Result<DensityBlock> {
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("t must be nonnegative, got {t}")));
    }
    require_reachable_ladder(cfg)?;
    let (g, gamma) = (cfg.g, cfg.gamma);
    let gt = g * t;
    let dim = cfg.dim();
    let weights: Vec<f64> = (0..dim).map(|n| ln_series_magnitude(gt, n)).collect();
    let envelope = -gt * gt - gamma * t;
    let alpha = CMatrix::from_shape_fn((dim, dim), |(n, m)| {
        minus_i_pow(n) * minus_i_pow(m).conj() * (envelope + weights[n] + weights[m]).exp()
    });

    let beta = if gamma == 0.0 {
        vec![0.0; dim]
    } else {
        (0..dim)
            .map(|n| {
                let ln_norm = gamma.ln() - ln_factorial(n);
                let integrand = |tau: f64| {
                    let gtau = g * tau;
                    let power = if n == 0 {
                        0.0
                    } else if gtau == 0.0 {
                        return 0.0;
                    } else {
                        2.0 * n as f64 * gtau.ln()
                    };
                    (ln_norm + power - gtau * gtau - gamma * tau).exp()
                };
                quadrature::integrate(integrand, 0.0, t, BETA_QUAD_TOL).map(|(v, _)| v)
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(DensityBlock { alpha, beta, t })
}

/// Outcome of projecting the optical register onto `|φ_j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalPhonon {
    pub click_probability: f64,
    /// The heralded phonon is the Fock state with this many quanta.
    pub fock: usize,
    pub purity: f64,
}

/// `⟨φ_j|ρ|φ_j⟩ = α_jj |j⟩⟨j|`: the heralded state is exactly `|j⟩` for any loss.
pub fn conditional_phonon_state(rho: &DensityBlock, j: usize) -> Result<ConditionalPhonon> {
    if j > rho.n_max() {
        return Err(Error::Usage(format!(
            "channel {j} is outside the ladder (n_max = {})",
            rho.n_max()
        )));
    }
    Ok(ConditionalPhonon {
        click_probability: rho.alpha[[j, j]].re,
        fock: j,
        purity: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.367_879_441_171_442_3;

    fn lossless(n_max: usize) -> SystemConfig {
        SystemConfig::lossless(1.0, n_max).unwrap()
    }

    #[test]
    fn initial_state_is_the_injected_photon() {
        let psi = wavefunction_closed_form(0.0, &lossless(8)).unwrap();
        assert_eq!(psi.amps[0], Complex64::new(1.0, 0.0));
        assert!(psi.amps[1..].iter().all(|a| a.norm() == 0.0));
        assert_eq!(psi.vac_amp.norm(), 0.0);
    }

    #[test]
    fn unit_time_populations_cross() {
        let psi = wavefunction_closed_form(1.0, &lossless(20)).unwrap();
        assert!((psi.amps[0].norm_sqr() - E_INV).abs() < 1e-15);
        assert!((psi.amps[1].norm_sqr() - E_INV).abs() < 1e-15);
        let ratio = psi.amps[1] / psi.amps[0];
        assert!((ratio - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn lossy_config_is_redirected() {
        let cfg = lossless(8).with_gamma(1.0).unwrap();
        let err = wavefunction_closed_form(1.0, &cfg).unwrap_err();
        assert!(err.to_string().contains("density_closed_form"));
    }

    #[test]
    fn reachable_stop_band_is_rejected() {
        let cfg = lossless(8).with_suppressed([-2]).unwrap();
        assert!(wavefunction_closed_form(1.0, &cfg).is_err());
        assert!(herald_probabilities(1.0, &cfg).is_err());
        let cfg = lossless(8).with_suppressed([2]).unwrap();
        assert!(wavefunction_closed_form(1.0, &cfg).is_ok());
    }

    #[test]
    fn herald_table_at_start_and_unit_time() {
        let t0 = herald_probabilities(0.0, &lossless(10)).unwrap();
        assert_eq!(t0.probs[0], 1.0);
        assert!(t0.probs[1..].iter().all(|&p| p == 0.0));
        assert_eq!(t0.no_click, 0.0);

        let t1 = herald_probabilities(1.0, &lossless(20)).unwrap();
        assert!((t1.probs[2] - 0.183_939_720_585_721_16).abs() < 1e-15);
        assert!((t1.total_click() + t1.no_click - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_scales_every_channel() {
        let cfg = lossless(20).with_gamma(1.0).unwrap();
        let table = herald_probabilities(1.0, &cfg).unwrap();
        let ideal = herald_probabilities(1.0, &lossless(20)).unwrap();
        for (p, q) in table.probs.iter().zip(&ideal.probs) {
            assert!((p - q * E_INV).abs() < 1e-16);
        }
        assert!((table.no_click - (1.0 - E_INV)).abs() < 1e-12);
    }

    #[test]
    fn weak_coherent_scaling() {
        let cfg = lossless(20);
        let zero = weak_coherent_branch(1.0, Complex64::new(0.0, 0.0), &cfg).unwrap();
        assert!(zero.click_probabilities().iter().all(|&p| p == 0.0));
        assert_eq!(zero.normalized_state().vac_amp, Complex64::new(1.0, 0.0));

        let weak = weak_coherent_branch(1.0, Complex64::new(0.1, 0.0), &cfg).unwrap();
        assert!((weak.click_probabilities()[1] - 0.01 * E_INV).abs() < 1e-16);
        assert_eq!(weak.vacuum_weight, 1.0);
        assert!((weak.normalized_state().norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn density_blocks_at_start_and_without_loss() {
        let cfg = lossless(12).with_gamma(2.0).unwrap();
        let rho = density_closed_form(0.0, &cfg).unwrap();
        assert_eq!(rho.alpha[[0, 0]], Complex64::new(1.0, 0.0));
        assert_eq!(rho.trace(), 1.0);
        assert!(rho.beta.iter().all(|&b| b == 0.0));

        let cfg = lossless(12);
        let rho = density_closed_form(0.7, &cfg).unwrap();
        let psi = wavefunction_closed_form(0.7, &cfg).unwrap();
        assert!(rho.beta.iter().all(|&b| b == 0.0));
        for n in 0..=12 {
            for m in 0..=12 {
                let outer = psi.amps[n] * psi.amps[m].conj();
                assert!((rho.alpha[[n, m]] - outer).norm() < 1e-15);
            }
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn vacuum_block_matches_high_precision_quadrature() {
        // 40-digit reference values of γ ∫_0^1 τ^{2n}/n! e^{-τ²-γτ} dτ.
        let cases = [
            (
                1.0,
                [
                    0.507_071_122_418_095_03,
                    0.096_469_521_004_418_102,
                    0.022_794_721_181_127_719,
                    0.004_773_791_772_486_423_4,
                ],
            ),
            (
                3.0,
                [
                    0.844_727_656_659_667_47,
                    0.086_737_784_980_636_181,
                    0.015_425_418_913_920_016,
                    0.002_785_574_371_460_807_2,
                ],
            ),
        ];
        for (gamma, expected) in cases {
            let cfg = lossless(40).with_gamma(gamma).unwrap();
            let rho = density_closed_form(1.0, &cfg).unwrap();
            for (n, b) in expected.iter().enumerate() {
                assert!((rho.beta[n] - b).abs() < 1e-12, "gamma={gamma} n={n}");
            }
            assert!((rho.trace() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn conditional_state_is_the_fock_state() {
        let cfg = lossless(20);
        let rho = density_closed_form(0.0, &cfg).unwrap();
        let c = conditional_phonon_state(&rho, 0).unwrap();
        assert_eq!((c.click_probability, c.fock, c.purity), (1.0, 0, 1.0));

        let rho = density_closed_form(1.0, &cfg).unwrap();
        let c = conditional_phonon_state(&rho, 2).unwrap();
        assert!((c.click_probability - E_INV / 2.0).abs() < 1e-15);
        assert_eq!(c.fock, 2);

        let lossy = cfg.with_gamma(1.0).unwrap();
        let rho = density_closed_form(1.0, &lossy).unwrap();
        let c = conditional_phonon_state(&rho, 2).unwrap();
        assert!((c.click_probability - E_INV / 2.0 * E_INV).abs() < 1e-15);
        assert_eq!((c.fock, c.purity), (2, 1.0));

        assert!(conditional_phonon_state(&rho, 21).is_err());
    }
}
