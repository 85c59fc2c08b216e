//! Readout of the heralded phonon through an optical register.
//!
//! A stop-band on some mode `j > 0` leaves the single-photon dynamics alone
//! (the photon never climbs above `m = 0`) and isolates the anti-Stokes
//! transition of mode `j + 1`. A strong pump there drives the linearized
//! beam splitter `H = g_bs (a† b + a b†)` between the phonon and the readout
//! mode `j + 2`: pulse area `2 g_bs T = π` swaps the two, `π/2` splits 50/50.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::integrator::{integrate_schrodinger, IntegratorSpec};
use crate::ladder::{kron, phonon_lowering, LadderState};
use crate::linalg::{dagger, expm, max_abs_diff, CMatrix, I};

/// Stop-band invariance threshold.
pub const STOP_BAND_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct StopBandReport {
    pub mode: i64,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Integrates the single-photon trajectory over `gt ∈ [0, 2]` with and without
/// a stop-band on mode `j` and compares them elementwise.
pub fn validate_stop_band(cfg: &SystemConfig, j: i64) -> Result<StopBandReport> {
    if j <= 0 {
        return Err(Error::Usage(format!(
            "stop-band on mode {j} is not covered: the single-photon state occupies every mode m ≤ 0, \
             so only modes j > 0 can be suppressed without changing the dynamics"
        )));
    }
    stop_band_deviation(cfg, j).map(|max_deviation| StopBandReport {
        mode: j,
        max_deviation,
        pass: max_deviation < STOP_BAND_TOL,
    })
}

/// Largest amplitude difference caused by suppressing mode `m`, for any `m`.
pub fn stop_band_deviation(cfg: &SystemConfig, mode: i64) -> Result<f64> {
    if cfg.g <= 0.0 {
        return Err(Error::Usage("stop-band check needs g > 0".into()));
    }
    let base = cfg.clone().with_gamma(0.0)?;
    let mut modes = base.suppressed_modes.clone();
    modes.remove(&mode);
    let without = base.clone().with_suppressed(modes.iter().copied())?;
    modes.insert(mode);
    let with = base.with_suppressed(modes)?;

    let grid = IntegratorSpec::uniform_grid(0.0, 2.0 / cfg.g, 41);
    let spec = IntegratorSpec::rk4(grid);
    let psi0 = LadderState::single_photon(cfg.n_max);
    let a = integrate_schrodinger(&psi0, &without, &spec)?;
    let b = integrate_schrodinger(&psi0, &with, &spec)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| max_abs_diff(&x.amps, &y.amps))
        .fold(0.0, f64::max))
}

/// Rectangular beam-splitter pulse between the phonon and one optical mode.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSpec {
    pub target_optical_mode: i64,
    pub pump_mode: i64,
    /// `2 g_bs T`, radians.
    pub area: f64,
    /// Beam-splitter rate `g_bs`.
    pub coupling: f64,
    duration: f64,
}

impl PulseSpec {
    /// Pulse pumping `target - 1` into `target`. The pump must border a
    /// stop-band at `target - 2 > 0`, and neither pump nor target may be
    /// suppressed.
    pub fn new(
        target_optical_mode: i64,
        area: f64,
        coupling: f64,
        cfg: &SystemConfig,
    ) -> Result<Self> {
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::config("area", "must be positive"));
        }
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::config("coupling", "must be positive"));
        }
        let pump_mode = target_optical_mode - 1;
        let stop_band = pump_mode - 1;
        if cfg.is_suppressed(pump_mode) || cfg.is_suppressed(target_optical_mode) {
            return Err(Error::Usage(format!(
                "pump mode {pump_mode} and target mode {target_optical_mode} must not be suppressed"
            )));
        }
        if stop_band <= 0 || !cfg.is_suppressed(stop_band) {
            return Err(Error::Usage(format!(
                "pump mode {pump_mode} must border a stop-band on mode {stop_band} > 0"
            )));
        }
        Ok(PulseSpec {
            target_optical_mode,
            pump_mode,
            area,
            coupling,
            duration: area / (2.0 * coupling),
        })
    }

    /// Readout pulse for a stop-band on mode `j`: pump `j+1`, target `j+2`.
    pub fn for_stop_band(j: i64, area: f64, coupling: f64, cfg: &SystemConfig) -> Result<Self> {
        PulseSpec::new(j + 2, area, coupling, cfg)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// `g_bs T`.
    pub fn mixing_angle(&self) -> f64 {
        self.coupling * self.duration
    }
}

/// Joint phonon ⊗ readout-mode state, `amps[[n_ph, n_opt]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutRegister {
    pub amps: CMatrix,
    pub trunc_tol: f64,
}

impl ReadoutRegister {
    /// Phonon in `phonon`, readout mode in vacuum.
    pub fn from_phonon(phonon: &[Complex64], trunc_tol: f64) -> Result<Self> {
        let dim = phonon.len();
        let norm: f64 = crate::linalg::norm_sqr(phonon);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Usage(format!(
                "phonon state has norm² {norm}, expected 1"
            )));
        }
        let mut amps = CMatrix::zeros((dim, dim));
        for (n, a) in phonon.iter().enumerate() {
            amps[[n, 0]] = *a;
        }
        Ok(ReadoutRegister { amps, trunc_tol })
    }

    pub fn fock(j: usize, n_max: usize, trunc_tol: f64) -> Result<Self> {
        if j > n_max {
            return Err(Error::Usage(format!(
                "Fock level {j} exceeds n_max = {n_max}"
            )));
        }
        let mut phonon = vec![Complex64::new(0.0, 0.0); n_max + 1];
        phonon[j] = Complex64::new(1.0, 0.0);
        ReadoutRegister::from_phonon(&phonon, trunc_tol)
    }

    pub fn n_max(&self) -> usize {
        self.amps.nrows() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Distribution of `n_ph + n_opt`.
    pub fn quanta_distribution(&self) -> Vec<f64> {
        let d = self.amps.nrows();
        let mut out = vec![0.0; 2 * d - 1];
        for ((k, n), a) in self.amps.indexed_iter() {
            out[k + n] += a.norm_sqr();
        }
        out
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &ReadoutRegister) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }
}

/// Beam-splitter generator `a† b + a b†` on the full truncated joint space,
/// index `n_ph * (n_max + 1) + n_opt`.
pub fn beam_splitter_generator(n_max: usize) -> CMatrix {
    let b = phonon_lowering(n_max);
    let a = phonon_lowering(n_max);
    let id = CMatrix::eye(n_max + 1);
    let b_joint = kron(&b, &id);
    let a_joint = kron(&id, &a);
    dagger(&a_joint).dot(&b_joint) + a_joint.dot(&dagger(&b_joint))
}

/// Evolves the register under `exp(-i g_bs T (a† b + a b†))`.
///
/// The generator conserves `n_ph + n_opt`, so each total-quanta sector is
/// exponentiated on its own. Sectors above `n_max` are cut by the truncation
/// and must carry less than `trunc_tol`.
pub fn apply_beam_splitter_pulse(
    register: &ReadoutRegister,
    pulse: &PulseSpec,
) -> Result<ReadoutRegister> {
    let n_max = register.n_max();
    let quanta = register.quanta_distribution();
    let truncated: f64 = quanta[n_max + 1..].iter().sum();
    if truncated >= register.trunc_tol {
        return Err(Error::Truncation {
            leakage: truncated,
            tol: register.trunc_tol,
            t: 0.0,
        });
    }

    let theta = pulse.mixing_angle();
    let mut out = CMatrix::zeros(register.amps.dim());
    for total in 0..=2 * n_max {
        // Phonon numbers k with both k and total - k inside the box.
        let k_lo = total.saturating_sub(n_max);
        let k_hi = total.min(n_max);
        let size = k_hi - k_lo + 1;
        let mut gen = CMatrix::zeros((size, size));
        for k in k_lo + 1..=k_hi {
            // b lowers the phonon, a† raises the readout mode.
            let w = ((k * (total - k + 1)) as f64).sqrt();
            let (i, j) = (k - 1 - k_lo, k - k_lo);
            gen[[i, j]] = -I * theta * w;
            gen[[j, i]] = -I * theta * w;
        }
        let u = expm(&gen);
        for row in 0..size {
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..size {
                let k = k_lo + col;
                acc += u[[row, col]] * register.amps[[k, total - k]];
            }
            let k = k_lo + row;
            out[[k, total - k]] = acc;
        }
    }
    Ok(ReadoutRegister {
        amps: out,
        trunc_tol: register.trunc_tol,
    })
}

/// Photon-number distribution of the readout mode.
pub fn readout_statistics(register: &ReadoutRegister) -> Vec<f64> {
    register
        .amps
        .columns()
        .into_iter()
        .map(|c| c.iter().map(Complex64::norm_sqr).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn readout_cfg() -> SystemConfig {
        SystemConfig::lossless(1.0, 30)
            .unwrap()
            .with_suppressed([1])
            .unwrap()
    }

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
    }

    #[test]
    fn stop_band_validation() {
        let cfg = SystemConfig::lossless(1.0, 30).unwrap();
        for j in [1, 2] {
            let report = validate_stop_band(&cfg, j).unwrap();
            assert!(report.pass, "j = {j}: {}", report.max_deviation);
        }
        let err = validate_stop_band(&cfg, 0).unwrap_err();
        assert!(err.to_string().contains("j > 0"));
    }

    #[test]
    fn pulse_validation() {
        let cfg = readout_cfg();
        let pulse = PulseSpec::for_stop_band(1, std::f64::consts::PI, 2.0, &cfg).unwrap();
        assert_eq!((pulse.pump_mode, pulse.target_optical_mode), (2, 3));
        assert!((pulse.duration() - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert!((pulse.mixing_angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

        assert!(PulseSpec::new(3, 0.0, 1.0, &cfg).is_err());
        assert!(PulseSpec::new(3, 1.0, -1.0, &cfg).is_err());
        // No stop-band below the pump.
        assert!(PulseSpec::new(4, 1.0, 1.0, &cfg).is_err());
        // Target inside a stop-band.
        let cfg2 = cfg.clone().with_suppressed([1, 3]).unwrap();
        assert!(PulseSpec::new(3, 1.0, 1.0, &cfg2).is_err());
        // Stop-band at m = 0 does not count.
        let cfg3 = SystemConfig::lossless(1.0, 5)
            .unwrap()
            .with_suppressed([0])
            .unwrap();
        assert!(PulseSpec::new(2, 1.0, 1.0, &cfg3).is_err());
    }

    #[test]
    fn vacuum_stays_vacuum() {
        let cfg = readout_cfg();
        let reg = ReadoutRegister::fock(0, 6, 1e-12).unwrap();
        let pulse = PulseSpec::for_stop_band(1, 1.234, 1.0, &cfg).unwrap();
        let out = apply_beam_splitter_pulse(&reg, &pulse).unwrap();
        assert!((out.amps[[0, 0]].norm() - 1.0).abs() < TOL);
        assert_eq!(readout_statistics(&out)[0], out.amps[[0, 0]].norm_sqr());
    }

    #[test]
    fn pi_pulse_swaps_two_phonons_into_the_readout_mode() {
        let cfg = readout_cfg();
        let reg = ReadoutRegister::fock(2, 6, 1e-12).unwrap();
        let pulse = PulseSpec::for_stop_band(1, std::f64::consts::PI, 1.0, &cfg).unwrap();
        let out = apply_beam_splitter_pulse(&reg, &pulse).unwrap();
        let stats = readout_statistics(&out);
        assert!((stats[2] - 1.0).abs() < TOL);
        let phonon_vacuum: f64 = out.amps.row(0).iter().map(Complex64::norm_sqr).sum();
        assert!((phonon_vacuum - 1.0).abs() < TOL);
    }

    #[test]
    fn half_pulse_splits_one_phonon() {
        let cfg = readout_cfg();
        let reg = ReadoutRegister::fock(1, 5, 1e-12).unwrap();
        let pulse = PulseSpec::for_stop_band(1, std::f64::consts::FRAC_PI_2, 0.7, &cfg).unwrap();
        let stats = readout_statistics(&apply_beam_splitter_pulse(&reg, &pulse).unwrap());
        assert!((stats[0] - 0.5).abs() < TOL);
        assert!((stats[1] - 0.5).abs() < TOL);
    }

    #[test]
    fn block_evolution_matches_full_dense_exponential_and_binomial_amplitudes() {
        let cfg = readout_cfg();
        let n_max = 4;
        let pulse = PulseSpec::for_stop_band(1, 1.1, 1.0, &cfg).unwrap();
        let theta = pulse.mixing_angle();
        let u = expm(&beam_splitter_generator(n_max).mapv(|z| -I * theta * z));
        let d = n_max + 1;
        for n in 0..=n_max {
            let reg = ReadoutRegister::fock(n, n_max, 1e-12).unwrap();
            let out = apply_beam_splitter_pulse(&reg, &pulse).unwrap();
            let column = u.column(n * d);
            for k in 0..d {
                for m in 0..d {
                    assert!((out.amps[[k, m]] - column[k * d + m]).norm() < TOL);
                }
            }
            // |n,0⟩ → Σ_m √C(n,m) cos^{n-m}θ (-i sin θ)^m |n-m, m⟩
            for m in 0..=n {
                let amp = binomial(n, m).sqrt()
                    * theta.cos().powi((n - m) as i32)
                    * theta.sin().powi(m as i32);
                let phase = (-I).powu(m as u32);
                assert!((out.amps[[n - m, m]] - phase * amp).norm() < TOL);
            }
        }
    }

    #[test]
    fn occupied_truncated_sector_is_refused() {
        let cfg = readout_cfg();
        let pulse = PulseSpec::for_stop_band(1, 1.0, 1.0, &cfg).unwrap();
        let mut reg = ReadoutRegister::fock(0, 3, 1e-12).unwrap();
        reg.amps[[0, 0]] = Complex64::new(0.0, 0.0);
        reg.amps[[2, 2]] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            apply_beam_splitter_pulse(&reg, &pulse),
            Err(Error::Truncation { .. })
        ));
    }
}
