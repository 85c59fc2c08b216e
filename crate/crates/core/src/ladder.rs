//! The single-excitation sector of the optical ladder coupled to one phonon mode.
//!
//! A photon injected into mode `m = 0` only ever scatters downward, and each
//! Stokes step creates one phonon, so the reachable joint states are
//! `|φ_n⟩ ⊗ |n⟩_ph` where `|φ_n⟩` puts the photon in mode `m = -n`. States are
//! stored by the phonon number `n`; the mode index is derived as `-n`.
//!
//! Everything here is in the interaction picture unless stated otherwise. The
//! free Hamiltonian is `ħω_p` on the whole sector and only contributes the
//! global phase `e^{-iω_p t}`, see [`LadderState::in_lab_frame`].

use ndarray::Array2;
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, I};
use crate::special::poisson_pmf;

/// Ladder mode occupied by the photon when the phonon holds `n` quanta.
pub fn mode_of_level(n: usize) -> i64 {
    -(n as i64)
}

/// Smallest `N ≥ 1` whose Poisson tail `Σ_{n ≥ N} e^{-μ} μ^n / n!`, with
/// `μ = gt_max²`, is below `trunc_tol`.
///
/// The tail includes level `N` itself, so the exact lossless state satisfies
/// `|amps[N]|² < trunc_tol` at every `gt ≤ gt_max`.
pub fn choose_n_max(gt_max: f64, trunc_tol: f64) -> usize {
    let mean = gt_max.max(0.0).powi(2);
    // Past the mean the pmf decays at least geometrically; this upper limit
    // leaves the neglected remainder far below any f64 tolerance.
    let top = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize;
    let pmf: Vec<f64> = (0..=top).map(|n| poisson_pmf(mean, n)).collect();
    let mut tail = vec![0.0; top + 2];
    for n in (0..=top).rev() {
        tail[n] = tail[n + 1] + pmf[n];
    }
    (1..=top).find(|&n| tail[n] < trunc_tol).unwrap_or(top + 1)
}

/// Pure state of the sector: `amps[n]` multiplies `|φ_n⟩⊗|n⟩_ph` and
/// `vac_amp` multiplies `|vac⟩⊗|0⟩_ph`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderState {
    pub amps: Vec<Complex64>,
    pub vac_amp: Complex64,
    pub t: f64,
}

impl LadderState {
    /// One photon in mode 0, phonon in its ground state, at `t = 0`.
    pub fn single_photon(n_max: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); n_max + 1];
        amps[0] = Complex64::new(1.0, 0.0);
        LadderState {
            amps,
            vac_amp: Complex64::new(0.0, 0.0),
            t: 0.0,
        }
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vac_amp.norm_sqr() + crate::linalg::norm_sqr(&self.amps)
    }

    /// Joint probabilities `|amps[n]|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn check_dim(&self, cfg: &SystemConfig) -> Result<()> {
        if self.amps.len() != cfg.dim() {
            return Err(Error::Dimension {
                expected: cfg.dim(),
                found: self.amps.len(),
            });
        }
        Ok(())
    }

    /// Weight on the top retained level, the quantity the truncation guard
    /// bounds by `trunc_tol`.
    pub fn boundary_weight(&self) -> f64 {
        self.amps.last().map_or(0.0, Complex64::norm_sqr)
    }

    /// Restores the free evolution: the photon branch picks up `e^{-iω_p t}`
    /// relative to the vacuum.
    pub fn in_lab_frame(&self, cfg: &SystemConfig) -> LadderState {
        let phase = (-I * cfg.omega_p * self.t).exp();
        LadderState {
            amps: self.amps.iter().map(|a| a * phase).collect(),
            vac_amp: self.vac_amp,
            t: self.t,
        }
    }
}

/// Time derivative of a [`LadderState`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub amps: Vec<Complex64>,
    pub vac_amp: Complex64,
}

/// Interaction-picture coupling `K` on `len` levels: `K[n][n+1] = K[n+1][n] =
/// g√(n+1)` unless the link touches a suppressed mode. The generator is `-iK`.
pub fn coupling_matrix(cfg: &SystemConfig, len: usize) -> Array2<f64> {
    let mut k = Array2::zeros((len, len));
    for n in 0..len.saturating_sub(1) {
        if cfg.link_active(n) {
            let w = cfg.g * ((n + 1) as f64).sqrt();
            k[[n, n + 1]] = w;
            k[[n + 1, n]] = w;
        }
    }
    k
}

/// Writes `-i K amps` into `out` for a ladder of any length. Links past the
/// last level are absent.
pub(crate) fn interaction_rhs(cfg: &SystemConfig, amps: &[Complex64], out: &mut [Complex64]) {
    let len = amps.len();
    out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for n in 0..len.saturating_sub(1) {
        if !cfg.link_active(n) {
            continue;
        }
        let w = cfg.g * ((n + 1) as f64).sqrt();
        out[n] += -I * w * amps[n + 1];
        out[n + 1] += -I * w * amps[n];
    }
}

/// Free energy of level `n`: photon in mode `-n` plus `n` phonons. A suppressed
/// photon mode contributes nothing.
pub(crate) fn free_energy(cfg: &SystemConfig, n: usize) -> f64 {
    let m = mode_of_level(n);
    let photon = if cfg.is_suppressed(m) {
        0.0
    } else {
        cfg.mode_frequency(m)
    };
    photon + n as f64 * cfg.omega
}

/// Interaction-picture time derivative
/// `d amps[n]/dt = -i g (√n amps[n-1] + √(n+1) amps[n+1])`, with stop-band
/// links removed. The vacuum does not evolve.
pub fn apply_hamiltonian(state: &LadderState, cfg: &SystemConfig) -> Result<StateDerivative> {
    state.check_dim(cfg)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); state.amps.len()];
    interaction_rhs(cfg, &state.amps, &mut amps);
    Ok(StateDerivative {
        amps,
        vac_amp: Complex64::new(0.0, 0.0),
    })
}

/// Lab-frame derivative: [`apply_hamiltonian`] plus the free term
/// `-i (ω_{-n} + nΩ) amps[n]`.
pub fn apply_full_hamiltonian(state: &LadderState, cfg: &SystemConfig) -> Result<StateDerivative> {
    let mut d = apply_hamiltonian(state, cfg)?;
    for (n, (dz, z)) in d.amps.iter_mut().zip(&state.amps).enumerate() {
        *dz += -I * free_energy(cfg, n) * z;
    }
    Ok(d)
}

/// Reduced density matrix in the block form
/// `ρ = Σ α_{n,n'} |φ_n⟩⟨φ_n'| ⊗ |n⟩⟨n'| + Σ β_n |vac⟩⟨vac| ⊗ |n⟩⟨n|`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityBlock {
    pub alpha: CMatrix,
    pub beta: Vec<f64>,
    pub t: f64,
}

impl DensityBlock {
    pub fn single_photon(n_max: usize) -> Self {
        DensityBlock::from_pure(&LadderState::single_photon(n_max))
    }

    /// `α = c c†` from a pure state; vacuum weight goes to `β_0`. Coherences
    /// between the vacuum and the photon branch have no slot in this form and
    /// are dropped.
    pub fn from_pure(state: &LadderState) -> Self {
        let dim = state.amps.len();
        let alpha =
            CMatrix::from_shape_fn((dim, dim), |(n, m)| state.amps[n] * state.amps[m].conj());
        let mut beta = vec![0.0; dim];
        beta[0] = state.vac_amp.norm_sqr();
        DensityBlock {
            alpha,
            beta,
            t: state.t,
        }
    }

    pub fn n_max(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn trace(&self) -> f64 {
        self.alpha.diag().iter().map(|z| z.re).sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// Largest `|α - α†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.alpha.nrows();
        let mut worst = 0.0f64;
        for n in 0..dim {
            for m in 0..dim {
                worst = worst.max((self.alpha[[n, m]] - self.alpha[[m, n]].conj()).norm());
            }
        }
        worst
    }

    pub fn check_dim(&self, cfg: &SystemConfig) -> Result<()> {
        if self.beta.len() != cfg.dim() || self.alpha.dim() != (cfg.dim(), cfg.dim()) {
            return Err(Error::Dimension {
                expected: cfg.dim(),
                found: self.beta.len(),
            });
        }
        Ok(())
    }
}

/// Single-photon register spanning ladder modes `low..=high`, used for the
/// dense operator checks. Basis index `i` is mode `low + i`.
#[derive(Clone, Copy, Debug)]
pub struct PhotonRegister {
    pub low: i64,
    pub high: i64,
}

impl PhotonRegister {
    pub fn new(low: i64, high: i64) -> Self {
        assert!(low <= high);
        PhotonRegister { low, high }
    }

    pub fn dim(&self) -> usize {
        (self.high - self.low + 1) as usize
    }

    pub fn index(&self, mode: i64) -> Option<usize> {
        (self.low..=self.high)
            .contains(&mode)
            .then(|| (mode - self.low) as usize)
    }

    /// `A = Σ_m a_m a†_{m-1}`: moves the photon one mode down.
    pub fn lower(&self) -> CMatrix {
        let mut a = CMatrix::zeros((self.dim(), self.dim()));
        for m in self.low + 1..=self.high {
            let (from, to) = (self.index(m).unwrap(), self.index(m - 1).unwrap());
            a[[to, from]] = Complex64::new(1.0, 0.0);
        }
        a
    }

    /// `A† = Σ_m a†_m a_{m-1}`: moves the photon one mode up.
    pub fn raise(&self) -> CMatrix {
        crate::linalg::dagger(&self.lower())
    }
}

/// Phonon annihilation operator truncated to `n_max + 1` Fock levels.
pub fn phonon_lowering(n_max: usize) -> CMatrix {
    let mut b = CMatrix::zeros((n_max + 1, n_max + 1));
    for n in 1..=n_max {
        b[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    b
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    CMatrix::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[[i / br, j / bc]] * b[[i % br, j % bc]]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, dagger};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent brute-force tail: iterated pmf recursion summed from the top.
    fn brute_tail_ge(mean: f64, from: usize) -> f64 {
        let mut p = (-mean).exp();
        let mut terms = vec![p];
        for n in 1..400 {
            p *= mean / n as f64;
            terms.push(p);
        }
        terms[from..].iter().rev().sum()
    }

    #[test]
    fn n_max_for_vanishing_time_is_one() {
        assert_eq!(choose_n_max(0.0, 1e-12), 1);
    }

    #[test]
    fn n_max_matches_brute_force_tail() {
        // Frozen from a 40-digit evaluation of the inclusive Poisson tail.
        assert_eq!(choose_n_max(1.0, 1e-12), 15);
        assert_eq!(choose_n_max(3.0, 1e-12), 38);
        assert_eq!(choose_n_max(0.5, 1e-12), 10);
        assert_eq!(choose_n_max(2.0, 1e-12), 26);
        for &gt in &[0.3, 1.0, 1.7, 3.0, 4.5] {
            let n = choose_n_max(gt, 1e-12);
            assert!(brute_tail_ge(gt * gt, n) < 1e-12);
            assert!(n == 1 || brute_tail_ge(gt * gt, n - 1) >= 1e-12);
        }
    }

    #[test]
    fn single_coupling_out_of_ground_level() {
        let cfg = SystemConfig::lossless(1.0, 4).unwrap();
        let d = apply_hamiltonian(&LadderState::single_photon(4), &cfg).unwrap();
        assert_eq!(
            d.amps,
            vec![
                c(0.0, 0.0),
                c(0.0, -1.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0)
            ]
        );
        assert_eq!(d.vac_amp, c(0.0, 0.0));
    }

    #[test]
    fn derivative_matches_assembled_tridiagonal_matrix() {
        let cfg = SystemConfig::lossless(1.0, 6).unwrap();
        let mut state = LadderState::single_photon(6);
        state.amps = vec![c(0.0, 0.0); 7];
        state.amps[1] = c(1.0, 0.0);
        let d = apply_hamiltonian(&state, &cfg).unwrap();

        let k = coupling_matrix(&cfg, 7);
        for n in 0..7 {
            let row: Complex64 = (0..7).map(|m| -I * k[[n, m]] * state.amps[m]).sum();
            assert!((d.amps[n] - row).norm() < 1e-15);
        }
        assert!((d.amps[0] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((d.amps[2] - c(0.0, -2f64.sqrt())).norm() < 1e-15);
        assert_eq!(d.amps[1], c(0.0, 0.0));
        assert_eq!(d.amps[3], c(0.0, 0.0));
    }

    #[test]
    fn stop_band_below_input_blocks_first_step() {
        let cfg = SystemConfig::lossless(1.0, 4)
            .unwrap()
            .with_suppressed([-1])
            .unwrap();
        let d = apply_hamiltonian(&LadderState::single_photon(4), &cfg).unwrap();
        assert!(d.amps.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cfg = SystemConfig::lossless(1.0, 4).unwrap();
        let err = apply_hamiltonian(&LadderState::single_photon(3), &cfg).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 5,
                found: 4
            }
        ));
    }

    #[test]
    fn coupling_is_real_symmetric_up_to_large_truncations() {
        for n_max in [1, 2, 7, 33, 100] {
            let cfg = SystemConfig::lossless(1.3, n_max).unwrap();
            let k = coupling_matrix(&cfg, n_max + 1);
            for i in 0..=n_max {
                for j in 0..=n_max {
                    assert_eq!(k[[i, j]], k[[j, i]]);
                }
                assert_eq!(k[[i, i]], 0.0);
            }
        }
    }

    #[test]
    fn ladder_operators_commute_away_from_register_edges() {
        let n_max = 10;
        let reg = PhotonRegister::new(-(n_max as i64), n_max as i64);
        let a = reg.lower();
        let ad = reg.raise();
        assert_eq!(dagger(&a), ad);
        let comm = commutator(&a, &ad);
        for n in 0..n_max - 1 {
            let col = reg.index(mode_of_level(n)).unwrap();
            assert!(comm.column(col).iter().all(|z| z.norm() < 1e-15), "n = {n}");
        }
        // The edges are where truncation shows.
        let edge = reg.index(-(n_max as i64)).unwrap();
        assert!(comm.column(edge).iter().any(|z| z.norm() > 0.5));
    }

    #[test]
    fn free_energy_is_uniform_on_the_sector() {
        let cfg = SystemConfig::lossless(1.0, 5)
            .unwrap()
            .with_frequencies(200.0, 7.0)
            .unwrap();
        for n in 0..=5 {
            assert!((free_energy(&cfg, n) - 200.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_density_block_is_consistent() {
        let mut state = LadderState::single_photon(3);
        state.amps = vec![c(0.6, 0.0), c(0.0, -0.48), c(0.0, 0.0), c(0.0, 0.0)];
        state.vac_amp = c(0.64, 0.0);
        let rho = DensityBlock::from_pure(&state);
        assert!((rho.trace() - state.norm_sqr()).abs() < 1e-15);
        assert!(rho.hermiticity_error() < 1e-16);
        assert!((rho.alpha[[0, 1]] - c(0.0, 0.288)).norm() < 1e-15);
    }

    #[test]
    fn kron_places_blocks() {
        let b = phonon_lowering(2);
        let id = CMatrix::eye(2);
        let k = kron(&id, &b);
        assert_eq!(k.dim(), (6, 6));
        assert_eq!(k[[3, 4]], c(1.0, 0.0));
        assert_eq!(k[[4, 5]], c(2f64.sqrt(), 0.0));
        assert_eq!(k[[2, 3]], c(0.0, 0.0));
    }
}
