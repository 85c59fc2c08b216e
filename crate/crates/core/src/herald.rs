//! Frequency-demultiplexed single-photon detection.
//!
//! Channel `j` monitors ladder mode `m = -j`; a click there heralds the phonon
//! Fock state `|j⟩`. The detector array has one efficiency shared by every
//! channel and a per-channel dark-count probability. A genuine photon click
//! takes precedence; in trials without one, each monitored channel fires
//! independently with probability `dark_rate` and one firing channel is
//! reported, chosen uniformly. Dark clicks herald the wrong state and are
//! tabulated separately.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytic::{HeraldProbabilityTable, WeakCoherentBranches};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ladder::{DensityBlock, LadderState};
use crate::linalg::CMatrix;

#[derive(Clone, Debug, PartialEq)]
pub enum Channels {
    /// Every `j` the state provides.
    All,
    Subset(BTreeSet<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_rate: f64,
    pub channels: Channels,
}

impl DetectorModel {
    pub fn ideal() -> Self {
        DetectorModel {
            efficiency: 1.0,
            dark_rate: 0.0,
            channels: Channels::All,
        }
    }

    pub fn new(efficiency: f64, dark_rate: f64, channels: Channels) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::config("efficiency", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&dark_rate) {
            return Err(Error::config("dark_rate", "must lie in [0, 1)"));
        }
        if let Channels::Subset(set) = &channels {
            if set.is_empty() {
                return Err(Error::config("channels", "must not be empty"));
            }
        }
        Ok(DetectorModel {
            efficiency,
            dark_rate,
            channels,
        })
    }

    fn monitors(&self, j: usize) -> bool {
        match &self.channels {
            Channels::All => true,
            Channels::Subset(set) => set.contains(&j),
        }
    }
}

/// Anything that assigns an ideal detection probability to each channel.
pub trait ClickSource {
    /// `probs[j]`: probability that the photon sits in mode `-j`.
    fn ideal_click_probabilities(&self) -> Vec<f64>;
    fn gt(&self, cfg: &SystemConfig) -> f64;
}

impl ClickSource for LadderState {
    fn ideal_click_probabilities(&self) -> Vec<f64> {
        self.probabilities()
    }
    fn gt(&self, cfg: &SystemConfig) -> f64 {
        cfg.g * self.t
    }
}

impl ClickSource for DensityBlock {
    fn ideal_click_probabilities(&self) -> Vec<f64> {
        self.alpha.diag().iter().map(|z| z.re.max(0.0)).collect()
    }
    fn gt(&self, cfg: &SystemConfig) -> f64 {
        cfg.g * self.t
    }
}

impl ClickSource for HeraldProbabilityTable {
    fn ideal_click_probabilities(&self) -> Vec<f64> {
        self.probs.clone()
    }
    fn gt(&self, _cfg: &SystemConfig) -> f64 {
        self.gt
    }
}

impl ClickSource for WeakCoherentBranches {
    fn ideal_click_probabilities(&self) -> Vec<f64> {
        self.click_probabilities()
    }
    fn gt(&self, cfg: &SystemConfig) -> f64 {
        cfg.g * self.photon_branch.t
    }
}

/// Exclusive outcome probabilities of one detection snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClickTable {
    pub gt: f64,
    /// Photon detected in channel `j`.
    pub genuine: Vec<f64>,
    /// Dark count reported in channel `j`.
    pub dark: Vec<f64>,
    pub no_click: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Genuine(usize),
    Dark(usize),
    NoClick,
}

impl ClickTable {
    pub fn channels(&self) -> usize {
        self.genuine.len()
    }

    /// Probability that some channel clicks, genuine or dark.
    pub fn total_click(&self) -> f64 {
        self.genuine.iter().sum::<f64>() + self.dark.iter().sum::<f64>()
    }

    /// Per-channel click probability regardless of origin.
    pub fn channel_probability(&self, j: usize) -> f64 {
        self.genuine[j] + self.dark[j]
    }

    /// Outcomes in sampling order with their probabilities.
    pub fn outcomes(&self) -> Vec<(Outcome, f64)> {
        let genuine = self
            .genuine
            .iter()
            .enumerate()
            .map(|(j, &p)| (Outcome::Genuine(j), p));
        let dark = self
            .dark
            .iter()
            .enumerate()
            .map(|(j, &p)| (Outcome::Dark(j), p));
        genuine
            .chain(dark)
            .chain(std::iter::once((Outcome::NoClick, self.no_click)))
            .collect()
    }

    /// Single-outcome table, for tests and degenerate inputs.
    pub fn from_ideal(probs: Vec<f64>, gt: f64) -> Self {
        let no_click = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        ClickTable {
            gt,
            dark: vec![0.0; probs.len()],
            genuine: probs,
            no_click,
        }
    }
}

pub fn click_distribution<S: ClickSource + ?Sized>(
    source: &S,
    detector: &DetectorModel,
    cfg: &SystemConfig,
) -> ClickTable {
    let ideal = source.ideal_click_probabilities();
    let genuine: Vec<f64> = ideal
        .iter()
        .enumerate()
        .map(|(j, p)| {
            if detector.monitors(j) {
                detector.efficiency * p
            } else {
                0.0
            }
        })
        .collect();
    let p_genuine: f64 = genuine.iter().sum();
    let monitored = (0..ideal.len()).filter(|&j| detector.monitors(j)).count();
    let dark_each = if monitored == 0 || detector.dark_rate == 0.0 {
        0.0
    } else {
        let any_dark = 1.0 - (1.0 - detector.dark_rate).powi(monitored as i32);
        (1.0 - p_genuine).max(0.0) * any_dark / monitored as f64
    };
    let dark: Vec<f64> = (0..ideal.len())
        .map(|j| if detector.monitors(j) { dark_each } else { 0.0 })
        .collect();
    let no_click = (1.0 - p_genuine - dark.iter().sum::<f64>()).max(0.0);
    ClickTable {
        gt: source.gt(cfg),
        genuine,
        dark,
        no_click,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeraldOutcome {
    pub trial: u64,
    pub clicked: bool,
    pub channel: Option<usize>,
    pub heralded_phonon: Option<usize>,
    /// The click came from a dark count; `heralded_phonon` is then wrong.
    pub dark: bool,
    pub gt: f64,
    /// Master seed; the per-trial stream is `(trial_seed, trial)`.
    pub trial_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub trials: u64,
    pub genuine: Vec<u64>,
    pub dark: Vec<u64>,
    pub no_click: u64,
}

impl FrequencyTable {
    pub fn frequency(&self, outcome: Outcome) -> f64 {
        let count = match outcome {
            Outcome::Genuine(j) => self.genuine[j],
            Outcome::Dark(j) => self.dark[j],
            Outcome::NoClick => self.no_click,
        };
        count as f64 / self.trials as f64
    }

    fn count(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::Genuine(j) => self.genuine[j],
            Outcome::Dark(j) => self.dark[j],
            Outcome::NoClick => self.no_click,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HeraldSample {
    pub outcomes: Vec<HeraldOutcome>,
    pub frequencies: FrequencyTable,
}

/// Uniform variate for one trial from its own counter-based stream, so results
/// do not depend on how trials are split across threads.
fn trial_uniform(seed: u64, trial: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.random::<f64>()
}

pub fn sample_heralds(dist: &ClickTable, trials: u64, seed: u64) -> Result<HeraldSample> {
    if trials == 0 {
        return Err(Error::Usage("trials must be at least 1".into()));
    }
    let outcomes_table = dist.outcomes();
    let mut cumulative = Vec::with_capacity(outcomes_table.len());
    let mut acc = 0.0;
    for (_, p) in &outcomes_table {
        acc += p;
        cumulative.push(acc);
    }

    let outcomes: Vec<HeraldOutcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let u = trial_uniform(seed, trial) * acc;
            let pick = cumulative
                .partition_point(|&c| c <= u)
                .min(outcomes_table.len() - 1);
            let (channel, dark) = match outcomes_table[pick].0 {
                Outcome::Genuine(j) => (Some(j), false),
                Outcome::Dark(j) => (Some(j), true),
                Outcome::NoClick => (None, false),
            };
            HeraldOutcome {
                trial,
                clicked: channel.is_some(),
                channel,
                heralded_phonon: channel,
                dark,
                gt: dist.gt,
                trial_seed: seed,
            }
        })
        .collect();

    let mut frequencies = FrequencyTable {
        trials,
        genuine: vec![0; dist.channels()],
        dark: vec![0; dist.channels()],
        no_click: 0,
    };
    for o in &outcomes {
        match (o.channel, o.dark) {
            (Some(j), false) => frequencies.genuine[j] += 1,
            (Some(j), true) => frequencies.dark[j] += 1,
            (None, _) => frequencies.no_click += 1,
        }
    }
    Ok(HeraldSample {
        outcomes,
        frequencies,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Pearson goodness of fit. Outcomes expecting fewer than five counts are
/// pooled into one bin.
pub fn chi_square_gof(dist: &ClickTable, observed: &FrequencyTable) -> ChiSquareResult {
    let n = observed.trials as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_expected, mut pooled_observed) = (0.0, 0.0);
    for (outcome, p) in dist.outcomes() {
        let expected = p * n;
        let count = observed.count(outcome) as f64;
        if expected >= 5.0 {
            bins.push((expected, count));
        } else {
            pooled_expected += expected;
            pooled_observed += count;
        }
    }
    if pooled_expected > 0.0 || pooled_observed > 0.0 {
        bins.push((pooled_expected, pooled_observed));
    }
    if bins.iter().any(|&(e, o)| e == 0.0 && o > 0.0) {
        return ChiSquareResult {
            statistic: f64::INFINITY,
            dof: bins.len().saturating_sub(1),
            p_value: 0.0,
        };
    }
    let statistic: f64 = bins
        .iter()
        .filter(|(e, _)| *e > 0.0)
        .map(|&(e, o)| (o - e).powi(2) / e)
        .sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64)
            .expect("positive degrees of freedom")
            .cdf(statistic)
    };
    ChiSquareResult {
        statistic,
        dof,
        p_value,
    }
}

/// Conditional phonon state after a click in channel `j`.
#[derive(Clone, Debug)]
pub struct PostClickReport {
    pub channel: usize,
    pub click_probability: f64,
    /// Normalized phonon density matrix.
    pub phonon_rho: CMatrix,
    /// `⟨j|ρ_ph|j⟩`.
    pub fidelity: f64,
    /// `Tr ρ_ph²`.
    pub purity: f64,
}

impl PostClickReport {
    /// Amplitudes of the conditional state when it is pure.
    pub fn pure_state(&self) -> Option<Vec<Complex64>> {
        if (self.purity - 1.0).abs() > 1e-10 {
            return None;
        }
        let pivot = (0..self.phonon_rho.nrows())
            .max_by(|&a, &b| {
                self.phonon_rho[[a, a]]
                    .re
                    .total_cmp(&self.phonon_rho[[b, b]].re)
            })
            .expect("nonempty");
        let norm = self.phonon_rho[[pivot, pivot]].re.sqrt();
        Some(
            self.phonon_rho
                .column(pivot)
                .iter()
                .map(|z| z / norm)
                .collect(),
        )
    }
}

/// Projects the optical register onto `|φ_j⟩` and traces it out.
///
/// In the block form the photon occupies mode `-n` whenever the phonon holds
/// `n` quanta (and is absent in the vacuum block), so only `α_{jj}` survives
/// the projection.
pub fn post_click_state(rho: &DensityBlock, j: usize) -> Result<PostClickReport> {
    let dim = rho.n_max() + 1;
    if j >= dim {
        return Err(Error::Usage(format!(
            "channel {j} is outside the ladder (n_max = {})",
            dim - 1
        )));
    }
    let target = -(j as i64);
    let mut phonon_rho = CMatrix::zeros((dim, dim));
    for n in 0..dim {
        for m in 0..dim {
            let (ket_mode, bra_mode) = (-(n as i64), -(m as i64));
            if ket_mode == target && bra_mode == target {
                phonon_rho[[n, m]] += rho.alpha[[n, m]];
            }
        }
    }
    let click_probability = phonon_rho.diag().iter().map(|z| z.re).sum::<f64>();
    if !(click_probability > 0.0) {
        return Err(Error::Usage(format!(
            "channel {j} has zero click probability"
        )));
    }
    phonon_rho.mapv_inplace(|z| z / click_probability);
    let purity = phonon_rho
        .dot(&phonon_rho)
        .diag()
        .iter()
        .map(|z| z.re)
        .sum();
    let fidelity = phonon_rho[[j, j]].re;
    Ok(PostClickReport {
        channel: j,
        click_probability,
        phonon_rho,
        fidelity,
        purity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{density_closed_form, herald_probabilities};

    const E_INV: f64 = 0.367_879_441_171_442_3;

    fn cfg() -> SystemConfig {
        SystemConfig::lossless(1.0, 20).unwrap()
    }

    #[test]
    fn ideal_detector_reproduces_poisson() {
        let table = herald_probabilities(1.0, &cfg()).unwrap();
        let clicks = click_distribution(&table, &DetectorModel::ideal(), &cfg());
        for j in 0..=20 {
            let poisson = E_INV / (1..=j).map(|k| k as f64).product::<f64>();
            assert!((clicks.genuine[j] - poisson).abs() < 1e-15);
        }
        assert!((clicks.total_click() + clicks.no_click - 1.0).abs() < 1e-12);
        assert_eq!(clicks.gt, 1.0);
    }

    #[test]
    fn blind_detector_never_clicks() {
        let table = herald_probabilities(1.0, &cfg()).unwrap();
        let det = DetectorModel::new(0.0, 0.0, Channels::All).unwrap();
        let clicks = click_distribution(&table, &det, &cfg());
        assert_eq!(clicks.no_click, 1.0);
    }

    #[test]
    fn loss_scales_channels() {
        let lossy = cfg().with_gamma(1.0).unwrap();
        let rho = density_closed_form(1.0, &lossy).unwrap();
        let clicks = click_distribution(&rho, &DetectorModel::ideal(), &lossy);
        let ideal = herald_probabilities(1.0, &cfg()).unwrap();
        for j in 0..=20 {
            assert!((clicks.genuine[j] - ideal.probs[j] * E_INV).abs() < 1e-15);
        }
    }

    #[test]
    fn dark_counts_are_reported_separately_and_normalized() {
        let table = herald_probabilities(0.5, &cfg()).unwrap();
        let det =
            DetectorModel::new(0.8, 0.01, Channels::Subset(BTreeSet::from([0, 1, 2]))).unwrap();
        let clicks = click_distribution(&table, &det, &cfg());
        assert!((clicks.total_click() + clicks.no_click - 1.0).abs() < 1e-12);
        assert_eq!(clicks.genuine[3], 0.0);
        assert_eq!(clicks.dark[3], 0.0);
        let p_gen: f64 = clicks.genuine.iter().sum();
        let expected_dark = (1.0 - p_gen) * (1.0 - 0.99f64.powi(3)) / 3.0;
        assert!((clicks.dark[1] - expected_dark).abs() < 1e-15);
    }

    #[test]
    fn detector_validation() {
        assert!(DetectorModel::new(1.1, 0.0, Channels::All).is_err());
        assert!(DetectorModel::new(0.5, 1.0, Channels::All).is_err());
        assert!(DetectorModel::new(0.5, 0.0, Channels::Subset(BTreeSet::new())).is_err());
    }

    #[test]
    fn point_mass_always_heralds_channel_zero() {
        let dist = ClickTable::from_ideal(vec![1.0, 0.0, 0.0], 0.0);
        let sample = sample_heralds(&dist, 500, 9).unwrap();
        assert!(sample
            .outcomes
            .iter()
            .all(|o| o.channel == Some(0) && o.heralded_phonon == Some(0)));
        assert_eq!(sample.frequencies.genuine[0], 500);
    }

    #[test]
    fn same_seed_same_outcomes() {
        let table = herald_probabilities(1.0, &cfg()).unwrap();
        let dist = click_distribution(&table, &DetectorModel::ideal(), &cfg());
        let a = sample_heralds(&dist, 2000, 42).unwrap();
        let b = sample_heralds(&dist, 2000, 42).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        let c = sample_heralds(&dist, 2000, 43).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
        assert!(sample_heralds(&dist, 0, 1).is_err());
    }

    #[test]
    fn ground_channel_frequency_is_within_binomial_band() {
        let table = herald_probabilities(1.0, &cfg()).unwrap();
        let dist = click_distribution(&table, &DetectorModel::ideal(), &cfg());
        let trials = 100_000u64;
        let sample = sample_heralds(&dist, trials, 7).unwrap();
        let sigma = (E_INV * (1.0 - E_INV) / trials as f64).sqrt();
        let f0 = sample.frequencies.frequency(Outcome::Genuine(0));
        assert!((f0 - E_INV).abs() < 3.0 * sigma, "f0 = {f0}");
    }

    #[test]
    fn chi_square_flags_a_wrong_model() {
        let table = herald_probabilities(1.0, &cfg()).unwrap();
        let dist = click_distribution(&table, &DetectorModel::ideal(), &cfg());
        let sample = sample_heralds(&dist, 20_000, 3).unwrap();
        assert!(chi_square_gof(&dist, &sample.frequencies).passes(0.001));
        let wrong = herald_probabilities(1.2, &cfg()).unwrap();
        let wrong = click_distribution(&wrong, &DetectorModel::ideal(), &cfg());
        assert!(!chi_square_gof(&wrong, &sample.frequencies).passes(0.001));
    }

    #[test]
    fn post_click_states_are_fock_states() {
        let rho = density_closed_form(0.0, &cfg()).unwrap();
        let report = post_click_state(&rho, 0).unwrap();
        assert_eq!(report.click_probability, 1.0);
        assert!((report.fidelity - 1.0).abs() < 1e-15);

        let rho = density_closed_form(1.0, &cfg()).unwrap();
        let report = post_click_state(&rho, 1).unwrap();
        assert!((report.click_probability - E_INV).abs() < 1e-15);

        for gamma in [0.0, 1.0, 3.0] {
            let lossy = cfg().with_gamma(gamma).unwrap();
            let rho = density_closed_form(1.3, &lossy).unwrap();
            let report = post_click_state(&rho, 3).unwrap();
            assert!((report.fidelity - 1.0).abs() < 1e-12);
            assert!((report.purity - 1.0).abs() < 1e-12);
            let psi = report.pure_state().unwrap();
            assert!((psi[3].norm() - 1.0).abs() < 1e-12);
        }
        let rho = density_closed_form(0.0, &cfg()).unwrap();
        assert!(post_click_state(&rho, 2).is_err());
        assert!(post_click_state(&rho, 21).is_err());
    }
}
