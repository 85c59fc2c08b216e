//! Named experiments behind the command-line runner.
//!
//! Each run reads a config (built-in defaults, then an optional TOML file,
//! then `KEY=VALUE` overrides), writes its data files atomically into the
//! output directory together with `manifest.json`, and reports whether every
//! in-run check passed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{
    density_closed_form, herald_probabilities, wavefunction_closed_form, weak_coherent_branch,
};
use crate::config::{is_config_key, load_params, make_config, RawParams, RawValue, SystemConfig};
use crate::error::{Error, Result};
use crate::herald::{
    chi_square_gof, click_distribution, post_click_state, sample_heralds, Channels, ClickTable,
    DetectorModel, Outcome,
};
use crate::integrator::{
    check_glauber_factorization, integrate_lindblad, integrate_schrodinger, trajectory_csv,
    IntegratorSpec,
};
use crate::ladder::{DensityBlock, LadderState};
use crate::linalg::max_abs_diff;
use crate::output::{distribution_csv, fmt_sig, outcomes_csv, Manifest, RunWriter};
use crate::tomography::{
    apply_beam_splitter_pulse, readout_statistics, validate_stop_band, PulseSpec, ReadoutRegister,
    STOP_BAND_TOL,
};

/// Threshold for analytic vs. integrated states.
pub const ORACLE_TOL: f64 = 1e-8;
pub const GLAUBER_TOL: f64 = 1e-9;
pub const CHI_SQUARE_SIGNIFICANCE: f64 = 1e-3;
pub const READOUT_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-12;

/// Parameters used when no config file is given.
pub const DEFAULT_CONFIG: &str = "g = 1.0\ngamma = 0.0\nn_max = 40\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentName {
    Fig3,
    OracleCheck,
    GlauberCheck,
    HeraldMc,
    Stopband,
    Tomography,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::Fig3,
        ExperimentName::OracleCheck,
        ExperimentName::GlauberCheck,
        ExperimentName::HeraldMc,
        ExperimentName::Stopband,
        ExperimentName::Tomography,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Fig3 => "fig3",
            ExperimentName::OracleCheck => "oracle-check",
            ExperimentName::GlauberCheck => "glauber-check",
            ExperimentName::HeraldMc => "herald-mc",
            ExperimentName::Stopband => "stopband",
            ExperimentName::Tomography => "tomography",
        }
    }

    /// Experiment parameters that may be set besides the config keys.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            ExperimentName::Fig3 => &["gt_max", "gt_step"],
            ExperimentName::OracleCheck => &["gt_max", "lindblad_gt_max", "samples", "dt"],
            ExperimentName::GlauberCheck => &["gt", "n_max_small"],
            ExperimentName::HeraldMc => &["gt", "trials", "efficiency", "dark_rate", "alpha_in"],
            ExperimentName::Stopband => &["modes", "control_mode"],
            ExperimentName::Tomography => {
                &["gt", "j_max", "coupling", "stop_band", "readout_n_max"]
            }
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub overrides: Vec<(String, RawValue)>,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            name,
            config: None,
            out_dir: out_dir.into(),
            overrides: Vec::new(),
            seed: 0,
        }
    }

    pub fn with_config(mut self, path: impl Into<PathBuf>) -> Self {
        self.config = Some(path.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn set(mut self, key: &str, value: RawValue) -> Self {
        self.overrides.push((key.to_string(), value));
        self
    }

    /// Resolves the system config and this experiment's parameters.
    fn resolve(&self) -> Result<(SystemConfig, Params)> {
        let mut merged = crate::config::parse_params(DEFAULT_CONFIG)?;
        if let Some(path) = &self.config {
            merged.extend(load_params(path)?);
        }
        let allowed = self.name.parameters();
        for (key, value) in &self.overrides {
            if !is_config_key(key) && !allowed.contains(&key.as_str()) {
                return Err(Error::config(
                    key,
                    format!("is not a parameter of experiment {}", self.name),
                ));
            }
            merged.insert(key.clone(), value.clone());
        }
        let mut config_raw = RawParams::new();
        let mut values = RawParams::new();
        for (key, value) in merged {
            if is_config_key(&key) {
                config_raw.insert(key, value);
            } else if allowed.contains(&key.as_str()) {
                values.insert(key, value);
            } else if !ExperimentName::ALL
                .iter()
                .any(|e| e.parameters().contains(&key.as_str()))
            {
                return Err(Error::config(&key, "is not a recognized parameter"));
            }
        }
        Ok((
            make_config(&config_raw)?,
            Params {
                values,
                effective: RawParams::new(),
            },
        ))
    }
}

/// Experiment parameters with defaults; every value read is recorded for the
/// manifest.
struct Params {
    values: RawParams,
    effective: RawParams,
}

impl Params {
    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.values.get(key) {
            None => default,
            Some(RawValue::Int(i)) => *i as f64,
            Some(RawValue::Float(x)) => *x,
            Some(RawValue::List(_)) => return Err(Error::config(key, "must be a number")),
        };
        self.effective.insert(key.to_string(), RawValue::Float(v));
        Ok(v)
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        if self.values.contains_key(key) {
            self.f64(key, 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    fn int(&mut self, key: &str, default: i64) -> Result<i64> {
        let v = match self.values.get(key) {
            None => default,
            Some(RawValue::Int(i)) => *i,
            Some(_) => return Err(Error::config(key, "must be an integer")),
        };
        self.effective.insert(key.to_string(), RawValue::Int(v));
        Ok(v)
    }

    fn count(&mut self, key: &str, default: i64, min: i64) -> Result<usize> {
        let v = self.int(key, default)?;
        if v < min {
            return Err(Error::config(key, format!("must be at least {min}")));
        }
        Ok(v as usize)
    }

    fn list(&mut self, key: &str, default: &[i64]) -> Result<Vec<i64>> {
        let v = match self.values.get(key) {
            None => default.to_vec(),
            Some(RawValue::List(v)) => v.clone(),
            Some(RawValue::Int(i)) => vec![*i],
            Some(RawValue::Float(_)) => {
                return Err(Error::config(key, "must be a list of integers"))
            }
        };
        self.effective
            .insert(key.to_string(), RawValue::List(v.clone()));
        Ok(v)
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, "must be positive"))
    }
}

fn require_coupling(cfg: &SystemConfig) -> Result<()> {
    if cfg.g > 0.0 {
        Ok(())
    } else {
        Err(Error::config("g", "must be positive for this experiment"))
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Manifest> {
    match spec.name {
        ExperimentName::Fig3 => run_fig3(spec),
        ExperimentName::OracleCheck => run_oracle_check(spec),
        ExperimentName::GlauberCheck => run_glauber_check(spec),
        ExperimentName::HeraldMc => run_herald_mc(spec),
        ExperimentName::Stopband => run_stopband(spec),
        ExperimentName::Tomography => run_tomography(spec),
    }
}

#[derive(Serialize)]
struct Fig3Summary {
    p0_p1_crossing_gt: Option<f64>,
    crossings: BTreeMap<String, Option<f64>>,
    rows: usize,
}

/// First `gt` where `a - b` changes sign, linearly interpolated.
fn crossing(gts: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    (1..gts.len()).find_map(|k| {
        let (d0, d1) = (a[k - 1] - b[k - 1], a[k] - b[k]);
        if d0 > 0.0 && d1 <= 0.0 {
            Some(gts[k - 1] + (gts[k] - gts[k - 1]) * d0 / (d0 - d1))
        } else {
            None
        }
    })
}

fn probability_table_csv(gts: &[f64], columns: &[Vec<f64>]) -> String {
    let mut out = String::from("gt");
    for j in 0..columns.len() {
        out.push_str(&format!(",P{j}"));
    }
    out.push('\n');
    for (k, gt) in gts.iter().enumerate() {
        out.push_str(&fmt_sig(*gt));
        for col in columns {
            out.push(',');
            out.push_str(&fmt_sig(col[k]));
        }
        out.push('\n');
    }
    out
}

/// Herald probabilities `P_0..P_3` over `gt`, lossless and with `γ = g`.
pub fn run_fig3(spec: &ExperimentSpec) -> Result<Manifest> {
    let (cfg, mut params) = spec.resolve()?;
    require_coupling(&cfg)?;
    let gt_max = positive("gt_max", params.f64("gt_max", 3.0)?)?;
    let gt_step = positive("gt_step", params.f64("gt_step", 0.01)?)?;
    let orders = 4.min(cfg.dim());
    let rows = (gt_max / gt_step).round() as usize + 1;
    let gts: Vec<f64> = (0..rows).map(|k| k as f64 * gt_step).collect();

    let lossless = cfg.clone().with_gamma(0.0)?;
    let lossy = cfg.clone().with_gamma(cfg.g)?;
    let mut solid = vec![Vec::with_capacity(rows); orders];
    let mut dotted = vec![Vec::with_capacity(rows); orders];
    for &gt in &gts {
        let a = herald_probabilities(gt, &lossless)?;
        let b = herald_probabilities(gt, &lossy)?;
        for j in 0..orders {
            solid[j].push(a.probs[j]);
            dotted[j].push(b.probs[j]);
        }
    }

    let mut crossings = BTreeMap::new();
    for j in 0..orders.saturating_sub(1) {
        crossings.insert(
            format!("P{j}=P{}", j + 1),
            crossing(&gts, &solid[j], &solid[j + 1]),
        );
    }
    let p01 = crossings.get("P0=P1").copied().flatten();

    let mut w = RunWriter::new(
        &spec.out_dir,
        spec.name.as_str(),
        spec.seed,
        &cfg,
        &params.effective,
    )?;
    w.write("fig3_lossless.csv", &probability_table_csv(&gts, &solid))?;
    w.write("fig3_lossy.csv", &probability_table_csv(&gts, &dotted))?;
    let summary = Fig3Summary {
        p0_p1_crossing_gt: p01,
        crossings,
        rows,
    };
    w.write("fig3_summary.json", &to_json(&summary)?)?;

    w.check_below("P0(0) - 1", (solid[0][0] - 1.0).abs(), 1e-12);
    if orders >= 2 {
        let miss = p01.map_or(f64::INFINITY, |x| (x - 1.0).abs());
        w.record("|P0=P1 crossing - 1|", miss, 0.01, miss <= 0.01);
    }
    let ratio_dev = gts
        .iter()
        .enumerate()
        .flat_map(|(k, gt)| {
            let (solid, dotted) = (&solid, &dotted);
            (0..orders).map(move |j| (dotted[j][k] - solid[j][k] * (-gt).exp()).abs())
        })
        .fold(0.0, f64::max);
    w.check_below("lossy - lossless * exp(-gt)", ratio_dev, 1e-12);
    w.finish()
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Largest elementwise difference between two density blocks.
pub fn block_deviation(a: &DensityBlock, b: &DensityBlock) -> f64 {
    let alpha = max_abs_diff(a.alpha.iter(), b.alpha.iter());
    let beta = a
        .beta
        .iter()
        .zip(&b.beta)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    alpha.max(beta)
}

/// Records a failed check for an integration that did not finish.
fn record_failure(w: &mut RunWriter, name: &str, threshold: f64, err: &Error) -> bool {
    log::warn!("{name}: {err}");
    w.record(name, f64::INFINITY, threshold, false)
}

/// Integrators against the closed forms.
pub fn run_oracle_check(spec: &ExperimentSpec) -> Result<Manifest> {
    let (cfg, mut params) = spec.resolve()?;
    require_coupling(&cfg)?;
    let gt_max = positive("gt_max", params.f64("gt_max", 3.0)?)?;
    let lindblad_gt_max = positive("lindblad_gt_max", params.f64("lindblad_gt_max", 2.0)?)?;
    let samples = params.count("samples", 31, 2)?;
    let dt = params
        .opt_f64("dt")?
        .map(|v| positive("dt", v))
        .transpose()?;
    let with_dt = |s: IntegratorSpec| match dt {
        Some(dt) => s.with_dt(dt),
        None => s,
    };

    let mut w = RunWriter::new(
        &spec.out_dir,
        spec.name.as_str(),
        spec.seed,
        &cfg,
        &params.effective,
    )?;
    let mut report = String::from("check,gt,deviation\n");

    let lossless = cfg.clone().with_gamma(0.0)?;
    let grid = IntegratorSpec::uniform_grid(0.0, gt_max / cfg.g, samples);
    let psi0 = LadderState::single_photon(cfg.n_max);
    match integrate_schrodinger(&psi0, &lossless, &with_dt(IntegratorSpec::rk4(grid))) {
        Ok(traj) => {
            let mut worst = 0.0f64;
            for state in &traj {
                let exact = wavefunction_closed_form(cfg.g * state.t, &lossless)?;
                let dev = max_abs_diff(&state.amps, &exact.amps);
                report.push_str(&format!(
                    "schrodinger,{},{}\n",
                    fmt_sig(cfg.g * state.t),
                    fmt_sig(dev)
                ));
                worst = worst.max(dev);
            }
            w.write("oracle_trajectory.csv", &trajectory_csv(&traj, &lossless))?;
            w.check_below("schrodinger max deviation", worst, ORACLE_TOL);
        }
        Err(e) => {
            record_failure(&mut w, "schrodinger max deviation", ORACLE_TOL, &e);
        }
    }

    let grid = IntegratorSpec::uniform_grid(0.0, lindblad_gt_max / cfg.g, samples);
    let rho0 = DensityBlock::single_photon(cfg.n_max);
    let name = format!("lindblad max deviation (gamma = {})", cfg.gamma);
    match integrate_lindblad(&rho0, &cfg, &with_dt(IntegratorSpec::rk4(grid))) {
        Ok(traj) => {
            let mut worst = 0.0f64;
            let mut drift = 0.0f64;
            for rho in &traj {
                let exact = density_closed_form(rho.t, &cfg)?;
                let dev = block_deviation(rho, &exact);
                report.push_str(&format!(
                    "lindblad,{},{}\n",
                    fmt_sig(cfg.g * rho.t),
                    fmt_sig(dev)
                ));
                worst = worst.max(dev);
                drift = drift.max((rho.trace() - 1.0).abs());
            }
            w.check_below(&name, worst, ORACLE_TOL);
            w.check_below("lindblad trace drift", drift, ORACLE_TOL);
        }
        Err(e) => {
            record_failure(&mut w, &name, ORACLE_TOL, &e);
        }
    }
    w.write("oracle_deviations.csv", &report)?;
    w.finish()
}

/// Dense check of the factorized propagator at `gt` and a few smaller times.
pub fn run_glauber_check(spec: &ExperimentSpec) -> Result<Manifest> {
    let (cfg, mut params) = spec.resolve()?;
    let gt = params.f64("gt", 0.5)?;
    let n_max_small = params.count("n_max_small", 10, 0)?;
    let mut w = RunWriter::new(
        &spec.out_dir,
        spec.name.as_str(),
        spec.seed,
        &cfg,
        &params.effective,
    )?;
    let mut csv = String::from("gt,deviation\n");
    let mut worst = 0.0f64;
    for k in 0..=5 {
        let x = gt * k as f64 / 5.0;
        let dev = check_glauber_factorization(x, n_max_small)?;
        csv.push_str(&format!("{},{}\n", fmt_sig(x), fmt_sig(dev)));
        worst = worst.max(dev);
    }
    w.write("glauber.csv", &csv)?;
    w.check_below("factorization deviation", worst, GLAUBER_TOL);
    w.finish()
}

#[derive(Serialize)]
struct OutcomeRow {
    outcome: String,
    exact: f64,
    empirical: f64,
    count: u64,
}

#[derive(Serialize)]
struct HeraldSummary {
    gt: f64,
    trials: u64,
    seed: u64,
    chi_square: crate::herald::ChiSquareResult,
    outcomes: Vec<OutcomeRow>,
}

fn outcome_label(o: Outcome) -> String {
    match o {
        Outcome::Genuine(j) => format!("click j={j}"),
        Outcome::Dark(j) => format!("dark j={j}"),
        Outcome::NoClick => "no click".into(),
    }
}

/// `|f - p| < 3 sqrt(p (1-p) / N)`; degenerate probabilities need an exact match.
fn within_three_sigma(f: f64, p: f64, trials: u64) -> (f64, f64) {
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    ((f - p).abs(), (3.0 * sigma).max(1e-15))
}

/// Seeded Monte Carlo of the detector array.
pub fn run_herald_mc(spec: &ExperimentSpec) -> Result<Manifest> {
    let (cfg, mut params) = spec.resolve()?;
    let gt = params.f64("gt", 1.0)?;
    let trials = params.count("trials", 100_000, 1)? as u64;
    let efficiency = params.f64("efficiency", 1.0)?;
    let dark_rate = params.f64("dark_rate", 0.0)?;
    let alpha_in = params.opt_f64("alpha_in")?;
    let detector = DetectorModel::new(efficiency, dark_rate, Channels::All)?;

    let dist: ClickTable = match alpha_in {
        Some(alpha) => {
            let branches = weak_coherent_branch(gt, Complex64::new(alpha, 0.0), &cfg)?;
            click_distribution(&branches, &detector, &cfg)
        }
        None => click_distribution(&herald_probabilities(gt, &cfg)?, &detector, &cfg),
    };
    let sample = sample_heralds(&dist, trials, spec.seed)?;
    let chi = chi_square_gof(&dist, &sample.frequencies);

    let mut w = RunWriter::new(
        &spec.out_dir,
        spec.name.as_str(),
        spec.seed,
        &cfg,
        &params.effective,
    )?;
    w.write("herald_outcomes.csv", &outcomes_csv(&sample.outcomes))?;
    let rows = dist
        .outcomes()
        .into_iter()
        .filter(|(o, p)| *p > 0.0 || sample.frequencies.frequency(*o) > 0.0)
        .map(|(o, p)| OutcomeRow {
            outcome: outcome_label(o),
            exact: p,
            empirical: sample.frequencies.frequency(o),
            count: (sample.frequencies.frequency(o) * trials as f64).round() as u64,
        })
        .collect();
    let summary = HeraldSummary {
        gt,
        trials,
        seed: spec.seed,
        chi_square: chi,
        outcomes: rows,
    };
    w.write("herald_summary.json", &to_json(&summary)?)?;

    w.record(
        "chi-square p-value",
        chi.p_value,
        CHI_SQUARE_SIGNIFICANCE,
        chi.passes(CHI_SQUARE_SIGNIFICANCE),
    );
    for outcome in [Outcome::Genuine(1), Outcome::NoClick] {
        if let Outcome::Genuine(j) = outcome {
            if j >= dist.channels() {
                continue;
            }
        }
        let p = dist
            .outcomes()
            .into_iter()
            .find(|(o, _)| *o == outcome)
            .map_or(0.0, |(_, p)| p);
        let (dev, band) = within_three_sigma(sample.frequencies.frequency(outcome), p, trials);
        w.check_below(
            &format!("|{} frequency - exact|", outcome_label(outcome)),
            dev,
            band,
        );
    }
    w.finish()
}

/// Stop-band invariance for positive modes and a negative control.
pub fn run_stopband(spec: &ExperimentSpec) -> Result<Manifest> {
    let (cfg, mut params) = spec.resolve()?;
    let modes = params.list("modes", &[1, 2, 3])?;
    let control = params.int("control_mode", -1)?;
    let mut w = RunWriter::new(
        &spec.out_dir,
        spec.name.as_str(),
        spec.seed,
        &cfg,
        &params.effective,
    )?;
    let mut csv = String::from("mode,deviation\n");
    for &j in &modes {
        let report = validate_stop_band(&cfg, j)?;
        csv.push_str(&format!("{j},{}\n", fmt_sig(report.max_deviation)));
        w.check_below(
            &format!("stop-band on mode {j}"),
            report.max_deviation,
            STOP_BAND_TOL,
        );
    }
    let dev = control_deviation(&cfg, control)?;
    csv.push_str(&format!("{control},{}\n", fmt_sig(dev)));
    w.record(
        &format!("control: suppressing mode {control} at gt = 1"),
        dev,
        1e-3,
        dev > 1e-3,
    );
    w.write("stopband.csv", &csv)?;
    w.finish()
}

/// Largest amplitude change at `gt = 1` when `mode` is suppressed.
pub fn control_deviation(cfg: &SystemConfig, mode: i64) -> Result<f64> {
    require_coupling(cfg)?;
    let base = cfg.clone().with_gamma(0.0)?;
    let banded = base
        .clone()
        .with_suppressed(base.suppressed_modes.iter().copied().chain([mode]))?;
    let spec = IntegratorSpec::rk4(vec![1.0 / cfg.g]);
    let psi0 = LadderState::single_photon(cfg.n_max);
    let a = integrate_schrodinger(&psi0, &base, &spec)?;
    let b = integrate_schrodinger(&psi0, &banded, &spec)?;
    Ok(max_abs_diff(&a[0].amps, &b[0].amps))
}

#[derive(Serialize)]
struct TomographyRow {
    j: usize,
    click_probability: f64,
    heralded_fidelity: f64,
    readout_mass_at_j: f64,
    norm_error: f64,
    quanta_error: f64,
    involution_overlap: f64,
}

/// Herald `|j⟩`, swap it into the readout mode with a π pulse, read it out.
pub fn run_tomography(spec: &ExperimentSpec) -> Result<Manifest> {
    let (cfg, mut params) = spec.resolve()?;
    let gt = params.f64("gt", 1.0)?;
    let j_max = params.count("j_max", 3, 0)?;
    let coupling = positive("coupling", params.f64("coupling", 1.0)?)?;
    let stop_band = params.int("stop_band", 1)?;
    let readout_n_max = params.count("readout_n_max", 8, 1)?;
    if j_max > readout_n_max.min(cfg.n_max) {
        return Err(Error::config("j_max", "exceeds the readout truncation"));
    }
    require_coupling(&cfg)?;
    let cfg = cfg
        .clone()
        .with_suppressed(cfg.suppressed_modes.iter().copied().chain([stop_band]))?;

    let stop = validate_stop_band(&cfg, stop_band)?;
    let rho = density_closed_form(gt / cfg.g, &cfg)?;
    let swap = PulseSpec::for_stop_band(stop_band, std::f64::consts::PI, coupling, &cfg)?;
    let half = PulseSpec::for_stop_band(stop_band, std::f64::consts::FRAC_PI_2, coupling, &cfg)?;

    let mut w = RunWriter::new(
        &spec.out_dir,
        spec.name.as_str(),
        spec.seed,
        &cfg,
        &params.effective,
    )?;
    w.check_below(
        &format!("stop-band on mode {stop_band}"),
        stop.max_deviation,
        STOP_BAND_TOL,
    );

    let mut rows = Vec::new();
    for j in 0..=j_max {
        let report = post_click_state(&rho, j)?;
        let phonon = report
            .pure_state()
            .ok_or_else(|| Error::Usage(format!("heralded state for j = {j} is mixed")))?;
        let register = ReadoutRegister::from_phonon(&phonon[..=readout_n_max], cfg.trunc_tol)?;
        let out = apply_beam_splitter_pulse(&register, &swap)?;
        let stats = readout_statistics(&out);
        let back = apply_beam_splitter_pulse(&out, &swap)?;
        let before = register.quanta_distribution();
        let row = TomographyRow {
            j,
            click_probability: report.click_probability,
            heralded_fidelity: report.fidelity,
            readout_mass_at_j: stats[j],
            norm_error: (out.norm_sqr() - 1.0).abs(),
            quanta_error: before
                .iter()
                .zip(out.quanta_distribution())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            involution_overlap: register.overlap(&back),
        };
        w.write(&format!("readout_j{j}.csv"), &distribution_csv(&stats))?;
        w.record(
            &format!("j = {j}: readout mass at n = j"),
            row.readout_mass_at_j,
            1.0 - READOUT_TOL,
            row.readout_mass_at_j > 1.0 - READOUT_TOL,
        );
        w.check_below(
            &format!("j = {j}: heralded infidelity"),
            (1.0 - row.heralded_fidelity).abs(),
            UNITARITY_TOL,
        );
        w.check_below(
            &format!("j = {j}: norm error"),
            row.norm_error,
            UNITARITY_TOL,
        );
        w.check_below(
            &format!("j = {j}: quanta distribution change"),
            row.quanta_error,
            UNITARITY_TOL,
        );
        w.check_below(
            &format!("j = {j}: 1 - |<psi|U_pi^2|psi>|"),
            1.0 - row.involution_overlap,
            READOUT_TOL,
        );
        rows.push(row);
    }

    let one = ReadoutRegister::fock(1, readout_n_max, cfg.trunc_tol)?;
    let split = readout_statistics(&apply_beam_splitter_pulse(&one, &half)?);
    w.write("readout_half_pulse.csv", &distribution_csv(&split))?;
    w.check_below(
        "half pulse: |P(1) - 1/2|",
        (split[1] - 0.5).abs(),
        UNITARITY_TOL,
    );
    w.write("tomography_summary.json", &to_json(&rows)?)?;
    w.finish()
}
