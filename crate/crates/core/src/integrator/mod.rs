//! Numerical oracles that share nothing with [`crate::analytic`] beyond the
//! ladder definitions: direct integration of the Schrödinger equation and of
//! the density-block coefficient equations, and a dense-exponential check of
//! the factorized interaction propagator.
//!
//! Both ODE integrators run on the reported ladder `0..=n_max` plus a guard
//! band of extra levels, so the hard wall at the end of the working space does
//! not reflect amplitude back into the reported levels. Weight that reaches
//! `n_max` or beyond is checked against `trunc_tol` at every output time.

mod glauber;
mod lindblad;
pub mod ode;
mod schrodinger;

pub use glauber::{check_glauber_factorization, glauber_operators, GlauberOperators};
pub use lindblad::{integrate_lindblad, TRACE_DRIFT_TOL};
pub use schrodinger::{integrate_schrodinger, NORM_DRIFT_TOL};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ladder::{choose_n_max, LadderState};
use crate::output::fmt_sig;

/// Default fixed step in units of the generator scale: `dt ≤ 0.01 / (g√N)`.
pub const DEFAULT_STEP_FACTOR: f64 = 0.01;

/// Fewest guard-band levels past `n_max`.
pub const MIN_GUARD_LEVELS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Fixed-step classic RK4. `None` picks the default step bound.
    Rk4 { dt: Option<f64> },
    /// Dormand–Prince 5(4) with mixed error control.
    Adaptive { rtol: f64, atol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Frame {
    /// Free evolution removed; fast optical phases absent.
    #[default]
    Interaction,
    /// Includes `H_0`.
    Lab,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorSpec {
    pub method: Method,
    /// Output times, strictly increasing, none before the initial state.
    pub t_grid: Vec<f64>,
    pub frame: Frame,
}

impl IntegratorSpec {
    pub fn rk4(t_grid: Vec<f64>) -> Self {
        IntegratorSpec {
            method: Method::Rk4 { dt: None },
            t_grid,
            frame: Frame::Interaction,
        }
    }

    pub fn adaptive(t_grid: Vec<f64>, rtol: f64, atol: f64) -> Self {
        IntegratorSpec {
            method: Method::Adaptive { rtol, atol },
            t_grid,
            frame: Frame::Interaction,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.method = Method::Rk4 { dt: Some(dt) };
        self
    }

    pub fn in_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// `count` evenly spaced samples from `t0` to `t1` inclusive.
    pub fn uniform_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
        assert!(count >= 2);
        (0..count)
            .map(|k| t0 + (t1 - t0) * k as f64 / (count - 1) as f64)
            .collect()
    }

    pub(crate) fn validate(&self, t_start: f64) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::Usage("t_grid is empty".into()));
        }
        if self.t_grid[0] < t_start {
            return Err(Error::Usage(format!(
                "t_grid starts at {} before the initial state time {t_start}",
                self.t_grid[0]
            )));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Usage("t_grid must be strictly increasing".into()));
        }
        match self.method {
            Method::Rk4 { dt: Some(dt) } if !(dt > 0.0) => {
                Err(Error::Usage(format!("dt must be positive, got {dt}")))
            }
            Method::Adaptive { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                Err(Error::Usage("adaptive tolerances must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn t_end(&self) -> f64 {
        *self.t_grid.last().expect("validated grid")
    }
}

/// Index of the last level in the working space for a ladder reported up to
/// `n_max` and evolved until `t_end`.
pub(crate) fn working_top(cfg: &SystemConfig, t_end: f64) -> usize {
    let band_tol = (cfg.trunc_tol * cfg.trunc_tol).max(1e-300);
    (cfg.n_max + MIN_GUARD_LEVELS).max(choose_n_max(cfg.g * t_end, band_tol))
}

/// Largest rate in the generator on `levels` levels, for the default step.
pub(crate) fn generator_scale(cfg: &SystemConfig, levels: usize, frame: Frame) -> f64 {
    let hopping = 2.0 * cfg.g * (levels as f64).sqrt();
    let free = match frame {
        Frame::Interaction => 0.0,
        Frame::Lab => (0..levels)
            .map(|n| crate::ladder::free_energy(cfg, n).abs())
            .fold(0.0, f64::max),
    };
    hopping + free
}

pub(crate) fn default_dt(scale: f64, span: f64) -> f64 {
    if scale > 0.0 {
        2.0 * DEFAULT_STEP_FACTOR / scale
    } else {
        span.max(f64::MIN_POSITIVE)
    }
}

/// Weight on level `n_max` and the weight past it; both must stay below
/// `trunc_tol`.
pub(crate) fn check_truncation(
    populations: impl Iterator<Item = f64>,
    n_max: usize,
    tol: f64,
    t: f64,
) -> Result<()> {
    let (mut boundary, mut beyond) = (0.0, 0.0);
    for (n, p) in populations.enumerate() {
        if n == n_max {
            boundary = p;
        } else if n > n_max {
            beyond += p;
        }
    }
    let leakage = boundary.max(beyond);
    if leakage >= tol {
        return Err(Error::Truncation { leakage, tol, t });
    }
    Ok(())
}

/// CSV with columns `t, gt, P0, P1, ...`, one row per state.
pub fn trajectory_csv(trajectory: &[LadderState], cfg: &SystemConfig) -> String {
    let levels = trajectory.first().map_or(0, |s| s.amps.len());
    let mut out = String::from("t,gt");
    for n in 0..levels {
        out.push_str(&format!(",P{n}"));
    }
    out.push('\n');
    for state in trajectory {
        out.push_str(&fmt_sig(state.t));
        out.push(',');
        out.push_str(&fmt_sig(cfg.g * state.t));
        for p in state.probabilities() {
            out.push(',');
            out.push_str(&fmt_sig(p));
        }
        out.push('\n');
    }
    out
}
