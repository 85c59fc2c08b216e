use num_complex::Complex64;

use super::{
    check_truncation, default_dt, generator_scale, ode, working_top, Frame, IntegratorSpec, Method,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ladder::{free_energy, interaction_rhs, LadderState};
use crate::linalg::I;

/// Allowed change of `⟨ψ|ψ⟩` over the run.
pub const NORM_DRIFT_TOL: f64 = 1e-8;

/// Integrates `i d|ψ⟩/dt = H|ψ⟩` on the single-excitation sector and returns
/// the state at every time in `spec.t_grid`.
pub fn integrate_schrodinger(
    psi0: &LadderState,
    cfg: &SystemConfig,
    spec: &IntegratorSpec,
) -> Result<Vec<LadderState>> {
    if cfg.gamma != 0.0 {
        return Err(Error::Usage(
            "integrate_schrodinger is lossless; use integrate_lindblad when gamma > 0".into(),
        ));
    }
    psi0.check_dim(cfg)?;
    spec.validate(psi0.t)?;
    let norm = psi0.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Usage(format!(
            "initial state has norm² {norm}, expected 1"
        )));
    }

    let top = working_top(cfg, spec.t_end());
    let levels = top + 1;
    let mut y = vec![Complex64::new(0.0, 0.0); levels];
    y[..psi0.amps.len()].copy_from_slice(&psi0.amps);
    let energies: Vec<f64> = match spec.frame {
        Frame::Interaction => vec![0.0; levels],
        Frame::Lab => (0..levels).map(|n| free_energy(cfg, n)).collect(),
    };
    let rhs = |amps: &[Complex64], out: &mut [Complex64]| {
        interaction_rhs(cfg, amps, out);
        if spec.frame == Frame::Lab {
            for ((o, a), e) in out.iter_mut().zip(amps).zip(&energies) {
                *o += -I * *e * a;
            }
        }
    };

    let span = spec.t_end() - psi0.t;
    let mut adaptive_h = span.max(1e-3) * 1e-3;
    let mut t = psi0.t;
    let mut trajectory = Vec::with_capacity(spec.t_grid.len());
    for &t_out in &spec.t_grid {
        match spec.method {
            Method::Rk4 { dt } => {
                let dt = dt
                    .unwrap_or_else(|| default_dt(generator_scale(cfg, levels, spec.frame), span));
                ode::rk4(&mut y, t, t_out, dt, &rhs);
            }
            Method::Adaptive { rtol, atol } => {
                ode::dopri5(&mut y, t, t_out, &mut adaptive_h, rtol, atol, &rhs)?;
            }
        }
        t = t_out;
        let drift = (crate::linalg::norm_sqr(&y) - norm).abs();
        if !(drift <= NORM_DRIFT_TOL) {
            return Err(Error::Integrator(format!(
                "norm drifted by {drift:e} at t = {t}; the step is too coarse"
            )));
        }
        check_truncation(
            y.iter().map(Complex64::norm_sqr),
            cfg.n_max,
            cfg.trunc_tol,
            t,
        )?;
        trajectory.push(LadderState {
            amps: y[..cfg.dim()].to_vec(),
            vac_amp: psi0.vac_amp,
            t,
        });
    }
    Ok(trajectory)
}
