use num_complex::Complex64;

use super::{
    check_truncation, default_dt, generator_scale, ode, working_top, Frame, IntegratorSpec, Method,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::ladder::{free_energy, DensityBlock};
use crate::linalg::{CMatrix, I};

/// Allowed drift of `Σα_nn + Σβ_n` away from its initial value, and how far a
/// level population may stray outside `[0, 1]`.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

/// Integrates the coefficient equations
///
/// ```text
/// dα_{n,n'}/dt = -i (Kα − αK)_{n,n'} − γ α_{n,n'}
/// dβ_n/dt      = γ α_{n,n}
/// ```
///
/// where `K` is the tridiagonal Stokes coupling. The full `α` block is carried,
/// not just its diagonal.
pub fn integrate_lindblad(
    rho0: &DensityBlock,
    cfg: &SystemConfig,
    spec: &IntegratorSpec,
) -> Result<Vec<DensityBlock>> {
    rho0.check_dim(cfg)?;
    spec.validate(rho0.t)?;
    let trace0 = rho0.trace();
    if (trace0 - 1.0).abs() > TRACE_DRIFT_TOL {
        return Err(Error::Usage(format!(
            "initial block has trace {trace0}, expected 1"
        )));
    }
    if rho0.hermiticity_error() > 1e-12 || rho0.beta.iter().any(|&b| b < 0.0) {
        return Err(Error::Usage(
            "initial block is not a valid density block".into(),
        ));
    }

    let top = working_top(cfg, spec.t_end());
    let w = top + 1;
    let links: Vec<f64> = (0..w - 1)
        .map(|n| {
            if cfg.link_active(n) {
                cfg.g * ((n + 1) as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let energies: Vec<f64> = match spec.frame {
        Frame::Interaction => vec![0.0; w],
        Frame::Lab => (0..w).map(|n| free_energy(cfg, n)).collect(),
    };
    let gamma = cfg.gamma;

    // Layout: α row-major in [0, w²), β in [w², w² + w).
    let mut y = vec![Complex64::new(0.0, 0.0); w * w + w];
    let d0 = cfg.dim();
    for n in 0..d0 {
        for m in 0..d0 {
            y[n * w + m] = rho0.alpha[[n, m]];
        }
        y[w * w + n] = Complex64::new(rho0.beta[n], 0.0);
    }

    let rhs = |s: &[Complex64], out: &mut [Complex64]| {
        let alpha = &s[..w * w];
        for n in 0..w {
            for m in 0..w {
                // (Kα)_{n,m} − (αK)_{n,m}
                let mut k_alpha = Complex64::new(0.0, 0.0);
                if n > 0 {
                    k_alpha += links[n - 1] * alpha[(n - 1) * w + m];
                }
                if n + 1 < w {
                    k_alpha += links[n] * alpha[(n + 1) * w + m];
                }
                if m > 0 {
                    k_alpha -= links[m - 1] * alpha[n * w + m - 1];
                }
                if m + 1 < w {
                    k_alpha -= links[m] * alpha[n * w + m + 1];
                }
                let a = alpha[n * w + m];
                out[n * w + m] = -I * (k_alpha + (energies[n] - energies[m]) * a) - gamma * a;
            }
            out[w * w + n] = Complex64::new(gamma * alpha[n * w + n].re, 0.0);
        }
    };

    let span = spec.t_end() - rho0.t;
    let mut adaptive_h = span.max(1e-3) * 1e-3;
    let mut t = rho0.t;
    let mut trajectory = Vec::with_capacity(spec.t_grid.len());
    for &t_out in &spec.t_grid {
        match spec.method {
            Method::Rk4 { dt } => {
                let dt = dt.unwrap_or_else(|| {
                    default_dt(generator_scale(cfg, w, spec.frame) + gamma, span)
                });
                ode::rk4(&mut y, t, t_out, dt, &rhs);
            }
            Method::Adaptive { rtol, atol } => {
                ode::dopri5(&mut y, t, t_out, &mut adaptive_h, rtol, atol, &rhs)?;
            }
        }
        t = t_out;

        let populations = (0..w).map(|n| y[n * w + n].re + y[w * w + n].re);
        let trace: f64 = populations.clone().sum();
        if !((trace - trace0).abs() <= TRACE_DRIFT_TOL) {
            return Err(Error::Integrator(format!(
                "trace drifted to {trace} at t = {t} (started at {trace0})"
            )));
        }
        if let Some((n, p)) = populations
            .clone()
            .enumerate()
            .find(|(_, p)| !(-TRACE_DRIFT_TOL..=1.0 + TRACE_DRIFT_TOL).contains(p))
        {
            return Err(Error::Integrator(format!(
                "population of level {n} is {p} at t = {t}; the step is too coarse"
            )));
        }
        check_truncation(populations, cfg.n_max, cfg.trunc_tol, t)?;

        let alpha = CMatrix::from_shape_fn((d0, d0), |(n, m)| y[n * w + m]);
        let beta = (0..d0).map(|n| y[w * w + n].re).collect();
        trajectory.push(DensityBlock { alpha, beta, t });
    }
    Ok(trajectory)
}
