//! Explicit Runge–Kutta steppers over complex state vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

fn axpy(out: &mut [C], y: &[C], h: f64, terms: &[(f64, &[C])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C::new(0.0, 0.0);
        for (c, k) in terms {
            acc += *c * k[i];
        }
        *o = y[i] + h * acc;
    }
}

/// Classic fourth-order Runge–Kutta from `t0` to `t1` with the largest uniform
/// step not exceeding `max_dt`.
pub fn rk4<F>(y: &mut [C], t0: f64, t1: f64, max_dt: f64, rhs: &F)
where
    F: Fn(&[C], &mut [C]),
{
    let span = t1 - t0;
    if span <= 0.0 {
        return;
    }
    let steps = (span / max_dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let n = y.len();
    let zero = C::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
    );
    for _ in 0..steps {
        rhs(y, &mut k1);
        axpy(&mut tmp, y, h, &[(0.5, &k1)]);
        rhs(&tmp, &mut k2);
        axpy(&mut tmp, y, h, &[(0.5, &k2)]);
        rhs(&tmp, &mut k3);
        axpy(&mut tmp, y, h, &[(1.0, &k3)]);
        rhs(&tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince 5(4) from `t0` to `t1`. `h` carries the step size
/// between calls.
pub fn dopri5<F>(
    y: &mut [C],
    t0: f64,
    t1: f64,
    h: &mut f64,
    rtol: f64,
    atol: f64,
    rhs: &F,
) -> Result<()>
where
    F: Fn(&[C], &mut [C]),
{
    let n = y.len();
    let zero = C::new(0.0, 0.0);
    let mut k: Vec<Vec<C>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut tmp = vec![zero; n];
    let mut y5 = vec![zero; n];
    let mut t = t0;
    rhs(y, &mut k[0]);
    while t < t1 {
        let step = h.min(t1 - t);
        if step < 1e-14 * t1.abs().max(1.0) {
            return Err(Error::Integrator(format!("step size underflow at t = {t}")));
        }
        let [k1, k2, k3, k4, k5, k6, k7] = &mut k[..] else {
            unreachable!()
        };
        axpy(&mut tmp, y, step, &[(A21, k1.as_slice())]);
        rhs(&tmp, k2);
        axpy(
            &mut tmp,
            y,
            step,
            &[(A31, k1.as_slice()), (A32, k2.as_slice())],
        );
        rhs(&tmp, k3);
        axpy(
            &mut tmp,
            y,
            step,
            &[
                (A41, k1.as_slice()),
                (A42, k2.as_slice()),
                (A43, k3.as_slice()),
            ],
        );
        rhs(&tmp, k4);
        axpy(
            &mut tmp,
            y,
            step,
            &[
                (A51, k1.as_slice()),
                (A52, k2.as_slice()),
                (A53, k3.as_slice()),
                (A54, k4.as_slice()),
            ],
        );
        rhs(&tmp, k5);
        axpy(
            &mut tmp,
            y,
            step,
            &[
                (A61, k1.as_slice()),
                (A62, k2.as_slice()),
                (A63, k3.as_slice()),
                (A64, k4.as_slice()),
                (A65, k5.as_slice()),
            ],
        );
        rhs(&tmp, k6);
        axpy(
            &mut y5,
            y,
            step,
            &[
                (B1, k1.as_slice()),
                (B3, k3.as_slice()),
                (B4, k4.as_slice()),
                (B5, k5.as_slice()),
                (B6, k6.as_slice()),
            ],
        );
        rhs(&y5, k7);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = atol + rtol * y[i].norm().max(y5[i].norm());
            let ratio = e.norm() / scale;
            err = if ratio.is_nan() {
                f64::INFINITY
            } else {
                err.max(ratio)
            };
        }
        if err <= 1.0 {
            t += step;
            y.copy_from_slice(&y5);
            // First-same-as-last.
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        *h = step * factor;
    }
    Ok(())
}
