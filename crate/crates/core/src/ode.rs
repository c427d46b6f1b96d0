//! Adaptive fourth-order Runge-Kutta with step-doubling error control.
//!
//! The state type only needs vector-space operations and a max-abs norm;
//! hierarchies integrate whole sequences of matrices through the same loop.

use crate::error::{Error, Result};

pub trait OdeState: Clone {
    /// `self += a * other`
    fn axpy(&mut self, a: f64, other: &Self);
    fn scale(&mut self, a: f64);
    /// Max-abs entry; used for local error control.
    fn norm(&self) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Local truncation error target per step (absolute, max-abs).
    pub tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { tol: 1e-8, dt_init: 1e-2, dt_min: 1e-10, dt_max: 0.25 }
    }
}

fn rk4_step<S: OdeState>(y: &S, t: f64, h: f64, rhs: &mut impl FnMut(f64, &S) -> S) -> S {
    let k1 = rhs(t, y);
    let mut y2 = y.clone();
    y2.axpy(0.5 * h, &k1);
    let k2 = rhs(t + 0.5 * h, &y2);
    let mut y3 = y.clone();
    y3.axpy(0.5 * h, &k2);
    let k3 = rhs(t + 0.5 * h, &y3);
    let mut y4 = y.clone();
    y4.axpy(h, &k3);
    let k4 = rhs(t + h, &y4);
    let mut out = y.clone();
    out.axpy(h / 6.0, &k1);
    out.axpy(h / 3.0, &k2);
    out.axpy(h / 3.0, &k3);
    out.axpy(h / 6.0, &k4);
    out
}

/// Integrate from `t0` to `t1`, returning the state at `t1`.
///
/// Every accepted step compares one full step against two half steps; the
/// Richardson estimate of the local error must stay below `tol` scaled by
/// `max(1, ‖y‖)`, otherwise the step is rejected and retried with half the
/// size. Rejection below `dt_min` is an error.
pub fn integrate_to<S: OdeState>(
    y0: &S,
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
    mut rhs: impl FnMut(f64, &S) -> S,
) -> Result<S> {
    if t1 == t0 {
        return Ok(y0.clone());
    }
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut y = y0.clone();
    let mut h = opts.dt_init.min(opts.dt_max).min((t1 - t0).abs()) * dir;
    while (t1 - t) * dir > 1e-14 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let big = rk4_step(&y, t, h, &mut rhs);
        let mut half = rk4_step(&y, t, 0.5 * h, &mut rhs);
        half = rk4_step(&half, t + 0.5 * h, 0.5 * h, &mut rhs);
        let mut diff = half.clone();
        diff.axpy(-1.0, &big);
        let err = diff.norm() / 15.0;
        let scale = y.norm().max(1.0);
        if err <= opts.tol * scale {
            // Accept, with local Richardson extrapolation.
            y = half;
            y.axpy(1.0 / 15.0, &diff);
            t += h;
            let grow = if err > 0.0 {
                0.9 * (opts.tol * scale / err).powf(0.2)
            } else {
                5.0
            };
            h = (h.abs() * grow.clamp(0.2, 5.0)).min(opts.dt_max) * dir;
        } else {
            h *= 0.5;
            if h.abs() < opts.dt_min {
                return Err(Error::StepRejection {
                    t,
                    min: opts.dt_min,
                    err,
                    tol: opts.tol * scale,
                });
            }
        }
    }
    Ok(y)
}

/// Integrate and sample the solution at the given output times
/// (strictly increasing, starting at or after `t0`).
pub fn integrate_path<S: OdeState>(
    y0: &S,
    t0: f64,
    times: &[f64],
    opts: &OdeOptions,
    mut rhs: impl FnMut(f64, &S) -> S,
) -> Result<Vec<S>> {
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.clone();
    let mut t = t0;
    for &target in times {
        y = integrate_to(&y, t, target, opts, &mut rhs)?;
        t = target;
        out.push(y.clone());
    }
    Ok(out)
}

/// Uniform grid `t0, t0+dt, …` with `steps` intervals ending at `t1`.
pub fn uniform_times(t0: f64, t1: f64, steps: usize) -> Vec<f64> {
    (1..=steps)
        .map(|k| t0 + (t1 - t0) * k as f64 / steps as f64)
        .collect()
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, other: &Self) {
        for (x, y) in self.iter_mut().zip(other) {
            *x += a * y;
        }
    }

    fn scale(&mut self, a: f64) {
        for x in self.iter_mut() {
            *x *= a;
        }
    }

    fn norm(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions { tol: 1e-11, ..Default::default() };
        let y = integrate_to(&vec![1.0], 0.0, 2.0, &opts, |_, y| vec![-y[0]]).unwrap();
        assert_abs_diff_eq!(y[0], (-2.0_f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let opts = OdeOptions { tol: 1e-10, ..Default::default() };
        let y = integrate_to(&vec![1.0, 0.0], 0.0, 10.0, &opts, |_, y| vec![y[1], -y[0]]).unwrap();
        let energy = y[0] * y[0] + y[1] * y[1];
        assert_abs_diff_eq!(energy, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(y[0], (10.0_f64).cos(), epsilon = 1e-7);
    }

    #[test]
    fn nonautonomous_rhs() {
        // y' = 2t -> y = t^2
        let y = integrate_to(&vec![0.0], 0.0, 3.0, &OdeOptions::default(), |t, _| vec![2.0 * t])
            .unwrap();
        assert_abs_diff_eq!(y[0], 9.0, epsilon = 1e-10);
    }

    #[test]
    fn path_sampling_matches_single_shot() {
        let times = uniform_times(0.0, 1.0, 4);
        let opts = OdeOptions { tol: 1e-11, ..Default::default() };
        let path = integrate_path(&vec![1.0], 0.0, &times, &opts, |_, y| vec![-2.0 * y[0]])
            .unwrap();
        assert_eq!(path.len(), 4);
        assert_abs_diff_eq!(path[3][0], (-2.0_f64).exp(), epsilon = 1e-9);
    }
}
