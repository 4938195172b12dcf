//! Dormand–Prince 5(4) integrator with PI step-size control.
//!
//! Works in either direction of the independent variable. Steps are
//! shortened to land exactly on requested output points, and an optional
//! stop predicate ends integration at the first accepted state that
//! satisfies it.

use crate::error::{HoroError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h0: None, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// Which states end up in the returned trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// Every accepted step.
    Steps,
    /// Only the listed parameter values (must be ordered in the direction
    /// of integration), plus the initial and final states.
    At(Vec<f64>),
    /// A uniform grid `t0 + i·dt` (sign taken from the direction).
    Uniform(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the end of the interval.
    End,
    /// The stop predicate fired.
    Stopped,
}

#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub termination: Termination,
    pub accepted: usize,
    pub rejected: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Largest number of points an `Output::Uniform` grid may request.
pub const MAX_UNIFORM_OUTPUTS: usize = 20_000_000;

/// Pending output points, nearest first.
enum Targets {
    /// Stored in reverse order.
    List(Vec<f64>),
    Uniform {
        t0: f64,
        step: f64,
        next: usize,
        count: usize,
    },
}

impl Targets {
    fn peek(&self) -> Option<f64> {
        match self {
            Targets::List(v) => v.last().copied(),
            Targets::Uniform { t0, step, next, count } => (*next <= *count).then(|| t0 + *next as f64 * step),
        }
    }

    fn advance(&mut self) {
        match self {
            Targets::List(v) => {
                v.pop();
            }
            Targets::Uniform { next, .. } => *next += 1,
        }
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`.
///
/// `stop` is evaluated on each accepted state; when it returns true the
/// integration ends there with [`Termination::Stopped`].
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
    output: &Output,
    mut stop: S,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(HoroError::InvalidInput("ODE tolerances must be positive".into()));
    }
    let mut traj = Trajectory { t: vec![t0], y: vec![y0], termination: Termination::End, accepted: 0, rejected: 0 };
    if t0 == t1 {
        return Ok(traj);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut targets = match output {
        Output::Steps => Targets::List(Vec::new()),
        Output::At(ts) => {
            let mut list: Vec<f64> =
                ts.iter().copied().filter(|&t| (t - t0) * dir > 0.0 && (t1 - t) * dir >= 0.0).collect();
            list.reverse();
            Targets::List(list)
        }
        Output::Uniform(dt) => {
            let dt = dt.abs();
            if !(dt > 0.0) {
                return Err(HoroError::InvalidInput("output spacing must be positive".into()));
            }
            let count = (span / dt).floor();
            if count > MAX_UNIFORM_OUTPUTS as f64 {
                return Err(HoroError::InvalidInput(format!(
                    "output grid of spacing {dt:e} over length {span:e} exceeds {MAX_UNIFORM_OUTPUTS} samples"
                )));
            }
            Targets::Uniform { t0, step: dir * dt, next: 1, count: count as usize }
        }
    };
    let record_all = matches!(output, Output::Steps);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if !finite(&k1) {
        return Err(HoroError::StepFailure { t, reason: "non-finite derivative at the initial state".into() });
    }
    let scale = |y: &[f64; N], i: usize| opts.atol + opts.rtol * y[i].abs();
    let mut h = match opts.h0 {
        Some(h0) => h0.abs(),
        None => {
            let d0 = (0..N).map(|i| (y[i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt();
            let d1 = (0..N).map(|i| (k1[i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt();
            let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            guess.min(span)
        }
    }
    .min(opts.h_max);
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    let h_min = 1e-14 * t0.abs().max(t1.abs()).max(1.0) * 1e-3;

    loop {
        if steps >= opts.max_steps {
            return Err(HoroError::StepFailure { t, reason: format!("exceeded {} steps", opts.max_steps) });
        }
        steps += 1;
        // Clamp to the next output point or the end of the interval.
        // Gaps shorter than a relative 1e-10 of the step are absorbed so a
        // rounding sliver never forces a degenerate final step.
        let remaining = (t1 - t) * dir;
        let mut h_try = if remaining <= h * (1.0 + 1e-10) { remaining } else { h };
        let mut hit_target = false;
        if let Some(tt) = targets.peek() {
            let to_target = (tt - t) * dir;
            if to_target <= h_try * (1.0 + 1e-10) {
                h_try = to_target;
                hit_target = true;
            }
        }
        let hit_end = h_try >= remaining;
        if h_try <= h_min {
            return Err(HoroError::StepFailure { t, reason: format!("step size underflow ({h_try:e})") });
        }
        let hs = dir * h_try;

        let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + hs, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + hs, &y_new);

        let ok = finite(&y_new) && finite(&k7) && [&k2, &k3, &k4, &k5, &k6].iter().all(|k| finite(k));
        let err = if ok {
            let mut acc = 0.0;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                acc += (e / sc).powi(2);
            }
            (acc / N as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            // PI controller (Gustafsson); exponents for an order-5 method.
            let factor =
                if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0) };
            err_prev = err.max(1e-4);
            t = match targets.peek() {
                _ if hit_end => t1,
                Some(tt) if hit_target => tt,
                _ => t + hs,
            };
            y = y_new;
            k1 = k7;
            traj.accepted += 1;
            let stopped = stop(t, &y);
            if record_all || hit_target || hit_end || stopped {
                traj.t.push(t);
                traj.y.push(y);
            }
            if hit_target {
                targets.advance();
            }
            if stopped {
                traj.termination = Termination::Stopped;
                return Ok(traj);
            }
            if hit_end {
                return Ok(traj);
            }
            // A step shortened by clamping should not shrink the controller's proposal.
            let base = if hit_target { h.max(h_try) } else { h_try };
            h = (base * factor).min(opts.h_max);
        } else {
            traj.rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h = h_try * factor;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_forward_and_backward() {
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let tr = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, &opts, &Output::Steps, |_, _| false).unwrap();
        let (t, y) = tr.last();
        assert_eq!(t, 3.0);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-12);
        let tr = integrate(|_, y: &[f64; 1]| [-y[0]], 3.0, [(-3.0f64).exp()], 0.0, &opts, &Output::Steps, |_, _| false)
            .unwrap();
        assert!((tr.last().1[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_lands_on_requested_points() {
        let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 * 0.7).collect();
        let tr = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            7.0,
            &opts,
            &Output::At(ts.clone()),
            |_, _| false,
        )
        .unwrap();
        assert_eq!(tr.t.len(), 11);
        for (t, y) in tr.t.iter().zip(&tr.y) {
            assert!((y[0] - t.sin()).abs() < 1e-9, "t={t}");
        }
        for (a, b) in tr.t[1..].iter().zip(&ts) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn uniform_output_and_stop_predicate() {
        let opts = OdeOptions::default();
        let tr =
            integrate(|_, _y: &[f64; 1]| [1.0], 0.0, [0.0], 10.0, &opts, &Output::Uniform(0.5), |_, y| y[0] >= 2.2)
                .unwrap();
        assert_eq!(tr.termination, Termination::Stopped);
        assert!(tr.last().1[0] >= 2.2);
        assert!(tr.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn blowup_is_reported() {
        let opts = OdeOptions { max_steps: 10_000, ..Default::default() };
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &opts, &Output::Steps, |_, _| false);
        assert!(matches!(r, Err(HoroError::StepFailure { .. })));
    }
}
