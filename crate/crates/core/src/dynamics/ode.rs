//! Adaptive Dormand–Prince 5(4) integrator for complex vector ODEs.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::{Error, Result};

pub type State = DVector<Complex64>;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Steps shorter than `min_step * max(1, |t|)` abort the run.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, min_step: 1e-14, max_steps: 5_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `dy/dt = rhs(t, y)` from `t0` and returns the state at every
/// entry of `outputs` (sorted, all `>= t0`). Integration stops exactly at
/// each output time and at each `breakpoints` entry, so discontinuities in
/// the right-hand side can be placed on step boundaries.
pub fn solve<F>(mut rhs: F, t0: f64, y0: State, outputs: &[f64], breakpoints: &[f64], tol: Tolerances) -> Result<Vec<State>>
where
    F: FnMut(f64, &State) -> State,
{
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(Error::invalid("output times must be sorted and not precede the start time"));
    }
    let mut stops: Vec<(f64, bool)> = outputs.iter().map(|&t| (t, true)).collect();
    stops.extend(breakpoints.iter().filter(|&&b| b > t0).map(|&b| (b, false)));
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&y, &k1, tol);
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(outputs.len());

    for (stop, record) in stops {
        while t < stop {
            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::StepSizeCollapse { time: t, step: h });
            }
            let mut last = false;
            if t + h >= stop {
                h = stop - t;
                last = true;
            }
            // a step ending on a breakpoint samples the right-hand side from the left
            let limit = if last && !record { stop - stop.abs().max(1.0) * f64::EPSILON } else { f64::INFINITY };
            let (y_new, k_last, err) = step(&mut rhs, t, &y, &k1, h, limit, tol);
            if err <= 1.0 {
                t = if last { stop } else { t + h };
                y = y_new;
                k1 = k_last;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= grow;
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < tol.min_step * t.abs().max(1.0) && t < stop {
                return Err(Error::StepSizeCollapse { time: t, step: h });
            }
        }
        if record {
            out.push(y.clone());
        }
        // the right-hand side may be discontinuous here; drop the FSAL stage
        k1 = rhs(t, &y);
    }
    Ok(out)
}

fn initial_step(y: &State, dy: &State, tol: Tolerances) -> f64 {
    let scale = |v: &Complex64, s: &Complex64| v.norm() / (tol.atol + tol.rtol * s.norm());
    let d0 = rms(y.iter().zip(y.iter()).map(|(v, s)| scale(v, s)));
    let d1 = rms(dy.iter().zip(y.iter()).map(|(v, s)| scale(v, s)));
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(1.0)
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn step<F>(rhs: &mut F, t: f64, y: &State, k1: &State, h: f64, limit: f64, tol: Tolerances) -> (State, State, f64)
where
    F: FnMut(f64, &State) -> State,
{
    let mut k: Vec<State> = Vec::with_capacity(7);
    k.push(k1.clone());
    for s in 1..7 {
        let mut ys = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[s][j] != 0.0 {
                ys.axpy(Complex64::new(h * A[s][j], 0.0), kj, Complex64::new(1.0, 0.0));
            }
        }
        if s == 6 {
            // FSAL: the seventh stage is evaluated at the new solution
            let k7 = rhs((t + h).min(limit), &ys);
            let mut err_vec = State::zeros(y.len());
            for (j, kj) in k.iter().chain(std::iter::once(&k7)).enumerate() {
                if E[j] != 0.0 {
                    err_vec.axpy(Complex64::new(h * E[j], 0.0), kj, Complex64::new(1.0, 0.0));
                }
            }
            let err = rms(
                err_vec
                    .iter()
                    .zip(y.iter().zip(ys.iter()))
                    .map(|(e, (a, b))| e.norm() / (tol.atol + tol.rtol * a.norm().max(b.norm()))),
            );
            return (ys, k7, err);
        }
        k.push(rhs((t + C[s] * h).min(limit), &ys));
    }
    unreachable!("loop returns at the final stage")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_hits_outputs() {
        let y0 = State::from_element(1, Complex64::new(1.0, 0.0));
        let times = [0.0, 0.5, 1.0, 3.0];
        let out = solve(|_, y| y * Complex64::new(-0.5, 2.0), 0.0, y0, &times, &[], Tolerances::default()).unwrap();
        for (t, y) in times.iter().zip(&out) {
            let exact = (Complex64::new(-0.5, 2.0) * t).exp();
            assert!((y[0] - exact).norm() < 1e-9);
        }
    }

    #[test]
    fn breakpoint_with_switched_rhs() {
        let y0 = State::from_element(1, Complex64::new(0.0, 0.0));
        let out = solve(
            |t, _| State::from_element(1, Complex64::new(if t < 1.0 { 1.0 } else { 0.0 }, 0.0)),
            0.0,
            y0,
            &[2.0],
            &[1.0],
            Tolerances::default(),
        )
        .unwrap();
        assert!((out[0][0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsorted_outputs() {
        let y0 = State::from_element(1, Complex64::new(1.0, 0.0));
        assert!(solve(|_, y| y.clone(), 0.0, y0, &[1.0, 0.5], &[], Tolerances::default()).is_err());
    }

    #[test]
    fn stiff_blowup_collapses_step() {
        let y0 = State::from_element(1, Complex64::new(1.0, 0.0));
        let tol = Tolerances { max_steps: 1000, ..Tolerances::default() };
        let r = solve(|_, y| y.map(|v| v * v * v), 0.0, y0, &[10.0], &[], tol);
        assert!(matches!(r, Err(Error::StepSizeCollapse { .. })));
    }
}
