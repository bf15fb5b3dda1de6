//! Adaptive initial-value solver for the autonomous model fields.
//!
//! The default method is the Dormand–Prince 5(4) embedded pair. A classic
//! RK4 with step-doubling error control and a fixed-step RK4 are available
//! as alternatives. Output is sampled on a uniform grid by landing steps
//! exactly on sample times; after every accepted step the state is clipped
//! back into the field's box, and a clip larger than [`CLAMP_LIMIT`] is an
//! error because the exact dynamics never leave the box.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::models::{AsirParams, AsisParams, SisParams, STATE_TOLERANCE};

pub const CLAMP_LIMIT: f64 = 1e-7;
const MAX_STEPS: usize = 50_000_000;

/// An autonomous vector field on a box in `R^N`.
pub trait VectorField<const N: usize> {
    fn rate(&self, y: &[f64; N]) -> [f64; N];

    fn lower(&self) -> [f64; N] {
        [f64::NEG_INFINITY; N]
    }

    fn upper(&self) -> [f64; N] {
        [f64::INFINITY; N]
    }

    /// Scalar tracked as the running maximum (total infected for the models).
    fn infected(&self, y: &[f64; N]) -> f64;
}

impl VectorField<1> for SisParams {
    fn rate(&self, y: &[f64; 1]) -> [f64; 1] {
        [self.flow(y[0])]
    }
    fn lower(&self) -> [f64; 1] {
        [0.0]
    }
    fn upper(&self) -> [f64; 1] {
        [1.0]
    }
    fn infected(&self, y: &[f64; 1]) -> f64 {
        y[0]
    }
}

impl VectorField<2> for AsisParams {
    fn rate(&self, y: &[f64; 2]) -> [f64; 2] {
        self.flow(y[0], y[1])
    }
    fn lower(&self) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn upper(&self) -> [f64; 2] {
        [self.x_a(), 1.0 - self.x_a()]
    }
    fn infected(&self, y: &[f64; 2]) -> f64 {
        y[0] + y[1]
    }
}

impl VectorField<5> for AsirParams {
    fn rate(&self, y: &[f64; 5]) -> [f64; 5] {
        self.flow(y)
    }
    fn lower(&self) -> [f64; 5] {
        [0.0; 5]
    }
    fn upper(&self) -> [f64; 5] {
        [1.0; 5]
    }
    fn infected(&self, y: &[f64; 5]) -> f64 {
        y[2] + y[3]
    }
}

/// Closure-backed field, mostly for tests and ad-hoc problems.
pub struct FnField<const N: usize, F> {
    pub f: F,
    pub lower: [f64; N],
    pub upper: [f64; N],
}

impl<const N: usize, F: Fn(&[f64; N]) -> [f64; N]> FnField<N, F> {
    pub fn unbounded(f: F) -> Self {
        Self {
            f,
            lower: [f64::NEG_INFINITY; N],
            upper: [f64::INFINITY; N],
        }
    }
}

impl<const N: usize, F: Fn(&[f64; N]) -> [f64; N]> VectorField<N> for FnField<N, F> {
    fn rate(&self, y: &[f64; N]) -> [f64; N] {
        (self.f)(y)
    }
    fn lower(&self) -> [f64; N] {
        self.lower
    }
    fn upper(&self) -> [f64; N] {
        self.upper
    }
    fn infected(&self, y: &[f64; N]) -> f64 {
        y.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    DormandPrince,
    StepDoubling,
    FixedRk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationOptions {
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub sample_interval: f64,
    pub equilibrium_eps: f64,
    pub method: Method,
}

impl IntegrationOptions {
    pub fn new(t_end: f64, sample_interval: f64) -> Self {
        Self {
            t_end,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            sample_interval,
            equilibrium_eps: 1e-10,
            method: Method::DormandPrince,
        }
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn equilibrium_eps(mut self, eps: f64) -> Self {
        self.equilibrium_eps = eps;
        self
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        pos("t_end", self.t_end)?;
        pos("rel_tol", self.rel_tol)?;
        pos("abs_tol", self.abs_tol)?;
        pos("sample_interval", self.sample_interval)?;
        pos("equilibrium_eps", self.equilibrium_eps)?;
        if self.sample_interval > self.t_end {
            return Err(invalid("sample_interval", "must not exceed t_end"));
        }
        if let Method::FixedRk4 { step } = self.method {
            pos("step", step)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub value: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub converged: bool,
    pub final_state: [f64; N],
    /// Largest infected value over every accepted step, not only the samples.
    pub running_max_infected: Peak,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds t = 0")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64; N])> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for j in 0..N {
                out[j] += h * c * k[j];
            }
        }
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], atol: f64, rtol: f64) -> f64 {
    let sum: f64 = (0..N)
        .map(|j| {
            let sc = atol + rtol * y0[j].abs().max(y1[j].abs());
            (err[j] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

// Dormand–Prince 5(4) tableau. The fields are autonomous, so the stage
// nodes c_i are not needed.
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri_step<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N]) {
    let k2 = field.rate(&axpy(y, h, &[(A21, k1)]));
    let k3 = field.rate(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = field.rate(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = field.rate(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = field.rate(&axpy(
        y,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y5 = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = field.rate(&y5);
    let mut err = [0.0; N];
    for j in 0..N {
        err[j] = h * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
    }
    (y5, err)
}

fn rk4_step<const N: usize, F: VectorField<N> + ?Sized>(field: &F, y: &[f64; N], k1: &[f64; N], h: f64) -> [f64; N] {
    let k2 = field.rate(&axpy(y, h, &[(0.5, k1)]));
    let k3 = field.rate(&axpy(y, h, &[(0.5, &k2)]));
    let k4 = field.rate(&axpy(y, h, &[(1.0, &k3)]));
    axpy(
        y,
        h,
        &[(1.0 / 6.0, k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
    )
}

/// One attempted step: candidate state and its scaled error (0 for fixed steps).
fn attempt<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    method: Method,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    opts: &IntegrationOptions,
) -> ([f64; N], f64) {
    match method {
        Method::DormandPrince => {
            let (y5, err) = dopri_step(field, y, k1, h);
            (y5, error_norm(&err, y, &y5, opts.abs_tol, opts.rel_tol))
        }
        Method::StepDoubling => {
            let full = rk4_step(field, y, k1, h);
            let mid = rk4_step(field, y, k1, 0.5 * h);
            let half = rk4_step(field, &mid, &field.rate(&mid), 0.5 * h);
            let mut err = [0.0; N];
            let mut out = half;
            for j in 0..N {
                let d = (half[j] - full[j]) / 15.0;
                err[j] = d;
                out[j] = half[j] + d;
            }
            (out, error_norm(&err, y, &out, opts.abs_tol, opts.rel_tol))
        }
        Method::FixedRk4 { .. } => (rk4_step(field, y, k1, h), 0.0),
    }
}

fn clamp_into_box<const N: usize>(y: &mut [f64; N], lo: &[f64; N], hi: &[f64; N], limit: f64, t: f64) -> Result<()> {
    for j in 0..N {
        let clipped = y[j].clamp(lo[j], hi[j]);
        let amount = (clipped - y[j]).abs();
        if amount > limit {
            return Err(Error::ClampExceeded { component: j, amount, t });
        }
        y[j] = clipped;
    }
    Ok(())
}

/// Integrates `field` from `s0` over `[0, opts.t_end]`.
///
/// Sampling happens at multiples of `sample_interval`; the run stops early,
/// with `converged = true`, once the field norm falls below
/// `equilibrium_eps`, and that final state is appended as the last sample.
pub fn integrate<const N: usize, F: VectorField<N> + ?Sized>(
    field: &F,
    s0: [f64; N],
    opts: &IntegrationOptions,
) -> Result<Trajectory<N>> {
    opts.validate()?;
    let lo = field.lower();
    let hi = field.upper();
    let mut y = s0;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState(format!("initial state {s0:?} is not finite")));
    }
    clamp_into_box(&mut y, &lo, &hi, STATE_TOLERANCE, 0.0)
        .map_err(|_| Error::InvalidState(format!("initial state {s0:?} outside the valid box")))?;

    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![y];
    let mut peak = Peak { value: field.infected(&y), time: 0.0 };
    let mut k1 = field.rate(&y);
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    if norm(&k1) < opts.equilibrium_eps {
        return Ok(Trajectory {
            times,
            states,
            converged: true,
            final_state: y,
            running_max_infected: peak,
            steps_accepted: 0,
            steps_rejected: 0,
        });
    }

    let mut h = match opts.method {
        Method::FixedRk4 { step } => step,
        _ => initial_step(&y, &k1, opts),
    }
    .min(opts.sample_interval);
    let mut sample_index = 1u64;
    let mut converged = false;

    while t < opts.t_end {
        if accepted + rejected >= MAX_STEPS {
            return Err(Error::StepLimit(MAX_STEPS));
        }
        let next_sample = (sample_index as f64 * opts.sample_interval).min(opts.t_end);
        let remaining = next_sample - t;
        let lands = h >= remaining;
        let h_try = if lands { remaining } else { h };

        let (mut y_new, err) = attempt(field, opts.method, &y, &k1, h_try, opts);
        let finite = err.is_finite() && y_new.iter().all(|v| v.is_finite());

        if finite && err <= 1.0 {
            clamp_into_box(&mut y_new, &lo, &hi, CLAMP_LIMIT, t + h_try)?;
            t = if lands { next_sample } else { t + h_try };
            y = y_new;
            k1 = field.rate(&y);
            accepted += 1;

            let inf = field.infected(&y);
            if inf > peak.value {
                peak = Peak { value: inf, time: t };
            }
            let at_rest = norm(&k1) < opts.equilibrium_eps;
            if lands {
                times.push(t);
                states.push(y);
                sample_index += 1;
            } else if at_rest || t >= opts.t_end {
                times.push(t);
                states.push(y);
            }
            if at_rest {
                converged = true;
                break;
            }
            if !matches!(opts.method, Method::FixedRk4 { .. }) {
                let grown = h_try * step_factor(err);
                // keep the larger size after a step shortened onto a sample
                h = if lands { h.max(grown) } else { grown };
            }
        } else {
            rejected += 1;
            if matches!(opts.method, Method::FixedRk4 { .. }) {
                return Err(Error::NonFinite { t });
            }
            h = if finite { h_try * step_factor(err).min(1.0) } else { 0.25 * h_try };
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(if finite {
                    Error::StepSizeUnderflow { t, h }
                } else {
                    Error::NonFinite { t }
                });
            }
        }
    }

    Ok(Trajectory {
        times,
        states,
        converged,
        final_state: y,
        running_max_infected: peak,
        steps_accepted: accepted,
        steps_rejected: rejected,
    })
}

// Both adaptive methods have local error O(h^5).
fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}

fn initial_step<const N: usize>(y: &[f64; N], f0: &[f64; N], opts: &IntegrationOptions) -> f64 {
    let sc = |j: usize| opts.abs_tol + opts.rel_tol * y[j].abs();
    let d0 = (y.iter().enumerate().map(|(j, v)| (v / sc(j)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d1 = (f0.iter().enumerate().map(|(j, v)| (v / sc(j)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.clamp(1e-8, opts.sample_interval)
}

/// Peak of `projection` over the sampled states, refined by a three-point
/// quadratic fit around the discrete maximum.
pub fn track_peak<const N: usize>(traj: &Trajectory<N>, projection: impl Fn(&[f64; N]) -> f64) -> Result<Peak> {
    if traj.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    let values: Vec<f64> = traj.states.iter().map(&projection).collect();
    let (k, &vk) = values
        .iter()
        .enumerate()
        .fold((0, &values[0]), |best, (j, v)| if *v > *best.1 { (j, v) } else { best });
    let discrete = Peak { value: vk, time: traj.times[k] };
    if k == 0 || k + 1 == values.len() {
        return Ok(discrete);
    }
    let (t0, t1, t2) = (traj.times[k - 1], traj.times[k], traj.times[k + 1]);
    let (v0, v1, v2) = (values[k - 1], vk, values[k + 1]);
    // Newton divided differences
    let d01 = (v1 - v0) / (t1 - t0);
    let d12 = (v2 - v1) / (t2 - t1);
    let curvature = (d12 - d01) / (t2 - t0);
    if !(curvature < 0.0) {
        return Ok(discrete);
    }
    let slope_at_t1 = d01 + curvature * (t1 - t0);
    let tv = t1 - slope_at_t1 / (2.0 * curvature);
    if !(tv > t0 && tv < t2) {
        return Ok(discrete);
    }
    let value = v1 + slope_at_t1 * (tv - t1) + curvature * (tv - t1).powi(2);
    Ok(Peak { value: value.max(vk), time: tv })
}
