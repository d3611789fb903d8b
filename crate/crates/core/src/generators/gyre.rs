//! Double-gyre flow on `[0, 2] x [0, 1]` and its Ulam box discretization.
//!
//! Stream function `psi = A sin(pi f(x, t)) sin(pi y)` with
//! `f(x, t) = a(t) x^2 + (1 - 2 a(t)) x`, `a(t) = delta sin(omega t)`; the
//! velocity is `(-d psi/dy, d psi/dx)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::PairDataset;
use crate::{rng, Error, Execution, Result};

const X_MAX: f64 = 2.0;
const Y_MAX: f64 = 1.0;
/// Distance outside the domain tolerated as round-off before a trajectory
/// endpoint counts as clamped.
const DRIFT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GyreConfig {
    #[serde(rename = "A")]
    pub a: f64,
    pub delta: f64,
    pub omega: f64,
    pub t0: f64,
    pub t1: f64,
    /// RK4 step.
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub points_per_box: usize,
    /// Half-width of the uniform noise added to input and output points.
    pub rho: f64,
    pub seed: u64,
}

impl Default for GyreConfig {
    fn default() -> Self {
        Self {
            a: 0.25,
            delta: 0.25,
            omega: 2.0 * PI,
            t0: 0.0,
            t1: 40.0,
            h: 0.01,
            nx: 64,
            ny: 32,
            points_per_box: 100,
            rho: 1.0 / 32.0,
            seed: 0,
        }
    }
}

impl GyreConfig {
    pub fn boxes(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of RK4 steps; `(t1 - t0) / h` must be an integer.
    pub fn steps(&self) -> Result<usize> {
        if !(self.h > 0.0) || !(self.t1 >= self.t0) || !self.t0.is_finite() || !self.t1.is_finite() {
            return Err(Error::invalid("need h > 0 and finite t1 >= t0"));
        }
        let ratio = (self.t1 - self.t0) / self.h;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::invalid(format!(
                "(t1 - t0) / h = {ratio} is not an integer"
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<usize> {
        if self.nx == 0 || self.ny == 0 || self.points_per_box == 0 {
            return Err(Error::invalid("grid and points per box must be positive"));
        }
        if !(0.0..=Y_MAX).contains(&self.rho) {
            return Err(Error::invalid(format!("rho = {} outside [0, 1]", self.rho)));
        }
        if ![self.a, self.delta, self.omega].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("flow parameters must be finite"));
        }
        self.steps()
    }
}

/// `psi(x, y, t)`.
pub fn stream_function(x: f64, y: f64, t: f64, config: &GyreConfig) -> f64 {
    let a = config.delta * (config.omega * t).sin();
    let f = a * x * x + (1.0 - 2.0 * a) * x;
    config.a * (PI * f).sin() * (PI * y).sin()
}

#[inline]
fn velocity_with(x: f64, y: f64, a: f64, amp: f64) -> (f64, f64) {
    let f = a * x * x + (1.0 - 2.0 * a) * x;
    let dfdx = 2.0 * a * x + 1.0 - 2.0 * a;
    let (sf, cf) = (PI * f).sin_cos();
    let (sy, cy) = (PI * y).sin_cos();
    (-amp * PI * sf * cy, amp * PI * cf * sy * dfdx)
}

/// `(dx/dt, dy/dt)` at `(x, y, t)`.
pub fn gyre_velocity(x: f64, y: f64, t: f64, config: &GyreConfig) -> (f64, f64) {
    velocity_with(x, y, config.delta * (config.omega * t).sin(), config.a)
}

/// Classical RK4 from `t0` over `steps` steps of size `h`. `a(t)` is
/// evaluated through `a_half[k] = a(t0 + k h / 2)`.
fn rk4(mut x: f64, mut y: f64, a_half: &[f64], h: f64, amp: f64) -> (f64, f64) {
    let steps = (a_half.len() - 1) / 2;
    for s in 0..steps {
        let (a0, am, a1) = (a_half[2 * s], a_half[2 * s + 1], a_half[2 * s + 2]);
        let (k1x, k1y) = velocity_with(x, y, a0, amp);
        let (k2x, k2y) = velocity_with(x + 0.5 * h * k1x, y + 0.5 * h * k1y, am, amp);
        let (k3x, k3y) = velocity_with(x + 0.5 * h * k2x, y + 0.5 * h * k2y, am, amp);
        let (k4x, k4y) = velocity_with(x + h * k3x, y + h * k3y, a1, amp);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    }
    (x, y)
}

fn a_table(config: &GyreConfig, steps: usize) -> Vec<f64> {
    (0..=2 * steps)
        .map(|k| config.delta * (config.omega * (config.t0 + k as f64 * config.h / 2.0)).sin())
        .collect()
}

/// Flow map from `t0` to `t1` with the configured step.
pub fn integrate(x: f64, y: f64, config: &GyreConfig) -> Result<(f64, f64)> {
    let steps = config.steps()?;
    Ok(rk4(x, y, &a_table(config, steps), config.h, config.a))
}

/// Mirror a coordinate that left `[lo, hi]` back inside.
pub fn reflect(w: f64, lo: f64, hi: f64) -> f64 {
    if w < lo {
        lo + (lo - w)
    } else if w > hi {
        hi - (w - hi)
    } else {
        w
    }
}

/// 0-based box index `ix + nx * iy`; points on the upper edges belong to
/// the last box.
pub fn box_index(x: f64, y: f64, nx: usize, ny: usize) -> usize {
    let ix = ((x * nx as f64 / X_MAX).floor().max(0.0) as usize).min(nx - 1);
    let iy = ((y * ny as f64 / Y_MAX).floor().max(0.0) as usize).min(ny - 1);
    ix + nx * iy
}

/// One sampled transition, after noise and reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyreSample {
    pub input: (f64, f64),
    pub output: (f64, f64),
    /// The integrated endpoint was more than round-off outside the domain.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GyreMetadata {
    pub config: GyreConfig,
    pub steps: usize,
    pub boxes: usize,
    pub records: usize,
    pub clamped: usize,
}

/// Sample `points_per_box` uniform points per box, integrate each, and add
/// reflected uniform noise to both ends. Point `k` of box `b` draws from its
/// own stream `mix(seed, b * points_per_box + k)`.
pub fn gyre_samples(config: &GyreConfig, execution: Execution) -> Result<Vec<GyreSample>> {
    let steps = config.validate()?;
    let table = a_table(config, steps);
    let (wx, wy) = (X_MAX / config.nx as f64, Y_MAX / config.ny as f64);
    let ppb = config.points_per_box;
    let total = config.boxes() * ppb;
    Ok(execution.map_indexed(total, |index| {
        let b = index / ppb;
        let (bx, by) = ((b % config.nx) as f64, (b / config.nx) as f64);
        let mut rng = rng::stream(rng::mix(config.seed, index as u64));
        let x0 = (bx + rng.random::<f64>()) * wx;
        let y0 = (by + rng.random::<f64>()) * wy;
        let (x1, y1) = if steps == 0 {
            (x0, y0)
        } else {
            rk4(x0, y0, &table, config.h, config.a)
        };
        let clamped = !(-DRIFT_TOL..=X_MAX + DRIFT_TOL).contains(&x1) || !(-DRIFT_TOL..=Y_MAX + DRIFT_TOL).contains(&y1);
        let (x1, y1) = (x1.clamp(0.0, X_MAX), y1.clamp(0.0, Y_MAX));
        let mut noise = || {
            if config.rho > 0.0 {
                rng.random_range(-config.rho..=config.rho)
            } else {
                0.0
            }
        };
        let input = (reflect(x0 + noise(), 0.0, X_MAX), reflect(y0 + noise(), 0.0, Y_MAX));
        let output = (reflect(x1 + noise(), 0.0, X_MAX), reflect(y1 + noise(), 0.0, Y_MAX));
        GyreSample { input, output, clamped }
    }))
}

/// Ulam discretization of already sampled transitions: one record per
/// sample, categories are box indices.
pub fn ulam_dataset(samples: &[GyreSample], config: &GyreConfig) -> Result<(PairDataset, GyreMetadata)> {
    let (nx, ny) = (config.nx, config.ny);
    let records: Vec<(usize, usize)> = samples
        .iter()
        .map(|s| (box_index(s.input.0, s.input.1, nx, ny), box_index(s.output.0, s.output.1, nx, ny)))
        .collect();
    let meta = GyreMetadata {
        config: config.clone(),
        steps: config.steps()?,
        boxes: config.boxes(),
        records: records.len(),
        clamped: samples.iter().filter(|s| s.clamped).count(),
    };
    Ok((PairDataset::new(config.boxes(), config.boxes(), records), meta))
}

pub fn gen_double_gyre(config: &GyreConfig, execution: Execution) -> Result<(PairDataset, GyreMetadata)> {
    ulam_dataset(&gyre_samples(config, execution)?, config)
}
