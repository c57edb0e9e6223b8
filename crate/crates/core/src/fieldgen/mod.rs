//! Analytic test fields and their closed-form derivatives.
//!
//! Every catalog entry can be sampled on a grid with [`make_field`] and has
//! exact first derivatives, Laplacian, wave operator and squared wave
//! operator available through [`analytic_reference`]. Those references are
//! the oracles the finite-difference code is checked against.
//!
//! All catalog fields are independent of the time coordinate, so on a grid
//! with a time axis `□ = −∇²` still holds for them.

mod io;
mod parse;

pub use io::{load_field, save_field, save_field_with_sidecar, FieldHeader};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Default seed for `random_periodic` when none is given.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OFFSET: f64 = 2.0;
pub const DEFAULT_MODES: usize = 4;
/// Upper bound for a single mode amplitude.
pub const MAX_AMPLITUDE: f64 = 0.3;
const MIN_AMPLITUDE: f64 = 0.05;
const MAX_WAVENUMBER: i32 = 3;

/// Catalog of analytic fields. Vector parameters refer to spatial axes and
/// are zero-padded when shorter than the grid's spatial rank.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    Constant { c: f64 },
    /// `exp(−|x − center|² / 2σ²)`, peak value 1.
    Gaussian { sigma: f64, center: Vec<f64> },
    /// `exp(k·x)`.
    Exponential { k: Vec<f64> },
    /// Hamilton principal function `S = E t − p·x`.
    PlanePhase { energy: f64, momentum: Vec<f64> },
    /// `offset + Σ aᵢ sin(kᵢ·x + φᵢ)` with integer wavenumbers per period.
    RandomPeriodic { seed: u64, n_modes: usize, offset: f64 },
}

/// Differential operator applied in closed form by [`analytic_reference`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticOp {
    Partial(usize),
    Laplacian,
    Dalembertian,
    BiDalembertian,
}

#[derive(Clone, Debug)]
struct Mode {
    amplitude: f64,
    wavenumber: Vec<f64>,
    phase: f64,
}

impl Mode {
    fn theta(&self, x: &[f64]) -> f64 {
        self.wavenumber.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + self.phase
    }

    fn k_sq(&self) -> f64 {
        self.wavenumber.iter().map(|k| k * k).sum()
    }
}

fn random_modes(spec: &GridSpec, seed: u64, n_modes: usize) -> Vec<Mode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let periods: Vec<f64> = spec
        .spatial_axes()
        .map(|a| spec.shape[a] as f64 * spec.spacing[a])
        .collect();
    (0..n_modes)
        .map(|_| {
            let amplitude = rng.random_range(MIN_AMPLITUDE..=MAX_AMPLITUDE);
            let ints = loop {
                let v: Vec<i32> = periods
                    .iter()
                    .map(|_| rng.random_range(-MAX_WAVENUMBER..=MAX_WAVENUMBER))
                    .collect();
                if v.iter().any(|&n| n != 0) {
                    break v;
                }
            };
            let wavenumber = ints
                .iter()
                .zip(&periods)
                .map(|(&n, &l)| 2.0 * PI * n as f64 / l)
                .collect();
            let phase = rng.random_range(0.0..2.0 * PI);
            Mode {
                amplitude,
                wavenumber,
                phase,
            }
        })
        .collect()
}

fn padded(v: &[f64], len: usize, what: &str) -> Result<Vec<f64>> {
    if v.len() > len {
        return Err(Error::InvalidParameter(format!(
            "{what} has {} components but the grid has {len} spatial axes",
            v.len()
        )));
    }
    let mut out = v.to_vec();
    out.resize(len, 0.0);
    Ok(out)
}

fn spatial<'a>(spec: &GridSpec, coords: &'a [f64]) -> &'a [f64] {
    &coords[usize::from(spec.has_time_axis)..]
}

impl FieldKind {
    pub fn gaussian(sigma: f64) -> Self {
        FieldKind::Gaussian {
            sigma,
            center: Vec::new(),
        }
    }

    pub fn exponential(k: f64) -> Self {
        FieldKind::Exponential { k: vec![k] }
    }

    pub fn random(seed: u64) -> Self {
        FieldKind::RandomPeriodic {
            seed,
            n_modes: DEFAULT_MODES,
            offset: DEFAULT_OFFSET,
        }
    }

    fn check(&self, spec: &GridSpec) -> Result<()> {
        let d = spec.spatial_rank();
        match self {
            FieldKind::Constant { c } if !c.is_finite() => {
                Err(Error::InvalidParameter("constant must be finite".into()))
            }
            FieldKind::Gaussian { sigma, center } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!("gaussian sigma must be > 0, got {sigma}")));
                }
                padded(center, d, "gaussian center").map(|_| ())
            }
            FieldKind::Exponential { k } => padded(k, d, "exponential k").map(|_| ()),
            FieldKind::PlanePhase { momentum, .. } => padded(momentum, d, "plane momentum").map(|_| ()),
            FieldKind::RandomPeriodic { seed, n_modes, offset } => {
                let total: f64 = random_modes(spec, *seed, *n_modes).iter().map(|m| m.amplitude).sum();
                if !(*offset > total) {
                    return Err(Error::InvalidParameter(format!(
                        "random_periodic offset {offset} must exceed the summed amplitude {total}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Samples `kind` at every node of `spec`.
pub fn make_field(spec: &GridSpec, kind: &FieldKind) -> Result<ScalarField> {
    spec.validate()?;
    kind.check(spec)?;
    let d = spec.spatial_rank();
    match kind {
        FieldKind::Constant { c } => ScalarField::constant(spec, *c),
        FieldKind::Gaussian { sigma, center } => {
            let center = padded(center, d, "")?;
            ScalarField::from_fn(spec, |c| {
                let r2: f64 = spatial(spec, c).iter().zip(&center).map(|(x, c)| (x - c).powi(2)).sum();
                (-r2 / (2.0 * sigma * sigma)).exp()
            })
        }
        FieldKind::Exponential { k } => {
            let k = padded(k, d, "")?;
            ScalarField::from_fn(spec, |c| {
                spatial(spec, c).iter().zip(&k).map(|(x, k)| k * x).sum::<f64>().exp()
            })
        }
        FieldKind::PlanePhase { energy, momentum } => {
            let p = padded(momentum, d, "")?;
            ScalarField::from_fn(spec, |c| {
                let t = if spec.has_time_axis { c[0] } else { 0.0 };
                energy * t - spatial(spec, c).iter().zip(&p).map(|(x, p)| p * x).sum::<f64>()
            })
        }
        FieldKind::RandomPeriodic { seed, n_modes, offset } => {
            let modes = random_modes(spec, *seed, *n_modes);
            ScalarField::from_fn(spec, |c| {
                let x = spatial(spec, c);
                offset + modes.iter().map(|m| m.amplitude * m.theta(x).sin()).sum::<f64>()
            })
        }
    }
}

/// Closed-form `op` applied to `kind`, sampled on `spec` with no finite
/// differences involved.
pub fn analytic_reference(spec: &GridSpec, kind: &FieldKind, op: AnalyticOp) -> Result<ScalarField> {
    spec.validate()?;
    kind.check(spec)?;
    if let AnalyticOp::Partial(axis) = op {
        spec.check_axis(axis)?;
    }
    let d = spec.spatial_rank();
    let first = usize::from(spec.has_time_axis);
    // Spatial index of a grid axis, None for the time axis.
    let spatial_axis = |axis: usize| axis.checked_sub(first).filter(|_| !spec.is_time_axis(axis));

    match kind {
        FieldKind::Constant { .. } => ScalarField::constant(spec, 0.0),
        FieldKind::Gaussian { sigma, center } => {
            let center = padded(center, d, "")?;
            let s2 = sigma * sigma;
            let s4 = s2 * s2;
            let s6 = s4 * s2;
            let dim = d as f64;
            ScalarField::from_fn(spec, |c| {
                let x = spatial(spec, c);
                let r2: f64 = x.iter().zip(&center).map(|(x, c)| (x - c).powi(2)).sum();
                let g = (-r2 / (2.0 * s2)).exp();
                let lap = r2 / s4 - dim / s2;
                match op {
                    AnalyticOp::Partial(axis) => match spatial_axis(axis) {
                        Some(i) => -(x[i] - center[i]) / s2 * g,
                        None => 0.0,
                    },
                    AnalyticOp::Laplacian => lap * g,
                    AnalyticOp::Dalembertian => -lap * g,
                    AnalyticOp::BiDalembertian => (2.0 * dim / s4 - 4.0 * r2 / s6 + lap * lap) * g,
                }
            })
        }
        FieldKind::Exponential { k } => {
            let k = padded(k, d, "")?;
            let k2: f64 = k.iter().map(|k| k * k).sum();
            ScalarField::from_fn(spec, |c| {
                let e = spatial(spec, c).iter().zip(&k).map(|(x, k)| k * x).sum::<f64>().exp();
                match op {
                    AnalyticOp::Partial(axis) => spatial_axis(axis).map_or(0.0, |i| k[i] * e),
                    AnalyticOp::Laplacian => k2 * e,
                    AnalyticOp::Dalembertian => -k2 * e,
                    AnalyticOp::BiDalembertian => k2 * k2 * e,
                }
            })
        }
        FieldKind::PlanePhase { energy, momentum } => {
            let p = padded(momentum, d, "")?;
            ScalarField::from_fn(spec, |_| match op {
                AnalyticOp::Partial(axis) => match spatial_axis(axis) {
                    Some(i) => -p[i],
                    None => *energy,
                },
                _ => 0.0,
            })
        }
        FieldKind::RandomPeriodic { seed, n_modes, .. } => {
            let modes = random_modes(spec, *seed, *n_modes);
            ScalarField::from_fn(spec, |c| {
                let x = spatial(spec, c);
                modes
                    .iter()
                    .map(|m| {
                        let th = m.theta(x);
                        let a = m.amplitude;
                        match op {
                            AnalyticOp::Partial(axis) => {
                                spatial_axis(axis).map_or(0.0, |i| a * m.wavenumber[i] * th.cos())
                            }
                            AnalyticOp::Laplacian => -a * m.k_sq() * th.sin(),
                            AnalyticOp::Dalembertian => a * m.k_sq() * th.sin(),
                            AnalyticOp::BiDalembertian => a * m.k_sq() * m.k_sq() * th.sin(),
                        }
                    })
                    .sum()
            })
        }
    }
}
