//! Particle motion in a Machian mass field.
//!
//! Non-relativistic: `ẍ = g − ½ ∇M/M` in coordinate time.
//! Relativistic, flat space: `d²x^μ/dλ² = ½ (η^{μν} − u^μu^ν) ∂_νM / M` with
//! raised components and `u·u = 1` (signature `+,−,−,−`, `c = 1`). The
//! projector keeps `u·u` fixed along the exact flow, so its drift measures
//! integration error.
//!
//! Both integrators are fixed-step RK4. Mass gradients are differenced on the
//! grid once and then interpolated, so off-node samples keep stencil order.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Largest change of `u·u` tolerated before relativistic integration aborts.
pub const MAX_NORM_DRIFT: f64 = 1e-6;
const INITIAL_NORM_TOL: f64 = 1e-12;

/// A positive mass field together with its gradient along every grid axis.
#[derive(Clone, Debug)]
pub struct MassField {
    mass: ScalarField,
    grad: Vec<ScalarField>,
}

impl MassField {
    pub fn new(mass: ScalarField) -> Result<Self> {
        mass.require_positive("mass field must be positive")?;
        let grad = (0..mass.spec().rank())
            .map(|axis| mass.partial(axis))
            .collect::<Result<Vec<_>>>()?;
        Ok(MassField { mass, grad })
    }

    pub fn field(&self) -> &ScalarField {
        &self.mass
    }

    /// `M` and `∂_μM` (lower index, spacetime slots `0..4`) at the grid point `coords`.
    fn sample(&self, coords: &[f64]) -> Result<(f64, [f64; 4])> {
        let m = self.mass.sample(coords)?;
        if !(m > 0.0) {
            return Err(Error::Domain {
                what: "interpolated mass must be positive",
                index: 0,
                value: m,
            });
        }
        let shift = usize::from(!self.mass.spec().has_time_axis);
        let mut d = [0.0; 4];
        for (axis, g) in self.grad.iter().enumerate() {
            d[axis + shift] = g.sample(coords)?;
        }
        Ok((m, d))
    }

    /// Grid coordinates of the spacetime point `x^μ`.
    fn grid_point(&self, x: &[f64; 4]) -> Vec<f64> {
        let spec = self.mass.spec();
        if spec.has_time_axis {
            x[..spec.rank()].to_vec()
        } else {
            x[1..=spec.rank()].to_vec()
        }
    }

    fn require_spatial(&self) -> Result<()> {
        if self.mass.spec().has_time_axis {
            return Err(Error::InvalidParameter(
                "non-relativistic motion needs a static mass field".into(),
            ));
        }
        Ok(())
    }
}

/// `−½ ∇M/M` at the spatial point `x`. Components beyond the grid rank are zero.
pub fn mass_gradient_accel(mass: &MassField, x: &[f64; 3]) -> Result<[f64; 3]> {
    mass.require_spatial()?;
    let (m, d) = mass.sample(&mass.grid_point(&[0.0, x[0], x[1], x[2]]))?;
    Ok([-0.5 * d[1] / m, -0.5 * d[2] / m, -0.5 * d[3] / m])
}

/// External gravitational acceleration for the non-relativistic equation.
#[derive(Clone, Debug)]
pub enum Gravity {
    Constant([f64; 3]),
    /// One sampled field per spatial component, on a static grid.
    Field(Vec<ScalarField>),
}

impl Gravity {
    pub const NONE: Gravity = Gravity::Constant([0.0; 3]);

    fn at(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        match self {
            Gravity::Constant(g) => Ok(*g),
            Gravity::Field(fields) => {
                let mut g = [0.0; 3];
                for (c, f) in fields.iter().enumerate().take(3) {
                    g[c] = f.sample(&x[..f.spec().rank()])?;
                }
                Ok(g)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Gravity::Field(fields) = self {
            if fields.len() > 3 {
                return Err(Error::InvalidParameter(format!("{} gravity components given", fields.len())));
            }
            if fields.iter().any(|f| f.spec().has_time_axis || f.spec().rank() > 3) {
                return Err(Error::InvalidParameter("gravity fields must be static".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nr,
    Rel,
}

/// One sample along a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParticleState {
    /// Coordinate time, position, velocity.
    Nr { t: f64, x: [f64; 3], v: [f64; 3] },
    /// Proper time, `x^μ`, `u^μ`.
    Rel { lambda: f64, x: [f64; 4], u: [f64; 4] },
}

impl ParticleState {
    pub fn nr(x: [f64; 3], v: [f64; 3]) -> Self {
        ParticleState::Nr { t: 0.0, x, v }
    }

    /// Relativistic state at `x^μ` with four-velocity `u^μ` as given.
    pub fn rel(x: [f64; 4], u: [f64; 4]) -> Self {
        ParticleState::Rel { lambda: 0.0, x, u }
    }

    /// Relativistic state at `t = 0` moving with coordinate velocity `v`.
    pub fn rel_from_velocity(x: [f64; 3], v: [f64; 3]) -> Result<Self> {
        let v2 = v.iter().map(|c| c * c).sum::<f64>();
        if !(v2 < 1.0) {
            return Err(Error::InvalidParameter(format!("speed {} is not below light speed", v2.sqrt())));
        }
        let gamma = 1.0 / (1.0 - v2).sqrt();
        Ok(ParticleState::rel(
            [0.0, x[0], x[1], x[2]],
            [gamma, gamma * v[0], gamma * v[1], gamma * v[2]],
        ))
    }

    pub fn mode(&self) -> Mode {
        match self {
            ParticleState::Nr { .. } => Mode::Nr,
            ParticleState::Rel { .. } => Mode::Rel,
        }
    }

    /// `t` for non-relativistic states, `λ` otherwise.
    pub fn parameter(&self) -> f64 {
        match *self {
            ParticleState::Nr { t, .. } => t,
            ParticleState::Rel { lambda, .. } => lambda,
        }
    }

    pub fn spatial_position(&self) -> [f64; 3] {
        match *self {
            ParticleState::Nr { x, .. } => x,
            ParticleState::Rel { x, .. } => [x[1], x[2], x[3]],
        }
    }

    /// `u·u`; 0 for non-relativistic states.
    pub fn norm(&self) -> f64 {
        match self {
            ParticleState::Nr { .. } => 0.0,
            ParticleState::Rel { u, .. } => minkowski(u, u),
        }
    }

    /// Same position, spatial velocity reversed.
    pub fn reversed(&self) -> Self {
        match *self {
            ParticleState::Nr { t, x, v } => ParticleState::Nr { t, x, v: v.map(|c| -c) },
            ParticleState::Rel { lambda, x, u } => ParticleState::Rel {
                lambda,
                x,
                u: [u[0], -u[1], -u[2], -u[3]],
            },
        }
    }
}

fn minkowski(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

/// Samples of one trajectory with integration diagnostics.
#[derive(Clone, Debug)]
pub struct Path {
    pub samples: Vec<ParticleState>,
    pub step: f64,
    /// Largest change of `u·u` from its initial value; 0 for non-relativistic paths.
    pub max_norm_drift: f64,
    /// Set when the trajectory left the grid hull; the path stops at the last full step.
    pub exited_axis: Option<usize>,
}

impl Path {
    pub fn last(&self) -> &ParticleState {
        self.samples.last().expect("paths hold the initial state")
    }

    pub fn exited(&self) -> bool {
        self.exited_axis.is_some()
    }

    /// Spatial position of a relativistic path at coordinate time `t`, by
    /// cubic Hermite interpolation between samples.
    pub fn position_at_time(&self, t: f64) -> Option<[f64; 3]> {
        self.samples.windows(2).find_map(|w| match (w[0], w[1]) {
            (ParticleState::Rel { x: a, u: ua, .. }, ParticleState::Rel { x: b, u: ub, .. })
                if a[0] <= t && t <= b[0] =>
            {
                let dt = b[0] - a[0];
                let s = if dt > 0.0 { (t - a[0]) / dt } else { 0.0 };
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                let mut out = [0.0; 3];
                for (i, o) in out.iter_mut().enumerate() {
                    let va = ua[i + 1] / ua[0];
                    let vb = ub[i + 1] / ub[0];
                    *o = h00 * a[i + 1] + h10 * dt * va + h01 * b[i + 1] + h11 * dt * vb;
                }
                Some(out)
            }
            _ => None,
        })
    }

    /// CSV with 17 significant digits.
    ///
    /// Non-relativistic: `t,x,y,z,vx,vy,vz`. Relativistic:
    /// `lambda,t,x,y,z,u0,u1,u2,u3,uu`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header = match self.samples.first().map(ParticleState::mode) {
            Some(Mode::Rel) => "lambda,t,x,y,z,u0,u1,u2,u3,uu",
            _ => "t,x,y,z,vx,vy,vz",
        };
        out.push_str(header);
        out.push('\n');
        for s in &self.samples {
            let row: Vec<f64> = match *s {
                ParticleState::Nr { t, x, v } => [t].into_iter().chain(x).chain(v).collect(),
                ParticleState::Rel { lambda, x, u } => {
                    [lambda].into_iter().chain(x).chain(u).chain([minkowski(&u, &u)]).collect()
                }
            };
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn rk4<const N: usize>(
    y: &[f64; N],
    h: f64,
    mut f: impl FnMut(&[f64; N]) -> Result<[f64; N]>,
) -> Result<[f64; N]> {
    let shifted = |k: &[f64; N], c: f64| std::array::from_fn(|i| y[i] + c * k[i]);
    let k1 = f(y)?;
    let k2 = f(&shifted(&k1, 0.5 * h))?;
    let k3 = f(&shifted(&k2, 0.5 * h))?;
    let k4 = f(&shifted(&k3, h))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
    }
    Ok(())
}

/// Runs `steps` RK4 steps, stopping early (and flagging) on hull exit.
fn drive<const N: usize>(
    y0: [f64; N],
    p0: f64,
    dt: f64,
    steps: usize,
    mut f: impl FnMut(&[f64; N]) -> Result<[f64; N]>,
    mut emit: impl FnMut(f64, &[f64; N]) -> Result<ParticleState>,
) -> Result<(Vec<ParticleState>, Option<usize>)> {
    let mut samples = vec![emit(p0, &y0)?];
    let mut y = y0;
    for step in 1..=steps {
        match rk4(&y, dt, &mut f) {
            Ok(next) => y = next,
            Err(Error::OutOfHull { axis, .. }) => return Ok((samples, Some(axis))),
            Err(e) => return Err(e),
        }
        samples.push(emit(p0 + step as f64 * dt, &y)?);
    }
    Ok((samples, None))
}

/// `ẍ = g − ½ ∇M/M` from `state0` for `steps` steps of `dt`.
pub fn integrate_nr(mass: &MassField, gravity: &Gravity, state0: &ParticleState, dt: f64, steps: usize) -> Result<Path> {
    check_step(dt)?;
    mass.require_spatial()?;
    gravity.validate()?;
    let ParticleState::Nr { t, x, v } = *state0 else {
        return Err(Error::InvalidParameter("integrate_nr needs a non-relativistic state".into()));
    };
    mass_gradient_accel(mass, &x)?;
    let y0 = [x[0], x[1], x[2], v[0], v[1], v[2]];
    let (samples, exited_axis) = drive(
        y0,
        t,
        dt,
        steps,
        |y| {
            let pos = [y[0], y[1], y[2]];
            let a = mass_gradient_accel(mass, &pos)?;
            let g = gravity.at(&pos)?;
            Ok([y[3], y[4], y[5], a[0] + g[0], a[1] + g[1], a[2] + g[2]])
        },
        |t, y| {
            Ok(ParticleState::Nr {
                t,
                x: [y[0], y[1], y[2]],
                v: [y[3], y[4], y[5]],
            })
        },
    )?;
    Ok(Path {
        samples,
        step: dt,
        max_norm_drift: 0.0,
        exited_axis,
    })
}

/// `a^μ = ½ (η^{μν}∂_νM − u^μ u^ν∂_νM) / M`.
pub fn rel_acceleration(mass: &MassField, x: &[f64; 4], u: &[f64; 4]) -> Result<[f64; 4]> {
    let (m, d) = mass.sample(&mass.grid_point(x))?;
    let raised = [d[0], -d[1], -d[2], -d[3]];
    let along = u[0] * d[0] + u[1] * d[1] + u[2] * d[2] + u[3] * d[3];
    Ok(std::array::from_fn(|mu| 0.5 * (raised[mu] - u[mu] * along) / m))
}

/// Flat-space relativistic motion in `λ`. The initial four-velocity is
/// rescaled to `u·u = 1`; it must be timelike and future pointing.
pub fn integrate_rel_flat(mass: &MassField, state0: &ParticleState, dlambda: f64, steps: usize) -> Result<Path> {
    check_step(dlambda)?;
    let ParticleState::Rel { lambda, x, u } = *state0 else {
        return Err(Error::InvalidParameter("integrate_rel_flat needs a relativistic state".into()));
    };
    let norm = minkowski(&u, &u);
    if !(norm > 0.0 && u[0] > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "four-velocity must be timelike and future pointing (u·u = {norm}, u⁰ = {})",
            u[0]
        )));
    }
    let u = if (norm - 1.0).abs() > INITIAL_NORM_TOL {
        let s = norm.sqrt();
        log::debug!("renormalizing initial four-velocity, u·u = {norm}");
        u.map(|c| c / s)
    } else {
        u
    };
    rel_acceleration(mass, &x, &u)?;

    let norm0 = minkowski(&u, &u);
    let mut max_drift = 0.0f64;
    let mut step_no = 0usize;
    let y0 = [x[0], x[1], x[2], x[3], u[0], u[1], u[2], u[3]];
    let (samples, exited_axis) = drive(
        y0,
        lambda,
        dlambda,
        steps,
        |y| {
            let x = [y[0], y[1], y[2], y[3]];
            let u = [y[4], y[5], y[6], y[7]];
            let a = rel_acceleration(mass, &x, &u)?;
            Ok([u[0], u[1], u[2], u[3], a[0], a[1], a[2], a[3]])
        },
        |lambda, y| {
            let x = [y[0], y[1], y[2], y[3]];
            let u = [y[4], y[5], y[6], y[7]];
            let drift = (minkowski(&u, &u) - norm0).abs();
            if drift > MAX_NORM_DRIFT {
                return Err(Error::NormDrift { step: step_no, drift });
            }
            max_drift = max_drift.max(drift);
            step_no += 1;
            Ok(ParticleState::Rel { lambda, x, u })
        },
    )?;
    Ok(Path {
        samples,
        step: dlambda,
        max_norm_drift: max_drift,
        exited_axis,
    })
}

/// Guidance velocity `∇S/m`, one field per spatial axis of `S`.
pub fn bohmian_velocity(s: &ScalarField, m: f64) -> Result<Vec<ScalarField>> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    s.spec()
        .spatial_axes()
        .map(|axis| s.partial(axis)?.scale(1.0 / m))
        .collect()
}

/// `ẋ = v(t, x)` through sampled velocity fields (from [`bohmian_velocity`]).
/// The returned samples are non-relativistic states carrying the local velocity.
pub fn integrate_guidance(velocity: &[ScalarField], x0: [f64; 3], dt: f64, steps: usize) -> Result<Path> {
    check_step(dt)?;
    let Some(first) = velocity.first() else {
        return Err(Error::InvalidParameter("no velocity components".into()));
    };
    let spec = first.spec().clone();
    if velocity.len() != spec.spatial_rank() || velocity.len() > 3 {
        return Err(Error::InvalidParameter(format!(
            "{} velocity components for spatial rank {}",
            velocity.len(),
            spec.spatial_rank()
        )));
    }
    if velocity.iter().any(|v| v.spec() != &spec) {
        return Err(Error::GridMismatch);
    }
    let eval = |t: f64, x: &[f64; 3]| -> Result<[f64; 3]> {
        let mut coords = Vec::with_capacity(spec.rank());
        if spec.has_time_axis {
            coords.push(t);
        }
        coords.extend_from_slice(&x[..spec.spatial_rank()]);
        let mut v = [0.0; 3];
        for (c, f) in velocity.iter().enumerate() {
            v[c] = f.sample(&coords)?;
        }
        Ok(v)
    };
    // Time rides along as a fourth state component so RK4 stages see it.
    let (samples, exited_axis) = drive(
        [x0[0], x0[1], x0[2], 0.0],
        0.0,
        dt,
        steps,
        |y| {
            let v = eval(y[3], &[y[0], y[1], y[2]])?;
            Ok([v[0], v[1], v[2], 1.0])
        },
        |t, y| {
            let x = [y[0], y[1], y[2]];
            let v = eval(y[3], &x).unwrap_or([f64::NAN; 3]);
            Ok(ParticleState::Nr { t, x, v })
        },
    )?;
    Ok(Path {
        samples,
        step: dt,
        max_norm_drift: 0.0,
        exited_axis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::{make_field, FieldKind};
    use crate::grid::{Boundary, GridSpec, StencilOrder};
    use crate::potential::{machian_mass_nr, MassParams};

    fn line(n: usize, lo: f64, hi: f64) -> GridSpec {
        GridSpec::line(n, lo, (hi - lo) / (n - 1) as f64, Boundary::ClampedGhost, StencilOrder::Fourth).unwrap()
    }

    fn exp_mass(k: f64, lo: f64, hi: f64, n: usize) -> MassField {
        MassField::new(make_field(&line(n, lo, hi), &FieldKind::exponential(2.0 * k)).unwrap()).unwrap()
    }

    #[test]
    fn accel_oracles() {
        let flat = MassField::new(ScalarField::constant(&line(21, -1.0, 1.0), 3.0).unwrap()).unwrap();
        assert_eq!(mass_gradient_accel(&flat, &[0.3, 0.0, 0.0]).unwrap(), [0.0; 3]);
        let m = exp_mass(0.3, -2.0, 2.0, 401);
        for x in [-1.9, -0.37, 0.0, 1.234] {
            let a = mass_gradient_accel(&m, &[x, 0.0, 0.0]).unwrap();
            assert!((a[0] + 0.3).abs() < 1e-9, "{a:?}");
        }
        let lin = MassField::new(ScalarField::from_fn(&line(41, -1.0, 1.0), |x| 1.0 + 0.1 * x[0]).unwrap()).unwrap();
        assert!((mass_gradient_accel(&lin, &[0.0; 3]).unwrap()[0] + 0.05).abs() < 1e-14);
        match mass_gradient_accel(&lin, &[1.5, 0.0, 0.0]) {
            Err(Error::OutOfHull { axis: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_positive_mass_rejected() {
        let f = ScalarField::from_fn(&line(11, -1.0, 1.0), |x| x[0]).unwrap();
        assert!(MassField::new(f).is_err());
    }

    #[test]
    fn free_motion_is_exact() {
        let m = MassField::new(ScalarField::constant(&line(11, -5.0, 5.0), 1.0).unwrap()).unwrap();
        let path = integrate_nr(&m, &Gravity::NONE, &ParticleState::nr([0.0; 3], [1.0, 0.0, 0.0]), 0.01, 100).unwrap();
        assert!(!path.exited());
        let ParticleState::Nr { t, x, .. } = *path.last() else { panic!() };
        assert!((x[0] - t).abs() < 1e-13);
    }

    #[test]
    fn uniform_gravity_parabola() {
        let m = MassField::new(ScalarField::constant(&line(11, -5.0, 5.0), 2.0).unwrap()).unwrap();
        let g = Gravity::Constant([0.0, 0.0, -9.8]);
        let path = integrate_nr(&m, &g, &ParticleState::nr([0.0; 3], [0.5, 0.0, 3.0]), 0.01, 100).unwrap();
        let ParticleState::Nr { x, v, .. } = *path.last() else { panic!() };
        assert!((x[2] - (3.0 - 4.9)).abs() < 1e-12);
        assert!((v[2] - (3.0 - 9.8)).abs() < 1e-12);
        assert!((x[0] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn exponential_mass_constant_acceleration() {
        let k = 0.3;
        let m = exp_mass(k, -1.0, 1.0, 2001);
        let path = integrate_nr(&m, &Gravity::NONE, &ParticleState::nr([0.0; 3], [0.0; 3]), 1e-3, 1000).unwrap();
        let x = path.last().spatial_position()[0];
        assert!((x + 0.5 * k).abs() < 1e-8, "{x}");
    }

    #[test]
    fn hull_exit_truncates() {
        let m = exp_mass(0.3, -0.1, 1.0, 111);
        let path = integrate_nr(&m, &Gravity::NONE, &ParticleState::nr([0.0; 3], [0.0; 3]), 1e-2, 200).unwrap();
        assert_eq!(path.exited_axis, Some(0));
        assert!(path.samples.len() < 201);
        assert!(path.last().spatial_position()[0] >= -0.1);
    }

    #[test]
    fn rel_rest_acceleration_signs() {
        let k = 0.3;
        let m = exp_mass(k, -1.0, 1.0, 401);
        let a = rel_acceleration(&m, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        // raised component; lowering flips the spatial sign
        assert!((a[1] + k).abs() < 1e-9);
        assert!(a[0].abs() < 1e-15);
        let nr = mass_gradient_accel(&m, &[0.0; 3]).unwrap();
        assert!((a[1] - nr[0]).abs() < 1e-12);
    }

    #[test]
    fn rel_acceleration_is_orthogonal_to_u() {
        let m = MassField::new(make_field(&line(201, -2.0, 2.0), &FieldKind::random(3)).unwrap()).unwrap();
        let u = {
            let v = 0.6f64;
            let g = 1.0 / (1.0 - v * v).sqrt();
            [g, g * v, 0.0, 0.0]
        };
        let a = rel_acceleration(&m, &[0.0, 0.4, 0.0, 0.0], &u).unwrap();
        assert!(minkowski(&a, &u).abs() < 1e-15);
    }

    #[test]
    fn rel_constant_mass_is_straight() {
        let m = MassField::new(ScalarField::constant(&line(11, -5.0, 5.0), 1.0).unwrap()).unwrap();
        let s0 = ParticleState::rel_from_velocity([0.0; 3], [0.3, 0.0, 0.0]).unwrap();
        let path = integrate_rel_flat(&m, &s0, 0.01, 100).unwrap();
        assert_eq!(path.max_norm_drift, 0.0);
        let ParticleState::Rel { x, u, .. } = *path.last() else { panic!() };
        assert!((x[1] / x[0] - 0.3).abs() < 1e-13);
        assert_eq!(u, match s0 {
            ParticleState::Rel { u, .. } => u,
            _ => unreachable!(),
        });
    }

    #[test]
    fn rel_renormalizes_and_rejects_spacelike() {
        let m = MassField::new(ScalarField::constant(&line(11, -5.0, 5.0), 1.0).unwrap()).unwrap();
        let p = integrate_rel_flat(&m, &ParticleState::rel([0.0; 4], [2.0, 0.0, 0.0, 0.0]), 0.1, 1).unwrap();
        assert!((p.samples[0].norm() - 1.0).abs() < 1e-15);
        assert!(integrate_rel_flat(&m, &ParticleState::rel([0.0; 4], [0.5, 1.0, 0.0, 0.0]), 0.1, 1).is_err());
        assert!(integrate_rel_flat(&m, &ParticleState::rel([0.0; 4], [-1.0, 0.0, 0.0, 0.0]), 0.1, 1).is_err());
        assert!(integrate_rel_flat(&m, &ParticleState::nr([0.0; 3], [0.0; 3]), 0.1, 1).is_err());
    }

    #[test]
    fn guidance_velocity_oracles() {
        let spec = line(41, -2.0, 2.0);
        let p = 0.7;
        let s = ScalarField::from_fn(&spec, |x| p * x[0]).unwrap();
        let v = bohmian_velocity(&s, 2.0).unwrap();
        assert!(v[0].values().iter().all(|&c| (c - 0.35).abs() < 1e-13));
        let alpha = 1.5;
        let s = ScalarField::from_fn(&spec, |x| 0.5 * alpha * x[0] * x[0]).unwrap();
        let v = bohmian_velocity(&s, 1.0).unwrap();
        for (i, c) in v[0].values().iter().enumerate() {
            assert!((c - alpha * spec.coordinate(0, i)).abs() < 1e-12);
        }
        let flat = bohmian_velocity(&ScalarField::constant(&spec, 4.0).unwrap(), 1.0).unwrap();
        assert!(flat[0].values().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn guidance_path_follows_flow() {
        // v = αx gives x(t) = x0 e^{αt}
        let spec = line(401, -3.0, 3.0);
        let alpha = 0.5;
        let s = ScalarField::from_fn(&spec, |x| 0.5 * alpha * x[0] * x[0]).unwrap();
        let v = bohmian_velocity(&s, 1.0).unwrap();
        let path = integrate_guidance(&v, [0.2, 0.0, 0.0], 1e-2, 100).unwrap();
        let x = path.last().spatial_position()[0];
        assert!((x - 0.2 * alpha.exp()).abs() < 1e-6, "{x}");
    }

    #[test]
    fn chain_rule_links_mass_and_potential() {
        let spec = line(401, -3.0, 3.0);
        let rho = make_field(&spec, &FieldKind::gaussian(1.0)).unwrap();
        let p = MassParams::natural();
        let q = crate::potential::quantum_potential_nr(&rho, &p).unwrap().field;
        let m = MassField::new(machian_mass_nr(&q, &p).unwrap()).unwrap();
        let dq = q.partial(0).unwrap();
        for x in [-1.0, -0.123, 0.5, 2.0] {
            let a = mass_gradient_accel(&m, &[x, 0.0, 0.0]).unwrap()[0];
            let expected = -dq.sample(&[x]).unwrap() / p.m0;
            assert!((a - expected).abs() < 1e-3, "{a} vs {expected}");
        }
    }

    #[test]
    fn csv_layout() {
        let m = MassField::new(ScalarField::constant(&line(11, -5.0, 5.0), 1.0).unwrap()).unwrap();
        let path = integrate_nr(&m, &Gravity::NONE, &ParticleState::nr([0.0; 3], [1.0, 0.0, 0.0]), 0.5, 2).unwrap();
        let csv = path.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,y,z,vx,vy,vz");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("5.0000000000000000e-1,5.0000000000000000e-1"));
        let rel = integrate_rel_flat(&m, &ParticleState::rel([0.0; 4], [1.0, 0.0, 0.0, 0.0]), 0.5, 1).unwrap();
        assert!(rel.to_csv().starts_with("lambda,t,x,y,z,u0,u1,u2,u3,uu\n"));
    }
}
