//! Uniform rectilinear grids, scalar fields and finite-difference operators.
//!
//! Layout is row-major with the last axis fastest. When a grid carries a
//! time axis it is always axis 0. The flat metric has signature
//! `(+, -, -, -)`, so the wave operator is
//!
//! ```text
//! □f = ∂_t² f − Σ_i ∂_i² f
//! ```
//!
//! and a static field (no time axis) has `□f = −∇²f` exactly.
//!
//! Derivatives use central stencils of order 2 or 4 in the interior.
//! Periodic axes wrap; clamped axes switch to one-sided windows of the
//! same accuracy near the edges, with weights from Fornberg's recursion.

mod interp;
mod ops;
mod stencil;

pub use stencil::fornberg_weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How derivative stencils treat the ends of an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    #[serde(alias = "clamped")]
    ClampedGhost,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "clamped" | "clamped-ghost" => Ok(Boundary::ClampedGhost),
            other => Err(Error::InvalidParameter(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Formal accuracy of the difference stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn as_usize(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }
}

impl TryFrom<u8> for StencilOrder {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            other => Err(Error::InvalidParameter(format!(
                "stencil order must be 2 or 4, got {other}"
            ))),
        }
    }
}

impl From<StencilOrder> for u8 {
    fn from(o: StencilOrder) -> u8 {
        o.as_usize() as u8
    }
}

/// Geometry of a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub has_time_axis: bool,
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub boundary: Boundary,
    pub stencil_order: StencilOrder,
}

impl GridSpec {
    pub fn new(
        shape: Vec<usize>,
        origin: Vec<f64>,
        spacing: Vec<f64>,
        has_time_axis: bool,
        boundary: Boundary,
        stencil_order: StencilOrder,
    ) -> Result<Self> {
        let spec = GridSpec {
            has_time_axis,
            shape,
            origin,
            spacing,
            boundary,
            stencil_order,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One spatial axis of `n` points starting at `lo` with step `h`.
    pub fn line(n: usize, lo: f64, h: f64, boundary: Boundary, order: StencilOrder) -> Result<Self> {
        GridSpec::new(vec![n], vec![lo], vec![h], false, boundary, order)
    }

    pub fn validate(&self) -> Result<()> {
        let rank = self.shape.len();
        if !(1..=4).contains(&rank) {
            return Err(Error::InvalidGrid(format!("rank must be 1..=4, got {rank}")));
        }
        if self.origin.len() != rank || self.spacing.len() != rank {
            return Err(Error::InvalidGrid(format!(
                "shape, origin and spacing must all have length {rank}"
            )));
        }
        if self.has_time_axis && rank == 1 {
            return Err(Error::InvalidGrid("a time axis needs at least one spatial axis".into()));
        }
        let min_points = self.stencil_order.as_usize() + 1;
        for axis in 0..rank {
            if !(self.spacing[axis] > 0.0 && self.spacing[axis].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "spacing along axis {axis} must be positive, got {}",
                    self.spacing[axis]
                )));
            }
            if !self.origin[axis].is_finite() {
                return Err(Error::InvalidGrid(format!("origin along axis {axis} is not finite")));
            }
            if self.shape[axis] < min_points {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {} points, order {} stencils need at least {min_points}",
                    self.shape[axis],
                    self.stencil_order.as_usize()
                )));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.rank()];
        for axis in (0..self.rank().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.shape[axis + 1];
        }
        strides
    }

    pub fn is_time_axis(&self, axis: usize) -> bool {
        self.has_time_axis && axis == 0
    }

    /// Metric sign of an axis: `+1` for time, `-1` for space.
    pub fn axis_sign(&self, axis: usize) -> f64 {
        if self.is_time_axis(axis) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn spatial_axes(&self) -> std::ops::Range<usize> {
        let first = usize::from(self.has_time_axis);
        first..self.rank()
    }

    pub fn spatial_rank(&self) -> usize {
        self.spatial_axes().len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        self.origin[axis] + index as f64 * self.spacing[axis]
    }

    /// Per-axis indices of a flat offset.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank()];
        for axis in (0..self.rank()).rev() {
            idx[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        idx
    }

    pub fn coords_of(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coordinate(axis, i))
            .collect()
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.rank() {
            return Err(Error::AxisOutOfRange {
                axis,
                rank: self.rank(),
            });
        }
        Ok(())
    }
}

/// Real values sampled on every node of a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch {
                expected: spec.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(ScalarField { spec, values })
    }

    /// Samples `f(coords)` at every node.
    pub fn from_fn(spec: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..spec.len()).map(|i| f(&spec.coords_of(i))).collect();
        ScalarField::new(spec.clone(), values)
    }

    pub fn constant(spec: &GridSpec, c: f64) -> Result<Self> {
        ScalarField::new(spec.clone(), vec![c; spec.len()])
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds a sibling field on the same grid. Values must be finite.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(ScalarField {
            spec: self.spec.clone(),
            values,
        })
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Central difference `∂f/∂x^axis` at the grid's stencil order.
    pub fn partial(&self, axis: usize) -> Result<ScalarField> {
        self.spec.check_axis(axis)?;
        let values = stencil::derivative_along(self, axis, 1);
        self.with_values(values)
    }

    pub fn second_partial(&self, axis: usize) -> Result<ScalarField> {
        self.spec.check_axis(axis)?;
        let values = stencil::derivative_along(self, axis, 2);
        self.with_values(values)
    }

    /// Sum of second derivatives over spatial axes.
    pub fn laplacian(&self) -> Result<ScalarField> {
        let mut acc = vec![0.0; self.len()];
        for axis in self.spec.spatial_axes() {
            let d2 = stencil::derivative_along(self, axis, 2);
            for (a, d) in acc.iter_mut().zip(d2) {
                *a += d;
            }
        }
        self.with_values(acc)
    }

    /// `□f = ∂_t² f − ∇²f`. For static grids this is the exact negation of
    /// [`laplacian`](Self::laplacian).
    pub fn dalembertian(&self) -> Result<ScalarField> {
        let lap = self.laplacian()?;
        if !self.spec.has_time_axis {
            // 0 − l rather than −l keeps zeros unsigned
            return lap.map(|l| 0.0 - l);
        }
        let dtt = stencil::derivative_along(self, 0, 2);
        let values = dtt.iter().zip(lap.values()).map(|(t, l)| t - l).collect();
        self.with_values(values)
    }

    /// `□□f`.
    pub fn bidalembertian(&self) -> Result<ScalarField> {
        self.dalembertian()?.dalembertian()
    }

    /// Minkowski contraction `∂_μf ∂^μf`.
    pub fn gradient_square(&self) -> Result<ScalarField> {
        let mut acc = vec![0.0; self.len()];
        for axis in 0..self.spec.rank() {
            let sign = self.spec.axis_sign(axis);
            let d = stencil::derivative_along(self, axis, 1);
            for (a, v) in acc.iter_mut().zip(d) {
                *a += sign * v * v;
            }
        }
        self.with_values(acc)
    }

    /// Every second node along each axis. Periodic axes must have even
    /// length so the coarse grid stays periodic with the same period.
    pub fn decimate(&self) -> Result<ScalarField> {
        let spec = &self.spec;
        let mut shape = Vec::with_capacity(spec.rank());
        for (axis, &n) in spec.shape.iter().enumerate() {
            let coarse = match spec.boundary {
                Boundary::Periodic => {
                    if n % 2 != 0 {
                        return Err(Error::InvalidGrid(format!(
                            "periodic axis {axis} has odd length {n}, cannot decimate"
                        )));
                    }
                    n / 2
                }
                Boundary::ClampedGhost => n.div_ceil(2),
            };
            shape.push(coarse);
        }
        let coarse_spec = GridSpec::new(
            shape,
            spec.origin.clone(),
            spec.spacing.iter().map(|h| 2.0 * h).collect(),
            spec.has_time_axis,
            spec.boundary,
            spec.stencil_order,
        )?;
        let fine_strides = spec.strides();
        let values = (0..coarse_spec.len())
            .map(|flat| {
                let idx = coarse_spec.unravel(flat);
                let offset: usize = idx.iter().zip(&fine_strides).map(|(i, s)| 2 * i * s).sum();
                self.values[offset]
            })
            .collect();
        ScalarField::new(coarse_spec, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic_line(n: usize, order: StencilOrder) -> GridSpec {
        let h = 2.0 * PI / n as f64;
        GridSpec::line(n, 0.0, h, Boundary::Periodic, order).unwrap()
    }

    fn max_err(a: &ScalarField, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..a.len())
            .map(|i| (a.values()[i] - f(&a.spec().coords_of(i))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn spec_rejects_bad_geometry() {
        let o4 = StencilOrder::Fourth;
        assert!(GridSpec::line(4, 0.0, 0.1, Boundary::Periodic, o4).is_err());
        assert!(GridSpec::line(5, 0.0, 0.1, Boundary::Periodic, o4).is_ok());
        assert!(GridSpec::line(8, 0.0, 0.0, Boundary::Periodic, o4).is_err());
        assert!(GridSpec::line(8, 0.0, -1.0, Boundary::Periodic, o4).is_err());
        assert!(GridSpec::new(vec![8], vec![0.0], vec![0.1], true, Boundary::Periodic, o4).is_err());
        assert!(GridSpec::new(vec![8; 5], vec![0.0; 5], vec![0.1; 5], false, Boundary::Periodic, o4).is_err());
    }

    #[test]
    fn field_rejects_non_finite_and_bad_length() {
        let spec = periodic_line(8, StencilOrder::Second);
        assert!(matches!(
            ScalarField::new(spec.clone(), vec![0.0; 7]),
            Err(Error::ShapeMismatch { expected: 8, got: 7 })
        ));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(ScalarField::new(spec, v), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn partial_of_constant_is_zero() {
        for boundary in [Boundary::Periodic, Boundary::ClampedGhost] {
            for order in [StencilOrder::Second, StencilOrder::Fourth] {
                let spec = GridSpec::line(16, -1.0, 0.1, boundary, order).unwrap();
                let f = ScalarField::constant(&spec, 3.25).unwrap();
                let d = f.partial(0).unwrap();
                assert!(d.values().iter().all(|v| v.abs() < 1e-12));
                assert!(f.dalembertian().unwrap().values().iter().all(|v| v.abs() < 1e-10));
            }
        }
    }

    #[test]
    fn partial_of_linear_is_one_on_clamped_grid() {
        for order in [StencilOrder::Second, StencilOrder::Fourth] {
            let spec = GridSpec::line(33, -2.0, 0.125, Boundary::ClampedGhost, order).unwrap();
            let f = ScalarField::from_fn(&spec, |x| x[0]).unwrap();
            let d = f.partial(0).unwrap();
            for v in d.values() {
                assert!((v - 1.0).abs() < 1e-12, "{v}");
            }
        }
    }

    #[test]
    fn clamped_stencils_are_exact_on_polynomials_up_to_order() {
        // One-sided windows keep the interior order at the edges.
        let spec = GridSpec::line(21, -1.0, 0.1, Boundary::ClampedGhost, StencilOrder::Fourth).unwrap();
        let f = ScalarField::from_fn(&spec, |x| x[0].powi(4) - 2.0 * x[0].powi(3) + x[0]).unwrap();
        let d = f.partial(0).unwrap();
        assert!(max_err(&d, |x| 4.0 * x[0].powi(3) - 6.0 * x[0].powi(2) + 1.0) < 1e-10);
        let d2 = f.second_partial(0).unwrap();
        assert!(max_err(&d2, |x| 12.0 * x[0].powi(2) - 12.0 * x[0]) < 1e-9);
    }

    #[test]
    fn sine_derivative_converges_at_fourth_order() {
        let err = |n: usize| {
            let spec = periodic_line(n, StencilOrder::Fourth);
            let f = ScalarField::from_fn(&spec, |x| x[0].sin()).unwrap();
            max_err(&f.partial(0).unwrap(), |x| x[0].cos())
        };
        let e256 = err(256);
        let h = 2.0 * PI / 256.0;
        let ratio = err(128) / e256;
        assert!((16.0 * 0.7..=16.0 * 1.3).contains(&ratio), "ratio {ratio}");
        // K measured from the halving pair; the h^4 bound holds with it.
        let k = e256 / h.powi(4);
        assert!(k < 0.1, "K = {k}");
    }

    #[test]
    fn second_order_rate() {
        let err = |n: usize| {
            let spec = periodic_line(n, StencilOrder::Second);
            let f = ScalarField::from_fn(&spec, |x| (2.0 * x[0]).cos()).unwrap();
            max_err(&f.second_partial(0).unwrap(), |x| -4.0 * (2.0 * x[0]).cos())
        };
        let ratio = err(64) / err(128);
        assert!((4.0 * 0.7..=4.0 * 1.3).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn dalembertian_of_static_exponential() {
        let n = 201;
        let h = 4.0 / (n - 1) as f64;
        let spec = GridSpec::line(n, -2.0, h, Boundary::ClampedGhost, StencilOrder::Fourth).unwrap();
        let f = ScalarField::from_fn(&spec, |x| x[0].exp()).unwrap();
        let boxf = f.dalembertian().unwrap();
        let err = max_err(&boxf, |x| -x[0].exp());
        assert!(err < 5e-6, "{err}");
    }

    #[test]
    fn standing_wave_cancels_under_wave_operator() {
        let n = 64;
        let h = 2.0 * PI / n as f64;
        let spec = GridSpec::new(
            vec![n, n],
            vec![0.0, 0.0],
            vec![h, h],
            true,
            Boundary::Periodic,
            StencilOrder::Fourth,
        )
        .unwrap();
        let f = ScalarField::from_fn(&spec, |c| c[0].sin() * c[1].sin()).unwrap();
        let boxf = f.dalembertian().unwrap();
        assert!(boxf.linf_norm() < 1e-12, "{}", boxf.linf_norm());
    }

    #[test]
    fn static_dalembertian_is_exact_negative_laplacian() {
        let n = 32;
        let h = 2.0 * PI / n as f64;
        let spec = GridSpec::new(
            vec![n, n],
            vec![0.0, 0.0],
            vec![h, h],
            false,
            Boundary::Periodic,
            StencilOrder::Fourth,
        )
        .unwrap();
        let f = ScalarField::from_fn(&spec, |c| (c[0] + 2.0 * c[1]).sin() + c[0].cos()).unwrap();
        let lap = f.laplacian().unwrap();
        let boxf = f.dalembertian().unwrap();
        for (a, b) in lap.values().iter().zip(boxf.values()) {
            assert_eq!(-a, *b);
        }
    }

    #[test]
    fn axis_out_of_range() {
        let spec = periodic_line(8, StencilOrder::Second);
        let f = ScalarField::constant(&spec, 1.0).unwrap();
        assert!(matches!(f.partial(1), Err(Error::AxisOutOfRange { axis: 1, rank: 1 })));
    }

    #[test]
    fn decimation_keeps_period() {
        let spec = periodic_line(64, StencilOrder::Fourth);
        let f = ScalarField::from_fn(&spec, |x| x[0].sin()).unwrap();
        let c = f.decimate().unwrap();
        assert_eq!(c.len(), 32);
        assert_eq!(c.spec().spacing[0], 2.0 * spec.spacing[0]);
        assert!(max_err(&c, |x| x[0].sin()) == 0.0);
    }
}
