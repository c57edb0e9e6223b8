use super::{Boundary, ScalarField};
use crate::error::{Error, Result};

/// Tolerance (in cells) for points sitting on the outer node of a clamped axis.
const HULL_SLACK: f64 = 1e-9;

impl ScalarField {
    /// Multilinear interpolation at `coords` (one entry per grid axis).
    /// Periodic axes wrap; clamped axes reject points outside the node hull.
    pub fn sample(&self, coords: &[f64]) -> Result<f64> {
        let spec = self.spec();
        if coords.len() != spec.rank() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                spec.rank(),
                coords.len()
            )));
        }
        let strides = spec.strides();
        let mut lo_idx = Vec::with_capacity(spec.rank());
        let mut hi_idx = Vec::with_capacity(spec.rank());
        let mut frac = Vec::with_capacity(spec.rank());
        for (axis, &x) in coords.iter().enumerate() {
            let n = spec.shape[axis];
            let h = spec.spacing[axis];
            let t = (x - spec.origin[axis]) / h;
            match spec.boundary {
                Boundary::Periodic => {
                    let t = t.rem_euclid(n as f64);
                    let i0 = (t.floor() as usize).min(n - 1);
                    lo_idx.push(i0);
                    hi_idx.push((i0 + 1) % n);
                    frac.push(t - i0 as f64);
                }
                Boundary::ClampedGhost => {
                    let last = (n - 1) as f64;
                    if !(t >= -HULL_SLACK && t <= last + HULL_SLACK) {
                        return Err(Error::OutOfHull {
                            axis,
                            coord: x,
                            lo: spec.origin[axis],
                            hi: spec.coordinate(axis, n - 1),
                        });
                    }
                    let t = t.clamp(0.0, last);
                    let i0 = (t.floor() as usize).min(n - 2);
                    lo_idx.push(i0);
                    hi_idx.push(i0 + 1);
                    frac.push(t - i0 as f64);
                }
            }
        }
        let values = self.values();
        let mut acc = 0.0;
        for corner in 0..(1usize << spec.rank()) {
            let mut weight = 1.0;
            let mut offset = 0;
            for axis in 0..spec.rank() {
                if corner >> axis & 1 == 1 {
                    weight *= frac[axis];
                    offset += hi_idx[axis] * strides[axis];
                } else {
                    weight *= 1.0 - frac[axis];
                    offset += lo_idx[axis] * strides[axis];
                }
            }
            if weight != 0.0 {
                acc += weight * values[offset];
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use crate::error::Error;
    use crate::grid::{Boundary, GridSpec, ScalarField, StencilOrder};

    #[test]
    fn bilinear_is_exact_on_bilinear_functions() {
        let spec = GridSpec::new(
            vec![6, 7],
            vec![-1.0, 0.0],
            vec![0.5, 0.25],
            false,
            Boundary::ClampedGhost,
            StencilOrder::Second,
        )
        .unwrap();
        let f = ScalarField::from_fn(&spec, |c| 1.0 + 2.0 * c[0] - c[1] + 0.5 * c[0] * c[1]).unwrap();
        for &(x, y) in &[(0.1, 0.3), (-1.0, 0.0), (1.5, 1.5), (0.77, 1.01)] {
            let v = f.sample(&[x, y]).unwrap();
            assert!((v - (1.0 + 2.0 * x - y + 0.5 * x * y)).abs() < 1e-13);
        }
    }

    #[test]
    fn clamped_hull_exit_names_axis() {
        let spec = GridSpec::new(
            vec![5, 5],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            false,
            Boundary::ClampedGhost,
            StencilOrder::Second,
        )
        .unwrap();
        let f = ScalarField::constant(&spec, 1.0).unwrap();
        assert!(matches!(f.sample(&[2.0, 4.5]), Err(Error::OutOfHull { axis: 1, .. })));
    }

    #[test]
    fn periodic_wraps() {
        let spec = GridSpec::line(8, 0.0, 1.0, Boundary::Periodic, StencilOrder::Second).unwrap();
        let f = ScalarField::from_fn(&spec, |c| c[0]).unwrap();
        // between node 7 (value 7) and node 0 (value 0)
        assert!((f.sample(&[7.5]).unwrap() - 3.5).abs() < 1e-15);
        assert_eq!(f.sample(&[-6.0]).unwrap(), 2.0);
    }
}
