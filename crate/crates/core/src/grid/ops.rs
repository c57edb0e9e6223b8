use super::ScalarField;
use crate::error::{Error, Result};

const FAN_IN: usize = 8;

/// Sum with a fixed-shape reduction tree so results never depend on how
/// work is split.
pub(crate) fn tree_sum(xs: &[f64]) -> f64 {
    if xs.len() <= FAN_IN {
        return xs.iter().sum();
    }
    let chunk = xs.len().div_ceil(FAN_IN);
    xs.chunks(chunk).map(tree_sum).sum()
}

fn is_integer(e: f64) -> bool {
    e.fract() == 0.0 && e.abs() <= i32::MAX as f64
}

impl ScalarField {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        self.with_values(self.values().iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        let values = self
            .values()
            .iter()
            .zip(other.values())
            .map(|(&a, &b)| f(a, b))
            .collect();
        self.with_values(values)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Elementwise quotient; a zero divisor is a domain error.
    pub fn div(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_same_grid(other)?;
        if let Some((index, &value)) = other.values().iter().enumerate().find(|(_, v)| **v == 0.0) {
            return Err(Error::Domain {
                what: "division by zero",
                index,
                value,
            });
        }
        self.zip_with(other, |a, b| a / b)
    }

    pub fn scale(&self, s: f64) -> Result<ScalarField> {
        self.map(|v| s * v)
    }

    /// `v^exponent` elementwise. Non-integer exponents require strictly
    /// positive values.
    pub fn power(&self, exponent: f64) -> Result<ScalarField> {
        if is_integer(exponent) {
            let e = exponent as i32;
            if e < 0 {
                if let Some((index, &value)) = self.values().iter().enumerate().find(|(_, v)| **v == 0.0) {
                    return Err(Error::Domain {
                        what: "negative power of zero",
                        index,
                        value,
                    });
                }
            }
            return self.map(|v| v.powi(e));
        }
        self.require_positive("fractional power")?;
        self.map(|v| v.powf(exponent))
    }

    pub fn sqrt(&self) -> Result<ScalarField> {
        self.require_positive("square root")?;
        self.map(f64::sqrt)
    }

    pub(crate) fn require_positive(&self, what: &'static str) -> Result<()> {
        match self.values().iter().enumerate().find(|(_, v)| **v <= 0.0) {
            Some((index, &value)) => Err(Error::Domain { what, index, value }),
            None => Ok(()),
        }
    }

    /// `sqrt(Σ v² · ΔV)`.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values().iter().map(|v| v * v).collect();
        (tree_sum(&sq) * self.spec().cell_volume()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ a·b · ΔV`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        let prod: Vec<f64> = self.values().iter().zip(other.values()).map(|(a, b)| a * b).collect();
        Ok(tree_sum(&prod) * self.spec().cell_volume())
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
