//! Quantum (Machian) potentials and effective-mass fields.
//!
//! Relativistic, dimensionless: `Q = (C/m0²) □√ρ/√ρ`, with `𝔔 = m0² Q`.
//! Non-relativistic, energy-valued: `Q_nr = −ħ²/(2m) ∇²√ρ/√ρ`.
//!
//! Densities may contain nodes. Values below `ε = 1e-12 · max ρ` are clamped
//! to `ε` before the square root and their indices are reported alongside
//! the result. Negative densities are rejected.

use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Relative clamp level for density nodes.
pub const NODE_EPSILON: f64 = 1e-12;

/// Truncation of `M² = m0² exp(Q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassOrder {
    /// `m0² (1 + Q)`
    Linear,
    /// `m0² (1 + Q + ½ (C²/m0⁴) □²√ρ/√ρ)`
    Quadratic,
    /// `m0² exp(Q)`
    Exponential,
}

impl FromStr for MassOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(MassOrder::Linear),
            "quadratic" => Ok(MassOrder::Quadratic),
            "exp" | "exponential" => Ok(MassOrder::Exponential),
            other => Err(Error::InvalidParameter(format!("unknown mass order '{other}'"))),
        }
    }
}

/// Physical constants in natural units (`c = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassParams {
    pub m0: f64,
    pub hbar: f64,
    /// Mass scale of the non-relativistic exponential mass.
    pub alpha: f64,
    /// Coupling `C` of the relativistic potential; `ħ²` unless overridden.
    pub coupling: f64,
    pub order: MassOrder,
}

impl MassParams {
    pub fn new(m0: f64, hbar: f64, alpha: f64) -> Result<Self> {
        for (name, v) in [("m0", m0), ("hbar", hbar), ("alpha", alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(MassParams {
            m0,
            hbar,
            alpha,
            coupling: hbar * hbar,
            order: MassOrder::Linear,
        })
    }

    /// `m0 = ħ = α = 1`.
    pub fn natural() -> Self {
        MassParams::new(1.0, 1.0, 1.0).expect("unit constants are valid")
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_order(mut self, order: MassOrder) -> Self {
        self.order = order;
        self
    }
}

/// A computed field plus the nodes where the density was clamped.
#[derive(Clone, Debug)]
pub struct PotentialField {
    pub field: ScalarField,
    pub regularized: Vec<usize>,
}

impl PotentialField {
    /// 1 where the density was clamped, 0 elsewhere.
    pub fn mask(&self) -> Result<ScalarField> {
        let mut v = vec![0.0; self.field.len()];
        for &i in &self.regularized {
            v[i] = 1.0;
        }
        self.field.with_values(v)
    }
}

/// `√ρ` with node clamping.
pub fn amplitude(rho: &ScalarField) -> Result<(ScalarField, Vec<usize>)> {
    if let Some((index, &value)) = rho.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::Domain {
            what: "negative density",
            index,
            value,
        });
    }
    let peak = rho.max();
    if !(peak > 0.0) {
        return Err(Error::Domain {
            what: "density vanishes everywhere",
            index: 0,
            value: peak,
        });
    }
    let eps = NODE_EPSILON * peak;
    let mut regularized = Vec::new();
    let values = rho
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v < eps {
                regularized.push(i);
                eps.sqrt()
            } else {
                v.sqrt()
            }
        })
        .collect();
    Ok((rho.with_values(values)?, regularized))
}

fn ratio(num: &ScalarField, den: &ScalarField) -> Result<ScalarField> {
    num.div(den)
}

fn report_nodes(regularized: &[usize], total: usize) {
    if !regularized.is_empty() {
        warn!(
            "density clamped at {} of {} nodes ({:.3}%)",
            regularized.len(),
            total,
            100.0 * regularized.len() as f64 / total as f64
        );
    }
}

/// `□√ρ/√ρ`.
pub fn wave_ratio(rho: &ScalarField) -> Result<PotentialField> {
    let (r, regularized) = amplitude(rho)?;
    let field = ratio(&r.dalembertian()?, &r)?;
    Ok(PotentialField { field, regularized })
}

/// Dimensionless relativistic potential `Q = (C/m0²) □√ρ/√ρ`.
pub fn quantum_potential_rel(rho: &ScalarField, params: &MassParams) -> Result<PotentialField> {
    let w = wave_ratio(rho)?;
    report_nodes(&w.regularized, rho.len());
    Ok(PotentialField {
        field: w.field.scale(params.coupling / (params.m0 * params.m0))?,
        regularized: w.regularized,
    })
}

/// `𝔔 = m0² Q = C □√ρ/√ρ`.
pub fn quantum_potential_frak(rho: &ScalarField, params: &MassParams) -> Result<PotentialField> {
    let w = wave_ratio(rho)?;
    Ok(PotentialField {
        field: w.field.scale(params.coupling)?,
        regularized: w.regularized,
    })
}

/// Non-relativistic Bohm potential `−ħ²/(2 m0) ∇²√ρ/√ρ` over spatial axes.
pub fn quantum_potential_nr(rho: &ScalarField, params: &MassParams) -> Result<PotentialField> {
    let (r, regularized) = amplitude(rho)?;
    report_nodes(&regularized, rho.len());
    let lap = ratio(&r.laplacian()?, &r)?;
    Ok(PotentialField {
        field: lap.scale(-params.hbar * params.hbar / (2.0 * params.m0))?,
        regularized,
    })
}

/// Squared effective mass and the share of nodes where it is not positive.
#[derive(Clone, Debug)]
pub struct MassSquared {
    pub field: ScalarField,
    pub regularized: Vec<usize>,
    pub nonpositive_fraction: f64,
}

/// `M²` at the truncation selected by `params.order`. Non-positive values
/// from the linear and quadratic forms are kept and reported.
pub fn machian_mass_sq(rho: &ScalarField, params: &MassParams) -> Result<MassSquared> {
    let (r, regularized) = amplitude(rho)?;
    report_nodes(&regularized, rho.len());
    let m0_sq = params.m0 * params.m0;
    let q = ratio(&r.dalembertian()?, &r)?.scale(params.coupling / m0_sq)?;
    let field = match params.order {
        MassOrder::Linear => q.map(|q| m0_sq * (1.0 + q))?,
        MassOrder::Exponential => q.map(|q| m0_sq * q.exp())?,
        MassOrder::Quadratic => {
            let second = ratio(&r.bidalembertian()?, &r)?;
            let k = 0.5 * params.coupling * params.coupling / (m0_sq * m0_sq);
            q.zip_with(&second, |q, s| m0_sq * (1.0 + q + k * s))?
        }
    };
    let bad = field.values().iter().filter(|v| **v <= 0.0).count();
    let nonpositive_fraction = bad as f64 / field.len() as f64;
    if bad > 0 {
        warn!(
            "{:?} M² is non-positive at {:.3}% of nodes; |Q| is outside the small-correction regime",
            params.order,
            100.0 * nonpositive_fraction
        );
    }
    Ok(MassSquared {
        field,
        regularized,
        nonpositive_fraction,
    })
}

/// Non-relativistic Machian mass `α exp(2 Q_nr / m0)` (work `W = −Q_nr`).
pub fn machian_mass_nr(q_nr: &ScalarField, params: &MassParams) -> Result<ScalarField> {
    q_nr.map(|q| params.alpha * (2.0 * q / params.m0).exp())
}

/// `(□R)² − R □²R`; zero where the higher-order constraint holds.
pub fn constraint_defect(r: &ScalarField) -> Result<ScalarField> {
    let wave = r.dalembertian()?;
    let wave2 = wave.dalembertian()?;
    let values = (0..r.len())
        .map(|i| wave.values()[i] * wave.values()[i] - r.values()[i] * wave2.values()[i])
        .collect();
    r.with_values(values)
}
