//! Euler-Lagrange residuals of the Machian action and exponent recovery.
//!
//! Varying `∫ w (∂_μS ∂^μS − m0² − 𝔔) d⁴x` with respect to the base field
//! `b` (weight `w = ρ` for `b = ρ`, `w = R²` for `b = R`) and dropping the
//! Hamilton-Jacobi bracket leaves
//!
//! ```text
//! w ∂𝔔/∂b − ∂_μ( w ∂𝔔/∂(∂_μb) ) + □( w ∂𝔔/∂(□b) )
//! ```
//!
//! Pointwise partials come from [`ExponentFamily::partials`]; the outer
//! divergence and wave operator use the grid stencils, so the residual is
//! generic over the family. For `(m, n, p) = (−1, 0, 1)` it reduces to
//! `−C r (2r − 1) □ρ/ρ`, which vanishes for every density only at `r = ½`.
//!
//! Static grids use `□ = −∇²`, so residuals on static fields carry the
//! opposite sign from the Euclidean Laplacian convention.

mod golden;

pub use golden::{golden_section, scan_bracket, Minimum};

use serde::Serialize;

use crate::ansatz::{evaluate, partial_fields, ExponentFamily, Variable};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Residual field of the Euler-Lagrange operator and its norms.
#[derive(Clone, Debug)]
pub struct ELReport {
    pub residual: ScalarField,
    pub l2: f64,
    pub linf: f64,
    pub family: ExponentFamily,
    pub grid_h: Vec<f64>,
}

/// Serializable part of an [`ELReport`].
#[derive(Clone, Debug, Serialize)]
pub struct ELSummary {
    pub family: ExponentFamily,
    pub l2: f64,
    pub linf: f64,
    pub grid: GridRecord,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridRecord {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub has_time_axis: bool,
    pub stencil_order: usize,
}

impl From<&GridSpec> for GridRecord {
    fn from(spec: &GridSpec) -> Self {
        GridRecord {
            shape: spec.shape.clone(),
            spacing: spec.spacing.clone(),
            has_time_axis: spec.has_time_axis,
            stencil_order: spec.stencil_order.as_usize(),
        }
    }
}

impl ELReport {
    fn new(residual: ScalarField, family: &ExponentFamily) -> Self {
        ELReport {
            l2: residual.l2_norm(),
            linf: residual.linf_norm(),
            grid_h: residual.spec().spacing.clone(),
            family: family.clone(),
            residual,
        }
    }

    pub fn summary(&self) -> ELSummary {
        ELSummary {
            family: self.family.clone(),
            l2: self.l2,
            linf: self.linf,
            grid: GridRecord::from(self.residual.spec()),
        }
    }
}

fn el_residual(family: &ExponentFamily, base: &ScalarField) -> Result<ScalarField> {
    let weight_power = match family.variable() {
        Variable::Rho => 1,
        Variable::R => 2,
    };
    // 𝔔 is linear in C; applying it last keeps the outer stencils free of
    // an extra rounding step.
    let (_, wp) = partial_fields(&family.with_unit_coupling(), base, weight_power)?;
    let rank = base.spec().rank();

    let mut divergence = vec![0.0; base.len()];
    for axis in 0..rank {
        let flux = base.with_values(wp.iter().map(|p| p.d_grad[axis]).collect())?;
        for (acc, d) in divergence.iter_mut().zip(flux.partial(axis)?.values()) {
            *acc += d;
        }
    }
    let wave_term = base.with_values(wp.iter().map(|p| p.d_wave).collect())?.dalembertian()?;

    let values = (0..base.len())
        .map(|i| family.coupling() * (wp[i].d_value - divergence[i] + wave_term.values()[i]))
        .collect();
    base.with_values(values)
}

/// Residual with respect to ρ for a family written in ρ.
pub fn el_residual_rho(family: &ExponentFamily, rho: &ScalarField) -> Result<ELReport> {
    if family.variable() != Variable::Rho {
        return Err(Error::InvalidFamily(format!("el_residual_rho needs var=rho, got {family}")));
    }
    Ok(ELReport::new(el_residual(family, rho)?, family))
}

/// Residual with respect to `R = √ρ` (weight `R²`) for a family written in R.
#[allow(non_snake_case)]
pub fn el_residual_R(family: &ExponentFamily, r: &ScalarField) -> Result<ELReport> {
    if family.variable() != Variable::R {
        return Err(Error::InvalidFamily(format!("el_residual_R needs var=R, got {family}")));
    }
    Ok(ELReport::new(el_residual(family, r)?, family))
}

/// `−C r (2r − 1) □ρ/ρ` on the grid: the `(−1, 0, 1)` residual in closed form.
pub fn closed_form_residual(family: &ExponentFamily, rho: &ScalarField) -> Result<ScalarField> {
    if !family.is_simplest_shape() || family.variable() != Variable::Rho {
        return Err(Error::InvalidFamily(format!("closed form exists only for m=-1, n=0, p=1 in ρ, got {family}")));
    }
    let r = family.r();
    rho.dalembertian()?
        .div(rho)?
        .scale(-family.coupling() * r * (2.0 * r - 1.0))
}

/// `Σ_fields ‖residual(r)‖₂²`, summed in field order.
pub fn exponent_objective(template: &ExponentFamily, fields: &[ScalarField], r: f64) -> Result<f64> {
    let family = template.with_r(r)?;
    let mut total = 0.0;
    for rho in fields {
        let l2 = el_residual_rho(&family, rho)?.l2;
        total += l2 * l2;
    }
    Ok(total)
}

/// Outcome of [`solve_exponent_r`].
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub r: f64,
    pub objective: f64,
    pub evaluations: usize,
    /// Objective at `r` on every field decimated by two, when all fields allow it.
    pub coarse_objective: Option<f64>,
}

/// Width of the final golden-section bracket.
pub const R_TOLERANCE: f64 = 1e-8;
const SCAN_SAMPLES: usize = 17;

/// Finds the exponent `r` minimizing [`exponent_objective`] on `[lo, hi]`.
///
/// A coarse scan picks the bracket, golden-section search narrows it to
/// [`R_TOLERANCE`]. A minimum on either end of the interval is reported as
/// [`Error::BoundaryMinimum`]. When every field can be decimated, the
/// objective at the minimizer must be larger on the coarse grids.
pub fn solve_exponent_r(template: &ExponentFamily, fields: &[ScalarField], lo: f64, hi: f64) -> Result<SolveReport> {
    if fields.is_empty() {
        return Err(Error::InvalidParameter("at least one test field is required".into()));
    }
    if template.variable() != Variable::Rho {
        return Err(Error::InvalidFamily(format!("exponent search needs var=rho, got {template}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("bad search interval [{lo}, {hi}]")));
    }
    if lo <= 0.0 && hi >= 0.0 {
        return Err(Error::InvalidParameter(format!("search interval [{lo}, {hi}] must exclude r = 0")));
    }

    let objective = |r: f64| exponent_objective(template, fields, r);
    let (a, b) = scan_bracket(objective, lo, hi, SCAN_SAMPLES)?;
    let min = golden_section(objective, a, b, R_TOLERANCE)?;
    let evaluations = SCAN_SAMPLES + min.evaluations;

    let edge = 1e-6 * (hi - lo);
    if min.x - lo <= edge || hi - min.x <= edge {
        return Err(Error::BoundaryMinimum {
            r: min.x,
            lo,
            hi,
            objective: min.value,
        });
    }

    let coarse: Option<Vec<ScalarField>> = fields.iter().map(|f| f.decimate().ok()).collect();
    let coarse_objective = match coarse {
        Some(coarse) => {
            let c = exponent_objective(template, &coarse, min.x)?;
            if !(c > min.value) {
                return Err(Error::RefinementNotDecreasing {
                    fine: min.value,
                    coarse: c,
                });
            }
            Some(c)
        }
        None => None,
    };

    Ok(SolveReport {
        r: min.x,
        objective: min.value,
        evaluations,
        coarse_objective,
    })
}

/// Source of the Machian term in the Hamilton-Jacobi bracket.
#[derive(Clone, Copy, Debug)]
pub enum HjPotential<'a> {
    /// `𝔔` from the monomial family evaluated on ρ.
    Family(&'a ExponentFamily),
    /// A precomputed dimensionless `Q`; `𝔔 = m0² Q`.
    Dimensionless(&'a ScalarField),
}

/// `∂_μS ∂^μS − m0² − 𝔔[ρ]`.
///
/// On a static grid the time derivative of `S` is taken to be
/// `static_energy`; with a time axis that argument is ignored.
pub fn hj_residual(
    s: &ScalarField,
    rho: &ScalarField,
    potential: HjPotential<'_>,
    m0: f64,
    static_energy: f64,
) -> Result<ScalarField> {
    if s.spec() != rho.spec() {
        return Err(Error::GridMismatch);
    }
    let mut grad_sq = s.gradient_square()?;
    if !s.spec().has_time_axis {
        grad_sq = grad_sq.map(|v| v + static_energy * static_energy)?;
    }
    let frak = match potential {
        HjPotential::Family(family) => evaluate(family, rho)?,
        HjPotential::Dimensionless(q) => {
            if q.spec() != rho.spec() {
                return Err(Error::GridMismatch);
            }
            q.scale(m0 * m0)?
        }
    };
    grad_sq.zip_with(&frak, |g, q| g - m0 * m0 - q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::{make_field, FieldKind};
    use crate::grid::{Boundary, StencilOrder};
    use crate::potential::constraint_defect;
    use std::f64::consts::PI;

    fn periodic(n: usize) -> GridSpec {
        GridSpec::line(n, 0.0, 2.0 * PI / n as f64, Boundary::Periodic, StencilOrder::Fourth).unwrap()
    }

    fn clamped(n: usize, lo: f64, hi: f64) -> GridSpec {
        GridSpec::line(n, lo, (hi - lo) / (n - 1) as f64, Boundary::ClampedGhost, StencilOrder::Fourth).unwrap()
    }

    #[test]
    fn constant_density_has_zero_residual() {
        let rho = ScalarField::constant(&periodic(64), 1.7).unwrap();
        for r in [0.25, 0.5, 2.0] {
            let rep = el_residual_rho(&ExponentFamily::simplest(1.0, r).unwrap(), &rho).unwrap();
            assert!(rep.linf < 1e-12);
        }
        let rep = el_residual_R(&ExponentFamily::second_order_r(1.0), &rho).unwrap();
        assert!(rep.linf < 1e-10);
    }

    #[test]
    fn variable_mismatch_rejected() {
        let rho = ScalarField::constant(&periodic(16), 1.0).unwrap();
        assert!(el_residual_rho(&ExponentFamily::second_order_r(1.0), &rho).is_err());
        assert!(el_residual_R(&ExponentFamily::simplest(1.0, 0.5).unwrap(), &rho).is_err());
    }

    #[test]
    fn residual_matches_closed_form() {
        let rho = make_field(&periodic(512), &FieldKind::random(3)).unwrap();
        for r in [0.25, 0.5, 1.0, 2.0] {
            let fam = ExponentFamily::simplest(1.0, r).unwrap();
            let rep = el_residual_rho(&fam, &rho).unwrap();
            let closed = closed_form_residual(&fam, &rho).unwrap();
            let dev = rep.residual.sub(&closed).unwrap().linf_norm();
            assert!(dev < 1e-5, "r = {r}: {dev}");
        }
    }

    #[test]
    fn residual_scales_with_two_r_minus_one() {
        let rho = make_field(&periodic(256), &FieldKind::random(8)).unwrap();
        // closed form ∝ r(2r−1): r = 0.75 → 0.375, r = 1 → 1
        let l2 = |r| el_residual_rho(&ExponentFamily::simplest(1.0, r).unwrap(), &rho).unwrap().l2;
        let ratio = l2(0.75) / l2(1.0);
        assert!((ratio - 0.375).abs() < 0.01 * 0.375, "{ratio}");
    }

    #[test]
    fn residual_is_scale_invariant() {
        let rho = make_field(&periodic(128), &FieldKind::random(4)).unwrap();
        let fam = ExponentFamily::simplest(1.0, 0.8).unwrap();
        let a = el_residual_rho(&fam, &rho).unwrap().residual;
        for gamma in [1e-3, 7.3, 1e3] {
            let b = el_residual_rho(&fam, &rho.scale(gamma).unwrap()).unwrap().residual;
            assert!(b.sub(&a).unwrap().linf_norm() <= 1e-12 * a.linf_norm().max(1.0));
        }
    }

    #[test]
    fn r_form_equals_scaled_defect() {
        let c = 1.3;
        let r = make_field(&clamped(201, -4.0, 4.0), &FieldKind::gaussian(1.0)).unwrap();
        let rep = el_residual_R(&ExponentFamily::second_order_r(c), &r).unwrap();
        let defect = constraint_defect(&r).unwrap();
        let expected = defect.div(&r).unwrap().scale(-2.0 * c).unwrap();
        let diff = rep.residual.sub(&expected).unwrap().linf_norm();
        assert!(diff <= 1e-12 * expected.linf_norm(), "{diff}");
        assert!(rep.linf > 0.01);
    }

    #[test]
    fn exponent_search_recovers_half() {
        let fields: Vec<_> = [1, 2, 3]
            .iter()
            .map(|&s| make_field(&periodic(128), &FieldKind::random(s)).unwrap())
            .collect();
        let template = ExponentFamily::simplest(1.0, 1.0).unwrap();
        let rep = solve_exponent_r(&template, &fields, 0.1, 2.0).unwrap();
        assert!((rep.r - 0.5).abs() < 5e-4, "{}", rep.r);
        assert!(rep.coarse_objective.unwrap() > rep.objective);
    }

    #[test]
    fn exponent_search_reports_boundary() {
        let fields = vec![make_field(&periodic(64), &FieldKind::random(1)).unwrap()];
        let template = ExponentFamily::simplest(1.0, 1.0).unwrap();
        match solve_exponent_r(&template, &fields, 0.9, 1.1) {
            Err(Error::BoundaryMinimum { r, .. }) => assert!((r - 0.9).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        assert!(solve_exponent_r(&template, &fields, -1.0, 1.0).is_err());
        assert!(solve_exponent_r(&template, &[], 0.1, 1.0).is_err());
    }

    #[test]
    fn hj_bracket_for_rest_and_plane_phase() {
        let spec = GridSpec::new(
            vec![16, 32],
            vec![0.0, -1.0],
            vec![0.1, 2.0 / 32.0],
            true,
            Boundary::ClampedGhost,
            StencilOrder::Fourth,
        )
        .unwrap();
        let rho = ScalarField::constant(&spec, 1.0).unwrap();
        let fam = ExponentFamily::simplest(1.0, 0.5).unwrap();
        let rest = make_field(&spec, &FieldKind::PlanePhase { energy: 1.0, momentum: vec![] }).unwrap();
        let res = hj_residual(&rest, &rho, HjPotential::Family(&fam), 1.0, 0.0).unwrap();
        assert!(res.linf_norm() < 1e-12);
        let (e, p) = (1.25, 0.75);
        let plane = make_field(&spec, &FieldKind::PlanePhase { energy: e, momentum: vec![p] }).unwrap();
        let res = hj_residual(&plane, &rho, HjPotential::Family(&fam), 1.0, 0.0).unwrap();
        assert!(res.linf_norm() < 1e-10);
    }

    #[test]
    fn hj_static_folds_energy_and_checks_grids() {
        let spec = clamped(33, -1.0, 1.0);
        let rho = ScalarField::constant(&spec, 1.0).unwrap();
        let s = make_field(&spec, &FieldKind::PlanePhase { energy: 0.0, momentum: vec![0.6] }).unwrap();
        let q = ScalarField::constant(&spec, 0.0).unwrap();
        let res = hj_residual(&s, &rho, HjPotential::Dimensionless(&q), 0.8, 1.0).unwrap();
        assert!(res.linf_norm() < 1e-12);
        let other = ScalarField::constant(&clamped(17, -1.0, 1.0), 1.0).unwrap();
        assert!(matches!(
            hj_residual(&s, &other, HjPotential::Dimensionless(&q), 1.0, 1.0),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn summary_serializes() {
        let rho = make_field(&periodic(32), &FieldKind::random(2)).unwrap();
        let rep = el_residual_rho(&ExponentFamily::simplest(1.0, 1.0).unwrap(), &rho).unwrap();
        let v = serde_json::to_value(rep.summary()).unwrap();
        assert_eq!(v["family"]["m"], -1);
        assert_eq!(v["grid"]["shape"][0], 32);
        assert!(v["l2"].as_f64().unwrap() > 0.0);
    }
}
