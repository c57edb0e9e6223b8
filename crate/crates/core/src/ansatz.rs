//! Monomial family of Machian potentials
//!
//! ```text
//! 𝔔 = C · f^m · (∂_μf ∂^μf)^{n/2} · (□f)^p
//! ```
//!
//! with `f = ρ^r` ([`Variable::Rho`]) or `f = R` ([`Variable::R`]). The
//! power `n` must be even; `(∂f)^n` is read as the Lorentz scalar
//! `(∂_μf ∂^μf)^{n/2}`.
//!
//! For the Euler-Lagrange operator the potential is also treated as a plain
//! function of three slots at a point: the base value `b`, its gradient
//! `∂_μb` and its wave operator `□b`. The chain rule through `f = b^e` gives
//!
//! ```text
//! ∂_μf ∂^μf = e² b^{2e−2} X,          X = ∂_μb ∂^μb
//! □f        = e b^{e−1} □b + e(e−1) b^{e−2} X
//! ```
//!
//! and [`ExponentFamily::partials`] differentiates the result in closed form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Which base field the family is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "R")]
    R,
}

/// Parameters `(C, r, m, n, p)` of the monomial family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily", into = "RawFamily")]
pub struct ExponentFamily {
    coupling: f64,
    r: f64,
    m: i32,
    n: u32,
    p: i32,
    variable: Variable,
}

#[derive(Serialize, Deserialize)]
struct RawFamily {
    #[serde(rename = "C")]
    coupling: f64,
    r: f64,
    m: i32,
    n: i64,
    p: i32,
    variable: Variable,
}

impl TryFrom<RawFamily> for ExponentFamily {
    type Error = Error;

    fn try_from(raw: RawFamily) -> Result<Self> {
        ExponentFamily::new(raw.coupling, raw.r, raw.m, raw.n, raw.p, raw.variable)
    }
}

impl From<ExponentFamily> for RawFamily {
    fn from(f: ExponentFamily) -> Self {
        RawFamily {
            coupling: f.coupling,
            r: f.r,
            m: f.m,
            n: i64::from(f.n),
            p: f.p,
            variable: f.variable,
        }
    }
}

impl ExponentFamily {
    /// `r` is ignored by the R-form but must still be non-zero.
    pub fn new(coupling: f64, r: f64, m: i32, n: i64, p: i32, variable: Variable) -> Result<Self> {
        if !coupling.is_finite() {
            return Err(Error::InvalidFamily(format!("C must be finite, got {coupling}")));
        }
        if !r.is_finite() || r == 0.0 {
            return Err(Error::InvalidFamily(format!("r must be finite and non-zero, got {r}")));
        }
        if n < 0 || n % 2 != 0 {
            return Err(Error::InvalidFamily(format!(
                "n must be an even non-negative integer, got {n}"
            )));
        }
        let n = u32::try_from(n).map_err(|_| Error::InvalidFamily(format!("n = {n} is too large")))?;
        Ok(ExponentFamily {
            coupling,
            r,
            m,
            n,
            p,
            variable,
        })
    }

    /// The `(m, n, p) = (−1, 0, 1)` family, `𝔔 = C ρ^{−r} □ρ^r`.
    pub fn simplest(coupling: f64, r: f64) -> Result<Self> {
        ExponentFamily::new(coupling, r, -1, 0, 1, Variable::Rho)
    }

    /// `𝔔 = C (□R)² / R²`, the next term of the expansion in `R = √ρ`.
    pub fn second_order_r(coupling: f64) -> Self {
        ExponentFamily {
            coupling,
            r: 0.5,
            m: -2,
            n: 0,
            p: 2,
            variable: Variable::R,
        }
    }

    pub fn with_r(&self, r: f64) -> Result<Self> {
        ExponentFamily::new(self.coupling, r, self.m, i64::from(self.n), self.p, self.variable)
    }

    pub(crate) fn with_unit_coupling(&self) -> Self {
        ExponentFamily {
            coupling: 1.0,
            ..self.clone()
        }
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> i32 {
        self.p
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    /// `m + n + p = 0`, equivalent to `𝔔[γρ] = 𝔔[ρ]`.
    pub fn is_scale_invariant(&self) -> bool {
        i64::from(self.m) + i64::from(self.n) + i64::from(self.p) == 0
    }

    pub fn is_simplest_shape(&self) -> bool {
        (self.m, self.n, self.p) == (-1, 0, 1)
    }

    /// Non-fatal remarks about the parameters.
    pub fn lints(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.m >= 0 {
            out.push(format!(
                "m = {} is not a negative integer; constant factors of ρ will not cancel",
                self.m
            ));
        }
        if !self.is_scale_invariant() {
            out.push(format!(
                "m + n + p = {} ≠ 0: potential is not invariant under ρ → γρ",
                i64::from(self.m) + i64::from(self.n) + i64::from(self.p)
            ));
        }
        out
    }

    /// Power applied to the base field: `r` for ρ, 1 for R.
    fn exponent(&self) -> f64 {
        match self.variable {
            Variable::Rho => self.r,
            Variable::R => 1.0,
        }
    }
}

impl fmt::Display for ExponentFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = match self.variable {
            Variable::Rho => "rho",
            Variable::R => "R",
        };
        write!(
            f,
            "C={},r={},m={},n={},p={},var={}",
            self.coupling, self.r, self.m, self.n, self.p, var
        )
    }
}

impl FromStr for ExponentFamily {
    type Err = Error;

    /// `C=1,r=0.5,m=-1,n=0,p=1,var=rho`; omitted keys default to that family.
    fn from_str(s: &str) -> Result<Self> {
        let (mut c, mut r, mut m, mut n, mut p, mut var) = (1.0, 0.5, -1i32, 0i64, 1i32, Variable::Rho);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidFamily(format!("expected key=value, got '{part}'")))?;
            let v = v.trim();
            let bad = || Error::InvalidFamily(format!("bad value '{v}' for '{k}'"));
            match k.trim() {
                "C" | "c" => c = v.parse().map_err(|_| bad())?,
                "r" => r = v.parse().map_err(|_| bad())?,
                "m" => m = v.parse().map_err(|_| bad())?,
                "n" => n = v.parse().map_err(|_| bad())?,
                "p" => p = v.parse().map_err(|_| bad())?,
                "var" | "variable" => {
                    var = match v {
                        "rho" => Variable::Rho,
                        "R" => Variable::R,
                        _ => return Err(bad()),
                    }
                }
                other => return Err(Error::InvalidFamily(format!("unknown key '{other}'"))),
            }
        }
        ExponentFamily::new(c, r, m, n, p, var)
    }
}

/// Metric signs per axis, padded with zeros to four slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Signature(pub [f64; 4]);

impl Signature {
    pub const MINKOWSKI: Signature = Signature([1.0, -1.0, -1.0, -1.0]);

    pub fn for_grid(spec: &GridSpec) -> Self {
        let mut s = [0.0; 4];
        for (axis, sign) in s.iter_mut().enumerate().take(spec.rank()) {
            *sign = spec.axis_sign(axis);
        }
        Signature(s)
    }

    pub fn contract(&self, a: &[f64; 4], b: &[f64; 4]) -> f64 {
        (0..4).map(|i| self.0[i] * a[i] * b[i]).sum()
    }
}

/// Pointwise arguments of the potential: `b`, `∂_μb` (lower index), `□b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slots {
    pub value: f64,
    pub grad: [f64; 4],
    pub wave: f64,
}

/// `∂𝔔/∂b`, `∂𝔔/∂(∂_μb)` (upper index), `∂𝔔/∂(□b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partials {
    pub d_value: f64,
    pub d_grad: [f64; 4],
    pub d_wave: f64,
}

/// Intermediate factors shared by the value and its partials.
struct Factors {
    f_m: f64,
    df_m: f64,
    g: f64,
    dg_db: f64,
    dg_dx: f64,
    h: f64,
    dh_db: f64,
    dh_dx: f64,
    dh_dwave: f64,
}

impl ExponentFamily {
    /// With `weight_power = q` every factor of `f^m` becomes `b^q f^m`, which
    /// multiplies 𝔔 and all its partials by `b^q` without a rounding step.
    fn factors(&self, s: &Slots, sig: &Signature, weight_power: i32) -> Result<Factors> {
        let b = s.value;
        let e = self.exponent();
        match self.variable {
            Variable::Rho if !(b > 0.0) => {
                return Err(Error::Domain {
                    what: "density must be positive",
                    index: 0,
                    value: b,
                })
            }
            Variable::R if b == 0.0 => {
                return Err(Error::Domain {
                    what: "amplitude must be non-zero",
                    index: 0,
                    value: b,
                })
            }
            _ => {}
        }
        let x = sig.contract(&s.grad, &s.grad);
        let m = f64::from(self.m);
        let n = f64::from(self.n);
        let half_n = (self.n / 2) as i32;

        let (f_m, df_m) = match self.variable {
            Variable::Rho => {
                let em = e * m;
                let q = f64::from(weight_power);
                (b.powf(em + q), em * b.powf(em + q - 1.0))
            }
            Variable::R => {
                let mq = self.m + weight_power;
                (b.powi(mq), m * b.powi(mq - 1))
            }
        };

        let pre = e.powi(self.n as i32) * b.powf((e - 1.0) * n);
        let g = pre * x.powi(half_n);
        let dg_db = if self.n == 0 { 0.0 } else { g * (e - 1.0) * n / b };
        let dg_dx = if self.n == 0 {
            0.0
        } else {
            pre * f64::from(half_n) * x.powi(half_n - 1)
        };

        let bw1 = b.powf(e - 1.0);
        let bw2 = b.powf(e - 2.0);
        let bw3 = b.powf(e - 3.0);
        let h = e * bw1 * s.wave + e * (e - 1.0) * bw2 * x;
        let dh_db = e * (e - 1.0) * bw2 * s.wave + e * (e - 1.0) * (e - 2.0) * bw3 * x;
        let dh_dx = e * (e - 1.0) * bw2;
        let dh_dwave = e * bw1;
        Ok(Factors {
            f_m,
            df_m,
            g,
            dg_db,
            dg_dx,
            h,
            dh_db,
            dh_dx,
            dh_dwave,
        })
    }

    fn wave_power(&self, h: f64) -> Result<(f64, f64)> {
        if self.p < 0 && h.abs() < f64::MIN_POSITIVE.sqrt() {
            return Err(Error::Domain {
                what: "negative power of a vanishing wave operator",
                index: 0,
                value: h,
            });
        }
        let hp = h.powi(self.p);
        let dhp = if self.p == 0 {
            0.0
        } else {
            f64::from(self.p) * h.powi(self.p - 1)
        };
        Ok((hp, dhp))
    }

    /// Value of 𝔔 from pointwise slots.
    pub fn value_at(&self, s: &Slots, sig: &Signature) -> Result<f64> {
        let fa = self.factors(s, sig, 0)?;
        let (hp, _) = self.wave_power(fa.h)?;
        Ok(self.coupling * fa.f_m * fa.g * hp)
    }

    /// Closed-form partial derivatives with respect to the three slots.
    pub fn partials(&self, s: &Slots, sig: &Signature) -> Result<Partials> {
        self.weighted_partials(s, sig, 0)
    }

    /// Partials multiplied by `b^weight_power`.
    pub(crate) fn weighted_partials(&self, s: &Slots, sig: &Signature, weight_power: i32) -> Result<Partials> {
        let fa = self.factors(s, sig, weight_power)?;
        let (hp, dhp) = self.wave_power(fa.h)?;
        let c = self.coupling;
        let d_value = c * (fa.df_m * fa.g * hp + fa.f_m * fa.dg_db * hp + fa.f_m * fa.g * dhp * fa.dh_db);
        let d_x = c * (fa.f_m * fa.dg_dx * hp + fa.f_m * fa.g * dhp * fa.dh_dx);
        let mut d_grad = [0.0; 4];
        for (mu, d) in d_grad.iter_mut().enumerate() {
            *d = 2.0 * d_x * sig.0[mu] * s.grad[mu];
        }
        let d_wave = c * fa.f_m * fa.g * dhp * fa.dh_dwave;
        Ok(Partials {
            d_value,
            d_grad,
            d_wave,
        })
    }
}

/// Finite-difference slot fields of a base field: gradient components and `□b`.
pub(crate) struct SlotFields {
    pub grad: Vec<ScalarField>,
    pub wave: ScalarField,
}

impl SlotFields {
    pub fn of(base: &ScalarField) -> Result<Self> {
        let grad = (0..base.spec().rank())
            .map(|axis| base.partial(axis))
            .collect::<Result<Vec<_>>>()?;
        Ok(SlotFields {
            grad,
            wave: base.dalembertian()?,
        })
    }

    pub fn at(&self, base: &ScalarField, i: usize) -> Slots {
        let mut grad = [0.0; 4];
        for (g, field) in grad.iter_mut().zip(&self.grad) {
            *g = field.values()[i];
        }
        Slots {
            value: base.values()[i],
            grad,
            wave: self.wave.values()[i],
        }
    }
}

fn with_index(e: Error, index: usize) -> Error {
    match e {
        Error::Domain { what, value, .. } => Error::Domain { what, index, value },
        other => other,
    }
}

/// Samples 𝔔 on the grid, differentiating `f` itself with the grid stencils.
pub fn evaluate(family: &ExponentFamily, base: &ScalarField) -> Result<ScalarField> {
    let f = match family.variable {
        Variable::Rho => base.power(family.r)?,
        Variable::R => base.clone(),
    };
    let wave = f.dalembertian()?;
    let grad_sq = f.gradient_square()?;
    if family.p < 0 {
        let scale = wave.linf_norm();
        if let Some((index, &value)) = wave
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| v.abs() <= 1e-12 * scale || **v == 0.0)
        {
            return Err(Error::Domain {
                what: "negative power of a vanishing wave operator",
                index,
                value,
            });
        }
    }
    let f_m = f.power(f64::from(family.m))?;
    let half_n = (family.n / 2) as i32;
    let values = (0..base.len())
        .map(|i| {
            family.coupling
                * f_m.values()[i]
                * grad_sq.values()[i].powi(half_n)
                * wave.values()[i].powi(family.p)
        })
        .collect();
    base.with_values(values)
}

/// `C (r(r−1) ∂_μρ∂^μρ / ρ² + r □ρ/ρ)`, the expanded `(−1, 0, 1)` family.
pub fn expanded_evaluate(family: &ExponentFamily, rho: &ScalarField) -> Result<ScalarField> {
    if !family.is_simplest_shape() || family.variable != Variable::Rho {
        return Err(Error::InvalidFamily(format!(
            "expanded form exists only for m=-1, n=0, p=1 in ρ, got {family}"
        )));
    }
    rho.require_positive("density must be positive")?;
    let r = family.r;
    let grad_sq = rho.gradient_square()?;
    let wave = rho.dalembertian()?;
    let values = (0..rho.len())
        .map(|i| {
            let p = rho.values()[i];
            family.coupling * (r * (r - 1.0) * grad_sq.values()[i] / (p * p) + r * wave.values()[i] / p)
        })
        .collect();
    rho.with_values(values)
}

/// Relative change of 𝔔 under `ρ → γρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleDefect {
    pub defect: f64,
    /// Set when 𝔔 vanishes identically and `defect` is an absolute difference.
    pub absolute: bool,
}

/// `‖𝔔[γρ] − 𝔔[ρ]‖∞ / ‖𝔔[ρ]‖∞`; analytically `|γ^{r(m+n+p)} − 1|`.
pub fn scale_defect(family: &ExponentFamily, base: &ScalarField, gamma: f64) -> Result<ScaleDefect> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("γ must be positive, got {gamma}")));
    }
    let q = evaluate(family, base)?;
    let q_scaled = evaluate(family, &base.scale(gamma)?)?;
    let diff = q_scaled.sub(&q)?.linf_norm();
    let denom = q.linf_norm();
    if denom == 0.0 {
        return Ok(ScaleDefect {
            defect: diff,
            absolute: true,
        });
    }
    Ok(ScaleDefect {
        defect: diff / denom,
        absolute: false,
    })
}

/// Pointwise partials times `b^weight_power` at every node, with slots
/// taken from grid stencils.
pub(crate) fn partial_fields(
    family: &ExponentFamily,
    base: &ScalarField,
    weight_power: i32,
) -> Result<(SlotFields, Vec<Partials>)> {
    let slots = SlotFields::of(base)?;
    let sig = Signature::for_grid(base.spec());
    let partials = (0..base.len())
        .map(|i| {
            family
                .weighted_partials(&slots.at(base, i), &sig, weight_power)
                .map_err(|e| with_index(e, i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((slots, partials))
}
