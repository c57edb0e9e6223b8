//! `kind,key=value,...` strings for the catalog, e.g.
//! `gaussian,sigma=1.0,center=0` or `kind=random,seed=3`.
//! Vector values separate components with `:` (`k=0.2:0.1`).

use std::str::FromStr;

use super::{FieldKind, DEFAULT_MODES, DEFAULT_OFFSET, DEFAULT_SEED};
use crate::error::{Error, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn number(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| bad(format!("'{key}' expects a number, got '{v}'")))
}

fn vector(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(':').map(|c| number(key, c)).collect()
}

impl FieldKind {
    /// Parses a catalog string, using `default_seed` for random fields that
    /// do not name a seed.
    pub fn parse_with_seed(s: &str, default_seed: u64) -> Result<Self> {
        let mut parts = s.split(',').map(str::trim).filter(|p| !p.is_empty());
        let head = parts.next().ok_or_else(|| bad("empty field spec"))?;
        let name = head.strip_prefix("kind=").unwrap_or(head);
        let mut pairs = Vec::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got '{p}'")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let unknown = |k: &str| bad(format!("unknown parameter '{k}' for '{name}'"));

        match name {
            "constant" => {
                let mut c = None;
                for (k, v) in pairs {
                    match k {
                        "c" | "value" => c = Some(number(k, v)?),
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(FieldKind::Constant {
                    c: c.ok_or_else(|| bad("constant needs c=<value>"))?,
                })
            }
            "gaussian" => {
                let mut sigma = 1.0;
                let mut center = Vec::new();
                for (k, v) in pairs {
                    match k {
                        "sigma" => sigma = number(k, v)?,
                        "center" => center = vector(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(FieldKind::Gaussian { sigma, center })
            }
            "exponential" | "exp" => {
                let mut k_vec = None;
                for (k, v) in pairs {
                    match k {
                        "k" => k_vec = Some(vector(k, v)?),
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(FieldKind::Exponential {
                    k: k_vec.ok_or_else(|| bad("exponential needs k=<value>"))?,
                })
            }
            "plane" | "plane_phase" => {
                let mut energy = None;
                let mut momentum = Vec::new();
                for (k, v) in pairs {
                    match k {
                        "E" | "energy" => energy = Some(number(k, v)?),
                        "p" | "momentum" => momentum = vector(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(FieldKind::PlanePhase {
                    energy: energy.ok_or_else(|| bad("plane_phase needs E=<value>"))?,
                    momentum,
                })
            }
            "random" | "random_periodic" => {
                let mut seed = default_seed;
                let mut n_modes = DEFAULT_MODES;
                let mut offset = DEFAULT_OFFSET;
                for (k, v) in pairs {
                    match k {
                        "seed" => seed = v.parse().map_err(|_| bad(format!("bad seed '{v}'")))?,
                        "modes" | "n_modes" => {
                            n_modes = v.parse().map_err(|_| bad(format!("bad mode count '{v}'")))?
                        }
                        "offset" => offset = number(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                Ok(FieldKind::RandomPeriodic { seed, n_modes, offset })
            }
            other => Err(bad(format!("unknown field kind '{other}'"))),
        }
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FieldKind::parse_with_seed(s, DEFAULT_SEED)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_catalog_strings() {
        assert_eq!(
            "kind=gaussian,sigma=1.0,center=0".parse::<FieldKind>().unwrap(),
            FieldKind::Gaussian {
                sigma: 1.0,
                center: vec![0.0]
            }
        );
        assert_eq!("constant,c=2".parse::<FieldKind>().unwrap(), FieldKind::Constant { c: 2.0 });
        assert_eq!(
            "exponential,k=0.2:0.1".parse::<FieldKind>().unwrap(),
            FieldKind::Exponential { k: vec![0.2, 0.1] }
        );
        assert_eq!(
            "plane,E=1.25,p=0.75".parse::<FieldKind>().unwrap(),
            FieldKind::PlanePhase {
                energy: 1.25,
                momentum: vec![0.75]
            }
        );
        assert_eq!(
            FieldKind::parse_with_seed("random", 7).unwrap(),
            FieldKind::RandomPeriodic {
                seed: 7,
                n_modes: DEFAULT_MODES,
                offset: DEFAULT_OFFSET
            }
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!("".parse::<FieldKind>().is_err());
        assert!("wobble".parse::<FieldKind>().is_err());
        assert!("gaussian,sigma".parse::<FieldKind>().is_err());
        assert!("gaussian,width=2".parse::<FieldKind>().is_err());
        assert!("constant".parse::<FieldKind>().is_err());
    }
}
