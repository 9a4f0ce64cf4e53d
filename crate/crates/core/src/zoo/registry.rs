//! Named generator registry: string ids plus parameter maps, as consumed by
//! the command-line front end.

use std::collections::BTreeMap;

use crate::error::{LieError, Result};
use crate::legendre::{lift_euclidean, ImmersionOracle, LegendreMap};

use super::classic::{ellipsoid, torus};
use super::cyclide::{cyclide, CyclideSpec};
use super::pinkall::{generic_patch, pinkall_construction, PinkallKind};
use super::veronese::cartan_hypersurface;

/// A generator output: either a hypersurface oracle (codimension one, with
/// unit normal) or a ready-made Legendre map.
pub enum Generated {
    Surface {
        oracle: ImmersionOracle,
        name: String,
    },
    Legendre {
        map: LegendreMap,
        name: String,
    },
}

impl Generated {
    pub fn name(&self) -> &str {
        match self {
            Generated::Surface { name, .. } => name,
            Generated::Legendre { name, .. } => name,
        }
    }

    /// The Legendre map of the generated object, lifting surfaces on demand.
    pub fn legendre_map(&self) -> Result<LegendreMap> {
        match self {
            Generated::Surface { oracle, .. } => lift_euclidean(oracle),
            Generated::Legendre { map, .. } => Ok(map.clone()),
        }
    }

    pub fn surface_oracle(&self) -> Option<&ImmersionOracle> {
        match self {
            Generated::Surface { oracle, .. } => Some(oracle),
            Generated::Legendre { .. } => None,
        }
    }
}

/// Generator ids with their named parameters and defaults, in positional
/// order.
pub fn generator_ids() -> Vec<(&'static str, Vec<(&'static str, f64)>)> {
    vec![
        ("torus", vec![("a", 2.0), ("b", 1.0)]),
        ("ellipsoid", vec![("a", 1.0), ("b", 2.0), ("c", 3.0)]),
        ("cyclide", vec![("p", 1.0), ("q", 1.0), ("n", 3.0)]),
        ("cartan", vec![("t", std::f64::consts::FRAC_PI_6)]),
        ("pinkall-cylinder", vec![("a", 2.0), ("b", 1.0)]),
        (
            "pinkall-revolution",
            vec![("a", 2.0), ("b", 1.0), ("offset", -2.5)],
        ),
        ("pinkall-cone", vec![("a", 2.0), ("b", 1.0)]),
        ("pinkall-tube", vec![("a", 2.0), ("b", 1.0), ("r", 0.2)]),
    ]
}

fn get(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn get_usize(params: &BTreeMap<String, f64>, key: &str, default: usize) -> Result<usize> {
    let v = get(params, key, default as f64);
    if v < 0.5 || (v - v.round()).abs() > 1e-9 {
        return Err(LieError::InvalidArgument(format!(
            "parameter {key} must be a positive integer, got {v}"
        )));
    }
    Ok(v.round() as usize)
}

/// Builds a generator by id. Unknown keys in `params` are rejected.
pub fn build_generator(id: &str, params: &BTreeMap<String, f64>) -> Result<Generated> {
    let known = generator_ids();
    let spec = known
        .iter()
        .find(|(name, _)| *name == id)
        .ok_or_else(|| LieError::InvalidArgument(format!("unknown generator '{id}'")))?;
    for key in params.keys() {
        if !spec.1.iter().any(|(name, _)| name == key) {
            return Err(LieError::InvalidArgument(format!(
                "generator '{id}' has no parameter '{key}'"
            )));
        }
    }
    let name = if params.is_empty() {
        id.to_string()
    } else {
        let args: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{id}:{}", args.join(","))
    };
    match id {
        "torus" => Ok(Generated::Surface {
            oracle: torus(get(params, "a", 2.0), get(params, "b", 1.0))?,
            name,
        }),
        "ellipsoid" => Ok(Generated::Surface {
            oracle: ellipsoid(
                get(params, "a", 1.0),
                get(params, "b", 2.0),
                get(params, "c", 3.0),
            )?,
            name,
        }),
        "cyclide" => {
            let p = get_usize(params, "p", 1)?;
            let q = get_usize(params, "q", 1)?;
            if let Some(&n) = params.get("n") {
                if (n - (p + q + 1) as f64).abs() > 1e-9 {
                    return Err(LieError::InvalidArgument(format!(
                        "cyclide requires n = p + q + 1, got n = {n}"
                    )));
                }
            }
            Ok(Generated::Legendre {
                map: cyclide(CyclideSpec::new(p, q)?),
                name,
            })
        }
        "cartan" => {
            let fam = cartan_hypersurface(get(params, "t", std::f64::consts::FRAC_PI_6))?;
            let map = fam.map.ok_or_else(|| {
                LieError::InvalidArgument(
                    "cartan generator is degenerate at t = k*pi/3 (a Veronese surface)".into(),
                )
            })?;
            Ok(Generated::Legendre { map, name })
        }
        "pinkall-cylinder" | "pinkall-revolution" | "pinkall-cone" | "pinkall-tube" => {
            let base = torus(get(params, "a", 2.0), get(params, "b", 1.0))?;
            let kind = match id {
                "pinkall-cylinder" => PinkallKind::Cylinder,
                "pinkall-revolution" => PinkallKind::Revolution {
                    offset: get(params, "offset", -2.5),
                },
                "pinkall-cone" => PinkallKind::Cone,
                _ => PinkallKind::Tube {
                    radius: get(params, "r", 0.2),
                },
            };
            // Expose the generic patch: away from it the flat direction of
            // the base torus collides with the construction's extra
            // curvature and g drops.
            let oracle = pinkall_construction(kind, &base)?.restricted(generic_patch(kind))?;
            Ok(Generated::Surface { oracle, name })
        }
        _ => unreachable!("id validated above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_every_generator() {
        for (id, _) in generator_ids() {
            let built = build_generator(id, &BTreeMap::new()).unwrap();
            let map = built.legendre_map().unwrap();
            assert!(map.param_dim() >= 2);
        }
    }

    #[test]
    fn registry_rejects_unknown() {
        assert!(build_generator("klein-bottle", &BTreeMap::new()).is_err());
        let mut params = BTreeMap::new();
        params.insert("zz".to_string(), 1.0);
        assert!(build_generator("torus", &params).is_err());
    }
}
