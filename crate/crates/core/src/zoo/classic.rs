//! Classical test surfaces in `R^3`: the torus of revolution (the canonical
//! Dupin example) and ellipsoids (negative controls).

use nalgebra::DVector;

use crate::error::{LieError, Result};
use crate::legendre::{map_fn, ImmersionOracle};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Torus of revolution `((a + b cos v) cos u, (a + b cos v) sin u, b sin v)`
/// with the inward tube normal; proper Dupin with g = 2 everywhere.
pub fn torus(a: f64, b: f64) -> Result<ImmersionOracle> {
    if !(a > b && b > 0.0) {
        return Err(LieError::InvalidConstruction(format!(
            "torus requires a > b > 0, got a = {a}, b = {b} (self-intersecting spec)"
        )));
    }
    let eval = map_fn(move |p: &[f64]| {
        let (u, v) = (p[0], p[1]);
        DVector::from_vec(vec![
            (a + b * v.cos()) * u.cos(),
            (a + b * v.cos()) * u.sin(),
            b * v.sin(),
        ])
    });
    let normal = map_fn(|p: &[f64]| {
        let (u, v) = (p[0], p[1]);
        DVector::from_vec(vec![-v.cos() * u.cos(), -v.cos() * u.sin(), -v.sin()])
    });
    Ok(ImmersionOracle::new(eval, vec![(0.0, TAU), (0.0, TAU)])
        .with_normal(normal)
        .with_periodic(vec![true, true]))
}

/// Analytic principal curvatures of [`torus`] at `(u, v)`, ascending:
/// `{cos v / (a + b cos v), 1/b}` with the inward normal convention.
pub fn torus_curvature_oracle(a: f64, b: f64, v: f64) -> [f64; 2] {
    let mut ks = [v.cos() / (a + b * v.cos()), 1.0 / b];
    ks.sort_by(f64::total_cmp);
    ks
}

/// Ellipsoid `(a cos u sin v, b sin u sin v, c cos v)` with the outward
/// analytic normal. Not Dupin for distinct semi-axes.
pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<ImmersionOracle> {
    if a <= 0.0 || b <= 0.0 || c <= 0.0 {
        return Err(LieError::InvalidConstruction(
            "ellipsoid semi-axes must be positive".into(),
        ));
    }
    let eval = map_fn(move |p: &[f64]| {
        let (u, v) = (p[0], p[1]);
        DVector::from_vec(vec![
            a * u.cos() * v.sin(),
            b * u.sin() * v.sin(),
            c * v.cos(),
        ])
    });
    let normal = map_fn(move |p: &[f64]| {
        let (u, v) = (p[0], p[1]);
        DVector::from_vec(vec![
            u.cos() * v.sin() / a,
            u.sin() * v.sin() / b,
            v.cos() / c,
        ])
    });
    // Interior v-range keeps clear of the polar chart degeneracy.
    Ok(
        ImmersionOracle::new(eval, vec![(0.0, TAU), (0.35, std::f64::consts::PI - 0.35)])
            .with_normal(normal)
            .with_periodic(vec![true, false]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{curvature_spheres, shape_operator, DEFAULT_CLUSTER_TOL};
    use crate::legendre::lift_euclidean;
    use approx::assert_relative_eq;

    #[test]
    fn torus_rejects_self_intersecting_spec() {
        assert!(matches!(
            torus(1.0, 2.0),
            Err(LieError::InvalidConstruction(_))
        ));
    }

    #[test]
    fn torus_curvatures_match_oracle() {
        let oracle = torus(2.0, 1.0).unwrap();
        for p in [[0.5, 0.0], [2.5, 1.3], [4.0, 4.0]] {
            let (vals, _) = shape_operator(&oracle, &p)
                .unwrap()
                .principal_curvatures()
                .unwrap();
            let expected = torus_curvature_oracle(2.0, 1.0, p[1]);
            assert_relative_eq!(vals[0], expected[0], epsilon = 1e-8);
            assert_relative_eq!(vals[1], expected[1], epsilon = 1e-8);
        }
    }

    #[test]
    fn spheroid_has_g2_off_poles() {
        let oracle = ellipsoid(1.0, 1.0, 2.0).unwrap();
        let map = lift_euclidean(&oracle).unwrap();
        let spheres = curvature_spheres(&map, &[0.9, 1.1], DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(spheres.len(), 2);
    }

    #[test]
    fn round_sphere_is_umbilic() {
        let oracle = ellipsoid(1.0, 1.0, 1.0).unwrap();
        let map = lift_euclidean(&oracle).unwrap();
        let spheres = curvature_spheres(&map, &[0.9, 1.1], DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(spheres.len(), 1);
        assert_eq!(spheres[0].multiplicity, 2);
    }
}
