//! The four standard constructions producing reducible Dupin hypersurfaces of
//! `R^4` from a Dupin surface in `R^3`: cylinder, surface of revolution,
//! cone over the stereographic image, and tube of constant radius.

use std::sync::Arc;

use nalgebra::DVector;

use crate::curvature::shape_operator;
use crate::error::{LieError, Result};
use crate::legendre::{ImmersionOracle, MapFn};
use crate::spheres::stereographic;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Which standard construction to apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PinkallKind {
    /// `S × R ⊂ E^4`.
    Cylinder,
    /// Revolve about the plane `{x_3 = offset}` (which must not meet `S`).
    Revolution { offset: f64 },
    /// Cone over the stereographic image of `S` in `S^3`.
    Cone,
    /// Tube of constant `radius` around `S ⊂ E^3 ⊂ E^4`.
    Tube { radius: f64 },
}

fn sample_grid(surface: &ImmersionOracle, per_axis: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![]];
    for (lo, hi) in surface.domain() {
        let mut next = Vec::new();
        for p in &points {
            for i in 0..per_axis {
                let t = (i as f64 + 0.5) / per_axis as f64;
                let mut q = p.clone();
                q.push(lo + t * (hi - lo));
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Generalized cross product in `R^4`: the vector orthogonal to `a, b, c`
/// with deterministic orientation.
fn cross4(a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    let minor = |i: usize, j: usize, k: usize| -> f64 {
        a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i])
            + a[k] * (b[i] * c[j] - b[j] * c[i])
    };
    DVector::from_vec(vec![
        minor(1, 2, 3),
        -minor(0, 2, 3),
        minor(0, 1, 3),
        -minor(0, 1, 2),
    ])
}

/// Applies a standard construction to a Dupin surface oracle in `R^3` (with
/// unit normal), producing a hypersurface oracle in `R^4` with unit normal.
pub fn pinkall_construction(
    kind: PinkallKind,
    surface: &ImmersionOracle,
) -> Result<ImmersionOracle> {
    if !surface.has_normal() {
        return Err(LieError::InvalidConstruction(
            "base surface needs a unit normal oracle".into(),
        ));
    }
    let probe = surface.eval(&surface.center())?;
    if probe.len() != 3 || surface.param_dim() != 2 {
        return Err(LieError::InvalidConstruction(
            "base surface must map two parameters into R^3".into(),
        ));
    }

    let f = surface.clone();
    match kind {
        PinkallKind::Cylinder => {
            let fe = f.clone();
            let eval: MapFn = Arc::new(move |b: &[f64]| {
                let x = fe.eval(&b[..2])?;
                Ok(DVector::from_vec(vec![x[0], x[1], x[2], b[2]]))
            });
            let fn_ = f.clone();
            let normal: MapFn = Arc::new(move |b: &[f64]| {
                let (xi, _) = fn_.normal_at(&b[..2])?;
                Ok(DVector::from_vec(vec![xi[0], xi[1], xi[2], 0.0]))
            });
            let mut domain = surface.domain().to_vec();
            domain.push((-1.0, 1.0));
            let mut periodic = surface.periodic_axes().to_vec();
            periodic.push(false);
            Ok(ImmersionOracle::new(eval, domain)
                .with_fd_step(surface.fd_step())
                .with_normal(normal)
                .with_periodic(periodic))
        }
        PinkallKind::Revolution { offset } => {
            for p in sample_grid(surface, 6) {
                let x = surface.eval(&p)?;
                if x[2] - offset <= 0.05 {
                    return Err(LieError::InvalidConstruction(format!(
                        "revolution plane x3 = {offset} is not disjoint from (below) the surface"
                    )));
                }
            }
            let fe = f.clone();
            let eval: MapFn = Arc::new(move |b: &[f64]| {
                let x = fe.eval(&b[..2])?;
                let z = x[2] - offset;
                Ok(DVector::from_vec(vec![
                    x[0],
                    x[1],
                    z * b[2].cos(),
                    z * b[2].sin(),
                ]))
            });
            let fn_ = f.clone();
            let normal: MapFn = Arc::new(move |b: &[f64]| {
                let (xi, _) = fn_.normal_at(&b[..2])?;
                Ok(DVector::from_vec(vec![
                    xi[0],
                    xi[1],
                    xi[2] * b[2].cos(),
                    xi[2] * b[2].sin(),
                ]))
            });
            let mut domain = surface.domain().to_vec();
            domain.push((0.0, TAU));
            let mut periodic = surface.periodic_axes().to_vec();
            periodic.push(true);
            Ok(ImmersionOracle::new(eval, domain)
                .with_fd_step(surface.fd_step())
                .with_normal(normal)
                .with_periodic(periodic))
        }
        PinkallKind::Cone => {
            let fe = f.clone();
            let project = move |p: &[f64]| -> Result<DVector<f64>> {
                let x = fe.eval(p)?;
                Ok(stereographic(&x))
            };
            let pe = project.clone();
            let eval: MapFn = Arc::new(move |b: &[f64]| Ok(pe(&b[..2])? * b[2]));
            // Unit normal of the image N ⊂ S^3, constant along rulings.
            let h = surface.fd_step();
            let normal: MapFn = Arc::new(move |b: &[f64]| {
                let n = project(&b[..2])?;
                let jac = crate::diff::fd_jacobian(&project, &b[..2], h)?;
                let eta = cross4(&n, &jac.column(0).into_owned(), &jac.column(1).into_owned());
                let norm = eta.norm();
                if norm < 1e-12 {
                    return Err(LieError::NotAnImmersion { smallest_sv: norm });
                }
                Ok(eta / norm)
            });
            let mut domain = surface.domain().to_vec();
            domain.push((0.6, 1.8));
            let mut periodic = surface.periodic_axes().to_vec();
            periodic.push(false);
            Ok(ImmersionOracle::new(eval, domain)
                .with_fd_step(surface.fd_step())
                .with_normal(normal)
                .with_periodic(periodic))
        }
        PinkallKind::Tube { radius } => {
            if radius <= 0.0 {
                return Err(LieError::InvalidConstruction(
                    "tube radius must be positive".into(),
                ));
            }
            // The tube is embedded only below the focal distance of S.
            let mut kappa_max = 0.0_f64;
            for p in sample_grid(surface, 6) {
                let (vals, _) = shape_operator(surface, &p)?.principal_curvatures()?;
                for v in vals {
                    kappa_max = kappa_max.max(v.abs());
                }
            }
            if radius * kappa_max >= 0.99 {
                return Err(LieError::InvalidConstruction(format!(
                    "tube radius {radius} exceeds the focal distance {:.4}",
                    1.0 / kappa_max
                )));
            }
            let fe = f.clone();
            let eval: MapFn = Arc::new(move |b: &[f64]| {
                let x = fe.eval(&b[..2])?;
                let (xi, _) = fe.normal_at(&b[..2])?;
                let c = b[2].cos();
                Ok(DVector::from_vec(vec![
                    x[0] + radius * c * xi[0],
                    x[1] + radius * c * xi[1],
                    x[2] + radius * c * xi[2],
                    radius * b[2].sin(),
                ]))
            });
            let fn_ = f.clone();
            let normal: MapFn = Arc::new(move |b: &[f64]| {
                let (xi, _) = fn_.normal_at(&b[..2])?;
                let c = b[2].cos();
                Ok(DVector::from_vec(vec![
                    c * xi[0],
                    c * xi[1],
                    c * xi[2],
                    b[2].sin(),
                ]))
            });
            let mut domain = surface.domain().to_vec();
            domain.push((0.0, TAU));
            let mut periodic = surface.periodic_axes().to_vec();
            periodic.push(true);
            Ok(ImmersionOracle::new(eval, domain)
                .with_fd_step(surface.fd_step())
                .with_normal(normal)
                .with_periodic(periodic))
        }
    }
}

/// A generic test patch of the torus-based constructions that stays clear of
/// the curvature degeneracies (`cos v = 0` collides with the flat direction
/// of the cylinder and cone).
pub fn generic_patch(kind: PinkallKind) -> Vec<(f64, f64)> {
    let base = vec![(0.3, 1.1), (0.25, 0.95)];
    let third = match kind {
        PinkallKind::Cylinder => (-0.7, 0.7),
        PinkallKind::Revolution { .. } => (0.4, 1.8),
        PinkallKind::Cone => (0.8, 1.5),
        PinkallKind::Tube { .. } => (0.5, 2.0),
    };
    let mut d = base;
    d.push(third);
    d
}
