//! The Veronese surface in `R^5`/`S^4`, the rotational frame solution built
//! from it, and Cartan's isoparametric family of tubes over it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{LieError, Result};
use crate::legendre::{lift_spherical, ImmersionOracle, LegendreMap, MapFn};
use crate::lie::LieTransform;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Quadratic antipodal-even embedding of the unit 2-sphere into `R^5`:
/// `(2 y2 y3, 2 y3 y1, 2 y1 y2, y1², y2²)`.
pub fn veronese_affine(y: &Vector3<f64>) -> Result<DVector<f64>> {
    if (y.norm() - 1.0).abs() > 1e-9 {
        return Err(LieError::InvalidArgument(format!(
            "veronese_affine expects a unit vector, |y| = {}",
            y.norm()
        )));
    }
    Ok(DVector::from_vec(vec![
        2.0 * y[1] * y[2],
        2.0 * y[2] * y[0],
        2.0 * y[0] * y[1],
        y[0] * y[0],
        y[1] * y[1],
    ]))
}

/// Spherical Veronese embedding: the affine change of the quadratic map that
/// lands on the unit `S^4`,
/// `(√3 y2 y3, √3 y3 y1, √3 y1 y2, (√3/2)(y1² - y2²), (1/2)(y1² + y2² - 2 y3²))`.
pub fn veronese_spherical(y: &Vector3<f64>) -> DVector<f64> {
    let s3 = 3.0_f64.sqrt();
    DVector::from_vec(vec![
        s3 * y[1] * y[2],
        s3 * y[2] * y[0],
        s3 * y[0] * y[1],
        (s3 / 2.0) * (y[0] * y[0] - y[1] * y[1]),
        0.5 * (y[0] * y[0] + y[1] * y[1] - 2.0 * y[2] * y[2]),
    ])
}

/// Derivative of [`veronese_spherical`] with respect to `y` (5 × 3).
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn veronese_spherical_jacobian(y: &Vector3<f64>) -> DMatrix<f64> {
    let s3 = 3.0_f64.sqrt();
    DMatrix::from_row_slice(
        5,
        3,
        &[
            0.0,
            s3 * y[2],
            s3 * y[1],
            s3 * y[2],
            0.0,
            s3 * y[0],
            s3 * y[1],
            s3 * y[0],
            0.0,
            s3 * y[0],
            -s3 * y[1],
            0.0,
            y[0],
            y[1],
            -2.0 * y[2],
        ],
    )
}

/// The three Veronese surfaces attached to the rows of a rotation matrix,
/// together with the symmetric quantities `G_ik`.
#[derive(Debug, Clone)]
pub struct VeroneseFrame {
    pub a: Matrix3<f64>,
    /// `F_i` evaluated on row `i` of `a`.
    pub f: [DVector<f64>; 3],
    /// `(G_12, G_23, G_31)`.
    pub g: [DVector<f64>; 3],
}

/// The explicit solution frame assembled from a [`VeroneseFrame`].
#[derive(Debug, Clone)]
pub struct FrameSolution {
    pub y3: DVector<f64>,
    pub y4: DVector<f64>,
    pub y5: DVector<f64>,
    pub z3: DVector<f64>,
    pub z4: DVector<f64>,
    pub z5: DVector<f64>,
}

/// Builds the rotational frame solution: `F_i` from the rows of `a`,
/// `G_ik = Σ_j a_ij ∂F_k/∂a_kj`, and the assignments
/// `Y_3 = G_12, Y_4 = -G_23, Y_5 = G_31`,
/// `Z_3 = 2(F_2 - F_1), Z_4 = 2(F_3 - F_2), Z_5 = 2(F_1 - F_3)`.
pub fn f_frames(a: &Matrix3<f64>) -> Result<(VeroneseFrame, FrameSolution)> {
    let gram = a.transpose() * a;
    if (gram - Matrix3::identity()).norm() > 1e-10 {
        return Err(LieError::InvalidArgument(
            "frame matrix must be orthogonal to 1e-10".into(),
        ));
    }
    if a.determinant() <= 0.0 {
        return Err(LieError::InvalidArgument(
            "frame matrix must have determinant +1".into(),
        ));
    }
    let row = |i: usize| Vector3::new(a[(i, 0)], a[(i, 1)], a[(i, 2)]);
    let f_of = |i: usize| -> DVector<f64> {
        let y = row(i);
        DVector::from_vec(vec![
            2.0 * y[1] * y[2],
            2.0 * y[2] * y[0],
            2.0 * y[0] * y[1],
            y[0] * y[0],
            y[1] * y[1],
        ])
    };
    let g_of = |i: usize, k: usize| -> DVector<f64> {
        let (yi, yk) = (row(i), row(k));
        DVector::from_vec(vec![
            2.0 * (yi[1] * yk[2] + yi[2] * yk[1]),
            2.0 * (yi[0] * yk[2] + yi[2] * yk[0]),
            2.0 * (yi[0] * yk[1] + yi[1] * yk[0]),
            2.0 * yi[0] * yk[0],
            2.0 * yi[1] * yk[1],
        ])
    };
    let f = [f_of(0), f_of(1), f_of(2)];
    let g12 = g_of(0, 1);
    let g23 = g_of(1, 2);
    let g31 = g_of(2, 0);
    let solution = FrameSolution {
        y3: g12.clone(),
        y4: -&g23,
        y5: g31.clone(),
        z3: (&f[1] - &f[0]) * 2.0,
        z4: (&f[2] - &f[1]) * 2.0,
        z5: (&f[0] - &f[2]) * 2.0,
    };
    Ok((
        VeroneseFrame {
            a: *a,
            f,
            g: [g12, g23, g31],
        },
        solution,
    ))
}

/// Rodrigues rotation `exp([ω]_×)`.
pub fn so3_exp(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta = omega.norm();
    let k = Matrix3::new(
        0.0, -omega[2], omega[1], omega[2], 0.0, -omega[0], -omega[1], omega[0], 0.0,
    );
    if theta < 1e-12 {
        return Matrix3::identity() + k;
    }
    let (s, c) = (theta.sin(), theta.cos());
    Matrix3::identity() + k * (s / theta) + k * k * ((1.0 - c) / (theta * theta))
}

/// Spherical parallel transformation: the Lie rotation of the
/// `(e_1, e_{n+3})` timelike plane subtracting `t` from every signed
/// spherical radius. It carries the Legendre lift of a hypersurface of `S^n`
/// to the lift of its parallel hypersurface at distance `t`.
pub fn parallel_transform(t: f64, chart_dim: usize) -> LieTransform {
    let d = chart_dim + 3;
    let mut m = DMatrix::identity(d, d);
    m[(0, 0)] = t.cos();
    m[(0, d - 1)] = t.sin();
    m[(d - 1, 0)] = -t.sin();
    m[(d - 1, d - 1)] = t.cos();
    LieTransform::from_matrix(m, 1e-12).expect("rotation of a timelike plane")
}

/// Cartan's family: the tube of oriented distance `t` over the spherical
/// Veronese surface in `S^4`. Away from `t ∈ (π/3) Z` the member is an
/// isoparametric hypersurface with three principal curvatures; at the
/// degenerate values the map collapses onto a focal Veronese surface and is
/// returned flagged, without a Legendre lift.
pub struct CartanFamily {
    /// Tube point map over `(chart of S^2) × S^1`, with unit normal when not
    /// degenerate.
    pub surface: ImmersionOracle,
    /// Legendre lift of the tube (absent at degenerate `t`).
    pub map: Option<LegendreMap>,
    pub t: f64,
    pub degenerate: bool,
}

/// Chart for the Veronese base: interior polar/azimuth box of `S^2`.
fn base_point(b: &[f64]) -> Vector3<f64> {
    let (a, c) = (b[0], b[1]);
    Vector3::new(a.sin() * c.cos(), a.sin() * c.sin(), a.cos())
}

#[cfg_attr(not(test), allow(dead_code))]
fn base_jacobian(b: &[f64]) -> DMatrix<f64> {
    let (a, c) = (b[0], b[1]);
    DMatrix::from_row_slice(
        3,
        2,
        &[
            a.cos() * c.cos(),
            -a.sin() * c.sin(),
            a.cos() * c.sin(),
            a.sin() * c.cos(),
            -a.sin(),
            0.0,
        ],
    )
}

/// Smooth orthonormal completion `{y, z, w}` of a base point: `z` is the
/// third axis projected off `y`, `w = y × z`. Smooth as long as the chart
/// stays away from `y = ±e_3`, which the domain below guarantees.
fn base_completion(y: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let e3 = Vector3::new(0.0, 0.0, 1.0);
    let z = (e3 - y * y[2]).normalize();
    let w = y.cross(&z);
    (z, w)
}

/// Analytic orthonormal frame of the normal plane of the Veronese surface in
/// `S^4`. In the traceless-symmetric-matrix model the normal space at
/// `y y^T - I/3` is spanned by `z z^T - w w^T` and `z w^T + w z^T`; the
/// formulas below are those matrices carried through the coordinate
/// identification and normalized.
fn normal_frame(b: &[f64]) -> (DVector<f64>, DVector<f64>) {
    let y = base_point(b);
    let (z, w) = base_completion(&y);
    let s3 = 3.0_f64.sqrt();
    let n1 = DVector::from_vec(vec![
        z[1] * z[2] - w[1] * w[2],
        z[0] * z[2] - w[0] * w[2],
        z[0] * z[1] - w[0] * w[1],
        0.5 * (z[0] * z[0] - z[1] * z[1] - w[0] * w[0] + w[1] * w[1]),
        (z[0] * z[0] + z[1] * z[1] - 2.0 * z[2] * z[2] - w[0] * w[0] - w[1] * w[1]
            + 2.0 * w[2] * w[2])
            / (2.0 * s3),
    ]);
    let n2 = DVector::from_vec(vec![
        z[1] * w[2] + z[2] * w[1],
        z[0] * w[2] + z[2] * w[0],
        z[0] * w[1] + z[1] * w[0],
        z[0] * w[0] - z[1] * w[1],
        (z[0] * w[0] + z[1] * w[1] - 2.0 * z[2] * w[2]) / s3,
    ]);
    (n1, n2)
}

/// Builds the Cartan family member at oriented distance `t`.
pub fn cartan_hypersurface(t: f64) -> Result<CartanFamily> {
    let domain = vec![(0.5, 2.6), (0.3, 5.9), (0.0, TAU)];

    let frac = (t / (std::f64::consts::PI / 3.0)).round();
    let degenerate = (t - frac * std::f64::consts::PI / 3.0).abs() < 1e-9;

    let eval: MapFn = Arc::new(move |b: &[f64]| {
        let y = base_point(&b[..2]);
        let v = veronese_spherical(&y);
        let (n1, n2) = normal_frame(&b[..2]);
        let nu = n1 * b[2].cos() + n2 * b[2].sin();
        Ok(v * t.cos() + nu * t.sin())
    });
    let normal: MapFn = Arc::new(move |b: &[f64]| {
        let y = base_point(&b[..2]);
        let v = veronese_spherical(&y);
        let (n1, n2) = normal_frame(&b[..2]);
        let nu = n1 * b[2].cos() + n2 * b[2].sin();
        Ok(v * (-t.sin()) + nu * t.cos())
    });

    let surface = ImmersionOracle::new(eval, domain)
        .with_fd_step(1e-4)
        .with_normal(normal)
        .with_periodic(vec![false, false, true]);
    if degenerate {
        return Ok(CartanFamily {
            surface,
            map: None,
            t,
            degenerate: true,
        });
    }
    let mut map = lift_spherical(&surface)?;
    map = map.with_periodicity(vec![false, false, true]);
    Ok(CartanFamily {
        surface,
        map: Some(map),
        t,
        degenerate: false,
    })
}

/// The unit-normal-bundle oracles of the spherical Veronese surface, for
/// [`crate::legendre::lift_normal_bundle_s4`].
pub fn veronese_normal_bundle() -> (ImmersionOracle, ImmersionOracle, ImmersionOracle) {
    let domain = vec![(0.5, 2.6), (0.3, 5.9)];
    let phi: MapFn = Arc::new(move |b: &[f64]| Ok(veronese_spherical(&base_point(b))));
    let nu1: MapFn = Arc::new(move |b: &[f64]| Ok(normal_frame(b).0));
    let nu2: MapFn = Arc::new(move |b: &[f64]| Ok(normal_frame(b).1));
    (
        ImmersionOracle::new(phi, domain.clone()).with_fd_step(1e-4),
        ImmersionOracle::new(nu1, domain.clone()).with_fd_step(1e-4),
        ImmersionOracle::new(nu2, domain).with_fd_step(1e-4),
    )
}
