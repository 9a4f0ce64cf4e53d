//! Translation between Euclidean sphere data and Lie quadric points, oriented
//! contact predicates, and the stereographic bridge `R^n ∪ {∞} = S^n`.
//!
//! Sign convention: a positive signed radius means the inward normal
//! orientation of the sphere. Under that convention a sphere `(p, r)` and a
//! plane `(N, h)` are in oriented contact exactly when `p · N = h + r`.

use nalgebra::DVector;

use crate::error::{LieError, Result};
use crate::lie::{lie_inner, on_quadric, quadric_residual, LieVector};

/// An oriented sphere in the generalized sense: point, point at infinity,
/// oriented sphere, or oriented plane of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum SphereElement {
    /// A point sphere `u`.
    Point(DVector<f64>),
    /// The point at infinity of `R^n ∪ {∞}`.
    Infinity { dim: usize },
    /// Oriented sphere with center `p` and signed radius `r != 0`.
    Sphere { center: DVector<f64>, radius: f64 },
    /// Oriented plane `{u : u · N = h}` with unit normal `N`.
    Plane { normal: DVector<f64>, offset: f64 },
}

impl SphereElement {
    pub fn point(u: impl Into<Vec<f64>>) -> Self {
        SphereElement::Point(DVector::from_vec(u.into()))
    }

    pub fn sphere(center: impl Into<Vec<f64>>, radius: f64) -> Self {
        SphereElement::Sphere {
            center: DVector::from_vec(center.into()),
            radius,
        }
    }

    pub fn plane(normal: impl Into<Vec<f64>>, offset: f64) -> Self {
        SphereElement::Plane {
            normal: DVector::from_vec(normal.into()),
            offset,
        }
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            SphereElement::Point(u) => u.len(),
            SphereElement::Infinity { dim } => *dim,
            SphereElement::Sphere { center, .. } => center.len(),
            SphereElement::Plane { normal, .. } => normal.len(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(LieError::DimensionMismatch {
                expected: n,
                found: self.dim(),
            });
        }
        match self {
            SphereElement::Sphere { radius, .. } => {
                if *radius == 0.0 {
                    return Err(LieError::InvalidArgument(
                        "sphere radius must be nonzero (use a point sphere)".into(),
                    ));
                }
            }
            SphereElement::Plane { normal, .. } if (normal.norm() - 1.0).abs() > 1e-12 => {
                return Err(LieError::InvalidArgument(format!(
                    "plane normal must be unit, |N| = {}",
                    normal.norm()
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Encodes an element as its homogeneous quadric representative:
///
/// ```text
/// point u:          ((1+u·u)/2, (1-u·u)/2, u, 0)
/// infinity:         (1, -1, 0, 0)
/// sphere (p, r):    ((1+p·p-r^2)/2, (1-p·p+r^2)/2, p, r)
/// plane (N, h):     (h, -h, N, 1)
/// ```
pub fn encode(e: &SphereElement, n: usize) -> Result<LieVector> {
    e.validate(n)?;
    let d = n + 3;
    let mut x = DVector::zeros(d);
    match e {
        SphereElement::Point(u) => {
            let uu = u.dot(u);
            x[0] = (1.0 + uu) / 2.0;
            x[1] = (1.0 - uu) / 2.0;
            x.rows_mut(2, n).copy_from(u);
        }
        SphereElement::Infinity { .. } => {
            x[0] = 1.0;
            x[1] = -1.0;
        }
        SphereElement::Sphere { center, radius } => {
            let pp = center.dot(center);
            x[0] = (1.0 + pp - radius * radius) / 2.0;
            x[1] = (1.0 - pp + radius * radius) / 2.0;
            x.rows_mut(2, n).copy_from(center);
            x[d - 1] = *radius;
        }
        SphereElement::Plane { normal, offset } => {
            x[0] = *offset;
            x[1] = -offset;
            x.rows_mut(2, n).copy_from(normal);
            x[d - 1] = 1.0;
        }
    }
    Ok(LieVector::from_dvector(x))
}

/// Inverse of [`encode`], splitting on the point-sphere and plane slices of
/// the quadric. Thresholds are relative to the representative's norm;
/// the point-sphere test is applied before the plane test.
pub fn decode(x: &LieVector, tol: f64) -> Result<SphereElement> {
    let resid = quadric_residual(x.coords());
    if resid > tol.max(1e-12) * 10.0 {
        return Err(LieError::NotASphere { residual: resid });
    }
    let d = x.dim();
    let n = d - 3;
    let scale = x.norm();
    let c = x.coords();
    let last = c[d - 1];
    let lightlike = c[0] + c[1];
    if last.abs() <= tol * scale {
        // Point sphere slice x_{n+3} = 0.
        if lightlike.abs() <= tol * scale {
            return Ok(SphereElement::Infinity { dim: n });
        }
        let u = c.rows(2, n) / lightlike;
        return Ok(SphereElement::Point(u.into_owned()));
    }
    if lightlike.abs() <= tol * scale {
        // Plane: normalize x_{n+3} = 1.
        let normal = (c.rows(2, n) / last).into_owned();
        let offset = c[0] / last;
        return Ok(SphereElement::Plane { normal, offset });
    }
    let center = (c.rows(2, n) / lightlike).into_owned();
    let radius = last / lightlike;
    Ok(SphereElement::Sphere { center, radius })
}

/// Oriented contact on the quadric: `<k1, k2> = 0` within `tol`, both points
/// required to lie on the quadric.
pub fn oriented_contact_lie(k1: &LieVector, k2: &LieVector, tol: f64) -> Result<bool> {
    if !on_quadric(k1, tol.max(1e-9) * 10.0)? || !on_quadric(k2, tol.max(1e-9) * 10.0)? {
        return Err(LieError::InvalidArgument(
            "contact predicate requires quadric points".into(),
        ));
    }
    let ip = lie_inner(k1, k2)?;
    Ok(ip.abs() <= tol * k1.norm() * k2.norm())
}

/// Oriented contact computed case by case in Euclidean terms; the independent
/// oracle for [`oriented_contact_lie`].
pub fn oriented_contact_euclidean(e1: &SphereElement, e2: &SphereElement) -> Result<bool> {
    if e1.dim() != e2.dim() {
        return Err(LieError::DimensionMismatch {
            expected: e1.dim(),
            found: e2.dim(),
        });
    }
    let tol = 1e-9;
    use SphereElement::*;
    let verdict = match (e1, e2) {
        (
            Sphere {
                center: p1,
                radius: r1,
            },
            Sphere {
                center: p2,
                radius: r2,
            },
        ) => ((p1 - p2).norm() - (r1 - r2).abs()).abs() <= tol * (1.0 + r1.abs() + r2.abs()),
        (Sphere { center, radius }, Plane { normal, offset })
        | (Plane { normal, offset }, Sphere { center, radius }) => {
            (center.dot(normal) - (offset + radius)).abs() <= tol * (1.0 + center.norm())
        }
        (
            Plane {
                normal: n1,
                offset: _,
            },
            Plane {
                normal: n2,
                offset: _,
            },
        ) => {
            // Oriented contact at infinity: equal unit normals.
            (n1 - n2).norm() <= tol
        }
        (Point(u), Sphere { center, radius }) | (Sphere { center, radius }, Point(u)) => {
            ((u - center).norm() - radius.abs()).abs() <= tol * (1.0 + radius.abs())
        }
        (Point(u), Plane { normal, offset }) | (Plane { normal, offset }, Point(u)) => {
            (u.dot(normal) - offset).abs() <= tol * (1.0 + u.norm())
        }
        (Point(u1), Point(u2)) => (u1 - u2).norm() <= tol,
        (Infinity { .. }, Plane { .. }) | (Plane { .. }, Infinity { .. }) => true,
        (Infinity { .. }, Infinity { .. }) => true,
        (Infinity { .. }, _) | (_, Infinity { .. }) => false,
    };
    Ok(verdict)
}

/// A point or oriented sphere of the unit sphere `S^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum SphericalElement {
    /// A point `x ∈ S^n`.
    Point(DVector<f64>),
    /// Oriented sphere with center `m ∈ S^n` and signed radius `ρ ∈ (-π, π)`.
    Sphere { center: DVector<f64>, radius: f64 },
}

impl SphericalElement {
    pub fn point(x: impl Into<Vec<f64>>) -> Self {
        SphericalElement::Point(DVector::from_vec(x.into()))
    }

    pub fn sphere(center: impl Into<Vec<f64>>, radius: f64) -> Self {
        SphericalElement::Sphere {
            center: DVector::from_vec(center.into()),
            radius,
        }
    }

    fn center(&self) -> &DVector<f64> {
        match self {
            SphericalElement::Point(x) => x,
            SphericalElement::Sphere { center, .. } => center,
        }
    }

    fn radius(&self) -> f64 {
        match self {
            SphericalElement::Point(_) => 0.0,
            SphericalElement::Sphere { radius, .. } => *radius,
        }
    }
}

/// Encodes a spherical element: a point `x` maps to `e_1 + x` and an oriented
/// sphere `(m, ρ)` to `cos(ρ) e_1 + m + sin(ρ) e_{n+3}`, with `S^n` occupying
/// the spatial coordinate block `2..n+2`.
pub fn encode_spherical(e: &SphericalElement, n: usize) -> Result<LieVector> {
    let m = e.center();
    if m.len() != n + 1 {
        return Err(LieError::DimensionMismatch {
            expected: n + 1,
            found: m.len(),
        });
    }
    if (m.norm() - 1.0).abs() > 1e-9 {
        return Err(LieError::InvalidArgument(format!(
            "spherical center must be unit, |m| = {}",
            m.norm()
        )));
    }
    let rho = e.radius();
    let d = n + 3;
    let mut x = DVector::zeros(d);
    x[0] = rho.cos();
    x.rows_mut(1, n + 1).copy_from(m);
    x[d - 1] = rho.sin();
    Ok(LieVector::from_dvector(x))
}

/// Reads a quadric point as a spherical sphere `(m, ρ)`; points of `S^n` come
/// back as zero-radius spheres.
pub fn decode_spherical(x: &LieVector, tol: f64) -> Result<SphericalElement> {
    let resid = quadric_residual(x.coords());
    if resid > tol.max(1e-12) * 10.0 {
        return Err(LieError::NotASphere { residual: resid });
    }
    let d = x.dim();
    let n = d - 3;
    let c = x.coords();
    let spatial = c.rows(1, n + 1);
    let t = spatial.norm();
    if t <= tol * x.norm() {
        return Err(LieError::InvalidArgument(
            "representative has no spherical center component".into(),
        ));
    }
    let center = (spatial / t).into_owned();
    let rho = (c[d - 1] / t).atan2(c[0] / t);
    if rho.abs() <= tol {
        Ok(SphericalElement::Point(center))
    } else {
        Ok(SphericalElement::Sphere {
            center,
            radius: rho,
        })
    }
}

/// Spherical-geometry contact oracle: two oriented spheres of `S^n` are in
/// oriented contact when the great-circle distance of their centers equals
/// the difference of their signed radii (mod 2π, orientation matched).
pub fn oriented_contact_spherical(e1: &SphericalElement, e2: &SphericalElement) -> bool {
    let dist = e1.center().dot(e2.center()).clamp(-1.0, 1.0).acos();
    let dr = e1.radius() - e2.radius();
    // cos(dist) = cos(dr) covers both orientations of the tangency.
    (dist.cos() - dr.cos()).abs() <= 1e-9
}

/// Stereographic projection `R^n -> S^n ⊂ R^{n+1}` from the pole `-e`, where
/// `e` is the first coordinate axis of `R^{n+1}`; `u = 0` maps to `+e`.
pub fn stereographic(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    let uu = u.dot(u);
    let mut x = DVector::zeros(n + 1);
    x[0] = (1.0 - uu) / (1.0 + uu);
    for i in 0..n {
        x[i + 1] = 2.0 * u[i] / (1.0 + uu);
    }
    x
}

/// Inverse stereographic projection; the pole `-e` maps to `Infinity`.
pub fn stereographic_inv(x: &DVector<f64>) -> Result<SphereElement> {
    let m = x.len() - 1;
    if (x.norm() - 1.0).abs() > 1e-9 {
        return Err(LieError::InvalidArgument(format!(
            "stereographic_inv expects a unit vector, |x| = {}",
            x.norm()
        )));
    }
    let denom = 1.0 + x[0];
    if denom.abs() <= 1e-13 {
        return Ok(SphereElement::Infinity { dim: m });
    }
    let u = (x.rows(1, m) / denom).into_owned();
    Ok(SphereElement::Point(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn encode_matches_table() {
        let p = encode(&SphereElement::point([1.0, 0.0, 0.0]), 3).unwrap();
        assert_eq!(p.coords().as_slice(), &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0][..]);
        let s = encode(&SphereElement::sphere([0.0, 0.0, 0.0], 1.0), 3).unwrap();
        assert_eq!(s.coords().as_slice(), &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0][..]);
        let pl = encode(&SphereElement::plane([0.0, 0.0, 1.0], 2.0), 3).unwrap();
        assert_eq!(pl.coords().as_slice(), &[2.0, -2.0, 0.0, 0.0, 1.0, 1.0][..]);
        let inf = encode(&SphereElement::Infinity { dim: 3 }, 3).unwrap();
        assert_eq!(
            inf.coords().as_slice(),
            &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0][..]
        );
    }

    #[test]
    fn encode_lands_on_quadric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let e = random_element(&mut rng, 3);
            let x = encode(&e, 3).unwrap();
            assert!(quadric_residual(x.coords()) < 1e-12);
        }
    }

    #[test]
    fn decode_cases() {
        let inf = LieVector::new(vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            decode(&inf, 1e-10).unwrap(),
            SphereElement::Infinity { dim: 3 }
        );
        // Scale invariance.
        let s = LieVector::new(vec![0.0, 2.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        match decode(&s, 1e-10).unwrap() {
            SphereElement::Sphere { center, radius } => {
                assert_relative_eq!(center.norm(), 0.0);
                assert_relative_eq!(radius, 1.0);
            }
            other => panic!("expected sphere, got {other:?}"),
        }
        let pl = LieVector::new(vec![2.0, -2.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        match decode(&pl, 1e-10).unwrap() {
            SphereElement::Plane { normal, offset } => {
                assert_relative_eq!(offset, 2.0);
                assert_relative_eq!(normal[2], 1.0);
            }
            other => panic!("expected plane, got {other:?}"),
        }
        let off = LieVector::basis(6, 1);
        assert!(matches!(
            decode(&off, 1e-10),
            Err(LieError::NotASphere { .. })
        ));
    }

    #[test]
    fn decode_encode_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let e = random_element(&mut rng, 3);
            let x = encode(&e, 3).unwrap();
            let back = encode(&decode(&x, 1e-10).unwrap(), 3).unwrap();
            assert!(
                x.projective_distance(&back) < 1e-10,
                "roundtrip failed for {e:?}"
            );
        }
    }

    #[test]
    fn contact_examples() {
        let s1 = SphereElement::sphere([0.0, 0.0, 0.0], 1.0);
        let s2 = SphereElement::sphere([2.0, 0.0, 0.0], -1.0);
        assert!(oriented_contact_euclidean(&s1, &s2).unwrap());
        let k1 = encode(&s1, 3).unwrap();
        let k2 = encode(&s2, 3).unwrap();
        assert!(oriented_contact_lie(&k1, &k2, 1e-9).unwrap());

        // Sphere against tangent plane with matching orientation: p·N = h + r.
        let pl = SphereElement::plane([0.0, 0.0, 1.0], -1.0);
        assert!(oriented_contact_euclidean(&s1, &pl).unwrap());
        assert!(oriented_contact_lie(&k1, &encode(&pl, 3).unwrap(), 1e-9).unwrap());

        // Point at the center of a sphere is not on it.
        let center = SphereElement::point([0.0, 0.0, 0.0]);
        assert!(!oriented_contact_euclidean(&center, &s1).unwrap());
        assert!(!oriented_contact_lie(&encode(&center, 3).unwrap(), &k1, 1e-9).unwrap());

        // Parallel planes are in oriented contact at infinity.
        let pl2 = SphereElement::plane([0.0, 0.0, 1.0], 5.0);
        assert!(oriented_contact_euclidean(&pl, &pl2).unwrap());
        assert!(oriented_contact_euclidean(&SphereElement::Infinity { dim: 3 }, &pl).unwrap());
        let far = SphereElement::sphere([3.0, 0.0, 0.0], 1.0);
        assert!(!oriented_contact_euclidean(&s1, &far).unwrap());
    }

    #[test]
    fn spherical_encoding_rows() {
        // A point x encodes as e_1 + x.
        let x = encode_spherical(&SphericalElement::point([0.0, 1.0, 0.0, 0.0]), 3).unwrap();
        assert_eq!(x.coords().as_slice(), &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0][..]);
        // Zero-radius sphere encodes as its center point.
        let s = encode_spherical(&SphericalElement::sphere([0.0, 1.0, 0.0, 0.0], 0.0), 3).unwrap();
        assert_eq!(x.coords(), s.coords());
        // North-pole sphere of radius -π/3.
        let m = [1.0, 0.0, 0.0, 0.0];
        let v = encode_spherical(
            &SphericalElement::sphere(m, -std::f64::consts::FRAC_PI_3),
            3,
        )
        .unwrap();
        assert_relative_eq!(v.coords()[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(v.coords()[1], 1.0);
        assert_relative_eq!(v.coords()[5], -(3.0f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert!(quadric_residual(v.coords()) < 1e-14);

        // Cross-check: any point at spherical distance π/3 from m is in
        // oriented contact with that sphere.
        let theta = std::f64::consts::FRAC_PI_3;
        let p = [theta.cos(), theta.sin(), 0.0, 0.0];
        let pk = encode_spherical(&SphericalElement::point(p), 3).unwrap();
        assert!(oriented_contact_lie(&v, &pk, 1e-12).unwrap());
    }

    #[test]
    fn spherical_contact_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut contacts = 0;
        for _ in 0..1000 {
            // Random sphere plus either a tangent sphere (by construction)
            // or an unrelated one.
            let m1 = random_unit(&mut rng, 4);
            let r1 = rng.random_range(-1.2..1.2);
            let e1 = SphericalElement::sphere(m1.as_slice().to_vec(), r1);
            let e2 = if rng.random::<bool>() {
                // Tangent: move the center along a great circle by |dr|.
                let dr: f64 = rng.random_range(-1.0..1.0);
                let dir = random_tangent(&mut rng, &m1);
                let m2 = &m1 * dr.abs().cos() + dir * dr.abs().sin();
                SphericalElement::sphere(m2.as_slice().to_vec(), r1 + dr)
            } else {
                SphericalElement::sphere(random_unit(&mut rng, 4).as_slice().to_vec(), {
                    rng.random_range(-1.2..1.2)
                })
            };
            let geo = oriented_contact_spherical(&e1, &e2);
            let lie = oriented_contact_lie(
                &encode_spherical(&e1, 3).unwrap(),
                &encode_spherical(&e2, 3).unwrap(),
                1e-9,
            )
            .unwrap();
            assert_eq!(geo, lie, "{e1:?} vs {e2:?}");
            contacts += geo as usize;
        }
        assert!(contacts > 200, "tangent construction produced {contacts}");
    }

    #[test]
    fn stereographic_conventions() {
        let zero = DVector::from_vec(vec![0.0, 0.0, 0.0]);
        let north = stereographic(&zero);
        assert_relative_eq!(north[0], 1.0);
        // The projection pole maps back to infinity.
        let pole = DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            stereographic_inv(&pole).unwrap(),
            SphereElement::Infinity { dim: 3 }
        );
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        match stereographic_inv(&stereographic(&u)).unwrap() {
            SphereElement::Point(v) => assert!((v - u).norm() < 1e-12),
            other => panic!("expected point, got {other:?}"),
        }
    }

    #[test]
    fn stereographic_bridge_matches_point_encodings() {
        // encode(Point u) and encode_spherical(point σ(u)) are the same
        // projective point, so contact verdicts transport across the bridge.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let u = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let flat = encode(&SphereElement::Point(u.clone()), 3).unwrap();
            let round = encode_spherical(&SphericalElement::Point(stereographic(&u)), 3).unwrap();
            assert!(flat.projective_distance(&round) < 1e-12);
        }
    }

    pub(super) fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let norm = v.norm();
            if norm > 0.1 {
                return v / norm;
            }
        }
    }

    fn random_tangent(rng: &mut ChaCha8Rng, m: &DVector<f64>) -> DVector<f64> {
        loop {
            let v = random_unit(rng, m.len());
            let t = &v - m * m.dot(&v);
            let norm = t.norm();
            if norm > 0.1 {
                return t / norm;
            }
        }
    }

    pub(super) fn random_element(rng: &mut ChaCha8Rng, n: usize) -> SphereElement {
        match rng.random_range(0..4) {
            0 => SphereElement::Point(DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))),
            1 => SphereElement::Infinity { dim: n },
            2 => SphereElement::Sphere {
                center: DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
                radius: loop {
                    let r: f64 = rng.random_range(-2.0..2.0);
                    if r.abs() > 0.05 {
                        break r;
                    }
                },
            },
            _ => SphereElement::Plane {
                normal: random_unit(rng, n),
                offset: rng.random_range(-2.0..2.0),
            },
        }
    }
}
