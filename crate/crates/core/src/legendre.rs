//! Legendre maps: lifts of immersions into the manifold of lines on the Lie
//! quadric, projections back to Euclidean/spherical geometry, and numerical
//! verification of the Legendre conditions.
//!
//! A Legendre map is stored as a lazily evaluated family
//! `b ↦ [Y_1(b), Y_{n+3}(b)]` of projective lines; sampling grids are always
//! the caller's choice.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diff::{fd_directional, fd_jacobian};
use crate::error::{LieError, Result};
use crate::lie::{
    inner_raw, line_through, quadric_residual, LieLine, LieTransform, LieVector,
    DEFAULT_RESIDUAL_TOL,
};

/// Shared fallible evaluator for smooth maps `R^k -> R^m`.
pub type MapFn = Arc<dyn Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync>;

/// Wraps an infallible closure as a [`MapFn`].
pub fn map_fn<F>(f: F) -> MapFn
where
    F: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
{
    Arc::new(move |b| Ok(f(b)))
}

/// A smooth immersion oracle with an axis-aligned parameter box and a
/// finite-difference step; jets come from central differences unless the
/// caller supplies analytic data through the evaluator itself.
#[derive(Clone)]
pub struct ImmersionOracle {
    eval: MapFn,
    domain: Vec<(f64, f64)>,
    fd_step: f64,
    normal: Option<MapFn>,
    periodic: Vec<bool>,
}

impl ImmersionOracle {
    /// Default finite-difference step: `1e-4` of the smallest domain extent.
    pub fn new(eval: MapFn, domain: Vec<(f64, f64)>) -> Self {
        let extent = domain
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        let axes = domain.len();
        Self {
            eval,
            domain,
            fd_step: 1e-4 * extent,
            normal: None,
            periodic: vec![false; axes],
        }
    }

    /// Marks parameter axes as periodic: the chart evaluator must accept any
    /// value there (angles), and analyses may wrap across the seam.
    pub fn with_periodic(mut self, periodic: Vec<bool>) -> Self {
        debug_assert_eq!(periodic.len(), self.domain.len());
        self.periodic = periodic;
        self
    }

    pub fn periodic_axes(&self) -> &[bool] {
        &self.periodic
    }

    /// Same oracle over a parameter sub-box (an explicit generic patch).
    /// Restricted axes lose their periodicity marker.
    pub fn restricted(&self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.domain.len() {
            return Err(LieError::DimensionMismatch {
                expected: self.domain.len(),
                found: domain.len(),
            });
        }
        let periodic = self
            .periodic
            .iter()
            .zip(domain.iter().zip(&self.domain))
            .map(|(&p, (new, old))| p && (new.1 - new.0) >= (old.1 - old.0))
            .collect();
        let mut out = self.clone();
        out.domain = domain;
        out.periodic = periodic;
        Ok(out)
    }

    pub fn with_normal(mut self, normal: MapFn) -> Self {
        self.normal = Some(normal);
        self
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Self {
        self.fd_step = fd_step;
        self
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn param_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn has_normal(&self) -> bool {
        self.normal.is_some()
    }

    pub fn contains(&self, b: &[f64]) -> bool {
        b.len() == self.domain.len()
            && b.iter().enumerate().all(|(i, x)| {
                self.periodic[i] || (*x >= self.domain[i].0 && *x <= self.domain[i].1)
            })
    }

    /// Center of the parameter box.
    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn eval(&self, b: &[f64]) -> Result<DVector<f64>> {
        (self.eval)(b)
    }

    pub fn jacobian(&self, b: &[f64]) -> Result<DMatrix<f64>> {
        fd_jacobian(self.eval.as_ref(), b, self.fd_step)
    }

    /// Unit normal at `b`, re-unitized each evaluation; the raw unit-norm
    /// residual comes back alongside.
    pub fn normal_at(&self, b: &[f64]) -> Result<(DVector<f64>, f64)> {
        let field = self
            .normal
            .as_ref()
            .ok_or_else(|| LieError::InvalidArgument("oracle has no normal field".into()))?;
        let raw = field(b)?;
        let norm = raw.norm();
        if norm == 0.0 {
            return Err(LieError::NotANormalField { residual: 1.0 });
        }
        Ok((raw / norm, (norm - 1.0).abs()))
    }

    /// A small interior validation grid: center plus shrunk corners.
    fn probe_points(&self) -> Vec<Vec<f64>> {
        let k = self.domain.len();
        let mut points = vec![self.center()];
        for mask in 0..(1usize << k) {
            let p: Vec<f64> = self
                .domain
                .iter()
                .enumerate()
                .map(|(i, (lo, hi))| {
                    let t = if mask >> i & 1 == 1 { 0.82 } else { 0.18 };
                    lo + t * (hi - lo)
                })
                .collect();
            points.push(p);
        }
        points
    }
}

/// How a Legendre map was produced; some operations require a particular
/// provenance (e.g. the Lie-frame second fundamental form needs the
/// Euclidean-lift frame).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    EuclideanLift,
    SphericalLift,
    NormalBundleLift,
    ZooAnalytic(&'static str),
    Transformed,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::EuclideanLift => write!(f, "euclidean-lift"),
            Provenance::SphericalLift => write!(f, "spherical-lift"),
            Provenance::NormalBundleLift => write!(f, "normal-bundle-lift"),
            Provenance::ZooAnalytic(id) => write!(f, "zoo-analytic({id})"),
            Provenance::Transformed => write!(f, "transformed"),
        }
    }
}

type LineFn = Arc<dyn Fn(&[f64]) -> Result<(DVector<f64>, DVector<f64>)> + Send + Sync>;

/// `(Y_1, Y_{n+3}, B_1, B_0)`: line representatives at a point with their
/// jacobians projected off the line span.
pub(crate) type ProjectedJets = (DVector<f64>, DVector<f64>, DMatrix<f64>, DMatrix<f64>);

/// A parametrized family of lines `b ↦ [Y_1(b), Y_{n+3}(b)]` on the quadric.
#[derive(Clone)]
pub struct LegendreMap {
    chart_dim: usize,
    domain: Vec<(f64, f64)>,
    fd_step: f64,
    line_fn: LineFn,
    provenance: Provenance,
    /// Source oracle of a Euclidean lift; used by frame-dependent operations.
    euclidean_source: Option<Arc<ImmersionOracle>>,
    /// Periodicity markers per parameter axis (used by mesh export).
    periodic: Vec<bool>,
}

impl LegendreMap {
    pub(crate) fn from_parts(
        chart_dim: usize,
        domain: Vec<(f64, f64)>,
        fd_step: f64,
        line_fn: LineFn,
        provenance: Provenance,
    ) -> Self {
        let axes = domain.len();
        Self {
            chart_dim,
            domain,
            fd_step,
            line_fn,
            provenance,
            euclidean_source: None,
            periodic: vec![false; axes],
        }
    }

    pub(crate) fn with_periodicity(mut self, periodic: Vec<bool>) -> Self {
        debug_assert_eq!(periodic.len(), self.domain.len());
        self.periodic = periodic;
        self
    }

    /// Chart dimension `n`; lines live in `R^{n+3}`.
    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    /// Parameter dimension `n - 1`.
    pub fn param_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn periodic_axes(&self) -> &[bool] {
        &self.periodic
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, b: &[f64]) -> bool {
        b.len() == self.domain.len()
            && b.iter().enumerate().all(|(i, x)| {
                self.periodic[i] || (*x >= self.domain[i].0 && *x <= self.domain[i].1)
            })
    }

    pub(crate) fn euclidean_source(&self) -> Option<&ImmersionOracle> {
        self.euclidean_source.as_deref()
    }

    /// Raw line representatives, exactly as the lift constructed them.
    pub fn line_reps(&self, b: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        (self.line_fn)(b)
    }

    /// Validated line at `b`.
    pub fn line_at(&self, b: &[f64]) -> Result<LieLine> {
        let (y1, y3) = self.line_reps(b)?;
        line_through(
            &LieVector::from_dvector(y1),
            &LieVector::from_dvector(y3),
            DEFAULT_RESIDUAL_TOL,
        )
    }

    /// Finite-difference jacobians of both representatives.
    pub fn jacobians(&self, b: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let f = self.line_fn.clone();
        let y1_eval = move |p: &[f64]| -> Result<DVector<f64>> { Ok(f(p)?.0) };
        let g = self.line_fn.clone();
        let y3_eval = move |p: &[f64]| -> Result<DVector<f64>> { Ok(g(p)?.1) };
        Ok((
            fd_jacobian(&y1_eval, b, self.fd_step)?,
            fd_jacobian(&y3_eval, b, self.fd_step)?,
        ))
    }

    /// Same line family over a parameter sub-box.
    pub fn restricted(&self, domain: Vec<(f64, f64)>) -> Result<Self> {
        if domain.len() != self.domain.len() {
            return Err(LieError::DimensionMismatch {
                expected: self.domain.len(),
                found: domain.len(),
            });
        }
        let periodic = self
            .periodic
            .iter()
            .zip(domain.iter().zip(&self.domain))
            .map(|(&p, (new, old))| p && (new.1 - new.0) >= (old.1 - old.0))
            .collect();
        let mut out = self.clone();
        out.domain = domain;
        out.periodic = periodic;
        Ok(out)
    }

    /// Pointwise image under a Lie transformation. Curvature spheres and all
    /// Dupin verdicts are covariant under this operation.
    pub fn transformed(&self, g: &LieTransform) -> Result<Self> {
        if g.dim() != self.chart_dim + 3 {
            return Err(LieError::DimensionMismatch {
                expected: self.chart_dim + 3,
                found: g.dim(),
            });
        }
        let m = g.matrix().clone();
        let inner = self.line_fn.clone();
        let line_fn: LineFn = Arc::new(move |b| {
            let (y1, y3) = inner(b)?;
            Ok((&m * y1, &m * y3))
        });
        Ok(Self {
            chart_dim: self.chart_dim,
            domain: self.domain.clone(),
            fd_step: self.fd_step,
            line_fn,
            provenance: Provenance::Transformed,
            euclidean_source: None,
            periodic: self.periodic.clone(),
        })
    }

    /// Jacobians of both representatives projected off the line span: the
    /// working data of the curvature-sphere eigenproblem. Returns
    /// `(y1, y3, B1, B0)`.
    pub(crate) fn projected_jacobians(&self, b: &[f64]) -> Result<ProjectedJets> {
        let (y1, y3) = self.line_reps(b)?;
        let (j1, j0) = self.jacobians(b)?;
        let d = y1.len();
        let mut span = DMatrix::zeros(d, 2);
        span.set_column(0, &y1);
        span.set_column(1, &y3);
        let svd = span.svd(true, false);
        let u = svd.u.expect("requested U");
        let b1 = &j1 - &u * (u.transpose() * &j1);
        let b0 = &j0 - &u * (u.transpose() * &j0);
        Ok((y1, y3, b1, b0))
    }
}

fn validate_unit(name: &str, v: &DVector<f64>, tol: f64) -> Result<()> {
    let resid = (v.norm() - 1.0).abs();
    if resid > tol {
        return Err(LieError::InvalidArgument(format!(
            "{name} must be unit length (residual {resid:.3e})"
        )));
    }
    Ok(())
}

/// Legendre lift of a codimension-one immersion `f` with unit normal field:
/// `Y_1 = ((1+f·f)/2, (1-f·f)/2, f, 0)`, `Y_{n+3} = (h, -h, ξ, 1)` with
/// `h = f·ξ`.
pub fn lift_euclidean(f: &ImmersionOracle) -> Result<LegendreMap> {
    lift_euclidean_with_tol(f, 1e-6)
}

/// As [`lift_euclidean`] with an explicit normality tolerance (useful for
/// measuring the contact residual of a deliberately corrupted normal field).
pub fn lift_euclidean_with_tol(f: &ImmersionOracle, normal_tol: f64) -> Result<LegendreMap> {
    if !f.has_normal() {
        return Err(LieError::InvalidArgument(
            "euclidean lift needs a unit normal oracle".into(),
        ));
    }
    let probe = f.eval(&f.center())?;
    let n = probe.len();
    if f.param_dim() + 1 != n {
        return Err(LieError::InvalidArgument(format!(
            "euclidean lift needs codimension one: {} parameters into R^{}",
            f.param_dim(),
            n
        )));
    }

    for b in f.probe_points() {
        let df = f.jacobian(&b)?;
        let svs = df.clone().singular_values();
        let rel = svs[svs.len() - 1] / svs[0];
        if rel < 1e-8 {
            return Err(LieError::NotAnImmersion { smallest_sv: rel });
        }
        let (xi, _) = f.normal_at(&b)?;
        let tangency = (df.transpose() * &xi).norm() / svs[0];
        if tangency > normal_tol {
            return Err(LieError::NotANormalField { residual: tangency });
        }
    }

    let eval = f.eval.clone();
    let normal = f.normal.clone().unwrap();
    let line_fn: LineFn = Arc::new(move |b| {
        let fx = eval(b)?;
        let xi_raw = normal(b)?;
        let xi = &xi_raw / xi_raw.norm();
        let n = fx.len();
        let ff = fx.dot(&fx);
        let h = fx.dot(&xi);
        let mut y1 = DVector::zeros(n + 3);
        y1[0] = (1.0 + ff) / 2.0;
        y1[1] = (1.0 - ff) / 2.0;
        y1.rows_mut(2, n).copy_from(&fx);
        let mut y3 = DVector::zeros(n + 3);
        y3[0] = h;
        y3[1] = -h;
        y3.rows_mut(2, n).copy_from(&xi);
        y3[n + 2] = 1.0;
        Ok((y1, y3))
    });

    let mut map = LegendreMap::from_parts(
        n,
        f.domain.clone(),
        f.fd_step,
        line_fn,
        Provenance::EuclideanLift,
    )
    .with_periodicity(f.periodic.clone());
    map.euclidean_source = Some(Arc::new(f.clone()));
    Ok(map)
}

/// Legendre lift of a spherical immersion `φ: B -> S^n` with unit normal
/// field `η` tangent to `S^n`: lines `[e_1 + φ, η + e_{n+3}]`.
pub fn lift_spherical(phi: &ImmersionOracle) -> Result<LegendreMap> {
    if !phi.has_normal() {
        return Err(LieError::InvalidArgument(
            "spherical lift needs a unit normal oracle".into(),
        ));
    }
    let probe = phi.eval(&phi.center())?;
    let n = probe.len() - 1;
    if phi.param_dim() != n - 1 {
        return Err(LieError::InvalidArgument(format!(
            "spherical lift needs codimension one in S^{n}: {} parameters",
            phi.param_dim()
        )));
    }

    for b in phi.probe_points() {
        let x = phi.eval(&b)?;
        validate_unit("spherical immersion point", &x, 1e-8)?;
        let (eta, _) = phi.normal_at(&b)?;
        if x.dot(&eta).abs() > 1e-7 {
            return Err(LieError::InvalidArgument(format!(
                "normal field is not tangent to the sphere (x·η = {:.3e})",
                x.dot(&eta)
            )));
        }
        let dphi = phi.jacobian(&b)?;
        let svs = dphi.clone().singular_values();
        let rel = svs[svs.len() - 1] / svs[0];
        if rel < 1e-8 {
            return Err(LieError::NotAnImmersion { smallest_sv: rel });
        }
        let tangency = (dphi.transpose() * &eta).norm() / svs[0];
        if tangency > 1e-6 {
            return Err(LieError::NotANormalField { residual: tangency });
        }
    }

    let eval = phi.eval.clone();
    let normal = phi.normal.clone().unwrap();
    let line_fn: LineFn = Arc::new(move |b| {
        let x = eval(b)?;
        let eta_raw = normal(b)?;
        let eta = &eta_raw / eta_raw.norm();
        let n1 = x.len();
        let mut z1 = DVector::zeros(n1 + 2);
        z1[0] = 1.0;
        z1.rows_mut(1, n1).copy_from(&x);
        let mut z3 = DVector::zeros(n1 + 2);
        z3.rows_mut(1, n1).copy_from(&eta);
        z3[n1 + 1] = 1.0;
        Ok((z1, z3))
    });

    Ok(LegendreMap::from_parts(
        n,
        phi.domain.clone(),
        phi.fd_step,
        line_fn,
        Provenance::SphericalLift,
    )
    .with_periodicity(phi.periodic.clone()))
}

/// Legendre lift of the unit normal bundle of a surface `φ: M^2 -> S^4` with
/// orthonormal normal frame `{ν_1, ν_2}`: parameter `(u, θ)` maps to the line
/// `[e_1 + φ(u), cos θ ν_1(u) + sin θ ν_2(u) + e_7]`.
pub fn lift_normal_bundle_s4(
    phi: &ImmersionOracle,
    nu1: &ImmersionOracle,
    nu2: &ImmersionOracle,
) -> Result<LegendreMap> {
    let probe = phi.eval(&phi.center())?;
    if probe.len() != 5 || phi.param_dim() != 2 {
        return Err(LieError::InvalidArgument(
            "normal bundle lift expects a surface oracle M^2 -> S^4 in R^5".into(),
        ));
    }
    for b in phi.probe_points() {
        let x = phi.eval(&b)?;
        let v1 = nu1.eval(&b)?;
        let v2 = nu2.eval(&b)?;
        validate_unit("base point", &x, 1e-8)?;
        for (name, v) in [("nu1", &v1), ("nu2", &v2)] {
            if (v.norm() - 1.0).abs() > 1e-7 {
                return Err(LieError::InvalidFrame(format!("{name} is not unit")));
            }
            if v.dot(&x).abs() > 1e-7 {
                return Err(LieError::InvalidFrame(format!(
                    "{name} is not tangent to S^4"
                )));
            }
        }
        if v1.dot(&v2).abs() > 1e-7 {
            return Err(LieError::InvalidFrame(
                "normal frame is not orthonormal".into(),
            ));
        }
        let dphi = phi.jacobian(&b)?;
        for (name, v) in [("nu1", &v1), ("nu2", &v2)] {
            if (dphi.transpose() * v).norm() > 1e-6 {
                return Err(LieError::InvalidFrame(format!(
                    "{name} is not normal to the surface"
                )));
            }
        }
    }

    let eval = phi.eval.clone();
    let n1 = nu1.eval.clone();
    let n2 = nu2.eval.clone();
    let line_fn: LineFn = Arc::new(move |b| {
        let (u, theta) = (&b[..2], b[2]);
        let x = eval(u)?;
        let v = n1(u)? * theta.cos() + n2(u)? * theta.sin();
        let mut z1 = DVector::zeros(7);
        z1[0] = 1.0;
        z1.rows_mut(1, 5).copy_from(&x);
        let mut z3 = DVector::zeros(7);
        z3.rows_mut(1, 5).copy_from(&v);
        z3[6] = 1.0;
        Ok((z1, z3))
    });

    let mut domain = phi.domain.clone();
    domain.push((0.0, 2.0 * std::f64::consts::PI));
    let mut periodic = phi.periodic.clone();
    periodic.push(true);
    Ok(LegendreMap::from_parts(
        4,
        domain,
        phi.fd_step,
        line_fn,
        Provenance::NormalBundleLift,
    )
    .with_periodicity(periodic))
}

/// Frame selection for [`euclidean_projection`].
#[derive(Clone)]
pub enum ProjectionFrame {
    /// Read out against the standard basis triple `e_1, e_2, e_{n+3}`.
    Standard,
    /// Conjugate by a Lie transformation before the standard readout.
    Transformed(LieTransform),
}

impl ProjectionFrame {
    /// Builds the frame from an ordered triple of mutually orthogonal unit
    /// vectors (timelike, spacelike, timelike): the readout happens in the
    /// Lie frame that carries the triple to `e_1, e_2, e_{n+3}`.
    pub fn from_triple(t1: &LieVector, s: &LieVector, t2: &LieVector) -> Result<Self> {
        let d = t1.dim();
        if s.dim() != d || t2.dim() != d {
            return Err(LieError::DimensionMismatch {
                expected: d,
                found: s.dim().max(t2.dim()),
            });
        }
        for (name, v, want) in [("t1", t1, -1.0), ("s", s, 1.0), ("t2", t2, -1.0)] {
            let ip = inner_raw(v.coords(), v.coords());
            if (ip - want).abs() > 1e-9 {
                return Err(LieError::InvalidFrame(format!(
                    "{name} must satisfy <v,v> = {want}, got {ip}"
                )));
            }
        }
        for (a, b) in [(t1, s), (t1, t2), (s, t2)] {
            if inner_raw(a.coords(), b.coords()).abs() > 1e-9 {
                return Err(LieError::InvalidFrame("triple is not orthogonal".into()));
            }
        }
        // J-orthogonal complement of the triple, via the nullspace of the
        // stacked pairing matrix.
        let mut pairing = DMatrix::zeros(3, d);
        let j = crate::lie::metric_signs(d);
        for (row, v) in [t1, s, t2].iter().enumerate() {
            for c in 0..d {
                pairing[(row, c)] = v.coords()[c] * j[c];
            }
        }
        let comp = crate::lie::nullspace_basis(&pairing, 1e-10);
        if comp.len() != d - 3 {
            return Err(LieError::InvalidFrame(
                "triple does not span a 3-dimensional subspace".into(),
            ));
        }
        // The restricted form on the complement is positive definite; build an
        // orthonormal basis for it from the Gram eigendecomposition.
        let m = comp.len();
        let mut gram = DMatrix::zeros(m, m);
        for i in 0..m {
            for k in 0..m {
                gram[(i, k)] = inner_raw(&comp[i], &comp[k]);
            }
        }
        let eig = gram.symmetric_eigen();
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for i in 0..m {
            let l = eig.eigenvalues[i];
            if l <= 0.0 {
                return Err(LieError::InvalidFrame(
                    "complement of the triple is not spacelike".into(),
                ));
            }
            let mut v = DVector::zeros(d);
            for (k, c) in comp.iter().enumerate() {
                v += c * eig.eigenvectors[(k, i)];
            }
            cols.push(v / l.sqrt());
        }
        let mut c = DMatrix::zeros(d, d);
        c.set_column(0, t1.coords());
        c.set_column(1, s.coords());
        for (i, v) in cols.iter().enumerate() {
            c.set_column(2 + i, v);
        }
        c.set_column(d - 1, t2.coords());
        // C maps the standard frame to the triple; the readout transform is
        // its group inverse J C^T J.
        let g = LieTransform::from_matrix(c, 1e-8)?;
        Ok(ProjectionFrame::Transformed(g.inverse()))
    }
}

impl ProjectionFrame {
    /// Frame whose point at infinity is the given quadric point: the
    /// projection becomes singular exactly where the line family passes
    /// through `[k]`.
    pub fn pole_at(k: &LieVector) -> Result<Self> {
        let d = k.dim();
        if quadric_residual(k.coords()) > 1e-10 {
            return Err(LieError::NotASphere {
                residual: quadric_residual(k.coords()),
            });
        }
        let khat = k.coords() / k.norm();
        // J k is lightlike with <k, Jk> = |k|^2 > 0: a hyperbolic partner.
        let j = crate::lie::metric_signs(d);
        let mhat = DVector::from_fn(d, |i, _| khat[i] * j[i]);
        let s2 = 2.0_f64.sqrt();
        let t1 = LieVector::from_dvector((&khat - &mhat) / s2);
        let s = LieVector::from_dvector(-(&khat + &mhat) / s2);
        // Timelike completion: the complement of span{k, Jk} has signature
        // (n, 1); take its timelike eigendirection.
        let mut pairing = DMatrix::zeros(2, d);
        for c in 0..d {
            pairing[(0, c)] = khat[c] * j[c];
            pairing[(1, c)] = mhat[c] * j[c];
        }
        let comp = crate::lie::nullspace_basis(&pairing, 1e-10);
        let m = d - 2;
        if comp.len() != m {
            return Err(LieError::InvalidFrame(
                "pole does not determine a hyperbolic pair".into(),
            ));
        }
        let mut gram = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                gram[(a, b)] = inner_raw(&comp[a], &comp[b]);
            }
        }
        let eig = gram.symmetric_eigen();
        let mut t2 = None;
        for i in 0..m {
            if eig.eigenvalues[i] < -1e-9 {
                let mut v = DVector::zeros(d);
                for (a, c) in comp.iter().enumerate() {
                    v += c * eig.eigenvectors[(a, i)];
                }
                t2 = Some(LieVector::from_dvector(v / (-eig.eigenvalues[i]).sqrt()));
                break;
            }
        }
        let t2 = t2.ok_or_else(|| {
            LieError::InvalidFrame("no timelike completion for the pole frame".into())
        })?;
        Self::from_triple(&t1, &s, &t2)
    }
}

const SINGULAR_REL: f64 = 1e-10;

fn project_reps(
    y1: &DVector<f64>,
    y3: &DVector<f64>,
    b: &[f64],
) -> Result<(DVector<f64>, DVector<f64>)> {
    let d = y1.len();
    let n = d - 3;
    let scale = y1.norm().max(y3.norm());
    // Point-sphere representative: the combination with last coordinate zero.
    let z1 = y1 * y3[d - 1] - y3 * y1[d - 1];
    let alpha = z1[0] + z1[1];
    if z1.norm() <= SINGULAR_REL * scale.powi(2) || alpha.abs() <= SINGULAR_REL * z1.norm() {
        return Err(LieError::ProjectionSingular { param: b.to_vec() });
    }
    let f = (z1.rows(2, n) / alpha).into_owned();
    // Plane representative: the combination orthogonal to e_1 - e_2.
    let z3 = y1 * (y3[0] + y3[1]) - y3 * (y1[0] + y1[1]);
    let last = z3[d - 1];
    if z3.norm() <= SINGULAR_REL * scale.powi(2) || last.abs() <= SINGULAR_REL * z3.norm() {
        return Err(LieError::ProjectionSingular { param: b.to_vec() });
    }
    let xi = (z3.rows(2, n) / last).into_owned();
    Ok((f, xi))
}

/// Euclidean projection of a Legendre map: the immersion `f` with unit normal
/// `ξ` whose Legendre lift reproduces the line family (in the chosen frame).
/// Fails pointwise where the line meets the point at infinity of the frame.
pub fn euclidean_projection(map: &LegendreMap, frame: &ProjectionFrame) -> Result<ImmersionOracle> {
    let rotate: Option<DMatrix<f64>> = match frame {
        ProjectionFrame::Standard => None,
        ProjectionFrame::Transformed(g) => {
            if g.dim() != map.chart_dim + 3 {
                return Err(LieError::DimensionMismatch {
                    expected: map.chart_dim + 3,
                    found: g.dim(),
                });
            }
            Some(g.matrix().clone())
        }
    };
    let line_fn = map.line_fn.clone();
    let rot_f = rotate.clone();
    let f_eval: MapFn = Arc::new(move |b| {
        let (mut y1, mut y3) = line_fn(b)?;
        if let Some(r) = &rot_f {
            y1 = r * y1;
            y3 = r * y3;
        }
        Ok(project_reps(&y1, &y3, b)?.0)
    });
    let line_fn = map.line_fn.clone();
    let xi_eval: MapFn = Arc::new(move |b| {
        let (mut y1, mut y3) = line_fn(b)?;
        if let Some(r) = &rotate {
            y1 = r * y1;
            y3 = r * y3;
        }
        Ok(project_reps(&y1, &y3, b)?.1)
    });
    Ok(ImmersionOracle::new(f_eval, map.domain.clone())
        .with_fd_step(map.fd_step)
        .with_normal(xi_eval))
}

/// Spherical projection of a Legendre map determined by the standard pair
/// `{e_{n+3}, e_1}`: writes the point-sphere representative as `e_1 + f`
/// with `|f| = 1` and reads the spherical normal off the second point.
pub fn spherical_projection(map: &LegendreMap) -> Result<ImmersionOracle> {
    let d = map.chart_dim + 3;
    let n = map.chart_dim;
    let line_fn = map.line_fn.clone();
    let f_eval: MapFn = Arc::new(move |b| {
        let (y1, y3) = line_fn(b)?;
        // Point-sphere representative, normalized to first coordinate one.
        let z1 = &y1 * y3[d - 1] - &y3 * y1[d - 1];
        if z1.norm() <= SINGULAR_REL || z1[0].abs() <= SINGULAR_REL * z1.norm() {
            return Err(LieError::ProjectionSingular { param: b.to_vec() });
        }
        Ok((z1.rows(1, n + 1) / z1[0]).into_owned())
    });
    let line_fn = map.line_fn.clone();
    let eta_eval: MapFn = Arc::new(move |b| {
        let (y1, y3) = line_fn(b)?;
        // Representative orthogonal to e_1 (first coordinate zero), normalized
        // to last coordinate one.
        let z3 = &y1 * y3[0] - &y3 * y1[0];
        if z3.norm() <= SINGULAR_REL || z3[d - 1].abs() <= SINGULAR_REL * z3.norm() {
            return Err(LieError::ProjectionSingular { param: b.to_vec() });
        }
        Ok((z3.rows(1, n + 1) / z3[d - 1]).into_owned())
    });
    Ok(ImmersionOracle::new(f_eval, map.domain.clone())
        .with_fd_step(map.fd_step)
        .with_normal(eta_eval))
}

/// Pointwise residuals of the Legendre conditions.
#[derive(Debug, Clone)]
pub struct LegendreResiduals {
    /// Relative quadric residual of `Y_1`.
    pub quadric1: f64,
    /// Relative quadric residual of `Y_{n+3}`.
    pub quadric2: f64,
    /// Relative orthogonality residual `|<Y_1, Y_{n+3}>|`.
    pub orthogonality: f64,
    /// Contact-form residual `max_i |<dY_1(e_i), Y_{n+3}>|`, scale-normalized.
    pub contact: f64,
    /// Least singular value of the line-projected differential of `Y_1`
    /// (the immersion condition of the Euclidean projection).
    pub regularity_sv: f64,
}

/// Evaluates the Legendre conditions at a parameter point.
pub fn legendre_residuals(map: &LegendreMap, b: &[f64]) -> Result<LegendreResiduals> {
    if !map.contains(b) {
        return Err(LieError::OutOfDomain { param: b.to_vec() });
    }
    let (y1, y3, b1, _) = map.projected_jacobians(b)?;
    let quadric1 = inner_raw(&y1, &y1).abs() / y1.norm_squared();
    let quadric2 = inner_raw(&y3, &y3).abs() / y3.norm_squared();
    let orthogonality = inner_raw(&y1, &y3).abs() / (y1.norm() * y3.norm());

    let line_fn = map.line_fn.clone();
    let y1_eval = move |p: &[f64]| -> Result<DVector<f64>> { Ok(line_fn(p)?.0) };
    let mut contact = 0.0_f64;
    let mut dir = vec![0.0; b.len()];
    for axis in 0..b.len() {
        dir.iter_mut().for_each(|x| *x = 0.0);
        dir[axis] = 1.0;
        let dy1 = fd_directional(&y1_eval, b, &dir, map.fd_step)?;
        let denom = dy1.norm().max(1e-300) * y3.norm();
        contact = contact.max(inner_raw(&dy1, &y3).abs() / denom);
    }

    let svs = b1.singular_values();
    let regularity_sv = svs[svs.len() - 1];
    Ok(LegendreResiduals {
        quadric1,
        quadric2,
        orthogonality,
        contact,
        regularity_sv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::random_lie_transform;
    use approx::assert_relative_eq;

    /// Unit sphere in R^3, spherical chart, inward normal.
    pub(crate) fn unit_sphere_oracle() -> ImmersionOracle {
        let eval = map_fn(|b: &[f64]| {
            let (u, v) = (b[0], b[1]);
            DVector::from_vec(vec![v.sin() * u.cos(), v.sin() * u.sin(), v.cos()])
        });
        let normal = map_fn(|b: &[f64]| {
            let (u, v) = (b[0], b[1]);
            DVector::from_vec(vec![-v.sin() * u.cos(), -v.sin() * u.sin(), -v.cos()])
        });
        ImmersionOracle::new(eval, vec![(0.2, 1.8), (0.4, 2.2)]).with_normal(normal)
    }

    fn plane_oracle() -> ImmersionOracle {
        let eval = map_fn(|b: &[f64]| DVector::from_vec(vec![b[0], b[1], 0.0]));
        let normal = map_fn(|_: &[f64]| DVector::from_vec(vec![0.0, 0.0, 1.0]));
        ImmersionOracle::new(eval, vec![(-1.0, 1.0), (-1.0, 1.0)]).with_normal(normal)
    }

    #[test]
    fn sphere_lift_constructs_curvature_sphere_line() {
        let map = lift_euclidean(&unit_sphere_oracle()).unwrap();
        let b = [0.9, 1.1];
        let (y1, y3) = map.line_reps(&b).unwrap();
        // Inward normal makes Y_{n+3} = (-1, 1, ξ, 1).
        assert_relative_eq!(y3[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(y3[1], 1.0, epsilon = 1e-12);
        // r = 1 on the line reproduces the surface sphere itself.
        let k = LieVector::from_dvector(&y1 * 1.0 + y3);
        match crate::spheres::decode(&k, 1e-9).unwrap() {
            crate::spheres::SphereElement::Sphere { center, radius } => {
                assert!(center.norm() < 1e-12);
                assert_relative_eq!(radius, 1.0, epsilon = 1e-12);
            }
            other => panic!("expected the unit sphere, got {other:?}"),
        }
    }

    #[test]
    fn plane_lift_has_constant_second_point() {
        let map = lift_euclidean(&plane_oracle()).unwrap();
        let (_, y3a) = map.line_reps(&[0.3, -0.4]).unwrap();
        let (_, y3b) = map.line_reps(&[-0.8, 0.6]).unwrap();
        assert_eq!(y3a.as_slice(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0][..]);
        assert!((y3a - y3b).norm() < 1e-15);
    }

    #[test]
    fn lift_rejects_bad_normals_and_degenerate_maps() {
        let eval = map_fn(|b: &[f64]| DVector::from_vec(vec![b[0], b[1], 0.0]));
        let skew = map_fn(|_: &[f64]| DVector::from_vec(vec![0.3, 0.0, 1.0]));
        let oracle = ImmersionOracle::new(eval, vec![(-1.0, 1.0), (-1.0, 1.0)]).with_normal(skew);
        assert!(matches!(
            lift_euclidean(&oracle),
            Err(LieError::NotANormalField { .. })
        ));

        let collapse = map_fn(|b: &[f64]| DVector::from_vec(vec![b[0], b[0], 0.0]));
        let normal = map_fn(|_: &[f64]| DVector::from_vec(vec![0.0, 0.0, 1.0]));
        let oracle =
            ImmersionOracle::new(collapse, vec![(-1.0, 1.0), (-1.0, 1.0)]).with_normal(normal);
        assert!(matches!(
            lift_euclidean(&oracle),
            Err(LieError::NotAnImmersion { .. })
        ));
    }

    #[test]
    fn residuals_small_on_analytic_lifts() {
        let map = lift_euclidean(&unit_sphere_oracle()).unwrap();
        let r = legendre_residuals(&map, &[0.9, 1.3]).unwrap();
        assert!(r.quadric1 < 1e-12);
        assert!(r.quadric2 < 1e-12);
        assert!(r.orthogonality < 1e-12);
        assert!(r.contact < 1e-6, "contact {}", r.contact);
        assert!(r.regularity_sv > 0.1);
    }

    #[test]
    fn plane_regularity_sv_is_one() {
        let map = lift_euclidean(&plane_oracle()).unwrap();
        for b in [[0.0, 0.0], [0.7, -0.2], [0.9, 0.9]] {
            let r = legendre_residuals(&map, &b).unwrap();
            assert_relative_eq!(r.regularity_sv, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn corrupted_normal_shows_in_contact_residual() {
        // Rotate the sphere normal by one degree in a tangent direction.
        let angle = std::f64::consts::PI / 180.0;
        let eval = map_fn(|b: &[f64]| {
            let (u, v) = (b[0], b[1]);
            DVector::from_vec(vec![v.sin() * u.cos(), v.sin() * u.sin(), v.cos()])
        });
        let normal = map_fn(move |b: &[f64]| {
            let (u, v) = (b[0], b[1]);
            let n = DVector::from_vec(vec![-v.sin() * u.cos(), -v.sin() * u.sin(), -v.cos()]);
            let t = DVector::from_vec(vec![v.cos() * u.cos(), v.cos() * u.sin(), -v.sin()]);
            n * angle.cos() + t * angle.sin()
        });
        let oracle = ImmersionOracle::new(eval, vec![(0.2, 1.8), (0.4, 2.2)]).with_normal(normal);
        let map = lift_euclidean_with_tol(&oracle, 1.0).unwrap();
        let r = legendre_residuals(&map, &[0.9, 1.3]).unwrap();
        assert!(r.contact > 1e-3, "contact {}", r.contact);
    }

    #[test]
    fn euclidean_projection_is_a_section() {
        let oracle = unit_sphere_oracle();
        let map = lift_euclidean(&oracle).unwrap();
        let proj = euclidean_projection(&map, &ProjectionFrame::Standard).unwrap();
        for b in [[0.5, 0.9], [1.2, 1.7]] {
            let f0 = oracle.eval(&b).unwrap();
            let f1 = proj.eval(&b).unwrap();
            assert!((f0 - f1).norm() < 1e-10);
            let (xi0, _) = oracle.normal_at(&b).unwrap();
            let (xi1, _) = proj.normal_at(&b).unwrap();
            assert!((xi0 - xi1).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_roundtrip_after_transform() {
        // Push the sphere lift through a random Lie transform, project, lift
        // again: the line families agree projectively.
        let map = lift_euclidean(&unit_sphere_oracle()).unwrap();
        let g = random_lie_transform(12, 3, 0.3);
        let moved = map.transformed(&g).unwrap();
        let proj = euclidean_projection(&moved, &ProjectionFrame::Standard).unwrap();
        let relift = lift_euclidean(&proj).unwrap();
        for b in [[0.6, 0.8], [1.0, 1.5], [1.5, 2.0]] {
            let (a1, a3) = moved.line_reps(&b).unwrap();
            let (c1, c3) = relift.line_reps(&b).unwrap();
            // The four representatives span the same projective line: the
            // relifted family reproduces the transformed one up to the choice
            // of representatives on each line.
            let span = crate::lie::span_summary(
                &[
                    LieVector::from_dvector(a1),
                    LieVector::from_dvector(c1),
                    LieVector::from_dvector(a3),
                    LieVector::from_dvector(c3),
                ],
                1e-7,
            )
            .unwrap();
            assert_eq!(span.dim, 2);
        }
    }

    #[test]
    fn spherical_lift_and_projection_roundtrip() {
        // Great 2-sphere in S^3 with constant normal.
        let eval = map_fn(|b: &[f64]| {
            let (u, v) = (b[0], b[1]);
            DVector::from_vec(vec![v.sin() * u.cos(), v.sin() * u.sin(), v.cos(), 0.0])
        });
        let normal = map_fn(|_: &[f64]| DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]));
        let oracle = ImmersionOracle::new(eval, vec![(0.3, 1.6), (0.5, 2.0)]).with_normal(normal);
        let map = lift_spherical(&oracle).unwrap();
        let (_, z3) = map.line_reps(&[0.5, 0.9]).unwrap();
        let (_, z3b) = map.line_reps(&[1.2, 1.4]).unwrap();
        assert!(
            (z3 - z3b).norm() < 1e-15,
            "totally geodesic: constant Y_{{n+3}}"
        );

        let proj = spherical_projection(&map).unwrap();
        for b in [[0.5, 0.9], [1.1, 1.8]] {
            let x0 = oracle.eval(&b).unwrap();
            let x1 = proj.eval(&b).unwrap();
            assert!((x0 - x1).norm() < 1e-10);
            let (e0, _) = oracle.normal_at(&b).unwrap();
            let (e1, _) = proj.normal_at(&b).unwrap();
            assert!((e0 - e1).norm() < 1e-10);
        }
        let r = legendre_residuals(&map, &[0.8, 1.0]).unwrap();
        assert!(r.contact < 1e-8);
    }

    #[test]
    fn transform_covariance_of_residuals() {
        let map = lift_euclidean(&unit_sphere_oracle()).unwrap();
        let base = legendre_residuals(&map, &[0.9, 1.3]).unwrap();
        for seed in 0..5 {
            let g = random_lie_transform(seed, 3, 0.4);
            let moved = map.transformed(&g).unwrap();
            let r = legendre_residuals(&moved, &[0.9, 1.3]).unwrap();
            assert!(r.contact <= 10.0 * base.contact.max(1e-9));
            assert!(r.quadric1 <= 1e-9);
            assert!(r.orthogonality <= 1e-9);
        }
    }

    #[test]
    fn out_of_domain_is_reported() {
        let map = lift_euclidean(&plane_oracle()).unwrap();
        assert!(matches!(
            legendre_residuals(&map, &[5.0, 0.0]),
            Err(LieError::OutOfDomain { .. })
        ));
    }
}
