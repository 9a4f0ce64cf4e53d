//! Indefinite linear algebra on `R^{n+3}_2`, projective points and lines on the
//! Lie quadric, and the Lie transformation group.
//!
//! Homogeneous coordinates `(x_1, ..., x_{n+3})` carry the signature-(n+1,2)
//! inner product `<x,x> = -x_1^2 + x_2^2 + ... + x_{n+2}^2 - x_{n+3}^2`; the
//! quadric `<x,x> = 0` in `P^{n+2}` is the space of oriented spheres of
//! `R^n ∪ {∞}`. Projective representatives are stored as given and never
//! auto-normalized; all predicates use scale-invariant residuals.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LieError, Result};

/// Default relative tolerance for quadric membership and orthogonality residuals.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

/// A coordinate vector in `R^{n+3}_2`, `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieVector {
    coords: DVector<f64>,
}

impl LieVector {
    /// Wraps a coordinate vector of length `n + 3` for some chart dimension `n >= 2`.
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords = DVector::from_vec(coords.into());
        if coords.len() < 5 {
            return Err(LieError::InvalidArgument(format!(
                "Lie vectors have length n + 3 >= 5, got {}",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_dvector(coords: DVector<f64>) -> Self {
        debug_assert!(coords.len() >= 5);
        Self { coords }
    }

    /// Standard basis vector `e_{index+1}` of `R^{dim}` (zero-based index).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = 1.0;
        Self { coords: v }
    }

    /// Chart dimension `n` (the vector has `n + 3` coordinates).
    pub fn chart_dim(&self) -> usize {
        self.coords.len() - 3
    }

    /// Total coordinate dimension `n + 3`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// Euclidean norm of the coordinate vector.
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// `<self, other>` under the signature-(n+1,2) form.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        lie_inner(self, other)
    }

    /// Scales the representative by `c` (projectively the same point).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coords: &self.coords * c,
        }
    }

    /// Unit-norm representative with a deterministic sign: the coordinate of
    /// largest magnitude is made positive.
    pub fn normalized(&self) -> Self {
        let n = self.coords.norm();
        let mut v = &self.coords / n;
        let lead = v
            .iter()
            .cloned()
            .fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if lead < 0.0 {
            v.neg_mut();
        }
        Self { coords: v }
    }

    /// Projective distance `min_± ||x/|x| ∓ y/|y|||`.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        let a = &self.coords / self.coords.norm();
        let b = &other.coords / other.coords.norm();
        let plus = (&a - &b).norm();
        let minus = (&a + &b).norm();
        plus.min(minus)
    }
}

/// Diagonal of the metric `J = diag(-1, 1, ..., 1, -1)` in dimension `dim`.
pub fn metric_signs(dim: usize) -> DVector<f64> {
    let mut d = DVector::from_element(dim, 1.0);
    d[0] = -1.0;
    d[dim - 1] = -1.0;
    d
}

/// Metric as a dense matrix.
pub fn metric_matrix(dim: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&metric_signs(dim))
}

/// Signature-(n+1,2) inner product `-x_1 y_1 + sum_{k=2}^{n+2} x_k y_k - x_{n+3} y_{n+3}`.
pub fn lie_inner(x: &LieVector, y: &LieVector) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(LieError::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(inner_raw(x.coords(), y.coords()))
}

pub(crate) fn inner_raw(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let d = x.len();
    let mut s = -x[0] * y[0] - x[d - 1] * y[d - 1];
    for k in 1..d - 1 {
        s += x[k] * y[k];
    }
    s
}

/// Quadric membership: `|<x,x>| <= tol * |x|^2`.
pub fn on_quadric(x: &LieVector, tol: f64) -> Result<bool> {
    let n2 = x.coords.norm_squared();
    if n2 == 0.0 {
        return Err(LieError::InvalidArgument(
            "zero vector is not a projective representative".into(),
        ));
    }
    Ok(inner_raw(x.coords(), x.coords()).abs() <= tol * n2)
}

pub(crate) fn quadric_residual(x: &DVector<f64>) -> f64 {
    inner_raw(x, x).abs() / x.norm_squared()
}

/// Euclidean-orthonormal basis of the right nullspace of `m`, via the
/// complement projector of the row space (robust to thin SVDs).
pub(crate) fn nullspace_basis(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let d = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let top = svd.singular_values[0].max(1e-300);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rel_tol * top)
        .count();
    let mut projector = DMatrix::identity(d, d);
    for r in 0..rank {
        let v = v_t.row(r).transpose();
        projector -= &v * v.transpose();
    }
    let eig = projector.symmetric_eigen();
    let mut basis = Vec::new();
    for i in 0..d {
        if eig.eigenvalues[i] > 0.5 {
            basis.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    basis
}

/// A projective line on the quadric, spanned by two orthogonal quadric points.
#[derive(Debug, Clone)]
pub struct LieLine {
    y1: LieVector,
    y2: LieVector,
}

impl LieLine {
    pub fn y1(&self) -> &LieVector {
        &self.y1
    }

    pub fn y2(&self) -> &LieVector {
        &self.y2
    }

    pub fn dim(&self) -> usize {
        self.y1.dim()
    }

    /// The point `a*y1 + b*y2` on the line.
    pub fn point(&self, a: f64, b: f64) -> LieVector {
        LieVector::from_dvector(self.y1.coords() * a + self.y2.coords() * b)
    }

    /// Largest of the quadric and orthogonality residuals (relative).
    pub fn residual(&self) -> f64 {
        let q1 = quadric_residual(self.y1.coords());
        let q2 = quadric_residual(self.y2.coords());
        let ortho =
            inner_raw(self.y1.coords(), self.y2.coords()).abs() / (self.y1.norm() * self.y2.norm());
        q1.max(q2).max(ortho)
    }
}

/// Validates that `[x], [y]` span a line on the quadric (both on the quadric,
/// mutually orthogonal, independent) and returns it with the representatives
/// stored as given.
pub fn line_through(x: &LieVector, y: &LieVector, tol: f64) -> Result<LieLine> {
    if x.dim() != y.dim() {
        return Err(LieError::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let nx = x.norm();
    let ny = y.norm();
    // Independence first: the smallest singular value of the row-normalized
    // 2 x (n+3) stack, relative to the largest.
    let mut stack = DMatrix::zeros(2, x.dim());
    stack.row_mut(0).copy_from(&(x.coords() / nx).transpose());
    stack.row_mut(1).copy_from(&(y.coords() / ny).transpose());
    let svs = stack.singular_values();
    let rel = svs[svs.len() - 1] / svs[0];
    if rel <= DEFAULT_RANK_TOL {
        return Err(LieError::DegenerateLine { smallest_sv: rel });
    }
    let q1 = quadric_residual(x.coords());
    let q2 = quadric_residual(y.coords());
    let ortho = inner_raw(x.coords(), y.coords()).abs() / (nx * ny);
    let residual = q1.max(q2).max(ortho);
    if residual > tol {
        return Err(LieError::NotAContactLine { residual });
    }
    Ok(LieLine {
        y1: x.clone(),
        y2: y.clone(),
    })
}

/// True iff `G^T J G = c J` for some scalar `c > 0` within `tol` (projective
/// representative of an O(n+1,2) element).
pub fn is_lie_transform(g: &DMatrix<f64>, tol: f64) -> bool {
    conformal_factor(g, tol).is_some()
}

/// Returns `c > 0` with `G^T J G ≈ c J`, if any.
fn conformal_factor(g: &DMatrix<f64>, tol: f64) -> Option<f64> {
    let d = g.nrows();
    if d != g.ncols() || d < 5 {
        return None;
    }
    let j = metric_signs(d);
    let m = {
        let mut jg = g.clone();
        for i in 0..d {
            for k in 0..d {
                jg[(i, k)] *= j[i];
            }
        }
        g.transpose() * jg
    };
    // c J has diagonal c * j; estimate c from the metric-weighted trace.
    let mut c = 0.0;
    for i in 0..d {
        c += m[(i, i)] * j[i];
    }
    c /= d as f64;
    if c <= 0.0 {
        return None;
    }
    let mut resid = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..d {
        for k in 0..d {
            let target = if i == k { c * j[i] } else { 0.0 };
            resid += (m[(i, k)] - target).powi(2);
            scale += m[(i, k)].powi(2);
        }
    }
    if resid.sqrt() <= tol * scale.sqrt().max(c * (d as f64).sqrt()) {
        Some(c)
    } else {
        None
    }
}

/// A Lie sphere transformation, stored as a matrix with `G^T J G = J` exactly
/// up to rounding (the projective scale is fixed at construction).
#[derive(Debug, Clone)]
pub struct LieTransform {
    matrix: DMatrix<f64>,
}

impl LieTransform {
    /// Accepts any matrix with `G^T J G = c J`, `c > 0`, and rescales to `c = 1`.
    pub fn from_matrix(g: DMatrix<f64>, tol: f64) -> Result<Self> {
        match conformal_factor(&g, tol) {
            Some(c) => Ok(Self {
                matrix: g / c.sqrt(),
            }),
            None => Err(LieError::InvalidArgument(
                "matrix does not satisfy G^T J G = c J with c > 0".into(),
            )),
        }
    }

    pub fn identity(chart_dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(chart_dim + 3, chart_dim + 3),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Applies the transform to a projective representative.
    pub fn apply(&self, x: &LieVector) -> Result<LieVector> {
        if x.dim() != self.dim() {
            return Err(LieError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(LieVector::from_dvector(&self.matrix * x.coords()))
    }

    /// Applies the transform to both representatives and revalidates the line.
    pub fn apply_line(&self, line: &LieLine) -> Result<LieLine> {
        let y1 = self.apply(line.y1())?;
        let y2 = self.apply(line.y2())?;
        line_through(&y1, &y2, DEFAULT_RESIDUAL_TOL)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(LieError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Group inverse `J G^T J`, exact for metric-preserving matrices.
    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let j = metric_signs(d);
        let mut inv = self.matrix.transpose();
        for i in 0..d {
            for k in 0..d {
                inv[(i, k)] *= j[i] * j[k];
            }
        }
        Self { matrix: inv }
    }
}

/// True iff the transform fixes the point sphere hyperplane `x_{n+3} = 0`,
/// i.e. `G e_{n+3}` is proportional to `e_{n+3}` (a Möbius transformation).
pub fn is_moebius(g: &LieTransform, tol: f64) -> bool {
    let d = g.dim();
    let col = g.matrix.column(d - 1);
    let total = col.norm();
    let off: f64 = col.rows(0, d - 1).norm();
    off <= tol * total
}

/// Deterministic pseudo-random element of O(n+1,2): the matrix exponential of
/// a J-skew matrix `A = J K` (`K` Euclidean-skew with entries bounded by
/// `scale`), so `G^T J G = J` holds by construction.
pub fn random_lie_transform(seed: u64, n: usize, scale: f64) -> LieTransform {
    let d = n + 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = if scale > 0.0 {
                rng.random_range(-scale..=scale)
            } else {
                0.0
            };
            k[(i, j)] = v;
            k[(j, i)] = -v;
        }
    }
    let signs = metric_signs(d);
    let mut a = k;
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] *= signs[i];
        }
    }
    LieTransform {
        matrix: matrix_exp(&a),
    }
}

/// Scaling-and-squaring matrix exponential with series truncation at
/// machine-precision stagnation.
pub(crate) fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d = a.nrows();
    let norm = a.norm();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        let t = term.norm();
        result += &term;
        if t <= f64::EPSILON * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Rank, basis, and restricted-form signature of the span of a sample set.
#[derive(Debug, Clone)]
pub struct SpanSummary {
    /// Numerical rank of the (row-normalized) sample stack.
    pub dim: usize,
    /// Orthonormal basis of the span (right singular vectors).
    pub basis: Vec<LieVector>,
    /// Signature `(n_plus, n_minus, n_zero)` of `<,>` restricted to the span.
    pub signature: (usize, usize, usize),
    /// `(smallest retained, largest discarded)` singular values.
    pub residual: (f64, f64),
}

/// Rank and signature of the span of `samples`, with singular values
/// thresholded at `tol` relative to the largest.
pub fn span_summary(samples: &[LieVector], tol: f64) -> Result<SpanSummary> {
    if samples.is_empty() {
        return Err(LieError::InvalidArgument("no samples given".into()));
    }
    let dim = samples[0].dim();
    for s in samples {
        if s.dim() != dim {
            return Err(LieError::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
    }
    let mut stack = DMatrix::zeros(samples.len(), dim);
    for (i, s) in samples.iter().enumerate() {
        let n = s.norm();
        if n == 0.0 {
            return Err(LieError::InvalidArgument(format!("sample {i} is zero")));
        }
        stack.row_mut(i).copy_from(&(s.coords() / n).transpose());
    }
    let svd = stack.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let svs = &svd.singular_values;
    let cutoff = tol * svs[0];
    let rank = svs.iter().filter(|&&s| s > cutoff).count().max(1);
    let retained = svs[rank - 1];
    let discarded = if rank < svs.len() { svs[rank] } else { 0.0 };

    let basis: Vec<LieVector> = (0..rank)
        .map(|i| LieVector::from_dvector(v_t.row(i).transpose()))
        .collect();

    // Gram matrix of <,> on the basis, then its eigenvalue signs.
    let mut gram = DMatrix::zeros(rank, rank);
    for i in 0..rank {
        for j in 0..rank {
            gram[(i, j)] = inner_raw(basis[i].coords(), basis[j].coords());
        }
    }
    let eig = gram.symmetric_eigen();
    let emax = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let zero_cut = tol * emax.max(1.0);
    let mut sig = (0usize, 0usize, 0usize);
    for &l in eig.eigenvalues.iter() {
        if l > zero_cut {
            sig.0 += 1;
        } else if l < -zero_cut {
            sig.1 += 1;
        } else {
            sig.2 += 1;
        }
    }

    Ok(SpanSummary {
        dim: rank,
        basis,
        signature: sig,
        residual: (retained, discarded),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lv(v: &[f64]) -> LieVector {
        LieVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn inner_product_metric_diagonal() {
        let e1 = LieVector::basis(6, 0);
        assert_relative_eq!(lie_inner(&e1, &e1).unwrap(), -1.0);
        let e2 = LieVector::basis(6, 1);
        let e3 = LieVector::basis(6, 2);
        assert_relative_eq!(lie_inner(&e2, &e3).unwrap(), 0.0);
        assert_relative_eq!(lie_inner(&e2, &e2).unwrap(), 1.0);
        let last = LieVector::basis(6, 5);
        assert_relative_eq!(lie_inner(&last, &last).unwrap(), -1.0);
    }

    #[test]
    fn inner_product_point_vs_unit_sphere() {
        // Point at the origin against the unit sphere at the origin (n = 3):
        // not in oriented contact, <,> = 1/2.
        let point = lv(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let sphere = lv(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(lie_inner(&point, &sphere).unwrap(), 0.5);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let a = lv(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = lv(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            lie_inner(&a, &b),
            Err(LieError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadric_membership() {
        // The point at infinity [(1,-1,0,0)] lies on the quadric.
        let inf = lv(&[1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(on_quadric(&inf, 1e-12).unwrap());
        let e2 = LieVector::basis(6, 1);
        assert!(!on_quadric(&e2, 1e-12).unwrap());
        // Unit sphere at the origin.
        let s = lv(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(on_quadric(&s, 1e-12).unwrap());
        let zero = LieVector::new(vec![0.0; 6]).unwrap();
        assert!(on_quadric(&zero, 1e-12).is_err());
    }

    #[test]
    fn line_through_contact_element() {
        // Point at the origin + plane x3 = 0: the contact element at the
        // origin with normal e_z.
        let point = lv(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let plane = lv(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let line = line_through(&point, &plane, 1e-10).unwrap();
        assert!(line.residual() < 1e-12);
    }

    #[test]
    fn line_through_rejects_dependent_points() {
        let inf = lv(&[1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            line_through(&inf, &inf, 1e-10),
            Err(LieError::DegenerateLine { .. })
        ));
    }

    #[test]
    fn line_through_rejects_non_orthogonal_points() {
        let point = lv(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let sphere = lv(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            line_through(&point, &sphere, 1e-10),
            Err(LieError::NotAContactLine { .. })
        ));
    }

    #[test]
    fn lie_transform_predicate() {
        let id = DMatrix::<f64>::identity(6, 6);
        assert!(is_lie_transform(&id, 1e-10));
        // Scalar matrices act trivially on projective space.
        assert!(is_lie_transform(&(&id * 2.0), 1e-10));
        // diag(-1,1,...,1) preserves the form.
        let mut refl = id.clone();
        refl[(0, 0)] = -1.0;
        assert!(is_lie_transform(&refl, 1e-10));
        // A shear fails G^T J G = c J.
        let mut shear = id.clone();
        shear[(0, 1)] = 1.0;
        assert!(!is_lie_transform(&shear, 1e-10));
    }

    #[test]
    fn random_transform_is_in_group() {
        for seed in 0..20 {
            let g = random_lie_transform(seed, 3, 0.8);
            let gtjg = g.matrix().transpose() * metric_matrix(6) * g.matrix();
            let resid = (&gtjg - metric_matrix(6)).norm();
            assert!(resid < 1e-10, "seed {seed}: residual {resid:.3e}");
        }
    }

    #[test]
    fn random_transform_zero_scale_is_identity() {
        let g = random_lie_transform(0, 3, 0.0);
        assert_relative_eq!(
            (g.matrix() - DMatrix::<f64>::identity(6, 6)).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn random_transform_deterministic() {
        let a = random_lie_transform(1, 4, 0.5);
        let b = random_lie_transform(1, 4, 0.5);
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn transform_preserves_quadric_and_lines() {
        let g = random_lie_transform(7, 3, 0.7);
        let s = lv(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let gs = g.apply(&s).unwrap();
        assert!(on_quadric(&gs, 1e-9).unwrap());

        let point = lv(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let plane = lv(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let line = line_through(&point, &plane, 1e-10).unwrap();
        let moved = g.apply_line(&line).unwrap();
        assert!(moved.residual() < 1e-9);
    }

    #[test]
    fn group_closure_under_product_and_inverse() {
        let g = random_lie_transform(3, 3, 0.6);
        let h = random_lie_transform(4, 3, 0.6);
        let gh = g.compose(&h).unwrap();
        assert!(is_lie_transform(gh.matrix(), 1e-9));
        let ginv = g.inverse();
        assert!(is_lie_transform(ginv.matrix(), 1e-9));
        let idish = g.compose(&ginv).unwrap();
        let d = idish.matrix() - DMatrix::<f64>::identity(6, 6);
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn moebius_predicate() {
        let id = LieTransform::identity(3);
        assert!(is_moebius(&id, 1e-10));
        // A block transform on coordinates 1..n+2 fixes e_{n+3}.
        let mut block = DMatrix::<f64>::identity(6, 6);
        let c = 0.3_f64.cos();
        let s = 0.3_f64.sin();
        block[(1, 1)] = c;
        block[(1, 2)] = -s;
        block[(2, 1)] = s;
        block[(2, 2)] = c;
        let g = LieTransform::from_matrix(block, 1e-10).unwrap();
        assert!(is_moebius(&g, 1e-10));
        // Generic random transforms mix the last coordinate.
        let mut seen_non_moebius = false;
        for seed in 0..10 {
            let g = random_lie_transform(seed, 3, 0.6);
            if !is_moebius(&g, 1e-6) {
                seen_non_moebius = true;
            }
        }
        assert!(seen_non_moebius);
    }

    #[test]
    fn span_of_identical_samples_is_one_dimensional() {
        let s = lv(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let sum = span_summary(&[s.clone(), s.clone(), s.scaled(3.0)], 1e-6).unwrap();
        assert_eq!(sum.dim, 1);
        assert_eq!(sum.signature, (0, 0, 1));
    }

    #[test]
    fn span_signature_of_mixed_basis() {
        let samples = vec![
            LieVector::basis(6, 0),
            LieVector::basis(6, 1),
            LieVector::basis(6, 5),
        ];
        let sum = span_summary(&samples, 1e-6).unwrap();
        assert_eq!(sum.dim, 3);
        assert_eq!(sum.signature, (1, 2, 0));
    }

    #[test]
    fn span_of_circle_focal_map() {
        // 200 samples of u -> [e1 + u], u on the unit circle in the (e2,e3)
        // block (n = 3): a 3-dimensional span of signature (2,1).
        let samples: Vec<LieVector> = (0..200)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64) / 200.0;
                lv(&[1.0, t.cos(), t.sin(), 0.0, 0.0, 0.0])
            })
            .collect();
        let sum = span_summary(&samples, 1e-6).unwrap();
        assert_eq!(sum.dim, 3);
        assert_eq!(sum.signature, (2, 1, 0));
    }

    #[test]
    fn span_rank_invariant_under_transform() {
        let samples: Vec<LieVector> = (0..40)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64) / 40.0;
                lv(&[1.0, t.cos(), t.sin(), 0.0, 0.0, 0.0])
            })
            .collect();
        let base = span_summary(&samples, 1e-6).unwrap();
        for seed in 0..10 {
            let g = random_lie_transform(seed, 3, 0.6);
            let moved: Vec<LieVector> = samples.iter().map(|s| g.apply(s).unwrap()).collect();
            let sum = span_summary(&moved, 1e-6).unwrap();
            assert_eq!(sum.dim, base.dim, "seed {seed}");
        }
    }

    #[test]
    fn inner_product_invariance_under_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..10 {
            let g = random_lie_transform(seed, 3, 0.8);
            for _ in 0..20 {
                let x = lv(&std::array::from_fn::<f64, 6, _>(|_| {
                    rng.random_range(-1.0..1.0)
                }));
                let y = lv(&std::array::from_fn::<f64, 6, _>(|_| {
                    rng.random_range(-1.0..1.0)
                }));
                let before = lie_inner(&x, &y).unwrap();
                let after = lie_inner(&g.apply(&x).unwrap(), &g.apply(&y).unwrap()).unwrap();
                assert!(
                    (before - after).abs() <= 1e-9 * (1.0 + before.abs()),
                    "seed {seed}: {before} vs {after}"
                );
            }
        }
    }
}
