//! Cyclides of characteristic (p, q): the standard model on the quadric and
//! explicit Lie equivalences between cyclides of the same characteristic.
//!
//! The standard cyclide is the family of all lines joining a point of
//! `E ∩ Q^{n+1}` to a point of `E^⊥ ∩ Q^{n+1}`, where `E` is a subspace of
//! signature (q+1, 1): concretely `(u, v) ↦ [e_1 + u, v + e_{n+3}]` with
//! `u ∈ S^q` in the first spacelike block and `v ∈ S^p` in the second.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{LieError, Result};
use crate::legendre::{LegendreMap, Provenance};
use crate::lie::{inner_raw, LieTransform, SpanSummary};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Characteristic of a cyclide: two curvature spheres of multiplicities
/// `p` and `q`, hypersurface dimension `n - 1 = p + q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclideSpec {
    pub p: usize,
    pub q: usize,
}

impl CyclideSpec {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p < 1 || q < 1 {
            return Err(LieError::InvalidArgument(
                "cyclide characteristic requires p, q >= 1".into(),
            ));
        }
        Ok(Self { p, q })
    }

    pub fn chart_dim(&self) -> usize {
        self.p + self.q + 1
    }
}

/// Interior hyperspherical chart of `S^k`: first `k - 1` polar angles away
/// from the axes, last angle a full (periodic) turn.
pub(crate) fn sphere_chart(k: usize) -> (Vec<(f64, f64)>, Vec<bool>) {
    let mut domain = vec![(0.35, std::f64::consts::PI - 0.35); k.saturating_sub(1)];
    let mut periodic = vec![false; k.saturating_sub(1)];
    domain.push((0.0, TAU));
    periodic.push(true);
    (domain, periodic)
}

pub(crate) fn sphere_chart_eval(angles: &[f64]) -> DVector<f64> {
    let k = angles.len();
    let mut x = DVector::zeros(k + 1);
    let mut s = 1.0;
    for i in 0..k - 1 {
        x[i] = s * angles[i].cos();
        s *= angles[i].sin();
    }
    x[k - 1] = s * angles[k - 1].cos();
    x[k] = s * angles[k - 1].sin();
    x
}

/// The standard cyclide of characteristic (p, q) as a Legendre map over
/// `S^q × S^p` charts. Every generated line is a contact line by
/// construction (the two blocks are orthogonal).
pub fn cyclide(spec: CyclideSpec) -> LegendreMap {
    let (p, q) = (spec.p, spec.q);
    let n = spec.chart_dim();
    let d = n + 3;
    let (dom_q, per_q) = sphere_chart(q);
    let (dom_p, per_p) = sphere_chart(p);
    let mut domain = dom_q;
    domain.extend(dom_p);
    let mut periodic = per_q;
    periodic.extend(per_p);

    let line_fn = Arc::new(move |b: &[f64]| {
        let u = sphere_chart_eval(&b[..q]);
        let v = sphere_chart_eval(&b[q..]);
        let mut y1 = DVector::zeros(d);
        y1[0] = 1.0;
        y1.rows_mut(1, q + 1).copy_from(&u);
        let mut y3 = DVector::zeros(d);
        y3.rows_mut(q + 2, p + 1).copy_from(&v);
        y3[d - 1] = 1.0;
        Ok((y1, y3))
    });

    LegendreMap::from_parts(
        n,
        domain,
        1e-4 * TAU,
        line_fn,
        Provenance::ZooAnalytic("cyclide"),
    )
    .with_periodicity(periodic)
}

/// The two focal-subspace summaries of a cyclide-like Legendre map, labeled
/// by curvature-sphere multiplicity. For characteristic (p, q) the branch of
/// multiplicity p spans a (q+2)-dimensional subspace of signature (q+1, 1).
#[derive(Debug, Clone)]
pub struct CyclideFrames {
    pub branches: Vec<(usize, SpanSummary)>,
    pub chart_dim: usize,
}

impl CyclideFrames {
    pub fn new(chart_dim: usize, branches: Vec<(usize, SpanSummary)>) -> Result<Self> {
        if branches.len() != 2 {
            return Err(LieError::InvalidArgument(format!(
                "cyclide frames need exactly two branches, got {}",
                branches.len()
            )));
        }
        Ok(Self {
            branches,
            chart_dim,
        })
    }

    /// Multiplicities `(p, q)` read off the branches, larger first.
    pub fn characteristic(&self) -> (usize, usize) {
        let a = self.branches[0].0;
        let b = self.branches[1].0;
        (a.max(b), a.min(b))
    }
}

/// Pseudo-orthonormal basis of a span with signature `(dim - 1, 1)`:
/// spacelike columns first, the timelike column last.
fn adapted_basis(span: &SpanSummary) -> Result<(Vec<DVector<f64>>, DVector<f64>)> {
    let k = span.dim;
    let mut gram = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = inner_raw(span.basis[i].coords(), span.basis[j].coords());
        }
    }
    let eig = gram.symmetric_eigen();
    let mut spacelike = Vec::new();
    let mut timelike = None;
    let d = span.basis[0].dim();
    for i in 0..k {
        let l = eig.eigenvalues[i];
        let mut v = DVector::zeros(d);
        for j in 0..k {
            v += span.basis[j].coords() * eig.eigenvectors[(j, i)];
        }
        if l > 1e-8 {
            spacelike.push(v / l.sqrt());
        } else if l < -1e-8 {
            if timelike.replace(v / (-l).sqrt()).is_some() {
                return Err(LieError::NotEquivalent(
                    "focal span has more than one timelike direction".into(),
                ));
            }
        } else {
            return Err(LieError::NotEquivalent(
                "focal span is degenerate under the Lie form".into(),
            ));
        }
    }
    let timelike = timelike
        .ok_or_else(|| LieError::NotEquivalent("focal span has no timelike direction".into()))?;
    Ok((spacelike, timelike))
}

/// Assembles the Lie frame adapted to a focal-subspace pair: the branch with
/// the larger span fills the leading block.
fn adapted_frame(frames: &CyclideFrames) -> Result<DMatrix<f64>> {
    let d = frames.chart_dim + 3;
    let mut by_dim = frames.branches.clone();
    by_dim.sort_by_key(|(_, s)| std::cmp::Reverse(s.dim));
    let (_, ref big) = by_dim[0];
    let (_, ref small) = by_dim[1];
    if big.dim + small.dim != d {
        return Err(LieError::NotEquivalent(format!(
            "focal spans do not decompose the ambient space: {} + {} != {}",
            big.dim, small.dim, d
        )));
    }
    let (s_e, t_e) = adapted_basis(big)?;
    let (s_perp, t_perp) = adapted_basis(small)?;
    let mut c = DMatrix::zeros(d, d);
    c.set_column(0, &t_e);
    for (i, v) in s_e.iter().enumerate() {
        c.set_column(1 + i, v);
    }
    for (i, v) in s_perp.iter().enumerate() {
        c.set_column(1 + s_e.len() + i, v);
    }
    c.set_column(d - 1, &t_perp);
    Ok(c)
}

/// Constructs a Lie transformation carrying the focal-subspace pair of one
/// cyclide onto that of another with the same characteristic. The stabilizer
/// freedom is not fixed; any pair-preserving element satisfies the line
/// membership contract.
pub fn cyclide_equivalence(a: &CyclideFrames, b: &CyclideFrames) -> Result<LieTransform> {
    if a.characteristic() != b.characteristic() {
        return Err(LieError::NotEquivalent(format!(
            "characteristics differ: {:?} vs {:?}",
            a.characteristic(),
            b.characteristic()
        )));
    }
    if a.chart_dim != b.chart_dim {
        return Err(LieError::NotEquivalent("chart dimensions differ".into()));
    }
    let ca = LieTransform::from_matrix(adapted_frame(a)?, 1e-6)?;
    let cb = LieTransform::from_matrix(adapted_frame(b)?, 1e-6)?;
    cb.compose(&ca.inverse())
}

/// Largest membership residual of transformed sample lines against a target
/// focal-subspace pair: for each line, both the `E` and `E^⊥` intersections
/// must exist (smallest principal-angle sine against each span).
pub fn line_membership_residual(
    g: &LieTransform,
    source: &LegendreMap,
    samples: &[Vec<f64>],
    target: &CyclideFrames,
) -> Result<f64> {
    let d = target.chart_dim + 3;
    let mut spans: Vec<DMatrix<f64>> = Vec::new();
    for (_, s) in &target.branches {
        let mut u = DMatrix::zeros(d, s.dim);
        for (i, v) in s.basis.iter().enumerate() {
            u.set_column(i, v.coords());
        }
        spans.push(u);
    }
    let mut worst = 0.0_f64;
    for b in samples {
        let line = source.line_at(b)?;
        let moved = g.apply_line(&line)?;
        let mut w = DMatrix::zeros(d, 2);
        w.set_column(0, &(moved.y1().coords() / moved.y1().norm()));
        w.set_column(1, &(moved.y2().coords() / moved.y2().norm()));
        let qr = w.qr();
        let wq = qr.q();
        for u in &spans {
            let resid = &wq - u * (u.transpose() * &wq);
            let svs = resid.singular_values();
            worst = worst.max(svs[svs.len() - 1]);
        }
    }
    Ok(worst)
}
