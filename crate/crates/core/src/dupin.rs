//! Numerical Dupin verification: curvature-line integration, constancy of
//! curvature spheres along leaves, focal-subspace analysis, the reducibility
//! criterion, and the timelike-line isoparametric criterion.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curvature::{curvature_spheres, CurvatureSphere};
use crate::error::{LieError, Result};
use crate::legendre::LegendreMap;
use crate::lie::{inner_raw, span_summary, LieVector, SpanSummary};

/// Tunable thresholds for Dupin analyses. Deviations below `deviation_yes`
/// count as constant, above `deviation_no` as non-constant; the gap is
/// reported as inconclusive.
#[derive(Debug, Clone)]
pub struct DupinSettings {
    pub cluster_tol: f64,
    pub rank_tol: f64,
    pub deviation_yes: f64,
    pub deviation_no: f64,
    pub leaf_length: f64,
    pub leaf_step: f64,
    pub leaf_starts: usize,
    pub witness_residual: f64,
    pub seed: u64,
}

impl Default for DupinSettings {
    fn default() -> Self {
        Self {
            cluster_tol: crate::curvature::DEFAULT_CLUSTER_TOL,
            rank_tol: crate::lie::DEFAULT_RANK_TOL,
            deviation_yes: 1e-5,
            deviation_no: 1e-3,
            leaf_length: 1.0,
            leaf_step: 0.02,
            leaf_starts: 3,
            witness_residual: 1e-6,
            seed: 0,
        }
    }
}

/// Why a leaf integration stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeafTermination {
    /// The requested arclength was covered.
    Completed,
    /// The path reached the domain boundary.
    Boundary,
    /// The tracked eigenvalue collided with a neighbor (multiplicity change).
    EigenvalueCollision,
    /// The principal direction turned faster than the 5° per-step bound.
    DirectionBreak,
}

/// An integral path of a principal direction field (or an in-distribution walk
/// for higher-multiplicity principal spaces), with the tracked curvature
/// sphere at every sample.
#[derive(Debug, Clone)]
pub struct LeafPath {
    pub points: Vec<Vec<f64>>,
    pub sphere_index: usize,
    pub arclength: f64,
    pub termination: LeafTermination,
    /// Tracked curvature sphere at each path point (unit representatives).
    pub spheres: Vec<LieVector>,
}

/// Projective angle of the pencil coordinate `r` (with `r = ∞` at `π/2`-type
/// angle zero of `β`); used for nearest-branch matching.
fn r_angle(r: f64) -> f64 {
    if r.is_infinite() {
        0.0
    } else {
        let mut t = 1.0_f64.atan2(r);
        if t < 0.0 {
            t += std::f64::consts::PI;
        }
        t
    }
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % std::f64::consts::PI;
    d.min(std::f64::consts::PI - d)
}

/// Picks the sphere closest to a reference branch: nearest `r` on the
/// projective line, curvature-sphere distance as tie-break.
fn nearest_branch(spheres: &[CurvatureSphere], r_ref: f64, k_ref: &LieVector) -> usize {
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for (i, s) in spheres.iter().enumerate() {
        let score =
            angle_dist(r_angle(s.r), r_angle(r_ref)) + 0.1 * s.point.projective_distance(k_ref);
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

/// Tracks all curvature-sphere branches along an ordered sample sequence.
/// The branch labels are fixed by the ordering at the first sample
/// (ascending `r`, infinite last). Fails when the branch count changes or a
/// match jumps too far.
pub fn track_branches(
    map: &LegendreMap,
    samples: &[Vec<f64>],
    cluster_tol: f64,
) -> Result<Vec<Vec<CurvatureSphere>>> {
    if samples.is_empty() {
        return Err(LieError::InvalidArgument("no samples given".into()));
    }
    let first = curvature_spheres(map, &samples[0], cluster_tol)?;
    let g = first.len();
    let mut branches: Vec<Vec<CurvatureSphere>> = first.into_iter().map(|s| vec![s]).collect();
    for b in &samples[1..] {
        let spheres = curvature_spheres(map, b, cluster_tol)?;
        if spheres.len() != g {
            return Err(LieError::TrackingLost(format!(
                "branch count changed from {g} to {} at {b:?}",
                spheres.len()
            )));
        }
        let mut used = vec![false; g];
        for branch in branches.iter_mut() {
            let prev = branch.last().unwrap();
            let mut best = usize::MAX;
            let mut best_score = f64::INFINITY;
            for (i, s) in spheres.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let score = angle_dist(r_angle(s.r), r_angle(prev.r))
                    + 0.1 * s.point.projective_distance(&prev.point);
                if score < best_score {
                    best_score = score;
                    best = i;
                }
            }
            if best == usize::MAX || best_score > 0.8 {
                return Err(LieError::TrackingLost(format!(
                    "no continuous branch match at {b:?} (score {best_score:.3})"
                )));
            }
            used[best] = true;
            branch.push(spheres[best].clone());
        }
    }
    Ok(branches)
}

/// Metric used to normalize leaf steps: the first fundamental form of the
/// Euclidean projection when available, otherwise the metric induced by the
/// projected line differentials.
fn leaf_metric(map: &LegendreMap, b: &[f64]) -> Result<DMatrix<f64>> {
    if let Some(f) = map.euclidean_source() {
        let df = f.jacobian(b)?;
        Ok(df.transpose() * df)
    } else {
        let (_, _, b1, b0) = map.projected_jacobians(b)?;
        Ok(b1.transpose() * &b1 + b0.transpose() * &b0)
    }
}

fn metric_norm(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)].max(0.0).sqrt()
}

struct FieldEval {
    direction: DVector<f64>,
    multiplicity: usize,
}

fn principal_direction(
    map: &LegendreMap,
    b: &[f64],
    r_ref: f64,
    k_ref: &LieVector,
    prev_dir: &DVector<f64>,
    cluster_tol: f64,
) -> Result<FieldEval> {
    let spheres = curvature_spheres(map, b, cluster_tol)?;
    let idx = nearest_branch(&spheres, r_ref, k_ref);
    let s = &spheres[idx];
    if s.multiplicity != 1 {
        return Ok(FieldEval {
            direction: prev_dir.clone(),
            multiplicity: s.multiplicity,
        });
    }
    let mut dir = s.principal_basis[0].clone();
    if dir.dot(prev_dir) < 0.0 {
        dir.neg_mut();
    }
    Ok(FieldEval {
        direction: dir,
        multiplicity: 1,
    })
}

/// Integrates the unit principal direction field of the indexed curvature
/// sphere from `b0` (classical fourth-order steps, sign continuity). A start
/// on a higher-multiplicity sphere falls back to a seeded in-distribution
/// walk, since the leaf is then a foliation leaf rather than an integral
/// curve. Fails outright only when no step can be taken.
pub fn integrate_curvature_line(
    map: &LegendreMap,
    b0: &[f64],
    sphere_index: usize,
    arclength: f64,
    step: f64,
    settings: &DupinSettings,
) -> Result<LeafPath> {
    if !map.contains(b0) {
        return Err(LieError::OutOfDomain { param: b0.to_vec() });
    }
    let spheres = curvature_spheres(map, b0, settings.cluster_tol)?;
    if sphere_index >= spheres.len() {
        return Err(LieError::InvalidArgument(format!(
            "sphere index {sphere_index} out of range (g = {})",
            spheres.len()
        )));
    }
    let start = spheres[sphere_index].clone();
    if start.multiplicity > 1 {
        return eigen_walk(map, b0, sphere_index, &start, arclength, step, settings);
    }

    let mut points = vec![b0.to_vec()];
    let mut tracked = vec![start.point.clone()];
    let mut r_ref = start.r;
    let mut k_ref = start.point.clone();
    let mut prev_dir = start.principal_basis[0].clone();
    let mut total = 0.0_f64;
    let max_turn = 5.0_f64.to_radians();

    let mut b = b0.to_vec();
    let h_min = step / 64.0;
    let mut h_cur = step;
    while total < arclength {
        let metric = leaf_metric(map, &b)?;
        // Classical RK4 on the unit field; stages reuse the step-start
        // reference branch and sign.
        let eval_dir = |p: &[f64]| -> Result<DVector<f64>> {
            if !map.contains(p) {
                return Err(LieError::OutOfDomain { param: p.to_vec() });
            }
            let fe = principal_direction(map, p, r_ref, &k_ref, &prev_dir, settings.cluster_tol)?;
            if fe.multiplicity != 1 {
                return Err(LieError::PathTruncated {
                    reason: "eigenvalue collision".into(),
                });
            }
            let n = metric_norm(&metric, &fe.direction);
            Ok(fe.direction / n.max(1e-300))
        };
        let h = h_cur.min(arclength - total).max(1e-9);
        let next = (|| -> Result<Vec<f64>> {
            let k1 = eval_dir(&b)?;
            let p2: Vec<f64> = b
                .iter()
                .zip(k1.iter())
                .map(|(x, d)| x + 0.5 * h * d)
                .collect();
            let k2 = eval_dir(&p2)?;
            let p3: Vec<f64> = b
                .iter()
                .zip(k2.iter())
                .map(|(x, d)| x + 0.5 * h * d)
                .collect();
            let k3 = eval_dir(&p3)?;
            let p4: Vec<f64> = b.iter().zip(k3.iter()).map(|(x, d)| x + h * d).collect();
            let k4 = eval_dir(&p4)?;
            Ok(b.iter()
                .enumerate()
                .map(|(i, x)| x + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        })();
        let next = match next {
            Ok(p) => p,
            Err(LieError::OutOfDomain { .. }) => {
                return finish(
                    points,
                    tracked,
                    sphere_index,
                    total,
                    LeafTermination::Boundary,
                )
            }
            Err(LieError::PathTruncated { .. }) if total > 0.0 => {
                return finish(
                    points,
                    tracked,
                    sphere_index,
                    total,
                    LeafTermination::EigenvalueCollision,
                )
            }
            Err(e) => return Err(e),
        };
        if !map.contains(&next) {
            return finish(
                points,
                tracked,
                sphere_index,
                total,
                LeafTermination::Boundary,
            );
        }
        let spheres = curvature_spheres(map, &next, settings.cluster_tol)?;
        let idx = nearest_branch(&spheres, r_ref, &k_ref);
        let s = &spheres[idx];
        if s.multiplicity != 1 {
            return finish(
                points,
                tracked,
                sphere_index,
                total,
                LeafTermination::EigenvalueCollision,
            );
        }
        let mut dir = s.principal_basis[0].clone();
        if dir.dot(&prev_dir) < 0.0 {
            dir.neg_mut();
        }
        let cos = dir.dot(&prev_dir) / (dir.norm() * prev_dir.norm());
        if cos.clamp(-1.0, 1.0).acos() > max_turn {
            // The field turns faster than the per-step bound: refine the
            // step before giving up on the leaf.
            if h_cur > h_min {
                h_cur = (h_cur / 2.0).max(h_min);
                continue;
            }
            return finish(
                points,
                tracked,
                sphere_index,
                total,
                LeafTermination::DirectionBreak,
            );
        }
        r_ref = s.r;
        k_ref = s.point.clone();
        prev_dir = dir;
        total += h;
        b = next;
        points.push(b.clone());
        tracked.push(k_ref.clone());
        h_cur = (h_cur * 1.5).min(step);
    }
    finish(
        points,
        tracked,
        sphere_index,
        total,
        LeafTermination::Completed,
    )
}

fn finish(
    points: Vec<Vec<f64>>,
    spheres: Vec<LieVector>,
    sphere_index: usize,
    arclength: f64,
    termination: LeafTermination,
) -> Result<LeafPath> {
    if points.len() < 2 {
        return Err(LieError::PathTruncated {
            reason: match termination {
                LeafTermination::EigenvalueCollision => {
                    "no simple eigenvalue at the start point".into()
                }
                LeafTermination::Boundary => "start point too close to the boundary".into(),
                _ => "no step possible".into(),
            },
        });
    }
    Ok(LeafPath {
        points,
        sphere_index,
        arclength,
        termination,
        spheres,
    })
}

/// Random in-distribution walk through a principal space of multiplicity
/// `m > 1`: any path tangent to the distribution stays in the leaf, which is
/// all the constancy check needs.
fn eigen_walk(
    map: &LegendreMap,
    b0: &[f64],
    sphere_index: usize,
    start: &CurvatureSphere,
    arclength: f64,
    step: f64,
    settings: &DupinSettings,
) -> Result<LeafPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0x51ab);
    let mut points = vec![b0.to_vec()];
    let mut tracked = vec![start.point.clone()];
    let mut r_ref = start.r;
    let mut k_ref = start.point.clone();
    let k = map.param_dim();
    let mut prev_dir = start.principal_basis[0].clone();
    let mut total = 0.0;
    let mut b = b0.to_vec();
    while total < arclength {
        let spheres = curvature_spheres(map, &b, settings.cluster_tol)?;
        let idx = nearest_branch(&spheres, r_ref, &k_ref);
        let s = &spheres[idx];
        if s.multiplicity < 2 {
            return finish(
                points,
                tracked,
                sphere_index,
                total,
                LeafTermination::EigenvalueCollision,
            );
        }
        // Project the previous direction into the current distribution and
        // stir with a small random in-space component.
        let mut dir = DVector::zeros(k);
        for basis in &s.principal_basis {
            dir += basis * basis.dot(&prev_dir);
        }
        for basis in &s.principal_basis {
            dir += basis * (0.3 * rng.random_range(-1.0..1.0_f64));
        }
        if dir.norm() < 1e-12 {
            dir = s.principal_basis[0].clone();
        }
        let metric = leaf_metric(map, &b)?;
        let n = metric_norm(&metric, &dir);
        dir /= n.max(1e-300);
        let h = step.min(arclength - total).max(1e-9);
        let next: Vec<f64> = b.iter().zip(dir.iter()).map(|(x, d)| x + h * d).collect();
        if !map.contains(&next) {
            return finish(
                points,
                tracked,
                sphere_index,
                total,
                LeafTermination::Boundary,
            );
        }
        r_ref = s.r;
        k_ref = s.point.clone();
        prev_dir = dir;
        total += h;
        b = next;
        points.push(b.clone());
        tracked.push(k_ref.clone());
    }
    finish(
        points,
        tracked,
        sphere_index,
        total,
        LeafTermination::Completed,
    )
}

/// Maximum projective distance of the tracked curvature sphere from its value
/// at the path start; zero means exactly Dupin along this leaf.
pub fn dupin_deviation(_map: &LegendreMap, path: &LeafPath) -> f64 {
    let k0 = &path.spheres[0];
    path.spheres
        .iter()
        .map(|k| k.projective_distance(k0))
        .fold(0.0, f64::max)
}

/// Verdict of [`dupin_verify`].
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub enum DupinVerdict {
    #[serde(rename = "proper-Dupin")]
    ProperDupin,
    #[serde(rename = "Dupin-mixed-g")]
    DupinMixedG,
    #[serde(rename = "not-Dupin")]
    NotDupin,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

/// Per-point record of a grid analysis.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PointRecord {
    pub param: Vec<f64>,
    pub g: usize,
    pub curvatures: Vec<f64>,
    pub stable: bool,
}

/// One leaf-constancy check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LeafCheck {
    pub start: Vec<f64>,
    pub sphere_index: usize,
    pub deviation: f64,
    pub arclength: f64,
    pub termination: String,
}

/// Grid-level Dupin analysis.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DupinAnalysis {
    pub points: Vec<PointRecord>,
    pub leaves: Vec<LeafCheck>,
    pub max_deviation: f64,
    pub g_min: usize,
    pub g_max: usize,
    pub all_stable: bool,
    pub verdict: DupinVerdict,
}

/// Row-major sample grid over the map's domain, shrunk by a relative margin.
pub fn grid_samples(domain: &[(f64, f64)], counts: &[usize], margin: f64) -> Vec<Vec<f64>> {
    let mut points = vec![vec![]];
    for (axis, (lo, hi)) in domain.iter().enumerate() {
        let count = counts[axis.min(counts.len() - 1)].max(1);
        let mut next = Vec::with_capacity(points.len() * count);
        for p in &points {
            for i in 0..count {
                let t = if count == 1 {
                    0.5
                } else {
                    margin + (1.0 - 2.0 * margin) * (i as f64) / ((count - 1) as f64)
                };
                let mut q = p.clone();
                q.push(lo + t * (hi - lo));
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Serpentine reordering of a row-major grid: consecutive samples are always
/// grid neighbors, which keeps branch tracking continuous.
pub fn serpentine_order(counts: &[usize]) -> Vec<usize> {
    let total: usize = counts.iter().product();
    let k = counts.len();
    let mut order = Vec::with_capacity(total);
    let mut idx = vec![0usize; k];
    let mut dir = vec![1i64; k];
    loop {
        let mut flat = 0;
        for a in 0..k {
            flat = flat * counts[a] + idx[a];
        }
        order.push(flat);
        // Increment the innermost axis in its current direction, carrying
        // outward with direction flips.
        let mut axis = k as i64 - 1;
        loop {
            if axis < 0 {
                return order;
            }
            let a = axis as usize;
            let next = idx[a] as i64 + dir[a];
            if next < 0 || next >= counts[a] as i64 {
                dir[a] = -dir[a];
                axis -= 1;
            } else {
                idx[a] = next as usize;
                break;
            }
        }
    }
}

/// Verifies the Dupin property over a sample grid: per-point curvature-sphere
/// counts with clustering-stability flags, leaf-constancy deviations for each
/// branch from several interior starts, and an overall verdict.
pub fn dupin_verify(
    map: &LegendreMap,
    counts: &[usize],
    settings: &DupinSettings,
) -> Result<DupinAnalysis> {
    let samples = grid_samples(map.domain(), counts, 0.08);
    let records: Vec<Result<PointRecord>> = samples
        .par_iter()
        .map(|b| {
            let spheres = curvature_spheres(map, b, settings.cluster_tol)?;
            Ok(PointRecord {
                param: b.clone(),
                g: spheres.len(),
                curvatures: spheres.iter().map(|s| s.r).collect(),
                stable: spheres.iter().all(|s| s.stable),
            })
        })
        .collect();
    let mut points = Vec::with_capacity(records.len());
    for r in records {
        points.push(r?);
    }
    let g_min = points.iter().map(|p| p.g).min().unwrap_or(0);
    let g_max = points.iter().map(|p| p.g).max().unwrap_or(0);
    let all_stable = points.iter().all(|p| p.stable);

    // Leaf starts: evenly spread interior points.
    let starts = grid_samples(map.domain(), &[settings.leaf_starts.max(1)], 0.25);
    let mut tasks = Vec::new();
    for start in &starts {
        let g_here = curvature_spheres(map, start, settings.cluster_tol)?.len();
        for index in 0..g_here {
            tasks.push((start.clone(), index));
        }
    }
    let leaves: Vec<LeafCheck> = tasks
        .par_iter()
        .map(|(start, index)| {
            match integrate_curvature_line(
                map,
                start,
                *index,
                settings.leaf_length,
                settings.leaf_step,
                settings,
            ) {
                Ok(path) => {
                    let deviation = dupin_deviation(map, &path);
                    LeafCheck {
                        start: start.clone(),
                        sphere_index: *index,
                        deviation,
                        arclength: path.arclength,
                        termination: format!("{:?}", path.termination),
                    }
                }
                Err(e) => LeafCheck {
                    start: start.clone(),
                    sphere_index: *index,
                    deviation: f64::NAN,
                    arclength: 0.0,
                    termination: format!("failed: {e}"),
                },
            }
        })
        .collect();

    let max_deviation = leaves
        .iter()
        .filter(|l| l.deviation.is_finite())
        .map(|l| l.deviation)
        .fold(0.0, f64::max);
    let verdict = if max_deviation > settings.deviation_no {
        DupinVerdict::NotDupin
    } else if max_deviation < settings.deviation_yes {
        if g_min == g_max && all_stable {
            DupinVerdict::ProperDupin
        } else {
            DupinVerdict::DupinMixedG
        }
    } else {
        DupinVerdict::Inconclusive
    };
    Ok(DupinAnalysis {
        points,
        leaves,
        max_deviation,
        g_min,
        g_max,
        all_stable,
        verdict,
    })
}

/// Span of the indexed curvature-sphere branch over a serpentine-tracked
/// sample set. For a cyclide of characteristic (p, q) the multiplicity-p
/// branch spans a (q+2)-dimensional subspace of signature (q+1, 1).
pub fn focal_span(
    map: &LegendreMap,
    sphere_index: usize,
    samples: &[Vec<f64>],
    settings: &DupinSettings,
) -> Result<SpanSummary> {
    let branches = track_branches(map, samples, settings.cluster_tol)?;
    let branch = branches
        .get(sphere_index)
        .ok_or_else(|| LieError::InvalidArgument(format!("no branch {sphere_index}")))?;
    let ks: Vec<LieVector> = branch.iter().map(|s| s.point.clone()).collect();
    span_summary(&ks, settings.rank_tol)
}

/// Extracts the two focal-subspace summaries of a cyclide-like map (exactly
/// two tracked curvature-sphere branches), labeled by multiplicity; the input
/// to [`crate::zoo::cyclide_equivalence`].
pub fn cyclide_frames(
    map: &LegendreMap,
    samples: &[Vec<f64>],
    settings: &DupinSettings,
) -> Result<crate::zoo::CyclideFrames> {
    let branches = track_branches(map, samples, settings.cluster_tol)?;
    if branches.len() != 2 {
        return Err(LieError::NotEquivalent(format!(
            "expected two curvature-sphere branches, found {}",
            branches.len()
        )));
    }
    let mut out = Vec::with_capacity(2);
    for branch in &branches {
        let ks: Vec<LieVector> = branch.iter().map(|s| s.point.clone()).collect();
        out.push((
            branch[0].multiplicity,
            span_summary(&ks, settings.rank_tol)?,
        ));
    }
    crate::zoo::CyclideFrames::new(map.chart_dim(), out)
}

/// Outcome of [`reducibility_test`].
#[derive(Debug, Clone)]
pub struct ReducibilityReport {
    pub reducible: bool,
    /// Span summary per curvature-sphere branch.
    pub witnesses: Vec<SpanSummary>,
    /// Branches are reducibility witnesses iff their span dimension is at
    /// most this (codimension two in homogeneous coordinates).
    pub max_witness_dim: usize,
}

/// A proper Dupin submanifold is reducible iff some curvature-sphere map
/// lies in a projective subspace of codimension at least two, i.e. some
/// branch span has dimension at most `n + 1`.
pub fn reducibility_test(
    map: &LegendreMap,
    samples: &[Vec<f64>],
    settings: &DupinSettings,
) -> Result<ReducibilityReport> {
    let branches = track_branches(map, samples, settings.cluster_tol)?;
    let max_witness_dim = map.chart_dim() + 1;
    let mut witnesses = Vec::with_capacity(branches.len());
    for branch in &branches {
        let ks: Vec<LieVector> = branch.iter().map(|s| s.point.clone()).collect();
        witnesses.push(span_summary(&ks, settings.rank_tol)?);
    }
    let reducible = witnesses.iter().any(|s| s.dim <= max_witness_dim);
    Ok(ReducibilityReport {
        reducible,
        witnesses,
        max_witness_dim,
    })
}

/// A verified witness for the isoparametric criterion: points `P_i` on a
/// timelike line with `<K_i(b), P_i> = 0` along every branch.
#[derive(Debug, Clone)]
pub struct CriterionWitness {
    /// One point per curvature-sphere branch, unit representatives.
    pub points: Vec<LieVector>,
    /// Two of the points scaled to `<P, P> = -4`, spanning the line; the
    /// off-diagonal Gram entry is normalized to be non-positive.
    pub line_basis: [LieVector; 2],
    /// Gram matrix of the Lie form on `line_basis`.
    pub gram: [[f64; 2]; 2],
    /// `max_i max_b |<K̂_i(b), P̂_i>|`.
    pub max_residual: f64,
}

/// Outcome of [`isoparametric_criterion`].
#[derive(Debug, Clone)]
pub enum IsoparametricOutcome {
    /// A witness satisfying the residual bound was found.
    Witness(CriterionWitness),
    /// No witness can exist; `certificate` is the violated margin (smallest
    /// orthogonality residual or missing timelike direction).
    NoWitness { certificate: f64, reason: String },
    /// The search was inconclusive; best candidate residual reported.
    Indeterminate { best_residual: f64 },
}

struct BranchNull {
    basis: DMatrix<f64>, // d × dim, Euclidean-orthonormal columns
    gram: DMatrix<f64>,  // restricted Lie form
}

fn branch_nullspaces(
    branches: &[Vec<CurvatureSphere>],
    d: usize,
    rank_tol: f64,
) -> Result<Vec<BranchNull>> {
    let mut out = Vec::with_capacity(branches.len());
    let j = crate::lie::metric_signs(d);
    for branch in branches {
        let mut m = DMatrix::zeros(branch.len(), d);
        for (row, s) in branch.iter().enumerate() {
            let k = s.point.coords();
            for c in 0..d {
                m[(row, c)] = k[c] * j[c];
            }
        }
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let top = svd.singular_values[0];
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > rank_tol * top)
            .count();
        let dim = d - rank;
        let mut basis = DMatrix::zeros(d, dim);
        for (i, row) in (rank..d).enumerate() {
            basis.set_column(i, &v_t.row(row).transpose());
        }
        let mut gram = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                gram[(a, b)] =
                    inner_raw(&basis.column(a).into_owned(), &basis.column(b).into_owned());
            }
        }
        out.push(BranchNull { basis, gram });
    }
    Ok(out)
}

/// Max orthogonality residual of a candidate point against a branch.
fn branch_residual(branch: &[CurvatureSphere], p: &DVector<f64>) -> f64 {
    let pn = p / p.norm();
    branch
        .iter()
        .map(|s| inner_raw(s.point.coords(), &pn).abs())
        .fold(0.0, f64::max)
}

/// Closest unit vector of a 2-plane (orthonormal columns `w`) to a subspace
/// (orthonormal columns `u`), with its distance.
fn plane_subspace_meet(w: &DMatrix<f64>, u: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let resid = w - u * (u.transpose() * w);
    let svd = resid.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let last = svd.singular_values.len() - 1;
    let coeff = v_t.row(last).transpose();
    let p = w * coeff;
    (p, svd.singular_values[last])
}

fn orthonormalize_pair(a: &DVector<f64>, b: &DVector<f64>) -> Option<DMatrix<f64>> {
    let d = a.len();
    let a1 = a / a.norm();
    let mut b1 = b - &a1 * a1.dot(b);
    let n = b1.norm();
    if n < 1e-10 {
        return None;
    }
    b1 /= n;
    let mut w = DMatrix::zeros(d, 2);
    w.set_column(0, &a1);
    w.set_column(1, &b1);
    Some(w)
}

/// Tests Lie equivalence to the Legendre lift of an isoparametric
/// hypersurface: looks for points `P_1, ..., P_g` on a timelike line with
/// `<K_i, P_i> = 0` along the sampled branches. The search is sound but
/// incomplete: a reported witness always satisfies the residual bound, a
/// clear-margin failure is certified, and anything else is indeterminate.
pub fn isoparametric_criterion(
    map: &LegendreMap,
    samples: &[Vec<f64>],
    settings: &DupinSettings,
) -> Result<IsoparametricOutcome> {
    let branches = track_branches(map, samples, settings.cluster_tol)?;
    let d = map.chart_dim() + 3;
    let nulls = branch_nullspaces(&branches, d, settings.rank_tol)?;

    // Every P_i on a timelike line is itself timelike, so each branch
    // nullspace must contain a timelike direction.
    for (i, n) in nulls.iter().enumerate() {
        if n.basis.ncols() == 0 {
            return Ok(IsoparametricOutcome::NoWitness {
                certificate: 1.0,
                reason: format!("branch {i} admits no orthogonal point at the rank tolerance"),
            });
        }
        let min_eig = n
            .gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig > -1e-9 {
            return Ok(IsoparametricOutcome::NoWitness {
                certificate: min_eig,
                reason: format!("branch {i} has no timelike direction orthogonal to it"),
            });
        }
    }

    // Candidate timelike 2-planes.
    let mut candidates: Vec<DMatrix<f64>> = Vec::new();
    let forced: Vec<usize> = (0..nulls.len())
        .filter(|&i| nulls[i].basis.ncols() == 1)
        .collect();
    if forced.len() >= 2 {
        let a = nulls[forced[0]].basis.column(0).into_owned();
        let b = nulls[forced[1]].basis.column(0).into_owned();
        if let Some(w) = orthonormalize_pair(&a, &b) {
            candidates.push(w);
        }
    } else {
        // Pencil search over branch pairs: alternate the small eigenproblem
        // minimizing the positive-part energy of the 2x2 Gram.
        for i in 0..nulls.len() {
            for jdx in (i + 1)..nulls.len() {
                if let Some((v1, v2)) = pencil_pair(&nulls[i], &nulls[jdx]) {
                    if let Some(w) = orthonormalize_pair(&v1, &v2) {
                        candidates.push(w);
                    }
                }
            }
        }
    }
    if candidates.is_empty() {
        return Ok(IsoparametricOutcome::Indeterminate {
            best_residual: f64::INFINITY,
        });
    }

    let mut best: Option<(f64, Vec<DVector<f64>>, DMatrix<f64>)> = None;
    for w in &candidates {
        // P_i: the plane's meet with each branch nullspace.
        let mut ps = Vec::with_capacity(nulls.len());
        let mut worst = 0.0_f64;
        for (i, n) in nulls.iter().enumerate() {
            let (p, _) = plane_subspace_meet(w, &n.basis);
            let p = &p / p.norm();
            worst = worst.max(branch_residual(&branches[i], &p));
            ps.push(p);
        }
        if best.as_ref().is_none_or(|(r, _, _)| worst < *r) {
            best = Some((worst, ps, w.clone()));
        }
    }
    let (residual, ps, w) = best.unwrap();

    // Timelike check of the plane: restricted Gram negative definite.
    let mut gram2 = DMatrix::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            gram2[(a, b)] = inner_raw(&w.column(a).into_owned(), &w.column(b).into_owned());
        }
    }
    let max_eig = gram2
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let timelike = max_eig < -1e-6;

    if residual < settings.witness_residual && timelike {
        // Pick two projectively distinct points for the reported basis and
        // rescale them to <P, P> = -4 with non-positive cross term.
        let points: Vec<LieVector> = ps
            .iter()
            .map(|p| LieVector::from_dvector(p.clone()).normalized())
            .collect();
        let mut second = 1;
        while second < points.len() && points[0].projective_distance(&points[second]) < 1e-6 {
            second += 1;
        }
        if second == points.len() {
            return Ok(IsoparametricOutcome::Indeterminate {
                best_residual: residual,
            });
        }
        let scale_to = |p: &LieVector| -> Result<LieVector> {
            let ip = inner_raw(p.coords(), p.coords());
            if ip >= 0.0 {
                return Err(LieError::NumericalFailure(
                    "witness point is not timelike".into(),
                ));
            }
            Ok(p.scaled(2.0 / (-ip).sqrt()))
        };
        let p1 = scale_to(&points[0])?;
        let mut p2 = scale_to(&points[second])?;
        if inner_raw(p1.coords(), p2.coords()) > 0.0 {
            p2 = p2.scaled(-1.0);
        }
        let gram = [
            [
                inner_raw(p1.coords(), p1.coords()),
                inner_raw(p1.coords(), p2.coords()),
            ],
            [
                inner_raw(p2.coords(), p1.coords()),
                inner_raw(p2.coords(), p2.coords()),
            ],
        ];
        return Ok(IsoparametricOutcome::Witness(CriterionWitness {
            points,
            line_basis: [p1, p2],
            gram,
            max_residual: residual,
        }));
    }
    if residual > 10.0 * settings.witness_residual {
        return Ok(IsoparametricOutcome::NoWitness {
            certificate: residual,
            reason: "best candidate line misses the branch nullspaces".into(),
        });
    }
    Ok(IsoparametricOutcome::Indeterminate {
        best_residual: residual,
    })
}

/// Alternating minimization for a timelike pair `(v1, v2) ∈ N_1 × N_2`:
/// given one side fixed with `<v,v> = -μ`, the best partner minimizes
/// `b^T (S + (U^T J v)(v^T J U)/μ) b`, a small symmetric eigenproblem.
fn pencil_pair(n1: &BranchNull, n2: &BranchNull) -> Option<(DVector<f64>, DVector<f64>)> {
    let most_negative = |n: &BranchNull| -> Option<DVector<f64>> {
        let eig = n.gram.clone().symmetric_eigen();
        let mut best = None;
        let mut best_val = -1e-9;
        for i in 0..eig.eigenvalues.len() {
            if eig.eigenvalues[i] < best_val {
                best_val = eig.eigenvalues[i];
                best = Some(i);
            }
        }
        best.map(|i| {
            let coeff = eig.eigenvectors.column(i).into_owned();
            let v = &n.basis * coeff;
            &v / v.norm()
        })
    };
    let d = n1.basis.nrows();
    let j = crate::lie::metric_signs(d);
    let jv = |v: &DVector<f64>| -> DVector<f64> { DVector::from_fn(d, |i, _| v[i] * j[i]) };
    let partner = |n: &BranchNull, v: &DVector<f64>| -> Option<DVector<f64>> {
        let mu = -inner_raw(v, v);
        if mu <= 1e-12 {
            return None;
        }
        let c = n.basis.transpose() * jv(v);
        let m = &n.gram + &c * c.transpose() / mu;
        let eig = m.symmetric_eigen();
        let mut best = None;
        let mut best_val = f64::INFINITY;
        for i in 0..eig.eigenvalues.len() {
            if eig.eigenvalues[i] < best_val {
                best_val = eig.eigenvalues[i];
                best = Some(i);
            }
        }
        best.map(|i| {
            let w = &n.basis * eig.eigenvectors.column(i).into_owned();
            &w / w.norm()
        })
    };
    let mut v1 = most_negative(n1)?;
    let mut v2 = partner(n2, &v1)?;
    for _ in 0..12 {
        v1 = partner(n1, &v2)?;
        v2 = partner(n2, &v1)?;
    }
    Some((v1, v2))
}

/// Serpentine-ordered grid samples over a map's domain; the standard sample
/// set for branch tracking.
pub fn tracked_samples(map: &LegendreMap, counts: &[usize], margin: f64) -> Vec<Vec<f64>> {
    let row_major = grid_samples(map.domain(), counts, margin);
    let full_counts: Vec<usize> = map
        .domain()
        .iter()
        .enumerate()
        .map(|(axis, _)| counts[axis.min(counts.len() - 1)].max(1))
        .collect();
    serpentine_order(&full_counts)
        .into_iter()
        .map(|i| row_major[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{lift_euclidean, map_fn, ImmersionOracle};
    use crate::lie::random_lie_transform;
    use crate::zoo::{cyclide, ellipsoid, torus, CyclideSpec};

    fn torus_map() -> LegendreMap {
        lift_euclidean(&torus(2.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn torus_tube_leaf_closes_on_coordinate_circle() {
        let map = torus_map();
        let settings = DupinSettings::default();
        // Branch 1 is the tube curvature 1/b = 1; its leaves are v-circles.
        let path = integrate_curvature_line(
            &map,
            &[2.0, 1.5],
            1,
            2.0 * std::f64::consts::PI,
            0.02,
            &settings,
        )
        .unwrap();
        assert_eq!(path.termination, LeafTermination::Completed);
        for p in &path.points {
            assert!((p[0] - 2.0).abs() < 1e-6, "u drifted to {}", p[0]);
        }
        let dev = dupin_deviation(&map, &path);
        assert!(dev < 1e-6, "deviation {dev}");
    }

    #[test]
    fn sphere_umbilic_truncates_at_start_for_field_mode() {
        // Multiplicity-2 start goes through the eigen-walk; the constancy
        // still holds (every direction is principal on a sphere).
        let eval = map_fn(|b: &[f64]| {
            let (u, v) = (b[0], b[1]);
            DVector::from_vec(vec![v.sin() * u.cos(), v.sin() * u.sin(), v.cos()])
        });
        let normal = map_fn(|b: &[f64]| {
            let (u, v) = (b[0], b[1]);
            DVector::from_vec(vec![-v.sin() * u.cos(), -v.sin() * u.sin(), -v.cos()])
        });
        let oracle = ImmersionOracle::new(eval, vec![(0.2, 1.8), (0.4, 2.2)]).with_normal(normal);
        let map = lift_euclidean(&oracle).unwrap();
        let settings = DupinSettings::default();
        let path = integrate_curvature_line(&map, &[0.9, 1.2], 0, 0.5, 0.02, &settings).unwrap();
        assert!(dupin_deviation(&map, &path) < 1e-7);
    }

    #[test]
    fn ellipsoid_leaf_exists_and_deviates() {
        let map = lift_euclidean(&ellipsoid(1.0, 2.0, 3.0).unwrap()).unwrap();
        let settings = DupinSettings::default();
        let path = integrate_curvature_line(&map, &[0.9, 1.2], 0, 1.0, 0.02, &settings).unwrap();
        assert!(path.arclength > 0.9);
        let dev = dupin_deviation(&map, &path);
        assert!(dev > 1e-2, "ellipsoid should deviate, got {dev}");
    }

    #[test]
    fn deviation_invariant_under_resampling() {
        let map = torus_map();
        let settings = DupinSettings::default();
        let d1 = dupin_deviation(
            &map,
            &integrate_curvature_line(&map, &[2.0, 1.5], 0, 1.0, 0.02, &settings).unwrap(),
        );
        let d2 = dupin_deviation(
            &map,
            &integrate_curvature_line(&map, &[2.0, 1.5], 0, 1.0, 0.005, &settings).unwrap(),
        );
        assert!((d1 - d2).abs() < 1e-8, "{d1} vs {d2}");
    }

    #[test]
    fn torus_verifies_proper_dupin_and_ellipsoid_fails() {
        let settings = DupinSettings::default();
        let report = dupin_verify(&torus_map(), &[6, 6], &settings).unwrap();
        assert_eq!(report.verdict, DupinVerdict::ProperDupin);
        assert_eq!((report.g_min, report.g_max), (2, 2));
        assert!(report.max_deviation < 1e-5);

        let bad = dupin_verify(
            &lift_euclidean(&ellipsoid(1.0, 2.0, 3.0).unwrap()).unwrap(),
            &[6, 6],
            &settings,
        )
        .unwrap();
        assert_eq!(bad.verdict, DupinVerdict::NotDupin);
        assert!(bad.max_deviation > 1e-2);
    }

    #[test]
    fn spheroid_is_half_dupin_but_not_dupin() {
        // Surface of revolution: the parallel-direction curvature sphere is
        // constant along parallels (centers on the axis), while the meridian
        // curvature varies along meridians, so the verdict is not-Dupin.
        let map = lift_euclidean(&ellipsoid(1.0, 1.0, 2.0).unwrap()).unwrap();
        let settings = DupinSettings::default();
        let report = dupin_verify(&map, &[6, 6], &settings).unwrap();
        assert_eq!(report.verdict, DupinVerdict::NotDupin);
        let constant_branches = report
            .leaves
            .iter()
            .filter(|l| l.deviation.is_finite() && l.deviation < 1e-5)
            .count();
        assert!(constant_branches > 0, "parallels must be constant");
    }

    #[test]
    fn dupin_verdict_is_lie_invariant() {
        let map = torus_map();
        let settings = DupinSettings::default();
        for seed in 0..3 {
            let g = random_lie_transform(seed, 3, 0.4);
            let moved = map.transformed(&g).unwrap();
            let report = dupin_verify(&moved, &[5, 5], &settings).unwrap();
            assert_eq!(report.verdict, DupinVerdict::ProperDupin, "seed {seed}");
            assert!(report.max_deviation < 1e-5, "seed {seed}");
        }
    }

    #[test]
    fn cyclide_focal_spans_have_expected_dimensions() {
        let settings = DupinSettings::default();
        let map = cyclide(CyclideSpec::new(1, 1).unwrap());
        let samples = tracked_samples(&map, &[9, 9], 0.1);
        // Branch 0 (finite r) is [v + e_{n+3}] of multiplicity q; its span is
        // E^⊥ of dimension p + 2. Branch 1 is [e_1 + u] with span dim q + 2.
        let s0 = focal_span(&map, 0, &samples, &settings).unwrap();
        assert_eq!(s0.dim, 3);
        assert_eq!(s0.signature, (2, 1, 0));
        let s1 = focal_span(&map, 1, &samples, &settings).unwrap();
        assert_eq!(s1.dim, 3);
        assert_eq!(s1.signature, (2, 1, 0));

        let map = cyclide(CyclideSpec::new(2, 1).unwrap());
        let samples = tracked_samples(&map, &[6, 6, 6], 0.1);
        let s0 = focal_span(&map, 0, &samples, &settings).unwrap();
        let s1 = focal_span(&map, 1, &samples, &settings).unwrap();
        // Multiplicity-1 branch spans dim p + 2 = 4; multiplicity-2 branch
        // spans q + 2 = 3.
        assert_eq!(s0.dim, 4);
        assert_eq!(s0.signature, (3, 1, 0));
        assert_eq!(s1.dim, 3);
        assert_eq!(s1.signature, (2, 1, 0));
    }

    #[test]
    fn torus_focal_spans_are_focal_conics() {
        let settings = DupinSettings::default();
        let map = torus_map();
        let samples = tracked_samples(&map, &[9, 9], 0.1);
        for index in 0..2 {
            let span = focal_span(&map, index, &samples, &settings).unwrap();
            assert_eq!(span.dim, 3, "branch {index}");
            assert_eq!(span.signature, (2, 1, 0), "branch {index}");
        }
    }

    #[test]
    fn cyclide_is_reducible() {
        let settings = DupinSettings::default();
        let map = cyclide(CyclideSpec::new(1, 1).unwrap());
        let samples = tracked_samples(&map, &[9, 9], 0.1);
        let report = reducibility_test(&map, &samples, &settings).unwrap();
        assert!(report.reducible);
        assert_eq!(report.max_witness_dim, 4);
    }

    #[test]
    fn cyclide_isoparametric_witness_exists() {
        let settings = DupinSettings::default();
        let map = cyclide(CyclideSpec::new(1, 1).unwrap());
        let samples = tracked_samples(&map, &[9, 9], 0.1);
        match isoparametric_criterion(&map, &samples, &settings).unwrap() {
            IsoparametricOutcome::Witness(w) => {
                assert!(w.max_residual < 1e-6);
                // For the standard cyclide the two points are the timelike
                // axes: branch 0 is the [v + e_6] family (span E^⊥), so its
                // point is e_1; branch 1 is [e_1 + u] (span E) with point e_6.
                let p0 = &w.points[0];
                let p1 = &w.points[1];
                assert!(p0.coords()[0].abs() > 0.999, "P_1 ∝ e_1, got {p0:?}");
                assert!(p1.coords()[5].abs() > 0.999, "P_2 ∝ e_6, got {p1:?}");
                assert!(w.gram[0][0] < 0.0 && w.gram[1][1] < 0.0);
            }
            other => panic!("expected witness, got {other:?}"),
        }
    }
}
