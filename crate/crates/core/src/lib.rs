//! Computational Lie sphere geometry.
//!
//! Oriented spheres, planes and points of `R^n ∪ {∞}` are encoded as points
//! of the quadric `<x,x> = 0` in `P^{n+2}` under a signature-(n+1,2) inner
//! product. On top of that model the crate builds Legendre lifts of immersed
//! hypersurfaces, extracts curvature spheres numerically, verifies the Dupin
//! property along curvature lines, and tests structural criteria
//! (reducibility, equivalence to an isoparametric hypersurface) on generated
//! canonical examples and user-supplied surfaces.

pub mod curvature;
pub mod diff;
pub mod dupin;
pub mod error;
pub mod grid;
pub mod legendre;
pub mod lie;
pub mod report;
pub mod spheres;
pub mod zoo;

pub use curvature::{
    cross_ratio_on_line, curvature_spheres, lie_curvature, lie_second_form,
    shape_in_orthonormal_frame, shape_operator, shape_operator_hessian, CurvatureSphere, ShapeData,
    DEFAULT_CLUSTER_TOL,
};
pub use dupin::{
    cyclide_frames, dupin_deviation, dupin_verify, focal_span, grid_samples,
    integrate_curvature_line, isoparametric_criterion, reducibility_test, track_branches,
    tracked_samples, CriterionWitness, DupinAnalysis, DupinSettings, DupinVerdict,
    IsoparametricOutcome, LeafPath, LeafTermination, ReducibilityReport,
};
pub use error::{LieError, Result};
pub use grid::parse_grid_surface;
pub use legendre::{
    euclidean_projection, legendre_residuals, lift_euclidean, lift_normal_bundle_s4,
    lift_spherical, map_fn, spherical_projection, ImmersionOracle, LegendreMap, MapFn,
    ProjectionFrame, Provenance,
};
pub use lie::{
    is_lie_transform, is_moebius, lie_inner, line_through, metric_matrix, metric_signs, on_quadric,
    random_lie_transform, span_summary, LieLine, LieTransform, LieVector, SpanSummary,
    DEFAULT_RANK_TOL, DEFAULT_RESIDUAL_TOL,
};
pub use report::{run_analysis, run_analysis_partial, AnalysisReport, AnalysisRun, Criterion};
pub use spheres::{
    decode, decode_spherical, encode, encode_spherical, oriented_contact_euclidean,
    oriented_contact_lie, oriented_contact_spherical, stereographic, stereographic_inv,
    SphereElement, SphericalElement,
};
