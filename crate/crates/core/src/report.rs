//! Structured analysis reports: grid records, verdicts, and witnesses,
//! serialized deterministically (stable key order, no wall-clock data unless
//! explicitly requested).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dupin::{
    dupin_verify, isoparametric_criterion, reducibility_test, tracked_samples, DupinSettings,
    DupinVerdict, IsoparametricOutcome, LeafCheck, PointRecord,
};
use crate::error::Result;
use crate::zoo::Generated;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Which analyses to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Dupin,
    Reducibility,
    Isoparametric,
}

impl std::str::FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dupin" => Ok(Criterion::Dupin),
            "reduce" | "reducibility" => Ok(Criterion::Reducibility),
            "isopara" | "isoparametric" => Ok(Criterion::Isoparametric),
            other => Err(format!(
                "unknown criterion '{other}' (expected dupin, reduce, isopara)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDescriptor {
    pub generator: String,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingsEcho {
    pub grid: Vec<usize>,
    pub seed: u64,
    pub fd_step: f64,
    pub cluster_tol: f64,
    pub rank_tol: f64,
    pub deviation_yes: f64,
    pub deviation_no: f64,
    pub leaf_length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DupinSummary {
    pub verdict: DupinVerdict,
    pub max_deviation: f64,
    pub g_min: usize,
    pub g_max: usize,
    pub all_stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducibilitySummary {
    pub reducible: bool,
    pub span_dims: Vec<usize>,
    pub span_signatures: Vec<(usize, usize, usize)>,
    pub max_witness_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoparametricSummary {
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_points: Option<Vec<Vec<f64>>>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Verdicts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dupin: Option<DupinSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reducibility: Option<ReducibilitySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isoparametric: Option<IsoparametricSummary>,
}

/// Report plus the errors of any criteria that failed numerically; the
/// report then carries every verdict that did complete.
#[derive(Debug)]
pub struct AnalysisRun {
    pub report: AnalysisReport,
    pub errors: Vec<String>,
}

/// Full analysis report; byte-identical for identical inputs and seeds
/// (timing is only included on request).
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub input: InputDescriptor,
    pub settings: SettingsEcho,
    pub points: Vec<PointRecord>,
    pub leaves: Vec<LeafCheck>,
    pub verdicts: Verdicts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl AnalysisReport {
    /// Deterministic pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// One-line summary for the console.
    pub fn summary_line(&self) -> String {
        let mut parts = vec![format!("analyze {}", self.input.generator)];
        if let Some(d) = &self.verdicts.dupin {
            parts.push(format!(
                "dupin={:?} g={}..{} max_dev={:.2e}",
                d.verdict, d.g_min, d.g_max, d.max_deviation
            ));
        }
        if let Some(r) = &self.verdicts.reducibility {
            parts.push(format!(
                "reducible={} span_dims={:?}",
                r.reducible, r.span_dims
            ));
        }
        if let Some(i) = &self.verdicts.isoparametric {
            parts.push(format!("isopara={} residual={:.2e}", i.outcome, i.residual));
        }
        parts.join(" | ")
    }
}

/// Runs the requested analyses on a generated object and assembles the
/// report. Grid counts apply per parameter axis (the last count repeats).
pub fn run_analysis(
    generated: &Generated,
    params: &BTreeMap<String, f64>,
    grid: &[usize],
    criteria: &[Criterion],
    settings: &DupinSettings,
) -> Result<AnalysisReport> {
    let run = run_analysis_partial(generated, params, grid, criteria, settings)?;
    if let Some(first) = run.errors.first() {
        return Err(crate::error::LieError::NumericalFailure(first.clone()));
    }
    Ok(run.report)
}

/// As [`run_analysis`], but criteria that fail numerically are recorded in
/// `errors` instead of aborting, so a partial report survives.
pub fn run_analysis_partial(
    generated: &Generated,
    params: &BTreeMap<String, f64>,
    grid: &[usize],
    criteria: &[Criterion],
    settings: &DupinSettings,
) -> Result<AnalysisRun> {
    let map = generated.legendre_map()?;
    let mut errors: Vec<String> = Vec::new();
    let input = InputDescriptor {
        generator: generated.name().to_string(),
        params: params.clone(),
        grid_file: generated
            .name()
            .strip_prefix("grid-file:")
            .map(str::to_string),
    };
    let echo = SettingsEcho {
        grid: grid.to_vec(),
        seed: settings.seed,
        fd_step: map.fd_step(),
        cluster_tol: settings.cluster_tol,
        rank_tol: settings.rank_tol,
        deviation_yes: settings.deviation_yes,
        deviation_no: settings.deviation_no,
        leaf_length: settings.leaf_length,
    };

    let mut verdicts = Verdicts::default();
    let mut points = Vec::new();
    let mut leaves = Vec::new();

    if criteria.contains(&Criterion::Dupin) {
        match dupin_verify(&map, grid, settings) {
            Ok(analysis) => {
                verdicts.dupin = Some(DupinSummary {
                    verdict: analysis.verdict.clone(),
                    max_deviation: analysis.max_deviation,
                    g_min: analysis.g_min,
                    g_max: analysis.g_max,
                    all_stable: analysis.all_stable,
                });
                points = analysis.points;
                leaves = analysis.leaves;
            }
            Err(e) => errors.push(format!("dupin: {e}")),
        }
    }

    if criteria.contains(&Criterion::Reducibility) || criteria.contains(&Criterion::Isoparametric) {
        // Branch tracking wants adjacency: neighboring samples must stay on
        // the same branch, so enforce a minimum density (scaled down with
        // the parameter dimension to bound the sample count).
        let k = map.param_dim();
        let (lo, hi) = match k {
            0..=2 => (8, 12),
            3 => (6, 8),
            _ => (5, 6),
        };
        let capped: Vec<usize> = grid.iter().map(|&c| c.clamp(lo, hi)).collect();
        let samples = tracked_samples(&map, &capped, 0.1);
        if criteria.contains(&Criterion::Reducibility) {
            match reducibility_test(&map, &samples, settings) {
                Ok(report) => {
                    verdicts.reducibility = Some(ReducibilitySummary {
                        reducible: report.reducible,
                        span_dims: report.witnesses.iter().map(|w| w.dim).collect(),
                        span_signatures: report.witnesses.iter().map(|w| w.signature).collect(),
                        max_witness_dim: report.max_witness_dim,
                    });
                }
                Err(e) => errors.push(format!("reducibility: {e}")),
            }
        }
        if criteria.contains(&Criterion::Isoparametric) {
            match isoparametric_criterion(&map, &samples, settings) {
                Err(e) => errors.push(format!("isoparametric: {e}")),
                Ok(outcome) => {
                    verdicts.isoparametric = Some(match outcome {
                        IsoparametricOutcome::Witness(w) => IsoparametricSummary {
                            outcome: "witness".into(),
                            gram: Some(w.gram),
                            witness_points: Some(
                                w.points
                                    .iter()
                                    .map(|p| p.coords().iter().cloned().collect())
                                    .collect(),
                            ),
                            residual: w.max_residual,
                        },
                        IsoparametricOutcome::NoWitness { certificate, .. } => {
                            IsoparametricSummary {
                                outcome: "no-witness".into(),
                                gram: None,
                                witness_points: None,
                                residual: certificate,
                            }
                        }
                        IsoparametricOutcome::Indeterminate { best_residual } => {
                            IsoparametricSummary {
                                outcome: "indeterminate".into(),
                                gram: None,
                                witness_points: None,
                                residual: best_residual,
                            }
                        }
                    });
                }
            }
        }
    }

    Ok(AnalysisRun {
        report: AnalysisReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input,
            settings: echo,
            points,
            leaves,
            verdicts,
            timing_ms: None,
        },
        errors,
    })
}
