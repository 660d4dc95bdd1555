//! Run records and aggregate analytics: performance profiles, AUC,
//! geometric means, parity and success statistics, and best-configuration
//! selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("record {matrix_id}/{ordering_label} has no {baseline} baseline")]
    MissingBaseline { matrix_id: String, ordering_label: String, baseline: &'static str },
    #[error("empty record set")]
    EmptyRecords,
    #[error("profile grids have mismatched domains")]
    GridMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    GenerationFailure,
    Breakdown,
    IngestFailure,
}

impl RunStatus {
    pub fn is_failure(self) -> bool {
        !matches!(self, RunStatus::Converged)
    }
}

/// One (matrix, ordering, preconditioner-config) outcome — the atom of the
/// analytics. Work fields are absent when generation failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub matrix_id: String,
    pub ordering_label: String,
    pub precond_label: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iters: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub work_to_tol: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generation_cost: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub apply_cost: Option<u64>,
    /// Work of the matching control run, same matrix and ordering.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub control_work: Option<u64>,
}

impl RunRecord {
    /// Problem identity inside a profile: one matrix under one ordering.
    pub fn problem_key(&self) -> String {
        format!("{}|{}", self.matrix_id, self.ordering_label)
    }
}

/// Which work value the ratio denominator is normalized against.
#[derive(Clone, Debug)]
pub enum Baseline {
    /// The control run recorded alongside each record.
    Control,
    /// Direct-method cost per (matrix_id, ordering_label).
    Direct(BTreeMap<(String, String), u64>),
}

impl Baseline {
    fn value_for(&self, rec: &RunRecord) -> Option<u64> {
        match self {
            Baseline::Control => rec.control_work,
            Baseline::Direct(map) => map
                .get(&(rec.matrix_id.clone(), rec.ordering_label.clone()))
                .copied(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Baseline::Control => "control",
            Baseline::Direct(_) => "direct",
        }
    }
}

pub const PROFILE_GRID_POINTS: usize = 512;
pub const PROFILE_LOG2_MIN: f64 = -2.0;
pub const PROFILE_LOG2_MAX: f64 = 7.0;

/// Work-reduction profile of one configuration across problems.
#[derive(Clone, Debug)]
pub struct PerformanceProfile {
    /// Problem key -> work-reduction factor (0 for failed runs).
    pub ratios: BTreeMap<String, f64>,
    /// Sampled curve: x on a log2-uniform grid over [2^-2, 2^7],
    /// y = fraction of problems with ratio >= x.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

fn sample_curve(ratios: &BTreeMap<String, f64>, points: usize) -> (Vec<f64>, Vec<f64>) {
    let total = ratios.len().max(1) as f64;
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let t = PROFILE_LOG2_MIN
            + (PROFILE_LOG2_MAX - PROFILE_LOG2_MIN) * i as f64 / (points - 1) as f64;
        let x = t.exp2();
        let count = ratios.values().filter(|&&r| r >= x).count();
        xs.push(x);
        ys.push(count as f64 / total);
    }
    (xs, ys)
}

impl PerformanceProfile {
    pub fn from_ratios(ratios: BTreeMap<String, f64>) -> Self {
        let (xs, ys) = sample_curve(&ratios, PROFILE_GRID_POINTS);
        Self { ratios, xs, ys }
    }

    /// Fraction of problems achieving at least a `threshold`-fold reduction.
    pub fn fraction_at(&self, threshold: f64) -> f64 {
        let total = self.ratios.len().max(1) as f64;
        self.ratios.values().filter(|&&r| r >= threshold).count() as f64 / total
    }
}

/// Build the profile of one configuration's records. Failed runs
/// contribute ratio 0: they never clear any threshold.
pub fn build_profile(
    records: &[RunRecord],
    baseline: &Baseline,
    include_generation: bool,
) -> Result<PerformanceProfile, ProfileError> {
    if records.is_empty() {
        return Err(ProfileError::EmptyRecords);
    }
    let mut ratios = BTreeMap::new();
    for rec in records {
        let base = baseline.value_for(rec).ok_or_else(|| ProfileError::MissingBaseline {
            matrix_id: rec.matrix_id.clone(),
            ordering_label: rec.ordering_label.clone(),
            baseline: baseline.name(),
        })?;
        let ratio = match (rec.status, rec.work_to_tol) {
            (RunStatus::Converged, Some(work)) => {
                let denom = work + if include_generation { rec.generation_cost.unwrap_or(0) } else { 0 };
                base as f64 / denom as f64
            }
            _ => 0.0,
        };
        ratios.insert(rec.problem_key(), ratio);
    }
    Ok(PerformanceProfile::from_ratios(ratios))
}

/// Composite trapezoidal AUC in log2 space over [2^-2, 2^7], normalized by
/// the domain width 9 so that y ≡ 1 scores exactly 1.
pub fn auc(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut total = 0.0;
    for i in 0..xs.len() - 1 {
        let dx = xs[i + 1].log2() - xs[i].log2();
        total += 0.5 * (ys[i] + ys[i + 1]) * dx;
    }
    total / 9.0
}

impl PerformanceProfile {
    pub fn auc(&self) -> f64 {
        auc(&self.xs, &self.ys)
    }
}

/// Geometric-mean conventions: failures count as a 4x slowdown (ratio 1/4)
/// and ratios are clamped to at most 128.
pub const GEO_FAILURE_RATIO: f64 = 0.25;
pub const GEO_RATIO_CAP: f64 = 128.0;

#[derive(Clone, Debug, Serialize)]
pub struct SummaryStats {
    pub auc: f64,
    pub geo_mean: f64,
    pub success_rate: f64,
    pub parity: f64,
    pub ge2x: f64,
    pub ge4x: f64,
    pub ge8x: f64,
}

/// Table-style summary of one configuration's records.
pub fn summary_stats(
    records: &[RunRecord],
    baseline: &Baseline,
    include_generation: bool,
) -> Result<SummaryStats, ProfileError> {
    if records.is_empty() {
        return Err(ProfileError::EmptyRecords);
    }
    let profile = build_profile(records, baseline, include_generation)?;
    let total = records.len() as f64;

    let mut log_sum = 0.0;
    for rec in records {
        let ratio = profile.ratios[&rec.problem_key()];
        let effective = if rec.status.is_failure() || ratio <= 0.0 {
            GEO_FAILURE_RATIO
        } else {
            ratio.min(GEO_RATIO_CAP)
        };
        log_sum += effective.ln();
    }
    let geo_mean = (log_sum / total).exp();
    let successes = records.iter().filter(|r| r.status != RunStatus::GenerationFailure).count();

    Ok(SummaryStats {
        auc: profile.auc(),
        geo_mean,
        success_rate: successes as f64 / total,
        parity: profile.fraction_at(1.0),
        ge2x: profile.fraction_at(2.0),
        ge4x: profile.fraction_at(4.0),
        ge8x: profile.fraction_at(8.0),
    })
}

/// Highest-AUC configuration; ties go to the lexicographically smallest
/// label.
pub fn single_best(
    profiles: &BTreeMap<String, PerformanceProfile>,
) -> Option<(&str, &PerformanceProfile)> {
    profiles
        .iter()
        .map(|(label, p)| (label.as_str(), p))
        .max_by(|(la, pa), (lb, pb)| {
            pa.auc().total_cmp(&pb.auc()).then_with(|| lb.cmp(la))
        })
}

/// Per-problem best ratio across the group's configurations; problems
/// missing from a configuration count as failures there.
pub fn tuned_best(profiles: &BTreeMap<String, PerformanceProfile>) -> Option<PerformanceProfile> {
    if profiles.is_empty() {
        return None;
    }
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for profile in profiles.values() {
        for (key, &ratio) in &profile.ratios {
            let entry = best.entry(key.clone()).or_insert(0.0);
            if ratio > *entry {
                *entry = ratio;
            }
        }
    }
    Some(PerformanceProfile::from_ratios(best))
}
