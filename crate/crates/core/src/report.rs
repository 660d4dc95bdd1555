//! Report emission: summary-statistics CSV (one row per configuration),
//! per-class profile curves as CSV and SVG, and single-best / tuned-best
//! comparisons.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::profile::{
    build_profile, single_best, summary_stats, tuned_best, Baseline, PerformanceProfile,
    ProfileError, RunRecord, RunStatus,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("mode {0} needs direct baselines; none were provided")]
    MissingDirectBaselines(&'static str),
    #[error("no run records to report on")]
    NoRecords,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportMode {
    VsControl,
    VsControlWithGen,
    VsDirect,
    VsDirectWithGen,
}

impl ReportMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vs_control" => Some(Self::VsControl),
            "vs_control_with_gen" => Some(Self::VsControlWithGen),
            "vs_direct" => Some(Self::VsDirect),
            "vs_direct_with_gen" => Some(Self::VsDirectWithGen),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::VsControl => "vs_control",
            Self::VsControlWithGen => "vs_control_with_gen",
            Self::VsDirect => "vs_direct",
            Self::VsDirectWithGen => "vs_direct_with_gen",
        }
    }

    fn include_generation(self) -> bool {
        matches!(self, Self::VsControlWithGen | Self::VsDirectWithGen)
    }

    fn needs_direct(self) -> bool {
        matches!(self, Self::VsDirect | Self::VsDirectWithGen)
    }
}

/// Preconditioner class of a configuration label: the prefix before the
/// first ':', with trailing digits trimmed so "ic0" and "ic:droptol=…"
/// group together.
pub fn config_class(label: &str) -> String {
    let head = label.split(':').next().unwrap_or(label);
    head.trim_end_matches(|c: char| c.is_ascii_digit()).to_string()
}

/// The m=1, α=1 truncated Neumann configuration is spectrally equivalent to
/// no preconditioning; reports flag it.
fn config_note(label: &str) -> &'static str {
    if label == "tns:m=1,alpha=unit" {
        "equiv-control"
    } else {
        ""
    }
}

#[derive(Debug)]
pub struct ReportPaths {
    pub summary_csv: PathBuf,
    pub best_csv: PathBuf,
    pub profile_csvs: Vec<PathBuf>,
    pub svgs: Vec<PathBuf>,
}

/// Emit all report files for one mode under `out_dir`.
pub fn make_report(
    records: &[RunRecord],
    mode: ReportMode,
    out_dir: &Path,
    direct_baselines: Option<&BTreeMap<(String, String), u64>>,
) -> Result<ReportPaths, ReportError> {
    if records.is_empty() {
        return Err(ReportError::NoRecords);
    }
    let baseline = if mode.needs_direct() {
        let map = direct_baselines.ok_or(ReportError::MissingDirectBaselines(mode.name()))?;
        Baseline::Direct(map.clone())
    } else {
        Baseline::Control
    };
    let include_gen = mode.include_generation();

    let mut by_config: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    for rec in records {
        if rec.status == RunStatus::IngestFailure {
            continue;
        }
        // Blocks whose control never converged have no usable baseline;
        // control-relative modes leave them out (still visible in the raw
        // records). Direct modes keep them: a missing direct baseline is a
        // hard error below.
        if !mode.needs_direct() && rec.control_work.is_none() {
            continue;
        }
        by_config.entry(rec.precond_label.clone()).or_default().push(rec.clone());
    }
    if by_config.is_empty() {
        return Err(ReportError::NoRecords);
    }

    std::fs::create_dir_all(out_dir)?;
    let profiles_dir = out_dir.join(format!("profiles_{}", mode.name()));
    std::fs::create_dir_all(&profiles_dir)?;

    // profiles and stats per configuration
    let mut profiles: BTreeMap<String, PerformanceProfile> = BTreeMap::new();
    let summary_csv = out_dir.join(format!("summary_{}.csv", mode.name()));
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&summary_csv)?);
        writeln!(w, "label,auc,geo_mean,success_rate,parity,ge2x,ge4x,ge8x,notes")?;
        for (label, recs) in &by_config {
            let stats = summary_stats(recs, &baseline, include_gen)?;
            writeln!(
                w,
                "{label},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                stats.auc,
                stats.geo_mean,
                stats.success_rate,
                stats.parity,
                stats.ge2x,
                stats.ge4x,
                stats.ge8x,
                config_note(label)
            )?;
            profiles.insert(label.clone(), build_profile(recs, &baseline, include_gen)?);
        }
    }

    // group configurations into classes
    let mut classes: BTreeMap<String, BTreeMap<String, PerformanceProfile>> = BTreeMap::new();
    for (label, profile) in &profiles {
        classes
            .entry(config_class(label))
            .or_default()
            .insert(label.clone(), profile.clone());
    }

    let mut profile_csvs = Vec::new();
    let mut svgs = Vec::new();
    for (class, group) in &classes {
        let csv_path = profiles_dir.join(format!("{class}.csv"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
        let labels: Vec<&String> = group.keys().collect();
        writeln!(
            w,
            "x,{}",
            labels.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(",")
        )?;
        let xs = &group.values().next().expect("nonempty group").xs;
        for (i, x) in xs.iter().enumerate() {
            let row: Vec<String> =
                labels.iter().map(|l| format!("{:.6}", group[*l].ys[i])).collect();
            writeln!(w, "{:.8},{}", x, row.join(","))?;
        }
        drop(w);
        profile_csvs.push(csv_path);

        let curves: Vec<(String, &[f64], &[f64])> = group
            .iter()
            .map(|(label, p)| (label.clone(), p.xs.as_slice(), p.ys.as_slice()))
            .collect();
        let svg_path = profiles_dir.join(format!("{class}.svg"));
        std::fs::write(&svg_path, crate::svg::profile_plot(class, &curves))?;
        svgs.push(svg_path);
    }

    // single-best and tuned-best comparisons per class
    let best_csv = out_dir.join(format!("best_{}.csv", mode.name()));
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&best_csv)?);
        writeln!(w, "class,single_best_label,single_best_auc,tuned_best_auc")?;
        let mut single_curves = Vec::new();
        let mut tuned_curves = Vec::new();
        for (class, group) in &classes {
            let (label, best_profile) = single_best(group).expect("nonempty group");
            let tuned = tuned_best(group).expect("nonempty group");
            writeln!(w, "{class},{label},{:.6},{:.6}", best_profile.auc(), tuned.auc())?;
            single_curves.push((format!("{class}: {label}"), best_profile.clone()));
            tuned_curves.push((class.clone(), tuned));
        }
        let single_refs: Vec<(String, &[f64], &[f64])> = single_curves
            .iter()
            .map(|(l, p)| (l.clone(), p.xs.as_slice(), p.ys.as_slice()))
            .collect();
        let tuned_refs: Vec<(String, &[f64], &[f64])> = tuned_curves
            .iter()
            .map(|(l, p)| (l.clone(), p.xs.as_slice(), p.ys.as_slice()))
            .collect();
        let single_svg = out_dir.join(format!("best_single_{}.svg", mode.name()));
        std::fs::write(&single_svg, crate::svg::profile_plot("single-best", &single_refs))?;
        svgs.push(single_svg);
        let tuned_svg = out_dir.join(format!("best_tuned_{}.svg", mode.name()));
        std::fs::write(&tuned_svg, crate::svg::profile_plot("tuned-best", &tuned_refs))?;
        svgs.push(tuned_svg);
    }

    Ok(ReportPaths { summary_csv, best_csv, profile_csvs, svgs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(matrix: &str, label: &str, work: u64, control: u64) -> RunRecord {
        RunRecord {
            matrix_id: matrix.into(),
            ordering_label: "natural".into(),
            precond_label: label.into(),
            status: RunStatus::Converged,
            iters: Some(1),
            work_to_tol: Some(work),
            generation_cost: Some(0),
            apply_cost: Some(0),
            control_work: Some(control),
        }
    }

    #[test]
    fn classes_group_labels() {
        assert_eq!(config_class("ic:droptol=1e-6"), "ic");
        assert_eq!(config_class("ic0"), "ic");
        assert_eq!(config_class("mic0"), "mic");
        assert_eq!(config_class("sgs:sweeps=1"), "sgs");
        assert_eq!(config_class("control"), "control");
    }

    #[test]
    fn summary_matches_hand_counts() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            rec("m1", "ic:droptol=1e-6", 25, 100),
            rec("m2", "ic:droptol=1e-6", 50, 100),
            rec("m1", "control", 100, 100),
            rec("m2", "control", 100, 100),
        ];
        let paths = make_report(&records, ReportMode::VsControl, dir.path(), None).unwrap();
        let text = std::fs::read_to_string(&paths.summary_csv).unwrap();
        let ic_line = text.lines().find(|l| l.starts_with("ic:droptol=1e-6")).unwrap();
        // ratios 4 and 2: parity 1, ge2x 1, ge4x 0.5, geo sqrt(8)
        let fields: Vec<&str> = ic_line.split(',').collect();
        assert!((fields[2].parse::<f64>().unwrap() - 8.0f64.sqrt()).abs() < 1e-5);
        assert_eq!(fields[4], "1.000000");
        assert_eq!(fields[5], "1.000000");
        assert_eq!(fields[6], "0.500000");
        let control_line = text.lines().find(|l| l.starts_with("control")).unwrap();
        let fields: Vec<&str> = control_line.split(',').collect();
        assert_eq!(fields[4], "1.000000");
        assert_eq!(fields[2], "1.000000");
    }

    #[test]
    fn direct_mode_requires_baselines() {
        let records = vec![rec("m1", "control", 100, 100)];
        let dir = tempfile::tempdir().unwrap();
        let err = make_report(&records, ReportMode::VsDirect, dir.path(), None).unwrap_err();
        assert!(matches!(err, ReportError::MissingDirectBaselines(_)));

        let mut baselines = BTreeMap::new();
        baselines.insert(("m1".to_string(), "natural".to_string()), 1000u64);
        let paths =
            make_report(&records, ReportMode::VsDirect, dir.path(), Some(&baselines)).unwrap();
        let text = std::fs::read_to_string(&paths.summary_csv).unwrap();
        // control vs direct: ratio 10
        let line = text.lines().find(|l| l.starts_with("control")).unwrap();
        let geo: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((geo - 10.0).abs() < 1e-5);
    }

    #[test]
    fn emits_profile_files_per_class() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            rec("m1", "ic:droptol=1e-6", 25, 100),
            rec("m1", "ic0", 50, 100),
            rec("m1", "sgs:sweeps=1", 80, 100),
            rec("m1", "control", 100, 100),
        ];
        let paths = make_report(&records, ReportMode::VsControl, dir.path(), None).unwrap();
        let names: Vec<String> = paths
            .profile_csvs
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"ic.csv".to_string()));
        assert!(names.contains(&"sgs.csv".to_string()));
        assert!(names.contains(&"control.csv".to_string()));
        let ic_csv = std::fs::read_to_string(&paths.profile_csvs[1]).unwrap();
        let header = ic_csv.lines().next().unwrap();
        assert_eq!(header, "x,ic0,ic:droptol=1e-6");
        assert_eq!(ic_csv.lines().count(), 1 + crate::profile::PROFILE_GRID_POINTS);
        let best = std::fs::read_to_string(&paths.best_csv).unwrap();
        assert!(best.lines().any(|l| l.starts_with("ic,ic:droptol=1e-6")));
    }

    #[test]
    fn blocks_without_converged_control_are_left_out() {
        let dir = tempfile::tempdir().unwrap();
        let mut orphan = rec("bad", "ic0", 40, 0);
        orphan.control_work = None;
        let records = vec![rec("good", "ic0", 40, 80), orphan];
        let paths = make_report(&records, ReportMode::VsControl, dir.path(), None).unwrap();
        let text = std::fs::read_to_string(&paths.summary_csv).unwrap();
        let line = text.lines().find(|l| l.starts_with("ic0")).unwrap();
        // only the good block contributes: geo mean is its ratio 2
        let geo: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((geo - 2.0).abs() < 1e-6);
    }

    #[test]
    fn tns_equiv_control_is_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![rec("m1", "tns:m=1,alpha=unit", 100, 100)];
        let paths = make_report(&records, ReportMode::VsControl, dir.path(), None).unwrap();
        let text = std::fs::read_to_string(&paths.summary_csv).unwrap();
        assert!(text.contains("tns:m=1,alpha=unit") && text.contains("equiv-control"));
    }
}
