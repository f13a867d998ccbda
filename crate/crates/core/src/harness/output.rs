use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::Serialize;

use super::{
    cdf, cdf_grid, records_for, summarize, ExperimentConfig, HarnessError, ResultRecord, SummaryStats, SweepResult,
};
use crate::frames::{rotation_to_quaternion, Pose};

/// Column order of `records.csv`. Poses are written as the camera position
/// (m) and the unit quaternion `(w, x, y, z)` with `w >= 0`.
pub const RECORD_COLUMNS: [&str; 20] = [
    "sample",
    "algorithm",
    "solved_by",
    "visible",
    "true_x",
    "true_y",
    "true_z",
    "true_qw",
    "true_qx",
    "true_qy",
    "true_qz",
    "est_x",
    "est_y",
    "est_z",
    "est_qw",
    "est_qx",
    "est_qy",
    "est_qz",
    "e_loc_m",
    "e_pos",
];
const FAILURE_COLUMN: &str = "failure";

const CDF_MAX_M: f64 = 1.0;
const CDF_STEP_M: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct WrittenFiles {
    pub records: Option<PathBuf>,
    pub cdf: Option<PathBuf>,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::IoFailure {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn pose_fields(p: Option<&Pose>) -> Vec<String> {
    match p {
        Some(p) => {
            let q = rotation_to_quaternion(&p.rotation).canonical();
            let t = p.translation;
            [t.x, t.y, t.z, q.w, q.x, q.y, q.z].into_iter().map(num).collect()
        }
        None => vec![String::new(); 7],
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, HarnessError> {
    csv::Writer::from_path(path).map_err(|e| io_err(path, e))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn record_row(r: &ResultRecord) -> Vec<String> {
    let mut row = vec![
        r.sample.to_string(),
        r.algorithm.to_string(),
        r.solved_by.map(|a| a.to_string()).unwrap_or_default(),
        r.visible.to_string(),
    ];
    row.extend(pose_fields(Some(&r.truth)));
    row.extend(pose_fields(r.estimate.as_ref()));
    row.push(opt(r.e_loc));
    row.push(opt(r.e_pos));
    row.push(r.failure.clone().unwrap_or_default());
    row
}

const SUMMARY_COLUMNS: [&str; 14] = [
    "algorithm",
    "successes",
    "failures",
    "mean_e_loc_m",
    "std_err_e_loc_m",
    "median_e_loc_m",
    "p78_e_loc_m",
    "p86_e_loc_m",
    "p90_e_loc_m",
    "p95_e_loc_m",
    "p97_e_loc_m",
    "max_e_loc_m",
    "mean_e_pos",
    "std_err_e_pos",
];

fn stats_fields(stats: Option<&SummaryStats>, records: usize) -> Vec<String> {
    match stats {
        Some(s) => {
            let mut row = vec![s.successes.to_string(), s.failures.to_string()];
            row.extend(
                [
                    s.mean_e_loc,
                    s.std_err_e_loc,
                    s.median_e_loc,
                    s.percentile(78.0).unwrap_or(f64::NAN),
                    s.percentile(86.0).unwrap_or(f64::NAN),
                    s.percentile(90.0).unwrap_or(f64::NAN),
                    s.percentile(95.0).unwrap_or(f64::NAN),
                    s.percentile(97.0).unwrap_or(f64::NAN),
                    s.max_e_loc,
                    s.mean_e_pos,
                    s.std_err_e_pos,
                ]
                .map(num),
            );
            row
        }
        None => {
            let mut row = vec!["0".to_string(), records.to_string()];
            row.extend(std::iter::repeat_n(String::new(), 11));
            row
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    created_unix_s: u64,
    seed: u64,
    focal_length_cm: f64,
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<T>,
    files: Vec<String>,
}

fn write_manifest<T: Serialize>(
    dir: &Path,
    cfg: &ExperimentConfig,
    sweep: Option<T>,
    files: &[&Path],
) -> Result<PathBuf, HarnessError> {
    let path = dir.join("manifest.json");
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        created_unix_s: created,
        seed: cfg.seed,
        focal_length_cm: cfg.intrinsics.f,
        config: cfg,
        sweep,
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes `records.csv`, `cdf.csv`, `summary.csv` and `manifest.json` into
/// `dir`. Everything except the manifest timestamp is a function of the
/// configuration alone.
pub fn write_results(
    dir: &Path,
    cfg: &ExperimentConfig,
    records: &[ResultRecord],
) -> Result<WrittenFiles, HarnessError> {
    ensure_dir(dir)?;
    let records_path = dir.join("records.csv");
    let mut header: Vec<&str> = RECORD_COLUMNS.to_vec();
    header.push(FAILURE_COLUMN);
    write_rows(&records_path, &header, records.iter().map(record_row))?;

    let grid = cdf_grid(CDF_MAX_M, CDF_STEP_M);
    let cdf_path = dir.join("cdf.csv");
    let mut rows = Vec::new();
    for &a in &cfg.algorithms {
        if let Ok(table) = cdf(&records_for(records, a), &grid) {
            rows.extend(table.into_iter().map(|(x, f)| vec![a.to_string(), num(x), num(f)]));
        }
    }
    write_rows(&cdf_path, &["algorithm", "e_loc_m", "fraction"], rows)?;

    let summary_path = dir.join("summary.csv");
    write_rows(
        &summary_path,
        &SUMMARY_COLUMNS,
        cfg.algorithms.iter().map(|&a| {
            let rs = records_for(records, a);
            let mut row = vec![a.to_string()];
            row.extend(stats_fields(summarize(&rs).ok().as_ref(), rs.len()));
            row
        }),
    )?;

    let manifest = write_manifest::<()>(dir, cfg, None, &[&records_path, &cdf_path, &summary_path])?;
    Ok(WrittenFiles {
        records: Some(records_path),
        cdf: Some(cdf_path),
        summary: summary_path,
        manifest,
    })
}

#[derive(Serialize)]
struct SweepEcho<'a> {
    param: &'static str,
    values: &'a [f64],
}

/// Writes `sweep.csv` (one row per value and algorithm) and
/// `manifest.json`.
pub fn write_sweep(dir: &Path, cfg: &ExperimentConfig, result: &SweepResult) -> Result<WrittenFiles, HarnessError> {
    ensure_dir(dir)?;
    let path = dir.join("sweep.csv");
    let mut header = vec![result.param.as_str()];
    header.extend(SUMMARY_COLUMNS);
    let rows = result.points.iter().map(|p| {
        let mut row = vec![num(p.value), p.algorithm.to_string()];
        row.extend(stats_fields(p.stats.as_ref(), 0));
        row
    });
    write_rows(&path, &header, rows)?;
    let mut values: Vec<f64> = result.points.iter().map(|p| p.value).collect();
    values.dedup();
    let manifest = write_manifest(
        dir,
        cfg,
        Some(SweepEcho {
            param: result.param.as_str(),
            values: &values,
        }),
        &[&path],
    )?;
    Ok(WrittenFiles {
        records: None,
        cdf: None,
        summary: path,
        manifest,
    })
}

fn parse_pose(fields: &[&str]) -> Result<Option<Pose>, String> {
    if fields.iter().all(|f| f.is_empty()) {
        return Ok(None);
    }
    let v: Vec<f64> = fields
        .iter()
        .map(|f| f.parse::<f64>().map_err(|e| format!("{f}: {e}")))
        .collect::<Result<_, _>>()?;
    let q = UnitQuaternion::from_quaternion(Quaternion::new(v[3], v[4], v[5], v[6]));
    Ok(Some(Pose::new(q.to_rotation_matrix(), Vector3::new(v[0], v[1], v[2]))))
}

fn parse_opt(f: &str) -> Result<Option<f64>, String> {
    if f.is_empty() {
        Ok(None)
    } else {
        f.parse().map(Some).map_err(|e| format!("{f}: {e}"))
    }
}

/// Reads back a `records.csv` written by [`write_results`].
pub fn read_records_csv(path: &Path) -> Result<Vec<ResultRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| io_err(path, e))?;
        let f: Vec<&str> = row.iter().collect();
        if f.len() != RECORD_COLUMNS.len() + 1 {
            return Err(io_err(
                path,
                format!("expected {} columns, got {}", RECORD_COLUMNS.len() + 1, f.len()),
            ));
        }
        let parsed = (|| -> Result<ResultRecord, String> {
            Ok(ResultRecord {
                sample: f[0].parse().map_err(|e| format!("sample: {e}"))?,
                algorithm: f[1].parse()?,
                solved_by: if f[2].is_empty() { None } else { Some(f[2].parse()?) },
                visible: f[3].parse().map_err(|e| format!("visible: {e}"))?,
                truth: parse_pose(&f[4..11])?.ok_or("missing true pose")?,
                estimate: parse_pose(&f[11..18])?,
                e_loc: parse_opt(f[18])?,
                e_pos: parse_opt(f[19])?,
                failure: if f[20].is_empty() {
                    None
                } else {
                    Some(f[20].to_string())
                },
            })
        })();
        out.push(parsed.map_err(|e| io_err(path, e))?);
    }
    Ok(out)
}
