//! Report artifacts: per-episode metrics, the summary table, meta
//! statistics, distribution histograms and the run provenance record.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    EpisodeMetrics, FailureTuple, MeanStd, MetaReport, CPD_SATURATION, TTC_SATURATION,
};
use crate::sim::TerminationKind;

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "Candidate Algorithm",
    "Overall success rate",
    "Failure cases (T/PC/EC)",
    "Total pedestrian collisions",
    "Path length (m)",
    "Path length ratio",
    "Goal traversal ratio",
    "Path irregularity (radians)",
    "Path traversal time (s)",
    "Average speed (m/s)",
    "Average energy expenditure (J)",
    "Average acceleration (m/s^2)",
    "Average jerk (m/s^3)",
    "Closest pedestrian distance (m)",
    "Time to collision (s)",
];

const MISSING: &str = "n/a";

/// One row of `summary.csv`: aggregate scores for one planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub successes: u32,
    pub episodes: u32,
    pub failures: FailureTuple,
    pub total_pedestrian_collisions: u32,
    pub path_length: Option<MeanStd>,
    pub path_length_ratio: Option<MeanStd>,
    /// Mean over incomplete episodes only.
    pub goal_traversal_ratio: Option<f64>,
    pub path_irregularity: Option<MeanStd>,
    pub traversal_time: Option<MeanStd>,
    pub average_speed: Option<MeanStd>,
    pub energy: Option<MeanStd>,
    pub average_acceleration: Option<MeanStd>,
    pub average_jerk: Option<MeanStd>,
    /// Spread of per-episode mean closest distances.
    pub closest_pedestrian_distance: Option<MeanStd>,
    pub time_to_collision: Option<MeanStd>,
}

fn collect(
    metrics: &[EpisodeMetrics],
    f: impl Fn(&EpisodeMetrics) -> Option<f64>,
) -> Option<MeanStd> {
    MeanStd::of(&metrics.iter().filter_map(f).collect::<Vec<_>>())
}

impl SummaryRow {
    pub fn build(
        algorithm: &str,
        metrics: &[EpisodeMetrics],
        meta: &MetaReport,
    ) -> Result<SummaryRow> {
        if metrics.is_empty() {
            return Err(Error::Report("no episode metrics to summarise".into()));
        }
        let incomplete: Vec<f64> = metrics
            .iter()
            .filter(|m| m.termination != TerminationKind::Completion)
            .filter_map(|m| m.goal_traversal_ratio)
            .collect();
        let kin = |f: fn(&crate::metrics::KinematicStats) -> f64| {
            collect(metrics, move |m| m.kinematics.as_ref().map(f))
        };
        Ok(SummaryRow {
            algorithm: algorithm.to_string(),
            successes: meta.successes,
            episodes: meta.episodes,
            failures: meta.failures,
            total_pedestrian_collisions: meta.total_pedestrian_collisions,
            path_length: collect(metrics, |m| Some(m.path_length)),
            path_length_ratio: collect(metrics, |m| m.path_length_ratio),
            goal_traversal_ratio: MeanStd::of(&incomplete).map(|s| s.mean),
            path_irregularity: collect(metrics, |m| m.path_irregularity),
            traversal_time: collect(metrics, |m| Some(m.traversal_time)),
            average_speed: kin(|k| k.average_speed),
            energy: kin(|k| k.energy),
            average_acceleration: kin(|k| k.average_acceleration),
            average_jerk: kin(|k| k.average_jerk),
            closest_pedestrian_distance: collect(metrics, |m| {
                Some(m.mean_closest_pedestrian_distance)
            }),
            time_to_collision: collect(metrics, |m| Some(m.mean_time_to_collision)),
        })
    }

    fn stats(&self) -> [&Option<MeanStd>; 10] {
        [
            &self.path_length,
            &self.path_length_ratio,
            &self.path_irregularity,
            &self.traversal_time,
            &self.average_speed,
            &self.energy,
            &self.average_acceleration,
            &self.average_jerk,
            &self.closest_pedestrian_distance,
            &self.time_to_collision,
        ]
    }

    /// The row as it reads back from CSV: every statistic at two decimals.
    pub fn rounded(&self) -> SummaryRow {
        let r = |s: &Option<MeanStd>| s.map(MeanStd::rounded);
        SummaryRow {
            goal_traversal_ratio: self.goal_traversal_ratio.map(crate::metrics::round2),
            path_length: r(&self.path_length),
            path_length_ratio: r(&self.path_length_ratio),
            path_irregularity: r(&self.path_irregularity),
            traversal_time: r(&self.traversal_time),
            average_speed: r(&self.average_speed),
            energy: r(&self.energy),
            average_acceleration: r(&self.average_acceleration),
            average_jerk: r(&self.average_jerk),
            closest_pedestrian_distance: r(&self.closest_pedestrian_distance),
            time_to_collision: r(&self.time_to_collision),
            ..self.clone()
        }
    }

    pub fn to_record(&self) -> Vec<String> {
        let cell = |s: &Option<MeanStd>| s.map_or(MISSING.to_string(), |s| s.to_string());
        let st = self.stats();
        let mut out = vec![
            self.algorithm.clone(),
            format!("{}/{}", self.successes, self.episodes),
            self.failures.to_string(),
            self.total_pedestrian_collisions.to_string(),
            cell(st[0]),
            cell(st[1]),
            self.goal_traversal_ratio.map_or(MISSING.to_string(), |g| {
                format!("{:.2}", crate::metrics::round2(g))
            }),
        ];
        out.extend(st[2..].iter().map(|s| cell(s)));
        out
    }

    pub fn from_record(record: &[&str]) -> Result<SummaryRow> {
        if record.len() != SUMMARY_COLUMNS.len() {
            return Err(Error::Report(format!(
                "summary row has {} cells, expected {}",
                record.len(),
                SUMMARY_COLUMNS.len()
            )));
        }
        let bad = |what: &str, cell: &str| Error::Report(format!("bad {what} cell `{cell}`"));
        let stat = |cell: &str| -> Result<Option<MeanStd>> {
            if cell == MISSING {
                Ok(None)
            } else {
                cell.parse().map(Some)
            }
        };
        let (k, n) = record[1]
            .split_once('/')
            .ok_or_else(|| bad("success rate", record[1]))?;
        let t: Vec<u32> = record[2]
            .split('/')
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("failure tuple", record[2]))?;
        if t.len() != 3 {
            return Err(bad("failure tuple", record[2]));
        }
        Ok(SummaryRow {
            algorithm: record[0].to_string(),
            successes: k.parse().map_err(|_| bad("success rate", record[1]))?,
            episodes: n.parse().map_err(|_| bad("success rate", record[1]))?,
            failures: FailureTuple {
                timeout: t[0],
                pedestrian_collision: t[1],
                environment_collision: t[2],
            },
            total_pedestrian_collisions: record[3]
                .parse()
                .map_err(|_| bad("collision count", record[3]))?,
            path_length: stat(record[4])?,
            path_length_ratio: stat(record[5])?,
            goal_traversal_ratio: if record[6] == MISSING {
                None
            } else {
                Some(
                    record[6]
                        .parse()
                        .map_err(|_| bad("goal traversal ratio", record[6]))?,
                )
            },
            path_irregularity: stat(record[7])?,
            traversal_time: stat(record[8])?,
            average_speed: stat(record[9])?,
            energy: stat(record[10])?,
            average_acceleration: stat(record[11])?,
            average_jerk: stat(record[12])?,
            closest_pedestrian_distance: stat(record[13])?,
            time_to_collision: stat(record[14])?,
        })
    }
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Report(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Error::Report(format!("{}: {e}", path.display()));
    w.write_record(SUMMARY_COLUMNS).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.to_record()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let csv_err = |e: csv::Error| Error::Report(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SUMMARY_COLUMNS) {
        return Err(Error::Report(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            SummaryRow::from_record(&rec.iter().collect::<Vec<_>>())
        })
        .collect()
}

/// Fixed-width histogram over `[0, upper]`; the saturation value lands in
/// the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub metric: String,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of(
        metric: &str,
        values: impl IntoIterator<Item = f64>,
        upper: f64,
        bin_width: f64,
    ) -> Histogram {
        let bins = (upper / bin_width).round() as usize;
        let mut counts = vec![0; bins];
        for v in values {
            if v.is_finite() {
                let i = ((v.max(0.0) / bin_width).floor() as usize).min(bins - 1);
                counts[i] += 1;
            }
        }
        Histogram {
            metric: metric.to_string(),
            bin_width,
            counts,
        }
    }
}

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.5;

pub fn histograms(metrics: &[EpisodeMetrics]) -> [Histogram; 2] {
    [
        Histogram::of(
            "closest_pedestrian_distance",
            metrics
                .iter()
                .flat_map(|m| m.closest_pedestrian_distance.iter().copied()),
            CPD_SATURATION,
            HISTOGRAM_BIN_WIDTH,
        ),
        Histogram::of(
            "time_to_collision",
            metrics
                .iter()
                .flat_map(|m| m.time_to_collision.iter().copied()),
            TTC_SATURATION,
            HISTOGRAM_BIN_WIDTH,
        ),
    ]
}

fn write_histograms(hists: &[Histogram], path: &Path) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Report(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["metric", "bin_start", "bin_end", "count"])
        .map_err(csv_err)?;
    for h in hists {
        for (i, c) in h.counts.iter().enumerate() {
            let lo = i as f64 * h.bin_width;
            w.write_record([
                h.metric.clone(),
                format!("{lo:.2}"),
                format!("{:.2}", lo + h.bin_width),
                c.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDocument {
    pub algorithm: String,
    pub overall_success_rate: String,
    pub failure_cases: String,
    #[serde(flatten)]
    pub meta: MetaReport,
}

/// Machine-readable record of how a run was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub protocol_version: u32,
    pub config_digest: String,
    pub seed: u64,
    pub planner: String,
    pub mode: String,
    pub episodes: Vec<String>,
}

impl Provenance {
    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let path = out.join("provenance.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub summary: PathBuf,
    pub meta: PathBuf,
    pub histograms: PathBuf,
    pub episodes: Vec<PathBuf>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Directory name for an episode: unsafe characters become `_`.
pub fn episode_dir_name(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() || cleaned.chars().all(|c| c == '.') {
        format!("_{cleaned}")
    } else {
        cleaned
    }
}

/// Unique directory names for `names`, suffixing repeats with `-2`, `-3`, ...
pub fn episode_dir_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut used = std::collections::BTreeSet::new();
    names
        .into_iter()
        .map(|n| {
            let base = episode_dir_name(n);
            let mut name = base.clone();
            let mut k = 2;
            while !used.insert(name.clone()) {
                name = format!("{base}-{k}");
                k += 1;
            }
            name
        })
        .collect()
}

/// Writes `<out>/<episode>/metrics.json`, `<out>/summary.csv`,
/// `<out>/meta.json` and `<out>/histograms.csv`.
///
/// `summary.csv` holds no wall-clock values, so identical runs give
/// identical bytes; planning times live in `meta.json`.
pub fn write_reports(
    algorithm: &str,
    metrics: &[EpisodeMetrics],
    meta: &MetaReport,
    out: &Path,
) -> Result<ReportFiles> {
    let row = SummaryRow::build(algorithm, metrics, meta)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut episodes = Vec::with_capacity(metrics.len());
    for (m, dir) in metrics.iter().zip(episode_dir_names(
        metrics.iter().map(|m| m.episode.as_str()),
    )) {
        let dir = out.join(dir);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join("metrics.json");
        write_json(&path, m)?;
        episodes.push(path);
    }
    let summary = out.join("summary.csv");
    write_summary(std::slice::from_ref(&row), &summary)?;
    let meta_path = out.join("meta.json");
    write_json(
        &meta_path,
        &MetaDocument {
            algorithm: algorithm.to_string(),
            overall_success_rate: meta.success_fraction(),
            failure_cases: meta.failures.to_string(),
            meta: meta.clone(),
        },
    )?;
    let histograms_path = out.join("histograms.csv");
    write_histograms(&histograms(metrics), &histograms_path)?;
    Ok(ReportFiles {
        summary,
        meta: meta_path,
        histograms: histograms_path,
        episodes,
    })
}
