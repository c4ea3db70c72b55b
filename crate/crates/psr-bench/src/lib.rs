//! Benchmark harness for the ranking engines in `psr-core`.
//!
//! The harness times the incremental engine (`psr`) against the
//! from-scratch baseline (`ylks`) over a grid of synthetic databases,
//! records working-set statistics, and fits log-log scaling exponents so
//! claims like "linear in the database size" or "quadratic in the database
//! size" become measurable numbers.
//!
//! Protocol per grid point:
//!
//! 1. generate the dataset from the point's seed (generation is never part
//!    of any timing);
//! 2. build the distance-browsing stream once and record its wall time
//!    separately — presorting is `O(n log n)` while the ranking pass is
//!    `O(k · n)`, and conflating them would mask the pass's scaling;
//! 3. run both engines once untimed and compare their outputs — timings
//!    are only recorded when the engines agree (the correctness gate);
//!    these runs double as cache/allocator warm-up;
//! 4. time each engine over the same stream for the configured number of
//!    repeats and record the median.
//!
//! Failures (generation errors, gate violations) are recorded per point and
//! the suite continues; a bad point never aborts the sweep.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use psr_core::{
    build_browsing, generate, matrix_max_abs_diff, objects_max_abs_diff, psr_rank_stream,
    ylks_rank_stream, BrowsingStream, GenParams, QueryPoint, RankOutput, UncertainDatabase,
};

/// Which ranking engine a record was measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    /// Incremental single-pass engine.
    Psr,
    /// Quadratic from-scratch baseline.
    Ylks,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::Psr => "psr",
            EngineKind::Ylks => "ylks",
        })
    }
}

fn default_instances() -> usize {
    20
}
fn default_dims() -> usize {
    3
}
fn default_space_side() -> f64 {
    10.0
}
fn default_uncertainty() -> f64 {
    2.0
}
fn default_seed() -> u64 {
    42
}

/// One benchmark configuration: dataset shape plus ranking depth.
///
/// Only `object_count` and `k` are mandatory in serialized grids; the other
/// fields default to the conventions used throughout the test corpus
/// (20 instances, 3 dimensions, side-10 space, degree-2 boxes, no
/// existential mass, seed 42).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Number of uncertain objects (N).
    pub object_count: usize,
    /// Instances per object (m).
    #[serde(default = "default_instances")]
    pub instances_per_object: usize,
    /// Dimensionality of the vector space.
    #[serde(default = "default_dims")]
    pub dims: usize,
    /// Side length of the data space.
    #[serde(default = "default_space_side")]
    pub space_side: f64,
    /// Side length of each object's instance box (UD).
    #[serde(default = "default_uncertainty")]
    pub uncertainty_degree: f64,
    /// Probability mass withheld from each object (existential
    /// uncertainty).
    #[serde(default)]
    pub existential_mass: f64,
    /// Ranking depth.
    pub k: usize,
    /// Generator seed for this point.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl GridPoint {
    fn gen_params(&self) -> GenParams {
        GenParams {
            object_count: self.object_count,
            instances_per_object: self.instances_per_object,
            dims: self.dims,
            space_side: self.space_side,
            uncertainty_degree: self.uncertainty_degree,
            existential_mass: self.existential_mass,
            seed: self.seed,
        }
    }

    fn label(&self) -> String {
        format!(
            "N={} m={} k={} UD={} e={} seed={}",
            self.object_count,
            self.instances_per_object,
            self.k,
            self.uncertainty_degree,
            self.existential_mass,
            self.seed
        )
    }
}

/// A benchmark grid as stored on disk: `{"points": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchGrid {
    /// The configurations to measure, in execution order.
    pub points: Vec<GridPoint>,
}

/// One timed measurement of one engine on one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// Engine measured.
    pub engine: EngineKind,
    /// Number of uncertain objects (N).
    pub object_count: usize,
    /// Instances per object (m).
    pub instances_per_object: usize,
    /// Ranking depth.
    pub k: usize,
    /// Instance-box side length (UD).
    pub uncertainty_degree: f64,
    /// Withheld probability mass per object.
    pub existential_mass: f64,
    /// Generator seed.
    pub seed: u64,
    /// Median wall time of the ranking pass alone, in milliseconds.
    pub wall_time_ms: f64,
    /// Wall time of building the distance-sorted stream, in milliseconds
    /// (shared by both engines of the point; excluded from
    /// `wall_time_ms`).
    pub sort_time_ms: f64,
    /// Mean number of active objects over the emitted steps.
    pub avg_aol_size: f64,
    /// Rows held in the result matrix (emission stops at early
    /// termination).
    pub peak_result_rows: usize,
}

/// A grid point the suite could not measure, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    /// Human-readable point description.
    pub point: String,
    /// What went wrong.
    pub reason: String,
}

/// Everything a suite run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    /// Accepted measurements.
    pub records: Vec<BenchRecord>,
    /// Points skipped with their reasons.
    pub failures: Vec<PointFailure>,
}

/// Suite-wide knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Timed runs per engine per point; the median is recorded. At least 3.
    pub repeats: usize,
    /// Largest `object_count` the quadratic baseline is run on; beyond it
    /// only the incremental engine is measured (and the correctness gate
    /// cannot run).
    pub ylks_object_cap: usize,
    /// Maximum absolute elementwise difference between the two engines'
    /// outputs tolerated by the correctness gate.
    pub gate_tolerance: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            repeats: 3,
            ylks_object_cap: 4000,
            gate_tolerance: 1e-6,
        }
    }
}

/// Arguments the suite cannot run with at all (contrast with per-point
/// [`PointFailure`]s, which are data).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuiteError {
    /// The grid has no points.
    #[error("benchmark grid is empty")]
    EmptyGrid,
    /// Fewer than 3 repeats cannot produce a meaningful median.
    #[error("at least 3 repeats are required, got {got}")]
    TooFewRepeats { got: usize },
}

fn median(mut times: Vec<f64>) -> f64 {
    times.sort_by(|a, b| a.partial_cmp(b).expect("wall times are never NaN"));
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    }
}

fn time_engine(
    engine: EngineKind,
    db: &UncertainDatabase,
    stream: &BrowsingStream,
    k: usize,
    repeats: usize,
) -> (f64, RankOutput) {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let out = match engine {
            EngineKind::Psr => psr_rank_stream(db, stream, k),
            EngineKind::Ylks => ylks_rank_stream(db, stream, k),
        }
        .expect("gate run already validated this configuration");
        times.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(out);
    }
    (median(times), last.expect("repeats >= 3"))
}

fn record_from(point: &GridPoint, engine: EngineKind, ms: f64, sort_ms: f64, out: &RankOutput) -> BenchRecord {
    BenchRecord {
        engine,
        object_count: point.object_count,
        instances_per_object: point.instances_per_object,
        k: point.k,
        uncertainty_degree: point.uncertainty_degree,
        existential_mass: point.existential_mass,
        seed: point.seed,
        wall_time_ms: ms,
        sort_time_ms: sort_ms,
        avg_aol_size: out.stats.avg_active_objects,
        peak_result_rows: out.stats.rows_emitted,
    }
}

/// Runs the full measurement protocol over `grid`.
///
/// Per point: generate (untimed), build the stream once (timed as
/// `sort_time_ms`), gate the engines against each other, then record the
/// median ranking-pass time of `options.repeats` runs per engine. The
/// baseline is skipped above `options.ylks_object_cap` objects. Failing
/// points land in [`SuiteOutcome::failures`] and the sweep continues.
///
/// The query point is the center of the data space, so every point of a
/// sweep measures the same browsing geometry.
pub fn run_suite(grid: &BenchGrid, options: &SuiteOptions) -> Result<SuiteOutcome, SuiteError> {
    if grid.points.is_empty() {
        return Err(SuiteError::EmptyGrid);
    }
    if options.repeats < 3 {
        return Err(SuiteError::TooFewRepeats {
            got: options.repeats,
        });
    }

    let mut records = Vec::new();
    let mut failures = Vec::new();

    for point in &grid.points {
        let db = match generate(&point.gen_params()) {
            Ok(db) => db,
            Err(err) => {
                failures.push(PointFailure {
                    point: point.label(),
                    reason: format!("generation failed: {err}"),
                });
                continue;
            }
        };
        let query = QueryPoint(vec![point.space_side * 0.5; point.dims]);

        let sort_start = Instant::now();
        let stream = match build_browsing(&db, &query) {
            Ok(stream) => stream,
            Err(err) => {
                failures.push(PointFailure {
                    point: point.label(),
                    reason: format!("browsing failed: {err}"),
                });
                continue;
            }
        };
        let sort_ms = sort_start.elapsed().as_secs_f64() * 1e3;

        // Gate + warm-up: one untimed run per engine, outputs compared.
        let psr_out = match psr_rank_stream(&db, &stream, point.k) {
            Ok(out) => out,
            Err(err) => {
                failures.push(PointFailure {
                    point: point.label(),
                    reason: format!("psr failed: {err}"),
                });
                continue;
            }
        };
        let run_ylks = point.object_count <= options.ylks_object_cap;
        if run_ylks {
            let ylks_out = match ylks_rank_stream(&db, &stream, point.k) {
                Ok(out) => out,
                Err(err) => {
                    failures.push(PointFailure {
                        point: point.label(),
                        reason: format!("ylks failed: {err}"),
                    });
                    continue;
                }
            };
            let matrix_diff = match matrix_max_abs_diff(&psr_out.matrix, &ylks_out.matrix) {
                Ok(diff) => diff,
                Err(err) => {
                    failures.push(PointFailure {
                        point: point.label(),
                        reason: format!("gate could not compare outputs: {err}"),
                    });
                    continue;
                }
            };
            let diff = matrix_diff.max(objects_max_abs_diff(&psr_out.objects, &ylks_out.objects));
            if diff > options.gate_tolerance {
                failures.push(PointFailure {
                    point: point.label(),
                    reason: format!(
                        "correctness gate: engine outputs differ by {diff:.3e} (tolerance {:.1e})",
                        options.gate_tolerance
                    ),
                });
                continue;
            }
        }

        let (psr_ms, psr_timed) = time_engine(EngineKind::Psr, &db, &stream, point.k, options.repeats);
        records.push(record_from(point, EngineKind::Psr, psr_ms, sort_ms, &psr_timed));
        if run_ylks {
            let (ylks_ms, ylks_timed) =
                time_engine(EngineKind::Ylks, &db, &stream, point.k, options.repeats);
            records.push(record_from(point, EngineKind::Ylks, ylks_ms, sort_ms, &ylks_timed));
        }
    }

    Ok(SuiteOutcome { records, failures })
}

/// Which grid axis a scaling fit varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingAxis {
    /// Database size N.
    ObjectCount,
    /// Ranking depth k.
    Depth,
}

impl ScalingAxis {
    fn value(self, r: &BenchRecord) -> f64 {
        match self {
            ScalingAxis::ObjectCount => r.object_count as f64,
            ScalingAxis::Depth => r.k as f64,
        }
    }
}

impl std::fmt::Display for ScalingAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalingAxis::ObjectCount => "object_count",
            ScalingAxis::Depth => "k",
        })
    }
}

/// Result of a log-log least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Fitted exponent: slope of log(time) against log(axis).
    pub exponent: f64,
    /// Goodness of fit in `[0, 1]` (1 = perfect power law).
    pub r_squared: f64,
    /// Number of records fitted.
    pub points: usize,
}

/// Why a scaling fit could not be computed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    /// Fewer than 3 distinct axis values.
    #[error("scaling fit needs >= 3 records at distinct axis values, got {distinct}")]
    InsufficientPoints { distinct: usize },
    /// Records from more than one engine were mixed.
    #[error("scaling fit requires records from a single engine")]
    MixedEngines,
    /// A dimension other than the fitted axis varies across the records.
    #[error("records vary in {field}, which is not the fitted axis")]
    NonAxisVaried { field: &'static str },
    /// A record carries a non-positive wall time.
    #[error("wall times must be positive for a log-log fit")]
    NonPositiveTime,
}

/// Least-squares fit of `log(wall_time_ms)` against `log(axis)`.
///
/// The records must come from one engine and differ only along `axis`;
/// anything else is a caller error and is reported rather than silently
/// fitted.
pub fn fit_scaling(records: &[BenchRecord], axis: ScalingAxis) -> Result<ScalingFit, FitError> {
    if records.iter().any(|r| r.wall_time_ms <= 0.0) {
        return Err(FitError::NonPositiveTime);
    }
    if records
        .windows(2)
        .any(|w| w[0].engine != w[1].engine)
    {
        return Err(FitError::MixedEngines);
    }
    let uniform = |field: &'static str, ok: bool| -> Result<(), FitError> {
        if ok {
            Ok(())
        } else {
            Err(FitError::NonAxisVaried { field })
        }
    };
    let first = match records.first() {
        Some(first) => first,
        None => return Err(FitError::InsufficientPoints { distinct: 0 }),
    };
    uniform(
        "instances_per_object",
        records
            .iter()
            .all(|r| r.instances_per_object == first.instances_per_object),
    )?;
    uniform(
        "uncertainty_degree",
        records
            .iter()
            .all(|r| r.uncertainty_degree == first.uncertainty_degree),
    )?;
    match axis {
        ScalingAxis::ObjectCount => {
            uniform("k", records.iter().all(|r| r.k == first.k))?
        }
        ScalingAxis::Depth => uniform(
            "object_count",
            records.iter().all(|r| r.object_count == first.object_count),
        )?,
    }

    let mut distinct: Vec<f64> = records.iter().map(|r| axis.value(r)).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("axis values are never NaN"));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(FitError::InsufficientPoints {
            distinct: distinct.len(),
        });
    }

    let xs: Vec<f64> = records.iter().map(|r| axis.value(r).ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.wall_time_ms.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res.abs() < 1e-12 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(ScalingFit {
        exponent: slope,
        r_squared,
        points: records.len(),
    })
}

/// Baseline-over-incremental speedup for one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupPoint {
    /// Database size N.
    pub object_count: usize,
    /// Ranking depth.
    pub k: usize,
    /// Instance-box side length.
    pub uncertainty_degree: f64,
    /// `ylks` wall time divided by `psr` wall time.
    pub speedup: f64,
}

/// Pairs `psr`/`ylks` records measured on identical configurations and
/// returns their speedups, in the order the `psr` records appear.
pub fn pair_speedups(records: &[BenchRecord]) -> Vec<SpeedupPoint> {
    type Key = (usize, usize, usize, u64, u64, u64);
    let key = |r: &BenchRecord| -> Key {
        (
            r.object_count,
            r.instances_per_object,
            r.k,
            r.uncertainty_degree.to_bits(),
            r.existential_mass.to_bits(),
            r.seed,
        )
    };
    let ylks: BTreeMap<Key, f64> = records
        .iter()
        .filter(|r| r.engine == EngineKind::Ylks)
        .map(|r| (key(r), r.wall_time_ms))
        .collect();
    records
        .iter()
        .filter(|r| r.engine == EngineKind::Psr)
        .filter_map(|r| {
            ylks.get(&key(r)).map(|&ylks_ms| SpeedupPoint {
                object_count: r.object_count,
                k: r.k,
                uncertainty_degree: r.uncertainty_degree,
                speedup: ylks_ms / r.wall_time_ms,
            })
        })
        .collect()
}

/// One fitted exponent in a [`SuiteSummary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    /// Engine the fit describes.
    pub engine: EngineKind,
    /// Axis the fit varies.
    pub axis: ScalingAxis,
    /// The fit itself.
    pub fit: ScalingFit,
}

/// Digest of a suite run: every successful exponent fit plus per-point
/// speedups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    /// Number of accepted records.
    pub records: usize,
    /// Points that failed, with reasons.
    pub failures: Vec<PointFailure>,
    /// Exponent fits that were computable from the records.
    pub fits: Vec<LabeledFit>,
    /// Speedups on points where both engines ran.
    pub speedups: Vec<SpeedupPoint>,
}

/// Summarizes a suite run: attempts N- and k-axis fits per engine
/// (skipping combinations the records cannot support) and pairs speedups.
pub fn summarize(outcome: &SuiteOutcome) -> SuiteSummary {
    let mut fits = Vec::new();
    for engine in [EngineKind::Psr, EngineKind::Ylks] {
        let subset: Vec<BenchRecord> = outcome
            .records
            .iter()
            .filter(|r| r.engine == engine)
            .cloned()
            .collect();
        for axis in [ScalingAxis::ObjectCount, ScalingAxis::Depth] {
            if let Ok(fit) = fit_scaling(&subset, axis) {
                fits.push(LabeledFit { engine, axis, fit });
            }
        }
    }
    SuiteSummary {
        records: outcome.records.len(),
        failures: outcome.failures.clone(),
        fits,
        speedups: pair_speedups(&outcome.records),
    }
}

/// I/O failures when persisting benchmark artifacts.
#[derive(Debug, Error)]
pub enum BenchIoError {
    /// Underlying stream error.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Malformed JSON.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// Malformed CSV.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes one JSON object per line, one line per record.
pub fn write_records_jsonl<W: Write>(records: &[BenchRecord], mut out: W) -> Result<(), BenchIoError> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads records produced by [`write_records_jsonl`]; blank lines are
/// ignored.
pub fn read_records_jsonl<R: BufRead>(input: R) -> Result<Vec<BenchRecord>, BenchIoError> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

/// Writes the records as CSV with a header row, for plotting.
pub fn write_records_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<(), BenchIoError> {
    let mut writer = csv::Writer::from_writer(out);
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the summary as pretty-printed JSON.
pub fn write_summary_json<W: Write>(summary: &SuiteSummary, mut out: W) -> Result<(), BenchIoError> {
    serde_json::to_writer_pretty(&mut out, summary)?;
    out.write_all(b"\n")?;
    Ok(())
}
