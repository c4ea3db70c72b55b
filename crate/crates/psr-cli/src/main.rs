//! `psr` — command-line front end for probabilistic similarity ranking of
//! uncertain vector data.
//!
//! Subcommands: `gen` (synthetic databases), `rank` (rank probabilities for
//! a query), `verify` (check the incremental engine against a reference),
//! `semantics` (top-k ranking semantics over engine output), and `bench`
//! (timed engine comparisons over a grid of configurations).
//!
//! Every subcommand starts by printing one `effective-config:` line holding
//! all flags, seeds, and SHA-256 hashes of input files, so any output can be
//! reproduced from the log alone.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 verification failure, 4 resource guard tripped.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use psr_bench::{
    run_suite, summarize, write_records_csv, write_records_jsonl, write_summary_json, BenchGrid,
    SuiteError, SuiteOptions,
};
use psr_core::io::{
    read_dataset_file, write_dataset_csv_file, write_dataset_json_file, write_matrix_csv_file,
    write_objects_csv_file,
};
use psr_core::{
    build_browsing, expected_rank, generate, global_top_k, matrix_max_abs_diff,
    possible_worlds_rank_stream, psr_rank_stream, pt_k, u_k_ranks, validate_database,
    ylks_rank_stream, EngineError, GenParams, QueryPoint, RankOutput, RankTable, SemanticsError,
    SemanticsReport, TableLevel, UncertainDatabase, WorldEnumerationError,
};

const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;
const EXIT_VERIFICATION: i32 = 3;
const EXIT_RESOURCE: i32 = 4;

/// A failed run, classified by exit code.
enum Failure {
    /// Flags that parse but make no sense together or out of range: exit 1.
    Usage(String),
    /// Unreadable, unparsable, or invalid input data: exit 2.
    Data(String),
    /// A verification run exceeding its tolerance: exit 3.
    Verification(String),
    /// A resource guard (possible-worlds enumeration limit) tripped: exit 4.
    Resource(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Verification(_) => EXIT_VERIFICATION,
            Failure::Resource(_) => EXIT_RESOURCE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Verification(m) | Failure::Resource(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "psr",
    version,
    about = "Probabilistic similarity ranking for uncertain vector databases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic uncertain database
    Gen(GenArgs),
    /// Compute rank probabilities for a query point
    Rank(RankArgs),
    /// Check the incremental engine against a reference implementation
    Verify(VerifyArgs),
    /// Apply a top-k ranking semantics to engine output
    Semantics(SemanticsArgs),
    /// Time both engines over a grid of configurations
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of objects
    #[arg(long)]
    objects: usize,
    /// Instances per object
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Dimensionality of the vector space
    #[arg(long, default_value_t = 3)]
    dims: usize,
    /// Degree of uncertainty: side length of each object's instance box
    #[arg(long, default_value_t = 2.0)]
    ud: f64,
    /// Side length S of the data space [0, S]^dims
    #[arg(long, default_value_t = 10.0)]
    space: f64,
    /// Generator seed; the sole source of randomness
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Existential mass: probability that an object is absent entirely
    #[arg(long, default_value_t = 0.0)]
    existential: f64,
    /// Output path; a `.json` extension selects JSON, anything else CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    /// Incremental linear-time engine
    Psr,
    /// Quadratic from-scratch baseline
    Ylks,
}

impl EngineArg {
    fn as_str(self) -> &'static str {
        match self {
            EngineArg::Psr => "psr",
            EngineArg::Ylks => "ylks",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    /// One row per instance, in ascending distance order
    Instance,
    /// One row per object, aggregated over its instances
    Object,
}

impl LevelArg {
    fn as_str(self) -> &'static str {
        match self {
            LevelArg::Instance => "instance",
            LevelArg::Object => "object",
        }
    }
}

#[derive(Args)]
struct RankArgs {
    /// Dataset file (.csv or .json)
    #[arg(long)]
    data: PathBuf,
    /// Query point as comma-separated coordinates, e.g. "1.5,2.0,0.0"
    #[arg(long)]
    query: String,
    /// Ranking depth: rank probabilities are computed for positions 1..=k
    #[arg(long)]
    k: usize,
    /// Engine to run
    #[arg(long, value_enum, default_value_t = EngineArg::Psr)]
    engine: EngineArg,
    /// Result granularity
    #[arg(long, value_enum, default_value_t = LevelArg::Instance)]
    level: LevelArg,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ReferenceArg {
    /// Brute-force possible-worlds enumeration (tolerance 1e-9)
    Worlds,
    /// Quadratic from-scratch baseline (tolerance 1e-6)
    Ylks,
}

impl ReferenceArg {
    fn as_str(self) -> &'static str {
        match self {
            ReferenceArg::Worlds => "worlds",
            ReferenceArg::Ylks => "ylks",
        }
    }

    fn tolerance(self) -> f64 {
        match self {
            ReferenceArg::Worlds => 1e-9,
            ReferenceArg::Ylks => 1e-6,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Dataset file (.csv or .json)
    #[arg(long)]
    data: PathBuf,
    /// Query point as comma-separated coordinates
    #[arg(long)]
    query: String,
    /// Ranking depth
    #[arg(long)]
    k: usize,
    /// Reference implementation to compare against
    #[arg(long, value_enum)]
    reference: ReferenceArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Most probable entry at each rank 1..=k
    Ukranks,
    /// Entries whose top-k probability exceeds the threshold
    Ptk,
    /// The k entries with the highest top-k probability
    Globaltopk,
    /// All entries ordered by conditional expected rank
    Expectedrank,
}

impl MethodArg {
    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Ukranks => "ukranks",
            MethodArg::Ptk => "ptk",
            MethodArg::Globaltopk => "globaltopk",
            MethodArg::Expectedrank => "expectedrank",
        }
    }
}

#[derive(Args)]
struct SemanticsArgs {
    /// Dataset file (.csv or .json)
    #[arg(long)]
    data: PathBuf,
    /// Query point as comma-separated coordinates
    #[arg(long)]
    query: String,
    /// Ranking depth
    #[arg(long)]
    k: usize,
    /// Ranking semantics to apply
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Probability threshold in [0, 1]; required by ptk, rejected otherwise
    #[arg(long)]
    threshold: Option<f64>,
    /// Entry granularity the semantics ranks over
    #[arg(long, value_enum, default_value_t = LevelArg::Instance)]
    level: LevelArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid file: JSON of the form {"points": [{"object_count": ..., "k": ..., ...}]}
    #[arg(long)]
    grid: PathBuf,
    /// Timed runs per engine per point; the median is recorded (minimum 3)
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Directory for records.jsonl, records.csv, and summary.json
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Semantics(args) => cmd_semantics(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}

// ---------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------

fn sha256_hex(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn print_config(subcommand: &str, mut fields: serde_json::Map<String, serde_json::Value>) {
    fields.insert("subcommand".into(), subcommand.into());
    fields.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    println!("effective-config: {}", serde_json::Value::Object(fields));
}

fn config_fields(value: serde_json::Value) -> serde_json::Map<String, serde_json::Value> {
    match value {
        serde_json::Value::Object(map) => map,
        _ => unreachable!("config fields are built with json!({{..}})"),
    }
}

fn load_database(path: &Path) -> Result<UncertainDatabase, Failure> {
    let db = read_dataset_file(path)
        .map_err(|e| Failure::Data(format!("cannot load {}: {e}", path.display())))?;
    let report = validate_database(&db);
    if !report.is_ok() {
        return Err(Failure::Data(format!(
            "{} failed validation: {report}",
            path.display()
        )));
    }
    Ok(db)
}

fn parse_query(raw: &str) -> Result<QueryPoint, Failure> {
    let coords = raw
        .split(',')
        .map(|token| token.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| {
            Failure::Usage(format!(
                "--query must be comma-separated numbers, got {raw:?}: {e}"
            ))
        })?;
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Failure::Usage(format!(
            "--query coordinates must be finite, got {raw:?}"
        )));
    }
    Ok(QueryPoint(coords))
}

fn engine_failure(err: EngineError) -> Failure {
    match err {
        EngineError::InvalidDepth => Failure::Usage(err.to_string()),
        other => Failure::Data(other.to_string()),
    }
}

/// Builds the distance-sorted stream and runs one engine over it, timing
/// both phases separately (milliseconds).
fn run_engine(
    db: &UncertainDatabase,
    query: &QueryPoint,
    k: usize,
    engine: EngineArg,
) -> Result<(RankOutput, f64, f64), Failure> {
    let sort_start = Instant::now();
    let stream = build_browsing(db, query).map_err(|e| Failure::Data(e.to_string()))?;
    let sort_ms = sort_start.elapsed().as_secs_f64() * 1e3;

    let rank_start = Instant::now();
    let output = match engine {
        EngineArg::Psr => psr_rank_stream(db, &stream, k),
        EngineArg::Ylks => ylks_rank_stream(db, &stream, k),
    }
    .map_err(engine_failure)?;
    let wall_ms = rank_start.elapsed().as_secs_f64() * 1e3;
    Ok((output, sort_ms, wall_ms))
}

// ---------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    print_config(
        "gen",
        config_fields(json!({
            "objects": args.objects,
            "instances": args.instances,
            "dims": args.dims,
            "ud": args.ud,
            "space": args.space,
            "seed": args.seed,
            "existential": args.existential,
            "out": args.out.display().to_string(),
        })),
    );
    let params = GenParams {
        object_count: args.objects,
        instances_per_object: args.instances,
        dims: args.dims,
        space_side: args.space,
        uncertainty_degree: args.ud,
        existential_mass: args.existential,
        seed: args.seed,
    };
    let db = generate(&params).map_err(|e| Failure::Data(e.to_string()))?;
    let as_json = args.out.extension().is_some_and(|ext| ext == "json");
    let written = if as_json {
        write_dataset_json_file(&args.out, &db)
    } else {
        write_dataset_csv_file(&args.out, &db)
    };
    written.map_err(|e| Failure::Data(format!("cannot write {}: {e}", args.out.display())))?;
    let hash = sha256_hex(&args.out)?;
    println!(
        "wrote: {} objects={} instances={} sha256={}",
        args.out.display(),
        db.object_count(),
        db.total_instance_count(),
        hash
    );
    Ok(())
}

fn cmd_rank(args: RankArgs) -> Result<(), Failure> {
    let data_sha256 = sha256_hex(&args.data)?;
    print_config(
        "rank",
        config_fields(json!({
            "data": args.data.display().to_string(),
            "data_sha256": data_sha256,
            "query": args.query,
            "k": args.k,
            "engine": args.engine.as_str(),
            "level": args.level.as_str(),
            "out": args.out.display().to_string(),
        })),
    );
    let db = load_database(&args.data)?;
    let query = parse_query(&args.query)?;
    let (output, sort_ms, wall_ms) = run_engine(&db, &query, args.k, args.engine)?;

    match args.level {
        LevelArg::Instance => write_matrix_csv_file(&args.out, &output.matrix),
        LevelArg::Object => write_objects_csv_file(&args.out, &output.objects),
    }
    .map_err(|e| Failure::Data(format!("cannot write {}: {e}", args.out.display())))?;

    let stats = output.stats;
    let early_stop = if stats.early_stopped {
        stats.rows_emitted.to_string()
    } else {
        "none".to_owned()
    };
    println!(
        "rank: instances={} rows_emitted={} early_stop_row={} wall_ms={:.3} sort_ms={:.3} avg_aol={:.2} dp_fallbacks={}",
        stats.instances_total,
        stats.rows_emitted,
        early_stop,
        wall_ms,
        sort_ms,
        stats.avg_active_objects,
        stats.dp_fallbacks
    );
    let out_hash = sha256_hex(&args.out)?;
    println!("wrote: {} sha256={}", args.out.display(), out_hash);
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let data_sha256 = sha256_hex(&args.data)?;
    print_config(
        "verify",
        config_fields(json!({
            "data": args.data.display().to_string(),
            "data_sha256": data_sha256,
            "query": args.query,
            "k": args.k,
            "reference": args.reference.as_str(),
        })),
    );
    let db = load_database(&args.data)?;
    let query = parse_query(&args.query)?;

    let stream = build_browsing(&db, &query).map_err(|e| Failure::Data(e.to_string()))?;
    let engine_out = psr_rank_stream(&db, &stream, args.k).map_err(engine_failure)?;
    let reference_out = match args.reference {
        ReferenceArg::Worlds => {
            possible_worlds_rank_stream(&db, &stream, args.k).map_err(|e| match e {
                WorldEnumerationError::TooManyWorlds { .. } => Failure::Resource(e.to_string()),
                WorldEnumerationError::Engine(inner) => engine_failure(inner),
            })?
        }
        ReferenceArg::Ylks => ylks_rank_stream(&db, &stream, args.k).map_err(engine_failure)?,
    };

    let diff = matrix_max_abs_diff(&engine_out.matrix, &reference_out.matrix)
        .map_err(|e| Failure::Data(e.to_string()))?;
    let tolerance = args.reference.tolerance();
    println!(
        "verify: reference={} max-abs-diff={:.3e} tolerance={:.0e}",
        args.reference.as_str(),
        diff,
        tolerance
    );
    if diff <= tolerance {
        println!("verify: PASS");
        Ok(())
    } else {
        println!("verify: FAIL");
        Err(Failure::Verification(format!(
            "max abs diff {diff:.3e} exceeds tolerance {tolerance:.0e} against reference {}",
            args.reference.as_str()
        )))
    }
}

fn semantics_failure(err: SemanticsError) -> Failure {
    match err {
        SemanticsError::InvalidDepth { .. } | SemanticsError::ThresholdOutOfRange { .. } => {
            Failure::Usage(err.to_string())
        }
        SemanticsError::EmptyTable | SemanticsError::RaggedRows => Failure::Data(err.to_string()),
    }
}

fn cmd_semantics(args: SemanticsArgs) -> Result<(), Failure> {
    let data_sha256 = sha256_hex(&args.data)?;
    print_config(
        "semantics",
        config_fields(json!({
            "data": args.data.display().to_string(),
            "data_sha256": data_sha256,
            "query": args.query,
            "k": args.k,
            "method": args.method.as_str(),
            "threshold": args.threshold,
            "level": args.level.as_str(),
        })),
    );
    let threshold = match (args.method, args.threshold) {
        (MethodArg::Ptk, Some(t)) => Some(t),
        (MethodArg::Ptk, None) => {
            return Err(Failure::Usage("--method ptk requires --threshold".into()))
        }
        (_, Some(_)) => {
            return Err(Failure::Usage(format!(
                "--threshold only applies to --method ptk, not {}",
                args.method.as_str()
            )))
        }
        (_, None) => None,
    };
    let db = load_database(&args.data)?;
    let query = parse_query(&args.query)?;
    let (output, _, _) = run_engine(&db, &query, args.k, EngineArg::Psr)?;
    let table = match args.level {
        LevelArg::Instance => RankTable::from_matrix(&output.matrix),
        LevelArg::Object => RankTable::from_objects(&output.objects),
    };
    let level = match args.level {
        LevelArg::Instance => TableLevel::Instance,
        LevelArg::Object => TableLevel::Object,
    };
    let report = match args.method {
        MethodArg::Ukranks => {
            let assignments = u_k_ranks(&table, args.k).map_err(semantics_failure)?;
            SemanticsReport::from_ukranks(level, &assignments, args.k)
        }
        MethodArg::Ptk => {
            let t = threshold.expect("checked above");
            let entries = pt_k(&table, args.k, t).map_err(semantics_failure)?;
            SemanticsReport::from_ptk(level, &entries, args.k, t)
        }
        MethodArg::Globaltopk => {
            let result = global_top_k(&table, args.k).map_err(semantics_failure)?;
            SemanticsReport::from_global_top_k(level, &result, args.k)
        }
        MethodArg::Expectedrank => {
            let entries = expected_rank(&table).map_err(semantics_failure)?;
            SemanticsReport::from_expected_rank(level, &entries, args.k)
        }
    };
    let rendered = serde_json::to_string(&report)
        .map_err(|e| Failure::Data(format!("cannot serialize report: {e}")))?;
    println!("semantics: {rendered}");
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let grid_sha256 = sha256_hex(&args.grid)?;
    print_config(
        "bench",
        config_fields(json!({
            "grid": args.grid.display().to_string(),
            "grid_sha256": grid_sha256,
            "repeats": args.repeats,
            "out": args.out.as_ref().map(|p| p.display().to_string()),
        })),
    );
    let grid_text = fs::read_to_string(&args.grid)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", args.grid.display())))?;
    let grid: BenchGrid = serde_json::from_str(&grid_text)
        .map_err(|e| Failure::Data(format!("cannot parse {}: {e}", args.grid.display())))?;
    let options = SuiteOptions {
        repeats: args.repeats,
        ..SuiteOptions::default()
    };
    let outcome = run_suite(&grid, &options).map_err(|e| match e {
        SuiteError::TooFewRepeats { .. } => Failure::Usage(e.to_string()),
        SuiteError::EmptyGrid => Failure::Data(e.to_string()),
    })?;

    for record in &outcome.records {
        let line = serde_json::to_string(record)
            .map_err(|e| Failure::Data(format!("cannot serialize record: {e}")))?;
        println!("{line}");
    }
    for failure in &outcome.failures {
        eprintln!("point-failure: {}: {}", failure.point, failure.reason);
    }

    let summary = summarize(&outcome);
    for fit in &summary.fits {
        let line = serde_json::to_string(fit)
            .map_err(|e| Failure::Data(format!("cannot serialize fit: {e}")))?;
        println!("fit: {line}");
    }
    for speedup in &summary.speedups {
        let line = serde_json::to_string(speedup)
            .map_err(|e| Failure::Data(format!("cannot serialize speedup: {e}")))?;
        println!("speedup: {line}");
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))?;
        let write_to = |name: &str| -> Result<BufWriter<File>, Failure> {
            let path = dir.join(name);
            Ok(BufWriter::new(File::create(&path).map_err(|e| {
                Failure::Data(format!("cannot create {}: {e}", path.display()))
            })?))
        };
        write_records_jsonl(&outcome.records, write_to("records.jsonl")?)
            .map_err(|e| Failure::Data(e.to_string()))?;
        write_records_csv(&outcome.records, write_to("records.csv")?)
            .map_err(|e| Failure::Data(e.to_string()))?;
        write_summary_json(&summary, write_to("summary.json")?)
            .map_err(|e| Failure::Data(e.to_string()))?;
        println!(
            "wrote: {} records.jsonl records.csv summary.json",
            dir.display()
        );
    }
    println!(
        "bench: records={} failures={} fits={} speedups={}",
        outcome.records.len(),
        outcome.failures.len(),
        summary.fits.len(),
        summary.speedups.len()
    );
    Ok(())
}
