use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use ubg_spanner::distsim::{run_distributed, SimConfig};
use ubg_spanner::error::{Error, Result};
use ubg_spanner::geometry::{generate_instance, EdgePolicy, UbgInstance};
use ubg_spanner::graph::connected_components;
use ubg_spanner::greedy::seq_greedy;
use ubg_spanner::relaxed::{run_relaxed_greedy, PhaseParams};
use ubg_spanner::verify::{
    check_degree, check_spanner, median, power_cost, spanner_graph, weight_ratio, CheckResult,
    VerificationReport,
};

#[derive(Parser)]
#[command(name = "ubg-spanner", version, about = "Spanners of quasi unit ball graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Build a spanner of an instance and certify it.
    Run(RunArgs),
    /// Sweep sizes and seeds, writing one CSV row per cell.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    #[arg(long, default_value = "all")]
    policy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    SeqGreedy,
    Relaxed,
    Dist,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::SeqGreedy => "seq-greedy",
            Algo::Relaxed => "relaxed",
            Algo::Dist => "dist",
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Recorded in the transcript of a distributed run; the other engines
    /// are deterministic and ignore it.
    #[arg(long)]
    seed: Option<u64>,
    /// Where the distributed run writes its transcript. Defaults to the
    /// output path with a `.transcript.json` extension.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Where to write the verification report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    sizes: Vec<usize>,
    /// Number of seeds; cells use seeds 1..=seeds.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 1.5)]
    t: f64,
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value = "bernoulli:0.5")]
    policy: String,
    #[arg(long, value_enum, default_value = "dist")]
    algo: Algo,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-size medians, with `median` in the seed column.
    #[arg(long)]
    medians: Option<PathBuf>,
    /// Fill the ms_elapsed column. Off by default so output is reproducible.
    #[arg(long)]
    wall_time: bool,
}

/// Spanner file written by `run`.
#[derive(Serialize)]
struct SpannerOut {
    t: f64,
    algo: &'static str,
    params: Option<PhaseParams>,
    edges: Vec<(usize, usize)>,
    phases: Value,
}

struct Built {
    out: SpannerOut,
    transcript: Option<String>,
    rounds_total: Option<u64>,
    rounds_nonempty: Option<u64>,
}

fn build(inst: &UbgInstance, algo: Algo, t: f64, seed: Option<u64>) -> Result<Built> {
    if !(t >= 1.0) {
        return Err(Error::Usage(format!("stretch must be at least 1, got {t}")));
    }
    match algo {
        Algo::SeqGreedy => Ok(Built {
            out: SpannerOut {
                t,
                algo: algo.name(),
                params: None,
                edges: seq_greedy(&inst.graph(), t),
                phases: json!([]),
            },
            transcript: None,
            rounds_total: None,
            rounds_nonempty: None,
        }),
        Algo::Relaxed => {
            let run = run_relaxed_greedy(inst, t)?;
            let file = run.to_file();
            Ok(Built {
                out: SpannerOut {
                    t,
                    algo: algo.name(),
                    params: Some(file.params),
                    edges: file.edges,
                    phases: serde_json::to_value(&file.phases)?,
                },
                transcript: None,
                rounds_total: None,
                rounds_nonempty: None,
            })
        }
        Algo::Dist => {
            let mut cfg = SimConfig::new(inst, t)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let tr = run_distributed(&cfg)?;
            Ok(Built {
                out: SpannerOut {
                    t,
                    algo: algo.name(),
                    params: Some(cfg.params),
                    edges: tr.edges.clone(),
                    phases: serde_json::to_value(&tr.phases)?,
                },
                rounds_total: Some(tr.rounds_total),
                rounds_nonempty: Some(tr.rounds_nonempty_phases),
                transcript: Some(tr.to_json()?),
            })
        }
    }
}

fn certify(inst: &UbgInstance, edges: &[(usize, usize)], t: f64) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    report.insert("stretch", check_spanner(inst, edges, t)?);
    report.insert("max_degree", CheckResult::new(true, check_degree(inst.n(), edges), Value::Null));
    let connected = connected_components(&inst.graph()).len() <= 1;
    let ratio = if connected {
        match weight_ratio(inst, edges) {
            Ok(r) => CheckResult::new(true, r, Value::Null),
            Err(e) => CheckResult::new(false, Value::Null, e.to_string()),
        }
    } else {
        CheckResult::new(true, Value::Null, "instance is disconnected")
    };
    report.insert("weight_ratio", ratio);
    report.insert("power_cost", CheckResult::new(true, power_cost(&spanner_graph(inst, edges)?), Value::Null));
    Ok(report)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn cmd_gen(a: GenArgs) -> Result<bool> {
    let policy: EdgePolicy = a.policy.parse()?;
    let inst = generate_instance(a.n, a.d, a.alpha, policy, a.seed)?;
    inst.write(&a.out)?;
    Ok(true)
}

fn cmd_run(a: RunArgs) -> Result<bool> {
    let inst = UbgInstance::read(&a.input)?;
    let built = build(&inst, a.algo, a.t, a.seed)?;
    let report = certify(&inst, &built.out.edges, a.t)?;
    if let Some(path) = &a.report {
        write(path, &report.to_json()?)?;
    }
    if !report.all_pass() {
        eprintln!("certificate failed, nothing written: {}", report.to_json()?);
        return Ok(false);
    }
    write(&a.out, &serde_json::to_string_pretty(&built.out)?)?;
    if let Some(tr) = &built.transcript {
        let path = a.transcript.clone().unwrap_or_else(|| a.out.with_extension("transcript.json"));
        write(&path, tr)?;
    }
    Ok(true)
}

/// Whole numbers print without a trailing `.0`.
fn compact<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) if v.fract() == 0.0 && v.abs() < 1e15 => s.serialize_i64(*v as i64),
        Some(v) => s.serialize_f64(*v),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Serialize)]
struct Row {
    size: usize,
    seed: String,
    algo: &'static str,
    t: f64,
    #[serde(serialize_with = "compact")]
    max_degree: Option<f64>,
    weight_ratio: f64,
    #[serde(serialize_with = "compact")]
    rounds_total: Option<f64>,
    #[serde(serialize_with = "compact")]
    rounds_nonempty_phases: Option<f64>,
    #[serde(serialize_with = "compact")]
    phases: Option<f64>,
    ms_elapsed: Option<f64>,
}

fn bench_cell(a: &BenchArgs, policy: EdgePolicy, size: usize, seed: u64) -> Result<std::result::Result<Row, String>> {
    let inst = generate_instance(size, a.d, a.alpha, policy, seed)?;
    let start = Instant::now();
    let built = build(&inst, a.algo, a.t, None)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let edges = &built.out.edges;
    let stretch = check_spanner(&inst, edges, a.t)?;
    if !stretch.pass {
        return Ok(Err(format!("size {size}, seed {seed}: stretch {} at {}", stretch.value, stretch.witness)));
    }
    Ok(Ok(Row {
        size,
        seed: seed.to_string(),
        algo: a.algo.name(),
        t: a.t,
        max_degree: Some(check_degree(inst.n(), edges) as f64),
        weight_ratio: weight_ratio(&inst, edges)?,
        rounds_total: built.rounds_total.map(|r| r as f64),
        rounds_nonempty_phases: built.rounds_nonempty.map(|r| r as f64),
        phases: Some(built.out.phases.as_array().map_or(0, |p| p.iter().filter(|x| x["i"] != 0).count()) as f64),
        ms_elapsed: a.wall_time.then_some(elapsed),
    }))
}

fn write_csv(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn medians(rows: &[Row]) -> Vec<Row> {
    let mut out = Vec::new();
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.dedup();
    for size in sizes {
        let cell: Vec<&Row> = rows.iter().filter(|r| r.size == size).collect();
        let med = |f: &dyn Fn(&Row) -> Option<f64>| -> Option<f64> {
            let mut v: Vec<f64> = cell.iter().filter_map(|r| f(r)).collect();
            (!v.is_empty()).then(|| median(&mut v))
        };
        out.push(Row {
            size,
            seed: "median".into(),
            algo: cell[0].algo,
            t: cell[0].t,
            max_degree: med(&|r| r.max_degree),
            weight_ratio: med(&|r| Some(r.weight_ratio)).unwrap_or(0.0),
            rounds_total: med(&|r| r.rounds_total),
            rounds_nonempty_phases: med(&|r| r.rounds_nonempty_phases),
            phases: med(&|r| r.phases),
            ms_elapsed: med(&|r| r.ms_elapsed),
        });
    }
    out
}

fn cmd_bench(a: BenchArgs) -> Result<bool> {
    let policy: EdgePolicy = a.policy.parse()?;
    if a.sizes.is_empty() || a.seeds == 0 {
        return Err(Error::Usage("need at least one size and one seed".into()));
    }
    let cells: Vec<(usize, u64)> = a
        .sizes
        .iter()
        .flat_map(|&s| (1..=a.seeds).map(move |seed| (s, seed)))
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(size, seed)| bench_cell(&a, policy, size, seed))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(msg) => {
                eprintln!("certificate failed, nothing written: {msg}");
                return Ok(false);
            }
        }
    }
    write_csv(&a.out, &rows)?;
    if let Some(path) = &a.medians {
        write_csv(path, &medians(&rows))?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
