//! `dmatch` command-line front end.
//!
//! Exit codes: 0 success / found, 1 nothing found (or violations), 2 bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dmatch::distopt::{min_distortion, min_distortion_naive};
use dmatch::gadgets::{gen_clique_instance, gen_min_distortion_instance, CliqueInstance, Graph};
use dmatch::io::{metric_to_json, parse_metric};
use dmatch::matcher::{solve_distortion, solve_distortion_with_stats, Solution};
use dmatch::nets::build_layer;
use dmatch::oracle::{brute_k_clique, brute_min_distortion, brute_rho_matchings};
use dmatch::{achieved_rho, FiniteMetric, Matching, Scale};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "dmatch", version, about = "Low-distortion matchings in doubling metrics")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a clique-gadget instance (X.json, Y.json, graph.json, manifest.json).
    Gen(GenArgs),
    /// Find a (1+ε)ρ-matching whenever a ρ-matching exists.
    Match(MatchArgs),
    /// (1+ε)-approximate minimum distortion.
    Distort(DistortArgs),
    /// Exhaustive answers for small inputs.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Check a metric file for violations.
    Validate { metric: PathBuf },
    /// Print one net layer of a space.
    NetDump {
        #[arg(long)]
        space: PathBuf,
        /// Layer radius is 2^r_exp.
        #[arg(long, allow_hyphen_values = true)]
        r_exp: i32,
        #[arg(long)]
        no_check: bool,
    },
    /// Time the matcher on synthetic planar instances; CSV on stdout.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Graph file; a random graph is drawn from the seed when absent.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Vertices of the random graph.
    #[arg(long, default_value_t = 24)]
    m: usize,
    /// Edge probability of the random graph.
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    rho: f64,
    /// Add the far point pair, for minimum-distortion experiments.
    #[arg(long)]
    min_distortion: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long)]
    space: PathBuf,
    /// Skip triangle-inequality validation of matrix input.
    #[arg(long)]
    no_check: bool,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    eps: f64,
    /// Return every kept matching.
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct DistortArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    eps: f64,
    /// Sweep every expansion pair instead of using pair-decomposition lengths.
    #[arg(long)]
    naive: bool,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Every ρ-matching by enumeration.
    Match {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        all: bool,
    },
    /// Exact minimum distortion by enumeration.
    Distort {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// First k-clique of a graph.
    Clique {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1.2)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
}

/// What a successful command found.
enum Verdict {
    Found,
    Nothing,
}

fn read_metric(path: &Path, check: bool) -> Result<FiniteMetric> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_metric(&text, check).with_context(|| format!("loading {}", path.display()))
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("loading graph {}", path.display()))
}

impl Inputs {
    fn load(&self) -> Result<(FiniteMetric, FiniteMetric)> {
        let x = read_metric(&self.pattern, !self.no_check)?;
        let y = read_metric(&self.space, !self.no_check)?;
        if x.len() > y.len() {
            bail!("pattern has {} points but the space only {}", x.len(), y.len());
        }
        Ok((x, y))
    }
}

fn print(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn match_report(
    x: &FiniteMetric,
    y: &FiniteMetric,
    first: Option<&Matching>,
    all: Option<&[Matching]>,
) -> Result<Verdict> {
    let achieved = first.map(|m| achieved_rho(m, x, y)).transpose()?;
    let mut out = json!({
        "found": first.is_some(),
        "matching": first.map(Matching::targets),
        "achieved_rho": achieved,
    });
    if let Some(all) = all {
        out["matchings"] = json!(all.iter().map(Matching::targets).collect::<Vec<_>>());
    }
    print(&out)?;
    Ok(if first.is_some() {
        Verdict::Found
    } else {
        Verdict::Nothing
    })
}

fn random_graph(rng: &mut ChaCha8Rng, m: usize, density: f64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&density) {
        bail!("density must lie in [0, 1], got {density}");
    }
    let mut edges = Vec::new();
    for u in 0..m {
        for v in u + 1..m {
            if rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::new(m, edges)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen(args: &GenArgs, seed: u64) -> Result<Verdict> {
    let graph = match &args.graph {
        Some(path) => read_graph(path)?,
        None => random_graph(&mut ChaCha8Rng::seed_from_u64(seed), args.m, args.density)?,
    };
    let inst: CliqueInstance = if args.min_distortion {
        gen_min_distortion_instance(&graph, args.k, args.rho)?
    } else {
        gen_clique_instance(&graph, args.k, args.rho)?
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out.join("X.json"), &metric_to_json(&inst.x))?;
    write(&args.out.join("Y.json"), &metric_to_json(&inst.y))?;
    write(&args.out.join("graph.json"), &serde_json::to_string(&graph)?)?;
    let index_map: Vec<Option<[usize; 2]>> = (0..inst.y.len())
        .map(|i| inst.ring_vertex(i).map(|(r, v)| [r, v]))
        .collect();
    let manifest = json!({
        "graph": "graph.json",
        "pattern": "X.json",
        "space": "Y.json",
        "k": inst.k,
        "m": inst.m,
        "rho": inst.rho,
        "lambda": inst.lambda,
        "far_point": inst.far_point(),
        "index_map": index_map,
    });
    write(
        &args.out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(Verdict::Found)
}

fn validate(path: &Path) -> Result<Verdict> {
    let metric = read_metric(path, false)?;
    let report = metric.validate();
    let violations: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
    print(&json!({ "n": metric.len(), "valid": report.is_valid(), "violations": violations }))?;
    Ok(if report.is_valid() {
        Verdict::Found
    } else {
        Verdict::Nothing
    })
}

/// `k` points evenly spaced on a circle of radius 4, and `n` uniform points
/// of density 1/100 with a jittered copy of the pattern planted in place of
/// the first `k`.
fn planted_circle(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<(FiniteMetric, FiniteMetric)> {
    let side = (n as f64).sqrt() * 10.0;
    let shape: Vec<[f64; 2]> = (0..k)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / k as f64;
            [4.0 * a.cos(), 4.0 * a.sin()]
        })
        .collect();
    let mut coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.0..side)).collect();
    let at = [rng.gen_range(0.0..side), rng.gen_range(0.0..side)];
    for (i, s) in shape.iter().enumerate() {
        coords[2 * i] = at[0] + s[0] * rng.gen_range(0.98..1.02);
        coords[2 * i + 1] = at[1] + s[1] * rng.gen_range(0.98..1.02);
    }
    let x = FiniteMetric::from_points(shape.iter().map(|s| s.to_vec()).collect())?;
    Ok((x, FiniteMetric::from_flat_points(2, coords)?))
}

fn bench(args: &BenchArgs, seed: u64) -> Result<Verdict> {
    let mut out = csv::Writer::from_writer(std::io::stdout());
    out.write_record(["n", "k", "rho", "eps", "found", "layers", "max_set_size", "seconds"])?;
    for &n in &args.sizes {
        if n < args.k || args.k < 2 {
            bail!("need 2 ≤ k ≤ n, got k = {} and n = {n}", args.k);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
        let (x, y) = planted_circle(&mut rng, n, args.k)?;
        let start = Instant::now();
        let (solution, stats) = solve_distortion_with_stats(&x, &y, args.rho, args.eps, false)?;
        let seconds = start.elapsed().as_secs_f64();
        out.write_record([
            n.to_string(),
            args.k.to_string(),
            args.rho.to_string(),
            args.eps.to_string(),
            solution.is_found().to_string(),
            stats.layers.to_string(),
            stats.max_set_size.to_string(),
            format!("{seconds:.6}"),
        ])?;
        out.flush()?;
    }
    Ok(Verdict::Found)
}

fn run(cli: Cli) -> Result<Verdict> {
    match cli.command {
        Command::Gen(args) => gen(&args, cli.seed),
        Command::Match(args) => {
            let (x, y) = args.inputs.load()?;
            match solve_distortion(&x, &y, args.rho, args.eps, args.all)? {
                Solution::All(all) => match_report(&x, &y, all.first(), Some(&all)),
                other => match_report(&x, &y, other.first(), None),
            }
        }
        Command::Distort(args) => {
            let (x, y) = args.inputs.load()?;
            let best = if args.naive {
                min_distortion_naive(&x, &y, args.eps)?
            } else {
                min_distortion(&x, &y, args.eps)?
            };
            print(&json!({ "delta": best.delta, "matching": best.matching.targets() }))?;
            Ok(Verdict::Found)
        }
        Command::Oracle(OracleCommand::Match { inputs, rho, all }) => {
            let (x, y) = inputs.load()?;
            let found = brute_rho_matchings(&x, &y, rho, if all { None } else { Some(1) })?;
            match_report(&x, &y, found.first(), all.then_some(&found[..]))
        }
        Command::Oracle(OracleCommand::Distort { inputs }) => {
            let (x, y) = inputs.load()?;
            let (delta, matching) = brute_min_distortion(&x, &y)?;
            print(&json!({ "delta": delta, "matching": matching.targets() }))?;
            Ok(Verdict::Found)
        }
        Command::Oracle(OracleCommand::Clique { graph, k }) => {
            let clique = brute_k_clique(&read_graph(&graph)?, k)?;
            print(&json!({ "found": clique.is_some(), "clique": clique }))?;
            Ok(if clique.is_some() {
                Verdict::Found
            } else {
                Verdict::Nothing
            })
        }
        Command::Validate { metric } => validate(&metric),
        Command::NetDump { space, r_exp, no_check } => {
            let y = read_metric(&space, !no_check)?;
            print(&build_layer(&y, Scale::from_exp(r_exp))?.dump())?;
            Ok(Verdict::Found)
        }
        Command::Bench(args) => bench(&args, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(Verdict::Found) => ExitCode::SUCCESS,
        Ok(Verdict::Nothing) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
