mod catalog;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qlnc::coloring::{directed_edge_coloring, DirectedEdgeColoring, VertexColoring};
use qlnc::compiler::{
    check_independence, compile_chain_sequential, compile_constant_depth, compile_constant_depth_auto,
    compile_inorder, IndependenceWitness, Mode,
};
use qlnc::network::{LinearCode, Network, NodeId};
use qlnc::stabref::{bench_compare, bench_csv, loglog_slope, MAX_BENCH_QUBITS};
use qlnc::verify::{verify_circuit, BranchMode, BranchResult, OracleChoice};
use qlnc::{Modulus, OutcomeSource, QlncCircuit, QubitId};

use catalog::{Entry, Params};

#[derive(Parser)]
#[command(name = "qlnc", version, about = "Compile network codes into entanglement-distribution circuits and verify them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a circuit from a network and code (or a built-in example).
    Compile(CompileArgs),
    /// Check a circuit against its Bell/GHZ target on every requested branch.
    Verify(VerifyArgs),
    /// Execute a circuit once on the tableau engine.
    Run(RunArgs),
    /// Time Z measurements on both simulators over a GHZ-chain family.
    Bench(BenchArgs),
    /// Print a built-in network (and code) as JSON or DOT.
    Export(ExportArgs),
    /// List the built-in example names.
    Examples,
}

#[derive(Args, Clone)]
struct Source {
    /// Built-in example name (see `qlnc examples`).
    #[arg(long, conflicts_with = "network")]
    example: Option<String>,
    /// Network JSON file, or `-` for stdin.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Linear code JSON file (list of {from, to, weight}); all weights 1 if omitted.
    #[arg(long, requires = "network")]
    code: Option<PathBuf>,
    /// Qudit dimension for built-in examples.
    #[arg(short = 'd', long, default_value_t = 2)]
    dim: u32,
    #[arg(long, default_value_t = 3)]
    width: u32,
    #[arg(long, default_value_t = 2)]
    height: u32,
    /// Pair count for the speedup family.
    #[arg(long, default_value_t = 3)]
    k: u32,
    /// Edge count for the chain family.
    #[arg(long, default_value_t = 3)]
    length: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Inorder,
    Constdepth,
    Chain,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, value_enum, default_value = "inorder")]
    mode: ModeArg,
    /// Coloring JSON: {"vertex": {"<node>": color, ...}, "edges": [{from, to, color}, ...]}.
    /// Edge colors are computed when `edges` is absent.
    #[arg(long)]
    coloring: Option<PathBuf>,
    /// Chain mode pairs as `a:b,c:d`; defaults to every transmitter/receiver pair.
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the circuit file here; the report then goes to stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also verify every branch exhaustively and check independence.
    #[arg(long)]
    verify: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Exhaustive,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Auto,
    Dense,
    Stab,
    Tableau,
}

#[derive(Args)]
struct VerifyArgs {
    /// Circuit file written by `compile`, or `-` for stdin.
    file: Option<PathBuf>,
    /// Compile this example instead of reading a file.
    #[command(flatten)]
    src: Source,
    #[arg(long, value_enum, default_value = "inorder")]
    mode: ModeArg,
    /// Target groups as `1,6;3,4`; overrides the groups in the file.
    #[arg(long)]
    groups: Option<String>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    branches: BranchArg,
    /// Branches drawn in sample mode.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, env = "QLNC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    oracle: OracleArg,
    /// Include every branch result in the report.
    #[arg(long)]
    details: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Circuit file, or `-` for stdin.
    file: PathBuf,
    /// Forced outcomes for random measurements, comma separated.
    #[arg(long, conflicts_with = "seed")]
    outcomes: Option<String>,
    #[arg(long, env = "QLNC_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Register sizes, comma separated.
    #[arg(long, default_value = "64,128,256,512,1024,2048,4096")]
    sizes: String,
    /// Relays measured per size.
    #[arg(long, default_value_t = 16)]
    relays: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Accepted for interface uniformity; the workload has no randomness.
    #[arg(long, env = "QLNC_SEED", default_value_t = 0)]
    seed: u64,
    /// CSV output file; stdout if omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// What `compile` writes and `verify` reads.
#[derive(Serialize, Deserialize)]
struct CircuitFile {
    circuit: QlncCircuit,
    groups: Vec<Vec<QubitId>>,
}

#[derive(Serialize)]
struct Report {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    d: u32,
    qubits: usize,
    depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<usize>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    a: Option<u32>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    b: Option<u32>,
    random_measurements: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    branches_verified: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    independence: Option<bool>,
}

#[derive(Serialize)]
struct VerifyOut<'a> {
    pass: bool,
    random_measurements: usize,
    branches_checked: usize,
    first_failure: Option<&'a Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_failure_detail: Option<&'a BranchResult>,
    canonical_agree: bool,
    independence: Option<IndependenceWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    independence_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    branches: Option<&'a [BranchResult]>,
}

#[derive(Deserialize)]
struct ColoringFile {
    vertex: std::collections::BTreeMap<NodeId, u32>,
    #[serde(default)]
    edges: Option<DirectedEdgeColoring>,
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_input(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| anyhow!("bad {what} {x:?}")))
        .collect()
}

fn parse_groups(s: &str) -> Result<Vec<Vec<QubitId>>> {
    s.split(';').filter(|g| !g.trim().is_empty()).map(|g| parse_list(g, "qubit")).collect()
}

fn parse_pairs(s: &str) -> Result<Vec<(NodeId, NodeId)>> {
    s.split(',')
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| anyhow!("pair {p:?} is not a:b"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

fn load_source(src: &Source) -> Result<(String, Entry)> {
    let d = Modulus::new(src.dim)?;
    if let Some(name) = &src.example {
        let p = Params { width: src.width, height: src.height, k: src.k, length: src.length };
        return Ok((name.clone(), catalog::lookup(name, d, p)?));
    }
    let Some(path) = &src.network else { bail!("give --example NAME or --network FILE") };
    let net: Network = parse_json(path)?;
    let code = match &src.code {
        Some(p) => parse_json(p)?,
        None => LinearCode::broadcast(),
    };
    Ok((net.name.clone(), Entry::Coded(net, code)))
}

struct Built {
    name: String,
    file: CircuitFile,
    mode: Option<Mode>,
    bound: Option<usize>,
    a: Option<u32>,
    b: Option<u32>,
}

fn build(src: &Source, mode: ModeArg, coloring: Option<&Path>, pairs: Option<&str>) -> Result<Built> {
    let (name, entry) = load_source(src)?;
    let (net, code) = match entry {
        Entry::Circuit { example, .. } => {
            return Ok(Built {
                name,
                file: CircuitFile { circuit: example.circuit, groups: example.groups },
                mode: None,
                bound: None,
                a: None,
                b: None,
            })
        }
        Entry::Coded(net, code) => (net, code),
    };
    let compiled = match mode {
        ModeArg::Inorder => compile_inorder(&net, &code)?,
        ModeArg::Constdepth => match coloring {
            None => compile_constant_depth_auto(&net, &code)?,
            Some(p) => {
                let cf: ColoringFile = parse_json(p)?;
                let ec = cf.edges.unwrap_or_else(|| directed_edge_coloring(&net.active_edges(&code)));
                compile_constant_depth(&net, &code, &VertexColoring { colors: cf.vertex }, &ec)?
            }
        },
        ModeArg::Chain => {
            let pairs = match pairs {
                Some(s) => parse_pairs(s)?,
                None => net.groups().iter().flat_map(|g| g[1..].iter().map(|&r| (g[0], r))).collect(),
            };
            compile_chain_sequential(net.d, &net.graph_ref(), &pairs)?
        }
    };
    Ok(Built {
        name,
        mode: Some(compiled.mode),
        bound: compiled.bound(),
        a: compiled.a(),
        b: compiled.b(),
        file: CircuitFile { circuit: compiled.circuit, groups: compiled.groups },
    })
}

fn report_for(b: &Built) -> Result<Report> {
    let c = &b.file.circuit;
    Ok(Report {
        name: b.name.clone(),
        mode: b.mode,
        d: c.d.get(),
        qubits: c.qubits().len(),
        depth: c.quantum_depth(),
        bound: b.bound,
        a: b.a,
        b: b.b,
        random_measurements: c.random_measurement_count()?,
        branches_verified: None,
        verified: None,
        independence: None,
    })
}

fn cmd_compile(args: &CompileArgs) -> Result<bool> {
    let built = build(&args.src, args.mode, args.coloring.as_deref(), args.pairs.as_deref())?;
    let mut report = report_for(&built)?;
    let mut ok = true;
    if args.verify {
        let f = &built.file;
        let rep = verify_circuit(&f.circuit, &f.groups, BranchMode::Exhaustive, OracleChoice::Auto)?;
        let ind = check_independence(&f.circuit, &f.groups).map(|w| w.verdict).ok();
        report.branches_verified = Some(rep.branches.len());
        report.verified = Some(rep.pass);
        report.independence = ind;
        ok = rep.pass && ind != Some(false);
    }
    match args.format {
        Format::Dot => {
            write_output(args.out.as_deref(), &built.file.circuit.to_dot())?;
            if args.out.is_some() {
                write_output(None, &serde_json::to_string_pretty(&report)?)?;
            }
        }
        Format::Json => match &args.out {
            Some(p) => {
                write_output(Some(p), &serde_json::to_string_pretty(&built.file)?)?;
                write_output(None, &serde_json::to_string_pretty(&report)?)?;
            }
            None => {
                let all = serde_json::json!({
                    "report": report,
                    "circuit": built.file.circuit,
                    "groups": built.file.groups,
                });
                write_output(None, &serde_json::to_string_pretty(&all)?)?;
            }
        },
    }
    Ok(ok)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let mut file = match (&args.file, &args.src.example, &args.src.network) {
        (Some(p), None, None) => parse_json::<CircuitFile>(p)?,
        (None, _, _) => build(&args.src, args.mode, None, None)?.file,
        _ => bail!("give either a circuit file or --example/--network, not both"),
    };
    if let Some(g) = &args.groups {
        file.groups = parse_groups(g)?;
    }
    let mode = match args.branches {
        BranchArg::Exhaustive => BranchMode::Exhaustive,
        BranchArg::Sample => BranchMode::Sample { count: args.samples, seed: args.seed },
    };
    let oracle = match args.oracle {
        OracleArg::Auto => OracleChoice::Auto,
        OracleArg::Dense => OracleChoice::Dense,
        OracleArg::Stab => OracleChoice::Stab,
        OracleArg::Tableau => OracleChoice::Tableau,
    };
    let rep = verify_circuit(&file.circuit, &file.groups, mode, oracle)?;
    let (independence, independence_error) = match check_independence(&file.circuit, &file.groups) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let pass = rep.pass && independence.as_ref().is_none_or(|w| w.verdict);
    let out = VerifyOut {
        pass,
        random_measurements: rep.random_measurements,
        branches_checked: rep.branches.len(),
        first_failure: rep.first_failure.as_ref(),
        first_failure_detail: rep.branches.iter().find(|b| !b.pass),
        canonical_agree: rep.canonical_agree,
        independence,
        independence_error,
        branches: args.details.then_some(&rep.branches[..]),
    };
    write_output(None, &serde_json::to_string_pretty(&out)?)?;
    Ok(pass)
}

fn cmd_run(args: &RunArgs) -> Result<bool> {
    let file: CircuitFile = parse_json(&args.file)?;
    let mut src = match (&args.outcomes, args.seed) {
        (Some(s), _) => OutcomeSource::forced(parse_list::<u32>(s, "outcome")?),
        (None, Some(seed)) => OutcomeSource::seeded(seed),
        (None, None) => OutcomeSource::constant(0),
    };
    let run = file.circuit.execute(&mut src)?;
    let out = serde_json::json!({
        "outcomes": run.log.outcomes(),
        "applied": run.applied,
        "state": run.state,
        "canonical": run.state.canonicalize(),
    });
    write_output(None, &serde_json::to_string_pretty(&out)?)?;
    Ok(true)
}

fn cmd_bench(args: &BenchArgs) -> Result<bool> {
    let sizes: Vec<usize> = parse_list(&args.sizes, "size")?;
    if let Some(&n) = sizes.iter().find(|&&n| n > MAX_BENCH_QUBITS) {
        bail!("size {n} exceeds the memory guard of {MAX_BENCH_QUBITS} qubits");
    }
    let rows = bench_compare(&sizes, args.relays, args.reps)?;
    write_output(args.out.as_deref(), &bench_csv(&rows))?;
    if sizes.len() >= 2 {
        for engine in ["tableau", "stabilizer"] {
            let pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.engine == engine).map(|r| (r.n as f64, r.wall_ns as f64)).collect();
            eprintln!("{engine}: wall-time log-log slope {:.3}", loglog_slope(&pts));
        }
        let work: Vec<(f64, f64)> =
            rows.iter().filter_map(|r| r.word_ops.map(|w| (r.n as f64, w as f64))).collect();
        eprintln!("stabilizer: word-op log-log slope {:.3}", loglog_slope(&work));
    }
    Ok(true)
}

fn cmd_export(args: &ExportArgs) -> Result<bool> {
    let (_, entry) = load_source(&args.src)?;
    let text = match (entry, args.format) {
        (Entry::Coded(net, code), Format::Dot) => net.to_dot(Some(&code)),
        (Entry::Coded(net, code), Format::Json) => {
            serde_json::to_string_pretty(&serde_json::json!({ "network": net, "code": code }))?
        }
        (Entry::Circuit { net: Some(net), .. }, Format::Dot) => net.to_dot(None),
        (Entry::Circuit { example, .. }, Format::Dot) => example.circuit.to_dot(),
        (Entry::Circuit { example, net }, Format::Json) => {
            serde_json::to_string_pretty(&serde_json::json!({ "network": net, "example": example }))?
        }
    };
    write_output(None, &text)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Compile(a) => cmd_compile(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Export(a) => cmd_export(a),
        Cmd::Examples => {
            println!("{}", catalog::NAMES.join("\n"));
            Ok(true)
        }
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// A closed stdout (e.g. piping into `head`) is not worth reporting.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
