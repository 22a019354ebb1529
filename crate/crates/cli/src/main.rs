mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use regspec_core::census::{census, estimate_subgraph_probability, overlap_events, Structure};
use regspec_core::experiments::{self, cnbw_route_check, fixed_d_comparison, stein_check, verify_clt, verify_poisson};
use regspec_core::nbwalks::{cnbw_counts, cnbw_divisor_sum};
use regspec_core::sampler::{default_burn_in, sample_range, Method, SamplerConfig};
use regspec_core::spectral::{
    eigen_functional, gamma_trace_identity_check, scaled_spectrum, walk_functional, Basis, NamedFunction,
};
use regspec_core::stats::lambda;
use regspec_core::switchings::{certificate_from_rates, count_backward, count_forward, immigration_death_fixture, CountMode};
use regspec_core::{Cycle, Error, RegularGraph};

use output::Artifacts;

#[derive(Parser, Debug)]
#[command(name = "regspec", version, about = "Cycle counts, switchings and eigenvalue functionals of random regular graphs")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "REGSPEC_THREADS")]
    threads: Option<usize>,
    /// Write `<command>.json`, optional CSV and `manifest.json` here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print JSON (the default).
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Print a flattened key,value CSV instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// pairing-rejection or switching-chain (default picks by d).
    #[arg(long)]
    method: Option<Method>,
    /// Edge swaps per switching-chain sample (default m ceil(ln m)).
    #[arg(long)]
    burn_in: Option<u64>,
}

impl SampleArgs {
    fn config(&self) -> SamplerConfig {
        let mut cfg = SamplerConfig::new(self.n, self.d, self.seed);
        if let Some(m) = self.method {
            cfg = cfg.with_method(m);
        }
        cfg.with_burn_in(self.burn_in.unwrap_or_else(|| default_burn_in(self.n, self.d)))
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StructureKind {
    Cycle,
    TwoCycles,
    Joined,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LimitMode {
    FixedD,
    GrowingD,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw random regular graphs.
    Sample {
        #[command(flatten)]
        s: SampleArgs,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Count cycles of length 3..=r in a graph file.
    Census {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        r: usize,
    },
    /// Estimate the probability that a fixed labelled subgraph appears.
    Prob {
        #[arg(long, value_enum)]
        structure: StructureKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        j: usize,
        /// Shared edges (two-cycles).
        #[arg(long, default_value_t = 1)]
        f: usize,
        /// Joining path length (joined).
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[command(flatten)]
        s: SampleArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        constant: f64,
    },
    /// Count valid switchings on a cycle.
    Switch {
        #[arg(long = "in")]
        input: PathBuf,
        /// Cycle as comma-separated vertices, e.g. "0,1,2".
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        count_forward: bool,
        #[arg(long)]
        count_backward: bool,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Empirical Stein certificate for the short-cycle counts.
    Stein {
        #[command(flatten)]
        s: SampleArgs,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        proposals: usize,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        /// Use the immigration-death chain instead of graphs (certificate is 0).
        #[arg(long)]
        fixture: bool,
    },
    /// Non-backtracking walk counts of a graph file, or a route check over samples.
    Cnbw {
        #[arg(long = "in", conflicts_with_all = ["n", "d"])]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[arg(long)]
        check_divisor_sum: bool,
        #[arg(long, requires = "d")]
        n: Option<usize>,
        #[arg(long, requires = "n")]
        d: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Spectrum of a graph file and a linear eigenvalue functional.
    Spectra {
        #[arg(long = "in")]
        input: PathBuf,
        /// exp, cos, cosh, x^2, gammaK, phiK or poly:c0,c1,..
        #[arg(long, default_value = "exp")]
        f: String,
        #[arg(long, default_value = "gamma")]
        basis: Basis,
        #[arg(long, default_value_t = 12)]
        m: usize,
        #[arg(long, default_value_t = 8)]
        kmax: usize,
    },
    /// Draws from the limit law of a linear eigenvalue functional.
    Limit {
        #[arg(long, value_enum, default_value_t = LimitMode::FixedD)]
        mode: LimitMode,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value = "gamma3")]
        f: String,
        #[arg(long, default_value_t = 12)]
        m: usize,
        #[arg(long, default_value_t = 40)]
        kmax: usize,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Finite-n Y_f against draws of its fixed-d limit.
    CompareLimit {
        #[command(flatten)]
        s: SampleArgs,
        #[arg(long, default_value = "gamma3")]
        f: String,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        limit_draws: usize,
        #[arg(long, default_value_t = 3)]
        eigen_checks: usize,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
    },
    /// Short-cycle counts against independent Poisson limits.
    VerifyPoisson {
        #[command(flatten)]
        s: SampleArgs,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[arg(long, default_value_t = 1.0)]
        constant: f64,
    },
    /// Standardized walk counts against their normal limits.
    VerifyClt {
        #[command(flatten)]
        s: SampleArgs,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Exhaustive metagraph of all regular graphs on n vertices.
    MetagraphCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        r: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample { .. } => "sample",
            Command::Census { .. } => "census",
            Command::Prob { .. } => "prob",
            Command::Switch { .. } => "switch",
            Command::Stein { .. } => "stein",
            Command::Cnbw { .. } => "cnbw",
            Command::Spectra { .. } => "spectra",
            Command::Limit { .. } => "limit",
            Command::CompareLimit { .. } => "compare-limit",
            Command::VerifyPoisson { .. } => "verify-poisson",
            Command::VerifyClt { .. } => "verify-clt",
            Command::MetagraphCheck { .. } => "metagraph-check",
        }
    }
}

/// What a subcommand produced.
struct Outcome {
    params: Value,
    seed: Option<u64>,
    result: Value,
    /// Extra files for `--out`, e.g. sampled graphs.
    files: Vec<(String, String)>,
}

impl Outcome {
    fn new(params: Value, seed: Option<u64>, result: Value) -> Self {
        Outcome { params, seed, result, files: Vec::new() }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

fn parse_alpha(s: &str) -> regspec_core::Result<Cycle> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Argument(format!("bad vertex {t:?} in --alpha"))))
        .collect::<regspec_core::Result<Vec<_>>>()?;
    Cycle::new(&v)
}

fn read_graph(path: &std::path::Path) -> regspec_core::Result<RegularGraph> {
    RegularGraph::read_file(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn sampler_json(cfg: &SamplerConfig) -> Value {
    json!({"n": cfg.n, "d": cfg.d, "seed": cfg.seed, "method": cfg.method.to_string(), "burn_in": cfg.burn_in})
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

fn run(cmd: &Command, writing_files: bool) -> regspec_core::Result<Outcome> {
    match cmd {
        Command::Sample { s, count } => {
            let cfg = s.config();
            let (graphs, stats) = sample_range(&cfg, 0, *count)?;
            let names: Vec<String> = (0..graphs.len()).map(|i| format!("graph_{i:05}.txt")).collect();
            let mut result = json!({
                "count": count,
                "acceptance": {"attempts": stats.attempts, "accepted": stats.accepted, "rate": stats.rate()},
            });
            let mut out = Outcome::new(merge(sampler_json(&cfg), json!({"count": count})), Some(cfg.seed), Value::Null);
            if writing_files {
                result["files"] = json!(names);
                out.files = names.into_iter().zip(graphs.iter().map(RegularGraph::to_text)).collect();
            } else {
                result["graphs"] = json!(graphs.iter().map(RegularGraph::to_text).collect::<Vec<_>>());
            }
            out.result = result;
            Ok(out)
        }
        Command::Census { input, r } => {
            let g = read_graph(input)?;
            let c = census(&g, *r)?;
            let counts: serde_json::Map<String, Value> = (3..=*r).map(|k| (k.to_string(), json!(c.count(k)))).collect();
            let cycles: Vec<String> = c.cycles.iter().map(|c| c.to_string()).collect();
            let result = json!({
                "n": g.n(), "d": g.d(), "r": r,
                "C": counts,
                "total": c.total(),
                "overlap": overlap_events(&g, &c),
                "cycles": cycles,
            });
            Ok(Outcome::new(json!({"in": input, "r": r}), None, result))
        }
        Command::Prob { structure, k, j, f, l, s, samples, constant } => {
            let st = match structure {
                StructureKind::Cycle => Structure::Cycle { k: *k },
                StructureKind::TwoCycles => Structure::TwoCycles { j: *j, k: *k, f: *f },
                StructureKind::Joined => Structure::Joined { j: *j, k: *k, l: *l },
            };
            let cfg = s.config();
            let est = estimate_subgraph_probability(st, &cfg, *samples, *constant)?;
            let params = merge(sampler_json(&cfg), json!({"structure": st, "samples": samples, "constant": constant}));
            Ok(Outcome::new(params, Some(cfg.seed), to_value(&est)))
        }
        Command::Switch { input, alpha, r, count_forward: fwd, count_backward: bwd, mode, mc_samples, seed } => {
            let g = read_graph(input)?;
            let alpha = parse_alpha(alpha)?;
            let mode = match mode {
                Mode::Exact => CountMode::Exact,
                Mode::MonteCarlo => CountMode::MonteCarlo { samples: *mc_samples, seed: *seed },
            };
            // neither flag means both directions
            let (fwd, bwd) = if !fwd && !bwd { (true, true) } else { (*fwd, *bwd) };
            let mut result = json!({"alpha": alpha.to_string(), "k": alpha.len()});
            if fwd {
                result["forward"] = to_value(&count_forward(&g, &alpha, *r, mode)?);
            }
            if bwd {
                result["backward"] = to_value(&count_backward(&g, &alpha, *r, mode)?);
            }
            let params = json!({"in": input, "alpha": alpha.to_string(), "r": r, "mode": mode});
            Ok(Outcome::new(params, Some(*seed), result))
        }
        Command::Stein { s, r, samples, proposals, bootstrap, fixture } => {
            let cfg = s.config();
            let params = merge(
                sampler_json(&cfg),
                json!({"r": r, "samples": samples, "proposals": proposals, "bootstrap": bootstrap, "fixture": fixture}),
            );
            if *fixture {
                let lambdas: Vec<f64> = (0..=*r).map(|k| lambda(cfg.d, k)).collect();
                let obs = immigration_death_fixture(&lambdas, *samples, cfg.seed);
                let cert = certificate_from_rates(&lambdas, &obs)?;
                return Ok(Outcome::new(params, Some(cfg.seed), to_value(&cert)));
            }
            let check = stein_check(&cfg, *r, *samples, *proposals, *bootstrap)?;
            Ok(Outcome::new(params, Some(cfg.seed), to_value(&check.report(&cfg, *proposals))))
        }
        Command::Cnbw { input, kmax, check_divisor_sum, n, d, seed, samples } => match (input, n, d) {
            (Some(path), _, _) => {
                let g = read_graph(path)?;
                let walks = cnbw_counts(&g, *kmax)?;
                let mut result = json!({"n": g.n(), "d": g.d(), "kmax": kmax, "cnbw": walks});
                if *check_divisor_sum {
                    let cen = census(&g, *kmax)?;
                    let ds = cnbw_divisor_sum(&cen, *kmax)?;
                    result["agree"] = json!(ds == walks);
                    result["divisor_sum"] = to_value(&ds);
                    result["overlap"] = to_value(&overlap_events(&g, &cen));
                }
                Ok(Outcome::new(json!({"in": path, "kmax": kmax}), None, result))
            }
            (None, Some(n), Some(d)) => {
                let cfg = SamplerConfig::new(*n, *d, *seed);
                let check = cnbw_route_check(&cfg, *kmax, *samples)?;
                let params = merge(sampler_json(&cfg), json!({"r": kmax, "samples": samples}));
                Ok(Outcome::new(params, Some(*seed), to_value(&check)))
            }
            _ => Err(Error::Argument("cnbw needs --in FILE or --n and --d".into())),
        },
        Command::Spectra { input, f, basis, m, kmax } => {
            let g = read_graph(input)?;
            let fun: NamedFunction = f.parse()?;
            let exp = fun.expand(*basis, g.d(), *m)?;
            let spec = scaled_spectrum::<f64>(&g)?;
            let (s1, s2) = spec.trace_sums();
            let mut result = json!({
                "n": g.n(), "d": g.d(),
                "top": spec.values.first(),
                "second": spec.second(),
                "sum": s1, "sum_squares": s2,
                "expansion": exp,
                "eigen_functional": eigen_functional(&spec, &exp)?,
                "gamma_identity_deviation": gamma_trace_identity_check(&g, *kmax)?,
            });
            if *basis == Basis::Gamma {
                let walks = cnbw_counts(&g, exp.order().max(1))?;
                result["walk_functional"] = json!(walk_functional(&walks, &exp)?);
            }
            let params = json!({"in": input, "f": f, "basis": basis, "m": m, "kmax": kmax});
            Ok(Outcome::new(params, None, result))
        }
        Command::Limit { mode, d, f, m, kmax, count, seed } => {
            let fun: NamedFunction = f.parse()?;
            let growing = matches!(mode, LimitMode::GrowingD);
            let basis = if growing { Basis::Phi } else { Basis::Gamma };
            let exp = fun.expand(basis, *d, *m)?;
            let (summary, _) = experiments::limit(&exp, growing, *kmax, *count, *seed)?;
            let params = json!({
                "mode": if growing { "growing-d" } else { "fixed-d" },
                "d": d, "f": f, "m": m, "kmax": kmax, "count": count, "seed": seed,
            });
            Ok(Outcome::new(params, Some(*seed), json!({"summary": summary, "expansion": exp})))
        }
        Command::CompareLimit { s, f, m, samples, limit_draws, eigen_checks, bootstrap } => {
            let cfg = s.config();
            let exp = f.parse::<NamedFunction>()?.expand(Basis::Gamma, cfg.d, *m)?;
            let cmp = fixed_d_comparison(&cfg, &exp, *samples, *limit_draws, *eigen_checks, *bootstrap)?;
            let params = merge(
                sampler_json(&cfg),
                json!({"f": f, "m": m, "samples": samples, "limit_draws": limit_draws, "bootstrap": bootstrap}),
            );
            Ok(Outcome::new(params, Some(cfg.seed), to_value(&cmp)))
        }
        Command::VerifyPoisson { s, r, samples, bootstrap, constant } => {
            let cfg = s.config();
            let check = verify_poisson(&cfg, *r, *samples, *bootstrap, *constant)?;
            let report = check.report(&cfg);
            let params = merge(report.params.clone(), json!({"bootstrap": bootstrap}));
            Ok(Outcome::new(params, Some(cfg.seed), to_value(&report)))
        }
        Command::VerifyClt { s, kmax, samples } => {
            let cfg = s.config();
            let report = verify_clt(&cfg, *kmax, *samples)?.report(&cfg);
            Ok(Outcome::new(report.params.clone(), Some(cfg.seed), to_value(&report)))
        }
        Command::MetagraphCheck { n, d, r } => {
            let check = experiments::metagraph_check(*n, *d, *r)?;
            Ok(Outcome::new(json!({"n": n, "d": d, "r": r}), None, to_value(&check)))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget(_) => 3,
        Error::Argument(_) | Error::Precondition(_) | Error::InvalidMove(_) | Error::Parse { .. } | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().expect("global pool is built once");
    }
    let threads = rayon::current_num_threads();
    let started = Instant::now();
    let name = cli.command.name();
    let outcome = match run(&cli.command, cli.out.is_some()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let text = serde_json::to_string_pretty(&outcome.result).expect("result serializes") + "\n";
    let csv = if cli.csv {
        match output::to_csv(&outcome.result) {
            Ok(c) => Some(c),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    } else {
        None
    };
    print!("{}", csv.as_deref().unwrap_or(&text));

    if let Some(dir) = &cli.out {
        let written = (|| -> std::io::Result<()> {
            let mut art = Artifacts::new(dir)?;
            art.write(&format!("{name}.json"), &text)?;
            if let Some(c) = &csv {
                art.write(&format!("{name}.csv"), c)?;
            }
            for (file, body) in &outcome.files {
                art.write(file, body)?;
            }
            art.finish(name, &outcome.params, outcome.seed, threads, started.elapsed().as_secs_f64())
        })();
        if let Err(e) = written {
            eprintln!("error: writing {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::SUCCESS
}
