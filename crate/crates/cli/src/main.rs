use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iqpdamp::bounds::{select_k, BoundsError, ErrorBudget};
use iqpdamp::circuit::{random_circuit, Circuit, CircuitError};
use iqpdamp::experiments::{run_fig2, Fig2Config};
use iqpdamp::numfmt::fmt_g17;
use iqpdamp::pipeline::{run, Cutoff, Simulation};
use iqpdamp::sampler::sample;
use iqpdamp::Error;
use serde_json::json;

const EXIT_USAGE: u8 = 2;
const EXIT_REFUSED: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "iqpdamp", version, about = "Sample noisy IQP circuits under amplitude damping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the truncated coefficient table and its error budget.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cutoff: CutoffArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Draw samples from the truncated output distribution.
    Sample {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cutoff: CutoffArgs,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Report the error budget without simulating.
    Bounds {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cutoff: CutoffArgs,
    },
    /// Check a circuit and print a summary.
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Truncation error versus cutoff over a seeded random-circuit ensemble.
    ReproduceFig2 {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    choice: SourceChoice,
    /// Seed for `--random`.
    #[arg(long = "random-seed", default_value_t = 0)]
    random_seed: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceChoice {
    /// Circuit file in the text format.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Random circuit `n,d,p,l` drawn with `--random-seed`.
    #[arg(long, value_parser = parse_random)]
    random: Option<RandomSpec>,
}

#[derive(Clone, Copy)]
struct RandomSpec {
    n: usize,
    d: usize,
    p: f64,
    l: usize,
}

fn parse_random(s: &str) -> Result<RandomSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, d, p, l] = parts.as_slice() else {
        return Err("expected n,d,p,l".into());
    };
    let int = |x: &str, name: &str| x.parse::<usize>().map_err(|e| format!("{name}: {e}"));
    Ok(RandomSpec {
        n: int(n, "n")?,
        d: int(d, "d")?,
        p: p.parse().map_err(|e| format!("p: {e}"))?,
        l: int(l, "l")?,
    })
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CutoffArgs {
    /// Target total-variation error; the cutoff is chosen to certify it.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fixed Hamming-weight cutoff.
    #[arg(long)]
    k: Option<usize>,
}

impl CutoffArgs {
    fn cutoff(&self) -> Cutoff {
        match (self.epsilon, self.k) {
            (Some(eps), _) => Cutoff::Epsilon(eps),
            (None, Some(k)) => Cutoff::Fixed(k),
            (None, None) => unreachable!("clap requires one of --epsilon and --k"),
        }
    }
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl Output {
    fn write(&self, body: &str) -> io::Result<()> {
        match &self.out {
            Some(path) => fs::write(path, body),
            None => {
                let mut out = BufWriter::new(io::stdout().lock());
                out.write_all(body.as_bytes())?;
                out.flush()
            }
        }
    }
}

enum Failure {
    Usage(String),
    Refused(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Bounds(BoundsError::BelowThreshold { .. } | BoundsError::NoCertificate { .. }) => {
                Failure::Refused(message)
            }
            Error::Bounds(_) | Error::Circuit(_) | Error::Hw(_) | Error::Frame(_) => Failure::Usage(message),
            Error::Sampler(_) | Error::Dense(_) => Failure::Numerical(message),
        }
    }
}

impl From<CircuitError> for Failure {
    fn from(e: CircuitError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        Error::from(e).into()
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(source: &Source) -> Result<Circuit, Failure> {
    if let Some(path) = &source.choice.circuit {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        return Ok(Circuit::parse(&text)?);
    }
    let r = source.choice.random.expect("clap requires a circuit source");
    Ok(random_circuit(r.n, r.d, r.p, r.l, source.random_seed)?)
}

fn budget_json(b: &ErrorBudget) -> serde_json::Value {
    json!({
        "n": b.n,
        "d": b.d,
        "p": b.p,
        "epsilon": b.epsilon,
        "delta": b.delta,
        "k": b.k,
        "lambda": b.lambda,
        "depth_threshold": b.depth_threshold,
        "bound_regime": b.regime.as_str(),
        "hs_bound": b.hs_bound,
        "trace_bound": b.trace_bound,
        "ln_rank_bound": b.ln_rank_bound,
        "td_bound": b.td_bound,
    })
}

fn table_body(sim: &Simulation, format: Format) -> String {
    let n = sim.table.n();
    let mut out = String::new();
    if let Format::Csv = format {
        out.push_str("ket,bra,re,im\n");
    }
    for (index, v) in sim.table.iter() {
        let (ket, bra) = (index.ket().to_bitstring(n), index.bra().to_bitstring(n));
        match format {
            Format::Csv => out.push_str(&format!("{ket},{bra},{},{}\n", fmt_g17(v.re), fmt_g17(v.im))),
            Format::Jsonl => {
                out.push_str(&json!({"ket": ket, "bra": bra, "re": v.re, "im": v.im}).to_string());
                out.push('\n');
            }
        }
    }
    out
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { source, cutoff, output } => {
            let circuit = load(&source)?;
            let sim = run(&circuit, cutoff.cutoff())?;
            output.write(&table_body(&sim, output.format))?;
            eprintln!("{}", budget_json(&sim.budget));
        }
        Command::Sample { source, cutoff, samples, seed, output } => {
            let circuit = load(&source)?;
            let sim = run(&circuit, cutoff.cutoff())?;
            let draws = sample(&sim.distribution, samples, seed).map_err(Error::from)?;
            let n = circuit.n();
            let mut body = String::new();
            for x in draws {
                match output.format {
                    Format::Csv => body.push_str(&x.to_bitstring(n)),
                    Format::Jsonl => body.push_str(&json!({"sample": x.to_bitstring(n)}).to_string()),
                }
                body.push('\n');
            }
            output.write(&body)?;
            eprintln!("{}", budget_json(&sim.budget));
        }
        Command::Bounds { source, cutoff } => {
            let c = load(&source)?;
            let budget = match cutoff.cutoff() {
                Cutoff::Epsilon(eps) => select_k(c.n(), c.depth(), c.p(), eps)?,
                Cutoff::Fixed(k) => ErrorBudget::for_cutoff(c.n(), c.depth(), c.p(), k)?,
            };
            println!("{}", budget_json(&budget));
        }
        Command::Validate { source } => {
            let c = load(&source)?;
            println!(
                "ok: n={} d={} p={} gates={} locality={}",
                c.n(),
                c.depth(),
                fmt_g17(c.p()),
                c.gate_count(),
                c.locality()
            );
        }
        Command::ReproduceFig2 { instances, seed, output } => {
            let config = Fig2Config { instances, seed, ..Fig2Config::default() };
            let report = run_fig2(&config)?;
            let body = match output.format {
                Format::Csv => report.to_csv(),
                Format::Jsonl => report
                    .rows
                    .iter()
                    .map(|r| {
                        json!({
                            "k": r.k, "hs_bound": r.hs_bound, "bound_regime": r.regime.as_str(),
                            "hs_mean": r.hs_mean, "hs_min": r.hs_min, "hs_max": r.hs_max,
                            "td_mean": r.td_mean, "td_min": r.td_min, "td_max": r.td_max,
                            "idle_hs": r.idle_hs, "idle_td": r.idle_td,
                        })
                        .to_string()
                            + "\n"
                    })
                    .collect(),
            };
            output.write(&body)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if !report.violations.is_empty() {
                return Err(Failure::Numerical(report.violations.join("\n")));
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("IQPDAMP_THREADS") else {
        return Ok(());
    };
    let threads: usize =
        value.parse().map_err(|_| Failure::Usage(format!("IQPDAMP_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| execute(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Refused(m)) => {
            eprintln!("refused: {m}");
            ExitCode::from(EXIT_REFUSED)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
