use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use clockcut::attack::{run_attack, AsgTarget, AttackConfig, Outcome};
use clockcut::corebits::{Bits, FeedbackPolynomial, LfsrState};
use clockcut::generators::{AsgInstance, SgInstance};
use clockcut::harness::{self, BenchConfig, ReportFile};
use clockcut::patterns::{ModelKind, RelaxationOrder};
use clockcut::searchgraph::InducedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXIT_USAGE: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;

#[derive(Parser)]
#[command(name = "clockcut", version, about = "Edit-distance attack on shrinking and alternating step generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a keystream.
    Gen(GenArgs),
    /// Recover the target register from an intercepted keystream.
    Attack(AttackArgs),
    /// Plant random SG instances and tabulate attack counters.
    Bench(BenchArgs),
    /// Export the induced graph of two sequences as DOT.
    Graph(GraphArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Sg,
    Asg,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long = "gen", value_enum)]
    kind: GenKind,
    /// Selector (SG) or control (ASG) polynomial.
    #[arg(long)]
    ps: FeedbackPolynomial,
    #[arg(long)]
    pa: FeedbackPolynomial,
    /// Second ASG branch.
    #[arg(long)]
    pb: Option<FeedbackPolynomial>,
    /// Initial states as bit strings; random from --seed when absent.
    #[arg(long)]
    ss: Option<Bits>,
    #[arg(long)]
    sa: Option<Bits>,
    #[arg(long)]
    sb: Option<Bits>,
    #[arg(long)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the consumed keep-mask or control sequence.
    #[arg(long)]
    reveal: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Sg,
    Asg,
    GenericDecimation,
    GenericInsertion,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelaxArg {
    Last,
    First,
}

#[derive(clap::Args)]
struct AttackArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Path to an ASCII bit file, or the bits themselves.
    #[arg(long, allow_hyphen_values = true)]
    keystream: String,
    #[arg(long)]
    pa: FeedbackPolynomial,
    #[arg(long)]
    ps: Option<FeedbackPolynomial>,
    #[arg(long)]
    pb: Option<FeedbackPolynomial>,
    #[arg(long = "H")]
    h: usize,
    /// Candidate length in the decimation models.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Candidate length in the insertion models.
    #[arg(long = "M", conflicts_with = "n")]
    m: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    fallback: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record the outcome of every evaluated state in the report.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "a")]
    asg_target: TargetArg,
    /// Which fixed pattern bit to complement first.
    #[arg(long, value_enum, default_value = "last")]
    relax_from: RelaxArg,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Grid points `(N,M,LA);...`, `N` may be `*`.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-L_A means here.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    ls: usize,
    #[arg(long = "H", default_value_t = 3)]
    h: usize,
    #[arg(long)]
    fallback: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(clap::Args)]
struct GraphArgs {
    #[arg(long)]
    x: Bits,
    #[arg(long)]
    y: Bits,
    #[arg(long)]
    kmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
struct Fail(u8, String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(EXIT_USAGE, e.to_string())
    }
}

type Res<T> = std::result::Result<T, Fail>;

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Fail(EXIT_USAGE, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn state(poly: &FeedbackPolynomial, given: Option<Bits>, rng: &mut ChaCha8Rng) -> Res<LfsrState> {
    let l = poly.degree();
    let reg = given.unwrap_or_else(|| Bits::from_u64(rng.gen_range(1..=(u64::MAX >> (64 - l))), l));
    Ok(LfsrState::new(poly.clone(), reg)?)
}

fn gen(a: GenArgs) -> Res<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let s = state(&a.ps, a.ss, &mut rng)?;
    let sa = state(&a.pa, a.sa, &mut rng)?;
    let (keystream, used) = match a.kind {
        GenKind::Sg => SgInstance::new(s, sa)?.shrink(a.len)?,
        GenKind::Asg => {
            let pb = a.pb.ok_or_else(|| Fail(EXIT_USAGE, "--pb is required for asg".into()))?;
            let sb = state(&pb, a.sb, &mut rng)?;
            AsgInstance::new(s, sa, sb)?.alternate(a.len)
        }
    };
    let text = if keystream.is_empty() { String::new() } else { format!("{keystream}\n") };
    emit(a.out.as_deref(), &text)?;
    if a.reveal {
        let what = match a.kind {
            GenKind::Sg => "keep-mask",
            GenKind::Asg => "control",
        };
        eprintln!("{what}: {used}");
    }
    Ok(())
}

fn read_keystream(arg: &str) -> Res<Bits> {
    let text = if Path::new(arg).is_file() {
        fs::read_to_string(arg)?
    } else {
        arg.to_string()
    };
    let bits: Bits = text.trim().parse()?;
    if bits.is_empty() {
        return Err(Fail(EXIT_USAGE, "empty keystream".into()));
    }
    Ok(bits)
}

fn attack(a: AttackArgs) -> Res<()> {
    let intercepted = read_keystream(&a.keystream)?;
    let need = |p: Option<FeedbackPolynomial>, flag: &str| {
        p.ok_or_else(|| Fail(EXIT_USAGE, format!("{flag} is required for this model")))
    };
    let base = match a.model {
        ModelArg::Sg => AttackConfig::shrinking(need(a.ps, "--ps")?, a.pa),
        ModelArg::Asg => AttackConfig::alternating_step(need(a.ps, "--ps")?, a.pa, need(a.pb, "--pb")?),
        ModelArg::GenericDecimation | ModelArg::GenericInsertion => {
            let kind = match a.model {
                ModelArg::GenericDecimation => ModelKind::Decimation,
                _ => ModelKind::Insertion,
            };
            let kmax = a.kmax.ok_or_else(|| Fail(EXIT_USAGE, "--kmax is required for generic models".into()))?;
            AttackConfig {
                selector_poly: a.ps,
                ..AttackConfig::generic(kind, a.pa, kmax)
            }
        }
    };
    let config = AttackConfig {
        asg_target: match a.asg_target {
            TargetArg::A => AsgTarget::A,
            TargetArg::B => AsgTarget::B,
        },
        h: a.h,
        candidate_len: a.n.or(a.m),
        kmax: a.kmax.or(base.kmax),
        exhaustive_fallback: a.fallback,
        relaxation_order: match a.relax_from {
            RelaxArg::Last => RelaxationOrder::LastFixedFirst,
            RelaxArg::First => RelaxationOrder::FirstFixedFirst,
        },
        workers: a.workers.max(1),
        trace: a.trace,
        seed: a.seed,
        ..base
    };
    let report = run_attack(&config, &intercepted)?;
    print!("{}", harness::summary(&report));
    let solved = report.outcome == Outcome::Solved;
    if let Some(out) = &a.out {
        emit(Some(out), &ReportFile::new(config, report).to_json()?)?;
    }
    if solved {
        Ok(())
    } else {
        Err(Fail(EXIT_NO_SOLUTION, "no solution under pattern".into()))
    }
}

fn bench(a: BenchArgs) -> Res<()> {
    let cfg = BenchConfig {
        grid: harness::parse_grid(&a.grid)?,
        trials: a.trials,
        seed: a.seed,
        ls: a.ls,
        h: a.h,
        fallback: a.fallback,
        workers: a.workers.max(1),
    };
    let rows = harness::run_bench(&cfg)?;
    let mut csv = Vec::new();
    harness::write_csv(&rows, &mut csv)?;
    emit(a.out.as_deref(), &String::from_utf8(csv)?)?;
    if let Some(plot) = &a.plot {
        emit(Some(plot), &harness::plot_text(&harness::plot_data(&rows)))?;
    }
    Ok(())
}

fn graph(a: GraphArgs) -> Res<()> {
    let g = InducedGraph::build(&a.x, &a.y, a.kmax)?;
    emit(a.out.as_deref(), &harness::graph_to_dot(&g))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Attack(a) => attack(a),
        Command::Bench(a) => bench(a),
        Command::Graph(a) => graph(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("clockcut: {msg}");
            ExitCode::from(code)
        }
    }
}
