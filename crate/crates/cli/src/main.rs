use std::fs;
use std::io::{self, Read};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use hoqc_core::combs::{
    verify_comb_strings, verify_interleaving_intersection, verify_tombstone, TheoremReport,
};
use hoqc_core::linops::{read_matrix_json, write_matrix_json};
use hoqc_core::membership::suites::{cascade_agreement, duality_suite, SuiteReport};
use hoqc_core::membership::{
    check_deterministic, check_event, random_deterministic, switch_demo, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use hoqc_core::signature::difference;
use hoqc_core::{signature_of_text, types_equal, Error, MembershipReport};

/// `println!` that ignores a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Strings listed by `sig` before eliding, unless `--full` is given.
const SHOWN_STRINGS: usize = 64;

#[derive(Parser)]
#[command(name = "hoqc", version, about = "Types of higher-order quantum maps")]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Config {
    /// Numeric tolerance for membership checks.
    #[arg(long, global = true, env = "HOQC_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Iteration cap for event checks.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Largest m + n accepted by the comb theorem checks.
    #[arg(long, global = true, default_value_t = hoqc_core::combs::DEFAULT_SIZE_LIMIT)]
    size_limit: usize,
    #[arg(long, global = true, value_enum, default_value_t = Output::Human)]
    output: Output,
    /// Print every string instead of eliding long lists.
    #[arg(long, global = true)]
    full: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print the signature of a type.
    Sig { expr: String },
    /// Exit 0 if two types are equal, 1 otherwise.
    Eq { left: String, right: String },
    /// Check a matrix file ("-" for stdin) against a type.
    Check {
        file: String,
        expr: String,
        /// Test membership in the event set instead.
        #[arg(long, conflicts_with = "det")]
        event: bool,
        /// Test membership in the deterministic set (default).
        #[arg(long)]
        det: bool,
    },
    /// Run one of the built-in theorem or property checks.
    Verify {
        #[arg(value_enum)]
        theorem: Theorem,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Samples for the numeric suites.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Random types for the duality suite.
        #[arg(long, default_value_t = 10)]
        types: usize,
    },
    /// Emit a random deterministic event of a type as a matrix file.
    Random { expr: String },
    /// Run the quantum switch demonstration.
    Switch {
        #[arg(long, default_value_t = 2)]
        d: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem {
    Interst,
    Tombstone,
    CombStrings,
    Duality,
    CascadeAgreement,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Format(_)
            | Error::KeyMismatch
            | Error::DimensionMismatch(_)
            | Error::ShapeMismatch(_)
            | Error::UnknownLabel(_) => Failure::Data(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !(cli.config.tol.is_finite() && cli.config.tol > 0.0) {
        eprintln!("error: --tol must be positive");
        return ExitCode::from(2);
    }
    if cli.config.max_iter < 1 {
        eprintln!("error: --max-iter must be at least 1");
        return ExitCode::from(2);
    }
    match run(&cli.config, cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cfg: &Config, command: Command) -> Outcome {
    match command {
        Command::Sig { expr } => cmd_sig(cfg, &expr),
        Command::Eq { left, right } => cmd_eq(cfg, &left, &right),
        Command::Check {
            file,
            expr,
            event,
            det: _,
        } => cmd_check(cfg, &file, &expr, event),
        Command::Verify {
            theorem,
            m,
            n,
            samples,
            types,
        } => cmd_verify(cfg, theorem, m, n, samples, types),
        Command::Random { expr } => cmd_random(cfg, &expr),
        Command::Switch { d } => cmd_switch(cfg, d),
    }
}

fn emit_json<T: Serialize>(value: &T) {
    out!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialises")
    );
}

fn cmd_sig(cfg: &Config, expr: &str) -> Outcome {
    let sig = signature_of_text(expr)?;
    let strings = sig.rendered_strings();
    let shown = if cfg.full {
        strings.len()
    } else {
        strings.len().min(SHOWN_STRINGS)
    };
    match cfg.output {
        Output::Json => {
            let mut value = serde_json::to_value(sig.to_json()).expect("signature serialises");
            let delta = sig.delta_dim();
            value["strings"] = json!(&strings[..shown]);
            value["count"] = json!(strings.len());
            value["elided"] = json!(strings.len() - shown);
            value["delta_dim"] =
                u64::try_from(delta).map_or_else(|_| json!(delta.to_string()), |d| json!(d));
            emit_json(&value);
        }
        Output::Human => {
            let factors: Vec<String> = sig.factors().iter().map(|f| f.to_string()).collect();
            out!("lambda     {}", sig.lambda());
            out!("factors    {}", factors.join(" "));
            out!("strings    {}", strings.len());
            out!("delta_dim  {}", sig.delta_dim());
            for s in &strings[..shown] {
                out!("  {s}");
            }
            if shown < strings.len() {
                out!("  ... {} more (use --full)", strings.len() - shown);
            }
        }
    }
    Ok(true)
}

fn cmd_eq(cfg: &Config, left: &str, right: &str) -> Outcome {
    let a = signature_of_text(left)?;
    let b = signature_of_text(right)?;
    let equal = types_equal(&a, &b);
    let witness = difference(&a, &b);
    match cfg.output {
        Output::Json => emit_json(&json!({ "equal": equal, "witness": witness })),
        Output::Human => match &witness {
            None => out!("equal"),
            Some(w) => out!("not equal: {w}"),
        },
    }
    Ok(equal)
}

fn read_input(file: &str) -> Result<String, Failure> {
    let mut text = String::new();
    let read = if file == "-" {
        io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        fs::read_to_string(file).map(|t| text = t)
    };
    read.map_err(|e| Failure::Data(format!("{file}: {e}")))?;
    Ok(text)
}

fn cmd_check(cfg: &Config, file: &str, expr: &str, event: bool) -> Outcome {
    let sig = signature_of_text(expr)?;
    let op = read_matrix_json(&read_input(file)?)?;
    let report = if event {
        check_event(&op, &sig, cfg.tol, cfg.max_iter)?
    } else {
        check_deterministic(&op, &sig, cfg.tol)?
    };
    match cfg.output {
        Output::Json => emit_json(&report),
        Output::Human => print_report(if event { "event" } else { "deterministic" }, &report),
    }
    Ok(report.verdict)
}

fn print_report(kind: &str, r: &MembershipReport) {
    out!("{kind}: {}", if r.verdict { "pass" } else { "fail" });
    out!("  psd_deficit      {:.3e}", r.psd_deficit);
    out!("  trace_deviation  {:.3e}", r.trace_deviation);
    out!("  forbidden_mass   {:.3e}", r.forbidden_mass);
    if let (Some(g), Some(i)) = (r.gap, r.iterations) {
        out!("  gap              {g:.3e} after {i} sweeps");
    }
    out!("  tolerance        {:.1e}", r.tolerance);
}

fn cmd_verify(
    cfg: &Config,
    theorem: Theorem,
    m: usize,
    n: usize,
    samples: usize,
    types: usize,
) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match theorem {
        Theorem::Interst => {
            theorem_outcome(cfg, verify_interleaving_intersection(m, n, cfg.size_limit)?)
        }
        Theorem::Tombstone => theorem_outcome(cfg, verify_tombstone(m, n, cfg.size_limit)?),
        Theorem::CombStrings => {
            if n > cfg.size_limit {
                return Err(Error::SizeLimit {
                    got: n,
                    limit: cfg.size_limit,
                }
                .into());
            }
            theorem_outcome(cfg, verify_comb_strings(n)?)
        }
        Theorem::Duality => suite_outcome(cfg, duality_suite(&mut rng, types, samples, cfg.tol)?),
        Theorem::CascadeAgreement => {
            if n > 3 {
                return Err(Failure::Usage("cascade-agreement supports n <= 3".into()));
            }
            suite_outcome(cfg, cascade_agreement(&mut rng, n, samples, cfg.tol)?)
        }
    }
}

fn theorem_outcome(cfg: &Config, r: TheoremReport) -> Outcome {
    match cfg.output {
        Output::Json => emit_json(&r),
        Output::Human => {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out!(
                "{} ({}): {}",
                r.claim,
                params.join(", "),
                if r.equal { "pass" } else { "fail" }
            );
            out!("  lhs {} strings, rhs {} strings", r.lhs_size, r.rhs_size);
            for c in &r.checks {
                out!("  {:<48} {}", c.name, c.equal);
            }
            if let Some(w) = &r.witness {
                out!("  witness {w}");
            }
        }
    }
    Ok(r.equal)
}

fn suite_outcome(cfg: &Config, r: SuiteReport) -> Outcome {
    match cfg.output {
        Output::Json => emit_json(&json!({ "seed": cfg.seed, "report": r })),
        Output::Human => {
            out!(
                "{} (seed {}): {}",
                r.claim,
                cfg.seed,
                if r.passed { "pass" } else { "fail" }
            );
            out!(
                "  {} samples, {} failures, worst {:.3e}",
                r.samples,
                r.failures,
                r.worst
            );
        }
    }
    Ok(r.passed)
}

fn cmd_random(cfg: &Config, expr: &str) -> Outcome {
    let sig = signature_of_text(expr)?;
    if sig.total_dim() > hoqc_core::linops::MAX_FILE_DIM as u128 {
        return Err(Failure::Usage(format!(
            "total dimension {} exceeds the file limit {}",
            sig.total_dim(),
            hoqc_core::linops::MAX_FILE_DIM
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let op = random_deterministic(&sig, &mut rng)?;
    eprintln!("seed {}", cfg.seed);
    out!("{}", write_matrix_json(&op));
    Ok(true)
}

fn cmd_switch(cfg: &Config, d: usize) -> Outcome {
    let r = switch_demo(d, cfg.tol)?;
    let ok = r.deterministic.verdict
        && r.union_forbidden_mass <= cfg.tol
        && r.single_orders.iter().all(|o| o.forbidden_mass > cfg.tol);
    match cfg.output {
        Output::Json => emit_json(&r),
        Output::Human => {
            out!(
                "quantum switch, d = {}, total dimension {}",
                r.d,
                r.total_dim
            );
            print_report(
                "deterministic in ((A->B) * (C->D)) -> (E->F)",
                &r.deterministic,
            );
            for o in &r.single_orders {
                out!("forbidden mass, {:<16} {:.6e}", o.order, o.forbidden_mass);
            }
            out!(
                "forbidden mass, {:<16} {:.6e}",
                "span of both",
                r.union_forbidden_mass
            );
        }
    }
    Ok(ok)
}
