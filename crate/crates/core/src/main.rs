use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use frattini::jobs::{self, GroupKind, JobError, KoszulInput, KoszulOptions, KoszulSource, Report};
use frattini::pgroups::{VerifyMode, VerifyOptions};

/// Mod-p cohomology data of central Frattini extensions of elementary
/// abelian p-groups.
///
/// Exit codes: 0 success, 1 other failure, 2 the k-invariants do not contain
/// the Bockstein image, 3 invalid input, 4 exhaustive budget exceeded,
/// 5 cross-validation disagreement.
#[derive(Debug, Parser)]
#[command(name = "frattini", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Seed for every sampled check.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,

    /// Worker threads (default: number of processors).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    /// U(n, p).
    U,
    /// G(h(n)).
    G,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Koszul homology, Poincare series and hypothesis checks for extension data.
    Koszul {
        /// JSON file with `p`, `w` and either `quadratics` or `k_basis`.
        #[arg(long, conflicts_with_all = ["w", "q"])]
        input: Option<String>,
        #[arg(long)]
        w: Option<usize>,
        #[arg(long)]
        p: Option<u64>,
        /// A quadratic such as "e1^e2 - 2 e1^e3"; repeat for each one.
        #[arg(long)]
        q: Vec<String>,
        /// Series truncation degree (default 2(w+r)).
        #[arg(long)]
        truncation: Option<usize>,
        /// Representatives printed per degree.
        #[arg(long, default_value_t = 10)]
        max_reps: usize,
        /// Print every representative.
        #[arg(long)]
        full: bool,
        /// Accept linearly dependent quadratics.
        #[arg(long)]
        force: bool,
    },
    /// U(n, p) by the Koszul complex and by the hook-content formula.
    Unp {
        #[arg(long)]
        n: usize,
        /// Default: least prime above C(n,2) + 1.
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        truncation: Option<usize>,
    },
    /// Build and verify U(n, p) or G(h(n)).
    Group {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum, default_value_t = Kind::U)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Largest group order checked exhaustively.
        #[arg(long, default_value_t = 1_000_000)]
        exhaustive_bound: u64,
        /// Random triples in sampled associativity checks.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Bockstein on the cohomology of G(h(n)) and its restriction to U(n, p).
    Bockstein {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 6)]
        max_degree: usize,
        /// Random pairs for the Leibniz check.
        #[arg(long, default_value_t = 500)]
        pairs: usize,
        /// Element to evaluate, e.g. "z[1,2]*x[1,2]".
        #[arg(long)]
        expr: Option<String>,
    },
    /// Expand q(t) / (1 - t^2)^v.
    Series {
        /// Numerator coefficients, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        numerator: Vec<u64>,
        #[arg(long)]
        v: usize,
        #[arg(long, requires = "r")]
        w: Option<usize>,
        #[arg(long, requires = "w")]
        r: Option<usize>,
        #[arg(long)]
        truncation: Option<usize>,
    },
    /// Koszul against hook-content for every n <= n_max and listed prime.
    Crosscheck {
        #[arg(long)]
        n_max: usize,
        #[arg(long, value_delimiter = ',', default_value = "7,11,101")]
        primes: Vec<u64>,
    },
}

fn emit<R: Report>(report: R, format: Format) -> i32 {
    match format {
        Format::Text => print!("{}", report.text()),
        Format::Json => print!("{}", report.json()),
    }
    report.exit_code()
}

fn run(cli: Cli) -> Result<i32, JobError> {
    let format = cli.format;
    Ok(match cli.command {
        Command::Koszul {
            input,
            w,
            p,
            q,
            truncation,
            max_reps,
            full,
            force,
        } => {
            let source = match input {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| JobError::Io {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                    KoszulSource::File(KoszulInput::from_json(&text)?)
                }
                None => KoszulSource::Inline {
                    w: w.ok_or_else(|| JobError::Input("--w is required without --input".into()))?,
                    p: p.ok_or_else(|| JobError::Input("--p is required without --input".into()))?,
                    quadratics: q,
                },
            };
            let options = KoszulOptions {
                truncation,
                max_reps: (!full).then_some(max_reps),
                force,
            };
            emit(jobs::run_koszul(&source, &options)?, format)
        }
        Command::Unp { n, p, truncation } => emit(jobs::run_unp(n, p, truncation)?, format),
        Command::Group {
            n,
            p,
            kind,
            mode,
            exhaustive_bound,
            samples,
        } => {
            let options = VerifyOptions {
                mode: match mode {
                    Mode::Auto => VerifyMode::Auto,
                    Mode::Exhaustive => VerifyMode::Exhaustive,
                    Mode::Sampled => VerifyMode::Sampled,
                },
                exhaustive_bound,
                samples,
                seed: cli.seed,
                ..Default::default()
            };
            let kind = match kind {
                Kind::U => GroupKind::Unp,
                Kind::G => GroupKind::Free,
            };
            emit(jobs::run_group(n, p, kind, &options)?, format)
        }
        Command::Bockstein {
            n,
            p,
            max_degree,
            pairs,
            expr,
        } => emit(jobs::run_bockstein(n, p, max_degree, pairs, cli.seed, expr.as_deref())?, format),
        Command::Series {
            numerator,
            v,
            w,
            r,
            truncation,
        } => emit(jobs::run_series(&numerator, v, w.zip(r), truncation)?, format),
        Command::Crosscheck { n_max, primes } => emit(jobs::run_crosscheck(n_max, &primes)?, format),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { jobs::EXIT_INPUT as u8 } else { 0 });
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(jobs::EXIT_OTHER as u8);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
