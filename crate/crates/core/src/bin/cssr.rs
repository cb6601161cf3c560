use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cssr::harness::{load_source, run_experiment, ExperimentConfig};
use cssr::sequence::parse_input;
use cssr::{run_cssr, Alphabet, CausalStateMachine, CssrConfig, CssrError, SymbolMode, TestKind};

/// Causal-state reconstruction from discrete sequences.
#[derive(Debug, Parser)]
#[command(name = "cssr", version)]
struct Cli {
    /// More log output on standard error (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Infer a causal-state machine from a data file.
    Infer {
        /// Data file with one sequence per line, or `-` for standard input.
        #[arg(long)]
        input: PathBuf,
        /// Alphabet, in order: `AB`, `A B` or `up,down`. Inferred from the data
        /// (sorted) when omitted.
        #[arg(long)]
        alphabet: Option<String>,
        /// Symbols are whitespace-separated tokens instead of single characters.
        #[arg(long)]
        tokens: bool,
        /// Longest history length considered.
        #[arg(long, default_value_t = 5)]
        lmax: usize,
        /// Significance level of each test.
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        /// Two-sample test: `ks` or `chi-squared`.
        #[arg(long, default_value_t = TestKind::Ks)]
        test: TestKind,
        /// Minimum continuation count for a history to be tested.
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample a sequence from a process.
    Simulate {
        /// Process spec file, or `even` / `seven-state`.
        #[arg(long)]
        spec: String,
        /// Number of symbols.
        #[arg(long)]
        n: usize,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Total variation distance between a machine and a process over words
    /// of one length.
    Eval {
        /// Machine file, as written by `infer`.
        #[arg(long)]
        machine: PathBuf,
        /// Process spec file, or `even` / `seven-state`.
        #[arg(long)]
        spec: String,
        /// Word length.
        #[arg(long, default_value_t = 10)]
        length: usize,
    },
    /// Run an experiment described by a TOML file.
    Experiment {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Directory for `results.csv` and `summary.json`; without it the CSV
        /// goes to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Validate a process spec file and print its basic properties.
    SpecCheck {
        /// Process spec file, or `even` / `seven-state`.
        #[arg(long)]
        spec: String,
    },
}

fn emit(output: Option<&Path>, text: &str) -> cssr::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_alphabet(spec: &str) -> cssr::Result<Alphabet> {
    if spec.contains(|c: char| c.is_whitespace() || c == ',') {
        let syms: Vec<&str> = spec.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        Alphabet::new(&syms)
    } else {
        Alphabet::from_chars(spec)
    }
}

fn read_input(path: &Path) -> cssr::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn run(cli: Cli) -> cssr::Result<()> {
    match cli.command {
        Command::Infer { input, alphabet, tokens, lmax, alpha, test, min_count, output } => {
            let mode = if tokens { SymbolMode::Tokens } else { SymbolMode::Chars };
            let given = alphabet.as_deref().map(parse_alphabet).transpose()?;
            let text = read_input(&input)?;
            let (alphabet, seqs) = parse_input(&text, mode, given.as_ref())?;
            let config = CssrConfig { l_max: lmax, alpha, test, min_count };
            let out = run_cssr(&seqs, &alphabet, &config)?;
            let d = &out.diagnostics;
            let m = &out.machine;
            let mut text = m.to_text();
            let _ = writeln!(text, "# diagnostics");
            let _ = writeln!(text, "# states: {}", m.num_states());
            let _ = writeln!(text, "# entropy-rate: {:.6} bits/symbol", m.entropy_rate());
            let _ = writeln!(text, "# l_max: {lmax} alpha: {alpha} test: {test} min-count: {min_count}");
            let _ = writeln!(
                text,
                "# null-tests: {} rejections: {} moves: {} new-states: {} skipped: {}",
                d.null_tests, d.null_rejections, d.restricted_moves, d.created_states, d.skipped_extensions
            );
            let _ = writeln!(
                text,
                "# transients-removed: {} splits: {} dropped-transitions: {}",
                d.transient_states_removed, d.determinization_splits, d.dropped_transitions
            );
            for w in &d.warnings {
                let _ = writeln!(text, "# warning: {w}");
                eprintln!("warning: {w}");
            }
            log::info!(
                "parse tree {:.3}s, phase II {:.3}s, phase III {:.3}s",
                d.parse_tree_time.as_secs_f64(),
                d.phase2_time.as_secs_f64(),
                d.phase3_time.as_secs_f64()
            );
            eprintln!("{} states, entropy rate {:.6} bits/symbol", m.num_states(), m.entropy_rate());
            emit(output.as_deref(), &text)
        }
        Command::Simulate { spec, n, seed, output } => {
            let m = load_source(&spec)?;
            let seq = m.simulate(n, seed);
            let text = if seq.is_empty() { String::new() } else { seq.render(m.alphabet()) + "\n" };
            emit(output.as_deref(), &text)
        }
        Command::Eval { machine, spec, length } => {
            let learned = CausalStateMachine::from_text(&std::fs::read_to_string(&machine)?)?;
            let truth = load_source(&spec)?;
            if learned.alphabet() != truth.alphabet() {
                return Err(CssrError::AlphabetMismatch(format!(
                    "machine alphabet {{{}}} differs from spec alphabet {{{}}}",
                    learned.alphabet(),
                    truth.alphabet()
                )));
            }
            let d = learned.word_distribution(length)?.tv_distance(&truth.word_distribution(length)?)?;
            println!("tv_distance {d:.12e}");
            Ok(())
        }
        Command::Experiment { config, output } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let results = run_experiment(&cfg)?;
            for w in &results.warnings {
                eprintln!("warning: {w}");
            }
            for c in &results.cells {
                eprintln!(
                    "{:<6} N={:<8} L_max={:<2} states {:.2} ± {:.2}  d {:.4} ± {:.4}  failures {}{}",
                    c.method.to_string(),
                    c.n,
                    c.l_max,
                    c.states_mean,
                    c.states_std,
                    c.tv_mean,
                    c.tv_std,
                    c.failures,
                    if c.flagged { "  FLAGGED" } else { "" }
                );
            }
            match output {
                Some(dir) => results.write(&dir),
                None => emit(None, &results.to_csv()),
            }
        }
        Command::SpecCheck { spec } => {
            let m = load_source(&spec)?;
            println!("alphabet: {}", m.alphabet());
            println!("states: {}", m.num_states());
            println!("unifilar: {}", m.is_unifilar());
            println!("strongly-connected: {}", m.is_strongly_connected());
            println!("entropy-rate: {:.12} bits/symbol", m.entropy_rate());
            for (s, p) in m.states().iter().zip(m.stationary_distribution()) {
                println!("stationary {}: {p:.12}", s.label());
            }
            Ok(())
        }
    }
}

fn exit_code(e: &CssrError) -> u8 {
    match e {
        CssrError::DegenerateAlphabet(_) | CssrError::AlphabetMismatch(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
