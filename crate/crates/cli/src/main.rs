//! `qhmm`: validate, evaluate, decode and analyse (quantum) hidden Markov
//! models from the command line.
//!
//! Models are named either as `builtin:NAME` or as a path to a JSON model
//! file. Data goes to stdout, diagnostics to stderr.

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use qhmm::builtin;
use qhmm::densemath::DEFAULT_RANK_TOL;
use qhmm::inference::{
    brute_force_viterbi, enumerate_distribution, forward, measured_probabilities, sample_many, viterbi,
    viterbi_eligibility, ViterbiResult, DEFAULT_ENUM_CAP,
};
use qhmm::io::{self, hqmm_to_json, matrix_to_json, to_pretty_string};
use qhmm::models::{graph_view, parse_sequence, MealyQHMM, Model};
use qhmm::monras::to_hqmm;
use qhmm::spectral::{hankel, StringBasis};
use qhmm::Error;

const CAP_VAR: &str = "QHMM_ENUM_CAP";

#[derive(Parser, Debug)]
#[command(
    name = "qhmm",
    version,
    about = "Quantum hidden Markov models over transition operation matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model and print OK.
    Validate { model: String },
    /// Probability and final state of a sequence.
    Forward {
        model: String,
        sequence: String,
        /// JSON measurement file; adds per-outcome probabilities.
        #[arg(long)]
        measure: Option<String>,
        /// Symbol separator (default: one character per symbol).
        #[arg(long)]
        sep: Option<String>,
    },
    /// Most likely state path for a sequence.
    Viterbi {
        model: String,
        sequence: String,
        /// Exhaustive search; works for models the recursion refuses.
        #[arg(long)]
        brute_force: bool,
        #[arg(long)]
        sep: Option<String>,
    },
    /// Draw sequences, one per line.
    Sample {
        model: String,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Separator printed between symbols.
        #[arg(long, default_value = "")]
        sep: String,
    },
    /// Every sequence of a given length with its probability, as TSV.
    Enumerate {
        model: String,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value = "")]
        sep: String,
    },
    /// Hankel block over all strings up to a length, as TSV.
    Hankel {
        model: String,
        #[arg(long)]
        max_len: usize,
        /// Print only the numeric rank.
        #[arg(long)]
        rank_only: bool,
        /// Relative singular-value cutoff for the rank.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, default_value = "")]
        sep: String,
    },
    /// Rewrite a model in another form.
    Convert {
        model: String,
        #[arg(long, value_enum)]
        to: Target,
    },
    /// Transition graph in DOT format.
    Graph { model: String },
    /// List the builtin models.
    Examples,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    /// Single-register model with one operation per symbol.
    Monras,
    /// The JSON model file format.
    Json,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) => 1,
        Error::Validation(_) | Error::Shape(_) | Error::Domain(_) => 2,
        Error::Ineligible(_) => 3,
        Error::Resource(_) => 4,
        Error::Io(_) | Error::Parse(_) => 5,
    }
}

fn enum_cap() -> Result<usize, Error> {
    match std::env::var(CAP_VAR) {
        Err(_) => Ok(DEFAULT_ENUM_CAP),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("{CAP_VAR} must be a non-negative integer, got '{v}'"))),
    }
}

fn load_model(source: &str) -> Result<Model, Error> {
    match source.strip_prefix("builtin:") {
        Some(name) => builtin::builtin(name),
        None => io::load(source),
    }
}

fn quantum(source: &str) -> Result<MealyQHMM, Error> {
    Ok(load_model(source)?.to_quantum())
}

fn line(v: &Value) -> String {
    let mut s = v.to_string();
    s.push('\n');
    s
}

fn path_json(r: &ViterbiResult, eligible: bool) -> Value {
    json!({ "path": r.path, "prob": r.prob, "eligible": eligible })
}

fn run(cmd: Command) -> Result<String, Error> {
    match cmd {
        Command::Validate { model } => {
            let m = load_model(&model)?;
            m.validate()?;
            Ok("OK\n".to_string())
        }
        Command::Forward {
            model,
            sequence,
            measure,
            sep,
        } => {
            let m = quantum(&model)?;
            let seq = parse_sequence(&sequence, sep.as_deref());
            let r = forward(&m, &seq)?;
            let mut out = Map::new();
            out.insert("prob".into(), json!(r.prob));
            out.insert("rho".into(), matrix_to_json(r.rho.matrix()));
            if let Some(path) = measure {
                let mu = io::load_measurement(path)?;
                let p = measured_probabilities(&m, &seq, &mu)?;
                out.insert(
                    "per_outcome".into(),
                    Value::Object(p.into_iter().map(|(k, v)| (k, json!(v))).collect()),
                );
            }
            Ok(line(&Value::Object(out)))
        }
        Command::Viterbi {
            model,
            sequence,
            brute_force,
            sep,
        } => {
            let m = quantum(&model)?;
            let seq = parse_sequence(&sequence, sep.as_deref());
            if brute_force {
                let eligible = viterbi_eligibility(&m).eligible;
                let r = brute_force_viterbi(&m, &seq, enum_cap()?)?;
                Ok(line(&path_json(&r, eligible)))
            } else {
                Ok(line(&path_json(&viterbi(&m, &seq)?, true)))
            }
        }
        Command::Sample {
            model,
            length,
            seed,
            count,
            sep,
        } => {
            let m = quantum(&model)?;
            let draws = sample_many(&m, length, count, seed)?;
            Ok(draws.iter().map(|s| s.join(&sep) + "\n").collect())
        }
        Command::Enumerate { model, length, sep } => {
            let m = quantum(&model)?;
            let dist = enumerate_distribution(&m, length, enum_cap()?)?;
            let mut out = String::from("sequence\ttrace\n");
            let mut total = 0.0;
            for (s, rho) in &dist {
                let label = if s.is_empty() {
                    qhmm::spectral::EMPTY_LABEL.to_string()
                } else {
                    s.join(&sep)
                };
                let tr = rho.trace();
                total += tr;
                out.push_str(&format!("{label}\t{tr}\n"));
            }
            let status = if (total - 1.0).abs() <= 1e-9 { "ok" } else { "short" };
            out.push_str(&format!("# total\t{total}\t{status}\n"));
            Ok(out)
        }
        Command::Hankel {
            model,
            max_len,
            rank_only,
            tol,
            sep,
        } => {
            let m = load_model(&model)?;
            let basis = StringBasis::new(m.alphabet(), max_len);
            let cap = enum_cap()?;
            if basis.len().saturating_mul(basis.len()) > cap {
                return Err(Error::Resource(format!(
                    "a {0}x{0} Hankel block exceeds the enumeration cap of {cap}",
                    basis.len()
                )));
            }
            let h = hankel(&m, &basis, &basis)?;
            if rank_only {
                Ok(format!("{}\n", h.rank(tol)))
            } else {
                Ok(h.to_tsv(&sep))
            }
        }
        Command::Convert { model, to } => {
            let m = load_model(&model)?;
            let v = match to {
                Target::Monras => hqmm_to_json(&to_hqmm(&m.to_quantum())),
                Target::Json => io::model_to_json(&m),
            };
            Ok(to_pretty_string(&v))
        }
        Command::Graph { model } => Ok(graph_view(&quantum(&model)?).to_dot()),
        Command::Examples => Ok(builtin::NAMES.iter().map(|n| format!("{n}\n")).collect()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe downstream is not an error worth reporting
            let _ = stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qhmm: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
