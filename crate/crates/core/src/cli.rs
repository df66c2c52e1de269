//! Command-line driver. Every command prints one JSON document on stdout;
//! human-readable diagnostics (timings, errors) go to stderr.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::approx::{fpras_likelihood, FprasConfig, DEFAULT_FAILURE_PROBABILITY};
use crate::error::Error;
use crate::grammar::{parse_grammar, AmbiguityBound, CnfGrammar};
use crate::hmm::{parse_hmm, Hmm};
use crate::inference::{likelihood_upto, ucfg_likelihood, weighted_mass, ForwardTable};
use crate::oracle;
use crate::reductions::{
    brute_force_model_count, formula_to_cfg, model_count_via_likelihood, parse_dimacs,
    ModelCountMode,
};
use crate::sampling::Sampler;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gramhmm", version, about = "Grammar-constrained HMM inference")]
pub struct Cli {
    /// Worker threads (0 = all cores). Results do not depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Weighted,
    Ucfg,
    Upto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleQuery {
    Mass,
    Likelihood,
    Distribution,
    Maxambiguity,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact grammar-constrained likelihood from the forward table.
    Likelihood {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        hmm: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long, value_enum, default_value_t = Mode::Weighted)]
        mode: Mode,
        /// Required by `ucfg` and `upto`: the grammar is unambiguous.
        #[arg(long)]
        attest_unambiguous: bool,
    },
    /// Draw strings with probability proportional to f_G(w) f_A(w).
    Sample {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        hmm: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        emit_trees: bool,
    },
    /// Randomized approximation for grammars of bounded ambiguity.
    Approx {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        hmm: PathBuf,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        ambiguity_bound: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FAILURE_PROBABILITY)]
        failure_prob: f64,
    },
    /// Brute-force reference values.
    Oracle {
        #[arg(long)]
        grammar: PathBuf,
        /// Not needed for `maxambiguity`.
        #[arg(long)]
        hmm: Option<PathBuf>,
        #[arg(long)]
        length: usize,
        #[arg(long, value_enum)]
        what: OracleQuery,
    },
    /// Turn a 3-CNF formula into a grammar, optionally counting its models.
    Reduce3sat {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        count: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Likelihood { .. } => "likelihood",
            Command::Sample { .. } => "sample",
            Command::Approx { .. } => "approx",
            Command::Oracle { .. } => "oracle",
            Command::Reduce3sat { .. } => "reduce3sat",
        }
    }
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => EXIT_VALIDATION,
            Failure::Lib(e) => match e {
                Error::Underflow(_) | Error::Inconsistency(_) | Error::AttestationViolated { .. } => {
                    EXIT_NUMERICAL
                }
                _ => EXIT_VALIDATION,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_grammar(path: &Path) -> Result<CnfGrammar, Failure> {
    Ok(parse_grammar(&read(path)?)?)
}

fn load_hmm(path: &Path) -> Result<Hmm, Failure> {
    Ok(parse_hmm(&read(path)?)?)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: rendered,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: rendered,
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            return Outcome {
                code: EXIT_USAGE,
                stdout: String::new(),
                stderr: format!("cannot start {} threads: {e}\n", cli.threads),
            }
        }
    };
    let name = cli.command.name();
    let started = Instant::now();
    let result = pool.install(|| execute(&cli.command));
    let elapsed = started.elapsed().as_secs_f64();
    match result {
        Ok(mut doc) => {
            doc["command"] = json!(name);
            doc["status"] = json!("ok");
            Outcome {
                code: EXIT_OK,
                stdout: format!("{}\n", serde_json::to_string_pretty(&doc).expect("json")),
                stderr: format!("{name}: wall time {elapsed:.6} s\n"),
            }
        }
        Err(f) => {
            let doc = json!({"command": name, "status": "error", "message": f.message()});
            Outcome {
                code: f.code(),
                stdout: format!("{}\n", serde_json::to_string_pretty(&doc).expect("json")),
                stderr: format!("error: {}\n", f.message()),
            }
        }
    }
}

fn execute(command: &Command) -> Result<Value, Failure> {
    match command {
        Command::Likelihood {
            grammar,
            hmm,
            length,
            mode,
            attest_unambiguous,
        } => {
            let g = load_grammar(grammar)?;
            let h = load_hmm(hmm)?;
            let r = match mode {
                Mode::Weighted => weighted_mass(&g, &h, *length)?,
                Mode::Ucfg => ucfg_likelihood(&g, &h, *length, *attest_unambiguous)?,
                Mode::Upto => likelihood_upto(&g, &h, *length, *attest_unambiguous)?,
            };
            Ok(json!({"value": r.value, "length": r.length, "mode": r.mode}))
        }
        Command::Sample {
            grammar,
            hmm,
            length,
            count,
            seed,
            emit_trees,
        } => {
            let g = load_grammar(grammar)?;
            let h = load_hmm(hmm)?;
            let table = ForwardTable::build(&g, &h, *length)?;
            let sampler = Sampler::new(&g, &h, &table, *length)?;
            let traces = sampler.sample_many(*count, *seed)?;
            let records: Vec<Value> = traces
                .iter()
                .map(|t| {
                    if *emit_trees {
                        json!({"string": t.string, "tree": t.tree_string(&g), "weight": t.weight})
                    } else {
                        json!({"string": t.string})
                    }
                })
                .collect();
            Ok(json!({
                "length": length,
                "count": count,
                "seed": seed,
                "z": sampler.mass(),
                "samples": records,
            }))
        }
        Command::Approx {
            grammar,
            hmm,
            length,
            epsilon,
            ambiguity_bound,
            seed,
            failure_prob,
        } => {
            let g = load_grammar(grammar)?;
            let h = load_hmm(hmm)?;
            let config = FprasConfig {
                epsilon: *epsilon,
                failure_probability: *failure_prob,
                bound: AmbiguityBound::constant(*ambiguity_bound),
                seed: *seed,
            };
            let report = fpras_likelihood(&g, &h, *length, &config)?;
            let mut doc = serde_json::to_value(&report).expect("report serializes");
            doc["length"] = json!(length);
            doc["acceptance_rate"] = json!(report.acceptance_rate());
            Ok(doc)
        }
        Command::Oracle {
            grammar,
            hmm,
            length,
            what,
        } => {
            let g = load_grammar(grammar)?;
            if *what == OracleQuery::Maxambiguity {
                let m = g.max_ambiguity(*length)?;
                return Ok(json!({"what": "maxambiguity", "length": length, "value": m.to_string()}));
            }
            let path = hmm
                .as_ref()
                .ok_or_else(|| Failure::Io("--hmm is required for this query".into()))?;
            let h = load_hmm(path)?;
            Ok(match what {
                OracleQuery::Mass => json!({
                    "what": "mass",
                    "length": length,
                    "value": oracle::brute_force_weighted_mass(&g, &h, *length)?,
                }),
                OracleQuery::Likelihood => json!({
                    "what": "likelihood",
                    "length": length,
                    "value": oracle::brute_force_likelihood(&g, &h, *length)?,
                }),
                OracleQuery::Distribution => {
                    let d = oracle::exact_distribution(&g, &h, *length)?;
                    json!({
                        "what": "distribution",
                        "length": length,
                        "z": d.z,
                        "likelihood": d.likelihood,
                        "probabilities": d.probabilities,
                    })
                }
                OracleQuery::Maxambiguity => unreachable!("handled above"),
            })
        }
        Command::Reduce3sat { cnf, out, count } => {
            let formula = parse_dimacs(&read(cnf)?)?;
            let g = formula_to_cfg(&formula)?;
            let mut doc = json!({
                "variables": formula.variable_count(),
                "clauses": formula.clauses().len(),
                "nonterminals": g.nonterminal_count(),
                "rules": g.size(),
            });
            match out {
                Some(path) => {
                    std::fs::write(path, g.to_string())
                        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                    doc["grammar_path"] = json!(path.display().to_string());
                }
                None => doc["grammar"] = json!(g.to_string()),
            }
            if *count {
                let via = model_count_via_likelihood(&formula, ModelCountMode::DpWithMembership)?;
                let brute = brute_force_model_count(&formula)?;
                doc["count"] = json!({
                    "via_likelihood": via.count,
                    "likelihood": via.likelihood,
                    "exact": via.exact,
                    "brute_force": brute,
                });
            }
            Ok(doc)
        }
    }
}
