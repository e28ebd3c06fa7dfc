//! smslab: scenario checks for finite stochastic mathematical systems.
//!
//! Exit codes: 0 when every requested check verified or computed, 1 when a
//! check was refuted, failed a precondition, or errored, 2 on usage or
//! parse errors.

use clap::{Args, Parser, Subcommand};
use smslab_scenario::construct::PropId;
use smslab_scenario::search::{counterexample_search, Ablation};
use smslab_scenario::schema::{CheckRequest, Scenario};
use smslab_scenario::{parse_scenario, parse_scenario_lenient, run_scenario, Outcome, RunReport};
use std::io::Write;
use std::process::ExitCode;

/// Writes a line to stdout, exiting quietly when the consumer closed the
/// pipe early.
fn emit(text: impl std::fmt::Display) {
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{text}").is_err() {
        std::process::exit(0);
    }
}

#[derive(Parser)]
#[command(name = "smslab", version, about = "Exact checks for finite stochastic mathematical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file path.
    #[arg(long)]
    scenario: std::path::PathBuf,

    /// Output format.
    #[arg(long, default_value = "text", value_parser = ["json", "text"])]
    format: String,

    /// Seed for any randomized component.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Override the scenario's divergence kind (kl|tv|js).
    #[arg(long)]
    divergence: Option<String>,

    /// Override the scenario's epsilon threshold.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,

    /// Skip the embedding-identity precondition in embedded checks.
    #[arg(long)]
    no_embed_check: bool,

    /// Include wall-clock timing in the report (breaks byte determinism).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Structural validation of the scenario's process tables.
    Validate(Common),
    /// Superset or exact-set probability at a step.
    Dist {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        step: Option<u32>,
        /// Claim set as JSON, e.g. '[["qa","0"]]'.
        #[arg(long)]
        set: String,
        /// Probability that the unordering equals the set exactly.
        #[arg(long)]
        exact: bool,
    },
    /// Monotone limit probability with bracket.
    Limit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        set: String,
        /// Stopping tolerance as a rational, e.g. 1/1000.
        #[arg(long, default_value = "1/1000")]
        tol: String,
    },
    /// Conditional answer distribution for a question tuple.
    Respond {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        step: Option<u32>,
        /// Comma-separated question ids.
        #[arg(long)]
        questions: String,
        #[arg(long, default_value = "[]")]
        set: String,
    },
    /// Calibration score against the limit distribution.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        question: String,
        #[arg(long, default_value = "[]")]
        set: String,
        /// Use the embedded variant through the scenario's map.
        #[arg(long)]
        embedded: bool,
    },
    /// Embedding-identity check.
    Embed(Common),
    /// Evidence-path checks (collection, ratio condition, derivation).
    Evidence {
        #[command(flatten)]
        common: Common,
        /// Distribution selector: step | limit | fn.
        #[arg(long, default_value = "step")]
        dist: String,
        #[arg(long)]
        question: String,
        #[arg(long, default_value = "[]")]
        beta: String,
        /// Paths as JSON array of claim sets.
        #[arg(long)]
        paths: String,
        #[arg(long)]
        target: String,
        /// Also check the chain under every path ordering.
        #[arg(long)]
        permutations: bool,
    },
    /// Abduction lift factors in both directions.
    Abduct {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "step")]
        dist: String,
        #[arg(long)]
        qstar: String,
        #[arg(long)]
        vstar: String,
        #[arg(long)]
        qdagger: String,
        #[arg(long)]
        vdagger: String,
        #[arg(long, default_value = "[]")]
        cset: String,
    },
    /// Run the scenario's checks, optionally filtered to one proposition.
    Verify {
        #[command(flatten)]
        common: Common,
        /// p73|p74|p75|p81|p82|p83|projection
        #[arg(long)]
        prop: Option<String>,
    },
    /// Emit a constructor scenario for a proposition.
    Construct {
        /// p73|p74|p75|p81|p82|p83|projection
        #[arg(long)]
        prop: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Randomized counterexample search with one hypothesis ablated.
    Search {
        /// p73|p75|p81
        #[arg(long)]
        prop: String,
        /// none|calibration|premise|condition5|evidence
        #[arg(long)]
        ablate: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "text", value_parser = ["json", "text"])]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn parse_claims(text: &str) -> Result<Vec<(String, String)>, String> {
    serde_json::from_str(text).map_err(|e| format!("invalid claim set {text}: {e}"))
}

fn parse_claim_sets(text: &str) -> Result<Vec<Vec<(String, String)>>, String> {
    serde_json::from_str(text).map_err(|e| format!("invalid claim-set list {text}: {e}"))
}

fn load(common: &Common, lenient: bool) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(&common.scenario)
        .map_err(|e| format!("cannot read {}: {e}", common.scenario.display()))?;
    let mut scenario = if lenient {
        parse_scenario_lenient(&text).map_err(|e| e.to_string())?
    } else {
        parse_scenario(&text).map_err(|e| e.to_string())?
    };
    if let Some(kind) = &common.divergence {
        scenario.divergence = smslab_core::divergence::DivergenceKind::parse(kind)
            .ok_or_else(|| format!("unknown divergence {kind}"))?;
    }
    if let Some(eps) = common.epsilon {
        scenario.epsilon = eps;
    }
    Ok(scenario)
}

fn finish(common: &Common, mut report: RunReport, started: std::time::Instant) -> ExitCode {
    if common.timings {
        report.timing_ms = Some(started.elapsed().as_millis() as u64);
    }
    let ok = report.all_passed();
    if common.format == "json" {
        emit(report.to_json());
    } else {
        for result in &report.checks {
            emit(render_text(&result.outcome));
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn render_text(outcome: &Outcome) -> String {
    match outcome {
        Outcome::Value { value } => value.clone(),
        Outcome::Estimate {
            estimate,
            std_error,
        } => format!("{estimate} +/- {std_error}"),
        Outcome::Distribution { entries, sure } => {
            let body = entries
                .iter()
                .map(|(o, p)| format!("{o} -> {p}"))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{{{body}}}{}", if *sure { " (sure)" } else { "" })
        }
        Outcome::Alpha {
            premise,
            implication,
            both_questions_sure,
        } => format!(
            "premise {premise}, implication {implication}, questions sure: {both_questions_sure:?}"
        ),
        Outcome::Report { report } => {
            let mut lines = vec![report.summary()];
            for c in &report.preconditions {
                let mark = match c.holds {
                    Some(true) => "ok",
                    Some(false) => "FAIL",
                    None => "??",
                };
                let witness = c.witness.as_deref().unwrap_or("");
                lines.push(format!("  [{mark}] {} {witness}", c.label));
            }
            if let Some(conc) = &report.conclusion {
                lines.push(format!(
                    "  conclusion: {:?} ({} vs {}, margin {})",
                    conc.holds, conc.lhs, conc.rhs, conc.margin
                ));
            }
            lines.join("\n")
        }
        Outcome::Error { error } => format!("error: {error}"),
    }
}

fn run_with_checks(common: &Common, mut scenario: Scenario, checks: Vec<CheckRequest>) -> ExitCode {
    let started = std::time::Instant::now();
    scenario.checks = checks;
    let report = run_scenario(&scenario, common.seed);
    finish(common, report, started)
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate(common) => {
            let scenario = load(&common, true)?;
            Ok(run_with_checks(&common, scenario, vec![CheckRequest::Validate]))
        }
        Command::Dist {
            common,
            step,
            set,
            exact,
        } => {
            let scenario = load(&common, false)?;
            let set = parse_claims(&set)?;
            let check = if exact {
                CheckRequest::ExactSet { step, set }
            } else {
                CheckRequest::Superset { step, set }
            };
            Ok(run_with_checks(&common, scenario, vec![check]))
        }
        Command::Limit { common, set, tol } => {
            let scenario = load(&common, false)?;
            let set = parse_claims(&set)?;
            let tol = smslab_scenario::rational::parse_rational(&tol)
                .ok_or_else(|| format!("invalid tolerance {tol}"))?;
            Ok(run_with_checks(
                &common,
                scenario,
                vec![CheckRequest::Limit { set, tol }],
            ))
        }
        Command::Respond {
            common,
            step,
            questions,
            set,
        } => {
            let scenario = load(&common, false)?;
            let set = parse_claims(&set)?;
            let questions = questions.split(',').map(str::to_string).collect();
            Ok(run_with_checks(
                &common,
                scenario,
                vec![CheckRequest::Respond {
                    step,
                    questions,
                    set,
                }],
            ))
        }
        Command::Calibrate {
            common,
            question,
            set,
            embedded,
        } => {
            let scenario = load(&common, false)?;
            let set = parse_claims(&set)?;
            let check = if embedded {
                CheckRequest::EmbedCalibrate { question, set }
            } else {
                CheckRequest::Calibrate { question, set }
            };
            Ok(run_with_checks(&common, scenario, vec![check]))
        }
        Command::Embed(common) => {
            let scenario = load(&common, false)?;
            Ok(run_with_checks(&common, scenario, vec![CheckRequest::Embedding]))
        }
        Command::Evidence {
            common,
            dist,
            question,
            beta,
            paths,
            target,
            permutations,
        } => {
            let scenario = load(&common, false)?;
            let beta = parse_claims(&beta)?;
            let paths = parse_claim_sets(&paths)?;
            Ok(run_with_checks(
                &common,
                scenario,
                vec![CheckRequest::Evidence {
                    dist,
                    question,
                    beta,
                    paths,
                    target,
                    permutations,
                }],
            ))
        }
        Command::Abduct {
            common,
            dist,
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
        } => {
            let scenario = load(&common, false)?;
            let cset = parse_claims(&cset)?;
            Ok(run_with_checks(
                &common,
                scenario,
                vec![CheckRequest::AbductionAlpha {
                    dist,
                    qstar,
                    vstar,
                    qdagger,
                    vdagger,
                    cset,
                }],
            ))
        }
        Command::Verify { common, prop } => {
            let scenario = load(&common, false)?;
            let mut checks = scenario.checks.clone();
            if let Some(prop) = &prop {
                checks.retain(|c| c.prop_id() == Some(prop.as_str()));
                if checks.is_empty() {
                    return Err(format!("scenario has no check for proposition {prop}"));
                }
            }
            let checks = if common.no_embed_check {
                checks.into_iter().map(relax_embed_check).collect()
            } else {
                checks
            };
            Ok(run_with_checks(&common, scenario, checks))
        }
        Command::Construct { prop, seed, out } => {
            let prop = PropId::parse(&prop).ok_or_else(|| format!("unknown proposition {prop}"))?;
            let built = smslab_scenario::construct_eps0(prop, seed);
            let json = built.scenario.to_json();
            match out {
                Some(path) => std::fs::write(&path, json)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => emit(&json),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Search {
            prop,
            ablate,
            trials,
            seed,
            format,
        } => {
            let prop = PropId::parse(&prop).ok_or_else(|| format!("unknown proposition {prop}"))?;
            let ablation = Ablation::parse(&ablate)
                .ok_or_else(|| format!("unknown hypothesis label {ablate}"))?;
            let result =
                counterexample_search(prop, ablation, trials, seed).map_err(|e| e.to_string())?;
            if format == "json" {
                let body = serde_json::json!({
                    "found": result.found,
                    "trial": result.trial,
                    "trials_run": result.trials_run,
                    "witness": result.witness,
                    "scenario": result.scenario.as_ref().map(|s| s.to_file()),
                });
                emit(serde_json::to_string_pretty(&body).unwrap());
            } else {
                match (&result.found, &result.witness) {
                    (true, Some(w)) => emit(format!(
                        "found counterexample at trial {}: {w}",
                        result.trial.unwrap()
                    )),
                    _ => emit(format!("no counterexample in {} trials", result.trials_run)),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn relax_embed_check(check: CheckRequest) -> CheckRequest {
    match check {
        CheckRequest::P74 {
            question,
            beta,
            paths,
            target,
            ..
        } => CheckRequest::P74 {
            question,
            beta,
            paths,
            target,
            no_embed_check: true,
        },
        CheckRequest::P75 {
            question,
            beta,
            paths,
            target,
            ..
        } => CheckRequest::P75 {
            question,
            beta,
            paths,
            target,
            no_embed_check: true,
        },
        CheckRequest::P82 {
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
            ..
        } => CheckRequest::P82 {
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
            no_embed_check: true,
        },
        CheckRequest::P83 {
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
            ..
        } => CheckRequest::P83 {
            qstar,
            vstar,
            qdagger,
            vdagger,
            cset,
            no_embed_check: true,
        },
        other => other,
    }
}
