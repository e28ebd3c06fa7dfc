//! Scenario files, check dispatch, instance generators, proposition
//! constructors, and randomized counterexample search for smslab.

pub mod construct;
pub mod fixtures;
pub mod generate;
pub mod rational;
pub mod run;
pub mod schema;
pub mod search;

pub use construct::{construct_eps0, Constructed, PropId};
pub use run::{run_scenario, scenario_digest, CheckResult, Outcome, RunReport};
pub use schema::{
    parse_scenario, parse_scenario_lenient, CheckRequest, ParseError, Scenario, ScenarioFile,
};
pub use search::{counterexample_search, Ablation, SearchResult};
