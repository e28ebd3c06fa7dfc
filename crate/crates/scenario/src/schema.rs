//! On-disk scenario schema and its resolution into runtime objects.
//!
//! Top-level keys: `sms1`, `sms2?`, `psi?`, `Psi?`, `E?`, `divergence`,
//! `epsilon`, `step`, `checks[]`, plus a single integer `schema` version.
//! Claims are `[question, answer]` pairs, vectors are arrays of claims,
//! table rows are `{vector|set, p}` with rationals as strings.

use crate::rational::serde_rational;
use serde::{Deserialize, Serialize};
use smslab_core::calibration::{PsiInterp, PsiMap};
use smslab_core::claim::{Answer, Claim, ClaimSet, ClaimVector, Question};
use smslab_core::dist::Dist;
use smslab_core::divergence::DivergenceKind;
use smslab_core::embedding::EmbeddingMap;
use smslab_core::sms::{Law, SmsSpec, Table};
use smslab_core::{Exact, Sms};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type ClaimText = (String, String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<ClaimText>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<Vec<ClaimText>>,
    #[serde(with = "serde_rational")]
    pub p: Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRowFile {
    pub from: Vec<ClaimText>,
    pub to: Vec<RowFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmsFile {
    pub questions: Vec<String>,
    pub answers: Vec<String>,
    pub horizon: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<u32>,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<Vec<RowFile>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<RowFile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<KernelRowFile>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub from: String,
    pub to: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpEntry {
    pub answers: Vec<String>,
    #[serde(with = "serde_rational")]
    pub p: Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpRow {
    pub questions: Vec<String>,
    pub answer: String,
    pub dist: Vec<InterpEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRow {
    pub from: Vec<ClaimText>,
    pub to: Vec<ClaimText>,
}

/// One check request, dispatched by the runner in file order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum CheckRequest {
    Validate,
    NonRepeating {
        k: u32,
    },
    BackwardConsistent {
        kappa: u32,
    },
    Superset {
        #[serde(skip_serializing_if = "Option::is_none")]
        step: Option<u32>,
        set: Vec<ClaimText>,
    },
    ExactSet {
        #[serde(skip_serializing_if = "Option::is_none")]
        step: Option<u32>,
        set: Vec<ClaimText>,
    },
    Limit {
        set: Vec<ClaimText>,
        #[serde(with = "serde_rational")]
        tol: Exact,
    },
    Respond {
        #[serde(skip_serializing_if = "Option::is_none")]
        step: Option<u32>,
        questions: Vec<String>,
        set: Vec<ClaimText>,
    },
    Collection {
        #[serde(default)]
        limit: bool,
        collection: Vec<Vec<ClaimText>>,
        #[serde(default)]
        extra: Vec<ClaimText>,
        #[serde(skip_serializing_if = "Option::is_none")]
        questions: Option<Vec<String>>,
    },
    Mc {
        #[serde(skip_serializing_if = "Option::is_none")]
        step: Option<u32>,
        set: Vec<ClaimText>,
        samples: u64,
    },
    Convexity {
        trials: u32,
    },
    Calibrate {
        question: String,
        #[serde(default)]
        set: Vec<ClaimText>,
    },
    Reduction {
        question: String,
        #[serde(default)]
        set: Vec<ClaimText>,
    },
    Honest {
        question: String,
        answer: String,
        #[serde(default)]
        set: Vec<ClaimText>,
        #[serde(default)]
        at_limit: bool,
    },
    Embedding,
    EmbedCalibrate {
        question: String,
        #[serde(default)]
        set: Vec<ClaimText>,
    },
    Discriminating {
        question: String,
        #[serde(default)]
        set: Vec<ClaimText>,
    },
    Projection {
        question: String,
        #[serde(default)]
        set: Vec<ClaimText>,
    },
    Evidence {
        dist: String,
        question: String,
        #[serde(default)]
        beta: Vec<ClaimText>,
        paths: Vec<Vec<ClaimText>>,
        target: String,
        /// Also check the cumulative chain under every path ordering.
        #[serde(default)]
        permutations: bool,
    },
    P73 {
        question: String,
        #[serde(default)]
        beta: Vec<ClaimText>,
        paths: Vec<Vec<ClaimText>>,
        target: String,
    },
    P74 {
        question: String,
        #[serde(default)]
        beta: Vec<ClaimText>,
        paths: Vec<Vec<ClaimText>>,
        target: String,
        #[serde(default)]
        no_embed_check: bool,
    },
    P75 {
        question: String,
        #[serde(default)]
        beta: Vec<ClaimText>,
        paths: Vec<Vec<ClaimText>>,
        target: String,
        #[serde(default)]
        no_embed_check: bool,
    },
    P81 {
        qstar: String,
        vstar: String,
        qdagger: String,
        vdagger: String,
        #[serde(default)]
        cset: Vec<ClaimText>,
    },
    P82 {
        qstar: String,
        vstar: String,
        qdagger: String,
        vdagger: String,
        #[serde(default)]
        cset: Vec<ClaimText>,
        #[serde(default)]
        no_embed_check: bool,
    },
    P83 {
        qstar: String,
        vstar: String,
        qdagger: String,
        vdagger: String,
        #[serde(default)]
        cset: Vec<ClaimText>,
        #[serde(default)]
        no_embed_check: bool,
    },
    AbductionAlpha {
        dist: String,
        qstar: String,
        vstar: String,
        qdagger: String,
        vdagger: String,
        #[serde(default)]
        cset: Vec<ClaimText>,
    },
}

impl CheckRequest {
    /// Identifier used by `verify --prop` and `construct --prop`.
    pub fn prop_id(&self) -> Option<&'static str> {
        match self {
            CheckRequest::P73 { .. } => Some("p73"),
            CheckRequest::P74 { .. } => Some("p74"),
            CheckRequest::P75 { .. } => Some("p75"),
            CheckRequest::P81 { .. } => Some("p81"),
            CheckRequest::P82 { .. } => Some("p82"),
            CheckRequest::P83 { .. } => Some("p83"),
            CheckRequest::Projection { .. } => Some("projection"),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema: u32,
    pub sms1: SmsFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sms2: Option<SmsFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<PsiRow>>,
    #[serde(rename = "Psi", skip_serializing_if = "Option::is_none")]
    pub interp: Option<Vec<InterpRow>>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<EmbedRow>>,
    pub divergence: String,
    pub epsilon: f64,
    pub step: u32,
    pub checks: Vec<CheckRequest>,
}

/// Parse failure with a location: either a JSON syntax position or a
/// semantic path into the document.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
}

fn semantic(path: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Semantic {
        path: path.into(),
        message: message.into(),
    }
}

/// A fully resolved scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub sms1: Sms,
    pub sms2: Option<Sms>,
    pub psi: PsiMap,
    pub interp: PsiInterp<Exact>,
    pub embedding: Option<EmbeddingMap>,
    pub divergence: DivergenceKind,
    pub epsilon: f64,
    pub step: u32,
    pub checks: Vec<CheckRequest>,
}

impl Scenario {
    /// The reasoner/scientist side: `sms2` when present, else `sms1`.
    pub fn reasoner(&self) -> &Sms {
        self.sms2.as_ref().unwrap_or(&self.sms1)
    }

    /// Canonical file representation.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            schema: 1,
            sms1: sms_to_file(&self.sms1),
            sms2: self.sms2.as_ref().map(sms_to_file),
            psi: if self.psi.domain().next().is_none() {
                None
            } else {
                Some(
                    self.psi
                        .domain()
                        .map(|q| PsiRow {
                            from: q.0.clone(),
                            to: self.psi.get(q).unwrap().iter().map(|t| t.0.clone()).collect(),
                        })
                        .collect(),
                )
            },
            interp: {
                let rows: Vec<InterpRow> = self
                    .interp
                    .iter()
                    .map(|((qs, v), d)| InterpRow {
                        questions: qs.iter().map(|q| q.0.clone()).collect(),
                        answer: v.0.clone(),
                        dist: d
                            .iter()
                            .map(|(tuple, p)| InterpEntry {
                                answers: tuple.iter().map(|a| a.0.clone()).collect(),
                                p: p.clone(),
                            })
                            .collect(),
                    })
                    .collect();
                if rows.is_empty() {
                    None
                } else {
                    Some(rows)
                }
            },
            embedding: self.embedding.as_ref().map(|map| {
                map.rows()
                    .map(|(from, to)| EmbedRow {
                        from: claims_to_text(from),
                        to: claims_to_text(to),
                    })
                    .collect()
            }),
            divergence: self.divergence.to_string(),
            epsilon: self.epsilon,
            step: self.step,
            checks: self.checks.clone(),
        }
    }

    /// Canonical serialized form; the basis for digests and golden files.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }
}

pub fn claims_to_text(set: &ClaimSet) -> Vec<ClaimText> {
    set.iter()
        .map(|c| (c.question.0.clone(), c.answer.0.clone()))
        .collect()
}

pub fn text_to_claims(text: &[ClaimText]) -> ClaimSet {
    ClaimSet::from_claims(text.iter().map(|(q, a)| Claim::new(q.clone(), a.clone())))
}

fn vector_to_text(v: &ClaimVector) -> Vec<ClaimText> {
    v.claims()
        .iter()
        .map(|c| (c.question.0.clone(), c.answer.0.clone()))
        .collect()
}

fn sms_to_file(spec: &Sms) -> SmsFile {
    let row = |(v, p): (&ClaimVector, &Exact)| RowFile {
        vector: Some(vector_to_text(v)),
        set: None,
        p: p.clone(),
    };
    let table_rows = |t: &Table<Exact>| -> Vec<RowFile> {
        t.rows().iter().map(|(v, p)| row((v, p))).collect()
    };
    match &spec.law {
        Law::PerStep { steps } => SmsFile {
            questions: spec.questions.iter().map(|q| q.0.clone()).collect(),
            answers: spec.answers.iter().map(|a| a.0.clone()).collect(),
            horizon: spec.horizon,
            kappa: spec.kappa,
            mode: "per-step".into(),
            steps: Some(steps.iter().map(table_rows).collect()),
            init: None,
            kernel: None,
        },
        Law::Kernel { init, kernel } => SmsFile {
            questions: spec.questions.iter().map(|q| q.0.clone()).collect(),
            answers: spec.answers.iter().map(|a| a.0.clone()).collect(),
            horizon: spec.horizon,
            kappa: spec.kappa,
            mode: "kernel".into(),
            steps: None,
            init: Some(table_rows(init)),
            kernel: Some(
                kernel
                    .iter()
                    .map(|(from, to)| KernelRowFile {
                        from: vector_to_text(from),
                        to: table_rows(to),
                    })
                    .collect(),
            ),
        },
    }
}

struct Alphabets {
    questions: BTreeSet<Question>,
    answers: BTreeSet<Answer>,
}

fn resolve_claim(
    path: &str,
    (q, a): &ClaimText,
    alpha: &Alphabets,
) -> Result<Claim, ParseError> {
    let question = Question::new(q.clone());
    let answer = Answer::new(a.clone());
    if !alpha.questions.contains(&question) {
        return Err(semantic(path, format!("unresolved question id {q}")));
    }
    if !alpha.answers.contains(&answer) {
        return Err(semantic(path, format!("unresolved answer id {a}")));
    }
    Ok(Claim { question, answer })
}

fn resolve_row(path: &str, row: &RowFile, alpha: &Alphabets) -> Result<(ClaimVector, Exact), ParseError> {
    let claims_text = match (&row.vector, &row.set) {
        (Some(v), None) => v,
        (None, Some(s)) => s,
        _ => return Err(semantic(path, "row must have exactly one of vector|set")),
    };
    let mut claims = Vec::new();
    for (i, ct) in claims_text.iter().enumerate() {
        claims.push(resolve_claim(&format!("{path}[{i}]"), ct, alpha)?);
    }
    if row.set.is_some() {
        claims.sort();
        claims.dedup();
    }
    Ok((ClaimVector::from_raw(claims), row.p.clone()))
}

fn resolve_sms(path: &str, file: &SmsFile, strict: bool) -> Result<Sms, ParseError> {
    let alpha = Alphabets {
        questions: file.questions.iter().map(|q| Question::new(q.clone())).collect(),
        answers: file.answers.iter().map(|a| Answer::new(a.clone())).collect(),
    };
    if alpha.questions.len() != file.questions.len() {
        return Err(semantic(format!("{path}.questions"), "duplicate question ids"));
    }
    if alpha.answers.len() != file.answers.len() {
        return Err(semantic(format!("{path}.answers"), "duplicate answer ids"));
    }
    let law = match file.mode.as_str() {
        "per-step" => {
            let steps = file
                .steps
                .as_ref()
                .ok_or_else(|| semantic(format!("{path}.steps"), "per-step mode requires steps"))?;
            let mut tables = Vec::new();
            for (i, rows) in steps.iter().enumerate() {
                let mut t = Vec::new();
                for (j, r) in rows.iter().enumerate() {
                    t.push(resolve_row(&format!("{path}.steps[{i}][{j}]"), r, &alpha)?);
                }
                tables.push(Table::new(t));
            }
            Law::PerStep { steps: tables }
        }
        "kernel" => {
            let init_rows = file
                .init
                .as_ref()
                .ok_or_else(|| semantic(format!("{path}.init"), "kernel mode requires init"))?;
            let mut init = Vec::new();
            for (j, r) in init_rows.iter().enumerate() {
                init.push(resolve_row(&format!("{path}.init[{j}]"), r, &alpha)?);
            }
            let kernel_rows = file
                .kernel
                .as_ref()
                .ok_or_else(|| semantic(format!("{path}.kernel"), "kernel mode requires kernel"))?;
            let mut kernel = BTreeMap::new();
            for (i, kr) in kernel_rows.iter().enumerate() {
                let mut from_claims = Vec::new();
                for (j, ct) in kr.from.iter().enumerate() {
                    from_claims.push(resolve_claim(
                        &format!("{path}.kernel[{i}].from[{j}]"),
                        ct,
                        &alpha,
                    )?);
                }
                let mut to = Vec::new();
                for (j, r) in kr.to.iter().enumerate() {
                    to.push(resolve_row(&format!("{path}.kernel[{i}].to[{j}]"), r, &alpha)?);
                }
                kernel.insert(ClaimVector::from_raw(from_claims), Table::new(to));
            }
            Law::Kernel {
                init: Table::new(init),
                kernel,
            }
        }
        other => {
            return Err(semantic(
                format!("{path}.mode"),
                format!("unknown mode {other}"),
            ))
        }
    };
    let spec = SmsSpec {
        questions: alpha.questions,
        answers: alpha.answers,
        horizon: file.horizon,
        law,
        kappa: file.kappa,
    };
    if strict {
        let report = spec.validate();
        if let Some(v) = report.violations.first() {
            return Err(semantic(path, v.to_string()));
        }
    }
    Ok(spec)
}

/// Parses and resolves a scenario. Strict parsing also rejects structurally
/// invalid probability tables; the lenient variant leaves those to the
/// `validate` check so that they can be reported rather than refused.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    parse_with(text, true)
}

pub fn parse_scenario_lenient(text: &str) -> Result<Scenario, ParseError> {
    parse_with(text, false)
}

fn parse_with(text: &str, strict: bool) -> Result<Scenario, ParseError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    resolve_scenario(&file, strict)
}

pub fn resolve_scenario(file: &ScenarioFile, strict: bool) -> Result<Scenario, ParseError> {
    if file.schema != 1 {
        return Err(semantic("schema", format!("unsupported version {}", file.schema)));
    }
    let sms1 = resolve_sms("sms1", &file.sms1, strict)?;
    let sms2 = match &file.sms2 {
        Some(f) => Some(resolve_sms("sms2", f, strict)?),
        None => None,
    };
    let reasoner = sms2.as_ref().unwrap_or(&sms1);

    let psi = match &file.psi {
        None => PsiMap::default(),
        Some(rows) => {
            let mut map = BTreeMap::new();
            for (i, row) in rows.iter().enumerate() {
                let from = Question::new(row.from.clone());
                if !reasoner.questions.contains(&from) {
                    return Err(semantic(
                        format!("psi[{i}].from"),
                        format!("unresolved question id {}", row.from),
                    ));
                }
                let mut to = Vec::new();
                for t in &row.to {
                    let q = Question::new(t.clone());
                    if !sms1.questions.contains(&q) {
                        return Err(semantic(
                            format!("psi[{i}].to"),
                            format!("unresolved question id {t}"),
                        ));
                    }
                    to.push(q);
                }
                map.insert(from, to);
            }
            PsiMap::new(map)
        }
    };

    let interp = match &file.interp {
        None => PsiInterp::default(),
        Some(rows) => {
            let mut out = PsiInterp::default();
            for (i, row) in rows.iter().enumerate() {
                let mut qs = Vec::new();
                for t in &row.questions {
                    let q = Question::new(t.clone());
                    if !sms1.questions.contains(&q) {
                        return Err(semantic(
                            format!("Psi[{i}].questions"),
                            format!("unresolved question id {t}"),
                        ));
                    }
                    qs.push(q);
                }
                let answer = Answer::new(row.answer.clone());
                if !reasoner.answers.contains(&answer) {
                    return Err(semantic(
                        format!("Psi[{i}].answer"),
                        format!("unresolved answer id {}", row.answer),
                    ));
                }
                let mut entries = BTreeMap::new();
                for (j, e) in row.dist.iter().enumerate() {
                    if e.answers.len() != qs.len() {
                        return Err(semantic(
                            format!("Psi[{i}].dist[{j}]"),
                            "answer tuple arity mismatch",
                        ));
                    }
                    let mut tuple = Vec::new();
                    for a in &e.answers {
                        let ans = Answer::new(a.clone());
                        if !sms1.answers.contains(&ans) {
                            return Err(semantic(
                                format!("Psi[{i}].dist[{j}]"),
                                format!("unresolved answer id {a}"),
                            ));
                        }
                        tuple.push(ans);
                    }
                    entries.insert(tuple, e.p.clone());
                }
                out.insert(qs, answer, Dist::new(entries, true));
            }
            if strict {
                out.validate()
                    .map_err(|e| semantic("Psi", e.to_string()))?;
            }
            out
        }
    };

    let embedding = match &file.embedding {
        None => None,
        Some(rows) => {
            let universe_alpha = Alphabets {
                questions: sms1.questions.clone(),
                answers: sms1.answers.clone(),
            };
            let sci_alpha = Alphabets {
                questions: reasoner.questions.clone(),
                answers: reasoner.answers.clone(),
            };
            let mut table = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let mut from = ClaimSet::empty();
                for (j, ct) in row.from.iter().enumerate() {
                    from.insert(resolve_claim(
                        &format!("E[{i}].from[{j}]"),
                        ct,
                        &universe_alpha,
                    )?);
                }
                let mut to = ClaimSet::empty();
                for (j, ct) in row.to.iter().enumerate() {
                    to.insert(resolve_claim(&format!("E[{i}].to[{j}]"), ct, &sci_alpha)?);
                }
                table.push((from, to));
            }
            Some(EmbeddingMap::new(table))
        }
    };

    let divergence = DivergenceKind::parse(&file.divergence).ok_or_else(|| {
        semantic("divergence", format!("unknown divergence {}", file.divergence))
    })?;

    // Identifier resolution inside check requests.
    let all_questions: BTreeSet<&Question> =
        sms1.questions.iter().chain(reasoner.questions.iter()).collect();
    let all_answers: BTreeSet<&Answer> =
        sms1.answers.iter().chain(reasoner.answers.iter()).collect();
    for (i, check) in file.checks.iter().enumerate() {
        for q in check_questions(check) {
            if !all_questions.contains(&Question::new(q.clone())) {
                return Err(semantic(
                    format!("checks[{i}]"),
                    format!("unresolved question id {q}"),
                ));
            }
        }
        for a in check_answers(check) {
            if !all_answers.contains(&Answer::new(a.clone())) {
                return Err(semantic(
                    format!("checks[{i}]"),
                    format!("unresolved answer id {a}"),
                ));
            }
        }
    }

    Ok(Scenario {
        sms1,
        sms2,
        psi,
        interp,
        embedding,
        divergence,
        epsilon: file.epsilon,
        step: file.step,
        checks: file.checks.clone(),
    })
}

fn claims_ids(claims: &[ClaimText]) -> (Vec<String>, Vec<String>) {
    (
        claims.iter().map(|(q, _)| q.clone()).collect(),
        claims.iter().map(|(_, a)| a.clone()).collect(),
    )
}

fn check_questions(check: &CheckRequest) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    fn push_claims(out: &mut Vec<String>, claims: &[ClaimText]) {
        out.extend(claims_ids(claims).0);
    }
    match check {
        CheckRequest::Superset { set, .. }
        | CheckRequest::ExactSet { set, .. }
        | CheckRequest::Limit { set, .. } => push_claims(&mut out, set),
        CheckRequest::Respond { questions, set, .. } => {
            out.extend(questions.clone());
            push_claims(&mut out, set);
        }
        CheckRequest::Collection {
            collection,
            extra,
            questions,
            ..
        } => {
            for c in collection {
                push_claims(&mut out, c);
            }
            push_claims(&mut out, extra);
            if let Some(qs) = questions {
                out.extend(qs.clone());
            }
        }
        CheckRequest::Mc { set, .. } => push_claims(&mut out, set),
        CheckRequest::Calibrate { question, set }
        | CheckRequest::Reduction { question, set }
        | CheckRequest::EmbedCalibrate { question, set }
        | CheckRequest::Discriminating { question, set }
        | CheckRequest::Projection { question, set } => {
            out.push(question.clone());
            push_claims(&mut out, set);
        }
        CheckRequest::Honest { question, set, .. } => {
            out.push(question.clone());
            push_claims(&mut out, set);
        }
        CheckRequest::Evidence {
            question,
            beta,
            paths,
            ..
        }
        | CheckRequest::P73 {
            question,
            beta,
            paths,
            ..
        }
        | CheckRequest::P74 {
            question,
            beta,
            paths,
            ..
        }
        | CheckRequest::P75 {
            question,
            beta,
            paths,
            ..
        } => {
            out.push(question.clone());
            push_claims(&mut out, beta);
            for p in paths {
                push_claims(&mut out, p);
            }
        }
        CheckRequest::P81 {
            qstar,
            qdagger,
            cset,
            ..
        }
        | CheckRequest::P82 {
            qstar,
            qdagger,
            cset,
            ..
        }
        | CheckRequest::P83 {
            qstar,
            qdagger,
            cset,
            ..
        }
        | CheckRequest::AbductionAlpha {
            qstar,
            qdagger,
            cset,
            ..
        } => {
            out.push(qstar.clone());
            out.push(qdagger.clone());
            push_claims(&mut out, cset);
        }
        _ => {}
    }
    out
}

fn check_answers(check: &CheckRequest) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    fn push_claims(out: &mut Vec<String>, claims: &[ClaimText]) {
        out.extend(claims_ids(claims).1);
    }
    match check {
        CheckRequest::Superset { set, .. }
        | CheckRequest::ExactSet { set, .. }
        | CheckRequest::Limit { set, .. }
        | CheckRequest::Mc { set, .. } => push_claims(&mut out, set),
        CheckRequest::Respond { set, .. } => push_claims(&mut out, set),
        CheckRequest::Collection {
            collection, extra, ..
        } => {
            for c in collection {
                push_claims(&mut out, c);
            }
            push_claims(&mut out, extra);
        }
        CheckRequest::Calibrate { set, .. }
        | CheckRequest::Reduction { set, .. }
        | CheckRequest::EmbedCalibrate { set, .. }
        | CheckRequest::Discriminating { set, .. }
        | CheckRequest::Projection { set, .. } => push_claims(&mut out, set),
        CheckRequest::Honest { answer, set, .. } => {
            out.push(answer.clone());
            push_claims(&mut out, set);
        }
        CheckRequest::Evidence {
            beta,
            paths,
            target,
            ..
        }
        | CheckRequest::P73 {
            beta,
            paths,
            target,
            ..
        }
        | CheckRequest::P74 {
            beta,
            paths,
            target,
            ..
        }
        | CheckRequest::P75 {
            beta,
            paths,
            target,
            ..
        } => {
            out.push(target.clone());
            push_claims(&mut out, beta);
            for p in paths {
                push_claims(&mut out, p);
            }
        }
        CheckRequest::P81 {
            vstar,
            vdagger,
            cset,
            ..
        }
        | CheckRequest::P82 {
            vstar,
            vdagger,
            cset,
            ..
        }
        | CheckRequest::P83 {
            vstar,
            vdagger,
            cset,
            ..
        }
        | CheckRequest::AbductionAlpha {
            vstar,
            vdagger,
            cset,
            ..
        } => {
            out.push(vstar.clone());
            out.push(vdagger.clone());
            push_claims(&mut out, cset);
        }
        _ => {}
    }
    out
}
