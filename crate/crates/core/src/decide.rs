//! The decision procedures: pp, ep and ex definability of a target relation
//! from a template, and the 4-ary identity check.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::age::BaseStructure;
use crate::behavior::{
    check_compatibility, check_identity as verify_identity, check_preservation, check_violation,
    extend, search, Behavior, Budget, Mode, SearchOutcome, SearchProblem, SearchStats,
};
use crate::formula::RelationDef;
use crate::oracle::replay::{replay, ReplayReport};
use crate::oracle::synth::{synthesize_pp, PpFormula};
use crate::types::{type_table, TypeRep};

/// A definability question: is `target` pp/ep/ex definable from `theta`?
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    pub base: &'a BaseStructure,
    pub mode: Mode,
    pub target: RelationDef,
    pub theta: Vec<RelationDef>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DecideError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("witness failed {check}: {detail}")]
    WitnessRejected { check: String, detail: String },
}

impl Problem<'_> {
    pub fn validate(&self) -> Result<(), DecideError> {
        if self.mode == Mode::Identity {
            return Err(DecideError::InvalidProblem(
                "identity queries go through check_identity".into(),
            ));
        }
        if self.target.arity() == 0 || self.theta.iter().any(|r| r.arity() == 0) {
            return Err(DecideError::InvalidProblem("relation of arity 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Definable,
    NotDefinable,
    Inconclusive(String),
}

impl Verdict {
    pub fn word(&self) -> &'static str {
        match self {
            Verdict::Definable => "DEFINABLE",
            Verdict::NotDefinable => "NOT-DEFINABLE",
            Verdict::Inconclusive(_) => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

/// How a verdict was reached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Route {
    EmptyTarget,
    FullTarget,
    TargetInTemplate,
    /// Searches were run (labels in `Decision::searches`).
    Search,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: Verdict,
    pub route: Route,
    /// Present iff the verdict is `NotDefinable`.
    pub witness: Option<Behavior>,
    /// Replay reports of the witness, one per size vector.
    pub replays: Vec<ReplayReport>,
    pub synthesized: Option<PpFormula>,
    /// One entry per search run, labelled.
    pub searches: Vec<(String, SearchStats)>,
}

#[derive(Clone, Debug)]
pub struct DecideOptions {
    /// Budget for each individual search.
    pub budget: Budget,
    /// Run the ep/ex constant choices concurrently. Aggregation stays
    /// deterministic.
    pub parallel: bool,
    /// In pp mode, try the unary searches (one per target type) before the
    /// full search; a unary witness is padded to full arity.
    pub unary_first: bool,
    /// In pp mode, cap the arity at `2·|S_2| - 1` when that is smaller than
    /// the number of target types.
    pub arity_cap: bool,
    /// Existential variables and atoms for the pp synthesizer; `None` skips
    /// synthesis.
    pub synthesis: Option<(usize, usize)>,
    /// Replay size vectors are `k + d` per coordinate for each `d` here.
    pub replay_offsets: Vec<usize>,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            budget: Budget::default(),
            parallel: false,
            unary_first: true,
            arity_cap: false,
            synthesis: Some((2, 6)),
            replay_offsets: vec![1, 2],
        }
    }
}

/// Number of coordinates of the pp search: one per target type.
pub fn arity_bound(problem: &Problem<'_>) -> usize {
    problem.target.type_set().len()
}

/// The optional cap `2·o(2) - 1`, with `o(2)` the number of 2-types of the
/// base (which bounds the number of 2-orbits of any reduct from above).
pub fn arity_cap(base: &BaseStructure) -> usize {
    2 * type_table(base, 2).len() - 1
}

enum Attempt {
    Found(Behavior),
    Exhausted,
    Limit(String),
}

fn run(
    problem: &Problem<'_>,
    mode: Mode,
    constants: Vec<TypeRep>,
    budget: &Budget,
) -> (Attempt, SearchStats) {
    let sp = SearchProblem {
        base: problem.base,
        mode,
        constants,
        theta: problem.theta.clone(),
        target: Some(problem.target.clone()),
    };
    let (out, stats) = search(&sp, budget);
    let attempt = match out {
        SearchOutcome::Found(b) => Attempt::Found(b),
        SearchOutcome::Exhausted => Attempt::Exhausted,
        SearchOutcome::ResourceLimit(msg) => Attempt::Limit(msg),
    };
    (attempt, stats)
}

/// Whether a search stopped before its cells were built.
fn unstarted(r: &(Attempt, SearchStats)) -> bool {
    matches!(r.0, Attempt::Limit(_)) && r.1.cells == 0
}

/// A unary witness at constant `types[at]` as a witness over all of `types`:
/// every coordinate but `at` is ignored.
fn pad(w: &Behavior, base: &BaseStructure, types: &[TypeRep], at: usize, cap: usize) -> Option<Behavior> {
    Behavior::from_fn(base, types.to_vec(), cap, |args| {
        extend(w, base, &[args[at].clone()]).expect("complete behavior extends")
    })
    .ok()
}

fn combinations_with_repetition(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            rec(x, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Checks a witness with the behavior checkers and the quotient replay.
fn certify(
    w: &Behavior,
    problem: &Problem<'_>,
    options: &DecideOptions,
) -> Result<Vec<ReplayReport>, DecideError> {
    let reject = |check: &str, detail: String| DecideError::WitnessRejected {
        check: check.into(),
        detail,
    };
    if let Err(c) = check_compatibility(w) {
        return Err(reject("compatibility", format!("{c:?}")));
    }
    let sp = SearchProblem {
        base: problem.base,
        mode: problem.mode,
        constants: w.constants().to_vec(),
        theta: problem.theta.clone(),
        target: Some(problem.target.clone()),
    };
    match check_violation(w, &sp) {
        Ok(true) => {}
        Ok(false) => return Err(reject("violation", String::new())),
        Err(e) => return Err(reject("violation", e.to_string())),
    }
    match check_preservation(w, &sp, usize::MAX) {
        Ok(None) => {}
        Ok(Some(f)) => return Err(reject("preservation", format!("{f:?}"))),
        Err(e) => return Err(reject("preservation", e.to_string())),
    }
    let k = problem.target.arity();
    let mut reports = Vec::new();
    for d in &options.replay_offsets {
        let sizes = vec![k + d; w.m()];
        let r = replay(w, problem, &sizes);
        if let Some(check) = r.failure() {
            return Err(reject("replay", format!("{check} at sizes {sizes:?}")));
        }
        reports.push(r);
    }
    Ok(reports)
}

/// Decides the problem. `Err` only for invalid problems and for witnesses
/// that fail certification, which would indicate a bug in the search.
pub fn decide(problem: &Problem<'_>, options: &DecideOptions) -> Result<Decision, DecideError> {
    problem.validate()?;
    let types: Vec<TypeRep> = problem.target.type_set().iter().cloned().collect();
    let k = problem.target.arity();
    let short = |route: Route| Decision {
        verdict: Verdict::Definable,
        route,
        witness: None,
        replays: Vec::new(),
        synthesized: None,
        searches: Vec::new(),
    };
    if types.is_empty() {
        return Ok(short(Route::EmptyTarget));
    }
    if types.len() == type_table(problem.base, k).len() {
        return Ok(short(Route::FullTarget));
    }
    if problem
        .theta
        .iter()
        .any(|r| r.arity() == k && r.type_set() == problem.target.type_set())
    {
        let mut d = short(Route::TargetInTemplate);
        if problem.mode == Mode::Pp && options.synthesis.is_some() {
            d.synthesized = synthesize_pp(&problem.target, &problem.theta, problem.base, 0, 1);
        }
        return Ok(d);
    }

    let mut searches = Vec::new();
    let mut limit: Option<String> = None;
    let mut found: Option<Behavior> = None;

    // Each entry: label, search mode and constants.
    let mut plan: Vec<Vec<(String, Mode, Vec<TypeRep>)>> = Vec::new();
    match problem.mode {
        Mode::Pp => {
            if options.unary_first && types.len() > 1 {
                plan.push(
                    (0..types.len())
                        .map(|i| (format!("pp unary c{i}"), Mode::Pp, vec![types[i].clone()]))
                        .collect(),
                );
            }
            let cap = arity_cap(problem.base);
            if options.arity_cap && cap < types.len() {
                plan.push(
                    combinations_with_repetition(types.len(), cap)
                        .into_iter()
                        .map(|idx| {
                            let label = format!("pp capped {idx:?}");
                            (label, Mode::Pp, idx.iter().map(|&i| types[i].clone()).collect())
                        })
                        .collect(),
                );
            } else {
                plan.push(vec![("pp".into(), Mode::Pp, types.clone())]);
            }
        }
        mode => plan.push(
            (0..types.len())
                .map(|i| (format!("{mode} c{i}"), mode, vec![types[i].clone()]))
                .collect(),
        ),
    }

    'stages: for (stage, runs) in plan.iter().enumerate() {
        let results: Vec<(Attempt, SearchStats)> = if options.parallel {
            runs.par_iter()
                .map(|(_, mode, c)| run(problem, *mode, c.clone(), &options.budget))
                .collect()
        } else {
            let mut out = Vec::new();
            for (_, mode, c) in runs {
                let r = run(problem, *mode, c.clone(), &options.budget);
                let stop = matches!(r.0, Attempt::Found(_)) || (stage == 0 && plan.len() > 1 && unstarted(&r));
                out.push(r);
                if stop {
                    break;
                }
            }
            out
        };
        for ((label, _, _), result) in runs.iter().zip(results) {
            // A unary search that could not even be built means the full
            // search cannot be built either: its cells contain these.
            let give_up = stage == 0 && plan.len() > 1 && unstarted(&result);
            let (attempt, stats) = result;
            searches.push((label.clone(), stats));
            if give_up {
                if let Attempt::Limit(msg) = attempt {
                    limit = Some(format!("{label}: {msg}"));
                }
                break 'stages;
            }
            match attempt {
                Attempt::Found(w) => {
                    let unary = problem.mode == Mode::Pp && options.unary_first && stage == 0 && types.len() > 1;
                    if unary {
                        let at = types.iter().position(|t| t == &w.constants()[0]).expect("constant in target");
                        match pad(&w, problem.base, &types, at, options.budget.max_cells) {
                            Some(p) => found = Some(p),
                            // Too large to pad: fall through to the full search.
                            None => continue,
                        }
                    } else {
                        found = Some(w);
                    }
                    break 'stages;
                }
                Attempt::Exhausted => {}
                Attempt::Limit(msg) => {
                    limit.get_or_insert(format!("{label}: {msg}"));
                }
            }
        }
        // The unary stage only proves non-definability.
        if stage == 0 && plan.len() > 1 {
            limit = None;
        }
    }

    if let Some(w) = found {
        let replays = certify(&w, problem, options)?;
        return Ok(Decision {
            verdict: Verdict::NotDefinable,
            route: Route::Search,
            witness: Some(w),
            replays,
            synthesized: None,
            searches,
        });
    }
    if let Some(msg) = limit {
        return Ok(Decision {
            verdict: Verdict::Inconclusive(msg),
            route: Route::Search,
            witness: None,
            replays: Vec::new(),
            synthesized: None,
            searches,
        });
    }
    let synthesized = match (problem.mode, options.synthesis) {
        (Mode::Pp, Some((vars, atoms))) => synthesize_pp(&problem.target, &problem.theta, problem.base, vars, atoms),
        _ => None,
    };
    Ok(Decision {
        verdict: Verdict::Definable,
        route: Route::Search,
        witness: None,
        replays: Vec::new(),
        synthesized,
        searches,
    })
}

#[derive(Clone, Debug)]
pub enum IdentityOutcome {
    Holds(Behavior),
    Exhausted,
    Inconclusive(String),
}

impl IdentityOutcome {
    pub fn word(&self) -> &'static str {
        match self {
            IdentityOutcome::Holds(_) => "IDENTITY-HOLDS",
            IdentityOutcome::Exhausted => "NO-IDENTITY",
            IdentityOutcome::Inconclusive(_) => "INCONCLUSIVE",
        }
    }
}

/// Searches for a 4-ary behavior preserving `gamma` with
/// `σ(t1,t2,t3,t3) = σ(t2,t3,t1,t2)` on all type triples.
pub fn check_identity(
    base: &BaseStructure,
    gamma: &[RelationDef],
    budget: &Budget,
) -> (IdentityOutcome, SearchStats) {
    let problem = SearchProblem::identity(base, gamma.to_vec());
    let (out, stats) = search(&problem, budget);
    let outcome = match out {
        SearchOutcome::Found(b) => {
            verify_identity(&b).expect("search returns identity behaviors");
            IdentityOutcome::Holds(b)
        }
        SearchOutcome::Exhausted => IdentityOutcome::Exhausted,
        SearchOutcome::ResourceLimit(msg) => IdentityOutcome::Inconclusive(msg),
    };
    (outcome, stats)
}
