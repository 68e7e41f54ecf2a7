//! Running every query of a problem file.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::behavior::Mode;
use crate::cli::certificate;
use crate::cli::problem_file::{parse_and_load, FileError, Loaded, QueryLine};
use crate::decide::{check_identity, decide, IdentityOutcome, Problem, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_BASE: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Lines printed for one query and its status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryReport {
    /// The `QUERY ..` line.
    pub line: String,
    /// Further detail (definitions, reasons, certificate paths).
    pub notes: Vec<String>,
    /// Certificate text, when the answer comes with a witness.
    pub certificate: Option<String>,
    pub inconclusive: bool,
    pub error: bool,
}

/// Output of a whole run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub stdout: String,
    pub stderr: String,
    pub exit: i32,
}

fn header(id: usize, q: &QueryLine) -> String {
    let from = q.from.join(", ");
    match &q.target {
        Some(t) => format!("QUERY {id}: {} {t} from {{{from}}}", q.mode),
        None => format!("QUERY {id}: identity from {{{from}}}"),
    }
}

pub fn run_query(loaded: &Loaded, id: usize, q: &QueryLine) -> QueryReport {
    let base = &loaded.base;
    let theta: Vec<_> = q
        .from
        .iter()
        .map(|n| loaded.relation(n).expect("names resolved at parse time").clone())
        .collect();
    let head = header(id, q);
    let options = &loaded.file.options;
    let mut report = QueryReport {
        line: String::new(),
        notes: Vec::new(),
        certificate: None,
        inconclusive: false,
        error: false,
    };
    if q.mode == Mode::Identity {
        let (out, stats) = check_identity(base, &theta, &options.budget());
        report.line = format!("{head} => {}", out.word());
        report.notes.push(format!("search: cells {} nodes {}", stats.cells, stats.nodes));
        match out {
            IdentityOutcome::Holds(b) => {
                report.certificate = Some(certificate::render(
                    &loaded.query_text(q),
                    base.signature(),
                    Mode::Identity,
                    0,
                    &b,
                    &[],
                ));
            }
            IdentityOutcome::Exhausted => {}
            IdentityOutcome::Inconclusive(msg) => {
                report.inconclusive = true;
                report.notes.push(format!("reason: {msg}"));
            }
        }
        return report;
    }
    let target = loaded.relation(q.target.as_deref().expect("non-identity query")).expect("resolved");
    let problem = Problem {
        base,
        mode: q.mode,
        target: target.clone(),
        theta: theta.clone(),
    };
    match decide(&problem, &options.decide_options(target.arity())) {
        Err(e) => {
            report.line = format!("{head} => ERROR");
            report.notes.push(e.to_string());
            report.error = true;
        }
        Ok(d) => {
            report.line = format!("{head} => {}", d.verdict);
            for (label, s) in &d.searches {
                report
                    .notes
                    .push(format!("search {label}: cells {} nodes {}", s.cells, s.nodes));
            }
            if let Some(f) = &d.synthesized {
                report.notes.push(format!("definition: {}", f.display(&theta, base)));
            }
            match &d.verdict {
                Verdict::Inconclusive(msg) => {
                    report.inconclusive = true;
                    report.notes.push(format!("reason: {msg}"));
                }
                Verdict::NotDefinable => {
                    let w = d.witness.as_ref().expect("witness with NotDefinable");
                    report.certificate = Some(certificate::render(
                        &loaded.query_text(q),
                        base.signature(),
                        q.mode,
                        target.arity(),
                        w,
                        &d.replays,
                    ));
                }
                Verdict::Definable => {}
            }
        }
    }
    report
}

/// Runs a problem file given as text. Certificates go to `emit` when set.
pub fn run_text(text: &str, emit: Option<&Path>) -> RunReport {
    let loaded = match parse_and_load(text) {
        Ok(l) => l,
        Err(e) => {
            let exit = match e {
                FileError::InvalidBase(_) => EXIT_BASE,
                _ => EXIT_PARSE,
            };
            return RunReport {
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
                exit,
            };
        }
    };
    let queries = &loaded.file.queries;
    let reports: Vec<QueryReport> = if loaded.file.options.parallel {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| run_query(&loaded, i + 1, q))
            .collect()
    } else {
        queries.iter().enumerate().map(|(i, q)| run_query(&loaded, i + 1, q)).collect()
    };
    let mut stdout = String::new();
    let mut stderr = String::new();
    let mut exit = EXIT_OK;
    for (i, r) in reports.iter().enumerate() {
        stdout.push_str(&r.line);
        stdout.push('\n');
        for note in &r.notes {
            stderr.push_str(&format!("  query {}: {note}\n", i + 1));
        }
        if let (Some(dir), Some(cert)) = (emit, &r.certificate) {
            let path = dir.join(format!("query-{}.cert", i + 1));
            match fs::create_dir_all(dir).and_then(|_| fs::write(&path, cert)) {
                Ok(()) => stderr.push_str(&format!("  query {}: certificate {}\n", i + 1, path.display())),
                Err(e) => {
                    stderr.push_str(&format!("error: writing {}: {e}\n", path.display()));
                    exit = EXIT_ERROR;
                }
            }
        }
        if r.error {
            exit = EXIT_ERROR;
        }
    }
    if exit == EXIT_OK && reports.iter().any(|r| r.inconclusive) {
        exit = EXIT_INCONCLUSIVE;
    }
    RunReport { stdout, stderr, exit }
}

/// Checks a certificate given as text.
pub fn check_text(text: &str) -> RunReport {
    match certificate::check(text) {
        Ok(s) => RunReport {
            stdout: format!("CERTIFICATE: {} witness with {} cells => VERIFIED\n", s.mode, s.cells),
            stderr: String::new(),
            exit: EXIT_OK,
        },
        Err(e @ certificate::CertError::Malformed { .. }) => RunReport {
            stdout: "CERTIFICATE: => MALFORMED\n".into(),
            stderr: format!("error: {e}\n"),
            exit: EXIT_PARSE,
        },
        Err(e) => RunReport {
            stdout: "CERTIFICATE: => REJECTED\n".into(),
            stderr: format!("error: {e}\n"),
            exit: EXIT_ERROR,
        },
    }
}
