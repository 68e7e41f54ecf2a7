//! Witness certificates: a behavior table with its type legend, the problem
//! it answers and the replay report, re-checkable from the file alone.
//!
//! ```text
//! certificate v1
//! digest sha256:<hex of the problem block>
//! problem:
//! | base builtin dense_linear_order
//! | relation Le/2 := x1<x2 | x1=x2
//! | relation Lt/2 := x1<x2
//! | query pp Le from Lt
//! mode: pp
//! arity: 2
//! n: 3
//! constants: [0,1] less(0,1) ; [0,0]
//! types:
//! T0: [0,0,0]
//! P0.0: [0,1,0,0,0] less(0,1)
//! sigma: (P0.0, P1.0) -> T0
//! replay: sizes 3,3 points 9 classes 9
//! replay: (a) equivalence PASS
//! status: VERIFIED
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::age::Signature;
use crate::behavior::{
    check_compatibility, check_identity, check_preservation, check_violation, Behavior, Mode,
    SearchProblem,
};
use crate::cli::problem_file::parse_and_load;
use crate::decide::Problem;
use crate::oracle::replay::{replay, ReplayReport};
use crate::types::TypeRep;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CertError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("certificate rejected: {0}")]
    Rejected(String),
}

pub fn digest(problem_text: &str) -> String {
    hex::encode(Sha256::digest(problem_text.as_bytes()))
}

/// Renders a certificate. `problem_text` is the normalized single-query
/// problem; `replays` is empty in identity mode.
pub fn render(
    problem_text: &str,
    sig: &Signature,
    mode: Mode,
    arity: usize,
    b: &Behavior,
    replays: &[ReplayReport],
) -> String {
    let cod = b.codomain();
    let mut out = String::new();
    out.push_str("certificate v1\n");
    let _ = writeln!(out, "digest sha256:{}", digest(problem_text));
    out.push_str("problem:\n");
    for line in problem_text.lines() {
        let _ = writeln!(out, "| {line}");
    }
    let _ = writeln!(out, "mode: {mode}");
    let _ = writeln!(out, "arity: {arity}");
    let _ = writeln!(out, "n: {}", b.n());
    let consts: Vec<String> = b
        .constants()
        .iter()
        .map(|c| c.encode(sig))
        .collect();
    let _ = writeln!(out, "constants: {}", consts.join(" ; "));
    out.push_str("types:\n");
    for (id, t) in cod.types().iter().enumerate() {
        let _ = writeln!(out, "T{id}: {}", t.encode(sig));
    }
    for i in 0..b.m() {
        for (idx, p) in b.space(i).items().iter().enumerate() {
            let _ = writeln!(out, "P{i}.{idx}: {}", p.full().encode(sig));
        }
    }
    for cell in 0..b.len() {
        let ids = b.cell_ids(cell);
        let args: Vec<String> = ids.iter().enumerate().map(|(i, id)| format!("P{i}.{id}")).collect();
        let v = b.value(cell).expect("complete witness");
        let vid = cod.id_of(v).expect("value in codomain");
        let _ = writeln!(out, "sigma: ({}) -> T{vid}", args.join(", "));
    }
    for r in replays {
        out.push_str(&r.to_string());
    }
    out.push_str("status: VERIFIED\n");
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckSummary {
    pub mode: Mode,
    pub cells: usize,
    pub replays: usize,
}

fn strip<'a>(line: &'a str, prefix: &str, no: usize) -> Result<&'a str, CertError> {
    line.strip_prefix(prefix).ok_or_else(|| CertError::Malformed {
        line: no,
        msg: format!("expected `{}`", prefix.trim_end()),
    })
}

/// Parses a certificate and re-runs every check on it.
pub fn check(text: &str) -> Result<CheckSummary, CertError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut at = 0usize;
    let malformed = |line: usize, msg: &str| CertError::Malformed {
        line: line + 1,
        msg: msg.to_string(),
    };
    let next = |at: &mut usize| -> Result<&str, CertError> {
        let l = lines.get(*at).copied().ok_or_else(|| malformed(*at, "unexpected end of file"))?;
        *at += 1;
        Ok(l)
    };
    if next(&mut at)? != "certificate v1" {
        return Err(malformed(0, "expected `certificate v1`"));
    }
    let recorded = strip(next(&mut at)?, "digest sha256:", at)?.to_string();
    if next(&mut at)? != "problem:" {
        return Err(malformed(at - 1, "expected `problem:`"));
    }
    let mut problem_text = String::new();
    while let Some(l) = lines.get(at).and_then(|l| l.strip_prefix("| ")) {
        problem_text.push_str(l);
        problem_text.push('\n');
        at += 1;
    }
    if problem_text.is_empty() {
        return Err(malformed(at, "empty problem section"));
    }
    if digest(&problem_text) != recorded {
        return Err(CertError::Rejected("problem digest mismatch".into()));
    }
    let loaded = parse_and_load(&problem_text).map_err(|e| CertError::Rejected(format!("embedded problem: {e}")))?;
    if loaded.file.queries.len() != 1 {
        return Err(CertError::Rejected("embedded problem must hold exactly one query".into()));
    }
    let query = loaded.file.queries[0].clone();
    let base = &loaded.base;
    let sig = base.signature();

    let mode_word = strip(next(&mut at)?, "mode: ", at)?;
    let mode = Mode::parse(mode_word).ok_or_else(|| malformed(at - 1, "unknown mode"))?;
    if mode != query.mode {
        return Err(CertError::Rejected("mode differs from the embedded query".into()));
    }
    let arity: usize = strip(next(&mut at)?, "arity: ", at)?
        .parse()
        .map_err(|_| malformed(at - 1, "bad arity"))?;
    let n: usize = strip(next(&mut at)?, "n: ", at)?
        .parse()
        .map_err(|_| malformed(at - 1, "bad n"))?;
    if n != base.n_param() {
        return Err(CertError::Rejected(format!("n is {n}, the base needs {}", base.n_param())));
    }
    let consts_line = strip(next(&mut at)?, "constants: ", at)?;
    let constants: Vec<TypeRep> = consts_line
        .split(" ; ")
        .map(|c| TypeRep::decode(sig, c))
        .collect::<Result<_, _>>()
        .map_err(|e| malformed(at - 1, &e))?;

    let theta: Vec<_> = query
        .from
        .iter()
        .map(|name| loaded.relation(name).expect("resolved names").clone())
        .collect();
    let target = query.target.as_ref().map(|t| loaded.relation(t).expect("resolved").clone());
    match &target {
        Some(t) => {
            if t.arity() != arity {
                return Err(CertError::Rejected("arity differs from the target".into()));
            }
            if let Some(c) = constants.iter().find(|c| !t.contains(c)) {
                return Err(CertError::Rejected(format!(
                    "constant {} is not in the target",
                    c.describe(sig)
                )));
            }
            if mode != Mode::Pp && constants.len() != 1 {
                return Err(CertError::Rejected("ep and ex witnesses are unary".into()));
            }
        }
        None => {
            if constants.len() != 4 || constants.iter().any(|c| c.arity() != 0) {
                return Err(CertError::Rejected("identity witnesses take four empty constants".into()));
            }
        }
    }
    let mut b = Behavior::new_partial(base, constants.clone(), usize::MAX)
        .map_err(|e| CertError::Rejected(e.to_string()))?;

    if next(&mut at)? != "types:" {
        return Err(malformed(at - 1, "expected `types:`"));
    }
    let mut tmap: HashMap<String, u32> = HashMap::new();
    let mut pmap: HashMap<String, u32> = HashMap::new();
    while let Some(l) = lines.get(at) {
        let Some((key, body)) = l.split_once(": ") else { break };
        if key.starts_with('T') && key[1..].chars().all(|c| c.is_ascii_digit()) {
            let t = TypeRep::decode(sig, body).map_err(|e| malformed(at, &e))?;
            let id = b
                .codomain()
                .id_of(&t)
                .ok_or_else(|| CertError::Rejected(format!("{key} is not an {n}-type of the base")))?;
            tmap.insert(key.to_string(), id);
        } else if let Some(rest) = key.strip_prefix('P') {
            let (coord, _) = rest.split_once('.').ok_or_else(|| malformed(at, "bad legend key"))?;
            let coord: usize = coord.parse().map_err(|_| malformed(at, "bad legend key"))?;
            if coord >= b.m() {
                return Err(malformed(at, "coordinate out of range"));
            }
            let t = TypeRep::decode(sig, body).map_err(|e| malformed(at, &e))?;
            let id = b
                .space(coord)
                .id_of_full(&t)
                .ok_or_else(|| CertError::Rejected(format!("{key} is not a pointed type")))?;
            pmap.insert(key.to_string(), id);
        } else {
            break;
        }
        at += 1;
    }
    let mut assigned = vec![false; b.len()];
    while let Some(rest) = lines.get(at).and_then(|l| l.strip_prefix("sigma: (")) {
        let (args, value) = rest.split_once(") -> ").ok_or_else(|| malformed(at, "bad sigma line"))?;
        let ids: Vec<u32> = args
            .split(", ")
            .map(|a| pmap.get(a).copied().ok_or_else(|| malformed(at, &format!("unknown legend key `{a}`"))))
            .collect::<Result<_, _>>()?;
        if ids.len() != b.m() {
            return Err(malformed(at, "wrong number of arguments"));
        }
        let vid = *tmap.get(value).ok_or_else(|| malformed(at, &format!("unknown legend key `{value}`")))?;
        // Legend keys carry the coordinate, so `P1.x` in position 0 is an error.
        for (i, a) in args.split(", ").enumerate() {
            if !a.starts_with(&format!("P{i}.")) {
                return Err(malformed(at, "argument in the wrong coordinate"));
            }
        }
        let cell = b.cell_of_ids(&ids);
        if assigned[cell] {
            return Err(malformed(at, "cell assigned twice"));
        }
        assigned[cell] = true;
        let v = b.codomain().get(vid).clone();
        b.set(cell, &v);
        at += 1;
    }
    if !b.is_complete() {
        return Err(CertError::Rejected("sigma table is incomplete".into()));
    }

    let mut replay_lines = String::new();
    while let Some(l) = lines.get(at).filter(|l| l.starts_with("replay: ")) {
        replay_lines.push_str(l);
        replay_lines.push('\n');
        at += 1;
    }
    if next(&mut at)? != "status: VERIFIED" {
        return Err(malformed(at - 1, "expected `status: VERIFIED`"));
    }
    if at != lines.len() {
        return Err(malformed(at, "trailing content"));
    }

    check_compatibility(&b).map_err(|c| CertError::Rejected(format!("compatibility: {c:?}")))?;
    let sp = SearchProblem {
        base,
        mode,
        constants,
        theta: theta.clone(),
        target: target.clone(),
    };
    if let Some(f) = check_preservation(&b, &sp, usize::MAX).map_err(|e| CertError::Rejected(e.to_string()))? {
        return Err(CertError::Rejected(format!("preservation: {f:?}")));
    }
    let mut replays = 0;
    match target {
        None => {
            check_identity(&b).map_err(|f| CertError::Rejected(format!("identity: {f:?}")))?;
        }
        Some(target) => {
            if !check_violation(&b, &sp).map_err(|e| CertError::Rejected(e.to_string()))? {
                return Err(CertError::Rejected("the constants' image lies in the target".into()));
            }
            let problem = Problem {
                base,
                mode,
                target,
                theta,
            };
            // Re-run every recorded replay and compare the reports verbatim.
            let mut regenerated = String::new();
            for l in replay_lines.lines() {
                let Some(sizes) = l.strip_prefix("replay: sizes ") else { continue };
                let sizes: Vec<usize> = sizes
                    .split_whitespace()
                    .next()
                    .unwrap_or("")
                    .split(',')
                    .map(|s| s.parse().map_err(|_| CertError::Rejected("bad replay sizes".into())))
                    .collect::<Result<_, _>>()?;
                let r = replay(&b, &problem, &sizes);
                if !r.passed() {
                    return Err(CertError::Rejected(format!("replay failed: {}", r.failure().unwrap_or(""))));
                }
                regenerated.push_str(&r.to_string());
                replays += 1;
            }
            if replays == 0 {
                return Err(CertError::Rejected("no replay report".into()));
            }
            if regenerated != replay_lines {
                return Err(CertError::Rejected("replay report differs from the recorded one".into()));
            }
        }
    }
    Ok(CheckSummary {
        mode,
        cells: b.len(),
        replays,
    })
}
