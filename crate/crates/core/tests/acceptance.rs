//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails. Thresholds are pinned below.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{dlo, random_options, random_problems, rel, transformed};
use ppdef::age::BaseStructure;
use ppdef::behavior::{
    check_compatibility, check_identity as identity_holds, check_preservation, check_violation, Budget, Mode,
    SearchProblem,
};
use ppdef::cli::certificate;
use ppdef::cli::problem_file::parse_and_load;
use ppdef::cli::run::{check_text, run_query, run_text, EXIT_OK};
use ppdef::decide::{check_identity, decide, Decision, DecideError, DecideOptions, IdentityOutcome, Problem, Verdict};
use ppdef::oracle::{brute_partial_witness, brute_search, pp_semantics, replay, synthesize_pp, verify_partial_witness, BruteOutcome};
use ppdef::types::enumerate_types;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TYPE_COUNTS: [usize; 4] = [1, 3, 13, 75];
const TYPE_COUNT_LIMIT: Duration = Duration::from_secs(10);
const SUITE_QUERY_LIMIT: Duration = Duration::from_secs(120);
const IDENTITY_LIMIT: Duration = Duration::from_secs(600);
const RANDOM_SEED: u64 = 7;
const RANDOM_COUNT: usize = 200;
const INVARIANCE_COUNT: usize = 50;
const INVARIANCE_SEED: u64 = 11;
const SYNTH_VARS: usize = 2;
const SYNTH_ATOMS: usize = 6;
const BRUTE_GRID: usize = 2;
const BRUTE_NODES: u64 = 200_000;
/// Grids have one coordinate per target type in pp mode; beyond this many
/// the grid points are too many to enumerate.
const BRUTE_MAX_COORDS: usize = 4;

type Outcome = (bool, String);

// ---------------------------------------------------------------------------
// Criterion 1: type counts against generate-and-filter.

/// Counts n-types of the dense order by brute force: every binary relation
/// on r ≤ n points is generated and kept when it avoids the four order
/// bounds; the surviving structures contribute the order-rank vectors of
/// their surjective n-tuples.
fn filtered_type_count(n: usize) -> usize {
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for r in 1..=n {
        for bits in 0u32..(1 << (r * r)) {
            let less = |a: usize, b: usize| bits >> (a * r + b) & 1 == 1;
            let loop_free = (0..r).all(|a| !less(a, a));
            let pairs_ok = (0..r).all(|a| (0..r).all(|b| a == b || less(a, b) != less(b, a)));
            let no_cycle =
                (0..r).all(|a| (0..r).all(|b| (0..r).all(|c| !(less(a, b) && less(b, c) && less(c, a)))));
            if !(loop_free && pairs_ok && no_cycle) {
                continue;
            }
            let rank: Vec<usize> = (0..r).map(|a| (0..r).filter(|&b| less(b, a)).count()).collect();
            let mut tuple = vec![0usize; n];
            loop {
                let used: BTreeSet<usize> = tuple.iter().copied().collect();
                if used.len() == r {
                    seen.insert(tuple.iter().map(|&a| rank[a]).collect());
                }
                let mut i = 0;
                while i < n {
                    tuple[i] += 1;
                    if tuple[i] < r {
                        break;
                    }
                    tuple[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
    }
    seen.len()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut counts = Vec::new();
    let mut ok = true;
    for n in 1..=4 {
        let engine = enumerate_types(dlo(), n).expect("dense order types").len();
        let oracle = filtered_type_count(n);
        ok &= engine == oracle && oracle == TYPE_COUNTS[n - 1];
        counts.push(format!("n={n}: {engine}/{oracle}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < TYPE_COUNT_LIMIT;
    (ok, format!("engine/oracle {}; {:.2}s", counts.join(", "), elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// Criteria 2 and 3: the known-answer suite.

struct Pair {
    target: (&'static str, usize),
    theta: (&'static str, usize),
}

const LE_LT: Pair = Pair {
    target: ("x1<x2 | x1=x2", 2),
    theta: ("x1<x2", 2),
};
const BETW_LT: Pair = Pair {
    target: ("(x1<x2 & x2<x3) | (x3<x2 & x2<x1)", 3),
    theta: ("x1<x2", 2),
};
const LT_CHAIN: Pair = Pair {
    target: ("x1<x2", 2),
    theta: ("x1<x2 & x2<x3", 3),
};
const NE_EQ: Pair = Pair {
    target: ("!(x1=x2)", 2),
    theta: ("x1=x2", 2),
};
const NEVER_LT: Pair = Pair {
    target: ("x1<x1", 1),
    theta: ("x1<x2", 2),
};
const SUITE: [&Pair; 5] = [&LE_LT, &BETW_LT, &LT_CHAIN, &NE_EQ, &NEVER_LT];

fn suite_problem(pair: &Pair, mode: Mode) -> Problem<'static> {
    common::problem(
        dlo(),
        mode,
        rel(dlo(), "R0", pair.target.1, pair.target.0),
        vec![rel(dlo(), "R1", pair.theta.1, pair.theta.0)],
    )
}

fn suite_file(pair: &Pair, mode: Mode) -> String {
    format!(
        "base builtin dense_linear_order\nrelation R0/{} := {}\nrelation R1/{} := {}\nquery {mode} R0 from R1\n",
        pair.target.1, pair.target.0, pair.theta.1, pair.theta.0
    )
}

/// Runs one suite query through the problem-file front end and checks its
/// certificate, if any. Returns the verdict word and certificate status.
fn suite_query(pair: &Pair, mode: Mode) -> (String, Option<bool>, Duration) {
    let start = Instant::now();
    let loaded = parse_and_load(&suite_file(pair, mode)).expect("suite file loads");
    let q = &loaded.file.queries[0];
    let report = run_query(&loaded, 1, q);
    let elapsed = start.elapsed();
    let word = report.line.rsplit("=> ").next().unwrap_or("").to_string();
    let cert = report.certificate.as_ref().map(|c| {
        let checked = check_text(c);
        certificate::check(c).is_ok() && checked.exit == EXIT_OK && checked.stdout.ends_with("=> VERIFIED\n")
    });
    (word, cert, elapsed)
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    let mut expect = |label: &str, pair: &Pair, mode: Mode, want: &str, parts: &mut Vec<String>| {
        let (word, cert, t) = suite_query(pair, mode);
        slowest = slowest.max(t);
        let cert_ok = match (want, cert) {
            ("NOT-DEFINABLE", Some(c)) => c,
            ("NOT-DEFINABLE", None) => false,
            _ => true,
        };
        let pass = word == want && cert_ok && t < SUITE_QUERY_LIMIT;
        ok &= pass;
        parts.push(format!("{label} {mode} {word}{}", if pass { "" } else { " [x]" }));
    };
    expect("(a)", &LE_LT, Mode::Pp, "NOT-DEFINABLE", &mut parts);
    expect("(b)", &LE_LT, Mode::Ep, "DEFINABLE", &mut parts);
    expect("(b)", &LE_LT, Mode::Ex, "DEFINABLE", &mut parts);
    expect("(c)", &BETW_LT, Mode::Pp, "NOT-DEFINABLE", &mut parts);
    expect("(d)", &BETW_LT, Mode::Ep, "DEFINABLE", &mut parts);
    expect("(e)", &LT_CHAIN, Mode::Pp, "DEFINABLE", &mut parts);
    expect("(f)", &NE_EQ, Mode::Ep, "NOT-DEFINABLE", &mut parts);
    expect("(f)", &NE_EQ, Mode::Ex, "DEFINABLE", &mut parts);
    expect("(g)", &NEVER_LT, Mode::Pp, "DEFINABLE", &mut parts);

    // (c): a finite table on 3-element grids.
    let betw = suite_problem(&BETW_LT, Mode::Pp);
    let brute = brute_partial_witness(&betw, 3, BRUTE_NODES);
    let brute_ok = brute
        .as_ref()
        .is_some_and(|w| verify_partial_witness(w, &betw) && w.grids.iter().all(|g| g.size() == 3));
    ok &= brute_ok;
    parts.push(format!("(c) grid table {}", if brute_ok { "found" } else { "missing [x]" }));

    // (e): a one-existential definition with exactly the right semantics.
    let chain = suite_problem(&LT_CHAIN, Mode::Pp);
    let synth = synthesize_pp(&chain.target, &chain.theta, dlo(), SYNTH_VARS, SYNTH_ATOMS);
    let synth_ok = synth
        .as_ref()
        .is_some_and(|f| f.exists == 1 && &pp_semantics(f, &chain.theta, dlo()) == chain.target.type_set());
    ok &= synth_ok;
    parts.push(match &synth {
        Some(f) if synth_ok => format!("(e) {}", f.display(&chain.theta, dlo())),
        _ => "(e) synthesis [x]".into(),
    });
    parts.push(format!("slowest {:.2}s", slowest.as_secs_f64()));
    (ok, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let options = DecideOptions::default();
    let mut violations = 0;
    let mut rows = Vec::new();
    for pair in SUITE {
        let v: Vec<Verdict> = [Mode::Pp, Mode::Ep, Mode::Ex]
            .iter()
            .map(|&m| decide(&suite_problem(pair, m), &options).expect("suite decides").verdict)
            .collect();
        let def = |i: usize| v[i] == Verdict::Definable;
        if (def(0) && !def(1)) || (def(1) && !def(2)) {
            violations += 1;
        }
        let short = |x: &Verdict| match x {
            Verdict::Definable => "D",
            Verdict::NotDefinable => "N",
            Verdict::Inconclusive(_) => "?",
        };
        rows.push(v.iter().map(short).collect::<String>());
    }
    (violations == 0, format!("pp/ep/ex {}; {violations} violations", rows.join(" ")))
}

// ---------------------------------------------------------------------------
// Criteria 4, 5 and 8: randomized problems.

fn certify_independently(d: &Decision, p: &Problem<'_>) -> Result<(), String> {
    let w = d.witness.as_ref().ok_or("no witness")?;
    check_compatibility(w).map_err(|c| format!("compatibility {c:?}"))?;
    let sp = SearchProblem {
        base: p.base,
        mode: p.mode,
        constants: w.constants().to_vec(),
        theta: p.theta.clone(),
        target: Some(p.target.clone()),
    };
    match check_violation(w, &sp) {
        Ok(true) => {}
        other => return Err(format!("violation {other:?}")),
    }
    match check_preservation(w, &sp, usize::MAX) {
        Ok(None) => {}
        other => return Err(format!("preservation {other:?}")),
    }
    let k = p.target.arity();
    for size in [k + 1, k + 2] {
        let r = replay(w, p, &vec![size; w.m()]);
        if let Some(check) = r.failure() {
            return Err(format!("replay {check} at size {size}"));
        }
    }
    Ok(())
}

fn tally(ds: &[Result<Decision, DecideError>]) -> String {
    let (mut def, mut not, mut inc, mut err) = (0, 0, 0, 0);
    for d in ds {
        match d.as_ref().map(|d| &d.verdict) {
            Ok(Verdict::Definable) => def += 1,
            Ok(Verdict::NotDefinable) => not += 1,
            Ok(Verdict::Inconclusive(_)) => inc += 1,
            Err(_) => err += 1,
        }
    }
    format!("{def} definable, {not} not definable, {inc} inconclusive, {err} errors")
}

struct Random {
    problems: Vec<Problem<'static>>,
    decisions: Vec<Result<Decision, DecideError>>,
}

impl Random {
    fn new() -> Self {
        let problems = random_problems(RANDOM_SEED, RANDOM_COUNT);
        let decisions = problems.iter().map(|p| decide(p, &random_options())).collect();
        Random { problems, decisions }
    }

    fn base_tally(&self, base: &BaseStructure) -> String {
        let ds: Vec<_> = self
            .problems
            .iter()
            .zip(&self.decisions)
            .filter(|(p, _)| std::ptr::eq(p.base, base))
            .map(|(_, d)| d.clone())
            .collect();
        tally(&ds)
    }
}

fn criterion_4(random: &Random) -> Outcome {
    let mut failures = Vec::new();
    let mut suite_certs = 0;
    for pair in SUITE {
        for mode in [Mode::Pp, Mode::Ep, Mode::Ex] {
            let (word, cert, _) = suite_query(pair, mode);
            if word == "NOT-DEFINABLE" {
                suite_certs += 1;
                if cert != Some(true) {
                    failures.push(format!("suite {} {mode}", pair.target.0));
                }
            }
        }
    }
    let mut random_certs = 0;
    for (i, (p, d)) in random.problems.iter().zip(&random.decisions).enumerate() {
        match d {
            Err(e) => failures.push(format!("random #{i}: {e}")),
            Ok(d) if d.verdict == Verdict::NotDefinable => {
                random_certs += 1;
                if let Err(e) = certify_independently(d, p) {
                    failures.push(format!("random #{i}: {e}"));
                }
            }
            Ok(_) => {}
        }
    }
    let detail = format!(
        "{suite_certs} suite and {random_certs} random witnesses, {} rejected; dense order: {}; random graph: {}",
        failures.len(),
        random.base_tally(dlo()),
        random.base_tally(common::graph()),
    );
    let ok = failures.is_empty() && random_certs > 0;
    (ok, if ok { detail } else { format!("{detail}; {}", failures.join(", ")) })
}

fn criterion_5(random: &Random) -> Outcome {
    let (mut synth_found, mut synth_open, mut brute_found, mut brute_budget) = (0, 0, 0, 0);
    let mut brute_skipped = 0;
    let mut small_grid_only = 0;
    let mut contradictions = Vec::new();
    for (i, (p, d)) in random.problems.iter().zip(&random.decisions).enumerate() {
        let Ok(d) = d else { continue };
        if let Some(f) = synthesize_pp(&p.target, &p.theta, p.base, SYNTH_VARS, SYNTH_ATOMS) {
            synth_found += 1;
            if &pp_semantics(&f, &p.theta, p.base) != p.target.type_set() {
                contradictions.push(format!("#{i}: synthesized formula has other semantics"));
            }
            match d.verdict {
                Verdict::Definable => {}
                Verdict::NotDefinable => contradictions.push(format!("#{i}: formula found but not definable")),
                Verdict::Inconclusive(_) => synth_open += 1,
            }
        }
        if p.target.type_set().len() > BRUTE_MAX_COORDS {
            brute_skipped += 1;
            continue;
        }
        // A witness restricts to a table on every grid, so a grid without
        // one refutes it.
        match brute_search(p, BRUTE_GRID, BRUTE_NODES) {
            BruteOutcome::Found(w) => {
                brute_found += 1;
                if !verify_partial_witness(&w, p) {
                    contradictions.push(format!("#{i}: grid table fails its own check"));
                }
                if d.verdict == Verdict::Definable {
                    small_grid_only += 1;
                }
            }
            BruteOutcome::NoTable => {
                if d.verdict == Verdict::NotDefinable {
                    contradictions.push(format!("#{i}: witness found but some grid has no table"));
                }
            }
            BruteOutcome::Budget => brute_budget += 1,
        }
    }
    let detail = format!(
        "{synth_found} formulas ({synth_open} on inconclusive problems), {brute_found} grid tables \
         ({small_grid_only} on definable problems, {brute_budget} budget-outs, {brute_skipped} too wide); \
         {} contradictions",
        contradictions.len()
    );
    let ok = contradictions.is_empty();
    (ok, if ok { detail } else { format!("{detail}: {}", contradictions.join(", ")) })
}

fn criterion_8(random: &Random) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(INVARIANCE_SEED);
    let (mut compared, mut skipped) = (0, 0);
    let mut mismatches = Vec::new();
    for (i, (p, d)) in random.problems.iter().zip(&random.decisions).take(INVARIANCE_COUNT).enumerate() {
        let q = transformed(p, &mut rng);
        let e = decide(&q, &random_options());
        match (d, &e) {
            (Ok(a), Ok(b)) => match (&a.verdict, &b.verdict) {
                (Verdict::Inconclusive(_), _) | (_, Verdict::Inconclusive(_)) => skipped += 1,
                (x, y) if x == y => compared += 1,
                (x, y) => mismatches.push(format!("#{i}: {} vs {}", x.word(), y.word())),
            },
            _ => mismatches.push(format!("#{i}: decision error")),
        }
    }
    let detail = format!(
        "{compared} conclusive pairs agree, {skipped} inconclusive skipped, {} mismatches",
        mismatches.len()
    );
    let ok = mismatches.is_empty();
    (ok, if ok { detail } else { format!("{detail}: {}", mismatches.join(", ")) })
}

// ---------------------------------------------------------------------------
// Criterion 6: identity over the order.

/// Sign tables on strict 4-tuples: an antisymmetric map from {<,>}^4 to
/// {<,>,=} (coded -1, 1, 0 for <, >, =). Returns how many are monotone on
/// the all-< tuple and send every profile of four linear orders of three
/// points to a weak order, and how many of those also satisfy the identity
/// on pairs.
fn sign_table_counts() -> (usize, usize) {
    let sign = |x: usize, table: &[i8; 16]| table[x];
    // Coordinate i of x is `<` iff bit i is set.
    let reps: Vec<usize> = (0..16).filter(|&x| x < 15 - x).collect();
    let orders: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let weak_orders: Vec<[i8; 3]> = {
        let mut out = Vec::new();
        for a in 0..3i8 {
            for b in 0..3i8 {
                for c in 0..3i8 {
                    let ranks = [a, b, c];
                    let used: BTreeSet<i8> = ranks.iter().copied().collect();
                    if used.iter().copied().eq(0..used.len() as i8) {
                        // Relations on (0,1), (1,2), (0,2).
                        let rel = |x: i8, y: i8| (x - y).signum();
                        out.push([rel(a, b), rel(b, c), rel(a, c)]);
                    }
                }
            }
        }
        out
    };
    let pair_code = |profile: &[[usize; 3]; 4], u: usize, v: usize| -> usize {
        (0..4).filter(|&i| profile[i][u] < profile[i][v]).map(|i| 1 << i).sum()
    };
    let mut profiles = Vec::new();
    for a in &orders {
        for b in &orders {
            for c in &orders {
                for d in &orders {
                    let p = [*a, *b, *c, *d];
                    profiles.push([pair_code(&p, 0, 1), pair_code(&p, 1, 2), pair_code(&p, 0, 2)]);
                }
            }
        }
    }
    let (mut base, mut with_identity) = (0, 0);
    for code in 0..3usize.pow(reps.len() as u32) {
        let mut table = [0i8; 16];
        let mut c = code;
        for &x in &reps {
            let v = (c % 3) as i8 - 1;
            c /= 3;
            table[x] = v;
            table[15 - x] = -v;
        }
        if sign(15, &table) != -1 {
            continue;
        }
        let realizable = profiles.iter().all(|pr| {
            let got = [sign(pr[0], &table), sign(pr[1], &table), sign(pr[2], &table)];
            weak_orders.contains(&got)
        });
        if !realizable {
            continue;
        }
        base += 1;
        let bit = |lt: bool, i: usize| if lt { 1usize << i } else { 0 };
        let identity = (0..8).all(|t| {
            let (t1, t2, t3) = (t & 1 == 1, t & 2 == 2, t & 4 == 4);
            let left = bit(t1, 0) | bit(t2, 1) | bit(t3, 2) | bit(t3, 3);
            let right = bit(t2, 0) | bit(t3, 1) | bit(t1, 2) | bit(t2, 3);
            sign(left, &table) == sign(right, &table)
        });
        if identity {
            with_identity += 1;
        }
    }
    (base, with_identity)
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let lt = rel(dlo(), "Lt", 2, "x1<x2");
    let budget = Budget {
        nodes: None,
        time: Some(IDENTITY_LIMIT),
        max_cells: Budget::default().max_cells,
    };
    let (outcome, stats) = check_identity(dlo(), &[lt], &budget);
    let elapsed = start.elapsed();
    let (tables, with_identity) = sign_table_counts();
    let oracle = format!("sign-table oracle: {tables} order-preserving tables, {with_identity} with the identity");
    match outcome {
        IdentityOutcome::Holds(b) => {
            let verified = identity_holds(&b).is_ok();
            (
                verified && elapsed < IDENTITY_LIMIT,
                format!("behavior found, post-verification {}; {:.1}s", if verified { "passed" } else { "failed" }, elapsed.as_secs_f64()),
            )
        }
        other => (
            false,
            format!(
                "search {} after {} nodes over {} cells in {:.1}s; {oracle}",
                other.word(),
                stats.nodes,
                stats.cells,
                elapsed.as_secs_f64()
            ),
        ),
    }
}

// ---------------------------------------------------------------------------
// Criterion 7: determinism of whole runs.

fn snapshot(text: &str, dir: &Path) -> (String, String, Vec<(String, Vec<u8>)>) {
    let report = run_text(text, Some(dir));
    let stderr = report.stderr.replace(&dir.display().to_string(), "<dir>");
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    (report.stdout, stderr, files)
}

fn criterion_7() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems");
    let mut names: Vec<_> = fs::read_dir(&root)
        .expect("problems directory")
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    names.sort();
    let mut differing = Vec::new();
    let mut certs = 0;
    for path in &names {
        let text = fs::read_to_string(path).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let first = snapshot(&text, a.path());
        let second = snapshot(&text, b.path());
        certs += first.2.len();
        if first != second {
            differing.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    (
        differing.is_empty() && !names.is_empty(),
        format!("{} files, {certs} certificates, {} differ {:?}", names.len(), differing.len(), differing),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut line = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n}: {} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    line(1, "type-space counts", &mut criterion_1);
    line(2, "known-answer suite", &mut criterion_2);
    line(3, "mode monotonicity", &mut criterion_3);
    let random = Random::new();
    line(4, "witness soundness", &mut || criterion_4(&random));
    line(5, "oracle consistency", &mut || criterion_5(&random));
    line(6, "identity on the order", &mut criterion_6);
    line(7, "determinism", &mut criterion_7);
    line(8, "invariance", &mut || criterion_8(&random));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
