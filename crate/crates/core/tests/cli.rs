use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ppdef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppdef")).args(args).output().expect("binary runs")
}

fn problems(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

#[test]
fn lists_builtins() {
    let out = ppdef(&["--list-builtins"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("dense_linear_order: symbols less/2"), "{stdout}");
    assert!(stdout.contains("ordered_random_graph: symbols less/2,edge/2"), "{stdout}");
}

#[test]
fn requires_an_action() {
    let out = ppdef(&[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dense_order_suite_verdicts() {
    let out = ppdef(&["--file", problems("dlo_suite.txt").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let verdicts: Vec<String> = text(&out.stdout)
        .lines()
        .map(|l| l.rsplit("=> ").next().unwrap().to_string())
        .collect();
    assert_eq!(
        verdicts,
        [
            "NOT-DEFINABLE",
            "DEFINABLE",
            "DEFINABLE",
            "NOT-DEFINABLE",
            "DEFINABLE",
            "DEFINABLE",
            "NOT-DEFINABLE",
            "DEFINABLE",
            "DEFINABLE",
        ]
    );
}

#[test]
fn emitted_certificates_check_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppdef(&[
        "--file",
        problems("dlo_suite.txt").to_str().unwrap(),
        "--emit-certificates",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut certs: Vec<PathBuf> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    certs.sort();
    let names: Vec<String> = certs.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["query-1.cert", "query-4.cert", "query-7.cert"]);
    for c in &certs {
        let out = ppdef(&["--check-certificate", c.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
        assert!(text(&out.stdout).ends_with("=> VERIFIED\n"));
    }

    // Change one table entry: the certificate no longer matches its checks.
    let original = fs::read_to_string(&certs[0]).unwrap();
    let line = original.lines().find(|l| l.starts_with("sigma:")).unwrap();
    let (head, value) = line.rsplit_once("-> T").unwrap();
    let other = if value == "0" { "1" } else { "0" };
    let tampered = original.replacen(line, &format!("{head}-> T{other}"), 1);
    let bad = dir.path().join("tampered.cert");
    fs::write(&bad, tampered).unwrap();
    let out = ppdef(&["--check-certificate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("REJECTED"));

    // Cut the file short, inside the problem section and after it.
    let keep = original.lines().position(|l| l.starts_with("mode:")).unwrap() + 1;
    for cut in [3, keep] {
        let short: String = original.lines().take(cut).map(|l| format!("{l}\n")).collect();
        fs::write(&bad, short).unwrap();
        let out = ppdef(&["--check-certificate", bad.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "cut at {cut}");
        assert!(text(&out.stdout).contains("MALFORMED"));
    }
}

#[test]
fn identity_queries() {
    let out = ppdef(&["--file", problems("identity.txt").to_str().unwrap()]);
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2, "{stdout}");
    assert_eq!(lines[0], "QUERY 1: identity from {Lt} => NO-IDENTITY");
    assert_eq!(lines[1], "QUERY 2: identity from {} => IDENTITY-HOLDS");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    };
    let parse = write("parse.txt", "base builtin dense_linear_order\nrelation R/2 := x1 <\nquery pp R from R\n");
    let out = ppdef(&["--file", parse.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 2"));

    let base = write(
        "base.txt",
        "base begin\nsignature less/2 order\nbound on 1: less(0,0)\nbase end\nrelation R/1 := x1=x1\nquery pp R from R\n",
    );
    let out = ppdef(&["--file", base.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));

    let limit = write(
        "limit.txt",
        "base builtin dense_linear_order\nrelation Ne/2 := !(x1=x2)\nrelation Eq/2 := x1=x2\nquery ep Ne from Eq\noption node_budget 0\n",
    );
    let out = ppdef(&["--file", limit.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(text(&out.stdout), "QUERY 1: ep Ne from {Eq} => INCONCLUSIVE\n");

    let missing = dir.path().join("absent.txt");
    let out = ppdef(&["--file", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
