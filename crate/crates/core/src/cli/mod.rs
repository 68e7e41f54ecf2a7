//! Command-line front end.

pub mod certificate;
pub mod problem_file;
pub mod run;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::age::{builtin, BUILTIN_NAMES};

#[derive(Debug, Parser)]
#[command(name = "ppdef", version, about = "Decide pp, ep and ex definability over reducts of finitely bounded ordered homogeneous structures")]
#[command(group(clap::ArgGroup::new("action").required(true).args(["file", "check_certificate", "list_builtins"])))]
pub struct Args {
    /// Problem file to run.
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
    /// Directory for witness certificates (one per answered query with a witness).
    #[arg(long, value_name = "DIR", requires = "file")]
    pub emit_certificates: Option<PathBuf>,
    /// Re-check a certificate file.
    #[arg(long, value_name = "PATH")]
    pub check_certificate: Option<PathBuf>,
    /// List the built-in base structures.
    #[arg(long)]
    pub list_builtins: bool,
}

/// Runs the tool and returns the exit code.
pub fn main_with(args: Args) -> i32 {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    if args.list_builtins {
        for name in BUILTIN_NAMES {
            let b = builtin(name).expect("builtin");
            let sig = b.signature();
            let symbols: Vec<String> = sig
                .symbols()
                .iter()
                .map(|s| format!("{}/{}", s.name, s.arity))
                .collect();
            let _ = writeln!(
                stdout,
                "{name}: symbols {} order {} bounds {} s {} n {}",
                symbols.join(","),
                sig.order_name(),
                b.bounds().len(),
                b.s(),
                b.n_param()
            );
        }
        return run::EXIT_OK;
    }
    let (path, is_cert) = match (&args.file, &args.check_certificate) {
        (Some(p), _) => (p, false),
        (None, Some(p)) => (p, true),
        (None, None) => unreachable!("clap requires an action"),
    };
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: reading {}: {e}", path.display());
            return run::EXIT_PARSE;
        }
    };
    let report = if is_cert {
        run::check_text(&text)
    } else {
        run::run_text(&text, args.emit_certificates.as_deref())
    };
    let _ = stdout.write_all(report.stdout.as_bytes());
    let _ = stderr.write_all(report.stderr.as_bytes());
    report.exit
}
