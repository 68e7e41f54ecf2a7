//! The line-oriented problem file format.
//!
//! ```text
//! # comment
//! base builtin dense_linear_order
//! relation Le/2 := x1<x2 | x1=x2
//! relation Lt/2 := x1<x2
//! query pp Le from Lt
//! query identity from Lt
//! option node_budget 1000000
//! ```
//!
//! An inline base replaces the `base builtin` line:
//!
//! ```text
//! base begin
//! signature less/2 order
//! signature edge/2
//! bound on 1: less(0,0)
//! bound on 2:
//! base end
//! ```
//!
//! Bound atoms use 0-based element indices.

use std::time::Duration;

use thiserror::Error;

use crate::age::{builtin_raw, validate_base, BaseStructure, Diagnostic, RawBase, RawBound};
use crate::behavior::{Budget, Mode};
use crate::decide::DecideOptions;
use crate::formula::{FormulaError, RelationDef};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}, column {column}: {source}")]
    Formula {
        line: usize,
        column: usize,
        source: FormulaError,
    },
    #[error("invalid base: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidBase(Vec<Diagnostic>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationLine {
    pub name: String,
    pub arity: usize,
    pub formula: String,
    pub line: usize,
    /// Byte offset of the formula within its line.
    column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryLine {
    pub mode: Mode,
    /// Absent for identity queries.
    pub target: Option<String>,
    pub from: Vec<String>,
    pub line: usize,
}

impl QueryLine {
    pub fn render(&self) -> String {
        let from = self.from.join(", ");
        match &self.target {
            Some(t) => format!("query {} {} from {}", self.mode, t, from),
            None => format!("query identity from {from}"),
        }
        .trim_end()
        .to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub node_budget: Option<u64>,
    pub time_budget_ms: Option<u64>,
    pub cell_budget: usize,
    pub replay_sizes: Option<Vec<usize>>,
    pub oracle_synthesis: bool,
    pub oracle_max_vars: usize,
    pub oracle_max_atoms: usize,
    pub parallel: bool,
    pub unary_first: bool,
    pub arity_cap: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            node_budget: None,
            time_budget_ms: None,
            cell_budget: Budget::default().max_cells,
            replay_sizes: None,
            oracle_synthesis: true,
            oracle_max_vars: 2,
            oracle_max_atoms: 6,
            parallel: false,
            unary_first: true,
            arity_cap: false,
        }
    }
}

impl Options {
    pub fn budget(&self) -> Budget {
        Budget {
            nodes: self.node_budget,
            time: self.time_budget_ms.map(Duration::from_millis),
            max_cells: self.cell_budget,
        }
    }

    /// Decider options for a target of arity `k`.
    pub fn decide_options(&self, k: usize) -> DecideOptions {
        let replay_offsets = match &self.replay_sizes {
            Some(sizes) => sizes.iter().map(|s| s.saturating_sub(k)).collect(),
            None => vec![1, 2],
        };
        DecideOptions {
            budget: self.budget(),
            parallel: self.parallel,
            unary_first: self.unary_first,
            arity_cap: self.arity_cap,
            synthesis: self
                .oracle_synthesis
                .then_some((self.oracle_max_vars, self.oracle_max_atoms)),
            replay_offsets,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("expected a number, got `{v}`"))
        }
        fn flag(v: &str) -> Result<bool, String> {
            match v {
                "true" | "on" | "yes" => Ok(true),
                "false" | "off" | "no" => Ok(false),
                _ => Err(format!("expected true or false, got `{v}`")),
            }
        }
        match key {
            "node_budget" => self.node_budget = Some(num(value)?),
            "time_budget_ms" => self.time_budget_ms = Some(num(value)?),
            "cell_budget" => self.cell_budget = num(value)?,
            "replay_sizes" => {
                let sizes: Result<Vec<usize>, String> = value.split(',').map(|s| num(s.trim())).collect();
                self.replay_sizes = Some(sizes?);
            }
            "oracle_synthesis" => self.oracle_synthesis = flag(value)?,
            "oracle_max_vars" => self.oracle_max_vars = num(value)?,
            "oracle_max_atoms" => self.oracle_max_atoms = num(value)?,
            "parallel" => self.parallel = flag(value)?,
            "unary_first" => self.unary_first = flag(value)?,
            "arity_cap" => self.arity_cap = flag(value)?,
            _ => return Err(format!("unknown option `{key}`")),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum BaseSection {
    Builtin(String),
    Inline(RawBase),
}

/// A syntactically valid problem file, before the base is validated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    base: BaseSection,
    /// The base section as normalized lines, for certificates.
    pub base_lines: Vec<String>,
    pub relations: Vec<RelationLine>,
    pub queries: Vec<QueryLine>,
    pub options: Options,
}

/// A problem file with its base validated and all formulas parsed.
pub struct Loaded {
    pub file: ProblemFile,
    pub base: BaseStructure,
    pub relations: Vec<RelationDef>,
}

impl std::fmt::Debug for Loaded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Loaded")
            .field("file", &self.file)
            .field("relations", &self.relations)
            .finish_non_exhaustive()
    }
}

impl Loaded {
    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.relations.iter().find(|r| r.name() == name)
    }

    /// Normalized problem text for one query: base, relations, query.
    pub fn query_text(&self, q: &QueryLine) -> String {
        let mut lines = self.file.base_lines.clone();
        for r in &self.file.relations {
            lines.push(format!("relation {}/{} := {}", r.name, r.arity, r.formula));
        }
        lines.push(q.render());
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `Name/arity`.
fn name_arity(s: &str) -> Option<(String, usize)> {
    let (name, arity) = s.split_once('/')?;
    let arity = arity.trim().parse().ok()?;
    let name = name.trim();
    is_ident(name).then(|| (name.to_string(), arity))
}

/// `sym(0,1)` atoms separated by whitespace.
fn bound_atoms(text: &str) -> Result<Vec<(String, Vec<usize>)>, String> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| format!("expected `(` in `{rest}`"))?;
        let close = rest.find(')').ok_or_else(|| format!("expected `)` in `{rest}`"))?;
        if close < open {
            return Err(format!("malformed atom `{rest}`"));
        }
        let name = rest[..open].trim();
        if !is_ident(name) {
            return Err(format!("bad symbol name `{name}`"));
        }
        let args: Result<Vec<usize>, String> = rest[open + 1..close]
            .split(',')
            .map(|a| a.trim().parse().map_err(|_| format!("bad element `{}`", a.trim())))
            .collect();
        out.push((name.to_string(), args?));
        rest = rest[close + 1..].trim_start();
    }
    Ok(out)
}

pub fn parse_file(text: &str) -> Result<ProblemFile, FileError> {
    let mut base: Option<BaseSection> = None;
    let mut base_lines = Vec::new();
    let mut inline: Option<RawBase> = None;
    let mut relations: Vec<RelationLine> = Vec::new();
    let mut queries = Vec::new();
    let mut options = Options::default();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let err = |msg: String| FileError::Syntax { line, msg };
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (head, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
        let rest = rest.trim();
        if let Some(raw_base) = inline.as_mut() {
            base_lines.push(trimmed.split_whitespace().collect::<Vec<_>>().join(" "));
            match head {
                "signature" => {
                    let mut words = rest.split_whitespace();
                    let spec = words.next().ok_or_else(|| err("expected Name/arity".into()))?;
                    let (name, arity) =
                        name_arity(spec).ok_or_else(|| err(format!("expected Name/arity, got `{spec}`")))?;
                    match words.next() {
                        None => {}
                        Some("order") => {
                            if !raw_base.order_symbol.is_empty() {
                                return Err(err("two order symbols".into()));
                            }
                            raw_base.order_symbol = name.clone();
                        }
                        Some(w) => return Err(err(format!("unexpected `{w}`"))),
                    }
                    if let Some(w) = words.next() {
                        return Err(err(format!("unexpected `{w}`")));
                    }
                    raw_base.symbols.push((name, arity));
                }
                "bound" => {
                    let spec = rest
                        .strip_prefix("on")
                        .ok_or_else(|| err("expected `bound on <n>:`".into()))?;
                    let (size, atoms) = spec
                        .split_once(':')
                        .ok_or_else(|| err("expected `:` after the bound size".into()))?;
                    let size = size
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad bound size `{}`", size.trim())))?;
                    let atoms = bound_atoms(atoms).map_err(err)?;
                    raw_base.bounds.push(RawBound { size, atoms });
                }
                "base" if rest == "end" => {
                    if raw_base.order_symbol.is_empty() {
                        return Err(err("inline base declares no order symbol".into()));
                    }
                    base = Some(BaseSection::Inline(inline.take().expect("inside base")));
                }
                _ => return Err(err(format!("unexpected `{head}` inside base section"))),
            }
            continue;
        }
        match head {
            "base" => {
                if base.is_some() {
                    return Err(err("second base section".into()));
                }
                base_lines.push(format!("base {}", rest.split_whitespace().collect::<Vec<_>>().join(" ")));
                let mut words = rest.split_whitespace();
                match (words.next(), words.next(), words.next()) {
                    (Some("builtin"), Some(name), None) => base = Some(BaseSection::Builtin(name.to_string())),
                    (Some("begin"), None, None) => {
                        inline = Some(RawBase {
                            name: None,
                            symbols: Vec::new(),
                            order_symbol: String::new(),
                            bounds: Vec::new(),
                        })
                    }
                    _ => return Err(err("expected `base builtin <name>` or `base begin`".into())),
                }
            }
            "relation" => {
                let (spec, formula) = rest
                    .split_once(":=")
                    .ok_or_else(|| err("expected `relation Name/arity := formula`".into()))?;
                let (name, arity) = name_arity(spec.trim())
                    .ok_or_else(|| err(format!("expected Name/arity, got `{}`", spec.trim())))?;
                if relations.iter().any(|r| r.name == name) {
                    return Err(err(format!("relation `{name}` defined twice")));
                }
                let formula_raw = &content[content.find(":=").expect("checked") + 2..];
                let lead = formula_raw.len() - formula_raw.trim_start().len();
                let column = content.find(":=").expect("checked") + 2 + lead;
                relations.push(RelationLine {
                    name,
                    arity,
                    formula: formula.trim().to_string(),
                    line,
                    column,
                });
            }
            "query" => {
                let (mode_word, after) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let mode = Mode::parse(mode_word)
                    .ok_or_else(|| err(format!("unknown mode `{mode_word}` (pp, ep, ex, identity)")))?;
                let after = after.trim();
                let (target, list) = if mode == Mode::Identity {
                    let list = if after.is_empty() {
                        ""
                    } else {
                        after
                            .strip_prefix("from")
                            .ok_or_else(|| err("expected `from`".into()))?
                    };
                    (None, list)
                } else {
                    let (t, after) = after
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| err("expected `<Target> from <Name>, ..`".into()))?;
                    let list = after
                        .trim()
                        .strip_prefix("from")
                        .ok_or_else(|| err("expected `from`".into()))?;
                    (Some(t.to_string()), list)
                };
                let from: Vec<String> = list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
                for name in target.iter().chain(&from) {
                    if !is_ident(name) {
                        return Err(err(format!("bad relation name `{name}`")));
                    }
                }
                queries.push(QueryLine {
                    mode,
                    target,
                    from,
                    line,
                });
            }
            "option" => {
                let (key, value) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err("expected `option <key> <value>`".into()))?;
                options.set(key, value.trim()).map_err(err)?;
            }
            _ => return Err(err(format!("unknown directive `{head}`"))),
        }
    }
    if inline.is_some() {
        return Err(FileError::Syntax {
            line: last_line,
            msg: "missing `base end`".into(),
        });
    }
    let base = base.ok_or(FileError::Syntax {
        line: last_line,
        msg: "no base section".into(),
    })?;
    if queries.is_empty() {
        return Err(FileError::Syntax {
            line: last_line,
            msg: "no query".into(),
        });
    }
    for q in &queries {
        for name in q.target.iter().chain(&q.from) {
            if !relations.iter().any(|r| &r.name == name) {
                return Err(FileError::Syntax {
                    line: q.line,
                    msg: format!("unknown relation `{name}`"),
                });
            }
        }
    }
    Ok(ProblemFile {
        base,
        base_lines,
        relations,
        queries,
        options,
    })
}

/// Validates the base and parses every relation formula.
pub fn load(file: ProblemFile) -> Result<Loaded, FileError> {
    let raw = match &file.base {
        BaseSection::Builtin(name) => builtin_raw(name).ok_or_else(|| {
            FileError::InvalidBase(vec![Diagnostic::MalformedBound {
                index: 0,
                reason: format!("unknown builtin `{name}`"),
            }])
        })?,
        BaseSection::Inline(raw) => raw.clone(),
    };
    let base = validate_base(&raw).map_err(FileError::InvalidBase)?;
    let mut relations = Vec::with_capacity(file.relations.len());
    for r in &file.relations {
        let rel = RelationDef::parse(r.name.clone(), r.arity, &r.formula, &base).map_err(|source| {
            FileError::Formula {
                line: r.line,
                column: r.column + source.position() + 1,
                source,
            }
        })?;
        relations.push(rel);
    }
    Ok(Loaded { file, base, relations })
}

pub fn parse_and_load(text: &str) -> Result<Loaded, FileError> {
    load(parse_file(text)?)
}
