//! Behaviors: maps from tuples of pointed `n`-types to `n`-types, the finite
//! stand-ins for canonical functions, and the search for them.

mod checks;
mod search;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::age::BaseStructure;
use crate::formula::RelationDef;
use crate::pointed::{pointed_table, PointedError, PointedSpace, PointedType};
use crate::types::{assemble, type_table, AssembleError, TypeRep, TypeTable};

pub use checks::{
    check_compatibility, check_identity, check_preservation, check_violation, CheckError,
    CompatConflict, IdentityFailure, PreservationFailure,
};
pub use search::{search, SearchOutcome, SearchStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Pp,
    Ep,
    Ex,
    Identity,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Pp => "pp",
            Mode::Ep => "ep",
            Mode::Ex => "ex",
            Mode::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "pp" => Some(Mode::Pp),
            "ep" => Some(Mode::Ep),
            "ex" => Some(Mode::Ex),
            "identity" => Some(Mode::Identity),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resource limits for one search. `None` means unlimited.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub nodes: Option<u64>,
    pub time: Option<Duration>,
    /// Cap on the number of cells of the largest arity and on each pointed
    /// type space.
    pub max_cells: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            nodes: None,
            time: None,
            max_cells: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProblemError {
    #[error("invalid search problem: {0}")]
    Invalid(String),
}

/// One behavior search: find `sigma` on `m`-tuples of pointed `n`-types over
/// the given constant types.
#[derive(Clone, Debug)]
pub struct SearchProblem<'a> {
    pub base: &'a BaseStructure,
    pub mode: Mode,
    pub constants: Vec<TypeRep>,
    pub theta: Vec<RelationDef>,
    /// Absent in identity mode.
    pub target: Option<RelationDef>,
}

impl<'a> SearchProblem<'a> {
    /// The 4-ary identity problem for `gamma`: no constants.
    pub fn identity(base: &'a BaseStructure, gamma: Vec<RelationDef>) -> Self {
        let empty = TypeRep::empty(base.signature());
        SearchProblem {
            base,
            mode: Mode::Identity,
            constants: vec![empty; 4],
            theta: gamma,
            target: None,
        }
    }

    pub fn m(&self) -> usize {
        self.constants.len()
    }

    pub fn n(&self) -> usize {
        self.base.n_param()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let bad = |s: String| Err(ProblemError::Invalid(s));
        if self.constants.is_empty() {
            return bad("no constants".into());
        }
        match self.mode {
            Mode::Identity => {
                if self.m() != 4 || self.constants.iter().any(|c| c.arity() != 0) {
                    return bad("identity mode takes four empty constant tuples".into());
                }
                if self.target.is_some() {
                    return bad("identity mode has no target".into());
                }
            }
            mode => {
                let Some(target) = &self.target else {
                    return bad("missing target".into());
                };
                if mode != Mode::Pp && self.m() != 1 {
                    return bad(format!("{mode} mode takes one constant"));
                }
                for c in &self.constants {
                    if c.arity() != target.arity() {
                        return bad("constant arity differs from target arity".into());
                    }
                    if !target.contains(c) {
                        return bad("constant type is not in the target".into());
                    }
                }
            }
        }
        if self.theta.iter().any(|r| r.arity() == 0) {
            return bad("relation of arity 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BehaviorError {
    #[error(transparent)]
    Space(#[from] PointedError),
    #[error("behavior table with {0} cells exceeds the cell budget")]
    TooManyCells(usize),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExtendError {
    #[error("expected {expected} arguments, got {found}")]
    WrongArgCount { expected: usize, found: usize },
    #[error("argument {0} does not match its coordinate")]
    BadArgument(usize),
    #[error("table has no value for a required cell")]
    Undefined,
    #[error("extension is inconsistent: {0}")]
    Inconsistent(#[from] AssembleError),
}

/// A (possibly partial) behavior table on `m`-tuples of pointed `n`-types.
#[derive(Clone, Debug)]
pub struct Behavior {
    n: usize,
    constants: Vec<TypeRep>,
    spaces: Vec<Arc<PointedSpace>>,
    codomain: Arc<TypeTable>,
    table: Vec<Option<u32>>,
}

impl PartialEq for Behavior {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.constants == other.constants && self.table == other.table
    }
}

impl Behavior {
    /// An empty table over the given constants.
    pub fn new_partial(
        base: &BaseStructure,
        constants: Vec<TypeRep>,
        max_cells: usize,
    ) -> Result<Self, BehaviorError> {
        let n = base.n_param();
        let spaces = constants
            .iter()
            .map(|c| pointed_table(base, c, n, max_cells))
            .collect::<Result<Vec<_>, _>>()?;
        let mut cells: usize = 1;
        for sp in &spaces {
            cells = cells.saturating_mul(sp.len());
        }
        if cells > max_cells {
            return Err(BehaviorError::TooManyCells(cells));
        }
        Ok(Behavior {
            n,
            constants,
            spaces,
            codomain: type_table(base, n),
            table: vec![None; cells],
        })
    }

    /// A complete table given by `f`.
    pub fn from_fn(
        base: &BaseStructure,
        constants: Vec<TypeRep>,
        max_cells: usize,
        mut f: impl FnMut(&[&PointedType]) -> TypeRep,
    ) -> Result<Self, BehaviorError> {
        let mut b = Behavior::new_partial(base, constants, max_cells)?;
        for cell in 0..b.len() {
            let args = b.cell_args(cell);
            let v = f(&args);
            let id = b.codomain.id_of(&v).expect("value is an n-type");
            b.table[cell] = Some(id);
        }
        Ok(b)
    }

    pub(crate) fn from_raw(
        n: usize,
        constants: Vec<TypeRep>,
        spaces: Vec<Arc<PointedSpace>>,
        codomain: Arc<TypeTable>,
        table: Vec<Option<u32>>,
    ) -> Self {
        Behavior {
            n,
            constants,
            spaces,
            codomain,
            table,
        }
    }

    pub fn m(&self) -> usize {
        self.constants.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constants(&self) -> &[TypeRep] {
        &self.constants
    }

    pub fn space(&self, coord: usize) -> &PointedSpace {
        &self.spaces[coord]
    }

    pub fn codomain(&self) -> &TypeTable {
        &self.codomain
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.table.iter().all(Option::is_some)
    }

    pub fn raw_table(&self) -> &[Option<u32>] {
        &self.table
    }

    pub fn cell_of_ids(&self, ids: &[u32]) -> usize {
        let mut idx = 0usize;
        for (sp, &id) in self.spaces.iter().zip(ids) {
            idx = idx * sp.len() + id as usize;
        }
        idx
    }

    pub fn cell_ids(&self, mut cell: usize) -> Vec<u32> {
        let mut ids = vec![0u32; self.m()];
        for i in (0..self.m()).rev() {
            let len = self.spaces[i].len();
            ids[i] = (cell % len) as u32;
            cell /= len;
        }
        ids
    }

    pub fn cell_args(&self, cell: usize) -> Vec<&PointedType> {
        self.cell_ids(cell)
            .iter()
            .enumerate()
            .map(|(i, &id)| self.spaces[i].get(id))
            .collect()
    }

    /// Cell of a tuple of pointed `n`-types, if each lies in its coordinate space.
    pub fn cell_of(&self, args: &[&PointedType]) -> Option<usize> {
        if args.len() != self.m() {
            return None;
        }
        let mut ids = Vec::with_capacity(args.len());
        for (sp, p) in self.spaces.iter().zip(args) {
            ids.push(sp.id_of(p)?);
        }
        Some(self.cell_of_ids(&ids))
    }

    pub fn value(&self, cell: usize) -> Option<&TypeRep> {
        self.table[cell].map(|id| self.codomain.get(id))
    }

    pub fn set(&mut self, cell: usize, value: &TypeRep) {
        let id = self.codomain.id_of(value).expect("value is an n-type");
        self.table[cell] = Some(id);
    }

    pub fn clear(&mut self, cell: usize) {
        self.table[cell] = None;
    }

    pub fn get(&self, args: &[&PointedType]) -> Option<&TypeRep> {
        self.value(self.cell_of(args)?)
    }
}

/// Value of the behavior on pointed `p`-types, for any `p >= 1`: read off a
/// padded table cell when `p <= n`, assembled from all `n`-element sub-tuples
/// otherwise.
pub fn extend(
    b: &Behavior,
    base: &BaseStructure,
    args: &[PointedType],
) -> Result<TypeRep, ExtendError> {
    if args.len() != b.m() {
        return Err(ExtendError::WrongArgCount {
            expected: b.m(),
            found: args.len(),
        });
    }
    let p = args.first().map_or(0, PointedType::n);
    for (i, a) in args.iter().enumerate() {
        if a.n() != p || p == 0 || a.base_type() != &b.constants[i] {
            return Err(ExtendError::BadArgument(i));
        }
    }
    let n = b.n;
    if p <= n {
        let pad: Vec<usize> = (0..n).map(|x| x.min(p - 1)).collect();
        let mut ids = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            let padded = a.project(&pad);
            ids.push(b.spaces[i].id_of(&padded).ok_or(ExtendError::BadArgument(i))?);
        }
        let v = b.value(b.cell_of_ids(&ids)).ok_or(ExtendError::Undefined)?;
        return Ok(v.project(&(0..p).collect::<Vec<_>>()));
    }
    let mut parts = Vec::new();
    for subset in increasing_subsets(p, n) {
        let sub: Vec<PointedType> = args.iter().map(|a| a.project(&subset)).collect();
        parts.push((subset, extend(b, base, &sub)?));
    }
    Ok(assemble(base, p, &parts)?)
}

/// All strictly increasing sequences of length `k` over `0..p`.
pub(crate) fn increasing_subsets(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..p {
            cur.push(x);
            rec(x + 1, p, k, cur, out);
            cur.pop();
        }
    }
    rec(0, p, k, &mut cur, &mut out);
    out
}
