//! Explicit primitive positive definitions.
//!
//! For a fixed number `e` of existential variables, a pp formula defining
//! the target can be taken to be the intersection of the atom sets of one
//! `(k+e)`-type extension per target type: every defining formula's matrix
//! is contained in such an intersection. The synthesizer searches these
//! choices depth first, pruning as soon as the partial intersection already
//! admits a type outside the target (adding choices only removes atoms).

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::age::BaseStructure;
use crate::formula::RelationDef;
use crate::types::{type_table, TypeRep};

/// Skip existential counts whose type space is larger than this.
const MAX_SPACE: usize = 20_000;
/// Depth-first nodes per existential count.
const MAX_NODES: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PpAtom {
    /// Template relation `index` applied to variables.
    Relation { index: usize, vars: Vec<usize> },
    /// A base symbol applied to variables (accepted by the semantics only).
    Symbol { symbol: usize, vars: Vec<usize> },
    Eq(usize, usize),
}

/// `exists y1..ye. (atom & .. & atom)` over free variables `x1..xk`.
/// Variables `0..free` are free, the rest existential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PpFormula {
    pub free: usize,
    pub exists: usize,
    pub atoms: Vec<PpAtom>,
}

impl PpFormula {
    pub fn display<'a>(&'a self, theta: &'a [RelationDef], base: &'a BaseStructure) -> PpDisplay<'a> {
        PpDisplay {
            f: self,
            theta,
            base,
        }
    }
}

pub struct PpDisplay<'a> {
    f: &'a PpFormula,
    theta: &'a [RelationDef],
    base: &'a BaseStructure,
}

impl fmt::Display for PpDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.f.free;
        let var = |v: usize| {
            if v < k {
                format!("x{}", v + 1)
            } else {
                format!("y{}", v - k + 1)
            }
        };
        if self.f.exists > 0 {
            let ys: Vec<String> = (k..k + self.f.exists).map(var).collect();
            write!(f, "exists {}. ", ys.join(" "))?;
        }
        if self.f.atoms.is_empty() {
            return write!(f, "true");
        }
        let parts: Vec<String> = self
            .f
            .atoms
            .iter()
            .map(|a| match a {
                PpAtom::Relation { index, vars } => {
                    let vs: Vec<String> = vars.iter().map(|&v| var(v)).collect();
                    format!("{}({})", self.theta[*index].name(), vs.join(","))
                }
                PpAtom::Symbol { symbol, vars } => {
                    let vs: Vec<String> = vars.iter().map(|&v| var(v)).collect();
                    format!("{}({})", self.base.signature().name(*symbol), vs.join(","))
                }
                PpAtom::Eq(a, b) => format!("{} = {}", var(*a), var(*b)),
            })
            .collect();
        write!(f, "{}", parts.join(" & "))
    }
}

fn atom_holds(atom: &PpAtom, theta: &[RelationDef], t: &TypeRep) -> bool {
    match atom {
        PpAtom::Relation { index, vars } => theta[*index].contains(&t.project(vars)),
        PpAtom::Symbol { symbol, vars } => t.holds(*symbol, vars),
        PpAtom::Eq(a, b) => t.equal(*a, *b),
    }
}

/// The `k`-types satisfying the formula: those extended by some
/// `(k+e)`-type satisfying every atom.
pub fn pp_semantics(
    phi: &PpFormula,
    theta: &[RelationDef],
    base: &BaseStructure,
) -> BTreeSet<TypeRep> {
    let k = phi.free;
    let free: Vec<usize> = (0..k).collect();
    type_table(base, k + phi.exists)
        .types()
        .iter()
        .filter(|t| phi.atoms.iter().all(|a| atom_holds(a, theta, t)))
        .map(|t| t.project(&free))
        .collect()
}

fn tuples(vars: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..vars).map(move |v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

struct Space {
    universe: Vec<PpAtom>,
    words: usize,
    /// Atom bitset of every `(k+e)`-type.
    atoms_of: Vec<Vec<u64>>,
    /// Whether the free projection of each type lies in the target.
    in_target: Vec<bool>,
    /// Per target type, the ids of its extensions.
    extensions: Vec<Vec<usize>>,
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

impl Space {
    /// Whether every type satisfying `psi` projects into the target.
    fn sound(&self, psi: &[u64]) -> bool {
        self.atoms_of
            .iter()
            .zip(&self.in_target)
            .all(|(a, &inside)| inside || !subset(psi, a))
    }
}

/// Searches for a pp definition of `target` from `theta` with at most
/// `max_vars` existential variables and `max_atoms` atoms. `None` when the
/// budgets are exhausted; this is no evidence against definability.
pub fn synthesize_pp(
    target: &RelationDef,
    theta: &[RelationDef],
    base: &BaseStructure,
    max_vars: usize,
    max_atoms: usize,
) -> Option<PpFormula> {
    let k = target.arity();
    let goal: Vec<&TypeRep> = target.type_set().iter().collect();
    if goal.is_empty() {
        return None;
    }
    let free: Vec<usize> = (0..k).collect();
    for e in 0..=max_vars {
        let v = k + e;
        let table = type_table(base, v);
        if table.len() > MAX_SPACE {
            break;
        }
        let mut universe = Vec::new();
        for a in 0..v {
            for b in a + 1..v {
                universe.push(PpAtom::Eq(a, b));
            }
        }
        for (index, r) in theta.iter().enumerate() {
            for vars in tuples(v, r.arity()) {
                universe.push(PpAtom::Relation { index, vars });
            }
        }
        let words = universe.len().div_ceil(64).max(1);
        let mut atoms_of = Vec::with_capacity(table.len());
        let mut in_target = Vec::with_capacity(table.len());
        let mut extensions = vec![Vec::new(); goal.len()];
        for (id, t) in table.types().iter().enumerate() {
            let mut bits = vec![0u64; words];
            for (i, a) in universe.iter().enumerate() {
                if atom_holds(a, theta, t) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            atoms_of.push(bits);
            let proj = t.project(&free);
            in_target.push(target.contains(&proj));
            if let Ok(g) = goal.binary_search(&&proj) {
                extensions[g].push(id);
            }
        }
        let space = Space {
            universe,
            words,
            atoms_of,
            in_target,
            extensions,
        };
        if let Some(psi) = choose(&space, goal.len()) {
            let atoms = minimize(&space, psi);
            if atoms.len() <= max_atoms {
                return Some(PpFormula {
                    free: k,
                    exists: e,
                    atoms,
                });
            }
        }
    }
    None
}

/// Depth-first choice of one extension per target type.
fn choose(space: &Space, goals: usize) -> Option<Vec<u64>> {
    let mut seen: HashSet<(usize, Vec<u64>)> = HashSet::new();
    let mut nodes = 0usize;
    fn rec(
        space: &Space,
        depth: usize,
        goals: usize,
        psi: Vec<u64>,
        seen: &mut HashSet<(usize, Vec<u64>)>,
        nodes: &mut usize,
    ) -> Option<Vec<u64>> {
        if !space.sound(&psi) {
            return None;
        }
        if depth == goals {
            return Some(psi);
        }
        *nodes += 1;
        if *nodes > MAX_NODES || !seen.insert((depth, psi.clone())) {
            return None;
        }
        for &ext in &space.extensions[depth] {
            let next: Vec<u64> = psi
                .iter()
                .zip(&space.atoms_of[ext])
                .map(|(a, b)| a & b)
                .collect();
            if let Some(found) = rec(space, depth + 1, goals, next, seen, nodes) {
                return Some(found);
            }
        }
        None
    }
    let all = vec![u64::MAX; space.words];
    rec(space, 0, goals, all, &mut seen, &mut nodes)
}

/// Greedily drops atoms while the formula stays sound.
fn minimize(space: &Space, mut psi: Vec<u64>) -> Vec<PpAtom> {
    let n = space.universe.len();
    for (w, word) in psi.iter_mut().enumerate() {
        if w == space.words - 1 && !n.is_multiple_of(64) {
            *word &= (1u64 << (n % 64)) - 1;
        }
    }
    // Relation atoms are preferred over equalities, so try equalities first.
    for i in 0..n {
        if psi[i / 64] >> (i % 64) & 1 == 0 {
            continue;
        }
        psi[i / 64] &= !(1 << (i % 64));
        if !space.sound(&psi) {
            psi[i / 64] |= 1 << (i % 64);
        }
    }
    (0..n)
        .filter(|&i| psi[i / 64] >> (i % 64) & 1 == 1)
        .map(|i| space.universe[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::builtin;

    fn dlo() -> BaseStructure {
        builtin("dense_linear_order").unwrap()
    }

    #[test]
    fn semantics_of_density() {
        let b = dlo();
        let lt = b.signature().order();
        let phi = PpFormula {
            free: 2,
            exists: 1,
            atoms: vec![
                PpAtom::Symbol {
                    symbol: lt,
                    vars: vec![0, 2],
                },
                PpAtom::Symbol {
                    symbol: lt,
                    vars: vec![2, 1],
                },
            ],
        };
        let sem = pp_semantics(&phi, &[], &b);
        let expect = RelationDef::parse("Lt", 2, "x1<x2", &b).unwrap();
        assert_eq!(&sem, expect.type_set());
        let eq = PpFormula {
            free: 2,
            exists: 0,
            atoms: vec![PpAtom::Eq(0, 1)],
        };
        assert_eq!(pp_semantics(&eq, &[], &b).len(), 1);
        let never = PpFormula {
            free: 1,
            exists: 0,
            atoms: vec![PpAtom::Symbol {
                symbol: lt,
                vars: vec![0, 0],
            }],
        };
        assert!(pp_semantics(&never, &[], &b).is_empty());
    }

    #[test]
    fn projection_of_chain() {
        let b = dlo();
        let r1 = RelationDef::parse("R1", 3, "x1<x2 & x2<x3", &b).unwrap();
        let target = RelationDef::parse("R0", 2, "x1<x2", &b).unwrap();
        let phi = synthesize_pp(&target, std::slice::from_ref(&r1), &b, 2, 6).unwrap();
        assert_eq!(phi.exists, 1);
        assert_eq!(&pp_semantics(&phi, std::slice::from_ref(&r1), &b), target.type_set());
        let shown = phi.display(std::slice::from_ref(&r1), &b).to_string();
        assert!(shown.starts_with("exists y1. R1("), "{shown}");
    }

    #[test]
    fn target_in_template_is_one_atom() {
        let b = dlo();
        let r = RelationDef::parse("R", 2, "x1<x2 | x1=x2", &b).unwrap();
        let phi = synthesize_pp(&r, &[r.renamed("S")], &b, 2, 6).unwrap();
        assert_eq!(phi.exists, 0);
        assert_eq!(phi.atoms, vec![PpAtom::Relation { index: 0, vars: vec![0, 1] }]);
    }

    #[test]
    fn non_strict_order_has_no_definition() {
        let b = dlo();
        let lt = RelationDef::parse("Lt", 2, "x1<x2", &b).unwrap();
        let le = RelationDef::parse("Le", 2, "x1<x2 | x1=x2", &b).unwrap();
        assert_eq!(synthesize_pp(&le, &[lt], &b, 2, 6), None);
    }

    #[test]
    fn full_relation_is_true() {
        let b = dlo();
        let any = RelationDef::parse("T", 2, "true", &b).unwrap();
        let phi = synthesize_pp(&any, &[], &b, 0, 0).unwrap();
        assert!(phi.atoms.is_empty());
    }
}
