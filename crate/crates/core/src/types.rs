//! Complete types over a base structure.
//!
//! Homogeneity reduces the type of a tuple to its atomic diagram. A
//! [`TypeRep`] stores that diagram as an equality partition of positions onto
//! blocks plus an age member on the blocks. Blocks are numbered by their rank
//! in the order, so the representation is canonical and type equality is
//! plain structural equality.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::age::{for_each_tuple_with, BaseStructure, FinStruct, Signature};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeRep {
    partition: Vec<usize>,
    quotient: FinStruct,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("types have arity at least 1")]
    ZeroArity,
    #[error("index {index} out of range for a type of arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },
    #[error("empty index list")]
    EmptyIndexList,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AssembleError {
    #[error("part #{index}: {reason}")]
    BadPart { index: usize, reason: String },
    #[error("position {0} is not covered by any part")]
    Uncovered(usize),
    #[error("positions {0} and {1} are both equal and distinct")]
    EqualityClash(usize, usize),
    #[error("assembled diagram is not in the age: {0}")]
    NotInAge(String),
    #[error("part #{0} disagrees with the assembled type")]
    Mismatch(usize),
}

impl TypeRep {
    /// Builds a type from a partition and quotient without validation.
    /// Callers must ensure the quotient is a canonical age member and the
    /// partition is onto its blocks.
    pub fn from_parts(partition: Vec<usize>, quotient: FinStruct) -> Self {
        TypeRep {
            partition,
            quotient,
        }
    }

    /// The type of the empty tuple.
    pub fn empty(sig: &Signature) -> Self {
        TypeRep {
            partition: Vec::new(),
            quotient: FinStruct::empty(sig, 0),
        }
    }

    pub fn arity(&self) -> usize {
        self.partition.len()
    }

    pub fn blocks(&self) -> usize {
        self.quotient.size()
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn quotient(&self) -> &FinStruct {
        &self.quotient
    }

    /// Whether positions `i` and `j` (0-based) carry equal elements.
    pub fn equal(&self, i: usize, j: usize) -> bool {
        self.partition[i] == self.partition[j]
    }

    /// Whether `symbol` holds on the elements at `positions`.
    pub fn holds(&self, symbol: usize, positions: &[usize]) -> bool {
        let t: Vec<usize> = positions.iter().map(|&p| self.partition[p]).collect();
        self.quotient.holds(symbol, &t)
    }

    /// Type of the tuple `(a[positions[0]], a[positions[1]], ..)` for any
    /// tuple `a` of this type. Positions may repeat and appear in any order.
    pub fn project(&self, positions: &[usize]) -> TypeRep {
        let mut used: Vec<usize> = positions.iter().map(|&p| self.partition[p]).collect();
        used.sort_unstable();
        used.dedup();
        let mut rank = vec![usize::MAX; self.blocks()];
        for (r, &b) in used.iter().enumerate() {
            rank[b] = r;
        }
        TypeRep {
            partition: positions.iter().map(|&p| rank[self.partition[p]]).collect(),
            quotient: self.quotient.induced(&used),
        }
    }

    /// Type of `tuple` inside `structure`, whose order symbol must be a
    /// strict linear order on the tuple's elements.
    pub fn of_tuple(structure: &FinStruct, order: usize, tuple: &[usize]) -> TypeRep {
        let mut elems: Vec<usize> = tuple.to_vec();
        elems.sort_unstable();
        elems.dedup();
        elems.sort_by(|&a, &b| {
            if a == b {
                std::cmp::Ordering::Equal
            } else if structure.holds(order, &[a, b]) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        });
        let partition = tuple
            .iter()
            .map(|e| elems.iter().position(|x| x == e).unwrap())
            .collect();
        TypeRep {
            partition,
            quotient: structure.induced(&elems),
        }
    }

    /// `x1=x2<x3`-style rendering for messages.
    pub fn describe(&self, sig: &Signature) -> String {
        let mut out = String::new();
        for b in 0..self.blocks() {
            if b > 0 {
                out.push('<');
            }
            let vars: Vec<String> = (0..self.arity())
                .filter(|&p| self.partition[p] == b)
                .map(|p| format!("x{}", p + 1))
                .collect();
            out.push_str(&vars.join("="));
        }
        let atoms = self.atom_list(sig);
        if !atoms.is_empty() {
            out.push_str(" ; ");
            out.push_str(&atoms.join(" "));
        }
        out
    }

    /// Non-order atoms of the quotient, rendered on blocks.
    fn atom_list(&self, sig: &Signature) -> Vec<String> {
        let mut atoms = Vec::new();
        for sym in 0..sig.len() {
            if sym == sig.order() {
                continue;
            }
            for t in self.quotient.relation(sym) {
                let args: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                atoms.push(format!("{}({})", sig.name(sym), args.join(",")));
            }
        }
        atoms
    }

    /// Stable text form: `[p1,..,pn] atom(..) ..`, atoms over blocks, order
    /// atoms omitted (the order on blocks is always the canonical chain).
    pub fn encode(&self, sig: &Signature) -> String {
        let parts: Vec<String> = self.partition.iter().map(|b| b.to_string()).collect();
        let mut out = format!("[{}]", parts.join(","));
        for a in self.atom_list(sig) {
            out.push(' ');
            out.push_str(&a);
        }
        out
    }

    /// Inverse of [`TypeRep::encode`]; the result is not checked against the age.
    pub fn decode(sig: &Signature, text: &str) -> Result<TypeRep, String> {
        let text = text.trim();
        let close = text.find(']').ok_or("missing `]`")?;
        if !text.starts_with('[') {
            return Err("missing `[`".into());
        }
        let inner = &text[1..close];
        let partition: Vec<usize> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad block `{s}`: {e}")))
                .collect::<Result<_, _>>()?
        };
        let blocks = partition.iter().map(|b| b + 1).max().unwrap_or(0);
        for b in 0..blocks {
            if !partition.contains(&b) {
                return Err(format!("block {b} is unused"));
            }
        }
        let mut quotient = FinStruct::chain(sig, blocks);
        for atom in text[close + 1..].split_whitespace() {
            let open = atom.find('(').ok_or_else(|| format!("bad atom `{atom}`"))?;
            if !atom.ends_with(')') {
                return Err(format!("bad atom `{atom}`"));
            }
            let name = &atom[..open];
            let sym = sig.index_of(name).ok_or_else(|| format!("unknown symbol `{name}`"))?;
            let args: Vec<usize> = atom[open + 1..atom.len() - 1]
                .split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad argument `{s}`: {e}")))
                .collect::<Result<_, _>>()?;
            quotient.insert(sym, args);
        }
        quotient.check(sig)?;
        Ok(TypeRep {
            partition,
            quotient,
        })
    }
}

/// Complete `|indices|`-type of the projection of `t` onto `indices`
/// (0-based positions).
pub fn subtype(t: &TypeRep, indices: &[usize]) -> Result<TypeRep, TypeError> {
    if indices.is_empty() {
        return Err(TypeError::EmptyIndexList);
    }
    if let Some(&index) = indices.iter().find(|&&i| i >= t.arity()) {
        return Err(TypeError::IndexOutOfRange {
            index,
            arity: t.arity(),
        });
    }
    Ok(t.project(indices))
}

/// All types of arity `t.arity() + 1` whose projection onto the first
/// `t.arity()` positions is `t`.
pub fn extensions(base: &BaseStructure, t: &TypeRep) -> Vec<TypeRep> {
    let b = t.blocks();
    let mut out = Vec::new();
    for blk in 0..b {
        let mut partition = t.partition.clone();
        partition.push(blk);
        out.push(TypeRep {
            partition,
            quotient: t.quotient.clone(),
        });
    }
    for gap in 0..=b {
        out.extend(insert_block(base, t, gap));
    }
    out
}

/// Extensions of `t` by one element forming a new block at order rank `gap`.
pub(crate) fn insert_block(base: &BaseStructure, t: &TypeRep, gap: usize) -> Vec<TypeRep> {
    let sig = base.signature();
    let b = t.blocks();
    let shift = |x: usize| if x < gap { x } else { x + 1 };
    let mut q = FinStruct::chain(sig, b + 1);
    for sym in 0..sig.len() {
        if sym == sig.order() {
            continue;
        }
        for tup in t.quotient.relation(sym) {
            q.insert(sym, tup.iter().map(|&x| shift(x)).collect());
        }
    }
    let mut free = Vec::new();
    for sym in 0..sig.len() {
        if sym == sig.order() {
            continue;
        }
        for_each_tuple_with(b + 1, sig.arity(sym), gap, &mut |tup| {
            free.push((sym, tup.to_vec()));
            true
        });
    }
    let mut partition: Vec<usize> = t.partition.iter().map(|&x| shift(x)).collect();
    partition.push(gap);

    // Old elements in order; free tuples grouped by the last old element
    // they mention (group 0: only the new element). Once a group is fixed,
    // every subset of at most `s` elements containing the new element and
    // that old element is checked, which covers every bound embedding.
    let olds: Vec<usize> = (0..=b).filter(|&x| x != gap).collect();
    let mut groups: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); b + 1];
    for (sym, tup) in free {
        let g = tup
            .iter()
            .filter(|&&x| x != gap)
            .map(|&x| if x < gap { x + 1 } else { x })
            .max()
            .unwrap_or(0);
        groups[g].push((sym, tup));
    }
    let mut out = Vec::new();
    let ctx = Insert {
        base,
        gap,
        olds: &olds,
        groups: &groups,
        partition: &partition,
    };
    ctx.dfs(0, &mut q, &mut out);
    out
}

struct Insert<'a> {
    base: &'a BaseStructure,
    gap: usize,
    olds: &'a [usize],
    groups: &'a [Vec<(usize, Vec<usize>)>],
    partition: &'a [usize],
}

impl Insert<'_> {
    fn dfs(&self, g: usize, q: &mut FinStruct, out: &mut Vec<TypeRep>) {
        if g == self.groups.len() {
            out.push(TypeRep {
                partition: self.partition.to_vec(),
                quotient: q.clone(),
            });
            return;
        }
        let group = &self.groups[g];
        assert!(group.len() < 64, "too many free tuples for one element");
        for mask in 0u64..(1u64 << group.len()) {
            for (bit, (sym, tup)) in group.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    q.insert(*sym, tup.clone());
                }
            }
            if self.local_ok(g, q) {
                self.dfs(g + 1, q, out);
            }
            for (bit, (sym, tup)) in group.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    q.remove(*sym, tup);
                }
            }
        }
    }

    /// Subsets containing the new element whose largest old element is the
    /// one of group `g` are age members.
    fn local_ok(&self, g: usize, q: &FinStruct) -> bool {
        let s = self.base.s();
        if g == 0 {
            return self.base.in_age(&q.induced(&[self.gap]));
        }
        let last = self.olds[g - 1];
        let earlier = &self.olds[..g - 1];
        let mut ok = true;
        for extra in 0..=s.saturating_sub(2).min(earlier.len()) {
            for_each_subset(earlier.len(), extra, &mut |idx| {
                let mut elems: Vec<usize> = idx.iter().map(|&i| earlier[i]).collect();
                elems.push(last);
                elems.push(self.gap);
                elems.sort_unstable();
                if !self.base.in_age(&q.induced(&elems)) {
                    ok = false;
                }
                ok
            });
            if !ok {
                return false;
            }
        }
        true
    }
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for x in start..n {
            cur.push(x);
            let go = rec(x + 1, n, k, cur, f);
            cur.pop();
            if !go {
                return false;
            }
        }
        true
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// The complete `n`-types of `base`, sorted.
pub fn enumerate_types(base: &BaseStructure, n: usize) -> Result<Vec<TypeRep>, TypeError> {
    if n == 0 {
        return Err(TypeError::ZeroArity);
    }
    Ok(type_table(base, n).types.clone())
}

/// Indexed, cached type space `S_n` (arity 0 gives the single empty type).
pub fn type_table(base: &BaseStructure, n: usize) -> Arc<TypeTable> {
    if let Some(t) = base.type_cache().lock().unwrap().get(&n) {
        return t.clone();
    }
    let mut layer = vec![TypeRep::empty(base.signature())];
    for _ in 0..n {
        layer = layer.iter().flat_map(|t| extensions(base, t)).collect();
    }
    let table = Arc::new(TypeTable::new(n, layer));
    base.type_cache()
        .lock()
        .unwrap()
        .entry(n)
        .or_insert(table)
        .clone()
}

/// A sorted list of types of one arity with an inverse index.
#[derive(Debug)]
pub struct TypeTable {
    arity: usize,
    types: Vec<TypeRep>,
    index: HashMap<TypeRep, u32>,
}

impl TypeTable {
    pub fn new(arity: usize, mut types: Vec<TypeRep>) -> Self {
        types.sort();
        types.dedup();
        let index = types.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        TypeTable {
            arity,
            types,
            index,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, id: u32) -> &TypeRep {
        &self.types[id as usize]
    }

    pub fn id_of(&self, t: &TypeRep) -> Option<u32> {
        self.index.get(t).copied()
    }

    pub fn types(&self) -> &[TypeRep] {
        &self.types
    }
}

/// Glues a `p`-type from types of sub-tuples. `parts` pairs each list of
/// positions (0-based, distinct) with the type of the sub-tuple at those
/// positions. The result is the unique `p`-type projecting onto every part.
pub fn assemble(
    base: &BaseStructure,
    p: usize,
    parts: &[(Vec<usize>, TypeRep)],
) -> Result<TypeRep, AssembleError> {
    let sig = base.signature();
    let mut covered = vec![false; p];
    for (index, (pos, t)) in parts.iter().enumerate() {
        if pos.len() != t.arity() {
            return Err(AssembleError::BadPart {
                index,
                reason: format!("{} positions for a type of arity {}", pos.len(), t.arity()),
            });
        }
        for (a, &x) in pos.iter().enumerate() {
            if x >= p {
                return Err(AssembleError::BadPart {
                    index,
                    reason: format!("position {x} out of range"),
                });
            }
            if pos[..a].contains(&x) {
                return Err(AssembleError::BadPart {
                    index,
                    reason: format!("position {x} repeated"),
                });
            }
            covered[x] = true;
        }
    }
    if let Some(x) = covered.iter().position(|c| !c) {
        return Err(AssembleError::Uncovered(x));
    }

    // Equality classes.
    let mut uf: Vec<usize> = (0..p).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut y = x;
        while uf[y] != r {
            let next = uf[y];
            uf[y] = r;
            y = next;
        }
        r
    }
    for (pos, t) in parts {
        for a in 0..pos.len() {
            for b in a + 1..pos.len() {
                if t.equal(a, b) {
                    let (ra, rb) = (find(&mut uf, pos[a]), find(&mut uf, pos[b]));
                    uf[ra] = rb;
                }
            }
        }
    }
    for (pos, t) in parts {
        for a in 0..pos.len() {
            for b in a + 1..pos.len() {
                if !t.equal(a, b) && find(&mut uf, pos[a]) == find(&mut uf, pos[b]) {
                    return Err(AssembleError::EqualityClash(pos[a], pos[b]));
                }
            }
        }
    }
    let mut block_of = vec![usize::MAX; p];
    let mut reps = Vec::new();
    for x in 0..p {
        let r = find(&mut uf, x);
        if block_of[r] == usize::MAX {
            block_of[r] = reps.len();
            reps.push(r);
        }
        block_of[x] = block_of[r];
    }
    let nb = reps.len();

    // Diagram on the blocks, in first-occurrence order.
    let mut raw = FinStruct::empty(sig, nb);
    for (pos, t) in parts {
        let mut blk_pos = vec![usize::MAX; t.blocks()];
        for (a, &x) in pos.iter().enumerate() {
            blk_pos[t.partition[a]] = x;
        }
        for sym in 0..sig.len() {
            for tup in t.quotient.relation(sym) {
                raw.insert(sym, tup.iter().map(|&b| block_of[blk_pos[b]]).collect());
            }
        }
    }
    if !base.in_age(&raw) {
        return Err(AssembleError::NotInAge(raw.display(sig).to_string()));
    }
    // In the age the order is linear; relabel blocks by rank.
    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if raw.holds(sig.order(), &[a, b]) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let mut rank = vec![0; nb];
    for (r, &b) in order.iter().enumerate() {
        rank[b] = r;
    }
    let result = TypeRep {
        partition: (0..p).map(|x| rank[block_of[x]]).collect(),
        quotient: raw.induced(&order),
    };
    for (index, (pos, t)) in parts.iter().enumerate() {
        if &result.project(pos) != t {
            return Err(AssembleError::Mismatch(index));
        }
    }
    Ok(result)
}

impl fmt::Display for TypeRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.partition.iter().map(|b| b.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::builtin;

    fn dlo() -> BaseStructure {
        builtin("dense_linear_order").unwrap()
    }

    /// Type of a tuple of rationals (here small integers) in the chain.
    fn chain_type(base: &BaseStructure, vals: &[usize]) -> TypeRep {
        let size = vals.iter().max().map_or(0, |m| m + 1);
        let chain = FinStruct::chain(base.signature(), size);
        TypeRep::of_tuple(&chain, base.signature().order(), vals)
    }

    #[test]
    fn two_types_of_dense_order() {
        let b = dlo();
        let ts = enumerate_types(&b, 2).unwrap();
        assert_eq!(ts.len(), 3);
        assert_eq!(ts[0], chain_type(&b, &[0, 0]));
        assert_eq!(ts[1], chain_type(&b, &[0, 1]));
        assert_eq!(ts[2], chain_type(&b, &[1, 0]));
        assert_eq!(enumerate_types(&b, 0), Err(TypeError::ZeroArity));
    }

    #[test]
    fn ordered_graph_two_types() {
        let g = builtin("ordered_random_graph").unwrap();
        assert_eq!(enumerate_types(&g, 2).unwrap().len(), 5);
    }

    #[test]
    fn projections() {
        let b = dlo();
        let t = chain_type(&b, &[0, 1, 2]);
        assert_eq!(subtype(&t, &[0, 2]).unwrap(), chain_type(&b, &[0, 1]));
        let t = chain_type(&b, &[0, 0, 1]);
        assert_eq!(subtype(&t, &[0, 1]).unwrap(), chain_type(&b, &[0, 0]));
        assert_eq!(subtype(&t, &[0, 1, 2]).unwrap(), t);
        assert_eq!(
            subtype(&t, &[3]),
            Err(TypeError::IndexOutOfRange { index: 3, arity: 3 })
        );
        assert_eq!(subtype(&t, &[]), Err(TypeError::EmptyIndexList));
    }

    #[test]
    fn assemble_chain_and_cycle() {
        let b = dlo();
        let lt = chain_type(&b, &[0, 1]);
        let gt = chain_type(&b, &[1, 0]);
        let ok = assemble(
            &b,
            3,
            &[(vec![0, 1], lt.clone()), (vec![1, 2], lt.clone()), (vec![0, 2], lt.clone())],
        )
        .unwrap();
        assert_eq!(ok, chain_type(&b, &[0, 1, 2]));
        let bad = assemble(&b, 3, &[(vec![0, 1], lt.clone()), (vec![1, 2], lt), (vec![0, 2], gt)]);
        assert!(matches!(bad, Err(AssembleError::NotInAge(_))), "{bad:?}");
    }

    #[test]
    fn assemble_equality_clash() {
        let b = dlo();
        let eq = chain_type(&b, &[0, 0]);
        let lt = chain_type(&b, &[0, 1]);
        let r = assemble(&b, 3, &[(vec![0, 1], eq.clone()), (vec![1, 2], eq), (vec![0, 2], lt)]);
        assert!(matches!(r, Err(AssembleError::EqualityClash(..))), "{r:?}");
    }

    #[test]
    fn encode_roundtrip() {
        let g = builtin("ordered_random_graph").unwrap();
        for t in enumerate_types(&g, 3).unwrap() {
            assert_eq!(TypeRep::decode(g.signature(), &t.encode(g.signature())).unwrap(), t);
        }
    }

    #[test]
    fn of_tuple_with_repeats() {
        let b = dlo();
        let t = chain_type(&b, &[2, 0, 2]);
        assert_eq!(t.partition(), &[1, 0, 1]);
        assert_eq!(t.describe(b.signature()), "x2<x1=x3");
    }
}
