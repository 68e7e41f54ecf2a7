//! Finitely bounded base structures.
//!
//! A base is given by a relational signature with a distinguished strict
//! order symbol and a finite list of forbidden induced substructures
//! ("bounds"). Its age is the class of finite structures into which no bound
//! embeds. Age members are always stored with their order in canonical form:
//! element `i` is below element `j` exactly when `i < j`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::pointed::PointedSpace;
use crate::types::{TypeRep, TypeTable};

/// Upper bound on the number of free tuple bits tried when a point is added
/// during enumeration. Bases needing more are rejected by [`validate_base`].
pub const MAX_EXTENSION_BITS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    symbols: Vec<Symbol>,
    order: usize,
    max_arity: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate symbol `{0}`")]
    Duplicate(String),
    #[error("symbol `{0}` has arity 0")]
    ZeroArity(String),
    #[error("order symbol `{0}` is not declared")]
    MissingOrder(String),
    #[error("order symbol `{0}` must be binary")]
    OrderNotBinary(String),
}

impl Signature {
    pub fn new<S: Into<String>>(
        symbols: impl IntoIterator<Item = (S, usize)>,
        order_symbol: &str,
    ) -> Result<Self, SignatureError> {
        let mut out: Vec<Symbol> = Vec::new();
        for (name, arity) in symbols {
            let name = name.into();
            if out.iter().any(|s| s.name == name) {
                return Err(SignatureError::Duplicate(name));
            }
            if arity == 0 {
                return Err(SignatureError::ZeroArity(name));
            }
            out.push(Symbol { name, arity });
        }
        let order = out
            .iter()
            .position(|s| s.name == order_symbol)
            .ok_or_else(|| SignatureError::MissingOrder(order_symbol.to_string()))?;
        if out[order].arity != 2 {
            return Err(SignatureError::OrderNotBinary(order_symbol.to_string()));
        }
        let max_arity = out.iter().map(|s| s.arity).max().unwrap_or(2);
        Ok(Signature {
            symbols: out,
            order,
            max_arity,
        })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Index of the order symbol.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn order_name(&self) -> &str {
        &self.symbols[self.order].name
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn arity(&self, symbol: usize) -> usize {
        self.symbols[symbol].arity
    }

    pub fn name(&self, symbol: usize) -> &str {
        &self.symbols[symbol].name
    }
}

/// A finite structure on `{0, .., size-1}`; relations are indexed by the
/// position of their symbol in the signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinStruct {
    size: usize,
    relations: Vec<BTreeSet<Vec<usize>>>,
}

impl FinStruct {
    pub fn empty(sig: &Signature, size: usize) -> Self {
        FinStruct {
            size,
            relations: vec![BTreeSet::new(); sig.len()],
        }
    }

    /// The strict chain `0 < 1 < .. < size-1` with no other relations.
    pub fn chain(sig: &Signature, size: usize) -> Self {
        let mut s = FinStruct::empty(sig, size);
        for i in 0..size {
            for j in i + 1..size {
                s.insert(sig.order(), vec![i, j]);
            }
        }
        s
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn relation(&self, symbol: usize) -> &BTreeSet<Vec<usize>> {
        &self.relations[symbol]
    }

    pub fn holds(&self, symbol: usize, tuple: &[usize]) -> bool {
        self.relations[symbol].contains(tuple)
    }

    pub fn insert(&mut self, symbol: usize, tuple: Vec<usize>) {
        self.relations[symbol].insert(tuple);
    }

    pub(crate) fn remove(&mut self, symbol: usize, tuple: &[usize]) {
        self.relations[symbol].remove(tuple);
    }

    pub fn symbol_count(&self) -> usize {
        self.relations.len()
    }

    /// Substructure induced on `elements`, relabelled so that `elements[i]`
    /// becomes `i`. Elements must be distinct.
    pub fn induced(&self, elements: &[usize]) -> FinStruct {
        let mut pos = vec![usize::MAX; self.size];
        for (i, &e) in elements.iter().enumerate() {
            pos[e] = i;
        }
        let relations = self
            .relations
            .iter()
            .map(|rel| {
                rel.iter()
                    .filter(|t| t.iter().all(|&e| pos[e] != usize::MAX))
                    .map(|t| t.iter().map(|&e| pos[e]).collect())
                    .collect()
            })
            .collect();
        FinStruct {
            size: elements.len(),
            relations,
        }
    }

    /// Checks tuple entries and arities against `sig`.
    pub fn check(&self, sig: &Signature) -> Result<(), String> {
        if self.relations.len() != sig.len() {
            return Err(format!(
                "structure has {} relations, signature has {}",
                self.relations.len(),
                sig.len()
            ));
        }
        for (sym, rel) in self.relations.iter().enumerate() {
            for t in rel {
                if t.len() != sig.arity(sym) {
                    return Err(format!(
                        "tuple {:?} for `{}` has length {}, expected {}",
                        t,
                        sig.name(sym),
                        t.len(),
                        sig.arity(sym)
                    ));
                }
                if let Some(&e) = t.iter().find(|&&e| e >= self.size) {
                    return Err(format!(
                        "entry {} of `{}`{:?} is outside a structure of size {}",
                        e,
                        sig.name(sym),
                        t,
                        self.size
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> StructDisplay<'a> {
        StructDisplay { s: self, sig }
    }
}

pub struct StructDisplay<'a> {
    s: &'a FinStruct,
    sig: &'a Signature,
}

impl fmt::Display for StructDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "on {}:", self.s.size)?;
        for (sym, rel) in self.s.relations.iter().enumerate() {
            for t in rel {
                let args: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                write!(f, " {}({})", self.sig.name(sym), args.join(","))?;
            }
        }
        Ok(())
    }
}

/// Is there an embedding (injective, preserving relations and
/// non-relations) of `small` into `big`? When `must_use` is set, only
/// embeddings whose image contains that element are considered.
pub fn embeds(small: &FinStruct, big: &FinStruct, must_use: Option<usize>) -> bool {
    if small.size > big.size {
        return false;
    }
    if small.size == 0 {
        return must_use.is_none();
    }
    let mut map = Vec::with_capacity(small.size);
    let mut used = vec![false; big.size];
    embed_rec(small, big, &mut map, &mut used, must_use)
}

fn embed_rec(
    small: &FinStruct,
    big: &FinStruct,
    map: &mut Vec<usize>,
    used: &mut [bool],
    must_use: Option<usize>,
) -> bool {
    if map.len() == small.size {
        return must_use.is_none_or(|m| used[m]);
    }
    for cand in 0..big.size {
        if used[cand] {
            continue;
        }
        map.push(cand);
        used[cand] = true;
        if consistent_at(small, big, map) && embed_rec(small, big, map, used, must_use) {
            return true;
        }
        used[cand] = false;
        map.pop();
    }
    false
}

/// Checks every tuple over the mapped prefix that mentions the newest element.
fn consistent_at(small: &FinStruct, big: &FinStruct, map: &[usize]) -> bool {
    let last = map.len() - 1;
    for sym in 0..small.relations.len() {
        let arity = match small.relations[sym]
            .iter()
            .next()
            .map(|t| t.len())
            .or_else(|| big.relations[sym].iter().next().map(|t| t.len()))
        {
            Some(a) => a,
            None => continue,
        };
        let mut ok = true;
        for_each_tuple_with(map.len(), arity, last, &mut |t| {
            let img: Vec<usize> = t.iter().map(|&e| map[e]).collect();
            if small.holds(sym, t) != big.holds(sym, &img) {
                ok = false;
                return false;
            }
            true
        });
        if !ok {
            return false;
        }
    }
    true
}

/// Calls `f` on every `arity`-tuple over `{0..size}` containing `must`.
/// Stops early when `f` returns false.
pub(crate) fn for_each_tuple_with(
    size: usize,
    arity: usize,
    must: usize,
    f: &mut dyn FnMut(&[usize]) -> bool,
) {
    let mut t = vec![0usize; arity];
    if arity == 0 || size == 0 {
        return;
    }
    loop {
        if t.contains(&must) && !f(&t) {
            return;
        }
        let mut i = arity;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < size {
                break;
            }
            t[i] = 0;
        }
    }
}

/// Hypotheses about the base that are taken on trust.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrustedMeta {
    pub ordered: bool,
    pub homogeneous: bool,
    pub ramsey: bool,
}

impl Default for TrustedMeta {
    fn default() -> Self {
        TrustedMeta {
            ordered: true,
            homogeneous: true,
            ramsey: true,
        }
    }
}

/// Unvalidated description of a base, as read from a problem file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawBase {
    pub name: Option<String>,
    pub symbols: Vec<(String, usize)>,
    pub order_symbol: String,
    pub bounds: Vec<RawBound>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawBound {
    pub size: usize,
    pub atoms: Vec<(String, Vec<usize>)>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Diagnostic {
    #[error("signature: {0}")]
    Signature(#[from] SignatureError),
    #[error("malformed bound #{index}: {reason}")]
    MalformedBound { index: usize, reason: String },
    #[error("order is not total: age member {witness} ({reason})")]
    OrderNotTotal { witness: String, reason: String },
    #[error("enumeration too large: adding a point to a {size}-element structure needs {bits} free tuple bits (limit {MAX_EXTENSION_BITS})")]
    EnumerationTooLarge { size: usize, bits: usize },
}

/// A validated finitely bounded base structure together with lazily filled
/// caches of its type spaces.
pub struct BaseStructure {
    name: Option<String>,
    signature: Signature,
    bounds: Vec<FinStruct>,
    max_bound_size: usize,
    n_param: usize,
    trusted: TrustedMeta,
    age_memo: Mutex<HashMap<FinStruct, bool>>,
    types: Mutex<HashMap<usize, Arc<TypeTable>>>,
    pointed: Mutex<HashMap<(TypeRep, usize), Arc<PointedSpace>>>,
}

impl fmt::Debug for BaseStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseStructure")
            .field("name", &self.name)
            .field("signature", &self.signature)
            .field("bounds", &self.bounds)
            .field("s", &self.max_bound_size)
            .field("n_param", &self.n_param)
            .finish()
    }
}

impl Clone for BaseStructure {
    fn clone(&self) -> Self {
        BaseStructure {
            name: self.name.clone(),
            signature: self.signature.clone(),
            bounds: self.bounds.clone(),
            max_bound_size: self.max_bound_size,
            n_param: self.n_param,
            trusted: self.trusted.clone(),
            age_memo: Mutex::new(HashMap::new()),
            types: Mutex::new(HashMap::new()),
            pointed: Mutex::new(HashMap::new()),
        }
    }
}

impl BaseStructure {
    fn from_parts(name: Option<String>, signature: Signature, bounds: Vec<FinStruct>) -> Self {
        let s = bounds.iter().map(|b| b.size()).max().unwrap_or(1).max(1);
        let n_param = s.max(signature.max_arity()).max(3);
        BaseStructure {
            name,
            signature,
            bounds,
            max_bound_size: s,
            n_param,
            trusted: TrustedMeta::default(),
            age_memo: Mutex::new(HashMap::new()),
            types: Mutex::new(HashMap::new()),
            pointed: Mutex::new(HashMap::new()),
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn bounds(&self) -> &[FinStruct] {
        &self.bounds
    }

    /// Size of the largest bound (at least 1).
    pub fn s(&self) -> usize {
        self.max_bound_size
    }

    /// Working arity `max(s, max_arity, 3)`.
    pub fn n_param(&self) -> usize {
        self.n_param
    }

    pub fn trusted(&self) -> &TrustedMeta {
        &self.trusted
    }

    /// True iff no bound embeds into `a`.
    pub fn in_age(&self, a: &FinStruct) -> bool {
        if let Some(&v) = self.age_memo.lock().unwrap().get(a) {
            return v;
        }
        let v = !self.bounds.iter().any(|b| embeds(b, a, None));
        self.age_memo.lock().unwrap().insert(a.clone(), v);
        v
    }

    /// Age test for a structure whose restriction to all elements other
    /// than `new` is already known to be in the age.
    pub(crate) fn in_age_extending(&self, a: &FinStruct, new: usize) -> bool {
        if let Some(&v) = self.age_memo.lock().unwrap().get(a) {
            return v;
        }
        let v = !self.bounds.iter().any(|b| embeds(b, a, Some(new)));
        self.age_memo.lock().unwrap().insert(a.clone(), v);
        v
    }

    pub(crate) fn type_cache(&self) -> &Mutex<HashMap<usize, Arc<TypeTable>>> {
        &self.types
    }

    pub(crate) fn pointed_cache(&self) -> &Mutex<HashMap<(TypeRep, usize), Arc<PointedSpace>>> {
        &self.pointed
    }

    /// Tuples over `{0..=new}` containing `new`, for every non-order symbol.
    pub(crate) fn free_tuples(&self, new: usize) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for sym in 0..self.signature.len() {
            if sym == self.signature.order() {
                continue;
            }
            for_each_tuple_with(new + 1, self.signature.arity(sym), new, &mut |t| {
                out.push((sym, t.to_vec()));
                true
            });
        }
        out
    }

    /// All age members on `size` points extending `prefix` (on `size-1`
    /// points, canonical order) by a new maximal element.
    fn extend_age_member(&self, prefix: &FinStruct) -> Vec<FinStruct> {
        let new = prefix.size();
        let mut base = prefix.clone();
        base.size = new + 1;
        for i in 0..new {
            base.insert(self.signature.order(), vec![i, new]);
        }
        let free = self.free_tuples(new);
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << free.len()) {
            let mut s = base.clone();
            for (bit, (sym, t)) in free.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    s.insert(*sym, t.clone());
                }
            }
            if self.in_age_extending(&s, new) {
                out.push(s);
            }
        }
        out
    }
}

/// Validates a raw base description.
///
/// Well-formedness of every bound is checked, then every labelled age
/// member with at most three elements is enumerated to confirm the order
/// symbol is interpreted as a strict linear order. Any violation of
/// linearity is witnessed on at most three points, and ages are closed under
/// substructures, so this covers members of every size.
pub fn validate_base(raw: &RawBase) -> Result<BaseStructure, Vec<Diagnostic>> {
    let signature = Signature::new(raw.symbols.iter().map(|(n, a)| (n.clone(), *a)), &raw.order_symbol)
        .map_err(|e| vec![Diagnostic::Signature(e)])?;
    let mut diags = Vec::new();
    let mut bounds = Vec::new();
    for (index, rb) in raw.bounds.iter().enumerate() {
        let mut s = FinStruct::empty(&signature, rb.size);
        let mut bad = None;
        for (name, args) in &rb.atoms {
            match signature.index_of(name) {
                None => bad = Some(format!("unknown symbol `{name}`")),
                Some(sym) => s.insert(sym, args.clone()),
            }
        }
        if bad.is_none() {
            if let Err(e) = s.check(&signature) {
                bad = Some(e);
            }
        }
        match bad {
            Some(reason) => diags.push(Diagnostic::MalformedBound { index, reason }),
            None => bounds.push(s),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let base = BaseStructure::from_parts(raw.name.clone(), signature, bounds);

    // Extension sizes used by type enumeration reach roughly 2 * n_param.
    for size in 1..=2 * base.n_param() {
        let bits = base.free_tuples(size - 1).len();
        if bits > MAX_EXTENSION_BITS {
            return Err(vec![Diagnostic::EnumerationTooLarge { size: size - 1, bits }]);
        }
    }

    if let Some((witness, reason)) = find_nonlinear_member(&base) {
        return Err(vec![Diagnostic::OrderNotTotal {
            witness: witness.display(base.signature()).to_string(),
            reason,
        }]);
    }
    Ok(base)
}

/// Searches labelled age members on at most three points for one whose
/// order relation is not a strict linear order.
fn find_nonlinear_member(base: &BaseStructure) -> Option<(FinStruct, String)> {
    let sig = base.signature();
    let mut layer = vec![FinStruct::empty(sig, 0)];
    for size in 1..=3usize {
        let new = size - 1;
        let mut tuples = Vec::new();
        for sym in 0..sig.len() {
            for_each_tuple_with(size, sig.arity(sym), new, &mut |t| {
                tuples.push((sym, t.to_vec()));
                true
            });
        }
        let mut next = Vec::new();
        for prefix in &layer {
            for mask in 0u64..(1u64 << tuples.len()) {
                let mut s = prefix.clone();
                s.size = size;
                for (bit, (sym, t)) in tuples.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        s.insert(*sym, t.clone());
                    }
                }
                if !base.in_age_extending(&s, new) {
                    continue;
                }
                if let Some(reason) = linearity_failure(sig, &s) {
                    return Some((s, reason));
                }
                next.push(s);
            }
        }
        layer = next;
    }
    None
}

fn linearity_failure(sig: &Signature, s: &FinStruct) -> Option<String> {
    let lt = |a: usize, b: usize| s.holds(sig.order(), &[a, b]);
    let n = s.size();
    for a in 0..n {
        if lt(a, a) {
            return Some(format!("{}({a},{a}) is reflexive", sig.order_name()));
        }
        for b in 0..n {
            if a == b {
                continue;
            }
            if lt(a, b) && lt(b, a) {
                return Some(format!("{a} and {b} are mutually ordered"));
            }
            if !lt(a, b) && !lt(b, a) {
                return Some(format!("{a} and {b} are incomparable"));
            }
            for c in 0..n {
                if c != a && c != b && lt(a, b) && lt(b, c) && !lt(a, c) {
                    return Some(format!("{a} < {b} < {c} but not {a} < {c}"));
                }
            }
        }
    }
    None
}

/// Is `a` in the age of `base`?
pub fn in_age(base: &BaseStructure, a: &FinStruct) -> bool {
    base.in_age(a)
}

/// All age members on at most `n` points, order in canonical form, in
/// order of size then generation order.
pub fn enumerate_age(base: &BaseStructure, n: usize) -> Vec<FinStruct> {
    let mut all = vec![FinStruct::empty(base.signature(), 0)];
    let mut layer = all.clone();
    for _ in 0..n {
        let next: Vec<FinStruct> = layer.iter().flat_map(|p| base.extend_age_member(p)).collect();
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

/// Age members on exactly `n` points.
pub fn age_members_of_size(base: &BaseStructure, n: usize) -> Vec<FinStruct> {
    let mut layer = vec![FinStruct::empty(base.signature(), 0)];
    for _ in 0..n {
        layer = layer.iter().flat_map(|p| base.extend_age_member(p)).collect();
    }
    layer
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &["dense_linear_order", "ordered_random_graph"];

fn order_bounds() -> Vec<RawBound> {
    let less = |a: usize, b: usize| ("less".to_string(), vec![a, b]);
    vec![
        RawBound {
            size: 1,
            atoms: vec![less(0, 0)],
        },
        RawBound {
            size: 2,
            atoms: vec![],
        },
        RawBound {
            size: 2,
            atoms: vec![less(0, 1), less(1, 0)],
        },
        RawBound {
            size: 3,
            atoms: vec![less(0, 1), less(1, 2), less(2, 0)],
        },
    ]
}

/// Minimal structures over `less`, `edge` on at most 3 points that are not
/// an ordered simple graph, one per isomorphism class. Bounds are matched as
/// induced substructures, so every edge pattern on top of a bad order pattern
/// needs its own bound.
fn ordered_graph_bounds() -> Vec<RawBound> {
    fn good(size: usize, rel: &[[bool; 9]; 2]) -> bool {
        let (less, edge) = (&rel[0], &rel[1]);
        for a in 0..size {
            if less[a * 3 + a] || edge[a * 3 + a] {
                return false;
            }
            for b in 0..size {
                if a != b && (less[a * 3 + b] == less[b * 3 + a] || edge[a * 3 + b] != edge[b * 3 + a]) {
                    return false;
                }
            }
        }
        if size == 3 {
            let l = |a: usize, b: usize| less[a * 3 + b];
            let cyclic = (l(0, 1) && l(1, 2) && l(2, 0)) || (l(0, 2) && l(2, 1) && l(1, 0));
            return !cyclic;
        }
        true
    }
    fn restrict(rel: &[[bool; 9]; 2], keep: &[usize]) -> [[bool; 9]; 2] {
        let mut out = [[false; 9]; 2];
        for r in 0..2 {
            for (i, &a) in keep.iter().enumerate() {
                for (j, &b) in keep.iter().enumerate() {
                    out[r][i * 3 + j] = rel[r][a * 3 + b];
                }
            }
        }
        out
    }
    let perms: [&[usize]; 6] = [&[0, 1, 2], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]];
    let mut seen: BTreeSet<(usize, [[bool; 9]; 2])> = BTreeSet::new();
    let mut bounds = order_bounds();
    for size in 1..=3usize {
        let cells: Vec<usize> = (0..size).flat_map(|a| (0..size).map(move |b| a * 3 + b)).collect();
        let bits = 2 * cells.len();
        for mask in 0u32..(1 << bits) {
            let mut rel = [[false; 9]; 2];
            for (i, &c) in cells.iter().enumerate() {
                rel[0][c] = mask >> i & 1 == 1;
                rel[1][c] = mask >> (i + cells.len()) & 1 == 1;
            }
            if good(size, &rel) {
                continue;
            }
            let proper_ok = (0..size).all(|drop| {
                let keep: Vec<usize> = (0..size).filter(|&x| x != drop).collect();
                good(size - 1, &restrict(&rel, &keep))
            });
            if !proper_ok {
                continue;
            }
            let canon = perms
                .iter()
                .filter(|p| p[..size].iter().all(|&x| x < size))
                .map(|p| restrict(&rel, &p[..size]))
                .min()
                .unwrap();
            if !seen.insert((size, canon)) {
                continue;
            }
            // Skip patterns already present among the pure order bounds.
            if (0..9).all(|c| !rel[1][c]) {
                continue;
            }
            let mut atoms = Vec::new();
            for (r, name) in ["less", "edge"].iter().enumerate() {
                for &c in &cells {
                    if rel[r][c] {
                        atoms.push((name.to_string(), vec![c / 3, c % 3]));
                    }
                }
            }
            bounds.push(RawBound { size, atoms });
        }
    }
    bounds
}

/// Raw description of a builtin base.
pub fn builtin_raw(name: &str) -> Option<RawBase> {
    match name {
        "dense_linear_order" => Some(RawBase {
            name: Some(name.to_string()),
            symbols: vec![("less".to_string(), 2)],
            order_symbol: "less".to_string(),
            bounds: order_bounds(),
        }),
        "ordered_random_graph" => Some(RawBase {
            name: Some(name.to_string()),
            symbols: vec![("less".to_string(), 2), ("edge".to_string(), 2)],
            order_symbol: "less".to_string(),
            bounds: ordered_graph_bounds(),
        }),
        _ => None,
    }
}

/// A validated builtin base.
pub fn builtin(name: &str) -> Option<BaseStructure> {
    builtin_raw(name).map(|raw| validate_base(&raw).expect("builtin bases are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dlo() -> BaseStructure {
        builtin("dense_linear_order").unwrap()
    }

    #[test]
    fn dense_order_parameters() {
        let b = dlo();
        assert_eq!(b.s(), 3);
        assert_eq!(b.n_param(), 3);
        assert_eq!(b.bounds().len(), 4);
    }

    #[test]
    fn missing_cycle_bound_is_reported() {
        let mut raw = builtin_raw("dense_linear_order").unwrap();
        raw.bounds.pop();
        let err = validate_base(&raw).unwrap_err();
        assert!(matches!(err[0], Diagnostic::OrderNotTotal { .. }), "{err:?}");
    }

    #[test]
    fn out_of_range_entry_is_malformed() {
        let mut raw = builtin_raw("dense_linear_order").unwrap();
        raw.bounds.push(RawBound {
            size: 3,
            atoms: vec![("less".into(), vec![0, 5])],
        });
        let err = validate_base(&raw).unwrap_err();
        assert!(matches!(err[0], Diagnostic::MalformedBound { index: 4, .. }), "{err:?}");
    }

    #[test]
    fn arity_mismatch_is_malformed() {
        let mut raw = builtin_raw("dense_linear_order").unwrap();
        raw.bounds.push(RawBound {
            size: 3,
            atoms: vec![("less".into(), vec![0, 1, 2])],
        });
        assert!(validate_base(&raw).is_err());
    }

    #[test]
    fn cycle_is_not_in_age() {
        let b = dlo();
        let sig = b.signature().clone();
        let mut cyc = FinStruct::empty(&sig, 3);
        cyc.insert(0, vec![0, 1]);
        cyc.insert(0, vec![1, 2]);
        cyc.insert(0, vec![2, 0]);
        assert!(!b.in_age(&cyc));
        assert!(b.in_age(&FinStruct::chain(&sig, 4)));
        assert!(b.in_age(&FinStruct::empty(&sig, 0)));
    }

    #[test]
    fn small_ages() {
        assert_eq!(enumerate_age(&dlo(), 2).len(), 3);
        assert_eq!(enumerate_age(&dlo(), 0).len(), 1);
        let g = builtin("ordered_random_graph").unwrap();
        assert_eq!(enumerate_age(&g, 2).len(), 4);
        assert_eq!(age_members_of_size(&g, 3).len(), 8);
    }

    #[test]
    fn tuples_with_element() {
        let mut seen = Vec::new();
        for_each_tuple_with(2, 2, 1, &mut |t| {
            seen.push(t.to_vec());
            true
        });
        assert_eq!(seen, vec![vec![0, 1], vec![1, 0], vec![1, 1]]);
    }
}
