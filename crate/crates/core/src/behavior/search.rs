//! Backtracking search for behaviors.
//!
//! Variables are the cells of every arity `j = 1..n`: `m`-tuples of pointed
//! `j`-types. A cell's domain is a bitset over `S_j`. For each `n`-cell `u`
//! and each map `I: [j] -> [n]` (other than the identity) the value of the
//! cell `u∘I` must equal the value of `u` composed with `I`. These functional
//! constraints express compatibility (including permutations and diagonals).
//! Unary masks encode preservation for relations of arity at most `n`, the
//! self-embedding conditions and the violation at the constants. Identity
//! mode merges the cells related by the identity into one variable.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;
use std::time::Instant;

use super::checks::{check_compatibility, check_identity, check_preservation, check_violation};
use super::{Behavior, Budget, Mode, SearchProblem};
use crate::pointed::{constant_self_type, forget_constants, pointed_table, PointedSpace};
use crate::types::{type_table, TypeTable};

/// Limit on argument tuples examined by the final self-check.
const VERIFY_LIMIT: usize = 20_000_000;

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(Behavior),
    Exhausted,
    ResourceLimit(String),
}

impl SearchOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub cells: usize,
    pub nodes: u64,
    pub backtracks: u64,
    pub revisions: u64,
    pub leaf_rejections: u64,
}

struct MapInfo {
    /// Length of the map, i.e. the arity of the target cell.
    j: usize,
    /// Per coordinate: pointed `n`-type id to pointed `j`-type id.
    fwd: Vec<Vec<u32>>,
    /// Per coordinate: pointed `j`-type id to all its preimages.
    rev: Vec<Vec<Vec<u32>>>,
    /// `S_n` id to `S_j` id.
    proj: Vec<u32>,
    /// Per `S_j` id, the bitset of its preimages in `S_n`.
    pre: Vec<u64>,
}

struct Layer {
    radix: Vec<usize>,
    words: usize,
    class_of: Vec<u32>,
    member_off: Vec<u32>,
    members: Vec<u32>,
    dom: Vec<u64>,
    in_queue: Vec<bool>,
    /// Bitset of every type of this arity.
    full: Vec<u64>,
}

impl Layer {
    fn classes(&self) -> usize {
        self.member_off.len() - 1
    }

    fn members(&self, class: u32) -> &[u32] {
        let c = class as usize;
        &self.members[self.member_off[c] as usize..self.member_off[c + 1] as usize]
    }

    fn dom(&self, class: u32) -> &[u64] {
        let w = self.words;
        &self.dom[class as usize * w..(class as usize + 1) * w]
    }

    fn decode(&self, mut cell: usize, out: &mut [u32]) {
        for i in (0..self.radix.len()).rev() {
            out[i] = (cell % self.radix[i]) as u32;
            cell /= self.radix[i];
        }
    }

    fn encode(&self, ids: &[u32]) -> usize {
        let mut idx = 0;
        for (r, &id) in self.radix.iter().zip(ids) {
            idx = idx * r + id as usize;
        }
        idx
    }
}

struct Trail {
    entries: Vec<(u8, u32, u64)>,
}

struct Engine<'p, 'a> {
    problem: &'p SearchProblem<'a>,
    n: usize,
    m: usize,
    types: Vec<Arc<TypeTable>>,
    spaces: Vec<Vec<Arc<PointedSpace>>>,
    maps: Vec<MapInfo>,
    /// Map ids grouped by their length `j`.
    maps_by_len: Vec<Vec<usize>>,
    layers: Vec<Layer>,
    queue: VecDeque<(u8, u32)>,
    trail: Trail,
    stats: SearchStats,
    budget: Budget,
    start: Instant,
    limit_hit: Option<String>,
    needs_leaf_check: bool,
}

fn bit(set: &[u64], i: usize) -> bool {
    set[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(set: &mut [u64], i: usize) {
    set[i / 64] |= 1 << (i % 64);
}

fn ones(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(w, &word)| {
        let mut x = word;
        std::iter::from_fn(move || {
            if x == 0 {
                None
            } else {
                let b = x.trailing_zeros() as usize;
                x &= x - 1;
                Some(w * 64 + b)
            }
        })
    })
}

fn count(set: &[u64]) -> u32 {
    set.iter().map(|w| w.count_ones()).sum()
}

fn full_set(len: usize) -> Vec<u64> {
    let mut v = vec![0u64; len.div_ceil(64).max(1)];
    for i in 0..len {
        set_bit(&mut v, i);
    }
    v
}

/// All maps `[j] -> [n]` for `j = 1..n`, except the identity on `[n]`.
fn all_maps(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for j in 1..=n {
        for code in 0..n.pow(j as u32) {
            let mut seq = vec![0usize; j];
            let mut c = code;
            for x in seq.iter_mut().rev() {
                *x = c % n;
                c /= n;
            }
            if !(j == n && seq.iter().enumerate().all(|(a, &b)| a == b)) {
                out.push(seq);
            }
        }
    }
    out
}

/// Table of `p ↦ p∘seq` on the pointed `n`-space, where `n = sp.len() - 1`.
/// The map is split into an increasing projection onto its image followed
/// by a map on the smaller space; direct tables are cached by their key.
fn factored_projection(
    sp: &[Arc<PointedSpace>],
    seq: &[usize],
    cache: &mut HashMap<Vec<usize>, Vec<u32>>,
) -> Vec<u32> {
    let n = sp.len() - 1;
    let mut img = seq.to_vec();
    img.sort_unstable();
    img.dedup();
    let r = img.len();
    let direct = |from: usize, seq: &[usize]| -> Vec<u32> {
        sp[from]
            .items()
            .iter()
            .map(|p| sp[seq.len()].id_of(&p.project(seq)).expect("projection stays in space"))
            .collect()
    };
    let mut key = vec![n];
    key.extend_from_slice(&img);
    let first: Vec<u32> = if r == n {
        (0..sp[n].len() as u32).collect()
    } else {
        cache.entry(key).or_insert_with(|| direct(n, &img)).clone()
    };
    let pi: Vec<usize> = seq
        .iter()
        .map(|x| img.binary_search(x).expect("in image"))
        .collect();
    if pi.len() == r && pi.iter().enumerate().all(|(a, &b)| a == b) {
        return first;
    }
    let mut key = vec![r];
    key.extend_from_slice(&pi);
    let second = cache.entry(key).or_insert_with(|| direct(r, &pi));
    first.iter().map(|&x| second[x as usize]).collect()
}

enum Built<'p, 'a> {
    Ready(Box<Engine<'p, 'a>>),
    Limit(String),
}

impl<'p, 'a> Engine<'p, 'a> {
    fn build(problem: &'p SearchProblem<'a>, budget: &Budget) -> Built<'p, 'a> {
        let base = problem.base;
        let n = problem.n();
        let m = problem.m();
        let start = Instant::now();
        let types: Vec<Arc<TypeTable>> = (0..=n).map(|j| type_table(base, j)).collect();

        let mut spaces: Vec<Vec<Arc<PointedSpace>>> = Vec::with_capacity(m);
        for c in &problem.constants {
            let mut per = Vec::with_capacity(n + 1);
            per.push(match pointed_table(base, c, 0, budget.max_cells) {
                Ok(sp) => sp,
                Err(e) => return Built::Limit(e.to_string()),
            });
            for j in 1..=n {
                match pointed_table(base, c, j, budget.max_cells) {
                    Ok(sp) => per.push(sp),
                    Err(e) => return Built::Limit(e.to_string()),
                }
            }
            spaces.push(per);
        }
        let top_cells = spaces
            .iter()
            .fold(1usize, |acc, s| acc.saturating_mul(s[n].len()));
        if top_cells > budget.max_cells {
            return Built::Limit(format!(
                "{top_cells} cells exceed the cell budget of {}",
                budget.max_cells
            ));
        }

        let words_n = types[n].len().div_ceil(64).max(1);
        let mut maps = Vec::new();
        let mut maps_by_len = vec![Vec::new(); n + 1];
        let mut tables: Vec<HashMap<Vec<usize>, Vec<u32>>> = vec![HashMap::new(); m];
        for seq in all_maps(n) {
            let j = seq.len();
            let mut fwd = Vec::with_capacity(m);
            let mut rev = Vec::with_capacity(m);
            for (coord, sp) in spaces.iter().enumerate() {
                let f = factored_projection(sp, &seq, &mut tables[coord]);
                let mut r = vec![Vec::new(); sp[j].len()];
                for (pid, &q) in f.iter().enumerate() {
                    r[q as usize].push(pid as u32);
                }
                fwd.push(f);
                rev.push(r);
            }
            let proj: Vec<u32> = types[n]
                .types()
                .iter()
                .map(|t| types[j].id_of(&t.project(&seq)).expect("projection is a type"))
                .collect();
            let mut pre = vec![0u64; types[j].len() * words_n];
            for (t, &s) in proj.iter().enumerate() {
                set_bit(&mut pre[s as usize * words_n..(s as usize + 1) * words_n], t);
            }
            maps_by_len[j].push(maps.len());
            maps.push(MapInfo {
                j,
                fwd,
                rev,
                proj,
                pre,
            });
        }

        let mut layers = Vec::with_capacity(n);
        for j in 1..=n {
            let radix: Vec<usize> = spaces.iter().map(|s| s[j].len()).collect();
            let cells = radix.iter().product::<usize>();
            let words = types[j].len().div_ceil(64).max(1);
            layers.push(Layer {
                radix,
                words,
                class_of: (0..cells as u32).collect(),
                member_off: (0..=cells as u32).collect(),
                members: (0..cells as u32).collect(),
                dom: Vec::new(),
                in_queue: Vec::new(),
                full: full_set(types[j].len()),
            });
        }
        if problem.mode == Mode::Identity {
            for layer in &mut layers {
                merge_identity_classes(layer);
            }
        }

        let needs_leaf_check = problem.theta.iter().any(|r| r.arity() > n)
            || problem.target.as_ref().is_some_and(|t| t.arity() > n);

        let mut engine = Engine {
            problem,
            n,
            m,
            types,
            spaces,
            maps,
            maps_by_len,
            layers,
            queue: VecDeque::new(),
            trail: Trail {
                entries: Vec::new(),
            },
            stats: SearchStats {
                cells: top_cells,
                ..SearchStats::default()
            },
            budget: budget.clone(),
            start,
            limit_hit: None,
            needs_leaf_check,
        };
        engine.init_domains();
        Built::Ready(Box::new(engine))
    }

    /// Unary masks for every class.
    fn init_domains(&mut self) {
        let problem = self.problem;
        let n = self.n;
        let m = self.m;
        let ex = problem.mode == Mode::Ex;
        // forget[i][j][q] = S_j id of forget_constants of pointed j-type q.
        let forget: Vec<Vec<Vec<u32>>> = self
            .spaces
            .iter()
            .map(|per| {
                (0..=n)
                    .map(|j| {
                        per[j]
                            .items()
                            .iter()
                            .map(|p| {
                                self.types[j]
                                    .id_of(&forget_constants(p))
                                    .expect("plain type")
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // Relation masks over S_j for relations of arity j <= n.
        let rel_masks: Vec<(usize, Vec<u64>)> = problem
            .theta
            .iter()
            .filter(|r| r.arity() <= n)
            .map(|r| {
                let j = r.arity();
                let mut mask = vec![0u64; self.types[j].len().div_ceil(64).max(1)];
                for (id, t) in self.types[j].types().iter().enumerate() {
                    if r.contains(t) {
                        set_bit(&mut mask, id);
                    }
                }
                (j, mask)
            })
            .collect();
        let violation_cell: Option<(usize, usize)> = match &problem.target {
            Some(t) if t.arity() <= n && t.arity() >= 1 => {
                let k = t.arity();
                let ids: Vec<u32> = problem
                    .constants
                    .iter()
                    .zip(&self.spaces)
                    .map(|(c, per)| per[k].id_of(&constant_self_type(c)).expect("self type"))
                    .collect();
                Some((k, self.layers[k - 1].encode(&ids)))
            }
            _ => None,
        };
        let target_mask: Option<Vec<u64>> = problem.target.as_ref().and_then(|t| {
            let k = t.arity();
            (k <= n && k >= 1).then(|| {
                let mut mask = vec![0u64; self.types[k].len().div_ceil(64).max(1)];
                for (id, ty) in self.types[k].types().iter().enumerate() {
                    if t.contains(ty) {
                        set_bit(&mut mask, id);
                    }
                }
                mask
            })
        });
        // Self-loop filters for n-maps.
        let fixed: Vec<Vec<u64>> = self.maps_by_len[n]
            .iter()
            .map(|&mi| {
                let mut f = vec![0u64; self.layers[n - 1].words];
                for (t, &s) in self.maps[mi].proj.iter().enumerate() {
                    if s as usize == t {
                        set_bit(&mut f, t);
                    }
                }
                f
            })
            .collect();

        for li in 0..n {
            let j = li + 1;
            let words = self.layers[li].words;
            let ntypes = self.types[j].len();
            let all = full_set(ntypes);
            let cells = self.layers[li].class_of.len();
            let mut cell_mask = vec![0u64; cells * words];
            let mut ids = vec![0u32; m];
            for cell in 0..cells {
                let mask = &mut cell_mask[cell * words..(cell + 1) * words];
                mask.copy_from_slice(&all);
                self.layers[li].decode(cell, &mut ids);
                for (rj, rmask) in &rel_masks {
                    if *rj != j {
                        continue;
                    }
                    let inside = (0..m).all(|i| bit(rmask, forget[i][j][ids[i] as usize] as usize));
                    if inside {
                        for (a, b) in mask.iter_mut().zip(rmask) {
                            *a &= b;
                        }
                    } else if ex {
                        for (a, b) in mask.iter_mut().zip(rmask) {
                            *a &= !b;
                        }
                    }
                }
                if ex {
                    let f = self.types[j].get(forget[0][j][ids[0] as usize]);
                    for (id, t) in self.types[j].types().iter().enumerate() {
                        if t.partition() != f.partition() {
                            mask[id / 64] &= !(1 << (id % 64));
                        }
                    }
                }
                if violation_cell == Some((j, cell)) {
                    let tm = target_mask.as_ref().expect("target mask");
                    for (a, b) in mask.iter_mut().zip(tm) {
                        *a &= !b;
                    }
                }
                if j == n {
                    for (fi, &mi) in self.maps_by_len[n].iter().enumerate() {
                        let map = &self.maps[mi];
                        if (0..m).all(|i| map.fwd[i][ids[i] as usize] == ids[i]) {
                            for (a, b) in mask.iter_mut().zip(&fixed[fi]) {
                                *a &= b;
                            }
                        }
                    }
                }
            }
            let layer = &mut self.layers[li];
            let classes = layer.classes();
            layer.dom = vec![0u64; classes * words];
            for c in 0..classes {
                let d = &mut layer.dom[c * words..(c + 1) * words];
                d.copy_from_slice(&all);
                let (lo, hi) = (layer.member_off[c] as usize, layer.member_off[c + 1] as usize);
                for &cell in &layer.members[lo..hi] {
                    let cm = &cell_mask[cell as usize * words..(cell as usize + 1) * words];
                    for (a, b) in d.iter_mut().zip(cm) {
                        *a &= b;
                    }
                }
            }
            layer.in_queue = vec![false; classes];
        }
    }

    fn over_budget(&mut self) -> bool {
        if self.limit_hit.is_some() {
            return true;
        }
        if let Some(t) = self.budget.time {
            if self.start.elapsed() > t {
                self.limit_hit = Some(format!("time budget of {} ms exhausted", t.as_millis()));
                return true;
            }
        }
        false
    }

    fn enqueue(&mut self, li: usize, class: u32) {
        let layer = &mut self.layers[li];
        if !layer.in_queue[class as usize] {
            layer.in_queue[class as usize] = true;
            self.queue.push_back((li as u8, class));
        }
    }

    fn clear_queue(&mut self) {
        while let Some((li, c)) = self.queue.pop_front() {
            self.layers[li as usize].in_queue[c as usize] = false;
        }
    }

    /// Intersects the domain of `class` with `mask`. Returns `Some(changed)`
    /// or `None` on wipe-out.
    fn restrict(&mut self, li: usize, class: u32, mask: &[u64]) -> Option<bool> {
        let layer = &mut self.layers[li];
        let w = layer.words;
        let base = class as usize * w;
        let mut changed = false;
        let mut empty = true;
        for (k, &mk) in mask.iter().enumerate().take(w) {
            let old = layer.dom[base + k];
            let new = old & mk;
            if new != old {
                self.trail.entries.push((li as u8, (base + k) as u32, old));
                layer.dom[base + k] = new;
                changed = true;
            }
            if new != 0 {
                empty = false;
            }
        }
        if empty {
            return None;
        }
        if changed {
            self.enqueue(li, class);
        }
        Some(changed)
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.entries.len() > mark {
            let (li, at, old) = self.trail.entries.pop().expect("nonempty");
            self.layers[li as usize].dom[at as usize] = old;
        }
    }

    /// Runs the queue to a fixed point. False on wipe-out or budget exhaustion.
    fn propagate(&mut self) -> bool {
        let n = self.n;
        let m = self.m;
        let mut ids = vec![0u32; m];
        let mut tgt = vec![0u32; m];
        let mut pos = vec![0usize; m];
        let mut src: Vec<u64> = Vec::new();
        let mut members: Vec<u32> = Vec::new();
        let mut mask: Vec<u64> = Vec::new();
        let mut hits: Vec<u32> = Vec::new();
        let words_n = self.layers[n - 1].words;
        while let Some((li8, class)) = self.queue.pop_front() {
            let li = li8 as usize;
            self.layers[li].in_queue[class as usize] = false;
            if self.stats.revisions & 0xffff == 0 && self.over_budget() {
                self.clear_queue();
                return false;
            }
            let j = li + 1;
            src.clear();
            src.extend_from_slice(self.layers[li].dom(class));
            members.clear();
            members.extend_from_slice(self.layers[li].members(class));

            // Forward: value(u∘I) ⊆ value(u)∘I.
            if j == n {
                for mi in 0..self.maps.len() {
                    let tj = self.maps[mi].j;
                    mask.clear();
                    mask.resize(self.layers[tj - 1].words, 0);
                    for t in ones(&src) {
                        set_bit(&mut mask, self.maps[mi].proj[t] as usize);
                    }
                    if mask == self.layers[tj - 1].full {
                        continue;
                    }
                    for &cell in &members {
                        self.layers[li].decode(cell as usize, &mut ids);
                        for i in 0..m {
                            tgt[i] = self.maps[mi].fwd[i][ids[i] as usize];
                        }
                        let tcell = self.layers[tj - 1].encode(&tgt);
                        let tclass = self.layers[tj - 1].class_of[tcell];
                        self.stats.revisions += 1;
                        if self.restrict(tj - 1, tclass, &mask).is_none() {
                            self.clear_queue();
                            return false;
                        }
                    }
                }
            }

            // Backward: value(u) must project into value(u∘I).
            for k in 0..self.maps_by_len[j].len() {
                let mi = self.maps_by_len[j][k];
                mask.clear();
                mask.resize(words_n, 0);
                for s in ones(&src) {
                    let p = &self.maps[mi].pre[s * words_n..(s + 1) * words_n];
                    for (a, b) in mask.iter_mut().zip(p) {
                        *a |= b;
                    }
                }
                if mask == self.layers[n - 1].full {
                    continue;
                }
                hits.clear();
                let map = &self.maps[mi];
                let top = &self.layers[n - 1];
                for &cell in &members {
                    self.layers[li].decode(cell as usize, &mut ids);
                    if (0..m).any(|i| map.rev[i][ids[i] as usize].is_empty()) {
                        continue;
                    }
                    pos.iter_mut().for_each(|p| *p = 0);
                    loop {
                        for i in 0..m {
                            tgt[i] = map.rev[i][ids[i] as usize][pos[i]];
                        }
                        hits.push(top.class_of[top.encode(&tgt)]);
                        let mut i = m;
                        let mut done = true;
                        while i > 0 {
                            i -= 1;
                            pos[i] += 1;
                            if pos[i] < map.rev[i][ids[i] as usize].len() {
                                done = false;
                                break;
                            }
                            pos[i] = 0;
                        }
                        if done {
                            break;
                        }
                    }
                }
                for &uclass in &hits {
                    self.stats.revisions += 1;
                    if self.restrict(n - 1, uclass, &mask).is_none() {
                        self.clear_queue();
                        return false;
                    }
                }
            }
        }
        true
    }

    fn value_order(&self, li: usize, class: u32) -> Vec<u32> {
        let j = li + 1;
        let dom = self.layers[li].dom(class);
        let table = &self.types[j];
        let mut ids = vec![0u32; self.m];
        self.layers[li].decode(self.layers[li].members(class)[0] as usize, &mut ids);
        let forgets: Vec<u32> = (0..self.m)
            .map(|i| {
                table
                    .id_of(&forget_constants(self.spaces[i][j].get(ids[i])))
                    .expect("plain type")
            })
            .collect();
        let mut out: Vec<u32> = Vec::new();
        match self.problem.mode {
            Mode::Pp | Mode::Identity | Mode::Ex => {
                for &f in &forgets {
                    if bit(dom, f as usize) && !out.contains(&f) {
                        out.push(f);
                    }
                }
                for t in ones(dom) {
                    if !out.contains(&(t as u32)) {
                        out.push(t as u32);
                    }
                }
            }
            Mode::Ep => {
                let mut all: Vec<u32> = ones(dom).map(|t| t as u32).collect();
                all.sort_by_key(|&t| (table.get(t).blocks(), t));
                out = all;
            }
        }
        out
    }

    fn behavior(&self) -> Behavior {
        let n = self.n;
        let layer = &self.layers[n - 1];
        let cells = layer.class_of.len();
        let table: Vec<Option<u32>> = (0..cells)
            .map(|cell| {
                let d = layer.dom(layer.class_of[cell]);
                (count(d) == 1).then(|| ones(d).next().expect("singleton") as u32)
            })
            .collect();
        Behavior::from_raw(
            n,
            self.problem.constants.clone(),
            self.spaces.iter().map(|per| per[n].clone()).collect(),
            self.types[n].clone(),
            table,
        )
    }

    /// Conditions that involve arities above `n`.
    fn leaf_ok(&mut self, b: &Behavior) -> bool {
        if !self.needs_leaf_check {
            return true;
        }
        let problem = self.problem;
        let n = self.n;
        if let Some(t) = &problem.target {
            if t.arity() > n && !check_violation(b, problem).unwrap_or(false) {
                return false;
            }
        }
        match check_preservation(b, problem, self.budget.max_cells) {
            Ok(None) => true,
            Ok(Some(_)) => false,
            Err(e) => {
                self.limit_hit = Some(format!("preservation check: {e}"));
                false
            }
        }
    }

    fn run(&mut self) -> SearchOutcome {
        let n = self.n;
        // Static variable order: arity ascending, then class id.
        let order: Vec<(usize, u32)> = (0..n)
            .flat_map(|li| (0..self.layers[li].classes() as u32).map(move |c| (li, c)))
            .collect();
        for li in 0..n {
            for c in 0..self.layers[li].classes() as u32 {
                if count(self.layers[li].dom(c)) == 0 {
                    return SearchOutcome::Exhausted;
                }
                self.enqueue(li, c);
            }
        }
        if !self.propagate() {
            return self.finish_fail();
        }

        struct Frame {
            li: usize,
            class: u32,
            pos: usize,
            values: Vec<u32>,
            next: usize,
            mark: usize,
        }
        let mut stack: Vec<Frame> = Vec::new();
        let mut scan = 0usize;
        loop {
            // Descend to the next unassigned variable.
            while scan < order.len() && {
                let (li, c) = order[scan];
                count(self.layers[li].dom(c)) == 1
            } {
                scan += 1;
            }
            if scan == order.len() {
                let b = self.behavior();
                if self.leaf_ok(&b) {
                    return SearchOutcome::Found(b);
                }
                if self.limit_hit.is_some() {
                    return self.finish_fail();
                }
                self.stats.leaf_rejections += 1;
            } else {
                let (li, class) = order[scan];
                let values = self.value_order(li, class);
                stack.push(Frame {
                    li,
                    class,
                    pos: scan,
                    values,
                    next: 0,
                    mark: self.trail.entries.len(),
                });
            }
            // Try the next value of the top frame, backtracking as needed.
            loop {
                let Some(top) = stack.last_mut() else {
                    return self.finish_fail();
                };
                let mark = top.mark;
                if top.next >= top.values.len() {
                    stack.pop();
                    self.stats.backtracks += 1;
                    self.undo_to(mark);
                    continue;
                }
                let (li, class, value, pos) = (top.li, top.class, top.values[top.next], top.pos);
                top.next += 1;
                self.undo_to(mark);
                if let Some(limit) = self.budget.nodes {
                    if self.stats.nodes >= limit {
                        self.limit_hit = Some(format!("node budget of {limit} exhausted"));
                        return self.finish_fail();
                    }
                }
                self.stats.nodes += 1;
                if self.stats.nodes & 0xff == 0 && self.over_budget() {
                    return self.finish_fail();
                }
                let mut single = vec![0u64; self.layers[li].words];
                set_bit(&mut single, value as usize);
                let ok = self.restrict(li, class, &single).is_some() && self.propagate();
                if self.limit_hit.is_some() {
                    return self.finish_fail();
                }
                if ok {
                    scan = pos + 1;
                    break;
                }
                self.clear_queue();
            }
        }
    }

    fn finish_fail(&self) -> SearchOutcome {
        match &self.limit_hit {
            Some(msg) => SearchOutcome::ResourceLimit(msg.clone()),
            None => SearchOutcome::Exhausted,
        }
    }
}

/// Union of the cells `(t1,t2,t3,t3)` and `(t2,t3,t1,t2)` for all `t1,t2,t3`.
fn merge_identity_classes(layer: &mut Layer) {
    let len = layer.radix[0];
    let cells = layer.class_of.len();
    let mut uf: Vec<u32> = (0..cells as u32).collect();
    fn find(uf: &mut [u32], x: u32) -> u32 {
        let mut r = x;
        while uf[r as usize] != r {
            r = uf[r as usize];
        }
        let mut y = x;
        while uf[y as usize] != r {
            let next = uf[y as usize];
            uf[y as usize] = r;
            y = next;
        }
        r
    }
    for a in 0..len as u32 {
        for c in 0..len as u32 {
            for d in 0..len as u32 {
                let l = layer.encode(&[a, c, d, d]) as u32;
                let r = layer.encode(&[c, d, a, c]) as u32;
                let (rl, rr) = (find(&mut uf, l), find(&mut uf, r));
                if rl != rr {
                    uf[rl.max(rr) as usize] = rl.min(rr);
                }
            }
        }
    }
    let mut class_of = vec![u32::MAX; cells];
    let mut classes = 0u32;
    let mut root_class = vec![u32::MAX; cells];
    for cell in 0..cells as u32 {
        let r = find(&mut uf, cell);
        if root_class[r as usize] == u32::MAX {
            root_class[r as usize] = classes;
            classes += 1;
        }
        class_of[cell as usize] = root_class[r as usize];
    }
    let mut member_off = vec![0u32; classes as usize + 1];
    for &c in &class_of {
        member_off[c as usize + 1] += 1;
    }
    for c in 0..classes as usize {
        member_off[c + 1] += member_off[c];
    }
    let mut fill = member_off.clone();
    let mut members = vec![0u32; cells];
    for (cell, &c) in class_of.iter().enumerate() {
        members[fill[c as usize] as usize] = cell as u32;
        fill[c as usize] += 1;
    }
    layer.class_of = class_of;
    layer.member_off = member_off;
    layer.members = members;
}

/// Searches for a behavior solving `problem`. A found behavior is re-checked
/// by the independent checkers before it is returned.
pub fn search(problem: &SearchProblem<'_>, budget: &Budget) -> (SearchOutcome, SearchStats) {
    if let Err(e) = problem.validate() {
        return (SearchOutcome::ResourceLimit(e.to_string()), SearchStats::default());
    }
    if budget.nodes == Some(0) {
        return (
            SearchOutcome::ResourceLimit("node budget of 0 exhausted".into()),
            SearchStats::default(),
        );
    }
    let mut engine = match Engine::build(problem, budget) {
        Built::Ready(e) => e,
        Built::Limit(msg) => return (SearchOutcome::ResourceLimit(msg), SearchStats::default()),
    };
    let outcome = engine.run();
    let stats = engine.stats.clone();
    if let SearchOutcome::Found(b) = &outcome {
        verify_found(b, problem);
    }
    (outcome, stats)
}

fn verify_found(b: &Behavior, problem: &SearchProblem<'_>) {
    assert!(b.is_complete(), "search returned a partial table");
    if let Err(c) = check_compatibility(b) {
        panic!("search returned an incompatible table: {c:?}");
    }
    match check_preservation(b, problem, VERIFY_LIMIT) {
        Ok(None) => {}
        Ok(Some(f)) => panic!("search returned a table failing preservation: {f:?}"),
        Err(e) => panic!("preservation re-check failed: {e}"),
    }
    if problem.mode == Mode::Identity {
        if let Err(f) = check_identity(b) {
            panic!("search returned a table failing the identity: {f:?}");
        }
    } else {
        assert!(
            check_violation(b, problem).expect("violation re-check"),
            "search returned a table without violation"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_count() {
        let maps = all_maps(3);
        assert_eq!(maps.len(), 3 + 9 + 27 - 1);
        assert!(!maps.contains(&vec![0, 1, 2]));
        assert!(maps.contains(&vec![2, 1, 0]));
        assert_eq!(all_maps(1).len(), 0);
    }

    #[test]
    fn bit_helpers() {
        let mut s = vec![0u64; 2];
        set_bit(&mut s, 3);
        set_bit(&mut s, 70);
        assert_eq!(ones(&s).collect::<Vec<_>>(), vec![3, 70]);
        assert_eq!(count(&s), 2);
        assert_eq!(count(&full_set(65)), 65);
    }
}
