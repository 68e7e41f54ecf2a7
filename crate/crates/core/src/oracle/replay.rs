//! Finite replay of the product-and-quotient construction behind a witness.
//!
//! Each coordinate gets a finite age member `A_i` containing its constant
//! tuple. On the grid `D = A_1 x .. x A_m` the behavior induces, through its
//! values on pointed types, a structure `Π` and the relation `u ∼ v` (the
//! image of the 2-type of `(u, v)` identifies the two entries). The replay
//! checks that `∼` is a congruence, that the quotient `Π/∼` looks like a
//! substructure of the base on every small subset, and that the map sending
//! each point to its class preserves the template and violates the target.

use std::collections::HashMap;
use std::fmt;

use crate::age::{BaseStructure, FinStruct};
use crate::behavior::{extend, Behavior, Mode};
use crate::decide::Problem;
use crate::pointed::PointedType;
use crate::types::{insert_block, TypeRep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub sizes: Vec<usize>,
    pub points: usize,
    pub classes: usize,
    pub checks: Vec<ReplayCheck>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Name of the first failed check.
    pub fn failure(&self) -> Option<&'static str> {
        self.checks.iter().find(|c| !c.passed).map(|c| c.name)
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        writeln!(
            f,
            "replay: sizes {} points {} classes {}",
            sizes.join(","),
            self.points,
            self.classes
        )?;
        for c in &self.checks {
            write!(f, "replay: {} {}", c.name, if c.passed { "PASS" } else { "FAIL" })?;
            if !c.detail.is_empty() {
                write!(f, " ({})", c.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A finite age member of (at least) `size` elements containing a tuple of
/// type `c`, built deterministically. Returns the member and the placement.
pub fn pointed_grid(base: &BaseStructure, c: &TypeRep, size: usize) -> (FinStruct, Vec<usize>) {
    let mut t = c.clone();
    let mut step = 0usize;
    while t.blocks() < size {
        let b = t.blocks();
        let gap = match step % 3 {
            0 if b >= 2 => b / 2,
            0 | 1 => 0,
            _ => b,
        };
        let options = insert_block(base, &t, gap);
        assert!(!options.is_empty(), "age members extend in every gap");
        t = options[(step * 7 + 3) % options.len()].clone();
        step += 1;
    }
    let placement = t.partition()[..c.arity()].to_vec();
    (t.quotient().clone(), placement)
}

struct Grid<'a> {
    base: &'a BaseStructure,
    behavior: &'a Behavior,
    members: Vec<FinStruct>,
    placements: Vec<Vec<usize>>,
    points: Vec<Vec<usize>>,
}

impl Grid<'_> {
    fn pointed(&self, i: usize, elems: &[usize]) -> PointedType {
        let order = self.base.signature().order();
        let mut tuple = self.placements[i].clone();
        tuple.extend_from_slice(elems);
        let full = TypeRep::of_tuple(&self.members[i], order, &tuple);
        PointedType::new(self.behavior.constants()[i].clone(), full)
    }

    /// Image type of a tuple of grid points under the behavior.
    fn image(&self, pts: &[usize]) -> Result<TypeRep, String> {
        let args: Vec<PointedType> = (0..self.members.len())
            .map(|i| {
                let elems: Vec<usize> = pts.iter().map(|&p| self.points[p][i]).collect();
                self.pointed(i, &elems)
            })
            .collect();
        extend(self.behavior, self.base, &args).map_err(|e| e.to_string())
    }

    /// Type, in coordinate `i`, of the tuple of grid points.
    fn coord_type(&self, i: usize, pts: &[usize]) -> TypeRep {
        let order = self.base.signature().order();
        let elems: Vec<usize> = pts.iter().map(|&p| self.points[p][i]).collect();
        TypeRep::of_tuple(&self.members[i], order, &elems)
    }
}

fn for_each_tuple(n: usize, p: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    let mut idx = vec![0usize; p];
    loop {
        if !f(&idx) {
            return;
        }
        let mut i = p;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
        }
    }
}

fn subsets(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for x in start..n {
            cur.push(x);
            if !rec(x + 1, n, k, cur, f) {
                return false;
            }
            cur.pop();
        }
        true
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Replays the quotient construction for `witness` on grids of the given
/// sizes (one per coordinate, raised to the number of distinct constants
/// where needed).
pub fn replay(witness: &Behavior, problem: &Problem<'_>, sizes: &[usize]) -> ReplayReport {
    let base = problem.base;
    let sig = base.signature();
    let order = sig.order();
    let m = witness.m();
    let mut members = Vec::with_capacity(m);
    let mut placements = Vec::with_capacity(m);
    let mut used_sizes = Vec::with_capacity(m);
    for i in 0..m {
        let c = &witness.constants()[i];
        let size = sizes.get(i).copied().unwrap_or(c.arity() + 2).max(c.blocks());
        let (a, pl) = pointed_grid(base, c, size);
        used_sizes.push(a.size());
        members.push(a);
        placements.push(pl);
    }
    let total: usize = members.iter().map(FinStruct::size).product();
    let mut points = Vec::with_capacity(total);
    for p in 0..total {
        let mut code = p;
        let mut pt = vec![0usize; m];
        for i in (0..m).rev() {
            pt[i] = code % members[i].size();
            code /= members[i].size();
        }
        points.push(pt);
    }
    let grid = Grid {
        base,
        behavior: witness,
        members,
        placements,
        points,
    };
    let np = total;
    let mut checks = Vec::new();
    let report = |checks: Vec<ReplayCheck>, classes: usize| ReplayReport {
        sizes: used_sizes.clone(),
        points: np,
        classes,
        checks,
    };

    // (a) the relation ∼ and its compatibility with Π.
    let mut sim = vec![false; np * np];
    let mut err = None;
    for u in 0..np {
        for v in 0..np {
            match grid.image(&[u, v]) {
                Ok(t) => sim[u * np + v] = t.equal(0, 1),
                Err(e) => {
                    err = Some(e);
                }
            }
        }
    }
    if let Some(e) = err {
        checks.push(ReplayCheck {
            name: "(a) equivalence",
            passed: false,
            detail: format!("extension failed: {e}"),
        });
        return report(checks, 0);
    }
    let mut class_of = vec![usize::MAX; np];
    let mut reps = Vec::new();
    for u in 0..np {
        if class_of[u] == usize::MAX {
            class_of[u] = reps.len();
            for v in u + 1..np {
                if sim[u * np + v] && class_of[v] == usize::MAX {
                    class_of[v] = reps.len();
                }
            }
            reps.push(u);
        }
    }
    let mut equivalence = None;
    'outer: for u in 0..np {
        for v in 0..np {
            if sim[u * np + v] != (class_of[u] == class_of[v]) {
                equivalence = Some(format!("points {u} and {v}"));
                break 'outer;
            }
        }
    }
    // Facts of Π for every base symbol, keyed by point tuples.
    let mut facts: Vec<HashMap<Vec<usize>, bool>> = vec![HashMap::new(); sig.len()];
    let mut congruence = None;
    if equivalence.is_none() {
        for sym in 0..sig.len() {
            let p = sig.arity(sym);
            let positions: Vec<usize> = (0..p).collect();
            for_each_tuple(np, p, &mut |t| {
                let holds = match grid.image(t) {
                    Ok(img) => img.holds(sym, &positions),
                    Err(e) => {
                        congruence = Some(format!("extension failed: {e}"));
                        return false;
                    }
                };
                facts[sym].insert(t.to_vec(), holds);
                true
            });
            if congruence.is_some() {
                break;
            }
            for (t, &holds) in &facts[sym] {
                let rep: Vec<usize> = t.iter().map(|&u| reps[class_of[u]]).collect();
                if facts[sym][&rep] != holds {
                    congruence = Some(format!("{} on points {:?}", sig.name(sym), t));
                    break;
                }
            }
            if congruence.is_some() {
                break;
            }
        }
    }
    let a_fail = equivalence.clone().or(congruence.clone());
    checks.push(ReplayCheck {
        name: "(a) equivalence",
        passed: a_fail.is_none(),
        detail: a_fail.unwrap_or_default(),
    });
    if !checks[0].passed {
        return report(checks, reps.len());
    }

    // The quotient structure on classes.
    let nc = reps.len();
    let mut quotient = FinStruct::empty(sig, nc);
    for (sym, table) in facts.iter().enumerate() {
        let p = sig.arity(sym);
        for_each_tuple(nc, p, &mut |cls| {
            let t: Vec<usize> = cls.iter().map(|&c| reps[c]).collect();
            if table[&t] {
                quotient.insert(sym, cls.to_vec());
            }
            true
        });
    }

    // (b) small substructures of the quotient lie in the age.
    let s = base.s().min(nc);
    let mut age_fail = None;
    for size in 1..=s {
        subsets(nc, size, &mut |cls| {
            if !base.in_age(&quotient.induced(cls)) {
                age_fail = Some(format!("classes {cls:?}"));
                return false;
            }
            true
        });
        if age_fail.is_some() {
            break;
        }
    }
    checks.push(ReplayCheck {
        name: "(b) age",
        passed: age_fail.is_none(),
        detail: age_fail.unwrap_or_default(),
    });
    if !checks[1].passed {
        return report(checks, nc);
    }

    // (c) the map to classes preserves the template.
    let ex = problem.mode == Mode::Ex;
    let mut pres_fail = None;
    for rel in &problem.theta {
        let p = rel.arity();
        for_each_tuple(np, p, &mut |t| {
            let inside = (0..m).all(|i| rel.contains(&grid.coord_type(i, t)));
            if !inside && !ex {
                return true;
            }
            let cls: Vec<usize> = t.iter().map(|&u| class_of[u]).collect();
            let img = TypeRep::of_tuple(&quotient, order, &cls);
            if inside != rel.contains(&img) {
                pres_fail = Some(format!("{} on points {:?}", rel.name(), t));
                return false;
            }
            true
        });
        if pres_fail.is_some() {
            break;
        }
    }
    if ex && pres_fail.is_none() && nc != np {
        pres_fail = Some("distinct points are identified".into());
    }
    checks.push(ReplayCheck {
        name: "(c) preservation",
        passed: pres_fail.is_none(),
        detail: pres_fail.unwrap_or_default(),
    });

    // (d) violation at the constants.
    let k = problem.target.arity();
    let consts: Vec<usize> = (0..k)
        .map(|j| {
            let pt: Vec<usize> = (0..m).map(|i| grid.placements[i][j]).collect();
            class_of[grid.points.iter().position(|q| *q == pt).expect("grid point")]
        })
        .collect();
    let img = TypeRep::of_tuple(&quotient, order, &consts);
    let violated = !problem.target.contains(&img);
    checks.push(ReplayCheck {
        name: "(d) violation",
        passed: violated,
        detail: if violated {
            String::new()
        } else {
            "constants land inside the target".into()
        },
    });
    report(checks, nc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::builtin;
    use crate::formula::RelationDef;
    use crate::pointed::forget_constants;

    fn chain_type(base: &BaseStructure, vals: &[usize]) -> TypeRep {
        let size = vals.iter().max().map_or(0, |m| m + 1);
        let chain = FinStruct::chain(base.signature(), size);
        TypeRep::of_tuple(&chain, base.signature().order(), vals)
    }

    fn lex_type(base: &BaseStructure, a: &TypeRep, b: &TypeRep) -> TypeRep {
        let keys: Vec<(usize, std::cmp::Reverse<usize>)> = (0..a.arity())
            .map(|x| (a.partition()[x], std::cmp::Reverse(b.partition()[x])))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        let ranks: Vec<usize> = keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect();
        chain_type(base, &ranks)
    }

    #[test]
    fn grid_contains_constants() {
        let b = builtin("ordered_random_graph").unwrap();
        for c in crate::types::enumerate_types(&b, 2).unwrap() {
            let (a, pl) = pointed_grid(&b, &c, 5);
            assert_eq!(a.size(), 5);
            assert!(b.in_age(&a));
            assert_eq!(TypeRep::of_tuple(&a, 0, &pl), c);
        }
    }

    #[test]
    fn lex_witness_replays() {
        let b = builtin("dense_linear_order").unwrap();
        let target = RelationDef::parse("Le", 2, "x1<x2 | x1=x2", &b).unwrap();
        let theta = vec![RelationDef::parse("Lt", 2, "x1<x2", &b).unwrap()];
        let constants: Vec<TypeRep> = target.type_set().iter().cloned().collect();
        let w = Behavior::from_fn(&b, constants, 1 << 20, |a| {
            lex_type(&b, &forget_constants(a[0]), &forget_constants(a[1]))
        })
        .unwrap();
        let problem = Problem {
            base: &b,
            mode: Mode::Pp,
            target,
            theta,
        };
        for size in [3, 4] {
            let r = replay(&w, &problem, &[size, size]);
            assert!(r.passed(), "{r}");
            assert_eq!(r.classes, r.points);
        }
    }

    #[test]
    fn constant_witness_collapses_to_one_class() {
        let b = builtin("dense_linear_order").unwrap();
        let target = RelationDef::parse("Ne", 2, "!(x1=x2)", &b).unwrap();
        let theta = vec![RelationDef::parse("Eq", 2, "x1=x2", &b).unwrap()];
        let lt = chain_type(&b, &[0, 1]);
        let all_eq = chain_type(&b, &[0, 0, 0]);
        let w = Behavior::from_fn(&b, vec![lt], 1 << 20, |_| all_eq.clone()).unwrap();
        let problem = Problem {
            base: &b,
            mode: Mode::Ep,
            target,
            theta,
        };
        let r = replay(&w, &problem, &[2]);
        assert!(r.passed(), "{r}");
        assert_eq!(r.classes, 1);
    }

    #[test]
    fn corrupted_table_fails() {
        let b = builtin("dense_linear_order").unwrap();
        let target = RelationDef::parse("Le", 2, "x1<x2 | x1=x2", &b).unwrap();
        let theta = vec![RelationDef::parse("Lt", 2, "x1<x2", &b).unwrap()];
        let constants: Vec<TypeRep> = target.type_set().iter().cloned().collect();
        let mut w = Behavior::from_fn(&b, constants, 1 << 20, |a| {
            lex_type(&b, &forget_constants(a[0]), &forget_constants(a[1]))
        })
        .unwrap();
        let problem = Problem {
            base: &b,
            mode: Mode::Pp,
            target,
            theta,
        };
        // Merge one strictly increasing pair realized on the grid; its
        // reverse pair keeps the old value.
        let args: Vec<PointedType> = (0..2)
            .map(|i| {
                let c = &w.constants()[i];
                let (a, mut tuple) = pointed_grid(&b, c, 3);
                let x = (0..3).find(|&x| (0..3).any(|y| a.holds(0, &[x, y]))).unwrap();
                let y = (0..3).find(|&y| a.holds(0, &[x, y])).unwrap();
                tuple.extend([x, y, y]);
                PointedType::new(c.clone(), TypeRep::of_tuple(&a, 0, &tuple))
            })
            .collect();
        let cell = w.cell_of(&[&args[0], &args[1]]).unwrap();
        w.set(cell, &chain_type(&b, &[0, 0, 0]));
        let r = replay(&w, &problem, &[3, 3]);
        assert!(!r.passed(), "{r}");
    }
}
