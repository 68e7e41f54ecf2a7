//! Finite partial witnesses found by brute force.
//!
//! A partial witness lives on a grid `A_1 x .. x A_m` of finite age members,
//! each carrying a placement of its constant tuple. It assigns the grid
//! points an image tuple (given by its type) that preserves the template
//! facts of the grid and sends the constants outside the target. A
//! polymorphism violating the target restricts to such a table on every
//! grid, so the search asks for one on every grid of the given size; only
//! then is a witness reported.

use crate::age::{age_members_of_size, BaseStructure, FinStruct};
use crate::behavior::Mode;
use crate::decide::Problem;
use crate::types::{extensions, TypeRep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialWitness {
    pub mode: Mode,
    /// The constant types, one per coordinate.
    pub constants: Vec<TypeRep>,
    /// The age member of each coordinate.
    pub grids: Vec<FinStruct>,
    /// Position of the constant tuple inside each grid.
    pub placements: Vec<Vec<usize>>,
    /// Grid points in table order; `points[j][i]` is coordinate `i`.
    pub points: Vec<Vec<usize>>,
    /// Type of the image tuple `(g(points[0]), g(points[1]), ..)`.
    pub image: TypeRep,
    /// Indices into `points` of the constant tuple.
    pub violated_at: Vec<usize>,
    /// Grid combinations on which a table was found.
    pub combinations: usize,
}

struct Constraint {
    relation: usize,
    /// Indices into the point order.
    args: Vec<usize>,
    /// Whether the grid tuple lies in the relation.
    inside: bool,
}

struct Grid<'b> {
    base: &'b BaseStructure,
    points: Vec<Vec<usize>>,
    /// Constraints whose largest point index is `j`.
    at: Vec<Vec<Constraint>>,
    violated_at: Vec<usize>,
}

fn tuple_type(a: &FinStruct, order: usize, t: &[usize]) -> TypeRep {
    TypeRep::of_tuple(a, order, t)
}

/// All placements of a tuple of type `c` inside `a`.
fn placements(a: &FinStruct, order: usize, c: &TypeRep) -> Vec<Vec<usize>> {
    let k = c.arity();
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(
        a: &FinStruct,
        order: usize,
        c: &TypeRep,
        i: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i == cur.len() {
            if TypeRep::of_tuple(a, order, cur) == *c {
                out.push(cur.clone());
            }
            return;
        }
        for x in 0..a.size() {
            cur[i] = x;
            rec(a, order, c, i + 1, cur, out);
        }
    }
    rec(a, order, c, 0, &mut cur, &mut out);
    out
}

impl<'b> Grid<'b> {
    fn new(problem: &Problem<'b>, grids: &[FinStruct], places: &[Vec<usize>]) -> Self {
        let base = problem.base;
        let order = base.signature().order();
        let m = grids.len();
        let k = problem.target.arity();
        // Constant points first, then the rest in lexicographic order.
        let mut points: Vec<Vec<usize>> = Vec::new();
        let mut violated_at = Vec::with_capacity(k);
        for j in 0..k {
            let p: Vec<usize> = (0..m).map(|i| places[i][j]).collect();
            let idx = match points.iter().position(|q| *q == p) {
                Some(idx) => idx,
                None => {
                    points.push(p);
                    points.len() - 1
                }
            };
            violated_at.push(idx);
        }
        let total: usize = grids.iter().map(FinStruct::size).product();
        for mut code in 0..total {
            let mut p = vec![0usize; m];
            for i in (0..m).rev() {
                p[i] = code % grids[i].size();
                code /= grids[i].size();
            }
            if !points.contains(&p) {
                points.push(p);
            }
        }
        let np = points.len();
        let mut at: Vec<Vec<Constraint>> = (0..np).map(|_| Vec::new()).collect();
        let ex = problem.mode == Mode::Ex;
        for (relation, rel) in problem.theta.iter().enumerate() {
            let p = rel.arity();
            let mut idx = vec![0usize; p];
            loop {
                let inside = (0..m).all(|i| {
                    let t: Vec<usize> = idx.iter().map(|&j| points[j][i]).collect();
                    rel.contains(&tuple_type(&grids[i], order, &t))
                });
                if inside || ex {
                    let last = *idx.iter().max().expect("arity >= 1");
                    at[last].push(Constraint {
                        relation,
                        args: idx.clone(),
                        inside,
                    });
                }
                let mut i = p;
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    idx[i] += 1;
                    if idx[i] < np {
                        done = false;
                        break;
                    }
                    idx[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
        Grid {
            base,
            points,
            at,
            violated_at,
        }
    }

    /// Depth-first search for the image type: `Ok(None)` when no table
    /// exists, `Err` when the node budget runs out.
    fn solve(&self, problem: &Problem<'_>, nodes: &mut u64, budget: u64) -> Result<Option<TypeRep>, ()> {
        let np = self.points.len();
        let ex = problem.mode == Mode::Ex;
        let constants_done = self.violated_at.iter().max().map_or(0, |&x| x + 1);
        let mut stack: Vec<(TypeRep, Vec<TypeRep>, usize)> = Vec::new();
        let start = TypeRep::empty(self.base.signature());
        let mut first = extensions(self.base, &start);
        first.reverse();
        stack.push((start, first, 0));
        while let Some(top) = stack.last_mut() {
            let Some(cand) = top.1.pop() else {
                stack.pop();
                continue;
            };
            *nodes += 1;
            if *nodes > budget {
                return Err(());
            }
            let j = cand.arity() - 1;
            let mut ok = true;
            if ex {
                ok = (0..j).all(|prev| !cand.equal(prev, j));
            }
            if ok {
                for c in &self.at[j] {
                    let r = &problem.theta[c.relation];
                    let img = r.contains(&cand.project(&c.args));
                    if (c.inside && !img) || (ex && !c.inside && img) {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && j + 1 == constants_done {
                let img = cand.project(&self.violated_at);
                if problem.target.contains(&img) {
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            if j + 1 == np {
                return Ok(Some(cand));
            }
            let mut next = extensions(self.base, &cand);
            next.reverse();
            stack.push((cand, next, j + 1));
        }
        Ok(None)
    }
}

/// Result of a brute-force search over all grids of one size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BruteOutcome {
    Found(PartialWitness),
    /// Some grid admits no table.
    NoTable,
    /// The node budget ran out first.
    Budget,
}

/// Searches for partial witnesses on every grid of `grid_size`-element age
/// members (at least as many as the constants need). pp mode uses one
/// coordinate per target type; ep and ex modes try each target type as the
/// single constant. `None` when some grid admits no table or the node budget
/// runs out.
pub fn brute_partial_witness(
    problem: &Problem<'_>,
    grid_size: usize,
    node_budget: u64,
) -> Option<PartialWitness> {
    match brute_search(problem, grid_size, node_budget) {
        BruteOutcome::Found(w) => Some(w),
        _ => None,
    }
}

/// Like [`brute_partial_witness`], but tells a missing table apart from an
/// exhausted budget. In ep and ex modes the budget applies per constant.
pub fn brute_search(problem: &Problem<'_>, grid_size: usize, node_budget: u64) -> BruteOutcome {
    let types: Vec<TypeRep> = problem.target.type_set().iter().cloned().collect();
    if types.is_empty() {
        return BruteOutcome::NoTable;
    }
    match problem.mode {
        Mode::Pp => witness_for(problem, &types, grid_size, node_budget),
        _ => {
            let mut out = BruteOutcome::NoTable;
            for c in &types {
                match witness_for(problem, std::slice::from_ref(c), grid_size, node_budget) {
                    BruteOutcome::Found(w) => return BruteOutcome::Found(w),
                    BruteOutcome::Budget => out = BruteOutcome::Budget,
                    BruteOutcome::NoTable => {}
                }
            }
            out
        }
    }
}

fn witness_for(
    problem: &Problem<'_>,
    constants: &[TypeRep],
    grid_size: usize,
    node_budget: u64,
) -> BruteOutcome {
    let base = problem.base;
    let order = base.signature().order();
    let mut options: Vec<Vec<(FinStruct, Vec<usize>)>> = Vec::new();
    for c in constants {
        let size = grid_size.max(c.blocks());
        let mut opts = Vec::new();
        for a in age_members_of_size(base, size) {
            for pl in placements(&a, order, c) {
                opts.push((a.clone(), pl));
            }
        }
        if opts.is_empty() {
            return BruteOutcome::NoTable;
        }
        options.push(opts);
    }
    let mut nodes = 0u64;
    let mut first: Option<PartialWitness> = None;
    let mut combinations = 0usize;
    let mut idx = vec![0usize; options.len()];
    loop {
        let grids: Vec<FinStruct> = idx.iter().zip(&options).map(|(&i, o)| o[i].0.clone()).collect();
        let places: Vec<Vec<usize>> = idx.iter().zip(&options).map(|(&i, o)| o[i].1.clone()).collect();
        let grid = Grid::new(problem, &grids, &places);
        match grid.solve(problem, &mut nodes, node_budget) {
            Ok(Some(image)) => {
                combinations += 1;
                if first.is_none() {
                    first = Some(PartialWitness {
                        mode: problem.mode,
                        constants: constants.to_vec(),
                        grids,
                        placements: places,
                        points: grid.points.clone(),
                        image,
                        violated_at: grid.violated_at.clone(),
                        combinations: 0,
                    });
                }
            }
            Ok(None) => return BruteOutcome::NoTable,
            Err(()) => return BruteOutcome::Budget,
        }
        let mut i = idx.len();
        let mut done = true;
        while i > 0 {
            i -= 1;
            idx[i] += 1;
            if idx[i] < options[i].len() {
                done = false;
                break;
            }
            idx[i] = 0;
        }
        if done {
            break;
        }
    }
    match first {
        Some(mut w) => {
            w.combinations = combinations;
            BruteOutcome::Found(w)
        }
        None => BruteOutcome::NoTable,
    }
}

/// Re-checks a partial witness directly: every template fact among grid
/// points is preserved (ex mode: exactly reflected, and points stay
/// distinct), and the constants land outside the target.
pub fn verify_partial_witness(w: &PartialWitness, problem: &Problem<'_>) -> bool {
    let base = problem.base;
    let order = base.signature().order();
    let np = w.points.len();
    let m = w.grids.len();
    if w.image.arity() != np || w.constants.len() != m || !base.in_age(w.image.quotient()) {
        return false;
    }
    for i in 0..m {
        let c: Vec<usize> = w.violated_at.iter().map(|&j| w.points[j][i]).collect();
        if TypeRep::of_tuple(&w.grids[i], order, &c) != w.constants[i] {
            return false;
        }
    }
    if problem.target.contains(&w.image.project(&w.violated_at)) {
        return false;
    }
    let ex = problem.mode == Mode::Ex;
    if ex {
        for a in 0..np {
            for b in a + 1..np {
                if w.image.equal(a, b) {
                    return false;
                }
            }
        }
    }
    for rel in &problem.theta {
        let p = rel.arity();
        let mut idx = vec![0usize; p];
        loop {
            let inside = (0..m).all(|i| {
                let t: Vec<usize> = idx.iter().map(|&j| w.points[j][i]).collect();
                rel.contains(&TypeRep::of_tuple(&w.grids[i], order, &t))
            });
            let img = rel.contains(&w.image.project(&idx));
            if (inside && !img) || (ex && !inside && img) {
                return false;
            }
            let mut i = p;
            let mut done = true;
            while i > 0 {
                i -= 1;
                idx[i] += 1;
                if idx[i] < np {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
            if done {
                break;
            }
        }
    }
    true
}
