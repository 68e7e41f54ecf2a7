//! Shared helpers for the integration tests: builtin bases and seeded random
//! problems.

#![allow(dead_code)]

use std::sync::OnceLock;

use ppdef::age::{builtin, BaseStructure};
use ppdef::behavior::{Budget, Mode};
use ppdef::decide::{DecideOptions, Problem};
use ppdef::formula::{Ast, RelationDef};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dlo() -> &'static BaseStructure {
    static B: OnceLock<BaseStructure> = OnceLock::new();
    B.get_or_init(|| builtin("dense_linear_order").unwrap())
}

pub fn graph() -> &'static BaseStructure {
    static B: OnceLock<BaseStructure> = OnceLock::new();
    B.get_or_init(|| builtin("ordered_random_graph").unwrap())
}

pub fn rel(base: &BaseStructure, name: &str, arity: usize, text: &str) -> RelationDef {
    RelationDef::parse(name, arity, text, base).unwrap()
}

pub fn problem(base: &'static BaseStructure, mode: Mode, target: RelationDef, theta: Vec<RelationDef>) -> Problem<'static> {
    Problem {
        base,
        mode,
        target,
        theta,
    }
}

/// Options for randomized problems: deterministic node and cell budgets.
pub fn random_options() -> DecideOptions {
    DecideOptions {
        budget: Budget {
            nodes: Some(20_000),
            time: None,
            max_cells: 20_000,
        },
        ..DecideOptions::default()
    }
}

fn atom(rng: &mut ChaCha8Rng, base: &BaseStructure, arity: usize) -> Ast {
    let a = rng.gen_range(0..arity);
    let mut b = rng.gen_range(0..arity);
    if arity > 1 {
        while b == a {
            b = rng.gen_range(0..arity);
        }
    }
    let sig = base.signature();
    let choice = rng.gen_range(0..sig.len() + 1);
    let ast = if choice == sig.len() {
        Ast::Eq(a, b)
    } else {
        Ast::Atom {
            symbol: choice,
            args: vec![a, b],
        }
    };
    if rng.gen_bool(0.3) {
        Ast::not(ast)
    } else {
        ast
    }
}

fn formula(rng: &mut ChaCha8Rng, base: &BaseStructure, arity: usize, depth: usize) -> Ast {
    if depth == 0 || rng.gen_bool(0.35) {
        return atom(rng, base, arity);
    }
    let l = formula(rng, base, arity, depth - 1);
    let r = formula(rng, base, arity, depth - 1);
    if rng.gen_bool(0.5) {
        Ast::and(l, r)
    } else {
        Ast::or(l, r)
    }
}

pub fn random_relation(rng: &mut ChaCha8Rng, base: &BaseStructure, name: &str, max_arity: usize) -> RelationDef {
    let arity = if max_arity > 1 && rng.gen_bool(0.9) {
        rng.gen_range(2..=max_arity)
    } else {
        rng.gen_range(1..=max_arity)
    };
    RelationDef::new(name, arity, formula(rng, base, arity, 2), base)
}

/// `count` random pp problems over both builtins: target of arity at most
/// 3, one or two template relations of arity at most 3.
pub fn random_problems(seed: u64, count: usize) -> Vec<Problem<'static>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let base = if rng.gen_bool(0.5) { dlo() } else { graph() };
            let target = random_relation(&mut rng, base, "R0", 3);
            let theta = (0..rng.gen_range(1..=2))
                .map(|i| random_relation(&mut rng, base, &format!("R{}", i + 1), 3))
                .collect();
            problem(base, Mode::Pp, target, theta)
        })
        .collect()
}

/// Same problem with every relation's variables permuted, the template
/// shuffled and its first relation duplicated.
pub fn transformed(p: &Problem<'static>, rng: &mut ChaCha8Rng) -> Problem<'static> {
    let rename = |r: &RelationDef, rng: &mut ChaCha8Rng| {
        let mut map: Vec<usize> = (0..r.arity()).collect();
        map.shuffle(rng);
        RelationDef::new(r.name(), r.arity(), r.ast().rename(&map), p.base)
    };
    let target = rename(&p.target, rng);
    let mut theta: Vec<RelationDef> = p.theta.iter().map(|r| rename(r, rng)).collect();
    theta.push(theta[0].renamed("Dup"));
    theta.shuffle(rng);
    Problem {
        base: p.base,
        mode: p.mode,
        target,
        theta,
    }
}
