//! Independent verification of behavior tables. Nothing here shares code
//! with the search beyond type projection.

use std::collections::HashMap;

use thiserror::Error;

use super::{extend, increasing_subsets, Behavior, ExtendError, Mode, SearchProblem};
use crate::pointed::{constant_self_type, forget_constants, pointed_table, PointedType};
use crate::types::TypeRep;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error(transparent)]
    Extend(#[from] ExtendError),
    #[error("check needs {0} argument tuples, over the limit")]
    TooLarge(usize),
    #[error("problem has no target relation")]
    MissingTarget,
    #[error("behavior does not match the problem: {0}")]
    Mismatch(String),
}

/// Two cells whose arguments agree on positions `i` and `j` respectively but
/// whose values do not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatConflict {
    pub p: Vec<PointedType>,
    pub q: Vec<PointedType>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    /// A tuple of the relation is sent outside it.
    Relation,
    /// Self-embedding mode: a tuple outside the relation is sent into it.
    Complement,
    /// Self-embedding mode: distinct entries are identified.
    Injectivity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreservationFailure {
    /// Index into the template list; `None` for injectivity.
    pub relation: Option<usize>,
    pub kind: FailureKind,
    pub args: Vec<PointedType>,
    pub image: TypeRep,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityFailure {
    pub triple: [TypeRep; 3],
    pub left: TypeRep,
    pub right: TypeRep,
}

/// Checks that equal projections of arguments give equal projections of
/// values, over all index sets, and that positions equal in every argument
/// stay equal in the value. Unassigned cells are skipped.
pub fn check_compatibility(b: &Behavior) -> Result<(), CompatConflict> {
    let n = b.n();
    for size in 1..=n {
        let subsets = increasing_subsets(n, size);
        let mut seen: HashMap<Vec<TypeRep>, (usize, usize, TypeRep)> = HashMap::new();
        for cell in 0..b.len() {
            let Some(v) = b.value(cell) else { continue };
            let args = b.cell_args(cell);
            for (si, s) in subsets.iter().enumerate() {
                let key: Vec<TypeRep> = args.iter().map(|a| a.project(s).full().clone()).collect();
                let img = v.project(s);
                match seen.get(&key) {
                    Some((c2, s2, img2)) => {
                        if *img2 != img {
                            return Err(CompatConflict {
                                p: b.cell_args(*c2).into_iter().cloned().collect(),
                                q: args.into_iter().cloned().collect(),
                                i: subsets[*s2].clone(),
                                j: subsets[si].clone(),
                            });
                        }
                    }
                    None => {
                        seen.insert(key, (cell, si, img));
                    }
                }
            }
        }
    }
    for cell in 0..b.len() {
        let Some(v) = b.value(cell) else { continue };
        let args = b.cell_args(cell);
        for x in 0..n {
            for y in x + 1..n {
                let tied = args.iter().all(|a| a.full().equal(a.k() + x, a.k() + y));
                if tied && !v.equal(x, y) {
                    let p: Vec<PointedType> = args.into_iter().cloned().collect();
                    return Err(CompatConflict {
                        q: p.clone(),
                        p,
                        i: vec![x],
                        j: vec![y],
                    });
                }
            }
        }
    }
    Ok(())
}

/// True iff the image of the constants' self-types lies outside the target.
pub fn check_violation(b: &Behavior, problem: &SearchProblem<'_>) -> Result<bool, CheckError> {
    let target = problem.target.as_ref().ok_or(CheckError::MissingTarget)?;
    let args: Vec<PointedType> = b.constants().iter().map(constant_self_type).collect();
    let image = extend(b, problem.base, &args)?;
    Ok(!target.contains(&image))
}

/// Checks that the behavior maps template tuples into the template (and, in
/// self-embedding mode, non-tuples to non-tuples and distinct entries to
/// distinct entries). `limit` caps the number of argument tuples examined
/// per relation.
pub fn check_preservation(
    b: &Behavior,
    problem: &SearchProblem<'_>,
    limit: usize,
) -> Result<Option<PreservationFailure>, CheckError> {
    if b.constants() != problem.constants.as_slice() {
        return Err(CheckError::Mismatch("constants differ".into()));
    }
    let base = problem.base;
    let ex = problem.mode == Mode::Ex;
    for (r, rel) in problem.theta.iter().enumerate() {
        let p = rel.arity();
        let mut lists: Vec<Vec<PointedType>> = Vec::new();
        for c in b.constants() {
            let sp = pointed_table(base, c, p, limit).map_err(|_| CheckError::TooLarge(limit))?;
            let list: Vec<PointedType> = sp
                .items()
                .iter()
                .filter(|q| ex || rel.contains(&forget_constants(q)))
                .cloned()
                .collect();
            lists.push(list);
        }
        let total = lists
            .iter()
            .fold(1usize, |acc, l| acc.saturating_mul(l.len()));
        if total > limit {
            return Err(CheckError::TooLarge(total));
        }
        let mut failure = None;
        for_each_product(&lists, &mut |args| {
            let image = match extend(b, base, args) {
                Ok(t) => t,
                Err(e) => {
                    failure = Some(Err(e.into()));
                    return false;
                }
            };
            let inside = rel.contains(&image);
            let was = args.iter().all(|a| rel.contains(&forget_constants(a)));
            let kind = if was && !inside {
                Some(FailureKind::Relation)
            } else if ex && !was && inside {
                Some(FailureKind::Complement)
            } else {
                None
            };
            if let Some(kind) = kind {
                failure = Some(Ok(PreservationFailure {
                    relation: Some(r),
                    kind,
                    args: args.to_vec(),
                    image,
                }));
                return false;
            }
            true
        });
        if let Some(f) = failure {
            return f.map(Some);
        }
    }
    if ex {
        for c in b.constants() {
            let sp = pointed_table(base, c, 2, limit).map_err(|_| CheckError::TooLarge(limit))?;
            for q in sp.items() {
                let image = extend(b, base, std::slice::from_ref(q))?;
                if forget_constants(q).partition() != image.partition() {
                    return Ok(Some(PreservationFailure {
                        relation: None,
                        kind: FailureKind::Injectivity,
                        args: vec![q.clone()],
                        image,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Checks `sigma(t1,t2,t3,t3) = sigma(t2,t3,t1,t2)` for all triples of
/// `n`-types, on a behavior with four empty constant tuples.
pub fn check_identity(b: &Behavior) -> Result<(), IdentityFailure> {
    assert_eq!(b.m(), 4, "identity check needs a 4-ary behavior");
    let sp = b.space(0);
    let len = sp.len() as u32;
    for a in 0..len {
        for c in 0..len {
            for d in 0..len {
                let left = b.cell_of_ids(&[a, c, d, d]);
                let right = b.cell_of_ids(&[c, d, a, c]);
                let (l, r) = (b.value(left), b.value(right));
                if l != r || l.is_none() {
                    let ty = |id: u32| forget_constants(sp.get(id));
                    return Err(IdentityFailure {
                        triple: [ty(a), ty(c), ty(d)],
                        left: l.cloned().unwrap_or_else(|| ty(a)),
                        right: r.cloned().unwrap_or_else(|| ty(a)),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Calls `f` on every element of the product of `lists`, stopping when it
/// returns false.
pub(crate) fn for_each_product<T: Clone>(lists: &[Vec<T>], f: &mut dyn FnMut(&[T]) -> bool) {
    if lists.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; lists.len()];
    let mut cur: Vec<T> = lists.iter().map(|l| l[0].clone()).collect();
    loop {
        if !f(&cur) {
            return;
        }
        let mut i = lists.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < lists[i].len() {
                cur[i] = lists[i][idx[i]].clone();
                break;
            }
            idx[i] = 0;
            cur[i] = lists[i][0].clone();
        }
    }
}
