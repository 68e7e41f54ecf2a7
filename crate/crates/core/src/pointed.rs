//! Types over the base expanded by a tuple of constants.
//!
//! A pointed `n`-type over constants of type `c` (arity `k`) is stored as a
//! full `(k+n)`-type whose first `k` positions realize `c`. The remaining
//! positions are the free ones.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::age::BaseStructure;
use crate::types::{extensions, TypeRep};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointedType {
    base_type: TypeRep,
    full: TypeRep,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PointedError {
    #[error("free position {index} out of range for a pointed type with {free} free positions")]
    IndexOutOfRange { index: usize, free: usize },
    #[error("pointed space over a {arity}-type with {free} free positions exceeds {cap} types")]
    TooLarge { arity: usize, free: usize, cap: usize },
}

impl PointedType {
    /// Wraps `full`, whose first `base_type.arity()` positions must realize
    /// `base_type`.
    pub fn new(base_type: TypeRep, full: TypeRep) -> Self {
        debug_assert_eq!(
            full.project(&(0..base_type.arity()).collect::<Vec<_>>()),
            base_type
        );
        PointedType { base_type, full }
    }

    pub fn base_type(&self) -> &TypeRep {
        &self.base_type
    }

    pub fn full(&self) -> &TypeRep {
        &self.full
    }

    /// Number of constants.
    pub fn k(&self) -> usize {
        self.base_type.arity()
    }

    /// Number of free positions.
    pub fn n(&self) -> usize {
        self.full.arity() - self.base_type.arity()
    }

    /// Projection onto the given free positions (0-based, may repeat),
    /// keeping all constants. Indices are not range-checked.
    pub fn project(&self, free: &[usize]) -> PointedType {
        let k = self.k();
        let positions: Vec<usize> = (0..k).chain(free.iter().map(|&i| i + k)).collect();
        PointedType {
            base_type: self.base_type.clone(),
            full: self.full.project(&positions),
        }
    }
}

/// Projection of `p` onto free positions `indices` (0-based).
pub fn pointed_subtype(p: &PointedType, indices: &[usize]) -> Result<PointedType, PointedError> {
    if let Some(&index) = indices.iter().find(|&&i| i >= p.n()) {
        return Err(PointedError::IndexOutOfRange { index, free: p.n() });
    }
    Ok(p.project(indices))
}

/// The pointed `k`-type whose free positions coincide with the constants.
pub fn constant_self_type(c: &TypeRep) -> PointedType {
    let k = c.arity();
    let positions: Vec<usize> = (0..k).chain(0..k).collect();
    PointedType {
        base_type: c.clone(),
        full: c.project(&positions),
    }
}

/// The plain type of the free tuple.
pub fn forget_constants(p: &PointedType) -> TypeRep {
    let k = p.k();
    let positions: Vec<usize> = (k..p.full.arity()).collect();
    p.full.project(&positions)
}

/// All pointed `n`-types over constants of type `c`, sorted.
pub fn pointed_space(base: &BaseStructure, c: &TypeRep, n: usize) -> Vec<PointedType> {
    pointed_table(base, c, n, usize::MAX)
        .expect("uncapped")
        .items
        .clone()
}

/// Cached, indexed pointed space. Fails when it would hold more than `cap`
/// types (a cached space is returned regardless of `cap`).
pub fn pointed_table(
    base: &BaseStructure,
    c: &TypeRep,
    n: usize,
    cap: usize,
) -> Result<Arc<PointedSpace>, PointedError> {
    let key = (c.clone(), n);
    if let Some(sp) = base.pointed_cache().lock().unwrap().get(&key) {
        return Ok(sp.clone());
    }
    let too_large = || PointedError::TooLarge {
        arity: c.arity(),
        free: n,
        cap,
    };
    // Every type has at least one extension, so layers never shrink and an
    // oversized layer dooms the final one. Growth only speeds up with more
    // points, so the last step's growth rate also gives a rough estimate of
    // the final size; it is allowed some slack.
    let mut layer = vec![c.clone()];
    let mut prev_len = 1usize;
    for step in 0..n {
        if step > 0 {
            let rate = layer.len() as f64 / prev_len.max(1) as f64;
            let estimate = layer.len() as f64 * rate.powi((n - step) as i32);
            if estimate > 4.0 * cap as f64 {
                return Err(too_large());
            }
        }
        let mut next = Vec::new();
        for t in &layer {
            next.extend(extensions(base, t));
            if next.len() > cap {
                return Err(too_large());
            }
        }
        prev_len = layer.len();
        layer = next;
    }
    layer.sort();
    let items: Vec<PointedType> = layer
        .into_iter()
        .map(|full| PointedType {
            base_type: c.clone(),
            full,
        })
        .collect();
    let index = items
        .iter()
        .enumerate()
        .map(|(i, p)| (p.full.clone(), i as u32))
        .collect();
    let sp = Arc::new(PointedSpace {
        constant: c.clone(),
        free: n,
        items,
        index,
    });
    Ok(base
        .pointed_cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert(sp)
        .clone())
}

/// Sorted pointed types of one free arity over one constant type.
#[derive(Debug)]
pub struct PointedSpace {
    constant: TypeRep,
    free: usize,
    items: Vec<PointedType>,
    index: HashMap<TypeRep, u32>,
}

impl PointedSpace {
    pub fn constant(&self) -> &TypeRep {
        &self.constant
    }

    pub fn free(&self) -> usize {
        self.free
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: u32) -> &PointedType {
        &self.items[id as usize]
    }

    pub fn items(&self) -> &[PointedType] {
        &self.items
    }

    pub fn id_of(&self, p: &PointedType) -> Option<u32> {
        if p.base_type != self.constant {
            return None;
        }
        self.index.get(&p.full).copied()
    }

    pub fn id_of_full(&self, full: &TypeRep) -> Option<u32> {
        self.index.get(full).copied()
    }
}
