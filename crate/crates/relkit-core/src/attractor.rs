//! Attractor-block certification, omega limit sets, and block search.
//!
//! The certification test is purely combinatorial: a box set B is certified
//! when no relation pair leads from B into the closure of its complement.
//! Because the relation raster and the complement closure over-approximate
//! while the combinatorial interior under-approximates, a positive verdict
//! is rigorous for the denoted objects; a negative verdict only means "not
//! certified at this resolution".

use std::collections::BTreeSet;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::{BoxId, BoxSet};
use crate::relation::BoxRelation;

/// Outcome of a block certification.
#[derive(Debug, Clone)]
pub struct BlockVerdict {
    pub is_block: bool,
    /// Pairs (source in B, target in closure-of-complement of B), empty when
    /// certified.
    pub witnesses: Vec<(BoxId, BoxId)>,
}

/// Result of an omega-limit computation.
#[derive(Debug, Clone)]
pub struct OmegaResult {
    pub limit: BoxSet,
    /// Iterations before the iterate sequence entered its cycle.
    pub transient: usize,
    pub stabilized: bool,
}

/// Outcome of an attractor-block search inside a neighborhood.
#[derive(Debug, Clone)]
pub enum BlockSearch {
    Found(BoxSet),
    /// Growth left the neighborhood; the frontier is the overhang.
    Escaped { frontier: BoxSet },
}

impl BlockSearch {
    pub fn found(self) -> Option<BoxSet> {
        match self {
            BlockSearch::Found(b) => Some(b),
            BlockSearch::Escaped { .. } => None,
        }
    }
}

/// Test `rel ∩ (B x closure-of-complement(B)) = ∅`, listing every violating
/// pair. A true verdict certifies that the denoted relation maps the denoted
/// closed B into its interior.
pub fn is_attractor_block(rel: &BoxRelation, block: &BoxSet) -> Result<BlockVerdict> {
    rel.check_grid_set(block)?;
    let forbidden = block.closure_of_complement();
    let mut witnesses = Vec::new();
    for &(p, q) in rel.pairs() {
        if block.contains(p) && forbidden.contains(q) {
            witnesses.push((p, q));
        }
    }
    Ok(BlockVerdict {
        is_block: witnesses.is_empty(),
        witnesses,
    })
}

pub fn default_iteration_cap(set: &BoxSet) -> usize {
    10 * set.grid().len()
}

/// Omega limit of a box set under the relation, via the tail-union formula.
///
/// The iterate images S, f(S), f^2(S), ... live in a finite lattice, so the
/// sequence eventually cycles; the limit of the tail unions is the union of
/// one full cycle. For a certified attractor block the sequence is monotone
/// decreasing and the cycle is a fixed point.
pub fn omega_limit(rel: &BoxRelation, set: &BoxSet) -> Result<OmegaResult> {
    omega_limit_capped(rel, set, default_iteration_cap(set))
}

pub fn omega_limit_capped(rel: &BoxRelation, set: &BoxSet, cap: usize) -> Result<OmegaResult> {
    rel.check_grid_set(set)?;
    let mut seen: HashMap<Vec<BoxId>, usize> = HashMap::new();
    let mut history: Vec<BoxSet> = Vec::new();
    let mut current = set.clone();
    for step in 0..=cap {
        let key: Vec<BoxId> = current.boxes().iter().copied().collect();
        if let Some(&enter) = seen.get(&key) {
            let mut union = BTreeSet::new();
            for s in &history[enter..] {
                union.extend(s.boxes().iter().copied());
            }
            let limit = BoxSet::from_boxes(set.grid(), union)?;
            return Ok(OmegaResult {
                limit,
                transient: enter,
                stabilized: true,
            });
        }
        seen.insert(key, step);
        history.push(current.clone());
        current = rel.image(&current)?;
    }
    Err(Error::CapExceeded { cap })
}

/// Omega limit of a certified block; errors when the certification
/// hypothesis fails.
pub fn attractor_from_block(rel: &BoxRelation, block: &BoxSet) -> Result<BoxSet> {
    let verdict = is_attractor_block(rel, block)?;
    if !verdict.is_block {
        return Err(Error::Precondition(format!(
            "set is not a certified attractor block ({} violating pairs)",
            verdict.witnesses.len()
        )));
    }
    Ok(omega_limit(rel, block)?.limit)
}

/// Box-level invariance: image(S) equals S exactly.
pub fn is_invariant(rel: &BoxRelation, set: &BoxSet) -> Result<bool> {
    Ok(rel.image(set)? == *set)
}

/// Search for a certified attractor block inside the neighborhood N.
///
/// Starts from the omega limit of N and grows by the image plus the Moore
/// ring the image needs for interiority. A fixed point of that growth is a
/// certified block; growth past N reports the escape frontier instead.
pub fn find_attractor_block(rel: &BoxRelation, neighborhood: &BoxSet) -> Result<BlockSearch> {
    rel.check_grid_set(neighborhood)?;
    let omega = omega_limit(rel, neighborhood)?.limit;
    let mut current = omega;
    loop {
        if !current.is_subset(neighborhood) {
            return Ok(BlockSearch::Escaped {
                frontier: current.difference(neighborhood)?,
            });
        }
        let image = rel.image(&current)?;
        let needed = image.fatten();
        let next = current.union(&needed)?;
        if next == current {
            debug_assert!(is_attractor_block(rel, &current)?.is_block);
            return Ok(BlockSearch::Found(current));
        }
        current = next;
    }
}
