//! Part-subset perturbation plans.
//!
//! Subsets are ordered by size, then lexicographically on their sorted ids,
//! and truncated to the per-image budget. Since the budget must cover every
//! part, all single-part deletions are always part of a plan.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{PartId, PartSet};

pub const DEFAULT_BUDGET: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationPlan {
    pub image_id: String,
    pub subsets: Vec<PartSet>,
    pub budget: usize,
}

impl PerturbationPlan {
    pub fn for_image(image_id: impl Into<String>, parts: &[PartId], budget: usize) -> Result<Self> {
        Ok(PerturbationPlan {
            image_id: image_id.into(),
            subsets: enumerate_plan(parts, budget)?,
            budget,
        })
    }
}

/// Non-empty subsets of `parts` by (size, lexicographic), at most `budget`.
pub fn enumerate_plan(parts: &[PartId], budget: usize) -> Result<Vec<PartSet>> {
    let sorted = PartSet::from_ids(parts.iter().copied())?;
    let ids = sorted.ids();
    let p = ids.len();
    if p == 0 {
        return Err(Error::InvalidPartSet("image has no parts".into()));
    }
    if budget < p {
        return Err(Error::BudgetTooSmall { budget, parts: p });
    }
    let mut out = Vec::with_capacity(budget.min(complete_plan_size(p)));
    'sizes: for k in 1..=p {
        // Lexicographic k-combinations of positions 0..p.
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if out.len() == budget {
                break 'sizes;
            }
            out.push(PartSet::from_sorted_unchecked(idx.iter().map(|&i| ids[i]).collect()));
            let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + p - k) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// `2^p - 1`, saturating.
pub fn complete_plan_size(p: usize) -> usize {
    if p >= usize::BITS as usize {
        usize::MAX
    } else {
        (1usize << p) - 1
    }
}

/// Cumulative prefixes of a removal order: `{o1}, {o1,o2}, ..., {o1..oP}`.
pub fn required_prefix_subsets(order: &[PartId]) -> Vec<PartSet> {
    let mut acc = PartSet::empty();
    order
        .iter()
        .map(|&p| {
            acc = acc.with(p);
            acc.clone()
        })
        .collect()
}
