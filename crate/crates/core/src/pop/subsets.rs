//! Variable subsets of the LCEP and the running intersection property.

use std::collections::BTreeSet;

use super::{PopProblem, Tag};
use crate::error::{Error, Result};

/// Subsets of an LCEP instance: `{x₀ⁱ, tⁱ}` per input coordinate, then per
/// hidden layer feeding another layer `{xʲ, zʲ}` and `{uʲ, zʲ}`, and
/// `{uᵏ, zᵏ}` for the last layer. Each subset is sorted by id.
///
/// Fails if a non-bad constraint fits no subset.
pub fn build_subsets(pop: &PopProblem) -> Result<Vec<Vec<u32>>> {
    let layout = pop
        .layout
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("problem has no network layout".into()))?;
    let pair = |a: u32, b: u32| if a < b { vec![a, b] } else { vec![b, a] };
    let mut subsets: Vec<Vec<u32>> = layout
        .x[0]
        .iter()
        .zip(&layout.t)
        .map(|(&x, &t)| pair(x, t))
        .collect();
    let m = layout.depth();
    for layer in 1..m {
        let (x, z) = (&layout.x[layer], &layout.z[layer - 1]);
        subsets.extend(x.iter().zip(z).map(|(&a, &b)| pair(a, b)));
        let u = &layout.u[layer - 1];
        subsets.extend(u.iter().zip(z).map(|(&a, &b)| pair(a, b)));
    }
    subsets.extend(layout.u[m - 1].iter().zip(&layout.z[m - 1]).map(|(&a, &b)| pair(a, b)));

    let sets: Vec<BTreeSet<u32>> = subsets.iter().map(|s| s.iter().copied().collect()).collect();
    for (index, c) in pop.constraints.iter().enumerate() {
        if c.tag == Tag::Bad {
            continue;
        }
        let support = c.poly.support();
        if !sets.iter().any(|s| support.is_subset(s)) {
            return Err(Error::UncoveredConstraint { index });
        }
    }
    Ok(subsets)
}

/// Position of the first subset breaking the running intersection property,
/// if any.
pub fn rip_violation(subsets: &[Vec<u32>]) -> Option<usize> {
    let mut union: BTreeSet<u32> = BTreeSet::new();
    let sets: Vec<BTreeSet<u32>> = subsets.iter().map(|s| s.iter().copied().collect()).collect();
    for (k, set) in sets.iter().enumerate() {
        if k > 0 {
            let inter: BTreeSet<u32> = set.intersection(&union).copied().collect();
            if !sets[..k].iter().any(|prev| inter.is_subset(prev)) {
                return Some(k);
            }
        }
        union.extend(set);
    }
    None
}

/// True iff, for every `k`, `I_{k+1} ∩ (I₁ ∪ … ∪ I_k)` lies inside one earlier subset.
pub fn verify_rip(subsets: &[Vec<u32>]) -> bool {
    rip_violation(subsets).is_none()
}
