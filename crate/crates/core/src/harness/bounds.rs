//! Counting arguments behind the label-length lower bound, made concrete.
//!
//! In the feasibility family (node 0 is `r`, node 1 is `a`), a leaf whose
//! label repeats on its side can never be heard alone, so what `r` can learn
//! is bounded by the labels of `r` and `a` plus the sets of labels that occur
//! exactly once on each side.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::codec::BitString;
use crate::tree::{isomorphic, NodeId, Tree};

/// Largest exponent for which the view bound is also written out in full.
const MATERIALIZE_LIMIT: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub delta: u64,
    pub label_bits: u32,
    /// `log₂` of the bound on distinct views, `2(ℓ+1) + 2^(ℓ+2)`.
    pub views_log2: BigUint,
    /// The bound itself when its exponent is at most 2¹⁶.
    pub views_upper_bound: Option<BigUint>,
    /// Number of trees in the feasibility family, `⌈Δ/2⌉`.
    pub family_size: u64,
    /// Whether labels of `label_bits` bits could give every family member
    /// its own view.
    pub separable: bool,
}

/// Labels of at most `ℓ` bits take fewer than `2^(ℓ+1)` values, so a view
/// (own label plus set of unique labels, for each of `r` and `a`) takes at
/// most `(2^(ℓ+1) · 2^(2^(ℓ+1)))²` values. Exact integer arithmetic.
pub fn pigeonhole_certificate(delta: u64, label_bits: u32) -> Certificate {
    assert!(delta >= 4, "the family needs Δ ≥ 4");
    let l = BigUint::from(label_bits);
    let views_log2 = (l.clone() + 1u32) * 2u32 + (BigUint::one() << (label_bits as usize + 2));
    let family_size = delta - delta / 2;
    let exp = views_log2.to_u64().filter(|&e| e <= MATERIALIZE_LIMIT);
    let views_upper_bound = exp.map(|e| BigUint::one() << e as usize);
    let separable = match &views_upper_bound {
        Some(b) => *b >= BigUint::from(family_size),
        // the family has fewer than 2⁶⁴ members
        None => true,
    };
    Certificate { delta, label_bits, views_log2, views_upper_bound, family_size, separable }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct View {
    pub root_label: BitString,
    pub hub_label: BitString,
    pub root_unique: BTreeSet<BitString>,
    pub hub_unique: BTreeSet<BitString>,
}

fn unique_labels(tree: &Tree, center: NodeId, other: NodeId, labels: &[BitString]) -> BTreeSet<BitString> {
    let mut count: HashMap<&BitString, usize> = HashMap::new();
    for &u in tree.neighbors(center).iter().filter(|&&u| u != other) {
        *count.entry(&labels[u]).or_default() += 1;
    }
    count.into_iter().filter(|(_, c)| *c == 1).map(|(l, _)| l.clone()).collect()
}

/// View of `r` (node 0) in a feasibility-family tree whose `a` is node 1.
pub fn view_of_root(tree: &Tree, labels: &[BitString]) -> View {
    View {
        root_label: labels[0].clone(),
        hub_label: labels[1].clone(),
        root_unique: unique_labels(tree, 0, 1, labels),
        hub_unique: unique_labels(tree, 1, 0, labels),
    }
}

/// Two non-isomorphic family members whose roots share a view, if any.
pub fn view_collision_search(family: &[Tree], labels: &[Vec<BitString>]) -> Option<(usize, usize)> {
    let mut groups: HashMap<View, Vec<usize>> = HashMap::new();
    for (i, t) in family.iter().enumerate() {
        groups.entry(view_of_root(t, &labels[i])).or_default().push(i);
    }
    let mut pairs: Vec<(usize, usize)> = groups
        .values()
        .filter_map(|g| g[1..].iter().find(|&&j| !isomorphic(&family[g[0]], &family[j])).map(|&j| (g[0], j)))
        .collect();
    pairs.sort_unstable();
    pairs.into_iter().next()
}

/// XOR-folds a label into `bits` bits (bit `i` lands in slot `i mod bits`),
/// a lossy stand-in for a shorter labeling.
pub fn fold_label(label: &BitString, bits: usize) -> BitString {
    if bits == 0 {
        return BitString::new();
    }
    let mut out = vec![false; bits];
    for (i, &b) in label.bits().iter().enumerate() {
        out[i % bits] ^= b;
    }
    BitString::from_bits(out)
}
