use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::{ahu, canon::CanonicalForm, NodeId, RootedTree, Tree};

/// All rooted-isomorphism classes of trees with `1..=k` nodes, grouped by
/// size and sorted by canonical form within each size.
#[derive(Debug, Clone)]
pub struct RootedTreeSequence {
    forms: Vec<CanonicalForm>,
    sizes: Vec<usize>,
    index: HashMap<CanonicalForm, usize>,
}

impl RootedTreeSequence {
    /// `q`, the total number of trees.
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// 1-based access, matching slot arithmetic.
    pub fn get(&self, z: usize) -> Option<&CanonicalForm> {
        z.checked_sub(1).and_then(|i| self.forms.get(i))
    }

    pub fn forms(&self) -> &[CanonicalForm] {
        &self.forms
    }

    /// `|S_i|` for `i = 1..=k`.
    pub fn count_of_size(&self, i: usize) -> usize {
        self.sizes.get(i.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// 1-based position of a form, if present.
    pub fn position(&self, form: &CanonicalForm) -> Option<usize> {
        self.index.get(form).map(|i| i + 1)
    }
}

pub fn enumerate_rooted_trees(k: usize) -> RootedTreeSequence {
    let mut forms = Vec::new();
    let mut sizes = Vec::new();
    let mut layer: BTreeSet<CanonicalForm> = BTreeSet::new();
    for size in 1..=k {
        layer = if size == 1 { BTreeSet::from([CanonicalForm::leaf()]) } else { grow(&layer) };
        sizes.push(layer.len());
        forms.extend(layer.iter().cloned());
    }
    let index = forms.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
    RootedTreeSequence { forms, sizes, index }
}

/// Every class obtained by hanging one new leaf anywhere on a tree of `prev`.
fn grow(prev: &BTreeSet<CanonicalForm>) -> BTreeSet<CanonicalForm> {
    let mut next = BTreeSet::new();
    for form in prev {
        let tree = form.to_tree().expect("enumerated forms are valid");
        let n = tree.n();
        for attach in 0..n {
            let edges = tree.edges().iter().copied().chain([(attach, n)]);
            let bigger = Tree::new(n + 1, edges).expect("adding a leaf keeps a tree");
            let rt = RootedTree::new(bigger, 0).unwrap();
            next.insert(ahu(&rt, 0).unwrap());
        }
    }
    next
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("subtree at node {node} ({size} nodes) is not in the sequence")]
pub struct NotInSequence {
    pub node: NodeId,
    pub size: usize,
}

/// 1-based index `z` of the sequence member isomorphic to `T_v`.
pub fn index_in_sequence(seq: &RootedTreeSequence, rt: &RootedTree, v: NodeId) -> Result<usize, NotInSequence> {
    let form = ahu(rt, v).map_err(|_| NotInSequence { node: v, size: 0 })?;
    seq.position(&form).ok_or(NotInSequence { node: v, size: rt.subtree_size(v) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::root_at;

    #[test]
    fn small_sequences() {
        assert!(enumerate_rooted_trees(0).is_empty());
        let s1 = enumerate_rooted_trees(1);
        assert_eq!(s1.len(), 1);
        assert_eq!(s1.get(1), Some(&CanonicalForm::leaf()));
        assert_eq!(s1.get(0), None);
        let s4 = enumerate_rooted_trees(4);
        assert_eq!((1..=4).map(|i| s4.count_of_size(i)).collect::<Vec<_>>(), vec![1, 1, 2, 4]);
        assert_eq!(s4.len(), 8);
    }

    #[test]
    fn leaf_index_is_one() {
        let seq = enumerate_rooted_trees(3);
        let rt = root_at(&Tree::star(3), 0).unwrap();
        assert_eq!(index_in_sequence(&seq, &rt, 2), Ok(1));
        assert_eq!(index_in_sequence(&seq, &rt, 1), index_in_sequence(&seq, &rt, 3));
        assert!(index_in_sequence(&seq, &rt, 0).is_err());
    }
}
