//! Stage-by-stage 2-tree construction from a measure.
//!
//! Stage 0 is the root (the whole space). At each later stage every leaf of
//! positive measure that contains at least two positive atoms is split into two
//! disjoint children of positive measure. ε is half the smallest leaf
//! measure; on a finite algebra the atom partition only stays below ε while
//! every atom is lighter than ε, which is recorded per stage.

use crate::measure::KeislerMeasure;
use crate::relation::{union_of_atoms, Expr, Formula};
use crate::scalar::{self, Scalar};

/// Leaves larger than this are split greedily instead of exhaustively.
const EXACT_SPLIT_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// The leaf carries a single positive atom; no split into two positive parts exists.
    SingleAtom,
    /// The requested depth was reached.
    MaxDepth,
}

#[derive(Clone, Debug)]
pub struct TreeNode<S> {
    pub formula: Formula,
    /// Positive-weight type ids under this node.
    pub atoms: Vec<usize>,
    pub measure: S,
    pub depth: usize,
    pub parent: Option<usize>,
    pub children: Option<(usize, usize)>,
    pub stop: Option<StopReason>,
}

#[derive(Clone, Debug)]
pub struct Stage<S> {
    pub epsilon: S,
    /// Whether every atom weighs less than ε (the refinement the construction asks for).
    pub fine_partition: bool,
}

#[derive(Clone, Debug)]
pub struct TwoTree<S> {
    pub nodes: Vec<TreeNode<S>>,
    pub stages: Vec<Stage<S>>,
}

impl<S: Scalar> TwoTree<S> {
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode<S>> {
        self.nodes.iter().filter(|n| n.children.is_none())
    }

    /// Every leaf sits at depth `d` and every internal node has two children.
    pub fn is_complete(&self, d: usize) -> bool {
        self.leaves().all(|l| l.depth == d)
    }

    fn is_ancestor(&self, anc: usize, mut node: usize) -> bool {
        while let Some(p) = self.nodes[node].parent {
            if p == anc {
                return true;
            }
            node = p;
        }
        false
    }

    /// Checks the structural invariants against the cached extensions.
    pub fn verify(&self) -> std::result::Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.measure <= S::zero() {
                return Err(format!("node {i} has nonpositive measure"));
            }
            if let Some((l, r)) = n.children {
                let (el, er) = (self.nodes[l].formula.extension(), self.nodes[r].formula.extension());
                if !el.is_disjoint(er) {
                    return Err(format!("children of node {i} overlap"));
                }
                if !el.is_subset(n.formula.extension()) || !er.is_subset(n.formula.extension()) {
                    return Err(format!("children of node {i} escape their parent"));
                }
            }
        }
        for i in 0..self.nodes.len() {
            for j in i + 1..self.nodes.len() {
                if self.is_ancestor(i, j) || self.is_ancestor(j, i) {
                    continue;
                }
                if !self.nodes[i]
                    .formula
                    .extension()
                    .is_disjoint(self.nodes[j].formula.extension())
                {
                    return Err(format!("incomparable nodes {i} and {j} overlap"));
                }
            }
        }
        Ok(())
    }
}

fn weight_of<S: Scalar>(mu: &KeislerMeasure<S>, ids: &[usize]) -> S {
    scalar::sum(ids.iter().map(|&i| mu.weight(i)))
}

/// Splits `atoms` (ascending, all positive) into two parts minimizing the
/// imbalance; the first part always holds the lowest id and ties go to the
/// lexicographically smallest first part.
fn best_split<S: Scalar>(mu: &KeislerMeasure<S>, atoms: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let total = weight_of(mu, atoms);
    let m = atoms.len();
    if m > EXACT_SPLIT_LIMIT {
        // largest-first greedy
        let mut order: Vec<usize> = atoms.to_vec();
        order.sort_by(|a, b| {
            mu.weight(*b)
                .partial_cmp(&mu.weight(*a))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(b))
        });
        let (mut left, mut right) = (vec![atoms[0]], Vec::new());
        let (mut wl, mut wr) = (mu.weight(atoms[0]), S::zero());
        for id in order.into_iter().filter(|&i| i != atoms[0]) {
            if wl <= wr {
                wl = wl + mu.weight(id);
                left.push(id);
            } else {
                wr = wr + mu.weight(id);
                right.push(id);
            }
        }
        if right.is_empty() {
            right.push(left.pop().expect("m > 1"));
        }
        left.sort_unstable();
        right.sort_unstable();
        return (left, right);
    }
    let mut best: Option<(S, Vec<usize>)> = None;
    // masks over atoms[1..]; the full mask would leave the other side empty
    for mask in 0u64..(1u64 << (m - 1)) - 1 {
        let mut part = vec![atoms[0]];
        part.extend((1..m).filter(|k| mask >> (k - 1) & 1 == 1).map(|k| atoms[k]));
        let w = weight_of(mu, &part);
        let rest = total.clone() - w.clone();
        let imbalance = w.abs_diff(&rest);
        let better = match &best {
            None => true,
            Some((bi, bp)) => imbalance < *bi || (imbalance == *bi && part < *bp),
        };
        if better {
            best = Some((imbalance, part));
        }
    }
    let left = best.expect("at least one split").1;
    let right: Vec<usize> = atoms.iter().copied().filter(|a| !left.contains(a)).collect();
    (left, right)
}

fn node_formula<S: Scalar>(mu: &KeislerMeasure<S>, atoms: &[usize]) -> Formula {
    let space = mu.space();
    let sigs: Vec<_> = atoms.iter().map(|&i| &space.types()[i].trace).collect();
    union_of_atoms(space.relation(), space.side(), sigs)
}

/// Builds the 2-tree of `mu` down to `max_depth` stages.
pub fn build_two_tree<S: Scalar>(mu: &KeislerMeasure<S>, max_depth: usize) -> TwoTree<S> {
    let space = mu.space();
    let rel = space.relation();
    let root = TreeNode {
        formula: rel
            .formula(space.side(), Expr::True)
            .expect("TRUE has no atoms"),
        atoms: mu.support().collect(),
        measure: mu.total(),
        depth: 0,
        parent: None,
        children: None,
        stop: None,
    };
    let mut tree = TwoTree {
        nodes: vec![root],
        stages: Vec::new(),
    };
    let max_atom = scalar::max(mu.weights().values().cloned());
    let mut frontier = vec![0usize];
    for stage in 0..max_depth {
        let splittable: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&i| tree.nodes[i].atoms.len() >= 2)
            .collect();
        for &i in &frontier {
            if tree.nodes[i].atoms.len() < 2 {
                tree.nodes[i].stop = Some(StopReason::SingleAtom);
            }
        }
        if splittable.is_empty() {
            frontier.clear();
            break;
        }
        let min_leaf = splittable
            .iter()
            .map(|&i| tree.nodes[i].measure.clone())
            .fold(None::<S>, |acc, m| match acc {
                Some(a) if a <= m => Some(a),
                _ => Some(m),
            })
            .expect("nonempty");
        let epsilon = min_leaf / S::from_count(2);
        tree.stages.push(Stage {
            fine_partition: max_atom < epsilon,
            epsilon,
        });
        let mut next = Vec::new();
        for i in splittable {
            let (left, right) = best_split(mu, &tree.nodes[i].atoms);
            let mut ids = [0usize; 2];
            for (slot, part) in [left, right].into_iter().enumerate() {
                let node = TreeNode {
                    formula: node_formula(mu, &part),
                    measure: weight_of(mu, &part),
                    atoms: part,
                    depth: stage + 1,
                    parent: Some(i),
                    children: None,
                    stop: None,
                };
                tree.nodes.push(node);
                ids[slot] = tree.nodes.len() - 1;
            }
            tree.nodes[i].children = Some((ids[0], ids[1]));
            next.extend(ids);
        }
        frontier = next;
    }
    for i in frontier {
        if tree.nodes[i].stop.is_none() {
            tree.nodes[i].stop = Some(if tree.nodes[i].atoms.len() < 2 {
                StopReason::SingleAtom
            } else {
                StopReason::MaxDepth
            });
        }
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::full_subsets;
    use crate::measure::{average, dirac};
    use crate::relation::Side;
    use crate::types::compute_type_space;
    use crate::Rational;
    use std::sync::Arc;

    fn uniform(k: usize) -> KeislerMeasure<Rational> {
        let rel = Arc::new(full_subsets(k));
        let sp = Arc::new(compute_type_space(&rel, Side::Phi));
        let all: Vec<usize> = (0..1 << k).collect();
        average(&sp, &all).unwrap()
    }

    #[test]
    fn dirac_gives_root_only() {
        let rel = Arc::new(full_subsets(2));
        let sp = Arc::new(compute_type_space(&rel, Side::Phi));
        let d: KeislerMeasure<Rational> = dirac(&sp, 2).unwrap();
        let t = build_two_tree(&d, 5);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].stop, Some(StopReason::SingleAtom));
        t.verify().unwrap();
    }

    #[test]
    fn uniform_four_atoms_depth_two() {
        let mu = uniform(2);
        let t = build_two_tree(&mu, 10);
        assert_eq!(t.depth(), 2);
        assert!(t.is_complete(2));
        assert_eq!(t.nodes.len(), 7);
        // first split pairs {0,1} against {2,3}
        let (l, r) = t.nodes[0].children.unwrap();
        assert_eq!(t.nodes[l].atoms, vec![0, 1]);
        assert_eq!(t.nodes[r].atoms, vec![2, 3]);
        assert_eq!(t.stages[0].epsilon, Rational::from_ratio(1, 2));
        assert!(t.stages[0].fine_partition);
        assert!(!t.stages[1].fine_partition);
        t.verify().unwrap();
    }

    #[test]
    fn uneven_weights_split_one_branch() {
        let rel = Arc::new(full_subsets(2));
        let sp = Arc::new(compute_type_space(&rel, Side::Phi));
        let q = |n, d| Rational::from_ratio(n, d);
        let mu = KeislerMeasure::new(&sp, [(0, q(1, 2)), (1, q(1, 4)), (2, q(1, 4))]).unwrap();
        let t = build_two_tree(&mu, 5);
        assert_eq!(t.depth(), 2);
        let (l, r) = t.nodes[0].children.unwrap();
        assert_eq!(t.nodes[l].atoms, vec![0]);
        assert_eq!(t.nodes[r].atoms, vec![1, 2]);
        assert_eq!(t.nodes[l].stop, Some(StopReason::SingleAtom));
        assert!(!t.is_complete(2));
        t.verify().unwrap();
    }

    #[test]
    fn max_depth_truncates() {
        let t = build_two_tree(&uniform(3), 1);
        assert_eq!(t.depth(), 1);
        assert!(t.leaves().all(|l| l.stop == Some(StopReason::MaxDepth)));
    }

    #[test]
    fn greedy_split_on_large_leaf() {
        let mu = uniform(5);
        let t = build_two_tree(&mu, 5);
        assert!(t.is_complete(5));
        t.verify().unwrap();
    }
}
