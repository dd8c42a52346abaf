//! Ladder index, order property, VC dimension and finite double limits.

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::relation::AmbientRelation;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// φ(a_i, b_j) iff i < j.
    Less,
    /// φ(a_i, b_j) iff i > j.
    Greater,
}

/// Distinct rows `a_0..a_{n-1}` and distinct columns `b_0..b_{n-1}` forming a
/// ladder; diagonal entries are unconstrained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LadderWitness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub direction: Direction,
}

impl LadderWitness {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn verify(&self, rel: &AmbientRelation) -> bool {
        let n = self.rows.len();
        if self.cols.len() != n {
            return false;
        }
        let distinct = |v: &[usize]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        };
        if !distinct(&self.rows) || !distinct(&self.cols) {
            return false;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let want = match self.direction {
                    Direction::Less => i < j,
                    Direction::Greater => i > j,
                };
                if rel.entry(self.rows[i], self.cols[j]) != want {
                    return false;
                }
            }
        }
        true
    }
}

/// Precomputed compatibility sets for one ladder direction.
struct Kernel {
    /// Columns allowed after `a` has been placed: `b` with want(a, b) = 1.
    next_cols: Vec<FixedBitSet>,
    /// Rows allowed after `b` has been placed: `a` with want(a, b) = 0.
    next_rows: Vec<FixedBitSet>,
    rows: usize,
    cols: usize,
}

impl Kernel {
    fn new(rel: &AmbientRelation, dir: Direction) -> Kernel {
        let flip = |mut s: FixedBitSet| {
            s.toggle_range(..);
            s
        };
        let (next_cols, next_rows) = match dir {
            Direction::Less => (
                (0..rel.rows()).map(|a| rel.row(a).clone()).collect(),
                (0..rel.cols()).map(|b| flip(rel.column(b).clone())).collect(),
            ),
            Direction::Greater => (
                (0..rel.rows()).map(|a| flip(rel.row(a).clone())).collect(),
                (0..rel.cols()).map(|b| rel.column(b).clone()).collect(),
            ),
        };
        Kernel {
            next_cols,
            next_rows,
            rows: rel.rows(),
            cols: rel.cols(),
        }
    }

    fn full(n: usize) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(n);
        s.insert_range(..);
        s
    }

    fn count_and(a: &FixedBitSet, b: &FixedBitSet) -> usize {
        a.intersection_count(b)
    }

    /// Depth-first search for a ladder of exactly `target` pairs. With
    /// `lexicographic` the first witness found is least in the interleaved
    /// order (a_0, b_0, a_1, b_1, ...); otherwise rows are tried by degree.
    fn search(&self, target: usize, lexicographic: bool) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut rows = Vec::with_capacity(target);
        let mut cols = Vec::with_capacity(target);
        let found = self.dfs(
            target,
            Self::full(self.rows),
            Self::full(self.cols),
            lexicographic,
            &mut rows,
            &mut cols,
        );
        found.then_some((rows, cols))
    }

    fn dfs(
        &self,
        target: usize,
        cand_rows: FixedBitSet,
        cand_cols: FixedBitSet,
        lexicographic: bool,
        rows: &mut Vec<usize>,
        cols: &mut Vec<usize>,
    ) -> bool {
        let depth = rows.len();
        if depth == target {
            return true;
        }
        let need = target - depth;
        if cand_rows.count_ones(..).min(cand_cols.count_ones(..)) < need {
            return false;
        }
        let mut order: Vec<(usize, usize)> = cand_rows
            .ones()
            .map(|a| (a, Self::count_and(&cand_cols, &self.next_cols[a])))
            .filter(|&(_, deg)| deg + 1 >= need)
            .collect();
        if !lexicographic {
            order.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
        }
        for (a, _) in order {
            let mut rows_after_a = cand_rows.clone();
            rows_after_a.set(a, false);
            let mut cols_after_a = cand_cols.clone();
            cols_after_a.intersect_with(&self.next_cols[a]);
            for b in cand_cols.ones() {
                let mut next_cols = cols_after_a.clone();
                next_cols.set(b, false);
                if next_cols.count_ones(..) + 1 < need {
                    continue;
                }
                let mut next_rows = rows_after_a.clone();
                next_rows.intersect_with(&self.next_rows[b]);
                if next_rows.count_ones(..) + 1 < need {
                    continue;
                }
                rows.push(a);
                cols.push(b);
                if self.dfs(target, next_rows, next_cols, lexicographic, rows, cols) {
                    return true;
                }
                rows.pop();
                cols.pop();
            }
        }
        false
    }
}

/// Longest ladder of length at most `cap` in either direction, with the
/// least witness (direction `Less` first, then interleaved lexicographic order).
///
/// Returns `(0, None)` when the relation has no rows or no columns.
pub fn ladder_index(rel: &AmbientRelation, cap: usize) -> Result<(usize, Option<LadderWitness>)> {
    if cap == 0 {
        return Err(Error::InvalidParameter("ladder cap must be at least 1".into()));
    }
    let limit = cap.min(rel.rows()).min(rel.cols());
    if limit == 0 {
        return Ok((0, None));
    }
    let kernels = [
        (Direction::Less, Kernel::new(rel, Direction::Less)),
        (Direction::Greater, Kernel::new(rel, Direction::Greater)),
    ];
    let mut best = 1;
    for n in 2..=limit {
        if kernels.iter().any(|(_, k)| k.search(n, false).is_some()) {
            best = n;
        } else {
            break;
        }
    }
    let witness = kernels
        .iter()
        .find_map(|(dir, k)| {
            k.search(best, true).map(|(rows, cols)| LadderWitness {
                rows,
                cols,
                direction: *dir,
            })
        })
        .expect("a ladder of the found length exists");
    Ok((best, Some(witness)))
}

/// Whether a ladder of length `k` exists, with one when it does.
pub fn has_k_order_property(rel: &AmbientRelation, k: usize) -> Result<(bool, Option<LadderWitness>)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (n, w) = ladder_index(rel, k)?;
    if n == k {
        Ok((true, w))
    } else {
        Ok((false, None))
    }
}

/// VC dimension of the rows as subsets of the columns, with the
/// lexicographically least shattered column set of that size.
pub fn vc_dimension(rel: &AmbientRelation) -> (usize, Vec<usize>) {
    if rel.rows() == 0 {
        return (0, Vec::new());
    }
    let mut distinct: Vec<&FixedBitSet> = (0..rel.rows()).map(|a| rel.row(a)).collect();
    distinct.sort_by(|x, y| x.as_slice().cmp(y.as_slice()));
    distinct.dedup();
    let bound = usize::BITS as usize - 1 - distinct.len().leading_zeros() as usize;
    let mut all_rows = FixedBitSet::with_capacity(rel.rows());
    all_rows.insert_range(..);
    let mut best: Vec<usize> = Vec::new();
    let mut current = Vec::new();
    vc_dfs(rel, 0, &[all_rows], bound, &mut current, &mut best);
    (best.len(), best)
}

fn vc_dfs(
    rel: &AmbientRelation,
    start: usize,
    groups: &[FixedBitSet],
    bound: usize,
    current: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    if current.len() > best.len() {
        *best = current.clone();
    }
    if best.len() >= bound {
        return;
    }
    for c in start..rel.cols() {
        if current.len() + (rel.cols() - c) <= best.len() {
            return;
        }
        let col = rel.column(c);
        let mut next = Vec::with_capacity(groups.len() * 2);
        let mut shattered = true;
        for g in groups {
            let mut with = g.clone();
            with.intersect_with(col);
            let mut without = g.clone();
            without.difference_with(col);
            if with.is_clear() || without.is_clear() {
                shattered = false;
                break;
            }
            next.push(with);
            next.push(without);
        }
        if shattered {
            current.push(c);
            vc_dfs(rel, c + 1, &next, bound, current, best);
            current.pop();
            if best.len() >= bound {
                return;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoubleLimitReport<S> {
    /// lim_j lim_i f(a_i, b_j): rows limit taken first.
    pub inner_outer: S,
    /// lim_i lim_j f(a_i, b_j): columns limit taken first.
    pub outer_inner: S,
    pub inner_outer_converged: bool,
    pub outer_inner_converged: bool,
    /// |inner_outer − outer_inner| when both sides converged.
    pub gap: Option<S>,
}

fn tail_within<S: Scalar>(values: &[S], tail: usize, tol: &S) -> bool {
    if values.len() < tail {
        return false;
    }
    let window = &values[values.len() - tail..];
    let mut lo = &window[0];
    let mut hi = &window[0];
    for v in window {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    hi.clone() - lo.clone() <= *tol
}

/// Iterated limit of `seqs` (outer index over the slice, inner over each
/// sequence). Inner sequences are converged when their last `tail` values
/// stay within `tol`. The outer rule is applied to the converged inner limits
/// of the outer indices below `len - tail`, so the inner index always runs
/// ahead of the outer one.
fn iterated_limit<S: Scalar>(seqs: &[Vec<S>], tail: usize, tol: &S) -> (S, bool) {
    let mut limits = Vec::new();
    for s in &seqs[..seqs.len() - tail] {
        if tail_within(s, tail, tol) {
            limits.push(s.last().expect("nonempty").clone());
        }
    }
    let converged = tail_within(&limits, tail, tol);
    let estimate = limits
        .last()
        .cloned()
        .unwrap_or_else(|| seqs.last().and_then(|s| s.last()).cloned().unwrap_or_else(S::zero));
    (estimate, converged)
}

/// Diagnostic for the double limit property on an `n × n` grid `values[i][j] = f(a_i, b_j)`.
pub fn double_limit_estimate<S: Scalar>(values: &[Vec<S>], tolerance: &S) -> Result<DoubleLimitReport<S>> {
    let n = values.len();
    if n < 4 {
        return Err(Error::GridTooSmall(format!("{n} rows, need at least 4")));
    }
    if let Some(r) = values.iter().find(|r| r.len() != n) {
        return Err(Error::GridTooSmall(format!(
            "grid must be square: row of length {} in a {n}-row grid",
            r.len()
        )));
    }
    let tail = n.div_ceil(4);
    // columns as sequences over i
    let columns: Vec<Vec<S>> = (0..n)
        .map(|j| (0..n).map(|i| values[i][j].clone()).collect())
        .collect();
    let (inner_outer, io_ok) = iterated_limit(&columns, tail, tolerance);
    let (outer_inner, oi_ok) = iterated_limit(values, tail, tolerance);
    let gap = (io_ok && oi_ok).then(|| inner_outer.abs_diff(&outer_inner));
    Ok(DoubleLimitReport {
        inner_outer,
        outer_inner,
        inner_outer_converged: io_ok,
        outer_inner_converged: oi_ok,
        gap,
    })
}
