//! (r, ε)-order arrays of measures and the θ formula over blocks of variables.

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::approx::{deviation, epsilon_approximate_with_size, sample_size_bound};
use crate::error::{Error, Result};
use crate::measure::KeislerMeasure;
use crate::morley::evaluation_map;
use crate::relation::{AmbientRelation, Side};
use crate::scalar::Scalar;
use crate::stability::{ladder_index, vc_dimension};

/// Distinct-element cap for subset enumeration inside [`evaluate_theta`].
pub const THETA_ENUM_LIMIT: usize = 24;

/// Largest common denominator for which measures are replaced by exact tuples.
pub const EXACT_TUPLE_LIMIT: u64 = 12;

#[derive(Clone, Debug)]
pub struct OrderArrayWitness<S> {
    pub mus: Vec<KeislerMeasure<S>>,
    pub nus: Vec<KeislerMeasure<S>>,
    /// Positions of the chosen measures in the candidate lists.
    pub mu_indices: Vec<usize>,
    pub nu_indices: Vec<usize>,
    pub r: S,
    pub eps: S,
    /// grid[i][j] = E_φ(mus[i], nus[j]).
    pub grid: Vec<Vec<S>>,
}

impl<S: Scalar> OrderArrayWitness<S> {
    pub fn len(&self) -> usize {
        self.mus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mus.is_empty()
    }

    /// Recomputes the grid from the measures and checks the order pattern.
    pub fn verify(&self) -> Result<bool> {
        let n = self.mus.len();
        if self.nus.len() != n || self.grid.len() != n {
            return Ok(false);
        }
        let high = self.r.clone() + self.eps.clone();
        for i in 0..n {
            for j in 0..n {
                let v = product_value(&self.mus[i], &self.nus[j])?;
                if v != self.grid[i][j] {
                    return Ok(false);
                }
                let ok = if i >= j { v >= high } else { v <= self.r };
                if !ok {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn product_value<S: Scalar>(mu: &KeislerMeasure<S>, nu: &KeislerMeasure<S>) -> Result<S> {
    let rep = evaluation_map(mu, nu)?;
    rep.value_forward
        .ok_or_else(|| Error::Undefinable(rep.undefinable_types.clone()))
}

fn check_thresholds<S: Scalar>(r: &S, eps: &S) -> Result<()> {
    if *eps <= S::zero() || *r < S::zero() || r.clone() + eps.clone() > S::one() {
        return Err(Error::InvalidParameter(format!(
            "need eps > 0, r >= 0 and r + eps <= 1; got r = {}, eps = {}",
            r.render(),
            eps.render()
        )));
    }
    Ok(())
}

struct ArraySearch {
    /// μ positions with E(μ, ν) ≥ r + ε, per ν.
    high_by: Vec<FixedBitSet>,
    /// ν positions with E(μ, ν) ≤ r, per μ.
    low_with: Vec<FixedBitSet>,
}

impl ArraySearch {
    fn dfs(
        &self,
        target: usize,
        mus: FixedBitSet,
        nus: FixedBitSet,
        picked: &mut Vec<(usize, usize)>,
    ) -> bool {
        if picked.len() == target {
            return true;
        }
        let need = target - picked.len();
        if mus.count_ones(..).min(nus.count_ones(..)) < need {
            return false;
        }
        for m in mus.ones() {
            let mut nus_after = nus.clone();
            nus_after.intersect_with(&self.low_with[m]);
            if nus_after.count_ones(..) + 1 < need {
                continue;
            }
            for v in nus.ones() {
                if !self.high_by[v].contains(m) {
                    continue;
                }
                let mut next_mus = mus.clone();
                next_mus.set(m, false);
                next_mus.intersect_with(&self.high_by[v]);
                let mut next_nus = nus_after.clone();
                next_nus.set(v, false);
                picked.push((m, v));
                if self.dfs(target, next_mus, next_nus, picked) {
                    return true;
                }
                picked.pop();
            }
        }
        false
    }
}

/// Largest (r, ε)-order array of size at most `n_max` built from distinct
/// candidates, least in index order among those of that size.
pub fn order_array_search<S: Scalar>(
    candidate_mus: &[KeislerMeasure<S>],
    candidate_nus: &[KeislerMeasure<S>],
    r: &S,
    eps: &S,
    n_max: usize,
) -> Result<Option<OrderArrayWitness<S>>> {
    check_thresholds(r, eps)?;
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let values: Vec<Vec<S>> = candidate_mus
        .par_iter()
        .map(|mu| candidate_nus.iter().map(|nu| product_value(mu, nu)).collect())
        .collect::<Result<_>>()?;
    let high = r.clone() + eps.clone();
    let (pm, pn) = (candidate_mus.len(), candidate_nus.len());
    let mut search = ArraySearch {
        high_by: vec![FixedBitSet::with_capacity(pm); pn],
        low_with: vec![FixedBitSet::with_capacity(pn); pm],
    };
    for (m, row) in values.iter().enumerate() {
        for (v, e) in row.iter().enumerate() {
            if *e >= high {
                search.high_by[v].insert(m);
            }
            if e <= r {
                search.low_with[m].insert(v);
            }
        }
    }
    let mut full_m = FixedBitSet::with_capacity(pm);
    full_m.insert_range(..);
    let mut full_n = FixedBitSet::with_capacity(pn);
    full_n.insert_range(..);
    let mut best: Option<Vec<(usize, usize)>> = None;
    for n in 1..=n_max.min(pm).min(pn) {
        let mut picked = Vec::with_capacity(n);
        if search.dfs(n, full_m.clone(), full_n.clone(), &mut picked) {
            best = Some(picked);
        } else {
            break;
        }
    }
    Ok(best.map(|pairs| {
        let (mi, ni): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let grid = mi
            .iter()
            .map(|&m| ni.iter().map(|&v| values[m][v].clone()).collect())
            .collect();
        OrderArrayWitness {
            mus: mi.iter().map(|&m| candidate_mus[m].clone()).collect(),
            nus: ni.iter().map(|&v| candidate_nus[v].clone()).collect(),
            mu_indices: mi,
            nu_indices: ni,
            r: r.clone(),
            eps: eps.clone(),
            grid,
        }
    }))
}

/// θ(x_1..x_N, y_1..y_N): the disjunction over rectangles A×B ⊆ [N]×[N] with
/// |A|·|B| > (r + ε/2)·N² of the conjunction of φ(x_a, y_b), (a, b) ∈ A×B.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaFormula<S> {
    pub arity: usize,
    pub r: S,
    pub eps: S,
    /// r + ε/2.
    pub threshold: S,
}

impl<S: Scalar> ThetaFormula<S> {
    /// No rectangle clears the threshold: θ is FALSE.
    pub fn is_false(&self) -> bool {
        self.threshold >= S::one()
    }

    fn clears(&self, area: usize) -> bool {
        S::from_count(area) > self.threshold.clone() * S::from_count(self.arity * self.arity)
    }

    /// Number of disjuncts.
    pub fn disjunct_count(&self) -> BigUint {
        let n = self.arity;
        let mut binom = vec![BigUint::from(1u32); n + 1];
        for k in 1..=n {
            binom[k] = binom[k - 1].clone() * BigUint::from(n - k + 1) / BigUint::from(k);
        }
        let mut total = BigUint::from(0u32);
        for a in 1..=n {
            for b in 1..=n {
                if self.clears(a * b) {
                    total += binom[a].clone() * binom[b].clone();
                }
            }
        }
        total
    }

    /// Disjuncts as position bitmasks (A, B), enumerated lazily.
    pub fn rectangles(&self) -> Result<impl Iterator<Item = (u64, u64)> + '_> {
        if self.arity > 32 {
            return Err(Error::TooLarge(format!(
                "rectangle enumeration at arity {}",
                self.arity
            )));
        }
        let full = 1u64 << self.arity;
        Ok((1..full).flat_map(move |a| {
            (1..full)
                .filter(move |&b| self.clears((a.count_ones() * b.count_ones()) as usize))
                .map(move |b| (a, b))
        }))
    }
}

pub fn build_theta<S: Scalar>(arity: usize, r: &S, eps: &S) -> Result<ThetaFormula<S>> {
    if arity == 0 {
        return Err(Error::InvalidParameter("θ needs arity at least 1".into()));
    }
    if *eps <= S::zero() || *r < S::zero() {
        return Err(Error::InvalidParameter(format!(
            "need eps > 0 and r >= 0; got r = {}, eps = {}",
            r.render(),
            eps.render()
        )));
    }
    Ok(ThetaFormula {
        arity,
        r: r.clone(),
        eps: eps.clone(),
        threshold: r.clone() + eps.clone() / S::from_count(2),
    })
}

fn check_tuples(rel: &AmbientRelation, arity: usize, rows: &[usize], cols: &[usize]) -> Result<()> {
    for (t, size) in [(rows, rel.rows()), (cols, rel.cols())] {
        if t.len() != arity {
            return Err(Error::TupleLength {
                expected: arity,
                got: t.len(),
            });
        }
        if let Some(&e) = t.iter().find(|&&e| e >= size) {
            return Err(Error::ElementOutOfRange { index: e, size });
        }
    }
    Ok(())
}

/// Distinct elements with their multiplicities.
fn multiplicities(t: &[usize]) -> Vec<(usize, usize)> {
    let mut s = t.to_vec();
    s.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for e in s {
        match out.last_mut() {
            Some((x, c)) if *x == e => *c += 1,
            _ => out.push((e, 1)),
        }
    }
    out
}

/// θ(rows, cols). Positions holding the same element behave identically, so
/// the search runs over subsets of distinct elements on the smaller side,
/// pairing each with the largest compatible set on the other side.
pub fn evaluate_theta<S: Scalar>(
    theta: &ThetaFormula<S>,
    rel: &AmbientRelation,
    rows: &[usize],
    cols: &[usize],
) -> Result<bool> {
    check_tuples(rel, theta.arity, rows, cols)?;
    if theta.is_false() {
        return Ok(false);
    }
    let (xs, ys) = (multiplicities(rows), multiplicities(cols));
    let transpose = xs.len() > ys.len();
    let (small, large) = if transpose { (&ys, &xs) } else { (&xs, &ys) };
    if small.len() > THETA_ENUM_LIMIT {
        return Err(Error::TooLarge(format!(
            "{} distinct elements on each side",
            small.len()
        )));
    }
    let entry = |s: usize, l: usize| {
        if transpose {
            rel.entry(l, s)
        } else {
            rel.entry(s, l)
        }
    };
    // compat[u] = bitmask of large-side elements related to small element u
    let compat: Vec<FixedBitSet> = small
        .iter()
        .map(|&(s, _)| {
            let mut set = FixedBitSet::with_capacity(large.len());
            for (k, &(l, _)) in large.iter().enumerate() {
                set.set(k, entry(s, l));
            }
            set
        })
        .collect();
    let k = small.len();
    for mask in 1u64..(1u64 << k) {
        let mut common = FixedBitSet::with_capacity(large.len());
        common.insert_range(..);
        let mut width = 0;
        for u in 0..k {
            if mask >> u & 1 == 1 {
                common.intersect_with(&compat[u]);
                width += small[u].1;
            }
        }
        let height: usize = common.ones().map(|l| large[l].1).sum();
        if height > 0 && theta.clears(width * height) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Fraction of the N×N position pairs with φ(rows[a], cols[b]).
pub fn tuple_density<S: Scalar>(rel: &AmbientRelation, rows: &[usize], cols: &[usize]) -> S {
    let ones: usize = rows
        .iter()
        .map(|&a| cols.iter().filter(|&&b| rel.entry(a, b)).count())
        .sum();
    S::from_count(ones) / S::from_count(rows.len() * cols.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaImplications<S> {
    pub value: bool,
    pub density: S,
    /// θ = 1 implies density > r + ε/2.
    pub forward_holds: bool,
    /// θ = 0 implies density ≤ r + ε/2.
    pub converse_holds: bool,
}

/// Evaluates θ and checks both density implications. The converse can fail:
/// a dense tuple grid need not contain a dense all-ones rectangle.
pub fn theta_implications<S: Scalar>(
    theta: &ThetaFormula<S>,
    rel: &AmbientRelation,
    rows: &[usize],
    cols: &[usize],
) -> Result<ThetaImplications<S>> {
    let value = evaluate_theta(theta, rel, rows, cols)?;
    let density: S = tuple_density(rel, rows, cols);
    let above = density > theta.threshold;
    Ok(ThetaImplications {
        value,
        forward_holds: !value || above,
        converse_holds: value || !above,
        density,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaLadderReport<S> {
    pub n: usize,
    pub arity: usize,
    /// Tuples are exact copies of the measures' weights rather than samples.
    pub exact_tuples: bool,
    pub row_tuples: Vec<Vec<usize>>,
    pub col_tuples: Vec<Vec<usize>>,
    /// Largest deviation of any tuple from its measure.
    pub max_deviation: S,
    pub theta_grid: Vec<Vec<bool>>,
    pub density_grid: Vec<Vec<S>>,
    /// Cells where θ is not 0 below the diagonal pattern or not 1 on/above it.
    pub dichotomy_violations: Vec<(usize, usize)>,
    /// Cells whose tuple density strays more than ε/8 from the required side.
    pub chain_violations: Vec<(usize, usize)>,
    /// Cells with density exactly r + ε/2.
    pub boundary_cells: Vec<(usize, usize)>,
    /// Ladder index of the n×n relation θ induces between the tuples.
    pub induced_ladder_index: usize,
    pub success: bool,
}

/// Evaluates θ of the given arity on a grid of tuples and classifies cells.
pub fn theta_grid_report<S: Scalar>(
    rel: &AmbientRelation,
    row_tuples: &[Vec<usize>],
    col_tuples: &[Vec<usize>],
    r: &S,
    eps: &S,
) -> Result<ThetaLadderReport<S>> {
    let n = row_tuples.len();
    if col_tuples.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} row tuples against {} column tuples",
            col_tuples.len()
        )));
    }
    let arity = row_tuples.first().map_or(1, Vec::len);
    let theta = build_theta(arity, r, eps)?;
    let cells: Vec<Vec<(bool, S)>> = row_tuples
        .par_iter()
        .map(|a| {
            col_tuples
                .iter()
                .map(|b| Ok((evaluate_theta(&theta, rel, a, b)?, tuple_density(rel, a, b))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let slack = eps.clone() / S::from_count(8);
    let mut report = ThetaLadderReport {
        n,
        arity,
        exact_tuples: false,
        row_tuples: row_tuples.to_vec(),
        col_tuples: col_tuples.to_vec(),
        max_deviation: S::zero(),
        theta_grid: Vec::with_capacity(n),
        density_grid: Vec::with_capacity(n),
        dichotomy_violations: Vec::new(),
        chain_violations: Vec::new(),
        boundary_cells: Vec::new(),
        induced_ladder_index: 0,
        success: false,
    };
    for (i, row) in cells.into_iter().enumerate() {
        let (t, d): (Vec<bool>, Vec<S>) = row.into_iter().unzip();
        for j in 0..n {
            if t[j] != (i >= j) {
                report.dichotomy_violations.push((i, j));
            }
            let chain_ok = if i >= j {
                d[j] >= r.clone() + eps.clone() - slack.clone()
            } else {
                d[j] <= r.clone() + slack.clone()
            };
            if !chain_ok {
                report.chain_violations.push((i, j));
            }
            if d[j] == theta.threshold {
                report.boundary_cells.push((i, j));
            }
        }
        report.theta_grid.push(t);
        report.density_grid.push(d);
    }
    if n > 0 {
        let induced = AmbientRelation::from_fn(n, n, |i, j| report.theta_grid[i][j])?;
        report.induced_ladder_index = ladder_index(&induced, n)?.0;
    }
    report.success = report.dichotomy_violations.is_empty();
    Ok(report)
}

fn lcm(a: u64, b: u64) -> u64 {
    a / num_integer::gcd(a, b) * b
}

/// `k` copies per type in proportion to its weight, using a model realizer.
fn exact_tuple<S: Scalar>(mu: &KeislerMeasure<S>, len: u64) -> Option<Vec<usize>> {
    let rel = mu.space().relation();
    let side = mu.space().side();
    let mut out = Vec::with_capacity(len as usize);
    for (&id, w) in mu.weights() {
        let den = w.denominator()?;
        let copies = (w.to_f64() * len as f64).round() as usize;
        if !len.is_multiple_of(den) {
            return None;
        }
        let t = &mu.space().types()[id];
        let e = t.model_realizer(rel, side).or(t.realizers.first().copied())?;
        out.extend(std::iter::repeat_n(e, copies));
    }
    (out.len() == len as usize).then_some(out)
}

fn oriented(rel: &AmbientRelation, side: Side) -> AmbientRelation {
    match side {
        Side::Phi => rel.clone(),
        Side::Opp => rel.opposite(),
    }
}

/// Replaces every measure of the witness by a tuple within ε/16 and checks
/// that θ separates the tuple grid exactly like the order pattern.
pub fn theta_ladder_check<S: Scalar>(
    witness: &OrderArrayWitness<S>,
    seed: u64,
) -> Result<ThetaLadderReport<S>> {
    let n = witness.len();
    let (r, eps) = (&witness.r, &witness.eps);
    let Some(first) = witness.mus.first() else {
        return theta_grid_report(&AmbientRelation::from_fn(1, 1, |_, _| false)?, &[], &[], r, eps);
    };
    let rel = first.space().relation().clone();
    let tol = eps.clone() / S::from_count(16);
    let all: Vec<&KeislerMeasure<S>> = witness.mus.iter().chain(&witness.nus).collect();

    let common = all
        .iter()
        .flat_map(|m| m.weights().values())
        .try_fold(1u64, |acc, w| w.denominator().map(|d| lcm(acc, d)));
    let mut exact = None;
    if let Some(len) = common.filter(|&l| l <= EXACT_TUPLE_LIMIT) {
        let tuples: Option<Vec<Vec<usize>>> = all.iter().map(|m| exact_tuple(m, len)).collect();
        if let Some(tuples) = tuples {
            let devs = all
                .iter()
                .zip(&tuples)
                .map(|(m, t)| deviation(m, t))
                .collect::<Result<Vec<S>>>()?;
            if devs.iter().all(|d| *d < tol) {
                exact = Some((tuples, devs));
            }
        }
    }
    let exact_tuples = exact.is_some();
    let (tuples, devs) = match exact {
        Some(found) => found,
        None => {
            let d = vc_dimension(&rel)
                .0
                .max(vc_dimension(&oriented(&rel, Side::Opp)).0);
            let size = sample_size_bound(d, &tol)?;
            let approximations = all
                .par_iter()
                .enumerate()
                .map(|(k, m)| {
                    epsilon_approximate_with_size(m, &tol, size, seed.wrapping_add(16 * k as u64))
                })
                .collect::<Result<Vec<_>>>()?;
            approximations
                .into_iter()
                .map(|a| (a.elements, a.deviation))
                .unzip()
        }
    };
    let mut report = theta_grid_report(&rel, &tuples[..n], &tuples[n..], r, eps)?;
    report.exact_tuples = exact_tuples;
    report.max_deviation = crate::scalar::max(devs);
    Ok(report)
}
