//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use locstab::measure::KeislerMeasure;
use locstab::relation::{AmbientRelation, Side};
use locstab::types::{compute_type_space, TypeSpace};
use locstab::{Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: u64) -> Rational {
    Rational::from_ratio(n, d)
}

pub fn spaces(rel: AmbientRelation) -> (Arc<TypeSpace>, Arc<TypeSpace>) {
    let rel = Arc::new(rel);
    (
        Arc::new(compute_type_space(&rel, Side::Phi).with_definitions()),
        Arc::new(compute_type_space(&rel, Side::Opp).with_definitions()),
    )
}

/// Relation from a bit pattern, row-major.
pub fn from_bits(rows: usize, cols: usize, bits: u64) -> AmbientRelation {
    AmbientRelation::from_fn(rows, cols, |a, b| bits >> (a * cols + b) & 1 == 1).unwrap()
}

fn permutations(pool: &[usize], k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == k {
        out.push(prefix.clone());
        return;
    }
    for &x in pool {
        if !prefix.contains(&x) {
            prefix.push(x);
            permutations(pool, k, prefix, out);
            prefix.pop();
        }
    }
}

/// All ordered selections of `k` distinct items out of `0..n`.
pub fn arrangements(n: usize, k: usize) -> Vec<Vec<usize>> {
    let pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    permutations(&pool, k, &mut Vec::new(), &mut out);
    out
}

fn has_sdr(sets: &[Vec<usize>], used: &mut Vec<usize>) -> bool {
    let k = used.len();
    if k == sets.len() {
        return true;
    }
    for &b in &sets[k] {
        if !used.contains(&b) {
            used.push(b);
            if has_sdr(sets, used) {
                return true;
            }
            used.pop();
        }
    }
    false
}

/// Ladder of length `n` by enumerating ordered row tuples and then looking
/// for distinct columns position by position.
pub fn brute_has_ladder(rel: &AmbientRelation, n: usize) -> bool {
    if n == 0 {
        return true;
    }
    if n > rel.rows() || n > rel.cols() {
        return false;
    }
    for rows in arrangements(rel.rows(), n) {
        for less in [true, false] {
            let sets: Vec<Vec<usize>> = (0..n)
                .map(|k| {
                    (0..rel.cols())
                        .filter(|&b| {
                            (0..n).all(|i| i == k || rel.entry(rows[i], b) == if less { i < k } else { i > k })
                        })
                        .collect()
                })
                .collect();
            if has_sdr(&sets, &mut Vec::new()) {
                return true;
            }
        }
    }
    false
}

pub fn brute_ladder_index(rel: &AmbientRelation, cap: usize) -> usize {
    let top = cap.min(rel.rows()).min(rel.cols());
    (1..=top).rev().find(|&n| brute_has_ladder(rel, n)).unwrap_or(0)
}

/// Largest set of columns shattered by the rows, by subset enumeration.
pub fn brute_vc(rel: &AmbientRelation) -> usize {
    let c = rel.cols();
    assert!(c <= 16);
    let mut best = 0;
    for mask in 0u32..(1 << c) {
        let cols: Vec<usize> = (0..c).filter(|&b| mask >> b & 1 == 1).collect();
        if cols.len() <= best {
            continue;
        }
        let mut seen = std::collections::HashSet::new();
        for a in 0..rel.rows() {
            let pat: Vec<bool> = cols.iter().map(|&b| rel.entry(a, b)).collect();
            seen.insert(pat);
        }
        if seen.len() == 1 << cols.len() {
            best = cols.len();
        }
    }
    best
}

/// E(μ, ν) for measures supported on types realized in the model: the
/// weighted density of the matrix over model realizers.
pub fn product_by_realizers(mu: &KeislerMeasure<Rational>, nu: &KeislerMeasure<Rational>) -> Rational {
    let rel = mu.space().relation();
    let mut total = q(0, 1);
    for (&i, r) in mu.weights() {
        let a = mu.space().types()[i].model_realizer(rel, Side::Phi).expect("realized in model");
        for (&j, s) in nu.weights() {
            let b = nu.space().types()[j].model_realizer(rel, Side::Opp).expect("realized in model");
            if rel.entry(a, b) {
                total += r * s;
            }
        }
    }
    total
}

/// Largest n ≤ n_max with an (r, ε)-order array over distinct candidates,
/// by trying every pair of arrangements.
pub fn brute_order_array(values: &[Vec<Rational>], r: &Rational, eps: &Rational, n_max: usize) -> usize {
    let (pm, pn) = (values.len(), values.first().map_or(0, Vec::len));
    let high = r + eps;
    let mut best = 0;
    for n in 1..=n_max.min(pm).min(pn) {
        let mus = arrangements(pm, n);
        let nus = arrangements(pn, n);
        let found = mus.iter().any(|mi| {
            nus.iter().any(|ni| {
                (0..n).all(|i| {
                    (0..n).all(|j| {
                        let v = &values[mi[i]][ni[j]];
                        if i >= j {
                            *v >= high
                        } else {
                            v <= r
                        }
                    })
                })
            })
        });
        if found {
            best = n;
        }
    }
    best
}

/// θ by checking every pair of position sets.
pub fn brute_theta(rel: &AmbientRelation, rows: &[usize], cols: &[usize], r: &Rational, eps: &Rational) -> bool {
    let n = rows.len();
    let thr = r + eps / q(2, 1);
    for am in 1u32..(1 << n) {
        for bm in 1u32..(1 << n) {
            let area = (am.count_ones() * bm.count_ones()) as i64;
            if q(area, 1) <= &thr * q((n * n) as i64, 1) {
                continue;
            }
            let all = (0..n).all(|i| am >> i & 1 == 0 || (0..n).all(|j| bm >> j & 1 == 0 || rel.entry(rows[i], cols[j])));
            if all {
                return true;
            }
        }
    }
    false
}

/// Random probability vector over `ids`, with small integer numerators.
pub fn random_weights(rng: &mut ChaCha8Rng, ids: &[usize], max_support: usize) -> Vec<(usize, Rational)> {
    let mut pool = ids.to_vec();
    let k = rng.gen_range(1..=max_support.min(pool.len()).max(1));
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let i = rng.gen_range(0..pool.len());
        chosen.push(pool.swap_remove(i));
    }
    let raw: Vec<i64> = chosen.iter().map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    chosen
        .into_iter()
        .zip(raw)
        .map(|(id, w)| (id, q(w, total as u64)))
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
