//! ε-approximation of a measure by the average of finitely many realizers.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::KeislerMeasure;
use crate::relation::AmbientRelation;
use crate::scalar::Scalar;
use crate::stability::vc_dimension;

pub const MAX_ATTEMPTS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Approximation<S> {
    /// Ambient elements of the measure's side, with repetition.
    pub elements: Vec<usize>,
    /// Largest gap over every ambient parameter.
    pub deviation: S,
    pub attempts: usize,
    pub vc_dimension: usize,
}

/// ⌈(8/ε²)(d·ln(16/ε) + ln 16)⌉.
pub fn sample_size_bound<S: Scalar>(d: usize, eps: &S) -> Result<usize> {
    if *eps <= S::zero() || *eps >= S::one() {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1), got {}",
            eps.render()
        )));
    }
    let e = eps.to_f64();
    let n = (8.0 / (e * e)) * (d as f64 * (16.0 / e).ln() + 16f64.ln());
    Ok(n.ceil().max(1.0) as usize)
}

/// The relation read with the measure's side as rows.
fn oriented(mu: &KeislerMeasure<impl Scalar>) -> AmbientRelation {
    let rel = mu.space().relation();
    match mu.space().side() {
        crate::relation::Side::Phi => (**rel).clone(),
        crate::relation::Side::Opp => rel.opposite(),
    }
}

/// Value of μ at the instance of every ambient parameter `b`: each type
/// contributes its weight times the share of its realizers satisfying the
/// instance. For parameters in the model all realizers agree.
pub fn instance_values<S: Scalar>(mu: &KeislerMeasure<S>) -> Result<Vec<S>> {
    let rel = oriented(mu);
    let mut values = vec![S::zero(); rel.cols()];
    for (&id, w) in mu.weights() {
        let t = mu.space().get(id)?;
        if t.realizers.is_empty() {
            return Err(Error::NoRealizer(id));
        }
        let share = S::from_count(t.realizers.len());
        for (b, v) in values.iter_mut().enumerate() {
            let hits = t.realizers.iter().filter(|&&e| rel.entry(e, b)).count();
            if hits > 0 {
                *v = v.clone() + w.clone() * S::from_count(hits) / share.clone();
            }
        }
    }
    Ok(values)
}

fn deviation_against<S: Scalar>(rel: &AmbientRelation, targets: &[S], elements: &[usize]) -> S {
    let n = S::from_count(elements.len());
    let mut worst = S::zero();
    for (b, t) in targets.iter().enumerate() {
        let hits = elements.iter().filter(|&&e| rel.entry(e, b)).count();
        let d = t.abs_diff(&(S::from_count(hits) / n.clone()));
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// sup_b |μ(φ(x,b)) − Av(elements)(φ(x,b))| over all ambient parameters.
pub fn deviation<S: Scalar>(mu: &KeislerMeasure<S>, elements: &[usize]) -> Result<S> {
    if elements.is_empty() {
        return Err(Error::EmptyAverage);
    }
    let rel = oriented(mu);
    if let Some(&e) = elements.iter().find(|&&e| e >= rel.rows()) {
        return Err(Error::ElementOutOfRange {
            index: e,
            size: rel.rows(),
        });
    }
    Ok(deviation_against(&rel, &instance_values(mu)?, elements))
}

fn draw<S: Scalar>(mu: &KeislerMeasure<S>, n: usize, seed: u64) -> Result<Vec<usize>> {
    let ids: Vec<usize> = mu.support().collect();
    let weights: Vec<f64> = ids.iter().map(|&id| mu.weight(id).to_f64()).collect();
    let index = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidParameter(format!("measure weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t = mu.space().get(ids[index.sample(&mut rng)])?;
        out.push(t.realizers[rng.gen_range(0..t.realizers.len())]);
    }
    Ok(out)
}

/// Samples `n` realizers and retries with seeds `seed, seed + 1, ...` until
/// the deviation drops below `eps`.
pub fn epsilon_approximate_with_size<S: Scalar>(
    mu: &KeislerMeasure<S>,
    eps: &S,
    n: usize,
    seed: u64,
) -> Result<Approximation<S>> {
    if *eps <= S::zero() || *eps >= S::one() {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1), got {}",
            eps.render()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let rel = oriented(mu);
    let targets = instance_values(mu)?;
    let d = vc_dimension(&rel).0;
    let mut best: Option<S> = None;
    for attempt in 0..MAX_ATTEMPTS {
        let elements = draw(mu, n, seed.wrapping_add(attempt as u64))?;
        let dev = deviation_against(&rel, &targets, &elements);
        if dev < *eps {
            return Ok(Approximation {
                elements,
                deviation: dev,
                attempts: attempt + 1,
                vc_dimension: d,
            });
        }
        if best.as_ref().is_none_or(|b| dev < *b) {
            best = Some(dev);
        }
    }
    Err(Error::ApproximationExhausted {
        attempts: MAX_ATTEMPTS,
        best: best.map(|b| b.render()).unwrap_or_default(),
    })
}

/// Samples [`sample_size_bound`] many realizers, with the VC dimension taken
/// on the measure's side.
pub fn epsilon_approximate<S: Scalar>(
    mu: &KeislerMeasure<S>,
    eps: &S,
    seed: u64,
) -> Result<Approximation<S>> {
    let d = vc_dimension(&oriented(mu)).0;
    let n = sample_size_bound(d, eps)?;
    epsilon_approximate_with_size(mu, eps, n, seed)
}
