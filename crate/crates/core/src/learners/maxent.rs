//! Batch maximum-entropy (log-linear) training with L-BFGS.
//!
//! `P(y | x) = exp(f(x, y) . w) / sum_y' exp(f(x, y') . w)`; the objective is
//! the corpus log-likelihood minus `l2_penalty * |w|^2`.

use std::collections::VecDeque;

use super::{LearnedModel, ModelKind};
use crate::corpus::{Corpus, PatternCounts};
use crate::error::{Error, Result};
use crate::grammar::{candidate_violations, InputPattern, WeightVector, WordOrder, NUM_CONSTRAINTS};

#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntConfig {
    pub max_iterations: usize,
    /// Stop once the largest gradient component is at most this.
    pub gradient_tolerance: f64,
    pub l2_penalty: f64,
}

impl Default for MaxEntConfig {
    fn default() -> Self {
        MaxEntConfig { max_iterations: 1000, gradient_tolerance: 1e-6, l2_penalty: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct MaxEntOutcome {
    pub model: LearnedModel,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub gradient_max_norm: f64,
}

type Vector = [f64; NUM_CONSTRAINTS];

fn dot(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &Vector) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Penalised log-likelihood and its gradient, summed over patterns in
/// canonical order.
pub fn log_likelihood(counts: &PatternCounts, weights: &WeightVector, l2_penalty: f64) -> (f64, WeightVector) {
    let mut value = 0.0;
    let mut grad = [0.0; NUM_CONSTRAINTS];
    for p in InputPattern::all() {
        let row = counts.row(&p);
        let n: u64 = row.iter().sum();
        if n == 0 {
            continue;
        }
        let cands = candidate_violations(&p);
        let scores = cands.map(|v| weights.harmony(&v));
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps = scores.map(|s| (s - max).exp());
        let z: f64 = exps.iter().sum();
        let log_z = max + z.ln();
        for (k, v) in cands.iter().enumerate() {
            let observed = row[k] as f64;
            let expected = n as f64 * exps[k] / z;
            if row[k] > 0 {
                value += observed * (scores[k] - log_z);
            }
            for (g, &a) in grad.iter_mut().zip(&v.0) {
                *g += (observed - expected) * f64::from(a);
            }
        }
    }
    for (g, &w) in grad.iter_mut().zip(&weights.0) {
        value -= l2_penalty * w * w;
        *g -= 2.0 * l2_penalty * w;
    }
    (value, WeightVector(grad))
}

struct LbfgsResult {
    x: Vector,
    iterations: usize,
    converged: bool,
}

/// Minimises `f` from `x0`. `f` returns value and gradient.
fn lbfgs<F>(f: F, x0: Vector, max_iterations: usize, tolerance: f64) -> LbfgsResult
where
    F: Fn(&Vector) -> (f64, Vector),
{
    const MEMORY: usize = 10;
    const C1: f64 = 1e-4;

    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut history: VecDeque<(Vector, Vector, f64)> = VecDeque::with_capacity(MEMORY);

    for iter in 0..max_iterations {
        if max_norm(&g) <= tolerance {
            return LbfgsResult { x, iterations: iter, converged: true };
        }

        // Two-loop recursion for d = -H g.
        let mut q = g;
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for j in 0..NUM_CONSTRAINTS {
                q[j] -= a * y[j];
            }
            alphas.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / max_norm(&g).max(1.0),
        };
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for j in 0..NUM_CONSTRAINTS {
                q[j] += s[j] * (a - b);
            }
        }
        let mut d = q.map(|v| -v);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.map(|v| -v / max_norm(&g).max(1.0));
            slope = dot(&g, &d);
        }

        // Backtracking with slack for rounding in large sums.
        let slack = 64.0 * f64::EPSILON * fx.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vector = std::array::from_fn(|j| x[j] + t * d[j]);
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + C1 * t * slope + slack {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return LbfgsResult { x, iterations: iter, converged: false };
        };

        let s: Vector = std::array::from_fn(|j| xn[j] - x[j]);
        let y: Vector = std::array::from_fn(|j| gn[j] - g[j]);
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let converged = max_norm(&g) <= tolerance;
    LbfgsResult { x, iterations: max_iterations, converged }
}

/// Fits the weights from zero. Non-convergence is flagged on the outcome
/// and in the model metadata rather than treated as an error.
pub fn maxent_train(train: &Corpus, config: &MaxEntConfig) -> Result<MaxEntOutcome> {
    train.require_nonempty()?;
    if config.max_iterations == 0 {
        return Err(Error::Config("max iterations must be at least 1".into()));
    }
    if config.gradient_tolerance.is_nan() || config.gradient_tolerance <= 0.0 || config.l2_penalty.is_nan() || config.l2_penalty < 0.0 {
        return Err(Error::Config("tolerance must be positive and penalty non-negative".into()));
    }
    let counts = train.counts();
    let objective = |x: &Vector| {
        let (v, g) = log_likelihood(&counts, &WeightVector(*x), config.l2_penalty);
        (-v, g.0.map(|x| -x))
    };
    let result = lbfgs(objective, [0.0; NUM_CONSTRAINTS], config.max_iterations, config.gradient_tolerance);
    let weights = WeightVector(result.x);
    let (ll, grad) = log_likelihood(&counts, &weights, config.l2_penalty);
    let gnorm = max_norm(&grad.0);

    let model = LearnedModel::weighted(ModelKind::MaxEnt, weights)
        .with_meta("learner", "maxent")
        .with_meta("l2_penalty", config.l2_penalty)
        .with_meta("gradient_tolerance", config.gradient_tolerance)
        .with_meta("iterations", result.iterations)
        .with_meta("converged", result.converged)
        .with_meta("log_likelihood", format!("{ll:.6}"))
        .with_meta("train_provenance", &train.provenance);
    Ok(MaxEntOutcome { model, converged: result.converged, iterations: result.iterations, log_likelihood: ll, gradient_max_norm: gnorm })
}

/// Softmax over the six candidates.
pub fn softmax(weights: &WeightVector, input: &InputPattern) -> [f64; WordOrder::COUNT] {
    let scores = candidate_violations(input).map(|v| weights.harmony(&v));
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps = scores.map(|s| (s - max).exp());
    let z: f64 = exps.iter().sum();
    exps.map(|e| e / z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;

    #[test]
    fn even_split_fits_half() {
        let x: InputPattern = "t f f".parse().unwrap();
        let mut sentences = vec![Sentence::new(x, WordOrder::SVO); 5];
        sentences.extend(vec![Sentence::new(x, WordOrder::OVS); 5]);
        let out = maxent_train(&Corpus::new(sentences, ""), &MaxEntConfig::default()).unwrap();
        let d = softmax(out.model.weights().unwrap(), &x);
        assert!((d[WordOrder::SVO.index()] - 0.5).abs() < 1e-3, "{d:?}");
        assert!((d[WordOrder::OVS.index()] - 0.5).abs() < 1e-3, "{d:?}");
    }

    #[test]
    fn penalty_shrinks_weights() {
        let c = crate::corpus::generate_corpus(&crate::corpus::reference_counts(), 0);
        let free = maxent_train(&c, &MaxEntConfig::default()).unwrap();
        let tied = maxent_train(&c, &MaxEntConfig { l2_penalty: 50.0, ..Default::default() }).unwrap();
        assert!(tied.converged);
        let norm = |m: &LearnedModel| dot(&m.weights().unwrap().0, &m.weights().unwrap().0);
        assert!(norm(&tied.model) < norm(&free.model));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(maxent_train(&Corpus::default(), &MaxEntConfig::default()).is_err());
    }
}
