//! Accuracy and KL-divergence scoring, and ganging-up analysis with
//! tableau rendering.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{Corpus, PatternCounts};
use crate::error::{Error, Result};
use crate::grammar::{
    evaluate_constraints, harmony, hg_winner, ot_compare, ranking_from_weights, Constraint, InputPattern, Ranking,
    WeightVector, WordOrder,
};
use crate::inference::{check_compatible, predict_distribution, sample_rng, PatternDistribution, Regime, Support};
use crate::learners::LearnedModel;

/// Correct predictions out of a total; kept as integers so exact ratios
/// can be checked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Scores any per-sentence predictor. `predict` gets the sentence index
/// and its input.
pub fn accuracy_with<F>(eval: &Corpus, mut predict: F) -> Result<Tally>
where
    F: FnMut(usize, &InputPattern) -> WordOrder,
{
    eval.require_nonempty()?;
    let correct = eval.iter().enumerate().filter(|(i, s)| predict(*i, &s.input) == s.observed).count();
    Ok(Tally { correct, total: eval.len() })
}

/// Accuracy of a model under a regime. Stochastic regimes draw sentence
/// `i` from stream `i` of `seed`.
pub fn accuracy(model: &LearnedModel, eval: &Corpus, regime: &Regime, seed: u64) -> Result<Tally> {
    check_compatible(model, regime)?;
    let stochastic = regime.is_stochastic();
    accuracy_with(eval, |i, input| {
        let mut rng = sample_rng(seed, if stochastic { i as u64 } else { 0 });
        crate::inference::predict_with(model, input, regime, &mut rng)
    })
}

/// Add-epsilon smoothing for sampled distributions, `eps = 1 / (2 n)`;
/// exact distributions pass through.
pub fn smoothed(dist: &PatternDistribution) -> [f64; WordOrder::COUNT] {
    match dist.support {
        Support::Analytic => dist.probabilities,
        Support::Samples(n) => {
            let eps = 1.0 / (2.0 * n as f64);
            let z = 1.0 + eps * WordOrder::COUNT as f64;
            dist.probabilities.map(|q| (q + eps) / z)
        }
    }
}

/// `D_KL(truth || predicted)` in bits. Sampled predictions are smoothed
/// first; an exact prediction with zero mass where `truth` has mass gives
/// infinity.
pub fn kl_divergence(truth: &PatternDistribution, predicted: &PatternDistribution) -> f64 {
    let q = smoothed(predicted);
    truth
        .probabilities
        .iter()
        .zip(q.iter())
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).log2())
        .sum::<f64>()
        .max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternKl {
    pub pattern: String,
    pub count: u64,
    pub kl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlSummary {
    /// Count-weighted mean over observed patterns, in bits.
    pub weighted: f64,
    pub per_pattern: Vec<PatternKl>,
}

/// Count-weighted KL over patterns observed in `truth`. Patterns with no
/// observations are ignored, so `predicted` only needs those.
pub fn weighted_kl(truth: &PatternCounts, predicted: &BTreeMap<InputPattern, PatternDistribution>) -> Result<KlSummary> {
    let total = truth.total();
    let mut weighted = 0.0;
    let mut per_pattern = Vec::new();
    for p in InputPattern::all() {
        let n = truth.row_sum(&p);
        if n == 0 {
            continue;
        }
        let t = PatternDistribution::from_counts(truth.row(&p)).expect("n > 0");
        let q = predicted
            .get(&p)
            .ok_or_else(|| Error::InvalidValue(format!("no predicted distribution for pattern {p}")))?;
        let kl = kl_divergence(&t, q);
        weighted += n as f64 / total as f64 * kl;
        per_pattern.push(PatternKl { pattern: p.to_string(), count: n, kl });
    }
    Ok(KlSummary { weighted, per_pattern })
}

/// Predicted distributions for every pattern. Pattern `p` draws from seed
/// `seed + p.index()`.
pub fn predicted_distributions(
    model: &LearnedModel,
    regime: &Regime,
    samples: usize,
    seed: u64,
) -> Result<BTreeMap<InputPattern, PatternDistribution>> {
    InputPattern::all()
        .map(|p| Ok((p, predict_distribution(model, &p, regime, samples, seed.wrapping_add(p.index() as u64))?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub regime: String,
    pub accuracy: f64,
    pub tally: Tally,
    /// Accuracy per observed pattern, keyed by the pattern's text form.
    pub per_pattern_accuracy: BTreeMap<String, f64>,
    /// Present when distributions were requested.
    pub kl: Option<KlSummary>,
    pub run_metadata: BTreeMap<String, String>,
}

/// Accuracy (and optionally weighted KL) of one model on a test corpus.
pub fn evaluate_model(
    model: &LearnedModel,
    test: &Corpus,
    regime: &Regime,
    distribution_regime: Option<(&Regime, usize)>,
    seed: u64,
) -> Result<EvaluationReport> {
    let tally = accuracy(model, test, regime, seed)?;
    let mut hits: BTreeMap<InputPattern, (usize, usize)> = BTreeMap::new();
    let stochastic = regime.is_stochastic();
    for (i, s) in test.iter().enumerate() {
        let mut rng = sample_rng(seed, if stochastic { i as u64 } else { 0 });
        let ok = crate::inference::predict_with(model, &s.input, regime, &mut rng) == s.observed;
        let e = hits.entry(s.input).or_default();
        e.0 += usize::from(ok);
        e.1 += 1;
    }
    let per_pattern_accuracy = hits.iter().map(|(p, (c, n))| (p.to_string(), *c as f64 / *n as f64)).collect();

    let kl = match distribution_regime {
        Some((dr, samples)) => {
            let dists = predicted_distributions(model, dr, samples, seed)?;
            Some(weighted_kl(&test.counts(), &dists)?)
        }
        None => None,
    };
    let mut run_metadata = model.meta.clone();
    run_metadata.insert("eval_seed".into(), seed.to_string());
    run_metadata.insert("test_provenance".into(), test.provenance.clone());
    if let Some((dr, samples)) = distribution_regime {
        run_metadata.insert("distribution_regime".into(), dr.to_string());
        run_metadata.insert("samples".into(), samples.to_string());
        run_metadata.insert("kl_smoothing".into(), "add-eps eps=1/(2*samples) on sampled predictions".into());
    }
    Ok(EvaluationReport {
        regime: regime.to_string(),
        accuracy: tally.fraction(),
        tally,
        per_pattern_accuracy,
        kl,
        run_metadata,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscriminatingConstraint {
    pub constraint: Constraint,
    pub weight: f64,
    pub value_a: i8,
    pub value_b: i8,
}

impl DiscriminatingConstraint {
    pub fn favors(&self) -> Ordering {
        self.value_a.cmp(&self.value_b)
    }
}

/// Pairwise comparison of two candidates under one weight vector, read
/// both as a harmonic grammar and as the strict ranking the weights induce.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GangingReport {
    pub input: InputPattern,
    pub candidate_a: WordOrder,
    pub candidate_b: WordOrder,
    pub ot_winner: WordOrder,
    pub hg_winner: WordOrder,
    /// Constraints on which the candidates differ, highest weight first.
    pub discriminating: Vec<DiscriminatingConstraint>,
    /// `sum(w_j * f_j(a))` over the discriminating constraints.
    pub sum_a: f64,
    pub sum_b: f64,
}

impl GangingReport {
    /// Discriminating-constraint sum of the HG winner. The harmony gap
    /// between the two candidates is twice this.
    pub fn differing_sum(&self) -> f64 {
        if self.hg_winner == self.candidate_a {
            self.sum_a
        } else {
            self.sum_b
        }
    }

    pub fn is_ganging(&self) -> bool {
        self.ot_winner != self.hg_winner
    }

    fn favoring(&self, winner: WordOrder) -> Vec<&DiscriminatingConstraint> {
        let want = if winner == self.candidate_a { Ordering::Greater } else { Ordering::Less };
        self.discriminating.iter().filter(|d| d.favors() == want).collect()
    }

    /// Constraints that side with the HG winner.
    pub fn gang(&self) -> Vec<Constraint> {
        self.favoring(self.hg_winner).into_iter().map(|d| d.constraint).collect()
    }

    /// Constraints that side with the OT winner.
    pub fn opponents(&self) -> Vec<Constraint> {
        self.favoring(self.ot_winner).into_iter().map(|d| d.constraint).collect()
    }

    /// Total weight of the discriminating constraints siding with `winner`.
    pub fn weight_for(&self, winner: WordOrder) -> f64 {
        self.favoring(winner).iter().map(|d| d.weight).sum()
    }

    pub fn verdict(&self) -> String {
        if !self.is_ganging() {
            return format!(
                "{} vs {}: no ganging-up event (both readings pick {})",
                self.candidate_a, self.candidate_b, self.hg_winner
            );
        }
        let top = self.discriminating.first().map(|d| d.constraint.name()).unwrap_or("-");
        let gang: Vec<&str> = self.gang().iter().map(|c| c.name()).collect();
        format!(
            "{} vs {}: ganging-up event; strict ranking picks {} on {}, weights pick {} because {{{}}} outweigh it (differing sum {:+.2})",
            self.candidate_a,
            self.candidate_b,
            self.ot_winner,
            top,
            self.hg_winner,
            gang.join(", "),
            self.differing_sum()
        )
    }
}

pub fn ganging_analysis(weights: &WeightVector, input: &InputPattern, a: WordOrder, b: WordOrder) -> GangingReport {
    let va = evaluate_constraints(input, a);
    let vb = evaluate_constraints(input, b);
    let mut discriminating: Vec<DiscriminatingConstraint> = Constraint::ALL
        .into_iter()
        .filter(|&c| va.get(c) != vb.get(c))
        .map(|c| DiscriminatingConstraint { constraint: c, weight: weights.get(c), value_a: va.get(c), value_b: vb.get(c) })
        .collect();
    discriminating.sort_by(|x, y| y.weight.total_cmp(&x.weight).then(x.constraint.cmp(&y.constraint)));
    let sum_a = discriminating.iter().map(|d| d.weight * f64::from(d.value_a)).sum();
    let sum_b = discriminating.iter().map(|d| d.weight * f64::from(d.value_b)).sum();

    let lower_index = if a <= b { a } else { b };
    let pick = |ord: Ordering| match ord {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => lower_index,
    };
    let ranking = ranking_from_weights(weights);
    let ot_winner = pick(ot_compare(&ranking, &va, &vb));
    let hg_winner = pick(harmony(weights, &va).total_cmp(&harmony(weights, &vb)));
    GangingReport { input: *input, candidate_a: a, candidate_b: b, ot_winner, hg_winner, discriminating, sum_a, sum_b }
}

/// Pairs (challenger, HG optimum) where the strict ranking prefers the
/// challenger but the weights keep the HG optimum.
pub fn ganging_scan(weights: &WeightVector, input: &InputPattern) -> Vec<GangingReport> {
    let best = hg_winner(weights, input);
    WordOrder::ALL
        .into_iter()
        .filter(|&o| o != best)
        .map(|o| ganging_analysis(weights, input, o, best))
        .filter(|r| r.is_ganging())
        .collect()
}

fn pad(s: &str, width: usize) -> String {
    format!("{s:^width$}")
}

/// Strict-ranking tableau. Columns follow the ranking, skipping
/// constraints that are vacuous for the input; `x` marks a violation and
/// `x!` the violation that eliminates a candidate. `->` flags the winner.
pub fn render_ot_tableau(ranking: &Ranking, input: &InputPattern, candidates: &[WordOrder]) -> String {
    let vectors: Vec<_> = candidates.iter().map(|&o| evaluate_constraints(input, o)).collect();
    let columns: Vec<Constraint> =
        ranking.order().iter().copied().filter(|&c| vectors.iter().any(|v| v.get(c) != 0)).collect();

    // Sequential elimination, recording where each candidate falls.
    let mut alive: Vec<bool> = vec![true; candidates.len()];
    let mut fatal: Vec<Option<Constraint>> = vec![None; candidates.len()];
    for &c in &columns {
        let best = vectors.iter().zip(&alive).filter(|(_, a)| **a).map(|(v, _)| v.get(c)).max();
        if let Some(best) = best {
            for (k, v) in vectors.iter().enumerate() {
                if alive[k] && v.get(c) < best {
                    alive[k] = false;
                    fatal[k] = Some(c);
                }
            }
        }
    }
    let winner = alive.iter().position(|&a| a);

    let widths: Vec<usize> = columns.iter().map(|c| c.name().len().max(3) + 2).collect();
    let mut out = String::new();
    writeln!(out, "OT tableau for input {input}").unwrap();
    write!(out, "{:8}|", "").unwrap();
    for (c, w) in columns.iter().zip(&widths) {
        write!(out, "{}|", pad(c.name(), *w)).unwrap();
    }
    out.push('\n');
    let rule = "-".repeat(9 + widths.iter().map(|w| w + 1).sum::<usize>());
    writeln!(out, "{rule}").unwrap();
    for (k, &o) in candidates.iter().enumerate() {
        let flag = if Some(k) == winner { "->" } else { "" };
        write!(out, "{flag:>3} {o:<4}|").unwrap();
        for (c, w) in columns.iter().zip(&widths) {
            let mark = match (vectors[k].get(*c) < 0, fatal[k] == Some(*c)) {
                (true, true) => "x!",
                (true, false) => "x",
                _ => "",
            };
            write!(out, "{}|", pad(mark, *w)).unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "{rule}").unwrap();
    if let Some(k) = winner {
        writeln!(out, "winner: {}", candidates[k]).unwrap();
    }
    out
}

/// Weighted tableau: one row per constraint (highest weight first) with
/// `+`, `-` or `0` per candidate, per-candidate contributions on rows where
/// the candidates differ, the discriminating sum, and total harmony.
pub fn render_hg_tableau(weights: &WeightVector, input: &InputPattern, candidates: &[WordOrder]) -> String {
    let vectors: Vec<_> = candidates.iter().map(|&o| evaluate_constraints(input, o)).collect();
    let ranking = ranking_from_weights(weights);
    let harmonies: Vec<f64> = vectors.iter().map(|v| harmony(weights, v)).collect();
    let winner = crate::grammar::first_max_by(&harmonies, |a, b| a.total_cmp(b));

    let name_w = Constraint::ALL.iter().map(|c| c.name().len()).max().unwrap() + 2;
    let mut out = String::new();
    writeln!(out, "HG tableau for input {input}").unwrap();
    write!(out, "{:<name_w$}|{:>8} |", "Constraint", "Weight").unwrap();
    for o in candidates {
        write!(out, "{:^5}|", o.name()).unwrap();
    }
    for o in candidates {
        write!(out, "{:^9}|", o.name()).unwrap();
    }
    out.push('\n');
    let rule = "-".repeat(name_w + 11 + candidates.len() * 16);
    writeln!(out, "{rule}").unwrap();

    let mut diff_sums = vec![0.0; candidates.len()];
    for &c in ranking.order() {
        let values: Vec<i8> = vectors.iter().map(|v| v.get(c)).collect();
        let differs = values.iter().any(|&x| x != values[0]);
        let star = if differs { "*" } else { " " };
        write!(out, "{star}{:<w$}|{:>8.2} |", c.name(), weights.get(c), w = name_w - 1).unwrap();
        for &x in &values {
            let s = match x {
                1 => "+",
                -1 => "-",
                _ => "0",
            };
            write!(out, "{s:^5}|").unwrap();
        }
        for (k, &x) in values.iter().enumerate() {
            if differs {
                let contrib = weights.get(c) * f64::from(x);
                diff_sums[k] += contrib;
                write!(out, "{:>8.2} |", contrib).unwrap();
            } else {
                write!(out, "{:9}|", "").unwrap();
            }
        }
        out.push('\n');
    }
    writeln!(out, "{rule}").unwrap();
    write!(out, "{:<w$}", "Sum of differing elements", w = name_w + 10 + candidates.len() * 6 + 1).unwrap();
    for s in &diff_sums {
        write!(out, "{:>+8.2} |", s).unwrap();
    }
    out.push('\n');
    write!(out, "{:<w$}", "Harmony", w = name_w + 10 + candidates.len() * 6 + 1).unwrap();
    for h in &harmonies {
        write!(out, "{:>+8.2} |", h).unwrap();
    }
    out.push('\n');
    writeln!(out, "winner: {}", candidates[winner]).unwrap();
    out
}
