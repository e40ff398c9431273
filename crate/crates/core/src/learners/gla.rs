//! Gradual Learning Algorithm for Stochastic OT.
//!
//! Ranking values move by a fixed plasticity on each error. Prediction
//! during training is either plain OT on the current ranking (ML) or OT
//! after adding `spreading * N(0, 1)` to every ranking value (SOT).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{sign, EpochRecord, LearnedModel, ModelKind};
use crate::corpus::{Corpus, PatternCounts};
use crate::error::{Error, Result};
use crate::grammar::{
    candidate_violations, first_max_by, ot_compare, ot_winner, ranking_from_weights, InputPattern,
    ViolationVector, WeightVector, WordOrder, NUM_CONSTRAINTS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrainPrediction {
    Ml,
    Sot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlaConfig {
    pub plasticity: f64,
    pub spreading: f64,
    pub epochs: usize,
    pub train_prediction: TrainPrediction,
    pub init_seed: u64,
    /// Every ranking value starts here.
    pub initial_value: f64,
    pub reshuffle_each_epoch: bool,
}

impl Default for GlaConfig {
    fn default() -> Self {
        GlaConfig {
            plasticity: 0.01,
            spreading: 2.0,
            epochs: 10,
            train_prediction: TrainPrediction::Sot,
            init_seed: 0,
            initial_value: 100.0,
            reshuffle_each_epoch: false,
        }
    }
}

/// Adds `spreading * z` (z standard normal, one draw per constraint) to a
/// copy of the weights.
pub(crate) fn perturb<R: rand::Rng + ?Sized>(weights: &WeightVector, scale: f64, rng: &mut R) -> WeightVector {
    let mut w = *weights;
    for x in w.0.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x += scale * z;
    }
    w
}

fn ot_choice(weights: &WeightVector, cands: &[ViolationVector; WordOrder::COUNT]) -> usize {
    let ranking = ranking_from_weights(weights);
    first_max_by(cands, |a, b| ot_compare(&ranking, a, b))
}

fn ml_accuracy(weights: &WeightVector, counts: &PatternCounts) -> f64 {
    let ranking = ranking_from_weights(weights);
    let correct: u64 = InputPattern::all().map(|p| counts.get(&p, ot_winner(&ranking, &p))).sum();
    correct as f64 / counts.total().max(1) as f64
}

/// Moves each ranking value by `plasticity` toward the observed candidate
/// wherever the two attribute vectors differ.
pub fn gla_update(weights: &mut WeightVector, truth: &ViolationVector, predicted: &ViolationVector, plasticity: f64) {
    for j in 0..NUM_CONSTRAINTS {
        let d = truth.0[j] - predicted.0[j];
        if d != 0 {
            weights.0[j] += plasticity * sign(d);
        }
    }
}

pub fn gla_train(train: &Corpus, config: &GlaConfig) -> Result<LearnedModel> {
    train.require_nonempty()?;
    if config.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    if !(config.plasticity > 0.0 && config.plasticity.is_finite()) {
        return Err(Error::Config("plasticity must be positive".into()));
    }
    if !(config.spreading >= 0.0 && config.spreading.is_finite()) {
        return Err(Error::Config("spreading must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let mut weights = WeightVector::splat(config.initial_value);
    let table: Vec<[ViolationVector; WordOrder::COUNT]> = InputPattern::all().map(|p| candidate_violations(&p)).collect();
    let counts = train.counts();
    let mut visit: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.reshuffle_each_epoch && epoch > 1 {
            rand::seq::SliceRandom::shuffle(visit.as_mut_slice(), &mut rng);
        }
        let mut mistakes = 0;
        for &i in &visit {
            let s = &train.sentences[i];
            let cands = &table[s.input.index()];
            let predicted = match config.train_prediction {
                TrainPrediction::Ml => ot_choice(&weights, cands),
                TrainPrediction::Sot => ot_choice(&perturb(&weights, config.spreading, &mut rng), cands),
            };
            let truth = s.observed.index();
            if predicted != truth {
                mistakes += 1;
                gla_update(&mut weights, &cands[truth], &cands[predicted], config.plasticity);
            }
        }
        history.push(EpochRecord { epoch, mistakes, train_accuracy: ml_accuracy(&weights, &counts) });
    }

    let train_mode = match config.train_prediction {
        TrainPrediction::Ml => "ML",
        TrainPrediction::Sot => "SOT",
    };
    let mut model = LearnedModel::weighted(ModelKind::Sot, weights)
        .with_meta("learner", "gla")
        .with_meta("plasticity", config.plasticity)
        .with_meta("spreading", config.spreading)
        .with_meta("epochs", config.epochs)
        .with_meta("train_prediction", train_mode)
        .with_meta("init_seed", config.init_seed)
        .with_meta("initial_value", config.initial_value)
        .with_meta("reshuffle", config.reshuffle_each_epoch)
        .with_meta("train_provenance", &train.provenance);
    if let Some(last) = history.last() {
        model = model
            .with_meta("final_epoch_mistakes", last.mistakes)
            .with_meta("final_train_accuracy", format!("{:.6}", last.train_accuracy));
    }
    model.history = history;
    Ok(model)
}

/// The two display normalisations for ranking values: rescaled to sum to
/// 100, and the raw values divided by the spreading.
pub fn normalized_ranking_values(weights: &WeightVector, spreading: f64) -> ([f64; NUM_CONSTRAINTS], [f64; NUM_CONSTRAINTS]) {
    let total: f64 = weights.0.iter().sum();
    let sum_to_100 = weights.0.map(|w| 100.0 * w / total);
    let by_spreading = weights.0.map(|w| if spreading > 0.0 { w / spreading } else { w });
    (sum_to_100, by_spreading)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, reference_counts, Sentence};
    use crate::grammar::Ranking;

    #[test]
    fn consistent_corpus_stops_updating() {
        let mut order = *Ranking::identity().order();
        order.reverse();
        let ranking = Ranking::new(order).unwrap();
        let sentences: Vec<Sentence> =
            InputPattern::all().map(|p| Sentence::new(p, ot_winner(&ranking, &p))).collect();
        let c = Corpus::new(sentences, "ot");
        let cfg = GlaConfig { train_prediction: TrainPrediction::Ml, epochs: 2000, plasticity: 0.1, ..Default::default() };
        let m = gla_train(&c, &cfg).unwrap();
        assert!(m.history[0].mistakes > 0);
        let last = m.history.last().unwrap();
        assert_eq!(last.mistakes, 0);
        assert_eq!(last.train_accuracy, 1.0);
    }

    #[test]
    fn normalisations() {
        let w = WeightVector::splat(100.0);
        let (a, b) = normalized_ranking_values(&w, 2.0);
        assert!(a.iter().all(|&x| (x - 100.0 / 12.0).abs() < 1e-12));
        assert!(b.iter().all(|&x| x == 50.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let c = generate_corpus(&reference_counts(), 2);
        let cfg = GlaConfig { epochs: 2, init_seed: 5, ..Default::default() };
        assert_eq!(gla_train(&c, &cfg).unwrap(), gla_train(&c, &cfg).unwrap());
        assert!(gla_train(&c, &GlaConfig { plasticity: 0.0, ..Default::default() }).is_err());
    }
}
