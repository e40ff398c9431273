//! Prediction regimes over learned models and predicted distributions.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grammar::{hg_winner, ot_winner, ranking_from_weights, InputPattern, WordOrder};
use crate::learners::{Grammar, LearnedModel};

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.001;
pub const DEFAULT_SPREADING: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regime {
    /// Harmony maximisation.
    HgMl,
    /// Strict ranking read off the weights (or the strata), no noise.
    OtMl,
    /// `spreading * N(0, 1)` added to each ranking value, then strict ranking.
    SotSample { spreading: f64 },
    /// `N(0, variance)` added to each weight of the vector rescaled to unit
    /// L1 norm, then harmony maximisation. The rescaling makes the noise
    /// level independent of the arbitrary overall scale of the weights.
    NoisyHgSample { variance: f64 },
    MaxEntArgmax,
    /// Single predictions draw from the softmax; distributions are exact.
    MaxEntDistribution,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::HgMl => "hg-ml",
            Regime::OtMl => "ot-ml",
            Regime::SotSample { .. } => "sot-sample",
            Regime::NoisyHgSample { .. } => "noisyhg-sample",
            Regime::MaxEntArgmax => "maxent-argmax",
            Regime::MaxEntDistribution => "maxent-distribution",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        match *self {
            Regime::SotSample { spreading } => spreading > 0.0,
            Regime::NoisyHgSample { variance } => variance > 0.0,
            Regime::MaxEntDistribution => true,
            _ => false,
        }
    }

    /// Parses a regime name, taking noise parameters from the arguments.
    pub fn parse(name: &str, spreading: f64, variance: f64) -> Result<Self> {
        Ok(match name {
            "hg-ml" => Regime::HgMl,
            "ot-ml" => Regime::OtMl,
            "sot-sample" => Regime::SotSample { spreading },
            "noisyhg-sample" => Regime::NoisyHgSample { variance },
            "maxent-argmax" => Regime::MaxEntArgmax,
            "maxent-distribution" => Regime::MaxEntDistribution,
            _ => return Err(Error::InvalidValue(format!("unknown regime {name:?}"))),
        })
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::SotSample { spreading } => write!(f, "sot-sample(spreading={spreading})"),
            Regime::NoisyHgSample { variance } => write!(f, "noisyhg-sample(variance={variance})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    Analytic,
    /// Empirical frequencies from this many draws.
    Samples(u64),
}

/// Probabilities over the six orders, indexed by [`WordOrder::index`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternDistribution {
    pub probabilities: [f64; WordOrder::COUNT],
    pub support: Support,
}

impl PatternDistribution {
    pub fn analytic(probabilities: [f64; WordOrder::COUNT]) -> Self {
        PatternDistribution { probabilities, support: Support::Analytic }
    }

    pub fn uniform() -> Self {
        Self::analytic([1.0 / WordOrder::COUNT as f64; WordOrder::COUNT])
    }

    pub fn from_counts(counts: &[u64; WordOrder::COUNT]) -> Option<Self> {
        let n: u64 = counts.iter().sum();
        (n > 0).then(|| PatternDistribution {
            probabilities: counts.map(|c| c as f64 / n as f64),
            support: Support::Samples(n),
        })
    }

    pub fn prob(&self, order: WordOrder) -> f64 {
        self.probabilities[order.index()]
    }

    /// Most probable order; ties go to the lower canonical index.
    pub fn mode(&self) -> WordOrder {
        WordOrder::ALL[crate::grammar::first_max_by(&self.probabilities, |a, b| a.total_cmp(b))]
    }

    pub fn sample_count(&self) -> Option<u64> {
        match self.support {
            Support::Samples(n) => Some(n),
            Support::Analytic => None,
        }
    }
}

pub fn check_compatible(model: &LearnedModel, regime: &Regime) -> Result<()> {
    let ok = match (&model.grammar, regime) {
        (Grammar::Weighted(_), _) => true,
        (Grammar::Stratified(_), Regime::OtMl) => true,
        (Grammar::Stratified(_), _) => false,
    };
    let params_ok = match *regime {
        Regime::SotSample { spreading } => spreading >= 0.0 && spreading.is_finite(),
        Regime::NoisyHgSample { variance } => variance >= 0.0 && variance.is_finite(),
        _ => true,
    };
    if !params_ok {
        return Err(Error::Config(format!("bad noise parameter in {regime}")));
    }
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleRegime { regime: regime.to_string(), kind: model.kind.to_string() })
    }
}

/// Random stream for draw `index` under `seed`. Streams are independent,
/// so a draw does not depend on how many others were made before it.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn predict_unchecked<R: Rng + ?Sized>(model: &LearnedModel, input: &InputPattern, regime: &Regime, rng: &mut R) -> WordOrder {
    let weights = match &model.grammar {
        Grammar::Stratified(strata) => return strata.winner(input),
        Grammar::Weighted(w) => w,
    };
    match *regime {
        Regime::HgMl | Regime::MaxEntArgmax => hg_winner(weights, input),
        Regime::OtMl => ot_winner(&ranking_from_weights(weights), input),
        Regime::SotSample { spreading } => {
            let noisy = crate::learners::perturb_weights(weights, spreading, rng);
            ot_winner(&ranking_from_weights(&noisy), input)
        }
        Regime::NoisyHgSample { variance } => {
            let noisy = crate::learners::perturb_weights(&weights.l1_normalized(), variance.sqrt(), rng);
            hg_winner(&noisy, input)
        }
        Regime::MaxEntDistribution => {
            let probs = crate::learners::softmax(weights, input);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return WordOrder::ALL[k];
                }
            }
            WordOrder::ALL[probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)]
        }
    }
}

/// Prediction with a caller-supplied generator; the regime must already
/// have been checked against the model.
pub(crate) fn predict_with<R: Rng + ?Sized>(model: &LearnedModel, input: &InputPattern, regime: &Regime, rng: &mut R) -> WordOrder {
    predict_unchecked(model, input, regime, rng)
}

/// Single prediction. Stochastic regimes draw from `rng_seed`.
pub fn predict(model: &LearnedModel, input: &InputPattern, regime: &Regime, rng_seed: u64) -> Result<WordOrder> {
    check_compatible(model, regime)?;
    Ok(predict_unchecked(model, input, regime, &mut sample_rng(rng_seed, 0)))
}

/// Predicted distribution for one input: exact for the MaxEnt
/// distribution regime, otherwise the frequencies of `samples` draws
/// (draw `k` uses stream `k` of `rng_seed`).
pub fn predict_distribution(
    model: &LearnedModel,
    input: &InputPattern,
    regime: &Regime,
    samples: usize,
    rng_seed: u64,
) -> Result<PatternDistribution> {
    check_compatible(model, regime)?;
    if let (Regime::MaxEntDistribution, Some(w)) = (regime, model.weights()) {
        return Ok(PatternDistribution::analytic(crate::learners::softmax(w, input)));
    }
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let mut counts = [0u64; WordOrder::COUNT];
    if regime.is_stochastic() {
        for k in 0..samples {
            let o = predict_unchecked(model, input, regime, &mut sample_rng(rng_seed, k as u64));
            counts[o.index()] += 1;
        }
    } else {
        let o = predict_unchecked(model, input, regime, &mut sample_rng(rng_seed, 0));
        counts[o.index()] = samples as u64;
    }
    Ok(PatternDistribution::from_counts(&counts).expect("samples > 0"))
}

/// CSV with columns `pattern,SVO,OVS,VSO,SOV,VOS,OSV,samples`; `samples`
/// is `analytic` for exact distributions.
pub fn distributions_csv(rows: &[(InputPattern, PatternDistribution)]) -> String {
    let mut out = String::from("pattern,SVO,OVS,VSO,SOV,VOS,OSV,samples\n");
    for (p, d) in rows {
        out.push_str(&p.to_string());
        for x in d.probabilities {
            out.push_str(&format!(",{x:.6}"));
        }
        match d.support {
            Support::Analytic => out.push_str(",analytic\n"),
            Support::Samples(n) => out.push_str(&format!(",{n}\n")),
        }
    }
    out
}
