//! The full comparison pipeline over several seeds: accuracy of every
//! learner and regime on a resampled test set, then weighted KL of the
//! learners' predicted distributions.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{
    baseline_accuracy, generate_corpus, resample, reference_counts, upper_bound_accuracy, upper_bound_predictor, Corpus,
    PatternCounts,
};
use crate::error::{Error, Result};
use crate::evaluation::{accuracy, predicted_distributions, weighted_kl};
use crate::grammar::{InputPattern, WordOrder};
use crate::inference::{
    PatternDistribution, Regime, DEFAULT_NOISE_VARIANCE, DEFAULT_SAMPLES, DEFAULT_SPREADING,
};
use crate::learners::{
    gla_train, maxent_train, perceptron_train, GlaConfig, LearnedModel, MaxEntConfig, PerceptronConfig, TrainPrediction,
};

#[derive(Clone, Debug)]
pub struct ReproConfig {
    pub seeds: usize,
    pub base_seed: u64,
    pub test_size: usize,
    pub samples: usize,
    pub noise_variance: f64,
    pub spreading: f64,
    /// Epochs for the accuracy runs.
    pub epochs: usize,
    /// Epochs for the distribution runs.
    pub variation_epochs: usize,
    pub perceptron: PerceptronConfig,
    pub gla: GlaConfig,
    pub maxent: MaxEntConfig,
}

impl Default for ReproConfig {
    fn default() -> Self {
        ReproConfig {
            seeds: 10,
            base_seed: 0,
            test_size: 1000,
            samples: DEFAULT_SAMPLES,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            spreading: DEFAULT_SPREADING,
            epochs: 10,
            variation_epochs: 50,
            perceptron: PerceptronConfig::default(),
            gla: GlaConfig::default(),
            maxent: MaxEntConfig::default(),
        }
    }
}

/// Seeds for every random step of one run, drawn in a fixed order from the
/// run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunSeeds {
    pub run: u64,
    pub train_shuffle: u64,
    pub test_resample: u64,
    pub learner_init: u64,
    pub prediction: u64,
}

impl RunSeeds {
    pub fn derive(run: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(run);
        RunSeeds {
            run,
            train_shuffle: rng.next_u64(),
            test_resample: rng.next_u64(),
            learner_init: rng.next_u64(),
            prediction: rng.next_u64(),
        }
    }
}

/// Predicted distribution summary for one pattern.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternView {
    pub mode: WordOrder,
    pub mode_probability: f64,
    pub probabilities: [f64; WordOrder::COUNT],
}

impl From<&PatternDistribution> for PatternView {
    fn from(d: &PatternDistribution) -> Self {
        let mode = d.mode();
        PatternView { mode, mode_probability: d.prob(mode), probabilities: d.probabilities }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearnerVariation {
    pub weighted_kl: f64,
    /// Focused subject and verb, contrastive object.
    pub ffc: PatternView,
    /// Everything focused.
    pub fff: PatternView,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub seeds: RunSeeds,
    pub baseline: f64,
    pub upper_bound: f64,
    pub perceptron: f64,
    pub gla_sot_train_ml_test: f64,
    pub gla_sot_train_sot_test: f64,
    pub gla_ml_train_ml_test: f64,
    pub gla_ml_train_sot_test: f64,
    pub maxent: f64,
    pub kl_perceptron: LearnerVariation,
    pub kl_gla: LearnerVariation,
    pub kl_maxent: LearnerVariation,
    pub kl_uniform: f64,
    /// Observed test frequency of each order for the two patterns above.
    pub test_ffc: [f64; WordOrder::COUNT],
    pub test_fff: [f64; WordOrder::COUNT],
}

fn ffc() -> InputPattern {
    "f f c".parse().expect("valid pattern")
}

fn fff() -> InputPattern {
    "f f f".parse().expect("valid pattern")
}

fn test_frequencies(counts: &PatternCounts, p: &InputPattern) -> [f64; WordOrder::COUNT] {
    PatternDistribution::from_counts(counts.row(p)).map(|d| d.probabilities).unwrap_or([0.0; WordOrder::COUNT])
}

fn variation(model: &LearnedModel, regime: &Regime, test: &PatternCounts, samples: usize, seed: u64) -> Result<LearnerVariation> {
    let dists = predicted_distributions(model, regime, samples, seed)?;
    let kl = weighted_kl(test, &dists)?;
    Ok(LearnerVariation { weighted_kl: kl.weighted, ffc: (&dists[&ffc()]).into(), fff: (&dists[&fff()]).into() })
}

/// One seeded run over a given training and test corpus.
pub fn run_once(train: &Corpus, test: &Corpus, seeds: RunSeeds, config: &ReproConfig) -> Result<RunResult> {
    let test_counts = test.counts();
    let pred_seed = seeds.prediction;

    let ub = upper_bound_predictor(train)?;
    let upper_bound = upper_bound_accuracy(&ub, test)?;
    let baseline = baseline_accuracy(test)?;

    let pcfg = PerceptronConfig { epochs: config.epochs, init_seed: seeds.learner_init, ..config.perceptron.clone() };
    let perceptron_model = perceptron_train(train, &pcfg)?;
    let perceptron = accuracy(&perceptron_model, test, &Regime::HgMl, pred_seed)?.fraction();

    let sot = Regime::SotSample { spreading: config.spreading };
    let gla_with = |mode: TrainPrediction, epochs: usize| {
        let cfg = GlaConfig {
            epochs,
            train_prediction: mode,
            init_seed: seeds.learner_init,
            spreading: config.spreading,
            ..config.gla.clone()
        };
        gla_train(train, &cfg)
    };
    let gla_sot = gla_with(TrainPrediction::Sot, config.epochs)?;
    let gla_ml = gla_with(TrainPrediction::Ml, config.epochs)?;

    let maxent_model = maxent_train(train, &config.maxent)?.model;
    let maxent = accuracy(&maxent_model, test, &Regime::MaxEntArgmax, pred_seed)?.fraction();

    let pvar = PerceptronConfig { epochs: config.variation_epochs, ..pcfg };
    let perceptron_var = perceptron_train(train, &pvar)?;
    let gla_var = gla_with(TrainPrediction::Sot, config.variation_epochs)?;
    let noisy = Regime::NoisyHgSample { variance: config.noise_variance };

    let uniform = InputPattern::all().map(|p| (p, PatternDistribution::uniform())).collect();

    Ok(RunResult {
        seeds,
        baseline,
        upper_bound,
        perceptron,
        gla_sot_train_ml_test: accuracy(&gla_sot, test, &Regime::OtMl, pred_seed)?.fraction(),
        gla_sot_train_sot_test: accuracy(&gla_sot, test, &sot, pred_seed)?.fraction(),
        gla_ml_train_ml_test: accuracy(&gla_ml, test, &Regime::OtMl, pred_seed)?.fraction(),
        gla_ml_train_sot_test: accuracy(&gla_ml, test, &sot, pred_seed)?.fraction(),
        maxent,
        kl_perceptron: variation(&perceptron_var, &noisy, &test_counts, config.samples, pred_seed)?,
        kl_gla: variation(&gla_var, &sot, &test_counts, config.samples, pred_seed)?,
        kl_maxent: variation(&maxent_model, &Regime::MaxEntDistribution, &test_counts, config.samples, pred_seed)?,
        kl_uniform: weighted_kl(&test_counts, &uniform)?.weighted,
        test_ffc: test_frequencies(&test_counts, &ffc()),
        test_fff: test_frequencies(&test_counts, &fff()),
    })
}

/// Trains on the exact tabulated corpus in a seeded order and tests on a
/// seeded i.i.d. resample of it.
pub fn run_seed(run: u64, config: &ReproConfig) -> Result<RunResult> {
    let seeds = RunSeeds::derive(run);
    let counts = reference_counts();
    let train = generate_corpus(&counts, seeds.train_shuffle);
    let test = resample(&counts, config.test_size, seeds.test_resample)?;
    run_once(&train, &test, seeds, config)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproReport {
    pub runs: Vec<RunResult>,
}

/// Runs seeds `base_seed .. base_seed + seeds` on separate threads;
/// results come back in seed order.
pub fn repro(config: &ReproConfig) -> Result<ReproReport> {
    if config.seeds == 0 {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let runs: Vec<Result<RunResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.seeds as u64)
            .map(|i| scope.spawn(move || run_seed(config.base_seed + i, config)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });
    Ok(ReproReport { runs: runs.into_iter().collect::<Result<_>>()? })
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ReproReport {
    pub fn column(&self, f: impl Fn(&RunResult) -> f64) -> Vec<f64> {
        self.runs.iter().map(f).collect()
    }

    pub fn mean(&self, f: impl Fn(&RunResult) -> f64) -> f64 {
        mean_std(&self.column(f)).0
    }

    /// Number of runs where `pred` holds.
    pub fn count(&self, pred: impl Fn(&RunResult) -> bool) -> usize {
        self.runs.iter().filter(|r| pred(r)).count()
    }

    /// One JSON object per run.
    pub fn to_json_lines(&self) -> String {
        self.runs.iter().map(|r| serde_json::to_string(r).expect("serialisable") + "\n").collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "run,baseline,upper_bound,perceptron,gla_sot_ml,gla_sot_sot,gla_ml_ml,gla_ml_sot,maxent,kl_perceptron,kl_gla,kl_maxent,kl_uniform\n",
        );
        for r in &self.runs {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.seeds.run,
                r.baseline,
                r.upper_bound,
                r.perceptron,
                r.gla_sot_train_ml_test,
                r.gla_sot_train_sot_test,
                r.gla_ml_train_ml_test,
                r.gla_ml_train_sot_test,
                r.maxent,
                r.kl_perceptron.weighted_kl,
                r.kl_gla.weighted_kl,
                r.kl_maxent.weighted_kl,
                r.kl_uniform
            )
            .unwrap();
        }
        out
    }

    /// Human-readable mean +/- std table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, label: &str, xs: Vec<f64>, pct: bool| {
            let (m, s) = mean_std(&xs);
            if pct {
                writeln!(out, "  {label:<38} {:>6.2}% +/- {:.2}", 100.0 * m, 100.0 * s).unwrap();
            } else {
                writeln!(out, "  {label:<38} {m:>7.3} +/- {s:.3}").unwrap();
            }
        };
        writeln!(out, "runs: {} (seeds {})", self.runs.len(), self.seed_list()).unwrap();
        writeln!(out, "test accuracy").unwrap();
        row(&mut out, "always SVO", self.column(|r| r.baseline), true);
        row(&mut out, "modal upper bound", self.column(|r| r.upper_bound), true);
        row(&mut out, "perceptron (HG, ML)", self.column(|r| r.perceptron), true);
        row(&mut out, "GLA SOT-train / ML-test", self.column(|r| r.gla_sot_train_ml_test), true);
        row(&mut out, "GLA SOT-train / SOT-test", self.column(|r| r.gla_sot_train_sot_test), true);
        row(&mut out, "GLA ML-train / ML-test", self.column(|r| r.gla_ml_train_ml_test), true);
        row(&mut out, "GLA ML-train / SOT-test", self.column(|r| r.gla_ml_train_sot_test), true);
        row(&mut out, "MaxEnt (argmax)", self.column(|r| r.maxent), true);
        writeln!(
            out,
            "  perceptron > GLA SOT/ML in {} of {} runs",
            self.count(|r| r.perceptron > r.gla_sot_train_ml_test),
            self.runs.len()
        )
        .unwrap();
        writeln!(out, "weighted KL divergence (bits)").unwrap();
        row(&mut out, "perceptron (noisy HG)", self.column(|r| r.kl_perceptron.weighted_kl), false);
        row(&mut out, "GLA (SOT sampling)", self.column(|r| r.kl_gla.weighted_kl), false);
        row(&mut out, "MaxEnt (analytic)", self.column(|r| r.kl_maxent.weighted_kl), false);
        row(&mut out, "uniform", self.column(|r| r.kl_uniform), false);
        writeln!(
            out,
            "  MaxEnt < perceptron < GLA in {} of {} runs",
            self.count(|r| r.kl_maxent.weighted_kl < r.kl_perceptron.weighted_kl
                && r.kl_perceptron.weighted_kl < r.kl_gla.weighted_kl),
            self.runs.len()
        )
        .unwrap();
        writeln!(out, "pattern f f c: P(OVS)").unwrap();
        row(&mut out, "test", self.column(|r| r.test_ffc[WordOrder::OVS.index()]), true);
        row(&mut out, "perceptron", self.column(|r| r.kl_perceptron.ffc.probabilities[WordOrder::OVS.index()]), true);
        row(&mut out, "GLA", self.column(|r| r.kl_gla.ffc.probabilities[WordOrder::OVS.index()]), true);
        row(&mut out, "MaxEnt", self.column(|r| r.kl_maxent.ffc.probabilities[WordOrder::OVS.index()]), true);
        writeln!(out, "pattern f f f: P(SOV)").unwrap();
        row(&mut out, "test", self.column(|r| r.test_fff[WordOrder::SOV.index()]), true);
        row(&mut out, "perceptron", self.column(|r| r.kl_perceptron.fff.probabilities[WordOrder::SOV.index()]), true);
        row(&mut out, "GLA", self.column(|r| r.kl_gla.fff.probabilities[WordOrder::SOV.index()]), true);
        row(&mut out, "MaxEnt", self.column(|r| r.kl_maxent.fff.probabilities[WordOrder::SOV.index()]), true);
        writeln!(out, "KL smoothing: add-eps, eps = 1/(2*samples), on sampled predictions only").unwrap();
        out
    }

    fn seed_list(&self) -> String {
        let s: Vec<String> = self.runs.iter().map(|r| r.seeds.run.to_string()).collect();
        s.join(",")
    }
}
