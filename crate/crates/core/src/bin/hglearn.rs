use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hglearn::corpus::{
    baseline_tally, generate_corpus, read_sentences, resample, reference_counts, upper_bound_predictor, upper_bound_tally,
    write_sentences, Corpus,
};
use hglearn::evaluation::{evaluate_model, ganging_analysis, ganging_scan, render_hg_tableau, render_ot_tableau};
use hglearn::experiment::{repro, ReproConfig};
use hglearn::grammar::{hg_winner, ot_winner, ranking_from_weights, InputPattern, WordOrder};
use hglearn::inference::{
    distributions_csv, predict_distribution, Regime, DEFAULT_NOISE_VARIANCE, DEFAULT_SAMPLES, DEFAULT_SPREADING,
};
use hglearn::learners::{
    cd_train, gla_train, maxent_train, normalized_ranking_values, perceptron_train, EpochRecord, GlaConfig,
    LearnedModel, MaxEntConfig, ModelKind, PerceptronConfig, TrainPrediction,
};
use hglearn::{Error, Result};

/// Standard-output writes that tolerate a closed pipe.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(io::stdout(), $($t)*);
    }};
}

macro_rules! say_raw {
    ($($t:tt)*) => {{
        let _ = write!(io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "hglearn", version, about = "Constraint-grammar learners for word-order prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the tabulated corpus or a resample of it.
    Generate(GenerateArgs),
    /// Train a model on a sentence file.
    Train(TrainArgs),
    /// Score a model on a sentence file.
    Eval(EvalArgs),
    /// Print tableaux and ganging-up analysis for one input.
    Analyze(AnalyzeArgs),
    /// Run the full comparison over several seeds.
    Repro(ReproArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Every tabulated sentence once, in seeded order.
    #[arg(long, conflicts_with = "resample")]
    reference: bool,
    /// Draw N sentences i.i.d. from the tabulated distribution.
    #[arg(long, value_name = "N")]
    resample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sentence file to write; standard output if omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// Also write the per-pattern counts as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Learner {
    Perceptron,
    Gla,
    Cd,
    Maxent,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMode {
    Ml,
    Sot,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(value_enum)]
    learner: Learner,
    #[arg(long, value_name = "PATH")]
    train: PathBuf,
    /// Model file to write.
    #[arg(short = 'o', long)]
    output: PathBuf,
    /// Per-epoch CSV log (epoch, mistakes, train accuracy).
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
    /// Passes over the corpus (CD: upper bound).
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Update step; with normalization the step for a constraint is this
    /// divided by its count.
    #[arg(long, default_value_t = PerceptronConfig::default().learning_rate)]
    learning_rate: f64,
    /// Harmony bonus per past mistake for the true order during training.
    #[arg(long, default_value_t = PerceptronConfig::default().lambda_trick_rate)]
    lambda_trick: f64,
    #[arg(long)]
    no_normalization: bool,
    /// Reshuffle the corpus between epochs.
    #[arg(long)]
    reshuffle: bool,
    #[arg(long, default_value_t = 0.01)]
    plasticity: f64,
    #[arg(long, default_value_t = DEFAULT_SPREADING)]
    spreading: f64,
    /// GLA prediction rule during training.
    #[arg(long, value_enum, default_value = "sot")]
    train_prediction: TrainMode,
    #[arg(long, default_value_t = 100.0)]
    initial_value: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Variance of the Gaussian added to each weight under noisyhg-sample.
    #[arg(long, default_value_t = DEFAULT_NOISE_VARIANCE)]
    noise_variance: f64,
    /// Standard deviation of the noise added to ranking values under sot-sample.
    #[arg(long, default_value_t = DEFAULT_SPREADING)]
    spreading: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_name = "PATH")]
    test: PathBuf,
    /// hg-ml, ot-ml, sot-sample, noisyhg-sample, maxent-argmax or maxent-distribution.
    #[arg(long)]
    regime: Option<String>,
    /// Add always-SVO and modal-upper-bound rows.
    #[arg(long)]
    baselines: bool,
    /// Corpus the upper bound is estimated from; the test corpus if omitted.
    #[arg(long, value_name = "PATH")]
    train: Option<PathBuf>,
    /// Also report weighted KL divergence of predicted distributions.
    #[arg(long)]
    distributions: bool,
    /// Regime for predicted distributions; chosen from the model kind if omitted.
    #[arg(long)]
    distribution_regime: Option<String>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// JSON report file.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// CSV of predicted distributions for every pattern.
    #[arg(long, value_name = "PATH")]
    distributions_csv: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Input such as `t,f,t`.
    #[arg(long, required_unless_present = "scan")]
    pattern: Option<String>,
    /// Two orders to compare, such as `SOV,SVO`; every pair if omitted.
    #[arg(long)]
    candidates: Option<String>,
    /// List every input where the weighted and ranked readings disagree.
    #[arg(long)]
    scan: bool,
}

#[derive(Args)]
struct ReproArgs {
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 50)]
    variation_epochs: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_NOISE_VARIANCE)]
    noise_variance: f64,
    #[arg(long, default_value_t = DEFAULT_SPREADING)]
    spreading: f64,
    /// JSON lines, one object per run.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// One CSV row per run.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let f = File::open(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    read_sentences(BufReader::new(f)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Config(format!("{}:{line}: {message}", path.display())),
        other => other,
    })
}

fn read_model(path: &Path) -> Result<LearnedModel> {
    let f = File::open(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    LearnedModel::read_from(BufReader::new(f)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Config(format!("{}:{line}: {message}", path.display())),
        other => other,
    })
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let counts = reference_counts();
    let corpus = match (a.reference, a.resample) {
        (true, _) => generate_corpus(&counts, a.seed),
        (false, Some(n)) => resample(&counts, n, a.seed)?,
        (false, None) => return Err(Error::Config("one of --reference or --resample N is required".into())),
    };
    match &a.output {
        Some(path) => {
            let mut w = create(path)?;
            write_sentences(&mut w, &corpus)?;
            w.flush()?;
        }
        None => write_sentences(io::stdout().lock(), &corpus)?,
    }
    if let Some(path) = &a.csv {
        write_file(path, &corpus.counts().to_csv())?;
    }
    Ok(())
}

fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,mistakes,train_accuracy\n");
    for r in history {
        out.push_str(&format!("{},{},{:.6}\n", r.epoch, r.mistakes, r.train_accuracy));
    }
    out
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let train = read_corpus(&a.train)?;
    let model = match a.learner {
        Learner::Perceptron => {
            let cfg = PerceptronConfig {
                epochs: a.epochs.unwrap_or(10),
                learning_rate: a.learning_rate,
                lambda_trick_rate: a.lambda_trick,
                init_seed: a.seed,
                use_normalization: !a.no_normalization,
                reshuffle_each_epoch: a.reshuffle,
                ..PerceptronConfig::default()
            };
            perceptron_train(&train, &cfg)?
        }
        Learner::Gla => {
            let cfg = GlaConfig {
                plasticity: a.plasticity,
                spreading: a.spreading,
                epochs: a.epochs.unwrap_or(10),
                train_prediction: match a.train_prediction {
                    TrainMode::Ml => TrainPrediction::Ml,
                    TrainMode::Sot => TrainPrediction::Sot,
                },
                init_seed: a.seed,
                initial_value: a.initial_value,
                reshuffle_each_epoch: a.reshuffle,
            };
            let m = gla_train(&train, &cfg)?;
            let (pct, scaled) = normalized_ranking_values(m.weights().expect("weighted"), a.spreading);
            say!("constraint  ranking  sum-to-100  /spreading");
            for c in hglearn::grammar::Constraint::ALL {
                let i = c.index();
                say!("{:<10} {:>8.3} {:>10.3} {:>10.3}", c.code(), m.weights().unwrap().0[i], pct[i], scaled[i]);
            }
            m
        }
        Learner::Cd => {
            let out = cd_train(&train, a.epochs.unwrap_or(200))?;
            if out.report.oscillating() {
                eprintln!("warning: constraint demotion did not converge: {}", out.report.summary());
            } else {
                say!("{}", out.report.summary());
            }
            out.model
        }
        Learner::Maxent => {
            let cfg = MaxEntConfig { max_iterations: a.max_iterations, gradient_tolerance: a.tolerance, l2_penalty: a.l2 };
            let out = maxent_train(&train, &cfg)?;
            if !out.converged {
                eprintln!(
                    "warning: optimiser stopped after {} iterations with gradient norm {:.3e}",
                    out.iterations, out.gradient_max_norm
                );
            }
            say!("log-likelihood {:.6} after {} iterations", out.log_likelihood, out.iterations);
            out.model
        }
    };
    for r in &model.history {
        say!("epoch {:>3}  mistakes {:>5}  train accuracy {:.4}", r.epoch, r.mistakes, r.train_accuracy);
    }
    let mut w = create(&a.output)?;
    model.write_to(&mut w)?;
    w.flush()?;
    if let Some(path) = &a.log {
        write_file(path, &history_csv(&model.history))?;
    }
    Ok(())
}

fn default_regime(kind: ModelKind) -> Regime {
    match kind {
        ModelKind::Hg => Regime::HgMl,
        ModelKind::Sot | ModelKind::OtStrata => Regime::OtMl,
        ModelKind::MaxEnt => Regime::MaxEntArgmax,
    }
}

fn default_distribution_regime(kind: ModelKind, n: &NoiseArgs) -> Regime {
    match kind {
        ModelKind::Hg => Regime::NoisyHgSample { variance: n.noise_variance },
        ModelKind::Sot => Regime::SotSample { spreading: n.spreading },
        ModelKind::OtStrata => Regime::OtMl,
        ModelKind::MaxEnt => Regime::MaxEntDistribution,
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let test = read_corpus(&a.test)?;
    let n = &a.noise;
    let regime = match &a.regime {
        Some(r) => Regime::parse(r, n.spreading, n.noise_variance)?,
        None => default_regime(model.kind),
    };
    let dist_regime = match &a.distribution_regime {
        Some(r) => Regime::parse(r, n.spreading, n.noise_variance)?,
        None => default_distribution_regime(model.kind, n),
    };
    let report = evaluate_model(&model, &test, &regime, a.distributions.then_some((&dist_regime, n.samples)), n.seed)?;

    say!("{:<28} {:>9} {:>8}", "predictor", "accuracy", "correct");
    say!("{:<28} {:>8.2}% {:>4}/{}", format!("{} {}", model.kind, regime), 100.0 * report.accuracy, report.tally.correct, report.tally.total);
    let mut rows = serde_json::Map::new();
    if a.baselines {
        let base = baseline_tally(&test)?;
        let ub_source = match &a.train {
            Some(p) => read_corpus(p)?,
            None => test.clone(),
        };
        let ub = upper_bound_tally(&upper_bound_predictor(&ub_source)?, &test)?;
        say!("{:<28} {:>8.2}% {:>4}/{}", "baseline (always SVO)", 100.0 * base.fraction(), base.correct, base.total);
        say!("{:<28} {:>8.2}% {:>4}/{}", "upper bound (modal order)", 100.0 * ub.fraction(), ub.correct, ub.total);
        rows.insert("baseline".into(), serde_json::to_value(base).expect("serialisable"));
        rows.insert("upper_bound".into(), serde_json::to_value(ub).expect("serialisable"));
    }
    if let Some(kl) = &report.kl {
        say!("weighted KL divergence ({dist_regime}, {} samples): {:.4} bits", n.samples, kl.weighted);
        say!("  KL smoothing: add-eps, eps = 1/(2*samples), on sampled predictions only");
    }
    if let Some(path) = &a.output {
        let mut value = serde_json::to_value(&report).expect("serialisable");
        if let serde_json::Value::Object(map) = &mut value {
            map.extend(rows);
        }
        write_file(path, &(serde_json::to_string(&value).expect("serialisable") + "\n"))?;
    }
    if let Some(path) = &a.distributions_csv {
        let rows = InputPattern::all()
            .map(|p| Ok((p, predict_distribution(&model, &p, &dist_regime, n.samples, n.seed.wrapping_add(p.index() as u64))?)))
            .collect::<Result<Vec<_>>>()?;
        write_file(path, &distributions_csv(&rows))?;
    }
    Ok(())
}

fn parse_candidates(s: &str) -> Result<(WordOrder, WordOrder)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((a.parse()?, b.parse()?)),
        _ => Err(Error::InvalidValue(format!("expected two orders like SOV,SVO, got {s:?}"))),
    }
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let weights = *model
        .weights()
        .ok_or_else(|| Error::Config("analysis needs a weighted model (HG, SOT or MaxEnt)".into()))?;
    let ranking = ranking_from_weights(&weights);

    if a.scan {
        let mut any = false;
        for p in InputPattern::all() {
            for r in ganging_scan(&weights, &p) {
                any = true;
                say!("{p}: {}", r.verdict());
            }
        }
        if !any {
            say!("no ganging-up event for any input");
        }
        if a.pattern.is_none() {
            return Ok(());
        }
    }

    let pattern: InputPattern = a.pattern.as_deref().expect("required unless --scan").parse()?;
    let hg = hg_winner(&weights, &pattern);
    let ot = ot_winner(&ranking, &pattern);
    say_raw!("{}", render_ot_tableau(&ranking, &pattern, &WordOrder::ALL));
    say!();
    let pair = match &a.candidates {
        Some(s) => Some(parse_candidates(s)?),
        None => (hg != ot).then_some((ot, hg)),
    };
    let shown: Vec<WordOrder> = match pair {
        Some((x, y)) => vec![x, y],
        None => WordOrder::ALL.to_vec(),
    };
    say_raw!("{}", render_hg_tableau(&weights, &pattern, &shown));
    say!();
    say!("OT winner {ot}, HG winner {hg}");
    match pair {
        Some((x, y)) => say!("{}", ganging_analysis(&weights, &pattern, x, y).verdict()),
        None => {
            let events = ganging_scan(&weights, &pattern);
            if events.is_empty() {
                say!("no ganging-up event for input {pattern}");
            }
            for r in events {
                say!("{}", r.verdict());
            }
        }
    }
    Ok(())
}

fn cmd_repro(a: ReproArgs) -> Result<()> {
    let cfg = ReproConfig {
        seeds: a.seeds,
        base_seed: a.base_seed,
        test_size: a.test_size,
        samples: a.samples,
        noise_variance: a.noise_variance,
        spreading: a.spreading,
        epochs: a.epochs,
        variation_epochs: a.variation_epochs,
        ..ReproConfig::default()
    };
    let report = repro(&cfg)?;
    say_raw!("{}", report.summary());
    if let Some(path) = &a.output {
        write_file(path, &report.to_json_lines())?;
    }
    if let Some(path) = &a.csv {
        write_file(path, &report.to_csv())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            say_raw!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("hglearn: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Repro(a) => cmd_repro(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hglearn: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
