//! Training algorithms and the learned-model container they produce.

mod cd;
mod gla;
mod maxent;
mod perceptron;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grammar::{Constraint, WeightVector, NUM_CONSTRAINTS};

pub use cd::{cd_train, CdOutcome, CdReport, Strata};
pub use gla::{gla_train, gla_update, normalized_ranking_values, GlaConfig, TrainPrediction};
pub use maxent::{log_likelihood, maxent_train, softmax, MaxEntConfig, MaxEntOutcome};
pub(crate) use gla::perturb as perturb_weights;
pub use perceptron::{
    compute_normalization, perceptron_train, perceptron_update, training_choice, MistakeCounters,
    NormalizationFactors, PerceptronConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Harmonic Grammar weights (perceptron).
    Hg,
    /// Stochastic OT ranking values (GLA).
    Sot,
    /// Stratified hierarchy (Constraint Demotion).
    OtStrata,
    /// Log-linear weights.
    MaxEnt,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Hg => "HG",
            ModelKind::Sot => "SOT",
            ModelKind::OtStrata => "OT-strata",
            ModelKind::MaxEnt => "MaxEnt",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ModelKind::Hg, ModelKind::Sot, ModelKind::OtStrata, ModelKind::MaxEnt]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown model kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Grammar {
    Weighted(WeightVector),
    Stratified(Strata),
}

/// Per-epoch training diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Updates made during the epoch.
    pub mistakes: usize,
    /// Accuracy on the training corpus at the end of the epoch, under the
    /// learner's own deterministic prediction rule.
    pub train_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedModel {
    pub kind: ModelKind,
    pub grammar: Grammar,
    pub meta: BTreeMap<String, String>,
    pub history: Vec<EpochRecord>,
}

impl LearnedModel {
    pub fn weighted(kind: ModelKind, weights: WeightVector) -> Self {
        debug_assert!(kind != ModelKind::OtStrata);
        LearnedModel { kind, grammar: Grammar::Weighted(weights), meta: BTreeMap::new(), history: Vec::new() }
    }

    pub fn stratified(strata: Strata) -> Self {
        LearnedModel {
            kind: ModelKind::OtStrata,
            grammar: Grammar::Stratified(strata),
            meta: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    pub fn weights(&self) -> Option<&WeightVector> {
        match &self.grammar {
            Grammar::Weighted(w) => Some(w),
            Grammar::Stratified(_) => None,
        }
    }

    pub fn strata(&self) -> Option<&Strata> {
        match &self.grammar {
            Grammar::Stratified(s) => Some(s),
            Grammar::Weighted(_) => None,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    /// Line-oriented text form; weights keep 17 significant digits so a
    /// read-back is bit-exact.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind={}", self.kind)?;
        match &self.grammar {
            Grammar::Weighted(weights) => {
                for c in Constraint::ALL {
                    writeln!(w, "weight {} {:.16e}", c.code(), weights.get(c))?;
                }
            }
            Grammar::Stratified(strata) => {
                for (k, stratum) in strata.strata().iter().enumerate() {
                    let names: Vec<&str> = stratum.iter().map(|c| c.code()).collect();
                    writeln!(w, "stratum {}: {}", k + 1, names.join(","))?;
                }
            }
        }
        for (k, v) in &self.meta {
            writeln!(w, "meta {k}={v}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("model text is UTF-8")
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut kind = None;
        let mut weights: [Option<f64>; NUM_CONSTRAINTS] = [None; NUM_CONSTRAINTS];
        let mut strata: Vec<Vec<Constraint>> = Vec::new();
        let mut meta = BTreeMap::new();

        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let bad = |message: String| Error::Parse { line: lineno, message };
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(k) = line.strip_prefix("kind=") {
                if kind.is_some() {
                    return Err(bad("duplicate kind line".into()));
                }
                kind = Some(k.parse::<ModelKind>().map_err(|e| bad(e.to_string()))?);
            } else if let Some(rest) = line.strip_prefix("weight ") {
                let (name, value) =
                    rest.split_once(' ').ok_or_else(|| bad(format!("malformed weight line {line:?}")))?;
                let c: Constraint = name.parse().map_err(|e: Error| bad(e.to_string()))?;
                let v: f64 = value.trim().parse().map_err(|_| bad(format!("bad number {value:?}")))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite weight {value:?}")));
                }
                if weights[c.index()].replace(v).is_some() {
                    return Err(bad(format!("weight for {} given twice", c.code())));
                }
            } else if let Some(rest) = line.strip_prefix("stratum ") {
                let (k, names) =
                    rest.split_once(':').ok_or_else(|| bad(format!("malformed stratum line {line:?}")))?;
                let k: usize = k.trim().parse().map_err(|_| bad(format!("bad stratum number {k:?}")))?;
                if k != strata.len() + 1 {
                    return Err(bad(format!("stratum {k} out of sequence")));
                }
                let members = names
                    .split(',')
                    .map(|n| n.trim())
                    .filter(|n| !n.is_empty())
                    .map(|n| n.parse::<Constraint>())
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| bad(e.to_string()))?;
                strata.push(members);
            } else if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once('=').ok_or_else(|| bad(format!("malformed meta line {line:?}")))?;
                meta.insert(k.to_string(), v.to_string());
            } else {
                return Err(bad(format!("unrecognised line {line:?}")));
            }
        }

        let kind = kind.ok_or_else(|| Error::Parse { line: 0, message: "missing kind= header".into() })?;
        let grammar = if kind == ModelKind::OtStrata {
            if weights.iter().any(Option::is_some) {
                return Err(Error::InvalidValue("OT-strata model must not carry weights".into()));
            }
            Grammar::Stratified(Strata::new(strata)?)
        } else {
            if !strata.is_empty() {
                return Err(Error::InvalidValue(format!("{kind} model must not carry strata")));
            }
            let mut w = [0.0; NUM_CONSTRAINTS];
            for c in Constraint::ALL {
                w[c.index()] = weights[c.index()]
                    .ok_or_else(|| Error::InvalidValue(format!("missing weight for {}", c.code())))?;
            }
            Grammar::Weighted(WeightVector(w))
        };
        Ok(LearnedModel { kind, grammar, meta, history: Vec::new() })
    }
}

pub(crate) fn sign(x: i8) -> f64 {
    f64::from(x.signum())
}
