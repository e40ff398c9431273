//! Constraint Demotion over a stratified hierarchy.

use std::cmp::Ordering;
use std::collections::HashSet;

use super::{EpochRecord, LearnedModel};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::grammar::{candidate_violations, first_max_by, Constraint, InputPattern, ViolationVector, WordOrder, NUM_CONSTRAINTS};

/// Ordered partition of the constraints, top stratum first. Candidates are
/// compared stratum by stratum on the summed attribute values of each
/// stratum.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Strata(Vec<Vec<Constraint>>);

impl Strata {
    pub fn new(strata: Vec<Vec<Constraint>>) -> Result<Self> {
        let mut seen = [false; NUM_CONSTRAINTS];
        for stratum in &strata {
            if stratum.is_empty() {
                return Err(Error::InvalidValue("empty stratum".into()));
            }
            for c in stratum {
                if std::mem::replace(&mut seen[c.index()], true) {
                    return Err(Error::InvalidValue(format!("constraint {} in two strata", c.code())));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidValue(format!("constraint {} missing from strata", Constraint::ALL[i].code())));
        }
        Ok(Strata(strata))
    }

    /// Everything in one stratum.
    pub fn flat() -> Self {
        Strata(vec![Constraint::ALL.to_vec()])
    }

    pub fn strata(&self) -> &[Vec<Constraint>] {
        &self.0
    }

    fn level_of(&self) -> [usize; NUM_CONSTRAINTS] {
        let mut level = [0; NUM_CONSTRAINTS];
        for (k, stratum) in self.0.iter().enumerate() {
            for c in stratum {
                level[c.index()] = k;
            }
        }
        level
    }

    pub fn compare(&self, a: &ViolationVector, b: &ViolationVector) -> Ordering {
        for stratum in &self.0 {
            let sa: i32 = stratum.iter().map(|&c| i32::from(a.get(c))).sum();
            let sb: i32 = stratum.iter().map(|&c| i32::from(b.get(c))).sum();
            match sa.cmp(&sb) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    }

    fn choose(&self, cands: &[ViolationVector; WordOrder::COUNT]) -> usize {
        first_max_by(cands, |a, b| self.compare(a, b))
    }

    /// Optimal order; ties go to the lower canonical index.
    pub fn winner(&self, input: &InputPattern) -> WordOrder {
        WordOrder::ALL[self.choose(&candidate_violations(input))]
    }

    /// Demotes every winner-dispreferring constraint not already below the
    /// highest winner-preferring one into the stratum just under it.
    /// Returns false when no constraint prefers the winner.
    fn demote(&mut self, winner: &ViolationVector, loser: &ViolationVector) -> bool {
        let level = self.level_of();
        let pivot = (0..NUM_CONSTRAINTS).filter(|&j| winner.0[j] > loser.0[j]).map(|j| level[j]).min();
        let Some(pivot) = pivot else { return false };
        let mut new_level = level;
        for j in 0..NUM_CONSTRAINTS {
            if winner.0[j] < loser.0[j] && level[j] <= pivot {
                new_level[j] = pivot + 1;
            }
        }
        let depth = new_level.iter().max().unwrap() + 1;
        let mut strata = vec![Vec::new(); depth];
        for c in Constraint::ALL {
            strata[new_level[c.index()]].push(c);
        }
        strata.retain(|s| !s.is_empty());
        self.0 = strata;
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdReport {
    /// Demotions performed in each epoch.
    pub epoch_mistakes: Vec<usize>,
    pub converged: bool,
    /// A hierarchy seen at the end of an earlier epoch came back.
    pub cycle_detected: bool,
    /// Errors CD could not act on because no constraint preferred the winner.
    pub stuck_errors: usize,
}

impl CdReport {
    pub fn oscillating(&self) -> bool {
        !self.converged
    }

    pub fn summary(&self) -> String {
        if self.converged {
            format!("converged after {} epoch(s)", self.epoch_mistakes.len())
        } else {
            format!(
                "no error-free epoch within {} epochs (last epoch {} errors{}): rankings keep swapping",
                self.epoch_mistakes.len(),
                self.epoch_mistakes.last().copied().unwrap_or(0),
                if self.cycle_detected { ", hierarchy revisited" } else { "" }
            )
        }
    }
}

#[derive(Clone, Debug)]
pub struct CdOutcome {
    pub model: LearnedModel,
    pub report: CdReport,
}

pub fn cd_train(train: &Corpus, max_epochs: usize) -> Result<CdOutcome> {
    train.require_nonempty()?;
    if max_epochs == 0 {
        return Err(Error::Config("max epochs must be at least 1".into()));
    }
    let table: Vec<[ViolationVector; WordOrder::COUNT]> = InputPattern::all().map(|p| candidate_violations(&p)).collect();
    let counts = train.counts();

    let mut strata = Strata::flat();
    let mut seen: HashSet<Strata> = HashSet::new();
    let mut report = CdReport { epoch_mistakes: vec![], converged: false, cycle_detected: false, stuck_errors: 0 };
    let mut history = Vec::new();

    for epoch in 1..=max_epochs {
        let mut mistakes = 0;
        for s in train.iter() {
            let cands = &table[s.input.index()];
            let predicted = strata.choose(cands);
            let truth = s.observed.index();
            if predicted != truth {
                mistakes += 1;
                if !strata.demote(&cands[truth], &cands[predicted]) {
                    report.stuck_errors += 1;
                }
            }
        }
        let correct: u64 = InputPattern::all().map(|p| counts.get(&p, strata.winner(&p))).sum();
        history.push(EpochRecord { epoch, mistakes, train_accuracy: correct as f64 / counts.total() as f64 });
        report.epoch_mistakes.push(mistakes);
        if mistakes == 0 {
            report.converged = true;
            break;
        }
        if !seen.insert(strata.clone()) {
            report.cycle_detected = true;
        }
    }

    let mut model = LearnedModel::stratified(strata)
        .with_meta("learner", "cd")
        .with_meta("max_epochs", max_epochs)
        .with_meta("epochs_run", report.epoch_mistakes.len())
        .with_meta("converged", report.converged)
        .with_meta("cycle_detected", report.cycle_detected)
        .with_meta("train_provenance", &train.provenance);
    model.history = history;
    Ok(CdOutcome { model, report })
}
