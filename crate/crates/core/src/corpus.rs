//! Training data: the reference count table, corpus regeneration and
//! resampling, the sentence file format, and the two reference predictors.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluation::Tally;
use crate::grammar::{DiscourseMark, InputPattern, WordOrder};

/// One observed sentence reduced to its input pattern and surface order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    pub input: InputPattern,
    pub observed: WordOrder,
}

impl Sentence {
    pub fn new(input: InputPattern, observed: WordOrder) -> Self {
        Sentence { input, observed }
    }
}

/// An ordered list of sentences. Order matters to the online learners.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub provenance: String,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>, provenance: impl Into<String>) -> Self {
        Corpus { sentences, provenance: provenance.into() }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    pub fn counts(&self) -> PatternCounts {
        PatternCounts::from_corpus(self)
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyCorpus)
        } else {
            Ok(())
        }
    }
}

/// Sentence counts per (input pattern, word order) cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternCounts {
    cells: [[u64; WordOrder::COUNT]; InputPattern::COUNT],
}

impl Default for PatternCounts {
    fn default() -> Self {
        PatternCounts { cells: [[0; WordOrder::COUNT]; InputPattern::COUNT] }
    }
}

impl PatternCounts {
    pub fn from_rows(cells: [[u64; WordOrder::COUNT]; InputPattern::COUNT]) -> Self {
        PatternCounts { cells }
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut counts = PatternCounts::default();
        for s in corpus.iter() {
            counts.cells[s.input.index()][s.observed.index()] += 1;
        }
        counts
    }

    pub fn get(&self, input: &InputPattern, order: WordOrder) -> u64 {
        self.cells[input.index()][order.index()]
    }

    pub fn set(&mut self, input: &InputPattern, order: WordOrder, count: u64) {
        self.cells[input.index()][order.index()] = count;
    }

    pub fn row(&self, input: &InputPattern) -> &[u64; WordOrder::COUNT] {
        &self.cells[input.index()]
    }

    pub fn row_sum(&self, input: &InputPattern) -> u64 {
        self.row(input).iter().sum()
    }

    pub fn column_sum(&self, order: WordOrder) -> u64 {
        self.cells.iter().map(|r| r[order.index()]).sum()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    /// Empirical conditional distribution over orders for one pattern, or
    /// `None` when the pattern was never observed.
    pub fn conditional(&self, input: &InputPattern) -> Option<[f64; WordOrder::COUNT]> {
        let n = self.row_sum(input);
        (n > 0).then(|| self.row(input).map(|c| c as f64 / n as f64))
    }

    /// CSV with header `S,V,O,SVO,OVS,VSO,SOV,VOS,OSV`, one row per pattern.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("S,V,O");
        for o in WordOrder::ALL {
            write!(out, ",{o}").unwrap();
        }
        out.push('\n');
        for p in InputPattern::all() {
            write!(out, "{},{},{}", p.subject.code(), p.verb.code(), p.object.code()).unwrap();
            for c in self.row(&p) {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[rustfmt::skip]
const REFERENCE_COUNTS: [[u64; WordOrder::COUNT]; InputPattern::COUNT] = [
    //  SVO  OVS  VSO  SOV  VOS  OSV
    [   23,   4,   4,   3,   3,   3], // T T T
    [    0,   1,   0,   0,   0,   2], // T T C
    [   22,   0,  11,   0,   1,   0], // T T F
    [    0,   0,   0,   0,   0,   0], // T C T
    [    0,   0,   0,   0,   0,   0], // T C C
    [    0,   0,   0,   0,   0,   0], // T C F
    [   97,  26,  28,  12,  80,  32], // T F T
    [    2,  43,   0,   0,   1,  20], // T F C
    [  519,   7, 145,  17,  28,   4], // T F F
    [    7,   0,   0,   0,   3,   0], // C T T
    [    0,   0,   0,   0,   1,   0], // C T C
    [   26,   0,   1,   0,   3,   0], // C T F
    [    0,   0,   0,   0,   0,   0], // C C T
    [    0,   0,   0,   0,   0,   0], // C C C
    [    0,   0,   0,   0,   0,   0], // C C F
    [  111,   0,   2,   0,  76,   4], // C F T
    [    0,   0,   0,   0,   9,   2], // C F C
    [  610,   0,   3,   0,  34,   2], // C F F
    [    1,  17,   1,  14,   0,   0], // F T T
    [    0,   9,   0,   0,   0,   0], // F T C
    [    4,   3,   5,   2,   0,   0], // F T F
    [    0,   0,   0,   0,   0,   0], // F C T
    [    0,   0,   0,   0,   1,   0], // F C C
    [    0,   0,   0,   0,   0,   0], // F C F
    [    7, 222,  16, 153,   4,   2], // F F T
    [    0, 184,   0,   1,   0,   4], // F F C
    [   48,  24, 105,  95,   1,   0], // F F F
];

/// The 2955-sentence training distribution of Czech transitive clauses.
pub fn reference_counts() -> PatternCounts {
    PatternCounts::from_rows(REFERENCE_COUNTS)
}

/// Expands every cell into that many sentences, then applies a seeded shuffle.
pub fn generate_corpus(counts: &PatternCounts, shuffle_seed: u64) -> Corpus {
    let mut sentences = Vec::with_capacity(counts.total() as usize);
    for p in InputPattern::all() {
        for o in WordOrder::ALL {
            let n = counts.get(&p, o) as usize;
            sentences.extend(std::iter::repeat_n(Sentence::new(p, o), n));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    sentences.shuffle(&mut rng);
    Corpus::new(sentences, format!("regen seed={shuffle_seed}"))
}

/// Draws `n` sentences i.i.d. from the joint distribution the counts define.
pub fn resample(counts: &PatternCounts, n: usize, seed: u64) -> Result<Corpus> {
    let mut cells = Vec::new();
    let mut weights = Vec::new();
    for p in InputPattern::all() {
        for o in WordOrder::ALL {
            let c = counts.get(&p, o);
            if c > 0 {
                cells.push(Sentence::new(p, o));
                weights.push(c);
            }
        }
    }
    if cells.is_empty() {
        return if n == 0 { Ok(Corpus::new(vec![], "resample")) } else { Err(Error::EmptyCorpus) };
    }
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidValue(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences = (0..n).map(|_| cells[dist.sample(&mut rng)]).collect();
    Ok(Corpus::new(sentences, format!("resample n={n} seed={seed}")))
}

/// Seeded partition into train/dev/test. Dev and test sizes are floored;
/// the remainder goes to train.
pub fn split(corpus: &Corpus, fractions: (f64, f64, f64), seed: u64) -> Result<(Corpus, Corpus, Corpus)> {
    let (tr, dv, te) = fractions;
    let ok = [tr, dv, te].iter().all(|f| f.is_finite() && *f >= 0.0) && ((tr + dv + te) - 1.0).abs() <= 1e-9;
    if !ok {
        return Err(Error::BadFractions(tr, dv, te));
    }
    let n = corpus.len();
    let n_dev = (dv * n as f64 + 1e-9).floor() as usize;
    let n_test = (te * n as f64 + 1e-9).floor() as usize;
    let n_train = n - n_dev - n_test;

    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |range: std::ops::Range<usize>, name: &str| {
        Corpus::new(
            idx[range].iter().map(|&i| corpus.sentences[i]).collect(),
            format!("{} [{name} split seed={seed}]", corpus.provenance),
        )
    };
    Ok((
        take(0..n_train, "train"),
        take(n_train..n_train + n_dev, "dev"),
        take(n_train + n_dev..n, "test"),
    ))
}

/// Hits and total for the always-SVO strategy.
pub fn baseline_tally(corpus: &Corpus) -> Result<Tally> {
    corpus.require_nonempty()?;
    let correct = corpus.iter().filter(|s| s.observed == WordOrder::SVO).count();
    Ok(Tally { correct, total: corpus.len() })
}

pub fn baseline_accuracy(corpus: &Corpus) -> Result<f64> {
    baseline_tally(corpus).map(|t| t.fraction())
}

/// Predicts the modal training order of each pattern; unseen patterns
/// fall back to SVO, and ties go to the lower canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBoundPredictor {
    modal: [WordOrder; InputPattern::COUNT],
}

impl UpperBoundPredictor {
    pub fn predict(&self, input: &InputPattern) -> WordOrder {
        self.modal[input.index()]
    }
}

pub fn upper_bound_predictor(train: &Corpus) -> Result<UpperBoundPredictor> {
    train.require_nonempty()?;
    let counts = train.counts();
    let mut modal = [WordOrder::SVO; InputPattern::COUNT];
    for p in InputPattern::all() {
        let row = counts.row(&p);
        if row.iter().any(|&c| c > 0) {
            let best = crate::grammar::first_max_by(row, |a, b| a.cmp(b));
            modal[p.index()] = WordOrder::ALL[best];
        }
    }
    Ok(UpperBoundPredictor { modal })
}

pub fn upper_bound_tally(predictor: &UpperBoundPredictor, eval: &Corpus) -> Result<Tally> {
    eval.require_nonempty()?;
    let correct = eval.iter().filter(|s| predictor.predict(&s.input) == s.observed).count();
    Ok(Tally { correct, total: eval.len() })
}

pub fn upper_bound_accuracy(predictor: &UpperBoundPredictor, eval: &Corpus) -> Result<f64> {
    upper_bound_tally(predictor, eval).map(|t| t.fraction())
}

fn parse_pattern_field(field: &str) -> Option<InputPattern> {
    let mut marks = field.split(' ').map(|tok| {
        let mut chars = tok.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_lowercase() => DiscourseMark::from_code(c),
            _ => None,
        }
    });
    let (s, v, o) = (marks.next()??, marks.next()??, marks.next()??);
    if marks.next().is_some() {
        return None;
    }
    Some(InputPattern::new(s, v, o))
}

/// Reads the tab-separated sentence format (`t f f<TAB>SVO`). Lines starting
/// with `#` are comments; a leading `# provenance: ...` comment is kept.
/// Blank lines are skipped; anything else malformed is an error.
pub fn read_sentences<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut provenance = String::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(p) = comment.trim().strip_prefix("provenance:") {
                if provenance.is_empty() {
                    provenance = p.trim().to_string();
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: lineno, message };
        let (pattern, order) = line
            .split_once('\t')
            .ok_or_else(|| bad(format!("expected two tab-separated fields in {line:?}")))?;
        let input = parse_pattern_field(pattern)
            .ok_or_else(|| bad(format!("malformed pattern {pattern:?} (want e.g. \"t f c\")")))?;
        let observed: WordOrder = order
            .parse()
            .map_err(|_| bad(format!("unknown word order {order:?}")))?;
        sentences.push(Sentence::new(input, observed));
    }
    Ok(Corpus { sentences, provenance })
}

pub fn write_sentences<W: Write>(mut writer: W, corpus: &Corpus) -> Result<()> {
    if !corpus.provenance.is_empty() {
        writeln!(writer, "# provenance: {}", corpus.provenance)?;
    }
    for s in corpus.iter() {
        writeln!(writer, "{}\t{}", s.input, s.observed)?;
    }
    Ok(())
}
