//! Domain types and the constraint evaluation engine.
//!
//! An input is a triple of discourse marks on subject, verb and object. A
//! candidate output is one of the six constituent orders. Twelve binary
//! alignment constraints map each (input, order) pair to a vector of
//! ternary attribute values: `+1` satisfied, `0` vacuous, `-1` violated.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_CONSTRAINTS: usize = 12;

/// Information-structure annotation on one constituent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiscourseMark {
    Topic,
    ContrastiveTopic,
    /// The default annotation.
    #[default]
    Focus,
}

impl DiscourseMark {
    pub const ALL: [DiscourseMark; 3] = [
        DiscourseMark::Topic,
        DiscourseMark::ContrastiveTopic,
        DiscourseMark::Focus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> char {
        match self {
            DiscourseMark::Topic => 't',
            DiscourseMark::ContrastiveTopic => 'c',
            DiscourseMark::Focus => 'f',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c.to_ascii_lowercase() {
            't' => Some(DiscourseMark::Topic),
            'c' => Some(DiscourseMark::ContrastiveTopic),
            'f' => Some(DiscourseMark::Focus),
            _ => None,
        }
    }
}

/// Grammatical role of a constituent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Subject,
    Verb,
    Object,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Subject, Role::Verb, Role::Object];
}

/// The grammar input: one discourse mark per grammatical role.
///
/// Ordering is lexicographic on (subject, verb, object) with
/// `Topic < ContrastiveTopic < Focus`, which is also the order of
/// [`InputPattern::all`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InputPattern {
    pub subject: DiscourseMark,
    pub verb: DiscourseMark,
    pub object: DiscourseMark,
}

impl InputPattern {
    pub const COUNT: usize = 27;

    pub fn new(subject: DiscourseMark, verb: DiscourseMark, object: DiscourseMark) -> Self {
        InputPattern { subject, verb, object }
    }

    pub fn mark(&self, role: Role) -> DiscourseMark {
        match role {
            Role::Subject => self.subject,
            Role::Verb => self.verb,
            Role::Object => self.object,
        }
    }

    pub fn has_mark(&self, mark: DiscourseMark) -> bool {
        Role::ALL.iter().any(|&r| self.mark(r) == mark)
    }

    pub fn index(&self) -> usize {
        self.subject.index() * 9 + self.verb.index() * 3 + self.object.index()
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= Self::COUNT {
            return None;
        }
        let m = DiscourseMark::ALL;
        Some(InputPattern::new(m[index / 9], m[(index / 3) % 3], m[index % 3]))
    }

    /// All 27 patterns in canonical order.
    pub fn all() -> impl Iterator<Item = InputPattern> {
        (0..Self::COUNT).map(|i| InputPattern::from_index(i).unwrap())
    }
}

impl fmt::Display for InputPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject.code(), self.verb.code(), self.object.code())
    }
}

impl FromStr for InputPattern {
    type Err = Error;

    /// Accepts three mark letters, optionally separated by spaces, commas or
    /// dashes: `t f t`, `t,f,t`, `T-F-T`, `tft`.
    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<char> = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',' && *c != '-')
            .collect();
        if letters.len() != 3 {
            return Err(Error::InvalidValue(format!("pattern {s:?}: expected three marks")));
        }
        let mut marks = [DiscourseMark::Focus; 3];
        for (slot, &c) in marks.iter_mut().zip(&letters) {
            *slot = DiscourseMark::from_code(c)
                .ok_or_else(|| Error::InvalidValue(format!("pattern {s:?}: unknown mark {c:?}")))?;
        }
        Ok(InputPattern::new(marks[0], marks[1], marks[2]))
    }
}

/// A surface constituent order. Discriminants give the canonical index
/// used for tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WordOrder {
    SVO,
    OVS,
    VSO,
    SOV,
    VOS,
    OSV,
}

impl WordOrder {
    pub const COUNT: usize = 6;
    pub const ALL: [WordOrder; 6] = [
        WordOrder::SVO,
        WordOrder::OVS,
        WordOrder::VSO,
        WordOrder::SOV,
        WordOrder::VOS,
        WordOrder::OSV,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Roles from left to right.
    pub fn roles(self) -> [Role; 3] {
        use Role::*;
        match self {
            WordOrder::SVO => [Subject, Verb, Object],
            WordOrder::OVS => [Object, Verb, Subject],
            WordOrder::VSO => [Verb, Subject, Object],
            WordOrder::SOV => [Subject, Object, Verb],
            WordOrder::VOS => [Verb, Object, Subject],
            WordOrder::OSV => [Object, Subject, Verb],
        }
    }

    pub fn at_edge(self, edge: Edge) -> Role {
        let roles = self.roles();
        match edge {
            Edge::Left => roles[0],
            Edge::Right => roles[2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WordOrder::SVO => "SVO",
            WordOrder::OVS => "OVS",
            WordOrder::VSO => "VSO",
            WordOrder::SOV => "SOV",
            WordOrder::VOS => "VOS",
            WordOrder::OSV => "OSV",
        }
    }
}

impl fmt::Display for WordOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WordOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WordOrder::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown word order {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    Left,
    Right,
}

/// What an alignment constraint wants at a sentence edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Role(Role),
    Mark(DiscourseMark),
}

/// One of the twelve alignment constraints, identified by its canonical
/// index: S-L, S-R, V-L, V-R, O-L, O-R, T-L, T-R, C-L, C-R, F-L, F-R.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Constraint(u8);

const CODES: [&str; NUM_CONSTRAINTS] = [
    "S-L", "S-R", "V-L", "V-R", "O-L", "O-R", "T-L", "T-R", "C-L", "C-R", "F-L", "F-R",
];

const NAMES: [&str; NUM_CONSTRAINTS] = [
    "Subject Left",
    "Subject Right",
    "Verb Left",
    "Verb Right",
    "Object Left",
    "Object Right",
    "Topic Left",
    "Topic Right",
    "C-Topic Left",
    "C-Topic Right",
    "Focus Left",
    "Focus Right",
];

impl Constraint {
    pub const ALL: [Constraint; NUM_CONSTRAINTS] = {
        let mut all = [Constraint(0); NUM_CONSTRAINTS];
        let mut i = 0;
        while i < NUM_CONSTRAINTS {
            all[i] = Constraint(i as u8);
            i += 1;
        }
        all
    };

    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_CONSTRAINTS).then_some(Constraint(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn target(self) -> Target {
        match self.0 / 2 {
            0 => Target::Role(Role::Subject),
            1 => Target::Role(Role::Verb),
            2 => Target::Role(Role::Object),
            3 => Target::Mark(DiscourseMark::Topic),
            4 => Target::Mark(DiscourseMark::ContrastiveTopic),
            _ => Target::Mark(DiscourseMark::Focus),
        }
    }

    pub fn edge(self) -> Edge {
        if self.0.is_multiple_of(2) {
            Edge::Left
        } else {
            Edge::Right
        }
    }

    pub fn is_grammatical(self) -> bool {
        matches!(self.target(), Target::Role(_))
    }

    /// Short code such as `C-L`, used in model files.
    pub fn code(self) -> &'static str {
        CODES[self.index()]
    }

    /// Display name such as `C-Topic Left`.
    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Constraint {
    type Err = Error;

    /// Accepts either the short code (`F-R`) or the display name
    /// (`Focus Right`, also with `-`/`_` in place of the space).
    fn from_str(s: &str) -> Result<Self> {
        let norm = |x: &str| x.to_ascii_lowercase().replace(['_', ' '], "-");
        let wanted = norm(s);
        Constraint::ALL
            .into_iter()
            .find(|c| norm(c.code()) == wanted || norm(c.name()) == wanted)
            .ok_or_else(|| Error::InvalidValue(format!("unknown constraint {s:?}")))
    }
}

/// Attribute values `f(x, y)`, one per constraint, each in `{-1, 0, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ViolationVector(pub [i8; NUM_CONSTRAINTS]);

impl ViolationVector {
    pub fn get(&self, c: Constraint) -> i8 {
        self.0[c.index()]
    }
}

/// One real weight per constraint.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightVector(pub [f64; NUM_CONSTRAINTS]);

impl WeightVector {
    pub fn zeros() -> Self {
        WeightVector([0.0; NUM_CONSTRAINTS])
    }

    pub fn splat(value: f64) -> Self {
        WeightVector([value; NUM_CONSTRAINTS])
    }

    pub fn get(&self, c: Constraint) -> f64 {
        self.0[c.index()]
    }

    /// Sum of absolute weights.
    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|w| w.abs()).sum()
    }

    /// Rescaled to unit L1 norm; HG predictions are unchanged. A zero
    /// vector is returned as is.
    pub fn l1_normalized(&self) -> WeightVector {
        let n = self.l1_norm();
        if n > 0.0 {
            WeightVector(self.0.map(|w| w / n))
        } else {
            *self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }

    /// Dot product with an attribute vector.
    pub fn harmony(&self, violations: &ViolationVector) -> f64 {
        harmony(self, violations)
    }
}

/// A strict constraint hierarchy, highest-ranked first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ranking([Constraint; NUM_CONSTRAINTS]);

impl Ranking {
    pub fn new(order: [Constraint; NUM_CONSTRAINTS]) -> Result<Self> {
        let mut seen = [false; NUM_CONSTRAINTS];
        for c in order {
            if std::mem::replace(&mut seen[c.index()], true) {
                return Err(Error::InvalidValue(format!("constraint {c} ranked twice")));
            }
        }
        Ok(Ranking(order))
    }

    /// Canonical index order.
    pub fn identity() -> Self {
        Ranking(Constraint::ALL)
    }

    pub fn order(&self) -> &[Constraint; NUM_CONSTRAINTS] {
        &self.0
    }

    /// Zero-based rank of `c` (0 = top).
    pub fn position(&self, c: Constraint) -> usize {
        self.0.iter().position(|&x| x == c).unwrap()
    }
}

fn edge_occupied_by_mark(input: &InputPattern, order: WordOrder, edge: Edge, mark: DiscourseMark) -> bool {
    input.mark(order.at_edge(edge)) == mark
}

/// Attribute vector for one candidate order given an input.
///
/// Grammatical constraints are `+1` when the role sits at the edge and `-1`
/// otherwise. Mark constraints are `0` when no constituent carries the mark,
/// `+1` when some constituent carrying it sits at the edge, `-1` otherwise.
pub fn evaluate_constraints(input: &InputPattern, order: WordOrder) -> ViolationVector {
    let mut values = [0i8; NUM_CONSTRAINTS];
    for c in Constraint::ALL {
        let edge = c.edge();
        values[c.index()] = match c.target() {
            Target::Role(role) => {
                if order.at_edge(edge) == role {
                    1
                } else {
                    -1
                }
            }
            Target::Mark(mark) => {
                if !input.has_mark(mark) {
                    0
                } else if edge_occupied_by_mark(input, order, edge, mark) {
                    1
                } else {
                    -1
                }
            }
        };
    }
    ViolationVector(values)
}

/// Attribute vectors of all six candidates, indexed by [`WordOrder::index`].
pub fn candidate_violations(input: &InputPattern) -> [ViolationVector; WordOrder::COUNT] {
    WordOrder::ALL.map(|o| evaluate_constraints(input, o))
}

pub fn harmony(weights: &WeightVector, violations: &ViolationVector) -> f64 {
    weights
        .0
        .iter()
        .zip(violations.0.iter())
        .map(|(w, &v)| w * f64::from(v))
        .sum()
}

/// Strict-domination comparison. `Greater` means `a` is more harmonic.
pub fn ot_compare(ranking: &Ranking, a: &ViolationVector, b: &ViolationVector) -> Ordering {
    for &c in ranking.order() {
        match a.get(c).cmp(&b.get(c)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Index of the first maximal element under `cmp`; earlier indices win ties.
pub(crate) fn first_max_by<T, F>(items: &[T], mut cmp: F) -> usize
where
    F: FnMut(&T, &T) -> Ordering,
{
    let mut best = 0;
    for i in 1..items.len() {
        if cmp(&items[i], &items[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// OT optimum over all six orders; ties go to the lower canonical index.
pub fn ot_winner(ranking: &Ranking, input: &InputPattern) -> WordOrder {
    let cands = candidate_violations(input);
    WordOrder::ALL[first_max_by(&cands, |a, b| ot_compare(ranking, a, b))]
}

/// Harmony maximiser over all six orders; ties go to the lower canonical index.
pub fn hg_winner(weights: &WeightVector, input: &InputPattern) -> WordOrder {
    let scores = candidate_violations(input).map(|v| harmony(weights, &v));
    WordOrder::ALL[first_max_by(&scores, |a, b| a.total_cmp(b))]
}

/// Sorts constraints by weight, descending; equal weights keep canonical order.
pub fn ranking_from_weights(weights: &WeightVector) -> Ranking {
    let mut order = Constraint::ALL;
    order.sort_by(|a, b| weights.get(*b).total_cmp(&weights.get(*a)));
    Ranking(order)
}

/// Weight `2^(11 - position)` for each constraint, so that no set of lower
/// constraints can outweigh a higher one.
pub fn powers_of_two_weights(ranking: &Ranking) -> WeightVector {
    let mut w = [0.0; NUM_CONSTRAINTS];
    for (pos, c) in ranking.order().iter().enumerate() {
        w[c.index()] = f64::from(1u32 << (NUM_CONSTRAINTS - 1 - pos));
    }
    WeightVector(w)
}
