//! Core model types, the line-oriented model format and structural
//! transformations (restriction, projection, auxiliary counters).
//!
//! A [`VassMdp`] assigns internal indices to counters, states and transitions
//! in declaration order. All analysis code works on those indices; names are
//! only used for parsing and reporting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Exact rational number used throughout the analysis path.
pub type Rational = BigRational;

/// Whether a state is controlled by the scheduler or by chance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateKind {
    Nondeterministic,
    Probabilistic,
}

impl StateKind {
    fn tag(self) -> &'static str {
        match self {
            StateKind::Nondeterministic => "n",
            StateKind::Probabilistic => "p",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub name: String,
    pub kind: StateKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub source: usize,
    pub target: usize,
    /// One entry per counter, in counter declaration order.
    pub update: Vec<i64>,
    /// Present iff the source state is probabilistic.
    pub prob: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<ModelError>,
    },
    #[error("missing `counters:` declaration")]
    MissingCounters,
    #[error("duplicate {kind} name `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("state `{state}`: probabilities sum to {sum}")]
    ProbabilitySum { state: String, sum: Rational },
    #[error("transition `{transition}` leaves probabilistic state `{state}` without a probability")]
    MissingProbability { transition: String, state: String },
    #[error("transition `{transition}` leaves nondeterministic state `{state}` but carries a probability")]
    UnexpectedProbability { transition: String, state: String },
    #[error("transition `{transition}` has non-positive probability {prob}")]
    NonPositiveProbability { transition: String, prob: Rational },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown counter `{0}`")]
    UnknownCounter(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{transition}` has {found} update entries, expected {expected}")]
    Arity {
        transition: String,
        expected: usize,
        found: usize,
    },
    #[error("state `{0}` has no outgoing transition")]
    NoOutgoing(String),
    #[error("restriction keeps only part of the outgoing transitions of probabilistic state `{0}`")]
    PartialProbabilistic(String),
}

impl ModelError {
    /// The error without any line-number wrapper.
    pub fn root(&self) -> &ModelError {
        match self {
            ModelError::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}

/// A VASS Markov decision process.
///
/// Construction through [`VassMdp::new`] checks names, arities, references and
/// probabilities. The requirement that every state has an outgoing transition
/// is checked by [`VassMdp::validate`], because restricted intermediates are
/// allowed to contain dangling states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VassMdp {
    counters: Vec<String>,
    states: Vec<State>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|ch| ch.is_whitespace() || matches!(ch, ':' | '@' | '#' | '=' | ','))
}

fn check_unique<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a str>,
) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for name in names {
        if !valid_name(name) {
            return Err(ModelError::InvalidName(name.to_string()));
        }
        if !seen.insert(name) {
            return Err(ModelError::Duplicate {
                kind,
                name: name.to_string(),
            });
        }
    }
    Ok(())
}

impl VassMdp {
    pub fn new(
        counters: Vec<String>,
        states: Vec<State>,
        transitions: Vec<Transition>,
    ) -> Result<Self, ModelError> {
        check_unique("counter", counters.iter().map(String::as_str))?;
        check_unique("state", states.iter().map(|s| s.name.as_str()))?;
        check_unique("transition", transitions.iter().map(|t| t.id.as_str()))?;

        let mut outgoing = vec![Vec::new(); states.len()];
        let mut incoming = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            for end in [t.source, t.target] {
                if end >= states.len() {
                    return Err(ModelError::UnknownState(format!("#{end}")));
                }
            }
            if t.update.len() != counters.len() {
                return Err(ModelError::Arity {
                    transition: t.id.clone(),
                    expected: counters.len(),
                    found: t.update.len(),
                });
            }
            let src = &states[t.source];
            match (src.kind, &t.prob) {
                (StateKind::Probabilistic, None) => {
                    return Err(ModelError::MissingProbability {
                        transition: t.id.clone(),
                        state: src.name.clone(),
                    })
                }
                (StateKind::Nondeterministic, Some(_)) => {
                    return Err(ModelError::UnexpectedProbability {
                        transition: t.id.clone(),
                        state: src.name.clone(),
                    })
                }
                (StateKind::Probabilistic, Some(p)) if !p.is_positive() => {
                    return Err(ModelError::NonPositiveProbability {
                        transition: t.id.clone(),
                        prob: p.clone(),
                    })
                }
                _ => {}
            }
            outgoing[t.source].push(i);
            incoming[t.target].push(i);
        }
        for (p, state) in states.iter().enumerate() {
            if state.kind == StateKind::Probabilistic && !outgoing[p].is_empty() {
                let sum: Rational = outgoing[p]
                    .iter()
                    .map(|&t| transitions[t].prob.clone().unwrap_or_default())
                    .sum();
                if !sum.is_one() {
                    return Err(ModelError::ProbabilitySum {
                        state: state.name.clone(),
                        sum,
                    });
                }
            }
        }
        Ok(VassMdp {
            counters,
            states,
            transitions,
            outgoing,
            incoming,
        })
    }

    /// Checks the invariants that [`VassMdp::new`] leaves open, i.e. that
    /// every state has an outgoing transition.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self.dangling_states().first() {
            Some(&p) => Err(ModelError::NoOutgoing(self.states[p].name.clone())),
            None => Ok(()),
        }
    }

    pub fn counters(&self) -> &[String] {
        &self.counters
    }

    /// Number of counters.
    pub fn dim(&self) -> usize {
        self.counters.len()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition(&self, t: usize) -> &Transition {
        &self.transitions[t]
    }

    pub fn state(&self, p: usize) -> &State {
        &self.states[p]
    }

    pub fn outgoing(&self, p: usize) -> &[usize] {
        &self.outgoing[p]
    }

    pub fn incoming(&self, p: usize) -> &[usize] {
        &self.incoming[p]
    }

    pub fn is_probabilistic(&self, p: usize) -> bool {
        self.states[p].kind == StateKind::Probabilistic
    }

    /// Probability of `t`, if its source is probabilistic.
    pub fn prob(&self, t: usize) -> Option<&Rational> {
        self.transitions[t].prob.as_ref()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn counter_index(&self, name: &str) -> Option<usize> {
        self.counters.iter().position(|c| c == name)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// States without outgoing transitions.
    pub fn dangling_states(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&p| self.outgoing[p].is_empty())
            .collect()
    }

    /// True iff no state offers a genuine choice: every nondeterministic
    /// state has exactly one outgoing transition.
    pub fn is_effective_markov_chain(&self) -> bool {
        self.states.iter().enumerate().all(|(p, s)| {
            s.kind == StateKind::Probabilistic || self.outgoing[p].len() == 1
        })
    }

    /// Probability with which `t` is taken once its source is entered, when
    /// the model is an effective Markov chain.
    pub fn chain_prob(&self, t: usize) -> Rational {
        match &self.transitions[t].prob {
            Some(p) => p.clone(),
            None => Rational::new(
                BigInt::one(),
                BigInt::from(self.outgoing[self.transitions[t].source].len()),
            ),
        }
    }

    /// Same structure with a different counter set.
    pub(crate) fn with_counters(
        &self,
        counters: Vec<String>,
        updates: Vec<Vec<i64>>,
    ) -> Result<VassMdp, ModelError> {
        let transitions = self
            .transitions
            .iter()
            .zip(updates)
            .map(|(t, update)| Transition {
                update,
                ..t.clone()
            })
            .collect();
        VassMdp::new(counters, self.states.clone(), transitions)
    }

    /// Canonical text form; parsing it yields an identical model.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

impl fmt::Display for VassMdp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "counters:")?;
        for c in &self.counters {
            write!(f, " {c}")?;
        }
        writeln!(f)?;
        for s in &self.states {
            writeln!(f, "state {} {}", s.name, s.kind.tag())?;
        }
        for t in &self.transitions {
            write!(
                f,
                "trans {} {} {} :",
                t.id, self.states[t.source].name, self.states[t.target].name
            )?;
            for u in &t.update {
                write!(f, " {u}")?;
            }
            if let Some(p) = &t.prob {
                write!(f, " @ {}/{}", p.numer(), p.denom())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A counter valuation at a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub state: usize,
    pub values: Vec<i64>,
}

impl Configuration {
    pub fn initial(m: &VassMdp, state: usize, n: i64) -> Self {
        Configuration {
            state,
            values: vec![n; m.dim()],
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.values.iter().any(|&v| v < 0)
    }
}

/// A complexity measure of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    /// Number of steps before termination.
    Length,
    /// Supremum of a counter before termination.
    Counter(usize),
    /// Number of uses of a transition before termination.
    Transition(usize),
}

impl Observable {
    /// Parses `length`, `counter:<name>` or `transition:<id>`.
    pub fn parse(m: &VassMdp, text: &str) -> Result<Self, ModelError> {
        if text == "length" {
            return Ok(Observable::Length);
        }
        if let Some(name) = text.strip_prefix("counter:") {
            return m
                .counter_index(name)
                .map(Observable::Counter)
                .ok_or_else(|| ModelError::UnknownCounter(name.to_string()));
        }
        if let Some(id) = text.strip_prefix("transition:") {
            return m
                .transition_index(id)
                .map(Observable::Transition)
                .ok_or_else(|| ModelError::UnknownTransition(id.to_string()));
        }
        Err(ModelError::Syntax {
            line: 0,
            message: format!("unknown observable `{text}`"),
        })
    }

    pub fn describe(&self, m: &VassMdp) -> String {
        match *self {
            Observable::Length => "length".to_string(),
            Observable::Counter(c) => format!("counter:{}", m.counters()[c]),
            Observable::Transition(t) => format!("transition:{}", m.transition(t).id),
        }
    }
}

fn at_line(line: usize, err: ModelError) -> ModelError {
    ModelError::AtLine {
        line,
        source: Box::new(err),
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_rational(line: usize, text: &str) -> Result<Rational, ModelError> {
    let bad = || syntax(line, format!("invalid probability `{text}`"));
    let (num, den) = match text.split_once('/') {
        Some((a, b)) => (a, b),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

struct RawTransition {
    line: usize,
    id: String,
    source: String,
    target: String,
    update: Vec<i64>,
    prob: Option<Rational>,
}

/// Parses a model document and checks all model invariants.
pub fn parse_model(text: &str) -> Result<VassMdp, ModelError> {
    let mut counters: Option<Vec<String>> = None;
    let mut states = Vec::new();
    let mut raw = Vec::new();
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("counters") {
            let Some(names) = rest.trim_start().strip_prefix(':') else {
                return Err(syntax(line, "expected `counters:`"));
            };
            if counters.is_some() {
                return Err(syntax(line, "counters declared twice"));
            }
            counters = Some(names.split_whitespace().map(str::to_string).collect());
            continue;
        }
        let mut words = content.split_whitespace();
        match words.next() {
            Some("state") => {
                let fields: Vec<&str> = words.collect();
                let [name, kind] = fields[..] else {
                    return Err(syntax(line, "expected `state <name> <n|p>`"));
                };
                let kind = match kind {
                    "n" => StateKind::Nondeterministic,
                    "p" => StateKind::Probabilistic,
                    other => return Err(syntax(line, format!("unknown state kind `{other}`"))),
                };
                states.push((line, State {
                    name: name.to_string(),
                    kind,
                }));
            }
            Some("trans") => {
                let body = content["trans".len()..].trim();
                let (body, prob) = match body.split_once('@') {
                    Some((b, p)) => (b, Some(parse_rational(line, p.trim())?)),
                    None => (body, None),
                };
                let Some((head, update)) = body.split_once(':') else {
                    return Err(syntax(line, "expected `:` before the update vector"));
                };
                let head: Vec<&str> = head.split_whitespace().collect();
                let [id, source, target] = head[..] else {
                    return Err(syntax(line, "expected `trans <id> <src> <dst> : ...`"));
                };
                let update = update
                    .split_whitespace()
                    .map(|w| {
                        w.parse::<i64>()
                            .map_err(|_| syntax(line, format!("invalid update entry `{w}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                raw.push(RawTransition {
                    line,
                    id: id.to_string(),
                    source: source.to_string(),
                    target: target.to_string(),
                    update,
                    prob,
                });
            }
            Some(other) => return Err(syntax(line, format!("unknown directive `{other}`"))),
            None => {}
        }
    }
    let counters = counters.ok_or(ModelError::MissingCounters)?;

    let mut index = HashMap::new();
    for (line, s) in &states {
        if index.insert(s.name.clone(), index.len()).is_some() {
            return Err(at_line(*line, ModelError::Duplicate {
                kind: "state",
                name: s.name.clone(),
            }));
        }
    }
    let mut seen_ids = HashSet::new();
    let mut transitions = Vec::with_capacity(raw.len());
    for r in raw {
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| at_line(r.line, ModelError::UnknownState(name.to_string())))
        };
        let source = lookup(&r.source)?;
        let target = lookup(&r.target)?;
        if !seen_ids.insert(r.id.clone()) {
            return Err(at_line(r.line, ModelError::Duplicate {
                kind: "transition",
                name: r.id,
            }));
        }
        if r.update.len() != counters.len() {
            return Err(at_line(r.line, ModelError::Arity {
                transition: r.id,
                expected: counters.len(),
                found: r.update.len(),
            }));
        }
        transitions.push(Transition {
            id: r.id,
            source,
            target,
            update: r.update,
            prob: r.prob,
        });
    }
    let states = states.into_iter().map(|(_, s)| s).collect();
    let m = VassMdp::new(counters, states, transitions)?;
    m.validate()?;
    Ok(m)
}

/// Inverse of [`parse_model`]; emits the canonical form.
pub fn serialize_model(m: &VassMdp) -> String {
    m.to_text()
}

/// True iff every state is reachable from every other state.
pub fn validate_strongly_connected(m: &VassMdp) -> bool {
    crate::graph::is_strongly_connected(m)
}

/// Result of restricting a model to a transition subset.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub model: VassMdp,
    /// For each transition of `model`, its index in the original model.
    pub origin: Vec<usize>,
    /// States left without outgoing transitions.
    pub dangling: Vec<usize>,
}

impl Restriction {
    /// Index in the restricted model of an original transition.
    pub fn local_index(&self, original: usize) -> Option<usize> {
        self.origin.binary_search(&original).ok()
    }

    /// Extends a vector over restricted transitions by zero to the original
    /// transition set.
    pub fn lift<T: Clone + Zero>(&self, values: &[T], original_len: usize) -> Vec<T> {
        let mut out = vec![T::zero(); original_len];
        for (i, v) in values.iter().enumerate() {
            out[self.origin[i]] = v.clone();
        }
        out
    }
}

/// Keeps exactly the transitions in `keep`; all states are retained.
///
/// Probabilistic states are all-or-nothing: keeping only some of their
/// outgoing transitions is rejected.
pub fn restrict_transitions(m: &VassMdp, keep: &BTreeSet<usize>) -> Result<Restriction, ModelError> {
    if let Some(&t) = keep.iter().find(|&&t| t >= m.num_transitions()) {
        return Err(ModelError::UnknownTransition(format!("#{t}")));
    }
    for p in 0..m.num_states() {
        if m.is_probabilistic(p) {
            let kept = m.outgoing(p).iter().filter(|t| keep.contains(t)).count();
            if kept != 0 && kept != m.outgoing(p).len() {
                return Err(ModelError::PartialProbabilistic(m.state(p).name.clone()));
            }
        }
    }
    let origin: Vec<usize> = keep.iter().copied().collect();
    let transitions = origin.iter().map(|&t| m.transition(t).clone()).collect();
    let model = VassMdp::new(m.counters.clone(), m.states.clone(), transitions)?;
    let dangling = model.dangling_states();
    Ok(Restriction {
        model,
        origin,
        dangling,
    })
}

/// Keeps only the counters in `keep`, in declaration order.
pub fn project_counters(m: &VassMdp, keep: &BTreeSet<usize>) -> VassMdp {
    let idx: Vec<usize> = (0..m.dim()).filter(|c| keep.contains(c)).collect();
    let counters = idx.iter().map(|&c| m.counters[c].clone()).collect();
    let updates = m
        .transitions
        .iter()
        .map(|t| idx.iter().map(|&c| t.update[c]).collect())
        .collect();
    m.with_counters(counters, updates)
        .expect("projection preserves validity")
}

fn fresh_name(m: &VassMdp, base: &str) -> String {
    if m.counter_index(base).is_none() {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|name| m.counter_index(name).is_none())
        .expect("unbounded search")
}

fn add_counter(m: &VassMdp, name: String, update: impl Fn(usize) -> i64) -> VassMdp {
    let mut counters = m.counters.clone();
    counters.push(name);
    let updates = m
        .transitions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut u = t.update.clone();
            u.push(update(i));
            u
        })
        .collect();
    m.with_counters(counters, updates)
        .expect("fresh counter keeps the model valid")
}

/// Appends a fresh counter incremented by every transition.
pub fn add_step_counter(m: &VassMdp) -> (VassMdp, String) {
    let name = fresh_name(m, "sc");
    (add_counter(m, name.clone(), |_| 1), name)
}

/// Appends a fresh counter incremented only by transition `id`.
pub fn add_transition_counter(m: &VassMdp, id: &str) -> Result<(VassMdp, String), ModelError> {
    let t = m
        .transition_index(id)
        .ok_or_else(|| ModelError::UnknownTransition(id.to_string()))?;
    let name = fresh_name(m, &format!("ct_{id}"));
    Ok((add_counter(m, name.clone(), |i| i64::from(i == t)), name))
}
