//! Random model generation for property tests and benchmarks.

use num_bigint::BigInt;
use rand::Rng;

use crate::model::{Rational, State, StateKind, Transition, VassMdp};

#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    pub max_counters: usize,
    pub max_states: usize,
    pub max_transitions: usize,
    /// Start from a Hamiltonian cycle so the model is strongly connected.
    pub strongly_connected: bool,
    /// Chance that a state is probabilistic.
    pub prob_fraction: f64,
    /// Updates are drawn from `-max_update..=max_update`.
    pub max_update: i64,
    /// Keep nondeterministic states at a single outgoing transition.
    pub markov_chain: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            max_counters: 3,
            max_states: 4,
            max_transitions: 8,
            strongly_connected: true,
            prob_fraction: 0.4,
            max_update: 2,
            markov_chain: false,
        }
    }
}

const WEIGHTS: [(i64, i64); 5] = [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)];

/// Draws a valid model. Probabilities of each probabilistic state are drawn
/// from {1/4, 1/3, 1/2, 2/3, 3/4} and normalized to sum to one.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams) -> VassMdp {
    let n = rng.random_range(1..=params.max_states.min(params.max_transitions).max(1));
    let d = rng.random_range(0..=params.max_counters);
    let kinds: Vec<StateKind> = (0..n)
        .map(|_| {
            if rng.random_bool(params.prob_fraction) {
                StateKind::Probabilistic
            } else {
                StateKind::Nondeterministic
            }
        })
        .collect();
    let total = rng.random_range(n..=params.max_transitions.max(n));
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(total);
    for p in 0..n {
        let target = if params.strongly_connected {
            (p + 1) % n
        } else {
            rng.random_range(0..n)
        };
        edges.push((p, target));
    }
    let sources: Vec<usize> = (0..n)
        .filter(|&p| !params.markov_chain || kinds[p] == StateKind::Probabilistic)
        .collect();
    while edges.len() < total && !sources.is_empty() {
        edges.push((sources[rng.random_range(0..sources.len())], rng.random_range(0..n)));
    }
    let mut weights: Vec<Rational> = edges
        .iter()
        .map(|_| {
            let (a, b) = WEIGHTS[rng.random_range(0..WEIGHTS.len())];
            Rational::new(BigInt::from(a), BigInt::from(b))
        })
        .collect();
    for p in 0..n {
        let sum: Rational = edges
            .iter()
            .zip(&weights)
            .filter(|((s, _), _)| *s == p)
            .map(|(_, w)| w.clone())
            .sum();
        for (i, (s, _)) in edges.iter().enumerate() {
            if *s == p {
                weights[i] = &weights[i] / &sum;
            }
        }
    }
    let transitions = edges
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(i, (&(source, target), w))| Transition {
            id: format!("t{i}"),
            source,
            target,
            update: (0..d)
                .map(|_| rng.random_range(-params.max_update..=params.max_update))
                .collect(),
            prob: (kinds[source] == StateKind::Probabilistic).then_some(w),
        })
        .collect();
    let states = kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| State {
            name: format!("s{i}"),
            kind,
        })
        .collect();
    let counters = (0..d).map(|i| format!("c{i}")).collect();
    VassMdp::new(counters, states, transitions).expect("generated model is valid")
}
