//! Shared models for unit tests.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::generate::{random_model, ModelParams};
use crate::model::{parse_model, VassMdp};

pub const RW1: &str = "counters: c\nstate p p\ntrans t_plus p p : 1 @ 1/2\ntrans t_minus p p : -1 @ 1/2\n";
pub const EXPO1: &str = "counters: x y\nstate p n\nstate q n\ntrans t1 p p : -1 2\ntrans t2 p q : 0 0\ntrans t3 q q : 2 -1\ntrans t4 q p : 0 0\n";
pub const NEG_LOOP: &str = "counters: c\nstate p n\ntrans dec p p : -1\n";
pub const POS_LOOP: &str = "counters: c\nstate p p\ntrans inc p p : 1 @ 1/1\n";
pub const BIASED: &str = "counters: c\nstate p p\ntrans up p p : 1 @ 1/3\ntrans down p p : -1 @ 2/3\n";
pub const TWO_CYCLE: &str = "counters: c\nstate p n\nstate q n\ntrans go p q : 1\ntrans back q p : -1\n";
/// Deterministic 2-cycle with updates (+1,0) then (-1,+3).
pub const SHIFT_CYCLE: &str = "counters: a b\nstate p n\nstate q n\ntrans go p q : 1 0\ntrans back q p : -1 3\n";

pub fn model(text: &str) -> VassMdp {
    parse_model(text).expect("fixture parses")
}

/// Random strongly connected Markov chains.
pub fn arb_chain(max_states: usize, max_transitions: usize) -> impl Strategy<Value = VassMdp> {
    any::<u64>().prop_map(move |seed| {
        let params = ModelParams {
            max_states,
            max_transitions,
            markov_chain: true,
            prob_fraction: 0.6,
            ..ModelParams::default()
        };
        random_model(&mut ChaCha8Rng::seed_from_u64(seed), &params)
    })
}

/// Random models of bounded size, derived from a seed.
pub fn arb_model(
    max_states: usize,
    max_transitions: usize,
    strongly_connected: bool,
) -> impl Strategy<Value = VassMdp> {
    any::<u64>().prop_map(move |seed| {
        let params = ModelParams {
            max_states,
            max_transitions,
            strongly_connected,
            ..ModelParams::default()
        };
        random_model(&mut ChaCha8Rng::seed_from_u64(seed), &params)
    })
}
