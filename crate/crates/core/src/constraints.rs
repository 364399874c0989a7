//! The two linear constraint systems over a VASS MDP and their maximal
//! solutions.
//!
//! System (I) asks for a multi-component-like flow `x` on transitions with
//! nonnegative effect on every counter. System (II) asks for a linear ranking
//! function `(y, z)` that never increases in (expected) value. A maximal
//! solution makes as many of the candidate inequalities strict as possible;
//! since both systems are closed under addition, the set of strict
//! inequalities is the same for every maximal solution.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::model::{Rational, VassMdp};
use crate::ratlp::{feasible_point_with_stats, scale_to_integers, LinearProgram, Relation, SolveStats};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("state `{0}` is not probabilistic")]
    NotProbabilistic(String),
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Maximal solution of system (I).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionI {
    pub x: Vec<BigInt>,
    /// Counters with Σ x(t)·u_t(c) > 0.
    pub strict_counters: BTreeSet<usize>,
    /// Transitions with x(t) > 0.
    pub strict_transitions: BTreeSet<usize>,
    pub stats: SolveStats,
}

impl SolutionI {
    /// Δ(x) over the counters of `m`.
    pub fn effect(&self, m: &VassMdp) -> Vec<BigInt> {
        effect_of(m, &self.x)
    }
}

fn effect_of(m: &VassMdp, x: &[BigInt]) -> Vec<BigInt> {
    let mut delta = vec![BigInt::zero(); m.dim()];
    for (t, xt) in m.transitions().iter().zip(x) {
        if xt.is_zero() {
            continue;
        }
        for (d, u) in delta.iter_mut().zip(&t.update) {
            *d += xt * BigInt::from(*u);
        }
    }
    delta
}

/// Maximal solution of system (II).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionII {
    pub y: Vec<BigInt>,
    pub z: Vec<BigInt>,
    /// Counters with y(c) > 0.
    pub strict_counters: BTreeSet<usize>,
    /// Transitions out of nondeterministic states whose row is strict.
    pub strict_nondet_transitions: BTreeSet<usize>,
    /// Probabilistic states whose expected row is strict.
    pub strict_prob_states: BTreeSet<usize>,
    pub stats: SolveStats,
}

impl SolutionII {
    pub fn rank(&self) -> RankFunction {
        RankFunction {
            y: self.y.iter().cloned().map(Rational::from_integer).collect(),
            z: self.z.iter().cloned().map(Rational::from_integer).collect(),
        }
    }
}

/// rank(p, v) = z(p) + Σ y(c)·v(c), indexed by the counters and states of
/// the model it was solved on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankFunction {
    pub y: Vec<Rational>,
    pub z: Vec<Rational>,
}

impl RankFunction {
    pub fn value(&self, state: usize, values: &[i64]) -> Rational {
        let mut r = self.z[state].clone();
        for (y, v) in self.y.iter().zip(values) {
            r += y * int(*v);
        }
        r
    }
}

/// z(target) − z(source) + Σ_c u_t(c)·y(c).
pub fn rank_effect(rf: &RankFunction, m: &VassMdp, t: usize) -> Rational {
    let tr = m.transition(t);
    let mut e = &rf.z[tr.target] - &rf.z[tr.source];
    for (y, u) in rf.y.iter().zip(&tr.update) {
        if *u != 0 {
            e += y * int(*u);
        }
    }
    e
}

/// Σ_{t ∈ out(p)} P(t)·rank_effect(t).
pub fn expected_rank_effect(rf: &RankFunction, m: &VassMdp, p: usize) -> Result<Rational, ConstraintError> {
    if !m.is_probabilistic(p) {
        return Err(ConstraintError::NotProbabilistic(m.state(p).name.clone()));
    }
    Ok(m.outgoing(p)
        .iter()
        .map(|&t| m.prob(t).expect("probabilistic source") * rank_effect(rf, m, t))
        .sum())
}

/// Base program of system (I): variables x_t.
pub fn system_i(m: &VassMdp) -> LinearProgram {
    let mut lp = LinearProgram::new(m.transitions().iter().map(|t| format!("x_{}", t.id)).collect());
    for c in 0..m.dim() {
        let row: Vec<Rational> = m.transitions().iter().map(|t| int(t.update[c])).collect();
        lp.add(row, Relation::Ge, Rational::zero());
    }
    for p in 0..m.num_states() {
        let mut terms: Vec<(usize, Rational)> = m.incoming(p).iter().map(|&t| (t, Rational::one())).collect();
        terms.extend(m.outgoing(p).iter().map(|&t| (t, -Rational::one())));
        lp.add_sparse(&terms, Relation::Eq, Rational::zero());
        if m.is_probabilistic(p) {
            for &t in m.outgoing(p) {
                let prob = m.prob(t).expect("probabilistic source");
                let mut terms: Vec<(usize, Rational)> = m.outgoing(p).iter().map(|&s| (s, -prob)).collect();
                terms.push((t, Rational::one()));
                lp.add_sparse(&terms, Relation::Eq, Rational::zero());
            }
        }
    }
    lp
}

/// Layout of system (II): y_c first, then z_p.
fn rank_row(m: &VassMdp, t: usize, scale: &Rational, row: &mut [Rational]) {
    let d = m.dim();
    let tr = m.transition(t);
    for (c, u) in tr.update.iter().enumerate() {
        if *u != 0 {
            row[c] += scale * int(*u);
        }
    }
    row[d + tr.target] += scale;
    row[d + tr.source] -= scale;
}

fn nondet_row(m: &VassMdp, t: usize) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); m.dim() + m.num_states()];
    rank_row(m, t, &Rational::one(), &mut row);
    row
}

fn prob_row(m: &VassMdp, p: usize) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); m.dim() + m.num_states()];
    for &t in m.outgoing(p) {
        rank_row(m, t, m.prob(t).expect("probabilistic source"), &mut row);
    }
    row
}

/// Base program of system (II): variables y_c then z_p.
pub fn system_ii(m: &VassMdp) -> LinearProgram {
    let mut names: Vec<String> = m.counters().iter().map(|c| format!("y_{c}")).collect();
    names.extend(m.states().iter().map(|s| format!("z_{}", s.name)));
    let mut lp = LinearProgram::new(names);
    for p in 0..m.num_states() {
        if m.is_probabilistic(p) {
            if !m.outgoing(p).is_empty() {
                lp.add(prob_row(m, p), Relation::Le, Rational::zero());
            }
        } else {
            for &t in m.outgoing(p) {
                lp.add(nondet_row(m, t), Relation::Le, Rational::zero());
            }
        }
    }
    lp
}

/// Sums one feasible point per achievable strict candidate, skipping
/// candidates already made strict by earlier points.
fn maximize(
    base: &LinearProgram,
    candidates: &[(Vec<Rational>, Relation, Rational)],
    strict: impl Fn(&[Rational]) -> Vec<bool>,
) -> (Vec<Rational>, SolveStats) {
    let mut sum = vec![Rational::zero(); base.num_vars()];
    let mut stats = SolveStats::default();
    let mut achieved = vec![false; candidates.len()];
    for (i, (row, rel, rhs)) in candidates.iter().enumerate() {
        if achieved[i] {
            continue;
        }
        let mut lp = base.clone();
        lp.add(row.clone(), *rel, rhs.clone());
        let (point, s) = feasible_point_with_stats(&lp);
        stats += s;
        if let Some(point) = point {
            for (acc, v) in sum.iter_mut().zip(&point) {
                *acc += v;
            }
            for (a, now) in achieved.iter_mut().zip(strict(&sum)) {
                *a |= now;
            }
        }
    }
    (sum, stats)
}

fn dot(row: &[Rational], x: &[Rational]) -> Rational {
    row.iter().zip(x).filter(|(a, _)| !a.is_zero()).map(|(a, v)| a * v).sum()
}

/// Maximal solution of system (I).
pub fn maximal_solution_i(m: &VassMdp) -> SolutionI {
    let base = system_i(m);
    let mut candidates = Vec::new();
    for c in 0..m.dim() {
        let row = m.transitions().iter().map(|t| int(t.update[c])).collect();
        candidates.push((row, Relation::Ge, Rational::one()));
    }
    for t in 0..m.num_transitions() {
        let mut row = vec![Rational::zero(); m.num_transitions()];
        row[t] = Rational::one();
        candidates.push((row, Relation::Ge, Rational::one()));
    }
    let rows: Vec<Vec<Rational>> = candidates.iter().map(|(r, _, _)| r.clone()).collect();
    let (sum, stats) = maximize(&base, &candidates, |x| rows.iter().map(|r| dot(r, x).is_positive()).collect());
    let x = scale_to_integers(&sum);
    let delta = effect_of(m, &x);
    SolutionI {
        strict_counters: (0..m.dim()).filter(|&c| delta[c].is_positive()).collect(),
        strict_transitions: (0..m.num_transitions()).filter(|&t| x[t].is_positive()).collect(),
        x,
        stats,
    }
}

/// Adds solutions of (II) to `point` until every transition out of a
/// probabilistic state has nonzero rank effect whenever some solution gives
/// it one. Rows of (II) only become more negative, so strictness is kept;
/// the multiplier of each added solution avoids cancelling an existing
/// nonzero effect. Expected effects of zero may hide individual effects that
/// decide whether a component is rank-zero-bounded, so the sum of one point
/// per strict candidate is not enough there.
fn separate_prob_effects(m: &VassMdp, base: &LinearProgram, mut point: Vec<Rational>) -> (Vec<Rational>, SolveStats) {
    let mut stats = SolveStats::default();
    let prob_ts: Vec<usize> = (0..m.num_states())
        .filter(|&p| m.is_probabilistic(p))
        .flat_map(|p| m.outgoing(p).iter().copied())
        .collect();
    let rows: Vec<Vec<Rational>> = prob_ts.iter().map(|&t| nondet_row(m, t)).collect();
    for i in 0..prob_ts.len() {
        if !dot(&rows[i], &point).is_zero() {
            continue;
        }
        for (rel, rhs) in [(Relation::Ge, Rational::one()), (Relation::Le, -Rational::one())] {
            let mut lp = base.clone();
            lp.add(rows[i].clone(), rel, rhs);
            let (w, s) = feasible_point_with_stats(&lp);
            stats += s;
            let Some(w) = w else { continue };
            // Effects are affine in the multiplier; each nonzero one vanishes
            // for at most one value.
            let bad: Vec<Rational> = rows
                .iter()
                .filter_map(|r| {
                    let (a, b) = (dot(r, &point), dot(r, &w));
                    (!a.is_zero() && !b.is_zero()).then(|| -a / b)
                })
                .collect();
            let mut lambda = Rational::one();
            while bad.contains(&lambda) {
                lambda += Rational::one();
            }
            for (v, wv) in point.iter_mut().zip(&w) {
                *v += &lambda * wv;
            }
            break;
        }
    }
    (point, stats)
}

/// Maximal solution of system (II).
pub fn maximal_solution_ii(m: &VassMdp) -> SolutionII {
    let base = system_ii(m);
    let d = m.dim();
    let width = d + m.num_states();
    let mut candidates = Vec::new();
    for c in 0..d {
        let mut row = vec![Rational::zero(); width];
        row[c] = Rational::one();
        candidates.push((row, Relation::Ge, Rational::one()));
    }
    let mut nondet = Vec::new();
    let mut prob = Vec::new();
    for p in 0..m.num_states() {
        if m.is_probabilistic(p) {
            if !m.outgoing(p).is_empty() {
                prob.push(p);
            }
        } else {
            nondet.extend_from_slice(m.outgoing(p));
        }
    }
    for &t in &nondet {
        candidates.push((nondet_row(m, t), Relation::Le, -Rational::one()));
    }
    for &p in &prob {
        candidates.push((prob_row(m, p), Relation::Le, -Rational::one()));
    }
    let rows: Vec<(Vec<Rational>, bool)> = candidates
        .iter()
        .map(|(r, rel, _)| (r.clone(), *rel == Relation::Ge))
        .collect();
    let (sum, stats) = maximize(&base, &candidates, |v| {
        rows.iter()
            .map(|(r, ge)| {
                let s = dot(r, v);
                if *ge {
                    s.is_positive()
                } else {
                    s.is_negative()
                }
            })
            .collect()
    });
    let (sum, more) = separate_prob_effects(m, &base, sum);
    let stats = {
        let mut s = stats;
        s += more;
        s
    };
    let scaled = scale_to_integers(&sum);
    let (y, z) = scaled.split_at(d);
    let sol = SolutionII {
        y: y.to_vec(),
        z: z.to_vec(),
        strict_counters: BTreeSet::new(),
        strict_nondet_transitions: BTreeSet::new(),
        strict_prob_states: BTreeSet::new(),
        stats,
    };
    let rf = sol.rank();
    SolutionII {
        strict_counters: (0..d).filter(|&c| sol.y[c].is_positive()).collect(),
        strict_nondet_transitions: nondet
            .iter()
            .copied()
            .filter(|&t| rank_effect(&rf, m, t).is_negative())
            .collect(),
        strict_prob_states: prob
            .iter()
            .copied()
            .filter(|&p| expected_rank_effect(&rf, m, p).expect("probabilistic").is_negative())
            .collect(),
        ..sol
    }
}

/// True iff every counter and every transition is covered by one side of the
/// dichotomy between maximal solutions of (I) and (II).
pub fn check_dichotomy(m: &VassMdp, s1: &SolutionI, s2: &SolutionII) -> bool {
    let counters_ok = (0..m.dim()).all(|c| s2.strict_counters.contains(&c) || s1.strict_counters.contains(&c));
    let transitions_ok = (0..m.num_transitions()).all(|t| {
        let source = m.transition(t).source;
        s1.strict_transitions.contains(&t)
            || if m.is_probabilistic(source) {
                s2.strict_prob_states.contains(&source)
            } else {
                s2.strict_nondet_transitions.contains(&t)
            }
    });
    counters_ok && transitions_ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, model, BIASED, EXPO1, NEG_LOOP, RW1};
    use crate::ratlp::LinearProgram;
    use proptest::prelude::*;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn as_rational(v: &[BigInt]) -> Vec<Rational> {
        v.iter().cloned().map(Rational::from_integer).collect()
    }

    fn feasible_i(m: &VassMdp, s: &SolutionI) -> bool {
        system_i(m).is_feasible(&as_rational(&s.x))
    }

    fn feasible_ii(m: &VassMdp, s: &SolutionII) -> bool {
        let mut v = as_rational(&s.y);
        v.extend(as_rational(&s.z));
        system_ii(m).is_feasible(&v)
    }

    #[test]
    fn rw1_solutions() {
        let m = model(RW1);
        let s1 = maximal_solution_i(&m);
        assert!(s1.x[0].is_positive());
        assert_eq!(s1.x[0], s1.x[1]);
        assert_eq!(s1.strict_transitions, set(&[0, 1]));
        assert!(s1.strict_counters.is_empty());
        let s2 = maximal_solution_ii(&m);
        assert_eq!(s2.y, ints(&[1]));
        assert_eq!(s2.z, ints(&[0]));
        assert_eq!(s2.strict_counters, set(&[0]));
        assert!(s2.strict_prob_states.is_empty());
        assert!(check_dichotomy(&m, &s1, &s2));
        let zeroed = SolutionII { y: ints(&[0]), strict_counters: BTreeSet::new(), ..s2 };
        assert!(!check_dichotomy(&m, &s1, &zeroed));
    }

    #[test]
    fn expo1_solutions() {
        let m = model(EXPO1);
        let s1 = maximal_solution_i(&m);
        assert_eq!(s1.strict_transitions, set(&[0, 1, 2, 3]));
        assert_eq!(s1.strict_counters, set(&[0, 1]));
        assert!(s1.effect(&m).iter().all(|d| d.is_positive()));
        let s2 = maximal_solution_ii(&m);
        assert_eq!(s2.y, ints(&[0, 0]));
        assert_eq!(s2.z[0], s2.z[1]);
        assert!(s2.strict_counters.is_empty() && s2.strict_nondet_transitions.is_empty());
        assert!(check_dichotomy(&m, &s1, &s2));
    }

    #[test]
    fn negative_loop_solutions() {
        let m = model(NEG_LOOP);
        let s1 = maximal_solution_i(&m);
        assert_eq!(s1.x, ints(&[0]));
        assert!(s1.strict_counters.is_empty() && s1.strict_transitions.is_empty());
        let s2 = maximal_solution_ii(&m);
        assert_eq!(s2.y, ints(&[1]));
        assert_eq!(s2.strict_nondet_transitions, set(&[0]));
    }

    #[test]
    fn rank_effects() {
        let rw1 = model(RW1);
        let rf = RankFunction { y: vec![int(1)], z: vec![int(0)] };
        assert_eq!(rank_effect(&rf, &rw1, 0), int(1));
        assert_eq!(rank_effect(&rf, &rw1, 1), int(-1));
        assert_eq!(expected_rank_effect(&rf, &rw1, 0).unwrap(), int(0));
        let biased = model(BIASED);
        assert_eq!(expected_rank_effect(&rf, &biased, 0).unwrap(), Rational::new((-1).into(), 3.into()));
        let zero = RankFunction { y: vec![int(0)], z: vec![int(0)] };
        assert_eq!(expected_rank_effect(&zero, &rw1, 0).unwrap(), int(0));
        let expo1 = model(EXPO1);
        let flat = RankFunction { y: vec![int(0), int(0)], z: vec![int(4), int(4)] };
        assert_eq!(rank_effect(&flat, &expo1, 1), int(0));
        assert!(expected_rank_effect(&flat, &expo1, 0).is_err());
        assert_eq!(rf.value(0, &[5]), int(5));
    }

    fn permuted(m: &VassMdp, seed: u64) -> (VassMdp, Vec<usize>) {
        let mut order: Vec<usize> = (0..m.num_transitions()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let transitions = order.iter().map(|&t| m.transition(t).clone()).collect();
        let p = VassMdp::new(m.counters().to_vec(), m.states().to_vec(), transitions).unwrap();
        (p, order)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn maximal_solutions_are_feasible_and_stable(m in fixtures::arb_model(4, 8, false), seed in any::<u64>()) {
            let s1 = maximal_solution_i(&m);
            let s2 = maximal_solution_ii(&m);
            prop_assert!(feasible_i(&m, &s1));
            prop_assert!(feasible_ii(&m, &s2));
            prop_assert!(check_dichotomy(&m, &s1, &s2));
            prop_assert_eq!(&maximal_solution_i(&m), &s1);

            // No transition or probabilistic state increases rank.
            let rf = s2.rank();
            for p in 0..m.num_states() {
                if m.is_probabilistic(p) {
                    prop_assert!(!expected_rank_effect(&rf, &m, p).unwrap().is_positive());
                } else {
                    for &t in m.outgoing(p) {
                        prop_assert!(!rank_effect(&rf, &m, t).is_positive());
                    }
                }
            }

            // Strict sets do not depend on transition order.
            let (pm, order) = permuted(&m, seed);
            let p1 = maximal_solution_i(&pm);
            let p2 = maximal_solution_ii(&pm);
            let back = |s: &BTreeSet<usize>| s.iter().map(|&i| order[i]).collect::<BTreeSet<_>>();
            prop_assert_eq!(back(&p1.strict_transitions), s1.strict_transitions.clone());
            prop_assert_eq!(&p1.strict_counters, &s1.strict_counters);
            prop_assert_eq!(&p2.strict_counters, &s2.strict_counters);
            prop_assert_eq!(back(&p2.strict_nondet_transitions), s2.strict_nondet_transitions.clone());
            prop_assert_eq!(&p2.strict_prob_states, &s2.strict_prob_states);
        }

        #[test]
        fn zero_is_feasible(m in fixtures::arb_model(4, 8, false)) {
            let lp: LinearProgram = system_i(&m);
            prop_assert!(lp.is_feasible(&vec![Rational::zero(); lp.num_vars()]));
            let lp = system_ii(&m);
            prop_assert!(lp.is_feasible(&vec![Rational::zero(); lp.num_vars()]));
        }
    }
}
