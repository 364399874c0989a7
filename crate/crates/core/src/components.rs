//! Multi-components, components and the constructions built on them.
//!
//! A multi-component is a nonnegative flow over transitions that is conserved
//! at every state and splits according to the transition probabilities at
//! probabilistic states. A component is a multi-component whose support is a
//! single recurrent class of the Markov chain induced by a counterless
//! memoryless deterministic (cMD) selection, normalized to unit outflow at
//! its center. Every multi-component is a conical sum of components.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::graph::{mec_decomposition, mec_decomposition_within, EndComponent};
use crate::model::{Rational, VassMdp};
use crate::ratlp::{feasible_point, solve_linear_system, LinearProgram, Relation};

/// Default limit on the number of cMD selections enumerated per MEC.
pub const DEFAULT_SELECTION_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ComponentError {
    #[error("not a multi-component: {0}")]
    NotMultiComponent(String),
    #[error("subtraction leaves a negative flow on transition `{0}`")]
    NegativeEntry(String),
    #[error("{count} strategy selections exceed the cap of {cap}")]
    SelectionCap { count: u128, cap: u64 },
    #[error("flow system of a recurrent class is singular")]
    Singular,
    #[error("state `{0}` is not in the support of the component")]
    NotInSupport(String),
    #[error("decomposition left a nonzero residue")]
    Residue,
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// A nonnegative conservative flow over the transitions of a model.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiComponent {
    pub flow: Vec<Rational>,
}

impl MultiComponent {
    pub fn zero(m: &VassMdp) -> Self {
        MultiComponent {
            flow: vec![Rational::zero(); m.num_transitions()],
        }
    }

    /// Checks every multi-component invariant.
    pub fn new(m: &VassMdp, flow: Vec<Rational>) -> Result<Self, ComponentError> {
        check_flow(m, &flow)?;
        Ok(MultiComponent { flow })
    }

    pub fn support(&self) -> BTreeSet<usize> {
        (0..self.flow.len()).filter(|&t| self.flow[t].is_positive()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.flow.iter().all(Zero::is_zero)
    }

    /// Total flow leaving state `p`.
    pub fn outflow(&self, m: &VassMdp, p: usize) -> Rational {
        m.outgoing(p).iter().map(|&t| self.flow[t].clone()).sum()
    }
}

/// Checks nonnegativity, conservation and proportionality of a flow.
pub fn check_flow(m: &VassMdp, flow: &[Rational]) -> Result<(), ComponentError> {
    let bad = |msg: String| Err(ComponentError::NotMultiComponent(msg));
    if flow.len() != m.num_transitions() {
        return bad(format!("expected {} entries, got {}", m.num_transitions(), flow.len()));
    }
    if let Some(t) = (0..flow.len()).find(|&t| flow[t].is_negative()) {
        return bad(format!("negative flow on `{}`", m.transition(t).id));
    }
    for p in 0..m.num_states() {
        let inflow: Rational = m.incoming(p).iter().map(|&t| flow[t].clone()).sum();
        let outflow: Rational = m.outgoing(p).iter().map(|&t| flow[t].clone()).sum();
        if inflow != outflow {
            return bad(format!("flow not conserved at `{}`", m.state(p).name));
        }
        if m.is_probabilistic(p) {
            for &t in m.outgoing(p) {
                if flow[t] != m.prob(t).expect("probabilistic source") * &outflow {
                    return bad(format!("flow on `{}` not proportional", m.transition(t).id));
                }
            }
        }
    }
    Ok(())
}

pub fn mc_add(a: &MultiComponent, b: &MultiComponent) -> MultiComponent {
    MultiComponent {
        flow: a.flow.iter().zip(&b.flow).map(|(x, y)| x + y).collect(),
    }
}

/// `a·x` for a nonnegative scalar `a`.
pub fn mc_scale(a: &Rational, x: &MultiComponent) -> MultiComponent {
    assert!(!a.is_negative(), "scaling factor must be nonnegative");
    MultiComponent {
        flow: x.flow.iter().map(|v| a * v).collect(),
    }
}

/// `a − b`, which must stay nonnegative.
pub fn mc_sub(m: &VassMdp, a: &MultiComponent, b: &MultiComponent) -> Result<MultiComponent, ComponentError> {
    let flow: Vec<Rational> = a.flow.iter().zip(&b.flow).map(|(x, y)| x - y).collect();
    if let Some(t) = (0..flow.len()).find(|&t| flow[t].is_negative()) {
        return Err(ComponentError::NegativeEntry(m.transition(t).id.clone()));
    }
    Ok(MultiComponent { flow })
}

/// Δ(x) = Σ x(t)·u_t.
pub fn effect(m: &VassMdp, x: &MultiComponent) -> Vec<Rational> {
    let mut delta = vec![Rational::zero(); m.dim()];
    for (t, v) in m.transitions().iter().zip(&x.flow) {
        if v.is_zero() {
            continue;
        }
        for (d, u) in delta.iter_mut().zip(&t.update) {
            if *u != 0 {
                *d += v * int(*u);
            }
        }
    }
    delta
}

/// A component, centered at `center` with unit outflow there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub flow: MultiComponent,
    pub center: usize,
    /// Chosen transition for every nondeterministic state of the support.
    pub selection: BTreeMap<usize, usize>,
    /// States and transitions of the support.
    pub mec: EndComponent,
}

/// Solves conservation, proportionality and unit outflow at `center` on the
/// recurrent class `mec` of the chain induced by `selection`.
pub fn centered_flow(
    m: &VassMdp,
    selection: &BTreeMap<usize, usize>,
    mec: &EndComponent,
    center: usize,
) -> Result<Component, ComponentError> {
    if !mec.states.contains(&center) {
        return Err(ComponentError::NotInSupport(m.state(center).name.clone()));
    }
    let edges = &mec.transitions;
    let col = |t: usize| edges.binary_search(&t).ok();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for &p in &mec.states {
        let mut row = vec![Rational::zero(); edges.len()];
        for &t in m.incoming(p) {
            if let Some(j) = col(t) {
                row[j] += Rational::one();
            }
        }
        for &t in m.outgoing(p) {
            if let Some(j) = col(t) {
                row[j] -= Rational::one();
            }
        }
        rows.push(row);
        rhs.push(Rational::zero());
        if m.is_probabilistic(p) {
            for &t in m.outgoing(p) {
                let prob = m.prob(t).expect("probabilistic source");
                let mut row = vec![Rational::zero(); edges.len()];
                for &s in m.outgoing(p) {
                    if let Some(j) = col(s) {
                        row[j] -= prob;
                    }
                }
                if let Some(j) = col(t) {
                    row[j] += Rational::one();
                }
                rows.push(row);
                rhs.push(Rational::zero());
            }
        }
    }
    let mut row = vec![Rational::zero(); edges.len()];
    for &t in m.outgoing(center) {
        if let Some(j) = col(t) {
            row[j] = Rational::one();
        }
    }
    rows.push(row);
    rhs.push(Rational::one());
    let solution = solve_linear_system(&rows, &rhs).ok_or(ComponentError::Singular)?;
    let mut flow = vec![Rational::zero(); m.num_transitions()];
    for (j, &t) in edges.iter().enumerate() {
        flow[t] = solution[j].clone();
    }
    if flow.iter().any(|v| v.is_negative()) {
        return Err(ComponentError::Singular);
    }
    let selection = selection
        .iter()
        .filter(|(p, _)| mec.states.binary_search(p).is_ok())
        .map(|(&p, &t)| (p, t))
        .collect();
    Ok(Component {
        flow: MultiComponent { flow },
        center,
        selection,
        mec: mec.clone(),
    })
}

/// All components of `m`, enumerating cMD selections per MEC.
pub fn enumerate_components(m: &VassMdp, cap: u64) -> Result<Vec<Component>, ComponentError> {
    let mut found: BTreeMap<(usize, Vec<usize>), Component> = BTreeMap::new();
    for mec in mec_decomposition(m).mecs {
        let in_mec: BTreeSet<usize> = mec.transitions.iter().copied().collect();
        let choices: Vec<(usize, Vec<usize>)> = mec
            .states
            .iter()
            .filter(|&&p| !m.is_probabilistic(p))
            .map(|&p| (p, m.outgoing(p).iter().copied().filter(|t| in_mec.contains(t)).collect()))
            .collect();
        let count = choices
            .iter()
            .fold(1u128, |acc, (_, c)| acc.saturating_mul(c.len() as u128));
        if count > cap as u128 {
            log::warn!("{count} selections exceed the cap of {cap}");
            return Err(ComponentError::SelectionCap { count, cap });
        }
        let fixed: Vec<usize> = mec
            .states
            .iter()
            .filter(|&&p| m.is_probabilistic(p))
            .flat_map(|&p| m.outgoing(p).iter().copied())
            .collect();
        let mut digits = vec![0usize; choices.len()];
        'selections: loop {
            let mut allowed = vec![false; m.num_transitions()];
            for &t in &fixed {
                allowed[t] = true;
            }
            let mut selection = BTreeMap::new();
            for ((p, opts), &d) in choices.iter().zip(&digits) {
                allowed[opts[d]] = true;
                selection.insert(*p, opts[d]);
            }
            for class in mec_decomposition_within(m, &allowed).mecs {
                let key = (class.transitions.len(), class.transitions.clone());
                if !found.contains_key(&key) {
                    let center = class.states[0];
                    let comp = centered_flow(m, &selection, &class, center)?;
                    found.insert(key, comp);
                }
            }
            // Advance the odometer over the choices.
            let mut i = 0;
            loop {
                if i == digits.len() {
                    break 'selections;
                }
                digits[i] += 1;
                if digits[i] < choices[i].1.len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
    Ok(found.into_values().collect())
}

/// Components of the sub-MDP spanned by the support of `x`, as components of
/// the original model.
pub fn components_of_support(m: &VassMdp, x: &MultiComponent, cap: u64) -> Result<Vec<Component>, ComponentError> {
    let support = x.support();
    let restricted =
        crate::model::restrict_transitions(m, &support).map_err(|e| ComponentError::NotMultiComponent(e.to_string()))?;
    let local = enumerate_components(&restricted.model, cap)?;
    Ok(local
        .into_iter()
        .map(|c| {
            let lift = |ts: &[usize]| ts.iter().map(|&t| restricted.origin[t]).collect::<Vec<_>>();
            Component {
                flow: MultiComponent {
                    flow: restricted.lift(&c.flow.flow, m.num_transitions()),
                },
                center: c.center,
                selection: c.selection.iter().map(|(&p, &t)| (p, restricted.origin[t])).collect(),
                mec: EndComponent {
                    states: c.mec.states.clone(),
                    transitions: lift(&c.mec.transitions),
                },
            }
        })
        .collect())
}

/// Expected counter change per return to the center, which equals Δ(y).
pub fn expected_return_effect(m: &VassMdp, y: &Component) -> Vec<Rational> {
    effect(m, &y.flow)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Behavior {
    Increasing,
    Decreasing,
    ZeroBounded,
    ZeroUnbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterBehavior {
    pub verdict: Behavior,
    pub expected_effect: Rational,
}

/// Whether values on edges are differences of a state potential.
fn has_potential<'a>(states: &[usize], edges: impl Iterator<Item = (usize, usize, &'a Rational)>) -> bool {
    let mut adj: BTreeMap<usize, Vec<(usize, Rational)>> = BTreeMap::new();
    for (s, t, v) in edges {
        adj.entry(s).or_default().push((t, v.clone()));
        adj.entry(t).or_default().push((s, -v));
    }
    let mut phi: BTreeMap<usize, Rational> = BTreeMap::new();
    for &root in states {
        if phi.contains_key(&root) {
            continue;
        }
        phi.insert(root, Rational::zero());
        let mut queue = VecDeque::from([root]);
        while let Some(p) = queue.pop_front() {
            let base = phi[&p].clone();
            for (q, v) in adj.get(&p).map(Vec::as_slice).unwrap_or_default() {
                let want = &base + v;
                match phi.get(q) {
                    Some(have) if *have != want => return false,
                    Some(_) => {}
                    None => {
                        phi.insert(*q, want);
                        queue.push_back(*q);
                    }
                }
            }
        }
    }
    true
}

/// Classifies how counter `c` behaves on returns to the center of `y`.
pub fn classify_counter_behavior(m: &VassMdp, y: &Component, c: usize) -> CounterBehavior {
    let expected_effect = expected_return_effect(m, y)[c].clone();
    let verdict = if expected_effect.is_positive() {
        Behavior::Increasing
    } else if expected_effect.is_negative() {
        Behavior::Decreasing
    } else {
        let values: Vec<Rational> = y.mec.transitions.iter().map(|&t| int(m.transition(t).update[c])).collect();
        let edges = y.mec.transitions.iter().zip(&values).map(|(&t, v)| {
            let tr = m.transition(t);
            (tr.source, tr.target, v)
        });
        if has_potential(&y.mec.states, edges) {
            Behavior::ZeroBounded
        } else {
            Behavior::ZeroUnbounded
        }
    };
    CounterBehavior {
        verdict,
        expected_effect,
    }
}

/// An edge of the Markov chain A_y with rational updates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainEdge {
    /// Transition of the original model this edge comes from.
    pub transition: usize,
    pub source: usize,
    pub target: usize,
    pub update: Vec<Rational>,
    pub prob: Rational,
}

/// A Markov chain over a subset of the states of a model, with rational
/// counter updates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalChain {
    pub states: Vec<usize>,
    pub center: usize,
    pub edges: Vec<ChainEdge>,
}

impl RationalChain {
    /// Flow-weighted sum of the edge updates.
    pub fn effect(&self, flow: &MultiComponent) -> Vec<Rational> {
        let dim = self.edges.first().map_or(0, |e| e.update.len());
        let mut delta = vec![Rational::zero(); dim];
        for e in &self.edges {
            for (d, u) in delta.iter_mut().zip(&e.update) {
                *d += &flow.flow[e.transition] * u;
            }
        }
        delta
    }

    /// True iff every return to the center changes counter `c` by exactly 0.
    pub fn zero_bounded_on(&self, c: usize) -> bool {
        let edges = self.edges.iter().map(|e| (e.source, e.target, &e.update[c]));
        has_potential(&self.states, edges)
    }
}

fn chain_of(m: &VassMdp, y: &Component, update: impl Fn(usize) -> Vec<Rational>) -> RationalChain {
    RationalChain {
        states: y.mec.states.clone(),
        center: y.center,
        edges: y
            .mec
            .transitions
            .iter()
            .map(|&t| {
                let tr = m.transition(t);
                ChainEdge {
                    transition: t,
                    source: tr.source,
                    target: tr.target,
                    update: update(t),
                    prob: tr.prob.clone().unwrap_or_else(Rational::one),
                }
            })
            .collect(),
    }
}

/// A_ŷ: edges entering the center lose Δ(y), so ŷ (same flow) has zero
/// effect on every counter.
pub fn hat_component(m: &VassMdp, y: &Component) -> (RationalChain, MultiComponent) {
    let delta = expected_return_effect(m, y);
    let chain = chain_of(m, y, |t| {
        let tr = m.transition(t);
        tr.update
            .iter()
            .zip(&delta)
            .map(|(u, d)| if tr.target == y.center { int(*u) - d } else { int(*u) })
            .collect()
    });
    (chain, y.flow.clone())
}

/// A_co-ŷ: edges entering the center carry Δ(y), all others carry 0.
pub fn co_hat_component(m: &VassMdp, y: &Component) -> RationalChain {
    let delta = expected_return_effect(m, y);
    chain_of(m, y, |t| {
        if m.transition(t).target == y.center {
            delta.clone()
        } else {
            vec![Rational::zero(); m.dim()]
        }
    })
}

/// Whether ŷ is zero-bounded on `c`.
pub fn hat_zero_bounded(m: &VassMdp, y: &Component, c: usize) -> bool {
    hat_component(m, y).0.zero_bounded_on(c)
}

/// The same component centered at `q`.
pub fn recenter(m: &VassMdp, y: &Component, q: usize) -> Result<Component, ComponentError> {
    if y.mec.states.binary_search(&q).is_err() {
        return Err(ComponentError::NotInSupport(m.state(q).name.clone()));
    }
    let out = y.flow.outflow(m, q);
    let factor = out.recip();
    Ok(Component {
        flow: mc_scale(&factor, &y.flow),
        center: q,
        ..y.clone()
    })
}

/// Writes `x` as Σ a_y·y over components of its support.
///
/// Components are tried in order of (support size, transition indices); each
/// is subtracted with the largest coefficient keeping the residue
/// nonnegative. One pass suffices: any component inside the final residue
/// would have been applicable when it was visited.
pub fn conical_decomposition(
    m: &VassMdp,
    x: &MultiComponent,
    cap: u64,
) -> Result<Vec<(Rational, Component)>, ComponentError> {
    check_flow(m, &x.flow)?;
    if x.is_zero() {
        return Ok(Vec::new());
    }
    let comps = components_of_support(m, x, cap)?;
    let mut residue = x.clone();
    let mut out = Vec::new();
    for y in comps {
        let support = y.flow.support();
        let a = support
            .iter()
            .map(|&t| &residue.flow[t] / &y.flow.flow[t])
            .min()
            .unwrap_or_else(Rational::zero);
        if a.is_positive() {
            residue = mc_sub(m, &residue, &mc_scale(&a, &y.flow))?;
            out.push((a, y));
        }
    }
    if !residue.is_zero() {
        return Err(ComponentError::Residue);
    }
    Ok(out)
}

/// Which components may appear in a zero-bounded conical sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize)]
pub enum ZbMode {
    /// Components whose hat is zero-unbounded on the counter.
    #[default]
    Literal,
    /// Components whose hat is zero-bounded on the counter.
    Bounded,
}

/// Whether Δ(x)(c) = 0 and `x` is a conical sum of components qualifying
/// under `mode`. Existence is decided exactly by an LP over the coefficients.
pub fn zero_bounded_multicomponent(
    m: &VassMdp,
    x: &MultiComponent,
    c: usize,
    mode: ZbMode,
    cap: u64,
) -> Result<bool, ComponentError> {
    check_flow(m, &x.flow)?;
    if !effect(m, x)[c].is_zero() {
        return Ok(false);
    }
    let qualifying: Vec<Component> = components_of_support(m, x, cap)?
        .into_iter()
        .filter(|y| hat_zero_bounded(m, y, c) == (mode == ZbMode::Bounded))
        .collect();
    let mut lp = LinearProgram::with_vars(qualifying.len());
    for t in 0..m.num_transitions() {
        let row = qualifying.iter().map(|y| y.flow.flow[t].clone()).collect();
        lp.add(row, Relation::Eq, x.flow[t].clone());
    }
    Ok(feasible_point(&lp).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, model, EXPO1, RW1, SHIFT_CYCLE, TWO_CYCLE};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn flow(m: &VassMdp, v: &[i64]) -> MultiComponent {
        MultiComponent::new(m, v.iter().map(|&x| int(x)).collect()).unwrap()
    }

    #[test]
    fn algebra() {
        let rw1 = model(RW1);
        let a = flow(&rw1, &[1, 1]);
        let b = flow(&rw1, &[2, 2]);
        assert_eq!(mc_add(&a, &MultiComponent::zero(&rw1)), a);
        assert_eq!(mc_add(&a, &b), flow(&rw1, &[3, 3]));
        assert_eq!(mc_scale(&int(0), &a), MultiComponent::zero(&rw1));
        assert_eq!(mc_sub(&rw1, &flow(&rw1, &[3, 3]), &a).unwrap(), b);
        assert!(matches!(mc_sub(&rw1, &a, &b), Err(ComponentError::NegativeEntry(_))));
        let expo1 = model(EXPO1);
        let e = flow(&expo1, &[1, 1, 1, 1]);
        let sum = mc_add(&e, &e);
        assert!(check_flow(&expo1, &sum.flow).is_ok());
        assert_eq!(sum, flow(&expo1, &[2, 2, 2, 2]));
        assert!(MultiComponent::new(&rw1, vec![int(1), int(2)]).is_err());
    }

    #[test]
    fn effects() {
        let rw1 = model(RW1);
        assert_eq!(effect(&rw1, &flow(&rw1, &[1, 1])), vec![int(0)]);
        let expo1 = model(EXPO1);
        assert_eq!(effect(&expo1, &flow(&expo1, &[1, 1, 1, 1])), vec![int(1), int(1)]);
        assert_eq!(effect(&expo1, &MultiComponent::zero(&expo1)), vec![int(0), int(0)]);
    }

    #[test]
    fn rw1_component() {
        let rw1 = model(RW1);
        let comps = enumerate_components(&rw1, DEFAULT_SELECTION_CAP).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].flow.flow, vec![q(1, 2), q(1, 2)]);
        assert_eq!(comps[0].center, 0);
        assert_eq!(expected_return_effect(&rw1, &comps[0]), vec![int(0)]);
        let b = classify_counter_behavior(&rw1, &comps[0], 0);
        assert_eq!(b.verdict, Behavior::ZeroUnbounded);
        let (hat, yhat) = hat_component(&rw1, &comps[0]);
        assert_eq!(hat.edges[0].update, vec![int(1)]);
        assert_eq!(yhat, comps[0].flow);
        let co = co_hat_component(&rw1, &comps[0]);
        assert!(co.edges.iter().all(|e| e.update == vec![int(0)]));
        assert_eq!(recenter(&rw1, &comps[0], 0).unwrap(), comps[0]);
    }

    #[test]
    fn expo1_components() {
        let expo1 = model(EXPO1);
        let comps = enumerate_components(&expo1, DEFAULT_SELECTION_CAP).unwrap();
        let supports: Vec<Vec<usize>> = comps.iter().map(|c| c.mec.transitions.clone()).collect();
        assert_eq!(supports, vec![vec![0], vec![2], vec![1, 3]]);
        let t1 = &comps[0];
        assert_eq!(expected_return_effect(&expo1, t1), vec![int(-1), int(2)]);
        assert_eq!(classify_counter_behavior(&expo1, t1, 0).verdict, Behavior::Decreasing);
        let (hat, yhat) = hat_component(&expo1, t1);
        assert_eq!(hat.edges[0].update, vec![int(0), int(0)]);
        assert_eq!(hat.effect(&yhat), vec![int(0), int(0)]);
        let co = co_hat_component(&expo1, t1);
        assert_eq!(co.edges[0].update, vec![int(-1), int(2)]);
        assert_eq!(comps[2].selection, BTreeMap::from([(0, 1), (1, 3)]));
    }

    #[test]
    fn expo1_flow_decomposes() {
        let expo1 = model(EXPO1);
        let x = flow(&expo1, &[2, 1, 2, 1]);
        let parts = conical_decomposition(&expo1, &x, DEFAULT_SELECTION_CAP).unwrap();
        let mut sum = MultiComponent::zero(&expo1);
        for (a, y) in &parts {
            sum = mc_add(&sum, &mc_scale(a, &y.flow));
        }
        assert_eq!(sum, x);
        assert_eq!(parts.len(), 3);
    }

    #[test]
    fn two_cycles() {
        let m = model(TWO_CYCLE);
        let comps = enumerate_components(&m, DEFAULT_SELECTION_CAP).unwrap();
        assert_eq!(comps.len(), 1);
        let y = &comps[0];
        assert_eq!(y.flow, flow(&m, &[1, 1]));
        assert_eq!(recenter(&m, y, 1).unwrap().flow, flow(&m, &[1, 1]));
        let at_q = centered_flow(&m, &y.selection, &y.mec, 1).unwrap();
        assert_eq!(at_q.flow, y.flow);
        assert_eq!(classify_counter_behavior(&m, y, 0).verdict, Behavior::ZeroBounded);
        let x = flow(&m, &[1, 1]);
        assert!(!zero_bounded_multicomponent(&m, &x, 0, ZbMode::Literal, DEFAULT_SELECTION_CAP).unwrap());
        assert!(zero_bounded_multicomponent(&m, &x, 0, ZbMode::Bounded, DEFAULT_SELECTION_CAP).unwrap());

        let s = model(SHIFT_CYCLE);
        let y = &enumerate_components(&s, DEFAULT_SELECTION_CAP).unwrap()[0];
        assert_eq!(expected_return_effect(&s, y), vec![int(0), int(3)]);
        let (hat, _) = hat_component(&s, y);
        // `back` enters the center p.
        assert_eq!(hat.edges[1].update, vec![int(-1), int(0)]);
        assert_eq!(hat.edges[0].update, vec![int(1), int(0)]);
        let co = co_hat_component(&s, y);
        assert_eq!(co.edges[1].update, vec![int(0), int(3)]);
        assert_eq!(co.edges[0].update, vec![int(0), int(0)]);
    }

    #[test]
    fn zero_bounded_examples() {
        let rw1 = model(RW1);
        let x = flow(&rw1, &[1, 1]);
        assert!(zero_bounded_multicomponent(&rw1, &x, 0, ZbMode::Literal, DEFAULT_SELECTION_CAP).unwrap());
        assert!(!zero_bounded_multicomponent(&rw1, &x, 0, ZbMode::Bounded, DEFAULT_SELECTION_CAP).unwrap());
        let expo1 = model(EXPO1);
        let x = flow(&expo1, &[1, 1, 1, 1]);
        for mode in [ZbMode::Literal, ZbMode::Bounded] {
            assert!(!zero_bounded_multicomponent(&expo1, &x, 0, mode, DEFAULT_SELECTION_CAP).unwrap());
        }
    }

    #[test]
    fn rw1_flow_decomposes() {
        let rw1 = model(RW1);
        let parts = conical_decomposition(&rw1, &flow(&rw1, &[3, 3]), DEFAULT_SELECTION_CAP).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].0, int(6));
        assert_eq!(parts[0].1.flow.flow, vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn selection_cap_is_enforced() {
        let expo1 = model(EXPO1);
        assert!(matches!(
            enumerate_components(&expo1, 3),
            Err(ComponentError::SelectionCap { count: 4, cap: 3 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn components_are_valid(m in fixtures::arb_model(4, 8, false)) {
            for y in enumerate_components(&m, DEFAULT_SELECTION_CAP).unwrap() {
                prop_assert!(check_flow(&m, &y.flow.flow).is_ok());
                prop_assert_eq!(y.flow.outflow(&m, y.center), Rational::one());
                let support: Vec<usize> = y.flow.support().into_iter().collect();
                prop_assert_eq!(&support, &y.mec.transitions);
                let (hat, yhat) = hat_component(&m, &y);
                prop_assert!(hat.effect(&yhat).iter().all(Zero::is_zero));
                for &p in &y.mec.states {
                    let r = recenter(&m, &y, p).unwrap();
                    prop_assert_eq!(r.flow.outflow(&m, p), Rational::one());
                    prop_assert_eq!(r.flow.support(), y.flow.support());
                }
                let co = co_hat_component(&m, &y);
                let total: Vec<Rational> = hat.effect(&yhat).iter().zip(co.effect(&y.flow)).map(|(a, b)| a + b).collect();
                prop_assert_eq!(total, effect(&m, &y.flow));
            }
        }
    }
}
