//! Complexity classification.
//!
//! [`full_classification`] runs the degree-by-degree procedure for strongly
//! connected VASS MDPs: at each candidate degree k it computes upper
//! estimates n^k from ranking functions of layered models and lower
//! estimates n^(k+1) from maximal flows, then moves on to the next degree at
//! which a new upper estimate is possible. Items left over when no candidate
//! degree remains are checked against an exponential iteration scheme.
//!
//! [`classify_markov_chain`] classifies VASS Markov chains directly from
//! their unique component.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::components::{
    classify_counter_behavior, effect, enumerate_components, zero_bounded_multicomponent, Behavior, Component,
    ComponentError, MultiComponent, ZbMode, DEFAULT_SELECTION_CAP,
};
use crate::constraints::{
    check_dichotomy, maximal_solution_i, maximal_solution_ii, rank_effect, SolutionI,
    SolutionII,
};
use crate::graph::{is_strongly_connected, mec_decomposition, mec_decomposition_within, EndComponent};
use crate::model::{
    add_step_counter, add_transition_counter, project_counters, restrict_transitions, ModelError, Observable,
    Rational, VassMdp,
};
use crate::ratlp::SolveStats;

/// Largest degree examined unless configured otherwise.
pub const DEFAULT_CAP: u32 = 16;

/// Asymptotic classification of one complexity measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "k")]
pub enum Verdict {
    /// Tight estimate n^k.
    TightPoly(u32),
    /// Working state: lower estimate n^k, upper estimate still open.
    LowerPoly(u32),
    /// Lower estimate n^k that the analysis could not tighten.
    AtLeastPoly(u32),
    /// Lower estimate 2^n.
    ExponentialLower,
    /// Markov chain whose measure is infinite with positive probability.
    Unbounded,
    /// Markov chain, Θ(n).
    ThetaN,
    /// Markov chain, Θ(n²).
    ThetaN2,
    /// Transient transition of a Markov chain.
    Constant,
}

impl Verdict {
    pub fn is_final(&self) -> bool {
        !matches!(self, Verdict::LowerPoly(_))
    }

    /// True for verdicts that leave the true complexity open.
    pub fn is_unresolved(&self) -> bool {
        matches!(self, Verdict::LowerPoly(_) | Verdict::AtLeastPoly(_))
    }

    /// Polynomial degree of a tight verdict, for either classifier.
    pub fn degree(&self) -> Option<u32> {
        match self {
            Verdict::TightPoly(k) => Some(*k),
            Verdict::ThetaN => Some(1),
            Verdict::ThetaN2 => Some(2),
            Verdict::Constant => Some(0),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let power = |k: u32| if k == 1 { "n".to_string() } else { format!("n^{k}") };
        match self {
            Verdict::TightPoly(k) => write!(f, "Theta({})", power(*k)),
            Verdict::LowerPoly(k) => write!(f, "Omega({}) (working)", power(*k)),
            Verdict::AtLeastPoly(k) => write!(f, "Omega({}) (unresolved)", power(*k)),
            Verdict::ExponentialLower => write!(f, "Omega(2^n)"),
            Verdict::Unbounded => write!(f, "unbounded"),
            Verdict::ThetaN => write!(f, "Theta(n)"),
            Verdict::ThetaN2 => write!(f, "Theta(n^2)"),
            Verdict::Constant => write!(f, "Theta(1)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Estimate {
    pub verdict: Verdict,
    pub provenance: String,
}

impl Estimate {
    fn new(verdict: Verdict, provenance: impl Into<String>) -> Self {
        Estimate {
            verdict,
            provenance: provenance.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ClassifierError {
    #[error("model is not strongly connected")]
    NotStronglyConnected,
    #[error("degree cap must be at least 1, got {0}")]
    InvalidCap(u32),
    #[error("layer index must be at least 1, got {0}")]
    LayerIndex(u32),
    #[error("dichotomy violated at degree {0}")]
    Dichotomy(u32),
    #[error("state `{0}` has a nondeterministic choice")]
    NotMarkovChain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Component(#[from] ComponentError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    pub cap: u32,
    pub zb_mode: ZbMode,
    pub selection_cap: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            cap: DEFAULT_CAP,
            zb_mode: ZbMode::Literal,
            selection_cap: DEFAULT_SELECTION_CAP,
        }
    }
}

/// Where a counter of a layered model comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerCounter {
    /// Counter of the base model.
    pub original: usize,
    /// For local copies: the restriction level i−j+1 and the MEC index within
    /// the MEC decomposition of the model restricted to that T level.
    pub owner: Option<(u32, usize)>,
}

/// The layered model A_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredVass {
    pub index: u32,
    /// Same states and transitions as the base model; counters per `table`.
    pub model: VassMdp,
    pub table: Vec<LayerCounter>,
}

/// Candidate degree sets derived from Aset and Bset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CandidateSets {
    pub aset: BTreeSet<u32>,
    pub bset: BTreeSet<u32>,
    /// {2r : r ∈ Aset}, the degrees at which the first layer a set of tight
    /// counters takes part in can produce upper estimates.
    pub x0: BTreeSet<u32>,
    pub x1: BTreeSet<u32>,
    pub x2: BTreeSet<u32>,
}

impl CandidateSets {
    pub fn all(&self) -> BTreeSet<u32> {
        self.x0.iter().chain(&self.x1).chain(&self.x2).copied().collect()
    }
}

/// The candidate sets for given Aset and Bset.
pub fn candidate_sets(aset: &BTreeSet<u32>, bset: &BTreeSet<u32>) -> CandidateSets {
    let sums: BTreeSet<u32> = aset.iter().flat_map(|a| bset.iter().map(move |b| a + b)).collect();
    let mut x1: BTreeSet<u32> = bset.union(&sums).copied().collect();
    x1.insert(1);
    let mut x2 = BTreeSet::new();
    for &r in aset {
        let s_r = bset
            .iter()
            .copied()
            .chain(aset.iter().filter(|&&a| a <= r).flat_map(|a| bset.iter().map(move |b| a + b)));
        for s in s_r {
            x2.insert((s + r).max(2 * r));
        }
    }
    CandidateSets {
        aset: aset.clone(),
        bset: bset.clone(),
        x0: aset.iter().map(|r| 2 * r).collect(),
        x1,
        x2,
    }
}

/// One executed degree step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepTrace {
    pub k: u32,
    pub candidates: CandidateSets,
    /// Transitions given an upper estimate n^k by rank-unbounded components.
    pub t_prime: Vec<String>,
    pub t_star: Option<u32>,
    pub tight: Vec<String>,
    pub lower: Vec<String>,
    pub notes: Vec<String>,
}

/// Working state of the classification of one model.
#[derive(Clone, Debug)]
pub struct ClassifierState {
    pub counter_est: Vec<Estimate>,
    pub trans_est: Vec<Estimate>,
    /// The model is classified up to this degree.
    pub last_k: u32,
    pub options: Options,
    pub trace: Vec<StepTrace>,
    pub stats: SolveStats,
    pub notes: Vec<String>,
    /// Items that received an upper estimate below their lower estimate's
    /// successor and therefore cannot be advanced.
    stuck_counters: BTreeSet<usize>,
    stuck_transitions: BTreeSet<usize>,
    layers: BTreeMap<u32, LayeredVass>,
    cache_i: HashMap<String, SolutionI>,
    cache_ii: HashMap<String, SolutionII>,
    bound_log2: f64,
}

fn tight_at(est: &Estimate, j: u32) -> bool {
    est.verdict == Verdict::TightPoly(j)
}

fn tight_below(est: &Estimate, i: u32) -> bool {
    matches!(est.verdict, Verdict::TightPoly(j) if j < i)
}

impl ClassifierState {
    pub fn new(m: &VassMdp, options: Options) -> Self {
        let trivial = || Estimate::new(Verdict::LowerPoly(1), "trivial lower estimate");
        ClassifierState {
            counter_est: vec![trivial(); m.dim()],
            trans_est: vec![trivial(); m.num_transitions()],
            last_k: 0,
            options,
            trace: Vec::new(),
            stats: SolveStats::default(),
            notes: Vec::new(),
            stuck_counters: BTreeSet::new(),
            stuck_transitions: BTreeSet::new(),
            layers: BTreeMap::new(),
            cache_i: HashMap::new(),
            cache_ii: HashMap::new(),
            bound_log2: m.dim() as f64 + m.num_transitions() as f64 * 3f64.log2(),
        }
    }

    /// C̃_j: counters with tight estimate n^j.
    pub fn tight_counters(&self, j: u32) -> BTreeSet<usize> {
        (0..self.counter_est.len()).filter(|&c| tight_at(&self.counter_est[c], j)).collect()
    }

    /// C̃_{i+}: counters not tight below degree i.
    pub fn counters_from(&self, i: u32) -> BTreeSet<usize> {
        (0..self.counter_est.len()).filter(|&c| !tight_below(&self.counter_est[c], i)).collect()
    }

    /// T_i: transitions not tight below degree i.
    pub fn transitions_from(&self, i: u32) -> BTreeSet<usize> {
        (0..self.trans_est.len()).filter(|&t| !tight_below(&self.trans_est[t], i)).collect()
    }

    /// {a < k : C̃_a ≠ ∅}.
    pub fn aset(&self, k: u32) -> BTreeSet<u32> {
        self.counter_est
            .iter()
            .filter_map(|e| match e.verdict {
                Verdict::TightPoly(a) if a < k => Some(a),
                _ => None,
            })
            .collect()
    }

    /// {b < k : T_b \ T_{b+1} ≠ ∅}.
    pub fn bset(&self, k: u32) -> BTreeSet<u32> {
        self.trans_est
            .iter()
            .filter_map(|e| match e.verdict {
                Verdict::TightPoly(b) if b < k => Some(b),
                _ => None,
            })
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.counter_est.iter().chain(&self.trans_est).all(|e| e.verdict.is_final())
    }

    /// Asserts the degree bound 2^d·3^|T| for a tight estimate n^k.
    fn check_bound(&self, k: u32) {
        assert!(
            (k as f64).log2() <= self.bound_log2 + 1e-9,
            "tight degree {k} exceeds 2^d*3^|T|"
        );
    }

    fn solve_i(&mut self, m: &VassMdp) -> SolutionI {
        let key = m.to_text();
        if let Some(s) = self.cache_i.get(&key) {
            return s.clone();
        }
        let s = maximal_solution_i(m);
        self.stats += s.stats;
        self.cache_i.insert(key, s.clone());
        s
    }

    fn solve_ii(&mut self, m: &VassMdp) -> SolutionII {
        let key = m.to_text();
        if let Some(s) = self.cache_ii.get(&key) {
            return s.clone();
        }
        let s = maximal_solution_ii(m);
        self.stats += s.stats;
        self.cache_ii.insert(key, s.clone());
        s
    }

    fn layer(&mut self, m: &VassMdp, i: u32) -> Result<LayeredVass, ClassifierError> {
        if let Some(l) = self.layers.get(&i) {
            return Ok(l.clone());
        }
        let layer = build_layer(m, i, self)?;
        self.layers.insert(i, layer.clone());
        Ok(layer)
    }
}

fn mask(m: &VassMdp, keep: &BTreeSet<usize>) -> Vec<bool> {
    (0..m.num_transitions()).map(|t| keep.contains(&t)).collect()
}

/// Builds A_i: unclassified counters stay global, and each counter tight at
/// degree j < i is split into one local copy per MEC of the model restricted
/// to T_{i−j+1}. A transition updates the copy of the MEC containing it.
///
/// Two components at level-distance at least j (not in a common MEC of
/// T_{i−j+1}) must use different copies of a counter tight at n^j; splitting
/// by the MECs of T_{i−j} instead lets a counter of size n^j be shuttled
/// between loops that are only connected through transitions used O(n^(i−j))
/// times, and the flow lower estimate overshoots.
pub fn build_layer(m: &VassMdp, i: u32, st: &ClassifierState) -> Result<LayeredVass, ClassifierError> {
    if i < 1 {
        return Err(ClassifierError::LayerIndex(i));
    }
    let mut table: Vec<LayerCounter> = st
        .counters_from(i)
        .into_iter()
        .map(|c| LayerCounter {
            original: c,
            owner: None,
        })
        .collect();
    let mut owners: Vec<Vec<bool>> = vec![Vec::new(); table.len()];
    for j in 1..i {
        let tight = st.tight_counters(j);
        if tight.is_empty() {
            continue;
        }
        let level = i - j + 1;
        let mecs = mec_decomposition_within(m, &mask(m, &st.transitions_from(level))).mecs;
        for &c in &tight {
            for (b, mec) in mecs.iter().enumerate() {
                table.push(LayerCounter {
                    original: c,
                    owner: Some((level, b)),
                });
                owners.push(mask(m, &mec.transitions.iter().copied().collect()));
            }
        }
    }
    let mut names = Vec::with_capacity(table.len());
    for lc in &table {
        let base = &m.counters()[lc.original];
        names.push(match lc.owner {
            None => base.clone(),
            Some((level, b)) => format!("{base}~{level}.{b}"),
        });
    }
    let updates = m
        .transitions()
        .iter()
        .enumerate()
        .map(|(t, tr)| {
            table
                .iter()
                .zip(&owners)
                .map(|(lc, own)| match lc.owner {
                    None => tr.update[lc.original],
                    Some(_) if own[t] => tr.update[lc.original],
                    Some(_) => 0,
                })
                .collect()
        })
        .collect();
    let model = m.with_counters(names, updates)?;
    Ok(LayeredVass { index: i, model, table })
}

/// R-set of the layer A_{k−l} restricted to T_{k−l+1} and to the counters
/// stemming from C̃_1, ..., C̃_l: transitions whose effect on the maximal
/// ranking function is nonzero. For a probabilistic state with any such
/// outgoing transition, all its outgoing transitions belong to R.
///
/// Returns transitions of the base model and the ranking solution.
pub fn compute_r_set(
    layer: &LayeredVass,
    l: u32,
    k: u32,
    st: &mut ClassifierState,
) -> Result<(BTreeSet<usize>, SolutionII), ClassifierError> {
    debug_assert!(l >= 1 && 2 * l <= k);
    let keep_t = st.transitions_from(k - l + 1);
    let origins: BTreeSet<usize> = (1..=l).flat_map(|j| st.tight_counters(j)).collect();
    let keep_c: BTreeSet<usize> = (0..layer.table.len())
        .filter(|&c| origins.contains(&layer.table[c].original))
        .collect();
    let restricted = restrict_transitions(&layer.model, &keep_t)?;
    let model = project_counters(&restricted.model, &keep_c);
    let sol = st.solve_ii(&model);
    let rf = sol.rank();
    let mut r = BTreeSet::new();
    for p in 0..model.num_states() {
        let out = model.outgoing(p);
        if model.is_probabilistic(p) {
            if out.iter().any(|&t| !rank_effect(&rf, &model, t).is_zero()) {
                r.extend(out.iter().map(|&t| restricted.origin[t]));
            }
        } else {
            r.extend(
                out.iter()
                    .filter(|&&t| !rank_effect(&rf, &model, t).is_zero())
                    .map(|&t| restricted.origin[t]),
            );
        }
    }
    Ok((r, sol))
}

fn names(m: &VassMdp, ts: &BTreeSet<usize>) -> Vec<String> {
    ts.iter().map(|&t| m.transition(t).id.clone()).collect()
}

/// Classifies `m` up to degree `k`, given a classification up to the
/// previous executed degree with no candidate degree in between.
pub fn classify_step_k(m: &VassMdp, k: u32, st: &mut ClassifierState) -> Result<(), ClassifierError> {
    let mut notes = Vec::new();
    // Degrees skipped since the last step carry no new upper estimates, so
    // every open lower estimate advances to n^k.
    for (i, e) in st.counter_est.iter_mut().enumerate() {
        if let Verdict::LowerPoly(j) = e.verdict {
            if j < k && !st.stuck_counters.contains(&i) {
                *e = Estimate::new(Verdict::LowerPoly(k), format!("no upper estimate possible below degree {k}"));
            }
        }
    }
    for (i, e) in st.trans_est.iter_mut().enumerate() {
        if let Verdict::LowerPoly(j) = e.verdict {
            if j < k && !st.stuck_transitions.contains(&i) {
                *e = Estimate::new(Verdict::LowerPoly(k), format!("no upper estimate possible below degree {k}"));
            }
        }
    }
    let aset = st.aset(k);
    let bset = st.bset(k);
    let candidates = candidate_sets(&aset, &bset);

    // Upper estimates n^k from rank-unbounded components of coarser layers.
    let mut t_prime = BTreeSet::new();
    for l in 1..=k / 2 {
        let layer = st.layer(m, k - l)?;
        let (r, _) = compute_r_set(&layer, l, k, st)?;
        t_prime.extend(r);
    }
    let t_k = st.transitions_from(k);
    let mut tight = BTreeSet::new();
    for &t in t_prime.intersection(&t_k) {
        if st.trans_est[t].verdict == Verdict::LowerPoly(k) {
            st.check_bound(k);
            st.trans_est[t] = Estimate::new(
                Verdict::TightPoly(k),
                format!("degree {k}: nonzero rank effect on a coarser layer"),
            );
            tight.insert(format!("transition:{}", m.transition(t).id));
        }
    }

    // Maximal solutions on A_k restricted to T̂_{k+1}.
    let t_hat: BTreeSet<usize> = t_k.difference(&t_prime).copied().collect();
    let layer = st.layer(m, k)?;
    let restricted = restrict_transitions(&layer.model, &t_hat)?;
    let s1 = st.solve_i(&restricted.model);
    let s2 = st.solve_ii(&restricted.model);
    if !check_dichotomy(&restricted.model, &s1, &s2) {
        return Err(ClassifierError::Dichotomy(k));
    }
    let t_star = if k == 1 {
        Some(1)
    } else if !t_prime.is_empty() {
        Some(k)
    } else {
        aset.iter()
            .flat_map(|a| bset.iter().map(move |b| a + b))
            .filter(|&s| s <= k)
            .max()
    };

    let mut upper_c = BTreeSet::new();
    let mut lower_c = BTreeSet::new();
    let delta = s1.effect(&restricted.model);
    for (c, lc) in layer.table.iter().enumerate() {
        if lc.owner.is_some() {
            continue;
        }
        if s2.strict_counters.contains(&c) {
            upper_c.insert(lc.original);
        }
        if delta[c].is_positive() {
            lower_c.insert(lc.original);
        }
    }
    let mut upper_t = BTreeSet::new();
    let mut lower_t = BTreeSet::new();
    for (local, &t) in restricted.origin.iter().enumerate() {
        let source = restricted.model.transition(local).source;
        let decreasing = if restricted.model.is_probabilistic(source) {
            s2.strict_prob_states.contains(&source)
        } else {
            s2.strict_nondet_transitions.contains(&local)
        };
        if decreasing {
            upper_t.insert(t);
        }
        if s1.strict_transitions.contains(&local) {
            lower_t.insert(t);
        }
    }

    let mut lower = Vec::new();
    let mut apply = |est: &mut Estimate,
                     stuck: &mut BTreeSet<usize>,
                     idx: usize,
                     label: String,
                     upper: bool,
                     low: bool,
                     notes: &mut Vec<String>,
                     tight: &mut BTreeSet<String>| {
        if est.verdict != Verdict::LowerPoly(k) {
            return;
        }
        if low {
            *est = Estimate::new(Verdict::LowerPoly(k + 1), format!("degree {k}: positive in a maximal flow"));
            lower.push(label);
        } else if upper {
            match t_star {
                Some(t) if t == k => {
                    *est = Estimate::new(Verdict::TightPoly(k), format!("degree {k}: decreased by a ranking function"));
                    tight.insert(label);
                }
                Some(t) => {
                    stuck.insert(idx);
                    notes.push(format!("{label}: upper estimate n^{t} below current lower estimate n^{k}"));
                }
                None => {
                    stuck.insert(idx);
                    notes.push(format!("{label}: no upper degree derivable at degree {k}"));
                }
            }
        }
    };
    for c in 0..m.dim() {
        let label = format!("counter:{}", m.counters()[c]);
        let (u, l) = (upper_c.contains(&c), lower_c.contains(&c));
        apply(&mut st.counter_est[c], &mut st.stuck_counters, c, label, u, l, &mut notes, &mut tight);
    }
    for t in 0..m.num_transitions() {
        if !t_hat.contains(&t) {
            continue;
        }
        let label = format!("transition:{}", m.transition(t).id);
        let (u, l) = (upper_t.contains(&t), lower_t.contains(&t));
        apply(&mut st.trans_est[t], &mut st.stuck_transitions, t, label, u, l, &mut notes, &mut tight);
    }
    if tight.iter().any(|_| true) {
        st.check_bound(k);
    }
    st.notes.extend(notes.iter().cloned());
    st.trace.push(StepTrace {
        k,
        candidates,
        t_prime: names(m, &t_prime),
        t_star,
        tight: tight.into_iter().collect(),
        lower,
        notes,
    });
    st.last_k = k;
    Ok(())
}

/// The next degree to examine, over all classified items so far.
pub fn candidate_ks(st: &ClassifierState) -> BTreeSet<u32> {
    let all = u32::MAX;
    let sets = candidate_sets(&st.aset(all), &st.bset(all));
    sets.all().into_iter().filter(|&k| k <= st.options.cap).collect()
}

/// Whether Δ(x) > 0 on every counter on which not every per-MEC restriction
/// of `x` is zero-bounded.
pub fn exponential_scheme_check(
    m: &VassMdp,
    x: &MultiComponent,
    mode: ZbMode,
    selection_cap: u64,
) -> Result<bool, ClassifierError> {
    let delta = effect(m, x);
    let support = x.support();
    let mecs = mec_decomposition_within(m, &mask(m, &support)).mecs;
    for (c, d) in delta.iter().enumerate() {
        if d.is_positive() {
            continue;
        }
        for mec in &mecs {
            let mut part = MultiComponent::zero(m);
            for &t in &mec.transitions {
                part.flow[t] = x.flow[t].clone();
            }
            if !zero_bounded_multicomponent(m, &part, c, mode, selection_cap)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Result of [`full_classification`].
#[derive(Clone, Debug)]
pub struct Classification {
    pub counters: Vec<Estimate>,
    pub transitions: Vec<Estimate>,
    pub trace: Vec<StepTrace>,
    pub final_sets: CandidateSets,
    pub stats: SolveStats,
    pub notes: Vec<String>,
    pub cap_reached: bool,
}

impl Classification {
    pub fn has_unresolved(&self) -> bool {
        self.counters.iter().chain(&self.transitions).any(|e| e.verdict.is_unresolved())
    }
}

/// Classifies every counter and transition of a strongly connected model.
pub fn full_classification(m: &VassMdp, options: Options) -> Result<Classification, ClassifierError> {
    if options.cap < 1 {
        return Err(ClassifierError::InvalidCap(options.cap));
    }
    if !is_strongly_connected(m) {
        return Err(ClassifierError::NotStronglyConnected);
    }
    let mut st = ClassifierState::new(m, options);
    let mut cap_reached = false;
    while !st.is_complete() {
        let next = candidate_ks(&st).into_iter().find(|&k| k > st.last_k);
        let beyond = candidate_sets(&st.aset(u32::MAX), &st.bset(u32::MAX))
            .all()
            .into_iter()
            .any(|k| k > st.last_k && k > options.cap);
        match next {
            Some(k) => classify_step_k(m, k, &mut st)?,
            None => {
                cap_reached = beyond;
                break;
            }
        }
    }
    let open = st.last_k + 1;
    if cap_reached {
        for e in st.counter_est.iter_mut().chain(st.trans_est.iter_mut()) {
            if let Verdict::LowerPoly(_) = e.verdict {
                *e = Estimate::new(Verdict::AtLeastPoly(options.cap), "degree cap reached");
            }
        }
    } else if !st.is_complete() {
        exponential_phase(m, &mut st)?;
    }
    for (set, ests) in [(&st.stuck_counters, &mut st.counter_est), (&st.stuck_transitions, &mut st.trans_est)] {
        for &i in set {
            if let Verdict::LowerPoly(j) = ests[i].verdict {
                ests[i] = Estimate::new(Verdict::AtLeastPoly(j), "upper estimate below lower estimate");
            }
        }
    }
    for e in st.counter_est.iter_mut().chain(st.trans_est.iter_mut()) {
        if let Verdict::LowerPoly(j) = e.verdict {
            *e = Estimate::new(Verdict::AtLeastPoly(j.max(open)), "no estimate beyond the lower bound");
        }
    }
    Ok(Classification {
        final_sets: candidate_sets(&st.aset(u32::MAX), &st.bset(u32::MAX)),
        counters: st.counter_est,
        transitions: st.trans_est,
        trace: st.trace,
        stats: st.stats,
        notes: st.notes,
        cap_reached,
    })
}

/// Items still open once no candidate degree is left: take a maximal flow on
/// the stabilized layer and check it for an exponential iteration scheme.
fn exponential_phase(m: &VassMdp, st: &mut ClassifierState) -> Result<(), ClassifierError> {
    // From this index on, every layer restriction level exceeds the last
    // executed degree, so the layer no longer changes.
    let stable = 2 * st.last_k + 1;
    let layer = st.layer(m, stable)?;
    let t_inf = st.transitions_from(stable);
    let restricted = restrict_transitions(&layer.model, &t_inf)?;
    let s1 = st.solve_i(&restricted.model);
    let lifted: Vec<BigInt> = restricted.lift(&s1.x, m.num_transitions());
    let x = MultiComponent {
        flow: lifted.into_iter().map(Rational::from_integer).collect(),
    };
    let passes = exponential_scheme_check(m, &x, st.options.zb_mode, st.options.selection_cap)?;
    let delta = effect(m, &x);
    let open = st.last_k + 1;
    let verdict = |positive: bool| {
        if passes && positive {
            Estimate::new(Verdict::ExponentialLower, "exponential iteration scheme")
        } else if passes {
            Estimate::new(Verdict::AtLeastPoly(open), "not pumped by the iteration scheme")
        } else {
            Estimate::new(Verdict::AtLeastPoly(open), "iteration scheme check failed")
        }
    };
    if !passes {
        st.notes.push(format!(
            "maximal flow of the stabilized layer is not an iteration scheme in {:?} mode",
            st.options.zb_mode
        ));
    }
    for c in 0..m.dim() {
        if matches!(st.counter_est[c].verdict, Verdict::LowerPoly(_)) && !st.stuck_counters.contains(&c) {
            st.counter_est[c] = verdict(delta[c].is_positive());
        }
    }
    for t in 0..m.num_transitions() {
        if matches!(st.trans_est[t].verdict, Verdict::LowerPoly(_)) && !st.stuck_transitions.contains(&t) {
            st.trans_est[t] = verdict(x.flow[t].is_positive());
        }
    }
    Ok(())
}

/// Classifies a single complexity measure through the auxiliary-counter
/// reductions.
pub fn classify_observable(m: &VassMdp, obs: Observable, options: Options) -> Result<Estimate, ClassifierError> {
    match obs {
        Observable::Length => {
            let (with_sc, _) = add_step_counter(m);
            let c = full_classification(&with_sc, options)?;
            Ok(c.counters[with_sc.dim() - 1].clone())
        }
        Observable::Counter(c) => Ok(full_classification(m, options)?.counters[c].clone()),
        Observable::Transition(t) => Ok(full_classification(m, options)?.transitions[t].clone()),
    }
}

/// Witness of a Markov-chain verdict: the unique component of one MEC.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McWitness {
    pub mec: EndComponent,
    pub flow: MultiComponent,
    /// Counters with positive expected effect per return.
    pub c_plus: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McVerdict {
    pub length: Estimate,
    pub counters: Vec<Estimate>,
    pub transitions: Vec<Estimate>,
    pub witnesses: Vec<McWitness>,
}

fn rank_mc(v: Verdict) -> u8 {
    match v {
        Verdict::Constant => 0,
        Verdict::ThetaN => 1,
        Verdict::ThetaN2 => 2,
        _ => 3,
    }
}

/// Verdict for counter `c` of a chain whose MEC has component `y`.
fn mc_counter_verdict(m: &VassMdp, y: &Component, c: usize) -> Verdict {
    let delta = effect(m, &y.flow);
    if !delta[c].is_positive() || delta.iter().any(Signed::is_negative) {
        return Verdict::ThetaN;
    }
    let tame = (0..m.dim()).all(|d| {
        matches!(
            classify_counter_behavior(m, y, d).verdict,
            Behavior::Increasing | Behavior::ZeroBounded
        )
    });
    if tame {
        Verdict::Unbounded
    } else {
        Verdict::ThetaN2
    }
}

/// Per-MEC verdicts of a chain, combined by the worst MEC. Transient
/// transitions are used a constant number of times.
fn mc_items(m: &VassMdp) -> Result<(Vec<Verdict>, Vec<Verdict>, Vec<McWitness>), ClassifierError> {
    let mut counters = vec![Verdict::ThetaN; m.dim()];
    let mut transitions = vec![Verdict::Constant; m.num_transitions()];
    let mut witnesses = Vec::new();
    for mec in mec_decomposition(m).mecs {
        let keep: BTreeSet<usize> = mec.transitions.iter().copied().collect();
        let restricted = restrict_transitions(m, &keep)?;
        let comps = enumerate_components(&restricted.model, 1)?;
        let y = comps.into_iter().next().expect("every MEC carries a component");
        for (c, v) in counters.iter_mut().enumerate() {
            let here = mc_counter_verdict(&restricted.model, &y, c);
            if rank_mc(here) > rank_mc(*v) {
                *v = here;
            }
        }
        let delta = effect(&restricted.model, &y.flow);
        witnesses.push(McWitness {
            mec: mec.clone(),
            flow: MultiComponent {
                flow: restricted.lift(&y.flow.flow, m.num_transitions()),
            },
            c_plus: (0..m.dim()).filter(|&c| delta[c].is_positive()).collect(),
        });
        // Transitions of this MEC: classify through a transition counter.
        for &t in &mec.transitions {
            let (with_ct, _) = add_transition_counter(&restricted.model, &m.transition(t).id)?;
            let local = restricted.local_index(t).expect("kept");
            debug_assert_eq!(with_ct.transition(local).update[with_ct.dim() - 1], 1);
            let comps = enumerate_components(&with_ct, 1)?;
            transitions[t] = mc_counter_verdict(&with_ct, &comps[0], with_ct.dim() - 1);
        }
    }
    Ok((counters, transitions, witnesses))
}

/// Classifies every measure of a VASS Markov chain.
pub fn classify_markov_chain(m: &VassMdp) -> Result<McVerdict, ClassifierError> {
    if let Some(p) = (0..m.num_states()).find(|&p| !m.is_probabilistic(p) && m.outgoing(p).len() != 1) {
        return Err(ClassifierError::NotMarkovChain(m.state(p).name.clone()));
    }
    let (counters, transitions, witnesses) = mc_items(m)?;
    let (with_sc, _) = add_step_counter(m);
    let (sc_counters, _, _) = mc_items(&with_sc)?;
    let length = sc_counters[with_sc.dim() - 1];
    let why = |v: Verdict| match v {
        Verdict::ThetaN => "counter outside the positive set or a negative expected effect",
        Verdict::ThetaN2 => "positive drift held back by a zero-unbounded counter",
        Verdict::Unbounded => "no counter can decrease in expectation",
        _ => "transient transition",
    };
    Ok(McVerdict {
        length: Estimate::new(length, why(length)),
        counters: counters.into_iter().map(|v| Estimate::new(v, why(v))).collect(),
        transitions: transitions.into_iter().map(|v| Estimate::new(v, why(v))).collect(),
        witnesses,
    })
}
