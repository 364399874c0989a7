//! Monte-Carlo simulation of VASS MDPs under simple strategies.
//!
//! Trajectories are independent and each owns a ChaCha8 generator seeded
//! from (master seed, n, trial), so results do not depend on thread
//! scheduling. Probabilistic choices are sampled exactly over the common
//! denominator of a state's probabilities when it fits in 64 bits.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classifier::Verdict;
use crate::components::Component;
use crate::model::{Observable, VassMdp};
use crate::report::EstimateReport;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimError {
    #[error("p must lie strictly between 0 and 1, got {0}")]
    InvalidP(f64),
    #[error("at least 30 trials are required, got {0}")]
    TooFewTrials(usize),
    #[error("max_steps must be at least 1")]
    MaxSteps,
    #[error("all trials censored at n = {0}; increase max_steps")]
    AllCensored(i64),
    #[error("exponent fit needs at least 3 points, got {0}")]
    FitPoints(usize),
    #[error("exponent fit needs positive values")]
    NonPositive,
    #[error("exponent fit needs distinct n values")]
    DuplicateN,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schedule has no phases")]
    EmptySchedule,
    #[error("{0}")]
    Load(String),
}

/// cMD selection: nondeterministic state → chosen outgoing transition.
pub type Selection = BTreeMap<usize, usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    UniformRandom,
    /// States missing from the map choose uniformly.
    FixedCmd(Selection),
    /// Each selection is followed for its step budget; the last one persists
    /// after the schedule ends.
    Phased(Vec<(Selection, u64)>),
}

impl Strategy {
    pub fn describe(&self, m: &VassMdp) -> String {
        let sel = |s: &Selection| {
            let parts: Vec<String> = s
                .iter()
                .map(|(&p, &t)| format!("{}={}", m.state(p).name, m.transition(t).id))
                .collect();
            parts.join(",")
        };
        match self {
            Strategy::UniformRandom => "uniform".into(),
            Strategy::FixedCmd(s) => format!("cmd[{}]", sel(s)),
            Strategy::Phased(phases) => {
                let parts: Vec<String> = phases.iter().map(|(s, b)| format!("{}:{b}", sel(s))).collect();
                format!("phased[{}]", parts.join(";"))
            }
        }
    }
}

/// Parses a cMD strategy file: lines `state=transition-id`, `#` comments.
pub fn parse_cmd(m: &VassMdp, text: &str) -> Result<Selection, SimError> {
    let mut sel = Selection::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| SimError::Parse { line: i + 1, message };
        let (state, trans) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `state=transition`, got `{line}`")))?;
        let (state, trans) = (state.trim(), trans.trim());
        let p = m.state_index(state).ok_or_else(|| err(format!("unknown state `{state}`")))?;
        let t = m
            .transition_index(trans)
            .ok_or_else(|| err(format!("unknown transition `{trans}`")))?;
        if m.is_probabilistic(p) {
            return Err(err(format!("state `{state}` is probabilistic")));
        }
        if m.transition(t).source != p {
            return Err(err(format!("transition `{trans}` does not leave `{state}`")));
        }
        if sel.insert(p, t).is_some() {
            return Err(err(format!("state `{state}` selected twice")));
        }
    }
    Ok(sel)
}

/// Parses a phased schedule: lines `<cmd-file> <steps>`. `load` resolves a
/// cMD file name to its contents.
pub fn parse_phased(
    m: &VassMdp,
    text: &str,
    mut load: impl FnMut(&str) -> Result<String, String>,
) -> Result<Strategy, SimError> {
    let mut phases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| SimError::Parse { line: i + 1, message };
        let mut parts = line.split_whitespace();
        let (Some(file), Some(steps), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("expected `<cmd-file> <steps>`, got `{line}`")));
        };
        let steps: u64 = steps.parse().map_err(|_| err(format!("invalid step budget `{steps}`")))?;
        let contents = load(file).map_err(SimError::Load)?;
        phases.push((parse_cmd(m, &contents)?, steps));
    }
    if phases.is_empty() {
        return Err(SimError::EmptySchedule);
    }
    Ok(Strategy::Phased(phases))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrajectoryStats {
    /// Steps until the first terminal configuration; `None` if censored.
    pub term_step: Option<u64>,
    pub steps: u64,
    /// Largest value of each counter over the configurations before
    /// termination, including the initial one.
    pub max_counter: Vec<i64>,
    pub trans_count: Vec<u64>,
    pub seed: u64,
}

impl TrajectoryStats {
    /// Observed value of `obs`; censored trajectories have no value.
    pub fn value(&self, obs: Observable) -> Option<u64> {
        self.term_step?;
        Some(match obs {
            Observable::Length => self.steps,
            Observable::Counter(c) => self.max_counter[c].max(0) as u64,
            Observable::Transition(t) => self.trans_count[t],
        })
    }
}

enum Sampler {
    Exact { cum: Vec<u64>, total: u64 },
    Float { cum: Vec<f64> },
}

impl Sampler {
    fn new(m: &VassMdp, p: usize) -> Self {
        let out = m.outgoing(p);
        let lcm = out
            .iter()
            .fold(num_bigint::BigInt::from(1), |acc, &t| acc.lcm(m.prob(t).expect("probabilistic").denom()));
        if let Some(total) = lcm.to_u64() {
            let mut cum = Vec::with_capacity(out.len());
            let mut acc = 0u64;
            for &t in out {
                let q = m.prob(t).expect("probabilistic");
                acc += (q.numer() * (&lcm / q.denom())).to_u64().expect("fits below the total");
                cum.push(acc);
            }
            Sampler::Exact { cum, total }
        } else {
            let mut acc = 0.0;
            let cum = out
                .iter()
                .map(|&t| {
                    acc += m.prob(t).expect("probabilistic").to_f64().unwrap_or(0.0);
                    acc
                })
                .collect();
            Sampler::Float { cum }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            Sampler::Exact { cum, total } => {
                let u = rng.random_range(0..*total);
                cum.iter().position(|&c| u < c).expect("u below total")
            }
            Sampler::Float { cum } => {
                let u = rng.random::<f64>() * cum.last().copied().unwrap_or(1.0);
                cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
            }
        }
    }
}

/// Precomputed per-model data shared by all trajectories.
struct Engine<'a> {
    m: &'a VassMdp,
    samplers: Vec<Option<Sampler>>,
    /// Phase selections as per-state lookup tables, with cumulative ends.
    phases: Vec<(Vec<Option<usize>>, u64)>,
}

impl<'a> Engine<'a> {
    fn new(m: &'a VassMdp, strat: &Strategy) -> Self {
        let samplers = (0..m.num_states())
            .map(|p| (m.is_probabilistic(p) && !m.outgoing(p).is_empty()).then(|| Sampler::new(m, p)))
            .collect();
        let table = |s: &Selection| {
            let mut v = vec![None; m.num_states()];
            for (&p, &t) in s {
                v[p] = Some(t);
            }
            v
        };
        let phases = match strat {
            Strategy::UniformRandom => vec![(vec![None; m.num_states()], u64::MAX)],
            Strategy::FixedCmd(s) => vec![(table(s), u64::MAX)],
            Strategy::Phased(list) => {
                let mut end = 0u64;
                let mut v: Vec<(Vec<Option<usize>>, u64)> = list
                    .iter()
                    .map(|(s, b)| {
                        end = end.saturating_add(*b);
                        (table(s), end)
                    })
                    .collect();
                if let Some(last) = v.last_mut() {
                    last.1 = u64::MAX;
                }
                v
            }
        };
        Engine { m, samplers, phases }
    }

    fn run(&self, start: usize, n0: i64, max_steps: u64, seed: u64) -> TrajectoryStats {
        let m = self.m;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![n0; m.dim()];
        let mut max_counter = values.clone();
        let mut trans_count = vec![0u64; m.num_transitions()];
        let mut state = start;
        let mut phase = 0;
        let mut steps = 0u64;
        let terminal = |v: &[i64]| v.iter().any(|&x| x < 0);
        if terminal(&values) {
            return TrajectoryStats {
                term_step: Some(0),
                steps: 0,
                max_counter,
                trans_count,
                seed,
            };
        }
        while steps < max_steps {
            while steps >= self.phases[phase].1 {
                phase += 1;
            }
            let out = m.outgoing(state);
            let i = match &self.samplers[state] {
                Some(s) => s.sample(&mut rng),
                None => match self.phases[phase].0[state] {
                    Some(t) => out.iter().position(|&o| o == t).expect("selection leaves the state"),
                    None => {
                        if out.len() == 1 {
                            0
                        } else {
                            rng.random_range(0..out.len())
                        }
                    }
                },
            };
            let t = out[i];
            let tr = m.transition(t);
            trans_count[t] += 1;
            steps += 1;
            let mut dead = false;
            for (v, &u) in values.iter_mut().zip(&tr.update) {
                *v += u;
                dead |= *v < 0;
            }
            state = tr.target;
            if dead {
                return TrajectoryStats {
                    term_step: Some(steps),
                    steps,
                    max_counter,
                    trans_count,
                    seed,
                };
            }
            for (mx, &v) in max_counter.iter_mut().zip(&values) {
                if v > *mx {
                    *mx = v;
                }
            }
        }
        TrajectoryStats {
            term_step: None,
            steps,
            max_counter,
            trans_count,
            seed,
        }
    }
}

/// Runs one trajectory from `start` with every counter at `n0`.
pub fn run_trajectory(
    m: &VassMdp,
    strat: &Strategy,
    start: usize,
    n0: i64,
    max_steps: u64,
    seed: u64,
) -> Result<TrajectoryStats, SimError> {
    if max_steps < 1 {
        return Err(SimError::MaxSteps);
    }
    Ok(Engine::new(m, strat).run(start, n0, max_steps, seed))
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `trial` at initial value `n`.
pub fn trial_seed(seed: u64, n: i64, trial: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ n as u64) ^ trial as u64)
}

/// Simulation parameters shared by every initial value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub start: usize,
    pub trials: usize,
    pub max_steps: u64,
    pub seed: u64,
}

/// All `trials` trajectories at initial value `n`, in trial order.
pub fn simulate_stats(m: &VassMdp, strat: &Strategy, n: i64, cfg: &SimConfig) -> Vec<TrajectoryStats> {
    let engine = Engine::new(m, strat);
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| engine.run(cfg.start, n, cfg.max_steps, trial_seed(cfg.seed, n, i)))
        .collect()
}

/// Observed values of `trials` trajectories at initial value `n`, in trial
/// order; `None` marks a censored trial.
pub fn simulate_values(m: &VassMdp, strat: &Strategy, obs: Observable, n: i64, cfg: &SimConfig) -> Vec<Option<u64>> {
    simulate_stats(m, strat, n, cfg).iter().map(|s| s.value(obs)).collect()
}

/// The ⌈p·N⌉-th order statistic; censored values count as +∞ (`None`).
pub fn quantile(values: &[Option<u64>], p: f64) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<u64> = values.iter().flatten().copied().collect();
    sorted.sort_unstable();
    let rank = ((p * values.len() as f64).ceil() as usize).clamp(1, values.len());
    sorted.get(rank - 1).copied()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpPoint {
    pub n: i64,
    /// `None` when the quantile falls among censored trials.
    pub value: Option<u64>,
    pub censored: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpEstimate {
    pub p: f64,
    pub points: Vec<FpPoint>,
    /// Fit over the points with finite quantiles, when there are at least 3.
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
}

fn fp_points(
    m: &VassMdp,
    strat: &Strategy,
    obs: &[Observable],
    p: f64,
    n_list: &[i64],
    cfg: &SimConfig,
) -> Vec<Vec<FpPoint>> {
    let mut out = vec![Vec::with_capacity(n_list.len()); obs.len()];
    for &n in n_list {
        let stats = simulate_stats(m, strat, n, cfg);
        for (o, points) in obs.iter().zip(out.iter_mut()) {
            let values: Vec<Option<u64>> = stats.iter().map(|s| s.value(*o)).collect();
            points.push(FpPoint {
                n,
                value: quantile(&values, p),
                censored: values.iter().filter(|v| v.is_none()).count(),
                trials: values.len(),
            });
        }
    }
    out
}

fn with_fit(p: f64, points: Vec<FpPoint>) -> FpEstimate {
    let finite: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|pt| pt.value.map(|v| (pt.n as f64, v as f64)))
        .collect();
    let fit = fit_exponent(&finite).ok();
    FpEstimate {
        p,
        points,
        slope: fit.map(|f| f.0),
        stderr: fit.map(|f| f.1),
    }
}

/// Empirical fixed-probability bound f̂_p(n) for each n in `n_list`.
pub fn estimate_fp(
    m: &VassMdp,
    strat: &Strategy,
    obs: Observable,
    p: f64,
    n_list: &[i64],
    cfg: &SimConfig,
) -> Result<FpEstimate, SimError> {
    Ok(estimate_fp_many(m, strat, &[obs], p, n_list, cfg)?.remove(0))
}

/// [`estimate_fp`] for several observables over the same trajectories.
pub fn estimate_fp_many(
    m: &VassMdp,
    strat: &Strategy,
    obs: &[Observable],
    p: f64,
    n_list: &[i64],
    cfg: &SimConfig,
) -> Result<Vec<FpEstimate>, SimError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SimError::InvalidP(p));
    }
    if cfg.trials < 30 {
        return Err(SimError::TooFewTrials(cfg.trials));
    }
    if cfg.max_steps < 1 {
        return Err(SimError::MaxSteps);
    }
    let all = fp_points(m, strat, obs, p, n_list, cfg);
    if let Some(pt) = all.first().and_then(|pts| pts.iter().find(|pt| pt.censored == pt.trials)) {
        return Err(SimError::AllCensored(pt.n));
    }
    Ok(all.into_iter().map(|pts| with_fit(p, pts)).collect())
}

/// Least-squares slope of log(value) against log(n), with its standard
/// error.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<(f64, f64), SimError> {
    if points.len() < 3 {
        return Err(SimError::FitPoints(points.len()));
    }
    if points.iter().any(|&(n, v)| n <= 0.0 || v <= 0.0) {
        return Err(SimError::NonPositive);
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(SimError::DuplicateN);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// Every cMD selection of `m`, or `None` if there are more than `cap`.
pub fn enumerate_cmd(m: &VassMdp, cap: usize) -> Option<Vec<Selection>> {
    let choices: Vec<(usize, &[usize])> = (0..m.num_states())
        .filter(|&p| !m.is_probabilistic(p) && m.outgoing(p).len() > 1)
        .map(|p| (p, m.outgoing(p)))
        .collect();
    let count = choices.iter().try_fold(1usize, |acc, (_, o)| acc.checked_mul(o.len()))?;
    if count > cap {
        return None;
    }
    let mut all = vec![Selection::new()];
    for (p, opts) in choices {
        all = all
            .into_iter()
            .flat_map(|s| {
                opts.iter().map(move |&t| {
                    let mut s = s.clone();
                    s.insert(p, t);
                    s
                })
            })
            .collect();
    }
    Some(all)
}

/// Simulation effort for [`validate_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    pub n_list: Vec<i64>,
    pub trials: usize,
    pub max_steps: u64,
    pub seed: u64,
    pub start: usize,
    /// Fixed cMD strategies are tried only if there are at most this many.
    pub cmd_cap: usize,
    /// Strategies tried in addition to uniform and fixed cMD ones.
    pub extra: Vec<Strategy>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            n_list: vec![16, 32, 64, 128],
            trials: 200,
            max_steps: 2_000_000,
            seed: 1,
            start: 0,
            cmd_cap: 16,
            extra: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemValidation {
    pub item: String,
    pub verdict: String,
    pub outcome: Outcome,
    /// Strategy with the fastest observed growth.
    pub strategy: Option<String>,
    pub slope: Option<f64>,
    pub detail: String,
}

fn two_point_slope(a: &FpPoint, b: &FpPoint) -> Option<f64> {
    let (va, vb) = (a.value? as f64, b.value? as f64);
    (va > 0.0 && vb > 0.0).then(|| (vb.ln() - va.ln()) / ((b.n as f64).ln() - (a.n as f64).ln()))
}

/// Superlinear growth in log-log scale, or censoring that grows with n and
/// ends with an infinite quantile.
fn looks_exponential(points: &[FpPoint]) -> bool {
    let half = points.len() / 2;
    if half >= 2 {
        let first = two_point_slope(&points[0], &points[half - 1]);
        let second = two_point_slope(&points[half], &points[points.len() - 1]);
        if let (Some(a), Some(b)) = (first, second) {
            if b - a >= 0.5 {
                return true;
            }
        }
    }
    let monotone = points.windows(2).all(|w| w[0].censored <= w[1].censored);
    monotone && points.last().is_some_and(|p| p.value.is_none())
}

/// Checks polynomial and exponential verdicts of `report` against
/// simulation at p = 0.9. Simulation only explores uniform, fixed cMD and
/// the extra strategies, so failing to see growth is inconclusive rather
/// than a failure.
pub fn validate_report(m: &VassMdp, report: &EstimateReport, budget: &Budget) -> Vec<ItemValidation> {
    let mut strategies = vec![Strategy::UniformRandom];
    if let Some(cmds) = enumerate_cmd(m, budget.cmd_cap) {
        strategies.extend(cmds.into_iter().filter(|s| !s.is_empty()).map(Strategy::FixedCmd));
    }
    strategies.extend(budget.extra.iter().cloned());
    let cfg = SimConfig {
        start: budget.start,
        trials: budget.trials,
        max_steps: budget.max_steps,
        seed: budget.seed,
    };
    let mut out = Vec::new();
    for (label, item) in report.items() {
        let obs = match Observable::parse(m, &label) {
            Ok(o) => o,
            Err(e) => {
                out.push(ItemValidation {
                    item: label,
                    verdict: item.display.clone(),
                    outcome: Outcome::Inconclusive,
                    strategy: None,
                    slope: None,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let runs: Vec<(String, FpEstimate)> = match item.verdict {
            Verdict::TightPoly(_) | Verdict::ExponentialLower | Verdict::ThetaN | Verdict::ThetaN2 => strategies
                .iter()
                .map(|s| {
                    let points = fp_points(m, s, &[obs], 0.9, &budget.n_list, &cfg).remove(0);
                    (s.describe(m), with_fit(0.9, points))
                })
                .collect(),
            _ => Vec::new(),
        };
        let (outcome, strategy, slope, detail) = match item.verdict.degree() {
            Some(k) if k >= 1 => {
                let best = runs
                    .iter()
                    .filter_map(|(name, est)| est.slope.map(|s| (name, s)))
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                match best {
                    Some((name, s)) => {
                        let pass = (s - k as f64).abs() <= 0.35;
                        let outcome = if pass { Outcome::Pass } else { Outcome::Fail };
                        (outcome, Some(name.clone()), Some(s), format!("max fitted slope {s:.3} against degree {k}"))
                    }
                    None => (Outcome::Inconclusive, None, None, "too few finite quantiles to fit".into()),
                }
            }
            _ if item.verdict == Verdict::ExponentialLower => {
                match runs.iter().find(|(_, est)| looks_exponential(&est.points)) {
                    Some((name, est)) => (
                        Outcome::Pass,
                        Some(name.clone()),
                        est.slope,
                        "superlinear log-log growth or growing censoring".into(),
                    ),
                    None => (Outcome::Inconclusive, None, None, "no explored strategy shows exponential growth".into()),
                }
            }
            _ => (Outcome::Inconclusive, None, None, "verdict not checked by simulation".into()),
        };
        out.push(ItemValidation {
            item: label,
            verdict: item.display.clone(),
            outcome,
            strategy,
            slope,
            detail,
        });
    }
    out
}

/// Counter effects of `returns` successive returns to the center of `y`,
/// sampled on the chain induced by its selection.
pub fn sample_return_effects(m: &VassMdp, y: &Component, returns: usize, seed: u64) -> Vec<Vec<i64>> {
    let engine = Engine::new(m, &Strategy::FixedCmd(y.selection.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_support: Vec<bool> = (0..m.num_transitions()).map(|t| !y.flow.flow[t].is_zero()).collect();
    let mut out = Vec::with_capacity(returns);
    let mut state = y.center;
    for _ in 0..returns {
        let mut effect = vec![0i64; m.dim()];
        loop {
            let outs = m.outgoing(state);
            let t = match &engine.samplers[state] {
                Some(s) => outs[s.sample(&mut rng)],
                None => y.selection.get(&state).copied().unwrap_or_else(|| {
                    *outs.iter().find(|&&t| in_support[t]).expect("support leaves every state")
                }),
            };
            let tr = m.transition(t);
            for (e, u) in effect.iter_mut().zip(&tr.update) {
                *e += u;
            }
            state = tr.target;
            if state == y.center {
                break;
            }
        }
        out.push(effect);
    }
    out
}
