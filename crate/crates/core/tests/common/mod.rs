//! Brute-force oracles and model builders shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use vassbound::generate::{random_model, ModelParams};
use vassbound::model::{State, Transition};
use vassbound::ratlp::{Direction, LinearProgram, Relation};
use vassbound::{parse_model, Rational, VassMdp};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(name: &str) -> VassMdp {
    let text = std::fs::read_to_string(fixture_dir().join(name)).expect("fixture exists");
    parse_model(&text).expect("fixture parses")
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

// ---- LP vertex enumeration ----

/// Solves a square system by Gaussian elimination; `None` if singular.
fn gauss(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for k in col..n {
                    let v = &f * &a[col][k];
                    a[r][k] -= v;
                }
                let v = &f * &b[col];
                b[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Best objective value over all vertices of an LP with nonnegative
/// variables; `None` iff the LP is infeasible. Equals the optimum whenever
/// the LP is bounded.
pub fn vertex_optimum(lp: &LinearProgram) -> Option<Rational> {
    let n = lp.num_vars();
    // Rows: the constraints, then x_i >= 0.
    let mut rows: Vec<(Vec<Rational>, Rational)> =
        lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs.clone())).collect();
    for i in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[i] = Rational::one();
        rows.push((e, Rational::zero()));
    }
    fn subsets(len: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            subsets(len, k, i + 1, cur, out);
            cur.pop();
        }
    }
    // A vertex is the unique solution of n tight rows; feasibility covers
    // the equalities that were not chosen.
    let mut choices = Vec::new();
    subsets(rows.len(), n, 0, &mut Vec::new(), &mut choices);
    let mut best: Option<Rational> = None;
    for rows_idx in choices {
        let a: Vec<Vec<Rational>> = rows_idx.iter().map(|&r| rows[r].0.clone()).collect();
        let b: Vec<Rational> = rows_idx.iter().map(|&r| rows[r].1.clone()).collect();
        let Some(x) = gauss(a, b) else { continue };
        if !lp.is_feasible(&x) {
            continue;
        }
        let v = lp.objective_value(&x);
        if best.as_ref().is_none_or(|b| match lp.direction {
            Direction::Maximize => v > *b,
            Direction::Minimize => v < *b,
        }) {
            best = Some(v);
        }
    }
    best
}

/// Random LP over nonnegative variables with at most `max_vars` variables
/// and `max_cons` constraints.
pub fn random_lp<R: Rng>(rng: &mut R, max_vars: usize, max_cons: usize) -> LinearProgram {
    let n = rng.random_range(1..=max_vars);
    let mut lp = LinearProgram::with_vars(n);
    let m = rng.random_range(0..=max_cons);
    for _ in 0..m {
        let coeffs = (0..n).map(|_| rat(rng.random_range(-3..=3))).collect();
        let relation = match rng.random_range(0..5) {
            0 => Relation::Eq,
            1 => Relation::Ge,
            _ => Relation::Le,
        };
        lp.add(coeffs, relation, rat(rng.random_range(-4..=8)));
    }
    let dir = if rng.random_bool(0.5) {
        Direction::Maximize
    } else {
        Direction::Minimize
    };
    lp.set_objective(dir, (0..n).map(|_| rat(rng.random_range(-4..=4))).collect());
    lp
}

/// Checks an unboundedness certificate: `point` is feasible, `ray` is a
/// recession direction and it strictly improves the objective.
pub fn is_unbounded_certificate(lp: &LinearProgram, point: &[Rational], ray: &[Rational]) -> bool {
    let recession = lp.constraints.iter().all(|c| {
        let lhs: Rational = c.coeffs.iter().zip(ray).map(|(a, r)| a * r).sum();
        match c.relation {
            Relation::Le => !lhs.is_positive(),
            Relation::Ge => !lhs.is_negative(),
            Relation::Eq => lhs.is_zero(),
        }
    });
    let gain: Rational = lp.objective.iter().zip(ray).map(|(c, r)| c * r).sum();
    let improves = match lp.direction {
        Direction::Maximize => gain.is_positive(),
        Direction::Minimize => gain.is_negative(),
    };
    lp.is_feasible(point) && ray.iter().all(|r| !r.is_negative()) && recession && improves
}

// ---- simple cycles ----

/// Calls `visit` with the edge list of every simple cycle of the multigraph
/// given by `(source, target)` pairs.
pub fn simple_cycles(num_nodes: usize, edges: &[(usize, usize)], mut visit: impl FnMut(&[usize])) {
    fn dfs(
        start: usize,
        node: usize,
        edges: &[(usize, usize)],
        on_path: &mut Vec<bool>,
        path: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        for (e, &(s, t)) in edges.iter().enumerate() {
            if s != node || t < start {
                continue;
            }
            if t == start {
                path.push(e);
                visit(path);
                path.pop();
            } else if !on_path[t] {
                on_path[t] = true;
                path.push(e);
                dfs(start, t, edges, on_path, path, visit);
                path.pop();
                on_path[t] = false;
            }
        }
    }
    for start in 0..num_nodes {
        let mut on_path = vec![false; num_nodes];
        on_path[start] = true;
        dfs(start, start, edges, &mut on_path, &mut Vec::new(), &mut visit);
    }
}

/// Whether every simple cycle has zero total weight.
pub fn all_cycles_zero(num_nodes: usize, edges: &[(usize, usize)], weight: &[Rational]) -> bool {
    let mut ok = true;
    simple_cycles(num_nodes, edges, |cycle| {
        let sum: Rational = cycle.iter().map(|&e| weight[e].clone()).sum();
        ok &= sum.is_zero();
    });
    ok
}

/// Random strongly connected Markov chain with up to `max_states` states.
/// Counter 0 is built from a state potential with probability 1/2, and then
/// one update is perturbed with probability 1/2, so both answers of a
/// zero-boundedness test are common.
pub fn random_chain<R: Rng>(rng: &mut R, max_states: usize) -> VassMdp {
    let params = ModelParams {
        max_counters: 2,
        max_states,
        max_transitions: 2 * max_states,
        markov_chain: true,
        prob_fraction: 0.7,
        max_update: 1,
        ..ModelParams::default()
    };
    let base = random_model(rng, &params);
    let dim = base.dim().max(1);
    let phi: Vec<i64> = (0..base.num_states()).map(|_| rng.random_range(-2..=2)).collect();
    let structured = rng.random_bool(0.5);
    let perturb = rng.random_bool(0.5).then(|| rng.random_range(0..base.num_transitions()));
    let transitions = base
        .transitions()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut update = t.update.clone();
            update.resize(dim, 0);
            if structured {
                update[0] = phi[t.target] - phi[t.source];
            }
            if perturb == Some(i) {
                update[0] += 1;
            }
            Transition { update, ..t.clone() }
        })
        .collect();
    let states: Vec<State> = base.states().to_vec();
    let counters = (0..dim).map(|i| format!("c{i}")).collect();
    VassMdp::new(counters, states, transitions).expect("valid chain")
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
