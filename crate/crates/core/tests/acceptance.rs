//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

mod common;

use std::io::Write as _;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vassbound::classifier::{Options, Verdict};
use vassbound::components::{
    classify_counter_behavior, conical_decomposition, enumerate_components, expected_return_effect, hat_component,
    mc_add, mc_scale, Behavior, MultiComponent,
};
use vassbound::constraints::{check_dichotomy, maximal_solution_i, maximal_solution_ii};
use vassbound::generate::{random_model, ModelParams};
use vassbound::graph::is_strongly_connected;
use vassbound::ratlp::{solve, LpStatus};
use vassbound::report::{analyze, markov_chain_report};
use vassbound::simulator::{estimate_fp_many, parse_phased, run_trajectory, sample_return_effects, SimConfig, Strategy};
use vassbound::{Observable, Rational};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e <= limit, format!("{:.2}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m = fixture("rw1.vass");
    let mdp = analyze(&m, Options::default()).expect("rw1 is strongly connected");
    let mc = markov_chain_report(&m).expect("rw1 is a chain");
    let (fast, time) = within(start, Duration::from_secs(1));
    let ok = mdp.length.verdict == Verdict::TightPoly(2)
        && mdp.counters[0].verdict == Verdict::TightPoly(1)
        && mc.length.verdict == Verdict::ThetaN2
        && mc.counters[0].verdict == Verdict::ThetaN
        && mdp.length.display == mc.length.display
        && mdp.counters[0].display == mc.counters[0].display;
    outcome(
        ok && fast,
        format!(
            "analyze L {} C {}; mc-classify L {} C {}; {time}",
            mdp.length.display, mdp.counters[0].display, mc.length.display, mc.counters[0].display
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let m = fixture("rw1.vass");
    let cfg = SimConfig {
        start: 0,
        trials: 500,
        max_steps: 5_000_000,
        seed: 2,
    };
    let n_list = [32, 64, 128, 256, 512, 1024];
    let obs = [Observable::Length, Observable::Counter(0)];
    let est = estimate_fp_many(&m, &Strategy::UniformRandom, &obs, 0.9, &n_list, &cfg).expect("simulation runs");
    let (fast, time) = within(start, Duration::from_secs(300));
    let fitted = |i: usize| {
        let finite: Vec<String> =
            est[i].points.iter().filter(|p| p.value.is_some()).map(|p| p.n.to_string()).collect();
        format!("{:.3} over n={}", est[i].slope.unwrap_or(f64::NAN), finite.join(","))
    };
    let in_range = |i: usize, lo: f64, hi: f64| est[i].slope.is_some_and(|s| (lo..=hi).contains(&s));
    let censored: Vec<String> = est[0]
        .points
        .iter()
        .filter(|p| p.value.is_none())
        .map(|p| format!("n={} ({}/{})", p.n, p.censored, p.trials))
        .collect();
    outcome(
        in_range(0, 1.7, 2.3) && in_range(1, 0.8, 1.2) && fast,
        format!(
            "L slope {} in [1.7,2.3]; C slope {} in [0.8,1.2]; quantile censored at {}; {time}",
            fitted(0),
            fitted(1),
            if censored.is_empty() { "none".to_string() } else { censored.join(" ") }
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let m = fixture("expo1.vass");
    let r = analyze(&m, Options::default()).expect("expo1 is strongly connected");
    let all_exp = r
        .counters
        .iter()
        .chain(&r.transitions)
        .all(|i| i.verdict == Verdict::ExponentialLower);
    let items = r.counters.len() + r.transitions.len();
    let dir = fixture_dir();
    let text = std::fs::read_to_string(dir.join("expo1_phased.txt")).expect("schedule exists");
    let strat = parse_phased(&m, &text, |f| std::fs::read_to_string(dir.join(f)).map_err(|e| e.to_string()))
        .expect("schedule parses");
    let Strategy::Phased(phases) = &strat else { unreachable!() };
    let budget: u64 = phases.iter().map(|p| p.1).sum();
    let traj = run_trajectory(&m, &strat, 0, 12, budget, 0).expect("valid run");
    let max = traj.max_counter.iter().copied().max().unwrap_or(0);
    let (fast, time) = within(start, Duration::from_secs(60));
    outcome(
        all_exp && items == 6 && max > 1024 && fast,
        format!("{items} items ExponentialLower: {all_exp}; counter max {max} at n=12 within {budget} steps; {time}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = ModelParams::default();
    let mut holds = 0;
    for _ in 0..200 {
        let m = random_model(&mut rng, &params);
        assert!(is_strongly_connected(&m));
        if check_dichotomy(&m, &maximal_solution_i(&m), &maximal_solution_ii(&m)) {
            holds += 1;
        }
    }
    let (fast, time) = within(start, Duration::from_secs(120));
    outcome(holds == 200 && fast, format!("dichotomy holds on {holds}/200 models; {time}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = ModelParams {
        prob_fraction: 0.5,
        ..ModelParams::default()
    };
    let (mut done, mut exact, mut nonzero) = (0, 0, 0);
    while done < 100 {
        let m = random_model(&mut rng, &params);
        let comps = enumerate_components(&m, 10_000).expect("small model");
        if comps.is_empty() {
            continue;
        }
        let mut x = MultiComponent::zero(&m);
        for y in &comps {
            let a = Rational::from_integer(rng.random_range(0..=5).into());
            x = mc_add(&x, &mc_scale(&a, &y.flow));
        }
        done += 1;
        nonzero += usize::from(!x.is_zero());
        let Ok(parts) = conical_decomposition(&m, &x, 10_000) else { continue };
        let sum = parts
            .iter()
            .fold(MultiComponent::zero(&m), |acc, (a, y)| mc_add(&acc, &mc_scale(a, &y.flow)));
        if sum == x && parts.iter().all(|(a, _)| a > &Rational::zero()) {
            exact += 1;
        }
    }
    outcome(exact == 100, format!("{exact}/100 sums reconstructed exactly ({nonzero} nonzero)"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut agree, mut bounded, mut total) = (0, 0, 0);
    for _ in 0..100 {
        let m = random_chain(&mut rng, 6);
        let comps = enumerate_components(&m, 1).expect("chain has one selection");
        assert_eq!(comps.len(), 1, "a strongly connected chain has a unique component");
        let y = &comps[0];
        let edges: Vec<(usize, usize)> = y
            .mec
            .transitions
            .iter()
            .map(|&t| (m.transition(t).source, m.transition(t).target))
            .collect();
        let (hat, _) = hat_component(&m, y);
        let hat_edges: Vec<(usize, usize)> = hat.edges.iter().map(|e| (e.source, e.target)).collect();
        let mut ok = true;
        for c in 0..m.dim() {
            let w: Vec<Rational> = y
                .mec
                .transitions
                .iter()
                .map(|&t| Rational::from_integer(m.transition(t).update[c].into()))
                .collect();
            let brute = all_cycles_zero(m.num_states(), &edges, &w);
            let potential = classify_counter_behavior(&m, y, c).verdict == Behavior::ZeroBounded;
            let hw: Vec<Rational> = hat.edges.iter().map(|e| e.update[c].clone()).collect();
            let hat_brute = all_cycles_zero(m.num_states(), &hat_edges, &hw);
            ok &= brute == potential && hat_brute == hat.zero_bounded_on(c);
            bounded += usize::from(brute);
            total += 1;
        }
        agree += usize::from(ok);
    }
    outcome(
        agree == 100,
        format!("{agree}/100 MECs agree ({bounded} of {total} counters zero-bounded)"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut agree, mut kinds) = (0, [0usize; 3]);
    for _ in 0..200 {
        let lp = random_lp(&mut rng, 4, 6);
        let brute = vertex_optimum(&lp);
        let ok = match solve(&lp) {
            LpStatus::Optimal { solution, value } => {
                kinds[0] += 1;
                lp.is_feasible(&solution) && lp.objective_value(&solution) == value && brute == Some(value)
            }
            LpStatus::Infeasible => {
                kinds[1] += 1;
                brute.is_none()
            }
            LpStatus::Unbounded { point, ray } => {
                kinds[2] += 1;
                is_unbounded_certificate(&lp, &point, &ray)
            }
        };
        agree += usize::from(ok);
    }
    outcome(
        agree == 200,
        format!(
            "{agree}/200 LPs agree ({} optimal, {} infeasible, {} unbounded)",
            kinds[0], kinds[1], kinds[2]
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut max_k = 0;
    let mut within_bound = true;
    let mut files = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(fixture_dir())
        .expect("fixtures exist")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "vass"))
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let m = fixture(&name);
        if !is_strongly_connected(&m) {
            continue;
        }
        let r = analyze(&m, Options::default()).expect("strongly connected");
        let bound = m.dim() as f64 + (m.num_transitions() as f64) * 3f64.log2();
        for (_, item) in r.items() {
            if let Verdict::TightPoly(k) = item.verdict {
                max_k = max_k.max(k);
                within_bound &= (k as f64).log2() <= bound;
            }
        }
        files.push(name);
    }
    outcome(
        within_bound && max_k <= 4,
        format!("max tight degree {max_k} over {}", files.join(",")),
    )
}

fn criterion_9() -> Outcome {
    let m = fixture("rw1.vass");
    let y = &enumerate_components(&m, 10).expect("rw1 components")[0];
    let delta = expected_return_effect(&m, y);
    let effects = sample_return_effects(&m, y, 10_000, 9);
    let xs: Vec<f64> = effects.iter().map(|e| e[0] as f64).collect();
    let (mean, se) = mean_and_stderr(&xs);
    let target: f64 = delta[0].to_string().parse().unwrap_or(f64::NAN);
    outcome(
        (mean - target).abs() <= 3.0 * se,
        format!("mean {mean:.4} vs Δ(y) = {}, stderr {se:.4}", delta[0]),
    )
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, run) in criteria {
        let o = run();
        // Written to the raw handle so the lines survive output capture.
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{} criterion {i}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(i);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
