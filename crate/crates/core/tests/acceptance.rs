//! Acceptance criteria, one line each. Runs as a plain binary so the verdict
//! lines are always printed; the process fails if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use alarm_sim::agents::{
    mab_update, mqlfa_features, mqlfa_q, mqlfa_update, normalize_context, Agent, AgentKind,
    AgentParams, EpsilonSchedule, MabState, MqlfaState, NnbbAgent,
};
use alarm_sim::env::{success_indicator, Context, PatternMatrix};
use alarm_sim::harness::{median, resolve_jobs, run_experiment, run_series, RunConfig};
use alarm_sim::net::{clip_gradient, complexity_bounds, gradcheck, RmspropState, TinyNet, TrainBatch};
use alarm_sim::oracle::{exact_success_prob, mc_success_rate, StaticPolicyMatrix, DEFAULT_BUDGET};
use alarm_sim::seed::rng_from;
use num_complex::Complex64;
use rand::Rng;

const RHO_DB: [f64; 3] = [0.0, 10.0, 20.0];

/// Name, check and wall-clock budget.
type Criterion = (&'static str, fn() -> Verdict, Duration);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn equation_unit_suite() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    // Devices 1, 2, 4 on channel 2, device 5 on both, device 3 silent.
    let a = PatternMatrix::new(2, vec![0b10, 0b10, 0b00, 0b10, 0b11]).unwrap();
    check("worked example xi", success_indicator(&a));

    let g = vec![6.0, 8.0];
    check("clip halves norm 10", clip_gradient(&g, 5.0) == vec![3.0, 4.0]);
    let g = vec![1.8, 2.4];
    check("clip keeps norm 3", clip_gradient(&g, 5.0) == g);
    check("clip zero", clip_gradient(&[0.0, 0.0], 5.0) == vec![0.0, 0.0]);

    let mut q = MabState::new(4, 1.0);
    mab_update(&mut q, 1, 1.0).unwrap();
    check("mab full overwrite", q.q_values == vec![0.0, 1.0, 0.0, 0.0]);
    let mut q = MabState { q_values: vec![0.5; 4], tau: 0.5 };
    mab_update(&mut q, 2, 0.0).unwrap();
    check("mab half step", q.q_values == vec![0.5, 0.5, 0.25, 0.5]);
    let mut q = MabState { q_values: vec![0.3; 4], tau: 0.0 };
    mab_update(&mut q, 0, 1.0).unwrap();
    check("mab zero rate", q.q_values == vec![0.3; 4]);

    let s = [Complex64::new(1.0, 1.0), Complex64::new(0.0, 0.0)];
    let n = normalize_context(&s);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    check(
        "normalization",
        close(n[0].re, h, 1e-15) && close(n[0].im, h, 1e-15) && n[1] == Complex64::new(0.0, 0.0),
    );
    let ctx = Context { values: s.to_vec(), owner: 0 };
    let phi = mqlfa_features(&ctx, 0b10, 2).unwrap();
    check(
        "mqlfa features",
        close(phi[0], 1.0, 1e-15) && phi[1] == 0.0 && phi[2..] == [0.0, 1.0],
    );

    let mut th = MqlfaState::new(2, 1.0);
    check("mqlfa zero init", mqlfa_q(&th, &ctx, 3).unwrap() == 0.0);
    mqlfa_update(&mut th, &ctx, 0b10, 1.0).unwrap();
    check("mqlfa first step copies features", th.theta == phi);
    let before = th.theta.clone();
    let q2 = mqlfa_q(&th, &ctx, 0b10).unwrap();
    mqlfa_update(&mut th, &ctx, 0b10, q2).unwrap();
    check("mqlfa zero error", th.theta == before);
    th.tau = 0.0;
    mqlfa_update(&mut th, &ctx, 0b01, 1.0).unwrap();
    check("mqlfa zero rate", th.theta == before);

    // One-sample masked loss and the hand-evaluated RMSProp step.
    let net = TinyNet::from_params(&[1, 1], vec![0.0, 0.0]).unwrap();
    let mut batch = TrainBatch::default();
    batch.push(vec![1.0], 0, 1.0);
    check("masked loss", net.masked_loss(&batch).unwrap() == 1.0);
    let mut net = TinyNet::from_params(&[1, 1], vec![0.0, 0.0]).unwrap();
    let mut opt = RmspropState::new(2, 0.9, 1e-8, 0.1);
    opt.step(&mut net, &[1.0, 0.0]).unwrap();
    check("rmsprop step", close(net.params()[0], -0.1 / (0.1f64.sqrt() + 1e-8), 1e-15));

    if failures.is_empty() {
        verdict(true, "all tagged examples hold")
    } else {
        verdict(false, format!("failed: {}", failures.join(", ")))
    }
}

fn random_policy(rng: &mut impl Rng) -> StaticPolicyMatrix {
    let n = rng.random_range(1..=4usize);
    let m = rng.random_range(1..=2usize);
    let probs = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..1 << m).map(|_| rng.random::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        })
        .collect();
    let activation = (0..n).map(|_| rng.random::<f64>()).collect();
    StaticPolicyMatrix::new(m, probs, activation).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let mut rng = rng_from(2024);
    let trials = 100_000;
    let mut agree = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let policy = random_policy(&mut rng);
        let exact = exact_success_prob(&policy, DEFAULT_BUDGET).unwrap();
        let mc = mc_success_rate(&policy, trials, &mut rng).unwrap();
        if mc.agrees_with(exact, 3.0) {
            agree += 1;
        }
        if mc.std_error > 0.0 {
            worst = worst.max((mc.mean - exact).abs() / mc.std_error);
        }
    }
    let mut anchors_ok = true;
    for (m, expected) in [(1, 0.5), (2, 0.75)] {
        let policy = StaticPolicyMatrix::uniform(m, vec![1.0, 1.0]).unwrap();
        let exact = exact_success_prob(&policy, DEFAULT_BUDGET).unwrap();
        let mc = mc_success_rate(&policy, trials, &mut rng).unwrap();
        anchors_ok &= close(exact, expected, 1e-12) && mc.agrees_with(expected, 3.0);
    }
    verdict(
        agree >= 19 && anchors_ok,
        format!("{agree}/20 within 3 SE (worst {worst:.2} SE); anchors 0.5 and 0.75 {}", if anchors_ok { "exact" } else { "WRONG" }),
    )
}

fn gradient_fidelity() -> Verdict {
    let report = gradcheck::run(100, 7, gradcheck::backprop_gradient).unwrap();
    verdict(
        report.passed(),
        format!(
            "max relative error {:.2e} over {} instances (worst layer {})",
            report.max_rel_error, report.trials, report.worst_layer
        ),
    )
}

fn complexity_formula() -> Verdict {
    let mut bad = Vec::new();
    for m in 1..=10u32 {
        let p = 1u128 << m;
        let c = complexity_bounds(m, 30 * p);
        let closed = 90 * p * p + (123 + 60 * m as u128) * p + 2 * m as u128 + 7;
        if c.lower != closed || c.upper - c.lower != p - 1 {
            bad.push(m);
        }
    }
    verdict(bad.is_empty(), format!("M = 1..10, mismatches at {bad:?}"))
}

fn schedule_exactness() -> Verdict {
    let mut sched = EpsilonSchedule::new(1.0, 0.005, 0.1);
    let mut ok = true;
    let mut floor_at = None;
    for k in 0..2000u32 {
        let expected = f64::max(0.1, 1.0 - 0.005 * f64::from(k));
        ok &= sched.value == expected;
        if floor_at.is_none() && sched.value == 0.1 {
            floor_at = Some(k);
        }
        sched.advance();
    }
    // The agents carry the same schedule through act/learn.
    let params = AgentParams::new(2);
    let mut agent = NnbbAgent::new(&params, rng_from(1)).unwrap();
    let mut rng = rng_from(2);
    for k in 0..400u32 {
        ok &= agent.epsilon() == f64::max(0.1, 1.0 - 0.005 * f64::from(k));
        let ctx = Context {
            values: (0..2).map(|_| Complex64::new(rng.random(), rng.random())).collect(),
            owner: 0,
        };
        let a = agent.act(&ctx).unwrap();
        agent.learn(&ctx, a, 0.0).unwrap();
    }
    verdict(ok && floor_at == Some(180), format!("exact for k < 2000; floor reached at k = {floor_at:?}"))
}

/// Median over the first and last tenth of the events, absent entries skipped.
fn decile_medians(mse: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let k = mse.len() / 10;
    let first: Vec<f64> = mse[..k].iter().flatten().copied().collect();
    let last: Vec<f64> = mse[mse.len() - k..].iter().flatten().copied().collect();
    (median(&first), median(&last))
}

fn mse_convergence() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for rho in RHO_DB {
        let mut decreasing = 0;
        for seed in 1..=5u64 {
            let cfg = RunConfig {
                n_devices: 20,
                m_channels: 4,
                agent: AgentKind::Nnbb,
                n_events: 5000,
                n_runs: 1,
                rho_db: rho,
                seed,
                ..RunConfig::default()
            };
            let series = run_series(&cfg, 0).unwrap();
            if let (Some(first), Some(last)) = decile_medians(&series.mse_sys) {
                if last < first {
                    decreasing += 1;
                }
            }
        }
        pass &= decreasing == 5;
        parts.push(format!("{rho} dB: {decreasing}/5"));
    }
    verdict(pass, format!("last-decile median below first in {}", parts.join(", ")))
}

fn mean_rate(cfg: &RunConfig) -> f64 {
    let result = run_experiment(cfg, resolve_jobs(None)).unwrap();
    // Unconverged runs count at their final-window rate so none are dropped.
    let rates: Vec<f64> = result
        .runs
        .iter()
        .map(|r| {
            r.post_convergence_rate.unwrap_or_else(|| {
                let tail = &r.success[r.success.len() - cfg.eval_window..];
                tail.iter().filter(|&&s| s).count() as f64 / tail.len() as f64
            })
        })
        .collect();
    rates.iter().sum::<f64>() / rates.len() as f64
}

fn trend_reproduction() -> Verdict {
    let base = |agent, n_devices, rho_db| RunConfig {
        n_devices,
        m_channels: 3,
        lambda: 3.0,
        agent,
        n_events: 8000,
        n_runs: 10,
        rho_db,
        ..RunConfig::default()
    };
    // Context-free agents are unaffected by the SNR.
    let mab = mean_rate(&base(AgentKind::Mab, 20, 10.0));
    let rs20 = mean_rate(&base(AgentKind::Rs, 20, 10.0));
    let rs40 = mean_rate(&base(AgentKind::Rs, 40, 10.0));
    let mut pass = true;
    let mut parts = vec![format!("MAB {mab:.3}, RS {rs20:.3} -> {rs40:.3}")];
    for rho in RHO_DB {
        let nn20 = mean_rate(&base(AgentKind::Nnbb, 20, rho));
        let nn40 = mean_rate(&base(AgentKind::Nnbb, 40, rho));
        let over_rs = nn20 >= rs20 + 0.05;
        let vs_mab = nn20 >= mab - 0.02;
        let slower = nn20 - nn40 <= rs20 - rs40;
        pass &= over_rs && vs_mab && slower;
        parts.push(format!(
            "{rho} dB: NNBB {nn20:.3} -> {nn40:.3} [>=RS+0.05 {}, >=MAB-0.02 {}, smaller drop {}]",
            yes(over_rs),
            yes(vs_mab),
            yes(slower)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn yes(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "NO"
    }
}

fn run_cli(out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_alarm-sim"))
        .args(["run", "--agent", "nnbb", "--events", "3000", "--runs", "3", "--seed", "11", "--jobs", "2"])
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("events.csv")).unwrap()
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let a = run_cli(&dir.path().join("a"));
    let b = run_cli(&dir.path().join("b"));
    verdict(a == b && !a.is_empty(), format!("events.csv {} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("equation unit suite", equation_unit_suite, Duration::from_secs(1)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
        ("gradient fidelity", gradient_fidelity, Duration::from_secs(30)),
        ("complexity formula", complexity_formula, Duration::from_secs(1)),
        ("schedule exactness", schedule_exactness, Duration::from_secs(1)),
        ("mse convergence", mse_convergence, Duration::from_secs(1800)),
        ("trend reproduction", trend_reproduction, Duration::from_secs(3600)),
        ("determinism", determinism, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        let over = if elapsed > budget { format!(" over budget {budget:?}") } else { String::new() };
        println!(
            "{} {name} ({:.2} s{over}): {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}

