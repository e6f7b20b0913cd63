//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! Criteria listed in `UNATTAINABLE` are evaluated exactly like the others and
//! reported as FAIL; the run only errors on a failure outside that list, or
//! when a listed criterion starts passing.

use std::fs;
use std::process::Command;
use std::time::Instant;

use demorgan_core::bdp::{classify_bdp, simulate_bdp, BdpFamily, BdpRates, ChainDecision, SimulationConfig};
use demorgan_core::catalog::{catalog, Family};
use demorgan_core::classifier::{auto_escalate, classify_necsuf, eq13_membership, Decision};
use demorgan_core::index_set::{index_set_stats, DensityClass, IndexSetConfig};
use demorgan_core::iterlog::{baseline_excess, denom, domain_threshold, escalate_excess, BertrandLevel, CLASSIFIER_MARGIN};
use demorgan_core::series::{extract_s, measure_ratio, measure_root, Mode};
use demorgan_core::synth::{from_ratio, from_root, paired_counterexample, IndexRange, SFunction, Truth};

/// from_root(K=1, s=2) tends to e^-1 rather than e^-1 n^-2.
const UNATTAINABLE: &[u32] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    let mut decided = 0;
    for fam in catalog() {
        let v = classify_necsuf(&fam.stream(1_000_000).unwrap()).unwrap();
        let truth = match fam.truth() {
            Truth::Converges => Decision::Converges,
            _ => Decision::Diverges,
        };
        let far = fam.boundary_distance() >= 0.25;
        let ok = v.decision == truth || (!far && v.decision == Decision::Inconclusive);
        decided += (v.decision == truth) as usize;
        if !ok {
            bad.push(format!("{fam}: {}", v.decision.name()));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs <= 60.0,
        format!("catalog soundness, {decided}/11 decided correctly, {secs:.1} s {bad:?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0f64;
    for k in 1..=3 {
        let start = domain_threshold(k, CLASSIFIER_MARGIN).unwrap();
        let range = IndexRange::new(start, 100_000).unwrap();
        let lvl = BertrandLevel::new(k).unwrap();
        for s in [-2.0, 0.0, 0.5, 1.0, 1.5, 3.0] {
            let f = SFunction::constant(s);
            let root = from_root(k, &f, range).unwrap();
            let ratio = from_ratio(k, &f, 1.0, range).unwrap();
            for n in range.iter() {
                let a = extract_s(lvl, n, measure_root(&root, n).unwrap()).unwrap();
                worst = worst.max((a - s).abs());
                if n < range.end {
                    let b = extract_s(lvl, n, measure_ratio(&ratio, n).unwrap()).unwrap();
                    worst = worst.max((b - s).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("plant/extract round trip, max |error| {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut worst = 0f64;
    let mut count = 0;
    for k in 1..=3u32 {
        let lvl = BertrandLevel::new(k).unwrap();
        let next = lvl.next().unwrap();
        let lo = (domain_threshold(k + 1, 0.0).unwrap() as f64).ln();
        for i in 0..20 {
            let n = (lo + (i as f64 / 19.0) * (27.0 - lo)).exp().round().max(1.0) as u64;
            for j in 0..17 {
                let eps = -0.9 + 0.18 * j as f64;
                let lhs = baseline_excess(lvl, n).unwrap() + (1.0 + eps) / denom(lvl, n).unwrap();
                let rhs = baseline_excess(next, n).unwrap()
                    + escalate_excess(lvl, n, eps).unwrap() / denom(next, n).unwrap();
                worst = worst.max(((1.0 + lhs) - (1.0 + rhs)).abs() / (1.0 + lhs));
                worst = worst.max((lhs - rhs).abs() / lhs.abs());
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-12 && count >= 1000, format!("escalation identity on {count} triples, max rel {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let ts = from_root(1, &SFunction::constant(2.0), IndexRange::new(100, 1_000_000).unwrap()).unwrap();
    let mut violations = 0u64;
    let mut worst = (0u64, 0f64);
    for n in 100..=1_000_000u64 {
        let nf = n as f64;
        let c = (ts.ln_a(n).unwrap() + 2.0 * nf.ln() + 1.0).exp();
        let dev = (c - 1.0).abs();
        if dev > 10.0 / nf {
            violations += 1;
        }
        if dev * nf > worst.1 {
            worst = (n, dev * nf);
        }
    }
    outcome(
        violations == 0,
        format!(
            "a_n n^2 e -> 1 on from_root(K=1, s=2): {violations} violations of |C_n - 1| <= 10/n, worst n|C_n - 1| = {:.3e} at n = {}",
            worst.1, worst.0
        ),
    )
}

fn criterion_5() -> Outcome {
    let a = Family::LogPower { p: 1.0 }.stream(1_000_000).unwrap();
    let b = Family::LogLogPower { p: 2.0 }.stream(1_000_000).unwrap();
    let (va, _) = auto_escalate(&a, Mode::Ratio).unwrap();
    let (vb, _) = auto_escalate(&b, Mode::Ratio).unwrap();
    let ok = (va.decision, va.level) == (Decision::Diverges, Some(2))
        && (vb.decision, vb.level) == (Decision::Converges, Some(2))
        && va.decision_margin == 0.05;
    outcome(
        ok,
        format!(
            "auto escalation: 1/(n ln n) {} at K={:?}, 1/(n ln n (ln ln n)^2) {} at K={:?}",
            va.decision.name(),
            va.level,
            vb.decision.name(),
            vb.level
        ),
    )
}

fn criterion_6() -> Outcome {
    let ts = paired_counterexample(1, 2.0, IndexRange::new(4, 1_000_000).unwrap()).unwrap();
    let v = classify_necsuf(&ts).unwrap();
    let lvl = BertrandLevel::with_margin(1, CLASSIFIER_MARGIN).unwrap();
    let (_, st) = eq13_membership(&ts, lvl, Mode::Ratio, 2.0, &IndexSetConfig::default()).unwrap();
    let ok = v.decision == Decision::Converges && (0.45..=0.55).contains(&st.density_est);
    outcome(
        ok,
        format!("paired counterexample: necsuf {}, ratio-form density {:.4}", v.decision.name(), st.density_est),
    )
}

fn criterion_7() -> Outcome {
    let all = index_set_stats(|_| true, 1_000_000);
    let f = |m: u64| (m as f64).ln().floor() as u64;
    let log = index_set_stats(|n| !(n >= 2 && f(n) > f(n - 1)), 1_000_000);
    let even = index_set_stats(|n| n % 2 == 0, 1_000_000);
    let even_ok = matches!(even.class, DensityClass::DensityBelowOne { alpha } if (0.45..=0.55).contains(&alpha));
    let ok = all.class == DensityClass::StronglyAlmostAll
        && all.defect_sup_tail == 0
        && log.class == DensityClass::AlmostAll
        && even_ok;
    outcome(
        ok,
        format!("index-set classes: {}, {}, {}", all.class.name(), log.class.name(), even.class.name()),
    )
}

fn criterion_8() -> Outcome {
    let tel = classify_bdp(&BdpRates::builtin(BdpFamily::Telescoping, 1_000_000).unwrap()).unwrap();
    let sym = classify_bdp(&BdpRates::builtin(BdpFamily::Symmetric, 1_000_000).unwrap()).unwrap();
    let cfg = SimulationConfig { trials: 100_000, step_cap: 1_000_000, seed: 2024, ..Default::default() };
    let mut sims = Vec::new();
    for (l, m) in [(2.0, 1.0), (1.0, 2.0), (3.0, 2.0)] {
        let rates = BdpRates::builtin(BdpFamily::Constant { lambda: l, mu: m }, 5000).unwrap();
        let est = simulate_bdp(&rates, &cfg).unwrap();
        let truth = f64::min(1.0, m / l);
        sims.push((truth, est.ci_low <= truth && truth <= est.ci_high, est.return_prob));
    }
    let ok = tel.decision == ChainDecision::Transient
        && sym.decision == ChainDecision::Recurrent
        && sims.iter().all(|s| s.1);
    let sims: Vec<String> = sims.iter().map(|s| format!("{:.4} vs {:.4}", s.2, s.0)).collect();
    outcome(
        ok,
        format!("birth-death: telescoping {}, symmetric {}, simulated {sims:?}", tel.decision.name(), sym.decision.name()),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_demorgan-gate"))
            .current_dir(dir.path())
            .args(args)
            .output()
            .unwrap();
        o.status.code()
    };
    let mut same = true;
    for (args, files) in [
        (
            vec!["classify", "--family", "one_over_n_logsq", "--horizon", "1e5", "--no-timestamp"],
            vec!["report.json", "report.traces.csv"],
        ),
        (
            vec![
                "bdp", "--family", "telescoping", "--horizon", "1e5", "--simulate", "20000", "100000", "--seed", "7",
                "--no-timestamp",
            ],
            vec!["bdp_report.json", "bdp_report.traces.csv"],
        ),
        (vec!["synth", "--paired", "--K", "1", "--C", "2", "--out", "p.jsonl"], vec!["p.jsonl", "p.meta.json"]),
    ] {
        let first = run(&args);
        let a: Vec<Vec<u8>> = files.iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        let second = run(&args);
        let b: Vec<Vec<u8>> = files.iter().map(|f| fs::read(dir.path().join(f)).unwrap()).collect();
        same &= first == second && first.is_some() && a == b;
    }
    outcome(same, "repeated CLI runs with a fixed seed give byte-identical outputs")
}

fn main() {
    let checks: [(u32, fn() -> Outcome); 9] = [
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
    let mut unexpected = Vec::new();
    for (id, check) in checks {
        let t0 = Instant::now();
        let o = check();
        let known = UNATTAINABLE.contains(&id);
        println!(
            "criterion {id}: {} ({:.1} s) {}{}",
            if o.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            o.detail,
            if known && !o.pass { " [known unattainable]" } else { "" }
        );
        if o.pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
