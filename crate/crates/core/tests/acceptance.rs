//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use reso_core::controller::{ControllerConfig, NOMINAL_B0_HAT};
use reso_core::flatness::analyze;
use reso_core::metrics::MetricsReport;
use reso_core::observer::inject_truth;
use reso_core::plant::{build_state_space, PlantParams};
use reso_core::presets::{preset, preset_with, HARMONIC, MISMATCH_GRID};
use reso_core::reference::ReferenceSpec;
use reso_core::simulator::{run, Scenario};
use reso_core::stability::{decompose, DECOMPOSITION_TOL, SIMILARITY_TOL};
use reso_core::sweep::{run_and_measure, sweep};
use reso_core::tuning::{verify_poles, GainSet, TableForm};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn grid() -> Vec<GainSet> {
    let mut out = Vec::new();
    for wo in [1.0, 10.0, 140.0] {
        for wc in [0.35, 1.0] {
            for wr in [0.0, 6.0 * PI] {
                out.push(GainSet::from_bandwidths_unchecked(wc, wo, wr, TableForm::Corrected));
            }
        }
    }
    out
}

fn pole_placement() -> Outcome {
    let mut coeff: f64 = 0.0;
    let mut eig: f64 = 0.0;
    let mut ok = true;
    for g in grid() {
        match verify_poles(&g) {
            Ok(r) => {
                coeff = coeff.max(r.max_coefficient_deviation);
                eig = eig.max(r.max_eigenvalue_deviation);
                ok &= r.passed();
            }
            Err(e) => return outcome(false, format!("{e}")),
        }
    }
    outcome(ok, format!("12 tunings, max coefficient dev {coeff:.2e}, max |lambda(H_q) + 1| {eig:.2e}"))
}

fn perturbation_identities() -> Outcome {
    let mut sim: f64 = 0.0;
    let mut dec: f64 = 0.0;
    for g in grid() {
        match decompose(&g) {
            Ok(d) => {
                sim = sim.max(d.similarity_deviation);
                dec = dec.max(d.decomposition_deviation);
            }
            Err(e) => return outcome(false, format!("wo = {}, wc = {}: {e}", g.omega_o, g.omega_c)),
        }
    }
    outcome(
        sim <= SIMILARITY_TOL && dec <= DECOMPOSITION_TOL,
        format!("similarity dev {sim:.2e} (tol 1e-10), decomposition dev {dec:.2e} (tol 1e-12)"),
    )
}

fn flatness() -> Outcome {
    let p = PlantParams::default();
    let f = match build_state_space(&p).and_then(|ss| analyze(&ss, &p)) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("{e}")),
    };
    let closed = (f.b0 - f.b0_closed_form).abs() / f.b0_closed_form;
    let nominal = (f.b0 - NOMINAL_B0_HAT).abs() / NOMINAL_B0_HAT;
    outcome(
        f.rank == 4 && closed <= 1e-9 && nominal <= 1e-3,
        format!("rank {}, b0 = {:.6e}, closed-form dev {closed:.1e}, dev from 4.3015e12 {nominal:.1e}", f.rank, f.b0),
    )
}

fn perfect_estimation() -> Outcome {
    let sc = Scenario {
        name: "oracle".into(),
        controller: ControllerConfig::oracle(1.0, NOMINAL_B0_HAT),
        reference: ReferenceSpec::settled(1.0),
        horizon: 10.0,
        record_every: 100,
        ..preset("e1").expect("preset")
    };
    let tr = match run(&sc) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("{e}")),
    };
    let mut dev: f64 = 0.0;
    let mut clamped = false;
    for s in &tr.samples {
        let t = s.t;
        let want = (-t).exp() * (1.0 + t + t * t / 2.0 + t * t * t / 6.0);
        dev = dev.max((s.e - want).abs());
        clamped |= s.u_raw != s.u_sat;
    }
    outcome(
        dev <= 1e-6 && !clamped && tr.samples[0].e == 1.0,
        format!("max |e - e^-t (1 + t + t^2/2 + t^3/6)| = {dev:.2e} over {} samples", tr.samples.len()),
    )
}

fn measure(name: &str, label: &str) -> Result<MetricsReport, String> {
    let sc = preset_with(name, label).map_err(|e| e.to_string())?;
    run_and_measure(&sc).map(|(_, m)| m).map_err(|e| format!("{label}: {e}"))
}

fn step_rejection() -> Outcome {
    let (pi, gpio, reso) = match (measure("e2a", "pi"), measure("e2a", "adrc-gpio"), measure("e2a", "adrc-reso")) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => return outcome(false, format!("{:?} {:?} {:?}", a.err(), b.err(), c.err())),
    };
    let (Some(rp), Some(rg), Some(rr)) = (pi.recovery_time, gpio.recovery_time, reso.recovery_time) else {
        return outcome(false, "a run did not recover".into());
    };
    let level = reso.reference_level.abs();
    let ss_ok = gpio.steady_state_error < 0.005 * level && reso.steady_state_error < 0.005 * level;
    let similar = (rr - rg).abs() <= 0.1 * rr.max(rg) + 1e-4;
    let faster = 2.0 * rr < rp && 2.0 * rg < rp;
    outcome(
        ss_ok && similar && faster,
        format!(
            "recovery PI {rp:.4} s, GPIO {rg:.4} s, RESO {rr:.4} s; ss |e| GPIO {:.1e}, RESO {:.1e} (limit {:.2})",
            gpio.steady_state_error,
            reso.steady_state_error,
            0.005 * level
        ),
    )
}

fn harmonic_rejection() -> Outcome {
    let (pi, gpio, reso) = match (measure("e2b", "pi"), measure("e2b", "adrc-gpio"), measure("e2b", "adrc-reso")) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => return outcome(false, format!("{:?} {:?} {:?}", a.err(), b.err(), c.err())),
    };
    let (p, g, r) = (pi.residual_amplitude, gpio.residual_amplitude, reso.residual_amplitude);
    let level = reso.reference_level.abs();
    outcome(
        r < 0.05 * g && g < p && r < 0.005 * level,
        format!("residual amplitude PI {p:.3e}, GPIO {g:.3e}, RESO {r:.3e}"),
    )
}

fn mismatch_robustness() -> Outcome {
    let sc = preset("e3").expect("preset");
    let spec = sc.sweep.clone().expect("e3 has a sweep");
    let rows = match sweep(&sc, &spec.key, &spec.values) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("{e}")),
    };
    let mut by_mismatch = Vec::new();
    for (m, (_, r)) in MISMATCH_GRID.iter().zip(rows) {
        match r {
            Ok(rep) => by_mismatch.push((m.abs(), rep.residual_amplitude)),
            Err(e) => return outcome(false, format!("mismatch {m}: {e}")),
        }
    }
    by_mismatch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let levels: Vec<f64> = {
        let mut v: Vec<f64> = by_mismatch.iter().map(|x| x.0).collect();
        v.dedup();
        v
    };
    let at = |lv: f64| by_mismatch.iter().filter(move |x| x.0 == lv).map(|x| x.1);
    let mut monotone = true;
    for w in levels.windows(2) {
        let hi_prev = at(w[0]).fold(f64::NEG_INFINITY, f64::max);
        let lo_next = at(w[1]).fold(f64::INFINITY, f64::min);
        monotone &= hi_prev <= lo_next;
    }
    let matched = at(0.0).fold(0.0, f64::max);
    let worst = at(0.25).fold(f64::INFINITY, f64::min);
    let summary: Vec<String> =
        levels.iter().map(|&lv| format!("{:.0}%: {:.2e}", 100.0 * lv, at(lv).fold(0.0, f64::max))).collect();
    outcome(monotone && worst >= 10.0 * matched, format!("max residual by |mismatch| [{}]", summary.join(", ")))
}

fn energy_parity() -> Outcome {
    let mut e = Vec::new();
    for label in ["pi", "adrc-gpio", "adrc-reso"] {
        match measure("e1", label) {
            Ok(m) => e.push(m.control_energy),
            Err(err) => return outcome(false, err),
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            worst = worst.max((e[i] - e[j]).abs() / e[i].min(e[j]));
        }
    }
    outcome(
        worst <= 0.10,
        format!(
            "energy PI {:.4}, GPIO {:.4}, RESO {:.4}; worst pairwise spread {:.2}%",
            e[0],
            e[1],
            e[2],
            100.0 * worst
        ),
    )
}

fn observer_convergence() -> Outcome {
    let (wc, wo) = (5.0, 200.0);
    let run = |wr: f64| {
        GainSet::from_bandwidths(wc, wo, wr).and_then(|g| inject_truth(&g, 1.0, 1.35, HARMONIC, 3.0, 1e-4, 1.0))
    };
    match (run(HARMONIC), run(0.0)) {
        (Ok(r), Ok(g)) => outcome(
            r.relative_error < 1e-6 && g.relative_error > 1e-4,
            format!("RESO relative error {:.2e}, GPIO relative error {:.2e}", r.relative_error, g.relative_error),
        ),
        (a, b) => outcome(false, format!("{:?} {:?}", a.err(), b.err())),
    }
}

fn integrator_order() -> Outcome {
    let mut finals = Vec::new();
    for h in [4e-5, 2e-5, 1e-5, 5e-6] {
        let mut sc = preset("e1").expect("preset");
        sc.step_size = h;
        sc.record_every = (1e-3 / h).round() as usize;
        match run(&sc) {
            Ok(tr) => finals.push(tr.samples.last().expect("non-empty").x),
            Err(e) => return outcome(false, format!("h = {h}: {e}")),
        }
    }
    let diff = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let d: Vec<f64> = finals.windows(2).map(|w| diff(&w[0], &w[1])).collect();
    let ratios: Vec<f64> = d.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        ratios.iter().all(|&r| r >= 12.0),
        format!(
            "terminal-state differences {:?}, ratios {:?}",
            d.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(),
            ratios.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>()
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1 pole placement", Duration::from_secs(1), pole_placement),
        ("C2 singular-perturbation identities", Duration::from_secs(1), perturbation_identities),
        ("C3 flatness", Duration::from_secs(1), flatness),
        ("C4 perfect-estimation closed loop", Duration::from_secs(5), perfect_estimation),
        ("C5 step-load rejection", Duration::from_secs(90), step_rejection),
        ("C6 harmonic rejection", Duration::from_secs(90), harmonic_rejection),
        ("C7 mismatch robustness", Duration::from_secs(120), mismatch_robustness),
        ("C8 energy parity", Duration::from_secs(90), energy_parity),
        ("C9 observer convergence", Duration::from_secs(10), observer_convergence),
        ("C10 integrator order", Duration::from_secs(60), integrator_order),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let ok = o.ok && took <= limit;
        if !ok {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.2} s, limit {} s]",
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
