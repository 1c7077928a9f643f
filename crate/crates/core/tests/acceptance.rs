//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use critsearch::bms::{simulate, temp_step, ControlLimits, SimOptions, SimParams};
use critsearch::criticality::{kappa_temp, kappa_time, CriticalitySpec, FnObjective, Objective};
use critsearch::harness::{calibration_report, grid_oracle, ExperimentConfig};
use critsearch::partition::PartitionTree;
use critsearch::search::{
    critical_count, doo_run, hoo_run, mc_run, poo_instance_count, poo_run, soo_run, DooParams, EvalRecord, Hoo,
    HooParams, PooParams, SooParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

const BUDGET: usize = 4000;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Results shared between criteria.
#[derive(Default)]
struct Shared {
    grid_fraction: Option<f64>,
    mc_mean: Option<f64>,
    best_hoo: Option<usize>,
    worst_doo: Option<usize>,
}

fn c1_formulas() -> Outcome {
    let s = CriticalitySpec::default();
    let cases = [
        ("kappa_time(7.2 h)", kappa_time(7.2, &s), 0.8),
        ("kappa_time(9 h)", kappa_time(9.0, &s), 1.0),
        ("kappa_temp(63.75 C)", kappa_temp(63.75, &s), 1.0),
        ("kappa_temp(-5 C)", kappa_temp(-5.0, &s), 0.0),
        ("kappa_temp(50 C)", kappa_temp(50.0, &s), 0.8),
    ];
    for (name, got, want) in cases {
        ensure((got - want).abs() <= 1e-12, || format!("{name} = {got}, want {want}"))?;
    }
    Ok("5 reference values within 1e-12".into())
}

fn c2_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut probes_total = 0u64;
    for seq in 0..1000 {
        let mut t = PartitionTree::new(2);
        let len = rng.random_range(0..=200);
        let mut diam = t.max_leaf_diameter();
        let mut leaves = vec![PartitionTree::ROOT];
        for _ in 0..len {
            let pos = rng.random_range(0..leaves.len());
            let leaf = leaves.swap_remove(pos);
            let parent = t.node(leaf).id;
            let [a, b] = t.split(leaf).map_err(|e| e.to_string())?;
            let (ia, ib) = (t.node(a).id, t.node(b).id);
            ensure(
                ia.depth == parent.depth + 1
                    && ia.index == 2 * parent.index - 1
                    && ib.index == 2 * parent.index
                    && ia.parent() == Some(parent)
                    && ib.parent() == Some(parent),
                || format!("sequence {seq}: bad child ids {ia} {ib} of {parent}"),
            )?;
            leaves.extend([a, b]);
            let d = t.max_leaf_diameter();
            ensure(d <= diam, || format!("sequence {seq}: diameter grew {diam} -> {d}"))?;
            diam = d;
        }
        let area: f64 = t.leaves().map(|k| t.node(k).cell.side(0) * t.node(k).cell.side(1)).sum();
        ensure(area == 1.0, || format!("sequence {seq}: leaf areas sum to {area}"))?;
        for _ in 0..10_000 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            // Every internal node passes the point to exactly one child, so
            // exactly one leaf contains it.
            let mut idx = PartitionTree::ROOT;
            while let Some([a, b]) = t.node(idx).children {
                let (ina, inb) = (t.node(a).cell.contains(&x), t.node(b).cell.contains(&x));
                ensure(ina != inb, || format!("sequence {seq}: {x:?} in {} children", u8::from(ina) + u8::from(inb)))?;
                idx = if ina { a } else { b };
            }
            ensure(t.node(idx).cell.contains(&x) && t.locate(&x) == Some(idx), || {
                format!("sequence {seq}: locate disagrees for {x:?}")
            })?;
            probes_total += 1;
        }
    }
    Ok(format!("1000 sequences, 10^4 probes each ({probes_total} total) in exactly one leaf"))
}

fn c3_simulator() -> Outcome {
    let p = SimParams::default();
    let lim = ControlLimits::default();
    let opts = SimOptions { trace_stride: Some(1) };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let (t_amb, i_max) = (rng.random_range(-5.0..40.0), rng.random_range(10.0..100.0));
        let a = simulate(t_amb, i_max, &p, &lim, opts, |_| 0.0).map_err(|e| e.to_string())?;
        let b = simulate(t_amb, i_max, &p, &lim, opts, |_| 0.0).map_err(|e| e.to_string())?;
        let ta = a.trace.as_ref().expect("trace requested");
        let tb = b.trace.as_ref().expect("trace requested");
        let bits = |s: &critsearch::bms::SimState| [s.t, s.soc, s.t_bat, s.u_bat, s.i_charge].map(f64::to_bits);
        ensure(ta.len() == tb.len() && ta.iter().zip(tb).all(|(x, y)| bits(x) == bits(y) && x.control == y.control), || {
            format!("runs at ({t_amb}, {i_max}) differ")
        })?;
        ensure(ta.windows(2).all(|w| w[1].soc >= w[0].soc), || format!("SoC decreased at ({t_amb}, {i_max})"))?;
    }
    for k in 0..100 {
        let t_amb = rng.random_range(-20.0..50.0);
        let t_bat = rng.random_range(-20.0..80.0);
        let next = temp_step(t_bat, 0.0, t_amb, p.r_internal, &p, p.dt);
        let (lo, hi) = if t_bat >= t_amb { (t_amb, t_bat) } else { (t_bat, t_amb) };
        ensure(lo < next && next < hi, || {
            format!("state {k}: cooling from {t_bat} toward {t_amb} gave {next}")
        })?;
    }
    ensure(p.dt < p.stability_limit(), || format!("dt {} >= {}", p.dt, p.stability_limit()))?;
    Ok(format!("bit-identical reruns, SoC monotone, 100 cooling states, dt {} < {:.0} s", p.dt, p.stability_limit()))
}

fn c4_calibration(shared: &mut Shared) -> Outcome {
    let cfg = ExperimentConfig::default();
    let obj = cfg.objective();
    let grid = grid_oracle(101, &obj, &obj.space, cfg.crit.c_kappa).map_err(|e| e.to_string())?;
    let report = calibration_report(&grid);
    shared.grid_fraction = Some(report.critical_fraction);
    let detail = report.gates.iter().map(|g| format!("{}: {}", g.name, g.detail)).collect::<Vec<_>>().join("; ");
    ensure(report.passed, || detail.clone())?;
    Ok(detail)
}

fn c5_monte_carlo(shared: &mut Shared) -> Outcome {
    let cfg = ExperimentConfig::default();
    let obj = cfg.objective();
    let counts = (1..=5u64)
        .map(|seed| mc_run(BUDGET, seed, &obj, cfg.crit.c_kappa).map(|t| critical_count(&t)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    shared.mc_mean = Some(mean);
    let p = shared.grid_fraction.ok_or("needs the grid fraction of criterion 4")?;
    let expected = p * BUDGET as f64;
    let sd = (BUDGET as f64 * p * (1.0 - p)).sqrt();
    let detail = format!("counts {counts:?}, mean {mean:.2}, expected {expected:.2} +- 3 x {sd:.2}");
    ensure((mean - expected).abs() <= 3.0 * sd, || detail.clone())?;
    Ok(detail)
}

fn c6_hoo(shared: &mut Shared) -> Outcome {
    let cfg = ExperimentConfig::default();
    let obj = cfg.objective();
    let mc = shared.mc_mean.ok_or("needs the Monte Carlo mean of criterion 5")?;
    let mut counts = Vec::new();
    for rho in [0.1, 0.3, 0.99] {
        let params = HooParams { nu1: 1.0, rho, seed: 1 };
        let mut hoo = Hoo::new(obj.dim(), params, 0).map_err(|e| e.to_string())?;
        let mut critical = 0;
        let mut kappas = Vec::with_capacity(BUDGET);
        for round in 0..BUDGET {
            let path = hoo.select();
            ensure(hoo.is_argmax_path(&path), || format!("rho {rho}, round {round}: path is not argmax-B"))?;
            let leaf = *path.last().expect("path is never empty");
            let x = hoo.propose(leaf);
            let kappa = obj.evaluate(&x).map_err(|e| e.to_string())?;
            critical += usize::from(kappa >= cfg.crit.c_kappa);
            kappas.push(kappa);
            hoo.update(&path, x, kappa);
            hoo.check_invariants().map_err(|e| format!("rho {rho}, round {round}: {e}"))?;
        }
        let plain = hoo_run(BUDGET, params, &obj, cfg.crit.c_kappa).map_err(|e| e.to_string())?;
        ensure(plain.iter().map(|r| r.kappa).eq(kappas.iter().copied()), || {
            format!("rho {rho}: stepped run differs from hoo_run")
        })?;
        ensure(critical as f64 >= 10.0 * mc, || format!("rho {rho}: {critical} < 10 x {mc:.2}"))?;
        counts.push((rho, critical));
    }
    shared.best_hoo = counts.iter().map(|c| c.1).max();
    Ok(format!("counts {counts:?} >= {:.1}; invariants held on all {} rounds", 10.0 * mc, 3 * BUDGET))
}

fn c7_doo(shared: &mut Shared) -> Outcome {
    let cfg = ExperimentConfig::default();
    let obj = cfg.objective();
    let mut counts = Vec::new();
    for rho in [0.1, 0.3, 0.99] {
        let p = DooParams { nu1: 1.0, rho };
        let a = doo_run(BUDGET, p, &obj, cfg.crit.c_kappa).map_err(|e| e.to_string())?;
        let b = doo_run(BUDGET, p, &obj, cfg.crit.c_kappa).map_err(|e| e.to_string())?;
        let bits = |t: &[EvalRecord]| t.iter().map(|r| (r.point.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), r.kappa.to_bits(), r.node)).collect::<Vec<_>>();
        ensure(bits(&a) == bits(&b), || format!("rho {rho}: reruns differ"))?;
        let c = critical_count(&a);
        ensure(c as f64 >= 0.9 * BUDGET as f64, || format!("rho {rho}: {c} < 90% of {BUDGET}"))?;
        counts.push((rho, c));
    }
    shared.worst_doo = counts.iter().map(|c| c.1).min();
    Ok(format!("counts {counts:?}, reruns bit-identical"))
}

fn c8_soo(shared: &Shared) -> Outcome {
    let cfg = ExperimentConfig::default();
    let obj = cfg.objective();
    let count = |epsilon| {
        soo_run(BUDGET, SooParams { epsilon }, &obj, cfg.crit.c_kappa).map(|t| critical_count(&t)).map_err(|e| e.to_string())
    };
    let plateau = [count(0.7)?, count(0.8)?, count(0.9)?];
    let c06 = count(0.6)?;
    let detail = format!("eps 0.7/0.8/0.9 -> {plateau:?}, eps 0.6 -> {c06}");
    ensure(plateau.iter().all(|&c| c == plateau[0]), || format!("plateau not flat: {detail}"))?;
    let gap = (c06 as f64 - plateau[0] as f64).abs() / plateau[0] as f64;
    ensure(gap <= 0.02, || format!("eps 0.6 off by {:.2}%: {detail}", 100.0 * gap))?;
    let hoo = shared.best_hoo.ok_or("needs HOO counts of criterion 6")?;
    let doo = shared.worst_doo.ok_or("needs DOO counts of criterion 7")?;
    for c in plateau.iter().chain([&c06]) {
        ensure(hoo < *c && *c < doo, || format!("{c} not strictly between HOO {hoo} and DOO {doo}"))?;
    }
    Ok(format!("{detail}; best HOO {hoo} < SOO < worst DOO {doo}"))
}

fn c9_poo() -> Outcome {
    let expected = [1, 2, 2, 4, 4, 8, 8, 16, 32];
    let got: Vec<usize> = (1..=9).map(|k| poo_instance_count(0.1 * k as f64, BUDGET)).collect();
    ensure(got == expected, || format!("instance counts {got:?}, want {expected:?}"))?;

    let cfg = ExperimentConfig::default();
    let obj = cfg.objective();
    let run = poo_run(BUDGET, PooParams { nu_max: 1.0, rho_max: 0.9, seed: 1 }, &obj, cfg.crit.c_kappa)
        .map_err(|e| e.to_string())?;
    let nodes: HashSet<_> = run.trace.iter().map(|r| r.node).collect();
    ensure(nodes.len() == run.trace.len() && run.trace.len() == BUDGET, || {
        format!("{} evaluations over {} distinct nodes", run.trace.len(), nodes.len())
    })?;

    let single = poo_run(BUDGET, PooParams { nu_max: 1.0, rho_max: 0.1, seed: 7 }, &obj, cfg.crit.c_kappa)
        .map_err(|e| e.to_string())?;
    let hoo = hoo_run(BUDGET, HooParams { nu1: 1.0, rho: 0.1, seed: 7 }, &obj, cfg.crit.c_kappa)
        .map_err(|e| e.to_string())?;
    let strip = |t: &[EvalRecord]| t.iter().map(|r| (r.point.clone(), r.kappa, r.node)).collect::<Vec<_>>();
    ensure(single.instances.len() == 1 && strip(&single.trace) == strip(&hoo), || "M = 1 run differs from HOO".into())?;
    Ok(format!(
        "counts {got:?}; {} fresh evaluations on distinct nodes ({} cache hits); M = 1 equals HOO",
        run.trace.len(),
        run.cache_hits
    ))
}

fn fixture(name: &str) -> Vec<(usize, Vec<f64>, f64, u32, u128)> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (
                f[0].parse().unwrap(),
                vec![f[1].parse().unwrap(), f[2].parse().unwrap()],
                f[3].parse().unwrap(),
                f[4].parse().unwrap(),
                f[5].parse().unwrap(),
            )
        })
        .collect()
}

fn c10_tiny() -> Outcome {
    let f = FnObjective::new(2, |u: &[f64]| u[0]);
    let as_rows = |t: Vec<EvalRecord>| {
        t.into_iter()
            .map(|r| {
                let n = r.node.expect("tree search records nodes");
                (r.index, r.point.0, r.kappa, n.depth, n.index)
            })
            .collect::<Vec<_>>()
    };
    let doo = as_rows(doo_run(7, DooParams { nu1: 1.0, rho: 0.5 }, &f, 0.8).map_err(|e| e.to_string())?);
    ensure(doo == fixture("tiny_doo.csv"), || format!("DOO trace {doo:?}"))?;
    let soo = as_rows(soo_run(7, SooParams { epsilon: 0.6 }, &f, 0.8).map_err(|e| e.to_string())?);
    ensure(soo == fixture("tiny_soo.csv"), || format!("SOO trace {soo:?}"))?;
    Ok("DOO (nu1 1, rho 0.5) and SOO (eps 0.6) match the 7-step fixtures".into())
}

fn main() -> ExitCode {
    let mut shared = Shared::default();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n:>2} {name} [{secs:.1}s]: {detail}");
            }
        }
    };
    report(1, "criticality formulas", &mut c1_formulas);
    report(2, "partition properties", &mut c2_partition);
    report(3, "simulator determinism and physics", &mut c3_simulator);
    report(4, "calibration gates", &mut || c4_calibration(&mut shared));
    report(5, "monte carlo baseline", &mut || c5_monte_carlo(&mut shared));
    report(6, "hoo effectiveness", &mut || c6_hoo(&mut shared));
    report(7, "doo dominance", &mut || c7_doo(&mut shared));
    report(8, "soo plateau", &mut || c8_soo(&shared));
    report(9, "poo schedule", &mut c9_poo);
    report(10, "tiny-scale traces", &mut c10_tiny);
    if failed == 0 {
        println!("acceptance: 10/10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
