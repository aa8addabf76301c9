//! One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

use std::process::ExitCode;
use std::time::Instant;

use evd::checks::{conjugate_round_trip, oracle0d, seam_jumps};
use evd::config::{DriveConfig, ScenarioConfig};
use evd::runner::run_scenario;
use evd::scenarios::{builtin, BUILTIN};
use evd_core::diagnostics::{check_sequence, gronwall_bound};
use evd_core::material::{Material, ViscoplasticPotential};
use evd_core::oracle::{backward_euler_0d, fd_stress_check, manufactured_residual, sample_deformations};
use evd_core::stepper::{kinematic_drive, GradientSchedule};
use evd_core::Mat3;

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

fn scenario(name: &str, overrides: &[&str]) -> ScenarioConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ScenarioConfig::from_toml(builtin(name).unwrap(), &o).unwrap()
}

fn materials() -> Vec<(&'static str, Material)> {
    ["rest-state", "damage-bar", "diffusion-swelling", "two-phase-inclusion"]
        .iter()
        .map(|n| (*n, scenario(n, &[]).material))
        .collect()
}

fn derivatives() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut per = [0usize; 3];
    for (_, m) in materials() {
        let s = sample_deformations(m.lambda, 25, 2024);
        count += s.len();
        for x in &s {
            per[x.branch as usize] += 1;
        }
        worst = worst.max(fd_stress_check(&m, &s).worst());
    }
    let spans = per.iter().all(|&k| k > 0);
    outcome(
        worst <= 1e-6 && count >= 100 && spans,
        format!("worst rel err {worst:.2e} (tol 1e-6) over {count} samples, branches u/b/d = {per:?}"),
    )
}

fn seams() -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, m) in materials() {
        worst = worst.max(seam_jumps(&m).0);
        for lambda in [2.0, 8.0] {
            worst = worst.max(seam_jumps(&Material { lambda, ..m.clone() }).0);
        }
    }
    outcome(worst <= 1e-6, format!("max |jump|/scale {worst:.2e} (tol 1e-6) at |F| = λ, 2λ and det F = 1/λ, 1/(2λ)"))
}

fn conjugates() -> Outcome {
    let q = conjugate_round_trip(&ViscoplasticPotential::quadratic(0.7), 300, 1).unwrap();
    let r = conjugate_round_trip(&ViscoplasticPotential::quartic(0.7, 0.3), 300, 2).unwrap();
    let r2 = conjugate_round_trip(&ViscoplasticPotential::quartic(0.01, 5.0), 300, 3).unwrap();
    let w = q.max(r).max(r2);
    outcome(w <= 1e-10, format!("quadratic {q:.1e}, quartic {:.1e} (tol 1e-10)", r.max(r2)))
}

fn mass() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for bc in ["periodic", "slip-box"] {
        let b = format!("grid.boundary=\"{bc}\"");
        let c = scenario("two-phase-inclusion", &[&b, "t_end=1.0", "solver.tau=0.005", "grid.cells=[16, 16]"]);
        let grid = c.grid().unwrap();
        let (_, s0) = c.build().unwrap();
        let m0 = s0.total_mass(&grid);
        let out = run_scenario(&c, None).unwrap();
        let steps = out.rows.len() - 1;
        let fin = out.state.unwrap().total_mass(&grid);
        let drift = (fin - m0).abs() / m0;
        pass &= drift <= 1e-12 && steps == 200;
        parts.push(format!("{bc}: {steps} steps, drift {drift:.1e}"));
    }
    outcome(pass, format!("{} (tol 1e-12)", parts.join("; ")))
}

fn positivity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, _) in BUILTIN {
        let c = scenario(name, &[]);
        let out = run_scenario(&c, None);
        match out {
            Ok(o) => {
                let rho = o.rows.iter().filter(|r| !r.min_rho.is_nan()).fold(f64::INFINITY, |m, r| m.min(r.min_rho));
                let det = o.rows.iter().fold(f64::INFINITY, |m, r| m.min(r.min_det_fe));
                let ok = o.rows.iter().all(|r| (r.min_rho.is_nan() || r.min_rho > 0.0) && r.min_det_fe > 0.0);
                pass &= ok;
                if rho.is_finite() {
                    parts.push(format!("{name} ρ≥{rho:.3} J≥{det:.3}"));
                } else {
                    parts.push(format!("{name} J≥{det:.3}"));
                }
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name} failed: {e}"));
            }
        }
    }
    outcome(pass, parts.join(", "))
}

fn maxwell_config() -> ScenarioConfig {
    let mut c = scenario("rigid-rotation", &["solver.tau=0.04", "t_end=1.0"]);
    c.name = "maxwell".into();
    c.material.viscoplastic = ViscoplasticPotential::quadratic(1.0);
    c.drive = Some(DriveConfig {
        schedule: GradientSchedule::constant(Mat3::ZERO),
        fe0: [[1.0, 0.3, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        alpha0: 1.0,
    });
    c
}

fn maxwell() -> Outcome {
    let rep = oracle0d(&maxwell_config(), 3).unwrap();
    let orders: Vec<f64> = rep.lines.iter().filter(|l| l.name.starts_with("tau-order")).map(|l| l.value).collect();
    let errs: Vec<String> = rep
        .lines
        .iter()
        .filter(|l| l.name.starts_with("error vs RK4"))
        .map(|l| format!("{:.2e}", l.value))
        .collect();
    outcome(
        rep.passed() && orders.len() == 2,
        format!("errors {} at τ = 0.04, 0.02, 0.01; orders {:.3?} (range [0.8, 1.2])", errs.join(", "), orders),
    )
}

fn rotation() -> Outcome {
    let c = scenario("rigid-rotation", &[]);
    let rep = oracle0d(&c, 3).unwrap();
    let get = |p: &str| rep.lines.iter().find(|l| l.name.starts_with(p)).unwrap();
    let rk = get("rotation energy drift per unit time, RK4");
    let be = get("rotation energy drift per unit time, stepper");
    outcome(
        rk.passed(),
        format!(
            "RK4 0D drive at τ=1e-3: drift {:.1e}/unit time (tol 1e-10); backward-Euler stepper drift {:.1e} (first order, reported only)",
            rk.value, be.value
        ),
    )
}

fn det_law() -> Outcome {
    let a = 0.6;
    let mut c = scenario("rigid-rotation", &["t_end=1.0"]);
    c.material.viscoplastic = ViscoplasticPotential::quadratic(0.5);
    c.drive = Some(DriveConfig {
        schedule: GradientSchedule::constant(Mat3::from_rows([
            [0.4, 0.5, 0.0],
            [-0.2, 0.1, 0.0],
            [0.0, 0.0, 0.1],
        ])),
        fe0: [[1.05, 0.1, 0.0], [0.0, 0.97, 0.0], [0.0, 0.0, 1.0]],
        alpha0: 1.0,
    });
    let rep = oracle0d(&c, 3).unwrap();
    let l = rep.lines.iter().find(|l| l.name.starts_with("det Fe law")).unwrap();
    outcome(l.passed(), format!("div v = {a}: max |det Fe − det Fe0·e^(at)| = {:.1e} (tol 1e-9), {}", l.value, l.name))
}

fn max_residual(c: &ScenarioConfig) -> f64 {
    run_scenario(c, None).unwrap().rows.iter().fold(0.0f64, |m, r| m.max(r.residual.abs()))
}

fn energy_residual() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (label, p) in [("p=2", "2.0"), ("p=4", "4.0")] {
        let hp = format!("material.hyperviscosity.exponent={p}");
        let nu = if p == "4.0" { "material.hyperviscosity.nu=1e-6" } else { "material.hyperviscosity.nu=1e-4" };
        let r: Vec<f64> = ["0.02", "0.01", "0.005"]
            .iter()
            .map(|t| {
                let ts = format!("solver.tau={t}");
                max_residual(&scenario("shear-creep", &[&hp, nu, &ts, "t_end=0.2", "grid.cells=[16, 16]"]))
            })
            .collect();
        let o: Vec<f64> = r.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        pass &= o.iter().all(|x| *x >= 0.9);
        parts.push(format!("{label}: max|R| {:.2e} → {:.2e}, orders {:.2?}", r[0], r[2], o));
    }
    outcome(pass, format!("{} (min 0.9)", parts.join("; ")))
}

fn truncation() -> Outcome {
    let a = run_scenario(&scenario("shear-creep", &["material.lambda=4.0"]), None).unwrap();
    let b = run_scenario(&scenario("shear-creep", &["material.lambda=8.0"]), None).unwrap();
    let act = a.rows.iter().chain(&b.rows).fold(0.0f64, |m, r| m.max(r.activation_fraction));
    let (sa, sb) = (a.state.unwrap(), b.state.unwrap());
    let mut d: f64 = 0.0;
    for (x, y) in sa.v.iter().zip(&sb.v).chain(sa.rho.iter().zip(&sb.rho)).chain(sa.alpha.iter().zip(&sb.alpha)) {
        d = d.max((x - y).abs());
    }
    for (x, y) in sa.fe.iter().zip(&sb.fe) {
        d = d.max((*x - *y).max_abs());
    }
    let tol = 10.0 * scenario("shear-creep", &[]).solver.momentum_tol;
    outcome(
        act == 0.0 && d <= tol,
        format!("activation {act} on all steps; λ=4 vs λ=8 max difference {d:.1e} (tol {tol:.0e})"),
    )
}

fn gronwall() -> Outcome {
    let w = gronwall_bound(1.0, 0.1, &[1.0; 10], &[0.0; 10]).unwrap().bound;
    // xorshift; sequences built to satisfy the recursive hypothesis with slack
    let mut s: u64 = 0x2545F4914F6CDD1D;
    let mut rnd = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = 1 + (rnd() * 40.0) as usize;
        let tau = 0.001 + 0.05 * rnd();
        let c = 0.1 + 2.0 * rnd();
        let a: Vec<f64> = (0..k).map(|_| rnd() * 0.9 / tau * rnd()).collect();
        let b: Vec<f64> = (0..k).map(|_| rnd()).collect();
        // y_j ≤ C + τ Σ_{ℓ≤j} (a_ℓ y_ℓ + b_ℓ), solved for y_j with a random fraction of the room
        let mut y = Vec::with_capacity(k);
        let mut acc = 0.0;
        for j in 0..k {
            let max_y = (c + acc + tau * b[j]) / (1.0 - tau * a[j]);
            let yj = max_y * rnd();
            acc += tau * (a[j] * yj + b[j]);
            y.push(yj);
        }
        match check_sequence(c, tau, &a, &b, &y) {
            Ok(r) => worst = worst.max(r),
            Err(_) => worst = f64::INFINITY,
        }
    }
    outcome(
        (w - 3.375).abs() <= 1e-3 && worst <= 1.0,
        format!("worked example bound {w:.4} (target 3.375 ± 1e-3); 1000 sequences, max y/bound {worst:.3}"),
    )
}

fn damage() -> Outcome {
    let c = scenario("damage-bar", &[]);
    let out = run_scenario(&c, None).unwrap();
    let growth = out.rows[1..].iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.damage_growth));
    let diss = out.rows.iter().fold(f64::INFINITY, |m, r| m.min(r.diss_damage));
    let s = out.state.unwrap();
    let viol = s.alpha.iter().fold(0.0f64, |m, a| m.max((-a).max(a - 1.0)).max(0.0));
    let amin = s.alpha.iter().fold(1.0f64, |m, a| m.min(*a));
    // 0D: stepper vs the independent backward-Euler oracle
    let sched = GradientSchedule::constant(Mat3::from_rows([[0.5, 0.3, 0.0], [0.0, -0.2, 0.0], [0.0, 0.0, 0.0]]));
    let cfg = c.solver;
    let st = kinematic_drive(&c.material, Mat3::identity(), 1.0, &sched, &cfg, 1.0).unwrap();
    let be = backward_euler_0d(&c.material, Mat3::identity(), 1.0, &sched, cfg.tau, 1.0).unwrap();
    let dev = st.iter().zip(&be).fold(0.0f64, |m, (p, q)| m.max((p.fe - q.fe).max_abs()).max((p.alpha - q.alpha).abs()));
    let a_end = st.last().unwrap().alpha;
    outcome(
        growth <= 1e-12 && viol <= 1e-10 && diss >= 0.0 && dev <= 1e-8 && amin < 1.0 && a_end < 1.0,
        format!(
            "max material rate of α {growth:.1e} (slack 1e-12), bound violation {viol:.1e} (1e-10), min dissipation {diss:.1e}, min α {amin:.3}; 0D vs oracle {dev:.1e} (1e-8, α→{a_end:.3})"
        ),
    )
}

fn diffusion() -> Outcome {
    let c = scenario("diffusion-swelling", &[]);
    let out = run_scenario(&c, None).unwrap();
    let comp = out.rows.iter().fold(0.0f64, |m, r| m.max(r.complementarity));
    let diss = out.rows.iter().fold(f64::INFINITY, |m, r| m.min(r.diss_diffusion));
    let frozen = scenario("diffusion-swelling", &["solver.freeze_velocity=true"]);
    let (_, s0) = frozen.build().unwrap();
    let t0: f64 = s0.alpha.iter().sum();
    let fo = run_scenario(&frozen, None).unwrap();
    let fs = fo.state.unwrap();
    let t1: f64 = fs.alpha.iter().sum();
    let drift = (t1 - t0).abs() / t0;
    let comp_f = fo.rows.iter().fold(0.0f64, |m, r| m.max(r.complementarity));
    outcome(
        comp.max(comp_f) <= 1e-9 && drift <= 1e-10 && diss >= 0.0 && fs.v.iter().all(|v| *v == 0.0),
        format!(
            "complementarity {:.1e} (tol 1e-9); v=0 total drift {drift:.1e} (tol 1e-10); min dissipation {diss:.2e}",
            comp.max(comp_f)
        ),
    )
}

fn spatial_order() -> Outcome {
    let mut m = scenario("shear-creep", &[]).material;
    m.viscosity.bulk = 0.2;
    let e: Vec<_> = [16, 32, 64].iter().map(|&n| manufactured_residual(&m, n).unwrap()).collect();
    let oc: Vec<f64> = e.windows(2).map(|w| (w[0].continuity / w[1].continuity).log2()).collect();
    let om: Vec<f64> = e.windows(2).map(|w| (w[0].momentum / w[1].momentum).log2()).collect();
    let ok = oc.iter().chain(&om).all(|o| (1.8..=2.2).contains(o));
    outcome(ok, format!("16²→32²→64²: continuity {oc:.3?}, momentum {om:.3?} (range [1.8, 2.2])"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("constitutive derivative check", derivatives),
        ("truncation seam continuity", seams),
        ("conjugate round-trip", conjugates),
        ("exact discrete mass conservation", mass),
        ("positivity invariants", positivity),
        ("0D oracle agreement (Maxwell)", maxwell),
        ("rigid-rotation energy", rotation),
        ("det-Fe law", det_law),
        ("energy-inequality residual", energy_residual),
        ("truncation elimination", truncation),
        ("discrete Gronwall", gronwall),
        ("damage", damage),
        ("diffusion", diffusion),
        ("spatial order", spatial_order),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{:02}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
