use evd_core::diagnostics::EnergyLedger;
use evd_core::grid::{Boundary, Grid};
use evd_core::material::{
    DamageMode, DamagePotential, Hyperviscosity, Material, MobilityLaw, Profile, StoredEnergy, Viscosity,
    ViscoplasticPotential,
};
use evd_core::stepper::{run, step, Problem, State, StepConfig, StepReport};
use evd_core::Mat3;

fn base_material() -> Material {
    let mut m = Material::elastic(1.0, 2.0, 4.0);
    m.viscosity = Viscosity { shear: 0.1, bulk: 0.05 };
    m.hyperviscosity = Hyperviscosity { nu: 1e-4, exponent: 2.0 };
    m
}

fn shear_state(grid: &Grid, amp: f64) -> State {
    let mut s = State::rest(grid, 1.0);
    let mut v = vec![0.0; grid.len() * 2];
    for c in 0..grid.len() {
        let x = grid.center(c);
        v[2 * c] = amp * (2.0 * std::f64::consts::PI * x.0[1]).sin();
    }
    s.set_velocity(v);
    s
}

fn collect(pb: &Problem, s: &State, t_end: f64, cfg: &StepConfig) -> (Vec<State>, Vec<StepReport>) {
    let mut states = vec![];
    let mut reps = vec![];
    run(pb, s, t_end, cfg, |st, r| {
        states.push(st.clone());
        reps.push(*r);
    })
    .unwrap();
    (states, reps)
}

#[test]
fn rest_state_stays_at_rest() {
    let g = Grid::uniform(2, 8, 1.0, Boundary::SlipBox).unwrap();
    let pb = Problem::new(&g, base_material(), vec![0.0; g.len() * 2]).unwrap();
    let s0 = State::rest(&g, 1.3);
    let (states, reps) = collect(&pb, &s0, 0.1, &StepConfig::default());
    assert_eq!(states.len(), 10);
    for (s, r) in states.iter().zip(&reps) {
        assert!(s.v.iter().all(|v| v.abs() <= 1e-14));
        assert!(s.rho.iter().all(|&r| (r - 1.3).abs() <= 1e-14));
        assert!(r.ledger.residual.abs() <= 1e-14);
    }
}

#[test]
fn mass_is_conserved_over_200_steps() {
    for bc in [Boundary::Periodic, Boundary::SlipBox] {
        let g = Grid::uniform(2, 12, 1.0, bc).unwrap();
        let mut m = base_material();
        m.energy = StoredEnergy::NeoHookean {
            shear_modulus: 1.0,
            bulk_modulus: 2.0,
            modulation: Profile::TwoPhase {
                center: [0.5, 0.5, 0.0],
                radius: 0.2,
                inside: 3.0,
                outside: 1.0,
                period: None,
            },
        };
        m.viscoplastic = ViscoplasticPotential::quadratic(0.5);
        let pb = Problem::new(&g, m, vec![0.0; g.len() * 2]).unwrap();
        let mut s0 = State::rest(&g, 1.0);
        let mut v = vec![0.0; g.len() * 2];
        for c in 0..g.len() {
            let x = g.center(c);
            let (sx, sy) = ((std::f64::consts::PI * x.0[0]).sin(), (std::f64::consts::PI * x.0[1]).sin());
            v[2 * c] = 0.1 * sx * sy * (x.0[1] - 0.5);
            v[2 * c + 1] = -0.1 * sx * sy * (x.0[0] - 0.3);
        }
        s0.set_velocity(v);
        let m0 = s0.total_mass(&g);
        let cfg = StepConfig { tau: 5e-3, ..StepConfig::default() };
        let mut worst: f64 = 0.0;
        let mut count = 0;
        run(&pb, &s0, 1.0, &cfg, |s, _| {
            worst = worst.max((s.total_mass(&g) - m0).abs() / m0);
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 200);
        assert!(worst <= 1e-12, "{bc:?}: {worst}");
    }
}

#[test]
fn gravity_gives_first_step_momentum() {
    let g = Grid::uniform(2, 8, 1.0, Boundary::SlipBox).unwrap();
    let grav: Vec<f64> = (0..g.len()).flat_map(|_| [0.0, -1.0]).collect();
    let pb = Problem::new(&g, base_material(), grav).unwrap();
    let s0 = State::rest(&g, 1.0);
    let cfg = StepConfig { tau: 1e-4, ..StepConfig::default() };
    let (s1, _) = step(&pb, &s0, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for c in 0..g.len() {
        worst = worst.max((s1.p[2 * c + 1] + cfg.tau).abs() / cfg.tau);
    }
    assert!(worst < 1e-2, "{worst}");
}

#[test]
fn uniform_translation_carries_xi_exactly() {
    let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
    let pb = Problem::new(&g, base_material(), vec![0.0; g.len() * 2]).unwrap();
    let mut s0 = State::rest(&g, 1.0);
    s0.set_velocity((0..g.len()).flat_map(|_| [0.3, -0.2]).collect());
    let (states, _) = collect(&pb, &s0, 0.2, &StepConfig::default());
    let s = states.last().unwrap();
    for c in 0..g.len() {
        let x = g.center(c);
        assert!((s.xi[2 * c] - (x.0[0] - 0.3 * s.time)).abs() < 1e-12);
        assert!((s.xi[2 * c + 1] - (x.0[1] + 0.2 * s.time)).abs() < 1e-12);
        assert!((s.v[2 * c] - 0.3).abs() < 1e-12);
    }
}

#[test]
fn continuation_path_reaches_the_same_solution() {
    let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
    let pb = Problem::new(&g, base_material(), vec![0.0; g.len() * 2]).unwrap();
    let s0 = shear_state(&g, 0.2);
    let cfg = StepConfig::default();
    let (a, ra) = step(&pb, &s0, &cfg).unwrap();
    let (b, rb) = step(&pb, &s0, &StepConfig { force_continuation: true, ..cfg }).unwrap();
    assert_eq!(ra.continuation_stages, 0);
    assert!(rb.continuation_stages > 0);
    let d = a.v.iter().zip(&b.v).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(d < 1e-9, "{d}");
}

#[test]
fn energy_residual_shrinks_with_tau() {
    let g = Grid::uniform(2, 16, 1.0, Boundary::Periodic).unwrap();
    let pb = Problem::new(&g, base_material(), vec![0.0; g.len() * 2]).unwrap();
    let s0 = shear_state(&g, 0.1);
    let worst = |tau: f64| {
        let (_, reps) = collect(&pb, &s0, 0.2, &StepConfig { tau, ..StepConfig::default() });
        reps.iter().fold(0.0f64, |m, r| m.max(r.ledger.residual.abs()))
    };
    let e: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&t| worst(t)).collect();
    for w in e.windows(2) {
        let o = (w[0] / w[1]).log2();
        println!("{e:?} {o}");
        assert!(o >= 0.9, "{o}");
    }
}

#[test]
fn truncation_level_is_irrelevant_when_inactive() {
    let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
    let s0 = shear_state(&g, 0.2);
    let traj = |lambda: f64| {
        let mut m = base_material();
        m.lambda = lambda;
        let pb = Problem::new(&g, m, vec![0.0; g.len() * 2]).unwrap();
        collect(&pb, &s0, 0.2, &StepConfig::default())
    };
    let (a, ra) = traj(4.0);
    let (b, _) = traj(8.0);
    assert!(ra.iter().all(|r| r.monitors.activation_fraction == 0.0));
    for (x, y) in a.iter().zip(&b) {
        let d = x.v.iter().zip(&y.v).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(d <= 1e-10, "{d}");
    }
}

#[test]
fn damage_never_heals_and_stays_in_bounds() {
    let g = Grid::uniform(2, 8, 1.0, Boundary::SlipBox).unwrap();
    let mut m = base_material();
    m.energy = StoredEnergy::DamageNeoHookean {
        shear_modulus: 1.0,
        bulk_modulus: 2.0,
        residual_stiffness: 1e-2,
        fracture_energy: 0.02,
        modulation: Profile::default(),
    };
    m.damage = Some(DamagePotential::new(0.5, DamageMode::Unidirectional));
    let pb = Problem::new(&g, m, vec![0.0; g.len() * 2]).unwrap();
    let mut s0 = State::rest(&g, 1.0);
    let mut v = vec![0.0; g.len() * 2];
    for c in 0..g.len() {
        v[2 * c] = 0.5 * (g.center(c).0[0] - 0.5);
        s0.fe[c] = Mat3::from_rows([[1.0, 0.3, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }
    s0.set_velocity(v);
    let mut prev = s0.alpha.clone();
    let mut ledger_min = f64::INFINITY;
    run(&pb, &s0, 0.5, &StepConfig::default(), |s, r| {
        assert!(r.damage_growth <= 1e-12, "{}", r.damage_growth);
        for a in &s.alpha {
            assert!((-1e-10..=1.0 + 1e-10).contains(a));
        }
        prev = s.alpha.clone();
        ledger_min = ledger_min.min(r.ledger.diss_damage);
    })
    .unwrap();
    assert!(ledger_min >= 0.0);
    assert!(prev.iter().any(|&a| a < 1.0 - 1e-6));
}

#[test]
fn diffusion_conserves_and_satisfies_complementarity() {
    let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
    let mut m = base_material();
    m.energy = StoredEnergy::ChemoNeoHookean {
        shear_modulus: 1.0,
        bulk_modulus: 2.0,
        chemical_stiffness: 1.0,
        reference_concentration: Profile::TwoPhase {
            center: [0.5, 0.5, 0.0],
            radius: 0.25,
            inside: 0.9,
            outside: 0.1,
            period: None,
        },
        swelling_coupling: 0.0,
        modulation: Profile::default(),
    };
    m.diffusion = Some(MobilityLaw::constant(0.05));
    let mut s0 = State::rest(&g, 1.0);
    for c in 0..g.len() {
        s0.alpha[c] = 0.02 + 0.03 * (c % 3) as f64;
    }
    let pb = Problem::new(&g, m, vec![0.0; g.len() * 2]).unwrap();
    let total0: f64 = s0.alpha.iter().sum();
    let mut dmin = f64::INFINITY;
    let cfg = StepConfig { freeze_velocity: true, ..StepConfig::default() };
    run(&pb, &s0, 0.3, &cfg, |s, r| {
        assert!(r.complementarity <= 1e-9, "{}", r.complementarity);
        let tot: f64 = s.alpha.iter().sum();
        assert!((tot - total0).abs() <= 1e-9 * total0.max(1.0), "{tot} {total0}");
        assert!(s.v.iter().all(|v| *v == 0.0));
        dmin = dmin.min(r.ledger.diss_diffusion);
    })
    .unwrap();
    assert!(dmin > 0.0);
}

#[test]
fn ledger_total_is_kinetic_plus_stored() {
    let l = EnergyLedger { kinetic: 1.0, stored: 2.0, ..EnergyLedger::default() };
    assert_eq!(l.total(), 3.0);
    let _ = Mat3::identity();
}
