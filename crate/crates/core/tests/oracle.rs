use evd_core::material::{
    Branch, DamageMode, EnergyDensity, DamagePotential, Hyperviscosity, Material, Profile, StoredEnergy, Viscosity,
    ViscoplasticPotential,
};
use evd_core::oracle::{
    backward_euler_0d, fd_check, fd_stress_check, manufactured_residual, reference_0d, rk4_self_consistency,
    sample_deformations,
};
use evd_core::stepper::{kinematic_drive, GradientSchedule, StepConfig};
use evd_core::Mat3;

fn viscous_material() -> Material {
    let mut m = Material::elastic(1.0, 2.0, 4.0);
    m.viscosity = Viscosity { shear: 0.3, bulk: 0.2 };
    m.hyperviscosity = Hyperviscosity { nu: 1e-3, exponent: 2.0 };
    m
}

fn damage_material() -> Material {
    let mut m = Material::elastic(1.0, 2.0, 4.0);
    m.energy = StoredEnergy::DamageNeoHookean {
        shear_modulus: 1.0,
        bulk_modulus: 2.0,
        residual_stiffness: 1e-2,
        fracture_energy: 0.05,
        modulation: Profile::default(),
    };
    m.damage = Some(DamagePotential::new(1.0, DamageMode::Unidirectional));
    m
}

fn shear(rate: f64) -> GradientSchedule {
    GradientSchedule::constant(Mat3::from_rows([[0.0, rate, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
}

#[test]
fn manufactured_residual_is_second_order() {
    let m = viscous_material();
    let e: Vec<_> = [16, 32, 64].iter().map(|&n| manufactured_residual(&m, n).unwrap()).collect();
    for w in e.windows(2) {
        let oc = (w[0].continuity / w[1].continuity).log2();
        let om = (w[0].momentum / w[1].momentum).log2();
        println!("{w:?} {oc} {om}");
        assert!((1.8..=2.2).contains(&oc), "{oc}");
        assert!((1.8..=2.2).contains(&om), "{om}");
    }
}

#[test]
fn manufactured_residual_rejects_nonquadratic_hyper() {
    let mut m = viscous_material();
    m.hyperviscosity.exponent = 4.0;
    assert!(manufactured_residual(&m, 16).is_err());
}

#[test]
fn fd_check_passes_on_all_families() {
    let s = sample_deformations(4.0, 25, 11);
    let mut chemo = Material::elastic(1.0, 2.0, 4.0);
    chemo.energy = StoredEnergy::ChemoNeoHookean {
        shear_modulus: 1.0,
        bulk_modulus: 2.0,
        chemical_stiffness: 0.5,
        reference_concentration: Profile::constant(0.3),
        swelling_coupling: 0.2,
        modulation: Profile::default(),
    };
    for m in [viscous_material(), damage_material(), chemo] {
        let r = fd_stress_check(&m, &s);
        println!("{r:?}");
        assert!(r.worst() <= 1e-6, "{r:?}");
    }
}

#[test]
fn fd_check_locates_a_broken_blend_derivative() {
    let m = Material::elastic(1.0, 2.0, 4.0);
    let t = m.truncation();
    let s = sample_deformations(4.0, 20, 3);
    // drops the w′φ term: correct wherever w is constant
    let r = fd_check(
        |x, f, a| m.energy(x, f, a),
        |x, f, a| {
            let w = t.weight(f).value;
            if w == 0.0 {
                Mat3::ZERO
            } else {
                m.energy.d_f(x, f, a) * w
            }
        },
        |x, f, a| m.d_energy_alpha(x, f, a),
        &s,
        1.0,
    );
    assert_eq!(r.failing(1e-6), vec![Branch::Blend]);
}

#[test]
fn damage_drive_matches_independent_backward_euler() {
    let m = damage_material();
    let cfg = StepConfig { tau: 1e-2, ..StepConfig::default() };
    let sched = shear(1.0);
    let a = kinematic_drive(&m, Mat3::identity(), 1.0, &sched, &cfg, 1.0).unwrap();
    let b = backward_euler_0d(&m, Mat3::identity(), 1.0, &sched, cfg.tau, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for (p, q) in a.iter().zip(&b) {
        worst = worst.max((p.fe - q.fe).max_abs()).max((p.alpha - q.alpha).abs());
    }
    println!("alpha end {} worst {worst}", a.last().unwrap().alpha);
    assert!(a.last().unwrap().alpha < 1.0);
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn maxwell_relaxation_is_first_order_against_rk4() {
    let mut m = Material::elastic(1.0, 2.0, 4.0);
    m.viscoplastic = ViscoplasticPotential::quadratic(1.0);
    let fe0 = Mat3::from_rows([[1.0, 0.3, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    let z = GradientSchedule::constant(Mat3::ZERO);
    let t_end = 1.0;
    let reference = reference_0d(&m, fe0, 1.0, &z, 1e-4, t_end).unwrap();
    assert!(rk4_self_consistency(&m, fe0, 1.0, &z, 1e-3, t_end).unwrap() < 1e-12);
    let fin = reference.last().unwrap().fe;
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&tau| {
            let cfg = StepConfig { tau, ..StepConfig::default() };
            let tr = kinematic_drive(&m, fe0, 1.0, &z, &cfg, t_end).unwrap();
            (tr.last().unwrap().fe - fin).max_abs()
        })
        .collect();
    for w in errs.windows(2) {
        let o = (w[0] / w[1]).log2();
        println!("{errs:?} {o}");
        assert!((0.8..=1.2).contains(&o), "{o}");
    }
}
