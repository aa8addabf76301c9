use evd::config::{apply_override, Encoding, ScenarioConfig};
use evd::ledger::{read_ledger, LedgerRow, LedgerWriter, COLUMNS};
use evd::runner::run_scenario;
use evd::scenarios::{builtin, BUILTIN};
use evd::snapshot::Snapshot;

const GOLDEN_HEADER: &str = "step,t,tau,kinetic,stored,total,diss_stokes,diss_hyper,diss_plastic,diss_damage,\
diss_diffusion,power,residual,cum_residual,min_rho,min_det_fe,max_fe_norm,max_inv_det_fe,activation_fraction,\
newton_momentum,newton_transport,continuation,complementarity,damage_growth";

#[test]
fn ledger_header_is_frozen() {
    let mut buf = Vec::new();
    {
        let mut w = LedgerWriter::new(&mut buf);
        w.write(&LedgerRow::default()).unwrap();
        w.flush().unwrap();
    }
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), GOLDEN_HEADER);
    assert_eq!(COLUMNS.join(","), GOLDEN_HEADER);
}

#[test]
fn ledger_reader_rejects_other_headers() {
    let bad = "step,t,energy\n0,0,1\n";
    assert!(read_ledger(bad.as_bytes()).is_err());
}

#[test]
fn ledger_round_trips() {
    let rows: Vec<LedgerRow> = (0..3)
        .map(|k| LedgerRow {
            step: k,
            t: 0.1 * k as f64 + 1e-17,
            residual: -3.3e-15 * k as f64,
            ..LedgerRow::default()
        })
        .collect();
    let mut buf = Vec::new();
    {
        let mut w = LedgerWriter::new(&mut buf);
        for r in &rows {
            w.write(r).unwrap();
        }
        w.flush().unwrap();
    }
    assert_eq!(read_ledger(buf.as_slice()).unwrap(), rows);
}

#[test]
fn every_builtin_config_round_trips() {
    for (name, text) in BUILTIN {
        let a = ScenarioConfig::from_toml(text, &[]).unwrap();
        assert_eq!(a.name, name);
        let b = ScenarioConfig::from_toml(&a.to_toml(), &[]).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn dotted_overrides_reach_nested_keys() {
    let text = builtin("shear-creep").unwrap();
    let c = ScenarioConfig::from_toml(
        text,
        &[
            "solver.tau=2.5e-3".into(),
            "material.viscoplastic.fluidity=0.25".into(),
            "grid.cells=[8, 8]".into(),
            "name=renamed".into(),
        ],
    )
    .unwrap();
    assert_eq!(c.solver.tau, 2.5e-3);
    assert_eq!(c.grid.as_ref().unwrap().cells, vec![8, 8]);
    assert_eq!(c.name, "renamed");
    assert_eq!(c.material.viscoplastic, evd_core::material::ViscoplasticPotential::quadratic(0.25));

    let mut t = toml::Table::new();
    t.insert("a".into(), toml::Value::Integer(1));
    assert!(apply_override(&mut t, "a.b=2").is_err());
    assert!(apply_override(&mut t, "novalue").is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let text = builtin("rest-state").unwrap();
    for o in [
        "initial.density.value=0.0",
        "material.lambda=1.5",
        "solver.tau=-1",
        "initial.fe=[[1.0,0.0,0.0],[0.0,-1.0,0.0],[0.0,0.0,1.0]]",
        "material.unknown_key=3",
        "initial.fe=[[5.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]",
    ] {
        let e = ScenarioConfig::from_toml(text, &[o.into()]).unwrap_err();
        assert_eq!(e.exit_code(), 1, "{o}: {e}");
    }
}

#[test]
fn snapshots_round_trip_bit_exactly() {
    let mut cfg = ScenarioConfig::from_toml(builtin("two-phase-inclusion").unwrap(), &[]).unwrap();
    cfg.t_end = 0.05;
    let out = run_scenario(&cfg, None).unwrap();
    let grid = cfg.grid().unwrap();
    let state = out.state.unwrap();
    let snap = Snapshot::from_state(&grid, &state, 5);
    for enc in [Encoding::Binary, Encoding::Ascii] {
        let mut buf = Vec::new();
        snap.write(&mut buf, enc).unwrap();
        let back = Snapshot::read(buf.as_slice()).unwrap();
        assert_eq!(back, snap);
        let s2 = back.to_state().unwrap();
        for (a, b) in s2.rho.iter().zip(&state.rho) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(s2, state);
    }
}

#[test]
fn writer_thread_streams_ledger_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::from_toml(builtin("gravity-settling").unwrap(), &[]).unwrap();
    cfg.t_end = 0.1;
    cfg.output.snapshot_every = 4;
    let out = run_scenario(&cfg, Some(dir.path())).unwrap();
    let stats = out.output.unwrap();
    assert_eq!(stats.rows, 11);
    // steps 0, 4, 8 and the final step 10
    assert_eq!(stats.snapshots.len(), 4);
    let rows = read_ledger(std::fs::File::open(dir.path().join("ledger.csv")).unwrap()).unwrap();
    assert_eq!(rows, out.rows);
    let last = Snapshot::read(std::fs::File::open(stats.snapshots.last().unwrap()).unwrap()).unwrap();
    assert_eq!(last.step, 10);
    assert_eq!(&last.to_state().unwrap(), out.state.as_ref().unwrap());
}
