use delayflock::harness::scenario::DelaySpec;
use delayflock::harness::{load_scenario, preset, sweep, Axis, PRESETS};
use delayflock::{
    integrate, simulate_discrete, DelayProfile, Digraph, DiscreteHistory, DiscreteSystem,
    InitialHistory, Network, WeightFunction,
};

const X: [[f64; 2]; 3] = [[0.0, 1.0], [2.0, -1.0], [-1.0, 0.5]];
const V: [[f64; 2]; 3] = [[0.3, -0.2], [-0.5, 0.4], [0.1, 0.9]];
const SHIFT: [f64; 2] = [1.5, -2.25];

fn rows(t: &[[f64; 2]; 3], add: [f64; 2]) -> Vec<Vec<f64>> {
    t.iter().map(|r| vec![r[0] + add[0], r[1] + add[1]]).collect()
}

fn graph() -> Digraph {
    Digraph::from_labeled_arcs(3, &[(1, 2), (2, 3), (3, 1), (1, 3)]).unwrap()
}

/// Adding a constant to every velocity shifts the whole velocity solution
/// by that constant when relative positions do not feel the shift.
fn galilean_gap(net: &Network) -> f64 {
    let base = InitialHistory::constant(&rows(&X, [0.0; 2]), &rows(&V, [0.0; 2])).unwrap();
    let boosted = base.map(|k, v| v + SHIFT[k], |k, s, x| x + SHIFT[k] * s);
    let a = integrate(net, &base, 5.0, 0.01).unwrap();
    let b = integrate(net, &boosted, 5.0, 0.01).unwrap();
    let mut worst: f64 = 0.0;
    for knot in 0..a.times().len() {
        for (k, (va, vb)) in a.velocities(knot).iter().zip(b.velocities(knot)).enumerate() {
            worst = worst.max((vb - SHIFT[k % 2] - va).abs());
        }
    }
    worst
}

#[test]
fn galilean_invariance_without_delay() {
    let net = Network::new(graph(), WeightFunction::cucker_smale(1.0, 0.4).unwrap(), DelayProfile::zero());
    assert!(galilean_gap(&net) < 1e-10);
}

#[test]
fn galilean_invariance_with_constant_weight() {
    let net = Network::new(
        graph(),
        WeightFunction::constant(1.0).unwrap(),
        DelayProfile::constant(1.0, 1.0).unwrap(),
    );
    assert!(galilean_gap(&net) < 1e-10);
}

#[test]
fn delayed_positional_weights_break_galilean_invariance() {
    let net = Network::new(
        graph(),
        WeightFunction::cucker_smale(1.0, 0.4).unwrap(),
        DelayProfile::constant(1.0, 1.0).unwrap(),
    );
    assert!(galilean_gap(&net) > 1e-6);
}

/// The discrete model is forward Euler for the undelayed system, so its
/// distance from a fine RK4 solution halves with the step.
#[test]
fn discrete_converges_at_first_order() {
    let net = Network::new(graph(), WeightFunction::cucker_smale(1.0, 0.4).unwrap(), DelayProfile::zero());
    let hist = InitialHistory::constant(&rows(&X, [0.0; 2]), &rows(&V, [0.0; 2])).unwrap();
    let reference = integrate(&net, &hist, 1.0, 1e-3).unwrap();
    let last = reference.times().len() - 1;
    let want = reference.velocities(last);
    let err = |h: f64| {
        let sys = DiscreteSystem::new(net.clone(), h).unwrap();
        let dh = DiscreteHistory::constant(X.concat(), V.concat(), 3, 0).unwrap();
        let steps = (1.0 / h).round() as u64;
        let traj = simulate_discrete(&sys, &dh, steps).unwrap();
        traj.velocities(steps as i64)
            .iter()
            .zip(want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(0.02) / err(0.01);
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn sweep_output_is_deterministic() {
    let mut template = preset("fig4-digraph").unwrap();
    template.integration.t_end = Some(10.0);
    template.delay = DelaySpec::Random {
        tau: 1.0,
        seed: Some(7),
        hold: 0.5,
        min: 0.0,
        max: 1.0,
        integer: false,
    };
    let axes: Vec<Axis> = vec![
        "beta=0.2:0.8:4".parse().unwrap(),
        "scale=1e-10:1:4:log".parse().unwrap(),
    ];
    let csv = || {
        let table = sweep(&template, &axes).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        buf
    };
    let first = csv();
    assert_eq!(first, csv());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    assert_eq!(first, pool.install(csv));
}

#[test]
fn shipped_scenarios_match_presets() {
    for name in PRESETS {
        let path = format!("{}/scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"));
        let s = load_scenario(path.as_ref()).unwrap();
        assert_eq!(s.spec, preset(name).unwrap(), "{name}");
    }
}
