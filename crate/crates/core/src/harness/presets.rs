//! The four-agent experiments: the sample digraph or all-to-all, `kappa = 1`,
//! `tau_ij = 1`, constant histories on `[-1, 0]`.

use super::scenario::{
    DelaySpec, GraphSpec, InitialSpec, IntegrationSpec, ModelKind, OutputSpec, ScenarioSpec,
    WeightSpec,
};
use crate::analysis::{c_bar_infinity, ModelParams};
use crate::error::{FlockError, Result};

pub const PRESETS: [&str; 9] = [
    "fig2-digraph",
    "fig2-complete",
    "fig3-digraph",
    "fig3-complete",
    "fig4-digraph",
    "fig4-complete",
    "fig5-digraph",
    "fig5-complete",
    "discrete-fig2-digraph",
];

/// 1-based arcs of the four-agent sample digraph.
pub const DIGRAPH_ARCS: [[usize; 2]; 4] = [[1, 2], [2, 3], [3, 1], [3, 4]];

pub const POSITIONS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
pub const VELOCITIES: [[f64; 2]; 4] = [[1.0, -2.0], [3.0, -4.0], [5.0, 6.0], [-7.0, -8.0]];

pub const DISCRETE_H: f64 = 0.05;
pub const DISCRETE_STEPS: u64 = 2000;

fn rows<const D: usize>(table: &[[f64; D]]) -> Vec<Vec<f64>> {
    table.iter().map(|r| r.to_vec()).collect()
}

fn graph(complete: bool) -> GraphSpec {
    GraphSpec {
        agents: 4,
        arcs: if complete { Vec::new() } else { DIGRAPH_ARCS.to_vec() },
        complete,
    }
}

pub fn preset(name: &str) -> Result<ScenarioSpec> {
    if name == "discrete-fig2-digraph" {
        return discrete_fig2();
    }
    let (fig, variant) = name
        .split_once('-')
        .ok_or_else(|| unknown(name))?;
    let complete = match variant {
        "digraph" => false,
        "complete" => true,
        _ => return Err(unknown(name)),
    };
    let e10 = (-10f64).exp();
    let sqrt2 = 2f64.sqrt();
    let (beta, scale, t_end) = match fig {
        "fig2" => (0.25, e10 / (672.0 * sqrt2), 50.0),
        "fig3" => (0.25, 1.0, 50.0),
        "fig4" => (17.0 / 32.0, e10 / (7056.0 * sqrt2), 50.0),
        "fig5" => (17.0 / 32.0, 1.0, 20.0),
        _ => return Err(unknown(name)),
    };
    Ok(ScenarioSpec {
        name: name.to_string(),
        model: ModelKind::Continuous,
        note: None,
        rho: None,
        seed: None,
        graph: graph(complete),
        weight: WeightSpec::CuckerSmale {
            kappa: 1.0,
            beta,
            normalize: false,
        },
        delay: DelaySpec::Constant {
            tau: 1.0,
            value: 1.0,
        },
        initial: InitialSpec {
            positions: rows(&POSITIONS),
            velocities: rows(&VELOCITIES),
            velocity_scale: scale,
            history: None,
        },
        integration: IntegrationSpec {
            dt: Some(0.01),
            t_end: Some(t_end),
            ..Default::default()
        },
        output: OutputSpec::default(),
    })
}

// There is no reference discrete experiment; this mirrors fig2 with one-step
// delays and data at half the discrete critical bound.
fn discrete_fig2() -> Result<ScenarioSpec> {
    let params = ModelParams::new(2, 1, 1.0, 1.0, 2)?.with_h(DISCRETE_H)?;
    let bound = c_bar_infinity(&params)?;
    let mut spec = preset("fig2-digraph")?;
    spec.name = "discrete-fig2-digraph".into();
    spec.model = ModelKind::Discrete;
    spec.note = Some("constructed by analogy with fig2; no reference discrete experiment".into());
    spec.initial.velocity_scale = 0.5 * bound / 14.0;
    spec.integration = IntegrationSpec {
        h: Some(DISCRETE_H),
        steps: Some(DISCRETE_STEPS),
        ..Default::default()
    };
    Ok(spec)
}

fn unknown(name: &str) -> FlockError {
    FlockError::Validation(format!(
        "unknown preset {name:?}; known: {}",
        PRESETS.join(", ")
    ))
}
