//! Scenario files: a TOML description of graph, weight, delays, initial
//! data and integration settings, validated into engine inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Model;
use crate::dde::InitialHistory;
use crate::digraph::Digraph;
use crate::discrete::{DiscreteHistory, DiscreteSystem};
use crate::error::{FlockError, Result};
use crate::interaction::{DelayProfile, WeightFunction};
use crate::network::Network;

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_FLOCK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub agents: usize,
    /// 1-based `[sender, receiver]` pairs.
    #[serde(default)]
    pub arcs: Vec<[usize; 2]>,
    #[serde(default)]
    pub complete: bool,
}

impl GraphSpec {
    pub fn build(&self) -> Result<Digraph> {
        if self.complete && !self.arcs.is_empty() {
            return Err(FlockError::Validation(
                "graph: give either arcs or complete = true, not both".into(),
            ));
        }
        if self.complete {
            return Digraph::complete(self.agents);
        }
        let arcs: Vec<(usize, usize)> = self.arcs.iter().map(|a| (a[0], a[1])).collect();
        Digraph::from_labeled_arcs(self.agents, &arcs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    CuckerSmale {
        kappa: f64,
        beta: f64,
        #[serde(default)]
        normalize: bool,
    },
    Constant {
        kappa: f64,
        #[serde(default)]
        normalize: bool,
    },
    Tabulated {
        kappa: f64,
        radii: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        normalize: bool,
    },
}

impl WeightSpec {
    pub fn build(&self, agents: usize) -> Result<WeightFunction> {
        let (w, normalize) = match self {
            WeightSpec::CuckerSmale {
                kappa,
                beta,
                normalize,
            } => (WeightFunction::cucker_smale(*kappa, *beta)?, *normalize),
            WeightSpec::Constant { kappa, normalize } => {
                (WeightFunction::constant(*kappa)?, *normalize)
            }
            WeightSpec::Tabulated {
                kappa,
                radii,
                values,
                normalize,
            } => (
                WeightFunction::tabulated(*kappa, radii.clone(), values.clone())?,
                *normalize,
            ),
        };
        let r_max = match self {
            WeightSpec::Tabulated { radii, .. } => 2.0 * radii.last().copied().unwrap_or(0.0),
            _ => 0.0,
        }
        .max(100.0);
        let report = w.verify_admissible(r_max, 1000);
        if let Some(v) = report.violations.first() {
            return Err(FlockError::InadmissibleWeight(format!("{v:?}")));
        }
        Ok(if normalize { w.normalized_by(agents) } else { w })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DelaySpec {
    Zero,
    Constant {
        tau: f64,
        value: f64,
    },
    Sinusoidal {
        tau: f64,
        mean: f64,
        amplitude: f64,
        period: f64,
    },
    Random {
        tau: f64,
        /// Defaults to the scenario seed, then 0.
        seed: Option<u64>,
        hold: f64,
        min: f64,
        max: f64,
        #[serde(default)]
        integer: bool,
    },
}

impl DelaySpec {
    pub fn build(&self, default_seed: Option<u64>) -> Result<DelayProfile> {
        match *self {
            DelaySpec::Zero => Ok(DelayProfile::zero()),
            DelaySpec::Constant { tau, value } => DelayProfile::constant(tau, value),
            DelaySpec::Sinusoidal {
                tau,
                mean,
                amplitude,
                period,
            } => DelayProfile::sinusoidal(tau, mean, amplitude, period),
            DelaySpec::Random {
                tau,
                seed,
                hold,
                min,
                max,
                integer,
            } => DelayProfile::piecewise_random(
                tau,
                seed.or(default_seed).unwrap_or(0),
                hold,
                min,
                max,
                integer,
            ),
        }
    }

    pub fn tau(&self) -> f64 {
        match *self {
            DelaySpec::Zero => 0.0,
            DelaySpec::Constant { tau, .. }
            | DelaySpec::Sinusoidal { tau, .. }
            | DelaySpec::Random { tau, .. } => tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistorySpec {
    /// Sample times ending at 0 (step indices for the discrete model).
    pub times: Vec<f64>,
    /// `positions[k][i]` is agent `i` at `times[k]`.
    pub positions: Vec<Vec<Vec<f64>>>,
    pub velocities: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// State at time 0, held constant on the history window unless
    /// `history` is given.
    #[serde(default)]
    pub positions: Vec<Vec<f64>>,
    #[serde(default)]
    pub velocities: Vec<Vec<f64>>,
    /// Multiplies every velocity, history included.
    #[serde(default = "one")]
    pub velocity_scale: f64,
    pub history: Option<HistorySpec>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub h: Option<f64>,
    pub steps: Option<u64>,
    #[serde(default)]
    pub unsafe_h: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub flock_tol: Option<f64>,
}

/// The file form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub model: ModelKind,
    /// Free-form label carried into reports.
    pub note: Option<String>,
    pub rho: Option<f64>,
    pub seed: Option<u64>,
    pub graph: GraphSpec,
    pub weight: WeightSpec,
    pub delay: DelaySpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FlockError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }
}

#[derive(Debug, Clone)]
pub enum Engine {
    Continuous {
        history: InitialHistory,
        dt: f64,
        t_end: f64,
    },
    Discrete {
        system: DiscreteSystem,
        history: DiscreteHistory,
        steps: u64,
    },
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub network: Network,
    pub engine: Engine,
    pub flock_tol: f64,
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn model(&self) -> Model {
        match self.engine {
            Engine::Continuous { .. } => Model::Continuous,
            Engine::Discrete { .. } => Model::Discrete,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.engine {
            Engine::Continuous { history, .. } => history.dim(),
            Engine::Discrete { history, .. } => history.dim(),
        }
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.spec.output.dir.as_deref()
    }

    pub fn from_spec(spec: ScenarioSpec) -> Result<Self> {
        let graph = spec.graph.build()?;
        let n = graph.n_vertices();
        let weight = spec.weight.build(n)?;
        let delay = spec.delay.build(spec.seed)?;
        let network = Network::new(graph, weight, delay);
        let mut warnings = Vec::new();
        if let Some(note) = &spec.note {
            warnings.push(note.clone());
        }

        let init = &spec.initial;
        let scale = init.velocity_scale;
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(FlockError::Validation(format!(
                "initial.velocity_scale must be finite and nonnegative, got {scale}"
            )));
        }
        let scaled = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().map(|c| c * scale).collect())
                .collect()
        };

        let engine = match spec.model {
            ModelKind::Continuous => {
                let tau = network.delay.tau();
                if !network.delay.is_continuous_in_time() {
                    warnings.push(
                        "delay profile jumps in time; the continuous engine treats it as merely bounded"
                            .into(),
                    );
                }
                let history = match &init.history {
                    None => InitialHistory::constant(&init.positions, &scaled(&init.velocities))?,
                    Some(h) => {
                        if !init.positions.is_empty() || !init.velocities.is_empty() {
                            return Err(FlockError::Validation(
                                "initial: give the time-0 rows or a history table, not both".into(),
                            ));
                        }
                        let v: Vec<Vec<Vec<f64>>> = h.velocities.iter().map(|s| scaled(s)).collect();
                        InitialHistory::tabulated(h.times.clone(), &h.positions, &v)?
                    }
                };
                check_agents(history.agents(), n)?;
                if !history.covers(tau) {
                    return Err(FlockError::Validation(format!(
                        "initial history starts at {}, must cover [-{tau}, 0]",
                        history.start()
                    )));
                }
                let it = &spec.integration;
                if it.h.is_some() || it.steps.is_some() || it.unsafe_h {
                    return Err(FlockError::Validation(
                        "integration: h, steps and unsafe_h apply to the discrete model".into(),
                    ));
                }
                let dt = it.dt.unwrap_or(DEFAULT_DT);
                let t_end = it.t_end.ok_or_else(|| {
                    FlockError::Validation("integration.t_end is required".into())
                })?;
                positive("integration.dt", dt)?;
                positive("integration.t_end", t_end)?;
                Engine::Continuous { history, dt, t_end }
            }
            ModelKind::Discrete => {
                let it = &spec.integration;
                if it.dt.is_some() || it.t_end.is_some() {
                    return Err(FlockError::Validation(
                        "integration: dt and t_end apply to the continuous model; use h and steps"
                            .into(),
                    ));
                }
                let h = it
                    .h
                    .ok_or_else(|| FlockError::Validation("integration.h is required".into()))?;
                let steps = it.steps.ok_or_else(|| {
                    FlockError::Validation("integration.steps is required".into())
                })?;
                let system = if it.unsafe_h {
                    let s = DiscreteSystem::new_unsafe(network.clone(), h)?;
                    if !s.in_theory() {
                        warnings.push(
                            "unsafe_h: kappa h violates the stability gate, results are outside the discrete theory"
                                .into(),
                        );
                    }
                    s
                } else {
                    DiscreteSystem::new(network.clone(), h)?
                };
                let tau = system.tau();
                let history = match &init.history {
                    None => {
                        check_agents(init.positions.len(), n)?;
                        let x = flat(&init.positions, "initial.positions")?;
                        let v = flat(&scaled(&init.velocities), "initial.velocities")?;
                        if x.len() != v.len() {
                            return Err(FlockError::Validation(
                                "initial positions and velocities differ in shape".into(),
                            ));
                        }
                        DiscreteHistory::constant(x, v, n, tau)?
                    }
                    Some(hs) => {
                        let want: Vec<f64> = (0..=tau).map(|k| k as f64 - tau as f64).collect();
                        if hs.times != want {
                            return Err(FlockError::Validation(format!(
                                "discrete history times must be the steps {want:?}"
                            )));
                        }
                        let x = hs
                            .positions
                            .iter()
                            .map(|s| flat(s, "history.positions"))
                            .collect::<Result<Vec<_>>>()?;
                        let v = hs
                            .velocities
                            .iter()
                            .map(|s| flat(&scaled(s), "history.velocities"))
                            .collect::<Result<Vec<_>>>()?;
                        DiscreteHistory::from_steps(x, v, n)?
                    }
                };
                check_agents(history.agents(), n)?;
                Engine::Discrete {
                    system,
                    history,
                    steps,
                }
            }
        };
        let flock_tol = spec.output.flock_tol.unwrap_or(DEFAULT_FLOCK_TOL);
        positive("output.flock_tol", flock_tol)?;
        if let Some(r) = spec.rho {
            positive("rho", r)?;
        }
        Ok(Self {
            spec,
            network,
            engine,
            flock_tol,
            warnings,
        })
    }
}

fn check_agents(got: usize, n: usize) -> Result<()> {
    if got == n {
        Ok(())
    } else {
        Err(FlockError::Validation(format!(
            "initial data has {got} agents, graph has {n}"
        )))
    }
}

fn positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(FlockError::Validation(format!("{what} must be positive, got {x}")))
    }
}

fn flat(rows: &[Vec<f64>], what: &str) -> Result<Vec<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(FlockError::Validation(format!(
            "{what}: rows must share a positive dimension"
        )));
    }
    Ok(rows.concat())
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let spec = ScenarioSpec::from_toml(&text)
        .map_err(|e| FlockError::Parse(format!("{}: {e}", path.display())))?;
    Scenario::from_spec(spec)
}

/// Only the `[graph]` table of a file; other tables are ignored.
#[derive(Debug, Deserialize)]
struct GraphOnly {
    graph: GraphSpec,
}

pub fn load_graph(path: &Path) -> Result<Digraph> {
    let text = std::fs::read_to_string(path)?;
    let g: GraphOnly = toml::from_str(&text)
        .map_err(|e| FlockError::Parse(format!("{}: {e}", path.display())))?;
    g.graph.build()
}
