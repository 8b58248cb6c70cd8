//! Runs scenarios end to end: certificate, simulation, diameter checks,
//! decay and position verification, CSV output, and parameter sweeps.

pub mod presets;
pub mod scenario;
pub mod sweep;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{
    check_continuous, check_discrete, position_bound, verify_decay, DecayReport,
    FlockingCertificate, Model, PositionReport,
};
use crate::dde::{fmt_f64, integrate};
use crate::diameter::{check_monotone_diameter, DiameterSeries, MonotonicityReport};
use crate::discrete::simulate_discrete;
use crate::error::{FlockError, Result};

pub use presets::{preset, PRESETS};
pub use scenario::{load_graph, load_scenario, Engine, Scenario, ScenarioSpec};
pub use sweep::{sweep, Axis, AxisName, SweepRow, SweepTable};

/// Relative tolerance (times `D(0)`) for the continuous monotonicity and
/// containment checks; absorbs interpolation error.
pub const CONTINUOUS_RTOL: f64 = 1e-6;
/// Same for the discrete recursion, where only rounding enters.
pub const DISCRETE_RTOL: f64 = 1e-9;
/// Relative slack in the decay inequality.
pub const DECAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub model: Model,
    /// `None` when the thresholds do not apply (single agent, no spanning
    /// tree); `certificate_note` says why.
    pub certificate: Option<FlockingCertificate>,
    pub certificate_note: Option<String>,
    pub initial_diameter: f64,
    pub final_diameter: f64,
    /// Physical time of the last sample.
    pub t_end: f64,
    pub flock_tol: f64,
    /// First sample time with `D(t) < flock_tol`.
    pub time_to_tolerance: Option<f64>,
    pub monotonicity: MonotonicityReport,
    pub hull_excursion: f64,
    pub decay: Option<DecayReport>,
    pub position: Option<PositionReport>,
    pub fitted_rate: Option<f64>,
    pub mean_velocity: Vec<f64>,
    /// Contradictions of a proven guarantee. Empty on a healthy run.
    pub defects: Vec<String>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn certified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.guaranteed())
    }

    /// First sample time with `D(t) < frac * D(0)`.
    pub fn time_to_fraction(&self, series: &DiameterSeries, frac: f64) -> Option<f64> {
        series.time_to_tolerance(frac * self.initial_diameter)
    }

    /// `key=value` summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k}={v}\n"));
        kv("scenario", self.scenario.clone());
        kv("model", self.model.to_string());
        match &self.certificate {
            Some(c) => {
                kv("verdict", c.verdict.to_string());
                kv("regime", c.regime.to_string());
                kv("delta", fmt_f64(c.delta));
            }
            None => kv(
                "verdict",
                format!("n/a ({})", self.certificate_note.as_deref().unwrap_or("")),
            ),
        }
        kv("D0", fmt_f64(self.initial_diameter));
        kv("D_end", fmt_f64(self.final_diameter));
        kv("t_end", fmt_f64(self.t_end));
        kv(
            "time_to_tolerance",
            self.time_to_tolerance.map_or("none".into(), fmt_f64),
        );
        kv("monotone", self.monotonicity.passed().to_string());
        kv("hull_excursion", fmt_f64(self.hull_excursion));
        if let Some(d) = &self.decay {
            kv("decay_checks", d.checks.len().to_string());
            kv("decay_ok", d.passed().to_string());
        }
        if let Some(p) = &self.position {
            kv("position_bound", fmt_f64(p.bound));
            kv("position_max", fmt_f64(p.measured_max));
            kv("position_ok", p.passed.to_string());
            kv("position_vacuous", p.vacuous.to_string());
        }
        kv("fitted_rate", self.fitted_rate.map_or("none".into(), fmt_f64));
        kv(
            "mean_velocity",
            self.mean_velocity
                .iter()
                .map(|&v| fmt_f64(v))
                .collect::<Vec<_>>()
                .join(" "),
        );
        kv("defects", self.defects.len().to_string());
        for d in &self.defects {
            kv("defect", d.clone());
        }
        for w in &self.warnings {
            kv("warning", w.clone());
        }
        for f in &self.files {
            kv("file", f.display().to_string());
        }
        out
    }
}

/// Outputs of a run besides the report, kept for callers that want the
/// raw series.
pub struct RunOutput {
    pub report: RunReport,
    pub series: DiameterSeries,
}

pub fn run(s: &Scenario) -> Result<RunReport> {
    run_with_series(s).map(|o| o.report)
}

/// Certificate, simulation, checks and (with an output directory) files.
pub fn run_with_series(s: &Scenario) -> Result<RunOutput> {
    let cert_result = match &s.engine {
        Engine::Continuous { history, .. } => check_continuous(history, &s.network, s.spec.rho),
        Engine::Discrete {
            system, history, ..
        } => check_discrete(history, system, s.spec.rho),
    };
    let (certificate, certificate_note) = match cert_result {
        Ok(c) => (Some(c), None),
        Err(e @ (FlockError::Degenerate(_) | FlockError::NoSpanningTree)) => {
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let mut defects = Vec::new();
    let mut files = Vec::new();
    let out_dir = s.output_dir();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let (series, time_unit, rtol, in_theory, hull_excursion, decay, position, mean_velocity) =
        match &s.engine {
            Engine::Continuous { history, dt, t_end } => {
                let x0 = history.delayed_position_spread(&s.network.graph, s.network.delay.tau());
                let traj = integrate(&s.network, history, *t_end, *dt)?;
                let series = traj.diameters(x0);
                let (decay, position) = certificate_checks(&traj, certificate.as_ref())?;
                if let Some(dir) = out_dir {
                    let path = dir.join(format!("{}.trajectory.csv", s.name()));
                    traj.write_csv(BufWriter::new(File::create(&path)?))?;
                    files.push(path);
                }
                (
                    series,
                    1.0,
                    CONTINUOUS_RTOL,
                    true,
                    traj.hull_excursion(),
                    decay,
                    position,
                    traj.final_mean_velocity(),
                )
            }
            Engine::Discrete {
                system,
                history,
                steps,
            } => {
                let x0 = history.delayed_position_spread(&s.network, system.tau());
                let traj = simulate_discrete(system, history, *steps)?;
                let series = traj.diameters(x0);
                let (decay, position) = certificate_checks(&traj, certificate.as_ref())?;
                if traj.in_theory() && traj.convexity_excursion() > DISCRETE_RTOL * series.initial() {
                    defects.push(format!(
                        "velocity left the convex hull of its window by {:e}",
                        traj.convexity_excursion()
                    ));
                }
                if let Some(dir) = out_dir {
                    let path = dir.join(format!("{}.trajectory.csv", s.name()));
                    traj.write_csv(BufWriter::new(File::create(&path)?), true)?;
                    files.push(path);
                }
                (
                    series,
                    system.h(),
                    DISCRETE_RTOL,
                    traj.in_theory(),
                    traj.hull_excursion(),
                    decay,
                    position,
                    traj.final_mean_velocity(),
                )
            }
        };

    let d0 = series.initial();
    let monotonicity = check_monotone_diameter(&series, rtol * d0);
    if in_theory {
        if let Some(v) = monotonicity.violations.first() {
            defects.push(format!(
                "{:?} not monotone at t = {}: {:e} after {:e}",
                v.quantity,
                v.time * time_unit,
                v.value,
                v.reference
            ));
        }
        if hull_excursion > rtol * d0 {
            defects.push(format!(
                "velocity left the initial window hull by {hull_excursion:e}"
            ));
        }
    }
    if let Some(d) = &decay {
        if let Some(k) = d.first_violation {
            let c = &d.checks[k];
            defects.push(format!(
                "decay bound violated at block {} (t = {}): D = {:e} > {:e}",
                c.n,
                c.t * time_unit,
                c.measured,
                c.bound
            ));
        }
        // the end of the run is bounded by the last completed block
        if let Some(last) = d.checks.last() {
            if series.last() > last.bound * (1.0 + d.tol) {
                defects.push(format!(
                    "final diameter {:e} exceeds block bound {:e}",
                    series.last(),
                    last.bound
                ));
            }
        }
    }
    if let Some(p) = &position {
        if !p.passed {
            defects.push(format!(
                "pair distance {:e} exceeds position bound {:e}",
                p.measured_max, p.bound
            ));
        }
    }

    let fitted_rate = series
        .fitted_log_rate(1e-12 * d0)
        .map(|r| r / time_unit);
    let time_to_tolerance = series.time_to_tolerance(s.flock_tol).map(|t| t * time_unit);
    let t_end = series.times.last().copied().unwrap_or(0.0) * time_unit;

    if let Some(dir) = out_dir {
        let path = dir.join(format!("{}.diameters.csv", s.name()));
        write_diameters_csv(BufWriter::new(File::create(&path)?), &series, time_unit)?;
        files.push(path);
        if let Some(c) = &certificate {
            let path = dir.join(format!("{}.certificate.txt", s.name()));
            std::fs::write(&path, c.to_key_values())?;
            files.push(path);
        }
    }

    let mut report = RunReport {
        scenario: s.name().to_string(),
        model: s.model(),
        certificate,
        certificate_note,
        initial_diameter: d0,
        final_diameter: series.last(),
        t_end,
        flock_tol: s.flock_tol,
        time_to_tolerance,
        monotonicity,
        hull_excursion,
        decay,
        position,
        fitted_rate,
        mean_velocity,
        defects,
        warnings: s.warnings.clone(),
        files,
    };
    if let Some(dir) = out_dir {
        let path = dir.join(format!("{}.report.txt", s.name()));
        report.files.push(path.clone());
        std::fs::write(&path, report.summary())?;
    }
    Ok(RunOutput { report, series })
}

fn certificate_checks(
    path: &impl crate::analysis::FlockPath,
    cert: Option<&FlockingCertificate>,
) -> Result<(Option<DecayReport>, Option<PositionReport>)> {
    match cert {
        Some(c) if c.guaranteed() => Ok((
            Some(verify_decay(path, c, DECAY_TOL)?),
            Some(position_bound(path, c)?),
        )),
        _ => Ok((None, None)),
    }
}

/// Columns `t, D, D1..Dd, vmax1..vmaxd, vmin1..vmind`.
pub fn write_diameters_csv<W: Write>(
    mut out: W,
    series: &DiameterSeries,
    time_unit: f64,
) -> Result<()> {
    writeln!(out, "# delayflock diameters v1")?;
    let d = series.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "D".to_string()];
    header.extend((1..=d).map(|k| format!("D{k}")));
    header.extend((1..=d).map(|k| format!("vmax{k}")));
    header.extend((1..=d).map(|k| format!("vmin{k}")));
    w.write_record(&header)?;
    for m in 0..series.len() {
        let mut row = vec![fmt_f64(series.times[m] * time_unit), fmt_f64(series.d[m])];
        row.extend(series.dk[m].iter().map(|&x| fmt_f64(x)));
        row.extend(series.vmax[m].iter().map(|&x| fmt_f64(x)));
        row.extend(series.vmin[m].iter().map(|&x| fmt_f64(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Applies an output directory override to a scenario.
pub fn with_output_dir(mut s: Scenario, dir: Option<&Path>) -> Scenario {
    if let Some(d) = dir {
        s.spec.output.dir = Some(d.to_path_buf());
    }
    s
}
