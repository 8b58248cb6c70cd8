//! Grid sweeps over scenario parameters, run in parallel with results in
//! grid order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::scenario::{DelaySpec, ModelKind, Scenario, ScenarioSpec, WeightSpec};
use super::{run, RunReport};
use crate::dde::fmt_f64;
use crate::error::{FlockError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisName {
    Beta,
    Tau,
    Kappa,
    H,
    Scale,
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisName::Beta => "beta",
            AxisName::Tau => "tau",
            AxisName::Kappa => "kappa",
            AxisName::H => "h",
            AxisName::Scale => "scale",
        })
    }
}

/// One swept parameter and its grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn linear(name: AxisName, min: f64, max: f64, steps: usize) -> Result<Self> {
        Self::build(name, min, max, steps, false)
    }

    pub fn log(name: AxisName, min: f64, max: f64, steps: usize) -> Result<Self> {
        Self::build(name, min, max, steps, true)
    }

    fn build(name: AxisName, min: f64, max: f64, steps: usize, log: bool) -> Result<Self> {
        if steps == 0 || !min.is_finite() || !max.is_finite() {
            return Err(FlockError::Validation(format!(
                "axis {name}: need finite bounds and at least one step"
            )));
        }
        if log && !(min > 0.0 && max > 0.0) {
            return Err(FlockError::Validation(format!(
                "axis {name}: log spacing needs positive bounds"
            )));
        }
        let values = (0..steps)
            .map(|k| {
                let f = if steps == 1 {
                    0.0
                } else {
                    k as f64 / (steps - 1) as f64
                };
                if log {
                    (min.ln() + f * (max.ln() - min.ln())).exp()
                } else {
                    min + f * (max - min)
                }
            })
            .collect();
        Ok(Self { name, values })
    }
}

/// `name=min:max:steps` or `name=min:max:steps:log`.
impl FromStr for Axis {
    type Err = FlockError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FlockError::Validation(format!("invalid axis {s:?}; expected name=min:max:steps[:log]"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let name = match name.trim() {
            "beta" => AxisName::Beta,
            "tau" => AxisName::Tau,
            "kappa" => AxisName::Kappa,
            "h" => AxisName::H,
            "scale" => AxisName::Scale,
            other => {
                return Err(FlockError::Validation(format!(
                    "unknown axis {other:?}; choose beta, tau, kappa, h or scale"
                )))
            }
        };
        let parts: Vec<&str> = range.split(':').collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            _ => return Err(bad()),
        };
        let min: f64 = parts[0].parse().map_err(|_| bad())?;
        let max: f64 = parts[1].parse().map_err(|_| bad())?;
        let steps: usize = parts[2].parse().map_err(|_| bad())?;
        Self::build(name, min, max, steps, log)
    }
}

fn apply(spec: &mut ScenarioSpec, axis: AxisName, value: f64) -> Result<()> {
    let invalid = |why: &str| Err(FlockError::Validation(format!("axis {axis}: {why}")));
    match axis {
        AxisName::Beta => match &mut spec.weight {
            WeightSpec::CuckerSmale { beta, .. } => *beta = value,
            _ => return invalid("needs a cucker-smale weight"),
        },
        AxisName::Kappa => match &mut spec.weight {
            WeightSpec::CuckerSmale { kappa, .. }
            | WeightSpec::Constant { kappa, .. }
            | WeightSpec::Tabulated { kappa, .. } => *kappa = value,
        },
        AxisName::Tau => match &mut spec.delay {
            DelaySpec::Zero => return invalid("the zero delay profile has no bound"),
            // a constant profile tracks its bound
            DelaySpec::Constant { tau, value: v } => {
                *tau = value;
                *v = value;
            }
            DelaySpec::Sinusoidal { tau, .. } | DelaySpec::Random { tau, .. } => *tau = value,
        },
        AxisName::H => {
            if spec.model != ModelKind::Discrete {
                return invalid("needs the discrete model");
            }
            spec.integration.h = Some(value);
        }
        AxisName::Scale => spec.initial.velocity_scale = value,
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<f64>,
    pub report: std::result::Result<RunReport, String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axes: Vec<AxisName>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows whose run contradicted a guarantee.
    pub fn defects(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.report.as_ref().is_ok_and(|rep| !rep.defects.is_empty()))
            .count()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# delayflock sweep v1")?;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = vec!["index".into()];
        header.extend(self.axes.iter().map(|a| a.to_string()));
        header.extend(
            [
                "gamma_g",
                "n_infinity",
                "kappa",
                "tau",
                "beta",
                "h",
                "D0",
                "X0",
                "rho",
                "threshold",
                "delta",
                "verdict",
                "D_end",
                "time_to_tolerance",
                "decay_ok",
                "position_ok",
                "defects",
                "error",
            ]
            .map(String::from),
        );
        w.write_record(&header)?;
        let opt = |x: Option<f64>| x.map_or(String::new(), fmt_f64);
        for row in &self.rows {
            let mut rec = vec![row.index.to_string()];
            rec.extend(row.values.iter().map(|&v| fmt_f64(v)));
            match &row.report {
                Ok(r) => {
                    match &r.certificate {
                        Some(c) => {
                            let p = &c.params;
                            rec.extend([
                                p.gamma_g.to_string(),
                                p.n_infinity.to_string(),
                                fmt_f64(p.kappa),
                                fmt_f64(p.tau),
                                opt(p.beta),
                                opt(p.h),
                                fmt_f64(c.measured_d0),
                                fmt_f64(c.measured_x0),
                                fmt_f64(c.rho),
                                fmt_f64(c.threshold),
                                fmt_f64(c.delta),
                                c.verdict.to_string(),
                            ]);
                        }
                        None => {
                            rec.extend(std::iter::repeat(String::new()).take(6));
                            rec.push(fmt_f64(r.initial_diameter));
                            rec.extend(std::iter::repeat(String::new()).take(4));
                            rec.push("n/a".into());
                        }
                    }
                    rec.push(fmt_f64(r.final_diameter));
                    rec.push(opt(r.time_to_tolerance));
                    rec.push(r.decay.as_ref().map_or(String::new(), |d| d.passed().to_string()));
                    rec.push(r.position.as_ref().map_or(String::new(), |p| p.passed.to_string()));
                    rec.push(r.defects.len().to_string());
                    rec.push(String::new());
                }
                Err(e) => {
                    rec.extend(std::iter::repeat(String::new()).take(17));
                    rec.push(e.clone());
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `template` at every point of the Cartesian product of `axes`
/// (last axis fastest). Points that fail validation, for example by
/// violating the stability gate, keep their error in the row. With no axes
/// the table has the single row of `template`.
pub fn sweep(template: &ScenarioSpec, axes: &[Axis]) -> Result<SweepTable> {
    // reject axes that cannot apply to this template at all
    for a in axes {
        let mut probe = template.clone();
        apply(&mut probe, a.name, a.values[0])?;
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for a in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                a.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let rows = points
        .into_par_iter()
        .enumerate()
        .map(|(index, values)| {
            let mut spec = template.clone();
            spec.output.dir = None;
            let report = axes
                .iter()
                .zip(&values)
                .try_for_each(|(a, &v)| apply(&mut spec, a.name, v))
                .and_then(|_| Scenario::from_spec(spec))
                .and_then(|s| run(&s))
                .map_err(|e| e.to_string());
            SweepRow {
                index,
                values,
                report,
            }
        })
        .collect();
    Ok(SweepTable {
        axes: axes.iter().map(|a| a.name).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::preset;

    #[test]
    fn parses_axes() {
        let a: Axis = "beta=0.1:0.6:6".parse().unwrap();
        assert_eq!(a.name, AxisName::Beta);
        assert_eq!(a.values.len(), 6);
        assert!((a.values[5] - 0.6).abs() < 1e-15);
        let s: Axis = "scale=1e-8:1:9:log".parse().unwrap();
        assert!((s.values[1] - 1e-7).abs() < 1e-20);
        assert!("gamma=1:2:3".parse::<Axis>().is_err());
        assert!("beta=1:2".parse::<Axis>().is_err());
        assert!("scale=0:1:3:log".parse::<Axis>().is_err());
        assert!("beta=1:2:0".parse::<Axis>().is_err());
    }

    #[test]
    fn empty_sweep_is_single_run() {
        let mut spec = preset("fig3-digraph").unwrap();
        spec.integration.t_end = Some(2.0);
        let table = sweep(&spec, &[]).unwrap();
        assert_eq!(table.rows.len(), 1);
        let direct = run(&Scenario::from_spec(spec).unwrap()).unwrap();
        let row = table.rows[0].report.as_ref().unwrap();
        assert_eq!(row.final_diameter, direct.final_diameter);
        assert_eq!(row.certificate, direct.certificate);
    }

    #[test]
    fn inapplicable_axes_are_rejected() {
        let spec = preset("fig2-digraph").unwrap();
        assert!(sweep(&spec, &["h=0.01:0.1:2".parse().unwrap()]).is_err());
    }

    #[test]
    fn gate_failures_stay_in_their_row() {
        let spec = preset("discrete-fig2-digraph").unwrap();
        let mut short = spec.clone();
        short.integration.steps = Some(20);
        let table = sweep(&short, &["h=0.5:1.5:2".parse().unwrap()]).unwrap();
        assert!(table.rows[0].report.is_ok());
        assert!(table.rows[1].report.as_ref().unwrap_err().contains("stability gate"));
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        // a strict reader rejects ragged rows
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        assert_eq!(rd.records().map(|r| r.unwrap().len()).collect::<Vec<_>>(), vec![20, 20]);
    }
}
