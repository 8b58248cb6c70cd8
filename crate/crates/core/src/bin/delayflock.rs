use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use delayflock::digraph::Hops;
use delayflock::harness::{
    load_graph, load_scenario, preset, run, sweep, with_output_dir, Axis, Engine, RunReport,
    Scenario,
};
use delayflock::{check_continuous, check_discrete, FlockError};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "FLOCK_OUT_DIR";

#[derive(Parser)]
#[command(version, about = "Delayed Cucker-Smale flocking: simulation and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roots, smallest depth and largest in-degree of a scenario's graph.
    AnalyzeGraph { file: PathBuf },
    /// Evaluates the sufficient flocking condition for a scenario.
    CheckCondition { scenario: PathBuf },
    /// Runs a scenario and writes CSV output.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Output directory (overrides the scenario and $FLOCK_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a built-in experiment preset.
    Reproduce {
        preset: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a scenario over a parameter grid and writes one CSV row per point.
    Sweep {
        scenario: PathBuf,
        /// `name=min:max:steps[:log]` with name in beta, tau, kappa, h, scale.
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// CSV destination; defaults to `<name>.sweep.csv` in the output
        /// directory, or stdout without one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &FlockError) -> u8 {
    if e.is_validation() {
        2
    } else if matches!(e, FlockError::Defect(_)) {
        3
    } else {
        1
    }
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).map(PathBuf::from)
}

fn resolve_out(s: Scenario, flag: Option<PathBuf>) -> Scenario {
    let dir = flag.or_else(|| s.spec.output.dir.clone()).or_else(env_out);
    with_output_dir(s, dir.as_deref())
}

fn finish(report: &RunReport) -> Result<ExitCode, FlockError> {
    print!("{}", report.summary());
    if report.defects.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(FlockError::Defect(report.defects.join("; ")))
    }
}

fn execute(cmd: Command) -> Result<ExitCode, FlockError> {
    match cmd {
        Command::AnalyzeGraph { file } => {
            let g = load_graph(&file)?;
            let m = g.compute_metrics();
            let labels = |v: &[usize]| {
                v.iter()
                    .map(|i| (i + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            println!("agents={}", g.n_vertices());
            println!("arcs={}", g.arc_count());
            println!("roots={}", labels(&m.roots));
            println!("spanning_tree={}", m.has_spanning_tree());
            match m.gamma_g {
                Hops::Finite(k) => println!("gamma_g={k}"),
                Hops::Infinite => println!("gamma_g=inf"),
            }
            println!("n_infinity={}", m.n_infinity);
            for i in 0..g.n_vertices() {
                println!("neighbors_{}={}", i + 1, labels(&g.neighbor_set(i)?));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckCondition { scenario } => {
            let s = load_scenario(&scenario)?;
            let cert = match &s.engine {
                Engine::Continuous { history, .. } => {
                    check_continuous(history, &s.network, s.spec.rho)?
                }
                Engine::Discrete {
                    system, history, ..
                } => check_discrete(history, system, s.spec.rho)?,
            };
            print!("{}", cert.to_key_values());
            for w in &s.warnings {
                println!("warning={w}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            scenario,
            t_end,
            dt,
            out,
        } => {
            let mut spec = load_scenario(&scenario)?.spec;
            if t_end.is_some() {
                spec.integration.t_end = t_end;
            }
            if dt.is_some() {
                spec.integration.dt = dt;
            }
            let s = resolve_out(Scenario::from_spec(spec)?, out);
            finish(&run(&s)?)
        }
        Command::Reproduce { preset: name, out } => {
            let s = resolve_out(Scenario::from_spec(preset(&name)?)?, out);
            finish(&run(&s)?)
        }
        Command::Sweep {
            scenario,
            axes,
            out,
        } => {
            let s = load_scenario(&scenario)?;
            let axes = axes
                .iter()
                .map(|a| a.parse::<Axis>())
                .collect::<Result<Vec<_>, _>>()?;
            let table = sweep(&s.spec, &axes)?;
            let dest = out.or_else(|| {
                s.spec
                    .output
                    .dir
                    .clone()
                    .or_else(env_out)
                    .map(|d| d.join(format!("{}.sweep.csv", s.name())))
            });
            match dest {
                Some(path) => {
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        std::fs::create_dir_all(parent)?;
                    }
                    table.write_csv(BufWriter::new(File::create(&path)?))?;
                    println!("rows={}", table.rows.len());
                    println!("file={}", Path::new(&path).display());
                }
                None => table.write_csv(std::io::stdout().lock())?,
            }
            let defects = table.defects();
            if defects > 0 {
                return Err(FlockError::Defect(format!(
                    "{defects} sweep points contradict their certificate"
                )));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
