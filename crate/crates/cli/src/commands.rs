//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Serialize;

use qmpc::error::{Error, Result};
use qmpc::model::euler_discretize;
use qmpc::pmpc::assemble_objective;
use qmpc::predict::build_omega;
use qmpc::qubo::{self, assemble_constrained_qubo, compile_qubo, default_penalty_weight, BinaryEncoding, QuboProblem};
use qmpc::sim::{compute_metrics, run_closed_loop};
use qmpc::solve::{solve_exhaustive, solve_sa, SaSchedule, SolveResult};

use crate::config::{BackendKind, Experiment, Overrides};

/// Compile the experiment's control problem at its initial condition and
/// write the problem files.
pub fn cmd_compile(config_path: &Path, out: Option<PathBuf>, ov: &Overrides) -> Result<()> {
    let experiment = Experiment::load(config_path)?;
    let cfg = experiment.mpc(ov);
    let plant = &experiment.plant;
    cfg.validate(plant.n_x(), plant.n_u())?;
    let model = euler_discretize(plant, experiment.config.sim.t_s)?;

    let x0 = DVector::from_row_slice(&experiment.config.sim.x0);
    let u0 = DVector::zeros(plant.n_u());
    let gamma = cfg.blocking(plant.n_u())?;
    let op = build_omega(&model, &x0, &u0, &gamma, cfg.horizon, cfg.alpha)?;
    let reference_signal = experiment.reference()?;
    let mut reference = DVector::zeros(cfg.horizon * plant.n_x());
    for k in 0..cfg.horizon {
        reference
            .rows_mut(k * plant.n_x(), plant.n_x())
            .copy_from(reference_signal.at(2 + k));
    }
    let obj = assemble_objective(&cfg, &op, &reference)?;
    let enc = BinaryEncoding::new(cfg.c_lo.clone(), cfg.c_hi.clone(), cfg.n_bits)?;
    let base = compile_qubo(&obj, &enc, None)?;

    let specs = experiment.constraint_specs()?;
    let problem = if specs.is_empty() {
        base
    } else {
        let default_lambda = default_penalty_weight(base.abs_sum(), base.constant());
        let mut blocks = Vec::new();
        let mut lambdas = Vec::new();
        let mut next_var = base.m();
        for (spec, lambda) in &specs {
            let block = qubo::compile_constraint(spec, &enc, next_var)?;
            for w in &block.warnings {
                eprintln!("warning: {w}");
            }
            next_var = block.end_var;
            lambdas.push(lambda.unwrap_or(default_lambda));
            blocks.push(block);
        }
        assemble_constrained_qubo(&base, &blocks, &lambdas)?
    };

    let out_dir = resolve_out_dir(&experiment, out)?;
    qubo::io::write_coo_file(&problem, &out_dir.join("qubo.coo"))?;
    qubo::io::write_json_file(&problem, &out_dir.join("qubo.json"))?;
    qubo::io::write_ising_json_file(&problem, &out_dir.join("ising.json"))?;

    println!(
        "m={} n_mu={} constant={}",
        problem.m(),
        op.basis().len(),
        problem.constant()
    );
    for g in problem.groups() {
        println!("group {} start={} len={}", g.name, g.start, g.len);
    }
    println!("wrote {}", out_dir.join("qubo.coo").display());
    println!("wrote {}", out_dir.join("qubo.json").display());
    println!("wrote {}", out_dir.join("ising.json").display());
    Ok(())
}

fn resolve_out_dir(experiment: &Experiment, out: Option<PathBuf>) -> Result<PathBuf> {
    let dir = out
        .or_else(|| {
            experiment
                .config
                .out_dir
                .as_ref()
                .map(|d| experiment.base_dir.join(d))
        })
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct SolutionDoc {
    m: usize,
    backend: &'static str,
    h_best: f64,
    /// Energy plus the problem constant.
    objective_value: f64,
    xi_best: Vec<u8>,
    samples: Vec<SampleDoc>,
}

#[derive(Serialize)]
struct SampleDoc {
    xi: Vec<u8>,
    h: f64,
}

fn solution_doc(problem: &QuboProblem, result: &SolveResult, backend: &'static str) -> SolutionDoc {
    SolutionDoc {
        m: problem.m(),
        backend,
        h_best: result.h_best,
        objective_value: result.h_best + problem.constant(),
        xi_best: result.xi_best.clone(),
        samples: result
            .samples
            .iter()
            .map(|(xi, h)| SampleDoc {
                xi: xi.clone(),
                h: *h,
            })
            .collect(),
    }
}

/// Solve a problem file and emit the solution JSON (timings go to stderr so
/// the document is reproducible).
pub fn cmd_solve(
    qubo_path: &Path,
    backend: BackendKind,
    schedule: SaSchedule,
    out: Option<PathBuf>,
) -> Result<()> {
    let problem = qubo::io::read_problem_file(qubo_path)?;
    let (result, label): (SolveResult, &'static str) = match backend {
        BackendKind::Exhaustive => (solve_exhaustive(&problem)?, "exhaustive"),
        BackendKind::Sa => (solve_sa(&problem, &schedule)?, "sa"),
        BackendKind::Classical => {
            return Err(Error::Config(
                "the classical backend minimizes the continuous problem; \
                 it cannot solve a compiled problem file"
                    .into(),
            ))
        }
    };
    let doc = solution_doc(&problem, &result, label);
    let text = serde_json::to_string_pretty(&doc).expect("solution serializes");
    match out {
        Some(path) => {
            fs::write(&path, &text)?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    eprintln!(
        "{label}: m={} h_best={} wall={:.3}ms",
        problem.m(),
        result.h_best,
        result.wall_s * 1e3
    );
    Ok(())
}

/// Run the closed loop and write the trajectory and metrics files.
pub fn cmd_simulate(config_path: &Path, out: Option<PathBuf>, ov: &Overrides) -> Result<()> {
    let experiment = Experiment::load(config_path)?;
    let sim_cfg = experiment.sim(ov)?;
    let trajectory = run_closed_loop(&sim_cfg)?;
    let metrics = compute_metrics(&trajectory, &sim_cfg.mpc);

    let out_dir = resolve_out_dir(&experiment, out)?;
    let csv_path = out_dir.join("trajectory.csv");
    fs::write(&csv_path, trajectory.to_csv_string())?;
    let metrics_path = out_dir.join("metrics.json");
    fs::write(&metrics_path, metrics.to_json_string())?;

    let last = trajectory.steps.last().expect("at least one step");
    println!(
        "steps={} backend={} final_x={:?} rms_error={:.6} total_cost={:.6}",
        metrics.steps,
        metrics.backend,
        last.x.as_slice(),
        metrics.rms_tracking_error,
        metrics.total_cost
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", metrics_path.display());
    Ok(())
}

/// Convert a problem file between formats.
pub fn cmd_export(qubo_path: &Path, format: &str, out: &Path) -> Result<()> {
    let problem = qubo::io::read_problem_file(qubo_path)?;
    match format {
        "coo" => qubo::io::write_coo_file(&problem, out)?,
        "json" => qubo::io::write_json_file(&problem, out)?,
        "ising" => qubo::io::write_ising_json_file(&problem, out)?,
        other => {
            return Err(Error::Config(format!(
                "unknown export format {other:?}; expected coo, json or ising"
            )))
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}
