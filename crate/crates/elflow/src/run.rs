//! Run orchestration: config in, CSV series, optional snapshots, the
//! weak-strong comparison report, and exactly one summary per run.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{load_config, ConfigError, Integrator, RunConfig};
use crate::diagnostics::{
    self, energy_inequality_check, gronwall_compare, DiagnosticsRecord, MemorySink,
};
use crate::field::State;
use crate::io::{self, atomic_write, IoError, RunStatus, RunSummary};
use crate::linsolve::LinearSolveConfig;
use crate::picard::{self, PicardConfig};
use crate::scenario::ScenarioError;
use crate::verify::GRONWALL_DEFECT_A;
use crate::weak::{self, WeakConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("scenario construction failed: {0}")]
    Scenario(#[from] ScenarioError),
}

fn picard_config(cfg: &RunConfig) -> PicardConfig {
    let sc = &cfg.scenario;
    PicardConfig {
        window: cfg.window_steps as f64 * sc.dt,
        dt: sc.dt,
        tol_fixed_point: cfg.picard_tol,
        max_picard: cfg.max_picard,
        mu: sc.mu,
        lambda: sc.lambda,
        gamma: sc.gamma,
        p: 2.0,
        q: 6.0,
    }
}

fn weak_config(cfg: &RunConfig) -> WeakConfig {
    let sc = &cfg.scenario;
    WeakConfig {
        dt: sc.dt,
        mu: sc.mu,
        lambda: sc.lambda,
        gamma: sc.gamma,
        cfl_safety: 0.5,
        q: 6.0,
        p: 2.0,
    }
}

fn write_series_outputs(
    out_dir: &Path,
    label: &str,
    records: &[DiagnosticsRecord],
    states: &[State],
    snapshot_every: usize,
) -> Result<(), IoError> {
    atomic_write(&out_dir.join(format!("diagnostics_{label}.csv")), io::csv_text(records).as_bytes())?;
    if snapshot_every > 0 {
        for (i, state) in states.iter().enumerate() {
            if i % snapshot_every == 0 {
                let path = out_dir.join(format!("snapshots_{label}/snap_{i:06}.elf1"));
                io::write_snapshot(&path, state)?;
            }
        }
    }
    Ok(())
}

/// Execute the configured run. Configuration problems abort before any
/// output exists; solver failures are recorded in the summary with a
/// nonzero status and partial series are still written.
pub fn run(config_path: &Path) -> Result<RunSummary, RunError> {
    let cfg = load_config(config_path)?;
    run_with_config(&cfg)
}

pub fn run_with_config(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let sc = &cfg.scenario;
    let lincfg = LinearSolveConfig::with_tol(cfg.lin_tol);
    let initial = sc.initial_state(&lincfg)?;
    let out_dir: PathBuf = cfg.out_dir.clone();
    let forcing = sc.forcing();
    let forcing_ref = forcing.as_deref();

    let mut summary = RunSummary {
        scenario: sc.name.clone(),
        config_hash: cfg.hash(),
        final_time: initial.t,
        worst_energy_margin: 0.0,
        max_div_residual: 0.0,
        h_at_end: 0.0,
        picard_total_iters: 0,
        picard_max_iters: 0,
        exit: RunStatus::Ok,
        error: None,
    };

    let mut picard_sink = MemorySink::keeping_states();
    let mut weak_sink = MemorySink::keeping_states();

    if matches!(cfg.integrator, Integrator::Picard | Integrator::Both) {
        let pcfg = picard_config(cfg);
        match picard::advance(&initial, sc.t_end, &pcfg, &lincfg, forcing_ref, &mut picard_sink) {
            Ok(final_state) => summary.final_time = final_state.t,
            Err(err) => {
                summary.exit = RunStatus::SolverDiverged;
                summary.error = Some(err.to_string());
            }
        }
    }
    if summary.exit == RunStatus::Ok
        && matches!(cfg.integrator, Integrator::Weak | Integrator::Both)
    {
        let wcfg = weak_config(cfg);
        match weak::weak_advance(&initial, sc.t_end, &wcfg, &lincfg, forcing_ref, &mut weak_sink) {
            Ok(final_state) => summary.final_time = summary.final_time.max(final_state.t),
            Err(err) => {
                summary.exit = RunStatus::SolverDiverged;
                summary.error = Some(err.to_string());
            }
        }
    }

    // primary series for the summary metrics
    let primary: &[DiagnosticsRecord] = if picard_sink.records.is_empty() {
        &weak_sink.records
    } else {
        &picard_sink.records
    };
    if !primary.is_empty() {
        if let Ok(check) = energy_inequality_check(primary, f64::INFINITY) {
            summary.worst_energy_margin = check.worst_margin;
        }
        summary.max_div_residual =
            primary.iter().map(|r| r.div_residual).fold(0.0, f64::max);
        summary.h_at_end = primary.last().unwrap().h_value;
        summary.picard_total_iters = primary.iter().map(|r| r.picard_iters as u64).sum();
        summary.picard_max_iters = primary.iter().map(|r| r.picard_iters).max().unwrap_or(0);
    }

    if !picard_sink.records.is_empty() {
        write_series_outputs(
            &out_dir,
            "picard",
            &picard_sink.records,
            picard_sink.states.as_deref().unwrap_or(&[]),
            sc.snapshot_every,
        )?;
    }
    if !weak_sink.records.is_empty() {
        write_series_outputs(
            &out_dir,
            "weak",
            &weak_sink.records,
            weak_sink.states.as_deref().unwrap_or(&[]),
            sc.snapshot_every,
        )?;
    }

    // weak-strong comparison when both trajectories completed
    if cfg.integrator == Integrator::Both && summary.exit == RunStatus::Ok {
        let grid = sc.grid().map_err(ScenarioError::from)?;
        let h = (0..grid.dim()).map(|a| grid.h(a)).fold(f64::NEG_INFINITY, f64::max);
        let defect_base = GRONWALL_DEFECT_A * (sc.dt + h * h).powi(2);
        let report = gronwall_compare(
            &picard_sink.records,
            &weak_sink.records,
            picard_sink.states.as_deref().unwrap_or(&[]),
            weak_sink.states.as_deref().unwrap_or(&[]),
            cfg.c_env,
            defect_base,
        );
        match report {
            Ok(rep) => {
                let mut text = String::from("t,x,bound\n");
                for i in 0..rep.times.len() {
                    text.push_str(&format!(
                        "{},{},{}\n",
                        io::fmt_f64(rep.times[i]),
                        io::fmt_f64(rep.x[i]),
                        io::fmt_f64(rep.bound[i])
                    ));
                }
                text.push_str(&format!("# pass = {}\n", rep.pass));
                if let Some(t) = rep.first_violation {
                    text.push_str(&format!("# first_violation = {}\n", io::fmt_f64(t)));
                }
                atomic_write(&out_dir.join("gronwall.csv"), text.as_bytes())?;
            }
            Err(err) => {
                summary.error.get_or_insert_with(|| err.to_string());
            }
        }
    }

    // integrability of the Grönwall weight, recorded alongside the summary
    let mut summary_text = summary.to_text();
    if !primary.is_empty() {
        if let Ok(g_int) = diagnostics::integrability_check(primary, cfg.c_env) {
            summary_text.push_str(&format!("gronwall_weight_integral = {}\n", io::fmt_f64(g_int)));
        }
    }
    atomic_write(&out_dir.join("summary.txt"), summary_text.as_bytes())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_text;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("elflow-run-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn zero_scenario_run_produces_clean_summary() {
        let dir = tmp_dir("zero");
        let cfg = parse_config_text(&format!(
            "scenario = zero\nt_end = 5e-3\ndt = 1e-3\nout_dir = {}\n",
            dir.display()
        ))
        .unwrap();
        let summary = run_with_config(&cfg).unwrap();
        assert_eq!(summary.exit, RunStatus::Ok);
        assert_eq!(summary.worst_energy_margin, 0.0);
        assert_eq!(summary.max_div_residual, 0.0);
        assert!(dir.join("diagnostics_picard.csv").is_file());
        assert!(dir.join("summary.txt").is_file());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn both_integrators_emit_two_series_and_a_comparison() {
        let dir = tmp_dir("both");
        let cfg = parse_config_text(&format!(
            "scenario = small_vortex\nn = 8\nt_end = 3e-3\ndt = 1e-3\nintegrator = both\nout_dir = {}\n",
            dir.display()
        ))
        .unwrap();
        let summary = run_with_config(&cfg).unwrap();
        assert_eq!(summary.exit, RunStatus::Ok, "error: {:?}", summary.error);
        assert!(dir.join("diagnostics_picard.csv").is_file());
        assert!(dir.join("diagnostics_weak.csv").is_file());
        assert!(dir.join("gronwall.csv").is_file());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unreadable_config_leaves_no_outputs() {
        let missing = Path::new("/nonexistent/elflow.conf");
        assert!(matches!(run(missing), Err(RunError::Config(ConfigError::Io { .. }))));
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let dir_a = tmp_dir("det-a");
        let dir_b = tmp_dir("det-b");
        for dir in [&dir_a, &dir_b] {
            let cfg = parse_config_text(&format!(
                "scenario = small_vortex\nn = 8\nt_end = 3e-3\ndt = 1e-3\nout_dir = {}\n",
                dir.display()
            ))
            .unwrap();
            run_with_config(&cfg).unwrap();
        }
        let a = std::fs::read(dir_a.join("diagnostics_picard.csv")).unwrap();
        let b = std::fs::read(dir_b.join("diagnostics_picard.csv")).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir_a).unwrap();
        std::fs::remove_dir_all(&dir_b).unwrap();
    }
}
