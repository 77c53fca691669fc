//! Strong-solution integrator: advances the coupled system over each time
//! window by fixed-point iteration on the linearized problems.
//!
//! One window of length `T_w = k·dt` starts from the previous iterate
//! frozen over the window (initially the window's initial data held
//! constant). Each sweep time-marches the two linear problems across the
//! window with right-hand sides
//!
//! ```text
//! momentum:  −uⁿ·∇uⁿ − λ·div(FⁿᵀFⁿ)        (Stokes step)
//! matrix:    −uⁿ·∇Fⁿ − Fⁿ∇uⁿ               (heat step)
//! ```
//!
//! evaluated from iterate n at the target time level, and the successive
//! difference δUⁿ is measured as the sup over sub-steps of the Lq norms
//! plus the p-integrated W^{2,q}-proxy increments. Contraction of δUⁿ is
//! the discrete shadow of the small-window Cauchy estimate; the window
//! length controls the contraction factor, which `contraction_study`
//! measures.

use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsSink};
use crate::field::{FieldData, State, VectorField};
use crate::linsolve::{heat_step, stokes_step, LinearSolveConfig, LinearSolveError};
use crate::ops;

/// Pointwise body force for manufactured-solution runs: maps `(t, x)` to a
/// velocity-space vector.
pub type Forcing = dyn Fn(f64, [f64; 3]) -> [f64; 3];

#[derive(Clone, Copy, Debug)]
pub struct PicardConfig {
    /// Window length; defaults to one time step (per-step iteration).
    pub window: f64,
    /// Inner time step.
    pub dt: f64,
    /// Relative stopping threshold on δU.
    pub tol_fixed_point: f64,
    /// Iteration cap per window.
    pub max_picard: usize,
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Time exponent of the mixed norm.
    pub p: f64,
    /// Space exponent; the default pair (2, 6) satisfies
    /// `2/p·(1 − 3/q) = 1/2`.
    pub q: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        let dt = 1e-3;
        PicardConfig {
            window: dt,
            dt,
            tol_fixed_point: 1e-10,
            max_picard: 50,
            mu: 1.0,
            lambda: 1.0,
            gamma: 1.0,
            p: 2.0,
            q: 6.0,
        }
    }
}

impl PicardConfig {
    pub fn with_dt(dt: f64) -> Self {
        PicardConfig { window: dt, dt, ..Default::default() }
    }

    fn steps_per_window(&self) -> usize {
        assert!(self.dt > 0.0 && self.window >= self.dt, "need 0 < dt <= window");
        let k = (self.window / self.dt).round() as usize;
        k.max(1)
    }
}

/// Successive-difference trace of one window's iteration.
#[derive(Clone, Debug, Default)]
pub struct PicardTrace {
    /// δU¹, δU², … between consecutive iterates.
    pub deltas: Vec<f64>,
    /// `ratios[i] = deltas[i+1]/deltas[i]`, `None` where the denominator
    /// vanishes.
    pub ratios: Vec<Option<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

impl PicardTrace {
    fn push_delta(&mut self, d: f64) {
        if let Some(&last) = self.deltas.last() {
            self.ratios.push(if last > 0.0 { Some(d / last) } else { None });
        }
        self.deltas.push(d);
    }

    /// Geometric mean of the ratios whose numerator and denominator both
    /// exceed `floor` (keeps roundoff jitter out); NaN when none qualify.
    pub fn mean_ratio(&self, floor: f64) -> f64 {
        let mut log_sum = 0.0;
        let mut count = 0usize;
        for i in 1..self.deltas.len() {
            let (prev, cur) = (self.deltas[i - 1], self.deltas[i]);
            if prev > floor && cur > floor {
                log_sum += (cur / prev).ln();
                count += 1;
            }
        }
        if count == 0 {
            f64::NAN
        } else {
            (log_sum / count as f64).exp()
        }
    }
}

#[derive(Debug, Error)]
pub enum PicardError {
    #[error("Picard iteration diverged at t = {t} after {} iterations", trace.iterations)]
    Diverged { t: f64, trace: PicardTrace },
    #[error("Picard iteration hit the cap at t = {t} without meeting the tolerance")]
    Stalled { t: f64, trace: PicardTrace },
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
}

/// One trajectory over a window: states at `t₀, t₀+dt, …, t₀+k·dt`.
type Trajectory = Vec<State>;

fn sample_forcing(state: &State, forcing: Option<&Forcing>, t: f64) -> Option<VectorField> {
    forcing.map(|f| VectorField::from_fn(state.grid(), |x| f(t, x)))
}

/// March the linear problems across the window against the frozen iterate.
fn sweep(
    initial: &State,
    frozen: &Trajectory,
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
    forcing: Option<&Forcing>,
) -> Result<Trajectory, LinearSolveError> {
    let k = frozen.len() - 1;
    let mut traj: Trajectory = Vec::with_capacity(k + 1);
    traj.push(initial.clone());
    for m in 0..k {
        let t_next = initial.t + (m + 1) as f64 * cfg.dt;
        let src = &frozen[m + 1];
        // momentum right-hand side from the frozen iterate
        let mut rhs_u = ops::advect(&src.u, &src.u);
        rhs_u.scale(-1.0);
        rhs_u.axpy(-cfg.lambda, &ops::elastic_stress(&src.f));
        if let Some(f) = sample_forcing(initial, forcing, t_next) {
            rhs_u.axpy(1.0, &f);
        }
        let (u_next, p_next, _) = stokes_step(&traj[m].u, &rhs_u, cfg.dt, cfg.mu, lincfg)?;
        // matrix right-hand side from the frozen iterate
        let mut rhs_f = ops::advect(&src.u, &src.f);
        rhs_f.scale(-1.0);
        rhs_f.axpy(-1.0, &ops::stretch(&src.f, &src.u));
        let (f_next, _) = heat_step(&traj[m].f, &rhs_f, cfg.dt, cfg.gamma, lincfg)?;
        traj.push(State { t: t_next, u: u_next, f: f_next, p: p_next });
    }
    Ok(traj)
}

/// δU between two trajectories: sup over sub-steps of the Lq distance plus
/// the p-integrated W^{2,q}-proxy increments.
fn trajectory_delta(a: &Trajectory, b: &Trajectory, cfg: &PicardConfig) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sup = 0.0f64;
    let mut int_p = 0.0f64;
    for m in 0..a.len() {
        let mut du = a[m].u.clone();
        du.axpy(-1.0, &b[m].u);
        let mut df = a[m].f.clone();
        df.axpy(-1.0, &b[m].f);
        sup = sup.max(diagnostics::norm_lq(&du, cfg.q) + diagnostics::norm_lq(&df, cfg.q));
        if m > 0 {
            int_p += cfg.dt
                * (diagnostics::norm_w2q_proxy(&du, cfg.q).powf(cfg.p)
                    + diagnostics::norm_w2q_proxy(&df, cfg.q).powf(cfg.p));
        }
    }
    sup + int_p.powf(1.0 / cfg.p)
}

/// Same functional applied to one trajectory; sets the relative scale.
fn trajectory_size(a: &[State], cfg: &PicardConfig) -> f64 {
    let mut sup = 0.0f64;
    let mut int_p = 0.0f64;
    for (m, s) in a.iter().enumerate() {
        sup = sup.max(diagnostics::norm_lq(&s.u, cfg.q) + diagnostics::norm_lq(&s.f, cfg.q));
        if m > 0 {
            int_p += cfg.dt
                * (diagnostics::norm_w2q_proxy(&s.u, cfg.q).powf(cfg.p)
                    + diagnostics::norm_w2q_proxy(&s.f, cfg.q).powf(cfg.p));
        }
    }
    sup + int_p.powf(1.0 / cfg.p)
}

/// Iterate one window to its fixed point. Returns the end-of-window state
/// and the trace; `trace.converged` is false when `max_picard` sweeps were
/// exhausted without the tolerance (left to the caller to escalate).
///
/// Errors with `Diverged` after three consecutive increases of δU above
/// the roundoff floor; large windows can legitimately do this.
pub fn picard_iterate_window(
    initial: &State,
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
    forcing: Option<&Forcing>,
) -> Result<(State, PicardTrace), PicardError> {
    let k = cfg.steps_per_window();
    let mut frozen: Trajectory = (0..=k)
        .map(|m| {
            let mut s = initial.clone();
            s.t = initial.t + m as f64 * cfg.dt;
            s
        })
        .collect();
    let mut trace = PicardTrace::default();
    let mut increases = 0usize;
    for _n in 1..=cfg.max_picard {
        let traj = sweep(initial, &frozen, cfg, lincfg, forcing)?;
        let delta = trajectory_delta(&traj, &frozen, cfg);
        let scale = trajectory_size(&traj, cfg);
        let floor = 1e-13 * scale;
        if let Some(&last) = trace.deltas.last() {
            if delta > last && delta > floor {
                increases += 1;
            } else {
                increases = 0;
            }
        }
        trace.push_delta(delta);
        trace.iterations += 1;
        frozen = traj;
        if increases >= 3 {
            return Err(PicardError::Diverged { t: initial.t, trace });
        }
        if delta <= cfg.tol_fixed_point * scale {
            trace.converged = true;
            break;
        }
    }
    let end = frozen.pop().expect("window has at least the initial state");
    Ok((end, trace))
}

/// Advance to `t_end` window by window, emitting one diagnostics record
/// per window (including one for the initial state). A window that stalls
/// below tolerance is escalated to an error; no partially-converged state
/// is silently accepted.
pub fn advance(
    state: &State,
    t_end: f64,
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
    forcing: Option<&Forcing>,
    sink: &mut dyn DiagnosticsSink,
) -> Result<State, PicardError> {
    assert!(t_end > state.t, "t_end must lie ahead of the state");
    let k_window = cfg.steps_per_window();
    let total_steps = ((t_end - state.t) / cfg.dt).round().max(1.0) as usize;

    let mut records = Vec::new();
    let mut rec = diagnostics::record_for(state, None, (0, f64::NAN), cfg.q);
    records.push(rec.clone());
    rec.h_value = diagnostics::h_functional(&records, cfg.p, cfg.q).expect("nonempty");
    records.last_mut().unwrap().h_value = rec.h_value;
    sink.record(&rec, state);

    let mut current = state.clone();
    let mut prev_emitted = state.clone();
    let mut steps_done = 0usize;
    while steps_done < total_steps {
        let k = k_window.min(total_steps - steps_done);
        let wcfg = PicardConfig { window: k as f64 * cfg.dt, ..*cfg };
        let (next, trace) = picard_iterate_window(&current, &wcfg, lincfg, forcing)?;
        if !trace.converged {
            return Err(PicardError::Stalled { t: current.t, trace });
        }
        steps_done += k;
        current = next;
        let scale = trajectory_size(std::slice::from_ref(&current), cfg);
        let mean_ratio = trace.mean_ratio(1e-13 * scale.max(1e-300));
        let mut rec = diagnostics::record_for(
            &current,
            Some(&prev_emitted),
            (trace.iterations as u32, mean_ratio),
            cfg.q,
        );
        records.push(rec.clone());
        rec.h_value = diagnostics::h_functional(&records, cfg.p, cfg.q).expect("nonempty");
        records.last_mut().unwrap().h_value = rec.h_value;
        sink.record(&rec, &current);
        prev_emitted = current.clone();
    }
    Ok(current)
}

/// One row of a window-length contraction study.
#[derive(Clone, Copy, Debug)]
pub struct ContractionRow {
    pub window: f64,
    pub mean_ratio: f64,
    pub iterations: usize,
}

/// Result of `contraction_study`: per-window geometric-mean contraction
/// ratios and the least-squares slope of `log ρ` against `log T` (NaN for
/// degenerate studies). No pass/fail judgement on the exponent itself.
#[derive(Clone, Debug)]
pub struct ContractionTable {
    pub rows: Vec<ContractionRow>,
    pub slope: f64,
    pub fit_residual: f64,
}

/// Run one window per requested length (ascending) from the same initial
/// state and record the measured contraction ratios.
pub fn contraction_study(
    initial: &State,
    windows: &[f64],
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
) -> Result<ContractionTable, PicardError> {
    assert!(windows.windows(2).all(|w| w[0] < w[1]), "windows must ascend");
    let mut rows = Vec::with_capacity(windows.len());
    for &w in windows {
        let wcfg = PicardConfig { window: w, ..*cfg };
        let (_state, trace) = picard_iterate_window(initial, &wcfg, lincfg, None)?;
        let scale = trajectory_size(std::slice::from_ref(initial), cfg).max(1e-300);
        rows.push(ContractionRow {
            window: w,
            mean_ratio: trace.mean_ratio(1e-13 * scale),
            iterations: trace.iterations,
        });
    }
    // least squares of ln(ratio) against ln(window)
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean_ratio.is_finite() && r.mean_ratio > 0.0)
        .map(|r| (r.window.ln(), r.mean_ratio.ln()))
        .collect();
    let (slope, fit_residual) = if pts.len() < 2 {
        (f64::NAN, f64::NAN)
    } else {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icept = (sy - slope * sx) / n;
        let rss: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - icept).powi(2)).sum();
        (slope, (rss / n).sqrt())
    };
    Ok(ContractionTable { rows, slope, fit_residual })
}

/// Advance two states with identical settings and return the maximum over
/// stored times of the L² distance between the trajectories (u and F).
/// Bitwise-identical inputs give exactly zero by determinism.
pub fn uniqueness_regression(
    s1: &State,
    s2: &State,
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
    t_end: f64,
) -> Result<f64, PicardError> {
    assert_eq!(s1.grid(), s2.grid(), "states must share a grid");
    let mut sink1 = diagnostics::MemorySink::keeping_states();
    let mut sink2 = diagnostics::MemorySink::keeping_states();
    advance(s1, t_end, cfg, lincfg, None, &mut sink1)?;
    advance(s2, t_end, cfg, lincfg, None, &mut sink2)?;
    let a = sink1.states.as_ref().unwrap();
    let b = sink2.states.as_ref().unwrap();
    let mut worst = 0.0f64;
    for (sa, sb) in a.iter().zip(b.iter()) {
        let vol = sa.grid().cell_volume();
        let mut du = sa.u.clone();
        du.axpy(-1.0, &sb.u);
        let mut df = sa.f.clone();
        df.axpy(-1.0, &sb.f);
        worst = worst.max(((du.dot(&du) + df.dot(&df)) * vol).sqrt());
    }
    Ok(worst)
}

/// Advance the coupled system while co-evolving a director field by the
/// implicit transport-diffusion step with iterated frozen advection. Used
/// by the formulation-equivalence checks (periodic scenarios, one-step
/// windows): the mapped gradient `∇d` must shadow the directly evolved F.
/// Also returns the largest curl residual of F seen along the run.
pub fn advance_with_director(
    state: &State,
    d0: &VectorField,
    t_end: f64,
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
) -> Result<(State, VectorField, f64), PicardError> {
    assert_eq!(cfg.steps_per_window(), 1, "director co-evolution runs per-step windows");
    let total_steps = ((t_end - state.t) / cfg.dt).round().max(1.0) as usize;
    let mut current = state.clone();
    let mut d = d0.clone();
    let mut max_curl = ops::curl_residual(&current.f);
    for _ in 0..total_steps {
        let (next, trace) = picard_iterate_window(&current, cfg, lincfg, None)?;
        if !trace.converged {
            return Err(PicardError::Stalled { t: current.t, trace });
        }
        // implicit step for d with the converged end-of-step velocity
        let mut frozen = d.clone();
        let mut d_next = d.clone();
        for _ in 0..cfg.max_picard {
            let mut rhs = ops::advect(&next.u, &frozen);
            rhs.scale(-1.0);
            let (cand, _) = heat_step(&d, &rhs, cfg.dt, cfg.gamma, lincfg)?;
            let mut diff = cand.clone();
            diff.axpy(-1.0, &frozen);
            let moved = diagnostics::norm_lq(&diff, 2.0);
            let scale = diagnostics::norm_lq(&cand, 2.0).max(1e-300);
            d_next = cand.clone();
            frozen = cand;
            if moved <= cfg.tol_fixed_point * scale {
                break;
            }
        }
        d = d_next;
        current = next;
        max_curl = max_curl.max(ops::curl_residual(&current.f));
    }
    Ok((current, d, max_curl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryMode, Grid};

    fn small_grid() -> Grid {
        Grid::new(2, &[8, 8], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap()
    }

    #[test]
    fn zero_state_is_a_bitwise_fixed_point_in_one_iteration() {
        let g = small_grid();
        let z = State::zero(&g);
        let cfg = PicardConfig::default();
        let lincfg = LinearSolveConfig::default();
        let (out, trace) = picard_iterate_window(&z, &cfg, &lincfg, None).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations, 1);
        assert_eq!(trace.deltas, vec![0.0]);
        // bitwise zero fields
        assert!(out.u.components().iter().all(|c| c.iter().all(|&v| v == 0.0)));
        assert!(out.f.components().iter().all(|c| c.iter().all(|&v| v == 0.0)));
        assert!(out.p.components().iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn advance_zero_state_stays_zero_and_emits_records() {
        let g = small_grid();
        let z = State::zero(&g);
        let cfg = PicardConfig::with_dt(1e-2);
        let lincfg = LinearSolveConfig::default();
        let mut sink = diagnostics::MemorySink::new();
        let out = advance(&z, 5e-2, &cfg, &lincfg, None, &mut sink).unwrap();
        assert_eq!(sink.records.len(), 6);
        assert!(sink.records.iter().all(|r| r.energy == 0.0 && r.dissipation == 0.0));
        assert_eq!(out.u.linf(), 0.0);
        assert!((out.t - 5e-2).abs() < 1e-12);
    }

    #[test]
    fn identical_states_stay_identical() {
        let g = small_grid();
        let s = {
            let mut s = State::zero(&g);
            s.u = VectorField::from_fn(&g, |x| {
                let b = |v: f64| v * v * (1.0 - v) * (1.0 - v);
                [1e-3 * b(x[0]) * b(x[1]), -1e-3 * b(x[0]) * b(x[1]), 0.0]
            });
            s
        };
        let cfg = PicardConfig::with_dt(1e-3);
        let lincfg = LinearSolveConfig::default();
        let dist = uniqueness_regression(&s, &s.clone(), &cfg, &lincfg, 3e-3).unwrap();
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn single_window_study_is_degenerate() {
        let g = small_grid();
        let z = State::zero(&g);
        let cfg = PicardConfig::default();
        let table =
            contraction_study(&z, &[1e-3], &cfg, &LinearSolveConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.slope.is_nan());
    }
}
