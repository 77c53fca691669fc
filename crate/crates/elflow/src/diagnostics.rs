//! Scalar functionals over states and stored time series: discrete norms,
//! the energy/dissipation pair, the existence functional H, and the
//! Grönwall-envelope comparison of two trajectories.
//!
//! Energy is `E = ½∫(|u|² + |F|²)` and dissipation `D = ∫(|∇u|² + |∇F|²)`,
//! the pairing under which strong solutions satisfy `E(t) + ∫₀ᵗD = E(0)`
//! and weak solutions the corresponding inequality. The dissipation uses
//! the face-based discrete gradient (the Dirichlet form of the compact
//! Laplacian); the general-exponent norms below use centered differences.

use thiserror::Error;

use crate::field::{FieldData, State, VectorField};
use crate::grid::Grid;
use crate::ops::{self, d1_component, d1d1_component, d2_component};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("series is empty")]
    EmptySeries,
    #[error("series disagree at index {index}: t = {t_a} vs {t_b}")]
    MismatchedSeries { index: usize, t_a: f64, t_b: f64 },
}

/// Volume-weighted Lq norm over interior cells and all components;
/// `q = f64::INFINITY` gives the max-norm. Panics for q < 1.
pub fn norm_lq<F: FieldData>(field: &F, q: f64) -> f64 {
    assert!(q >= 1.0, "Lq norms need q >= 1");
    if q.is_infinite() {
        return field.linf();
    }
    let grid = *field.grid();
    let vol = grid.cell_volume();
    let mut s = 0.0;
    for comp in field.components() {
        grid.for_each_interior(|flat, _| {
            s += comp[flat].abs().powf(q);
        });
    }
    (s * vol).powf(1.0 / q)
}

/// Lq norm of the centered gradient (all components, all axes).
pub fn norm_grad_lq<F: FieldData>(field: &F, q: f64) -> f64 {
    let grid = *field.grid();
    let vol = grid.cell_volume();
    let mut buf = vec![0.0; grid.padded_len()];
    let mut mag2 = vec![0.0; grid.padded_len()];
    for comp in field.components() {
        for a in 0..grid.dim() {
            d1_component(&grid, comp, a, &mut buf);
            grid.for_each_interior(|flat, _| mag2[flat] += buf[flat] * buf[flat]);
        }
    }
    if q.is_infinite() {
        let mut m: f64 = 0.0;
        grid.for_each_interior(|flat, _| m = m.max(mag2[flat]));
        return m.sqrt();
    }
    let mut s = 0.0;
    grid.for_each_interior(|flat, _| s += mag2[flat].powf(q / 2.0));
    (s * vol).powf(1.0 / q)
}

/// Max-norm of the centered gradient.
pub fn norm_grad_linf<F: FieldData>(field: &F) -> f64 {
    norm_grad_lq(field, f64::INFINITY)
}

/// Lq norm of all centered second differences (Hessian Frobenius norm
/// pointwise, mixed derivatives counted for each ordered pair).
pub fn norm_d2_lq<F: FieldData>(field: &F, q: f64) -> f64 {
    let grid = *field.grid();
    let vol = grid.cell_volume();
    let mut buf = vec![0.0; grid.padded_len()];
    let mut mag2 = vec![0.0; grid.padded_len()];
    for comp in field.components() {
        for a in 0..grid.dim() {
            for b in 0..grid.dim() {
                if a == b {
                    d2_component(&grid, comp, a, &mut buf);
                } else {
                    d1d1_component(&grid, comp, a, b, &mut buf);
                }
                grid.for_each_interior(|flat, _| mag2[flat] += buf[flat] * buf[flat]);
            }
        }
    }
    if q.is_infinite() {
        let mut m: f64 = 0.0;
        grid.for_each_interior(|flat, _| m = m.max(mag2[flat]));
        return m.sqrt();
    }
    let mut s = 0.0;
    grid.for_each_interior(|flat, _| s += mag2[flat].powf(q / 2.0));
    (s * vol).powf(1.0 / q)
}

/// Discrete W^{2,q} stand-in: `‖f‖_q + ‖∇f‖_q + ‖D²f‖_q`.
pub fn norm_w2q_proxy<F: FieldData>(field: &F, q: f64) -> f64 {
    norm_lq(field, q) + norm_grad_lq(field, q) + norm_d2_lq(field, q)
}

/// Low-order interpolation stand-in: `‖f‖_q + ‖∇f‖_q`.
pub fn norm_b_proxy<F: FieldData>(field: &F, q: f64) -> f64 {
    norm_lq(field, q) + norm_grad_lq(field, q)
}

/// Kinetic-plus-elastic energy `½∫(|u|² + |F|²)`.
pub fn energy(state: &State) -> f64 {
    let vol = state.grid().cell_volume();
    0.5 * (state.u.dot(&state.u) + state.f.dot(&state.f)) * vol
}

/// Discrete Dirichlet form `⟨-Δ_h f, f⟩`: face differences squared, wrap
/// faces at full weight, Dirichlet ghost faces at half weight. This is
/// the gradient norm conjugate to the compact Laplacian the implicit
/// steps use, so the scheme's energy balance closes up to O(dt) instead
/// of carrying a resolution-level bias.
pub fn dirichlet_form<F: FieldData>(field: &F) -> f64 {
    let grid = *field.grid();
    let vol = grid.cell_volume();
    let periodic = grid.boundary() == crate::grid::BoundaryMode::Periodic;
    let mut total = 0.0;
    for comp in field.components() {
        for a in 0..grid.dim() {
            let stride = grid.stride(a);
            let inv_h2 = 1.0 / (grid.h(a) * grid.h(a));
            let n_a = grid.n(a);
            grid.for_each_interior(|flat, c| {
                // face to the right of every cell; wrap faces count once
                let d = comp[flat + stride] - comp[flat];
                let w = if c[a] + 1 == n_a && !periodic { 0.5 } else { 1.0 };
                total += w * d * d * inv_h2;
                // Dirichlet grids also own the low boundary face
                if c[a] == 0 && !periodic {
                    let dl = comp[flat] - comp[flat - stride];
                    total += 0.5 * dl * dl * inv_h2;
                }
            });
        }
    }
    total * vol
}

/// Dissipation functional `∫(|∇u|² + |∇F|²)` in the face-based discrete
/// gradient (see `dirichlet_form`).
pub fn dissipation(state: &State) -> f64 {
    dirichlet_form(&state.u) + dirichlet_form(&state.f)
}

/// Per-step scalars stored for every emitted step of a run. The norm
/// fields carry everything the series functionals (`h_functional`,
/// `integrability_check`, the Grönwall envelope) need, so a stored CSV is
/// self-contained.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub div_residual: f64,
    pub pressure_mean: f64,
    pub picard_iters: u32,
    /// Geometric mean of the window's valid contraction ratios; NaN when
    /// no ratio was defined (zero data or single-iteration windows).
    pub picard_ratio: f64,
    pub norm_u_lq: f64,
    pub norm_f_lq: f64,
    pub norm_u_grad_lq: f64,
    pub norm_f_grad_lq: f64,
    pub norm_u_w2q: f64,
    pub norm_f_w2q: f64,
    pub norm_grad_p_lq: f64,
    /// Lq norm of the finite-difference time derivative against the
    /// previously stored snapshot (0 for the first record).
    pub norm_dtu_lq: f64,
    pub norm_dtf_lq: f64,
    pub norm_grad_u_linf: f64,
    pub norm_grad_f_linf: f64,
    pub norm_f_linf: f64,
    pub h_value: f64,
    pub curl_residual_f: f64,
}

/// Build the record for `state`; `prev` is the previously stored snapshot
/// (for the time-difference norms), `picard` the window's iteration count
/// and mean ratio.
pub fn record_for(
    state: &State,
    prev: Option<&State>,
    picard: (u32, f64),
    q: f64,
) -> DiagnosticsRecord {
    let (norm_dtu_lq, norm_dtf_lq) = match prev {
        Some(p) if state.t > p.t => {
            let dt = state.t - p.t;
            let mut du = state.u.clone();
            du.axpy(-1.0, &p.u);
            du.scale(1.0 / dt);
            let mut df = state.f.clone();
            df.axpy(-1.0, &p.f);
            df.scale(1.0 / dt);
            (norm_lq(&du, q), norm_lq(&df, q))
        }
        _ => (0.0, 0.0),
    };
    let grad_p = ops::grad_scalar(&state.p);
    DiagnosticsRecord {
        t: state.t,
        energy: energy(state),
        dissipation: dissipation(state),
        div_residual: ops::div_vector(&state.u).linf(),
        pressure_mean: state.p.mean(),
        picard_iters: picard.0,
        picard_ratio: picard.1,
        norm_u_lq: norm_lq(&state.u, q),
        norm_f_lq: norm_lq(&state.f, q),
        norm_u_grad_lq: norm_grad_lq(&state.u, q),
        norm_f_grad_lq: norm_grad_lq(&state.f, q),
        norm_u_w2q: norm_w2q_proxy(&state.u, q),
        norm_f_w2q: norm_w2q_proxy(&state.f, q),
        norm_grad_p_lq: norm_lq(&grad_p, q),
        norm_dtu_lq,
        norm_dtf_lq,
        norm_grad_u_linf: norm_grad_linf(&state.u),
        norm_grad_f_linf: norm_grad_linf(&state.f),
        norm_f_linf: state.f.linf(),
        h_value: 0.0,
        curl_residual_f: ops::curl_residual(&state.f),
    }
}

/// Existence functional over a stored series: p-integrated W^{2,q} proxies
/// of u and F plus the pressure gradient, p-integrated time-difference
/// norms, and the sup of the low-order proxies. Monotone in the horizon;
/// cadence-dependent through the snapshot differencing.
pub fn h_functional(series: &[DiagnosticsRecord], p: f64, _q: f64) -> Result<f64, DiagnosticsError> {
    if series.is_empty() {
        return Err(DiagnosticsError::EmptySeries);
    }
    let mut int_high = 0.0;
    let mut int_dt = 0.0;
    let mut sup_low: f64 = 0.0;
    for (i, rec) in series.iter().enumerate() {
        sup_low = sup_low
            .max(rec.norm_u_lq + rec.norm_u_grad_lq + rec.norm_f_lq + rec.norm_f_grad_lq);
        if i > 0 {
            let dt = rec.t - series[i - 1].t;
            assert!(dt > 0.0, "series time stamps must increase");
            int_high += dt
                * (rec.norm_u_w2q.powf(p) + rec.norm_f_w2q.powf(p) + rec.norm_grad_p_lq.powf(p));
            int_dt += dt * (rec.norm_dtu_lq.powf(p) + rec.norm_dtf_lq.powf(p));
        }
    }
    Ok(int_high.powf(1.0 / p) + int_dt.powf(1.0 / p) + sup_low)
}

/// Grönwall weight `G(t) = ‖∇u‖_∞ + ‖∇F‖_∞ + C_env·‖F‖²_∞` from a record.
fn gronwall_weight(rec: &DiagnosticsRecord, c_env: f64) -> f64 {
    rec.norm_grad_u_linf + rec.norm_grad_f_linf + c_env * rec.norm_f_linf * rec.norm_f_linf
}

/// Time integral of the Grönwall weight over the stored series (left
/// rectangles); finite by construction and reported per run.
pub fn integrability_check(series: &[DiagnosticsRecord], c_env: f64) -> Result<f64, DiagnosticsError> {
    if series.is_empty() {
        return Err(DiagnosticsError::EmptySeries);
    }
    let mut total = 0.0;
    for i in 1..series.len() {
        let dt = series[i].t - series[i - 1].t;
        total += dt * gronwall_weight(&series[i - 1], c_env);
    }
    Ok(total)
}

/// Exponential envelope `X₀·exp(∫₀ᵗ G)` accumulated over a series.
#[derive(Clone, Debug)]
pub struct GronwallEnvelope {
    pub times: Vec<f64>,
    pub g_values: Vec<f64>,
    pub envelope: Vec<f64>,
}

impl GronwallEnvelope {
    /// Build from the strong trajectory's records; `x0` is the base the
    /// envelope starts from (a consistency-defect bound when the two
    /// trajectories share initial data).
    pub fn from_series(series: &[DiagnosticsRecord], c_env: f64, x0: f64) -> Self {
        assert!(c_env >= 0.0, "envelope constant must be nonnegative");
        let mut times = Vec::with_capacity(series.len());
        let mut g_values = Vec::with_capacity(series.len());
        let mut envelope = Vec::with_capacity(series.len());
        let mut integral = 0.0;
        for (i, rec) in series.iter().enumerate() {
            if i > 0 {
                integral += (rec.t - series[i - 1].t) * gronwall_weight(&series[i - 1], c_env);
            }
            times.push(rec.t);
            g_values.push(gronwall_weight(rec, c_env));
            envelope.push(x0 * integral.exp());
        }
        GronwallEnvelope { times, g_values, envelope }
    }
}

/// Outcome of the weak-strong trajectory comparison.
#[derive(Clone, Debug)]
pub struct GronwallReport {
    pub times: Vec<f64>,
    /// `X(t) = ½‖u_s−u_w‖² + ½‖F_s−F_w‖²` plus the accumulated difference
    /// dissipation.
    pub x: Vec<f64>,
    pub bound: Vec<f64>,
    pub max_x: f64,
    pub pass: bool,
    pub first_violation: Option<f64>,
}

/// Compare two trajectories from identical initial data: the squared L²
/// distance plus accumulated difference dissipation must stay under the
/// inhomogeneous envelope `defect_base·exp(∫₀ᵗ G)` with G taken from the
/// strong trajectory. Series must share time stamps exactly.
pub fn gronwall_compare(
    strong: &[DiagnosticsRecord],
    weak: &[DiagnosticsRecord],
    states_strong: &[State],
    states_weak: &[State],
    c_env: f64,
    defect_base: f64,
) -> Result<GronwallReport, DiagnosticsError> {
    if strong.is_empty() || weak.is_empty() {
        return Err(DiagnosticsError::EmptySeries);
    }
    if strong.len() != weak.len() {
        return Err(DiagnosticsError::MismatchedSeries {
            index: strong.len().min(weak.len()),
            t_a: f64::NAN,
            t_b: f64::NAN,
        });
    }
    for (i, (a, b)) in strong.iter().zip(weak.iter()).enumerate() {
        if a.t != b.t {
            return Err(DiagnosticsError::MismatchedSeries { index: i, t_a: a.t, t_b: b.t });
        }
    }
    assert_eq!(states_strong.len(), strong.len(), "one state per record");
    assert_eq!(states_weak.len(), weak.len(), "one state per record");

    let envelope = GronwallEnvelope::from_series(strong, c_env, defect_base);
    let mut x = Vec::with_capacity(strong.len());
    let mut diff_dissipation = 0.0;
    let mut prev_t = strong[0].t;
    for i in 0..strong.len() {
        let ss = &states_strong[i];
        let sw = &states_weak[i];
        let vol = ss.grid().cell_volume();
        let mut du = ss.u.clone();
        du.axpy(-1.0, &sw.u);
        let mut df = ss.f.clone();
        df.axpy(-1.0, &sw.f);
        let dist = 0.5 * (du.dot(&du) + df.dot(&df)) * vol;
        if i > 0 {
            let dt = strong[i].t - prev_t;
            let gu = norm_grad_lq(&du, 2.0);
            let gf = norm_grad_lq(&df, 2.0);
            diff_dissipation += 0.5 * dt * (gu * gu + gf * gf);
            prev_t = strong[i].t;
        }
        x.push(dist + diff_dissipation);
    }
    let mut pass = true;
    let mut first_violation = None;
    let mut max_x: f64 = 0.0;
    for i in 0..x.len() {
        max_x = max_x.max(x[i]);
        if x[i] > envelope.envelope[i] && pass {
            pass = false;
            first_violation = Some(strong[i].t);
        }
    }
    Ok(GronwallReport { times: envelope.times, x, bound: envelope.envelope, max_x, pass, first_violation })
}

/// Margin report for the weak energy inequality
/// `E(t) + ∫₀ᵗ D ≤ E(0) + tol`.
#[derive(Clone, Debug)]
pub struct EnergyCheck {
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    pub pass: bool,
}

/// Per-time margins `m(t) = E(0) − E(t) − Σ dt·D`; passes iff the most
/// negative margin stays above `-tol_e`. Dissipation is accumulated with
/// right rectangles, matching the implicit step's balance.
pub fn energy_inequality_check(
    series: &[DiagnosticsRecord],
    tol_e: f64,
) -> Result<EnergyCheck, DiagnosticsError> {
    if series.is_empty() {
        return Err(DiagnosticsError::EmptySeries);
    }
    let e0 = series[0].energy;
    let mut acc = 0.0;
    let mut margins = Vec::with_capacity(series.len());
    let mut worst = f64::INFINITY;
    for (i, rec) in series.iter().enumerate() {
        if i > 0 {
            acc += (rec.t - series[i - 1].t) * rec.dissipation;
        }
        let m = e0 - rec.energy - acc;
        worst = worst.min(m);
        margins.push(m);
    }
    Ok(EnergyCheck { margins, worst_margin: worst, pass: worst >= -tol_e })
}

/// Receives one record per stored step of a run.
pub trait DiagnosticsSink {
    fn record(&mut self, rec: &DiagnosticsRecord, state: &State);
}

/// Collects records (and optionally state snapshots) in memory.
#[derive(Default)]
pub struct MemorySink {
    pub records: Vec<DiagnosticsRecord>,
    pub states: Option<Vec<State>>,
}

impl MemorySink {
    pub fn new() -> Self {
        MemorySink { records: Vec::new(), states: None }
    }

    pub fn keeping_states() -> Self {
        MemorySink { records: Vec::new(), states: Some(Vec::new()) }
    }
}

impl DiagnosticsSink for MemorySink {
    fn record(&mut self, rec: &DiagnosticsRecord, state: &State) {
        self.records.push(rec.clone());
        if let Some(states) = &mut self.states {
            states.push(state.clone());
        }
    }
}

/// Drops everything.
pub struct NullSink;

impl DiagnosticsSink for NullSink {
    fn record(&mut self, _rec: &DiagnosticsRecord, _state: &State) {}
}

/// Scenario-building helpers shared by the verification suites.
pub fn zero_record(t: f64) -> DiagnosticsRecord {
    DiagnosticsRecord {
        t,
        energy: 0.0,
        dissipation: 0.0,
        div_residual: 0.0,
        pressure_mean: 0.0,
        picard_iters: 0,
        picard_ratio: f64::NAN,
        norm_u_lq: 0.0,
        norm_f_lq: 0.0,
        norm_u_grad_lq: 0.0,
        norm_f_grad_lq: 0.0,
        norm_u_w2q: 0.0,
        norm_f_w2q: 0.0,
        norm_grad_p_lq: 0.0,
        norm_dtu_lq: 0.0,
        norm_dtf_lq: 0.0,
        norm_grad_u_linf: 0.0,
        norm_grad_f_linf: 0.0,
        norm_f_linf: 0.0,
        h_value: 0.0,
        curl_residual_f: 0.0,
    }
}

/// Discrete analog of the elliptic-regularity quotient
/// `‖u‖_{W^{2,q}} / ‖Δu‖_{L^q}`, surfaced as a diagnostic only; NaN for
/// zero fields, and no claim is made about its supremum over data.
pub fn w2q_to_laplacian_ratio<F: FieldData>(field: &F, q: f64) -> f64 {
    let denom = norm_lq(&crate::ops::laplacian(field), q);
    if denom == 0.0 {
        return f64::NAN;
    }
    norm_w2q_proxy(field, q) / denom
}

/// Divergence tolerance used when validating State invariants after a
/// projection with relative tolerance `tol`: the CG guarantee plus
/// roundoff headroom for the field's own magnitude.
pub fn divergence_tolerance(grid: &Grid, u: &VectorField, tol: f64) -> f64 {
    let scale = u.l2() * (0..grid.dim()).map(|a| 1.0 / grid.h(a)).sum::<f64>();
    (10.0 * tol * scale).max(1e-300)
}
