//! Linear sub-solvers: the backward-Euler Helmholtz operator, the pressure
//! Poisson problem, and the projection that enforces the divergence
//! constraint, composed into one Stokes step and one heat step.
//!
//! The pressure operator is the composite `A = -div_h(grad_h ·)` with the
//! pressure field extended evenly (homogeneous Neumann) and the gradient
//! field extended with zero trace. Under exactly these ghost rules the
//! centered gradient is the negative transpose of the centered divergence,
//! so A is symmetric positive semidefinite in both boundary modes and the
//! projected velocity satisfies `div_h u = -r` with r the CG residual.
//! Constant (and, on periodic grids, per-axis Nyquist) modes span the
//! nullspace; they are invisible to the reconstruction `u - grad φ`, and
//! divergence data is orthogonal to them by the same transpose identity.

use thiserror::Error;

use crate::field::{FieldData, GhostRule, ScalarField, VectorField};
use crate::grid::Grid;
use crate::ops::{self, d1_component, fill_raw};

#[derive(Clone, Copy, Debug)]
pub struct LinearSolveConfig {
    /// Relative residual target `‖r‖₂ ≤ tol·‖b‖₂`.
    pub tol: f64,
    /// Iteration cap; `None` means 10 × total cells.
    pub max_iter: Option<usize>,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        LinearSolveConfig { tol: 1e-10, max_iter: None }
    }
}

impl LinearSolveConfig {
    pub fn with_tol(tol: f64) -> Self {
        LinearSolveConfig { tol, max_iter: None }
    }

    fn cap(&self, cells: usize) -> usize {
        self.max_iter.unwrap_or(10 * cells.max(1))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LinearSolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

impl LinearSolveReport {
    fn merge(self, other: LinearSolveReport) -> LinearSolveReport {
        LinearSolveReport {
            iterations: self.iterations + other.iterations,
            final_residual: self.final_residual.max(other.final_residual),
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Debug, Error)]
pub enum LinearSolveError {
    #[error("right-hand side violates the zero-mean compatibility condition (mean {mean:e})")]
    NotCompatible { mean: f64 },
    #[error("iterative solve stalled after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
}

/// Unpreconditioned conjugate gradients on interior-cell vectors.
/// `apply` must be symmetric positive (semi)definite; with a semidefinite
/// operator the right-hand side has to be range-compatible. Deterministic:
/// fixed evaluation order, no threading.
fn cg(
    grid: &Grid,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    cfg: &LinearSolveConfig,
) -> Result<LinearSolveReport, LinearSolveError> {
    let n = b.len();
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v = 0.0;
    }
    if norm_b == 0.0 {
        return Ok(LinearSolveReport { iterations: 0, final_residual: 0.0, converged: true });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let target = cfg.tol * norm_b;
    let cap = cfg.cap(grid.cell_count());
    for it in 0..cap {
        if rr.sqrt() <= target {
            return Ok(LinearSolveReport {
                iterations: it,
                final_residual: rr.sqrt() / norm_b,
                converged: true,
            });
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        let alpha = rr / pap;
        if pap <= 0.0 || !alpha.is_finite() {
            // Search direction collapsed into the nullspace cone; the
            // remaining residual is not reducible by this operator.
            return Err(LinearSolveError::NotConverged {
                iterations: it,
                residual: rr.sqrt() / norm_b,
            });
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= target {
        Ok(LinearSolveReport {
            iterations: cap,
            final_residual: rr.sqrt() / norm_b,
            converged: true,
        })
    } else {
        Err(LinearSolveError::NotConverged { iterations: cap, residual: rr.sqrt() / norm_b })
    }
}

fn pack(grid: &Grid, comp: &[f64], out: &mut Vec<f64>) {
    out.clear();
    grid.for_each_interior(|flat, _| out.push(comp[flat]));
}

fn unpack(grid: &Grid, vals: &[f64], comp: &mut [f64]) {
    let mut i = 0;
    grid.for_each_interior(|flat, _| {
        comp[flat] = vals[i];
        i += 1;
    });
}

/// Apply `(I - a·Δ_h)` to one packed component under `rule`.
fn helmholtz_apply(
    grid: &Grid,
    a: f64,
    rule: GhostRule,
    x: &[f64],
    y: &mut [f64],
    pad: &mut [f64],
    lap: &mut [f64],
    buf: &mut [f64],
) {
    unpack(grid, x, pad);
    fill_raw(grid, pad, rule);
    for v in lap.iter_mut() {
        *v = 0.0;
    }
    for axis in 0..grid.dim() {
        crate::ops::d2_component(grid, pad, axis, buf);
        grid.for_each_interior(|flat, _| lap[flat] += buf[flat]);
    }
    let mut i = 0;
    grid.for_each_interior(|flat, _| {
        y[i] = x[i] - a * lap[flat];
        i += 1;
    });
}

/// Solve `(I - a·Δ_h)x = rhs` componentwise under the field's own ghost
/// rule; `a = 0` returns the right-hand side bit-for-bit.
pub fn helmholtz_solve<F: FieldData>(
    rhs: &F,
    a: f64,
    cfg: &LinearSolveConfig,
) -> Result<(F, LinearSolveReport), LinearSolveError> {
    assert!(a >= 0.0, "diffusion weight must be nonnegative");
    if a == 0.0 {
        return Ok((rhs.clone(), LinearSolveReport { iterations: 0, final_residual: 0.0, converged: true }));
    }
    let grid = *rhs.grid();
    let rule = rhs.ghost_rule();
    let mut out = rhs.zeros_like();
    let mut report = LinearSolveReport { iterations: 0, final_residual: 0.0, converged: true };
    let mut b = Vec::with_capacity(grid.cell_count());
    let mut x = vec![0.0; grid.cell_count()];
    let mut pad = vec![0.0; grid.padded_len()];
    let mut lap = vec![0.0; grid.padded_len()];
    let mut buf = vec![0.0; grid.padded_len()];
    for (src, dst) in rhs.components().iter().zip(out.components_mut()) {
        pack(&grid, src, &mut b);
        let rep = cg(
            &grid,
            |p, ap| helmholtz_apply(&grid, a, rule, p, ap, &mut pad, &mut lap, &mut buf),
            &b,
            &mut x,
            cfg,
        )?;
        report = report.merge(rep);
        unpack(&grid, &x, dst);
    }
    out.fill_ghosts();
    Ok((out, report))
}

/// Apply the composite pressure operator `A φ = -div_h(grad_h φ)` to a
/// packed scalar.
fn pressure_apply(grid: &Grid, x: &[f64], y: &mut [f64], phi: &mut [f64], g: &mut [Vec<f64>], div: &mut [f64]) {
    unpack(grid, x, phi);
    fill_raw(grid, phi, GhostRule::Even);
    let (gs, buf) = g.split_at_mut(grid.dim());
    for axis in 0..grid.dim() {
        d1_component(grid, phi, axis, &mut gs[axis]);
        fill_raw(grid, &mut gs[axis], GhostRule::ZeroTrace);
    }
    for v in div.iter_mut() {
        *v = 0.0;
    }
    for axis in 0..grid.dim() {
        d1_component(grid, &gs[axis], axis, &mut buf[0]);
        grid.for_each_interior(|flat, _| div[flat] += buf[0][flat]);
    }
    let mut i = 0;
    grid.for_each_interior(|flat, _| {
        y[i] = -div[flat];
        i += 1;
    });
}

/// Solve the pressure Poisson problem `-div_h(grad_h P) = rhs` with a
/// zero-mean solution. The right-hand side must be mean-free relative to
/// its own magnitude (discrete compatibility for the Neumann/periodic
/// closure).
pub fn poisson_solve(
    rhs: &ScalarField,
    cfg: &LinearSolveConfig,
) -> Result<(ScalarField, LinearSolveReport), LinearSolveError> {
    let grid = *rhs.grid();
    let mut b = Vec::with_capacity(grid.cell_count());
    pack(&grid, rhs.values(), &mut b);
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    if scale > 0.0 && mean.abs() > cfg.tol * scale {
        return Err(LinearSolveError::NotCompatible { mean: mean * grid.total_volume() });
    }
    // Remove the roundoff-level mean so CG sees range-compatible data.
    for v in b.iter_mut() {
        *v -= mean;
    }
    let mut x = vec![0.0; grid.cell_count()];
    let mut phi = vec![0.0; grid.padded_len()];
    // dim gradient components plus one scratch buffer
    let mut g: Vec<Vec<f64>> = (0..grid.dim() + 1).map(|_| vec![0.0; grid.padded_len()]).collect();
    let mut div = vec![0.0; grid.padded_len()];
    let rep = cg(
        &grid,
        |p, ap| pressure_apply(&grid, p, ap, &mut phi, &mut g, &mut div),
        &b,
        &mut x,
        cfg,
    )?;
    let mut out = ScalarField::zeros(&grid);
    unpack(&grid, &x, out.values_mut());
    out.remove_mean();
    Ok((out, rep))
}

/// Leray projection: returns `(u - grad φ, φ, report)` where φ solves the
/// pressure problem for `-div u`. The max-norm of the projected divergence
/// is bounded by the CG residual, `tol·‖div u‖₂`.
///
/// A field whose divergence is already at roundoff relative to its own
/// magnitude is returned unchanged: the residual data would be pure noise
/// dominated by nullspace components the solve cannot (and need not)
/// reduce.
pub fn leray_project(
    u: &VectorField,
    cfg: &LinearSolveConfig,
) -> Result<(VectorField, ScalarField, LinearSolveReport), LinearSolveError> {
    let grid = *u.grid();
    let mut rhs = ops::div_vector(u);
    let div_scale: f64 = u.l2() * (0..grid.dim()).map(|a| 1.0 / grid.h(a)).sum::<f64>();
    if rhs.l2() <= 1e-13 * div_scale {
        return Ok((
            u.clone(),
            ScalarField::zeros(&grid),
            LinearSolveReport { iterations: 0, final_residual: 0.0, converged: true },
        ));
    }
    rhs.scale(-1.0);
    rhs.fill_ghosts();
    let (phi, rep) = poisson_solve(&rhs, cfg)?;
    let mut out = u.clone();
    out.axpy(-1.0, &ops::grad_scalar(&phi));
    out.fill_ghosts();
    Ok((out, phi, rep))
}

/// One backward-Euler Stokes step with pressure projection:
/// `(I - μ·dt·Δ_h) u* = u_old + dt·f`, then `u = u* - grad φ`, `P = φ/dt`.
pub fn stokes_step(
    u_old: &VectorField,
    f: &VectorField,
    dt: f64,
    mu: f64,
    cfg: &LinearSolveConfig,
) -> Result<(VectorField, ScalarField, LinearSolveReport), LinearSolveError> {
    assert!(dt > 0.0, "time step must be positive");
    assert!(mu >= 0.0, "viscosity must be nonnegative");
    let mut rhs = u_old.clone();
    rhs.axpy(dt, f);
    let (ustar, rep1) = helmholtz_solve(&rhs, mu * dt, cfg)?;
    let (u_new, phi, rep2) = leray_project(&ustar, cfg)?;
    let mut p = phi;
    p.scale(1.0 / dt);
    p.remove_mean();
    Ok((u_new, p, rep1.merge(rep2)))
}

/// One backward-Euler heat step for a matrix (or any) field:
/// `(I - γ·dt·Δ_h) F = F_old + dt·g`.
pub fn heat_step<F: FieldData>(
    f_old: &F,
    g: &F,
    dt: f64,
    gamma: f64,
    cfg: &LinearSolveConfig,
) -> Result<(F, LinearSolveReport), LinearSolveError> {
    assert!(dt > 0.0, "time step must be positive");
    assert!(gamma >= 0.0, "relaxation coefficient must be nonnegative");
    let mut rhs = f_old.clone();
    rhs.axpy(dt, g);
    helmholtz_solve(&rhs, gamma * dt, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MatrixField;
    use crate::grid::BoundaryMode;
    use std::f64::consts::PI;

    fn pgrid(n: usize) -> Grid {
        Grid::new(2, &[n, n], &[1.0, 1.0], BoundaryMode::Periodic).unwrap()
    }

    #[test]
    fn pressure_operator_matches_its_transpose() {
        // spot-check the grad = -divᵀ identity that makes A symmetric
        for boundary in [BoundaryMode::Dirichlet, BoundaryMode::Periodic] {
            let grid = Grid::new(2, &[4, 5], &[1.0, 1.3], boundary).unwrap();
            let n = grid.cell_count();
            let mut cols = Vec::new();
            let mut phi = vec![0.0; grid.padded_len()];
            let mut g: Vec<Vec<f64>> = (0..3).map(|_| vec![0.0; grid.padded_len()]).collect();
            let mut div = vec![0.0; grid.padded_len()];
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let mut col = vec![0.0; n];
                pressure_apply(&grid, &e, &mut col, &mut phi, &mut g, &mut div);
                cols.push(col);
            }
            for i in 0..n {
                for j in 0..n {
                    assert!(
                        (cols[j][i] - cols[i][j]).abs() < 1e-13,
                        "A not symmetric at ({i},{j}) for {boundary:?}"
                    );
                }
            }
            // positive semidefinite on a few deterministic vectors
            let mut out = vec![0.0; n];
            for seed in 0..5u64 {
                let v: Vec<f64> =
                    (0..n).map(|i| ((i as u64 * 2654435761 + seed * 40503) % 1000) as f64 / 500.0 - 1.0).collect();
                pressure_apply(&grid, &v, &mut out, &mut phi, &mut g, &mut div);
                let quad: f64 = v.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                assert!(quad >= -1e-10, "not PSD for {boundary:?}: {quad}");
            }
        }
    }

    #[test]
    fn poisson_zero_rhs_gives_zero() {
        let g = pgrid(8);
        let (p, rep) = poisson_solve(&ScalarField::zeros(&g), &LinearSolveConfig::default()).unwrap();
        assert_eq!(p.linf(), 0.0);
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn poisson_rejects_constant_rhs() {
        let g = pgrid(8);
        let rhs = ScalarField::from_fn(&g, |_| 1.0);
        match poisson_solve(&rhs, &LinearSolveConfig::default()) {
            Err(LinearSolveError::NotCompatible { .. }) => {}
            other => panic!("expected NotCompatible, got {other:?}"),
        }
    }

    #[test]
    fn poisson_analytic_periodic_solution() {
        // -Δ P = 2(2π)² sin(2πx)sin(2πy) has P = sin(2πx)sin(2πy)
        let g = pgrid(64);
        let rhs = ScalarField::from_fn(&g, |x| {
            2.0 * (2.0 * PI).powi(2) * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
        });
        let exact = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let (p, rep) = poisson_solve(&rhs, &LinearSolveConfig::default()).unwrap();
        assert!(rep.converged);
        let err = p.max_abs_diff(&exact);
        assert!(err < 0.01, "error {err}");
        assert!(p.mean().abs() < 1e-12 * p.linf().max(1.0));
    }

    #[test]
    fn helmholtz_identity_when_a_is_zero() {
        let g = pgrid(8);
        let rhs = VectorField::from_fn(&g, |x| [x[0].sin(), x[1].cos(), 0.0]);
        let (x, rep) = helmholtz_solve(&rhs, 0.0, &LinearSolveConfig::default()).unwrap();
        assert_eq!(x, rhs);
        assert!(rep.converged);
    }

    #[test]
    fn helmholtz_zero_rhs_gives_zero() {
        let g = pgrid(8);
        let (x, _) = helmholtz_solve(&MatrixField::zeros(&g), 0.3, &LinearSolveConfig::default()).unwrap();
        assert_eq!(x.linf(), 0.0);
    }

    #[test]
    fn helmholtz_analytic_eigenfunction() {
        let g = pgrid(64);
        let a = 0.01;
        let rhs = ScalarField::from_fn(&g, |x| {
            (1.0 + a * (2.0 * PI).powi(2) * 2.0) * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
        });
        let exact = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let (x, rep) = helmholtz_solve(&rhs, a, &LinearSolveConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(x.max_abs_diff(&exact) < 0.01);
    }

    #[test]
    fn projection_annihilates_gradients_and_keeps_solenoidal_fields() {
        let g = pgrid(32);
        let cfg = LinearSolveConfig::default();
        // pure gradient input -> projected to ~0
        let s = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        let gs = ops::grad_scalar(&s);
        let (proj, _, _) = leray_project(&gs, &cfg).unwrap();
        assert!(proj.linf() < 1e-8 * gs.linf());
        // divergence-free input -> unchanged up to tolerance
        let tg = VectorField::from_fn(&g, |x| {
            [
                (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
                -(2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin(),
                0.0,
            ]
        });
        let (proj2, phi2, _) = leray_project(&tg, &cfg).unwrap();
        assert!(proj2.max_abs_diff(&tg) < 1e-8);
        assert!(phi2.linf() < 1e-8);
        // zero input -> exactly zero
        let (z, zphi, _) = leray_project(&VectorField::zeros(&g), &cfg).unwrap();
        assert_eq!(z.linf(), 0.0);
        assert_eq!(zphi.linf(), 0.0);
    }

    #[test]
    fn projected_divergence_is_at_solver_tolerance() {
        for boundary in [BoundaryMode::Periodic, BoundaryMode::Dirichlet] {
            let g = Grid::new(2, &[16, 16], &[1.0, 1.0], boundary).unwrap();
            let u = VectorField::from_fn(&g, |x| {
                [x[0] * (1.0 - x[0]) * x[1], x[1] * x[0] * (1.0 - x[1]), 0.0]
            });
            let div_before = ops::div_vector(&u).l2();
            let cfg = LinearSolveConfig::default();
            let (proj, _, rep) = leray_project(&u, &cfg).unwrap();
            assert!(rep.converged);
            let div_after = ops::div_vector(&proj).linf();
            assert!(
                div_after <= 10.0 * cfg.tol * div_before.max(1.0),
                "{boundary:?}: residual divergence {div_after}"
            );
        }
    }

    #[test]
    fn stokes_step_zero_data_stays_zero() {
        let g = Grid::new(2, &[8, 8], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap();
        let z = VectorField::zeros(&g);
        let (u, p, rep) = stokes_step(&z, &z, 1e-2, 1.0, &LinearSolveConfig::default()).unwrap();
        assert_eq!(u.linf(), 0.0);
        assert_eq!(p.linf(), 0.0);
        assert!(rep.converged);
    }

    #[test]
    fn heat_step_decay_matches_the_discrete_symbol() {
        let g = pgrid(32);
        let dt = 1e-2;
        let gamma = 1.0;
        let f0 = MatrixField::from_fn(&g, |x| {
            let mut m = [[0.0; 3]; 3];
            m[0][0] = (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin();
            m
        });
        let cfg = LinearSolveConfig::with_tol(1e-12);
        let (f1, rep) = heat_step(&f0, &MatrixField::zeros(&g), dt, gamma, &cfg).unwrap();
        assert!(rep.converged);
        // discrete eigenvalue of the compact Laplacian for mode (1,1)
        let h = g.h(0);
        let lam = 2.0 * (2.0 * (1.0 - (2.0 * PI * h).cos()) / (h * h));
        let factor = 1.0 / (1.0 + gamma * dt * lam);
        let mut expected = f0.clone();
        expected.scale(factor);
        assert!(f1.max_abs_diff(&expected) < 1e-10);
        // and the continuum factor to O(h²)
        let cont = 1.0 / (1.0 + gamma * dt * (2.0 * PI).powi(2) * 2.0);
        assert!((factor - cont).abs() < 0.05 * cont);
    }

    #[test]
    fn backward_euler_steps_never_gain_energy() {
        let g = Grid::new(2, &[12, 12], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap();
        let cfg = LinearSolveConfig::default();
        let u0 = VectorField::from_fn(&g, |x| {
            [x[0] * (1.0 - x[0]), (x[1] * (1.0 - x[1])).powi(2), 0.0]
        });
        let f0 = MatrixField::from_fn(&g, |x| {
            let mut m = [[0.0; 3]; 3];
            m[0][1] = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
            m
        });
        let zf = VectorField::zeros(&g);
        let zm = MatrixField::zeros(&g);
        for dt in [1e-3, 1.0, 1e3] {
            let (u1, _, _) = stokes_step(&u0, &zf, dt, 1.0, &cfg).unwrap();
            assert!(u1.l2() <= u0.l2() * (1.0 + 1e-12), "dt={dt}");
            let (f1, _) = heat_step(&f0, &zm, dt, 1.0, &cfg).unwrap();
            assert!(f1.l2() <= f0.l2() * (1.0 + 1e-12), "dt={dt}");
        }
    }

    #[test]
    fn helmholtz_solutions_never_exceed_their_data() {
        // (I - aΔ)⁻¹ is an L² contraction; checked on pseudo-random data
        let g = pgrid(12);
        let mut seed = 0x5eed_1234u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for a in [1e-3, 0.1, 10.0] {
            let mut rhs = ScalarField::zeros(&g);
            {
                let vals = rhs.values_mut();
                g.for_each_interior(|flat, _| vals[flat] = next());
            }
            rhs.fill_ghosts();
            let (x, rep) = helmholtz_solve(&rhs, a, &LinearSolveConfig::default()).unwrap();
            assert!(rep.converged);
            assert!(x.l2() <= rhs.l2() * (1.0 + 1e-10), "a={a}");
        }
    }

    #[test]
    fn two_half_steps_differ_from_one_full_step_at_second_order() {
        let g = pgrid(32);
        let cfg = LinearSolveConfig::with_tol(1e-13);
        let f0 = MatrixField::from_fn(&g, |x| {
            let mut m = [[0.0; 3]; 3];
            m[0][0] = (2.0 * PI * x[0]).sin();
            m[1][1] = (2.0 * PI * x[1]).cos();
            m
        });
        let z = MatrixField::zeros(&g);
        let defect = |dt: f64| -> f64 {
            let (full, _) = heat_step(&f0, &z, dt, 1.0, &cfg).unwrap();
            let (h1, _) = heat_step(&f0, &z, dt / 2.0, 1.0, &cfg).unwrap();
            let (h2, _) = heat_step(&h1, &z, dt / 2.0, 1.0, &cfg).unwrap();
            full.max_abs_diff(&h2)
        };
        // dt must keep γ·dt·λ ≪ 1 for the dt² asymptotics to show
        let d1 = defect(2e-3);
        let d2 = defect(1e-3);
        let ratio = d1 / d2;
        assert!((3.0..5.0).contains(&ratio), "step-doubling ratio {ratio}");
    }
}
