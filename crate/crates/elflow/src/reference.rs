//! Independent reference implementations used to cross-check the
//! production code paths.
//!
//! The dense operators here re-derive every stencil from the definition
//! with explicit loops, their own flat-index arithmetic, and their own
//! boundary extension logic; they never read the ghost layer the
//! production operators rely on. The monolithic Newton solver replaces
//! the fixed-point sweep entirely: it solves the coupled nonlinear
//! backward-Euler step with a finite-difference Jacobian and a dense LU
//! factorization, so agreement with the windowed iteration checks the
//! iteration itself, not the shared linear sub-solves.

use crate::field::{FieldData, GhostRule, MatrixField, ScalarField, State, VectorField};
use crate::grid::{BoundaryMode, Grid};
use crate::linsolve::{heat_step, stokes_step, LinearSolveConfig, LinearSolveError};
use crate::ops;
use crate::picard::PicardConfig;

/// Interior value of one padded component at cell `c`, re-deriving the
/// extension rule instead of reading ghosts. Handles one reflection layer
/// beyond each face, which covers every stencil under test.
fn fetch(grid: &Grid, data: &[f64], rule: GhostRule, c: [isize; 3]) -> f64 {
    let mut sign = 1.0;
    let mut cc = [0isize; 3];
    for a in 0..3 {
        if a >= grid.dim() {
            cc[a] = 0;
            continue;
        }
        let n = grid.n(a) as isize;
        let mut i = c[a];
        match grid.boundary() {
            BoundaryMode::Periodic => {
                i = i.rem_euclid(n);
            }
            BoundaryMode::Dirichlet => {
                if i < 0 {
                    i = -1 - i; // reflect through the low face
                    if rule == GhostRule::ZeroTrace {
                        sign = -sign;
                    }
                } else if i >= n {
                    i = 2 * n - 1 - i; // reflect through the high face
                    if rule == GhostRule::ZeroTrace {
                        sign = -sign;
                    }
                }
            }
        }
        cc[a] = i;
    }
    // flat padded index computed from scratch
    let p0 = grid.n(0) + 2;
    let p1 = if grid.dim() >= 2 { grid.n(1) + 2 } else { 1 };
    let off2 = if grid.dim() == 3 { (cc[2] + 1) as usize } else { 0 };
    let flat = (cc[0] + 1) as usize + p0 * ((cc[1] + 1) as usize + p1 * off2);
    sign * data[flat]
}

fn shift(c: [isize; 3], axis: usize, by: isize) -> [isize; 3] {
    let mut out = c;
    out[axis] += by;
    out
}

fn interior_cells(grid: &Grid) -> Vec<[isize; 3]> {
    let mut cells = Vec::with_capacity(grid.cell_count());
    let nz = if grid.dim() == 3 { grid.n(2) } else { 1 };
    for k in 0..nz {
        for j in 0..grid.n(1) {
            for i in 0..grid.n(0) {
                cells.push([i as isize, j as isize, k as isize]);
            }
        }
    }
    cells
}

fn set_interior<F: FieldData>(field: &mut F, values: &[Vec<f64>], grid: &Grid) {
    for (comp, vals) in field.components_mut().iter_mut().zip(values) {
        let mut i = 0;
        grid.for_each_interior(|flat, _| {
            comp[flat] = vals[i];
            i += 1;
        });
    }
    field.fill_ghosts();
}

pub fn oracle_grad_scalar(s: &ScalarField) -> VectorField {
    let grid = *s.grid();
    let cells = interior_cells(&grid);
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(cells.len()); grid.dim()];
    for &c in &cells {
        for a in 0..grid.dim() {
            let hi = fetch(&grid, s.values(), GhostRule::Even, shift(c, a, 1));
            let lo = fetch(&grid, s.values(), GhostRule::Even, shift(c, a, -1));
            comps[a].push((hi - lo) / (2.0 * grid.h(a)));
        }
    }
    let mut out = VectorField::zeros(&grid);
    set_interior(&mut out, &comps, &grid);
    out
}

pub fn oracle_grad_vector(u: &VectorField) -> MatrixField {
    let grid = *u.grid();
    let dim = grid.dim();
    let cells = interior_cells(&grid);
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(cells.len()); dim * dim];
    for &c in &cells {
        for j in 0..dim {
            for k in 0..dim {
                let hi = fetch(&grid, u.comp(j), GhostRule::ZeroTrace, shift(c, k, 1));
                let lo = fetch(&grid, u.comp(j), GhostRule::ZeroTrace, shift(c, k, -1));
                comps[j * dim + k].push((hi - lo) / (2.0 * grid.h(k)));
            }
        }
    }
    let mut out = MatrixField::zeros(&grid);
    set_interior(&mut out, &comps, &grid);
    out
}

pub fn oracle_div_vector(u: &VectorField) -> ScalarField {
    let grid = *u.grid();
    let cells = interior_cells(&grid);
    let mut vals = Vec::with_capacity(cells.len());
    for &c in &cells {
        let mut s = 0.0;
        for a in 0..grid.dim() {
            let hi = fetch(&grid, u.comp(a), GhostRule::ZeroTrace, shift(c, a, 1));
            let lo = fetch(&grid, u.comp(a), GhostRule::ZeroTrace, shift(c, a, -1));
            s += (hi - lo) / (2.0 * grid.h(a));
        }
        vals.push(s);
    }
    let mut out = ScalarField::zeros(&grid);
    set_interior(&mut out, &[vals], &grid);
    out
}

pub fn oracle_div_matrix(m: &MatrixField) -> VectorField {
    let grid = *m.grid();
    let dim = grid.dim();
    let cells = interior_cells(&grid);
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(cells.len()); dim];
    for &c in &cells {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                let hi = fetch(&grid, m.entry(j, k), m.ghost_rule(), shift(c, k, 1));
                let lo = fetch(&grid, m.entry(j, k), m.ghost_rule(), shift(c, k, -1));
                s += (hi - lo) / (2.0 * grid.h(k));
            }
            comps[j].push(s);
        }
    }
    let mut out = VectorField::zeros(&grid);
    set_interior(&mut out, &comps, &grid);
    out
}

pub fn oracle_laplacian<F: FieldData>(f: &F) -> F {
    let grid = *f.grid();
    let cells = interior_cells(&grid);
    let rule = f.ghost_rule();
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(cells.len()); f.components().len()];
    for &c in &cells {
        for (ci, comp) in f.components().iter().enumerate() {
            let mut s = 0.0;
            let center = fetch(&grid, comp, rule, c);
            for a in 0..grid.dim() {
                let hi = fetch(&grid, comp, rule, shift(c, a, 1));
                let lo = fetch(&grid, comp, rule, shift(c, a, -1));
                s += (hi - 2.0 * center + lo) / (grid.h(a) * grid.h(a));
            }
            comps[ci].push(s);
        }
    }
    let mut out = f.zeros_like();
    set_interior(&mut out, &comps, &grid);
    out
}

pub fn oracle_advect<F: FieldData>(v: &VectorField, f: &F) -> F {
    let grid = *f.grid();
    let cells = interior_cells(&grid);
    let rule = f.ghost_rule();
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(cells.len()); f.components().len()];
    for &c in &cells {
        for (ci, comp) in f.components().iter().enumerate() {
            let mut s = 0.0;
            for a in 0..grid.dim() {
                let hi = fetch(&grid, comp, rule, shift(c, a, 1));
                let lo = fetch(&grid, comp, rule, shift(c, a, -1));
                let va = fetch(&grid, v.comp(a), GhostRule::ZeroTrace, c);
                s += va * (hi - lo) / (2.0 * grid.h(a));
            }
            comps[ci].push(s);
        }
    }
    let mut out = f.zeros_like();
    set_interior(&mut out, &comps, &grid);
    out
}

pub fn oracle_stretch(f: &MatrixField, u: &VectorField) -> MatrixField {
    let grid = *f.grid();
    let dim = grid.dim();
    let cells = interior_cells(&grid);
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(cells.len()); dim * dim];
    for &c in &cells {
        for i in 0..dim {
            for k in 0..dim {
                let mut s = 0.0;
                for j in 0..dim {
                    let fij = fetch(&grid, f.entry(i, j), f.ghost_rule(), c);
                    let hi = fetch(&grid, u.comp(j), GhostRule::ZeroTrace, shift(c, k, 1));
                    let lo = fetch(&grid, u.comp(j), GhostRule::ZeroTrace, shift(c, k, -1));
                    s += fij * (hi - lo) / (2.0 * grid.h(k));
                }
                comps[i * dim + k].push(s);
            }
        }
    }
    let mut out = MatrixField::zeros(&grid);
    set_interior(&mut out, &comps, &grid);
    out
}

/// `div(FᵀF)` evaluated from F directly: the product at any cell (ghost
/// positions included) is formed from fetched F values, which reproduces
/// the even extension of the quadratic.
pub fn oracle_elastic_stress(f: &MatrixField) -> VectorField {
    let grid = *f.grid();
    let dim = grid.dim();
    let prod = |c: [isize; 3], i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for m in 0..dim {
            s += fetch(&grid, f.entry(m, i), f.ghost_rule(), c)
                * fetch(&grid, f.entry(m, j), f.ghost_rule(), c);
        }
        s
    };
    let cells = interior_cells(&grid);
    let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(cells.len()); dim];
    for &c in &cells {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                s += (prod(shift(c, k, 1), j, k) - prod(shift(c, k, -1), j, k))
                    / (2.0 * grid.h(k));
            }
            comps[j].push(s);
        }
    }
    let mut out = VectorField::zeros(&grid);
    set_interior(&mut out, &comps, &grid);
    out
}

/// Dense LU with partial pivoting; returns the permuted factorization or
/// `None` for a numerically singular matrix.
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<DenseLu> {
        let mut piv = (0..n).collect::<Vec<_>>();
        for col in 0..n {
            let mut best = col;
            let mut best_val = a[col * n + col].abs();
            for row in (col + 1)..n {
                let v = a[row * n + col].abs();
                if v > best_val {
                    best = row;
                    best_val = v;
                }
            }
            if best_val == 0.0 {
                return None;
            }
            if best != col {
                for k in 0..n {
                    a.swap(col * n + k, best * n + k);
                }
                piv.swap(col, best);
            }
            let d = a[col * n + col];
            for row in (col + 1)..n {
                let factor = a[row * n + col] / d;
                a[row * n + col] = factor;
                for k in (col + 1)..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
            }
        }
        Some(DenseLu { n, lu: a, piv })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum NewtonError {
    #[error("finite-difference Jacobian is singular")]
    SingularJacobian,
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
}

fn pack_state(u: &VectorField, f: &MatrixField, grid: &Grid) -> Vec<f64> {
    let mut x = Vec::with_capacity(grid.cell_count() * (grid.dim() + grid.dim() * grid.dim()));
    for comp in u.components().iter().chain(f.components()) {
        grid.for_each_interior(|flat, _| x.push(comp[flat]));
    }
    x
}

fn unpack_state(x: &[f64], u: &mut VectorField, f: &mut MatrixField, grid: &Grid) {
    let mut i = 0;
    for comp in u.components_mut().iter_mut().chain(f.components_mut()) {
        grid.for_each_interior(|flat, _| {
            comp[flat] = x[i];
            i += 1;
        });
    }
    u.fill_ghosts();
    f.fill_ghosts();
}

/// Residual of the coupled backward-Euler step at the candidate state:
/// `R = (u − Stokes(u₀, f(u, F)), F − Heat(F₀, g(u, F)))`.
fn coupled_residual(
    x: &[f64],
    initial: &State,
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
) -> Result<Vec<f64>, LinearSolveError> {
    let grid = *initial.grid();
    let mut u = VectorField::zeros(&grid);
    let mut f = MatrixField::zeros(&grid);
    unpack_state(x, &mut u, &mut f, &grid);
    let mut rhs_u = ops::advect(&u, &u);
    rhs_u.scale(-1.0);
    rhs_u.axpy(-cfg.lambda, &ops::elastic_stress(&f));
    let (u_step, _, _) = stokes_step(&initial.u, &rhs_u, cfg.dt, cfg.mu, lincfg)?;
    let mut rhs_f = ops::advect(&u, &f);
    rhs_f.scale(-1.0);
    rhs_f.axpy(-1.0, &ops::stretch(&f, &u));
    let (f_step, _) = heat_step(&initial.f, &rhs_f, cfg.dt, cfg.gamma, lincfg)?;
    let mut r = Vec::with_capacity(x.len());
    for (comp, comp_step) in u
        .components()
        .iter()
        .chain(f.components())
        .zip(u_step.components().iter().chain(f_step.components()))
    {
        grid.for_each_interior(|flat, _| {
            r.push(comp[flat] - comp_step[flat]);
        });
    }
    Ok(r)
}

/// Solve one fully coupled nonlinear backward-Euler step by Newton with a
/// finite-difference Jacobian and dense LU. Practical for grids up to
/// about 8²; it exists to cross-check the fixed-point iteration.
pub fn monolithic_newton_step(
    initial: &State,
    cfg: &PicardConfig,
    lincfg: &LinearSolveConfig,
) -> Result<(State, NewtonReport), NewtonError> {
    let grid = *initial.grid();
    let ndof = grid.cell_count() * (grid.dim() + grid.dim() * grid.dim());
    assert!(ndof <= 1024, "dense Newton oracle is meant for desk-size grids");
    let mut x = pack_state(&initial.u, &initial.f, &grid);
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
    let tol = (100.0 * lincfg.tol).max(1e-13) * scale;
    let max_iter = 25;
    let mut report = NewtonReport { iterations: 0, residual: f64::INFINITY, converged: false };
    for _ in 0..max_iter {
        let r = coupled_residual(&x, initial, cfg, lincfg)?;
        let rnorm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        report.residual = rnorm;
        if rnorm <= tol {
            report.converged = true;
            break;
        }
        // finite-difference Jacobian, column by column
        let eps_base = 1e-7 * scale.max(1e-7);
        let mut jac = vec![0.0; ndof * ndof];
        for j in 0..ndof {
            let eps = eps_base.max(1e-7 * x[j].abs());
            let saved = x[j];
            x[j] = saved + eps;
            let rj = coupled_residual(&x, initial, cfg, lincfg)?;
            x[j] = saved;
            for i in 0..ndof {
                jac[i * ndof + j] = (rj[i] - r[i]) / eps;
            }
        }
        let lu = DenseLu::factor(jac, ndof).ok_or(NewtonError::SingularJacobian)?;
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = lu.solve(&neg_r);
        for (xi, di) in x.iter_mut().zip(delta.iter()) {
            *xi += di;
        }
        report.iterations += 1;
    }
    let mut u = VectorField::zeros(&grid);
    let mut f = MatrixField::zeros(&grid);
    unpack_state(&x, &mut u, &mut f, &grid);
    // recover the pressure of the converged step for a complete state
    let mut rhs_u = ops::advect(&u, &u);
    rhs_u.scale(-1.0);
    rhs_u.axpy(-cfg.lambda, &ops::elastic_stress(&f));
    let (_, p, _) = stokes_step(&initial.u, &rhs_u, cfg.dt, cfg.mu, lincfg)?;
    let state = State { t: initial.t + cfg.dt, u, f, p };
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_lu_solves_a_small_system() {
        // A = [[2,1],[1,3]], b = [5, 10] -> x = [1, 3]
        let lu = DenseLu::factor(vec![2.0, 1.0, 1.0, 3.0], 2).unwrap();
        let x = lu.solve(&[5.0, 10.0]);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_detected() {
        assert!(DenseLu::factor(vec![1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn oracle_fetch_reflects_with_the_right_sign() {
        let g = Grid::new(2, &[4, 4], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap();
        let u = VectorField::from_fn(&g, |x| [x[0] + 1.0, 0.0, 0.0]);
        // zero-trace: ghost(-1) = -interior(0)
        let lo = fetch(&g, u.comp(0), GhostRule::ZeroTrace, [-1, 2, 0]);
        assert_eq!(lo, -u.at(0, [0, 2, 0]));
        let s = ScalarField::from_fn(&g, |x| x[0] + 1.0);
        let lo_even = fetch(&g, s.values(), GhostRule::Even, [-1, 2, 0]);
        assert_eq!(lo_even, s.at([0, 2, 0]));
    }

    #[test]
    fn oracle_fetch_wraps_on_periodic_grids() {
        let g = Grid::new(2, &[4, 4], &[1.0, 1.0], BoundaryMode::Periodic).unwrap();
        let s = ScalarField::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        assert_eq!(fetch(&g, s.values(), GhostRule::Even, [-1, 2, 0]), s.at([3, 2, 0]));
        assert_eq!(fetch(&g, s.values(), GhostRule::Even, [4, 1, 0]), s.at([0, 1, 0]));
    }
}
