//! Centered second-order stencil operators on the padded fields.
//!
//! Conventions fixed once for the whole crate:
//! - `(∇u)_{jk} = ∂u_j/∂x_k`; matrix products follow this index layout.
//! - `div` of a matrix acts row-wise: `(div M)_j = Σ_k ∂M_{jk}/∂x_k`.
//! - `elastic_stress` returns `+div(FᵀF)`; callers apply the sign from the
//!   momentum equation.
//!
//! All operators read the ghost layer of their inputs, which field
//! containers keep synced (see `field`). Outputs are returned with their
//! own ghosts refilled. Inputs on different grids panic.

use crate::field::{fill_component_ghosts, FieldData, GhostRule, MatrixField, ScalarField, VectorField};
use crate::grid::{BoundaryMode, Grid};

/// Centered first difference of one padded component along `axis`,
/// written into `out` (interior cells only).
pub(crate) fn d1_component(grid: &Grid, data: &[f64], axis: usize, out: &mut [f64]) {
    let stride = grid.stride(axis);
    let inv2h = 1.0 / (2.0 * grid.h(axis));
    grid.for_each_interior(|flat, _| {
        out[flat] = (data[flat + stride] - data[flat - stride]) * inv2h;
    });
}

/// Centered second difference along `axis`.
pub(crate) fn d2_component(grid: &Grid, data: &[f64], axis: usize, out: &mut [f64]) {
    let stride = grid.stride(axis);
    let invh2 = 1.0 / (grid.h(axis) * grid.h(axis));
    grid.for_each_interior(|flat, _| {
        out[flat] = (data[flat + stride] - 2.0 * data[flat] + data[flat - stride]) * invh2;
    });
}

/// Centered mixed second difference along two distinct axes.
pub(crate) fn d1d1_component(grid: &Grid, data: &[f64], a: usize, b: usize, out: &mut [f64]) {
    debug_assert_ne!(a, b);
    let sa = grid.stride(a);
    let sb = grid.stride(b);
    let inv = 1.0 / (4.0 * grid.h(a) * grid.h(b));
    grid.for_each_interior(|flat, _| {
        out[flat] = (data[flat + sa + sb] - data[flat + sa - sb] - data[flat - sa + sb]
            + data[flat - sa - sb])
            * inv;
    });
}

/// Gradient of a scalar: `(∇s)_a = ∂s/∂x_a`.
pub fn grad_scalar(s: &ScalarField) -> VectorField {
    let grid = *s.grid();
    let mut out = VectorField::zeros(&grid);
    for a in 0..grid.dim() {
        d1_component(&grid, &s.components()[0], a, out.comp_mut(a));
    }
    out.fill_ghosts();
    out
}

/// Gradient of a vector: entry `(j, k)` is `∂u_j/∂x_k`.
pub fn grad_vector(u: &VectorField) -> MatrixField {
    let grid = *u.grid();
    let dim = grid.dim();
    let mut out = MatrixField::zeros(&grid);
    for j in 0..dim {
        for k in 0..dim {
            d1_component(&grid, u.comp(j), k, out.entry_mut(j, k));
        }
    }
    out.fill_ghosts();
    out
}

/// Centered divergence of a vector field.
pub fn div_vector(u: &VectorField) -> ScalarField {
    let grid = *u.grid();
    let mut out = ScalarField::zeros(&grid);
    let mut buf = vec![0.0; grid.padded_len()];
    for a in 0..grid.dim() {
        d1_component(&grid, u.comp(a), a, &mut buf);
        let dst = out.values_mut();
        grid.for_each_interior(|flat, _| dst[flat] += buf[flat]);
    }
    out.fill_ghosts();
    out
}

/// Row-wise divergence of a matrix field: `(div M)_j = Σ_k ∂M_{jk}/∂x_k`.
pub fn div_matrix(m: &MatrixField) -> VectorField {
    let grid = *m.grid();
    let dim = grid.dim();
    let mut out = VectorField::zeros(&grid);
    let mut buf = vec![0.0; grid.padded_len()];
    for j in 0..dim {
        for k in 0..dim {
            d1_component(&grid, m.entry(j, k), k, &mut buf);
            let dst = out.comp_mut(j);
            grid.for_each_interior(|flat, _| dst[flat] += buf[flat]);
        }
    }
    out.fill_ghosts();
    out
}

/// Compact `2·dim + 1` point Laplacian, componentwise over any field kind.
pub fn laplacian<F: FieldData>(f: &F) -> F {
    let grid = *f.grid();
    let mut out = f.zeros_like();
    let mut buf = vec![0.0; grid.padded_len()];
    for (src, dst) in f.components().iter().zip(out.components_mut()) {
        for v in dst.iter_mut() {
            *v = 0.0;
        }
        for a in 0..grid.dim() {
            d2_component(&grid, src, a, &mut buf);
            grid.for_each_interior(|flat, _| dst[flat] += buf[flat]);
        }
    }
    out.fill_ghosts();
    out
}

/// Advective derivative `(v·∇)f`, componentwise with centered differences.
pub fn advect<F: FieldData>(v: &VectorField, f: &F) -> F {
    assert_eq!(v.grid(), f.grid(), "grid mismatch");
    let grid = *f.grid();
    let mut out = f.zeros_like();
    let mut buf = vec![0.0; grid.padded_len()];
    for (src, dst) in f.components().iter().zip(out.components_mut()) {
        for val in dst.iter_mut() {
            *val = 0.0;
        }
        for a in 0..grid.dim() {
            d1_component(&grid, src, a, &mut buf);
            let va = v.comp(a);
            grid.for_each_interior(|flat, _| dst[flat] += va[flat] * buf[flat]);
        }
    }
    out.fill_ghosts();
    out
}

/// Stretching term `F∇u` with `(F∇u)_{ik} = Σ_j F_{ij} (∇u)_{jk}`.
pub fn stretch(f: &MatrixField, u: &VectorField) -> MatrixField {
    assert_eq!(f.grid(), u.grid(), "grid mismatch");
    let grid = *f.grid();
    let dim = grid.dim();
    let gu = grad_vector(u);
    let mut out = MatrixField::zeros(&grid);
    for i in 0..dim {
        for k in 0..dim {
            for j in 0..dim {
                let fi = f.entry(i, j);
                let gj = gu.entry(j, k);
                let dst = out.entry_mut(i, k);
                grid.for_each_interior(|flat, _| dst[flat] += fi[flat] * gj[flat]);
            }
        }
    }
    out.fill_ghosts();
    out
}

/// Elastic stress source `+div(FᵀF)`.
///
/// The product is formed pointwise over the whole padded lattice, so its
/// ghost values inherit F's extension (for zero-trace F the product
/// extends evenly, which is the consistent boundary behaviour of FᵀF);
/// the divergence is then taken without refilling.
pub fn elastic_stress(f: &MatrixField) -> VectorField {
    let grid = *f.grid();
    let dim = grid.dim();
    let mut prod = MatrixField::zeros_with_rule(&grid, GhostRule::Even);
    for i in 0..dim {
        for j in 0..dim {
            // (FᵀF)_{ij} = Σ_m F_{mi} F_{mj}, over padded cells
            for m in 0..dim {
                let a = f.entry(m, i);
                let b = f.entry(m, j);
                let dst = prod.entry_mut(i, j);
                for idx in 0..dst.len() {
                    dst[idx] += a[idx] * b[idx];
                }
            }
        }
    }
    let mut out = VectorField::zeros(&grid);
    let mut buf = vec![0.0; grid.padded_len()];
    for j in 0..dim {
        for k in 0..dim {
            d1_component(&grid, prod.entry(j, k), k, &mut buf);
            let dst = out.comp_mut(j);
            grid.for_each_interior(|flat, _| dst[flat] += buf[flat]);
        }
    }
    out.fill_ghosts();
    out
}

/// Deformation gradient of a director field: `F_{ik} = ∂d_i/∂x_k`.
pub fn d_to_f(d: &VectorField) -> MatrixField {
    grad_vector(d)
}

/// Max over rows and axis pairs of the discrete curl defect
/// `|∂F_{ik}/∂x_l − ∂F_{il}/∂x_k|`; zero iff every row of F is a discrete
/// gradient.
///
/// On Dirichlet grids the max runs over cells whose stencil stays inside
/// the interior; the zero-trace ghost extension is a boundary artifact,
/// not a statement about the gradient structure being monitored.
pub fn curl_residual(f: &MatrixField) -> f64 {
    let grid = *f.grid();
    let dim = grid.dim();
    let skip_rim = grid.boundary() == BoundaryMode::Dirichlet;
    let inside = |c: [usize; 3]| -> bool {
        if !skip_rim {
            return true;
        }
        (0..dim).all(|a| c[a] >= 1 && c[a] + 2 <= grid.n(a))
    };
    let mut worst: f64 = 0.0;
    let mut dkl = vec![0.0; grid.padded_len()];
    let mut dlk = vec![0.0; grid.padded_len()];
    for i in 0..dim {
        for k in 0..dim {
            for l in (k + 1)..dim {
                d1_component(&grid, f.entry(i, k), l, &mut dkl);
                d1_component(&grid, f.entry(i, l), k, &mut dlk);
                grid.for_each_interior(|flat, c| {
                    if inside(c) {
                        worst = worst.max((dkl[flat] - dlk[flat]).abs());
                    }
                });
            }
        }
    }
    worst
}

/// Scratch buffers sized to one grid, reusable across operator-heavy loops.
/// Never hands out aliases of caller data.
pub struct OperatorWorkspace {
    grid: Grid,
    bufs: Vec<Vec<f64>>,
}

impl OperatorWorkspace {
    pub fn new(grid: &Grid) -> Self {
        OperatorWorkspace { grid: *grid, bufs: Vec::new() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Borrow a zeroed padded buffer; grows the pool on demand.
    pub fn take(&mut self) -> Vec<f64> {
        match self.bufs.pop() {
            Some(mut b) => {
                for v in b.iter_mut() {
                    *v = 0.0;
                }
                b
            }
            None => vec![0.0; self.grid.padded_len()],
        }
    }

    pub fn give(&mut self, buf: Vec<f64>) {
        debug_assert_eq!(buf.len(), self.grid.padded_len());
        self.bufs.push(buf);
    }
}

/// Fill ghosts of a raw component under an explicit rule; used by the
/// linear solvers which work on raw component slices.
pub(crate) fn fill_raw(grid: &Grid, data: &mut [f64], rule: GhostRule) {
    fill_component_ghosts(grid, data, rule);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryMode;

    fn pgrid(n: usize) -> Grid {
        Grid::new(2, &[n, n], &[1.0, 1.0], BoundaryMode::Periodic).unwrap()
    }

    fn dgrid(n: usize) -> Grid {
        Grid::new(2, &[n, n], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let s = ScalarField::from_fn(&pgrid(8), |_| 3.5);
        assert_eq!(grad_scalar(&s).linf(), 0.0);
    }

    #[test]
    fn gradient_of_linear_is_exact_in_the_interior() {
        // away from Dirichlet faces the centered stencil sees only interior
        let g = dgrid(8);
        let s = ScalarField::from_fn(&g, |x| x[0]);
        let gs = grad_scalar(&s);
        for i in 1..7 {
            for j in 1..7 {
                assert!((gs.at(0, [i, j, 0]) - 1.0).abs() < 1e-14);
                assert!(gs.at(1, [i, j, 0]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn grad_vector_on_shear_flow() {
        let g = dgrid(8);
        let u = VectorField::from_fn(&g, |x| [x[1], 0.0, 0.0]);
        let m = grad_vector(&u);
        for i in 1..7 {
            for j in 1..7 {
                assert!((m.at(0, 1, [i, j, 0]) - 1.0).abs() < 1e-14);
                assert!(m.at(0, 0, [i, j, 0]).abs() < 1e-14);
                assert!(m.at(1, 0, [i, j, 0]).abs() < 1e-14);
                assert!(m.at(1, 1, [i, j, 0]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn divergence_of_linear_fields() {
        let g = dgrid(8);
        let solenoidal = VectorField::from_fn(&g, |x| [x[0], -x[1], 0.0]);
        let expanding = VectorField::from_fn(&g, |x| [x[0], x[1], 0.0]);
        let ds = div_vector(&solenoidal);
        let de = div_vector(&expanding);
        for i in 1..7 {
            for j in 1..7 {
                assert!(ds.at([i, j, 0]).abs() < 1e-13);
                assert!((de.at([i, j, 0]) - 2.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn div_matrix_of_constant_is_zero() {
        let m = MatrixField::from_fn(&pgrid(8), |_| [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [0.0; 3]]);
        assert_eq!(div_matrix(&m).linf(), 0.0);
    }

    #[test]
    fn div_matrix_of_x_times_identity() {
        let g = dgrid(8);
        let m = MatrixField::from_fn(&g, |x| {
            [[x[0], 0.0, 0.0], [0.0, x[0], 0.0], [0.0; 3]]
        });
        let v = div_matrix(&m);
        for i in 1..7 {
            for j in 1..7 {
                assert!((v.at(0, [i, j, 0]) - 1.0).abs() < 1e-13);
                assert!(v.at(1, [i, j, 0]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn laplacian_of_linear_vanishes_in_the_interior() {
        let g = dgrid(8);
        let s = ScalarField::from_fn(&g, |x| 2.0 * x[0] - x[1]);
        let ls = laplacian(&s);
        for i in 1..7 {
            for j in 1..7 {
                assert!(ls.at([i, j, 0]).abs() < 1e-12);
            }
        }
        assert_eq!(laplacian(&ScalarField::zeros(&g)).linf(), 0.0);
    }

    #[test]
    fn advect_constant_velocity_linear_field() {
        let g = pgrid(8);
        let v = VectorField::from_fn(&g, |_| [2.0, -1.0, 0.0]);
        let zero = advect(&VectorField::zeros(&g), &v);
        assert_eq!(zero.linf(), 0.0);
        let d = dgrid(8);
        let vc = VectorField::from_fn(&d, |_| [2.0, -1.0, 0.0]);
        let f = ScalarField::from_fn(&d, |x| x[0] + 3.0 * x[1]);
        let a = advect(&vc, &f);
        // v·∇f = 2·1 + (−1)·3 = −1 at interior points
        for i in 1..7 {
            for j in 1..7 {
                assert!((a.at([i, j, 0]) + 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn stretch_with_identity_matrix_is_grad_u() {
        let g = pgrid(8);
        let u = VectorField::from_fn(&g, |x| {
            [(2.0 * std::f64::consts::PI * x[0]).sin(), (2.0 * std::f64::consts::PI * x[1]).cos(), 0.0]
        });
        let f = MatrixField::identity(&g);
        let s = stretch(&f, &u);
        let gu = grad_vector(&u);
        assert!(s.max_abs_diff(&gu) < 1e-14);
        assert_eq!(stretch(&f, &VectorField::zeros(&g)).linf(), 0.0);
    }

    #[test]
    fn elastic_stress_of_constant_and_zero() {
        let g = pgrid(8);
        assert_eq!(elastic_stress(&MatrixField::zeros(&g)).linf(), 0.0);
        let c = MatrixField::from_fn(&g, |_| [[1.0, 2.0, 0.0], [0.5, -1.0, 0.0], [0.0; 3]]);
        assert!(elastic_stress(&c).linf() < 1e-13);
    }

    #[test]
    fn d_to_f_on_linear_director_is_identity() {
        let g = dgrid(8);
        let d = VectorField::from_fn(&g, |x| [x[0], x[1], 0.0]);
        let f = d_to_f(&d);
        for i in 1..7 {
            for j in 1..7 {
                assert!((f.at(0, 0, [i, j, 0]) - 1.0).abs() < 1e-13);
                assert!((f.at(1, 1, [i, j, 0]) - 1.0).abs() < 1e-13);
                assert!(f.at(0, 1, [i, j, 0]).abs() < 1e-13);
            }
        }
        assert_eq!(d_to_f(&VectorField::zeros(&g)).linf(), 0.0);
    }

    #[test]
    fn curl_residual_detects_non_gradients() {
        let g = pgrid(8);
        assert_eq!(curl_residual(&MatrixField::identity(&g)), 0.0);
        let d = dgrid(8);
        // row (y, 0): ∂_y F_00 − ∂_x F_01 = 1
        let m = MatrixField::from_fn(&d, |x| [[x[1], 0.0, 0.0], [0.0; 3], [0.0; 3]]);
        assert!((curl_residual(&m) - 1.0).abs() < 1e-13);
    }
}
