//! Field containers for velocity, director, deformation matrix, and pressure.
//!
//! Every component is stored on the padded lattice of its grid. The ghost
//! layer is kept consistent with the component's extension rule at all
//! times: constructors, arithmetic, and the solvers refill it after every
//! interior mutation, so the stencil operators can read neighbors blindly.

use crate::grid::{BoundaryMode, Grid};

/// Ghost-cell extension rule used when the grid is in Dirichlet mode.
///
/// `ZeroTrace` mirrors with a sign flip through the face (linear
/// extrapolation through zero at the face), `Even` mirrors without the
/// flip (homogeneous Neumann at the face). Periodic grids wrap regardless.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhostRule {
    ZeroTrace,
    Even,
}

/// Fill the ghost layer of one padded component, axis by axis so that edge
/// and corner ghosts receive the tensor-product extension.
pub(crate) fn fill_component_ghosts(grid: &Grid, data: &mut [f64], rule: GhostRule) {
    let dim = grid.dim();
    let periodic = grid.boundary() == BoundaryMode::Periodic;
    for axis in 0..dim {
        let n = grid.n(axis) as isize;
        let stride = grid.stride(axis);
        // Range of the orthogonal axes: padded for axes already filled,
        // interior for axes not yet filled.
        let range = |a: usize| -> (isize, isize) {
            if a >= dim {
                (0, 1)
            } else if a < axis {
                (-1, grid.n(a) as isize + 1)
            } else {
                (0, grid.n(a) as isize)
            }
        };
        let (lo_b, hi_b) = if axis == 0 { range(1) } else { range(0) };
        let (lo_c, hi_c) = if axis == 2 { range(1) } else { range(2) };
        for cb in lo_b..hi_b {
            for cc in lo_c..hi_c {
                let mut coord = [0isize; 3];
                if axis == 0 {
                    coord[1] = cb;
                    coord[2] = cc;
                } else if axis == 1 {
                    coord[0] = cb;
                    coord[2] = cc;
                } else {
                    coord[0] = cb;
                    coord[1] = cc;
                }
                coord[axis] = 0;
                let first = grid.idx(coord);
                coord[axis] = n - 1;
                let last = grid.idx(coord);
                let ghost_lo = first - stride;
                let ghost_hi = last + stride;
                if periodic {
                    data[ghost_lo] = data[last];
                    data[ghost_hi] = data[first];
                } else {
                    match rule {
                        GhostRule::ZeroTrace => {
                            data[ghost_lo] = -data[first];
                            data[ghost_hi] = -data[last];
                        }
                        GhostRule::Even => {
                            data[ghost_lo] = data[first];
                            data[ghost_hi] = data[last];
                        }
                    }
                }
            }
        }
    }
}

/// Shared access to the padded components of a field; lets the stencil
/// operators be generic over scalar, vector, and matrix fields.
pub trait FieldData: Sized + Clone {
    fn grid(&self) -> &Grid;
    fn components(&self) -> &[Vec<f64>];
    fn components_mut(&mut self) -> &mut [Vec<f64>];
    fn ghost_rule(&self) -> GhostRule;
    fn zeros_like(&self) -> Self;

    /// Re-derive the ghost layer from the interior values (the
    /// `enforce_boundary` operation). Idempotent by construction.
    fn fill_ghosts(&mut self) {
        let grid = *self.grid();
        let rule = self.ghost_rule();
        for comp in self.components_mut() {
            fill_component_ghosts(&grid, comp, rule);
        }
    }

    fn scale(&mut self, a: f64) {
        for comp in self.components_mut() {
            for v in comp.iter_mut() {
                *v *= a;
            }
        }
    }

    /// `self += a * other`, ghosts included (both operands have synced
    /// ghosts under the same rule, so the sum's ghosts stay synced).
    fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.grid(), other.grid(), "grid mismatch");
        let comps = other.components();
        for (mine, theirs) in self.components_mut().iter_mut().zip(comps) {
            for (v, w) in mine.iter_mut().zip(theirs.iter()) {
                *v += a * w;
            }
        }
    }

    /// Max-norm over interior cells and all components.
    fn linf(&self) -> f64 {
        let grid = *self.grid();
        let mut m: f64 = 0.0;
        for comp in self.components() {
            grid.for_each_interior(|flat, _| {
                m = m.max(comp[flat].abs());
            });
        }
        m
    }

    /// Unweighted Euclidean inner product over interior cells.
    fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.grid(), other.grid(), "grid mismatch");
        let grid = *self.grid();
        let mut s = 0.0;
        for (a, b) in self.components().iter().zip(other.components()) {
            grid.for_each_interior(|flat, _| {
                s += a[flat] * b[flat];
            });
        }
        s
    }

    /// Volume-weighted L2 norm over interior cells.
    fn l2(&self) -> f64 {
        (self.dot(self) * self.grid().cell_volume()).sqrt()
    }

    /// Largest absolute difference against another field (interior only).
    fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.grid(), other.grid(), "grid mismatch");
        let grid = *self.grid();
        let mut m: f64 = 0.0;
        for (a, b) in self.components().iter().zip(other.components()) {
            grid.for_each_interior(|flat, _| {
                m = m.max((a[flat] - b[flat]).abs());
            });
        }
        m
    }
}

/// One real value per cell; used for pressure and projection potentials.
/// Extends evenly through Dirichlet faces (homogeneous Neumann).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: [Vec<f64>; 1],
}

/// `dim` real components per cell; zero trace on Dirichlet faces.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

/// `dim × dim` entries per cell, row-major (`entry(r, c)` is component
/// `r * dim + c`); zero trace on Dirichlet faces unless built with an
/// even rule (pointwise products such as FᵀF extend evenly).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
    rule: GhostRule,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { grid: *grid, data: [vec![0.0; grid.padded_len()]] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let mut s = Self::zeros(grid);
        grid.for_each_interior(|flat, c| {
            s.data[0][flat] = f(grid.cell_center(c));
        });
        s.fill_ghosts();
        s
    }

    #[inline]
    pub fn at(&self, c: [isize; 3]) -> f64 {
        self.data[0][self.grid.idx(c)]
    }

    pub fn values(&self) -> &[f64] {
        &self.data[0]
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data[0]
    }

    /// Mean over interior cells.
    pub fn mean(&self) -> f64 {
        let mut s = 0.0;
        self.grid.for_each_interior(|flat, _| s += self.data[0][flat]);
        s / self.grid.cell_count() as f64
    }

    /// Subtract the interior mean and refresh ghosts.
    pub fn remove_mean(&mut self) {
        let m = self.mean();
        let data = &mut self.data[0];
        self.grid.for_each_interior(|flat, _| data[flat] -= m);
        self.fill_ghosts();
    }
}

impl FieldData for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn components(&self) -> &[Vec<f64>] {
        &self.data
    }
    fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.data
    }
    fn ghost_rule(&self) -> GhostRule {
        GhostRule::Even
    }
    fn zeros_like(&self) -> Self {
        Self::zeros(&self.grid)
    }
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            grid: *grid,
            comps: vec![vec![0.0; grid.padded_len()]; grid.dim()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut u = Self::zeros(grid);
        grid.for_each_interior(|flat, c| {
            let v = f(grid.cell_center(c));
            for a in 0..grid.dim() {
                u.comps[a][flat] = v[a];
            }
        });
        u.fill_ghosts();
        u
    }

    #[inline]
    pub fn at(&self, comp: usize, c: [isize; 3]) -> f64 {
        self.comps[comp][self.grid.idx(c)]
    }

    pub fn comp(&self, comp: usize) -> &[f64] {
        &self.comps[comp]
    }

    pub fn comp_mut(&mut self, comp: usize) -> &mut [f64] {
        &mut self.comps[comp]
    }
}

impl FieldData for VectorField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
    fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }
    fn ghost_rule(&self) -> GhostRule {
        GhostRule::ZeroTrace
    }
    fn zeros_like(&self) -> Self {
        Self::zeros(&self.grid)
    }
}

impl MatrixField {
    pub fn zeros(grid: &Grid) -> Self {
        MatrixField {
            grid: *grid,
            comps: vec![vec![0.0; grid.padded_len()]; grid.dim() * grid.dim()],
            rule: GhostRule::ZeroTrace,
        }
    }

    pub(crate) fn zeros_with_rule(grid: &Grid, rule: GhostRule) -> Self {
        let mut m = Self::zeros(grid);
        m.rule = rule;
        m
    }

    /// Entry convention: `f(x)[r][c]` is `F_{rc}`, i.e. `∂d_r/∂x_c` when F
    /// is a deformation gradient.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [[f64; 3]; 3]) -> Self {
        let dim = grid.dim();
        let mut m = Self::zeros(grid);
        grid.for_each_interior(|flat, c| {
            let v = f(grid.cell_center(c));
            for r in 0..dim {
                for cc in 0..dim {
                    m.comps[r * dim + cc][flat] = v[r][cc];
                }
            }
        });
        m.fill_ghosts();
        m
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::from_fn(grid, |_| {
            let mut e = [[0.0; 3]; 3];
            e[0][0] = 1.0;
            e[1][1] = 1.0;
            e[2][2] = 1.0;
            e
        })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, c: [isize; 3]) -> f64 {
        self.comps[row * self.grid.dim() + col][self.grid.idx(c)]
    }

    pub fn entry(&self, row: usize, col: usize) -> &[f64] {
        &self.comps[row * self.grid.dim() + col]
    }

    pub fn entry_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let dim = self.grid.dim();
        &mut self.comps[row * dim + col]
    }
}

impl FieldData for MatrixField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
    fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }
    fn ghost_rule(&self) -> GhostRule {
        self.rule
    }
    fn zeros_like(&self) -> Self {
        Self::zeros_with_rule(&self.grid, self.rule)
    }
}

/// The (u, F, P) triplet advanced by every solver.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: VectorField,
    pub f: MatrixField,
    pub p: ScalarField,
}

impl State {
    pub fn zero(grid: &Grid) -> State {
        State {
            t: 0.0,
            u: VectorField::zeros(grid),
            f: MatrixField::zeros(grid),
            p: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryMode, Grid};

    fn dirichlet_grid() -> Grid {
        Grid::new(2, &[4, 4], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap()
    }

    #[test]
    fn zero_state_is_exactly_zero() {
        let g = Grid::new(3, &[4, 4, 4], &[1.0; 3], BoundaryMode::Dirichlet).unwrap();
        let s = State::zero(&g);
        assert_eq!(s.u.linf(), 0.0);
        assert_eq!(s.f.linf(), 0.0);
        assert_eq!(s.p.mean(), 0.0);
    }

    #[test]
    fn zero_trace_ghosts_negate_the_interior() {
        let g = dirichlet_grid();
        let u = VectorField::from_fn(&g, |_| [1.0, 1.0, 0.0]);
        // ghost on the low-x face mirrors cell (0, j) with a sign flip
        assert_eq!(u.at(0, [-1, 2, 0]), -1.0);
        assert_eq!(u.at(0, [4, 2, 0]), -1.0);
        // interpolated trace at the face is zero
        assert_eq!(0.5 * (u.at(0, [-1, 1, 0]) + u.at(0, [0, 1, 0])), 0.0);
    }

    #[test]
    fn even_ghosts_copy_the_interior() {
        let g = dirichlet_grid();
        let s = ScalarField::from_fn(&g, |x| x[0]);
        assert_eq!(s.at([-1, 1, 0]), s.at([0, 1, 0]));
        assert_eq!(s.at([4, 1, 0]), s.at([3, 1, 0]));
    }

    #[test]
    fn periodic_ghosts_wrap() {
        let g = Grid::new(2, &[4, 4], &[1.0, 1.0], BoundaryMode::Periodic).unwrap();
        let s = ScalarField::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        assert_eq!(s.at([-1, 2, 0]), s.at([3, 2, 0]));
        assert_eq!(s.at([4, 2, 0]), s.at([0, 2, 0]));
        // corners wrap in both axes
        assert_eq!(s.at([-1, -1, 0]), s.at([3, 3, 0]));
    }

    #[test]
    fn fill_ghosts_is_idempotent_bitwise() {
        let g = dirichlet_grid();
        let mut u = VectorField::from_fn(&g, |x| [x[0] * x[1], x[0] - x[1], 0.0]);
        let once = u.clone();
        u.fill_ghosts();
        assert_eq!(u, once);
    }

    #[test]
    fn corner_ghosts_follow_the_tensor_extension() {
        let g = dirichlet_grid();
        let u = VectorField::from_fn(&g, |x| [x[0] + x[1], 0.0, 0.0]);
        // corner ghost (-1,-1) = -(-(interior(0,0))) through both faces
        assert_eq!(u.at(0, [-1, -1, 0]), u.at(0, [0, 0, 0]));
    }

    #[test]
    fn remove_mean_zeroes_the_mean() {
        let g = dirichlet_grid();
        let mut s = ScalarField::from_fn(&g, |x| 3.0 + x[0]);
        s.remove_mean();
        assert!(s.mean().abs() < 1e-15);
    }
}
