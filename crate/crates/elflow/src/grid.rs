//! Rectangular cell-centered grid with a one-cell ghost layer per axis.
//!
//! Cells are centered at `x_a(i) = (i + 1/2) h_a` inside the box `[0, L_a]`.
//! Dirichlet mode models the bounded domain with zero trace on the box
//! faces; Periodic mode exists for manufactured-solution and oracle tests.

use thiserror::Error;

/// Boundary treatment of the box faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Zero trace on the faces for velocity/deformation fields, homogeneous
    /// Neumann for pressure-like scalars.
    Dirichlet,
    /// All fields wrap around.
    Periodic,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("spatial dimension must be 2 or 3, got {0}")]
    InvalidDim(usize),
    #[error("axis {axis} has {n} cells, need at least 4")]
    TooFewCells { axis: usize, n: usize },
    #[error("axis {axis} has nonpositive length")]
    NonpositiveLength { axis: usize },
}

/// Cell-centered box discretization. Cheap to copy; fields store it by value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    l: [f64; 3],
    h: [f64; 3],
    boundary: BoundaryMode,
}

impl Grid {
    pub fn new(dim: usize, n: &[usize], l: &[f64], boundary: BoundaryMode) -> Result<Grid, GridError> {
        if dim != 2 && dim != 3 {
            return Err(GridError::InvalidDim(dim));
        }
        assert_eq!(n.len(), dim, "cell counts must have one entry per axis");
        assert_eq!(l.len(), dim, "box lengths must have one entry per axis");
        let mut na = [1usize; 3];
        let mut la = [1.0f64; 3];
        let mut ha = [1.0f64; 3];
        for a in 0..dim {
            if n[a] < 4 {
                return Err(GridError::TooFewCells { axis: a, n: n[a] });
            }
            if !(l[a] > 0.0) {
                return Err(GridError::NonpositiveLength { axis: a });
            }
            na[a] = n[a];
            la[a] = l[a];
            ha[a] = l[a] / n[a] as f64;
        }
        Ok(Grid { dim, n: na, l: la, h: ha, boundary })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    /// Interior cell count along `axis` (1 for inactive axes).
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn len(&self, axis: usize) -> f64 {
        self.l[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn h_min(&self) -> f64 {
        (0..self.dim).map(|a| self.h[a]).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h[a]).product()
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.l[a]).product()
    }

    pub fn cell_count(&self) -> usize {
        (0..self.dim).map(|a| self.n[a]).product()
    }

    /// Extent of the padded storage along `axis` (interior + 2 ghosts on
    /// active axes, 1 on inactive axes).
    pub fn padded(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.n[axis] + 2
        } else {
            1
        }
    }

    pub fn padded_len(&self) -> usize {
        self.padded(0) * self.padded(1) * self.padded(2)
    }

    /// Stride of `axis` in the padded flat layout (axis 0 varies fastest).
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.padded(0),
            _ => self.padded(0) * self.padded(1),
        }
    }

    /// Flat index of a cell; `c[a]` ranges over `-1..=n[a]` on active axes
    /// (−1 and `n` address the ghost layer) and must be 0 on inactive axes.
    #[inline]
    pub fn idx(&self, c: [isize; 3]) -> usize {
        debug_assert!((0..3).all(|a| {
            if a < self.dim {
                c[a] >= -1 && c[a] <= self.n[a] as isize
            } else {
                c[a] == 0
            }
        }));
        let off = |a: usize| -> usize {
            if a < self.dim {
                (c[a] + 1) as usize
            } else {
                0
            }
        };
        off(0) + self.padded(0) * (off(1) + self.padded(1) * off(2))
    }

    /// Center coordinate of interior cell `i` along `axis`.
    #[inline]
    pub fn pos(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h[axis]
    }

    /// Center coordinates of an interior cell (third entry 0 for dim 2).
    #[inline]
    pub fn cell_center(&self, c: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.pos(a, c[a]);
        }
        x
    }

    /// Visit every interior cell in a fixed order (axis 0 fastest); the
    /// closure receives the padded flat index and the cell coordinates.
    pub fn for_each_interior<F: FnMut(usize, [usize; 3])>(&self, mut f: F) {
        let nz = if self.dim == 3 { self.n[2] } else { 1 };
        for k in 0..nz {
            for j in 0..self.n[1] {
                let mut flat = self.idx([0, j as isize, k as isize]);
                for i in 0..self.n[0] {
                    f(flat, [i, j, k]);
                    flat += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_computes_spacings() {
        let g = Grid::new(2, &[8, 8], &[1.0, 1.0], BoundaryMode::Periodic).unwrap();
        assert_eq!(g.h(0), 0.125);
        assert_eq!(g.h(1), 0.125);
        assert_eq!(g.cell_count(), 64);
    }

    #[test]
    fn minimum_size_3d_is_valid() {
        let g = Grid::new(3, &[4, 4, 4], &[1.0, 1.0, 1.0], BoundaryMode::Dirichlet).unwrap();
        assert_eq!(g.cell_count(), 64);
        assert_eq!(g.padded_len(), 6 * 6 * 6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(
            Grid::new(2, &[2, 2], &[1.0, 1.0], BoundaryMode::Dirichlet),
            Err(GridError::TooFewCells { axis: 0, n: 2 })
        );
        assert_eq!(
            Grid::new(4, &[4, 4, 4, 4], &[1.0; 4], BoundaryMode::Periodic),
            Err(GridError::InvalidDim(4))
        );
        assert_eq!(
            Grid::new(2, &[8, 8], &[1.0, 0.0], BoundaryMode::Periodic),
            Err(GridError::NonpositiveLength { axis: 1 })
        );
    }

    #[test]
    fn interior_iteration_covers_every_cell_once() {
        let g = Grid::new(2, &[5, 4], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap();
        let mut seen = vec![0u8; g.padded_len()];
        let mut count = 0;
        g.for_each_interior(|flat, c| {
            assert_eq!(flat, g.idx([c[0] as isize, c[1] as isize, c[2] as isize]));
            seen[flat] += 1;
            count += 1;
        });
        assert_eq!(count, 20);
        assert!(seen.iter().all(|&s| s <= 1));
    }

    #[test]
    fn cell_centers_live_inside_the_box() {
        let g = Grid::new(2, &[4, 4], &[2.0, 1.0], BoundaryMode::Dirichlet).unwrap();
        assert_eq!(g.pos(0, 0), 0.25);
        assert_eq!(g.pos(0, 3), 1.75);
        assert_eq!(g.pos(1, 0), 0.125);
    }
}
