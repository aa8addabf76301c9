//! Cell-centred structured grids and the discrete differential operators.
//!
//! Fields are flat `Vec<f64>`s with components interleaved per cell
//! (`cell * ncomp + comp`); cells are ordered with x fastest,
//! `cell = (k * n1 + j) * n0 + i`.
//!
//! At slip walls neighbours are found by mirror reflection about the wall;
//! reflected values pick up the parity sign of their tensor kind, which makes
//! normal velocity odd (`v·n = 0` on the wall) and tangential velocity even.

mod ops;

pub use ops::{Operators, Scheme};

use crate::error::{Error, Result};
use crate::tensor::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum Boundary {
    Periodic,
    SlipBox,
}

/// Transformation behaviour of a field under a mirror reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Scalar,
    /// `d` components, one per grid axis.
    Vector,
    /// Nine components of a 3×3 tensor, row-major.
    Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    h: [f64; 3],
    boundary: Boundary,
}

impl Grid {
    /// `n` and `h` are read for the first `dim` axes only.
    pub fn new(dim: usize, n: [usize; 3], h: [f64; 3], boundary: Boundary) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid("grid dimension must be 2 or 3"));
        }
        let mut nn = [1usize; 3];
        let mut hh = [1.0f64; 3];
        for a in 0..dim {
            if n[a] < 4 {
                return Err(Error::invalid("grid needs at least 4 cells per axis"));
            }
            if !(h[a] > 0.0) || !h[a].is_finite() {
                return Err(Error::invalid("grid spacing must be positive"));
            }
            nn[a] = n[a];
            hh[a] = h[a];
        }
        Ok(Grid {
            dim,
            n: nn,
            h: hh,
            boundary,
        })
    }

    /// Square/cubic grid on `[0, length]^dim`.
    pub fn uniform(dim: usize, cells: usize, length: f64, boundary: Boundary) -> Result<Self> {
        let h = length / cells as f64;
        Self::new(dim, [cells; 3], [h; 3], boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lengths(&self) -> [f64; 3] {
        let mut l = [0.0; 3];
        for a in 0..self.dim {
            l[a] = self.n[a] as f64 * self.h[a];
        }
        l
    }

    /// Cell volume (area in 2D).
    pub fn volume(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }

    pub fn ncomp(&self, kind: Kind) -> usize {
        match kind {
            Kind::Scalar => 1,
            Kind::Vector => self.dim,
            Kind::Tensor => 9,
        }
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[2] * self.n[1] + ijk[1]) * self.n[0] + ijk[0]
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> [usize; 3] {
        let i = cell % self.n[0];
        let j = (cell / self.n[0]) % self.n[1];
        let k = cell / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    pub fn center(&self, cell: usize) -> Vec3 {
        let c = self.coords(cell);
        let mut x = Vec3::ZERO;
        for a in 0..self.dim {
            x.0[a] = (c[a] as f64 + 0.5) * self.h[a];
        }
        x
    }

    /// The cell at `cell + offset`, and per axis whether a wall reflection
    /// was applied. Offsets must not exceed the cell count of the axis.
    pub fn shifted(&self, cell: usize, offset: [isize; 3]) -> (usize, [bool; 3]) {
        let mut c = self.coords(cell);
        let mut refl = [false; 3];
        for a in 0..self.dim {
            if offset[a] == 0 {
                continue;
            }
            let n = self.n[a] as isize;
            let mut j = c[a] as isize + offset[a];
            match self.boundary {
                Boundary::Periodic => j = j.rem_euclid(n),
                Boundary::SlipBox => {
                    if j < 0 {
                        j = -j - 1;
                        refl[a] = true;
                    } else if j >= n {
                        j = 2 * n - 1 - j;
                        refl[a] = true;
                    }
                }
            }
            c[a] = j as usize;
        }
        (self.index(c), refl)
    }

    /// Sign picked up by component `comp` of a `kind` field under the
    /// reflections `refl`.
    #[inline]
    pub fn parity(&self, kind: Kind, comp: usize, refl: [bool; 3]) -> f64 {
        let flip = match kind {
            Kind::Scalar => false,
            Kind::Vector => refl[comp],
            Kind::Tensor => refl[comp / 3] ^ refl[comp % 3],
        };
        if flip {
            -1.0
        } else {
            1.0
        }
    }

    /// `Σ f · vol` for one component of a field.
    pub fn integrate(&self, f: &[f64], ncomp: usize, comp: usize) -> f64 {
        let s: f64 = f.iter().skip(comp).step_by(ncomp).sum();
        s * self.volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(Grid::new(2, [3, 8, 1], [0.1; 3], Boundary::Periodic).is_err());
        assert!(Grid::new(2, [8, 8, 1], [0.0, 0.1, 1.0], Boundary::Periodic).is_err());
        assert!(Grid::new(4, [8; 3], [0.1; 3], Boundary::Periodic).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(3, [4, 5, 6], [1.0; 3], Boundary::Periodic).unwrap();
        for c in 0..g.len() {
            assert_eq!(g.index(g.coords(c)), c);
        }
    }

    #[test]
    fn wall_reflection() {
        let g = Grid::uniform(2, 4, 1.0, Boundary::SlipBox).unwrap();
        let (c, r) = g.shifted(0, [-1, 0, 0]);
        assert_eq!((c, r), (0, [true, false, false]));
        let (c, r) = g.shifted(3, [2, 0, 0]);
        assert_eq!((c, r), (2, [true, false, false]));
        assert_eq!(g.parity(Kind::Vector, 0, r), -1.0);
        assert_eq!(g.parity(Kind::Vector, 1, r), 1.0);
        assert_eq!(g.parity(Kind::Tensor, 0, r), 1.0);
        assert_eq!(g.parity(Kind::Tensor, 1, r), -1.0);
        let p = Grid::uniform(2, 4, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(p.shifted(0, [-1, -1, 0]).0, 15);
    }
}
