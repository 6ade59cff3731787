//! Structured parallelepiped grids and two-point transmissibilities.
//!
//! Cells are numbered `i + nx (j + ny k)`. The third coordinate is depth,
//! growing downward from the top of the reservoir.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least one cell per direction and positive sizes")]
    Shape,
    #[error("non-positive conductivity {value} on an active face next to cell {cell}")]
    Conductivity { cell: usize, value: f64 },
    #[error("expected {expected} cell values, got {found}")]
    Length { expected: usize, found: usize },
}

/// Interior face between `owner` and `neighbor = owner + stride(axis)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    pub owner: usize,
    pub neighbor: usize,
    pub axis: usize,
    pub area: f64,
    pub d_owner: f64,
    pub d_neighbor: f64,
}

/// Face on the outer boundary of `cell`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: usize,
    /// `+1` on the high side of the axis, `−1` on the low side.
    pub side: i8,
    pub area: f64,
    pub d_cell: f64,
}

#[derive(Clone, Debug)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    faces: Vec<Face>,
    boundary: Vec<BoundaryFace>,
}

impl StructuredGrid {
    pub fn new(nx: usize, ny: usize, nz: usize, dx: f64, dy: f64, dz: f64) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 || nz == 0 || !(dx > 0.0 && dy > 0.0 && dz > 0.0) {
            return Err(GridError::Shape);
        }
        let mut g = Self {
            nx,
            ny,
            nz,
            dx,
            dy,
            dz,
            faces: Vec::new(),
            boundary: Vec::new(),
        };
        let sizes = [dx, dy, dz];
        let areas = [dy * dz, dx * dz, dx * dy];
        let counts = [nx, ny, nz];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let c = g.index(i, j, k);
                    let ijk = [i, j, k];
                    for axis in 0..3 {
                        if ijk[axis] + 1 < counts[axis] {
                            g.faces.push(Face {
                                owner: c,
                                neighbor: c + g.stride(axis),
                                axis,
                                area: areas[axis],
                                d_owner: 0.5 * sizes[axis],
                                d_neighbor: 0.5 * sizes[axis],
                            });
                        }
                        for (side, on_edge) in [(-1i8, ijk[axis] == 0), (1, ijk[axis] + 1 == counts[axis])] {
                            if on_edge {
                                g.boundary.push(BoundaryFace {
                                    cell: c,
                                    axis,
                                    side,
                                    area: areas[axis],
                                    d_cell: 0.5 * sizes[axis],
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    /// Grid covering `[0, lx] × [0, ly] × [0, lz]`.
    pub fn from_extent(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, lz: f64) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(GridError::Shape);
        }
        Self::new(nx, ny, nz, lx / nx as f64, ly / ny as f64, lz / nz as f64)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    pub fn coords(&self, c: usize) -> (usize, usize, usize) {
        (c % self.nx, (c / self.nx) % self.ny, c / (self.nx * self.ny))
    }

    fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.nx,
            _ => self.nx * self.ny,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    pub fn center(&self, c: usize) -> [f64; 3] {
        let (i, j, k) = self.coords(c);
        [
            (i as f64 + 0.5) * self.dx,
            (j as f64 + 0.5) * self.dy,
            (k as f64 + 0.5) * self.dz,
        ]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    /// Cell-to-cell adjacency pattern including the diagonal, as sorted rows.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut rows: Vec<Vec<usize>> = (0..self.n_cells()).map(|c| vec![c]).collect();
        for f in &self.faces {
            rows[f.owner].push(f.neighbor);
            rows[f.neighbor].push(f.owner);
        }
        for r in &mut rows {
            r.sort_unstable();
        }
        rows
    }
}

/// `|σ| k_i k_j / (k_i d_j + k_j d_i)`: the flux `(u_i − u_j)|σ| / (d_i/k_i + d_j/k_j)`
/// through the face per unit potential difference.
/// Zero when both conductivities vanish.
pub fn face_transmissibility(area: f64, k_i: f64, d_i: f64, k_j: f64, d_j: f64) -> f64 {
    let den = k_i * d_j + k_j * d_i;
    if den == 0.0 {
        return 0.0;
    }
    area * k_i * k_j / den
}

/// Interior-face transmissibilities for per-cell diagonal conductivities.
pub fn transmissibilities(grid: &StructuredGrid, k_cell: &[[f64; 3]]) -> Result<Vec<f64>, GridError> {
    if k_cell.len() != grid.n_cells() {
        return Err(GridError::Length {
            expected: grid.n_cells(),
            found: k_cell.len(),
        });
    }
    grid.faces()
        .iter()
        .map(|f| {
            let ki = k_cell[f.owner][f.axis];
            let kj = k_cell[f.neighbor][f.axis];
            for (cell, v) in [(f.owner, ki), (f.neighbor, kj)] {
                if !(v > 0.0) {
                    return Err(GridError::Conductivity { cell, value: v });
                }
            }
            Ok(face_transmissibility(f.area, ki, f.d_owner, kj, f.d_neighbor))
        })
        .collect()
}

/// One-sided `|σ| k_i / d_{i,σ}` for a boundary face.
pub fn boundary_transmissibility(face: &BoundaryFace, k_cell: &[[f64; 3]]) -> f64 {
    face.area * k_cell[face.cell][face.axis] / face.d_cell
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_and_boundary_counts() {
        let g = StructuredGrid::new(3, 2, 2, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(g.faces().len(), 2 * 2 * 2 + 3 * 1 * 2 + 3 * 2);
        assert_eq!(g.boundary_faces().len(), 2 * (2 * 2 + 3 * 2 + 3 * 2));
    }

    #[test]
    fn oriented_areas_close() {
        // interior faces contribute +n to owner and −n to neighbour; sum over
        // all faces of a cell vanishes once boundary faces are included
        let g = StructuredGrid::new(3, 3, 2, 1.0, 2.0, 0.5).unwrap();
        let mut acc = vec![[0.0f64; 3]; g.n_cells()];
        for f in g.faces() {
            acc[f.owner][f.axis] += f.area;
            acc[f.neighbor][f.axis] -= f.area;
        }
        for b in g.boundary_faces() {
            acc[b.cell][b.axis] += b.side as f64 * b.area;
        }
        for a in acc {
            assert!(a.iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn homogeneous_cube() {
        let h = 2.0;
        let g = StructuredGrid::new(2, 2, 2, h, h, h).unwrap();
        let t = transmissibilities(&g, &vec![[3.0; 3]; 8]).unwrap();
        assert!(t.iter().all(|&v| (v - 3.0 * h).abs() < 1e-14));
    }

    #[test]
    fn zero_conductivity_rejected() {
        let g = StructuredGrid::new(2, 1, 1, 1.0, 1.0, 1.0).unwrap();
        assert!(transmissibilities(&g, &[[1.0; 3], [0.0; 3]]).is_err());
    }
}
