//! Binary phase fields: an explicit inside/outside value per grid cell plus
//! an analytic descriptor of the set beyond the grid.
//!
//! The grid carries the normalized representative convention: boundary cells
//! are exactly the cells whose full 3^n-neighborhood contains both phases,
//! which keeps checkerboard artifacts out of the bulk.

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Analytic description of the set beyond the explicit grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FarField {
    /// Constant phase beyond the grid.
    Constant { inside: bool },
    /// Half-space `{x_axis < level}` is inside (or its complement when
    /// `below` is false).
    HalfSpace { axis: usize, level: f64, below: bool },
    /// Subgraph `{x_n < psi(x')}` sampled per column of the grid along the
    /// last active axis; `psi` is extended by its edge values beyond the grid
    /// and by nearest-sample lookup between samples. `below = false` encodes
    /// the complement (epigraph).
    Subgraph { psi: Vec<f64>, below: bool },
}

impl FarField {
    /// Phase at a physical point outside the grid box.
    pub fn phase_at(&self, grid: &GridDomain, p: [f64; 3]) -> bool {
        match self {
            FarField::Constant { inside } => *inside,
            FarField::HalfSpace { axis, level, below } => (p[*axis] < *level) == *below,
            FarField::Subgraph { psi, below } => {
                let v = sample_psi(grid, psi, p);
                (p[grid.dim() - 1] < v) == *below
            }
        }
    }

    /// Asymptotic fraction of a large sphere occupied by the inside phase.
    /// Used for the radial tail attachment beyond the kernel cutoff.
    pub fn inside_fraction(&self) -> f64 {
        match self {
            FarField::Constant { inside } => {
                if *inside {
                    1.0
                } else {
                    0.0
                }
            }
            FarField::HalfSpace { .. } | FarField::Subgraph { .. } => 0.5,
        }
    }

    pub fn complement(&self) -> FarField {
        match self {
            FarField::Constant { inside } => FarField::Constant { inside: !inside },
            FarField::HalfSpace { axis, level, below } => {
                FarField::HalfSpace { axis: *axis, level: *level, below: !below }
            }
            FarField::Subgraph { psi, below } => {
                FarField::Subgraph { psi: psi.clone(), below: !below }
            }
        }
    }

    /// Analytic dilation x -> c + λ(x-c). Half-space levels and subgraph
    /// samples transform exactly; the constant tag is scale invariant.
    pub fn dilate(&self, grid: &GridDomain, lambda: f64, c: [f64; 3]) -> FarField {
        match self {
            FarField::Constant { .. } => self.clone(),
            FarField::HalfSpace { axis, level, below } => FarField::HalfSpace {
                axis: *axis,
                level: c[*axis] + lambda * (level - c[*axis]),
                below: *below,
            },
            FarField::Subgraph { psi, below } => {
                // Resample the dilated graph at the original column centers.
                let ext = grid.extents();
                let n = grid.dim();
                let cols: usize = ext[..n - 1].iter().product();
                let mut out = vec![0.0; cols];
                for (col, o) in out.iter_mut().enumerate() {
                    let mut p = [0.0f64; 3];
                    let c0 = col % ext[0];
                    p[0] = grid.origin()[0] + grid.h() * (c0 as f64 + 0.5);
                    if n == 3 {
                        let c1 = col / ext[0];
                        p[1] = grid.origin()[1] + grid.h() * (c1 as f64 + 0.5);
                    }
                    // preimage of the column position under the dilation
                    let mut q = p;
                    for a in 0..n - 1 {
                        q[a] = c[a] + (p[a] - c[a]) / lambda;
                    }
                    let v = sample_psi(grid, psi, q);
                    *o = c[n - 1] + lambda * (v - c[n - 1]);
                }
                FarField::Subgraph { psi: out, below: *below }
            }
        }
    }
}

fn sample_psi(grid: &GridDomain, psi: &[f64], p: [f64; 3]) -> f64 {
    let ext = grid.extents();
    let n = grid.dim();
    let col_of = |a: usize| -> usize {
        let t = (p[a] - grid.origin()[a]) / grid.h() - 0.5;
        let i = t.round();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(ext[a] - 1)
        }
    };
    match n {
        2 => psi[col_of(0)],
        3 => psi[col_of(0) + ext[0] * col_of(1)],
        _ => psi[0],
    }
}

/// A phase configuration: explicit phase per grid cell plus the far-field tag.
#[derive(Debug, Clone)]
pub struct BinaryField {
    grid: Arc<GridDomain>,
    phase: Vec<bool>,
    far: FarField,
}

impl BinaryField {
    /// Validated constructor: the far field must agree with the phase on the
    /// outermost cell ring.
    pub fn new(grid: Arc<GridDomain>, phase: Vec<bool>, far: FarField) -> Result<Self> {
        if phase.len() != grid.cell_count() {
            return Err(Error::Invalid(format!(
                "phase has {} entries, grid has {}",
                phase.len(),
                grid.cell_count()
            )));
        }
        if let FarField::Subgraph { psi, .. } = &far {
            let n = grid.dim();
            let cols: usize = grid.extents()[..n - 1].iter().product();
            if n < 2 || psi.len() != cols {
                return Err(Error::Invalid(format!(
                    "subgraph far field needs {cols} column samples, got {}",
                    psi.len()
                )));
            }
        }
        let f = Self { grid, phase, far };
        for cell in f.ring_cells() {
            if f.phase[cell] != f.far.phase_at(&f.grid, f.grid.center(cell)) {
                return Err(Error::FarFieldInconsistent { cell });
            }
        }
        Ok(f)
    }

    /// Rasterize an analytic set description over the whole grid. The far tag
    /// is consistent by construction.
    pub fn rasterize(grid: Arc<GridDomain>, far: FarField) -> Self {
        let phase = (0..grid.cell_count())
            .map(|i| far.phase_at(&grid, grid.center(i)))
            .collect();
        Self { grid, phase, far }
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn phase(&self) -> &[bool] {
        &self.phase
    }

    pub fn far_field(&self) -> &FarField {
        &self.far
    }

    pub fn is_inside(&self, cell: usize) -> bool {
        self.phase[cell]
    }

    /// Phase at an arbitrary physical point: explicit cell if on the grid,
    /// analytic far field otherwise.
    pub fn phase_at_point(&self, p: [f64; 3]) -> bool {
        match self.grid.cell_at(p) {
            Some(c) => self.phase[c],
            None => self.far.phase_at(&self.grid, p),
        }
    }

    /// Replace the phase of one cell (used by flip-based constructions).
    pub fn with_flipped(&self, cell: usize) -> BinaryField {
        let mut f = self.clone();
        f.phase[cell] = !f.phase[cell];
        f
    }

    /// Overwrite the phases of all Ω cells from a mask over Ω cells
    /// (in ascending Ω cell order).
    pub fn with_omega_phases(&self, omega_phase: &[bool]) -> BinaryField {
        assert_eq!(omega_phase.len(), self.grid.omega_cells().len());
        let mut f = self.clone();
        for (k, &cell) in self.grid.omega_cells().iter().enumerate() {
            f.phase[cell] = omega_phase[k];
        }
        f
    }

    pub fn complement(&self) -> BinaryField {
        BinaryField {
            grid: self.grid.clone(),
            phase: self.phase.iter().map(|&b| !b).collect(),
            far: self.far.complement(),
        }
    }

    fn ring_cells(&self) -> Vec<usize> {
        let ext = self.grid.extents();
        let n = self.grid.dim();
        (0..self.grid.cell_count())
            .filter(|&i| {
                let c = self.grid.coords(i);
                (0..n).any(|a| c[a] == 0 || c[a] + 1 == ext[a])
            })
            .collect()
    }

    /// Cells whose 3^n-neighborhood (including off-grid virtual neighbors,
    /// evaluated through the far field) contains both phases, in ascending
    /// index order.
    pub fn boundary_cells(&self) -> Vec<usize> {
        let n = self.grid.dim();
        let mut out = Vec::new();
        let offs = neighborhood_offsets(n);
        for i in 0..self.grid.cell_count() {
            let me = self.phase[i];
            let mut mixed = false;
            for &off in &offs {
                let other = match self.grid.offset(i, off) {
                    Some(j) => self.phase[j],
                    None => {
                        let mut p = self.grid.center(i);
                        for a in 0..n {
                            p[a] += off[a] as f64 * self.grid.h();
                        }
                        self.far.phase_at(&self.grid, p)
                    }
                };
                if other != me {
                    mixed = true;
                    break;
                }
            }
            if mixed {
                out.push(i);
            }
        }
        out
    }

    /// Phase field of λE about `center`, resampled on the same grid by
    /// pre-image cell centers; the far tag is dilated analytically.
    pub fn dilate(&self, lambda: f64, center: Option<[f64; 3]>) -> Result<BinaryField> {
        if !(lambda > 0.0) {
            return Err(Error::Invalid(format!("dilation factor must be positive, got {lambda}")));
        }
        let c = center.unwrap_or_else(|| self.omega_centroid());
        let far = self.far.dilate(&self.grid, lambda, c);
        let phase = (0..self.grid.cell_count())
            .map(|i| {
                let p = self.grid.center(i);
                let mut q = [0.0; 3];
                for a in 0..3 {
                    q[a] = c[a] + (p[a] - c[a]) / lambda;
                }
                self.phase_at_point(q)
            })
            .collect();
        Ok(BinaryField { grid: self.grid.clone(), phase, far })
    }

    /// Geometric center of the Ω bounding box (default dilation center).
    pub fn omega_centroid(&self) -> [f64; 3] {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for &cell in self.grid.omega_cells() {
            let c = self.grid.coords(cell);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        let mut p = [0.0; 3];
        for a in 0..3 {
            p[a] = self.grid.origin()[a] + self.grid.h() * (lo[a] + hi[a] + 1) as f64 * 0.5;
        }
        p
    }
}

/// The 3^n - 1 nonzero offsets of the full neighborhood.
pub fn neighborhood_offsets(n: usize) -> Vec<[i32; 3]> {
    let r = |active: bool| if active { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for dz in r(n >= 3) {
        for dy in r(n >= 2) {
            for dx in -1..=1 {
                if dx != 0 || dy != 0 || dz != 0 {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}
