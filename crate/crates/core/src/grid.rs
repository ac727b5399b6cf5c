//! Lattice geometry: an n-dimensional axis-aligned grid of cubic cells with a
//! designated open working region Ω and fractional order s.
//!
//! Cells are indexed flat with axis 0 fastest. Cell `[i0,i1,i2]` occupies the
//! cube `origin + h*[i0,i0+1) x ...` and its center is `origin + h*(i+0.5)`.
//! Unused axes (for n < 3) have extent 1.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Surface measure of the unit sphere S^{n-1} in R^n.
pub fn sphere_surface(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dimension restricted to 1..=3"),
    }
}

/// Lebesgue measure of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!("dimension restricted to 1..=3"),
    }
}

/// How the working region Ω is specified at construction time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum OmegaSpec {
    /// Axis-aligned index box `[lo, hi)` per axis.
    IndexBox { lo: [usize; 3], hi: [usize; 3] },
    /// Centered box of the given cell counts per axis.
    CenteredBox { size: [usize; 3] },
    /// Explicit per-cell mask.
    Mask(Vec<bool>),
}

/// Immutable grid geometry shared by all phase fields and kernels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridDomain {
    n: usize,
    h: f64,
    s: f64,
    extents: [usize; 3],
    origin: [f64; 3],
    omega_mask: Vec<bool>,
    #[serde(skip)]
    omega_cells: Vec<usize>,
}

impl GridDomain {
    /// Validated constructor. Ω must be nonempty and strictly interior: at
    /// least one full ring of non-Ω cells on every side along the active axes.
    pub fn build(
        n: usize,
        h: f64,
        extents_in: &[usize],
        origin_in: &[f64],
        omega: OmegaSpec,
        s: f64,
    ) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension must be 1..=3, got {n}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("cell size must be positive, got {h}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::SOutOfRange(s));
        }
        if extents_in.len() != n || origin_in.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {n} extents and origin components, got {} and {}",
                extents_in.len(),
                origin_in.len()
            )));
        }
        let mut extents = [1usize; 3];
        let mut origin = [0.0f64; 3];
        for a in 0..n {
            if extents_in[a] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "extent along axis {a} must be at least 3, got {}",
                    extents_in[a]
                )));
            }
            extents[a] = extents_in[a];
            origin[a] = origin_in[a];
        }
        let cells = extents[0] * extents[1] * extents[2];
        let omega_mask = match omega {
            OmegaSpec::Mask(m) => {
                if m.len() != cells {
                    return Err(Error::InvalidGrid(format!(
                        "omega mask has {} entries, grid has {cells} cells",
                        m.len()
                    )));
                }
                m
            }
            OmegaSpec::IndexBox { lo, hi } => {
                let mut m = vec![false; cells];
                for a in 0..n {
                    if lo[a] >= hi[a] || hi[a] > extents[a] {
                        return Err(Error::InvalidGrid(format!(
                            "invalid Ω index box along axis {a}: [{}, {})",
                            lo[a], hi[a]
                        )));
                    }
                }
                for (i, v) in m.iter_mut().enumerate() {
                    let c = coords_of(i, extents);
                    let inside =
                        (0..n).all(|a| c[a] >= lo[a] && c[a] < hi[a]);
                    *v = inside;
                }
                m
            }
            OmegaSpec::CenteredBox { size } => {
                let mut lo = [0usize; 3];
                let mut hi = [1usize; 3];
                for a in 0..n {
                    if size[a] == 0 || size[a] > extents[a] {
                        return Err(Error::InvalidGrid(format!(
                            "invalid centered Ω size along axis {a}: {}",
                            size[a]
                        )));
                    }
                    lo[a] = (extents[a] - size[a]) / 2;
                    hi[a] = lo[a] + size[a];
                }
                return Self::build(n, h, extents_in, origin_in, OmegaSpec::IndexBox { lo, hi }, s);
            }
        };
        // Strictly interior: no Ω cell on the outermost ring of active axes.
        let mut any = false;
        for (i, &in_omega) in omega_mask.iter().enumerate() {
            if !in_omega {
                continue;
            }
            any = true;
            let c = coords_of(i, extents);
            for a in 0..n {
                if c[a] == 0 || c[a] + 1 == extents[a] {
                    return Err(Error::OmegaNotInterior);
                }
            }
        }
        if !any {
            return Err(Error::InvalidGrid("Ω is empty".into()));
        }
        let omega_cells = omega_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Ok(Self { n, h, s, extents, origin, omega_mask, omega_cells })
    }

    /// Rebuild caches after deserialization.
    pub fn refresh(&mut self) {
        self.omega_cells = self
            .omega_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn extents(&self) -> [usize; 3] {
        self.extents
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn cell_count(&self) -> usize {
        self.extents[0] * self.extents[1] * self.extents[2]
    }

    pub fn omega_mask(&self) -> &[bool] {
        &self.omega_mask
    }

    /// Ω cells in ascending index order.
    pub fn omega_cells(&self) -> &[usize] {
        &self.omega_cells
    }

    pub fn in_omega(&self, cell: usize) -> bool {
        self.omega_mask[cell]
    }

    pub fn coords(&self, cell: usize) -> [usize; 3] {
        coords_of(cell, self.extents)
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.extents[0] * (c[1] + self.extents[1] * c[2])
    }

    /// Physical center of a cell.
    pub fn center(&self, cell: usize) -> [f64; 3] {
        let c = self.coords(cell);
        let mut p = [0.0; 3];
        for a in 0..3 {
            p[a] = self.origin[a] + self.h * (c[a] as f64 + 0.5);
        }
        p
    }

    /// Cell containing a physical point, or None if outside the grid box.
    pub fn cell_at(&self, p: [f64; 3]) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..self.n {
            let t = (p[a] - self.origin[a]) / self.h;
            if t < 0.0 || t >= self.extents[a] as f64 {
                return None;
            }
            c[a] = t as usize;
        }
        Some(self.index(c))
    }

    /// Offset a cell by an integer vector; None if it leaves the grid.
    pub fn offset(&self, cell: usize, off: [i32; 3]) -> Option<usize> {
        let c = self.coords(cell);
        let mut r = [0usize; 3];
        for a in 0..3 {
            let v = c[a] as i64 + off[a] as i64;
            if v < 0 || v >= self.extents[a] as i64 {
                return None;
            }
            r[a] = v as usize;
        }
        Some(self.index(r))
    }

    /// Squared Euclidean distance between two cell centers.
    pub fn center_dist2(&self, a: usize, b: usize) -> f64 {
        let pa = self.center(a);
        let pb = self.center(b);
        let mut d2 = 0.0;
        for x in 0..self.n {
            let d = pa[x] - pb[x];
            d2 += d * d;
        }
        d2
    }

    /// Hash of the immutable geometry, used to stamp reports.
    pub fn geometry_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.n.to_le_bytes());
        hasher.update(self.h.to_le_bytes());
        hasher.update(self.s.to_le_bytes());
        for e in self.extents {
            hasher.update(e.to_le_bytes());
        }
        for o in self.origin {
            hasher.update(o.to_le_bytes());
        }
        for &b in &self.omega_mask {
            hasher.update([b as u8]);
        }
        let d = hasher.finalize();
        format!("{:x}", d)[..16].to_string()
    }
}

fn coords_of(i: usize, extents: [usize; 3]) -> [usize; 3] {
    let x = i % extents[0];
    let r = i / extents[0];
    [x, r % extents[1], r / extents[1]]
}
