//! Scalar energies: pairwise interactions, the localized fractional
//! perimeter, the localized Gagliardo contribution, and the prescribed-
//! curvature (Massari-type) functional.
//!
//! Discrete model shared by every module: grid-cell pairs interact through
//! the tabulated weights within the kernel cutoff; off-grid cells inside the
//! cutoff are resolved analytically through the far-field tag; everything
//! beyond the cutoff is attached as the radial tail mass times the far
//! field's asymptotic phase fraction. A pair of cells contributes once when
//! at least one endpoint lies in the localization region.
//!
//! The perimeter itself is accumulated in a single pass over the region with
//! pair weights split exactly in half when both endpoints are in the region.
//! Halving is exact in binary floating point, and the pass sees only the
//! "phases differ" indicator, so the perimeter of a set and of its complement
//! are the same summands in the same order: complement symmetry holds to the
//! bit. The two interaction terms of the definition are evaluated separately
//! through [`interaction`] as an independent route and reported alongside.

use crate::error::{Error, Result};
use crate::exec;
use crate::field::{BinaryField, FarField};
use crate::grid::GridDomain;
use crate::kernel::KernelTable;
use serde::{Deserialize, Serialize};

/// A measurable set assembled from an explicit in-grid mask plus optionally
/// one phase of a far-field tag (the part of that phase beyond the grid).
#[derive(Debug, Clone)]
pub struct CellSet {
    mask: Vec<bool>,
    cells: Vec<usize>,
    far: Option<(FarField, bool)>,
}

impl CellSet {
    pub fn new(grid: &GridDomain, mask: Vec<bool>, far: Option<(FarField, bool)>) -> Self {
        assert_eq!(mask.len(), grid.cell_count());
        let cells = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Self { mask, cells, far }
    }

    /// In-grid members, ascending.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    fn far_phase_at(&self, grid: &GridDomain, p: [f64; 3]) -> bool {
        match &self.far {
            Some((far, phase)) => far.phase_at(grid, p) == *phase,
            None => false,
        }
    }

    /// Asymptotic fraction of a large sphere covered by this set.
    pub fn far_fraction(&self) -> f64 {
        match &self.far {
            Some((far, phase)) => {
                if *phase {
                    far.inside_fraction()
                } else {
                    1.0 - far.inside_fraction()
                }
            }
            None => 0.0,
        }
    }

    /// This set minus the given in-grid cells; the far part is kept.
    pub fn without(&self, grid: &GridDomain, removed: &[bool]) -> CellSet {
        let mask: Vec<bool> = self
            .mask
            .iter()
            .enumerate()
            .map(|(i, &b)| b && !removed[i])
            .collect();
        CellSet::new(grid, mask, self.far.clone())
    }
}

/// Set builders for the phase classes of a field, optionally restricted to a
/// region (in-grid cell mask).
pub fn phase_set(field: &BinaryField, inside: bool, region: Option<&[bool]>) -> CellSet {
    let grid = field.grid();
    let mask = (0..grid.cell_count())
        .map(|i| field.is_inside(i) == inside && region.map_or(true, |r| r[i]))
        .collect();
    let far = match region {
        Some(_) => None,
        None => Some((field.far_field().clone(), inside)),
    };
    CellSet::new(grid, mask, far)
}

/// Phase class of a field outside a region (keeps the far part).
pub fn phase_set_outside(field: &BinaryField, inside: bool, region: &[bool]) -> CellSet {
    let grid = field.grid();
    let mask = (0..grid.cell_count())
        .map(|i| field.is_inside(i) == inside && !region[i])
        .collect();
    CellSet::new(grid, mask, Some((field.far_field().clone(), inside)))
}

/// Interaction energy L(A,B) between disjoint sets: tabulated weights for
/// in-cutoff pairs (off-grid members of B resolved analytically), plus the
/// radial tail of each set's far part against the other's grid cells.
///
/// Grid-to-grid pairs are sourced from A's cells, so pass the smaller set
/// first when performance matters. Symmetric in A and B up to summation
/// order.
pub fn interaction(
    grid: &GridDomain,
    kernel: &KernelTable,
    a: &CellSet,
    b: &CellSet,
) -> Result<f64> {
    for &i in a.cells() {
        if b.contains(i) {
            return Err(Error::SetsNotDisjoint { cell: i });
        }
    }
    let h = grid.h();
    let tau = kernel.tail_per_cell();
    let offsets = kernel.offsets();

    // A-grid against B-grid and B-far within the cutoff.
    let main = exec::sum_indexed(a.cells().len(), |k| {
        let i = a.cells()[k];
        let mut acc = 0.0;
        for &(off, w) in offsets {
            match grid.offset(i, off) {
                Some(j) => {
                    if b.contains(j) {
                        acc += w;
                    }
                }
                None => {
                    if b.far.is_some() {
                        let mut p = grid.center(i);
                        for ax in 0..3 {
                            p[ax] += off[ax] as f64 * h;
                        }
                        if b.far_phase_at(grid, p) {
                            acc += w;
                        }
                    }
                }
            }
        }
        acc
    });

    // B-grid against A-far within the cutoff.
    let cross = if a.far.is_some() {
        exec::sum_indexed(b.cells().len(), |k| {
            let j = b.cells()[k];
            let mut acc = 0.0;
            for &(off, w) in offsets {
                if grid.offset(j, off).is_none() {
                    let mut p = grid.center(j);
                    for ax in 0..3 {
                        p[ax] += off[ax] as f64 * h;
                    }
                    if a.far_phase_at(grid, p) {
                        acc += w;
                    }
                }
            }
            acc
        })
    } else {
        0.0
    };

    // Radial tails beyond the cutoff.
    let tails = a.cells().len() as f64 * tau * b.far_fraction()
        + b.cells().len() as f64 * tau * a.far_fraction();

    Ok(main + cross + tails)
}

/// Report emitted by every perimeter/energy evaluation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnergyReport {
    /// Localized fractional perimeter (symmetric single-pass summation).
    pub per_s: f64,
    /// L(E ∩ region, E^c), definitional route.
    pub l_inside_outside: f64,
    /// L(E ∩ region^c, E^c ∩ region), definitional route.
    pub l_outside_inside: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub massari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_r: Option<f64>,
    pub meta: EnergyMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnergyMeta {
    pub grid_hash: String,
    pub kernel_hash: String,
    pub r_cut: f64,
    /// Upper bound on the energy attributed to the uniform tail attachment.
    pub tail_bound: f64,
}

fn meta_for(grid: &GridDomain, kernel: &KernelTable, region_cells: usize) -> EnergyMeta {
    EnergyMeta {
        grid_hash: grid.geometry_hash(),
        kernel_hash: kernel.hash().to_string(),
        r_cut: kernel.r_cut(),
        tail_bound: 2.0 * region_cells as f64 * kernel.tail_per_cell(),
    }
}

/// Fraction of the far sphere in the phase opposite to `inside`.
fn far_opposite_fraction(far: &FarField, inside: bool) -> f64 {
    if inside {
        1.0 - far.inside_fraction()
    } else {
        far.inside_fraction()
    }
}

/// Single-pass perimeter over a region: every opposite-phase pair with at
/// least one endpoint in the region contributes its weight exactly once
/// (half from each endpoint when both are in the region). Exactly invariant
/// under complementation.
pub fn perimeter_symmetric(
    field: &BinaryField,
    kernel: &KernelTable,
    region: &[bool],
    region_cells: &[usize],
) -> f64 {
    let grid = field.grid();
    let h = grid.h();
    let tau = kernel.tail_per_cell();
    let offsets = kernel.offsets();
    exec::sum_indexed(region_cells.len(), |k| {
        let i = region_cells[k];
        let pi = field.is_inside(i);
        let mut acc = 0.0;
        for &(off, w) in offsets {
            match grid.offset(i, off) {
                Some(j) => {
                    if field.is_inside(j) != pi {
                        acc += if region[j] { 0.5 * w } else { w };
                    }
                }
                None => {
                    let mut p = grid.center(i);
                    for ax in 0..3 {
                        p[ax] += off[ax] as f64 * h;
                    }
                    if field.far_field().phase_at(grid, p) != pi {
                        acc += w;
                    }
                }
            }
        }
        acc + tau * far_opposite_fraction(field.far_field(), pi)
    })
}

/// Localized fractional perimeter over an arbitrary region mask.
pub fn perimeter_in(
    field: &BinaryField,
    kernel: &KernelTable,
    region: &[bool],
) -> Result<EnergyReport> {
    let grid = field.grid();
    let region_cells: Vec<usize> = region
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    let per_s = perimeter_symmetric(field, kernel, region, &region_cells);
    let e_in = phase_set(field, true, Some(region));
    let ec_all = phase_set(field, false, None);
    let ec_in = phase_set(field, false, Some(region));
    let e_out = phase_set_outside(field, true, region);
    let l_inside_outside = interaction(grid, kernel, &e_in, &ec_all)?;
    let l_outside_inside = interaction(grid, kernel, &ec_in, &e_out)?;
    Ok(EnergyReport {
        per_s,
        l_inside_outside,
        l_outside_inside,
        massari: None,
        j_r: None,
        meta: meta_for(grid, kernel, region_cells.len()),
    })
}

/// Fractional perimeter localized in Ω.
pub fn perimeter_s(field: &BinaryField, kernel: &KernelTable) -> Result<EnergyReport> {
    let omega: Vec<bool> = field.grid().omega_mask().to_vec();
    perimeter_in(field, kernel, &omega)
}

/// Prescribed curvature values on Ω cells.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum HField {
    Constant(f64),
    /// Indexed by grid cell; read on Ω cells only.
    PerCell(Vec<f64>),
}

impl HField {
    pub fn value(&self, cell: usize) -> f64 {
        match self {
            HField::Constant(v) => *v,
            HField::PerCell(v) => v[cell],
        }
    }

    pub fn validate(&self, grid: &GridDomain) -> Result<()> {
        match self {
            HField::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::NonFiniteH { cell: 0, value: *v });
                }
            }
            HField::PerCell(v) => {
                if v.len() != grid.cell_count() {
                    return Err(Error::Invalid(format!(
                        "H field has {} entries, grid has {}",
                        v.len(),
                        grid.cell_count()
                    )));
                }
                for &cell in grid.omega_cells() {
                    if !v[cell].is_finite() {
                        return Err(Error::NonFiniteH { cell, value: v[cell] });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn max_abs(&self, grid: &GridDomain) -> f64 {
        match self {
            HField::Constant(v) => v.abs(),
            HField::PerCell(v) => grid
                .omega_cells()
                .iter()
                .map(|&c| v[c].abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Volume integral of H over E ∩ Ω by the cell-midpoint sum.
pub fn h_integral(field: &BinaryField, h: &HField) -> f64 {
    let grid = field.grid();
    let hn = grid.h().powi(grid.dim() as i32);
    let mut acc = 0.0;
    for &cell in grid.omega_cells() {
        if field.is_inside(cell) {
            acc += h.value(cell) * hn;
        }
    }
    acc
}

/// Massari-type energy: perimeter plus the volume term of H over E ∩ Ω.
pub fn massari_energy(
    field: &BinaryField,
    h: &HField,
    kernel: &KernelTable,
) -> Result<EnergyReport> {
    h.validate(field.grid())?;
    let mut report = perimeter_s(field, kernel)?;
    report.massari = Some(report.per_s + h_integral(field, h));
    Ok(report)
}

/// Localized Gagliardo contribution J_r of u = χ_E − χ_{E^c} in the ball
/// B_r(center): in-ball pairs weighted once per ordered pair, out-of-ball
/// partners twice, |u(x)-u(y)|^2 ∈ {0,4}.
pub fn gagliardo_local(
    field: &BinaryField,
    kernel: &KernelTable,
    center: [f64; 3],
    r: f64,
) -> Result<f64> {
    let grid = field.grid();
    let h = grid.h();
    let tau = kernel.tail_per_cell();
    let ball = ball_mask(grid, center, r);
    let cells: Vec<usize> = ball
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    for &i in &cells {
        if !grid.in_omega(i) {
            return Err(Error::BallTooLarge { r, max: f64::NAN });
        }
    }
    let offsets = kernel.offsets();
    Ok(exec::sum_indexed(cells.len(), |k| {
        let i = cells[k];
        let pi = field.is_inside(i);
        let mut acc = 0.0;
        for &(off, w) in offsets {
            match grid.offset(i, off) {
                Some(j) => {
                    if field.is_inside(j) != pi {
                        acc += if ball[j] { 4.0 * w } else { 8.0 * w };
                    }
                }
                None => {
                    let mut p = grid.center(i);
                    for ax in 0..3 {
                        p[ax] += off[ax] as f64 * h;
                    }
                    if field.far_field().phase_at(grid, p) != pi {
                        acc += 8.0 * w;
                    }
                }
            }
        }
        acc + 8.0 * tau * far_opposite_fraction(field.far_field(), pi)
    }))
}

/// Cells whose centers lie within distance r of `center`.
pub fn ball_mask(grid: &GridDomain, center: [f64; 3], r: f64) -> Vec<bool> {
    let r2 = r * r;
    (0..grid.cell_count())
        .map(|i| {
            let p = grid.center(i);
            let mut d2 = 0.0;
            for a in 0..grid.dim() {
                let d = p[a] - center[a];
                d2 += d * d;
            }
            d2 <= r2
        })
        .collect()
}

/// First difference of the Massari energy under flipping one Ω cell,
/// computed over the kernel support only.
pub fn flip_delta(
    field: &BinaryField,
    cell: usize,
    h: &HField,
    kernel: &KernelTable,
) -> Result<f64> {
    let grid = field.grid();
    if !grid.in_omega(cell) {
        return Err(Error::CellNotInOmega { cell });
    }
    let hh = grid.h();
    let hn = hh.powi(grid.dim() as i32);
    let was_inside = field.is_inside(cell);
    let mut d_pairs = 0.0;
    for &(off, w) in kernel.offsets() {
        let other = match grid.offset(cell, off) {
            Some(j) => field.is_inside(j),
            None => {
                let mut p = grid.center(cell);
                for ax in 0..3 {
                    p[ax] += off[ax] as f64 * hh;
                }
                field.far_field().phase_at(grid, p)
            }
        };
        // pair disagreed before iff other != was_inside; flips afterwards
        d_pairs += if other == was_inside { w } else { -w };
    }
    let f_in = field.far_field().inside_fraction();
    let tau = kernel.tail_per_cell();
    let d_tail = if was_inside {
        // tail paid moves from (1 - f_in) to f_in
        tau * (f_in - (1.0 - f_in))
    } else {
        tau * ((1.0 - f_in) - f_in)
    };
    let d_h = if was_inside { -h.value(cell) * hn } else { h.value(cell) * hn };
    Ok(d_pairs + d_tail + d_h)
}
