//! Pre-registered boundary-behavior experiments (2D): sticking and
//! non-sticking minimizers with bump data, cusp-shaped external
//! perturbations, perturbation-invariance comparisons, and the
//! continuous-but-not-differentiable construction on a restricted domain.
//!
//! Instances are described in continuum terms (boxes, levels, bump
//! rectangles) and rasterized at a chosen resolution, so the same experiment
//! runs unchanged across a refinement sweep. Mirror symmetry in x is
//! declared per instance and honored exactly by the solver.

use crate::certify::{lambda_certificate, Family, LambdaCertificate};
use crate::energy::HField;
use crate::error::{Error, Result};
use crate::field::{BinaryField, FarField};
use crate::grid::{GridDomain, OmegaSpec};
use crate::io::RleMask;
use crate::kernel::KernelTable;
use crate::mincut::{mincut_minimize, Minimized, MirrorSymmetry};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Exterior-datum builder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DatumSpec {
    /// {y < level}
    HalfSpace { level: f64 },
    /// {y < level} plus two bump rectangles (±(x_in, x_out)) × (level, level+delta)
    HalfSpaceWithBumps { level: f64, delta: f64, bump_inner: f64, bump_outer: f64 },
    /// subgraph of per-column samples
    SubgraphSamples { psi: Vec<f64> },
    /// explicit phases (used by derived instances)
    Explicit { phase: RleMask, far: FarField },
}

/// A continuum experiment description, rasterizable at any resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub s: f64,
    pub h: f64,
    pub box_lo: [f64; 2],
    pub box_hi: [f64; 2],
    pub omega_lo: [f64; 2],
    pub omega_hi: [f64; 2],
    pub datum: DatumSpec,
    pub h_field: HField,
    pub r_cut: f64,
    pub near_tol: f64,
    pub symmetric_x: bool,
}

/// Rasterized instance ready for the solver.
pub struct Rasterized {
    pub grid: Arc<GridDomain>,
    pub datum: BinaryField,
    pub h_field: HField,
    pub symmetry: Option<MirrorSymmetry>,
}

impl ExperimentSpec {
    /// Rasterize at the spec's resolution. Cell counts are derived from the
    /// physical boxes; the Ω box is snapped to cell boundaries.
    pub fn rasterize(&self) -> Result<Rasterized> {
        let h = self.h;
        let ext = [
            ((self.box_hi[0] - self.box_lo[0]) / h).round() as usize,
            ((self.box_hi[1] - self.box_lo[1]) / h).round() as usize,
        ];
        let snap = |v: f64, lo: f64| -> usize { ((v - lo) / h).round() as usize };
        let omega = OmegaSpec::IndexBox {
            lo: [snap(self.omega_lo[0], self.box_lo[0]), snap(self.omega_lo[1], self.box_lo[1]), 0],
            hi: [snap(self.omega_hi[0], self.box_lo[0]), snap(self.omega_hi[1], self.box_lo[1]), 1],
        };
        let grid = Arc::new(GridDomain::build(
            2,
            h,
            &ext,
            &[self.box_lo[0], self.box_lo[1]],
            omega,
            self.s,
        )?);
        let datum = self.rasterize_datum(&grid)?;
        self.h_field.validate(&grid)?;
        let symmetry = self.symmetric_x.then_some(MirrorSymmetry { axis: 0 });
        if self.symmetric_x {
            // exact mirror symmetry needs a grid symmetric about x = 0
            if (self.box_lo[0] + self.box_hi[0]).abs() > 1e-12 {
                return Err(Error::InvalidExperiment(
                    "symmetric instance needs a box symmetric about x = 0".into(),
                ));
            }
        }
        Ok(Rasterized { grid, datum, h_field: self.h_field.clone(), symmetry })
    }

    fn rasterize_datum(&self, grid: &Arc<GridDomain>) -> Result<BinaryField> {
        match &self.datum {
            DatumSpec::HalfSpace { level } => Ok(BinaryField::rasterize(
                grid.clone(),
                FarField::HalfSpace { axis: 1, level: *level, below: true },
            )),
            DatumSpec::HalfSpaceWithBumps { level, delta, bump_inner, bump_outer } => {
                let mut phase = vec![false; grid.cell_count()];
                for (i, v) in phase.iter_mut().enumerate() {
                    let p = grid.center(i);
                    // |x| keeps the two bumps exactly mirror-symmetric
                    let ax = p[0].abs();
                    *v = p[1] < *level
                        || (ax > *bump_inner
                            && ax < *bump_outer
                            && p[1] >= *level
                            && p[1] < *level + *delta);
                }
                BinaryField::new(
                    grid.clone(),
                    phase,
                    FarField::HalfSpace { axis: 1, level: *level, below: true },
                )
            }
            DatumSpec::SubgraphSamples { psi } => {
                let cols = grid.extents()[0];
                if psi.len() != cols {
                    return Err(Error::InvalidExperiment(format!(
                        "subgraph datum needs {cols} samples, got {}",
                        psi.len()
                    )));
                }
                Ok(BinaryField::rasterize(
                    grid.clone(),
                    FarField::Subgraph { psi: psi.clone(), below: true },
                ))
            }
            DatumSpec::Explicit { phase, far } => {
                BinaryField::new(grid.clone(), phase.decode()?, far.clone())
            }
        }
    }

    pub fn kernel(&self, grid: &GridDomain) -> Result<KernelTable> {
        KernelTable::build(grid, self.r_cut, self.near_tol)
    }

    /// Rasterize, build the kernel, and minimize.
    pub fn solve(&self) -> Result<Solved> {
        let raster = self.rasterize()?;
        let kernel = self.kernel(&raster.grid)?;
        let minimized =
            mincut_minimize(&raster.datum, &raster.h_field, &kernel, raster.symmetry)?;
        Ok(Solved { raster, kernel, minimized })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }
}

pub struct Solved {
    pub raster: Rasterized,
    pub kernel: KernelTable,
    pub minimized: Minimized,
}

/// Default vertical truncation of the unbounded cylinder.
pub const DEFAULT_TRUNCATION: f64 = 4.0;

/// Sticking instance: half-space datum with bump rectangles
/// (±(2,3)) × (0, δ), Ω = (−1,1) × (−M, M).
///
/// The β-scale regime of the underlying construction needs s < 1/2 when
/// δ > 0; larger s is rejected.
pub fn build_sticking_instance(delta: f64, s: f64, h: f64) -> Result<ExperimentSpec> {
    build_sticking_instance_with(delta, s, h, DEFAULT_TRUNCATION, DEFAULT_TRUNCATION, 4.5)
}

/// Fully parameterized sticking instance; `m_below`/`m_above` truncate the
/// cylinder vertically, `r_cut` must reach the bumps from Ω for the datum
/// attraction to act.
pub fn build_sticking_instance_with(
    delta: f64,
    s: f64,
    h: f64,
    m_below: f64,
    m_above: f64,
    r_cut: f64,
) -> Result<ExperimentSpec> {
    if delta > 0.0 && s >= 0.5 {
        return Err(Error::InvalidExperiment(format!(
            "bump instance requires s < 1/2 (the sticking scale exponent needs 1-2s > 0), got s = {s}"
        )));
    }
    if delta < 0.0 {
        return Err(Error::InvalidExperiment("bump height must be non-negative".into()));
    }
    let pad = 0.25;
    let y_lo = -(m_below + pad);
    let y_hi = m_above + pad;
    Ok(ExperimentSpec {
        name: format!("sticking_delta{delta}_s{s}"),
        s,
        h,
        box_lo: [-3.25, y_lo],
        box_hi: [3.25, y_hi],
        omega_lo: [-1.0, -m_below],
        omega_hi: [1.0, m_above],
        datum: if delta == 0.0 {
            DatumSpec::HalfSpace { level: 0.0 }
        } else {
            DatumSpec::HalfSpaceWithBumps {
                level: 0.0,
                delta,
                bump_inner: 2.0,
                bump_outer: 3.0,
            }
        },
        h_field: HField::Constant(0.0),
        r_cut,
        near_tol: 1e-6,
        symmetric_x: true,
    })
}

// ---------------------------------------------------------------------------
// graph measurements
// ---------------------------------------------------------------------------

/// Column heights of a subgraph field: for each column in the x-window, the
/// top face of the highest inside cell. Errors if some column is not a
/// down-set within the grid (non-subgraph minimizer).
pub fn graph_heights(field: &BinaryField, x_lo: f64, x_hi: f64) -> Result<Vec<(f64, f64)>> {
    let grid = field.grid();
    let ext = grid.extents();
    let h = grid.h();
    let mut out = Vec::new();
    for cx in 0..ext[0] {
        let x = grid.origin()[0] + (cx as f64 + 0.5) * h;
        if x < x_lo || x > x_hi {
            continue;
        }
        // down-set check: no inside cell above an outside cell
        let mut top: Option<usize> = None;
        let mut above_outside = false;
        for cy in 0..ext[1] {
            let cell = grid.index([cx, cy, 0]);
            if !field.is_inside(cell) {
                above_outside = true;
            } else {
                if above_outside {
                    return Err(Error::NotSubgraph { column: cx });
                }
                top = Some(cy);
            }
        }
        let height = match top {
            Some(cy) => grid.origin()[1] + (cy as f64 + 1.0) * h,
            None => grid.origin()[1],
        };
        out.push((x, height));
    }
    Ok(out)
}

/// Boundary traces and jumps of a subgraph minimizer at both ends of the
/// working interval Ω' = (x_lo, x_hi).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StickinessMeasurement {
    /// graph height at the first interior column of each side
    pub interior_trace_left: f64,
    pub interior_trace_right: f64,
    /// graph height at the last exterior column of each side
    pub exterior_value_left: f64,
    pub exterior_value_right: f64,
    pub left_jump: f64,
    pub right_jump: f64,
}

/// Extract traces at the first interior and last exterior columns of Ω'.
pub fn measure_stickiness(
    field: &BinaryField,
    omega_x: (f64, f64),
) -> Result<StickinessMeasurement> {
    let grid = field.grid();
    let h = grid.h();
    let heights = graph_heights(
        field,
        omega_x.0 - 1.5 * h,
        omega_x.1 + 1.5 * h,
    )?;
    if heights.len() < 4 {
        return Err(Error::InvalidExperiment("measurement window too narrow".into()));
    }
    let first_in = heights
        .iter()
        .find(|(x, _)| *x > omega_x.0)
        .ok_or_else(|| Error::InvalidExperiment("no interior column".into()))?;
    let last_in = heights
        .iter()
        .rev()
        .find(|(x, _)| *x < omega_x.1)
        .ok_or_else(|| Error::InvalidExperiment("no interior column".into()))?;
    let left_out = heights
        .iter()
        .rev()
        .find(|(x, _)| *x < omega_x.0)
        .ok_or_else(|| Error::InvalidExperiment("no exterior column on the left".into()))?;
    let right_out = heights
        .iter()
        .find(|(x, _)| *x > omega_x.1)
        .ok_or_else(|| Error::InvalidExperiment("no exterior column on the right".into()))?;
    Ok(StickinessMeasurement {
        interior_trace_left: first_in.1,
        interior_trace_right: last_in.1,
        exterior_value_left: left_out.1,
        exterior_value_right: right_out.1,
        left_jump: (first_in.1 - left_out.1).abs(),
        right_jump: (last_in.1 - right_out.1).abs(),
    })
}

// ---------------------------------------------------------------------------
// external perturbations
// ---------------------------------------------------------------------------

/// Rasterize the cusp region above the graph `psi` in the collar
/// `x_wall < |x| < x_wall + delta_collar`:
/// ψ(x) < y − τ < ψ(x) + C (|x| − x_wall)^{n+s−1+ξ}.
///
/// Validates cell-by-cell that the mask is disjoint from Ω and from the
/// datum set and is contained in the cusp region.
#[allow(clippy::too_many_arguments)]
pub fn build_perturbation_sigma(
    datum: &BinaryField,
    psi: &dyn Fn(f64) -> f64,
    c: f64,
    xi: f64,
    delta_collar: f64,
    tau: f64,
    x_wall: f64,
) -> Result<Vec<usize>> {
    if c < 0.0 || xi <= 0.0 || delta_collar <= 0.0 {
        return Err(Error::InvalidExperiment(
            "cusp perturbation needs C ≥ 0, ξ > 0, δ > 0".into(),
        ));
    }
    let grid = datum.grid();
    let n = grid.dim();
    let s = grid.s();
    let expo = n as f64 + s - 1.0 + xi;
    let mut cells = Vec::new();
    for i in 0..grid.cell_count() {
        let p = grid.center(i);
        let ax = p[0].abs();
        if ax <= x_wall || ax >= x_wall + delta_collar {
            continue;
        }
        let base = psi(p[0]);
        let y = p[1] - tau;
        if y > base && y < base + c * (ax - x_wall).powf(expo) {
            if grid.in_omega(i) {
                return Err(Error::InvalidExperiment(format!(
                    "perturbation intersects Ω at cell {i}"
                )));
            }
            if datum.is_inside(i) {
                return Err(Error::InvalidExperiment(format!(
                    "perturbation intersects the datum set at cell {i}"
                )));
            }
            cells.push(i);
        }
    }
    // inclusion validator: each mask cell satisfies the defining inequality
    for &i in &cells {
        let p = grid.center(i);
        let ax = p[0].abs();
        let y = p[1] - tau;
        let base = psi(p[0]);
        debug_assert!(y > base && y < base + c * (ax - x_wall).powf(expo));
    }
    Ok(cells)
}

/// Measured coupling constant of a perturbation mask: the largest total
/// kernel interaction of a single Ω cell with Σ, per unit volume. Mirrors
/// the constant that inflates Λ under external perturbations.
pub fn measured_coupling(
    grid: &GridDomain,
    kernel: &KernelTable,
    sigma: &[usize],
) -> f64 {
    let hn = grid.h().powi(grid.dim() as i32);
    let mut in_sigma = vec![false; grid.cell_count()];
    for &c in sigma {
        in_sigma[c] = true;
    }
    let worst = crate::exec::map_indexed(grid.omega_cells().len(), |k| {
        let i = grid.omega_cells()[k];
        let mut acc = 0.0;
        for &(off, w) in kernel.offsets() {
            if let Some(j) = grid.offset(i, off) {
                if in_sigma[j] {
                    acc += w;
                }
            }
        }
        acc / hn
    });
    worst.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub base_energy: f64,
    pub perturbed_energy: f64,
    pub base_mask: RleMask,
    pub perturbed_mask: RleMask,
    pub base_certificate: LambdaCertificate,
    pub perturbed_certificate: LambdaCertificate,
    pub base_jumps: (f64, f64),
    pub perturbed_jumps: (f64, f64),
    /// Hausdorff distance between the two interior solutions within Ω.
    pub interior_distance: f64,
    /// max_i Σ_{j∈Σ} w(i−j)/h^n over Ω cells
    pub coupling: f64,
    /// identical masks (guaranteed for Σ = ∅)
    pub identical: bool,
}

/// Solve the instance with datum E∖Ω and with datum (E∪Σ)∖Ω and compare.
pub fn run_perturbation_invariance(
    spec: &ExperimentSpec,
    sigma: &[usize],
    cert_family: Family,
) -> Result<PerturbationReport> {
    let base = spec.solve()?;
    let grid = base.raster.grid.clone();
    for &c in sigma {
        if grid.in_omega(c) {
            return Err(Error::InvalidExperiment(format!(
                "perturbation intersects Ω at cell {c}"
            )));
        }
        if base.raster.datum.is_inside(c) {
            return Err(Error::InvalidExperiment(format!(
                "perturbation intersects the datum set at cell {c}"
            )));
        }
    }
    let mut perturbed_datum = base.raster.datum.clone();
    for &c in sigma {
        perturbed_datum = perturbed_datum.with_flipped(c);
    }
    let perturbed = mincut_minimize(
        &perturbed_datum,
        &base.raster.h_field,
        &base.kernel,
        base.raster.symmetry,
    )?;

    let omega_x = omega_x_range(&grid);
    let base_meas = measure_stickiness(&base.minimized.field, omega_x)?;
    let pert_meas = measure_stickiness(&perturbed.field, omega_x)?;
    let base_cert = lambda_certificate(&base.minimized.field, &base.kernel, cert_family)?;
    let pert_cert = lambda_certificate(&perturbed.field, &base.kernel, cert_family)?;
    let omega_center = omega_center(&grid);
    let omega_radius = omega_radius(&grid);
    let interior_distance = if base.minimized.field.phase() == perturbed.field.phase() {
        0.0
    } else {
        crate::analysis::hausdorff_boundary_distance(
            &base.minimized.field,
            &perturbed.field,
            Some((omega_center, omega_radius)),
        )?
    };
    let coupling = measured_coupling(&grid, &base.kernel, sigma);
    Ok(PerturbationReport {
        base_energy: base.minimized.report.massari.unwrap_or(base.minimized.report.per_s),
        perturbed_energy: perturbed.report.massari.unwrap_or(perturbed.report.per_s),
        base_mask: RleMask::encode(base.minimized.field.phase()),
        perturbed_mask: RleMask::encode(perturbed.field.phase()),
        base_certificate: base_cert,
        perturbed_certificate: pert_cert,
        base_jumps: (base_meas.left_jump, base_meas.right_jump),
        perturbed_jumps: (pert_meas.left_jump, pert_meas.right_jump),
        interior_distance,
        coupling,
        identical: base.minimized.field.phase() == perturbed.field.phase(),
    })
}

fn omega_x_range(grid: &GridDomain) -> (f64, f64) {
    let h = grid.h();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &c in grid.omega_cells() {
        let p = grid.center(c);
        lo = lo.min(p[0] - 0.5 * h);
        hi = hi.max(p[0] + 0.5 * h);
    }
    (lo, hi)
}

fn omega_center(grid: &GridDomain) -> [f64; 3] {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &c in grid.omega_cells() {
        let p = grid.center(c);
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, 0.0]
}

fn omega_radius(grid: &GridDomain) -> f64 {
    let c = omega_center(grid);
    let mut r: f64 = 0.0;
    for &cell in grid.omega_cells() {
        let p = grid.center(cell);
        let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        r = r.max(d);
    }
    r + grid.h()
}

// ---------------------------------------------------------------------------
// the continuous-but-not-C1 construction
// ---------------------------------------------------------------------------

/// Registered expectations of the restricted-domain construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct C0C1Expected {
    /// wall position chosen from the measured slope of the pre-solve
    pub x0: f64,
    /// graph height at ±x0
    pub y0: f64,
    /// measured interior slope at x0 of the pre-solve (≥ threshold)
    pub interior_slope: f64,
    pub slope_threshold: f64,
    /// analytic exterior slope of the cusp at its tip
    pub exterior_slope: f64,
}

/// Build the restricted-domain instance: pre-solve the sticking instance,
/// pick the first interior column (scanning outward) whose graph slope
/// exceeds the threshold, restrict Ω to (−x0, x0), and replace the exterior
/// datum in the collar |x| ∈ (x0, collar_end) by the subgraph of the cusp
/// y0 + (|x| − x0)^{1+s+ξ} anchored at the measured graph point.
pub fn build_c0_not_c1_instance(
    s: f64,
    xi: f64,
    h: f64,
    delta: f64,
    slope_threshold: f64,
) -> Result<(ExperimentSpec, C0C1Expected)> {
    if !(0.0 < s && s < 0.5) {
        return Err(Error::InvalidExperiment(format!(
            "the construction needs s in (0, 1/2), got {s}"
        )));
    }
    if xi <= 0.0 {
        return Err(Error::InvalidExperiment("ξ must be positive".into()));
    }
    let base_spec = build_sticking_instance_with(delta, s, h, 0.5, 0.75, 4.5)?;
    let solved = base_spec.solve()?;
    let grid = solved.raster.grid.clone();
    let heights = graph_heights(&solved.minimized.field, -1.0, 1.0)?;

    // first column (scanning from the center outward) with slope over the
    // threshold; the paper-style construction only needs existence
    let mut x0y0: Option<(f64, f64, f64)> = None;
    let positive: Vec<&(f64, f64)> = heights.iter().filter(|(x, _)| *x > 0.0).collect();
    for w in positive.windows(2) {
        let (x1, y1) = *w[0];
        let (x2, y2) = *w[1];
        let slope = (y2 - y1) / (x2 - x1);
        if slope.abs() >= slope_threshold {
            x0y0 = Some((x1, y1, slope));
            break;
        }
    }
    let (x0, y0, interior_slope) = x0y0.ok_or_else(|| {
        Error::CounterexamplePrecondition(format!(
            "no interior column with graph slope ≥ {slope_threshold}"
        ))
    })?;

    // datum for the restricted domain: the solved set, with the collar
    // x0 < |x| < 1 replaced by the subgraph of the cusp
    let expo = 1.0 + s + xi;
    let cusp = |x: f64| -> f64 { y0 + (x.abs() - x0).max(0.0).powf(expo) };
    let mut phase = solved.minimized.field.phase().to_vec();
    for i in 0..grid.cell_count() {
        let p = grid.center(i);
        let ax = p[0].abs();
        if ax > x0 && ax < 1.0 {
            phase[i] = p[1] < cusp(p[0]);
        }
    }
    let datum = BinaryField::new(
        grid.clone(),
        phase,
        solved.minimized.field.far_field().clone(),
    )?;

    let spec = ExperimentSpec {
        name: format!("c0_not_c1_s{s}_xi{xi}"),
        s,
        h,
        box_lo: base_spec.box_lo,
        box_hi: base_spec.box_hi,
        omega_lo: [-x0 - 0.5 * h, base_spec.omega_lo[1]],
        omega_hi: [x0 + 0.5 * h, base_spec.omega_hi[1]],
        datum: DatumSpec::Explicit {
            phase: RleMask::encode(datum.phase()),
            far: datum.far_field().clone(),
        },
        h_field: HField::Constant(0.0),
        r_cut: base_spec.r_cut,
        near_tol: base_spec.near_tol,
        symmetric_x: true,
    };
    let expected = C0C1Expected {
        x0,
        y0,
        interior_slope,
        slope_threshold,
        // d/dx (x - x0)^{1+s+ξ} vanishes at x0 analytically
        exterior_slope: 0.0,
    };
    Ok((spec, expected))
}
