//! Extension of u = χ_E − χ_{E^c} to the upper half-space by Poisson
//! convolution, weighted Dirichlet energies on half-balls, and the radial
//! profiles Ξ(r), Φ(r) with monotonicity diagnostics.
//!
//! The kernel is P(x,z) = C_P z^s (|x|^2 + z^2)^{-(n+s)/2} with C_P fixed by
//! the normalization ∫ P(·,z) dx = 1 (computed at z = 1 by adaptive radial
//! quadrature; the kernel is homogeneous so one z suffices). The extension is
//! evaluated by direct convolution over grid cells within a truncation
//! radius, off-grid cells resolved through the far-field tag, and the mass
//! beyond truncation attached analytically to the far field's asymptotic
//! phase fraction.

use crate::error::{Error, Result};
use crate::exec;
use crate::field::BinaryField;
use crate::grid::{ball_volume, sphere_surface, GridDomain};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// quadrature helpers
// ---------------------------------------------------------------------------

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth > 48 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, fm, flm, left, tol / 2.0, depth + 1)
                + rec(f, m, b, fm, fb, frm, right, tol / 2.0, depth + 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, b, fa, fb, fm, whole, tol, 0)
}

/// A(θ0) = ∫_{θ0}^{π/2} sin^{n-1}θ cos^{s-1}θ dθ, the radial angle integral
/// of the Poisson kernel. The endpoint singularity cos^{s-1} is removed by
/// the substitution v = u^s with u = π/2 − θ.
fn angle_integral(n: usize, s: f64, theta0: f64, tol: f64) -> f64 {
    let umax = std::f64::consts::FRAC_PI_2 - theta0;
    if umax <= 0.0 {
        return 0.0;
    }
    let smooth = move |u: f64| -> f64 {
        // cos^{n-1}(u) * (sin u / u)^{s-1}, smooth down to u = 0
        let c = u.cos().powi(n as i32 - 1);
        let ratio = if u < 1e-8 { 1.0 } else { u.sin() / u };
        c * ratio.powf(s - 1.0)
    };
    let vmax = umax.powf(s);
    let g = move |v: f64| -> f64 {
        let u = v.powf(1.0 / s);
        smooth(u)
    };
    adaptive_simpson(&g, 0.0, vmax, tol) / s
}

/// Normalization constant: the reciprocal of ∫_{R^n} (1+|x|^2)^{-(n+s)/2} dx,
/// evaluated at z = 1 by adaptive radial quadrature.
pub fn poisson_kernel_normalization(n: usize, s: f64, quadrature_tol: f64) -> f64 {
    1.0 / (sphere_surface(n) * angle_integral(n, s, 0.0, quadrature_tol))
}

/// Mass of P(·,z) outside the ball of radius rho (in x), analytic in the
/// radial variable.
pub fn poisson_tail_mass(n: usize, s: f64, c_p: f64, rho: f64, z: f64, tol: f64) -> f64 {
    let theta0 = (rho / z).atan();
    c_p * sphere_surface(n) * angle_integral(n, s, theta0, tol)
}

/// Numeric check of ∫ P(x,z) dx over the truncated region plus the tail;
/// used by tests of the defining property.
pub fn poisson_mass_numeric(n: usize, s: f64, c_p: f64, z: f64, rho: f64, h: f64) -> f64 {
    // brute midpoint sum over the box |x|_∞ <= rho
    let m = (rho / h).ceil() as i64;
    let mut acc = 0.0;
    match n {
        1 => {
            for i in -m..=m {
                let x = (i as f64 + 0.5) * h;
                if x.abs() <= rho {
                    acc += h / (x * x + z * z).powf((1.0 + s) / 2.0);
                }
            }
        }
        2 => {
            for j in -m..=m {
                for i in -m..=m {
                    let x = (i as f64 + 0.5) * h;
                    let y = (j as f64 + 0.5) * h;
                    let r2 = x * x + y * y;
                    if r2.sqrt() <= rho {
                        acc += h * h / (r2 + z * z).powf((2.0 + s) / 2.0);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    c_p * z.powf(s) * acc + poisson_tail_mass(n, s, c_p, rho, z, 1e-12)
}

// ---------------------------------------------------------------------------
// extension field
// ---------------------------------------------------------------------------

/// Graded z-levels, geometric with the given ratio.
pub fn geometric_levels(z1: f64, ratio: f64, z_max: f64) -> Vec<f64> {
    assert!(z1 > 0.0 && ratio > 1.0 && z_max > z1);
    let mut levels = vec![z1];
    while *levels.last().unwrap() < z_max {
        let next = levels.last().unwrap() * ratio;
        levels.push(next);
    }
    levels
}

/// Samples of the extension on a window of the grid times graded z-levels.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    grid: Arc<GridDomain>,
    /// inclusive index bounds of the x-window
    lo: [usize; 3],
    hi: [usize; 3],
    dims: [usize; 3],
    levels: Vec<f64>,
    /// z^{1-s} per level
    weights: Vec<f64>,
    /// values[window_index + dims_product * level]
    values: Vec<f64>,
    trunc_radius: f64,
}

impl ExtensionField {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid(&self) -> &Arc<GridDomain> {
        &self.grid
    }

    pub fn window_bounds(&self) -> ([usize; 3], [usize; 3]) {
        (self.lo, self.hi)
    }

    pub fn trunc_radius(&self) -> f64 {
        self.trunc_radius
    }

    fn win_index(&self, c: [usize; 3]) -> Option<usize> {
        for a in 0..3 {
            if c[a] < self.lo[a] || c[a] > self.hi[a] {
                return None;
            }
        }
        let x = c[0] - self.lo[0];
        let y = c[1] - self.lo[1];
        let z = c[2] - self.lo[2];
        Some(x + self.dims[0] * (y + self.dims[1] * z))
    }

    /// Value at (cell, level); None outside the window.
    pub fn value(&self, cell: usize, level: usize) -> Option<f64> {
        let wi = self.win_index(self.grid.coords(cell))?;
        Some(self.values[wi + self.dims[0] * self.dims[1] * self.dims[2] * level])
    }

    pub fn values_raw(&self) -> &[f64] {
        &self.values
    }
}

/// Extend a field over a window (inclusive cell-index bounds) and z-levels,
/// truncating the convolution at `trunc_radius` in x.
pub fn extend_window(
    field: &BinaryField,
    levels: &[f64],
    trunc_radius: f64,
    lo: [usize; 3],
    hi: [usize; 3],
) -> ExtensionField {
    let grid = field.grid().clone();
    let n = grid.dim();
    let s = grid.s();
    let h = grid.h();
    let hn = h.powi(n as i32);
    let c_p = poisson_kernel_normalization(n, s, 1e-12);
    let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let win_cells = dims[0] * dims[1] * dims[2];
    let far_bias = 2.0 * field.far_field().inside_fraction() - 1.0;
    let m = (trunc_radius / h).floor() as i64;
    let reach = |a: usize| if a < n { m } else { 0 };

    let tails: Vec<f64> = levels
        .iter()
        .map(|&z| far_bias * poisson_tail_mass(n, s, c_p, trunc_radius, z, 1e-12))
        .collect();

    let values = exec::map_indexed(win_cells * levels.len(), |idx| {
        let wi = idx % win_cells;
        let li = idx / win_cells;
        let z = levels[li];
        let cx = lo[0] + wi % dims[0];
        let rest = wi / dims[0];
        let cy = lo[1] + rest % dims[1];
        let cz = lo[2] + rest / dims[1];
        let cell = grid.index([cx, cy, cz]);
        let p = grid.center(cell);
        let z2 = z * z;
        let mut acc = 0.0;
        let t2 = trunc_radius * trunc_radius;
        for oz in -reach(2)..=reach(2) {
            for oy in -reach(1)..=reach(1) {
                for ox in -reach(0)..=reach(0) {
                    let dx = ox as f64 * h;
                    let dy = oy as f64 * h;
                    let dz = oz as f64 * h;
                    let d2 = dx * dx + dy * dy + dz * dz;
                    if d2 > t2 {
                        continue;
                    }
                    let q = [p[0] + dx, p[1] + dy, p[2] + dz];
                    let u = if field.phase_at_point(q) { 1.0 } else { -1.0 };
                    acc += u / (d2 + z2).powf((n as f64 + s) / 2.0);
                }
            }
        }
        let v = c_p * z.powf(s) * acc * hn + tails[li];
        v.clamp(-1.0, 1.0)
    });
    let weights = levels.iter().map(|&z| z.powf(1.0 - s)).collect();
    ExtensionField {
        grid,
        lo,
        hi,
        dims,
        levels: levels.to_vec(),
        weights,
        values,
        trunc_radius,
    }
}

/// Extend over the whole grid.
pub fn extend_field(field: &BinaryField, levels: &[f64], trunc_radius: f64) -> ExtensionField {
    let ext = field.grid().extents();
    extend_window(field, levels, trunc_radius, [0, 0, 0], [ext[0] - 1, ext[1] - 1, ext[2] - 1])
}

/// Pointwise evaluation of the extension at an arbitrary (x, z), by the same
/// truncated convolution (plus tail). Used by tests and trace checks.
pub fn extend_at(field: &BinaryField, x: [f64; 3], z: f64, trunc_radius: f64) -> f64 {
    let grid = field.grid();
    let n = grid.dim();
    let s = grid.s();
    let h = grid.h();
    let hn = h.powi(n as i32);
    let c_p = poisson_kernel_normalization(n, s, 1e-12);
    let far_bias = 2.0 * field.far_field().inside_fraction() - 1.0;
    let m = (trunc_radius / h).ceil() as i64 + 1;
    let reach = |a: usize| if a < n { m } else { 0 };
    let t2 = trunc_radius * trunc_radius;
    let mut acc = 0.0;
    // walk the lattice of cell centers nearest to x
    let mut base = [0.0f64; 3];
    for a in 0..3 {
        let t = ((x[a] - grid.origin()[a]) / h - 0.5).round();
        base[a] = grid.origin()[a] + (t + 0.5) * h;
    }
    for oz in -reach(2)..=reach(2) {
        for oy in -reach(1)..=reach(1) {
            for ox in -reach(0)..=reach(0) {
                let q = [
                    base[0] + ox as f64 * h,
                    base[1] + oy as f64 * h,
                    base[2] + oz as f64 * h,
                ];
                let dx = q[0] - x[0];
                let dy = if n >= 2 { q[1] - x[1] } else { 0.0 };
                let dz = if n >= 3 { q[2] - x[2] } else { 0.0 };
                let d2 = dx * dx + dy * dy + dz * dz;
                if d2 > t2 {
                    continue;
                }
                let u = if field.phase_at_point(q) { 1.0 } else { -1.0 };
                acc += u / (d2 + z * z).powf((n as f64 + s) / 2.0);
            }
        }
    }
    let tail = far_bias * poisson_tail_mass(n, s, c_p, trunc_radius, z, 1e-12);
    (c_p * z.powf(s) * acc * hn + tail).clamp(-1.0, 1.0)
}

/// Midpoint widths of the z-levels (first level reaches down to z = 0).
fn level_widths(levels: &[f64]) -> Vec<f64> {
    let k = levels.len();
    let mut w = vec![0.0; k];
    for i in 0..k {
        let lo = if i == 0 { 0.0 } else { 0.5 * (levels[i - 1] + levels[i]) };
        let hi = if i + 1 == k {
            levels[k - 1] + 0.5 * (levels[k - 1] - levels[k - 2])
        } else {
            0.5 * (levels[i] + levels[i + 1])
        };
        w[i] = hi - lo;
    }
    w
}

/// Raw weighted Dirichlet integral ∫_{B_r^+(center)} z^{1-s} |∇u~|^2:
/// central differences in x, one-sided in z at the first and last level.
pub fn dirichlet_halfball(ext: &ExtensionField, center: [f64; 3], r: f64) -> Result<f64> {
    let grid = &ext.grid;
    let n = grid.dim();
    let h = grid.h();
    let hn = h.powi(n as i32);
    let levels = &ext.levels;
    if levels.len() < 2 {
        return Err(Error::Invalid("need at least two z-levels".into()));
    }
    let max_z = *levels.last().unwrap();
    // admissible radius: fits in z and leaves a one-cell halo in the window
    let mut max_r = max_z;
    for a in 0..n {
        let lo_p = grid.origin()[a] + (ext.lo[a] as f64 + 1.5) * h;
        let hi_p = grid.origin()[a] + (ext.hi[a] as f64 - 0.5) * h;
        max_r = max_r.min(center[a] - lo_p).min(hi_p - center[a]);
    }
    if r > max_r {
        return Err(Error::BallTooLarge { r, max: max_r });
    }
    let widths = level_widths(levels);
    let r2 = r * r;
    let win = ext.dims[0] * ext.dims[1] * ext.dims[2];
    let val = |c: [usize; 3], li: usize| -> f64 {
        let wi = ext.win_index(c).expect("halo checked");
        ext.values[wi + win * li]
    };
    // cells of the window whose center is within r of center in x
    let mut cells: Vec<[usize; 3]> = Vec::new();
    for z in ext.lo[2]..=ext.hi[2] {
        for y in ext.lo[1]..=ext.hi[1] {
            for x in ext.lo[0]..=ext.hi[0] {
                cells.push([x, y, z]);
            }
        }
    }
    let total = exec::sum_indexed(cells.len(), |ci| {
        let c = cells[ci];
        let cell = grid.index(c);
        let p = grid.center(cell);
        let mut dx2 = 0.0;
        for a in 0..n {
            let d = p[a] - center[a];
            dx2 += d * d;
        }
        if dx2 > r2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for (li, &z) in levels.iter().enumerate() {
            if dx2 + z * z > r2 {
                break;
            }
            let mut g2 = 0.0;
            for a in 0..n {
                let mut cp = c;
                let mut cm = c;
                cp[a] += 1;
                cm[a] -= 1;
                let d = (val(cp, li) - val(cm, li)) / (2.0 * h);
                g2 += d * d;
            }
            let dz = if li == 0 {
                (val(c, 1) - val(c, 0)) / (levels[1] - levels[0])
            } else if li + 1 == levels.len() {
                (val(c, li) - val(c, li - 1)) / (levels[li] - levels[li - 1])
            } else {
                (val(c, li + 1) - val(c, li - 1)) / (levels[li + 1] - levels[li - 1])
            };
            g2 += dz * dz;
            acc += ext.weights[li] * g2 * hn * widths[li];
        }
        acc
    });
    Ok(total)
}

// ---------------------------------------------------------------------------
// profiles
// ---------------------------------------------------------------------------

/// Rescaled Dirichlet profiles with the almost-minimality compensation term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
    pub lambda_hat: f64,
}

/// Parameters of the extension mesh used by profile evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionParams {
    pub z1_factor: f64,
    pub z_ratio: f64,
    pub trunc_radius: f64,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        Self { z1_factor: 0.25, z_ratio: 1.3, trunc_radius: 1.0 }
    }
}

/// Compute Ξ(r) = r^{s-n} ∫_{B_r^+} z^{1-s}|∇u~|^2 and
/// Φ(r) = Ξ(r) + ((n-s)/s) ω_n Λ̂ r^s for the given radii about a boundary
/// point; Λ̂ = 8 c̃_{n,s} Λ with the calibrated constant.
pub fn phi_profile(
    field: &BinaryField,
    center: [f64; 3],
    radii: &[f64],
    lambda: f64,
    c_tilde: f64,
    params: &ExtensionParams,
) -> Result<RadialProfile> {
    let grid = field.grid();
    let n = grid.dim();
    let s = grid.s();
    let h = grid.h();
    let cell = grid
        .cell_at(center)
        .ok_or_else(|| Error::Invalid("profile center outside the grid".into()))?;
    if !field.boundary_cells().contains(&cell) {
        return Err(Error::NotBoundaryCell { cell });
    }
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let levels = geometric_levels(params.z1_factor * h, params.z_ratio, 1.05 * r_max);
    // window: profile ball plus a one-cell halo for gradients
    let halo = (r_max / h).ceil() as i64 + 3;
    let ext_dims = grid.extents();
    let cc = grid.coords(cell);
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        if a < n {
            lo[a] = (cc[a] as i64 - halo).max(0) as usize;
            hi[a] = ((cc[a] as i64 + halo) as usize).min(ext_dims[a] - 1);
        } else {
            hi[a] = ext_dims[a] - 1;
        }
    }
    let ext = extend_window(field, &levels, params.trunc_radius, lo, hi);
    let lambda_hat = 8.0 * c_tilde * lambda;
    let coeff = (n as f64 - s) / s * ball_volume(n) * lambda_hat;
    let mut xi = Vec::with_capacity(radii.len());
    let mut phi = Vec::with_capacity(radii.len());
    for &r in radii {
        let raw = dirichlet_halfball(&ext, center, r)?;
        let x = r.powf(s - n as f64) * raw;
        xi.push(x);
        phi.push(x + coeff * r.powf(s));
    }
    Ok(RadialProfile { radii: radii.to_vec(), xi, phi, lambda_hat })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pass: bool,
    /// Largest decrease Φ_k − Φ_{k+1} observed (0 when increasing).
    pub worst_drop: f64,
    pub tol: f64,
    pub bounded: bool,
    pub max_phi: f64,
    pub bound: f64,
}

/// Assert Φ_{k+1} ≥ Φ_k − tol for all k and Φ ≤ bound_coeff (1 + R^s).
pub fn monotonicity_report(
    profile: &RadialProfile,
    tol: f64,
    s: f64,
    bound_coeff: f64,
) -> Result<MonotonicityReport> {
    if profile.radii.len() < 3 {
        return Err(Error::Invalid("profile needs at least 3 radii".into()));
    }
    let mut worst_drop = 0.0f64;
    for w in profile.phi.windows(2) {
        worst_drop = worst_drop.max(w[0] - w[1]);
    }
    let r_top = profile.radii.iter().cloned().fold(0.0, f64::max);
    let bound = bound_coeff * (1.0 + r_top.powf(s));
    let max_phi = profile.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicityReport {
        pass: worst_drop <= tol,
        worst_drop,
        tol,
        bounded: max_phi <= bound,
        max_phi,
        bound,
    })
}
