//! Principal-value nonlocal mean curvature and Euler-Lagrange inequality
//! checks at tangent-ball boundary points.
//!
//! The p.v. integral of u = χ_E − χ_{E^c} against the kernel is realized by
//! symmetric lattice-ball exclusion: for each exclusion radius δ the sum runs
//! over antipodal offset pairs (o, −o) outside B_δ, so the cancellation that
//! defines the principal value is inherited exactly (a flat interface gives
//! exactly zero). The δ-sequence is extrapolated to δ → 0; raw values are
//! kept so the extrapolation stays auditable.

use crate::error::{Error, Result};
use crate::exec;
use crate::field::{neighborhood_offsets, BinaryField};
use crate::kernel::KernelTable;
use serde::{Deserialize, Serialize};

/// Exclusion radii and extrapolation rule for the principal value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PvConfig {
    /// Strictly decreasing exclusion radii, each at least 2h.
    pub deltas: Vec<f64>,
    /// 0 = last raw value, 1 = linear fit in δ^{1-s} extrapolated to 0.
    pub extrapolation_order: u8,
}

impl PvConfig {
    pub fn new(deltas: Vec<f64>, extrapolation_order: u8, h: f64) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidPvConfig("empty δ-sequence".into()));
        }
        for w in deltas.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidPvConfig(
                    "δ-sequence must be strictly decreasing".into(),
                ));
            }
        }
        for &d in &deltas {
            if !(d >= 2.0 * h) {
                return Err(Error::InvalidPvConfig(format!(
                    "exclusion radius {d} below 2h = {}",
                    2.0 * h
                )));
            }
        }
        if extrapolation_order > 1 {
            return Err(Error::InvalidPvConfig("extrapolation order must be 0 or 1".into()));
        }
        Ok(Self { deltas, extrapolation_order })
    }

    /// Geometric default: radii from `k_max*h` down to `2h`.
    pub fn default_for(h: f64, k_max: usize) -> Self {
        let mut deltas: Vec<f64> = Vec::new();
        let mut k = k_max.max(3);
        while k >= 2 {
            deltas.push(k as f64 * h);
            k = (k * 2) / 3;
            if k < 2 {
                break;
            }
        }
        if *deltas.last().unwrap() > 2.0 * h {
            deltas.push(2.0 * h);
        }
        Self { deltas, extrapolation_order: 1 }
    }
}

/// Raw δ-sequence values plus the extrapolated curvature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PvCurvature {
    pub cell: usize,
    pub value: f64,
    /// (δ, raw value) pairs in the order evaluated.
    pub raw: Vec<(f64, f64)>,
    /// Extrapolation residual (max deviation of the fit from the raw data).
    pub residual: f64,
}

fn is_boundary_cell(field: &BinaryField, cell: usize) -> bool {
    let grid = field.grid();
    let me = field.is_inside(cell);
    for off in neighborhood_offsets(grid.dim()) {
        let other = match grid.offset(cell, off) {
            Some(j) => field.is_inside(j),
            None => {
                let mut p = grid.center(cell);
                for a in 0..grid.dim() {
                    p[a] += off[a] as f64 * grid.h();
                }
                field.far_field().phase_at(grid, p)
            }
        };
        if other != me {
            return true;
        }
    }
    false
}

/// Principal-value nonlocal mean curvature of ∂E at a boundary cell center:
/// p.v. ∫ (χ_E − χ_{E^c})(y) |y − x|^{-n-s} dy.
pub fn mean_curvature_pv(
    field: &BinaryField,
    cell: usize,
    kernel: &KernelTable,
    pv: &PvConfig,
) -> Result<PvCurvature> {
    if !is_boundary_cell(field, cell) {
        return Err(Error::NotBoundaryCell { cell });
    }
    let grid = field.grid();
    let h = grid.h();
    let hn = h.powi(grid.dim() as i32);
    let half = kernel.half_offsets();
    let u_at = |base: usize, off: [i32; 3]| -> f64 {
        match grid.offset(base, off) {
            Some(j) => {
                if field.is_inside(j) {
                    1.0
                } else {
                    -1.0
                }
            }
            None => {
                let mut p = grid.center(base);
                for a in 0..3 {
                    p[a] += off[a] as f64 * h;
                }
                if field.far_field().phase_at(grid, p) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    };
    let tail = (2.0 * field.far_field().inside_fraction() - 1.0) * kernel.tail_per_cell() / hn;
    let mut raw = Vec::with_capacity(pv.deltas.len());
    for &delta in &pv.deltas {
        let d2 = (delta / h) * (delta / h);
        let mut acc = 0.0;
        for &(o, w) in &half {
            let r2 = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64;
            if r2 <= d2 {
                continue;
            }
            let pair = u_at(cell, o) + u_at(cell, [-o[0], -o[1], -o[2]]);
            if pair != 0.0 {
                acc += pair * w / hn;
            }
        }
        raw.push((delta, acc + tail));
    }
    let (value, residual) = extrapolate(&raw, grid.s(), pv.extrapolation_order);
    Ok(PvCurvature { cell, value, raw, residual })
}

fn extrapolate(raw: &[(f64, f64)], s: f64, order: u8) -> (f64, f64) {
    if raw.len() == 1 || order == 0 {
        let last = raw.last().unwrap().1;
        let res = if raw.len() >= 2 {
            (last - raw[raw.len() - 2].1).abs()
        } else {
            0.0
        };
        return (last, res);
    }
    // least squares v ≈ a + b t with t = δ^{1-s}; extrapolate to t = 0
    let n = raw.len() as f64;
    let mut st = 0.0;
    let mut sv = 0.0;
    let mut stt = 0.0;
    let mut stv = 0.0;
    for &(d, v) in raw {
        let t = d.powf(1.0 - s);
        st += t;
        sv += v;
        stt += t * t;
        stv += t * v;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-300 {
        return (raw.last().unwrap().1, 0.0);
    }
    let b = (n * stv - st * sv) / denom;
    let a = (sv - b * st) / n;
    let mut residual = 0.0f64;
    for &(d, v) in raw {
        let t = d.powf(1.0 - s);
        residual = residual.max((a + b * t - v).abs());
    }
    (a, residual)
}

/// Which side of the boundary a tangent ball lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentBallReport {
    pub cell: usize,
    pub side: Side,
    pub radius: f64,
    pub ball_center: [f64; 3],
    pub center_cell: usize,
}

/// Squared Euclidean distance transform (in cell-index units) to the set
/// marked `true`, per cell center.
pub fn distance_transform_sq(grid: &crate::grid::GridDomain, marked: &[bool]) -> Vec<f64> {
    const INF: f64 = 1e30;
    let ext = grid.extents();
    let mut d: Vec<f64> = marked.iter().map(|&b| if b { 0.0 } else { INF }).collect();
    // Felzenszwalb lower-envelope transform along each active axis
    for axis in 0..grid.dim() {
        let len = ext[axis];
        if len == 1 {
            continue;
        }
        let stride = match axis {
            0 => 1,
            1 => ext[0],
            _ => ext[0] * ext[1],
        };
        let lines = grid.cell_count() / len;
        let other = [
            (ext[1], ext[2], ext[0]),
            (ext[0], ext[2], 1),
            (ext[0], ext[1], 1),
        ];
        let (la, _lb, _) = other[axis];
        let mut f = vec![0.0f64; len];
        let mut out = vec![0.0f64; len];
        let mut v = vec![0usize; len];
        let mut z = vec![0.0f64; len + 1];
        for line in 0..lines {
            // base index of this line
            let (p, q) = (line % la, line / la);
            let base = match axis {
                0 => ext[0] * (p + ext[1] * q),
                1 => p + ext[0] * ext[1] * q,
                _ => p + ext[0] * q,
            };
            for (i, fi) in f.iter_mut().enumerate() {
                *fi = d[base + i * stride];
            }
            dt_1d(&f, &mut out, &mut v, &mut z);
            for (i, &oi) in out.iter().enumerate() {
                d[base + i * stride] = oi;
            }
        }
    }
    d
}

fn dt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    const INF: f64 = 1e30;
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        out[q] = dq * dq + f[p];
    }
}

/// Largest lattice ball of radius ≤ r_max that is phase-pure on the
/// requested side and whose closure touches the cell (center within radius
/// plus one cell). None if no ball of radius ≥ 2h fits.
pub fn find_tangent_ball(
    field: &BinaryField,
    cell: usize,
    side: Side,
    r_max: f64,
) -> Option<TangentBallReport> {
    let grid = field.grid();
    let h = grid.h();
    let want_inside = side == Side::Interior;
    let wrong: Vec<bool> = (0..grid.cell_count())
        .map(|i| field.is_inside(i) != want_inside)
        .collect();
    let dist_sq = distance_transform_sq(grid, &wrong);
    let ext = grid.extents();
    let c0 = grid.coords(cell);
    let reach = (r_max / h).ceil() as i64 + 1;
    let mut best: Option<(f64, usize)> = None;
    let n = grid.dim();
    let lo = |a: usize| (c0[a] as i64 - reach).max(0) as usize;
    let hi = |a: usize| ((c0[a] as i64 + reach) as usize).min(ext[a] - 1);
    let zr = if n >= 3 { (lo(2), hi(2)) } else { (0, 0) };
    let yr = if n >= 2 { (lo(1), hi(1)) } else { (0, 0) };
    for z in zr.0..=zr.1 {
        for y in yr.0..=yr.1 {
            for x in lo(0)..=hi(0) {
                let yc = grid.index([x, y, z]);
                if field.is_inside(yc) != want_inside {
                    continue;
                }
                // pure radius: distance to nearest wrong-phase center,
                // clamped to stay inside the grid box
                let mut rho = dist_sq[yc].sqrt() * h;
                let p = grid.center(yc);
                for a in 0..n {
                    let to_lo = p[a] - grid.origin()[a];
                    let to_hi = grid.origin()[a] + ext[a] as f64 * h - p[a];
                    rho = rho.min(to_lo).min(to_hi);
                }
                rho = rho.min(r_max);
                if rho < 2.0 * h {
                    continue;
                }
                let mut d2 = 0.0;
                let pc = grid.center(cell);
                for a in 0..n {
                    let d = p[a] - pc[a];
                    d2 += d * d;
                }
                if d2.sqrt() > rho + h {
                    continue; // does not touch the cell
                }
                let better = match best {
                    None => true,
                    Some((br, bc)) => rho > br || (rho == br && yc < bc),
                };
                if better {
                    best = Some((rho, yc));
                }
            }
        }
    }
    best.map(|(radius, center_cell)| TangentBallReport {
        cell,
        side,
        radius,
        ball_center: grid.center(center_cell),
        center_cell,
    })
}

/// Per-point record of the Euler-Lagrange inequality check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElPoint {
    pub cell: usize,
    pub h_s: f64,
    pub tol: f64,
    pub interior_ball: Option<f64>,
    pub exterior_ball: Option<f64>,
    /// positive margin = violation size; the worst of the applicable sides
    pub violation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElReport {
    pub lambda: f64,
    pub points: Vec<ElPoint>,
    pub violations: usize,
    pub worst_violation: f64,
}

/// Check the Euler-Lagrange inequalities at every boundary cell with a
/// tangent ball: interior ball ⇒ H_s ≤ Λ + tol, exterior ball ⇒
/// H_s ≥ −Λ − tol, with tol the extrapolation residual plus
/// `tol_coeff · h^{1−s}`. Report-only.
pub fn el_inequality_check(
    field: &BinaryField,
    kernel: &KernelTable,
    lambda: f64,
    pv: &PvConfig,
    r_max: f64,
    tol_coeff: f64,
) -> Result<ElReport> {
    let grid = field.grid();
    let h = grid.h();
    let resolution_tol = tol_coeff * h.powf(1.0 - grid.s());
    let boundary = field.boundary_cells();
    let points: Vec<Result<Option<ElPoint>>> = exec::map_indexed(boundary.len(), |k| {
        let cell = boundary[k];
        let interior = find_tangent_ball(field, cell, Side::Interior, r_max);
        let exterior = find_tangent_ball(field, cell, Side::Exterior, r_max);
        if interior.is_none() && exterior.is_none() {
            return Ok(None);
        }
        let pvc = mean_curvature_pv(field, cell, kernel, pv)?;
        let tol = pvc.residual + resolution_tol;
        let mut violation = f64::NEG_INFINITY;
        if interior.is_some() {
            violation = violation.max(pvc.value - (lambda + tol));
        }
        if exterior.is_some() {
            violation = violation.max(-(lambda + tol) - pvc.value);
        }
        Ok(Some(ElPoint {
            cell,
            h_s: pvc.value,
            tol,
            interior_ball: interior.map(|b| b.radius),
            exterior_ball: exterior.map(|b| b.radius),
            violation,
        }))
    });
    let mut out = Vec::new();
    for p in points {
        if let Some(p) = p? {
            out.push(p);
        }
    }
    let violations = out.iter().filter(|p| p.violation > 0.0).count();
    let worst = out.iter().map(|p| p.violation).fold(f64::NEG_INFINITY, f64::max);
    Ok(ElReport { lambda, points: out, violations, worst_violation: worst })
}
