//! Measured geometric diagnostics: volume density ratios, the clean-ball
//! condition, slab flatness, boundary Hausdorff distances, and perimeter
//! stability across resolutions. All report-only; thresholds live with the
//! acceptance suite.

use crate::curvature::distance_transform_sq;
use crate::error::{Error, Result};
use crate::exec;
use crate::field::BinaryField;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityProfile {
    pub cell: usize,
    pub radii: Vec<f64>,
    /// |E ∩ B_r| / (ω_n r^n) per radius, by binary cell counting.
    pub ratios: Vec<f64>,
}

/// Density ratios of the inside phase around a boundary cell.
pub fn density_profile(field: &BinaryField, cell: usize, radii: &[f64]) -> Result<DensityProfile> {
    let grid = field.grid();
    if !field.boundary_cells().contains(&cell) {
        return Err(Error::NotBoundaryCell { cell });
    }
    let n = grid.dim();
    let h = grid.h();
    let hn = h.powi(n as i32);
    let p = grid.center(cell);
    let omega_n = crate::grid::ball_volume(n);
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let r2 = r * r;
        let mut count = 0usize;
        let reach = (r / h).ceil() as i64 + 1;
        let cc = grid.coords(cell);
        let ext = grid.extents();
        let lo = |a: usize| (cc[a] as i64 - reach).max(0) as usize;
        let hi = |a: usize| ((cc[a] as i64 + reach) as usize).min(ext[a] - 1);
        let zr = if n >= 3 { (lo(2), hi(2)) } else { (0, 0) };
        let yr = if n >= 2 { (lo(1), hi(1)) } else { (0, 0) };
        for z in zr.0..=zr.1 {
            for y in yr.0..=yr.1 {
                for x in lo(0)..=hi(0) {
                    let j = grid.index([x, y, z]);
                    if !field.is_inside(j) {
                        continue;
                    }
                    let q = grid.center(j);
                    let mut d2 = 0.0;
                    for a in 0..n {
                        let d = q[a] - p[a];
                        d2 += d * d;
                    }
                    if d2 <= r2 {
                        count += 1;
                    }
                }
            }
        }
        ratios.push(count as f64 * hn / (omega_n * r.powi(n as i32)));
    }
    Ok(DensityProfile { cell, radii: radii.to_vec(), ratios })
}

/// Minimum inside-phase density ratio over all boundary cells and radii.
pub fn density_sweep(field: &BinaryField, radii: &[f64]) -> Result<f64> {
    let boundary = field.boundary_cells();
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mins = exec::map_indexed(boundary.len(), |k| {
        density_profile(field, boundary[k], radii)
            .map(|p| p.ratios.into_iter().fold(f64::INFINITY, f64::min))
    });
    let mut worst = f64::INFINITY;
    for m in mins {
        worst = worst.min(m?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanBallReport {
    pub cell: usize,
    pub r: f64,
    /// Largest c with phase-pure balls B_{cr} on both sides inside B_r.
    pub c: f64,
    pub inside_center: Option<[f64; 3]>,
    pub outside_center: Option<[f64; 3]>,
}

/// Search for phase-pure balls of radius c·r on both sides within B_r(cell).
pub fn clean_ball_check(field: &BinaryField, cell: usize, r: f64) -> CleanBallReport {
    let grid = field.grid();
    let n = grid.dim();
    let h = grid.h();
    let p = grid.center(cell);
    let mut best: [Option<(f64, usize)>; 2] = [None, None];
    for (side_idx, want_inside) in [(0usize, true), (1usize, false)] {
        let wrong: Vec<bool> = (0..grid.cell_count())
            .map(|i| field.is_inside(i) != want_inside)
            .collect();
        let dist_sq = distance_transform_sq(grid, &wrong);
        let reach = (r / h).ceil() as i64 + 1;
        let cc = grid.coords(cell);
        let ext = grid.extents();
        let lo = |a: usize| (cc[a] as i64 - reach).max(0) as usize;
        let hi = |a: usize| ((cc[a] as i64 + reach) as usize).min(ext[a] - 1);
        let zr = if n >= 3 { (lo(2), hi(2)) } else { (0, 0) };
        let yr = if n >= 2 { (lo(1), hi(1)) } else { (0, 0) };
        for z in zr.0..=zr.1 {
            for y in yr.0..=yr.1 {
                for x in lo(0)..=hi(0) {
                    let yc = grid.index([x, y, z]);
                    if field.is_inside(yc) != want_inside {
                        continue;
                    }
                    let q = grid.center(yc);
                    let mut d2 = 0.0;
                    for a in 0..n {
                        let d = q[a] - p[a];
                        d2 += d * d;
                    }
                    let dist_center = d2.sqrt();
                    if dist_center > r {
                        continue;
                    }
                    // pure radius inside B_r: limited by wrong-phase cells,
                    // the enclosing ball, and the grid box
                    let mut rho = dist_sq[yc].sqrt() * h;
                    rho = rho.min(r - dist_center);
                    for a in 0..n {
                        let to_lo = q[a] - grid.origin()[a];
                        let to_hi = grid.origin()[a] + ext[a] as f64 * h - q[a];
                        rho = rho.min(to_lo).min(to_hi);
                    }
                    let better = match best[side_idx] {
                        None => rho > 0.0,
                        Some((br, bc)) => rho > br || (rho == br && yc < bc),
                    };
                    if better {
                        best[side_idx] = Some((rho, yc));
                    }
                }
            }
        }
    }
    let c = match (best[0], best[1]) {
        (Some((a, _)), Some((b, _))) => (a.min(b)) / r,
        _ => 0.0,
    };
    CleanBallReport {
        cell,
        r,
        c,
        inside_center: best[0].map(|(_, yc)| grid.center(yc)),
        outside_center: best[1].map(|(_, yc)| grid.center(yc)),
    }
}

/// Finite set of probe directions for slab fitting.
#[derive(Debug, Clone)]
pub struct DirectionDictionary {
    pub directions: Vec<[f64; 3]>,
}

impl DirectionDictionary {
    /// Uniform directions for the active dimension: 64 on the circle for
    /// n = 2, 266 Fibonacci points on the sphere for n = 3.
    pub fn default_for(n: usize) -> Self {
        match n {
            1 => Self { directions: vec![[1.0, 0.0, 0.0]] },
            2 => Self::circle(64),
            _ => Self::sphere(266),
        }
    }

    pub fn circle(count: usize) -> Self {
        let directions = (0..count)
            .map(|k| {
                let th = std::f64::consts::PI * k as f64 / count as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect();
        Self { directions }
    }

    pub fn sphere(count: usize) -> Self {
        // Fibonacci lattice on the upper hemisphere (slabs are symmetric)
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        let directions = (0..count)
            .map(|k| {
                let zc = (k as f64 + 0.5) / count as f64; // (0,1) -> upper half
                let th = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
                let rr = (1.0 - zc * zc).sqrt();
                [rr * th.cos(), rr * th.sin(), zc]
            })
            .collect();
        Self { directions }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub cell: usize,
    pub r: f64,
    pub direction: [f64; 3],
    pub half_width: f64,
    /// half_width / r
    pub flatness: f64,
}

/// Minimal slab half-width containing ∂E ∩ B_r(cell) over the dictionary.
pub fn flatness(
    field: &BinaryField,
    cell: usize,
    r: f64,
    dict: &DirectionDictionary,
) -> Result<FlatnessReport> {
    let grid = field.grid();
    let boundary = field.boundary_cells();
    if !boundary.contains(&cell) {
        return Err(Error::NotBoundaryCell { cell });
    }
    let n = grid.dim();
    let p = grid.center(cell);
    let r2 = r * r;
    let points: Vec<[f64; 3]> = boundary
        .iter()
        .filter_map(|&b| {
            let q = grid.center(b);
            let mut d2 = 0.0;
            for a in 0..n {
                let d = q[a] - p[a];
                d2 += d * d;
            }
            (d2 <= r2).then_some(q)
        })
        .collect();
    let mut best = (f64::INFINITY, [0.0; 3]);
    for &nu in &dict.directions {
        let mut hw = 0.0f64;
        for q in &points {
            let mut dot = 0.0;
            for a in 0..n {
                dot += (q[a] - p[a]) * nu[a];
            }
            hw = hw.max(dot.abs());
        }
        if hw < best.0 {
            best = (hw, nu);
        }
    }
    Ok(FlatnessReport {
        cell,
        r,
        direction: best.1,
        half_width: best.0,
        flatness: best.0 / r,
    })
}

/// Symmetric Hausdorff distance between the boundaries of two fields within
/// a window (ball about a center; pass None for the whole grid).
pub fn hausdorff_boundary_distance(
    a: &BinaryField,
    b: &BinaryField,
    window: Option<([f64; 3], f64)>,
) -> Result<f64> {
    let grid = a.grid();
    let n = grid.dim();
    let filter = |cells: Vec<usize>| -> Vec<[f64; 3]> {
        cells
            .into_iter()
            .map(|c| grid.center(c))
            .filter(|q| match window {
                None => true,
                Some((p, r)) => {
                    let mut d2 = 0.0;
                    for ax in 0..n {
                        let d = q[ax] - p[ax];
                        d2 += d * d;
                    }
                    d2 <= r * r
                }
            })
            .collect()
    };
    let ba = filter(a.boundary_cells());
    let bb = filter(b.boundary_cells());
    if ba.is_empty() || bb.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let one_sided = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
        let mut worst = 0.0f64;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                let mut d2 = 0.0;
                for ax in 0..n {
                    let d = p[ax] - q[ax];
                    d2 += d * d;
                }
                best = best.min(d2);
            }
            worst = worst.max(best);
        }
        worst.sqrt()
    };
    Ok(one_sided(&ba, &bb).max(one_sided(&bb, &ba)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub resolutions: Vec<f64>,
    pub perimeters: Vec<f64>,
    pub successive_diffs: Vec<f64>,
    /// true when successive absolute differences shrink
    pub pass: bool,
}

/// Solve the same continuum instance at each resolution through the supplied
/// solver and report the perimeter sequence.
pub fn perimeter_continuity_check<F>(resolutions: &[f64], solve: F) -> Result<ContinuityReport>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut perimeters = Vec::with_capacity(resolutions.len());
    for &h in resolutions {
        perimeters.push(solve(h)?);
    }
    let successive_diffs: Vec<f64> =
        perimeters.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let pass = successive_diffs.windows(2).all(|w| w[1] <= w[0]);
    Ok(ContinuityReport {
        resolutions: resolutions.to_vec(),
        perimeters,
        successive_diffs,
        pass,
    })
}
