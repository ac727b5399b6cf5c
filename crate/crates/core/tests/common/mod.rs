//! Shared fixtures and independent oracles for the integration suites.
//! Everything here stays independent of the implementation paths it checks:
//! quadrature oracles use adaptive Simpson on semi-analytic reductions, and
//! random instances come from a fixed-seed ChaCha stream.

#![allow(dead_code)]

use fraclab::energy::HField;
use fraclab::field::{BinaryField, FarField};
use fraclab::grid::{GridDomain, OmegaSpec};
use fraclab::kernel::KernelTable;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Square 2D grid centered at the origin with a centered Ω block.
pub fn grid_2d(ext: usize, h: f64, omega: usize, s: f64) -> Arc<GridDomain> {
    let half = ext as f64 * h / 2.0;
    Arc::new(
        GridDomain::build(
            2,
            h,
            &[ext, ext],
            &[-half, -half],
            OmegaSpec::CenteredBox { size: [omega, omega, 1] },
            s,
        )
        .unwrap(),
    )
}

pub fn grid_1d(ext: usize, h: f64, s: f64) -> Arc<GridDomain> {
    Arc::new(
        GridDomain::build(
            1,
            h,
            &[ext],
            &[-(ext as f64) * h / 2.0],
            OmegaSpec::IndexBox { lo: [1, 0, 0], hi: [ext - 1, 1, 1] },
            s,
        )
        .unwrap(),
    )
}

/// Random phases on all grid cells except the outer ring (kept consistent
/// with a constant-outside far field).
pub fn random_field(grid: &Arc<GridDomain>, rng: &mut ChaCha8Rng) -> BinaryField {
    let ext = grid.extents();
    let n = grid.dim();
    let phase: Vec<bool> = (0..grid.cell_count())
        .map(|i| {
            let c = grid.coords(i);
            let ring = (0..n).any(|a| c[a] == 0 || c[a] + 1 == ext[a]);
            if ring {
                false
            } else {
                rng.gen_bool(0.5)
            }
        })
        .collect();
    BinaryField::new(grid.clone(), phase, FarField::Constant { inside: false }).unwrap()
}

pub fn random_h(grid: &Arc<GridDomain>, rng: &mut ChaCha8Rng, amp: f64) -> HField {
    let values: Vec<f64> = (0..grid.cell_count())
        .map(|_| rng.gen_range(-amp..=amp))
        .collect();
    HField::PerCell(values)
}

pub fn half_space_field(grid: &Arc<GridDomain>, axis: usize, level: f64) -> BinaryField {
    BinaryField::rasterize(grid.clone(), FarField::HalfSpace { axis, level, below: true })
}

pub fn kernel(grid: &GridDomain, r_cut: f64, near_tol: f64) -> KernelTable {
    KernelTable::build(grid, r_cut, near_tol).unwrap()
}

/// Adaptive Simpson integration (independent of the crate's quadrature).
pub fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn s(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64 + Copy>(
        f: F,
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
        let flm = f(0.5 * (a + m));
        let frm = f(0.5 * (m + b));
        let left = s(a, fa, m, fm, flm);
        let right = s(m, fm, b, fb, frm);
        if depth > 50 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, fm, flm, left, tol / 2.0, depth + 1)
                + rec(f, m, b, fm, fb, frm, right, tol / 2.0, depth + 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    rec(f, a, b, fa, fb, fm, s(a, fa, b, fb, fm), tol, 0)
}

/// Oracle for the 1D adjacent-cell weight ∫_0^1 ∫_k^{k+1} |x-y|^{-1-s} dy dx
/// (h = 1): the inner integral is analytic, the outer is adaptive Simpson.
/// For k = 1 the integrable endpoint singularity is removed analytically.
pub fn adjacent_weight_oracle_1d(k: usize, s: f64, tol: f64) -> f64 {
    assert!(k >= 1);
    if k == 1 {
        // ∫_0^1 (u^{-s} - (1+u)^{-s})/s du with the first part analytic
        let analytic = 1.0 / (s * (1.0 - s));
        let smooth = simpson(|u: f64| (1.0 + u).powf(-s) / s, 0.0, 1.0, tol);
        analytic - smooth
    } else {
        let kk = k as f64;
        simpson(
            |u: f64| ((u + kk - 1.0).powf(-s) - (u + kk).powf(-s)) / s,
            0.0,
            1.0,
            tol,
        )
    }
}
