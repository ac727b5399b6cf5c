//! Extension, Dirichlet energies, and monotonicity profiles against
//! independent oracles.

mod common;

use common::{grid_2d, half_space_field, simpson};
use fraclab::extension::{
    dirichlet_halfball, extend_at, extend_field, extend_window, geometric_levels,
    monotonicity_report, phi_profile, poisson_kernel_normalization, poisson_mass_numeric,
    ExtensionParams, RadialProfile,
};
use fraclab::field::{BinaryField, FarField};
use statrs::function::gamma::gamma;

#[test]
fn normalization_matches_gamma_oracle() {
    // ∫ (1+|x|^2)^{-(n+s)/2} dx = π^{n/2} Γ(s/2) / Γ((n+s)/2)
    for (n, s) in [(1usize, 0.5f64), (1, 0.25), (2, 0.5), (2, 0.75), (3, 0.5)] {
        let c = poisson_kernel_normalization(n, s, 1e-12);
        let integral = std::f64::consts::PI.powf(n as f64 / 2.0) * gamma(s / 2.0)
            / gamma((n as f64 + s) / 2.0);
        let oracle = 1.0 / integral;
        assert!(
            (c - oracle).abs() / oracle < 1e-8,
            "n={n} s={s}: {c} vs {oracle}"
        );
    }
}

#[test]
fn kernel_mass_is_one_at_two_heights() {
    let n = 1;
    let s = 0.5;
    let c_p = poisson_kernel_normalization(n, s, 1e-10);
    let m1 = poisson_mass_numeric(n, s, c_p, 1.0, 60.0, 0.002);
    assert!((m1 - 1.0).abs() < 1e-4, "{m1}");
    // homogeneity: the same constant normalizes every z
    let m2 = poisson_mass_numeric(n, s, c_p, 2.0, 120.0, 0.004);
    assert!((m2 - 1.0).abs() < 2e-4, "{m2}");
}

#[test]
fn constant_trace_extends_to_one() {
    let g = grid_2d(32, 1.0 / 16.0, 16, 0.5);
    let field = BinaryField::rasterize(g.clone(), FarField::Constant { inside: true });
    let levels = geometric_levels(g.h() / 4.0, 1.3, 0.5);
    let ext = extend_window(&field, &levels, 0.8, [8, 8, 0], [23, 23, 0]);
    for li in 0..levels.len() {
        for cell in [g.cell_at([0.0, 0.0, 0.0]).unwrap(), g.cell_at([0.2, -0.1, 0.0]).unwrap()] {
            let v = ext.value(cell, li).unwrap();
            assert!(v > 1.0 - 1e-4 && v <= 1.0, "{v}");
        }
    }
}

#[test]
fn half_space_extension_is_odd() {
    let g = grid_2d(64, 1.0 / 32.0, 32, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    for &z in &[0.01, 0.05, 0.2] {
        // zero on the interface line for every z
        let v0 = extend_at(&field, [0.1, 0.0, 0.0], z, 0.9);
        assert!(v0.abs() < 1e-10, "interface value {v0} at z={z}");
        // odd in the normal coordinate
        let vp = extend_at(&field, [0.1, 0.17, 0.0], z, 0.9);
        let vm = extend_at(&field, [0.1, -0.17, 0.0], z, 0.9);
        assert!((vp + vm).abs() < 1e-10, "{vp} vs {vm}");
        assert!(vm > 0.0 && vp < 0.0);
    }
}

#[test]
fn extension_bounded_and_trace_consistent() {
    let g = grid_2d(48, 1.0 / 24.0, 24, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let levels = geometric_levels(g.h() / 4.0, 1.3, 0.4);
    let ext = extend_field(&field, &levels, 0.8);
    let mut checked = 0;
    for cell in 0..g.cell_count() {
        let v = ext.value(cell, 0).unwrap();
        assert!((-1.0..=1.0).contains(&v));
        // at cells with a phase-pure 5x5 neighborhood the first level
        // agrees in sign with the trace
        let c = g.coords(cell);
        let ext_dims = g.extents();
        if c[0] < 2 || c[1] < 2 || c[0] + 2 >= ext_dims[0] || c[1] + 2 >= ext_dims[1] {
            continue;
        }
        let mut pure = true;
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                let j = g.offset(cell, [dx, dy, 0]).unwrap();
                if field.is_inside(j) != field.is_inside(cell) {
                    pure = false;
                }
            }
        }
        if pure {
            assert_eq!(v > 0.0, field.is_inside(cell), "cell {cell}: {v}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn single_flipped_cell_matches_quadrature_oracle() {
    // u ≡ 1 except one flipped cell: u~(x, z) = 1 − 2 ∫_cell P(x−y, z) dy
    let g = grid_2d(32, 1.0 / 16.0, 16, 0.5);
    let all = BinaryField::rasterize(g.clone(), FarField::Constant { inside: true });
    let flip = g.cell_at([0.0, 0.0, 0.0]).unwrap();
    let field = all.with_flipped(flip);
    let p = g.center(flip);
    let s = g.s();
    let c_p = poisson_kernel_normalization(2, s, 1e-12);
    for &z in &[0.05, 0.1] {
        let v = extend_at(&field, [p[0], p[1], 0.0], z, 1.2);
        // oracle: nested adaptive Simpson over the flipped cell
        let h = g.h();
        let mass = simpson(
            |x: f64| {
                simpson(
                    move |y: f64| {
                        c_p * z.powf(s) / (x * x + y * y + z * z).powf((2.0 + s) / 2.0)
                    },
                    -h / 2.0,
                    h / 2.0,
                    1e-12,
                )
            },
            -h / 2.0,
            h / 2.0,
            1e-10,
        );
        let oracle = 1.0 - 2.0 * mass;
        assert!(
            (v - oracle).abs() < 2e-3,
            "z={z}: {v} vs oracle {oracle}"
        );
    }
}

#[test]
fn dirichlet_constant_field_is_zero() {
    let g = grid_2d(32, 1.0 / 16.0, 16, 0.5);
    let field = BinaryField::rasterize(g.clone(), FarField::Constant { inside: true });
    let levels = geometric_levels(g.h() / 4.0, 1.3, 0.4);
    let ext = extend_field(&field, &levels, 0.8);
    let v = dirichlet_halfball(&ext, [0.0, 0.0, 0.0], 0.3).unwrap();
    assert!(v.abs() < 1e-20, "{v}");
}

#[test]
fn dirichlet_complement_invariance_is_exact() {
    // the complement extension is the exact negation; |∇u~|^2 is unchanged
    let g = grid_2d(48, 1.0 / 24.0, 24, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let levels = geometric_levels(g.h() / 4.0, 1.3, 0.35);
    let e1 = extend_field(&field, &levels, 0.7);
    let e2 = extend_field(&field.complement(), &levels, 0.7);
    let d1 = dirichlet_halfball(&e1, [0.0, 0.0, 0.0], 0.3).unwrap();
    let d2 = dirichlet_halfball(&e2, [0.0, 0.0, 0.0], 0.3).unwrap();
    assert_eq!(d1.to_bits(), d2.to_bits());
}

#[test]
fn dirichlet_refinement_changes_less_than_ten_percent() {
    let run = |ext_cells: usize, h: f64| -> f64 {
        let g = grid_2d(ext_cells, h, ext_cells / 2, 0.5);
        let field = half_space_field(&g, 1, 0.0);
        let levels = geometric_levels(h / 4.0, 1.3, 0.35);
        let ext = extend_field(&field, &levels, 0.7);
        dirichlet_halfball(&ext, [0.0, 0.0, 0.0], 0.3).unwrap()
    };
    let coarse = run(48, 1.0 / 24.0);
    let fine = run(96, 1.0 / 48.0);
    let rel = (fine - coarse).abs() / fine;
    assert!(rel < 0.10, "coarse {coarse} vs fine {fine} (rel {rel:.3})");
}

#[test]
fn dirichlet_rejects_oversized_ball() {
    let g = grid_2d(32, 1.0 / 16.0, 16, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let levels = geometric_levels(g.h() / 4.0, 1.3, 0.2);
    let ext = extend_field(&field, &levels, 0.5);
    let err = dirichlet_halfball(&ext, [0.0, 0.0, 0.0], 5.0).unwrap_err();
    assert!(matches!(err, fraclab::error::Error::BallTooLarge { .. }));
}

#[test]
fn phi_profile_identity_and_lambda_zero() {
    let g = grid_2d(64, 1.0 / 32.0, 32, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let radii = [0.12, 0.16, 0.2, 0.24];
    let params = ExtensionParams { z1_factor: 0.25, z_ratio: 1.3, trunc_radius: 0.8 };
    let center = [g.h() / 2.0, -g.h() / 2.0, 0.0];
    let prof0 = phi_profile(&field, center, &radii, 0.0, 0.05, &params).unwrap();
    // Λ = 0 ⇒ Φ ≡ Ξ
    for (x, p) in prof0.xi.iter().zip(&prof0.phi) {
        assert_eq!(x.to_bits(), p.to_bits());
    }
    let lam = 0.8;
    let c_tilde = 0.05;
    let prof = phi_profile(&field, center, &radii, lam, c_tilde, &params).unwrap();
    // arithmetic identity Φ = Ξ + ((n−s)/s) ω_n Λ̂ r^s as stored
    let coeff = (2.0 - 0.5) / 0.5 * std::f64::consts::PI * prof.lambda_hat;
    for ((&r, &x), &p) in radii.iter().zip(&prof.xi).zip(&prof.phi) {
        assert_eq!((x + coeff * r.powf(0.5)).to_bits(), p.to_bits());
    }
    assert_eq!(prof.lambda_hat, 8.0 * c_tilde * lam);
}

#[test]
fn phi_profile_requires_boundary_center() {
    let g = grid_2d(64, 1.0 / 32.0, 32, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let params = ExtensionParams { z1_factor: 0.25, z_ratio: 1.3, trunc_radius: 0.6 };
    let err = phi_profile(&field, [0.0, 0.5, 0.0], &[0.1, 0.15, 0.2], 0.0, 0.05, &params)
        .unwrap_err();
    assert!(matches!(err, fraclab::error::Error::NotBoundaryCell { .. }));
}

#[test]
fn half_space_xi_profile_is_flat() {
    // cones have constant Ξ; the half-space fixture must stay within a few
    // percent across radii
    let g = grid_2d(128, 1.0 / 64.0, 64, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let radii = [0.12, 0.15, 0.18, 0.21, 0.24, 0.27, 0.3];
    let params = ExtensionParams { z1_factor: 0.25, z_ratio: 1.3, trunc_radius: 0.9 };
    let center = [g.h() / 2.0, -g.h() / 2.0, 0.0];
    let prof = phi_profile(&field, center, &radii, 0.0, 0.05, &params).unwrap();
    let mean: f64 = prof.xi.iter().sum::<f64>() / prof.xi.len() as f64;
    let max = prof.xi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = prof.xi.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(
        (max - min) / mean <= 0.03,
        "Ξ spread {:.4} of mean (values {:?})",
        (max - min) / mean,
        prof.xi
    );
}

#[test]
fn xi_scale_covariance_on_the_half_space() {
    // Ξ_{λE}(r) = Ξ_E(r/λ): the half-space through the center is its own
    // dilation, so Ξ at r and at r/λ agree within discretization tolerance
    let g = grid_2d(96, 1.0 / 48.0, 48, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let lam = 1.5;
    let radii = [0.15, 0.225];
    let params = ExtensionParams { z1_factor: 0.25, z_ratio: 1.3, trunc_radius: 0.8 };
    let center = [g.h() / 2.0, -g.h() / 2.0, 0.0];
    let dilated = field.dilate(lam, Some([0.0, 0.0, 0.0])).unwrap();
    let p1 = phi_profile(&dilated, center, &[radii[1]], 0.0, 0.05, &params).unwrap();
    let p2 = phi_profile(&field, center, &[radii[0]], 0.0, 0.05, &params).unwrap();
    let rel = (p1.xi[0] - p2.xi[0]).abs() / p2.xi[0];
    assert!(rel < 0.05, "Ξ_(λE)(λr) {} vs Ξ_E(r) {} (rel {rel:.3})", p1.xi[0], p2.xi[0]);
}

#[test]
fn monotonicity_report_trivial_and_half_space() {
    let increasing = RadialProfile {
        radii: vec![0.1, 0.2, 0.3],
        xi: vec![1.0, 1.1, 1.2],
        phi: vec![1.0, 1.1, 1.2],
        lambda_hat: 0.0,
    };
    let rep = monotonicity_report(&increasing, 1e-9, 0.5, 100.0).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.worst_drop, 0.0);

    let g = grid_2d(64, 1.0 / 32.0, 32, 0.5);
    let field = half_space_field(&g, 1, 0.0);
    let radii = [0.12, 0.16, 0.2, 0.24];
    let params = ExtensionParams { z1_factor: 0.25, z_ratio: 1.3, trunc_radius: 0.8 };
    let center = [g.h() / 2.0, -g.h() / 2.0, 0.0];
    let prof = phi_profile(&field, center, &radii, 0.5, 0.05, &params).unwrap();
    let range = prof.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - prof.phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let rep = monotonicity_report(&prof, 0.05 * range.max(1e-9), 0.5, 100.0).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn checkerboard_patch_fails_monotonicity() {
    // a checkerboard patch inside a half-space inflates Ξ at small radii and
    // deflates it once the ball outgrows the patch: the report must fail
    let g = grid_2d(96, 1.0 / 48.0, 48, 0.5);
    let mut phase: Vec<bool> = (0..g.cell_count())
        .map(|i| g.center(i)[1] < 0.0)
        .collect();
    for (i, v) in phase.iter_mut().enumerate() {
        let p = g.center(i);
        if (p[0] * p[0] + p[1] * p[1]).sqrt() < 0.08 {
            let c = g.coords(i);
            *v = (c[0] + c[1]) % 2 == 0;
        }
    }
    let field = BinaryField::new(
        g.clone(),
        phase,
        FarField::HalfSpace { axis: 1, level: 0.0, below: true },
    )
    .unwrap();
    let radii = [0.1, 0.14, 0.2, 0.26, 0.32];
    let params = ExtensionParams { z1_factor: 0.25, z_ratio: 1.3, trunc_radius: 0.7 };
    let center = [g.h() / 2.0, -g.h() / 2.0, 0.0];
    let prof = phi_profile(&field, center, &radii, 0.0, 0.05, &params).unwrap();
    let range = prof.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - prof.phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let rep = monotonicity_report(&prof, 0.05 * range, 0.5, 1e6).unwrap();
    assert!(!rep.pass, "checkerboard patch should break monotonicity: {rep:?}");
}
