//! Energy identities and oracles: interaction symmetry, complement-exact
//! perimeter, the Gagliardo/perimeter factor-8 identity, first differences
//! against full re-evaluation, and cutoff monotonicity.

mod common;

use common::{grid_1d, grid_2d, half_space_field, kernel, random_field, random_h, rng};
use fraclab::energy::{
    flip_delta, gagliardo_local, h_integral, interaction, massari_energy, perimeter_in,
    perimeter_s, phase_set, HField,
};
use fraclab::error::Error;
use fraclab::field::{BinaryField, FarField};
use fraclab::grid::{GridDomain, OmegaSpec};
use proptest::prelude::*;
use std::sync::Arc;

#[test]
fn interaction_empty_is_zero() {
    let g = grid_2d(12, 0.5, 4, 0.5);
    let k = kernel(&g, 2.5, 1e-5);
    let field = half_space_field(&g, 1, 0.0);
    let empty = fraclab::energy::CellSet::new(&g, vec![false; g.cell_count()], None);
    let e = phase_set(&field, true, None);
    assert_eq!(interaction(&g, &k, &empty, &e).unwrap(), 0.0);
}

#[test]
fn interaction_disjointness_guard() {
    let g = grid_2d(12, 0.5, 4, 0.5);
    let k = kernel(&g, 2.5, 1e-5);
    let mut mask = vec![false; g.cell_count()];
    mask[g.omega_cells()[0]] = true;
    let a = fraclab::energy::CellSet::new(&g, mask.clone(), None);
    let b = fraclab::energy::CellSet::new(&g, mask, None);
    assert!(matches!(
        interaction(&g, &k, &a, &b).unwrap_err(),
        Error::SetsNotDisjoint { .. }
    ));
}

#[test]
fn two_single_cells_at_distance_4h() {
    // n=1, s=0.5, h=1: the midpoint-regime weight 1/4^{1.5} = 0.125
    let g = grid_1d(16, 1.0, 0.5);
    let k = kernel(&g, 6.0, 1e-6);
    let mut ma = vec![false; g.cell_count()];
    let mut mb = vec![false; g.cell_count()];
    ma[6] = true;
    mb[10] = true;
    let a = fraclab::energy::CellSet::new(&g, ma, None);
    let b = fraclab::energy::CellSet::new(&g, mb, None);
    let v = interaction(&g, &k, &a, &b).unwrap();
    assert!((v - 0.125).abs() < 1e-15, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn interaction_is_symmetric(seed in 0u64..10_000) {
        let g = grid_2d(12, 0.5, 6, 0.5);
        let k = kernel(&g, 2.0, 1e-5);
        let mut r = rng(seed);
        let field = random_field(&g, &mut r);
        let a = phase_set(&field, true, None);
        let b = phase_set(&field, false, None);
        let ab = interaction(&g, &k, &a, &b).unwrap();
        let ba = interaction(&g, &k, &b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0), "{} vs {}", ab, ba);
    }

    #[test]
    fn perimeter_complement_symmetry_is_exact(seed in 0u64..10_000) {
        let g = grid_2d(14, 0.25, 6, 0.5);
        let k = kernel(&g, 1.0, 1e-5);
        let mut r = rng(seed);
        let field = random_field(&g, &mut r);
        let a = perimeter_s(&field, &k).unwrap().per_s;
        let b = perimeter_s(&field.complement(), &k).unwrap().per_s;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn perimeter_equals_sum_of_interaction_terms(seed in 0u64..10_000) {
        let g = grid_2d(14, 0.25, 6, 0.5);
        let k = kernel(&g, 1.0, 1e-5);
        let mut r = rng(seed);
        let field = random_field(&g, &mut r);
        let rep = perimeter_s(&field, &k).unwrap();
        let sum = rep.l_inside_outside + rep.l_outside_inside;
        prop_assert!(
            (rep.per_s - sum).abs() <= 1e-12 * rep.per_s.max(1.0),
            "symmetric pass {} vs interaction route {}", rep.per_s, sum
        );
    }

    #[test]
    fn gagliardo_identity_factor_8(seed in 0u64..10_000) {
        let g = grid_2d(20, 0.25, 12, 0.5);
        let k = kernel(&g, 1.25, 1e-5);
        let mut r = rng(seed);
        let field = random_field(&g, &mut r);
        let center = [0.0, 0.0, 0.0];
        let radius = 1.2;
        let j = gagliardo_local(&field, &k, center, radius).unwrap();
        let ball = fraclab::energy::ball_mask(&g, center, radius);
        let per = perimeter_in(&field, &k, &ball).unwrap().per_s;
        let rel = (j - 8.0 * per).abs() / (8.0 * per).max(1e-30);
        prop_assert!(rel <= 1e-12, "J_r {} vs 8 Per {} (rel {:.2e})", j, 8.0 * per, rel);
    }

    #[test]
    fn flip_delta_matches_full_recomputation(seed in 0u64..10_000) {
        let g = grid_2d(11, 0.5, 5, 0.5);
        let k = kernel(&g, 2.0, 1e-5);
        let mut r = rng(seed);
        let field = random_field(&g, &mut r);
        let h = random_h(&g, &mut r, 1.0);
        for &cell in g.omega_cells().iter().step_by(7) {
            let fast = flip_delta(&field, cell, &h, &k).unwrap();
            let e0 = massari_energy(&field, &h, &k).unwrap().massari.unwrap();
            let e1 = massari_energy(&field.with_flipped(cell), &h, &k)
                .unwrap()
                .massari
                .unwrap();
            prop_assert!(
                (fast - (e1 - e0)).abs() <= 1e-9 * (1.0 + e0.abs()),
                "cell {}: fast {} vs full {}", cell, fast, e1 - e0
            );
        }
    }
}

#[test]
fn flip_deltas_cancel() {
    let g = grid_2d(12, 0.5, 4, 0.5);
    let k = kernel(&g, 2.0, 1e-5);
    let field = half_space_field(&g, 1, 0.01);
    let h = HField::Constant(0.3);
    let cell = g.omega_cells()[5];
    let d1 = flip_delta(&field, cell, &h, &k).unwrap();
    let d2 = flip_delta(&field.with_flipped(cell), cell, &h, &k).unwrap();
    assert!((d1 + d2).abs() < 1e-14);
}

#[test]
fn flip_outside_omega_rejected() {
    let g = grid_2d(12, 0.5, 4, 0.5);
    let k = kernel(&g, 2.0, 1e-5);
    let field = half_space_field(&g, 1, 0.01);
    assert!(matches!(
        flip_delta(&field, 0, &HField::Constant(0.0), &k).unwrap_err(),
        Error::CellNotInOmega { .. }
    ));
}

#[test]
fn empty_set_has_zero_perimeter() {
    let g = grid_2d(12, 0.5, 4, 0.5);
    let k = kernel(&g, 2.0, 1e-5);
    let field = BinaryField::rasterize(g.clone(), FarField::Constant { inside: false });
    let rep = perimeter_s(&field, &k).unwrap();
    assert_eq!(rep.per_s, 0.0);
    assert_eq!(rep.l_inside_outside, 0.0);
    assert_eq!(rep.l_outside_inside, 0.0);
}

#[test]
fn constant_field_has_zero_gagliardo() {
    let g = grid_2d(16, 0.25, 10, 0.5);
    let k = kernel(&g, 1.0, 1e-5);
    let field = BinaryField::rasterize(g.clone(), FarField::Constant { inside: true });
    let j = gagliardo_local(&field, &k, [0.0, 0.0, 0.0], 0.9).unwrap();
    assert_eq!(j, 0.0);
}

#[test]
fn gagliardo_single_flipped_cell_matches_hand_expansion() {
    // tiny grid: the double sum expands by hand over the kernel support
    let g = grid_2d(9, 1.0, 5, 0.5);
    let k = kernel(&g, 4.0, 1e-6);
    let field = BinaryField::rasterize(g.clone(), FarField::Constant { inside: false });
    let mid = g.cell_at([0.0, 0.0, 0.0]).unwrap();
    let field = field.with_flipped(mid);
    let r = 2.0;
    let j = gagliardo_local(&field, &k, [0.0, 0.0, 0.0], r).unwrap();
    // hand expansion: for each cell x in B_r, each kernel neighbor y with a
    // phase difference contributes 4w (in-ball y) or 8w (out-of-ball y);
    // only pairs straddling the flipped cell differ in phase
    let mut expect = 0.0;
    let ball = fraclab::energy::ball_mask(&g, [0.0, 0.0, 0.0], r);
    for i in 0..g.cell_count() {
        if !ball[i] {
            continue;
        }
        for &(off, w) in k.offsets() {
            if let Some(j2) = g.offset(i, off) {
                if field.is_inside(i) != field.is_inside(j2) {
                    expect += if ball[j2] { 4.0 * w } else { 8.0 * w };
                }
            }
        }
        // tail: opposite phase fraction is 1 for the flipped cell, 0 neighbors
        if field.is_inside(i) {
            expect += 8.0 * k.tail_per_cell();
        }
    }
    assert!((j - expect).abs() <= 1e-12 * expect.max(1.0), "{j} vs {expect}");
}

#[test]
fn massari_trivial_cases() {
    let g = grid_2d(12, 0.5, 4, 0.5);
    let k = kernel(&g, 2.0, 1e-5);
    let field = half_space_field(&g, 1, 0.01);
    let rep0 = massari_energy(&field, &HField::Constant(0.0), &k).unwrap();
    assert_eq!(rep0.massari.unwrap(), rep0.per_s);

    // E ∩ Ω empty: the volume term vanishes for any H
    let empty = BinaryField::rasterize(g.clone(), FarField::Constant { inside: false });
    let rep1 = massari_energy(&empty, &HField::Constant(7.3), &k).unwrap();
    assert_eq!(rep1.massari.unwrap(), rep1.per_s);
}

#[test]
fn massari_one_cell_unit_h() {
    // 3x3 Ω, h=1, H ≡ 1, one inside cell: massari = per_s + 1
    let g = Arc::new(
        GridDomain::build(
            2,
            1.0,
            &[9, 9],
            &[-4.5, -4.5],
            OmegaSpec::CenteredBox { size: [3, 3, 1] },
            0.5,
        )
        .unwrap(),
    );
    let k = kernel(&g, 4.0, 1e-6);
    let field = BinaryField::rasterize(g.clone(), FarField::Constant { inside: false });
    let field = field.with_flipped(g.cell_at([0.0, 0.0, 0.0]).unwrap());
    let rep = massari_energy(&field, &HField::Constant(1.0), &k).unwrap();
    assert!((rep.massari.unwrap() - (rep.per_s + 1.0)).abs() < 1e-12);
    assert_eq!(h_integral(&field, &HField::Constant(1.0)), 1.0);
}

#[test]
fn massari_rejects_non_finite_h() {
    let g = grid_2d(12, 0.5, 4, 0.5);
    let k = kernel(&g, 2.0, 1e-5);
    let field = half_space_field(&g, 1, 0.01);
    let mut values = vec![0.0; g.cell_count()];
    values[g.omega_cells()[3]] = f64::NAN;
    assert!(matches!(
        massari_energy(&field, &HField::PerCell(values), &k).unwrap_err(),
        Error::NonFiniteH { .. }
    ));
}

#[test]
fn translation_invariance_one_cell() {
    // same geometry expressed on two grids offset by one cell: energies agree
    let h = 0.25;
    let s = 0.5;
    let make = |shift: f64| -> f64 {
        let g = Arc::new(
            GridDomain::build(
                2,
                h,
                &[16, 16],
                &[-2.0 + shift, -2.0],
                OmegaSpec::CenteredBox { size: [6, 6, 1] },
                s,
            )
            .unwrap(),
        );
        let k = kernel(&g, 1.0, 1e-6);
        let field = BinaryField::rasterize(
            g.clone(),
            FarField::HalfSpace { axis: 1, level: 0.03, below: true },
        );
        perimeter_s(&field, &k).unwrap().per_s
    };
    let a = make(0.0);
    let b = make(h); // grid shifted by exactly one cell: same lattice geometry
    assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
}

#[test]
fn half_space_perimeter_shift_invariance() {
    // half-space vs the same half-space one cell lower: both finite, equal
    // up to the lattice translation
    let g = grid_2d(24, 0.25, 12, 0.5);
    let k = kernel(&g, 1.5, 1e-5);
    let a = perimeter_s(&half_space_field(&g, 1, 0.0), &k).unwrap().per_s;
    let b = perimeter_s(&half_space_field(&g, 1, 0.25), &k).unwrap().per_s;
    assert!(a.is_finite() && b.is_finite());
    assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
}

#[test]
fn monotone_cutoff_bound() {
    // increasing R_cut changes per_s by less than 2 |Ω| τ(R_cut)
    let g = grid_2d(20, 0.25, 8, 0.5);
    let field = half_space_field(&g, 1, 0.01);
    let k1 = kernel(&g, 1.0, 1e-5);
    let k2 = kernel(&g, 1.75, 1e-5);
    let p1 = perimeter_s(&field, &k1).unwrap();
    let p2 = perimeter_s(&field, &k2).unwrap();
    let bound = 2.0 * g.omega_cells().len() as f64 * k1.tail_per_cell();
    assert!(
        (p2.per_s - p1.per_s).abs() <= bound,
        "{} vs bound {}",
        (p2.per_s - p1.per_s).abs(),
        bound
    );
    assert!(p1.meta.tail_bound >= (p2.per_s - p1.per_s).abs());
}

#[test]
fn submodularity_witness_all_weights_nonnegative() {
    let g = grid_2d(12, 0.5, 6, 0.75);
    let k = kernel(&g, 2.0, 1e-5);
    assert!(k.offsets().iter().all(|&(_, w)| w >= 0.0));
}
