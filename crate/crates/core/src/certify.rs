//! Almost-minimality certification.
//!
//! `lambda_certificate` computes the smallest Λ for which the field beats
//! every competitor in a family up to Λ times the symmetric-difference
//! volume. The full family (every interior configuration) certifies
//! almost-minimality exactly on the lattice; connected patch families give a
//! sound lower bound through the one-sided sub/super-solution inequalities,
//! whose conjunction over all perturbation sets is equivalent to
//! almost-minimality.

use crate::energy::{interaction, perimeter_symmetric, phase_set, CellSet};
use crate::error::{Error, Result};
use crate::exec;
use crate::field::BinaryField;
use crate::kernel::KernelTable;
use serde::{Deserialize, Serialize};

pub const FULL_ENUMERATION_BOUND: usize = 20;

/// Competitor family for certification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Every interior configuration (exact certificate, |Ω| ≤ 20).
    Full,
    /// Connected perturbation patches up to the given size (sound lower
    /// bound on lambda_star through the one-sided inequalities).
    Patches { max_size: usize },
    /// Every subset of each phase within Ω, used by equivalence tests
    /// (|Ω| ≤ 20).
    FullSubsets,
}

impl Family {
    pub fn describe(&self) -> String {
        match self {
            Family::Full => "full enumeration".into(),
            Family::Patches { max_size } => format!("connected patches up to size {max_size}"),
            Family::FullSubsets => "all one-sided subsets".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaCertificate {
    /// Smallest Λ over the family, clamped at zero.
    pub lambda_star: f64,
    /// Grid cells where the witness competitor differs from the field.
    pub witness_diff: Vec<usize>,
    pub family: String,
}

/// Exact certificate over the full competitor family or a patch family.
pub fn lambda_certificate(
    field: &BinaryField,
    kernel: &KernelTable,
    family: Family,
) -> Result<LambdaCertificate> {
    match family {
        Family::Full => lambda_full(field, kernel),
        Family::Patches { max_size } => {
            let (lambda, witness) = lambda_one_sided(field, kernel, PatchIter::Connected(max_size))?;
            Ok(LambdaCertificate {
                lambda_star: lambda.max(0.0),
                witness_diff: witness,
                family: family.describe(),
            })
        }
        Family::FullSubsets => {
            let (lambda, witness) = lambda_one_sided(field, kernel, PatchIter::AllSubsets)?;
            Ok(LambdaCertificate {
                lambda_star: lambda.max(0.0),
                witness_diff: witness,
                family: family.describe(),
            })
        }
    }
}

fn lambda_full(field: &BinaryField, kernel: &KernelTable) -> Result<LambdaCertificate> {
    let grid = field.grid().clone();
    let omega: Vec<usize> = grid.omega_cells().to_vec();
    let m = omega.len();
    if m > FULL_ENUMERATION_BOUND {
        return Err(Error::EnumerationTooLarge { omega: m, bound: FULL_ENUMERATION_BOUND });
    }
    let region: Vec<bool> = grid.omega_mask().to_vec();
    let hn = grid.h().powi(grid.dim() as i32);
    let base = perimeter_symmetric(field, kernel, &region, &omega);
    let total: usize = 1usize << m;
    // diff-mask 0 is the field itself; competitors are 1..2^m
    let best = exec::max_indexed(total - 1, |c| {
        let diff = (c + 1) as u32;
        let mut competitor = field.clone();
        for (k, &cell) in omega.iter().enumerate() {
            if (diff >> k) & 1 == 1 {
                competitor = competitor.with_flipped(cell);
            }
        }
        let per = perimeter_symmetric(&competitor, kernel, &region, &omega);
        let vol = diff.count_ones() as f64 * hn;
        let ratio = (base - per) / vol;
        (ratio_key(ratio), std::cmp::Reverse(diff))
    })
    .expect("nonempty family");
    let diff = best.1 .0;
    let lambda = key_ratio(best.0);
    let witness_diff = omega
        .iter()
        .enumerate()
        .filter_map(|(k, &cell)| ((diff >> k) & 1 == 1).then_some(cell))
        .collect();
    Ok(LambdaCertificate {
        lambda_star: lambda.max(0.0),
        witness_diff,
        family: Family::Full.describe(),
    })
}

// order-preserving f64 <-> u64 keys so max-reduction stays deterministic
fn ratio_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 0 {
        b | (1 << 63)
    } else {
        !b
    }
}

fn key_ratio(k: u64) -> f64 {
    let b = if k >> 63 == 1 { k & !(1 << 63) } else { !k };
    f64::from_bits(b)
}

enum PatchIter {
    Connected(usize),
    AllSubsets,
}

/// One-sided certificate: max over perturbation sets A of the super-solution
/// ratio (A in the exterior phase) and sub-solution ratio (A in the interior
/// phase), both computed through the definitional interaction sums.
fn lambda_one_sided(
    field: &BinaryField,
    kernel: &KernelTable,
    iter: PatchIter,
) -> Result<(f64, Vec<usize>)> {
    let grid = field.grid().clone();
    let inside_cells: Vec<usize> = grid
        .omega_cells()
        .iter()
        .copied()
        .filter(|&c| field.is_inside(c))
        .collect();
    let outside_cells: Vec<usize> = grid
        .omega_cells()
        .iter()
        .copied()
        .filter(|&c| !field.is_inside(c))
        .collect();
    let patches_super = patches_for(&grid, &outside_cells, &iter)?;
    let patches_sub = patches_for(&grid, &inside_cells, &iter)?;

    let mut best = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for (patches, is_super) in [(patches_super, true), (patches_sub, false)] {
        let n = patches.len();
        let results = exec::map_indexed(n, |k| {
            one_sided_ratio(field, kernel, &patches[k], is_super).map(ratio_key)
        });
        for (k, r) in results.into_iter().enumerate() {
            let ratio = key_ratio(r?);
            if ratio > best {
                best = ratio;
                witness = patches[k].clone();
            }
        }
    }
    Ok((best, witness))
}

/// Super: (L(A,E) - L(A, E^c∖A)) / |A|; sub: (L(A,E^c) - L(A, E∖A)) / |A|.
fn one_sided_ratio(
    field: &BinaryField,
    kernel: &KernelTable,
    patch: &[usize],
    is_super: bool,
) -> Result<f64> {
    let grid = field.grid();
    let hn = grid.h().powi(grid.dim() as i32);
    let mut mask = vec![false; grid.cell_count()];
    for &c in patch {
        mask[c] = true;
    }
    let a = CellSet::new(grid, mask.clone(), None);
    let vol = patch.len() as f64 * hn;
    let ratio = if is_super {
        let e = phase_set(field, true, None);
        let ec_minus_a = phase_set(field, false, None).without(grid, &mask);
        (interaction(grid, kernel, &a, &e)? - interaction(grid, kernel, &a, &ec_minus_a)?) / vol
    } else {
        let ec = phase_set(field, false, None);
        let e_minus_a = phase_set(field, true, None).without(grid, &mask);
        (interaction(grid, kernel, &a, &ec)? - interaction(grid, kernel, &a, &e_minus_a)?) / vol
    };
    Ok(ratio)
}

fn patches_for(
    grid: &crate::grid::GridDomain,
    allowed: &[usize],
    iter: &PatchIter,
) -> Result<Vec<Vec<usize>>> {
    match iter {
        PatchIter::Connected(k) => Ok(enumerate_connected_patches(grid, allowed, *k)),
        PatchIter::AllSubsets => {
            if allowed.len() > FULL_ENUMERATION_BOUND {
                return Err(Error::EnumerationTooLarge {
                    omega: allowed.len(),
                    bound: FULL_ENUMERATION_BOUND,
                });
            }
            let mut out = Vec::new();
            for mask in 1u32..(1u32 << allowed.len()) {
                out.push(
                    allowed
                        .iter()
                        .enumerate()
                        .filter_map(|(k, &c)| ((mask >> k) & 1 == 1).then_some(c))
                        .collect(),
                );
            }
            Ok(out)
        }
    }
}

/// Enumerate connected subsets (face adjacency) of the allowed cells, sizes
/// 1..=k, each exactly once, in deterministic order.
pub fn enumerate_connected_patches(
    grid: &crate::grid::GridDomain,
    allowed: &[usize],
    k: usize,
) -> Vec<Vec<usize>> {
    let mut allowed_mask = vec![false; grid.cell_count()];
    for &c in allowed {
        allowed_mask[c] = true;
    }
    let n = grid.dim();
    let mut face_offsets: Vec<[i32; 3]> = Vec::new();
    for a in 0..n {
        for sgn in [-1i32, 1] {
            let mut o = [0i32; 3];
            o[a] = sgn;
            face_offsets.push(o);
        }
    }
    let mut out = Vec::new();
    let mut forbidden = vec![false; grid.cell_count()];
    for &start in allowed {
        // grow connected sets containing `start`, avoiding forbidden roots
        let mut current = vec![start];
        let mut frontier: Vec<usize> = neighbor_cells(grid, start, &face_offsets)
            .into_iter()
            .filter(|&c| allowed_mask[c] && !forbidden[c])
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        grow(
            grid,
            &allowed_mask,
            &forbidden,
            &face_offsets,
            k,
            &mut current,
            &frontier,
            &mut out,
        );
        forbidden[start] = true;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn grow(
    grid: &crate::grid::GridDomain,
    allowed: &[bool],
    forbidden: &[bool],
    face_offsets: &[[i32; 3]],
    k: usize,
    current: &mut Vec<usize>,
    frontier: &[usize],
    out: &mut Vec<Vec<usize>>,
) {
    let mut sorted = current.clone();
    sorted.sort_unstable();
    out.push(sorted);
    if current.len() == k {
        return;
    }
    // branch on each frontier cell; cells earlier in the frontier are
    // excluded from later branches so each set is produced once
    for (idx, &cand) in frontier.iter().enumerate() {
        current.push(cand);
        let mut next: Vec<usize> = frontier[idx + 1..].to_vec();
        for nb in neighbor_cells(grid, cand, face_offsets) {
            if allowed[nb]
                && !forbidden[nb]
                && !current.contains(&nb)
                && !frontier[..=idx].contains(&nb)
                && !next.contains(&nb)
            {
                next.push(nb);
            }
        }
        grow(grid, allowed, forbidden, face_offsets, k, current, &next, out);
        current.pop();
    }
}

fn neighbor_cells(
    grid: &crate::grid::GridDomain,
    cell: usize,
    face_offsets: &[[i32; 3]],
) -> Vec<usize> {
    face_offsets
        .iter()
        .filter_map(|&o| grid.offset(cell, o))
        .collect()
}

/// Report of both one-sided inequalities over a patch family at level Λ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubSuperReport {
    pub lambda: f64,
    pub family: String,
    pub patches_checked_super: usize,
    pub patches_checked_sub: usize,
    /// min over A of Λ|A| - (L(A,E) - L(A,E^c∖A)); negative means violated.
    pub worst_super_margin: f64,
    pub worst_super_patch: Vec<usize>,
    /// min over A of (L(A,E∖A) - L(A,E^c)) + Λ|A|; negative means violated.
    pub worst_sub_margin: f64,
    pub worst_sub_patch: Vec<usize>,
    pub violations_super: usize,
    pub violations_sub: usize,
}

/// Evaluate the super-solution inequality on exterior-phase patches and the
/// sub-solution inequality on interior-phase patches, reporting worst
/// margins.
pub fn subsupersolution_check(
    field: &BinaryField,
    kernel: &KernelTable,
    lambda: f64,
    family: Family,
) -> Result<SubSuperReport> {
    let grid = field.grid().clone();
    let hn = grid.h().powi(grid.dim() as i32);
    let iter = match family {
        Family::Patches { max_size } => PatchIter::Connected(max_size),
        Family::FullSubsets | Family::Full => PatchIter::AllSubsets,
    };
    let inside_cells: Vec<usize> = grid
        .omega_cells()
        .iter()
        .copied()
        .filter(|&c| field.is_inside(c))
        .collect();
    let outside_cells: Vec<usize> = grid
        .omega_cells()
        .iter()
        .copied()
        .filter(|&c| !field.is_inside(c))
        .collect();
    let patches_super = patches_for(&grid, &outside_cells, &iter)?;
    let patches_sub = patches_for(&grid, &inside_cells, &iter)?;

    let eval = |patches: &[Vec<usize>], is_super: bool| -> Result<(f64, Vec<usize>, usize)> {
        let ratios = exec::map_indexed(patches.len(), |k| {
            one_sided_ratio(field, kernel, &patches[k], is_super).map(ratio_key)
        });
        let mut worst = f64::INFINITY;
        let mut worst_patch = Vec::new();
        let mut violations = 0;
        for (k, r) in ratios.into_iter().enumerate() {
            let ratio = key_ratio(r?);
            let vol = patches[k].len() as f64 * hn;
            // margin = Λ|A| - expr for super; (expr') + Λ|A| for sub; both
            // reduce to (Λ - ratio)·|A| with the corresponding ratio sign
            let margin = (lambda - ratio) * vol;
            if margin < worst {
                worst = margin;
                worst_patch = patches[k].clone();
            }
            if margin < 0.0 {
                violations += 1;
            }
        }
        Ok((worst, worst_patch, violations))
    };

    let (worst_super_margin, worst_super_patch, violations_super) =
        eval(&patches_super, true)?;
    let (worst_sub_margin, worst_sub_patch, violations_sub) = eval(&patches_sub, false)?;
    Ok(SubSuperReport {
        lambda,
        family: family.describe(),
        patches_checked_super: patches_super.len(),
        patches_checked_sub: patches_sub.len(),
        worst_super_margin,
        worst_super_patch,
        worst_sub_margin,
        worst_sub_patch,
        violations_super,
        violations_sub,
    })
}

/// The one-sided lambda threshold (max ratio over a family), used by the
/// equivalence tests against full competitor enumeration.
pub fn lambda_from_one_sided(
    field: &BinaryField,
    kernel: &KernelTable,
    family: Family,
) -> Result<f64> {
    let iter = match family {
        Family::Patches { max_size } => PatchIter::Connected(max_size),
        _ => PatchIter::AllSubsets,
    };
    let (lambda, _) = lambda_one_sided(field, kernel, iter)?;
    Ok(lambda.max(0.0))
}
