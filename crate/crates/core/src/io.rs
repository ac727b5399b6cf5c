//! File formats: plain-text PGM masks, run-length JSON masks, grid headers,
//! problem instances, and run manifests with content hashes.
//!
//! All writers are byte-deterministic: identical inputs produce identical
//! files.

use crate::energy::HField;
use crate::error::{Error, Result};
use crate::field::{BinaryField, FarField};
use crate::grid::{GridDomain, OmegaSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// P2 PGM with values 0/1 (row-major, first grid axis fastest).
pub fn write_pgm(path: &Path, grid: &GridDomain, mask: &[bool]) -> Result<()> {
    let ext = grid.extents();
    let mut out = String::new();
    out.push_str("P2\n");
    out.push_str(&format!("{} {}\n1\n", ext[0], ext[1] * ext[2]));
    for row in 0..ext[1] * ext[2] {
        let mut line = String::with_capacity(2 * ext[0]);
        for x in 0..ext[0] {
            if x > 0 {
                line.push(' ');
            }
            line.push(if mask[x + ext[0] * row] { '1' } else { '0' });
        }
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| l.split_whitespace());
    let magic = tokens.next().ok_or_else(|| Error::Invalid("empty PGM".into()))?;
    if magic != "P2" {
        return Err(Error::Invalid(format!("expected P2 PGM, got {magic}")));
    }
    let mut next_num = || -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Invalid("truncated PGM".into()))?
            .parse()
            .map_err(|e| Error::Invalid(format!("bad PGM number: {e}")))
    };
    let w = next_num()?;
    let h = next_num()?;
    let _maxval = next_num()?;
    let mut mask = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        mask.push(next_num()? != 0);
    }
    Ok((w, h, mask))
}

/// Run-length encoding of a mask (lengths of alternating runs, starting
/// with `false`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RleMask {
    pub len: usize,
    pub runs: Vec<usize>,
}

impl RleMask {
    pub fn encode(mask: &[bool]) -> Self {
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0usize;
        for &b in mask {
            if b == current {
                count += 1;
            } else {
                runs.push(count);
                current = b;
                count = 1;
            }
        }
        runs.push(count);
        Self { len: mask.len(), runs }
    }

    pub fn decode(&self) -> Result<Vec<bool>> {
        let mut mask = Vec::with_capacity(self.len);
        let mut value = false;
        for &r in &self.runs {
            for _ in 0..r {
                mask.push(value);
            }
            value = !value;
        }
        if mask.len() != self.len {
            return Err(Error::Invalid(format!(
                "run lengths sum to {}, expected {}",
                mask.len(),
                self.len
            )));
        }
        Ok(mask)
    }
}

/// Grid metadata header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridHeader {
    pub n: usize,
    pub h: f64,
    pub extents: Vec<usize>,
    pub origin: Vec<f64>,
    pub s: f64,
    pub omega: RleMask,
    pub far_field: FarField,
}

/// A full problem instance: grid, datum phases, and the curvature field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub grid: GridHeader,
    pub datum: RleMask,
    pub h_field: HField,
    /// Kernel parameters the instance was designed for.
    pub r_cut: f64,
    pub near_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry_axis: Option<usize>,
}

impl InstanceFile {
    pub fn from_parts(
        field: &BinaryField,
        h_field: &HField,
        r_cut: f64,
        near_tol: f64,
        symmetry_axis: Option<usize>,
    ) -> Self {
        let grid = field.grid();
        let n = grid.dim();
        Self {
            grid: GridHeader {
                n,
                h: grid.h(),
                extents: grid.extents()[..n].to_vec(),
                origin: grid.origin()[..n].to_vec(),
                s: grid.s(),
                omega: RleMask::encode(grid.omega_mask()),
                far_field: field.far_field().clone(),
            },
            datum: RleMask::encode(field.phase()),
            h_field: h_field.clone(),
            r_cut,
            near_tol,
            symmetry_axis,
        }
    }

    pub fn build(&self) -> Result<(Arc<GridDomain>, BinaryField, HField)> {
        let omega = self.grid.omega.decode()?;
        let grid = Arc::new(GridDomain::build(
            self.grid.n,
            self.grid.h,
            &self.grid.extents,
            &self.grid.origin,
            OmegaSpec::Mask(omega),
            self.grid.s,
        )?);
        let phase = self.datum.decode()?;
        let field = BinaryField::new(grid.clone(), phase, self.grid.far_field.clone())?;
        self.h_field.validate(&grid)?;
        Ok((grid, field, self.h_field.clone()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Serialize to pretty JSON with a trailing newline (deterministic bytes).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// CSV writer with fixed float formatting (shortest round-trip repr).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Manifest of a run: input and output file hashes, sorted by path.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq, Eq)]
pub struct Manifest {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(key_of(path), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs
            .insert(key_of(path), sha256_file(path)?);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

fn key_of(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rle_round_trip() {
        let mask = vec![false, false, true, true, true, false, true];
        let rle = RleMask::encode(&mask);
        assert_eq!(rle.decode().unwrap(), mask);
        let all_true = vec![true; 5];
        assert_eq!(RleMask::encode(&all_true).decode().unwrap(), all_true);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = std::env::temp_dir().join("fraclab_pgm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let grid = GridDomain::build(
            2,
            0.25,
            &[6, 4],
            &[0.0, 0.0],
            OmegaSpec::CenteredBox { size: [2, 2, 1] },
            0.5,
        )
        .unwrap();
        let mask: Vec<bool> = (0..24).map(|i| i % 3 == 0).collect();
        let path = dir.join("m.pgm");
        write_pgm(&path, &grid, &mask).unwrap();
        let (w, h, back) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (6, 4));
        assert_eq!(back, mask);
    }
}
