//! File formats: CSV tables with an optional manifest line, and raw
//! matrix dumps with a JSON sidecar.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::HermitianBlockMatrix;
use crate::error::{Error, Result};
use crate::spectral::{supnorms, Spectrum};

/// Renders a CSV document. A manifest hash, when given, is written as a
/// leading `# manifest=<hash>` comment line.
pub fn csv_string<R: AsRef<[f64]>>(manifest: Option<&str>, header: &str, rows: &[R]) -> String {
    let mut out = String::new();
    if let Some(h) = manifest {
        writeln!(out, "# manifest={h}").unwrap();
    }
    writeln!(out, "{header}").unwrap();
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

pub fn write_csv<R: AsRef<[f64]>>(path: &Path, manifest: Option<&str>, header: &str, rows: &[R]) -> Result<()> {
    fs::write(path, csv_string(manifest, header, rows))?;
    Ok(())
}

/// Rows `index, eigenvalue`.
pub fn spectrum_rows(spec: &Spectrum) -> Vec<[f64; 2]> {
    spec.eigenvalues.iter().enumerate().map(|(i, &l)| [i as f64, l]).collect()
}

/// Rows `index, eigenvalue, supnorm2`.
pub fn supnorm_rows(spec: &Spectrum) -> Result<Vec<[f64; 3]>> {
    let s = supnorms(spec)?;
    Ok(spec.eigenvalues.iter().zip(&s).enumerate().map(|(i, (&l, &n))| [i as f64, l, n]).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub dimension: usize,
    pub seed: u64,
    pub config_hash: String,
    pub format: String,
}

const MATRIX_FORMAT: &str = "column-major complex128 little-endian (re, im)";

/// Writes the full `2N × 2N` matrix to `path` and its sidecar to
/// `path.json`.
pub fn write_matrix(path: &Path, h: &HermitianBlockMatrix) -> Result<MatrixSidecar> {
    let dim = h.dim();
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for j in 0..dim {
        for i in 0..dim {
            let z = h.get(i, j);
            f.write_all(&z.re.to_le_bytes())?;
            f.write_all(&z.im.to_le_bytes())?;
        }
    }
    f.flush()?;
    let sidecar = MatrixSidecar {
        dimension: dim,
        seed: h.provenance.seed,
        config_hash: h.provenance.config_hash.clone(),
        format: MATRIX_FORMAT.into(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix(path: &Path) -> Result<(Mat<Complex64>, MatrixSidecar)> {
    let sidecar: MatrixSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    let dim = sidecar.dimension;
    if bytes.len() != dim * dim * 16 {
        return Err(Error::Mismatch(format!("matrix file has {} bytes, expected {}", bytes.len(), dim * dim * 16)));
    }
    let val = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let m = Mat::from_fn(dim, dim, |i, j| {
        let k = 2 * (j * dim + i);
        Complex64::new(val(k), val(k + 1))
    });
    Ok((m, sidecar))
}
