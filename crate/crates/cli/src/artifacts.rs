//! Writing CSV and JSON artifacts and hashing what was written.

use std::fs;
use std::path::{Path, PathBuf};

use fracisaacs::GridFunction;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Artifact {
    /// Path relative to the output root, with `/` separators.
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// A directory that records every file written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    dir: PathBuf,
    written: Vec<Artifact>,
}

impl OutputDir {
    /// `root/sub`, created if missing. Artifact paths are reported relative to `root`.
    pub fn create(root: &Path, sub: &Path) -> CliResult<Self> {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            dir,
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.written
    }

    fn record(&mut self, file: &Path) -> CliResult<()> {
        let rel = file.strip_prefix(&self.root).unwrap_or(file);
        let path = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        self.written.push(Artifact {
            path,
            sha256: sha256_file(file)?,
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let file = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(&file, e))?;
        text.push('\n');
        fs::write(&file, text).map_err(|e| CliError::io(&file, e))?;
        self.record(&file)
    }

    /// Writes a header and rows of already formatted fields.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> CliResult<()> {
        let file = self.dir.join(name);
        let mut w = csv::Writer::from_path(&file).map_err(|e| CliError::io(&file, e))?;
        w.write_record(header).map_err(|e| CliError::io(&file, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| CliError::io(&file, e))?;
        }
        w.flush().map_err(|e| CliError::io(&file, e))?;
        drop(w);
        self.record(&file)
    }
}

/// Shortest round-trip decimal form, so equal values always print identically.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:?}")
    }
}

/// Coordinate columns for a grid function: `x` in 1D, `x, y` in 2D.
pub fn coord_header(dim: usize) -> Vec<&'static str> {
    if dim == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

pub fn coord_fields(u: &GridFunction<f64>, i: usize) -> Vec<String> {
    let g = u.geometry();
    let p = g.point(i);
    (0..g.dimension()).map(|k| num(p[k])).collect()
}

/// Reads a solution CSV written by `solve` (`x, u` or `x, y, u`) back onto
/// the grid of `template`, checking the coordinates.
pub fn read_solution(path: &Path, template: &GridFunction<f64>) -> CliResult<GridFunction<f64>> {
    let g = template.geometry();
    let dim = g.dimension();
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut values = Vec::with_capacity(g.len());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let field = |k: usize| -> CliResult<f64> {
            rec.get(k)
                .ok_or_else(|| {
                    CliError::Validation(format!("{}: row {i} has too few columns", path.display()))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Validation(format!("{}: row {i}: {e}", path.display())))
        };
        if i >= g.len() {
            return Err(CliError::Validation(format!(
                "{}: more rows than the {} grid points",
                path.display(),
                g.len()
            )));
        }
        let p = g.point(i);
        for (k, &want) in p.iter().enumerate().take(dim) {
            let x = field(k)?;
            if (x - want).abs() > 1e-9 * (1.0 + want.abs()) {
                return Err(CliError::Validation(format!(
                    "{}: row {i} coordinate {x} does not match grid value {want}",
                    path.display()
                )));
            }
        }
        values.push(field(dim)?);
    }
    if values.len() != g.len() {
        return Err(CliError::Validation(format!(
            "{}: {} rows for a grid of {} points",
            path.display(),
            values.len(),
            g.len()
        )));
    }
    Ok(GridFunction::new(g.clone(), values)?)
}
