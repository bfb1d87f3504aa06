//! Subcommands: run an experiment, write its artifacts and the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dynrmt::export;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::experiments;
use crate::manifest::{sha256_hex, RunManifest, MANIFEST_FILE};

pub const COMMANDS: [&str; 7] = ["density", "locallaw", "universality", "flow", "deloc", "spectrum", "export-matrix"];

/// Writes artifacts into one directory and records their hashes.
struct Outputs<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl Outputs<'_> {
    fn hash(&self) -> String {
        self.manifest.manifest_hash.clone()
    }

    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.manifest.artifacts.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    fn csv<R: AsRef<[f64]>>(&mut self, name: &str, header: &str, rows: &[R]) -> Result<(), CliError> {
        let text = export::csv_string(Some(&self.hash()), header, rows);
        self.bytes(name, text.as_bytes())
    }

    /// Serializes `value` with a leading `"manifest"` field.
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut doc = serde_json::Map::new();
        doc.insert("manifest".into(), json!(self.hash()));
        match serde_json::to_value(value).map_err(dynrmt::Error::from)? {
            serde_json::Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&doc).map_err(dynrmt::Error::from)? + "\n";
        self.bytes(name, text.as_bytes())
    }

    /// Registers a file written elsewhere.
    fn adopt(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = fs::read(self.dir.join(name))?;
        self.manifest.artifacts.insert(name.into(), sha256_hex(&bytes));
        Ok(())
    }
}

/// Runs `command` with `cfg`, writing artifacts and `manifest.json` to
/// `out`.
pub fn run(command: &str, cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    if !COMMANDS.contains(&command) {
        return Err(CliError::Config(format!("unknown command {command:?}")));
    }
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut o = Outputs {
        dir: out,
        manifest: RunManifest::new(command, cfg),
    };
    match command {
        "density" => density(cfg, &mut o)?,
        "locallaw" => locallaw(cfg, &mut o)?,
        "universality" => universality(cfg, &mut o)?,
        "flow" => flow(cfg, &mut o)?,
        "deloc" => deloc(cfg, &mut o)?,
        "spectrum" => spectrum(cfg, &mut o)?,
        "export-matrix" => export_matrix(cfg, &mut o)?,
        _ => unreachable!(),
    }
    o.manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    o.manifest.write(out)?;
    Ok(o.manifest)
}

fn density(cfg: &RunConfig, o: &mut Outputs) -> Result<(), CliError> {
    let d = experiments::density(cfg)?;
    o.csv("density.csv", "E,rho_limit,rho_empirical", &d.rows)?;
    o.json(
        "sce.json",
        &json!({
            "bin_width": d.bin_width,
            "eta": cfg.density.eta,
            "eigenvalue_count": d.eigenvalue_count,
            "solutions": d.sce.records(),
        }),
    )
}

fn locallaw(cfg: &RunConfig, o: &mut Outputs) -> Result<(), CliError> {
    let sizes = if cfg.locallaw.n_list.is_empty() { vec![cfg.n] } else { cfg.locallaw.n_list.clone() };
    let mut rows = Vec::new();
    for n in sizes {
        for r in experiments::locallaw(cfg, n)? {
            rows.push([r.n as f64, r.a, r.eta, r.median_error, r.max_error, r.inv_n_eta]);
        }
    }
    o.csv("locallaw.csv", "n,a,eta,median_error,max_error,inv_n_eta", &rows)
}

fn universality(cfg: &RunConfig, o: &mut Outputs) -> Result<(), CliError> {
    let u = experiments::universality(cfg)?;
    o.json("universality.json", &u)?;
    for (name, rep) in [("hx", &u.hx), ("hy", &u.hy), ("gue", &u.gue), ("poisson", &u.poisson)] {
        o.csv(&format!("spacing_{name}.csv"), "bin_lo,bin_hi,density", &rep.histogram.rows())?;
    }
    Ok(())
}

fn flow(cfg: &RunConfig, o: &mut Outputs) -> Result<(), CliError> {
    let rows = experiments::flow(cfg)?;
    let table: Vec<[f64; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.t.0,
                r.report.mean_gap_ratio,
                r.report.ks_vs_reference.unwrap_or(f64::NAN),
                r.report.mean_spacing,
                r.report.gap_count as f64,
                r.entry_second_moment,
            ]
        })
        .collect();
    o.csv("flow.csv", "t,mean_gap_ratio,ks_vs_gue,mean_spacing,gap_count,entry_second_moment", &table)
}

fn deloc(cfg: &RunConfig, o: &mut Outputs) -> Result<(), CliError> {
    let d = experiments::deloc(cfg)?;
    let rows: Vec<[f64; 4]> = d.rows.iter().map(|r| [r.n as f64, r.trial as f64, r.metric, r.control]).collect();
    o.csv("deloc.csv", "n,trial,metric,control", &rows)?;
    o.csv("supnorm.csv", "index,eigenvalue,supnorm2", &d.supnorms)
}

fn spectrum(cfg: &RunConfig, o: &mut Outputs) -> Result<(), CliError> {
    let s = dynrmt::spectral::decompose(&experiments::trial_matrix(cfg, cfg.n, 0)?, false)?;
    o.csv("spectrum.csv", "index,eigenvalue", &export::spectrum_rows(&s))
}

fn export_matrix(cfg: &RunConfig, o: &mut Outputs) -> Result<(), CliError> {
    let h = experiments::trial_matrix(cfg, cfg.n, 0)?;
    let path = o.dir.join("matrix.bin");
    export::write_matrix(&path, &h)?;
    o.adopt("matrix.bin")?;
    // Rewrite the sidecar with the manifest hash so it carries it too.
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(export::sidecar_path(&path))?).map_err(dynrmt::Error::from)?;
    o.json("matrix.bin.json", &sidecar)
}

/// Re-executes the run described by the manifest at `manifest_path` into
/// `out` (default: a `rerun` directory beside the manifest) and checks
/// every artifact hash.
pub fn rerun(manifest_path: &Path, out: Option<&Path>) -> Result<RunManifest, CliError> {
    let path = if manifest_path.is_dir() { manifest_path.join(MANIFEST_FILE) } else { manifest_path.to_path_buf() };
    let old = RunManifest::load(&path)?;
    let out: PathBuf = match out {
        Some(p) => p.to_path_buf(),
        None => path.parent().unwrap_or(Path::new(".")).join("rerun"),
    };
    let new = run(&old.command, &old.config, &out)?;
    if new.manifest_hash != old.manifest_hash {
        return Err(CliError::Irreproducible(format!("manifest hash {} != {}", new.manifest_hash, old.manifest_hash)));
    }
    if new.artifacts != old.artifacts {
        let differing: std::collections::BTreeSet<&str> = old
            .artifacts
            .keys()
            .chain(new.artifacts.keys())
            .filter(|k| old.artifacts.get(*k) != new.artifacts.get(*k))
            .map(String::as_str)
            .collect();
        let differing: Vec<&str> = differing.into_iter().collect();
        return Err(CliError::Irreproducible(format!("artifacts differ: {}", differing.join(", "))));
    }
    Ok(new)
}
