//! Run artifacts: a manifest, dataset tables and a report, written to a
//! temporary sibling directory and renamed into place once complete.
//!
//! ```text
//! <out>/manifest.toml          resolved config with hash/version header
//! <out>/datasets/<name>.csv    per-point tables (+ <name>.shots.csv)
//! <out>/tables/<name>.csv      plot-ready analysis tables
//! <out>/report.txt
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use magnonlab::SweepDataset;
use sha2::{Digest, Sha256};

use crate::config::{self, ExperimentConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.toml";

/// SHA-256 over the version and the resolved config. The output directory
/// and creation time are left out, so the same experiment hashes the same
/// wherever and whenever it runs.
pub fn manifest_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.experiment.output = None;
    let mut h = Sha256::new();
    h.update(format!("magnonlab {VERSION}\n").as_bytes());
    h.update(c.to_toml().as_bytes());
    hex::encode(h.finalize())
}

/// Manifest text: a commented header followed by the resolved config, so a
/// manifest is itself a runnable config.
pub fn manifest_text(cfg: &ExperimentConfig, hash: &str) -> String {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!(
        "# magnonlab manifest\n# version: {VERSION}\n# manifest_hash: {hash}\n# created_unix: {created}\n{}",
        cfg.to_toml()
    )
}

/// Directory being filled; removed on drop unless committed.
pub struct ArtifactWriter {
    tmp: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl ArtifactWriter {
    pub fn create(target: &Path) -> anyhow::Result<Self> {
        let name = target
            .file_name()
            .with_context(|| format!("output path {} has no final component", target.display()))?
            .to_string_lossy()
            .into_owned();
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let tmp = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(tmp.join("datasets"))?;
        fs::create_dir_all(tmp.join("tables"))?;
        Ok(Self {
            tmp,
            target: target.to_path_buf(),
            committed: false,
        })
    }

    pub fn write(&self, rel: &str, contents: &str) -> anyhow::Result<()> {
        let p = self.tmp.join(rel);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
    }

    /// Moves the finished directory into place. An existing artifact is
    /// replaced only with `force`.
    pub fn commit(mut self, force: bool) -> anyhow::Result<PathBuf> {
        if self.target.exists() {
            if !force {
                bail!("{} already exists (use --force to replace it)", self.target.display());
            }
            let old = self.tmp.with_extension("old");
            fs::rename(&self.target, &old)?;
            fs::rename(&self.tmp, &self.target)?;
            fs::remove_dir_all(&old)?;
        } else {
            fs::rename(&self.tmp, &self.target)?;
        }
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for ArtifactWriter {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

/// Writes one file through a temporary sibling and a rename.
pub fn write_file_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let name = path.file_name().context("output file has no name")?.to_string_lossy().into_owned();
    let tmp = path.with_file_name(format!(".{name}.partial-{}", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// A committed artifact read back from disk.
pub struct LoadedArtifact {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub hash: String,
}

impl LoadedArtifact {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(CliError::Runtime)?;
        let recorded = text
            .lines()
            .find_map(|l| l.strip_prefix("# manifest_hash:"))
            .map(|h| h.trim().to_string())
            .ok_or_else(|| CliError::Validation(format!("{}: no manifest_hash header", path.display())))?;
        let config = config::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let hash = manifest_hash(&config);
        if hash != recorded {
            return Err(CliError::Validation(format!(
                "{}: recorded hash {recorded} does not match the manifest contents ({hash})",
                path.display()
            )));
        }
        Ok(Self { dir: dir.to_path_buf(), config, hash })
    }

    /// Dataset `name`, with its shot table when one was written.
    pub fn dataset(&self, name: &str) -> Result<SweepDataset, CliError> {
        let path = self.dir.join("datasets").join(format!("{name}.csv"));
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(CliError::Runtime)?;
        let (mut ds, hash) =
            SweepDataset::from_csv(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if hash != self.hash {
            return Err(CliError::Validation(format!(
                "{}: dataset hash {hash} does not match manifest {}",
                path.display(),
                self.hash
            )));
        }
        let shots = self.dir.join("datasets").join(format!("{name}.shots.csv"));
        if shots.exists() {
            let text = fs::read_to_string(&shots).map_err(|e| CliError::Runtime(e.into()))?;
            ds.attach_shots_csv(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", shots.display())))?;
        }
        Ok(ds)
    }
}
