//! Config-file loading, flag/file precedence, and run-metadata sidecars.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dicke_rbm_core::jsonfmt::to_writer_sci;
use dicke_rbm_core::{Error, Result};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Load a JSON config file into a command's parameter set; a missing flag
/// leaves the corresponding field `None`, to be filled by the caller's
/// defaults.
pub fn load<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// A parameter that must come from either a flag or the config file.
pub fn require<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| {
        Error::Domain(format!(
            "missing required parameter `{name}` (pass --{} or set it in --config)",
            name.replace('_', "-")
        ))
    })
}

/// Keep an explicit seed, otherwise draw a fresh one from the OS. The
/// caller records the returned seed in the run metadata either way.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| OsRng.next_u64())
}

/// Sidecar path for an artifact: `samples.txt` → `samples.txt.meta.json`.
pub fn metadata_path(artifact: &Path) -> PathBuf {
    let mut os = artifact.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

#[derive(Serialize)]
struct RunMetadata<'a, P: Serialize> {
    command: &'static str,
    version: &'static str,
    /// RNG seed behind the artifact; absent for deterministic commands.
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    wall_time_seconds: f64,
    /// Fully resolved parameters; replaying them reproduces the artifact.
    parameters: &'a P,
}

/// Write the `<artifact>.meta.json` sidecar describing a finished run.
pub fn write_metadata<P: Serialize>(
    artifact: &Path,
    command: &'static str,
    seed: Option<u64>,
    started: Instant,
    parameters: &P,
) -> Result<()> {
    let meta = RunMetadata {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        parameters,
    };
    let w = BufWriter::new(File::create(metadata_path(artifact))?);
    to_writer_sci(w, &meta)
}
