//! Provenance headers and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use viscowave_core::config::ModelSpec;
use viscowave_core::Error;

use crate::{Cli, Command};

/// `# ` comment lines: tool version, the command line, and the model echo.
pub fn provenance(cli: &Cli) -> Vec<String> {
    let mut lines = vec![format!("viscowave {}", env!("CARGO_PKG_VERSION"))];
    let args: Vec<String> = std::env::args().skip(1).collect();
    lines.push(format!("command: {}", args.join(" ")));
    let model = match &cli.command {
        Command::Curves(a) => Some(&a.model),
        Command::Creep(a) => Some(&a.model),
        Command::Classify(a) => a.model.as_ref(),
        Command::Green(a) => Some(&a.model),
        Command::FitExponent(a) => Some(&a.model),
    };
    if let Some(spec) = model.and_then(|p| ModelSpec::load(p).ok()) {
        lines.push(format!("model: {}", spec.to_json()));
    }
    lines
}

/// Writes `bytes` to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

#[derive(Serialize)]
struct Sidecar<'a, R: Serialize> {
    provenance: &'a [String],
    report: &'a R,
}

/// Metadata twin of an output file: provenance plus the run's report.
pub fn write_sidecar<R: Serialize>(path: &Path, provenance: &[String], report: &R) -> Result<(), Error> {
    let body = serde_json::to_string_pretty(&Sidecar { provenance, report })
        .map_err(|e| Error::Input(format!("cannot serialise report: {e}")))?;
    write_atomic(&sidecar_path(path), (body + "\n").as_bytes())
}
