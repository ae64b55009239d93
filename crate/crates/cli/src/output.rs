//! Output headers and writers shared by all subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL: &str = "dqd-tomo";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub parallel: bool,
}

impl Header {
    /// Hashes the canonical JSON form of the effective configuration.
    pub fn new<C: Serialize>(command: &'static str, effective: &C, seed: Option<u64>) -> Self {
        let bytes = serde_json::to_vec(effective).expect("configs serialize");
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            config_sha256: hex::encode(Sha256::digest(&bytes)),
            seed,
            parallel: dqd_tomo::par::is_parallel(),
        }
    }

    pub fn csv_comment(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# tool={} version={} command={} config_sha256={} seed={}\n",
            self.tool, self.version, self.command, self.config_sha256, seed
        )
    }
}

/// JSON document with the header as its first field.
#[derive(Serialize)]
pub struct Document<'a, T: Serialize> {
    pub header: &'a Header,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn json_string<T: Serialize>(header: &Header, body: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Document { header, body }).expect("outputs serialize");
    s.push('\n');
    s
}

pub fn csv_string(header: &Header, table: &str) -> String {
    let mut s = header.csv_comment();
    s.push_str(table);
    s
}

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Destination for command artifacts: a directory, or stdout for the
/// primary artifact when no directory is given.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
        }
        Ok(Self { dir })
    }

    /// Writes `name` into the output directory; a no-op without one.
    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        if let Some(d) = &self.dir {
            let path: PathBuf = Path::new(d).join(name);
            fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Writes the primary artifact to `name`, or prints it when there is no
    /// output directory. With a directory, `summary` goes to stdout instead.
    pub fn primary(&self, name: &str, contents: &str, summary: &str) -> Result<(), CliError> {
        if self.dir.is_some() {
            self.write(name, contents)?;
            print!("{summary}");
        } else {
            print!("{contents}");
        }
        Ok(())
    }
}
