use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Directory receiving `--emit` files.
pub const OUT_DIR_ENV: &str = "BOHR_OUT_DIR";
/// Bumped whenever a CSV column set changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;
const INLINE: &str = "<inline>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    /// Arguments after the program name; `bohr replay` runs them again.
    pub command: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub grid: Option<Vec<usize>>,
    /// File names relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

pub struct Emitter {
    argv: Vec<String>,
    emit: Option<String>,
    dir: PathBuf,
    inputs: Vec<FileDigest>,
    seed: Option<u64>,
    grid: Option<Vec<usize>>,
    outputs: Vec<FileDigest>,
}

impl Emitter {
    pub fn new(argv: Vec<String>, emit: Option<String>) -> Result<Self, CliError> {
        if let Some(name) = &emit {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(CliError::Malformed(format!("--emit takes a bare file name, got {name:?}")));
            }
        }
        let dir = out_dir();
        if emit.is_some() {
            fs::create_dir_all(&dir)?;
        }
        Ok(Emitter { argv, emit, dir, inputs: Vec::new(), seed: None, grid: None, outputs: Vec::new() })
    }

    /// Reads a JSON argument: inline when it starts with `{` or `[`, a file
    /// path otherwise. Either way its hash goes into the manifest.
    pub fn input(&mut self, arg: &str) -> Result<String, CliError> {
        let trimmed = arg.trim_start();
        let (path, text) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
            (INLINE.to_string(), arg.to_string())
        } else {
            let text = fs::read_to_string(arg).map_err(|e| CliError::Malformed(format!("{arg}: {e}")))?;
            (arg.to_string(), text)
        };
        self.inputs.push(FileDigest { path, sha256: sha256_hex(text.as_bytes()) });
        Ok(text)
    }

    pub fn parse<T: serde::de::DeserializeOwned>(&mut self, arg: &str) -> Result<T, CliError> {
        let text = self.input(arg)?;
        serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("{arg}: {e}")))
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn grid(&mut self, grid: &[usize]) {
        self.grid = Some(grid.to_vec());
    }

    fn write(&mut self, name: String, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(&name), bytes)?;
        self.outputs.push(FileDigest { path: name, sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Pretty JSON on stdout, and NAME.json with `--emit`.
    pub fn report<T: Serialize>(&mut self, report: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        std::io::stdout().write_all(text.as_bytes())?;
        if let Some(name) = self.emit.clone() {
            self.write(format!("{name}.json"), text.as_bytes())?;
        }
        Ok(())
    }

    /// NAME.csv with `--emit`; the first line is `# bohr <schema> csv v1`.
    pub fn table<I>(&mut self, schema: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let Some(name) = self.emit.clone() else { return Ok(()) };
        let mut buf = format!("# bohr {schema} csv v{CSV_SCHEMA_VERSION}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        self.write(format!("{name}.csv"), &buf)
    }

    pub fn finish(self) -> Result<(), CliError> {
        let Some(name) = &self.emit else { return Ok(()) };
        let manifest = ExperimentManifest {
            command: self.argv.iter().skip(1).cloned().collect(),
            inputs: self.inputs.clone(),
            seed: self.seed,
            grid: self.grid.clone(),
            outputs: self.outputs.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join(format!("{name}.manifest.json")), text)?;
        Ok(())
    }
}

fn check_digest(path: &Path, expected: &FileDigest) -> Result<(), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    if sha256_hex(&bytes) != expected.sha256 {
        return Err(CliError::Failed(format!("{} differs from the manifest", path.display())));
    }
    Ok(())
}

/// Checks the recorded inputs, re-runs the command and compares every output
/// hash; any difference is a verification failure.
pub fn replay(manifest_path: &str) -> Result<(), CliError> {
    let text = fs::read_to_string(manifest_path).map_err(|e| CliError::Malformed(format!("{manifest_path}: {e}")))?;
    let manifest: ExperimentManifest = serde_json::from_str(&text)?;
    if manifest.command.first().map(String::as_str) == Some("replay") {
        return Err(CliError::Malformed("a manifest cannot record a replay".into()));
    }
    for input in manifest.inputs.iter().filter(|i| i.path != INLINE) {
        check_digest(Path::new(&input.path), input)?;
    }
    let mut argv = vec!["bohr".to_string()];
    argv.extend(manifest.command.iter().cloned());
    crate::run(argv)?;
    let dir = out_dir();
    for output in &manifest.outputs {
        check_digest(&dir.join(&output.path), output)?;
    }
    Ok(())
}
