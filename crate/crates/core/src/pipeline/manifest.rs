//! Run manifests: what was read, what was written, with which settings.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::emoji::UNICODE_VERSION;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// Reader that hashes every byte passing through it.
pub struct DigestReader<R> {
    inner: R,
    hasher: Sha256,
    bytes: u64,
    path: PathBuf,
}

impl DigestReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(BufReader::new(file), path))
    }
}

impl<R: Read> DigestReader<R> {
    pub fn new(inner: R, path: impl Into<PathBuf>) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
            bytes: 0,
            path: path.into(),
        }
    }

    /// Read whatever the consumer left unread, then return the digest.
    pub fn finish(mut self) -> Result<FileDigest> {
        io::copy(&mut self, &mut io::sink()).map_err(|e| Error::io(&self.path, e))?;
        Ok(FileDigest {
            sha256: hex::encode(self.hasher.finalize()),
            bytes: self.bytes,
            path: self.path,
        })
    }
}

impl<R: Read> Read for DigestReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }
}

impl<R: io::BufRead> io::BufRead for DigestReader<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        if let Ok(buf) = self.inner.fill_buf() {
            let n = amt.min(buf.len());
            self.hasher.update(&buf[..n]);
            self.bytes += n as u64;
        }
        self.inner.consume(amt);
    }
}

pub fn digest_bytes(path: impl Into<PathBuf>, bytes: &[u8]) -> FileDigest {
    FileDigest {
        path: path.into(),
        sha256: hex::encode(Sha256::digest(bytes)),
        bytes: bytes.len() as u64,
    }
}

pub fn digest_file(path: impl AsRef<Path>) -> Result<FileDigest> {
    DigestReader::open(path)?.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub unicode_version: String,
    pub stage: String,
    pub command_line: Vec<String>,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Collects inputs, outputs and step timings while a stage runs.
pub struct ManifestBuilder {
    stage: String,
    started_at: DateTime<Utc>,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
    timings: BTreeMap<String, f64>,
    clock: Instant,
}

impl ManifestBuilder {
    pub fn new(stage: &str) -> Self {
        Self {
            stage: stage.to_string(),
            started_at: Utc::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
            clock: Instant::now(),
        }
    }

    pub fn input(&mut self, d: FileDigest) {
        if !self.inputs.contains(&d) {
            self.inputs.push(d);
        }
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Record the time since the previous mark under `step`.
    pub fn mark(&mut self, step: &str) {
        let now = Instant::now();
        let ms = now.duration_since(self.clock).as_secs_f64() * 1e3;
        *self.timings.entry(step.to_string()).or_default() += ms;
        self.clock = now;
    }

    /// Hash the outputs and write `manifest.json` into `dir`.
    pub fn write(self, dir: &Path, command_line: &[String], seed: u64, config: serde_json::Value) -> Result<RunManifest> {
        let outputs = self
            .outputs
            .iter()
            .map(digest_file)
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            unicode_version: UNICODE_VERSION.into(),
            stage: self.stage,
            command_line: command_line.to_vec(),
            seed,
            config,
            inputs: self.inputs,
            outputs,
            started_at: self.started_at.to_rfc3339_opts(SecondsFormat::Millis, true),
            timings_ms: self.timings,
        };
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufRead;

    #[test]
    fn digest_reader_hashes_everything_read() {
        let data = b"line one\nline two\n";
        let mut r = DigestReader::new(&data[..], "mem");
        let mut first = String::new();
        r.read_line(&mut first).unwrap();
        let d = r.finish().unwrap();
        assert_eq!(d.bytes, data.len() as u64);
        assert_eq!(d.sha256, digest_bytes("mem", data).sha256);
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            digest_bytes("x", b"abc").sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
