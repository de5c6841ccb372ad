//! Text formats, CSV tables, run manifests and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::blocks::OmegaField;
use crate::error::{Error, Result};
use crate::lattice::{DiscreteLoop, Orientation, Region, Vertex};
use crate::sampler::{LoopSoup, Provenance};

pub const FORMAT_VERSION: &str = "1";

/// Writes `bytes` to a temp file next to `path`, then renames it in place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One loop per line: `root_x root_y : dx dy dx dy ...`, after a `#` header.
pub fn soup_to_text(soup: &LoopSoup) -> String {
    let mut out = format!(
        "# loopsoup v{FORMAT_VERSION} region={} alpha={} seed={} stream={} provenance={} loops={}\n",
        soup.region.content_hash(),
        soup.alpha,
        soup.seed,
        soup.stream,
        soup.provenance.as_str(),
        soup.loops.len()
    );
    for l in &soup.loops {
        let r = l.root();
        write!(out, "{} {} :", r.x, r.y).unwrap();
        for (dx, dy) in l.steps() {
            write!(out, " {dx} {dy}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn header_field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    header
        .split_whitespace()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Parse(format!("soup header lacks {key}=")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

/// Parses [`soup_to_text`] output. The region must match the header hash.
pub fn soup_from_text(text: &str, region: Arc<Region>) -> Result<LoopSoup> {
    let mut lines = text.lines();
    let header = lines.next().filter(|h| h.starts_with("# loopsoup")).ok_or_else(|| Error::Parse("missing soup header".into()))?;
    let hash = header_field(header, "region")?;
    if hash != region.content_hash() {
        return Err(Error::Parse(format!("region hash {hash} does not match {}", region.content_hash())));
    }
    let provenance = match header_field(header, "provenance")? {
        "pointed" => Provenance::Pointed,
        "enumeration" => Provenance::Enumeration,
        "handcrafted" => Provenance::Handcrafted,
        p => return Err(Error::Parse(format!("unknown provenance {p:?}"))),
    };
    let mut loops = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (root, steps) = line.split_once(':').ok_or_else(|| Error::Parse(format!("line {}: missing ':'", n + 2)))?;
        let r: Vec<i32> = root.split_whitespace().map(|t| parse_num(t, "root")).collect::<Result<_>>()?;
        let d: Vec<i32> = steps.split_whitespace().map(|t| parse_num(t, "step")).collect::<Result<_>>()?;
        if r.len() != 2 || !d.len().is_multiple_of(2) {
            return Err(Error::Parse(format!("line {}: malformed loop", n + 2)));
        }
        let root = Vertex::try_new(r[0], r[1])?;
        let steps: Vec<(i32, i32)> = d.chunks(2).map(|c| (c[0], c[1])).collect();
        loops.push(DiscreteLoop::from_steps(root, &steps)?);
    }
    let mut soup = LoopSoup::handcrafted(region, loops)?;
    soup.alpha = parse_num(header_field(header, "alpha")?, "alpha")?;
    soup.seed = parse_num(header_field(header, "seed")?, "seed")?;
    soup.stream = parse_num(header_field(header, "stream")?, "stream")?;
    soup.provenance = provenance;
    Ok(soup)
}

/// `H` section: rows `k = 1..=height`, columns `j = 0..width-1`.
/// `V` section: rows `k = 1..height`, columns `j = 0..width`.
pub fn omega_to_text(omega: &OmegaField) -> String {
    let g = omega.grid;
    let mut out = format!(
        "# omega N={} width={} height={} mode={} alpha={} seed={}\nH\n",
        omega.scale,
        g.width,
        g.height,
        omega.mode.as_str(),
        omega.alpha,
        omega.seed
    );
    let bit = |o: bool| if o { '1' } else { '0' };
    let row_of = |orient: Orientation, k: u32| -> String {
        let vals: Vec<String> = omega
            .edges
            .iter()
            .zip(&omega.open)
            .filter(|(e, _)| e.orientation == orient && e.k == k)
            .map(|(_, &o)| bit(o).to_string())
            .collect();
        vals.join(" ")
    };
    for k in 1..=g.height {
        out.push_str(&row_of(Orientation::Horizontal, k));
        out.push('\n');
    }
    out.push_str("V\n");
    for k in 1..g.height {
        out.push_str(&row_of(Orientation::Vertical, k));
        out.push('\n');
    }
    out
}

/// Serializes rows as CSV with a header row.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// CSV from a header and pre-rendered cells.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub subcommand: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub started_at: String,
    pub duration_s: f64,
    pub outputs: Vec<OutputRecord>,
}

impl Manifest {
    pub fn new(subcommand: &str, params: serde_json::Value, seed: u64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            params,
            seed,
            started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            duration_s: 0.0,
            outputs: Vec::new(),
        }
    }

    /// Writes an output atomically and records its hash.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(OutputRecord { path: path.to_path_buf(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// `<output>.manifest.json` beside the first output.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn finish(&mut self, elapsed: std::time::Duration, beside: &Path) -> Result<PathBuf> {
        self.duration_s = elapsed.as_secs_f64();
        let path = Self::path_for(beside);
        write_atomic(&path, &serde_json::to_vec_pretty(self)?)?;
        Ok(path)
    }
}
