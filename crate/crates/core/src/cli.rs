//! Command-line configuration and the subcommand runner.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::blocks::{build_omega_global, hull_region, lss_dominated_p, spanning_open_path, BlockGrid, BlockSampler};
use crate::crossing::{crossing_events, BlockSpec};
use crate::error::{Error, Result};
use crate::harness::{
    bernoulli_minorant, bernoulli_threshold, convergence_diagnostic, estimate_alpha_c, iid_bond_percolation,
    interpolate_loop, minorant_from_soup, sweep_crossing_probability, truncation_experiment,
};
use crate::io::{csv_table, omega_to_text, soup_to_text, Manifest};
use crate::kernel::{build_kernel, pointed_rates, total_loop_mass};
use crate::lattice::{rect_region, IntBox, RealRect, Region};
use crate::rng::stream_id;
use crate::sampler::{filter_by_diameter, SamplerConfig, SoupSampler};

pub const USAGE: &str = "\
usage: loopsoup <subcommand> [--key value ...] [--config FILE]

subcommands:
  mass       --region rect:X0,X1,Y0,Y1 [--N 1]
  sample     --region R --alpha A [--N] [--diameter_min] [--diameter_max]
  crossing   --N (>=2) --alpha A [--samples] [--diameter_min]
  blocks     --N (>=2) --alpha A [--grid WxH] [--mode global|independent] [--samples] [--scheme lss[:D]]
  sweep      --alphas A,B,.. (--N n | --Ns n,m,..) --samples S
  alphac     --box M1,M2,.. --alphas A,B,.. --samples S
  truncate   --alpha A (>1/2) --cutoffs n1,n2,.. --box M --samples S
  bernoulli  --alpha A [--grid WxH] [--samples]
  phi        --region R --alpha A --N n

common: --seed --output --format csv|json|text --workers --max_rejections --max_steps
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subcommand {
    Mass,
    Sample,
    Crossing,
    Blocks,
    Sweep,
    Alphac,
    Truncate,
    Bernoulli,
    Phi,
}

impl Subcommand {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "mass" => Self::Mass,
            "sample" => Self::Sample,
            "crossing" => Self::Crossing,
            "blocks" => Self::Blocks,
            "sweep" => Self::Sweep,
            "alphac" => Self::Alphac,
            "truncate" => Self::Truncate,
            "bernoulli" => Self::Bernoulli,
            "phi" => Self::Phi,
            _ => return Err(Error::Usage(format!("unknown subcommand {s:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mass => "mass",
            Self::Sample => "sample",
            Self::Crossing => "crossing",
            Self::Blocks => "blocks",
            Self::Sweep => "sweep",
            Self::Alphac => "alphac",
            Self::Truncate => "truncate",
            Self::Bernoulli => "bernoulli",
            Self::Phi => "phi",
        }
    }

    /// Subcommand-specific keys, with `true` for required ones.
    fn keys(&self) -> &'static [(&'static str, bool)] {
        match self {
            Self::Mass => &[("region", true), ("N", false)],
            Self::Sample => &[("region", true), ("N", false), ("alpha", true), ("diameter_min", false), ("diameter_max", false)],
            Self::Crossing => &[("N", true), ("alpha", true), ("samples", false), ("diameter_min", false)],
            Self::Blocks => &[
                ("N", true),
                ("alpha", true),
                ("grid", false),
                ("mode", false),
                ("samples", false),
                ("scheme", false),
            ],
            Self::Sweep => &[("alphas", true), ("N", false), ("Ns", false), ("samples", true)],
            Self::Alphac => &[("box", true), ("alphas", true), ("samples", true)],
            Self::Truncate => &[("alpha", true), ("cutoffs", true), ("box", true), ("samples", true)],
            Self::Bernoulli => &[("alpha", true), ("grid", false), ("samples", false)],
            Self::Phi => &[("region", true), ("alpha", true), ("N", true)],
        }
    }
}

const COMMON_KEYS: &[&str] = &["seed", "output", "format", "workers", "max_rejections", "max_steps"];

#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Float(f64),
    Floats(Vec<f64>),
    Int(u64),
    Ints(Vec<u64>),
    Grid(u32, u32),
    Rect(RealRect),
    Text(String),
}

impl Param {
    fn to_json(&self) -> Json {
        match self {
            Param::Float(x) => json!(x),
            Param::Floats(v) => json!(v),
            Param::Int(x) => json!(x),
            Param::Ints(v) => json!(v),
            Param::Grid(w, h) => json!(format!("{w}x{h}")),
            Param::Rect(r) => json!(format!("rect:{},{},{},{}", r.x_min, r.x_max, r.y_min, r.y_max)),
            Param::Text(s) => json!(s),
        }
    }
}

fn bad(key: &str, raw: &str, why: &str) -> Error {
    Error::Usage(format!("--{key} {raw:?}: {why}"))
}

fn float(key: &str, s: &str) -> Result<f64> {
    let x: f64 = s.trim().parse().map_err(|_| bad(key, s, "not a number"))?;
    if !x.is_finite() {
        return Err(bad(key, s, "must be finite"));
    }
    Ok(x)
}

fn int(key: &str, s: &str) -> Result<u64> {
    s.trim().parse().map_err(|_| bad(key, s, "not a non-negative integer"))
}

fn list<T>(key: &str, s: &str, f: fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    let v: Vec<T> = s.split(',').filter(|t| !t.trim().is_empty()).map(|t| f(key, t)).collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(bad(key, s, "empty list"));
    }
    Ok(v)
}

fn parse_value(key: &str, raw: &str) -> Result<Param> {
    Ok(match key {
        "alpha" | "diameter_min" | "diameter_max" => Param::Float(float(key, raw)?),
        "alphas" => Param::Floats(list(key, raw, float)?),
        "N" | "samples" | "seed" | "workers" | "max_rejections" | "max_steps" => Param::Int(int(key, raw)?),
        "Ns" | "cutoffs" => Param::Ints(list(key, raw, int)?),
        "box" => Param::Ints(list(key, raw, int)?),
        "grid" => {
            let (w, h) = raw.split_once(['x', 'X']).ok_or_else(|| bad(key, raw, "expected WxH"))?;
            let w = int(key, w)? as u32;
            let h = int(key, h)? as u32;
            Param::Grid(w, h)
        }
        "region" => {
            let body = raw.strip_prefix("rect:").ok_or_else(|| bad(key, raw, "expected rect:X0,X1,Y0,Y1"))?;
            let v = list(key, body, float)?;
            if v.len() != 4 {
                return Err(bad(key, raw, "expected four coordinates"));
            }
            Param::Rect(RealRect::new(v[0], v[1], v[2], v[3]).map_err(|e| bad(key, raw, &e.to_string()))?)
        }
        "output" | "format" | "mode" | "scheme" => Param::Text(raw.to_string()),
        _ => return Err(Error::Usage(format!("unknown key {key:?}"))),
    })
}

/// Validated parameters for one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub params: BTreeMap<String, Param>,
}

impl RunConfig {
    fn get(&self, key: &str) -> Option<&Param> {
        self.params.get(key)
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Param::Float(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> Option<u64> {
        match self.get(key) {
            Some(Param::Int(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn floats(&self, key: &str) -> Option<&[f64]> {
        match self.get(key) {
            Some(Param::Floats(v)) => Some(v),
            _ => None,
        }
    }

    pub fn ints(&self, key: &str) -> Option<&[u64]> {
        match self.get(key) {
            Some(Param::Ints(v)) => Some(v),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.get(key) {
            Some(Param::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.int("seed").unwrap_or(0)
    }

    pub fn scale(&self) -> u32 {
        self.int("N").unwrap_or(1) as u32
    }

    pub fn samples(&self) -> usize {
        self.int("samples").unwrap_or(1) as usize
    }

    pub fn grid(&self) -> (u32, u32) {
        match self.get("grid") {
            Some(Param::Grid(w, h)) => (*w, *h),
            _ => (4, 3),
        }
    }

    pub fn region_rect(&self) -> Option<RealRect> {
        match self.get("region") {
            Some(Param::Rect(r)) => Some(*r),
            _ => None,
        }
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.text("output").map(PathBuf::from)
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        let d = SamplerConfig::default();
        SamplerConfig {
            max_rejections: self.int("max_rejections").unwrap_or(d.max_rejections),
            max_steps: self.int("max_steps").unwrap_or(d.max_steps),
        }
    }

    /// Every parameter, as recorded in the manifest.
    pub fn params_json(&self) -> Json {
        let mut m = serde_json::Map::new();
        for (k, v) in &self.params {
            if k != "workers" && k != "output" {
                m.insert(k.clone(), v.to_json());
            }
        }
        let c = self.sampler_config();
        m.entry("max_rejections").or_insert(json!(c.max_rejections));
        m.entry("max_steps").or_insert(json!(c.max_steps));
        m.entry("seed").or_insert(json!(self.seed()));
        Json::Object(m)
    }

    fn validate(&self) -> Result<()> {
        let sc = self.subcommand;
        for (key, required) in sc.keys() {
            if *required && !self.params.contains_key(*key) {
                return Err(Error::Usage(format!("{} requires --{key}", sc.name())));
            }
        }
        let range = |key: &str, ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Usage(format!("--{key} must be {what}")))
            }
        };
        if let Some(a) = self.float("alpha") {
            range("alpha", a >= 0.0, ">= 0")?;
            if sc == Subcommand::Truncate {
                range("alpha", a > 0.5, "> 0.5 for truncate")?;
            }
        }
        if let Some(v) = self.floats("alphas") {
            range("alphas", v.iter().all(|&a| a >= 0.0), ">= 0")?;
            if sc == Subcommand::Alphac {
                range("alphas", v.windows(2).all(|w| w[0] < w[1]), "strictly ascending")?;
            }
        }
        let needs_block = matches!(sc, Subcommand::Crossing | Subcommand::Blocks | Subcommand::Sweep);
        if let Some(n) = self.int("N") {
            range("N", n >= if needs_block { 2 } else { 1 }, if needs_block { ">= 2" } else { ">= 1" })?;
            range("N", n <= 4096, "<= 4096")?;
        }
        if let Some(v) = self.ints("Ns") {
            range("Ns", v.iter().all(|&n| (2..=4096).contains(&n)), "in 2..=4096")?;
        }
        if sc == Subcommand::Sweep && self.int("N").is_none() && self.ints("Ns").is_none() {
            return Err(Error::Usage("sweep requires --N or --Ns".into()));
        }
        if let Some(s) = self.int("samples") {
            range("samples", s >= 1, ">= 1")?;
        }
        if let Some(v) = self.ints("box") {
            range("box", v.iter().all(|&m| (2..=4096).contains(&m)), "in 2..=4096")?;
            range("box", v.windows(2).all(|w| w[0] < w[1]), "ascending")?;
            if sc == Subcommand::Truncate {
                range("box", v.len() == 1, "a single size for truncate")?;
            }
        }
        if let Some(v) = self.ints("cutoffs") {
            range("cutoffs", v.windows(2).all(|w| w[0] < w[1]), "ascending")?;
        }
        if let Some(Param::Grid(w, h)) = self.get("grid") {
            range("grid", *w >= 2 && *h >= 1 && w * h <= 1_000_000, "WxH with W >= 2, H >= 1")?;
        }
        for k in ["diameter_min", "diameter_max"] {
            if let Some(d) = self.float(k) {
                range(k, d >= 0.0, ">= 0")?;
            }
        }
        if let (Some(lo), Some(hi)) = (self.float("diameter_min"), self.float("diameter_max")) {
            range("diameter_max", lo <= hi, ">= diameter_min")?;
        }
        for k in ["max_rejections", "max_steps", "workers"] {
            if let Some(x) = self.int(k) {
                range(k, x >= 1, ">= 1")?;
            }
        }
        if let Some(m) = self.text("mode") {
            range("mode", m == "global" || m == "independent", "global or independent")?;
        }
        if let Some(f) = self.text("format") {
            range("format", ["csv", "json", "text"].contains(&f), "csv, json or text")?;
        }
        if let Some(s) = self.text("scheme") {
            lss_dominated_p(1.0, s).map_err(|e| Error::Usage(format!("--scheme: {e}")))?;
        }
        Ok(())
    }
}

fn json_scalar(key: &str, v: &Json) -> Result<String> {
    Ok(match v {
        Json::String(s) => s.clone(),
        Json::Number(n) => n.to_string(),
        Json::Array(a) => a.iter().map(|x| json_scalar(key, x)).collect::<Result<Vec<_>>>()?.join(","),
        _ => return Err(Error::Usage(format!("config key {key:?} has an unsupported value"))),
    })
}

/// Reads a flat `key = value` file, or a flat JSON object.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let v: Json = serde_json::from_str(&text).map_err(|e| Error::Usage(format!("config JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| Error::Usage("config JSON must be an object".into()))?;
        return obj.iter().map(|(k, v)| Ok((k.clone(), json_scalar(k, v)?))).collect();
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn normalize_key(k: &str) -> String {
    match k {
        "n" => "N".into(),
        "ns" => "Ns".into(),
        _ => k.replace('-', "_"),
    }
}

/// Parses `argv` (without the program name). Flags override file values.
pub fn parse_config<S: AsRef<str>>(argv: &[S], config_file: Option<&Path>) -> Result<RunConfig> {
    let mut sub: Option<String> = None;
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut file = config_file.map(Path::to_path_buf);
    let mut it = argv.iter().map(AsRef::as_ref);
    while let Some(a) = it.next() {
        if let Some(k) = a.strip_prefix("--") {
            let (k, v) = match k.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| Error::Usage(format!("--{k} needs a value")))?;
                    (k.to_string(), v.to_string())
                }
            };
            if k == "config" {
                file = Some(PathBuf::from(v));
            } else {
                flags.push((normalize_key(&k), v));
            }
        } else if sub.is_none() {
            sub = Some(a.to_string());
        } else {
            return Err(Error::Usage(format!("unexpected argument {a:?}")));
        }
    }
    let mut entries = match &file {
        Some(p) => read_config_file(p)?.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect(),
        None => Vec::new(),
    };
    if sub.is_none() {
        if let Some(i) = entries.iter().position(|(k, _)| k == "subcommand") {
            sub = Some(entries[i].1.clone());
        }
    }
    entries.retain(|(k, _)| k != "subcommand");
    let subcommand = Subcommand::parse(&sub.ok_or_else(|| Error::Usage("missing subcommand".into()))?)?;
    entries.extend(flags);

    let mut params = BTreeMap::new();
    for (k, raw) in entries {
        let allowed = COMMON_KEYS.contains(&k.as_str()) || subcommand.keys().iter().any(|(x, _)| *x == k);
        if !allowed {
            return Err(Error::Usage(format!("unknown key {k:?} for {}", subcommand.name())));
        }
        params.insert(k.clone(), parse_value(&k, &raw)?);
    }
    let cfg = RunConfig { subcommand, params };
    cfg.validate()?;
    Ok(cfg)
}

/// Exit codes: 0 success, 1 usage, 2 sampling, 3 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        Error::SamplingFailure(_) | Error::Numerical(_) => 2,
        _ => 1,
    }
}

/// Table output: CSV (default) or JSON rows.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    fn render(&self, format: &str) -> Result<Vec<u8>> {
        if format == "json" {
            let rows: Vec<Json> = self
                .rows
                .iter()
                .map(|r| Json::Object(self.header.iter().map(|h| h.to_string()).zip(r.iter().map(|c| json!(c))).collect()))
                .collect();
            let mut b = serde_json::to_vec_pretty(&rows)?;
            b.push(b'\n');
            return Ok(b);
        }
        csv_table(&self.header, &self.rows)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "out_of_grid".into(), |v| v.to_string())
}

/// Writes the main output (to the file plus a manifest, or to stdout).
fn deliver(cfg: &RunConfig, bytes: &[u8], started: Instant, mut manifest: Manifest) -> Result<()> {
    match cfg.output() {
        Some(path) => {
            manifest.emit(&path, bytes)?;
            manifest.finish(started.elapsed(), &path)?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn scaled_region(cfg: &RunConfig) -> Result<Region> {
    let rect = cfg.region_rect().expect("validated");
    let n = cfg.scale();
    if rect.lattice_box(n).is_none() {
        return Err(Error::Precondition("region holds no lattice vertices".into()));
    }
    let v = rect.lattice_box(n).map_or(0, |b| b.area());
    if v > 200_000 {
        return Err(Error::Precondition(format!("region has {v} vertices (limit 200000)")));
    }
    Ok(rect_region(&rect, n))
}

fn run_inner(cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let manifest = Manifest::new(cfg.subcommand.name(), cfg.params_json(), cfg.seed());
    let format = cfg.text("format").unwrap_or("csv");
    let seed = cfg.seed();
    let sc = cfg.sampler_config();
    match cfg.subcommand {
        Subcommand::Mass => {
            let kernel = build_kernel(scaled_region(cfg)?);
            let mass = total_loop_mass(&kernel)?;
            let rates = pointed_rates(&kernel)?;
            let sum = rates.total();
            eprintln!("vertices = {}", kernel.len());
            eprintln!("m(A) = {mass:.15}");
            eprintln!("sum log 1/(1-r_i) = {sum:.15}");
            eprintln!("|difference| = {:.3e}", (mass - sum).abs());
            let mut t = Table::new(&["x", "y", "r", "lambda"]);
            for (v, (r, l)) in rates.ordering().iter().zip(rates.r.iter().zip(&rates.lambda)) {
                t.push([v.x.to_string(), v.y.to_string(), r.to_string(), l.to_string()]);
            }
            deliver(cfg, &t.render(format)?, started, manifest)
        }
        Subcommand::Sample => {
            let region = scaled_region(cfg)?;
            let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), sc)?;
            let soup = sampler.sample(cfg.float("alpha").unwrap(), seed, 0)?;
            let soup = filter_by_diameter(&soup, cfg.float("diameter_min"), cfg.float("diameter_max"))?;
            eprintln!("loops = {}", soup.len());
            deliver(cfg, soup_to_text(&soup).as_bytes(), started, manifest)
        }
        Subcommand::Crossing => {
            let block = BlockSampler::new(cfg.scale(), sc)?;
            let spec: BlockSpec = block.spec();
            let alpha = cfg.float("alpha").unwrap();
            let min_d = cfg.float("diameter_min");
            let rows = (0..cfg.samples())
                .into_par_iter()
                .map(|r| {
                    let soup = block.soup_sampler().sample(alpha, seed, stream_id(0, r as u64))?;
                    let soup = filter_by_diameter(&soup, min_d, None)?;
                    let w = crossing_events(&soup, &spec);
                    Ok((soup.len(), w))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut t = Table::new(&["replica", "alpha", "N", "loops", "c1", "c2", "c3", "special"]);
            let mut hits = 0;
            for (r, (n_loops, w)) in rows.iter().enumerate() {
                hits += w.satisfied() as usize;
                t.push([
                    r.to_string(),
                    alpha.to_string(),
                    cfg.scale().to_string(),
                    n_loops.to_string(),
                    (w.c1.satisfied as u8).to_string(),
                    (w.c2.satisfied as u8).to_string(),
                    (w.c3.satisfied as u8).to_string(),
                    (w.satisfied() as u8).to_string(),
                ]);
            }
            eprintln!("special crossing: {hits} / {}", rows.len());
            deliver(cfg, &t.render(format)?, started, manifest)
        }
        Subcommand::Blocks => {
            let n = cfg.scale();
            let (w, h) = cfg.grid();
            let grid = BlockGrid::new(w, h)?;
            let alpha = cfg.float("alpha").unwrap();
            let mode = cfg.text("mode").unwrap_or("independent");
            let fields = if mode == "global" {
                let region = hull_region(n, &grid);
                let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), sc)?;
                (0..cfg.samples())
                    .into_par_iter()
                    .map(|r| build_omega_global(&sampler.sample(alpha, seed, stream_id(0, r as u64))?, n, grid))
                    .collect::<Result<Vec<_>>>()?
            } else {
                let block = BlockSampler::new(n, sc)?;
                (0..cfg.samples())
                    .into_par_iter()
                    .map(|r| block.omega_independent(alpha, grid, seed, r as u64))
                    .collect::<Result<Vec<_>>>()?
            };
            let mean_open = fields.iter().map(|f| f.open_fraction()).sum::<f64>() / fields.len() as f64;
            eprintln!("mean open fraction = {mean_open:.6}");
            if let Some(s) = cfg.text("scheme") {
                eprintln!("dominated density ({s}, heuristic) = {:.6}", lss_dominated_p(mean_open, s)?);
            }
            let bytes = if format == "text" {
                fields.iter().map(omega_to_text).collect::<String>().into_bytes()
            } else {
                let mut t = Table::new(&["alpha", "N", "grid", "mode", "replica", "open_fraction", "spans"]);
                for (r, f) in fields.iter().enumerate() {
                    t.push([
                        alpha.to_string(),
                        n.to_string(),
                        format!("{w}x{h}"),
                        mode.to_string(),
                        r.to_string(),
                        f.open_fraction().to_string(),
                        (spanning_open_path(f).is_some() as u8).to_string(),
                    ]);
                }
                t.render(format)?
            };
            deliver(cfg, &bytes, started, manifest)
        }
        Subcommand::Sweep => {
            let ns: Vec<u32> = match cfg.ints("Ns") {
                Some(v) => v.iter().map(|&n| n as u32).collect(),
                None => vec![cfg.scale()],
            };
            let alphas = cfg.floats("alphas").unwrap();
            let res = sweep_crossing_probability(alphas, &ns, cfg.samples(), seed, sc)?;
            let mut t = Table::new(&["alpha", "N", "samples", "p_hat", "ci_low", "ci_high", "seed"]);
            for r in &res.rows {
                t.push([
                    r.alpha.to_string(),
                    r.n.to_string(),
                    r.samples.to_string(),
                    r.p_hat.to_string(),
                    r.ci_low.to_string(),
                    r.ci_high.to_string(),
                    r.seed.to_string(),
                ]);
            }
            if ns.len() >= 2 && alphas.len() == 1 {
                for row in convergence_diagnostic(&ns, alphas[0], cfg.samples(), seed, sc)? {
                    eprintln!("N = {}: p = {:.4}, diff = {}", row.n, row.p_hat, opt(row.diff));
                }
            }
            deliver(cfg, &t.render(format)?, started, manifest)
        }
        Subcommand::Alphac => {
            let sizes: Vec<u32> = cfg.ints("box").unwrap().iter().map(|&m| m as u32).collect();
            let est = estimate_alpha_c(&sizes, cfg.floats("alphas").unwrap(), cfg.samples(), seed, sc)?;
            let mut t = Table::new(&["M", "alpha", "samples", "p_hat", "ci_low", "ci_high", "alpha_hat"]);
            for c in &est.curves {
                eprintln!("M = {}: alpha_hat = {} (target {})", c.m, opt(c.alpha_hat), est.target);
                for i in 0..c.alphas.len() {
                    t.push([
                        c.m.to_string(),
                        c.alphas[i].to_string(),
                        c.samples.to_string(),
                        c.p_hat[i].to_string(),
                        c.ci_low[i].to_string(),
                        c.ci_high[i].to_string(),
                        opt(c.alpha_hat),
                    ]);
                }
            }
            deliver(cfg, &t.render(format)?, started, manifest)
        }
        Subcommand::Truncate => {
            let cutoffs: Vec<u32> = cfg.ints("cutoffs").unwrap().iter().map(|&c| c as u32).collect();
            let m = cfg.ints("box").unwrap()[0] as u32;
            let tab = truncation_experiment(cfg.float("alpha").unwrap(), &cutoffs, m, cfg.samples(), seed, sc)?;
            let mut t = Table::new(&["cutoff", "samples", "crossing_freq", "mean_largest_vertices", "mean_largest_diameter"]);
            for r in &tab.rows {
                t.push([
                    r.cutoff.map_or_else(|| "none".into(), |c| c.to_string()),
                    r.samples.to_string(),
                    r.crossing_freq.to_string(),
                    r.mean_largest_vertices.to_string(),
                    r.mean_largest_diameter.to_string(),
                ]);
            }
            deliver(cfg, &t.render(format)?, started, manifest)
        }
        Subcommand::Bernoulli => {
            let alpha = cfg.float("alpha").unwrap();
            let p = bernoulli_minorant(alpha)?;
            let (w, h) = cfg.grid();
            eprintln!("p = 1 - (15/16)^alpha = {p:.15}");
            eprintln!("threshold alpha = ln 2 / ln(16/15) = {:.15}", bernoulli_threshold());
            let region = Region::from_box(IntBox { x0: 0, x1: w as i32 - 1, y0: 1, y1: h as i32 });
            let sim = minorant_from_soup(region, alpha, cfg.samples(), seed, sc)?;
            let bond = iid_bond_percolation(p, w, h, cfg.samples(), seed)?;
            let mut t = Table::new(&[
                "alpha",
                "p",
                "threshold",
                "edges",
                "soup_open_freq",
                "z",
                "iid_open_freq",
                "iid_spanning_freq",
            ]);
            t.push([
                alpha.to_string(),
                p.to_string(),
                bernoulli_threshold().to_string(),
                sim.edges.to_string(),
                sim.frequency.to_string(),
                sim.z_score().to_string(),
                bond.open_frequency.to_string(),
                bond.spanning_frequency.to_string(),
            ]);
            deliver(cfg, &t.render(format)?, started, manifest)
        }
        Subcommand::Phi => {
            let n = cfg.scale();
            let region = scaled_region(cfg)?;
            let sampler = SoupSampler::new(Arc::new(pointed_rates(&build_kernel(region))?), sc)?;
            let soup = sampler.sample(cfg.float("alpha").unwrap(), seed, 0)?;
            let loops = soup.loops.iter().map(|l| interpolate_loop(l, n)).collect::<Result<Vec<_>>>()?;
            let mut b = serde_json::to_vec(&loops)?;
            b.push(b'\n');
            deliver(cfg, &b, started, manifest)
        }
    }
}

/// Runs a validated config; returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let result = match cfg.int("workers") {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w as usize).build() {
            Ok(pool) => pool.install(|| run_inner(cfg)),
            Err(e) => Err(Error::Usage(format!("cannot start {w} workers: {e}"))),
        },
        None => run_inner(cfg),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary: parse, run, map errors to exit codes.
pub fn main_with_args<S: AsRef<str>>(argv: &[S]) -> i32 {
    if argv.is_empty() || matches!(argv[0].as_ref(), "-h" | "--help" | "help") {
        eprint!("{USAGE}");
        return if argv.is_empty() { 1 } else { 0 };
    }
    match parse_config(argv, None) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            exit_code(&e)
        }
    }
}
