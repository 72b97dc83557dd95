//! Text formats for configurations, traces and tessellations, plus SVG
//! rendering and run manifests.

mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{wrap_to_torus, PointConfiguration, Tessellation};
use crate::sampler::MonitoringRecord;

pub use svg::{heatmap_svg, qq_svg, tessellation_svg, trace_svg, Layer};

/// `x,y` lines with a header. Seventeen decimals resolve the coordinate
/// quantum, so reading the file back gives the same configuration.
pub fn points_csv(config: &PointConfiguration) -> String {
    let mut out = String::from("x,y\n");
    for p in config.points() {
        let _ = writeln!(out, "{:.17},{:.17}", p.x(), p.y());
    }
    out
}

/// Parses `x,y` lines. A non-numeric first line is taken as a header; blank
/// lines and `#` comments are skipped.
pub fn parse_points(text: &str) -> Result<PointConfiguration> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::InvalidInput(format!("line {}: {what}: {line:?}", n + 1));
        let (x, y) = line.split_once(',').ok_or_else(|| bad("expected x,y"))?;
        match (x.trim().parse::<f64>(), y.trim().parse::<f64>()) {
            (Ok(x), Ok(y)) => points.push(wrap_to_torus(x, y).map_err(|_| bad("non-finite coordinate"))?),
            _ if n == 0 => continue,
            _ => return Err(bad("cannot parse coordinates")),
        }
    }
    PointConfiguration::from_points(points)
}

pub fn read_points(path: &Path) -> Result<PointConfiguration> {
    parse_points(&fs::read_to_string(path)?)
}

/// `block,births,deaths,moves,total` lines with a header.
pub fn trace_csv(trace: &[MonitoringRecord]) -> String {
    let mut out = String::from("block,births,deaths,moves,total\n");
    for r in trace {
        let _ = writeln!(out, "{},{},{},{},{}", r.block, r.births, r.deaths, r.moves, r.total);
    }
    out
}

/// Delaunay edges as unwrapped segments `x1,y1,x2,y2`, one per line.
pub fn edges_csv(tess: &Tessellation) -> String {
    let mut out = String::from("x1,y1,x2,y2\n");
    for e in tess.edges() {
        let [a, b] = e.ends.map(|v| v.position(tess.points()));
        let _ = writeln!(out, "{:.17},{:.17},{:.17},{:.17}", a.x, a.y, b.x, b.y);
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything needed to re-run the command that produced an output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub output_sha256: String,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        format!(
            "command={}\nconfig_sha256={}\nseed={}\noutput_sha256={}\nversion={}\n",
            self.command,
            self.config_sha256,
            self.seed,
            self.output_sha256,
            env!("CARGO_PKG_VERSION"),
        )
    }
}

/// Path of the manifest written next to `output`.
pub fn manifest_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    output.with_file_name(name)
}

/// Writes `contents` to `path` and its manifest next to it.
pub fn write_with_manifest(path: &Path, contents: &str, command: &str, config_sha256: &str, seed: u64) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    let manifest = Manifest {
        command: command.into(),
        config_sha256: config_sha256.into(),
        seed,
        output_sha256: sha256_hex(contents.as_bytes()),
    };
    fs::write(manifest_path(path), manifest.to_text())?;
    Ok(())
}
