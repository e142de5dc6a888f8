//! Text formats.
//!
//! * `.xyz`: one point per line as three whitespace-separated numbers. Blank
//!   lines and lines whose first non-blank character is `#` are skipped.
//!   Writers emit the shortest decimal that parses back to the same `f64`.
//! * `PSGRID 1`: header line `PSGRID 1`, a dims line `D D D`, an origin line
//!   `ox oy oz`, a cell-size line `h`, then `D³` values in [0, 1], z fastest
//!   and x slowest. Writers put one `(x, y)` column of `D` values per line.
//! * Distribution specs: a JSON object with `family` plus family parameters;
//!   see [`crate::meanshape::Family`].
//! * Bundle manifests: `{"groundtruth": path, "candidates": [paths], "metric": "cd"|"emd"}`,
//!   relative paths resolved against the manifest's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::emd::Assignment;
use crate::error::{Error, Result};
use crate::geom::{Point3, PointSet};
use crate::losses::{CandidateBundle, Metric};
use crate::meanshape::{Family, ShapeDistributionSpec, DEFAULT_N_POINTS, DEFAULT_SEED};
use crate::voxel::OccupancyGrid;

pub const GRID_HEADER: &str = "PSGRID 1";

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::parse(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

pub fn parse_xyz(text: &str) -> Result<PointSet> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_ascii_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(line, format!("expected 3 tokens, found {}", toks.len())));
        }
        points.push(Point3::new(
            parse_real(toks[0], line)?,
            parse_real(toks[1], line)?,
            parse_real(toks[2], line)?,
        ));
    }
    Ok(PointSet(points))
}

pub fn format_xyz(ps: &PointSet) -> String {
    let mut out = String::with_capacity(ps.len() * 32);
    for p in ps.iter() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointSet> {
    parse_xyz(&read_text(path.as_ref())?)
}

pub fn write_xyz(ps: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    ps.validate()?;
    write_text(path.as_ref(), &format_xyz(ps))
}

pub fn parse_grid(text: &str) -> Result<OccupancyGrid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header_line = |what: &str| lines.next().ok_or_else(|| Error::parse(0, format!("missing {what} line")));

    let (n, header) = header_line("header")?;
    if header != GRID_HEADER {
        return Err(Error::parse(n, format!("expected header `{GRID_HEADER}`")));
    }

    let (n, dims_line) = header_line("dims")?;
    let dims_tok: Vec<&str> = dims_line.split_ascii_whitespace().collect();
    if dims_tok.len() != 3 {
        return Err(Error::parse(n, format!("expected 3 dims, found {}", dims_tok.len())));
    }
    let mut dims = [0usize; 3];
    for (d, tok) in dims.iter_mut().zip(&dims_tok) {
        *d = tok.parse().map_err(|_| Error::parse(n, format!("invalid dimension `{tok}`")))?;
    }
    if dims[0] != dims[1] || dims[1] != dims[2] {
        return Err(Error::parse(n, "grid must be cubic (D D D)"));
    }
    let d = dims[0];
    if d == 0 {
        return Err(Error::parse(n, "dimension must be at least 1"));
    }
    let expected = d
        .checked_mul(d)
        .and_then(|v| v.checked_mul(d))
        .ok_or_else(|| Error::parse(n, "dimension too large"))?;

    let (n, origin_line) = header_line("origin")?;
    let o: Vec<&str> = origin_line.split_ascii_whitespace().collect();
    if o.len() != 3 {
        return Err(Error::parse(n, format!("expected 3 origin coordinates, found {}", o.len())));
    }
    let origin = Point3::new(parse_real(o[0], n)?, parse_real(o[1], n)?, parse_real(o[2], n)?);

    let (n, cell_line) = header_line("cell size")?;
    let c: Vec<&str> = cell_line.split_ascii_whitespace().collect();
    if c.len() != 1 {
        return Err(Error::parse(n, format!("expected 1 cell size, found {}", c.len())));
    }
    let cell_size = parse_real(c[0], n)?;
    if cell_size <= 0.0 {
        return Err(Error::parse(n, "cell size must be positive"));
    }

    let mut values = Vec::with_capacity(expected.min(1 << 20));
    for (n, line) in lines {
        for tok in line.split_ascii_whitespace() {
            let v = parse_real(tok, n)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(n, format!("value {v} outside [0, 1]")));
            }
            if values.len() == expected {
                return Err(Error::DimensionMismatch { expected, found: expected + 1 });
            }
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: values.len() });
    }
    Ok(OccupancyGrid { dims: d, origin, cell_size, values })
}

pub fn format_grid(g: &OccupancyGrid) -> String {
    let mut out = String::with_capacity(g.values.len() * 4 + 64);
    let _ = writeln!(out, "{GRID_HEADER}");
    let _ = writeln!(out, "{0} {0} {0}", g.dims);
    let _ = writeln!(out, "{} {} {}", g.origin.x, g.origin.y, g.origin.z);
    let _ = writeln!(out, "{}", g.cell_size);
    for column in g.values.chunks(g.dims.max(1)) {
        let mut first = true;
        for v in column {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<OccupancyGrid> {
    parse_grid(&read_text(path.as_ref())?)
}

pub fn write_grid(g: &OccupancyGrid, path: impl AsRef<Path>) -> Result<()> {
    g.validate()?;
    write_text(path.as_ref(), &format_grid(g))
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(e.line(), e.to_string())
}

fn take_u64(map: &mut Map<String, Value>, key: &str, default: u64) -> Result<u64> {
    match map.remove(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::invalid(key, format!("expected a nonnegative integer, found {v}"))),
    }
}

pub fn parse_distribution_spec(text: &str) -> Result<ShapeDistributionSpec> {
    let value: Value = serde_json::from_str(text).map_err(json_error)?;
    let Value::Object(mut map) = value else {
        return Err(Error::parse(1, "expected a JSON object"));
    };
    let family = match map.remove("family") {
        Some(Value::String(s)) => s,
        Some(other) => return Err(Error::invalid("family", format!("expected a string, found {other}"))),
        None => return Err(Error::invalid("family", "missing")),
    };
    let n_points = take_u64(&mut map, "n_points", DEFAULT_N_POINTS as u64)?;
    let n_points = usize::try_from(n_points).map_err(|_| Error::invalid("n_points", "too large"))?;
    let seed = take_u64(&mut map, "seed", DEFAULT_SEED)?;

    let params = Value::Object(map);
    let to_params = |e: serde_json::Error| Error::invalid(&family, e.to_string());
    let family = match family.as_str() {
        "circle_radius" => Family::CircleRadius(Deserialize::deserialize(params).map_err(to_params)?),
        "spiky_arc" => Family::SpikyArc(Deserialize::deserialize(params).map_err(to_params)?),
        "corner_square" => Family::CornerSquare(Deserialize::deserialize(params).map_err(to_params)?),
        "bar_disk" => Family::BarDisk(Deserialize::deserialize(params).map_err(to_params)?),
        _ => return Err(Error::UnknownFamily(family)),
    };
    let spec = ShapeDistributionSpec { family, n_points, seed };
    spec.validate()?;
    Ok(spec)
}

pub fn read_distribution_spec(path: impl AsRef<Path>) -> Result<ShapeDistributionSpec> {
    parse_distribution_spec(&read_text(path.as_ref())?)
}

pub fn format_distribution_spec(spec: &ShapeDistributionSpec) -> String {
    serde_json::to_string_pretty(spec).expect("spec serializes") + "\n"
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleManifest {
    pub groundtruth: PathBuf,
    pub candidates: Vec<PathBuf>,
    #[serde(default)]
    pub metric: Metric,
}

pub fn parse_bundle_manifest(text: &str) -> Result<BundleManifest> {
    let m: BundleManifest = serde_json::from_str(text).map_err(json_error)?;
    if m.candidates.is_empty() {
        return Err(Error::invalid("candidates", "at least one candidate is required"));
    }
    Ok(m)
}

pub fn read_bundle(path: impl AsRef<Path>) -> Result<CandidateBundle> {
    let path = path.as_ref();
    let manifest = parse_bundle_manifest(&read_text(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    Ok(CandidateBundle {
        groundtruth: read_xyz(resolve(&manifest.groundtruth))?,
        candidates: manifest
            .candidates
            .iter()
            .map(|c| read_xyz(resolve(c)))
            .collect::<Result<_>>()?,
        metric: manifest.metric,
    })
}

/// One `i j cost` line per matched pair.
pub fn format_matching(m: &Assignment) -> String {
    let mut out = String::new();
    for (i, (&j, &c)) in m.perm.iter().zip(&m.per_pair_cost).enumerate() {
        let _ = writeln!(out, "{i} {j} {c}");
    }
    out
}

pub fn write_matching(m: &Assignment, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &format_matching(m))
}

/// `step,loss` CSV with a header row.
pub fn format_trace(trace: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    out
}

pub fn write_trace(trace: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &format_trace(trace))
}
