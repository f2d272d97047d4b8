//! CSV serialization of fields, sweeps and measurement files.
//!
//! Field files carry `# key=value` metadata lines, then the header
//! `x_m,y_m,z_m,rss_dbm` and one row per grid point in row-major order.
//! Floats are written in Rust's shortest round-trip form, so loading a file
//! reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::engine::{dbm_to_watts, watts_to_dbm, PowerField, SweepResult};
use crate::error::{Error, Result};
use crate::geometry::{Position3D, SamplingPlane};
use crate::strategies::{StrategyConfig, StrategyKind};

pub const FIELD_HEADER: &str = "x_m,y_m,z_m,rss_dbm";
pub const SWEEP_HEADER: &str = "sigma_deg,realization,rss_dbm";
/// Sanity ceiling for imported RSS values.
pub const MAX_MEASURED_DBM: f64 = 30.0;

/// Writes via a temporary file in the destination directory and renames on
/// success, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn schema(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Metadata collected from `# key=value` lines, remembering where each came from.
struct Meta<'a> {
    path: &'a Path,
    entries: BTreeMap<String, (usize, String)>,
}

impl Meta<'_> {
    fn raw(&self, key: &str) -> Result<(usize, &str)> {
        self.entries
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| schema(self.path, 1, format!("missing metadata `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.raw(key)?;
        v.parse()
            .map_err(|_| schema(self.path, line, format!("bad value `{v}` for `{key}`")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.raw(key)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(';')
            .map(|x| x.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| schema(self.path, line, format!("bad list `{v}` for `{key}`")))
    }
}

fn field_metadata(field: &PowerField) -> Vec<(&'static str, String)> {
    let s = &field.strategy;
    let p = &field.plane;
    vec![
        ("frequency_hz", field.frequency_hz.to_string()),
        ("tx_power_dbm", field.tx_power_dbm.to_string()),
        ("strategy", s.kind.to_string()),
        ("seed", field.seed.to_string()),
        ("plane_origin_x_m", p.origin.x.to_string()),
        ("plane_origin_y_m", p.origin.y.to_string()),
        ("plane_z_m", p.origin.z.to_string()),
        ("plane_width_m", p.width.to_string()),
        ("plane_height_m", p.height.to_string()),
        ("plane_step_m", p.step.to_string()),
        ("nx", p.nx().to_string()),
        ("ny", p.ny().to_string()),
        ("target_x_m", field.target.x.to_string()),
        ("target_y_m", field.target.y.to_string()),
        ("target_z_m", field.target.z.to_string()),
        ("siso_index", s.siso_index.map_or("none".to_string(), |i| i.to_string())),
        ("dwell_s", s.dwell_s.to_string()),
        ("n_slots", s.n_slots.to_string()),
        ("sigma_phi_rad", s.sigma_phi.to_string()),
        ("est_noise_std_rad", s.est_noise_std.to_string()),
        ("residual_cfo_hz", join(&s.residual_cfo_hz)),
        ("realizations", s.realizations.to_string()),
        ("reestimate", s.reestimate.to_string()),
    ]
}

pub fn field_to_csv(field: &PowerField) -> String {
    let mut out = String::new();
    for (k, v) in field_metadata(field) {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for (p, v) in field.plane.points().iter().zip(&field.values_dbm) {
        let _ = writeln!(out, "{},{},{},{}", p.x, p.y, p.z, v);
    }
    out
}

pub fn save_field_csv(field: &PowerField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), field_to_csv(field).as_bytes())
}

fn parse_row(path: &Path, line_no: usize, line: &str, width: usize) -> Result<Vec<f64>> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != width {
        return Err(schema(path, line_no, format!("expected {width} columns, found {}", cols.len())));
    }
    cols.iter()
        .map(|c| c.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| schema(path, line_no, format!("non-numeric value in `{line}`")))
}

pub fn load_field_csv(path: impl AsRef<Path>) -> Result<PowerField> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut meta = Meta {
        path,
        entries: BTreeMap::new(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = None;
    for (no, line) in lines.by_ref() {
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                meta.entries.insert(k.trim().to_string(), (no, v.trim().to_string()));
            }
            continue;
        }
        header = Some((no, line));
        break;
    }
    let (header_line, header) = header.ok_or_else(|| schema(path, 1, "missing header line"))?;
    if header.trim() != FIELD_HEADER {
        return Err(schema(path, header_line, format!("expected header `{FIELD_HEADER}`")));
    }

    let origin = Position3D::new(meta.parse("plane_origin_x_m")?, meta.parse("plane_origin_y_m")?, meta.parse("plane_z_m")?);
    let plane = SamplingPlane::new(origin, meta.parse("plane_width_m")?, meta.parse("plane_height_m")?, meta.parse("plane_step_m")?)
        .map_err(|e| schema(path, 1, format!("invalid plane metadata: {e}")))?;
    let (nx, ny): (usize, usize) = (meta.parse("nx")?, meta.parse("ny")?);
    if nx != plane.nx() || ny != plane.ny() {
        return Err(schema(path, meta.raw("nx")?.0, format!(
            "grid {nx}x{ny} does not match plane geometry {}x{}",
            plane.nx(),
            plane.ny()
        )));
    }
    let kind: StrategyKind = {
        let (line, v) = meta.raw("strategy")?;
        v.parse().map_err(|_| schema(path, line, format!("unknown strategy `{v}`")))?
    };
    let siso_index = match meta.raw("siso_index")?.1 {
        "none" => None,
        _ => Some(meta.parse("siso_index")?),
    };
    let strategy = StrategyConfig {
        kind,
        siso_index,
        dwell_s: meta.parse("dwell_s")?,
        n_slots: meta.parse("n_slots")?,
        sigma_phi: meta.parse("sigma_phi_rad")?,
        est_noise_std: meta.parse("est_noise_std_rad")?,
        residual_cfo_hz: meta.list("residual_cfo_hz")?,
        realizations: meta.parse("realizations")?,
        reestimate: meta.parse("reestimate")?,
    };

    let points = plane.points();
    let mut values = Vec::with_capacity(points.len());
    let mut last_line = header_line;
    for (no, line) in lines {
        last_line = no;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(path, no, line, 4)?;
        let k = values.len();
        let expected = points
            .get(k)
            .ok_or_else(|| schema(path, no, format!("more rows than the {} grid points", points.len())))?;
        if row[0] != expected.x || row[1] != expected.y || row[2] != expected.z {
            return Err(schema(path, no, format!(
                "row position ({}, {}, {}) does not match grid point {k}",
                row[0], row[1], row[2]
            )));
        }
        if row[3].is_nan() {
            return Err(schema(path, no, "rss_dbm is NaN"));
        }
        values.push(row[3]);
    }
    if values.len() != points.len() {
        return Err(schema(path, last_line, format!(
            "found {} rows, expected {}",
            values.len(),
            points.len()
        )));
    }

    Ok(PowerField {
        plane,
        values_dbm: values,
        strategy,
        seed: meta.parse("seed")?,
        frequency_hz: meta.parse("frequency_hz")?,
        tx_power_dbm: meta.parse("tx_power_dbm")?,
        target: Position3D::new(meta.parse("target_x_m")?, meta.parse("target_y_m")?, meta.parse("target_z_m")?),
    })
}

/// Degrees rounded to 1e-9 so that 15 deg does not print as 14.999999999999998.
fn display_degrees(rad: f64) -> f64 {
    (rad.to_degrees() * 1e9).round() / 1e9
}

pub fn sweep_to_csv(sweep: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# seed={}", sweep.seed);
    let _ = writeln!(out, "# bf_dbm={}", sweep.bf_dbm);
    let _ = writeln!(out, "# sigmas_rad={}", join(&sweep.sigmas));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (sigma, samples) in sweep.sigmas.iter().zip(&sweep.samples_dbm) {
        for (r, v) in samples.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", display_degrees(*sigma), r, v);
        }
    }
    let means = sweep.mean_w();
    out.push_str("# p50\n# sigma_deg,p50_dbm,mean_dbm,analytic_mean_dbm\n");
    for (i, mean) in means.iter().enumerate() {
        let _ = writeln!(
            out,
            "# {},{},{},{}",
            display_degrees(sweep.sigmas[i]),
            sweep.p50_dbm[i],
            watts_to_dbm(*mean),
            sweep.analytic_mean_dbm[i]
        );
    }
    out
}

pub fn save_sweep_csv(sweep: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), sweep_to_csv(sweep).as_bytes())
}

pub fn load_sweep_csv(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut meta = Meta {
        path,
        entries: BTreeMap::new(),
    };
    let mut samples: Vec<Vec<f64>> = Vec::new();
    let mut summary: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut in_summary = false;
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if c == "p50" {
                in_summary = true;
            } else if in_summary {
                if c.starts_with("sigma_deg") {
                    continue;
                }
                summary.push((no, parse_row(path, no, c, 4)?));
            } else if let Some((k, v)) = c.split_once('=') {
                meta.entries.insert(k.trim().to_string(), (no, v.trim().to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line.trim() != SWEEP_HEADER {
                return Err(schema(path, no, format!("expected header `{SWEEP_HEADER}`")));
            }
            seen_header = true;
            continue;
        }
        let row = parse_row(path, no, line, 3)?;
        let r = row[1] as usize;
        if r == 0 {
            samples.push(Vec::new());
        }
        match samples.last_mut() {
            Some(s) if s.len() == r => s.push(row[2]),
            _ => return Err(schema(path, no, format!("realization index {r} out of sequence"))),
        }
    }
    if !seen_header {
        return Err(schema(path, 1, "missing header line"));
    }
    let sigmas = meta.list("sigmas_rad")?;
    if sigmas.len() != samples.len() || summary.len() != samples.len() {
        return Err(schema(path, text.lines().count(), format!(
            "{} sigmas, {} sample groups and {} summary rows disagree",
            sigmas.len(),
            samples.len(),
            summary.len()
        )));
    }
    Ok(SweepResult {
        sigmas,
        samples_dbm: samples,
        p50_dbm: summary.iter().map(|(_, r)| r[1]).collect(),
        bf_dbm: meta.parse("bf_dbm")?,
        analytic_mean_dbm: summary.iter().map(|(_, r)| r[3]).collect(),
        seed: meta.parse("seed")?,
    })
}

/// One received-power sample at an arbitrary position.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub position: Position3D,
    pub rss_dbm: f64,
    pub strategy: Option<String>,
}

/// Reads a measurement CSV: header `x_m,y_m,z_m,rss_dbm` with an optional
/// trailing `strategy` column; `#` lines are ignored.
pub fn load_measurements(path: impl AsRef<Path>) -> Result<Vec<MeasurementRecord>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut records = Vec::new();
    let mut with_label = None;
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let Some(labelled) = with_label else {
            with_label = Some(match line.trim() {
                h if h == FIELD_HEADER => false,
                h if h == format!("{FIELD_HEADER},strategy") => true,
                _ => return Err(schema(path, no, format!("expected header `{FIELD_HEADER}[,strategy]`"))),
            });
            continue;
        };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let want = if labelled { 5 } else { 4 };
        if cols.len() != want {
            return Err(schema(path, no, format!("expected {want} columns, found {}", cols.len())));
        }
        let nums = parse_row(path, no, &cols[..4].join(","), 4)?;
        let position = Position3D::new(nums[0], nums[1], nums[2]);
        if !position.is_finite() {
            return Err(schema(path, no, "non-finite coordinate"));
        }
        if !nums[3].is_finite() || nums[3] > MAX_MEASURED_DBM {
            return Err(schema(path, no, format!(
                "rss_dbm {} outside the sanity bound (<= {MAX_MEASURED_DBM} dBm)",
                nums[3]
            )));
        }
        records.push(MeasurementRecord {
            position,
            rss_dbm: nums[3],
            strategy: labelled.then(|| cols[4].to_string()).filter(|s| !s.is_empty()),
        });
    }
    if records.is_empty() {
        return Err(schema(path, text.lines().count().max(1), "no measurement rows"));
    }
    Ok(records)
}

/// Flat grid index of the nearest plane cell for each record (height ignored;
/// off-plane points land on the closest edge cell).
pub fn snap_to_grid(records: &[MeasurementRecord], plane: &SamplingPlane) -> Vec<usize> {
    records
        .iter()
        .map(|r| {
            let (i, j) = plane.nearest_cell(r.position.x, r.position.y);
            plane.flat_index(i, j)
        })
        .collect()
}

/// Per-cell mean power (averaged in watts) of snapped records; `None` where a
/// cell received no samples.
pub fn grid_average(records: &[MeasurementRecord], plane: &SamplingPlane) -> Vec<Option<f64>> {
    let mut acc = vec![(0.0, 0usize); plane.len()];
    for (r, k) in records.iter().zip(snap_to_grid(records, plane)) {
        acc[k].0 += dbm_to_watts(r.rss_dbm);
        acc[k].1 += 1;
    }
    acc.into_iter()
        .map(|(w, n)| (n > 0).then(|| watts_to_dbm(w / n as f64)))
        .collect()
}
