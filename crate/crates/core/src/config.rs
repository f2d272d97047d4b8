//! Simulation configuration in TOML.
//!
//! Every key is optional and falls back to the shipped defaults. Unknown keys
//! are rejected. Angles are degrees in the file and radians everywhere else.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::Carrier;
use crate::engine::{Scenario, SweepOptions};
use crate::error::{Error, Result};
use crate::geometry::{build_ceiling_grid, AntennaArray, Position3D, SamplingPlane};
use crate::strategies::{StrategyConfig, StrategyKind};

/// The configuration shipped with the tool, identical to `SimConfig::default()`.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub carrier: CarrierSection,
    pub transmit: TransmitSection,
    pub array: ArraySection,
    pub plane: PlaneSection,
    pub target: TargetSection,
    pub strategy: StrategySection,
    pub sweep: SweepSection,
    pub ecdf: EcdfSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierSection {
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmitSection {
    /// Per-antenna transmit power.
    pub power_dbm: f64,
    /// Combined TX+RX boresight antenna gain.
    pub antenna_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub height_m: f64,
    pub origin_xy_m: [f64; 2],
    /// Elements removed from the end of the row-major grid.
    pub drop_last: usize,
    /// Explicit element positions; replaces the grid when non-empty.
    pub positions_m: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlaneSection {
    pub origin_xy_m: [f64; 2],
    pub z_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub step_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    pub position_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategySection {
    pub kind: StrategyKind,
    pub siso_index: Option<usize>,
    pub rps_dwell_s: f64,
    pub rps_slots: usize,
    pub gbf_sigma_deg: f64,
    pub gbf_realizations: usize,
    pub est_noise_deg: f64,
    pub residual_cfo_hz: Vec<f64>,
    pub reestimate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// `start:stop:step` in degrees, stop inclusive.
    pub sigmas_deg: String,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcdfSection {
    /// Instantaneous snapshots pooled for RPS and G-BF distributions.
    pub snapshots: usize,
    /// Half-width of the inside box; defaults to λ/4 (a λ/2 × λ/2 box).
    pub box_halfwidth_m: Option<f64>,
}

impl Default for CarrierSection {
    fn default() -> Self {
        Self { frequency_hz: 920e6 }
    }
}

impl Default for TransmitSection {
    fn default() -> Self {
        Self {
            power_dbm: 3.0,
            antenna_gain_db: 0.0,
        }
    }
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 8,
            spacing_m: 0.6,
            height_m: 2.4,
            origin_xy_m: [-2.1, -0.9],
            drop_last: 1,
            positions_m: Vec::new(),
        }
    }
}

impl Default for PlaneSection {
    fn default() -> Self {
        Self {
            origin_xy_m: [-0.65, -0.65],
            z_m: 1.0,
            width_m: 1.3,
            height_m: 1.3,
            step_m: 0.01,
        }
    }
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            position_m: [0.0, 0.0, 1.0],
        }
    }
}

impl Default for StrategySection {
    fn default() -> Self {
        Self {
            kind: StrategyKind::Bf,
            siso_index: None,
            rps_dwell_s: 0.01,
            rps_slots: 1000,
            gbf_sigma_deg: 20.0,
            gbf_realizations: 1,
            est_noise_deg: 0.0,
            residual_cfo_hz: Vec::new(),
            reestimate: true,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            sigmas_deg: "0:180:5".to_string(),
            realizations: 1000,
        }
    }
}

impl Default for EcdfSection {
    fn default() -> Self {
        Self {
            snapshots: 100,
            box_halfwidth_m: None,
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

/// Parses `start:stop:step` (degrees, stop inclusive) into a list of degrees.
pub fn parse_sigma_range(range: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = range.split(':').map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::invalid(format!("bad sigma range `{range}`, expected start:stop:step")))?;
    match nums.as_slice() {
        [single] if *single >= 0.0 && single.is_finite() => Ok(vec![*single]),
        [start, stop, step] if *start >= 0.0 && stop >= start && *step > 0.0 && stop.is_finite() => {
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|k| start + k as f64 * step).collect())
        }
        _ => Err(Error::invalid(format!(
            "bad sigma range `{range}`: need start >= 0, stop >= start, step > 0"
        ))),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

fn finite(field: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation(field, "must be finite"))
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            Error::ConfigParse {
                path: path.to_path_buf(),
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        positive("carrier.frequency_hz", self.carrier.frequency_hz)?;
        finite("transmit.power_dbm", &[self.transmit.power_dbm])?;
        finite("transmit.antenna_gain_db", &[self.transmit.antenna_gain_db])?;

        let a = &self.array;
        if a.positions_m.is_empty() {
            if a.rows == 0 {
                return Err(Error::validation("array.rows", "must be >= 1"));
            }
            if a.cols == 0 {
                return Err(Error::validation("array.cols", "must be >= 1"));
            }
            positive("array.spacing_m", a.spacing_m)?;
            finite("array.height_m", &[a.height_m])?;
            finite("array.origin_xy_m", &a.origin_xy_m)?;
            if a.drop_last >= a.rows * a.cols {
                return Err(Error::validation("array.drop_last", "must leave at least one antenna"));
            }
        } else {
            finite("array.positions_m", &a.positions_m.concat())?;
        }

        let p = &self.plane;
        finite("plane.origin_xy_m", &p.origin_xy_m)?;
        finite("plane.z_m", &[p.z_m])?;
        positive("plane.width_m", p.width_m)?;
        positive("plane.height_m", p.height_m)?;
        positive("plane.step_m", p.step_m)?;
        if p.step_m > p.width_m.min(p.height_m) {
            return Err(Error::validation("plane.step_m", "must not exceed the plane extent"));
        }

        finite("target.position_m", &self.target.position_m)?;
        let [tx, ty, _] = self.target.position_m;
        let plane = self.sampling_plane()?;
        if !plane.contains_xy(tx, ty) {
            return Err(Error::validation("target.position_m", "must lie inside the sampling plane"));
        }

        let s = &self.strategy;
        positive("strategy.rps_dwell_s", s.rps_dwell_s)?;
        if s.rps_slots == 0 {
            return Err(Error::validation("strategy.rps_slots", "must be >= 1"));
        }
        if s.gbf_realizations == 0 {
            return Err(Error::validation("strategy.gbf_realizations", "must be >= 1"));
        }
        if !(s.gbf_sigma_deg >= 0.0) || !s.gbf_sigma_deg.is_finite() {
            return Err(Error::validation("strategy.gbf_sigma_deg", "must be >= 0"));
        }
        if !(s.est_noise_deg >= 0.0) || !s.est_noise_deg.is_finite() {
            return Err(Error::validation("strategy.est_noise_deg", "must be >= 0"));
        }
        finite("strategy.residual_cfo_hz", &s.residual_cfo_hz)?;

        let array = self.antenna_array()?;
        if let Some(i) = s.siso_index {
            if i >= array.len() {
                return Err(Error::validation(
                    "strategy.siso_index",
                    format!("{i} out of range for {} antennas", array.len()),
                ));
            }
        }
        if !s.residual_cfo_hz.is_empty() && s.residual_cfo_hz.len() != array.len() {
            return Err(Error::validation(
                "strategy.residual_cfo_hz",
                format!("needs {} entries, got {}", array.len(), s.residual_cfo_hz.len()),
            ));
        }

        parse_sigma_range(&self.sweep.sigmas_deg)
            .map_err(|e| Error::validation("sweep.sigmas_deg", e.to_string()))?;
        if self.sweep.realizations == 0 {
            return Err(Error::validation("sweep.realizations", "must be >= 1"));
        }
        if self.ecdf.snapshots == 0 {
            return Err(Error::validation("ecdf.snapshots", "must be >= 1"));
        }
        if let Some(hw) = self.ecdf.box_halfwidth_m {
            positive("ecdf.box_halfwidth_m", hw)?;
        }
        Ok(())
    }

    pub fn antenna_array(&self) -> Result<AntennaArray> {
        let a = &self.array;
        let array = if a.positions_m.is_empty() {
            build_ceiling_grid(
                a.rows,
                a.cols,
                a.spacing_m,
                a.height_m,
                Position3D::new(a.origin_xy_m[0], a.origin_xy_m[1], 0.0),
            )
            .and_then(|arr| if a.drop_last > 0 { arr.truncated(a.drop_last) } else { Ok(arr) })
        } else {
            AntennaArray::new(a.positions_m.iter().map(|p| Position3D::from(*p)).collect())
        };
        array.map_err(|e| Error::validation("array", e.to_string()))
    }

    pub fn sampling_plane(&self) -> Result<SamplingPlane> {
        let p = &self.plane;
        SamplingPlane::new(
            Position3D::new(p.origin_xy_m[0], p.origin_xy_m[1], p.z_m),
            p.width_m,
            p.height_m,
            p.step_m,
        )
        .map_err(|e| Error::validation("plane", e.to_string()))
    }

    pub fn carrier(&self) -> Result<Carrier> {
        Carrier::new(self.carrier.frequency_hz).map_err(|e| Error::validation("carrier.frequency_hz", e.to_string()))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            array: self.antenna_array()?,
            plane: self.sampling_plane()?,
            carrier: self.carrier()?,
            tx_power_dbm: self.transmit.power_dbm,
            antenna_gain_db: self.transmit.antenna_gain_db,
            target: Position3D::from(self.target.position_m),
        })
    }

    /// Strategy parameters from the `[strategy]` block, for `kind`.
    pub fn strategy_config(&self, kind: StrategyKind) -> StrategyConfig {
        let s = &self.strategy;
        StrategyConfig {
            kind,
            siso_index: s.siso_index,
            dwell_s: s.rps_dwell_s,
            n_slots: s.rps_slots,
            sigma_phi: s.gbf_sigma_deg.to_radians(),
            est_noise_std: s.est_noise_deg.to_radians(),
            residual_cfo_hz: s.residual_cfo_hz.clone(),
            realizations: s.gbf_realizations,
            reestimate: s.reestimate,
        }
    }

    pub fn sweep_sigmas_deg(&self) -> Result<Vec<f64>> {
        parse_sigma_range(&self.sweep.sigmas_deg)
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            realizations: self.sweep.realizations,
            est_noise_std: self.strategy.est_noise_deg.to_radians(),
            reestimate: self.strategy.reestimate,
        }
    }

    /// Inside-box half-width: configured value or λ/4.
    pub fn box_halfwidth(&self) -> f64 {
        self.ecdf
            .box_halfwidth_m
            .unwrap_or(crate::channel::SPEED_OF_LIGHT / self.carrier.frequency_hz / 4.0)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimConfig::from_toml_str(&text, path)
}
