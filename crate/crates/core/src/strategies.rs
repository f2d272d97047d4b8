//! Per-antenna transmit phases for the four power-transfer strategies.
//!
//! | kind | phase rule                      | needs                 |
//! |------|---------------------------------|-----------------------|
//! | SISO | one antenna, phase irrelevant   | nothing               |
//! | RPS  | i.i.d. U(0, 2π) per slot        | time + frequency sync |
//! | BF   | −φ̂ (reciprocity)               | time + freq + phase   |
//! | GBF  | −φ̂ + N(0, σ²)                  | partial phase sync    |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::wrap_phase;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Siso,
    Rps,
    Bf,
    Gbf,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [StrategyKind::Siso, StrategyKind::Rps, StrategyKind::Bf, StrategyKind::Gbf];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Siso => "siso",
            StrategyKind::Rps => "rps",
            StrategyKind::Bf => "bf",
            StrategyKind::Gbf => "gbf",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "siso" => Ok(StrategyKind::Siso),
            "rps" => Ok(StrategyKind::Rps),
            "bf" => Ok(StrategyKind::Bf),
            "gbf" | "g-bf" => Ok(StrategyKind::Gbf),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Strategy selection plus every parameter any strategy may consume.
/// Angles are radians.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// SISO transmitter; `None` picks the element nearest the target.
    pub siso_index: Option<usize>,
    /// RPS phase dwell time per slot, seconds.
    pub dwell_s: f64,
    /// RPS slots averaged per field point.
    pub n_slots: usize,
    pub sigma_phi: f64,
    pub est_noise_std: f64,
    /// Optional residual carrier offset per antenna, Hz. Empty disables drift.
    pub residual_cfo_hz: Vec<f64>,
    /// GBF realizations averaged per field point.
    pub realizations: usize,
    /// Draw a fresh uplink estimate for every realization instead of sharing one.
    pub reestimate: bool,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            siso_index: None,
            dwell_s: 0.01,
            n_slots: 1000,
            sigma_phi: 0.0,
            est_noise_std: 0.0,
            residual_cfo_hz: Vec::new(),
            realizations: 1,
            reestimate: true,
        }
    }

    pub fn validate(&self, antennas: usize) -> Result<()> {
        if !(self.sigma_phi >= 0.0) || !self.sigma_phi.is_finite() {
            return Err(Error::invalid(format!("sigma_phi must be >= 0, got {}", self.sigma_phi)));
        }
        if !(self.est_noise_std >= 0.0) || !self.est_noise_std.is_finite() {
            return Err(Error::invalid(format!(
                "est_noise_std must be >= 0, got {}",
                self.est_noise_std
            )));
        }
        if !(self.dwell_s > 0.0) || !self.dwell_s.is_finite() {
            return Err(Error::invalid(format!("dwell must be > 0, got {}", self.dwell_s)));
        }
        if self.n_slots == 0 {
            return Err(Error::invalid("n_slots must be >= 1"));
        }
        if self.realizations == 0 {
            return Err(Error::invalid("realizations must be >= 1"));
        }
        if let Some(i) = self.siso_index {
            if i >= antennas {
                return Err(Error::invalid(format!("siso_index {i} out of range for {antennas} antennas")));
            }
        }
        if !self.residual_cfo_hz.is_empty() && self.residual_cfo_hz.len() != antennas {
            return Err(Error::invalid(format!(
                "residual_cfo_hz has {} entries for {antennas} antennas",
                self.residual_cfo_hz.len()
            )));
        }
        Ok(())
    }
}

/// Transmit state: `phases[slot][antenna]` in (−π, π], which antennas radiate,
/// and the power each active antenna radiates (watts).
#[derive(Debug, Clone, PartialEq)]
pub struct TxPlan {
    pub phases: Vec<Vec<f64>>,
    pub active: Vec<bool>,
    pub per_antenna_power_w: f64,
}

impl TxPlan {
    pub fn antennas(&self) -> usize {
        self.active.len()
    }

    pub fn slots(&self) -> usize {
        self.phases.len()
    }

    pub fn with_power(mut self, watts: f64) -> Self {
        self.per_antenna_power_w = watts;
        self
    }
}

fn single_slot(phases: Vec<f64>) -> TxPlan {
    let m = phases.len();
    TxPlan {
        phases: vec![phases],
        active: vec![true; m],
        per_antenna_power_w: 1.0,
    }
}

/// Reciprocity beamfocusing: transmit the conjugate of the pilot phase.
pub fn tx_phases_bf(phi_hat: &[f64]) -> Result<TxPlan> {
    if phi_hat.is_empty() {
        return Err(Error::invalid("beamfocusing needs at least one phase estimate"));
    }
    Ok(single_slot(phi_hat.iter().map(|p| wrap_phase(-p)).collect()))
}

/// Random-phase sweeping. The draw for antenna `m` in slot `t` comes from
/// `rng.child(m).child(t)`.
pub fn tx_phases_rps(antennas: usize, n_slots: usize, rng: &RandomStream) -> Result<TxPlan> {
    if antennas == 0 || n_slots == 0 {
        return Err(Error::invalid("RPS needs at least one antenna and one slot"));
    }
    let per_antenna: Vec<RandomStream> = (0..antennas as u64).map(|m| rng.child(m)).collect();
    let phases = (0..n_slots as u64)
        .map(|t| {
            per_antenna
                .iter()
                .map(|s| wrap_phase(2.0 * PI * s.child(t).uniform()))
                .collect()
        })
        .collect();
    Ok(TxPlan {
        phases,
        active: vec![true; antennas],
        per_antenna_power_w: 1.0,
    })
}

/// Beamfocusing with an i.i.d. Gaussian phase error per antenna, drawn from
/// `rng.child(m)`. With `sigma_phi == 0` this is exactly [`tx_phases_bf`].
pub fn tx_phases_gbf(phi_hat: &[f64], sigma_phi: f64, rng: &RandomStream) -> Result<TxPlan> {
    if !(sigma_phi >= 0.0) || !sigma_phi.is_finite() {
        return Err(Error::invalid(format!("sigma_phi must be >= 0, got {sigma_phi}")));
    }
    if sigma_phi == 0.0 {
        return tx_phases_bf(phi_hat);
    }
    if phi_hat.is_empty() {
        return Err(Error::invalid("beamfocusing needs at least one phase estimate"));
    }
    let phases = phi_hat
        .iter()
        .enumerate()
        .map(|(m, p)| wrap_phase(-p + sigma_phi * rng.child(m as u64).standard_normal()))
        .collect();
    Ok(single_slot(phases))
}

pub fn tx_phases_siso(antennas: usize, siso_index: usize) -> Result<TxPlan> {
    if siso_index >= antennas {
        return Err(Error::invalid(format!(
            "siso_index {siso_index} out of range for {antennas} antennas"
        )));
    }
    let mut active = vec![false; antennas];
    active[siso_index] = true;
    Ok(TxPlan {
        phases: vec![vec![0.0; antennas]],
        active,
        per_antenna_power_w: 1.0,
    })
}

/// Adds the phase `2π·cfo_m·t` accumulated by a residual carrier offset.
/// A single-slot plan is repeated over all `slot_times`; otherwise the slot
/// counts must agree.
pub fn apply_cfo_drift(plan: &TxPlan, cfo_hz: &[f64], slot_times: &[f64]) -> Result<TxPlan> {
    if cfo_hz.len() != plan.antennas() {
        return Err(Error::invalid(format!(
            "cfo has {} entries for {} antennas",
            cfo_hz.len(),
            plan.antennas()
        )));
    }
    if slot_times.is_empty() {
        return Err(Error::invalid("need at least one slot time"));
    }
    let slots = if plan.slots() == 1 {
        slot_times.len()
    } else if plan.slots() == slot_times.len() {
        plan.slots()
    } else {
        return Err(Error::invalid(format!(
            "plan has {} slots but {} slot times were given",
            plan.slots(),
            slot_times.len()
        )));
    };
    let phases = (0..slots)
        .map(|t| {
            let base = &plan.phases[if plan.slots() == 1 { 0 } else { t }];
            base.iter()
                .zip(cfo_hz)
                .map(|(&theta, &f)| {
                    if f == 0.0 {
                        theta
                    } else {
                        wrap_phase(theta + wrap_phase(2.0 * PI * f * slot_times[t]))
                    }
                })
                .collect()
        })
        .collect();
    Ok(TxPlan {
        phases,
        active: plan.active.clone(),
        per_antenna_power_w: plan.per_antenna_power_w,
    })
}
