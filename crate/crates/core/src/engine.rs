//! Received-power fields and Monte Carlo sweeps.
//!
//! Every random draw is addressed by `(seed, stage, realization, antenna, slot)`
//! through [`RandomStream`], so grid points and realizations can be evaluated
//! in parallel and still reproduce the sequential result bit for bit.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{channel_vector, uplink_phase_estimate, Carrier, ChannelVector};
use crate::error::{Error, Result};
use crate::geometry::{AntennaArray, Position3D, SamplingPlane};
use crate::rng::RandomStream;
use crate::strategies::{
    apply_cfo_drift, tx_phases_bf, tx_phases_gbf, tx_phases_rps, tx_phases_siso, StrategyConfig, StrategyKind,
    TxPlan,
};

/// Reported powers are clamped here; anything at or below is "below floor".
pub const FLOOR_DBM: f64 = -150.0;

const STAGE_ESTIMATE: u64 = 1;
const STAGE_GBF: u64 = 2;
const STAGE_RPS: u64 = 3;
const STAGE_SWEEP: u64 = 4;
const STAGE_SWEEP_ESTIMATE: u64 = 5;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    if w <= 0.0 {
        return FLOOR_DBM;
    }
    (10.0 * w.log10() + 30.0).max(FLOOR_DBM)
}

pub fn is_below_floor(dbm: f64) -> bool {
    dbm <= FLOOR_DBM
}

/// Everything fixed about an experiment apart from the strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub array: AntennaArray,
    pub plane: SamplingPlane,
    pub carrier: Carrier,
    /// Per-antenna transmit power, identical for every strategy.
    pub tx_power_dbm: f64,
    /// Combined TX+RX boresight gain applied to every path, dB.
    pub antenna_gain_db: f64,
    /// Device location used for uplink estimation and SISO selection.
    pub target: Position3D,
}

impl Scenario {
    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn channel_at(&self, rx: Position3D) -> Result<ChannelVector> {
        let h = channel_vector(&self.array, rx, &self.carrier)?;
        if self.antenna_gain_db == 0.0 {
            Ok(h)
        } else {
            Ok(h.scaled(10f64.powf(self.antenna_gain_db / 20.0)))
        }
    }

    pub fn siso_index(&self, strategy: &StrategyConfig) -> usize {
        strategy
            .siso_index
            .unwrap_or_else(|| self.array.nearest_to(self.target))
    }

    fn check_target(&self) -> Result<()> {
        if !self.target.is_finite() || !self.plane.contains_xy(self.target.x, self.target.y) {
            return Err(Error::invalid(format!(
                "target ({}, {}) lies outside the sampling plane",
                self.target.x, self.target.y
            )));
        }
        Ok(())
    }

    /// Pilot-phase estimates at the target for one realization.
    fn estimate_phases(&self, est_noise_std: f64, stream: &RandomStream) -> Result<Vec<f64>> {
        let h = self.channel_at(self.target)?;
        h.gains
            .iter()
            .enumerate()
            .map(|(m, g)| uplink_phase_estimate(*g, est_noise_std, &mut stream.child(m as u64)))
            .collect()
    }

    /// Transmit plan for realization `r` of `strategy`, CFO drift included.
    pub fn plan(&self, strategy: &StrategyConfig, seed: u64, r: u64) -> Result<TxPlan> {
        let m = self.array.len();
        let estimate_stream = || {
            let re = if strategy.reestimate { r } else { 0 };
            RandomStream::new(seed, &[STAGE_ESTIMATE, re])
        };
        let plan = match strategy.kind {
            StrategyKind::Siso => tx_phases_siso(m, self.siso_index(strategy))?,
            StrategyKind::Bf => tx_phases_bf(&self.estimate_phases(strategy.est_noise_std, &estimate_stream())?)?,
            StrategyKind::Gbf => tx_phases_gbf(
                &self.estimate_phases(strategy.est_noise_std, &estimate_stream())?,
                strategy.sigma_phi,
                &RandomStream::new(seed, &[STAGE_GBF, r]),
            )?,
            StrategyKind::Rps => tx_phases_rps(m, strategy.n_slots, &RandomStream::new(seed, &[STAGE_RPS, r]))?,
        };
        let plan = if strategy.residual_cfo_hz.iter().any(|f| *f != 0.0) {
            let times: Vec<f64> = (0..strategy.n_slots).map(|t| t as f64 * strategy.dwell_s).collect();
            apply_cfo_drift(&plan, &strategy.residual_cfo_hz, &times)?
        } else {
            plan
        };
        Ok(plan.with_power(self.tx_power_w()))
    }
}

/// Unit phasors per slot, zero for inactive antennas.
fn slot_weights(plan: &TxPlan) -> Vec<Vec<Complex64>> {
    plan.phases
        .iter()
        .map(|slot| {
            slot.iter()
                .zip(&plan.active)
                .map(|(t, on)| if *on { Complex64::from_polar(1.0, *t) } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect()
}

#[inline]
fn combine(gains: &[Complex64], weights: &[Complex64], power_w: f64) -> f64 {
    let sum: Complex64 = gains.iter().zip(weights).map(|(h, w)| h * w).sum();
    power_w * sum.norm_sqr()
}

/// `P_tx·|Σ_active h_m·e^{jθ_m}|²` for one slot of `plan`, watts.
pub fn received_power(h: &ChannelVector, plan: &TxPlan, slot: usize) -> Result<f64> {
    if h.len() != plan.antennas() || plan.phases.get(slot).is_some_and(|s| s.len() != h.len()) {
        return Err(Error::invalid(format!(
            "plan covers {} antennas but the channel has {}",
            plan.antennas(),
            h.len()
        )));
    }
    if slot >= plan.slots() {
        return Err(Error::invalid(format!("slot {slot} out of range for {} slots", plan.slots())));
    }
    let weights: Vec<Complex64> = plan.phases[slot]
        .iter()
        .zip(&plan.active)
        .map(|(t, on)| if *on { Complex64::from_polar(1.0, *t) } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(combine(&h.gains, &weights, plan.per_antenna_power_w))
}

/// RSS over a sampling plane for one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerField {
    pub plane: SamplingPlane,
    /// Row-major dBm values, clamped at [`FLOOR_DBM`].
    pub values_dbm: Vec<f64>,
    pub strategy: StrategyConfig,
    pub seed: u64,
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub target: Position3D,
}

impl PowerField {
    pub fn nx(&self) -> usize {
        self.plane.nx()
    }

    pub fn ny(&self) -> usize {
        self.plane.ny()
    }

    pub fn wavelength(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values_dbm[self.plane.flat_index(i, j)]
    }

    /// Value of the grid cell nearest to `(x, y)`.
    pub fn value_near(&self, x: f64, y: f64) -> f64 {
        let (i, j) = self.plane.nearest_cell(x, y);
        self.value_at(i, j)
    }
}

fn per_point<F>(scenario: &Scenario, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    scenario
        .plane
        .points()
        .par_iter()
        .map(|p| scenario.channel_at(*p).map(|h| f(&h.gains)))
        .collect()
}

fn field_from_watts(scenario: &Scenario, strategy: &StrategyConfig, seed: u64, watts: Vec<f64>) -> PowerField {
    PowerField {
        plane: scenario.plane,
        values_dbm: watts.into_iter().map(watts_to_dbm).collect(),
        strategy: strategy.clone(),
        seed,
        frequency_hz: scenario.carrier.frequency_hz(),
        tx_power_dbm: scenario.tx_power_dbm,
        target: scenario.target,
    }
}

/// Simulates one strategy over the whole plane.
///
/// BF and SISO are deterministic. RPS reports the mean over `n_slots` slots;
/// GBF reports one realization, or the mean over `realizations` when more are
/// requested. Means are taken in watts before conversion to dBm.
pub fn simulate_field(scenario: &Scenario, strategy: &StrategyConfig, seed: u64) -> Result<PowerField> {
    scenario.check_target()?;
    strategy.validate(scenario.array.len())?;
    // With no phase error and a shared (or noiseless) estimate every GBF
    // realization is the same plan; evaluating it once keeps σ = 0 bit-equal to BF.
    let varies = strategy.sigma_phi > 0.0 || (strategy.est_noise_std > 0.0 && strategy.reestimate);
    let realizations = if strategy.kind == StrategyKind::Gbf && varies { strategy.realizations } else { 1 };
    let plans = (0..realizations as u64)
        .map(|r| scenario.plan(strategy, seed, r))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<Vec<Complex64>> = plans.iter().flat_map(slot_weights).collect();
    let p_tx = scenario.tx_power_w();
    let n = weights.len() as f64;
    let watts = per_point(scenario, |h| weights.iter().map(|w| combine(h, w, p_tx)).sum::<f64>() / n)?;
    Ok(field_from_watts(scenario, strategy, seed, watts))
}

/// Instantaneous-power fields: one per RPS slot or per GBF realization, what a
/// time-sampling receiver would record. BF and SISO yield a single field.
pub fn simulate_snapshots(
    scenario: &Scenario,
    strategy: &StrategyConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<PowerField>> {
    scenario.check_target()?;
    strategy.validate(scenario.array.len())?;
    if count == 0 {
        return Err(Error::invalid("snapshot count must be >= 1"));
    }
    let weights: Vec<Vec<Complex64>> = match strategy.kind {
        StrategyKind::Rps => {
            let cfg = StrategyConfig {
                n_slots: count,
                ..strategy.clone()
            };
            slot_weights(&scenario.plan(&cfg, seed, 0)?)
        }
        StrategyKind::Gbf => (0..count as u64)
            .map(|r| scenario.plan(strategy, seed, r).map(|p| slot_weights(&p).swap_remove(0)))
            .collect::<Result<_>>()?,
        StrategyKind::Bf | StrategyKind::Siso => slot_weights(&scenario.plan(strategy, seed, 0)?)
            .into_iter()
            .take(1)
            .collect(),
    };
    let p_tx = scenario.tx_power_w();
    let per_slot: Vec<Vec<f64>> = scenario
        .plane
        .points()
        .par_iter()
        .map(|p| {
            scenario
                .channel_at(*p)
                .map(|h| weights.iter().map(|w| combine(&h.gains, w, p_tx)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..weights.len())
        .map(|k| {
            let watts = per_slot.iter().map(|v| v[k]).collect();
            field_from_watts(scenario, strategy, seed, watts)
        })
        .collect())
}

/// Target power over G-BF realizations for each phase-error σ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Phase-error standard deviations, radians, ascending.
    pub sigmas: Vec<f64>,
    /// `samples_dbm[i][r]`: realization `r` at `sigmas[i]`.
    pub samples_dbm: Vec<Vec<f64>>,
    pub p50_dbm: Vec<f64>,
    /// Noiseless beamfocusing power at the target.
    pub bf_dbm: f64,
    /// Closed-form mean per σ (see [`analytic_expected_power`]), dBm.
    pub analytic_mean_dbm: Vec<f64>,
    pub seed: u64,
}

impl SweepResult {
    /// Monte Carlo mean per σ, computed in watts.
    pub fn mean_w(&self) -> Vec<f64> {
        self.samples_dbm
            .iter()
            .map(|s| s.iter().map(|v| dbm_to_watts(*v)).sum::<f64>() / s.len() as f64)
            .collect()
    }

    /// `bf_dbm − p50_dbm` per σ.
    pub fn p50_loss_db(&self) -> Vec<f64> {
        self.p50_dbm.iter().map(|p| self.bf_dbm - p).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub realizations: usize,
    pub est_noise_std: f64,
    pub reestimate: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            realizations: 1000,
            est_noise_std: 0.0,
            reestimate: true,
        }
    }
}

/// Target power of `realizations` G-BF draws at each σ in `sigmas`.
///
/// Realization `r` uses the same standard-normal draws at every σ (scaled by
/// σ), so the curves are smooth in σ and the samples for one σ do not depend
/// on which other σ values are swept.
pub fn sweep_sigma(scenario: &Scenario, sigmas: &[f64], opts: &SweepOptions, seed: u64) -> Result<SweepResult> {
    if sigmas.is_empty() {
        return Err(Error::invalid("need at least one sigma"));
    }
    if sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid("sigmas must be finite and >= 0"));
    }
    if sigmas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("sigmas must be sorted ascending"));
    }
    if opts.realizations == 0 {
        return Err(Error::invalid("realizations must be >= 1"));
    }
    if !(opts.est_noise_std >= 0.0) {
        return Err(Error::invalid("estimation noise std must be >= 0"));
    }
    let h = scenario.channel_at(scenario.target)?;
    let p_tx = scenario.tx_power_w();
    let amplitudes = h.amplitudes();
    let bf_w = analytic_expected_power(&amplitudes, p_tx, StrategyKind::Bf, 0.0, None)?;

    let samples_dbm: Vec<Vec<f64>> = sigmas
        .par_iter()
        .map(|&sigma| {
            (0..opts.realizations as u64)
                .map(|r| {
                    let est_path = if opts.reestimate { [STAGE_SWEEP_ESTIMATE, r] } else { [STAGE_SWEEP_ESTIMATE, 0] };
                    let est = RandomStream::new(seed, &est_path);
                    let phi_hat = h
                        .gains
                        .iter()
                        .enumerate()
                        .map(|(m, g)| uplink_phase_estimate(*g, opts.est_noise_std, &mut est.child(m as u64)))
                        .collect::<Result<Vec<_>>>()?;
                    let plan = tx_phases_gbf(&phi_hat, sigma, &RandomStream::new(seed, &[STAGE_SWEEP, r]))?
                        .with_power(p_tx);
                    received_power(&h, &plan, 0).map(watts_to_dbm)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let p50_dbm = samples_dbm
        .iter()
        .map(|s| crate::metrics::percentile(s, 0.5))
        .collect::<Result<_>>()?;
    let analytic_mean_dbm = sigmas
        .iter()
        .map(|s| analytic_expected_power(&amplitudes, p_tx, StrategyKind::Gbf, *s, None).map(watts_to_dbm))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        sigmas: sigmas.to_vec(),
        samples_dbm,
        p50_dbm,
        bf_dbm: watts_to_dbm(bf_w),
        analytic_mean_dbm,
        seed,
    })
}

/// Expected target power from per-path amplitudes `a_m`:
/// BF `P(Σa)²`, RPS `PΣa²`, GBF `P[e^{−σ²}((Σa)²−Σa²)+Σa²]`, SISO `P·a_k²`
/// where `k` defaults to the strongest path.
pub fn analytic_expected_power(
    amplitudes: &[f64],
    p_tx: f64,
    kind: StrategyKind,
    sigma: f64,
    siso_index: Option<usize>,
) -> Result<f64> {
    if amplitudes.is_empty() {
        return Err(Error::invalid("need at least one amplitude"));
    }
    if amplitudes.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::invalid("amplitudes must be nonnegative"));
    }
    let sum: f64 = amplitudes.iter().sum();
    let sum_sq: f64 = amplitudes.iter().map(|a| a * a).sum();
    Ok(match kind {
        StrategyKind::Bf => p_tx * sum * sum,
        StrategyKind::Rps => p_tx * sum_sq,
        StrategyKind::Gbf => {
            if !(sigma >= 0.0) {
                return Err(Error::invalid("sigma must be >= 0"));
            }
            if sigma == 0.0 {
                p_tx * sum * sum
            } else {
                p_tx * ((-sigma * sigma).exp() * (sum * sum - sum_sq) + sum_sq)
            }
        }
        StrategyKind::Siso => {
            let k = match siso_index {
                Some(k) if k < amplitudes.len() => k,
                Some(k) => return Err(Error::invalid(format!("siso index {k} out of range"))),
                None => amplitudes
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, a)| if *a > amplitudes[best] { i } else { best }),
            };
            p_tx * amplitudes[k] * amplitudes[k]
        }
    })
}
