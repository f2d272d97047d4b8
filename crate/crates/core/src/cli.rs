//! Subcommand implementations behind the `nfwpt` binary.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{load_config, parse_sigma_range, SimConfig};
use crate::engine::{analytic_expected_power, dbm_to_watts, simulate_field, simulate_snapshots, sweep_sigma, PowerField};
use crate::error::{Error, Result};
use crate::geometry::Position3D;
use crate::io::{load_field_csv, save_field_csv, save_sweep_csv, write_atomic};
use crate::metrics::{ecdf, gain_db, ks_distance, percentile, split_in_out, split_pooled, spot_region, Ecdf, Region};
use crate::strategies::StrategyKind;

/// Focal-region threshold relative to the target, dB.
pub const SPOT_THRESHOLD_DB: f64 = 3.0;
/// Upper bound on points written per ECDF file by `report`.
const ECDF_EXPORT_POINTS: usize = 2001;

fn config_with_seed(path: &Path, seed: Option<u64>) -> Result<SimConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Parses `x,y` in meters.
pub fn parse_xy(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => Ok((x, y)),
            _ => Err(Error::invalid(format!("bad coordinate pair `{s}`"))),
        },
        _ => Err(Error::invalid(format!("expected `x,y`, got `{s}`"))),
    }
}

pub fn simulate(config: &Path, strategy: Option<StrategyKind>, seed: Option<u64>, out: &Path) -> Result<String> {
    let cfg = config_with_seed(config, seed)?;
    let kind = strategy.unwrap_or(cfg.strategy.kind);
    let field = simulate_field(&cfg.scenario()?, &cfg.strategy_config(kind), cfg.seed)?;
    save_field_csv(&field, out)?;
    let t = field.target;
    Ok(format!(
        "{kind}: {} points, target RSS {:.2} dBm, seed {} -> {}",
        field.values_dbm.len(),
        field.value_near(t.x, t.y),
        cfg.seed,
        out.display()
    ))
}

pub fn sweep(
    config: &Path,
    sigmas_deg: Option<&str>,
    realizations: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<String> {
    let mut cfg = config_with_seed(config, seed)?;
    if let Some(s) = sigmas_deg {
        parse_sigma_range(s)?;
        cfg.sweep.sigmas_deg = s.to_string();
    }
    if let Some(n) = realizations {
        if n == 0 {
            return Err(Error::invalid("realizations must be >= 1"));
        }
        cfg.sweep.realizations = n;
    }
    let sigmas: Vec<f64> = cfg.sweep_sigmas_deg()?.iter().map(|d| d.to_radians()).collect();
    let result = sweep_sigma(&cfg.scenario()?, &sigmas, &cfg.sweep_options(), cfg.seed)?;
    save_sweep_csv(&result, out)?;
    let loss = result.p50_loss_db();
    Ok(format!(
        "{} sigmas x {} realizations, BF {:.2} dBm, P50 loss at {:.0} deg: {:.2} dB, seed {} -> {}",
        sigmas.len(),
        cfg.sweep.realizations,
        result.bf_dbm,
        sigmas.last().unwrap().to_degrees(),
        loss.last().unwrap(),
        cfg.seed,
        out.display()
    ))
}

fn ecdf_json(samples: &[f64]) -> Result<Value> {
    if samples.is_empty() {
        return Ok(Value::Null);
    }
    Ok(serde_json::to_value(ecdf(samples)?).expect("ECDF serializes"))
}

#[derive(Serialize)]
struct RegionStats {
    count_in: usize,
    count_out: usize,
    median_in_dbm: Option<f64>,
    median_out_dbm: Option<f64>,
    min_in_dbm: Option<f64>,
    min_out_dbm: Option<f64>,
    ks_in_out: Option<f64>,
}

fn region_stats(inside: &[f64], outside: &[f64]) -> Result<RegionStats> {
    let med = |v: &[f64]| if v.is_empty() { Ok(None) } else { percentile(v, 0.5).map(Some) };
    let min = |v: &[f64]| v.iter().cloned().reduce(f64::min);
    Ok(RegionStats {
        count_in: inside.len(),
        count_out: outside.len(),
        median_in_dbm: med(inside)?,
        median_out_dbm: med(outside)?,
        min_in_dbm: min(inside),
        min_out_dbm: min(outside),
        ks_in_out: if inside.is_empty() || outside.is_empty() {
            None
        } else {
            Some(ks_distance(inside, outside)?)
        },
    })
}

/// Spot size, in/out statistics and gains of `field` against each companion.
pub fn field_metrics(
    field: &PowerField,
    target_xy: (f64, f64),
    box_halfwidth: Option<f64>,
    companions: &[PowerField],
) -> Result<Value> {
    let target = Position3D::new(target_xy.0, target_xy.1, field.plane.z());
    let spot = spot_region(field, target, SPOT_THRESHOLD_DB)?;
    let lambda = field.wavelength();
    let region = match box_halfwidth {
        Some(hw) if hw > 0.0 => Region::Box { center: target, half_width: hw },
        Some(hw) => return Err(Error::invalid(format!("box half-width must be > 0, got {hw}"))),
        None => Region::Spot(&spot),
    };
    let (inside, outside) = split_in_out(field, region)?;

    let here = dbm_to_watts(field.value_near(target.x, target.y));
    let mut gains = serde_json::Map::new();
    for c in companions {
        if !c.plane.contains_xy(target.x, target.y) {
            return Err(Error::invalid("companion field does not cover the target"));
        }
        let mut key = c.strategy.kind.to_string();
        while gains.contains_key(&key) {
            key.push('\'');
        }
        let other = dbm_to_watts(c.value_near(target.x, target.y));
        gains.insert(key, json!(gain_db(here, other)?));
    }

    Ok(json!({
        "strategy": field.strategy.kind.to_string(),
        "seed": field.seed,
        "frequency_hz": field.frequency_hz,
        "wavelength_m": lambda,
        "target_xy_m": [target.x, target.y],
        "target_rss_dbm": spot.target_dbm,
        "spot_threshold_db": SPOT_THRESHOLD_DB,
        "spot_area_m2": spot.area_m2,
        "spot_equiv_diameter_m": spot.equivalent_diameter_m,
        "spot_diameter_over_lambda": spot.equivalent_diameter_m / lambda,
        "spot_cut_x_m": spot.cut_width_x_m,
        "spot_cut_y_m": spot.cut_width_y_m,
        "region": match region { Region::Spot(_) => json!("spot"), Region::Box { half_width, .. } => json!({"box_halfwidth_m": half_width}) },
        "region_stats": region_stats(&inside, &outside)?,
        "gain_db": gains,
        "ecdf_in": ecdf_json(&inside)?,
        "ecdf_out": ecdf_json(&outside)?,
    }))
}

pub fn metrics(
    field: &Path,
    target_xy: (f64, f64),
    box_halfwidth: Option<f64>,
    companions: &[&Path],
    out: &Path,
) -> Result<String> {
    let f = load_field_csv(field)?;
    let others = companions.iter().map(load_field_csv).collect::<Result<Vec<_>>>()?;
    let report = field_metrics(&f, target_xy, box_halfwidth, &others)?;
    write_json(out, &report)?;
    Ok(format!(
        "spot diameter {:.4} m ({:.3} lambda), area {:.4} m^2 -> {}",
        report["spot_equiv_diameter_m"].as_f64().unwrap_or(f64::NAN),
        report["spot_diameter_over_lambda"].as_f64().unwrap_or(f64::NAN),
        report["spot_area_m2"].as_f64().unwrap_or(f64::NAN),
        out.display()
    ))
}

/// Gain of `a` over `b` at one point plus field-wide statistics of the
/// per-cell difference. Both fields must share a grid.
pub fn compare(a: &Path, b: &Path, at_xy: (f64, f64)) -> Result<Value> {
    let fa = load_field_csv(a)?;
    let fb = load_field_csv(b)?;
    if fa.plane != fb.plane {
        return Err(Error::invalid("fields use different sampling planes"));
    }
    if !fa.plane.contains_xy(at_xy.0, at_xy.1) {
        return Err(Error::invalid("comparison point lies outside the plane"));
    }
    let pa = fa.value_near(at_xy.0, at_xy.1);
    let pb = fb.value_near(at_xy.0, at_xy.1);
    let diffs: Vec<f64> = fa.values_dbm.iter().zip(&fb.values_dbm).map(|(x, y)| x - y).collect();
    let mean_a: f64 = fa.values_dbm.iter().map(|v| dbm_to_watts(*v)).sum();
    let mean_b: f64 = fb.values_dbm.iter().map(|v| dbm_to_watts(*v)).sum();
    Ok(json!({
        "a": { "strategy": fa.strategy.kind.to_string(), "seed": fa.seed, "rss_dbm": pa },
        "b": { "strategy": fb.strategy.kind.to_string(), "seed": fb.seed, "rss_dbm": pb },
        "at_xy_m": [at_xy.0, at_xy.1],
        "gain_db": gain_db(dbm_to_watts(pa), dbm_to_watts(pb))?,
        "field": {
            "mean_power_gain_db": gain_db(mean_a, mean_b)?,
            "median_diff_db": percentile(&diffs, 0.5)?,
            "min_diff_db": diffs.iter().cloned().fold(f64::INFINITY, f64::min),
            "max_diff_db": diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }))
}

fn ecdf_csv(e: &Ecdf) -> String {
    let n = e.len();
    let picks: Vec<usize> = if n <= ECDF_EXPORT_POINTS {
        (0..n).collect()
    } else {
        (0..ECDF_EXPORT_POINTS)
            .map(|k| ((k as f64 / (ECDF_EXPORT_POINTS - 1) as f64) * (n - 1) as f64).round() as usize)
            .collect()
    };
    let mut out = String::from("rss_dbm,probability\n");
    for k in picks {
        out.push_str(&format!("{},{}\n", e.values[k], e.probabilities[k]));
    }
    out
}

/// Runs every strategy with one seed and writes the data behind each figure:
/// per-strategy fields, the σ sweep, ECDFs inside/outside the λ/2 box and a
/// metrics summary.
pub fn report(config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<String> {
    let cfg = config_with_seed(config, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scenario = cfg.scenario()?;
    let target = scenario.target;

    let mut fields = Vec::new();
    for kind in StrategyKind::ALL {
        let f = simulate_field(&scenario, &cfg.strategy_config(kind), cfg.seed)?;
        save_field_csv(&f, out_dir.join(format!("field_{kind}.csv")))?;
        fields.push((kind, f));
    }
    let field = |k: StrategyKind| &fields.iter().find(|(kind, _)| *kind == k).unwrap().1;
    let at_target = |k: StrategyKind| dbm_to_watts(field(k).value_near(target.x, target.y));

    let sigmas: Vec<f64> = cfg.sweep_sigmas_deg()?.iter().map(|d| d.to_radians()).collect();
    let sweep = sweep_sigma(&scenario, &sigmas, &cfg.sweep_options(), cfg.seed)?;
    save_sweep_csv(&sweep, out_dir.join("sweep.csv"))?;

    let bf = field(StrategyKind::Bf);
    let spot = spot_region(bf, target, SPOT_THRESHOLD_DB)?;
    let lambda = scenario.carrier.wavelength();
    let region = Region::Box {
        center: target,
        half_width: cfg.box_halfwidth(),
    };

    let mut distributions = serde_json::Map::new();
    for kind in StrategyKind::ALL {
        let snaps = simulate_snapshots(&scenario, &cfg.strategy_config(kind), cfg.ecdf.snapshots, cfg.seed)?;
        let (inside, outside) = split_pooled(&snaps, region)?;
        for (name, samples) in [("in", &inside), ("out", &outside)] {
            if !samples.is_empty() {
                let path = out_dir.join(format!("ecdf_{kind}_{name}.csv"));
                write_atomic(&path, ecdf_csv(&ecdf(samples)?).as_bytes())?;
            }
        }
        distributions.insert(kind.to_string(), serde_json::to_value(region_stats(&inside, &outside)?).unwrap());
    }

    let h = scenario.channel_at(target)?;
    let amps = h.amplitudes();
    let p_tx = scenario.tx_power_w();
    let expected = |k: StrategyKind| analytic_expected_power(&amps, p_tx, k, 0.0, Some(scenario.siso_index(&cfg.strategy_config(k))));
    let sigma_gbf = cfg.strategy_config(StrategyKind::Gbf).sigma_phi;
    let loss_at = |deg: f64| {
        sweep
            .sigmas
            .iter()
            .position(|s| (s.to_degrees() - deg).abs() < 1e-9)
            .map(|i| sweep.p50_loss_db()[i])
    };

    let summary = json!({
        "seed": cfg.seed,
        "frequency_hz": scenario.carrier.frequency_hz(),
        "wavelength_m": lambda,
        "antennas": scenario.array.len(),
        "siso_index": scenario.siso_index(&cfg.strategy_config(StrategyKind::Siso)),
        "target_m": [target.x, target.y, target.z],
        "target_rss_dbm": {
            "siso": field(StrategyKind::Siso).value_near(target.x, target.y),
            "rps": field(StrategyKind::Rps).value_near(target.x, target.y),
            "bf": bf.value_near(target.x, target.y),
            "gbf": field(StrategyKind::Gbf).value_near(target.x, target.y),
        },
        "spot_area_m2": spot.area_m2,
        "spot_equiv_diameter_m": spot.equivalent_diameter_m,
        "spot_diameter_over_lambda": spot.equivalent_diameter_m / lambda,
        "spot_cut_x_m": spot.cut_width_x_m,
        "spot_cut_y_m": spot.cut_width_y_m,
        "gain_db": {
            "bf_vs_rps": gain_db(at_target(StrategyKind::Bf), at_target(StrategyKind::Rps))?,
            "bf_vs_rps_expected": gain_db(expected(StrategyKind::Bf)?, expected(StrategyKind::Rps)?)?,
            "rps_vs_siso": gain_db(at_target(StrategyKind::Rps), at_target(StrategyKind::Siso))?,
            "bf_vs_siso": gain_db(at_target(StrategyKind::Bf), at_target(StrategyKind::Siso))?,
            "gbf_vs_bf": gain_db(at_target(StrategyKind::Gbf), at_target(StrategyKind::Bf))?,
        },
        "gbf_sigma_deg": sigma_gbf.to_degrees(),
        "p50_loss_db": { "sigma_20deg": loss_at(20.0), "sigma_40deg": loss_at(40.0) },
        "ecdf_region": { "box_halfwidth_m": cfg.box_halfwidth(), "snapshots": cfg.ecdf.snapshots },
        "distributions": distributions,
    });
    write_json(&out_dir.join("metrics.json"), &summary)?;
    Ok(format!(
        "BF vs RPS {:.2} dB, spot {:.3} lambda, seed {} -> {}",
        summary["gain_db"]["bf_vs_rps"].as_f64().unwrap_or(f64::NAN),
        spot.equivalent_diameter_m / lambda,
        cfg.seed,
        out_dir.display()
    ))
}
