//! Focal-spot extraction and received-power statistics.

use std::collections::VecDeque;

use serde::Serialize;

use crate::engine::PowerField;
use crate::error::{Error, Result};
use crate::geometry::Position3D;

/// The connected −`threshold_db` region around the target cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalSpot {
    /// Row-major membership, same shape as the field grid.
    pub mask: Vec<bool>,
    pub nx: usize,
    pub ny: usize,
    pub target_cell: (usize, usize),
    pub target_dbm: f64,
    pub threshold_db: f64,
    pub area_m2: f64,
    pub equivalent_diameter_m: f64,
    /// Extent of the contiguous run through the target along x and along y.
    pub cut_width_x_m: f64,
    pub cut_width_y_m: f64,
}

impl FocalSpot {
    pub fn cells(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

fn target_cell(field: &PowerField, target: Position3D) -> Result<(usize, usize)> {
    if !field.plane.contains_xy(target.x, target.y) {
        return Err(Error::invalid(format!(
            "target ({}, {}) lies outside the field plane",
            target.x, target.y
        )));
    }
    Ok(field.plane.nearest_cell(target.x, target.y))
}

/// Cells at or above `target − threshold_db` that are 4-connected to the
/// target cell. Sidelobes elsewhere on the plane are excluded.
pub fn spot_region(field: &PowerField, target: Position3D, threshold_db: f64) -> Result<FocalSpot> {
    if !(threshold_db >= 0.0) {
        return Err(Error::invalid(format!("threshold must be >= 0 dB, got {threshold_db}")));
    }
    let (nx, ny) = (field.nx(), field.ny());
    let (ti, tj) = target_cell(field, target)?;
    let target_dbm = field.value_at(ti, tj);
    let level = target_dbm - threshold_db;

    let mut mask = vec![false; nx * ny];
    let mut queue = VecDeque::from([(ti, tj)]);
    mask[tj * nx + ti] = true;
    while let Some((i, j)) = queue.pop_front() {
        let mut visit = |a: usize, b: usize| {
            let k = b * nx + a;
            if !mask[k] && field.values_dbm[k] >= level {
                mask[k] = true;
                queue.push_back((a, b));
            }
        };
        if i > 0 {
            visit(i - 1, j);
        }
        if i + 1 < nx {
            visit(i + 1, j);
        }
        if j > 0 {
            visit(i, j - 1);
        }
        if j + 1 < ny {
            visit(i, j + 1);
        }
    }

    let step = field.plane.step;
    let area = mask.iter().filter(|m| **m).count() as f64 * step * step;
    let run = |len: usize, inside: &dyn Fn(usize) -> bool, start: usize| {
        let lo = (0..=start).rev().take_while(|k| inside(*k)).count();
        let hi = (start + 1..len).take_while(|k| inside(*k)).count();
        (lo + hi) as f64 * step
    };
    let cut_x = run(nx, &|i| mask[tj * nx + i], ti);
    let cut_y = run(ny, &|j| mask[j * nx + ti], tj);

    Ok(FocalSpot {
        mask,
        nx,
        ny,
        target_cell: (ti, tj),
        target_dbm,
        threshold_db,
        area_m2: area,
        equivalent_diameter_m: 2.0 * (area / std::f64::consts::PI).sqrt(),
        cut_width_x_m: cut_x,
        cut_width_y_m: cut_y,
    })
}

/// `10·log10(p_a / p_b)`.
pub fn gain_db(p_a: f64, p_b: f64) -> Result<f64> {
    if !(p_a > 0.0) || !(p_b > 0.0) {
        return Err(Error::invalid(format!("gain needs positive powers, got {p_a} and {p_b}")));
    }
    Ok(10.0 * (p_a / p_b).log10())
}

/// Which cells count as "inside" for an in/out split.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Spot(&'a FocalSpot),
    /// Axis-aligned square of half-width `half_width` centered on `center`.
    Box { center: Position3D, half_width: f64 },
}

impl Region<'_> {
    /// A λ/2 × λ/2 box around `center`.
    pub fn half_wave_box(center: Position3D, wavelength: f64) -> Region<'static> {
        Region::Box {
            center,
            half_width: wavelength / 4.0,
        }
    }

    fn mask(&self, field: &PowerField) -> Result<Vec<bool>> {
        match self {
            Region::Spot(spot) => {
                if spot.nx != field.nx() || spot.ny != field.ny() {
                    return Err(Error::invalid("focal spot grid does not match the field"));
                }
                Ok(spot.mask.clone())
            }
            Region::Box { center, half_width } => {
                // Slack keeps cells that sit exactly on the box edge.
                let tol = 1e-9 * field.plane.step;
                Ok(field
                    .plane
                    .points()
                    .iter()
                    .map(|p| {
                        (p.x - center.x).abs() <= half_width + tol && (p.y - center.y).abs() <= half_width + tol
                    })
                    .collect())
            }
        }
    }
}

/// Partitions every grid sample of `field` into (inside, outside).
pub fn split_in_out(field: &PowerField, region: Region<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mask = region.mask(field)?;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (v, m) in field.values_dbm.iter().zip(mask) {
        if m {
            inside.push(*v);
        } else {
            outside.push(*v);
        }
    }
    Ok((inside, outside))
}

/// Split over several snapshot fields with the same grid, pooled.
pub fn split_pooled(fields: &[PowerField], region: Region<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for f in fields {
        let (i, o) = split_in_out(f, region)?;
        inside.extend(i);
        outside.extend(o);
    }
    Ok((inside, outside))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ecdf {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl Ecdf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// F(x) = fraction of samples ≤ x.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.partition_point(|v| *v <= x);
        n as f64 / self.values.len() as f64
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::invalid("need at least one sample"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("samples contain NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Empirical CDF with one step of `1/n` per sample.
pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    let values = sorted(samples)?;
    let n = values.len() as f64;
    let probabilities = (1..=values.len()).map(|k| k as f64 / n).collect();
    Ok(Ecdf { values, probabilities })
}

/// Percentile with linear interpolation between order statistics at
/// position `p·(n−1)`. `p = 0.5` is the median.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("percentile fraction must be in [0, 1], got {p}")));
    }
    let v = sorted(samples)?;
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return Ok(v[lo]);
    }
    let frac = pos - lo as f64;
    Ok(v[lo] + (v[hi] - v[lo]) * frac)
}

/// Two-sample Kolmogorov–Smirnov distance `sup |F_a − F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SamplingPlane;
    use crate::strategies::{StrategyConfig, StrategyKind};
    use proptest::prelude::*;

    fn field_from(values: Vec<f64>, nx: usize, step: f64) -> PowerField {
        let ny = values.len() / nx;
        let plane = SamplingPlane::new(
            Position3D::new(0.0, 0.0, 1.0),
            (nx - 1) as f64 * step,
            (ny - 1) as f64 * step,
            step,
        )
        .unwrap();
        assert_eq!(plane.len(), values.len());
        PowerField {
            plane,
            values_dbm: values,
            strategy: StrategyConfig::new(StrategyKind::Bf),
            seed: 0,
            frequency_hz: 920e6,
            tx_power_dbm: 3.0,
            target: Position3D::new(0.0, 0.0, 1.0),
        }
    }

    #[test]
    fn uniform_field_spot_is_whole_grid() {
        let f = field_from(vec![-40.0; 25], 5, 0.1);
        let spot = spot_region(&f, Position3D::new(0.2, 0.2, 1.0), 3.0).unwrap();
        assert_eq!(spot.cells(), 25);
        assert!((spot.area_m2 - 0.25).abs() < 1e-12);
        assert!((spot.cut_width_x_m - 0.5).abs() < 1e-12);
        let (_, out) = split_in_out(&f, Region::Spot(&spot)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn spot_ignores_disconnected_sidelobe() {
        #[rustfmt::skip]
        let v = vec![
            -10.0, -50.0, -50.0, -50.0, -10.0,
            -50.0, -50.0, -11.0, -50.0, -50.0,
            -50.0, -11.0, -10.0, -12.0, -50.0,
            -50.0, -50.0, -14.0, -50.0, -50.0,
            -10.0, -50.0, -50.0, -50.0, -10.0,
        ];
        let f = field_from(v, 5, 0.1);
        let spot = spot_region(&f, Position3D::new(0.2, 0.2, 1.0), 3.0).unwrap();
        assert_eq!(spot.cells(), 4);
        assert!(!spot.mask[0] && !spot.mask[4]);
        assert!((spot.cut_width_x_m - 0.3).abs() < 1e-12);
        assert!((spot.cut_width_y_m - 0.2).abs() < 1e-12);
        assert!((spot.equivalent_diameter_m - 2.0 * (0.04 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spot_target_outside_plane() {
        let f = field_from(vec![-40.0; 9], 3, 0.1);
        assert!(spot_region(&f, Position3D::new(1.0, 0.0, 1.0), 3.0).is_err());
    }

    #[test]
    fn area_0_03_m2_is_0_6_wavelengths() {
        let area = 0.03f64;
        let d = 2.0 * (area / std::f64::consts::PI).sqrt();
        let lambda = 299_792_458.0 / 920e6;
        assert!((d - 0.195).abs() < 1e-3);
        assert!((d / lambda - 0.60).abs() < 0.01);
    }

    #[test]
    fn half_wave_box_has_17_by_17_cells() {
        let lambda = 299_792_458.0 / 920e6;
        let f = field_from(vec![-40.0; 131 * 131], 131, 0.01);
        let (inside, outside) =
            split_in_out(&f, Region::half_wave_box(Position3D::new(0.65, 0.65, 1.0), lambda)).unwrap();
        // Offsets k with |k|·0.01 ≤ λ/4 = 0.0815: k = −8..=8.
        let per_axis = (-8i32..=8).filter(|k| (*k as f64 * 0.01).abs() <= lambda / 4.0).count();
        assert_eq!(inside.len(), per_axis * per_axis);
        assert_eq!(inside.len(), 289);
        assert_eq!(inside.len() + outside.len(), 131 * 131);
    }

    #[test]
    fn gain_examples() {
        assert!((gain_db(2e-3, 1e-3).unwrap() - 3.0103).abs() < 1e-4);
        assert_eq!(gain_db(5.0, 5.0).unwrap(), 0.0);
        assert!(gain_db(0.0, 1.0).is_err());
        assert!(gain_db(1.0, -1.0).is_err());
    }

    #[test]
    fn ecdf_examples() {
        let e = ecdf(&[-3.0]).unwrap();
        assert_eq!(e.values, vec![-3.0]);
        assert_eq!(e.probabilities, vec![1.0]);
        assert_eq!(e.eval(-3.1), 0.0);
        assert_eq!(e.eval(-3.0), 1.0);
        let e = ecdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.probabilities, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert!(ecdf(&[]).is_err());
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[-50.0], 0.5).unwrap(), -50.0);
        assert_eq!(percentile(&[-60.0, -40.0], 0.5).unwrap(), -50.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 1.0).unwrap(), 4.0);
        assert_eq!(percentile(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(), 2.5);
        assert!(percentile(&[], 0.5).is_err());
        assert!(percentile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert!((ks_distance(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spot_mask_invariant_to_offset(vals in proptest::collection::vec(-80.0..-20.0f64, 36), offset in -30.0..30.0f64) {
            let f = field_from(vals.clone(), 6, 0.05);
            let g = field_from(vals.iter().map(|v| v + offset).collect(), 6, 0.05);
            let t = Position3D::new(0.1, 0.15, 1.0);
            let a = spot_region(&f, t, 3.0).unwrap();
            let b = spot_region(&g, t, 3.0).unwrap();
            // Exact unless a value sits within rounding of the threshold.
            let level = a.target_dbm - 3.0;
            prop_assume!(vals.iter().all(|v| (v - level).abs() > 1e-9));
            prop_assert_eq!(a.mask, b.mask);
        }

        #[test]
        fn spot_shrinks_with_threshold(vals in proptest::collection::vec(-80.0..-20.0f64, 36), t1 in 0.0..10.0f64, dt in 0.0..10.0f64) {
            let f = field_from(vals, 6, 0.05);
            let t = Position3D::new(0.1, 0.15, 1.0);
            let small = spot_region(&f, t, t1).unwrap();
            let large = spot_region(&f, t, t1 + dt).unwrap();
            prop_assert!(small.equivalent_diameter_m <= large.equivalent_diameter_m);
            prop_assert!(small.mask.iter().zip(&large.mask).all(|(s, l)| !s || *l));
            prop_assert!(small.mask[small.target_cell.1 * 6 + small.target_cell.0]);
        }

        #[test]
        fn gain_antisymmetry(a in 1e-12..1.0f64, b in 1e-12..1.0f64) {
            prop_assert!((gain_db(a, b).unwrap() + gain_db(b, a).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn ecdf_is_distribution(xs in proptest::collection::vec(-100.0..0.0f64, 1..200)) {
            let e = ecdf(&xs).unwrap();
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(e.probabilities.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*e.probabilities.last().unwrap(), 1.0);
            prop_assert!(e.probabilities.iter().all(|p| *p > 0.0 && *p <= 1.0));
        }

        #[test]
        fn split_partitions(vals in proptest::collection::vec(-80.0..-20.0f64, 49), hw in 0.0..0.4f64) {
            let f = field_from(vals, 7, 0.05);
            let (i, o) = split_in_out(&f, Region::Box { center: Position3D::new(0.15, 0.15, 1.0), half_width: hw }).unwrap();
            prop_assert_eq!(i.len() + o.len(), 49);
        }

        #[test]
        fn percentile_within_range(xs in proptest::collection::vec(-100.0..0.0f64, 1..50), p in 0.0..=1.0f64) {
            let v = percentile(&xs, p).unwrap();
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v >= lo && v <= hi);
        }
    }
}
