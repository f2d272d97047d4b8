//! Free-space line-of-sight channel with a spherical wavefront.
//!
//! Each transmitter contributes `h = λ/(4πd) · exp(-j2πd/λ)`. Amplitudes are
//! field ratios, so `|h|²` is the Friis power ratio between isotropic antennas.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{distance, AntennaArray, Position3D};
use crate::rng::RandomStream;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wraps an angle onto (−π, π].
pub fn wrap_phase(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Carrier {
    frequency_hz: f64,
    wavelength_m: f64,
}

impl Carrier {
    pub fn new(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
            return Err(Error::invalid(format!("carrier frequency must be > 0, got {frequency_hz}")));
        }
        Ok(Self {
            frequency_hz,
            wavelength_m: SPEED_OF_LIGHT / frequency_hz,
        })
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength_m
    }
}

/// Separations at or below this are treated as coincident points; grid
/// arithmetic otherwise turns an exact hit into a femtometer distance.
pub const MIN_DISTANCE_M: f64 = 1e-9;

/// Complex gain from `tx` to `rx`. Fails when the two points coincide.
pub fn los_channel(tx: Position3D, rx: Position3D, carrier: &Carrier) -> Result<Complex64> {
    let d = distance(tx, rx);
    if d <= MIN_DISTANCE_M {
        return Err(Error::Singularity { index: 0 });
    }
    let lambda = carrier.wavelength();
    let magnitude = lambda / (4.0 * PI * d);
    Ok(Complex64::from_polar(magnitude, wrap_phase(-2.0 * PI * d / lambda)))
}

/// Gains from every array element to one receive position, in array order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub gains: Vec<Complex64>,
    pub carrier: Carrier,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.gains.iter().map(|h| h.norm()).collect()
    }

    /// Phase of each gain, i.e. what a noiseless uplink pilot would measure.
    pub fn phases(&self) -> Vec<f64> {
        self.gains.iter().map(|h| h.arg()).collect()
    }

    /// Applies a common real amplitude factor, e.g. a boresight antenna gain.
    pub fn scaled(mut self, amplitude: f64) -> Self {
        for h in &mut self.gains {
            *h *= amplitude;
        }
        self
    }
}

pub fn channel_vector(array: &AntennaArray, rx: Position3D, carrier: &Carrier) -> Result<ChannelVector> {
    let gains = array
        .elements()
        .iter()
        .enumerate()
        .map(|(index, tx)| {
            los_channel(*tx, rx, carrier).map_err(|e| match e {
                Error::Singularity { .. } => Error::Singularity { index },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelVector {
        gains,
        carrier: *carrier,
    })
}

/// Phase of `h` as seen through a noisy single-tone pilot:
/// `wrap(arg(h) + n)` with `n ~ N(0, est_noise_std²)`.
pub fn uplink_phase_estimate(h: Complex64, est_noise_std: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(est_noise_std >= 0.0) || !est_noise_std.is_finite() {
        return Err(Error::invalid(format!(
            "estimation noise std must be >= 0, got {est_noise_std}"
        )));
    }
    if est_noise_std == 0.0 {
        return Ok(h.arg());
    }
    Ok(wrap_phase(h.arg() + est_noise_std * rng.standard_normal()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_ceiling_grid;
    use proptest::prelude::*;

    fn carrier() -> Carrier {
        Carrier::new(920e6).unwrap()
    }

    #[test]
    fn wavelength_at_920_mhz() {
        let c = carrier();
        assert!((c.wavelength() - 0.325_861_367_391_304_3).abs() < 1e-15);
        assert!((c.wavelength() * c.frequency_hz() - SPEED_OF_LIGHT).abs() < 1e-6);
        assert!(Carrier::new(0.0).is_err());
    }

    #[test]
    fn full_wavelength_phase_wraps_to_zero() {
        let c = carrier();
        let h = los_channel(Position3D::default(), Position3D::new(0.0, 0.0, c.wavelength()), &c).unwrap();
        assert!(h.arg().abs() < 1e-9);
    }

    #[test]
    fn quarter_wave_phase() {
        let c = carrier();
        let h = los_channel(Position3D::default(), Position3D::new(c.wavelength() / 4.0, 0.0, 0.0), &c).unwrap();
        assert!((h.arg() + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn one_meter_friis_magnitude() {
        let c = carrier();
        let h = los_channel(Position3D::default(), Position3D::new(0.0, 1.0, 0.0), &c).unwrap();
        // λ/(4π) evaluated by hand.
        assert!((h.norm() - 0.025_931_4).abs() < 1e-6);
        assert!((h.norm_sqr() - 6.7244e-4).abs() < 1e-7);
        assert!((10.0 * h.norm_sqr().log10() + 31.72).abs() < 0.01);
    }

    #[test]
    fn coincident_points_are_singular() {
        let c = carrier();
        let p = Position3D::new(1.0, 2.0, 3.0);
        assert!(matches!(los_channel(p, p, &c), Err(Error::Singularity { .. })));
        let rounding = Position3D::new(1.0 - 1e-16, 2.0, 3.0);
        assert!(matches!(los_channel(p, rounding, &c), Err(Error::Singularity { .. })));
        assert!(los_channel(p, Position3D::new(1.0 + 1e-6, 2.0, 3.0), &c).is_ok());
        let arr = build_ceiling_grid(1, 3, 0.5, 3.0, Position3D::new(1.0, 2.0, 0.0)).unwrap();
        let rx = Position3D::new(1.5, 2.0, 3.0);
        assert!(matches!(channel_vector(&arr, rx, &c), Err(Error::Singularity { index: 1 })));
    }

    #[test]
    fn equidistant_elements_get_equal_gains() {
        let c = carrier();
        let arr = AntennaArray::new(vec![Position3D::new(-1.0, 0.0, 2.0), Position3D::new(1.0, 0.0, 2.0)]).unwrap();
        let v = channel_vector(&arr, Position3D::default(), &c).unwrap();
        assert_eq!(v.gains[0], v.gains[1]);
    }

    #[test]
    fn single_element_vector_matches_los() {
        let c = carrier();
        let tx = Position3D::new(0.2, 0.1, 2.4);
        let rx = Position3D::new(0.0, 0.0, 1.0);
        let arr = AntennaArray::new(vec![tx]).unwrap();
        let v = channel_vector(&arr, rx, &c).unwrap();
        assert_eq!(v.gains, vec![los_channel(tx, rx, &c).unwrap()]);
    }

    #[test]
    fn default_geometry_power_sum_matches_per_element() {
        let c = carrier();
        let arr = build_ceiling_grid(4, 8, 0.6, 2.4, Position3D::new(-2.1, -0.9, 0.0))
            .unwrap()
            .truncated(1)
            .unwrap();
        let rx = Position3D::new(0.0, 0.0, 1.0);
        let v = channel_vector(&arr, rx, &c).unwrap();
        assert_eq!(v.len(), 31);
        let total: f64 = v.gains.iter().map(|h| h.norm_sqr()).sum();
        let brute: f64 = arr
            .elements()
            .iter()
            .map(|e| {
                let d = ((e.x - rx.x).powi(2) + (e.y - rx.y).powi(2) + (e.z - rx.z).powi(2)).sqrt();
                (c.wavelength() / (4.0 * PI * d)).powi(2)
            })
            .sum();
        assert!((total - brute).abs() / brute < 1e-12);
    }

    #[test]
    fn noiseless_estimate_is_exact() {
        let mut rng = RandomStream::new(0, &[]);
        let h = Complex64::from_polar(0.01, 0.3);
        assert_eq!(uplink_phase_estimate(h, 0.0, &mut rng).unwrap(), h.arg());
        assert!(uplink_phase_estimate(h, -0.1, &mut rng).is_err());
    }

    #[test]
    fn noisy_estimate_is_wrapped() {
        let h = Complex64::from_polar(1.0, PI - 0.01);
        for i in 0..2000 {
            let mut rng = RandomStream::new(3, &[i]);
            let v = uplink_phase_estimate(h, 0.1, &mut rng).unwrap();
            assert!(v > -PI && v <= PI);
        }
    }

    #[test]
    fn noisy_estimate_circular_mean() {
        let h = Complex64::from_polar(1.0, 1.1);
        let n = 100_000u64;
        let std = 0.1;
        let (mut s, mut c) = (0.0, 0.0);
        for i in 0..n {
            let mut rng = RandomStream::new(11, &[i]);
            let v = uplink_phase_estimate(h, std, &mut rng).unwrap();
            s += v.sin();
            c += v.cos();
        }
        let mean = s.atan2(c);
        assert!((mean - 1.1).abs() < 3.0 * std / (n as f64).sqrt());
    }

    fn pos() -> impl Strategy<Value = Position3D> {
        (-5.0..5.0f64, -5.0..5.0f64, 0.0..3.0f64).prop_map(|(x, y, z)| Position3D::new(x, y, z))
    }

    proptest! {
        #[test]
        fn reciprocity_is_exact(a in pos(), b in pos()) {
            prop_assume!(a != b);
            let c = carrier();
            prop_assert_eq!(los_channel(a, b, &c).unwrap(), los_channel(b, a, &c).unwrap());
        }

        #[test]
        fn magnitude_decreases_and_phase_is_periodic(d in 0.05..10.0f64, extra in 0.001..1.0f64, k in 1u32..5) {
            let c = carrier();
            let o = Position3D::default();
            let near = los_channel(o, Position3D::new(d, 0.0, 0.0), &c).unwrap();
            let far = los_channel(o, Position3D::new(d + extra, 0.0, 0.0), &c).unwrap();
            prop_assert!(far.norm() < near.norm());
            let shifted = los_channel(o, Position3D::new(d + k as f64 * c.wavelength(), 0.0, 0.0), &c).unwrap();
            let dphi = wrap_phase(shifted.arg() - near.arg());
            prop_assert!(dphi.abs() < 1e-8);
        }

        #[test]
        fn vector_matches_elementwise(xs in proptest::collection::vec(pos(), 1..12), rx in pos()) {
            let arr = match AntennaArray::new(xs.iter().map(|p| Position3D::new(p.x, p.y, p.z + 3.5)).collect()) {
                Ok(a) => a,
                Err(_) => return Ok(()),
            };
            let c = carrier();
            let v = channel_vector(&arr, rx, &c).unwrap();
            for (g, e) in v.gains.iter().zip(arr.elements()) {
                prop_assert_eq!(*g, los_channel(*e, rx, &c).unwrap());
            }
        }

        #[test]
        fn wrap_range(t in -100.0..100.0f64) {
            let w = wrap_phase(t);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(wrap_phase(w - t).abs() < 1e-9 || (wrap_phase(w - t).abs() - 2.0 * PI).abs() < 1e-9);
        }
    }
}
