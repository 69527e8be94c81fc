use serde::{Deserialize, Serialize};

use super::{db_to_linear, dbm_to_watt, AbsorptionTable, GainConvention, BOLTZMANN, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// THz link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThzParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subbands: usize,
    pub tx_power_dbm: f64,
    pub antenna_gain_db: f64,
    pub gain_convention: GainConvention,
    /// Largest distance served by the THz link.
    pub d_th_m: f64,
    /// Receiver floor added to molecular absorption noise, W/Hz.
    pub noise_floor_psd: f64,
    pub ambient_temperature_k: f64,
    /// Outage threshold as a fraction of the SNR at `d_th_m`.
    pub gamma_th_fraction: f64,
    #[serde(skip)]
    pub absorption: AbsorptionTable,
}

impl Default for ThzParams {
    fn default() -> Self {
        Self {
            carrier_hz: 0.85e12,
            bandwidth_hz: 0.1e12,
            subbands: 100,
            tx_power_dbm: 20.0,
            antenna_gain_db: 27.0,
            gain_convention: GainConvention::PerEnd,
            d_th_m: 10.0,
            noise_floor_psd: 3e-24,
            ambient_temperature_k: 296.0,
            gamma_th_fraction: 0.405,
            absorption: AbsorptionTable::bundled(),
        }
    }
}

impl ThzParams {
    pub fn validate(&self) -> Result<()> {
        if self.subbands < 1 {
            return Err(Error::param("thz.subbands", "must be >= 1"));
        }
        positive("thz.carrier_hz", self.carrier_hz)?;
        positive("thz.bandwidth_hz", self.bandwidth_hz)?;
        positive("thz.d_th_m", self.d_th_m)?;
        positive("thz.ambient_temperature_k", self.ambient_temperature_k)?;
        if !(self.noise_floor_psd >= 0.0 && self.noise_floor_psd.is_finite()) {
            return Err(Error::param("thz.noise_floor_psd", "must be finite and >= 0"));
        }
        if !(self.gamma_th_fraction > 0.0 && self.gamma_th_fraction <= 1.0) {
            return Err(Error::param("thz.gamma_th_fraction", "must lie in (0, 1]"));
        }
        if self.tx_power_dbm.is_nan() || self.tx_power_dbm == f64::INFINITY {
            return Err(Error::param("thz.tx_power_dbm", "must be finite or -inf"));
        }
        if !self.antenna_gain_db.is_finite() {
            return Err(Error::param("thz.antenna_gain_db", "must be finite"));
        }
        let (lo, hi) = self.absorption.span();
        let (b_lo, b_hi) = self.band_edges();
        if b_lo < lo || b_hi > hi {
            return Err(Error::param(
                "thz.absorption",
                format!("table span [{lo}, {hi}] Hz does not cover band [{b_lo}, {b_hi}] Hz"),
            ));
        }
        Ok(())
    }

    pub fn band_edges(&self) -> (f64, f64) {
        (self.carrier_hz - self.bandwidth_hz / 2.0, self.carrier_hz + self.bandwidth_hz / 2.0)
    }

    /// Transmit power times link antenna gain, in W.
    pub fn effective_power_w(&self) -> f64 {
        dbm_to_watt(self.tx_power_dbm) * db_to_linear(self.gain_convention.link_gain_db(self.antenna_gain_db))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

/// |H(f, d)|^2: spreading loss times molecular absorption loss.
///
/// The phase term does not enter any capacity expression and is dropped.
pub fn thz_path_gain(freq_hz: f64, d: f64, absorption: &AbsorptionTable) -> Result<f64> {
    check_distance(d)?;
    let k = absorption.k_at(freq_hz)?;
    Ok(spreading(freq_hz) / (d * d) * (-k * d).exp())
}

/// Noise PSD: emissivity-scaled thermal noise of the medium plus the receiver floor.
pub fn thz_noise_psd(freq_hz: f64, d: f64, params: &ThzParams) -> Result<f64> {
    check_distance(d)?;
    let k = params.absorption.k_at(freq_hz)?;
    Ok(molecular_noise(BOLTZMANN * params.ambient_temperature_k, k, d) + params.noise_floor_psd)
}

pub fn thz_capacity_los(d: f64, params: &ThzParams) -> Result<f64> {
    check_distance(d)?;
    Ok(ThzBand::new(params)?.capacity_los(d))
}

pub fn thz_snr(d: f64, params: &ThzParams) -> Result<f64> {
    check_distance(d)?;
    Ok(ThzBand::new(params)?.snr(d))
}

pub fn thz_outage_prob(d: f64, params: &ThzParams) -> Result<f64> {
    ThzBand::new(params)?.outage_prob(d)
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("distance", d))
    }
}

fn spreading(freq_hz: f64) -> f64 {
    let r = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * freq_hz);
    r * r
}

fn molecular_noise(thermal_psd: f64, k: f64, d: f64) -> f64 {
    thermal_psd * -(-k * d).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subband {
    pub center_hz: f64,
    pub width_hz: f64,
    pub k_per_m: f64,
    pub power_w: f64,
    spreading: f64,
}

/// THz band split into equal sub-bands with precomputed per-band constants.
///
/// Power is spread uniformly over the sub-bands.
#[derive(Debug, Clone)]
pub struct ThzBand {
    subbands: Vec<Subband>,
    thermal_psd: f64,
    floor_psd: f64,
    d_th: f64,
    gamma_th: f64,
}

impl ThzBand {
    pub fn new(params: &ThzParams) -> Result<Self> {
        params.validate()?;
        let n = params.subbands;
        let width = params.bandwidth_hz / n as f64;
        let (lo, _) = params.band_edges();
        let power = params.effective_power_w() / n as f64;
        let subbands = (0..n)
            .map(|i| {
                let center = lo + (i as f64 + 0.5) * width;
                Ok(Subband {
                    center_hz: center,
                    width_hz: width,
                    k_per_m: params.absorption.k_at(center)?,
                    power_w: power,
                    spreading: spreading(center),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut band = Self {
            subbands,
            thermal_psd: BOLTZMANN * params.ambient_temperature_k,
            floor_psd: params.noise_floor_psd,
            d_th: params.d_th_m,
            gamma_th: 0.0,
        };
        band.gamma_th = params.gamma_th_fraction * band.snr(params.d_th_m);
        Ok(band)
    }

    pub fn subbands(&self) -> &[Subband] {
        &self.subbands
    }

    pub fn d_th(&self) -> f64 {
        self.d_th
    }

    pub fn gamma_th(&self) -> f64 {
        self.gamma_th
    }

    fn snr_term(&self, s: &Subband, d: f64) -> f64 {
        let gain = s.spreading / (d * d) * (-s.k_per_m * d).exp();
        let noise = molecular_noise(self.thermal_psd, s.k_per_m, d) + self.floor_psd;
        gain * s.power_w / (s.width_hz * noise)
    }

    /// Per-sub-band capacities, in band order.
    pub fn subband_capacities(&self, d: f64) -> Vec<f64> {
        self.subbands
            .iter()
            .map(|s| s.width_hz * self.snr_term(s, d).ln_1p() / std::f64::consts::LN_2)
            .collect()
    }

    pub fn capacity_los(&self, d: f64) -> f64 {
        self.subbands
            .iter()
            .map(|s| s.width_hz * self.snr_term(s, d).ln_1p())
            .sum::<f64>()
            / std::f64::consts::LN_2
    }

    pub fn snr(&self, d: f64) -> f64 {
        self.subbands.iter().map(|s| self.snr_term(s, d)).sum()
    }

    /// Outage probability without the `d <= d_th` check.
    pub(crate) fn outage_prob_unchecked(&self, d: f64) -> f64 {
        let snr = self.snr(d);
        if snr <= 0.0 {
            return 1.0;
        }
        -(-self.gamma_th / snr).exp_m1()
    }

    pub fn outage_prob(&self, d: f64) -> Result<f64> {
        check_distance(d)?;
        if d > self.d_th {
            return Err(Error::domain("THz distance beyond d_th", d));
        }
        Ok(self.outage_prob_unchecked(d))
    }

    /// LoS capacity weighted by the probability of not being in outage.
    pub(crate) fn expected_capacity_unchecked(&self, d: f64) -> f64 {
        self.capacity_los(d) * (1.0 - self.outage_prob_unchecked(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn flat(k: f64) -> ThzParams {
        ThzParams {
            absorption: AbsorptionTable::flat(0.8e12, 0.9e12, k).unwrap(),
            ..ThzParams::default()
        }
    }

    #[test]
    fn path_gain_pure_spreading() {
        let t = AbsorptionTable::flat(0.8e12, 0.9e12, 0.0).unwrap();
        let g = thz_path_gain(0.85e12, 1.0, &t).unwrap();
        let expected = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 0.85e12)).powi(2);
        assert_relative_eq!(g, expected, max_relative = 1e-15);
        assert_relative_eq!(g, 7.89e-10, max_relative = 3e-3);
    }

    #[test]
    fn path_gain_inverse_square() {
        let t = AbsorptionTable::flat(0.8e12, 0.9e12, 0.0).unwrap();
        let g1 = thz_path_gain(0.85e12, 3.0, &t).unwrap();
        let g2 = thz_path_gain(0.85e12, 6.0, &t).unwrap();
        assert_relative_eq!(g1 / g2, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn path_gain_with_absorption() {
        let t = AbsorptionTable::flat(0.8e12, 0.9e12, 1e-2).unwrap();
        let spread = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 0.85e12 * 10.0)).powi(2);
        let g = thz_path_gain(0.85e12, 10.0, &t).unwrap();
        assert_relative_eq!(g, spread * (-0.1f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn path_gain_errors() {
        let t = AbsorptionTable::bundled();
        assert!(matches!(thz_path_gain(0.85e12, 0.0, &t), Err(Error::Domain { .. })));
        assert!(matches!(thz_path_gain(1.2e12, 1.0, &t), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn noise_psd_cases() {
        let p = flat(0.0);
        assert_eq!(thz_noise_psd(0.85e12, 5.0, &p).unwrap(), p.noise_floor_psd);

        let p = flat(1e-2);
        let v = thz_noise_psd(0.85e12, 10.0, &p).unwrap();
        let expected = BOLTZMANN * 296.0 * (1.0 - (-0.1f64).exp()) + p.noise_floor_psd;
        assert_relative_eq!(v, expected, max_relative = 1e-12);

        let far = thz_noise_psd(0.85e12, 1e6, &p).unwrap();
        assert_relative_eq!(far, BOLTZMANN * 296.0 + p.noise_floor_psd, max_relative = 1e-12);
        assert!(thz_noise_psd(0.85e12, -1.0, &p).is_err());
    }

    #[test]
    fn zero_power_gives_zero_capacity() {
        let p = ThzParams { tx_power_dbm: f64::NEG_INFINITY, ..ThzParams::default() };
        assert_eq!(thz_capacity_los(5.0, &p).unwrap(), 0.0);
        assert_eq!(thz_snr(5.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn single_band_unit_snr_gives_bandwidth() {
        // One sub-band, no absorption, floor chosen so the SNR is exactly 1.
        let mut p = flat(0.0);
        p.subbands = 1;
        p.tx_power_dbm = 0.0;
        p.gain_convention = GainConvention::Combined;
        p.antenna_gain_db = 0.0;
        let d = 2.0;
        let gain = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * p.carrier_hz * d)).powi(2);
        p.noise_floor_psd = gain * 1e-3 / p.bandwidth_hz;
        let snr = thz_snr(d, &p).unwrap();
        assert_relative_eq!(snr, 1.0, max_relative = 1e-12);
        assert_relative_eq!(thz_capacity_los(d, &p).unwrap(), p.bandwidth_hz, max_relative = 1e-12);
    }

    #[test]
    fn snr_single_band_is_plain_ratio() {
        let mut p = flat(1e-2);
        p.subbands = 1;
        let d = 7.0;
        let g = thz_path_gain(p.carrier_hz, d, &p.absorption).unwrap();
        let n = thz_noise_psd(p.carrier_hz, d, &p).unwrap();
        let st = p.effective_power_w() / p.bandwidth_hz;
        assert_relative_eq!(thz_snr(d, &p).unwrap(), g * st / n, max_relative = 1e-12);
    }

    #[test]
    fn default_band_meets_terabit_at_10m() {
        let p = ThzParams { tx_power_dbm: 0.0, ..ThzParams::default() };
        let c = thz_capacity_los(10.0, &p).unwrap();
        assert!(c >= 1e12, "{c:e}");
    }

    #[test]
    fn snr_decreasing_with_distance() {
        let p = ThzParams::default();
        assert!(thz_snr(5.0, &p).unwrap() > thz_snr(10.0, &p).unwrap());
    }

    #[test]
    fn outage_anchor_values() {
        let mut p = ThzParams { gamma_th_fraction: 1.0, ..ThzParams::default() };
        let v = thz_outage_prob(10.0, &p).unwrap();
        assert_relative_eq!(v, 1.0 - (-1.0f64).exp(), max_relative = 1e-12);

        p.gamma_th_fraction = 0.5;
        let v = thz_outage_prob(10.0, &p).unwrap();
        assert_relative_eq!(v, 1.0 - (-0.5f64).exp(), max_relative = 1e-12);

        p.gamma_th_fraction = 1e-12;
        assert!(thz_outage_prob(10.0, &p).unwrap() < 1e-11);
    }

    #[test]
    fn outage_undefined_beyond_threshold() {
        let p = ThzParams::default();
        assert!(matches!(thz_outage_prob(10.5, &p), Err(Error::Domain { .. })));
    }

    #[test]
    fn rejects_band_outside_table() {
        let p = ThzParams { bandwidth_hz: 0.3e12, ..ThzParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParam { name: "thz.absorption", .. })));
    }
}
