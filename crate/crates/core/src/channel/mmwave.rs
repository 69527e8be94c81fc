use serde::{Deserialize, Serialize};

use super::{db_to_linear, GainConvention, LinkState};
use crate::{Error, Result};

/// mmWave link parameters. Defaults are the 73 GHz measurement fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmWaveParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub pl_intercept_los_db: f64,
    pub pl_slope_los: f64,
    pub pl_intercept_nlos_db: f64,
    pub pl_slope_nlos: f64,
    pub tx_power_dbm: f64,
    pub antenna_gain_db: f64,
    pub gain_convention: GainConvention,
    pub noise_power_dbm: f64,
    pub noise_figure_db: f64,
    pub d_th_m: f64,
    /// LoS decay rate, 1/m (the fit reports 1/a_los = 37 m).
    pub a_los: f64,
    /// Outage growth rate, 1/m (1/a_out = 45.5 m).
    pub a_out: f64,
    pub b_out: f64,
}

impl Default for MmWaveParams {
    fn default() -> Self {
        Self {
            carrier_hz: 73e9,
            bandwidth_hz: 1e9,
            pl_intercept_los_db: 69.8,
            pl_slope_los: 2.0,
            pl_intercept_nlos_db: 82.7,
            pl_slope_nlos: 2.69,
            tx_power_dbm: 30.0,
            antenna_gain_db: 27.0,
            gain_convention: GainConvention::Combined,
            noise_power_dbm: -87.0,
            noise_figure_db: 5.0,
            d_th_m: 200.0,
            a_los: 1.0 / 37.0,
            a_out: 1.0 / 45.5,
            b_out: 3.3,
        }
    }
}

impl MmWaveParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mmwave.carrier_hz", self.carrier_hz),
            ("mmwave.bandwidth_hz", self.bandwidth_hz),
            ("mmwave.d_th_m", self.d_th_m),
            ("mmwave.a_los", self.a_los),
            ("mmwave.a_out", self.a_out),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [
            ("mmwave.pl_intercept_los_db", self.pl_intercept_los_db),
            ("mmwave.pl_slope_los", self.pl_slope_los),
            ("mmwave.pl_intercept_nlos_db", self.pl_intercept_nlos_db),
            ("mmwave.pl_slope_nlos", self.pl_slope_nlos),
            ("mmwave.tx_power_dbm", self.tx_power_dbm),
            ("mmwave.antenna_gain_db", self.antenna_gain_db),
            ("mmwave.noise_power_dbm", self.noise_power_dbm),
            ("mmwave.noise_figure_db", self.noise_figure_db),
            ("mmwave.b_out", self.b_out),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn path_loss_db(&self, d: f64, state: LinkState) -> Result<f64> {
        let (alpha, beta) = match state {
            LinkState::LoS => (self.pl_intercept_los_db, self.pl_slope_los),
            LinkState::NLoS => (self.pl_intercept_nlos_db, self.pl_slope_nlos),
            LinkState::Outage => return Err(Error::NoSnr("outage")),
        };
        Ok(alpha + 10.0 * beta * d.log10())
    }

    pub fn snr_db(&self, d: f64, state: LinkState) -> Result<f64> {
        check_distance(d)?;
        let pl = self.path_loss_db(d, state)?;
        let gain = self.gain_convention.link_gain_db(self.antenna_gain_db);
        Ok(self.tx_power_dbm + gain - pl - (self.noise_power_dbm + self.noise_figure_db))
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("distance", d))
    }
}

/// Linear average SNR from the log-distance path-loss fit of `state`.
pub fn mmwave_snr(d: f64, state: LinkState, params: &MmWaveParams) -> Result<f64> {
    Ok(db_to_linear(params.snr_db(d, state)?))
}

pub fn mmwave_capacity(d: f64, state: LinkState, params: &MmWaveParams) -> Result<f64> {
    let snr = mmwave_snr(d, state, params)?;
    Ok(params.bandwidth_hz * snr.log2_1p())
}

/// LoS-to-NLoS SNR ratio. The NLoS capacity is computed from its own
/// path-loss fit, so this ratio varies with distance.
pub fn nlos_penalty(d: f64, params: &MmWaveParams) -> Result<f64> {
    Ok(mmwave_snr(d, LinkState::LoS, params)? / mmwave_snr(d, LinkState::NLoS, params)?)
}

/// Probabilities of the three link states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateProbs {
    pub los: f64,
    pub nlos: f64,
    pub outage: f64,
}

impl StateProbs {
    pub fn sum(&self) -> f64 {
        self.los + self.nlos + self.outage
    }
}

/// Outage `max(0, 1 - exp(-a_out d + b_out))`, LoS `(1 - outage) exp(-a_los d)`,
/// NLoS the remainder.
pub fn mmwave_state_probs(d: f64, params: &MmWaveParams) -> StateProbs {
    let outage = (-(-params.a_out * d + params.b_out).exp_m1()).clamp(0.0, 1.0);
    let los = (1.0 - outage) * (-params.a_los * d).exp();
    let nlos = (1.0 - outage - los).max(0.0);
    StateProbs { los, nlos, outage }
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn snr_at_one_metre() {
        let p = MmWaveParams::default();
        assert_relative_eq!(p.snr_db(1.0, LinkState::LoS).unwrap(), 69.2, epsilon = 1e-9);
    }

    #[test]
    fn snr_and_capacity_at_100m() {
        let p = MmWaveParams::default();
        assert_relative_eq!(p.path_loss_db(100.0, LinkState::LoS).unwrap(), 109.8, epsilon = 1e-9);
        assert_relative_eq!(p.snr_db(100.0, LinkState::LoS).unwrap(), 29.2, epsilon = 1e-9);
        let c = mmwave_capacity(100.0, LinkState::LoS, &p).unwrap();
        assert_relative_eq!(c, 1e9 * (1.0 + 10f64.powf(2.92)).log2(), max_relative = 1e-12);
        assert_relative_eq!(c, 9.70e9, max_relative = 1e-3);
    }

    #[test]
    fn nlos_below_los_beyond_one_metre() {
        let p = MmWaveParams::default();
        for i in 2..=400 {
            let d = i as f64 * 0.5;
            assert!(mmwave_snr(d, LinkState::NLoS, &p).unwrap() < mmwave_snr(d, LinkState::LoS, &p).unwrap());
            assert!(
                mmwave_capacity(d, LinkState::NLoS, &p).unwrap() < mmwave_capacity(d, LinkState::LoS, &p).unwrap()
            );
            assert!(nlos_penalty(d, &p).unwrap() > 1.0);
        }
    }

    #[test]
    fn outage_state_has_no_snr() {
        let p = MmWaveParams::default();
        assert!(matches!(mmwave_snr(10.0, LinkState::Outage, &p), Err(Error::NoSnr(_))));
        assert!(mmwave_capacity(10.0, LinkState::Outage, &p).is_err());
    }

    #[test]
    fn zero_snr_zero_capacity() {
        let p = MmWaveParams { tx_power_dbm: f64::NEG_INFINITY, ..MmWaveParams::default() };
        assert_eq!(mmwave_capacity(10.0, LinkState::LoS, &p).unwrap(), 0.0);
    }

    #[test]
    fn state_probs_anchors() {
        let p = MmWaveParams::default();
        let near = mmwave_state_probs(1e-9, &p);
        assert_relative_eq!(near.los, 1.0, epsilon = 1e-9);
        assert_eq!(near.outage, 0.0);

        assert_eq!(mmwave_state_probs(100.0, &p).outage, 0.0);
        assert_eq!(mmwave_state_probs(150.0, &p).outage, 0.0);

        let far = mmwave_state_probs(200.0, &p);
        let expected = 1.0 - (-200.0 / 45.5 + 3.3f64).exp();
        assert_relative_eq!(far.outage, expected, max_relative = 1e-12);
        assert_relative_eq!(far.outage, 0.666, epsilon = 1e-3);
    }
}
