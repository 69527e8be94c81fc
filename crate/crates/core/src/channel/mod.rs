//! Capacity of the distance-switched mmWave/THz link.
//!
//! Within `(0, d_th_thz]` data rides the THz link and its capacity is weighted
//! by the THz LoS probability. Within `(d_th_thz, d_th_mm]` data rides mmWave
//! and the LoS and NLoS capacities are weighted by their state probabilities.
//! Beyond `d_th_mm` there is no link.

mod absorption;
mod mmwave;
mod thz;

use serde::{Deserialize, Serialize};

pub use absorption::{AbsorptionTable, MAX_K_PER_CM};
pub use mmwave::{mmwave_capacity, mmwave_snr, mmwave_state_probs, nlos_penalty, MmWaveParams, StateProbs};
pub use thz::{
    thz_capacity_los, thz_noise_psd, thz_outage_prob, thz_path_gain, thz_snr, Subband, ThzBand, ThzParams,
};

use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Distances below this are evaluated at this separation. Antennas never
/// coincide, and the THz spreading term diverges at zero.
pub const MIN_SEPARATION_M: f64 = 1e-3;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkState {
    LoS,
    NLoS,
    Outage,
}

/// How a single antenna-gain figure enters the link budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainConvention {
    /// The figure is the whole link gain.
    Combined,
    /// Both ends carry the figure.
    PerEnd,
}

impl GainConvention {
    pub fn link_gain_db(self, per_antenna_db: f64) -> f64 {
        match self {
            GainConvention::Combined => per_antenna_db,
            GainConvention::PerEnd => 2.0 * per_antenna_db,
        }
    }
}

/// Which band's formula serves a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Thz,
    MmWave,
    OutOfRange,
}

/// Anything that maps distance to an expected data capacity with the two
/// switching thresholds. [`CapacityModel`] is the real one; tests plug in
/// stubs.
pub trait CapacityProfile: Send + Sync {
    fn thz_threshold(&self) -> f64;

    fn mm_threshold(&self) -> f64;

    /// Capacity at `d` from the formula of `region`, whether or not `d`
    /// actually lies in that region. Integrators use this to evaluate each
    /// side of a switching boundary with its own branch.
    fn capacity_in(&self, region: Region, d: f64) -> f64;

    fn region(&self, d: f64) -> Region {
        if d > 0.0 && d <= self.thz_threshold() {
            Region::Thz
        } else if d > self.thz_threshold() && d <= self.mm_threshold() {
            Region::MmWave
        } else {
            Region::OutOfRange
        }
    }

    fn capacity(&self, d: f64) -> f64 {
        match self.region(d) {
            Region::OutOfRange => 0.0,
            r => self.capacity_in(r, d),
        }
    }

    /// Probability that the active link is in outage at `d`.
    fn outage_prob(&self, d: f64) -> f64 {
        match self.region(d) {
            Region::OutOfRange => 1.0,
            _ => 0.0,
        }
    }
}

/// Both bands with validated parameters and precomputed THz sub-bands.
#[derive(Debug, Clone)]
pub struct CapacityModel {
    thz: ThzParams,
    mmwave: MmWaveParams,
    band: ThzBand,
}

impl CapacityModel {
    pub fn new(thz: ThzParams, mmwave: MmWaveParams) -> Result<Self> {
        mmwave.validate()?;
        let band = ThzBand::new(&thz)?;
        if !(mmwave.d_th_m > thz.d_th_m) {
            return Err(Error::param(
                "mmwave.d_th_m",
                format!("must exceed thz.d_th_m ({} <= {})", mmwave.d_th_m, thz.d_th_m),
            ));
        }
        Ok(Self { thz, mmwave, band })
    }

    pub fn thz(&self) -> &ThzParams {
        &self.thz
    }

    pub fn mmwave(&self) -> &MmWaveParams {
        &self.mmwave
    }

    pub fn band(&self) -> &ThzBand {
        &self.band
    }

    pub fn thz_capacity_los(&self, d: f64) -> f64 {
        self.band.capacity_los(d.max(MIN_SEPARATION_M))
    }

    fn mm_expected(&self, d: f64) -> f64 {
        let d = d.max(MIN_SEPARATION_M);
        let probs = mmwave_state_probs(d, &self.mmwave);
        let los = mmwave_capacity(d, LinkState::LoS, &self.mmwave).unwrap_or(0.0);
        let nlos = mmwave_capacity(d, LinkState::NLoS, &self.mmwave).unwrap_or(0.0);
        los * probs.los + nlos * probs.nlos
    }
}

impl Default for CapacityModel {
    fn default() -> Self {
        Self::new(ThzParams::default(), MmWaveParams::default()).expect("defaults are valid")
    }
}

impl CapacityProfile for CapacityModel {
    fn thz_threshold(&self) -> f64 {
        self.thz.d_th_m
    }

    fn mm_threshold(&self) -> f64 {
        self.mmwave.d_th_m
    }

    fn capacity_in(&self, region: Region, d: f64) -> f64 {
        match region {
            Region::Thz => self.band.expected_capacity_unchecked(d.max(MIN_SEPARATION_M)),
            Region::MmWave => self.mm_expected(d),
            Region::OutOfRange => 0.0,
        }
    }

    fn outage_prob(&self, d: f64) -> f64 {
        let d = d.max(MIN_SEPARATION_M);
        match self.region(d) {
            Region::Thz => self.band.outage_prob_unchecked(d),
            Region::MmWave => mmwave_state_probs(d, &self.mmwave).outage,
            Region::OutOfRange => 1.0,
        }
    }
}

/// Capacity available for data at separation `d`.
pub fn combined_capacity(d: f64, model: &CapacityModel) -> Result<f64> {
    if !(d > 0.0) || d.is_nan() {
        return Err(Error::domain("distance", d));
    }
    Ok(model.capacity(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_range_is_zero() {
        let m = CapacityModel::default();
        assert_eq!(combined_capacity(250.0, &m).unwrap(), 0.0);
        assert!(combined_capacity(0.0, &m).is_err());
        assert!(combined_capacity(-3.0, &m).is_err());
    }

    #[test]
    fn closed_endpoints_pick_the_inner_band() {
        let m = CapacityModel::default();
        assert_eq!(m.region(10.0), Region::Thz);
        assert_eq!(m.region(10.0 + 1e-9), Region::MmWave);
        assert_eq!(m.region(200.0), Region::MmWave);
        assert_eq!(m.region(200.0 + 1e-9), Region::OutOfRange);
        let at_th = combined_capacity(10.0, &m).unwrap();
        assert_eq!(at_th, m.capacity_in(Region::Thz, 10.0));
    }

    #[test]
    fn terabit_to_megabit_span() {
        let m = CapacityModel::default();
        let near = combined_capacity(5.0, &m).unwrap();
        let mid = combined_capacity(50.0, &m).unwrap();
        assert!(near >= 100.0 * mid, "{near:e} vs {mid:e}");
    }

    #[test]
    fn rejects_unordered_thresholds() {
        let thz = ThzParams { d_th_m: 250.0, ..ThzParams::default() };
        let err = CapacityModel::new(thz, MmWaveParams::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParam { name: "mmwave.d_th_m", .. }));
    }
}
