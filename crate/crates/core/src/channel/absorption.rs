use std::io::Read;
use std::path::Path;

use crate::{Error, Result};

/// Upper sanity bound on the absorption coefficient, in 1/cm.
pub const MAX_K_PER_CM: f64 = 100.0;

const DEFAULT_TABLE_CSV: &str = include_str!("../../data/absorption_0p8_0p9_thz.csv");

/// Sampled medium absorption coefficient k(f), stored in 1/m.
///
/// Values between samples are linearly interpolated. Queries outside the
/// sampled span are an error rather than being clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTable {
    freqs_hz: Vec<f64>,
    k_per_m: Vec<f64>,
}

impl AbsorptionTable {
    /// Builds a table from `(frequency [Hz], k [1/m])` pairs.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::param("absorption", "need at least 2 entries"));
        }
        for w in entries.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::param(
                    "absorption",
                    format!("frequencies not strictly increasing at {} Hz", w[1].0),
                ));
            }
        }
        for &(f, k) in &entries {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::param("absorption", format!("bad frequency {f}")));
            }
            if !k.is_finite() || k < 0.0 || k / 100.0 > MAX_K_PER_CM {
                return Err(Error::param(
                    "absorption",
                    format!("k = {k} 1/m at {f} Hz outside [0, {MAX_K_PER_CM}] 1/cm"),
                ));
            }
        }
        let (freqs_hz, k_per_m) = entries.into_iter().unzip();
        Ok(Self { freqs_hz, k_per_m })
    }

    /// Flat table with the same k over `[lo_hz, hi_hz]`.
    pub fn flat(lo_hz: f64, hi_hz: f64, k_per_m: f64) -> Result<Self> {
        Self::new(vec![(lo_hz, k_per_m), (hi_hz, k_per_m)])
    }

    /// Bundled 101-point table over the 0.8-0.9 THz transmission window.
    pub fn bundled() -> Self {
        Self::from_csv(DEFAULT_TABLE_CSV.as_bytes()).expect("bundled absorption table is valid")
    }

    /// Parses `frequency_hz,k_per_cm` CSV (header required).
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
        if headers.len() != 2 || &headers[0] != "frequency_hz" || &headers[1] != "k_per_cm" {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `frequency_hz,k_per_cm`".into(),
            });
        }
        let mut entries = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| csv_err(line, e))?;
            let f = parse_field(&rec, 0, line)?;
            let k_cm = parse_field(&rec, 1, line)?;
            entries.push((f, k_cm * 100.0));
        }
        Self::new(entries)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.freqs_hz[0], *self.freqs_hz.last().unwrap())
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// Iterates `(frequency [Hz], k [1/m])`.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs_hz.iter().copied().zip(self.k_per_m.iter().copied())
    }

    /// k(f) in 1/m.
    pub fn k_at(&self, freq_hz: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if !(freq_hz >= lo && freq_hz <= hi) {
            return Err(Error::Extrapolation { freq_hz, lo_hz: lo, hi_hz: hi });
        }
        let j = self.freqs_hz.partition_point(|&f| f <= freq_hz);
        if j >= self.freqs_hz.len() {
            return Ok(*self.k_per_m.last().unwrap());
        }
        let (f0, f1) = (self.freqs_hz[j - 1], self.freqs_hz[j]);
        let (k0, k1) = (self.k_per_m[j - 1], self.k_per_m[j]);
        Ok(k0 + (k1 - k0) * (freq_hz - f0) / (f1 - f0))
    }
}

impl Default for AbsorptionTable {
    fn default() -> Self {
        Self::bundled()
    }
}

fn csv_err(line: usize, e: csv::Error) -> Error {
    Error::Parse { line, msg: e.to_string() }
}

fn parse_field(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<f64> {
    let raw = rec.get(idx).ok_or_else(|| Error::Parse { line, msg: format!("missing column {}", idx + 1) })?;
    raw.parse::<f64>()
        .map_err(|e| Error::Parse { line, msg: format!("`{raw}`: {e}") })
}
