//! Voltage-to-brightness-temperature calibration.
//!
//! Each sampling cycle records detector voltages at the active cold source
//! (ACS), the ambient matched resistive source (RS), and the H/V antenna
//! switches, together with physical temperatures of the references and the
//! antenna-cable path. The RS brightness is taken equal to its physical
//! temperature; the ACS brightness varies linearly with its physical
//! temperature. Gain and offset follow from the two references, the switch
//! input temperature from the gain applied to the antenna voltage, and the
//! antenna temperature from undoing the transmission-path absorption. Daily
//! additive offsets per polarization come from cold-sky views.

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::PlatformPose;

/// Plausible physical temperature band, K; records outside are dropped.
pub const TEMP_PLAUSIBLE: std::ops::RangeInclusive<f64> = 200.0..=350.0;

/// Minimum reference-voltage separation treated as a working switch cycle, V.
pub const DEFAULT_VOLTAGE_EPS: f64 = 1e-6;

/// Default cold-sky brightness temperature, K.
pub const DEFAULT_SKY_TB: f64 = 5.0;

/// Calibrated brightness band considered physically plausible for ground
/// scenes, K. Samples outside are dropped by the batch pipeline.
pub const TB_PLAUSIBLE: std::ops::RangeInclusive<f64> = 50.0..=330.0;

/// One raw sampling cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiometerRecord {
    pub timestamp: DateTime<Utc>,
    /// Detector voltages at the ACS, RS, H and V switch positions, V.
    pub u_acs: f64,
    pub u_rs: f64,
    pub u_h: f64,
    pub u_v: f64,
    /// Physical temperatures, K.
    pub t_acs: f64,
    pub t_rs: f64,
    pub t_ant: f64,
    pub t_cab: f64,
    pub pose: PlatformPose,
}

impl RadiometerRecord {
    /// True when all physical temperatures lie in the plausible band.
    pub fn temps_plausible(&self) -> bool {
        [self.t_acs, self.t_rs, self.t_ant, self.t_cab]
            .iter()
            .all(|t| TEMP_PLAUSIBLE.contains(t))
    }

    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

/// ACS characterization and antenna-cable loss.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AcsCharacterization {
    /// Slope of the ACS brightness against its physical temperature.
    pub m: f64,
    /// Offset of the ACS brightness, K.
    pub b: f64,
    /// Cumulated antenna-cable loss, dB, <= 0.
    pub l_db: f64,
}

impl AcsCharacterization {
    pub fn validate(&self) -> Result<()> {
        if self.l_db > 0.0 {
            return Err(Error::LossOutOfRange { l_db: self.l_db });
        }
        Ok(())
    }

    /// Absorption coefficient of the antenna-cable system, in [0, 1).
    pub fn absorption(&self) -> Result<f64> {
        self.validate()?;
        Ok(1.0 - 10f64.powf(self.l_db / 10.0))
    }
}

/// Additive brightness offsets for one calendar day, K.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DailyOffsets {
    pub date: NaiveDate,
    pub d_h: f64,
    pub d_v: f64,
}

/// Exact-date lookup over a set of daily offsets. No interpolation.
#[derive(Debug, Clone, Default)]
pub struct OffsetTable {
    map: BTreeMap<NaiveDate, (f64, f64)>,
}

impl OffsetTable {
    pub fn new(entries: impl IntoIterator<Item = DailyOffsets>) -> Self {
        OffsetTable {
            map: entries
                .into_iter()
                .map(|o| (o.date, (o.d_h, o.d_v)))
                .collect(),
        }
    }

    pub fn get(&self, date: NaiveDate) -> Result<(f64, f64)> {
        self.map
            .get(&date)
            .copied()
            .ok_or(Error::MissingDailyOffset { date })
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// ACS brightness temperature from its physical temperature, K.
pub fn acs_brightness(t_acs: f64, cal: &AcsCharacterization) -> f64 {
    cal.m * t_acs + cal.b
}

/// Radiometer gain (K/V) and offset noise temperature (K) for one cycle.
pub fn gain_and_offset(rec: &RadiometerRecord, cal: &AcsCharacterization) -> Result<(f64, f64)> {
    gain_and_offset_with_eps(rec, cal, DEFAULT_VOLTAGE_EPS)
}

pub fn gain_and_offset_with_eps(
    rec: &RadiometerRecord,
    cal: &AcsCharacterization,
    voltage_eps: f64,
) -> Result<(f64, f64)> {
    let delta = rec.u_rs - rec.u_acs;
    if delta.abs() < voltage_eps {
        return Err(Error::DegenerateReferences { delta: delta.abs() });
    }
    let tb_acs = acs_brightness(rec.t_acs, cal);
    let gain = (rec.t_rs - tb_acs) / delta;
    let offset = -gain * rec.u_rs + rec.t_rs;
    Ok((gain, offset))
}

/// Switch-input brightness temperature from a detector voltage, K.
pub fn switch_input_tb(u_p: f64, gain: f64, offset: f64) -> f64 {
    gain * u_p + offset
}

/// Antenna-referenced brightness temperature, K.
///
/// Removes the transmission-path emission (`alpha` fraction of the mean
/// antenna/cable temperature) and applies the daily polarized offset `d_p`.
pub fn antenna_tb(
    tb_in: f64,
    cal: &AcsCharacterization,
    t_ant: f64,
    t_cab: f64,
    d_p: f64,
) -> Result<f64> {
    let alpha = cal.absorption()?;
    let t_tp = (t_ant + t_cab) / 2.0;
    Ok((tb_in - alpha * t_tp) / (1.0 - alpha) + d_p)
}

/// Antenna brightness for both polarizations of one record, `(tb_h, tb_v)`.
pub fn calibrate_record(
    rec: &RadiometerRecord,
    cal: &AcsCharacterization,
    d_h: f64,
    d_v: f64,
) -> Result<(f64, f64)> {
    let (gain, offset) = gain_and_offset(rec, cal)?;
    let tb_h_in = switch_input_tb(rec.u_h, gain, offset);
    let tb_v_in = switch_input_tb(rec.u_v, gain, offset);
    Ok((
        antenna_tb(tb_h_in, cal, rec.t_ant, rec.t_cab, d_h)?,
        antenna_tb(tb_v_in, cal, rec.t_ant, rec.t_cab, d_v)?,
    ))
}

/// Counters for records the batch pipeline refused to calibrate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RejectStats {
    /// Physical temperature outside [`TEMP_PLAUSIBLE`].
    pub out_of_range_temps: usize,
    /// Reference voltages too close to form a gain.
    pub degenerate_references: usize,
    /// No daily offset entry for the record's day.
    pub missing_offsets: usize,
    /// Calibrated brightness outside [`TB_PLAUSIBLE`].
    pub implausible_tb: usize,
}

impl RejectStats {
    pub fn total(&self) -> usize {
        self.out_of_range_temps
            + self.degenerate_references
            + self.missing_offsets
            + self.implausible_tb
    }
}

/// A calibrated cycle awaiting geolocation.
#[derive(Debug, Clone)]
pub struct CalibratedCycle {
    pub timestamp: DateTime<Utc>,
    pub pose: PlatformPose,
    pub tb_h: f64,
    pub tb_v: f64,
}

/// Calibrate a batch of records, dropping rejects and counting why.
///
/// Offsets are looked up per record date, so a table covering one day leaves
/// records of every other day uncalibrated (counted under `missing_offsets`).
pub fn calibrate_batch(
    records: &[RadiometerRecord],
    cal: &AcsCharacterization,
    offsets: &OffsetTable,
) -> (Vec<CalibratedCycle>, RejectStats) {
    let mut out = Vec::with_capacity(records.len());
    let mut stats = RejectStats::default();
    for rec in records {
        if !rec.temps_plausible() {
            stats.out_of_range_temps += 1;
            continue;
        }
        let (d_h, d_v) = match offsets.get(rec.date()) {
            Ok(d) => d,
            Err(_) => {
                stats.missing_offsets += 1;
                continue;
            }
        };
        let (tb_h, tb_v) = match calibrate_record(rec, cal, d_h, d_v) {
            Ok(t) => t,
            Err(Error::DegenerateReferences { .. }) => {
                stats.degenerate_references += 1;
                continue;
            }
            Err(_) => {
                stats.degenerate_references += 1;
                continue;
            }
        };
        if !TB_PLAUSIBLE.contains(&tb_h) || !TB_PLAUSIBLE.contains(&tb_v) {
            stats.implausible_tb += 1;
            continue;
        }
        out.push(CalibratedCycle {
            timestamp: rec.timestamp,
            pose: rec.pose,
            tb_h,
            tb_v,
        });
    }
    (out, stats)
}

/// Median of a slice (mean of middle pair for even lengths).
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Mean after discarding values beyond 3 median absolute deviations.
fn robust_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let med = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&mut dev);
    let keep: Vec<f64> = values
        .iter()
        .copied()
        .filter(|x| (x - med).abs() <= 3.0 * mad + 1e-9)
        .collect();
    keep.iter().sum::<f64>() / keep.len() as f64
}

/// Daily polarized offsets from a set of sky-pointing records.
///
/// Offsets are set so that the robust mean of the corrected sky brightness
/// equals `t_sky` on both polarizations. Sky views beyond 3 median absolute
/// deviations are discarded first (manual pointing is noisy).
pub fn sky_calibrate(
    sky_records: &[RadiometerRecord],
    cal: &AcsCharacterization,
    t_sky: f64,
) -> Result<DailyOffsets> {
    let mut tb_h = Vec::with_capacity(sky_records.len());
    let mut tb_v = Vec::with_capacity(sky_records.len());
    for rec in sky_records {
        let (h, v) = calibrate_record(rec, cal, 0.0, 0.0)?;
        tb_h.push(h);
        tb_v.push(v);
    }
    if tb_h.is_empty() {
        return Err(Error::EmptySkySet);
    }
    Ok(DailyOffsets {
        date: sky_records[0].date(),
        d_h: t_sky - robust_mean(&tb_h),
        d_v: t_sky - robust_mean(&tb_v),
    })
}

/// Internal reference state used to invert the calibration chain.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceState {
    pub t_acs: f64,
    pub t_rs: f64,
    pub t_ant: f64,
    pub t_cab: f64,
    pub u_acs: f64,
    pub u_rs: f64,
}

impl Default for ReferenceState {
    fn default() -> Self {
        ReferenceState {
            t_acs: 295.0,
            t_rs: 300.0,
            t_ant: 300.0,
            t_cab: 300.0,
            u_acs: 1.0,
            u_rs: 2.0,
        }
    }
}

/// Detector voltages `(u_h, u_v)` that calibrate back to the given antenna
/// brightness temperatures under `refs`, `cal`, and the daily offsets.
pub fn invert_calibration(
    tb_h_ant: f64,
    tb_v_ant: f64,
    refs: &ReferenceState,
    cal: &AcsCharacterization,
    d_h: f64,
    d_v: f64,
) -> Result<(f64, f64)> {
    let delta = refs.u_rs - refs.u_acs;
    if delta.abs() < DEFAULT_VOLTAGE_EPS {
        return Err(Error::DegenerateReferences { delta: delta.abs() });
    }
    let tb_acs = acs_brightness(refs.t_acs, cal);
    let gain = (refs.t_rs - tb_acs) / delta;
    if gain.abs() < 1e-12 {
        return Err(Error::DegenerateReferences { delta: gain.abs() });
    }
    let offset = -gain * refs.u_rs + refs.t_rs;
    let alpha = cal.absorption()?;
    let t_tp = (refs.t_ant + refs.t_cab) / 2.0;
    let u_of = |tb_ant: f64, d_p: f64| {
        let tb_in = (1.0 - alpha) * (tb_ant - d_p) + alpha * t_tp;
        (tb_in - offset) / gain
    };
    Ok((u_of(tb_h_ant, d_h), u_of(tb_v_ant, d_v)))
}
