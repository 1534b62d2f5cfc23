//! Footprint samples, incidence filtering, per-cell angular normalization,
//! and aggregation to pixel grids.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Incidence-angle acceptance window, degrees.
pub const INCIDENCE_KEEP: std::ops::RangeInclusive<f64> = 30.0..=50.0;

/// Reference incidence for angular normalization, degrees.
pub const THETA_REF: f64 = 40.0;

/// Below this distance from the cell center, inverse-distance weighting is
/// singular and the closest sample is assigned directly, m.
pub const IDS_DISTANCE_FLOOR: f64 = 0.01;

/// A geolocated, calibrated dual-polarization brightness sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FootprintSample {
    pub timestamp: DateTime<Utc>,
    /// Beam-center UTM coordinates, m.
    pub easting: f64,
    pub northing: f64,
    /// Incidence angle, degrees.
    pub incidence_deg: f64,
    /// Antenna brightness temperatures, K.
    pub tb_h: f64,
    pub tb_v: f64,
    /// 3 dB footprint ellipse axes, m.
    pub footprint_major: f64,
    pub footprint_minor: f64,
}

/// Keeps samples whose incidence lies in [`INCIDENCE_KEEP`], preserving order.
pub fn filter_incidence(samples: Vec<FootprintSample>) -> Vec<FootprintSample> {
    samples
        .into_iter()
        .filter(|s| INCIDENCE_KEEP.contains(&s.incidence_deg))
        .collect()
}

/// Georeferenced raster geometry: origin at the lower-left (south-west)
/// corner, cells of `resolution` m, `width` columns east, `height` rows north.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_easting: f64,
    pub origin_northing: f64,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    /// Smallest grid covering the samples, with the origin snapped to an
    /// integer multiple of the resolution so that aligned resolutions nest.
    pub fn cover(samples: &[FootprintSample], resolution: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("no samples to grid".into()));
        }
        if resolution <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "resolution {resolution} m not positive"
            )));
        }
        let min_e = samples.iter().map(|s| s.easting).fold(f64::INFINITY, f64::min);
        let max_e = samples.iter().map(|s| s.easting).fold(f64::NEG_INFINITY, f64::max);
        let min_n = samples.iter().map(|s| s.northing).fold(f64::INFINITY, f64::min);
        let max_n = samples.iter().map(|s| s.northing).fold(f64::NEG_INFINITY, f64::max);
        let origin_easting = (min_e / resolution).floor() * resolution;
        let origin_northing = (min_n / resolution).floor() * resolution;
        let width = ((max_e - origin_easting) / resolution).floor() as usize + 1;
        let height = ((max_n - origin_northing) / resolution).floor() as usize + 1;
        Ok(GridSpec {
            origin_easting,
            origin_northing,
            resolution,
            width,
            height,
        })
    }

    /// Fixed-extent grid (used for shared-origin nesting across resolutions).
    pub fn with_origin(
        origin_easting: f64,
        origin_northing: f64,
        resolution: f64,
        width: usize,
        height: usize,
    ) -> Self {
        GridSpec {
            origin_easting,
            origin_northing,
            resolution,
            width,
            height,
        }
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// Cell containing a point, by `[origin + i·res, origin + (i+1)·res)`.
    pub fn cell_of(&self, easting: f64, northing: f64) -> Option<(usize, usize)> {
        let col = ((easting - self.origin_easting) / self.resolution).floor();
        let row = ((northing - self.origin_northing) / self.resolution).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            None
        } else {
            Some((row as usize, col as usize))
        }
    }

    /// Center coordinates of a cell, m.
    pub fn center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_easting + (col as f64 + 0.5) * self.resolution,
            self.origin_northing + (row as f64 + 0.5) * self.resolution,
        )
    }
}

/// A single-band raster with per-cell sample counts. Cells with count zero
/// are missing, never zero-filled.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    pub spec: GridSpec,
    values: Vec<f64>,
    counts: Vec<u32>,
}

impl PixelGrid {
    pub fn new_missing(spec: GridSpec) -> Self {
        PixelGrid {
            values: vec![f64::NAN; spec.cells()],
            counts: vec![0; spec.cells()],
            spec,
        }
    }

    fn idx(&self, row: usize, col: usize) -> usize {
        row * self.spec.width + col
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = self.idx(row, col);
        (self.counts[i] > 0).then(|| self.values[i])
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[self.idx(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64, count: u32) {
        let i = self.idx(row, col);
        self.values[i] = value;
        self.counts[i] = count;
    }

    pub fn clear(&mut self, row: usize, col: usize) {
        let i = self.idx(row, col);
        self.values[i] = f64::NAN;
        self.counts[i] = 0;
    }

    /// Iterate populated cells as `(row, col, value, count)`.
    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, f64, u32)> + '_ {
        (0..self.spec.height).flat_map(move |r| {
            (0..self.spec.width).filter_map(move |c| {
                let i = r * self.spec.width + c;
                (self.counts[i] > 0).then(|| (r, c, self.values[i], self.counts[i]))
            })
        })
    }

    /// Values of populated cells.
    pub fn valid_values(&self) -> Vec<f64> {
        self.iter_cells().map(|(_, _, v, _)| v).collect()
    }
}

/// Groups sample indices by containing cell.
fn bucket<'a>(
    samples: &'a [FootprintSample],
    spec: &GridSpec,
) -> BTreeMap<(usize, usize), Vec<&'a FootprintSample>> {
    let mut cells: BTreeMap<(usize, usize), Vec<&FootprintSample>> = BTreeMap::new();
    for s in samples {
        if let Some(cell) = spec.cell_of(s.easting, s.northing) {
            cells.entry(cell).or_default().push(s);
        }
    }
    cells
}

/// Drop-in-bucket gridding: cell value is the arithmetic mean of contained
/// samples. `band` selects the scalar to aggregate (e.g. `|s| s.tb_v`).
pub fn grid_dib<F: Fn(&FootprintSample) -> f64>(
    samples: &[FootprintSample],
    spec: &GridSpec,
    band: F,
) -> PixelGrid {
    let mut grid = PixelGrid::new_missing(*spec);
    for ((row, col), cell_samples) in bucket(samples, spec) {
        let sum: f64 = cell_samples.iter().map(|s| band(s)).sum();
        grid.set(row, col, sum / cell_samples.len() as f64, cell_samples.len() as u32);
    }
    grid
}

/// Nearest-neighbor gridding: cell value is the sample whose beam center is
/// closest to the cell center; ties break to the earliest timestamp.
pub fn grid_nn<F: Fn(&FootprintSample) -> f64>(
    samples: &[FootprintSample],
    spec: &GridSpec,
    band: F,
) -> PixelGrid {
    let mut grid = PixelGrid::new_missing(*spec);
    for ((row, col), cell_samples) in bucket(samples, spec) {
        let (ce, cn) = spec.center(row, col);
        let nearest = cell_samples
            .iter()
            .min_by(|a, b| {
                let da = (a.easting - ce).powi(2) + (a.northing - cn).powi(2);
                let db = (b.easting - ce).powi(2) + (b.northing - cn).powi(2);
                da.total_cmp(&db).then(a.timestamp.cmp(&b.timestamp))
            })
            .expect("bucket is non-empty");
        grid.set(row, col, band(nearest), cell_samples.len() as u32);
    }
    grid
}

/// Inverse-distance-squared gridding: cell value is the weighted mean of
/// contained samples with weights `1/d²` to the cell center. A sample within
/// [`IDS_DISTANCE_FLOOR`] of the center is assigned directly.
pub fn grid_ids<F: Fn(&FootprintSample) -> f64>(
    samples: &[FootprintSample],
    spec: &GridSpec,
    band: F,
) -> PixelGrid {
    let mut grid = PixelGrid::new_missing(*spec);
    for ((row, col), cell_samples) in bucket(samples, spec) {
        let (ce, cn) = spec.center(row, col);
        let dist = |s: &FootprintSample| ((s.easting - ce).powi(2) + (s.northing - cn).powi(2)).sqrt();

        let closest = cell_samples
            .iter()
            .min_by(|a, b| {
                dist(a)
                    .total_cmp(&dist(b))
                    .then(a.timestamp.cmp(&b.timestamp))
            })
            .expect("bucket is non-empty");
        let value = if dist(closest) < IDS_DISTANCE_FLOOR {
            band(closest)
        } else {
            let mut num = 0.0;
            let mut den = 0.0;
            for s in &cell_samples {
                let d = dist(s);
                let w = 1.0 / (d * d);
                num += w * band(s);
                den += w;
            }
            num / den
        };
        grid.set(row, col, value, cell_samples.len() as u32);
    }
    grid
}

/// Residual-preserving shift of per-cell samples to a reference incidence.
///
/// Fits `t(θ)` by least squares over the cell's samples and removes the
/// fitted slope: `t_norm = t - slope · (θ - θ_ref)`. With fewer than three
/// samples or an angular spread under 2° the values pass through unchanged.
pub fn normalize_to_reference_angle(theta_deg: &[f64], values: &[f64], theta_ref: f64) -> Vec<f64> {
    assert_eq!(theta_deg.len(), values.len());
    let n = values.len();
    if n < 3 {
        return values.to_vec();
    }
    let spread = theta_deg.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - theta_deg.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread < 2.0 {
        return values.to_vec();
    }
    let nf = n as f64;
    let mean_t = theta_deg.iter().sum::<f64>() / nf;
    let mean_v = values.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (t, v) in theta_deg.iter().zip(values) {
        cov += (t - mean_t) * (v - mean_v);
        var += (t - mean_t) * (t - mean_t);
    }
    let slope = cov / var;
    theta_deg
        .iter()
        .zip(values)
        .map(|(t, v)| v - slope * (t - theta_ref))
        .collect()
}

/// Applies angular normalization cell by cell to both polarizations.
pub fn normalize_samples_per_cell(
    samples: &[FootprintSample],
    spec: &GridSpec,
    theta_ref: f64,
) -> Vec<FootprintSample> {
    let mut out = samples.to_vec();
    let mut cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        if let Some(cell) = spec.cell_of(s.easting, s.northing) {
            cells.entry(cell).or_default().push(i);
        }
    }
    for idx in cells.values() {
        let thetas: Vec<f64> = idx.iter().map(|&i| samples[i].incidence_deg).collect();
        let h: Vec<f64> = idx.iter().map(|&i| samples[i].tb_h).collect();
        let v: Vec<f64> = idx.iter().map(|&i| samples[i].tb_v).collect();
        let h_norm = normalize_to_reference_angle(&thetas, &h, theta_ref);
        let v_norm = normalize_to_reference_angle(&thetas, &v, theta_ref);
        for (k, &i) in idx.iter().enumerate() {
            out[i].tb_h = h_norm[k];
            out[i].tb_v = v_norm[k];
        }
    }
    out
}
