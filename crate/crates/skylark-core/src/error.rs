//! Crate-wide error type.

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The two internal reference voltages are too close to form a gain.
    #[error("degenerate reference voltages: |u_rs - u_acs| = {delta:.3e} V below epsilon")]
    DegenerateReferences { delta: f64 },

    /// Antenna-cable loss must be expressed as a non-positive dB value.
    #[error("antenna-cable loss {l_db} dB is positive; absorption would be negative")]
    LossOutOfRange { l_db: f64 },

    /// Sky calibration needs at least one sky-pointing record.
    #[error("no sky-pointing records supplied")]
    EmptySkySet,

    /// No daily offset entry exists for the record's calendar day.
    #[error("no daily offset entry for {date}")]
    MissingDailyOffset { date: NaiveDate },

    /// UTM is undefined outside the transverse Mercator latitude band.
    #[error("latitude {lat}° outside the UTM band [-80°, 84°]")]
    PolarRegion { lat: f64 },

    /// The attitude-rotated boresight does not intersect the ground plane.
    #[error("rotated boresight points at or above the horizon")]
    RayAboveHorizon,

    /// The beam edge grazes the horizon; the ground ellipse is unbounded.
    #[error("grazing geometry: incidence {incidence}° + beamwidth {beamwidth}°/2 reaches 90°")]
    GrazingGeometry { incidence: f64, beamwidth: f64 },

    /// Volumetric soil moisture outside the dielectric model's validity range.
    #[error("soil moisture {sm} m³/m³ outside [0, 0.7]")]
    OutOfRangeMoisture { sm: f64 },

    /// The stem-correction denominator 1 - NDVI_min vanishes.
    #[error("degenerate NDVI range: ndvi_min = {ndvi_min} too close to 1")]
    DegenerateNdviRange { ndvi_min: f64 },

    /// MT-DCA needs both polarizations on both days of a pair.
    #[error("missing dual-polarization observations on {date}")]
    MissingPairDay { date: NaiveDate },

    /// All MCMC walkers collapsed onto a single point.
    #[error("degenerate ensemble: all walkers share one position")]
    DegenerateEnsemble,

    /// The flight plan cannot produce any footprint inside the scene.
    #[error("flight plan outside scene: {reason}")]
    PlanOutsideScene { reason: String },

    /// A raster file or raster operation is malformed.
    #[error("invalid raster: {reason}")]
    InvalidRaster { reason: String },

    /// Catch-all for violated operation preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
