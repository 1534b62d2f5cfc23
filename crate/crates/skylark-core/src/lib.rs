//! skylark-core: processing chain for drone-mounted L-band radiometers.
//!
//! The crate covers the full path from raw detector voltages to soil-moisture
//! and vegetation-optical-depth products:
//!
//! * [`calibration`] — voltage-to-brightness-temperature conversion against the
//!   internal active cold source / resistive source references, with daily
//!   sky-view offsets.
//! * [`geo`] — WGS84/UTM projection, attitude-corrected beam geolocation, and
//!   3 dB footprint dimensions.
//! * [`gridding`] — incidence filtering, per-cell angular normalization, and
//!   drop-in-bucket / nearest-neighbor / inverse-distance-squared gridding.
//! * [`forward`] — zeroth-order tau-omega emission model with the Mironov soil
//!   dielectric mixing model and Fresnel surface reflectivity.
//! * [`retrieval`] — deterministic SCA / DCA / MT-DCA inversion by bounded
//!   derivative-free optimization, plus the NDVI → VWC → tau ancillary chain.
//! * [`bayes`] — affine-invariant ensemble MCMC over the same forward model,
//!   with MAP / posterior-spread summaries.
//! * [`evaluation`] — probe rescaling, retrieval-to-probe pairing, and
//!   bias / RMSE / ubRMSE / correlation metrics.
//! * [`campaign`] — synthetic scene and flight simulator used for closed-loop
//!   verification of every other module.
//! * [`io`] — CSV schemas, ESRI ASCII rasters with JSON sidecars, and the
//!   binary chain dump.

pub mod bayes;
pub mod calibration;
pub mod campaign;
pub mod error;
pub mod evaluation;
pub mod forward;
pub mod geo;
pub mod gridding;
pub mod io;
pub mod optimize;
pub mod retrieval;

pub use error::{Error, Result};
pub use forward::{ModelParams, Polarization, SurfaceState};
pub use geo::{PlatformPose, UtmPoint};
pub use gridding::{FootprintSample, GridSpec, PixelGrid};
pub use retrieval::{Algorithm, LandCover, RetrievalConfig, RetrievalResult};
