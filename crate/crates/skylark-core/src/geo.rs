//! Geolocation: WGS84 ↔ UTM projection, attitude-corrected beam centers,
//! and 3 dB footprint dimensions.
//!
//! Conventions: the body frame is x forward, y right, z down. The antenna
//! boresight is mounted in the forward vertical plane, `boresight_deg` off
//! nadir. Attitude rotations are intrinsic yaw-pitch-roll with positive yaw
//! clockwise from north, positive pitch nose up (which tilts the boresight
//! further off nadir), positive roll right wing down. The ground is the local
//! horizontal plane at `alt_agl` below the platform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WGS84_A: f64 = 6378137.0;
const WGS84_F: f64 = 1.0 / 298.257223563;
const K0: f64 = 0.9996;
const FALSE_EASTING: f64 = 500_000.0;
const FALSE_NORTHING_SOUTH: f64 = 10_000_000.0;

/// Platform position and attitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlatformPose {
    /// Latitude, degrees.
    pub lat: f64,
    /// Longitude, degrees.
    pub lon: f64,
    /// Height above ground, m.
    pub alt_agl: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
}

impl PlatformPose {
    pub fn validate(&self) -> Result<()> {
        if self.roll_deg.abs() >= 90.0 || self.pitch_deg.abs() >= 90.0 {
            return Err(Error::InvalidInput(format!(
                "attitude out of range: roll {}°, pitch {}°",
                self.roll_deg, self.pitch_deg
            )));
        }
        if self.alt_agl <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "altitude {} m not above ground",
                self.alt_agl
            )));
        }
        Ok(())
    }
}

/// A projected point. `north` is the hemisphere flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtmPoint {
    pub easting: f64,
    pub northing: f64,
    pub zone: u8,
    pub north: bool,
}

/// UTM zone number for a position.
pub fn utm_zone(lon: f64) -> u8 {
    (((lon + 180.0) / 6.0).floor() as i32 + 1).clamp(1, 60) as u8
}

/// Forward projection onto the WGS84 UTM grid, zone chosen from longitude.
pub fn wgs84_to_utm(lat: f64, lon: f64) -> Result<UtmPoint> {
    wgs84_to_utm_zoned(lat, lon, utm_zone(lon))
}

/// Forward projection onto a fixed zone (used to keep one campaign on a
/// single grid even near a zone boundary).
pub fn wgs84_to_utm_zoned(lat: f64, lon: f64, zone: u8) -> Result<UtmPoint> {
    if !(-80.0..=84.0).contains(&lat) {
        return Err(Error::PolarRegion { lat });
    }
    let phi = lat.to_radians();
    let lam = lon.to_radians();
    let lam0 = (zone as f64 * 6.0 - 183.0).to_radians();

    let e2 = WGS84_F * (2.0 - WGS84_F);
    let ep2 = e2 / (1.0 - e2);

    let sin_p = phi.sin();
    let cos_p = phi.cos();
    let n = WGS84_A / (1.0 - e2 * sin_p * sin_p).sqrt();
    let t = phi.tan() * phi.tan();
    let c = ep2 * cos_p * cos_p;
    let a = cos_p * (lam - lam0);

    let term1 = 1.0 - e2 / 4.0 - 3.0 * e2 * e2 / 64.0 - 5.0 * e2 * e2 * e2 / 256.0;
    let term2 = 3.0 * e2 / 8.0 + 3.0 * e2 * e2 / 32.0 + 45.0 * e2 * e2 * e2 / 1024.0;
    let term3 = 15.0 * e2 * e2 / 256.0 + 45.0 * e2 * e2 * e2 / 1024.0;
    let term4 = 35.0 * e2 * e2 * e2 / 3072.0;
    let m = WGS84_A
        * (term1 * phi - term2 * (2.0 * phi).sin() + term3 * (4.0 * phi).sin()
            - term4 * (6.0 * phi).sin());

    let a2 = a * a;
    let a3 = a2 * a;
    let a4 = a3 * a;
    let a5 = a4 * a;
    let a6 = a5 * a;

    let easting = K0
        * n
        * (a + (1.0 - t + c) * a3 / 6.0
            + (5.0 - 18.0 * t + t * t + 72.0 * c - 58.0 * ep2) * a5 / 120.0)
        + FALSE_EASTING;

    let mut northing = K0
        * (m + n
            * phi.tan()
            * (a2 / 2.0
                + (5.0 - t + 9.0 * c + 4.0 * c * c) * a4 / 24.0
                + (61.0 - 58.0 * t + t * t + 600.0 * c - 330.0 * ep2) * a6 / 720.0));
    let north = lat >= 0.0;
    if !north {
        northing += FALSE_NORTHING_SOUTH;
    }

    Ok(UtmPoint {
        easting,
        northing,
        zone,
        north,
    })
}

/// Inverse projection back to latitude/longitude, degrees.
pub fn utm_to_wgs84(p: &UtmPoint) -> (f64, f64) {
    let e2 = WGS84_F * (2.0 - WGS84_F);
    let ep2 = e2 / (1.0 - e2);
    let e1 = (1.0 - (1.0 - e2).sqrt()) / (1.0 + (1.0 - e2).sqrt());

    let x = p.easting - FALSE_EASTING;
    let y = if p.north {
        p.northing
    } else {
        p.northing - FALSE_NORTHING_SOUTH
    };

    let m = y / K0;
    let mu = m / (WGS84_A * (1.0 - e2 / 4.0 - 3.0 * e2 * e2 / 64.0 - 5.0 * e2 * e2 * e2 / 256.0));

    let e1_2 = e1 * e1;
    let e1_3 = e1_2 * e1;
    let e1_4 = e1_3 * e1;
    let phi1 = mu
        + (3.0 * e1 / 2.0 - 27.0 * e1_3 / 32.0) * (2.0 * mu).sin()
        + (21.0 * e1_2 / 16.0 - 55.0 * e1_4 / 32.0) * (4.0 * mu).sin()
        + (151.0 * e1_3 / 96.0) * (6.0 * mu).sin()
        + (1097.0 * e1_4 / 512.0) * (8.0 * mu).sin();

    let sin_p = phi1.sin();
    let cos_p = phi1.cos();
    let tan_p = phi1.tan();

    let c1 = ep2 * cos_p * cos_p;
    let t1 = tan_p * tan_p;
    let ep_sin = 1.0 - e2 * sin_p * sin_p;
    let n1 = WGS84_A / ep_sin.sqrt();
    let r1 = WGS84_A * (1.0 - e2) / ep_sin.powf(1.5);
    let d = x / (n1 * K0);

    let d2 = d * d;
    let d3 = d2 * d;
    let d4 = d3 * d;
    let d5 = d4 * d;
    let d6 = d5 * d;

    let lat = phi1
        - (n1 * tan_p / r1)
            * (d2 / 2.0
                - (5.0 + 3.0 * t1 + 10.0 * c1 - 4.0 * c1 * c1 - 9.0 * ep2) * d4 / 24.0
                + (61.0 + 90.0 * t1 + 298.0 * c1 + 45.0 * t1 * t1 - 252.0 * ep2 - 3.0 * c1 * c1)
                    * d6
                    / 720.0);
    let lon = (d - (1.0 + 2.0 * t1 + c1) * d3 / 6.0
        + (5.0 - 2.0 * c1 + 28.0 * t1 - 3.0 * c1 * c1 + 8.0 * ep2 + 24.0 * t1 * t1) * d5 / 120.0)
        / cos_p;

    let lon0 = p.zone as f64 * 6.0 - 183.0;
    (lat.to_degrees(), lon0 + lon.to_degrees())
}

/// A geolocated beam-ground intersection.
#[derive(Debug, Clone, Copy)]
pub struct BeamCenter {
    pub easting: f64,
    pub northing: f64,
    pub zone: u8,
    pub north: bool,
    /// Angle between the ray and the local vertical, degrees.
    pub incidence_deg: f64,
}

/// Boresight direction in NED after the intrinsic yaw-pitch-roll rotation.
fn rotated_boresight(pose: &PlatformPose, boresight_deg: f64) -> [f64; 3] {
    let tb = boresight_deg.to_radians();
    let (sr, cr) = pose.roll_deg.to_radians().sin_cos();
    let (sp, cp) = pose.pitch_deg.to_radians().sin_cos();
    let (sy, cy) = pose.yaw_deg.to_radians().sin_cos();

    // Body-frame boresight in the forward vertical plane.
    let v = [tb.sin(), 0.0, tb.cos()];
    // Roll about x: positive right wing down.
    let v = [v[0], cr * v[1] - sr * v[2], sr * v[1] + cr * v[2]];
    // Pitch about y: positive nose up (x tips toward -z).
    let v = [cp * v[0] + sp * v[2], v[1], -sp * v[0] + cp * v[2]];
    // Yaw about z: positive clockwise from north.
    [cy * v[0] - sy * v[1], sy * v[0] + cy * v[1], v[2]]
}

/// Ground intersection of the rotated boresight under a flat-earth model.
pub fn beam_center(pose: &PlatformPose, boresight_deg: f64) -> Result<BeamCenter> {
    pose.validate()?;
    let v = rotated_boresight(pose, boresight_deg);
    if v[2] <= 1e-12 {
        return Err(Error::RayAboveHorizon);
    }
    let platform = wgs84_to_utm(pose.lat, pose.lon)?;
    let scale = pose.alt_agl / v[2];
    Ok(BeamCenter {
        easting: platform.easting + v[1] * scale,
        northing: platform.northing + v[0] * scale,
        zone: platform.zone,
        north: platform.north,
        incidence_deg: v[2].clamp(-1.0, 1.0).acos().to_degrees(),
    })
}

/// 3 dB footprint ellipse `(major, minor)` on the ground, m.
///
/// The major axis is the along-look extent from the cone-ground intersection;
/// the minor axis is the slant-plane width `2 R tan(β/2)` with `R = alt/cosθ`.
pub fn footprint_dims(alt_agl: f64, incidence_deg: f64, beamwidth_deg: f64) -> Result<(f64, f64)> {
    if alt_agl <= 0.0 || beamwidth_deg <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "altitude {alt_agl} m / beamwidth {beamwidth_deg}° must be positive"
        )));
    }
    let half = beamwidth_deg / 2.0;
    if incidence_deg + half >= 90.0 {
        return Err(Error::GrazingGeometry {
            incidence: incidence_deg,
            beamwidth: beamwidth_deg,
        });
    }
    let theta = incidence_deg.to_radians();
    let major = alt_agl * ((theta + half.to_radians()).tan() - (theta - half.to_radians()).tan());
    let minor = 2.0 * (alt_agl / theta.cos()) * half.to_radians().tan();
    Ok((major, minor))
}
