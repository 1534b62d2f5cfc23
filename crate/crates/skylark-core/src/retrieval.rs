//! Deterministic inversion of the emission model.
//!
//! Three algorithms share one forward model: SCA fits soil moisture to a
//! single polarization with vegetation optical depth supplied by the
//! NDVI → VWC → tau ancillary chain (or fixed to zero over bare soil); DCA
//! fits (sm, tau) to both polarizations of one scan; MT-DCA fits
//! (sm day1, sm day2, tau) to the four observations of two consecutive days,
//! holding tau constant across the pair.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{tb_simulate, ModelParams, Polarization, SurfaceState};
use crate::optimize::{golden_section, nelder_mead_multistart, Bounds};

/// Default search bounds: "pragmatic" ranges wide enough for every product
/// map in this domain.
pub const DEFAULT_SM_BOUNDS: (f64, f64) = (0.02, 0.60);
pub const DEFAULT_TAU_BOUNDS: (f64, f64) = (0.0, 3.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "scav")]
    ScaV,
    #[serde(rename = "scah")]
    ScaH,
    #[serde(rename = "dca")]
    Dca,
    #[serde(rename = "mtdca")]
    Mtdca,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::ScaV => write!(f, "scav"),
            Algorithm::ScaH => write!(f, "scah"),
            Algorithm::Dca => write!(f, "dca"),
            Algorithm::Mtdca => write!(f, "mtdca"),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scav" => Ok(Algorithm::ScaV),
            "scah" => Ok(Algorithm::ScaH),
            "dca" => Ok(Algorithm::Dca),
            "mtdca" => Ok(Algorithm::Mtdca),
            other => Err(Error::InvalidInput(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandCover {
    Shrub,
    BareSoil,
    Forest,
}

impl std::fmt::Display for LandCover {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LandCover::Shrub => write!(f, "shrub"),
            LandCover::BareSoil => write!(f, "bare_soil"),
            LandCover::Forest => write!(f, "forest"),
        }
    }
}

/// Retrieval configuration. `b_lc` and `f_stem` are land-cover dependent and
/// must be supplied; there is no universal default.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub sm_bounds: (f64, f64),
    pub tau_bounds: (f64, f64),
    pub algorithm: Algorithm,
    /// VWC-to-tau coefficient for the land cover.
    pub b_lc: f64,
    /// Stem fraction of the VWC model.
    pub f_stem: f64,
    pub land_cover: LandCover,
}

impl RetrievalConfig {
    pub fn new(
        algorithm: Algorithm,
        land_cover: LandCover,
        b_lc: f64,
        f_stem: f64,
    ) -> Result<Self> {
        let cfg = RetrievalConfig {
            sm_bounds: DEFAULT_SM_BOUNDS,
            tau_bounds: DEFAULT_TAU_BOUNDS,
            algorithm,
            b_lc,
            f_stem,
            land_cover,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sm_bounds.0 >= self.sm_bounds.1 || self.tau_bounds.0 >= self.tau_bounds.1 {
            return Err(Error::InvalidInput("degenerate retrieval bounds".into()));
        }
        if self.b_lc < 0.0 {
            return Err(Error::InvalidInput(format!("b_lc {} negative", self.b_lc)));
        }
        Ok(())
    }
}

/// Per-pixel ancillary state the inversion does not retrieve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurfaceAux {
    /// Soil effective temperature, K.
    pub t_s: f64,
    /// Canopy temperature, K.
    pub t_c: f64,
    /// Clay mass fraction, 0..1.
    pub clay_frac: f64,
}

impl SurfaceAux {
    pub fn state(&self, sm: f64, tau: f64) -> SurfaceState {
        SurfaceState {
            sm,
            tau,
            t_s: self.t_s,
            t_c: self.t_c,
            clay_frac: self.clay_frac,
        }
    }
}

/// Single scattering albedo is zeroed over bare soil; other parameters pass
/// through unchanged.
pub fn params_for_land_cover(base: &ModelParams, land_cover: LandCover) -> ModelParams {
    match land_cover {
        LandCover::BareSoil => ModelParams { omega: 0.0, ..*base },
        _ => *base,
    }
}

/// Flags marking parameters that landed on a search bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtBound {
    pub sm: bool,
    pub sm_second: bool,
    pub tau: bool,
}

impl AtBound {
    pub fn any(&self) -> bool {
        self.sm || self.sm_second || self.tau
    }
}

/// Output of one pixel retrieval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub algorithm: Algorithm,
    /// Retrieved soil moisture, m³/m³ (day 1 for MT-DCA).
    pub sm: f64,
    /// Day-2 soil moisture, MT-DCA only.
    pub sm_second: Option<f64>,
    /// Vegetation optical depth: retrieved for DCA/MT-DCA, ancillary for SCA.
    pub tau: f64,
    pub tau_is_ancillary: bool,
    /// Objective value at the optimum, K².
    pub residual: f64,
    pub converged: bool,
    pub at_bound: AtBound,
    /// Set when the observations cannot separate the parameters (e.g. both
    /// polarizations identical at nadir).
    pub degenerate: bool,
}

const BOUND_EPS: f64 = 1e-9;

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUND_EPS
}

/// Vegetation water content from effective NDVI, kg/m².
///
/// Leaf term is the quadratic in effective NDVI (clamped at zero where the
/// polynomial goes negative for small NDVI); the stem term scales the
/// climatological NDVI range by the stem fraction.
pub fn vwc_from_ndvi(ndvi_eff: f64, ndvi_max: f64, ndvi_min: f64, f_stem: f64) -> Result<f64> {
    for v in [ndvi_eff, ndvi_max, ndvi_min] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("NDVI {v} outside [-1, 1]")));
        }
    }
    if ndvi_min >= 1.0 - 1e-9 {
        return Err(Error::DegenerateNdviRange { ndvi_min });
    }
    let leaf = (1.9134 * ndvi_eff * ndvi_eff - 0.3215 * ndvi_eff).max(0.0);
    let stem = f_stem * (ndvi_max - ndvi_min) / (1.0 - ndvi_min);
    Ok((leaf + stem).max(0.0))
}

/// Nadir vegetation optical depth from water content.
pub fn tau_from_vwc(vwc: f64, b_lc: f64) -> f64 {
    b_lc * vwc
}

/// Single-channel retrieval: fit sm to one brightness temperature with tau
/// fixed from the ancillary chain.
///
/// The simulated brightness is strictly decreasing in sm, so the squared
/// residual is unimodal over the bounds. Observations outside the attainable
/// range clamp to the nearer bound with the `at_bound` flag set.
pub fn retrieve_sca(
    tb_obs: f64,
    pol: Polarization,
    tau_fixed: f64,
    aux: &SurfaceAux,
    params: &ModelParams,
    cfg: &RetrievalConfig,
) -> Result<RetrievalResult> {
    cfg.validate()?;
    let (sm_lo, sm_hi) = cfg.sm_bounds;
    let tb_at = |sm: f64| tb_simulate(&aux.state(sm, tau_fixed), params, pol);
    let tb_dry = tb_at(sm_lo)?;
    let tb_wet = tb_at(sm_hi)?;

    let algorithm = match pol {
        Polarization::V => Algorithm::ScaV,
        Polarization::H => Algorithm::ScaH,
    };
    let done = |sm: f64, residual: f64, at_bound_sm: bool| RetrievalResult {
        algorithm,
        sm,
        sm_second: None,
        tau: tau_fixed,
        tau_is_ancillary: true,
        residual,
        converged: true,
        at_bound: AtBound {
            sm: at_bound_sm,
            ..AtBound::default()
        },
        degenerate: false,
    };

    // tb_dry (driest soil) is the model maximum, tb_wet the minimum.
    if tb_obs >= tb_dry {
        return Ok(done(sm_lo, (tb_dry - tb_obs).powi(2), true));
    }
    if tb_obs <= tb_wet {
        return Ok(done(sm_hi, (tb_wet - tb_obs).powi(2), true));
    }

    let r = golden_section(
        |sm| {
            let tb = tb_at(sm).expect("bounds were validated");
            (tb - tb_obs) * (tb - tb_obs)
        },
        sm_lo,
        sm_hi,
        1e-12,
    );
    let sm = r.x[0];
    let at = near(sm, sm_lo) || near(sm, sm_hi);
    let mut out = done(sm, r.fx, at);
    out.converged = r.converged;
    Ok(out)
}

/// Dual-channel retrieval: fit (sm, tau) to one scan's H and V temperatures.
pub fn retrieve_dca(
    tb_v: f64,
    tb_h: f64,
    aux: &SurfaceAux,
    params: &ModelParams,
    cfg: &RetrievalConfig,
) -> Result<RetrievalResult> {
    cfg.validate()?;
    let bounds = Bounds::new(
        vec![cfg.sm_bounds.0, cfg.tau_bounds.0],
        vec![cfg.sm_bounds.1, cfg.tau_bounds.1],
    );
    let objective = |x: &[f64]| -> f64 {
        let state = aux.state(x[0], x[1]);
        let sv = tb_simulate(&state, params, Polarization::V).expect("state within bounds");
        let sh = tb_simulate(&state, params, Polarization::H).expect("state within bounds");
        (sv - tb_v).powi(2) + (sh - tb_h).powi(2)
    };
    let r = nelder_mead_multistart(objective, &bounds);

    // At nadir the two polarizations coincide and (sm, tau) trade off along
    // a one-dimensional family.
    let degenerate = params.theta_deg < 0.5 && (tb_v - tb_h).abs() < 0.01;

    Ok(RetrievalResult {
        algorithm: Algorithm::Dca,
        sm: r.x[0],
        sm_second: None,
        tau: r.x[1],
        tau_is_ancillary: false,
        residual: r.fx,
        converged: r.converged,
        at_bound: AtBound {
            sm: near(r.x[0], cfg.sm_bounds.0) || near(r.x[0], cfg.sm_bounds.1),
            sm_second: false,
            tau: near(r.x[1], cfg.tau_bounds.0) || near(r.x[1], cfg.tau_bounds.1),
        },
        degenerate,
    })
}

/// Multi-temporal dual-channel retrieval: fit (sm₁, sm₂, tau) to the four
/// observations of two consecutive scans, tau held constant across the pair.
#[allow(clippy::too_many_arguments)]
pub fn retrieve_mtdca(
    tb_v_t1: f64,
    tb_h_t1: f64,
    tb_v_t2: f64,
    tb_h_t2: f64,
    aux_t1: &SurfaceAux,
    aux_t2: &SurfaceAux,
    params: &ModelParams,
    cfg: &RetrievalConfig,
) -> Result<RetrievalResult> {
    cfg.validate()?;
    let bounds = Bounds::new(
        vec![cfg.sm_bounds.0, cfg.sm_bounds.0, cfg.tau_bounds.0],
        vec![cfg.sm_bounds.1, cfg.sm_bounds.1, cfg.tau_bounds.1],
    );
    let objective = |x: &[f64]| -> f64 {
        let s1 = aux_t1.state(x[0], x[2]);
        let s2 = aux_t2.state(x[1], x[2]);
        let e = |state: &SurfaceState, pol: Polarization, obs: f64| {
            let sim = tb_simulate(state, params, pol).expect("state within bounds");
            (sim - obs) * (sim - obs)
        };
        e(&s1, Polarization::V, tb_v_t1)
            + e(&s1, Polarization::H, tb_h_t1)
            + e(&s2, Polarization::V, tb_v_t2)
            + e(&s2, Polarization::H, tb_h_t2)
    };
    let r = nelder_mead_multistart(objective, &bounds);

    Ok(RetrievalResult {
        algorithm: Algorithm::Mtdca,
        sm: r.x[0],
        sm_second: Some(r.x[1]),
        tau: r.x[2],
        tau_is_ancillary: false,
        residual: r.fx,
        converged: r.converged,
        at_bound: AtBound {
            sm: near(r.x[0], cfg.sm_bounds.0) || near(r.x[0], cfg.sm_bounds.1),
            sm_second: near(r.x[1], cfg.sm_bounds.0) || near(r.x[1], cfg.sm_bounds.1),
            tau: near(r.x[2], cfg.tau_bounds.0) || near(r.x[2], cfg.tau_bounds.1),
        },
        degenerate: false,
    })
}

/// Consecutive-day pairs for MT-DCA. Days must be sorted ascending; gaps are
/// never paired across. A single day yields no pairs.
pub fn sliding_pair_scheduler(days: &[NaiveDate]) -> Vec<(NaiveDate, NaiveDate)> {
    days.windows(2)
        .filter(|w| (w[1] - w[0]).num_days() == 1)
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Dual-polarization observation of one pixel on one day.
#[derive(Debug, Clone, Copy)]
pub struct DailyDualPol {
    pub date: NaiveDate,
    pub tb_v: f64,
    pub tb_h: f64,
    pub aux: SurfaceAux,
}

/// MT-DCA over a day series for one pixel. Interior days covered by two
/// pairs receive the average of their two estimates; tau is averaged the
/// same way.
pub fn retrieve_mtdca_series(
    series: &[DailyDualPol],
    params: &ModelParams,
    cfg: &RetrievalConfig,
) -> Result<Vec<(NaiveDate, RetrievalResult)>> {
    let days: Vec<NaiveDate> = series.iter().map(|d| d.date).collect();
    let pairs = sliding_pair_scheduler(&days);
    let mut per_day: std::collections::BTreeMap<NaiveDate, Vec<RetrievalResult>> =
        std::collections::BTreeMap::new();
    for (d1, d2) in pairs {
        let o1 = series.iter().find(|o| o.date == d1).unwrap();
        let o2 = series.iter().find(|o| o.date == d2).unwrap();
        let r = retrieve_mtdca(
            o1.tb_v, o1.tb_h, o2.tb_v, o2.tb_h, &o1.aux, &o2.aux, params, cfg,
        )?;
        let mut r1 = r.clone();
        r1.sm_second = None;
        per_day.entry(d1).or_default().push(r1);
        let mut r2 = r.clone();
        r2.sm = r.sm_second.unwrap();
        r2.sm_second = None;
        per_day.entry(d2).or_default().push(r2);
    }
    Ok(per_day
        .into_iter()
        .map(|(date, estimates)| {
            let n = estimates.len() as f64;
            let sm = estimates.iter().map(|e| e.sm).sum::<f64>() / n;
            let tau = estimates.iter().map(|e| e.tau).sum::<f64>() / n;
            let residual = estimates.iter().map(|e| e.residual).sum::<f64>() / n;
            let merged = RetrievalResult {
                algorithm: Algorithm::Mtdca,
                sm,
                sm_second: None,
                tau,
                tau_is_ancillary: false,
                residual,
                converged: estimates.iter().all(|e| e.converged),
                at_bound: AtBound {
                    sm: estimates
                        .iter()
                        .any(|e| e.at_bound.sm || e.at_bound.sm_second),
                    sm_second: false,
                    tau: estimates.iter().any(|e| e.at_bound.tau),
                },
                degenerate: estimates.iter().any(|e| e.degenerate),
            };
            (date, merged)
        })
        .collect())
}

/// One gridded pixel awaiting retrieval.
#[derive(Debug, Clone, Copy)]
pub struct PixelObservation {
    pub tb_v: f64,
    pub tb_h: f64,
    pub tau_ancillary: f64,
    pub aux: SurfaceAux,
    pub land_cover: LandCover,
    pub theta_deg: f64,
}

/// Per-pixel retrieval over a batch, in parallel. SCA uses the pixel's
/// ancillary tau (zero over bare soil); DCA retrieves tau itself.
pub fn retrieve_batch(
    pixels: &[PixelObservation],
    base_params: &ModelParams,
    cfg: &RetrievalConfig,
) -> Result<Vec<RetrievalResult>> {
    pixels
        .par_iter()
        .map(|px| {
            let params = params_for_land_cover(base_params, px.land_cover).at_theta(px.theta_deg);
            let tau = if px.land_cover == LandCover::BareSoil {
                0.0
            } else {
                px.tau_ancillary
            };
            match cfg.algorithm {
                Algorithm::ScaV => {
                    retrieve_sca(px.tb_v, Polarization::V, tau, &px.aux, &params, cfg)
                }
                Algorithm::ScaH => {
                    retrieve_sca(px.tb_h, Polarization::H, tau, &px.aux, &params, cfg)
                }
                Algorithm::Dca => retrieve_dca(px.tb_v, px.tb_h, &px.aux, &params, cfg),
                Algorithm::Mtdca => Err(Error::InvalidInput(
                    "MT-DCA needs a day series; use retrieve_mtdca_series".into(),
                )),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn aux() -> SurfaceAux {
        SurfaceAux {
            t_s: 295.0,
            t_c: 295.0,
            clay_frac: 0.085,
        }
    }

    fn cfg(algorithm: Algorithm) -> RetrievalConfig {
        RetrievalConfig::new(algorithm, LandCover::Shrub, 0.12, 0.3).unwrap()
    }

    #[test]
    fn vwc_quadratic_examples() {
        assert_relative_eq!(
            vwc_from_ndvi(0.5, 0.8, 0.2, 0.0).unwrap(),
            0.3176,
            max_relative = 1e-10
        );
        assert_relative_eq!(vwc_from_ndvi(0.0, 0.8, 0.2, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            vwc_from_ndvi(0.0, 0.8, 0.2, 1.0).unwrap(),
            0.75,
            max_relative = 1e-12
        );
        // Small NDVI drives the leaf polynomial negative; it clamps at zero.
        assert_relative_eq!(vwc_from_ndvi(0.1, 0.8, 0.2, 0.0).unwrap(), 0.0);
        assert!(matches!(
            vwc_from_ndvi(0.5, 0.8, 1.0, 0.0),
            Err(Error::DegenerateNdviRange { .. })
        ));
    }

    #[test]
    fn tau_from_vwc_is_product() {
        assert_relative_eq!(tau_from_vwc(0.0, 0.5), 0.0);
        assert_relative_eq!(tau_from_vwc(1.5, 0.1), 0.15);
    }

    #[test]
    fn sca_round_trip() {
        let params = ModelParams::default();
        let truth = aux().state(0.25, 0.1);
        let tb = tb_simulate(&truth, &params, Polarization::V).unwrap();
        let r = retrieve_sca(tb, Polarization::V, 0.1, &aux(), &params, &cfg(Algorithm::ScaV))
            .unwrap();
        assert!((r.sm - 0.25).abs() < 1e-4, "sm = {}", r.sm);
        assert!(r.residual < 1e-9);
        assert!(!r.at_bound.any());
        assert!(r.tau_is_ancillary);
    }

    #[test]
    fn sca_clamps_outside_attainable_range() {
        let params = ModelParams::default();
        let c = cfg(Algorithm::ScaV);
        // Warmer than the dry end: clamp to the lower bound.
        let r = retrieve_sca(320.0, Polarization::V, 0.1, &aux(), &params, &c).unwrap();
        assert_relative_eq!(r.sm, c.sm_bounds.0);
        assert!(r.at_bound.sm);
        // Colder than the wet end: clamp to the upper bound.
        let r = retrieve_sca(100.0, Polarization::V, 0.1, &aux(), &params, &c).unwrap();
        assert_relative_eq!(r.sm, c.sm_bounds.1);
        assert!(r.at_bound.sm);
    }

    #[test]
    fn sca_noise_sensitivity_matches_finite_difference() {
        let params = ModelParams::default();
        let c = cfg(Algorithm::ScaV);
        let tb0 = tb_simulate(&aux().state(0.25, 0.1), &params, Polarization::V).unwrap();
        let r0 = retrieve_sca(tb0, Polarization::V, 0.1, &aux(), &params, &c).unwrap();
        let r1 = retrieve_sca(tb0 + 1.0, Polarization::V, 0.1, &aux(), &params, &c).unwrap();
        // dTB/dsm by central difference at the solution.
        let h = 1e-5;
        let up = tb_simulate(&aux().state(r0.sm + h, 0.1), &params, Polarization::V).unwrap();
        let dn = tb_simulate(&aux().state(r0.sm - h, 0.1), &params, Polarization::V).unwrap();
        let slope = (up - dn) / (2.0 * h);
        let predicted = 1.0 / slope; // sm shift per +1 K
        assert_relative_eq!(r1.sm - r0.sm, predicted, max_relative = 0.05);
    }

    #[test]
    fn sca_objective_unimodal_over_bounds() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let c = cfg(Algorithm::ScaV);
        for _ in 0..20 {
            let params = ModelParams::default().at_theta(rng.gen_range(30.0..50.0));
            let tau = rng.gen_range(0.0..1.0);
            let tb_obs = rng.gen_range(180.0..280.0);
            let j = |sm: f64| {
                let tb = tb_simulate(&aux().state(sm, tau), &params, Polarization::V).unwrap();
                (tb - tb_obs) * (tb - tb_obs)
            };
            // Scan for interior local minima beyond the global one.
            let n = 1000;
            let xs: Vec<f64> = (0..=n)
                .map(|i| c.sm_bounds.0 + (c.sm_bounds.1 - c.sm_bounds.0) * i as f64 / n as f64)
                .collect();
            let js: Vec<f64> = xs.iter().map(|&x| j(x)).collect();
            let mut minima = 0;
            for i in 1..n {
                if js[i] < js[i - 1] - 1e-15 && js[i] < js[i + 1] - 1e-15 {
                    minima += 1;
                }
            }
            assert!(minima <= 1, "objective has {minima} interior minima");
        }
    }

    #[test]
    fn dca_noise_free_round_trip() {
        let params = ModelParams::default();
        let truth = aux().state(0.2, 0.15);
        let tb_v = tb_simulate(&truth, &params, Polarization::V).unwrap();
        let tb_h = tb_simulate(&truth, &params, Polarization::H).unwrap();
        let r = retrieve_dca(tb_v, tb_h, &aux(), &params, &cfg(Algorithm::Dca)).unwrap();
        assert!((r.sm - 0.2).abs() < 1e-3, "sm = {}", r.sm);
        assert!((r.tau - 0.15).abs() < 1e-3, "tau = {}", r.tau);
        assert!(r.residual < 1e-9, "residual = {}", r.residual);
        assert!(!r.at_bound.any());
    }

    #[test]
    fn dca_inconsistent_pair_hits_tau_bound() {
        let params = ModelParams::default();
        let truth = aux().state(0.2, 0.15);
        // Swapping polarizations makes H warmer than V, which no
        // same-state pair can produce; tau collapses to a bound.
        let tb_v = tb_simulate(&truth, &params, Polarization::H).unwrap();
        let tb_h = tb_simulate(&truth, &params, Polarization::V).unwrap();
        let r = retrieve_dca(tb_v, tb_h, &aux(), &params, &cfg(Algorithm::Dca)).unwrap();
        assert!(r.residual > 1e-3, "residual = {}", r.residual);
        assert!(r.at_bound.tau, "tau = {} not at bound", r.tau);
    }

    #[test]
    fn dca_nadir_degenerate_flagged() {
        let params = ModelParams::default().at_theta(0.0);
        let truth = aux().state(0.3, 0.4);
        let tb = tb_simulate(&truth, &params, Polarization::V).unwrap();
        let r = retrieve_dca(tb, tb, &aux(), &params, &cfg(Algorithm::Dca)).unwrap();
        assert!(r.degenerate);
        assert!(r.residual < 1e-6);
    }

    #[test]
    fn mtdca_noise_free_round_trip() {
        let params = ModelParams::default();
        let (sm1, sm2, tau) = (0.18, 0.15, 0.2);
        let tb = |sm: f64, pol| tb_simulate(&aux().state(sm, tau), &params, pol).unwrap();
        let r = retrieve_mtdca(
            tb(sm1, Polarization::V),
            tb(sm1, Polarization::H),
            tb(sm2, Polarization::V),
            tb(sm2, Polarization::H),
            &aux(),
            &aux(),
            &params,
            &cfg(Algorithm::Mtdca),
        )
        .unwrap();
        assert!((r.sm - sm1).abs() < 1e-3, "sm1 = {}", r.sm);
        assert!((r.sm_second.unwrap() - sm2).abs() < 1e-3);
        assert!((r.tau - tau).abs() < 1e-3, "tau = {}", r.tau);
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn mtdca_identical_days_give_equal_sm() {
        let params = ModelParams::default();
        let truth = aux().state(0.22, 0.3);
        let tb_v = tb_simulate(&truth, &params, Polarization::V).unwrap();
        let tb_h = tb_simulate(&truth, &params, Polarization::H).unwrap();
        let r = retrieve_mtdca(
            tb_v,
            tb_h,
            tb_v,
            tb_h,
            &aux(),
            &aux(),
            &params,
            &cfg(Algorithm::Mtdca),
        )
        .unwrap();
        assert!((r.sm - r.sm_second.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn scheduler_pairs_consecutive_days_only() {
        let d = |day: u32| NaiveDate::from_ymd_opt(2024, 9, day).unwrap();
        assert_eq!(
            sliding_pair_scheduler(&[d(4), d(5), d(6)]),
            vec![(d(4), d(5)), (d(5), d(6))]
        );
        assert!(sliding_pair_scheduler(&[d(4)]).is_empty());
        // A gap is not paired across.
        assert_eq!(
            sliding_pair_scheduler(&[d(4), d(5), d(8), d(9)]),
            vec![(d(4), d(5)), (d(8), d(9))]
        );
    }

    #[test]
    fn mtdca_series_averages_interior_days() {
        let params = ModelParams::default();
        let c = cfg(Algorithm::Mtdca);
        let d = |day: u32| NaiveDate::from_ymd_opt(2024, 9, day).unwrap();
        let tau = 0.25;
        let sms = [0.3, 0.25, 0.2];
        let series: Vec<DailyDualPol> = sms
            .iter()
            .enumerate()
            .map(|(i, &sm)| DailyDualPol {
                date: d(4 + i as u32),
                tb_v: tb_simulate(&aux().state(sm, tau), &params, Polarization::V).unwrap(),
                tb_h: tb_simulate(&aux().state(sm, tau), &params, Polarization::H).unwrap(),
                aux: aux(),
            })
            .collect();
        let out = retrieve_mtdca_series(&series, &params, &c).unwrap();
        assert_eq!(out.len(), 3);
        for ((date, r), &sm_true) in out.iter().zip(&sms) {
            assert!(
                (r.sm - sm_true).abs() < 1e-3,
                "{date}: sm {} vs {}",
                r.sm,
                sm_true
            );
            assert!((r.tau - tau).abs() < 1e-3);
        }
    }

    #[test]
    fn retrievals_always_respect_bounds() {
        let params = ModelParams::default();
        let c = cfg(Algorithm::Dca);
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        for _ in 0..30 {
            let tb_v = rng.gen_range(120.0..320.0);
            let tb_h = rng.gen_range(120.0..320.0);
            let r = retrieve_dca(tb_v, tb_h, &aux(), &params, &c).unwrap();
            assert!(r.sm >= c.sm_bounds.0 && r.sm <= c.sm_bounds.1);
            assert!(r.tau >= c.tau_bounds.0 && r.tau <= c.tau_bounds.1);
        }
    }

    #[test]
    fn dca_bias_shifts_tau_more_than_sm() {
        // A +2 K V-pol calibration bias moves the pair along the
        // compensation valley; tau absorbs relatively more of it.
        let params = ModelParams::default();
        let c = cfg(Algorithm::Dca);
        let truth = aux().state(0.25, 0.3);
        let tb_v = tb_simulate(&truth, &params, Polarization::V).unwrap();
        let tb_h = tb_simulate(&truth, &params, Polarization::H).unwrap();
        let r = retrieve_dca(tb_v + 2.0, tb_h, &aux(), &params, &c).unwrap();
        let rel_sm = (r.sm - 0.25).abs() / 0.25;
        let rel_tau = (r.tau - 0.3).abs() / 0.3;
        assert!(
            rel_tau > rel_sm,
            "tau shift {rel_tau} not above sm shift {rel_sm}"
        );
    }
}
