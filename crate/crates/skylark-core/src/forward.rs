//! Zeroth-order tau-omega emission model.
//!
//! Simulates polarized L-band brightness temperature from soil moisture,
//! vegetation optical depth, soil/canopy temperatures, and view geometry.
//! The chain is: Mironov dielectric mixing → Fresnel power reflectivity →
//! H-Q-N roughness correction → canopy transmissivity → two-layer emission.
//!
//! Note on the roughness polarization mixing: the mixing factor `q` is applied
//! in the convention where `q = 0` selects the *same*-polarization smooth
//! reflectivity, `r_rp = [(1 - q) r_sp + q r_sq] exp(-h cos²θ)`. Printed
//! variants of this formula sometimes swap the two smooth reflectivities;
//! that ordering would make `q = 0` select the opposite polarization and is
//! not used here.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity, F/m.
const VACUUM_PERMITTIVITY: f64 = 8.854e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Polarization::H => write!(f, "h"),
            Polarization::V => write!(f, "v"),
        }
    }
}

/// Surface state for one simulated footprint or pixel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurfaceState {
    /// Volumetric soil moisture, m³/m³. Valid range [0, 0.7].
    pub sm: f64,
    /// Vegetation optical depth (nadir-referenced), nepers.
    pub tau: f64,
    /// Soil effective temperature, K.
    pub t_s: f64,
    /// Canopy temperature, K.
    pub t_c: f64,
    /// Clay mass fraction, 0..1.
    pub clay_frac: f64,
}

/// Fixed model parameters shared by all retrievals of a run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams {
    /// Single scattering albedo, dimensionless, [0, 0.2].
    pub omega: f64,
    /// Roughness parameter of the H-Q-N model, dimensionless, >= 0.
    pub h: f64,
    /// Polarization mixing factor of the H-Q-N model, [0, 0.5].
    pub q: f64,
    /// Incidence angle, degrees.
    pub theta_deg: f64,
    /// Observation frequency, GHz.
    pub frequency_ghz: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            omega: 0.08,
            h: 0.13,
            q: 0.0,
            theta_deg: 40.0,
            frequency_ghz: 1.4,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.2).contains(&self.omega) {
            return Err(Error::InvalidInput(format!(
                "omega {} outside [0, 0.2]",
                self.omega
            )));
        }
        if self.h < 0.0 {
            return Err(Error::InvalidInput(format!("roughness h {} < 0", self.h)));
        }
        if !(0.0..=0.5).contains(&self.q) {
            return Err(Error::InvalidInput(format!("q {} outside [0, 0.5]", self.q)));
        }
        if !(0.0..90.0).contains(&self.theta_deg) {
            return Err(Error::InvalidInput(format!(
                "incidence {}° outside [0°, 90°)",
                self.theta_deg
            )));
        }
        if self.frequency_ghz <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "frequency {} GHz not positive",
                self.frequency_ghz
            )));
        }
        Ok(())
    }

    /// Same parameters at a different incidence angle.
    pub fn at_theta(&self, theta_deg: f64) -> Self {
        ModelParams { theta_deg, ..*self }
    }
}

/// Complex refractive index (n, k) of a Debye water component with ohmic loss.
fn water_refractive_index(eps0: f64, tau_relax: f64, sigma: f64, freq_hz: f64) -> (f64, f64) {
    const EPS_INF: f64 = 4.9;
    let w = 2.0 * std::f64::consts::PI * freq_hz;
    let wt = w * tau_relax;
    let denom = 1.0 + wt * wt;
    let re = EPS_INF + (eps0 - EPS_INF) / denom;
    let im = (eps0 - EPS_INF) * wt / denom + sigma / (w * VACUUM_PERMITTIVITY);
    let mag = re.hypot(im);
    (((mag + re) / 2.0).sqrt(), ((mag - re) / 2.0).sqrt())
}

/// Complex relative permittivity of moist soil (mineralogy-based
/// spectroscopic dielectric model, parameterized by clay fraction).
///
/// `clay_frac` is the clay mass fraction in 0..1; the regression coefficients
/// below take clay in percent. Returns ε with Re(ε) >= 1 and Im(ε) >= 0;
/// Re(ε) is strictly increasing in `sm`.
pub fn mironov_permittivity(sm: f64, clay_frac: f64, frequency_ghz: f64) -> Result<Complex64> {
    if !(0.0..=0.7).contains(&sm) || !sm.is_finite() {
        return Err(Error::OutOfRangeMoisture { sm });
    }
    let clay = clay_frac * 100.0;
    let f = frequency_ghz * 1e9;

    // Dry soil refractive index and normalized attenuation.
    let nd = 1.634 - 0.539e-2 * clay + 0.2748e-4 * clay * clay;
    let kd = 0.03952 - 0.04038e-2 * clay;
    // Maximum bound-water fraction.
    let mvt = 0.02863 + 0.30673e-2 * clay;
    // Bound-water Debye parameters.
    let eps0_b = 79.8 - 85.4e-2 * clay + 32.7e-4 * clay * clay;
    let tau_b = 1.062e-11 + 3.450e-12 * 1e-2 * clay;
    let sigma_b = 0.3112 + 0.467e-2 * clay;
    // Free-water Debye parameters.
    let eps0_u = 100.0;
    let tau_u = 8.5e-12;
    let sigma_u = 0.3631 + 1.217e-2 * clay;

    let (nb, kb) = water_refractive_index(eps0_b, tau_b, sigma_b, f);
    let (nu, ku) = water_refractive_index(eps0_u, tau_u, sigma_u, f);

    // Refractive mixing: dry soil plus bound water up to mvt, free water above.
    let (nm, km) = if sm <= mvt {
        (nd + (nb - 1.0) * sm, kd + kb * sm)
    } else {
        (
            nd + (nb - 1.0) * mvt + (nu - 1.0) * (sm - mvt),
            kd + kb * mvt + ku * (sm - mvt),
        )
    };

    Ok(Complex64::new(nm * nm - km * km, 2.0 * nm * km))
}

/// Smooth-surface Fresnel power reflectivities `(r_sh, r_sv)` for a
/// half-space of permittivity `eps` viewed at `theta_deg` from vertical.
pub fn fresnel_reflectivity(eps: Complex64, theta_deg: f64) -> (f64, f64) {
    let theta = theta_deg.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();
    // Principal branch keeps Re >= 0, the physical transmitted wave.
    let w = (eps - sin_t * sin_t).sqrt();
    let c = Complex64::new(cos_t, 0.0);
    let r_h = (c - w) / (c + w);
    let r_v = (eps * c - w) / (eps * c + w);
    (r_h.norm_sqr(), r_v.norm_sqr())
}

/// Rough-surface reflectivity at polarization p from the smooth
/// reflectivities of p (`r_sp`) and the orthogonal polarization (`r_sq`).
pub fn rough_reflectivity(r_sp: f64, r_sq: f64, params: &ModelParams) -> f64 {
    let cos_t = params.theta_deg.to_radians().cos();
    ((1.0 - params.q) * r_sp + params.q * r_sq) * (-params.h * cos_t * cos_t).exp()
}

/// Canopy transmissivity `γ = exp(-τ / cos θ)`.
pub fn transmissivity(tau: f64, theta_deg: f64) -> Result<f64> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("optical depth {tau} < 0")));
    }
    Ok((-tau / theta_deg.to_radians().cos()).exp())
}

/// Simulated brightness temperature, K, at the requested polarization.
///
/// Composition of the three emission terms: soil emission attenuated by the
/// canopy, direct canopy emission, and canopy emission reflected off the soil
/// and attenuated again on the way up. Reflected downwelling sky radiation is
/// neglected.
pub fn tb_simulate(state: &SurfaceState, params: &ModelParams, pol: Polarization) -> Result<f64> {
    params.validate()?;
    let eps = mironov_permittivity(state.sm, state.clay_frac, params.frequency_ghz)?;
    let (r_sh, r_sv) = fresnel_reflectivity(eps, params.theta_deg);
    let (r_sp, r_sq) = match pol {
        Polarization::H => (r_sh, r_sv),
        Polarization::V => (r_sv, r_sh),
    };
    let r_rp = rough_reflectivity(r_sp, r_sq, params);
    let gamma = transmissivity(state.tau, params.theta_deg)?;
    let veg = (1.0 - params.omega) * state.t_c;
    Ok(gamma * (1.0 - r_rp) * state.t_s + (1.0 - gamma) * veg + gamma * r_rp * (1.0 - gamma) * veg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Independent transcription of the dielectric model via complex Debye
    /// spectra and a complex square root, instead of the real-valued
    /// refractive-index formulas of the implementation.
    fn mironov_oracle(sm: f64, clay_frac: f64, frequency_ghz: f64) -> Complex64 {
        let clay = clay_frac * 100.0;
        let f = frequency_ghz * 1e9;
        let w = 2.0 * std::f64::consts::PI * f;
        let eps_inf = 4.9;

        let debye = |eps0: f64, tau: f64, sigma: f64| -> Complex64 {
            // Loss-positive convention: eps = eps_inf + (eps0-eps_inf)/(1 - i w tau) + i sigma/(w e0)
            Complex64::new(eps_inf, 0.0)
                + Complex64::new(eps0 - eps_inf, 0.0) / Complex64::new(1.0, -w * tau)
                + Complex64::new(0.0, sigma / (w * VACUUM_PERMITTIVITY))
        };

        let eps_b = debye(
            79.8 - 85.4e-2 * clay + 32.7e-4 * clay * clay,
            1.062e-11 + 3.450e-14 * clay,
            0.3112 + 0.467e-2 * clay,
        );
        let eps_u = debye(100.0, 8.5e-12, 0.3631 + 1.217e-2 * clay);

        let nd = 1.634 - 0.539e-2 * clay + 0.2748e-4 * clay * clay;
        let kd = 0.03952 - 0.04038e-2 * clay;
        let mvt = 0.02863 + 0.30673e-2 * clay;

        let sb = eps_b.sqrt();
        let su = eps_u.sqrt();
        let (nb, kb) = (sb.re, sb.im);
        let (nu, ku) = (su.re, su.im);

        let (nm, km) = if sm <= mvt {
            (nd + (nb - 1.0) * sm, kd + kb * sm)
        } else {
            (
                nd + (nb - 1.0) * mvt + (nu - 1.0) * (sm - mvt),
                kd + kb * mvt + ku * (sm - mvt),
            )
        };
        Complex64::new(nm, km) * Complex64::new(nm, km)
    }

    #[test]
    fn mironov_matches_independent_transcription() {
        for &sm in &[0.0, 0.02, 0.05, 0.0547, 0.1, 0.2, 0.35, 0.5, 0.7] {
            for &clay in &[0.0, 0.085, 0.2, 0.5] {
                let a = mironov_permittivity(sm, clay, 1.4).unwrap();
                let b = mironov_oracle(sm, clay, 1.4);
                assert_relative_eq!(a.re, b.re, max_relative = 1e-10);
                assert_relative_eq!(a.im, b.im, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn mironov_dry_soil_in_expected_band() {
        let eps = mironov_permittivity(0.0, 0.085, 1.4).unwrap();
        assert!(eps.re > 2.0 && eps.re < 6.0, "dry Re(eps) = {}", eps.re);
        assert!(eps.im >= 0.0);
    }

    #[test]
    fn mironov_golden_values() {
        // Frozen from the independent transcription above.
        let eps = mironov_permittivity(0.2, 0.085, 1.4).unwrap();
        assert_relative_eq!(eps.re, 10.917978, max_relative = 1e-4);
        assert_relative_eq!(eps.im, 1.099862, max_relative = 1e-3);
        let dry = mironov_permittivity(0.0, 0.085, 1.4).unwrap();
        assert_relative_eq!(dry.re, 2.527340, max_relative = 1e-4);
    }

    #[test]
    fn mironov_monotone_in_moisture() {
        let e1 = mironov_permittivity(0.05, 0.085, 1.4).unwrap().re;
        let e2 = mironov_permittivity(0.15, 0.085, 1.4).unwrap().re;
        let e3 = mironov_permittivity(0.35, 0.085, 1.4).unwrap().re;
        assert!(e3 > e2 && e2 > e1);
    }

    #[test]
    fn mironov_continuous_across_bound_water_transition() {
        // No jump where the bound-water branch hands over to free water.
        let clay = 0.085;
        let mvt = 0.02863 + 0.30673e-2 * (clay * 100.0);
        let below = mironov_permittivity(mvt - 1e-9, clay, 1.4).unwrap();
        let above = mironov_permittivity(mvt + 1e-9, clay, 1.4).unwrap();
        assert!((below.re - above.re).abs() < 1e-6);
        assert!((below.im - above.im).abs() < 1e-6);

        // Scan sm at 1e-3 steps: steps stay bounded by the local slope
        // (Re(eps) climbs at most ~150 per unit sm near saturation).
        let mut prev = mironov_permittivity(0.0, clay, 1.4).unwrap().re;
        let mut sm = 0.001;
        while sm <= 0.7 {
            let cur = mironov_permittivity(sm, clay, 1.4).unwrap().re;
            assert!((cur - prev).abs() < 0.2, "jump at sm={sm}");
            prev = cur;
            sm += 0.001;
        }

        // Scan clay at fixed sm; the transition moisture moves with clay.
        let mut prev = mironov_permittivity(0.2, 0.0, 1.4).unwrap().re;
        for i in 1..=500 {
            let cf = 0.5 * i as f64 / 500.0;
            let cur = mironov_permittivity(0.2, cf, 1.4).unwrap().re;
            assert!((cur - prev).abs() < 0.05, "jump at clay={cf}");
            prev = cur;
        }
    }

    #[test]
    fn mironov_rejects_out_of_range() {
        assert!(matches!(
            mironov_permittivity(-0.01, 0.085, 1.4),
            Err(Error::OutOfRangeMoisture { .. })
        ));
        assert!(mironov_permittivity(0.71, 0.085, 1.4).is_err());
    }

    #[test]
    fn fresnel_vacuum_interface_reflects_nothing() {
        let (rh, rv) = fresnel_reflectivity(Complex64::new(1.0, 0.0), 37.0);
        assert!(rh.abs() < 1e-15 && rv.abs() < 1e-15);
    }

    #[test]
    fn fresnel_normal_incidence_closed_form() {
        let (rh, rv) = fresnel_reflectivity(Complex64::new(4.0, 0.0), 0.0);
        assert_relative_eq!(rh, 1.0 / 9.0, max_relative = 1e-12);
        assert_relative_eq!(rv, 1.0 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn fresnel_real_permittivity_oblique() {
        // Direct evaluation of the power formulas for eps = 15, theta = 40°.
        let (rh, rv) = fresnel_reflectivity(Complex64::new(15.0, 0.0), 40.0);
        assert_relative_eq!(rh, 0.44338, max_relative = 2e-4);
        assert_relative_eq!(rv, 0.25107, max_relative = 2e-4);
    }

    #[test]
    fn fresnel_outputs_are_power_reflectivities() {
        for &(re, im) in &[(3.0, 0.2), (10.0, 1.0), (25.0, 3.0), (1.0, 0.0)] {
            for theta in [0.0, 20.0, 40.0, 60.0, 80.0] {
                let (rh, rv) = fresnel_reflectivity(Complex64::new(re, im), theta);
                assert!((0.0..=1.0).contains(&rh), "rh={rh}");
                assert!((0.0..=1.0).contains(&rv), "rv={rv}");
                assert!(rv <= rh + 1e-12, "V should not exceed H: {rv} vs {rh}");
            }
        }
    }

    #[test]
    fn roughness_identity_and_mixing() {
        let p0 = ModelParams {
            q: 0.0,
            h: 0.0,
            ..ModelParams::default()
        };
        assert_relative_eq!(rough_reflectivity(0.37, 0.8, &p0), 0.37, max_relative = 1e-15);

        let p = ModelParams::default(); // q = 0, h = 0.13, theta = 40
        let factor = rough_reflectivity(1.0, 0.0, &p);
        assert_relative_eq!(factor, (-0.13f64 * 40f64.to_radians().cos().powi(2)).exp());
        assert_relative_eq!(factor, 0.926551, max_relative = 1e-5);

        let pq = ModelParams {
            q: 0.5,
            ..ModelParams::default()
        };
        let mixed = rough_reflectivity(0.2, 0.4, &pq);
        assert_relative_eq!(mixed, 0.3 * factor, max_relative = 1e-12);
    }

    #[test]
    fn transmissivity_values_and_monotonicity() {
        assert_relative_eq!(transmissivity(0.0, 40.0).unwrap(), 1.0);
        assert_relative_eq!(
            transmissivity(0.1, 40.0).unwrap(),
            0.877618,
            max_relative = 1e-5
        );
        let mut prev = 1.0;
        for i in 1..=20 {
            let g = transmissivity(0.1 * i as f64, 40.0).unwrap();
            assert!(g < prev && g > 0.0);
            prev = g;
        }
        for theta in [0.0, 15.0, 30.0, 45.0, 60.0] {
            let g = transmissivity(0.5, theta).unwrap();
            assert!((0.0..=1.0).contains(&g));
        }
        assert!(transmissivity(-0.1, 40.0).is_err());
    }

    fn test_state(sm: f64, tau: f64) -> SurfaceState {
        SurfaceState {
            sm,
            tau,
            t_s: 295.0,
            t_c: 295.0,
            clay_frac: 0.085,
        }
    }

    #[test]
    fn tb_bare_soil_reduces_to_soil_emission() {
        let state = test_state(0.2, 0.0);
        let params = ModelParams::default();
        let eps = mironov_permittivity(0.2, 0.085, 1.4).unwrap();
        let (r_sh, r_sv) = fresnel_reflectivity(eps, 40.0);
        let r_rv = rough_reflectivity(r_sv, r_sh, &params);
        let tb = tb_simulate(&state, &params, Polarization::V).unwrap();
        assert_relative_eq!(tb, (1.0 - r_rv) * 295.0, epsilon = 1e-12);
    }

    #[test]
    fn tb_opaque_canopy_limit() {
        let state = test_state(0.2, 60.0);
        let tb = tb_simulate(&state, &ModelParams::default(), Polarization::V).unwrap();
        assert_relative_eq!(tb, 0.92 * 295.0, epsilon = 1e-9);
        let state_h = SurfaceState { t_c: 295.0, ..state };
        let tb_h = tb_simulate(&state_h, &ModelParams::default(), Polarization::H).unwrap();
        assert_relative_eq!(tb_h, 271.4, epsilon = 1e-6);
    }

    #[test]
    fn tb_full_stack_golden_value() {
        let state = test_state(0.20, 0.15);
        let tb = tb_simulate(&state, &ModelParams::default(), Polarization::V).unwrap();
        assert!(tb > 230.0 && tb < 280.0, "tb = {tb}");
        // Frozen from the component oracles composed by hand.
        assert_relative_eq!(tb, 253.923, max_relative = 1e-4);
    }

    #[test]
    fn tb_decreases_with_moisture() {
        let params = ModelParams::default();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let sm = rng.gen_range(0.03..0.55);
            let tau = rng.gen_range(0.0..1.5);
            let state = test_state(sm, tau);
            for pol in [Polarization::H, Polarization::V] {
                let up = tb_simulate(
                    &SurfaceState {
                        sm: sm + 1e-4,
                        ..state
                    },
                    &params,
                    pol,
                )
                .unwrap();
                let down = tb_simulate(
                    &SurfaceState {
                        sm: sm - 1e-4,
                        ..state
                    },
                    &params,
                    pol,
                )
                .unwrap();
                assert!(up < down, "dTB/dsm >= 0 at sm={sm}, tau={tau}");
            }
        }
    }

    #[test]
    fn tb_v_dominates_h_on_smooth_surface() {
        let params = ModelParams {
            h: 0.0,
            q: 0.0,
            ..ModelParams::default()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        for _ in 0..30 {
            let state = test_state(rng.gen_range(0.02..0.6), rng.gen_range(0.0..2.0));
            let v = tb_simulate(&state, &params, Polarization::V).unwrap();
            let h = tb_simulate(&state, &params, Polarization::H).unwrap();
            assert!(v >= h - 1e-9, "V {v} < H {h}");
        }
    }

    #[test]
    fn tb_energy_bound_and_limits() {
        let params = ModelParams::default();
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        for _ in 0..50 {
            let state = SurfaceState {
                sm: rng.gen_range(0.0..0.7),
                tau: rng.gen_range(0.0..3.0),
                t_s: rng.gen_range(270.0..320.0),
                t_c: rng.gen_range(270.0..320.0),
                clay_frac: rng.gen_range(0.0..0.5),
            };
            for pol in [Polarization::H, Polarization::V] {
                let tb = tb_simulate(&state, &params, pol).unwrap();
                assert!(tb > 0.0 && tb <= state.t_s.max(state.t_c) + 1e-9);
            }
        }
    }
}
