//! Temporal model of a dispersed photon pair.
//!
//! Spectral widths are stored in s⁻¹ and enter the dimensionless dispersion
//! `x = 2σ²βL` directly, with no 2π factor. `β` is half of the group velocity
//! dispersion, in s²/km, and lengths are in km.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ModelError, Result};

/// Spectral width of each photon for the reference source, s⁻¹.
pub const DEFAULT_SIGMA: f64 = 1.5e12;
/// Standard single-mode fiber attenuation, dB/km.
pub const DEFAULT_ATTENUATION: f64 = 0.2;
/// Standard single-mode fiber half-GVD, s²/km.
pub const DEFAULT_BETA: f64 = -1.15e-23;
/// Source repetition rate, s⁻¹.
pub const DEFAULT_REP_RATE: f64 = 2e8;

/// Photon-pair source: Gaussian joint spectrum with correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub rho: f64,
    pub rep_rate: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            sigma_a: DEFAULT_SIGMA,
            sigma_b: DEFAULT_SIGMA,
            rho: 0.0,
            rep_rate: DEFAULT_REP_RATE,
        }
    }
}

impl SourceParams {
    /// Default source with the given correlation coefficient.
    pub fn with_rho(rho: f64) -> Self {
        Self {
            rho,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.sigma_a > 0.0 && self.sigma_a.is_finite(), "sigma_a", self.sigma_a, "sigma_a > 0")?;
        ensure(self.sigma_b > 0.0 && self.sigma_b.is_finite(), "sigma_b", self.sigma_b, "sigma_b > 0")?;
        ensure(self.rho > -1.0 && self.rho < 1.0, "rho", self.rho, "-1 < rho < 1")?;
        ensure(self.rep_rate > 0.0 && self.rep_rate.is_finite(), "rep_rate", self.rep_rate, "rep_rate > 0")
    }
}

/// One arm of the setup: a fiber between the source and a detection station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberLink {
    /// km
    pub length: f64,
    /// dB/km
    pub attenuation: f64,
    /// Half-GVD, s²/km, signed.
    pub beta: f64,
}

impl FiberLink {
    /// Standard single-mode fiber of the given length.
    pub fn smf(length: f64) -> Self {
        Self {
            length,
            attenuation: DEFAULT_ATTENUATION,
            beta: DEFAULT_BETA,
        }
    }

    pub fn with_length(self, length: f64) -> Self {
        Self { length, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.length >= 0.0 && self.length.is_finite(), "length", self.length, "length >= 0")?;
        ensure(
            self.attenuation >= 0.0 && self.attenuation.is_finite(),
            "attenuation",
            self.attenuation,
            "attenuation >= 0",
        )?;
        ensure(self.beta.is_finite(), "beta", self.beta, "finite beta")
    }

    /// Total loss along the link, dB.
    pub fn loss_db(&self) -> f64 {
        self.attenuation * self.length
    }

    /// Accumulated half-GVD `β·L`, s².
    pub fn accumulated_dispersion(&self) -> f64 {
        self.beta * self.length
    }
}

impl Default for FiberLink {
    fn default() -> Self {
        Self::smf(0.0)
    }
}

/// An arm reduced to the two aggregate quantities the key rate depends on.
///
/// Every [`FiberLink`] maps onto one of these, but a profile can also describe
/// a stack of discrete devices that is not a uniform fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmProfile {
    /// dB
    pub loss_db: f64,
    /// Accumulated half-GVD, s², signed.
    pub dispersion: f64,
}

impl ArmProfile {
    pub fn validate(&self) -> Result<()> {
        ensure(self.loss_db >= 0.0 && self.loss_db.is_finite(), "loss_db", self.loss_db, "loss >= 0")?;
        ensure(self.dispersion.is_finite(), "dispersion", self.dispersion, "finite dispersion")
    }

    pub fn transmittance(&self) -> f64 {
        transmittance_from_loss(self.loss_db)
    }
}

impl From<&FiberLink> for ArmProfile {
    fn from(link: &FiberLink) -> Self {
        Self {
            loss_db: link.loss_db(),
            dispersion: link.accumulated_dispersion(),
        }
    }
}

impl From<FiberLink> for ArmProfile {
    fn from(link: FiberLink) -> Self {
        Self::from(&link)
    }
}

/// `2σ²·(βL)` for an accumulated dispersion `βL` in s².
pub fn dimensionless(sigma: f64, accumulated_dispersion: f64) -> f64 {
    2.0 * sigma * sigma * accumulated_dispersion
}

/// Dimensionless dispersion `x = 2σ²βL` of a photon with spectral width
/// `sigma` after propagating through `link`.
pub fn dimensionless_dispersion(sigma: f64, link: &FiberLink) -> f64 {
    dimensionless(sigma, link.accumulated_dispersion())
}

/// `g(x) = 1 + x(1 − ρ²)`.
pub fn g_factor(x: f64, rho: f64) -> f64 {
    1.0 + x * (1.0 - rho * rho)
}

/// `10^(−loss/10)`.
pub fn transmittance_from_loss(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Fraction of photons surviving the link.
pub fn channel_transmittance(link: &FiberLink) -> f64 {
    transmittance_from_loss(link.loss_db())
}

/// Temporal width of the heralded photon: the standard deviation of the
/// arrival-time difference between the two photons of a pair.
pub fn heralded_width(source: &SourceParams, link_a: &FiberLink, link_b: &FiberLink) -> Result<f64> {
    link_a.validate()?;
    link_b.validate()?;
    heralded_width_for(source, &link_a.into(), &link_b.into())
}

/// [`heralded_width`] for arms given as aggregate profiles.
pub fn heralded_width_for(source: &SourceParams, arm_a: &ArmProfile, arm_b: &ArmProfile) -> Result<f64> {
    source.validate()?;
    let x_a = dimensionless(source.sigma_a, arm_a.dispersion);
    let x_b = dimensionless(source.sigma_b, arm_b.dispersion);
    heralded_width_from_x(source, x_a, x_b)
}

/// Closed-form heralded width in terms of the dimensionless dispersions.
///
/// Every product is grouped so the result is bit-identical when the A and B
/// parameters are interchanged or when both `x` change sign.
pub(crate) fn heralded_width_from_x(source: &SourceParams, x_a: f64, x_b: f64) -> Result<f64> {
    let SourceParams {
        sigma_a: sa,
        sigma_b: sb,
        rho,
        ..
    } = *source;
    let g_aa = g_factor(x_a * x_a, rho);
    let g_bb = g_factor(x_b * x_b, rho);
    let g_ab = g_factor(-(x_a * x_b), rho);
    let s_ab = sa * sb;

    let numerator = g_aa * (sb * sb) + g_bb * (sa * sa) + 2.0 * g_ab * s_ab * rho;
    let determinant = g_aa * g_bb - g_ab * g_ab * (rho * rho);
    let denominator = 2.0 * ((sa * sa) * (sb * sb)) * determinant;
    let ratio = numerator / denominator;
    if !(determinant > 0.0 && ratio > 0.0 && ratio.is_finite()) {
        return Err(ModelError::Domain(format!(
            "heralded width radicand is non-positive (numerator {numerator:e}, determinant {determinant:e})"
        )));
    }
    let tau = ratio.sqrt() * g_ab.hypot(x_a + x_b);
    if tau.is_finite() && tau > 0.0 {
        Ok(tau)
    } else {
        Err(ModelError::Domain(format!("heralded width evaluated to {tau:e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn dimensionless_dispersion_examples() {
        assert_eq!(dimensionless_dispersion(1.5e12, &FiberLink::smf(0.0)), 0.0);
        let link = FiberLink {
            length: 100.0,
            attenuation: 0.2,
            beta: -1.15e-23,
        };
        assert!(rel(dimensionless_dispersion(1.5e12, &link), -5175.0) < 1e-12);
        let unit = FiberLink {
            length: 1.0,
            attenuation: 0.0,
            beta: 1.0,
        };
        assert_eq!(dimensionless_dispersion(1.0, &unit), 2.0);
    }

    #[test]
    fn g_factor_examples() {
        assert_eq!(g_factor(0.0, 0.3), 1.0);
        assert_eq!(g_factor(2.0, 0.5), 2.5);
        assert!((g_factor(123.0, 0.999_999_9) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn transmittance_examples() {
        assert_eq!(channel_transmittance(&FiberLink::smf(0.0)), 1.0);
        assert!(rel(channel_transmittance(&FiberLink::smf(50.0)), 0.1) < 1e-14);
        assert!(rel(channel_transmittance(&FiberLink::smf(100.0)), 0.01) < 1e-14);
    }

    #[test]
    fn width_without_dispersion() {
        let s = SourceParams::default();
        let tau = heralded_width(&s, &FiberLink::smf(0.0), &FiberLink::smf(0.0)).unwrap();
        assert!(rel(tau, 1.0 / 1.5e12) < 1e-14);

        let s = SourceParams::with_rho(0.9);
        let tau = heralded_width(&s, &FiberLink::smf(0.0), &FiberLink::smf(0.0)).unwrap();
        let expected = 1.0 / (1.5e12 * (1.0f64 - 0.9).sqrt());
        assert!(rel(tau, expected) < 1e-12);
        assert!((tau - 2.108e-12).abs() < 1e-15);
    }

    #[test]
    fn rejects_boundary_correlation() {
        for rho in [1.0, -1.0, 1.2, f64::NAN] {
            let s = SourceParams::with_rho(rho);
            let err = heralded_width(&s, &FiberLink::smf(1.0), &FiberLink::smf(1.0)).unwrap_err();
            assert!(matches!(err, ModelError::InvalidParameter { name: "rho", .. }));
        }
    }

    #[test]
    fn rejects_negative_length() {
        let s = SourceParams::default();
        assert!(heralded_width(&s, &FiberLink::smf(-1.0), &FiberLink::smf(1.0)).is_err());
    }

    #[test]
    fn monotone_broadening_uncorrelated() {
        let s = SourceParams::default();
        let a = FiberLink::smf(7.0);
        let mut prev = 0.0;
        for i in 0..500 {
            let tau = heralded_width(&s, &a, &FiberLink::smf(i as f64)).unwrap();
            assert!(tau >= prev, "tau decreased at L_B = {i}");
            prev = tau;
        }
    }

    #[test]
    fn transmittance_strictly_decreasing() {
        let mut prev = 1.0 + f64::EPSILON;
        for i in 0..200 {
            let t = channel_transmittance(&FiberLink::smf(i as f64 * 0.5));
            assert!(t < prev);
            prev = t;
        }
        let mut prev = 1.0 + f64::EPSILON;
        for i in 0..200 {
            let link = FiberLink {
                length: 10.0,
                attenuation: i as f64 * 0.01,
                beta: 0.0,
            };
            let t = channel_transmittance(&link);
            assert!(t < prev);
            prev = t;
        }
    }
}
