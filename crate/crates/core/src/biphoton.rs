//! Propagated two-photon temporal wavefunction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::physics::{dimensionless, g_factor, ArmProfile, FiberLink, SourceParams};

/// Joint temporal amplitude `ψ(t1, t2)` of a photon pair after each photon
/// has crossed its own dispersive arm. `t1` is the detection time at A, `t2`
/// at B, both in seconds relative to the (unknown) emission time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonAmplitude {
    z_a: Complex64,
    z_b: Complex64,
    cross: f64,
    /// `g(−x_A x_B) + i(x_A + x_B)`
    denominator: Complex64,
    prefactor: Complex64,
    /// `ln |prefactor|²`
    log_norm: f64,
}

impl BiphotonAmplitude {
    pub fn new(source: &SourceParams, link_a: &FiberLink, link_b: &FiberLink) -> Result<Self> {
        link_a.validate()?;
        link_b.validate()?;
        Self::for_profiles(source, &link_a.into(), &link_b.into())
    }

    pub fn for_profiles(source: &SourceParams, arm_a: &ArmProfile, arm_b: &ArmProfile) -> Result<Self> {
        source.validate()?;
        let SourceParams {
            sigma_a: sa,
            sigma_b: sb,
            rho,
            ..
        } = *source;
        let one_minus = 1.0 - rho * rho;
        let x_a = dimensionless(sa, arm_a.dispersion);
        let x_b = dimensionless(sb, arm_b.dispersion);

        // The chirp on each time coordinate comes from the *other* arm: with
        // σ_A ≠ σ_B the same-arm pairing is not a normalizable density.
        let chirp = 2.0 * sa * sa * sb * sb * one_minus;
        let z_a = Complex64::new(sa * sa, chirp * arm_b.dispersion);
        let z_b = Complex64::new(sb * sb, chirp * arm_a.dispersion);
        let denominator = Complex64::new(g_factor(-x_a * x_b, rho), x_a + x_b);

        let numerator = Complex64::i() * ((sa * sb).sqrt() * one_minus.sqrt().sqrt());
        let prefactor = numerator / (-PI * denominator).sqrt();
        let log_norm = (sa * sb * one_minus.sqrt() / (PI * denominator.norm())).ln();

        Ok(Self {
            z_a,
            z_b,
            cross: sa * sb * rho,
            denominator,
            prefactor,
            log_norm,
        })
    }

    fn quadratic(&self, t1: f64, t2: f64) -> Complex64 {
        self.z_a * (t1 * t1) + self.z_b * (t2 * t2) + 2.0 * self.cross * t1 * t2
    }

    pub fn amplitude(&self, t1: f64, t2: f64) -> Complex64 {
        self.prefactor * (-self.quadratic(t1, t2) / (2.0 * self.denominator)).exp()
    }

    /// Real part of the exponent of `|ψ|²`, i.e. `|ψ|² = |prefactor|²·exp(−q)`.
    /// A homogeneous quadratic form in `(t1, t2)`.
    pub fn decay(&self, t1: f64, t2: f64) -> f64 {
        (self.quadratic(t1, t2) / self.denominator).re
    }

    pub fn log_intensity(&self, t1: f64, t2: f64) -> f64 {
        self.log_norm - self.decay(t1, t2)
    }

    pub fn intensity(&self, t1: f64, t2: f64) -> f64 {
        self.log_intensity(t1, t2).exp()
    }
}

/// `|ψ(t1, t2)|²` for the pair after propagation through both links.
pub fn biphoton_intensity(
    source: &SourceParams,
    link_a: &FiberLink,
    link_b: &FiberLink,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    Ok(BiphotonAmplitude::new(source, link_a, link_b)?.intensity(t1, t2))
}
