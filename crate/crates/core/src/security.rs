//! Detection statistics and the asymptotic key-rate bound for
//! entanglement-based BB84 with temporal filtering.
//!
//! Each party runs two free-running detectors and keeps only coincidences
//! whose time difference falls inside a window of `ξ·τ_h`. Dark counts are
//! the only noise source unless a misalignment probability is given.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, ModelError, Result};
use crate::physics::{heralded_width_for, ArmProfile, FiberLink, SourceParams};

/// Dark counts per second of the reference detectors.
pub const DEFAULT_DARK_RATE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Dark count rate per detector, s⁻¹.
    pub dark_rate: f64,
    /// Probability of anticorrelated outcomes for a genuine pair measured in
    /// matching bases.
    pub misalignment: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            dark_rate: DEFAULT_DARK_RATE,
            misalignment: 0.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.dark_rate >= 0.0 && self.dark_rate.is_finite(), "dark_rate", self.dark_rate, "dark_rate >= 0")?;
        ensure(
            (0.0..=0.5).contains(&self.misalignment),
            "misalignment",
            self.misalignment,
            "0 <= misalignment <= 0.5",
        )
    }
}

/// Per-emission probabilities of the accepted event classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickStats {
    /// Both photons detected inside the window.
    pub p_sign: f64,
    /// Both photons arrived but a dark count was accepted in place of one.
    pub p_dc: f64,
    /// A's photon arrived, B's lost, a dark count at B accepted.
    pub p_plus_minus: f64,
    /// A's photon lost, B's arrived, a dark count at A accepted.
    pub p_minus_plus: f64,
    /// Both photons lost, two coincident dark counts accepted.
    pub p_both_lost: f64,
    /// Sum of the five terms above.
    pub p_exp: f64,
    /// Set when a linearized term left [0, 1] and was clamped, or when the
    /// sum exceeds 1. The model is outside its small-`P_h` regime.
    pub clamped: bool,
}

/// Optimized or fixed-window evaluation of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub xi: f64,
    /// s
    pub tau_h: f64,
    /// `ξ·τ_h`, s
    pub window: f64,
    pub stats: ClickStats,
    pub qber: f64,
    /// Bits per emission attempt, clamped at zero.
    pub key_rate: f64,
    /// Unclamped `p_exp·(1 − 2H(QBER))`; negative when no key can be certified.
    pub bound: f64,
    /// No event is accepted at all.
    pub no_signal: bool,
}

/// Shannon entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    ensure((0.0..=1.0).contains(&x), "x", x, "0 <= x <= 1")?;
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Probability that a genuine coincidence falls inside a window of `ξ·τ_h`:
/// `erf(ξ / 2√2)`.
pub fn acceptance_probability(xi: f64) -> Result<f64> {
    ensure(xi >= 0.0, "xi", xi, "xi >= 0")?;
    Ok(libm::erf(xi / (2.0 * std::f64::consts::SQRT_2)))
}

fn clamp_unit(p: f64, clamped: &mut bool) -> f64 {
    if p > 1.0 {
        *clamped = true;
        1.0
    } else if p < 0.0 {
        *clamped = true;
        0.0
    } else {
        p
    }
}

/// Error rate of the sifted key.
///
/// Events involving a dark count are wrong half the time; genuine pairs are
/// wrong with the misalignment probability.
pub fn qber(stats: &ClickStats, det: &DetectorParams) -> Result<f64> {
    if stats.p_exp.is_nan() || stats.p_exp <= 0.0 {
        return Err(ModelError::NoSignal);
    }
    let base = (stats.p_exp - stats.p_sign) / (2.0 * stats.p_exp);
    let q = base + det.misalignment * stats.p_sign / stats.p_exp;
    Ok(q.clamp(0.0, 0.5))
}

/// A configuration with every window-independent quantity precomputed, so
/// the window factor can be scanned cheaply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateModel {
    tau_h: f64,
    t_a: f64,
    t_b: f64,
    dark_rate: f64,
    rep_rate: f64,
    detector: DetectorParams,
}

impl KeyRateModel {
    pub fn new(source: &SourceParams, link_a: &FiberLink, link_b: &FiberLink, det: &DetectorParams) -> Result<Self> {
        link_a.validate()?;
        link_b.validate()?;
        Self::for_profiles(source, &link_a.into(), &link_b.into(), det)
    }

    /// Model with arms given by their aggregate loss and dispersion.
    pub fn for_profiles(
        source: &SourceParams,
        arm_a: &ArmProfile,
        arm_b: &ArmProfile,
        det: &DetectorParams,
    ) -> Result<Self> {
        arm_a.validate()?;
        arm_b.validate()?;
        det.validate()?;
        let tau_h = heralded_width_for(source, arm_a, arm_b)?;
        Ok(Self {
            tau_h,
            t_a: arm_a.transmittance(),
            t_b: arm_b.transmittance(),
            dark_rate: det.dark_rate,
            rep_rate: source.rep_rate,
            detector: *det,
        })
    }

    pub fn tau_h(&self) -> f64 {
        self.tau_h
    }

    pub fn transmittances(&self) -> (f64, f64) {
        (self.t_a, self.t_b)
    }

    pub fn click_probabilities(&self, xi: f64) -> Result<ClickStats> {
        ensure(xi > 0.0 && xi.is_finite(), "xi", xi, "xi > 0")?;
        let (t_a, t_b) = (self.t_a, self.t_b);
        let eta = acceptance_probability(xi)?;
        let mut clamped = false;
        let p_h = clamp_unit(self.dark_rate * xi * self.tau_h, &mut clamped);

        let p_sign = clamp_unit(t_a * t_b * eta, &mut clamped);
        // factor 4: one dark count in any of the four detectors
        let p_dc = clamp_unit(4.0 * t_a * t_b * (1.0 - eta) * p_h, &mut clamped);
        // factor 2: either of the two detectors on the side that lost its photon
        let p_plus_minus = clamp_unit(2.0 * t_a * (1.0 - t_b) * p_h, &mut clamped);
        let p_minus_plus = clamp_unit(2.0 * (1.0 - t_a) * t_b * p_h, &mut clamped);
        let p_both_lost = clamp_unit(
            (1.0 - t_a) * (1.0 - t_b) * (2.0 * self.dark_rate / self.rep_rate) * 2.0 * p_h,
            &mut clamped,
        );
        let p_exp = p_sign + p_dc + p_plus_minus + p_minus_plus + p_both_lost;
        if p_exp > 1.0 {
            clamped = true;
        }
        Ok(ClickStats {
            p_sign,
            p_dc,
            p_plus_minus,
            p_minus_plus,
            p_both_lost,
            p_exp,
            clamped,
        })
    }

    /// Key rate at window factor `xi`.
    pub fn evaluate(&self, xi: f64) -> Result<KeyRateResult> {
        let stats = self.click_probabilities(xi)?;
        let (qber, bound, no_signal) = match qber(&stats, &self.detector) {
            Ok(q) => (q, stats.p_exp * (1.0 - 2.0 * binary_entropy(q)?), false),
            Err(ModelError::NoSignal) => (0.5, 0.0, true),
            Err(e) => return Err(e),
        };
        Ok(KeyRateResult {
            xi,
            tau_h: self.tau_h,
            window: xi * self.tau_h,
            stats,
            qber,
            key_rate: bound.max(0.0),
            bound,
            no_signal,
        })
    }
}

/// Acceptance statistics for window factor `xi`.
pub fn click_probabilities(
    source: &SourceParams,
    link_a: &FiberLink,
    link_b: &FiberLink,
    det: &DetectorParams,
    xi: f64,
) -> Result<ClickStats> {
    KeyRateModel::new(source, link_a, link_b, det)?.click_probabilities(xi)
}

/// Lower bound on the secret key per emission, `max(0, p_exp·(1 − 2H(QBER)))`.
pub fn key_rate(
    source: &SourceParams,
    link_a: &FiberLink,
    link_b: &FiberLink,
    det: &DetectorParams,
    xi: f64,
) -> Result<KeyRateResult> {
    KeyRateModel::new(source, link_a, link_b, det)?.evaluate(xi)
}
