//! Brute-force moments of the detection-time difference, integrated
//! numerically from the two-photon intensity.
//!
//! Integration runs in the rotated frame `u = (t2 − t1)/√2`,
//! `v = (t2 + t1)/√2`. The intensity is a Gaussian whose quadratic form is
//! recovered by probing [`BiphotonAmplitude::decay`]; that fixes the extent of
//! the `u` axis and, for each `u`, the centre and extent of the `v` slice.
//! Shearing the `v` grid along the ridge keeps strongly elongated densities
//! (one arm far more dispersed than the other) resolved on a fixed point
//! count.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::biphoton::BiphotonAmplitude;
use crate::error::{ModelError, Result};

/// Grid settings for [`time_difference_moments`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    /// Points per axis (odd, so the centre is sampled).
    pub points: usize,
    /// Half-width of each axis in marginal standard deviations.
    pub span: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self {
            points: 2001,
            span: 8.0,
        }
    }
}

/// Numerically integrated moments of `t2 − t1` under `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceMoments {
    /// Total probability; 1 for a normalized wavefunction.
    pub mass: f64,
    /// Mean of `t2 − t1`, s.
    pub mean: f64,
    /// Standard deviation of `t2 − t1`, s.
    pub std_dev: f64,
}

/// Quadratic form `A_uu u² + 2 A_uv uv + A_vv v²` of the intensity decay.
struct RotatedForm {
    uu: f64,
    uv: f64,
    vv: f64,
}

fn probe_form(amp: &BiphotonAmplitude, scale: f64) -> RotatedForm {
    // decay is an exact homogeneous quadratic, so single probes suffice
    let h2 = scale * scale;
    let a = amp.decay(scale, 0.0) / h2;
    let c = amp.decay(0.0, scale) / h2;
    let b = (amp.decay(scale, scale) / h2 - a - c) / 2.0;
    RotatedForm {
        uu: (a - 2.0 * b + c) / 2.0,
        uv: (c - a) / 2.0,
        vv: (a + 2.0 * b + c) / 2.0,
    }
}

fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Integrates `|ψ|²`, `(t2 − t1)|ψ|²` and `(t2 − t1)²|ψ|²` over the plane
/// with the trapezoidal rule.
pub fn time_difference_moments(amp: &BiphotonAmplitude, grid: QuadratureGrid) -> Result<DifferenceMoments> {
    if grid.points < 3 || grid.span <= 0.0 {
        return Err(ModelError::Domain(format!(
            "quadrature grid needs >= 3 points and positive span, got {grid:?}"
        )));
    }
    // Probe at a time scale where the decay is O(1) for an undispersed pulse.
    let probe = {
        let unit = amp.decay(1.0, 0.0).abs().max(amp.decay(0.0, 1.0).abs());
        1.0 / unit.sqrt()
    };
    let form = probe_form(amp, probe);
    let det = form.uu * form.vv - form.uv * form.uv;
    if !(form.vv > 0.0 && det > 0.0) {
        return Err(ModelError::Domain("intensity is not a normalizable Gaussian".into()));
    }
    // Density ∝ exp(−Q): marginal variance of u is A_vv / (2 det),
    // conditional v | u has mean −(A_uv/A_vv)u and variance 1/(2 A_vv).
    let sd_u = (form.vv / (2.0 * det)).sqrt();
    let sd_v_given_u = (1.0 / (2.0 * form.vv)).sqrt();
    let shear = -form.uv / form.vv;

    let n = grid.points;
    let du = 2.0 * grid.span * sd_u / (n - 1) as f64;
    let ds = 2.0 * grid.span * sd_v_given_u / (n - 1) as f64;

    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let u = -grid.span * sd_u + i as f64 * du;
        let centre = shear * u;
        let mut slice = 0.0;
        for j in 0..n {
            let v = centre - grid.span * sd_v_given_u + j as f64 * ds;
            let t1 = (v - u) * FRAC_1_SQRT_2;
            let t2 = (v + u) * FRAC_1_SQRT_2;
            slice += trapezoid_weight(j, n) * amp.intensity(t1, t2);
        }
        let w = trapezoid_weight(i, n) * slice;
        m0 += w;
        m1 += w * u;
        m2 += w * u * u;
    }
    // the (u, s) → (u, v) shear has unit Jacobian, and so does the rotation
    let cell = du * ds;
    let mass = m0 * cell;
    let mean_u = m1 / m0;
    let var_u = m2 / m0 - mean_u * mean_u;
    // t2 − t1 = √2·u
    Ok(DifferenceMoments {
        mass,
        mean: std::f64::consts::SQRT_2 * mean_u,
        std_dev: (2.0 * var_u).sqrt(),
    })
}
