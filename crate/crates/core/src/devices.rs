//! Dispersive devices Alice can place in her arm, and conversion from
//! accumulated dispersion to the delay-per-wavelength figure used in
//! equipment datasheets.
//!
//! Catalog files are TOML with one `[[device]]` table per entry:
//!
//! ```toml
//! [[device]]
//! name = "SMF"
//! kind = "fiber"      # "fiber" (per km) or "module" (per unit)
//! alpha = 0.2         # dB/km for fibers, dB per module
//! beta = 1.15e-23     # s²/km for fibers, s² per module
//! assumed = false     # true when the numbers are stand-ins, not measured data
//! ```
//!
//! `beta` is counted positive when it has the same sign as Bob's fiber.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Fiber,
    Module,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersiveDevice {
    pub name: String,
    pub kind: DeviceKind,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub assumed: bool,
}

/// A point in Alice's (dispersion, loss) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusPoint {
    /// s²
    pub dispersion: f64,
    /// dB
    pub loss: f64,
}

impl DispersiveDevice {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(ModelError::InvalidDevice("empty device name".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(ModelError::InvalidDevice(format!("{}: loss must be >= 0, got {}", self.name, self.alpha)));
        }
        if !self.beta.is_finite() {
            return Err(ModelError::InvalidDevice(format!("{}: non-finite dispersion", self.name)));
        }
        Ok(())
    }

    /// Loss and dispersion after `amount` km of fiber or `amount` modules.
    pub fn locus_point(&self, amount: f64) -> Result<LocusPoint> {
        if !(amount >= 0.0 && amount.is_finite()) {
            return Err(ModelError::InvalidDevice(format!(
                "{}: amount must be >= 0, got {amount}",
                self.name
            )));
        }
        if self.kind == DeviceKind::Module && amount.fract() != 0.0 {
            return Err(ModelError::InvalidDevice(format!(
                "{}: module count must be an integer, got {amount}",
                self.name
            )));
        }
        Ok(LocusPoint {
            dispersion: self.beta * amount,
            loss: self.alpha * amount,
        })
    }
}

/// The curve (fiber) or point set (module) a device traces in the
/// (dispersion, loss) plane.
pub fn device_locus(dev: &DispersiveDevice, amounts: &[f64]) -> Result<Vec<LocusPoint>> {
    dev.validate()?;
    amounts.iter().map(|&a| dev.locus_point(a)).collect()
}

/// Delay spread per unit wavelength, s/m, produced by an accumulated
/// half-GVD `beta_l` (s²) at centre wavelength `wavelength` (m):
/// `(2πc/λ²)·|βL|`.
pub fn dispersion_to_delay(beta_l: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "wavelength",
            value: wavelength,
            constraint: "wavelength > 0",
        });
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / (wavelength * wavelength) * beta_l.abs())
}

/// s/m → ps/nm
pub fn delay_ps_per_nm(delay_s_per_m: f64) -> f64 {
    delay_s_per_m * 1e12 * 1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    #[serde(rename = "device", default)]
    pub devices: Vec<DispersiveDevice>,
}

impl Default for Catalog {
    /// Standard fiber, a high-dispersion fiber with DCF-like magnitude but the
    /// sign of ordinary fiber, and a discrete dispersion module. Only the
    /// standard fiber numbers are reference data; the other two are
    /// industry-typical stand-ins.
    fn default() -> Self {
        Self {
            devices: vec![
                DispersiveDevice {
                    name: "SMF".into(),
                    kind: DeviceKind::Fiber,
                    alpha: 0.2,
                    beta: 1.15e-23,
                    assumed: false,
                },
                DispersiveDevice {
                    name: "HDF".into(),
                    kind: DeviceKind::Fiber,
                    alpha: 0.5,
                    beta: 1.15e-22,
                    assumed: true,
                },
                DispersiveDevice {
                    name: "module".into(),
                    kind: DeviceKind::Module,
                    alpha: 4.0,
                    beta: 1.27e-21,
                    assumed: true,
                },
            ],
        }
    }
}

impl Catalog {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let catalog: Catalog = toml::from_str(text).map_err(|e| ModelError::InvalidDevice(e.to_string()))?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("catalog serializes")
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self>> {
        Ok(Self::from_toml_str(&std::fs::read_to_string(path)?))
    }

    pub fn validate(&self) -> Result<()> {
        for (i, dev) in self.devices.iter().enumerate() {
            dev.validate()?;
            if self.devices[..i].iter().any(|d| d.name == dev.name) {
                return Err(ModelError::InvalidDevice(format!("duplicate device name `{}`", dev.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&DispersiveDevice> {
        self.devices.iter().find(|d| d.name == name)
    }
}
