//! Run configuration: a flat TOML document whose keys are the parameter
//! vocabulary, plus an optional `[[axis]]` list for grid sweeps.
//!
//! ```toml
//! rho = 0.9
//! L_A = 1.0
//! L_B = 100.0
//! xi = 6.0            # omit to optimize the window factor at every point
//!
//! [[axis]]
//! name = "L_B"
//! values = [0.0, 50.0, 100.0]
//!
//! [[axis]]
//! name = "rho"
//! start = -0.9        # alternative to `values`: inclusive linear range
//! stop = 0.9
//! count = 7
//! ```
//!
//! Every key is optional; missing keys take the reference values. Unknown
//! keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::optimizer::{DistanceSearch, ScanSpec};
use crate::physics::{FiberLink, SourceParams, DEFAULT_ATTENUATION, DEFAULT_BETA, DEFAULT_REP_RATE, DEFAULT_SIGMA};
use crate::security::{DetectorParams, DEFAULT_DARK_RATE};
use crate::sweep::{Scenario, SweepAxis, SweepGrid, SweepParam, WindowMode};

/// Preset names accepted by the `preset` key and the CLI.
pub const PRESETS: [&str; 8] = ["fig2", "fig3", "fig4", "fig5", "figA1", "point", "maxdist", "sweep"];

/// Bob lengths used by the Alice-length scans when none are configured, km.
pub const DEFAULT_FIG3_BOB_LENGTHS: [f64; 5] = [190.0, 200.0, 205.0, 210.0, 215.0];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(String),

    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error("bad override `{arg}`: {message}")]
    Override { arg: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub output: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    /// Sweep worker threads; 0 uses all available cores.
    pub workers: usize,
    pub source: SourceParams,
    pub link_a: FiberLink,
    pub link_b: FiberLink,
    pub detector: DetectorParams,
    /// Fixed window factor; `None` optimizes it per point.
    pub xi: Option<f64>,
    pub scan: ScanSpec,
    pub search: DistanceSearch,
    pub axes: Vec<SweepAxis>,
    pub fig3_bob_lengths: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Document::default().into_config().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            source: self.source,
            link_a: self.link_a,
            link_b: self.link_b,
            detector: self.detector,
        }
    }

    pub fn window_mode(&self) -> WindowMode {
        match self.xi {
            Some(xi) => WindowMode::Fixed(xi),
            None => WindowMode::Optimized(self.scan),
        }
    }

    /// The `[[axis]]` grid, when one is configured.
    pub fn grid(&self) -> Option<SweepGrid> {
        (!self.axes.is_empty()).then(|| SweepGrid {
            axes: self.axes.clone(),
            mode: self.window_mode(),
        })
    }

    /// Serializes back to the document format; `parse_config` of the result
    /// reproduces `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&Document::from_config(self)).expect("configuration serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[allow(non_snake_case)]
struct Document {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    catalog: Option<PathBuf>,
    workers: usize,
    sigma_a: f64,
    sigma_b: f64,
    rho: f64,
    rep_rate: f64,
    L_A: f64,
    alpha_A: f64,
    beta_A: f64,
    L_B: f64,
    alpha_B: f64,
    beta_B: f64,
    d: f64,
    e: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    xi_min: f64,
    xi_max: f64,
    coarse_points: usize,
    refine_tol: f64,
    L_B_hi: f64,
    step: f64,
    tol: f64,
    fig3_L_B: Vec<f64>,
    #[serde(rename = "axis", skip_serializing_if = "Vec::is_empty")]
    axes: Vec<AxisDoc>,
}

impl Default for Document {
    fn default() -> Self {
        let scan = ScanSpec::default();
        let search = DistanceSearch::default();
        Self {
            preset: None,
            output: None,
            catalog: None,
            workers: 0,
            sigma_a: DEFAULT_SIGMA,
            sigma_b: DEFAULT_SIGMA,
            rho: 0.0,
            rep_rate: DEFAULT_REP_RATE,
            L_A: 0.0,
            alpha_A: DEFAULT_ATTENUATION,
            beta_A: DEFAULT_BETA,
            L_B: 0.0,
            alpha_B: DEFAULT_ATTENUATION,
            beta_B: DEFAULT_BETA,
            d: DEFAULT_DARK_RATE,
            e: 0.0,
            xi: None,
            xi_min: scan.xi_min,
            xi_max: scan.xi_max,
            coarse_points: scan.coarse_points,
            refine_tol: scan.refine_tol,
            L_B_hi: search.ceiling,
            step: search.step,
            tol: search.tol,
            fig3_L_B: DEFAULT_FIG3_BOB_LENGTHS.to_vec(),
            axes: Vec::new(),
        }
    }
}

/// Rewrites a model validation error in terms of the document key.
fn model_error(err: ModelError, key_of: impl Fn(&str) -> &str) -> ConfigError {
    match err {
        ModelError::InvalidParameter {
            name,
            value,
            constraint,
        } => {
            let key = key_of(name).to_string();
            let constraint = if name == "rho" {
                "must lie in the open interval (-1, 1)".to_string()
            } else {
                format!("must satisfy {}", constraint.replace(name, &key))
            };
            invalid(key, format!("{value} {constraint}"))
        }
        other => invalid("?", other.to_string()),
    }
}

fn expand_axis(doc: &AxisDoc) -> Result<SweepAxis, ConfigError> {
    let param: SweepParam = doc
        .name
        .parse()
        .map_err(|e: ModelError| invalid("axis.name", e.to_string()))?;
    let key = format!("axis[{}]", doc.name);
    let values = match (&doc.values, doc.start, doc.stop, doc.count) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(start), Some(stop), Some(count)) => {
            if count == 0 {
                return Err(invalid(key, "count must be >= 1"));
            }
            if count == 1 {
                vec![start]
            } else {
                let h = (stop - start) / (count - 1) as f64;
                (0..count)
                    .map(|i| if i + 1 == count { stop } else { start + h * i as f64 })
                    .collect()
            }
        }
        _ => return Err(invalid(key, "give either `values` or all of `start`, `stop`, `count`")),
    };
    Ok(SweepAxis { param, values })
}

impl Document {
    fn into_config(self) -> Result<RunConfig, ConfigError> {
        if let Some(p) = &self.preset {
            if !PRESETS.contains(&p.as_str()) {
                return Err(invalid("preset", format!("unknown preset `{p}`, expected one of {}", PRESETS.join(", "))));
            }
        }
        let source = SourceParams {
            sigma_a: self.sigma_a,
            sigma_b: self.sigma_b,
            rho: self.rho,
            rep_rate: self.rep_rate,
        };
        source.validate().map_err(|e| model_error(e, |n| n))?;
        let link = |length, attenuation, beta, suffix: &'static str| {
            let link = FiberLink {
                length,
                attenuation,
                beta,
            };
            link.validate().map_err(|e| {
                model_error(e, |n| match (n, suffix) {
                    ("length", "A") => "L_A",
                    ("length", _) => "L_B",
                    ("attenuation", "A") => "alpha_A",
                    ("attenuation", _) => "alpha_B",
                    ("beta", "A") => "beta_A",
                    _ => "beta_B",
                })
            })?;
            Ok::<_, ConfigError>(link)
        };
        let link_a = link(self.L_A, self.alpha_A, self.beta_A, "A")?;
        let link_b = link(self.L_B, self.alpha_B, self.beta_B, "B")?;
        let detector = DetectorParams {
            dark_rate: self.d,
            misalignment: self.e,
        };
        detector.validate().map_err(|e| {
            model_error(e, |n| match n {
                "dark_rate" => "d",
                _ => "e",
            })
        })?;
        if let Some(xi) = self.xi {
            if !(xi > 0.0 && xi.is_finite()) {
                return Err(invalid("xi", format!("{xi} must be > 0")));
            }
        }
        let scan = ScanSpec {
            xi_min: self.xi_min,
            xi_max: self.xi_max,
            coarse_points: self.coarse_points,
            refine_tol: self.refine_tol,
        };
        scan.validate().map_err(|e| model_error(e, |n| n))?;
        let search = DistanceSearch {
            ceiling: self.L_B_hi,
            step: self.step,
            tol: self.tol,
        };
        search.validate().map_err(|e| model_error(e, |n| n))?;
        if self.fig3_L_B.is_empty() || self.fig3_L_B.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(invalid("fig3_L_B", "must be a non-empty list of lengths >= 0"));
        }

        let axes = self.axes.iter().map(expand_axis).collect::<Result<Vec<_>, _>>()?;
        let config = RunConfig {
            preset: self.preset,
            output: self.output,
            catalog: self.catalog,
            workers: self.workers,
            source,
            link_a,
            link_b,
            detector,
            xi: self.xi,
            scan,
            search,
            axes,
            fig3_bob_lengths: self.fig3_L_B,
        };
        if let Some(grid) = config.grid() {
            grid.validate().map_err(|e| invalid("axis", e.to_string()))?;
        }
        Ok(config)
    }

    fn from_config(c: &RunConfig) -> Self {
        Self {
            preset: c.preset.clone(),
            output: c.output.clone(),
            catalog: c.catalog.clone(),
            workers: c.workers,
            sigma_a: c.source.sigma_a,
            sigma_b: c.source.sigma_b,
            rho: c.source.rho,
            rep_rate: c.source.rep_rate,
            L_A: c.link_a.length,
            alpha_A: c.link_a.attenuation,
            beta_A: c.link_a.beta,
            L_B: c.link_b.length,
            alpha_B: c.link_b.attenuation,
            beta_B: c.link_b.beta,
            d: c.detector.dark_rate,
            e: c.detector.misalignment,
            xi: c.xi,
            xi_min: c.scan.xi_min,
            xi_max: c.scan.xi_max,
            coarse_points: c.scan.coarse_points,
            refine_tol: c.scan.refine_tol,
            L_B_hi: c.search.ceiling,
            step: c.search.step,
            tol: c.search.tol,
            fig3_L_B: c.fig3_bob_lengths.clone(),
            axes: c
                .axes
                .iter()
                .map(|a| AxisDoc {
                    name: a.param.name().to_string(),
                    values: Some(a.values.clone()),
                    start: None,
                    stop: None,
                    count: None,
                })
                .collect(),
        }
    }
}

/// Parses one `key=value` override. The value is read as a TOML value and
/// falls back to a bare string.
fn parse_override(arg: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, raw) = arg.split_once('=').ok_or_else(|| ConfigError::Override {
        arg: arg.to_string(),
        message: "expected key=value".into(),
    })?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override {
            arg: arg.to_string(),
            message: "empty key".into(),
        });
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Parses a configuration document, applies `key=value` overrides on top and
/// validates the result.
pub fn parse_config_with(document: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    parse_config_layers(&[document], overrides)
}

/// Like [`parse_config_with`], but merges several documents first; a key in
/// a later document replaces the same key from an earlier one.
pub fn parse_config_layers(documents: &[&str], overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = toml::Table::new();
    for document in documents {
        let layer: toml::Table = toml::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
        table.extend(layer);
    }
    for arg in overrides {
        let (key, value) = parse_override(arg)?;
        table.insert(key, value);
    }
    let doc: Document = table.try_into().map_err(|e| ConfigError::Parse(e.to_string()))?;
    doc.into_config()
}

pub fn parse_config(document: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(document, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_values() {
        let c = parse_config("").unwrap();
        assert_eq!(c.source.sigma_a, 1.5e12);
        assert_eq!(c.source.sigma_b, 1.5e12);
        assert_eq!(c.source.rep_rate, 2e8);
        assert_eq!(c.link_a.attenuation, 0.2);
        assert_eq!(c.link_b.beta, -1.15e-23);
        assert_eq!(c.detector.dark_rate, 1e3);
        assert_eq!(c.detector.misalignment, 0.0);
        assert_eq!(c.scan, ScanSpec::default());
        assert_eq!(c.search, DistanceSearch::default());
        assert_eq!(c.xi, None);
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn rho_out_of_range_names_key_and_interval() {
        let err = parse_config("rho = 1.2").unwrap_err().to_string();
        assert!(err.contains("rho"), "{err}");
        assert!(err.contains("(-1, 1)"), "{err}");
    }

    #[test]
    fn link_errors_use_document_keys() {
        let err = parse_config("L_B = -3").unwrap_err().to_string();
        assert!(err.contains("`L_B`"), "{err}");
        let err = parse_config("alpha_A = -0.1").unwrap_err().to_string();
        assert!(err.contains("`alpha_A`"), "{err}");
        let err = parse_config("e = 0.7").unwrap_err().to_string();
        assert!(err.contains("`e`"), "{err}");
    }

    #[test]
    fn evaluation_point() {
        let c = parse_config("rho = 0.9\nL_A = 1\nL_B = 100\n").unwrap();
        assert_eq!(c.source.rho, 0.9);
        assert_eq!(c.link_a.length, 1.0);
        assert_eq!(c.link_b.length, 100.0);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("colour = 3").unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        let err = parse_config("[[axis]]\nname = \"L_B\"\nvalues = [1.0]\nwidth = 2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("width"), "{err}");
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(parse_config("rho = = 3"), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config("rho = \"high\""), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn overrides() {
        let c = parse_config_with("rho = 0.1", &["rho=0.9".into(), "L_B=120".into(), "preset=fig2".into()]).unwrap();
        assert_eq!(c.source.rho, 0.9);
        assert_eq!(c.link_b.length, 120.0);
        assert_eq!(c.preset.as_deref(), Some("fig2"));
        assert!(matches!(
            parse_config_with("", &["rho".into()]),
            Err(ConfigError::Override { .. })
        ));
        assert!(parse_config_with("", &["preset=fig9".into()]).is_err());
    }

    #[test]
    fn later_layers_win() {
        let c = parse_config_layers(&["rho = 0.9\nL_A = 1", "rho = 0.5"], &["L_B=3".into()]).unwrap();
        assert_eq!(c.source.rho, 0.5);
        assert_eq!(c.link_a.length, 1.0);
        assert_eq!(c.link_b.length, 3.0);
    }

    #[test]
    fn axes() {
        let doc = "[[axis]]\nname = \"rho\"\nstart = -0.9\nstop = 0.9\ncount = 7\n\n[[axis]]\nname = \"L_B\"\nvalues = [0, 100]\n";
        let c = parse_config(doc).unwrap();
        assert_eq!(c.axes.len(), 2);
        assert_eq!(c.axes[0].values.len(), 7);
        assert_eq!(c.axes[0].values[0], -0.9);
        assert_eq!(c.axes[0].values[6], 0.9);
        assert_eq!(c.axes[1].values, vec![0.0, 100.0]);

        assert!(parse_config("[[axis]]\nname = \"sigma\"\nvalues = [1.0]\n").is_err());
        assert!(parse_config("[[axis]]\nname = \"rho\"\nvalues = [0.2, 0.1, 0.3]\n").is_err());
        assert!(parse_config("[[axis]]\nname = \"rho\"\nstart = 0.0\n").is_err());
    }

    #[test]
    fn emit_round_trip() {
        let doc = "rho = 0.9\nL_A = 1\nxi = 3\noutput = \"x.csv\"\n[[axis]]\nname = \"L_B\"\nstart = 0\nstop = 10\ncount = 3\n";
        let c = parse_config(doc).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }
}
