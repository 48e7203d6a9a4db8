//! Secret-key rate of entanglement-based BB84 over dispersive fiber when the
//! two receivers share no global time reference, together with the
//! optimizers that choose the coincidence window, the spectral correlation
//! and the dispersion on the short arm.
//!
//! The crate is layered bottom-up:
//!
//! * [`physics`] and [`biphoton`]: the temporal shape of a dispersed photon
//!   pair and the closed-form heralded width; [`quadrature`] integrates the
//!   pair intensity numerically as an independent check of that width.
//! * [`security`]: click statistics, error rate and the key-rate bound.
//! * [`optimizer`] and [`sweep`]: window optimization, secure-distance
//!   searches and deterministic parallel parameter grids.
//! * [`devices`]: dispersive components for Alice's arm.
//! * [`config`], [`output`] and [`presets`]: the file formats and named runs
//!   behind the `dqkd` command-line tool.

pub mod biphoton;
pub mod config;
pub mod devices;
pub mod error;
pub mod optimizer;
pub mod output;
pub mod physics;
pub mod presets;
pub mod quadrature;
pub mod security;
pub mod sweep;

pub use biphoton::{biphoton_intensity, BiphotonAmplitude};
pub use config::{parse_config, parse_config_with, RunConfig};
pub use devices::{device_locus, dispersion_to_delay, Catalog, DeviceKind, DispersiveDevice};
pub use error::{ModelError, Result};
pub use optimizer::{
    max_secure_distance, optimal_alice_length, optimize_window, AliceOptimum, DistanceSearch, ScanSpec,
};
pub use physics::{
    channel_transmittance, dimensionless_dispersion, g_factor, heralded_width, ArmProfile, FiberLink, SourceParams,
};
pub use security::{
    acceptance_probability, binary_entropy, click_probabilities, key_rate, qber, ClickStats, DetectorParams,
    KeyRateModel, KeyRateResult,
};
pub use sweep::{sweep, Scenario, SweepAxis, SweepGrid, SweepParam, SweepTable, WindowMode};
