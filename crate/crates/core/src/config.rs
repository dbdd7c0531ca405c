//! JSON run configuration shared by all subcommands.
//!
//! ```json
//! {"n": 2, "topology": "sphere_like", "preset": {"type": "bump", "eps": 0.1}, "grid": {"N": 4096}}
//! ```
//!
//! Loading reports the JSON path of the first offending value, both for
//! malformed documents and for values that parse but are out of range.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lab::SweepParam;
use crate::spectral::SolverOptions;
use crate::warp::{PresetKind, Topology, WarpProfile, MIN_INTERVALS};
use crate::{LabError, Result};

pub const DEFAULT_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetSpec {
    Round { k: f64 },
    Bump { eps: f64 },
    PeriodicProduct { c: f64, a: f64 },
    Samples { r: Vec<f64>, phi: Vec<f64> },
}

impl PresetSpec {
    fn analytic(&self) -> Option<PresetKind> {
        match *self {
            PresetSpec::Round { k } => Some(PresetKind::Round { k }),
            PresetSpec::Bump { eps } => Some(PresetKind::Bump { eps }),
            PresetSpec::PeriodicProduct { c, a } => Some(PresetKind::PeriodicProduct { c, a }),
            PresetSpec::Samples { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub intervals: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { intervals: DEFAULT_GRID }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iterations: usize,
    pub richardson: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_disc: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self { tol: d.tol, max_iterations: d.max_iterations, richardson: false, tol_disc: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// Sweep values, either listed or as `start, start + step, ..` up to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl SweepSpec {
    pub fn resolved_values(&self) -> Result<Vec<f64>> {
        if let Some(values) = &self.values {
            if values.is_empty() {
                return Err(config_error("sweep.values", "must not be empty"));
            }
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(config_error(&format!("sweep.values[{i}]"), "must be finite"));
            }
            return Ok(values.clone());
        }
        let (Some(start), Some(stop), Some(step)) = (self.start, self.stop, self.step) else {
            return Err(config_error("sweep", "give either values or start, stop and step"));
        };
        if !(step.is_finite() && step > 0.0) {
            return Err(config_error("sweep.step", "must be positive"));
        }
        if !(start.is_finite() && stop.is_finite() && stop >= start) {
            return Err(config_error("sweep.stop", "must be finite and not below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub grids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// Defaults to the natural topology of the preset; required for samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    pub preset: PresetSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeSpec>,
}

fn config_error(path: &str, detail: impl Into<String>) -> LabError {
    LabError::Config { path: path.to_string(), detail: detail.into() }
}

impl RunConfig {
    pub fn new(n: usize, preset: PresetSpec) -> Self {
        Self {
            n,
            topology: None,
            preset,
            grid: GridSpec::default(),
            solver: SolverSpec::default(),
            output: OutputSpec::default(),
            sweep: None,
            converge: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| config_error("$", e.to_string()))?;
        if let Some(preset) = value.get("preset") {
            check_preset_fields(preset)?;
        }
        let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "$".to_string() } else { path };
            config_error(&path, e.inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Range and consistency checks that the schema alone cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config_error("n", format!("dimension must be at least 2, got {}", self.n)));
        }
        match &self.preset {
            PresetSpec::Round { k } => {
                if !(k.is_finite() && *k > 0.0) {
                    return Err(config_error("preset.k", format!("must be positive, got {k}")));
                }
            }
            PresetSpec::Bump { eps } => {
                if !(eps.is_finite() && eps.abs() < 1.0) {
                    return Err(config_error("preset.eps", format!("must satisfy |eps| < 1, got {eps}")));
                }
            }
            PresetSpec::PeriodicProduct { c, a } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(config_error("preset.c", format!("must be positive, got {c}")));
                }
                if !(a.is_finite() && *a >= 0.0 && a < c) {
                    return Err(config_error("preset.a", format!("must satisfy 0 <= a < c, got {a}")));
                }
            }
            PresetSpec::Samples { r, phi } => {
                if r.len() < 3 {
                    return Err(config_error("preset.r", "need at least 3 samples"));
                }
                if phi.len() != r.len() {
                    return Err(config_error(
                        "preset.phi",
                        format!("has {} values but preset.r has {}", phi.len(), r.len()),
                    ));
                }
                if r[0] != 0.0 {
                    return Err(config_error("preset.r[0]", "sample abscissae must start at 0"));
                }
                if let Some(i) = r.windows(2).position(|w| !(w[1] > w[0])) {
                    return Err(config_error(&format!("preset.r[{}]", i + 1), "must be strictly increasing"));
                }
                if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
                    return Err(config_error(&format!("preset.phi[{i}]"), "must be finite"));
                }
                if self.topology.is_none() {
                    return Err(config_error("topology", "required for sampled profiles"));
                }
            }
        }
        if let (Some(t), Some(kind)) = (self.topology, self.preset.analytic()) {
            if t != kind.topology() {
                return Err(config_error("topology", format!("{} preset is {}, not {t}", kind, kind.topology())));
            }
        }
        if self.grid.intervals < MIN_INTERVALS {
            return Err(config_error(
                "grid.N",
                format!("must be at least {MIN_INTERVALS}, got {}", self.grid.intervals),
            ));
        }
        if !(self.solver.tol.is_finite() && self.solver.tol > 0.0) {
            return Err(config_error("solver.tol", format!("must be positive, got {}", self.solver.tol)));
        }
        if self.solver.max_iterations == 0 {
            return Err(config_error("solver.max_iterations", "must be positive"));
        }
        if let Some(t) = self.solver.tol_disc {
            if !(t.is_finite() && t > 0.0) {
                return Err(config_error("solver.tol_disc", format!("must be positive, got {t}")));
            }
        }
        if let Some(sweep) = &self.sweep {
            sweep.resolved_values()?;
            if let Some(kind) = self.preset.analytic() {
                sweep
                    .param
                    .apply(kind, 0.0)
                    .map_err(|e| config_error("sweep.param", e.to_string()))?;
            } else {
                return Err(config_error("sweep.param", "sampled profiles cannot be swept"));
            }
        }
        if let Some(converge) = &self.converge {
            validate_grids(&converge.grids).map_err(|detail| config_error("converge.grids", detail))?;
        }
        Ok(())
    }

    pub fn topology(&self) -> Topology {
        match (self.topology, self.preset.analytic()) {
            (Some(t), _) => t,
            (None, Some(kind)) => kind.topology(),
            (None, None) => Topology::SphereLike,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.solver.tol, max_iterations: self.solver.max_iterations }
    }

    /// The analytic preset, when the profile is not sampled.
    pub fn preset_kind(&self) -> Option<PresetKind> {
        self.preset.analytic()
    }

    pub fn profile(&self) -> Result<WarpProfile> {
        match &self.preset {
            PresetSpec::Samples { r, phi } => WarpProfile::from_samples(self.n, self.topology(), r, phi),
            other => WarpProfile::preset(other.analytic().expect("analytic preset"), self.n),
        }
    }

    /// Serialized form with sorted keys and shortest round-trip floats.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }
}

// Internally tagged enums buffer their content, which loses the position of
// an error inside the variant. Deserializing the variant body on its own
// keeps it.
fn check_preset_fields(preset: &serde_json::Value) -> Result<()> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Round {
        r#type: String,
        k: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Bump {
        r#type: String,
        eps: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct PeriodicProduct {
        r#type: String,
        c: f64,
        a: f64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Samples {
        r#type: String,
        r: Vec<f64>,
        phi: Vec<f64>,
    }

    fn body<T: serde::de::DeserializeOwned>(preset: &serde_json::Value) -> Result<()> {
        serde_path_to_error::deserialize::<_, T>(preset.clone()).map(|_| ()).map_err(|e| {
            let inner = e.path().to_string();
            let path = if inner == "." { "preset".to_string() } else { format!("preset.{inner}") };
            config_error(&path, e.inner().to_string())
        })
    }

    match preset.get("type").and_then(|t| t.as_str()) {
        Some("round") => body::<Round>(preset),
        Some("bump") => body::<Bump>(preset),
        Some("periodic_product") => body::<PeriodicProduct>(preset),
        Some("samples") => body::<Samples>(preset),
        // unknown or missing tags are reported by the full deserializer
        _ => Ok(()),
    }
}

/// Checks a list of grid sizes for a convergence study.
pub fn validate_grids(grids: &[usize]) -> std::result::Result<(), String> {
    if grids.len() < 3 {
        return Err(format!("need at least 3 grids, got {}", grids.len()));
    }
    if let Some(g) = grids.iter().find(|&&g| g < MIN_INTERVALS) {
        return Err(format!("grid {g} is below the minimum {MIN_INTERVALS}"));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err("grids must be strictly increasing".into());
    }
    Ok(())
}
