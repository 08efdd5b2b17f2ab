use std::path::{Path, PathBuf};

use magscat_core::coeffs::GeneratorSpec;
use magscat_core::grid::Grid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::presets::Preset;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n: 64, half_width: 12.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSpec {
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl Default for SphereSpec {
    fn default() -> Self {
        SphereSpec { n_polar: 6, n_azimuth: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweeps {
    /// Semiclassical parameters, strictly decreasing.
    pub h: Vec<f64>,
    /// Reconstruction parameters, strictly increasing.
    pub t: Vec<f64>,
}

impl Default for Sweeps {
    fn default() -> Self {
        Sweeps { h: vec![0.4, 0.2, 0.1], t: vec![8.0, 16.0, 32.0] }
    }
}

/// Acceptance thresholds. `scale` multiplies every entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub scale: f64,
    pub cauchy_residual: f64,
    pub cauchy_roundtrip: f64,
    pub slope_window: f64,
    pub cgo_residual: f64,
    pub cgo_born: f64,
    pub mollifier_slack: f64,
    pub mollifier_flat_ratio: f64,
    pub unitarity: f64,
    pub direct_born: f64,
    pub pairing: f64,
    pub gauge_far_field: f64,
    pub gauge_primitive: f64,
    pub nft: f64,
    #[serde(rename = "recon_dA")]
    pub recon_da: f64,
    #[serde(rename = "recon_V")]
    pub recon_v: f64,
    #[serde(rename = "recon_V_shared")]
    pub recon_v_shared: f64,
    pub pure_gauge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            scale: 1.0,
            cauchy_residual: 1e-3,
            cauchy_roundtrip: 1e-3,
            slope_window: 0.15,
            cgo_residual: 1e-7,
            cgo_born: 0.05,
            mollifier_slack: 0.1,
            mollifier_flat_ratio: 1e-2,
            unitarity: 1e-2,
            direct_born: 0.05,
            pairing: 0.02,
            gauge_far_field: 1e-2,
            gauge_primitive: 1e-3,
            nft: 1e-2,
            recon_da: 0.05,
            recon_v: 0.05,
            recon_v_shared: 0.08,
            pure_gauge: 1e-3,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 18] {
        [
            ("scale", self.scale),
            ("cauchy_residual", self.cauchy_residual),
            ("cauchy_roundtrip", self.cauchy_roundtrip),
            ("slope_window", self.slope_window),
            ("cgo_residual", self.cgo_residual),
            ("cgo_born", self.cgo_born),
            ("mollifier_slack", self.mollifier_slack),
            ("mollifier_flat_ratio", self.mollifier_flat_ratio),
            ("unitarity", self.unitarity),
            ("direct_born", self.direct_born),
            ("pairing", self.pairing),
            ("gauge_far_field", self.gauge_far_field),
            ("gauge_primitive", self.gauge_primitive),
            ("nft", self.nft),
            ("recon_dA", self.recon_da),
            ("recon_V", self.recon_v),
            ("recon_V_shared", self.recon_v_shared),
            ("pure_gauge", self.pure_gauge),
        ]
    }

    /// A threshold after scaling.
    pub fn get(&self, base: f64) -> f64 {
        base * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "dA")]
    DA,
    V,
}

/// The on-disk document. Everything except `lambda` has a default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: Option<GridSpec>,
    lambda: Option<f64>,
    gamma0: Option<f64>,
    preset: Option<String>,
    coefficients: Option<GeneratorSpec>,
    reference: Option<GeneratorSpec>,
    sweeps: Option<Sweeps>,
    sphere: Option<SphereSpec>,
    shell_magnitudes: Option<usize>,
    recover: Option<Vec<Component>>,
    max_iter: Option<usize>,
    n_sources: Option<usize>,
    tolerances: Option<Tolerances>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub lambda: f64,
    pub gamma0: f64,
    pub preset: Option<String>,
    pub coefficients: GeneratorSpec,
    pub reference: GeneratorSpec,
    pub sweeps: Sweeps,
    pub sphere: SphereSpec,
    pub shell_magnitudes: usize,
    pub recover: Vec<Component>,
    pub max_iter: usize,
    pub n_sources: usize,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_monotone(name: &str, v: &[f64], increasing: bool) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(err(format!("{name} must be nonempty")));
    }
    if let Some(i) = v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(err(format!("{name}[{i}] must be positive")));
    }
    for (i, w) in v.windows(2).enumerate() {
        let ok = if increasing { w[1] > w[0] } else { w[1] < w[0] };
        if !ok {
            let dir = if increasing { "increasing" } else { "decreasing" };
            return Err(err(format!("{name} must be strictly {dir} (at index {})", i + 1)));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| err(format!("parse error: {e}")))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        if text.trim().is_empty() {
            return Err(CliError::Usage(format!("config file {} is empty", path.display())));
        }
        Self::from_json(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, CliError> {
        let lambda = raw.lambda.ok_or_else(|| err("lambda required"))?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(err("lambda must be positive"));
        }
        let gamma0 = raw.gamma0.unwrap_or(2.0);
        if !(gamma0.is_finite() && gamma0 > 0.0) {
            return Err(err("gamma0 must be positive"));
        }
        let grid = raw.grid.unwrap_or_default();
        Grid::new(grid.n, grid.half_width).map_err(|e| err(format!("grid: {e}")))?;
        let preset = match &raw.preset {
            Some(name) => Some(Preset::by_name(name).ok_or_else(|| err(format!("preset: unknown preset \"{name}\"")))?),
            None => None,
        };
        let coefficients = raw.coefficients.or_else(|| preset.as_ref().map(|p| p.coefficients.clone())).unwrap_or_default();
        let reference = raw.reference.or_else(|| preset.as_ref().map(|p| p.reference.clone())).unwrap_or_default();
        for (name, spec) in [("coefficients", &coefficients), ("reference", &reference)] {
            let bumps = spec.electric.iter().chain(spec.magnetic.iter().map(|m| m.bump()));
            for (i, b) in bumps.enumerate() {
                if !(b.amplitude.is_finite() && b.center.iter().all(|c| c.is_finite()) && b.width.is_finite() && b.width > 0.0) {
                    return Err(err(format!("{name}: term {i} needs finite amplitude and center and a positive width")));
                }
            }
        }
        let sweeps = raw.sweeps.unwrap_or_default();
        check_monotone("sweeps.h", &sweeps.h, false)?;
        check_monotone("sweeps.t", &sweeps.t, true)?;
        if let Some(h) = sweeps.h.iter().find(|h| **h >= 1.0 || **h * **h * lambda >= 1.0) {
            return Err(err(format!("sweeps.h: value {h} needs h < 1 and h² lambda < 1")));
        }
        let sphere = raw.sphere.unwrap_or_default();
        if sphere.n_polar < 2 || sphere.n_azimuth < 2 || sphere.n_azimuth % 2 != 0 {
            return Err(err("sphere: n_polar >= 2 and an even n_azimuth >= 2 required"));
        }
        let tolerances = raw.tolerances.unwrap_or_default();
        if let Some((name, _)) = tolerances.entries().iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(err(format!("tolerances.{name} must be positive")));
        }
        let shell_magnitudes = raw.shell_magnitudes.unwrap_or(2);
        if shell_magnitudes == 0 {
            return Err(err("shell_magnitudes must be at least 1"));
        }
        let max_iter = raw.max_iter.unwrap_or(300);
        if max_iter == 0 {
            return Err(err("max_iter must be at least 1"));
        }
        Ok(RunConfig {
            grid,
            lambda,
            gamma0,
            recover: raw.recover.or_else(|| preset.as_ref().map(|p| p.recover.clone())).unwrap_or_else(|| vec![Component::DA]),
            preset: raw.preset,
            coefficients,
            reference,
            sweeps,
            sphere,
            shell_magnitudes,
            max_iter,
            n_sources: raw.n_sources.unwrap_or(10),
            tolerances,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            seed: raw.seed.unwrap_or(0),
        })
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.n, self.grid.half_width).expect("validated")
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("serializable");
        format!("{:x}", Sha256::digest(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_lambda() {
        let e = RunConfig::from_json("{}").unwrap_err();
        assert_eq!(e.to_string(), "config: lambda required");
    }

    #[test]
    fn defaults_and_paths() {
        let c = RunConfig::from_json(r#"{"lambda": 1.0}"#).unwrap();
        assert_eq!(c.grid, GridSpec::default());
        assert_eq!(c.tolerances.get(c.tolerances.nft), 1e-2);
        let e = RunConfig::from_json(r#"{"lambda": 1.0, "tolerances": {"pairing": -1}}"#).unwrap_err();
        assert_eq!(e.to_string(), "config: tolerances.pairing must be positive");
        let e = RunConfig::from_json(r#"{"lambda": 1.0, "sweeps": {"h": [0.1, 0.2]}}"#).unwrap_err();
        assert_eq!(e.to_string(), "config: sweeps.h must be strictly decreasing (at index 1)");
        let e = RunConfig::from_json(r#"{"lambda": 1.0, "sweeps": {"t": []}}"#).unwrap_err();
        assert_eq!(e.to_string(), "config: sweeps.t must be nonempty");
        let e = RunConfig::from_json(r#"{"lambda": 1.0, "grid": {"n": 48, "half_width": 4}}"#).unwrap_err();
        assert!(e.to_string().starts_with("config: grid:"), "{e}");
        assert!(RunConfig::from_json(r#"{"lambda": 1.0, "preset": "nope"}"#).is_err());
        assert!(RunConfig::from_json(r#"{"lambda": 1.0, "typo": 3}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::from_json(r#"{"lambda": 1.0}"#).unwrap();
        let b = RunConfig::from_json(r#"{"lambda": 1.0, "seed": 0}"#).unwrap();
        let c = RunConfig::from_json(r#"{"lambda": 2.0}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
