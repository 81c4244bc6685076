//! Experiment configuration: JSON, unknown keys rejected, ranges checked on
//! load. The hash of the normalized configuration stamps every output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fuchsian::{PantsParams, TorusParams};

/// Subcommands that may name an output path under `outputs`.
pub const OUTPUT_KEYS: [&str; 5] = ["census", "entropy", "graft-sweep", "pressure-length", "pants-entropy"];

/// A one-holed torus, either by trace triple or by two traces and the
/// boundary length of `p1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TorusSpec {
    Traces([f64; 3]),
    MatchBoundary {
        x: f64,
        y: f64,
        #[serde(default = "yes")]
        match_boundary: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraftSpec {
    /// Use the unit-height direction in `ker α₀`.
    pub kernel: bool,
    /// Explicit Cartan vector; used when `kernel` is false.
    pub z: Option<Vec<f64>>,
}

impl Default for GraftSpec {
    fn default() -> Self {
        GraftSpec { kernel: true, z: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PantsSpec {
    pub a: f64,
    pub b: f64,
    pub c: Vec<f64>,
    pub max_word_len: usize,
    pub length_cap: f64,
}

impl Default for PantsSpec {
    fn default() -> Self {
        PantsSpec { a: 4.0, b: 4.0, c: vec![4.0, 8.0, 12.0], max_word_len: 64, length_cap: 36.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub d: usize,
    pub p1: TorusSpec,
    pub p2: TorusSpec,
    pub twist: f64,
    pub graft: GraftSpec,
    /// Ray parameters for `census`, `entropy` and `graft-sweep`.
    pub ray_grid: Vec<f64>,
    pub max_word_len: usize,
    /// Length cap for the capped census; `null` enumerates every class up
    /// to `max_word_len`.
    pub length_cap: Option<f64>,
    pub seed: u64,
    /// Step of the ray grid used for derivatives and pressure lengths.
    pub fd_step: f64,
    /// Step for finite differences in Cartan directions.
    pub cartan_step: f64,
    /// Right end of the pressure-length ray `[0, pressure_end]`.
    pub pressure_end: f64,
    /// Ray nodes at which the entropy-derivative identity is evaluated.
    pub derivative_nodes: Vec<f64>,
    /// Target row count for the per-height censuses behind `boundary_mass`.
    pub mass_rows: usize,
    pub pants: PantsSpec,
    pub outputs: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 3,
            p1: TorusSpec::Traces([4.0, 3.5, 4.9]),
            p2: TorusSpec::Traces([4.0, 3.5, 4.9]),
            twist: 0.5,
            graft: GraftSpec::default(),
            ray_grid: vec![0.0, 1.0, 2.0, 4.0, 6.0],
            max_word_len: 12,
            length_cap: Some(13.0),
            seed: 0,
            fd_step: 0.25,
            cartan_step: 1e-4,
            pressure_end: 8.0,
            derivative_nodes: vec![0.5, 1.0, 1.5],
            mass_rows: 10_000,
            pants: PantsSpec::default(),
            outputs: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates JSON. Syntax and schema errors carry the line and
    /// column reported by the parser.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {}, column {}: {}", e.line(), e.column(), strip_position(&e.to_string())))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(2..=8).contains(&self.d) {
            return bad(format!("d = {} is outside 2..=8", self.d));
        }
        if self.max_word_len == 0 || self.max_word_len > 64 {
            return bad(format!("max_word_len = {} is outside 1..=64", self.max_word_len));
        }
        if let Some(cap) = self.length_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return bad(format!("length_cap = {cap} must be positive"));
            }
        }
        if !self.twist.is_finite() {
            return bad("twist must be finite".into());
        }
        if self.ray_grid.is_empty() || self.ray_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("ray_grid must be a nonempty list of nonnegative numbers".into());
        }
        if self.ray_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("ray_grid must be strictly increasing".into());
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return bad(format!("fd_step = {} must be positive", self.fd_step));
        }
        if !(self.cartan_step > 0.0 && self.cartan_step < 1.0) {
            return bad(format!("cartan_step = {} must lie in (0, 1)", self.cartan_step));
        }
        let steps = self.pressure_end / self.fd_step;
        if !(self.pressure_end > 0.0) || (steps - steps.round()).abs() > 1e-9 || steps.round() < 4.0 {
            return bad(format!(
                "pressure_end = {} must be a positive multiple of fd_step with at least four steps",
                self.pressure_end
            ));
        }
        for &t in &self.derivative_nodes {
            let k = t / self.fd_step;
            if !(t > 0.0 && t < self.pressure_end) || (k - k.round()).abs() > 1e-9 {
                return bad(format!("derivative node {t} must be an interior multiple of fd_step"));
            }
        }
        if self.mass_rows < 1000 {
            return bad(format!("mass_rows = {} is below 1000", self.mass_rows));
        }
        if let Some(z) = &self.graft.z {
            if z.len() != self.d {
                return bad(format!("graft.z has {} entries, expected {}", z.len(), self.d));
            }
        } else if !self.graft.kernel {
            return bad("graft.z is required when graft.kernel is false".into());
        }
        if self.pants.c.is_empty() || self.pants.length_cap <= 0.0 || self.pants.max_word_len == 0 {
            return bad("pants needs boundary lengths c, a positive length_cap and max_word_len".into());
        }
        for &c in &self.pants.c {
            PantsParams::new(self.pants.a, self.pants.b, c).map_err(|e| Error::Config(format!("pants: {e}")))?;
        }
        for k in self.outputs.keys() {
            if !OUTPUT_KEYS.contains(&k.as_str()) {
                return bad(format!("unknown output key {k:?}; expected one of {OUTPUT_KEYS:?}"));
            }
        }
        self.tori().map(|_| ())
    }

    /// The two torus parameter sets, the second matched to the boundary of
    /// the first when requested.
    pub fn tori(&self) -> Result<(TorusParams, TorusParams)> {
        let cfg = |e: Error| Error::Config(format!("torus parameters: {e}"));
        let p1 = match &self.p1 {
            TorusSpec::Traces([x, y, z]) => TorusParams::new(*x, *y, *z).map_err(cfg)?,
            TorusSpec::MatchBoundary { .. } => return Err(Error::Config("p1 must be a trace triple".into())),
        };
        let p2 = match &self.p2 {
            TorusSpec::Traces([x, y, z]) => TorusParams::new(*x, *y, *z).map_err(cfg)?,
            TorusSpec::MatchBoundary { x, y, match_boundary: true } => {
                TorusParams::with_boundary(*x, *y, p1.boundary_length()).map_err(cfg)?
            }
            TorusSpec::MatchBoundary { .. } => {
                return Err(Error::Config("p2 with x, y needs match_boundary = true".into()))
            }
        };
        Ok((p1, p2))
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn empty_object_is_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = ExperimentConfig::from_json("{\n  \"d\": 3,\n  \"colour\": 1\n}").unwrap_err();
        let m = err.to_string();
        assert!(m.contains("line 3"), "{m}");
        assert!(m.contains("colour"), "{m}");
    }

    #[test]
    fn ranges_checked() {
        for bad in [
            r#"{"d": 9}"#,
            r#"{"max_word_len": 0}"#,
            r#"{"ray_grid": [0, 2, 1]}"#,
            r#"{"pressure_end": 1.1}"#,
            r#"{"p1": [1.5, 3, 3]}"#,
            r#"{"graft": {"kernel": false}}"#,
            r#"{"outputs": {"plot": "x.png"}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn matched_boundary() {
        let c = ExperimentConfig::from_json(r#"{"p2": {"x": 6, "y": 6}}"#).unwrap();
        let (a, b) = c.tori().unwrap();
        assert!((a.boundary_length() - b.boundary_length()).abs() < 1e-9);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
    }
}
