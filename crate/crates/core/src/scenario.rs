//! JSON scenario files: radar, targets, channel, detection, estimators and
//! an optional sweep section.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "radar": { "packets": 200, "pri_s": 2e-6, "range_bins": 8, "angle_bins": 4 },
//!   "targets": [ { "range_bin": 3, "angle_bin": 1, "velocity_mps": 20.0 } ],
//!   "channel": { "rician_k_db": 2.0, "snr_db": 20.0, "seed": 1 },
//!   "estimators": [ { "label": "esprit_lo", "config": { "algorithm": "esprit_lo" } } ]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::{Metric, SweepEstimator, SweepSpec};
use crate::locator::DetectionMode;
use crate::scene::{RadarParams, Target};
use crate::{Error, Result, C64};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarSection {
    pub wavelength_m: f64,
    pub pri_s: f64,
    pub packets: usize,
    pub range_bins: usize,
    pub angle_bins: usize,
    pub range_resolution_m: f64,
    pub range_mainlobe_bins: f64,
    pub angle_mainlobe_bins: f64,
}

impl Default for RadarSection {
    fn default() -> Self {
        let p = RadarParams::default();
        Self {
            wavelength_m: p.wavelength_m,
            pri_s: p.pri_s,
            packets: p.packets,
            range_bins: p.range_bins,
            angle_bins: p.angle_bins,
            range_resolution_m: p.range_resolution_m,
            range_mainlobe_bins: p.range_mainlobe_bins,
            angle_mainlobe_bins: p.angle_mainlobe_bins,
        }
    }
}

/// A target placed either by grid cell or by physical position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_bin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_bin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_rad: Option<f64>,
    pub velocity_mps: f64,
    /// `[re, im]`; defaults to `[1, 0]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<C64>,
}

impl TargetSpec {
    fn resolve(&self, params: &RadarParams, index: usize) -> Result<Target> {
        let range_m = match (self.range_bin, self.range_m) {
            (Some(b), None) => b as f64 * params.range_resolution_m,
            (None, Some(r)) => r,
            _ => {
                return Err(Error::config(format!(
                    "target {index}: give exactly one of range_bin, range_m"
                )))
            }
        };
        let azimuth_rad = match (self.angle_bin, self.azimuth_rad) {
            (Some(b), None) => params.bin_azimuth(b),
            (None, Some(a)) => a,
            _ => {
                return Err(Error::config(format!(
                    "target {index}: give exactly one of angle_bin, azimuth_rad"
                )))
            }
        };
        Ok(Target {
            range_m,
            azimuth_rad,
            velocity_mps: self.velocity_mps,
            amplitude: self.amplitude.unwrap_or(C64::new(1.0, 0.0)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// `null` disables fading.
    #[serde(default)]
    pub rician_k_db: Option<f64>,
    /// `null` disables noise.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            rician_k_db: Some(2.0),
            snr_db: Some(20.0),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub velocity_jitter_mps: f64,
}

fn default_trials() -> usize {
    500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub radar: RadarSection,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub detection: DetectionMode,
    #[serde(default)]
    pub estimators: Vec<SweepEstimator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        // check the version before the strict parse so old files get a clear message
        let raw: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        check_version(raw.get("schema_version").and_then(|v| v.as_u64()))?;
        let s = Self::from_json_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_version(Some(self.schema_version as u64))?;
        self.params().validate()?;
        self.targets()?;
        for e in &self.estimators {
            let p = e.params(&self.params());
            e.config
                .validate(p.packets)
                .map_err(|err| Error::config(format!("estimator {:?}: {err}", e.label)))?;
        }
        if self.sweep.is_some() {
            self.sweep_spec()?.validate()?;
        }
        Ok(())
    }

    pub fn params(&self) -> RadarParams {
        let r = &self.radar;
        RadarParams {
            wavelength_m: r.wavelength_m,
            pri_s: r.pri_s,
            packets: r.packets,
            range_bins: r.range_bins,
            angle_bins: r.angle_bins,
            range_resolution_m: r.range_resolution_m,
            range_mainlobe_bins: r.range_mainlobe_bins,
            angle_mainlobe_bins: r.angle_mainlobe_bins,
            rician_k_db: self.channel.rician_k_db,
            snr_db: self.channel.snr_db,
            rng_seed: self.channel.seed,
        }
    }

    pub fn targets(&self) -> Result<Vec<Target>> {
        if self.targets.is_empty() {
            return Err(Error::EmptyScene);
        }
        let p = self.params();
        self.targets
            .iter()
            .enumerate()
            .map(|(i, t)| t.resolve(&p, i))
            .collect()
    }

    /// Sweep described by the `sweep` section over all listed estimators.
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::config("scenario has no sweep section"))?;
        Ok(SweepSpec {
            snr_grid_db: s.snr_grid_db.clone(),
            trials: s.trials,
            params: self.params(),
            targets: self.targets()?,
            estimators: self.estimators.clone(),
            metric: s.metric,
            detection: self.detection,
            velocity_jitter_mps: s.velocity_jitter_mps,
            threads: None,
        })
    }

    /// Applies `--packets`/`--pri`-style overrides to the radar section.
    pub fn override_radar(&mut self, packets: Option<usize>, pri_s: Option<f64>) {
        if let Some(n) = packets {
            self.radar.packets = n;
        }
        if let Some(t) = pri_s {
            self.radar.pri_s = t;
        }
    }
}

fn check_version(found: Option<u64>) -> Result<()> {
    match found {
        Some(v) if v == SCHEMA_VERSION as u64 => Ok(()),
        Some(v) => Err(Error::SchemaVersion {
            found: u32::try_from(v).unwrap_or(u32::MAX),
            expected: SCHEMA_VERSION,
        }),
        None => Err(Error::config("missing schema_version")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "radar": { "packets": 64, "range_bins": 4, "angle_bins": 2 },
        "targets": [ { "range_bin": 1, "angle_bin": 0, "velocity_mps": 12.5 } ]
    }"#;

    #[test]
    fn minimal_file_uses_defaults() {
        let s = Scenario::from_json_str(MINIMAL).unwrap();
        s.validate().unwrap();
        let p = s.params();
        assert_eq!(p.packets, 64);
        assert_eq!(p.wavelength_m, RadarParams::default().wavelength_m);
        assert_eq!(p.rician_k_db, Some(2.0));
        let t = s.targets().unwrap();
        assert!((t[0].range_m - p.range_resolution_m).abs() < 1e-15);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = MINIMAL.replace("\"packets\"", "\"packet_count\"");
        assert!(Scenario::from_json_str(&bad).is_err());
    }

    #[test]
    fn wrong_version_is_reported() {
        let s = Scenario::from_json_str(
            &MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2"),
        )
        .unwrap();
        assert!(matches!(
            s.validate(),
            Err(Error::SchemaVersion {
                found: 2,
                expected: 1
            })
        ));
    }

    #[test]
    fn ambiguous_placement_is_rejected() {
        let bad = MINIMAL.replace("\"range_bin\": 1", "\"range_bin\": 1, \"range_m\": 0.3");
        let s = Scenario::from_json_str(&bad).unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = Scenario::from_json_str(MINIMAL).unwrap();
        s.save(&path).unwrap();
        assert_eq!(Scenario::load(&path).unwrap(), s);
    }
}
