//! TOML scenario files and `section.key=value` overrides.
//!
//! A file has these sections; everything except `[scenario]` and at least one
//! `[[node]]` is optional and falls back to defaults:
//!
//! | section | contents |
//! |---|---|
//! | `[scenario]` | `mode`, `tx`, `rx`, `seed`, `[scenario.los]` |
//! | `[[node]]` | `id`, `kind` (`bs`/`ue`), `position`, `velocity` |
//! | `[[target]]` | `id`, `position`, `velocity`, `orientation_rad`, `[target.rcs]`, `[target.micro_motion]` |
//! | `[[environment_object]]` | `kind = "plane"` or `kind = "scatterer"` |
//! | `[ofdm]` | carrier, numerology, SNR, window |
//! | `[channel]` | background clusters, ray layout, NLOS loss |
//! | `[simulate]` | trial count and detection settings |
//! | `[rcs_sweep]` | shape, distances and angle grid |
//! | `[microdoppler]` | arm-swing setup and STFT settings |
//!
//! Unknown keys anywhere are an error. The carrier frequency lives in
//! `[ofdm]` and is shared by every workflow.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::geometry::vec3;
use crate::microdoppler::{ArmSwingConfig, MicroMotionProfile};
use crate::rcs::{segment_object, Aggregation, PrimitiveShape, ShapeKind};
use crate::scenario::{EnvironmentObject, LosModel, Node, NodeKind, Scenario, SensingMode, Target, TargetRcs};
use crate::sensing::{DetectionConfig, OfdmConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub mode: SensingMode,
    pub tx: String,
    pub rx: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub los: LosModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
}

/// Target RCS: a fixed value, or a primitive that is segmented for the
/// scenario geometry when the file is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RcsSpec {
    Scalar {
        sigma_m2: f64,
    },
    Segmented {
        shape: ShapeKind,
        #[serde(default = "one")]
        reflectivity: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for RcsSpec {
    fn default() -> Self {
        RcsSpec::Scalar { sigma_m2: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub id: String,
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default)]
    pub orientation_rad: f64,
    #[serde(default)]
    pub rcs: RcsSpec,
    #[serde(default)]
    pub micro_motion: MicroMotionProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentObjectSpec {
    Plane {
        id: String,
        point: [f64; 3],
        normal: [f64; 3],
        reflection_coefficient: f64,
    },
    Scatterer {
        id: String,
        position: [f64; 3],
        #[serde(default)]
        velocity: [f64; 3],
        #[serde(default)]
        orientation_rad: f64,
        #[serde(default)]
        rcs: RcsSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub trials: u64,
    pub threshold_db: f64,
    pub guard_bins: usize,
    pub max_detections: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let d = DetectionConfig::default();
        SimulateSection {
            trials: 1,
            threshold_db: d.threshold_db,
            guard_bins: d.guard_bins,
            max_detections: d.max_detections,
        }
    }
}

impl SimulateSection {
    pub fn detection(&self) -> DetectionConfig {
        DetectionConfig {
            threshold_db: self.threshold_db,
            guard_bins: self.guard_bins,
            max_detections: self.max_detections,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsSweepSection {
    pub shape: ShapeKind,
    #[serde(default = "one")]
    pub reflectivity: f64,
    pub distances_m: Vec<f64>,
    #[serde(default)]
    pub angle_start_deg: f64,
    #[serde(default = "ninety")]
    pub angle_stop_deg: f64,
    #[serde(default = "one")]
    pub angle_step_deg: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
}

fn ninety() -> f64 {
    90.0
}

impl RcsSweepSection {
    pub fn primitive(&self) -> Result<PrimitiveShape> {
        PrimitiveShape::new(self.shape, self.reflectivity)
    }

    /// Inclusive angle grid.
    pub fn angles_deg(&self) -> Result<Vec<f64>> {
        if !(self.angle_step_deg > 0.0) || self.angle_stop_deg < self.angle_start_deg {
            return Err(Error::Config(format!(
                "bad angle grid {}..{} step {}",
                self.angle_start_deg, self.angle_stop_deg, self.angle_step_deg
            )));
        }
        let n = ((self.angle_stop_deg - self.angle_start_deg) / self.angle_step_deg + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| self.angle_start_deg + i as f64 * self.angle_step_deg)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MicrodopplerSection {
    pub arm_swing: ArmSwingConfig,
    pub orientations_deg: Vec<f64>,
    pub window_len: usize,
    pub hop: usize,
}

impl Default for MicrodopplerSection {
    fn default() -> Self {
        MicrodopplerSection {
            arm_swing: ArmSwingConfig::default(),
            orientations_deg: vec![0.0, 30.0, 60.0, 90.0],
            window_len: 128,
            hop: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioSection,
    #[serde(default, rename = "node")]
    pub nodes: Vec<NodeSpec>,
    #[serde(default, rename = "target")]
    pub targets: Vec<TargetSpec>,
    #[serde(default, rename = "environment_object")]
    pub environment_objects: Vec<EnvironmentObjectSpec>,
    #[serde(default)]
    pub ofdm: OfdmConfig,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub rcs_sweep: Option<RcsSweepSection>,
    #[serde(default)]
    pub microdoppler: MicrodopplerSection,
}

/// One `section.key=value` assignment. Path segments that parse as integers
/// index into arrays, so `target.0.velocity.0=-20` is valid. Values are read
/// as TOML (numbers, booleans, arrays, quoted strings); anything that does not
/// parse is taken as a bare string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: toml::Value,
}

impl std::str::FromStr for Override {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{s}` is not of the form section.key=value")))?;
        let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
        if path.len() < 2 || path.iter().any(String::is_empty) {
            return Err(Error::Config(format!("override key `{key}` needs a section and a key")));
        }
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        Ok(Override { path, value })
    }
}

impl Override {
    pub fn apply(&self, root: &mut toml::Table) -> Result<()> {
        let fail = |msg: String| Error::Config(format!("override {}: {msg}", self.path.join(".")));
        let (last, parents) = self.path.split_last().expect("at least two segments");
        let mut cur: &mut toml::Value = root
            .entry(parents[0].clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        for seg in &parents[1..] {
            cur = match cur {
                toml::Value::Table(t) => t
                    .entry(seg.clone())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new())),
                toml::Value::Array(a) => {
                    let i: usize = seg.parse().map_err(|_| fail(format!("`{seg}` is not an array index")))?;
                    let len = a.len();
                    a.get_mut(i).ok_or_else(|| fail(format!("index {i} out of range (length {len})")))?
                }
                _ => return Err(fail(format!("cannot descend into `{seg}`"))),
            };
        }
        match cur {
            toml::Value::Table(t) => {
                t.insert(last.clone(), self.value.clone());
            }
            toml::Value::Array(a) => {
                let i: usize = last.parse().map_err(|_| fail(format!("`{last}` is not an array index")))?;
                let len = a.len();
                *a.get_mut(i).ok_or_else(|| fail(format!("index {i} out of range (length {len})")))? =
                    self.value.clone();
            }
            _ => return Err(fail("parent is not a table or array".into())),
        }
        Ok(())
    }
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str, overrides: &[Override]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            o.apply(&mut table)?;
        }
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[Override]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn wavelength(&self) -> f64 {
        self.ofdm.wavelength()
    }

    /// Builds the scenario. Segmented RCS specs are split for the smaller of
    /// the two endpoint distances, so unresolved nodes surface as violations
    /// of the returned scenario rather than as errors here.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                kind: n.kind,
                position: vec3(n.position),
                velocity: vec3(n.velocity),
            })
            .collect();
        let endpoint = |id: &str| nodes.iter().find(|n| n.id == id).map(|n| n.position);
        let endpoints: Vec<_> = [endpoint(&self.scenario.tx), endpoint(&self.scenario.rx)]
            .into_iter()
            .flatten()
            .collect();
        let wavelength = self.wavelength();
        let rcs = |spec: &RcsSpec, position: [f64; 3], id: &str| -> Result<TargetRcs> {
            Ok(match *spec {
                RcsSpec::Scalar { sigma_m2 } => TargetRcs::Scalar(sigma_m2),
                RcsSpec::Segmented { shape, reflectivity } => {
                    let p = vec3(position);
                    let r_min = endpoints.iter().map(|e| (p - e).norm()).fold(f64::INFINITY, f64::min);
                    if !r_min.is_finite() || r_min <= 0.0 {
                        return Err(Error::Config(format!("cannot segment `{id}`: no usable endpoint distance")));
                    }
                    let prim = PrimitiveShape::new(shape, reflectivity)?;
                    TargetRcs::Segmented(segment_object(&prim, wavelength, r_min)?)
                }
            })
        };

        let targets = self
            .targets
            .iter()
            .map(|t| {
                Ok(Target {
                    id: t.id.clone(),
                    position: vec3(t.position),
                    velocity: vec3(t.velocity),
                    rcs: rcs(&t.rcs, t.position, &t.id)?,
                    micro_motion: t.micro_motion,
                    orientation: t.orientation_rad,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let environment_objects = self
            .environment_objects
            .iter()
            .map(|eo| {
                Ok(match eo {
                    EnvironmentObjectSpec::Plane {
                        id,
                        point,
                        normal,
                        reflection_coefficient,
                    } => EnvironmentObject::Plane {
                        id: id.clone(),
                        point: vec3(*point),
                        normal: vec3(*normal),
                        reflection_coefficient: *reflection_coefficient,
                    },
                    EnvironmentObjectSpec::Scatterer {
                        id,
                        position,
                        velocity,
                        orientation_rad,
                        rcs: spec,
                    } => EnvironmentObject::Scatterer(Target {
                        id: id.clone(),
                        position: vec3(*position),
                        velocity: vec3(*velocity),
                        rcs: rcs(spec, *position, id)?,
                        micro_motion: MicroMotionProfile::None,
                        orientation: *orientation_rad,
                    }),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Scenario {
            carrier_hz: self.ofdm.carrier_hz,
            nodes,
            mode: self.scenario.mode,
            tx_node_id: self.scenario.tx.clone(),
            rx_node_id: self.scenario.rx.clone(),
            targets,
            environment_objects,
            los_model: self.scenario.los,
            seed: self.scenario.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[scenario]
mode = "bs-monostatic"
tx = "bs"
rx = "bs"

[[node]]
id = "bs"
kind = "bs"
position = [0.0, 0.0, 10.0]

[[target]]
id = "car"
position = [100.0, 0.0, 10.0]
velocity = [41.67, 0.0, 0.0]

[target.micro_motion]
kind = "sinusoid"
peak_doppler_hz = 50.0
mod_freq_hz = 40.0
"#;

    fn ov(s: &str) -> Override {
        s.parse().unwrap()
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let f = ScenarioFile::from_toml_str(MINIMAL, &[]).unwrap();
        assert_eq!(f.ofdm, OfdmConfig::default());
        assert_eq!(f.channel, ChannelParams::default());
        let s = f.to_scenario().unwrap();
        assert!(s.validate().is_empty());
        assert_eq!(s.targets[0].rcs, TargetRcs::Scalar(1.0));
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[ofdm]\nbogus = 1\n");
        assert!(matches!(ScenarioFile::from_toml_str(&text, &[]), Err(Error::Config(_))));
        assert!(ScenarioFile::from_toml_str(MINIMAL, &[ov("channel.n_bakground=3")]).is_err());
    }

    #[test]
    fn overrides_reach_nested_values() {
        let f = ScenarioFile::from_toml_str(
            MINIMAL,
            &[
                ov("ofdm.snr_db=10"),
                ov("scenario.seed=42"),
                ov("target.0.velocity.0=-20.5"),
                ov("target.0.micro_motion.peak_doppler_hz=30"),
                ov("ofdm.window=hann"),
            ],
        )
        .unwrap();
        assert_eq!(f.ofdm.snr_db, 10.0);
        assert_eq!(f.scenario.seed, 42);
        assert_eq!(f.targets[0].velocity[0], -20.5);
        assert_eq!(f.ofdm.window, crate::sensing::Window::Hann);
        assert!(matches!(
            f.targets[0].micro_motion,
            MicroMotionProfile::Sinusoid { peak_doppler_hz, .. } if peak_doppler_hz == 30.0
        ));
    }

    #[test]
    fn bad_overrides_are_errors() {
        assert!("nodot=1".parse::<Override>().is_err());
        assert!("novalue".parse::<Override>().is_err());
        assert!(ScenarioFile::from_toml_str(MINIMAL, &[ov("target.5.id=x")]).is_err());
    }

    #[test]
    fn segmented_target_is_split_for_its_range() {
        let text = MINIMAL.replace(
            "[target.micro_motion]",
            "[target.rcs]\nkind = \"segmented\"\nshape = { kind = \"rectangular-plate\", a_m = 2.0, b_m = 2.0 }\n\n[target.micro_motion]",
        );
        let s = ScenarioFile::from_toml_str(&text, &[]).unwrap().to_scenario().unwrap();
        let TargetRcs::Segmented(obj) = &s.targets[0].rcs else { panic!() };
        // 2 m plate at 100 m: whole plate needs 2·4/λ ≈ 93 m, so it stays whole.
        assert_eq!(obj.len(), 1);
    }

    #[test]
    fn sweep_angles_are_inclusive() {
        let sec = RcsSweepSection {
            shape: ShapeKind::Sphere { radius_m: 1.0 },
            reflectivity: 1.0,
            distances_m: vec![10.0],
            angle_start_deg: 0.0,
            angle_stop_deg: 60.0,
            angle_step_deg: 1.0,
            aggregation: Aggregation::Coherent,
        };
        let a = sec.angles_deg().unwrap();
        assert_eq!(a.len(), 61);
        assert_eq!(a[60], 60.0);
    }
}
