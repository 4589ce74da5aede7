//! Deployment description: nodes, sensing mode, targets and environment
//! objects, plus per-link LOS/NLOS draws and single-bounce specular paths.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{is_finite, Direction, Vec3};
use crate::microdoppler::MicroMotionProfile;
use crate::rcs::SegmentedObject;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Bs,
    Ue,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Bs => "BS",
            NodeKind::Ue => "UE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingMode {
    BsBsBistatic,
    BsMonostatic,
    BsUeBistatic,
    UeBsBistatic,
    UeUeBistatic,
    UeMonostatic,
}

impl SensingMode {
    pub const ALL: [SensingMode; 6] = [
        SensingMode::BsBsBistatic,
        SensingMode::BsMonostatic,
        SensingMode::BsUeBistatic,
        SensingMode::UeBsBistatic,
        SensingMode::UeUeBistatic,
        SensingMode::UeMonostatic,
    ];

    pub fn is_monostatic(self) -> bool {
        matches!(self, SensingMode::BsMonostatic | SensingMode::UeMonostatic)
    }

    /// Required `(tx, rx)` node kinds.
    pub fn endpoint_kinds(self) -> (NodeKind, NodeKind) {
        use NodeKind::*;
        match self {
            SensingMode::BsBsBistatic | SensingMode::BsMonostatic => (Bs, Bs),
            SensingMode::BsUeBistatic => (Bs, Ue),
            SensingMode::UeBsBistatic => (Ue, Bs),
            SensingMode::UeUeBistatic | SensingMode::UeMonostatic => (Ue, Ue),
        }
    }
}

impl fmt::Display for SensingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensingMode::BsBsBistatic => "BS-BS bistatic",
            SensingMode::BsMonostatic => "BS monostatic",
            SensingMode::BsUeBistatic => "BS-UE bistatic",
            SensingMode::UeBsBistatic => "UE-BS bistatic",
            SensingMode::UeUeBistatic => "UE-UE bistatic",
            SensingMode::UeMonostatic => "UE monostatic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetRcs {
    /// Aspect-independent RCS, m².
    Scalar(f64),
    /// Segments in the body frame: local +z is the facing direction once the
    /// target is placed.
    Segmented(SegmentedObject),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub id: String,
    pub position: Vec3,
    pub velocity: Vec3,
    pub rcs: TargetRcs,
    pub micro_motion: MicroMotionProfile,
    /// Body rotation about the vertical axis, radians from +x.
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentObject {
    /// Type-1 object: scatters like a target but never carries fine motion.
    Scatterer(Target),
    /// Type-2 object: an infinite one-sided specular plane. Only the half
    /// space the normal points into reflects.
    Plane {
        id: String,
        point: Vec3,
        normal: Vec3,
        reflection_coefficient: f64,
    },
}

impl EnvironmentObject {
    pub fn id(&self) -> &str {
        match self {
            EnvironmentObject::Scatterer(t) => &t.id,
            EnvironmentObject::Plane { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LosModel {
    #[default]
    FixedLos,
    FixedNlos,
    /// LOS with probability `exp(-d/d0)`.
    Exponential { d0_m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LinkState {
    Los,
    Nlos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub carrier_hz: f64,
    pub nodes: Vec<Node>,
    pub mode: SensingMode,
    pub tx_node_id: String,
    pub rx_node_id: String,
    pub targets: Vec<Target>,
    pub environment_objects: Vec<EnvironmentObject>,
    pub los_model: LosModel,
    pub seed: u64,
}

/// A problem found by [`Scenario::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnresolvedNode { role: &'static str, id: String },
    ModeKindMismatch {
        role: &'static str,
        mode: SensingMode,
        expected: NodeKind,
        found: NodeKind,
    },
    MonostaticNotColocated { tx: String, rx: String },
    DuplicateId(String),
    NonPositiveCarrier(f64),
    NonFinite(String),
    NegativeRcs { target: String, value: f64 },
    InvalidPlane { id: String, reason: String },
    InvalidMicroMotion { target: String, reason: String },
    InvalidLosModel(String),
}

impl Violation {
    /// Stable kebab-case identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::UnresolvedNode { .. } => "unresolved-node",
            Violation::ModeKindMismatch { .. } => "mode-kind-mismatch",
            Violation::MonostaticNotColocated { .. } => "monostatic-not-colocated",
            Violation::DuplicateId(_) => "duplicate-id",
            Violation::NonPositiveCarrier(_) => "non-positive-carrier",
            Violation::NonFinite(_) => "non-finite",
            Violation::NegativeRcs { .. } => "negative-rcs",
            Violation::InvalidPlane { .. } => "invalid-plane",
            Violation::InvalidMicroMotion { .. } => "invalid-micro-motion",
            Violation::InvalidLosModel(_) => "invalid-los-model",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.code())?;
        match self {
            Violation::UnresolvedNode { role, id } => write!(f, "{role} node `{id}` does not exist"),
            Violation::ModeKindMismatch {
                role,
                mode,
                expected,
                found,
            } => write!(f, "{mode} needs a {expected} {role}, found {found}"),
            Violation::MonostaticNotColocated { tx, rx } => {
                write!(f, "monostatic mode needs tx == rx, got `{tx}` and `{rx}`")
            }
            Violation::DuplicateId(id) => write!(f, "id `{id}` is used more than once"),
            Violation::NonPositiveCarrier(c) => write!(f, "carrier {c} Hz is not positive"),
            Violation::NonFinite(what) => write!(f, "{what} has non-finite coordinates"),
            Violation::NegativeRcs { target, value } => write!(f, "target `{target}` has RCS {value} m²"),
            Violation::InvalidPlane { id, reason } => write!(f, "plane `{id}`: {reason}"),
            Violation::InvalidMicroMotion { target, reason } => write!(f, "target `{target}`: {reason}"),
            Violation::InvalidLosModel(reason) => f.write_str(reason),
        }
    }
}

impl Scenario {
    pub fn wavelength(&self) -> f64 {
        crate::wavelength(self.carrier_hz)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn tx(&self) -> Option<&Node> {
        self.node(&self.tx_node_id)
    }

    pub fn rx(&self) -> Option<&Node> {
        self.node(&self.rx_node_id)
    }

    /// All problems with the scenario; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            out.push(Violation::NonPositiveCarrier(self.carrier_hz));
        }

        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id.as_str()) {
                out.push(Violation::DuplicateId(n.id.clone()));
            }
            if !is_finite(&n.position) || !is_finite(&n.velocity) {
                out.push(Violation::NonFinite(format!("node `{}`", n.id)));
            }
        }

        let (want_tx, want_rx) = self.mode.endpoint_kinds();
        for (role, id, want) in [("tx", &self.tx_node_id, want_tx), ("rx", &self.rx_node_id, want_rx)] {
            match self.node(id) {
                None => out.push(Violation::UnresolvedNode { role, id: id.clone() }),
                Some(n) if n.kind != want => out.push(Violation::ModeKindMismatch {
                    role,
                    mode: self.mode,
                    expected: want,
                    found: n.kind,
                }),
                Some(_) => {}
            }
        }
        if self.mode.is_monostatic() && self.tx_node_id != self.rx_node_id {
            out.push(Violation::MonostaticNotColocated {
                tx: self.tx_node_id.clone(),
                rx: self.rx_node_id.clone(),
            });
        }

        let mut seen = HashSet::new();
        let scatterers = self.environment_objects.iter().filter_map(|eo| match eo {
            EnvironmentObject::Scatterer(t) => Some(t),
            _ => None,
        });
        for t in self.targets.iter().chain(scatterers) {
            check_target(t, &mut out);
        }
        for t in &self.targets {
            if !seen.insert(t.id.as_str()) {
                out.push(Violation::DuplicateId(t.id.clone()));
            }
        }
        for eo in &self.environment_objects {
            if !seen.insert(eo.id()) {
                out.push(Violation::DuplicateId(eo.id().to_string()));
            }
            if let EnvironmentObject::Scatterer(t) = eo {
                if !t.micro_motion.is_none() {
                    out.push(Violation::InvalidMicroMotion {
                        target: t.id.clone(),
                        reason: "environment scatterers cannot carry fine motion".into(),
                    });
                }
            }
            if let EnvironmentObject::Plane {
                id,
                point,
                normal,
                reflection_coefficient,
            } = eo
            {
                if !is_finite(point) || !is_finite(normal) {
                    out.push(Violation::NonFinite(format!("plane `{id}`")));
                } else if (normal.norm() - 1.0).abs() > 1e-9 {
                    out.push(Violation::InvalidPlane {
                        id: id.clone(),
                        reason: format!("normal magnitude {} is not 1", normal.norm()),
                    });
                }
                if !(0.0..=1.0).contains(reflection_coefficient) {
                    out.push(Violation::InvalidPlane {
                        id: id.clone(),
                        reason: format!("reflection coefficient {reflection_coefficient} outside [0, 1]"),
                    });
                }
            }
        }

        if let LosModel::Exponential { d0_m } = self.los_model {
            if !(d0_m > 0.0 && d0_m.is_finite()) {
                out.push(Violation::InvalidLosModel(format!(
                    "exponential LOS model needs d0_m > 0, got {d0_m}"
                )));
            }
        }
        out
    }

    /// Independent LOS states of the Tx→target and target→Rx links.
    pub fn link_states<R: Rng + ?Sized>(&self, target: &Target, rng: &mut R) -> Option<(LinkState, LinkState)> {
        let tx = self.tx()?;
        let rx = self.rx()?;
        let a = los_state((target.position - tx.position).norm(), self.los_model, rng);
        let b = los_state((target.position - rx.position).norm(), self.los_model, rng);
        Some((a, b))
    }
}

fn check_target(t: &Target, out: &mut Vec<Violation>) {
    if !is_finite(&t.position) || !is_finite(&t.velocity) || !t.orientation.is_finite() {
        out.push(Violation::NonFinite(format!("target `{}`", t.id)));
    }
    match &t.rcs {
        TargetRcs::Scalar(s) if !(*s >= 0.0) => out.push(Violation::NegativeRcs {
            target: t.id.clone(),
            value: *s,
        }),
        TargetRcs::Segmented(obj) if obj.is_empty() => out.push(Violation::NegativeRcs {
            target: t.id.clone(),
            value: 0.0,
        }),
        _ => {}
    }
    if let Err(e) = t.micro_motion.validate() {
        out.push(Violation::InvalidMicroMotion {
            target: t.id.clone(),
            reason: e.to_string(),
        });
    }
}

/// Draws the state of one link of length `link_distance`.
pub fn los_state<R: Rng + ?Sized>(link_distance: f64, model: LosModel, rng: &mut R) -> LinkState {
    match model {
        LosModel::FixedLos => LinkState::Los,
        LosModel::FixedNlos => LinkState::Nlos,
        LosModel::Exponential { d0_m } => {
            let p = (-link_distance.max(0.0) / d0_m).exp();
            if rng.random::<f64>() < p {
                LinkState::Los
            } else {
                LinkState::Nlos
            }
        }
    }
}

/// A single-bounce reflection off a type-2 environment object.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecularPath {
    pub eo_id: String,
    pub length_m: f64,
    pub delay_s: f64,
    /// Linear field amplitude.
    pub gain: f64,
    /// Departure direction at the Tx, towards the reflection point.
    pub aod: Direction,
    /// Arrival direction at the Rx, pointing back towards the reflection
    /// point.
    pub aoa: Direction,
    pub reflection_point: Vec3,
}

/// Specular Tx→plane→Rx paths by the image method.
///
/// Both endpoints must lie strictly in front of a plane for it to reflect;
/// planes with a zero coefficient are skipped. Returns nothing when the Tx or
/// Rx node does not resolve.
pub fn specular_paths(scenario: &Scenario) -> Vec<SpecularPath> {
    let (Some(tx), Some(rx)) = (scenario.tx(), scenario.rx()) else {
        return Vec::new();
    };
    let wavelength = scenario.wavelength();
    scenario
        .environment_objects
        .iter()
        .filter_map(|eo| match eo {
            EnvironmentObject::Plane {
                id,
                point,
                normal,
                reflection_coefficient,
            } if *reflection_coefficient > 0.0 => {
                plane_bounce(&tx.position, &rx.position, point, normal).map(|hit| {
                    let length_m = (hit - tx.position).norm() + (rx.position - hit).norm();
                    SpecularPath {
                        eo_id: id.clone(),
                        length_m,
                        delay_s: length_m / SPEED_OF_LIGHT,
                        gain: reflection_coefficient * wavelength / (4.0 * PI * length_m),
                        aod: Direction::of(&(hit - tx.position)),
                        aoa: Direction::of(&(hit - rx.position)),
                        reflection_point: hit,
                    }
                })
            }
            _ => None,
        })
        .collect()
}

/// Reflection point of the Tx→Rx bounce off a one-sided plane.
pub fn plane_bounce(tx: &Vec3, rx: &Vec3, point: &Vec3, normal: &Vec3) -> Option<Vec3> {
    let n = normal.normalize();
    let h_tx = (tx - point).dot(&n);
    let h_rx = (rx - point).dot(&n);
    if !(h_tx > 0.0 && h_rx > 0.0) {
        return None;
    }
    let image = tx - n * (2.0 * h_tx);
    // The image sits at -h_tx, so the segment crosses the plane at this fraction.
    let s = h_tx / (h_tx + h_rx);
    Some(image + (rx - image) * s)
}
