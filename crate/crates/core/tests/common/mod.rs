#![allow(dead_code)]

use isac_chansim::geometry::Vec3;
use isac_chansim::microdoppler::MicroMotionProfile;
use isac_chansim::scenario::{LosModel, Node, NodeKind, Scenario, SensingMode, Target, TargetRcs};
use isac_chansim::SPEED_OF_LIGHT;

pub const CARRIER_HZ: f64 = 3.5e9;

pub fn node(id: &str, kind: NodeKind, position: Vec3) -> Node {
    Node {
        id: id.into(),
        kind,
        position,
        velocity: Vec3::zeros(),
    }
}

pub fn target(position: Vec3, velocity: Vec3) -> Target {
    Target {
        id: "t".into(),
        position,
        velocity,
        rcs: TargetRcs::Scalar(1.0),
        micro_motion: MicroMotionProfile::None,
        orientation: 0.0,
    }
}

pub fn monostatic(targets: Vec<Target>) -> Scenario {
    Scenario {
        carrier_hz: CARRIER_HZ,
        nodes: vec![node("bs", NodeKind::Bs, Vec3::zeros())],
        mode: SensingMode::BsMonostatic,
        tx_node_id: "bs".into(),
        rx_node_id: "bs".into(),
        targets,
        environment_objects: Vec::new(),
        los_model: LosModel::FixedLos,
        seed: 11,
    }
}

pub fn bistatic(tx: Vec3, rx: Vec3, targets: Vec<Target>) -> Scenario {
    Scenario {
        carrier_hz: CARRIER_HZ,
        nodes: vec![node("a", NodeKind::Bs, tx), node("b", NodeKind::Bs, rx)],
        mode: SensingMode::BsBsBistatic,
        tx_node_id: "a".into(),
        rx_node_id: "b".into(),
        targets,
        environment_objects: Vec::new(),
        los_model: LosModel::FixedLos,
        seed: 5,
    }
}

pub fn wavelength() -> f64 {
    SPEED_OF_LIGHT / CARRIER_HZ
}
