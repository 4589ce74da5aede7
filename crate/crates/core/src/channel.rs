//! Channel realizations: background clusters, the concatenated target link
//! and the frequency response over subcarriers and slow time.
//!
//! Each cluster is a set of rays sharing one delay. A ray contributes
//!
//! ```text
//! a·√G_fast · exp(-j2π·k·Δf·τ) · exp(j2π·f_d·m·T_pri) · exp(j·φ_md[m])
//! ```
//!
//! to `H[k][m]`, where `a = √(P/N_rays)` carries a random initial phase, the
//! fast-fading gain depends on the ray's angles, and the micro-Doppler phase
//! is applied to a random subset of the sensing cluster's rays only.
//! Cluster powers are normalised to sum to one; the overall path gain is
//! kept as a separate scalar.

use std::f64::consts::PI;

use nalgebra::Rotation3;
use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::geometry::{facing_axis, Direction, Vec3};
use crate::microdoppler::{geometry_factor, MicroMotionProfile};
use crate::rcs::{decompose_sweep, object_sweep, Aggregation, RcsDecomposition, SegmentedObject};
use crate::scenario::{specular_paths, EnvironmentObject, LinkState, Scenario, Target, TargetRcs};
use crate::sensing::OfdmConfig;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Unit ray offsets within a cluster; multiply by the cluster angle spread.
pub const RAY_OFFSETS: [f64; 20] = [
    0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129, 0.6797, -0.6797,
    0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551,
];

pub const DEFAULT_N_RAYS: usize = 20;
pub const DEFAULT_RAY_SPREAD_DEG: f64 = 5.0;

/// Offsets for `n_rays` rays with angle spread `spread_rad`. Up to 20 rays use
/// the tabulated offsets; more rays spread evenly over the same range.
pub fn ray_offsets(n_rays: usize, spread_rad: f64) -> Vec<f64> {
    match n_rays {
        0 => Vec::new(),
        1 => vec![0.0],
        n if n <= RAY_OFFSETS.len() => RAY_OFFSETS[..n].iter().map(|o| o * spread_rad).collect(),
        n => {
            let span = RAY_OFFSETS[18];
            (0..n)
                .map(|i| (-span + 2.0 * span * i as f64 / (n - 1) as f64) * spread_rad)
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClusterKind {
    Background,
    Sensing { target_id: String },
    /// Environment object: a type-1 scatterer or a type-2 specular plane.
    Eo { eo_id: String },
}

/// Angle-dependent RCS fast fading of a target, from a slow/fast split of an
/// aspect sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RcsFastFading {
    pub decomposition: RcsDecomposition,
    /// Outward surface normal of the target in world coordinates.
    pub normal: Vec3,
}

impl RcsFastFading {
    /// Linear power gain for a ray leaving the Tx along `departure` and
    /// arriving at the Rx from `arrival`.
    pub fn gain(&self, departure: &Direction, arrival: &Direction) -> f64 {
        let n = self.normal.normalize();
        let incidence = n.dot(&departure.unit_vector()).abs().min(1.0).acos();
        let scattering = n.dot(&arrival.unit_vector()).abs().min(1.0).acos();
        self.decomposition.fast_gain(0.5 * (incidence + scattering))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub kind: ClusterKind,
    pub delay_s: f64,
    /// Linear power; a fraction of the total once normalised.
    pub power: f64,
    /// Departure direction at the Tx.
    pub aod: Direction,
    /// Arrival direction at the Rx, pointing back along the incoming ray.
    pub aoa: Direction,
    pub n_rays: usize,
    /// Per-ray azimuth offsets, radians.
    pub ray_offsets: Vec<f64>,
    pub doppler_hz: f64,
    pub micro_motion: MicroMotionProfile,
    pub geometry_factor: f64,
    pub rcs_fast: Option<RcsFastFading>,
}

impl Cluster {
    /// A static cluster with the default ray layout.
    pub fn stationary(kind: ClusterKind, delay_s: f64, power: f64, aod: Direction, aoa: Direction) -> Self {
        Cluster {
            kind,
            delay_s,
            power,
            aod,
            aoa,
            n_rays: DEFAULT_N_RAYS,
            ray_offsets: ray_offsets(DEFAULT_N_RAYS, DEFAULT_RAY_SPREAD_DEG.to_radians()),
            doppler_hz: 0.0,
            micro_motion: MicroMotionProfile::None,
            geometry_factor: 0.0,
            rcs_fast: None,
        }
    }

    pub fn with_rays(mut self, n_rays: usize, spread_rad: f64) -> Self {
        self.n_rays = n_rays;
        self.ray_offsets = ray_offsets(n_rays, spread_rad);
        self
    }

    pub fn is_target(&self) -> bool {
        matches!(self.kind, ClusterKind::Sensing { .. })
    }
}

/// Unsorted exponential delays with mean `delay_spread_s`.
pub fn draw_raw_delays<R: Rng + ?Sized>(n: usize, delay_spread_s: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if !(delay_spread_s > 0.0) {
        return Err(Error::invalid(format!("delay spread must be positive, got {delay_spread_s}")));
    }
    let exp = Exp::new(1.0 / delay_spread_s).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((0..n).map(|_| exp.sample(rng)).collect())
}

fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    Direction {
        azimuth: rng.random_range(-PI..PI),
        zenith: rng.random_range(0.0..PI),
    }
}

/// Static environment clusters: sorted exponential delays starting at 0,
/// powers decaying as `exp(-τ/spread)` and summing to one, uniform angles.
pub fn generate_background<R: Rng + ?Sized>(n_clusters: usize, delay_spread_s: f64, rng: &mut R) -> Result<Vec<Cluster>> {
    let mut delays = draw_raw_delays(n_clusters, delay_spread_s, rng)?;
    delays.sort_by(f64::total_cmp);
    let first = delays.first().copied().unwrap_or(0.0);
    let mut clusters: Vec<Cluster> = delays
        .into_iter()
        .map(|d| {
            let tau = d - first;
            let aod = uniform_direction(rng);
            let aoa = uniform_direction(rng);
            Cluster::stationary(ClusterKind::Background, tau, (-tau / delay_spread_s).exp(), aod, aoa)
        })
        .collect();
    normalize_powers(&mut clusters);
    Ok(clusters)
}

/// Scales cluster powers to sum to one and returns the previous total.
pub fn normalize_powers(clusters: &mut [Cluster]) -> f64 {
    let total: f64 = clusters.iter().map(|c| c.power).sum();
    if total > 0.0 {
        clusters.iter_mut().for_each(|c| c.power /= total);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLoss {
    Db(f64),
    /// Zero RCS: no echo at all.
    NoEcho,
}

impl PathLoss {
    pub fn linear_gain(&self) -> f64 {
        match *self {
            PathLoss::Db(db) => 10f64.powf(-db / 10.0),
            PathLoss::NoEcho => 0.0,
        }
    }
}

/// Bistatic radar equation, `10·log10((4π)³·d_tx²·d_rx² / (σ·λ²))`.
pub fn sensing_pathloss(d_tx: f64, d_rx: f64, wavelength: f64, sigma_slow: f64) -> Result<PathLoss> {
    if !(d_tx > 0.0 && d_rx > 0.0 && wavelength > 0.0) {
        return Err(Error::invalid(format!(
            "distances and wavelength must be positive (d_tx {d_tx}, d_rx {d_rx}, λ {wavelength})"
        )));
    }
    if !(sigma_slow >= 0.0) {
        return Err(Error::invalid(format!("RCS must be non-negative, got {sigma_slow}")));
    }
    if sigma_slow == 0.0 {
        return Ok(PathLoss::NoEcho);
    }
    let num = (4.0 * PI).powi(3) * d_tx.powi(2) * d_rx.powi(2);
    Ok(PathLoss::Db(10.0 * (num / (sigma_slow * wavelength.powi(2))).log10()))
}

/// Cluster and budget terms of one Tx→target→Rx link.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetLink {
    pub cluster: Cluster,
    pub d_tx: f64,
    pub d_rx: f64,
    pub pathloss: PathLoss,
    /// Slow RCS component used in the path loss, m².
    pub sigma_slow: f64,
    pub link_states: (LinkState, LinkState),
}

impl TargetLink {
    /// Fractional `(delay, Doppler)` bins of the link on an OFDM grid.
    pub fn expected_bins(&self, ofdm: &OfdmConfig) -> (f64, f64) {
        (
            self.cluster.delay_s * ofdm.bandwidth_hz(),
            self.cluster.doppler_hz / ofdm.doppler_resolution_hz(),
        )
    }
}

/// Knobs of the reduced coefficient generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub n_background: usize,
    pub delay_spread_s: f64,
    /// Total power of the background clusters relative to the transmit power.
    pub background_gain_db: f64,
    pub n_rays: usize,
    /// Rays of a sensing cluster carrying the micro-Doppler phase.
    pub micro_subset: usize,
    pub ray_spread_deg: f64,
    /// Extra loss per NLOS leg of a target link.
    pub nlos_excess_db: f64,
    pub aggregation: Aggregation,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            n_background: 5,
            delay_spread_s: 100e-9,
            background_gain_db: -110.0,
            n_rays: DEFAULT_N_RAYS,
            micro_subset: DEFAULT_N_RAYS / 2,
            ray_spread_deg: DEFAULT_RAY_SPREAD_DEG,
            nlos_excess_db: 20.0,
            aggregation: Aggregation::Coherent,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rays == 0 {
            return Err(Error::invalid("n_rays must be at least 1"));
        }
        if self.micro_subset > self.n_rays {
            return Err(Error::invalid(format!(
                "micro_subset {} exceeds n_rays {}",
                self.micro_subset, self.n_rays
            )));
        }
        if self.n_background > 0 && !(self.delay_spread_s > 0.0) {
            return Err(Error::invalid("delay_spread_s must be positive"));
        }
        if !(self.ray_spread_deg >= 0.0) || self.background_gain_db.is_nan() || self.nlos_excess_db.is_nan() {
            return Err(Error::invalid("ray spread, background gain and NLOS excess must be numbers"));
        }
        Ok(())
    }
}

/// Rotation taking an object's local +z to the body facing direction.
fn body_rotation(orientation: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vec3::z_axis(), orientation) * Rotation3::from_axis_angle(&Vec3::y_axis(), PI / 2.0)
}

const SWEEP_ANGLES_DEG: std::ops::RangeInclusive<i32> = 0..=90;

fn segmented_rcs(
    obj: &SegmentedObject,
    orientation: f64,
    wavelength: f64,
    r_min: f64,
    mode: Aggregation,
) -> Result<(f64, RcsFastFading)> {
    let angles: Vec<f64> = SWEEP_ANGLES_DEG.map(f64::from).collect();
    let sweep = object_sweep(obj, wavelength, r_min, &angles, mode)?;
    let decomposition = decompose_sweep(&sweep)?;
    let normal = body_rotation(orientation) * Vec3::z();
    Ok((decomposition.slow_m2(), RcsFastFading { decomposition, normal }))
}

/// Concatenates the Tx→target and target→Rx legs into one sensing cluster.
///
/// Delay is the total path length over c; Doppler is the sum of the
/// relative-velocity projections on both legs over λ, positive for a
/// receding target. Power is the radar-equation gain with the slow RCS,
/// reduced by `nlos_excess_db` per NLOS leg.
pub fn concatenate_target_link(
    scenario: &Scenario,
    target: &Target,
    link_states: (LinkState, LinkState),
    params: &ChannelParams,
) -> Result<TargetLink> {
    let tx = scenario
        .tx()
        .ok_or_else(|| Error::Config(format!("tx node `{}` not found", scenario.tx_node_id)))?;
    let rx = scenario
        .rx()
        .ok_or_else(|| Error::Config(format!("rx node `{}` not found", scenario.rx_node_id)))?;
    let to_target_tx = target.position - tx.position;
    let to_target_rx = target.position - rx.position;
    let (d_tx, d_rx) = (to_target_tx.norm(), to_target_rx.norm());
    if d_tx < 1e-9 || d_rx < 1e-9 {
        return Err(Error::DegenerateGeometry(format!(
            "target `{}` coincides with the {} node",
            target.id,
            if d_tx < 1e-9 { "tx" } else { "rx" }
        )));
    }
    let wavelength = scenario.wavelength();
    let (u_tx, u_rx) = (to_target_tx / d_tx, to_target_rx / d_rx);
    let doppler_hz = ((target.velocity - tx.velocity).dot(&u_tx) + (target.velocity - rx.velocity).dot(&u_rx)) / wavelength;

    let (sigma_slow, rcs_fast) = match &target.rcs {
        TargetRcs::Scalar(s) => (*s, None),
        TargetRcs::Segmented(obj) => {
            let (s, fast) = segmented_rcs(obj, target.orientation, wavelength, d_tx.min(d_rx), params.aggregation)?;
            (s, Some(fast))
        }
    };
    let pathloss = sensing_pathloss(d_tx, d_rx, wavelength, sigma_slow)?;
    let n_nlos = [link_states.0, link_states.1].iter().filter(|s| **s == LinkState::Nlos).count();
    let power = pathloss.linear_gain() * 10f64.powf(-params.nlos_excess_db * n_nlos as f64 / 10.0);

    let cluster = Cluster {
        kind: ClusterKind::Sensing {
            target_id: target.id.clone(),
        },
        delay_s: (d_tx + d_rx) / SPEED_OF_LIGHT,
        power,
        aod: Direction::of(&to_target_tx),
        aoa: Direction::of(&to_target_rx),
        n_rays: params.n_rays,
        ray_offsets: ray_offsets(params.n_rays, params.ray_spread_deg.to_radians()),
        doppler_hz,
        micro_motion: target.micro_motion,
        geometry_factor: geometry_factor(&u_tx, &u_rx, &facing_axis(target.orientation)),
        rcs_fast,
    };
    Ok(TargetLink {
        cluster,
        d_tx,
        d_rx,
        pathloss,
        sigma_slow,
        link_states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationMeta {
    pub carrier_hz: f64,
    pub scs_hz: f64,
    pub pri_s: f64,
    pub seed: u64,
}

/// `H[k][m]` split into target and background parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub clusters: Vec<Cluster>,
    pub target: Array2<Complex64>,
    pub background: Array2<Complex64>,
    /// Total linear power gain before normalisation of the cluster powers.
    pub path_gain: f64,
    pub links: Vec<TargetLink>,
    pub meta: RealizationMeta,
}

impl ChannelRealization {
    pub fn total(&self) -> Array2<Complex64> {
        &self.target + &self.background
    }
}

/// Frequency response of normalised clusters scaled by `path_gain`.
///
/// Rays draw, in cluster order: a departure/arrival offset pairing, an
/// initial phase each, and for moving-part targets the micro-Doppler subset.
pub fn freq_response<R: Rng + ?Sized>(
    clusters: &[Cluster],
    path_gain: f64,
    ofdm: &OfdmConfig,
    micro_subset: usize,
    rng: &mut R,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    ofdm.validate()?;
    let (n_sc, n_reps) = (ofdm.n_sc, ofdm.n_reps);
    let wavelength = ofdm.wavelength();
    let pri = ofdm.pri_s();
    let scale = path_gain.max(0.0).sqrt();
    let mut target = Array2::zeros((n_sc, n_reps));
    let mut background = Array2::zeros((n_sc, n_reps));

    for c in clusters {
        if c.n_rays == 0 || c.ray_offsets.len() != c.n_rays {
            return Err(Error::invalid("cluster ray offsets do not match its ray count"));
        }
        let mut pairing: Vec<usize> = (0..c.n_rays).collect();
        pairing.shuffle(rng);
        let per_ray = (c.power / c.n_rays as f64).sqrt();
        let rays: Vec<Complex64> = (0..c.n_rays)
            .map(|r| {
                let dep = Direction {
                    azimuth: c.aod.azimuth + c.ray_offsets[pairing[r]],
                    zenith: c.aod.zenith,
                };
                let arr = Direction {
                    azimuth: c.aoa.azimuth + c.ray_offsets[r],
                    zenith: c.aoa.zenith,
                };
                let g = c.rcs_fast.as_ref().map_or(1.0, |f| f.gain(&dep, &arr));
                Complex64::from_polar(per_ray * g.sqrt(), rng.random_range(0.0..2.0 * PI))
            })
            .collect();

        let modulated = c.is_target() && !c.micro_motion.is_none() && micro_subset > 0;
        let mut in_subset = vec![false; c.n_rays];
        if modulated {
            for i in index::sample(rng, c.n_rays, micro_subset.min(c.n_rays)) {
                in_subset[i] = true;
            }
        }
        let a_sub: Complex64 = rays.iter().zip(&in_subset).filter(|(_, s)| **s).map(|(a, _)| a).sum();
        let a_plain: Complex64 = rays.iter().zip(&in_subset).filter(|(_, s)| !**s).map(|(a, _)| a).sum();

        let slow: Vec<Complex64> = (0..n_reps)
            .map(|m| {
                let t = m as f64 * pri;
                let micro = if modulated {
                    a_sub * Complex64::from_polar(1.0, c.micro_motion.phase(t, wavelength, c.geometry_factor))
                } else {
                    a_sub
                };
                Complex64::from_polar(scale, 2.0 * PI * c.doppler_hz * t) * (a_plain + micro)
            })
            .collect();
        let fast: Vec<Complex64> = (0..n_sc)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * ofdm.scs_hz * c.delay_s))
            .collect();

        let out = if c.is_target() { &mut target } else { &mut background };
        for ((k, m), v) in out.indexed_iter_mut() {
            *v += fast[k] * slow[m];
        }
    }
    Ok((target, background))
}

/// Draws one full realization of the scenario: link states and target
/// clusters, environment objects, background clusters, then the response.
pub fn realize<R: Rng + ?Sized>(
    scenario: &Scenario,
    params: &ChannelParams,
    ofdm: &OfdmConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let violations = scenario.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Config(list.join("; ")));
    }
    params.validate()?;
    ofdm.validate()?;
    if (scenario.carrier_hz / ofdm.carrier_hz - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "scenario carrier {} Hz differs from the OFDM carrier {} Hz",
            scenario.carrier_hz, ofdm.carrier_hz
        )));
    }
    let spread = params.ray_spread_deg.to_radians();

    let mut links = Vec::new();
    for t in &scenario.targets {
        let states = scenario.link_states(t, rng).expect("validated scenario resolves its nodes");
        links.push(concatenate_target_link(scenario, t, states, params)?);
    }
    let mut clusters: Vec<Cluster> = links.iter().map(|l| l.cluster.clone()).collect();

    for eo in &scenario.environment_objects {
        if let EnvironmentObject::Scatterer(t) = eo {
            let states = scenario.link_states(t, rng).expect("validated scenario resolves its nodes");
            let mut c = concatenate_target_link(scenario, t, states, params)?.cluster;
            c.kind = ClusterKind::Eo { eo_id: t.id.clone() };
            c.micro_motion = MicroMotionProfile::None;
            clusters.push(c);
        }
    }
    for p in specular_paths(scenario) {
        clusters.push(
            Cluster::stationary(ClusterKind::Eo { eo_id: p.eo_id }, p.delay_s, p.gain * p.gain, p.aod, p.aoa)
                .with_rays(params.n_rays, spread),
        );
    }

    let bg_gain = 10f64.powf(params.background_gain_db / 10.0);
    for mut c in generate_background(params.n_background, params.delay_spread_s, rng)? {
        c.power *= bg_gain;
        clusters.push(c.with_rays(params.n_rays, spread));
    }

    let path_gain = normalize_powers(&mut clusters);
    let (target, background) = freq_response(&clusters, path_gain, ofdm, params.micro_subset, rng)?;
    Ok(ChannelRealization {
        clusters,
        target,
        background,
        path_gain,
        links,
        meta: RealizationMeta {
            carrier_hz: ofdm.carrier_hz,
            scs_hz: ofdm.scs_hz,
            pri_s: ofdm.pri_s(),
            seed: scenario.seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{LosModel, Node, NodeKind, SensingMode};
    use crate::sensing::trial_rng;
    use approx::assert_relative_eq;

    fn monostatic(target_pos: Vec3, target_vel: Vec3) -> Scenario {
        Scenario {
            carrier_hz: SPEED_OF_LIGHT / 0.0857,
            nodes: vec![Node {
                id: "bs".into(),
                kind: NodeKind::Bs,
                position: Vec3::zeros(),
                velocity: Vec3::zeros(),
            }],
            mode: SensingMode::BsMonostatic,
            tx_node_id: "bs".into(),
            rx_node_id: "bs".into(),
            targets: vec![Target {
                id: "car".into(),
                position: target_pos,
                velocity: target_vel,
                rcs: TargetRcs::Scalar(1.0),
                micro_motion: MicroMotionProfile::None,
                orientation: 0.0,
            }],
            environment_objects: vec![],
            los_model: LosModel::FixedLos,
            seed: 0,
        }
    }

    fn link(s: &Scenario) -> TargetLink {
        concatenate_target_link(s, &s.targets[0], (LinkState::Los, LinkState::Los), &ChannelParams::default()).unwrap()
    }

    #[test]
    fn pathloss_reference_value() {
        let PathLoss::Db(pl) = sensing_pathloss(100.0, 100.0, 0.0857, 1.0).unwrap() else {
            panic!("expected an echo");
        };
        assert!((pl - 134.3).abs() < 0.05, "{pl}");
        let PathLoss::Db(half) = sensing_pathloss(100.0, 100.0, 0.0857, 2.0).unwrap() else { unreachable!() };
        assert_relative_eq!(pl - half, 10.0 * 2f64.log10(), max_relative = 1e-9);
        let PathLoss::Db(far) = sensing_pathloss(200.0, 200.0, 0.0857, 1.0).unwrap() else { unreachable!() };
        assert_relative_eq!(far - pl, 10.0 * 16f64.log10(), max_relative = 1e-9);
        assert_eq!(sensing_pathloss(1.0, 1.0, 0.1, 0.0).unwrap(), PathLoss::NoEcho);
        assert!(sensing_pathloss(0.0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn receding_target_doppler() {
        let s = monostatic(Vec3::new(100.0, 0.0, 0.0), Vec3::new(150.0 / 3.6, 0.0, 0.0));
        let l = link(&s);
        assert_relative_eq!(l.cluster.doppler_hz, 2.0 * (150.0 / 3.6) / 0.0857, max_relative = 1e-12);
        assert!((l.cluster.doppler_hz - 972.2).abs() < 0.5);
        assert_relative_eq!(l.cluster.delay_s, 200.0 / SPEED_OF_LIGHT);
        assert_relative_eq!(l.cluster.geometry_factor, 2.0);
    }

    #[test]
    fn static_and_perpendicular_targets_have_no_doppler() {
        assert_eq!(link(&monostatic(Vec3::new(50.0, 0.0, 0.0), Vec3::zeros())).cluster.doppler_hz, 0.0);
        let mut s = monostatic(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 7.0));
        s.mode = SensingMode::BsBsBistatic;
        s.nodes[0].position = Vec3::new(-30.0, 0.0, 0.0);
        s.nodes.push(Node {
            id: "bs2".into(),
            kind: NodeKind::Bs,
            position: Vec3::new(0.0, 40.0, 0.0),
            velocity: Vec3::zeros(),
        });
        s.rx_node_id = "bs2".into();
        assert!(link(&s).cluster.doppler_hz.abs() < 1e-12);
    }

    #[test]
    fn colocated_target_is_degenerate() {
        let s = monostatic(Vec3::zeros(), Vec3::zeros());
        let err = concatenate_target_link(&s, &s.targets[0], (LinkState::Los, LinkState::Los), &ChannelParams::default());
        assert!(matches!(err, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn nlos_leg_costs_excess_loss() {
        let s = monostatic(Vec3::new(100.0, 0.0, 0.0), Vec3::zeros());
        let los = link(&s).cluster.power;
        let p = ChannelParams::default();
        let nlos = concatenate_target_link(&s, &s.targets[0], (LinkState::Nlos, LinkState::Los), &p).unwrap();
        assert_relative_eq!(los / nlos.cluster.power, 100.0, max_relative = 1e-9);
    }

    #[test]
    fn background_is_sorted_normalised_and_seeded() {
        assert!(generate_background(0, 1e-7, &mut trial_rng(0, 0)).unwrap().is_empty());
        let a = generate_background(5, 1e-7, &mut trial_rng(3, 0)).unwrap();
        let b = generate_background(5, 1e-7, &mut trial_rng(3, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].delay_s, 0.0);
        assert!(a.windows(2).all(|w| w[0].delay_s <= w[1].delay_s));
        assert!((a.iter().map(|c| c.power).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(a.iter().all(|c| c.doppler_hz == 0.0));
    }

    #[test]
    fn raw_delays_have_configured_mean() {
        let d = draw_raw_delays(10_000, 100e-9, &mut trial_rng(11, 0)).unwrap();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!((mean / 100e-9 - 1.0).abs() < 0.05, "{mean}");
    }

    fn single(delay_s: f64, n_rays: usize) -> Cluster {
        let d = Direction { azimuth: 0.0, zenith: PI / 2.0 };
        Cluster::stationary(ClusterKind::Background, delay_s, 1.0, d, d).with_rays(n_rays, 0.1)
    }

    #[test]
    fn static_cluster_at_zero_delay_is_flat() {
        let cfg = OfdmConfig { n_sc: 12, n_reps: 6, ..Default::default() };
        let (_, bg) = freq_response(&[single(0.0, 20)], 1.0, &cfg, 10, &mut trial_rng(0, 0)).unwrap();
        let h0 = bg[[0, 0]];
        assert!(bg.iter().all(|v| (v - h0).norm() < 1e-12));
    }

    #[test]
    fn one_ray_phase_slope_is_exact() {
        let cfg = OfdmConfig { n_sc: 64, n_reps: 2, ..Default::default() };
        let tau = 0.37e-6;
        let (_, h) = freq_response(&[single(tau, 1)], 1.0, &cfg, 0, &mut trial_rng(0, 0)).unwrap();
        for k in 1..64 {
            assert_relative_eq!(h[[k, 0]].norm(), 1.0, max_relative = 1e-12);
            let step = (h[[k, 0]] / h[[k - 1, 0]]).arg();
            let want = (-2.0 * PI * cfg.scs_hz * tau + PI).rem_euclid(2.0 * PI) - PI;
            assert!((step - want).abs() < 1e-9);
        }
    }

    #[test]
    fn realize_is_deterministic_and_background_static() {
        let mut s = monostatic(Vec3::new(100.0, 0.0, 0.0), Vec3::new(41.67, 0.0, 0.0));
        s.carrier_hz = 3.5e9;
        let cfg = OfdmConfig::default();
        let p = ChannelParams::default();
        let a = realize(&s, &p, &cfg, &mut trial_rng(7, 2)).unwrap();
        let b = realize(&s, &p, &cfg, &mut trial_rng(7, 2)).unwrap();
        assert_eq!(a, b);
        assert!((a.clusters.iter().map(|c| c.power).sum::<f64>() - 1.0).abs() < 1e-12);
        for m in 0..cfg.n_reps {
            for k in 0..cfg.n_sc {
                assert_eq!(a.background[[k, m]], a.background[[k, 0]]);
            }
        }
    }

    #[test]
    fn carrier_mismatch_is_rejected() {
        let s = monostatic(Vec3::new(100.0, 0.0, 0.0), Vec3::zeros());
        let err = realize(&s, &ChannelParams::default(), &OfdmConfig::default(), &mut trial_rng(0, 0));
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
