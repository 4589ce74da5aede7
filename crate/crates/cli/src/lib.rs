//! Command-line workflows for `isac-chansim`.
//!
//! [`run`] executes one subcommand and returns an exit code together with
//! the manifest of emitted files. Exit codes: 0 on success, 2 for invalid
//! input (scenario violations, bad overrides, unknown presets, malformed
//! files), 1 for runtime failures such as unreadable files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

use isac_chansim::config::{Override, ScenarioFile};
use isac_chansim::export;
use isac_chansim::geometry::vec3;
use isac_chansim::microdoppler::{arm_swing_states, simulate_arm_swing, spectrogram};
use isac_chansim::rcs::{decompose_sweep, monostatic_sweep};
use isac_chansim::sensing::{monte_carlo, run_trial, to_range_velocity};
use isac_chansim::Error;

pub const TABLE1_SCENARIO: &str = include_str!("../../../scenarios/table1.toml");
pub const PLATE_SCENARIO: &str = include_str!("../../../scenarios/plate.toml");
pub const ARM_SWING_SCENARIO: &str = include_str!("../../../scenarios/arm_swing.toml");

pub const MANIFEST_NAME: &str = "manifest.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RcsSweep,
    Microdoppler,
    Simulate,
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::RcsSweep => "rcs-sweep",
            Command::Microdoppler => "microdoppler",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }

    fn bundled_scenario(self) -> &'static str {
        match self {
            Command::RcsSweep => PLATE_SCENARIO,
            Command::Microdoppler => ARM_SWING_SCENARIO,
            Command::Simulate | Command::Validate => TABLE1_SCENARIO,
        }
    }
}

/// Named figure recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Plate RCS sweeps at three distances.
    Fig2,
    /// Arm-swing range/velocity traces and the 0° spectrogram.
    Fig3,
    /// Reference vehicle run: pre- and post-notch delay-Doppler maps.
    Fig4,
    /// Arm-swing spectrograms at 0°, 30°, 60° and 90°.
    Fig5,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "fig2" => Some(Preset::Fig2),
            "fig3" => Some(Preset::Fig3),
            "fig4" => Some(Preset::Fig4),
            "fig5" => Some(Preset::Fig5),
            _ => None,
        }
    }

    fn command(self) -> Command {
        match self {
            Preset::Fig2 => Command::RcsSweep,
            Preset::Fig3 | Preset::Fig5 => Command::Microdoppler,
            Preset::Fig4 => Command::Simulate,
        }
    }
}

/// Every preset with the subcommand it belongs to.
pub fn figure_recipes() -> [(&'static str, &'static str); 4] {
    [
        ("fig2", "rcs-sweep"),
        ("fig3", "microdoppler"),
        ("fig4", "simulate"),
        ("fig5", "microdoppler"),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Bundled scenario for the command when absent.
    pub scenario_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Replaces the scenario file's seed when given.
    pub seed: Option<u64>,
    pub preset: Option<String>,
    /// Raw `section.key=value` strings.
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub manifest: Vec<ManifestEntry>,
    /// Lines for stdout (success) or stderr (failure).
    pub messages: Vec<String>,
}

#[derive(Debug)]
enum Failure {
    Invalid(Vec<String>),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn invalid(msg: impl fmt::Display) -> Failure {
    Failure::Invalid(vec![msg.to_string()])
}

/// Load errors: I/O is a runtime failure, everything else is bad input.
fn load_failure(e: Error) -> Failure {
    match e {
        Error::Io { .. } => Failure::Runtime(e.into()),
        other => invalid(other),
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let mut messages = Vec::new();
    match execute(cfg, &mut messages) {
        Ok(manifest) => Outcome {
            exit_code: 0,
            manifest,
            messages,
        },
        Err(Failure::Invalid(lines)) => Outcome {
            exit_code: 2,
            manifest: Vec::new(),
            messages: lines,
        },
        Err(Failure::Runtime(e)) => Outcome {
            exit_code: 1,
            manifest: Vec::new(),
            messages: vec![format!("error: {e:#}")],
        },
    }
}

fn execute(cfg: &RunConfig, messages: &mut Vec<String>) -> Result<Vec<ManifestEntry>, Failure> {
    let preset = match &cfg.preset {
        None => None,
        Some(name) => {
            let p = Preset::parse(name).ok_or_else(|| {
                let known: Vec<_> = figure_recipes().iter().map(|r| r.0).collect();
                invalid(format!("unknown preset `{name}` (known: {})", known.join(", ")))
            })?;
            if p.command() != cfg.command {
                return Err(invalid(format!(
                    "preset `{name}` belongs to `{}`, not `{}`",
                    p.command().name(),
                    cfg.command.name()
                )));
            }
            Some(p)
        }
    };

    let overrides = cfg
        .overrides
        .iter()
        .map(|s| s.parse::<Override>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let mut file = match &cfg.scenario_path {
        Some(p) => ScenarioFile::load(p, &overrides),
        None => ScenarioFile::from_toml_str(cfg.command.bundled_scenario(), &overrides),
    }
    .map_err(load_failure)?;
    if let Some(seed) = cfg.seed {
        file.scenario.seed = seed;
    }

    let scenario = file.to_scenario().map_err(load_failure)?;
    let violations = scenario.validate();
    if !violations.is_empty() {
        return Err(Failure::Invalid(violations.iter().map(ToString::to_string).collect()));
    }
    if cfg.command == Command::Validate {
        messages.push(format!("{}: no violations", scenario.mode));
        return Ok(Vec::new());
    }

    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    let out = &cfg.output_dir;
    let files = match cfg.command {
        Command::RcsSweep => rcs_sweep(&file, out)?,
        Command::Microdoppler => microdoppler(&file, out, preset)?,
        Command::Simulate => simulate(&file, &scenario, out, preset, messages)?,
        Command::Validate => unreachable!("handled above"),
    };
    let manifest = write_manifest(out, files)?;
    messages.push(format!(
        "wrote {} artifacts and {}",
        manifest.len(),
        out.join(MANIFEST_NAME).display()
    ));
    Ok(manifest)
}

fn rt(e: Error) -> Failure {
    Failure::Runtime(e.into())
}

fn rcs_sweep(file: &ScenarioFile, out: &Path) -> Result<Vec<String>, Failure> {
    let sweep = file
        .rcs_sweep
        .as_ref()
        .ok_or_else(|| invalid("the scenario has no [rcs_sweep] section"))?;
    let shape = sweep.primitive().map_err(invalid)?;
    let angles = sweep.angles_deg().map_err(invalid)?;
    let mut files = Vec::new();
    for &d in &sweep.distances_m {
        let (_, samples) = monostatic_sweep(&shape, file.wavelength(), d, &angles, sweep.aggregation)
            .map_err(|e| invalid(format!("distance {d} m: {e}")))?;
        let decomposition = decompose_sweep(&samples).map_err(rt)?;
        let name = format!("rcs_sweep_{d}m.csv");
        export::write_rcs_sweep(&out.join(&name), &samples, &decomposition).map_err(rt)?;
        files.push(name);
    }
    Ok(files)
}

fn microdoppler(file: &ScenarioFile, out: &Path, preset: Option<Preset>) -> Result<Vec<String>, Failure> {
    let md = &file.microdoppler;
    let wavelength = file.wavelength();
    let orientations: Vec<f64> = match preset {
        Some(Preset::Fig3) => vec![0.0],
        Some(Preset::Fig5) => vec![0.0, 30.0, 60.0, 90.0],
        _ => md.orientations_deg.clone(),
    };
    let mut files = Vec::new();

    if preset != Some(Preset::Fig5) {
        let arm = md.arm_swing.clone();
        let radar = vec3(arm.radar_position);
        let body = vec3(arm.body_position);
        let n = (arm.duration_s * arm.sample_rate_hz).round() as usize;
        let rows = (0..n)
            .map(|i| {
                let t = i as f64 / arm.sample_rate_hz;
                let [l, r] = arm_swing_states(t, arm.period_s, arm.peak_speed_mps, arm.orientation_rad, &body)?;
                let mut row = vec![t];
                for s in [l, r] {
                    let los = s.position - radar;
                    row.push(los.norm());
                    row.push(s.velocity.dot(&los.normalize()));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, Error>>()
            .map_err(invalid)?;
        let name = "velocity_distance.csv".to_string();
        export::write_table(
            &out.join(&name),
            &["time_s", "left_range_m", "left_velocity_mps", "right_range_m", "right_velocity_mps"],
            rows,
        )
        .map_err(rt)?;
        files.push(name);
    }

    for o in orientations {
        let cfg = isac_chansim::microdoppler::ArmSwingConfig {
            orientation_rad: o.to_radians(),
            ..md.arm_swing.clone()
        };
        let iq = simulate_arm_swing(&cfg, wavelength).map_err(invalid)?;
        let spec = spectrogram(&iq, cfg.sample_rate_hz, md.window_len, md.hop).map_err(invalid)?;
        let stem = format!("spectrogram_{o}deg");
        export::write_spectrogram_csv(&out.join(format!("{stem}.csv")), &spec).map_err(rt)?;
        export::write_spectrogram_pgm(&out.join(format!("{stem}.pgm")), &spec).map_err(rt)?;
        files.push(format!("{stem}.csv"));
        files.push(format!("{stem}.pgm"));
    }
    Ok(files)
}

fn simulate(
    file: &ScenarioFile,
    scenario: &isac_chansim::scenario::Scenario,
    out: &Path,
    preset: Option<Preset>,
    messages: &mut Vec<String>,
) -> Result<Vec<String>, Failure> {
    let detection = file.simulate.detection();
    let first = run_trial(scenario, &file.channel, &file.ofdm, &detection, 0).map_err(rt)?;
    let mut files = Vec::new();
    for (stem, map) in [("dd_pre_notch", &first.pre_notch), ("dd_post_notch", &first.post_notch)] {
        export::write_delay_doppler_csv(&out.join(format!("{stem}.csv")), map).map_err(rt)?;
        export::write_delay_doppler_pgm(&out.join(format!("{stem}.pgm")), map).map_err(rt)?;
        files.push(format!("{stem}.csv"));
        files.push(format!("{stem}.pgm"));
    }
    let monostatic = scenario.mode.is_monostatic();
    if let Some(top) = first.detections.first() {
        let (a, b) = to_range_velocity(top, &file.ofdm, monostatic).pair();
        messages.push(format!(
            "trial 0 peak: delay bin {}, Doppler bin {} ({} {:.3}, {} {:.3})",
            top.delay_bin,
            top.doppler_bin,
            if monostatic { "range_m" } else { "path_m" },
            a,
            if monostatic { "velocity_mps" } else { "doppler_hz" },
            b
        ));
    }
    if preset == Some(Preset::Fig4) {
        return Ok(files);
    }

    let dets: Vec<_> = first
        .detections
        .iter()
        .map(|d| (*d, to_range_velocity(d, &file.ofdm, monostatic)))
        .collect();
    export::write_detections(&out.join("detections.csv"), &dets).map_err(rt)?;
    files.push("detections.csv".into());
    export::write_realization_csv(&out.join("realization.csv"), &first.realization.total()).map_err(rt)?;
    files.push("realization.csv".into());

    if file.simulate.trials > 1 {
        let rows = monte_carlo(scenario, &file.channel, &file.ofdm, &detection, file.simulate.trials, |r| {
            let d = r.detections.first();
            vec![
                r.trial as f64,
                d.map_or(f64::NAN, |d| d.delay_bin as f64),
                d.map_or(f64::NAN, |d| d.doppler_bin as f64),
                d.map_or(f64::NAN, |d| d.delay_s),
                d.map_or(f64::NAN, |d| d.doppler_hz),
                d.map_or(f64::NAN, |d| d.power_db),
            ]
        })
        .map_err(rt)?;
        export::write_table(
            &out.join("trials.csv"),
            &["trial", "delay_bin", "doppler_bin", "delay_s", "doppler_hz", "power_db"],
            rows,
        )
        .map_err(rt)?;
        files.push("trials.csv".into());
    }
    Ok(files)
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hashes the files, sorts them by path and writes `manifest.tsv`.
fn write_manifest(out: &Path, mut files: Vec<String>) -> anyhow::Result<Vec<ManifestEntry>> {
    files.sort();
    files.dedup();
    let entries = files
        .into_iter()
        .map(|path| {
            let sha256 = sha256_file(&out.join(&path))?;
            Ok(ManifestEntry { path, sha256 })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let text: String = entries.iter().map(|e| format!("{}\t{}\n", e.path, e.sha256)).collect();
    let path = out.join(MANIFEST_NAME);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(entries)
}

/// Worker count from `ISAC_CHANSIM_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("ISAC_CHANSIM_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("ISAC_CHANSIM_THREADS must be a positive integer, got `{v}`")),
        },
    }
}
