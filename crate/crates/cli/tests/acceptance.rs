//! One test per acceptance criterion. Each prints a `criterion N: PASS|FAIL`
//! line straight to stdout (bypassing the harness capture) before asserting,
//! so `cargo test --test acceptance` shows the full table even on failure.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use isac_chansim::config::ScenarioFile;
use isac_chansim::geometry::{facing_axis, vec3};
use isac_chansim::microdoppler::{geometry_factor, simulate_arm_swing, spectrogram, ArmSwingConfig, MicroMotionProfile};
use isac_chansim::rcs::{
    far_field_distance, object_rcs, plane_wave_valid, plate_grid, Aggregation, PrimitiveShape, ShapeKind,
};
use isac_chansim::scenario::{los_state, LinkState, LosModel, Scenario};
use isac_chansim::sensing::{
    delay_doppler, monte_carlo, notch_zero_doppler, run_trial, single_path_csi, trial_rng, DelayDopplerMap,
    DetectionConfig, OfdmConfig,
};
use isac_chansim::wavelength;
use isac_chansim_cli::TABLE1_SCENARIO;

const PLATE_GRID_TOL_DB: f64 = 0.5;
const FAR_FIELD_STEP_M: f64 = 1e-9;
const TABLE1_TRIALS: u64 = 100;
const TABLE1_MIN_HITS: usize = 99;
const TABLE1_BUDGET: Duration = Duration::from_secs(10);
/// "Exactly zero" relative to the pre-notch peak magnitude.
const NOTCH_DC_REL: f64 = 1e-12;
const NOTCH_STATIC_RESIDUAL: f64 = 1e-6;
const NOTCH_TARGET_LOSS_DB: f64 = 1.0;
const BACKGROUND_NEAR_DC_FRACTION: f64 = 0.9;
const SEPARABILITY_MAX_CORRELATION: f64 = 0.9;
const SEPARABILITY_SEEDS: u64 = 20;
const ARM_PEAK_REL_TOL: f64 = 0.10;
const ARM_BROADSIDE_MAX_RATIO: f64 = 0.20;
const ARM_PERIOD_S: f64 = 1.0;
const ARM_PERIOD_TOL_S: f64 = 0.1;
const PARSEVAL_REL_TOL: f64 = 1e-9;
const LOS_DRAWS: u64 = 100_000;
const LOS_FRACTION_TOL: f64 = 0.01;

fn report(n: u32, pass: bool, detail: impl AsRef<str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n}: {verdict} {}", detail.as_ref()).unwrap();
    out.flush().unwrap();
}

fn table1() -> (ScenarioFile, Scenario) {
    let file = ScenarioFile::from_toml_str(TABLE1_SCENARIO, &[]).unwrap();
    let scenario = file.to_scenario().unwrap();
    (file, scenario)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn row_peak(map: &DelayDopplerMap, row: usize) -> f64 {
    map.magnitudes.row(row).iter().fold(0.0f64, |m, v| m.max(*v))
}

#[test]
fn criterion_01_segmented_plate_matches_closed_form() {
    let lambda = 0.0857;
    let range = 100.0;
    let plate = PrimitiveShape::pec(ShapeKind::RectangularPlate { a_m: 1.0, b_m: 1.0 }).unwrap();
    // Physical optics at broadside: 4π·A²/λ².
    let closed_form = 4.0 * std::f64::consts::PI * 1.0 / (lambda * lambda);
    let sensor = vec3([0.0, 0.0, range]);

    let mut errors = Vec::new();
    for n in [2, 3, 4] {
        let obj = plate_grid(&plate, n, n).unwrap();
        let sigma = object_rcs(&obj, &sensor, &sensor, lambda, Aggregation::Coherent).unwrap();
        errors.push((n, db(sigma / closed_form)));
    }
    let pass = errors.iter().all(|(_, e)| e.abs() <= PLATE_GRID_TOL_DB);
    let detail: Vec<_> = errors.iter().map(|(n, e)| format!("{n}x{n} {e:+.4} dB")).collect();
    report(1, pass, format!("{} (tol {PLATE_GRID_TOL_DB} dB)", detail.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_02_far_field_threshold_is_exact() {
    let pairs = [(1.0, 0.0857), (0.5, 0.0857), (2.0, 0.01), (0.3, 0.1), (10.0, 0.005)];
    let mut failures = Vec::new();
    for (d, lambda) in pairs {
        let r = 2.0 * d * d / lambda;
        assert_eq!(far_field_distance(d, lambda).unwrap(), r);
        let below = plane_wave_valid(r - FAR_FIELD_STEP_M, r - FAR_FIELD_STEP_M, d, lambda).unwrap();
        let above = plane_wave_valid(r + FAR_FIELD_STEP_M, r + FAR_FIELD_STEP_M, d, lambda).unwrap();
        if below || !above {
            failures.push(format!("D={d} λ={lambda}"));
        }
    }
    let pass = failures.is_empty();
    report(
        2,
        pass,
        format!("{} pairs at ±{FAR_FIELD_STEP_M} m, wrong side: {:?}", pairs.len(), failures),
    );
    assert!(pass);
}

fn circular_offset(a: i64, b: i64, n: i64) -> i64 {
    let d = (a - b).rem_euclid(n);
    d.min(n - d)
}

#[test]
fn criterion_03_table1_peak_bins() {
    let (file, scenario) = table1();
    let ofdm = file.ofdm;
    let n_cols = ofdm.n_reps as i64;
    let expected_doppler = 2.0 * (150.0 / 3.6) / ofdm.wavelength();
    let expected_doppler_bin = (expected_doppler / ofdm.doppler_resolution_hz()).round() as i64;
    let expected_delay_bin = (2.0 * 100.0 / isac_chansim::SPEED_OF_LIGHT * ofdm.bandwidth_hz()).round() as i64;
    assert_eq!(expected_doppler_bin, 24);

    let start = Instant::now();
    let peaks = monte_carlo(
        &scenario,
        &file.channel,
        &ofdm,
        &DetectionConfig::default(),
        TABLE1_TRIALS,
        |r| {
            let (row, col, _) = r.post_notch.global_peak();
            (row as i64, ofdm.doppler_bin_of_column(col))
        },
    )
    .unwrap();
    let elapsed = start.elapsed();

    let hits = peaks
        .iter()
        .filter(|(row, bin)| {
            (row - expected_delay_bin).abs() <= 1 && circular_offset(*bin, expected_doppler_bin, n_cols) <= 1
        })
        .count();
    let pass = hits >= TABLE1_MIN_HITS && elapsed < TABLE1_BUDGET;
    report(
        3,
        pass,
        format!(
            "{hits}/{TABLE1_TRIALS} trials at delay bin {expected_delay_bin}±1, Doppler bin {expected_doppler_bin}±1 \
             ({expected_doppler:.1} Hz), {:.2} s (budget {} s)",
            elapsed.as_secs_f64(),
            TABLE1_BUDGET.as_secs()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_notch() {
    let (mut file, _) = table1();
    let ofdm = file.ofdm;

    // DC column of the post-notch map of a noisy reference-scene trial.
    let (_, scenario) = table1();
    let trial = run_trial(&scenario, &file.channel, &ofdm, &DetectionConfig::default(), 0).unwrap();
    let dc = trial.post_notch.dc_column();
    let dc_max = trial.post_notch.magnitudes.column(dc).iter().fold(0.0f64, |m, v| m.max(*v));
    let dc_rel = dc_max / trial.pre_notch.global_peak().2;

    // Noiseless scene with only static clusters.
    file.targets.clear();
    file.ofdm.snr_db = f64::INFINITY;
    let static_scene = file.to_scenario().unwrap();
    let t = run_trial(&static_scene, &file.channel, &file.ofdm, &DetectionConfig::default(), 0).unwrap();
    let residual = t.post_notch.energy() / t.pre_notch.energy();

    // Single off-grid tones at least five bins from DC.
    let mut worst_loss = 0.0f64;
    for bins in [5.0, 5.4, 12.5, 24.3, -7.7] {
        let csi = single_path_csi(&ofdm, 12.0 / ofdm.bandwidth_hz(), bins * ofdm.doppler_resolution_hz());
        let pre = delay_doppler(&csi, &ofdm).unwrap();
        let post = delay_doppler(&notch_zero_doppler(&csi).unwrap(), &ofdm).unwrap();
        let (row, _, pre_peak) = pre.global_peak();
        let loss = 20.0 * (pre_peak / row_peak(&post, row)).log10();
        worst_loss = worst_loss.max(loss);
    }

    let pass = dc_rel <= NOTCH_DC_REL && residual < NOTCH_STATIC_RESIDUAL && worst_loss < NOTCH_TARGET_LOSS_DB;
    report(
        4,
        pass,
        format!(
            "DC column max / pre-notch peak {dc_rel:.2e} (≤ {NOTCH_DC_REL:e}), static residual {residual:.3e} (< {NOTCH_STATIC_RESIDUAL:e}), \
             worst target loss {worst_loss:.4} dB (< {NOTCH_TARGET_LOSS_DB} dB)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_background_energy_near_dc() {
    let (file, scenario) = table1();
    let mut worst = 1.0f64;
    for trial in 0..10 {
        let r = run_trial(&scenario, &file.channel, &file.ofdm, &DetectionConfig::default(), trial).unwrap();
        let map = delay_doppler(&r.realization.background, &file.ofdm).unwrap();
        worst = worst.min(map.energy_fraction_near_dc(1));
    }
    let pass = worst >= BACKGROUND_NEAR_DC_FRACTION;
    report(
        5,
        pass,
        format!("lowest background energy fraction within ±1 bin of DC over 10 trials {worst:.6} (≥ {BACKGROUND_NEAR_DC_FRACTION})"),
    );
    assert!(pass);
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn criterion_06_micro_modes_are_separable() {
    let (file, cosine_scene) = table1();
    let mut sawtooth_scene = cosine_scene.clone();
    sawtooth_scene.targets[0].micro_motion = MicroMotionProfile::Sawtooth {
        peak_doppler_hz: 30.0,
        period_s: 0.025,
        phase_rad: 0.0,
    };
    let detection = DetectionConfig::default();
    let mut total = 0.0;
    for trial in 0..SEPARABILITY_SEEDS {
        let a = run_trial(&cosine_scene, &file.channel, &file.ofdm, &detection, trial).unwrap();
        let b = run_trial(&sawtooth_scene, &file.channel, &file.ofdm, &detection, trial).unwrap();
        let (delay_bin, _) = a.realization.links[0].expected_bins(&file.ofdm);
        let row = delay_bin.round() as usize;
        let sa: Vec<f64> = a.post_notch.magnitudes.row(row).to_vec();
        let sb: Vec<f64> = b.post_notch.magnitudes.row(row).to_vec();
        total += cosine(&sa, &sb);
    }
    let mean = total / SEPARABILITY_SEEDS as f64;
    let pass = mean < SEPARABILITY_MAX_CORRELATION;
    report(
        6,
        pass,
        format!(
            "mean normalized correlation of target-row Doppler spectra over {SEPARABILITY_SEEDS} seeds \
             {mean:.4} (< {SEPARABILITY_MAX_CORRELATION})"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_arm_swing_signatures() {
    let lambda = wavelength(3.5e9);
    let base = ArmSwingConfig::default();
    let mut peaks = Vec::new();
    let mut periods = Vec::new();
    for deg in [0.0f64, 30.0, 60.0, 90.0] {
        let cfg = ArmSwingConfig {
            orientation_rad: deg.to_radians(),
            ..base.clone()
        };
        let iq = simulate_arm_swing(&cfg, lambda).unwrap();
        let spec = spectrogram(&iq, cfg.sample_rate_hz, 128, 8).unwrap();
        peaks.push(spec.peak_doppler_hz());
        periods.push(spec.dominant_period_s());
    }

    let los = vec3(base.body_position) - vec3(base.radar_position);
    let g = geometry_factor(&los, &los, &facing_axis(0.0));
    let expected = g * base.peak_speed_mps / lambda;
    let rel = (peaks[0] - expected).abs() / expected;
    let monotone = peaks.windows(2).all(|w| w[1] <= w[0]);
    let ratio = peaks[3] / peaks[0];
    let period0 = periods[0];
    let period_ok = period0.is_some_and(|p| (p - ARM_PERIOD_S).abs() <= ARM_PERIOD_TOL_S);

    let pass = rel <= ARM_PEAK_REL_TOL && monotone && ratio <= ARM_BROADSIDE_MAX_RATIO && period_ok;
    report(
        7,
        pass,
        format!(
            "peaks {:?} Hz, 0° expected {expected:.2} Hz (err {:.1}%), non-increasing {monotone}, \
             90°/0° {ratio:.3}, period at 0° {:?} s",
            peaks.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>(),
            rel * 100.0,
            period0
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_transform_correctness() {
    let (file, scenario) = table1();
    let ofdm = file.ofdm;
    let trial = run_trial(&scenario, &file.channel, &ofdm, &DetectionConfig::default(), 3).unwrap();
    let csi_energy: f64 = trial.csi.iter().map(|v| v.norm_sqr()).sum();
    let parseval = (trial.pre_notch.energy() - csi_energy).abs() / csi_energy;

    let cfg = OfdmConfig::default();
    let delay_bin = 10usize;
    let doppler_bin = 10i64;
    let csi = single_path_csi(&cfg, delay_bin as f64 / cfg.bandwidth_hz(), 400.0);
    let (row, col, _) = delay_doppler(&csi, &cfg).unwrap().global_peak();
    let exact = row == delay_bin && cfg.doppler_bin_of_column(col) == doppler_bin;

    let pass = parseval <= PARSEVAL_REL_TOL && exact;
    report(
        8,
        pass,
        format!(
            "Parseval relative error {parseval:.2e} (≤ {PARSEVAL_REL_TOL:e}); τ=10/18 MHz, f_d=400 Hz peak at \
             delay bin {row}, Doppler bin {}",
            cfg.doppler_bin_of_column(col)
        ),
    );
    assert!(pass);
}

fn simulate_manifest(out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_isac-chansim"))
        .args(["simulate", "--seed", "7", "--out"])
        .arg(out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join(isac_chansim_cli::MANIFEST_NAME)).unwrap()
}

#[test]
fn criterion_09_seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_manifest(&dir.path().join("a"));
    let b = simulate_manifest(&dir.path().join("b"));
    let pass = !a.is_empty() && a == b;
    report(
        9,
        pass,
        format!(
            "two `simulate --seed 7` manifests, {} entries each, identical {}",
            a.iter().filter(|&&c| c == b'\n').count(),
            a == b
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_los_fraction_at_d0() {
    let d0 = 50.0;
    let mut rng = trial_rng(2024, 0);
    let los = (0..LOS_DRAWS)
        .filter(|_| los_state(d0, LosModel::Exponential { d0_m: d0 }, &mut rng) == LinkState::Los)
        .count();
    let fraction = los as f64 / LOS_DRAWS as f64;
    let target = (-1.0f64).exp();
    let pass = (fraction - target).abs() <= LOS_FRACTION_TOL;
    report(
        10,
        pass,
        format!("LOS fraction {fraction:.4} over {LOS_DRAWS} draws, e⁻¹ = {target:.4} ± {LOS_FRACTION_TOL}"),
    );
    assert!(pass);
}
