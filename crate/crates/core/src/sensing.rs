//! OFDM link-level sensing: pilots, noisy echoes, CSI estimation,
//! delay-Doppler maps, zero-Doppler notch, peak detection and conversion to
//! range and velocity.
//!
//! One sensing symbol is sent per pulse repetition interval, so the channel
//! is sampled once per PRI. Subcarrier `k` and repetition `m` index the CSI
//! grid; the delay axis comes from an inverse DFT over `k` and the Doppler
//! axis from a forward DFT over `m`, both orthonormal.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams, ChannelRealization};
use crate::microdoppler::hann;
use crate::scenario::Scenario;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Taper applied along both axes before the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmConfig {
    pub carrier_hz: f64,
    pub scs_hz: f64,
    pub n_sc: usize,
    /// PRI length in OFDM symbols, cyclic prefix included.
    pub pri_symbols: u32,
    pub n_reps: usize,
    /// Infinite disables noise.
    pub snr_db: f64,
    pub window: Window,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        OfdmConfig {
            carrier_hz: 3.5e9,
            scs_hz: 30e3,
            n_sc: 600,
            pri_symbols: 14,
            n_reps: 50,
            snr_db: 30.0,
            window: Window::Rectangular,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0 && self.scs_hz > 0.0) {
            return Err(Error::invalid("carrier and subcarrier spacing must be positive"));
        }
        if self.n_sc == 0 || self.n_reps == 0 || self.pri_symbols == 0 {
            return Err(Error::invalid("n_sc, n_reps and pri_symbols must be at least 1"));
        }
        if self.snr_db.is_nan() {
            return Err(Error::invalid("snr_db is NaN"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        crate::wavelength(self.carrier_hz)
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.n_sc as f64 * self.scs_hz
    }

    /// Average OFDM symbol duration with cyclic prefix: a 14-symbol slot lasts
    /// `1 ms · 15 kHz / scs`.
    pub fn symbol_duration_s(&self) -> f64 {
        1e-3 * 15e3 / self.scs_hz / 14.0
    }

    pub fn pri_s(&self) -> f64 {
        f64::from(self.pri_symbols) * self.symbol_duration_s()
    }

    pub fn prf_hz(&self) -> f64 {
        1.0 / self.pri_s()
    }

    pub fn delay_resolution_s(&self) -> f64 {
        1.0 / self.bandwidth_hz()
    }

    pub fn doppler_resolution_hz(&self) -> f64 {
        self.prf_hz() / self.n_reps as f64
    }

    /// Signed Doppler bin index of map column `col`.
    pub fn doppler_bin_of_column(&self, col: usize) -> i64 {
        col as i64 - (self.n_reps / 2) as i64
    }

    /// Map column holding a signed Doppler bin, wrapping around the span.
    pub fn column_of_doppler_bin(&self, bin: i64) -> usize {
        let n = self.n_reps as i64;
        (bin + n / 2).rem_euclid(n) as usize
    }
}

/// Unit-modulus QPSK pilot, deterministic in `seed`.
pub fn make_pilot(n_sc: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sc)
        .map(|_| {
            let re = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            Complex64::new(re, im)
        })
        .collect()
}

fn check_dims(h: &Array2<Complex64>, pilot: &[Complex64]) -> Result<()> {
    if h.nrows() != pilot.len() {
        return Err(Error::invalid(format!(
            "channel has {} subcarriers but the pilot has {}",
            h.nrows(),
            pilot.len()
        )));
    }
    Ok(())
}

/// `Y = H·X + w` with the noise variance set from the mean received signal
/// power and `snr_db`. An infinite SNR gives `Y = H·X` exactly.
pub fn simulate_echo<R: Rng + ?Sized>(
    h: &Array2<Complex64>,
    pilot: &[Complex64],
    snr_db: f64,
    rng: &mut R,
) -> Result<Array2<Complex64>> {
    check_dims(h, pilot)?;
    let mut y = h * &pilot_column(pilot);
    if snr_db.is_finite() {
        let power = y.iter().map(Complex64::norm_sqr).sum::<f64>() / y.len().max(1) as f64;
        add_noise(&mut y, power / 10f64.powf(snr_db / 10.0), rng)?;
    }
    Ok(y)
}

/// `Y = H·X + w` with an explicit per-sample noise variance.
pub fn simulate_echo_with_noise_variance<R: Rng + ?Sized>(
    h: &Array2<Complex64>,
    pilot: &[Complex64],
    noise_variance: f64,
    rng: &mut R,
) -> Result<Array2<Complex64>> {
    check_dims(h, pilot)?;
    let mut y = h * &pilot_column(pilot);
    add_noise(&mut y, noise_variance, rng)?;
    Ok(y)
}

fn pilot_column(pilot: &[Complex64]) -> Array2<Complex64> {
    Array2::from_shape_fn((pilot.len(), 1), |(k, _)| pilot[k])
}

fn add_noise<R: Rng + ?Sized>(y: &mut Array2<Complex64>, variance: f64, rng: &mut R) -> Result<()> {
    if variance == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, (variance / 2.0).sqrt())
        .map_err(|e| Error::invalid(format!("noise variance {variance}: {e}")))?;
    for v in y.iter_mut() {
        *v += Complex64::new(normal.sample(rng), normal.sample(rng));
    }
    Ok(())
}

/// Least-squares CSI, `Ĥ[k][m] = Y[k][m] / X[k]`.
pub fn estimate_csi(echo: &Array2<Complex64>, pilot: &[Complex64]) -> Result<Array2<Complex64>> {
    check_dims(echo, pilot)?;
    if let Some(k) = pilot.iter().position(|x| x.norm_sqr() == 0.0) {
        return Err(Error::invalid(format!("pilot element {k} is zero")));
    }
    Ok(echo / &pilot_column(pilot))
}

/// Per-subcarrier slow-time mean removal; zeroes the DC Doppler bin exactly.
pub fn notch_zero_doppler(csi: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    if csi.ncols() < 2 {
        return Err(Error::invalid("the notch needs at least two repetitions"));
    }
    let mean = csi
        .mean_axis(Axis(1))
        .expect("non-empty slow-time axis")
        .insert_axis(Axis(1));
    Ok(csi - &mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerMap {
    /// `magnitudes[[delay_bin, doppler_column]]`, linear.
    pub magnitudes: Array2<f64>,
    /// Delay of each row, s.
    pub delay_axis_s: Vec<f64>,
    /// Doppler of each column, ascending and centred on 0 Hz.
    pub doppler_axis_hz: Vec<f64>,
}

impl DelayDopplerMap {
    pub fn energy(&self) -> f64 {
        self.magnitudes.iter().map(|m| m * m).sum()
    }

    /// Column of the 0 Hz bin.
    pub fn dc_column(&self) -> usize {
        self.doppler_axis_hz.len() / 2
    }

    /// `(row, column, magnitude)` of the largest cell.
    pub fn global_peak(&self) -> (usize, usize, f64) {
        self.magnitudes
            .indexed_iter()
            .fold((0, 0, f64::MIN), |best, ((r, c), &m)| if m > best.2 { (r, c, m) } else { best })
    }

    /// Fraction of the map energy within `half_width` Doppler bins of DC.
    pub fn energy_fraction_near_dc(&self, half_width: usize) -> f64 {
        let total = self.energy();
        if total == 0.0 {
            return 0.0;
        }
        let n = self.doppler_axis_hz.len() as i64;
        let dc = self.dc_column() as i64;
        let w = half_width as i64;
        let near: f64 = (-w..=w)
            .map(|o| (dc + o).rem_euclid(n) as usize)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|c| self.magnitudes.column(c).iter().map(|m| m * m).sum::<f64>())
            .sum();
        near / total
    }
}

/// Orthonormal delay-Doppler transform of a CSI grid.
pub fn delay_doppler(csi: &Array2<Complex64>, cfg: &OfdmConfig) -> Result<DelayDopplerMap> {
    let (n_sc, n_reps) = csi.dim();
    if n_sc == 0 || n_reps == 0 {
        return Err(Error::invalid("empty CSI grid"));
    }
    if csi.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("CSI contains non-finite values"));
    }
    let mut grid = csi.to_owned();
    if cfg.window == Window::Hann {
        let wk = hann(n_sc);
        let wm = hann(n_reps);
        grid.indexed_iter_mut().for_each(|((k, m), v)| *v *= wk[k] * wm[m]);
    }

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n_sc);
    let fft = planner.plan_fft_forward(n_reps);
    let scale = 1.0 / ((n_sc * n_reps) as f64).sqrt();

    let mut buf = vec![Complex64::new(0.0, 0.0); n_sc.max(n_reps)];
    for mut col in grid.columns_mut() {
        let b = &mut buf[..n_sc];
        b.iter_mut().zip(col.iter()).for_each(|(b, v)| *b = *v);
        ifft.process(b);
        col.iter_mut().zip(b.iter()).for_each(|(v, b)| *v = *b);
    }
    let half = n_reps / 2;
    let mut magnitudes = Array2::zeros((n_sc, n_reps));
    for (i, row) in grid.rows().into_iter().enumerate() {
        let b = &mut buf[..n_reps];
        b.iter_mut().zip(row.iter()).for_each(|(b, v)| *b = *v);
        fft.process(b);
        for (c, out) in magnitudes.row_mut(i).iter_mut().enumerate() {
            *out = b[(c + n_reps - half) % n_reps].norm() * scale;
        }
    }

    let dres = 1.0 / (n_sc as f64 * cfg.scs_hz);
    let fres = cfg.prf_hz() / n_reps as f64;
    Ok(DelayDopplerMap {
        magnitudes,
        delay_axis_s: (0..n_sc).map(|i| i as f64 * dres).collect(),
        doppler_axis_hz: (0..n_reps).map(|c| (c as f64 - half as f64) * fres).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub delay_bin: usize,
    /// Signed bin, 0 at DC.
    pub doppler_bin: i64,
    pub delay_s: f64,
    pub doppler_hz: f64,
    /// `20·log10` of the cell magnitude.
    pub power_db: f64,
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Local maxima within `threshold_db_below_max` of the global peak, thinned
/// so no two detections lie within `guard_bins` of each other (Chebyshev
/// distance, both axes circular). Strongest first.
pub fn detect_peaks(map: &DelayDopplerMap, threshold_db_below_max: f64, guard_bins: usize) -> Result<Vec<Detection>> {
    let (rows, cols) = map.magnitudes.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("empty delay-Doppler map"));
    }
    let (_, _, peak) = map.global_peak();
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let floor = peak * 10f64.powf(-threshold_db_below_max / 20.0);
    let m = &map.magnitudes;
    let mut candidates: Vec<(usize, usize, f64)> = m
        .indexed_iter()
        .filter(|(_, &v)| v >= floor && v > 0.0)
        .filter(|&((r, c), &v)| {
            [-1i64, 0, 1].iter().all(|&dr| {
                [-1i64, 0, 1].iter().all(|&dc| {
                    let rr = (r as i64 + dr).rem_euclid(rows as i64) as usize;
                    let cc = (c as i64 + dc).rem_euclid(cols as i64) as usize;
                    m[[rr, cc]] <= v
                })
            })
        })
        .map(|((r, c), &v)| (r, c, v))
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let half = (cols / 2) as i64;
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for cand in candidates {
        let clear = kept.iter().all(|k| {
            circular_distance(k.0, cand.0, rows).max(circular_distance(k.1, cand.1, cols)) > guard_bins
        });
        if clear {
            kept.push(cand);
        }
    }
    Ok(kept
        .into_iter()
        .map(|(r, c, v)| Detection {
            delay_bin: r,
            doppler_bin: c as i64 - half,
            delay_s: map.delay_axis_s[r],
            doppler_hz: map.doppler_axis_hz[c],
            power_db: 20.0 * v.log10(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kinematics {
    /// Approaching targets have negative velocity.
    Monostatic { range_m: f64, velocity_mps: f64 },
    /// Bistatic geometry gives the total Tx→target→Rx length and the raw
    /// Doppler shift.
    Bistatic { path_length_m: f64, doppler_hz: f64 },
}

pub fn to_range_velocity(det: &Detection, cfg: &OfdmConfig, monostatic: bool) -> Kinematics {
    if monostatic {
        Kinematics::Monostatic {
            range_m: SPEED_OF_LIGHT * det.delay_s / 2.0,
            velocity_mps: det.doppler_hz * cfg.wavelength() / 2.0,
        }
    } else {
        Kinematics::Bistatic {
            path_length_m: SPEED_OF_LIGHT * det.delay_s,
            doppler_hz: det.doppler_hz,
        }
    }
}

impl Kinematics {
    /// `(range or path length, velocity or Doppler)`.
    pub fn pair(&self) -> (f64, f64) {
        match *self {
            Kinematics::Monostatic { range_m, velocity_mps } => (range_m, velocity_mps),
            Kinematics::Bistatic {
                path_length_m,
                doppler_hz,
            } => (path_length_m, doppler_hz),
        }
    }
}

/// Detection settings for the link-level pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub threshold_db: f64,
    pub guard_bins: usize,
    pub max_detections: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            threshold_db: 20.0,
            guard_bins: 2,
            max_detections: 8,
        }
    }
}

/// Output of one pipeline run.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: u64,
    pub realization: ChannelRealization,
    pub csi: Array2<Complex64>,
    pub pre_notch: DelayDopplerMap,
    pub post_notch: DelayDopplerMap,
    pub detections: Vec<Detection>,
}

/// RNG for trial `trial` of a run seeded with `seed`: one ChaCha stream per
/// trial so trials are independent of scheduling order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Realization, noisy echo, CSI, both maps and detections for one trial.
pub fn run_trial(
    scenario: &Scenario,
    params: &ChannelParams,
    ofdm: &OfdmConfig,
    detection: &DetectionConfig,
    trial: u64,
) -> Result<TrialResult> {
    ofdm.validate()?;
    let mut rng = trial_rng(scenario.seed, trial);
    let realization = channel::realize(scenario, params, ofdm, &mut rng)?;
    let pilot = make_pilot(ofdm.n_sc, scenario.seed);
    let echo = simulate_echo(&realization.total(), &pilot, ofdm.snr_db, &mut rng)?;
    let csi = estimate_csi(&echo, &pilot)?;
    let pre_notch = delay_doppler(&csi, ofdm)?;
    let post_notch = delay_doppler(&notch_zero_doppler(&csi)?, ofdm)?;
    let mut detections = detect_peaks(&post_notch, detection.threshold_db, detection.guard_bins)?;
    detections.truncate(detection.max_detections);
    Ok(TrialResult {
        trial,
        realization,
        csi,
        pre_notch,
        post_notch,
        detections,
    })
}

/// Runs `n_trials` independent trials in parallel and maps each through
/// `summarize`, keeping results in trial order.
pub fn monte_carlo<T, F>(
    scenario: &Scenario,
    params: &ChannelParams,
    ofdm: &OfdmConfig,
    detection: &DetectionConfig,
    n_trials: u64,
    summarize: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(TrialResult) -> T + Sync,
{
    (0..n_trials)
        .into_par_iter()
        .map(|i| run_trial(scenario, params, ofdm, detection, i).map(&summarize))
        .collect()
}

/// Phase ramp `exp(-j2π·k·Δf·τ)·exp(j2π·f_d·m·T)` over the grid.
pub fn single_path_csi(cfg: &OfdmConfig, delay_s: f64, doppler_hz: f64) -> Array2<Complex64> {
    let pri = cfg.pri_s();
    Array2::from_shape_fn((cfg.n_sc, cfg.n_reps), |(k, m)| {
        let phase = -2.0 * PI * k as f64 * cfg.scs_hz * delay_s + 2.0 * PI * doppler_hz * m as f64 * pri;
        Complex64::from_polar(1.0, phase)
    })
}
