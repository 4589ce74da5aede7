//! Fine-motion (micro-Doppler) models.
//!
//! A [`MicroMotionProfile`] describes the fine motion of a target on top of
//! its bulk velocity. Two families exist:
//!
//! - Doppler-specified profiles (`sinusoid`, `sawtooth`) give the
//!   instantaneous micro-Doppler frequency directly, in Hz.
//! - Kinematic profiles (`rotor`, `pendulum-arm`, `vital`) give a radial
//!   displacement in metres, turned into phase through `2π/λ` and the link
//!   geometry factor.
//!
//! Sign convention throughout the crate: a growing path length gives a
//! positive phase slope, so receding motion maps to positive Doppler.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::geometry::{facing_axis, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MicroMotionProfile {
    #[default]
    None,
    /// Cosine-shaped instantaneous frequency `peak·cos(2π·f·t + phase)`.
    Sinusoid {
        peak_doppler_hz: f64,
        mod_freq_hz: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// Rising ramp from `-peak` to `+peak` over each period, instantaneous
    /// flyback.
    Sawtooth {
        peak_doppler_hz: f64,
        period_s: f64,
        #[serde(default)]
        phase_rad: f64,
    },
    /// Tip of the reference blade of a rotor spinning in the radial plane.
    Rotor {
        n_blades: u32,
        blade_length_m: f64,
        rpm: f64,
    },
    /// Limb swinging sinusoidally along a horizontal axis rotated by
    /// `orientation_rad` away from the radial direction.
    PendulumArm {
        period_s: f64,
        peak_speed_mps: f64,
        #[serde(default)]
        orientation_rad: f64,
    },
    /// Chest displacement `A·sin(2π·rate·t)` (breathing, heartbeat).
    Vital { amp_displacement_m: f64, rate_hz: f64 },
}

impl MicroMotionProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be strictly positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be non-negative, got {v}")))
            }
        };
        match *self {
            MicroMotionProfile::None => Ok(()),
            MicroMotionProfile::Sinusoid {
                peak_doppler_hz,
                mod_freq_hz,
                ..
            } => {
                non_negative("peak_doppler_hz", peak_doppler_hz)?;
                positive("mod_freq_hz", mod_freq_hz)
            }
            MicroMotionProfile::Sawtooth {
                peak_doppler_hz,
                period_s,
                ..
            } => {
                non_negative("peak_doppler_hz", peak_doppler_hz)?;
                positive("period_s", period_s)
            }
            MicroMotionProfile::Rotor {
                n_blades,
                blade_length_m,
                rpm,
            } => {
                if n_blades == 0 {
                    return Err(Error::invalid("rotor needs at least one blade"));
                }
                non_negative("blade_length_m", blade_length_m)?;
                positive("rpm", rpm)
            }
            MicroMotionProfile::PendulumArm {
                period_s,
                peak_speed_mps,
                ..
            } => {
                positive("period_s", period_s)?;
                non_negative("peak_speed_mps", peak_speed_mps)
            }
            MicroMotionProfile::Vital {
                amp_displacement_m,
                rate_hz,
            } => {
                non_negative("amp_displacement_m", amp_displacement_m)?;
                positive("rate_hz", rate_hz)
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, MicroMotionProfile::None)
    }

    /// True for profiles given directly as a Doppler frequency.
    pub fn is_doppler_specified(&self) -> bool {
        matches!(
            self,
            MicroMotionProfile::Sinusoid { .. } | MicroMotionProfile::Sawtooth { .. }
        )
    }

    /// Radial displacement in metres. Zero for Doppler-specified profiles.
    pub fn displacement(&self, t: f64) -> f64 {
        match *self {
            MicroMotionProfile::Rotor {
                blade_length_m,
                rpm,
                ..
            } => blade_length_m * (rotor_rate(rpm) * t).cos(),
            MicroMotionProfile::PendulumArm {
                period_s,
                peak_speed_mps,
                orientation_rad,
            } => {
                let w = 2.0 * PI / period_s;
                -(peak_speed_mps / w) * (w * t).cos() * orientation_rad.cos()
            }
            MicroMotionProfile::Vital {
                amp_displacement_m,
                rate_hz,
            } => amp_displacement_m * (2.0 * PI * rate_hz * t).sin(),
            _ => 0.0,
        }
    }

    /// Displacement of blade `blade` of a rotor; other profiles ignore the
    /// index.
    pub fn blade_displacement(&self, blade: u32, t: f64) -> f64 {
        match *self {
            MicroMotionProfile::Rotor {
                n_blades,
                blade_length_m,
                rpm,
            } => {
                let offset = 2.0 * PI * f64::from(blade % n_blades) / f64::from(n_blades);
                blade_length_m * (rotor_rate(rpm) * t + offset).cos()
            }
            _ => self.displacement(t),
        }
    }

    /// Instantaneous radial rate scaled by `direction_factor`.
    ///
    /// Kinematic profiles return m/s. Doppler-specified profiles return the
    /// instantaneous micro-Doppler frequency in Hz, since they carry no
    /// wavelength of their own.
    pub fn radial_velocity(&self, t: f64, direction_factor: f64) -> f64 {
        let rate = match *self {
            MicroMotionProfile::None => 0.0,
            MicroMotionProfile::Sinusoid {
                peak_doppler_hz,
                mod_freq_hz,
                phase_rad,
            } => peak_doppler_hz * (2.0 * PI * mod_freq_hz * t + phase_rad).cos(),
            MicroMotionProfile::Sawtooth {
                peak_doppler_hz,
                period_s,
                phase_rad,
            } => peak_doppler_hz * (2.0 * ramp_fraction(t, period_s, phase_rad) - 1.0),
            MicroMotionProfile::Rotor {
                blade_length_m,
                rpm,
                ..
            } => {
                let w = rotor_rate(rpm);
                -blade_length_m * w * (w * t).sin()
            }
            MicroMotionProfile::PendulumArm {
                period_s,
                peak_speed_mps,
                orientation_rad,
            } => peak_speed_mps * (2.0 * PI * t / period_s).sin() * orientation_rad.cos(),
            MicroMotionProfile::Vital {
                amp_displacement_m,
                rate_hz,
            } => {
                let w = 2.0 * PI * rate_hz;
                amp_displacement_m * w * (w * t).cos()
            }
        };
        rate * direction_factor
    }

    /// Micro-Doppler phase at time `t`, radians.
    pub fn phase(&self, t: f64, wavelength: f64, geometry_factor: f64) -> f64 {
        match *self {
            MicroMotionProfile::None => 0.0,
            MicroMotionProfile::Sinusoid {
                peak_doppler_hz,
                mod_freq_hz,
                phase_rad,
            } => peak_doppler_hz / mod_freq_hz * (2.0 * PI * mod_freq_hz * t + phase_rad).sin(),
            MicroMotionProfile::Sawtooth {
                peak_doppler_hz,
                period_s,
                phase_rad,
            } => {
                let u = ramp_fraction(t, period_s, phase_rad);
                2.0 * PI * peak_doppler_hz * period_s * (u * u - u)
            }
            _ => 2.0 * PI / wavelength * geometry_factor * self.displacement(t),
        }
    }
}

fn rotor_rate(rpm: f64) -> f64 {
    2.0 * PI * rpm / 60.0
}

fn ramp_fraction(t: f64, period: f64, phase: f64) -> f64 {
    (t / period + phase / (2.0 * PI)).rem_euclid(1.0)
}

/// Uniformly sampled micro-Doppler phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub samples: Vec<f64>,
    pub sample_interval: f64,
}

impl PhaseSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Instantaneous frequency by forward difference, Hz.
    pub fn instantaneous_frequency(&self) -> Vec<f64> {
        self.samples
            .windows(2)
            .map(|w| (w[1] - w[0]) / (2.0 * PI * self.sample_interval))
            .collect()
    }
}

/// Samples the micro-Doppler phase at `t = i·dt` for `i = 0 .. floor(duration/dt)`.
///
/// `geometry_factor` is `|û_tx·m̂| + |û_rx·m̂|` for motion axis `m̂`; it is 2
/// for monostatic motion along boresight. Doppler-specified profiles ignore
/// it and the wavelength.
pub fn micro_phase_series(
    profile: &MicroMotionProfile,
    wavelength: f64,
    duration: f64,
    sample_interval: f64,
    geometry_factor: f64,
) -> Result<PhaseSeries> {
    if !(sample_interval > 0.0) {
        return Err(Error::invalid(format!(
            "sample interval must be positive, got {sample_interval}"
        )));
    }
    if !(wavelength > 0.0) {
        return Err(Error::invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if !(duration >= 0.0) {
        return Err(Error::invalid(format!("duration must be non-negative, got {duration}")));
    }
    profile.validate()?;
    let n = ((duration / sample_interval + 1e-9).floor() as usize).max(1);
    let samples = (0..n)
        .map(|i| profile.phase(i as f64 * sample_interval, wavelength, geometry_factor))
        .collect();
    Ok(PhaseSeries {
        samples,
        sample_interval,
    })
}

/// Sum of absolute projections of the motion axis on the two link
/// directions.
pub fn geometry_factor(u_tx: &Vec3, u_rx: &Vec3, motion_axis: &Vec3) -> f64 {
    let m = motion_axis.normalize();
    u_tx.normalize().dot(&m).abs() + u_rx.normalize().dot(&m).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScattererState {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Default half distance between the shoulders, m.
pub const SHOULDER_OFFSET_M: f64 = 0.2;

/// Left and right arm point scatterers swinging in anti-phase along the
/// body's facing axis, `[left, right]`.
///
/// The right arm starts fully back and advances first. Swing amplitude is
/// `peak_speed·period/2π`; shoulders sit [`SHOULDER_OFFSET_M`] either side of
/// `body_position`.
pub fn arm_swing_states(
    t: f64,
    period_s: f64,
    peak_speed_mps: f64,
    orientation_rad: f64,
    body_position: &Vec3,
) -> Result<[ScattererState; 2]> {
    if !(period_s > 0.0) {
        return Err(Error::invalid(format!("period must be positive, got {period_s}")));
    }
    let w = 2.0 * PI / period_s;
    let forward = facing_axis(orientation_rad);
    let left_side = facing_axis(orientation_rad + PI / 2.0);
    let amplitude = peak_speed_mps / w;
    let right_x = -amplitude * (w * t).cos();
    let right_v = peak_speed_mps * (w * t).sin();
    Ok([
        ScattererState {
            position: body_position + left_side * SHOULDER_OFFSET_M - forward * right_x,
            velocity: -forward * right_v,
        },
        ScattererState {
            position: body_position - left_side * SHOULDER_OFFSET_M + forward * right_x,
            velocity: forward * right_v,
        },
    ])
}

/// Monostatic arm-swing measurement setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmSwingConfig {
    pub period_s: f64,
    pub peak_speed_mps: f64,
    pub orientation_rad: f64,
    pub body_position: [f64; 3],
    pub radar_position: [f64; 3],
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Echo amplitude of the `[left, right]` arm. Unequal values keep the two
    /// arms distinguishable; equal arms give a magnitude spectrogram that
    /// repeats every half swing.
    pub arm_gains: [f64; 2],
}

impl Default for ArmSwingConfig {
    fn default() -> Self {
        ArmSwingConfig {
            period_s: 1.0,
            peak_speed_mps: 2.0,
            orientation_rad: 0.0,
            body_position: [3.0, 0.0, 0.0],
            radar_position: [0.0, 0.0, 0.0],
            sample_rate_hz: 1000.0,
            duration_s: 3.0,
            arm_gains: [1.0, 0.7],
        }
    }
}

/// Baseband echo of the two arms, `Σ g·exp(j·2π·2R(t)/λ)`.
pub fn simulate_arm_swing(cfg: &ArmSwingConfig, wavelength: f64) -> Result<Vec<Complex64>> {
    if !(cfg.sample_rate_hz > 0.0 && cfg.duration_s > 0.0 && wavelength > 0.0) {
        return Err(Error::invalid(
            "sample rate, duration and wavelength must be positive",
        ));
    }
    let radar = crate::geometry::vec3(cfg.radar_position);
    let body = crate::geometry::vec3(cfg.body_position);
    let n = (cfg.duration_s * cfg.sample_rate_hz).round() as usize;
    let k = 2.0 * PI / wavelength;
    (0..n)
        .map(|i| {
            let t = i as f64 / cfg.sample_rate_hz;
            let arms = arm_swing_states(t, cfg.period_s, cfg.peak_speed_mps, cfg.orientation_rad, &body)?;
            Ok(arms
                .iter()
                .zip(cfg.arm_gains)
                .map(|(arm, g)| Complex64::from_polar(g, k * 2.0 * (arm.position - radar).norm()))
                .sum())
        })
        .collect()
}

/// Short-time Fourier magnitudes with a centred frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// Frame centre times, s.
    pub times_s: Vec<f64>,
    /// Ascending, negative to positive, Hz.
    pub freqs_hz: Vec<f64>,
    /// `magnitudes[frame][freq]`.
    pub magnitudes: Vec<Vec<f64>>,
}

pub fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / (len - 1) as f64).cos()))
        .collect()
}

/// Hann-windowed STFT magnitudes.
pub fn spectrogram(iq: &[Complex64], sample_rate_hz: f64, window_len: usize, hop: usize) -> Result<Spectrogram> {
    if iq.is_empty() {
        return Err(Error::invalid("empty IQ series"));
    }
    if window_len == 0 || window_len > iq.len() {
        return Err(Error::invalid(format!(
            "window length {window_len} must be in 1..={}",
            iq.len()
        )));
    }
    if hop == 0 {
        return Err(Error::invalid("hop must be at least 1"));
    }
    if !(sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let window = hann(window_len);
    let fft = FftPlanner::new().plan_fft_forward(window_len);
    let half = window_len / 2;
    let freqs_hz = (0..window_len)
        .map(|i| (i as f64 - half as f64) * sample_rate_hz / window_len as f64)
        .collect();
    let mut times_s = Vec::new();
    let mut magnitudes = Vec::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    let mut start = 0;
    while start + window_len <= iq.len() {
        for (b, (x, w)) in buf.iter_mut().zip(iq[start..].iter().zip(&window)) {
            *b = x * w;
        }
        fft.process(&mut buf);
        // Rotate so index `half` holds 0 Hz.
        let row = (0..window_len)
            .map(|i| buf[(i + window_len - half) % window_len].norm())
            .collect();
        magnitudes.push(row);
        times_s.push((start as f64 + window_len as f64 / 2.0) / sample_rate_hz);
        start += hop;
    }
    Ok(Spectrogram {
        times_s,
        freqs_hz,
        magnitudes,
    })
}

impl Spectrogram {
    fn bin_width(&self) -> f64 {
        if self.freqs_hz.len() < 2 {
            0.0
        } else {
            self.freqs_hz[1] - self.freqs_hz[0]
        }
    }

    /// Frequency of the strongest bin in every frame, refined by a parabola
    /// through the log magnitudes of the neighbouring bins.
    pub fn peak_track(&self) -> Vec<f64> {
        let df = self.bin_width();
        self.magnitudes
            .iter()
            .map(|row| {
                let (i, _) = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
                let mut f = self.freqs_hz[i];
                if i > 0 && i + 1 < row.len() {
                    let (a, b, c) = (row[i - 1].max(1e-300).ln(), row[i].ln(), row[i + 1].max(1e-300).ln());
                    let denom = a - 2.0 * b + c;
                    if denom < 0.0 {
                        f += df * 0.5 * (a - c) / denom;
                    }
                }
                f
            })
            .collect()
    }

    /// Largest absolute frequency reached by the per-frame peak track, Hz.
    pub fn peak_doppler_hz(&self) -> f64 {
        self.peak_track().iter().fold(0.0, |m, f| m.max(f.abs()))
    }

    /// Per-frame energy at positive minus negative frequencies.
    pub fn doppler_balance(&self) -> Vec<f64> {
        self.magnitudes
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.freqs_hz)
                    .map(|(m, f)| m * m * f.signum() * (*f != 0.0) as u8 as f64)
                    .sum()
            })
            .collect()
    }

    /// Repetition period of the Doppler balance, from the first
    /// autocorrelation maximum after its first zero crossing. `None` when no
    /// such maximum exists within half the record.
    pub fn dominant_period_s(&self) -> Option<f64> {
        let series = self.doppler_balance();
        if self.times_s.len() < 4 {
            return None;
        }
        let frame_step = self.times_s[1] - self.times_s[0];
        let lag = autocorrelation_peak(&series)?;
        Some(lag as f64 * frame_step)
    }
}

/// Lag of the first autocorrelation maximum following the first zero
/// crossing, searched up to half the series length.
pub fn autocorrelation_peak(series: &[f64]) -> Option<usize> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let max_lag = n / 2;
    let r: Vec<f64> = (0..=max_lag)
        .map(|lag| {
            let s: f64 = x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            s / (n - lag) as f64
        })
        .collect();
    if r[0] <= 0.0 {
        return None;
    }
    let first_negative = r.iter().position(|v| *v < 0.0)?;
    (first_negative + 1..max_lag)
        .filter(|&l| r[l] >= r[l - 1] && r[l] >= r[l + 1] && r[l] > 0.0)
        .max_by(|&a, &b| r[a].total_cmp(&r[b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = 0.0857;

    #[test]
    fn none_profile_is_silent() {
        let p = MicroMotionProfile::None;
        for t in [0.0, 0.3, 7.1] {
            assert_eq!(p.radial_velocity(t, 1.0), 0.0);
        }
        let s = micro_phase_series(&p, LAMBDA, 1.0, 0.01, 2.0).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.samples.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pendulum_arm_extrema() {
        let p = MicroMotionProfile::PendulumArm {
            period_s: 1.0,
            peak_speed_mps: 2.0,
            orientation_rad: 0.0,
        };
        // Mid-swing at quarter periods.
        assert_relative_eq!(p.radial_velocity(0.25, 1.0), 2.0, max_relative = 1e-12);
        assert_relative_eq!(p.radial_velocity(0.75, 1.0), -2.0, max_relative = 1e-12);
        assert!(p.displacement(0.25).abs() < 1e-12);
        let side = MicroMotionProfile::PendulumArm {
            period_s: 1.0,
            peak_speed_mps: 2.0,
            orientation_rad: PI / 2.0,
        };
        for i in 0..20 {
            assert!(side.radial_velocity(i as f64 * 0.05, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kinematic_velocity_is_derivative_of_displacement() {
        let profiles = [
            MicroMotionProfile::Rotor { n_blades: 3, blade_length_m: 0.4, rpm: 600.0 },
            MicroMotionProfile::PendulumArm { period_s: 1.3, peak_speed_mps: 1.7, orientation_rad: 0.4 },
            MicroMotionProfile::Vital { amp_displacement_m: 0.004, rate_hz: 0.3 },
        ];
        let h = 1e-6;
        for p in profiles {
            for t in [0.01, 0.37, 1.9] {
                let fd = (p.displacement(t + h) - p.displacement(t - h)) / (2.0 * h);
                assert!((fd - p.radial_velocity(t, 1.0)).abs() < 1e-6, "{p:?} at {t}");
            }
        }
    }

    #[test]
    fn sinusoid_instantaneous_frequency_peaks_at_peak_doppler() {
        let p = MicroMotionProfile::Sinusoid { peak_doppler_hz: 50.0, mod_freq_hz: 10.0, phase_rad: 0.0 };
        let s = micro_phase_series(&p, LAMBDA, 0.2, 1e-5, 2.0).unwrap();
        let peak = s.instantaneous_frequency().iter().fold(0.0f64, |m, f| m.max(f.abs()));
        assert!((peak - 50.0).abs() < 0.01, "{peak}");
    }

    #[test]
    fn sawtooth_frequency_is_rising_ramp() {
        let p = MicroMotionProfile::Sawtooth { peak_doppler_hz: 30.0, period_s: 0.025, phase_rad: 0.0 };
        let s = micro_phase_series(&p, LAMBDA, 0.025, 1e-5, 2.0).unwrap();
        let f = s.instantaneous_frequency();
        assert!((f[0] + 30.0).abs() < 0.1);
        assert!((f[f.len() - 1] - 30.0).abs() < 0.1);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        // Phase is continuous across the flyback.
        assert!(p.phase(0.025 - 1e-9, LAMBDA, 2.0).abs() < 1e-5);
    }

    #[test]
    fn displacement_of_lambda_over_four_pi_gives_one_radian() {
        let p = MicroMotionProfile::Vital { amp_displacement_m: LAMBDA / (4.0 * PI), rate_hz: 1.0 };
        let s = micro_phase_series(&p, LAMBDA, 1.0, 0.25, 2.0).unwrap();
        assert_relative_eq!(s.samples[1], 1.0, max_relative = 1e-12);
        let peak = s.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_relative_eq!(peak, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn halving_wavelength_doubles_phase() {
        let p = MicroMotionProfile::Rotor { n_blades: 2, blade_length_m: 0.3, rpm: 1200.0 };
        let a = micro_phase_series(&p, LAMBDA, 0.1, 1e-3, 1.5).unwrap();
        let b = micro_phase_series(&p, LAMBDA / 2.0, 0.1, 1e-3, 1.5).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = MicroMotionProfile::None;
        assert!(micro_phase_series(&p, LAMBDA, 1.0, 0.0, 2.0).is_err());
        assert!(micro_phase_series(&p, LAMBDA, 1.0, -1.0, 2.0).is_err());
        let bad = MicroMotionProfile::Sinusoid { peak_doppler_hz: 1.0, mod_freq_hz: 0.0, phase_rad: 0.0 };
        assert!(bad.validate().is_err());
        assert!(arm_swing_states(0.0, 0.0, 2.0, 0.0, &Vec3::zeros()).is_err());
    }

    #[test]
    fn rotor_blades_are_evenly_spaced() {
        let p = MicroMotionProfile::Rotor { n_blades: 4, blade_length_m: 1.0, rpm: 60.0 };
        assert_relative_eq!(p.blade_displacement(0, 0.0), 1.0);
        assert!(p.blade_displacement(1, 0.0).abs() < 1e-12);
        assert_relative_eq!(p.blade_displacement(2, 0.0), -1.0);
    }

    #[test]
    fn arms_move_in_anti_phase() {
        let body = Vec3::new(3.0, 0.0, 0.0);
        for i in 0..40 {
            let t = i as f64 * 0.037;
            let [l, r] = arm_swing_states(t, 1.0, 2.0, 0.3, &body).unwrap();
            assert!((l.velocity + r.velocity).norm() < 1e-12);
        }
        let speeds: Vec<f64> = (0..1000)
            .map(|i| arm_swing_states(i as f64 / 1000.0, 1.0, 2.0, 0.0, &body).unwrap()[0].velocity.norm())
            .collect();
        let max = speeds.iter().fold(0.0f64, |m, v| m.max(*v));
        assert!((max - 2.0).abs() < 1e-4);
        // Two speed maxima per period: at t = 0.25 and 0.75.
        let maxima = (1..999).filter(|&i| speeds[i] > speeds[i - 1] && speeds[i] >= speeds[i + 1]).count();
        assert_eq!(maxima, 2);
    }

    #[test]
    fn sideways_arms_have_no_radial_velocity() {
        let body = Vec3::new(3.0, 0.0, 0.0);
        for i in 0..20 {
            let [l, r] = arm_swing_states(i as f64 * 0.05, 1.0, 2.0, PI / 2.0, &body).unwrap();
            assert!(l.velocity.x.abs() < 1e-12 && r.velocity.x.abs() < 1e-12);
        }
    }

    #[test]
    fn tone_gives_single_ridge() {
        let fs = 1000.0;
        let f0 = 125.0;
        let iq: Vec<_> = (0..1024).map(|n| Complex64::from_polar(1.0, 2.0 * PI * f0 * n as f64 / fs)).collect();
        let s = spectrogram(&iq, fs, 64, 16).unwrap();
        for f in s.peak_track() {
            assert!((f - f0).abs() < 0.5, "{f}");
        }
        assert_eq!(s.freqs_hz[32], 0.0);
        assert!(spectrogram(&[], fs, 4, 1).is_err());
        assert!(spectrogram(&iq, fs, 2048, 1).is_err());
    }

    #[test]
    fn anti_phase_arms_give_mirrored_ridges() {
        let cfg = ArmSwingConfig { arm_gains: [1.0, 1.0], ..Default::default() };
        let iq = simulate_arm_swing(&cfg, LAMBDA).unwrap();
        let s = spectrogram(&iq, cfg.sample_rate_hz, 128, 8).unwrap();
        let half = s.freqs_hz.len() / 2;
        for row in &s.magnitudes {
            let pos = (half + 1..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            let neg = (1..half).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            let (fp, fn_) = (s.freqs_hz[pos], s.freqs_hz[neg]);
            if fp.abs() > 10.0 {
                assert!((fp + fn_).abs() <= 2.0 * (s.freqs_hz[1] - s.freqs_hz[0]), "{fp} {fn_}");
            }
        }
    }

    #[test]
    fn sawtooth_scatterer_shows_tooth_pattern() {
        let p = MicroMotionProfile::Sawtooth { peak_doppler_hz: 100.0, period_s: 0.5, phase_rad: 0.0 };
        let fs = 1000.0;
        let iq: Vec<_> = (0..2000).map(|n| Complex64::from_polar(1.0, p.phase(n as f64 / fs, LAMBDA, 2.0))).collect();
        let s = spectrogram(&iq, fs, 64, 8).unwrap();
        let track = s.peak_track();
        let steps: Vec<f64> = track.windows(2).map(|w| w[1] - w[0]).collect();
        let rising = steps.iter().filter(|d| **d > 0.0).count() as f64 / steps.len() as f64;
        let flybacks = steps.iter().filter(|d| **d < -100.0).count();
        assert!(rising > 0.8, "{rising}");
        // Four periods in 2 s give three interior flybacks.
        assert!((3..=4).contains(&flybacks), "{flybacks}");
    }

    #[test]
    fn autocorrelation_finds_period() {
        let x: Vec<f64> = (0..300).map(|i| (2.0 * PI * i as f64 / 50.0).sin()).collect();
        assert_eq!(autocorrelation_peak(&x), Some(50));
    }
}
