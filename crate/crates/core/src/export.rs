//! CSV and binary graymap (PGM) writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so files
//! are byte-identical for identical inputs. Lines end in LF.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use ndarray::Array2;
use num_complex::Complex64;

use crate::rcs::{to_dbsm, RcsDecomposition, SweepSample};
use crate::microdoppler::Spectrogram;
use crate::sensing::{DelayDopplerMap, Detection, Kinematics};
use crate::{Error, Result};

/// Dynamic range of spectrogram graymaps, dB.
pub const SPECTROGRAM_RANGE_DB: f64 = 40.0;
/// Dynamic range of delay-Doppler graymaps, dB.
pub const DELAY_DOPPLER_RANGE_DB: f64 = 60.0;

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Magnitude in dB with zero mapped to the smallest positive double.
pub fn magnitude_db(m: f64) -> f64 {
    20.0 * m.max(f64::MIN_POSITIVE).log10()
}

/// Writes a header row and rows of floats.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `angle_deg,sigma_m2,sigma_dbsm,slow_dbsm,fast_db`, one row per sample.
pub fn write_rcs_sweep(path: &Path, samples: &[SweepSample], decomposition: &RcsDecomposition) -> Result<()> {
    if samples.len() != decomposition.fast_db.len() {
        return Err(Error::invalid("sweep and decomposition lengths differ"));
    }
    write_table(
        path,
        &["angle_deg", "sigma_m2", "sigma_dbsm", "slow_dbsm", "fast_db"],
        samples.iter().zip(&decomposition.fast_db).map(|(s, f)| {
            vec![s.angle_deg, s.sigma_m2, to_dbsm(s.sigma_m2), decomposition.slow_db, *f]
        }),
    )
}

/// First row is the frequency axis (Hz), first column the frame time (s),
/// cells are magnitudes in dB.
pub fn write_spectrogram_csv(path: &Path, spec: &Spectrogram) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(std::iter::once("time_s\\freq_hz".to_string()).chain(spec.freqs_hz.iter().map(|f| fmt(*f))))?;
    for (t, row) in spec.times_s.iter().zip(&spec.magnitudes) {
        w.write_record(std::iter::once(fmt(*t)).chain(row.iter().map(|m| fmt(magnitude_db(*m)))))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Time runs left to right, frequency bottom (most negative) to top.
pub fn write_spectrogram_pgm(path: &Path, spec: &Spectrogram) -> Result<()> {
    let frames = spec.magnitudes.len();
    let bins = spec.freqs_hz.len();
    let grid = Array2::from_shape_fn((bins, frames), |(r, c)| spec.magnitudes[c][bins - 1 - r]);
    write_pgm(path, &grid, SPECTROGRAM_RANGE_DB)
}

/// First row is the Doppler axis (Hz), first column the delay (s), cells are
/// magnitudes in dB.
pub fn write_delay_doppler_csv(path: &Path, map: &DelayDopplerMap) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(
        std::iter::once("delay_s\\doppler_hz".to_string()).chain(map.doppler_axis_hz.iter().map(|f| fmt(*f))),
    )?;
    for (d, row) in map.delay_axis_s.iter().zip(map.magnitudes.rows()) {
        w.write_record(std::iter::once(fmt(*d)).chain(row.iter().map(|m| fmt(magnitude_db(*m)))))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Delay runs top to bottom, Doppler left to right.
pub fn write_delay_doppler_pgm(path: &Path, map: &DelayDopplerMap) -> Result<()> {
    write_pgm(path, &map.magnitudes, DELAY_DOPPLER_RANGE_DB)
}

/// `delay_s,doppler_hz,range_m,velocity_mps,power_db`. For bistatic
/// detections the range column holds the total path length and the velocity
/// column the raw Doppler shift.
pub fn write_detections(path: &Path, detections: &[(Detection, Kinematics)]) -> Result<()> {
    write_table(
        path,
        &["delay_s", "doppler_hz", "range_m", "velocity_mps", "power_db"],
        detections.iter().map(|(d, k)| {
            let (r, v) = k.pair();
            vec![d.delay_s, d.doppler_hz, r, v, d.power_db]
        }),
    )
}

/// One row per subcarrier: the index, then `re,im` for every repetition.
pub fn write_realization_csv(path: &Path, h: &Array2<Complex64>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header = std::iter::once("k".to_string())
        .chain((0..h.ncols()).flat_map(|m| [format!("m{m}_re"), format!("m{m}_im")]));
    w.write_record(header)?;
    for (k, row) in h.rows().into_iter().enumerate() {
        let cells = row.iter().flat_map(|v| [fmt(v.re), fmt(v.im)]);
        w.write_record(std::iter::once(k.to_string()).chain(cells))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// 8-bit gray levels: the peak maps to 255 and `range_db` below it to 0.
pub fn to_gray(grid: &Array2<f64>, range_db: f64) -> Vec<u8> {
    let peak = grid.iter().fold(0.0f64, |m, v| m.max(*v));
    if peak <= 0.0 {
        return vec![0; grid.len()];
    }
    let top = magnitude_db(peak);
    grid.iter()
        .map(|m| {
            let rel = (magnitude_db(*m) - top + range_db) / range_db;
            (rel.clamp(0.0, 1.0) * 255.0).round() as u8
        })
        .collect()
}

/// Binary PGM of a row-major magnitude grid.
pub fn write_pgm(path: &Path, grid: &Array2<f64>, range_db: f64) -> Result<()> {
    let (rows, cols) = grid.dim();
    let pixels = to_gray(&grid.as_standard_layout().to_owned(), range_db);
    let mut out = BufWriter::new(create(path)?);
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&pixels, cols as u32, rows as u32, ExtendedColorType::L8)?;
    out.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
