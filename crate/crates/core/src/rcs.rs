//! Radar cross section of primitive shapes and segmented composite objects.
//!
//! Electrically large objects are split into a uniform grid of primitive
//! segments so that each segment individually satisfies the plane-wave
//! (far-field) condition `min(r_tx, r_rx) > 2 D² / λ`. The object RCS is then
//! aggregated from the per-segment values, either as a power sum or as a
//! phase-exact coherent sum of field amplitudes.
//!
//! Primitive RCS values use physical-optics closed forms. Bistatic geometry is
//! handled by evaluating the monostatic form at the bisector angle, i.e. the
//! mean of the incidence and scattering angles.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Rotation3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::{Error, Result};

/// Values below this are reported as [`RCS_FLOOR_DBSM`] in dB.
pub const RCS_FLOOR_M2: f64 = 1e-10;
pub const RCS_FLOOR_DBSM: f64 = -100.0;

/// `10·log10(σ)` with a floor at −100 dBsm.
pub fn to_dbsm(sigma_m2: f64) -> f64 {
    if sigma_m2 <= RCS_FLOOR_M2 {
        RCS_FLOOR_DBSM
    } else {
        10.0 * sigma_m2.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeKind {
    RectangularPlate { a_m: f64, b_m: f64 },
    CircularPlate { radius_m: f64 },
    Sphere { radius_m: f64 },
    /// Broadside normal is perpendicular to the axis; `height_m` runs along
    /// the axis.
    Cylinder { radius_m: f64, height_m: f64 },
}

impl ShapeKind {
    fn name(&self) -> &'static str {
        match self {
            ShapeKind::RectangularPlate { .. } => "rectangular plate",
            ShapeKind::CircularPlate { .. } => "circular plate",
            ShapeKind::Sphere { .. } => "sphere",
            ShapeKind::Cylinder { .. } => "cylinder",
        }
    }

    fn dimensions(&self) -> Vec<f64> {
        match *self {
            ShapeKind::RectangularPlate { a_m, b_m } => vec![a_m, b_m],
            ShapeKind::CircularPlate { radius_m } | ShapeKind::Sphere { radius_m } => {
                vec![radius_m]
            }
            ShapeKind::Cylinder { radius_m, height_m } => vec![radius_m, height_m],
        }
    }
}

/// A primitive scatterer. `reflectivity` scales the field amplitude, so the
/// RCS scales with its square; 1 is a perfect electric conductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveShape {
    pub kind: ShapeKind,
    pub reflectivity: f64,
}

impl PrimitiveShape {
    pub fn new(kind: ShapeKind, reflectivity: f64) -> Result<Self> {
        let shape = PrimitiveShape { kind, reflectivity };
        shape.check()?;
        Ok(shape)
    }

    /// Perfectly conducting shape.
    pub fn pec(kind: ShapeKind) -> Result<Self> {
        Self::new(kind, 1.0)
    }

    pub fn check(&self) -> Result<()> {
        if !self.kind.dimensions().iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(Error::invalid(format!(
                "{} dimensions must be strictly positive",
                self.kind.name()
            )));
        }
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return Err(Error::invalid(format!(
                "reflectivity {} outside [0, 1]",
                self.reflectivity
            )));
        }
        Ok(())
    }

    /// Largest linear dimension used by the far-field criterion. Plates use
    /// their longest edge, round shapes their diameter.
    pub fn max_dimension(&self) -> f64 {
        match self.kind {
            ShapeKind::RectangularPlate { a_m, b_m } => a_m.max(b_m),
            ShapeKind::CircularPlate { radius_m } | ShapeKind::Sphere { radius_m } => {
                2.0 * radius_m
            }
            ShapeKind::Cylinder { radius_m, height_m } => (2.0 * radius_m).max(height_m),
        }
    }
}

/// Incidence and scattering angles relative to the surface normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectAngles {
    pub incidence: f64,
    pub scattering: f64,
}

impl AspectAngles {
    /// Both angles must lie in `[0, π/2]`; larger angles mean the surface is
    /// shadowed.
    pub fn new(incidence: f64, scattering: f64) -> Result<Self> {
        let ok = |x: f64| (0.0..=FRAC_PI_2).contains(&x);
        if !ok(incidence) || !ok(scattering) {
            return Err(Error::invalid(format!(
                "aspect angles ({incidence}, {scattering}) outside [0, π/2]"
            )));
        }
        Ok(AspectAngles {
            incidence,
            scattering,
        })
    }

    pub fn monostatic(angle: f64) -> Result<Self> {
        Self::new(angle, angle)
    }

    /// Angles between the (two-sided) surface normal and the directions from
    /// the surface point towards the transmitter and receiver.
    pub fn from_geometry(normal: &Vec3, to_tx: &Vec3, to_rx: &Vec3) -> Self {
        let angle = |v: &Vec3| {
            let c = normal.dot(v) / (normal.norm() * v.norm());
            c.abs().clamp(0.0, 1.0).acos()
        };
        AspectAngles {
            incidence: angle(to_tx),
            scattering: angle(to_rx),
        }
    }

    pub fn bisector(&self) -> f64 {
        0.5 * (self.incidence + self.scattering)
    }
}

/// `2·D²/λ`, the distance beyond which an object of maximum dimension `D` is
/// illuminated by an effectively planar wavefront.
pub fn far_field_distance(d_max: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    if !(d_max >= 0.0) {
        return Err(Error::invalid(format!(
            "object dimension must be non-negative, got {d_max}"
        )));
    }
    Ok(2.0 * d_max * d_max / wavelength)
}

pub fn plane_wave_valid(r_tx: f64, r_rx: f64, d_max: f64, wavelength: f64) -> Result<bool> {
    if !(r_tx > 0.0 && r_rx > 0.0) {
        return Err(Error::invalid(format!(
            "distances must be positive, got r_tx={r_tx}, r_rx={r_rx}"
        )));
    }
    Ok(r_tx.min(r_rx) > far_field_distance(d_max, wavelength)?)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Bessel function of the first kind, order one, via the trapezoidal rule on
/// `J1(x) = (1/2π) ∫₀^{2π} cos(τ − x·sin τ) dτ`. The integrand is periodic so
/// the rule converges geometrically once the node count exceeds `|x|`.
pub(crate) fn bessel_j1(x: f64) -> f64 {
    let n = 64usize.max(2 * x.abs().ceil() as usize + 32);
    let h = 2.0 * PI / n as f64;
    let sum: f64 = (0..n)
        .map(|i| {
            let tau = i as f64 * h;
            (tau - x * tau.sin()).cos()
        })
        .sum();
    sum / n as f64
}

/// Physical-optics RCS of a primitive shape, m².
pub fn primitive_rcs(shape: &PrimitiveShape, wavelength: f64, aspect: &AspectAngles) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::invalid(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    shape.check()?;
    AspectAngles::new(aspect.incidence, aspect.scattering)?;

    let k = 2.0 * PI / wavelength;
    let theta = aspect.bisector();
    let (sin_t, cos_t) = theta.sin_cos();
    let sigma = match shape.kind {
        ShapeKind::RectangularPlate { a_m, b_m } => {
            let area = a_m * b_m;
            4.0 * PI * area * area / (wavelength * wavelength)
                * cos_t
                * cos_t
                * sinc(k * a_m * sin_t).powi(2)
        }
        ShapeKind::CircularPlate { radius_m } => {
            let area = PI * radius_m * radius_m;
            let x = 2.0 * k * radius_m * sin_t;
            let pattern = if x.abs() < 1e-8 { 1.0 } else { 2.0 * bessel_j1(x) / x };
            4.0 * PI * area * area / (wavelength * wavelength) * cos_t * cos_t * pattern * pattern
        }
        ShapeKind::Sphere { radius_m } => PI * radius_m * radius_m,
        ShapeKind::Cylinder { radius_m, height_m } => {
            2.0 * PI * radius_m * height_m * height_m / wavelength
                * cos_t
                * cos_t
                * sinc(k * height_m * sin_t).powi(2)
        }
    };
    Ok(sigma * shape.reflectivity * shape.reflectivity)
}

/// One piece of a segmented object. Position and normal are in the frame the
/// object was posed in.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub shape: PrimitiveShape,
    pub center: Vec3,
    pub normal: Vec3,
}

impl Segment {
    pub fn new(shape: PrimitiveShape, center: Vec3, normal: Vec3) -> Result<Self> {
        if (normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("segment normal must have unit length"));
        }
        shape.check()?;
        Ok(Segment {
            shape,
            center,
            normal,
        })
    }

    /// RCS of this segment for the given endpoint positions.
    pub fn sigma(&self, tx_pos: &Vec3, rx_pos: &Vec3, wavelength: f64) -> Result<f64> {
        let aspect =
            AspectAngles::from_geometry(&self.normal, &(tx_pos - self.center), &(rx_pos - self.center));
        primitive_rcs(&self.shape, wavelength, &aspect)
    }
}

/// Aggregation rule for segment contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Phase-exact sum of field amplitudes.
    #[default]
    Coherent,
    /// Sum of segment powers.
    Incoherent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedObject {
    pub segments: Vec<Segment>,
    /// Maximum dimension of the whole object, m.
    pub d_max: f64,
    /// Grid used to split the object, `(along a / axis, along b)`.
    pub grid: (usize, usize),
}

impl SegmentedObject {
    /// Wraps a single primitive centred at the origin, normal along +z.
    pub fn single(shape: PrimitiveShape) -> Result<Self> {
        shape.check()?;
        Ok(SegmentedObject {
            d_max: shape.max_dimension(),
            segments: vec![Segment {
                shape,
                center: Vec3::zeros(),
                normal: Vec3::z(),
            }],
            grid: (1, 1),
        })
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Rotates the object about its local origin and then translates it.
    pub fn posed(&self, rotation: &Rotation3<f64>, translation: &Vec3) -> Self {
        SegmentedObject {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    shape: s.shape,
                    center: rotation * s.center + translation,
                    normal: rotation * s.normal,
                })
                .collect(),
            d_max: self.d_max,
            grid: self.grid,
        }
    }
}

fn min_cells(extent: f64, wavelength: f64, r_min: f64) -> Result<usize> {
    // Smallest n with 2(extent/n)²/λ < r_min; closed form guess then exact check.
    let limit = (r_min * wavelength / 2.0).sqrt();
    let mut n = ((extent / limit).floor() as usize).max(1);
    while !plane_wave_valid(r_min, r_min, extent / n as f64, wavelength)? {
        n += 1;
    }
    while n > 1 && plane_wave_valid(r_min, r_min, extent / (n - 1) as f64, wavelength)? {
        n -= 1;
    }
    Ok(n)
}

fn max_cells(extent: f64, wavelength: f64) -> usize {
    // Largest n with extent/n > λ; an axis no longer than λ is never split.
    if extent <= wavelength {
        return 1;
    }
    let mut n = (extent / wavelength).ceil() as usize;
    while n > 1 && extent / n as f64 <= wavelength {
        n -= 1;
    }
    n
}

/// Splits a rectangular plate into an `na × nb` grid of equal plates centred
/// on the origin, normal +z. No far-field or wavelength checks.
pub fn plate_grid(shape: &PrimitiveShape, na: usize, nb: usize) -> Result<SegmentedObject> {
    shape.check()?;
    let ShapeKind::RectangularPlate { a_m, b_m } = shape.kind else {
        return Err(Error::Unsegmentable {
            shape: shape.kind.name(),
        });
    };
    if na == 0 || nb == 0 {
        return Err(Error::invalid("grid needs at least one cell per axis"));
    }
    let (sa, sb) = (a_m / na as f64, b_m / nb as f64);
    let cell = PrimitiveShape {
        kind: ShapeKind::RectangularPlate { a_m: sa, b_m: sb },
        reflectivity: shape.reflectivity,
    };
    let mut segments = Vec::with_capacity(na * nb);
    for i in 0..na {
        for j in 0..nb {
            let center = Vec3::new(
                (i as f64 + 0.5) * sa - a_m / 2.0,
                (j as f64 + 0.5) * sb - b_m / 2.0,
                0.0,
            );
            segments.push(Segment {
                shape: cell,
                center,
                normal: Vec3::z(),
            });
        }
    }
    Ok(SegmentedObject {
        segments,
        d_max: shape.max_dimension(),
        grid: (na, nb),
    })
}

/// Splits `shape` into the smallest uniform grid whose segments each satisfy
/// the plane-wave criterion at distance `r_min`, while every segment stays
/// larger than one wavelength.
///
/// Rectangular plates are split into an `na × nb` grid, cylinders into slices
/// along their axis. Spheres and circular plates are only accepted whole.
pub fn segment_object(shape: &PrimitiveShape, wavelength: f64, r_min: f64) -> Result<SegmentedObject> {
    if !(r_min > 0.0) {
        return Err(Error::invalid(format!("r_min must be positive, got {r_min}")));
    }
    far_field_distance(0.0, wavelength)?;
    shape.check()?;

    let too_small = shape.max_dimension() <= wavelength;
    match shape.kind {
        ShapeKind::RectangularPlate { a_m, b_m } => {
            let (na, nb) = (
                min_cells(a_m, wavelength, r_min)?,
                min_cells(b_m, wavelength, r_min)?,
            );
            let (ma, mb) = (max_cells(a_m, wavelength), max_cells(b_m, wavelength));
            let n_max = if too_small { 0 } else { ma * mb };
            if too_small || na > ma || nb > mb {
                return Err(Error::SegmentationInfeasible {
                    n_min: na * nb,
                    n_max,
                });
            }
            plate_grid(shape, na, nb)
        }
        ShapeKind::Cylinder { radius_m, height_m } => {
            let diameter = 2.0 * radius_m;
            if !plane_wave_valid(r_min, r_min, diameter, wavelength)? {
                return Err(Error::Unsegmentable {
                    shape: "cylinder cross-section",
                });
            }
            let n = min_cells(height_m, wavelength, r_min)?;
            let m = if too_small {
                0
            } else if diameter > wavelength {
                // Slices stay above λ through their diameter regardless of height.
                usize::MAX
            } else {
                max_cells(height_m, wavelength)
            };
            if too_small || n > m {
                return Err(Error::SegmentationInfeasible { n_min: n, n_max: m });
            }
            let slice = height_m / n as f64;
            let cell = PrimitiveShape {
                kind: ShapeKind::Cylinder {
                    radius_m,
                    height_m: slice,
                },
                reflectivity: shape.reflectivity,
            };
            let segments = (0..n)
                .map(|i| Segment {
                    shape: cell,
                    center: Vec3::new(0.0, 0.0, (i as f64 + 0.5) * slice - height_m / 2.0),
                    normal: Vec3::x(),
                })
                .collect();
            Ok(SegmentedObject {
                segments,
                d_max: shape.max_dimension(),
                grid: (n, 1),
            })
        }
        ShapeKind::Sphere { .. } | ShapeKind::CircularPlate { .. } => {
            if too_small {
                return Err(Error::SegmentationInfeasible { n_min: 1, n_max: 0 });
            }
            if !plane_wave_valid(r_min, r_min, shape.max_dimension(), wavelength)? {
                return Err(Error::Unsegmentable {
                    shape: shape.kind.name(),
                });
            }
            SegmentedObject::single(*shape)
        }
    }
}

/// Per-segment RCS values, failing on the first segment that is not in its
/// own far field.
pub fn segment_sigmas(
    obj: &SegmentedObject,
    tx_pos: &Vec3,
    rx_pos: &Vec3,
    wavelength: f64,
) -> Result<Vec<f64>> {
    obj.segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let r_tx = (tx_pos - seg.center).norm();
            let r_rx = (rx_pos - seg.center).norm();
            let d = seg.shape.max_dimension();
            if !plane_wave_valid(r_tx, r_rx, d, wavelength)? {
                return Err(Error::FarFieldViolation {
                    segment: i,
                    distance_m: r_tx.min(r_rx),
                    required_m: far_field_distance(d, wavelength)?,
                });
            }
            seg.sigma(tx_pos, rx_pos, wavelength)
        })
        .collect()
}

/// RCS of a segmented object for the given transmitter and receiver
/// positions, m².
pub fn object_rcs(
    obj: &SegmentedObject,
    tx_pos: &Vec3,
    rx_pos: &Vec3,
    wavelength: f64,
    mode: Aggregation,
) -> Result<f64> {
    if obj.is_empty() {
        return Err(Error::invalid("object has no segments"));
    }
    let sigmas = segment_sigmas(obj, tx_pos, rx_pos, wavelength)?;
    if sigmas.len() == 1 {
        return Ok(sigmas[0]);
    }
    Ok(match mode {
        Aggregation::Incoherent => sigmas.iter().sum(),
        Aggregation::Coherent => {
            let k = 2.0 * PI / wavelength;
            let field: Complex64 = obj
                .segments
                .iter()
                .zip(&sigmas)
                .map(|(seg, s)| {
                    let path = (tx_pos - seg.center).norm() + (rx_pos - seg.center).norm();
                    Complex64::from_polar(s.sqrt(), k * path)
                })
                .sum();
            field.norm_sqr()
        }
    })
}

/// RCS split into an orientation-averaged slow component and the per-aspect
/// fast residual.
#[derive(Debug, Clone, PartialEq)]
pub struct RcsDecomposition {
    pub slow_db: f64,
    pub aspects: Vec<AspectAngles>,
    pub fast_db: Vec<f64>,
}

impl RcsDecomposition {
    pub fn slow_m2(&self) -> f64 {
        10f64.powf(self.slow_db / 10.0)
    }

    /// `slow + fast` per sample, dBsm.
    pub fn recomposed_db(&self) -> Vec<f64> {
        self.fast_db.iter().map(|f| self.slow_db + f).collect()
    }

    /// Linear fast-fading power gain at a bisector aspect angle, linearly
    /// interpolated in dB between sweep samples and clamped at the ends.
    pub fn fast_gain(&self, angle: f64) -> f64 {
        let mut pts: Vec<(f64, f64)> = self
            .aspects
            .iter()
            .map(AspectAngles::bisector)
            .zip(self.fast_db.iter().copied())
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let db = match pts.iter().position(|p| p.0 >= angle) {
            None => pts.last().map(|p| p.1).unwrap_or(0.0),
            Some(0) => pts[0].1,
            Some(i) => {
                let (x0, y0) = pts[i - 1];
                let (x1, y1) = pts[i];
                if x1 == x0 {
                    y1
                } else {
                    y0 + (y1 - y0) * (angle - x0) / (x1 - x0)
                }
            }
        };
        10f64.powf(db / 10.0)
    }
}

/// Splits an aspect sweep into slow (mean dBsm over the sweep) and fast
/// (per-sample residual) components.
pub fn decompose_slow_fast(sweep: &[(AspectAngles, f64)]) -> Result<RcsDecomposition> {
    if sweep.is_empty() {
        return Err(Error::invalid("empty RCS sweep"));
    }
    if let Some((_, s)) = sweep.iter().find(|(_, s)| !(*s >= 0.0)) {
        return Err(Error::invalid(format!("negative or NaN RCS sample {s}")));
    }
    let db: Vec<f64> = sweep.iter().map(|(_, s)| to_dbsm(*s)).collect();
    let slow_db = db.iter().sum::<f64>() / db.len() as f64;
    Ok(RcsDecomposition {
        slow_db,
        aspects: sweep.iter().map(|(a, _)| *a).collect(),
        fast_db: db.iter().map(|d| d - slow_db).collect(),
    })
}

/// One row of a monostatic aspect sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub angle_deg: f64,
    pub sigma_m2: f64,
}

/// Monostatic sweep of an object rotated about its local y axis, with the
/// sensor on the +z axis at `distance_m`. The object is segmented for that
/// distance first.
pub fn monostatic_sweep(
    shape: &PrimitiveShape,
    wavelength: f64,
    distance_m: f64,
    angles_deg: &[f64],
    mode: Aggregation,
) -> Result<(SegmentedObject, Vec<SweepSample>)> {
    let obj = segment_object(shape, wavelength, distance_m)?;
    let samples = object_sweep(&obj, wavelength, distance_m, angles_deg, mode)?;
    Ok((obj, samples))
}

/// Monostatic sweep of an already segmented object, rotated about its local
/// y axis with the sensor on +z at `distance_m`.
pub fn object_sweep(
    obj: &SegmentedObject,
    wavelength: f64,
    distance_m: f64,
    angles_deg: &[f64],
    mode: Aggregation,
) -> Result<Vec<SweepSample>> {
    let sensor = Vec3::new(0.0, 0.0, distance_m);
    angles_deg
        .iter()
        .map(|&deg| {
            let rot = Rotation3::from_axis_angle(&Vec3::y_axis(), deg.to_radians());
            let posed = obj.posed(&rot, &Vec3::zeros());
            let sigma_m2 = object_rcs(&posed, &sensor, &sensor, wavelength, mode)?;
            Ok(SweepSample {
                angle_deg: deg,
                sigma_m2,
            })
        })
        .collect()
}

/// Decomposes a monostatic sweep, using the rotation angle as the aspect.
pub fn decompose_sweep(samples: &[SweepSample]) -> Result<RcsDecomposition> {
    let sweep = samples
        .iter()
        .map(|s| {
            let a = s.angle_deg.to_radians().abs().min(FRAC_PI_2);
            (AspectAngles { incidence: a, scattering: a }, s.sigma_m2)
        })
        .collect::<Vec<_>>();
    decompose_slow_fast(&sweep)
}
