//! Telemetry ingestion, resampling to a fixed step, deviation scoring against
//! a reference run, classification and sensor quantization.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spherical Earth radius used for local east-north-up offsets.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("trajectory has no samples")]
    Empty,
    #[error("sample {index}: {msg}")]
    BadSample { index: usize, msg: String },
    #[error("timestamps not strictly increasing at sample {index}")]
    NonIncreasing { index: usize },
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("trajectory of {duration} s is shorter than one step of {k} s")]
    TooShort { duration: f64, k: f64 },
    #[error("trajectory must start at t = 0, starts at {0}")]
    NotAtZero(f64),
    #[error("timestamp mismatch: sample at {t} vs reference at {ref_t}")]
    TimestampMismatch { t: f64, ref_t: f64 },
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("invalid thresholds: good = {good}, bad = {bad}")]
    BadThresholds { good: f64, bad: f64 },
    #[error("quantum must be positive: {0}")]
    BadQuantum(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub t: f64,
    pub v: [f64; 3],
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
}

/// Wraps an angle in radians to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

fn wrap_degrees(d: f64) -> f64 {
    let mut w = d.rem_euclid(360.0);
    if w > 180.0 {
        w -= 360.0;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Flight,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TelemetrySample>,
    pub source: Source,
    /// First time the disengaged flag is set; the flag is sticky afterwards.
    pub disengage_time: Option<f64>,
}

impl Trajectory {
    pub fn new(
        samples: Vec<TelemetrySample>,
        source: Source,
        disengage_time: Option<f64>,
    ) -> Result<Self, TrajectoryError> {
        if samples.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (i, s) in samples.iter().enumerate() {
            let fields = [
                s.t, s.v[0], s.v[1], s.v[2], s.lat, s.lon, s.alt, s.pitch, s.roll, s.yaw,
            ];
            if fields.iter().any(|x| !x.is_finite()) {
                return Err(TrajectoryError::BadSample {
                    index: i,
                    msg: "non-finite field".into(),
                });
            }
            if s.t < 0.0 {
                return Err(TrajectoryError::BadSample {
                    index: i,
                    msg: format!("negative time {}", s.t),
                });
            }
            if !(-90.0..=90.0).contains(&s.lat) {
                return Err(TrajectoryError::BadSample {
                    index: i,
                    msg: format!("latitude {} out of range", s.lat),
                });
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(TrajectoryError::NonIncreasing { index: i });
            }
        }
        let samples = samples
            .into_iter()
            .map(|s| TelemetrySample {
                lon: wrap_degrees(s.lon),
                pitch: wrap_angle(s.pitch),
                roll: wrap_angle(s.roll),
                yaw: wrap_angle(s.yaw),
                ..s
            })
            .collect();
        Ok(Self {
            samples,
            source,
            disengage_time,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn disengaged_at(&self, t: f64) -> bool {
        self.disengage_time.is_some_and(|d| d <= t + TIME_EPS)
    }

    /// Smallest spacing between consecutive raw samples.
    pub fn native_interval(&self) -> Option<f64> {
        self.samples
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    vx: f64,
    vy: f64,
    vz: f64,
    lat: f64,
    lon: f64,
    alt: f64,
    pitch: f64,
    roll: f64,
    yaw: f64,
    disengaged: u8,
}

pub fn read_csv<R: Read>(reader: R, source: Source) -> Result<Trajectory, TrajectoryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut samples = Vec::new();
    let mut disengage_time = None;
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        if row.disengaged > 1 {
            return Err(TrajectoryError::BadSample {
                index: i,
                msg: format!("disengaged must be 0 or 1, got {}", row.disengaged),
            });
        }
        if row.disengaged == 1 && disengage_time.is_none() {
            disengage_time = Some(row.t);
        }
        samples.push(TelemetrySample {
            t: row.t,
            v: [row.vx, row.vy, row.vz],
            lat: row.lat,
            lon: row.lon,
            alt: row.alt,
            pitch: row.pitch,
            roll: row.roll,
            yaw: row.yaw,
        });
    }
    Trajectory::new(samples, source, disengage_time)
}

pub fn read_csv_path(path: &Path, source: Source) -> Result<Trajectory, TrajectoryError> {
    read_csv(std::fs::File::open(path)?, source)
}

pub fn write_csv<W: Write>(writer: W, traj: &Trajectory) -> Result<(), TrajectoryError> {
    let mut w = csv::Writer::from_writer(writer);
    for s in &traj.samples {
        w.serialize(Row {
            t: s.t,
            vx: s.v[0],
            vy: s.v[1],
            vz: s.v[2],
            lat: s.lat,
            lon: s.lon,
            alt: s.alt,
            pitch: s.pitch,
            roll: s.roll,
            yaw: s.yaw,
            disengaged: traj.disengaged_at(s.t) as u8,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    a + (b - a) * u
}

fn lerp_angle(a: f64, b: f64, u: f64) -> f64 {
    wrap_angle(a + wrap_angle(b - a) * u)
}

fn interpolate(a: &TelemetrySample, b: &TelemetrySample, t: f64) -> TelemetrySample {
    let u = (t - a.t) / (b.t - a.t);
    TelemetrySample {
        t,
        v: [
            lerp(a.v[0], b.v[0], u),
            lerp(a.v[1], b.v[1], u),
            lerp(a.v[2], b.v[2], u),
        ],
        lat: lerp(a.lat, b.lat, u),
        lon: wrap_degrees(a.lon + wrap_degrees(b.lon - a.lon) * u),
        alt: lerp(a.alt, b.alt, u),
        pitch: lerp_angle(a.pitch, b.pitch, u),
        roll: lerp_angle(a.roll, b.roll, u),
        yaw: lerp_angle(a.yaw, b.yaw, u),
    }
}

/// Samples at `t = 0, k, 2k, ...` up to the last raw timestamp.
pub fn resample(traj: &Trajectory, k: f64) -> Result<Vec<TelemetrySample>, TrajectoryError> {
    if k.is_nan() || k <= 0.0 {
        return Err(TrajectoryError::BadStep(k));
    }
    let raw = &traj.samples;
    let first = raw.first().ok_or(TrajectoryError::Empty)?;
    if first.t.abs() > TIME_EPS {
        return Err(TrajectoryError::NotAtZero(first.t));
    }
    let duration = traj.duration();
    if duration + TIME_EPS < k {
        return Err(TrajectoryError::TooShort { duration, k });
    }
    let steps = ((duration + TIME_EPS) / k).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let t = j as f64 * k;
        let idx = raw.partition_point(|s| s.t < t - TIME_EPS);
        let sample = match raw.get(idx) {
            Some(s) if (s.t - t).abs() <= TIME_EPS => TelemetrySample { t, ..*s },
            Some(s) if idx > 0 => interpolate(&raw[idx - 1], s, t),
            Some(s) => TelemetrySample { t, ..*s },
            None => TelemetrySample {
                t,
                ..*raw.last().expect("non-empty")
            },
        };
        out.push(sample);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviationWeights {
    pub pos: f64,
    /// Seconds: m/s of velocity error to meters.
    pub vel: f64,
    /// Meters per radian of attitude error.
    pub att: f64,
}

impl Default for DeviationWeights {
    fn default() -> Self {
        Self {
            pos: 1.0,
            vel: 20.0,
            att: 500.0,
        }
    }
}

impl DeviationWeights {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let all = [self.pos, self.vel, self.att];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(TrajectoryError::BadWeights(format!(
                "{self:?} has a negative or non-finite weight"
            )));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(TrajectoryError::BadWeights("all weights are zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub good: f64,
    pub bad: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            good: 500.0,
            bad: 2000.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.good > 0.0 && self.good <= self.bad && self.bad.is_finite() {
            Ok(())
        } else {
            Err(TrajectoryError::BadThresholds {
                good: self.good,
                bad: self.bad,
            })
        }
    }
}

/// East-north-up offset in meters of `b` relative to `a`.
pub fn enu_offset(a: &TelemetrySample, b: &TelemetrySample) -> [f64; 3] {
    let mean_lat = ((a.lat + b.lat) / 2.0).to_radians();
    let east = EARTH_RADIUS_M * mean_lat.cos() * wrap_degrees(b.lon - a.lon).to_radians();
    let north = EARTH_RADIUS_M * (b.lat - a.lat).to_radians();
    [east, north, b.alt - a.alt]
}

/// Inverse of [`enu_offset`] around an origin: geodetic position of a local
/// displacement.
pub fn enu_to_geodetic(lat0: f64, lon0: f64, alt0: f64, enu: [f64; 3]) -> (f64, f64, f64) {
    let lat = lat0 + (enu[1] / EARTH_RADIUS_M).to_degrees();
    let mean_lat = ((lat0 + lat) / 2.0).to_radians();
    let lon = wrap_degrees(lon0 + (enu[0] / (EARTH_RADIUS_M * mean_lat.cos())).to_degrees());
    (lat, lon, alt0 + enu[2])
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Position-equivalent deviation of `sample` from `reference` at the same time.
pub fn deviation(
    sample: &TelemetrySample,
    reference: &TelemetrySample,
    w: &DeviationWeights,
) -> Result<f64, TrajectoryError> {
    if (sample.t - reference.t).abs() > 1e-6 {
        return Err(TrajectoryError::TimestampMismatch {
            t: sample.t,
            ref_t: reference.t,
        });
    }
    let dp = enu_offset(reference, sample);
    let dv = [
        sample.v[0] - reference.v[0],
        sample.v[1] - reference.v[1],
        sample.v[2] - reference.v[2],
    ];
    let da = [
        wrap_angle(sample.pitch - reference.pitch),
        wrap_angle(sample.roll - reference.roll),
        wrap_angle(sample.yaw - reference.yaw),
    ];
    Ok(w.pos * norm(dp) + w.vel * norm(dv) + w.att * norm(da))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    Good,
    Neutral,
    Bad,
}

impl Class {
    pub fn letter(self) -> char {
        match self {
            Class::Good => 'G',
            Class::Neutral => 'N',
            Class::Bad => 'B',
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Good => "Good",
            Class::Neutral => "Neutral",
            Class::Bad => "Bad",
        })
    }
}

pub fn classify(score: f64, th: &Thresholds) -> Class {
    if score < th.good {
        Class::Good
    } else if score > th.bad {
        Class::Bad
    } else {
        Class::Neutral
    }
}

/// Per-field quanta: m/s, degrees, meters, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Quantization {
    pub vel: f64,
    pub angle: f64,
    pub alt: f64,
    pub latlon: f64,
}

impl Default for Quantization {
    fn default() -> Self {
        Self {
            vel: 1.0,
            angle: 1.0,
            alt: 1.0,
            latlon: 1e-5,
        }
    }
}

impl Quantization {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let q = [self.vel, self.angle, self.alt, self.latlon];
        if q.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(TrajectoryError::BadQuantum(format!("{self:?}")))
        }
    }
}

/// `(vx, vy, vz, lat, lon, alt, pitch, roll, yaw)` in quanta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature(pub [i64; 9]);

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn q(x: f64, quantum: f64) -> i64 {
    (x / quantum).round() as i64
}

pub fn quantize(s: &TelemetrySample, res: &Quantization) -> Signature {
    Signature([
        q(s.v[0], res.vel),
        q(s.v[1], res.vel),
        q(s.v[2], res.vel),
        q(s.lat, res.latlon),
        q(s.lon, res.latlon),
        q(s.alt, res.alt),
        q(s.pitch.to_degrees(), res.angle),
        q(s.roll.to_degrees(), res.angle),
        q(s.yaw.to_degrees(), res.angle),
    ])
}

/// Sample whose fields sit exactly on the signature's quanta.
pub fn dequantize(sig: &Signature, res: &Quantization, t: f64) -> TelemetrySample {
    let x = sig.0.map(|v| v as f64);
    TelemetrySample {
        t,
        v: [x[0] * res.vel, x[1] * res.vel, x[2] * res.vel],
        lat: x[3] * res.latlon,
        lon: x[4] * res.latlon,
        alt: x[5] * res.alt,
        pitch: (x[6] * res.angle).to_radians(),
        roll: (x[7] * res.angle).to_radians(),
        yaw: (x[8] * res.angle).to_radians(),
    }
}
