//! Point-mass ballistic flights with piecewise-constant Gaussian wind.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::trajectory::{
    deviation, enu_to_geodetic, write_csv, DeviationWeights, Source, TelemetrySample, Trajectory,
    TrajectoryError,
};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DisengagePolicy {
    #[default]
    None,
    /// Set the flag and cut thrust once the deviation score exceeds `threshold`.
    OnDeviation { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    pub burn_time: f64,
    /// m/s^2 along the launch direction while burning.
    pub thrust_accel: f64,
    /// 1/m, quadratic drag on air-relative velocity.
    pub drag_coeff: f64,
    /// m/s per axis, resampled every second.
    pub wind_gust_sigma: f64,
    pub launch_lat: f64,
    pub launch_lon: f64,
    pub launch_alt: f64,
    /// Degrees above the horizon; 90 is straight up.
    pub launch_elevation: f64,
    /// Degrees clockwise from north.
    pub launch_azimuth: f64,
    pub step: f64,
    pub mission_duration: f64,
    pub disengage_policy: DisengagePolicy,
    /// Weights of the deviation score used by the disengage policy.
    pub weights: DeviationWeights,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 10,
            seed: 42,
            burn_time: 6.0,
            thrust_accel: 40.0,
            drag_coeff: 1e-3,
            wind_gust_sigma: 6.0,
            launch_lat: 54.0,
            launch_lon: 18.0,
            launch_alt: 0.0,
            launch_elevation: 85.0,
            launch_azimuth: 0.0,
            step: 0.001,
            mission_duration: 20.0,
            disengage_policy: DisengagePolicy::None,
            weights: DeviationWeights::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("trajectory {trajectory}: non-finite state at step {step}")]
    NonFinite { trajectory: String, step: usize },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n_trajectories == 0 {
            return bad("n_trajectories must be at least 1".into());
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.mission_duration.is_finite()
            && self.burn_time >= 0.0
            && self.burn_time < self.mission_duration)
        {
            return bad(format!(
                "need 0 <= burn_time < mission_duration, got {} and {}",
                self.burn_time, self.mission_duration
            ));
        }
        let nonneg = [
            ("thrust_accel", self.thrust_accel),
            ("drag_coeff", self.drag_coeff),
            ("wind_gust_sigma", self.wind_gust_sigma),
        ];
        for (name, x) in nonneg {
            if !(x.is_finite() && x >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {x}"));
            }
        }
        if !(-90.0..=90.0).contains(&self.launch_lat)
            || !self.launch_lon.is_finite()
            || !self.launch_alt.is_finite()
        {
            return bad("launch position out of range".into());
        }
        if !(0.0..=90.0).contains(&self.launch_elevation) || !self.launch_azimuth.is_finite() {
            return bad("launch elevation must be in [0, 90] degrees".into());
        }
        if let DisengagePolicy::OnDeviation { threshold } = self.disengage_policy {
            if !(threshold.is_finite() && threshold > 0.0) {
                return bad(format!(
                    "disengage threshold must be positive, got {threshold}"
                ));
            }
        }
        self.weights.validate()?;
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.mission_duration / self.step + 1e-9).floor() as usize
    }

    fn launch_dir(&self) -> [f64; 3] {
        let (el, az) = (
            self.launch_elevation.to_radians(),
            self.launch_azimuth.to_radians(),
        );
        [el.cos() * az.sin(), el.cos() * az.cos(), el.sin()]
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub reference: Trajectory,
    pub trajectories: Vec<Trajectory>,
}

fn sample_of(cfg: &SimConfig, t: f64, p: [f64; 3], v: [f64; 3]) -> TelemetrySample {
    let (lat, lon, alt) = enu_to_geodetic(cfg.launch_lat, cfg.launch_lon, cfg.launch_alt, p);
    let horiz = v[0].hypot(v[1]);
    let (pitch, yaw) = if horiz.hypot(v[2]) < 1e-9 {
        (
            cfg.launch_elevation.to_radians(),
            cfg.launch_azimuth.to_radians(),
        )
    } else if horiz < 1e-9 {
        (v[2].atan2(horiz), cfg.launch_azimuth.to_radians())
    } else {
        (v[2].atan2(horiz), v[0].atan2(v[1]))
    };
    TelemetrySample {
        t,
        v,
        lat,
        lon,
        alt,
        pitch,
        roll: 0.0,
        yaw,
    }
}

/// One semi-implicit Euler run. `wind` yields the gust for each 1 s block;
/// `reference` enables the disengage policy.
fn fly(
    cfg: &SimConfig,
    name: &str,
    mut wind: impl FnMut() -> [f64; 3],
    reference: Option<&Trajectory>,
) -> Result<Trajectory, SimError> {
    let h = cfg.step;
    let dir = cfg.launch_dir();
    let n = cfg.steps();
    let mut p = [0.0; 3];
    let mut v = [0.0; 3];
    let mut gust = [0.0; 3];
    let mut block = usize::MAX;
    let mut thrust_on = true;
    let mut disengage_time = None;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(sample_of(cfg, 0.0, p, v));
    for i in 0..n {
        let t = i as f64 * h;
        let b = (t + 1e-9).floor() as usize;
        if b != block {
            block = b;
            gust = wind();
        }
        let rel = [v[0] - gust[0], v[1] - gust[1], v[2] - gust[2]];
        let speed = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
        let thrust = if thrust_on && t < cfg.burn_time {
            cfg.thrust_accel
        } else {
            0.0
        };
        for j in 0..3 {
            let a = thrust * dir[j]
                - cfg.drag_coeff * speed * rel[j]
                - if j == 2 { GRAVITY } else { 0.0 };
            v[j] += a * h;
            p[j] += v[j] * h;
        }
        if p.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(SimError::NonFinite {
                trajectory: name.to_string(),
                step: i + 1,
            });
        }
        let s = sample_of(cfg, (i + 1) as f64 * h, p, v);
        if let (DisengagePolicy::OnDeviation { threshold }, Some(r), None) =
            (cfg.disengage_policy, reference, disengage_time)
        {
            if deviation(&s, &r.samples[i + 1], &cfg.weights)? > threshold {
                disengage_time = Some(s.t);
                thrust_on = false;
            }
        }
        samples.push(s);
    }
    Ok(Trajectory::new(samples, Source::Synthetic, disengage_time)?)
}

/// The zero-wind run.
pub fn reference(cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    fly(cfg, "reference", || [0.0; 3], None)
}

/// Trajectory `index` of the ensemble; its RNG is seeded with `seed ^ index`.
pub fn trajectory(
    cfg: &SimConfig,
    index: usize,
    reference: &Trajectory,
) -> Result<Trajectory, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ index as u64);
    let normal =
        Normal::new(0.0, cfg.wind_gust_sigma).map_err(|e| SimError::Config(e.to_string()))?;
    let sigma = cfg.wind_gust_sigma;
    let wind = move || {
        if sigma == 0.0 {
            [0.0; 3]
        } else {
            [
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            ]
        }
    };
    fly(cfg, &format!("#{index}"), wind, Some(reference))
}

pub fn generate(cfg: &SimConfig) -> Result<Ensemble, SimError> {
    let reference = reference(cfg)?;
    #[cfg(feature = "parallel")]
    let trajectories = {
        use rayon::prelude::*;
        (0..cfg.n_trajectories)
            .into_par_iter()
            .map(|i| trajectory(cfg, i, &reference))
            .collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let trajectories = (0..cfg.n_trajectories)
        .map(|i| trajectory(cfg, i, &reference))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ensemble {
        reference,
        trajectories,
    })
}

pub fn trajectory_file_name(index: usize) -> String {
    format!("traj_{index:04}.csv")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SimConfig,
    pub reference: String,
    pub trajectories: Vec<String>,
    pub disengaged: usize,
}

/// Writes `traj_NNNN.csv`, `reference.csv` and `manifest.json` into `dir`.
pub fn write_ensemble(dir: &Path, cfg: &SimConfig, ens: &Ensemble) -> Result<Manifest, SimError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| SimError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let write = |name: &str, t: &Trajectory| -> Result<(), SimError> {
        let path = dir.join(name);
        let file = std::fs::File::create(&path).map_err(io(&path))?;
        write_csv(std::io::BufWriter::new(file), t)?;
        Ok(())
    };
    write("reference.csv", &ens.reference)?;
    let mut names = Vec::with_capacity(ens.trajectories.len());
    for (i, t) in ens.trajectories.iter().enumerate() {
        let name = trajectory_file_name(i);
        write(&name, t)?;
        names.push(name);
    }
    let manifest = Manifest {
        config: cfg.clone(),
        reference: "reference.csv".into(),
        trajectories: names,
        disengaged: ens
            .trajectories
            .iter()
            .filter(|t| t.disengage_time.is_some())
            .count(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(io(&path))?;
    Ok(manifest)
}
