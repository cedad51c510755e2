//! Monte-Carlo studies: scenario realisation, sweeps over one variable,
//! aggregation across trials and output files.

mod output;
mod run;

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{dbm_to_watts, KvFile};
use crate::fim::NoiseBlock;
use crate::geometry::{AcousticParams, Dims, Position3D, ScenarioGeometry};
use crate::optimizer::{SolverSettings, Variant};
use crate::{Error, Result};

pub use output::{emit_ellipsoid_outputs, emit_outputs, write_atomic_set, RunMeta};
pub use run::{
    run_ellipsoid_study, run_experiment, run_trial, EllipsoidStudy, ExperimentResult, ResultRecord, TrialOutcome, TrialRow,
    VariantEllipsoid,
};

/// Independent random streams derived from one trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Geometry = 1,
    Channels = 2,
    Initialisation = 3,
    Waveform = 4,
    Noise = 5,
}

/// Seed of a sub-stream of `seed`.
pub fn sub_seed(seed: u64, stream: Stream) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream as u64);
    r.next_u64()
}

/// Receiver placement on the sphere around the receiver centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Random,
    /// Deterministic, evenly spread points.
    Even,
}

/// Everything needed to draw one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: AcousticParams,
    pub seabed_depth_m: f64,
    pub sound_speed_mps: f64,
    pub source: Position3D,
    pub uaris: Position3D,
    pub dims: Dims,
    /// Distance from the source to the receiver centre.
    pub d_sr_m: f64,
    /// Radius of the EN sphere around the receiver centre.
    pub d_er_m: f64,
    /// Radius of the RN sphere around the receiver centre.
    pub rn_radius_m: f64,
    pub placement: Placement,
    pub p_total_w: f64,
    /// Share of the total budget given to the source when a surface is present.
    pub source_share: f64,
    pub xi: f64,
    pub search_size_m: f64,
    pub search_resolution: usize,
    /// Offset of the search cube centre from the source, metres.
    pub search_offset_m: [f64; 3],
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            params: AcousticParams::default(),
            seabed_depth_m: 100.0,
            sound_speed_mps: 1500.0,
            source: Position3D::new(200.7, 140.6, 50.2),
            uaris: Position3D::new(500.0, 210.0, 30.0),
            dims: Dims { antennas: 4, elements: 64, users: 4, eavesdroppers: 4 },
            d_sr_m: 300.0,
            d_er_m: 20.0,
            rn_radius_m: 20.0,
            placement: Placement::Random,
            p_total_w: 1.0,
            source_share: 0.9,
            xi: 0.02,
            search_size_m: 100.0,
            search_resolution: 15,
            search_offset_m: [0.0; 3],
        }
    }
}

/// Margin kept between nodes and the boundaries, metres.
const BOUNDARY_MARGIN: f64 = 1.0;

fn unit_sphere<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn fibonacci_sphere(i: usize, n: usize) -> [f64; 3] {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
    let r = (1.0 - z * z).sqrt();
    let a = golden * i as f64;
    [r * a.cos(), r * a.sin(), z]
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let cfg = |m: &str| Error::Config { line: 0, message: m.to_string() };
        if self.dims.antennas == 0 || self.dims.users == 0 || self.dims.eavesdroppers == 0 || self.dims.elements == 0 {
            return Err(cfg("antennas, elements, users and eavesdroppers must be positive"));
        }
        if !(self.p_total_w > 0.0) {
            return Err(cfg("total power must be positive"));
        }
        if !(self.source_share > 0.0 && self.source_share < 1.0) {
            return Err(cfg("source share must lie strictly between 0 and 1"));
        }
        if !(self.xi >= 0.0 && self.xi < 1.0) {
            return Err(cfg("xi must lie in [0, 1)"));
        }
        if !(self.d_sr_m > 0.0 && self.d_er_m >= 0.0 && self.rn_radius_m >= 0.0) {
            return Err(cfg("distances must be non-negative"));
        }
        if self.search_resolution < 2 || !(self.search_size_m > 0.0) {
            return Err(cfg("search cube needs positive size and resolution >= 2"));
        }
        if !self.search_offset_m.iter().all(|x| x.is_finite()) {
            return Err(cfg("search offset must be finite"));
        }
        let h = self.seabed_depth_m;
        for p in [self.source, self.uaris] {
            if !(p.z >= 0.0 && p.z <= h) {
                return Err(cfg("source and UARIS must lie in the water column"));
            }
        }
        Ok(())
    }

    /// Centre of the receiver sphere.
    pub fn receiver_center(&self) -> Position3D {
        self.clip(self.source.offset([self.d_sr_m, 0.0, 0.0]))
    }

    fn clip(&self, p: Position3D) -> Position3D {
        let h = self.seabed_depth_m;
        Position3D::new(p.x, p.y, p.z.clamp(BOUNDARY_MARGIN, h - BOUNDARY_MARGIN))
    }

    /// Draw receiver and eavesdropper positions for one trial.
    pub fn realize(&self, seed: u64) -> ScenarioGeometry {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = self.receiver_center();
        let k = self.dims.users;
        let receivers = (0..k)
            .map(|i| {
                let u = match self.placement {
                    Placement::Random => unit_sphere(&mut rng),
                    Placement::Even => fibonacci_sphere(i, k),
                };
                self.clip(c.offset(u.map(|x| x * self.rn_radius_m)))
            })
            .collect();
        let eavesdroppers = (0..self.dims.eavesdroppers)
            .map(|_| {
                let u = unit_sphere(&mut rng);
                self.clip(c.offset(u.map(|x| x * self.d_er_m)))
            })
            .collect();
        ScenarioGeometry {
            source: self.source,
            uaris: self.uaris,
            receivers,
            eavesdroppers,
            seabed_depth_m: self.seabed_depth_m,
            sound_speed_mps: self.sound_speed_mps,
        }
    }

    /// Copy with one sweep variable replaced.
    pub fn with_value(&self, var: SweepVariable, value: f64) -> Result<Self> {
        let mut s = self.clone();
        match var {
            SweepVariable::DSr => s.d_sr_m = value,
            SweepVariable::Xi => s.xi = value,
            SweepVariable::PTotalDbm => s.p_total_w = dbm_to_watts(value),
            SweepVariable::Elements => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config { line: 0, message: format!("element count must be a positive integer, got {value}") });
                }
                s.dims.elements = value as usize;
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Current value of a sweep variable.
    pub fn value(&self, var: SweepVariable) -> f64 {
        match var {
            SweepVariable::DSr => self.d_sr_m,
            SweepVariable::Xi => self.xi,
            SweepVariable::PTotalDbm => 10.0 * self.p_total_w.log10() + 30.0,
            SweepVariable::Elements => self.dims.elements as f64,
        }
    }
}

/// Variable varied across a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    DSr,
    Xi,
    PTotalDbm,
    Elements,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "d_sr" | "d_sr_m" => Some(Self::DSr),
            "xi" => Some(Self::Xi),
            "p_total" | "p_total_dbm" => Some(Self::PTotalDbm),
            "elements" | "M" | "m" => Some(Self::Elements),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::DSr => "d_sr_m",
            Self::Xi => "xi",
            Self::PTotalDbm => "p_total_dbm",
            Self::Elements => "elements",
        }
    }
}

/// A full study description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub sweep_variable: SweepVariable,
    /// Ascending sweep values; a single value when nothing is swept.
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub variants: Vec<Variant>,
    pub root_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub settings: SolverSettings,
    /// Evaluate the CRLB at every trial.
    pub compute_crlb: bool,
    pub noise_block: NoiseBlock,
    /// Number of localization runs in the ellipsoid study.
    pub estimates: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let scenario = Scenario::default();
        Self {
            sweep_values: vec![scenario.d_sr_m],
            scenario,
            sweep_variable: SweepVariable::DSr,
            trials: 100,
            variants: Variant::ALL.to_vec(),
            root_seed: 1,
            output_dir: PathBuf::from("out"),
            workers: 0,
            settings: SolverSettings::default(),
            compute_crlb: true,
            noise_block: NoiseBlock::Gaussian,
            estimates: 200,
        }
    }
}

const KEYS: &[&str] = &[
    "freq_khz",
    "prop_factor",
    "seabed_reflection",
    "bg_noise_dbm",
    "an_base_dbm",
    "sample_interval_s",
    "n_samples",
    "sound_speed_mps",
    "seabed_depth_m",
    "pos_source",
    "pos_uaris",
    "antennas",
    "elements",
    "users",
    "eavesdroppers",
    "d_sr_m",
    "d_er_m",
    "rn_radius_m",
    "placement",
    "p_total_dbm",
    "power_split",
    "xi",
    "search_size_m",
    "search_resolution",
    "search_offset_m",
    "sweep",
    "sweep_values",
    "trials",
    "variants",
    "root_seed",
    "output_dir",
    "workers",
    "max_iters",
    "rel_tol",
    "mu_tol",
    "qcqp_tol",
    "crlb",
    "noise_block",
    "estimates",
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::load(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KvFile::parse(text)?)
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.reject_unknown(KEYS)?;
        let d = Self::default();
        let ds = &d.scenario;
        let bad = |key: &str, m: String| Error::Config { line: kv.line(key), message: m };
        let params = AcousticParams {
            freq_khz: kv.get_or("freq_khz", ds.params.freq_khz)?,
            prop_factor: kv.get_or("prop_factor", ds.params.prop_factor)?,
            seabed_reflection: kv.get_or("seabed_reflection", ds.params.seabed_reflection)?,
            bg_noise_power: kv.get::<f64>("bg_noise_dbm")?.map_or(ds.params.bg_noise_power, dbm_to_watts),
            an_base_power: kv.get::<f64>("an_base_dbm")?.map_or(ds.params.an_base_power, dbm_to_watts),
            sample_interval_s: kv.get_or("sample_interval_s", ds.params.sample_interval_s)?,
            n_samples: kv.get_or("n_samples", ds.params.n_samples)?,
        };
        let placement = match kv.raw("placement") {
            None | Some("random") => Placement::Random,
            Some("even") => Placement::Even,
            Some(o) => return Err(bad("placement", format!("placement must be `random` or `even`, got `{o}`"))),
        };
        let (source_share, uaris_share) = match kv.list::<f64>("power_split")? {
            None => (ds.source_share, 1.0 - ds.source_share),
            Some(v) if v.len() == 2 => (v[0], v[1]),
            Some(_) => return Err(bad("power_split", "power_split needs two fractions".into())),
        };
        if (source_share + uaris_share - 1.0).abs() > 1e-9 {
            return Err(bad("power_split", "power fractions must sum to 1".into()));
        }
        let scenario = Scenario {
            params,
            seabed_depth_m: kv.get_or("seabed_depth_m", ds.seabed_depth_m)?,
            sound_speed_mps: kv.get_or("sound_speed_mps", ds.sound_speed_mps)?,
            source: kv.position("pos_source")?.unwrap_or(ds.source),
            uaris: kv.position("pos_uaris")?.unwrap_or(ds.uaris),
            dims: Dims {
                antennas: kv.get_or("antennas", ds.dims.antennas)?,
                elements: kv.get_or("elements", ds.dims.elements)?,
                users: kv.get_or("users", ds.dims.users)?,
                eavesdroppers: kv.get_or("eavesdroppers", ds.dims.eavesdroppers)?,
            },
            d_sr_m: kv.get_or("d_sr_m", ds.d_sr_m)?,
            d_er_m: kv.get_or("d_er_m", ds.d_er_m)?,
            rn_radius_m: kv.get_or("rn_radius_m", ds.rn_radius_m)?,
            placement,
            p_total_w: kv.get::<f64>("p_total_dbm")?.map_or(ds.p_total_w, dbm_to_watts),
            source_share,
            xi: kv.get_or("xi", ds.xi)?,
            search_size_m: kv.get_or("search_size_m", ds.search_size_m)?,
            search_resolution: kv.get_or("search_resolution", ds.search_resolution)?,
            search_offset_m: kv.position("search_offset_m")?.map_or(ds.search_offset_m, Position3D::to_array),
        };
        scenario.validate().map_err(|e| match e {
            Error::Config { message, .. } => Error::Config { line: 0, message },
            other => Error::Config { line: 0, message: other.to_string() },
        })?;
        let sweep_variable = match kv.raw("sweep") {
            None => SweepVariable::DSr,
            Some(s) => SweepVariable::parse(s).ok_or_else(|| bad("sweep", format!("unknown sweep variable `{s}`")))?,
        };
        let sweep_values = match kv.list::<f64>("sweep_values")? {
            None => {
                if kv.raw("sweep").is_some() {
                    return Err(bad("sweep", "sweep needs sweep_values".into()));
                }
                vec![scenario.value(sweep_variable)]
            }
            Some(v) => v,
        };
        if sweep_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(bad("sweep_values", "sweep values must be strictly ascending".into()));
        }
        for &v in &sweep_values {
            scenario.with_value(sweep_variable, v).map_err(|e| bad("sweep_values", e.to_string()))?;
        }
        let variants = match kv.list::<String>("variants")? {
            None => d.variants.clone(),
            Some(v) => v
                .iter()
                .map(|s| Variant::parse(s).ok_or_else(|| bad("variants", format!("unknown variant `{s}`"))))
                .collect::<Result<Vec<_>>>()?,
        };
        if variants.is_empty() {
            return Err(bad("variants", "at least one variant required".into()));
        }
        let trials: usize = kv.get_or("trials", d.trials)?;
        if trials == 0 {
            return Err(bad("trials", "trials must be at least 1".into()));
        }
        let settings = SolverSettings {
            max_iters: kv.get_or("max_iters", d.settings.max_iters)?,
            rel_tol: kv.get_or("rel_tol", d.settings.rel_tol)?,
            mu_tol: kv.get_or("mu_tol", d.settings.mu_tol)?,
            qcqp_tol: kv.get_or("qcqp_tol", d.settings.qcqp_tol)?,
            seed: 0,
        };
        let noise_block = match kv.raw("noise_block") {
            None | Some("gaussian") => NoiseBlock::Gaussian,
            Some("literal") => NoiseBlock::LiteralCount,
            Some(o) => return Err(bad("noise_block", format!("noise_block must be `gaussian` or `literal`, got `{o}`"))),
        };
        Ok(Self {
            scenario,
            sweep_variable,
            sweep_values,
            trials,
            variants,
            root_seed: kv.get_or("root_seed", d.root_seed)?,
            output_dir: kv.get::<String>("output_dir")?.map_or(d.output_dir, PathBuf::from),
            workers: kv.get_or("workers", d.workers)?,
            settings,
            compute_crlb: kv.get_or("crlb", d.compute_crlb)?,
            noise_block,
            estimates: kv.get_or("estimates", d.estimates)?,
        })
    }

    /// Canonical `key = value` rendering, used in the run metadata.
    pub fn render(&self) -> String {
        let s = &self.scenario;
        let p = &s.params;
        let pos = |p: Position3D| format!("{},{},{}", p.x, p.y, p.z);
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let lines = [
            format!("freq_khz = {}", p.freq_khz),
            format!("prop_factor = {}", p.prop_factor),
            format!("seabed_reflection = {}", p.seabed_reflection),
            format!("bg_noise_dbm = {}", 10.0 * p.bg_noise_power.log10() + 30.0),
            format!("an_base_dbm = {}", 10.0 * p.an_base_power.log10() + 30.0),
            format!("sample_interval_s = {}", p.sample_interval_s),
            format!("n_samples = {}", p.n_samples),
            format!("sound_speed_mps = {}", s.sound_speed_mps),
            format!("seabed_depth_m = {}", s.seabed_depth_m),
            format!("pos_source = {}", pos(s.source)),
            format!("pos_uaris = {}", pos(s.uaris)),
            format!("antennas = {}", s.dims.antennas),
            format!("elements = {}", s.dims.elements),
            format!("users = {}", s.dims.users),
            format!("eavesdroppers = {}", s.dims.eavesdroppers),
            format!("d_sr_m = {}", s.d_sr_m),
            format!("d_er_m = {}", s.d_er_m),
            format!("rn_radius_m = {}", s.rn_radius_m),
            format!("placement = {}", if s.placement == Placement::Even { "even" } else { "random" }),
            format!("p_total_dbm = {}", 10.0 * s.p_total_w.log10() + 30.0),
            format!("power_split = {},{}", s.source_share, 1.0 - s.source_share),
            format!("xi = {}", s.xi),
            format!("search_size_m = {}", s.search_size_m),
            format!("search_resolution = {}", s.search_resolution),
            format!("search_offset_m = {}", pos(Position3D::from_array(s.search_offset_m))),
            format!("sweep = {}", self.sweep_variable.name()),
            format!("sweep_values = {}", join(&self.sweep_values)),
            format!("trials = {}", self.trials),
            format!("variants = {}", self.variants.iter().map(|v| v.label()).collect::<Vec<_>>().join(",")),
            format!("root_seed = {}", self.root_seed),
            format!("max_iters = {}", self.settings.max_iters),
            format!("rel_tol = {}", self.settings.rel_tol),
            format!("mu_tol = {}", self.settings.mu_tol),
            format!("qcqp_tol = {}", self.settings.qcqp_tol),
            format!("crlb = {}", self.compute_crlb),
            format!("noise_block = {}", if self.noise_block == NoiseBlock::Gaussian { "gaussian" } else { "literal" }),
            format!("estimates = {}", self.estimates),
        ];
        lines.join("\n") + "\n"
    }
}
