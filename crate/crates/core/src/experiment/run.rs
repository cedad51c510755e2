use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{sub_seed, ExperimentConfig, Scenario, Stream};
use crate::downlink::{sum_rate, LinkTerms, ObjectiveWeights};
use crate::eavesdropper::{coefficient_matrix, noise_variances, synthesize_observation, ObservationModel, Waveform};
use crate::fim::{crlb, Ellipsoid, FimModel, NoiseBlock, ParameterVector};
use crate::geometry::{synthesize_channels, ChannelSet, Position3D, ScenarioGeometry};
use crate::optimizer::{optimize, OptimizerState, Problem, SolverSettings, Variant};
use crate::sbl::{Localizer, SearchRegion};
use crate::{Error, Result};

/// Metrics of one successful trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub sum_rate: f64,
    pub truth: Position3D,
    pub estimate: Position3D,
    /// Position CRLB trace; NaN when not computed.
    pub crlb_position_bound: f64,
    pub eta: f64,
    pub iterations: usize,
}

impl TrialOutcome {
    pub fn miss(&self) -> f64 {
        self.truth.distance(self.estimate)
    }
}

/// One trial of one variant at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub sweep_index: usize,
    pub variant: Variant,
    pub trial: usize,
    /// Error cause label on failure.
    pub outcome: std::result::Result<TrialOutcome, String>,
}

/// Aggregate of all trials of one variant at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub sweep_value: f64,
    pub variant: Variant,
    pub mean_sum_rate: f64,
    pub stderr_sum_rate: f64,
    pub rms_miss_distance: f64,
    pub stderr_rms_miss: f64,
    pub mean_crlb_position_bound: f64,
    pub mean_eta: f64,
    pub trials_used: usize,
    /// Failure counts keyed by cause.
    pub failures: BTreeMap<String, usize>,
}

impl ResultRecord {
    pub fn failures_total(&self) -> usize {
        self.failures.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<ResultRecord>,
    pub trials: Vec<TrialRow>,
}

impl ExperimentResult {
    /// Successful outcomes of one variant at one sweep point, indexed by trial.
    pub fn outcomes(&self, sweep_index: usize, variant: Variant) -> Vec<Option<&TrialOutcome>> {
        let mut v: Vec<(usize, Option<&TrialOutcome>)> = self
            .trials
            .iter()
            .filter(|r| r.sweep_index == sweep_index && r.variant == variant)
            .map(|r| (r.trial, r.outcome.as_ref().ok()))
            .collect();
        v.sort_by_key(|x| x.0);
        v.into_iter().map(|x| x.1).collect()
    }
}

/// Scenario realisation and channels shared by all variants of a trial.
pub(crate) struct TrialSetup {
    pub geom: ScenarioGeometry,
    pub channels: ChannelSet,
}

pub(crate) fn setup_trial(sc: &Scenario, trial_seed: u64) -> Result<TrialSetup> {
    let geom = sc.realize(sub_seed(trial_seed, Stream::Geometry));
    let channels = synthesize_channels(&geom, &sc.params, sc.dims, sub_seed(trial_seed, Stream::Channels))?;
    Ok(TrialSetup { geom, channels })
}

pub(crate) fn optimize_variant(sc: &Scenario, ch: &ChannelSet, variant: Variant, settings: &SolverSettings, trial_seed: u64) -> Result<OptimizerState> {
    let (ps, pu) = variant.budgets(sc.p_total_w, sc.source_share);
    let weights = ObjectiveWeights::new(sc.xi, ps, pu)?;
    let problem = Problem { channels: ch, weights, sigma2: sc.params.bg_noise_power, an_base_power: sc.params.an_base_power };
    let settings = SolverSettings { seed: sub_seed(trial_seed, Stream::Initialisation), ..*settings };
    optimize(&problem, &settings, variant)
}

/// Everything the eavesdroppers see at an operating point.
pub(crate) struct EnView {
    pub model: ObservationModel,
    pub params: ParameterVector,
}

pub(crate) fn en_view(sc: &Scenario, setup: &TrialSetup, st: &OptimizerState, waveform: Waveform) -> Result<EnView> {
    let model = ObservationModel::new(&setup.geom, &sc.params);
    let coeffs = coefficient_matrix(&setup.channels, &st.reflection, &st.bf, &setup.geom, &sc.params)?;
    let vars = noise_variances(&setup.channels, &st.reflection, sc.params.bg_noise_power);
    Ok(EnView {
        model,
        params: ParameterVector { position: setup.geom.source, waveform, coeffs, noise_variances: vars },
    })
}

pub(crate) fn localize_once(sc: &Scenario, view: &EnView, noise_seed: u64) -> Result<Position3D> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let p = &view.params;
    let obs = synthesize_observation(&view.model, p.position, &p.coeffs, &p.waveform, &p.noise_variances, &mut rng)?;
    let region = SearchRegion::cube(p.position.offset(sc.search_offset_m), sc.search_size_m, sc.search_resolution);
    Ok(Localizer::new(&view.model).localize(&obs, &region)?.estimate)
}

/// Run one variant on one trial.
pub fn run_trial(sc: &Scenario, variant: Variant, settings: &SolverSettings, trial_seed: u64, compute_crlb: bool, noise_block: NoiseBlock) -> Result<TrialOutcome> {
    let setup = setup_trial(sc, trial_seed)?;
    let st = optimize_variant(sc, &setup.channels, variant, settings, trial_seed)?;
    let lt = LinkTerms::new(&setup.channels, &st.reflection, &st.bf, sc.params.bg_noise_power)?;
    let rate = sum_rate(&lt.sinrs());
    let mut wrng = ChaCha8Rng::seed_from_u64(sub_seed(trial_seed, Stream::Waveform));
    let waveform = Waveform::random(sc.params.n_samples, &mut wrng);
    let view = en_view(sc, &setup, &st, waveform)?;
    let estimate = localize_once(sc, &view, sub_seed(trial_seed, Stream::Noise))?;
    let bound = if compute_crlb {
        let fim = FimModel::new(&view.model).build(&view.params, noise_block)?;
        crlb(&fim)?.position_bound
    } else {
        f64::NAN
    };
    Ok(TrialOutcome {
        sum_rate: rate,
        truth: setup.geom.source,
        estimate,
        crlb_position_bound: bound,
        eta: st.reflection.noise_factor,
        iterations: st.iterations,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))
}

/// Run every sweep value x variant x trial and aggregate.
///
/// Trial `t` uses seed `root_seed + t` for every variant and sweep value, so
/// comparisons are paired. Failed trials are counted, never imputed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let scenarios = cfg
        .sweep_values
        .iter()
        .map(|&v| cfg.scenario.with_value(cfg.sweep_variable, v))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (si, _) in scenarios.iter().enumerate() {
        for &variant in &cfg.variants {
            for trial in 0..cfg.trials {
                jobs.push((si, variant, trial));
            }
        }
    }
    let rows: Vec<TrialRow> = pool(cfg.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(si, variant, trial)| {
                let seed = cfg.root_seed.wrapping_add(trial as u64);
                let outcome = run_trial(&scenarios[si], variant, &cfg.settings, seed, cfg.compute_crlb, cfg.noise_block)
                    .map_err(|e| e.cause().to_string());
                TrialRow { sweep_index: si, variant, trial, outcome }
            })
            .collect()
    });
    let mut records = Vec::new();
    for (si, &value) in cfg.sweep_values.iter().enumerate() {
        for &variant in &cfg.variants {
            let subset: Vec<&TrialRow> = rows.iter().filter(|r| r.sweep_index == si && r.variant == variant).collect();
            records.push(aggregate(value, variant, &subset));
        }
    }
    Ok(ExperimentResult { records, trials: rows })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn stderr(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub(crate) fn aggregate(value: f64, variant: Variant, rows: &[&TrialRow]) -> ResultRecord {
    let ok: Vec<&TrialOutcome> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let mut failures = BTreeMap::new();
    for r in rows {
        if let Err(c) = &r.outcome {
            *failures.entry(c.clone()).or_insert(0) += 1;
        }
    }
    let rates: Vec<f64> = ok.iter().map(|o| o.sum_rate).collect();
    let sq: Vec<f64> = ok.iter().map(|o| o.miss().powi(2)).collect();
    let rms = mean(&sq).sqrt();
    // delta method on sqrt of the mean squared miss
    let rms_se = if rms > 0.0 { stderr(&sq) / (2.0 * rms) } else { 0.0 };
    ResultRecord {
        sweep_value: value,
        variant,
        mean_sum_rate: mean(&rates),
        stderr_sum_rate: stderr(&rates),
        rms_miss_distance: rms,
        stderr_rms_miss: rms_se,
        mean_crlb_position_bound: mean(&ok.iter().map(|o| o.crlb_position_bound).collect::<Vec<_>>()),
        mean_eta: mean(&ok.iter().map(|o| o.eta).collect::<Vec<_>>()),
        trials_used: ok.len(),
        failures,
    }
}

/// CRLB ellipsoid and localization scatter of one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantEllipsoid {
    pub variant: Variant,
    pub ellipsoid: Ellipsoid,
    pub position_bound: f64,
    pub ill_conditioned: bool,
    pub estimates: Vec<Position3D>,
    /// Failure causes of localization runs that produced no estimate.
    pub failures: BTreeMap<String, usize>,
    /// Fraction of estimates inside the ellipsoid.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidStudy {
    pub truth: Position3D,
    pub variants: Vec<VariantEllipsoid>,
}

/// Fixed scenario (trial 0), one optimisation per variant, then repeated
/// localization with fresh waveform and noise draws.
pub fn run_ellipsoid_study(cfg: &ExperimentConfig) -> Result<EllipsoidStudy> {
    if cfg.sweep_values.len() != 1 {
        return Err(Error::Config { line: 0, message: "the ellipsoid study takes a fixed scenario".into() });
    }
    if cfg.estimates == 0 {
        return Err(Error::Config { line: 0, message: "estimates must be at least 1".into() });
    }
    let sc = cfg.scenario.with_value(cfg.sweep_variable, cfg.sweep_values[0])?;
    let seed = cfg.root_seed;
    let setup = setup_trial(&sc, seed)?;
    let workers = pool(cfg.workers)?;
    let mut variants = Vec::new();
    for &variant in &cfg.variants {
        let st = optimize_variant(&sc, &setup.channels, variant, &cfg.settings, seed)?;
        let mut wrng = ChaCha8Rng::seed_from_u64(sub_seed(seed, Stream::Waveform));
        let view = en_view(&sc, &setup, &st, Waveform::random(sc.params.n_samples, &mut wrng))?;
        let bound = crlb(&FimModel::new(&view.model).build(&view.params, cfg.noise_block)?)?;
        let runs: Vec<std::result::Result<Position3D, String>> = workers.install(|| {
            (0..cfg.estimates)
                .into_par_iter()
                .map(|e| {
                    let s = seed.wrapping_add(1 + e as u64);
                    let mut wr = ChaCha8Rng::seed_from_u64(sub_seed(s, Stream::Waveform));
                    let mut v = EnView { model: view.model.clone(), params: view.params.clone() };
                    v.params.waveform = Waveform::random(sc.params.n_samples, &mut wr);
                    localize_once(&sc, &v, sub_seed(s, Stream::Noise)).map_err(|e| e.cause().to_string())
                })
                .collect()
        });
        let mut failures = BTreeMap::new();
        let mut estimates = Vec::new();
        for r in runs {
            match r {
                Ok(p) => estimates.push(p),
                Err(c) => *failures.entry(c).or_insert(0) += 1,
            }
        }
        let inside = estimates.iter().filter(|p| bound.ellipsoid.contains(**p)).count();
        let coverage = if estimates.is_empty() { f64::NAN } else { inside as f64 / estimates.len() as f64 };
        variants.push(VariantEllipsoid {
            variant,
            ellipsoid: bound.ellipsoid.clone(),
            position_bound: bound.position_bound,
            ill_conditioned: bound.ill_conditioned,
            estimates,
            failures,
            coverage,
        });
    }
    Ok(EllipsoidStudy { truth: setup.geom.source, variants })
}
