//! Fractional-programming alternating ascent on the surrogate objective.
//!
//! Each outer iteration refreshes the auxiliary variables `zeta` and `chi`
//! in closed form, then updates `eta`, the beamformers and the reflection
//! vector, each maximizing the surrogate with the others fixed. With the
//! auxiliaries at their optimum the surrogate equals R3, so the recorded R3
//! sequence is non-decreasing.

pub mod qcqp;

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::downlink::{r3_from_terms, r4_from_terms, BeamformerSet, LinkTerms, ObjectiveWeights};
use crate::geometry::ChannelSet;
use crate::linalg::{hermitian_eigen, secular_root, CMatrix, CVector, C64};
use crate::uaris::{weighted_gain, ReflectionConfig};
use crate::{Error, Result};
pub use qcqp::{BlockQcqp, QcqpSolution};

/// Allowed decrease of R3 between iterations before the run is aborted.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Fraction of the UARIS budget used by the initial reflection vector.
pub const INITIAL_UARIS_LOAD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iters: usize,
    /// Relative change of R3 that ends the ascent.
    pub rel_tol: f64,
    /// Relative accuracy of the reflection-budget multiplier.
    pub mu_tol: f64,
    /// Relative accuracy of the beamformer second budget.
    pub qcqp_tol: f64,
    /// Seed of the random initial reflection phases.
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { max_iters: 100, rel_tol: 1e-4, mu_tol: 1e-6, qcqp_tol: 1e-6, seed: 0 }
    }
}

/// Compared schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// No surface: reflection pinned to zero, all power at the source.
    NoSurface,
    /// Surface with fixed noise amplification `eta = 1`.
    FixedNoise,
    /// Joint optimisation of beamformers, reflection and noise amplification.
    Proposed,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::NoSurface, Variant::FixedNoise, Variant::Proposed];

    pub fn label(self) -> &'static str {
        match self {
            Variant::NoSurface => "M1",
            Variant::FixedNoise => "M2",
            Variant::Proposed => "M3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "M1" | "m1" | "no_surface" => Some(Variant::NoSurface),
            "M2" | "m2" | "fixed_noise" => Some(Variant::FixedNoise),
            "M3" | "m3" | "proposed" => Some(Variant::Proposed),
            _ => None,
        }
    }

    /// Split a total budget into source and UARIS budgets.
    pub fn budgets(self, p_total: f64, source_share: f64) -> (f64, f64) {
        match self {
            Variant::NoSurface => (p_total, 0.0),
            _ => (source_share * p_total, (1.0 - source_share) * p_total),
        }
    }
}

/// Fixed data of one optimisation.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub channels: &'a ChannelSet,
    pub weights: ObjectiveWeights,
    /// Background noise power at the RNs.
    pub sigma2: f64,
    /// Base artificial-noise power per element.
    pub an_base_power: f64,
}

impl Problem<'_> {
    fn terms(&self, bf: &BeamformerSet, refl: &ReflectionConfig) -> Result<LinkTerms> {
        LinkTerms::new(self.channels, refl, bf, self.sigma2)
    }

    fn gain(&self, refl: &ReflectionConfig) -> f64 {
        refl.noise_power().powf(self.weights.xi)
    }

    pub fn r3(&self, bf: &BeamformerSet, refl: &ReflectionConfig) -> Result<f64> {
        Ok(r3_from_terms(&self.terms(bf, refl)?, self.gain(refl)))
    }

    pub fn r4(&self, bf: &BeamformerSet, refl: &ReflectionConfig, zeta: &[f64], chi: &[C64]) -> Result<f64> {
        Ok(r4_from_terms(&self.terms(bf, refl)?, self.gain(refl), zeta, chi))
    }

    /// Reflected signal power `sum_k ||Theta H w_k||^2`.
    pub fn reflected_power(&self, bf: &BeamformerSet, theta: &CVector) -> f64 {
        bf.w.iter().map(|w| theta.component_mul(&(&self.channels.h_su * w)).norm_squared()).sum()
    }
}

/// One row of the optimizer trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub r3: f64,
    pub r4: f64,
    pub eta: f64,
    pub source_power: f64,
    pub uaris_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub bf: BeamformerSet,
    pub reflection: ReflectionConfig,
    pub zeta: Vec<f64>,
    pub chi: Vec<C64>,
    /// R3 at initialisation and after every iteration.
    pub r3_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    /// Set when an eta update saw a non-positive linear coefficient.
    pub eta_base_nonpositive: bool,
    /// Number of beamformer or reflection updates rejected by the ascent guard.
    pub rejected_updates: usize,
}

/// `zeta_k = c |y_kk|^2 / (interference_k + noise_k)`.
pub fn update_zeta(p: &Problem, bf: &BeamformerSet, refl: &ReflectionConfig) -> Result<Vec<f64>> {
    let lt = p.terms(bf, refl)?;
    let c = p.gain(refl);
    Ok((0..lt.users()).map(|k| c * lt.sinr(k)).collect())
}

/// `chi_k = sqrt(c (1 + zeta_k)) y_kk / (c |y_kk|^2 + interference_k + noise_k)`.
pub fn update_chi(p: &Problem, bf: &BeamformerSet, refl: &ReflectionConfig, zeta: &[f64]) -> Result<Vec<C64>> {
    let lt = p.terms(bf, refl)?;
    let c = p.gain(refl);
    Ok((0..lt.users())
        .map(|k| {
            let y = lt.y[(k, k)];
            let den = c * y.norm_sqr() + lt.interference(k) + lt.noise[k];
            y * ((c * (1.0 + zeta[k])).sqrt() / den)
        })
        .collect())
}

/// Where the eta update landed relative to its feasible interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaClamp {
    Interior,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaUpdate {
    pub eta: f64,
    /// Unconstrained maximizer of the surrogate in eta (may be infinite or zero).
    pub stationary: f64,
    pub clamp: EtaClamp,
    /// The linear coefficient was not positive, so the surrogate decreases in eta.
    pub base_nonpositive: bool,
    /// The reflection vector is zero and the UARIS budget does not involve eta.
    pub budget_vacuous: bool,
}

/// Coefficients of the eta-dependent part `a e^{xi/2} - d e^{xi} - b e`.
pub fn eta_coefficients(p: &Problem, bf: &BeamformerSet, refl: &ReflectionConfig, zeta: &[f64], chi: &[C64]) -> Result<(f64, f64, f64)> {
    let lt = p.terms(bf, refl)?;
    let xi = p.weights.xi;
    let sv = refl.an_base_power;
    let svx = sv.powf(xi);
    let (mut a, mut d, mut b) = (0.0, 0.0, 0.0);
    for k in 0..lt.users() {
        let y = lt.y[(k, k)];
        a += 2.0 * (svx * (1.0 + zeta[k])).sqrt() * (chi[k].conj() * y).re;
        d += chi[k].norm_sqr() * svx * y.norm_sqr();
        b += chi[k].norm_sqr() * weighted_gain(&refl.theta, &p.channels.g_ru[k]) * sv;
    }
    Ok((a, d, b))
}

/// Unconstrained maximizer of `a e^{xi/2} - d e^{xi} - b e` over `e > 0`.
pub fn eta_stationary(a: f64, d: f64, b: f64, xi: f64) -> f64 {
    if !(a > 0.0) {
        return 0.0;
    }
    if d <= 0.0 && b <= 0.0 {
        return f64::INFINITY;
    }
    if d <= 0.0 {
        return (2.0 * b / (xi * a)).powf(2.0 / (xi - 2.0));
    }
    // derivative times e^{1 - xi/2}, decreasing in e
    let phi = |t: f64| {
        let e = t.exp();
        0.5 * xi * a - xi * d * (0.5 * xi * t).exp() - b * e.powf(1.0 - 0.5 * xi)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while phi(lo) <= 0.0 && lo > -1e4 {
        lo *= 2.0;
    }
    while phi(hi) > 0.0 && hi < 1e4 {
        hi *= 2.0;
    }
    if phi(hi) > 0.0 {
        return f64::INFINITY;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Maximize the surrogate over `eta` in `[1, eta_max]`.
pub fn update_eta(p: &Problem, bf: &BeamformerSet, refl: &ReflectionConfig, zeta: &[f64], chi: &[C64]) -> Result<EtaUpdate> {
    let (a, d, b) = eta_coefficients(p, bf, refl, zeta, chi)?;
    let stationary = eta_stationary(a, d, b, p.weights.xi);
    let theta_sq = refl.theta.norm_squared();
    let budget_vacuous = theta_sq == 0.0 || refl.an_base_power == 0.0;
    let cap = if budget_vacuous {
        f64::INFINITY
    } else {
        (p.weights.p_u_max - p.reflected_power(bf, &refl.theta)) / (theta_sq * refl.an_base_power)
    };
    let (eta, clamp) = if stationary < 1.0 {
        (1.0, EtaClamp::Lower)
    } else if stationary > cap {
        (cap.max(1.0), EtaClamp::Upper)
    } else {
        (stationary, EtaClamp::Interior)
    };
    if !eta.is_finite() {
        return Err(Error::Domain("noise amplification is unbounded".into()));
    }
    Ok(EtaUpdate { eta, stationary, clamp, base_nonpositive: !(a > 0.0), budget_vacuous })
}

/// Beamformer subproblem for the current auxiliaries.
pub fn beamformer_qcqp(p: &Problem, bf: &BeamformerSet, refl: &ReflectionConfig, zeta: &[f64], chi: &[C64]) -> Result<BlockQcqp> {
    let lt = p.terms(bf, refl)?;
    let c = p.gain(refl);
    let k_users = lt.users();
    let t = p.channels.antennas();
    let alpha = (0..k_users).map(|k| &lt.eff[k] * (chi[k] * (c * (1.0 + zeta[k])).sqrt())).collect();
    let outer: Vec<CMatrix> = lt.eff.iter().map(|h| h * h.adjoint()).collect();
    let b = (0..k_users)
        .map(|a| {
            let mut m = CMatrix::zeros(t, t);
            for k in 0..k_users {
                let rho = if k == a { c } else { 1.0 };
                m += &outer[k] * C64::from(chi[k].norm_sqr() * rho);
            }
            m
        })
        .collect();
    let th = CMatrix::from_diagonal(&refl.theta) * &p.channels.h_su;
    let c0 = th.ad_mul(&th);
    let p2 = p.weights.p_u_max - refl.an_output_power();
    Ok(BlockQcqp { alpha, b, c: vec![c0; k_users], p1: p.weights.p_s_max, p2 })
}

/// Beamformer update; keeps `bf` if the surrogate would not increase.
pub fn update_w(
    p: &Problem,
    bf: &BeamformerSet,
    refl: &ReflectionConfig,
    zeta: &[f64],
    chi: &[C64],
    settings: &SolverSettings,
) -> Result<(BeamformerSet, bool)> {
    let q = beamformer_qcqp(p, bf, refl, zeta, chi)?;
    let sol = q.solve(settings.qcqp_tol)?;
    let cand = BeamformerSet::new(sol.w);
    if p.r4(&cand, refl, zeta, chi)? >= p.r4(bf, refl, zeta, chi)? {
        Ok((cand, true))
    } else {
        Ok((bf.clone(), false))
    }
}

/// Quadratic model of the surrogate in `theta`: `2 Re(theta^H v) - theta^H L theta`
/// with the budget `theta^H Diag(psi) theta <= P_U`.
#[derive(Debug, Clone)]
pub struct ReflectionSubproblem {
    pub v: CVector,
    pub lambda: CMatrix,
    pub psi: Vec<f64>,
    pub budget: f64,
}

impl ReflectionSubproblem {
    pub fn new(p: &Problem, bf: &BeamformerSet, refl: &ReflectionConfig, zeta: &[f64], chi: &[C64]) -> Result<Self> {
        let ch = p.channels;
        let k_users = ch.users();
        let m = ch.elements();
        let c = p.gain(refl);
        let np = refl.noise_power();
        let hw: Vec<CVector> = bf.w.iter().map(|w| &ch.h_su * w).collect();
        let mut v = CVector::zeros(m);
        let mut lambda = CMatrix::zeros(m, m);
        for k in 0..k_users {
            let gk_conj = ch.g_ru[k].map(|x| x.conj());
            let x2 = chi[k].norm_sqr();
            for a in 0..k_users {
                let bka = gk_conj.component_mul(&hw[a]);
                let eka = ch.h_direct[k].dotc(&bf.w[a]);
                let rho = if k == a { c } else { 1.0 };
                let bc = bka.map(|x| x.conj());
                if k == a {
                    v += &bc * (chi[k] * (c * (1.0 + zeta[k])).sqrt());
                }
                v -= &bc * (eka * (x2 * rho));
                lambda.ger(C64::from(x2 * rho), &bc, &bka, C64::from(1.0));
            }
            for i in 0..m {
                lambda[(i, i)] += C64::from(x2 * np * ch.g_ru[k][i].norm_sqr());
            }
        }
        let psi = (0..m).map(|i| hw.iter().map(|h| h[i].norm_sqr()).sum::<f64>() + np).collect();
        Ok(Self { v, lambda, psi, budget: p.weights.p_u_max })
    }

    pub fn value(&self, theta: &CVector) -> f64 {
        2.0 * theta.dotc(&self.v).re - theta.dotc(&(&self.lambda * theta)).re
    }

    pub fn load(&self, theta: &CVector) -> f64 {
        theta.iter().zip(&self.psi).map(|(t, p)| t.norm_sqr() * p).sum()
    }
}

/// `theta = (L + mu Diag(psi))^{-1} v` with `mu >= 0` chosen by bisection.
///
/// Returns `mu = 0` exactly when the unconstrained point is feasible.
pub fn solve_reflection(sub: &ReflectionSubproblem, mu_tol: f64) -> Result<(CVector, f64)> {
    let m = sub.v.len();
    if sub.lambda.shape() != (m, m) || sub.psi.len() != m {
        return Err(Error::Dimension("reflection subproblem shapes disagree".into()));
    }
    if sub.psi.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("budget weights must be positive".into()));
    }
    if !(sub.budget >= 0.0) {
        return Err(Error::Infeasible("negative UARIS budget".into()));
    }
    let r: Vec<f64> = sub.psi.iter().map(|x| 1.0 / x.sqrt()).collect();
    let lt = CMatrix::from_fn(m, m, |i, j| sub.lambda[(i, j)] * (r[i] * r[j]));
    let vt = CVector::from_fn(m, |i, _| sub.v[i] * r[i]);
    let (s, u) = hermitian_eigen(&lt);
    let ut = u.ad_mul(&vt);
    let w: Vec<f64> = ut.iter().map(|x| x.norm_sqr()).collect();
    let mu = secular_root(&w, &s, sub.budget, mu_tol);
    let coef = CVector::from_fn(m, |i, _| {
        let den = s[i].max(0.0) + mu;
        if den > 0.0 {
            ut[i] / den
        } else {
            C64::from(0.0)
        }
    });
    let x = u * coef;
    Ok((CVector::from_fn(m, |i, _| x[i] * r[i]), mu))
}

/// Reflection update; keeps the current vector if the surrogate would not increase.
pub fn update_theta(
    p: &Problem,
    bf: &BeamformerSet,
    refl: &ReflectionConfig,
    zeta: &[f64],
    chi: &[C64],
    settings: &SolverSettings,
) -> Result<(ReflectionConfig, f64, bool)> {
    let sub = ReflectionSubproblem::new(p, bf, refl, zeta, chi)?;
    let (theta, mu) = solve_reflection(&sub, settings.mu_tol)?;
    let mut cand = refl.clone();
    cand.theta = theta;
    if p.r4(bf, &cand, zeta, chi)? >= p.r4(bf, refl, zeta, chi)? {
        Ok((cand, mu, true))
    } else {
        Ok((refl.clone(), mu, false))
    }
}

/// Feasible starting point: matched beamformers and a random-phase
/// reflection vector scaled to a fraction of the UARIS budget.
pub fn initialize(p: &Problem, settings: &SolverSettings, variant: Variant) -> Result<(BeamformerSet, ReflectionConfig)> {
    let ch = p.channels;
    let m = ch.elements();
    let k_users = ch.users();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let theta = match variant {
        Variant::NoSurface => CVector::zeros(m),
        _ => CVector::from_fn(m, |_, _| C64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI)),
    };
    let mut refl = ReflectionConfig::new(theta, 1.0, p.an_base_power)?;
    let per_user = (p.weights.p_s_max / k_users as f64).sqrt();
    let lt = p.terms(&BeamformerSet::new(vec![CVector::zeros(ch.antennas()); k_users]), &refl)?;
    let bf = BeamformerSet::new(
        lt.eff
            .iter()
            .map(|h| {
                let n = h.norm();
                if n > 0.0 {
                    h * C64::from(per_user / n)
                } else {
                    CVector::from_element(h.len(), C64::from(per_user / (h.len() as f64).sqrt()))
                }
            })
            .collect(),
    );
    if variant != Variant::NoSurface && m > 0 {
        let out = p.reflected_power(&bf, &refl.theta) + refl.an_output_power();
        if out > 0.0 {
            let s = (INITIAL_UARIS_LOAD * p.weights.p_u_max / out).sqrt();
            refl.theta *= C64::from(s);
        }
    }
    Ok((bf, refl))
}

/// Run the alternating ascent for one variant.
pub fn optimize(p: &Problem, settings: &SolverSettings, variant: Variant) -> Result<OptimizerState> {
    if variant == Variant::NoSurface && p.weights.p_u_max != 0.0 {
        return Err(Error::Domain("the no-surface scheme takes a zero UARIS budget".into()));
    }
    let (mut bf, mut refl) = initialize(p, settings, variant)?;
    let mut prev = p.r3(&bf, &refl)?;
    let mut history = vec![prev];
    let mut trace = Vec::new();
    let mut zeta = update_zeta(p, &bf, &refl)?;
    let mut chi = update_chi(p, &bf, &refl, &zeta)?;
    let mut converged = false;
    let mut iterations = 0;
    let mut base_flag = false;
    let mut rejected = 0;
    while iterations < settings.max_iters {
        iterations += 1;
        zeta = update_zeta(p, &bf, &refl)?;
        chi = update_chi(p, &bf, &refl, &zeta)?;
        if variant == Variant::Proposed {
            let up = update_eta(p, &bf, &refl, &zeta, &chi)?;
            base_flag |= up.base_nonpositive;
            let mut cand = refl.clone();
            cand.noise_factor = up.eta;
            if p.r4(&bf, &cand, &zeta, &chi)? >= p.r4(&bf, &refl, &zeta, &chi)? {
                refl = cand;
            } else {
                rejected += 1;
            }
        }
        let (nbf, ok) = update_w(p, &bf, &refl, &zeta, &chi, settings)?;
        bf = nbf;
        rejected += usize::from(!ok);
        if variant != Variant::NoSurface {
            let (nrefl, _, ok) = update_theta(p, &bf, &refl, &zeta, &chi, settings)?;
            refl = nrefl;
            rejected += usize::from(!ok);
        }
        let r3 = p.r3(&bf, &refl)?;
        if !r3.is_finite() {
            return Err(Error::Domain("objective became non-finite".into()));
        }
        if r3 < prev - MONOTONE_SLACK {
            return Err(Error::NonMonotone { iteration: iterations, before: prev, after: r3 });
        }
        trace.push(TraceRow {
            iteration: iterations,
            r3,
            r4: p.r4(&bf, &refl, &zeta, &chi)?,
            eta: refl.noise_factor,
            source_power: bf.total_power(),
            uaris_power: p.reflected_power(&bf, &refl.theta) + refl.an_output_power(),
        });
        history.push(r3);
        let change = (r3 - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
        prev = r3;
        if change < settings.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(OptimizerState {
        bf,
        reflection: refl,
        zeta,
        chi,
        r3_history: history,
        iterations,
        converged,
        trace,
        eta_base_nonpositive: base_flag,
        rejected_updates: rejected,
    })
}

/// Write the trace as `iteration,r3,r4,eta,source_power,uaris_power` rows.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "r3", "r4", "eta", "source_power", "uaris_power"])?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            r.r3.to_string(),
            r.r4.to_string(),
            r.eta.to_string(),
            r.source_power.to_string(),
            r.uaris_power.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
