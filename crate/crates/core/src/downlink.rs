//! Legitimate downlink: effective channels, SINR, sum rate and objectives.

use crate::geometry::ChannelSet;
use crate::linalg::{CMatrix, CVector, C64};
use crate::uaris::{weighted_gain, ReflectionConfig};
use crate::{Error, Result};

/// Per-user transmit beamformers `w_k`, each of length T.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<CVector>,
}

impl BeamformerSet {
    pub fn new(w: Vec<CVector>) -> Self {
        Self { w }
    }

    pub fn users(&self) -> usize {
        self.w.len()
    }

    pub fn antennas(&self) -> usize {
        self.w.first().map_or(0, |w| w.len())
    }

    /// `sum_k ||w_k||^2`
    pub fn total_power(&self) -> f64 {
        self.w.iter().map(|w| w.norm_squared()).sum()
    }

    /// Stack into a single TK vector.
    pub fn stacked(&self) -> CVector {
        CVector::from_iterator(self.w.iter().map(|w| w.len()).sum(), self.w.iter().flat_map(|w| w.iter().copied()))
    }

    pub fn from_stacked(v: &CVector, antennas: usize) -> Self {
        Self { w: v.as_slice().chunks(antennas).map(CVector::from_column_slice).collect() }
    }
}

/// Trade-off weight and power budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    /// Per-user privacy weight xi (the total weight divided by K).
    pub xi: f64,
    /// Source power budget, watts.
    pub p_s_max: f64,
    /// UARIS output power budget, watts.
    pub p_u_max: f64,
}

impl ObjectiveWeights {
    pub fn new(xi: f64, p_s_max: f64, p_u_max: f64) -> Result<Self> {
        if !(xi >= 0.0 && xi < 1.0) {
            return Err(Error::Domain(format!("xi must be in [0, 1), got {xi}")));
        }
        if !(p_s_max > 0.0) || !(p_u_max >= 0.0) {
            return Err(Error::Domain("power budgets must be positive".into()));
        }
        Ok(Self { xi, p_s_max, p_u_max })
    }
}

/// `h_bar_k = h_k + H^H Theta^H g_k`, so that RN k receives `h_bar_k^H w`.
pub fn effective_channel(h: &CVector, g: &CVector, theta: &CVector, h_su: &CMatrix) -> Result<CVector> {
    if g.len() != theta.len() || h_su.nrows() != theta.len() || h_su.ncols() != h.len() {
        return Err(Error::Dimension(format!(
            "h {} g {} theta {} H {}x{}",
            h.len(),
            g.len(),
            theta.len(),
            h_su.nrows(),
            h_su.ncols()
        )));
    }
    let tg = theta.zip_map(g, |t, g| t.conj() * g);
    Ok(h + h_su.ad_mul(&tg))
}

/// Quantities shared by every SINR-type expression.
#[derive(Debug, Clone)]
pub struct LinkTerms {
    /// Effective channels `h_bar_k`.
    pub eff: Vec<CVector>,
    /// `y[(k, a)] = h_bar_k^H w_a`.
    pub y: CMatrix,
    /// `||g_k^H Theta||^2 eta sigma_v^2 + sigma^2` per user.
    pub noise: Vec<f64>,
}

impl LinkTerms {
    pub fn new(ch: &ChannelSet, cfg: &ReflectionConfig, bf: &BeamformerSet, sigma2: f64) -> Result<Self> {
        let k = ch.users();
        if bf.users() != k || bf.antennas() != ch.antennas() {
            return Err(Error::Dimension(format!(
                "beamformers {}x{} vs channels K={} T={}",
                bf.users(),
                bf.antennas(),
                k,
                ch.antennas()
            )));
        }
        let eff = (0..k)
            .map(|i| effective_channel(&ch.h_direct[i], &ch.g_ru[i], &cfg.theta, &ch.h_su))
            .collect::<Result<Vec<_>>>()?;
        let y = CMatrix::from_fn(k, k, |i, a| eff[i].dotc(&bf.w[a]));
        let noise = (0..k).map(|i| cfg.noise_power() * weighted_gain(&cfg.theta, &ch.g_ru[i]) + sigma2).collect();
        Ok(Self { eff, y, noise })
    }

    pub fn users(&self) -> usize {
        self.eff.len()
    }

    /// `sum_{a != k} |y_ka|^2`
    pub fn interference(&self, k: usize) -> f64 {
        (0..self.users()).filter(|&a| a != k).map(|a| self.y[(k, a)].norm_sqr()).sum()
    }

    pub fn sinr(&self, k: usize) -> f64 {
        self.y[(k, k)].norm_sqr() / (self.interference(k) + self.noise[k])
    }

    pub fn sinrs(&self) -> Vec<f64> {
        (0..self.users()).map(|k| self.sinr(k)).collect()
    }
}

/// SINR of user k.
pub fn sinr(k: usize, ch: &ChannelSet, cfg: &ReflectionConfig, bf: &BeamformerSet, sigma2: f64) -> Result<f64> {
    if k >= ch.users() {
        return Err(Error::Dimension(format!("user {k} out of range")));
    }
    Ok(LinkTerms::new(ch, cfg, bf, sigma2)?.sinr(k))
}

/// `sum_k log2(1 + gamma_k)`
pub fn sum_rate(gammas: &[f64]) -> f64 {
    gammas.iter().map(|g| (1.0 + g).log2()).sum()
}

/// Gain `(eta sigma_v^2)^xi` applied to every SINR in the surrogate objective.
pub fn noise_gain(cfg: &ReflectionConfig, xi: f64) -> f64 {
    cfg.noise_power().powf(xi)
}

/// Sum rate plus the position-error bound.
///
/// The two terms have different units (bits/s/Hz and m^2); the expression is
/// only evaluated for reporting, never optimized directly.
pub fn objective_r1(gammas: &[f64], crlb_position_bound: f64) -> f64 {
    sum_rate(gammas) + crlb_position_bound.abs()
}

/// Sum rate penalised by the per-user noise-amplification cost.
pub fn objective_r2(ch: &ChannelSet, cfg: &ReflectionConfig, bf: &BeamformerSet, w: &ObjectiveWeights, sigma2: f64) -> Result<f64> {
    let lt = LinkTerms::new(ch, cfg, bf, sigma2)?;
    let penalty = w.xi * (1.0 + 1.0 / cfg.noise_power()).log2();
    Ok(lt.sinrs().iter().map(|g| (1.0 + g).log2() - penalty).sum())
}

/// `sum_k log2(1 + gamma_k (eta sigma_v^2)^xi)`
pub fn objective_r3(ch: &ChannelSet, cfg: &ReflectionConfig, bf: &BeamformerSet, w: &ObjectiveWeights, sigma2: f64) -> Result<f64> {
    let lt = LinkTerms::new(ch, cfg, bf, sigma2)?;
    Ok(r3_from_terms(&lt, noise_gain(cfg, w.xi)))
}

pub(crate) fn r3_from_terms(lt: &LinkTerms, gain: f64) -> f64 {
    lt.sinrs().iter().map(|g| (1.0 + g * gain).log2()).sum()
}

/// Fractional-programming surrogate of R3 in bits.
///
/// For fixed `(w, Theta, eta)` its maximum over `(zeta, chi)` equals R3.
pub fn objective_r4(
    ch: &ChannelSet,
    cfg: &ReflectionConfig,
    bf: &BeamformerSet,
    zeta: &[f64],
    chi: &[C64],
    w: &ObjectiveWeights,
    sigma2: f64,
) -> Result<f64> {
    let lt = LinkTerms::new(ch, cfg, bf, sigma2)?;
    if zeta.len() != lt.users() || chi.len() != lt.users() {
        return Err(Error::Dimension("auxiliary variables must have length K".into()));
    }
    Ok(r4_from_terms(&lt, noise_gain(cfg, w.xi), zeta, chi))
}

pub(crate) fn r4_from_terms(lt: &LinkTerms, gain: f64, zeta: &[f64], chi: &[C64]) -> f64 {
    let mut total = 0.0;
    for k in 0..lt.users() {
        let ykk = lt.y[(k, k)];
        let den = gain * ykk.norm_sqr() + lt.interference(k) + lt.noise[k];
        total += (1.0 + zeta[k]).ln() - zeta[k] + 2.0 * (gain * (1.0 + zeta[k])).sqrt() * (chi[k].conj() * ykk).re
            - chi[k].norm_sqr() * den;
    }
    total / std::f64::consts::LN_2
}
