//! The active reflecting surface: per-element reflection plus artificial noise.

use crate::downlink::BeamformerSet;
use crate::linalg::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Reflection vector `theta` and noise amplification `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionConfig {
    pub theta: CVector,
    /// Noise amplification factor, at least 1.
    pub noise_factor: f64,
    /// Base noise power per element (sigma_v^2), watts.
    pub an_base_power: f64,
}

impl ReflectionConfig {
    pub fn new(theta: CVector, noise_factor: f64, an_base_power: f64) -> Result<Self> {
        if !(noise_factor >= 1.0) || !noise_factor.is_finite() {
            return Err(Error::Domain(format!("noise factor must be >= 1, got {noise_factor}")));
        }
        if !(an_base_power >= 0.0) {
            return Err(Error::Domain("artificial-noise power must be non-negative".into()));
        }
        Ok(Self { theta, noise_factor, an_base_power })
    }

    pub fn elements(&self) -> usize {
        self.theta.len()
    }

    /// `eta * sigma_v^2`
    pub fn noise_power(&self) -> f64 {
        self.noise_factor * self.an_base_power
    }

    /// Output noise power `||theta||^2 eta sigma_v^2`.
    pub fn an_output_power(&self) -> f64 {
        self.theta.norm_squared() * self.noise_power()
    }

    /// Noiseless reflected signal `Theta x`.
    pub fn reflect(&self, incident: &CVector) -> Result<CVector> {
        if incident.len() != self.theta.len() {
            return Err(Error::Dimension(format!(
                "incident length {} != element count {}",
                incident.len(),
                self.theta.len()
            )));
        }
        Ok(self.theta.component_mul(incident))
    }

    /// Noise variance at an EN: `eta sigma_v^2 sum |theta_m|^2 |g_m|^2 + sigma^2`.
    pub fn en_noise_variance(&self, g: &CVector, bg_noise_power: f64) -> f64 {
        self.noise_power() * weighted_gain(&self.theta, g) + bg_noise_power
    }

    /// Total UARIS output: reflected signal power plus amplified noise.
    pub fn output_power(&self, h_su: &CMatrix, bf: &BeamformerSet) -> Result<f64> {
        if h_su.nrows() != self.theta.len() {
            return Err(Error::Dimension("H rows must equal element count".into()));
        }
        let mut p = 0.0;
        for w in &bf.w {
            p += self.reflect(&(h_su * w))?.norm_squared();
        }
        Ok(p + self.an_output_power())
    }
}

/// `sum_m |theta_m|^2 |g_m|^2`, equal to `||g^H Theta||^2`.
pub fn weighted_gain(theta: &CVector, g: &CVector) -> f64 {
    theta.iter().zip(g.iter()).map(|(t, g)| t.norm_sqr() * g.norm_sqr()).sum()
}

/// All-zero reflection, used to model the link without a surface.
pub fn disabled(elements: usize, an_base_power: f64) -> ReflectionConfig {
    ReflectionConfig { theta: CVector::from_element(elements, C64::from(0.0)), noise_factor: 1.0, an_base_power }
}
