//! What the eavesdropping nodes observe: a phase-coded waveform arriving
//! over four delayed rays plus amplified noise from the surface.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::downlink::BeamformerSet;
use crate::geometry::{four_ray_geometry, link_amplitude, AcousticParams, ChannelSet, Position3D, ScenarioGeometry};
use crate::linalg::{CMatrix, CVector, C64};
use crate::uaris::ReflectionConfig;
use crate::{Error, Result};

/// Unit-modulus waveform `s[n] = exp(j phi[n]) / sqrt(N)` with `phi[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    phases: Vec<f64>,
}

impl Waveform {
    /// Build from the N-1 free phases; the first sample is phase-referenced to zero.
    pub fn from_free_phases(free: &[f64]) -> Self {
        let mut phases = Vec::with_capacity(free.len() + 1);
        phases.push(0.0);
        phases.extend_from_slice(free);
        Self { phases }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let free: Vec<f64> = (1..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        Self::from_free_phases(&free)
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn free_phases(&self) -> &[f64] {
        &self.phases[1..]
    }

    pub fn samples(&self) -> CVector {
        let a = 1.0 / (self.phases.len() as f64).sqrt();
        CVector::from_iterator(self.phases.len(), self.phases.iter().map(|&p| C64::from_polar(a, p)))
    }
}

/// Known quantities shared by all ENs: their positions, the surface
/// position, the waveguide and the sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    pub eavesdroppers: Vec<Position3D>,
    pub uaris: Position3D,
    pub seabed_depth_m: f64,
    pub sound_speed_mps: f64,
    /// Angular frequencies `2 pi n / (N Ts)`.
    pub omega: Vec<f64>,
}

impl ObservationModel {
    pub fn new(geom: &ScenarioGeometry, params: &AcousticParams) -> Self {
        Self {
            eavesdroppers: geom.eavesdroppers.clone(),
            uaris: geom.uaris,
            seabed_depth_m: geom.seabed_depth_m,
            sound_speed_mps: geom.sound_speed_mps,
            omega: params.omega_grid(),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.omega.len()
    }

    pub fn n_eavesdroppers(&self) -> usize {
        self.eavesdroppers.len()
    }

    /// Four-ray delays from `p` to EN j.
    pub fn delays(&self, p: Position3D, j: usize) -> [f64; 4] {
        four_ray_geometry(p, self.eavesdroppers[j], self.uaris, self.seabed_depth_m, self.sound_speed_mps).delays
    }

    /// `T_j[n, a] = exp(-j omega_n tau_aj)`, N x 4.
    pub fn steering(&self, p: Position3D, j: usize) -> CMatrix {
        steering_from_delays(&self.omega, &self.delays(p, j))
    }

    /// Noiseless observation `Diag(T_j f_j) s` for every EN.
    pub fn mean(&self, p: Position3D, coeffs: &CMatrix, s: &CVector) -> Result<Vec<CVector>> {
        if coeffs.nrows() != 4 || coeffs.ncols() != self.n_eavesdroppers() || s.len() != self.n_samples() {
            return Err(Error::Dimension(format!(
                "coefficients {}x{}, waveform {}, expected 4x{} and {}",
                coeffs.nrows(),
                coeffs.ncols(),
                s.len(),
                self.n_eavesdroppers(),
                self.n_samples()
            )));
        }
        Ok((0..self.n_eavesdroppers())
            .map(|j| (self.steering(p, j) * coeffs.column(j)).component_mul(s))
            .collect())
    }
}

/// Steering matrix for explicit delays.
pub fn steering_from_delays(omega: &[f64], delays: &[f64; 4]) -> CMatrix {
    CMatrix::from_fn(omega.len(), 4, |n, a| C64::from_polar(1.0, -omega[n] * delays[a]))
}

/// Noisy EN observations.
#[derive(Debug, Clone, PartialEq)]
pub struct EavesdropperObservation {
    /// One length-N vector per EN.
    pub u: Vec<CVector>,
    /// Per-EN noise variances used to draw the noise.
    pub noise_variances: Vec<f64>,
}

/// Four-ray coefficients of EN j: direct, surface, seabed and surface-reflected (UARIS).
///
/// The boundary rays use the source array response toward the image of the
/// EN mirrored in the surface or seabed, scaled by the amplitude of the
/// unfolded path; the seabed ray also carries the reflection coefficient.
pub fn attenuation_coeffs(
    ch: &ChannelSet,
    cfg: &ReflectionConfig,
    bf: &BeamformerSet,
    geom: &ScenarioGeometry,
    params: &AcousticParams,
    j: usize,
) -> Result<[C64; 4]> {
    if j >= geom.eavesdroppers.len() || j >= ch.h_e_direct.len() {
        return Err(Error::Dimension(format!("eavesdropper {j} out of range")));
    }
    let sum_w: CVector = bf.w.iter().fold(CVector::zeros(ch.antennas()), |acc, w| acc + w);
    let en = geom.eavesdroppers[j];
    let s = geom.source;
    let h = geom.seabed_depth_m;
    let fg = four_ray_geometry(s, en, geom.uaris, h, geom.sound_speed_mps);

    let image_ray = |image: Position3D, length: f64| -> Result<C64> {
        let d = image.sub(s);
        let n = length.max(f64::MIN_POSITIVE);
        let a = link_amplitude(length, params.freq_khz, params.prop_factor)?;
        let r = crate::geometry::array_response(ch.antennas(), [d[0] / n, d[1] / n, d[2] / n]);
        Ok(r.map(|x| x.conj() * a).dotc(&sum_w))
    };
    let f1 = ch.h_e_direct[j].dotc(&sum_w);
    let f2 = image_ray(Position3D::new(en.x, en.y, -en.z), fg.lengths[1])?;
    let f3 = image_ray(Position3D::new(en.x, en.y, 2.0 * h - en.z), fg.lengths[2])? * params.seabed_reflection;
    let reflected = cfg.reflect(&(&ch.h_su * &sum_w))?;
    let f4 = ch.g_eu[j].dotc(&reflected);
    Ok([f1, f2, f3, f4])
}

/// 4 x J matrix of four-ray coefficients.
pub fn coefficient_matrix(
    ch: &ChannelSet,
    cfg: &ReflectionConfig,
    bf: &BeamformerSet,
    geom: &ScenarioGeometry,
    params: &AcousticParams,
) -> Result<CMatrix> {
    let j = geom.eavesdroppers.len();
    let mut f = CMatrix::zeros(4, j);
    for e in 0..j {
        let c = attenuation_coeffs(ch, cfg, bf, geom, params, e)?;
        for a in 0..4 {
            f[(a, e)] = c[a];
        }
    }
    Ok(f)
}

/// Per-EN noise variances under the current surface configuration.
pub fn noise_variances(ch: &ChannelSet, cfg: &ReflectionConfig, bg_noise_power: f64) -> Vec<f64> {
    ch.g_eu.iter().map(|g| cfg.en_noise_variance(g, bg_noise_power)).collect()
}

/// Draw `u_j = Diag(T_j f_j) s + v_j` with `v_j ~ CN(0, var_j I)`.
pub fn synthesize_observation<R: Rng + ?Sized>(
    model: &ObservationModel,
    source: Position3D,
    coeffs: &CMatrix,
    waveform: &Waveform,
    noise_variances: &[f64],
    rng: &mut R,
) -> Result<EavesdropperObservation> {
    if noise_variances.len() != model.n_eavesdroppers() {
        return Err(Error::Dimension("one noise variance per EN required".into()));
    }
    let mut u = model.mean(source, coeffs, &waveform.samples())?;
    for (uj, &var) in u.iter_mut().zip(noise_variances) {
        let sd = (var / 2.0).sqrt();
        for x in uj.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *x += C64::new(re * sd, im * sd);
        }
    }
    Ok(EavesdropperObservation { u, noise_variances: noise_variances.to_vec() })
}

/// Write observations as `en,n,omega,re,im` rows.
pub fn write_observation_csv<W: Write>(model: &ObservationModel, obs: &EavesdropperObservation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["en", "n", "omega", "re", "im"])?;
    for (j, uj) in obs.u.iter().enumerate() {
        for (n, x) in uj.iter().enumerate() {
            w.write_record([j.to_string(), n.to_string(), model.omega[n].to_string(), x.re.to_string(), x.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
