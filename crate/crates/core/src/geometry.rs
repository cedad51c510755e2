//! Positions, acoustic propagation and narrowband channel synthesis.
//!
//! Distances are in metres, frequencies in kHz, delays in seconds. The
//! z axis points down from the sea surface, so `0 <= z <= h`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::linalg::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Unit vector along which both linear arrays are laid out.
pub const ARRAY_AXIS: [f64; 3] = [1.0, 0.0, 0.0];
/// Element spacing of both arrays in wavelengths.
pub const ELEMENT_SPACING: f64 = 0.5;

/// Point in the water column.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn sub(self, o: Self) -> [f64; 3] {
        [self.x - o.x, self.y - o.y, self.z - o.z]
    }

    pub fn offset(self, d: [f64; 3]) -> Self {
        Self::new(self.x + d[0], self.y + d[1], self.z + d[2])
    }

    pub fn distance(self, o: Self) -> f64 {
        norm3(self.sub(o))
    }

    /// Distance in the horizontal plane.
    pub fn horizontal_distance(self, o: Self) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Physical constants of the acoustic link.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticParams {
    /// Carrier frequency in kHz.
    pub freq_khz: f64,
    /// Spreading exponent.
    pub prop_factor: f64,
    /// Seabed reflection coefficient in [0, 1].
    pub seabed_reflection: f64,
    /// Background noise power at every receiver, watts.
    pub bg_noise_power: f64,
    /// Base artificial-noise power per UARIS element, watts.
    pub an_base_power: f64,
    /// Sampling interval, seconds.
    pub sample_interval_s: f64,
    /// Number of samples per observation.
    pub n_samples: usize,
}

impl Default for AcousticParams {
    fn default() -> Self {
        Self {
            freq_khz: 5.0,
            prop_factor: 1.5,
            seabed_reflection: 0.85,
            bg_noise_power: 1e-9,
            an_base_power: 1e-9,
            sample_interval_s: 1e-3,
            n_samples: 64,
        }
    }
}

impl AcousticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_khz > 0.0) {
            return Err(Error::Domain(format!("frequency must be positive, got {}", self.freq_khz)));
        }
        if !(self.prop_factor >= 1.0 && self.prop_factor <= 2.0) {
            return Err(Error::Domain(format!("spreading exponent must be in [1, 2], got {}", self.prop_factor)));
        }
        if !(0.0..=1.0).contains(&self.seabed_reflection) {
            return Err(Error::Domain(format!("seabed reflection must be in [0, 1], got {}", self.seabed_reflection)));
        }
        if !(self.bg_noise_power >= 0.0) || !(self.an_base_power >= 0.0) {
            return Err(Error::Domain("noise powers must be non-negative".into()));
        }
        if !(self.sample_interval_s > 0.0) {
            return Err(Error::Domain("sample interval must be positive".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::Domain("need at least two samples".into()));
        }
        Ok(())
    }

    /// Carrier wavelength for a given sound speed.
    pub fn wavelength(&self, sound_speed: f64) -> f64 {
        sound_speed / (self.freq_khz * 1e3)
    }

    /// Angular frequency grid `2 pi n / (N Ts)` for n = 0..N.
    pub fn omega_grid(&self) -> Vec<f64> {
        let n = self.n_samples as f64;
        (0..self.n_samples)
            .map(|i| 2.0 * PI * i as f64 / (n * self.sample_interval_s))
            .collect()
    }
}

/// Node placement for one scenario realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    pub source: Position3D,
    pub uaris: Position3D,
    pub receivers: Vec<Position3D>,
    pub eavesdroppers: Vec<Position3D>,
    /// Seabed depth h in metres.
    pub seabed_depth_m: f64,
    /// Sound speed c in m/s.
    pub sound_speed_mps: f64,
}

impl ScenarioGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.seabed_depth_m > 0.0) || !(self.sound_speed_mps > 0.0) {
            return Err(Error::Domain("seabed depth and sound speed must be positive".into()));
        }
        let h = self.seabed_depth_m;
        let all = [self.source, self.uaris]
            .into_iter()
            .chain(self.receivers.iter().copied())
            .chain(self.eavesdroppers.iter().copied());
        for p in all {
            if !p.is_finite() || p.z < 0.0 || p.z > h {
                return Err(Error::Domain(format!("node {p:?} outside the water column [0, {h}]")));
            }
        }
        Ok(())
    }
}

/// Antenna, element, user and eavesdropper counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    /// Source transducers T.
    pub antennas: usize,
    /// UARIS elements M.
    pub elements: usize,
    /// Receiving nodes K.
    pub users: usize,
    /// Eavesdropping nodes J.
    pub eavesdroppers: usize,
}

/// Path lengths and delays of the four rays from a source point to one EN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourRayGeometry {
    /// Direct, surface-reflected, seabed-reflected and UARIS-reflected lengths.
    pub lengths: [f64; 4],
    pub delays: [f64; 4],
}

/// Thorp absorption in dB/km for a frequency in kHz.
pub fn thorp_absorption_db_per_km(freq_khz: f64) -> Result<f64> {
    if !(freq_khz > 0.0) || !freq_khz.is_finite() {
        return Err(Error::Domain(format!("frequency must be positive, got {freq_khz}")));
    }
    let f2 = freq_khz * freq_khz;
    Ok(0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003)
}

/// Power attenuation `d^eps * a^d` with `a` the per-metre absorption factor.
pub fn attenuation(distance_m: f64, freq_khz: f64, prop_factor: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!("distance must be positive, got {distance_m}")));
    }
    if !(1.0..=2.0).contains(&prop_factor) {
        return Err(Error::Domain(format!("spreading exponent must be in [1, 2], got {prop_factor}")));
    }
    let alpha = thorp_absorption_db_per_km(freq_khz)?;
    // dB/km -> linear factor per metre
    let per_metre = 10f64.powf(alpha / 10.0 / 1000.0);
    Ok(distance_m.powf(prop_factor) * per_metre.powf(distance_m))
}

/// Amplitude gain of a link, the inverse square root of [`attenuation`].
pub fn link_amplitude(distance_m: f64, freq_khz: f64, prop_factor: f64) -> Result<f64> {
    Ok(attenuation(distance_m, freq_khz, prop_factor)?.powf(-0.5))
}

/// Four-ray lengths and delays from `p` to `en` under a flat surface and seabed.
pub fn four_ray_geometry(p: Position3D, en: Position3D, uaris: Position3D, h: f64, c: f64) -> FourRayGeometry {
    let l = p.horizontal_distance(en);
    let lengths = [
        p.distance(en),
        l.hypot(p.z + en.z),
        l.hypot(2.0 * h - p.z - en.z),
        p.distance(uaris) + uaris.distance(en),
    ];
    FourRayGeometry { lengths, delays: lengths.map(|x| x / c) }
}

/// Gradients of the four delays with respect to the source point.
pub fn delay_gradients(p: Position3D, en: Position3D, uaris: Position3D, h: f64, c: f64) -> [[f64; 3]; 4] {
    let g = four_ray_geometry(p, en, uaris, h, c);
    let [l1, l2, l3, _] = g.lengths;
    let dx = p.x - en.x;
    let dy = p.y - en.y;
    let du = p.sub(uaris);
    let lu = norm3(du);
    [
        [dx / l1 / c, dy / l1 / c, (p.z - en.z) / l1 / c],
        [dx / l2 / c, dy / l2 / c, (p.z + en.z) / l2 / c],
        [dx / l3 / c, dy / l3 / c, -(2.0 * h - p.z - en.z) / l3 / c],
        [du[0] / lu / c, du[1] / lu / c, du[2] / lu / c],
    ]
}

/// Far-field response of a half-wavelength linear array toward unit direction `u`.
pub fn array_response(n: usize, u: [f64; 3]) -> CVector {
    let phase = 2.0 * PI * ELEMENT_SPACING * dot3(ARRAY_AXIS, u);
    DVector::from_fn(n, |t, _| C64::from_polar(1.0, phase * t as f64))
}

fn unit(from: Position3D, to: Position3D) -> [f64; 3] {
    let d = to.sub(from);
    let n = norm3(d);
    [d[0] / n, d[1] / n, d[2] / n]
}

/// All narrowband channels of one scenario realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub dims: Dims,
    /// Source to RN k, length T. The RN receives `h_k^H w`.
    pub h_direct: Vec<CVector>,
    /// Source to UARIS, M x T.
    pub h_su: CMatrix,
    /// UARIS to RN k, length M. The RN receives `g_k^H Theta x`.
    pub g_ru: Vec<CVector>,
    /// Source to EN j, length T.
    pub h_e_direct: Vec<CVector>,
    /// UARIS to EN j, length M.
    pub g_eu: Vec<CVector>,
}

impl ChannelSet {
    pub fn users(&self) -> usize {
        self.dims.users
    }

    pub fn elements(&self) -> usize {
        self.dims.elements
    }

    pub fn antennas(&self) -> usize {
        self.dims.antennas
    }
}

/// Synthesize line-of-sight array channels with seeded random link phases.
///
/// Every link amplitude is `attenuation(d)^{-1/2}`; the array phase profile
/// follows the geometric direction; an independent uniform phase per link
/// models unknown propagation phase.
pub fn synthesize_channels(geom: &ScenarioGeometry, params: &AcousticParams, dims: Dims, seed: u64) -> Result<ChannelSet> {
    params.validate()?;
    geom.validate()?;
    if dims.antennas == 0 || dims.users == 0 {
        return Err(Error::Dimension("need at least one antenna and one user".into()));
    }
    if geom.receivers.len() != dims.users || geom.eavesdroppers.len() != dims.eavesdroppers {
        return Err(Error::Dimension(format!(
            "geometry has {} RNs and {} ENs, dims ask for {} and {}",
            geom.receivers.len(),
            geom.eavesdroppers.len(),
            dims.users,
            dims.eavesdroppers
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = params.freq_khz;
    let eps = params.prop_factor;
    let (t, m) = (dims.antennas, dims.elements);
    let s = geom.source;
    let u = geom.uaris;
    let random_phase = |rng: &mut ChaCha8Rng| C64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);

    // conjugated responses so that the receiver forms h^H w
    let downlink = |from: Position3D, to: Position3D, n: usize, ph: C64| -> Result<CVector> {
        let a = link_amplitude(from.distance(to), f, eps)?;
        Ok(array_response(n, unit(from, to)).map(|r| (r * ph * a).conj()))
    };

    let mut h_direct = Vec::with_capacity(dims.users);
    for rn in &geom.receivers {
        let ph = random_phase(&mut rng);
        h_direct.push(downlink(s, *rn, t, ph)?);
    }
    let ph = random_phase(&mut rng);
    let a_su = link_amplitude(s.distance(u), f, eps)?;
    let r_src = array_response(t, unit(s, u));
    let r_uar = array_response(m, unit(u, s));
    let h_su = &r_uar * r_src.transpose() * (ph * a_su);
    let mut g_ru = Vec::with_capacity(dims.users);
    for rn in &geom.receivers {
        let ph = random_phase(&mut rng);
        g_ru.push(downlink(u, *rn, m, ph)?);
    }
    let mut h_e_direct = Vec::with_capacity(dims.eavesdroppers);
    let mut g_eu = Vec::with_capacity(dims.eavesdroppers);
    for en in &geom.eavesdroppers {
        let ph = random_phase(&mut rng);
        h_e_direct.push(downlink(s, *en, t, ph)?);
        let ph = random_phase(&mut rng);
        g_eu.push(downlink(u, *en, m, ph)?);
    }
    Ok(ChannelSet { dims, h_direct, h_su, g_ru, h_e_direct, g_eu })
}
