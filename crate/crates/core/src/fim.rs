//! Fisher information for the EN observation model and the resulting
//! Cramer-Rao bounds on the source position.
//!
//! Parameter layout: position (3), free waveform phases (N-1), real parts of
//! the four-ray coefficients (4J), imaginary parts (4J), per-EN noise
//! variances (J). Coefficients are ordered EN-major: index `4 j + ray`.

use std::io::Write;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::eavesdropper::{ObservationModel, Waveform};
use crate::geometry::{delay_gradients, Position3D};
use crate::linalg::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Condition number above which the inverse is replaced by a pseudo-inverse.
pub const MAX_CONDITION: f64 = 1e12;

/// Point at which the information is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub position: Position3D,
    pub waveform: Waveform,
    /// 4 x J four-ray coefficients.
    pub coeffs: CMatrix,
    pub noise_variances: Vec<f64>,
}

impl ParameterVector {
    /// Flatten into the real vector used by the layout.
    pub fn to_vec(&self) -> Vec<f64> {
        let j = self.coeffs.ncols();
        let mut v = vec![self.position.x, self.position.y, self.position.z];
        v.extend_from_slice(self.waveform.free_phases());
        v.extend((0..4 * j).map(|i| self.coeffs[(i % 4, i / 4)].re));
        v.extend((0..4 * j).map(|i| self.coeffs[(i % 4, i / 4)].im));
        v.extend_from_slice(&self.noise_variances);
        v
    }

    /// Inverse of [`ParameterVector::to_vec`].
    pub fn from_vec(v: &[f64], layout: ParamLayout) -> Self {
        let p = Position3D::new(v[0], v[1], v[2]);
        let waveform = Waveform::from_free_phases(&v[layout.phase(1)..layout.phase(1) + layout.n_samples - 1]);
        let coeffs = CMatrix::from_fn(4, layout.n_en, |a, j| C64::new(v[layout.re_coeff(a, j)], v[layout.im_coeff(a, j)]));
        let noise_variances = (0..layout.n_en).map(|j| v[layout.variance(j)]).collect();
        Self { position: p, waveform, coeffs, noise_variances }
    }
}

/// Index map of the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub n_samples: usize,
    pub n_en: usize,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        self.signal_len() + self.n_en
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Parameters that enter the mean.
    pub fn signal_len(&self) -> usize {
        3 + self.n_samples - 1 + 8 * self.n_en
    }

    /// Index of the phase of sample `n` (1..N).
    pub fn phase(&self, n: usize) -> usize {
        3 + n - 1
    }

    pub fn re_coeff(&self, ray: usize, en: usize) -> usize {
        3 + self.n_samples - 1 + 4 * en + ray
    }

    pub fn im_coeff(&self, ray: usize, en: usize) -> usize {
        self.re_coeff(ray, en) + 4 * self.n_en
    }

    pub fn variance(&self, en: usize) -> usize {
        self.signal_len() + en
    }

    pub fn name(&self, i: usize) -> String {
        let nf = 4 * self.n_en;
        let ph0 = 3;
        let re0 = ph0 + self.n_samples - 1;
        match i {
            0 => "x".into(),
            1 => "y".into(),
            2 => "z".into(),
            _ if i < re0 => format!("phase_{}", i - ph0 + 1),
            _ if i < re0 + nf => format!("re_f_{}_{}", (i - re0) % 4 + 1, (i - re0) / 4),
            _ if i < re0 + 2 * nf => format!("im_f_{}_{}", (i - re0 - nf) % 4 + 1, (i - re0 - nf) / 4),
            _ => format!("var_{}", i - re0 - 2 * nf),
        }
    }
}

/// How the noise-variance block is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseBlock {
    /// `N / var_j^2`, the information of a circular Gaussian variance.
    #[default]
    Gaussian,
    /// `N` on the diagonal, kept for comparison with the unnormalised form.
    LiteralCount,
}

/// Real symmetric Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FimMatrix {
    pub entries: DMatrix<f64>,
    pub layout: ParamLayout,
    pub position: Position3D,
}

/// Evaluates means and their derivatives for a fixed observation model.
#[derive(Debug, Clone)]
pub struct FimModel<'a> {
    pub model: &'a ObservationModel,
}

impl<'a> FimModel<'a> {
    pub fn new(model: &'a ObservationModel) -> Self {
        Self { model }
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout { n_samples: self.model.n_samples(), n_en: self.model.n_eavesdroppers() }
    }

    fn check(&self, params: &ParameterVector) -> Result<()> {
        let l = self.layout();
        if params.waveform.len() != l.n_samples
            || params.coeffs.nrows() != 4
            || params.coeffs.ncols() != l.n_en
            || params.noise_variances.len() != l.n_en
        {
            return Err(Error::Dimension("parameter vector does not match the observation model".into()));
        }
        if params.noise_variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("noise variances must be positive".into()));
        }
        Ok(())
    }

    /// Stacked mean, EN-major (index `j N + n`).
    pub fn mean(&self, params: &ParameterVector) -> Result<CVector> {
        let parts = self.model.mean(params.position, &params.coeffs, &params.waveform.samples())?;
        Ok(stack(&parts))
    }

    /// Derivative of the stacked mean with respect to one position axis.
    pub fn d_position(&self, params: &ParameterVector, axis: usize) -> Result<CVector> {
        self.check(params)?;
        if axis > 2 {
            return Err(Error::Dimension(format!("axis {axis} out of range")));
        }
        let m = self.model;
        let s = params.waveform.samples();
        let n = m.n_samples();
        let mut out = CVector::zeros(n * m.n_eavesdroppers());
        for j in 0..m.n_eavesdroppers() {
            let grads = delay_gradients(params.position, m.eavesdroppers[j], m.uaris, m.seabed_depth_m, m.sound_speed_mps);
            let t = m.steering(params.position, j);
            for k in 0..n {
                let mut acc = C64::from(0.0);
                for a in 0..4 {
                    acc += t[(k, a)] * params.coeffs[(a, j)] * grads[a][axis];
                }
                out[j * n + k] = C64::new(0.0, -m.omega[k]) * acc * s[k];
            }
        }
        Ok(out)
    }

    /// Derivative with respect to the phase of sample `sample` (1..N).
    pub fn d_phase(&self, params: &ParameterVector, sample: usize) -> Result<CVector> {
        self.check(params)?;
        let m = self.model;
        let n = m.n_samples();
        if sample == 0 || sample >= n {
            return Err(Error::Dimension(format!("phase index {sample} is fixed or out of range")));
        }
        let s = params.waveform.samples();
        let mut out = CVector::zeros(n * m.n_eavesdroppers());
        for j in 0..m.n_eavesdroppers() {
            let t = m.steering(params.position, j);
            let tf = (t.row(sample) * params.coeffs.column(j))[(0, 0)];
            out[j * n + sample] = C64::i() * s[sample] * tf;
        }
        Ok(out)
    }

    /// Derivative with respect to the real (`imag == false`) or imaginary part
    /// of the coefficient of `ray` at EN `en`.
    pub fn d_coeff(&self, params: &ParameterVector, ray: usize, en: usize, imag: bool) -> Result<CVector> {
        self.check(params)?;
        let m = self.model;
        if ray > 3 || en >= m.n_eavesdroppers() {
            return Err(Error::Dimension(format!("coefficient ({ray}, {en}) out of range")));
        }
        let n = m.n_samples();
        let s = params.waveform.samples();
        let t = m.steering(params.position, en);
        let unit = if imag { C64::i() } else { C64::from(1.0) };
        let mut out = CVector::zeros(n * m.n_eavesdroppers());
        for k in 0..n {
            out[en * n + k] = unit * t[(k, ray)] * s[k];
        }
        Ok(out)
    }

    /// All mean derivatives as the columns of an NJ x P matrix.
    pub fn jacobian(&self, params: &ParameterVector) -> Result<CMatrix> {
        let l = self.layout();
        let mut cols = Vec::with_capacity(l.signal_len());
        for axis in 0..3 {
            cols.push(self.d_position(params, axis)?);
        }
        for k in 1..l.n_samples {
            cols.push(self.d_phase(params, k)?);
        }
        for imag in [false, true] {
            for j in 0..l.n_en {
                for a in 0..4 {
                    cols.push(self.d_coeff(params, a, j, imag)?);
                }
            }
        }
        Ok(CMatrix::from_columns(&cols))
    }

    /// Fisher information at `params`.
    pub fn build(&self, params: &ParameterVector, noise_block: NoiseBlock) -> Result<FimMatrix> {
        self.check(params)?;
        let l = self.layout();
        let n = l.n_samples;
        let mut jac = self.jacobian(params)?;
        for j in 0..l.n_en {
            let w = C64::from(1.0 / params.noise_variances[j].sqrt());
            for mut row in jac.rows_mut(j * n, n).row_iter_mut() {
                row *= w;
            }
        }
        let gram = jac.ad_mul(&jac);
        let mut f = DMatrix::zeros(l.len(), l.len());
        let ps = l.signal_len();
        for a in 0..ps {
            for b in 0..ps {
                f[(a, b)] = 2.0 * gram[(a, b)].re;
            }
        }
        // exact symmetry
        for a in 0..ps {
            for b in 0..a {
                let v = 0.5 * (f[(a, b)] + f[(b, a)]);
                f[(a, b)] = v;
                f[(b, a)] = v;
            }
        }
        for j in 0..l.n_en {
            let i = l.variance(j);
            f[(i, i)] = match noise_block {
                NoiseBlock::Gaussian => n as f64 / params.noise_variances[j].powi(2),
                NoiseBlock::LiteralCount => n as f64,
            };
        }
        Ok(FimMatrix { entries: f, layout: l, position: params.position })
    }
}

fn stack(parts: &[CVector]) -> CVector {
    let len = parts.iter().map(|p| p.len()).sum();
    CVector::from_iterator(len, parts.iter().flat_map(|p| p.iter().copied()))
}

/// 95% confidence ellipsoid of the position estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Position3D,
    /// Semi-axis lengths, ascending.
    pub axes: [f64; 3],
    /// Columns are the principal directions matching `axes`.
    pub rotation: Matrix3<f64>,
    /// Position covariance bound.
    pub covariance: Matrix3<f64>,
    /// Chi-square quantile defining the level set.
    pub quantile: f64,
}

impl Ellipsoid {
    /// True if `p` lies inside the level set.
    pub fn contains(&self, p: Position3D) -> bool {
        self.mahalanobis_sq(p) <= self.quantile
    }

    /// `(p - c)^T C^{-1} (p - c)` evaluated in the principal frame.
    pub fn mahalanobis_sq(&self, p: Position3D) -> f64 {
        let d = Vector3::from(p.sub(self.center));
        let r = self.rotation.transpose() * d;
        (0..3)
            .map(|i| {
                let var = self.axes[i] * self.axes[i] / self.quantile;
                r[i] * r[i] / var
            })
            .sum()
    }
}

/// Inverse Fisher information and derived bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbResult {
    pub inverse: DMatrix<f64>,
    /// Trace of the position block, m^2.
    pub position_bound: f64,
    pub ellipsoid: Ellipsoid,
    /// Condition number of the diagonally scaled information matrix.
    pub condition: f64,
    /// Set when a pseudo-inverse replaced the inverse.
    pub ill_conditioned: bool,
}

/// Chi-square quantile with three degrees of freedom at 0.95.
pub fn chi2_3_95() -> f64 {
    ChiSquared::new(3.0).expect("three degrees of freedom").inverse_cdf(0.95)
}

/// Invert the information matrix with Jacobi scaling.
pub fn crlb(fim: &FimMatrix) -> Result<CrlbResult> {
    let f = &fim.entries;
    let n = f.nrows();
    if n < 3 || f.ncols() != n {
        return Err(Error::Dimension("information matrix must be square with at least 3 rows".into()));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("information matrix has non-finite entries".into()));
    }
    let d: Vec<f64> = (0..n).map(|i| f[(i, i)]).collect();
    if d.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("information matrix has a non-positive diagonal entry".into()));
    }
    let sc: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| f[(i, j)] * sc[i] * sc[j]);
    let eig = SymmetricEigen::new(scaled);
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let ill = !(condition <= MAX_CONDITION);
    let floor = if ill { lmax / MAX_CONDITION } else { 0.0 };
    let inv_vals = eig.eigenvalues.map(|l| if l > floor { 1.0 / l } else { 0.0 });
    let v = &eig.eigenvectors;
    let inv_scaled = v * DMatrix::from_diagonal(&inv_vals) * v.transpose();
    let inverse = DMatrix::from_fn(n, n, |i, j| inv_scaled[(i, j)] * sc[i] * sc[j]);
    let cov = Matrix3::from_fn(|i, j| 0.5 * (inverse[(i, j)] + inverse[(j, i)]));
    let ellipsoid = ellipsoid_from_covariance(fim.position, cov)?;
    Ok(CrlbResult {
        position_bound: cov.trace(),
        inverse,
        ellipsoid,
        condition,
        ill_conditioned: ill,
    })
}

/// 95% ellipsoid for a 3x3 covariance.
pub fn ellipsoid_from_covariance(center: Position3D, cov: Matrix3<f64>) -> Result<Ellipsoid> {
    let q = chi2_3_95();
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues.iter().any(|&l| l < 0.0 && l.abs() > 1e-12 * eig.eigenvalues.amax()) {
        return Err(Error::Domain("position covariance is not positive semidefinite".into()));
    }
    let axes = order.map(|i| (q * eig.eigenvalues[i].max(0.0)).sqrt());
    let rotation = Matrix3::from_columns(&order.map(|i| eig.eigenvectors.column(i).into_owned()));
    Ok(Ellipsoid { center, axes, rotation, covariance: cov, quantile: q })
}

/// Write `index,name,crlb` rows for the diagonal of the inverse.
pub fn write_crlb_csv<W: Write>(res: &CrlbResult, layout: ParamLayout, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "name", "crlb"])?;
    for i in 0..res.inverse.nrows() {
        w.write_record([i.to_string(), layout.name(i), res.inverse[(i, i)].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Header and row of the ellipsoid record.
pub fn ellipsoid_record(e: &Ellipsoid) -> (Vec<String>, Vec<String>) {
    let mut head: Vec<String> = ["center_x", "center_y", "center_z", "axis_1", "axis_2", "axis_3"].map(String::from).to_vec();
    let mut row = vec![
        e.center.x.to_string(),
        e.center.y.to_string(),
        e.center.z.to_string(),
        e.axes[0].to_string(),
        e.axes[1].to_string(),
        e.axes[2].to_string(),
    ];
    for i in 0..3 {
        for j in 0..3 {
            head.push(format!("r{}{}", i + 1, j + 1));
            row.push(e.rotation[(i, j)].to_string());
        }
    }
    (head, row)
}
