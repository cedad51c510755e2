//! Subspace-based localization of the source from EN observations.
//!
//! For a candidate point the per-EN steering Gram matrix is whitened and the
//! stacked projections are reduced to a single Hermitian matrix whose largest
//! eigenvalue is the score. A lattice search picks the best candidate and a
//! trust-region ascent polishes it.

use std::io::Write;

use nalgebra::{Cholesky, Matrix3, Vector3};
use rayon::prelude::*;

use crate::eavesdropper::{EavesdropperObservation, ObservationModel};
use crate::geometry::Position3D;
use crate::linalg::{hermitian_eigen, lambda_max, secular_root, CMatrix};
use crate::{Error, Result};

/// Finite-difference step for gradients and curvature, metres.
pub const FD_STEP: f64 = 1e-2;
/// Initial trust radius, metres.
pub const INITIAL_RADIUS: f64 = 1.0;
/// Steps shorter than this end the refinement, metres.
pub const MIN_STEP: f64 = 1e-3;
pub const MAX_REFINE_ITERS: usize = 200;
/// Gram matrices whose Cholesky pivots fall below this fraction of N are singular.
const PIVOT_FLOOR: f64 = 1e-10;

/// Axis-aligned lattice of `resolution^3` candidate points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    pub resolution: usize,
}

impl SearchRegion {
    /// Cube of side `size` centred on `center`.
    pub fn cube(center: Position3D, size: f64, resolution: usize) -> Self {
        let r = |c: f64| (c - size / 2.0, c + size / 2.0);
        Self { x_range: r(center.x), y_range: r(center.y), z_range: r(center.z), resolution }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::Domain("search resolution must be at least 2".into()));
        }
        for (lo, hi) in [self.x_range, self.y_range, self.z_range] {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!("empty search range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.resolution == 0
    }

    /// Point at linear index `(ix * beta + iy) * beta + iz`.
    pub fn point(&self, index: usize) -> Position3D {
        let b = self.resolution;
        let (ix, iy, iz) = (index / (b * b), (index / b) % b, index % b);
        let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (b - 1) as f64;
        Position3D::new(at(self.x_range, ix), at(self.y_range, iy), at(self.z_range, iz))
    }
}

/// Why a lattice point was not scored.
#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    OutsideWaterColumn,
    Degenerate { en: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint {
    pub index: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    pub best: Position3D,
    pub best_index: usize,
    pub best_score: f64,
    pub skipped: Vec<SkippedPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub estimate: Position3D,
    pub score: f64,
    /// Lattice point the refinement started from.
    pub grid_estimate: Position3D,
    pub iterations: usize,
    /// False when refinement stopped on the iteration cap or a failed evaluation.
    pub converged: bool,
    pub skipped_points: usize,
}

/// Score evaluator bound to the known EN-side geometry.
#[derive(Debug, Clone)]
pub struct Localizer<'a> {
    pub model: &'a ObservationModel,
}

impl<'a> Localizer<'a> {
    pub fn new(model: &'a ObservationModel) -> Self {
        Self { model }
    }

    fn check(&self, obs: &EavesdropperObservation) -> Result<()> {
        let n = self.model.n_samples();
        if obs.u.len() != self.model.n_eavesdroppers() || obs.u.iter().any(|u| u.len() != n) {
            return Err(Error::Dimension(format!(
                "expected {} observations of length {n}",
                self.model.n_eavesdroppers()
            )));
        }
        Ok(())
    }

    /// Whitened block `Z_j^H` (4 x N) at candidate `p`.
    fn whitened_block(&self, p: Position3D, j: usize, u: &crate::CVector) -> Result<CMatrix> {
        let g = self.model.steering(p, j).map(|x| x.conj());
        let a = g.ad_mul(&g);
        let n = self.model.n_samples() as f64;
        let chol = Cholesky::new(a).ok_or_else(|| Error::DegenerateGeometry {
            en: j,
            reason: "steering Gram matrix is not positive definite".into(),
        })?;
        let l = chol.l();
        if (0..4).any(|i| l[(i, i)].re * l[(i, i)].re < PIVOT_FLOOR * n) {
            return Err(Error::DegenerateGeometry { en: j, reason: "coincident ray delays".into() });
        }
        let mut ug = g;
        for (mut row, &un) in ug.row_iter_mut().zip(u.iter()) {
            row *= un;
        }
        l.solve_lower_triangular(&ug.adjoint())
            .ok_or_else(|| Error::DegenerateGeometry { en: j, reason: "triangular solve failed".into() })
    }

    /// The reduced matrix `D = Z^H Z` at candidate `p`.
    pub fn reduced_matrix(&self, p: Position3D, obs: &EavesdropperObservation) -> Result<CMatrix> {
        self.check(obs)?;
        let jn = self.model.n_eavesdroppers();
        let n = self.model.n_samples();
        let mut x = CMatrix::zeros(4 * jn, n);
        for j in 0..jn {
            let b = self.whitened_block(p, j, &obs.u[j])?;
            x.view_mut((4 * j, 0), (4, n)).copy_from(&b);
        }
        Ok(&x * x.adjoint())
    }

    /// Localization score: the largest eigenvalue of the reduced matrix.
    pub fn score(&self, p: Position3D, obs: &EavesdropperObservation) -> Result<f64> {
        Ok(lambda_max(&self.reduced_matrix(p, obs)?).value)
    }

    /// Exhaustive lattice search; ties go to the lowest linear index.
    pub fn grid_search(&self, obs: &EavesdropperObservation, region: &SearchRegion) -> Result<GridSearchOutcome> {
        region.validate()?;
        self.check(obs)?;
        let h = self.model.seabed_depth_m;
        let scores: Vec<std::result::Result<f64, SkipReason>> = (0..region.len())
            .into_par_iter()
            .map(|i| {
                let p = region.point(i);
                if p.z < 0.0 || p.z > h {
                    return Err(SkipReason::OutsideWaterColumn);
                }
                match self.score(p, obs) {
                    Ok(v) => Ok(v),
                    Err(Error::DegenerateGeometry { en, .. }) => Err(SkipReason::Degenerate { en }),
                    Err(_) => Ok(f64::NAN),
                }
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        let mut skipped = Vec::new();
        for (i, s) in scores.into_iter().enumerate() {
            match s {
                Ok(v) if v.is_finite() => {
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((i, v));
                    }
                }
                Ok(_) => {}
                Err(reason) => skipped.push(SkippedPoint { index: i, reason }),
            }
        }
        let (best_index, best_score) =
            best.ok_or_else(|| Error::SearchFailure("no lattice point produced a finite score".into()))?;
        Ok(GridSearchOutcome { best: region.point(best_index), best_index, best_score, skipped })
    }

    /// Trust-region ascent from `p0` with finite-difference derivatives.
    ///
    /// Accepted steps strictly increase the score, so the result never scores
    /// below `p0`.
    pub fn refine(&self, p0: Position3D, obs: &EavesdropperObservation) -> Result<LocalizationResult> {
        let h_max = self.model.seabed_depth_m;
        let clamp = |p: Position3D| Position3D::new(p.x, p.y, p.z.clamp(0.0, h_max));
        let p0 = clamp(p0);
        let f = |p: Position3D| self.score(p, obs);
        let mut p = p0;
        let mut fp = f(p).map_err(|e| Error::SearchFailure(format!("score undefined at start point: {e}")))?;
        if !fp.is_finite() {
            return Err(Error::SearchFailure("non-finite score at start point".into()));
        }
        let mut radius = INITIAL_RADIUS;
        let mut model: Option<(Vector3<f64>, Matrix3<f64>)> = None;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < MAX_REFINE_ITERS {
            iterations += 1;
            if model.is_none() {
                match derivatives(&f, p, fp) {
                    Some(m) => model = Some(m),
                    None => break,
                }
            }
            let (g, hess) = model.unwrap();
            let step = trust_region_step(&g, &hess, radius);
            if step.norm() < MIN_STEP {
                converged = true;
                break;
            }
            let cand = clamp(p.offset([step[0], step[1], step[2]]));
            let s = Vector3::from(cand.sub(p));
            let predicted = g.dot(&s) + 0.5 * s.dot(&(hess * s));
            let fc = f(cand).ok().filter(|v| v.is_finite());
            let actual = fc.map_or(f64::NEG_INFINITY, |v| v - fp);
            let rho = if predicted > 0.0 { actual / predicted } else { f64::NEG_INFINITY };
            if rho < 0.25 {
                radius *= 0.5;
            } else if rho > 0.75 && step.norm() >= 0.99 * radius {
                radius *= 2.0;
            }
            if actual > 0.0 {
                p = cand;
                fp = fc.unwrap();
                model = None;
            } else if radius < MIN_STEP {
                converged = true;
                break;
            }
        }
        Ok(LocalizationResult {
            estimate: p,
            score: fp,
            grid_estimate: p0,
            iterations,
            converged,
            skipped_points: 0,
        })
    }

    /// Lattice search followed by refinement.
    pub fn localize(&self, obs: &EavesdropperObservation, region: &SearchRegion) -> Result<LocalizationResult> {
        let grid = self.grid_search(obs, region)?;
        let mut r = self.refine(grid.best, obs)?;
        r.skipped_points = grid.skipped.len();
        Ok(r)
    }
}

/// Central-difference gradient and Hessian; `None` if any evaluation fails.
fn derivatives<F>(f: &F, p: Position3D, fp: f64) -> Option<(Vector3<f64>, Matrix3<f64>)>
where
    F: Fn(Position3D) -> Result<f64>,
{
    let h = FD_STEP;
    let e = |i: usize, s: f64| {
        let mut d = [0.0; 3];
        d[i] = s;
        d
    };
    let eval = |d: [f64; 3]| f(p.offset(d)).ok().filter(|v| v.is_finite());
    let mut g = Vector3::zeros();
    let mut hess = Matrix3::zeros();
    for i in 0..3 {
        let fpl = eval(e(i, h))?;
        let fmi = eval(e(i, -h))?;
        g[i] = (fpl - fmi) / (2.0 * h);
        hess[(i, i)] = (fpl - 2.0 * fp + fmi) / (h * h);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let add = |a: f64, b: f64| {
                let mut d = e(i, a);
                d[j] = b;
                d
            };
            let v = (eval(add(h, h))? - eval(add(h, -h))? - eval(add(-h, h))? + eval(add(-h, -h))?) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Some((g, hess))
}

/// Maximizer of `g.s + s.H.s / 2` over the ball `|s| <= radius`.
fn trust_region_step(g: &Vector3<f64>, hess: &Matrix3<f64>, radius: f64) -> Vector3<f64> {
    // work with Q = -H so the model is a convex minimisation
    let q = -hess;
    let eig = q.symmetric_eigen();
    let qmin = eig.eigenvalues.min();
    let scale = eig.eigenvalues.amax().max(1e-300);
    let shift = if qmin > 0.0 { 0.0 } else { -qmin + 1e-12 * scale };
    let gr = eig.eigenvectors.transpose() * g;
    let w: Vec<f64> = gr.iter().map(|x| x * x).collect();
    let s: Vec<f64> = eig.eigenvalues.iter().map(|l| l + shift).collect();
    let lam = secular_root(&w, &s, radius * radius, 1e-10);
    let coeff = Vector3::from_fn(|i, _| gr[i] / (s[i] + lam));
    let step = eig.eigenvectors * coeff;
    if step.norm() > radius {
        step * (radius / step.norm())
    } else {
        step
    }
}

/// Root-mean-square distance between true and estimated positions.
pub fn rms_miss_distance(pairs: &[(Position3D, Position3D)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Domain("no trials to average".into()));
    }
    let ms: f64 = pairs.iter().map(|(t, e)| t.distance(*e).powi(2)).sum::<f64>() / pairs.len() as f64;
    Ok(ms.sqrt())
}

/// One localization trial for the trial log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub truth: Position3D,
    pub estimate: Position3D,
    pub score: f64,
    pub iterations: usize,
}

/// Write `trial,true_x,true_y,true_z,est_x,est_y,est_z,score,iterations` rows.
pub fn write_trial_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "score", "iterations"])?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.truth.x.to_string(),
            r.truth.y.to_string(),
            r.truth.z.to_string(),
            r.estimate.x.to_string(),
            r.estimate.y.to_string(),
            r.estimate.z.to_string(),
            r.score.to_string(),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, used to cross-check the power iteration.
pub fn dense_score(d: &CMatrix) -> f64 {
    hermitian_eigen(d).0.into_iter().fold(f64::NEG_INFINITY, f64::max)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::eavesdropper::{synthesize_observation, Waveform};
    use crate::geometry::AcousticParams;
    use crate::linalg::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(ens: Vec<Position3D>, n: usize) -> ObservationModel {
        let params = AcousticParams { n_samples: n, ..AcousticParams::default() };
        ObservationModel {
            eavesdroppers: ens,
            uaris: Position3D::new(120.0, 60.0, 30.0),
            seabed_depth_m: 100.0,
            sound_speed_mps: 1500.0,
            omega: params.omega_grid(),
        }
    }

    fn random_coeffs(j: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(4, j, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn score_equals_dense_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = model(vec![Position3D::new(20.0, 0.0, 40.0), Position3D::new(-10.0, 25.0, 70.0)], 32);
        let truth = Position3D::new(0.0, 0.0, 50.0);
        let f = random_coeffs(2, &mut rng);
        let wf = Waveform::random(32, &mut rng);
        let obs = synthesize_observation(&m, truth, &f, &wf, &[1e-3, 1e-3], &mut rng).unwrap();
        let loc = Localizer::new(&m);
        for _ in 0..20 {
            let p = Position3D::new(rng.random::<f64>() * 40.0, rng.random::<f64>() * 40.0, 10.0 + rng.random::<f64>() * 80.0);
            let d = loc.reduced_matrix(p, &obs).unwrap();
            let s = loc.score(p, &obs).unwrap();
            let e = dense_score(&d);
            assert!((s - e).abs() <= 1e-8 * e);
        }
    }

    #[test]
    fn whitening_reproduces_gram() {
        let m = model(vec![Position3D::new(20.0, 0.0, 40.0)], 16);
        let p = Position3D::new(3.0, 4.0, 55.0);
        let g = m.steering(p, 0).map(|x| x.conj());
        let a = g.ad_mul(&g);
        let l = Cholesky::new(a.clone()).unwrap().l();
        let omega = l.adjoint();
        let back = omega.ad_mul(&omega);
        assert!((back - &a).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn single_en_score_bounds() {
        // lambda_max(P^H Diag(|u|^2) P) lies between ||u||^2 / N and ||u||^2
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = model(vec![Position3D::new(20.0, 0.0, 40.0)], 16);
        let f = random_coeffs(1, &mut rng);
        let wf = Waveform::random(16, &mut rng);
        let obs = synthesize_observation(&m, Position3D::new(0.0, 0.0, 50.0), &f, &wf, &[0.01], &mut rng).unwrap();
        let s = Localizer::new(&m).score(Position3D::new(5.0, 5.0, 45.0), &obs).unwrap();
        let e = obs.u[0].norm_squared();
        assert!(s <= e * (1.0 + 1e-12));
        assert!(s >= e / 16.0 * (1.0 - 1e-12));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn score_phase_invariant_and_quadratic(phase in 0.0..std::f64::consts::TAU, alpha in 0.1f64..10.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = model(vec![Position3D::new(20.0, 0.0, 40.0), Position3D::new(-15.0, 10.0, 65.0)], 16);
            let f = random_coeffs(2, &mut rng);
            let wf = Waveform::random(16, &mut rng);
            let obs = synthesize_observation(&m, Position3D::new(0.0, 0.0, 50.0), &f, &wf, &[0.01, 0.01], &mut rng).unwrap();
            let loc = Localizer::new(&m);
            let p = Position3D::new(rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0, 45.0);
            let s = loc.score(p, &obs).unwrap();
            let rotate = |c: C64| EavesdropperObservation { u: obs.u.iter().map(|u| u * c).collect(), noise_variances: obs.noise_variances.clone() };
            let rotated = loc.score(p, &rotate(C64::from_polar(1.0, phase))).unwrap();
            let scaled = loc.score(p, &rotate(C64::from(alpha))).unwrap();
            proptest::prop_assert!((rotated - s).abs() <= 1e-10 * s);
            proptest::prop_assert!((scaled - alpha * alpha * s).abs() <= 1e-10 * alpha * alpha * s);
        }
    }

    #[test]
    fn shrinking_region_around_best_keeps_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = model(vec![Position3D::new(20.0, 0.0, 40.0), Position3D::new(-15.0, 10.0, 65.0)], 16);
        let f = random_coeffs(2, &mut rng);
        let wf = Waveform::random(16, &mut rng);
        let obs = synthesize_observation(&m, Position3D::new(1.0, 2.0, 50.0), &f, &wf, &[0.05, 0.05], &mut rng).unwrap();
        let loc = Localizer::new(&m);
        let wide = loc.grid_search(&obs, &SearchRegion::cube(Position3D::new(0.0, 0.0, 50.0), 20.0, 9)).unwrap();
        // the wide lattice contains the 3-point lattice around its best point
        let narrow = loc.grid_search(&obs, &SearchRegion::cube(wide.best, 5.0, 3)).unwrap();
        assert!(narrow.best_score >= wide.best_score);
    }

    #[test]
    fn coincident_delays_are_degenerate() {
        // EN at the surface: direct and surface-reflected rays coincide
        let m = model(vec![Position3D::new(20.0, 0.0, 0.0)], 16);
        let obs = EavesdropperObservation { u: vec![crate::CVector::zeros(16)], noise_variances: vec![1.0] };
        let r = Localizer::new(&m).score(Position3D::new(0.0, 0.0, 50.0), &obs);
        assert!(matches!(r, Err(Error::DegenerateGeometry { en: 0, .. })));
    }

    #[test]
    fn ties_break_to_lowest_index() {
        // EN and surface on the z axis make the score symmetric in x
        let params = AcousticParams { n_samples: 16, ..AcousticParams::default() };
        let m = ObservationModel {
            eavesdroppers: vec![Position3D::new(0.0, 0.0, 60.0)],
            uaris: Position3D::new(0.0, 0.0, 20.0),
            seabed_depth_m: 100.0,
            sound_speed_mps: 1500.0,
            omega: params.omega_grid(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = crate::CVector::from_fn(16, |_, _| C64::new(rng.random::<f64>(), rng.random::<f64>()));
        let obs = EavesdropperObservation { u: vec![u], noise_variances: vec![1.0] };
        let region = SearchRegion { x_range: (-10.0, 10.0), y_range: (5.0, 6.0), z_range: (40.0, 45.0), resolution: 2 };
        let out = Localizer::new(&m).grid_search(&obs, &region).unwrap();
        assert_eq!(out.best.x, -10.0);
    }

    #[test]
    fn noiseless_grid_hits_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = model(
            vec![
                Position3D::new(30.0, 10.0, 40.0),
                Position3D::new(-20.0, 25.0, 70.0),
                Position3D::new(10.0, -30.0, 20.0),
            ],
            64,
        );
        let truth = Position3D::new(2.0, 3.0, 50.0);
        let f = random_coeffs(3, &mut rng);
        let wf = Waveform::random(64, &mut rng);
        let obs = synthesize_observation(&m, truth, &f, &wf, &[0.0; 3], &mut rng).unwrap();
        let region = SearchRegion::cube(truth, 40.0, 9);
        let r = Localizer::new(&m).localize(&obs, &region).unwrap();
        // the relaxed score peaks within centimetres of the truth
        assert!(r.estimate.distance(truth) < 0.5, "{:?}", r.estimate);
    }

    #[test]
    fn refine_at_maximum_stays_put() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let m = model(vec![Position3D::new(30.0, 10.0, 40.0), Position3D::new(-20.0, 25.0, 70.0)], 64);
        let truth = Position3D::new(2.0, 3.0, 50.0);
        let f = random_coeffs(2, &mut rng);
        let wf = Waveform::random(64, &mut rng);
        let obs = synthesize_observation(&m, truth, &f, &wf, &[0.0; 2], &mut rng).unwrap();
        let loc = Localizer::new(&m);
        let peak = loc.refine(truth, &obs).unwrap();
        let again = loc.refine(peak.estimate, &obs).unwrap();
        assert!(again.converged);
        assert!(again.estimate.distance(peak.estimate) < 10.0 * MIN_STEP);
    }

    #[test]
    fn refine_never_decreases_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = model(vec![Position3D::new(30.0, 10.0, 40.0), Position3D::new(-20.0, 25.0, 70.0)], 32);
        let truth = Position3D::new(2.0, 3.0, 50.0);
        let f = random_coeffs(2, &mut rng);
        let wf = Waveform::random(32, &mut rng);
        let obs = synthesize_observation(&m, truth, &f, &wf, &[1e-3; 2], &mut rng).unwrap();
        let loc = Localizer::new(&m);
        for _ in 0..5 {
            let p0 = truth.offset([rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0]);
            let s0 = loc.score(p0, &obs).unwrap();
            let r = loc.refine(p0, &obs).unwrap();
            assert!(r.score >= s0);
        }
    }

    #[test]
    fn rms_examples() {
        let o = Position3D::default();
        assert!(rms_miss_distance(&[]).is_err());
        let r = rms_miss_distance(&[(o, Position3D::new(3.0, 4.0, 0.0)), (o, Position3D::new(0.0, 0.0, 0.0))]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
    }
}
