//! Block-diagonal concave quadratic maximisation under two quadratic budgets:
//!
//! maximize `sum_a 2 Re(alpha_a^H w_a) - w_a^H B_a w_a`
//! subject to `sum_a ||w_a||^2 <= p1` and `sum_a w_a^H C_a w_a <= p2`.
//!
//! The solution is `w_a = (B_a + l1 I + l2 C_a)^{-1} alpha_a`. For fixed `l2`
//! the budget `||w||^2` is a secular function of `l1`; the second multiplier
//! is found by bisection because `w^H C w` is non-increasing in `l2`.

use crate::linalg::{hermitian_eigen, secular_root, CMatrix, CVector, C64};
use crate::{Error, Result};

/// Tolerance of the inner secular solve.
const INNER_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct BlockQcqp {
    pub alpha: Vec<CVector>,
    pub b: Vec<CMatrix>,
    pub c: Vec<CMatrix>,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub w: Vec<CVector>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub objective: f64,
}

impl BlockQcqp {
    pub fn objective(&self, w: &[CVector]) -> f64 {
        self.alpha
            .iter()
            .zip(&self.b)
            .zip(w)
            .map(|((a, b), w)| 2.0 * a.dotc(w).re - w.dotc(&(b * w)).re)
            .sum()
    }

    pub fn power(w: &[CVector]) -> f64 {
        w.iter().map(|x| x.norm_squared()).sum()
    }

    pub fn c_power(&self, w: &[CVector]) -> f64 {
        self.c.iter().zip(w).map(|(c, w)| w.dotc(&(c * w)).re).sum()
    }

    fn check(&self) -> Result<()> {
        let n = self.alpha.len();
        if self.b.len() != n || self.c.len() != n {
            return Err(Error::Dimension("QCQP blocks disagree".into()));
        }
        for ((a, b), c) in self.alpha.iter().zip(&self.b).zip(&self.c) {
            let t = a.len();
            if b.shape() != (t, t) || c.shape() != (t, t) {
                return Err(Error::Dimension("QCQP block shapes disagree".into()));
            }
        }
        if !(self.p1 > 0.0) {
            return Err(Error::Infeasible(format!("first budget must be positive, got {}", self.p1)));
        }
        if !(self.p2 >= 0.0) {
            return Err(Error::Infeasible(format!("second budget is negative: {}", self.p2)));
        }
        Ok(())
    }

    /// Primal point for a given second multiplier, with the first chosen to
    /// meet the power budget.
    fn primal(&self, lambda2: f64) -> (Vec<CVector>, f64) {
        let mut eigs = Vec::with_capacity(self.alpha.len());
        let mut wts = Vec::new();
        let mut vals = Vec::new();
        for ((a, b), c) in self.alpha.iter().zip(&self.b).zip(&self.c) {
            let m = b + c * C64::from(lambda2);
            let (s, u) = hermitian_eigen(&m);
            let ut = u.ad_mul(a);
            wts.extend(ut.iter().map(|x| x.norm_sqr()));
            vals.extend(s.iter().copied());
            eigs.push((s, u, ut));
        }
        let l1 = secular_root(&wts, &vals, self.p1, INNER_TOL);
        let w = eigs
            .into_iter()
            .map(|(s, u, ut)| {
                let coef = CVector::from_fn(s.len(), |i, _| {
                    let den = s[i].max(0.0) + l1;
                    if den > 0.0 {
                        ut[i] / den
                    } else {
                        C64::from(0.0)
                    }
                });
                u * coef
            })
            .collect();
        (w, l1)
    }

    /// Solve to relative accuracy `tol` on the binding second budget.
    pub fn solve(&self, tol: f64) -> Result<QcqpSolution> {
        self.check()?;
        let g2 = |l2: f64| {
            let (w, l1) = self.primal(l2);
            let v = self.c_power(&w) - self.p2;
            (v, w, l1)
        };
        let (v0, w0, l10) = g2(0.0);
        let (mut w, mut l1, mut l2) = (w0, l10, 0.0);
        let slack = tol * self.p2.max(f64::MIN_POSITIVE);
        if v0 > slack {
            let tb: f64 = self.b.iter().map(|b| b.trace().re).sum();
            let tc: f64 = self.c.iter().map(|c| c.trace().re).sum();
            let mut hi = if tc > 0.0 && tb > 0.0 { tb / tc } else { 1.0 };
            let mut lo = 0.0;
            let mut best = None;
            for _ in 0..700 {
                let (v, wh, l1h) = g2(hi);
                if v <= 0.0 {
                    best = Some((wh, l1h));
                    break;
                }
                lo = hi;
                hi *= 4.0;
            }
            let (mut wb, mut l1b) = best.ok_or_else(|| Error::Infeasible("second budget cannot be met".into()))?;
            for _ in 0..400 {
                let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
                let (v, wm, l1m) = g2(mid);
                if v > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                    wb = wm;
                    l1b = l1m;
                    if -v <= slack {
                        break;
                    }
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            w = wb;
            l1 = l1b;
            l2 = hi;
        }
        // exact feasibility after finite-precision multipliers
        let p = Self::power(&w);
        let cp = self.c_power(&w);
        let mut scale: f64 = 1.0;
        if p > self.p1 {
            scale = scale.min((self.p1 / p).sqrt());
        }
        if cp > self.p2 {
            scale = scale.min((self.p2 / cp).sqrt());
        }
        if scale < 1.0 {
            for x in w.iter_mut() {
                *x *= C64::from(scale);
            }
        }
        let objective = self.objective(&w);
        Ok(QcqpSolution { w, lambda1: l1, lambda2: l2, objective })
    }
}
