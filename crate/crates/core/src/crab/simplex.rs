//! Nelder-Mead downhill simplex minimization.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexConfig {
    /// Reflection coefficient.
    pub alpha: f64,
    /// Expansion coefficient.
    pub gamma: f64,
    /// Contraction coefficient.
    pub rho: f64,
    /// Shrink coefficient.
    pub sigma: f64,
    pub max_evals: usize,
    /// Stop when the spread of vertex values falls below this...
    pub f_tol: f64,
    /// ...and every vertex is this close to the best one.
    pub x_tol: f64,
    /// Number of CRAB restarts with fresh random frequencies.
    pub restarts: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 2.0,
            rho: 0.5,
            sigma: 0.5,
            max_evals: 2000,
            f_tol: 1e-8,
            x_tol: 1e-8,
            restarts: 10,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.gamma > 1.0
            && self.rho > 0.0
            && self.rho < 1.0
            && self.sigma > 0.0
            && self.sigma < 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "simplex coefficients out of range: alpha={} gamma={} rho={} sigma={}",
                self.alpha, self.gamma, self.rho, self.sigma
            )));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidParameter("max_evals must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxEvals,
    TargetReached,
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub reason: StopReason,
}

/// Minimizes `f` from `x0` with an initial simplex of axis steps `steps`.
/// Stops early once a value `<= target` is seen.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    cfg: &SimplexConfig,
    target: Option<f64>,
) -> Result<SimplexResult>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let n = x0.len();
    if steps.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: steps.len(),
        });
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let reached = |v: f64| target.is_some_and(|t| v <= t);

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    vals.push(eval(x0, &mut evals));
    if reached(vals[0]) || n == 0 {
        return Ok(SimplexResult {
            x: x0.to_vec(),
            f: vals[0],
            evals,
            reason: if n == 0 {
                StopReason::Converged
            } else {
                StopReason::TargetReached
            },
        });
    }
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if steps[i] != 0.0 { steps[i] } else { 2.5e-4 };
        let v = eval(&p, &mut evals);
        pts.push(p);
        vals.push(v);
        if reached(v) {
            return Ok(SimplexResult {
                x: pts[i + 1].clone(),
                f: v,
                evals,
                reason: StopReason::TargetReached,
            });
        }
    }

    let mut order: Vec<usize> = (0..=n).collect();
    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        if reached(vals[best]) {
            return Ok(done(&pts, &vals, best, evals, StopReason::TargetReached));
        }
        let spread = vals[worst] - vals[best];
        let size = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[best])
                    .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
            })
            .fold(0.0_f64, f64::max);
        if spread <= cfg.f_tol && size <= cfg.x_tol {
            return Ok(done(&pts, &vals, best, evals, StopReason::Converged));
        }
        if evals >= cfg.max_evals {
            return Ok(done(&pts, &vals, best, evals, StopReason::MaxEvals));
        }

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-cfg.alpha);
        let fr = eval(&xr, &mut evals);
        if fr < vals[best] {
            let xe = along(-cfg.alpha * cfg.gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < vals[worst] {
            let xc = along(-cfg.alpha * cfg.rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(cfg.rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc, fc < vals[worst])
        };
        if accept {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        let xb = pts[best].clone();
        for &i in &order[1..] {
            let p: Vec<f64> = xb
                .iter()
                .zip(&pts[i])
                .map(|(b, x)| b + cfg.sigma * (x - b))
                .collect();
            vals[i] = eval(&p, &mut evals);
            pts[i] = p;
        }
    }
}

fn done(pts: &[Vec<f64>], vals: &[f64], best: usize, evals: usize, reason: StopReason) -> SimplexResult {
    SimplexResult {
        x: pts[best].clone(),
        f: vals[best],
        evals,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn rosenbrock_within_500_evaluations() {
        let cfg = SimplexConfig {
            max_evals: 500,
            f_tol: 1e-12,
            x_tol: 1e-10,
            ..Default::default()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &[0.1, 0.1], &cfg, None).unwrap();
        assert!(r.f < 1e-6, "f = {} after {} evals", r.f, r.evals);
        assert!(r.evals <= 500);
        assert!((r.x[0] - 1.0).abs() < 1e-2 && (r.x[1] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn one_dimensional_quadratic() {
        let cfg = SimplexConfig {
            x_tol: 1e-9,
            f_tol: 1e-14,
            ..Default::default()
        };
        let r = minimize(|x| (x[0] - 3.25).powi(2) + 0.5, &[0.0], &[1.0], &cfg, None).unwrap();
        assert_eq!(r.reason, StopReason::Converged);
        assert!((r.x[0] - 3.25).abs() < 1e-8);
    }

    #[test]
    fn target_reached_at_start() {
        let r = minimize(|_| 0.0, &[1.0, 2.0], &[0.1, 0.1], &SimplexConfig::default(), Some(0.0)).unwrap();
        assert_eq!(r.evals, 1);
        assert_eq!(r.reason, StopReason::TargetReached);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let cfg = SimplexConfig {
            gamma: 0.5,
            ..Default::default()
        };
        assert!(minimize(|x| x[0], &[0.0], &[1.0], &cfg, None).is_err());
    }
}
