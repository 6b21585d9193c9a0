//! Convergence-rate machinery: jump-discontinuity targets, the Newman
//! rational construction for |x|, and the rational-vs-polynomial decay
//! experiment.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::basis_value;
use crate::linalg;
use crate::remez;

/// Jump-discontinuity family a·|u|/u^σ + b·u with u = x − shift, σ ∈ {0, 1}.
/// σ = 0 gives kinks (ReLU-like), σ = 1 gives sign-like jumps. At the
/// discontinuity itself (σ = 1, u = 0) the value is 0 by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpTarget {
    pub a: f64,
    pub b: f64,
    pub sigma: u8,
    pub shift: f64,
}

impl JumpTarget {
    pub fn new(a: f64, b: f64, sigma: u8, shift: f64) -> Result<JumpTarget> {
        if sigma > 1 {
            return Err(Error::InvalidParameter("sigma must be 0 or 1".into()));
        }
        Ok(JumpTarget { a, b, sigma, shift })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.shift;
        let head = if self.sigma == 0 {
            u.abs()
        } else if u == 0.0 {
            0.0
        } else {
            u.abs() / u
        };
        self.a * head + self.b * u
    }
}

pub fn eval_jump(j: &JumpTarget, x: f64) -> f64 {
    j.eval(x)
}

/// Newman approximant A_n(x) = x·(N(x) − N(−x))/(N(x) + N(−x)) with
/// N(x) = Π_{i=1}^{n−1} (x + αⁱ), α = e^(−1/√n).
///
/// Evaluated as x(1 − ρ)/(1 + ρ), ρ = Π (αⁱ − |x|)/(αⁱ + |x|): every factor
/// lies in (−1, 1), so the product cannot under- or overflow. A_n is even
/// and approximates |x| on [−1, 1].
pub fn newman_approx(n: usize, x: f64) -> Result<f64> {
    if n < 5 {
        return Err(Error::InvalidParameter(format!(
            "Newman construction needs n >= 5, got {n}"
        )));
    }
    let alpha = (-1.0 / (n as f64).sqrt()).exp();
    let xa = x.abs();
    let mut rho = 1.0f64;
    let mut ai = 1.0f64;
    for _ in 1..n {
        ai *= alpha;
        rho *= (ai - xa) / (ai + xa);
    }
    Ok(xa * (1.0 - rho) / (1.0 + rho))
}

/// sup over a uniform grid on [−c, c] of | |x| − c·A_n(x/c) |.
pub fn newman_sup_error(n: usize, c: f64, grid: usize) -> Result<f64> {
    if !c.is_finite() || c <= 0.0 || grid < 2 {
        return Err(Error::InvalidParameter("need c > 0 and grid >= 2".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..grid {
        let x = -c + 2.0 * c * i as f64 / (grid - 1) as f64;
        let err = (x.abs() - c * newman_approx(n, x / c)?).abs();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Lemma-style bound 3·c·e^(−√n) for the Newman error on [−c, c].
pub fn newman_bound(n: usize, c: f64) -> f64 {
    3.0 * c * (-(n as f64).sqrt()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateKind {
    Rational,
    Polynomial,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub degree: usize,
    pub sup_error: f64,
}

/// Sup-error decay of approximants to a jump target over a dense grid on
/// [shift − c, shift + c].
///
/// The rational path uses the scaled Newman construction for the |u| part
/// (a·c·A_n(u/c)/u^σ + b·u); the polynomial path runs a Remez minimax fit of
/// degree n with empty denominator on the grid samples.
pub fn rate_experiment(
    kind: RateKind,
    target: &JumpTarget,
    c: f64,
    degrees: &[usize],
    grid_size: usize,
) -> Result<Vec<RatePoint>> {
    if grid_size < 2 {
        return Err(Error::InvalidParameter("grid_size must be >= 2".into()));
    }
    if let Some(&d) = degrees.iter().find(|&&d| d < 5) {
        return Err(Error::InvalidParameter(format!(
            "degrees must be >= 5, got {d}"
        )));
    }
    let xs: Vec<f64> = (0..grid_size)
        .map(|i| target.shift - c + 2.0 * c * i as f64 / (grid_size - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| target.eval(x)).collect();

    let eval_rational_sup = |n: usize| -> Result<f64> {
        let mut worst = 0.0f64;
        for (&x, &fx) in xs.iter().zip(&fs) {
            let u = x - target.shift;
            let an = c * newman_approx(n, u / c)?;
            let head = if target.sigma == 0 {
                an
            } else if u == 0.0 {
                0.0
            } else {
                an / u
            };
            let approx = target.a * head + target.b * u;
            worst = worst.max((fx - approx).abs());
        }
        Ok(worst)
    };
    let lo = target.shift - c;
    let hi = target.shift + c;
    let eval_polynomial_sup =
        |n: usize| -> Result<f64> { poly_minimax_sup_error(&xs, &fs, n, lo, hi) };

    degrees
        .par_iter()
        .map(|&degree| {
            let sup_error = match kind {
                RateKind::Rational => eval_rational_sup(degree)?,
                RateKind::Polynomial => eval_polynomial_sup(degree)?,
            };
            Ok(RatePoint { degree, sup_error })
        })
        .collect()
}

/// Discrete minimax polynomial fit of degree `n` (a Remez exchange with an
/// empty denominator), returning the best sup error over the samples.
///
/// The leveling system is assembled in the Chebyshev basis on [lo, hi]
/// mapped to [-1, 1]; a monomial basis turns singular around degree 25,
/// while this stays solvable through degree 50 and beyond. The minimax
/// polynomial itself is basis-independent, and only its error is needed.
pub fn poly_minimax_sup_error(
    xs: &[f64],
    ys: &[f64],
    degree: usize,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let len = xs.len();
    let k = degree + 2;
    if len < k {
        return Err(Error::InvalidParameter(format!(
            "need at least {k} samples for degree {degree}"
        )));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidParameter("bad interval".into()));
    }
    let us: Vec<f64> = xs
        .iter()
        .map(|&x| 2.0 * (x - lo) / (hi - lo) - 1.0)
        .collect();
    let mut ctrl: Vec<usize> = (0..k)
        .map(|i| (i as f64 * (len - 1) as f64 / (k - 1) as f64).round() as usize)
        .collect();
    let mut best: Option<f64> = None;
    let mut prev_extremes: Option<(f64, f64)> = None;
    for _ in 0..remez::DEFAULT_MAX_OUTER {
        // leveled solve: sum_j theta_j T_j(u_d) + (-1)^d E = y_d
        let mut a = Array2::<f64>::zeros((k, k));
        let mut b = vec![0.0; k];
        for (d, &idx) in ctrl.iter().enumerate() {
            for j in 0..=degree {
                a[(d, j)] = basis_value(crate::filters::PolyBasis::Chebyshev, j, us[idx]);
            }
            a[(d, degree + 1)] = if d % 2 == 0 { 1.0 } else { -1.0 };
            b[d] = ys[idx];
        }
        let sol = match linalg::lu_solve(a, &b, 1e-12) {
            Ok(sol) => sol,
            Err(Error::SingularSystem) => break,
            Err(e) => return Err(e),
        };
        let theta = &sol[..=degree];
        let e = sol[degree + 1];

        let resid: Vec<f64> = us
            .iter()
            .zip(ys)
            .map(|(&u, &y)| {
                let mut b1 = 0.0;
                let mut b2 = 0.0;
                for &c in theta.iter().skip(1).rev() {
                    let b0 = 2.0 * u * b1 - b2 + c;
                    b2 = b1;
                    b1 = b0;
                }
                y - (theta[0] + u * b1 - b2)
            })
            .collect();
        let max_res = resid.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        let min_res = resid.iter().fold(f64::INFINITY, |acc, r| acc.min(r.abs()));
        if best.is_none_or(|b| max_res < b) {
            best = Some(max_res);
        }
        if max_res <= e.abs() + 1e-9 {
            break;
        }
        if let Some((pmin, pmax)) = prev_extremes {
            if (pmin - min_res).abs() < 1e-9 && (pmax - max_res).abs() < 1e-9 {
                break;
            }
        }
        prev_extremes = Some((min_res, max_res));
        match remez::exchange(&resid, k, &ctrl) {
            Some(next) if next != ctrl => ctrl = next,
            _ => break,
        }
    }
    best.ok_or(Error::SingularSystem)
}

/// Least-squares line fit of y against x, returning (slope, intercept, r²).
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("need two or more points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::NumericalFailure("degenerate regression".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = (sxy * sxy) / (sxx * syy);
    Ok((slope, intercept, r2))
}
