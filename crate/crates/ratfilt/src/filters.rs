//! Padé rational and polynomial (monomial / Chebyshev) filters: evaluation
//! on scalars and vectors, application through Laplacian powers, and
//! least-squares polynomial fitting.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Laplacian;
use crate::linalg;

/// Denominator magnitudes below this are treated as poles.
pub const POLE_GUARD: f64 = 1e-8;

/// Padé rational filter R(t) = P(t)/Q(t) with P(t) = Σ ψᵢ tⁱ and
/// Q(t) = 1 + Σ_{j≥1} φⱼ tʲ (φ₀ ≡ 1 is implied, never stored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalFilter {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
}

impl RationalFilter {
    pub fn new(psi: Vec<f64>, phi: Vec<f64>) -> RationalFilter {
        RationalFilter { psi, phi }
    }

    /// Numerator degree m (psi holds m+1 coefficients).
    pub fn m(&self) -> usize {
        self.psi.len().saturating_sub(1)
    }

    /// Denominator degree n (phi holds n coefficients).
    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn numerator_at(&self, t: f64) -> f64 {
        horner(&self.psi, t)
    }

    pub fn denominator_at(&self, t: f64) -> f64 {
        let mut q = 0.0;
        for &c in self.phi.iter().rev() {
            q = q * t + c;
        }
        q * t + 1.0
    }

    /// P(t)/Q(t); a denominator below the pole guard is an error naming t.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let q = self.denominator_at(t);
        if q.abs() < POLE_GUARD {
            return Err(Error::Pole { t });
        }
        Ok(self.numerator_at(t) / q)
    }

    pub fn eval_many(&self, ts: &[f64]) -> Result<Vec<f64>> {
        ts.iter().map(|&t| self.eval(t)).collect()
    }

    /// Smallest |Q(t)| over the sample set.
    pub fn min_abs_denominator(&self, ts: &[f64]) -> f64 {
        ts.iter()
            .map(|&t| self.denominator_at(t).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Zero-pads ψ to m+1 and φ to n entries.
    pub fn padded_to(&self, m: usize, n: usize) -> RationalFilter {
        let mut psi = self.psi.clone();
        psi.resize(psi.len().max(m + 1), 0.0);
        let mut phi = self.phi.clone();
        phi.resize(phi.len().max(n), 0.0);
        RationalFilter { psi, phi }
    }
}

pub fn eval_rational(f: &RationalFilter, ts: &[f64]) -> Result<Vec<f64>> {
    f.eval_many(ts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyBasis {
    Monomial,
    Chebyshev,
}

/// Polynomial filter Σ θ_k B_k(t) with B the monomial or Chebyshev
/// (first kind) basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFilter {
    pub theta: Vec<f64>,
    pub basis: PolyBasis,
}

impl PolynomialFilter {
    pub fn new(theta: Vec<f64>, basis: PolyBasis) -> PolynomialFilter {
        PolynomialFilter { theta, basis }
    }

    pub fn degree(&self) -> usize {
        self.theta.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self.basis {
            PolyBasis::Monomial => Ok(horner(&self.theta, t)),
            PolyBasis::Chebyshev => {
                if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&t) {
                    return Err(Error::InvalidParameter(format!(
                        "Chebyshev basis needs t in [-1, 1], got {t}"
                    )));
                }
                Ok(clenshaw_chebyshev(&self.theta, t))
            }
        }
    }

    pub fn eval_many(&self, ts: &[f64]) -> Result<Vec<f64>> {
        ts.iter().map(|&t| self.eval(t)).collect()
    }

    /// Converts to monomial coefficients (exact basis change; intended for
    /// low degrees).
    pub fn to_monomial(&self) -> PolynomialFilter {
        match self.basis {
            PolyBasis::Monomial => self.clone(),
            PolyBasis::Chebyshev => {
                let k = self.theta.len().max(1);
                let mut acc = vec![0.0; k];
                // T_0 = 1, T_1 = t, T_{j+1} = 2 t T_j - T_{j-1}
                let mut t_prev = vec![0.0; k];
                let mut t_cur = vec![0.0; k];
                t_prev[0] = 1.0;
                if k > 1 {
                    t_cur[1] = 1.0;
                }
                for (j, &c) in self.theta.iter().enumerate() {
                    let basis = if j == 0 { &t_prev } else { &t_cur };
                    for (a, b) in acc.iter_mut().zip(basis) {
                        *a += c * b;
                    }
                    if j >= 1 && j + 1 < k {
                        let mut next = vec![0.0; k];
                        for i in 0..k - 1 {
                            next[i + 1] += 2.0 * t_cur[i];
                        }
                        for (n, p) in next.iter_mut().zip(&t_prev) {
                            *n -= p;
                        }
                        t_prev = std::mem::replace(&mut t_cur, next);
                    }
                }
                PolynomialFilter::new(acc, PolyBasis::Monomial)
            }
        }
    }
}

pub fn eval_poly(f: &PolynomialFilter, ts: &[f64]) -> Result<Vec<f64>> {
    f.eval_many(ts)
}

pub fn horner(coeffs: &[f64], t: f64) -> f64 {
    let mut y = 0.0;
    for &c in coeffs.iter().rev() {
        y = y * t + c;
    }
    y
}

/// Clenshaw recurrence for Σ θ_k T_k(t).
fn clenshaw_chebyshev(theta: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in theta.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    theta.first().copied().unwrap_or(0.0) + t * b1 - b2
}

/// Evaluates B_k(t) for the given basis.
pub fn basis_value(basis: PolyBasis, k: usize, t: f64) -> f64 {
    match basis {
        PolyBasis::Monomial => t.powi(k as i32),
        PolyBasis::Chebyshev => {
            let mut prev = 1.0;
            let mut cur = t;
            if k == 0 {
                return 1.0;
            }
            for _ in 1..k {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Applies the rational filter through Laplacian powers:
/// solves Q(L̃) z = x, returns P(L̃) z with L̃ = L / lambda_max.
///
/// Never inverts Q(L̃); a dense LU solve with a residual check guards
/// against denominators that are singular on the spectrum.
pub fn apply_rational_vertex(
    f: &RationalFilter,
    l: &Laplacian,
    lambda_max: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let n = l.n();
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if lambda_max <= 0.0 {
        return Err(Error::InvalidParameter(
            "lambda_max must be positive".into(),
        ));
    }
    let lt = l.matrix() / lambda_max;

    // Q(L~) assembled from accumulated matrix powers
    let mut q_mat = Array2::<f64>::eye(n);
    let mut power = Array2::<f64>::eye(n);
    for &c in &f.phi {
        power = power.dot(&lt);
        q_mat.scaled_add(c, &power);
    }

    let z = match linalg::lu_solve(q_mat.clone(), x, 1e-300) {
        Ok(z) => z,
        Err(Error::SingularSystem) => {
            return Err(Error::SingularDenominator {
                residual: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let res = linalg::residual_norm(&q_mat, &z, x);
    let xnorm = linalg::norm2(x);
    if !res.is_finite() || res > 1e-6 * xnorm.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularDenominator { residual: res });
    }

    // y = P(L~) z via repeated matrix-vector products
    let mut y = vec![0.0; n];
    let mut term = z;
    for (i, &c) in f.psi.iter().enumerate() {
        if i > 0 {
            let mut next = vec![0.0; n];
            for r in 0..n {
                let mut s = 0.0;
                for cidx in 0..n {
                    s += lt[(r, cidx)] * term[cidx];
                }
                next[r] = s;
            }
            term = next;
        }
        for (yv, tv) in y.iter_mut().zip(&term) {
            *yv += c * tv;
        }
    }
    Ok(y)
}

/// Least-squares polynomial fit via normal equations with a 1e-12 ridge
/// jitter on the Gram diagonal.
pub fn fit_poly_least_squares(
    ts: &[f64],
    ys: &[f64],
    degree: usize,
    basis: PolyBasis,
) -> Result<PolynomialFilter> {
    if ts.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: ts.len(),
            got: ys.len(),
        });
    }
    let k = degree + 1;
    if ts.len() < k {
        return Err(Error::InvalidParameter(format!(
            "need at least {k} samples for degree {degree}"
        )));
    }
    let mut gram = Array2::<f64>::zeros((k, k));
    let mut rhs = vec![0.0; k];
    let mut row = vec![0.0; k];
    for (&t, &y) in ts.iter().zip(ys) {
        for (j, r) in row.iter_mut().enumerate() {
            *r = basis_value(basis, j, t);
        }
        for i in 0..k {
            for j in 0..k {
                gram[(i, j)] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    for i in 0..k {
        gram[(i, i)] += 1e-12;
    }
    let theta = lu_solve_or_rank_error(gram, &rhs)?;
    Ok(PolynomialFilter::new(theta, basis))
}

fn lu_solve_or_rank_error(gram: Array2<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    match linalg::lu_solve(gram, rhs, 1e-300) {
        Ok(theta) if theta.iter().all(|v| v.is_finite()) => Ok(theta),
        Ok(_) | Err(Error::SingularSystem) => Err(Error::NumericalFailure(
            "rank-deficient least-squares system beyond jitter rescue".into(),
        )),
        Err(e) => Err(e),
    }
}
