//! Gradient refinement of rational and polynomial filter coefficients
//! against spectral-domain MSE.
//!
//! The descent direction is the analytic gradient scaled by a fixed diagonal
//! metric computed once from the initial Jacobian (the raw gradient is
//! useless in the ψ/φ valley: its components differ by orders of magnitude).
//! Each epoch line-searches the step over lr·2^(−h), h = 0..=20, and accepts
//! the best strictly descending pole-free candidate; epochs with no such
//! candidate change nothing. The best-loss coefficients seen are returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{basis_value, PolyBasis, PolynomialFilter, RationalFilter};
use crate::remez::DiscreteTarget;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Largest step scale tried per epoch.
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the best loss improves by no more than this over a window.
    pub tol: f64,
    pub tol_window: usize,
    /// Steps that pull any |Q(t_d)| below this are rejected.
    pub pole_guard: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 5000,
            tol: 1e-12,
            tol_window: 50,
            pole_guard: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad_rate = !self.learning_rate.is_finite() || self.learning_rate < 0.0;
        let bad_tol = !self.tol.is_finite() || self.tol < 0.0;
        let bad_guard = !self.pole_guard.is_finite() || self.pole_guard <= 0.0;
        if bad_rate || bad_tol || bad_guard || self.tol_window == 0 {
            return Err(Error::InvalidParameter("bad train config".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitSource {
    Remez,
    Zeros,
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coefficients {
    Rational { psi: Vec<f64>, phi: Vec<f64> },
    Polynomial { theta: Vec<f64>, basis: PolyBasis },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub method: String,
    pub coefficients: Coefficients,
    pub spectral_mse: f64,
    pub vertex_mse: Option<f64>,
    pub epochs: usize,
    pub loss_trace: Vec<f64>,
    pub init: InitSource,
}

impl FitReport {
    /// Loss trace as a two-column CSV, entry 0 is the initial loss.
    pub fn loss_trace_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.loss_trace.iter().enumerate() {
            out.push_str(&format!("{i},{l:.16e}\n"));
        }
        out
    }
}

/// Mean over samples of (R(t_d)·x̂_d − ŷ_d)².
pub fn spectral_loss(f: &RationalFilter, target: &DiscreteTarget, xhat: &[f64]) -> Result<f64> {
    check_lengths(target, xhat)?;
    let mut acc = 0.0;
    for ((&t, &y), &xh) in target.ts().iter().zip(target.ys()).zip(xhat) {
        let e = f.eval(t)? * xh - y;
        acc += e * e;
    }
    Ok(acc / target.len() as f64)
}

/// Analytic gradients of `spectral_loss`:
/// ∂L/∂ψᵢ = (2/N) Σ e_d x̂_d t_dⁱ / Q(t_d),
/// ∂L/∂φⱼ = −(2/N) Σ e_d x̂_d t_dʲ P(t_d) / Q(t_d)².
pub fn gradients(
    f: &RationalFilter,
    target: &DiscreteTarget,
    xhat: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lengths(target, xhat)?;
    let n_samples = target.len() as f64;
    let mut dpsi = vec![0.0; f.psi.len()];
    let mut dphi = vec![0.0; f.phi.len()];
    for ((&t, &y), &xh) in target.ts().iter().zip(target.ys()).zip(xhat) {
        let q = f.denominator_at(t);
        if q.abs() < crate::filters::POLE_GUARD {
            return Err(Error::Pole { t });
        }
        let p = f.numerator_at(t);
        let e = (p / q) * xh - y;
        let mut ti = 1.0;
        for d in dpsi.iter_mut() {
            *d += e * xh * ti / q;
            ti *= t;
        }
        let mut tj = t;
        for d in dphi.iter_mut() {
            *d -= e * xh * tj * p / (q * q);
            tj *= t;
        }
    }
    for d in dpsi.iter_mut().chain(dphi.iter_mut()) {
        *d *= 2.0 / n_samples;
    }
    Ok((dpsi, dphi))
}

fn check_lengths(target: &DiscreteTarget, xhat: &[f64]) -> Result<()> {
    if xhat.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            got: xhat.len(),
        });
    }
    Ok(())
}

/// Shared descent loop over a flat parameter vector.
struct DescentOutcome {
    best_params: Vec<f64>,
    best_loss: f64,
    trace: Vec<f64>,
    epochs: usize,
}

fn descend(
    theta0: Vec<f64>,
    loss_of: impl Fn(&[f64]) -> Option<f64>,
    grad_of: impl Fn(&[f64]) -> Vec<f64>,
    scale: &[f64],
    cfg: &TrainConfig,
) -> Result<DescentOutcome> {
    cfg.validate()?;
    let init_loss = loss_of(&theta0).ok_or(Error::Pole { t: f64::NAN })?;
    let mut theta = theta0;
    let mut cur = init_loss;
    let mut best_params = theta.clone();
    let mut best_loss = cur;
    let mut trace = Vec::with_capacity(cfg.max_epochs + 1);
    trace.push(cur);
    let mut best_hist = Vec::with_capacity(cfg.max_epochs + 1);
    best_hist.push(best_loss);
    let mut epochs = 0;
    for _ in 0..cfg.max_epochs {
        epochs += 1;
        let g = grad_of(&theta);
        let mut candidate: Option<(f64, Vec<f64>)> = None;
        let mut step = cfg.learning_rate;
        for _ in 0..=20 {
            if step == 0.0 {
                break;
            }
            let trial: Vec<f64> = theta
                .iter()
                .zip(&g)
                .zip(scale)
                .map(|((&p, &gi), &s)| p - step * gi / s)
                .collect();
            if let Some(l) = loss_of(&trial) {
                if l < cur && candidate.as_ref().is_none_or(|c| l < c.0) {
                    candidate = Some((l, trial));
                }
            }
            step *= 0.5;
        }
        if let Some((l, t)) = candidate {
            theta = t;
            cur = l;
            if cur < best_loss {
                best_loss = cur;
                best_params = theta.clone();
            }
        }
        trace.push(cur);
        best_hist.push(best_loss);
        if epochs >= cfg.tol_window {
            let before = best_hist[best_hist.len() - 1 - cfg.tol_window];
            if before - best_loss <= cfg.tol {
                break;
            }
        }
    }
    Ok(DescentOutcome {
        best_params,
        best_loss,
        trace,
        epochs,
    })
}

/// Gradient refinement of a rational filter. `f0` must be pole-free on the
/// sample set.
pub fn train(
    f0: &RationalFilter,
    target: &DiscreteTarget,
    xhat: &[f64],
    cfg: &TrainConfig,
) -> Result<FitReport> {
    check_lengths(target, xhat)?;
    spectral_loss(f0, target, xhat)?;
    let m1 = f0.psi.len();
    let n1 = f0.phi.len();

    // fixed diagonal metric from the initial Jacobian
    let mut scale = vec![0.0f64; m1 + n1];
    let nn = target.len() as f64;
    for (&t, &xh) in target.ts().iter().zip(xhat) {
        let q = f0.denominator_at(t);
        let p = f0.numerator_at(t);
        let mut ti = 1.0;
        for s in scale.iter_mut().take(m1) {
            let j = xh * ti / q;
            *s += j * j / nn;
            ti *= t;
        }
        let mut tj = t;
        for s in scale.iter_mut().skip(m1) {
            let j = xh * tj * p / (q * q);
            *s += j * j / nn;
            tj *= t;
        }
    }
    let smax = scale.iter().cloned().fold(0.0f64, f64::max);
    let floor = if smax > 0.0 { smax * 1e-12 } else { 1.0 };
    for s in scale.iter_mut() {
        *s = s.max(floor);
    }

    let guard = cfg.pole_guard;
    let loss_of = |theta: &[f64]| -> Option<f64> {
        let f = RationalFilter::new(theta[..m1].to_vec(), theta[m1..].to_vec());
        if f.min_abs_denominator(target.ts()) < guard {
            return None;
        }
        let mut acc = 0.0;
        for ((&t, &y), &xh) in target.ts().iter().zip(target.ys()).zip(xhat) {
            let e = (f.numerator_at(t) / f.denominator_at(t)) * xh - y;
            acc += e * e;
        }
        Some(acc / nn)
    };
    let grad_of = |theta: &[f64]| -> Vec<f64> {
        let f = RationalFilter::new(theta[..m1].to_vec(), theta[m1..].to_vec());
        match gradients(&f, target, xhat) {
            Ok((dpsi, dphi)) => dpsi.into_iter().chain(dphi).collect(),
            Err(_) => vec![0.0; m1 + n1],
        }
    };

    let mut theta0 = f0.psi.clone();
    theta0.extend_from_slice(&f0.phi);
    let out = descend(theta0, loss_of, grad_of, &scale, cfg)?;
    Ok(FitReport {
        method: "rational-gd".into(),
        coefficients: Coefficients::Rational {
            psi: out.best_params[..m1].to_vec(),
            phi: out.best_params[m1..].to_vec(),
        },
        spectral_mse: out.best_loss,
        vertex_mse: None,
        epochs: out.epochs,
        loss_trace: out.trace,
        init: InitSource::Given,
    })
}

/// Same refinement for a polynomial filter (no pole guard needed; the basis
/// is evaluated at the caller's abscissae, which for the Chebyshev basis
/// must already lie in [-1, 1]).
pub fn train_poly(
    f0: &PolynomialFilter,
    target: &DiscreteTarget,
    xhat: &[f64],
    cfg: &TrainConfig,
) -> Result<FitReport> {
    check_lengths(target, xhat)?;
    let k = f0.theta.len();
    let basis = f0.basis;
    let nn = target.len() as f64;
    let rows: Vec<Vec<f64>> = target
        .ts()
        .iter()
        .map(|&t| (0..k).map(|j| basis_value(basis, j, t)).collect())
        .collect();
    if basis == PolyBasis::Chebyshev {
        if let Some(&t) = target
            .ts()
            .iter()
            .find(|t| !(-1.0 - 1e-12..=1.0 + 1e-12).contains(*t))
        {
            return Err(Error::InvalidParameter(format!(
                "Chebyshev basis needs samples in [-1, 1], got {t}"
            )));
        }
    }

    let mut scale = vec![0.0f64; k];
    for (row, &xh) in rows.iter().zip(xhat) {
        for (s, &b) in scale.iter_mut().zip(row) {
            *s += (xh * b) * (xh * b) / nn;
        }
    }
    let smax = scale.iter().cloned().fold(0.0f64, f64::max);
    let floor = if smax > 0.0 { smax * 1e-12 } else { 1.0 };
    for s in scale.iter_mut() {
        *s = s.max(floor);
    }

    let loss_of = |theta: &[f64]| -> Option<f64> {
        let mut acc = 0.0;
        for ((row, &y), &xh) in rows.iter().zip(target.ys()).zip(xhat) {
            let v: f64 = row.iter().zip(theta).map(|(b, c)| b * c).sum();
            let e = v * xh - y;
            acc += e * e;
        }
        Some(acc / nn)
    };
    let grad_of = |theta: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; k];
        for ((row, &y), &xh) in rows.iter().zip(target.ys()).zip(xhat) {
            let v: f64 = row.iter().zip(theta).map(|(b, c)| b * c).sum();
            let e = v * xh - y;
            for (gi, &b) in g.iter_mut().zip(row) {
                *gi += 2.0 * e * xh * b / nn;
            }
        }
        g
    };

    let out = descend(f0.theta.clone(), loss_of, grad_of, &scale, cfg)?;
    Ok(FitReport {
        method: "poly-gd".into(),
        coefficients: Coefficients::Polynomial {
            theta: out.best_params,
            basis,
        },
        spectral_mse: out.best_loss,
        vertex_mse: None,
        epochs: out.epochs,
        loss_trace: out.trace,
        init: InitSource::Given,
    })
}
