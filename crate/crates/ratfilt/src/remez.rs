//! Relaxed Remez exchange on discrete samples: leveled linearized solves,
//! control-point exchange at residual extrema, relaxed stopping rules, and
//! traversal of the (m, n) order lattice.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::RationalFilter;
use crate::linalg;

pub const DEFAULT_MAX_OUTER: usize = 50;
pub const DEFAULT_MAX_INNER: usize = 100;

/// |E_{r+1} - E_r| threshold for inner-loop agreement.
const INNER_TOL: f64 = 1e-6;
/// Slack on the convergence test max|δ| <= |E| + CONVERGE_SLACK.
const CONVERGE_SLACK: f64 = 1e-9;
/// Repetition tolerance of the extreme residuals across outer iterations.
const REPEAT_TOL: f64 = 1e-9;
/// Pivot threshold declaring the linearized system singular.
const PIVOT_TOL: f64 = 1e-12;
/// Denominator magnitude below which an iterate counts as poled.
const POLE_TOL: f64 = 1e-8;
/// Consecutive poled iterates tolerated before a relaxed stop.
const MAX_POLE_STREAK: usize = 3;

/// Target function known at discrete sample points, sorted by abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTarget {
    ts: Vec<f64>,
    ys: Vec<f64>,
}

impl DiscreteTarget {
    pub fn new(ts: Vec<f64>, ys: Vec<f64>) -> Result<DiscreteTarget> {
        if ts.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: ts.len(),
                got: ys.len(),
            });
        }
        if ts.is_empty() {
            return Err(Error::InvalidParameter("target has no samples".into()));
        }
        if ts.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "sample abscissae not sorted".into(),
            ));
        }
        if ts.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(DiscreteTarget { ts, ys })
    }

    pub fn from_fn(ts: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<DiscreteTarget> {
        let ys = ts.iter().map(|&t| f(t)).collect();
        DiscreteTarget::new(ts, ys)
    }

    pub fn uniform_grid(
        a: f64,
        b: f64,
        len: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<DiscreteTarget> {
        if len < 2 || !a.is_finite() || !b.is_finite() || a >= b {
            return Err(Error::InvalidParameter("bad grid".into()));
        }
        let ts: Vec<f64> = (0..len)
            .map(|i| a + (b - a) * i as f64 / (len - 1) as f64)
            .collect();
        DiscreteTarget::from_fn(ts, f)
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemezStatus {
    Running,
    Converged,
    RelaxedStop,
    SingularSkip,
}

/// Working state of one Remez run. `psi`/`phi`/`e`/`control_points`/
/// `control_residuals` all describe the final inner convergence together,
/// so the leveled-residual identity can be checked on them; the best-so-far
/// coefficients returned as the fit may come from an earlier outer iteration.
#[derive(Debug, Clone, Serialize)]
pub struct RemezState {
    pub control_points: Vec<usize>,
    pub e: f64,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub control_residuals: Vec<f64>,
    pub best_max_residual: f64,
    pub outer_iter: usize,
    pub inner_iter: usize,
    pub status: RemezStatus,
}

/// Solves the (m+n+2)-square linearized leveling system for one control set.
///
/// Row d imposes Σᵢ ψᵢ x_dⁱ + ((−1)^d E_r − y_d)·Σ_{j≥1} φⱼ x_dʲ
/// + (−1)^d E_{r+1} = y_d with unknowns (ψ, φ, E_{r+1}).
pub fn solve_linearized(
    ctrl_ts: &[f64],
    ctrl_ys: &[f64],
    m: usize,
    n: usize,
    e_r: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let k = m + n + 2;
    if ctrl_ts.len() != k || ctrl_ys.len() != k {
        return Err(Error::InvalidParameter(format!(
            "need exactly {k} control points for orders ({m}, {n})"
        )));
    }
    if !e_r.is_finite() {
        return Err(Error::NumericalFailure("E_r is not finite".into()));
    }
    let mut a = Array2::<f64>::zeros((k, k));
    let mut b = vec![0.0; k];
    for d in 0..k {
        let x = ctrl_ts[d];
        let y = ctrl_ys[d];
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        let mut p = 1.0;
        for i in 0..=m {
            a[(d, i)] = p;
            p *= x;
        }
        let mut xj = x;
        for j in 1..=n {
            a[(d, m + j)] = (sign * e_r - y) * xj;
            xj *= x;
        }
        a[(d, m + n + 1)] = sign;
        b[d] = y;
    }
    let sol = linalg::lu_solve(a, &b, PIVOT_TOL)?;
    let psi = sol[..=m].to_vec();
    let phi = sol[m + 1..m + 1 + n].to_vec();
    let e_next = sol[m + n + 1];
    Ok((psi, phi, e_next))
}

/// One leveled solve: coefficients, leveled error, control indices.
type SolvedLeveling = (Vec<f64>, Vec<f64>, f64, Vec<usize>);

/// Inner loop: iterate the linearized solve from E = 0 until two successive
/// leveled errors agree within 1e-6 or the iteration cap is hit.
fn inner_loop(
    ctrl_ts: &[f64],
    ctrl_ys: &[f64],
    m: usize,
    n: usize,
    max_inner: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64, usize)> {
    let mut e = 0.0;
    let mut out: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut iters = 0;
    for _ in 0..max_inner.max(1) {
        let (psi, phi, e_next) = solve_linearized(ctrl_ts, ctrl_ys, m, n, e)?;
        iters += 1;
        let delta = (e_next - e).abs();
        out = Some((psi, phi, e_next));
        if delta < INNER_TOL {
            break;
        }
        e = e_next;
    }
    let (psi, phi, e) = out.expect("max_inner >= 1");
    Ok((psi, phi, e, iters))
}

/// Indices of the largest-|residual| sample inside each maximal run of
/// constant residual sign. Zero residuals never open or flip a run.
pub(crate) fn alternating_extrema(resid: &[f64]) -> Vec<usize> {
    let mut cand = Vec::new();
    let mut last_sign = 0.0f64;
    let mut best: Option<usize> = None;
    for (i, &r) in resid.iter().enumerate() {
        let s = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            continue;
        };
        if last_sign == 0.0 || s == last_sign {
            if best.is_none_or(|b| r.abs() > resid[b].abs()) {
                best = Some(i);
            }
            last_sign = s;
        } else {
            cand.push(best.expect("run in progress"));
            best = Some(i);
            last_sign = s;
        }
    }
    if let Some(b) = best {
        cand.push(b);
    }
    cand
}

/// New control set: alternating residual extrema, trimmed at the ends by
/// dropping the smaller-magnitude endpoint, padded from the previous set by
/// largest residual when too few alternations exist.
pub(crate) fn exchange(resid: &[f64], k: usize, prev_ctrl: &[usize]) -> Option<Vec<usize>> {
    let mut cand = alternating_extrema(resid);
    while cand.len() > k {
        if resid[cand[0]].abs() <= resid[*cand.last().unwrap()].abs() {
            cand.remove(0);
        } else {
            cand.pop();
        }
    }
    if cand.len() < k {
        let mut extra: Vec<usize> = prev_ctrl
            .iter()
            .copied()
            .filter(|i| !cand.contains(i))
            .collect();
        extra.sort_by(|&a, &b| resid[b].abs().total_cmp(&resid[a].abs()));
        for i in extra {
            cand.push(i);
            if cand.len() == k {
                break;
            }
        }
        cand.sort_unstable();
        cand.dedup();
    }
    if cand.len() == k {
        Some(cand)
    } else {
        None
    }
}

/// Relaxed Remez exchange for a rational fit of orders (m, n).
///
/// Control points start at equal index intervals. Each outer iteration runs
/// the inner leveling loop, evaluates residuals over all samples, stops with
/// `Converged` when the full-sample maximum does not exceed |E|, and
/// otherwise exchanges control points. Relaxed stops: repeated extreme
/// residuals, an exchange fixed point, a pole streak, a mid-run singular
/// system, or the outer cap; the best-so-far coefficients by maximum
/// residual are kept. A singular system before any iterate completes is the
/// singular-skip error.
pub fn remez_fit(
    target: &DiscreteTarget,
    m: usize,
    n: usize,
    max_outer: usize,
    max_inner: usize,
) -> Result<(RationalFilter, RemezState)> {
    let k = m + n + 2;
    let len = target.len();
    if len < k {
        return Err(Error::InvalidParameter(format!(
            "need at least {k} samples for orders ({m}, {n}), got {len}"
        )));
    }
    let ts = target.ts();
    let ys = target.ys();
    let mut ctrl: Vec<usize> = (0..k)
        .map(|i| (i as f64 * (len - 1) as f64 / (k - 1) as f64).round() as usize)
        .collect();

    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut prev_extremes: Option<(f64, f64)> = None;
    let mut pole_streak = 0usize;
    let mut total_inner = 0usize;
    let mut status = RemezStatus::Running;
    let mut last_solve: Option<SolvedLeveling> = None;
    let mut outer_done = 0usize;

    for outer in 0..max_outer.max(1) {
        outer_done = outer + 1;
        let ctrl_ts: Vec<f64> = ctrl.iter().map(|&i| ts[i]).collect();
        let ctrl_ys: Vec<f64> = ctrl.iter().map(|&i| ys[i]).collect();
        let solved = match inner_loop(&ctrl_ts, &ctrl_ys, m, n, max_inner) {
            Ok(s) => s,
            Err(Error::SingularSystem) => {
                if best.is_none() {
                    return Err(Error::SingularSystem);
                }
                status = RemezStatus::RelaxedStop;
                break;
            }
            Err(e) => return Err(e),
        };
        let (psi, phi, e, inner_iters) = solved;
        total_inner += inner_iters;
        last_solve = Some((psi.clone(), phi.clone(), e, ctrl.clone()));

        let f = RationalFilter::new(psi.clone(), phi.clone());
        let mut resid = vec![0.0; len];
        let mut min_q = f64::INFINITY;
        for i in 0..len {
            let q = f.denominator_at(ts[i]);
            min_q = min_q.min(q.abs());
            let r = ys[i] - f.numerator_at(ts[i]) / q;
            resid[i] = if r.is_nan() { 0.0 } else { r };
        }
        let poled = min_q < POLE_TOL;

        if !poled {
            pole_streak = 0;
            let max_res = resid.iter().fold(0.0f64, |a, r| a.max(r.abs()));
            let min_res = resid.iter().fold(f64::INFINITY, |a, r| a.min(r.abs()));
            if best.as_ref().is_none_or(|b| max_res < b.0) {
                best = Some((max_res, psi.clone(), phi.clone()));
            }
            if max_res <= e.abs() + CONVERGE_SLACK {
                status = RemezStatus::Converged;
                break;
            }
            if let Some((pmin, pmax)) = prev_extremes {
                if (pmin - min_res).abs() < REPEAT_TOL && (pmax - max_res).abs() < REPEAT_TOL {
                    status = RemezStatus::RelaxedStop;
                    break;
                }
            }
            prev_extremes = Some((min_res, max_res));
        } else {
            pole_streak += 1;
            if pole_streak > MAX_POLE_STREAK {
                status = RemezStatus::RelaxedStop;
                break;
            }
        }

        match exchange(&resid, k, &ctrl) {
            Some(next) if next != ctrl => ctrl = next,
            _ => {
                status = RemezStatus::RelaxedStop;
                break;
            }
        }
    }
    if status == RemezStatus::Running {
        status = RemezStatus::RelaxedStop;
    }

    let best = match best {
        Some(b) => b,
        None => return Err(Error::SingularSystem),
    };
    // Polish the final solve: keep iterating the leveling on the final
    // control set until |ΔE| <= 1e-12·(1+|E|). The 1e-6 stopping rule is
    // enough for the exchange but leaves the control-point residuals off
    // the leveled value by |ΔE|·|Q-1|/|Q|, which is visible when Q dips
    // near zero between control points.
    let (psi_f, phi_f, e_f, ctrl_f) = {
        let (psi, phi, mut e, ctrl_f) = last_solve.expect("at least one solve succeeded");
        let ctrl_ts: Vec<f64> = ctrl_f.iter().map(|&i| ts[i]).collect();
        let ctrl_ys: Vec<f64> = ctrl_f.iter().map(|&i| ys[i]).collect();
        let mut cur = (psi, phi, e);
        for _ in 0..2 * max_inner {
            match solve_linearized(&ctrl_ts, &ctrl_ys, m, n, e) {
                Ok((psi, phi, e_next)) => {
                    let delta = (e_next - e).abs();
                    cur = (psi, phi, e_next);
                    if delta <= 1e-12 * (1.0 + e_next.abs()) {
                        break;
                    }
                    e = e_next;
                }
                Err(_) => break,
            }
        }
        (cur.0, cur.1, cur.2, ctrl_f)
    };
    let final_filter = RationalFilter::new(psi_f.clone(), phi_f.clone());
    let control_residuals: Vec<f64> = ctrl_f
        .iter()
        .map(|&i| {
            let q = final_filter.denominator_at(ts[i]);
            ys[i] - final_filter.numerator_at(ts[i]) / q
        })
        .collect();

    let state = RemezState {
        control_points: ctrl_f,
        e: e_f,
        psi: psi_f,
        phi: phi_f,
        control_residuals,
        best_max_residual: best.0,
        outer_iter: outer_done,
        inner_iter: total_inner,
        status,
    };
    Ok((RationalFilter::new(best.1, best.2), state))
}

pub fn remez_fit_default(
    target: &DiscreteTarget,
    m: usize,
    n: usize,
) -> Result<(RationalFilter, RemezState)> {
    remez_fit(target, m, n, DEFAULT_MAX_OUTER, DEFAULT_MAX_INNER)
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub m: usize,
    pub n: usize,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CellOutcome {
    Fitted {
        max_residual: f64,
        status: RemezStatus,
    },
    SingularSkip,
    Failed {
        detail: String,
    },
}

/// Best fit over the (m, n) lattice plus per-cell outcomes.
#[derive(Debug)]
pub struct Traversal {
    pub filter: RationalFilter,
    pub state: RemezState,
    pub m: usize,
    pub n: usize,
    pub cells: Vec<CellReport>,
}

/// Runs `remez_fit` over every 0 <= m <= m_max, 0 <= n <= n_max, skipping
/// singular cells, returning the smallest max residual; ties prefer smaller
/// m+n, then smaller n. Cells are independent and evaluated in parallel.
pub fn traverse_orders(
    target: &DiscreteTarget,
    m_max: usize,
    n_max: usize,
    max_outer: usize,
    max_inner: usize,
) -> Result<Traversal> {
    let mut lattice: Vec<(usize, usize)> = Vec::new();
    for total in 0..=(m_max + n_max) {
        for n in 0..=total.min(n_max) {
            let m = total - n;
            if m <= m_max {
                lattice.push((m, n));
            }
        }
    }
    type CellResult = (usize, usize, Result<(RationalFilter, RemezState)>);
    let results: Vec<CellResult> = lattice
        .par_iter()
        .map(|&(m, n)| (m, n, remez_fit(target, m, n, max_outer, max_inner)))
        .collect();

    let mut cells = Vec::with_capacity(results.len());
    let mut best: Option<(f64, RationalFilter, RemezState, usize, usize)> = None;
    for (m, n, r) in results {
        match r {
            Ok((filter, state)) => {
                cells.push(CellReport {
                    m,
                    n,
                    outcome: CellOutcome::Fitted {
                        max_residual: state.best_max_residual,
                        status: state.status,
                    },
                });
                // lattice order already encodes the tie-breaking, so strict
                // improvement is the whole rule
                if best.as_ref().is_none_or(|b| state.best_max_residual < b.0) {
                    best = Some((state.best_max_residual, filter, state, m, n));
                }
            }
            Err(Error::SingularSystem) => cells.push(CellReport {
                m,
                n,
                outcome: CellOutcome::SingularSkip,
            }),
            Err(e) => cells.push(CellReport {
                m,
                n,
                outcome: CellOutcome::Failed {
                    detail: e.to_string(),
                },
            }),
        }
    }
    match best {
        Some((_, filter, state, m, n)) => Ok(Traversal {
            filter,
            state,
            m,
            n,
            cells,
        }),
        None => Err(Error::NoFit),
    }
}
