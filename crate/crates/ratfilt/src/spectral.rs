//! Symmetric eigendecomposition, graph Fourier transform, spectral filter
//! application, Dirichlet energy, and on-disk eigensystem caching.

use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Graph, Laplacian};

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_QL_ITERS: usize = 100;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Laplacian.
///
/// Column `i` of `u` is the eigenvector for `lambdas[i]`. Within a degenerate
/// cluster the columns are an arbitrary orthonormal basis of the eigenspace;
/// nothing downstream relies on individual eigenvector identity.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    lambdas: Vec<f64>,
    u: Array2<f64>,
    lambda_max: f64,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Eigenvalues rescaled to [0, 1] by division with `lambda_max`.
    /// An edgeless graph (all eigenvalues zero) maps to all zeros.
    pub fn normalized_lambdas(&self) -> Vec<f64> {
        if self.lambda_max <= 0.0 {
            return vec![0.0; self.lambdas.len()];
        }
        self.lambdas.iter().map(|l| l / self.lambda_max).collect()
    }

    pub fn from_parts(lambdas: Vec<f64>, u: Array2<f64>) -> Result<EigenSystem> {
        if u.nrows() != lambdas.len() || u.ncols() != lambdas.len() {
            return Err(Error::LengthMismatch {
                expected: lambdas.len(),
                got: u.nrows(),
            });
        }
        let lambda_max = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(EigenSystem {
            lambdas,
            u,
            lambda_max,
        })
    }
}

/// Dense symmetric eigendecomposition: Householder tridiagonalization
/// followed by implicit-shift QL, eigenvectors accumulated, eigenvalues
/// sorted ascending.
pub fn decompose(l: &Laplacian) -> Result<EigenSystem> {
    let a = l.matrix();
    let n = l.n();
    let mut asym = 0.0f64;
    for r in 0..n {
        for c in r + 1..n {
            asym = asym.max((a[(r, c)] - a[(c, r)]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }

    let mut v = a.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;
    sort_ascending(&mut v, &mut d);

    let lambda_max = *d.last().unwrap_or(&0.0);
    Ok(EigenSystem {
        lambdas: d,
        u: v,
        lambda_max,
    })
}

/// Householder reduction to tridiagonal form with accumulation (tred2).
fn tridiagonalize(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal (d, e) with accumulation into `v`
/// (tql2). Errors if any eigenvalue needs more than `MAX_QL_ITERS` sweeps.
fn ql_implicit(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = 2.0f64.powi(-52);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERS {
                    return Err(Error::NumericalFailure(format!(
                        "QL iteration did not converge for eigenvalue {l} within {MAX_QL_ITERS} sweeps"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[allow(clippy::needless_range_loop)]
fn sort_ascending(v: &mut Array2<f64>, d: &mut [f64]) {
    let n = d.len();
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in i + 1..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for r in 0..n {
                let tmp = v[(r, i)];
                v[(r, i)] = v[(r, k)];
                v[(r, k)] = tmp;
            }
        }
    }
}

/// Graph Fourier transform: x̂ = Uᵀ x.
pub fn gft(es: &EigenSystem, x: &[f64]) -> Result<Vec<f64>> {
    let n = es.n();
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (r, &xr) in x.iter().enumerate() {
            s += es.u[(r, i)] * xr;
        }
        *o = s;
    }
    Ok(out)
}

/// Inverse graph Fourier transform: x = U x̂.
pub fn igft(es: &EigenSystem, xhat: &[f64]) -> Result<Vec<f64>> {
    let n = es.n();
    if xhat.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: xhat.len(),
        });
    }
    let mut out = vec![0.0; n];
    for (r, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (i, &xi) in xhat.iter().enumerate() {
            s += es.u[(r, i)] * xi;
        }
        *o = s;
    }
    Ok(out)
}

/// Applies the spectral filter h: U diag(h(λ)) Uᵀ x.
pub fn apply_spectral_filter(
    es: &EigenSystem,
    h: impl Fn(f64) -> f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut xhat = gft(es, x)?;
    for (i, &lambda) in es.lambdas.iter().enumerate() {
        let hv = h(lambda);
        if !hv.is_finite() {
            return Err(Error::NonFiniteFilter { lambda });
        }
        xhat[i] *= hv;
    }
    igft(es, &xhat)
}

/// Dirichlet energy xᵀ L x.
pub fn dirichlet_energy(l: &Laplacian, x: &[f64]) -> Result<f64> {
    let lx = l.apply(x)?;
    Ok(x.iter().zip(&lx).map(|(a, b)| a * b).sum())
}

/// Content hash of a graph, used to key the eigensystem cache.
pub fn cache_key(g: &Graph) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("n {}\n", g.n()).as_bytes());
    hasher.update(g.to_edge_list_text().as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl EigenSystem {
    /// Writes the eigensystem as a CSV pair: `<stem>.lambdas.csv` holds one
    /// eigenvalue per line; `<stem>.u.csv` holds one row of U per line with
    /// comma-separated entries. All values carry 17 significant digits so a
    /// read-back reproduces the f64 bits exactly.
    pub fn write_csv(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        let n = self.n();
        let io_err = |p: &Path, source| Error::Io {
            path: p.display().to_string(),
            source,
        };
        let lpath = dir.join(format!("{stem}.lambdas.csv"));
        let mut ltext = String::from("# eigenvalues, ascending, 17 significant digits\n");
        for l in &self.lambdas {
            ltext.push_str(&fmt17(*l));
            ltext.push('\n');
        }
        std::fs::write(&lpath, ltext).map_err(|e| io_err(&lpath, e))?;

        let upath = dir.join(format!("{stem}.u.csv"));
        let mut utext = String::from(
            "# eigenvector matrix U, row per line, column i pairs with eigenvalue i\n",
        );
        for r in 0..n {
            for c in 0..n {
                if c > 0 {
                    utext.push(',');
                }
                utext.push_str(&fmt17(self.u[(r, c)]));
            }
            utext.push('\n');
        }
        std::fs::write(&upath, utext).map_err(|e| io_err(&upath, e))?;
        Ok(())
    }

    pub fn read_csv(dir: impl AsRef<Path>, stem: &str) -> Result<EigenSystem> {
        let dir = dir.as_ref();
        let io_err = |p: &Path, source| Error::Io {
            path: p.display().to_string(),
            source,
        };
        let lpath = dir.join(format!("{stem}.lambdas.csv"));
        let ltext = std::fs::read_to_string(&lpath).map_err(|e| io_err(&lpath, e))?;
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| {
                Error::NumericalFailure(format!("bad float {s:?} in eigensystem cache"))
            })
        };
        let mut lambdas = Vec::new();
        for line in ltext.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            lambdas.push(parse(line)?);
        }
        let n = lambdas.len();
        let upath = dir.join(format!("{stem}.u.csv"));
        let utext = std::fs::read_to_string(&upath).map_err(|e| io_err(&upath, e))?;
        let mut u = Array2::<f64>::zeros((n, n));
        let mut r = 0usize;
        for line in utext.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if r >= n {
                return Err(Error::NumericalFailure(
                    "eigensystem cache has too many rows".into(),
                ));
            }
            for (c, field) in line.split(',').enumerate() {
                if c >= n {
                    return Err(Error::NumericalFailure(
                        "eigensystem cache has too many columns".into(),
                    ));
                }
                u[(r, c)] = parse(field)?;
            }
            r += 1;
        }
        if r != n {
            return Err(Error::NumericalFailure(
                "eigensystem cache row count does not match eigenvalue count".into(),
            ));
        }
        EigenSystem::from_parts(lambdas, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_block_graph, Graph};

    fn k4() -> Graph {
        Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn single_edge_spectrum() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        assert_close(es.lambdas()[0], 0.0, 1e-12);
        assert_close(es.lambdas()[1], 2.0, 1e-12);
    }

    #[test]
    fn k4_spectrum() {
        let es = decompose(&k4().laplacian()).unwrap();
        let want = [0.0, 4.0, 4.0, 4.0];
        for (got, want) in es.lambdas().iter().zip(want) {
            assert_close(*got, want, 1e-10);
        }
    }

    #[test]
    fn path3_spectrum() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let want = [0.0, 1.0, 3.0];
        for (got, want) in es.lambdas().iter().zip(want) {
            assert_close(*got, want, 1e-10);
        }
    }

    #[test]
    fn eigensystem_invariants_on_block_graph() {
        let g = generate_block_graph(3, 25, 6, 2, 5).unwrap();
        let n = g.n();
        let l = g.laplacian();
        let es = decompose(&l).unwrap();
        // sorted ascending, PSD
        assert!(es.lambdas()[0] >= -1e-9);
        for w in es.lambdas().windows(2) {
            assert!(w[0] <= w[1]);
        }
        // U^T U = I entrywise
        for i in 0..n {
            for j in 0..n {
                let mut dot = 0.0;
                for r in 0..n {
                    dot += es.u()[(r, i)] * es.u()[(r, j)];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert_close(dot, want, 1e-8);
            }
        }
        // residual per column, relative
        let scale = es.lambda_max().max(1.0);
        for i in 0..n {
            let col: Vec<f64> = (0..n).map(|r| es.u()[(r, i)]).collect();
            let lcol = l.apply(&col).unwrap();
            let mut res = 0.0f64;
            for r in 0..n {
                res = res.max((lcol[r] - es.lambdas()[i] * col[r]).abs());
            }
            assert!(res / scale < 1e-7, "column {i} residual {res}");
        }
        // connected components equal zero-eigenvalue multiplicity
        let zeros = es.lambdas().iter().filter(|l| l.abs() < 1e-8).count();
        assert_eq!(zeros, g.connected_components());
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut m = ndarray::Array2::<f64>::zeros((2, 2));
        m[(0, 1)] = 1.0;
        let l = Laplacian::from_matrix(m).unwrap();
        assert!(matches!(decompose(&l), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn gft_of_eigenvector_sum_is_ones() {
        let g = generate_block_graph(2, 10, 4, 2, 9).unwrap();
        let n = g.n();
        let es = decompose(&g.laplacian()).unwrap();
        let x: Vec<f64> = (0..n)
            .map(|r| (0..n).map(|i| es.u()[(r, i)]).sum())
            .collect();
        let xhat = gft(&es, &x).unwrap();
        for v in xhat {
            assert_close(v, 1.0, 1e-8);
        }
    }

    #[test]
    fn gft_of_scaled_first_eigenvector() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let c = 2.5;
        let x: Vec<f64> = (0..3).map(|r| es.u()[(r, 0)] * c).collect();
        let xhat = gft(&es, &x).unwrap();
        assert_close(xhat[0], c, 1e-10);
        assert_close(xhat[1], 0.0, 1e-10);
        assert_close(xhat[2], 0.0, 1e-10);
    }

    #[test]
    fn parseval_and_round_trip() {
        let g = generate_block_graph(2, 15, 5, 2, 3).unwrap();
        let n = g.n();
        let es = decompose(&g.laplacian()).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 + 5) % 11) as f64 - 5.0).collect();
        let xhat = gft(&es, &x).unwrap();
        let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nh: f64 = xhat.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_close(nx, nh, 1e-8);
        let back = igft(&es, &xhat).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert_close(*a, *b, 1e-8);
        }
    }

    #[test]
    fn igft_of_zero_and_basis() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let zero = igft(&es, &[0.0, 0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        // e0 maps to the constant-sign null vector of a connected graph
        let e0 = igft(&es, &[1.0, 0.0, 0.0]).unwrap();
        let s0 = e0[0].signum();
        assert!(e0.iter().all(|v| v.signum() == s0 && v.abs() > 1e-3));
    }

    #[test]
    fn identity_filter_reproduces_signal() {
        let g = k4();
        let es = decompose(&g.laplacian()).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = apply_spectral_filter(&es, |_| 1.0, &x).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_close(*a, *b, 1e-8);
        }
    }

    #[test]
    fn lambda_filter_equals_laplacian_action() {
        let g = generate_block_graph(2, 8, 4, 2, 1).unwrap();
        let l = g.laplacian();
        let es = decompose(&l).unwrap();
        let x: Vec<f64> = (0..g.n()).map(|i| (i as f64 * 0.7).sin()).collect();
        let y = apply_spectral_filter(&es, |lam| lam, &x).unwrap();
        let lx = l.apply(&x).unwrap();
        for (a, b) in y.iter().zip(&lx) {
            assert_close(*a, *b, 1e-7);
        }
        let y2 = apply_spectral_filter(&es, |lam| lam * lam, &x).unwrap();
        let llx = l.apply(&lx).unwrap();
        for (a, b) in y2.iter().zip(&llx) {
            assert_close(*a, *b, 1e-6);
        }
    }

    #[test]
    fn non_finite_filter_names_eigenvalue() {
        let g = k4();
        let es = decompose(&g.laplacian()).unwrap();
        let x = [1.0; 4];
        match apply_spectral_filter(&es, |lam| 1.0 / (lam - 4.0), &x) {
            Err(Error::NonFiniteFilter { lambda }) => assert_close(lambda, 4.0, 1e-9),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn filter_composition() {
        let g = generate_block_graph(2, 10, 4, 2, 2).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let x: Vec<f64> = (0..g.n()).map(|i| (i as f64).cos()).collect();
        let h1 = |l: f64| 1.0 / (1.0 + l);
        let h2 = |l: f64| l * 0.5 - 0.2;
        let a =
            apply_spectral_filter(&es, h1, &apply_spectral_filter(&es, h2, &x).unwrap()).unwrap();
        let b = apply_spectral_filter(&es, |l| h1(l) * h2(l), &x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_close(*p, *q, 1e-6);
        }
    }

    #[test]
    fn dirichlet_energy_cases() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let l = g.laplacian();
        assert_close(dirichlet_energy(&l, &[1.0, -1.0]).unwrap(), 4.0, 1e-12);

        let g2 = generate_block_graph(1, 12, 5, 0, 4).unwrap();
        let l2 = g2.laplacian();
        let c = vec![3.0; g2.n()];
        assert!(dirichlet_energy(&l2, &c).unwrap().abs() < 1e-9);

        // eigenvector energy identity
        let es = decompose(&l2).unwrap();
        for i in 0..g2.n() {
            let col: Vec<f64> = (0..g2.n()).map(|r| es.u()[(r, i)]).collect();
            let en = dirichlet_energy(&l2, &col).unwrap();
            assert_close(en, es.lambdas()[i], 1e-6);
        }
    }

    #[test]
    fn csv_cache_round_trips_exactly() {
        let g = generate_block_graph(2, 6, 3, 1, 8).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let key = cache_key(&g);
        es.write_csv(dir.path(), &key).unwrap();
        let back = EigenSystem::read_csv(dir.path(), &key).unwrap();
        assert_eq!(es.lambdas(), back.lambdas());
        assert_eq!(es.u(), back.u());
        assert_eq!(es.lambda_max(), back.lambda_max());
    }

    #[test]
    fn cache_key_tracks_content() {
        let a = generate_block_graph(2, 6, 3, 1, 8).unwrap();
        let b = generate_block_graph(2, 6, 3, 1, 9).unwrap();
        assert_ne!(cache_key(&a), cache_key(&b));
        assert_eq!(cache_key(&a), cache_key(&a.clone()));
    }

    #[test]
    fn solver_handles_one_by_one_and_diagonal() {
        let one = Laplacian::from_matrix(ndarray::arr2(&[[3.5]])).unwrap();
        let es = decompose(&one).unwrap();
        assert_eq!(es.lambdas(), &[3.5]);
        assert_eq!(es.u()[(0, 0)].abs(), 1.0);

        let mut d = ndarray::Array2::<f64>::zeros((4, 4));
        for (i, v) in [2.0, -1.0, 0.5, 7.0].iter().enumerate() {
            d[(i, i)] = *v;
        }
        let es = decompose(&Laplacian::from_matrix(d).unwrap()).unwrap();
        assert_eq!(es.lambdas(), &[-1.0, 0.5, 2.0, 7.0]);
    }

    #[test]
    fn solver_handles_general_symmetric_matrices() {
        // indefinite dense symmetric input, including clustered eigenvalues
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(314);
        for trial in 0..20 {
            let n = rng.gen_range(2..60usize);
            let mut a = ndarray::Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let v = if trial % 3 == 0 && (i + j) % 4 == 0 {
                        0.0 // sparse-ish with repeated structure
                    } else {
                        rng.gen_range(-1.0..1.0)
                    };
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            let l = Laplacian::from_matrix(a.clone()).unwrap();
            let es = decompose(&l).unwrap();
            let scale = es
                .lambdas()
                .iter()
                .fold(1.0f64, |acc, l| acc.max(l.abs()));
            for i in 0..n {
                // residual ||A u_i - lambda_i u_i||_inf
                let mut res = 0.0f64;
                for r in 0..n {
                    let mut s = 0.0;
                    for c in 0..n {
                        s += a[(r, c)] * es.u()[(c, i)];
                    }
                    res = res.max((s - es.lambdas()[i] * es.u()[(r, i)]).abs());
                }
                assert!(res / scale < 1e-7, "trial {trial} col {i}: residual {res}");
                for j in 0..n {
                    let mut dot = 0.0;
                    for r in 0..n {
                        dot += es.u()[(r, i)] * es.u()[(r, j)];
                    }
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (dot - want).abs() < 1e-8,
                        "trial {trial}: U^T U [{i},{j}] = {dot}"
                    );
                }
            }
        }
    }
}
