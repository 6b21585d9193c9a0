//! End-to-end regression pipelines: build or load a graph, decompose, define
//! a spectral target, fit every requested method, report dual-domain errors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{fit_poly_least_squares, PolyBasis, PolynomialFilter, RationalFilter};
use crate::graph::{generate_block_graph, read_edge_list, Graph};
use crate::optimizer::{self, Coefficients, FitReport, InitSource, TrainConfig};
use crate::remez::{self, DiscreteTarget};
use crate::spectral::{self, EigenSystem};
use crate::theory::JumpTarget;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSource {
    Synthetic {
        groups: usize,
        group_size: usize,
        #[serde(default = "default_intra")]
        intra_max: usize,
        #[serde(default = "default_inter")]
        inter_max: usize,
    },
    EdgeList {
        path: PathBuf,
    },
}

fn default_intra() -> usize {
    8
}
fn default_inter() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum TargetSpec {
    /// |λ̃ − 0.5|
    Abs,
    /// sign(λ̃ − 0.5)
    Sign,
    /// ζ = 1 for λ̃ > 0.5, else 0
    Highpass,
    /// arbitrary jump-family target on [0, 1]
    Custom { jump: JumpTarget },
}

impl TargetSpec {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TargetSpec::Abs => (t - 0.5).abs(),
            TargetSpec::Sign => (t - 0.5).signum(),
            TargetSpec::Highpass => {
                if t > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            TargetSpec::Custom { jump } => jump.eval(t),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TargetSpec::Abs => "abs",
            TargetSpec::Sign => "sign",
            TargetSpec::Highpass => "highpass",
            TargetSpec::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "rational+remez")]
    RationalRemez,
    #[serde(rename = "rational-no-remez")]
    RationalNoRemez,
    #[serde(rename = "poly-ls")]
    PolyLs,
    #[serde(rename = "cheb-ls")]
    ChebLs,
    #[serde(rename = "poly-gd")]
    PolyGd,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::RationalRemez => "rational+remez",
            Method::RationalNoRemez => "rational-no-remez",
            Method::PolyLs => "poly-ls",
            Method::ChebLs => "cheb-ls",
            Method::PolyGd => "poly-gd",
        }
    }

    pub fn all() -> [Method; 5] {
        [
            Method::RationalRemez,
            Method::RationalNoRemez,
            Method::PolyLs,
            Method::ChebLs,
            Method::PolyGd,
        ]
    }
}

/// Training budget used by the gradient methods when a config does not say
/// otherwise: full-scale steps (the fixed metric makes O(1) steps natural)
/// and a longer budget than TrainConfig::default.
pub fn experiment_train_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 1.0,
        max_epochs: 20_000,
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub graph: GraphSource,
    pub target: TargetSpec,
    pub methods: Vec<Method>,
    /// numerator order for rational methods
    #[serde(default = "default_order")]
    pub m: usize,
    /// denominator order for rational methods
    #[serde(default = "default_order")]
    pub n: usize,
    /// polynomial degree for baseline methods
    #[serde(default = "default_degree")]
    pub k: usize,
    #[serde(default = "experiment_train_config")]
    pub train: TrainConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Record wall-clock seconds in the results CSV. Off by default so that
    /// reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

fn default_order() -> usize {
    5
}
fn default_degree() -> usize {
    10
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods requested".into()));
        }
        self.train.validate()
    }
}

#[derive(Debug)]
pub struct MethodRun {
    pub method: Method,
    pub seconds: f64,
    pub outcome: Result<FitReport>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub graph_n: usize,
    pub graph_edges: usize,
    pub truth_dirichlet_energy: f64,
    pub runs: Vec<MethodRun>,
}

impl ExperimentOutcome {
    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }
}

/// Discrete spectral target on the normalized eigenvalues plus the
/// vertex-domain ground truth Y = igft(ŷ) (the uniform x̂ = 1 raw feature).
pub fn make_target(es: &EigenSystem, spec: &TargetSpec) -> Result<(DiscreteTarget, Vec<f64>)> {
    let ts = es.normalized_lambdas();
    let ys: Vec<f64> = ts.iter().map(|&t| spec.eval(t)).collect();
    let truth = spectral::igft(es, &ys)?;
    Ok((DiscreteTarget::new(ts, ys)?, truth))
}

fn load_graph(spec: &ExperimentSpec) -> Result<Graph> {
    match &spec.graph {
        GraphSource::Synthetic {
            groups,
            group_size,
            intra_max,
            inter_max,
        } => generate_block_graph(*groups, *group_size, *intra_max, *inter_max, spec.seed),
        GraphSource::EdgeList { path } => Ok(read_edge_list(path)?.graph),
    }
}

fn decompose_cached(graph: &Graph, cache_dir: &Option<PathBuf>) -> Result<EigenSystem> {
    if let Some(dir) = cache_dir {
        let key = spectral::cache_key(graph);
        if let Ok(es) = EigenSystem::read_csv(dir, &key) {
            if es.n() == graph.n() {
                return Ok(es);
            }
        }
        let es = spectral::decompose(&graph.laplacian())?;
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        es.write_csv(dir, &key)?;
        Ok(es)
    } else {
        spectral::decompose(&graph.laplacian())
    }
}

/// Remez init for the gradient pipeline: the lattice cell whose fitted
/// coefficients give the smallest spectral loss under the actual x̂. The raw
/// max-residual selection of `traverse_orders` is nearly blind on jump
/// targets, where every candidate misses the jump pointwise by ~1.
fn best_init_by_loss(
    target: &DiscreteTarget,
    xhat: &[f64],
    m_max: usize,
    n_max: usize,
) -> Result<(RationalFilter, usize, usize)> {
    let mut lattice = Vec::new();
    for total in 0..=(m_max + n_max) {
        for n in 0..=total.min(n_max) {
            let m = total - n;
            if m <= m_max {
                lattice.push((m, n));
            }
        }
    }
    let fits: Vec<(usize, usize, Option<RationalFilter>)> = lattice
        .par_iter()
        .map(|&(m, n)| {
            let fit = remez::remez_fit(
                target,
                m,
                n,
                remez::DEFAULT_MAX_OUTER,
                remez::DEFAULT_MAX_INNER,
            )
            .ok()
            .map(|(f, _)| f);
            (m, n, fit)
        })
        .collect();
    let mut best: Option<(f64, RationalFilter, usize, usize)> = None;
    for (m, n, fit) in fits {
        let Some(f) = fit else { continue };
        let Ok(loss) = optimizer::spectral_loss(&f, target, xhat) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| loss < b.0) {
            best = Some((loss, f, m, n));
        }
    }
    best.map(|(_, f, m, n)| (f, m, n)).ok_or(Error::NoFit)
}

fn vertex_mse(es: &EigenSystem, model_spectral: &[f64], truth: &[f64]) -> Result<f64> {
    let y_model = spectral::igft(es, model_spectral)?;
    Ok(y_model
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / truth.len() as f64)
}

fn run_method(
    method: Method,
    spec: &ExperimentSpec,
    es: &EigenSystem,
    target: &DiscreteTarget,
    truth: &[f64],
) -> Result<FitReport> {
    let n_samples = target.len();
    let xhat = vec![1.0; n_samples];
    let mut report = match method {
        Method::RationalRemez => {
            let (init, _, _) = best_init_by_loss(target, &xhat, spec.m, spec.n)?;
            let init = init.padded_to(spec.m, spec.n);
            let mut rep = optimizer::train(&init, target, &xhat, &spec.train)?;
            rep.init = InitSource::Remez;
            rep
        }
        Method::RationalNoRemez => {
            let init = RationalFilter::new(vec![1e-2; spec.m + 1], vec![0.0; spec.n]);
            let mut rep = optimizer::train(&init, target, &xhat, &spec.train)?;
            rep.init = InitSource::Zeros;
            rep
        }
        Method::PolyLs => {
            let f = fit_poly_least_squares(target.ts(), target.ys(), spec.k, PolyBasis::Monomial)?;
            let vals = f.eval_many(target.ts())?;
            let mse = mse_against(&vals, target.ys());
            FitReport {
                method: String::new(),
                coefficients: Coefficients::Polynomial {
                    theta: f.theta,
                    basis: f.basis,
                },
                spectral_mse: mse,
                vertex_mse: None,
                epochs: 0,
                loss_trace: vec![mse],
                init: InitSource::Given,
            }
        }
        Method::ChebLs => {
            // Chebyshev baseline lives on [-1, 1]: map t -> 2t - 1 internally
            let mapped: Vec<f64> = target.ts().iter().map(|t| 2.0 * t - 1.0).collect();
            let f = fit_poly_least_squares(&mapped, target.ys(), spec.k, PolyBasis::Chebyshev)?;
            let vals: Vec<f64> = mapped.iter().map(|&t| f.eval(t)).collect::<Result<_>>()?;
            let mse = mse_against(&vals, target.ys());
            FitReport {
                method: String::new(),
                coefficients: Coefficients::Polynomial {
                    theta: f.theta,
                    basis: f.basis,
                },
                spectral_mse: mse,
                vertex_mse: None,
                epochs: 0,
                loss_trace: vec![mse],
                init: InitSource::Given,
            }
        }
        Method::PolyGd => {
            let f0 = PolynomialFilter::new(vec![0.0; spec.k + 1], PolyBasis::Monomial);
            let mut rep = optimizer::train_poly(&f0, target, &xhat, &spec.train)?;
            rep.init = InitSource::Zeros;
            rep
        }
    };
    report.method = method.label().to_string();

    // spectral-domain model values, then the vertex-domain error
    let model_spectral: Vec<f64> = match &report.coefficients {
        Coefficients::Rational { psi, phi } => {
            let f = RationalFilter::new(psi.clone(), phi.clone());
            f.eval_many(target.ts())?
        }
        Coefficients::Polynomial { theta, basis } => {
            let f = PolynomialFilter::new(theta.clone(), *basis);
            match basis {
                PolyBasis::Monomial => f.eval_many(target.ts())?,
                PolyBasis::Chebyshev => target
                    .ts()
                    .iter()
                    .map(|&t| f.eval(2.0 * t - 1.0))
                    .collect::<Result<_>>()?,
            }
        }
    };
    report.vertex_mse = Some(vertex_mse(es, &model_spectral, truth)?);
    Ok(report)
}

fn mse_against(vals: &[f64], ys: &[f64]) -> f64 {
    vals.iter()
        .zip(ys)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / ys.len() as f64
}

/// Runs every requested method; one method's failure does not abort the
/// others. Writes per-method FitReport JSONs, loss-trace CSVs, and a
/// combined results CSV when `out_dir` is set. Deterministic given the
/// `ExperimentSpec` (timing column excepted, and it is off by default).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let graph = load_graph(spec)?;
    let es = decompose_cached(&graph, &spec.cache_dir)?;
    let (target, truth) = make_target(&es, &spec.target)?;
    let truth_energy = spectral::dirichlet_energy(&graph.laplacian(), &truth)?;

    let mut runs = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let started = Instant::now();
        let outcome = run_method(method, spec, &es, &target, &truth)
            .map_err(|e| e.with_method(method.label()));
        let seconds = if spec.timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        runs.push(MethodRun {
            method,
            seconds,
            outcome,
        });
    }

    let outcome = ExperimentOutcome {
        graph_n: graph.n(),
        graph_edges: graph.num_edges(),
        truth_dirichlet_energy: truth_energy,
        runs,
    };
    if let Some(dir) = &spec.out_dir {
        write_outputs(dir, spec, &outcome)?;
    }
    Ok(outcome)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_outputs(dir: &Path, _spec: &ExperimentSpec, outcome: &ExperimentOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let io_err = |p: &Path, source| Error::Io {
        path: p.display().to_string(),
        source,
    };
    let mut csv = String::from("method,m,n,k,s_err,v_err,epochs,seconds\n");
    for run in &outcome.runs {
        let name = run.method.label();
        if let Ok(rep) = &run.outcome {
            let path = dir.join(format!("report_{name}.json"));
            let body = serde_json::to_string_pretty(rep)
                .map_err(|e| Error::NumericalFailure(e.to_string()))?;
            std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
            if rep.epochs >= 1 {
                let tpath = dir.join(format!("trace_{name}.csv"));
                std::fs::write(&tpath, rep.loss_trace_csv()).map_err(|e| io_err(&tpath, e))?;
            }
            let (m, n, k) = match &rep.coefficients {
                Coefficients::Rational { psi, phi } => (psi.len().saturating_sub(1), phi.len(), 0),
                Coefficients::Polynomial { theta, .. } => (0, 0, theta.len().saturating_sub(1)),
            };
            csv.push_str(&format!(
                "{name},{m},{n},{k},{},{},{},{}\n",
                fmt17(rep.spectral_mse),
                fmt17(rep.vertex_mse.unwrap_or(f64::NAN)),
                rep.epochs,
                fmt17(run.seconds),
            ));
        } else {
            csv.push_str(&format!("{name},,,,,,,\n"));
        }
    }
    let cpath = dir.join("results.csv");
    std::fs::write(&cpath, csv).map_err(|e| io_err(&cpath, e))?;
    Ok(())
}

/// Mean and (population) standard deviation per method over repeated seeds.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub method: String,
    pub s_err_mean: f64,
    pub s_err_std: f64,
    pub v_err_mean: f64,
    pub v_err_std: f64,
    pub seeds: usize,
}

pub fn aggregate(outcomes: &[ExperimentOutcome]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    if outcomes.is_empty() {
        return rows;
    }
    for (i, run) in outcomes[0].runs.iter().enumerate() {
        let name = run.method.label().to_string();
        let mut s = Vec::new();
        let mut v = Vec::new();
        for o in outcomes {
            if let Some(r) = o.runs.get(i) {
                if let Ok(rep) = &r.outcome {
                    s.push(rep.spectral_mse);
                    v.push(rep.vertex_mse.unwrap_or(f64::NAN));
                }
            }
        }
        let stat = |xs: &[f64]| -> (f64, f64) {
            if xs.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
            (m, var.sqrt())
        };
        let (sm, ss) = stat(&s);
        let (vm, vs) = stat(&v);
        rows.push(AggregateRow {
            method: name,
            s_err_mean: sm,
            s_err_std: ss,
            v_err_mean: vm,
            v_err_std: vs,
            seeds: s.len(),
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::decompose;

    fn small_spec(methods: Vec<Method>, target: TargetSpec, seed: u64) -> ExperimentSpec {
        ExperimentSpec {
            graph: GraphSource::Synthetic {
                groups: 2,
                group_size: 20,
                intra_max: 5,
                inter_max: 2,
            },
            target,
            methods,
            m: 3,
            n: 3,
            k: 6,
            train: TrainConfig {
                learning_rate: 1.0,
                max_epochs: 300,
                ..TrainConfig::default()
            },
            seed,
            out_dir: None,
            cache_dir: None,
            timing: false,
        }
    }

    #[test]
    fn make_target_shapes() {
        let g = generate_block_graph(2, 15, 5, 2, 3).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let (t_abs, truth) = make_target(&es, &TargetSpec::Abs).unwrap();
        assert_eq!(t_abs.len(), g.n());
        assert_eq!(truth.len(), g.n());
        // highpass values are 0/1 and count matches the threshold
        let (t_hp, _) = make_target(&es, &TargetSpec::Highpass).unwrap();
        let ones = t_hp.ys().iter().filter(|&&y| y == 1.0).count();
        let above = t_hp.ts().iter().filter(|&&t| t > 0.5).count();
        assert_eq!(ones, above);
        assert!(t_hp.ys().iter().all(|&y| y == 0.0 || y == 1.0));
        // sign values in {-1, 0, +1}
        let (t_sg, _) = make_target(&es, &TargetSpec::Sign).unwrap();
        assert!(t_sg.ys().iter().all(|&y| y == -1.0 || y == 1.0 || y == 0.0));
    }

    #[test]
    fn spectral_and_vertex_errors_agree_for_full_domain() {
        // Parseval: with orthonormal U the two MSEs coincide
        let spec = small_spec(vec![Method::PolyLs, Method::ChebLs], TargetSpec::Abs, 5);
        let out = run_experiment(&spec).unwrap();
        for run in &out.runs {
            let rep = run.outcome.as_ref().unwrap();
            let v = rep.vertex_mse.unwrap();
            let rel = (rep.spectral_mse - v).abs() / rep.spectral_mse.max(1e-300);
            assert!(rel < 1e-6, "{}: {} vs {v}", rep.method, rep.spectral_mse);
        }
    }

    #[test]
    fn failed_method_does_not_abort_others() {
        // k larger than the sample count makes poly-ls fail; the rational
        // method still runs
        let mut spec = small_spec(
            vec![Method::PolyLs, Method::RationalNoRemez],
            TargetSpec::Abs,
            7,
        );
        spec.k = 500;
        let out = run_experiment(&spec).unwrap();
        assert!(out.runs[0].outcome.is_err());
        assert!(out.runs[1].outcome.is_ok());
        match &out.runs[0].outcome {
            Err(Error::Method { method, .. }) => assert_eq!(method, "poly-ls"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn outputs_are_byte_identical_across_reruns() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let mut spec = small_spec(
            vec![Method::PolyLs, Method::RationalRemez],
            TargetSpec::Abs,
            11,
        );
        spec.train.max_epochs = 120;
        spec.out_dir = Some(dir1.path().to_path_buf());
        run_experiment(&spec).unwrap();
        spec.out_dir = Some(dir2.path().to_path_buf());
        run_experiment(&spec).unwrap();
        for name in [
            "results.csv",
            "report_poly-ls.json",
            "report_rational+remez.json",
        ] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }

    #[test]
    fn cache_roundtrip_preserves_results() {
        let cache = tempfile::tempdir().unwrap();
        let mut spec = small_spec(vec![Method::PolyLs], TargetSpec::Sign, 13);
        spec.cache_dir = Some(cache.path().to_path_buf());
        let first = run_experiment(&spec).unwrap();
        // second run hits the CSV cache and must produce identical numbers
        let second = run_experiment(&spec).unwrap();
        let a = first.runs[0].outcome.as_ref().unwrap();
        let b = second.runs[0].outcome.as_ref().unwrap();
        assert_eq!(a.spectral_mse, b.spectral_mse);
        assert_eq!(a.vertex_mse, b.vertex_mse);
    }

    #[test]
    fn remez_init_loss_matches_reported_scale() {
        // 1000-node graph, abs target: the initializer's spectral MSE lands
        // within an order of magnitude of the reported 4.5e-6
        let g = generate_block_graph(10, 100, 8, 3, 1).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let (target, _) = make_target(&es, &TargetSpec::Abs).unwrap();
        let xhat = vec![1.0; target.len()];
        let (init, _, _) = best_init_by_loss(&target, &xhat, 5, 5).unwrap();
        let loss = optimizer::spectral_loss(&init, &target, &xhat).unwrap();
        assert!(
            loss > 4.5e-7 && loss < 4.5e-5,
            "init loss {loss} outside order-of-magnitude window"
        );
    }

    #[test]
    fn aggregate_reports_mean_and_std() {
        let specs: Vec<ExperimentSpec> = (1..=3)
            .map(|s| small_spec(vec![Method::PolyLs], TargetSpec::Abs, s))
            .collect();
        let outs: Vec<ExperimentOutcome> =
            specs.iter().map(|s| run_experiment(s).unwrap()).collect();
        let rows = aggregate(&outs);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].seeds, 3);
        assert!(rows[0].s_err_mean.is_finite());
        assert!(rows[0].s_err_std >= 0.0);
    }
}
