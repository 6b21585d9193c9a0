//! Spectral graph filter fitting with Padé rational functions.
//!
//! A graph signal living on the eigenvalues of the combinatorial Laplacian
//! is approximated by a rational filter P(λ̃)/Q(λ̃) on the normalized
//! spectrum λ̃ = λ/λ_max. A relaxed Remez exchange produces minimax initial
//! coefficients, gradient descent refines them against spectral MSE, and
//! monomial/Chebyshev least-squares polynomials serve as baselines. The
//! `theory` module checks the expected convergence rates (exponential in √n
//! for rationals on jump targets, linear for polynomials) numerically.

pub mod error;
pub mod experiments;
pub mod filters;
pub mod graph;
pub mod linalg;
pub mod optimizer;
pub mod remez;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use experiments::{run_experiment, ExperimentSpec, GraphSource, Method, TargetSpec};
pub use filters::{PolyBasis, PolynomialFilter, RationalFilter};
pub use graph::{generate_block_graph, read_edge_list, Graph, Laplacian};
pub use optimizer::{FitReport, TrainConfig};
pub use remez::{remez_fit, traverse_orders, DiscreteTarget, RemezState, RemezStatus};
pub use spectral::{decompose, dirichlet_energy, gft, igft, EigenSystem};
pub use theory::{newman_approx, rate_experiment, JumpTarget, RateKind};
