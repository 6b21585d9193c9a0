//! Cross-module integration properties: serialization surfaces, Parseval
//! coupling between the spectral and experiment layers, and generator purity.

use proptest::prelude::*;

use ratfilt::filters::{PolyBasis, PolynomialFilter, RationalFilter};
use ratfilt::graph::{generate_block_graph, parse_edge_list};
use ratfilt::remez::DiscreteTarget;
use ratfilt::spectral::{decompose, gft, igft};

#[test]
fn filter_coefficients_serialize_to_documented_shapes() {
    let rat = RationalFilter::new(vec![1.0, -0.5], vec![0.25]);
    let js = serde_json::to_value(&rat).unwrap();
    assert_eq!(js["psi"], serde_json::json!([1.0, -0.5]));
    assert_eq!(js["phi"], serde_json::json!([0.25]));
    let back: RationalFilter = serde_json::from_value(js).unwrap();
    assert_eq!(back, rat);

    let poly = PolynomialFilter::new(vec![0.0, 1.0], PolyBasis::Chebyshev);
    let js = serde_json::to_value(&poly).unwrap();
    assert_eq!(js["basis"], serde_json::json!("chebyshev"));
    assert_eq!(js["theta"], serde_json::json!([0.0, 1.0]));
    let mono = PolynomialFilter::new(vec![2.0], PolyBasis::Monomial);
    assert_eq!(
        serde_json::to_value(&mono).unwrap()["basis"],
        serde_json::json!("monomial")
    );
}

#[test]
fn edge_list_export_parses_back() {
    let g = generate_block_graph(3, 12, 4, 2, 17).unwrap();
    let text = g.to_edge_list_text();
    let back = parse_edge_list(&text).unwrap();
    assert_eq!(back.graph.edges(), g.edges());
    assert_eq!(back.dropped, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Parseval on random block graphs and random signals, plus the
    /// sum-of-squares equality that makes spectral and vertex MSE coincide.
    #[test]
    fn parseval_holds_on_random_graphs(
        groups in 1usize..3,
        size in 4usize..12,
        seed in 0u64..1000,
        signal_seed in 0u64..1000,
    ) {
        let g = generate_block_graph(groups, size, 4, 2, seed).unwrap();
        let es = decompose(&g.laplacian()).unwrap();
        let n = g.n();
        let x: Vec<f64> = (0..n)
            .map(|i| (((i as u64 + 1) * (signal_seed + 3)) % 17) as f64 / 8.5 - 1.0)
            .collect();
        let xhat = gft(&es, &x).unwrap();
        let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nh: f64 = xhat.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((nx - nh).abs() <= 1e-8);
        let back = igft(&es, &xhat).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    /// A rational filter with an empty denominator equals the monomial
    /// polynomial with the same coefficients, exactly.
    #[test]
    fn empty_denominator_matches_monomial(
        coeffs in prop::collection::vec(-2.0f64..2.0, 1..6),
        t in 0.0f64..1.0,
    ) {
        let rat = RationalFilter::new(coeffs.clone(), vec![]);
        let pol = PolynomialFilter::new(coeffs, PolyBasis::Monomial);
        prop_assert_eq!(rat.eval(t).unwrap(), pol.eval(t).unwrap());
    }

    /// The generator is a pure function of its arguments.
    #[test]
    fn block_graph_is_pure(
        groups in 1usize..4,
        size in 2usize..20,
        intra in 0usize..6,
        inter in 0usize..4,
        seed in 0u64..10_000,
    ) {
        let a = generate_block_graph(groups, size, intra, inter, seed).unwrap();
        let b = generate_block_graph(groups, size, intra, inter, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Laplacian structure on random graphs: integer entries, zero row sums,
    /// degrees on the diagonal.
    #[test]
    #[allow(clippy::needless_range_loop)]
    fn laplacian_structure(
        groups in 1usize..3,
        size in 2usize..15,
        seed in 0u64..10_000,
    ) {
        let g = generate_block_graph(groups, size, 5, 2, seed).unwrap();
        let l = g.laplacian();
        let deg = g.degrees();
        for r in 0..g.n() {
            let mut sum = 0.0;
            for c in 0..g.n() {
                let v = l.matrix()[(r, c)];
                prop_assert_eq!(v, v.round());
                if r == c {
                    prop_assert_eq!(v, deg[r] as f64);
                } else {
                    prop_assert!(v == 0.0 || v == -1.0);
                }
                sum += v;
            }
            prop_assert_eq!(sum, 0.0);
        }
    }

    /// Remez state snapshots serialize (the CLI exports them as JSON).
    #[test]
    fn remez_state_serializes(seed in 0u64..50) {
        let ts: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
        let shift = 0.3 + (seed as f64) * 0.004;
        let target = DiscreteTarget::from_fn(ts, |t| (t - shift).abs()).unwrap();
        let (_, state) = ratfilt::remez::remez_fit_default(&target, 2, 1).unwrap();
        let js = serde_json::to_value(&state).unwrap();
        prop_assert!(js["status"].is_string());
        prop_assert!(js["control_points"].is_array());
    }
}
