//! Property tests for the structural invariants.

use proptest::prelude::*;

use fgm_ddo::fgm::{maximal_cliques, CliqueSet, DecomposedFunction, FgmGraph};
use fgm_ddo::numkit::Mlp;
use fgm_ddo::surrogate::{CliqueComponents, MaskedMlpModel, ModelContainer};
use fgm_ddo::Rng;

fn arb_graph() -> impl Strategy<Value = FgmGraph> {
    (2usize..10, any::<u64>()).prop_map(|(d, seed)| {
        let mut rng = Rng::new(seed);
        let mut g = FgmGraph::new(d);
        for i in 0..d {
            for j in (i + 1)..d {
                if rng.uniform() < 0.4 {
                    g.add_edge(i, j).unwrap();
                }
            }
        }
        g
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trips(g in arb_graph()) {
        let text = g.to_edge_list();
        let back = FgmGraph::from_edge_list(&text).unwrap();
        prop_assert_eq!(g, back);
    }

    #[test]
    fn cliques_cover_all_vertices_and_are_maximal(g in arb_graph()) {
        let cs = maximal_cliques(&g).unwrap();
        let d = g.num_vertices();
        let mut covered = vec![false; d];
        for c in cs.cliques() {
            for (a, &i) in c.iter().enumerate() {
                covered[i] = true;
                for &j in &c[a + 1..] {
                    prop_assert!(g.has_edge(i, j), "non-edge inside a clique");
                }
            }
            // No strict superset among the cliques.
            for other in cs.cliques() {
                if other != c {
                    prop_assert!(!c.iter().all(|v| other.contains(v)));
                }
            }
        }
        prop_assert!(covered.into_iter().all(|b| b));
    }

    #[test]
    fn container_round_trip_bits(values in prop::collection::vec(-1e12f64..1e12, 0..64)) {
        let c = ModelContainer {
            kind: "prop".to_string(),
            meta: Default::default(),
            arrays: vec![("v".to_string(), values.clone())],
        };
        let back = ModelContainer::from_text(&c.to_text()).unwrap();
        let round = back.array_required("v").unwrap();
        prop_assert_eq!(values.len(), round.len());
        for (a, b) in values.iter().zip(round) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn masked_components_ignore_out_of_clique_coordinates(
        seed in any::<u64>(),
        noise in -1e3f64..1e3,
    ) {
        let mut rng = Rng::new(seed);
        let cliques = CliqueSet::from_cliques(5, &[vec![0, 2], vec![1, 3, 4]]).unwrap();
        let net = Mlp::init(&[5, 6, 1], &mut rng).unwrap();
        let model = MaskedMlpModel::from_parts(cliques, vec![net], true, 0.0).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let v0 = model.component_value(0, &x).unwrap();
        let mut x2 = x.clone();
        x2[1] = noise;
        x2[3] = -noise;
        x2[4] = noise * 0.5;
        prop_assert_eq!(v0.to_bits(), model.component_value(0, &x2).unwrap().to_bits());
    }

    #[test]
    fn decomposed_eval_is_linear_in_each_component(scale in -8.0f64..8.0, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let w = rng.normal();
        let mk = |c: f64| {
            DecomposedFunction::new(
                CliqueSet::from_cliques(2, &[vec![0], vec![1]]).unwrap(),
                vec![
                    Box::new(move |u: &[f64]| c * (w * u[0] + u[0] * u[0]))
                        as Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
                    Box::new(|u: &[f64]| u[0].sin()),
                ],
            )
            .unwrap()
        };
        let base = mk(1.0);
        let scaled = mk(scale);
        let x = [rng.normal(), rng.normal()];
        let b = base.component_values(&x).unwrap();
        let s = scaled.component_values(&x).unwrap();
        prop_assert_eq!(s[0].to_bits(), (scale * b[0]).to_bits());
        prop_assert_eq!(s[1].to_bits(), b[1].to_bits());
    }
}
