//! Numerical checks of the theory the library is built on: the clique
//! decomposition, the coverage inequality, and the Stein-identity estimator.

use fgm_ddo::bench::{
    coverage_ratios, gen_rbf_mixture, CliquePattern, DiscreteTable,
};
use fgm_ddo::discovery::estimate_pseudo_hessian;
use fgm_ddo::fgm::{
    maximal_cliques, recover_graph_from_oracle, CliqueSet, DecomposedFunction, FgmGraph,
};
use fgm_ddo::numkit::DenseMatrix;
use fgm_ddo::Rng;

/// Random smooth per-clique component: quadratic couplings plus a cosine.
fn random_component(arity: usize, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let quad: Vec<f64> = (0..arity * arity).map(|_| rng.normal() * 0.5).collect();
    let lin: Vec<f64> = (0..arity).map(|_| rng.normal()).collect();
    (quad, lin)
}

fn eval_component(quad: &[f64], lin: &[f64], u: &[f64]) -> f64 {
    let k = u.len();
    let mut v = 0.0;
    for a in 0..k {
        for b in 0..k {
            v += quad[a * k + b] * u[a] * u[b];
        }
        v += lin[a] * (u[a]).cos();
    }
    v
}

fn random_decomposition(rng: &mut Rng) -> (DecomposedFunction, Vec<(Vec<f64>, Vec<f64>)>) {
    let d = 3 + rng.below(5); // 3..=7
    let mut graph = FgmGraph::new(d);
    for i in 0..d {
        for j in (i + 1)..d {
            if rng.uniform() < 0.35 {
                graph.add_edge(i, j).unwrap();
            }
        }
    }
    let cliques = maximal_cliques(&graph).unwrap();
    let params: Vec<(Vec<f64>, Vec<f64>)> = cliques
        .cliques()
        .iter()
        .map(|c| random_component(c.len(), rng))
        .collect();
    let components: Vec<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>> = params
        .iter()
        .cloned()
        .map(|(quad, lin)| {
            Box::new(move |u: &[f64]| eval_component(&quad, &lin, u))
                as Box<dyn Fn(&[f64]) -> f64 + Send + Sync>
        })
        .collect();
    (
        DecomposedFunction::new(cliques, components).unwrap(),
        params,
    )
}

#[test]
fn decomposed_evaluation_matches_direct_assembly_on_100_functions() {
    let mut rng = Rng::new(7001);
    for _ in 0..100 {
        let (df, params) = random_decomposition(&mut rng);
        let d = df.dim();
        for _ in 0..20 {
            let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            // Independent assembly: slice coordinates and sum by hand.
            let direct: f64 = df
                .cliques()
                .cliques()
                .iter()
                .zip(&params)
                .map(|(c, (quad, lin))| {
                    let u: Vec<f64> = c.iter().map(|&k| x[k]).collect();
                    eval_component(quad, lin, &u)
                })
                .sum();
            assert!(
                (df.eval(&x).unwrap() - direct).abs() <= 1e-12,
                "eval mismatch"
            );
        }
    }
}

#[test]
fn recovered_graphs_never_invent_cross_clique_edges() {
    let mut rng = Rng::new(7002);
    for _ in 0..100 {
        let (df, _) = random_decomposition(&mut rng);
        let d = df.dim();
        let probes: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..d).map(|_| rng.normal()).collect())
            .collect();
        let f = |x: &[f64]| df.eval(x).unwrap();
        let recovered = recover_graph_from_oracle(&f, d, &probes, 1e-3).unwrap();
        let allowed = df.cliques().pair_union();
        for (i, j) in recovered.edges() {
            assert!(
                allowed.has_edge(i, j),
                "invented edge ({i},{j}) outside the clique union"
            );
        }
    }
}

#[test]
fn coverage_inequality_holds_on_1000_fuzzed_instances() {
    let mut rng = Rng::new(7003);
    for trial in 0..1000 {
        let d = 2 + rng.below(11); // 2..=12, binary: at most 4096 states
        let domains = vec![2usize; d];
        // Random clique structure from a random graph.
        let mut graph = FgmGraph::new(d);
        for i in 0..d {
            for j in (i + 1)..d {
                if rng.uniform() < 0.4 {
                    graph.add_edge(i, j).unwrap();
                }
            }
        }
        let cliques = maximal_cliques(&graph).unwrap();

        let pi = match trial % 3 {
            0 => DiscreteTable::random(domains.clone(), &mut rng).unwrap(),
            _ => {
                let x: Vec<usize> = (0..d).map(|_| rng.below(2)).collect();
                DiscreteTable::point_mass(domains.clone(), &x).unwrap()
            }
        };
        let p = if trial % 5 == 0 {
            // Knock some mass out of p: the full ratio may go infinite.
            let total = 1usize << d;
            let mut probs: Vec<f64> = (0..total).map(|_| rng.uniform()).collect();
            for q in probs.iter_mut() {
                if rng.uniform() < 0.2 {
                    *q = 0.0;
                }
            }
            let sum: f64 = probs.iter().sum();
            if sum == 0.0 {
                continue;
            }
            for q in probs.iter_mut() {
                *q /= sum;
            }
            DiscreteTable::from_probs(domains.clone(), probs).unwrap()
        } else {
            DiscreteTable::random(domains.clone(), &mut rng).unwrap()
        };

        // coverage_ratios returns an error if the inequality fails.
        let report = coverage_ratios(&pi, &p, &cliques).unwrap();
        assert!(report.clique_wise_max <= report.full_max);
    }
}

#[test]
fn stein_estimator_consistency_over_50_quadratic_trials() {
    // Ĥ off-diagonals estimate Q + Qᵀ; count entries beyond 3 standard
    // errors across 50 independent trials (10 entries each).
    let d = 5;
    let m = 1_000_000;
    let mut failures = 0;
    let mut total = 0;
    for trial in 0..50u64 {
        let mut rng = Rng::new(9000 + trial);
        let q: Vec<f64> = (0..d * d).map(|_| rng.normal()).collect();
        let mut data = vec![0.0; m * d];
        let mut y = Vec::with_capacity(m);
        for k in 0..m {
            let row = &mut data[k * d..(k + 1) * d];
            rng.fill_normal(row);
            let mut v = 0.0;
            for i in 0..d {
                for j in 0..d {
                    v += q[i * d + j] * row[i] * row[j];
                }
            }
            y.push(v);
        }
        let x = DenseMatrix::from_vec(m, d, data).unwrap();
        let ph = estimate_pseudo_hessian(&x, &y).unwrap();
        for i in 0..d {
            for j in (i + 1)..d {
                total += 1;
                let target = q[i * d + j] + q[j * d + i];
                if (ph.entry(i, j) - target).abs() > 3.0 * ph.standard_error(i, j) {
                    failures += 1;
                }
            }
        }
    }
    assert_eq!(total, 500);
    assert!(
        (failures as f64) <= 0.02 * total as f64,
        "{failures} of {total} entries outside 3 standard errors"
    );
}

#[test]
fn non_edges_stay_within_four_standard_errors_on_rbf_family() {
    // For (i, j) outside the FGM, E[xᵢxⱼf(x)] = 0 exactly; empirically the
    // estimate should sit within 4σ̂/√M in at least 95% of trials.
    let m = 20_000;
    let mut ok = 0;
    let mut total = 0;
    for seed in 0..20u64 {
        let bench = gen_rbf_mixture(7, &CliquePattern::TriangleChain, seed).unwrap();
        let mut rng = Rng::new(500 + seed);
        let ds = bench.sample_dataset(m, &mut rng).unwrap();
        let ph = estimate_pseudo_hessian(&ds.x, &ds.y).unwrap();
        for i in 0..7 {
            for j in (i + 1)..7 {
                if bench.graph().has_edge(i, j) {
                    continue;
                }
                total += 1;
                if ph.entry(i, j).abs() <= 4.0 * ph.standard_error(i, j) {
                    ok += 1;
                }
            }
        }
    }
    assert!(
        ok as f64 >= 0.95 * total as f64,
        "only {ok}/{total} non-edges within 4 standard errors"
    );
}

#[test]
fn rbf_ground_truth_graph_recovered_by_finite_differences() {
    for (d, seed) in [(3usize, 1u64), (5, 2), (7, 3), (9, 4)] {
        let bench = gen_rbf_mixture(d, &CliquePattern::TriangleChain, seed).unwrap();
        let mut rng = Rng::new(600 + seed);
        let probes: Vec<Vec<f64>> = (0..128)
            .map(|_| (0..d).map(|_| rng.normal()).collect())
            .collect();
        let f = |x: &[f64]| bench.eval(x).unwrap();
        let recovered = recover_graph_from_oracle(&f, d, &probes, 1e-3).unwrap();
        assert_eq!(
            &recovered,
            bench.graph(),
            "graph recovery failed at d={d}, seed={seed}"
        );
    }
}

#[test]
fn quadratic_cycle_clique_structure_is_all_edges() {
    let bench = fgm_ddo::bench::gen_quadratic_cycle(8).unwrap();
    let cliques = maximal_cliques(bench.graph()).unwrap();
    assert_eq!(cliques.len(), 8);
    assert!(cliques.cliques().iter().all(|c| c.len() == 2));
    // Sanity: the declared clique set matches enumeration.
    assert_eq!(bench.true_cliques().cliques(), cliques.cliques());
    let _ = CliqueSet::from_cliques(8, cliques.cliques()).unwrap();
}
