//! Finite-difference validation of every hand-written gradient path: MLP
//! backpropagation and the decomposed surrogate's input gradient, 100 random
//! instances each.

use fgm_ddo::fgm::CliqueSet;
use fgm_ddo::numkit::Mlp;
use fgm_ddo::surrogate::MaskedMlpModel;
use fgm_ddo::Rng;

fn random_widths(rng: &mut Rng) -> Vec<usize> {
    let depth = 1 + rng.below(2); // 1 or 2 hidden layers
    let mut widths = vec![1 + rng.below(4)];
    for _ in 0..depth {
        widths.push(1 + rng.below(8));
    }
    widths.push(1);
    widths
}

#[test]
fn backward_matches_finite_differences_on_100_networks() {
    let mut rng = Rng::new(8001);
    for trial in 0..100 {
        let widths = random_widths(&mut rng);
        let mlp = Mlp::init(&widths, &mut rng).unwrap();
        let n = 1 + rng.below(6);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..widths[0]).map(|_| rng.normal()).collect())
            .collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let (grads, _) = mlp.grad_mse_batch(&xs, &ys).unwrap();
        let analytic = grads.to_vec();

        let params = mlp.params_to_vec();
        let loss_of = |p: &[f64]| {
            let mut m = mlp.clone();
            m.set_params_from_vec(p).unwrap();
            xs.iter()
                .zip(&ys)
                .map(|(x, &y)| {
                    let r = m.forward_scalar(x).unwrap() - y;
                    r * r
                })
                .sum::<f64>()
                / n as f64
        };
        let h = 1e-5;
        for k in 0..params.len() {
            let mut p = params.clone();
            p[k] += h;
            let up = loss_of(&p);
            p[k] -= 2.0 * h;
            let down = loss_of(&p);
            let fd = (up - down) / (2.0 * h);
            if fd.abs() >= 1e-6 {
                assert!(
                    (analytic[k] - fd).abs() / fd.abs() <= 1e-4,
                    "trial {trial} param {k}: analytic {} vs fd {fd}",
                    analytic[k]
                );
            }
        }
    }
}

fn random_clique_set(d: usize, rng: &mut Rng) -> CliqueSet {
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut covered = vec![false; d];
    while covered.iter().any(|c| !c) {
        let size = 1 + rng.below(d.min(3));
        let mut c: Vec<usize> = (0..d).collect();
        rng.shuffle(&mut c);
        c.truncate(size);
        for &v in &c {
            covered[v] = true;
        }
        cliques.push(c);
    }
    CliqueSet::from_cliques(d, &cliques).unwrap()
}

#[test]
fn predict_gradient_matches_finite_differences_on_100_models() {
    let mut rng = Rng::new(8002);
    for trial in 0..100 {
        let d = 2 + rng.below(5);
        let cliques = random_clique_set(d, &mut rng);
        let shared = rng.uniform() < 0.5;
        let nets = if shared {
            vec![Mlp::init(&[d, 1 + rng.below(8), 1], &mut rng).unwrap()]
        } else {
            cliques
                .cliques()
                .iter()
                .map(|c| Mlp::init(&[c.len(), 1 + rng.below(8), 1], &mut rng).unwrap())
                .collect()
        };
        let model = MaskedMlpModel::from_parts(cliques, nets, shared, rng.normal()).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let g = model.predict_gradient(&x).unwrap();
        let h = 1e-5;
        for k in 0..d {
            let mut xp = x.clone();
            xp[k] += h;
            let up = model.predict(&xp).unwrap();
            xp[k] -= 2.0 * h;
            let down = model.predict(&xp).unwrap();
            let fd = (up - down) / (2.0 * h);
            if fd.abs() >= 1e-6 {
                assert!(
                    (g[k] - fd).abs() / fd.abs() <= 1e-4,
                    "trial {trial} coord {k}: analytic {} vs fd {fd}",
                    g[k]
                );
            } else {
                assert!(g[k].abs() <= 1e-5, "trial {trial} coord {k}: near-zero fd but analytic {}", g[k]);
            }
        }
    }
}
