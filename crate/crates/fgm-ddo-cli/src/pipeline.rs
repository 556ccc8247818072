//! Seed-sweep execution of the experiments.
//!
//! Each (seed, method) cell is an independent task: every random stream it
//! touches is derived from the cell's seed alone, so a cell computes the
//! same rows whether it runs alone, in a sweep, or on any number of worker
//! threads. Failures are contained per cell and surface as `error` rows.

use std::time::Instant;

use fgm_ddo::bench::{
    clique_correlation, coverage_ratios, gen_quadratic_cycle, gen_rbf_mixture,
    overlapping_triangles_4d, transform_observable, Benchmark, CliquePattern, DiscreteTable,
    InvertibleMap,
};
use fgm_ddo::data::{Dataset, Space};
use fgm_ddo::discovery::{
    edge_test, estimate_pseudo_hessian, whiten_fit, EmaEstimator, PseudoHessian,
};
use fgm_ddo::fgm::{maximal_cliques, normalized_ged, CliqueSet, FgmGraph};
use fgm_ddo::numkit::DenseMatrix;
use fgm_ddo::optimize::{
    argmax_discrete, ascend_policy, best_in_dataset, best_in_random_batch, policy_value, regret,
    rwr_baseline, ArgmaxMode, AscentConfig, Candidate, GaussianPolicy,
};
use fgm_ddo::surrogate::{
    fit_full_mlp, fit_masked_mlp, fit_onehot, DifferentiableSurrogate, MlpFitConfig,
};
use fgm_ddo::vae::{train_vae_with, VaeConfig, VaeModel};
use fgm_ddo::{Error, Result, Rng};

use crate::config::{ExperimentKind, Method, RunConfig};
use crate::report::{ResultRow, Value};

// Stream tags: every stage draws from its own derived stream.
const TAG_DATA: u64 = 1;
const TAG_FIT: u64 = 2;
const TAG_OPT: u64 = 3;
const TAG_EVAL: u64 = 4;
const TAG_VAE: u64 = 5;
const TAG_STEIN: u64 = 6;

/// Samples drawn from the final policy when measuring design validity.
const VALIDITY_SAMPLES: usize = 100;

/// Largest d for which the naive full-clique one-hot model is materialized
/// (the coefficient vector has 2^d entries).
const NAIVE_ONEHOT_MAX_D: usize = 10;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub any_error: bool,
    pub cell_seconds: Vec<(String, f64)>,
    pub total_seconds: f64,
    pub started_unix_ms: u128,
    pub workers: usize,
    pub config_echo: String,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    seed: u64,
    method: Method,
}

fn cells_for(config: &RunConfig) -> Vec<Cell> {
    // Kinds without a method set run one cell per seed under a fixed label.
    let methods: Vec<Method> = match config.kind {
        ExperimentKind::RbfDiscovery => vec![Method::Fgm],
        ExperimentKind::CoverageDemo | ExperimentKind::SteinCheck => vec![Method::Fgm],
        _ => config.methods.clone(),
    };
    let mut cells = Vec::new();
    for &seed in &config.seeds {
        for &method in &methods {
            cells.push(Cell { seed, method });
        }
    }
    cells
}

/// Executes every cell (in parallel when built with the `parallel` feature)
/// and collects rows in deterministic cell order.
pub fn run_pipeline(config: &RunConfig, workers: usize) -> RunOutcome {
    let started_unix_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let start = Instant::now();
    let cells = cells_for(config);

    let results: Vec<(Vec<ResultRow>, Option<String>, f64)> = with_pool(workers, || {
        fgm_ddo::par::map_collect(&cells, |cell| {
            let t0 = Instant::now();
            let outcome = run_cell(config, cell.seed, cell.method);
            let secs = t0.elapsed().as_secs_f64();
            match outcome {
                Ok(rows) => (rows, None, secs),
                Err(e) => {
                    let row = ResultRow {
                        experiment: config.kind.name().to_string(),
                        method: method_label(config.kind, cell.method).to_string(),
                        d: config.d,
                        n: config.n,
                        seed: cell.seed,
                        metric: "error".to_string(),
                        value: Value::Text(e.to_string()),
                    };
                    (vec![row], Some(e.to_string()), secs)
                }
            }
        })
    });

    let mut rows = Vec::new();
    let mut cell_seconds = Vec::new();
    let mut any_error = false;
    for (cell, (cell_rows, err, secs)) in cells.iter().zip(results) {
        rows.extend(cell_rows);
        any_error |= err.is_some();
        cell_seconds.push((
            format!(
                "{}/{}/seed{}",
                config.kind.name(),
                method_label(config.kind, cell.method),
                cell.seed
            ),
            secs,
        ));
    }
    RunOutcome {
        rows,
        any_error,
        cell_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        started_unix_ms,
        workers,
        config_echo: config.source.clone(),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to build worker pool");
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

fn method_label(kind: ExperimentKind, method: Method) -> &'static str {
    match kind {
        ExperimentKind::RbfDiscovery => "fgm",
        ExperimentKind::CoverageDemo => "exact",
        ExperimentKind::SteinCheck => "stein",
        _ => method.name(),
    }
}

fn run_cell(config: &RunConfig, seed: u64, method: Method) -> Result<Vec<ResultRow>> {
    match config.kind {
        ExperimentKind::QuadraticCycleRegret => quadratic_cycle_cell(config, seed, method),
        ExperimentKind::RbfDiscovery => rbf_discovery_cell(config, seed),
        ExperimentKind::RbfOptimize => rbf_optimize_cell(config, seed, method),
        ExperimentKind::TransformedPipeline => transformed_cell(config, seed, method),
        ExperimentKind::CoverageDemo => coverage_cell(config, seed),
        ExperimentKind::SteinCheck => stein_cell(config, seed),
    }
}

fn row(config: &RunConfig, method: &str, seed: u64, metric: &str, value: Value) -> ResultRow {
    ResultRow {
        experiment: config.kind.name().to_string(),
        method: method.to_string(),
        d: config.d,
        n: config.n,
        seed,
        metric: metric.to_string(),
        value,
    }
}

fn rbf_pattern(d: usize) -> Result<CliquePattern> {
    if d == 4 {
        Ok(overlapping_triangles_4d())
    } else if d >= 3 && d % 2 == 1 {
        Ok(CliquePattern::TriangleChain)
    } else {
        Err(Error::InvalidArgument(format!(
            "RBF benchmarks need d = 4 or odd d >= 3, got {d}"
        )))
    }
}

fn mlp_config(config: &RunConfig, seed: u64) -> MlpFitConfig {
    MlpFitConfig {
        hidden: config.surrogate.hidden.clone(),
        lr: config.surrogate.lr,
        epochs: config.surrogate.epochs,
        batch: config.surrogate.batch,
        seed: Rng::new(seed).derive(TAG_FIT).next_u64(),
        holdout_fraction: config.surrogate.holdout,
        shared: config.surrogate.shared,
    }
}

/// Pseudo-Hessian estimate honoring the whiten / σ̂≡1 settings.
fn discover_graph(config: &RunConfig, x: &DenseMatrix, y: &[f64]) -> Result<FgmGraph> {
    let ph = if config.discovery.whiten {
        let wt = whiten_fit(x)?;
        estimate_pseudo_hessian(&wt.apply_matrix(x)?, y)?
    } else {
        estimate_pseudo_hessian(x, y)?
    };
    let ph = apply_sigma_mode(config, ph);
    edge_test(&ph, config.discovery.alpha)
}

fn apply_sigma_mode(config: &RunConfig, ph: PseudoHessian) -> PseudoHessian {
    if config.discovery.sigma_hat_one {
        ph.with_unit_sigma()
    } else {
        ph
    }
}

fn quadratic_cycle_cell(config: &RunConfig, seed: u64, method: Method) -> Result<Vec<ResultRow>> {
    let bench = gen_quadratic_cycle(config.d)?;
    let mut data_rng = Rng::new(seed).derive(TAG_DATA);
    let ds = bench.sample_dataset(config.n, &mut data_rng)?;
    let label = method.name();
    let mut rows = Vec::new();
    match method {
        Method::BestInDataset => {
            let (_, x, _) = best_in_dataset(&ds)?;
            let mut eval_rng = Rng::new(seed).derive(TAG_EVAL);
            let r = regret(&bench, &Candidate::Point(&x), &mut eval_rng)?;
            rows.push(row(config, label, seed, "regret", Value::Num(r)));
        }
        Method::Fgm | Method::NaiveFull => {
            let cliques = if method == Method::Fgm {
                bench.true_cliques().clone()
            } else {
                if config.d > NAIVE_ONEHOT_MAX_D {
                    return Err(Error::InvalidArgument(format!(
                        "naive-full one-hot materializes 2^d coefficients; d <= {NAIVE_ONEHOT_MAX_D} required"
                    )));
                }
                CliqueSet::from_cliques(config.d, &[(0..config.d).collect()])?
            };
            let lambda = config.surrogate.lambda_scale * config.n as f64;
            let model = fit_onehot(&ds, &cliques, lambda)?;
            let f = |x: &[usize]| model.predict(x);
            let domains = vec![2usize; config.d];
            let mode = if (config.d as u32) <= 20 {
                ArgmaxMode::Exhaustive
            } else {
                ArgmaxMode::CoordinateAscent {
                    restarts: config.optimize.restarts,
                    seed: Rng::new(seed).derive(TAG_OPT).next_u64(),
                }
            };
            let best = argmax_discrete(&f, &domains, &mode)?;
            let best_f: Vec<f64> = best.iter().map(|&b| b as f64).collect();
            let mut eval_rng = Rng::new(seed).derive(TAG_EVAL);
            let r = regret(&bench, &Candidate::Point(&best_f), &mut eval_rng)?;
            rows.push(row(config, label, seed, "regret", Value::Num(r)));
            if method == Method::Fgm && cliques.len() >= 2 {
                let corr = clique_correlation(&model, &ds)?;
                rows.push(row(
                    config,
                    label,
                    seed,
                    "sigma_hat",
                    Value::Num(corr.max_off_diagonal()),
                ));
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "method {} not supported for quadratic-cycle-regret",
                other.name()
            )))
        }
    }
    Ok(rows)
}

fn rbf_discovery_cell(config: &RunConfig, seed: u64) -> Result<Vec<ResultRow>> {
    let bench = gen_rbf_mixture(config.d, &rbf_pattern(config.d)?, seed)?;
    let mut data_rng = Rng::new(seed).derive(TAG_DATA);
    let ds = bench.sample_dataset(config.n, &mut data_rng)?;
    let graph = discover_graph(config, &ds.x, &ds.y)?;
    let ged = normalized_ged(&graph, bench.graph())?;
    Ok(vec![row(config, "fgm", seed, "ged", Value::Num(ged))])
}

fn rbf_optimize_cell(config: &RunConfig, seed: u64, method: Method) -> Result<Vec<ResultRow>> {
    let bench = gen_rbf_mixture(config.d, &rbf_pattern(config.d)?, seed)?;
    let mut data_rng = Rng::new(seed).derive(TAG_DATA);
    let ds = bench.sample_dataset(config.n, &mut data_rng)?;
    let label = method.name();
    let mut rows = Vec::new();
    match method {
        Method::BestInDataset => {
            let (_, _, y) = best_in_dataset(&ds)?;
            rows.push(row(config, label, seed, "value", Value::Num(y)));
        }
        Method::Rwr => {
            let policy = rwr_baseline(&ds, config.optimize.rwr_temperature)?;
            let mut eval_rng = Rng::new(seed).derive(TAG_EVAL);
            let v = policy_value(&bench, &policy, config.optimize.mc_samples, &mut eval_rng)?;
            rows.push(row(config, label, seed, "value", Value::Num(v)));
        }
        Method::Fgm | Method::NaiveFull => {
            let fit_cfg = mlp_config(config, seed);
            let (model, cliques_used) = if method == Method::Fgm {
                let graph = discover_graph(config, &ds.x, &ds.y)?;
                let ged = normalized_ged(&graph, bench.graph())?;
                rows.push(row(config, label, seed, "ged", Value::Num(ged)));
                let cliques = maximal_cliques(&graph)?;
                let (model, _) = fit_masked_mlp(&ds, &cliques, &fit_cfg)?;
                (model, cliques)
            } else {
                let (model, _) = fit_full_mlp(&ds, &fit_cfg)?;
                let full = CliqueSet::from_cliques(config.d, &[(0..config.d).collect()])?;
                (model, full)
            };
            // The paper initializes the design distribution at the maximum
            // of a random batch, not the dataset-wide best.
            let mut opt_rng = Rng::new(seed).derive(TAG_OPT);
            let (_, init_x, _) =
                best_in_random_batch(&ds, config.optimize.batch, &mut opt_rng)?;
            let init = GaussianPolicy::centered(init_x, config.optimize.init_std)?;
            let ascent = AscentConfig {
                steps: config.optimize.steps,
                lr: config.optimize.lr,
                batch: config.optimize.batch,
                learn_std: config.optimize.learn_std,
            };
            let oracle = |x: &[f64]| bench.eval(x).unwrap_or(f64::NAN);
            let (_, trace) =
                ascend_policy(&model, &init, &ascent, &mut opt_rng, Some(&oracle))?;
            let first = trace.records.first().expect("nonempty trace");
            let last = trace.records.last().expect("nonempty trace");
            rows.push(row(
                config,
                label,
                seed,
                "improvement",
                Value::Num(last.surrogate_value - first.surrogate_value),
            ));
            rows.push(row(
                config,
                label,
                seed,
                "value_init",
                Value::Num(first.true_value.unwrap_or(f64::NAN)),
            ));
            rows.push(row(
                config,
                label,
                seed,
                "value",
                Value::Num(last.true_value.unwrap_or(f64::NAN)),
            ));
            if method == Method::Fgm && cliques_used.len() >= 2 {
                let corr = clique_correlation(&model, &ds)?;
                rows.push(row(
                    config,
                    label,
                    seed,
                    "sigma_hat",
                    Value::Num(corr.max_off_diagonal()),
                ));
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "method {} not supported for rbf-optimize",
                other.name()
            )))
        }
    }
    Ok(rows)
}

fn transformed_cell(config: &RunConfig, seed: u64, method: Method) -> Result<Vec<ResultRow>> {
    let latent = gen_rbf_mixture(config.d, &rbf_pattern(config.d)?, seed)?;
    let (obs_bench, map) = transform_observable(&latent, seed)?;
    let mut data_rng = Rng::new(seed).derive(TAG_DATA);
    let ds = obs_bench.sample_dataset(config.n, &mut data_rng)?;
    match method {
        Method::VaeFgm | Method::VaeGa => {
            vae_pipeline_cell(config, seed, method, &latent, &obs_bench, &map, &ds)
        }
        Method::NaiveFull => naive_observable_cell(config, seed, &obs_bench, &map, &ds),
        other => Err(Error::InvalidArgument(format!(
            "method {} not supported for transformed-pipeline",
            other.name()
        ))),
    }
}

/// Gaussianize with the VAE, discover the graph in latent space, fit the
/// decomposed surrogate on whitened encodings, ascend, and decode.
fn vae_pipeline_cell(
    config: &RunConfig,
    seed: u64,
    method: Method,
    latent: &Benchmark,
    obs_bench: &Benchmark,
    map: &InvertibleMap,
    ds: &Dataset,
) -> Result<Vec<ResultRow>> {
    let label = method.name();
    let d_z = if config.vae.d_z == 0 {
        config.d
    } else {
        config.vae.d_z
    };
    let vae_cfg = VaeConfig {
        d_z,
        hidden: config.vae.hidden.clone(),
        lr: config.vae.lr,
        epochs: config.vae.epochs,
        batch: config.vae.batch,
        seed: Rng::new(seed).derive(TAG_VAE).next_u64(),
        decoder_noise: 1.0,
    };
    let y_mean = ds.mean_y();
    let yc: Vec<f64> = ds.y.iter().map(|v| v - y_mean).collect();

    // Optional interleaved tracking: feed the EMA estimator with encoded
    // minibatch statistics as training progresses.
    let mut ema = EmaEstimator::new(d_z, config.discovery.ema_momentum)?;
    let ema_every = config.vae.ema_every.max(1);
    let interleaved = config.vae.interleaved;
    let (model, _report) = train_vae_with(&ds.x, &vae_cfg, |m: &VaeModel, epoch| {
        if interleaved && epoch % ema_every == 0 {
            let z = m.encode_matrix(&ds.x)?;
            ema.update(&z, &yc)?;
        }
        Ok(())
    })?;

    let z = model.encode_matrix(&ds.x)?;
    // The aggregate posterior is only approximately N(0, I); whitening the
    // encodings costs nothing.
    let wt = whiten_fit(&z)?;
    let zw = wt.apply_matrix(&z)?;

    let ph = if interleaved && ema.update_count() >= config.discovery.ema_burn_in {
        ema.snapshot()?
    } else {
        estimate_pseudo_hessian(&zw, &ds.y)?
    };
    let graph = edge_test(&apply_sigma_mode(config, ph), config.discovery.alpha)?;

    let mut rows = Vec::new();
    if d_z == config.d {
        let ged = normalized_ged(&graph, latent.graph())?;
        rows.push(row(config, label, seed, "ged", Value::Num(ged)));
    }

    let cliques = if method == Method::VaeGa {
        CliqueSet::from_cliques(d_z, &[(0..d_z).collect()])?
    } else {
        maximal_cliques(&graph)?
    };
    let z_ds = Dataset::new(zw, ds.y.clone(), Space::Continuous { dim: d_z })?;
    let (surrogate, _) = fit_masked_mlp(&z_ds, &cliques, &mlp_config(config, seed))?;

    let mut opt_rng = Rng::new(seed).derive(TAG_OPT);
    let (init_idx, _, _) = best_in_random_batch(ds, config.optimize.batch, &mut opt_rng)?;
    let init_mean = z_ds.row(init_idx).to_vec();
    let init = GaussianPolicy::centered(init_mean, config.optimize.init_std)?;
    let ascent = AscentConfig {
        steps: config.optimize.steps,
        lr: config.optimize.lr,
        batch: config.optimize.batch,
        learn_std: config.optimize.learn_std,
    };
    let (policy, trace) = ascend_policy(&surrogate, &init, &ascent, &mut opt_rng, None)?;
    let first = trace.records.first().expect("nonempty trace");
    let last = trace.records.last().expect("nonempty trace");
    rows.push(row(
        config,
        label,
        seed,
        "improvement",
        Value::Num(last.surrogate_value - first.surrogate_value),
    ));

    // Decode final designs and measure validity in observable space.
    let mut eval_rng = Rng::new(seed).derive(TAG_EVAL);
    let mut valid = 0usize;
    let mut value_sum = 0.0;
    for _ in 0..VALIDITY_SAMPLES {
        let zw_sample = policy.sample(&mut eval_rng);
        let z_sample = wt.invert(&zw_sample)?;
        let x_obs = model.decode(&z_sample)?;
        if map.is_valid(&x_obs) {
            valid += 1;
            value_sum += obs_bench.eval(&x_obs)?;
        }
    }
    rows.push(row(
        config,
        label,
        seed,
        "valid_fraction",
        Value::Num(valid as f64 / VALIDITY_SAMPLES as f64),
    ));
    let mean_value = if valid > 0 {
        value_sum / valid as f64
    } else {
        f64::NAN
    };
    rows.push(row(config, label, seed, "value", Value::Num(mean_value)));
    Ok(rows)
}

/// Gradient ascent directly on observables, with per-step validity tracking:
/// the optimizer has no notion of the data manifold and wanders off it.
fn naive_observable_cell(
    config: &RunConfig,
    seed: u64,
    obs_bench: &Benchmark,
    map: &InvertibleMap,
    ds: &Dataset,
) -> Result<Vec<ResultRow>> {
    let label = Method::NaiveFull.name();
    let (model, _) = fit_full_mlp(ds, &mlp_config(config, seed))?;
    let mut opt_rng = Rng::new(seed).derive(TAG_OPT);
    let (_, init_x, _) = best_in_random_batch(ds, config.optimize.batch, &mut opt_rng)?;
    let mut policy = GaussianPolicy::centered(init_x, config.optimize.init_std)?;
    let d = config.d;
    let batch = config.optimize.batch;
    let mut invalid_batches = 0usize;
    for step in 0..config.optimize.steps {
        let xs: Vec<Vec<f64>> = (0..batch).map(|_| policy.sample(&mut opt_rng)).collect();
        if xs.iter().any(|x| !map.is_valid(x)) {
            invalid_batches += 1;
        }
        let mut g_mean = vec![0.0; d];
        for x in &xs {
            let g = model.gradient(x)?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("policy gradient at step {step}")));
            }
            for k in 0..d {
                g_mean[k] += g[k];
            }
        }
        for k in 0..d {
            policy.mean[k] += config.optimize.lr * g_mean[k] / batch as f64;
        }
    }

    let mut rows = vec![row(
        config,
        label,
        seed,
        "invalid_batches",
        Value::Num(invalid_batches as f64),
    )];
    let mut eval_rng = Rng::new(seed).derive(TAG_EVAL);
    let mut valid = 0usize;
    let mut value_sum = 0.0;
    for _ in 0..VALIDITY_SAMPLES {
        let x = policy.sample(&mut eval_rng);
        if map.is_valid(&x) {
            valid += 1;
            value_sum += obs_bench.eval(&x)?;
        }
    }
    rows.push(row(
        config,
        label,
        seed,
        "valid_fraction",
        Value::Num(valid as f64 / VALIDITY_SAMPLES as f64),
    ));
    let mean_value = if valid > 0 {
        value_sum / valid as f64
    } else {
        f64::NAN
    };
    rows.push(row(config, label, seed, "value", Value::Num(mean_value)));
    Ok(rows)
}

fn coverage_cell(config: &RunConfig, seed: u64) -> Result<Vec<ResultRow>> {
    let d = config.d;
    if d < 3 {
        return Err(Error::InvalidArgument(
            "coverage-demo needs d >= 3".to_string(),
        ));
    }
    let bench = gen_quadratic_cycle(d)?;
    let domains = vec![2usize; d];
    let uniform = DiscreteTable::uniform(domains.clone())?;
    let point = DiscreteTable::point_mass(domains, &vec![1usize; d])?;
    let report = coverage_ratios(&point, &uniform, bench.true_cliques())?;
    Ok(vec![
        row(config, "exact", seed, "coverage_full", Value::Num(report.full_max)),
        row(
            config,
            "exact",
            seed,
            "coverage_clique",
            Value::Num(report.clique_wise_max),
        ),
    ])
}

fn stein_cell(config: &RunConfig, seed: u64) -> Result<Vec<ResultRow>> {
    let d = config.d;
    let m = config.n;
    let mut rng = Rng::new(seed).derive(TAG_STEIN);
    let q: Vec<f64> = (0..d * d).map(|_| rng.normal()).collect();
    let mut data = vec![0.0; m * d];
    let mut y = Vec::with_capacity(m);
    for k in 0..m {
        let row_slice = &mut data[k * d..(k + 1) * d];
        rng.fill_normal(row_slice);
        let mut v = 0.0;
        for i in 0..d {
            for j in 0..d {
                v += q[i * d + j] * row_slice[i] * row_slice[j];
            }
        }
        y.push(v);
    }
    let x = DenseMatrix::from_vec(m, d, data)?;
    let ph = estimate_pseudo_hessian(&x, &y)?;
    let mut z_max = 0.0_f64;
    let mut violations = 0usize;
    for i in 0..d {
        for j in (i + 1)..d {
            let target = q[i * d + j] + q[j * d + i];
            let se = ph.standard_error(i, j);
            let z = if se == 0.0 {
                if ph.entry(i, j) == target {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (ph.entry(i, j) - target).abs() / se
            };
            z_max = z_max.max(z);
            if z > 4.0 {
                violations += 1;
            }
        }
    }
    Ok(vec![
        row(config, "stein", seed, "stein_z_max", Value::Num(z_max)),
        row(
            config,
            "stein",
            seed,
            "stein_violations",
            Value::Num(violations as f64),
        ),
    ])
}
