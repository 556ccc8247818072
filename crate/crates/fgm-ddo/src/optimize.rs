//! Design optimization against a surrogate: the best-in-dataset baseline,
//! exact and heuristic discrete argmax, pathwise gradient ascent on a
//! Gaussian design distribution, a reward-weighted-regression baseline, and
//! regret evaluation against benchmarks with known optima.

use std::fmt::Write as _;

use crate::bench::Benchmark;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{adam_step, AdamParams, AdamState, Rng};
use crate::par;
use crate::surrogate::DifferentiableSurrogate;

/// Smallest allowed per-coordinate standard deviation.
pub const STD_FLOOR: f64 = 1e-6;

/// Diagonal Gaussian over designs: the distribution π being optimized.
#[derive(Debug, Clone)]
pub struct GaussianPolicy {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::dim("mean and std lengths differ".to_string()));
        }
        if std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::arg("std entries must be positive and finite"));
        }
        let std = std.into_iter().map(|s| s.max(STD_FLOOR)).collect();
        Ok(GaussianPolicy { mean, std })
    }

    /// Isotropic policy centered at `mean`.
    pub fn centered(mean: Vec<f64>, std: f64) -> Result<Self> {
        let d = mean.len();
        GaussianPolicy::new(mean, vec![std; d])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| m + s * rng.normal())
            .collect()
    }

    pub fn mean_norm(&self) -> f64 {
        self.mean.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// One gradient-ascent iteration record.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iteration: usize,
    pub surrogate_value: f64,
    pub true_value: Option<f64>,
    pub mean_norm: f64,
}

/// Per-iteration history of a policy ascent run.
#[derive(Debug, Clone, Default)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn first_value(&self) -> Option<f64> {
        self.records.first().map(|r| r.surrogate_value)
    }

    pub fn last_value(&self) -> Option<f64> {
        self.records.last().map(|r| r.surrogate_value)
    }

    /// CSV serialization: `step,surrogate_value,true_value,policy_mean_norm`.
    /// The true-value field is empty when no oracle was supplied.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,surrogate_value,true_value,policy_mean_norm\n");
        for r in &self.records {
            let tv = r.true_value.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{tv},{}", r.iteration, r.surrogate_value, r.mean_norm);
        }
        out
    }
}

/// Returns the dataset row with maximal y (index, design, value); ties break
/// toward the lowest row index.
pub fn best_in_dataset(dataset: &Dataset) -> Result<(usize, Vec<f64>, f64)> {
    if dataset.is_empty() {
        return Err(Error::arg("empty dataset"));
    }
    let mut best = 0;
    for i in 1..dataset.len() {
        if dataset.y[i] > dataset.y[best] {
            best = i;
        }
    }
    Ok((best, dataset.row(best).to_vec(), dataset.y[best]))
}

/// The best row within a random batch of the dataset — the policy-ascent
/// initialization point. Unlike [`best_in_dataset`], this leaves the
/// optimizer genuine headroom to climb.
pub fn best_in_random_batch(
    dataset: &Dataset,
    batch: usize,
    rng: &mut Rng,
) -> Result<(usize, Vec<f64>, f64)> {
    if dataset.is_empty() {
        return Err(Error::arg("empty dataset"));
    }
    if batch == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    let mut best: Option<usize> = None;
    for _ in 0..batch.min(dataset.len()) {
        let i = rng.below(dataset.len());
        if best.map_or(true, |b| dataset.y[i] > dataset.y[b]) {
            best = Some(i);
        }
    }
    let b = best.expect("nonempty batch");
    Ok((b, dataset.row(b).to_vec(), dataset.y[b]))
}

/// Search strategy for [`argmax_discrete`].
#[derive(Debug, Clone)]
pub enum ArgmaxMode {
    /// Full enumeration; errors if the space exceeds 2²⁰ configurations.
    Exhaustive,
    /// Greedy per-coordinate sweeps from random restarts.
    CoordinateAscent { restarts: usize, seed: u64 },
}

const EXHAUSTIVE_LIMIT: u128 = 1 << 20;
const MAX_SWEEPS: usize = 100;

/// Maximizes a model over a discrete space given as per-variable category
/// counts. Exhaustive mode returns the global maximizer with lexicographic
/// tie-breaking; coordinate ascent returns a design no single-coordinate
/// change can improve.
pub fn argmax_discrete<F>(f: &F, domains: &[usize], mode: &ArgmaxMode) -> Result<Vec<usize>>
where
    F: Fn(&[usize]) -> Result<f64>,
{
    if domains.is_empty() || domains.iter().any(|&k| k == 0) {
        return Err(Error::arg("domains must be nonempty with positive sizes"));
    }
    match mode {
        ArgmaxMode::Exhaustive => argmax_exhaustive(f, domains),
        ArgmaxMode::CoordinateAscent { restarts, seed } => {
            argmax_coordinate_ascent(f, domains, *restarts, &mut Rng::new(*seed))
        }
    }
}

fn space_size(domains: &[usize]) -> Option<u128> {
    let mut total: u128 = 1;
    for &k in domains {
        total = total.checked_mul(k as u128)?;
    }
    Some(total)
}

fn argmax_exhaustive<F>(f: &F, domains: &[usize], ) -> Result<Vec<usize>>
where
    F: Fn(&[usize]) -> Result<f64>,
{
    match space_size(domains) {
        Some(total) if total <= EXHAUSTIVE_LIMIT => {}
        _ => {
            return Err(Error::arg(format!(
                "space too large for exhaustive argmax (limit {EXHAUSTIVE_LIMIT} configurations); \
                 use coordinate ascent"
            )));
        }
    }
    let d = domains.len();
    let mut x = vec![0usize; d];
    let mut best = x.clone();
    let mut best_val = f(&x)?;
    // Lexicographic odometer; strict improvement keeps the smallest argmax.
    loop {
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(best);
            }
            k -= 1;
            x[k] += 1;
            if x[k] < domains[k] {
                break;
            }
            x[k] = 0;
        }
        let v = f(&x)?;
        if v > best_val {
            best_val = v;
            best = x.clone();
        }
    }
}

fn argmax_coordinate_ascent<F>(
    f: &F,
    domains: &[usize],
    restarts: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>>
where
    F: Fn(&[usize]) -> Result<f64>,
{
    let restarts = restarts.max(1);
    let d = domains.len();
    let mut overall: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts {
        let mut x: Vec<usize> = domains.iter().map(|&k| rng.below(k)).collect();
        let mut val = f(&x)?;
        for _sweep in 0..MAX_SWEEPS {
            let mut improved = false;
            for k in 0..d {
                let current = x[k];
                let mut best_cat = current;
                let mut best_val = val;
                for cat in 0..domains[k] {
                    if cat == current {
                        continue;
                    }
                    x[k] = cat;
                    let v = f(&x)?;
                    if v > best_val {
                        best_val = v;
                        best_cat = cat;
                    }
                }
                x[k] = best_cat;
                if best_cat != current {
                    val = best_val;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        let replace = match &overall {
            None => true,
            Some((bv, bx)) => val > *bv || (val == *bv && x < *bx),
        };
        if replace {
            overall = Some((val, x));
        }
    }
    Ok(overall.expect("at least one restart").1)
}

/// Hyperparameters for [`ascend_policy`].
#[derive(Debug, Clone)]
pub struct AscentConfig {
    pub steps: usize,
    pub lr: f64,
    /// Samples per gradient step.
    pub batch: usize,
    /// Also ascend the per-coordinate log standard deviations.
    pub learn_std: bool,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            steps: 50,
            lr: 0.05,
            batch: 64,
            learn_std: true,
        }
    }
}

/// Pathwise (reparameterized) gradient ascent on a Gaussian policy against a
/// differentiable surrogate, with Adam steps on [mean; log std].
///
/// The noise batch ε is drawn once and reused across steps (common random
/// numbers): each step still evaluates fresh designs x = mean + std⊙ε, but
/// the fixed ε turns the run into deterministic optimization of a fixed
/// sample average — a zero learning rate provably leaves both the policy and
/// the trace exactly unchanged, and Adam's normalized steps cross the flat
/// tails of bump-shaped surrogates that stall plain gradient steps.
///
/// The trace holds `steps + 1` records: record t describes the policy after
/// t updates, so the final record is the returned policy itself.
pub fn ascend_policy<S: DifferentiableSurrogate>(
    model: &S,
    init: &GaussianPolicy,
    config: &AscentConfig,
    rng: &mut Rng,
    oracle: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
) -> Result<(GaussianPolicy, OptimizationTrace)> {
    if config.steps < 1 {
        return Err(Error::arg("at least one ascent step required"));
    }
    if config.lr < 0.0 {
        return Err(Error::arg("learning rate must be nonnegative"));
    }
    if config.batch == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    if init.dim() != model.dim() {
        return Err(Error::dim("policy and model dimensions differ".to_string()));
    }
    let d = init.dim();
    let mut policy = init.clone();
    // Parameter vector: [mean; log std].
    let mut params: Vec<f64> = policy.mean.clone();
    params.extend(policy.std.iter().map(|s| s.ln()));
    let mut adam = AdamState::new(2 * d);
    let hyper = AdamParams {
        lr: config.lr,
        ..AdamParams::default()
    };
    let mut trace = OptimizationTrace::default();

    let eps: Vec<Vec<f64>> = (0..config.batch)
        .map(|_| (0..d).map(|_| rng.normal()).collect())
        .collect();

    for step in 0..=config.steps {
        let xs: Vec<Vec<f64>> = eps
            .iter()
            .map(|e| {
                policy
                    .mean
                    .iter()
                    .zip(&policy.std)
                    .zip(e)
                    .map(|((m, s), ek)| m + s * ek)
                    .collect()
            })
            .collect();
        let evals: Vec<Result<(f64, Vec<f64>)>> = par::map_collect(&xs, |x| {
            Ok((model.value(x)?, model.gradient(x)?))
        });
        let mut value_sum = 0.0;
        let mut g_mean = vec![0.0; d];
        let mut g_logstd = vec![0.0; d];
        for (eval, e) in evals.into_iter().zip(&eps) {
            let (v, g) = eval?;
            value_sum += v;
            for k in 0..d {
                g_mean[k] += g[k];
                g_logstd[k] += g[k] * e[k] * policy.std[k];
            }
        }
        let b = config.batch as f64;
        let surrogate_value = value_sum / b;
        let true_value = oracle.map(|f| {
            let vals = par::map_collect(&xs, |x| f(x));
            vals.iter().sum::<f64>() / b
        });
        trace.records.push(TraceRecord {
            iteration: step,
            surrogate_value,
            true_value,
            mean_norm: policy.mean_norm(),
        });
        if step == config.steps {
            break;
        }
        if g_mean.iter().any(|g| !g.is_finite())
            || g_logstd.iter().any(|g| !g.is_finite())
        {
            return Err(Error::NonFinite(format!("policy gradient at step {step}")));
        }
        // Ascent: Adam minimizes, so feed negated gradients.
        let mut grad = vec![0.0; 2 * d];
        for k in 0..d {
            grad[k] = -g_mean[k] / b;
            grad[d + k] = if config.learn_std {
                -g_logstd[k] / b
            } else {
                0.0
            };
        }
        adam_step(&mut params, &grad, &mut adam, &hyper)?;
        for k in 0..d {
            policy.mean[k] = params[k];
            if config.learn_std {
                policy.std[k] = params[d + k].exp().max(STD_FLOOR);
            }
        }
    }
    Ok((policy, trace))
}

/// Reward-weighted regression baseline: an exponentiated-advantage weighted
/// Gaussian fit to the dataset. Weights are exp((yᵢ − max y)/temperature).
pub fn rwr_baseline(dataset: &Dataset, temperature: f64) -> Result<GaussianPolicy> {
    if dataset.is_empty() {
        return Err(Error::arg("empty dataset"));
    }
    if temperature <= 0.0 {
        return Err(Error::arg("temperature must be positive"));
    }
    let d = dataset.dim();
    let y_max = dataset.y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = dataset
        .y
        .iter()
        .map(|y| ((y - y_max) / temperature).exp())
        .collect();
    let w_sum: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    for (i, w) in weights.iter().enumerate() {
        for (m, v) in mean.iter_mut().zip(dataset.row(i)) {
            *m += w * v;
        }
    }
    for m in mean.iter_mut() {
        *m /= w_sum;
    }
    let mut var = vec![0.0; d];
    for (i, w) in weights.iter().enumerate() {
        for (k, v) in dataset.row(i).iter().enumerate() {
            let dvi = v - mean[k];
            var[k] += w * dvi * dvi;
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / w_sum).sqrt().max(STD_FLOOR)).collect();
    GaussianPolicy::new(mean, std)
}

/// What to score against a benchmark optimum.
pub enum Candidate<'a> {
    /// A single design.
    Point(&'a [f64]),
    /// A design distribution, scored by Monte Carlo with the given sample
    /// count (the contract uses 10⁴).
    Policy(&'a GaussianPolicy, usize),
}

/// Regret f(x⋆) − f(x̂) of a design, or f(x⋆) − E_{x∼π}[f(x)] of a policy,
/// against a benchmark with a known optimum.
pub fn regret(benchmark: &Benchmark, candidate: &Candidate, rng: &mut Rng) -> Result<f64> {
    let Some((_, opt_value)) = benchmark.known_optimum() else {
        return Err(Error::arg(format!(
            "benchmark {} has no known optimum; regret undefined",
            benchmark.name()
        )));
    };
    let achieved = match candidate {
        Candidate::Point(x) => benchmark.eval(x)?,
        Candidate::Policy(policy, samples) => policy_value(benchmark, policy, *samples, rng)?,
    };
    Ok(opt_value - achieved)
}

/// Monte Carlo estimate of E_{x∼π}[f(x)] under a benchmark oracle. Designs
/// are drawn sequentially from `rng` (deterministic), evaluated in parallel,
/// and reduced in sample order.
pub fn policy_value(
    benchmark: &Benchmark,
    policy: &GaussianPolicy,
    samples: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::arg("at least one sample required"));
    }
    let xs: Vec<Vec<f64>> = (0..samples).map(|_| policy.sample(rng)).collect();
    let vals = par::map_collect(&xs, |x| benchmark.eval(x));
    let mut acc = 0.0;
    for v in vals {
        acc += v?;
    }
    Ok(acc / samples as f64)
}
