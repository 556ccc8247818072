//! Synthetic benchmarks with exact oracles and known FGM structure, plus the
//! coverage-ratio and clique-correlation diagnostics used to probe the
//! regret theory empirically.

mod coverage;

pub use coverage::{
    clique_correlation, coverage_ratios, CorrelationReport, CoverageReport, DiscreteTable,
};

use std::sync::Arc;

use crate::data::{Dataset, Space};
use crate::error::{Error, Result};
use crate::fgm::{maximal_cliques, CliqueSet, FgmGraph};
use crate::numkit::{DenseMatrix, Rng};

type Oracle = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut Rng) -> Vec<f64> + Send + Sync>;

/// A synthetic task: an exact oracle, its ground-truth FGM, and (when the
/// optimum is analytic) the optimal design.
#[derive(Clone)]
pub struct Benchmark {
    name: String,
    manifest: String,
    space: Space,
    oracle: Oracle,
    graph: FgmGraph,
    cliques: CliqueSet,
    known_optimum: Option<(Vec<f64>, f64)>,
    value_upper_bound: Option<f64>,
    sampler: Option<Sampler>,
}

impl std::fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("manifest", &self.manifest)
            .field("space", &self.space)
            .finish_non_exhaustive()
    }
}

impl Benchmark {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// One-line descriptor sufficient to regenerate this benchmark
    /// bit-identically via [`benchmark_from_manifest`].
    pub fn manifest(&self) -> &str {
        &self.manifest
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn graph(&self) -> &FgmGraph {
        &self.graph
    }

    /// Ground-truth clique structure.
    pub fn true_cliques(&self) -> &CliqueSet {
        &self.cliques
    }

    pub fn known_optimum(&self) -> Option<(&[f64], f64)> {
        self.known_optimum.as_ref().map(|(x, v)| (x.as_slice(), *v))
    }

    /// Σ_C w_C for RBF mixtures: a plotting reference, not an attained value.
    pub fn value_upper_bound(&self) -> Option<f64> {
        self.value_upper_bound
    }

    /// Evaluates the oracle. May return NaN for transformed benchmarks
    /// queried outside the valid observable region.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::dim(format!(
                "design has dimension {}, benchmark {} expects {}",
                x.len(),
                self.name,
                self.dim()
            )));
        }
        Ok((self.oracle)(x))
    }

    /// Draws an offline dataset: uniform categories for discrete spaces,
    /// standard normal designs for continuous ones, or the benchmark's own
    /// sampler (transformed benchmarks sample latents and map them forward).
    pub fn sample_dataset(&self, n: usize, rng: &mut Rng) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::arg("dataset size must be positive"));
        }
        let d = self.dim();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = if let Some(sampler) = &self.sampler {
                sampler(rng)
            } else {
                match &self.space {
                    Space::Discrete { domains } => {
                        domains.iter().map(|&k| rng.below(k) as f64).collect()
                    }
                    Space::Continuous { .. } => (0..d).map(|_| rng.normal()).collect(),
                }
            };
            rows.push(x);
        }
        let y: Vec<f64> = rows.iter().map(|x| (self.oracle)(x)).collect();
        Dataset::new(DenseMatrix::from_rows(&rows)?, y, self.space.clone())
    }
}

/// Binary quadratic cycle f(x) = x_1x_2 + x_2x_3 + ... + x_dx_1 over
/// {0,1}^d. The
/// optimum is all-ones with value d; the FGM is the cycle graph, whose
/// maximal cliques (d ≥ 4) are exactly its edges — every vertex is shared
/// between two cliques.
pub fn gen_quadratic_cycle(d: usize) -> Result<Benchmark> {
    if d < 3 {
        return Err(Error::arg("quadratic cycle needs d >= 3"));
    }
    let mut graph = FgmGraph::new(d);
    for i in 0..d {
        graph.add_edge(i, (i + 1) % d)?;
    }
    let cliques = maximal_cliques(&graph)?;
    let oracle: Oracle = Arc::new(move |x: &[f64]| {
        let d = x.len();
        (0..d).map(|i| x[i] * x[(i + 1) % d]).sum()
    });
    Ok(Benchmark {
        name: format!("quadratic-cycle-{d}"),
        manifest: format!("kind=quadratic-cycle d={d}"),
        space: Space::binary(d),
        oracle,
        graph,
        cliques,
        known_optimum: Some((vec![1.0; d], d as f64)),
        value_upper_bound: Some(d as f64),
        sampler: None,
    })
}

/// Clique layout for [`gen_rbf_mixture`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliquePattern {
    /// {0,1,2}, {2,3,4}, … — overlapping triangles; needs odd d ≥ 3.
    TriangleChain,
    /// Explicit cliques covering every coordinate.
    Custom(Vec<Vec<usize>>),
}

impl CliquePattern {
    fn cliques(&self, d: usize) -> Result<CliqueSet> {
        match self {
            CliquePattern::TriangleChain => {
                if d < 3 || d % 2 == 0 {
                    return Err(Error::arg(format!(
                        "triangle chain needs odd d >= 3, got {d}"
                    )));
                }
                let cliques: Vec<Vec<usize>> = (0..(d - 1) / 2)
                    .map(|k| vec![2 * k, 2 * k + 1, 2 * k + 2])
                    .collect();
                CliqueSet::from_cliques(d, &cliques)
            }
            CliquePattern::Custom(cliques) => CliqueSet::from_cliques(d, cliques),
        }
    }

    fn manifest_fragment(&self) -> String {
        match self {
            CliquePattern::TriangleChain => "pattern=triangle-chain".to_string(),
            CliquePattern::Custom(cliques) => {
                let body = cliques
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    })
                    .collect::<Vec<_>>()
                    .join(";");
                format!("pattern=custom cliques={body}")
            }
        }
    }
}

/// The 4-dimensional pattern used alongside the triangle chain: two
/// overlapping triangles {0,1,2} and {1,2,3}.
pub fn overlapping_triangles_4d() -> CliquePattern {
    CliquePattern::Custom(vec![vec![0, 1, 2], vec![1, 2, 3]])
}

/// Random RBF mixture f(x) = Σ_C w_C·exp(−‖x_C − μ_C‖²) with w_C = |N(0,1)|
/// + 0.1 (strictly positive) and μ_C standard normal, both drawn from the
/// seed. No analytic optimum; Σ_C w_C is recorded as an upper bound.
pub fn gen_rbf_mixture(d: usize, pattern: &CliquePattern, seed: u64) -> Result<Benchmark> {
    let cliques = pattern.cliques(d)?;
    let mut rng = Rng::new(seed).derive(0x7bf);
    let mut weights = Vec::with_capacity(cliques.len());
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(cliques.len());
    for c in cliques.cliques() {
        weights.push(rng.normal().abs() + 0.1);
        centers.push((0..c.len()).map(|_| rng.normal()).collect());
    }
    let upper: f64 = weights.iter().sum();
    let graph = cliques.pair_union();
    let clique_list: Vec<Vec<usize>> = cliques.cliques().to_vec();
    let (w, mu) = (weights, centers);
    let oracle: Oracle = Arc::new(move |x: &[f64]| {
        clique_list
            .iter()
            .zip(&w)
            .zip(&mu)
            .map(|((c, w), mu)| {
                let dist2: f64 = c
                    .iter()
                    .zip(mu)
                    .map(|(&k, m)| (x[k] - m) * (x[k] - m))
                    .sum();
                w * (-dist2).exp()
            })
            .sum()
    });
    Ok(Benchmark {
        name: format!("rbf-{d}-seed{seed}"),
        manifest: format!("kind=rbf d={d} seed={seed} {}", pattern.manifest_fragment()),
        space: Space::Continuous { dim: d },
        oracle,
        graph,
        cliques,
        known_optimum: None,
        value_upper_bound: Some(upper),
        sampler: None,
    })
}

/// Numerically stable softplus ln(1 + eᵘ).
pub fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

/// Inverse softplus ln(eˢ − 1); requires s > 0.
pub fn softplus_inv(s: f64) -> f64 {
    if s > 30.0 {
        s
    } else {
        // ln(e^s − 1) = s + ln(1 − e^{−s})
        s + (-(-s).exp()).ln_1p()
    }
}

/// Invertible nonlinear observation map x_obs = a·softplus(Mx) + b.
#[derive(Debug, Clone)]
pub struct InvertibleMap {
    a: f64,
    m: DenseMatrix,
    m_inv: DenseMatrix,
    b: Vec<f64>,
}

impl InvertibleMap {
    pub fn new(a: f64, m: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::arg("scale a must be positive"));
        }
        if m.rows() != m.cols() || m.rows() != b.len() {
            return Err(Error::dim("map needs square M matching b".to_string()));
        }
        let m_inv = m.invert()?;
        Ok(InvertibleMap { a, m, m_inv, b })
    }

    /// Random map with condition number of M at most 20 (resampled until the
    /// bound holds, so the inverse stays numerically trustworthy).
    pub fn random(d: usize, rng: &mut Rng) -> Result<Self> {
        let a = 0.5 + rng.normal().abs();
        let b: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for _ in 0..200 {
            let data: Vec<f64> = (0..d * d).map(|_| rng.normal()).collect();
            let m = DenseMatrix::from_vec(d, d, data)?;
            let Ok(m_inv) = m.invert() else { continue };
            let cond = m.op_norm_estimate(60) * m_inv.op_norm_estimate(60);
            if cond <= 20.0 {
                return Ok(InvertibleMap { a, m, m_inv, b });
            }
        }
        Err(Error::arg(
            "failed to draw a well-conditioned transform in 200 attempts",
        ))
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mx = self.m.matvec(x)?;
        Ok(mx
            .iter()
            .zip(&self.b)
            .map(|(v, b)| self.a * softplus(*v) + b)
            .collect())
    }

    /// True iff `obs` lies in the image of the map: every coordinate of
    /// (obs − b)/a must be strictly positive.
    pub fn is_valid(&self, obs: &[f64]) -> bool {
        obs.len() == self.b.len()
            && obs
                .iter()
                .zip(&self.b)
                .all(|(o, b)| (o - b) / self.a > 0.0)
    }

    /// Exact inverse; NaNs appear where `obs` leaves the valid region.
    pub fn inverse(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let s: Vec<f64> = obs
            .iter()
            .zip(&self.b)
            .map(|(o, b)| softplus_inv((o - b) / self.a))
            .collect();
        self.m_inv.matvec(&s)
    }
}

/// Wraps a continuous benchmark behind a random softplus-affine observation
/// map: the observable oracle is f ∘ inverse, datasets sample latents and map
/// them forward, and designs outside the softplus image evaluate to NaN.
pub fn transform_observable(
    benchmark: &Benchmark,
    seed: u64,
) -> Result<(Benchmark, InvertibleMap)> {
    if !matches!(benchmark.space, Space::Continuous { .. }) {
        return Err(Error::arg(
            "observation transforms apply to continuous benchmarks only",
        ));
    }
    let d = benchmark.dim();
    let mut rng = Rng::new(seed).derive(0x0b5);
    let map = InvertibleMap::random(d, &mut rng)?;

    let base_oracle = benchmark.oracle.clone();
    let inv_map = map.clone();
    let oracle: Oracle = Arc::new(move |obs: &[f64]| {
        if !inv_map.is_valid(obs) {
            return f64::NAN;
        }
        match inv_map.inverse(obs) {
            Ok(z) => base_oracle(&z),
            Err(_) => f64::NAN,
        }
    });

    let fwd_map = map.clone();
    let sampler: Sampler = Arc::new(move |rng: &mut Rng| {
        let z: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        fwd_map.forward(&z).expect("dimension fixed")
    });

    let transformed = Benchmark {
        name: format!("{}-transformed{seed}", benchmark.name),
        manifest: format!("{} transform-seed={seed}", benchmark.manifest),
        space: benchmark.space.clone(),
        oracle,
        // The FGM of the latent function; in observable coordinates the
        // structure is generally dense, which is the point of the pipeline.
        graph: benchmark.graph.clone(),
        cliques: benchmark.cliques.clone(),
        known_optimum: None,
        value_upper_bound: benchmark.value_upper_bound,
        sampler: Some(sampler),
    };
    Ok((transformed, map))
}

/// Regenerates a benchmark from its manifest line.
pub fn benchmark_from_manifest(manifest: &str) -> Result<Benchmark> {
    let mut kind = None;
    let mut d = None;
    let mut seed = None;
    let mut pattern = None;
    let mut cliques_text = None;
    let mut transform_seed = None;
    for token in manifest.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad manifest token {token:?}")))?;
        match k {
            "kind" => kind = Some(v.to_string()),
            "d" => d = Some(v.parse::<usize>().map_err(|_| Error::Parse("bad d".to_string()))?),
            "seed" => {
                seed = Some(v.parse::<u64>().map_err(|_| Error::Parse("bad seed".to_string()))?)
            }
            "pattern" => pattern = Some(v.to_string()),
            "cliques" => cliques_text = Some(v.to_string()),
            "transform-seed" => {
                transform_seed =
                    Some(v.parse::<u64>().map_err(|_| Error::Parse("bad seed".to_string()))?)
            }
            _ => return Err(Error::Parse(format!("unknown manifest key {k:?}"))),
        }
    }
    let kind = kind.ok_or_else(|| Error::Parse("manifest missing kind".to_string()))?;
    let d = d.ok_or_else(|| Error::Parse("manifest missing d".to_string()))?;
    let base = match kind.as_str() {
        "quadratic-cycle" => gen_quadratic_cycle(d)?,
        "rbf" => {
            let seed = seed.ok_or_else(|| Error::Parse("rbf manifest missing seed".to_string()))?;
            let pattern = match pattern.as_deref() {
                Some("triangle-chain") => CliquePattern::TriangleChain,
                Some("custom") => {
                    let text = cliques_text
                        .ok_or_else(|| Error::Parse("custom pattern missing cliques".to_string()))?;
                    let cliques: Vec<Vec<usize>> = text
                        .split(';')
                        .map(|c| {
                            c.split(',')
                                .map(|t| {
                                    t.parse()
                                        .map_err(|_| Error::Parse("bad clique index".to_string()))
                                })
                                .collect()
                        })
                        .collect::<Result<_>>()?;
                    CliquePattern::Custom(cliques)
                }
                other => return Err(Error::Parse(format!("unknown pattern {other:?}"))),
            };
            gen_rbf_mixture(d, &pattern, seed)?
        }
        other => return Err(Error::Parse(format!("unknown benchmark kind {other:?}"))),
    };
    match transform_seed {
        None => Ok(base),
        Some(ts) => Ok(transform_observable(&base, ts)?.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_cycle_values() {
        let b = gen_quadratic_cycle(4).unwrap();
        assert_eq!(b.eval(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(b.eval(&[0.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        let b5 = gen_quadratic_cycle(5).unwrap();
        // (1,1,0,1,1): terms 1·1 + 1·0 + 0·1 + 1·1 + 1·1 = 3.
        assert_eq!(b5.eval(&[1.0, 1.0, 0.0, 1.0, 1.0]).unwrap(), 3.0);
        // Oracle agrees with the recorded optimum.
        let (x_opt, v_opt) = b5.known_optimum().unwrap();
        assert_eq!(b5.eval(x_opt).unwrap(), v_opt);
    }

    #[test]
    fn quadratic_cycle_cliques_are_edges() {
        let b = gen_quadratic_cycle(4).unwrap();
        assert_eq!(
            b.true_cliques().cliques(),
            &[vec![0, 1], vec![0, 3], vec![1, 2], vec![2, 3]]
        );
        assert!(gen_quadratic_cycle(2).is_err());
    }

    #[test]
    fn rbf_single_clique_peak_and_decay() {
        let b = gen_rbf_mixture(
            1,
            &CliquePattern::Custom(vec![vec![0]]),
            0,
        )
        .unwrap();
        // Probe the oracle shape through its recorded parameters: at the
        // center the value is w (= upper bound here); far away it vanishes.
        let w = b.value_upper_bound().unwrap();
        let far = b.eval(&[1e3]).unwrap();
        assert!(far.abs() < 1e-40);
        // Maximum over a grid approaches w.
        let best = (-400..400)
            .map(|k| b.eval(&[k as f64 * 0.01]).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(best <= w + 1e-12);
        assert!(best >= 0.99 * w, "grid best {best} vs weight {w}");
    }

    #[test]
    fn rbf_oracle_matches_hand_assembled_sum() {
        let b = gen_rbf_mixture(7, &CliquePattern::TriangleChain, 42).unwrap();
        // Reconstruct the parameters by replaying the generator's stream.
        let mut rng = Rng::new(42).derive(0x7bf);
        let mut weights = Vec::new();
        let mut centers: Vec<Vec<f64>> = Vec::new();
        for c in b.true_cliques().cliques() {
            weights.push(rng.normal().abs() + 0.1);
            centers.push((0..c.len()).map(|_| rng.normal()).collect());
        }
        let mut probe = Rng::new(7);
        for _ in 0..20 {
            let x: Vec<f64> = (0..7).map(|_| probe.normal()).collect();
            let manual: f64 = b
                .true_cliques()
                .cliques()
                .iter()
                .zip(&weights)
                .zip(&centers)
                .map(|((c, w), mu)| {
                    let d2: f64 = c
                        .iter()
                        .zip(mu)
                        .map(|(&k, m)| (x[k] - m) * (x[k] - m))
                        .sum();
                    w * (-d2).exp()
                })
                .sum();
            assert!((b.eval(&x).unwrap() - manual).abs() <= 1e-12);
        }
    }

    #[test]
    fn rbf_same_seed_is_bit_identical() {
        let a = gen_rbf_mixture(5, &CliquePattern::TriangleChain, 9).unwrap();
        let b = gen_rbf_mixture(5, &CliquePattern::TriangleChain, 9).unwrap();
        let mut rng = Rng::new(1);
        for _ in 0..10 {
            let x: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
            assert_eq!(
                a.eval(&x).unwrap().to_bits(),
                b.eval(&x).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn triangle_chain_requires_odd_d() {
        assert!(gen_rbf_mixture(6, &CliquePattern::TriangleChain, 0).is_err());
        assert!(gen_rbf_mixture(
            3,
            &CliquePattern::Custom(vec![vec![0, 1]]), // vertex 2 uncovered
            0
        )
        .is_err());
    }

    #[test]
    fn softplus_identity_map_at_zero() {
        let map = InvertibleMap::new(1.0, DenseMatrix::identity(3), vec![0.0; 3]).unwrap();
        let obs = map.forward(&[0.0; 3]).unwrap();
        for v in obs {
            assert!((v - std::f64::consts::LN_2).abs() <= 1e-12);
        }
    }

    #[test]
    fn map_round_trip_and_validity() {
        let mut rng = Rng::new(11);
        let map = InvertibleMap::random(5, &mut rng).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
            let obs = map.forward(&x).unwrap();
            assert!(map.is_valid(&obs));
            let back = map.inverse(&obs).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
        // A coordinate at the image boundary is invalid.
        let x: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let mut obs = map.forward(&x).unwrap();
        // is_valid uses (obs − b)/a > 0: forcing obs below b breaks it.
        obs[2] = -1e9;
        assert!(!map.is_valid(&obs));
    }

    #[test]
    fn transformed_oracle_equals_base_through_the_map() {
        let base = gen_rbf_mixture(5, &CliquePattern::TriangleChain, 3).unwrap();
        let (obs_bench, map) = transform_observable(&base, 17).unwrap();
        let mut rng = Rng::new(2);
        for _ in 0..100 {
            let z: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
            let obs = map.forward(&z).unwrap();
            let via = obs_bench.eval(&obs).unwrap();
            let direct = base.eval(&z).unwrap();
            assert!((via - direct).abs() <= 1e-8 * (1.0 + direct.abs()));
        }
        // Off-manifold designs evaluate to NaN.
        let bad = vec![-1e9; 5];
        assert!(obs_bench.eval(&bad).unwrap().is_nan());
        // Discrete benchmarks cannot be transformed.
        let disc = gen_quadratic_cycle(4).unwrap();
        assert!(transform_observable(&disc, 0).is_err());
    }

    #[test]
    fn manifests_regenerate_bit_identically() {
        let cases = [
            gen_quadratic_cycle(6).unwrap(),
            gen_rbf_mixture(7, &CliquePattern::TriangleChain, 13).unwrap(),
            gen_rbf_mixture(4, &overlapping_triangles_4d(), 5).unwrap(),
            transform_observable(
                &gen_rbf_mixture(5, &CliquePattern::TriangleChain, 1).unwrap(),
                8,
            )
            .unwrap()
            .0,
        ];
        let mut rng = Rng::new(3);
        for b in cases {
            let again = benchmark_from_manifest(b.manifest()).unwrap();
            assert_eq!(b.graph(), again.graph());
            for _ in 0..20 {
                let x: Vec<f64> = (0..b.dim()).map(|_| rng.normal() + 2.0).collect();
                let (u, v) = (b.eval(&x).unwrap(), again.eval(&x).unwrap());
                assert!(
                    u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan()),
                    "{} mismatch: {u} vs {v}",
                    b.manifest()
                );
            }
        }
    }

    #[test]
    fn sampled_datasets_are_reproducible() {
        let b = gen_quadratic_cycle(5).unwrap();
        let a = b.sample_dataset(50, &mut Rng::new(4)).unwrap();
        let c = b.sample_dataset(50, &mut Rng::new(4)).unwrap();
        assert_eq!(a.x.data(), c.x.data());
        assert_eq!(a.y, c.y);
    }
}
