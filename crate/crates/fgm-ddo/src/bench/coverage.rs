//! Coverage-ratio and clique-correlation diagnostics.
//!
//! The coverage lemma says the clique-marginal ratio max_C max_{x_C}
//! π(x_C)/p(x_C) never exceeds the full-space ratio max_x π(x)/p(x); the
//! gap between the two is what makes clique-decomposed optimization escape
//! the curse of dimensionality (2^d versus 2^{d_C} for point mass against
//! uniform). Everything here is exact tabular computation over small
//! discrete spaces.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fgm::CliqueSet;
use crate::numkit::{DenseMatrix, Rng};
use crate::surrogate::CliqueComponents;

/// Explicit probability table over a small discrete product space, indexed
/// in mixed radix with the last variable fastest.
#[derive(Debug, Clone)]
pub struct DiscreteTable {
    domains: Vec<usize>,
    probs: Vec<f64>,
}

pub(crate) const TABLE_LIMIT: usize = 1 << 16;

fn total_states(domains: &[usize]) -> Result<usize> {
    let mut total: usize = 1;
    for &k in domains {
        if k == 0 {
            return Err(Error::arg("zero-sized domain"));
        }
        total = total
            .checked_mul(k)
            .filter(|&t| t <= TABLE_LIMIT)
            .ok_or_else(|| {
                Error::arg(format!("space exceeds the {TABLE_LIMIT}-state tabular limit"))
            })?;
    }
    Ok(total)
}

impl DiscreteTable {
    pub fn from_probs(domains: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let total = total_states(&domains)?;
        if probs.len() != total {
            return Err(Error::dim(format!(
                "{total} states but {} probabilities",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::arg("probabilities must be finite and nonnegative"));
        }
        Ok(DiscreteTable { domains, probs })
    }

    pub fn uniform(domains: Vec<usize>) -> Result<Self> {
        let total = total_states(&domains)?;
        Ok(DiscreteTable {
            probs: vec![1.0 / total as f64; total],
            domains,
        })
    }

    pub fn point_mass(domains: Vec<usize>, x: &[usize]) -> Result<Self> {
        let total = total_states(&domains)?;
        let mut probs = vec![0.0; total];
        let idx = index_of(&domains, x)?;
        probs[idx] = 1.0;
        Ok(DiscreteTable { domains, probs })
    }

    /// Random strictly-positive table, normalized.
    pub fn random(domains: Vec<usize>, rng: &mut Rng) -> Result<Self> {
        let total = total_states(&domains)?;
        let mut probs: Vec<f64> = (0..total).map(|_| rng.uniform() + 1e-3).collect();
        let sum: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(DiscreteTable { domains, probs })
    }

    pub fn domains(&self) -> &[usize] {
        &self.domains
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, x: &[usize]) -> Result<f64> {
        Ok(self.probs[index_of(&self.domains, x)?])
    }

    /// Exact marginal over the given sorted variable subset.
    pub fn marginal(&self, clique: &[usize]) -> Result<DiscreteTable> {
        for &v in clique {
            if v >= self.domains.len() {
                return Err(Error::arg(format!("marginal variable {v} out of range")));
            }
        }
        let sub_domains: Vec<usize> = clique.iter().map(|&v| self.domains[v]).collect();
        let sub_total: usize = sub_domains.iter().product();
        let mut probs = vec![0.0; sub_total];
        let mut state = vec![0usize; self.domains.len()];
        for flat in 0..self.probs.len() {
            decode(&self.domains, flat, &mut state);
            let sub: Vec<usize> = clique.iter().map(|&v| state[v]).collect();
            probs[index_of(&sub_domains, &sub)?] += self.probs[flat];
        }
        Ok(DiscreteTable {
            domains: sub_domains,
            probs,
        })
    }

    /// max over states of self/other, with 0/0 treated as 0 and q/0 (q > 0)
    /// as +∞.
    fn max_ratio(&self, other: &DiscreteTable) -> f64 {
        let mut best = 0.0_f64;
        for (pi, p) in self.probs.iter().zip(&other.probs) {
            let r = if *pi == 0.0 {
                0.0
            } else if *p == 0.0 {
                f64::INFINITY
            } else {
                pi / p
            };
            best = best.max(r);
        }
        best
    }
}

fn index_of(domains: &[usize], x: &[usize]) -> Result<usize> {
    if x.len() != domains.len() {
        return Err(Error::dim("state length mismatch".to_string()));
    }
    let mut idx = 0;
    for (&cat, &k) in x.iter().zip(domains) {
        if cat >= k {
            return Err(Error::arg(format!("category {cat} out of domain 0..{k}")));
        }
        idx = idx * k + cat;
    }
    Ok(idx)
}

fn decode(domains: &[usize], mut flat: usize, out: &mut [usize]) {
    for i in (0..domains.len()).rev() {
        out[i] = flat % domains[i];
        flat /= domains[i];
    }
}

/// Full-space and per-clique coverage ratios of π against p.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    /// max_x π(x)/p(x); +∞ when p misses mass that π has.
    pub full_max: f64,
    /// max_{x_C} π(x_C)/p(x_C) per clique, in clique order.
    pub per_clique_max: Vec<f64>,
    /// The maximum of `per_clique_max`.
    pub clique_wise_max: f64,
}

/// Exact coverage ratios over a tabular space. The coverage inequality
/// (clique-wise ≤ full) is checked before returning; it cannot fail for
/// exact marginals, so a violation reports an internal error rather than a
/// silently wrong diagnostic.
pub fn coverage_ratios(
    pi: &DiscreteTable,
    p: &DiscreteTable,
    cliques: &CliqueSet,
) -> Result<CoverageReport> {
    if pi.domains != p.domains {
        return Err(Error::dim("π and p must share a space".to_string()));
    }
    if cliques.dim() != pi.domains.len() {
        return Err(Error::dim("clique set does not match the space".to_string()));
    }
    let full_max = pi.max_ratio(p);
    let mut per_clique_max = Vec::with_capacity(cliques.len());
    for clique in cliques.cliques() {
        let pi_c = pi.marginal(clique)?;
        let p_c = p.marginal(clique)?;
        per_clique_max.push(pi_c.max_ratio(&p_c));
    }
    let clique_wise_max = per_clique_max.iter().cloned().fold(0.0_f64, f64::max);
    if clique_wise_max > full_max {
        return Err(Error::InvalidArgument(format!(
            "coverage inequality violated numerically: clique-wise {clique_wise_max} > full {full_max}"
        )));
    }
    Ok(CoverageReport {
        full_max,
        per_clique_max,
        clique_wise_max,
    })
}

/// Pairwise empirical correlations between clique component values.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    /// |𝒞|×|𝒞|, symmetric, unit diagonal, entries in [−1, 1].
    pub matrix: DenseMatrix,
    /// Cliques whose component had zero sample variance (their correlations
    /// are reported as 0).
    pub degenerate: Vec<bool>,
}

impl CorrelationReport {
    /// The empirical σ of the correlation assumption: the largest
    /// off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        let k = self.matrix.rows();
        let mut best = 0.0_f64;
        for i in 0..k {
            for j in (i + 1)..k {
                best = best.max(self.matrix.get(i, j).abs());
            }
        }
        best
    }
}

/// Empirical Corr[f̂_{C₁}(x_{C₁}), f̂_{C₂}(x_{C₂})] over the dataset rows,
/// for every clique pair of a decomposed surrogate.
pub fn clique_correlation<M: CliqueComponents>(
    model: &M,
    data: &Dataset,
) -> Result<CorrelationReport> {
    let n = data.len();
    let k = model.cliques().len();
    if n < 2 {
        return Err(Error::arg("correlation needs at least 2 samples"));
    }
    if k < 2 {
        return Err(Error::arg("correlation needs at least 2 cliques"));
    }
    let mut values = vec![vec![0.0; n]; k];
    for i in 0..n {
        let x = data.row(i);
        for (c, column) in values.iter_mut().enumerate() {
            column[i] = model.component_value(c, x)?;
        }
    }
    let means: Vec<f64> = values.iter().map(|v| v.iter().sum::<f64>() / n as f64).collect();
    let vars: Vec<f64> = values
        .iter()
        .zip(&means)
        .map(|(v, m)| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64)
        .collect();
    let degenerate: Vec<bool> = vars.iter().map(|&v| v <= 0.0).collect();
    let mut matrix = DenseMatrix::identity(k);
    for i in 0..k {
        for j in (i + 1)..k {
            let corr = if degenerate[i] || degenerate[j] {
                0.0
            } else {
                let cov: f64 = values[i]
                    .iter()
                    .zip(&values[j])
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / n as f64;
                (cov / (vars[i] * vars[j]).sqrt()).clamp(-1.0, 1.0)
            };
            matrix.set(i, j, corr);
            matrix.set(j, i, corr);
        }
    }
    Ok(CorrelationReport { matrix, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Space;
    use crate::fgm::CliqueSet;

    #[test]
    fn identical_distributions_have_unit_ratios() {
        let mut rng = Rng::new(40);
        let p = DiscreteTable::random(vec![2, 2, 2], &mut rng).unwrap();
        let cliques = CliqueSet::from_cliques(3, &[vec![0, 1], vec![1, 2]]).unwrap();
        let report = coverage_ratios(&p, &p, &cliques).unwrap();
        assert_eq!(report.full_max, 1.0);
        for r in &report.per_clique_max {
            assert_eq!(*r, 1.0);
        }
    }

    #[test]
    fn point_mass_vs_uniform_reproduces_exponential_gap() {
        // Full ratio 2^d exactly; clique ratios 2^{d_C} exactly.
        for d in [3usize, 6, 10] {
            let domains = vec![2; d];
            let uniform = DiscreteTable::uniform(domains.clone()).unwrap();
            let ones = vec![1usize; d];
            let point = DiscreteTable::point_mass(domains, &ones).unwrap();
            let cliques: Vec<Vec<usize>> =
                (0..d).map(|i| vec![i, (i + 1) % d]).collect();
            let cliques = CliqueSet::from_cliques(d, &cliques).unwrap();
            let report = coverage_ratios(&point, &uniform, &cliques).unwrap();
            assert_eq!(report.full_max, (1u64 << d) as f64);
            for r in &report.per_clique_max {
                assert_eq!(*r, 4.0);
            }
            assert_eq!(report.clique_wise_max, 4.0);
        }
    }

    #[test]
    fn marginals_match_brute_force_enumeration() {
        let mut rng = Rng::new(41);
        let domains = vec![2usize, 2, 2];
        let pi = DiscreteTable::random(domains.clone(), &mut rng).unwrap();
        let p = DiscreteTable::random(domains.clone(), &mut rng).unwrap();
        let cliques = CliqueSet::from_cliques(3, &[vec![0, 1], vec![1, 2]]).unwrap();
        let report = coverage_ratios(&pi, &p, &cliques).unwrap();

        // Brute force over all 8 states.
        let mut full = 0.0_f64;
        for a in 0..2usize {
            for b in 0..2usize {
                for c in 0..2usize {
                    let s = [a, b, c];
                    full = full.max(pi.prob(&s).unwrap() / p.prob(&s).unwrap());
                }
            }
        }
        assert_eq!(report.full_max, full);

        let mut c01 = 0.0_f64;
        for a in 0..2usize {
            for b in 0..2usize {
                let mut pi_m = 0.0;
                let mut p_m = 0.0;
                for c in 0..2usize {
                    pi_m += pi.prob(&[a, b, c]).unwrap();
                    p_m += p.prob(&[a, b, c]).unwrap();
                }
                c01 = c01.max(pi_m / p_m);
            }
        }
        assert!((report.per_clique_max[0] - c01).abs() <= 1e-15);
    }

    #[test]
    fn zero_p_entry_gives_infinite_full_ratio_finite_marginals() {
        // π puts mass where p has none: the full ratio explodes while the
        // clique marginals can stay finite.
        let domains = vec![2usize, 2];
        let pi = DiscreteTable::uniform(domains.clone()).unwrap();
        let p = DiscreteTable::from_probs(
            domains,
            vec![0.0, 0.5, 0.25, 0.25],
        )
        .unwrap();
        let cliques = CliqueSet::from_cliques(2, &[vec![0], vec![1]]).unwrap();
        let report = coverage_ratios(&pi, &p, &cliques).unwrap();
        assert!(report.full_max.is_infinite());
        assert!(report.clique_wise_max.is_finite());
    }

    struct TableModel {
        cliques: CliqueSet,
        funcs: Vec<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
    }

    impl CliqueComponents for TableModel {
        fn cliques(&self) -> &CliqueSet {
            &self.cliques
        }
        fn component_value(&self, c: usize, x: &[f64]) -> crate::error::Result<f64> {
            Ok((self.funcs[c])(x))
        }
    }

    fn dataset_normal(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.normal()).collect())
            .collect();
        Dataset::new(
            crate::numkit::DenseMatrix::from_rows(&rows).unwrap(),
            vec![0.0; n],
            Space::Continuous { dim: d },
        )
        .unwrap()
    }

    #[test]
    fn disjoint_linear_components_are_uncorrelated() {
        let n = 20_000;
        let model = TableModel {
            cliques: CliqueSet::from_cliques(2, &[vec![0], vec![1]]).unwrap(),
            funcs: vec![Box::new(|x| 2.0 * x[0]), Box::new(|x| -x[1])],
        };
        let data = dataset_normal(n, 2, 42);
        let report = clique_correlation(&model, &data).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        assert!(
            report.max_off_diagonal() <= bound,
            "|rho| = {} vs {bound}",
            report.max_off_diagonal()
        );
    }

    #[test]
    fn identical_components_have_unit_correlation() {
        let model = TableModel {
            cliques: CliqueSet::from_cliques(2, &[vec![0], vec![0, 1]]).unwrap(),
            funcs: vec![Box::new(|x| x[0]), Box::new(|x| x[0])],
        };
        let data = dataset_normal(500, 2, 43);
        let report = clique_correlation(&model, &data).unwrap();
        assert!((report.matrix.get(0, 1) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn constant_component_flagged_and_zeroed() {
        let model = TableModel {
            cliques: CliqueSet::from_cliques(2, &[vec![0], vec![1]]).unwrap(),
            funcs: vec![Box::new(|_| 5.0), Box::new(|x| x[1])],
        };
        let data = dataset_normal(100, 2, 44);
        let report = clique_correlation(&model, &data).unwrap();
        assert!(report.degenerate[0]);
        assert!(!report.degenerate[1]);
        assert_eq!(report.matrix.get(0, 1), 0.0);
    }

    #[test]
    fn too_few_samples_or_cliques_error() {
        let model = TableModel {
            cliques: CliqueSet::from_cliques(2, &[vec![0], vec![1]]).unwrap(),
            funcs: vec![Box::new(|x| x[0]), Box::new(|x| x[1])],
        };
        assert!(clique_correlation(&model, &dataset_normal(1, 2, 45)).is_err());
        let single = TableModel {
            cliques: CliqueSet::from_cliques(1, &[vec![0]]).unwrap(),
            funcs: vec![Box::new(|x| x[0])],
        };
        assert!(clique_correlation(&single, &dataset_normal(10, 1, 46)).is_err());
    }
}
