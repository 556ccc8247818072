//! Data-driven FGM discovery for (approximately) standard-Gaussian inputs.
//!
//! The second-order Stein identity turns the mixed partials that define
//! functional independence into plain moments: for x ~ N(0, I) and i ≠ j,
//! E[xᵢxⱼ f(x)] equals the (i, j) entry of the Hessian of the Gaussian-
//! smoothed function at the origin, and vanishes whenever (i, j) is not an
//! edge of f's FGM. So the sample moment Ĥᵢⱼ = (1/M) Σ xᵢxⱼy, together with
//! the sample standard deviation of the per-sample products, supports an
//! ordinary Gaussian hypothesis test for each edge:
//!
//! |Ĥᵢⱼ| ≥ c_{α/2} · σ̂ᵢⱼ / √M  ⇒  (i, j) ∈ E.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fgm::FgmGraph;
use crate::numkit::DenseMatrix;
use crate::par;

/// Symmetric pseudo-Hessian estimate with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct PseudoHessian {
    d: usize,
    h: DenseMatrix,
    sigma: DenseMatrix,
    m: usize,
}

impl PseudoHessian {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry Ĥᵢⱼ (symmetric).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.h.get(i, j)
    }

    /// Sample standard deviation of the per-sample products for (i, j).
    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma.get(i, j)
    }

    pub fn sample_count(&self) -> usize {
        self.m
    }

    /// Standard error σ̂ᵢⱼ/√M.
    pub fn standard_error(&self, i: usize, j: usize) -> f64 {
        self.sigma.get(i, j) / (self.m as f64).sqrt()
    }

    /// Replaces every σ̂ᵢⱼ with 1, emulating the unnormalized |Ĥ| < c/√M
    /// variant of the edge test.
    pub fn with_unit_sigma(mut self) -> PseudoHessian {
        for i in 0..self.d {
            for j in 0..self.d {
                self.sigma.set(i, j, 1.0);
            }
        }
        self
    }

    /// CSV serialization: header `i,j,H,sigma,M`, one row per unordered pair
    /// (diagonal included so the matrix round-trips).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,H,sigma,M\n");
        for i in 0..self.d {
            for j in i..self.d {
                let _ = writeln!(
                    out,
                    "{i},{j},{},{},{}",
                    self.h.get(i, j),
                    self.sigma.get(i, j),
                    self.m
                );
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty csv".to_string()))?;
        if header != "i,j,H,sigma,M" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let mut entries = Vec::new();
        let mut d = 0;
        let mut m = 0;
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse(format!(
                    "line {}: wrong field count",
                    lineno + 2
                )));
            }
            let parse_idx = |t: &str| -> Result<usize> {
                t.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad index {t:?}", lineno + 2)))
            };
            let parse_f = |t: &str| -> Result<f64> {
                t.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {t:?}", lineno + 2)))
            };
            let (i, j) = (parse_idx(fields[0])?, parse_idx(fields[1])?);
            d = d.max(i + 1).max(j + 1);
            m = parse_idx(fields[4])?;
            entries.push((i, j, parse_f(fields[2])?, parse_f(fields[3])?));
        }
        let mut h = DenseMatrix::zeros(d, d);
        let mut sigma = DenseMatrix::zeros(d, d);
        for (i, j, hv, sv) in entries {
            h.set(i, j, hv);
            h.set(j, i, hv);
            sigma.set(i, j, sv);
            sigma.set(j, i, sv);
        }
        Ok(PseudoHessian { d, h, sigma, m })
    }
}

/// Estimates the pseudo-Hessian Ĥᵢⱼ = (1/M) Σₖ xᵢ⁽ᵏ⁾xⱼ⁽ᵏ⁾ỹ⁽ᵏ⁾ from data,
/// where ỹ = y − mean(y).
///
/// Centering y removes a rank-one bias term mean(y)·E[xᵢxⱼ] that would
/// otherwise be estimated with noise; it does not change the expectation of
/// any off-diagonal entry. σ̂ᵢⱼ is the unbiased (M−1) standard deviation of
/// the same per-sample products, so Ĥ and σ̂ are symmetric by construction.
pub fn estimate_pseudo_hessian(x: &DenseMatrix, y: &[f64]) -> Result<PseudoHessian> {
    let n = x.rows();
    let d = x.cols();
    if n != y.len() {
        return Err(Error::dim(format!(
            "{} design rows but {} values",
            n,
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::arg(
            "pseudo-Hessian needs at least 2 samples (standard deviation undefined)",
        ));
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    // One independent cell per unordered pair; each cell scans the samples
    // sequentially, so results do not depend on thread count.
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (i..d).map(move |j| (i, j)))
        .collect();
    let cells: Vec<(f64, f64)> = par::map_collect(&pairs, |&(i, j)| {
        let mut sum = 0.0;
        for k in 0..n {
            let row = x.row(k);
            sum += row[i] * row[j] * yc[k];
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for k in 0..n {
            let row = x.row(k);
            let dev = row[i] * row[j] * yc[k] - mean;
            ss += dev * dev;
        }
        (mean, (ss / (n - 1) as f64).sqrt())
    });

    let mut h = DenseMatrix::zeros(d, d);
    let mut sigma = DenseMatrix::zeros(d, d);
    for (&(i, j), &(mean, sd)) in pairs.iter().zip(&cells) {
        h.set(i, j, mean);
        h.set(j, i, mean);
        sigma.set(i, j, sd);
        sigma.set(j, i, sd);
    }
    h.check_finite()?;
    sigma.check_finite()?;
    Ok(PseudoHessian { d, h, sigma, m: n })
}

/// Upper-α/2 quantile of the standard normal, i.e. c with Φ(c) = 1 − α/2.
pub fn normal_upper_quantile(alpha_half: f64) -> Result<f64> {
    standard_normal_quantile(1.0 - alpha_half)
}

/// Inverse standard normal CDF via Acklam's rational approximation
/// (relative error below 1.2e-9 across (0, 1)).
pub fn standard_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::arg(format!("quantile needs p in (0,1), got {p}")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    Ok(x)
}

/// Gaussian hypothesis test for edges: (i, j) is an edge iff
/// |Ĥᵢⱼ| ≥ c_{α/2}·σ̂ᵢⱼ/√M. Entries with σ̂ = 0 yield an edge only if Ĥ ≠ 0.
/// Diagonal entries are never tested (FGMs have no self-loops).
pub fn edge_test(ph: &PseudoHessian, alpha: f64) -> Result<FgmGraph> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if ph.m < 2 {
        return Err(Error::arg("edge test needs at least 2 samples"));
    }
    let c = normal_upper_quantile(alpha / 2.0)?;
    let sqrt_m = (ph.m as f64).sqrt();
    let mut g = FgmGraph::new(ph.d);
    for i in 0..ph.d {
        for j in (i + 1)..ph.d {
            let h = ph.h.get(i, j).abs();
            let threshold = c * ph.sigma.get(i, j) / sqrt_m;
            let edge = if ph.sigma.get(i, j) == 0.0 {
                h != 0.0
            } else {
                h >= threshold
            };
            if edge {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(g)
}

/// Exponential-moving-average tracker for pseudo-Hessian statistics, fed by
/// minibatches during e.g. VAE training.
///
/// Maintains running means of the products and squared products, so σ̂ stays
/// derivable. Callers should feed products of pre-centered y (the offline
/// pipeline centers once over the full dataset); per-batch centering would
/// degenerate for tiny batches.
#[derive(Debug, Clone)]
pub struct EmaEstimator {
    d: usize,
    momentum: f64,
    mean: DenseMatrix,
    mean_sq: DenseMatrix,
    updates: usize,
    raw_samples: usize,
}

impl EmaEstimator {
    pub fn new(d: usize, momentum: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::arg(format!(
                "momentum must lie in [0,1), got {momentum}"
            )));
        }
        Ok(EmaEstimator {
            d,
            momentum,
            mean: DenseMatrix::zeros(d, d),
            mean_sq: DenseMatrix::zeros(d, d),
            updates: 0,
            raw_samples: 0,
        })
    }

    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// Cumulative raw sample count across all batches.
    pub fn raw_sample_count(&self) -> usize {
        self.raw_samples
    }

    /// Running mean of the (i, j) products.
    pub fn mean_entry(&self, i: usize, j: usize) -> f64 {
        self.mean.get(i, j)
    }

    /// Running mean of the squared (i, j) products.
    pub fn mean_sq_entry(&self, i: usize, j: usize) -> f64 {
        self.mean_sq.get(i, j)
    }

    /// Folds one minibatch into the running statistics. The first update
    /// initializes the state to the batch statistics outright.
    pub fn update(&mut self, x: &DenseMatrix, y: &[f64]) -> Result<()> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::arg("empty minibatch"));
        }
        if x.cols() != self.d || y.len() != n {
            return Err(Error::dim("minibatch shape".to_string()));
        }
        let momentum = if self.updates == 0 { 0.0 } else { self.momentum };
        let pairs: Vec<(usize, usize)> = (0..self.d)
            .flat_map(|i| (i..self.d).map(move |j| (i, j)))
            .collect();
        let cells: Vec<(f64, f64)> = par::map_collect(&pairs, |&(i, j)| {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for k in 0..n {
                let row = x.row(k);
                let p = row[i] * row[j] * y[k];
                sum += p;
                sum_sq += p * p;
            }
            (sum / n as f64, sum_sq / n as f64)
        });
        for (&(i, j), &(bm, bs)) in pairs.iter().zip(&cells) {
            let m = momentum * self.mean.get(i, j) + (1.0 - momentum) * bm;
            let s = momentum * self.mean_sq.get(i, j) + (1.0 - momentum) * bs;
            self.mean.set(i, j, m);
            self.mean.set(j, i, m);
            self.mean_sq.set(i, j, s);
            self.mean_sq.set(j, i, s);
        }
        self.updates += 1;
        self.raw_samples += n;
        Ok(())
    }

    /// Snapshot as a [`PseudoHessian`]. σ̂ is derived from the running first
    /// and second moments with the (N−1) correction; the sample count is the
    /// cumulative raw count, a deliberately conservative choice since the EMA
    /// reduces variance by an unquantified amount.
    pub fn snapshot(&self) -> Result<PseudoHessian> {
        if self.raw_samples < 2 {
            return Err(Error::arg("EMA snapshot needs at least 2 raw samples"));
        }
        let m = self.raw_samples;
        let correction = m as f64 / (m - 1) as f64;
        let mut sigma = DenseMatrix::zeros(self.d, self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                let mean = self.mean.get(i, j);
                let var = (self.mean_sq.get(i, j) - mean * mean).max(0.0) * correction;
                sigma.set(i, j, var.sqrt());
            }
        }
        Ok(PseudoHessian {
            d: self.d,
            h: self.mean.clone(),
            sigma,
            m,
        })
    }
}

/// Affine transform that maps the fitting data to zero mean and identity
/// covariance: z = L⁻¹(x − mean), with L the Cholesky factor of the sample
/// covariance. The inverse transform is x = Lz + mean.
#[derive(Debug, Clone)]
pub struct WhitenTransform {
    mean: Vec<f64>,
    transform: DenseMatrix,
    inverse: DenseMatrix,
}

impl WhitenTransform {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn transform_matrix(&self) -> &DenseMatrix {
        &self.transform
    }

    pub fn inverse_matrix(&self) -> &DenseMatrix {
        &self.inverse
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        self.transform.matvec(&centered)
    }

    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.inverse.matvec(z)?;
        for (xi, mi) in x.iter_mut().zip(&self.mean) {
            *xi += mi;
        }
        Ok(x)
    }

    /// Applies the transform to every row of `x`.
    pub fn apply_matrix(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let rows: Vec<Vec<f64>> = (0..x.rows())
            .map(|i| self.apply(x.row(i)))
            .collect::<Result<_>>()?;
        DenseMatrix::from_rows(&rows)
    }
}

/// Fits a whitening transform to the rows of `x`.
pub fn whiten_fit(x: &DenseMatrix) -> Result<WhitenTransform> {
    let n = x.rows();
    let d = x.cols();
    if n <= d {
        return Err(Error::arg(format!(
            "whitening needs more samples than dimensions (n = {n}, d = {d})"
        )));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = DenseMatrix::zeros(d, d);
    for k in 0..n {
        let row = x.row(k);
        for i in 0..d {
            let a = row[i] - mean[i];
            for j in i..d {
                let v = cov.get(i, j) + a * (row[j] - mean[j]);
                cov.set(i, j, v);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / (n - 1) as f64;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    let l = cov.cholesky().map_err(|_| {
        Error::Singular(
            "sample covariance is not positive definite; inputs look rank-deficient \
             (e.g. a constant or duplicated column)"
                .to_string(),
        )
    })?;
    let transform = l.invert_lower()?;
    Ok(WhitenTransform {
        mean,
        transform,
        inverse: l,
    })
}
