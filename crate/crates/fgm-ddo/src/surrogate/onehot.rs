//! Exact one-hot clique regression for discrete spaces.
//!
//! Each clique C contributes a one-hot feature block over its joint
//! configuration space 𝒳_C (size Π_{k∈C}|𝒳_k|); stacking the blocks gives
//! the feature map φ̃, and ridge regression on centered targets yields the
//! coefficient vector θ. Per-clique one-hots sum to one, so the stacked
//! design is always rank-deficient and the ridge weight must be positive.

use std::collections::BTreeMap;

use crate::data::{Dataset, Space};
use crate::error::{Error, Result};
use crate::fgm::CliqueSet;
use crate::numkit::DenseMatrix;
use crate::surrogate::CliqueComponents;

/// Fitted one-hot clique model: prediction = y_offset + Σ_C θ[block_C(x_C)].
#[derive(Debug, Clone)]
pub struct OneHotCliqueModel {
    cliques: CliqueSet,
    domains: Vec<usize>,
    theta: Vec<f64>,
    offsets: Vec<usize>,
    lambda: f64,
    y_offset: f64,
}

impl OneHotCliqueModel {
    pub fn cliques(&self) -> &CliqueSet {
        &self.cliques
    }

    pub fn domains(&self) -> &[usize] {
        &self.domains
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn y_offset(&self) -> f64 {
        self.y_offset
    }

    /// Index of clique `c_idx`'s configuration inside its feature block.
    fn config_index(&self, c_idx: usize, x: &[usize]) -> Result<usize> {
        let clique = &self.cliques.cliques()[c_idx];
        let mut idx = 0;
        for &v in clique {
            let cat = x[v];
            if cat >= self.domains[v] {
                return Err(Error::arg(format!(
                    "category {cat} out of domain 0..{} at variable {v}",
                    self.domains[v]
                )));
            }
            idx = idx * self.domains[v] + cat;
        }
        Ok(idx)
    }

    /// Feature indices activated by the design `x` (one per clique).
    fn active_features(&self, x: &[usize]) -> Result<Vec<usize>> {
        if x.len() != self.domains.len() {
            return Err(Error::dim(format!(
                "design has {} variables, model expects {}",
                x.len(),
                self.domains.len()
            )));
        }
        (0..self.cliques.len())
            .map(|c| Ok(self.offsets[c] + self.config_index(c, x)?))
            .collect()
    }

    /// Predicted value for a discrete design given as category indices.
    pub fn predict(&self, x: &[usize]) -> Result<f64> {
        let feats = self.active_features(x)?;
        Ok(self.y_offset + feats.iter().map(|&f| self.theta[f]).sum::<f64>())
    }

    /// Training mean squared error on a dataset.
    pub fn mse(&self, dataset: &Dataset) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..dataset.len() {
            let cats = dataset.categories(i)?;
            let r = self.predict(&cats)? - dataset.y[i];
            acc += r * r;
        }
        Ok(acc / dataset.len() as f64)
    }

    /// Serializes into the shared model container (bit-exact round trip).
    pub fn to_container(&self) -> super::ModelContainer {
        let mut meta = BTreeMap::new();
        meta.insert(
            "domains".to_string(),
            self.domains
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        meta.insert("cliques".to_string(), encode_cliques(&self.cliques));
        super::ModelContainer {
            kind: "onehot".to_string(),
            meta,
            arrays: vec![
                ("theta".to_string(), self.theta.clone()),
                ("lambda".to_string(), vec![self.lambda]),
                ("y_offset".to_string(), vec![self.y_offset]),
            ],
        }
    }

    pub fn from_container(c: &super::ModelContainer) -> Result<Self> {
        if c.kind != "onehot" {
            return Err(Error::Parse(format!("expected onehot container, got {}", c.kind)));
        }
        let domains: Vec<usize> = c
            .meta_required("domains")?
            .split(',')
            .map(|t| t.parse().map_err(|_| Error::Parse("bad domain".to_string())))
            .collect::<Result<_>>()?;
        let cliques = decode_cliques(c.meta_required("cliques")?, domains.len())?;
        let theta = c.array_required("theta")?.to_vec();
        let lambda = c.array_required("lambda")?[0];
        let y_offset = c.array_required("y_offset")?[0];
        let offsets = block_offsets(&cliques, &domains);
        let expected: usize = offsets.last().copied().unwrap_or(0)
            + block_size(cliques.cliques().last().unwrap(), &domains);
        if theta.len() != expected {
            return Err(Error::Parse("theta length mismatch".to_string()));
        }
        Ok(OneHotCliqueModel {
            cliques,
            domains,
            theta,
            offsets,
            lambda,
            y_offset,
        })
    }
}

pub(crate) fn encode_cliques(cs: &CliqueSet) -> String {
    cs.cliques()
        .iter()
        .map(|c| {
            c.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub(crate) fn decode_cliques(text: &str, d: usize) -> Result<CliqueSet> {
    let cliques: Vec<Vec<usize>> = text
        .split(';')
        .map(|c| {
            c.split(',')
                .map(|t| t.parse().map_err(|_| Error::Parse("bad clique index".to_string())))
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<_>>()?;
    CliqueSet::from_cliques(d, &cliques)
}

fn block_size(clique: &[usize], domains: &[usize]) -> usize {
    clique.iter().map(|&v| domains[v]).product()
}

fn block_offsets(cliques: &CliqueSet, domains: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(cliques.len());
    let mut at = 0;
    for c in cliques.cliques() {
        offsets.push(at);
        at += block_size(c, domains);
    }
    offsets
}

impl CliqueComponents for OneHotCliqueModel {
    fn cliques(&self) -> &CliqueSet {
        &self.cliques
    }

    fn component_value(&self, c_idx: usize, x: &[f64]) -> Result<f64> {
        let cats: Vec<usize> = x.iter().map(|&v| v as usize).collect();
        let idx = self.config_index(c_idx, &cats)?;
        Ok(self.theta[self.offsets[c_idx] + idx])
    }
}

/// Fits the one-hot clique model by ridge regression on centered targets.
///
/// The Gram matrix is accumulated from per-row active features (each row
/// activates exactly one feature per clique), and rows are visited in a
/// canonical order — sorted by (configuration, y bits) — so permuting the
/// training rows yields bit-identical coefficients.
pub fn fit_onehot(
    dataset: &Dataset,
    cliques: &CliqueSet,
    lambda: f64,
) -> Result<OneHotCliqueModel> {
    let Space::Discrete { domains } = &dataset.space else {
        return Err(Error::arg("fit_onehot requires a discrete dataset"));
    };
    if dataset.is_empty() {
        return Err(Error::arg("empty dataset"));
    }
    if cliques.dim() != dataset.dim() {
        return Err(Error::arg(format!(
            "clique set over {} variables but dataset has {}",
            cliques.dim(),
            dataset.dim()
        )));
    }
    if let Some(k) = domains.iter().find(|&&k| k < 2) {
        return Err(Error::arg(format!("every domain needs >= 2 categories, found {k}")));
    }
    if lambda <= 0.0 {
        return Err(Error::arg(
            "stacked one-hot designs are rank-deficient; lambda must be positive",
        ));
    }

    let model_skeleton = OneHotCliqueModel {
        cliques: cliques.clone(),
        domains: domains.clone(),
        theta: Vec::new(),
        offsets: block_offsets(cliques, domains),
        lambda,
        y_offset: 0.0,
    };
    let p = model_skeleton.offsets.last().unwrap()
        + block_size(cliques.cliques().last().unwrap(), domains);

    // Canonical row order: permutation-invariant fits.
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let keys: Vec<(Vec<usize>, u64)> = (0..dataset.len())
        .map(|i| Ok((dataset.categories(i)?, dataset.y[i].to_bits())))
        .collect::<Result<_>>()?;
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));

    let y_offset = order.iter().map(|&i| dataset.y[i]).sum::<f64>() / dataset.len() as f64;

    let mut gram = DenseMatrix::zeros(p, p);
    let mut xty = vec![0.0; p];
    for &i in &order {
        let feats = model_skeleton.active_features(&keys[i].0)?;
        let yc = dataset.y[i] - y_offset;
        for &a in &feats {
            xty[a] += yc;
            for &b in &feats {
                gram.set(a, b, gram.get(a, b) + 1.0);
            }
        }
    }
    for i in 0..p {
        gram.set(i, i, gram.get(i, i) + lambda);
    }
    let l = gram.cholesky()?;
    let z = l.solve_lower(&xty)?;
    let theta = l.solve_lower_transpose(&z)?;
    if !theta.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("one-hot coefficients".to_string()));
    }

    Ok(OneHotCliqueModel {
        theta,
        y_offset,
        ..model_skeleton
    })
}
