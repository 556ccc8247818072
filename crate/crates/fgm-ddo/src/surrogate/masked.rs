//! Masked neural clique regression for continuous spaces.
//!
//! The default is one shared network over the full input: component C is the
//! network applied to x with every coordinate outside C zeroed, and the
//! prediction aggregates components as mean · |𝒞| (equal to the plain sum,
//! phrased through the mean for numerical stability). Zero-masking makes the
//! component exactly constant in the masked coordinates, so the decomposition
//! property holds by construction rather than approximately.
//!
//! Setting `shared = false` trains an independent network per clique on the
//! clique's coordinate slice instead.

use std::collections::BTreeMap;

use crate::data::{Dataset, Space};
use crate::error::{Error, Result};
use crate::fgm::CliqueSet;
use crate::numkit::{adam_step, AdamParams, AdamState, Mlp, MlpGradients, Rng};
use crate::par;
use crate::surrogate::{CliqueComponents, DifferentiableSurrogate};

/// Hyperparameters for the masked-MLP fitters.
#[derive(Debug, Clone)]
pub struct MlpFitConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Fraction of rows held out for evaluation; 0 disables the split.
    pub holdout_fraction: f64,
    /// One shared masked network (true) or independent per-clique networks.
    pub shared: bool,
}

impl Default for MlpFitConfig {
    fn default() -> Self {
        MlpFitConfig {
            hidden: vec![64, 64],
            lr: 1e-3,
            epochs: 200,
            batch: 128,
            seed: 0,
            holdout_fraction: 0.1,
            shared: true,
        }
    }
}

/// Loss bookkeeping from a fit.
#[derive(Debug, Clone)]
pub struct MlpFitReport {
    /// Mean minibatch MSE per epoch.
    pub epoch_train_mse: Vec<f64>,
    /// MSE on the held-out split, when one was requested.
    pub holdout_mse: Option<f64>,
}

/// Clique-decomposed neural surrogate.
#[derive(Debug, Clone)]
pub struct MaskedMlpModel {
    cliques: CliqueSet,
    nets: Vec<Mlp>,
    shared: bool,
    y_offset: f64,
}

impl MaskedMlpModel {
    pub fn from_parts(
        cliques: CliqueSet,
        nets: Vec<Mlp>,
        shared: bool,
        y_offset: f64,
    ) -> Result<Self> {
        let d = cliques.dim();
        if shared {
            if nets.len() != 1 || nets[0].input_dim() != d {
                return Err(Error::dim("shared model needs one network over d inputs".to_string()));
            }
        } else {
            if nets.len() != cliques.len() {
                return Err(Error::dim("one network per clique required".to_string()));
            }
            for (net, c) in nets.iter().zip(cliques.cliques()) {
                if net.input_dim() != c.len() {
                    return Err(Error::dim("network input width must match clique size".to_string()));
                }
            }
        }
        if nets.iter().any(|n| n.output_dim() != 1) {
            return Err(Error::dim("component networks must be scalar-valued".to_string()));
        }
        Ok(MaskedMlpModel {
            cliques,
            nets,
            shared,
            y_offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.cliques.dim()
    }

    pub fn y_offset(&self) -> f64 {
        self.y_offset
    }

    pub fn is_shared(&self) -> bool {
        self.shared
    }

    pub fn nets(&self) -> &[Mlp] {
        &self.nets
    }

    fn net_for(&self, c_idx: usize) -> &Mlp {
        if self.shared {
            &self.nets[0]
        } else {
            &self.nets[c_idx]
        }
    }

    /// The input the component network sees for clique `c_idx`.
    fn component_input(&self, c_idx: usize, x: &[f64]) -> Vec<f64> {
        let clique = &self.cliques.cliques()[c_idx];
        if self.shared {
            let mut masked = vec![0.0; x.len()];
            for &k in clique {
                masked[k] = x[k];
            }
            masked
        } else {
            clique.iter().map(|&k| x[k]).collect()
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(format!(
                "design has dimension {}, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn component_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        (0..self.cliques.len())
            .map(|c| self.net_for(c).forward_scalar(&self.component_input(c, x)))
            .collect()
    }

    /// Prediction: y_offset + mean(components) · |𝒞|.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let vals = self.component_values(x)?;
        let k = vals.len() as f64;
        Ok(self.y_offset + vals.iter().sum::<f64>() / k * k)
    }

    /// Exact gradient of [`Self::predict`]: coordinate k receives
    /// contributions only from cliques containing k.
    pub fn predict_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut grad = vec![0.0; x.len()];
        for (c_idx, clique) in self.cliques.cliques().iter().enumerate() {
            let input = self.component_input(c_idx, x);
            let g = self.net_for(c_idx).input_gradient(&input)?;
            if self.shared {
                for &k in clique {
                    grad[k] += g[k];
                }
            } else {
                for (slot, &k) in clique.iter().enumerate() {
                    grad[k] += g[slot];
                }
            }
        }
        Ok(grad)
    }

    /// Mean squared prediction error over a dataset.
    pub fn mse(&self, dataset: &Dataset) -> Result<f64> {
        let errs = par::map_range(dataset.len(), |i| {
            self.predict(dataset.row(i)).map(|p| {
                let r = p - dataset.y[i];
                r * r
            })
        });
        let mut acc = 0.0;
        for e in errs {
            acc += e?;
        }
        Ok(acc / dataset.len() as f64)
    }

    pub fn to_container(&self) -> super::ModelContainer {
        let mut meta = BTreeMap::new();
        meta.insert("d".to_string(), self.dim().to_string());
        meta.insert(
            "cliques".to_string(),
            super::onehot::encode_cliques(&self.cliques),
        );
        meta.insert("shared".to_string(), self.shared.to_string());
        meta.insert(
            "widths".to_string(),
            self.nets
                .iter()
                .map(|n| {
                    n.widths()
                        .iter()
                        .map(|w| w.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect::<Vec<_>>()
                .join(";"),
        );
        let mut arrays = vec![("y_offset".to_string(), vec![self.y_offset])];
        for (i, net) in self.nets.iter().enumerate() {
            arrays.push((format!("net{i}"), net.params_to_vec()));
        }
        super::ModelContainer {
            kind: "masked_mlp".to_string(),
            meta,
            arrays,
        }
    }

    pub fn from_container(c: &super::ModelContainer) -> Result<Self> {
        if c.kind != "masked_mlp" {
            return Err(Error::Parse(format!(
                "expected masked_mlp container, got {}",
                c.kind
            )));
        }
        let d: usize = c
            .meta_required("d")?
            .parse()
            .map_err(|_| Error::Parse("bad d".to_string()))?;
        let cliques = super::onehot::decode_cliques(c.meta_required("cliques")?, d)?;
        let shared = c.meta_required("shared")? == "true";
        let mut nets = Vec::new();
        for (i, spec) in c.meta_required("widths")?.split(';').enumerate() {
            let widths: Vec<usize> = spec
                .split(',')
                .map(|t| t.parse().map_err(|_| Error::Parse("bad width".to_string())))
                .collect::<Result<_>>()?;
            let mut net = Mlp::zeroed(&widths)?;
            net.set_params_from_vec(c.array_required(&format!("net{i}"))?)?;
            nets.push(net);
        }
        let y_offset = c.array_required("y_offset")?[0];
        MaskedMlpModel::from_parts(cliques, nets, shared, y_offset)
    }
}

impl CliqueComponents for MaskedMlpModel {
    fn cliques(&self) -> &CliqueSet {
        &self.cliques
    }

    fn component_value(&self, c_idx: usize, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.net_for(c_idx).forward_scalar(&self.component_input(c_idx, x))
    }
}

impl DifferentiableSurrogate for MaskedMlpModel {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict_gradient(x)
    }
}

/// Fits the clique-decomposed neural surrogate by minibatch Adam on the MSE
/// of the summed components against centered targets.
pub fn fit_masked_mlp(
    dataset: &Dataset,
    cliques: &CliqueSet,
    config: &MlpFitConfig,
) -> Result<(MaskedMlpModel, MlpFitReport)> {
    if !matches!(dataset.space, Space::Continuous { .. }) {
        return Err(Error::arg("fit_masked_mlp requires a continuous dataset"));
    }
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
    if config.batch == 0 || config.epochs == 0 {
        return Err(Error::arg("batch size and epoch count must be positive"));
    }
    if !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(Error::arg("holdout fraction must lie in [0, 1)"));
    }
    let d = dataset.dim();
    let mut rng = Rng::new(config.seed);

    // Train/held-out split on a seed-fixed shuffle.
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    rng.shuffle(&mut order);
    let n_holdout = (config.holdout_fraction * dataset.len() as f64).floor() as usize;
    let (holdout_idx, train_idx) = order.split_at(n_holdout);
    if train_idx.is_empty() {
        return Err(Error::arg("holdout split leaves no training rows"));
    }

    let y_offset =
        train_idx.iter().map(|&i| dataset.y[i]).sum::<f64>() / train_idx.len() as f64;

    let mut nets = Vec::new();
    if config.shared {
        let mut widths = vec![d];
        widths.extend_from_slice(&config.hidden);
        widths.push(1);
        nets.push(Mlp::init(&widths, &mut rng)?);
    } else {
        for c in cliques.cliques() {
            let mut widths = vec![c.len()];
            widths.extend_from_slice(&config.hidden);
            widths.push(1);
            nets.push(Mlp::init(&widths, &mut rng)?);
        }
    }
    let mut model = MaskedMlpModel::from_parts(cliques.clone(), nets, config.shared, y_offset)?;

    let mut params: Vec<f64> = model.nets.iter().flat_map(|n| n.params_to_vec()).collect();
    let mut adam = AdamState::new(params.len());
    let hyper = AdamParams {
        lr: config.lr,
        ..AdamParams::default()
    };

    let mut epoch_train_mse = Vec::with_capacity(config.epochs);
    let mut train_order: Vec<usize> = train_idx.to_vec();
    for epoch in 0..config.epochs {
        rng.shuffle(&mut train_order);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for batch in train_order.chunks(config.batch) {
            let (grads, loss) = minibatch_grads(&model, dataset, batch, y_offset)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            epoch_loss += loss;
            batches += 1;

            let mut flat = Vec::with_capacity(params.len());
            for g in &grads {
                flat.extend(g.to_vec());
            }
            adam_step(&mut params, &flat, &mut adam, &hyper)?;
            let mut at = 0;
            for net in &mut model.nets {
                let len = net.num_params();
                net.set_params_from_vec(&params[at..at + len])?;
                at += len;
            }
        }
        epoch_train_mse.push(epoch_loss / batches as f64);
    }

    let holdout_mse = if holdout_idx.is_empty() {
        None
    } else {
        let mut acc = 0.0;
        for &i in holdout_idx {
            let r = model.predict(dataset.row(i))? - dataset.y[i];
            acc += r * r;
        }
        Some(acc / holdout_idx.len() as f64)
    };

    Ok((
        model,
        MlpFitReport {
            epoch_train_mse,
            holdout_mse,
        },
    ))
}

/// Gradient of the minibatch MSE with respect to every network's parameters.
/// Rows are processed in fixed-size chunks and partials folded in chunk
/// order, so the result is independent of thread count.
fn minibatch_grads(
    model: &MaskedMlpModel,
    dataset: &Dataset,
    batch: &[usize],
    y_offset: f64,
) -> Result<(Vec<MlpGradients>, f64)> {
    let b = batch.len() as f64;
    let partials = par::chunk_accumulate(batch, par::CHUNK, |rows| -> Result<(Vec<MlpGradients>, f64)> {
        let mut grads: Vec<MlpGradients> =
            model.nets.iter().map(MlpGradients::zeros_like).collect();
        let mut loss = 0.0;
        for &i in rows {
            let x = dataset.row(i);
            let target = dataset.y[i] - y_offset;
            let traces: Vec<_> = (0..model.cliques.len())
                .map(|c| model.net_for(c).forward_trace(&model.component_input(c, x)))
                .collect::<Result<_>>()?;
            let pred: f64 = traces.iter().map(|t| t.output()[0]).sum();
            let resid = pred - target;
            loss += resid * resid;
            let d_out = [2.0 * resid / b];
            for (c, trace) in traces.iter().enumerate() {
                let net_idx = if model.shared { 0 } else { c };
                model.nets[net_idx].backward_from_output(trace, &d_out, &mut grads[net_idx])?;
            }
        }
        Ok((grads, loss))
    });

    let mut total: Option<Vec<MlpGradients>> = None;
    let mut loss = 0.0;
    for part in partials {
        let (g, l) = part?;
        loss += l;
        match &mut total {
            None => total = Some(g),
            Some(t) => {
                for (a, b) in t.iter_mut().zip(&g) {
                    a.add(b);
                }
            }
        }
    }
    Ok((total.expect("nonempty batch"), loss / b))
}

/// Monolithic baseline: the masked fitter with the single clique {0..d−1}.
pub fn fit_full_mlp(
    dataset: &Dataset,
    config: &MlpFitConfig,
) -> Result<(MaskedMlpModel, MlpFitReport)> {
    let d = dataset.dim();
    let full = CliqueSet::from_cliques(d, &[(0..d).collect()])?;
    let config = MlpFitConfig {
        shared: true,
        ..config.clone()
    };
    fit_masked_mlp(dataset, &full, &config)
}
