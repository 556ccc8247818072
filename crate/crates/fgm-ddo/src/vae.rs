//! Minimal Gaussian-prior variational auto-encoder.
//!
//! Purpose-built for one job: reparameterizing non-Gaussian design data so
//! that graph discovery's Gaussian assumption approximately holds. The
//! encoder maps an observation to a diagonal Gaussian posterior (mean and
//! log-variance); training minimizes reconstruction error plus the closed-
//! form KL to N(0, I) through a single reparameterized sample per datum.
//! Downstream discovery consumes the posterior means.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numkit::{adam_step, AdamParams, AdamState, DenseMatrix, Mlp, MlpGradients, Rng};
use crate::par;
use crate::surrogate::ModelContainer;

#[derive(Debug, Clone)]
pub struct VaeConfig {
    pub d_z: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Fixed isotropic decoder noise scale (β = 1 with scale 1).
    pub decoder_noise: f64,
}

impl VaeConfig {
    pub fn new(d_z: usize) -> Self {
        VaeConfig {
            d_z,
            hidden: vec![128],
            lr: 1e-3,
            epochs: 100,
            batch: 128,
            seed: 0,
            decoder_noise: 1.0,
        }
    }
}

/// Encoder/decoder pair with a fixed decoder noise scale.
#[derive(Debug, Clone)]
pub struct VaeModel {
    encoder: Mlp, // d_obs -> 2·d_z (means, then log-variances)
    decoder: Mlp, // d_z -> d_obs
    d_obs: usize,
    d_z: usize,
    noise: f64,
}

/// Loss bookkeeping from a VAE fit.
#[derive(Debug, Clone)]
pub struct VaeTrainReport {
    /// Negative ELBO per minibatch, in training order.
    pub batch_losses: Vec<f64>,
    /// Mean minibatch loss per epoch.
    pub epoch_mean_loss: Vec<f64>,
    /// Frobenius distance of the aggregate latent covariance to the
    /// identity, recorded after each epoch.
    pub epoch_latent_cov_distance: Vec<f64>,
}

impl VaeTrainReport {
    /// Mean of the trailing `k` batch losses.
    pub fn trailing_mean_loss(&self, k: usize) -> f64 {
        let n = self.batch_losses.len();
        let start = n.saturating_sub(k);
        let tail = &self.batch_losses[start..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Closed-form KL(N(μ, diag σ²) ‖ N(0, I)) = Σ ½(μ² + σ² − log σ² − 1).
pub fn gaussian_kl(mu: &[f64], logvar: &[f64]) -> f64 {
    mu.iter()
        .zip(logvar)
        .map(|(m, lv)| 0.5 * (m * m + lv.exp() - lv - 1.0))
        .sum()
}

impl VaeModel {
    pub fn zeroed(d_obs: usize, d_z: usize, hidden: &[usize]) -> Result<Self> {
        let mut enc_widths = vec![d_obs];
        enc_widths.extend_from_slice(hidden);
        enc_widths.push(2 * d_z);
        let mut dec_widths = vec![d_z];
        dec_widths.extend_from_slice(hidden);
        dec_widths.push(d_obs);
        Ok(VaeModel {
            encoder: Mlp::zeroed(&enc_widths)?,
            decoder: Mlp::zeroed(&dec_widths)?,
            d_obs,
            d_z,
            noise: 1.0,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.d_z
    }

    pub fn observed_dim(&self) -> usize {
        self.d_obs
    }

    /// Posterior mean and log-variance.
    pub fn encode_full(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x.len() != self.d_obs {
            return Err(Error::dim(format!(
                "encoder expects {} inputs, got {}",
                self.d_obs,
                x.len()
            )));
        }
        let out = self.encoder.forward(x)?;
        Ok((out[..self.d_z].to_vec(), out[self.d_z..].to_vec()))
    }

    /// Deterministic representation: the posterior mean.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encode_full(x)?.0)
    }

    /// Reconstruction mean.
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.d_z {
            return Err(Error::dim(format!(
                "decoder expects {} inputs, got {}",
                self.d_z,
                z.len()
            )));
        }
        self.decoder.forward(z)
    }

    /// Encodes every row of `x` to its posterior mean.
    pub fn encode_matrix(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let rows = par::map_range(x.rows(), |i| self.encode(x.row(i)));
        let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
        DenseMatrix::from_rows(&rows)
    }

    /// Negative ELBO of one datum under a fixed noise draw, optionally
    /// accumulating parameter gradients (reparameterization path).
    fn sample_loss(
        &self,
        x: &[f64],
        eps: &[f64],
        weight: f64,
        grads: Option<(&mut MlpGradients, &mut MlpGradients)>,
    ) -> Result<f64> {
        let enc_trace = self.encoder.forward_trace(x)?;
        let enc_out = enc_trace.output();
        let (mu, logvar) = enc_out.split_at(self.d_z);
        let sigma: Vec<f64> = logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
        let z: Vec<f64> = mu
            .iter()
            .zip(&sigma)
            .zip(eps)
            .map(|((m, s), e)| m + s * e)
            .collect();
        let dec_trace = self.decoder.forward_trace(&z)?;
        let recon = dec_trace.output();
        let noise_sq = self.noise * self.noise;
        let recon_loss: f64 = recon
            .iter()
            .zip(x)
            .map(|(r, t)| (r - t) * (r - t))
            .sum::<f64>()
            / (2.0 * noise_sq);
        let kl = gaussian_kl(mu, logvar);
        let loss = recon_loss + kl;

        if let Some((enc_grads, dec_grads)) = grads {
            let d_recon: Vec<f64> = recon
                .iter()
                .zip(x)
                .map(|(r, t)| weight * (r - t) / noise_sq)
                .collect();
            let d_z = self.decoder.backward_from_output(&dec_trace, &d_recon, dec_grads)?;
            let mut d_enc = vec![0.0; 2 * self.d_z];
            for j in 0..self.d_z {
                // z = μ + σ·ε with σ = exp(lv/2):
                // ∂z/∂μ = 1, ∂z/∂lv = σ·ε/2.
                d_enc[j] = d_z[j] + weight * mu[j];
                d_enc[self.d_z + j] =
                    d_z[j] * sigma[j] * eps[j] * 0.5 + weight * 0.5 * (logvar[j].exp() - 1.0);
            }
            self.encoder.backward_from_output(&enc_trace, &d_enc, enc_grads)?;
        }
        Ok(loss)
    }

    pub fn to_container(&self) -> ModelContainer {
        let mut meta = BTreeMap::new();
        meta.insert("d_obs".to_string(), self.d_obs.to_string());
        meta.insert("d_z".to_string(), self.d_z.to_string());
        let widths = |m: &Mlp| {
            m.widths()
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        meta.insert("encoder_widths".to_string(), widths(&self.encoder));
        meta.insert("decoder_widths".to_string(), widths(&self.decoder));
        ModelContainer {
            kind: "vae".to_string(),
            meta,
            arrays: vec![
                ("noise".to_string(), vec![self.noise]),
                ("encoder".to_string(), self.encoder.params_to_vec()),
                ("decoder".to_string(), self.decoder.params_to_vec()),
            ],
        }
    }

    pub fn from_container(c: &ModelContainer) -> Result<Self> {
        if c.kind != "vae" {
            return Err(Error::Parse(format!("expected vae container, got {}", c.kind)));
        }
        let parse_widths = |key: &str| -> Result<Vec<usize>> {
            c.meta_required(key)?
                .split(',')
                .map(|t| t.parse().map_err(|_| Error::Parse("bad width".to_string())))
                .collect()
        };
        let d_obs = c
            .meta_required("d_obs")?
            .parse()
            .map_err(|_| Error::Parse("bad d_obs".to_string()))?;
        let d_z = c
            .meta_required("d_z")?
            .parse()
            .map_err(|_| Error::Parse("bad d_z".to_string()))?;
        let mut encoder = Mlp::zeroed(&parse_widths("encoder_widths")?)?;
        encoder.set_params_from_vec(c.array_required("encoder")?)?;
        let mut decoder = Mlp::zeroed(&parse_widths("decoder_widths")?)?;
        decoder.set_params_from_vec(c.array_required("decoder")?)?;
        Ok(VaeModel {
            encoder,
            decoder,
            d_obs,
            d_z,
            noise: c.array_required("noise")?[0],
        })
    }
}

/// Trains a VAE on the rows of `data` by minibatch Adam on the negative
/// ELBO, one reparameterized latent sample per datum per step.
pub fn train_vae(data: &DenseMatrix, config: &VaeConfig) -> Result<(VaeModel, VaeTrainReport)> {
    train_vae_with(data, config, |_, _| Ok(()))
}

/// [`train_vae`] with a per-epoch callback (the pipeline's interleaved
/// discovery mode hooks in here to feed the EMA estimator during training).
pub fn train_vae_with(
    data: &DenseMatrix,
    config: &VaeConfig,
    mut on_epoch: impl FnMut(&VaeModel, usize) -> Result<()>,
) -> Result<(VaeModel, VaeTrainReport)> {
    let n = data.rows();
    if n < 100 {
        return Err(Error::arg(format!(
            "VAE training needs at least 100 rows, got {n}"
        )));
    }
    if config.d_z < 1 {
        return Err(Error::arg("latent dimension must be at least 1"));
    }
    if config.batch == 0 || config.epochs == 0 {
        return Err(Error::arg("batch size and epoch count must be positive"));
    }
    let d_obs = data.cols();
    let mut rng = Rng::new(config.seed).derive(0xae);
    let mut model = VaeModel::zeroed(d_obs, config.d_z, &config.hidden)?;
    model.noise = config.decoder_noise;
    model.encoder = Mlp::init(model.encoder.widths().to_vec().as_slice(), &mut rng)?;
    model.decoder = Mlp::init(model.decoder.widths().to_vec().as_slice(), &mut rng)?;

    let enc_len = model.encoder.num_params();
    let mut params: Vec<f64> = model.encoder.params_to_vec();
    params.extend(model.decoder.params_to_vec());
    let mut adam = AdamState::new(params.len());
    let hyper = AdamParams {
        lr: config.lr,
        ..AdamParams::default()
    };

    let mut report = VaeTrainReport {
        batch_losses: Vec::new(),
        epoch_mean_loss: Vec::with_capacity(config.epochs),
        epoch_latent_cov_distance: Vec::with_capacity(config.epochs),
    };
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (batch_idx, batch) in order.chunks(config.batch).enumerate() {
            // Noise is drawn sequentially so the run replays exactly.
            let eps: Vec<Vec<f64>> = batch
                .iter()
                .map(|_| (0..config.d_z).map(|_| rng.normal()).collect())
                .collect();
            let weight = 1.0 / batch.len() as f64;
            let items: Vec<(usize, &Vec<f64>)> =
                batch.iter().copied().zip(eps.iter()).collect();
            let partials = par::chunk_accumulate(&items, par::CHUNK, |chunk| {
                let mut enc_g = MlpGradients::zeros_like(&model.encoder);
                let mut dec_g = MlpGradients::zeros_like(&model.decoder);
                let mut loss = 0.0;
                for (row, eps_row) in chunk {
                    loss += model.sample_loss(
                        data.row(*row),
                        eps_row,
                        weight,
                        Some((&mut enc_g, &mut dec_g)),
                    )?;
                }
                Ok::<_, Error>((enc_g, dec_g, loss))
            });
            let mut enc_g = MlpGradients::zeros_like(&model.encoder);
            let mut dec_g = MlpGradients::zeros_like(&model.decoder);
            let mut loss_sum = 0.0;
            for part in partials {
                let (eg, dg, l) = part?;
                enc_g.add(&eg);
                dec_g.add(&dg);
                loss_sum += l;
            }
            let loss = loss_sum * weight;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "vae loss at epoch {epoch} batch {batch_idx}"
                )));
            }
            report.batch_losses.push(loss);
            epoch_loss += loss;
            batches += 1;

            let mut flat = enc_g.to_vec();
            flat.extend(dec_g.to_vec());
            adam_step(&mut params, &flat, &mut adam, &hyper)?;
            model.encoder.set_params_from_vec(&params[..enc_len])?;
            model.decoder.set_params_from_vec(&params[enc_len..])?;
        }
        report.epoch_mean_loss.push(epoch_loss / batches as f64);
        report
            .epoch_latent_cov_distance
            .push(latent_cov_distance(&model, data)?);
        on_epoch(&model, epoch)?;
    }
    Ok((model, report))
}

/// Frobenius distance between the aggregate covariance of the encoded
/// posterior means and the identity.
pub fn latent_cov_distance(model: &VaeModel, data: &DenseMatrix) -> Result<f64> {
    let z = model.encode_matrix(data)?;
    let n = z.rows();
    let d = z.cols();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(z.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut frob = 0.0;
    for a in 0..d {
        for b in a..d {
            let mut cov = 0.0;
            for i in 0..n {
                cov += (z.get(i, a) - mean[a]) * (z.get(i, b) - mean[b]);
            }
            cov /= n as f64;
            let target = if a == b { 1.0 } else { 0.0 };
            let w = if a == b { 1.0 } else { 2.0 };
            frob += w * (cov - target) * (cov - target);
        }
    }
    Ok(frob.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_closed_form_properties() {
        // Zero at the prior, exactly.
        assert_eq!(gaussian_kl(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        // Positive anywhere else.
        let mut rng = Rng::new(50);
        for _ in 0..200 {
            let mu = [rng.normal(), rng.normal()];
            let lv = [rng.normal(), rng.normal()];
            let kl = gaussian_kl(&mu, &lv);
            if mu == [0.0, 0.0] && lv == [0.0, 0.0] {
                continue;
            }
            assert!(kl >= 0.0, "kl = {kl}");
        }
        // Hand check: μ = 1, σ² = 1 gives ½.
        assert!((gaussian_kl(&[1.0], &[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_model_encodes_and_decodes_to_zero() {
        let model = VaeModel::zeroed(3, 2, &[4]).unwrap();
        assert_eq!(model.encode(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(model.decode(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(model.encode(&[1.0]).is_err());
        assert!(model.decode(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn round_trip_is_bit_deterministic() {
        let mut rng = Rng::new(51);
        let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let data = DenseMatrix::from_rows(&rows).unwrap();
        let config = VaeConfig {
            epochs: 2,
            ..VaeConfig::new(2)
        };
        let (a, _) = train_vae(&data, &config).unwrap();
        let (b, _) = train_vae(&data, &config).unwrap();
        let x = [0.3, -0.7];
        let (za, zb) = (a.encode(&x).unwrap(), b.encode(&x).unwrap());
        for (u, v) in za.iter().zip(&zb) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
        let (ra, rb) = (
            a.decode(&za).unwrap(),
            b.decode(&zb).unwrap(),
        );
        for (u, v) in ra.iter().zip(&rb) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn constant_data_reconstructs_and_collapses_to_prior() {
        let data = DenseMatrix::from_rows(&vec![vec![0.7, -0.3]; 200]).unwrap();
        let config = VaeConfig {
            epochs: 300,
            batch: 64,
            lr: 3e-3,
            hidden: vec![16],
            ..VaeConfig::new(2)
        };
        let (model, _) = train_vae(&data, &config).unwrap();
        let (mu, lv) = model.encode_full(&[0.7, -0.3]).unwrap();
        let recon = model.decode(&mu).unwrap();
        let mse: f64 = recon
            .iter()
            .zip([0.7, -0.3])
            .map(|(r, t)| (r - t) * (r - t))
            .sum::<f64>()
            / 2.0;
        assert!(mse <= 1e-3, "reconstruction mse {mse}");
        let kl = gaussian_kl(&mu, &lv);
        assert!(kl <= 0.2, "kl per datum {kl}");
    }

    #[test]
    fn gaussian_data_latents_near_standard_moments() {
        let mut rng = Rng::new(52);
        let rows: Vec<Vec<f64>> = (0..2000)
            .map(|_| vec![rng.normal(), rng.normal()])
            .collect();
        let data = DenseMatrix::from_rows(&rows).unwrap();
        let config = VaeConfig {
            epochs: 80,
            hidden: vec![32],
            lr: 2e-3,
            ..VaeConfig::new(2)
        };
        let (model, _) = train_vae(&data, &config).unwrap();
        // Aggregate posterior moments: Var over data of the posterior means
        // plus the mean posterior variance. (For Gaussian data with unit
        // decoder noise the optimum is near-collapse — the means carry
        // little variance and the posterior noise carries the rest.)
        let n = data.rows();
        for j in 0..2 {
            let mut mu_sum = 0.0;
            let mut mu_sq = 0.0;
            let mut var_sum = 0.0;
            for i in 0..n {
                let (mu, lv) = model.encode_full(data.row(i)).unwrap();
                mu_sum += mu[j];
                mu_sq += mu[j] * mu[j];
                var_sum += lv[j].exp();
            }
            let mean = mu_sum / n as f64;
            let var = mu_sq / n as f64 - mean * mean + var_sum / n as f64;
            assert!(mean.abs() <= 0.1, "latent {j} aggregate mean {mean}");
            assert!(
                (0.7..=1.3).contains(&var),
                "latent {j} aggregate variance {var}"
            );
        }
    }

    #[test]
    fn training_reduces_loss() {
        let mut rng = Rng::new(53);
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let z = rng.normal();
                vec![z + 0.1 * rng.normal(), -z + 0.1 * rng.normal()]
            })
            .collect();
        let data = DenseMatrix::from_rows(&rows).unwrap();
        let config = VaeConfig {
            epochs: 30,
            hidden: vec![16],
            ..VaeConfig::new(2)
        };
        let (_, report) = train_vae(&data, &config).unwrap();
        let epoch1 = report.epoch_mean_loss[0];
        let trailing = report.trailing_mean_loss(100);
        assert!(
            trailing <= epoch1,
            "trailing mean {trailing} vs first epoch {epoch1}"
        );
    }

    #[test]
    fn reparameterization_gradient_matches_finite_differences() {
        // Common random numbers: averaging per-sample analytic gradients and
        // finite-differencing the same sample average must agree.
        let mut model = VaeModel::zeroed(2, 1, &[3]).unwrap();
        let mut rng = Rng::new(54);
        model.encoder = Mlp::init(model.encoder.widths().to_vec().as_slice(), &mut rng).unwrap();
        model.decoder = Mlp::init(model.decoder.widths().to_vec().as_slice(), &mut rng).unwrap();
        let x = [0.8, -0.4];
        let n = 100_000;
        let eps: Vec<f64> = (0..n).map(|_| rng.normal()).collect();

        // Averaged analytic gradient.
        let mut enc_g = MlpGradients::zeros_like(&model.encoder);
        let mut dec_g = MlpGradients::zeros_like(&model.decoder);
        for e in &eps {
            model
                .sample_loss(&x, &[*e], 1.0 / n as f64, Some((&mut enc_g, &mut dec_g)))
                .unwrap();
        }
        let mut analytic = enc_g.to_vec();
        analytic.extend(dec_g.to_vec());

        let enc_len = model.encoder.num_params();
        let loss_of = |params: &[f64]| -> f64 {
            let mut m = model.clone();
            m.encoder.set_params_from_vec(&params[..enc_len]).unwrap();
            m.decoder.set_params_from_vec(&params[enc_len..]).unwrap();
            let mut acc = 0.0;
            for e in &eps {
                acc += m.sample_loss(&x, &[*e], 1.0, None).unwrap();
            }
            acc / n as f64
        };
        let mut params = model.encoder.params_to_vec();
        params.extend(model.decoder.params_to_vec());
        let h = 1e-5;
        // Spot-check a few parameters spread across encoder and decoder.
        for &k in &[0usize, 3, enc_len - 1, enc_len + 1, params.len() - 1] {
            let mut p = params.clone();
            p[k] += h;
            let up = loss_of(&p);
            p[k] -= 2.0 * h;
            let down = loss_of(&p);
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(1e-8);
            assert!(
                (analytic[k] - fd).abs() / denom <= 1e-3,
                "param {k}: analytic {} vs fd {fd}",
                analytic[k]
            );
        }
    }

    #[test]
    fn container_round_trip() {
        let mut rng = Rng::new(55);
        let mut model = VaeModel::zeroed(3, 2, &[5]).unwrap();
        model.encoder = Mlp::init(model.encoder.widths().to_vec().as_slice(), &mut rng).unwrap();
        model.decoder = Mlp::init(model.decoder.widths().to_vec().as_slice(), &mut rng).unwrap();
        let text = model.to_container().to_text();
        let back = VaeModel::from_container(&ModelContainer::from_text(&text).unwrap()).unwrap();
        let x = [0.1, 0.2, 0.3];
        assert_eq!(
            model.encode(&x).unwrap()[0].to_bits(),
            back.encode(&x).unwrap()[0].to_bits()
        );
        assert_eq!(text, back.to_container().to_text());
    }
}
