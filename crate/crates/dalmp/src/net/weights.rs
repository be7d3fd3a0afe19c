use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{NetError, NetworkConfig};
use crate::autodiff::Tensor;

/// All learnable parameters of the two-branch forecaster.
///
/// LSTM gate order throughout is input, forget, cell, output. Shapes are
/// fully determined by the config; `audit` re-checks them after
/// deserialization.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterWeights {
    pub config: NetworkConfig,
    pub seed: u64,
    // Per gate: input weights [1, H], recurrent weights [H, H], bias [H].
    pub lstm_w: [Tensor; 4],
    pub lstm_u: [Tensor; 4],
    pub lstm_b: [Tensor; 4],
    pub dense1_w: Tensor,
    pub dense1_b: Tensor,
    pub dense2_w: Tensor,
    pub dense2_b: Tensor,
    /// Exogenous conv kernel [conv_width, exogenous_features, conv_filters].
    pub exo_conv_w: Tensor,
    pub exo_conv_b: Tensor,
    /// Output conv kernel [1, 1 + conv_filters, 1].
    pub out_conv_w: Tensor,
    pub out_conv_b: Tensor,
}

const GATES: [&str; 4] = ["input", "forget", "cell", "output"];

fn glorot(rng: &mut ChaCha20Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-a..a)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Builds a forecaster with deterministic uniform Glorot initialization.
///
/// Biases start at zero except the LSTM forget-gate bias, which starts at 1
/// to keep early memory open over long sequences.
pub fn build_forecaster(config: &NetworkConfig, seed: u64) -> Result<ForecasterWeights, NetError> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let h = config.lstm_units;
    let d1 = config.dense1_units;
    let d2 = config.dense2_units;
    let (xf, cf, w) = (
        config.exogenous_features,
        config.conv_filters,
        config.conv_width,
    );

    let lstm_w = std::array::from_fn(|_| glorot(&mut rng, &[1, h], 1, h));
    let lstm_u = std::array::from_fn(|_| glorot(&mut rng, &[h, h], h, h));
    let lstm_b = std::array::from_fn(|gate| {
        let mut b = Tensor::zeros(&[h]);
        if GATES[gate] == "forget" {
            b.fill(1.0);
        }
        b
    });
    let weights = ForecasterWeights {
        config: config.clone(),
        seed,
        lstm_w,
        lstm_u,
        lstm_b,
        dense1_w: glorot(&mut rng, &[h, d1], h, d1),
        dense1_b: Tensor::zeros(&[d1]),
        dense2_w: glorot(&mut rng, &[d1, d2], d1, d2),
        dense2_b: Tensor::zeros(&[d2]),
        exo_conv_w: glorot(&mut rng, &[w, xf, cf], w * xf, w * cf),
        exo_conv_b: Tensor::zeros(&[cf]),
        out_conv_w: glorot(&mut rng, &[1, 1 + cf, 1], 1 + cf, 1),
        out_conv_b: Tensor::zeros(&[1]),
    };
    weights.audit()?;
    Ok(weights)
}

impl ForecasterWeights {
    /// Expected shape of every parameter, in canonical order.
    pub fn expected_shapes(config: &NetworkConfig) -> Vec<(String, Vec<usize>)> {
        let h = config.lstm_units;
        let mut out = Vec::new();
        for gate in GATES {
            out.push((format!("lstm_w_{gate}"), vec![1, h]));
            out.push((format!("lstm_u_{gate}"), vec![h, h]));
            out.push((format!("lstm_b_{gate}"), vec![h]));
        }
        out.push(("dense1_weight".into(), vec![h, config.dense1_units]));
        out.push(("dense1_bias".into(), vec![config.dense1_units]));
        out.push((
            "dense2_weight".into(),
            vec![config.dense1_units, config.dense2_units],
        ));
        out.push(("dense2_bias".into(), vec![config.dense2_units]));
        out.push((
            "exo_conv_kernel".into(),
            vec![
                config.conv_width,
                config.exogenous_features,
                config.conv_filters,
            ],
        ));
        out.push(("exo_conv_bias".into(), vec![config.conv_filters]));
        out.push((
            "output_conv_kernel".into(),
            vec![1, 1 + config.conv_filters, 1],
        ));
        out.push(("output_conv_bias".into(), vec![1]));
        out
    }

    /// Parameters as (name, tensor) in canonical order.
    pub fn params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, gate) in GATES.iter().enumerate() {
            out.push((format!("lstm_w_{gate}"), &self.lstm_w[i]));
            out.push((format!("lstm_u_{gate}"), &self.lstm_u[i]));
            out.push((format!("lstm_b_{gate}"), &self.lstm_b[i]));
        }
        out.push(("dense1_weight".into(), &self.dense1_w));
        out.push(("dense1_bias".into(), &self.dense1_b));
        out.push(("dense2_weight".into(), &self.dense2_w));
        out.push(("dense2_bias".into(), &self.dense2_b));
        out.push(("exo_conv_kernel".into(), &self.exo_conv_w));
        out.push(("exo_conv_bias".into(), &self.exo_conv_b));
        out.push(("output_conv_kernel".into(), &self.out_conv_w));
        out.push(("output_conv_bias".into(), &self.out_conv_b));
        out
    }

    /// Mutable views of the parameters, in the same order as [`Self::params`].
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let ForecasterWeights {
            lstm_w,
            lstm_u,
            lstm_b,
            dense1_w,
            dense1_b,
            dense2_w,
            dense2_b,
            exo_conv_w,
            exo_conv_b,
            out_conv_w,
            out_conv_b,
            ..
        } = self;
        let mut out: Vec<&mut Tensor> = Vec::new();
        for ((w, u), b) in lstm_w
            .iter_mut()
            .zip(lstm_u.iter_mut())
            .zip(lstm_b.iter_mut())
        {
            out.push(w);
            out.push(u);
            out.push(b);
        }
        out.extend([
            dense1_w, dense1_b, dense2_w, dense2_b, exo_conv_w, exo_conv_b, out_conv_w, out_conv_b,
        ]);
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }

    /// Verifies every tensor against the shapes the config dictates.
    pub fn audit(&self) -> Result<(), NetError> {
        self.config.validate()?;
        let expected = Self::expected_shapes(&self.config);
        for ((name, shape), (_, tensor)) in expected.iter().zip(self.params()) {
            if tensor.shape() != shape.as_slice() {
                return Err(NetError::WeightShape {
                    name: name.clone(),
                    got: tensor.shape().to_vec(),
                    expected: shape.clone(),
                });
            }
        }
        Ok(())
    }
}
