//! Graph assembly and inference for the two-branch forecaster.

use super::{ForecasterWeights, NetError};
use crate::autodiff::{Graph, NodeId, Tensor};

/// Inserts the weights as graph leaves and wires the full network.
///
/// `z` must be `[batch, n_z, 1]` and `x` `[batch, n_x, x_f]`. Returns the
/// `[batch, n_x, 1]` output node and the parameter leaves in canonical
/// parameter order, for callers that build their own loss on top (training,
/// gradient checks).
pub fn forward_graph(
    g: &mut Graph,
    w: &ForecasterWeights,
    z: &Tensor,
    x: &Tensor,
) -> Result<(NodeId, Vec<NodeId>), NetError> {
    let cfg = &w.config;
    let n_z = cfg.endogenous_hours;
    let n_x = cfg.horizon_hours;
    if z.rank() != 3 || z.shape()[1] != n_z || z.shape()[2] != 1 {
        return Err(NetError::InputShape {
            name: "z",
            got: z.shape().to_vec(),
            expected: vec![z.shape()[0], n_z, 1],
        });
    }
    let batch = z.shape()[0];
    if x.rank() != 3
        || x.shape()[0] != batch
        || x.shape()[1] != n_x
        || x.shape()[2] != cfg.exogenous_features
    {
        return Err(NetError::InputShape {
            name: "x",
            got: x.shape().to_vec(),
            expected: vec![batch, n_x, cfg.exogenous_features],
        });
    }

    let params: Vec<NodeId> = w.params().iter().map(|(_, t)| g.leaf((*t).clone())).collect();
    // Canonical order: per gate (w, u, b) x 4, then dense and conv tensors.
    let gate = |i: usize| (params[3 * i], params[3 * i + 1], params[3 * i + 2]);
    let (dense1_w, dense1_b, dense2_w, dense2_b) = (params[12], params[13], params[14], params[15]);
    let (exo_w, exo_b, out_w, out_b) = (params[16], params[17], params[18], params[19]);

    let z2 = {
        let flat = z.reshaped(&[batch, n_z])?;
        g.leaf(flat)
    };
    let x3 = g.leaf(x.clone());

    // Recurrent block: unrolled LSTM over the z window, one hour per step.
    let mut h = g.leaf(Tensor::zeros(&[batch, cfg.lstm_units]));
    let mut c = g.leaf(Tensor::zeros(&[batch, cfg.lstm_units]));
    for t in 0..n_z {
        let x_t = g.slice_last(z2, t, 1)?;
        let mut pre = [NodeId(0); 4];
        for (i, p) in pre.iter_mut().enumerate() {
            let (wg, ug, bg) = gate(i);
            let a = g.matmul(x_t, wg)?;
            let b = g.matmul(h, ug)?;
            let s = g.add(a, b)?;
            *p = g.bias_add(s, bg)?;
        }
        let i_gate = g.sigmoid(pre[0])?;
        let f_gate = g.sigmoid(pre[1])?;
        let c_cand = g.tanh(pre[2])?;
        let o_gate = g.sigmoid(pre[3])?;
        let keep = g.mul(f_gate, c)?;
        let write = g.mul(i_gate, c_cand)?;
        c = g.add(keep, write)?;
        let c_act = g.tanh(c)?;
        h = g.mul(o_gate, c_act)?;
    }
    let d1 = g.matmul(h, dense1_w)?;
    let d1 = g.bias_add(d1, dense1_b)?;
    let d1 = g.relu(d1)?;
    let d2 = g.matmul(d1, dense2_w)?;
    let d2 = g.bias_add(d2, dense2_b)?;
    let d2 = g.relu(d2)?;
    let recurrent_out = g.reshape(d2, &[batch, n_x, 1])?;

    // Convolutional block over the forecast day's exogenous features.
    let exo = g.conv1d(x3, exo_w, exo_b)?;
    let exo = g.relu(exo)?;

    // Per-hour causal filter: width-1 convolution over the stacked channels,
    // so hour t's output sees only hour t's features. Linear output: the
    // network regresses log price, which may be negative.
    let cat = g.concat_last(recurrent_out, exo)?;
    let out = g.conv1d(cat, out_w, out_b)?;
    Ok((out, params))
}

/// Runs the forecaster, returning the `[batch, n_x, 1]` log-price forecast.
pub fn forward(w: &ForecasterWeights, z: &Tensor, x: &Tensor) -> Result<Tensor, NetError> {
    let mut g = Graph::new();
    let (out, _) = forward_graph(&mut g, w, z, x)?;
    Ok(g.value(out).clone())
}

/// Forecasts one day of prices in $/MWh for a single example (batch 1).
///
/// Exponentiates the network's log-price output, so every price is
/// strictly positive.
pub fn predict(w: &ForecasterWeights, z: &Tensor, x: &Tensor) -> Result<Vec<f64>, NetError> {
    if z.rank() != 3 || z.shape()[0] != 1 {
        return Err(NetError::InputShape {
            name: "z",
            got: z.shape().to_vec(),
            expected: vec![1, w.config.endogenous_hours, 1],
        });
    }
    let out = forward(w, z, x)?;
    Ok(out.data().iter().map(|v| v.exp()).collect())
}
