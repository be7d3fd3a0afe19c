//! Gradient verification against central finite differences.

use super::graph::{Graph, NodeId};
use super::AutodiffError;

/// Central-difference step used by [`grad_check`].
pub const FD_STEP: f64 = 1e-5;

/// Per-parameter comparison of reverse-mode gradients against central
/// finite differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// `|g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|)` per flat parameter.
    pub relative_errors: Vec<f64>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.relative_errors.iter().cloned().fold(0.0, f64::max)
    }

    /// Indices of parameters whose error exceeds the tolerance.
    pub fn failures(&self) -> Vec<usize> {
        self.relative_errors
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > self.tolerance)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.relative_errors.iter().all(|&e| e <= self.tolerance)
    }
}

/// Builds a scalar loss from a flat parameter vector.
///
/// The builder must return the loss node and the leaf nodes holding the
/// parameters, in the order they consume the flat vector. It must be
/// deterministic: two calls with identical parameters must produce
/// bit-identical losses.
pub type LossBuilder<'a> =
    &'a dyn Fn(&mut Graph, &[f64]) -> Result<(NodeId, Vec<NodeId>), AutodiffError>;

fn eval_loss(builder: LossBuilder, params: &[f64]) -> Result<f64, AutodiffError> {
    let mut g = Graph::new();
    let (loss, _) = builder(&mut g, params)?;
    Ok(g.value(loss).item())
}

/// Compares the reverse-mode gradient of `builder`'s loss against central
/// finite differences (step [`FD_STEP`]) for every parameter.
pub fn grad_check(
    builder: LossBuilder,
    params: &[f64],
    tolerance: f64,
) -> Result<GradCheckReport, AutodiffError> {
    grad_check_with_step(builder, params, tolerance, FD_STEP)
}

/// [`grad_check`] with an explicit difference step.
///
/// Parameters whose gradient is many orders of magnitude below the loss
/// need a larger step: the f64 rounding noise of the two loss evaluations,
/// divided by 2h, must stay below the gradient itself for the comparison
/// to be meaningful.
pub fn grad_check_with_step(
    builder: LossBuilder,
    params: &[f64],
    tolerance: f64,
    step: f64,
) -> Result<GradCheckReport, AutodiffError> {
    let first = eval_loss(builder, params)?;
    let second = eval_loss(builder, params)?;
    if first.to_bits() != second.to_bits() {
        return Err(AutodiffError::NonDeterministicBuilder { first, second });
    }

    let analytic = reverse_gradient(builder, params)?;
    let mut relative_errors = Vec::with_capacity(params.len());
    let mut work = params.to_vec();
    for i in 0..params.len() {
        let fd = central_difference(builder, &mut work, i, step)?;
        relative_errors.push(relative_error(analytic[i], fd));
    }
    Ok(GradCheckReport {
        relative_errors,
        tolerance,
    })
}

/// `|g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|)`.
pub fn relative_error(ad: f64, fd: f64) -> f64 {
    (ad - fd).abs() / f64::max(1e-8, ad.abs() + fd.abs())
}

/// The full reverse-mode gradient of the builder's loss, in flat order.
pub fn reverse_gradient(builder: LossBuilder, params: &[f64]) -> Result<Vec<f64>, AutodiffError> {
    let mut g = Graph::new();
    let (loss, leaves) = builder(&mut g, params)?;
    g.backward(loss)?;
    let mut analytic = Vec::with_capacity(params.len());
    for leaf in &leaves {
        analytic.extend_from_slice(g.grad(*leaf).data());
    }
    if analytic.len() != params.len() {
        return Err(AutodiffError::ParamCount {
            declared: params.len(),
            found: analytic.len(),
        });
    }
    Ok(analytic)
}

/// Central difference of the loss along one coordinate.
pub fn central_difference(
    builder: LossBuilder,
    work: &mut [f64],
    index: usize,
    step: f64,
) -> Result<f64, AutodiffError> {
    let orig = work[index];
    work[index] = orig + step;
    let up = eval_loss(builder, work)?;
    work[index] = orig - step;
    let down = eval_loss(builder, work)?;
    work[index] = orig;
    Ok((up - down) / (2.0 * step))
}
