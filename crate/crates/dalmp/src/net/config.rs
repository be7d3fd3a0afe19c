use super::NetError;

/// Architecture hyperparameters of the two-branch forecaster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    /// Hours of past log price fed to the recurrent block (one LSTM step each).
    pub endogenous_hours: usize,
    /// Forecast horizon in hours; also the recurrent block's output width.
    pub horizon_hours: usize,
    /// Exogenous features per forecast hour (physical columns + calendar one-hots).
    pub exogenous_features: usize,
    /// Output channels of the exogenous convolution.
    pub conv_filters: usize,
    /// Kernel width of the exogenous convolution.
    ///
    /// Width and filter count are configured independently; both default to 3.
    pub conv_width: usize,
    pub lstm_units: usize,
    pub dense1_units: usize,
    /// Must equal `horizon_hours`: the recurrent block emits one value per
    /// forecast hour.
    pub dense2_units: usize,
    /// Mini-batch size used by training.
    pub batch_size: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            endogenous_hours: 240,
            horizon_hours: 24,
            exogenous_features: 44,
            conv_filters: 3,
            conv_width: 3,
            lstm_units: 100,
            dense1_units: 50,
            dense2_units: 24,
            batch_size: 50,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let positive = [
            ("endogenous_hours", self.endogenous_hours),
            ("horizon_hours", self.horizon_hours),
            ("exogenous_features", self.exogenous_features),
            ("conv_filters", self.conv_filters),
            ("conv_width", self.conv_width),
            ("lstm_units", self.lstm_units),
            ("dense1_units", self.dense1_units),
            ("dense2_units", self.dense2_units),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(NetError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.dense2_units != self.horizon_hours {
            return Err(NetError::InvalidConfig(format!(
                "dense2_units ({}) must equal horizon_hours ({}): the recurrent block emits one value per forecast hour",
                self.dense2_units, self.horizon_hours
            )));
        }
        if self.conv_width > self.horizon_hours {
            return Err(NetError::InvalidConfig(format!(
                "conv_width ({}) must not exceed horizon_hours ({})",
                self.conv_width, self.horizon_hours
            )));
        }
        Ok(())
    }
}

/// Optimization and early-stopping settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Minimum drop in validation MAE that counts as an improvement.
    pub min_delta: f64,
    /// Epochs without improvement before training stops.
    pub patience: usize,
    /// Chronological tail fraction of examples held out for validation.
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 250,
            min_delta: 0.0001,
            patience: 20,
            validation_fraction: 0.07,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return Err(NetError::InvalidTrainConfig(format!(
                "validation_fraction ({}) must lie strictly between 0 and 0.5",
                self.validation_fraction
            )));
        }
        if self.patience == 0 {
            return Err(NetError::InvalidTrainConfig(
                "patience must be at least 1".into(),
            ));
        }
        if !(self.min_delta >= 0.0) {
            return Err(NetError::InvalidTrainConfig(format!(
                "min_delta ({}) must be non-negative",
                self.min_delta
            )));
        }
        if self.max_epochs == 0 {
            return Err(NetError::InvalidTrainConfig(
                "max_epochs must be at least 1".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(NetError::InvalidTrainConfig(format!(
                "learning_rate ({}) must be finite and non-negative",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(NetError::InvalidTrainConfig(format!(
                    "{name} ({b}) must lie in [0, 1)"
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(NetError::InvalidTrainConfig(format!(
                "epsilon ({}) must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }
}
