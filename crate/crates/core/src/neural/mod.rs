//! LSTM-family regressors trained from scratch.
//!
//! Every architecture maps a window of `n_s` raw counts to the next value.
//! Windows are divided by their last element before entering the network
//! and the output is multiplied back, so the recursion in
//! [`crate::forecast`] stays on the raw scale.

mod adam;
pub mod checkpoint;
mod conv;
mod lstm;
mod network;
mod params;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamState};
pub use conv::{conv1d_forward, convlstm_cell_forward, maxpool1d, ConvLstmWeights};
pub use lstm::{lstm_cell_forward, LstmWeights};
pub use network::{mse_loss, NetworkModel, Scaler};
pub use params::{ParamSet, Tensor};
pub use train::{multi_init_train, select_best, train, TrainedNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Vanilla,
    Stacked,
    Bidirectional,
    CnnLstm,
    ConvLstm,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Vanilla,
        Architecture::Stacked,
        Architecture::Bidirectional,
        Architecture::CnnLstm,
        Architecture::ConvLstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Vanilla => "vanilla",
            Architecture::Stacked => "stacked",
            Architecture::Bidirectional => "bidirectional",
            Architecture::CnnLstm => "cnn_lstm",
            Architecture::ConvLstm => "conv_lstm",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown architecture {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub architecture: Architecture,
    /// Hidden units per LSTM layer (per direction for bidirectional).
    pub n_n: usize,
    /// Convolution filters (CNN-LSTM and ConvLSTM only).
    pub n_f: usize,
    /// Upper bound on the kernel width; clipped to the subsequence length.
    pub kernel_size: usize,
    /// Upper bound on the pool width; clipped to the conv output length.
    pub pool_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub n_s: usize,
}

impl NetworkConfig {
    /// Standard sizes: 100 units for the vanilla LSTM, 50 elsewhere, 64
    /// filters, Adam at 0.1, and 200 full-batch epochs.
    pub fn defaults(architecture: Architecture, n_s: usize) -> Self {
        let n_n = if architecture == Architecture::Vanilla {
            100
        } else {
            50
        };
        let kernel_size = if architecture == Architecture::ConvLstm {
            3
        } else {
            2
        };
        Self {
            architecture,
            n_n,
            n_f: 64,
            kernel_size,
            pool_size: 2,
            learning_rate: 0.1,
            epochs: 200,
            seed: 0,
            n_s,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_n", self.n_n),
            ("n_f", self.n_f),
            ("kernel_size", self.kernel_size),
            ("pool_size", self.pool_size),
            ("n_s", self.n_s),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_names_round_trip() {
        for a in Architecture::ALL {
            assert_eq!(a.name().parse::<Architecture>().unwrap(), a);
        }
        assert!("gru".parse::<Architecture>().is_err());
    }

    #[test]
    fn default_sizes() {
        let v = NetworkConfig::defaults(Architecture::Vanilla, 3);
        assert_eq!((v.n_n, v.n_f, v.learning_rate), (100, 64, 0.1));
        for a in &Architecture::ALL[1..] {
            assert_eq!(NetworkConfig::defaults(*a, 6).n_n, 50);
        }
        let mut bad = v.clone();
        bad.n_s = 0;
        assert!(bad.validate().is_err());
    }
}
