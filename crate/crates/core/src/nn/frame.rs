use serde::{Deserialize, Serialize};

use crate::features::{Scaler, StateConfig};
use crate::{Error, Result};

/// What a model expects on its input side: the state layout it was trained
/// on and the standardization fit on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFrame {
    pub state: StateConfig,
    pub feature_layout: Vec<String>,
    pub scaler: Scaler,
}

impl InputFrame {
    pub fn new(state: StateConfig, scaler: Scaler) -> Self {
        InputFrame {
            feature_layout: state.layout(),
            state,
            scaler,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.feature_layout.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_count() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count(),
                got: x.len(),
            });
        }
        Ok(self.scaler.transform(x))
    }

    pub fn check(&self) -> Result<()> {
        let expected = self.state.layout();
        if expected != self.feature_layout {
            return Err(Error::LayoutMismatch(format!(
                "stored feature layout {:?} does not match the state configuration {:?}",
                self.feature_layout, expected
            )));
        }
        if self.scaler.means.len() != expected.len() || self.scaler.stds.len() != expected.len() {
            return Err(Error::DimensionInconsistency(format!(
                "scaler has {}/{} statistics for {} features",
                self.scaler.means.len(),
                self.scaler.stds.len(),
                expected.len()
            )));
        }
        if self
            .scaler
            .stds
            .iter()
            .chain([&self.scaler.target_std])
            .any(|s| !(*s > 0.0))
        {
            return Err(Error::DimensionInconsistency(
                "scaler standard deviations must be positive".into(),
            ));
        }
        Ok(())
    }
}
