use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Part, PureState, SystemLayout};
use crate::error::{QsrError, Result};

/// Wire format of an explicit amplitude state (big-endian index order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub parts: Vec<Part>,
    #[serde(default)]
    pub env: Option<String>,
    #[serde(default)]
    pub env_factors: Option<Vec<usize>>,
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn from_state(state: &PureState) -> Self {
        let layout = state.layout();
        StateJson {
            parts: layout.parts().to_vec(),
            env: layout.env_index().map(|e| layout.parts()[e].label.clone()),
            env_factors: layout.env_factors().map(<[usize]>::to_vec),
            amplitudes: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn into_state(self) -> Result<PureState> {
        let env = match &self.env {
            Some(label) => Some(
                self.parts
                    .iter()
                    .position(|p| &p.label == label)
                    .ok_or_else(|| {
                        QsrError::Parse(format!("environment label {label} not among parts"))
                    })?,
            ),
            None => None,
        };
        let total = self
            .parts
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.dim))
            .ok_or_else(|| QsrError::Parse("total dimension overflows".into()))?;
        if self.amplitudes.len() != total {
            return Err(QsrError::Parse(format!(
                "{} amplitudes, but the parts multiply to {total}",
                self.amplitudes.len()
            )));
        }
        let layout = SystemLayout::new(self.parts, env, self.env_factors)?;
        let amps = self
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        PureState::new(layout, amps)
    }
}

/// Parses the JSON state format.
pub fn parse_state_json(text: &str) -> Result<PureState> {
    let raw: StateJson = serde_json::from_str(text).map_err(|e| QsrError::Parse(e.to_string()))?;
    raw.into_state()
}
