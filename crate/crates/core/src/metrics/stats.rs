use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and population standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
        })
    }

    /// Both values rounded to the two decimals shown in reports.
    pub fn rounded(self) -> MeanStd {
        MeanStd {
            mean: round2(self.mean),
            std: round2(self.std),
        }
    }
}

pub(crate) fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.rounded();
        write!(f, "{:.2} ± {:.2}", r.mean, r.std)
    }
}

impl FromStr for MeanStd {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("expected `mean ± std`, got `{s}`"));
        let (m, sd) = s.split_once('±').ok_or_else(bad)?;
        Ok(MeanStd {
            mean: m.trim().parse().map_err(|_| bad())?,
            std: sd.trim().parse().map_err(|_| bad())?,
        })
    }
}
