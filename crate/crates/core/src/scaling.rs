//! Accuracy scalings applied before trend fitting.
//!
//! Each scaling is a [`Scaling`] strategy registered by name in
//! [`scalings()`]; [`ScalingKind`] is the serializable handle stored in fits.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use crate::data::Accuracy;
use crate::error::{Error, Result};
use crate::normal::{norm_cdf, norm_inv_cdf};
use crate::registry::{Named, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScalingKind {
    Linear,
    Probit,
    #[default]
    Logit,
}

impl ScalingKind {
    pub const ALL: [ScalingKind; 3] = [ScalingKind::Linear, ScalingKind::Probit, ScalingKind::Logit];

    pub fn as_str(self) -> &'static str {
        match self {
            ScalingKind::Linear => "linear",
            ScalingKind::Probit => "probit",
            ScalingKind::Logit => "logit",
        }
    }

    pub fn strategy(self) -> Arc<dyn Scaling> {
        scalings().get(self.as_str()).expect("built-in scaling is registered")
    }
}

impl fmt::Display for ScalingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(scalings().get(s)?.kind())
    }
}

/// A monotone map from accuracy space onto the real line (or a subset).
pub trait Scaling: Named + Send + Sync {
    fn kind(&self) -> ScalingKind;

    /// Whether `a` lies in the scaling's domain.
    fn accepts(&self, a: Accuracy) -> bool;

    fn forward_unchecked(&self, a: f64) -> f64;

    fn inverse_unchecked(&self, x: f64) -> f64;

    fn forward(&self, a: Accuracy) -> Result<f64> {
        if self.accepts(a) {
            Ok(self.forward_unchecked(a.value()))
        } else {
            Err(Error::Domain {
                value: a.value(),
                scaling: self.name(),
            })
        }
    }

    fn inverse(&self, x: f64) -> Result<Accuracy> {
        let a = self.inverse_unchecked(x);
        Accuracy::new(a).map_err(|_| Error::Domain {
            value: x,
            scaling: self.name(),
        })
    }
}

pub struct Linear;
pub struct Probit;
pub struct Logit;

impl Named for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }
    fn description(&self) -> &'static str {
        "identity on [0, 1]"
    }
}

impl Scaling for Linear {
    fn kind(&self) -> ScalingKind {
        ScalingKind::Linear
    }
    fn accepts(&self, _a: Accuracy) -> bool {
        true
    }
    fn forward_unchecked(&self, a: f64) -> f64 {
        a
    }
    fn inverse_unchecked(&self, x: f64) -> f64 {
        x
    }
}

impl Named for Probit {
    fn name(&self) -> &'static str {
        "probit"
    }
    fn description(&self) -> &'static str {
        "inverse standard normal CDF"
    }
}

impl Scaling for Probit {
    fn kind(&self) -> ScalingKind {
        ScalingKind::Probit
    }
    fn accepts(&self, a: Accuracy) -> bool {
        a.is_interior()
    }
    fn forward_unchecked(&self, a: f64) -> f64 {
        norm_inv_cdf(a)
    }
    fn inverse_unchecked(&self, x: f64) -> f64 {
        norm_cdf(x)
    }
}

impl Named for Logit {
    fn name(&self) -> &'static str {
        "logit"
    }
    fn description(&self) -> &'static str {
        "log-odds ln(a / (1 - a))"
    }
}

impl Scaling for Logit {
    fn kind(&self) -> ScalingKind {
        ScalingKind::Logit
    }
    fn accepts(&self, a: Accuracy) -> bool {
        a.is_interior()
    }
    fn forward_unchecked(&self, a: f64) -> f64 {
        (a / (1.0 - a)).ln()
    }
    fn inverse_unchecked(&self, x: f64) -> f64 {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    }
}

static SCALINGS: LazyLock<Registry<dyn Scaling>> = LazyLock::new(|| {
    Registry::<dyn Scaling>::new("scaling")
        .with(Arc::new(Linear))
        .with(Arc::new(Probit))
        .with(Arc::new(Logit))
});

pub fn scalings() -> &'static Registry<dyn Scaling> {
    &SCALINGS
}

pub fn scale(a: Accuracy, kind: ScalingKind) -> Result<f64> {
    kind.strategy().forward(a)
}

/// Inverse of [`scale`]. Logit and probit map every finite real into `[0, 1]`
/// (saturating at the ends); linear rejects values outside `[0, 1]`.
pub fn unscale(x: f64, kind: ScalingKind) -> Result<Accuracy> {
    kind.strategy().inverse(x)
}
