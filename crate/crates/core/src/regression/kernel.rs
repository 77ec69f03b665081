//! Half-integer Matérn kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothness of a Matérn kernel. Only the closed-form half-integer cases are
/// supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl TryFrom<f64> for MaternNu {
    type Error = Error;

    fn try_from(nu: f64) -> Result<Self> {
        match nu {
            0.5 => Ok(MaternNu::Half),
            1.5 => Ok(MaternNu::ThreeHalves),
            2.5 => Ok(MaternNu::FiveHalves),
            other => Err(Error::InvalidConfig(format!(
                "unsupported Matérn smoothness nu = {other}; expected 0.5, 1.5 or 2.5"
            ))),
        }
    }
}

impl From<MaternNu> for f64 {
    fn from(nu: MaternNu) -> f64 {
        match nu {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

impl MaternNu {
    /// Unit-variance correlation at scaled lag `u = r / length_scale`.
    pub fn correlation(self, u: f64) -> f64 {
        match self {
            MaternNu::Half => (-u).exp(),
            MaternNu::ThreeHalves => {
                let s = 3f64.sqrt() * u;
                (1.0 + s) * (-s).exp()
            }
            MaternNu::FiveHalves => {
                let s = 5f64.sqrt() * u;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }

    /// Derivative of [`correlation`](Self::correlation) with respect to the
    /// log length scale, `-u * M'(u)`.
    pub fn dlog_length(self, u: f64) -> f64 {
        match self {
            MaternNu::Half => u * (-u).exp(),
            MaternNu::ThreeHalves => {
                let s = 3f64.sqrt() * u;
                s * s * (-s).exp()
            }
            MaternNu::FiveHalves => {
                let s = 5f64.sqrt() * u;
                s * s * (1.0 + s) / 3.0 * (-s).exp()
            }
        }
    }
}

/// `signal_variance * M_nu(r / length_scale)`.
pub fn matern_kernel(r: f64, nu: f64, length_scale: f64, signal_variance: f64) -> Result<f64> {
    let nu = MaternNu::try_from(nu)?;
    if r < 0.0 || length_scale <= 0.0 || signal_variance <= 0.0 {
        return Err(Error::Domain(format!(
            "kernel needs r >= 0 and positive parameters (r={r}, length_scale={length_scale}, signal_variance={signal_variance})"
        )));
    }
    Ok(signal_variance * nu.correlation(r / length_scale))
}
