use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::coefficients::{check_spd, Tensor2};
use crate::pinn::Coefficient;
use crate::spline::CubicSpline;
use crate::{Error, Result};

/// How a homogenized coefficient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Neural,
    Reference,
    Exact,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Self::Neural => "neural",
            Self::Reference => "reference",
            Self::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "neural" => Ok(Self::Neural),
            "reference" => Ok(Self::Reference),
            "exact" => Ok(Self::Exact),
            _ => Err(Error::invalid(format!("unknown provenance {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HomogenizedPayload {
    Tensor(Tensor2),
    /// `a*(x)` samples, interpolated by a natural cubic spline.
    Field { xs: Vec<f64>, values: Vec<f64> },
    Reaction { diffusivity: f64, r_star: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedModel {
    pub payload: HomogenizedPayload,
    pub provenance: Provenance,
}

impl HomogenizedModel {
    pub fn tensor(t: Tensor2, provenance: Provenance) -> Result<Self> {
        Ok(Self {
            payload: HomogenizedPayload::Tensor(check_spd(t)?),
            provenance,
        })
    }

    pub fn field(xs: Vec<f64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::DegenerateModel(format!("a*(x) sample {v} is not positive")));
        }
        CubicSpline::natural(&xs, &values)?;
        Ok(Self {
            payload: HomogenizedPayload::Field { xs, values },
            provenance,
        })
    }

    pub fn reaction(diffusivity: f64, r_star: f64, provenance: Provenance) -> Result<Self> {
        if !(diffusivity.is_finite() && diffusivity > 0.0 && r_star.is_finite()) {
            return Err(Error::invalid(format!("invalid reaction model D = {diffusivity}, r* = {r_star}")));
        }
        Ok(Self {
            payload: HomogenizedPayload::Reaction { diffusivity, r_star },
            provenance,
        })
    }

    /// `a*(x)` as a 1D coefficient with its spline derivative.
    pub fn field_coefficient(&self) -> Result<Coefficient> {
        let HomogenizedPayload::Field { xs, values } = &self.payload else {
            return Err(Error::invalid("model does not hold a coefficient field"));
        };
        let s = Arc::new(CubicSpline::natural(xs, values)?);
        let s2 = s.clone();
        Ok(Coefficient::scalar_1d(move |x| s.eval(x).0, move |x| s2.eval(x).1))
    }
}
