//! Model definition files (TOML or JSON).
//!
//! ```toml
//! rho = 1.0
//! newtonian_N = 0.5
//!
//! [kernel]
//! type = "prony"
//! terms = [{ modulus = 1.0, rate = 1.0 }, { modulus = 2.0, rate = 3.0 }]
//! ```
//!
//! Other kernel types: `power_law` (`amplitude`, `alpha`),
//! `stretched_exponential` (`alpha`, `tau`), `zero`, and `sum`
//! (`components`, a list of kernels).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{MaterialModel, PronyTerm, RelaxationKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub modulus: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Prony { terms: Vec<TermSpec> },
    PowerLaw { amplitude: f64, alpha: f64 },
    StretchedExponential { alpha: f64, #[serde(default = "one")] tau: f64 },
    Zero,
    Sum { components: Vec<KernelSpec> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub rho: f64,
    #[serde(rename = "newtonian_N")]
    pub newtonian_n: f64,
    pub kernel: KernelSpec,
}

impl KernelSpec {
    fn build(&self) -> RelaxationKernel<f64> {
        match self {
            Self::Prony { terms } => RelaxationKernel::Prony(
                terms
                    .iter()
                    .map(|t| PronyTerm {
                        modulus: t.modulus,
                        rate: t.rate,
                    })
                    .collect(),
            ),
            Self::PowerLaw { amplitude, alpha } => RelaxationKernel::PowerLaw {
                amplitude: *amplitude,
                alpha: *alpha,
            },
            Self::StretchedExponential { alpha, tau } => RelaxationKernel::StretchedExponential {
                alpha: *alpha,
                tau: *tau,
            },
            Self::Zero => RelaxationKernel::Zero,
            Self::Sum { components } => RelaxationKernel::Sum(components.iter().map(Self::build).collect()),
        }
    }

    pub fn from_kernel(k: &RelaxationKernel<f64>) -> Self {
        match k {
            RelaxationKernel::Prony(terms) => Self::Prony {
                terms: terms
                    .iter()
                    .map(|t| TermSpec {
                        modulus: t.modulus,
                        rate: t.rate,
                    })
                    .collect(),
            },
            RelaxationKernel::PowerLaw { amplitude, alpha } => Self::PowerLaw {
                amplitude: *amplitude,
                alpha: *alpha,
            },
            RelaxationKernel::StretchedExponential { alpha, tau } => Self::StretchedExponential {
                alpha: *alpha,
                tau: *tau,
            },
            RelaxationKernel::Zero => Self::Zero,
            RelaxationKernel::Sum(parts) => Self::Sum {
                components: parts.iter().map(Self::from_kernel).collect(),
            },
        }
    }
}

impl ModelSpec {
    /// Validated model; parameter errors keep the message of the violated range.
    pub fn build(&self) -> Result<MaterialModel<f64>> {
        MaterialModel::new(self.rho, self.newtonian_n, self.kernel.build())
    }

    pub fn from_model(m: &MaterialModel<f64>) -> Self {
        Self {
            rho: m.rho(),
            newtonian_n: m.newtonian(),
            kernel: KernelSpec::from_kernel(m.kernel()),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses by extension (`.json`, anything else as TOML).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let spec = if is_json { Self::from_json(&text) } else { Self::from_toml(&text) };
        spec.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Single-line JSON echo used in provenance headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// Reads and validates a model file.
pub fn load_model(path: &Path) -> Result<MaterialModel<f64>> {
    ModelSpec::load(path)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_prony() {
        let spec = ModelSpec::from_toml(
            "rho = 1.0\nnewtonian_N = 0.5\n[kernel]\ntype = \"prony\"\nterms = [{ modulus = 1.0, rate = 2.0 }]\n",
        )
        .unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.newtonian(), 0.5);
        assert_eq!(m.kernel(), &RelaxationKernel::prony([(1.0, 2.0)]).unwrap());
    }

    #[test]
    fn json_sum_round_trip() {
        let text = r#"{"rho": 2, "newtonian_N": 0, "kernel": {"type": "sum", "components": [
            {"type": "power_law", "amplitude": 1, "alpha": 0.5},
            {"type": "stretched_exponential", "alpha": 0.3}]}}"#;
        let spec = ModelSpec::from_json(text).unwrap();
        let m = spec.build().unwrap();
        assert_eq!(ModelSpec::from_model(&m), spec);
        let again = ModelSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn out_of_range_parameters_name_the_invariant() {
        let spec = ModelSpec::from_toml("rho = 1\nnewtonian_N = 0\n[kernel]\ntype = \"power_law\"\namplitude = 1\nalpha = 1.5\n")
            .unwrap();
        let msg = spec.build().unwrap_err().to_string();
        assert!(msg.contains("alpha must lie in (0, 1)"), "{msg}");
        let spec = ModelSpec::from_toml("rho = -1\nnewtonian_N = 1\n[kernel]\ntype = \"zero\"\n").unwrap();
        assert!(spec.build().unwrap_err().to_string().contains("rho must be > 0"));
        let spec = ModelSpec::from_toml("rho = 1\nnewtonian_N = 0\n[kernel]\ntype = \"zero\"\n").unwrap();
        assert!(spec.build().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ModelSpec::from_toml("rho = 1\nnewtonian_N = 1\nextra = 2\n[kernel]\ntype = \"zero\"\n").is_err());
        assert!(ModelSpec::from_toml("rho = 1\nnewtonian_N = 1\n[kernel]\ntype = \"spline\"\n").is_err());
    }
}
