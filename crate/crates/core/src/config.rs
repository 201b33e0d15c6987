//! JSON problem descriptions.
//!
//! ```json
//! {
//!   "dimension": 1, "half_width": 3.141592653589793, "points": 128,
//!   "extension": "periodic",
//!   "alphas": ["a0"], "betas": ["b0"],
//!   "a": {"kind": "const", "value": 1.0},
//!   "b": [{"kind": "const", "value": 1.0}],
//!   "c": {"kind": "const", "value": 2.0},
//!   "f": {"kind": "sum", "terms": [
//!     {"kind": "sin", "amplitude": 1.0},
//!     {"kind": "sin", "amplitude": -3.0, "phase": 1.5707963267948966}
//!   ]}
//! }
//! ```
//!
//! Each coefficient is a descriptor shared by all control pairs, a nested
//! `[alpha][beta]` array of descriptors, or inline values `[alpha][beta][point]`.
//! The drift `b` is a list with one such source per component and defaults
//! to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainGeometry, Extension};
use crate::problem::{CoefficientField, ControlGrid, ProblemSpec};
use crate::scalar::Real;

fn one() -> f64 {
    1.0
}

fn unit_frequency() -> Vec<f64> {
    vec![1.0]
}

/// Closed-form coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Descriptor {
    Const {
        value: f64,
    },
    /// `offset + amplitude * sin(frequency . x + phase)`.
    Sin {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "unit_frequency")]
        frequency: Vec<f64>,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `intercept + slope . x`.
    Affine {
        slope: Vec<f64>,
        #[serde(default)]
        intercept: f64,
    },
    Sum {
        terms: Vec<Descriptor>,
    },
}

impl Descriptor {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let dot = |v: &[f64]| v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        match self {
            Descriptor::Const { value } => *value,
            Descriptor::Sin {
                amplitude,
                frequency,
                phase,
                offset,
            } => offset + amplitude * (dot(frequency) + phase).sin(),
            Descriptor::Affine { slope, intercept } => intercept + dot(slope),
            Descriptor::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    fn check(&self, dim: usize, field: &str) -> Result<()> {
        match self {
            Descriptor::Sin { frequency: v, .. } | Descriptor::Affine { slope: v, .. }
                if v.len() != dim =>
            {
                Err(Error::Config(format!(
                    "{field}: vector parameter has {} entries, dimension is {dim}",
                    v.len()
                )))
            }
            Descriptor::Sum { terms } => terms.iter().try_for_each(|t| t.check(dim, field)),
            _ => Ok(()),
        }
    }
}

/// Where the values of one coefficient come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    Shared(Descriptor),
    PerControl(Vec<Vec<Descriptor>>),
    Inline(Vec<Vec<Vec<f64>>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub half_width: f64,
    pub points: usize,
    pub extension: Extension,
    pub alphas: Vec<String>,
    pub betas: Vec<String>,
    pub a: Source,
    #[serde(default)]
    pub b: Vec<Source>,
    pub c: Source,
    pub f: Source,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn geometry<T: Real>(&self) -> Result<DomainGeometry<T>> {
        DomainGeometry::new(
            self.dimension,
            T::lit(self.half_width),
            self.points,
            self.extension,
        )
    }

    /// Tabulates every coefficient on the grid.
    pub fn build<T: Real>(&self) -> Result<ProblemSpec<T>> {
        let geometry = self.geometry::<T>()?;
        let controls = ControlGrid::new(self.alphas.clone(), self.betas.clone())?;
        let a = tabulate(&self.a, "a", &geometry, &controls)?;
        let c = tabulate(&self.c, "c", &geometry, &controls)?;
        let f = tabulate(&self.f, "f", &geometry, &controls)?;
        let dim = geometry.dimension();
        let b = if self.b.is_empty() {
            vec![vec![T::zero(); geometry.len() * controls.n_pairs()]; dim]
        } else if self.b.len() != dim {
            return Err(Error::Config(format!(
                "b: {} components given, dimension is {dim}",
                self.b.len()
            )));
        } else {
            self.b
                .iter()
                .enumerate()
                .map(|(k, s)| tabulate(s, &format!("b[{k}]"), &geometry, &controls))
                .collect::<Result<Vec<_>>>()?
        };
        let coefficients = CoefficientField::new(&controls, &geometry, a, b, c, f)?;
        ProblemSpec::new(geometry, controls, coefficients)
    }
}

fn tabulate<T: Real>(
    source: &Source,
    field: &str,
    geometry: &DomainGeometry<T>,
    controls: &ControlGrid,
) -> Result<Vec<T>> {
    let len = geometry.len();
    let (na, nb) = (controls.n_alpha(), controls.n_beta());
    let points: Vec<[f64; 2]> = (0..len)
        .map(|i| {
            let p = geometry.point(i);
            [p[0].to_f64_lossy(), p[1].to_f64_lossy()]
        })
        .collect();
    let mut out = Vec::with_capacity(len * na * nb);
    let shape_error = |what: &str, expected: usize, found: usize| Error::IncompleteTable {
        field: format!("{field}{what}"),
        expected,
        found,
    };
    match source {
        Source::Shared(d) => {
            d.check(geometry.dimension(), field)?;
            let vals: Vec<T> = points.iter().map(|&x| T::lit(d.eval(x))).collect();
            for _ in 0..na * nb {
                out.extend_from_slice(&vals);
            }
        }
        Source::PerControl(rows) => {
            if rows.len() != na {
                return Err(shape_error("", na, rows.len()));
            }
            for (ai, row) in rows.iter().enumerate() {
                if row.len() != nb {
                    return Err(shape_error(&format!("[{ai}]"), nb, row.len()));
                }
                for d in row {
                    d.check(geometry.dimension(), field)?;
                    out.extend(points.iter().map(|&x| T::lit(d.eval(x))));
                }
            }
        }
        Source::Inline(rows) => {
            if rows.len() != na {
                return Err(shape_error("", na, rows.len()));
            }
            for (ai, row) in rows.iter().enumerate() {
                if row.len() != nb {
                    return Err(shape_error(&format!("[{ai}]"), nb, row.len()));
                }
                for (bi, vals) in row.iter().enumerate() {
                    if vals.len() != len {
                        return Err(shape_error(&format!("[{ai}][{bi}]"), len, vals.len()));
                    }
                    out.extend(vals.iter().map(|&v| T::lit(v)));
                }
            }
        }
    }
    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            field: field.into(),
            index,
        });
    }
    Ok(out)
}
