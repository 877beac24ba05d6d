//! System files: JSON with every exact number written as a rational string.

use std::path::Path;

use num::traits::Zero;
use num::BigRational;
use serde::{Deserialize, Serialize};

use nfforge_core::integrability::{check_integrability, IntegrableSystem};
use nfforge_core::scalar::{parse_rational, rational_to_string};
use nfforge_core::series::Term;
use nfforge_core::{Exponent, Matrix, Scalar, TruncatedSeries, VectorFieldJet};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    /// Start radius of the conservation trajectories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locus_ygrid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub order: u32,
    pub linear_part: Vec<Vec<String>>,
    /// Terms of degree ≥ 2, one list per coordinate.
    #[serde(default)]
    pub terms: Vec<Vec<Term>>,
    #[serde(default)]
    pub first_integrals: Vec<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericSection>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedSystem {
    pub name: String,
    pub system: IntegrableSystem,
    pub numeric: NumericSection,
    pub warnings: Vec<String>,
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn series_from_terms(n: usize, order: u32, terms: &[Term], what: &str) -> Result<TruncatedSeries, CliError> {
    for t in terms {
        if t.exponents.len() != n {
            return Err(parse_err(format!("{what}: exponent {:?} has {} entries, expected {n}", t.exponents, t.exponents.len())));
        }
        let d: u32 = t.exponents.iter().sum();
        if d > order {
            return Err(parse_err(format!("{what}: term of degree {d} exceeds order {order}")));
        }
    }
    TruncatedSeries::from_term_list(n, order, terms).map_err(|e| parse_err(format!("{what}: {e}")))
}

impl SystemFile {
    pub fn to_system(&self) -> Result<(IntegrableSystem, Vec<String>), CliError> {
        let n = self.n;
        if n < 2 {
            return Err(parse_err("dimension must be at least 2"));
        }
        if self.order < 1 {
            return Err(parse_err("order must be at least 1"));
        }
        if self.linear_part.len() != n || self.linear_part.iter().any(|r| r.len() != n) {
            return Err(parse_err(format!("linear_part must be {n}×{n}")));
        }
        if !self.terms.is_empty() && self.terms.len() != n {
            return Err(parse_err(format!("terms has {} components, expected {n}", self.terms.len())));
        }
        let mut components = Vec::with_capacity(n);
        for i in 0..n {
            let mut c = TruncatedSeries::zero(n, self.order);
            for (j, lit) in self.linear_part[i].iter().enumerate() {
                let q = parse_rational(lit).map_err(|e| parse_err(format!("linear_part[{i}][{j}]: {e}")))?;
                c.add_term(Exponent::unit(n, j), Scalar::real(q));
            }
            if let Some(terms) = self.terms.get(i) {
                if let Some(t) = terms.iter().find(|t| t.exponents.iter().sum::<u32>() < 2) {
                    return Err(parse_err(format!("terms[{i}]: degree-{} term {:?} belongs in linear_part", t.exponents.iter().sum::<u32>(), t.exponents)));
                }
                let h = series_from_terms(n, self.order, terms, &format!("terms[{i}]"))?;
                c = &c + &h;
            }
            components.push(c);
        }
        let x = VectorFieldJet::new(components).map_err(|e| parse_err(e.to_string()))?;
        let integrals = self
            .first_integrals
            .iter()
            .enumerate()
            .map(|(i, t)| series_from_terms(n, self.order, t, &format!("first_integrals[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let system = IntegrableSystem::new_unchecked(x, integrals).map_err(|e| parse_err(e.to_string()))?;
        let mut warnings = Vec::new();
        match check_integrability(&system.x, &system.first_integrals) {
            Ok(c) if !c.integrable => warnings.push(format!(
                "first integrals are not conserved: X(F) has a term of degree {}",
                c.lowest_violation.unwrap_or(0)
            )),
            Ok(_) => {}
            Err(e) => warnings.push(format!("integrability check failed: {e}")),
        }
        Ok((system, warnings))
    }

    /// File form of a system; exact coefficients in lowest terms.
    pub fn from_system(name: Option<String>, sys: &IntegrableSystem, numeric: Option<NumericSection>) -> Self {
        let n = sys.dim();
        let a: &Matrix<Scalar> = sys.x.linear_part();
        let linear_part = (0..n)
            .map(|i| (0..n).map(|j| rational_to_string(a.get(i, j).re())).collect())
            .collect();
        let terms = sys.x.components().iter().map(|c| c.degree_range(2, sys.order()).to_terms()).collect();
        let first_integrals = sys.first_integrals.iter().map(|f| f.to_terms()).collect();
        SystemFile { name, n, order: sys.order(), linear_part, terms, first_integrals, numeric }
    }
}

pub fn parse_system_str(text: &str, default_name: &str) -> Result<LoadedSystem, CliError> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    if let Some(nums) = &file.numeric {
        for list in [&nums.radii, &nums.period_radii].into_iter().flatten() {
            if list.iter().any(|r| !(*r > 0.0)) {
                return Err(parse_err("radii must be positive"));
            }
        }
    }
    let (system, warnings) = file.to_system()?;
    Ok(LoadedSystem {
        name: file.name.clone().unwrap_or_else(|| default_name.to_string()),
        system,
        numeric: file.numeric.unwrap_or_default(),
        warnings,
    })
}

pub fn parse_system(path: &Path) -> Result<LoadedSystem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("system");
    parse_system_str(&text, stem)
}

pub fn rational_string(q: &BigRational) -> String {
    if q.is_zero() {
        "0".into()
    } else {
        rational_to_string(q)
    }
}
