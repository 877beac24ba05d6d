use serde::Serialize;

use crate::error::NumericError;

use super::bracketed_root;
use super::field::{norm, NumericField};

/// Field norms on the locus above this count as a violation.
pub const DEFAULT_LOCUS_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocusPoint {
    pub y: f64,
    pub x: f64,
    pub field_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocusScan {
    pub points: Vec<LocusPoint>,
    pub max_field_norm: f64,
    /// Largest second divided difference of `x(y)` over consecutive triples.
    pub max_second_difference: f64,
    pub tolerance: f64,
    pub violation: bool,
}

/// For each `y`, the zero of the `∂/∂x` component inside the cone `|x| ≤ |y|`.
pub fn singular_locus_scan_2d(f: &NumericField, ygrid: &[f64], tolerance: f64) -> Result<LocusScan, NumericError> {
    if f.dim() != 2 {
        return Err(NumericError::InvalidInput("locus scan needs a planar field".into()));
    }
    let g = |x: f64, y: f64| f.eval_vec(&[x, y])[0];
    let mut points = Vec::with_capacity(ygrid.len());
    for &y in ygrid {
        let x = if y == 0.0 {
            if g(0.0, 0.0) == 0.0 {
                0.0
            } else {
                return Err(NumericError::RootNotBracketed { y });
            }
        } else {
            let w = y.abs();
            bracketed_root(|x| g(x, y), -w, w, 1e-15 * w).ok_or(NumericError::RootNotBracketed { y })?
        };
        points.push(LocusPoint { y, x, field_norm: norm(&f.eval_vec(&[x, y])) });
    }
    let max_field_norm = points.iter().map(|p| p.field_norm).fold(0.0, f64::max);
    let max_second_difference = points
        .windows(3)
        .filter_map(|w| {
            let (a, b, c) = (&w[0], &w[1], &w[2]);
            let d1 = (b.x - a.x) / (b.y - a.y);
            let d2 = (c.x - b.x) / (c.y - b.y);
            let dd = 2.0 * (d2 - d1) / (c.y - a.y);
            dd.is_finite().then_some(dd.abs())
        })
        .fold(0.0, f64::max);
    Ok(LocusScan { points, max_field_norm, max_second_difference, tolerance, violation: max_field_norm > tolerance })
}
