//! Deformed products `(P, φ) ⋈ (V, W)` in both representations.
//!
//! Over a point `p` of the base the fibre is the polygon interpolated
//! between `V` (at `φ(p) = 0`) and `W` (at `φ(p) = 1`), so the product is
//! combinatorially `P × V` while its fibres tilt with `φ`.

use std::collections::HashSet;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactla::{dot, RatMatrix, RatVector, Rational};
use crate::polytope::HPolytope;

/// The linear functional `x ↦ c·x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Functional {
    pub coeffs: RatVector,
}

impl Functional {
    pub fn new(coeffs: RatVector) -> Self {
        Self { coeffs }
    }

    /// The coordinate functional `x ↦ x[index]` on `R^dim`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); dim];
        coeffs[index] = Rational::from_integer(1.into());
        Self { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(dot(&self.coeffs, x))
    }
}

/// Rows `[A | 0] ≤ α` followed by `[(β − β')·cᵀ | B] ≤ β`.
pub fn dp_hrep(
    p: &HPolytope,
    phi: &Functional,
    b: &RatMatrix,
    beta: &[Rational],
    beta_prime: &[Rational],
    level_tag: &str,
) -> Result<HPolytope> {
    let d = p.dim();
    let r = b.cols();
    if phi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: phi.dim(),
        });
    }
    for len in [beta.len(), beta_prime.len()] {
        if len != b.rows() {
            return Err(Error::DimensionMismatch {
                expected: b.rows(),
                found: len,
            });
        }
    }
    let mut rows = Vec::with_capacity(p.num_facets() + b.rows());
    let mut rhs = Vec::with_capacity(rows.capacity());
    let mut labels = Vec::with_capacity(rows.capacity());
    for (i, row) in p.a().row_iter().enumerate() {
        let mut full = row.to_vec();
        full.extend(std::iter::repeat_n(Rational::zero(), r));
        rows.push(full);
        rhs.push(p.b()[i].clone());
        labels.push(p.labels()[i].clone());
    }
    for (k, brow) in b.row_iter().enumerate() {
        let gap = &beta[k] - &beta_prime[k];
        let mut full: RatVector = phi.coeffs.iter().map(|c| &gap * c).collect();
        full.extend(brow.iter().cloned());
        rows.push(full);
        rhs.push(beta[k].clone());
        labels.push(format!("{level_tag} fibre row {k}"));
    }
    HPolytope::new(RatMatrix::from_rows(d + r, rows)?, rhs, labels)
}

/// Every `(p; v_j + φ(p)·(w_j − v_j))`, base-major.
pub fn dp_vrep(
    p_verts: &[RatVector],
    phi: &Functional,
    v_verts: &[RatVector],
    w_verts: &[RatVector],
) -> Result<Vec<RatVector>> {
    if v_verts.len() != w_verts.len() {
        return Err(Error::SizeMismatch {
            left: v_verts.len(),
            right: w_verts.len(),
        });
    }
    let mut out = Vec::with_capacity(p_verts.len() * v_verts.len());
    for p in p_verts {
        let t = phi.eval(p)?;
        for (v, w) in v_verts.iter().zip(w_verts) {
            if v.len() != w.len() {
                return Err(Error::SizeMismatch {
                    left: v.len(),
                    right: w.len(),
                });
            }
            let mut point = p.clone();
            point.extend(v.iter().zip(w).map(|(a, b)| a + &t * (b - a)));
            out.push(point);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DpFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DpReport {
    pub expected_vertices: usize,
    pub generated: usize,
    pub facets: usize,
    pub failures: Vec<DpFailure>,
}

impl DpReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.generated == self.expected_vertices
    }
}

/// Checks that every generated point is a distinct simple vertex of `hrep`
/// and that there are exactly `expected` of them.
pub fn dp_verify(hrep: &HPolytope, vrep: &[RatVector], expected: usize) -> DpReport {
    let mut failures = Vec::new();
    if vrep.len() != expected {
        failures.push(DpFailure {
            index: vrep.len(),
            reason: format!("expected {expected} points, got {}", vrep.len()),
        });
    }
    let mut seen = HashSet::with_capacity(vrep.len());
    for (i, x) in vrep.iter().enumerate() {
        if !seen.insert(x) {
            failures.push(DpFailure {
                index: i,
                reason: "duplicate point".into(),
            });
            continue;
        }
        match hrep.is_simple_vertex(x) {
            Ok(true) => {}
            Ok(false) => failures.push(DpFailure {
                index: i,
                reason: "feasible but not a simple vertex".into(),
            }),
            Err(e) => failures.push(DpFailure {
                index: i,
                reason: e.to_string(),
            }),
        }
    }
    DpReport {
        expected_vertices: expected,
        generated: vrep.len(),
        facets: hrep.num_facets(),
        failures,
    }
}
