//! Polygons inscribed in the parabola `u₂ = u₁² − u₁`.
//!
//! The two families `V(M, N)` and `W(M, N)` share all edge slopes, which is
//! what lets them serve as the fibre pair of a deformed product.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactla::{big, primitive, RatMatrix, RatVector, Rational};

pub type Point2 = [Rational; 2];

/// The parabola point `(x, x² − x)`.
pub fn h(x: &Rational) -> Point2 {
    [x.clone(), x * x - x]
}

/// Slope of the segment `h(x) → h(y)`.
pub fn slope(x: &Rational, y: &Rational) -> Rational {
    x + y - Rational::one()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    V,
    W,
    /// `conv(V ∪ W)`, used for the base polygon.
    Merged,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::V => "V",
            Family::W => "W",
            Family::Merged => "V+W",
        };
        f.write_str(s)
    }
}

/// Points `h(x)` in strictly increasing order of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParabolaVertexList {
    pub m: u64,
    pub n: u64,
    pub family: Family,
    pub params: Vec<Rational>,
    pub points: Vec<Point2>,
}

impl ParabolaVertexList {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn vectors(&self) -> Vec<RatVector> {
        self.points.iter().map(|p| p.to_vec()).collect()
    }

    /// `conv(self ∪ other)` as a single sorted list.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut params: Vec<Rational> = self.params.iter().chain(&other.params).cloned().collect();
        params.sort();
        if let Some(i) = params.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::NotSorted(i + 1));
        }
        let points = params.iter().map(h).collect();
        Ok(Self {
            m: self.m,
            n: self.n,
            family: Family::Merged,
            params,
            points,
        })
    }
}

/// `V(M, N)` or `W(M, N)`; parameters have the common denominator `M·N − 1`.
pub fn build_family(m: u64, n: u64, family: Family) -> Result<ParabolaVertexList> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::BadParameters(format!("M = {m} must be an even integer ≥ 2")));
    }
    if n < 2 || n % 2 != 0 {
        return Err(Error::BadParameters(format!("N = {n} must be an even integer ≥ 2")));
    }
    let denom = m
        .checked_mul(n)
        .and_then(|mn| i64::try_from(mn - 1).ok())
        .ok_or_else(|| Error::BadParameters(format!("M·N overflows for M = {m}, N = {n}")))?;
    let (m, half) = (m as i64, (n / 2) as i64);
    let mut numers = Vec::with_capacity(n as usize);
    for j in 0..half {
        for l in 0..2i64 {
            let numer = match family {
                Family::V => 2 * m * (j + l) - l,
                Family::W => m * (2 * j + 1) - (1 - l),
                Family::Merged => {
                    return Err(Error::BadParameters("merged lists come from `merge`".into()))
                }
            };
            numers.push(numer);
        }
    }
    let params: Vec<Rational> = numers
        .into_iter()
        .map(|p| Rational::new(p.into(), denom.into()))
        .collect();
    let points = params.iter().map(h).collect();
    Ok(ParabolaVertexList {
        m: m as u64,
        n,
        family,
        params,
        points,
    })
}

/// Shared-normal inequality description of an inscribed polygon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolygonHrep {
    pub b: RatMatrix,
    pub beta: RatVector,
}

/// Lower edges left to right, then the closing chord from first to last.
///
/// A lower edge through `h(x), h(y)` reads `(x+y−1)·u₁ − u₂ ≤ x·y`; the chord
/// through `h(x₀), h(x_last)` reads `−(x₀+x_last−1)·u₁ + u₂ ≤ −x₀·x_last`.
pub fn polygon_hrep(verts: &ParabolaVertexList) -> Result<PolygonHrep> {
    let params = &verts.params;
    if params.len() < 3 || verts.points.len() != params.len() {
        return Err(Error::BadParameters(format!(
            "a polygon needs at least 3 vertices, got {}",
            verts.points.len()
        )));
    }
    for (i, (x, p)) in params.iter().zip(&verts.points).enumerate() {
        if *p != h(x) {
            return Err(Error::NotOnParabola(i));
        }
        if i > 0 && params[i - 1] >= *x {
            return Err(Error::NotSorted(i));
        }
    }
    let mut rows = Vec::with_capacity(params.len());
    let mut beta = Vec::with_capacity(params.len());
    for w in params.windows(2) {
        rows.push(vec![slope(&w[0], &w[1]), -Rational::one()]);
        beta.push(&w[0] * &w[1]);
    }
    let (first, last) = (&params[0], &params[params.len() - 1]);
    rows.push(vec![-slope(first, last), Rational::one()]);
    beta.push(-(first * last));
    Ok(PolygonHrep {
        b: RatMatrix::from_rows(2, rows)?,
        beta,
    })
}

/// Primitive integer row with the first nonzero entry positive.
fn normal_direction(row: &[Rational]) -> Result<Vec<BigInt>> {
    let mut p = primitive(row)?;
    if p.iter().find(|v| !v.is_zero()).is_some_and(Signed::is_negative) {
        p.iter_mut().for_each(|v| *v = -&*v);
    }
    Ok(p)
}

/// Whether `V` and `W` have row-for-row identical normal directions.
pub fn check_normally_equivalent(v: &ParabolaVertexList, w: &ParabolaVertexList) -> Result<bool> {
    if v.len() != w.len() {
        return Err(Error::SizeMismatch {
            left: v.len(),
            right: w.len(),
        });
    }
    if v.len() < 4 {
        return Err(Error::BadParameters(format!(
            "normal equivalence is only claimed for N ≥ 4, got {}",
            v.len()
        )));
    }
    let (hv, hw) = (polygon_hrep(v)?, polygon_hrep(w)?);
    for (rv, rw) in hv.b.row_iter().zip(hw.b.row_iter()) {
        if normal_direction(rv)? != normal_direction(rw)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// cdd `.ext` text for the polygon's vertices.
pub fn to_cdd_vertices(verts: &ParabolaVertexList) -> String {
    crate::polytope::vertices_to_cdd(&verts.vectors())
}

/// Parameters as integers over the shared denominator `M·N − 1`.
pub fn integer_params(verts: &ParabolaVertexList) -> Vec<BigInt> {
    let denom = big(BigInt::from(verts.m * verts.n - 1));
    verts
        .params
        .iter()
        .map(|x| (x * &denom).to_integer())
        .collect()
}

#[cfg(test)]
pub(crate) fn quadrilateral() -> ParabolaVertexList {
    let v = build_family(2, 2, Family::V).unwrap();
    let w = build_family(2, 2, Family::W).unwrap();
    v.merge(&w).unwrap()
}
