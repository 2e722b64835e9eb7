//! Exact rational scalars, dense vectors and matrices, and exact elimination.
//!
//! Everything in the crate is computed over `Rational`; there is no floating
//! point anywhere outside the CSV writers.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Integer = BigInt;
pub type Rational = BigRational;
pub type RatVector = Vec<Rational>;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn big(value: impl Into<BigInt>) -> Rational {
    Rational::from_integer(value.into())
}

/// Parses `p/q` or `p`, canonicalizing sign and common factors.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let parsed = Rational::from_str(text).map_err(|_| Error::Parse(format!("bad rational `{text}`")))?;
    Ok(parsed)
}

pub fn parse_vector(items: &[String]) -> Result<RatVector> {
    items.iter().map(|s| parse_rational(s)).collect()
}

pub fn format_vector(v: &[Rational]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn dot_int(a: &[BigInt], b: &[BigInt]) -> BigInt {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(BigInt::zero(), |acc, (x, y)| acc + x * y)
}

pub fn to_rational_vec(v: &[BigInt]) -> RatVector {
    v.iter().cloned().map(Rational::from_integer).collect()
}

/// Dense row-major matrix with fixed shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds from explicit rows; every row must have `cols` entries.
    pub fn from_rows(cols: usize, rows: Vec<RatVector>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { rows: n, cols, data })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| int(v)).collect())
            .collect();
        Self::from_rows(cols, rows).expect("ragged integer matrix")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[Rational]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> RatVector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.data[i * self.cols + j] = value;
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<RatVector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(self.row_iter().map(|r| dot(r, x)).collect())
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Rows `idx` in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let data = idx.iter().flat_map(|&i| self.row(i).iter().cloned()).collect();
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rational;

    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.row_iter() {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Row-reduces `m` in place (Gauss–Jordan) and returns the pivot columns.
fn reduce(m: &mut [RatVector], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                let (pivot_row, row) = if i < r {
                    let (a, b) = m.split_at_mut(r);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = m.split_at_mut(i);
                    (&a[r], &mut b[0])
                };
                for (x, p) in row.iter_mut().zip(pivot_row) {
                    if !p.is_zero() {
                        *x -= &factor * p;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Exact solution of `a · x = b` for square `a`.
pub fn solve_square(a: &RatMatrix, b: &[Rational]) -> Result<RatVector> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let mut aug: Vec<RatVector> = a
        .row_iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.to_vec();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = reduce(&mut aug, n);
    if pivots.len() < n {
        return Err(Error::SingularMatrix);
    }
    Ok(aug.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

pub fn rank(a: &RatMatrix) -> usize {
    let mut rows: Vec<RatVector> = a.row_iter().map(<[Rational]>::to_vec).collect();
    reduce(&mut rows, a.cols()).len()
}

pub fn inverse(a: &RatMatrix) -> Result<RatMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    let mut aug: Vec<RatVector> = a
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.to_vec();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    if reduce(&mut aug, n).len() < n {
        return Err(Error::SingularMatrix);
    }
    let rows = aug.into_iter().map(|r| r[n..].to_vec()).collect();
    RatMatrix::from_rows(n, rows)
}

/// Fraction-free Gauss–Jordan on an integer square matrix.
///
/// Returns `(D, X)` with `D = ±det(a) ≠ 0` and `X = D · a⁻¹`, or `None` when
/// `a` is singular. Every intermediate entry is a minor of `[a | I]`, so all
/// divisions are exact.
pub fn int_scaled_inverse(a: &[Vec<BigInt>]) -> Option<(BigInt, Vec<Vec<BigInt>>)> {
    let n = a.len();
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            debug_assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
            r
        })
        .collect();
    let mut prev = BigInt::one();
    for k in 0..n {
        let p = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, p);
        let pivot_row = m[k].clone();
        let pivot = pivot_row[k].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let lead = row[k].clone();
            for (x, pk) in row.iter_mut().zip(&pivot_row) {
                let t = &pivot * &*x - &lead * pk;
                *x = t / &prev;
            }
        }
        prev = pivot;
    }
    let x = m.into_iter().map(|r| r[n..].to_vec()).collect();
    Some((prev, x))
}

pub fn int_rank(a: &[Vec<BigInt>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = a.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot_row = m[r].clone();
        let pivot = pivot_row[c].clone();
        for row in m.iter_mut().skip(r + 1) {
            let lead = row[c].clone();
            for (x, pk) in row.iter_mut().zip(&pivot_row) {
                let t = &pivot * &*x - &lead * pk;
                *x = t / &prev;
            }
        }
        prev = pivot;
        r += 1;
    }
    r
}

/// Positive integer multiple of `v` (denominators cleared, not reduced).
pub fn clear_denominators(v: &[Rational]) -> Vec<BigInt> {
    let scale = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| x.numer() * (&scale / x.denom())).collect()
}

/// Common-denominator form: `v = numers / denom` with `denom > 0`.
pub fn common_denominator(v: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let denom = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let numers = v.iter().map(|x| x.numer() * (&denom / x.denom())).collect();
    (numers, denom)
}

pub fn primitive_int(v: &[BigInt]) -> Result<Vec<BigInt>> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|x| x / &g).collect())
}

/// The coprime integer vector pointing the same way as `v`.
pub fn primitive(v: &[Rational]) -> Result<Vec<BigInt>> {
    primitive_int(&clear_denominators(v))
}

/// Decimal rendering rounded (half away from zero) to `sig` significant digits.
pub fn to_decimal(r: &Rational, sig: usize) -> String {
    let sig = sig.max(1);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let a = r.abs();
    let ten = BigInt::from(10);
    let pow10 = |e: i64| -> Rational {
        let p = num_traits::pow(ten.clone(), e.unsigned_abs() as usize);
        if e >= 0 {
            Rational::from_integer(p)
        } else {
            Rational::new(BigInt::one(), p)
        }
    };
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    while a < pow10(e) {
        e -= 1;
    }
    while a >= pow10(e + 1) {
        e += 1;
    }
    let shift = sig as i64 - 1 - e;
    let scaled = &a * pow10(shift);
    let mut q = (scaled + rat(1, 2)).floor().to_integer();
    let mut shift = shift;
    if q.to_string().len() > sig {
        q /= &ten;
        shift -= 1;
    }
    let digits = q.to_string();
    let body = if shift <= 0 {
        format!("{digits}{}", "0".repeat((-shift) as usize))
    } else {
        let shift = shift as usize;
        let padded = if digits.len() <= shift {
            format!("{}{digits}", "0".repeat(shift - digits.len() + 1))
        } else {
            digits
        };
        let (int_part, frac) = padded.split_at(padded.len() - shift);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let id = RatMatrix::identity(2);
        assert_eq!(solve_square(&id, &[int(3), int(-2)]).unwrap(), vec![int(3), int(-2)]);
        let diag = RatMatrix::from_i64(&[&[2, 0], &[0, 4]]);
        assert_eq!(solve_square(&diag, &[int(1), int(1)]).unwrap(), vec![rat(1, 2), rat(1, 4)]);
    }

    #[test]
    fn solve_singular() {
        let a = RatMatrix::from_i64(&[&[1, 1], &[1, 1]]);
        assert_eq!(solve_square(&a, &[int(0), int(1)]), Err(Error::SingularMatrix));
    }

    #[test]
    fn solve_rejects_non_square() {
        let a = RatMatrix::zeros(2, 3);
        assert!(matches!(solve_square(&a, &[int(0), int(0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ranks() {
        assert_eq!(rank(&RatMatrix::zeros(3, 3)), 0);
        assert_eq!(rank(&RatMatrix::identity(4)), 4);
        assert_eq!(rank(&RatMatrix::from_i64(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(int_rank(&[ints(&[1, 2]), ints(&[2, 4])]), 1);
        assert_eq!(int_rank(&[ints(&[0, 1, 0]), ints(&[0, 0, 1]), ints(&[0, 1, 1])]), 2);
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(primitive(&[rat(1, 3), rat(-2, 9)]).unwrap(), ints(&[3, -2]));
        assert_eq!(primitive(&[int(2), int(4)]).unwrap(), ints(&[1, 2]));
        assert_eq!(primitive(&[int(0), int(0)]), Err(Error::ZeroVector));
        assert_eq!(primitive(&[int(-4), int(0)]).unwrap(), ints(&[-1, 0]));
    }

    #[test]
    fn rational_text_form() {
        assert_eq!(rat(6, -4).to_string(), "-3/2");
        assert_eq!(rat(8, 4).to_string(), "2");
        assert_eq!(parse_rational(" -3/2 ").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert!(parse_rational("1/0x").is_err());
    }

    #[test]
    fn decimals() {
        assert_eq!(to_decimal(&rat(1, 3), 12), "0.333333333333");
        assert_eq!(to_decimal(&rat(-44, 225), 12), "-0.195555555556");
        assert_eq!(to_decimal(&rat(2, 3), 3), "0.667");
        assert_eq!(to_decimal(&int(12345), 3), "12300");
        assert_eq!(to_decimal(&rat(999, 1000), 2), "1");
        assert_eq!(to_decimal(&rat(1, 150), 4), "0.006667");
        assert_eq!(to_decimal(&int(0), 5), "0");
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
        proptest::collection::vec(proptest::collection::vec(-6i64..=6, n), n)
    }

    proptest! {
        #[test]
        fn solve_recovers_x(rows in small_matrix(4), x in proptest::collection::vec(-20i64..=20, 4)) {
            let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
            let a = RatMatrix::from_i64(&refs);
            let x: RatVector = x.into_iter().map(int).collect();
            let b = a.mul_vec(&x).unwrap();
            match solve_square(&a, &b) {
                Ok(sol) => prop_assert_eq!(sol, x),
                Err(e) => {
                    prop_assert_eq!(e, Error::SingularMatrix);
                    prop_assert!(rank(&a) < 4);
                }
            }
        }

        #[test]
        fn fraction_free_inverse_matches_rational(rows in small_matrix(4)) {
            let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
            let a = RatMatrix::from_i64(&refs);
            let int_rows: Vec<Vec<BigInt>> = rows.iter().map(|r| ints(r)).collect();
            prop_assert_eq!(int_rank(&int_rows), rank(&a));
            match (inverse(&a), int_scaled_inverse(&int_rows)) {
                (Ok(inv), Some((det, x))) => {
                    for i in 0..4 {
                        for j in 0..4 {
                            prop_assert_eq!(&inv[(i, j)] * big(det.clone()), big(x[i][j].clone()));
                        }
                    }
                }
                (Err(_), None) => {}
                (l, r) => prop_assert!(false, "disagree: {:?} vs {:?}", l.is_ok(), r.is_some()),
            }
        }

        #[test]
        fn primitive_is_scale_invariant(v in proptest::collection::vec(-30i64..=30, 3), p in 1i64..50, q in 1i64..50) {
            prop_assume!(v.iter().any(|&x| x != 0));
            let v: RatVector = v.into_iter().map(int).collect();
            let scaled: RatVector = v.iter().map(|x| x * rat(p, q)).collect();
            prop_assert_eq!(primitive(&scaled).unwrap(), primitive(&v).unwrap());
        }

        #[test]
        fn addition_is_exact(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            let x = rat(a, b);
            let y = rat(c, d);
            prop_assert_eq!((&x + &y) - &y, x);
        }
    }
}
