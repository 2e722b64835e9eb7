//! Polytopes in H-representation `{x : A·x ≤ b}` and the vertex-local
//! machinery the active-set method needs: tight sets, edge rays at simple
//! vertices and the boundary ratio test.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exactla::{
    clear_denominators, common_denominator, dot_int, int_rank, int_scaled_inverse,
    parse_rational, primitive_int, RatMatrix, RatVector, Rational,
};

/// Sorted, duplicate-free facet indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TightSet(Vec<usize>);

impl TightSet {
    pub fn new(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Self(idx)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn insert(&mut self, i: usize) {
        if let Err(pos) = self.0.binary_search(&i) {
            self.0.insert(pos, i);
        }
    }

    pub fn remove(&mut self, i: usize) -> bool {
        match self.0.binary_search(&i) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn is_subset(&self, other: &TightSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn difference(&self, other: &TightSet) -> Vec<usize> {
        self.0.iter().copied().filter(|&i| !other.contains(i)).collect()
    }
}

/// One ray of the vertex cone: moving along `dir` leaves facet `leaving`
/// and stays on every other tight facet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeDirection {
    pub leaving: usize,
    pub dir: Vec<BigInt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepBound {
    Finite(Rational),
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioTest {
    pub mu_max: StepBound,
    pub blockers: TightSet,
}

/// `{x : A·x ≤ b}` with one provenance label per row.
#[derive(Clone, Debug)]
pub struct HPolytope {
    a: RatMatrix,
    b: RatVector,
    labels: Vec<String>,
    // Each row scaled by a positive integer so that `a_int·x ≤ b_int` is
    // the same halfspace with integer data.
    a_int: Vec<Vec<BigInt>>,
    b_int: Vec<BigInt>,
}

impl PartialEq for HPolytope {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.labels == other.labels
    }
}

impl HPolytope {
    pub fn new(a: RatMatrix, b: RatVector, labels: Vec<String>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: b.len(),
            });
        }
        if labels.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: labels.len(),
            });
        }
        if let Some(i) = a.row_iter().position(|r| r.iter().all(Zero::is_zero)) {
            return Err(Error::BadParameters(format!("row {i} of A is zero")));
        }
        let (a_int, b_int) = a
            .row_iter()
            .zip(&b)
            .map(|(row, rhs)| {
                let mut full = row.to_vec();
                full.push(rhs.clone());
                let mut ints = clear_denominators(&full);
                let rhs = ints.pop().unwrap();
                (ints, rhs)
            })
            .unzip();
        Ok(Self {
            a,
            b,
            labels,
            a_int,
            b_int,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn num_facets(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &RatMatrix {
        &self.a
    }

    pub fn b(&self) -> &[Rational] {
        &self.b
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub(crate) fn int_row(&self, i: usize) -> &[BigInt] {
        &self.a_int[i]
    }

    fn check_dim(&self, x: &[Rational]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Integer slacks `b_int·den − a_int·num` for `x = num/den`; each has
    /// the sign of the true slack.
    fn scaled_slacks(&self, x: &[Rational]) -> (Vec<BigInt>, Vec<BigInt>, BigInt) {
        let (num, den) = common_denominator(x);
        let slacks = self
            .a_int
            .iter()
            .zip(&self.b_int)
            .map(|(row, rhs)| rhs * &den - dot_int(row, &num))
            .collect();
        (slacks, num, den)
    }

    pub fn contains(&self, x: &[Rational]) -> Result<bool> {
        self.check_dim(x)?;
        let (slacks, _, _) = self.scaled_slacks(x);
        Ok(slacks.iter().all(|s| !s.is_negative()))
    }

    pub fn tight_set(&self, x: &[Rational]) -> Result<TightSet> {
        self.check_dim(x)?;
        let (slacks, _, _) = self.scaled_slacks(x);
        if slacks.iter().any(Signed::is_negative) {
            return Err(Error::NotFeasible);
        }
        Ok(TightSet(
            slacks
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_zero())
                .map(|(i, _)| i)
                .collect(),
        ))
    }

    pub fn is_simple_vertex(&self, x: &[Rational]) -> Result<bool> {
        let tight = self.tight_set(x)?;
        Ok(tight.len() == self.dim() && self.rows_rank(tight.indices()) == self.dim())
    }

    pub fn rows_rank(&self, idx: &[usize]) -> usize {
        let rows: Vec<Vec<BigInt>> = idx.iter().map(|&i| self.a_int[i].clone()).collect();
        int_rank(&rows)
    }

    /// The `d` edge rays at a simple vertex, one per tight facet, in facet order.
    pub fn edge_directions(&self, v: &[Rational]) -> Result<Vec<EdgeDirection>> {
        let tight = self.tight_set(v)?;
        let basis = VertexBasis::at(self, tight.indices().to_vec())?;
        basis.edge_directions()
    }

    pub fn ratio_test(&self, x: &[Rational], dir: &[Rational]) -> Result<RatioTest> {
        self.check_dim(x)?;
        self.check_dim(dir)?;
        if dir.iter().all(Zero::is_zero) {
            return Err(Error::ZeroDirection);
        }
        let (slacks, _, den) = self.scaled_slacks(x);
        if slacks.iter().any(Signed::is_negative) {
            return Err(Error::NotFeasible);
        }
        let (dnum, dden) = common_denominator(dir);
        let mut best: Option<Rational> = None;
        let mut blockers = Vec::new();
        for (i, (row, slack)) in self.a_int.iter().zip(&slacks).enumerate() {
            let rate = dot_int(row, &dnum);
            if !rate.is_positive() {
                continue;
            }
            let mu = Rational::new(slack * &dden, rate * &den);
            match &best {
                Some(b) if mu > *b => {}
                Some(b) if mu == *b => blockers.push(i),
                _ => {
                    best = Some(mu);
                    blockers = vec![i];
                }
            }
        }
        Ok(RatioTest {
            mu_max: best.map_or(StepBound::Unbounded, StepBound::Finite),
            blockers: TightSet(blockers),
        })
    }

    /// cdd `.ine` text. Labels travel as leading comment lines.
    pub fn to_cdd(&self) -> String {
        let mut out = String::new();
        for (i, label) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "* facet {i}: {label}");
        }
        out.push_str("H-representation\nbegin\n");
        let _ = writeln!(out, " {} {} rational", self.num_facets(), self.dim() + 1);
        for (row, rhs) in self.a.row_iter().zip(&self.b) {
            let mut cells = vec![rhs.to_string()];
            cells.extend(row.iter().map(|v| (-v).to_string()));
            let _ = writeln!(out, " {}", cells.join(" "));
        }
        out.push_str("end\n");
        out
    }

    pub fn from_cdd(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        let mut lines = text.lines().map(str::trim);
        let mut saw_header = false;
        for line in lines.by_ref() {
            if let Some(comment) = line.strip_prefix('*') {
                if let Some(rest) = comment.trim().strip_prefix("facet ") {
                    if let Some((_, label)) = rest.split_once(": ") {
                        labels.push(label.to_string());
                    }
                }
                continue;
            }
            if line == "H-representation" {
                saw_header = true;
            }
            if line == "begin" {
                break;
            }
        }
        if !saw_header {
            return Err(Error::Parse("missing `H-representation` header".into()));
        }
        let size = lines.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
        let fields: Vec<&str> = size.split_whitespace().collect();
        if fields.len() != 3 || fields[2] != "rational" && fields[2] != "integer" {
            return Err(Error::Parse(format!("bad size line `{size}`")));
        }
        let m: usize = fields[0].parse().map_err(|_| Error::Parse(format!("bad row count `{}`", fields[0])))?;
        let cols: usize = fields[1].parse().map_err(|_| Error::Parse(format!("bad column count `{}`", fields[1])))?;
        if cols < 2 {
            return Err(Error::Parse("need at least one variable".into()));
        }
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines.next().ok_or_else(|| Error::Parse("truncated row data".into()))?;
            let cells = line
                .split_whitespace()
                .map(parse_rational)
                .collect::<Result<Vec<_>>>()?;
            if cells.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: cells.len(),
                });
            }
            rhs.push(cells[0].clone());
            rows.push(cells[1..].iter().map(|v| -v).collect());
        }
        if lines.next() != Some("end") {
            return Err(Error::Parse("missing `end`".into()));
        }
        if labels.len() != m {
            labels = (0..m).map(|i| format!("row {i}")).collect();
        }
        Self::new(RatMatrix::from_rows(cols - 1, rows)?, rhs, labels)
    }
}

/// cdd `.ext` text for a list of points.
pub fn vertices_to_cdd(points: &[RatVector]) -> String {
    let dim = points.first().map_or(0, Vec::len);
    let mut out = String::from("V-representation\nbegin\n");
    let _ = writeln!(out, " {} {} rational", points.len(), dim + 1);
    for p in points {
        let mut cells = vec!["1".to_string()];
        cells.extend(p.iter().map(ToString::to_string));
        let _ = writeln!(out, " {}", cells.join(" "));
    }
    out.push_str("end\n");
    out
}

pub fn vertices_from_cdd(text: &str) -> Result<Vec<RatVector>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.starts_with('*'))
        .skip_while(|l| *l != "begin")
        .skip(1);
    let size = lines.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let fields: Vec<&str> = size.split_whitespace().collect();
    let m: usize = fields
        .first()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad size line `{size}`")))?;
    let mut points = Vec::with_capacity(m);
    for _ in 0..m {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated vertex data".into()))?;
        let cells = line
            .split_whitespace()
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        match cells.split_first() {
            Some((lead, rest)) if *lead == Rational::from_integer(1.into()) => points.push(rest.to_vec()),
            _ => return Err(Error::Parse(format!("not a vertex row `{line}`"))),
        }
    }
    Ok(points)
}

/// A simple vertex together with `D·A_T⁻¹` for its tight rows `T`.
///
/// Column `k` of the scaled inverse, negated by the sign of `D`, is the edge
/// ray that leaves `basis[k]`. Moving to a neighbouring vertex replaces one
/// basis row, and [`VertexBasis::pivot`] updates the inverse in place.
#[derive(Clone, Debug)]
pub struct VertexBasis {
    basis: Vec<usize>,
    // inverse of the integer-scaled tight rows, as rationals
    inv: Vec<Vec<Rational>>,
}

impl VertexBasis {
    pub fn at(p: &HPolytope, basis: Vec<usize>) -> Result<Self> {
        let d = p.dim();
        if basis.len() != d {
            return Err(Error::DegenerateVertex(format!(
                "{} tight facets in dimension {d}",
                basis.len()
            )));
        }
        let rows: Vec<Vec<BigInt>> = basis.iter().map(|&i| p.a_int[i].clone()).collect();
        let (det, x) = int_scaled_inverse(&rows)
            .ok_or_else(|| Error::DegenerateVertex("tight rows are linearly dependent".into()))?;
        let inv = x
            .into_iter()
            .map(|r| r.into_iter().map(|v| Rational::new(v, det.clone())).collect())
            .collect();
        Ok(Self { basis, inv })
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// Unnormalized ray leaving `basis[k]`: `-A_T⁻¹ e_k`.
    pub fn raw_direction(&self, k: usize) -> RatVector {
        self.inv.iter().map(|row| -&row[k]).collect()
    }

    pub fn direction(&self, k: usize) -> Result<Vec<BigInt>> {
        primitive_int(&clear_denominators(&self.raw_direction(k)))
    }

    pub fn edge_directions(&self) -> Result<Vec<EdgeDirection>> {
        let mut out: Vec<EdgeDirection> = (0..self.basis.len())
            .map(|k| {
                Ok(EdgeDirection {
                    leaving: self.basis[k],
                    dir: self.direction(k)?,
                })
            })
            .collect::<Result<_>>()?;
        out.sort_by_key(|e| e.leaving);
        Ok(out)
    }

    pub fn position(&self, facet: usize) -> Option<usize> {
        self.basis.iter().position(|&b| b == facet)
    }

    /// Replaces `basis[k]` with facet `enter` (product-form update).
    pub fn pivot(&mut self, p: &HPolytope, k: usize, enter: usize) -> Result<()> {
        let row = p.int_row(enter);
        let n = self.basis.len();
        // w = a_enter · A_T⁻¹
        let w: Vec<Rational> = (0..n)
            .map(|j| {
                self.inv.iter().zip(row).fold(Rational::zero(), |acc, (r, a)| {
                    if a.is_zero() {
                        acc
                    } else {
                        acc + &r[j] * a
                    }
                })
            })
            .collect();
        if w[k].is_zero() {
            return Err(Error::DegenerateVertex(format!("facet {enter} is parallel to the remaining tight facets")));
        }
        let wk = w[k].clone();
        for r in self.inv.iter_mut() {
            let pivot_col = &r[k] / &wk;
            for j in 0..n {
                if j != k && !w[j].is_zero() {
                    let t = &pivot_col * &w[j];
                    r[j] -= t;
                }
            }
            r[k] = pivot_col;
        }
        self.basis[k] = enter;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{int, rat, to_rational_vec};

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Rows: x1 ≥ 0, x2 ≥ 0, x1 ≤ 1, x2 ≤ 1.
    fn unit_square() -> HPolytope {
        let a = RatMatrix::from_i64(&[&[-1, 0], &[0, -1], &[1, 0], &[0, 1]]);
        let labels = ["x1>=0", "x2>=0", "x1<=1", "x2<=1"].map(String::from).to_vec();
        HPolytope::new(a, vec![int(0), int(0), int(1), int(1)], labels).unwrap()
    }

    #[test]
    fn contains_examples() {
        let sq = unit_square();
        assert!(sq.contains(&[rat(1, 2), rat(1, 2)]).unwrap());
        assert!(sq.contains(&[int(1), int(0)]).unwrap());
        assert!(!sq.contains(&[rat(3, 2), int(0)]).unwrap());
        assert!(matches!(sq.contains(&[int(0)]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tight_set_examples() {
        let sq = unit_square();
        assert!(sq.tight_set(&[rat(1, 2), rat(1, 2)]).unwrap().is_empty());
        assert_eq!(sq.tight_set(&[int(0), int(0)]).unwrap().indices(), &[0, 1]);
        assert_eq!(sq.tight_set(&[int(0), rat(1, 2)]).unwrap().len(), 1);
        assert_eq!(sq.tight_set(&[int(2), int(0)]), Err(Error::NotFeasible));
    }

    #[test]
    fn simple_vertex_examples() {
        let sq = unit_square();
        assert!(sq.is_simple_vertex(&[int(0), int(0)]).unwrap());
        assert!(!sq.is_simple_vertex(&[rat(1, 2), int(0)]).unwrap());
    }

    #[test]
    fn square_edges() {
        let sq = unit_square();
        let at_origin = sq.edge_directions(&[int(0), int(0)]).unwrap();
        assert_eq!(
            at_origin,
            vec![
                EdgeDirection { leaving: 0, dir: ints(&[1, 0]) },
                EdgeDirection { leaving: 1, dir: ints(&[0, 1]) },
            ]
        );
        let at_far = sq.edge_directions(&[int(1), int(1)]).unwrap();
        let dirs: Vec<_> = at_far.into_iter().map(|e| e.dir).collect();
        assert_eq!(dirs, vec![ints(&[-1, 0]), ints(&[0, -1])]);
        assert!(matches!(
            sq.edge_directions(&[rat(1, 2), int(0)]),
            Err(Error::DegenerateVertex(_))
        ));
    }

    #[test]
    fn ratio_tests() {
        let sq = unit_square();
        let r = sq.ratio_test(&[int(0), int(0)], &[int(1), int(0)]).unwrap();
        assert_eq!(r.mu_max, StepBound::Finite(int(1)));
        assert_eq!(r.blockers.indices(), &[2]);
        assert_eq!(sq.ratio_test(&[int(0), int(0)], &[int(0), int(0)]), Err(Error::ZeroDirection));

        let half = HPolytope::new(RatMatrix::from_i64(&[&[0, 1]]), vec![int(0)], vec!["x2<=0".into()]).unwrap();
        let r = half.ratio_test(&[int(0), int(0)], &[int(1), int(0)]).unwrap();
        assert_eq!(r.mu_max, StepBound::Unbounded);
        assert!(r.blockers.is_empty());
    }

    #[test]
    fn ratio_test_reports_ties() {
        let sq = unit_square();
        let r = sq.ratio_test(&[int(0), int(0)], &[int(1), int(1)]).unwrap();
        assert_eq!(r.mu_max, StepBound::Finite(int(1)));
        assert_eq!(r.blockers.indices(), &[2, 3]);
    }

    #[test]
    fn zero_row_rejected() {
        let a = RatMatrix::from_i64(&[&[0, 0]]);
        assert!(HPolytope::new(a, vec![int(1)], vec!["z".into()]).is_err());
    }

    #[test]
    fn cdd_round_trip() {
        let sq = unit_square();
        let text = sq.to_cdd();
        assert!(text.contains("H-representation\nbegin\n 4 3 rational\n 0 1 0\n"));
        assert_eq!(HPolytope::from_cdd(&text).unwrap(), sq);
        assert!(HPolytope::from_cdd("begin\nend\n").is_err());
    }

    #[test]
    fn vertex_file_round_trip() {
        let pts = vec![vec![int(0), rat(-2, 9)], vec![rat(1, 3), int(1)]];
        let text = vertices_to_cdd(&pts);
        assert!(text.starts_with("V-representation\nbegin\n 2 3 rational\n 1 0 -2/9\n"));
        assert_eq!(vertices_from_cdd(&text).unwrap(), pts);
    }

    #[test]
    fn pivot_matches_fresh_basis() {
        let sq = unit_square();
        let mut basis = VertexBasis::at(&sq, vec![0, 1]).unwrap();
        // leave x1 ≥ 0, enter x1 ≤ 1: vertex (1, 0)
        basis.pivot(&sq, 0, 2).unwrap();
        let fresh = VertexBasis::at(&sq, vec![2, 1]).unwrap();
        for k in 0..2 {
            assert_eq!(basis.direction(k).unwrap(), fresh.direction(k).unwrap());
        }
        assert_eq!(basis.raw_direction(0), to_rational_vec(&ints(&[-1, 0])));
    }
}
