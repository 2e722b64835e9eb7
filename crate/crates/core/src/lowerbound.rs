//! Certificates and experiments for the exponential lower bound.
//!
//! On the projection the objective reads `f(x) = x₁² − c·x₁ − x₂`, and from
//! the vertex `x⁽ᵗ⁾` only the step to `x⁽ᵗ⁺¹⁾` improves it. The chord scan
//! checks that on the parabola points, the path certificate checks it on the
//! edges of the extended formulation itself.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::activeset::{active_set_run, pullback_objective, QuadraticObjective, RuleSpec, Termination};
use crate::error::{Error, Result};
use crate::exactla::{format_vector, to_rational_vec, RatVector, Rational};
use crate::extension::{build, ConstructionParams, ExtendedParabola};
use crate::polygons::Point2;
use crate::polytope::StepBound;

pub const DEFAULT_SCAN_CAP: u64 = 1 << 12;

/// `(1/(M−1))·(t, t²/(M−1) − t)`.
pub fn projected_vertex(m: u64, t: u64) -> Result<Point2> {
    if m < 2 || t >= m {
        return Err(Error::OutOfRange(format!("t = {t} with M = {m}")));
    }
    let x = Rational::new(t.into(), (m - 1).into());
    let y = &x * &x - &x;
    Ok([x, y])
}

/// Both sides of the chord identity in the integer type `T`: the closed
/// form `k(3/2 − k)/(M−1)²` and the dot product of the projected gradient
/// `(2x₁ + (3/2)/(M−1) − 1, −1)` with `x⁽ᵗ⁺ᵏ⁾ − x⁽ᵗ⁾`.
fn chord_both<T>(m: i64, t: i64, k: i64) -> (Ratio<T>, Ratio<T>)
where
    T: Clone + Integer + Signed + From<i64>,
{
    let m1 = m - 1;
    let closed = Ratio::new(T::from(k) * T::from(3 - 2 * k), T::from(2) * T::from(m1) * T::from(m1));
    let point = |s: i64| {
        let x = Ratio::new(T::from(s), T::from(m1));
        let y = x.clone() * x.clone() - x.clone();
        (x, y)
    };
    let (x1, x2) = point(t);
    let (y1, y2) = point(t + k);
    let g1 = Ratio::from_integer(T::from(2)) * x1.clone() + Ratio::new(T::from(3), T::from(2 * m1))
        - Ratio::from_integer(T::from(1));
    let direct = g1 * (y1 - x1) - (y2 - x2);
    (closed, direct)
}

fn check_pair(m: u64, t: u64, k: i64) -> Result<()> {
    if m < 2 || t >= m || k == 0 {
        return Err(Error::OutOfRange(format!("(M, t, k) = ({m}, {t}, {k})")));
    }
    let end = t as i128 + k as i128;
    if end < 0 || end >= m as i128 {
        return Err(Error::OutOfRange(format!("t + k = {end} outside 0..{m}")));
    }
    Ok(())
}

/// `∇f(x⁽ᵗ⁾)·(x⁽ᵗ⁺ᵏ⁾ − x⁽ᵗ⁾)`, computed in closed form and directly.
pub fn chord_inner_product(m: u64, t: u64, k: i64) -> Result<Rational> {
    check_pair(m, t, k)?;
    if m > i64::MAX as u64 / 4 {
        return Err(Error::OutOfRange(format!("M = {m}")));
    }
    let (closed, direct) = chord_both::<BigInt>(m as i64, t as i64, k);
    if closed != direct {
        return Err(Error::InternalMismatch(format!(
            "chord ({t}, {k}): closed form {closed} but dot product {direct}"
        )));
    }
    Ok(closed)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChordViolation {
    pub t: u64,
    pub k: i64,
    pub inner_product: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChordScanReport {
    #[serde(rename = "M")]
    pub m: u64,
    pub pairs_checked: u64,
    /// Pairs checked from the optimal vertex `t = M − 1`.
    pub optimal_checks: u64,
    pub violations: Vec<ChordViolation>,
    /// Pairs where the closed form and the dot product disagree.
    pub mismatches: Vec<ChordViolation>,
}

impl ChordScanReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.mismatches.is_empty()
    }

    fn merge(mut self, other: Self) -> Self {
        self.pairs_checked += other.pairs_checked;
        self.optimal_checks += other.optimal_checks;
        self.violations.extend(other.violations);
        self.mismatches.extend(other.mismatches);
        self
    }
}

/// Both sides of the chord identity scaled by `2(M−1)²`, from the scaled
/// coordinates `(M−1)·x₁ = s`, `(M−1)²·x₂ = s² − s(M−1)` and the scaled
/// gradient `2(M−1)·g₁ = 4t + 3 − 2(M−1)`, `g₂ = −1`.
fn chord_scaled<T>(m: i64, t: i64, k: i64) -> (T, T)
where
    T: Clone + Integer + Signed + From<i64>,
{
    let m1 = T::from(m - 1);
    let two = T::from(2);
    let closed = T::from(k) * T::from(3 - 2 * k);
    let x1 = |s: i64| T::from(s);
    let x2 = |s: i64| T::from(s) * T::from(s) - T::from(s) * m1.clone();
    let g1 = T::from(4 * t + 3) - two.clone() * m1.clone();
    let direct = g1 * (x1(t + k) - x1(t)) - two * (x2(t + k) - x2(t));
    (closed, direct)
}

fn scan_row<T>(m: u64, t: u64) -> ChordScanReport
where
    T: Clone + Integer + Signed + From<i64>,
{
    let mut row = ChordScanReport {
        m,
        ..Default::default()
    };
    let optimal = t == m - 1;
    for end in 0..m {
        if end == t {
            continue;
        }
        let k = end as i64 - t as i64;
        let (closed, direct) = chord_scaled::<T>(m as i64, t as i64, k);
        row.pairs_checked += 1;
        if optimal {
            row.optimal_checks += 1;
        }
        let record = || ChordViolation {
            t,
            k,
            inner_product: chord_inner_product(m, t, k)
                .map_or_else(|e| e.to_string(), |v| v.to_string()),
        };
        if closed != direct {
            row.mismatches.push(ChordViolation {
                inner_product: String::new(),
                ..record()
            });
        }
        let improving = direct.is_positive();
        let expected = !optimal && k == 1;
        if improving != expected {
            row.violations.push(record());
        }
    }
    row
}

/// Every `(t, k)` with `0 ≤ t, t + k ≤ M − 1` and `k ≠ 0`: `k = 1` must be the
/// only improving chord for `t < M − 1` and none may improve at `t = M − 1`.
///
/// Values are compared exactly after scaling by the positive common
/// denominator `2(M−1)²`; fixed-width integers are used only while every
/// intermediate product provably fits.
pub fn chord_scan(m: u64, cap: u64) -> Result<ChordScanReport> {
    if m < 2 {
        return Err(Error::BadParameters(format!("M = {m} below 2")));
    }
    if m > cap {
        return Err(Error::CapExceeded { m, cap });
    }
    if m > i64::MAX as u64 / 8 {
        return Err(Error::OutOfRange(format!("M = {m}")));
    }
    let row: fn(u64, u64) -> ChordScanReport = if m <= 1 << 40 {
        scan_row::<i128>
    } else {
        scan_row::<BigInt>
    };
    let mut report = (0..m)
        .into_par_iter()
        .map(|t| row(m, t))
        .reduce(ChordScanReport::default, ChordScanReport::merge);
    report.m = m;
    report.violations.sort_by_key(|v| (v.t, v.k));
    report.mismatches.sort_by_key(|v| (v.t, v.k));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexRecord {
    pub t: u64,
    pub improving_edge_count: usize,
    pub successor_t: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathCertificate {
    #[serde(rename = "M")]
    pub m: u64,
    pub records: Vec<VertexRecord>,
    pub projected: Vec<Vec<String>>,
}

impl PathCertificate {
    /// Every improving edge raises `t` by one, so each monotone path from
    /// `t = 0` to the optimum has exactly this many edges.
    pub fn monotone_path_length(&self) -> u64 {
        self.m - 1
    }
}

fn certify_vertex(ext: &ExtendedParabola, f: &QuadraticObjective, t: u64) -> Result<VertexRecord> {
    let fail = |reason: String| Error::CertificateFailure { t, reason };
    let q = ext.q();
    let v = ext.vertex_for_t(t)?;
    let mut improving = Vec::new();
    for edge in q.edge_directions(&v)? {
        let dir = to_rational_vec(&edge.dir);
        let slope = crate::exactla::dot(&f.grad(&v)?, &dir);
        if !slope.is_positive() {
            continue;
        }
        let StepBound::Finite(mu) = q.ratio_test(&v, &dir)?.mu_max else {
            return Err(fail(format!("unbounded edge leaving facet {}", edge.leaving)));
        };
        let end: RatVector = v.iter().zip(&dir).map(|(a, b)| a + &mu * b).collect();
        let successor = ext
            .t_of(&end)
            .filter(|&s| ext.vertex_for_t(s).is_ok_and(|w| w == end))
            .ok_or_else(|| fail(format!("edge leaving facet {} ends off the path", edge.leaving)))?;
        improving.push(successor);
    }
    let last = t + 1 == ext.m();
    match (last, improving.as_slice()) {
        (true, []) => Ok(VertexRecord {
            t,
            improving_edge_count: 0,
            successor_t: None,
        }),
        (false, [s]) if *s == t + 1 => Ok(VertexRecord {
            t,
            improving_edge_count: 1,
            successor_t: Some(*s),
        }),
        (_, found) => Err(fail(format!("improving edges lead to {found:?}"))),
    }
}

/// Counts improving edges at every vertex of `Q` and follows each one.
pub fn monotone_path_check(ext: &ExtendedParabola, f: &QuadraticObjective) -> Result<PathCertificate> {
    let records = (0..ext.m())
        .into_par_iter()
        .map(|t| certify_vertex(ext, f, t))
        .collect::<Result<Vec<_>>>()?;
    let projected = (0..ext.m())
        .map(|t| ext.project(&ext.vertex_for_t(t)?).map(|p| format_vector(&p)))
        .collect::<Result<_>>()?;
    Ok(PathCertificate {
        m: ext.m(),
        records,
        projected,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub n: u64,
    pub d: u64,
    pub rule: String,
    pub seed: Option<u64>,
    pub vertices_visited: usize,
    pub edge_moves: usize,
    pub loop_iterations: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub n: u64,
    pub d: u64,
    pub expected_vertices: u64,
    pub identical_sequences: bool,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn passed(&self) -> bool {
        self.identical_sequences
            && self.rows.iter().all(|r| {
                r.vertices_visited as u64 == self.expected_vertices
                    && r.edge_moves as u64 + 1 == self.expected_vertices
            })
    }

    pub fn csv_header() -> &'static str {
        "rule,seed,vertices_visited,edge_moves,loop_iterations,wall_time_ms"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{:.3}",
                    r.rule,
                    r.seed.map_or(String::new(), |s| s.to_string()),
                    r.vertices_visited,
                    r.edge_moves,
                    r.loop_iterations,
                    r.wall_time_ms
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::csv_header());
        for line in self.csv_rows() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Runs every rule from `t = 0`; seeded rules once per seed, the others once.
pub fn iteration_experiment(n: u64, d: u64, rules: &[RuleSpec], seeds: &[u64]) -> Result<ExperimentTable> {
    if n != 4 * d {
        return Err(Error::BadParameters(format!("n = {n} must equal 4d = {}", 4 * d)));
    }
    let ext = build(ConstructionParams::new(n, d)?)?;
    let f = pullback_objective(&ext).objective;
    let x0 = ext.vertex_for_t(0)?;
    let jobs: Vec<(RuleSpec, Option<u64>)> = rules
        .iter()
        .flat_map(|&r| {
            if r.is_seeded() {
                seeds.iter().map(|&s| (r, Some(s))).collect()
            } else {
                vec![(r, None)]
            }
        })
        .collect();
    let max_iter = 4 * ext.m() as usize;
    let results = jobs
        .par_iter()
        .map(|&(spec, seed)| {
            let mut rule = spec.instantiate(seed.unwrap_or(0));
            let start = Instant::now();
            let trace = active_set_run(ext.q(), &f, &x0, rule.as_mut(), max_iter)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            if trace.terminated != Termination::Optimal {
                return Err(Error::MaxIterations(max_iter));
            }
            let row = ExperimentRow {
                n,
                d,
                rule: spec.name().to_string(),
                seed,
                vertices_visited: trace.vertices_visited,
                edge_moves: trace.edge_moves,
                loop_iterations: trace.loop_iterations,
                wall_time_ms: elapsed,
            };
            let sequence: Vec<RatVector> = trace.steps.into_iter().map(|s| s.vertex).collect();
            Ok((row, sequence))
        })
        .collect::<Result<Vec<_>>>()?;
    let identical_sequences = results.windows(2).all(|w| w[0].1 == w[1].1);
    Ok(ExperimentTable {
        n,
        d,
        expected_vertices: 1 << d,
        identical_sequences,
        rows: results.into_iter().map(|(row, _)| row).collect(),
    })
}
