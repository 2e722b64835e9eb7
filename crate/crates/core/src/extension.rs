//! The recursive extended formulation `Q_d` of the parabola polygon.
//!
//! `Q_2` is the polygon `conv(V(2, n/2d) ∪ W(2, n/2d))`, and every further
//! pair of coordinates is a deformed product of the previous stage with the
//! fibre pair `V(M_i, N)`, `W(M_i, N)` where `N = n/d` and `M_i = N^{i/2}`.
//! The pair of functionals `(φ, φ')` maps the `M = N^{d/2}` vertices of `Q_d`
//! onto the points `(x, x² − x)` with `x = t/(M−1)`, `t = 0, …, M−1`.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::deformed::{dp_hrep, dp_verify, dp_vrep, DpReport, Functional};
use crate::error::{Error, Result};
use crate::exactla::{dot, format_vector, RatMatrix, RatVector, Rational};
use crate::polygons::{
    build_family, check_normally_equivalent, h, polygon_hrep, Family, ParabolaVertexList, Point2,
};
use crate::polytope::HPolytope;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConstructionParams {
    pub n: u64,
    pub d: u64,
}

impl ConstructionParams {
    pub fn new(n: u64, d: u64) -> Result<Self> {
        let p = Self { n, d };
        p.validate()?;
        Ok(p)
    }

    /// The lower-bound regime `n = 4d`.
    pub fn lower_bound(d: u64) -> Result<Self> {
        Self::new(d.checked_mul(4).ok_or_else(|| Error::BadParameters("d too large".into()))?, d)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { n, d } = *self;
        if d < 2 || d % 2 != 0 {
            return Err(Error::BadParameters(format!("d = {d} must be an even integer ≥ 2")));
        }
        if n == 0 || n % (2 * d) != 0 {
            return Err(Error::BadParameters(format!("n = {n} must be a multiple of 2d = {}", 2 * d)));
        }
        let base = n / (2 * d);
        if base < 2 || base % 2 != 0 {
            return Err(Error::BadParameters(format!(
                "n/(2d) = {base} must be an even integer ≥ 2"
            )));
        }
        self.checked_m(d)
            .ok_or_else(|| Error::BadParameters(format!("(n/d)^(d/2) overflows for n = {n}, d = {d}")))?;
        Ok(())
    }

    /// `N = n/d`, the vertex count of each fibre polygon.
    pub fn fibre_size(&self) -> u64 {
        self.n / self.d
    }

    /// `n/(2d)`, the size of each family in the base polygon.
    pub fn base_size(&self) -> u64 {
        self.n / (2 * self.d)
    }

    fn checked_m(&self, i: u64) -> Option<u64> {
        self.fibre_size().checked_pow(u32::try_from(i / 2).ok()?)
    }

    /// `M_i = (n/d)^{i/2}`, the vertex count of `Q_i`.
    pub fn m_at(&self, i: u64) -> u64 {
        self.checked_m(i).expect("validated parameters")
    }

    /// `M = (n/d)^{d/2}`.
    pub fn m(&self) -> u64 {
        self.m_at(self.d)
    }

    pub fn facets(&self) -> u64 {
        self.n / 2
    }
}

/// One lifting step `Q_i → Q_{i+2}`.
#[derive(Clone, Debug)]
pub struct Level {
    /// Dimension `i` of the base stage.
    pub base_dim: usize,
    pub m_i: u64,
    pub v: ParabolaVertexList,
    pub w: ParabolaVertexList,
    pub b: RatMatrix,
    pub beta: RatVector,
    pub beta_prime: RatVector,
    /// `φ_i` on `R^i`.
    pub phi_base: Functional,
}

#[derive(Clone, Debug)]
pub struct ExtendedParabola {
    pub params: ConstructionParams,
    pub base: ParabolaVertexList,
    /// `Q_2, Q_4, …, Q_d`.
    pub stages: Vec<HPolytope>,
    pub levels: Vec<Level>,
    pub phi: Functional,
    pub phi_prime: Functional,
}

fn grid_param(t: u64, m: u64) -> Rational {
    Rational::new(BigInt::from(t), BigInt::from(m - 1))
}

/// `φ'_d` unrolled: weight `((M_{2k} − 1)/(M_d − 1))²` on coordinate `2k`.
fn flattened_phi_prime(params: &ConstructionParams) -> Functional {
    let d = params.d as usize;
    let top = BigInt::from(params.m() - 1);
    let mut coeffs = vec![Rational::zero(); d];
    for k in 1..=d / 2 {
        let ratio = Rational::new(BigInt::from(params.m_at(2 * k as u64) - 1), top.clone());
        coeffs[2 * k - 1] = &ratio * &ratio;
    }
    Functional::new(coeffs)
}

pub fn build(params: ConstructionParams) -> Result<ExtendedParabola> {
    params.validate()?;
    let m2 = params.m_at(2);
    let base_v = build_family(2, params.base_size(), Family::V)?;
    let base_w = build_family(2, params.base_size(), Family::W)?;
    let base = base_v.merge(&base_w)?;
    let grid: Vec<Rational> = (0..m2).map(|t| grid_param(t, m2)).collect();
    if base.params != grid {
        return Err(Error::InternalMismatch("base polygon vertices are not h(t/(M₂−1))".into()));
    }
    let base_hrep = polygon_hrep(&base)?;
    let last = base_hrep.b.rows() - 1;
    let labels = (0..base_hrep.b.rows())
        .map(|k| {
            if k == last {
                "Q2 closing chord".to_string()
            } else {
                format!("Q2 edge {k}")
            }
        })
        .collect();
    let mut stages = vec![HPolytope::new(base_hrep.b, base_hrep.beta, labels)?];
    let mut levels = Vec::new();
    let fibre = params.fibre_size();
    for i in (2..params.d).step_by(2) {
        let m_i = params.m_at(i);
        let v = build_family(m_i, fibre, Family::V)?;
        let w = build_family(m_i, fibre, Family::W)?;
        let (hv, hw) = (polygon_hrep(&v)?, polygon_hrep(&w)?);
        if hv.b != hw.b {
            return Err(Error::InternalMismatch(format!(
                "V({m_i}, {fibre}) and W({m_i}, {fibre}) do not share normals"
            )));
        }
        let i = i as usize;
        let phi_base = Functional::coordinate(i, i - 2);
        let next = dp_hrep(
            stages.last().unwrap(),
            &phi_base,
            &hv.b,
            &hv.beta,
            &hw.beta,
            &format!("Q{}", i + 2),
        )?;
        stages.push(next);
        levels.push(Level {
            base_dim: i,
            m_i,
            v,
            w,
            b: hv.b,
            beta: hv.beta,
            beta_prime: hw.beta,
            phi_base,
        });
    }
    let d = params.d as usize;
    Ok(ExtendedParabola {
        params,
        base,
        stages,
        levels,
        phi: Functional::coordinate(d, d - 2),
        phi_prime: flattened_phi_prime(&params),
    })
}

/// `(j, ℓ, s)` with `k = ⌊t/M_i⌋ = 2j + ℓ` and `s` the position of `t`
/// inside block `k`, counted forwards for even `k` and backwards for odd.
pub fn decompose_t(t: u64, m_i: u64, fibre: u64) -> Result<(u64, u64, u64)> {
    if m_i == 0 || t >= fibre.saturating_mul(m_i) {
        return Err(Error::OutOfRange(format!("t = {t} not below N·M_i = {}", fibre * m_i)));
    }
    let k = t / m_i;
    let (j, l) = (k / 2, k % 2);
    let s = if l == 0 { t - 2 * j * m_i } else { (2 * j + 2) * m_i - 1 - t };
    Ok((j, l, s))
}

/// Inverse of [`decompose_t`].
pub fn compose_t(j: u64, l: u64, s: u64, m_i: u64) -> u64 {
    if l == 0 {
        2 * j * m_i + s
    } else {
        (2 * j + 2) * m_i - 1 - s
    }
}

impl ExtendedParabola {
    pub fn dim(&self) -> usize {
        self.params.d as usize
    }

    pub fn m(&self) -> u64 {
        self.params.m()
    }

    /// The final polytope `Q_d`.
    pub fn q(&self) -> &HPolytope {
        self.stages.last().unwrap()
    }

    /// The vertex of `Q_stage` with `φ_stage = t/(M_stage − 1)`.
    pub fn vertex_at_stage(&self, stage: usize, t: u64) -> Result<RatVector> {
        if stage < 2 || stage % 2 != 0 || stage > self.dim() {
            return Err(Error::OutOfRange(format!("no stage {stage}")));
        }
        let m = self.params.m_at(stage as u64);
        if t >= m {
            return Err(Error::OutOfRange(format!("t = {t} not below M = {m}")));
        }
        // unwind the index down to the base, then lift back up
        let mut path = Vec::with_capacity(stage / 2);
        let mut t_cur = t;
        for level in self.levels[..stage / 2 - 1].iter().rev() {
            let (j, l, s) = decompose_t(t_cur, level.m_i, self.params.fibre_size())?;
            path.push((2 * j + l) as usize);
            t_cur = s;
        }
        let mut point = h(&grid_param(t_cur, self.params.m_at(2))).to_vec();
        for (level, &idx) in self.levels.iter().zip(path.iter().rev()) {
            let lambda = level.phi_base.eval(&point)?;
            let (v, w) = (&level.v.points[idx], &level.w.points[idx]);
            point.extend(v.iter().zip(w).map(|(a, b)| a + &lambda * (b - a)));
        }
        Ok(point)
    }

    pub fn vertex_for_t(&self, t: u64) -> Result<RatVector> {
        self.vertex_at_stage(self.dim(), t)
    }

    pub fn vertices(&self) -> Result<Vec<RatVector>> {
        (0..self.m()).map(|t| self.vertex_for_t(t)).collect()
    }

    pub fn project(&self, x: &[Rational]) -> Result<Point2> {
        Ok([self.phi.eval(x)?, self.phi_prime.eval(x)?])
    }

    /// `t` such that `φ(x) = t/(M − 1)`, when it is an integer in range.
    pub fn t_of(&self, x: &[Rational]) -> Option<u64> {
        let scaled = self.phi.eval(x).ok()? * Rational::from_integer(BigInt::from(self.m() - 1));
        if !scaled.is_integer() {
            return None;
        }
        u64::try_from(scaled.to_integer()).ok().filter(|&t| t < self.m())
    }

    pub fn to_json(&self) -> ConstructionJson {
        ConstructionJson {
            n: self.params.n,
            d: self.params.d,
            fibre_size: self.params.fibre_size(),
            m: self.m(),
            facets: self.q().num_facets(),
            phi: format_vector(&self.phi.coeffs),
            phi_prime: format_vector(&self.phi_prime.coeffs),
            base: format_vector(&self.base.params),
            levels: self
                .levels
                .iter()
                .map(|l| LevelJson {
                    base_dim: l.base_dim,
                    m_i: l.m_i,
                    v: format_vector(&l.v.params),
                    w: format_vector(&l.w.params),
                    b: l.b.row_iter().map(format_vector).collect(),
                    beta: format_vector(&l.beta),
                    beta_prime: format_vector(&l.beta_prime),
                })
                .collect(),
        }
    }
}

/// JSON sidecar of a build; every rational is a `p/q` string.
#[derive(Clone, Debug, Serialize)]
pub struct ConstructionJson {
    pub n: u64,
    pub d: u64,
    #[serde(rename = "N")]
    pub fibre_size: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub facets: usize,
    pub phi: Vec<String>,
    pub phi_prime: Vec<String>,
    /// Parameters `x` of the base polygon vertices `h(x)`.
    pub base: Vec<String>,
    pub levels: Vec<LevelJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelJson {
    pub base_dim: usize,
    #[serde(rename = "M_i")]
    pub m_i: u64,
    #[serde(rename = "V")]
    pub v: Vec<String>,
    #[serde(rename = "W")]
    pub w: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<String>>,
    pub beta: Vec<String>,
    pub beta_prime: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionReport {
    pub n: u64,
    pub d: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub facets: usize,
    pub vertices: usize,
    pub checks: Vec<Check>,
    /// Squared Euclidean norms of the two functionals' coefficient vectors.
    pub phi_norm_sq: String,
    pub phi_prime_norm_sq: String,
}

impl ConstructionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

pub fn verify_construction(ext: &ExtendedParabola) -> Result<ConstructionReport> {
    let vertices = ext.vertices()?;
    Ok(verify_vertices(ext, &vertices))
}

/// The six construction checks against an explicit `t`-ordered vertex list.
pub fn verify_vertices(ext: &ExtendedParabola, vertices: &[RatVector]) -> ConstructionReport {
    let p = &ext.params;
    let q = ext.q();
    let m = ext.m();
    let mut checks = Vec::with_capacity(6);

    checks.push(Check::new(
        "facet_count",
        q.num_facets() as u64 == p.facets(),
        format!("{} facets, expected n/2 = {}", q.num_facets(), p.facets()),
    ));

    let not_simple: Vec<usize> = vertices
        .iter()
        .enumerate()
        .filter(|(_, x)| !matches!(q.is_simple_vertex(x), Ok(true)))
        .map(|(t, _)| t)
        .collect();
    checks.push(Check::new(
        "vertex_count",
        vertices.len() as u64 == m && not_simple.is_empty(),
        if let Some(t) = not_simple.first() {
            format!("{} of {} points are not simple vertices, first at t = {t}", not_simple.len(), vertices.len())
        } else {
            format!("{} simple vertices, expected (n/d)^(d/2) = {m}", vertices.len())
        },
    ));

    let mut off_grid = None;
    let mut projected = Vec::with_capacity(vertices.len());
    for (t, x) in vertices.iter().enumerate() {
        let Ok(point) = ext.project(x) else {
            off_grid.get_or_insert(t);
            continue;
        };
        let expected = h(&grid_param(t as u64, m));
        if point != expected {
            off_grid.get_or_insert(t);
        }
        projected.push(point);
    }
    checks.push(Check::new(
        "parabola_identity",
        off_grid.is_none(),
        match off_grid {
            Some(t) => format!("φ'(p) ≠ φ(p)² − φ(p) or φ(p) ≠ t/(M−1) at t = {t}"),
            None => format!("all {} vertices project to (t/(M−1), (t/(M−1))² − t/(M−1))", vertices.len()),
        },
    ));

    let inner = dot(&ext.phi.coeffs, &ext.phi_prime.coeffs);
    checks.push(Check::new(
        "orthogonality",
        inner.is_zero(),
        format!("⟨c_φ, c_φ'⟩ = {inner}"),
    ));

    let phis: Vec<&Rational> = projected.iter().map(|p| &p[0]).collect();
    let (lo, hi) = (phis.iter().min(), phis.iter().max());
    let range_ok = lo.is_some_and(|v| v.is_zero()) && hi.is_some_and(|v| v.is_one());
    checks.push(Check::new(
        "phi_range",
        range_ok,
        format!(
            "min φ = {}, max φ = {}",
            lo.map_or("-".into(), ToString::to_string),
            hi.map_or("-".into(), ToString::to_string)
        ),
    ));

    let distinct_points: HashSet<&RatVector> = vertices.iter().collect();
    let distinct_phi: HashSet<&Rational> = phis.iter().copied().collect();
    let injective = distinct_points.len() == vertices.len() && distinct_phi.len() == vertices.len();
    checks.push(Check::new(
        "bijection",
        injective && vertices.len() as u64 == m,
        format!(
            "{} distinct vertices, {} distinct φ values",
            distinct_points.len(),
            distinct_phi.len()
        ),
    ));

    ConstructionReport {
        n: p.n,
        d: p.d,
        m,
        facets: q.num_facets(),
        vertices: vertices.len(),
        checks,
        phi_norm_sq: dot(&ext.phi.coeffs, &ext.phi.coeffs).to_string(),
        phi_prime_norm_sq: dot(&ext.phi_prime.coeffs, &ext.phi_prime.coeffs).to_string(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub stage: usize,
    #[serde(rename = "M_i")]
    pub m_i: u64,
    pub normally_equivalent: bool,
    pub product: DpReport,
    /// The product's vertex set equals the `t`-indexed vertex set of the stage.
    pub matches_t_map: bool,
}

impl LevelReport {
    pub fn passed(&self) -> bool {
        self.normally_equivalent && self.product.passed() && self.matches_t_map
    }
}

/// Normal equivalence and deformed-product duality at every lifting step.
pub fn verify_levels(ext: &ExtendedParabola) -> Result<Vec<LevelReport>> {
    let mut reports = Vec::with_capacity(ext.levels.len());
    let mut base_verts: Vec<RatVector> = ext.base.vectors();
    for (k, level) in ext.levels.iter().enumerate() {
        let stage = level.base_dim + 2;
        let hrep = &ext.stages[k + 1];
        let points = dp_vrep(&base_verts, &level.phi_base, &level.v.vectors(), &level.w.vectors())?;
        let expected = base_verts.len() * level.v.len();
        let product = dp_verify(hrep, &points, expected);
        let m_next = ext.params.m_at(stage as u64);
        let by_t: Vec<RatVector> = (0..m_next)
            .map(|t| ext.vertex_at_stage(stage, t))
            .collect::<Result<_>>()?;
        let lhs: HashSet<&RatVector> = points.iter().collect();
        let rhs: HashSet<&RatVector> = by_t.iter().collect();
        let normally_equivalent = check_normally_equivalent(&level.v, &level.w)? && level.b.rows() == level.v.len();
        reports.push(LevelReport {
            stage,
            m_i: level.m_i,
            normally_equivalent,
            product,
            matches_t_map: lhs == rhs && rhs.len() == by_t.len(),
        });
        base_verts = by_t;
    }
    Ok(reports)
}
