//! The active-set method for maximizing a quadratic over `{x : A·x ≤ b}`.
//!
//! Each loop body looks for an improving direction feasible for the tight
//! rows, drops an active row the direction leaves, moves until the boundary
//! or until the objective stops improving, and adds a newly tight row. The
//! free choices are delegated to a [`PivotRule`].
//!
//! Iterates are vertices of a simple polytope here, and there every
//! improving feasible direction is a nonnegative combination of the `d` edge
//! rays. So `D ≠ ∅` iff some edge ray improves, and the edge rays are
//! exactly the directions keeping `d − 1` active rows tight, which is the
//! maximum over `D`. The search is therefore restricted to edge rays.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactla::{
    dot, dot_int, format_vector, primitive, to_decimal, to_rational_vec, RatMatrix, RatVector,
    Rational,
};
use crate::extension::ExtendedParabola;
use crate::polytope::{HPolytope, StepBound, TightSet, VertexBasis};

/// `f(x) = xᵀ·Q·x + q·x + c₀` with `Q` symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticObjective {
    quad: RatMatrix,
    linear: RatVector,
    constant: Rational,
}

impl QuadraticObjective {
    pub fn new(quad: RatMatrix, linear: RatVector, constant: Rational) -> Result<Self> {
        if quad.rows() != linear.len() || quad.cols() != linear.len() {
            return Err(Error::DimensionMismatch {
                expected: linear.len(),
                found: quad.rows(),
            });
        }
        if !quad.is_symmetric() {
            return Err(Error::BadParameters("quadratic part is not symmetric".into()));
        }
        Ok(Self {
            quad,
            linear,
            constant,
        })
    }

    pub fn linear_only(linear: RatVector) -> Self {
        let d = linear.len();
        Self {
            quad: RatMatrix::zeros(d, d),
            linear,
            constant: Rational::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn quad(&self) -> &RatMatrix {
        &self.quad
    }

    pub fn linear(&self) -> &[Rational] {
        &self.linear
    }

    fn check(&self, x: &[Rational]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `uᵀ·Q·v`, skipping zero entries.
    fn bilinear(&self, u: &[Rational], v: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                let qij = &self.quad[(i, j)];
                if !qij.is_zero() && !vj.is_zero() {
                    acc += ui * qij * vj;
                }
            }
        }
        acc
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational> {
        self.check(x)?;
        Ok(self.bilinear(x, x) + dot(&self.linear, x) + &self.constant)
    }

    /// `2·Q·x + q`.
    pub fn grad(&self, x: &[Rational]) -> Result<RatVector> {
        self.check(x)?;
        let two = Rational::from_integer(2.into());
        Ok((0..self.dim())
            .map(|i| {
                let mut qx = Rational::zero();
                for (j, xj) in x.iter().enumerate() {
                    let qij = &self.quad[(i, j)];
                    if !qij.is_zero() && !xj.is_zero() {
                        qx += qij * xj;
                    }
                }
                &two * qx + &self.linear[i]
            })
            .collect())
    }

    /// `dirᵀ·Q·dir`, the curvature along `dir`.
    pub fn curvature(&self, dir: &[Rational]) -> Result<Rational> {
        self.check(dir)?;
        Ok(self.bilinear(dir, dir))
    }
}

/// The objective `F = φ² − c·φ − φ'` on `Q_d` together with `c = 1 − 3/(2M−2)`.
#[derive(Clone, Debug)]
pub struct PulledBack {
    pub objective: QuadraticObjective,
    pub c: Rational,
}

/// `c = 1 − 3/(2M − 2)`.
pub fn shift_constant(m: u64) -> Rational {
    Rational::one() - Rational::new(3.into(), BigInt::from(2 * m - 2))
}

pub fn pullback_objective(ext: &ExtendedParabola) -> PulledBack {
    pullback_with_c(ext, shift_constant(ext.m()))
}

/// Same pullback with an arbitrary shift `c`.
pub fn pullback_with_c(ext: &ExtendedParabola, c: Rational) -> PulledBack {
    let phi = &ext.phi.coeffs;
    let d = phi.len();
    let mut quad = RatMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if !phi[i].is_zero() && !phi[j].is_zero() {
                quad.set(i, j, &phi[i] * &phi[j]);
            }
        }
    }
    let linear = phi
        .iter()
        .zip(&ext.phi_prime.coeffs)
        .map(|(a, b)| -(&c * a) - b)
        .collect();
    PulledBack {
        objective: QuadraticObjective {
            quad,
            linear,
            constant: Rational::zero(),
        },
        c,
    }
}

pub fn grad(f: &QuadraticObjective, x: &[Rational]) -> Result<RatVector> {
    f.grad(x)
}

/// Step length along an improving `dir`: the boundary `mu_max`, or the
/// stationary point of the concave case, whichever comes first.
pub fn line_search(
    f: &QuadraticObjective,
    x: &[Rational],
    dir: &[Rational],
    mu_max: &StepBound,
) -> Result<Rational> {
    let slope = dot(&f.grad(x)?, dir);
    if !slope.is_positive() {
        return Err(Error::NotImproving);
    }
    let curvature = f.curvature(dir)?;
    let stationary = if curvature.is_negative() {
        Some(-slope / (Rational::from_integer(2.into()) * curvature))
    } else {
        None
    };
    match (mu_max, stationary) {
        (StepBound::Finite(b), Some(s)) => Ok(if *b < s { b.clone() } else { s }),
        (StepBound::Finite(b), None) => Ok(b.clone()),
        (StepBound::Unbounded, Some(s)) => Ok(s),
        (StepBound::Unbounded, None) => Err(Error::UnboundedImprovement),
    }
}

pub fn is_improving_edge(
    f: &QuadraticObjective,
    v: &[Rational],
    dir: &[BigInt],
) -> Result<bool> {
    Ok(dot(&f.grad(v)?, &to_rational_vec(dir)).is_positive())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChoicePoint {
    /// Among improving directions with the most active rows kept tight;
    /// candidates are identified by the facet each edge ray leaves.
    Direction,
    /// Among active rows the chosen direction strictly leaves.
    Drop,
    /// Among newly tight rows after a move.
    Enter,
}

/// Resolves the free choices of the method. Must return one of `candidates`.
pub trait PivotRule {
    fn name(&self) -> String;
    fn choose(&mut self, point: ChoicePoint, candidates: &[usize]) -> usize;
}

pub struct FirstIndex;

impl PivotRule for FirstIndex {
    fn name(&self) -> String {
        "first".into()
    }

    fn choose(&mut self, _: ChoicePoint, candidates: &[usize]) -> usize {
        candidates[0]
    }
}

pub struct LastIndex;

impl PivotRule for LastIndex {
    fn name(&self) -> String {
        "last".into()
    }

    fn choose(&mut self, _: ChoicePoint, candidates: &[usize]) -> usize {
        candidates[candidates.len() - 1]
    }
}

pub struct SeededRandom {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededRandom {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl PivotRule for SeededRandom {
    fn name(&self) -> String {
        format!("random({})", self.seed)
    }

    fn choose(&mut self, _: ChoicePoint, candidates: &[usize]) -> usize {
        candidates[self.rng.gen_range(0..candidates.len())]
    }
}

pub type ChoiceCallback = Box<dyn FnMut(ChoicePoint, &[usize]) -> usize + Send>;

/// Defers every choice to a caller-supplied callback.
pub struct Adversarial {
    label: String,
    callback: ChoiceCallback,
}

impl Adversarial {
    pub fn new(label: impl Into<String>, callback: ChoiceCallback) -> Self {
        Self {
            label: label.into(),
            callback,
        }
    }

    /// Cycles through candidate positions, starting at `seed`.
    pub fn rotating(seed: u64) -> Self {
        let mut counter = seed as usize;
        Self::new(
            format!("adversarial({seed})"),
            Box::new(move |_, candidates| {
                counter = counter.wrapping_add(1);
                candidates[counter % candidates.len()]
            }),
        )
    }
}

impl PivotRule for Adversarial {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn choose(&mut self, point: ChoicePoint, candidates: &[usize]) -> usize {
        (self.callback)(point, candidates)
    }
}

/// Named built-in rules, as accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RuleSpec {
    First,
    Last,
    Random,
    Adversarial,
}

impl RuleSpec {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "first" => Ok(Self::First),
            "last" => Ok(Self::Last),
            "random" => Ok(Self::Random),
            "adversarial" => Ok(Self::Adversarial),
            other => Err(Error::UnknownRule(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::First => "first",
            Self::Last => "last",
            Self::Random => "random",
            Self::Adversarial => "adversarial",
        }
    }

    pub fn is_seeded(&self) -> bool {
        matches!(self, Self::Random | Self::Adversarial)
    }

    pub fn instantiate(&self, seed: u64) -> Box<dyn PivotRule + Send> {
        match self {
            Self::First => Box::new(FirstIndex),
            Self::Last => Box::new(LastIndex),
            Self::Random => Box::new(SeededRandom::new(seed)),
            Self::Adversarial => Box::new(Adversarial::rotating(seed)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub vertex: RatVector,
    pub tight: TightSet,
    pub active: TightSet,
    /// Primitive direction of the move into `vertex`; empty for the start.
    pub direction: Vec<BigInt>,
    pub mu: Rational,
    pub f_value: Rational,
    pub dropped: Option<usize>,
    pub entered: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    Optimal,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub rule: String,
    pub steps: Vec<Step>,
    pub loop_iterations: usize,
    pub edge_moves: usize,
    pub vertices_visited: usize,
    pub terminated: Termination,
}

impl Trace {
    pub fn vertex_sequence(&self) -> impl Iterator<Item = &RatVector> {
        self.steps.iter().map(|s| &s.vertex)
    }
}

fn select<R: PivotRule + ?Sized>(rule: &mut R, point: ChoicePoint, candidates: &[usize]) -> Result<usize> {
    let chosen = rule.choose(point, candidates);
    if candidates.contains(&chosen) {
        Ok(chosen)
    } else {
        Err(Error::InvalidChoice(chosen))
    }
}

/// Runs the method from the simple vertex `x0` for at most `max_iter` loop bodies.
pub fn active_set_run<R: PivotRule + ?Sized>(
    p: &HPolytope,
    f: &QuadraticObjective,
    x0: &[Rational],
    rule: &mut R,
    max_iter: usize,
) -> Result<Trace> {
    let d = p.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: f.dim(),
        });
    }
    let tight = p.tight_set(x0)?;
    if tight.len() != d {
        return Err(Error::DegenerateVertex(format!("{} tight rows at the start", tight.len())));
    }
    let mut basis = VertexBasis::at(p, tight.indices().to_vec())?;
    let mut x = x0.to_vec();
    let mut active = tight.clone();
    let mut steps = vec![Step {
        vertex: x.clone(),
        tight,
        active: active.clone(),
        direction: Vec::new(),
        mu: Rational::zero(),
        f_value: f.eval(&x)?,
        dropped: None,
        entered: None,
    }];
    let mut loop_iterations = 0;
    let mut edge_moves = 0;
    let terminated = loop {
        if active.len() != d {
            return Err(Error::NotAVertex);
        }
        let g = f.grad(&x)?;
        let mut improving: Vec<(usize, usize)> = Vec::new();
        for k in 0..d {
            let ray = basis.raw_direction(k);
            if dot(&g, &ray).is_positive() {
                improving.push((basis.basis()[k], k));
            }
        }
        if improving.is_empty() {
            break Termination::Optimal;
        }
        if loop_iterations >= max_iter {
            break Termination::MaxIterations;
        }
        loop_iterations += 1;
        improving.sort_unstable();
        let offered: Vec<usize> = improving.iter().map(|&(facet, _)| facet).collect();
        let leaving = select(rule, ChoicePoint::Direction, &offered)?;
        let k = improving.iter().find(|&&(facet, _)| facet == leaving).unwrap().1;
        let dir_int = primitive(&basis.raw_direction(k))?;
        let dir = to_rational_vec(&dir_int);

        let rates: Vec<(usize, BigInt)> = active
            .indices()
            .iter()
            .map(|&i| (i, dot_int(p.int_row(i), &dir_int)))
            .collect();
        let kept = rates.iter().filter(|(_, r)| r.is_zero()).count();
        if kept != d - 1 || rates.iter().any(|(_, r)| r.is_positive()) {
            return Err(Error::InternalMismatch(format!(
                "edge ray keeps {kept} of {d} active rows tight"
            )));
        }
        let mut dropped = None;
        let leaves: Vec<usize> = rates.iter().filter(|(_, r)| r.is_negative()).map(|&(i, _)| i).collect();
        if !leaves.is_empty() {
            let i = select(rule, ChoicePoint::Drop, &leaves)?;
            active.remove(i);
            dropped = Some(i);
        }
        // every remaining active row is orthogonal to the direction now
        let ratio = p.ratio_test(&x, &dir)?;
        let mu = line_search(f, &x, &dir, &ratio.mu_max)?;
        for (xi, di) in x.iter_mut().zip(&dir) {
            if !di.is_zero() {
                *xi += &mu * di;
            }
        }
        edge_moves += 1;
        let tight = p.tight_set(&x)?;
        if tight.len() > d {
            return Err(Error::DegenerateVertex(format!(
                "{} rows tight after moving along the edge leaving facet {leaving}",
                tight.len()
            )));
        }
        let mut entered = None;
        if dot(&f.grad(&x)?, &dir).is_positive() {
            let fresh = tight.difference(&active);
            if fresh.is_empty() {
                return Err(Error::InternalMismatch("no newly tight row after a boundary stop".into()));
            }
            let j = select(rule, ChoicePoint::Enter, &fresh)?;
            active.insert(j);
            entered = Some(j);
            let pos = basis
                .position(dropped.unwrap_or(leaving))
                .expect("dropped row is in the basis");
            basis.pivot(p, pos, j)?;
        }
        if !active.is_subset(&tight) {
            return Err(Error::InternalMismatch("active set is not tight".into()));
        }
        steps.push(Step {
            vertex: x.clone(),
            tight,
            active: active.clone(),
            direction: dir_int,
            mu,
            f_value: f.eval(&x)?,
            dropped,
            entered,
        });
    };
    Ok(Trace {
        rule: rule.name(),
        vertices_visited: steps.len(),
        steps,
        loop_iterations,
        edge_moves,
        terminated,
    })
}

/// Default loop bound when `M` is known.
pub fn default_max_iter(m: Option<u64>) -> usize {
    m.map_or(10_000_000, |m| 4 * m as usize)
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceJson {
    pub n: u64,
    pub d: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub c: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepJson {
    pub t: Option<u64>,
    pub vertex: Vec<String>,
    pub active: Vec<usize>,
    pub direction: Vec<String>,
    pub mu: String,
    pub f: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceJson {
    pub instance: InstanceJson,
    pub rule: String,
    pub steps: Vec<StepJson>,
    pub edge_moves: usize,
    pub loop_iterations: usize,
    pub vertices_visited: usize,
    pub terminated: Termination,
}

impl Trace {
    pub fn to_json(&self, ext: &ExtendedParabola, c: &Rational) -> TraceJson {
        TraceJson {
            instance: InstanceJson {
                n: ext.params.n,
                d: ext.params.d,
                m: ext.m(),
                c: c.to_string(),
            },
            rule: self.rule.clone(),
            steps: self
                .steps
                .iter()
                .map(|s| StepJson {
                    t: ext.t_of(&s.vertex),
                    vertex: format_vector(&s.vertex),
                    active: s.active.indices().to_vec(),
                    direction: s.direction.iter().map(ToString::to_string).collect(),
                    mu: s.mu.to_string(),
                    f: s.f_value.to_string(),
                })
                .collect(),
            edge_moves: self.edge_moves,
            loop_iterations: self.loop_iterations,
            vertices_visited: self.vertices_visited,
            terminated: self.terminated,
        }
    }

    /// `t,phi,phi_prime,f` per step, decimals at `precision` significant digits.
    pub fn to_csv(&self, ext: &ExtendedParabola, precision: usize) -> String {
        let mut out = String::from("t,phi,phi_prime,f\n");
        for s in &self.steps {
            let t = ext.t_of(&s.vertex).map_or(String::new(), |t| t.to_string());
            let [phi, phi_prime] = ext
                .project(&s.vertex)
                .unwrap_or_else(|_| [Rational::zero(), Rational::zero()]);
            let _ = writeln!(
                out,
                "{t},{},{},{}",
                to_decimal(&phi, precision),
                to_decimal(&phi_prime, precision),
                to_decimal(&s.f_value, precision)
            );
        }
        out
    }
}

pub const DEFAULT_CSV_PRECISION: usize = 12;
