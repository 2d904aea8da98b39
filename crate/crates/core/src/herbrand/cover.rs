use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HerbrandError;
use crate::logic::eval::{eval_formula_with, eval_qf, eval_term, Enclosure, EvalBudget, Mode};
use crate::logic::sampling::uniform_sphere;
use crate::logic::signature::{Field, Signature};
use crate::logic::structure::{Assignment, EvalError, Point, Structure, Universe, Vector};
use crate::logic::syntax::{Formula, Term, Var};
use crate::models::hilbert::HilbertModel;
use crate::normalizer::{
    all_assignments, enumerate_terms, normalize_term, Atom, Base, EnumerationBudget,
    ExactNormalForm, OpWord, TheoryTag,
};
use crate::scalar::{format_c64, format_f64, qreal, QComplex, Rational};

/// A tuple of witness terms, one per existential variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub terms: Vec<Term>,
    /// Normal forms of `terms`, empty for terms of classical signatures.
    pub forms: Vec<ExactNormalForm>,
}

impl Candidate {
    pub fn from_terms(terms: Vec<Term>) -> Self {
        Candidate {
            terms,
            forms: Vec::new(),
        }
    }

    /// Realizes each normal form as a term of `sig`.
    pub fn from_forms(sig: &Signature, forms: Vec<ExactNormalForm>) -> Result<Self, HerbrandError> {
        let terms = forms
            .iter()
            .map(|nf| nf.realize(sig))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Candidate { terms, forms })
    }

    /// Coefficient ℓ¹ mass, or total term size without normal forms.
    pub fn l1(&self) -> f64 {
        if self.forms.is_empty() {
            self.terms.iter().map(|t| t.size() as f64).sum()
        } else {
            self.forms.iter().map(|f| f.l1_mass()).sum()
        }
    }

    pub fn key(&self) -> String {
        self.terms
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// The quantity being covered: `φ(x̄, ȳ)` with a gate on `inf_ȳ φ`.
pub trait CoverProblem: Sync {
    fn structure(&self) -> &dyn Structure;

    fn x_vars(&self) -> &[Var];

    /// `φ(x̄, t̄(x̄))`.
    fn residual(&self, env: &Assignment, c: &Candidate) -> Result<f64, EvalError>;

    /// Enclosure of `inf_ȳ φ(x̄, ȳ)`; `seeds` are values worth trying for `ȳ`.
    fn gate(
        &self,
        env: &Assignment,
        seeds: &[Point],
        rng: &mut ChaCha8Rng,
    ) -> Result<Enclosure, EvalError>;
}

/// `φ(x̄, ȳ)` given as a formula.
pub struct FormulaProblem<'a> {
    pub structure: &'a dyn Structure,
    pub formula: Formula,
    pub x: Vec<Var>,
    pub y: Vec<Var>,
    pub budget: EvalBudget,
    gate_formula: Formula,
}

impl<'a> FormulaProblem<'a> {
    pub fn new(
        structure: &'a dyn Structure,
        formula: Formula,
        x: Vec<Var>,
        y: Vec<Var>,
        budget: EvalBudget,
    ) -> Self {
        let mut gate_formula = formula.clone();
        for v in y.iter().rev() {
            gate_formula = Formula::Inf(v.clone(), Box::new(gate_formula));
        }
        FormulaProblem {
            structure,
            formula,
            x,
            y,
            budget,
            gate_formula,
        }
    }
}

fn bind(env: &Assignment, vars: &[Var], values: Vec<Point>) -> Assignment {
    let mut env = env.clone();
    for (v, p) in vars.iter().zip(values) {
        env.insert(v.name.clone(), p);
    }
    env
}

impl CoverProblem for FormulaProblem<'_> {
    fn structure(&self) -> &dyn Structure {
        self.structure
    }

    fn x_vars(&self) -> &[Var] {
        &self.x
    }

    fn residual(&self, env: &Assignment, c: &Candidate) -> Result<f64, EvalError> {
        let values = c
            .terms
            .iter()
            .map(|t| eval_term(self.structure, t, env))
            .collect::<Result<Vec<_>, _>>()?;
        eval_qf(self.structure, &self.formula, &bind(env, &self.y, values))
    }

    fn gate(
        &self,
        env: &Assignment,
        seeds: &[Point],
        rng: &mut ChaCha8Rng,
    ) -> Result<Enclosure, EvalError> {
        eval_formula_with(
            self.structure,
            &self.gate_formula,
            env,
            &self.budget,
            rng,
            seeds,
        )
    }
}

/// A function on a Hilbert ball to be covered by terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Identity,
    /// `(1 − ‖x‖²)x`.
    RadialShrink,
    Term(Term),
}

impl Target {
    /// `identity`, `radial-shrink` or `term:<text>`.
    pub fn parse(text: &str, sig: &Signature) -> Result<Self, HerbrandError> {
        match text.trim() {
            "identity" => Ok(Target::Identity),
            "radial-shrink" => Ok(Target::RadialShrink),
            t => match t.strip_prefix("term:") {
                Some(body) => Ok(Target::Term(crate::logic::parse::parse_term(body, sig)?)),
                None => Err(HerbrandError::Certificate(format!("unknown target `{t}`"))),
            },
        }
    }

    pub fn eval(&self, m: &HilbertModel, x: &[Var], env: &Assignment) -> Result<Vector, EvalError> {
        let first = || -> Result<Vector, EvalError> {
            let v = x
                .first()
                .ok_or_else(|| EvalError::MissingVariable("x".into()))?;
            match env.get(&v.name) {
                Some(Point::Vector(p)) => Ok(p.clone()),
                Some(_) => Err(EvalError::WrongPoint(v.name.clone())),
                None => Err(EvalError::MissingVariable(v.name.clone())),
            }
        };
        match self {
            Target::Identity => first(),
            Target::RadialShrink => {
                let p = first()?;
                let s = 1.0 - p.norm_squared();
                Ok(p * crate::scalar::Complex64::new(s, 0.0))
            }
            Target::Term(t) => match eval_term(m, t, env)? {
                Point::Vector(v) => Ok(v),
                Point::Element(_) => Err(EvalError::WrongPoint(t.to_string())),
            },
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Identity => f.write_str("identity"),
            Target::RadialShrink => f.write_str("radial-shrink"),
            Target::Term(t) => write!(f, "term:{t}"),
        }
    }
}

/// `φ(x̄, y) = d(f(x̄), y)` evaluated directly; the gate is exactly 0.
pub struct FunctionProblem<'a> {
    pub model: &'a HilbertModel,
    pub target: Target,
    pub x: Vec<Var>,
}

impl CoverProblem for FunctionProblem<'_> {
    fn structure(&self) -> &dyn Structure {
        self.model
    }

    fn x_vars(&self) -> &[Var] {
        &self.x
    }

    fn residual(&self, env: &Assignment, c: &Candidate) -> Result<f64, EvalError> {
        let fx = self.target.eval(self.model, &self.x, env)?;
        let t = eval_term(self.model, &c.terms[0], env)?;
        Ok(self.model.distance(&Point::Vector(fx), &t))
    }

    fn gate(
        &self,
        _: &Assignment,
        _: &[Point],
        _: &mut ChaCha8Rng,
    ) -> Result<Enclosure, EvalError> {
        Ok(Enclosure::exact(0.0))
    }
}

/// Limits and seed for cover searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverBudget {
    /// Random `x̄` samples when the `x̄` sorts are not finite.
    pub samples: usize,
    /// Largest number of terms selected.
    pub max_terms: usize,
    pub max_candidates: usize,
    /// Largest finite `x̄` space checked exhaustively.
    pub max_exhaustive: usize,
    #[serde(with = "crate::scalar::decimal")]
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for CoverBudget {
    fn default() -> Self {
        CoverBudget {
            samples: 2000,
            max_terms: 64,
            max_candidates: 100_000,
            max_exhaustive: 1_000_000,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Exhaustive,
    /// Radii stratified on `[0,1]`, directions uniform.
    Radial,
}

/// Residual statistics of a cover. Numbers are decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    /// Max over admitted samples of the smallest residual of a selected tuple.
    pub max: String,
    pub samples: usize,
    /// Samples passing the gate.
    pub admitted: usize,
    pub seed: u64,
    pub sampling: Sampling,
}

/// Result of a greedy cover search.
#[derive(Debug, Clone)]
pub struct Cover {
    /// Selected tuples in selection order.
    pub chosen: Vec<Candidate>,
    pub mode: Mode,
    pub stats: ResidualStats,
    pub uncovered: Vec<Assignment>,
    /// `(gate upper bound, best residual ∸ ε)` for every sample.
    pub pairs: Vec<(f64, f64)>,
    /// No sample passed the gate.
    pub vacuous: bool,
}

impl Cover {
    pub fn complete(&self) -> bool {
        self.uncovered.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.stats.max.parse().unwrap_or(f64::NAN)
    }
}

/// `x̄` samples: every assignment of a small finite space, else `budget.samples`
/// radially stratified points.
pub fn draw_samples(
    s: &dyn Structure,
    x: &[Var],
    budget: &CoverBudget,
) -> (Vec<Assignment>, Sampling) {
    if let Some(all) = all_assignments(s, x, budget.max_exhaustive) {
        return (all, Sampling::Exhaustive);
    }
    let n = budget.samples;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut columns: Vec<Vec<Point>> = Vec::new();
    for v in x {
        let col = match s.universe(v.sort) {
            Universe::Finite(k) => (0..n)
                .map(|_| Point::Element(rng.random_range(0..k)))
                .collect(),
            Universe::Ball { dim, field } => {
                let mut strata: Vec<usize> = (0..n).collect();
                strata.shuffle(&mut rng);
                strata
                    .into_iter()
                    .map(|i| {
                        let r = ((i as f64 + rng.random::<f64>()) / n as f64).min(1.0);
                        Point::Vector(uniform_sphere(dim, field, &mut rng).scale(r))
                    })
                    .collect()
            }
        };
        columns.push(col);
    }
    let samples = (0..n)
        .map(|i| {
            x.iter()
                .zip(&columns)
                .map(|(v, c)| (v.name.clone(), c[i].clone()))
                .collect()
        })
        .collect();
    (samples, Sampling::Radial)
}

const GATE_STREAM: u64 = 0x6761_7465;

/// Gate enclosures for every sample, each with its own random stream.
pub fn gate_all(
    problem: &dyn CoverProblem,
    samples: &[Assignment],
    seed: u64,
) -> Result<Vec<Enclosure>, EvalError> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, env)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ GATE_STREAM);
            rng.set_stream(i as u64);
            problem.gate(env, &[], &mut rng)
        })
        .collect()
}

pub(crate) fn combine(sampling: Sampling, gates: &[Enclosure]) -> Mode {
    let base = match sampling {
        Sampling::Exhaustive => Mode::Exact,
        Sampling::Radial => Mode::Sampled,
    };
    gates.iter().map(|g| g.mode).fold(base, Mode::max)
}

/// Greedy set cover at level `eps` over the samples whose gate upper bound is
/// at most `gate`. Each step takes the tuple covering the most new samples;
/// ties go to the smaller residual sum over uncovered samples, then the
/// smaller ℓ¹ mass, then the smaller serialization.
pub fn greedy_cover(
    problem: &dyn CoverProblem,
    candidates: &[Candidate],
    eps: f64,
    gate: f64,
    budget: &CoverBudget,
) -> Result<Cover, HerbrandError> {
    if candidates.is_empty() {
        return Err(HerbrandError::EmptyCandidates);
    }
    if !(eps > 0.0 || (eps == 0.0 && budget.tolerance > 0.0)) {
        return Err(HerbrandError::NonPositiveEpsilon);
    }
    let s = problem.structure();
    let (samples, sampling) = draw_samples(s, problem.x_vars(), budget);
    let gates = gate_all(problem, &samples, budget.seed)?;
    let admitted: Vec<usize> = (0..samples.len())
        .filter(|&i| gates[i].hi <= gate + budget.tolerance)
        .collect();
    let residuals: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|c| {
            samples
                .iter()
                .map(|env| problem.residual(env, c))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let level = eps + budget.tolerance;
    let mut covered = vec![false; samples.len()];
    let mut remaining = admitted.len();
    let mut chosen: Vec<usize> = Vec::new();
    let keys: Vec<String> = candidates.iter().map(|c| c.key()).collect();
    let l1: Vec<f64> = candidates.iter().map(|c| c.l1()).collect();
    while remaining > 0 && chosen.len() < budget.max_terms {
        let scores: Vec<(usize, f64)> = residuals
            .par_iter()
            .map(|r| {
                let mut gain = 0;
                let mut sum = 0.0;
                for &i in &admitted {
                    if !covered[i] {
                        sum += r[i];
                        if r[i] <= level {
                            gain += 1;
                        }
                    }
                }
                (gain, sum)
            })
            .collect();
        let best = (0..candidates.len())
            .filter(|&c| scores[c].0 > 0)
            .min_by(|&a, &b| {
                scores[b]
                    .0
                    .cmp(&scores[a].0)
                    .then(scores[a].1.total_cmp(&scores[b].1))
                    .then(l1[a].total_cmp(&l1[b]))
                    .then(keys[a].cmp(&keys[b]))
            });
        let Some(c) = best else { break };
        for &i in &admitted {
            if !covered[i] && residuals[c][i] <= level {
                covered[i] = true;
                remaining -= 1;
            }
        }
        chosen.push(c);
    }
    let best_at = |i: usize| {
        chosen
            .iter()
            .map(|&c| residuals[c][i])
            .fold(f64::INFINITY, f64::min)
    };
    let max = admitted.iter().map(|&i| best_at(i)).fold(0.0, f64::max);
    let pairs = (0..samples.len())
        .map(|i| {
            let b = if chosen.is_empty() { 1.0 } else { best_at(i) };
            (gates[i].hi.clamp(0.0, 1.0), (b - eps).clamp(0.0, 1.0))
        })
        .collect();
    let uncovered = admitted
        .iter()
        .filter(|&&i| !covered[i])
        .map(|&i| samples[i].clone())
        .collect();
    Ok(Cover {
        chosen: chosen.iter().map(|&c| candidates[c].clone()).collect(),
        mode: combine(sampling, &gates),
        stats: ResidualStats {
            max: format_f64(max),
            samples: samples.len(),
            admitted: admitted.len(),
            seed: budget.seed,
            sampling,
        },
        uncovered,
        pairs,
        vacuous: admitted.is_empty(),
    })
}

fn finish(cover: Cover) -> Result<Cover, HerbrandError> {
    if cover.complete() {
        Ok(cover)
    } else {
        Err(HerbrandError::Uncovered(Box::new(cover)))
    }
}

/// Tuples of enumerated terms for the sorts of `y`.
pub fn classical_candidates(
    s: &dyn Structure,
    x: &[Var],
    y: &[Var],
    depth: usize,
    max_candidates: usize,
) -> Result<Vec<Candidate>, HerbrandError> {
    let budget = EnumerationBudget {
        depth,
        max_terms: max_candidates,
        ..Default::default()
    };
    let terms = enumerate_terms(s, x, &budget)?;
    let sig = s.signature();
    let sort_of = |t: &Term| -> Option<usize> {
        match t {
            Term::Var(v) => Some(v.sort),
            Term::Const(c) => sig.constant(c).map(|d| d.sort),
            Term::Apply(f, _) => sig.profile(f).map(|p| p.1),
        }
    };
    let per_y: Vec<Vec<Term>> = y
        .iter()
        .map(|v| {
            terms
                .iter()
                .filter(|t| sort_of(t) == Some(v.sort))
                .cloned()
                .collect()
        })
        .collect();
    let total = per_y
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
    match total {
        Some(n) if n <= max_candidates => {}
        _ => return Err(HerbrandError::TooManyCandidates(max_candidates)),
    }
    let mut out = vec![Vec::new()];
    for choices in &per_y {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Term>| {
                choices.iter().map(move |t| {
                    let mut p = prefix.clone();
                    p.push(t.clone());
                    p
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(Candidate::from_terms).collect())
}

/// Exact Herbrand search on a finite structure: every `x̄` with some `ȳ`
/// making `φ = 0` must be matched by a selected tuple of terms in `x̄` of
/// depth at most `depth`.
pub fn search_classical(
    s: &dyn Structure,
    phi: &Formula,
    x: &[Var],
    y: &[Var],
    depth: usize,
    budget: &CoverBudget,
) -> Result<Cover, HerbrandError> {
    for v in x.iter().chain(y) {
        if !matches!(s.universe(v.sort), Universe::Finite(_)) {
            return Err(HerbrandError::NotFinite(v.name.clone()));
        }
    }
    let candidates = classical_candidates(s, x, y, depth, budget.max_candidates)?;
    let problem = FormulaProblem::new(
        s,
        phi.clone(),
        x.to_vec(),
        y.to_vec(),
        EvalBudget::default(),
    );
    let cover = greedy_cover(&problem, &candidates, 0.0, 0.0, budget)?;
    if cover.mode != Mode::Exact {
        return Err(HerbrandError::NotFinite(
            x.iter()
                .map(|v| v.name.clone())
                .collect::<Vec<_>>()
                .join(","),
        ));
    }
    finish(cover)
}

/// Approximate Herbrand search: samples `x̄` with `inf_ȳ φ ≤ gate` and covers
/// them at level `eps` with tuples from `candidates`.
pub fn search_continuous(
    problem: &dyn CoverProblem,
    candidates: &[Candidate],
    eps: f64,
    gate: f64,
    budget: &CoverBudget,
) -> Result<Cover, HerbrandError> {
    finish(greedy_cover(problem, candidates, eps, gate, budget)?)
}

/// Covers a function on a Hilbert ball by candidate terms at level `eps`
/// after checking on the samples that it maps the ball into itself.
pub fn cover_definable_function(
    m: &HilbertModel,
    target: &Target,
    x: &[Var],
    eps: f64,
    candidates: &[Candidate],
    budget: &CoverBudget,
) -> Result<Cover, HerbrandError> {
    let (samples, _) = draw_samples(m, x, budget);
    for env in &samples {
        let fx = target.eval(m, x, env)?;
        if fx.norm() > 1.0 + budget.tolerance {
            return Err(HerbrandError::LeavesBall {
                witness: point_record(env),
                norm: format_f64(fx.norm()),
            });
        }
    }
    let problem = FunctionProblem {
        model: m,
        target: target.clone(),
        x: x.to_vec(),
    };
    search_continuous(&problem, candidates, eps, eps / 3.0, budget)
}

/// Printable form of an assignment.
pub fn point_record(env: &Assignment) -> BTreeMap<String, Vec<String>> {
    env.iter()
        .map(|(k, p)| {
            let v = match p {
                Point::Element(i) => vec![i.to_string()],
                Point::Vector(v) => v.iter().map(|z| format_c64(*z)).collect(),
            };
            (k.clone(), v)
        })
        .collect()
}

/// Points of the closed unit disk on the lattice of the given mesh (on
/// `[-1, 1]` for real fields), with `±1` always included.
pub fn disk_grid(mesh: &Rational, field: Field) -> Vec<QComplex> {
    use num_traits::{One, Signed, ToPrimitive};
    let n = (Rational::one() / mesh)
        .floor()
        .to_integer()
        .to_i64()
        .unwrap_or(0)
        .max(1);
    let mut out = Vec::new();
    let im_range = if field == Field::Complex {
        -n..=n
    } else {
        0..=0
    };
    for b in im_range {
        for a in -n..=n {
            let z = QComplex::new(
                mesh * Rational::from_integer(a.into()),
                mesh * Rational::from_integer(b.into()),
            );
            if crate::scalar::in_unit_disk(&z) {
                out.push(z);
            }
        }
    }
    for one in [Rational::one(), -Rational::one()] {
        let z = qreal(one);
        if !out.contains(&z) {
            out.push(z);
        }
    }
    out.sort_by(|a, b| {
        (a.re.abs() + a.im.abs(), &a.re, &a.im).cmp(&(b.re.abs() + b.im.abs(), &b.re, &b.im))
    });
    out
}

/// `0` and `μ·c` for every named constant `c` and nonzero `μ` in `coeffs`.
pub fn offset_net(m: &HilbertModel, coeffs: &[QComplex]) -> Vec<ExactNormalForm> {
    use num_traits::Zero;
    let mut out = vec![ExactNormalForm::default()];
    for name in m.constants().keys() {
        for mu in coeffs.iter().filter(|c| !c.is_zero()) {
            let atom = ExactNormalForm::atom(Atom {
                base: Base::Const(name.clone()),
                op: OpWord::Id,
            });
            out.push(atom.scaled(mu));
        }
    }
    out
}

/// Single-term candidates `Σ λ_i x_i + v` for every choice of `λ_i` in
/// `lambdas` and `v` in `offsets` with total mass at most 1.
pub fn affine_candidates(
    m: &HilbertModel,
    x: &[Var],
    lambdas: &[QComplex],
    offsets: &[ExactNormalForm],
    max_candidates: usize,
) -> Result<Vec<Candidate>, HerbrandError> {
    let mut forms = vec![ExactNormalForm::default()];
    for v in x {
        let mut next = Vec::new();
        for f in &forms {
            for l in lambdas {
                let mut g = f.clone();
                g.add_scaled(&ExactNormalForm::var(&v.name), l);
                if g.mass_at_most_one() {
                    next.push(g);
                }
            }
        }
        forms = next;
    }
    let mut out = Vec::new();
    for f in &forms {
        for o in offsets {
            let mut g = f.clone();
            g.add_scaled(o, &num_traits::One::one());
            if g.mass_at_most_one() {
                if out.len() >= max_candidates {
                    return Err(HerbrandError::TooManyCandidates(max_candidates));
                }
                out.push(Candidate::from_forms(m.signature(), vec![g])?);
            }
        }
    }
    Ok(out)
}

/// Normal forms of candidate terms under the tag of the model.
pub fn normalize_candidate(
    m: &HilbertModel,
    c: &Candidate,
) -> Result<Vec<ExactNormalForm>, HerbrandError> {
    let tag = TheoryTag::of(m);
    Ok(c.terms
        .iter()
        .map(|t| normalize_term(t, &tag))
        .collect::<Result<Vec<_>, _>>()?)
}
