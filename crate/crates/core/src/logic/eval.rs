//! Term evaluation and enclosure-valued formula evaluation.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::interval::interval_of;
use super::lipschitz::lipschitz_of;
use super::sampling::{ball_net, project_to_ball, uniform_ball, uniform_sphere};
use super::signature::{Field, Signature};
use super::structure::{Assignment, EvalError, Point, Structure, Universe, Vector};
use super::syntax::{Formula, Term, Var};
use crate::scalar::{rational_to_f64, Complex64};

/// How an enclosure was obtained, from strongest to weakest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Certified,
    Sampled,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Certified => "certified",
            Mode::Sampled => "sampled",
        })
    }
}

/// `[lo, hi]` with a mode. In exact and certified mode the true value lies in
/// the interval. In sampled mode it is the range of values seen at the best
/// points found; for `inf` over a quantifier-free body `hi` is still a true
/// upper bound (and `lo` a true lower bound for `sup`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
    pub mode: Mode,
}

impl Enclosure {
    pub fn exact(v: f64) -> Self {
        Enclosure {
            lo: v,
            hi: v,
            mode: Mode::Exact,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lo - tol <= x && x <= self.hi + tol
    }

    pub fn intersects(&self, other: &Enclosure, tol: f64) -> bool {
        self.lo <= other.hi + tol && other.lo <= self.hi + tol
    }

    fn with(lo: f64, hi: f64, a: Mode, b: Mode) -> Self {
        Enclosure {
            lo,
            hi,
            mode: a.max(b),
        }
    }
}

impl std::fmt::Display for Enclosure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}] {}", self.lo, self.hi, self.mode)
    }
}

/// Limits for quantifier evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalBudget {
    /// Covering radius of the nets used in certified mode.
    #[serde(with = "crate::scalar::decimal")]
    pub delta: f64,
    pub max_net_points: usize,
    /// Largest real dimension of a ball for which nets are built.
    pub max_certified_dim: usize,
    /// Random tuples per sampled quantifier block.
    pub samples: usize,
    pub max_seed_tuples: usize,
    /// Body evaluations spent on local refinement per start point.
    pub refine_evals: usize,
    pub refine_starts: usize,
    pub max_exhaustive: usize,
    #[serde(with = "crate::scalar::decimal")]
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for EvalBudget {
    fn default() -> Self {
        EvalBudget {
            delta: 0.05,
            max_net_points: 50_000,
            max_certified_dim: 4,
            samples: 256,
            max_seed_tuples: 100_000,
            refine_evals: 400,
            refine_starts: 3,
            max_exhaustive: 1_000_000,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

pub fn eval_term<S: Structure + ?Sized>(
    s: &S,
    t: &Term,
    env: &Assignment,
) -> Result<Point, EvalError> {
    match t {
        Term::Var(v) => env
            .get(&v.name)
            .cloned()
            .ok_or_else(|| EvalError::MissingVariable(v.name.clone())),
        Term::Const(c) => s.constant(c),
        Term::Apply(f, args) => {
            let vals = args
                .iter()
                .map(|a| eval_term(s, a, env))
                .collect::<Result<Vec<_>, _>>()?;
            s.apply(f, &vals)
        }
    }
}

/// Term arguments of the atoms of a formula.
fn atom_terms<'a>(phi: &'a Formula, out: &mut Vec<&'a Term>) {
    match phi {
        Formula::Metric(a, b) => out.extend([a, b]),
        Formula::Pred(_, ts) => out.extend(ts),
        _ => phi.children().into_iter().for_each(|c| atom_terms(c, out)),
    }
}

pub fn eval_formula<S: Structure + ?Sized>(
    s: &S,
    phi: &Formula,
    env: &Assignment,
    budget: &EvalBudget,
) -> Result<Enclosure, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    eval_formula_with(s, phi, env, budget, &mut rng, &[])
}

/// Like [`eval_formula`] with an explicit random source; `extra_seeds` are
/// tried for every ball-valued quantified variable in sampled mode.
pub fn eval_formula_with<S: Structure + ?Sized>(
    s: &S,
    phi: &Formula,
    env: &Assignment,
    budget: &EvalBudget,
    rng: &mut ChaCha8Rng,
    extra_seeds: &[Point],
) -> Result<Enclosure, EvalError> {
    let ev = Evaluator {
        s,
        sig: s.signature(),
        budget,
        extra_seeds,
        nets: RefCell::new(HashMap::new()),
    };
    let mut env = env.clone();
    ev.eval(phi, &mut env, rng)
}

/// Value of a quantifier-free formula.
pub fn eval_qf<S: Structure + ?Sized>(
    s: &S,
    phi: &Formula,
    env: &Assignment,
) -> Result<f64, EvalError> {
    let budget = EvalBudget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    eval_formula_with(s, phi, env, &budget, &mut rng, &[]).map(|e| e.midpoint())
}

type Net = Rc<Vec<Point>>;

struct Evaluator<'a, S: ?Sized> {
    s: &'a S,
    sig: &'a Signature,
    budget: &'a EvalBudget,
    extra_seeds: &'a [Point],
    nets: RefCell<HashMap<(usize, Field), Option<Net>>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Sup,
    Inf,
}

struct Agg {
    kind: Kind,
    lo: f64,
    hi: f64,
    mode: Mode,
}

impl Agg {
    fn new(kind: Kind) -> Self {
        match kind {
            Kind::Sup => Agg {
                kind,
                lo: f64::NEG_INFINITY,
                hi: f64::NEG_INFINITY,
                mode: Mode::Exact,
            },
            Kind::Inf => Agg {
                kind,
                lo: f64::INFINITY,
                hi: f64::INFINITY,
                mode: Mode::Exact,
            },
        }
    }

    fn push(&mut self, e: &Enclosure) {
        match self.kind {
            Kind::Sup => {
                self.lo = self.lo.max(e.lo);
                self.hi = self.hi.max(e.hi);
            }
            Kind::Inf => {
                self.lo = self.lo.min(e.lo);
                self.hi = self.hi.min(e.hi);
            }
        }
        self.mode = self.mode.max(e.mode);
    }

    fn score(kind: Kind, e: &Enclosure) -> f64 {
        match kind {
            Kind::Sup => e.hi,
            Kind::Inf => -e.lo,
        }
    }
}

enum Plan {
    Exhaustive(Vec<Net>),
    Certified(Vec<Net>),
    Sampled,
}

impl<'a, S: Structure + ?Sized> Evaluator<'a, S> {
    fn eval(
        &self,
        phi: &Formula,
        env: &mut Assignment,
        rng: &mut ChaCha8Rng,
    ) -> Result<Enclosure, EvalError> {
        Ok(match phi {
            Formula::Metric(a, b) => {
                let (x, y) = (eval_term(self.s, a, env)?, eval_term(self.s, b, env)?);
                Enclosure::exact(self.s.distance(&x, &y))
            }
            Formula::Pred(p, args) => {
                let vals = args
                    .iter()
                    .map(|a| eval_term(self.s, a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Enclosure::exact(self.s.predicate(p, &vals)?)
            }
            Formula::Const(q) => Enclosure::exact(rational_to_f64(q)),
            Formula::Neg(a) => {
                let iv = interval_of(a, self.sig).to_f64();
                let c = iv.lo() + iv.hi();
                let e = self.eval(a, env, rng)?;
                Enclosure {
                    lo: c - e.hi,
                    hi: c - e.lo,
                    mode: e.mode,
                }
            }
            Formula::Sub(a, r) => {
                let r = rational_to_f64(r);
                let e = self.eval(a, env, rng)?;
                Enclosure {
                    lo: (e.lo - r).max(0.0),
                    hi: (e.hi - r).max(0.0),
                    mode: e.mode,
                }
            }
            Formula::Min(a, b) => {
                let (x, y) = (self.eval(a, env, rng)?, self.eval(b, env, rng)?);
                Enclosure::with(x.lo.min(y.lo), x.hi.min(y.hi), x.mode, y.mode)
            }
            Formula::Max(a, b) => {
                let (x, y) = (self.eval(a, env, rng)?, self.eval(b, env, rng)?);
                Enclosure::with(x.lo.max(y.lo), x.hi.max(y.hi), x.mode, y.mode)
            }
            Formula::AbsDiff(a, b) => {
                let (x, y) = (self.eval(a, env, rng)?, self.eval(b, env, rng)?);
                let lo = (x.lo - y.hi).max(y.lo - x.hi).max(0.0);
                let hi = (x.hi - y.lo).max(y.hi - x.lo);
                Enclosure::with(lo, hi, x.mode, y.mode)
            }
            Formula::Scale(q, a) => {
                let q = rational_to_f64(q);
                let e = self.eval(a, env, rng)?;
                let (u, v) = (q * e.lo, q * e.hi);
                Enclosure {
                    lo: u.min(v),
                    hi: u.max(v),
                    mode: e.mode,
                }
            }
            Formula::AddC(q, a) => {
                let q = rational_to_f64(q);
                let e = self.eval(a, env, rng)?;
                Enclosure {
                    lo: e.lo + q,
                    hi: e.hi + q,
                    mode: e.mode,
                }
            }
            Formula::CSum(a, b) => {
                let (x, y) = (self.eval(a, env, rng)?, self.eval(b, env, rng)?);
                Enclosure::with(
                    (x.lo + y.lo).min(1.0),
                    (x.hi + y.hi).min(1.0),
                    x.mode,
                    y.mode,
                )
            }
            Formula::Sup(..) | Formula::Inf(..) => {
                let (kind, vars, body) = quantifier_block(phi);
                let saved: Vec<(String, Option<Point>)> = vars
                    .iter()
                    .map(|v| (v.name.clone(), env.get(&v.name).cloned()))
                    .collect();
                let out = self.block(kind, &vars, body, env, rng);
                for (name, old) in saved {
                    match old {
                        Some(p) => env.insert(name, p),
                        None => env.remove(&name),
                    };
                }
                out?
            }
        })
    }

    fn representative(&self, u: Universe) -> Point {
        match u {
            Universe::Finite(_) => Point::Element(0),
            Universe::Ball { dim, .. } => Point::Vector(Vector::zeros(dim)),
        }
    }

    fn net(&self, dim: usize, field: Field) -> Option<Net> {
        self.nets
            .borrow_mut()
            .entry((dim, field))
            .or_insert_with(|| {
                ball_net(dim, field, self.budget.delta, self.budget.max_net_points)
                    .map(|v| Rc::new(v.into_iter().map(Point::Vector).collect()))
            })
            .clone()
    }

    fn plan(&self, universes: &[Universe]) -> Plan {
        let all_finite = universes.iter().all(|u| matches!(u, Universe::Finite(_)));
        if all_finite {
            let mut total: usize = 1;
            for u in universes {
                if let Universe::Finite(n) = u {
                    total = total.saturating_mul(*n);
                }
            }
            if total <= self.budget.max_exhaustive {
                return Plan::Exhaustive(
                    universes
                        .iter()
                        .map(|u| match u {
                            Universe::Finite(n) => Rc::new((0..*n).map(Point::Element).collect()),
                            Universe::Ball { .. } => unreachable!(),
                        })
                        .collect(),
                );
            }
            return Plan::Sampled;
        }
        let mut lists = Vec::new();
        let mut total: usize = 1;
        for u in universes {
            let list = match *u {
                Universe::Finite(n) => Rc::new((0..n).map(Point::Element).collect::<Vec<_>>()),
                Universe::Ball { dim, field } => {
                    if dim * field.real_factor() > self.budget.max_certified_dim {
                        return Plan::Sampled;
                    }
                    match self.net(dim, field) {
                        Some(n) => n,
                        None => return Plan::Sampled,
                    }
                }
            };
            total = total.saturating_mul(list.len());
            if total > self.budget.max_net_points {
                return Plan::Sampled;
            }
            lists.push(list);
        }
        Plan::Certified(lists)
    }

    fn block(
        &self,
        kind: Kind,
        vars: &[&Var],
        body: &Formula,
        env: &mut Assignment,
        rng: &mut ChaCha8Rng,
    ) -> Result<Enclosure, EvalError> {
        let lip = lipschitz_of(body, self.sig);
        let mut relevant = Vec::new();
        for v in vars {
            let u = self.s.universe(v.sort);
            if lip.get(&v.name) == 0.0 {
                env.insert(v.name.clone(), self.representative(u));
            } else {
                relevant.push((*v, u));
            }
        }
        if relevant.is_empty() {
            return self.eval(body, env, rng);
        }
        let universes: Vec<Universe> = relevant.iter().map(|(_, u)| *u).collect();
        let names: Vec<&str> = relevant.iter().map(|(v, _)| v.name.as_str()).collect();
        let mut agg = Agg::new(kind);
        match self.plan(&universes) {
            Plan::Exhaustive(lists) => {
                self.product(&names, &lists, body, env, rng, &mut agg)?;
            }
            Plan::Certified(lists) => {
                self.product(&names, &lists, body, env, rng, &mut agg)?;
                let slack: f64 = relevant
                    .iter()
                    .filter(|(_, u)| matches!(u, Universe::Ball { .. }))
                    .map(|(v, _)| lip.get(&v.name) * self.budget.delta)
                    .sum();
                match kind {
                    Kind::Sup => agg.hi += slack,
                    Kind::Inf => agg.lo -= slack,
                }
                let iv = interval_of(body, self.sig).to_f64();
                agg.lo = agg.lo.max(*iv.lo()).min(*iv.hi());
                agg.hi = agg.hi.min(*iv.hi()).max(agg.lo);
                agg.mode = agg.mode.max(Mode::Certified);
            }
            Plan::Sampled => {
                self.sampled(kind, &names, &universes, body, env, rng, &mut agg)?;
                agg.mode = Mode::Sampled;
            }
        }
        Ok(Enclosure {
            lo: agg.lo,
            hi: agg.hi,
            mode: agg.mode,
        })
    }

    fn product(
        &self,
        names: &[&str],
        lists: &[Net],
        body: &Formula,
        env: &mut Assignment,
        rng: &mut ChaCha8Rng,
        agg: &mut Agg,
    ) -> Result<(), EvalError> {
        if lists.iter().any(|l| l.is_empty()) {
            return Ok(());
        }
        let mut idx = vec![0usize; lists.len()];
        for (k, name) in names.iter().enumerate() {
            env.insert(name.to_string(), lists[k][0].clone());
        }
        loop {
            let e = self.eval(body, env, rng)?;
            agg.push(&e);
            let mut k = 0;
            loop {
                if k == lists.len() {
                    return Ok(());
                }
                idx[k] += 1;
                if idx[k] < lists[k].len() {
                    env.insert(names[k].to_string(), lists[k][idx[k]].clone());
                    break;
                }
                idx[k] = 0;
                env.insert(names[k].to_string(), lists[k][0].clone());
                k += 1;
            }
        }
    }

    fn seeds(&self, v_sort: usize, u: Universe, env: &Assignment, body: &Formula) -> Vec<Point> {
        match u {
            Universe::Finite(n) => (0..n).map(Point::Element).collect(),
            Universe::Ball { dim, .. } => {
                let mut out = self.s.seed_points(v_sort);
                let fits = |p: &Point| p.as_vector().is_some_and(|x| x.len() == dim);
                out.extend(env.values().filter(|p| fits(p)).cloned());
                let mut terms = Vec::new();
                atom_terms(body, &mut terms);
                for t in terms {
                    if t.vars().iter().all(|v| env.contains_key(&v.name)) {
                        if let Ok(p) = eval_term(self.s, t, env) {
                            if fits(&p) && !out.contains(&p) {
                                out.push(p);
                            }
                        }
                    }
                }
                out.extend(self.extra_seeds.iter().filter(|p| fits(p)).cloned());
                if out.is_empty() {
                    out.push(Point::Vector(Vector::zeros(dim)));
                }
                out
            }
        }
    }

    fn random_point(&self, u: Universe, i: usize, rng: &mut ChaCha8Rng) -> Point {
        match u {
            Universe::Finite(n) => Point::Element(rng.random_range(0..n)),
            Universe::Ball { dim, field } => Point::Vector(if i.is_multiple_of(2) {
                uniform_ball(dim, field, rng)
            } else {
                uniform_sphere(dim, field, rng)
            }),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn sampled(
        &self,
        kind: Kind,
        names: &[&str],
        universes: &[Universe],
        body: &Formula,
        env: &mut Assignment,
        rng: &mut ChaCha8Rng,
        agg: &mut Agg,
    ) -> Result<(), EvalError> {
        let starts = self.budget.refine_starts.max(1);
        let mut best: Vec<(f64, Vec<Point>)> = Vec::new();
        let outer_env = env.clone();
        let sorts: Vec<usize> = names.iter().map(|n| self.var_sort(body, n)).collect();
        let seeds: Vec<Vec<Point>> = universes
            .iter()
            .zip(&sorts)
            .map(|(u, s)| self.seeds(*s, *u, &outer_env, body))
            .collect();
        let mut try_tuple = |tuple: Vec<Point>,
                             env: &mut Assignment,
                             rng: &mut ChaCha8Rng,
                             agg: &mut Agg|
         -> Result<(), EvalError> {
            for (n, p) in names.iter().zip(&tuple) {
                env.insert(n.to_string(), p.clone());
            }
            let e = self.eval(body, env, rng)?;
            agg.push(&e);
            let sc = Agg::score(kind, &e);
            if best.len() < starts || sc > best.last().map(|b| b.0).unwrap_or(f64::NEG_INFINITY) {
                let pos = best.iter().position(|b| sc > b.0).unwrap_or(best.len());
                best.insert(pos, (sc, tuple));
                best.truncate(starts);
            }
            Ok(())
        };

        let mut count: usize = 1;
        for s in &seeds {
            count = count.saturating_mul(s.len());
        }
        if count <= self.budget.max_seed_tuples {
            let mut idx = vec![0usize; seeds.len()];
            'outer: loop {
                let tuple = idx.iter().zip(&seeds).map(|(i, s)| s[*i].clone()).collect();
                try_tuple(tuple, env, rng, agg)?;
                let mut k = 0;
                loop {
                    if k == seeds.len() {
                        break 'outer;
                    }
                    idx[k] += 1;
                    if idx[k] < seeds[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        } else {
            for _ in 0..self.budget.max_seed_tuples {
                let tuple = seeds
                    .iter()
                    .map(|s| s[rng.random_range(0..s.len())].clone())
                    .collect();
                try_tuple(tuple, env, rng, agg)?;
            }
        }
        for i in 0..self.budget.samples {
            let tuple = universes
                .iter()
                .map(|u| self.random_point(*u, i, rng))
                .collect();
            try_tuple(tuple, env, rng, agg)?;
        }

        if universes.iter().any(|u| matches!(u, Universe::Ball { .. })) {
            let starts: Vec<(f64, Vec<Point>)> = best.clone();
            for (score, tuple) in starts {
                self.refine(kind, names, universes, body, env, rng, agg, score, tuple)?;
            }
        }
        Ok(())
    }

    fn var_sort(&self, body: &Formula, name: &str) -> usize {
        fn find(f: &Formula, name: &str) -> Option<usize> {
            match f {
                Formula::Sup(v, b) | Formula::Inf(v, b) if v.name == name => {
                    Some(v.sort).or_else(|| find(b, name))
                }
                Formula::Metric(a, b) => a
                    .vars()
                    .iter()
                    .chain(b.vars().iter())
                    .find(|v| v.name == name)
                    .map(|v| v.sort),
                Formula::Pred(_, ts) => ts
                    .iter()
                    .flat_map(|t| t.vars())
                    .find(|v| v.name == name)
                    .map(|v| v.sort),
                _ => f.children().into_iter().find_map(|c| find(c, name)),
            }
        }
        find(body, name).unwrap_or(0)
    }

    /// Compass search over the real coordinates of the ball-valued variables.
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        kind: Kind,
        names: &[&str],
        universes: &[Universe],
        body: &Formula,
        env: &mut Assignment,
        rng: &mut ChaCha8Rng,
        agg: &mut Agg,
        mut score: f64,
        mut current: Vec<Point>,
    ) -> Result<(), EvalError> {
        let mut dirs: Vec<(usize, usize, bool)> = Vec::new();
        for (vi, u) in universes.iter().enumerate() {
            if let Universe::Ball { dim, field } = u {
                for k in 0..*dim {
                    dirs.push((vi, k, false));
                    if *field == Field::Complex {
                        dirs.push((vi, k, true));
                    }
                }
            }
        }
        let mut h = 0.25;
        let mut evals = 0;
        while evals < self.budget.refine_evals && h > 1e-9 {
            let mut moved = false;
            'poll: for &(vi, k, imag) in &dirs {
                for sign in [1.0, -1.0] {
                    if evals >= self.budget.refine_evals {
                        break 'poll;
                    }
                    let mut cand = current.clone();
                    if let Point::Vector(v) = &mut cand[vi] {
                        let step = if imag {
                            Complex64::new(0.0, sign * h)
                        } else {
                            Complex64::new(sign * h, 0.0)
                        };
                        v[k] += step;
                        project_to_ball(v);
                    }
                    for (n, p) in names.iter().zip(&cand) {
                        env.insert(n.to_string(), p.clone());
                    }
                    let e = self.eval(body, env, rng)?;
                    evals += 1;
                    agg.push(&e);
                    let sc = Agg::score(kind, &e);
                    if sc > score {
                        score = sc;
                        current = cand;
                        moved = true;
                        break 'poll;
                    }
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        Ok(())
    }
}

/// Splits a maximal run of quantifiers of one kind off `phi`.
fn quantifier_block(phi: &Formula) -> (Kind, Vec<&Var>, &Formula) {
    let kind = match phi {
        Formula::Sup(..) => Kind::Sup,
        _ => Kind::Inf,
    };
    let mut vars: Vec<&Var> = Vec::new();
    let mut cur = phi;
    loop {
        match (kind, cur) {
            (Kind::Sup, Formula::Sup(v, b)) | (Kind::Inf, Formula::Inf(v, b))
                if !vars.iter().any(|w| w.name == v.name) =>
            {
                vars.push(v);
                cur = b;
            }
            _ => return (kind, vars, cur),
        }
    }
}
