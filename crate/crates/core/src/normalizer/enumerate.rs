use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::eval::eval_term;
use crate::logic::sampling::{uniform_ball, uniform_sphere};
use crate::logic::signature::{FuncSym, SortId};
use crate::logic::structure::{Assignment, EvalError, Point, Structure, Universe};
use crate::logic::syntax::{Term, Var};
use crate::scalar::{affine_pair_admissible, QComplex};

/// Outcome of a randomized (or exhaustive) term comparison.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub equal: bool,
    pub max_distance: f64,
    /// Assignment attaining `max_distance`.
    pub witness: Option<Assignment>,
    /// Every assignment of a finite structure was checked.
    pub exhaustive: bool,
}

/// A random point of a sort: alternately inside the ball and on its sphere.
pub fn random_point<R: Rng + ?Sized>(u: Universe, k: usize, rng: &mut R) -> Point {
    match u {
        Universe::Finite(n) => Point::Element(rng.random_range(0..n)),
        Universe::Ball { dim, field } => Point::Vector(if k.is_multiple_of(2) {
            uniform_ball(dim, field, rng)
        } else {
            uniform_sphere(dim, field, rng)
        }),
    }
}

/// All assignments of `vars` when every sort is finite and there are at most
/// `limit` of them.
pub fn all_assignments<S: Structure + ?Sized>(
    s: &S,
    vars: &[Var],
    limit: usize,
) -> Option<Vec<Assignment>> {
    let mut sizes = Vec::new();
    let mut total: usize = 1;
    for v in vars {
        match s.universe(v.sort) {
            Universe::Finite(n) => {
                sizes.push(n);
                total = total.checked_mul(n)?;
            }
            Universe::Ball { .. } => return None,
        }
    }
    if total > limit {
        return None;
    }
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut env = Assignment::new();
        for (v, n) in vars.iter().zip(&sizes).rev() {
            env.insert(v.name.clone(), Point::Element(idx % n));
            idx /= n;
        }
        out.push(env);
    }
    Some(out)
}

/// `count` seeded random assignments of `vars`.
pub fn random_assignments<S: Structure + ?Sized>(
    s: &S,
    vars: &[Var],
    count: usize,
    seed: u64,
) -> Vec<Assignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            vars.iter()
                .map(|v| {
                    (
                        v.name.clone(),
                        random_point(s.universe(v.sort), k, &mut rng),
                    )
                })
                .collect()
        })
        .collect()
}

fn union_vars(t1: &Term, t2: &Term) -> Vec<Var> {
    let mut vs = t1.vars();
    vs.extend(t2.vars());
    vs.into_iter().collect()
}

/// Compares two terms by evaluating both at every assignment of a finite
/// structure (up to 10^6 of them), else at `trials` random assignments.
pub fn term_equal_semantic<S: Structure + ?Sized>(
    t1: &Term,
    t2: &Term,
    s: &S,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<Verdict, EvalError> {
    let vars = union_vars(t1, t2);
    let (envs, exhaustive) = match all_assignments(s, &vars, 1_000_000) {
        Some(envs) => (envs, true),
        None => (random_assignments(s, &vars, trials, seed), false),
    };
    let mut max_distance = 0.0;
    let mut witness = None;
    for env in envs {
        let d = s.distance(&eval_term(s, t1, &env)?, &eval_term(s, t2, &env)?);
        if d > max_distance || witness.is_none() {
            max_distance = d;
            witness = Some(env);
        }
    }
    Ok(Verdict {
        equal: max_distance <= tol,
        max_distance,
        witness,
        exhaustive,
    })
}

/// Limits for [`enumerate_terms`].
#[derive(Debug, Clone)]
pub struct EnumerationBudget {
    pub depth: usize,
    /// Upper bound on distinct terms kept.
    pub max_terms: usize,
    /// Coefficients allowed in affine symbols `f[α,β]`.
    pub grid: Vec<QComplex>,
    /// Random assignments used to separate terms on infinite sorts.
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            depth: 2,
            max_terms: 10_000,
            grid: Vec::new(),
            trials: 32,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnumerateError {
    #[error("more than {0} distinct terms")]
    TooManyTerms(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

struct Pool<'a, S: ?Sized> {
    s: &'a S,
    envs: Vec<Assignment>,
    exhaustive: bool,
    tol: f64,
    terms: Vec<(Term, SortId, usize)>,
    values: Vec<Vec<Point>>,
    keys: HashMap<Vec<usize>, usize>,
    max_terms: usize,
}

impl<S: Structure + ?Sized> Pool<'_, S> {
    fn offer(&mut self, t: Term, sort: SortId, level: usize) -> Result<(), EnumerateError> {
        let vals = self
            .envs
            .iter()
            .map(|env| eval_term(self.s, &t, env))
            .collect::<Result<Vec<_>, _>>()?;
        if self.exhaustive {
            let key: Vec<usize> = std::iter::once(sort)
                .chain(vals.iter().map(|p| p.as_element().unwrap_or(usize::MAX)))
                .collect();
            if self.keys.contains_key(&key) {
                return Ok(());
            }
            self.keys.insert(key, self.terms.len());
        } else {
            let same = self
                .values
                .iter()
                .zip(&self.terms)
                .any(|(old, (_, so, _))| {
                    *so == sort
                        && old
                            .iter()
                            .zip(&vals)
                            .all(|(a, b)| self.s.distance(a, b) <= self.tol)
                });
            if same {
                return Ok(());
            }
        }
        if self.terms.len() >= self.max_terms {
            return Err(EnumerateError::TooManyTerms(self.max_terms));
        }
        self.terms.push((t, sort, level));
        self.values.push(vals);
        Ok(())
    }
}

fn symbols<S: Structure + ?Sized>(s: &S, grid: &[QComplex]) -> Vec<FuncSym> {
    let sig = s.signature();
    let mut out = Vec::new();
    if sig.affine_family().is_some() {
        for a in grid {
            for b in grid {
                if affine_pair_admissible(a, b) {
                    if let Ok(f) = sig.affine_symbol(a.clone(), b.clone()) {
                        out.push(f);
                    }
                }
            }
        }
    }
    out.extend(sig.functions().map(|d| FuncSym::named(d.name.clone())));
    out
}

/// Terms in `vars` of depth at most `budget.depth`, one per semantic class on
/// `s`, listed by depth, then symbol, then argument order. The first term found
/// in each class is kept.
pub fn enumerate_terms<S: Structure + ?Sized>(
    s: &S,
    vars: &[Var],
    budget: &EnumerationBudget,
) -> Result<Vec<Term>, EnumerateError> {
    let (envs, exhaustive) = match all_assignments(s, vars, 100_000) {
        Some(envs) => (envs, true),
        None => (
            random_assignments(s, vars, budget.trials, budget.seed),
            false,
        ),
    };
    let mut pool = Pool {
        s,
        envs,
        exhaustive,
        tol: budget.tolerance,
        terms: Vec::new(),
        values: Vec::new(),
        keys: HashMap::new(),
        max_terms: budget.max_terms,
    };
    let sig = s.signature();
    for v in vars {
        pool.offer(Term::Var(v.clone()), v.sort, 0)?;
    }
    let mut consts: Vec<_> = sig.constants().collect();
    consts.sort_by(|a, b| a.name.cmp(&b.name));
    for c in consts {
        pool.offer(Term::constant(&c.name), c.sort, 0)?;
    }
    let syms = symbols(s, &budget.grid);
    for level in 1..=budget.depth {
        let known = pool.terms.clone();
        for f in &syms {
            let Some((inputs, output, _)) = sig.profile(f) else {
                continue;
            };
            let choices: Vec<Vec<&(Term, SortId, usize)>> = inputs
                .iter()
                .map(|so| known.iter().filter(|(_, s2, _)| s2 == so).collect())
                .collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; inputs.len()];
            'tuples: loop {
                let args: Vec<&(Term, SortId, usize)> =
                    idx.iter().zip(&choices).map(|(i, c)| c[*i]).collect();
                if args.iter().any(|(_, _, l)| *l + 1 == level) {
                    let t =
                        Term::Apply(f.clone(), args.iter().map(|(t, _, _)| t.clone()).collect());
                    pool.offer(t, output, level)?;
                }
                let mut k = idx.len();
                loop {
                    if k == 0 {
                        break 'tuples;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
    }
    Ok(pool.terms.into_iter().map(|(t, _, _)| t).collect())
}
