use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::alpha::{AlphaEnvelope, AlphaRecord};
use super::cover::{
    combine, draw_samples, gate_all, point_record, Candidate, Cover, CoverBudget, CoverProblem,
    FormulaProblem, FunctionProblem, ResidualStats, Target,
};
use super::HerbrandError;
use crate::logic::eval::{eval_qf, eval_term, EvalBudget, Mode};
use crate::logic::parse::{parse_formula, parse_term};
use crate::logic::signature::Signature;
use crate::logic::structure::{Assignment, Structure};
use crate::logic::syntax::{Formula, Var};
use crate::models::file::{Model, ModelFile};
use crate::normalizer::{
    all_assignments, normalize_term, ExactNormalForm, NormalFormRecord, TheoryTag,
};
use crate::scalar::{format_f64, parse_f64};

/// What a certificate covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemRecord {
    /// `φ(x̄, ȳ)` as formula text; variables are `name` or `name:sort`.
    Formula {
        formula: String,
        x: Vec<String>,
        y: Vec<String>,
    },
    /// A function target (`identity`, `radial-shrink`, `term:<text>`).
    Function { target: String, x: Vec<String> },
}

/// One witness tuple: term text per existential variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub terms: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub normal_forms: Vec<NormalFormRecord>,
}

/// Herbrand certificate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerbrandCertificate {
    pub problem: ProblemRecord,
    pub epsilon: String,
    /// Samples with `inf_ȳ φ` at most this value must be covered.
    pub gate: String,
    pub mode: Mode,
    pub terms: Vec<WitnessRecord>,
    pub residual: ResidualStats,
    pub search: CoverBudget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvalBudget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub uncovered: Vec<BTreeMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
    pub model: ModelFile,
}

/// Outcome of re-checking a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub ok: bool,
    pub mode: Mode,
    pub max_residual: String,
    pub problems: Vec<String>,
}

pub fn var_text(v: &Var) -> String {
    v.to_string()
}

pub fn parse_var(text: &str) -> Result<Var, HerbrandError> {
    match text.split_once(':') {
        None => Ok(Var::new(text)),
        Some((name, sort)) => {
            let sort = sort
                .parse()
                .map_err(|_| HerbrandError::Certificate(format!("bad variable `{text}`")))?;
            Ok(Var::with_sort(name, sort))
        }
    }
}

fn parse_vars(names: &[String]) -> Result<Vec<Var>, HerbrandError> {
    names.iter().map(|n| parse_var(n)).collect()
}

impl HerbrandCertificate {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: ProblemRecord,
        model: ModelFile,
        eps: f64,
        gate: f64,
        cover: &Cover,
        search: CoverBudget,
        evaluation: Option<EvalBudget>,
    ) -> Self {
        HerbrandCertificate {
            problem,
            epsilon: format_f64(eps),
            gate: format_f64(gate),
            mode: cover.mode,
            terms: cover.chosen.iter().map(witness_record).collect(),
            residual: cover.stats.clone(),
            search,
            evaluation,
            alpha: None,
            uncovered: cover.uncovered.iter().map(point_record).collect(),
            vacuous: cover.vacuous,
            model,
        }
    }

    pub fn with_alpha(mut self, alpha: &AlphaEnvelope) -> Self {
        self.alpha = Some(alpha.to_record());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, HerbrandError> {
        serde_json::from_str(text).map_err(|e| HerbrandError::Certificate(e.to_string()))
    }

    pub fn epsilon(&self) -> Result<f64, HerbrandError> {
        number(&self.epsilon)
    }

    /// Re-checks the certificate against its embedded model. Exact
    /// certificates are checked by exhaustion without the search code; others
    /// by regenerating the samples from the recorded seed.
    pub fn verify(&self) -> Result<VerifyReport, HerbrandError> {
        let model = self.model.build()?;
        let s = model.structure();
        let sig = s.signature();
        let eps = number(&self.epsilon)?;
        let gate = number(&self.gate)?;
        let tol = self.search.tolerance;
        let mut problems = Vec::new();
        let mut chosen = Vec::new();
        for w in &self.terms {
            let terms = w
                .terms
                .iter()
                .map(|t| parse_term(t, sig))
                .collect::<Result<Vec<_>, _>>()?;
            let mut forms = Vec::new();
            if !w.normal_forms.is_empty() {
                let Model::Hilbert(h) = &model else {
                    return Err(HerbrandError::Certificate(
                        "normal forms need a Hilbert model".into(),
                    ));
                };
                for (t, r) in terms.iter().zip(&w.normal_forms) {
                    let recorded = ExactNormalForm::from_record(r)?;
                    if normalize_term(t, &TheoryTag::of(h))? != recorded {
                        problems.push(format!("normal form of `{t}` does not match its record"));
                    }
                    forms.push(recorded);
                }
            }
            chosen.push(Candidate { terms, forms });
        }
        if !self.uncovered.is_empty() {
            problems.push(format!(
                "{} samples recorded as uncovered",
                self.uncovered.len()
            ));
        }
        let (max, pairs) = match self.mode {
            Mode::Exact => self.verify_exact(s, sig, &chosen, eps, gate, tol, &mut problems)?,
            _ => self.verify_sampled(&model, &chosen, eps, gate, tol, &mut problems)?,
        };
        let max_text = format_f64(max);
        if max_text != self.residual.max {
            problems.push(format!(
                "residual max {} recomputed as {}",
                self.residual.max, max_text
            ));
        }
        if max > eps + tol {
            problems.push(format!(
                "residual {max_text} exceeds epsilon {}",
                self.epsilon
            ));
        }
        if let Some(rec) = &self.alpha {
            let alpha = AlphaEnvelope::from_record(rec)
                .ok_or_else(|| HerbrandError::Certificate("bad alpha knots".into()))?;
            check_alpha(&alpha, &pairs, tol, &mut problems);
        }
        Ok(VerifyReport {
            ok: problems.is_empty(),
            mode: self.mode,
            max_residual: max_text,
            problems,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn verify_exact(
        &self,
        s: &dyn Structure,
        sig: &Signature,
        chosen: &[Candidate],
        eps: f64,
        gate: f64,
        tol: f64,
        problems: &mut Vec<String>,
    ) -> Result<(f64, Vec<(f64, f64)>), HerbrandError> {
        let ProblemRecord::Formula { formula, x, y } = &self.problem else {
            return Err(HerbrandError::Certificate(
                "exact certificates need a formula".into(),
            ));
        };
        let phi: Formula = parse_formula(formula, sig)?;
        let (x, y) = (parse_vars(x)?, parse_vars(y)?);
        let limit = self.search.max_exhaustive;
        let xs = all_assignments(s, &x, limit)
            .ok_or_else(|| HerbrandError::NotFinite(formula.clone()))?;
        let ys = all_assignments(s, &y, limit)
            .ok_or_else(|| HerbrandError::NotFinite(formula.clone()))?;
        let mut max: f64 = 0.0;
        let mut admitted = 0;
        let mut pairs = Vec::new();
        for ex in &xs {
            let mut inf = f64::INFINITY;
            for ey in &ys {
                let mut env = ex.clone();
                env.extend(ey.iter().map(|(k, v)| (k.clone(), v.clone())));
                inf = inf.min(eval_qf(s, &phi, &env)?);
            }
            let mut best = f64::INFINITY;
            for c in chosen {
                let mut env = ex.clone();
                for (v, t) in y.iter().zip(&c.terms) {
                    env.insert(v.name.clone(), eval_term(s, t, ex)?);
                }
                best = best.min(eval_qf(s, &phi, &env)?);
            }
            pairs.push((inf.clamp(0.0, 1.0), (best - eps).clamp(0.0, 1.0)));
            if inf <= gate + tol {
                admitted += 1;
                max = max.max(best);
                if best > eps + tol {
                    problems.push(format!("uncovered point {:?}", point_record(ex)));
                }
            }
        }
        if xs.len() != self.residual.samples || admitted != self.residual.admitted {
            problems.push(format!(
                "sample counts {}/{} recomputed as {}/{}",
                self.residual.admitted,
                self.residual.samples,
                admitted,
                xs.len()
            ));
        }
        Ok((max, pairs))
    }

    fn verify_sampled(
        &self,
        model: &Model,
        chosen: &[Candidate],
        eps: f64,
        gate: f64,
        tol: f64,
        problems: &mut Vec<String>,
    ) -> Result<(f64, Vec<(f64, f64)>), HerbrandError> {
        let problem = self.problem_for(model)?;
        let (samples, sampling) = draw_samples(problem.structure(), problem.x_vars(), &self.search);
        let gates = gate_all(problem.as_ref(), &samples, self.search.seed)?;
        let mut max: f64 = 0.0;
        let mut admitted = 0;
        let mut pairs = Vec::new();
        for (env, g) in samples.iter().zip(&gates) {
            let best = best_residual(problem.as_ref(), env, chosen)?;
            pairs.push((g.hi.clamp(0.0, 1.0), (best - eps).clamp(0.0, 1.0)));
            if g.hi <= gate + tol {
                admitted += 1;
                max = max.max(best);
            }
        }
        if sampling != self.residual.sampling
            || samples.len() != self.residual.samples
            || admitted != self.residual.admitted
        {
            problems.push("regenerated samples differ from the recorded ones".into());
        }
        if combine(sampling, &gates) != self.mode {
            problems.push(format!("mode recomputed as {}", combine(sampling, &gates)));
        }
        Ok((max, pairs))
    }

    /// The cover problem described by the certificate, over `model`.
    pub fn problem_for<'a>(
        &self,
        model: &'a Model,
    ) -> Result<Box<dyn CoverProblem + 'a>, HerbrandError> {
        match &self.problem {
            ProblemRecord::Formula { formula, x, y } => {
                let s = model.structure();
                let phi = parse_formula(formula, s.signature())?;
                let budget = self.evaluation.clone().unwrap_or_default();
                Ok(Box::new(FormulaProblem::new(
                    s,
                    phi,
                    parse_vars(x)?,
                    parse_vars(y)?,
                    budget,
                )))
            }
            ProblemRecord::Function { target, x } => {
                let Model::Hilbert(m) = model else {
                    return Err(HerbrandError::Certificate(
                        "function targets need a Hilbert model".into(),
                    ));
                };
                let target = Target::parse(target, m.signature())?;
                Ok(Box::new(FunctionProblem {
                    model: m,
                    target,
                    x: parse_vars(x)?,
                }))
            }
        }
    }
}

fn best_residual(
    problem: &dyn CoverProblem,
    env: &Assignment,
    chosen: &[Candidate],
) -> Result<f64, HerbrandError> {
    let mut best = if chosen.is_empty() {
        1.0
    } else {
        f64::INFINITY
    };
    for c in chosen {
        best = best.min(problem.residual(env, c)?);
    }
    Ok(best)
}

fn check_alpha(alpha: &AlphaEnvelope, pairs: &[(f64, f64)], tol: f64, problems: &mut Vec<String>) {
    let k = &alpha.knots;
    if k.first() != Some(&(0.0, 0.0)) {
        problems.push("alpha does not start at (0, 0)".into());
    }
    if k.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1) {
        problems.push("alpha is not nondecreasing".into());
    }
    if !alpha.dominates(pairs, tol) {
        problems.push("alpha does not dominate the regenerated pairs".into());
    }
}

fn number(text: &str) -> Result<f64, HerbrandError> {
    parse_f64(text).ok_or_else(|| HerbrandError::Certificate(format!("bad number `{text}`")))
}

pub fn witness_record(c: &Candidate) -> WitnessRecord {
    WitnessRecord {
        terms: c.terms.iter().map(|t| t.to_string()).collect(),
        normal_forms: c.forms.iter().map(|f| f.to_record()).collect(),
    }
}
