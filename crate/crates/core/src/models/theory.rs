//! Theories as lists of closed conditions, and residual checking.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::hilbert::{action_symbol, HilbertModel};
use crate::logic::eval::{eval_formula_with, Enclosure, EvalBudget, Mode};
use crate::logic::parse::{parse_formula, ParseError};
use crate::logic::signature::{Field, Signature};
use crate::logic::structure::{EvalError, Structure};
use crate::logic::syntax::{Formula, Term};
use crate::scalar::{qreal, rational_unit_circle_point, QComplex, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Universal,
    Existential,
}

/// The condition `sentence = 0`.
#[derive(Debug, Clone)]
pub struct Condition {
    pub name: String,
    pub sentence: Formula,
    pub kind: ConditionKind,
}

#[derive(Debug, Clone)]
pub struct Theory {
    pub name: String,
    pub signature: Signature,
    pub conditions: Vec<Condition>,
    /// Scheme instances that the model is too small to test.
    pub untestable: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TheoryError {
    #[error("structure does not interpret the symbols of theory `{0}`")]
    SignatureMismatch(String),
    #[error("condition `{0}` has free variables")]
    NotASentence(String),
    #[error("condition `{name}`: {source}")]
    Parse { name: String, source: ParseError },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Theory {
    pub fn new(name: &str, signature: &Signature) -> Self {
        Theory {
            name: name.to_string(),
            signature: signature.clone(),
            conditions: Vec::new(),
            untestable: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        name: &str,
        sentence: Formula,
        kind: ConditionKind,
    ) -> Result<(), TheoryError> {
        if !sentence.is_sentence() {
            return Err(TheoryError::NotASentence(name.to_string()));
        }
        self.conditions.push(Condition {
            name: name.to_string(),
            sentence,
            kind,
        });
        Ok(())
    }

    pub fn add(&mut self, name: &str, text: &str, kind: ConditionKind) -> Result<(), TheoryError> {
        let f = parse_formula(text, &self.signature).map_err(|source| TheoryError::Parse {
            name: name.to_string(),
            source,
        })?;
        self.push(name, f, kind)
    }

    fn universal(&mut self, name: &str, text: &str) -> Result<(), TheoryError> {
        self.add(name, text, ConditionKind::Universal)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomResult {
    pub name: String,
    pub sentence: String,
    pub kind: ConditionKind,
    pub enclosure: Enclosure,
    pub pass: bool,
    /// Set for sampled enclosures, which are evidence rather than proof.
    pub advisory: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub theory: String,
    pub tolerance: f64,
    pub results: Vec<AxiomResult>,
    pub untestable: Vec<String>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.results
            .iter()
            .map(|r| r.enclosure.hi)
            .fold(0.0, f64::max)
    }
}

/// Evaluates every condition; a condition passes when its enclosure's upper
/// end is at most `tol`.
pub fn check_axioms<S: Structure + ?Sized>(
    s: &S,
    theory: &Theory,
    tol: f64,
    budget: &EvalBudget,
) -> Result<AxiomReport, TheoryError> {
    if !s.signature().extends(&theory.signature) {
        return Err(TheoryError::SignatureMismatch(theory.name.clone()));
    }
    let results = theory
        .conditions
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
            rng.set_stream(i as u64);
            let e = eval_formula_with(s, &c.sentence, &Default::default(), budget, &mut rng, &[])?;
            Ok(AxiomResult {
                name: c.name.clone(),
                sentence: c.sentence.to_string(),
                kind: c.kind,
                enclosure: e,
                pass: e.hi <= tol,
                advisory: e.mode == Mode::Sampled,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(AxiomReport {
        theory: theory.name.clone(),
        tolerance: tol,
        results,
        untestable: theory.untestable.clone(),
    })
}

fn vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("v{i}")).collect()
}

fn quantify(q: &str, names: &[String], body: &str) -> String {
    let mut s = String::new();
    for v in names {
        s.push_str(&format!("{q} {v} . "));
    }
    s.push_str(body);
    s
}

fn max_text(items: &[String]) -> String {
    let mut it = items.iter().rev();
    let mut acc = it.next().expect("nonempty").clone();
    for x in it {
        acc = format!("max({x},{acc})");
    }
    acc
}

/// `|<v_i, v_j> - δ_ij|` for all `i <= j`, plus the imaginary parts over ℂ.
fn orthonormal_terms(names: &[String], field: Field) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..names.len() {
        for j in i..names.len() {
            let delta = if i == j { 1 } else { 0 };
            out.push(format!("absdiff(ip({},{}),{delta})", names[i], names[j]));
            if field == Field::Complex && i != j {
                out.push(format!("absdiff(iip({},{}),0)", names[i], names[j]));
            }
        }
    }
    out
}

/// Orthonormal `n`-tuples whose members satisfy `extra(v)`.
fn orthonormal_scheme(n: usize, field: Field, extra: Option<&dyn Fn(&str) -> String>) -> String {
    let names = vars(n);
    let mut items = orthonormal_terms(&names, field);
    if let Some(f) = extra {
        items.extend(names.iter().map(|v| f(v)));
    }
    quantify("inf", &names, &max_text(&items))
}

fn hilbert_universal(t: &mut Theory, field: Field) -> Result<(), TheoryError> {
    t.universal(
        "zero is orthogonal to everything",
        "sup x . absdiff(ip(x,0),0)",
    )?;
    t.universal(
        "inner product is symmetric in its real part",
        "sup x . sup y . absdiff(ip(x,y),ip(y,x))",
    )?;
    t.universal("norms are at most one", "sup x . sub(ip(x,x),1)")?;
    t.universal(
        "inner product is positive",
        "sup x . sub(scale(-1,ip(x,x)),0)",
    )?;
    t.universal("f[1,0] is the identity", "sup x . d(f[1,0](x,0),x)")?;
    t.universal(
        "midpoints commute",
        "sup x . sup y . d(f[0.5,0.5](x,y),f[0.5,0.5](y,x))",
    )?;
    t.universal(
        "inner product is homogeneous",
        "sup x . sup y . absdiff(ip(f[0.5,0](x,0),y),scale(0.5,ip(x,y)))",
    )?;
    t.universal(
        "metric is the norm of the difference",
        "sup x . sup y . absdiff(d(x,y),scale(2,d(f[0.5,-0.5](x,y),0)))",
    )?;
    if field == Field::Complex {
        t.universal(
            "inner product is conjugate symmetric",
            "sup x . sup y . absdiff(iip(x,y),scale(-1,iip(y,x)))",
        )?;
        t.universal(
            "inner product is complex homogeneous",
            "sup x . sup y . absdiff(iip(f[0.5i,0](x,0),y),scale(0.5,ip(x,y)))",
        )?;
    }
    Ok(())
}

fn hilbert_schemes(t: &mut Theory, m: &HilbertModel, depth: usize) -> Result<(), TheoryError> {
    for n in 1..=depth {
        let name = format!("orthonormal {n}-tuples exist");
        if n <= m.dim() {
            t.add(
                &name,
                &orthonormal_scheme(n, m.field(), None),
                ConditionKind::Existential,
            )?;
        } else {
            t.untestable.push(name);
        }
    }
    Ok(())
}

/// Universal Hilbert-space axioms and the orthonormal-tuple scheme up to
/// `depth`; instances beyond the dimension are listed as untestable.
pub fn hilbert_theory(m: &HilbertModel, depth: usize) -> Result<Theory, TheoryError> {
    let mut t = Theory::new("hilbert", m.signature());
    hilbert_universal(&mut t, m.field())?;
    hilbert_schemes(&mut t, m, depth)?;
    Ok(t)
}

/// `inf x . csum(|<x,x> - 1|, d(U x, σ x))`.
pub fn spectrum_axiom(sigma: &QComplex) -> Formula {
    let x = Term::var("x");
    let norm_gap = Formula::absdiff(
        Formula::pred("ip", vec![x.clone(), x.clone()]),
        Formula::Const(Rational::from_integer(1.into())),
    );
    let sx = Term::Apply(
        crate::logic::signature::FuncSym::Affine {
            alpha: sigma.clone(),
            beta: qreal(Rational::default()),
        },
        vec![x.clone(), Term::zero()],
    );
    let ux = Term::apply("U", vec![x]);
    Formula::inf("x", Formula::csum(norm_gap, Formula::metric(ux, sx)))
}

/// The `2^k`-th roots of unity as exact rational points of the circle.
pub fn sigma_net(k: u32) -> Vec<QComplex> {
    let n = 1u64 << k;
    (0..n)
        .map(|j| rational_unit_circle_point(std::f64::consts::TAU * j as f64 / n as f64))
        .collect()
}

/// Unitary axioms, the spectrum scheme over the `2^k`-th roots of unity and
/// the Hilbert axioms.
pub fn unitary_theory(m: &HilbertModel, k: u32, depth: usize) -> Result<Theory, TheoryError> {
    let mut t = Theory::new("unitary", m.signature());
    t.universal(
        "U is additive",
        "sup x . sup y . d(U(f[0.5,0.5](x,y)),f[0.5,0.5](U(x),U(y)))",
    )?;
    t.universal(
        "U is complex homogeneous",
        "sup x . d(U(f[0.5i,0](x,0)),f[0.5i,0](U(x),0))",
    )?;
    t.universal(
        "U preserves the real inner product",
        "sup x . sup y . absdiff(ip(U(x),U(y)),ip(x,y))",
    )?;
    t.universal(
        "U preserves the imaginary inner product",
        "sup x . sup y . absdiff(iip(U(x),U(y)),iip(x,y))",
    )?;
    t.universal("Uinv is a right inverse", "sup x . d(U(Uinv(x)),x)")?;
    t.universal("Uinv is a left inverse", "sup x . d(Uinv(U(x)),x)")?;
    for (j, sigma) in sigma_net(k).iter().enumerate() {
        t.push(
            &format!("spectrum contains sigma_{j}"),
            spectrum_axiom(sigma),
            ConditionKind::Existential,
        )?;
    }
    hilbert_universal(&mut t, m.field())?;
    hilbert_schemes(&mut t, m, depth)?;
    Ok(t)
}

/// Projection axioms, the image and kernel schemes up to `depth`, and the
/// Hilbert axioms.
pub fn projection_theory(m: &HilbertModel, depth: usize) -> Result<Theory, TheoryError> {
    let mut t = Theory::new("projection", m.signature());
    t.universal(
        "P is linear",
        "sup x . sup y . d(P(f[0.5,0.5](x,y)),f[0.5,0.5](P(x),P(y)))",
    )?;
    t.universal("P is idempotent", "sup x . d(P(P(x)),P(x))")?;
    t.universal(
        "P is self-adjoint",
        "sup x . sup y . absdiff(ip(P(x),y),ip(x,P(y)))",
    )?;
    let rank = m.rank().unwrap_or(0);
    for n in 1..=depth {
        let image = format!("P(H) contains orthonormal {n}-tuples");
        if n <= rank {
            let f = |v: &str| format!("d(P({v}),{v})");
            t.add(
                &image,
                &orthonormal_scheme(n, m.field(), Some(&f)),
                ConditionKind::Existential,
            )?;
        } else {
            t.untestable.push(image);
        }
        let kernel = format!("ker P contains orthonormal {n}-tuples");
        if n + rank <= m.dim() {
            let f = |v: &str| format!("d(P({v}),0)");
            t.add(
                &kernel,
                &orthonormal_scheme(n, m.field(), Some(&f)),
                ConditionKind::Existential,
            )?;
        } else {
            t.untestable.push(kernel);
        }
    }
    hilbert_universal(&mut t, m.field())?;
    Ok(t)
}

/// Axioms of a unitary representation for the listed group elements.
pub fn group_theory(m: &HilbertModel) -> Result<Theory, TheoryError> {
    let mut t = Theory::new("group action", m.signature());
    if let Some(g) = m.group() {
        for (i, a) in g.names.iter().enumerate() {
            let ga = action_symbol(a);
            t.universal(
                &format!("{ga} preserves the inner product"),
                &format!("sup x . sup y . absdiff(ip({ga}(x),{ga}(y)),ip(x,y))"),
            )?;
            t.universal(
                &format!("{ga} is additive"),
                &format!("sup x . sup y . d({ga}(f[0.5,0.5](x,y)),f[0.5,0.5]({ga}(x),{ga}(y)))"),
            )?;
            match g.inverse[i] {
                Some(j) => {
                    let gb = action_symbol(&g.names[j]);
                    t.universal(
                        &format!("{ga} is onto"),
                        &format!("sup x . d({ga}({gb}(x)),x)"),
                    )?;
                }
                None => t
                    .untestable
                    .push(format!("{ga} is onto (inverse not listed)")),
            }
            for (j, b) in g.names.iter().enumerate() {
                if let Some(c) = g.table[i][j] {
                    let (gb, gc) = (action_symbol(b), action_symbol(&g.names[c]));
                    t.universal(
                        &format!("{ga}{gb} = {gc}"),
                        &format!("sup x . d({ga}({gb}(x)),{gc}(x))"),
                    )?;
                }
            }
        }
    }
    hilbert_universal(&mut t, m.field())?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::hilbert::{build_hilbert, expand_projection, expand_unitary};
    use crate::scalar::{qcomplex_to_c64, Complex64};

    #[test]
    fn hilbert_axioms_hold_on_small_ball() {
        let m = build_hilbert(4, Field::Real, vec![]).unwrap();
        let t = hilbert_theory(&m, 6).unwrap();
        let r = check_axioms(&m, &t, 1e-9, &EvalBudget::default()).unwrap();
        assert!(r.all_pass(), "{r:#?}");
        assert_eq!(r.untestable.len(), 2);
    }

    #[test]
    fn projection_axioms_first_three_exact() {
        let m = expand_projection(build_hilbert(6, Field::Real, vec![]).unwrap(), 3).unwrap();
        let t = projection_theory(&m, 3).unwrap();
        let r = check_axioms(&m, &t, 1e-6, &EvalBudget::default()).unwrap();
        assert!(r.all_pass(), "{r:#?}");
        for res in &r.results[..3] {
            assert_eq!(res.enclosure.hi, 0.0);
        }
    }

    #[test]
    fn spectrum_residual_is_nearest_eigenvalue_distance() {
        let n = 8;
        let ev: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64))
            .collect();
        let m = expand_unitary(
            build_hilbert(n, Field::Complex, vec![]).unwrap(),
            ev.clone(),
        )
        .unwrap();
        for sigma in sigma_net(4) {
            let s = qcomplex_to_c64(&sigma);
            let want = ev
                .iter()
                .map(|w| (w - s).norm())
                .fold(f64::INFINITY, f64::min)
                .min(1.0);
            let e = crate::logic::eval::eval_formula(
                &m,
                &spectrum_axiom(&sigma),
                &Default::default(),
                &EvalBudget::default(),
            )
            .unwrap();
            assert!((e.hi - want).abs() < 1e-9, "{e} vs {want}");
        }
    }
}
