use contlogic::models::{build_discrete, build_hilbert, DiscreteModel, HilbertModel};
use contlogic::scalar::rational_to_f64;
use contlogic::{
    eval_formula, eval_qf, interval_of, lipschitz_of, parse_formula, parse_term, rescale_to_unit,
    Assignment, Complex64, EvalBudget, Field, Formula, Mode, Point, Structure, Vector,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hilbert(dim: usize) -> HilbertModel {
    let mut v0 = Vector::zeros(dim);
    v0[0] = Complex64::new(0.6, 0.0);
    v0[dim - 1] = Complex64::new(0.0, 0.8);
    build_hilbert(dim, Field::Complex, vec![("v0".into(), v0)]).unwrap()
}

fn ball(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| {
            Complex64::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            )
        });
        if v.norm() <= 1.0 {
            return v;
        }
    }
}

fn term(rng: &mut ChaCha8Rng, vars: &[&str], depth: usize) -> String {
    if depth == 0 || rng.random::<f64>() < 0.3 {
        let leaves: Vec<&str> = vars.iter().copied().chain(["0", "v0"]).collect();
        return leaves[rng.random_range(0..leaves.len())].to_string();
    }
    let a: i64 = rng.random_range(-4..=4);
    let b: i64 = rng.random_range(-(4 - a.abs())..=4 - a.abs());
    format!(
        "f[{a}/4,{b}/4]({},{})",
        term(rng, vars, depth - 1),
        term(rng, vars, depth - 1)
    )
}

/// Random formula text; `atom` produces the leaves.
fn formula(rng: &mut ChaCha8Rng, depth: usize, atom: &dyn Fn(&mut ChaCha8Rng) -> String) -> String {
    const NUMS: [&str; 7] = ["0.25", "0.5", "-0.5", "2", "-1.5", "1", "3/4"];
    if depth == 0 || rng.random::<f64>() < 0.2 {
        return if rng.random::<f64>() < 0.85 {
            atom(rng)
        } else {
            NUMS[rng.random_range(0..NUMS.len())].to_string()
        };
    }
    let sub = |rng: &mut ChaCha8Rng| formula(rng, depth - 1, atom);
    match rng.random_range(0..8) {
        0 => format!("neg({})", sub(rng)),
        1 => format!(
            "sub({},{})",
            sub(rng),
            ["0", "0.25", "1/2"][rng.random_range(0..3)]
        ),
        2 => format!("min({},{})", sub(rng), sub(rng)),
        3 => format!("max({},{})", sub(rng), sub(rng)),
        4 => format!("absdiff({},{})", sub(rng), sub(rng)),
        5 => format!("csum({},{})", sub(rng), sub(rng)),
        6 => format!(
            "scale({},{})",
            NUMS[rng.random_range(0..NUMS.len())],
            sub(rng)
        ),
        _ => format!(
            "addc({},{})",
            NUMS[rng.random_range(0..NUMS.len())],
            sub(rng)
        ),
    }
}

fn hilbert_atom(rng: &mut ChaCha8Rng) -> String {
    let (a, b) = (term(rng, &["x", "y"], 3), term(rng, &["x", "y"], 3));
    ["d", "ip", "iip"][rng.random_range(0..3)].to_string() + &format!("({a},{b})")
}

fn env(pairs: &[(&str, Point)]) -> Assignment {
    pairs
        .iter()
        .map(|(n, p)| (n.to_string(), p.clone()))
        .collect()
}

fn graph(seed: u64, n: usize) -> DiscreteModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = vec![0u8; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let e = rng.random_bool(0.5) as u8;
            table[a * n + b] = e;
            table[b * n + a] = e;
        }
    }
    let unary = (0..n).map(|_| rng.random_bool(0.5) as u8).collect();
    let names = (0..n).map(|i| format!("e{i}")).collect();
    build_discrete(
        names,
        vec![("E".into(), 2, table), ("P".into(), 1, unary)],
        vec![],
        vec![("c".into(), 0)],
    )
    .unwrap()
}

fn graph_atom(rng: &mut ChaCha8Rng) -> String {
    let t = |rng: &mut ChaCha8Rng| ["x", "y", "z", "c"][rng.random_range(0..4)];
    match rng.random_range(0..3) {
        0 => format!("d({},{})", t(rng), t(rng)),
        1 => format!("E({},{})", t(rng), t(rng)),
        _ => format!("P({})", t(rng)),
    }
}

fn quantified(rng: &mut ChaCha8Rng) -> String {
    let mut text = formula(rng, 3, &graph_atom);
    for v in ["z", "y", "x"] {
        let q = if rng.random_bool(0.5) { "sup" } else { "inf" };
        text = format!("{q} {v} . {text}");
    }
    text
}

/// Direct recursive semantics over a finite graph.
fn brute(m: &DiscreteModel, phi: &Formula, env: &mut Vec<(String, usize)>) -> f64 {
    let look = |env: &Vec<(String, usize)>, t: &contlogic::Term| -> usize {
        match t {
            contlogic::Term::Var(v) => env.iter().rev().find(|(n, _)| *n == v.name).unwrap().1,
            contlogic::Term::Const(c) => m.constants()[c],
            _ => unreachable!(),
        }
    };
    let truth = |b: bool| if b { 0.0 } else { 1.0 };
    match phi {
        Formula::Metric(a, b) => truth(look(env, a) == look(env, b)),
        Formula::Pred(p, ts) => truth(
            m.holds(p, &ts.iter().map(|t| look(env, t)).collect::<Vec<_>>())
                .unwrap(),
        ),
        Formula::Const(q) => rational_to_f64(q),
        Formula::Neg(a) => {
            let iv = interval_of(a, m.signature()).to_f64();
            iv.lo() + iv.hi() - brute(m, a, env)
        }
        Formula::Sub(a, r) => (brute(m, a, env) - rational_to_f64(r)).max(0.0),
        Formula::Min(a, b) => brute(m, a, env).min(brute(m, b, env)),
        Formula::Max(a, b) => brute(m, a, env).max(brute(m, b, env)),
        Formula::AbsDiff(a, b) => (brute(m, a, env) - brute(m, b, env)).abs(),
        Formula::Scale(q, a) => rational_to_f64(q) * brute(m, a, env),
        Formula::AddC(q, a) => rational_to_f64(q) + brute(m, a, env),
        Formula::CSum(a, b) => (brute(m, a, env) + brute(m, b, env)).min(1.0),
        Formula::Sup(v, a) | Formula::Inf(v, a) => {
            let vals: Vec<f64> = (0..m.size())
                .map(|e| {
                    env.push((v.name.clone(), e));
                    let r = brute(m, a, env);
                    env.pop();
                    r
                })
                .collect();
            if matches!(phi, Formula::Sup(..)) {
                vals.into_iter().fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.into_iter().fold(f64::INFINITY, f64::min)
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn values_lie_in_the_interval(seed in any::<u64>()) {
        let m = hilbert(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let phi = parse_formula(&formula(&mut rng, 4, &hilbert_atom), m.signature()).unwrap();
            let iv = interval_of(&phi, m.signature()).to_f64();
            let e = env(&[("x", Point::Vector(ball(&mut rng, 3))), ("y", Point::Vector(ball(&mut rng, 3)))]);
            let v = eval_qf(&m, &phi, &e).unwrap();
            prop_assert!(*iv.lo() - 1e-9 <= v && v <= *iv.hi() + 1e-9, "{phi}: {v} outside [{}, {}]", iv.lo(), iv.hi());
        }
    }

    #[test]
    fn rescaling_is_the_affine_unit_map(seed in any::<u64>()) {
        let m = hilbert(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let phi = parse_formula(&formula(&mut rng, 4, &hilbert_atom), m.signature()).unwrap();
            let iv = interval_of(&phi, m.signature()).to_f64();
            let r = rescale_to_unit(&phi, m.signature());
            let e = env(&[("x", Point::Vector(ball(&mut rng, 3))), ("y", Point::Vector(ball(&mut rng, 3)))]);
            let (v, w) = (eval_qf(&m, &phi, &e).unwrap(), eval_qf(&m, &r.formula, &e).unwrap());
            let want = if r.degenerate { 0.0 } else { (v - iv.lo()) / (iv.hi() - iv.lo()) };
            prop_assert!((w - want).abs() <= 1e-9, "{phi}: {w} vs {want}");
        }
    }

    #[test]
    fn moduli_bound_the_variation(seed in any::<u64>()) {
        let m = hilbert(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let phi = parse_formula(&formula(&mut rng, 4, &hilbert_atom), m.signature()).unwrap();
            let l = lipschitz_of(&phi, m.signature());
            let (xa, xb, ya, yb) = (ball(&mut rng, 3), ball(&mut rng, 3), ball(&mut rng, 3), ball(&mut rng, 3));
            let bound = l.bound(&|v: &str| if v == "x" { (&xa - &xb).norm() } else { (&ya - &yb).norm() });
            let a = eval_qf(&m, &phi, &env(&[("x", Point::Vector(xa.clone())), ("y", Point::Vector(ya.clone()))])).unwrap();
            let b = eval_qf(&m, &phi, &env(&[("x", Point::Vector(xb.clone())), ("y", Point::Vector(yb.clone()))])).unwrap();
            prop_assert!((a - b).abs() <= bound + 1e-9, "{phi}: |{a} - {b}| > {bound}");
        }
    }

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>()) {
        let m = hilbert(3);
        let g = graph(1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let phi = parse_formula(&formula(&mut rng, 5, &hilbert_atom), m.signature()).unwrap();
            prop_assert_eq!(parse_formula(&phi.to_string(), m.signature()).unwrap(), phi);
            let psi = parse_formula(&quantified(&mut rng), g.signature()).unwrap();
            prop_assert_eq!(parse_formula(&psi.to_string(), g.signature()).unwrap(), psi);
            let t = parse_term(&term(&mut rng, &["x", "y"], 5), m.signature()).unwrap();
            prop_assert_eq!(parse_term(&t.to_string(), m.signature()).unwrap(), t);
        }
    }

    #[test]
    fn finer_nets_stay_inside_coarser_enclosures(seed in any::<u64>()) {
        let m = build_hilbert(1, Field::Complex, vec![("v0".into(), Vector::from_element(1, Complex64::new(0.3, -0.4)))]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = formula(&mut rng, 3, &hilbert_atom);
        let phi = parse_formula(&format!("sup x . inf y . {body}"), m.signature()).unwrap();
        let run = |delta: f64| {
            let budget = EvalBudget { delta, ..EvalBudget::default() };
            eval_formula(&m, &phi, &Assignment::new(), &budget).unwrap()
        };
        let (coarse, fine) = (run(0.4), run(0.2));
        prop_assert!(coarse.mode <= Mode::Certified && fine.mode <= Mode::Certified);
        prop_assert!(coarse.intersects(&fine, 1e-9), "{phi}: {coarse:?} vs {fine:?}");
    }

    #[test]
    fn finite_evaluation_matches_brute_force(seed in any::<u64>(), n in 1usize..=8) {
        let g = graph(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..5 {
            let phi = parse_formula(&quantified(&mut rng), g.signature()).unwrap();
            let e = eval_formula(&g, &phi, &Assignment::new(), &EvalBudget::default()).unwrap();
            let want = brute(&g, &phi, &mut Vec::new());
            prop_assert_eq!(e.mode, Mode::Exact);
            prop_assert!((e.lo - want).abs() <= 1e-12 && (e.hi - want).abs() <= 1e-12, "{phi}: {e:?} vs {want}");
        }
    }
}
