use std::path::Path;
use std::process::Command;
use std::time::Instant;

use contlogic::herbrand::{
    affine_candidates, compact_epsilon_net, cover_definable_function, disk_grid, offset_net,
    search_classical, Candidate, CoverBudget, HerbrandCertificate, ProblemRecord, Target,
};
use contlogic::models::discrete::{all_tuples, kpartite, union_complete};
use contlogic::models::file::{BuilderFile, DiscreteFile, HilbertFile};
use contlogic::models::theory::{projection_theory, sigma_net, spectrum_axiom};
use contlogic::models::{
    build_hilbert, check_axioms, elementary_abelian, expand_group_action, expand_projection,
    expand_unitary, HilbertModel, Model, ModelFile,
};
use contlogic::normalizer::{normalize_term, Atom, Base, ExactNormalForm, OpWord, TheoryTag};
use contlogic::scalar::{qcomplex_to_c64, qreal, rat, rational_to_f64, QComplex};
use contlogic::ubiq::{
    check_finitely_partitioned, check_ultrahomogeneous, classify_equivariant_function,
    expand_partition,
};
use contlogic::{
    eval_formula, eval_qf, eval_term, interval_of, lipschitz_of, parse_formula, parse_term,
    AtomKind, Complex64, EvalBudget, Field, ManySortedAtom, Point, Rational, Structure, Var,
    Vector,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn point(v: Vector) -> Point {
    Point::Vector(v)
}

fn random_ball(rng: &mut ChaCha8Rng, dim: usize, field: Field) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| {
            let re = rng.random::<f64>() * 2.0 - 1.0;
            let im = if field == Field::Complex {
                rng.random::<f64>() * 2.0 - 1.0
            } else {
                0.0
            };
            Complex64::new(re, im)
        });
        if v.norm() <= 1.0 {
            return v;
        }
    }
}

fn ball8() -> HilbertModel {
    let mut v0 = Vector::zeros(8);
    v0[0] = c(0.6);
    v0[1] = c(0.8);
    let mut v1 = Vector::zeros(8);
    v1[7] = c(-0.5);
    build_hilbert(8, Field::Real, vec![("v0".into(), v0), ("v1".into(), v1)]).unwrap()
}

fn quarter(rng: &mut ChaCha8Rng, max: i64) -> Rational {
    rat(rng.random_range(-max..=max), 4)
}

fn coefficient_text(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn random_term(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.random::<f64>() < 0.2 {
        return ["x", "y", "0", "v0", "v1"][rng.random_range(0..5)].to_string();
    }
    let na: i64 = rng.random_range(-8..=8);
    let room = 8 - na.abs();
    let (a, b) = (rat(na, 8), rat(rng.random_range(-room..=room), 8));
    format!(
        "f[{},{}]({},{})",
        coefficient_text(&a),
        coefficient_text(&b),
        random_term(rng, depth - 1),
        random_term(rng, depth - 1)
    )
}

/// `Σ λ_i a_i + v` computed from the coefficients alone.
fn affine_value(m: &HilbertModel, nf: &ExactNormalForm, env: &[(&str, &Vector)]) -> Vector {
    let mut out = Vector::zeros(m.dim());
    for (atom, coef) in &nf.terms {
        assert_eq!(atom.op, OpWord::Id);
        let base = match &atom.base {
            Base::Var(v) => env.iter().find(|(n, _)| n == v).unwrap().1.clone(),
            Base::Const(k) => m.constant_vector(k).unwrap(),
        };
        out += base * qcomplex_to_c64(coef);
    }
    out
}

fn criterion_1() -> Outcome {
    let m = ball8();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let t = parse_term(&random_term(&mut rng, 6), m.signature()).unwrap();
        let nf = normalize_term(&t, &TheoryTag::Hilbert).unwrap();
        for _ in 0..100 {
            let x = random_ball(&mut rng, 8, Field::Real);
            let y = random_ball(&mut rng, 8, Field::Real);
            let env = [
                ("x".to_string(), point(x.clone())),
                ("y".to_string(), point(y.clone())),
            ]
            .into_iter()
            .collect();
            let direct = eval_term(&m, &t, &env).unwrap();
            let Point::Vector(direct) = direct else {
                unreachable!()
            };
            let formal = affine_value(&m, &nf, &[("x", &x), ("y", &y)]);
            worst = worst.max((direct - formal).norm());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("1000 terms x 100 points, max deviation {worst:.3e}"),
    )
}

fn criterion_2() -> Outcome {
    let m = ball8();
    let sig = m.signature();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut unit = true;
    for i in 0..200 {
        let kind = if i % 2 == 0 {
            AtomKind::Distance
        } else {
            AtomKind::InnerProduct
        };
        let mut pair = || (quarter(&mut rng, 8), quarter(&mut rng, 8));
        let atom = ManySortedAtom {
            kind,
            n: 2,
            t1: pair(),
            t2: pair(),
        };
        let psi = atom.to_unit_formula(sig, "x", "y").unwrap();
        unit &= interval_of(&psi, sig) == contlogic::ExactInterval::unit();
        let iv = atom.interval();
        let (lo, hi) = (rational_to_f64(iv.lo()), rational_to_f64(iv.hi()));
        for _ in 0..100 {
            let x = random_ball(&mut rng, 8, Field::Real);
            let y = random_ball(&mut rng, 8, Field::Real);
            let xs: Vec<f64> = x.iter().map(|z| z.re).collect();
            let ys: Vec<f64> = y.iter().map(|z| z.re).collect();
            let want = (atom.value(&xs, &ys) - lo) / (hi - lo);
            let env = [("x".to_string(), point(x)), ("y".to_string(), point(y))]
                .into_iter()
                .collect();
            let got = eval_qf(&m, &psi, &env).unwrap();
            worst = worst.max((got - want).abs());
        }
    }
    outcome(
        worst <= 1e-9 && unit,
        format!(
            "200 atoms x 100 points, max deviation {worst:.3e}, intervals exactly [0,1]: {unit}"
        ),
    )
}

fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> String {
    let nums = ["0.25", "0.5", "-0.5", "2", "1.5", "-0.75", "3", "1"];
    let num = |rng: &mut ChaCha8Rng| nums[rng.random_range(0..nums.len())];
    if depth == 0 || rng.random::<f64>() < 0.25 {
        let (a, b) = (random_term(rng, 3), random_term(rng, 3));
        return match rng.random_range(0..3) {
            0 => format!("d({a},{b})"),
            1 => format!("ip({a},{b})"),
            _ => num(rng).to_string(),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..8) {
        0 => format!("neg({})", random_formula(rng, d)),
        1 => format!(
            "sub({},{})",
            random_formula(rng, d),
            ["0", "0.25", "0.5", "1"][rng.random_range(0..4)]
        ),
        2 => format!("min({},{})", random_formula(rng, d), random_formula(rng, d)),
        3 => format!("max({},{})", random_formula(rng, d), random_formula(rng, d)),
        4 => format!(
            "absdiff({},{})",
            random_formula(rng, d),
            random_formula(rng, d)
        ),
        5 => format!(
            "csum({},{})",
            random_formula(rng, d),
            random_formula(rng, d)
        ),
        6 => format!("scale({},{})", num(rng), random_formula(rng, d)),
        _ => format!("addc({},{})", num(rng), random_formula(rng, d)),
    }
}

fn criterion_3() -> Outcome {
    let m = ball8();
    let sig = m.signature();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut outside, mut lipschitz) = (0, 0);
    for _ in 0..10_000 {
        let phi = parse_formula(&random_formula(&mut rng, 4), sig).unwrap();
        let iv = interval_of(&phi, sig).to_f64();
        let l = lipschitz_of(&phi, sig);
        let (xa, ya) = (
            random_ball(&mut rng, 8, Field::Real),
            random_ball(&mut rng, 8, Field::Real),
        );
        let (xb, yb) = (
            random_ball(&mut rng, 8, Field::Real),
            random_ball(&mut rng, 8, Field::Real),
        );
        let dist = |v: &str| {
            if v == "x" {
                (&xa - &xb).norm()
            } else {
                (&ya - &yb).norm()
            }
        };
        let bound = l.bound(&dist);
        let ea = [
            ("x".to_string(), point(xa.clone())),
            ("y".to_string(), point(ya.clone())),
        ]
        .into_iter()
        .collect();
        let eb = [
            ("x".to_string(), point(xb.clone())),
            ("y".to_string(), point(yb.clone())),
        ]
        .into_iter()
        .collect();
        let (va, vb) = (
            eval_qf(&m, &phi, &ea).unwrap(),
            eval_qf(&m, &phi, &eb).unwrap(),
        );
        for v in [va, vb] {
            if v < *iv.lo() - 1e-12 || v > *iv.hi() + 1e-12 {
                outside += 1;
            }
        }
        if (va - vb).abs() > bound + 1e-9 {
            lipschitz += 1;
        }
    }
    outcome(
        outside == 0 && lipschitz == 0,
        format!("10000 cases, {outside} interval and {lipschitz} Lipschitz violations"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let g = kpartite(2, 3)
        .unwrap()
        .with_constant("c1", 0)
        .unwrap()
        .with_constant("c2", 3)
        .unwrap();
    let phi = parse_formula("E(x,y)", g.signature()).unwrap();
    let budget = CoverBudget::default();
    let (x, y) = ([Var::new("x")], [Var::new("y")]);
    let cover = search_classical(&g, &phi, &x, &y, 1, &budget).unwrap();
    let k = cover.chosen.len();
    let implication = (0..6).all(|a| {
        let env = [("x".to_string(), Point::Element(a))].into_iter().collect();
        let exists = (0..6).any(|b| g.holds("E", &[a, b]).unwrap());
        !exists
            || cover.chosen.iter().any(|cand| {
                let b = eval_term(&g, &cand.terms[0], &env)
                    .unwrap()
                    .as_element()
                    .unwrap();
                g.holds("E", &[a, b]).unwrap()
            })
    });
    let mut f = elementary_abelian(2, 4).unwrap();
    let cv = f.element_by_name("(0,1,1,0)").unwrap();
    f.add_constant("c", cv).unwrap();
    let psi = parse_formula("d(y,mul(x,c))", f.signature()).unwrap();
    let tcover = search_classical(&f, &psi, &x, &y, 2, &budget).unwrap();
    let translation = tcover.chosen.len() == 1
        && (0..16).all(|a| {
            let env = [("x".to_string(), Point::Element(a))].into_iter().collect();
            eval_term(&f, &tcover.chosen[0].terms[0], &env).unwrap()
                == Point::Element(f.apply_fn("mul", &[a, cv]).unwrap())
        });
    let secs = start.elapsed().as_secs_f64();
    outcome(
        k <= 2 && implication && translation && secs <= 5.0,
        format!("edge cover k={k}, implication {implication}, translation k={} recovered {translation}, {secs:.2}s", tcover.chosen.len()),
    )
}

fn radial_certificate(seed: u64) -> (usize, f64, String) {
    let file = ModelFile::Hilbert(HilbertFile::new(8, Field::Real));
    let Model::Hilbert(m) = file.build().unwrap() else {
        unreachable!()
    };
    let x = [Var::new("x")];
    let grid = disk_grid(&rat(1, 4), Field::Real);
    let cands = affine_candidates(&m, &x, &grid, &offset_net(&m, &[]), 100_000).unwrap();
    let budget = CoverBudget {
        seed,
        ..Default::default()
    };
    let cover =
        cover_definable_function(&m, &Target::RadialShrink, &x, 0.13, &cands, &budget).unwrap();
    let problem = ProblemRecord::Function {
        target: "radial-shrink".into(),
        x: vec!["x".into()],
    };
    let cert = HerbrandCertificate::new(problem, file, 0.13, 0.13 / 3.0, &cover, budget, None);
    (cover.chosen.len(), cover.max_residual(), cert.to_json())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let sweep = (0..=1_000_000)
        .map(|i| {
            let r = i as f64 / 1e6;
            [0.0, 0.25, 0.5, 0.75, 1.0]
                .iter()
                .map(|l| (1.0 - r * r - l).abs() * r)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let (k, residual, first) = radial_certificate(5);
    let (_, _, second) = radial_certificate(5);
    let secs = start.elapsed().as_secs_f64();
    let reproducible = first == second;
    outcome(
        k == 5 && residual <= 0.13 && reproducible && secs <= 120.0,
        format!(
            "k={k} (expected 5), residual {residual:.5}, sweep oracle max {sweep:.5}, bit-identical {reproducible}, {secs:.1}s"
        ),
    )
}

fn var_atom(op: OpWord) -> ExactNormalForm {
    ExactNormalForm::atom(Atom {
        base: Base::Var("x".into()),
        op,
    })
}

fn combos(atoms: &[ExactNormalForm], coeffs: &[QComplex]) -> Vec<ExactNormalForm> {
    let mut out = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        for ca in coeffs {
            out.push(a.scaled(ca));
            for b in &atoms[i + 1..] {
                for cb in coeffs {
                    let mut f = a.scaled(ca);
                    f.add_scaled(b, cb);
                    out.push(f);
                }
            }
        }
    }
    out.retain(|f| f.mass_at_most_one() && !f.terms.is_empty());
    out.sort_by_key(|f| f.to_string());
    out.dedup();
    out
}

fn recovery_family(m: &HilbertModel, atoms: &[ExactNormalForm]) -> Vec<Candidate> {
    let coeffs: Vec<QComplex> = [(1, 1), (-1, 1), (1, 2), (-1, 2), (1, 4), (-1, 4)]
        .iter()
        .map(|&(p, q)| qreal(rat(p, q)))
        .collect();
    let mut forms = combos(atoms, &coeffs);
    for name in m.constants().keys() {
        let v = ExactNormalForm::atom(Atom {
            base: Base::Const(name.clone()),
            op: OpWord::Id,
        });
        for f in forms.clone() {
            let mut g = f.clone();
            g.add_scaled(&v, &qreal(rat(1, 4)));
            if g.mass_at_most_one() {
                forms.push(g);
            }
        }
    }
    forms
        .into_iter()
        .map(|f| Candidate::from_forms(m.signature(), vec![f]).unwrap())
        .collect()
}

fn recovery_models() -> Vec<(&'static str, HilbertModel, Vec<ExactNormalForm>)> {
    let mut v0 = Vector::zeros(4);
    v0[2] = c(0.6);
    v0[3] = c(0.8);
    let hilbert = build_hilbert(4, Field::Real, vec![("v0".into(), v0.clone())]).unwrap();
    let cv0: Vector = v0.map(|z| z);
    let unitary = expand_unitary(
        build_hilbert(4, Field::Complex, vec![("v0".into(), cv0)]).unwrap(),
        vec![
            c(1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-0.6, 0.8),
            Complex64::new(0.28, -0.96),
        ],
    )
    .unwrap();
    let mut w0 = Vector::zeros(5);
    w0[4] = c(0.5);
    let projection = expand_projection(
        build_hilbert(5, Field::Real, vec![("v0".into(), w0)]).unwrap(),
        2,
    )
    .unwrap();
    let swap = DMatrix::from_fn(4, 4, |i, j| {
        let s = |k: usize| if k < 2 { 1 - k } else { k };
        if s(i) == j {
            c(1.0)
        } else {
            c(0.0)
        }
    });
    let group = expand_group_action(
        build_hilbert(4, Field::Real, vec![("v0".into(), v0)]).unwrap(),
        vec![
            ("e".into(), DMatrix::identity(4, 4).map(|z: f64| c(z))),
            ("s".into(), swap),
        ],
        Some(vec![vec![0, 1], vec![1, 0]]),
    )
    .unwrap();
    vec![
        ("hilbert", hilbert, vec![var_atom(OpWord::Id)]),
        (
            "unitary",
            unitary,
            (-2..=2)
                .map(|j| {
                    if j == 0 {
                        var_atom(OpWord::Id)
                    } else {
                        var_atom(OpWord::Power(j))
                    }
                })
                .collect(),
        ),
        (
            "projection",
            projection,
            vec![var_atom(OpWord::Id), var_atom(OpWord::Proj)],
        ),
        (
            "group",
            group,
            vec![var_atom(OpWord::Id), var_atom(OpWord::Act("s".into()))],
        ),
    ]
}

fn criterion_6() -> Outcome {
    let x = [Var::new("x")];
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for (name, m, atoms) in recovery_models() {
        let family = recovery_family(&m, &atoms);
        sizes.push(format!("{name}:{}", family.len()));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for i in 0..20 {
            let pick = &family[rng.random_range(0..family.len())];
            let budget = CoverBudget {
                samples: 300,
                seed: i,
                ..Default::default()
            };
            let target = Target::Term(pick.terms[0].clone());
            let cover = cover_definable_function(&m, &target, &x, 0.1, &family, &budget).unwrap();
            if cover.chosen.len() != 1 || cover.max_residual() > 1e-9 {
                failures.push(format!(
                    "{name}#{i}: k={} residual {}",
                    cover.chosen.len(),
                    cover.max_residual()
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "4 models x 20 instances (families {}), failures {:?}",
            sizes.join(" "),
            failures
        ),
    )
}

fn criterion_7() -> Outcome {
    let p = expand_projection(build_hilbert(8, Field::Real, vec![]).unwrap(), 4).unwrap();
    let theory = projection_theory(&p, 4).unwrap();
    let report = check_axioms(&p, &theory, 1e-6, &EvalBudget::default()).unwrap();
    let exact = report.results[..3].iter().all(|r| r.enclosure.hi == 0.0);
    let n = 64;
    let ev: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    let u = expand_unitary(
        build_hilbert(n, Field::Complex, vec![]).unwrap(),
        ev.clone(),
    )
    .unwrap();
    let limit = 2.0 * (std::f64::consts::PI / 128.0).sin() + 1e-6;
    let mut worst: f64 = 0.0;
    let mut oracle_gap: f64 = 0.0;
    for sigma in sigma_net(8) {
        let s = qcomplex_to_c64(&sigma);
        let nearest = ev
            .iter()
            .map(|w| (w - s).norm())
            .fold(f64::INFINITY, f64::min);
        let e = eval_formula(
            &u,
            &spectrum_axiom(&sigma),
            &Default::default(),
            &EvalBudget::default(),
        )
        .unwrap();
        worst = worst.max(e.hi);
        oracle_gap = oracle_gap.max((e.hi - nearest).abs());
    }
    outcome(
        report.all_pass() && exact && worst <= limit,
        format!(
            "T_P: {} conditions pass {}, first three exactly 0 {exact}; spectrum max residual {worst:.7} <= {limit:.7}, max gap to nearest-eigenvalue oracle {oracle_gap:.2e}",
            report.results.len(),
            report.all_pass()
        ),
    )
}

fn orthonormal_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() - 0.5);
    g.qr().q()
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut pieces = Vec::new();
    for _ in 0..10 {
        let r = rng.random_range(1..=3);
        let (u, v) = (
            orthonormal_columns(&mut rng, 8, r),
            orthonormal_columns(&mut rng, 8, r),
        );
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(r, |_, _| rng.random::<f64>()));
        let k = &u * s * v.transpose();
        let lambda = rng.random::<f64>() * 2.0 - 1.0;
        let net = compact_epsilon_net(&k, lambda, 1.0, 0.2, 10_000_000).unwrap();
        pieces.push(net.len());
        for i in 0..10_000 {
            let mut a = DMatrix::from_fn(8, 1, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let n = a.norm();
            a /= n;
            if i % 2 == 0 {
                a *= rng.random::<f64>().powf(1.0 / 8.0);
            }
            let fa = &a * lambda + &k * &a;
            let best = net
                .iter()
                .map(|p| (&fa - (&a * p.lambda + &p.v)).norm())
                .fold(f64::INFINITY, f64::min);
            if best > 0.2 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("10 operators (pieces {pieces:?}) x 10000 points, {violations} violations"),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let u = union_complete(2, 5).unwrap();
    let union_ok = check_finitely_partitioned(&u, u.natural_partition().unwrap())
        .unwrap()
        .holds;
    let k = kpartite(3, 3).unwrap();
    let k_ok = check_finitely_partitioned(&k, k.natural_partition().unwrap())
        .unwrap()
        .holds;
    let mixed =
        check_finitely_partitioned(&k, &[vec![0, 1, 3], vec![2, 4, 5], vec![6, 7, 8]]).unwrap();
    let witness = match (&mixed.transposition, &mixed.violation) {
        (Some((a, b)), Some(v)) => {
            let mut p: Vec<usize> = (0..9).collect();
            p.swap(*a, *b);
            let image: Vec<usize> = v.tuple.iter().map(|&x| p[x]).collect();
            k.holds(&v.symbol, &v.tuple) != k.holds(&v.symbol, &image)
        }
        _ => false,
    };
    let k33 = kpartite(2, 3).unwrap();
    let expanded = expand_partition(&k33, k33.natural_partition().unwrap()).unwrap();
    let ultra = check_ultrahomogeneous(&expanded, 3)
        .unwrap()
        .ultrahomogeneous;
    let table: Vec<usize> = all_tuples(6, 2)
        .map(|t| {
            if k33.holds("E", &t).unwrap() {
                t[0]
            } else {
                t[1]
            }
        })
        .collect();
    let cover = classify_equivariant_function(&k33, 2, &table, 1).unwrap();
    let exact = all_tuples(6, 2).all(|t| {
        let env = [
            ("x1".to_string(), Point::Element(t[0])),
            ("x2".to_string(), Point::Element(t[1])),
        ]
        .into_iter()
        .collect();
        let want = Point::Element(table[t[0] * 6 + t[1]]);
        cover.terms.iter().any(|w| {
            eval_term(&k33, &parse_term(w, k33.signature()).unwrap(), &env).unwrap() == want
        })
    });
    let two = cover.terms == ["x1", "x2"];
    let secs = start.elapsed().as_secs_f64();
    outcome(
        union_ok && k_ok && !mixed.holds && witness && ultra && exact && two && secs <= 30.0,
        format!(
            "union_complete(2,5) {union_ok}, kpartite(3,3) {k_ok}, mixed partition rejected {} with witness {witness}, expanded K33 ultrahomogeneous {ultra}, cover {:?} exact {exact}, {secs:.2}s",
            !mixed.holds, cover.terms
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_contlogic"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn write_model(dir: &Path, name: &str, file: &ModelFile) {
    std::fs::write(dir.join(name), file.to_json()).unwrap();
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let discrete = |builder, constants: &[(&str, &str)]| {
        ModelFile::Discrete(DiscreteFile {
            builder: Some(builder),
            elements: vec![],
            relations: Default::default(),
            functions: Default::default(),
            constants: constants
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            partition: None,
        })
    };
    write_model(
        d,
        "k33.json",
        &discrete(
            BuilderFile::Kpartite { parts: 2, size: 3 },
            &[("c1", "0"), ("c2", "3")],
        ),
    );
    write_model(
        d,
        "f2.json",
        &discrete(
            BuilderFile::ElementaryAbelian { p: 2, rank: 4 },
            &[("c", "(0,1,1,0)")],
        ),
    );
    write_model(
        d,
        "cliques.json",
        &discrete(BuilderFile::UnionComplete { copies: 2, size: 5 }, &[]),
    );
    let mut ball = HilbertFile::new(8, Field::Real);
    ball.constants.insert(
        "v0".into(),
        ["0.6", "0.8", "0", "0", "0", "0", "0", "0"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    write_model(d, "ball.json", &ModelFile::Hilbert(ball.clone()));
    ball.projection = Some(contlogic::models::file::ProjectionFile { rank: 4 });
    ball.constants.clear();
    write_model(d, "proj.json", &ModelFile::Hilbert(ball));
    let runs: Vec<(&str, Vec<&str>, bool)> = vec![
        (
            "eval",
            vec![
                "--model",
                "ball.json",
                "--seed",
                "3",
                "eval",
                "sup x . inf y . d(x,f[0.5,0](y,0))",
            ],
            false,
        ),
        (
            "normalize",
            vec!["--model", "ball.json", "normalize", "f[0.5,0.5](x,v0)"],
            false,
        ),
        (
            "edge cover",
            vec!["--model", "k33.json", "--formula", "E(x,y)", "herbrand"],
            true,
        ),
        (
            "translation",
            vec![
                "--model",
                "f2.json",
                "--formula",
                "d(y,mul(x,c))",
                "--depth",
                "2",
                "herbrand",
            ],
            true,
        ),
        (
            "radial shrink",
            vec![
                "--model",
                "ball.json",
                "--epsilon",
                "0.13",
                "--mesh",
                "0.25",
                "--seed",
                "9",
                "herbrand",
                "--target",
                "radial-shrink",
            ],
            false,
        ),
        (
            "half map",
            vec![
                "--model",
                "ball.json",
                "--epsilon",
                "0.05",
                "--samples",
                "200",
                "--formula",
                "d(y,f[0.5,0](x,0))",
                "herbrand",
            ],
            false,
        ),
        (
            "axioms",
            vec!["--model", "proj.json", "--seed", "4", "axioms"],
            false,
        ),
        (
            "ubiq",
            vec!["--model", "cliques.json", "ubiq", "finitely-partitioned"],
            false,
        ),
    ];
    let mut problems = Vec::new();
    let mut verified = 0;
    for (i, (name, args, exact)) in runs.iter().enumerate() {
        let (code1, first) = run_cli(d, args);
        let (code2, second) = run_cli(d, args);
        if code1 != 0 || code2 != 0 {
            problems.push(format!("{name}: exit codes {code1}/{code2}"));
        }
        if first != second || first.is_empty() {
            problems.push(format!("{name}: output differs between runs"));
        }
        if args.contains(&"herbrand") {
            let path = format!("cert{i}.json");
            std::fs::write(d.join(&path), &first).unwrap();
            let cert =
                HerbrandCertificate::from_json(std::str::from_utf8(&first).unwrap()).unwrap();
            if *exact && cert.mode != contlogic::Mode::Exact {
                problems.push(format!("{name}: not exact"));
            }
            let (code, _) = run_cli(d, &["verify", &path]);
            if code != 0 {
                problems.push(format!("{name}: verify exit {code}"));
            } else {
                verified += 1;
            }
        }
    }
    outcome(problems.is_empty(), format!("{} commands rerun byte-identical, {verified} certificates verified, problems {problems:?}", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("normal-form soundness", criterion_1),
        ("rescaling of many-sorted atoms", criterion_2),
        ("interval and Lipschitz soundness", criterion_3),
        ("classical Herbrand exactness", criterion_4),
        ("continuous Herbrand cover of (1-|x|^2)x", criterion_5),
        ("exact-term recovery", criterion_6),
        ("projection axioms and unitary spectrum", criterion_7),
        ("compact epsilon-net", criterion_8),
        ("ubiquity suite", criterion_9),
        ("determinism and verification", criterion_10),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let r = f();
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {id} ({name}): {} [{:.1}s]",
            r.detail,
            start.elapsed().as_secs_f64()
        );
        if !r.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
