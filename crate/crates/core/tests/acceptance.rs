//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use zsup_core::atlas::{
    check_all_cocycles, superize_dvb, tangent_lift_atlas, DTerm, DvbSpec, FiberCoord, Sampling,
};
use zsup_core::clifford::{
    check_color_commutative, clifford_mul, parse_clifford, quaternion_clifford,
    quaternion_presentation, CliffordElement,
};
use zsup_core::expr::parse_series;
use zsup_core::grading::{enumerate_degrees, realize_sign_table, verify_assignment};
use zsup_core::morphism::{
    base_map_commutes, compose, jet_at, maximal_ideal_order, pullback_section, MorphismData,
};
use zsup_core::poly::Polynomial;
use zsup_core::Order;

type Check = fn(&mut ChaCha8Rng) -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sign_realization(r: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..200 {
        let m = r.gen_range(1..=8);
        let t = rand_sign_table(r, m);
        let a = realize_sign_table(&t);
        ensure(a.rank() <= 2 * m, || {
            format!("case {case}: rank {} > 2m", a.rank())
        })?;
        ensure(verify_assignment(&t, &a).unwrap(), || {
            format!("case {case}: verify failed")
        })?;
        for i in 0..m {
            for j in 0..m {
                let s = a.sigmas()[i].commutation_sign(&a.sigmas()[j]).unwrap();
                ensure(s == t.sign(i, j), || format!("case {case}: pair ({i},{j})"))?;
            }
        }
    }
    Ok("200 tables, m ≤ 8".into())
}

fn ring_laws(r: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..100 {
        let order = r.gen_range(0..=5);
        for d in [domain_1_111(order), domain_2_101(order)] {
            let (f, g, h) = (
                rand_series(r, &d, 4),
                rand_series(r, &d, 4),
                rand_series(r, &d, 4),
            );
            let mul = |a: &Series, b: &Series| a.mul(b).unwrap();
            let add = |a: &Series, b: &Series| a.add(b).unwrap();
            ensure(mul(&mul(&f, &g), &h) == mul(&f, &mul(&g, &h)), || {
                format!("case {case}: associativity")
            })?;
            ensure(
                mul(&f, &add(&g, &h)) == add(&mul(&f, &g), &mul(&f, &h)),
                || format!("case {case}: distributivity"),
            )?;
            for a in enumerate_degrees(2) {
                for b in enumerate_degrees(2) {
                    let u = rand_homogeneous(r, &d, &a, 3);
                    let v = rand_homogeneous(r, &d, &b, 3);
                    let sign = q(i64::from(a.commutation_sign(&b).unwrap()));
                    ensure(mul(&u, &v) == mul(&v, &u).scale(&sign), || {
                        format!("case {case}: commutativity {a} {b}")
                    })?;
                }
            }
        }
    }
    Ok("100 triples in 1|(1,1,1) and 2|(1,0,1)".into())
}

fn invertibility(r: &mut ChaCha8Rng) -> Result<String, String> {
    let d = domain_1_111(6);
    let f = parse_series::<Q>(&d, "1 - theta").unwrap();
    let want = parse_series::<Q>(
        &d,
        "1 + theta + theta^2 + theta^3 + theta^4 + theta^5 + theta^6",
    )
    .unwrap();
    ensure(f.invert().unwrap() == want, || "geometric series".into())?;
    for case in 0..100 {
        let order = r.gen_range(0..=5);
        let d = if case % 2 == 0 {
            domain_1_111(order)
        } else {
            domain_2_101(order)
        };
        let f = rand_series(r, &d, 4)
            .filter_terms(|mu, _| !mu.is_one())
            .add(&Series::constant(&d, rand_nonzero_q(r)))
            .unwrap();
        let prod = f
            .mul(&f.invert().unwrap())
            .unwrap()
            .truncate(order + 1)
            .unwrap();
        ensure(prod == Series::one(&d), || {
            format!("case {case}: f·f⁻¹ ≠ 1")
        })?;

        let x = Series::base_var(&d, 0);
        let bad = f
            .add(&x.mul(&Series::constant(&d, rand_nonzero_q(r))).unwrap())
            .unwrap();
        ensure(bad.invert().is_err(), || {
            format!("case {case}: accepted non-constant f₀")
        })?;
    }
    Ok("geometric series exact; 100 round trips; 100 rejections".into())
}

fn pullback_paths(r: &mut ChaCha8Rng) -> Result<String, String> {
    let x = domain(2, &["x"], &[("theta", "11")], 4);
    let y = domain(2, &["y"], &[], 4);
    let exprs = [("y".to_string(), "x + theta^2".to_string())]
        .into_iter()
        .collect();
    let m = MorphismData::<Q>::from_exprs(x.clone(), y.clone(), &exprs).unwrap();
    let g = parse_series::<Q>(&y, "y^2").unwrap();
    let want = parse_series::<Q>(&x, "x^2 + 2*x*theta^2 + theta^4").unwrap();
    ensure(pullback_section(&m, &g).unwrap() == want, || {
        "y² example".into()
    })?;
    for case in 0..50 {
        let order = r.gen_range(1..=4);
        let (src, tgt) = if case % 2 == 0 {
            (domain_1_111(order), domain_2_101(order))
        } else {
            (domain_2_101(order), domain_1_111(order))
        };
        let m = rand_morphism(r, &src, &tgt);
        let g = rand_series(r, &tgt, 4);
        ensure(
            pullback_section(&m, &g).unwrap() == substitution_pullback(&m, &g),
            || format!("case {case}: Taylor and substitution paths differ"),
        )?;
    }
    Ok("y² example exact; 50 random pairs agree".into())
}

fn functoriality(r: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..50 {
        let order = r.gen_range(1..=3);
        let (a, b, c) = (
            domain_1_111(order),
            domain_2_101(order),
            domain_1_111(order),
        );
        let phi = rand_morphism(r, &a, &b);
        let psi = rand_morphism(r, &b, &c);
        let g = rand_series(r, &c, 3);
        let lhs = pullback_section(&compose(&psi, &phi).unwrap(), &g).unwrap();
        let rhs = pullback_section(&phi, &pullback_section(&psi, &g).unwrap()).unwrap();
        ensure(lhs == rhs, || format!("case {case}: (Ψ∘Φ)* ≠ Φ*Ψ*"))?;
        ensure(
            base_map_commutes(&phi, &rand_series(r, &b, 3)).unwrap(),
            || format!("case {case}: ε"),
        )?;
        ensure(base_map_commutes(&psi, &g).unwrap(), || {
            format!("case {case}: ε")
        })?;
    }
    Ok("50 composable pairs".into())
}

fn tangent_lift(r: &mut ChaCha8Rng) -> Result<String, String> {
    let mut triples = 0;
    for case in 0..20 {
        let order = r.gen_range(1..=3);
        for atlas in [
            rand_affine_atlas(r, order),
            rand_partial_atlas(r, &super_line(order)),
        ] {
            ensure(
                check_all_cocycles(&atlas).unwrap().iter().all(|c| c.ok),
                || format!("case {case}: base atlas not a cocycle"),
            )?;
            let lifted = tangent_lift_atlas(&atlas).unwrap();
            let d = &lifted.charts()[0].domain;
            let degrees: Vec<String> = d
                .variables()
                .into_iter()
                .map(|v| d.variable_degree(v).to_string())
                .collect();
            ensure(degrees == ["(0,0)", "(0,1)", "(1,0)", "(1,1)"], || {
                format!("degrees {degrees:?}")
            })?;
            for rep in check_all_cocycles(&lifted).unwrap() {
                triples += 1;
                ensure(rep.ok, || {
                    format!("case {case}: triple {:?} fails", rep.triple)
                })?;
            }
        }
    }
    Ok(format!("40 atlases, {triples} lifted triples"))
}

fn rand_entry(r: &mut ChaCha8Rng) -> Polynomial<Q> {
    rand_poly(r, 1, 2, 3)
}

/// L·U with L unit lower triangular and U upper triangular with diagonal
/// entries c + s·x² (c > 0, s ≥ 0): the determinant never vanishes.
fn rand_invertible(r: &mut ChaCha8Rng, k: usize) -> Vec<Vec<Polynomial<Q>>> {
    let x2 = Polynomial::var(1, 0).pow(2);
    let entry = |r: &mut ChaCha8Rng, i: usize, j: usize, upper: bool| match (i.cmp(&j), upper) {
        (std::cmp::Ordering::Equal, true) => {
            let c = Polynomial::constant(
                1,
                Q::new(r.gen_range(1i64..=5).into(), r.gen_range(1i64..=3).into()),
            );
            c.add(&x2.scale(&q(r.gen_range(0..=2))))
        }
        (std::cmp::Ordering::Equal, false) => Polynomial::one(1),
        (std::cmp::Ordering::Less, true) | (std::cmp::Ordering::Greater, false) => rand_entry(r),
        _ => Polynomial::zero(1),
    };
    let l: Vec<Vec<_>> = (0..k)
        .map(|i| (0..k).map(|j| entry(r, i, j, false)).collect())
        .collect();
    let u: Vec<Vec<_>> = (0..k)
        .map(|i| (0..k).map(|j| entry(r, i, j, true)).collect())
        .collect();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    (0..k).fold(Polynomial::zero(1), |acc, m| {
                        acc.add(&l[i][m].mul(&u[m][j]))
                    })
                })
                .collect()
        })
        .collect()
}

fn rand_dvb(r: &mut ChaCha8Rng, (r1, r2, r3): (usize, usize, usize)) -> DvbSpec<Q> {
    let (a, b, c) = (
        rand_invertible(r, r1),
        rand_invertible(r, r2),
        rand_invertible(r, r3),
    );
    let mut d = Vec::new();
    for target in 0..r3 {
        for k in 0..r1 {
            for m in 0..r2 {
                if r.gen_bool(0.6) {
                    let factors = if r.gen_bool(0.5) {
                        [FiberCoord::Xi(k), FiberCoord::Eta(m)]
                    } else {
                        [FiberCoord::Eta(m), FiberCoord::Xi(k)]
                    };
                    d.push(DTerm {
                        target,
                        factors,
                        coeff: rand_entry(r),
                    });
                }
            }
        }
    }
    DvbSpec {
        phi: vec![rand_entry(r)],
        a,
        b,
        c,
        d,
        truncation_order: 2,
    }
}

fn dvb_superization(r: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..30 {
        let ranks = (r.gen_range(1..=2), r.gen_range(1..=2), r.gen_range(1..=2));
        let first = rand_dvb(r, ranks);
        let second = rand_dvb(r, ranks);
        let s = Sampling::unit(1, r.gen());
        let sup = |spec: &DvbSpec<Q>| {
            superize_dvb(spec, &s, "A", "B").map_err(|e| format!("case {case}: {e}"))
        };
        let (t1, t2) = (sup(&first)?, sup(&second)?);
        let both = sup(&second.after(&first).map_err(|e| e.to_string())?)?;
        ensure(both.map == compose(&t2.map, &t1.map).unwrap(), || {
            format!("case {case}: composition")
        })?;

        let mut swapped = first.clone();
        for t in &mut swapped.d {
            t.factors.swap(0, 1);
        }
        ensure(sup(&swapped)? == t1, || {
            format!("case {case}: ξη order changes the output")
        })?;
    }
    Ok("30 composable pairs, ranks ≤ 2; factor order irrelevant".into())
}

fn quaternions(_: &mut ChaCha8Rng) -> Result<String, String> {
    let h = quaternion_presentation::<Q>();
    let rep = check_color_commutative(&h).map_err(|e| e.to_string())?;
    ensure(rep.commutative && rep.pairs_checked == 16, || {
        format!("{rep:?}")
    })?;

    let p = quaternion_clifford::<Q>();
    let images = ["1", "e1", "e2", "e1*e2"].map(|s| parse_clifford(&p, s).unwrap());
    for i in 0..4 {
        for j in 0..4 {
            let want = h.product(i, j);
            let mut expected = CliffordElement::zero();
            for (k, c) in want.iter().enumerate() {
                expected = expected.add(&images[k].scale(c));
            }
            let got = clifford_mul(&p, &images[i], &images[j]).unwrap();
            ensure(got == expected, || {
                format!("{}·{}", h.names()[i], h.names()[j])
            })?;
        }
    }
    Ok("16-pair sweep; Clifford table matches ℍ".into())
}

fn madic(r: &mut ChaCha8Rng) -> Result<String, String> {
    let d = domain_1_111(4);
    let f = parse_series::<Q>(&d, "x^2 + x*xi + xi*eta*theta").unwrap();
    ensure(maximal_ideal_order(&f, &[q(0)]) == Order::Finite(2), || {
        "example order".into()
    })?;
    for case in 0..100 {
        let d = domain_1_111(r.gen_range(1..=4));
        let f = rand_series(r, &d, 5);
        let k = r.gen_range(1..=4);
        let jet = jet_at(&f, &[q(0)], k).unwrap().to_series();
        ensure(
            maximal_ideal_order(&f.sub(&jet).unwrap(), &[q(0)]).at_least(k),
            || format!("case {case}: k = {k}"),
        )?;
    }
    Ok("example = 2; 100 jets".into())
}

fn classical(r: &mut ChaCha8Rng) -> Result<String, String> {
    for case in 0..100 {
        let qn = r.gen_range(1..=4);
        let a = Grassmann::random(r, qn);
        let b = Grassmann::random(r, qn);
        let mut texts = Vec::new();
        for order in [qn as u32, qn as u32 + 1, qn as u32 + 3] {
            let d = odd_domain(qn, order);
            let (fa, fb) = (a.to_series(&d), b.to_series(&d));
            let prod = fa.mul(&fb).unwrap();
            ensure(prod == a.mul(&b).to_series(&d), || {
                format!("case {case}: product vs oracle")
            })?;
            let unit = fa.add(&Series::one(&d)).unwrap();
            let inv = if unit.base_project().is_zero() {
                None
            } else {
                Some(unit.invert().unwrap())
            };
            let der = d
                .variables()
                .into_iter()
                .map(|v| prod.partial_derivative(v).to_expr_string());
            texts.push((
                prod.to_expr_string(),
                inv.map(|s| s.to_expr_string()),
                der.collect::<Vec<_>>(),
            ));
        }
        ensure(texts.windows(2).all(|w| w[0] == w[1]), || {
            format!("case {case}: depends on N")
        })?;
    }
    Ok("100 cases, q ≤ 4, N ∈ {q, q+1, q+3}".into())
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("sign-rule realization", sign_realization),
        ("series ring laws", ring_laws),
        ("invertibility", invertibility),
        ("pullback: Taylor vs substitution", pullback_paths),
        ("functoriality and ε-commutation", functoriality),
        ("tangent lift cocycles", tangent_lift),
        ("DVB superization", dvb_superization),
        ("quaternions", quaternions),
        ("m-adic order and jets", madic),
        ("classical degeneration", classical),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let mut r = rng(0xACCE_0000 + i as u64);
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut r)))
            .unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({ms} ms)", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} ({ms} ms)", i + 1);
            }
        }
    }
    println!(
        "{} of 10 criteria passed in {:.1} s",
        10 - failures,
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
