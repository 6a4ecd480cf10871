//! Random generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zsup_core::atlas::{Atlas, Chart, Transition};
use zsup_core::grading::SignTable;
use zsup_core::morphism::{compose, BaseBox, MorphismData};
use zsup_core::poly::Polynomial;
use zsup_core::series::{FormalVar, GradedSeries};
use zsup_core::{Degree, DomainSpec, GradedMonomial, Rational, Scalar, Variable};

pub type Q = Rational;
pub type Series = GradedSeries<Q>;
pub type Poly = Polynomial<Q>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64) -> Q {
    Q::from_int(n)
}

pub fn deg(bits: &str) -> Degree {
    Degree::from_bit_str(bits).unwrap()
}

pub fn domain(n: usize, base: &[&str], formal: &[(&str, &str)], order: u32) -> Arc<DomainSpec> {
    let formal: Vec<(&str, Degree)> = formal.iter().map(|(name, d)| (*name, deg(d))).collect();
    Arc::new(DomainSpec::with_vars(n, base, &formal, order).unwrap())
}

/// 1|(1,1,1) over Z₂²: x; xi (0,1), eta (1,0), theta (1,1).
pub fn domain_1_111(order: u32) -> Arc<DomainSpec> {
    domain(
        2,
        &["x"],
        &[("xi", "01"), ("eta", "10"), ("theta", "11")],
        order,
    )
}

/// 2|(1,0,1) over Z₂²: x, y; xi (0,1), theta (1,1).
pub fn domain_2_101(order: u32) -> Arc<DomainSpec> {
    domain(2, &["x", "y"], &[("xi", "01"), ("theta", "11")], order)
}

/// Purely odd domain 0|q over Z₂.
pub fn odd_domain(q: usize, order: u32) -> Arc<DomainSpec> {
    let formal: Vec<FormalVar> = (0..q)
        .map(|i| FormalVar {
            name: format!("t{i}"),
            degree: deg("1"),
        })
        .collect();
    Arc::new(DomainSpec::new(1, vec![], formal, order).unwrap())
}

pub fn rand_q(r: &mut impl Rng) -> Q {
    Q::new(r.gen_range(-4i64..=4).into(), r.gen_range(1i64..=3).into())
}

pub fn rand_nonzero_q(r: &mut impl Rng) -> Q {
    loop {
        let v = rand_q(r);
        if !v.is_zero() {
            return v;
        }
    }
}

pub fn rand_poly(r: &mut impl Rng, nvars: usize, max_deg: u32, max_terms: usize) -> Poly {
    let terms = r.gen_range(0..=max_terms);
    Poly::from_terms(
        nvars,
        (0..terms).map(|_| {
            let mut e = vec![0u32; nvars];
            let mut budget = r.gen_range(0..=max_deg);
            for slot in e.iter_mut() {
                let k = r.gen_range(0..=budget);
                *slot = k;
                budget -= k;
            }
            (e, rand_q(r))
        }),
    )
}

fn rand_monomial(r: &mut impl Rng, d: &DomainSpec, max_order: u32) -> GradedMonomial {
    let mut exps = vec![0u32; d.num_formal()];
    let mut budget = r.gen_range(0..=max_order);
    let mut order: Vec<usize> = (0..d.num_formal()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, r.gen_range(0..=i));
    }
    for a in order {
        let cap = if d.is_odd(a) { budget.min(1) } else { budget };
        let k = r.gen_range(0..=cap);
        exps[a] = k;
        budget -= k;
    }
    GradedMonomial::new(exps)
}

/// Random series with up to `max_terms` monomials of order ≤ N.
pub fn rand_series(r: &mut impl Rng, d: &Arc<DomainSpec>, max_terms: usize) -> Series {
    let mut f = Series::zero(d);
    for _ in 0..r.gen_range(0..=max_terms) {
        let mu = rand_monomial(r, d, d.truncation_order());
        let c = rand_poly(r, d.num_base(), 2, 2);
        f = f.add(&Series::monomial(d, mu, c)).unwrap();
    }
    f
}

/// Random series homogeneous of degree `g`.
pub fn rand_homogeneous(
    r: &mut impl Rng,
    d: &Arc<DomainSpec>,
    g: &Degree,
    max_terms: usize,
) -> Series {
    let monos = d.enumerate_monomials(g, d.truncation_order());
    let mut f = Series::zero(d);
    if monos.is_empty() {
        return f;
    }
    for _ in 0..r.gen_range(0..=max_terms) {
        let mu = monos[r.gen_range(0..monos.len())].clone();
        let c = rand_poly(r, d.num_base(), 2, 2);
        f = f.add(&Series::monomial(d, mu, c)).unwrap();
    }
    f
}

/// Random morphism `source → target`: base coordinates pull back to
/// φ(x) + (degree-zero nilpotent part), formal ones to homogeneous series.
pub fn rand_morphism(
    r: &mut impl Rng,
    source: &Arc<DomainSpec>,
    target: &Arc<DomainSpec>,
) -> MorphismData<Q> {
    let zero = Degree::zero(source.rank());
    let pullbacks = target
        .variables()
        .into_iter()
        .map(|v| match v {
            Variable::Base(_) => {
                let phi = rand_poly(r, source.num_base(), 2, 3);
                let nil = rand_homogeneous(r, source, &zero, 2).filter_terms(|mu, _| !mu.is_one());
                Series::from_base(source, phi).add(&nil).unwrap()
            }
            Variable::Formal(_) => rand_homogeneous(r, source, &target.variable_degree(v), 3),
        })
        .collect();
    MorphismData::new(Arc::clone(source), Arc::clone(target), pullbacks).unwrap()
}

/// Random symmetric ±1 table of size m.
pub fn rand_sign_table(r: &mut impl Rng, m: usize) -> SignTable {
    let mut phi = vec![vec![1i64; m]; m];
    for i in 0..m {
        for j in i..m {
            let s = if r.gen_bool(0.5) { 1 } else { -1 };
            phi[i][j] = s;
            phi[j][i] = s;
        }
    }
    SignTable::new(phi).unwrap()
}

/// Pullback by direct substitution: every y-monomial of g_ν is expanded as a
/// product of the pulled-back coordinates, then multiplied by the η factors.
pub fn substitution_pullback(m: &MorphismData<Q>, g: &Series) -> Series {
    let src = m.source();
    let target = m.target();
    let p = target.num_base();
    let mut out = Series::zero(src);
    for (nu, g_nu) in g.terms() {
        let mut eta = Series::one(src);
        for (b, &e) in nu.exponents().iter().enumerate() {
            for _ in 0..e {
                eta = eta.mul(&m.pullbacks()[p + b]).unwrap();
            }
        }
        let mut base = Series::zero(src);
        for (exps, c) in g_nu.terms() {
            let mut t = Series::constant(src, c.clone());
            for (i, &k) in exps.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul(&m.pullbacks()[i]).unwrap();
                }
            }
            base = base.add(&t).unwrap();
        }
        out = out.add(&base.mul(&eta).unwrap()).unwrap();
    }
    out
}

/// Exterior algebra on q generators with rational coefficients; basis
/// elements are bitmasks and the product sign counts inversions.
#[derive(Clone, Debug, PartialEq)]
pub struct Grassmann(pub BTreeMap<u32, Q>);

impl Grassmann {
    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<u32, Q> = BTreeMap::new();
        for (&a, ca) in &self.0 {
            for (&b, cb) in &other.0 {
                if a & b != 0 {
                    continue;
                }
                let mut inversions = 0;
                for i in 0..32 {
                    if a >> i & 1 == 1 {
                        inversions += (b & ((1u32 << i) - 1)).count_ones();
                    }
                }
                let mut c = ca.clone() * cb.clone();
                if inversions % 2 == 1 {
                    c = -c;
                }
                let e = out.entry(a | b).or_insert_with(|| q(0));
                *e = e.clone() + c;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Grassmann(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (&k, c) in &other.0 {
            let e = out.entry(k).or_insert_with(|| q(0));
            *e = e.clone() + c.clone();
        }
        out.retain(|_, c| !c.is_zero());
        Grassmann(out)
    }

    pub fn random(r: &mut impl Rng, q: usize) -> Self {
        let mut out = BTreeMap::new();
        for _ in 0..r.gen_range(0..=5) {
            out.insert(r.gen_range(0..1u32 << q), rand_q(r));
        }
        out.retain(|_, c: &mut Q| !c.is_zero());
        Grassmann(out)
    }

    pub fn to_series(&self, d: &Arc<DomainSpec>) -> Series {
        let q = d.num_formal();
        let mut f = Series::zero(d);
        for (&mask, c) in &self.0 {
            let exps = (0..q).map(|i| mask >> i & 1).collect();
            f = f
                .add(&Series::monomial(
                    d,
                    GradedMonomial::new(exps),
                    Poly::constant(0, c.clone()),
                ))
                .unwrap();
        }
        f
    }
}

/// Sign (−1)^⟨deg f, deg g⟩ for homogeneous series.
pub fn commutation_sign(f: &Series, g: &Series) -> Option<Q> {
    let (a, b) = (f.homogeneous_degree()?, g.homogeneous_degree()?);
    Some(q(i64::from(a.commutation_sign(&b).unwrap())))
}

/// 1|1 over Z₂: base x, one odd ξ.
pub fn super_line(order: u32) -> Arc<DomainSpec> {
    domain(1, &["x"], &[("xi", "1")], order)
}

fn chart(id: &str, d: &Arc<DomainSpec>) -> Chart<Q> {
    Chart {
        id: id.into(),
        domain: Arc::clone(d),
        base_box: BaseBox::symmetric(d.num_base(), q(1)),
    }
}

fn wrap(from: &str, to: &str, map: MorphismData<Q>) -> Transition<Q> {
    let p = map.source().num_base();
    Transition::new(from, to, BaseBox::symmetric(p, q(1)), map).unwrap()
}

/// Three charts A, B, C with random Ψ_BA, Ψ_CB and Ψ_CA = Ψ_CB ∘ Ψ_BA.
pub fn rand_partial_atlas(r: &mut impl Rng, d: &Arc<DomainSpec>) -> Atlas<Q> {
    let ba = rand_morphism(r, d, d);
    let cb = rand_morphism(r, d, d);
    let ca = compose(&cb, &ba).unwrap();
    Atlas::new_partial(
        vec![chart("A", d), chart("B", d), chart("C", d)],
        vec![wrap("A", "B", ba), wrap("B", "C", cb), wrap("A", "C", ca)],
    )
    .unwrap()
}

/// Three charts of the super line related to a reference chart by
/// x ↦ a·x + b, ξ ↦ c·ξ, with every transition in both directions.
pub fn rand_affine_atlas(r: &mut impl Rng, order: u32) -> Atlas<Q> {
    let d = super_line(order);
    let x = Series::named(&d, "x").unwrap();
    let xi = Series::named(&d, "xi").unwrap();
    let charts: Vec<(Q, Q, Q)> = (0..3)
        .map(|_| (rand_nonzero_q(r), rand_q(r), rand_nonzero_q(r)))
        .collect();
    let to_ref = |(a, b, c): &(Q, Q, Q)| {
        let inv_a = Q::from_int(1) / a.clone();
        let base = x
            .sub(&Series::constant(&d, b.clone()))
            .unwrap()
            .scale(&inv_a);
        let fiber = xi.scale(&(Q::from_int(1) / c.clone()));
        MorphismData::new(Arc::clone(&d), Arc::clone(&d), vec![base, fiber]).unwrap()
    };
    let from_ref = |(a, b, c): &(Q, Q, Q)| {
        let base = x.scale(a).add(&Series::constant(&d, b.clone())).unwrap();
        MorphismData::new(Arc::clone(&d), Arc::clone(&d), vec![base, xi.scale(c)]).unwrap()
    };
    let ids = ["A", "B", "C"];
    let mut transitions = Vec::new();
    for (i, from) in ids.iter().enumerate() {
        for (j, to) in ids.iter().enumerate() {
            if i != j {
                let map = compose(&from_ref(&charts[j]), &to_ref(&charts[i])).unwrap();
                transitions.push(wrap(from, to, map));
            }
        }
    }
    Atlas::new(ids.iter().map(|id| chart(id, &d)).collect(), transitions).unwrap()
}
