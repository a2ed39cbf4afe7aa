//! Lower ramification filtrations, Herbrand functions and the bound assembly.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::alpha_beta;
use crate::error::{invalid, Result};
use crate::local::{LocalFieldModel, Valued};
use crate::padic::{check_odd_prime, EisensteinPoly};
use crate::plf::Plf;
use crate::rat::{floor_int, max_rat, parse_rat, pow_rat, rat, rint, serde_rat, Rat};
use crate::ring::Ring;

/// Breaks (λ_j, Card G_(t) for λ_j < t ≤ λ_{j+1}); Card G_(t) = order for t ≤ λ_1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerFiltration {
    order: u64,
    breaks: Vec<(Rat, u64)>,
}

impl LowerFiltration {
    pub fn new(order: u64, breaks: Vec<(Rat, u64)>) -> Result<Self> {
        if order == 0 {
            return invalid("group order must be positive");
        }
        let mut prev_l: Option<&Rat> = None;
        let mut prev_o = order;
        for (l, o) in &breaks {
            if *l <= Rat::zero() {
                return invalid("breaks must be positive");
            }
            if prev_l.is_some_and(|p| l <= p) {
                return invalid("breaks must be strictly increasing");
            }
            if *o >= prev_o || *o == 0 || !order.is_multiple_of(*o) {
                return invalid(format!("order {o} after a break must strictly decrease and divide {order}"));
            }
            prev_l = Some(l);
            prev_o = *o;
        }
        if prev_o != 1 {
            return invalid("filtration must end at the trivial group");
        }
        Ok(LowerFiltration { order, breaks })
    }

    pub fn trivial() -> Self {
        LowerFiltration { order: 1, breaks: vec![] }
    }

    /// Tame cyclic of order m: single break at 1.
    pub fn tame(m: u64) -> Result<Self> {
        if m == 1 {
            return Ok(Self::trivial());
        }
        Self::new(m, vec![(Rat::one(), 1)])
    }

    /// Parses "λ:k,..." where Card G_(t) = k for t up to and including λ.
    pub fn parse(s: &str, order: u64) -> Result<Self> {
        let mut breaks = Vec::new();
        let mut expect = order;
        let s = s.trim();
        if s.is_empty() {
            return Self::new(order, breaks);
        }
        let items: Vec<&str> = s.split(',').collect();
        for (i, item) in items.iter().enumerate() {
            let (l, k) = item
                .split_once(':')
                .ok_or_else(|| crate::Error::InvalidInput(format!("expected λ:order, got {item:?}")))?;
            let l = parse_rat(l)?;
            let k: u64 = k
                .trim()
                .parse()
                .map_err(|_| crate::Error::InvalidInput(format!("bad order in {item:?}")))?;
            if k != expect {
                return invalid(format!("order {k} at break {i} does not continue the filtration (expected {expect})"));
            }
            let next = match items.get(i + 1) {
                Some(nx) => nx
                    .split_once(':')
                    .and_then(|(_, k)| k.trim().parse().ok())
                    .ok_or_else(|| crate::Error::InvalidInput(format!("bad item {nx:?}")))?,
                None => 1,
            };
            breaks.push((l, next));
            expect = next;
        }
        Self::new(order, breaks)
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn breaks(&self) -> &[(Rat, u64)] {
        &self.breaks
    }

    /// Card G_(t).
    pub fn card_at(&self, t: &Rat) -> u64 {
        let mut c = self.order;
        for (l, o) in &self.breaks {
            if t > l {
                c = *o;
            }
        }
        c
    }

    /// Last lower break; 0 for the trivial group.
    pub fn last_break(&self) -> Rat {
        self.breaks.last().map_or_else(Rat::zero, |(l, _)| l.clone())
    }

    /// Card G^(μ).
    pub fn upper_card_at(&self, mu: &Rat) -> u64 {
        self.card_at(&phi_from_filtration(self).inverse().eval(mu).expect("non-negative"))
    }

    /// Upper breaks (μ_j, order after).
    pub fn upper_breaks(&self) -> Vec<(Rat, u64)> {
        let phi = phi_from_filtration(self);
        self.breaks
            .iter()
            .map(|(l, o)| (phi.eval(l).expect("positive"), *o))
            .collect()
    }
}

/// φ(λ) = ∫_0^λ Card G_(t)/Card G_(1) dt.
pub fn phi_from_filtration(f: &LowerFiltration) -> Plf {
    let norm = rint(f.card_at(&Rat::one()));
    let mut segs = Vec::new();
    let mut x = Rat::zero();
    let mut card = f.order;
    for (l, o) in &f.breaks {
        segs.push((l - &x, rint(card) / &norm));
        x = l.clone();
        card = *o;
    }
    Plf::from_segments(&segs, rint(card) / &norm).expect("valid filtration yields a bijection")
}

pub fn psi(f: &Plf) -> Plf {
    f.inverse()
}

/// outer ∘ inner.
pub fn compose(outer: &Plf, inner: &Plf) -> Plf {
    outer.compose(inner)
}

/// Last upper break μ = φ(λ).
pub fn last_upper_break(f: &LowerFiltration) -> Rat {
    phi_from_filtration(f).eval(&f.last_break()).expect("non-negative")
}

/// Builds a filtration from an upper-numbered step function by inverting ψ.
fn from_upper(order: u64, upper: &[(Rat, u64)]) -> Result<LowerFiltration> {
    let norm = {
        let mut c = order;
        for (m, o) in upper {
            if Rat::one() > *m {
                c = *o;
            }
        }
        rint(c)
    };
    let mut segs = Vec::new();
    let mut x = Rat::zero();
    let mut card = order;
    for (m, o) in upper {
        segs.push((m - &x, &norm / rint(card)));
        x = m.clone();
        card = *o;
    }
    let psi = Plf::from_segments(&segs, &norm / rint(card))?;
    let breaks = upper
        .iter()
        .map(|(m, o)| Ok((psi.eval(m)?, *o)))
        .collect::<Result<Vec<_>>>()?;
    LowerFiltration::new(order, breaks)
}

/// Splits at the filtration subgroup H of order `sub_order`:
/// returns (filtration of H, filtration of G/H).
pub fn split(f: &LowerFiltration, sub_order: u64) -> Result<(LowerFiltration, LowerFiltration)> {
    let chain: Vec<u64> = std::iter::once(f.order).chain(f.breaks.iter().map(|(_, o)| *o)).collect();
    if !chain.contains(&sub_order) {
        return invalid(format!("{sub_order} is not the order of a filtration subgroup"));
    }
    let sub_breaks: Vec<(Rat, u64)> = f
        .breaks
        .iter()
        .filter(|(_, o)| *o < sub_order)
        .map(|(l, o)| (l.clone(), *o))
        .collect();
    let sub = LowerFiltration::new(sub_order, sub_breaks)?;
    let q_order = f.order / sub_order;
    let mut q_upper: Vec<(Rat, u64)> = Vec::new();
    for (m, o) in f.upper_breaks() {
        let qo = (o / sub_order).max(1);
        let prev = q_upper.last().map_or(q_order, |(_, c)| *c);
        if qo < prev {
            q_upper.push((m, qo));
        }
    }
    let quot = from_upper(q_order, &q_upper)?;
    Ok((sub, quot))
}

/// μ_{F/K} = max(μ_{N/K}, φ_{N/K}(μ_{F/N})).
pub fn mu_transitivity(mu_nk: &Rat, mu_fn: &Rat, phi_nk: &Plf) -> Result<Rat> {
    Ok(max_rat(mu_nk, &phi_nk.eval(mu_fn)?))
}

/// e_NK·m + 1/e_FN; with `wild = Some(p)`, (p−1)·e_FN·μ is rounded down to a multiple of p.
pub fn fontaine_mu_bound(m: &Rat, e_nk: u64, e_fn: u64, wild: Option<u64>) -> Result<Rat> {
    if *m < Rat::zero() {
        return invalid("m must be non-negative");
    }
    if e_nk == 0 || e_fn == 0 {
        return invalid("ramification indices must be positive");
    }
    let x = rint(e_nk) * m;
    let plain = &x + rat(1, e_fn as i64);
    match wild {
        None => Ok(plain),
        Some(p) => {
            check_odd_prime(p)?;
            let scale = rint((p - 1) * e_fn);
            let top = &scale * &plain;
            let k = floor_int(&(top / rint(p)));
            Ok(Rat::from_integer(k * p) / scale)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentBound {
    #[serde(with = "serde_rat")]
    pub value: Rat,
    /// true: v_K(D) < value; false: v_K(D) = value.
    pub strict: bool,
}

/// From (P_m): v_K(D_{F/N}) < m, or = 0 when F/N is unramified.
pub fn different_from_pm(m: &Rat, ramified: bool) -> DifferentBound {
    if ramified {
        DifferentBound { value: m.clone(), strict: true }
    } else {
        DifferentBound { value: Rat::zero(), strict: false }
    }
}

/// v_K of the different of K(π^(1/p^s))/K: 1 + e·s − 1/p^s, 0 at s = 0.
pub fn kummer_different(p: u64, e: u64, s: u32) -> Rat {
    if s == 0 {
        return Rat::zero();
    }
    Rat::one() + rint(e * s as u64) - pow_rat(p, -(s as i64))
}

/// The same quantity read off a model of K_s: v_K(p^s·π_s^(p^s − 1)).
pub fn kummer_different_in_model(model: &LocalFieldModel, pi_s: &crate::local::LocalElement, s: u32) -> Result<Rat> {
    let p = model.p();
    let ps = p.pow(s);
    let d = model.mul(
        &model.from_int(&num_traits::pow(num_bigint::BigInt::from(p), s as usize)),
        &model.pow(pi_s, ps - 1),
    );
    model
        .valuation(&d)
        .exact()
        .cloned()
        .ok_or_else(|| crate::Error::Precision("derivative vanishes at model precision".into()))
}

/// The Kummer-level model for K = ℚ_p(π), π a root of an e-th degree pure Eisenstein
/// polynomial, and K_s = K(π^(1/p^s)): degree e·p^s, generator x = π_s.
pub fn kummer_model(p: u64, e: u64, s: u32, precision: u32) -> Result<LocalFieldModel> {
    let deg = (e * p.pow(s)) as usize;
    let g = EisensteinPoly::pure(p, deg, 1)?;
    LocalFieldModel::new(g, precision, e)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thm12Assembly {
    pub s: u32,
    pub alpha: u32,
    #[serde(with = "serde_rat")]
    pub beta: Rat,
    /// m = a·p^(n−1−s).
    #[serde(with = "serde_rat")]
    pub m: Rat,
    /// Model value of e_{N_s/K}; the result does not depend on it.
    pub e_ns_k: u64,
    #[serde(with = "serde_rat")]
    pub mu_ns_k: Rat,
    #[serde(with = "serde_rat")]
    pub lambda_ns_k_lower: Rat,
    #[serde(with = "serde_rat")]
    pub mu_fs_ns_bound: Rat,
    /// max(μ_{N_s/K}, estimate(μ_{F_s/N_s})).
    #[serde(with = "serde_rat")]
    pub mu_transitive: Rat,
    /// 1 + e(s + max(β, 1/(p−1))).
    #[serde(with = "serde_rat")]
    pub mu: Rat,
    #[serde(with = "serde_rat")]
    pub kummer_diff: Rat,
    /// Strict bound on v_K(D_{L/K}).
    #[serde(with = "serde_rat")]
    pub diff: Rat,
}

pub fn thm12_assembly(p: u64, e: u64, n: u32, r: u32, n_exp: u64) -> Result<Thm12Assembly> {
    thm12_assembly_with(p, e, n, r, n_exp, None)
}

/// As `thm12_assembly`, with an explicit model value for e_{N_s/K}.
pub fn thm12_assembly_with(
    p: u64,
    e: u64,
    n: u32,
    r: u32,
    n_exp: u64,
    e_ns_k: Option<u64>,
) -> Result<Thm12Assembly> {
    check_odd_prime(p)?;
    if e == 0 || n == 0 || r == 0 {
        return invalid("e, n, r must be >= 1");
    }
    if n_exp < e * r as u64 {
        return invalid("N must be at least e·r");
    }
    let pm1 = rint(p - 1);
    let er = rint(e);
    let (alpha, beta) = alpha_beta(&(rint(n_exp) / (&er * &pm1)), p)?;
    let s = n + alpha;
    let a = rint(p * n_exp) / &pm1;
    let m = &a * pow_rat(p, n as i64 - 1 - s as i64);
    let e_ns = e_ns_k.unwrap_or((p - 1) * p.pow(2 * s - 1));
    let inv = Rat::one() / &pm1;
    let mu_ns_k = Rat::one() + &er * (rint(s) + &inv);
    let lambda_lb = rint(e_ns) * (&er * &inv + pow_rat(p, -(s as i64)));
    let tail = rat(1, e_ns as i64);
    let estimate = Plf::new(vec![(Rat::zero(), Rat::zero()), (lambda_lb.clone(), mu_ns_k.clone())], tail)?;
    let mu_fs_ns_bound = rint(e_ns) * &m;
    let mu_transitive = mu_transitivity(&mu_ns_k, &mu_fs_ns_bound, &estimate)?;
    let mu = Rat::one() + &er * (rint(s) + max_rat(&beta, &inv));
    let kummer_diff = kummer_different(p, e, s);
    let diff = &kummer_diff + different_from_pm(&m, true).value;
    Ok(Thm12Assembly {
        s,
        alpha,
        beta,
        m,
        e_ns_k: e_ns,
        mu_ns_k,
        lambda_ns_k_lower: lambda_lb,
        mu_fs_ns_bound,
        mu_transitive,
        mu,
        kummer_diff,
        diff,
    })
}
