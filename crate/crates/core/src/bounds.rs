//! Nilpotency indices in W_n[u]/E(u)^r and the ramification bound constants.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::local::{LocalFieldModel, Valued};
use crate::padic::{check_odd_prime, min_integer_strictly_above, quot_ring, EisensteinPoly};
use crate::rat::{ceil_int, max_rat, pow_rat, rat, rint, serde_opt_rat, serde_rat, Rat};
use crate::ring::{poly, Integers, Ring};

/// Least N with u^N = 0 in W_n[u]/E(u)^r.
pub fn exact_nilpotency_index(e: &EisensteinPoly, n: u32, r: u32) -> Result<u64> {
    if n == 0 || r == 0 {
        return invalid("n and r must be >= 1");
    }
    let ring = quot_ring(e, n, r)?;
    let bound = e.degree() as u64 * r as u64 * n as u64;
    let u = ring.gen();
    let mut pw = ring.one();
    for k in 0..=bound {
        if ring.is_zero(&pw) {
            return Ok(k);
        }
        pw = ring.mul(&pw, &u);
    }
    Err(Error::Integrality(format!(
        "u^{bound} does not vanish in W_{n}[u]/E^{r}"
    )))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedFormBounds {
    pub ern: u64,
    pub ceil_bound: u64,
    pub uep_bound: Option<u64>,
    pub general_bound: u64,
    /// ⌈v_p(E'(π))⌉ used in the general bound.
    pub different_ceil: u64,
}

impl ClosedFormBounds {
    pub fn min(&self) -> u64 {
        let m = self.ern.min(self.ceil_bound).min(self.general_bound);
        self.uep_bound.map_or(m, |u| m.min(u))
    }
}

pub fn closed_form_n_bounds(e: &EisensteinPoly, n: u32, r: u32) -> Result<ClosedFormBounds> {
    if n == 0 || r == 0 {
        return invalid("n and r must be >= 1");
    }
    let p = e.p();
    let deg = e.degree() as u64;
    let (n64, r64) = (n as u64, r as u64);
    let pn1 = p.pow(n - 1);
    let ceil_bound = deg * pn1 * r64.div_ceil(pn1);
    let uep_bound = e.pure_sign().map(|_| deg * (n64 + r64 - 1));
    let v = ceil_int(&different_valuation(e)?);
    let v: u64 = v.try_into().map_err(|_| Error::Precision("different too large".into()))?;
    let c = deg * v + 1;
    Ok(ClosedFormBounds {
        ern: deg * r64 * n64,
        ceil_bound,
        uep_bound,
        general_bound: deg * n64 + c * (r64 - 1),
        different_ceil: v,
    })
}

/// v_p(E'(π)) for a root π of E, read off a local model of E.
pub fn different_valuation(e: &EisensteinPoly) -> Result<Rat> {
    let d = poly::derivative(&Integers, e.coeffs());
    let mut precision = 8;
    while precision <= 256 {
        let model = LocalFieldModel::new(e.clone(), precision, 1)?;
        let y = model.x();
        let val = model.valuation(&model.eval_poly(&d, &y));
        if let Some(v) = val.exact() {
            return Ok(v.clone());
        }
        precision *= 2;
    }
    Err(Error::Precision("E'(π) vanishes at every tried precision".into()))
}

/// x = p^alpha·beta with alpha ≥ 0 and 1/p < beta ≤ 1.
pub fn alpha_beta(x: &Rat, p: u64) -> Result<(u32, Rat)> {
    if *x <= pow_rat(p, -1) {
        return invalid(format!("{x} must exceed 1/{p}"));
    }
    let pr = rint(p);
    let mut alpha = 0u32;
    let mut beta = x.clone();
    while beta > Rat::one() {
        beta /= &pr;
        alpha += 1;
    }
    Ok((alpha, beta))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundConstants {
    #[serde(rename = "N")]
    pub n_exp: u64,
    #[serde(with = "serde_rat")]
    pub b: Rat,
    #[serde(with = "serde_rat")]
    pub a: Rat,
    pub s_min_int: i64,
    pub s0a_int: i64,
    pub s2b_int: i64,
    /// Relaxed threshold s > s_1(a − 1), present when requested and a ≥ (p−1)/(p−2).
    pub s_min_relaxed: Option<i64>,
    pub alpha: u32,
    #[serde(with = "serde_rat")]
    pub beta: Rat,
}

fn check_params(p: u64, e: u64, n: u32, r: u32, n_exp: u64) -> Result<()> {
    check_odd_prime(p)?;
    if e == 0 || n == 0 || r == 0 {
        return invalid("e, n, r must be >= 1");
    }
    if n_exp < e * r as u64 {
        return invalid(format!(
            "N = {n_exp} cannot annihilate u modulo E^r (needs N >= e·r = {})",
            e * r as u64
        ));
    }
    Ok(())
}

pub fn bound_constants(p: u64, e: u64, n: u32, r: u32, n_exp: u64, relaxed: bool) -> Result<BoundConstants> {
    check_params(p, e, n, r, n_exp)?;
    let nr = rint(n_exp);
    let er = rint(e);
    let pm1 = rint(p - 1);
    let b = &nr / &pm1;
    let a = rint(p) * &nr / &pm1;
    let n1 = n as i64 - 1;
    // s_1(a): e·p^(s−n+1) > N
    let s_min_int = min_integer_strictly_above(p, &(&nr / &er), n1)?;
    // s_0(a): e(p−1)p^(s−n) > N
    let s0a_int = min_integer_strictly_above(p, &(&nr / (&er * &pm1)), n as i64)?;
    // s_2(b) = n − 1 + log_p((p−1)b/e)
    let s2b_int = min_integer_strictly_above(p, &(&pm1 * &b / &er), n1)?;
    let s_min_relaxed = if relaxed && p > 2 && a >= rat(p as i64 - 1, p as i64 - 2) {
        let c = &a - Rat::one();
        let q = &c * &pm1 / (&er * rint(p));
        Some(min_integer_strictly_above(p, &q, n1)?)
    } else {
        None
    };
    let (alpha, beta) = alpha_beta(&(&nr / (&er * &pm1)), p)?;
    Ok(BoundConstants {
        n_exp,
        b,
        a,
        s_min_int,
        s0a_int,
        s2b_int,
        s_min_relaxed,
        alpha,
        beta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NProvenance {
    /// N = e·r·n.
    ClosedForm,
    /// Minimal N found by brute force.
    Exact,
    /// Supplied by the caller.
    Supplied,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: u64,
    pub e: u64,
    pub n: u32,
    pub r: u32,
    #[serde(rename = "N")]
    pub n_exp: u64,
    pub n_provenance: NProvenance,
    #[serde(with = "serde_rat")]
    pub thm11_mu: Rat,
    pub thm11_min_s: i64,
    #[serde(with = "serde_rat")]
    pub cor39_mu: Rat,
    pub cor39_min_s: i64,
    pub alpha: u32,
    #[serde(with = "serde_rat")]
    pub beta: Rat,
    #[serde(with = "serde_rat")]
    pub thm12_mu: Rat,
    #[serde(with = "serde_rat")]
    pub thm12_diff: Rat,
    pub alpha_conj: u32,
    #[serde(with = "serde_rat")]
    pub beta_conj: Rat,
    #[serde(with = "serde_rat")]
    pub conj13_mu: Rat,
    /// Same shape as thm12_diff with (alpha', beta').
    #[serde(with = "serde_rat")]
    pub conj13_diff: Rat,
    /// 1 + e(n + alpha' + beta'), without the 1/p^(n+alpha') correction.
    #[serde(with = "serde_rat")]
    pub conj13_diff_as_stated: Rat,
    /// beta' replaced by beta'/p.
    #[serde(with = "serde_rat")]
    pub conj13_mu_strong: Rat,
    #[serde(with = "serde_rat")]
    pub conj13_diff_strong: Rat,
    #[serde(with = "serde_opt_rat", default)]
    pub s_min_relaxed: Option<Rat>,
    pub constants: BoundConstants,
    /// Which comparison each bound field stands for.
    pub relations: BTreeMap<String, String>,
}

/// (mu, diff) of the upper-numbering and different bounds for a given
/// decomposition x = p^alpha·beta and s = n + alpha.
pub fn thm12_values(p: u64, e: u64, n: u32, alpha: u32, beta: &Rat) -> (Rat, Rat) {
    let s = rint(n as u64 + alpha as u64);
    let er = rint(e);
    let inv = rat(1, p as i64 - 1);
    let mu = Rat::one() + &er * (&s + max_rat(beta, &inv));
    let diff = Rat::one() + &er * (&s + beta) - pow_rat(p, -(n as i64 + alpha as i64));
    (mu, diff)
}

pub fn ramification_report(p: u64, e: u64, n: u32, r: u32, n_exp: Option<u64>) -> Result<BoundReport> {
    let (n_exp, prov) = match n_exp {
        Some(k) => (k, NProvenance::Supplied),
        None => (e * r as u64 * n as u64, NProvenance::ClosedForm),
    };
    report_with(p, e, n, r, n_exp, prov, false)
}

/// Report with N brute-forced from E.
pub fn ramification_report_exact(e: &EisensteinPoly, n: u32, r: u32) -> Result<BoundReport> {
    let n_exp = exact_nilpotency_index(e, n, r)?;
    report_with(e.p(), e.degree() as u64, n, r, n_exp, NProvenance::Exact, false)
}

pub fn report_with(
    p: u64,
    e: u64,
    n: u32,
    r: u32,
    n_exp: u64,
    provenance: NProvenance,
    relaxed: bool,
) -> Result<BoundReport> {
    let constants = bound_constants(p, e, n, r, n_exp, relaxed)?;
    let pm1 = rint(p - 1);
    let pn = pow_rat(p, n as i64);
    let ern = rint(e * r as u64 * n as u64);
    let thm11_mu = &ern * &pn / &pm1;
    // s > n + log_p(nr/(p−1))
    let thm11_min_s = min_integer_strictly_above(p, &(rint(n as u64 * r as u64) / &pm1), n as i64)?;
    let cor39_mu = rint(n_exp) * &pn / &pm1;
    let (thm12_mu, thm12_diff) = thm12_values(p, e, n, constants.alpha, &constants.beta);
    let (alpha_conj, beta_conj) = alpha_beta(&(rint(r) / &pm1), p)?;
    let (conj13_mu, conj13_diff) = thm12_values(p, e, n, alpha_conj, &beta_conj);
    let er = rint(e);
    let sc = rint(n as u64 + alpha_conj as u64);
    let conj13_diff_as_stated = Rat::one() + &er * (&sc + &beta_conj);
    let beta_weak = &beta_conj / rint(p);
    let conj13_mu_strong = Rat::one() + &er * (&sc + max_rat(&beta_weak, &rat(1, p as i64 - 1)));
    let conj13_diff_strong = Rat::one() + &er * (&sc + &beta_weak);
    let relations: BTreeMap<String, String> = [
        ("thm11_mu", "G_s^(mu) acts trivially for mu > value"),
        ("thm11_min_s", "least integer s in the admissible range"),
        ("cor39_mu", "G_s^(mu) acts trivially for mu > value"),
        ("cor39_min_s", "least integer s in the admissible range"),
        ("thm12_mu", "G^(mu) acts trivially for mu > value"),
        ("thm12_diff", "v_K(D_L/K) < value"),
        ("conj13_mu", "conjectural: mu > value"),
        ("conj13_diff", "conjectural: v_K(D_L/K) < value"),
        ("conj13_diff_as_stated", "conjectural: v_K(D_L/K) < value"),
        ("conj13_mu_strong", "question: mu > value"),
        ("conj13_diff_strong", "question: v_K(D_L/K) < value"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    Ok(BoundReport {
        p,
        e,
        n,
        r,
        n_exp,
        n_provenance: provenance,
        thm11_mu,
        thm11_min_s,
        cor39_mu,
        cor39_min_s: constants.s0a_int,
        alpha: constants.alpha,
        beta: constants.beta.clone(),
        thm12_mu,
        thm12_diff,
        alpha_conj,
        beta_conj,
        conj13_mu,
        conj13_diff,
        conj13_diff_as_stated,
        conj13_mu_strong,
        conj13_diff_strong,
        s_min_relaxed: constants.s_min_relaxed.map(rint),
        constants,
        relations,
    })
}

/// u^N reduced modulo E^r over ℤ, then tested for divisibility by p^n.
pub fn vanishes_by_division(e: &EisensteinPoly, n: u32, r: u32, n_exp: u64) -> bool {
    let z = Integers;
    let er = poly::pow(&z, e.coeffs(), r);
    let mut u = vec![BigInt::zero(); n_exp as usize + 1];
    u[n_exp as usize] = BigInt::one();
    let (_, rem) = poly::divide_by_monic(&z, &u, &er);
    let pn = num_traits::pow(BigInt::from(e.p()), n as usize);
    rem.iter().all(|c| (c % &pn).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eis(s: &str, p: u64) -> EisensteinPoly {
        EisensteinPoly::parse(s, p).unwrap()
    }

    #[test]
    fn nilpotency_examples() {
        assert_eq!(exact_nilpotency_index(&eis("3,1", 3), 2, 2).unwrap(), 3);
        assert_eq!(exact_nilpotency_index(&eis("3,1", 3), 2, 1).unwrap(), 2);
        for (g, e) in [("3,1", 1), ("-3,0,1", 2), ("3,3,0,1", 3)] {
            for r in 1..4 {
                assert_eq!(exact_nilpotency_index(&eis(g, 3), 1, r).unwrap(), e * r as u64);
            }
        }
    }

    #[test]
    fn closed_forms() {
        let b = closed_form_n_bounds(&eis("3,1", 3), 2, 2).unwrap();
        assert_eq!((b.ern, b.ceil_bound, b.uep_bound, b.general_bound), (4, 3, Some(3), 3));
        let b = closed_form_n_bounds(&eis("-3,0,1", 3), 1, 1).unwrap();
        assert_eq!(b.ern, 2);
        assert_eq!(exact_nilpotency_index(&eis("-3,0,1", 3), 1, 1).unwrap(), 2);
        let b = closed_form_n_bounds(&eis("3,3,1", 3), 2, 2).unwrap();
        assert_eq!(b.uep_bound, None);
    }

    fn different_oracle(e: &EisensteinPoly) -> Rat {
        // terms i·a_i·π^(i−1) have pairwise distinct fractional valuations
        let deg = e.degree() as i64;
        let p = e.p();
        e.coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(|(i, a)| {
                let c = a * BigInt::from(i);
                crate::ring::vp_int(p, &c).map(|v| rint(v) + rat(i as i64 - 1, deg))
            })
            .min()
            .unwrap()
    }

    #[test]
    fn different_examples() {
        assert_eq!(different_valuation(&eis("3,1", 3)).unwrap(), rint(0));
        assert_eq!(different_valuation(&eis("-3,0,1", 3)).unwrap(), rat(1, 2));
        assert_eq!(different_valuation(&eis("-3,0,0,1", 3)).unwrap(), rat(5, 3));
        for g in ["3,3,1", "6,0,9,1", "5,10,0,0,1", "-5,0,0,0,0,1", "15,5,5,1"] {
            let p = if g.starts_with('3') || g.starts_with('6') { 3 } else { 5 };
            let e = eis(g, p);
            assert_eq!(different_valuation(&e).unwrap(), different_oracle(&e), "{g}");
        }
    }

    #[test]
    fn alpha_beta_examples() {
        assert_eq!(alpha_beta(&rat(1, 2), 3).unwrap(), (0, rat(1, 2)));
        assert_eq!(alpha_beta(&rint(2), 3).unwrap(), (1, rat(2, 3)));
        assert_eq!(alpha_beta(&rint(1), 3).unwrap(), (0, rint(1)));
        assert_eq!(alpha_beta(&rint(9), 3).unwrap(), (2, rint(1)));
        assert!(alpha_beta(&rat(1, 3), 3).is_err());
    }

    #[test]
    fn constants_examples() {
        let c = bound_constants(3, 1, 1, 1, 1, false).unwrap();
        assert_eq!((c.b.clone(), c.a.clone()), (rat(1, 2), rat(3, 2)));
        assert_eq!((c.s_min_int, c.s0a_int), (1, 1));
        let c = bound_constants(3, 1, 2, 2, 3, false).unwrap();
        assert_eq!(c.s_min_int, 3);
        let c = bound_constants(3, 1, 2, 2, 4, false).unwrap();
        assert_eq!((c.alpha, c.beta), (1, rat(2, 3)));
        assert!(bound_constants(3, 2, 1, 1, 1, false).is_err());
        // relaxed threshold: a = 3/2·N with N = 4 gives a = 6 ≥ 2
        let c = bound_constants(3, 1, 2, 2, 4, true).unwrap();
        // s_1(5) = 1 + log_3(10/3): least s with 3^(s−1) > 10/3 is 3
        assert_eq!(c.s_min_relaxed, Some(3));
        assert!(c.s_min_relaxed.unwrap() <= c.s_min_int);
        assert!(bound_constants(3, 1, 1, 1, 1, false).unwrap().s_min_relaxed.is_none());
    }

    #[test]
    fn report_examples() {
        let r = ramification_report(3, 1, 1, 1, None).unwrap();
        assert_eq!(r.thm11_mu, rat(3, 2));
        assert_eq!(r.thm12_mu, rat(5, 2));
        assert_eq!(r.thm12_diff, rat(13, 6));
        assert_eq!(r.conj13_mu, rat(5, 2));
        assert_eq!(r.conj13_diff, r.thm12_diff);
        assert_eq!(r.conj13_diff_as_stated, rat(5, 2));
        let r = ramification_report(3, 1, 2, 2, None).unwrap();
        assert_eq!((r.alpha, r.beta.clone()), (1, rat(2, 3)));
        assert_eq!(r.thm12_mu, rat(14, 3));
        assert_eq!(r.thm12_diff, rat(125, 27));
        let sharp = ramification_report(3, 1, 2, 2, Some(3)).unwrap();
        assert_eq!(sharp.cor39_mu, rat(27, 2));
        assert_eq!(r.cor39_mu, rint(18));
        assert!(sharp.cor39_mu < r.cor39_mu);
        let ex = ramification_report_exact(&eis("3,1", 3), 2, 2).unwrap();
        assert_eq!((ex.n_exp, ex.n_provenance), (3, NProvenance::Exact));
    }

    #[test]
    fn report_round_trips() {
        let r = ramification_report(5, 2, 3, 2, Some(9)).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"thm12_diff\""));
        let back: BoundReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    fn grid_polys(p: u64) -> Vec<EisensteinPoly> {
        let ps = p as i64;
        let mut v = Vec::new();
        for e in 1..=3usize {
            v.push(EisensteinPoly::pure(p, e, 1).unwrap());
            v.push(EisensteinPoly::pure(p, e, -1).unwrap());
        }
        v.push(eis(&format!("{ps},{ps},1"), p));
        v.push(eis(&format!("{},{},{},1", 2 * ps, ps * ps, ps), p));
        v
    }

    #[test]
    fn exact_below_closed_forms_on_grid() {
        for p in [3u64, 5] {
            for g in grid_polys(p) {
                for n in 1..=3 {
                    for r in 1..=3 {
                        let exact = exact_nilpotency_index(&g, n, r).unwrap();
                        let cf = closed_form_n_bounds(&g, n, r).unwrap();
                        assert!(exact <= cf.min(), "{g} n={n} r={r}: {exact} vs {cf:?}");
                        assert!(vanishes_by_division(&g, n, r, exact));
                        assert!(!vanishes_by_division(&g, n, r, exact - 1));
                        if n == 1 {
                            assert_eq!(exact, g.degree() as u64 * r as u64);
                        }
                        for b in [Some(cf.ern), Some(cf.ceil_bound), cf.uep_bound, Some(cf.general_bound)]
                            .into_iter()
                            .flatten()
                        {
                            assert!(vanishes_by_division(&g, n, r, b));
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn alpha_beta_decomposes(num in 1i64..2000, den in 1i64..50, pi in 0usize..3) {
            let p = [3u64, 5, 7][pi];
            let x = rat(num, den);
            prop_assume!(x > rat(1, p as i64));
            let (alpha, beta) = alpha_beta(&x, p).unwrap();
            prop_assert!(beta > rat(1, p as i64) && beta <= rint(1));
            prop_assert_eq!(pow_rat(p, alpha as i64) * beta, x);
        }

        #[test]
        fn constants_consistent(pi in 0usize..3, e in 1u64..4, n in 1u32..4, r in 1u32..4, extra in 0u64..20) {
            let p = [3u64, 5, 7][pi];
            let n_exp = e * r as u64 + extra;
            let c = bound_constants(p, e, n, r, n_exp, false).unwrap();
            prop_assert_eq!(&c.a, &(&c.b + rint(n_exp)));
            prop_assert_eq!(c.s_min_int, c.s2b_int);
            prop_assert!(c.s0a_int >= c.s_min_int);
            // minimality: e·p^(s−n+1) > N at s_min_int, not at s_min_int − 1
            let lhs = |s: i64| rint(e) * pow_rat(p, s - n as i64 + 1);
            prop_assert!(lhs(c.s_min_int) > rint(n_exp));
            prop_assert!(lhs(c.s_min_int - 1) <= rint(n_exp));
            prop_assert_eq!(
                pow_rat(p, c.alpha as i64) * &c.beta,
                rint(n_exp) / rint(e * (p - 1))
            );
        }

        #[test]
        fn conjectural_bounds_are_smaller(pi in 0usize..3, e in 1u64..4, n in 1u32..5, r in 1u32..6) {
            let p = [3u64, 5, 7][pi];
            let rep = ramification_report(p, e, n, r, None).unwrap();
            prop_assert!(rep.conj13_mu <= rep.thm12_mu);
            prop_assert!(rep.conj13_diff <= rep.thm12_diff);
            let up_n = ramification_report(p, e, n + 1, r, None).unwrap();
            let up_r = ramification_report(p, e, n, r + 1, None).unwrap();
            prop_assert!(rep.thm12_mu <= up_n.thm12_mu);
            prop_assert!(rep.thm12_mu <= up_r.thm12_mu);
        }
    }
}
