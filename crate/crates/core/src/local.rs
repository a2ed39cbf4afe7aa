//! Totally ramified extensions of ℚ_p presented by an Eisenstein polynomial,
//! truncated at p^M, with exact valuations.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::padic::EisensteinPoly;
use crate::rat::{floor_int, rint, Rat};
use crate::ring::{poly, vp_int, MonicQuotient, Ring, ZModPk};

/// A valuation in v_K units: exact, or only bounded below when the element
/// vanishes at the working precision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ValuationRepr", from = "ValuationRepr")]
pub enum Valuation {
    Exact(Rat),
    AtLeast(Rat),
}

#[derive(Serialize, Deserialize)]
struct ValuationRepr {
    exact: bool,
    #[serde(with = "crate::rat::serde_rat")]
    value: Rat,
}

impl From<Valuation> for ValuationRepr {
    fn from(v: Valuation) -> Self {
        match v {
            Valuation::Exact(value) => ValuationRepr { exact: true, value },
            Valuation::AtLeast(value) => ValuationRepr { exact: false, value },
        }
    }
}

impl From<ValuationRepr> for Valuation {
    fn from(r: ValuationRepr) -> Self {
        if r.exact {
            Valuation::Exact(r.value)
        } else {
            Valuation::AtLeast(r.value)
        }
    }
}

impl Valuation {
    pub fn exact(&self) -> Option<&Rat> {
        match self {
            Valuation::Exact(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }

    pub fn bound(&self) -> &Rat {
        match self {
            Valuation::Exact(v) | Valuation::AtLeast(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Valuation::Exact(_))
    }

    /// Decides `v > t` (or `v >= t`); `None` when a lower bound cannot settle it.
    pub fn exceeds(&self, t: &Rat, strict: bool) -> Option<bool> {
        match self {
            Valuation::Exact(v) => Some(if strict { v > t } else { v >= t }),
            Valuation::AtLeast(v) => {
                let clears = if strict { v > t } else { v >= t };
                if clears {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }
}

/// Coefficient vector of Σ a_i x^i, i < m, each a_i in [0, p^M).
pub type LocalElement = Vec<BigInt>;

pub trait Valued: Ring {
    fn valuation(&self, a: &Self::Elem) -> Valuation;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalFieldModel {
    g: EisensteinPoly,
    precision: u32,
    e_k: u64,
    ring: MonicQuotient<ZModPk>,
}

impl LocalFieldModel {
    /// `e_k` is the absolute ramification index of the base field K, so that
    /// valuations are reported with v_K(π_K) = 1.
    pub fn new(g: EisensteinPoly, precision: u32, e_k: u64) -> Result<Self> {
        if e_k == 0 {
            return invalid("normalization factor must be >= 1");
        }
        let base = ZModPk::new(g.p(), precision)?;
        let ring = MonicQuotient::new(base.clone(), g.reduced(&base))?;
        Ok(LocalFieldModel {
            g,
            precision,
            e_k,
            ring,
        })
    }

    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        LocalFieldModel::new(self.g.clone(), precision, self.e_k)
    }

    pub fn p(&self) -> u64 {
        self.g.p()
    }

    pub fn degree(&self) -> usize {
        self.g.degree()
    }

    pub fn generator(&self) -> &EisensteinPoly {
        &self.g
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn e_k(&self) -> u64 {
        self.e_k
    }

    pub fn coeff_ring(&self) -> &ZModPk {
        &self.ring.base
    }

    /// v_K of the uniformizer x.
    pub fn unit_step(&self) -> Rat {
        Rat::new(BigInt::from(self.e_k), BigInt::from(self.degree()))
    }

    /// Reduces an arbitrary integer polynomial in x into the model.
    pub fn element(&self, coeffs: &[BigInt]) -> LocalElement {
        let c: Vec<BigInt> = coeffs.iter().map(|a| self.ring.base.from_int(a)).collect();
        self.ring.reduce(&c)
    }

    pub fn x(&self) -> LocalElement {
        self.ring.gen()
    }

    /// p^k x^j.
    pub fn monomial(&self, k: u32, j: usize) -> LocalElement {
        let mut c = vec![BigInt::zero(); j + 1];
        c[j] = num_traits::pow(BigInt::from(self.p()), k as usize);
        self.element(&c)
    }

    /// Re-expresses an element at a lower precision of this same field.
    pub fn reduce_from(&self, a: &LocalElement) -> LocalElement {
        a.iter().map(|c| self.ring.base.from_int(c)).collect()
    }

    /// v_p-valuation scaled by m: min_i (m·v_p(a_i) + i), `None` for zero.
    pub fn scaled_valuation(&self, a: &LocalElement) -> Option<u64> {
        let m = self.degree() as u64;
        a.iter()
            .enumerate()
            .filter_map(|(i, c)| vp_int(self.p(), c).map(|v| m * v as u64 + i as u64))
            .min()
    }

    pub fn is_unit(&self, a: &LocalElement) -> bool {
        self.ring.base.is_unit(&a[0])
    }

    /// Inverse of a unit by Newton iteration y ← y(2 − a·y).
    pub fn inv(&self, a: &LocalElement) -> Result<LocalElement> {
        let a0inv = self
            .ring
            .base
            .inv(&a[0])
            .ok_or_else(|| Error::NotUnit(format!("{a:?}")))?;
        let mut y = self.element(&[a0inv]);
        let two = self.from_i64(2);
        let one = self.one();
        let mut steps = 0u32;
        let limit = 2 * (64 - ((self.precision as u64) * self.degree() as u64).leading_zeros()) + 4;
        while self.mul(a, &y) != one {
            y = self.mul(&y, &self.sub(&two, &self.mul(a, &y)));
            steps += 1;
            if steps > limit {
                return Err(Error::Precision("Newton inversion did not settle".into()));
            }
        }
        Ok(y)
    }

    /// Division by the uniformizer; the top x-digit of the result is only
    /// known modulo the lost precision.
    pub fn div_by_x(&self, a: &LocalElement) -> Result<LocalElement> {
        let p = BigInt::from(self.p());
        if !a[0].is_multiple_of(&p) {
            return Err(Error::NotUnit(
                "element is not divisible by the uniformizer".into(),
            ));
        }
        let m = self.degree();
        let g = self.g.coeffs();
        let b = &a[0] / &p;
        let g0 = &g[0] / &p;
        let g0inv = self
            .ring
            .base
            .inv(&g0)
            .expect("Eisenstein constant term has valuation one");
        let factor = self.ring.base.mul(&self.ring.base.from_int(&b), &g0inv);
        let mut out: Vec<BigInt> = a[1..].to_vec();
        out.push(BigInt::zero());
        for j in 0..m {
            let gj = if j + 1 < m { g[j + 1].clone() } else { BigInt::one() };
            let t = self.ring.base.mul(&factor, &self.ring.base.from_int(&gj));
            out[j] = self.ring.base.sub(&out[j], &t);
        }
        Ok(out)
    }

    /// Exact quotient a/b for b ≠ 0, when v(a) ≥ v(b).
    pub fn div_exact(&self, a: &LocalElement, b: &LocalElement) -> Result<LocalElement> {
        let lb = self
            .scaled_valuation(b)
            .ok_or_else(|| Error::Precision("division by an element vanishing at precision".into()))?;
        let mut w = b.clone();
        let mut q = a.clone();
        for _ in 0..lb {
            w = self.div_by_x(&w)?;
            q = self.div_by_x(&q).map_err(|_| {
                Error::NotUnit("dividend valuation below divisor valuation".into())
            })?;
        }
        Ok(self.mul(&q, &self.inv(&w)?))
    }

    /// Number of p-adic digits kept for x^j modulo 𝔞^{>t}: #{k ≥ 0 : (k + j/m)·e_K ≤ t}.
    pub fn digit_layout_gt(&self, t: &Rat) -> Vec<u32> {
        let m = self.degree();
        let tp = t / rint(self.e_k);
        (0..m)
            .map(|j| {
                let room = &tp - Rat::new(BigInt::from(j), BigInt::from(m));
                if room < Rat::zero() {
                    0
                } else {
                    let k = floor_int(&room).to_u64().unwrap_or(u64::MAX);
                    (k.saturating_add(1)).min(self.precision as u64) as u32
                }
            })
            .collect()
    }

    /// Canonical representative of the class of `a` in 𝒪_E/𝔞^{>t}.
    pub fn reduce_gt(&self, a: &LocalElement, t: &Rat) -> LocalElement {
        let layout = self.digit_layout_gt(t);
        a.iter()
            .zip(layout)
            .map(|(c, k)| c.mod_floor(&num_traits::pow(BigInt::from(self.p()), k as usize)))
            .collect()
    }

    /// log_p of the number of classes in 𝒪_E/𝔞^{>t}.
    pub fn class_count_log_gt(&self, t: &Rat) -> u64 {
        self.digit_layout_gt(t).iter().map(|&k| k as u64).sum()
    }

    /// All canonical representatives of 𝒪_E/𝔞^{>t}.
    pub fn classes_gt(&self, t: &Rat) -> Vec<LocalElement> {
        let layout = self.digit_layout_gt(t);
        let mut out = vec![Vec::<BigInt>::new()];
        for k in layout {
            let size = num_traits::pow(BigInt::from(self.p()), k as usize);
            let size = size.to_u64().expect("class count checked by caller");
            let mut next = Vec::with_capacity(out.len() * size as usize);
            for prefix in &out {
                for c in 0..size {
                    let mut v = prefix.clone();
                    v.push(BigInt::from(c));
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    /// Finds π_s = ±x^k with E(π_s^{p^s}) = 0 in the model.
    pub fn find_pi_s(&self, e: &EisensteinPoly, s: u32) -> Result<LocalElement> {
        let m = self.degree() as u64;
        let ps = e.p().pow(s);
        let denom = e.degree() as u64 * ps;
        if e.p() != self.p() || !m.is_multiple_of(denom) {
            return invalid(format!(
                "model of degree {m} cannot contain a root of E of level s = {s}"
            ));
        }
        let k = (m / denom) as usize;
        let ec: Vec<BigInt> = e.reduced(self.coeff_ring());
        for sign in [1i64, -1] {
            let mut c = vec![BigInt::zero(); k + 1];
            c[k] = BigInt::from(sign);
            let y = self.element(&c);
            let pi = self.pow(&y, ps);
            let val = ec
                .iter()
                .rev()
                .fold(self.zero(), |acc, a| self.add(&self.mul(&acc, &pi), &self.element(std::slice::from_ref(a))));
            if self.is_zero(&val) {
                return Ok(y);
            }
        }
        invalid(format!(
            "no element ±x^{k} of the model is a p^{s}-th root of a root of E"
        ))
    }

    /// Evaluates an integer polynomial at a model element.
    pub fn eval_poly(&self, f: &[BigInt], y: &LocalElement) -> LocalElement {
        let coeffs: Vec<LocalElement> = f.iter().map(|c| self.element(std::slice::from_ref(c))).collect();
        poly::eval(self, &coeffs, y)
    }
}

impl Ring for LocalFieldModel {
    type Elem = LocalElement;
    fn zero(&self) -> LocalElement {
        self.ring.zero()
    }
    fn one(&self) -> LocalElement {
        self.ring.one()
    }
    fn from_int(&self, n: &BigInt) -> LocalElement {
        self.ring.from_int(n)
    }
    fn add(&self, a: &LocalElement, b: &LocalElement) -> LocalElement {
        self.ring.add(a, b)
    }
    fn neg(&self, a: &LocalElement) -> LocalElement {
        self.ring.neg(a)
    }
    fn sub(&self, a: &LocalElement, b: &LocalElement) -> LocalElement {
        self.ring.sub(a, b)
    }
    fn mul(&self, a: &LocalElement, b: &LocalElement) -> LocalElement {
        self.ring.mul(a, b)
    }
    fn characteristic(&self) -> BigInt {
        self.ring.characteristic()
    }
}

impl Valued for LocalFieldModel {
    fn valuation(&self, a: &LocalElement) -> Valuation {
        let m = self.degree() as i64;
        match self.scaled_valuation(a) {
            Some(v) => Valuation::Exact(Rat::new(
                BigInt::from(v) * BigInt::from(self.e_k),
                BigInt::from(m),
            )),
            None => Valuation::AtLeast(rint(self.precision as u64 * self.e_k)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn model(g: &str, m: u32) -> LocalFieldModel {
        LocalFieldModel::new(EisensteinPoly::parse(g, 3).unwrap(), m, 1).unwrap()
    }

    #[test]
    fn valuation_examples() {
        let k = model("3,0,0,1", 6);
        assert_eq!(k.valuation(&k.x()), Valuation::Exact(rat(1, 3)));
        let y = k.element(&[0.into(), 0.into(), 3.into()]);
        assert_eq!(k.valuation(&y), Valuation::Exact(rat(5, 3)));
        let k4 = model("3,0,0,1", 4);
        assert_eq!(k4.valuation(&k4.zero()), Valuation::AtLeast(rint(4)));
    }

    #[test]
    fn powers_of_uniformizer() {
        let k = model("3,0,0,0,0,0,1", 5);
        let x = k.x();
        for i in 0..30u64 {
            assert_eq!(k.valuation(&k.pow(&x, i)), Valuation::Exact(rat(i as i64, 6)));
        }
        assert!(!k.valuation(&k.pow(&x, 30)).is_exact());
    }

    #[test]
    fn inverse_and_division() {
        let k = model("-3,3,0,1", 6);
        let u = k.element(&[2.into(), 5.into(), 7.into()]);
        let ui = k.inv(&u).unwrap();
        assert_eq!(k.mul(&u, &ui), k.one());
        assert!(k.inv(&k.x()).is_err());
        let x = k.x();
        let y = k.mul(&u, &k.pow(&x, 4));
        let q = k.div_exact(&y, &k.pow(&x, 3)).unwrap();
        let expect = k.mul(&u, &x);
        // three divisions lose 3/m of precision
        let coarse = k.with_precision(5).unwrap();
        assert_eq!(coarse.reduce_from(&q), coarse.reduce_from(&expect));
    }

    #[test]
    fn class_layouts() {
        let k6 = model("3,0,0,0,0,0,1", 6);
        assert_eq!(k6.class_count_log_gt(&rat(1, 2)), 4);
        assert_eq!(k6.classes_gt(&rat(1, 2)).len(), 81);
        assert_eq!(k6.class_count_log_gt(&rat(1, 6)), 2);
        let k3 = model("3,0,0,1", 6);
        assert_eq!(k3.class_count_log_gt(&rat(1, 2)), 2);
        assert_eq!(k3.class_count_log_gt(&rat(0, 1)), 1);
    }

    #[test]
    fn kummer_roots() {
        let e = EisensteinPoly::parse("3,1", 3).unwrap();
        let k6 = model("3,0,0,0,0,0,1", 6);
        assert_eq!(k6.find_pi_s(&e, 1).unwrap(), k6.pow(&k6.x(), 2));
        let k3 = model("3,0,0,1", 6);
        assert_eq!(k3.find_pi_s(&e, 1).unwrap(), k3.x());
        assert!(k3.find_pi_s(&e, 2).is_err());
    }

    proptest! {
        #[test]
        fn valuation_is_additive(
            a in proptest::collection::vec(0i64..729, 6),
            b in proptest::collection::vec(0i64..729, 6),
            i in 0u64..8, j in 0u64..8,
        ) {
            let k = model("3,0,-3,0,0,0,1", 8);
            let mut a: Vec<BigInt> = a.into_iter().map(BigInt::from).collect();
            let mut b: Vec<BigInt> = b.into_iter().map(BigInt::from).collect();
            if a[0].is_multiple_of(&BigInt::from(3)) { a[0] += 1; }
            if b[0].is_multiple_of(&BigInt::from(3)) { b[0] += 1; }
            let x = k.x();
            let u = k.mul(&k.element(&a), &k.pow(&x, i));
            let w = k.mul(&k.element(&b), &k.pow(&x, j));
            let vu = k.valuation(&u).exact().cloned().unwrap();
            let vw = k.valuation(&w).exact().cloned().unwrap();
            prop_assert_eq!(vu.clone(), rat(i as i64, 6));
            prop_assert_eq!(k.valuation(&k.mul(&u, &w)), Valuation::Exact(vu + vw));
        }

        #[test]
        fn ring_axioms(
            a in proptest::collection::vec(0i64..10000, 3),
            b in proptest::collection::vec(0i64..10000, 3),
            c in proptest::collection::vec(0i64..10000, 3),
        ) {
            let k = model("3,0,0,1", 5);
            let f = |v: Vec<i64>| k.element(&v.into_iter().map(BigInt::from).collect::<Vec<_>>());
            let (a, b, c) = (f(a), f(b), f(c));
            prop_assert_eq!(k.mul(&k.mul(&a, &b), &c), k.mul(&a, &k.mul(&b, &c)));
            prop_assert_eq!(k.mul(&a, &k.add(&b, &c)), k.add(&k.mul(&a, &b), &k.mul(&a, &c)));
            prop_assert_eq!(k.add(&a, &b), k.add(&b, &a));
        }
    }
}
