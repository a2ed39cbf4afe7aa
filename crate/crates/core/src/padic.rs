//! Integers mod p^M, Eisenstein polynomials and the quotient rings W_n[u]/E(u)^r.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rat::Rat;
use crate::ring::{is_prime, poly, vp_int, MonicQuotient, Ring, ZModPk};

pub fn check_odd_prime(p: u64) -> Result<()> {
    if p > 2 && is_prime(p) {
        Ok(())
    } else {
        invalid(format!("p = {p} is not an odd prime"))
    }
}

/// An integer mod p^M carried together with its base.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdicTrunc {
    p: u64,
    m: u32,
    value: BigInt,
}

impl PAdicTrunc {
    pub fn new(p: u64, m: u32, value: impl Into<BigInt>) -> Result<Self> {
        check_odd_prime(p)?;
        if m == 0 {
            return invalid("precision exponent must be >= 1");
        }
        let modulus = num_traits::pow(BigInt::from(p), m as usize);
        Ok(PAdicTrunc {
            p,
            m,
            value: value.into().mod_floor(&modulus),
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.m
    }

    pub fn value(&self) -> &BigInt {
        &self.value
    }

    pub fn ring(&self) -> ZModPk {
        ZModPk::new(self.p, self.m).expect("validated on construction")
    }

    fn same_base(&self, other: &Self) -> Result<ZModPk> {
        if self.p != other.p || self.m != other.m {
            return Err(Error::BaseMismatch(format!(
                "Z/{}^{} vs Z/{}^{}",
                self.p, self.m, other.p, other.m
            )));
        }
        Ok(self.ring())
    }

    fn with(&self, value: BigInt) -> Self {
        PAdicTrunc {
            p: self.p,
            m: self.m,
            value,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let r = self.same_base(other)?;
        Ok(self.with(r.add(&self.value, &other.value)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let r = self.same_base(other)?;
        Ok(self.with(r.sub(&self.value, &other.value)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let r = self.same_base(other)?;
        Ok(self.with(r.mul(&self.value, &other.value)))
    }

    pub fn neg(&self) -> Self {
        self.with(self.ring().neg(&self.value))
    }

    pub fn inv(&self) -> Result<Self> {
        self.ring()
            .inv(&self.value)
            .map(|v| self.with(v))
            .ok_or_else(|| Error::NotUnit(format!("{} mod {}^{}", self.value, self.p, self.m)))
    }

    /// v_p, or `None` if the value is zero at this precision.
    pub fn valuation(&self) -> Option<u32> {
        vp_int(self.p, &self.value)
    }
}

impl fmt::Display for PAdicTrunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}^{}", self.value, self.p, self.m)
    }
}

/// Parses "a0,a1,...,ak" (ascending degree).
pub fn parse_poly(s: &str) -> Result<Vec<BigInt>> {
    let s = s.trim();
    if s.is_empty() {
        return invalid("empty polynomial");
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::InvalidInput(format!("bad coefficient {t:?}")))
        })
        .collect()
}

pub fn format_poly(c: &[BigInt]) -> String {
    if c.is_empty() {
        return "0".into();
    }
    c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// A validated Eisenstein polynomial over ℤ_p.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EisensteinPoly {
    p: u64,
    #[serde(with = "coeffs_serde")]
    coeffs: Vec<BigInt>,
}

mod coeffs_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_poly(c))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigInt>, D::Error> {
        let s = String::deserialize(d)?;
        parse_poly(&s).map_err(serde::de::Error::custom)
    }
}

impl EisensteinPoly {
    pub fn new(coeffs: Vec<BigInt>, p: u64) -> Result<Self> {
        check_odd_prime(p)?;
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return invalid("Eisenstein polynomial must have degree >= 1");
        }
        if !coeffs.last().unwrap().is_one() {
            return invalid("Eisenstein polynomial must be monic");
        }
        let e = coeffs.len() - 1;
        for (i, c) in coeffs[..e].iter().enumerate() {
            if vp_int(p, c) == Some(0) {
                return invalid(format!("coefficient a_{i} = {c} is a p-adic unit"));
            }
        }
        if vp_int(p, &coeffs[0]) != Some(1) {
            return invalid(format!("constant term {} must have valuation exactly 1", coeffs[0]));
        }
        Ok(EisensteinPoly { p, coeffs })
    }

    pub fn parse(s: &str, p: u64) -> Result<Self> {
        EisensteinPoly::new(parse_poly(s)?, p)
    }

    /// u^e + sign·p.
    pub fn pure(p: u64, e: usize, sign: i64) -> Result<Self> {
        let mut c = vec![BigInt::zero(); e + 1];
        c[0] = BigInt::from(sign) * BigInt::from(p);
        c[e] = BigInt::one();
        EisensteinPoly::new(c, p)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Some(sign) when E = u^e + sign·p.
    pub fn pure_sign(&self) -> Option<i64> {
        let e = self.degree();
        if self.coeffs[1..e].iter().any(|c| !c.is_zero()) {
            return None;
        }
        let p = BigInt::from(self.p);
        if self.coeffs[0] == p {
            Some(1)
        } else if self.coeffs[0] == -p {
            Some(-1)
        } else {
            None
        }
    }

    pub fn reduced(&self, ring: &ZModPk) -> Vec<BigInt> {
        self.coeffs.iter().map(|c| ring.from_int(c)).collect()
    }
}

impl fmt::Display for EisensteinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_poly(&self.coeffs))
    }
}

pub fn eisenstein_validate(g: &[BigInt], p: u64) -> Result<EisensteinPoly> {
    EisensteinPoly::new(g.to_vec(), p)
}

/// W_n[u]/E(u)^r with W_n = ℤ/p^n.
pub type QuotRing = MonicQuotient<ZModPk>;

pub fn quot_ring(e: &EisensteinPoly, n: u32, r: u32) -> Result<QuotRing> {
    let base = ZModPk::new(e.p(), n)?;
    let er = poly::pow(&base, &e.reduced(&base), r);
    MonicQuotient::new(base, er)
}

/// Long division by a monic polynomial over ℤ/p^n.
pub fn divide_by_monic(
    a: &[BigInt],
    d: &[BigInt],
    p: u64,
    n: u32,
) -> Result<(Vec<BigInt>, Vec<BigInt>)> {
    let r = ZModPk::new(p, n)?;
    let a: Vec<BigInt> = a.iter().map(|c| r.from_int(c)).collect();
    let d = poly::trim(&r, d.iter().map(|c| r.from_int(c)).collect());
    if d.last().is_none_or(|c| !c.is_one()) {
        return invalid("divisor must be monic");
    }
    Ok(poly::divide_by_monic(&r, &a, &d))
}

/// Least integer s with p^(s - shift) > q, by exact comparison.
pub fn min_integer_strictly_above(p: u64, q: &Rat, shift: i64) -> Result<i64> {
    if !q.is_positive() {
        return invalid("threshold must be positive");
    }
    let pr = Rat::from_integer(BigInt::from(p));
    let mut k: i64 = 0;
    let mut pk = Rat::one();
    if &pk > q {
        while &pk / &pr > *q {
            pk = &pk / &pr;
            k -= 1;
        }
    } else {
        while &pk <= q {
            pk = &pk * &pr;
            k += 1;
        }
    }
    Ok(k + shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn padic_trunc_examples() {
        let a = PAdicTrunc::new(3, 2, 4).unwrap();
        let b = PAdicTrunc::new(3, 2, 7).unwrap();
        assert_eq!(a.add(&b).unwrap().value(), &BigInt::from(2));
        assert_eq!(PAdicTrunc::new(3, 2, 2).unwrap().inv().unwrap().value(), &BigInt::from(5));
        assert!(PAdicTrunc::new(3, 2, 6).unwrap().inv().is_err());
        let c = PAdicTrunc::new(3, 3, 1).unwrap();
        assert!(matches!(a.add(&c), Err(Error::BaseMismatch(_))));
        assert!(PAdicTrunc::new(2, 3, 1).is_err());
    }

    #[test]
    fn eisenstein_examples() {
        assert_eq!(EisensteinPoly::parse("3,1", 3).unwrap().degree(), 1);
        assert_eq!(EisensteinPoly::parse("-3,0,1", 3).unwrap().degree(), 2);
        assert!(EisensteinPoly::parse("-3,-1,1", 3).is_err());
        assert!(EisensteinPoly::parse("9,1", 3).is_err());
        assert!(EisensteinPoly::parse("3,2", 3).is_err());
        assert_eq!(EisensteinPoly::parse("3,0,1", 3).unwrap().pure_sign(), Some(1));
        assert_eq!(EisensteinPoly::parse("3,3,1", 3).unwrap().pure_sign(), None);
    }

    #[test]
    fn quotient_example() {
        let e = EisensteinPoly::parse("3,1", 3).unwrap();
        let q = quot_ring(&e, 2, 1).unwrap();
        let u = q.gen();
        assert!(q.is_zero(&q.mul(&u, &u)));
        assert!(!q.is_zero(&u));
    }

    #[test]
    fn division_examples() {
        let (q, r) = divide_by_monic(&bi(&[0, 0, 1]), &bi(&[3, 1]), 3, 2).unwrap();
        assert_eq!(q, bi(&[6, 1]));
        assert!(r.is_empty());
        let (q, r) = divide_by_monic(&bi(&[0, 1]), &bi(&[3, 1]), 3, 2).unwrap();
        assert_eq!(q, bi(&[1]));
        assert_eq!(r, bi(&[6]));
        let e2 = bi(&[9, 6, 1]);
        let (q, r) = divide_by_monic(&e2, &e2, 3, 2).unwrap();
        assert_eq!(q, bi(&[1]));
        assert!(r.is_empty());
    }

    #[test]
    fn thresholds() {
        assert_eq!(min_integer_strictly_above(3, &rat(1, 2), 1).unwrap(), 1);
        assert_eq!(min_integer_strictly_above(3, &rat(1, 1), 0).unwrap(), 1);
        assert_eq!(min_integer_strictly_above(3, &rat(9, 1), 0).unwrap(), 3);
        assert_eq!(min_integer_strictly_above(3, &rat(1, 9), 0).unwrap(), -1);
        assert_eq!(min_integer_strictly_above(3, &rat(1, 10), 0).unwrap(), -2);
    }

    proptest! {
        #[test]
        fn division_round_trip(
            a in proptest::collection::vec(-500i64..500, 0..9),
            d in proptest::collection::vec(-500i64..500, 0..5),
            n in 1u32..4,
        ) {
            let r = ZModPk::new(3, n).unwrap();
            let mut dm = bi(&d);
            dm.push(BigInt::one());
            let (q, rem) = divide_by_monic(&bi(&a), &dm, 3, n).unwrap();
            prop_assert!(rem.len() < dm.len());
            let dmr: Vec<BigInt> = dm.iter().map(|c| r.from_int(c)).collect();
            let back = poly::add(&r, &poly::mul(&r, &q, &dmr), &rem);
            let ar = poly::trim(&r, bi(&a).iter().map(|c| r.from_int(c)).collect());
            prop_assert_eq!(back, ar);
        }

        #[test]
        fn threshold_is_minimal(num in 1i64..2000, den in 1i64..2000, shift in -3i64..4) {
            let q = rat(num, den);
            let s = min_integer_strictly_above(5, &q, shift).unwrap();
            prop_assert!(crate::rat::pow_rat(5, s - shift) > q);
            prop_assert!(crate::rat::pow_rat(5, s - 1 - shift) <= q);
        }
    }
}
