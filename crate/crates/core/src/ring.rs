//! Ring contexts: a ring is a value that knows how to operate on its elements.
//!
//! Elements are plain data (`BigInt`, coefficient vectors, ...) so that the same
//! Witt-vector and matrix code runs over every coefficient ring in the crate.

use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

#[allow(clippy::wrong_self_convention)]
pub trait Ring: Clone + Debug + Send + Sync {
    type Elem: Clone + Eq + Hash + Ord + Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_int(&self, n: &BigInt) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// 0 for rings of characteristic zero.
    fn characteristic(&self) -> BigInt;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn is_zero(&self, a: &Self::Elem) -> bool {
        *a == self.zero()
    }

    fn from_i64(&self, n: i64) -> Self::Elem {
        self.from_int(&BigInt::from(n))
    }

    fn pow(&self, a: &Self::Elem, e: u64) -> Self::Elem {
        let mut result = self.one();
        let mut base = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    fn pow_big(&self, a: &Self::Elem, e: &BigUint) -> Self::Elem {
        let mut result = self.one();
        for bit in (0..e.bits()).rev() {
            result = self.mul(&result, &result);
            if e.bit(bit) {
                result = self.mul(&result, a);
            }
        }
        result
    }

    fn sum<'a, I>(&self, items: I) -> Self::Elem
    where
        I: IntoIterator<Item = &'a Self::Elem>,
        Self::Elem: 'a,
    {
        items
            .into_iter()
            .fold(self.zero(), |acc, x| self.add(&acc, x))
    }
}

pub trait Field: Ring {
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
}

/// The integers, used as the oracle ring for Witt-vector identities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Integers;

impl Ring for Integers {
    type Elem = BigInt;
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn from_int(&self, n: &BigInt) -> BigInt {
        n.clone()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn characteristic(&self) -> BigInt {
        BigInt::zero()
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// p-adic valuation of a nonzero integer.
pub fn vp_int(p: u64, n: &BigInt) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while n.is_multiple_of(&p) {
        n /= &p;
        v += 1;
    }
    Some(v)
}

/// ℤ/p^k with canonical representatives in [0, p^k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZModPk {
    p: u64,
    k: u32,
    modulus: BigInt,
}

impl ZModPk {
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return invalid(format!("{p} is not prime"));
        }
        if k == 0 {
            return invalid("precision exponent must be >= 1");
        }
        Ok(ZModPk {
            p,
            k,
            modulus: num_traits::pow(BigInt::from(p), k as usize),
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn reduce(&self, a: &BigInt) -> BigInt {
        a.mod_floor(&self.modulus)
    }

    pub fn is_unit(&self, a: &BigInt) -> bool {
        !a.is_multiple_of(&BigInt::from(self.p))
    }

    pub fn inv(&self, a: &BigInt) -> Option<BigInt> {
        let a = self.reduce(a);
        let g = a.extended_gcd(&self.modulus);
        if g.gcd.is_one() {
            Some(self.reduce(&g.x))
        } else {
            None
        }
    }

    /// v_p of a representative, `None` when it is zero mod p^k.
    pub fn valuation(&self, a: &BigInt) -> Option<u32> {
        vp_int(self.p, &self.reduce(a))
    }
}

impl Ring for ZModPk {
    type Elem = BigInt;
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        self.reduce(&BigInt::one())
    }
    fn from_int(&self, n: &BigInt) -> BigInt {
        self.reduce(n)
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        let s = a + b;
        if s >= self.modulus {
            s - &self.modulus
        } else {
            s
        }
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        if a.is_zero() {
            a.clone()
        } else {
            &self.modulus - a
        }
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) % &self.modulus
    }
    fn characteristic(&self) -> BigInt {
        self.modulus.clone()
    }
}

/// The prime field 𝔽_p with small-integer elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return invalid(format!("{p} is not prime"));
        }
        Ok(PrimeField { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

impl Ring for PrimeField {
    type Elem = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_int(&self, n: &BigInt) -> u64 {
        n.mod_floor(&BigInt::from(self.p)).to_u64().unwrap()
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.p - a) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }
    fn characteristic(&self) -> BigInt {
        BigInt::from(self.p)
    }
}

impl Field for PrimeField {
    fn inv(&self, a: &u64) -> Option<u64> {
        if (*a).is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }
}

/// 𝔽_{p^d} presented as 𝔽_p[X]/(f) for an explicit monic irreducible f.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteField {
    base: PrimeField,
    d: usize,
    /// Monic, ascending coefficients, length d + 1.
    modulus: Vec<u64>,
}

impl FiniteField {
    /// Uses the lexicographically first monic irreducible of degree `d`.
    pub fn new(p: u64, d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("extension degree must be >= 1");
        }
        let base = PrimeField::new(p)?;
        let total = (p as u128).pow(d as u32);
        for idx in 0..total {
            let mut f = digits(idx, p, d);
            f.push(1);
            if is_irreducible(&base, &f) {
                return Ok(FiniteField { base, d, modulus: f });
            }
        }
        unreachable!("irreducible polynomials exist in every degree")
    }

    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Self> {
        let base = PrimeField::new(p)?;
        if modulus.len() < 2 || *modulus.last().unwrap() != 1 {
            return invalid("field modulus must be monic of degree >= 1");
        }
        if modulus.iter().any(|&c| c >= p) {
            return invalid("field modulus coefficients must lie in [0, p)");
        }
        if !is_irreducible(&base, &modulus) {
            return invalid("field modulus is reducible");
        }
        Ok(FiniteField {
            base,
            d: modulus.len() - 1,
            modulus,
        })
    }

    pub fn p(&self) -> u64 {
        self.base.p
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> u64 {
        self.base.p.pow(self.d as u32)
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn elements(&self) -> Vec<Vec<u64>> {
        (0..self.size() as u128)
            .map(|i| digits(i, self.base.p, self.d))
            .collect()
    }

    /// Smallest element (in enumeration order) generating the multiplicative group.
    pub fn primitive_element(&self) -> Vec<u64> {
        let q1 = self.size() - 1;
        let primes = prime_factors(q1);
        self.elements()
            .into_iter()
            .find(|z| {
                !self.is_zero(z)
                    && primes
                        .iter()
                        .all(|l| self.pow(z, q1 / l) != self.one())
            })
            .expect("finite fields have primitive elements")
    }

    fn reduce(&self, mut v: Vec<u64>) -> Vec<u64> {
        let d = self.d;
        let p = self.base.p;
        while v.len() > d {
            let c = v.pop().unwrap();
            if c != 0 {
                let off = v.len() - d;
                for (i, m) in self.modulus[..d].iter().enumerate() {
                    v[off + i] = (v[off + i] + (p - c) * m % p) % p;
                }
            }
        }
        v.resize(d, 0);
        v
    }
}

fn digits(mut idx: u128, p: u64, len: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((idx % p as u128) as u64);
        idx /= p as u128;
    }
    out
}

fn is_irreducible(base: &PrimeField, f: &[u64]) -> bool {
    let deg = f.len() - 1;
    let p = base.p;
    for k in 1..=deg / 2 {
        let total = (p as u128).pow(k as u32);
        for idx in 0..total {
            let mut g = digits(idx, p, k);
            g.push(1);
            let (_, r) = poly::divide_by_monic(base, f, &g);
            if r.iter().all(|c| *c == 0) {
                return false;
            }
        }
    }
    true
}

impl Ring for FiniteField {
    type Elem = Vec<u64>;
    fn zero(&self) -> Vec<u64> {
        vec![0; self.d]
    }
    fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.d];
        v[0] = 1;
        v
    }
    fn from_int(&self, n: &BigInt) -> Vec<u64> {
        let mut v = vec![0; self.d];
        v[0] = self.base.from_int(n);
        v
    }
    fn add(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.base.p).collect()
    }
    fn neg(&self, a: &Vec<u64>) -> Vec<u64> {
        a.iter().map(|x| self.base.neg(x)).collect()
    }
    fn mul(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        let mut v = vec![0u64; 2 * self.d - 1];
        for (i, x) in a.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                v[i + j] = (v[i + j] + self.base.mul(x, y)) % self.base.p;
            }
        }
        self.reduce(v)
    }
    fn characteristic(&self) -> BigInt {
        BigInt::from(self.base.p)
    }
}

impl Field for FiniteField {
    fn inv(&self, a: &Vec<u64>) -> Option<Vec<u64>> {
        if self.is_zero(a) {
            None
        } else {
            Some(self.pow(a, self.size() - 2))
        }
    }
}

/// Dense univariate polynomials as plain coefficient slices (ascending degree).
pub mod poly {
    use super::Ring;

    pub fn trim<R: Ring>(r: &R, mut v: Vec<R::Elem>) -> Vec<R::Elem> {
        while v.last().is_some_and(|c| r.is_zero(c)) {
            v.pop();
        }
        v
    }

    pub fn add<R: Ring>(r: &R, a: &[R::Elem], b: &[R::Elem]) -> Vec<R::Elem> {
        let n = a.len().max(b.len());
        let z = r.zero();
        let v = (0..n)
            .map(|i| r.add(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z)))
            .collect();
        trim(r, v)
    }

    pub fn neg<R: Ring>(r: &R, a: &[R::Elem]) -> Vec<R::Elem> {
        a.iter().map(|c| r.neg(c)).collect()
    }

    pub fn sub<R: Ring>(r: &R, a: &[R::Elem], b: &[R::Elem]) -> Vec<R::Elem> {
        add(r, a, &neg(r, b))
    }

    pub fn scale<R: Ring>(r: &R, c: &R::Elem, a: &[R::Elem]) -> Vec<R::Elem> {
        trim(r, a.iter().map(|x| r.mul(c, x)).collect())
    }

    /// Product truncated below degree `limit` (no truncation for `None`).
    pub fn mul_trunc<R: Ring>(
        r: &R,
        a: &[R::Elem],
        b: &[R::Elem],
        limit: Option<usize>,
    ) -> Vec<R::Elem> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut len = a.len() + b.len() - 1;
        if let Some(l) = limit {
            len = len.min(l);
        }
        let mut v = vec![r.zero(); len];
        for (i, x) in a.iter().enumerate() {
            if i >= len || r.is_zero(x) {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                v[i + j] = r.add(&v[i + j], &r.mul(x, y));
            }
        }
        trim(r, v)
    }

    pub fn mul<R: Ring>(r: &R, a: &[R::Elem], b: &[R::Elem]) -> Vec<R::Elem> {
        mul_trunc(r, a, b, None)
    }

    pub fn pow<R: Ring>(r: &R, a: &[R::Elem], e: u32) -> Vec<R::Elem> {
        let mut out = trim(r, vec![r.one()]);
        for _ in 0..e {
            out = mul(r, &out, a);
        }
        out
    }

    pub fn truncate<R: Ring>(r: &R, a: &[R::Elem], limit: usize) -> Vec<R::Elem> {
        trim(r, a.iter().take(limit).cloned().collect())
    }

    /// Division by a monic polynomial: returns (Q, R) with a = Q·d + R, deg R < deg d.
    pub fn divide_by_monic<R: Ring>(
        r: &R,
        a: &[R::Elem],
        d: &[R::Elem],
    ) -> (Vec<R::Elem>, Vec<R::Elem>) {
        let dd = d.len() - 1;
        debug_assert!(r.is_zero(&r.sub(&d[dd], &r.one())), "divisor must be monic");
        let mut rem: Vec<R::Elem> = a.to_vec();
        if rem.len() <= dd {
            return (Vec::new(), trim(r, rem));
        }
        let mut q = vec![r.zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i].clone();
            if r.is_zero(&c) {
                continue;
            }
            let off = i - dd;
            q[off] = c.clone();
            for (j, dj) in d.iter().enumerate() {
                rem[off + j] = r.sub(&rem[off + j], &r.mul(&c, dj));
            }
        }
        rem.truncate(dd);
        (trim(r, q), trim(r, rem))
    }

    pub fn eval<R: Ring>(r: &R, a: &[R::Elem], x: &R::Elem) -> R::Elem {
        a.iter()
            .rev()
            .fold(r.zero(), |acc, c| r.add(&r.mul(&acc, x), c))
    }

    /// Formal derivative.
    pub fn derivative<R: Ring>(r: &R, a: &[R::Elem]) -> Vec<R::Elem> {
        let v = a
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| r.mul(&r.from_i64(i as i64), c))
            .collect();
        trim(r, v)
    }

    /// u-adic valuation; `None` for the zero polynomial.
    pub fn val_u<R: Ring>(r: &R, a: &[R::Elem]) -> Option<usize> {
        a.iter().position(|c| !r.is_zero(c))
    }

    pub fn coeff<R: Ring>(r: &R, a: &[R::Elem], i: usize) -> R::Elem {
        a.get(i).cloned().unwrap_or_else(|| r.zero())
    }

    pub fn map<R: Ring, S: Ring>(s: &S, a: &[R::Elem], f: impl Fn(&R::Elem) -> S::Elem) -> Vec<S::Elem> {
        trim(s, a.iter().map(f).collect())
    }
}

/// Polynomials over a base ring as a ring; elements are trimmed coefficient vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyRing<R: Ring> {
    pub base: R,
}

impl<R: Ring> PolyRing<R> {
    pub fn new(base: R) -> Self {
        PolyRing { base }
    }
}

impl<R: Ring> Ring for PolyRing<R> {
    type Elem = Vec<R::Elem>;
    fn zero(&self) -> Self::Elem {
        Vec::new()
    }
    fn one(&self) -> Self::Elem {
        poly::trim(&self.base, vec![self.base.one()])
    }
    fn from_int(&self, n: &BigInt) -> Self::Elem {
        poly::trim(&self.base, vec![self.base.from_int(n)])
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        poly::add(&self.base, a, b)
    }
    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        poly::neg(&self.base, a)
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        poly::mul(&self.base, a, b)
    }
    fn characteristic(&self) -> BigInt {
        self.base.characteristic()
    }
}

/// R[u]/(D) for a monic D; elements have length exactly deg D.
///
/// With D = u^P this is the ring of power series truncated at u^P.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonicQuotient<R: Ring> {
    pub base: R,
    modulus: Vec<R::Elem>,
    is_monomial: bool,
}

impl<R: Ring> MonicQuotient<R> {
    pub fn new(base: R, modulus: Vec<R::Elem>) -> Result<Self> {
        let modulus = poly::trim(&base, modulus);
        match modulus.last() {
            Some(c) if base.is_zero(&base.sub(c, &base.one())) => {}
            _ => {
                return Err(Error::InvalidInput(
                    "quotient modulus must be monic".into(),
                ))
            }
        }
        let deg = modulus.len() - 1;
        let is_monomial = modulus[..deg].iter().all(|c| base.is_zero(c));
        Ok(MonicQuotient {
            base,
            modulus,
            is_monomial,
        })
    }

    /// Power series ring truncated at u^precision.
    pub fn truncated(base: R, precision: usize) -> Self {
        let mut m = vec![base.zero(); precision];
        m.push(base.one());
        MonicQuotient {
            base,
            modulus: m,
            is_monomial: true,
        }
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn modulus(&self) -> &[R::Elem] {
        &self.modulus
    }

    pub fn reduce(&self, a: &[R::Elem]) -> Vec<R::Elem> {
        let deg = self.degree();
        let mut v: Vec<R::Elem> = if self.is_monomial || a.len() <= deg {
            a.iter().take(deg).cloned().collect()
        } else {
            poly::divide_by_monic(&self.base, a, &self.modulus).1
        };
        v.resize(deg, self.base.zero());
        v
    }

    /// The class of u.
    pub fn gen(&self) -> Vec<R::Elem> {
        self.reduce(&[self.base.zero(), self.base.one()])
    }
}

impl<R: Ring> Ring for MonicQuotient<R> {
    type Elem = Vec<R::Elem>;
    fn zero(&self) -> Self::Elem {
        vec![self.base.zero(); self.degree()]
    }
    fn one(&self) -> Self::Elem {
        self.reduce(&[self.base.one()])
    }
    fn from_int(&self, n: &BigInt) -> Self::Elem {
        self.reduce(&[self.base.from_int(n)])
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.iter().zip(b).map(|(x, y)| self.base.add(x, y)).collect()
    }
    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        a.iter().map(|x| self.base.neg(x)).collect()
    }
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        a.iter().zip(b).map(|(x, y)| self.base.sub(x, y)).collect()
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let limit = if self.is_monomial {
            Some(self.degree())
        } else {
            None
        };
        self.reduce(&poly::mul_trunc(&self.base, a, b, limit))
    }
    fn characteristic(&self) -> BigInt {
        if self.degree() == 0 {
            BigInt::one()
        } else {
            self.base.characteristic()
        }
    }
}

/// Square matrices over a ring, stored row-major.
pub mod matrix {
    use super::Ring;

    pub type Mat<T> = Vec<Vec<T>>;

    pub fn identity<R: Ring>(r: &R, d: usize) -> Mat<R::Elem> {
        scalar(r, &r.one(), d)
    }

    pub fn scalar<R: Ring>(r: &R, c: &R::Elem, d: usize) -> Mat<R::Elem> {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { c.clone() } else { r.zero() })
                    .collect()
            })
            .collect()
    }

    pub fn mul<R: Ring>(r: &R, a: &Mat<R::Elem>, b: &Mat<R::Elem>) -> Mat<R::Elem> {
        let n = a.len();
        let m = b.first().map_or(0, |row| row.len());
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut acc = r.zero();
                        for (k, brow) in b.iter().enumerate() {
                            acc = r.add(&acc, &r.mul(&a[i][k], &brow[j]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul<R: Ring>(r: &R, x: &[R::Elem], a: &Mat<R::Elem>) -> Vec<R::Elem> {
        let m = a.first().map_or(0, |row| row.len());
        (0..m)
            .map(|j| {
                let mut acc = r.zero();
                for (k, row) in a.iter().enumerate() {
                    acc = r.add(&acc, &r.mul(&x[k], &row[j]));
                }
                acc
            })
            .collect()
    }

    pub fn map<R: Ring, S: Ring>(a: &Mat<R::Elem>, f: impl Fn(&R::Elem) -> S::Elem) -> Mat<S::Elem> {
        a.iter().map(|row| row.iter().map(&f).collect()).collect()
    }

    fn minor<T: Clone>(a: &Mat<T>, row: usize, col: usize) -> Mat<T> {
        a.iter()
            .enumerate()
            .filter(|(i, _)| *i != row)
            .map(|(_, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect()
    }

    /// Determinant by cofactor expansion (division free).
    pub fn det<R: Ring>(r: &R, a: &Mat<R::Elem>) -> R::Elem {
        let d = a.len();
        match d {
            0 => r.one(),
            1 => a[0][0].clone(),
            2 => r.sub(&r.mul(&a[0][0], &a[1][1]), &r.mul(&a[0][1], &a[1][0])),
            _ => {
                let mut acc = r.zero();
                for j in 0..d {
                    if r.is_zero(&a[0][j]) {
                        continue;
                    }
                    let term = r.mul(&a[0][j], &det(r, &minor(a, 0, j)));
                    acc = if j % 2 == 0 {
                        r.add(&acc, &term)
                    } else {
                        r.sub(&acc, &term)
                    };
                }
                acc
            }
        }
    }

    /// Adjugate: adj(A)·A = A·adj(A) = det(A)·I.
    pub fn adjugate<R: Ring>(r: &R, a: &Mat<R::Elem>) -> Mat<R::Elem> {
        let d = a.len();
        if d == 1 {
            return vec![vec![r.one()]];
        }
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let m = det(r, &minor(a, j, i));
                        if (i + j) % 2 == 0 {
                            m
                        } else {
                            r.neg(&m)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}
