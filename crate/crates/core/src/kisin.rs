//! Torsion Kisin modules over truncated 𝔖_n = (ℤ/p^n)[[u]], height witnesses,
//! the étale-to-Kisin construction and tame lifts.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::padic::{format_poly, parse_poly, EisensteinPoly};
use crate::ring::matrix::{self, Mat};
use crate::ring::{poly, Field, FiniteField, MonicQuotient, PolyRing, Ring, ZModPk};

pub type UPoly = Vec<BigInt>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KisinModule {
    p: u64,
    n: u32,
    e: EisensteinPoly,
    precision: usize,
    matrix: Mat<UPoly>,
}

/// Default u-precision e·r·n + e·r + 8.
pub fn default_precision(e: u64, r: u32, n: u32) -> usize {
    (e * r as u64 * n as u64 + e * r as u64 + 8) as usize
}

impl KisinModule {
    /// Coefficients must lie in [0, p^n) and degrees below `precision`.
    pub fn new(p: u64, n: u32, e: EisensteinPoly, a: Mat<UPoly>, precision: usize) -> Result<Self> {
        if e.p() != p {
            return Err(Error::BaseMismatch(format!("E is over p = {}, module over p = {p}", e.p())));
        }
        if n == 0 {
            return invalid("n must be >= 1");
        }
        let d = a.len();
        if a.iter().any(|row| row.len() != d) {
            return invalid("Frobenius matrix must be square");
        }
        let pn = num_traits::pow(BigInt::from(p), n as usize);
        let mut out = Vec::with_capacity(d);
        for row in &a {
            let mut r = Vec::with_capacity(d);
            for entry in row {
                if entry.iter().any(|c| c.is_negative_or_ge(&pn)) {
                    return invalid(format!("coefficient outside [0, {pn}) in {}", format_poly(entry)));
                }
                let mut t = entry.clone();
                while t.last().is_some_and(|c| c.is_zero()) {
                    t.pop();
                }
                if t.len() > precision {
                    return Err(Error::Precision(format!(
                        "entry of degree {} needs u-precision > {precision}",
                        t.len() - 1
                    )));
                }
                t.resize(precision, BigInt::zero());
                r.push(t);
            }
            out.push(r);
        }
        Ok(KisinModule { p, n, e, precision, matrix: out })
    }

    /// Like `new`, reducing coefficients mod p^n first.
    pub fn reducing(p: u64, n: u32, e: EisensteinPoly, a: Mat<UPoly>, precision: usize) -> Result<Self> {
        let ring = ZModPk::new(p, n)?;
        let a = a
            .iter()
            .map(|row| row.iter().map(|f| f.iter().map(|c| ring.reduce(c)).collect()).collect())
            .collect();
        Self::new(p, n, e, a, precision)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn eisenstein(&self) -> &EisensteinPoly {
        &self.e
    }

    pub fn rank(&self) -> usize {
        self.matrix.len()
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn matrix(&self) -> &Mat<UPoly> {
        &self.matrix
    }

    pub fn coeff_ring(&self) -> ZModPk {
        ZModPk::new(self.p, self.n).expect("validated")
    }

    /// (ℤ/p^n)[u]/u^P.
    pub fn series_ring(&self) -> MonicQuotient<ZModPk> {
        MonicQuotient::truncated(self.coeff_ring(), self.precision)
    }

    /// E(u)^r as a truncated series.
    pub fn e_power(&self, r: u32) -> UPoly {
        let ring = self.series_ring();
        ring.reduce(&poly::pow(&ring.base, &self.e.reduced(&ring.base), r))
    }

    /// Checks A·B = c·I in the truncated ring.
    pub fn check_product(&self, b: &Mat<UPoly>, c: &UPoly) -> bool {
        let ring = self.series_ring();
        let prod = matrix::mul(&ring, &self.matrix, b);
        prod == matrix::scalar(&ring, &ring.reduce(c), self.rank())
    }
}

trait NegOrGe {
    fn is_negative_or_ge(&self, m: &BigInt) -> bool;
}

impl NegOrGe for BigInt {
    fn is_negative_or_ge(&self, m: &BigInt) -> bool {
        *self < BigInt::zero() || self >= m
    }
}

/// Power-series inverse of a polynomial with unit constant term, to precision `prec`.
fn series_inverse<R: Ring>(r: &R, w: &[R::Elem], inv0: &R::Elem, prec: usize) -> Vec<R::Elem> {
    let mut out = vec![r.zero(); prec];
    for k in 0..prec {
        let mut acc = if k == 0 { r.one() } else { r.zero() };
        for j in 1..=k.min(w.len().saturating_sub(1)) {
            acc = r.sub(&acc, &r.mul(&w[j], &out[k - j]));
        }
        out[k] = r.mul(&acc, inv0);
    }
    out
}

/// Solves A·X = Y over a field-coefficient series ring, with A exact polynomials.
struct SeriesSolver<R: Ring> {
    ring: R,
    adj: Mat<Vec<R::Elem>>,
    v: usize,
    w_inv: Vec<R::Elem>,
}

impl<R: Ring> SeriesSolver<R> {
    /// `None` when det A vanishes.
    fn new(ring: R, a: &Mat<Vec<R::Elem>>, inv: impl Fn(&R::Elem) -> Option<R::Elem>, prec: usize) -> Option<Self> {
        let pr = PolyRing::new(ring.clone());
        let a: Mat<Vec<R::Elem>> = a
            .iter()
            .map(|row| row.iter().map(|f| poly::trim(&ring, f.clone())).collect())
            .collect();
        let det = matrix::det(&pr, &a);
        let v = poly::val_u(&ring, &det)?;
        let w: Vec<R::Elem> = det[v..].to_vec();
        let inv0 = inv(&w[0])?;
        let w_inv = series_inverse(&ring, &w, &inv0, prec);
        let adj = matrix::adjugate(&pr, &a);
        Some(SeriesSolver { ring, adj, v, w_inv })
    }

    /// Y known mod u^prec; returns X known mod u^(prec − v), or `None` if A·X = Y has no solution.
    #[allow(clippy::needless_range_loop)]
    fn solve(&self, y: &Mat<Vec<R::Elem>>, prec: usize) -> Option<Mat<Vec<R::Elem>>> {
        let r = &self.ring;
        let out_prec = prec.checked_sub(self.v)?;
        let d = self.adj.len();
        let cols = y.first().map_or(0, |row| row.len());
        let mut x = vec![vec![Vec::new(); cols]; d];
        for i in 0..d {
            for j in 0..cols {
                let mut acc: Vec<R::Elem> = Vec::new();
                for k in 0..d {
                    acc = poly::add(r, &acc, &poly::mul_trunc(r, &self.adj[i][k], &y[k][j], Some(prec)));
                }
                if (0..self.v).any(|t| !r.is_zero(&poly::coeff(r, &acc, t))) {
                    return None;
                }
                let shifted: Vec<R::Elem> = acc.iter().skip(self.v).cloned().collect();
                let mut sol = poly::mul_trunc(r, &shifted, &self.w_inv, Some(out_prec));
                sol.resize(out_prec, r.zero());
                x[i][j] = sol;
            }
        }
        Some(x)
    }
}

fn map_entries(a: &Mat<UPoly>, f: impl Fn(&UPoly) -> UPoly) -> Mat<UPoly> {
    a.iter().map(|row| row.iter().map(&f).collect()).collect()
}

/// B with A·B = E(u)^r·I over (ℤ/p^n)[u]/u^P.
pub fn height_witness(m: &KisinModule, r: u32) -> Result<Mat<UPoly>> {
    let p = m.p;
    let d = m.rank();
    let fp = ZModPk::new(p, 1)?;
    let full = m.coeff_ring();
    let a_p: Mat<UPoly> = map_entries(&m.matrix, |f| f.iter().map(|c| fp.reduce(c)).collect());
    let n = m.n as usize;
    // precision needed: P plus v per solve; v ≤ d·P bounds the first guess
    let probe = SeriesSolver::new(fp.clone(), &a_p, |c| fp.inv(c), 1).ok_or(Error::NotHeightR { r })?;
    let v = probe.v;
    let work = m.precision + n * v;
    let solver = SeriesSolver::new(fp.clone(), &a_p, |c| fp.inv(c), work).ok_or(Error::NotHeightR { r })?;
    let wring = MonicQuotient::truncated(full.clone(), work);
    let a_w: Mat<UPoly> = map_entries(&m.matrix, |f| wring.reduce(f));
    let er = wring.reduce(&poly::pow(&full, &m.e.reduced(&full), r));
    let target = matrix::scalar(&wring, &er, d);
    let mut b: Mat<UPoly> = matrix::scalar(&wring, &wring.zero(), d);
    let mut prec = work;
    let mut pk = BigInt::one();
    for _ in 0..n {
        let ring = MonicQuotient::truncated(full.clone(), prec);
        let a_t: Mat<UPoly> = a_w.iter().map(|row| row.iter().map(|f| ring.reduce(f)).collect()).collect();
        let b_t: Mat<UPoly> = b.iter().map(|row| row.iter().map(|f| ring.reduce(f)).collect()).collect();
        let tgt: Mat<UPoly> = target.iter().map(|row| row.iter().map(|f| ring.reduce(f)).collect()).collect();
        let ab = matrix::mul(&ring, &a_t, &b_t);
        let mut resid: Mat<UPoly> = Vec::with_capacity(d);
        for i in 0..d {
            let mut row = Vec::with_capacity(d);
            for j in 0..d {
                let diff = ring.sub(&tgt[i][j], &ab[i][j]);
                let mut digit = Vec::with_capacity(prec);
                for c in &diff {
                    let (q, rem) = c.div_rem(&pk);
                    if !rem.is_zero() {
                        return Err(Error::NotASolution("lifting residual not divisible".into()));
                    }
                    digit.push(fp.reduce(&q));
                }
                row.push(digit);
            }
            resid.push(row);
        }
        let delta = solver.solve(&resid, prec).ok_or(Error::NotHeightR { r })?;
        prec -= v;
        let ring = MonicQuotient::truncated(full.clone(), prec);
        b = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let old = ring.reduce(&b_t[i][j]);
                        let add: UPoly = ring.reduce(&delta[i][j].iter().map(|c| c * &pk).collect::<Vec<_>>());
                        ring.add(&old, &ring.reduce(&add))
                    })
                    .collect()
            })
            .collect();
        pk *= BigInt::from(p);
    }
    let out_ring = m.series_ring();
    let b: Mat<UPoly> = b.iter().map(|row| row.iter().map(|f| out_ring.reduce(f)).collect()).collect();
    if !m.check_product(&b, &m.e_power(r)) {
        return Err(Error::NotASolution("A·B differs from E^r·I".into()));
    }
    Ok(b)
}

/// B′ = B·h with u^N = E^r·h, so that A·B′ = u^N·I.
pub fn u_power_witness(m: &KisinModule, b: &Mat<UPoly>, r: u32, n_exp: u64) -> Result<Mat<UPoly>> {
    let e = m.e.degree() as u64;
    if (m.precision as u64) < n_exp + e * r as u64 {
        return Err(Error::Precision(format!(
            "u-precision {} below N + e·r = {}",
            m.precision,
            n_exp + e * r as u64
        )));
    }
    if !m.check_product(b, &m.e_power(r)) {
        return Err(Error::NotASolution("B is not a height witness".into()));
    }
    let full = m.coeff_ring();
    let er = poly::pow(&full, &m.e.reduced(&full), r);
    let mut un = vec![BigInt::zero(); n_exp as usize + 1];
    un[n_exp as usize] = BigInt::one();
    let (h, rem) = poly::divide_by_monic(&full, &un, &er);
    if rem.iter().any(|c| !c.is_zero()) {
        return Err(Error::NTooSmall { n_exp });
    }
    let ring = m.series_ring();
    let h = ring.reduce(&h);
    let bp: Mat<UPoly> = b.iter().map(|row| row.iter().map(|f| ring.mul(f, &h)).collect()).collect();
    if !m.check_product(&bp, &ring.reduce(&un)) {
        return Err(Error::NotASolution("A·B′ differs from u^N·I".into()));
    }
    Ok(bp)
}

/// Quotient h of u^N by E^r (exposed for reports).
pub fn u_power_quotient(e: &EisensteinPoly, n: u32, r: u32, n_exp: u64) -> Result<UPoly> {
    let full = ZModPk::new(e.p(), n)?;
    let er = poly::pow(&full, &e.reduced(&full), r);
    let mut un = vec![BigInt::zero(); n_exp as usize + 1];
    un[n_exp as usize] = BigInt::one();
    let (h, rem) = poly::divide_by_monic(&full, &un, &er);
    if rem.iter().any(|c| !c.is_zero()) {
        return Err(Error::NTooSmall { n_exp });
    }
    Ok(h)
}

/// Parses "rows;...": entries separated by '|', coefficients by ','.
pub fn parse_matrix(s: &str) -> Result<Mat<UPoly>> {
    let m: Mat<UPoly> = s
        .split(';')
        .map(|row| row.split('|').map(parse_poly).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let d = m.len();
    if d == 0 || m.iter().any(|r| r.len() != d) {
        return invalid("matrix must be square");
    }
    Ok(m)
}

pub fn format_matrix(m: &Mat<UPoly>) -> String {
    m.iter()
        .map(|row| row.iter().map(trimmed).collect::<Vec<_>>().join("|"))
        .collect::<Vec<_>>()
        .join(";")
}

fn trimmed(f: &UPoly) -> String {
    let mut t = f.clone();
    while t.len() > 1 && t.last().is_some_and(|c| c.is_zero()) {
        t.pop();
    }
    if t.is_empty() {
        t.push(BigInt::zero());
    }
    format_poly(&t)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightReport {
    pub rank: usize,
    pub r: u32,
    pub witness: String,
    #[serde(default)]
    pub u_power: Option<UPowerReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UPowerReport {
    #[serde(rename = "N")]
    pub n_exp: u64,
    pub quotient: String,
    pub witness: String,
}

pub fn height_report(m: &KisinModule, r: u32, n_exp: Option<u64>) -> Result<HeightReport> {
    let b = height_witness(m, r)?;
    let u_power = match n_exp {
        Some(k) => {
            let bp = u_power_witness(m, &b, r, k)?;
            let h = u_power_quotient(&m.e, m.n, r, k)?;
            Some(UPowerReport {
                n_exp: k,
                quotient: trimmed(&h),
                witness: format_matrix(&bp),
            })
        }
        None => None,
    };
    Ok(HeightReport {
        rank: m.rank(),
        r,
        witness: format_matrix(&b),
        u_power,
    })
}

/// The cyclic module φ(𝔢_{i+1}) = (u+p)^{n_i}𝔢_i together with its filtered φ-module data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TameLift {
    pub p: u64,
    pub d: usize,
    pub seq: Vec<u32>,
    /// Kisin Frobenius matrix, "rows;entries|coeffs".
    pub matrix: String,
    /// Filtered-module Frobenius matrix with entries p^{n_i}.
    pub filtered_matrix: Vec<Vec<String>>,
    /// (jump n_i, basis index i+1): Fil^k D is spanned by e_{i+1} with n_i ≥ k.
    pub filtration: Vec<(u32, usize)>,
    /// Σ n_i p^i mod p^d − 1.
    pub exponent: u64,
    pub height: u32,
}

fn check_tame(p: u64, seq: &[u32]) -> Result<()> {
    crate::padic::check_odd_prime(p)?;
    if seq.is_empty() {
        return invalid("sequence must have period >= 1");
    }
    if let Some(bad) = seq.iter().find(|&&k| k as u64 > p - 1) {
        return invalid(format!("n_i = {bad} outside [0, {}]", p - 1));
    }
    if u32::try_from(seq.len()).ok().and_then(|d| p.checked_pow(d)).is_none_or(|q| q > 1 << 40) {
        return invalid("p^d too large");
    }
    Ok(())
}

/// Kisin matrix over (ℤ/p^n)[u] for the sequence.
pub fn tame_kisin_module(p: u64, seq: &[u32], n: u32) -> Result<KisinModule> {
    check_tame(p, seq)?;
    let d = seq.len();
    let e = EisensteinPoly::pure(p, 1, 1)?;
    let r = *seq.iter().max().unwrap();
    let prec = default_precision(1, r, n).max(d + 2);
    let z = crate::ring::Integers;
    let mut a: Mat<UPoly> = vec![vec![Vec::new(); d]; d];
    for (i, &k) in seq.iter().enumerate() {
        // φ(𝔢_{i+1}) = (u+p)^{n_i} 𝔢_i: column i+1, row i
        a[i][(i + 1) % d] = poly::pow(&z, e.coeffs(), k);
    }
    KisinModule::reducing(p, n, e, a, prec)
}

pub fn tame_lift_build(p: u64, seq: &[u32], n: u32) -> Result<TameLift> {
    let module = tame_kisin_module(p, seq, n)?;
    let d = seq.len();
    let q = p.pow(d as u32) - 1;
    let mut fm = vec![vec!["0".to_string(); d]; d];
    for (i, &k) in seq.iter().enumerate() {
        fm[i][(i + 1) % d] = num_traits::pow(BigInt::from(p), k as usize).to_string();
    }
    let mut filtration: Vec<(u32, usize)> = seq.iter().enumerate().map(|(i, &k)| (k, (i + 1) % d)).collect();
    filtration.sort();
    let mut m: u64 = 0;
    let mut pi: u64 = 1;
    for &k in seq {
        m = (m + k as u64 * pi) % q.max(1);
        pi = pi * p % q.max(1);
    }
    if q == 0 {
        m = 0;
    }
    Ok(TameLift {
        p,
        d,
        seq: seq.to_vec(),
        matrix: format_matrix(module.matrix()),
        filtered_matrix: fm,
        filtration,
        exponent: m,
        height: *seq.iter().max().unwrap(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TameOracle {
    /// Exponents a_i of f(𝔢_i) = c_i·t^{a_i}, t^{p^d − 1} = u.
    pub a: Vec<u64>,
    /// Irreducible polynomial presenting 𝔽_{p^d}, ascending coefficients.
    pub field_modulus: Vec<u64>,
    pub exponent: u64,
}

/// Tame character of the mod-p module, read off its solutions f(𝔢_{i+1})^p = u^{n_i}·f(𝔢_i).
pub fn tame_character_oracle(p: u64, seq: &[u32]) -> Result<TameOracle> {
    check_tame(p, seq)?;
    let d = seq.len();
    let q = p.pow(d as u32) - 1;
    // exponents: p·a_{i+1} = a_i + q·n_i, indices mod d
    let mut found = None;
    for a0 in 0..=q {
        let mut a = vec![a0];
        let mut ok = true;
        for i in 0..d {
            let num = a[i] + q * seq[i] as u64;
            if !num.is_multiple_of(p) {
                ok = false;
                break;
            }
            a.push(num / p);
        }
        if ok && a[d] == a0 {
            a.pop();
            found = Some(a);
            break;
        }
    }
    let a = found.ok_or_else(|| Error::NotASolution("no exponent solution".into()))?;
    let field = FiniteField::new(p, d)?;
    let zeta = field.primitive_element();
    // coefficients c_i = c_0^{p^{d−i}} with c_0 = 1 generic; act by t ↦ ζt
    let c0 = field.one();
    let cs: Vec<Vec<u64>> = (0..d).map(|i| field.pow(&c0, p.pow(((d - i) % d) as u32))).collect();
    let acted: Vec<Vec<u64>> = cs
        .iter()
        .zip(&a)
        .map(|(c, &ai)| field.mul(c, &field.pow(&zeta, ai)))
        .collect();
    for i in 0..d {
        let j = (i + 1) % d;
        if field.pow(&acted[j], p) != acted[i] {
            return Err(Error::NotASolution("acted solution breaks the Frobenius relation".into()));
        }
    }
    let ratio = field.mul(&acted[0], &field.inv(&cs[0]).expect("nonzero"));
    let mut pw = field.one();
    let mut exponent = None;
    for k in 0..q.max(1) {
        if pw == ratio {
            exponent = Some(k);
            break;
        }
        pw = field.mul(&pw, &zeta);
    }
    let exponent = exponent.ok_or_else(|| Error::NotASolution("discrete logarithm not found".into()))?;
    Ok(TameOracle {
        a,
        field_modulus: field.modulus().to_vec(),
        exponent,
    })
}

/// Laurent polynomial u^shift·Σ c_i u^i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Laurent<E> {
    pub shift: i64,
    pub coeffs: Vec<E>,
}

#[derive(Clone, Debug)]
pub struct EtalePhiModule {
    pub field: FiniteField,
    pub matrix: Mat<Laurent<Vec<u64>>>,
    pub e: u64,
}

impl EtalePhiModule {
    pub fn new(field: FiniteField, matrix: Mat<Laurent<Vec<u64>>>, e: u64) -> Result<Self> {
        let d = matrix.len();
        if d == 0 || matrix.iter().any(|r| r.len() != d) {
            return invalid("matrix must be square and non-empty");
        }
        if e == 0 {
            return invalid("e must be >= 1");
        }
        let m = EtalePhiModule { field, matrix, e };
        if m.integral_part(m.min_shift()).1.is_none() {
            return invalid("det A vanishes: Frobenius is not étale");
        }
        Ok(m)
    }

    /// Parses entries "c0,c1,...[@k]" over 𝔽_p, meaning u^k·Σ c_i u^i.
    pub fn parse(p: u64, s: &str, e: u64) -> Result<Self> {
        let field = FiniteField::new(p, 1)?;
        let matrix = s
            .split(';')
            .map(|row| {
                row.split('|')
                    .map(|entry| {
                        let (body, shift) = match entry.split_once('@') {
                            Some((b, k)) => (
                                b,
                                k.trim()
                                    .parse::<i64>()
                                    .map_err(|_| Error::InvalidInput(format!("bad shift in {entry:?}")))?,
                            ),
                            None => (entry, 0),
                        };
                        let coeffs = parse_poly(body)?
                            .iter()
                            .map(|c| field.from_int(c))
                            .collect();
                        Ok(Laurent { shift, coeffs })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(field, matrix, e)
    }

    fn min_shift(&self) -> i64 {
        let f = &self.field;
        self.matrix
            .iter()
            .flatten()
            .filter_map(|l| poly::val_u(f, &l.coeffs).map(|v| l.shift + v as i64))
            .min()
            .unwrap_or(0)
    }

    /// u^{t(p−1)}·A as polynomials, and val_u(det) if nonzero.
    fn integral_part(&self, lowest: i64) -> (Mat<Vec<Vec<u64>>>, Option<usize>) {
        let p = self.field.p() as i64;
        let t = if lowest >= 0 { 0 } else { (-lowest + p - 2) / (p - 1) };
        let f = &self.field;
        let shift = t * (p - 1);
        let m: Mat<Vec<Vec<u64>>> = self
            .matrix
            .iter()
            .map(|row| {
                row.iter()
                    .map(|l| {
                        let k = l.shift + shift;
                        let mut v = Vec::new();
                        for (i, c) in l.coeffs.iter().enumerate() {
                            let deg = k + i as i64;
                            if f.is_zero(c) {
                                continue;
                            }
                            let deg = deg as usize;
                            if v.len() <= deg {
                                v.resize(deg + 1, f.zero());
                            }
                            v[deg] = c.clone();
                        }
                        poly::trim(f, v)
                    })
                    .collect()
            })
            .collect();
        let det = matrix::det(&PolyRing::new(f.clone()), &m);
        (m, poly::val_u(f, &det))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtaleToKisin {
    pub t: u64,
    pub det_valuation: u64,
    /// ⌈val_u(det)/e⌉.
    pub r: u32,
    /// Least r at which a mod-p height witness exists.
    pub r_min: u32,
    /// Rescaled integral matrix (𝔽_p entries only; empty over larger fields).
    pub matrix: String,
}

/// Whether A·B = u^{e·r}·I is solvable over 𝔽_q[[u]].
pub fn height_solvable_mod_p<F: Field>(field: &F, a: &Mat<Vec<F::Elem>>, e: u64, r: u32, prec: usize) -> bool {
    let Some(solver) = SeriesSolver::new(field.clone(), a, |c| field.inv(c), prec + (e * r as u64) as usize) else {
        return false;
    };
    let d = a.len();
    let er = (e * r as u64) as usize;
    let mut mono = vec![field.zero(); er + 1];
    mono[er] = field.one();
    let rhs = matrix::scalar(&PolyRing::new(field.clone()), &mono, d);
    solver.solve(&rhs, prec + er).is_some()
}

pub fn etale_to_kisin(m: &EtalePhiModule) -> Result<(EtaleToKisin, Option<KisinModule>)> {
    let lowest = m.min_shift();
    let p = m.field.p();
    let t = if lowest >= 0 { 0 } else { ((-lowest) as u64).div_ceil(p - 1) };
    let (a, v) = m.integral_part(lowest);
    let v = v.ok_or_else(|| Error::InvalidInput("det A vanishes".into()))? as u64;
    let r = v.div_ceil(m.e) as u32;
    let prec = (v as usize + 8).max(a.iter().flatten().map(|f| f.len()).max().unwrap_or(0) + 1);
    let mut r_min = 0;
    while !height_solvable_mod_p(&m.field, &a, m.e, r_min, prec) {
        r_min += 1;
        if r_min > r {
            return Err(Error::NotASolution("no height witness at the computed r".into()));
        }
    }
    let module = if m.field.degree() == 1 {
        let e = EisensteinPoly::pure(p, m.e as usize, 1)?;
        let ints: Mat<UPoly> = a
            .iter()
            .map(|row| {
                row.iter()
                    .map(|f| f.iter().map(|c| BigInt::from(c[0])).collect())
                    .collect()
            })
            .collect();
        let maxdeg = ints.iter().flatten().map(|f: &UPoly| f.len()).max().unwrap_or(0);
        let prec = default_precision(m.e, r, 1).max(maxdeg + 1);
        Some(KisinModule::new(p, 1, e, ints, prec)?)
    } else {
        None
    };
    let matrix = module.as_ref().map(|k| format_matrix(k.matrix())).unwrap_or_default();
    Ok((
        EtaleToKisin {
            t,
            det_valuation: v,
            r,
            r_min,
            matrix,
        },
        module,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::exact_nilpotency_index;

    fn bi(v: &[i64]) -> UPoly {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn eis(s: &str) -> EisensteinPoly {
        EisensteinPoly::parse(s, 3).unwrap()
    }

    fn rank1(e: &str, n: u32, a: &[i64], prec: usize) -> KisinModule {
        KisinModule::reducing(3, n, eis(e), vec![vec![bi(a)]], prec).unwrap()
    }

    #[test]
    fn construction() {
        assert!(KisinModule::new(3, 1, eis("3,1"), vec![vec![bi(&[0, 1])]], 8).is_ok());
        assert!(KisinModule::new(3, 1, eis("3,1"), vec![vec![bi(&[1])]], 8).is_ok());
        assert!(KisinModule::new(3, 1, eis("3,1"), vec![vec![bi(&[3])]], 8).is_err());
        assert!(KisinModule::new(3, 2, eis("3,1"), vec![vec![bi(&[9])]], 8).is_err());
        assert!(KisinModule::new(3, 2, eis("3,1"), vec![vec![bi(&[0, 0, 1])]], 2).is_err());
        assert!(KisinModule::new(3, 2, eis("3,1"), vec![vec![bi(&[1]), bi(&[0])]], 4).is_err());
    }

    #[test]
    fn witness_examples() {
        // A = (E^r) → B = (1)
        let m = rank1("3,1", 2, &[9, 6, 1], 10);
        let b = height_witness(&m, 2).unwrap();
        assert_eq!(b[0][0], m.series_ring().one());
        // A = (1) → B = (E^r)
        let m = rank1("3,1", 2, &[1], 10);
        let b = height_witness(&m, 1).unwrap();
        assert_eq!(b[0][0], m.e_power(1));
        // 2×2 swap
        let m = KisinModule::reducing(
            3,
            2,
            eis("3,1"),
            vec![vec![bi(&[0]), bi(&[3, 1])], vec![bi(&[1]), bi(&[0])]],
            10,
        )
        .unwrap();
        let b = height_witness(&m, 1).unwrap();
        assert_eq!(b[0][1], m.e_power(1));
        assert_eq!(b[1][0], m.series_ring().one());
        assert!(matches!(height_witness(&m, 0), Err(Error::NotHeightR { .. })));
    }

    #[test]
    fn not_height_r() {
        let m = rank1("3,1", 1, &[0, 0, 1], 10);
        assert!(matches!(height_witness(&m, 1), Err(Error::NotHeightR { r: 1 })));
        assert!(height_witness(&m, 2).is_ok());
        // u^2 over ℤ/9 is not of height 1 even though u ≡ E mod 3
        let m = rank1("3,1", 2, &[0, 1], 10);
        assert!(matches!(height_witness(&m, 1), Err(Error::NotHeightR { .. })));
        // singular mod p
        let m = KisinModule::reducing(3, 1, eis("3,1"), vec![vec![bi(&[1]), bi(&[1])], vec![bi(&[1]), bi(&[1])]], 6)
            .unwrap();
        assert!(matches!(height_witness(&m, 3), Err(Error::NotHeightR { .. })));
    }

    #[test]
    fn u_power_examples() {
        let m = rank1("3,1", 1, &[0, 1], 8);
        let b = height_witness(&m, 1).unwrap();
        assert_eq!(u_power_witness(&m, &b, 1, 1).unwrap(), b);
        let m = rank1("3,1", 2, &[3, 1], 8);
        let b = height_witness(&m, 1).unwrap();
        assert_eq!(u_power_quotient(&eis("3,1"), 2, 1, 2).unwrap(), bi(&[6, 1]));
        let bp = u_power_witness(&m, &b, 1, 2).unwrap();
        assert_eq!(bp[0][0], m.series_ring().reduce(&bi(&[6, 1])));
        let m = rank1("-3,0,1", 1, &[0, 0, 1], 8);
        let b = height_witness(&m, 1).unwrap();
        assert!(matches!(u_power_witness(&m, &b, 1, 1), Err(Error::NTooSmall { n_exp: 1 })));
    }

    #[test]
    fn nilpotency_consistency() {
        for (g, n, r) in [("3,1", 2, 2), ("3,1", 2, 1), ("-3,0,1", 2, 1), ("3,3,1", 3, 1)] {
            let e = eis(g);
            let big = exact_nilpotency_index(&e, n, r).unwrap();
            assert!(u_power_quotient(&e, n, r, big).is_ok());
            assert!(matches!(u_power_quotient(&e, n, r, big - 1), Err(Error::NTooSmall { .. })));
        }
    }

    #[test]
    fn tame_examples() {
        let t = tame_lift_build(3, &[0, 0], 1).unwrap();
        assert_eq!(t.exponent, 0);
        let t = tame_lift_build(3, &[2], 1).unwrap();
        assert_eq!(t.exponent, 0);
        assert_eq!(tame_character_oracle(3, &[2]).unwrap().exponent, 0);
        let t = tame_lift_build(3, &[1, 0], 1).unwrap();
        assert_eq!(t.exponent, 1);
        assert_eq!(tame_character_oracle(3, &[1, 0]).unwrap().exponent, 1);
        assert_eq!(tame_character_oracle(3, &[0, 0]).unwrap().exponent, 0);
        let o = tame_character_oracle(3, &[1]).unwrap();
        assert_eq!((o.a.clone(), o.exponent), (vec![1], 1));
        assert!(tame_lift_build(3, &[3], 1).is_err());
        assert_eq!(t.filtration, vec![(0, 0), (1, 1)]);
        assert_eq!(t.filtered_matrix, vec![vec!["0".to_string(), "3".into()], vec!["1".into(), "0".into()]]);
    }

    #[test]
    fn tame_builder_matches_oracle() {
        for d in 1..=3u32 {
            let total = 3u64.pow(d);
            for idx in 0..total {
                let seq: Vec<u32> = (0..d).map(|i| ((idx / 3u64.pow(i)) % 3) as u32).collect();
                let b = tame_lift_build(3, &seq, 1).unwrap();
                let o = tame_character_oracle(3, &seq).unwrap();
                assert_eq!(b.exponent, o.exponent, "{seq:?}");
            }
        }
    }

    #[test]
    fn tame_modules_have_height() {
        for seq in [vec![1u32, 0], vec![2, 1, 0], vec![2, 2]] {
            for n in 1..=2 {
                let m = tame_kisin_module(3, &seq, n).unwrap();
                let r = *seq.iter().max().unwrap();
                assert!(height_witness(&m, r).is_ok());
            }
        }
    }

    #[test]
    fn etale_examples() {
        let (k, m) = etale_to_kisin(&EtalePhiModule::parse(3, "1|0;0|1", 1).unwrap()).unwrap();
        assert_eq!((k.t, k.r), (0, 0));
        assert!(height_witness(&m.unwrap(), 0).is_ok());
        let (k, m) = etale_to_kisin(&EtalePhiModule::parse(3, "0,0,0,1", 1).unwrap()).unwrap();
        assert_eq!(k.r, 3);
        assert!(height_witness(&m.clone().unwrap(), 3).is_ok());
        assert!(height_witness(&m.unwrap(), 2).is_err());
        let (k, m) = etale_to_kisin(&EtalePhiModule::parse(3, "1@-1", 1).unwrap()).unwrap();
        assert_eq!((k.t, k.r, k.matrix.as_str()), (1, 1, "0,1"));
        assert!(height_witness(&m.unwrap(), 1).is_ok());
        assert!(EtalePhiModule::parse(3, "1|1;1|1", 1).is_err());
    }

    #[test]
    fn etale_rank_two_needs_less_than_det() {
        // A = u·I: val det = 2 but height 1 already works
        let (k, m) = etale_to_kisin(&EtalePhiModule::parse(3, "0,1|0;0|0,1", 1).unwrap()).unwrap();
        assert_eq!((k.det_valuation, k.r, k.r_min), (2, 2, 1));
        let m = m.unwrap();
        assert!(height_witness(&m, 1).is_ok());
        assert!(height_witness(&m, 0).is_err());
    }

    #[test]
    fn etale_over_larger_field() {
        let f = FiniteField::new(3, 2).unwrap();
        let g = f.primitive_element();
        let one = f.one();
        let mat = vec![
            vec![Laurent { shift: -1, coeffs: vec![g.clone()] }, Laurent { shift: 0, coeffs: vec![one.clone()] }],
            vec![Laurent { shift: 0, coeffs: vec![] }, Laurent { shift: 1, coeffs: vec![one] }],
        ];
        let (k, m) = etale_to_kisin(&EtalePhiModule::new(f, mat, 2).unwrap()).unwrap();
        assert!(m.is_none());
        assert_eq!(k.t, 1);
        // rescaled det = u·g · u^3 → valuation 4, e = 2
        assert_eq!((k.det_valuation, k.r), (4, 2));
        assert!(k.r_min <= k.r);
    }
}
