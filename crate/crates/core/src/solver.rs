//! J-sets over local-field models: enumeration of congruence solutions,
//! reduction maps between levels, lifting to exact solutions, and the
//! splitting test.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::bounds::exact_nilpotency_index;
use crate::error::{invalid, Error, Result};
use crate::kisin::{height_witness, u_power_witness, KisinModule, UPoly};
use crate::local::{LocalElement, LocalFieldModel, Valuation, Valued};
use crate::rat::{ceil_int, floor_int, fmt_rat, pow_rat, rint, serde_rat, Rat};
use crate::ring::matrix::{self, Mat};
use crate::ring::Ring;
use crate::witt::{ideal_membership_gt, witt_of_integer, WittRing, WittVec};

pub const DEFAULT_CAP: u64 = 1_000_000;

/// p-adic digits used for enumeration; every threshold is below v_K(p).
const ENUM_PRECISION: u32 = 2;
/// Extra digits carried through divisions by Teichmüller elements.
const SLACK: u32 = 3;

pub type WElem = WittVec<LocalElement>;

/// Parameters for [`JSetProblem::new`].
#[derive(Clone, Debug)]
pub struct ProblemParams {
    pub r: u32,
    /// u^N = 0 in W_n[u]/E^r; computed exactly when absent.
    pub n_exp: Option<u64>,
    pub s: u32,
    /// Truncation level; defaults to a = pN/(p−1).
    pub c: Option<Rat>,
    /// p-adic precision M of exact solutions.
    pub precision: u32,
    /// Explicit π_s as x-coefficients; searched among ±x^k when absent.
    pub pi_s: Option<Vec<BigInt>>,
    pub cap: u64,
}

impl ProblemParams {
    pub fn new(r: u32, s: u32) -> Self {
        ProblemParams {
            r,
            n_exp: None,
            s,
            c: None,
            precision: 6,
            pi_s: None,
            cap: DEFAULT_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct JSetProblem {
    module: KisinModule,
    r: u32,
    n_exp: u64,
    s: u32,
    c: Rat,
    precision: u32,
    cap: u64,
    witt: WittRing<LocalFieldModel>,
    pi_s: LocalElement,
    a_tilde: Mat<WElem>,
    b_tilde: Mat<WElem>,
}

impl JSetProblem {
    pub fn new(module: KisinModule, model: &LocalFieldModel, params: ProblemParams) -> Result<Self> {
        let p = module.p();
        let e = module.eisenstein().degree() as u64;
        let n = module.n();
        if model.p() != p {
            return Err(Error::BaseMismatch(format!("model over p = {}, module over p = {p}", model.p())));
        }
        if model.e_k() != e {
            return Err(Error::BaseMismatch(format!(
                "model normalized by e_K = {}, but E has degree {e}",
                model.e_k()
            )));
        }
        if params.precision == 0 {
            return invalid("precision must be >= 1");
        }
        let n_exp = match params.n_exp {
            Some(v) => v,
            None if params.r == 0 => 0,
            None => exact_nilpotency_index(module.eisenstein(), n, params.r)?,
        };
        // s > s_min  <=>  e·p^s > N·p^(n−1)
        let lhs = BigInt::from(e) * num_traits::pow(BigInt::from(p), params.s as usize);
        let rhs = BigInt::from(n_exp) * num_traits::pow(BigInt::from(p), n as usize - 1);
        if lhs <= rhs {
            return invalid(format!(
                "s = {} does not exceed s_min for e = {e}, n = {n}, N = {n_exp}",
                params.s
            ));
        }
        let work = model.with_precision(params.precision + SLACK)?;
        let pi_s = match &params.pi_s {
            Some(c) => {
                let y = work.element(c);
                check_pi_s(&work, &module, params.s, &y)?;
                y
            }
            None => work.find_pi_s(module.eisenstein(), params.s)?,
        };
        let witt = WittRing::new(work, p, n as usize)?;
        let mut prob = JSetProblem {
            module,
            r: params.r,
            n_exp,
            s: params.s,
            c: Rat::zero(),
            precision: params.precision,
            cap: params.cap,
            witt,
            pi_s,
            a_tilde: Vec::new(),
            b_tilde: Vec::new(),
        };
        let c = params.c.unwrap_or_else(|| prob.a());
        prob.c = prob.check_level(c)?;
        if prob.rank() > 0 {
            let b = height_witness(&prob.module, prob.r)?;
            let b = u_power_witness(&prob.module, &b, prob.r, n_exp)?;
            prob.a_tilde = prob.lift_matrix(prob.module.matrix());
            let b_raw = prob.lift_matrix(&b);
            prob.b_tilde = prob.normalize(&b_raw)?;
        }
        Ok(prob)
    }

    fn check_level(&self, c: Rat) -> Result<Rat> {
        let sup = rint(self.e()) * pow_rat(self.p(), self.s as i64 - self.n() as i64 + 1);
        if c < Rat::zero() || c >= sup {
            return invalid(format!("level {} outside [0, {})", fmt_rat(&c), fmt_rat(&sup)));
        }
        Ok(c)
    }

    /// Same problem at another truncation level.
    pub fn with_level(&self, c: Rat) -> Result<Self> {
        let c = self.check_level(c)?;
        Ok(JSetProblem { c, ..self.clone() })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn p(&self) -> u64 {
        self.module.p()
    }

    pub fn n(&self) -> usize {
        self.module.n() as usize
    }

    pub fn e(&self) -> u64 {
        self.module.eisenstein().degree() as u64
    }

    pub fn rank(&self) -> usize {
        self.module.rank()
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn level(&self) -> &Rat {
        &self.c
    }

    pub fn n_exp(&self) -> u64 {
        self.n_exp
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn module(&self) -> &KisinModule {
        &self.module
    }

    /// b = N/(p−1).
    pub fn b(&self) -> Rat {
        Rat::new(BigInt::from(self.n_exp), BigInt::from(self.p() - 1))
    }

    /// a = pN/(p−1).
    pub fn a(&self) -> Rat {
        self.b() * rint(self.p())
    }

    /// The working model (precision M + slack).
    pub fn work_model(&self) -> &LocalFieldModel {
        &self.witt.base
    }

    pub fn output_model(&self) -> LocalFieldModel {
        self.witt.base.with_precision(self.precision).expect("validated model")
    }

    pub fn pi_s(&self) -> &LocalElement {
        &self.pi_s
    }

    pub fn a_tilde(&self) -> &Mat<WElem> {
        &self.a_tilde
    }

    pub fn b_tilde(&self) -> &Mat<WElem> {
        &self.b_tilde
    }

    /// p^{n·d}, the size of T for a free module.
    pub fn expected_t_size(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.p()), self.n() * self.rank())
    }

    /// Σ_k [a_k]·[π_s]^k with a_k mapped through ℤ → W_n.
    fn lift_poly(&self, f: &UPoly) -> WElem {
        let w = &self.witt;
        let model = &w.base;
        let mut acc = w.zero();
        let mut pk = model.one();
        for c in f {
            if model.is_zero(&pk) {
                break;
            }
            if !c.is_zero() {
                let wc: WElem = witt_of_integer(self.p(), self.n(), c)
                    .iter()
                    .map(|x| model.from_int(x))
                    .collect();
                acc = w.add(&acc, &w.teichmuller_scale(&pk, &wc));
            }
            pk = model.mul(&pk, &self.pi_s);
        }
        acc
    }

    fn lift_matrix(&self, a: &Mat<UPoly>) -> Mat<WElem> {
        a.iter().map(|row| row.iter().map(|f| self.lift_poly(f)).collect()).collect()
    }

    /// Replaces B̃ by B̃(I+R)^{-1} where Ã·B̃ = [π_s]^N (I+R).
    fn normalize(&self, b_raw: &Mat<WElem>) -> Result<Mat<WElem>> {
        let w = &self.witt;
        let model = &w.base;
        let d = self.rank();
        let pin = model.pow(&self.pi_s, self.n_exp);
        let prod = matrix::mul(w, &self.a_tilde, b_raw);
        let mut neg_r: Mat<WElem> = Vec::with_capacity(d);
        for (i, row) in prod.iter().enumerate() {
            let mut out = Vec::with_capacity(d);
            for (j, x) in row.iter().enumerate() {
                let q = divide_teichmuller(model, &pin, x).map_err(|_| {
                    Error::Integrality("Ã·B̃ is not divisible by [π_s]^N".into())
                })?;
                let delta = if i == j { w.one() } else { w.zero() };
                let r = w.sub(&q, &delta);
                for comp in &r {
                    if model.valuation(comp).exceeds(&Rat::zero(), true) == Some(false) {
                        return Err(Error::Integrality(
                            "normalization defect R is not topologically nilpotent".into(),
                        ));
                    }
                }
                out.push(w.neg(&r));
            }
            neg_r.push(out);
        }
        let mut inv = matrix::identity(w, d);
        let mut term = inv.clone();
        let limit = 4 * (model.precision() as usize) * model.degree() * self.p().pow(self.n() as u32) as usize + 16;
        let mut steps = 0;
        loop {
            term = matrix::mul(w, &term, &neg_r);
            if term.iter().flatten().all(|x| w.is_zero(x)) {
                break;
            }
            inv = mat_add(w, &inv, &term);
            steps += 1;
            if steps > limit {
                return Err(Error::Precision("geometric series for (I+R)^{-1} did not terminate".into()));
            }
        }
        let b = matrix::mul(w, b_raw, &inv);
        // divisions above cost at most one digit
        let check = model.with_precision(model.precision() - 1)?;
        let lhs = reduce_mat(&check, &matrix::mul(w, &self.a_tilde, &b));
        let rhs = reduce_mat(&check, &matrix::scalar(w, &w.teichmuller(&pin), d));
        if lhs != rhs {
            return Err(Error::Precision("Ã·B̃ differs from [π_s]^N·I after normalization".into()));
        }
        Ok(b)
    }
}

fn check_pi_s(model: &LocalFieldModel, module: &KisinModule, s: u32, y: &LocalElement) -> Result<()> {
    let e = module.eisenstein();
    let root = model.pow(y, e.p().pow(s));
    if !model.is_zero(&model.eval_poly(e.coeffs(), &root)) {
        return invalid(format!("supplied π_s is not a p^{s}-th root of a root of E"));
    }
    Ok(())
}

fn mat_add<R: Ring>(r: &R, a: &Mat<R::Elem>, b: &Mat<R::Elem>) -> Mat<R::Elem> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| r.add(u, v)).collect())
        .collect()
}

fn reduce_witt(model: &LocalFieldModel, x: &WElem) -> WElem {
    x.iter().map(|c| model.reduce_from(c)).collect()
}

fn reduce_vec(model: &LocalFieldModel, x: &[WElem]) -> Vec<WElem> {
    x.iter().map(|w| reduce_witt(model, w)).collect()
}

fn reduce_mat(model: &LocalFieldModel, a: &Mat<WElem>) -> Mat<WElem> {
    a.iter().map(|row| reduce_vec(model, row)).collect()
}

fn truncate_vec(x: &[WElem], k: usize) -> Vec<WElem> {
    x.iter().map(|w| w[..k].to_vec()).collect()
}

fn truncate_mat(a: &Mat<WElem>, k: usize) -> Mat<WElem> {
    a.iter().map(|row| truncate_vec(row, k)).collect()
}

/// [z]^{-1}·x: component i divided by z^{p^i}.
fn divide_teichmuller(model: &LocalFieldModel, z: &LocalElement, x: &WElem) -> Result<WElem> {
    let p = model.p();
    let mut zp = z.clone();
    let mut out = Vec::with_capacity(x.len());
    for c in x {
        out.push(if model.is_zero(c) { model.zero() } else { model.div_exact(c, &zp)? });
        zp = model.pow(&zp, p);
    }
    Ok(out)
}

/// φ(X) − X·Ã.
fn residual<R: Ring>(w: &WittRing<R>, x: &[WittVec<R::Elem>], a: &Mat<WittVec<R::Elem>>) -> Vec<WittVec<R::Elem>> {
    let xa = matrix::vec_mul(w, x, a);
    x.iter().zip(&xa).map(|(xi, yi)| w.sub(&w.power_frobenius(xi), yi)).collect()
}

fn parse_member_len(x: &[WElem], d: usize, n: usize) -> Result<()> {
    if x.len() != d || x.iter().any(|w| w.len() != n) {
        return invalid(format!("expected {d} Witt vectors of length {n}"));
    }
    Ok(())
}

fn trim_elem(c: &LocalElement) -> String {
    let mut t = c.clone();
    while t.last().is_some_and(|x| x.is_zero()) {
        t.pop();
    }
    crate::padic::format_poly(&t)
}

fn members_repr(ms: &[Vec<WElem>]) -> Vec<Vec<Vec<String>>> {
    ms.iter()
        .map(|m| m.iter().map(|w| w.iter().map(trim_elem).collect()).collect())
        .collect()
}

/// Congruence solutions modulo [𝔞^{>c/p^s}], as canonical representatives.
#[derive(Clone, Debug)]
pub struct JSolutionSet {
    level: Rat,
    s: u32,
    model: LocalFieldModel,
    members: Vec<Vec<WElem>>,
}

impl JSolutionSet {
    pub fn level(&self) -> &Rat {
        &self.level
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<WElem>] {
        &self.members
    }

    pub fn contains(&self, m: &[WElem]) -> bool {
        self.members.binary_search_by(|x| x.as_slice().cmp(m)).is_ok()
    }

    /// Component thresholds p^i·c/p^s.
    pub fn thresholds(&self, n: usize) -> Vec<Rat> {
        component_thresholds(&self.level, self.model.p(), self.s, n)
    }
}

impl Serialize for JSolutionSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("JSolutionSet", 3)?;
        st.serialize_field("level", &fmt_rat(&self.level))?;
        st.serialize_field("count", &self.members.len())?;
        st.serialize_field("members", &members_repr(&self.members))?;
        st.end()
    }
}

fn component_thresholds(c: &Rat, p: u64, s: u32, n: usize) -> Vec<Rat> {
    (0..n).map(|i| c * pow_rat(p, i as i64 - s as i64)).collect()
}

/// Brute-force enumeration of J^{(s),E}_{n,c}.
pub fn jset_enumerate(prob: &JSetProblem) -> Result<JSolutionSet> {
    let p = prob.p();
    let n = prob.n();
    let d = prob.rank();
    let low = prob.work_model().with_precision(ENUM_PRECISION)?;
    let witt = WittRing::new(low.clone(), p, n)?;
    let a_low = reduce_mat(&low, &prob.a_tilde);
    let level0 = &prob.c / pow_rat(p, prob.s as i64);
    let layouts: Vec<Vec<u32>> = component_thresholds(&prob.c, p, prob.s, n)
        .iter()
        .map(|t| low.digit_layout_gt(t))
        .collect();
    let digits: u64 = layouts.iter().flatten().map(|&k| k as u64).sum::<u64>() * d as u64;
    let total = num_traits::pow(BigInt::from(p), digits as usize);
    if total > BigInt::from(prob.cap) {
        return Err(Error::CapExceeded {
            needed: total.to_string(),
            cap: prob.cap,
        });
    }
    let total = total.to_u64().expect("bounded by cap");
    let m = low.degree();
    let decode = |mut idx: u64| -> Vec<WElem> {
        (0..d)
            .map(|_| {
                layouts
                    .iter()
                    .map(|layout| {
                        let mut c = vec![BigInt::zero(); m];
                        for (j, &k) in layout.iter().enumerate() {
                            let radix = p.pow(k);
                            c[j] = BigInt::from(idx % radix);
                            idx /= radix;
                        }
                        c
                    })
                    .collect()
            })
            .collect()
    };
    let found: Vec<Option<Vec<WElem>>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let x = decode(idx);
            for r in residual(&witt, &x, &a_low) {
                if !ideal_membership_gt(&low, &r, &level0, true)? {
                    return Ok(None);
                }
            }
            Ok(Some(x))
        })
        .collect::<Result<_>>()?;
    let mut members: Vec<Vec<WElem>> = found.into_iter().flatten().collect();
    members.sort();
    Ok(JSolutionSet {
        level: prob.c.clone(),
        s: prob.s,
        model: low,
        members,
    })
}

/// ρ_{c,c_target}: reduction to a lower level, duplicates merged.
pub fn rho_reduce(set: &JSolutionSet, c_target: &Rat) -> Result<JSolutionSet> {
    if c_target > &set.level || c_target < &Rat::zero() {
        return invalid(format!(
            "target level {} is not in [0, {}]",
            fmt_rat(c_target),
            fmt_rat(&set.level)
        ));
    }
    let n = set.members.first().and_then(|m| m.first()).map_or(0, |w| w.len());
    let ts = component_thresholds(c_target, set.model.p(), set.s, n);
    let mut members: Vec<Vec<WElem>> = set
        .members
        .iter()
        .map(|m| {
            m.iter()
                .map(|w| w.iter().zip(&ts).map(|(x, t)| set.model.reduce_gt(x, t)).collect())
                .collect()
        })
        .collect();
    members.sort();
    members.dedup();
    Ok(JSolutionSet {
        level: c_target.clone(),
        s: set.s,
        model: set.model.clone(),
        members,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftStep {
    pub level: usize,
    pub iteration: usize,
    /// v_K of Z_{l+1} − Z_l, or a lower bound when it vanishes at precision.
    pub increment: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftOutcome {
    #[serde(serialize_with = "ser_vector")]
    pub solution: Vec<WElem>,
    pub precision: u32,
    /// a′, the level of the starting congruence defect; absent when X0 is exact.
    #[serde(with = "crate::rat::serde_opt_rat")]
    pub defect_level: Option<Rat>,
    #[serde(with = "crate::rat::serde_opt_rat")]
    pub beta_valuation: Option<Rat>,
    #[serde(with = "crate::rat::serde_opt_rat")]
    pub gamma: Option<Rat>,
    pub budget: u64,
    /// Iterations spent per Witt length 1..n.
    pub iterations: Vec<usize>,
    pub residual_zero: bool,
    pub congruent_mod_b: bool,
    pub fixed_point: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<LiftStep>,
}

impl LiftOutcome {
    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }
}

fn ser_vector<S: Serializer>(x: &[WElem], s: S) -> std::result::Result<S::Ok, S::Error> {
    members_repr(&[x.to_vec()])[0].serialize(s)
}

struct LiftData<'a> {
    w: WittRing<LocalFieldModel>,
    x: Vec<WElem>,
    b: Mat<WElem>,
    alpha: &'a LocalElement,
    beta: &'a LocalElement,
    pin: &'a LocalElement,
}

impl LiftData<'_> {
    /// Z ↦ [π_s^N β]^{-1}·(φ(X + [β]Z)·B̃ − [π_s]^N·X).
    fn step(&self, z: &[WElem]) -> Result<Vec<WElem>> {
        let w = &self.w;
        let y: Vec<WElem> = self
            .x
            .iter()
            .zip(z)
            .map(|(xi, zi)| w.power_frobenius(&w.add(xi, &w.teichmuller_scale(self.beta, zi))))
            .collect();
        let yb = matrix::vec_mul(w, &y, &self.b);
        yb.iter()
            .zip(&self.x)
            .map(|(u, xi)| {
                let t = w.sub(u, &w.teichmuller_scale(self.pin, xi));
                divide_teichmuller(&w.base, self.alpha, &t)
                    .map_err(|_| Error::NonConvergence("iterate left W_n(𝒪_E)".into()))
            })
            .collect()
    }
}

fn min_increment(model: &LocalFieldModel, a: &[WElem], b: &[WElem]) -> String {
    let mut best: Option<Valuation> = None;
    for (u, v) in a.iter().zip(b) {
        for (x, y) in u.iter().zip(v) {
            let val = model.valuation(&model.sub(x, y));
            best = Some(match best {
                None => val,
                Some(old) => {
                    if val.bound() < old.bound() {
                        val
                    } else {
                        old
                    }
                }
            });
        }
    }
    match best {
        Some(Valuation::Exact(v)) => fmt_rat(&v),
        Some(Valuation::AtLeast(v)) => format!(">={}", fmt_rat(&v)),
        None => "none".into(),
    }
}

/// Successive approximation from a level-a congruence solution to the exact
/// solution of φ(X) = X·Ã, one Witt component at a time.
pub fn lift_solution(x0: &[WElem], prob: &JSetProblem, trace: bool) -> Result<LiftOutcome> {
    let p = prob.p();
    let n = prob.n();
    let d = prob.rank();
    parse_member_len(x0, d, n)?;
    let w = &prob.witt;
    let model = &w.base;
    let out = prob.output_model();
    let out_w = WittRing::new(out.clone(), p, n)?;
    let x: Vec<WElem> = x0.iter().map(|v| v.iter().map(|c| model.element(c)).collect()).collect();
    let x_out = reduce_vec(&out, &x);
    let a_out = reduce_mat(&out, &prob.a_tilde);
    let bp = &prob.b() / pow_rat(p, prob.s as i64);
    let q = residual(w, &x, &prob.a_tilde);
    if reduce_vec(&out, &q).iter().flatten().all(|c| out.is_zero(c)) {
        return Ok(LiftOutcome {
            solution: x_out,
            precision: prob.precision,
            defect_level: None,
            beta_valuation: None,
            gamma: None,
            budget: 0,
            iterations: vec![0; n],
            residual_zero: true,
            congruent_mod_b: true,
            fixed_point: true,
            trace: Vec::new(),
        });
    }
    let e = rint(prob.e());
    let cap = &e / pow_rat(p, n as i64 - 1);
    let mut a_prime = cap.clone();
    for v in &q {
        for (i, c) in v.iter().enumerate() {
            let lvl = model.valuation(c).bound() / pow_rat(p, i as i64);
            if lvl < a_prime {
                a_prime = lvl;
            }
        }
    }
    let step = model.unit_step();
    let grid = floor_int(&(&a_prime / &step));
    let a_grid = Rat::from_integer(grid.clone()) * &step;
    let ap = &prob.a() / pow_rat(p, prob.s as i64);
    if a_grid <= ap {
        return Err(Error::NonConvergence(format!(
            "congruence defect at level {} does not exceed a/p^s = {}; no contraction",
            fmt_rat(&a_prime),
            fmt_rat(&ap)
        )));
    }
    let n_over = Rat::new(BigInt::from(prob.n_exp), BigInt::one()) / pow_rat(p, prob.s as i64);
    let v_beta = &a_grid - &n_over;
    let k_beta = (&v_beta / &step).to_integer().to_usize().expect("grid valuation");
    let beta = model.pow(&model.x(), k_beta as u64);
    let pin = model.pow(&prob.pi_s, prob.n_exp);
    let alpha = model.mul(&pin, &beta);
    let g2 = &v_beta * rint(p - 1) - &n_over;
    let gamma = if v_beta < g2 { v_beta.clone() } else { g2 };
    let target = rint(prob.precision) * &e;
    let budget = ceil_int(&(&target / &gamma)).to_u64().expect("small budget") + 2;

    let mut z: Vec<WElem> = vec![Vec::new(); d];
    let mut per_level = Vec::with_capacity(n);
    let mut steps = Vec::new();
    let mut last: Option<LiftData> = None;
    for k in 1..=n {
        let data = LiftData {
            w: w.truncated(k)?,
            x: truncate_vec(&x, k),
            b: truncate_mat(&prob.b_tilde, k),
            alpha: &alpha,
            beta: &beta,
            pin: &pin,
        };
        for v in z.iter_mut() {
            v.push(model.zero());
        }
        let mut count = 0usize;
        loop {
            let next = data.step(&z)?;
            count += 1;
            if trace {
                steps.push(LiftStep {
                    level: k,
                    iteration: count,
                    increment: min_increment(model, &next, &z),
                });
            }
            let stable = reduce_vec(&out, &next) == reduce_vec(&out, &z);
            z = next;
            if stable {
                break;
            }
            if count as u64 >= budget {
                return Err(Error::NonConvergence(format!(
                    "no fixed point at Witt length {k} within {budget} iterations"
                )));
            }
        }
        per_level.push(count);
        last = Some(data);
    }
    let data = last.expect("n >= 1");
    let fixed_point = reduce_vec(&out, &data.step(&z)?) == reduce_vec(&out, &z);
    let sol: Vec<WElem> = x
        .iter()
        .zip(&z)
        .map(|(xi, zi)| w.add(xi, &w.teichmuller_scale(&beta, zi)))
        .collect();
    let sol = reduce_vec(&out, &sol);
    let residual_zero = residual(&out_w, &sol, &a_out).iter().flatten().all(|c| out.is_zero(c));
    if !residual_zero {
        return Err(Error::Precision(format!(
            "limit does not solve φ(X) = X·Ã at precision {}",
            prob.precision
        )));
    }
    let mut congruent_mod_b = true;
    for (s, x0) in sol.iter().zip(&x_out) {
        congruent_mod_b &= ideal_membership_gt(&out, &out_w.sub(s, x0), &bp, true)?;
    }
    Ok(LiftOutcome {
        solution: sol,
        precision: prob.precision,
        defect_level: Some(a_prime),
        beta_valuation: Some(v_beta),
        gamma: Some(gamma),
        budget,
        iterations: per_level,
        residual_zero,
        congruent_mod_b,
        fixed_point,
        trace: steps,
    })
}

/// Whether X is an exact solution at the problem's output precision.
pub fn is_exact_solution(x: &[WElem], prob: &JSetProblem) -> Result<bool> {
    parse_member_len(x, prob.rank(), prob.n())?;
    let out = prob.output_model();
    let w = WittRing::new(out.clone(), prob.p(), prob.n())?;
    let x: Vec<WElem> = x.iter().map(|v| v.iter().map(|c| out.element(c)).collect()).collect();
    let a = reduce_mat(&out, &prob.a_tilde);
    Ok(residual(&w, &x, &a).iter().flatten().all(|c| out.is_zero(c)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InjectivityVerdict {
    pub equal: bool,
    pub entry: Option<usize>,
    pub component: Option<usize>,
    /// v_K of the separating component.
    #[serde(with = "crate::rat::serde_opt_rat")]
    pub valuation: Option<Rat>,
    /// Largest c with X ≡ Y mod [𝔞^{≥c}]: valuation / p^component.
    #[serde(with = "crate::rat::serde_opt_rat")]
    pub level: Option<Rat>,
    #[serde(with = "serde_rat")]
    pub threshold: Rat,
    /// Distinct solutions separate at or below b/p^s.
    pub consistent: bool,
}

/// Compares two exact solutions against the injectivity threshold b/p^s.
pub fn injectivity_gap(x: &[WElem], y: &[WElem], prob: &JSetProblem) -> Result<InjectivityVerdict> {
    for v in [x, y] {
        if !is_exact_solution(v, prob)? {
            return Err(Error::NotASolution("input is not an exact solution at precision".into()));
        }
    }
    let p = prob.p();
    let out = prob.output_model();
    let w = WittRing::new(out.clone(), p, prob.n())?;
    let threshold = &prob.b() / pow_rat(p, prob.s as i64);
    let mut best: Option<(usize, usize, Rat, Rat)> = None;
    for (j, (u, v)) in x.iter().zip(y).enumerate() {
        let u: WElem = u.iter().map(|c| out.element(c)).collect();
        let v: WElem = v.iter().map(|c| out.element(c)).collect();
        for (i, c) in w.sub(&u, &v).iter().enumerate() {
            if let Valuation::Exact(val) = out.valuation(c) {
                let lvl = &val / pow_rat(p, i as i64);
                if best.as_ref().is_none_or(|b| lvl < b.3) {
                    best = Some((j, i, val, lvl));
                }
            }
        }
    }
    Ok(match best {
        None => InjectivityVerdict {
            equal: true,
            entry: None,
            component: None,
            valuation: None,
            level: None,
            threshold,
            consistent: true,
        },
        Some((j, i, val, lvl)) => InjectivityVerdict {
            equal: false,
            entry: Some(j),
            component: Some(i),
            consistent: lvl <= threshold,
            valuation: Some(val),
            level: Some(lvl),
            threshold,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplittingReport {
    pub a: Rat,
    pub b: Rat,
    pub count_a: usize,
    pub image_b: usize,
    pub count_b: usize,
    pub expected: BigInt,
    pub split: bool,
}

impl Serialize for SplittingReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SplittingReport", 7)?;
        st.serialize_field("a", &fmt_rat(&self.a))?;
        st.serialize_field("b", &fmt_rat(&self.b))?;
        st.serialize_field("count_a", &self.count_a)?;
        st.serialize_field("image_b", &self.image_b)?;
        st.serialize_field("count_b", &self.count_b)?;
        st.serialize_field("expected", &self.expected.to_string())?;
        st.serialize_field("split", &self.split)?;
        st.end()
    }
}

/// |ρ_{a,b}(J_{n,a})| compared with the expected size of T.
pub fn splitting_test(prob: &JSetProblem, expected: &BigInt) -> Result<SplittingReport> {
    let ja = jset_enumerate(&prob.with_level(prob.a())?)?;
    let img = rho_reduce(&ja, &prob.b())?;
    let jb = jset_enumerate(&prob.with_level(prob.b())?)?;
    Ok(SplittingReport {
        a: prob.a(),
        b: prob.b(),
        count_a: ja.len(),
        image_b: img.len(),
        count_b: jb.len(),
        expected: expected.clone(),
        split: BigInt::from(img.len()) == *expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::EisensteinPoly;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn e_lin() -> EisensteinPoly {
        EisensteinPoly::parse("3,1", 3).unwrap()
    }

    fn model(g: &str, e_k: u64) -> LocalFieldModel {
        LocalFieldModel::new(EisensteinPoly::parse(g, 3).unwrap(), 6, e_k).unwrap()
    }

    fn rank_one(entry: &str, n: u32) -> KisinModule {
        let a = crate::kisin::parse_matrix(entry).unwrap();
        KisinModule::reducing(3, n, e_lin(), a, 12).unwrap()
    }

    fn problem(entry: &str, g: &str, r: u32) -> JSetProblem {
        JSetProblem::new(rank_one(entry, 1), &model(g, 1), ProblemParams::new(r, 1)).unwrap()
    }

    fn sextic() -> JSetProblem {
        problem("0,1", "3,0,0,0,0,0,1", 1)
    }

    fn elem(c: &[i64]) -> LocalElement {
        c.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// y^p − y·π_s computed with plain field arithmetic, no Witt vectors.
    fn direct_count(prob: &JSetProblem, level: &Rat) -> usize {
        let m = prob.work_model().with_precision(2).unwrap();
        let pi = m.reduce_from(prob.pi_s());
        let t = level / rint(3);
        m.classes_gt(&t)
            .into_iter()
            .filter(|y| {
                let r = m.sub(&m.pow(y, 3), &m.mul(y, &pi));
                m.valuation(&r).exceeds(&t, true) == Some(true)
            })
            .count()
    }

    #[test]
    fn normalization_holds() {
        let prob = sextic();
        assert_eq!(prob.n_exp(), 1);
        assert_eq!(prob.a(), rat(3, 2));
        assert_eq!(prob.b(), rat(1, 2));
        let m = prob.work_model();
        assert_eq!(prob.pi_s(), &m.pow(&m.x(), 2));
        assert_eq!(prob.a_tilde()[0][0], vec![prob.pi_s().clone()]);
    }

    #[test]
    fn rank_two_normalization() {
        // A = [[0, E], [1, 0]] over 𝔖_1; B̃ must satisfy Ã·B̃ = [π_s]^N exactly
        let a = crate::kisin::parse_matrix("0|3,1;1|0").unwrap();
        let module = KisinModule::reducing(3, 1, e_lin(), a, 12).unwrap();
        let prob = JSetProblem::new(module, &model("3,0,0,0,0,0,1", 1), ProblemParams::new(1, 1)).unwrap();
        let w = &prob.witt;
        let prod = matrix::mul(w, prob.a_tilde(), prob.b_tilde());
        let low = prob.work_model().with_precision(prob.precision() + 2).unwrap();
        let pin = w.base.pow(prob.pi_s(), prob.n_exp());
        let expect = matrix::scalar(w, &w.teichmuller(&pin), 2);
        assert_eq!(reduce_mat(&low, &prod), reduce_mat(&low, &expect));
    }

    #[test]
    fn sextic_counts() {
        let prob = sextic();
        let ja = jset_enumerate(&prob).unwrap();
        assert_eq!(ja.len(), 27);
        assert_eq!(ja.len(), direct_count(&prob, &rat(3, 2)));
        let img = rho_reduce(&ja, &prob.b()).unwrap();
        assert_eq!(img.len(), 3);
        let expect: Vec<Vec<WElem>> = vec![
            vec![vec![elem(&[0, 0, 0, 0, 0, 0])]],
            vec![vec![elem(&[0, 1, 0, 0, 0, 0])]],
            vec![vec![elem(&[0, 2, 0, 0, 0, 0])]],
        ];
        assert_eq!(img.members(), expect.as_slice());
        let rep = splitting_test(&prob, &prob.expected_t_size()).unwrap();
        assert_eq!((rep.image_b, rep.count_b), (3, 3));
        assert!(rep.split);
    }

    #[test]
    fn cubic_counts() {
        let prob = problem("0,1", "3,0,0,1", 1);
        let ja = jset_enumerate(&prob).unwrap();
        assert_eq!(ja.len(), direct_count(&prob, &rat(3, 2)));
        let rep = splitting_test(&prob, &prob.expected_t_size()).unwrap();
        assert_eq!(rep.image_b, 1);
        assert!(!rep.split);
    }

    #[test]
    fn e_module_not_surjective() {
        // φ(𝔢) = E(u)𝔢 over the degree-12 model
        let prob = problem("3,1", "3,0,0,0,0,0,0,0,0,0,0,0,1", 1);
        let rep = splitting_test(&prob, &prob.expected_t_size()).unwrap();
        assert_eq!(rep.image_b, 3);
        assert_eq!(rep.count_b, 9);
        assert_eq!(rep.count_b, direct_count(&prob.with_level(prob.b()).unwrap(), &prob.b()));
    }

    #[test]
    fn trivial_module_counts_p() {
        for g in ["3,0,0,1", "3,0,0,0,0,0,1"] {
            let prob = problem("1", g, 0);
            assert_eq!(prob.n_exp(), 0);
            let rep = splitting_test(&prob, &prob.expected_t_size()).unwrap();
            assert_eq!(rep.image_b, 3);
            assert!(rep.split);
        }
    }

    #[test]
    fn zero_rank() {
        let module = KisinModule::new(3, 1, e_lin(), Vec::new(), 12).unwrap();
        let prob = JSetProblem::new(module, &model("3,0,0,1", 1), ProblemParams::new(1, 1)).unwrap();
        let j = jset_enumerate(&prob).unwrap();
        assert_eq!(j.len(), 1);
        assert!(j.members()[0].is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let prob = sextic().with_cap(80);
        assert!(matches!(jset_enumerate(&prob), Err(Error::CapExceeded { cap: 80, .. })));
    }

    #[test]
    fn invalid_parameters() {
        let module = rank_one("0,1", 1);
        // s = 0 is not above s_min for N = 1
        assert!(JSetProblem::new(module.clone(), &model("3,0,0,1", 1), ProblemParams::new(1, 0)).is_err());
        let mut params = ProblemParams::new(1, 1);
        params.c = Some(rint(3));
        assert!(JSetProblem::new(module.clone(), &model("3,0,0,1", 1), params).is_err());
        // model too small to contain π_1
        assert!(JSetProblem::new(module, &model("3,1", 1), ProblemParams::new(1, 1)).is_err());
    }

    #[test]
    fn composition_law() {
        let prob = sextic();
        let ja = jset_enumerate(&prob).unwrap();
        for (c1, c2) in [(rat(1, 1), rat(1, 2)), (rat(1, 2), rat(1, 4)), (rat(3, 2), rat(0, 1))] {
            let direct = rho_reduce(&ja, &c2).unwrap();
            let via = rho_reduce(&rho_reduce(&ja, &c1).unwrap(), &c2).unwrap();
            assert_eq!(direct.members(), via.members());
            // the image sits inside the enumerated set at the lower level
            let jc = jset_enumerate(&prob.with_level(c2.clone()).unwrap()).unwrap();
            assert!(direct.members().iter().all(|m| jc.contains(m)));
        }
        assert_eq!(rho_reduce(&ja, &rat(3, 2)).unwrap().members(), ja.members());
        assert!(rho_reduce(&ja, &rat(2, 1)).is_err());
    }

    #[test]
    fn lift_examples() {
        let prob = sextic();
        let zero = vec![vec![elem(&[0])]];
        let out = lift_solution(&zero, &prob, false).unwrap();
        assert!(out.solution[0][0].iter().all(|c| c.is_zero()));
        let x0 = vec![vec![elem(&[0, 1, 0, 0, 1, 0])]];
        let out = lift_solution(&x0, &prob, true).unwrap();
        assert!(out.residual_zero && out.fixed_point && out.congruent_mod_b);
        assert_eq!(out.solution[0][0], prob.output_model().x());
        assert_eq!(out.gamma, Some(rat(2, 3)));
        assert!(out.max_iterations() as u64 <= out.budget);
        assert_eq!(out.trace.len(), out.iterations[0]);
    }

    #[test]
    fn lift_from_level_b_fails() {
        let prob = problem("3,1", "3,0,0,0,0,0,0,0,0,0,0,0,1", 1);
        let x0 = vec![vec![elem(&[0, 1])]];
        assert!(matches!(lift_solution(&x0, &prob, false), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn lift_images_match_rho_image() {
        for g in ["3,0,0,1", "3,0,0,0,0,0,1"] {
            let prob = problem("0,1", g, 1);
            let ja = jset_enumerate(&prob).unwrap();
            let mut sols: Vec<Vec<WElem>> = ja
                .members()
                .iter()
                .map(|m| lift_solution(m, &prob, false).unwrap().solution)
                .collect();
            sols.sort();
            sols.dedup();
            let img = rho_reduce(&ja, &prob.b()).unwrap();
            assert_eq!(sols.len(), img.len());
        }
    }

    #[test]
    fn injectivity_examples() {
        let prob = sextic();
        let m = prob.output_model();
        let sols = [m.zero(), m.x(), m.neg(&m.x())];
        for x in &sols {
            for y in &sols {
                let v = injectivity_gap(&[vec![x.clone()]], &[vec![y.clone()]], &prob).unwrap();
                assert!(v.consistent);
                assert_eq!(v.equal, x == y);
                if x != y {
                    assert_eq!(v.level, Some(rat(1, 6)));
                }
            }
        }
        // x + x^2 is congruent to x modulo 𝔞^{>1/6} but is not a solution
        let bad = m.add(&m.x(), &m.pow(&m.x(), 2));
        assert!(matches!(
            injectivity_gap(&[vec![bad]], &[vec![m.x()]], &prob),
            Err(Error::NotASolution(_))
        ));
    }

    /// W_2 by explicit formulas for p = 3.
    fn w2_recheck(m: &LocalFieldModel, x: &[LocalElement], a: &[LocalElement]) -> (LocalElement, LocalElement) {
        let three = m.from_i64(3);
        let add = |u: &[LocalElement], v: &[LocalElement]| {
            let s1 = m.sub(
                &m.add(&u[1], &v[1]),
                &m.add(&m.mul(&m.pow(&u[0], 2), &v[0]), &m.mul(&u[0], &m.pow(&v[0], 2))),
            );
            vec![m.add(&u[0], &v[0]), s1]
        };
        let mul = |u: &[LocalElement], v: &[LocalElement]| {
            let p1 = m.add(
                &m.add(&m.mul(&m.pow(&u[0], 3), &v[1]), &m.mul(&m.pow(&v[0], 3), &u[1])),
                &m.mul(&three, &m.mul(&u[1], &v[1])),
            );
            vec![m.mul(&u[0], &v[0]), p1]
        };
        let phi = vec![m.pow(&x[0], 3), m.pow(&x[1], 3)];
        let xa = mul(x, a);
        let neg = vec![m.neg(&xa[0]), m.neg(&xa[1])];
        let r = add(&phi, &neg);
        (r[0].clone(), r[1].clone())
    }

    #[test]
    fn witt_length_two() {
        // φ(𝔢) = 𝔢 over 𝔖_2 with N = 0
        let a = crate::kisin::parse_matrix("1").unwrap();
        let module = KisinModule::new(3, 2, e_lin(), a, 12).unwrap();
        let mut params = ProblemParams::new(0, 0);
        params.c = Some(Rat::zero());
        let prob = JSetProblem::new(module, &model("3,0,0,1", 1), params).unwrap();
        let j = jset_enumerate(&prob).unwrap();
        assert_eq!(j.len(), 9);
        let low = prob.work_model().with_precision(2).unwrap();
        let a_low = reduce_mat(&low, prob.a_tilde());
        for mem in j.members() {
            let (r0, r1) = w2_recheck(&low, &mem[0], &a_low[0][0]);
            assert!(ideal_membership_gt(&low, &[r0, r1], &Rat::zero(), true).unwrap());
        }
        let rep = splitting_test(&prob, &prob.expected_t_size()).unwrap();
        assert!(rep.split);
        let m = prob.output_model();
        let out = lift_solution(&[vec![m.from_i64(2), m.zero()]], &prob, false).unwrap();
        assert_eq!(out.solution, vec![vec![m.from_i64(-1), m.zero()]]);
        assert_eq!(out.iterations.len(), 2);
        assert!(out.fixed_point && out.congruent_mod_b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lifted_classes_are_fixed_points(idx in 0usize..27) {
            let prob = sextic();
            let ja = jset_enumerate(&prob).unwrap();
            let out = lift_solution(&ja.members()[idx], &prob, false).unwrap();
            prop_assert!(out.residual_zero && out.fixed_point && out.congruent_mod_b);
            prop_assert!(out.max_iterations() as u64 <= out.budget);
            prop_assert!(is_exact_solution(&out.solution, &prob).unwrap());
        }

        #[test]
        fn members_recheck(c in 0i64..4) {
            let prob = sextic().with_level(rat(c, 2)).unwrap();
            let j = jset_enumerate(&prob).unwrap();
            prop_assert_eq!(j.len(), direct_count(&prob, &rat(c, 2)));
        }
    }
}
