//! Finite Morrey sequence spaces `m_{u,p}` on the `2^{jd}` unit cubes of
//! `Q_{-j,0}` and the identity operators between them.
//!
//! The norm is
//! `sup_Q |Q|^{1/u - 1/p} (sum_{k in Q} |x_k|^p)^{1/p}` over dyadic `Q`
//! between the unit cubes and the reference cube.

use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dyadic::{CubeIndexSet, DyadicError};
use crate::params::{rational_to_f64, ExtScalar, ParamError, Rational, SeqSpec};

/// Largest vector length handled by the oracles.
pub const MAX_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeqError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Dyadic(#[from] DyadicError),
    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dimension {0} exceeds the supported maximum {MAX_DIM}")]
    ScaleExceeded(usize),
    #[error("inconsistent level data: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MorreyParams {
    pub u: ExtScalar,
    pub p: ExtScalar,
}

impl MorreyParams {
    /// Requires `1 <= p <= u <= inf`. `u = inf` gives `l_inf` for any `p`.
    pub fn new(u: ExtScalar, p: ExtScalar) -> Result<Self, ParamError> {
        if p < ExtScalar::int(1) {
            return Err(ParamError::OutOfRange {
                name: "p",
                value: p.to_string(),
                expected: "p >= 1",
            });
        }
        if p > u {
            return Err(ParamError::OutOfRange {
                name: "u",
                value: u.to_string(),
                expected: "p <= u",
            });
        }
        Ok(MorreyParams { u, p })
    }

    /// `new` plus the finite-block restriction `u < inf` or `p = u = inf`.
    pub fn admissible(u: ExtScalar, p: ExtScalar) -> Result<Self, ParamError> {
        let m = MorreyParams::new(u, p)?;
        if u.is_infinite() && p.is_finite() {
            return Err(ParamError::OutOfRange {
                name: "u",
                value: u.to_string(),
                expected: "u < inf unless p = inf",
            });
        }
        Ok(m)
    }

    pub fn lp(p: ExtScalar) -> Result<Self, ParamError> {
        MorreyParams::new(p, p)
    }

    pub fn linf() -> Self {
        MorreyParams {
            u: ExtScalar::Infinity,
            p: ExtScalar::Infinity,
        }
    }

    /// `1/u - 1/p`, never positive.
    pub fn weight_exponent(&self) -> Rational {
        self.u.recip() - self.p.recip()
    }

    /// `|Q|^{1/u - 1/p}` for a cube of side `2^nu`.
    pub fn weight(&self, nu: u32, d: u32) -> f64 {
        pow2(self.weight_exponent() * Rational::from_integer((nu * d) as i64))
    }

    /// `p` and `u` given as `1/p` and `1/u`.
    fn inverse_pair(&self) -> (Rational, Rational) {
        (self.p.recip(), self.u.recip())
    }
}

pub(crate) fn pow2(e: Rational) -> f64 {
    rational_to_f64(e).exp2()
}

/// Per-level leaf-to-block maps for a fixed `(j, d)`.
#[derive(Clone, Debug)]
pub struct Layout {
    pub j: u32,
    pub d: u32,
    index: CubeIndexSet,
    maps: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(j: u32, d: u32) -> Result<Self, SeqError> {
        let index = CubeIndexSet::new(j, d)?;
        let maps = (0..=j).map(|nu| index.block_map(nu)).collect();
        Ok(Layout { j, d, index, maps })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self) -> &CubeIndexSet {
        &self.index
    }

    /// Block id of leaf `k` at level `-nu`.
    pub fn block(&self, nu: u32, k: usize) -> usize {
        self.maps[nu as usize][k]
    }

    pub fn blocks_at(&self, nu: u32) -> usize {
        self.index.blocks_at(nu)
    }

    pub fn norm(&self, params: &MorreyParams, coeffs: &[f64]) -> f64 {
        debug_assert_eq!(coeffs.len(), self.len());
        if params.p.is_infinite() {
            return coeffs.iter().fold(0.0, |m, c| m.max(c.abs()));
        }
        let p = params.p.to_f64();
        let powered: Vec<f64> = coeffs.iter().map(|c| abs_pow(*c, p)).collect();
        let mut sums = vec![0.0; self.len()];
        let mut best = 0.0f64;
        for nu in 0..=self.j {
            let blocks = self.blocks_at(nu);
            sums[..blocks].iter_mut().for_each(|s| *s = 0.0);
            for (k, v) in powered.iter().enumerate() {
                sums[self.maps[nu as usize][k]] += v;
            }
            let w = params.weight(nu, self.d);
            for s in &sums[..blocks] {
                best = best.max(w * root(*s, p));
            }
        }
        best
    }

    /// Level and block of a cube attaining the norm of `coeffs`.
    pub fn norming_cube(&self, params: &MorreyParams, coeffs: &[f64]) -> (u32, usize) {
        if params.p.is_infinite() {
            let k = (0..self.len()).fold(0, |b, k| {
                if coeffs[k].abs() > coeffs[b].abs() {
                    k
                } else {
                    b
                }
            });
            return (0, k);
        }
        let p = params.p.to_f64();
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for nu in 0..=self.j {
            let mut sums = vec![0.0; self.blocks_at(nu)];
            for (k, c) in coeffs.iter().enumerate() {
                sums[self.maps[nu as usize][k]] += abs_pow(*c, p);
            }
            let w = params.weight(nu, self.d);
            for (b, s) in sums.iter().enumerate() {
                let v = w * root(*s, p);
                if v > best.0 {
                    best = (v, nu, b);
                }
            }
        }
        (best.1, best.2)
    }

    /// Embeds a vector on `Q_{-mu, 0}`, given in that cube's own leaf order.
    fn embed_subtree(&self, mu: u32, local: &[f64]) -> Vec<f64> {
        let sub = CubeIndexSet::new(mu, self.d).expect("smaller than layout");
        let mut out = vec![0.0; self.len()];
        for (k, v) in local.iter().enumerate() {
            let idx = self
                .index
                .index_of(&sub.offset_of(k))
                .expect("inside reference cube");
            out[idx] = *v;
        }
        out
    }
}

fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x.abs()
    } else {
        x.abs().powf(p)
    }
}

fn root(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        s
    } else {
        s.powf(1.0 / p)
    }
}

pub(crate) fn check_scale(j: u32, d: u32) -> Result<usize, SeqError> {
    let bits = j as u64 * d as u64;
    if bits > 8 {
        return Err(SeqError::ScaleExceeded(if bits < 63 {
            1usize << bits
        } else {
            usize::MAX
        }));
    }
    Ok(1usize << bits)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MorreyVector {
    pub j: u32,
    pub d: u32,
    pub params: MorreyParams,
    pub coeffs: Vec<f64>,
}

impl MorreyVector {
    pub fn new(j: u32, d: u32, params: MorreyParams, coeffs: Vec<f64>) -> Result<Self, SeqError> {
        let set = CubeIndexSet::new(j, d)?;
        if coeffs.len() != set.len() {
            return Err(SeqError::LengthMismatch {
                expected: set.len(),
                got: coeffs.len(),
            });
        }
        Ok(MorreyVector {
            j,
            d,
            params,
            coeffs,
        })
    }

    pub fn norm(&self) -> f64 {
        Layout::new(self.j, self.d)
            .expect("validated at construction")
            .norm(&self.params, &self.coeffs)
    }
}

pub fn norm_m(v: &MorreyVector) -> f64 {
    v.norm()
}

/// One level of a truncated sequence in `n^sigma_{u,p,q}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelVector {
    pub sigma: Rational,
    pub vector: MorreyVector,
}

impl LevelVector {
    pub fn new(
        sigma: Rational,
        level: u32,
        d: u32,
        params: MorreyParams,
        coeffs: Vec<f64>,
    ) -> Result<Self, SeqError> {
        Ok(LevelVector {
            sigma,
            vector: MorreyVector::new(level, d, params, coeffs)?,
        })
    }

    pub fn level(&self) -> u32 {
        self.vector.j
    }

    /// Unweighted level norm, the `m^{(j)}_{u,p}` norm.
    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }
}

/// Sequence-space norm restricted to levels `0..=J`, `J = levels.len() - 1`.
pub fn norm_truncated(levels: &[LevelVector], q: ExtScalar) -> Result<f64, SeqError> {
    let Some(first) = levels.first() else {
        return Ok(0.0);
    };
    let (sigma, params, d) = (first.sigma, first.vector.params, first.vector.d);
    if !q.is_positive() {
        return Err(ParamError::OutOfRange {
            name: "q",
            value: q.to_string(),
            expected: "0 < q <= inf",
        }
        .into());
    }
    let mut terms = Vec::with_capacity(levels.len());
    for (j, lv) in levels.iter().enumerate() {
        if lv.level() as usize != j
            || lv.sigma != sigma
            || lv.vector.params != params
            || lv.vector.d != d
        {
            return Err(SeqError::Inconsistent(format!(
                "level {j} does not match level 0 parameters"
            )));
        }
        let dim = Rational::from_integer(d as i64);
        let scale = pow2(Rational::from_integer(j as i64) * (sigma - dim * params.u.recip()));
        terms.push(scale * lv.norm());
    }
    Ok(match q {
        ExtScalar::Infinity => terms.iter().fold(0.0, |m, t| m.max(*t)),
        ExtScalar::Finite(qr) => {
            let qf = rational_to_f64(qr);
            terms.iter().map(|t| t.powf(qf)).sum::<f64>().powf(1.0 / qf)
        }
    })
}

/// Same as [`norm_truncated`] with the parameters taken from a [`SeqSpec`].
pub fn norm_truncated_spec(levels: &[Vec<f64>], spec: &SeqSpec) -> Result<f64, SeqError> {
    let params = MorreyParams::new(spec.u, spec.p)?;
    let lv = levels
        .iter()
        .enumerate()
        .map(|(j, c)| LevelVector::new(spec.sigma, j as u32, spec.d, params, c.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    norm_truncated(&lv, spec.q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpNormCase {
    /// Target is `l_inf`.
    TargetLinf,
    /// Source is `l_inf`; value `2^{jd/u2}`.
    SourceLinf,
    /// `p1 >= p2`, `u2 >= u1`.
    Contractive,
    /// `p1 < p2`, `p2/u2 <= p1/u1`.
    ContractiveMixed,
    /// `p1 >= p2`, `u2 < u1`; value `2^{jd(1/u2 - 1/u1)}`.
    Weighted,
    /// Remaining case, known up to a constant.
    Sandwich,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OpNormFormula {
    pub value: f64,
    pub exact: bool,
    pub case: OpNormCase,
}

/// Closed-form norm of `id: m_{u1,p1} -> m_{u2,p2}` on `2^{jd}` cubes.
pub fn op_norm_formula(src: MorreyParams, dst: MorreyParams, j: u32, d: u32) -> OpNormFormula {
    let jd = Rational::from_integer((j * d) as i64);
    let (ip1, iu1) = src.inverse_pair();
    let (ip2, iu2) = dst.inverse_pair();
    let exact = |case, e: Rational| OpNormFormula {
        value: pow2(jd * e),
        exact: true,
        case,
    };
    if dst.u.is_infinite() {
        return exact(OpNormCase::TargetLinf, Rational::zero());
    }
    if src.u.is_infinite() {
        return exact(OpNormCase::SourceLinf, iu2);
    }
    // p/u = (1/u)/(1/p); both finite here
    let ratio1 = iu1 / ip1;
    let ratio2 = iu2 / ip2;
    if src.p >= dst.p && dst.u >= src.u {
        exact(OpNormCase::Contractive, Rational::zero())
    } else if src.p < dst.p && ratio2 <= ratio1 {
        exact(OpNormCase::ContractiveMixed, Rational::zero())
    } else if src.p >= dst.p {
        exact(OpNormCase::Weighted, iu2 - iu1)
    } else {
        OpNormFormula {
            value: pow2(jd * (iu2 - ratio1 * ip2)),
            exact: false,
            case: OpNormCase::Sandwich,
        }
    }
}

/// Certified two-sided bound on an operator norm with a witness vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpNormBracket {
    pub lower: f64,
    pub upper: f64,
    pub witness: Vec<f64>,
}

impl OpNormBracket {
    pub fn is_tight(&self, tol: f64) -> bool {
        self.upper - self.lower <= tol * self.upper.max(1.0)
    }
}

/// Max-plus convolution of a level profile with itself over `2^d` children.
fn children_profile(child: &[f64], fan_out: usize) -> Vec<f64> {
    let mut acc = child.to_vec();
    for _ in 1..fan_out {
        let mut next = vec![f64::NEG_INFINITY; acc.len() + child.len() - 1];
        for (a, va) in acc.iter().enumerate() {
            for (b, vb) in child.iter().enumerate() {
                let v = va + vb;
                if v > next[a + b] {
                    next[a + b] = v;
                }
            }
        }
        acc = next;
    }
    acc
}

/// `profile[i]` = largest total mass any `i` leaves can carry in the
/// source ball after the substitution `y = |x|^p`.
fn mass_profile(caps: &[f64], d: u32) -> Vec<f64> {
    let fan_out = 1usize << d;
    let mut prof = vec![0.0, 1.0];
    for cap in &caps[1..] {
        prof = children_profile(&prof, fan_out)
            .into_iter()
            .map(|v| v.min(*cap))
            .collect();
    }
    prof
}

/// Increments of the least concave majorant, in decreasing order.
fn concave_increments(prof: &[f64]) -> Vec<f64> {
    let mut hull: Vec<usize> = vec![0];
    for i in 1..prof.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let lhs = (prof[b] - prof[a]) * (i - a) as f64;
            let rhs = (prof[i] - prof[a]) * (b - a) as f64;
            if lhs <= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut inc = Vec::with_capacity(prof.len() - 1);
    for w in hull.windows(2) {
        let slope = (prof[w[1]] - prof[w[0]]) / (w[1] - w[0]) as f64;
        inc.extend(std::iter::repeat_n(slope, w[1] - w[0]));
    }
    inc
}

/// Greedy vertex of the source polymatroid: each step fills the leaf with
/// the most remaining room.
fn greedy_vertex(caps: &[f64], layout: &Layout) -> Vec<f64> {
    let n = layout.len();
    let levels = caps.len() - 1;
    let mut used: Vec<Vec<f64>> = (0..=levels)
        .map(|l| vec![0.0; layout.blocks_at(l as u32)])
        .collect();
    let mut y = vec![f64::NAN; n];
    for _ in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for k in 0..n {
            if !y[k].is_nan() {
                continue;
            }
            let mut room = 1.0f64;
            for l in 1..=levels {
                room = room.min(caps[l] - used[l][layout.block(l as u32, k)]);
            }
            let room = room.max(0.0);
            if best.is_none_or(|(r, _)| room > r) {
                best = Some((room, k));
            }
        }
        let (room, k) = best.expect("unassigned leaf remains");
        y[k] = room;
        for l in 1..=levels {
            used[l][layout.block(l as u32, k)] += room;
        }
    }
    y
}

/// Exact norm bracket for `p2 >= p1` (or an `l_inf` side).
///
/// With `y = |x|^{p1}` the source ball is a polymatroid with laminar caps,
/// and the target `p2`-sums are convex in `y`. The maximum over a level
/// `mu` subtree is bounded by majorization against the best mass profile
/// and attained by the greedy vertex.
pub fn op_norm_bracket(
    src: MorreyParams,
    dst: MorreyParams,
    j: u32,
    d: u32,
) -> Result<Option<OpNormBracket>, SeqError> {
    let n = check_scale(j, d)?;
    let layout = Layout::new(j, d)?;
    let ratio = |x: &[f64]| layout.norm(&dst, x) / layout.norm(&src, x);
    if dst.p.is_infinite() {
        let mut spike = vec![0.0; n];
        spike[0] = 1.0;
        return Ok(Some(OpNormBracket {
            lower: 1.0,
            upper: 1.0,
            witness: spike,
        }));
    }
    if src.p.is_infinite() || src.u.is_infinite() {
        let ones = vec![1.0; n];
        let v = ratio(&ones);
        return Ok(Some(OpNormBracket {
            lower: v,
            upper: layout.norm(&dst, &ones),
            witness: ones,
        }));
    }
    if dst.p < src.p {
        return Ok(None);
    }
    let p1 = src.p.to_f64();
    let p2 = dst.p.to_f64();
    let r = p2 / p1;
    let one = Rational::one();
    let cap_exp = one - src.u.recip() / src.p.recip();
    let caps: Vec<f64> = (0..=j)
        .map(|l| pow2(cap_exp * Rational::from_integer((l * d) as i64)))
        .collect();

    let mut upper = 0.0f64;
    let mut best = (0.0f64, vec![]);
    for mu in 0..=j {
        let prof = mass_profile(&caps[..=mu as usize], d);
        let top: f64 = concave_increments(&prof).iter().map(|z| z.powf(r)).sum();
        upper = upper.max(dst.weight(mu, d) * top.powf(1.0 / p2));

        let sub = Layout::new(mu, d)?;
        let y = greedy_vertex(&caps[..=mu as usize], &sub);
        let local: Vec<f64> = y.iter().map(|v| v.powf(1.0 / p1)).collect();
        let x = layout.embed_subtree(mu, &local);
        let v = ratio(&x);
        if v > best.0 {
            best = (v, x);
        }
    }
    Ok(Some(OpNormBracket {
        lower: best.0,
        upper: upper.max(best.0),
        witness: best.1,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "level")]
pub enum Candidate {
    Spike,
    AllOnes,
    Spread(u32),
    Block(u32),
    Vertex,
    Sample(usize),
}

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub samples: usize,
    pub seed: u64,
    pub deadline: Option<Instant>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            samples: 10_000,
            seed: 0,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    /// Largest ratio found over all candidates.
    pub value: f64,
    pub argmax: Vec<f64>,
    pub candidate: Candidate,
    /// Largest ratio among the random samples alone.
    pub sampled_max: f64,
    pub samples_drawn: usize,
    pub timed_out: bool,
}

/// One unit entry at the first leaf of every level `-nu` cube.
pub fn spread_vector(layout: &Layout, nu: u32) -> Vec<f64> {
    let side = 1i64 << nu;
    (0..layout.len())
        .map(|k| {
            let off = layout.index().offset_of(k);
            if off.iter().all(|m| m % side == 0) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Indicator of the first level `-mu` cube.
pub fn block_vector(layout: &Layout, mu: u32) -> Vec<f64> {
    (0..layout.len())
        .map(|k| if layout.block(mu, k) == 0 { 1.0 } else { 0.0 })
        .collect()
}

/// Seeded random nonnegative test vector; the shape cycles with `i`.
pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, i: usize) -> Vec<f64> {
    match i % 3 {
        0 => (0..n).map(|_| rng.gen::<f64>()).collect(),
        1 => {
            let mut v: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        rng.gen::<f64>()
                    } else {
                        0.0
                    }
                })
                .collect();
            let k = rng.gen_range(0..n);
            v[k] = v[k].max(rng.gen::<f64>() + f64::EPSILON);
            v
        }
        _ => (0..n).map(|_| rng.gen::<f64>().powi(4)).collect(),
    }
}

/// Lower bound on `||id: m_src -> m_dst||` from a candidate family plus
/// seeded random samples.
pub fn op_norm_lower_oracle(
    src: MorreyParams,
    dst: MorreyParams,
    j: u32,
    d: u32,
    opts: &OracleOptions,
) -> Result<OracleResult, SeqError> {
    let n = check_scale(j, d)?;
    let layout = Layout::new(j, d)?;
    let ratio = |x: &[f64]| {
        let s = layout.norm(&src, x);
        if s == 0.0 {
            0.0
        } else {
            layout.norm(&dst, x) / s
        }
    };
    let mut best = (f64::NEG_INFINITY, Vec::new(), Candidate::Spike);
    let offer = |v: f64, x: Vec<f64>, c: Candidate, best: &mut (f64, Vec<f64>, Candidate)| {
        if v > best.0 {
            *best = (v, x, c);
        }
    };
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        offer(ratio(&e), e, Candidate::Spike, &mut best);
    }
    let ones = vec![1.0; n];
    offer(ratio(&ones), ones, Candidate::AllOnes, &mut best);
    for nu in 0..=j {
        let s = spread_vector(&layout, nu);
        offer(ratio(&s), s, Candidate::Spread(nu), &mut best);
        let b = block_vector(&layout, nu);
        offer(ratio(&b), b, Candidate::Block(nu), &mut best);
    }
    if let Some(br) = op_norm_bracket(src, dst, j, d)? {
        offer(ratio(&br.witness), br.witness, Candidate::Vertex, &mut best);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sampled_max = 0.0f64;
    let mut drawn = 0;
    let mut timed_out = false;
    for i in 0..opts.samples {
        if i % 256 == 0 {
            if let Some(dl) = opts.deadline {
                if Instant::now() > dl {
                    timed_out = true;
                    break;
                }
            }
        }
        let x = random_vector(&mut rng, n, i);
        let v = ratio(&x);
        drawn += 1;
        if v > sampled_max {
            sampled_max = v;
        }
        offer(v, x, Candidate::Sample(i), &mut best);
    }
    Ok(OracleResult {
        value: best.0,
        argmax: best.1,
        candidate: best.2,
        sampled_max,
        samples_drawn: drawn,
        timed_out,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn conjugate(p: ExtScalar) -> ExtScalar {
    // 1/p' = 1 - 1/p
    ExtScalar::from_recip(Rational::one() - p.recip())
}

/// Lower bound on the dual norm of `v` from explicit test vectors `w`.
pub fn dual_norm_lower(v: &MorreyVector, opts: &OracleOptions) -> Result<f64, SeqError> {
    check_scale(v.j, v.d)?;
    let layout = Layout::new(v.j, v.d)?;
    let n = layout.len();
    let params = v.params;
    let pd = conjugate(params.p);
    let mut best = 0.0f64;
    let mut try_w = |w: &[f64]| {
        let nw = layout.norm(&params, w);
        if nw > 0.0 {
            best = best.max(dot(&v.coeffs, w).abs() / nw);
        }
    };
    let shaped: Vec<f64> = v
        .coeffs
        .iter()
        .map(|c| match pd {
            ExtScalar::Infinity => c.signum() * (c.abs() > 0.0) as u8 as f64,
            ExtScalar::Finite(e) => c.signum() * c.abs().powf(rational_to_f64(e) - 1.0),
        })
        .collect();
    for nu in 0..=v.j {
        for b in 0..layout.blocks_at(nu) {
            let mask = |k: usize| layout.block(nu, k) == b;
            let holder: Vec<f64> = (0..n)
                .map(|k| if mask(k) { shaped[k] } else { 0.0 })
                .collect();
            try_w(&holder);
            let signs: Vec<f64> = (0..n)
                .map(|k| {
                    if mask(k) {
                        v.coeffs[k].signum() * (v.coeffs[k] != 0.0) as u8 as f64
                    } else {
                        0.0
                    }
                })
                .collect();
            try_w(&signs);
        }
        let s = spread_vector(&layout, nu);
        let signed: Vec<f64> = s
            .iter()
            .zip(&v.coeffs)
            .map(|(a, c)| a * c.signum())
            .collect();
        try_w(&signed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for i in 0..opts.samples {
        let mag = random_vector(&mut rng, n, i);
        let w: Vec<f64> = mag
            .iter()
            .zip(&v.coeffs)
            .map(|(m, c)| m * c.signum())
            .collect();
        try_w(&w);
    }
    Ok(best)
}

/// Upper bound on the dual norm of `v` by splitting `v` along the cubes of
/// one level and summing `||v_Q||_{p'} / |Q|^{1/u - 1/p}`; the best level wins.
pub fn dual_norm_upper(v: &MorreyVector) -> Result<f64, SeqError> {
    let layout = Layout::new(v.j, v.d)?;
    Ok(dual_norm_upper_with(&layout, &v.params, &v.coeffs))
}

pub fn dual_norm_upper_with(layout: &Layout, params: &MorreyParams, coeffs: &[f64]) -> f64 {
    let pd = conjugate(params.p);
    let mut best = f64::INFINITY;
    for nu in 0..=layout.j {
        let blocks = layout.blocks_at(nu);
        let mut acc = vec![0.0f64; blocks];
        for (k, c) in coeffs.iter().enumerate() {
            let b = layout.block(nu, k);
            acc[b] = match pd {
                ExtScalar::Infinity => acc[b].max(c.abs()),
                ExtScalar::Finite(e) => acc[b] + abs_pow(*c, rational_to_f64(e)),
            };
        }
        let total: f64 = match pd {
            ExtScalar::Infinity => acc.iter().sum(),
            ExtScalar::Finite(e) => acc.iter().map(|s| root(*s, rational_to_f64(e))).sum(),
        };
        best = best.min(total / params.weight(nu, layout.d));
    }
    best
}
