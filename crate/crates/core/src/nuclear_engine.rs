//! Nuclear norms of diagonal maps and of the identities
//! `id_j: m_{u1,p1} -> m_{u2,p2}` on `2^{jd}` cubes.
//!
//! Upper bounds come as explicit representations `T = sum_k a_k(.) y_k`
//! whose cost `sum_k ||a_k|| ||y_k||` is stored with the terms. Lower bounds
//! come from trace duality: `|tr(T S)| / ||S||` for a witness `S`.

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::morrey_seq::{
    check_scale, dot, dual_norm_upper_with, op_norm_bracket, op_norm_formula, pow2, spread_vector,
    Layout, MorreyParams, SeqError,
};
use crate::params::{
    min_one_ratio, pos, rational_to_f64, serialize_opt_rational, serialize_rational, tong_number,
    ExtScalar, ParamError, Rational, SeqSpec,
};

/// Full sign families are enumerated up to this length.
pub const SIGN_FAMILY_MAX: usize = 12;

/// Diagonal entries of `D_tau`.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagonal {
    Finite(Vec<Rational>),
    /// `tau_k = first * ratio^(k-1)` for `k >= 1`.
    Geometric {
        first: Rational,
        ratio: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TongNuclear {
    Nuclear {
        t: ExtScalar,
        value: f64,
        /// `||tau||_t^t` when `t` is an integer, `sup |tau_k|` when `t = inf`.
        #[serde(serialize_with = "serialize_opt_rational")]
        exact: Option<Rational>,
    },
    NotNuclear {
        t: ExtScalar,
    },
}

impl TongNuclear {
    pub fn value(&self) -> Option<f64> {
        match self {
            TongNuclear::Nuclear { value, .. } => Some(*value),
            TongNuclear::NotNuclear { .. } => None,
        }
    }
}

fn check_r(name: &'static str, r: ExtScalar) -> Result<(), ParamError> {
    if r < ExtScalar::int(1) {
        return Err(ParamError::OutOfRange {
            name,
            value: r.to_string(),
            expected: "1 <= r <= inf",
        });
    }
    Ok(())
}

fn int_pow(x: Rational, k: i64) -> Option<Rational> {
    let mut acc = Rational::one();
    for _ in 0..k {
        acc = acc.checked_mul(&x)?;
    }
    Some(acc)
}

/// Nuclear norm of `D_tau: l_r1 -> l_r2`, which is `||tau||_t` for the
/// Tong number `t = t(r1, r2)`. At `t = inf` nuclearity means `tau in c_0`.
pub fn tong_diag_nuclear(
    tau: &Diagonal,
    r1: ExtScalar,
    r2: ExtScalar,
) -> Result<TongNuclear, ParamError> {
    check_r("r1", r1)?;
    check_r("r2", r2)?;
    let t = tong_number(r1, r2)?;
    let int_t = t
        .finite()
        .filter(|v| v.is_integer())
        .map(|v| v.to_integer());
    match tau {
        Diagonal::Finite(v) => match t {
            ExtScalar::Infinity => {
                let m = v
                    .iter()
                    .map(|x| x.abs())
                    .max()
                    .unwrap_or_else(Rational::zero);
                Ok(TongNuclear::Nuclear {
                    t,
                    value: rational_to_f64(m),
                    exact: Some(m),
                })
            }
            ExtScalar::Finite(tr) => {
                let tf = rational_to_f64(tr);
                let value = v
                    .iter()
                    .map(|x| rational_to_f64(x.abs()).powf(tf))
                    .sum::<f64>()
                    .powf(1.0 / tf);
                let exact = int_t.and_then(|k| {
                    v.iter().try_fold(Rational::zero(), |acc, x| {
                        acc.checked_add(&int_pow(x.abs(), k)?)
                    })
                });
                Ok(TongNuclear::Nuclear { t, value, exact })
            }
        },
        Diagonal::Geometric { first, ratio } => {
            let (a, q) = (first.abs(), ratio.abs());
            if a.is_zero() {
                return Ok(TongNuclear::Nuclear {
                    t,
                    value: 0.0,
                    exact: Some(Rational::zero()),
                });
            }
            if q >= Rational::one() {
                return Ok(TongNuclear::NotNuclear { t });
            }
            match t {
                ExtScalar::Infinity => Ok(TongNuclear::Nuclear {
                    t,
                    value: rational_to_f64(a),
                    exact: Some(a),
                }),
                ExtScalar::Finite(tr) => {
                    let tf = rational_to_f64(tr);
                    let (af, qf) = (rational_to_f64(a), rational_to_f64(q));
                    let value = (af.powf(tf) / (1.0 - qf.powf(tf))).powf(1.0 / tf);
                    let exact = int_t.and_then(|k| {
                        let num = int_pow(a, k)?;
                        let den = Rational::one().checked_sub(&int_pow(q, k)?)?;
                        num.checked_div(&den)
                    });
                    Ok(TongNuclear::Nuclear { t, value, exact })
                }
            }
        }
    }
}

/// One rank-one piece `a(.) y` with its stored norms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Term {
    pub functional: Vec<f64>,
    pub output: Vec<f64>,
    pub dual_norm_bound: f64,
    pub norm: f64,
}

impl Term {
    pub fn cost(&self) -> f64 {
        self.dual_norm_bound * self.norm
    }
}

/// Terms of a representation, either listed or generated from one pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TermSet {
    Explicit {
        terms: Vec<Term>,
    },
    /// The `n^2` terms `(scale * h_i . b(. ^ t), h_i . c(. ^ t))` over leaf
    /// translations `t` and Hadamard columns `h_i`. Translations permute the
    /// dyadic cubes of every level and `h_i` flips signs, so all terms share
    /// the stored norms.
    Orbit {
        functional: Vec<f64>,
        output: Vec<f64>,
        scale: f64,
        dual_norm_bound: f64,
        norm: f64,
    },
}

fn hadamard(i: usize, k: usize) -> f64 {
    if (i & k).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl TermSet {
    pub fn len(&self) -> usize {
        match self {
            TermSet::Explicit { terms } => terms.len(),
            TermSet::Orbit { functional, .. } => functional.len() * functional.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = Term> + '_> {
        match self {
            TermSet::Explicit { terms } => Box::new(terms.iter().cloned()),
            TermSet::Orbit {
                functional,
                output,
                scale,
                dual_norm_bound,
                norm,
            } => {
                let n = functional.len();
                Box::new((0..n * n).map(move |idx| {
                    let (t, i) = (idx / n, idx % n);
                    Term {
                        functional: (0..n)
                            .map(|k| scale * hadamard(i, k) * functional[k ^ t])
                            .collect(),
                        output: (0..n).map(|k| hadamard(i, k) * output[k ^ t]).collect(),
                        dual_norm_bound: scale.abs() * dual_norm_bound,
                        norm: *norm,
                    }
                }))
            }
        }
    }

    /// Sum of the stored per-term costs.
    pub fn cost(&self) -> f64 {
        match self {
            TermSet::Explicit { terms } => terms.iter().map(Term::cost).sum(),
            TermSet::Orbit {
                scale,
                dual_norm_bound,
                norm,
                ..
            } => self.len() as f64 * (scale.abs() * dual_norm_bound * norm),
        }
    }

    /// Matrix of `x -> sum_k a_k(x) y_k`, row = output coordinate.
    pub fn matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        match self {
            TermSet::Explicit { terms } => {
                for term in terms {
                    for (r, yr) in term.output.iter().enumerate() {
                        if *yr == 0.0 {
                            continue;
                        }
                        for (c, ac) in term.functional.iter().enumerate() {
                            m[r][c] += yr * ac;
                        }
                    }
                }
            }
            TermSet::Orbit {
                functional,
                output,
                scale,
                ..
            } => {
                let gram: Vec<Vec<f64>> = (0..n)
                    .map(|r| {
                        (0..n)
                            .map(|c| (0..n).map(|i| hadamard(i, r) * hadamard(i, c)).sum())
                            .collect()
                    })
                    .collect();
                for r in 0..n {
                    for c in 0..n {
                        if gram[r][c] == 0.0 {
                            continue;
                        }
                        let s: f64 = (0..n).map(|t| output[r ^ t] * functional[c ^ t]).sum();
                        m[r][c] = scale * gram[r][c] * s;
                    }
                }
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "nu0")]
pub enum Construction {
    /// `sum_i e_i* (.) e_i`.
    UnitVectors,
    /// Averaged rank-one sign patterns.
    SignFamily,
    /// Hadamard columns on the full block.
    Hadamard,
    /// Weighted sign family for a diagonal map.
    Diagonal,
    /// Symmetrized one-entry-per-cube pattern at level `-nu0`.
    EpsilonOrbit(u32),
    /// Symmetrized extremal pair of the reverse identity.
    ExtremalOrbit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuclearCertificate {
    pub terms: TermSet,
    pub bound: f64,
    /// Entrywise max of `reconstruction - target`.
    pub reconstruction_error: f64,
    pub construction: Construction,
}

impl NuclearCertificate {
    fn build(terms: TermSet, target: &[f64], construction: Construction) -> Self {
        let n = target.len();
        let m = terms.matrix(n);
        let mut err = 0.0f64;
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let want = if r == c { target[r] } else { 0.0 };
                err = err.max((v - want).abs());
            }
        }
        NuclearCertificate {
            bound: terms.cost(),
            terms,
            reconstruction_error: err,
            construction,
        }
    }
}

/// Sign vectors `eps_k` with weight `w` such that `w sum_k eps_k eps_k^T = I`.
fn sign_family(n: usize) -> (Vec<Vec<f64>>, f64) {
    if n <= SIGN_FAMILY_MAX {
        let fam = (0..1usize << n)
            .map(|m| {
                (0..n)
                    .map(|k| if m >> k & 1 == 1 { -1.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        (fam, 1.0 / (1u64 << n) as f64)
    } else {
        let big = n.next_power_of_two();
        let fam = (0..big)
            .map(|i| (0..n).map(|k| hadamard(i, k)).collect())
            .collect();
        (fam, 1.0 / big as f64)
    }
}

fn lp_norm(x: &[f64], p: ExtScalar) -> f64 {
    match p {
        ExtScalar::Infinity => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        ExtScalar::Finite(r) => {
            let pf = rational_to_f64(r);
            x.iter()
                .map(|v| v.abs().powf(pf))
                .sum::<f64>()
                .powf(1.0 / pf)
        }
    }
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

/// `id: l_inf^n -> l_1^n` as `sum_i e_i* (.) e_i`; bound `n`.
pub fn rep_linf_to_l1(n: usize) -> NuclearCertificate {
    let terms = (0..n)
        .map(|k| Term {
            functional: unit(n, k),
            output: unit(n, k),
            dual_norm_bound: 1.0,
            norm: 1.0,
        })
        .collect();
    NuclearCertificate::build(
        TermSet::Explicit { terms },
        &vec![1.0; n],
        Construction::UnitVectors,
    )
}

/// `id: l_1^n -> l_inf^n` as an average of `eps (x) eps`; bound 1.
pub fn rep_l1_to_linf(n: usize) -> NuclearCertificate {
    let (fam, w) = sign_family(n);
    let terms = fam
        .into_iter()
        .map(|e| Term {
            functional: e.iter().map(|v| w * v).collect(),
            output: e,
            dual_norm_bound: w,
            norm: 1.0,
        })
        .collect();
    NuclearCertificate::build(
        TermSet::Explicit { terms },
        &vec![1.0; n],
        Construction::SignFamily,
    )
}

/// Representation of `D_tau: l_r1^n -> l_r2^n` with cost `||tau||_t`.
pub fn rep_diagonal(
    tau: &[f64],
    r1: ExtScalar,
    r2: ExtScalar,
) -> Result<NuclearCertificate, ParamError> {
    check_r("r1", r1)?;
    check_r("r2", r2)?;
    let n = tau.len();
    let t = tong_number(r1, r2)?;
    let r1d = ExtScalar::from_recip(Rational::one() - r1.recip());
    if t == ExtScalar::int(1) {
        let terms = tau
            .iter()
            .enumerate()
            .map(|(k, v)| Term {
                functional: unit(n, k).iter().map(|e| e * v).collect(),
                output: unit(n, k),
                dual_norm_bound: v.abs(),
                norm: 1.0,
            })
            .collect();
        return Ok(NuclearCertificate::build(
            TermSet::Explicit { terms },
            tau,
            Construction::Diagonal,
        ));
    }
    let (alpha, beta): (Vec<f64>, Vec<f64>) = match t {
        ExtScalar::Infinity => (vec![1.0; n], tau.to_vec()),
        ExtScalar::Finite(tr) => tau
            .iter()
            .map(|v| {
                if *v == 0.0 {
                    return (0.0, 0.0);
                }
                let a = v
                    .abs()
                    .powf(rational_to_f64(tr * (Rational::one() - r1.recip())));
                let b = v.abs().powf(rational_to_f64(tr * r2.recip()));
                (a, v.signum() * b)
            })
            .unzip(),
    };
    let (fam, w) = sign_family(n);
    let terms = fam
        .into_iter()
        .map(|e| {
            let functional: Vec<f64> = e.iter().zip(&alpha).map(|(s, a)| w * s * a).collect();
            let output: Vec<f64> = e.iter().zip(&beta).map(|(s, b)| s * b).collect();
            Term {
                dual_norm_bound: lp_norm(&functional, r1d),
                norm: lp_norm(&output, r2),
                functional,
                output,
            }
        })
        .collect();
    Ok(NuclearCertificate::build(
        TermSet::Explicit { terms },
        tau,
        Construction::Diagonal,
    ))
}

/// Trace-duality lower bound `|tr(T S)| / ||S||`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityBound {
    #[serde(skip)]
    pub witness_operator: Vec<Vec<f64>>,
    /// Certified upper bound on the witness norm.
    pub witness_norm: f64,
    pub trace_value: f64,
    pub lower_bound: f64,
}

impl DualityBound {
    fn new(witness_operator: Vec<Vec<f64>>, target: &[f64], witness_norm: f64) -> Self {
        let trace_value: f64 = target
            .iter()
            .enumerate()
            .map(|(k, t)| t * witness_operator[k][k])
            .sum();
        DualityBound {
            lower_bound: if witness_norm > 0.0 {
                trace_value.abs() / witness_norm
            } else {
                0.0
            },
            witness_operator,
            witness_norm,
            trace_value,
        }
    }
}

fn diag_matrix(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    (0..n)
        .map(|r| (0..n).map(|c| if r == c { v[r] } else { 0.0 }).collect())
        .collect()
}

/// Norm of a diagonal map `l_a^n -> l_b^n`.
pub fn diagonal_op_norm(sigma: &[f64], a: ExtScalar, b: ExtScalar) -> f64 {
    if a <= b {
        lp_norm(sigma, ExtScalar::Infinity)
    } else {
        lp_norm(sigma, ExtScalar::from_recip(b.recip() - a.recip()))
    }
}

/// Diagonal witness `sign(tau) |tau|^{t-1}` attaining the Tong value.
pub fn tong_witness(tau: &[f64], r1: ExtScalar, r2: ExtScalar) -> Result<Vec<f64>, ParamError> {
    let t = tong_number(r1, r2)?;
    Ok(match t {
        ExtScalar::Infinity => {
            let k = (0..tau.len()).fold(0, |b, k| if tau[k].abs() > tau[b].abs() { k } else { b });
            let mut s = vec![0.0; tau.len()];
            if !tau.is_empty() {
                s[k] = tau[k].signum();
            }
            s
        }
        ExtScalar::Finite(tr) => {
            let e = rational_to_f64(tr) - 1.0;
            tau.iter()
                .map(|v| {
                    if *v == 0.0 {
                        0.0
                    } else {
                        v.signum() * v.abs().powf(e)
                    }
                })
                .collect()
        }
    })
}

/// Duality bound for `D_tau: l_r1^n -> l_r2^n` with a diagonal witness
/// `S: l_r2^n -> l_r1^n`.
pub fn tong_duality_bound(
    tau: &[f64],
    r1: ExtScalar,
    r2: ExtScalar,
    witness: &[f64],
) -> Result<DualityBound, ParamError> {
    check_r("r1", r1)?;
    check_r("r2", r2)?;
    if witness.len() != tau.len() {
        return Err(ParamError::Domain(
            "witness length differs from the diagonal".into(),
        ));
    }
    let norm = diagonal_op_norm(witness, r2, r1);
    Ok(DualityBound::new(diag_matrix(witness), tau, norm))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuclearCase {
    /// `p1 <= p2`, `u2 <= u1`.
    Embedding,
    /// `p1 > p2`, `p1/u1 <= p2/u2`.
    MixedEmbedding,
    /// Source `l_inf`.
    SourceLinf,
    /// `p1 <= p2`, `u1 < u2`.
    Weighted,
    /// `p1 > p2`, `p1/u1 > p2/u2`; known up to a constant.
    Sandwich,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NuclearFormula {
    pub value: f64,
    pub exact: bool,
    pub case: NuclearCase,
    /// `log2(value) / (jd)`.
    #[serde(serialize_with = "serialize_rational")]
    pub exponent: Rational,
}

fn check_pair(src: MorreyParams, dst: MorreyParams) -> Result<(), ParamError> {
    MorreyParams::admissible(src.u, src.p)?;
    MorreyParams::admissible(dst.u, dst.p)?;
    Ok(())
}

/// Closed-form nuclear norm of `id_j` up to the sandwich constant.
pub fn nuclear_formula_id_j(
    src: MorreyParams,
    dst: MorreyParams,
    j: u32,
    d: u32,
) -> Result<NuclearFormula, ParamError> {
    check_pair(src, dst)?;
    let one = Rational::one();
    let (ip1, iu1) = (src.p.recip(), src.u.recip());
    let (ip2, iu2) = (dst.p.recip(), dst.u.recip());
    let (case, exponent) = if src.p.is_infinite() {
        (NuclearCase::SourceLinf, one)
    } else if src.p <= dst.p {
        if dst.u <= src.u {
            (NuclearCase::Embedding, one)
        } else {
            (NuclearCase::Weighted, one - iu1 + iu2)
        }
    } else if iu1 / ip1 <= iu2 / ip2 {
        (NuclearCase::MixedEmbedding, one)
    } else {
        // 1 + p2/(p1 u2) - 1/u1
        (NuclearCase::Sandwich, one + ip1 * iu2 / ip2 - iu1)
    };
    Ok(NuclearFormula {
        value: pow2(exponent * Rational::from_integer((j * d) as i64)),
        exact: case != NuclearCase::Sandwich,
        case,
        exponent,
    })
}

/// Smallest `nu >= 1` with `2^{nu d} >= 2^{jd p2/u2}`.
pub fn nu0(dst: MorreyParams, j: u32) -> u32 {
    let ratio = dst.u.recip() / dst.p.recip();
    let need = (Rational::from_integer(j as i64) * ratio)
        .ceil()
        .to_integer();
    let v = need.max(1) as u32;
    assert!(v <= j.max(1), "nu0 exceeds j");
    v
}

/// One-entry-per-cube sign patterns at level `-nu0`, sampled uniformly.
#[derive(Clone, Debug)]
pub struct EpsilonFamily {
    pub j: u32,
    pub d: u32,
    pub nu0: u32,
    pub dst: MorreyParams,
    layout: Layout,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub expected: Vec<f64>,
}

impl MonteCarlo {
    /// Largest deviation from the expectation in standard errors.
    pub fn max_z(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.expected)
            .zip(&self.std_err)
            .map(|((m, e), s)| {
                let dev = (m - e).abs();
                if *s > 0.0 {
                    dev / s
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

impl EpsilonFamily {
    /// Requires `p2 < u2 < inf` and `j >= 1`.
    pub fn new(dst: MorreyParams, j: u32, d: u32) -> Result<Self, SeqError> {
        check_scale(j, d)?;
        if !(dst.u.is_finite() && dst.p < dst.u) || j == 0 {
            return Err(ParamError::Domain(
                "the pattern family needs p2 < u2 < inf and j >= 1".into(),
            )
            .into());
        }
        Ok(EpsilonFamily {
            j,
            d,
            nu0: nu0(dst, j),
            dst,
            layout: Layout::new(j, d)?,
        })
    }

    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cubes(&self) -> usize {
        self.layout.blocks_at(self.nu0)
    }

    /// One uniformly chosen leaf with a random sign in each level `-nu0` cube.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let per = 1usize << (self.nu0 * self.d);
        let mut members: Vec<Vec<usize>> = vec![Vec::with_capacity(per); self.cubes()];
        for k in 0..self.len() {
            members[self.layout.block(self.nu0, k)].push(k);
        }
        let mut eps = vec![0.0; self.len()];
        for m in &members {
            let k = m[rng.gen_range(0..m.len())];
            eps[k] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        eps
    }

    pub fn target_norm(&self, eps: &[f64]) -> f64 {
        self.layout.norm(&self.dst, eps)
    }

    /// Hoelder bound on the source dual norm of any member.
    pub fn analytic_dual_bound(&self, src: MorreyParams) -> f64 {
        let jd = Rational::from_integer((self.j * self.d) as i64);
        let free = Rational::from_integer(((self.j - self.nu0) * self.d) as i64);
        pow2(jd * (src.p.recip() - src.u.recip()) + free * (Rational::one() - src.p.recip()))
    }

    /// `2^{nu0 d}` times the dual bound.
    pub fn analytic_nuclear_bound(&self, src: MorreyParams) -> f64 {
        pow2(Rational::from_integer((self.nu0 * self.d) as i64)) * self.analytic_dual_bound(src)
    }

    /// Sample mean of `eps(lambda) eps`, expected `2^{-nu0 d} lambda`.
    pub fn monte_carlo(&self, lambda: &[f64], samples: usize, seed: u64) -> MonteCarlo {
        let n = self.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = vec![0.0; n];
        let mut sq = vec![0.0; n];
        for _ in 0..samples {
            let e = self.sample(&mut rng);
            let a = dot(&e, lambda);
            for k in 0..n {
                let x = a * e[k];
                sum[k] += x;
                sq[k] += x * x;
            }
        }
        let s = samples as f64;
        let mean: Vec<f64> = sum.iter().map(|v| v / s).collect();
        let std_err = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| ((q / s - m * m).max(0.0) * s / (s - 1.0).max(1.0)).sqrt() / s.sqrt())
            .collect();
        let w = pow2(-Rational::from_integer((self.nu0 * self.d) as i64));
        MonteCarlo {
            samples,
            mean,
            std_err,
            expected: lambda.iter().map(|v| v * w).collect(),
        }
    }
}

fn morrey_term(
    layout: &Layout,
    src: &MorreyParams,
    dst: &MorreyParams,
    functional: Vec<f64>,
    output: Vec<f64>,
) -> Term {
    Term {
        dual_norm_bound: dual_norm_upper_with(layout, src, &functional),
        norm: layout.norm(dst, &output),
        functional,
        output,
    }
}

/// Orbit certificate from a pair `(b, c)` with `<b, c> != 0`.
fn orbit_certificate(
    layout: &Layout,
    src: &MorreyParams,
    dst: &MorreyParams,
    b: Vec<f64>,
    c: Vec<f64>,
    construction: Construction,
) -> NuclearCertificate {
    let n = layout.len();
    let scale = 1.0 / (n as f64 * dot(&b, &c));
    let terms = TermSet::Orbit {
        dual_norm_bound: dual_norm_upper_with(layout, src, &b),
        norm: layout.norm(dst, &c),
        functional: b,
        output: c,
        scale,
    };
    NuclearCertificate::build(terms, &vec![1.0; n], construction)
}

/// Upper certificate for `id_j`, chosen by case.
pub fn nuclear_upper_id_j(
    src: MorreyParams,
    dst: MorreyParams,
    j: u32,
    d: u32,
) -> Result<NuclearCertificate, SeqError> {
    let formula = nuclear_formula_id_j(src, dst, j, d)?;
    let n = check_scale(j, d)?;
    let layout = Layout::new(j, d)?;
    let ones = vec![1.0; n];
    match formula.case {
        NuclearCase::Embedding | NuclearCase::MixedEmbedding | NuclearCase::SourceLinf => {
            let terms = (0..n)
                .map(|k| morrey_term(&layout, &src, &dst, unit(n, k), unit(n, k)))
                .collect();
            Ok(NuclearCertificate::build(
                TermSet::Explicit { terms },
                &ones,
                Construction::UnitVectors,
            ))
        }
        NuclearCase::Weighted => {
            let terms = (0..n)
                .map(|i| {
                    let h: Vec<f64> = (0..n).map(|k| hadamard(i, k)).collect();
                    morrey_term(
                        &layout,
                        &src,
                        &dst,
                        h.iter().map(|v| v / n as f64).collect(),
                        h,
                    )
                })
                .collect();
            Ok(NuclearCertificate::build(
                TermSet::Explicit { terms },
                &ones,
                Construction::Hadamard,
            ))
        }
        NuclearCase::Sandwich => {
            if j == 0 {
                let terms = vec![morrey_term(&layout, &src, &dst, vec![1.0], vec![1.0])];
                return Ok(NuclearCertificate::build(
                    TermSet::Explicit { terms },
                    &ones,
                    Construction::UnitVectors,
                ));
            }
            let v0 = nu0(dst, j);
            let a = spread_vector(&layout, v0);
            let spread = orbit_certificate(
                &layout,
                &src,
                &dst,
                a.clone(),
                a,
                Construction::EpsilonOrbit(v0),
            );

            let reverse = op_norm_bracket(dst, src, j, d)?.expect("reverse map raises p");
            let c = reverse.witness;
            let (nu, block) = layout.norming_cube(&src, &c);
            let p1 = src.p.to_f64();
            let mass: f64 = (0..n)
                .filter(|k| layout.block(nu, *k) == block)
                .map(|k| c[k].abs().powf(p1))
                .sum();
            let local = mass.powf(1.0 / p1);
            let w = src.weight(nu, d);
            let b: Vec<f64> = (0..n)
                .map(|k| {
                    if layout.block(nu, k) != block || c[k] == 0.0 {
                        0.0
                    } else {
                        w * c[k].signum() * c[k].abs().powf(p1 - 1.0) / local.powf(p1 - 1.0)
                    }
                })
                .collect();
            let extremal =
                orbit_certificate(&layout, &src, &dst, b, c, Construction::ExtremalOrbit);
            Ok(if extremal.bound <= spread.bound {
                extremal
            } else {
                spread
            })
        }
    }
}

/// Trace-duality lower bound for `id_j` with the reverse identity as witness.
pub fn nuclear_lower_id_j(
    src: MorreyParams,
    dst: MorreyParams,
    j: u32,
    d: u32,
) -> Result<DualityBound, SeqError> {
    nuclear_formula_id_j(src, dst, j, d)?;
    let n = check_scale(j, d)?;
    let mut witness_norm = op_norm_formula(dst, src, j, d).value;
    if let Some(br) = op_norm_bracket(dst, src, j, d)? {
        witness_norm = witness_norm.min(br.upper);
    }
    Ok(DualityBound::new(
        diag_matrix(&vec![1.0; n]),
        &vec![1.0; n],
        witness_norm,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSum {
    /// Partial sums for `J = 0, 1, ...`.
    pub partial_sums: Vec<f64>,
    /// Ratio of consecutive summands, `2^exponent`.
    pub ratio: f64,
    #[serde(serialize_with = "serialize_rational")]
    pub exponent: Rational,
}

/// Partial sums of `sum_j 2^{j e}`, `e = -delta + d(1 - (1/u1 - min{1, p2/p1}/u2)_+)`,
/// `delta = sigma1 - sigma2 - d/u1 + d/u2`.
pub fn level_sum_bound(src: &SeqSpec, dst: &SeqSpec, levels: u32) -> Result<LevelSum, ParamError> {
    src.validate()?;
    dst.validate()?;
    if src.d != dst.d {
        return Err(ParamError::DimensionMismatch(src.d, dst.d));
    }
    let d = Rational::from_integer(src.d as i64);
    let delta = src.sigma - dst.sigma - d * src.u.recip() + d * dst.u.recip();
    let inner = pos(src.u.recip() - min_one_ratio(dst.p, src.p) * dst.u.recip());
    let exponent = -delta + d * (Rational::one() - inner);
    let ratio = pow2(exponent);
    let mut acc = 0.0;
    let partial_sums = (0..=levels)
        .map(|j| {
            acc += pow2(exponent * Rational::from_integer(j as i64));
            acc
        })
        .collect();
    Ok(LevelSum {
        partial_sums,
        ratio,
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: i64, d: i64) -> ExtScalar {
        ExtScalar::ratio(n, d)
    }

    fn mp(u: ExtScalar, p: ExtScalar) -> MorreyParams {
        MorreyParams::new(u, p).unwrap()
    }

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn tong_examples() {
        let inf = ExtScalar::Infinity;
        let ones = Diagonal::Finite(vec![r(1); 4]);
        let v = tong_diag_nuclear(&ones, x(2, 1), x(2, 1)).unwrap();
        assert_eq!(v.value(), Some(4.0));
        let v = tong_diag_nuclear(&ones, x(1, 1), inf).unwrap();
        assert_eq!(
            v,
            TongNuclear::Nuclear {
                t: inf,
                value: 1.0,
                exact: Some(r(1))
            }
        );
        let v = tong_diag_nuclear(&Diagonal::Finite(vec![r(3), r(4)]), x(2, 1), x(2, 1)).unwrap();
        assert_eq!(v.value(), Some(7.0));
        let geo = Diagonal::Geometric {
            first: Rational::new(1, 2),
            ratio: Rational::new(1, 2),
        };
        let v = tong_diag_nuclear(&geo, x(2, 1), x(4, 1))
            .unwrap()
            .value()
            .unwrap();
        let direct: f64 = (1..200)
            .map(|k| 2f64.powf(-4.0 * k as f64 / 3.0))
            .sum::<f64>()
            .powf(0.75);
        assert!((v - direct).abs() < 1e-14);
        let flat = Diagonal::Geometric {
            first: r(1),
            ratio: r(1),
        };
        assert!(matches!(
            tong_diag_nuclear(&flat, inf, inf).unwrap(),
            TongNuclear::NotNuclear { .. }
        ));
        assert!(tong_diag_nuclear(&ones, x(1, 2), x(2, 1)).is_err());
    }

    #[test]
    fn elementary_representations() {
        for n in [1, 2, 4, 13] {
            let c = rep_linf_to_l1(n);
            assert_eq!((c.bound, c.reconstruction_error), (n as f64, 0.0));
            let c = rep_l1_to_linf(n);
            assert_eq!((c.bound, c.reconstruction_error), (1.0, 0.0));
        }
        assert_eq!(rep_l1_to_linf(2).terms.len(), 4);
    }

    #[test]
    fn diagonal_certificate_matches_witness() {
        let inf = ExtScalar::Infinity;
        let tau = [0.5, -2.0, 1.5];
        for r1 in [x(1, 1), x(2, 1), x(3, 1), inf] {
            for r2 in [x(1, 1), x(3, 2), x(2, 1), inf] {
                let cert = rep_diagonal(&tau, r1, r2).unwrap();
                assert!(cert.reconstruction_error < 1e-12);
                let w = tong_witness(&tau, r1, r2).unwrap();
                let low = tong_duality_bound(&tau, r1, r2, &w).unwrap();
                assert!(
                    (cert.bound - low.lower_bound).abs() < 1e-12,
                    "{r1} {r2}: {} vs {}",
                    cert.bound,
                    low.lower_bound
                );
            }
        }
    }

    #[test]
    fn formula_examples() {
        let f = nuclear_formula_id_j(mp(x(1, 1), x(1, 1)), mp(x(2, 1), x(1, 1)), 1, 1).unwrap();
        assert!((f.value - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.case, NuclearCase::Weighted);
        let f = nuclear_formula_id_j(mp(x(2, 1), x(2, 1)), mp(x(4, 1), x(1, 1)), 3, 1).unwrap();
        assert_eq!(f.case, NuclearCase::Sandwich);
        assert!(!f.exact);
        let f = nuclear_formula_id_j(mp(x(4, 1), x(1, 1)), mp(x(2, 1), x(2, 1)), 2, 1).unwrap();
        assert_eq!((f.value, f.case), (4.0, NuclearCase::Embedding));
        assert!(
            nuclear_formula_id_j(mp(ExtScalar::Infinity, x(2, 1)), mp(x(2, 1), x(2, 1)), 1, 1)
                .is_err()
        );
    }

    #[test]
    fn nu0_examples() {
        assert_eq!(nu0(mp(x(2, 1), x(1, 1)), 4), 2);
        assert_eq!(nu0(mp(x(3, 1), x(1, 1)), 4), 2);
        assert_eq!(nu0(mp(x(100, 1), x(1, 1)), 3), 1);
    }

    #[test]
    fn sandwich_certificates_meet_duality() {
        let grid = [
            mp(x(2, 1), x(1, 1)),
            mp(x(4, 1), x(1, 1)),
            mp(x(2, 1), x(2, 1)),
            mp(x(4, 1), x(2, 1)),
            mp(x(4, 1), x(4, 1)),
        ];
        for src in grid {
            for dst in grid {
                for (j, d) in [(1, 1), (2, 1), (3, 1), (1, 2)] {
                    let up = nuclear_upper_id_j(src, dst, j, d).unwrap();
                    let low = nuclear_lower_id_j(src, dst, j, d).unwrap();
                    assert!(up.reconstruction_error < 1e-10);
                    assert!(low.lower_bound <= up.bound * (1.0 + 1e-9));
                    let f = nuclear_formula_id_j(src, dst, j, d).unwrap();
                    if f.exact {
                        assert!((up.bound - f.value).abs() < 1e-9 * f.value);
                        assert!((low.lower_bound - f.value).abs() < 1e-9 * f.value);
                    }
                }
            }
        }
    }

    #[test]
    fn orbit_terms_share_norms() {
        let (src, dst) = (mp(x(2, 1), x(2, 1)), mp(x(4, 1), x(1, 1)));
        let cert = nuclear_upper_id_j(src, dst, 2, 1).unwrap();
        let layout = Layout::new(2, 1).unwrap();
        let total: f64 = cert
            .terms
            .iter()
            .map(|t| {
                dual_norm_upper_with(&layout, &src, &t.functional) * layout.norm(&dst, &t.output)
            })
            .sum();
        assert!((total - cert.bound).abs() < 1e-12);
    }

    #[test]
    fn epsilon_family_members_have_unit_norm() {
        let fam = EpsilonFamily::new(mp(x(2, 1), x(1, 1)), 4, 1).unwrap();
        assert_eq!(fam.nu0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let e = fam.sample(&mut rng);
            assert_eq!(fam.target_norm(&e), 1.0);
            assert_eq!(e.iter().filter(|v| **v != 0.0).count(), fam.cubes());
        }
    }

    #[test]
    fn level_sum_examples() {
        let inf = ExtScalar::Infinity;
        let s1 = SeqSpec::new(r(1), x(2, 1), x(1, 1), inf, 1).unwrap();
        let s2 = SeqSpec::new(r(0), x(2, 1), x(1, 1), inf, 1).unwrap();
        let ls = level_sum_bound(&s1, &s2, 5).unwrap();
        assert_eq!(ls.exponent, r(0));
        assert_eq!(ls.partial_sums, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s0 = SeqSpec::new(Rational::new(3, 2), x(2, 1), x(1, 1), inf, 1).unwrap();
        let ls = level_sum_bound(&s0, &s2, 20).unwrap();
        assert_eq!(ls.exponent, Rational::new(-1, 2));
        assert!(ls
            .partial_sums
            .iter()
            .all(|s| *s <= 1.0 / (1.0 - 2f64.powf(-0.5))));
    }
}
