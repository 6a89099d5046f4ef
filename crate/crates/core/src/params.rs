//! Exact parameter arithmetic for smoothness spaces.
//!
//! Every parameter lives in [`ExtScalar`], an exact rational extended by a
//! single positive infinity. Threshold functions return exact rationals so
//! that strict inequalities can be decided without rounding.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

pub type Rational = Rational64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("parameter {name} = {value} out of range: expected {expected}")]
    OutOfRange {
        name: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported pair: {0}")]
    UnsupportedPair(String),
    #[error("invalid number '{0}'")]
    InvalidNumber(String),
}

fn out_of_range(
    name: &'static str,
    value: impl fmt::Display,
    expected: &'static str,
) -> ParamError {
    ParamError::OutOfRange {
        name,
        value: value.to_string(),
        expected,
    }
}

/// Exact rational or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtScalar {
    Finite(Rational),
    Infinity,
}

impl ExtScalar {
    pub const INFINITY: ExtScalar = ExtScalar::Infinity;

    pub fn int(n: i64) -> Self {
        ExtScalar::Finite(Rational::from_integer(n))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        ExtScalar::Finite(Rational::new(numer, denom))
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtScalar::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    pub fn finite(self) -> Option<Rational> {
        match self {
            ExtScalar::Finite(r) => Some(r),
            ExtScalar::Infinity => None,
        }
    }

    pub fn is_positive(self) -> bool {
        match self {
            ExtScalar::Finite(r) => r.is_positive(),
            ExtScalar::Infinity => true,
        }
    }

    /// Reciprocal of a positive value, with `1/inf = 0`.
    ///
    /// Panics on non-positive input; callers validate ranges first.
    pub fn recip(self) -> Rational {
        match self {
            ExtScalar::Finite(r) => {
                assert!(r.is_positive(), "reciprocal of non-positive {r}");
                r.recip()
            }
            ExtScalar::Infinity => Rational::zero(),
        }
    }

    /// Inverse of [`recip`](Self::recip): `0 -> inf`.
    pub fn from_recip(r: Rational) -> Self {
        if r.is_zero() {
            ExtScalar::Infinity
        } else {
            ExtScalar::Finite(r.recip())
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtScalar::Finite(r) => rational_to_f64(r),
            ExtScalar::Infinity => f64::INFINITY,
        }
    }
}

impl From<Rational> for ExtScalar {
    fn from(r: Rational) -> Self {
        ExtScalar::Finite(r)
    }
}

impl From<i64> for ExtScalar {
    fn from(n: i64) -> Self {
        ExtScalar::int(n)
    }
}

impl PartialOrd for ExtScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => a.cmp(b),
            (ExtScalar::Finite(_), ExtScalar::Infinity) => Ordering::Less,
            (ExtScalar::Infinity, ExtScalar::Finite(_)) => Ordering::Greater,
            (ExtScalar::Infinity, ExtScalar::Infinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtScalar::Finite(r) => write!(f, "{}", format_rational(*r)),
            ExtScalar::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtScalar {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "inf" | "+inf" | "∞" | "infinity" => Ok(ExtScalar::Infinity),
            _ => parse_rational(t).map(ExtScalar::Finite),
        }
    }
}

impl Serialize for ExtScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Canonical text form: `3`, `-1/2`.
pub fn format_rational(r: Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `a`, `a/b`, or a finite decimal such as `1.25`.
/// Serializes a rational as `a/b` text.
pub fn serialize_rational<S: Serializer>(r: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_str(&format_rational(*r))
}

/// [`serialize_rational`] for optional values.
pub fn serialize_opt_rational<S: Serializer>(
    r: &Option<Rational>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    match r {
        Some(v) => serialize_rational(v, serializer),
        None => serializer.serialize_none(),
    }
}

pub fn parse_rational(t: &str) -> Result<Rational, ParamError> {
    let bad = || ParamError::InvalidNumber(t.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let whole: i64 = match int {
            "" | "-" | "+" => 0,
            _ => int.parse().map_err(|_| bad())?,
        };
        let scale = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let magnitude = Rational::from_integer(whole.abs()) + Rational::new(f, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    t.parse::<i64>()
        .map(Rational::from_integer)
        .map_err(|_| bad())
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `max(x, 0)`.
pub fn pos(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

/// `min(1, a/b)` for positive `a, b`, with `inf/inf = 1`.
pub fn min_one_ratio(a: ExtScalar, b: ExtScalar) -> Rational {
    match (a, b) {
        (ExtScalar::Infinity, _) => Rational::one(),
        (ExtScalar::Finite(_), ExtScalar::Infinity) => Rational::zero(),
        (ExtScalar::Finite(x), ExtScalar::Finite(y)) => (x / y).min(Rational::one()),
    }
}

fn check_exponent(name: &'static str, r: ExtScalar) -> Result<(), ParamError> {
    if r < ExtScalar::int(1) {
        return Err(out_of_range(name, r, "1 <= r <= inf"));
    }
    Ok(())
}

/// Reciprocal of the Tong number: `1 - (1/r1 - 1/r2)_+`.
pub fn tong_exponent(r1: ExtScalar, r2: ExtScalar) -> Result<Rational, ParamError> {
    check_exponent("r1", r1)?;
    check_exponent("r2", r2)?;
    Ok(Rational::one() - pos(r1.recip() - r2.recip()))
}

/// The Tong number governing nuclearity of diagonal maps `l_r1 -> l_r2`.
pub fn tong_number(r1: ExtScalar, r2: ExtScalar) -> Result<ExtScalar, ParamError> {
    tong_exponent(r1, r2).map(ExtScalar::from_recip)
}

/// `p*` with `1/p* = (1/r2 - 1/r1)_+`.
pub fn p_star(r1: ExtScalar, r2: ExtScalar) -> Result<ExtScalar, ParamError> {
    check_exponent("r1", r1)?;
    check_exponent("r2", r2)?;
    Ok(ExtScalar::from_recip(pos(r2.recip() - r1.recip())))
}

fn check_tau_pair(tau: Rational, p: ExtScalar, min_p: ExtScalar) -> Result<(), ParamError> {
    if tau.is_negative() {
        return Err(out_of_range("tau", format_rational(tau), "tau >= 0"));
    }
    if p < min_p || !p.is_positive() {
        return Err(out_of_range("p", p, "admissible integrability"));
    }
    Ok(())
}

/// Compactness threshold between spaces of Besov/Triebel type with Morrey
/// parameter `tau`. Accepts `0 < p <= inf`.
pub fn gamma(
    tau1: Rational,
    tau2: Rational,
    p1: ExtScalar,
    p2: ExtScalar,
) -> Result<Rational, ParamError> {
    let zero = ExtScalar::int(0);
    check_tau_pair(tau1, p1, zero)?;
    check_tau_pair(tau2, p2, zero)?;
    let (ip1, ip2) = (p1.recip(), p2.recip());
    let value = if tau2 >= ip2 {
        ip1 - tau1 - ip2 + tau2
    } else if tau1 >= ip1 {
        ip1 - tau1
    } else {
        // both p finite on this branch
        let scaled = tau1 * ip2 / ip1;
        pos(ip1 - tau1 - ip2 + tau2.max(scaled))
    };
    Ok(value)
}

/// Nuclearity threshold counterpart of [`gamma`]; requires `p >= 1`.
pub fn gamma_bar(
    tau1: Rational,
    tau2: Rational,
    p1: ExtScalar,
    p2: ExtScalar,
) -> Result<Rational, ParamError> {
    let one = ExtScalar::int(1);
    check_tau_pair(tau1, p1, one)?;
    check_tau_pair(tau2, p2, one)?;
    let (ip1, ip2) = (p1.recip(), p2.recip());
    let value = if tau1 >= ip1 {
        Rational::one() + ip1 - tau1 - ip2 + tau2
    } else if tau2 >= ip2 {
        Rational::one() - ip2 + tau2
    } else {
        let scaled = tau2 * ip1 / ip2;
        Rational::one() - pos(ip2 - tau2 - ip1 + tau1.max(scaled))
    };
    Ok(value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Scale {
    B,
    F,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::B => "B",
            Scale::F => "F",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    BesovMorrey,
    TriebelMorrey,
    BesovTau,
    TriebelTau,
    ClassicalB,
    ClassicalF,
    RhoB,
    RhoF,
    Lr,
    Bmo,
    Linf,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::BesovMorrey => "N",
            Family::TriebelMorrey => "E",
            Family::BesovTau => "Btau",
            Family::TriebelTau => "Ftau",
            Family::ClassicalB => "B",
            Family::ClassicalF => "F",
            Family::RhoB => "rhoB",
            Family::RhoF => "rhoF",
            Family::Lr => "Lr",
            Family::Bmo => "bmo",
            Family::Linf => "Linf",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Family> {
        Some(match tag {
            "N" => Family::BesovMorrey,
            "E" => Family::TriebelMorrey,
            "Btau" => Family::BesovTau,
            "Ftau" => Family::TriebelTau,
            "B" => Family::ClassicalB,
            "F" => Family::ClassicalF,
            "rhoB" => Family::RhoB,
            "rhoF" => Family::RhoF,
            "Lr" => Family::Lr,
            "bmo" => Family::Bmo,
            "Linf" => Family::Linf,
            _ => return None,
        })
    }
}

/// Which of the two identities links a `rho`-clan space to the standard scales.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoForm {
    /// Morrey form, `u = -d p / rho`.
    Morrey,
    /// Tau form, `tau = (1 + rho/d) / p`.
    Tau,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceSpec {
    Morrey {
        scale: Scale,
        s: Rational,
        u: ExtScalar,
        p: ExtScalar,
        q: ExtScalar,
        d: u32,
    },
    Tau {
        scale: Scale,
        s: Rational,
        p: ExtScalar,
        tau: Rational,
        q: ExtScalar,
        d: u32,
    },
    Classical {
        scale: Scale,
        s: Rational,
        p: ExtScalar,
        q: ExtScalar,
        d: u32,
    },
    Rho {
        scale: Scale,
        s: Rational,
        p: ExtScalar,
        rho: Rational,
        q: ExtScalar,
        d: u32,
    },
    Lr {
        r: ExtScalar,
        d: u32,
    },
    Bmo {
        d: u32,
    },
    Linf {
        d: u32,
    },
}

fn check_dim(d: u32) -> Result<(), ParamError> {
    if d == 0 {
        return Err(out_of_range("d", d, "d >= 1"));
    }
    Ok(())
}

fn check_q(q: ExtScalar) -> Result<(), ParamError> {
    if !q.is_positive() {
        return Err(out_of_range("q", q, "0 < q <= inf"));
    }
    Ok(())
}

fn check_morrey_pair(u: ExtScalar, p: ExtScalar) -> Result<(), ParamError> {
    if !p.is_positive() {
        return Err(out_of_range("p", p, "p > 0"));
    }
    if p > u {
        return Err(out_of_range("u", u, "p <= u"));
    }
    if u.is_infinite() && p.is_finite() {
        return Err(out_of_range("u", u, "u < inf unless p = u = inf"));
    }
    Ok(())
}

impl SpaceSpec {
    pub fn family(&self) -> Family {
        use SpaceSpec::*;
        match *self {
            Morrey {
                scale: Scale::B, ..
            } => Family::BesovMorrey,
            Morrey {
                scale: Scale::F, ..
            } => Family::TriebelMorrey,
            Tau {
                scale: Scale::B, ..
            } => Family::BesovTau,
            Tau {
                scale: Scale::F, ..
            } => Family::TriebelTau,
            Classical {
                scale: Scale::B, ..
            } => Family::ClassicalB,
            Classical {
                scale: Scale::F, ..
            } => Family::ClassicalF,
            Rho {
                scale: Scale::B, ..
            } => Family::RhoB,
            Rho {
                scale: Scale::F, ..
            } => Family::RhoF,
            Lr { .. } => Family::Lr,
            Bmo { .. } => Family::Bmo,
            Linf { .. } => Family::Linf,
        }
    }

    pub fn dim(&self) -> u32 {
        use SpaceSpec::*;
        match *self {
            Morrey { d, .. }
            | Tau { d, .. }
            | Classical { d, .. }
            | Rho { d, .. }
            | Lr { d, .. }
            | Bmo { d }
            | Linf { d } => d,
        }
    }

    pub fn smoothness(&self) -> Option<Rational> {
        use SpaceSpec::*;
        match *self {
            Morrey { s, .. } | Tau { s, .. } | Classical { s, .. } | Rho { s, .. } => Some(s),
            _ => None,
        }
    }

    pub fn scale(&self) -> Option<Scale> {
        use SpaceSpec::*;
        match *self {
            Morrey { scale, .. }
            | Tau { scale, .. }
            | Classical { scale, .. }
            | Rho { scale, .. } => Some(scale),
            _ => None,
        }
    }

    /// `(p, q)` for the smoothness scales.
    pub fn integrability(&self) -> Option<(ExtScalar, ExtScalar)> {
        use SpaceSpec::*;
        match *self {
            Morrey { p, q, .. } | Tau { p, q, .. } | Classical { p, q, .. } | Rho { p, q, .. } => {
                Some((p, q))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_dim(self.dim())?;
        match *self {
            SpaceSpec::Morrey { scale, u, p, q, .. } => {
                check_morrey_pair(u, p)?;
                check_q(q)?;
                if scale == Scale::F && u.is_infinite() {
                    return Err(out_of_range("u", u, "u < inf for the F-scale"));
                }
            }
            SpaceSpec::Tau {
                scale, p, tau, q, ..
            } => {
                if !p.is_positive() {
                    return Err(out_of_range("p", p, "p > 0"));
                }
                if tau.is_negative() {
                    return Err(out_of_range("tau", format_rational(tau), "tau >= 0"));
                }
                check_q(q)?;
                if scale == Scale::F && p.is_infinite() {
                    return Err(out_of_range("p", p, "p < inf for the F-scale"));
                }
            }
            SpaceSpec::Classical { scale, p, q, .. } => {
                if !p.is_positive() {
                    return Err(out_of_range("p", p, "p > 0"));
                }
                check_q(q)?;
                if scale == Scale::F && p.is_infinite() {
                    return Err(out_of_range("p", p, "p < inf for the F-scale"));
                }
            }
            SpaceSpec::Rho { p, rho, q, d, .. } => {
                if !p.is_positive() || p.is_infinite() {
                    return Err(out_of_range("p", p, "0 < p < inf"));
                }
                let lower = -Rational::from_integer(d as i64);
                if rho < lower || !rho.is_negative() {
                    return Err(out_of_range("rho", format_rational(rho), "-d <= rho < 0"));
                }
                check_q(q)?;
            }
            SpaceSpec::Lr { r, .. } => {
                if r < ExtScalar::int(1) || r.is_infinite() {
                    return Err(out_of_range("r", r, "1 <= r < inf"));
                }
            }
            SpaceSpec::Bmo { .. } | SpaceSpec::Linf { .. } => {}
        }
        Ok(())
    }

    /// Classical spaces viewed inside the Morrey scale (`u = p`).
    pub fn as_morrey(&self) -> Option<SpaceSpec> {
        match *self {
            SpaceSpec::Morrey { .. } => Some(*self),
            SpaceSpec::Classical { scale, s, p, q, d } => {
                if scale == Scale::F && p.is_infinite() {
                    return None;
                }
                Some(SpaceSpec::Morrey {
                    scale,
                    s,
                    u: p,
                    p,
                    q,
                    d,
                })
            }
            _ => None,
        }
    }

    /// Representation in the tau scale where an exact identity exists.
    pub fn as_tau(&self) -> Option<SpaceSpec> {
        match *self {
            SpaceSpec::Tau { .. } => Some(*self),
            SpaceSpec::Classical { scale, s, p, q, d } => Some(SpaceSpec::Tau {
                scale,
                s,
                p,
                tau: Rational::zero(),
                q,
                d,
            }),
            SpaceSpec::Morrey { .. } => morrey_to_tau(self).ok(),
            _ => None,
        }
    }
}

/// Sequence-space parameters; `sigma` is the shifted smoothness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeqSpec {
    pub sigma: Rational,
    pub u: ExtScalar,
    pub p: ExtScalar,
    pub q: ExtScalar,
    pub d: u32,
}

impl SeqSpec {
    pub fn new(
        sigma: Rational,
        u: ExtScalar,
        p: ExtScalar,
        q: ExtScalar,
        d: u32,
    ) -> Result<Self, ParamError> {
        let spec = SeqSpec { sigma, u, p, q, d };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        check_dim(self.d)?;
        check_morrey_pair(self.u, self.p)?;
        check_q(self.q)
    }
}

/// Morrey-scale space to its tau-scale twin.
///
/// F-scale: always, with `tau = 1/p - 1/u`. B-scale: only when `q = inf`
/// or `u = p`, where both spaces coincide.
pub fn morrey_to_tau(spec: &SpaceSpec) -> Result<SpaceSpec, ParamError> {
    spec.validate()?;
    let SpaceSpec::Morrey {
        scale,
        s,
        u,
        p,
        q,
        d,
    } = *spec
    else {
        return Err(ParamError::Domain(format!(
            "{} is not a Morrey-scale space",
            spec.family().tag()
        )));
    };
    if scale == Scale::B && !(q.is_infinite() || u == p) {
        return Err(ParamError::Domain(
            "Besov-Morrey and Besov-type spaces coincide only for q = inf or u = p".into(),
        ));
    }
    Ok(SpaceSpec::Tau {
        scale,
        s,
        p,
        tau: p.recip() - u.recip(),
        q,
        d,
    })
}

/// Inverse of [`morrey_to_tau`], defined for `0 <= tau < 1/p`.
pub fn tau_to_morrey(spec: &SpaceSpec) -> Result<SpaceSpec, ParamError> {
    spec.validate()?;
    let SpaceSpec::Tau {
        scale,
        s,
        p,
        tau,
        q,
        d,
    } = *spec
    else {
        return Err(ParamError::Domain(format!(
            "{} is not a tau-scale space",
            spec.family().tag()
        )));
    };
    let ip = p.recip();
    if tau >= ip {
        return Err(ParamError::Domain(format!(
            "tau = {} >= 1/p = {}: no Morrey counterpart",
            format_rational(tau),
            format_rational(ip)
        )));
    }
    if scale == Scale::B && !(q.is_infinite() || tau.is_zero()) {
        return Err(ParamError::Domain(
            "Besov-type and Besov-Morrey spaces coincide only for q = inf or tau = 0".into(),
        ));
    }
    Ok(SpaceSpec::Morrey {
        scale,
        s,
        u: ExtScalar::from_recip(ip - tau),
        p,
        q,
        d,
    })
}

/// Identifies a `rho`-clan space with a standard space.
pub fn rho_to_canonical(spec: &SpaceSpec, form: RhoForm) -> Result<SpaceSpec, ParamError> {
    let SpaceSpec::Rho {
        scale,
        s,
        p,
        rho,
        q,
        d,
    } = *spec
    else {
        return Err(ParamError::Domain(format!(
            "{} is not a rho-clan space",
            spec.family().tag()
        )));
    };
    spec.validate().map_err(|e| match e {
        ParamError::OutOfRange {
            name: "rho", value, ..
        } => ParamError::Domain(format!("rho = {value} outside [-d, 0)")),
        other => other,
    })?;
    let dim = Rational::from_integer(d as i64);
    if rho == -dim {
        return Ok(SpaceSpec::Classical { scale, s, p, q, d });
    }
    let pr = p.finite().expect("validated finite p");
    Ok(match form {
        RhoForm::Morrey => SpaceSpec::Morrey {
            scale,
            s,
            u: ExtScalar::Finite(-dim * pr / rho),
            p,
            q,
            d,
        },
        RhoForm::Tau => SpaceSpec::Tau {
            scale,
            s,
            p,
            tau: (Rational::one() + rho / dim) / pr,
            q,
            d,
        },
    })
}

/// Sequence-space image of a Besov-Morrey space: `sigma = s + d/2`.
pub fn seq_shift(spec: &SpaceSpec) -> Result<SeqSpec, ParamError> {
    spec.validate()?;
    match *spec {
        SpaceSpec::Morrey {
            scale: Scale::B,
            s,
            u,
            p,
            q,
            d,
        } => Ok(SeqSpec {
            sigma: s + Rational::new(d as i64, 2),
            u,
            p,
            q,
            d,
        }),
        _ => Err(ParamError::Domain(
            "sequence shift is defined for Besov-Morrey spaces".into(),
        )),
    }
}
