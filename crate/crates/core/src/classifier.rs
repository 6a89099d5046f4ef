//! Compactness and nuclearity decisions for embeddings on bounded domains.
//!
//! Every criterion has the shape `lhs > threshold`, where `lhs` is usually
//! `(s1 - s2) / d`. Thresholds are exact rationals normalized by `d`.

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::grammar::AnySpec;
use crate::params::{
    gamma, gamma_bar, min_one_ratio, pos, ExtScalar, ParamError, Rational, Scale, SeqSpec,
    SpaceSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tri {
    Yes,
    No,
    NotCharacterized,
}

impl Tri {
    pub fn as_str(self) -> &'static str {
        match self {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::NotCharacterized => "n/a",
        }
    }
}

pub mod citation {
    pub const MORREY: &str = "morrey-scale";
    pub const TAU: &str = "tau-scale";
    pub const SAME_TAU: &str = "same-tau";
    pub const SEQUENCE: &str = "sequence-space";
    pub const RHO: &str = "rho-clan";
    pub const BMO: &str = "bmo-target";
    pub const LINF: &str = "linf-target";
    pub const LR: &str = "lr-target";
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub compact: Tri,
    pub nuclear: Tri,
    pub threshold_compact: Option<ExtScalar>,
    pub threshold_nuclear: Option<ExtScalar>,
    pub lhs: ExtScalar,
    pub boundary_compact: bool,
    pub boundary_nuclear: bool,
    pub citation: &'static str,
}

fn decide(lhs: Rational, threshold: Option<Rational>) -> (Tri, bool) {
    match threshold {
        None => (Tri::NotCharacterized, false),
        Some(t) if lhs > t => (Tri::Yes, false),
        Some(t) => (Tri::No, lhs == t),
    }
}

impl Verdict {
    fn new(
        lhs: Rational,
        compact: Option<Rational>,
        nuclear: Option<Rational>,
        citation: &'static str,
    ) -> Self {
        let (c, bc) = decide(lhs, compact);
        let (n, bn) = decide(lhs, nuclear);
        Verdict {
            compact: c,
            nuclear: n,
            threshold_compact: compact.map(ExtScalar::Finite),
            threshold_nuclear: nuclear.map(ExtScalar::Finite),
            lhs: ExtScalar::Finite(lhs),
            boundary_compact: bc,
            boundary_nuclear: bn,
            citation,
        }
    }
}

/// Special targets for [`classify_special_target`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialTarget {
    Bmo,
    Linf,
    Lr(ExtScalar),
}

fn dims(a: u32, b: u32) -> Result<Rational, ParamError> {
    if a != b {
        return Err(ParamError::DimensionMismatch(a, b));
    }
    Ok(Rational::from_integer(a as i64))
}

fn banach(p: ExtScalar, q: ExtScalar) -> bool {
    let one = ExtScalar::int(1);
    p >= one && q >= one
}

fn same_scale(a: Scale, b: Scale) -> Result<(), ParamError> {
    if a != b {
        return Err(ParamError::UnsupportedPair(format!(
            "mixed scales {a} -> {b}"
        )));
    }
    Ok(())
}

/// `1/u1 - 1/u2 + (1/u2 - min(1, p1/p2)/u1)_+`
pub fn morrey_compact_threshold(
    u1: ExtScalar,
    p1: ExtScalar,
    u2: ExtScalar,
    p2: ExtScalar,
) -> Rational {
    let (iu1, iu2) = (u1.recip(), u2.recip());
    iu1 - iu2 + pos(iu2 - min_one_ratio(p1, p2) * iu1)
}

/// `1/u1 - 1/u2 + 1/t(u1, max(1, p1/p2) u2)`
pub fn morrey_nuclear_threshold(
    u1: ExtScalar,
    p1: ExtScalar,
    u2: ExtScalar,
    p2: ExtScalar,
) -> Rational {
    let (iu1, iu2) = (u1.recip(), u2.recip());
    iu1 - iu2 + Rational::one() - pos(iu1 - min_one_ratio(p2, p1) * iu2)
}

pub fn classify_morrey(src: &SpaceSpec, dst: &SpaceSpec) -> Result<Verdict, ParamError> {
    src.validate()?;
    dst.validate()?;
    let (Some(a), Some(b)) = (src.as_morrey(), dst.as_morrey()) else {
        return Err(ParamError::UnsupportedPair(
            "both spaces must be on the Morrey scale".into(),
        ));
    };
    let SpaceSpec::Morrey {
        scale: sa,
        s: s1,
        u: u1,
        p: p1,
        q: q1,
        d: d1,
    } = a
    else {
        unreachable!()
    };
    let SpaceSpec::Morrey {
        scale: sb,
        s: s2,
        u: u2,
        p: p2,
        q: q2,
        d: d2,
    } = b
    else {
        unreachable!()
    };
    same_scale(sa, sb)?;
    let d = dims(d1, d2)?;
    let lhs = (s1 - s2) / d;
    let compact = morrey_compact_threshold(u1, p1, u2, p2);
    let nuclear =
        (banach(p1, q1) && banach(p2, q2)).then(|| morrey_nuclear_threshold(u1, p1, u2, p2));
    Ok(Verdict::new(lhs, Some(compact), nuclear, citation::MORREY))
}

pub fn classify_tau(src: &SpaceSpec, dst: &SpaceSpec) -> Result<Verdict, ParamError> {
    classify_tau_with(src, dst, citation::TAU, |t1, t2, p1, p2| {
        gamma_bar(t1, t2, p1, p2)
    })
}

fn classify_tau_with(
    src: &SpaceSpec,
    dst: &SpaceSpec,
    cite: &'static str,
    nuclear_rule: impl Fn(Rational, Rational, ExtScalar, ExtScalar) -> Result<Rational, ParamError>,
) -> Result<Verdict, ParamError> {
    src.validate()?;
    dst.validate()?;
    let (Some(a), Some(b)) = (src.as_tau(), dst.as_tau()) else {
        return Err(ParamError::UnsupportedPair(
            "both spaces must be on the tau scale".into(),
        ));
    };
    let SpaceSpec::Tau {
        scale: sa,
        s: s1,
        p: p1,
        tau: t1,
        q: q1,
        d: d1,
    } = a
    else {
        unreachable!()
    };
    let SpaceSpec::Tau {
        scale: sb,
        s: s2,
        p: p2,
        tau: t2,
        q: q2,
        d: d2,
    } = b
    else {
        unreachable!()
    };
    same_scale(sa, sb)?;
    let d = dims(d1, d2)?;
    let lhs = (s1 - s2) / d;
    let compact = gamma(t1, t2, p1, p2)?;
    let nuclear = if banach(p1, q1) && banach(p2, q2) {
        Some(nuclear_rule(t1, t2, p1, p2)?)
    } else {
        None
    };
    Ok(Verdict::new(lhs, Some(compact), nuclear, cite))
}

/// Nuclearity threshold for a shared `tau`.
pub fn same_tau_threshold(tau: Rational, p1: ExtScalar, p2: ExtScalar) -> Rational {
    let (ip1, ip2) = (p1.recip(), p2.recip());
    if p1 >= p2 {
        Rational::one() - ip2 + ip1
    } else {
        Rational::one() - (ip2 - tau.min(ip1)).min(Rational::zero())
    }
}

pub fn classify_same_tau(src: &SpaceSpec, dst: &SpaceSpec) -> Result<Verdict, ParamError> {
    let tau_of = |s: &SpaceSpec| match s.as_tau() {
        Some(SpaceSpec::Tau { tau, .. }) => Ok(tau),
        _ => Err(ParamError::UnsupportedPair(
            "both spaces must be on the tau scale".into(),
        )),
    };
    let (t1, t2) = (tau_of(src)?, tau_of(dst)?);
    if t1 != t2 {
        return Err(ParamError::UnsupportedPair(
            "tau differs between source and target".into(),
        ));
    }
    classify_tau_with(src, dst, citation::SAME_TAU, |t, _, p1, p2| {
        Ok(same_tau_threshold(t, p1, p2))
    })
}

pub fn classify_seq(src: &SeqSpec, dst: &SeqSpec) -> Result<Verdict, ParamError> {
    src.validate()?;
    dst.validate()?;
    let d = dims(src.d, dst.d)?;
    let lhs = (src.sigma - dst.sigma) / d;
    let nuclear = (banach(src.p, src.q) && banach(dst.p, dst.q))
        .then(|| morrey_nuclear_threshold(src.u, src.p, dst.u, dst.p));
    Ok(Verdict::new(lhs, None, nuclear, citation::SEQUENCE))
}

pub fn classify_special_target(
    src: &SpaceSpec,
    target: SpecialTarget,
) -> Result<Verdict, ParamError> {
    src.validate()?;
    if let SpecialTarget::Lr(r) = target {
        SpaceSpec::Lr { r, d: src.dim() }.validate()?;
    }
    let d = Rational::from_integer(src.dim() as i64);
    let one = Rational::one();
    let cite = match target {
        SpecialTarget::Bmo => citation::BMO,
        SpecialTarget::Linf => citation::LINF,
        SpecialTarget::Lr(_) => citation::LR,
    };
    match *src {
        SpaceSpec::Morrey { s, u, p, q, .. } => {
            let iu = u.recip();
            let (compact, nuclear) = match target {
                SpecialTarget::Bmo | SpecialTarget::Linf => (Some(iu), one),
                SpecialTarget::Lr(r) => (None, one - pos(r.recip() - iu)),
            };
            Ok(Verdict::new(
                s / d,
                compact,
                banach(p, q).then_some(nuclear),
                cite,
            ))
        }
        SpaceSpec::Tau { .. } | SpaceSpec::Classical { .. } => {
            let Some(SpaceSpec::Tau { s, p, tau, q, .. }) = src.as_tau() else {
                unreachable!()
            };
            let ip = p.recip();
            let (compact, nuclear) = match target {
                SpecialTarget::Bmo | SpecialTarget::Linf => (Some(ip - tau), one - pos(tau - ip)),
                SpecialTarget::Lr(r) => {
                    let ir = r.recip();
                    let n = if tau >= ip {
                        one + ip - tau - ir
                    } else {
                        one - pos(ir - ip + tau)
                    };
                    (None, n)
                }
            };
            Ok(Verdict::new(
                s / d,
                compact,
                banach(p, q).then_some(nuclear),
                cite,
            ))
        }
        _ => Err(ParamError::UnsupportedPair(format!(
            "{} source into a special target",
            src.family().tag()
        ))),
    }
}

pub fn classify_rho(src: &SpaceSpec, dst: &SpaceSpec) -> Result<Verdict, ParamError> {
    src.validate()?;
    dst.validate()?;
    let (
        SpaceSpec::Rho {
            scale: sa,
            s: s1,
            p: p1,
            rho: r1,
            q: q1,
            d: d1,
        },
        SpaceSpec::Rho {
            scale: sb,
            s: s2,
            p: p2,
            rho: r2,
            q: q2,
            d: d2,
        },
    ) = (*src, *dst)
    else {
        return Err(ParamError::UnsupportedPair(
            "both spaces must be rho-clan spaces".into(),
        ));
    };
    same_scale(sa, sb)?;
    let d = dims(d1, d2)?;
    if r1 != r2 {
        return Err(ParamError::UnsupportedPair(
            "rho differs between source and target".into(),
        ));
    }
    let slope = r1.abs() / d;
    let (ip1, ip2) = (p1.recip(), p2.recip());
    let lhs = (s1 - s2) / d;
    let compact = slope * pos(ip1 - ip2);
    let nuclear =
        (banach(p1, q1) && banach(p2, q2)).then(|| slope * (Rational64::one() - pos(ip2 - ip1)));
    Ok(Verdict::new(lhs, Some(compact), nuclear, citation::RHO))
}

/// Dispatches a pair of function-space specs to the matching criterion.
pub fn classify(src: &SpaceSpec, dst: &SpaceSpec) -> Result<Verdict, ParamError> {
    dims(src.dim(), dst.dim())?;
    match *dst {
        SpaceSpec::Bmo { .. } => return classify_special_target(src, SpecialTarget::Bmo),
        SpaceSpec::Linf { .. } => return classify_special_target(src, SpecialTarget::Linf),
        SpaceSpec::Lr { r, .. } => return classify_special_target(src, SpecialTarget::Lr(r)),
        _ => {}
    }
    match (src, dst) {
        (SpaceSpec::Rho { .. }, SpaceSpec::Rho { .. }) => classify_rho(src, dst),
        (
            SpaceSpec::Morrey { .. } | SpaceSpec::Classical { .. },
            SpaceSpec::Morrey { .. } | SpaceSpec::Classical { .. },
        ) => classify_morrey(src, dst),
        (
            SpaceSpec::Tau { .. } | SpaceSpec::Classical { .. } | SpaceSpec::Morrey { .. },
            SpaceSpec::Tau { .. } | SpaceSpec::Classical { .. } | SpaceSpec::Morrey { .. },
        ) => {
            let both =
                |f: fn(&SpaceSpec) -> Option<SpaceSpec>| f(src).is_some() && f(dst).is_some();
            if !both(SpaceSpec::as_tau) {
                return Err(ParamError::UnsupportedPair(format!(
                    "{} -> {}: no identity links these scales",
                    src.family().tag(),
                    dst.family().tag()
                )));
            }
            classify_tau(src, dst)
        }
        _ => Err(ParamError::UnsupportedPair(format!(
            "{} -> {}",
            src.family().tag(),
            dst.family().tag()
        ))),
    }
}

/// [`classify`] for parsed specs of either kind.
pub fn classify_any(src: &AnySpec, dst: &AnySpec) -> Result<Verdict, ParamError> {
    match (src, dst) {
        (AnySpec::Space(a), AnySpec::Space(b)) => classify(a, b),
        (AnySpec::Seq(a), AnySpec::Seq(b)) => classify_seq(a, b),
        _ => Err(ParamError::UnsupportedPair(
            "sequence space paired with a function space".into(),
        )),
    }
}
