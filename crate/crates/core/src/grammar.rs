//! Text form of space descriptors: `TAG:key=value,...`.
//!
//! Examples: `N:s=1,u=2,p=3/2,q=2,d=1`, `Btau:s=1,p=2,tau=1/4,q=inf,d=2`,
//! `rhoB:s=1,p=2,rho=-1,q=1,d=3`, `Lr:r=2,d=1`, `bmo:d=2`,
//! `seq:sigma=1,u=2,p=1,q=1,d=1`.
//!
//! Printing always emits the keys in the canonical order listed in
//! [`keys_for`]; parsing accepts any order.

use std::fmt;

use thiserror::Error;

use crate::params::{
    format_rational, ExtScalar, Family, ParamError, Rational, Scale, SeqSpec, SpaceSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {position}: {message} (token '{token}')")]
pub struct ParseError {
    pub message: String,
    pub token: String,
    pub position: usize,
}

impl ParseError {
    fn new(message: impl Into<String>, token: &str, position: usize) -> Self {
        ParseError {
            message: message.into(),
            token: token.to_string(),
            position,
        }
    }
}

/// Either a function-space spec or a sequence-space spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnySpec {
    Space(SpaceSpec),
    Seq(SeqSpec),
}

impl fmt::Display for AnySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnySpec::Space(s) => f.write_str(&print_space(s)),
            AnySpec::Seq(s) => f.write_str(&print_seq(s)),
        }
    }
}

pub const SEQ_TAG: &str = "seq";

/// Canonical key order for a tag.
pub fn keys_for(tag: &str) -> Option<&'static [&'static str]> {
    Some(match tag {
        "N" | "E" => &["s", "u", "p", "q", "d"],
        "Btau" | "Ftau" => &["s", "p", "tau", "q", "d"],
        "B" | "F" => &["s", "p", "q", "d"],
        "rhoB" | "rhoF" => &["s", "p", "rho", "q", "d"],
        "Lr" => &["r", "d"],
        "bmo" | "Linf" => &["d"],
        SEQ_TAG => &["sigma", "u", "p", "q", "d"],
        _ => return None,
    })
}

struct Field<'a> {
    key: &'a str,
    value: &'a str,
    key_pos: usize,
    value_pos: usize,
}

fn split_fields<'a>(body: &'a str, offset: usize) -> Result<Vec<Field<'a>>, ParseError> {
    let mut fields = Vec::new();
    if body.trim().is_empty() {
        return Ok(fields);
    }
    let mut start = 0;
    for piece in body.split(',') {
        let pos = offset + start;
        start += piece.len() + 1;
        let Some((k, v)) = piece.split_once('=') else {
            return Err(ParseError::new("expected key=value", piece, pos));
        };
        let key_lead = k.len() - k.trim_start().len();
        let value_lead = v.len() - v.trim_start().len();
        fields.push(Field {
            key: k.trim(),
            value: v.trim(),
            key_pos: pos + key_lead,
            value_pos: pos + k.len() + 1 + value_lead,
        });
    }
    Ok(fields)
}

/// Parses a function-space or sequence-space spec.
pub fn parse_any(text: &str) -> Result<AnySpec, ParseError> {
    let lead = text.len() - text.trim_start().len();
    let trimmed = text.trim();
    let Some((tag, body)) = trimmed.split_once(':') else {
        return Err(ParseError::new(
            "missing ':' after family tag",
            trimmed,
            lead,
        ));
    };
    let tag_trimmed = tag.trim();
    let Some(keys) = keys_for(tag_trimmed) else {
        return Err(ParseError::new("unknown family tag", tag_trimmed, lead));
    };
    let body_offset = lead + tag.len() + 1;
    let fields = split_fields(body, body_offset)?;

    let mut values: Vec<Option<(&str, usize)>> = vec![None; keys.len()];
    for f in &fields {
        let Some(slot) = keys.iter().position(|k| *k == f.key) else {
            return Err(ParseError::new(
                format!("unknown key for {tag_trimmed}"),
                f.key,
                f.key_pos,
            ));
        };
        if values[slot].is_some() {
            return Err(ParseError::new("duplicate key", f.key, f.key_pos));
        }
        values[slot] = Some((f.value, f.value_pos));
    }
    for (k, v) in keys.iter().zip(&values) {
        if v.is_none() {
            return Err(ParseError::new(format!("missing key '{k}'"), trimmed, lead));
        }
    }
    let get = |name: &str| -> (&str, usize) {
        let i = keys.iter().position(|k| *k == name).expect("known key");
        values[i].expect("checked present")
    };
    let ext = |name: &str| -> Result<ExtScalar, ParseError> {
        let (v, pos) = get(name);
        v.parse::<ExtScalar>()
            .map_err(|_| ParseError::new(format!("invalid value for '{name}'"), v, pos))
    };
    let finite = |name: &str| -> Result<Rational, ParseError> {
        let (v, pos) = get(name);
        ext(name)?
            .finite()
            .ok_or_else(|| ParseError::new(format!("'{name}' must be finite"), v, pos))
    };
    let dim = || -> Result<u32, ParseError> {
        let (v, pos) = get("d");
        v.parse::<u32>()
            .map_err(|_| ParseError::new("dimension must be a positive integer", v, pos))
    };

    let spec = if tag_trimmed == SEQ_TAG {
        AnySpec::Seq(SeqSpec {
            sigma: finite("sigma")?,
            u: ext("u")?,
            p: ext("p")?,
            q: ext("q")?,
            d: dim()?,
        })
    } else {
        let family = Family::from_tag(tag_trimmed).expect("tag checked");
        let scale = match family {
            Family::BesovMorrey | Family::BesovTau | Family::ClassicalB | Family::RhoB => Scale::B,
            _ => Scale::F,
        };
        AnySpec::Space(match family {
            Family::BesovMorrey | Family::TriebelMorrey => SpaceSpec::Morrey {
                scale,
                s: finite("s")?,
                u: ext("u")?,
                p: ext("p")?,
                q: ext("q")?,
                d: dim()?,
            },
            Family::BesovTau | Family::TriebelTau => SpaceSpec::Tau {
                scale,
                s: finite("s")?,
                p: ext("p")?,
                tau: finite("tau")?,
                q: ext("q")?,
                d: dim()?,
            },
            Family::ClassicalB | Family::ClassicalF => SpaceSpec::Classical {
                scale,
                s: finite("s")?,
                p: ext("p")?,
                q: ext("q")?,
                d: dim()?,
            },
            Family::RhoB | Family::RhoF => SpaceSpec::Rho {
                scale,
                s: finite("s")?,
                p: ext("p")?,
                rho: finite("rho")?,
                q: ext("q")?,
                d: dim()?,
            },
            Family::Lr => SpaceSpec::Lr {
                r: ext("r")?,
                d: dim()?,
            },
            Family::Bmo => SpaceSpec::Bmo { d: dim()? },
            Family::Linf => SpaceSpec::Linf { d: dim()? },
        })
    };

    let validation = match &spec {
        AnySpec::Space(s) => s.validate(),
        AnySpec::Seq(s) => s.validate(),
    };
    validation.map_err(|e| range_error(e, keys, &values, trimmed, lead))?;
    Ok(spec)
}

fn range_error(
    e: ParamError,
    keys: &[&str],
    values: &[Option<(&str, usize)>],
    whole: &str,
    lead: usize,
) -> ParseError {
    if let ParamError::OutOfRange { name, .. } = &e {
        if let Some(i) = keys.iter().position(|k| k == name) {
            if let Some((v, pos)) = values[i] {
                return ParseError::new(e.to_string(), v, pos);
            }
        }
    }
    ParseError::new(e.to_string(), whole, lead)
}

pub fn parse_space(text: &str) -> Result<SpaceSpec, ParseError> {
    match parse_any(text)? {
        AnySpec::Space(s) => Ok(s),
        AnySpec::Seq(_) => Err(ParseError::new(
            "expected a function-space spec",
            text.trim(),
            0,
        )),
    }
}

pub fn parse_seq(text: &str) -> Result<SeqSpec, ParseError> {
    match parse_any(text)? {
        AnySpec::Seq(s) => Ok(s),
        AnySpec::Space(_) => Err(ParseError::new(
            "expected a sequence-space spec",
            text.trim(),
            0,
        )),
    }
}

fn join(tag: &str, pairs: &[(&str, String)]) -> String {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{tag}:{}", body.join(","))
}

pub fn print_space(spec: &SpaceSpec) -> String {
    let tag = spec.family().tag();
    let fr = |r: Rational| format_rational(r);
    match *spec {
        SpaceSpec::Morrey { s, u, p, q, d, .. } => join(
            tag,
            &[
                ("s", fr(s)),
                ("u", u.to_string()),
                ("p", p.to_string()),
                ("q", q.to_string()),
                ("d", d.to_string()),
            ],
        ),
        SpaceSpec::Tau {
            s, p, tau, q, d, ..
        } => join(
            tag,
            &[
                ("s", fr(s)),
                ("p", p.to_string()),
                ("tau", fr(tau)),
                ("q", q.to_string()),
                ("d", d.to_string()),
            ],
        ),
        SpaceSpec::Classical { s, p, q, d, .. } => join(
            tag,
            &[
                ("s", fr(s)),
                ("p", p.to_string()),
                ("q", q.to_string()),
                ("d", d.to_string()),
            ],
        ),
        SpaceSpec::Rho {
            s, p, rho, q, d, ..
        } => join(
            tag,
            &[
                ("s", fr(s)),
                ("p", p.to_string()),
                ("rho", fr(rho)),
                ("q", q.to_string()),
                ("d", d.to_string()),
            ],
        ),
        SpaceSpec::Lr { r, d } => join(tag, &[("r", r.to_string()), ("d", d.to_string())]),
        SpaceSpec::Bmo { d } | SpaceSpec::Linf { d } => join(tag, &[("d", d.to_string())]),
    }
}

pub fn print_seq(spec: &SeqSpec) -> String {
    join(
        SEQ_TAG,
        &[
            ("sigma", format_rational(spec.sigma)),
            ("u", spec.u.to_string()),
            ("p", spec.p.to_string()),
            ("q", spec.q.to_string()),
            ("d", spec.d.to_string()),
        ],
    )
}

/// Splits on commas outside parentheses, keeping byte offsets.
fn split_top_level(body: &str, offset: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in body.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push((&body[start..i], offset + start));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((&body[start..], offset + start));
    out
}

/// One swept field inside a template spec.
///
/// `key=sweep(a..b,n)` sweeps the field itself; `key=isweep(a..b,n)`
/// sweeps its reciprocal, so `u=isweep(0..1/2,3)` visits `u = inf, 4, 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub key: String,
    pub start: Rational,
    pub end: Rational,
    pub steps: usize,
    pub reciprocal: bool,
    span: (usize, usize),
}

impl Sweep {
    /// Grid nodes in the swept coordinate, `start` first.
    pub fn nodes(&self) -> Vec<Rational> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let last = (self.steps - 1) as i64;
        (0..=last)
            .map(|i| self.start + (self.end - self.start) * Rational::new(i, last))
            .collect()
    }

    /// Field value for a node.
    pub fn field_value(&self, node: Rational) -> Result<ExtScalar, ParamError> {
        if !self.reciprocal {
            return Ok(ExtScalar::Finite(node));
        }
        if node < Rational::from_integer(0) {
            return Err(ParamError::Domain(format!(
                "negative reciprocal {}",
                format_rational(node)
            )));
        }
        Ok(ExtScalar::from_recip(node))
    }
}

/// A spec with some values replaced by sweep markers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    text: String,
    pub sweeps: Vec<Sweep>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Template, ParseError> {
        let mut sweeps = Vec::new();
        let colon = text
            .find(':')
            .ok_or_else(|| ParseError::new("missing ':' after family tag", text, 0))?;
        for (piece, piece_pos) in split_top_level(&text[colon + 1..], colon + 1) {
            let Some((k, v)) = piece.split_once('=') else {
                continue;
            };
            let value = v.trim();
            let value_pos = piece_pos + k.len() + 1 + (v.len() - v.trim_start().len());
            let (reciprocal, inner) = if let Some(rest) = value.strip_prefix("isweep(") {
                (true, rest)
            } else if let Some(rest) = value.strip_prefix("sweep(") {
                (false, rest)
            } else {
                continue;
            };
            let key = k.trim();
            if key == "d" {
                return Err(ParseError::new(
                    "dimension cannot be swept",
                    value,
                    value_pos,
                ));
            }
            let bad = |msg: &str| ParseError::new(msg, value, value_pos);
            let inner = inner
                .strip_suffix(')')
                .ok_or_else(|| bad("unterminated sweep"))?;
            let (range, steps) = inner
                .rsplit_once(',')
                .ok_or_else(|| bad("expected sweep(a..b,steps)"))?;
            let (a, b) = range
                .split_once("..")
                .ok_or_else(|| bad("expected range a..b"))?;
            let start =
                crate::params::parse_rational(a.trim()).map_err(|_| bad("invalid sweep start"))?;
            let end =
                crate::params::parse_rational(b.trim()).map_err(|_| bad("invalid sweep end"))?;
            let steps: usize = steps
                .trim()
                .parse()
                .map_err(|_| bad("invalid step count"))?;
            if steps == 0 {
                return Err(bad("step count must be positive"));
            }
            sweeps.push(Sweep {
                key: key.to_string(),
                start,
                end,
                steps,
                reciprocal,
                span: (value_pos, value_pos + value.len()),
            });
        }
        let tag = text[..colon].trim();
        let keys = if tag == SEQ_TAG {
            keys_for(tag)
        } else {
            Family::from_tag(tag).and_then(|f| keys_for(f.tag()))
        };
        let keys = keys.ok_or_else(|| ParseError::new("unknown family tag", tag, 0))?;
        for s in &sweeps {
            if !keys.contains(&s.key.as_str()) {
                return Err(ParseError::new(
                    "sweep on unknown or non-numeric field",
                    &s.key,
                    s.span.0,
                ));
            }
        }
        Ok(Template {
            text: text.to_string(),
            sweeps,
        })
    }

    /// Substitutes one field value per sweep, in order.
    pub fn instantiate(&self, values: &[ExtScalar]) -> Result<AnySpec, ParseError> {
        assert_eq!(values.len(), self.sweeps.len(), "one value per sweep");
        let mut out = String::with_capacity(self.text.len());
        let mut last = 0;
        for (s, v) in self.sweeps.iter().zip(values) {
            out.push_str(&self.text[last..s.span.0]);
            out.push_str(&v.to_string());
            last = s.span.1;
        }
        out.push_str(&self.text[last..]);
        parse_any(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_listed_forms() {
        for text in [
            "N:s=1,u=2,p=3/2,q=2,d=1",
            "Btau:s=1,p=2,tau=1/4,q=inf,d=2",
            "rhoB:s=1,p=2,rho=-1,q=1,d=3",
            "Lr:r=2,d=1",
            "bmo:d=2",
            "seq:sigma=1/2,u=4,p=2,q=1,d=1",
        ] {
            let spec = parse_any(text).unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn key_order_is_free() {
        let a = parse_space("E:d=2,q=1,p=1,u=3,s=1/2").unwrap();
        assert_eq!(print_space(&a), "E:s=1/2,u=3,p=1,q=1,d=2");
    }

    #[test]
    fn errors_point_at_token() {
        let e = parse_space("N:s=1,u=2,p=x,q=2,d=1").unwrap_err();
        assert_eq!(e.token, "x");
        assert_eq!(e.position, 12);

        let e = parse_space("Q:s=1").unwrap_err();
        assert_eq!(e.token, "Q");
        assert_eq!(e.position, 0);

        let e = parse_space("N:s=1,u=2,p=1,q=2,d=1,w=3").unwrap_err();
        assert_eq!(e.token, "w");
        assert_eq!(e.position, 22);

        let e = parse_space("N:s=1,u=1,p=2,q=2,d=1").unwrap_err();
        assert_eq!(e.token, "1");
        assert_eq!(e.position, 8);

        let e = parse_space("N:s=1,u=2,p=1,q=2").unwrap_err();
        assert!(e.message.contains("missing key 'd'"));

        assert!(parse_space("N s=1").is_err());
        assert!(parse_space("bmo:d=1,d=2").is_err());
        assert!(parse_space("N:s=inf,u=2,p=1,q=2,d=1").is_err());
    }

    #[test]
    fn template_sweeps() {
        let t = Template::parse("N:s=sweep(0..2,5),u=isweep(0..1/2,3),p=2,q=1,d=1").unwrap();
        assert_eq!(t.sweeps.len(), 2);
        let nodes = t.sweeps[1].nodes();
        assert_eq!(
            nodes,
            vec![
                Rational::from_integer(0),
                Rational::new(1, 4),
                Rational::new(1, 2)
            ]
        );
        let u = t.sweeps[1].field_value(nodes[0]).unwrap();
        assert_eq!(u, ExtScalar::Infinity);
        let spec = t
            .instantiate(&[ExtScalar::ratio(1, 2), ExtScalar::int(4)])
            .unwrap();
        assert_eq!(spec.to_string(), "N:s=1/2,u=4,p=2,q=1,d=1");

        assert!(Template::parse("N:s=1,u=2,p=2,q=1,d=sweep(1..2,2)").is_err());
        assert!(Template::parse("N:s=1,u=2,p=2,q=1,z=sweep(1..2,2),d=1").is_err());
        assert!(Template::parse("N:s=sweep(0..1,0),u=2,p=2,q=1,d=1").is_err());
    }
}
