//! Threshold tables for the special targets and the same-tau case.

use clap::ValueEnum;
use morrey_core::classifier::{
    citation, classify_special_target, same_tau_threshold, SpecialTarget,
};
use morrey_core::params::{format_rational, ExtScalar, Rational, Scale, SpaceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Bmo,
    Lr,
    SameTau,
    All,
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn inv(x: Rational) -> ExtScalar {
    ExtScalar::from_recip(x)
}

fn tau_space(ip: Rational, tau: Rational) -> SpaceSpec {
    SpaceSpec::Tau {
        scale: Scale::B,
        s: r(0, 1),
        p: inv(ip),
        tau,
        q: ExtScalar::int(2),
        d: 1,
    }
}

fn morrey_space(iu: Rational, ip: Rational) -> SpaceSpec {
    SpaceSpec::Morrey {
        scale: Scale::B,
        s: r(0, 1),
        u: inv(iu),
        p: inv(ip),
        q: ExtScalar::int(2),
        d: 1,
    }
}

fn grid(title: &str, corner: &str, cols: &[String], rows: Vec<(String, Vec<String>)>) -> String {
    let mut out = format!("{title}\n{corner:<12}");
    for c in cols {
        out.push_str(&format!("{c:>8}"));
    }
    out.push('\n');
    for (label, cells) in rows {
        out.push_str(&format!("{label:<12}"));
        for c in cells {
            out.push_str(&format!("{c:>8}"));
        }
        out.push('\n');
    }
    out
}

fn threshold(spec: &SpaceSpec, target: SpecialTarget, nuclear: bool) -> String {
    let v = classify_special_target(spec, target).expect("table parameters are admissible");
    let t = if nuclear {
        v.threshold_nuclear
    } else {
        v.threshold_compact
    };
    t.map_or_else(|| "n/a".to_string(), |x| x.to_string())
}

const INV_P: [(i64, i64); 3] = [(1, 1), (1, 2), (1, 4)];
const TAUS: [(i64, i64); 4] = [(0, 1), (1, 4), (1, 2), (1, 1)];

fn bmo() -> String {
    let mut out = format!(
        "Embeddings into bmo and L_inf  [{}, {}]\n\
         source        compact iff              nuclear iff\n\
         N, E          s/d > 1/u                s/d > 1\n\
         Btau, Ftau    s/d > 1/p - tau          s/d > 1 - (tau - 1/p)_+\n\n",
        citation::BMO,
        citation::LINF
    );
    let cols: Vec<String> = TAUS
        .iter()
        .map(|(a, b)| format_rational(r(*a, *b)))
        .collect();
    for (nuclear, name) in [(false, "compact"), (true, "nuclear")] {
        let rows = INV_P
            .iter()
            .map(|(a, b)| {
                let ip = r(*a, *b);
                let cells = TAUS
                    .iter()
                    .map(|(c, e)| threshold(&tau_space(ip, r(*c, *e)), SpecialTarget::Bmo, nuclear))
                    .collect();
                (format!("1/p={}", format_rational(ip)), cells)
            })
            .collect();
        out.push_str(&grid(
            &format!("{name} threshold for s/d, tau-spaces into bmo"),
            "1/p \\ tau",
            &cols,
            rows,
        ));
        out.push('\n');
    }
    out
}

fn lr() -> String {
    let mut out = format!(
        "Nuclear embeddings into L_r  [{}]\n\
         source                nuclear iff\n\
         Btau, Ftau, tau>=1/p  s/d > 1 + 1/p - tau - 1/r\n\
         Btau, Ftau, tau<=1/p  s/d > 1 - (1/r - 1/p + tau)_+\n\
         N, E                  s/d > 1 - (1/r - 1/u)_+\n\n",
        citation::LR
    );
    let rs = [ExtScalar::int(1), ExtScalar::int(2), ExtScalar::int(4)];
    let cols: Vec<String> = rs.iter().map(|x| format!("r={x}")).collect();
    let mut rows = Vec::new();
    for (a, b) in INV_P {
        for (c, e) in TAUS {
            let spec = tau_space(r(a, b), r(c, e));
            let cells = rs
                .iter()
                .map(|x| threshold(&spec, SpecialTarget::Lr(*x), true))
                .collect();
            rows.push((
                format!("{},{}", format_rational(r(a, b)), format_rational(r(c, e))),
                cells,
            ));
        }
    }
    out.push_str(&grid(
        "nuclear threshold for s/d, tau-spaces",
        "1/p,tau",
        &cols,
        rows,
    ));
    out.push('\n');
    let mut rows = Vec::new();
    for (a, b) in INV_P {
        let ip = r(a, b);
        for k in [1, 2, 4] {
            let iu = ip / Rational::from_integer(k);
            let cells = rs
                .iter()
                .map(|x| threshold(&morrey_space(iu, ip), SpecialTarget::Lr(*x), true))
                .collect();
            rows.push((
                format!("{},{}", format_rational(ip), format_rational(iu)),
                cells,
            ));
        }
    }
    out.push_str(&grid(
        "nuclear threshold for s/d, Morrey spaces",
        "1/p,1/u",
        &cols,
        rows,
    ));
    out
}

fn same_tau() -> String {
    let mut out = format!(
        "Nuclear embeddings with equal tau  [{}]\n\
         case        nuclear iff\n\
         p1 >= p2    (s1 - s2)/d > 1 - 1/p2 + 1/p1\n\
         p1 < p2     (s1 - s2)/d > 1 - min(0, 1/p2 - min(tau, 1/p1))\n\n",
        citation::SAME_TAU
    );
    let cols: Vec<String> = TAUS
        .iter()
        .map(|(a, b)| format_rational(r(*a, *b)))
        .collect();
    let mut rows = Vec::new();
    for (a, b) in INV_P {
        for (c, e) in INV_P {
            let (p1, p2) = (inv(r(a, b)), inv(r(c, e)));
            let cells = TAUS
                .iter()
                .map(|(t, u)| format_rational(same_tau_threshold(r(*t, *u), p1, p2)))
                .collect();
            rows.push((format!("{p1},{p2}"), cells));
        }
    }
    out.push_str(&grid(
        "nuclear threshold for (s1 - s2)/d",
        "p1,p2 \\ tau",
        &cols,
        rows,
    ));
    out
}

pub fn render(kind: Kind) -> String {
    match kind {
        Kind::Bmo => bmo(),
        Kind::Lr => lr(),
        Kind::SameTau => same_tau(),
        Kind::All => [bmo(), lr(), same_tau()].join("\n"),
    }
}
