use morrey_core::classifier::{classify, classify_morrey, classify_rho, classify_tau, Tri};
use morrey_core::dyadic::{CubeIndexSet, DyadicCube};
use morrey_core::grammar::{parse_space, print_space};
use morrey_core::morrey_seq::{op_norm_bracket, op_norm_formula, Layout, MorreyParams};
use morrey_core::nuclear_engine::{
    nuclear_lower_id_j, nuclear_upper_id_j, rep_diagonal, tong_diag_nuclear, tong_duality_bound,
    tong_witness, Diagonal,
};
use morrey_core::params::{
    gamma, gamma_bar, morrey_to_tau, p_star, tau_to_morrey, tong_exponent, tong_number, ExtScalar,
    Rational, Scale, SpaceSpec,
};
use proptest::prelude::*;

const INF: ExtScalar = ExtScalar::Infinity;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn exponents() -> Vec<ExtScalar> {
    vec![
        ExtScalar::int(1),
        ExtScalar::ratio(3, 2),
        ExtScalar::int(2),
        ExtScalar::int(4),
        INF,
    ]
}

fn grid() -> Vec<MorreyParams> {
    let e = exponents();
    let mut out = Vec::new();
    for &u in &e {
        for &p in &e {
            if let Ok(m) = MorreyParams::admissible(u, p) {
                out.push(m);
            }
        }
    }
    out
}

fn exponent_ge1() -> impl Strategy<Value = ExtScalar> {
    prop_oneof![
        1 => Just(INF),
        4 => (1i64..=8, 1i64..=4).prop_map(|(a, b)| ExtScalar::Finite(q(a.max(b), b))),
    ]
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=12, 1i64..=6).prop_map(|(a, b)| q(a, b))
}

fn smoothness() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=4).prop_map(|(a, b)| q(a, b))
}

fn scale() -> impl Strategy<Value = Scale> {
    prop_oneof![Just(Scale::B), Just(Scale::F)]
}

/// Morrey pair `p <= u`, both finite, `p >= 1`.
fn morrey_pair() -> impl Strategy<Value = (ExtScalar, ExtScalar)> {
    (1i64..=6, 1i64..=3, 0i64..=6).prop_map(|(a, b, k)| {
        let p = q(a.max(b), b);
        let u = p * q(k + 4, 4);
        (ExtScalar::Finite(u), ExtScalar::Finite(p))
    })
}

fn fine_q() -> impl Strategy<Value = ExtScalar> {
    prop_oneof![
        Just(INF),
        (1i64..=8, 1i64..=4).prop_map(|(a, b)| ExtScalar::Finite(q(a.max(b), b)))
    ]
}

fn morrey_f(d: u32) -> impl Strategy<Value = SpaceSpec> {
    (smoothness(), morrey_pair(), fine_q()).prop_map(move |(s, (u, p), fq)| SpaceSpec::Morrey {
        scale: Scale::F,
        s,
        u,
        p,
        q: fq,
        d,
    })
}

/// F-scale tau space with `1 <= p < inf` and `0 <= tau` up to `2/p`.
fn tau_f(d: u32) -> impl Strategy<Value = SpaceSpec> {
    (smoothness(), 1i64..=6, 1i64..=3, 0i64..=8, fine_q()).prop_map(move |(s, a, b, k, fq)| {
        let p = q(a.max(b), b);
        SpaceSpec::Tau {
            scale: Scale::F,
            s,
            p: ExtScalar::Finite(p),
            tau: q(k, 4) / p,
            q: fq,
            d,
        }
    })
}

fn any_space() -> impl Strategy<Value = SpaceSpec> {
    let d = 1u32..=3;
    prop_oneof![
        (scale(), smoothness(), morrey_pair(), fine_q(), d.clone()).prop_map(
            |(scale, s, (u, p), q, d)| SpaceSpec::Morrey {
                scale,
                s,
                u,
                p,
                q,
                d
            }
        ),
        (
            scale(),
            smoothness(),
            exponent_ge1(),
            0i64..=8,
            fine_q(),
            d.clone()
        )
            .prop_map(|(scale, s, p, k, q, d)| SpaceSpec::Tau {
                scale,
                s,
                p,
                tau: Rational::new(k, 4),
                q,
                d
            }),
        (scale(), smoothness(), exponent_ge1(), fine_q(), d.clone())
            .prop_map(|(scale, s, p, q, d)| SpaceSpec::Classical { scale, s, p, q, d }),
        (
            scale(),
            smoothness(),
            positive_rational(),
            1i64..=4,
            fine_q(),
            d.clone()
        )
            .prop_map(|(scale, s, p, k, q, d)| {
                let rho = -Rational::from_integer(d as i64) * Rational::new(k, 4);
                SpaceSpec::Rho {
                    scale,
                    s,
                    p: ExtScalar::Finite(p),
                    rho,
                    q,
                    d,
                }
            }),
        (exponent_ge1(), d.clone()).prop_map(|(r, d)| SpaceSpec::Lr { r, d }),
        d.clone().prop_map(|d| SpaceSpec::Bmo { d }),
        d.prop_map(|d| SpaceSpec::Linf { d }),
    ]
}

fn with_q(spec: SpaceSpec, new_q: ExtScalar) -> SpaceSpec {
    match spec {
        SpaceSpec::Morrey {
            scale, s, u, p, d, ..
        } => SpaceSpec::Morrey {
            scale,
            s,
            u,
            p,
            q: new_q,
            d,
        },
        SpaceSpec::Tau {
            scale,
            s,
            p,
            tau,
            d,
            ..
        } => SpaceSpec::Tau {
            scale,
            s,
            p,
            tau,
            q: new_q,
            d,
        },
        other => other,
    }
}

fn with_s(spec: SpaceSpec, new_s: Rational) -> SpaceSpec {
    match spec {
        SpaceSpec::Morrey {
            scale, u, p, q, d, ..
        } => SpaceSpec::Morrey {
            scale,
            s: new_s,
            u,
            p,
            q,
            d,
        },
        SpaceSpec::Tau {
            scale,
            p,
            tau,
            q,
            d,
            ..
        } => SpaceSpec::Tau {
            scale,
            s: new_s,
            p,
            tau,
            q,
            d,
        },
        other => other,
    }
}

fn implies_compact(compact: Tri, nuclear: Tri) -> bool {
    nuclear != Tri::Yes || compact != Tri::No
}

proptest! {
    #[test]
    fn tong_number_is_at_least_one(r1 in exponent_ge1(), r2 in exponent_ge1()) {
        let e = tong_exponent(r1, r2).unwrap();
        prop_assert!(e >= Rational::from_integer(0) && e <= Rational::from_integer(1));
        prop_assert!(tong_number(r1, r2).unwrap() >= ExtScalar::int(1));
    }

    #[test]
    fn tong_number_meets_p_star_only_at_the_corners(r1 in exponent_ge1(), r2 in exponent_ge1()) {
        let one = ExtScalar::int(1);
        let corner = (r1 == one && r2 == INF) || (r1 == INF && r2 == one);
        prop_assert_eq!(tong_number(r1, r2).unwrap() == p_star(r1, r2).unwrap(), corner);
    }

    #[test]
    fn tong_number_nondecreasing_in_r2(r1 in exponent_ge1(), a in exponent_ge1(), b in exponent_ge1()) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(tong_exponent(r1, lo).unwrap() >= tong_exponent(r1, hi).unwrap());
    }

    #[test]
    fn tau_and_morrey_forms_round_trip(spec in tau_f(1)) {
        if let SpaceSpec::Tau { p, tau, .. } = spec {
            prop_assume!(tau < p.recip());
        }
        let m = tau_to_morrey(&spec).unwrap();
        prop_assert_eq!(morrey_to_tau(&m).unwrap(), spec);
    }

    #[test]
    fn morrey_form_round_trips(spec in morrey_f(2)) {
        let t = morrey_to_tau(&spec).unwrap();
        prop_assert_eq!(tau_to_morrey(&t).unwrap(), spec);
    }

    #[test]
    fn print_then_parse_is_identity(spec in any_space()) {
        prop_assume!(spec.validate().is_ok());
        let text = print_space(&spec);
        prop_assert_eq!(parse_space(&text).unwrap(), spec, "{}", text);
    }

    #[test]
    fn nuclear_implies_compact_on_morrey_scale(a in morrey_f(1), b in morrey_f(1)) {
        let v = classify_morrey(&a, &b).unwrap();
        prop_assert!(implies_compact(v.compact, v.nuclear));
    }

    #[test]
    fn nuclear_implies_compact_on_tau_scale(a in tau_f(2), b in tau_f(2)) {
        let v = classify_tau(&a, &b).unwrap();
        prop_assert!(implies_compact(v.compact, v.nuclear));
    }

    #[test]
    fn tau_form_agrees_with_morrey_form(a in morrey_f(1), b in morrey_f(1)) {
        let direct = classify_morrey(&a, &b).unwrap();
        let via = classify_tau(&morrey_to_tau(&a).unwrap(), &morrey_to_tau(&b).unwrap()).unwrap();
        prop_assert_eq!(direct.compact, via.compact);
        prop_assert_eq!(direct.nuclear, via.nuclear);
        prop_assert_eq!(direct.threshold_compact, via.threshold_compact);
        prop_assert_eq!(direct.threshold_nuclear, via.threshold_nuclear);
    }

    #[test]
    fn nuclear_verdict_ignores_fine_parameters(a in tau_f(1), b in tau_f(1), q1 in fine_q(), q2 in fine_q()) {
        let base = classify_tau(&a, &b).unwrap();
        let moved = classify_tau(&with_q(a, q1), &with_q(b, q2)).unwrap();
        prop_assert_eq!(base.nuclear, moved.nuclear);
        prop_assert_eq!(base.compact, moved.compact);
    }

    #[test]
    fn boundary_classifies_no(a in morrey_f(1), b in morrey_f(1)) {
        let v = classify_morrey(&a, &b).unwrap();
        let s2 = b.smoothness().unwrap();
        for t in [v.threshold_compact, v.threshold_nuclear].into_iter().flatten() {
            let on = with_s(a, s2 + t.finite().unwrap());
            let w = classify_morrey(&on, &b).unwrap();
            let (tri, flag) = if Some(t) == v.threshold_compact {
                (w.compact, w.boundary_compact)
            } else {
                (w.nuclear, w.boundary_nuclear)
            };
            prop_assert_eq!(tri, Tri::No);
            prop_assert!(flag);
        }
    }

    #[test]
    fn rho_at_minus_d_is_classical(
        sc in scale(), s1 in smoothness(), s2 in smoothness(),
        p1 in positive_rational(), p2 in positive_rational(), d in 1u32..=3,
    ) {
        let dim = -Rational::from_integer(d as i64);
        let q2 = ExtScalar::int(2);
        let rho = |s, p| SpaceSpec::Rho { scale: sc, s, p: ExtScalar::Finite(p), rho: dim, q: q2, d };
        let classical = |s, p: Rational| SpaceSpec::Morrey {
            scale: sc, s, u: ExtScalar::Finite(p), p: ExtScalar::Finite(p), q: q2, d,
        };
        let a = classify_rho(&rho(s1, p1), &rho(s2, p2)).unwrap();
        let b = classify_morrey(&classical(s1, p1), &classical(s2, p2)).unwrap();
        prop_assert_eq!(a.compact, b.compact);
        prop_assert_eq!(a.nuclear, b.nuclear);
        let t = classify(&classical(s1, p1), &SpaceSpec::Tau {
            scale: sc, s: s2, p: ExtScalar::Finite(p2), tau: q(0, 1), q: q2, d,
        }).unwrap();
        prop_assert_eq!(a.compact, t.compact);
        prop_assert_eq!(a.nuclear, t.nuclear);
    }
}

#[test]
fn gamma_bar_dominates_gamma_on_grid() {
    let taus = [q(0, 1), q(1, 4), q(1, 2), q(1, 1), q(2, 1)];
    for &t1 in &taus {
        for &t2 in &taus {
            for &p1 in &exponents() {
                for &p2 in &exponents() {
                    let g = gamma(t1, t2, p1, p2).unwrap();
                    let gb = gamma_bar(t1, t2, p1, p2).unwrap();
                    assert!(gb >= g, "tau=({t1},{t2}) p=({p1},{p2}): {gb} < {g}");
                }
            }
        }
    }
}

#[test]
fn level_blocks_partition_the_leaves() {
    for d in 1..=2u32 {
        for j in 0..=4u32 {
            let index = CubeIndexSet::new(j, d).unwrap();
            let leaves = index.members();
            assert_eq!(leaves.len(), 1 << (j * d));
            let reference = DyadicCube::reference(j, d).unwrap();
            for nu in 0..=j {
                let blocks = reference.subcubes(-(nu as i32)).unwrap();
                assert_eq!(blocks.len(), 1 << ((j - nu) * d));
                assert_eq!(index.blocks_at(nu), blocks.len());
                let mut seen = vec![0usize; leaves.len()];
                for b in &blocks {
                    let inner = b.subcubes(0).unwrap();
                    assert_eq!(inner.len(), 1 << (nu * d));
                    for leaf in inner {
                        let off = index.index_of(&leaf.offset).unwrap();
                        seen[off] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1), "j={j} d={d} nu={nu}");
                let map = index.block_map(nu);
                for (k, leaf) in leaves.iter().enumerate() {
                    assert!(blocks[map[k]].contains(leaf).unwrap());
                }
            }
        }
    }
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
}

fn params_index() -> impl Strategy<Value = usize> {
    0..grid().len()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_is_monotone_under_domination(i in params_index(), x in vector(8), extra in proptest::collection::vec(0.0f64..1.0, 8)) {
        let layout = Layout::new(3, 1).unwrap();
        let m = grid()[i];
        let y: Vec<f64> = x.iter().zip(&extra).map(|(a, e)| a.signum() * (a.abs() + e)).collect();
        prop_assert!(layout.norm(&m, &x) <= layout.norm(&m, &y) * (1.0 + 1e-12));
    }

    #[test]
    fn norm_is_subadditive_and_homogeneous(i in params_index(), x in vector(8), y in vector(8), c in -4.0f64..4.0) {
        let layout = Layout::new(3, 1).unwrap();
        let m = grid()[i];
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = x.iter().map(|a| c * a).collect();
        let (nx, ny) = (layout.norm(&m, &x), layout.norm(&m, &y));
        prop_assert!(layout.norm(&m, &sum) <= (nx + ny) * (1.0 + 1e-12) + 1e-15);
        prop_assert!(close(layout.norm(&m, &scaled), c.abs() * nx, 1e-12));
    }

    #[test]
    fn sampled_ratio_never_exceeds_upper_bounds(i in params_index(), k in params_index(), j in 1u32..=3, x in vector(8)) {
        let (src, dst) = (grid()[i], grid()[k]);
        let layout = Layout::new(j, 1).unwrap();
        let x = &x[..layout.len()];
        let s = layout.norm(&src, x);
        prop_assume!(s > 1e-9);
        let ratio = layout.norm(&dst, x) / s;
        let f = op_norm_formula(src, dst, j, 1);
        prop_assert!(ratio <= f.value * (1.0 + 1e-9), "formula {:?}", f);
        if let Some(b) = op_norm_bracket(src, dst, j, 1).unwrap() {
            prop_assert!(ratio <= b.upper * (1.0 + 1e-9));
            prop_assert!(b.lower <= b.upper * (1.0 + 1e-9));
        }
    }

    #[test]
    fn tong_duality_never_exceeds_tong_value(
        tau in proptest::collection::vec((-6i64..=6, 1i64..=3), 1..=3),
        a in 0usize..3, b in 0usize..3,
    ) {
        let rs = [ExtScalar::int(1), ExtScalar::int(2), INF];
        let (r1, r2) = (rs[a], rs[b]);
        let exact: Vec<Rational> = tau.iter().map(|&(n, d)| q(n, d)).collect();
        let floats: Vec<f64> = exact.iter().map(|t| *t.numer() as f64 / *t.denom() as f64).collect();
        let value = tong_diag_nuclear(&Diagonal::Finite(exact), r1, r2).unwrap().value().unwrap();
        let w = tong_witness(&floats, r1, r2).unwrap();
        let lower = tong_duality_bound(&floats, r1, r2, &w).unwrap().lower_bound;
        prop_assert!(lower <= value * (1.0 + 1e-9) + 1e-12);
        let cert = rep_diagonal(&floats, r1, r2).unwrap();
        prop_assert!(cert.reconstruction_error <= 1e-10);
        prop_assert!(cert.bound >= lower * (1.0 - 1e-9));
    }
}

#[test]
fn tong_value_on_constant_diagonal() {
    let rs = [ExtScalar::int(1), ExtScalar::int(2), INF];
    for n in 1..=6usize {
        for &r1 in &rs {
            for &r2 in &rs {
                let t = tong_exponent(r1, r2).unwrap();
                let want = (n as f64).powf(*t.numer() as f64 / *t.denom() as f64);
                let got = tong_diag_nuclear(&Diagonal::Finite(vec![q(1, 1); n]), r1, r2).unwrap();
                assert!(
                    close(got.value().unwrap(), want, 1e-12),
                    "n={n} r=({r1},{r2})"
                );
            }
        }
    }
}

#[test]
fn nuclear_lower_never_exceeds_upper() {
    for src in grid() {
        for dst in grid() {
            for j in 1..=2 {
                let up = nuclear_upper_id_j(src, dst, j, 1).unwrap();
                let lo = nuclear_lower_id_j(src, dst, j, 1).unwrap();
                assert!(up.reconstruction_error <= 1e-10, "{src:?} {dst:?} j={j}");
                assert!(
                    lo.lower_bound <= up.bound * (1.0 + 1e-9),
                    "{src:?} {dst:?} j={j}"
                );
            }
        }
    }
}
