//! Formula-versus-oracle runs over the desk-scale parameter grid, reported
//! as versioned JSON.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classifier::{classify_morrey, classify_tau, Tri};
use crate::morrey_seq::{
    op_norm_bracket, op_norm_formula, op_norm_lower_oracle, MorreyParams, OracleOptions,
};
use crate::nuclear_engine::{
    nuclear_formula_id_j, nuclear_lower_id_j, nuclear_upper_id_j, rep_diagonal, tong_diag_nuclear,
    tong_duality_bound, tong_witness, Diagonal,
};
use crate::params::{
    format_rational, morrey_to_tau, rational_to_f64, ExtScalar, Rational, Scale, SpaceSpec,
};
use crate::tolerance;

pub const SCHEMA: &str = "morrey-verify/1";
pub const DEFAULT_BUDGET: usize = 256;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const CASE_TIME_LIMIT: Duration = Duration::from_secs(10);
/// Random parameter tuples in the classifier plan.
pub const CLASSIFIER_CASES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Plan {
    Opnorms,
    Nuclear,
    Tong,
    ClassifierConsistency,
    All,
}

impl Plan {
    pub fn name(self) -> &'static str {
        match self {
            Plan::Opnorms => "opnorms",
            Plan::Nuclear => "nuclear",
            Plan::Tong => "tong",
            Plan::ClassifierConsistency => "classifier-consistency",
            Plan::All => "all",
        }
    }

    fn parts(self) -> Vec<Plan> {
        match self {
            Plan::All => vec![
                Plan::Tong,
                Plan::Opnorms,
                Plan::Nuclear,
                Plan::ClassifierConsistency,
            ],
            p => vec![p],
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Plan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "opnorms" => Plan::Opnorms,
            "nuclear" => Plan::Nuclear,
            "tong" => Plan::Tong,
            "classifier-consistency" | "classifier" => Plan::ClassifierConsistency,
            "all" => Plan::All,
            other => return Err(format!("unknown plan '{other}'")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    CertifiedExact,
    SandwichConsistent,
    Violated,
    Skipped,
    Timeout,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::CertifiedExact => "certified-exact",
            Status::SandwichConsistent => "sandwich-consistent",
            Status::Violated => "violated",
            Status::Skipped => "skipped",
            Status::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub params: Value,
    pub formula: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub seed: u64,
    pub cases: Vec<CaseReport>,
}

impl VerificationReport {
    pub fn count(&self, status: Status) -> usize {
        self.cases.iter().filter(|c| c.status == status).count()
    }

    pub fn violated(&self) -> bool {
        self.count(Status::Violated) > 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} cases, {} violated",
            self.cases.len(),
            self.count(Status::Violated)
        );
        for st in [Status::Skipped, Status::Timeout] {
            let k = self.count(st);
            if k > 0 {
                s.push_str(&format!(", {k} {}", st.as_str()));
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub budget: usize,
    pub samples: usize,
    pub time_limit: Duration,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            budget: DEFAULT_BUDGET,
            samples: DEFAULT_SAMPLES,
            time_limit: CASE_TIME_LIMIT,
        }
    }
}

/// Integrabilities `{1, 3/2, 2, 4, inf}` with `p <= u`, `u < inf` unless `p = u = inf`.
pub fn admissible_grid() -> Vec<MorreyParams> {
    let vals = [
        ExtScalar::int(1),
        ExtScalar::ratio(3, 2),
        ExtScalar::int(2),
        ExtScalar::int(4),
        ExtScalar::Infinity,
    ];
    let mut out = Vec::new();
    for u in vals {
        for p in vals {
            if let Ok(m) = MorreyParams::admissible(u, p) {
                out.push(m);
            }
        }
    }
    out
}

pub const GRID_LEVELS: [u32; 3] = [1, 2, 3];
pub const GRID_DIM: u32 = 1;

fn pair_json(m: &MorreyParams) -> Value {
    json!({ "u": m.u.to_string(), "p": m.p.to_string() })
}

fn case_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

enum Job {
    OpNorm {
        src: MorreyParams,
        dst: MorreyParams,
        j: u32,
    },
    Nuclear {
        src: MorreyParams,
        dst: MorreyParams,
        j: u32,
    },
    Tong {
        tau: Vec<Rational>,
        label: &'static str,
        r1: ExtScalar,
        r2: ExtScalar,
    },
    Classifier {
        index: usize,
    },
}

fn jobs(plan: Plan) -> Vec<Job> {
    let grid = admissible_grid();
    let mut out = Vec::new();
    for part in plan.parts() {
        match part {
            Plan::Opnorms | Plan::Nuclear => {
                for src in &grid {
                    for dst in &grid {
                        for j in GRID_LEVELS {
                            out.push(if part == Plan::Opnorms {
                                Job::OpNorm {
                                    src: *src,
                                    dst: *dst,
                                    j,
                                }
                            } else {
                                Job::Nuclear {
                                    src: *src,
                                    dst: *dst,
                                    j,
                                }
                            });
                        }
                    }
                }
            }
            Plan::Tong => {
                let rs = [ExtScalar::int(1), ExtScalar::int(2), ExtScalar::Infinity];
                for n in 1..=4usize {
                    for (label, tau) in tong_vectors(n) {
                        for r1 in rs {
                            for r2 in rs {
                                out.push(Job::Tong {
                                    tau: tau.clone(),
                                    label,
                                    r1,
                                    r2,
                                });
                            }
                        }
                    }
                }
            }
            Plan::ClassifierConsistency => {
                out.extend((0..CLASSIFIER_CASES).map(|index| Job::Classifier { index }))
            }
            Plan::All => unreachable!(),
        }
    }
    out
}

/// The constant diagonal and two non-constant ones of length `n`.
pub fn tong_vectors(n: usize) -> Vec<(&'static str, Vec<Rational>)> {
    let ones = vec![Rational::from_integer(1); n];
    let ramp = (1..=n as i64).map(Rational::from_integer).collect();
    let alternating = (1..=n as i64)
        .map(|k| Rational::new(if k % 2 == 0 { -1 } else { 1 }, k))
        .collect();
    vec![("ones", ones), ("ramp", ramp), ("alternating", alternating)]
}

fn skipped(id: String, params: Value, formula: f64) -> CaseReport {
    CaseReport {
        id,
        params,
        formula,
        lower: None,
        upper: None,
        status: Status::Skipped,
    }
}

fn run_opnorm(
    src: MorreyParams,
    dst: MorreyParams,
    j: u32,
    index: usize,
    opts: &SuiteOptions,
) -> CaseReport {
    let d = GRID_DIM;
    let id = format!("opnorm/{}_{}->{}_{}/j{j}", src.u, src.p, dst.u, dst.p);
    let params = json!({ "src": pair_json(&src), "dst": pair_json(&dst), "j": j, "d": d });
    let f = op_norm_formula(src, dst, j, d);
    let n = 1usize << (j * d);
    if n > opts.budget {
        return skipped(id, params, f.value);
    }
    let oracle_opts = OracleOptions {
        samples: opts.samples,
        seed: case_seed(opts.seed, index),
        deadline: Some(Instant::now() + opts.time_limit),
    };
    let oracle =
        op_norm_lower_oracle(src, dst, j, d, &oracle_opts).expect("grid stays at desk scale");
    let bracket = op_norm_bracket(src, dst, j, d).expect("grid stays at desk scale");
    let upper = bracket.map_or(f.value, |b| b.upper.min(f.value));
    let tol = tolerance::CERTIFY;
    let status = if oracle.timed_out {
        Status::Timeout
    } else if oracle.value > f.value * (1.0 + tol) || oracle.sampled_max > f.value * (1.0 + tol) {
        Status::Violated
    } else if f.exact {
        if relative_close(oracle.value, f.value, tol) {
            Status::CertifiedExact
        } else {
            Status::Violated
        }
    } else {
        Status::SandwichConsistent
    };
    CaseReport {
        id,
        params,
        formula: f.value,
        lower: Some(oracle.value),
        upper: Some(upper),
        status,
    }
}

fn run_nuclear(src: MorreyParams, dst: MorreyParams, j: u32, opts: &SuiteOptions) -> CaseReport {
    let d = GRID_DIM;
    let id = format!("nuclear/{}_{}->{}_{}/j{j}", src.u, src.p, dst.u, dst.p);
    let params = json!({ "src": pair_json(&src), "dst": pair_json(&dst), "j": j, "d": d });
    let f = nuclear_formula_id_j(src, dst, j, d).expect("grid is admissible");
    if 1usize << (j * d) > opts.budget {
        return skipped(id, params, f.value);
    }
    let up = nuclear_upper_id_j(src, dst, j, d).expect("grid stays at desk scale");
    let low = nuclear_lower_id_j(src, dst, j, d).expect("grid stays at desk scale");
    let tol = tolerance::CERTIFY;
    let sound =
        up.reconstruction_error <= tolerance::RESIDUAL && low.lower_bound <= up.bound * (1.0 + tol);
    let status = match (sound, f.exact) {
        (false, _) => Status::Violated,
        (true, true)
            if relative_close(up.bound, f.value, tol)
                && relative_close(low.lower_bound, f.value, tol) =>
        {
            Status::CertifiedExact
        }
        (true, true) => Status::Violated,
        (true, false) => Status::SandwichConsistent,
    };
    CaseReport {
        id,
        params,
        formula: f.value,
        lower: Some(low.lower_bound),
        upper: Some(up.bound),
        status,
    }
}

fn run_tong(
    tau: &[Rational],
    label: &str,
    r1: ExtScalar,
    r2: ExtScalar,
    opts: &SuiteOptions,
) -> CaseReport {
    let n = tau.len();
    let id = format!("tong/{label}{n}/{r1}->{r2}");
    let params = json!({
        "tau": tau.iter().map(|v| format_rational(*v)).collect::<Vec<_>>(),
        "r1": r1.to_string(),
        "r2": r2.to_string(),
    });
    let value = tong_diag_nuclear(&Diagonal::Finite(tau.to_vec()), r1, r2)
        .expect("exponents are valid")
        .value()
        .expect("finite diagonals are nuclear");
    if n > opts.budget {
        return skipped(id, params, value);
    }
    let tf: Vec<f64> = tau.iter().map(|v| rational_to_f64(*v)).collect();
    let cert = rep_diagonal(&tf, r1, r2).expect("exponents are valid");
    let witness = tong_witness(&tf, r1, r2).expect("exponents are valid");
    let low = tong_duality_bound(&tf, r1, r2, &witness).expect("lengths agree");
    let tol = tolerance::CERTIFY;
    let status = if cert.reconstruction_error <= tolerance::RESIDUAL
        && relative_close(cert.bound, value, tol)
        && relative_close(low.lower_bound, value, tol)
    {
        Status::CertifiedExact
    } else {
        Status::Violated
    };
    CaseReport {
        id,
        params,
        formula: value,
        lower: Some(low.lower_bound),
        upper: Some(cert.bound),
        status,
    }
}

fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> Rational {
    Rational::new(rng.gen_range(lo * den..=hi * den), den)
}

/// A random F-scale Morrey pair with `p <= u`.
pub fn random_morrey_pair(rng: &mut ChaCha8Rng) -> (SpaceSpec, SpaceSpec) {
    let side = |rng: &mut ChaCha8Rng| {
        let ip = Rational::new(rng.gen_range(1..=8), 8);
        let iu = Rational::new(rng.gen_range(1..=8), 8) * ip;
        let q = if rng.gen_bool(0.2) {
            ExtScalar::Infinity
        } else {
            ExtScalar::from_recip(Rational::new(rng.gen_range(1..=4), 4))
        };
        (ExtScalar::from_recip(iu), ExtScalar::from_recip(ip), q)
    };
    let (u1, p1, q1) = side(rng);
    let (u2, p2, q2) = side(rng);
    let s1 = random_rational(rng, -2, 3, 4);
    let s2 = random_rational(rng, -2, 3, 4);
    let d = rng.gen_range(1..=3);
    (
        SpaceSpec::Morrey {
            scale: Scale::F,
            s: s1,
            u: u1,
            p: p1,
            q: q1,
            d,
        },
        SpaceSpec::Morrey {
            scale: Scale::F,
            s: s2,
            u: u2,
            p: p2,
            q: q2,
            d,
        },
    )
}

fn run_classifier(index: usize, opts: &SuiteOptions) -> CaseReport {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed(opts.seed, index));
    let (a, b) = random_morrey_pair(&mut rng);
    let id = format!("classifier/{index}");
    let params =
        json!({ "src": crate::grammar::print_space(&a), "dst": crate::grammar::print_space(&b) });
    let direct = classify_morrey(&a, &b).expect("generated pairs are valid");
    if opts.budget == 0 {
        return skipped(
            id,
            params,
            direct.threshold_nuclear.map_or(0.0, |v| v.to_f64()),
        );
    }
    let via_tau = morrey_to_tau(&a)
        .and_then(|ta| morrey_to_tau(&b).map(|tb| (ta, tb)))
        .and_then(|(ta, tb)| classify_tau(&ta, &tb));
    let to_f = |t: Option<ExtScalar>| t.map_or(f64::NAN, |v| v.to_f64());
    let formula = to_f(direct.threshold_nuclear);
    let implication = !(direct.nuclear == Tri::Yes && direct.compact == Tri::No);
    let ordered = match (direct.threshold_compact, direct.threshold_nuclear) {
        (Some(c), Some(n)) => c <= n,
        _ => true,
    };
    let agrees = via_tau.is_ok_and(|v| v.compact == direct.compact && v.nuclear == direct.nuclear);
    let status = if implication && ordered && agrees {
        Status::CertifiedExact
    } else {
        Status::Violated
    };
    CaseReport {
        id,
        params,
        formula: if formula.is_finite() { formula } else { 0.0 },
        lower: direct.threshold_compact.map(|v| v.to_f64()),
        upper: direct.threshold_nuclear.map(|v| v.to_f64()),
        status,
    }
}

/// Runs every case of `plan`; case order is the declared grid order.
pub fn run_suite(plan: Plan, opts: &SuiteOptions) -> VerificationReport {
    let jobs = jobs(plan);
    let cases = jobs
        .par_iter()
        .enumerate()
        .map(|(index, job)| match job {
            Job::OpNorm { src, dst, j } => run_opnorm(*src, *dst, *j, index, opts),
            Job::Nuclear { src, dst, j } => run_nuclear(*src, *dst, *j, opts),
            Job::Tong { tau, label, r1, r2 } => run_tong(tau, label, *r1, *r2, opts),
            Job::Classifier { index: k } => run_classifier(*k, opts),
        })
        .collect();
    VerificationReport {
        schema: SCHEMA,
        seed: opts.seed,
        cases,
    }
}

/// Declared number of cases for `plan`.
pub fn grid_size(plan: Plan) -> usize {
    jobs(plan).len()
}
