//! Batch jobs behind the command-line tool. Each job returns a serializable
//! report with a plain-text rendering carrying the same numbers.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bocksteindga::{self, BigradedElement, BocksteinError, DifferentialReport};
use crate::extalg::ExtError;
use crate::fplin::{FpError, Prime};
use crate::koszul::{self, BettiTable, KBasisVector, KInvariantSubspace, KoszulComplex, KoszulError, QuadraticForm};
use crate::pgroups::{PGroup, PGroupError, VerificationReport, VerifyMode, VerifyOptions};
use crate::series::{self, PoincarePolynomial, PoincareSeries, SeriesChecks};
use crate::younghook::{self, HookError};

/// Largest `n` accepted by the cross-validation harness.
pub const CROSSCHECK_MAX_N: usize = 5;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_BOCKSTEIN_NOT_CONTAINED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_DISAGREE: i32 = 5;

#[derive(Debug, Error)]
pub enum JobError {
    #[error(transparent)]
    Koszul(#[from] KoszulError),
    #[error(transparent)]
    Group(#[from] PGroupError),
    #[error(transparent)]
    Bockstein(#[from] BocksteinError),
    #[error(transparent)]
    Hook(#[from] HookError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl JobError {
    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Koszul(KoszulError::BocksteinNotContained { .. }) => EXIT_BOCKSTEIN_NOT_CONTAINED,
            JobError::Koszul(
                KoszulError::Ext(_)
                | KoszulError::Fp(_)
                | KoszulError::NotQuadratic(_)
                | KoszulError::BocksteinLength { .. }
                | KoszulError::DependentQuadratics { .. }
                | KoszulError::DegenerateSubspace { .. }
                | KoszulError::TooManyQuadratics { .. },
            ) => EXIT_INPUT,
            JobError::Bockstein(BocksteinError::Syntax { .. }) => EXIT_INPUT,
            JobError::Group(PGroupError::BudgetExceeded { .. }) => EXIT_BUDGET,
            JobError::Input(_) => EXIT_INPUT,
            _ => EXIT_OTHER,
        }
    }

    /// Extra guidance printed after the error message.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            JobError::Group(PGroupError::BudgetExceeded { .. }) => Some("rerun with --mode sampled"),
            JobError::Koszul(KoszulError::DependentQuadratics { .. }) => Some("pass --force to compute anyway"),
            _ => None,
        }
    }
}

fn prime(p: u64) -> Result<Prime, JobError> {
    Prime::new(p).map_err(|e: FpError| JobError::Input(e.to_string()))
}

fn ser_big<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    #[serde(untagged)]
    enum Num {
        Small(u64),
        Big(String),
    }
    let nums: Vec<Num> = v
        .iter()
        .map(|b| b.to_u64().map_or_else(|| Num::Big(b.to_string()), Num::Small))
        .collect();
    nums.serialize(s)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Report rendering shared by all jobs.
pub trait Report: Serialize {
    fn text(&self) -> String;

    fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    /// Process exit status for a successful run.
    fn exit_code(&self) -> i32 {
        EXIT_OK
    }
}

// ---- koszul ----------------------------------------------------------------

/// Machine-readable extension data.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KoszulInput {
    pub p: u64,
    pub w: usize,
    #[serde(default)]
    pub quadratics: Option<Vec<Vec<(usize, usize, i64)>>>,
    #[serde(default)]
    pub k_basis: Option<Vec<KBasisInput>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KBasisInput {
    pub b: Vec<i64>,
    #[serde(default)]
    pub q: Vec<(usize, usize, i64)>,
}

impl KoszulInput {
    pub fn from_json(text: &str) -> Result<Self, JobError> {
        serde_json::from_str(text).map_err(|e| JobError::Input(e.to_string()))
    }
}

/// Where the quadratics come from.
#[derive(Debug, Clone)]
pub enum KoszulSource {
    File(KoszulInput),
    Inline { w: usize, p: u64, quadratics: Vec<String> },
}

#[derive(Debug, Clone)]
pub struct KoszulOptions {
    pub truncation: Option<usize>,
    pub max_reps: Option<usize>,
    pub force: bool,
}

impl Default for KoszulOptions {
    fn default() -> Self {
        KoszulOptions {
            truncation: None,
            max_reps: Some(10),
            force: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypotheses {
    /// `K` contains the Bockstein image; assumed when quadratics are given
    /// directly.
    pub bockstein_contained: bool,
    pub bockstein_checked: bool,
    pub frattini_basis: bool,
    /// `p > r + 1`.
    pub prime_bound: bool,
    /// `p > 3`, needed for the Bockstein formulas.
    pub prime_above_three: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeRepresentatives {
    pub degree: usize,
    pub count: usize,
    pub shown: Vec<String>,
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSection {
    pub numerator: String,
    #[serde(serialize_with = "ser_big")]
    pub numerator_coefficients: Vec<BigUint>,
    pub denominator_exponent: usize,
    pub truncation: usize,
    #[serde(serialize_with = "ser_big")]
    pub expansion: Vec<BigUint>,
    pub checks: SeriesChecks,
    pub division_recovers_numerator: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KoszulReport {
    pub p: u32,
    pub w: usize,
    pub r: usize,
    pub quadratics: Vec<String>,
    pub hypotheses: Hypotheses,
    pub warnings: Vec<String>,
    pub betti: Vec<usize>,
    pub total: usize,
    pub euler_characteristic: i64,
    pub representatives: Vec<DegreeRepresentatives>,
    pub series: SeriesSection,
}

fn series_section(q: PoincarePolynomial, w: usize, r: usize, truncation: usize) -> SeriesSection {
    let v = w + r;
    let checks = series::checks(&q, w, r);
    let s = PoincareSeries::new(q.clone(), v);
    let expansion = s.expand(truncation);
    let back = series::multiply_by_denominator(&expansion, v);
    let division_recovers_numerator = (0..=truncation).all(|d| back[d] == q.coefficient(d).into());
    let monotone = v == 0 || series::expansion_is_monotone(&expansion, q.degree().unwrap_or(0));
    SeriesSection {
        numerator: q.to_string(),
        numerator_coefficients: q.coefficients().to_vec(),
        denominator_exponent: v,
        truncation,
        expansion,
        checks,
        division_recovers_numerator,
        monotone,
    }
}

fn build_complex(source: &KoszulSource, force: bool) -> Result<(KoszulComplex, bool), JobError> {
    let make = |w, qs, p| {
        if force {
            KoszulComplex::new_forced(w, qs, p)
        } else {
            KoszulComplex::new(w, qs, p)
        }
    };
    match source {
        KoszulSource::Inline { w, p, quadratics } => {
            let p = prime(*p)?;
            let qs = quadratics
                .iter()
                .map(|t| QuadraticForm::parse(t, *w, p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((make(*w, qs, p)?, false))
        }
        KoszulSource::File(input) => {
            let p = prime(input.p)?;
            let w = input.w;
            match (&input.quadratics, &input.k_basis) {
                (Some(qs), None) => {
                    let qs = qs
                        .iter()
                        .map(|t| QuadraticForm::from_triples(w, p, t))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok((make(w, qs, p)?, false))
                }
                (None, Some(basis)) => {
                    let basis = basis
                        .iter()
                        .map(|v| {
                            Ok(KBasisVector {
                                bockstein: v.b.iter().map(|&c| p.reduce(c)).collect(),
                                quadratic: QuadraticForm::from_triples(w, p, &v.q)?,
                            })
                        })
                        .collect::<Result<Vec<_>, KoszulError>>()?;
                    Ok((KInvariantSubspace::new(w, p, basis)?.canonicalize()?, true))
                }
                _ => Err(JobError::Input("exactly one of `quadratics` and `k_basis` is required".into())),
            }
        }
    }
}

fn representatives(table: &BettiTable, max_reps: Option<usize>) -> Vec<DegreeRepresentatives> {
    (0..=table.complex().top_degree())
        .map(|d| {
            let reps = table.representatives(d);
            let limit = max_reps.unwrap_or(usize::MAX);
            DegreeRepresentatives {
                degree: d,
                count: reps.len(),
                shown: reps.iter().take(limit).map(ToString::to_string).collect(),
                truncated: reps.len() > limit,
            }
        })
        .collect()
}

pub fn run_koszul(source: &KoszulSource, options: &KoszulOptions) -> Result<KoszulReport, JobError> {
    let (complex, canonicalized) = build_complex(source, options.force)?;
    let table = complex.betti();
    let (w, r) = (complex.w(), complex.r());
    let p = complex.prime().value();
    let mut warnings = complex.warnings().to_vec();
    if !complex.hypothesis_met() {
        warnings.push(format!(
            "p = {p} does not exceed r + 1 = {}; the homology is reported without identifying it with H*(G)/(zeta)",
            r + 1
        ));
    }
    if p <= 3 {
        warnings.push("p <= 3: the Bockstein formulas are not available".into());
    }
    let truncation = options.truncation.unwrap_or(2 * (w + r));
    Ok(KoszulReport {
        p,
        w,
        r,
        quadratics: complex.quadratics().iter().map(ToString::to_string).collect(),
        hypotheses: Hypotheses {
            bockstein_contained: true,
            bockstein_checked: canonicalized,
            frattini_basis: complex.quadratics_independent(),
            prime_bound: complex.hypothesis_met(),
            prime_above_three: p > 3,
        },
        warnings,
        betti: table.dims().to_vec(),
        total: table.total(),
        euler_characteristic: table.euler_characteristic(),
        representatives: representatives(&table, options.max_reps),
        series: series_section(PoincarePolynomial::from_betti(&table), w, r, truncation),
    })
}

fn render_series(out: &mut String, s: &SeriesSection) {
    let _ = writeln!(out, "q(t): {}", s.numerator);
    let _ = writeln!(out, "denominator: (1 - t^2)^{}", s.denominator_exponent);
    let _ = writeln!(out, "p(t) through degree {}: {}", s.truncation, join(&s.expansion));
    let _ = writeln!(
        out,
        "checks: palindrome={} euler_zero={} degree_match={} division={} monotone={}",
        s.checks.palindrome, s.checks.euler_zero, s.checks.degree_match, s.division_recovers_numerator, s.monotone
    );
}

impl Report for KoszulReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "koszul complex: w={} r={} p={}", self.w, self.r, self.p);
        for (t, q) in self.quadratics.iter().enumerate() {
            let _ = writeln!(out, "  delta(x{}) = {q}", t + 1);
        }
        let h = &self.hypotheses;
        let _ = writeln!(
            out,
            "hypotheses: bockstein_contained={}{} frattini_basis={} p>r+1={} p>3={}",
            h.bockstein_contained,
            if h.bockstein_checked { "" } else { " (assumed)" },
            h.frattini_basis,
            h.prime_bound,
            h.prime_above_three
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let _ = writeln!(out, "betti: {}", join(&self.betti));
        let _ = writeln!(out, "total: {}  euler: {}", self.total, self.euler_characteristic);
        for d in &self.representatives {
            let more = if d.truncated { format!(" (+{} more)", d.count - d.shown.len()) } else { String::new() };
            let _ = writeln!(out, "H^{} [{}]: {}{more}", d.degree, d.count, d.shown.join(", "));
        }
        render_series(&mut out, &self.series);
        out
    }
}

// ---- unp -------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "AGREE")]
    Agree,
    #[serde(rename = "DISAGREE")]
    Disagree,
    /// Outside `p > r + 1`; no claim is made either way.
    #[serde(rename = "INFORMATIONAL")]
    Informational,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Agree => "AGREE",
            Verdict::Disagree => "DISAGREE",
            Verdict::Informational => "INFORMATIONAL",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeComparison {
    pub degree: usize,
    pub koszul: usize,
    pub oracle: u64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedForms {
    pub a1: u64,
    pub a2: u64,
    pub a3: u64,
    pub match_oracle: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnpReport {
    pub n: usize,
    pub p: u32,
    pub p_defaulted: bool,
    pub r: usize,
    pub hypothesis_met: bool,
    pub koszul: Vec<usize>,
    pub oracle: Vec<u64>,
    pub degrees: Vec<DegreeComparison>,
    pub all_degrees_agree: bool,
    pub closed_forms: ClosedForms,
    pub verdict: Verdict,
    pub series: SeriesSection,
}

/// Least prime above `bound`.
pub fn least_prime_above(bound: u64) -> u64 {
    (bound + 1..).find(|&c| c > 2 && Prime::new(c).is_ok()).expect("primes are unbounded")
}

fn closed_forms(n: u64) -> (u64, u64, u64) {
    let m = n as i64;
    let a3 = m * (m * m - 1) * (3 * m - 4) * (m + 3) / 60;
    (n, n * (n + 1) * (n - 1) / 3, a3 as u64)
}

pub fn run_unp(n: usize, p: Option<u64>, truncation: Option<usize>) -> Result<UnpReport, JobError> {
    if n == 0 {
        return Err(JobError::Input("n must be at least 1".into()));
    }
    let r = n * (n - 1) / 2;
    let p_defaulted = p.is_none();
    let pv = prime(p.unwrap_or_else(|| least_prime_above(r as u64 + 1)))?;
    let (table, oracle) = rayon::join(
        || koszul::unp_complex(n, pv).map(|c| c.betti()),
        || younghook::unp_betti(n),
    );
    let table = table?;
    let oracle: Vec<u64> = oracle?
        .iter()
        .map(|b| b.to_u64().ok_or_else(|| JobError::Input("oracle value exceeds 64 bits".into())))
        .collect::<Result<_, _>>()?;
    let koszul = table.dims().to_vec();
    let top = koszul.len().max(oracle.len());
    let degrees: Vec<DegreeComparison> = (0..top)
        .map(|d| {
            let k = koszul.get(d).copied().unwrap_or(0);
            let o = oracle.get(d).copied().unwrap_or(0);
            DegreeComparison {
                degree: d,
                koszul: k,
                oracle: o,
                agree: k as u64 == o,
            }
        })
        .collect();
    let all_degrees_agree = degrees.iter().all(|d| d.agree);
    let hypothesis_met = table.complex().hypothesis_met();
    let verdict = match (hypothesis_met, all_degrees_agree) {
        (false, _) => Verdict::Informational,
        (true, true) => Verdict::Agree,
        (true, false) => Verdict::Disagree,
    };
    let (a1, a2, a3) = closed_forms(n as u64);
    let get = |d: usize| oracle.get(d).copied().unwrap_or(0);
    let match_oracle = get(1) == a1 && (oracle.len() <= 2 || get(2) == a2) && (oracle.len() <= 3 || get(3) == a3);
    let truncation = truncation.unwrap_or(2 * (n + r));
    Ok(UnpReport {
        n,
        p: pv.value(),
        p_defaulted,
        r,
        hypothesis_met,
        koszul,
        oracle,
        degrees,
        all_degrees_agree,
        closed_forms: ClosedForms { a1, a2, a3, match_oracle },
        verdict,
        series: series_section(PoincarePolynomial::from_betti(&table), n, r, truncation),
    })
}

impl Report for UnpReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "U({}, {}): w={} r={}{}",
            self.n,
            self.p,
            self.n,
            self.r,
            if self.p_defaulted { " (p = least prime above r+1)" } else { "" }
        );
        let _ = writeln!(out, "hypothesis p>r+1: {}", self.hypothesis_met);
        let _ = writeln!(out, "koszul: {}", join(&self.koszul));
        let _ = writeln!(out, "oracle: {}", join(&self.oracle));
        for d in &self.degrees {
            let _ = writeln!(
                out,
                "  degree {:>2}: koszul {:>8}  oracle {:>8}  {}",
                d.degree,
                d.koszul,
                d.oracle,
                if d.agree { "=" } else { "!=" }
            );
        }
        let c = &self.closed_forms;
        let _ = writeln!(out, "closed forms: a1={} a2={} a3={} match={}", c.a1, c.a2, c.a3, c.match_oracle);
        let _ = writeln!(out, "verdict: {}", self.verdict);
        render_series(&mut out, &self.series);
        out
    }

    fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Disagree {
            EXIT_DISAGREE
        } else {
            EXIT_OK
        }
    }
}

// ---- group -----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupKind {
    /// `U(n, p) = π⁻¹(span(e_1..e_n))`.
    #[serde(rename = "U")]
    Unp,
    /// `G(𝔥(n))`.
    #[serde(rename = "G")]
    Free,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub n: usize,
    pub p: u32,
    pub kind: GroupKind,
    pub mode: VerifyMode,
    pub verification: VerificationReport,
}

pub fn run_group(n: usize, p: u64, kind: GroupKind, options: &VerifyOptions) -> Result<GroupReport, JobError> {
    if n == 0 {
        return Err(JobError::Input("n must be at least 1".into()));
    }
    let pv = prime(p)?;
    let g = match kind {
        GroupKind::Unp => PGroup::unp(n, pv)?,
        GroupKind::Free => PGroup::free(n, pv)?,
    };
    Ok(GroupReport {
        n,
        p: pv.value(),
        kind,
        mode: options.mode,
        verification: g.verify(options)?,
    })
}

impl Report for GroupReport {
    fn text(&self) -> String {
        let v = &self.verification;
        let name = match self.kind {
            GroupKind::Unp => format!("U({}, {})", self.n, self.p),
            GroupKind::Free => format!("G(h({})), p={}", self.n, self.p),
        };
        let mut out = String::new();
        let _ = writeln!(out, "{name}: order {} = {}^{}", v.group_order, self.p, v.order_exponent);
        let _ = writeln!(out, "mode: {}", if v.exhaustive { "exhaustive" } else { "sampled" });
        let _ = writeln!(
            out,
            "associativity: {} ({} triples, {})",
            v.associativity_ok,
            v.associativity_checks,
            if v.associativity_exhaustive { "all" } else { "sampled" }
        );
        let _ = writeln!(out, "identity/inverse: {}", v.identity_inverse_ok);
        if let Some(k) = v.order_p_elements {
            let _ = writeln!(out, "elements of order dividing p: {k}");
        }
        let _ = writeln!(out, "pC: {} ({})", v.pc_ok, if v.pc_exhaustive { "all pairs" } else { "generators and samples" });
        let _ = writeln!(out, "omega1 rank: {}", v.omega1_rank);
        let _ = writeln!(out, "abelianization rank: {}", v.abelianization_rank);
        let _ = writeln!(out, "commutator rank: {}", v.commutator_rank);
        let _ = writeln!(out, "exponent: {}", v.exponent);
        let _ = writeln!(out, "seed: {}", v.seed);
        out
    }
}

// ---- bockstein -------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorImage {
    pub generator: String,
    pub image: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpressionResult {
    pub input: String,
    pub parsed: String,
    pub beta: String,
    pub restricted: String,
    pub restricted_beta: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BocksteinReport {
    pub n: usize,
    pub p: u32,
    pub generators: Vec<GeneratorImage>,
    pub restricted_generators: Vec<GeneratorImage>,
    pub expression: Option<ExpressionResult>,
    pub differential: DifferentialReport,
}

pub fn run_bockstein(n: usize, p: u64, max_degree: usize, pairs: usize, seed: u64, expr: Option<&str>) -> Result<BocksteinReport, JobError> {
    let pv = prime(p)?;
    if pv.value() <= 3 {
        return Err(BocksteinError::PrimeTooSmall(pv.value()).into());
    }
    let mut gens = Vec::new();
    for i in 1..=n {
        gens.push(BigradedElement::x(n, pv, i)?);
    }
    for i in 1..=n {
        for j in i + 1..=n {
            gens.push(BigradedElement::x_pair(n, pv, i, j)?);
        }
    }
    for i in 1..=n {
        gens.push(BigradedElement::zeta(n, pv, i)?);
    }
    for i in 1..=n {
        for j in i + 1..=n {
            gens.push(BigradedElement::zeta_pair(n, pv, i, j)?);
        }
    }
    let image = |g: &BigradedElement| -> Result<GeneratorImage, JobError> {
        Ok(GeneratorImage {
            generator: g.to_string(),
            image: bocksteindga::bockstein(g)?.to_string(),
        })
    };
    let generators = gens.iter().map(image).collect::<Result<Vec<_>, _>>()?;
    let restricted_generators = gens
        .iter()
        .map(BigradedElement::restrict_to_unp)
        .filter(|g| !g.is_zero())
        .map(|g| image(&g))
        .collect::<Result<Vec<_>, _>>()?;
    let expression = expr
        .map(|text| -> Result<ExpressionResult, JobError> {
            let a = BigradedElement::parse(text, n, pv, false)?;
            let ra = a.restrict_to_unp();
            Ok(ExpressionResult {
                input: text.to_string(),
                parsed: a.to_string(),
                beta: bocksteindga::bockstein(&a)?.to_string(),
                restricted: ra.to_string(),
                restricted_beta: bocksteindga::bockstein(&ra)?.to_string(),
            })
        })
        .transpose()?;
    Ok(BocksteinReport {
        n,
        p: pv.value(),
        generators,
        restricted_generators,
        expression,
        differential: bocksteindga::verify_differential(n, pv, max_degree, pairs, seed)?,
    })
}

impl Report for BocksteinReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bockstein on F_p[z] (x) Lambda(x): n={} p={}", self.n, self.p);
        for g in &self.generators {
            let _ = writeln!(out, "  beta({}) = {}", g.generator, g.image);
        }
        let _ = writeln!(out, "restricted to U(n,p) (x[i,j] = 0, xi*xj = 0):");
        for g in &self.restricted_generators {
            let _ = writeln!(out, "  beta({}) = {}", g.generator, g.image);
        }
        if let Some(e) = &self.expression {
            let _ = writeln!(out, "expression: {}", e.parsed);
            let _ = writeln!(out, "  beta = {}", e.beta);
            let _ = writeln!(out, "  restricted = {}", e.restricted);
            let _ = writeln!(out, "  beta(restricted) = {}", e.restricted_beta);
        }
        let d = &self.differential;
        let _ = writeln!(
            out,
            "beta^2 sweep to degree {}: {} monomials, {} violations",
            d.max_degree,
            d.monomials_checked,
            d.beta_squared_violations.len()
        );
        let _ = writeln!(out, "degree violations: {}", d.degree_violations.len());
        let _ = writeln!(out, "leibniz: {} pairs, {} violations (seed {})", d.leibniz_pairs_checked, d.leibniz_violations.len(), d.seed);
        for v in d.beta_squared_violations.iter().chain(&d.degree_violations).chain(&d.leibniz_violations) {
            let _ = writeln!(out, "  witness: {v}");
        }
        out
    }

    fn exit_code(&self) -> i32 {
        if self.differential.ok() {
            EXIT_OK
        } else {
            EXIT_OTHER
        }
    }
}

// ---- series ----------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SeriesReport {
    pub w: Option<usize>,
    pub r: Option<usize>,
    pub series: SeriesSection,
}

/// Expands `q(t) / (1 - t²)^v`. Numerator checks use the given `(w, r)`,
/// or `(deg q, 0)` when absent.
pub fn run_series(numerator: &[u64], v: usize, wr: Option<(usize, usize)>, truncation: Option<usize>) -> Result<SeriesReport, JobError> {
    let q = PoincarePolynomial::from_dims(numerator);
    let deg = q.degree().ok_or_else(|| JobError::Input("numerator is zero".into()))?;
    let (w, r) = wr.unwrap_or((deg, 0));
    let truncation = truncation.unwrap_or(2 * deg.max(v));
    let checks = series::checks(&q, w, r);
    let s = PoincareSeries::new(q.clone(), v);
    let expansion = s.expand(truncation);
    let back = series::multiply_by_denominator(&expansion, v);
    Ok(SeriesReport {
        w: wr.map(|x| x.0),
        r: wr.map(|x| x.1),
        series: SeriesSection {
            numerator: q.to_string(),
            numerator_coefficients: q.coefficients().to_vec(),
            denominator_exponent: v,
            truncation,
            division_recovers_numerator: (0..=truncation).all(|d| back[d] == q.coefficient(d).into()),
            monotone: v == 0 || series::expansion_is_monotone(&expansion, deg),
            expansion,
            checks,
        },
    })
}

impl Report for SeriesReport {
    fn text(&self) -> String {
        let mut out = String::new();
        if let (Some(w), Some(r)) = (self.w, self.r) {
            let _ = writeln!(out, "w={w} r={r}");
        }
        render_series(&mut out, &self.series);
        out
    }
}

// ---- crosscheck ------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckRow {
    pub n: usize,
    pub p: u32,
    pub r: usize,
    pub hypothesis_met: bool,
    pub koszul: Vec<usize>,
    pub oracle: Vec<u64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckReport {
    pub n_max: usize,
    pub primes: Vec<u32>,
    pub rows: Vec<CrosscheckRow>,
    pub disagreements: usize,
}

pub fn run_crosscheck(n_max: usize, primes: &[u64]) -> Result<CrosscheckReport, JobError> {
    if n_max == 0 || n_max > CROSSCHECK_MAX_N {
        return Err(JobError::Input(format!("n_max must be in 1..={CROSSCHECK_MAX_N}")));
    }
    if primes.is_empty() {
        return Err(JobError::Input("at least one prime is required".into()));
    }
    let primes: Vec<Prime> = primes.iter().map(|&p| prime(p)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, Prime)> = (1..=n_max).flat_map(|n| primes.iter().map(move |&p| (n, p))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, p)| {
            let u = run_unp(n, Some(p.value() as u64), Some(0))?;
            Ok(CrosscheckRow {
                n,
                p: u.p,
                r: u.r,
                hypothesis_met: u.hypothesis_met,
                koszul: u.koszul,
                oracle: u.oracle,
                verdict: if u.all_degrees_agree { Verdict::Agree } else if u.hypothesis_met { Verdict::Disagree } else { Verdict::Informational },
            })
        })
        .collect::<Result<Vec<_>, JobError>>()?;
    let disagreements = rows.iter().filter(|r| r.verdict == Verdict::Disagree).count();
    Ok(CrosscheckReport {
        n_max,
        primes: primes.iter().map(|p| p.value()).collect(),
        rows,
        disagreements,
    })
}

impl Report for CrosscheckReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "crosscheck: n <= {}, primes {}", self.n_max, join(&self.primes));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "  n={} p={:<4} p>r+1={:<5} {:<13} koszul [{}] oracle [{}]",
                r.n,
                r.p,
                r.hypothesis_met,
                r.verdict.to_string(),
                join(&r.koszul),
                join(&r.oracle)
            );
        }
        let _ = writeln!(out, "disagreements: {}", self.disagreements);
        out
    }

    fn exit_code(&self) -> i32 {
        if self.disagreements > 0 {
            EXIT_DISAGREE
        } else {
            EXIT_OK
        }
    }
}

impl From<ExtError> for JobError {
    fn from(e: ExtError) -> Self {
        JobError::Koszul(e.into())
    }
}
