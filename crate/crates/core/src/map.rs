//! The full-branch map `f` on `(0, 1]` with branches `I_n = (a_{n+1}, a_n]`,
//! `a_n = c^{−n+1}`.
//!
//! Points are classified right-closed: `x` belongs to the unique `I_n`
//! with `a_{n+1} < x ≤ a_n`. With that rule `x ∈ L_n` exactly when
//! `f(x)` lands in a branch of larger index, so itineraries and
//! left-subinterval membership never disagree at breakpoints.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::branch::{Branch, FloatBranch};
use crate::error::{Error, Result};
use crate::profile::TransitionProfile;
use crate::rational::{self, Rational};
use crate::root;
use crate::schedule::ProportionSchedule;

/// Hard ceiling on the float branch table, whatever `c` is.
pub const FLOAT_BRANCH_CEILING: u32 = 1 << 16;

pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ExpansionConfig {
    pub c: Rational,
    pub schedule: ProportionSchedule,
    /// Requires `1 < c < 2` and a certified schedule.
    pub strict_mode: bool,
    pub quad_tol: f64,
    /// `None` derives the guard from `c`, see [`default_max_float_branch`].
    pub max_float_branch: Option<u32>,
}

impl ExpansionConfig {
    pub fn new(c: Rational, schedule: ProportionSchedule) -> Self {
        Self {
            c,
            schedule,
            strict_mode: false,
            quad_tol: DEFAULT_QUAD_TOL,
            max_float_branch: None,
        }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict_mode = strict;
        self
    }

    /// Reference parameters: `c = 3/2`, `p_n = 1 − 2^{−n−1}`, strict.
    pub fn reference() -> Self {
        let schedule = ProportionSchedule::geometric(rational::ratio(1, 2)).expect("valid beta");
        Self::new(rational::ratio(3, 2), schedule).strict(true)
    }
}

/// Largest `n` with `a_{n+1} = c^{−n}` still a normal `f64`, capped at
/// [`FLOAT_BRANCH_CEILING`].
pub fn default_max_float_branch(c: &Rational) -> u32 {
    let ln_c = rational::ln(c);
    let limit = (f64::MIN_POSITIVE.ln().abs() / ln_c).floor();
    if !limit.is_finite() || limit >= FLOAT_BRANCH_CEILING as f64 {
        FLOAT_BRANCH_CEILING
    } else {
        (limit as u32).max(1)
    }
}

pub fn lambda_of(c: &Rational) -> Result<Rational> {
    if *c <= Rational::one() {
        return Err(Error::Domain(format!(
            "c must exceed 1, got {}",
            rational::to_string(c)
        )));
    }
    Ok((c - Rational::one()).recip())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// A failed fatal check fails the report; a failed non-fatal one is a warning.
    pub fatal: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub c: String,
    pub lambda: Option<String>,
    pub schedule: serde_json::Value,
    pub strict: bool,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.fatal && !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_C_GT_ONE: &str = "c > 1";
pub const CHECK_C_RANGE: &str = "c < 2 (uniformly expanding regime)";
pub const CHECK_FIRST_RATIO: &str = "p_1/(1-p_1) >= lambda";
pub const CHECK_PRODUCT: &str = "prod p_n > 0 certified";

/// Validates a configuration and the feasibility of branches `1..=branches`.
///
/// Never fails: every problem is a report row.
pub fn validate(config: &ExpansionConfig, branches: u32) -> ValidationReport {
    let strict = config.strict_mode;
    let mut checks = Vec::new();
    let c = &config.c;
    let lambda = lambda_of(c).ok();

    checks.push(Check {
        name: CHECK_C_GT_ONE.into(),
        passed: lambda.is_some(),
        fatal: true,
        detail: format!("c = {}", rational::to_string(c)),
    });

    if let Some(lambda) = &lambda {
        let below_two = *c < rational::int(2);
        checks.push(Check {
            name: CHECK_C_RANGE.into(),
            passed: below_two,
            fatal: strict,
            detail: if below_two {
                format!("lambda = {} > 1", rational::to_string(lambda))
            } else {
                format!(
                    "not uniformly expanding regime: lambda = {} <= 1",
                    rational::to_string(lambda)
                )
            },
        });

        let cert = config.schedule.certify(lambda);
        let first = match config.schedule.p(1) {
            Ok(p1) => {
                let r = &p1 / (Rational::one() - &p1);
                format!(
                    "p_1/(1-p_1) = {} vs lambda = {}",
                    rational::to_string(&r),
                    rational::to_string(lambda)
                )
            }
            Err(e) => e.to_string(),
        };
        checks.push(Check {
            name: CHECK_FIRST_RATIO.into(),
            passed: cert.first_ratio_ok,
            fatal: strict,
            detail: first,
        });
        checks.push(Check {
            name: CHECK_PRODUCT.into(),
            passed: cert.product_positive,
            fatal: strict,
            detail: format!("schedule kind {}", config.schedule.kind_name()),
        });

        for n in 1..=branches {
            let (passed, detail) = match branch_parts(c, lambda, &config.schedule, n) {
                Ok(b) => {
                    let plus = b.ratio_plus();
                    let ok = plus >= b.slope;
                    (
                        ok,
                        format!(
                            "|I^+|/|R| = {} {} s = {}",
                            rational::to_string(&plus),
                            if ok { ">=" } else { "<" },
                            rational::to_string(&b.slope)
                        ),
                    )
                }
                Err(e) => (false, e.to_string()),
            };
            checks.push(Check {
                name: format!("branch {n} feasible"),
                passed,
                fatal: true,
                detail,
            });
        }
    }

    let passed = checks.iter().all(|c| c.passed || !c.fatal);
    let warnings = checks
        .iter()
        .filter(|c| !c.passed && !c.fatal)
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    ValidationReport {
        c: rational::to_string(c),
        lambda: lambda.as_ref().map(rational::to_string),
        schedule: config.schedule.describe(),
        strict,
        checks,
        passed,
        warnings,
    }
}

/// Branch record without the feasibility check; `cap` may be below `slope`.
fn branch_parts(
    c: &Rational,
    lambda: &Rational,
    schedule: &ProportionSchedule,
    n: u32,
) -> Result<Branch> {
    let p = schedule.p(n)?;
    let a_hi = rational::pow(c, 1 - n as i64);
    let a_lo = &a_hi / c;
    let len = &a_hi - &a_lo;
    let junction = &a_lo + &p * &len;
    let slope = lambda / &p;
    let right_len = &a_hi - &junction;
    let plus = (Rational::one() - &a_lo) / &right_len;
    // f′ = s + (M − s)·ψ on R_n integrates to |I_n^+| iff M = s + 2(|I^+|/|R| − s)
    let cap = &slope + rational::int(2) * (plus - &slope);
    Ok(Branch {
        n,
        a_lo,
        a_hi,
        p,
        junction,
        slope,
        cap,
    })
}

/// The map `f`. Immutable after construction; caches fill on demand and
/// are safe to share across threads.
pub struct FullBranchMap {
    config: ExpansionConfig,
    lambda: Rational,
    profile: TransitionProfile,
    max_float_branch: u32,
    exact: Mutex<HashMap<u32, Arc<Branch>>>,
    /// `a_n` as `f64` for `n = 1..=max_float_branch + 1` (index `n − 1`).
    float_breaks: Vec<OnceLock<f64>>,
    float_branches: Vec<OnceLock<std::result::Result<FloatBranch, Error>>>,
    ln_c: f64,
}

impl std::fmt::Debug for FullBranchMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FullBranchMap")
            .field("c", &rational::to_string(&self.config.c))
            .field("lambda", &rational::to_string(&self.lambda))
            .field("schedule", &self.config.schedule)
            .field("strict", &self.config.strict_mode)
            .field("max_float_branch", &self.max_float_branch)
            .finish()
    }
}

impl FullBranchMap {
    /// Builds the map. In strict mode the configuration must validate
    /// (checked on branch 1; deeper branches are checked when built).
    pub fn new(config: ExpansionConfig) -> Result<Self> {
        let lambda = lambda_of(&config.c)?;
        if !(config.quad_tol > 0.0 && config.quad_tol.is_finite()) {
            return Err(Error::Domain(format!(
                "quad_tol must be positive, got {}",
                config.quad_tol
            )));
        }
        if config.strict_mode {
            let report = validate(&config, 1);
            if !report.passed {
                let names: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
                return Err(Error::Domain(format!(
                    "strict validation failed: {}",
                    names.join("; ")
                )));
            }
        }
        let max_float_branch = config
            .max_float_branch
            .unwrap_or_else(|| default_max_float_branch(&config.c))
            .clamp(1, FLOAT_BRANCH_CEILING);
        let profile = TransitionProfile::new(config.quad_tol);
        let ln_c = rational::ln(&config.c);
        Ok(Self {
            lambda,
            profile,
            max_float_branch,
            exact: Mutex::new(HashMap::new()),
            float_breaks: (0..=max_float_branch).map(|_| OnceLock::new()).collect(),
            float_branches: (0..max_float_branch).map(|_| OnceLock::new()).collect(),
            ln_c,
            config,
        })
    }

    pub fn reference() -> Self {
        Self::new(ExpansionConfig::reference()).expect("reference configuration is valid")
    }

    pub fn config(&self) -> &ExpansionConfig {
        &self.config
    }

    pub fn c(&self) -> &Rational {
        &self.config.c
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn schedule(&self) -> &ProportionSchedule {
        &self.config.schedule
    }

    pub fn profile(&self) -> &TransitionProfile {
        &self.profile
    }

    pub fn quad_tol(&self) -> f64 {
        self.config.quad_tol
    }

    pub fn max_float_branch(&self) -> u32 {
        self.max_float_branch
    }

    pub fn validate(&self, branches: u32) -> ValidationReport {
        validate(&self.config, branches)
    }

    /// `a_n = c^{−n+1}`.
    pub fn breakpoint(&self, n: u32) -> Rational {
        rational::pow(&self.config.c, 1 - n as i64)
    }

    /// `|I_n| = c^{−n}(c − 1)`.
    pub fn interval_len(&self, n: u32) -> Rational {
        rational::pow(&self.config.c, -(n as i64)) * (&self.config.c - Rational::one())
    }

    pub fn p(&self, n: u32) -> Result<Rational> {
        self.config.schedule.p(n)
    }

    /// Exact branch record for `I_n`, built once and cached.
    pub fn branch(&self, n: u32) -> Result<Arc<Branch>> {
        if n == 0 {
            return Err(Error::Domain("branches are indexed from 1".into()));
        }
        if let Some(b) = self.exact.lock().expect("branch cache poisoned").get(&n) {
            return Ok(Arc::clone(b));
        }
        let b = branch_parts(&self.config.c, &self.lambda, &self.config.schedule, n)?;
        if b.cap < b.slope {
            return Err(Error::Construction {
                branch: n,
                reason: format!(
                    "|I_n^+|/|R_n| = {} < s_n = {}; no convex extension of the affine part exists",
                    rational::to_string(&b.ratio_plus()),
                    rational::to_string(&b.slope)
                ),
            });
        }
        let mut cache = self.exact.lock().expect("branch cache poisoned");
        Ok(Arc::clone(cache.entry(n).or_insert_with(|| Arc::new(b))))
    }

    fn float_break(&self, n: u32) -> f64 {
        *self.float_breaks[n as usize - 1].get_or_init(|| rational::to_f64(&self.breakpoint(n)))
    }

    /// `f64` branch record; `n` must not exceed the float guard.
    pub fn float_branch(&self, n: u32) -> Result<FloatBranch> {
        if n == 0 {
            return Err(Error::Domain("branches are indexed from 1".into()));
        }
        if n > self.max_float_branch {
            return Err(Error::Precision {
                index: n as u64,
                max_float_branch: self.max_float_branch,
            });
        }
        self.float_branches[n as usize - 1]
            .get_or_init(|| self.branch(n).map(|b| b.to_float()))
            .clone()
    }

    /// Index `n` with `a_{n+1} < x ≤ a_n`.
    pub fn branch_index(&self, x: f64) -> Result<u32> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Domain(format!("x = {x} is outside (0, 1]")));
        }
        let max = self.max_float_branch;
        if x <= self.float_break(max + 1) {
            let estimate = (-x.ln() / self.ln_c).floor() as u64 + 1;
            return Err(Error::Precision {
                index: estimate.max(max as u64 + 1),
                max_float_branch: max,
            });
        }
        let guess = (-x.ln() / self.ln_c).floor() + 1.0;
        let mut n = (guess.max(1.0) as u32).min(max);
        while x <= self.float_break(n + 1) {
            n += 1;
        }
        while x > self.float_break(n) {
            n -= 1;
        }
        Ok(n)
    }

    /// Exact classification of a rational point.
    pub fn branch_index_exact(&self, x: &Rational) -> Result<u32> {
        if *x <= Rational::zero() || *x > Rational::one() {
            return Err(Error::Domain(format!(
                "x = {} is outside (0, 1]",
                rational::to_string(x)
            )));
        }
        let guess = (-rational::ln(x) / self.ln_c).floor() + 1.0;
        let mut n = if guess.is_finite() && guess >= 1.0 {
            guess.min(u32::MAX as f64 - 1.0) as u32
        } else {
            1
        };
        while *x <= self.breakpoint(n + 1) {
            n += 1;
        }
        while *x > self.breakpoint(n) {
            n -= 1;
        }
        Ok(n)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let b = self.float_branch(self.branch_index(x)?)?;
        Ok(b.eval(x, &self.profile))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        let b = self.float_branch(self.branch_index(x)?)?;
        Ok(b.deriv(x, &self.profile))
    }

    pub fn deriv2(&self, x: f64) -> Result<f64> {
        let b = self.float_branch(self.branch_index(x)?)?;
        Ok(b.deriv2(x, &self.profile))
    }

    /// `f(x)` exactly when `x` lies in some `L_n`, `None` on the smooth part.
    pub fn eval_affine_exact(&self, x: &Rational) -> Result<Option<Rational>> {
        let b = self.branch(self.branch_index_exact(x)?)?;
        Ok(b.in_left(x).then(|| b.eval_affine(x)))
    }

    /// The unique `x ∈ I_n` with `f(x) = y`.
    ///
    /// Exact affine inversion when `y ≤ a_{n+1}`; otherwise Newton-accelerated
    /// bisection on the smooth part.
    pub fn invert_branch(&self, n: u32, y: f64) -> Result<f64> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::Domain(format!("y = {y} is outside (0, 1]")));
        }
        let b = self.float_branch(n)?;
        invert_float_branch(&b, y, &self.profile)
    }

    /// Exact inverse on the affine part, `None` when `y > a_{n+1}`.
    pub fn invert_branch_exact(&self, n: u32, y: &Rational) -> Result<Option<Rational>> {
        if *y <= Rational::zero() || *y > Rational::one() {
            return Err(Error::Domain(format!(
                "y = {} is outside (0, 1]",
                rational::to_string(y)
            )));
        }
        let b = self.branch(n)?;
        Ok((*y <= b.a_lo).then(|| b.invert_affine(y)))
    }
}

/// Inverts one float branch at `y ∈ [0, 1]`.
pub fn invert_float_branch(b: &FloatBranch, y: f64, profile: &TransitionProfile) -> Result<f64> {
    if y <= b.a_lo {
        return Ok(b.a_lo + y / b.slope);
    }
    if b.right_len == 0.0 {
        return Ok(b.a_hi);
    }
    let rise = 1.0 - b.a_lo;
    let linear = b.slope * b.right_len;
    let target = (y - b.a_lo) / rise;
    let g = |t: f64| {
        let value = (linear * t + b.excess * profile.integral(t)) / rise - target;
        let slope = (linear + b.excess * profile.psi(t)) / rise;
        (value, slope)
    };
    // rounding can push the bracket ends a hair past the target
    if g(1.0).0 <= 0.0 {
        return Ok(b.a_hi);
    }
    if g(0.0).0 >= 0.0 {
        return Ok(b.junction);
    }
    let t = root::solve_increasing(g, 0.0, 1.0, 1e-15)?;
    Ok((b.junction + b.right_len * t).clamp(b.junction, b.a_hi))
}
