//! Batch checks of the built map: the branch properties (monotone, convex,
//! expanding, onto), the exact expansion ratios, and the slope dichotomy for
//! `c ≥ 2`.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::branch::Branch;
use crate::error::{Error, Result};
use crate::map::{lambda_of, ExpansionConfig, FullBranchMap};
use crate::profile::TransitionProfile;
use crate::rational::{self, Rational};
use crate::schedule::ProportionSchedule;

/// Label carried by the junction smoothness column: a finite-difference
/// comparison cannot establish `C^∞`.
pub const JUNCTION_PROXY_LABEL: &str = "proxy: one-sided finite differences of f' at the junction";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchCheck {
    pub n: u32,
    pub grid_points: usize,
    pub monotone: bool,
    pub convex: bool,
    pub expanding: bool,
    pub surjective: bool,
    pub junction_smooth_proxy: bool,
    pub min_deriv: f64,
    pub min_deriv2: f64,
    /// `|f(a_n) − 1|`, evaluated at local coordinate `t = 1`.
    pub endpoint_error: f64,
    /// `f(ℓ_n) = a_{n+1}` in exact arithmetic.
    pub junction_image_exact: bool,
    /// `|D₊f′(ℓ_n) − D₋f′(ℓ_n)|` relative to the branch's `f″` scale.
    pub junction_jump: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub c: String,
    pub lambda: String,
    pub tol: f64,
    pub grid_density: usize,
    pub junction_check: &'static str,
    pub branches: Vec<BranchCheck>,
    pub passed: bool,
}

impl PropertyReport {
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "c = {}, lambda = {}, tol = {:e}, {} points per branch\n",
            self.c, self.lambda, self.tol, self.grid_density
        );
        let _ = writeln!(
            s,
            "{:>4} {:>5} {:>6} {:>6} {:>5} {:>6} {:>12} {:>12} {:>10}",
            "n", "mono", "convex", "expand", "onto", "proxy", "min f'", "min f''", "|f(a_n)-1|"
        );
        for b in &self.branches {
            let _ = writeln!(
                s,
                "{:>4} {:>5} {:>6} {:>6} {:>5} {:>6} {:>12.6e} {:>12.3e} {:>10.2e}",
                b.n,
                mark(b.monotone),
                mark(b.convex),
                mark(b.expanding),
                mark(b.surjective),
                mark(b.junction_smooth_proxy),
                b.min_deriv,
                b.min_deriv2,
                b.endpoint_error
            );
        }
        let _ = writeln!(s, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

/// Equispaced points on `[a_{n+1}, a_n]` plus Chebyshev points clustered
/// around the junction, sorted and deduplicated.
pub fn branch_grid(b: &Branch, density: usize) -> Vec<f64> {
    let lo = rational::to_f64(&b.a_lo);
    let hi = rational::to_f64(&b.a_hi);
    let junction = rational::to_f64(&b.junction);
    let density = density.max(2);
    let mut grid: Vec<f64> = (0..density)
        .map(|i| lo + (hi - lo) * i as f64 / (density - 1) as f64)
        .collect();
    grid[density - 1] = hi;

    let half_width = 0.25 * (junction - lo).min(hi - junction);
    let cluster = (density / 4).max(8);
    for j in 0..cluster {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / cluster as f64;
        let x = junction + half_width * theta.cos();
        if x > lo && x < hi {
            grid.push(x);
        }
    }
    grid.push(junction);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Checks one branch, which need not come from a valid map.
pub fn check_branch(b: &Branch, lambda: &Rational, profile: &TransitionProfile, density: usize, tol: f64) -> BranchCheck {
    let fb = b.to_float();
    let lambda_f = rational::to_f64(lambda);
    let grid = branch_grid(b, density);

    let values: Vec<f64> = grid.iter().map(|&x| fb.eval(x, profile)).collect();
    let min_deriv = grid
        .iter()
        .map(|&x| fb.deriv(x, profile))
        .fold(f64::INFINITY, f64::min);
    let min_deriv2 = grid
        .iter()
        .map(|&x| fb.deriv2(x, profile))
        .fold(f64::INFINITY, f64::min);
    let monotone = min_deriv > 0.0 && values.windows(2).all(|w| w[1] > w[0]);
    let convex = min_deriv2 >= -tol;
    let expanding = min_deriv >= lambda_f * (1.0 - tol);

    let endpoint_error = (fb.eval_local(1.0, profile) - 1.0).abs();
    let junction_image_exact = b.eval_affine(&b.junction) == b.a_lo;
    let surjective = endpoint_error <= tol && junction_image_exact;

    let junction_jump = junction_jump(&fb, profile);
    let junction_smooth_proxy = junction_jump <= tol;

    BranchCheck {
        n: b.n,
        grid_points: grid.len(),
        monotone,
        convex,
        expanding,
        surjective,
        junction_smooth_proxy,
        min_deriv,
        min_deriv2,
        endpoint_error,
        junction_image_exact,
        junction_jump,
        passed: monotone && convex && expanding && surjective && junction_smooth_proxy,
    }
}

fn junction_jump(fb: &crate::branch::FloatBranch, profile: &TransitionProfile) -> f64 {
    if fb.right_len == 0.0 {
        return 0.0;
    }
    let h = 1e-3 * fb.right_len.min(fb.junction - fb.a_lo);
    let at = fb.deriv(fb.junction, profile);
    let left = (at - fb.deriv(fb.junction - h, profile)) / h;
    let right = (fb.deriv(fb.junction + h, profile) - at) / h;
    // natural size of f″ on R_n
    let scale = (fb.excess.abs() / (fb.right_len * fb.right_len)).max(f64::MIN_POSITIVE);
    (right - left).abs() / scale
}

pub fn check_p1_p4(
    map: &FullBranchMap,
    branches: RangeInclusive<u32>,
    grid_density: usize,
    tol: f64,
) -> Result<PropertyReport> {
    if *branches.start() == 0 {
        return Err(Error::Domain("branches are indexed from 1".into()));
    }
    if *branches.end() > map.max_float_branch() {
        return Err(Error::Precision {
            index: *branches.end() as u64,
            max_float_branch: map.max_float_branch(),
        });
    }
    let built = branches.map(|n| map.branch(n)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<BranchCheck> = built
        .par_iter()
        .map(|b| check_branch(b, map.lambda(), map.profile(), grid_density, tol))
        .collect();
    Ok(PropertyReport {
        c: rational::to_string(map.c()),
        lambda: rational::to_string(map.lambda()),
        tol,
        grid_density,
        junction_check: JUNCTION_PROXY_LABEL,
        passed: rows.iter().all(|r| r.passed),
        branches: rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpUniformReport {
    pub n: u32,
    pub p_n: String,
    /// `|I_n^−| / |L_n| = a_{n+1} / |L_n|`.
    pub ratio_minus: String,
    pub lambda_over_p: String,
    /// `|I_n^+| / |R_n| = (1 − a_{n+1}) / |R_n|`.
    pub ratio_plus: String,
    pub inverse_complement: String,
    pub minus_equality: bool,
    pub plus_ge_inverse_complement: bool,
    pub inverse_complement_ge_lambda_over_p: bool,
    pub plus_ge_lambda_over_p: bool,
    pub passed: bool,
}

/// Exact verification of the two expansion ratios on branch `n`.
pub fn check_exp_uniform(map: &FullBranchMap, n: u32) -> Result<ExpUniformReport> {
    let b = map.branch(n)?;
    let lambda_over_p = map.lambda() / &b.p;
    let ratio_minus = b.ratio_minus();
    let ratio_plus = b.ratio_plus();
    let inverse_complement = (Rational::one() - &b.p).recip();
    let minus_equality = ratio_minus == lambda_over_p;
    let plus_ge_inverse_complement = ratio_plus >= inverse_complement;
    let inverse_complement_ge_lambda_over_p = inverse_complement >= lambda_over_p;
    let plus_ge_lambda_over_p = ratio_plus >= lambda_over_p;
    Ok(ExpUniformReport {
        n,
        p_n: rational::to_string(&b.p),
        ratio_minus: rational::to_string(&ratio_minus),
        lambda_over_p: rational::to_string(&lambda_over_p),
        ratio_plus: rational::to_string(&ratio_plus),
        inverse_complement: rational::to_string(&inverse_complement),
        minus_equality,
        plus_ge_inverse_complement,
        inverse_complement_ge_lambda_over_p,
        plus_ge_lambda_over_p,
        passed: minus_equality && plus_ge_lambda_over_p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeRow {
    pub n: u32,
    pub p_n: String,
    /// `1 / ((c − 1) p_n)`, the minimum of `f′` on branch `n`.
    pub min_slope: String,
    pub min_slope_decimal: f64,
    pub expanding: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub c: String,
    pub schedule: serde_json::Value,
    pub limit: String,
    pub limit_at_most_one: bool,
    pub epsilon: String,
    pub rows: Vec<SlopeRow>,
    pub strictly_decreasing: bool,
    pub above_limit: bool,
    /// First `n` with min slope `≤ 1 + ε`, searched past the table when the
    /// schedule has a closed form.
    pub crossing: Option<u32>,
    pub warnings: Vec<String>,
}

impl DichotomyReport {
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "c = {}, limit 1/(c-1) = {}, epsilon = {}\n{:>5} {:>28} {:>14} {:>9}\n",
            self.c, self.limit, self.epsilon, "n", "min slope", "decimal", "expanding"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>5} {:>28} {:>14.10} {:>9}",
                r.n,
                shorten(&r.min_slope, 28),
                r.min_slope_decimal,
                if r.expanding { "yes" } else { "no" }
            );
        }
        let _ = writeln!(
            s,
            "strictly decreasing: {}, crossing of 1+epsilon: {}",
            self.strictly_decreasing,
            self.crossing.map_or("none found".to_string(), |n| n.to_string())
        );
        s
    }
}

fn shorten(text: &str, width: usize) -> String {
    if text.len() <= width {
        text.to_string()
    } else {
        format!("{}...", &text[..width - 3])
    }
}

fn min_slope(c: &Rational, p: &Rational) -> Rational {
    ((c - Rational::one()) * p).recip()
}

/// Minimum branch slopes for `c ≥ 2`, where they tend to `1/(c − 1) ≤ 1`.
pub fn dichotomy_scan(config: &ExpansionConfig, n_max: u32, epsilon: &Rational) -> Result<DichotomyReport> {
    let c = &config.c;
    lambda_of(c)?;
    if *c < rational::int(2) {
        return Err(Error::Domain(format!(
            "the slope dichotomy scan needs c >= 2, got {}",
            rational::to_string(c)
        )));
    }
    if matches!(config.schedule, ProportionSchedule::Constant { .. }) {
        return Err(Error::Domain("the scan needs p_n -> 1; a constant schedule never gets there".into()));
    }
    if n_max == 0 {
        return Err(Error::Domain("scan length must be at least 1".into()));
    }
    if *epsilon <= Rational::zero() {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let mut warnings = Vec::new();
    if !config.schedule.tends_to_one() {
        warnings.push("table schedule: p_n -> 1 is assumed, not certified".to_string());
    }

    let limit = (c - Rational::one()).recip();
    let threshold = Rational::one() + epsilon;
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut crossing = None;
    for n in 1..=n_max {
        let p = match config.schedule.p(n) {
            Ok(p) => p,
            Err(Error::ScheduleExhausted { .. }) => {
                warnings.push(format!("schedule ends after {} terms", n - 1));
                break;
            }
            Err(e) => return Err(e),
        };
        let slope = min_slope(c, &p);
        if crossing.is_none() && slope <= threshold {
            crossing = Some(n);
        }
        rows.push(SlopeRow {
            n,
            p_n: rational::to_string(&p),
            min_slope: rational::to_string(&slope),
            min_slope_decimal: rational::to_f64(&slope),
            expanding: slope > Rational::one(),
        });
        slopes.push(slope);
    }
    if crossing.is_none() {
        crossing = geometric_crossing(config, &threshold, n_max);
    }

    Ok(DichotomyReport {
        c: rational::to_string(c),
        schedule: config.schedule.describe(),
        limit_at_most_one: limit <= Rational::one(),
        limit: rational::to_string(&limit),
        epsilon: rational::to_string(epsilon),
        strictly_decreasing: slopes.windows(2).all(|w| w[1] < w[0]),
        above_limit: slopes.iter().all(|s| *s > limit),
        rows,
        crossing,
        warnings,
    })
}

/// Smallest `n > after` with `1/((c−1)p_n) ≤ threshold` for `p_n = 1 − β 2^{−n}`.
fn geometric_crossing(config: &ExpansionConfig, threshold: &Rational, after: u32) -> Option<u32> {
    let ProportionSchedule::GeometricToOne { beta } = &config.schedule else {
        return None;
    };
    let c = &config.c;
    // need p_n ≥ q = 1/((c−1)·threshold), i.e. β 2^{−n} ≤ 1 − q
    let q = ((c - Rational::one()) * threshold).recip();
    let gap = Rational::one() - q;
    if gap <= Rational::zero() {
        return None;
    }
    let holds = |n: u32| config.schedule.p(n).is_ok_and(|p| min_slope(c, &p) <= *threshold);
    let estimate = (rational::ln(beta) - rational::ln(&gap)) / std::f64::consts::LN_2;
    let mut n = (estimate.floor() as i64 - 2).clamp(after as i64 + 1, u32::MAX as i64) as u32;
    // slopes decrease in n, so walk down past the float estimate, then up
    while n > after + 1 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n = n.checked_add(1)?;
    }
    Some(n)
}
