//! Cylinder sets `[k_0, …, k_n] = I_{k_0} ∩ f^{−1}(I_{k_1}) ∩ … ∩ f^{−n}(I_{k_n})`
//! and the measures of `C_n`, the points whose first `n` iterates stay in
//! the left subintervals.
//!
//! A cylinder with a strictly increasing itinerary is pulled back through
//! affine parts only, so its endpoints are exact rationals and its length
//! is `|I_{k_n}|·∏_{i<n} p_{k_i}/λ`. `C_n` is the union of exactly those
//! cylinders, which gives the dynamic program
//!
//! ```text
//! V_0(k) = |I_k|,   V_{j+1}(k) = (p_k/λ)·Σ_{k′>k} V_j(k′),   |C_n| = Σ_k V_n(k).
//! ```
//!
//! Truncation is certified with the envelope `V_j(k) ≤ |I_k|` (each `V_j(k)`
//! measures a subset of `I_k`) and the closed form `Σ_{k′>k} |I_{k′}| = a_{k+1}`.

use num_integer::binomial;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{invert_float_branch, FullBranchMap};
use crate::rational::{self, Rational};

/// Enumeration guard for the brute-force oracle and the nesting check.
pub const MAX_ENUMERATION: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Interval {
    Exact { lo: Rational, hi: Rational },
    /// Pulled back through a smooth part; endpoints carry quadrature error.
    Numeric { lo: f64, hi: f64 },
}

impl Interval {
    pub fn is_exact(&self) -> bool {
        matches!(self, Interval::Exact { .. })
    }

    pub fn bounds_f64(&self) -> (f64, f64) {
        match self {
            Interval::Exact { lo, hi } => (rational::to_f64(lo), rational::to_f64(hi)),
            Interval::Numeric { lo, hi } => (*lo, *hi),
        }
    }

    pub fn exact_len(&self) -> Option<Rational> {
        match self {
            Interval::Exact { lo, hi } => Some(hi - lo),
            Interval::Numeric { .. } => None,
        }
    }

    pub fn len_f64(&self) -> f64 {
        match self {
            Interval::Exact { lo, hi } => rational::to_f64(&(hi - lo)),
            Interval::Numeric { lo, hi } => hi - lo,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder {
    pub indices: Vec<u32>,
    pub interval: Interval,
}

impl Cylinder {
    /// True iff the itinerary is strictly increasing.
    pub fn exact(&self) -> bool {
        self.interval.is_exact()
    }

    pub fn to_json(&self) -> CylinderJson {
        let (interval, measure) = match &self.interval {
            Interval::Exact { lo, hi } => (
                vec![rational::to_string(lo), rational::to_string(hi)],
                rational::to_string(&(hi - lo)),
            ),
            Interval::Numeric { lo, hi } => {
                (vec![lo.to_string(), hi.to_string()], (hi - lo).to_string())
            }
        };
        let (lo, hi) = self.interval.bounds_f64();
        CylinderJson {
            indices: self.indices.clone(),
            exact: self.exact(),
            interval,
            interval_decimal: [lo, hi],
            measure,
            measure_decimal: self.interval.len_f64(),
        }
    }
}

/// Serialized cylinder: exact endpoints as `"num/den"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderJson {
    pub indices: Vec<u32>,
    pub exact: bool,
    pub interval: Vec<String>,
    pub interval_decimal: [f64; 2],
    pub measure: String,
    pub measure_decimal: f64,
}

pub fn is_strictly_increasing(indices: &[u32]) -> bool {
    indices.windows(2).all(|w| w[0] < w[1])
}

fn check_indices(indices: &[u32]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::Domain("empty index sequence".into()));
    }
    if indices.contains(&0) {
        return Err(Error::Domain("branch indices start at 1".into()));
    }
    Ok(())
}

fn require_increasing(indices: &[u32]) -> Result<()> {
    check_indices(indices)?;
    if !is_strictly_increasing(indices) {
        return Err(Error::Domain(format!(
            "itinerary {indices:?} is not strictly increasing"
        )));
    }
    Ok(())
}

/// Pulls `[lo, hi] ⊆ (0, a_{k+1}]` back through the affine parts of
/// `prefix` (last element first). All steps must be affine.
fn pull_back_affine(
    map: &FullBranchMap,
    prefix: &[u32],
    mut lo: Rational,
    mut hi: Rational,
) -> Result<(Rational, Rational)> {
    for &k in prefix.iter().rev() {
        let b = map.branch(k)?;
        lo = b.invert_affine(&lo);
        hi = b.invert_affine(&hi);
    }
    Ok((lo, hi))
}

/// The cylinder interval, pulled back from `I_{k_n}` through `k_{n−1}, …, k_0`.
pub fn cylinder_interval(map: &FullBranchMap, indices: &[u32]) -> Result<Cylinder> {
    check_indices(indices)?;
    let last = *indices.last().expect("non-empty");
    let mut lo = map.breakpoint(last + 1);
    let mut hi = map.breakpoint(last);

    // walk backwards while the steps stay affine (k_i < k_{i+1})
    let mut i = indices.len() - 1;
    while i > 0 && indices[i - 1] < indices[i] {
        let b = map.branch(indices[i - 1])?;
        lo = b.invert_affine(&lo);
        hi = b.invert_affine(&hi);
        i -= 1;
    }
    if i == 0 {
        return Ok(Cylinder {
            indices: indices.to_vec(),
            interval: Interval::Exact { lo, hi },
        });
    }

    let profile = map.profile();
    let (mut lo_f, mut hi_f) = (rational::to_f64(&lo), rational::to_f64(&hi));
    while i > 0 {
        let b = map.float_branch(indices[i - 1])?;
        lo_f = invert_float_branch(&b, lo_f, profile)?;
        hi_f = invert_float_branch(&b, hi_f, profile)?;
        i -= 1;
    }
    if lo_f.is_nan() || hi_f.is_nan() || lo_f >= hi_f {
        return Err(Error::Numeric(format!(
            "cylinder {indices:?} collapsed to [{lo_f}, {hi_f}] in floating point"
        )));
    }
    Ok(Cylinder {
        indices: indices.to_vec(),
        interval: Interval::Numeric { lo: lo_f, hi: hi_f },
    })
}

/// `|[k_0, …, k_n]| = |I_{k_n}|·∏_{i<n} p_{k_i}/λ` for a strictly increasing itinerary.
pub fn cylinder_measure(map: &FullBranchMap, indices: &[u32]) -> Result<Rational> {
    require_increasing(indices)?;
    let (&last, prefix) = indices.split_last().expect("non-empty");
    let mut m = map.interval_len(last);
    for &k in prefix {
        m *= map.p(k)? / map.lambda();
    }
    Ok(m)
}

/// `L([k_0, …, k_n])`: the preimage of `L_{k_n}` inside the cylinder.
pub fn left_subinterval(map: &FullBranchMap, indices: &[u32]) -> Result<(Rational, Rational)> {
    require_increasing(indices)?;
    let (&last, prefix) = indices.split_last().expect("non-empty");
    let b = map.branch(last)?;
    pull_back_affine(map, prefix, b.a_lo.clone(), b.junction.clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport {
    pub depth: u32,
    pub k_max: u32,
    /// `Σ` over strictly increasing `k_0 < … < k_n ≤ K_max`; what the brute-force
    /// enumeration computes.
    pub truncated_sum: Rational,
    /// `Σ` over `k_0 < … < k_{n−1} ≤ K_max` with the last index summed in closed form.
    pub lower_bound: Rational,
    /// Rigorous bound on the mass `lower_bound` omits.
    pub tail_bound: Rational,
    pub tol: Option<f64>,
}

impl MeasureReport {
    pub fn upper_bound(&self) -> Rational {
        &self.lower_bound + &self.tail_bound
    }

    /// `true` iff `value` lies in `[lower_bound, lower_bound + tail_bound]`.
    pub fn contains(&self, value: &Rational) -> bool {
        *value >= self.lower_bound && *value <= self.upper_bound()
    }

    pub fn meets_tol(&self) -> Option<bool> {
        self.tol.map(|t| rational::to_f64(&self.tail_bound) <= t)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let upper = self.upper_bound();
        serde_json::json!({
            "depth": self.depth,
            "k_max": self.k_max,
            "truncated_sum": rational::to_string(&self.truncated_sum),
            "truncated_sum_decimal": rational::to_f64(&self.truncated_sum),
            "lower_bound": rational::to_string(&self.lower_bound),
            "lower_bound_decimal": rational::to_f64(&self.lower_bound),
            "tail_bound": rational::to_string(&self.tail_bound),
            "tail_bound_decimal": rational::to_f64(&self.tail_bound),
            "certified_interval": [rational::to_string(&self.lower_bound), rational::to_string(&upper)],
            "certified_interval_decimal": [rational::to_f64(&self.lower_bound), rational::to_f64(&upper)],
            "tol": self.tol,
            "meets_tol": self.meets_tol(),
        })
    }
}

/// Per-index inputs of the DP: `w_k = p_k/λ` and `|I_k|` for `k = 1..=K`.
struct Weights {
    ratio: Vec<Rational>,
    len: Vec<Rational>,
}

fn weights(map: &FullBranchMap, k_max: u32) -> Result<Weights> {
    let mut ratio = Vec::with_capacity(k_max as usize);
    let mut len = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        ratio.push(map.p(k)? / map.lambda());
        len.push(map.interval_len(k));
    }
    Ok(Weights { ratio, len })
}

/// One DP level: `next(k) = w_k·(Σ_{k<k′≤K} prev(k′) + extra)`.
fn dp_step(w: &Weights, prev: &[Rational], extra: &Rational) -> Vec<Rational> {
    let mut next = vec![Rational::zero(); prev.len()];
    let mut suffix = extra.clone();
    for k in (0..prev.len()).rev() {
        next[k] = &w.ratio[k] * &suffix;
        suffix += &prev[k];
    }
    next
}

/// Fully truncated DP table `V_j(k)` for `j = 0..=depth`, `k = 1..=K` (row `j`, column `k − 1`).
pub fn truncated_dp(map: &FullBranchMap, depth: u32, k_max: u32) -> Result<Vec<Vec<Rational>>> {
    let w = weights(map, k_max)?;
    let mut rows = vec![w.len.clone()];
    for _ in 0..depth {
        let next = dp_step(&w, rows.last().expect("row"), &Rational::zero());
        rows.push(next);
    }
    Ok(rows)
}

/// Upper-envelope DP: `H_1(k) = p_k|I_k|`, `H_{j+1}(k) = w_k·(Σ_{k<k′≤K} H_j(k′) + a_{K+1})`.
/// Every `H_j(k)` bounds the untruncated `V_j(k)` from above.
pub fn upper_dp(map: &FullBranchMap, depth: u32, k_max: u32) -> Result<Vec<Vec<Rational>>> {
    let w = weights(map, k_max)?;
    let tail = map.breakpoint(k_max + 1);
    let mut rows = vec![w.len.clone()];
    if depth >= 1 {
        rows.push(first_level(&w, map)?);
    }
    for _ in 1..depth {
        let next = dp_step(&w, rows.last().expect("row"), &tail);
        rows.push(next);
    }
    Ok(rows)
}

/// `V_1(k) = (p_k/λ)·a_{k+1} = p_k|I_k|`, exact with no truncation.
fn first_level(w: &Weights, map: &FullBranchMap) -> Result<Vec<Rational>> {
    (1..=w.len.len() as u32)
        .map(|k| Ok(&w.ratio[k as usize - 1] * map.breakpoint(k + 1)))
        .collect()
}

/// Certified measure of `C_n` truncated at `K_max`.
pub fn measure_cn(map: &FullBranchMap, depth: u32, k_max: u32, tol: Option<f64>) -> Result<MeasureReport> {
    if depth < 1 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    if k_max < depth + 1 {
        return Err(Error::Domain(format!(
            "K_max = {k_max} admits no strictly increasing sequence of length {}",
            depth + 1
        )));
    }
    let w = weights(map, k_max)?;
    let sum = |row: &[Rational]| row.iter().fold(Rational::zero(), |acc, v| acc + v);

    let mut truncated = w.len.clone();
    for _ in 0..depth {
        truncated = dp_step(&w, &truncated, &Rational::zero());
    }

    let tail = map.breakpoint(k_max + 1);
    let mut lower = first_level(&w, map)?;
    let mut upper = lower.clone();
    for _ in 1..depth {
        lower = dp_step(&w, &lower, &Rational::zero());
        upper = dp_step(&w, &upper, &tail);
    }
    let lower_bound = sum(&lower);
    let upper_bound = sum(&upper) + &tail;

    Ok(MeasureReport {
        depth,
        k_max,
        truncated_sum: sum(&truncated),
        tail_bound: upper_bound - &lower_bound,
        lower_bound,
        tol,
    })
}

fn enumeration_count(k_max: u32, len: u32) -> Result<u64> {
    let count = binomial(k_max as u128, len as u128);
    if count > MAX_ENUMERATION as u128 {
        return Err(Error::Resource(format!(
            "{count} sequences exceed the enumeration guard {MAX_ENUMERATION}"
        )));
    }
    Ok(count as u64)
}

/// Calls `visit` on every strictly increasing sequence of `len` entries from `1..=k_max`.
fn for_each_increasing(k_max: u32, len: usize, visit: &mut impl FnMut(&[u32]) -> Result<()>) -> Result<()> {
    fn go(
        seq: &mut Vec<u32>,
        start: u32,
        k_max: u32,
        len: usize,
        visit: &mut impl FnMut(&[u32]) -> Result<()>,
    ) -> Result<()> {
        if seq.len() == len {
            return visit(seq);
        }
        let remaining = (len - seq.len()) as u32;
        for k in start..=k_max + 1 - remaining {
            seq.push(k);
            go(seq, k + 1, k_max, len, visit)?;
            seq.pop();
        }
        Ok(())
    }
    if len == 0 || len as u32 > k_max {
        return Ok(());
    }
    go(&mut Vec::with_capacity(len), 1, k_max, len, visit)
}

/// Sum of `cylinder_measure` over every strictly increasing sequence of
/// `depth + 1` entries `≤ K_max`, by direct enumeration.
pub fn brute_force_cn(map: &FullBranchMap, depth: u32, k_max: u32) -> Result<Rational> {
    enumeration_count(k_max, depth + 1)?;
    let mut total = Rational::zero();
    for_each_increasing(k_max, depth as usize + 1, &mut |seq| {
        total += cylinder_measure(map, seq)?;
        Ok(())
    })?;
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingReport {
    pub depth: u32,
    pub k_max: u32,
    pub cylinders: u64,
    /// `Σ p_{k_n}·|cyl|` over the depth-`n` family.
    pub left_mass: String,
    /// `measure_cn(n + 1).lower_bound`, the same union counted at the next depth.
    pub next_depth_lower: String,
    pub mass_identity: bool,
    /// `|L(cyl)| = p_{k_n}·|cyl|` for every cylinder.
    pub proportion_identity: bool,
    pub disjoint: bool,
    pub contained: bool,
    /// `f^n(L(cyl)) = L_{k_n}` by exact endpoint iteration.
    pub image_identity: bool,
    pub ok: bool,
}

/// Checks that the left subintervals of the depth-`n` cylinders tile `C_{n+1}`
/// over the truncated family. `depth = 0` means the single-index cylinders `I_k`.
pub fn nesting_check(map: &FullBranchMap, depth: u32, k_max: u32) -> Result<NestingReport> {
    let count = enumeration_count(k_max, depth + 1)?;
    let mut left_mass = Rational::zero();
    let mut proportion_identity = true;
    let mut contained = true;
    let mut image_identity = true;
    let mut lefts: Vec<(Rational, Rational)> = Vec::with_capacity(count as usize);

    for_each_increasing(k_max, depth as usize + 1, &mut |seq| {
        let cyl = cylinder_interval(map, seq)?;
        let (c_lo, c_hi) = match cyl.interval {
            Interval::Exact { lo, hi } => (lo, hi),
            Interval::Numeric { .. } => unreachable!("increasing cylinders are exact"),
        };
        let last = *seq.last().expect("non-empty");
        let p_last = map.p(last)?;
        let measure = cylinder_measure(map, seq)?;
        let (l_lo, l_hi) = left_subinterval(map, seq)?;

        proportion_identity &= &l_hi - &l_lo == &p_last * &measure;
        contained &= c_lo <= l_lo && l_hi <= c_hi && l_lo < l_hi;

        let (mut y_lo, mut y_hi) = (l_lo.clone(), l_hi.clone());
        for &k in &seq[..seq.len() - 1] {
            let b = map.branch(k)?;
            y_lo = b.eval_affine(&y_lo);
            y_hi = b.eval_affine(&y_hi);
        }
        let target = map.branch(last)?;
        image_identity &= y_lo == target.a_lo && y_hi == target.junction;

        left_mass += p_last * measure;
        lefts.push((l_lo, l_hi));
        Ok(())
    })?;

    lefts.sort_by(|a, b| a.0.cmp(&b.0));
    let disjoint = lefts.windows(2).all(|w| w[0].1 <= w[1].0);

    let next = measure_cn(map, depth + 1, k_max, None)?;
    let mass_identity = left_mass == next.lower_bound;
    let ok = mass_identity && proportion_identity && disjoint && contained && image_identity;
    Ok(NestingReport {
        depth,
        k_max,
        cylinders: count,
        left_mass: rational::to_string(&left_mass),
        next_depth_lower: rational::to_string(&next.lower_bound),
        mass_identity,
        proportion_identity,
        disjoint,
        contained,
        image_identity,
        ok,
    })
}

/// `Σ_{k ≤ K} p_k·|I_k|`, the depth-0 nesting identity's left side.
pub fn left_mass_depth0(map: &FullBranchMap, k_max: u32) -> Result<Rational> {
    let mut total = Rational::zero();
    for k in 1..=k_max {
        total += map.p(k)? * map.interval_len(k);
    }
    Ok(total)
}
