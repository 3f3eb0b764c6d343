//! Orbit iteration, itineraries and empirical `C_n` / `E` membership.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::FullBranchMap;
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitMode {
    Float,
    /// Exact rational iterates while the orbit stays in the affine parts.
    ExactAffine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// All requested points were recorded.
    Completed,
    /// Exact-affine mode: the last recorded point lies in some `R_k`.
    LeftAffineRegion,
    /// Float mode: the next iterate lies below the float branch guard.
    PrecisionEscaped,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Iterates {
    Float(Vec<f64>),
    Exact(Vec<Rational>),
}

impl Iterates {
    pub fn len(&self) -> usize {
        match self {
            Iterates::Float(v) => v.len(),
            Iterates::Exact(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Iterates::Float(v) => v.clone(),
            Iterates::Exact(v) => v.iter().map(rational::to_f64).collect(),
        }
    }
}

/// A recorded orbit `x_0, x_1 = f(x_0), …` with `itinerary[i]` the branch of `x_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub mode: OrbitMode,
    pub points: Iterates,
    pub itinerary: Vec<u32>,
    /// Largest `n` with `k_0 < k_1 < … < k_n`.
    pub deepest_cn: usize,
    /// Smallest `N` with `k_N < k_{N+1} < …` to the end of the record.
    pub e_window: Option<usize>,
    pub precision_escaped: bool,
    pub termination: Termination,
}

impl OrbitRecord {
    fn finish(mode: OrbitMode, points: Iterates, itinerary: Vec<u32>, termination: Termination) -> Self {
        let (deepest_cn, e_window) = classify(&itinerary);
        Self {
            mode,
            points,
            itinerary,
            deepest_cn,
            e_window,
            precision_escaped: termination == Termination::PrecisionEscaped,
            termination,
        }
    }

    /// CSV with header `step,x,branch_index` (plus `x_exact` in exact mode).
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        match &self.points {
            Iterates::Float(xs) => {
                writeln!(out, "step,x,branch_index")?;
                for (i, (x, k)) in xs.iter().zip(&self.itinerary).enumerate() {
                    writeln!(out, "{i},{},{k}", rational::decimal(*x))?;
                }
            }
            Iterates::Exact(xs) => {
                writeln!(out, "step,x,branch_index,x_exact")?;
                for (i, (x, k)) in xs.iter().zip(&self.itinerary).enumerate() {
                    writeln!(out, "{i},{},{k},{}", rational::decimal(rational::to_f64(x)), rational::to_string(x))?;
                }
            }
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode,
            "points": self.points.len(),
            "deepest_cn": self.deepest_cn,
            "e_window": self.e_window,
            "precision_escaped": self.precision_escaped,
            "termination": self.termination,
        })
    }
}

/// `(deepest_Cn, E_window)` of an itinerary.
///
/// `E_window` needs at least one increasing step to witness, so a constant
/// tail gives `None`.
pub fn classify(itinerary: &[u32]) -> (usize, Option<usize>) {
    let deepest = itinerary
        .windows(2)
        .take_while(|w| w[0] < w[1])
        .count();
    if itinerary.len() < 2 {
        return (deepest, None);
    }
    let mut start = itinerary.len() - 1;
    while start > 0 && itinerary[start - 1] < itinerary[start] {
        start -= 1;
    }
    let window = (start < itinerary.len() - 1).then_some(start);
    (deepest, window)
}

/// Records up to `steps` points of the orbit of `x0`.
pub fn iterate(map: &FullBranchMap, x0: &Rational, steps: usize, mode: OrbitMode) -> Result<OrbitRecord> {
    match mode {
        OrbitMode::Float => iterate_float(map, rational::to_f64(x0), steps),
        OrbitMode::ExactAffine => rational_orbit(map, x0, steps),
    }
}

/// Floating-point orbit. Stops early with `precision_escaped` when an
/// iterate falls below the float branch guard.
pub fn iterate_float(map: &FullBranchMap, x0: f64, steps: usize) -> Result<OrbitRecord> {
    if steps == 0 {
        return Err(Error::Domain("steps must be at least 1".into()));
    }
    map.branch_index(x0).or_else(|e| match e {
        Error::Precision { .. } => Ok(0),
        other => Err(other),
    })?;

    let profile = map.profile();
    let mut points = Vec::with_capacity(steps);
    let mut itinerary = Vec::with_capacity(steps);
    let mut x = x0;
    let mut termination = Termination::Completed;
    for i in 0..steps {
        let k = match map.branch_index(x) {
            Ok(k) => k,
            Err(Error::Precision { .. }) => {
                termination = Termination::PrecisionEscaped;
                break;
            }
            Err(e) => return Err(e),
        };
        points.push(x);
        itinerary.push(k);
        if i + 1 < steps {
            let b = map.float_branch(k)?;
            x = b.eval(x, profile).min(1.0);
        }
    }
    Ok(OrbitRecord::finish(OrbitMode::Float, Iterates::Float(points), itinerary, termination))
}

/// Exact orbit through the affine parts. The first point outside `∪ L_j`
/// is recorded and ends the orbit.
pub fn rational_orbit(map: &FullBranchMap, x0: &Rational, steps: usize) -> Result<OrbitRecord> {
    if steps == 0 {
        return Err(Error::Domain("steps must be at least 1".into()));
    }
    let mut points = Vec::new();
    let mut itinerary = Vec::new();
    let mut x = x0.clone();
    let mut termination = Termination::Completed;
    for i in 0..steps {
        let k = map.branch_index_exact(&x)?;
        let b = map.branch(k)?;
        let inside = b.in_left(&x);
        let next = (inside && i + 1 < steps).then(|| b.eval_affine(&x));
        points.push(x);
        itinerary.push(k);
        if !inside {
            termination = Termination::LeftAffineRegion;
            break;
        }
        match next {
            Some(y) => x = y,
            None => break,
        }
    }
    Ok(OrbitRecord::finish(
        OrbitMode::ExactAffine,
        Iterates::Exact(points),
        itinerary,
        termination,
    ))
}
