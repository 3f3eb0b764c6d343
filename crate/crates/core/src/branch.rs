//! One branch `f|_{I_n}`: affine on `L_n`, smooth convex cap on `R_n`.

use num_traits::One;

use crate::profile::TransitionProfile;
use crate::rational::{self, Rational};

/// Exact description of the branch on `I_n = (a_{n+1}, a_n]`.
///
/// On `L_n = (a_{n+1}, ℓ_n]` the branch is `s_n·(x − a_{n+1})`; on
/// `R_n = (ℓ_n, a_n]` its derivative rises from `s_n` to `M_n` along the
/// transition profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub n: u32,
    /// `a_{n+1}`
    pub a_lo: Rational,
    /// `a_n`
    pub a_hi: Rational,
    pub p: Rational,
    /// `ℓ_n = a_{n+1} + p_n·|I_n|`
    pub junction: Rational,
    /// `s_n = λ/p_n`
    pub slope: Rational,
    /// `M_n`, the derivative at the right end of `R_n`.
    pub cap: Rational,
}

impl Branch {
    pub fn len(&self) -> Rational {
        &self.a_hi - &self.a_lo
    }

    pub fn left_len(&self) -> Rational {
        &self.junction - &self.a_lo
    }

    pub fn right_len(&self) -> Rational {
        &self.a_hi - &self.junction
    }

    /// `|I_n^−| / |L_n|` with `I_n^− = (0, a_{n+1}]`.
    pub fn ratio_minus(&self) -> Rational {
        &self.a_lo / self.left_len()
    }

    /// `|I_n^+| / |R_n|` with `I_n^+ = [a_{n+1}, 1]`.
    pub fn ratio_plus(&self) -> Rational {
        (Rational::one() - &self.a_lo) / self.right_len()
    }

    pub fn in_left(&self, x: &Rational) -> bool {
        x > &self.a_lo && x <= &self.junction
    }

    /// Affine part, valid for `x ∈ [a_{n+1}, ℓ_n]`.
    pub fn eval_affine(&self, x: &Rational) -> Rational {
        &self.slope * (x - &self.a_lo)
    }

    /// Inverse of the affine part for `y ∈ [0, a_{n+1}]`.
    pub fn invert_affine(&self, y: &Rational) -> Rational {
        &self.a_lo + y / &self.slope
    }

    pub fn to_float(&self) -> FloatBranch {
        let right_len = self.right_len();
        let excess = (&self.cap - &self.slope) * &right_len;
        FloatBranch {
            n: self.n,
            a_lo: rational::to_f64(&self.a_lo),
            a_hi: rational::to_f64(&self.a_hi),
            junction: rational::to_f64(&self.junction),
            slope: rational::to_f64(&self.slope),
            right_len: rational::to_f64(&right_len),
            excess: rational::to_f64(&excess),
        }
    }
}

/// `f64` mirror of a [`Branch`] for fast evaluation.
///
/// The smooth part is stored as `excess = (M_n − s_n)·|R_n|`, which stays
/// finite even when `M_n` itself would overflow on deep branches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloatBranch {
    pub n: u32,
    pub a_lo: f64,
    pub a_hi: f64,
    pub junction: f64,
    pub slope: f64,
    pub right_len: f64,
    pub excess: f64,
}

impl FloatBranch {
    /// Local coordinate on `R_n`, clamped to `[0, 1]`.
    #[inline]
    pub fn local(&self, x: f64) -> f64 {
        if self.right_len > 0.0 {
            ((x - self.junction) / self.right_len).clamp(0.0, 1.0)
        } else if x > self.junction {
            1.0
        } else {
            0.0
        }
    }

    /// Branch formula on the closed interval `[a_{n+1}, a_n]`.
    #[inline]
    pub fn eval(&self, x: f64, profile: &TransitionProfile) -> f64 {
        if x <= self.junction {
            return self.slope * (x - self.a_lo);
        }
        self.eval_local(self.local(x), profile)
    }

    /// `f` at local coordinate `t ∈ [0, 1]` on `R_n`. Avoids the loss in
    /// `x − ℓ_n` on deep branches, where `f′ ≈ 2/|R_n|` magnifies the
    /// rounding of `x` itself.
    #[inline]
    pub fn eval_local(&self, t: f64, profile: &TransitionProfile) -> f64 {
        self.a_lo + self.slope * self.right_len * t + self.excess * profile.integral(t)
    }

    #[inline]
    pub fn deriv(&self, x: f64, profile: &TransitionProfile) -> f64 {
        if x <= self.junction || self.right_len == 0.0 {
            return self.slope;
        }
        let t = self.local(x);
        self.slope + self.excess / self.right_len * profile.psi(t)
    }

    #[inline]
    pub fn deriv2(&self, x: f64, profile: &TransitionProfile) -> f64 {
        if x <= self.junction || self.right_len == 0.0 {
            return 0.0;
        }
        let t = self.local(x);
        let psi_prime = profile.psi_prime(t);
        if psi_prime == 0.0 {
            return 0.0;
        }
        self.excess / (self.right_len * self.right_len) * psi_prime
    }
}
