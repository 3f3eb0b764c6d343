//! Smooth flat-ended monotone step `ψ` and its integral `Ψ`.
//!
//! `ψ(t) = E(t) / (E(t) + E(1 − t))` with `E(u) = exp(−1/u)`. Every
//! derivative of `ψ` vanishes at both ends, so gluing `s + (M − s)·ψ` onto a
//! constant derivative gives a `C^∞` junction.
//!
//! `Ψ` is tabulated once on `[0, 1/2]` by adaptive Gauss–Kronrod and
//! extended through `Ψ(1 − t) = Ψ(t) + 1/2 − t`, so `Ψ(1) = 1/2` holds
//! to the last bit.

/// Panels of the cached table on `[0, 1/2]`.
const PANELS: usize = 512;
const MAX_DEPTH: u32 = 30;

// Gauss–Kronrod 15/7 nodes and weights on [-1, 1] (QUADPACK qk15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// `ψ(t)`, clamped to 0 below the interval and 1 above it.
pub fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    // ψ = 1 / (1 + exp(1/t − 1/(1−t))); exp overflow to +inf gives 0 cleanly
    let g = 1.0 / t - 1.0 / (1.0 - t);
    1.0 / (1.0 + g.exp())
}

/// `ψ′(t) = ψ(1 − ψ)·(1/t² + 1/(1 − t)²)`, zero outside `(0, 1)`.
pub fn psi_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let p = psi(t);
    let q = p * (1.0 - p);
    if q == 0.0 {
        return 0.0;
    }
    q * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
}

/// One Gauss–Kronrod 15 pass: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gauss_kronrod_15(f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive bisection on Gauss–Kronrod 15 until the absolute error estimate is below `tol`.
pub fn integrate_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gauss_kronrod_15(f, a, b);
        if err <= tol || depth >= MAX_DEPTH {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    recurse(f, a, b, tol, 0)
}

/// Cached quadrature table for `Ψ`. Branch independent: every branch
/// rescales its right subinterval onto `[0, 1]` and shares one profile.
#[derive(Clone, Debug)]
pub struct TransitionProfile {
    tol: f64,
    /// `Ψ(j·h)` for `j = 0..=PANELS`, `h = 1/(2·PANELS)`.
    nodes: Vec<f64>,
}

impl TransitionProfile {
    pub fn new(tol: f64) -> Self {
        let h = 0.5 / PANELS as f64;
        let panel_tol = (tol / PANELS as f64).max(1e-18);
        let mut nodes = Vec::with_capacity(PANELS + 1);
        let mut acc = 0.0;
        nodes.push(0.0);
        for j in 0..PANELS {
            let a = j as f64 * h;
            acc += integrate_adaptive(&psi, a, a + h, panel_tol);
            nodes.push(acc);
        }
        Self { tol, nodes }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn psi(&self, t: f64) -> f64 {
        psi(t)
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        psi_prime(t)
    }

    /// `Ψ(t) = ∫₀ᵗ ψ`, clamped outside `[0, 1]`.
    pub fn integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 0.5;
        }
        if t > 0.5 {
            // Ψ(t) = Ψ(1 − t) + t − 1/2
            let u = 1.0 - t;
            return self.lower_half(u) + (t - 0.5);
        }
        self.lower_half(t)
    }

    fn lower_half(&self, t: f64) -> f64 {
        let h = 0.5 / PANELS as f64;
        let j = ((t / h) as usize).min(PANELS);
        let start = j as f64 * h;
        if t <= start {
            return self.nodes[j];
        }
        // a partial panel is narrower than h; one Kronrod pass is well below tol
        self.nodes[j] + gauss_kronrod_15(psi, start, t).0
    }
}

impl Default for TransitionProfile {
    fn default() -> Self {
        Self::new(1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson with many panels; shares nothing with the table.
    fn simpson(a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = psi(a) + psi(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * psi(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn endpoints_and_symmetry() {
        assert_eq!(psi(0.0), 0.0);
        assert_eq!(psi(1.0), 1.0);
        assert_eq!(psi(0.5), 0.5);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert!((psi(t) + psi(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn strictly_increasing_and_flat_ends() {
        // ψ saturates to 0 or 1 in f64 within a few hundredths of the ends
        let mut prev = psi(0.03);
        for i in 1..1000 {
            let t = 0.03 + i as f64 * (0.94 / 1000.0);
            let cur = psi(t);
            assert!(cur > prev, "not increasing at {t}");
            prev = cur;
        }
        assert!(psi(0.01) < 1e-40);
        assert!(psi_prime(0.01) < 1e-35);
        assert!(psi_prime(0.99) < 1e-35);
    }

    #[test]
    fn kronrod_weights_sum_to_two_and_integrate_polynomials() {
        let total = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert!((total - 2.0).abs() < 1e-15);
        let gauss = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert!((gauss - 2.0).abs() < 1e-15);
        // exact up to degree 22
        let (v, _) = gauss_kronrod_15(|x| x.powi(22), 0.0, 1.0);
        assert!((v - 1.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn integral_matches_independent_simpson() {
        let profile = TransitionProfile::default();
        for &t in &[0.05, 0.2, 0.37, 0.5, 0.61, 0.83, 0.999] {
            let oracle = simpson(0.0, t, 20_000);
            assert!(
                (profile.integral(t) - oracle).abs() < 1e-12,
                "Ψ({t}) = {} vs {oracle}",
                profile.integral(t)
            );
        }
        assert_eq!(profile.integral(1.0), 0.5);
        assert!((profile.integral(1.0 - 1e-12) - 0.5).abs() < 1e-11);
    }

    #[test]
    fn integral_derivative_is_psi() {
        let profile = TransitionProfile::default();
        let h = 1e-5;
        for &t in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let fd = (profile.integral(t + h) - profile.integral(t - h)) / (2.0 * h);
            assert!((fd - psi(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn psi_prime_matches_finite_difference() {
        let h = 1e-6;
        for &t in &[0.2, 0.4, 0.5, 0.65, 0.8] {
            let fd = (psi(t + h) - psi(t - h)) / (2.0 * h);
            assert!((fd - psi_prime(t)).abs() < 1e-7);
        }
    }
}
