use proptest::prelude::*;

use wildmap::cylinder::{cylinder_interval, cylinder_measure, left_subinterval};
use wildmap::orbit::{classify, iterate_float, rational_orbit, Iterates};
use wildmap::rational::{self, ratio, Rational};
use wildmap::FullBranchMap;

fn reference_map() -> &'static FullBranchMap {
    use std::sync::OnceLock;
    static MAP: OnceLock<FullBranchMap> = OnceLock::new();
    MAP.get_or_init(FullBranchMap::reference)
}

/// Strictly increasing itinerary with up to `len` symbols drawn from `1..=k_max`.
fn increasing(len: usize, k_max: u32) -> impl Strategy<Value = Vec<u32>> {
    proptest::sample::subsequence((1..=k_max).collect::<Vec<_>>(), 1..=len)
}

/// `lo + u (hi − lo)` with `u ∈ (0, 1]` on a dyadic grid.
fn point_in(lo: &Rational, hi: &Rational, m: u32) -> Rational {
    let u = ratio(m as i64 + 1, 1 << 20);
    lo + (hi - lo) * u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_formula_matches_pullback(seq in increasing(5, 16)) {
        let map = reference_map();
        let product = cylinder_measure(map, &seq).unwrap();
        let cyl = cylinder_interval(map, &seq).unwrap();
        prop_assert_eq!(cyl.interval.exact_len(), Some(product));
    }

    #[test]
    fn left_subinterval_points_stay_increasing(seq in increasing(5, 14), m in 0u32..(1 << 20)) {
        let map = reference_map();
        let (lo, hi) = left_subinterval(map, &seq).unwrap();
        let x = point_in(&lo, &hi, m);
        let n = seq.len() - 1;
        let rec = rational_orbit(map, &x, n + 2).unwrap();
        prop_assert_eq!(&rec.itinerary[..=n], &seq[..]);
        prop_assert!(rec.deepest_cn > n, "{:?}", rec.itinerary);
    }

    #[test]
    fn float_itinerary_is_consistent(x0 in 1e-12f64..=1.0, steps in 1usize..200) {
        let map = reference_map();
        let rec = iterate_float(map, x0, steps).unwrap();
        let Iterates::Float(points) = &rec.points else { unreachable!() };
        for (x, &k) in points.iter().zip(&rec.itinerary) {
            let b = map.float_branch(k).unwrap();
            let slack = 4.0 * f64::EPSILON;
            prop_assert!(*x > b.a_lo * (1.0 - slack) && *x <= b.a_hi * (1.0 + slack));
        }
        prop_assert_eq!(classify(&rec.itinerary), (rec.deepest_cn, rec.e_window));
    }

    #[test]
    fn inverse_brackets_target(n in 1u32..300, y in 1e-9f64..=1.0) {
        let map = reference_map();
        let x = map.invert_branch(n, y).unwrap();
        let b = map.float_branch(n).unwrap();
        prop_assert!(x >= b.a_lo && x <= b.a_hi);
        // the preimage lies within a few ulps of x
        let below = map.float_branch(n).unwrap().eval(x - 4.0 * x * f64::EPSILON, map.profile());
        let above = map.float_branch(n).unwrap().eval(x + 4.0 * x * f64::EPSILON, map.profile());
        prop_assert!(below <= y * (1.0 + 1e-12) && y <= above * (1.0 + 1e-12), "{below} {y} {above}");
    }

    #[test]
    fn shallow_round_trip(n in 1u32..12, y in 1e-6f64..=1.0) {
        let map = reference_map();
        let x = map.invert_branch(n, y).unwrap();
        let b = map.float_branch(n).unwrap();
        // a few ulps of x, magnified by f′, plus rounding of f itself
        let allowed = 8.0 * b.deriv(x, map.profile()) * x * f64::EPSILON + 4.0 * f64::EPSILON;
        prop_assert!((b.eval(x, map.profile()) - y).abs() <= allowed);
    }

    #[test]
    fn branch_is_increasing_and_convex(n in 1u32..40, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let map = reference_map();
        let b = map.float_branch(n).unwrap();
        let (s, t) = if u < v { (u, v) } else { (v, u) };
        prop_assume!(t - s > 1e-6);
        let x = b.a_lo + (b.a_hi - b.a_lo) * s;
        let z = b.a_lo + (b.a_hi - b.a_lo) * t;
        let p = map.profile();
        prop_assert!(b.eval(z, p) >= b.eval(x, p));
        prop_assert!(b.deriv(z, p) >= b.deriv(x, p));
        prop_assert!(b.deriv(x, p) >= 2.0);
    }
}

#[test]
fn exact_and_float_orbits_agree() {
    let map = reference_map();
    let seq: Vec<u32> = (1..=21).collect();
    let (lo, hi) = left_subinterval(map, &seq).unwrap();
    let x0 = (&lo + &hi) / rational::int(2);
    let exact = rational_orbit(map, &x0, 20).unwrap();
    let float = iterate_float(map, rational::to_f64(&x0), 20).unwrap();
    assert_eq!(exact.itinerary, float.itinerary);
    assert_eq!(exact.points.len(), 20);
    for (a, b) in exact.points.to_f64().iter().zip(float.points.to_f64()) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let map = reference_map();
    let p = map.profile();
    for n in 1..=5 {
        let b = map.float_branch(n).unwrap();
        for &t in &[0.2, 0.45, 0.6, 0.85] {
            let x = b.junction + t * b.right_len;
            let h = 1e-6 * b.right_len;
            let d1 = (b.eval(x + h, p) - b.eval(x - h, p)) / (2.0 * h);
            let d2 = (b.deriv(x + h, p) - b.deriv(x - h, p)) / (2.0 * h);
            assert!((d1 - b.deriv(x, p)).abs() <= 1e-6 * b.deriv(x, p), "f' on branch {n} at t = {t}");
            assert!((d2 - b.deriv2(x, p)).abs() <= 1e-5 * b.deriv2(x, p).abs().max(1.0), "f'' on branch {n} at t = {t}");
        }
    }
}

#[test]
fn exact_affine_matches_float_on_left_parts() {
    let map = reference_map();
    for n in 1..=30 {
        let b = map.branch(n).unwrap();
        let x = (&b.a_lo + &b.junction) / rational::int(2);
        let exact = rational::to_f64(&b.eval_affine(&x));
        let float = map.eval(rational::to_f64(&x)).unwrap();
        assert!((exact - float).abs() <= 1e-14 * exact, "branch {n}");
    }
}
