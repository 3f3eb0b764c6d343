//! Acceptance suite: one PASS/FAIL line per criterion, exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use wildmap::basin::{basin_sample, BasinConfig};
use wildmap::cylinder::{brute_force_cn, cylinder_interval, cylinder_measure, measure_cn, truncated_dp};
use wildmap::plot::parse_svg_samples;
use wildmap::rational::{self, ratio, Rational};
use wildmap::verifier::{check_exp_uniform, check_p1_p4, dichotomy_scan};
use wildmap::{ExpansionConfig, FullBranchMap, ProportionSchedule};

const BIN: &str = env!("CARGO_BIN_EXE_wildmap");

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(id: u32, title: &str, budget: Option<Duration>, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let over_budget = budget.is_some_and(|b| elapsed > b);
    let limit = budget.map_or(String::new(), |b| format!(" / limit {b:?}"));
    match result {
        Ok(detail) if !over_budget => {
            println!("PASS {id} {title}: {detail} [{elapsed:.2?}{limit}]");
            true
        }
        Ok(detail) => {
            println!("FAIL {id} {title}: over time budget; {detail} [{elapsed:.2?}{limit}]");
            false
        }
        Err(why) => {
            println!("FAIL {id} {title}: {why} [{elapsed:.2?}{limit}]");
            false
        }
    }
}

fn exact_expansion_ratios() -> Outcome {
    let map = FullBranchMap::reference();
    for n in 1..=50 {
        let r = check_exp_uniform(&map, n).map_err(|e| e.to_string())?;
        ensure(r.minus_equality, || format!("n = {n}: {} != {}", r.ratio_minus, r.lambda_over_p))?;
        ensure(r.plus_ge_lambda_over_p, || format!("n = {n}: {} < {}", r.ratio_plus, r.lambda_over_p))?;
    }
    Ok("equality and inequality hold exactly for n = 1..50".into())
}

fn branch_property_sweep() -> Outcome {
    let map = FullBranchMap::reference();
    let lambda = rational::to_f64(map.lambda());
    let report = check_p1_p4(&map, 1..=30, 1000, 1e-10).map_err(|e| e.to_string())?;
    let mut min_ratio = f64::INFINITY;
    let mut min_d2 = f64::INFINITY;
    let mut max_endpoint = 0.0f64;
    for b in &report.branches {
        ensure(b.min_deriv >= lambda * (1.0 - 1e-10), || format!("branch {}: min f' = {}", b.n, b.min_deriv))?;
        ensure(b.min_deriv2 >= -1e-10, || format!("branch {}: min f'' = {}", b.n, b.min_deriv2))?;
        ensure(b.endpoint_error <= 1e-9, || format!("branch {}: |f(a_n) - 1| = {}", b.n, b.endpoint_error))?;
        ensure(b.junction_image_exact, || format!("branch {}: f(l_n) != a_(n+1)", b.n))?;
        ensure(b.monotone, || format!("branch {} not monotone", b.n))?;
        min_ratio = min_ratio.min(b.min_deriv / lambda);
        min_d2 = min_d2.min(b.min_deriv2);
        max_endpoint = max_endpoint.max(b.endpoint_error);
    }
    Ok(format!(
        "min f'/lambda = {min_ratio:.12}, min f'' = {min_d2:e}, max |f(a_n) - 1| = {max_endpoint:.1e}, f(l_n) = a_(n+1) exact"
    ))
}

fn increasing_sequences(max_len: usize, k_max: u32) -> Vec<Vec<u32>> {
    fn extend(prefix: &mut Vec<u32>, max_len: usize, k_max: u32, out: &mut Vec<Vec<u32>>) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        if prefix.len() == max_len {
            return;
        }
        let start = prefix.last().map_or(1, |k| k + 1);
        for k in start..=k_max {
            prefix.push(k);
            extend(prefix, max_len, k_max, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), max_len, k_max, &mut out);
    out
}

fn cylinder_oracles() -> Outcome {
    let map = FullBranchMap::reference();
    let sequences = increasing_sequences(4, 12);
    for seq in &sequences {
        let product = cylinder_measure(&map, seq).map_err(|e| e.to_string())?;
        let cylinder = cylinder_interval(&map, seq).map_err(|e| e.to_string())?;
        let length = cylinder
            .interval
            .exact_len()
            .ok_or_else(|| format!("{seq:?}: pullback not exact"))?;
        ensure(product == length, || format!("{seq:?}: product {product} != length {length}"))?;
    }
    for depth in 1..=3 {
        let dp = measure_cn(&map, depth, 12, None).map_err(|e| e.to_string())?;
        let brute = brute_force_cn(&map, depth, 12).map_err(|e| e.to_string())?;
        ensure(dp.truncated_sum == brute, || {
            format!("depth {depth}: DP {} != enumeration {}", dp.truncated_sum, brute)
        })?;
        let table: Rational = truncated_dp(&map, depth, 12)
            .map_err(|e| e.to_string())?
            .last()
            .map(|row| row.iter().sum())
            .unwrap_or_else(Rational::zero);
        ensure(table == brute, || format!("depth {depth}: DP table total differs"))?;
    }
    Ok(format!(
        "{} itineraries of length 1..4 match exactly; DP = enumeration for depth 1..3 at K = 12",
        sequences.len()
    ))
}

fn first_cylinder_closed_form() -> Outcome {
    let map = FullBranchMap::reference();
    let r = measure_cn(&map, 1, 40, Some(1e-6)).map_err(|e| e.to_string())?;
    let target = ratio(7, 8);
    ensure(r.contains(&target), || {
        format!(
            "[{}, {}] misses 7/8",
            rational::to_f64(&r.lower_bound),
            rational::to_f64(&r.upper_bound())
        )
    })?;
    ensure(r.tail_bound < rational::from_f64(1e-6).unwrap(), || {
        format!("tail bound {} >= 1e-6", rational::to_f64(&r.tail_bound))
    })?;
    Ok(format!(
        "7/8 in [{:.12}, {:.12}], tail bound {:.3e}",
        rational::to_f64(&r.lower_bound),
        rational::to_f64(&r.upper_bound()),
        rational::to_f64(&r.tail_bound)
    ))
}

fn attractor_core_positive() -> Outcome {
    let map = FullBranchMap::reference();
    let reports = (1..=8)
        .map(|n| measure_cn(&map, n, 60, None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let c8 = &reports[7];
    ensure(c8.lower_bound > Rational::zero(), || "|C_8| lower bound is not positive".into())?;
    // |C_{n+1}| ≥ p_{n+1} |C_n| must be compatible with the certified intervals
    let mut ratios = Vec::new();
    let one_lower = Rational::one();
    for n in 0..8usize {
        let p = map.p(n as u32 + 1).map_err(|e| e.to_string())?;
        let lower_n = if n == 0 { &one_lower } else { &reports[n - 1].lower_bound };
        let next = &reports[n];
        ensure(next.upper_bound() >= &p * lower_n, || {
            format!("|C_{}| upper bound below p_{} |C_{}|", n + 1, n + 1, n)
        })?;
        ratios.push(rational::to_f64(&next.lower_bound) / rational::to_f64(lower_n));
    }
    Ok(format!(
        "|C_8| in [{:.9}, {:.9}]; lower-bound ratios {:?}",
        rational::to_f64(&c8.lower_bound),
        rational::to_f64(&c8.upper_bound()),
        ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
    ))
}

// Pinned by the pilot run with seed 7.
const PINNED_FRACTION_BELOW: [f64; 3] = [0.3692, 1.0, 1.0];

fn basin_trend() -> Outcome {
    let map = FullBranchMap::reference();
    let cfg = BasinConfig::new(10_000, 7, vec![10, 100, 1000], vec![1e-6]);
    let stats = basin_sample(&map, &cfg).map_err(|e| e.to_string())?;
    let median = &stats.median_x_n;
    let fraction = &stats.fraction_below[0];
    ensure(median.windows(2).all(|w| w[1] < w[0]), || format!("median not strictly decreasing: {median:?}"))?;
    ensure(fraction.windows(2).all(|w| w[1] >= w[0]), || format!("fraction decreased: {fraction:?}"))?;
    for (got, want) in fraction.iter().zip(PINNED_FRACTION_BELOW) {
        ensure((got - want).abs() <= 0.02, || format!("fraction {got} drifted from pinned {want}"))?;
    }
    Ok(format!(
        "median x_N {median:?}, fraction below 1e-6 {fraction:?}, escaped {:?}",
        stats.escaped_fraction
    ))
}

fn slope_dichotomy() -> Outcome {
    let config = ExpansionConfig::new(rational::int(2), ProportionSchedule::geometric(ratio(1, 2)).unwrap());
    let report = dichotomy_scan(&config, 40, &ratio(1, 100)).map_err(|e| e.to_string())?;
    for row in &report.rows {
        let p = config.schedule.p(row.n).unwrap();
        ensure(row.min_slope == rational::to_string(&p.recip()), || {
            format!("branch {}: {} != 1/p_n", row.n, row.min_slope)
        })?;
    }
    let last = report.rows.last().ok_or("empty scan")?;
    ensure(last.n == 40 && last.min_slope_decimal <= 1.01, || format!("branch 40 slope {}", last.min_slope_decimal))?;
    ensure(report.strictly_decreasing && report.above_limit, || "slopes not decreasing to the limit".into())?;
    ensure(report.limit == "1", || format!("limit {}", report.limit))?;
    Ok(format!(
        "slopes 4/3, {}, ..., {:.12} decrease to 1; first n with slope <= 1.01 is {:?}",
        report.rows[1].min_slope, last.min_slope_decimal, report.crossing
    ))
}

fn graph_reproduction() -> Outcome {
    let out = Command::new(BIN)
        .args(["plot", "--c", "3/2", "--beta", "1/2", "--branches", "6"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("plot exited with {}", out.status))?;
    let svg = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    ensure(svg.starts_with("<svg") && !svg.contains("href"), || "not a self-contained SVG".into())?;
    let samples = parse_svg_samples(&svg).map_err(|e| e.to_string())?;
    let mut lowest = 1.0f64;
    for n in 1..=6 {
        let branch: Vec<_> = samples.iter().filter(|s| s.branch == n).collect();
        ensure(branch.len() >= 3, || format!("branch {n} has too few samples"))?;
        ensure(branch.windows(2).all(|w| w[1].x > w[0].x && w[1].fx > w[0].fx), || {
            format!("branch {n} not monotone")
        })?;
        let min = branch.iter().map(|s| s.fx).fold(f64::INFINITY, f64::min);
        let max = branch.iter().map(|s| s.fx).fold(0.0, f64::max);
        ensure(min > 0.0 && min < 0.05 && (max - 1.0).abs() <= 1e-9, || {
            format!("branch {n} spans [{min}, {max}]")
        })?;
        let worst = branch
            .windows(3)
            .map(|w| w[2].fx - 2.0 * w[1].fx + w[0].fx)
            .fold(f64::INFINITY, f64::min);
        ensure(worst >= -1e-8, || format!("branch {n}: second difference {worst}"))?;
        lowest = lowest.min(min);
    }
    ensure(samples.iter().all(|s| (1..=6).contains(&s.branch)), || "unexpected branch index".into())?;
    Ok(format!(
        "{} samples over 6 branches, each monotone, convex and spanning ({lowest:.2e}, 1]",
        samples.len()
    ))
}

fn basin_thread_invariance() -> Outcome {
    let run = |threads: &str| {
        Command::new(BIN)
            .args([
                "basin", "--samples", "10000", "--seed", "7", "--checkpoints", "10,100,1000", "--delta", "1e-6",
                "--threads", threads,
            ])
            .output()
            .map_err(|e| e.to_string())
    };
    let one = run("1")?;
    let four = run("4")?;
    ensure(one.status.success() && four.status.success(), || "basin subcommand failed".into())?;
    ensure(one.stdout == four.stdout, || "JSON differs between --threads 1 and --threads 4".into())?;
    Ok(format!("{} identical bytes for --threads 1 and 4", one.stdout.len()))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "exact expansion ratios", Some(secs(1)), exact_expansion_ratios),
        run(2, "branch property sweep", Some(secs(10)), branch_property_sweep),
        run(3, "cylinder oracle equivalence", Some(secs(30)), cylinder_oracles),
        run(4, "|C_1| closed form", Some(secs(1)), first_cylinder_closed_form),
        run(5, "positive attractor core", Some(secs(120)), attractor_core_positive),
        run(6, "basin trend", Some(secs(60)), basin_trend),
        run(7, "slope dichotomy at c = 2", Some(secs(1)), slope_dichotomy),
        run(8, "graph of f over six branches", Some(secs(5)), graph_reproduction),
        run(9, "basin determinism across threads", None, basin_thread_invariance),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
