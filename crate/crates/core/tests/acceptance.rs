//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Run with `cargo test -p popgini --test acceptance`.

use std::collections::BTreeSet;
use std::process::ExitCode;

use popgini::dataset::{bundled_reference, published_table, reconstructed_reference};
use popgini::gini::{exact_subsample_mean, gini_coefficient, max_gini, IncomeSample};
use popgini::regress::{fit, DfStyle, HcVariant, ModelSpec, R2Convention, Regressor};
use popgini::report::{build_report, published, refit_with_gof};
use popgini::special::student_t_p_value;
use popgini::targetmodel::{
    compare_forms, fit_target_model, fit_target_model_with, predict, round_to, TargetOptions,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    info: Vec<String>,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: true,
        detail: detail.into(),
        info: Vec::new(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
        info: Vec::new(),
    }
}

impl Outcome {
    fn with_info(mut self, line: impl Into<String>) -> Self {
        self.info.push(line.into());
        self
    }
}

fn same_at(x: f64, published: f64, decimals: u32) -> bool {
    (round_to(x, decimals) - published).abs() < 1e-12
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn below(rng: &mut ChaCha8Rng, m: u64) -> u64 {
    rng.next_u64() % m
}

fn c1_coefficients() -> Outcome {
    let m = fit_target_model(&bundled_reference()).expect("fit");
    let ok = same_at(m.beta1, published::COEFFICIENTS[0], 4)
        && same_at(m.beta2, published::COEFFICIENTS[1], 4);
    let detail = format!(
        "beta1 = {:.6}, beta2 = {:.6} (published {} and {}), n = {}",
        m.beta1,
        m.beta2,
        published::COEFFICIENTS[0],
        published::COEFFICIENTS[1],
        m.fit.n_obs
    );
    if ok && m.fit.n_obs == published::N_OBSERVATIONS {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn c2_inference() -> Outcome {
    let d = bundled_reference();
    let mut fits = Vec::new();
    for hc in [HcVariant::HC0, HcVariant::HC1] {
        let m = fit_target_model_with(
            &d,
            &TargetOptions {
                add_anchor: true,
                hc,
            },
        )
        .expect("fit");
        fits.push((hc, m.fit));
    }
    let exact = |f: &popgini::FitResult| {
        same_at(f.t_stats[0], published::T_STATS[0], 2)
            && same_at(f.t_stats[1], published::T_STATS[1], 2)
            && same_at(f.p_values[1], published::P_VALUE_LN_POP_SQ, 4)
            && f.p_values[0] < published::P_VALUE_LN_POP_BELOW
    };
    let describe = |hc: HcVariant, f: &popgini::FitResult| {
        format!(
            "{hc}: t = {:.4}, {:.4}; p = {:.2e}, {:.5}",
            f.t_stats[0], f.t_stats[1], f.p_values[0], f.p_values[1]
        )
    };
    if let Some((hc, f)) = fits.iter().find(|(_, f)| exact(f)) {
        return pass(format!("exact under {}", describe(*hc, f)));
    }
    // Neither variant reproduces all three figures: relaxed agreement.
    let relaxed = fits.iter().find(|(_, f)| {
        (f.t_stats[0] - published::T_STATS[0]).abs() <= published::T_RELAXED_TOL
            && (f.t_stats[1] - published::T_STATS[1]).abs() <= published::T_RELAXED_TOL
            && (f.p_values[1] - published::P_VALUE_LN_POP_SQ).abs() <= published::P_RELAXED_TOL
            && f.p_values[0] < published::P_VALUE_LN_POP_BELOW
    });
    let all: Vec<String> = fits.iter().map(|(hc, f)| describe(*hc, f)).collect();
    match relaxed {
        Some((hc, f)) => pass(format!("relaxed under {}", describe(*hc, f))).with_info(format!(
            "deviation: no HC variant matches t = 5.26, -1.36 and p = 0.1785 at published precision ({}); \
             accepted within t +/- {} and p +/- {}",
            all.join("; "),
            published::T_RELAXED_TOL,
            published::P_RELAXED_TOL
        )),
        None => fail(all.join("; ")),
    }
}

fn c3_adjusted_r2() -> Outcome {
    let conventions = [
        (R2Convention::Centered, DfStyle::Standard),
        (R2Convention::Centered, DfStyle::NoIntercept),
        (R2Convention::Uncentered, DfStyle::Standard),
        (R2Convention::Uncentered, DfStyle::NoIntercept),
    ];
    let adj = |d: &popgini::Dataset, r2, df| {
        refit_with_gof(d, r2, df, HcVariant::HC1)
            .expect("fit")
            .adj_r_squared
    };
    let bundled = bundled_reference();
    let values: Vec<(R2Convention, DfStyle, f64)> = conventions
        .iter()
        .map(|&(r, d)| (r, d, adj(&bundled, r, d)))
        .collect();
    let listing: Vec<String> = values
        .iter()
        .map(|(r, d, v)| format!("{r:?}/{d:?} {v:.6}"))
        .collect();
    let recon = adj(
        &reconstructed_reference(),
        R2Convention::Centered,
        DfStyle::Standard,
    );
    let info = format!(
        "info: four-decimal reconstructed Gini values give Centered/Standard adjusted R^2 = {recon:.6}"
    );
    match values
        .iter()
        .find(|(_, _, v)| same_at(*v, published::ADJ_R_SQUARED, 4))
    {
        Some((r, d, v)) => pass(format!("{r:?}/{d:?} gives {v:.6}")).with_info(info),
        None => fail(format!(
            "no convention rounds to {}: {}",
            published::ADJ_R_SQUARED,
            listing.join(", ")
        ))
        .with_info(info),
    }
}

fn c4_estimates() -> Outcome {
    let m = fit_target_model(&bundled_reference()).expect("fit");
    let shown = m.published_precision();
    let full = m.full_precision();
    let mut worst = (String::new(), 0.0f64);
    let mut worst_full = 0.0f64;
    let mut failures = Vec::new();
    let mut anchor_ok = false;
    for row in published_table() {
        let est = predict(&shown, row.population).expect("predict").gini;
        if row.population == 1 {
            anchor_ok = est == 0.0 && row.estimated_gini == 0.0;
            continue;
        }
        let dev = (est - row.estimated_gini).abs();
        if dev > worst.1 {
            worst = (row.name.clone(), dev);
        }
        if dev > published::ESTIMATE_TOL + 1e-12 {
            failures.push(format!("{} {est:.5} vs {}", row.name, row.estimated_gini));
        }
        let dev_full = (predict(&full, row.population).unwrap().gini - row.estimated_gini).abs();
        worst_full = worst_full.max(dev_full);
    }
    let info =
        format!("info: with unrounded coefficients the largest deviation is {worst_full:.5}");
    if failures.is_empty() && anchor_ok {
        pass(format!(
            "69 rows within {}, largest deviation {:.5} ({}); anchor row 0",
            published::ESTIMATE_TOL,
            worst.1,
            worst.0
        ))
        .with_info(info)
    } else {
        fail(format!("anchor ok = {anchor_ok}; {}", failures.join("; "))).with_info(info)
    }
}

fn c5_percent_gaps() -> Outcome {
    let d = bundled_reference();
    let m = fit_target_model(&d).expect("fit").published_precision();
    let table = published_table();
    let mut failures = Vec::new();
    let mut worst = (String::new(), 0.0f64);
    for row in table.iter().filter(|r| r.population > 1) {
        let est = predict(&m, row.population).unwrap().gini;
        let gap = (est - row.actual_gini) / row.actual_gini * 100.0;
        let dev = (gap - row.percent_gap).abs();
        if dev > worst.1 {
            worst = (row.name.clone(), dev);
        }
        if dev > published::PERCENT_TOL + 1e-9 {
            failures.push(format!("{} {gap:.3} vs {}", row.name, row.percent_gap));
        }
    }
    let recon = reconstructed_reference();
    let mr = fit_target_model(&recon).expect("fit").published_precision();
    let recon_worst = table
        .iter()
        .filter(|r| r.population > 1)
        .map(|row| {
            let actual = recon.get(&row.name).expect("same countries").gini;
            let est = predict(&mr, row.population).unwrap().gini;
            ((est - actual) / actual * 100.0 - row.percent_gap).abs()
        })
        .fold(0.0f64, f64::max);
    let info = format!(
        "info: with four-decimal reconstructed Gini values the largest deviation is {recon_worst:.4} pp"
    );
    if failures.is_empty() {
        pass(format!("largest deviation {:.4} pp ({})", worst.1, worst.0)).with_info(info)
    } else {
        fail(format!(
            "{} of 69 rows off by more than {} pp, largest {:.4} pp ({}): {}",
            failures.len(),
            published::PERCENT_TOL,
            worst.1,
            worst.0,
            failures.join("; ")
        ))
        .with_info(info)
    }
}

fn c6_classification() -> Outcome {
    let d = bundled_reference();
    let m = fit_target_model(&d).expect("fit").published_precision();
    let r = build_report(&m, &d).expect("report");
    let names = |band: &str| -> BTreeSet<String> {
        r.rows
            .iter()
            .filter(|row| row.band.map(|b| b.label()) == Some(band))
            .map(|row| row.name.clone())
            .collect()
    };
    let within5 = names(popgini::report::Band::Within5.label());
    let within10: BTreeSet<String> = within5
        .union(&names(popgini::report::Band::Within10.label()))
        .cloned()
        .collect();
    let want5: BTreeSet<String> = published::WITHIN_5.iter().map(|s| s.to_string()).collect();
    let want10: BTreeSet<String> = want5
        .iter()
        .cloned()
        .chain(published::WITHIN_10_EXTRA.iter().map(|s| s.to_string()))
        .collect();
    let detail = format!(
        "within 5%: {} (counts report {}), within 10% cumulative: {} (counts report {})",
        within5.len(),
        r.counts.within_5,
        within10.len(),
        r.counts.within_10_cumulative
    );
    if within5 == want5
        && within10 == want10
        && r.counts.within_5 == 12
        && r.counts.within_10_cumulative == 23
    {
        pass(format!("{detail}; membership matches"))
    } else {
        let missing: Vec<_> = want10.symmetric_difference(&within10).collect();
        fail(format!("{detail}; differing members {missing:?}"))
    }
}

fn pairwise_gini(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mean)
}

fn c7_gini_bounds() -> Outcome {
    let mut problems = Vec::new();
    for (p, want) in [
        (2u64, 1.0 / 2.0),
        (3, 2.0 / 3.0),
        (5, 4.0 / 5.0),
        (8, 7.0 / 8.0),
    ] {
        let mut x = vec![0.0; p as usize];
        x[p as usize - 1] = 1000.0;
        let g = gini_coefficient(&IncomeSample::new(x).unwrap()).unwrap();
        if g != want || max_gini(p).unwrap() != want {
            problems.push(format!("P = {p}: {g} vs {want}"));
        }
        let equal = gini_coefficient(&IncomeSample::new(vec![42.5; p as usize]).unwrap()).unwrap();
        if equal != 0.0 {
            problems.push(format!("equal sample of {p}: {equal}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 2000;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let n = 1 + below(&mut rng, 12) as usize;
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                if below(&mut rng, 4) == 0 {
                    0.0
                } else {
                    uniform(&mut rng) * 1e4
                }
            })
            .collect();
        if x.iter().all(|v| *v == 0.0) {
            x[0] = 1.0;
        }
        let g = gini_coefficient(&IncomeSample::new(x.clone()).unwrap()).unwrap();
        let oracle = pairwise_gini(&x);
        worst = worst.max((g - oracle).abs());
        let bound = (n as f64 - 1.0) / n as f64;
        if (g - oracle).abs() > 1e-12 || g < 0.0 || g > bound + 1e-15 {
            problems.push(format!("{x:?}: {g} vs oracle {oracle}, bound {bound}"));
        }
    }
    if problems.is_empty() {
        pass(format!(
            "exact (P-1)/P for P in 2,3,5,8; equal samples 0; {samples} random samples agree with the pairwise oracle to {worst:.1e}"
        ))
    } else {
        fail(problems.join("; "))
    }
}

/// Independent enumeration: every subset as a bitmask, pairwise Gini, zero subsets score 0.
fn enumerate_mean(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    let mut count = 0u32;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let sub: Vec<f64> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| x[i])
            .collect();
        if sub.iter().any(|v| *v > 0.0) {
            total += pairwise_gini(&sub);
        }
        count += 1;
    }
    total / count as f64
}

fn c8_subsample() -> Outcome {
    let mut problems = Vec::new();
    let known =
        exact_subsample_mean(&IncomeSample::new(vec![0.0, 0.0, 0.0, 100.0]).unwrap(), 2).unwrap();
    if known != 0.25 {
        problems.push(format!("[0,0,0,100], k = 2 gives {known}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let instances = 400;
    let mut largest_ratio = 0.0f64;
    for _ in 0..instances {
        let n = 2 + below(&mut rng, 9) as usize;
        let k = 1 + below(&mut rng, n as u64 - 1) as usize;
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                if below(&mut rng, 3) == 0 {
                    0.0
                } else {
                    (1 + below(&mut rng, 1000)) as f64
                }
            })
            .collect();
        if x.iter().all(|v| *v == 0.0) {
            x[n - 1] = 5.0;
        }
        let s = IncomeSample::new(x.clone()).unwrap();
        let full = gini_coefficient(&s).unwrap();
        let mean = exact_subsample_mean(&s, k).unwrap();
        let oracle = enumerate_mean(&x, k);
        if (mean - oracle).abs() > 1e-12 {
            problems.push(format!("{x:?}, k = {k}: {mean} vs oracle {oracle}"));
        }
        if mean > full + 1e-12 {
            problems.push(format!(
                "{x:?}, k = {k}: expected subsample Gini {mean} exceeds {full}"
            ));
        }
        if full > 0.0 {
            largest_ratio = largest_ratio.max(mean / full);
        }
    }
    if problems.is_empty() {
        pass(format!(
            "[0,0,0,100], k = 2 gives 0.25 exactly; {instances} instances with n <= 10 never exceed the full Gini (largest ratio {largest_ratio:.4})"
        ))
    } else {
        fail(problems.join("; "))
    }
}

const RANKING_SNAPSHOT: [&str; 4] = ["cubic", "log+root", "quadratic", "linear"];

fn c9_forms() -> Outcome {
    let d = bundled_reference();
    let c = compare_forms(&d).expect("compare");
    let again = compare_forms(&d).expect("compare");
    let adj = |name: &str| {
        c.entries
            .iter()
            .find(|e| e.name == name)
            .and_then(|e| e.adj_r_squared)
            .expect("fitted")
    };
    let (quad, lin) = (adj("quadratic"), adj("linear"));
    let listing: Vec<String> = c
        .entries
        .iter()
        .map(|e| format!("{} {:.6}", e.name, e.adj_r_squared.unwrap_or(f64::NAN)))
        .collect();
    let detail = format!(
        "ranking {:?}; adjusted R^2: {}",
        c.ranking,
        listing.join(", ")
    );
    if quad > lin && c.ranking == RANKING_SNAPSHOT && c == again {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Adaptive Simpson on `f` over `[a, b]`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn quadrature_p_value(t: f64, df: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let nu = df as f64;
    let ln_c =
        ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln();
    let density = move |x: f64| (ln_c - (nu + 1.0) / 2.0 * (1.0 + x * x / nu).ln()).exp();
    1.0 - 2.0 * simpson(&density, 0.0, t.abs(), 1e-14)
}

fn c10_regression_engine() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let basis_for = |k: usize| -> Vec<Regressor> {
        [
            Regressor::LnPop,
            Regressor::LnPopSquared,
            Regressor::LnPopCubed,
        ][..k]
            .to_vec()
    };
    let systems = 300;
    let (mut worst_orth, mut worst_rec) = (0.0f64, 0.0f64);
    for _ in 0..systems {
        let k = 1 + below(&mut rng, 3) as usize;
        let intercept = below(&mut rng, 2) == 0;
        let n = k + usize::from(intercept) + 2 + below(&mut rng, 20) as usize;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| uniform(&mut rng) * 20.0 - 10.0).collect())
            .collect();
        let spec = ModelSpec::new(basis_for(k), intercept, HcVariant::HC0).unwrap();
        let p = spec.n_params();
        let beta: Vec<f64> = (0..p).map(|_| uniform(&mut rng) * 4.0 - 2.0).collect();
        let row = |r: &Vec<f64>| -> Vec<f64> {
            if intercept {
                std::iter::once(1.0).chain(r.iter().copied()).collect()
            } else {
                r.clone()
            }
        };
        let clean: Vec<f64> = x
            .iter()
            .map(|r| row(r).iter().zip(&beta).map(|(a, b)| a * b).sum())
            .collect();
        match fit(&clean, &x, &spec) {
            Ok(f) => {
                for (got, want) in f.coefficients.iter().zip(&beta) {
                    let err = (got - want).abs();
                    worst_rec = worst_rec.max(err);
                    if err > 1e-9 {
                        problems.push(format!("recovery error {err:e}"));
                    }
                }
            }
            Err(e) => problems.push(format!("noiseless fit failed: {e}")),
        }

        let y: Vec<f64> = clean
            .iter()
            .map(|v| v + uniform(&mut rng) * 6.0 - 3.0)
            .collect();
        let f0 = fit(&y, &x, &spec).unwrap();
        let f1 = fit(&y, &x, &spec.clone().with_hc(HcVariant::HC1)).unwrap();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..p {
            let col: Vec<f64> = x.iter().map(|r| row(r)[j]).collect();
            let dot: f64 = col.iter().zip(&f0.residuals).map(|(a, e)| a * e).sum();
            let col_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rel = dot.abs() / (col_norm * y_norm);
            worst_orth = worst_orth.max(rel);
            if rel > 1e-8 {
                problems.push(format!("residuals not orthogonal to column {j}: {rel:e}"));
            }
        }
        let scale = n as f64 / (n - p) as f64;
        for i in 0..p {
            for j in 0..p {
                if f1.robust_covariance[i][j] != f0.robust_covariance[i][j] * scale {
                    problems.push(format!("HC1[{i}][{j}] is not n/(n-k) HC0"));
                }
            }
        }
    }

    let mut worst_p = 0.0f64;
    let mut checked = 0;
    for df in [1u64, 2, 3, 5, 10, 30, 68, 200] {
        for t in [0.0, 0.3, -1.36, 1.0, 2.0, -2.5, 4.0, 5.26, 8.0] {
            let got = student_t_p_value(t, df).unwrap();
            let want = quadrature_p_value(t, df);
            worst_p = worst_p.max((got - want).abs());
            checked += 1;
            if (got - want).abs() > 1e-8 {
                problems.push(format!(
                    "p-value t = {t}, df = {df}: {got} vs quadrature {want}"
                ));
            }
        }
    }

    if problems.is_empty() {
        pass(format!(
            "{systems} random systems: orthogonality {worst_orth:.1e}, recovery {worst_rec:.1e}, HC1 = n/(n-k) HC0 exactly; \
             {checked} p-values within {worst_p:.1e} of quadrature"
        ))
    } else {
        problems.truncate(10);
        fail(problems.join("; "))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("coefficients", c1_coefficients),
        ("inference", c2_inference),
        ("adjusted R^2", c3_adjusted_r2),
        ("estimated Gini column", c4_estimates),
        ("percent gap column", c5_percent_gaps),
        ("classification counts", c6_classification),
        ("Gini bounds", c7_gini_bounds),
        ("subsample bias", c8_subsample),
        ("form comparison", c9_forms),
        ("regression engine", c10_regression_engine),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let mark = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{mark} criterion {:>2} {name}: {}", i + 1, outcome.detail);
        for line in &outcome.info {
            println!("     {line}");
        }
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!(
            "acceptance: {} of {} criteria failed: {failed:?}",
            failed.len(),
            criteria.len()
        );
        ExitCode::FAILURE
    }
}
