//! End-to-end acceptance checks, one line per criterion. Runs as a plain
//! binary so the report is always printed.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use orbitcount_core::boundary::{act_circle, measure_circle, Arc, Cap, CirclePoint, Region};
use orbitcount_core::ergodic::{ergodic_average, left_haar_average, nu_integral, CosetPoint, TestFunction};
use orbitcount_core::experiment::{
    estimate_covolume, fit_exponent, run_count, Basepoint, CountTable, ExperimentConfig, NamedRegion, WHOLE_SPACE,
};
use orbitcount_core::group::{iwasawa_decompose, random_group_element};
use orbitcount_core::haar::{cone_fraction, gamma_n, rho_ball_volume};
use orbitcount_core::lattice::{enumerate_lattice, SubgroupSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn constants() -> Check {
    let g2 = gamma_n(2).map_err(err)?;
    let g3 = gamma_n(3).map_err(err)?;
    let d2 = (g2 - PI / 2.0).abs();
    let d3 = (g3 - PI * PI / 24.0).abs();
    Ok((
        d2 <= 1e-12 && d3 <= 1e-12,
        format!("|gamma_2 - pi/2| = {d2:.1e}, |gamma_3 - pi^2/24| = {d3:.1e}"),
    ))
}

fn volume_asymptotics() -> Check {
    let r2 = rho_ball_volume(2, 1e3, f64::NEG_INFINITY).map_err(err)?.normalized() / gamma_n(2).map_err(err)?;
    let r3 = rho_ball_volume(3, 1e3, f64::NEG_INFINITY).map_err(err)?.normalized() / gamma_n(3).map_err(err)?;
    Ok((
        (r2 - 1.0).abs() < 0.01 && (r3 - 1.0).abs() < 0.02,
        format!("vol/(gamma_n T^(n^2-n)) at T=1e3: n=2 {r2:.6}, n=3 {r3:.6}"),
    ))
}

fn cone_concentration() -> Check {
    let f: Vec<f64> = [1e2, 1e4, 1e6]
        .iter()
        .map(|&t| cone_fraction(2, t, 0.0))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let increasing = f[0] < f[1] && f[1] < f[2];
    Ok((
        increasing && f[2] >= 0.99,
        format!("fractions at T=1e2,1e4,1e6: {:.9}, {:.9}, {:.9}", f[0], f[1], f[2]),
    ))
}

fn arcs(name: &str, arcs: Vec<Arc>) -> NamedRegion {
    NamedRegion::new(name, Region::arcs(arcs).expect("valid arcs")).expect("valid name")
}

fn circle_table() -> Result<CountTable, String> {
    let inf = f64::INFINITY;
    let iv = |lo, hi| Arc::Interval { lo, hi };
    let regions = vec![
        arcs("inner", vec![iv(-1.0, 1.0)]),
        arcs("positive", vec![iv(0.0, inf)]),
        arcs("q1", vec![iv(-inf, -1.0)]),
        arcs("q2", vec![iv(-1.0, 0.0)]),
        arcs("q3", vec![iv(0.0, 1.0)]),
        arcs("q4", vec![iv(1.0, inf)]),
    ];
    let mut c = ExperimentConfig::new(2, vec![50.0, 100.0, 200.0, 300.0, 400.0, 500.0], regions);
    c.basepoints = ["0", "inf", "1/3"]
        .iter()
        .map(|s| Basepoint::parse(s, 2))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    run_count(&c).map_err(err)
}

fn equidistribution(table: &CountTable) -> Check {
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.t == 500.0 && r.region != WHOLE_SPACE)
        .collect();
    // m of each region from the arctan law, computed here independently
    let expected = |name: &str| {
        if matches!(name, "inner" | "positive") {
            0.5
        } else {
            0.25
        }
    };
    let worst = rows
        .iter()
        .map(|r| (r.ratio - expected(&r.region)).abs())
        .fold(0.0, f64::max);
    Ok((
        rows.len() == 18 && worst <= 0.03,
        format!("max |ratio - m| at T=500 over 6 regions x 3 basepoints: {worst:.5}"),
    ))
}

fn subgrid(table: &CountTable, keep: &[f64]) -> CountTable {
    CountTable {
        rows: table.rows.iter().filter(|r| keep.contains(&r.t)).cloned().collect(),
    }
}

fn exponents(circle: &CountTable, projective: &CountTable) -> Check {
    let s2 = fit_exponent(&subgrid(circle, &[50.0, 100.0, 200.0, 400.0]))
        .map_err(err)?
        .slope;
    let s3 = fit_exponent(&subgrid(projective, &[4.0, 6.0, 8.0, 10.0]))
        .map_err(err)?
        .slope;
    Ok((
        ((s2 - 2.0) / 2.0).abs() <= 0.03 && ((s3 - 6.0) / 6.0).abs() <= 0.10,
        format!("slopes: n=2 {s2:.4} (grid 50-400), n=3 {s3:.4} (grid 4-10)"),
    ))
}

fn projective_table() -> Result<CountTable, String> {
    let cap = Cap::new(&[0.0, 0.0, 1.0], PI / 3.0).map_err(err)?;
    let region = NamedRegion::new("cap", Region::caps(vec![cap]).map_err(err)?).map_err(err)?;
    let c = ExperimentConfig::new(3, vec![4.0, 6.0, 8.0, 10.0, 12.0], vec![region]);
    run_count(&c).map_err(err)
}

fn projective_cap(table: &CountTable) -> Check {
    let row = table.get(12.0, "cap", "1:0:0").ok_or("missing cap row at T=12")?;
    let whole = table.get(12.0, WHOLE_SPACE, "1:0:0").ok_or("missing X row at T=12")?;
    let dev = (row.ratio - 0.5).abs();
    Ok((
        dev <= 0.05,
        format!(
            "N(cap)/N(X) at T=12 = {:.5} ({} of {} points)",
            row.ratio, row.count, whole.count
        ),
    ))
}

fn covolume_stability(table: &CountTable) -> Check {
    let est: Vec<f64> = estimate_covolume(&subgrid(table, &[200.0, 300.0, 400.0, 500.0]), 2)
        .map_err(err)?
        .into_iter()
        .map(|(_, e)| e.value)
        .collect();
    let max = est.iter().copied().fold(f64::MIN, f64::max);
    let min = est.iter().copied().fold(f64::MAX, f64::min);
    let spread = (max - min) / min;
    Ok((
        est.len() == 12 && spread < 0.05,
        format!(
            "covolume estimates over T=200..500 x 3 basepoints in [{min:.5}, {max:.5}], spread {:.3}%",
            100.0 * spread
        ),
    ))
}

fn basepoints() -> Result<Vec<CosetPoint>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut out = vec![CosetPoint::identity()];
    for _ in 0..2 {
        out.push(CosetPoint::random(&mut rng).map_err(err)?);
    }
    Ok(out)
}

fn right_averages() -> Check {
    let f = TestFunction::standard_box();
    let nu = nu_integral(&f, 1_000_000, 1).map_err(err)?;
    let closed = 3.0 / (2.0 * PI);
    let mut ok = (nu.value - closed).abs() <= 3.0 * nu.std_error;
    let mut worst = 0.0f64;
    for (i, y) in basepoints()?.iter().enumerate() {
        let est: Vec<_> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&t| ergodic_average(y, &f, t, 1_000_000, 100 + i as u64))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let errs: Vec<f64> = est.iter().map(|e| (e.value - nu.value).abs()).collect();
        let sig: Vec<f64> = est.iter().map(|e| e.std_error.hypot(nu.std_error)).collect();
        worst = worst.max(errs[2]);
        ok &= errs[2] <= 0.05 && errs[2] < errs[0];
        ok &= (1..3).all(|k| errs[k] <= errs[k - 1] + 3.0 * sig[k].hypot(sig[k - 1]));
    }
    Ok((
        ok,
        format!(
            "nu = {:.4} +- {:.4} (closed form {closed:.4}); max |avg - nu| at T=1e3 over 3 basepoints {worst:.4}",
            nu.value, nu.std_error
        ),
    ))
}

fn left_counterexample() -> Check {
    let y = CosetPoint::identity();
    let f = TestFunction::standard_box();
    let v: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&t| left_haar_average(&y, &f, t, 1_000_000, 5).map(|e| e.value))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    Ok((
        v[0] > v[1] && v[1] > v[2] && v[2] <= 0.02,
        format!("left averages at T=10,1e2,1e3: {:.5}, {:.5}, {:.5}", v[0], v[1], v[2]),
    ))
}

fn property_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for i in 0..100_000 {
        let g = random_group_element(2 + i % 5, &mut rng).map_err(err)?;
        let iw = iwasawa_decompose(&g).map_err(err)?;
        worst = worst.max(iw.reconstruct().sub(g.matrix()).frobenius_norm());
    }
    let iwasawa = worst <= 1e-10;

    let mut oracle = true;
    for (n, grid) in [(2, vec![1.0, 1.5, 2.0, 3.0, 4.5, 6.0]), (3, vec![1.5, 1.8, 2.0])] {
        for t in grid {
            let found: Vec<Vec<i64>> = enumerate_lattice(n, t, SubgroupSpec::Full)
                .map_err(err)?
                .iter()
                .map(|g| g.entries().to_vec())
                .collect();
            oracle &= found == common::brute_force(n, t);
        }
    }

    let mut action = true;
    for _ in 0..10_000 {
        let g = random_group_element(2, &mut rng).map_err(err)?;
        let h = random_group_element(2, &mut rng).map_err(err)?;
        let x = rng.random_range(-5.0..5.0);
        let lhs = act_circle(&g.mul(&h), CirclePoint::Finite(x)).map_err(err)?;
        let rhs = act_circle(&g, act_circle(&h, CirclePoint::Finite(x)).map_err(err)?).map_err(err)?;
        if let (CirclePoint::Finite(a), CirclePoint::Finite(b)) = (lhs, rhs) {
            if a.abs() < 1e6 {
                action &= (a - b).abs() <= 1e-9 * (1.0 + a.abs());
            }
        }
    }

    let mut additive = true;
    for _ in 0..10_000 {
        let mut p = [
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
        ];
        p.sort_by(f64::total_cmp);
        let m = |lo, hi| {
            measure_circle(&Region::arcs(vec![Arc::Interval { lo, hi }]).unwrap())
                .unwrap()
                .value
        };
        additive &= (m(p[0], p[2]) - m(p[0], p[1]) - m(p[1], p[2])).abs() <= 1e-12;
    }
    Ok((
        iwasawa && oracle && action && additive,
        format!(
            "Iwasawa worst {worst:.1e} over 1e5; brute-force oracle {}; action law {}; additivity {}",
            ok_word(oracle),
            ok_word(action),
            ok_word(additive)
        ),
    ))
}

fn ok_word(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISMATCH"
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Check, f64)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &dyn Fn() -> Check| {
        let start = Instant::now();
        let r = f();
        results.push((id, name, r, start.elapsed().as_secs_f64()));
    };
    run(1, "constants", &constants);
    run(2, "volume asymptotics", &volume_asymptotics);
    run(3, "cone concentration", &cone_concentration);
    let circle = circle_table();
    let projective = projective_table();
    let with_tables = |f: &dyn Fn(&CountTable, &CountTable) -> Check| -> Check {
        match (&circle, &projective) {
            (Ok(c), Ok(p)) => f(c, p),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        }
    };
    run(4, "equidistribution ratios", &|| {
        with_tables(&|c, _| equidistribution(c))
    });
    run(5, "growth exponent", &|| with_tables(&exponents));
    run(6, "projective cap", &|| with_tables(&|_, p| projective_cap(p)));
    run(7, "covolume stability", &|| with_tables(&|c, _| covolume_stability(c)));
    run(8, "right-Haar ergodic averages", &right_averages);
    run(9, "left-Haar counterexample", &left_counterexample);
    run(10, "property suites", &property_suites);

    let mut failed = 0;
    for (id, name, result, secs) in &results {
        let (pass, detail) = match result {
            Ok((pass, detail)) => (*pass, detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {id:>2} {name}: {detail} ({secs:.1}s)",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
