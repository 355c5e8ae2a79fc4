//! End-to-end acceptance checks. Each check runs in sequence inside one test
//! so that its wall-clock budget is measured without competing work, and
//! prints one PASS/FAIL line to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use freespec::families::{self, walk_charpoly, walk_m, walk_m_eigs_closed, walk_m_radius_closed, WalkSpec};
use freespec::figure::{quadratic_raster, FigureCase};
use freespec::fock::{spectral_radius_estimate, trace, DEFAULT_BUDGET};
use freespec::linalg::{eigenvalues, spectral_radius};
use freespec::quadratic::{self, build_q, equivalence_conditions, initial_state, xyz_trajectory, Method};
use freespec::region::{scan, GridSpec};
use freespec::resolvent::{
    level_sums, membership_oracle, membership_oracle_with_budget, solve_alpha, DEFAULT_MARGIN, DEFAULT_WINDOW,
};
use freespec::{NCPolynomial, QuadraticForm, VariableKind, Verdict};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_form(rng: &mut ChaCha8Rng) -> QuadraticForm {
    let a = [[unit_complex(rng), unit_complex(rng)], [unit_complex(rng), unit_complex(rng)]];
    let b = [unit_complex(rng), unit_complex(rng)];
    QuadraticForm::new(a, b, C64::new(0.0, 0.0))
}

fn random_lambda(rng: &mut ChaCha8Rng, r0: f64, r1: f64) -> C64 {
    C64::from_polar(rng.gen_range(r0..r1), rng.gen_range(0.0..std::f64::consts::TAU))
}

fn circ(text: &str, d: usize) -> NCPolynomial {
    NCPolynomial::parse(text, d, VariableKind::Circular).unwrap()
}

fn determinant_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let form = random_form(&mut rng);
        let lambda = random_lambda(&mut rng, 0.2, 5.0);
        let ql = build_q(&form, lambda).map_err(|e| e.to_string())?;
        let det = ql.q.determinant().map_err(|e| e.to_string())?;
        let a = ql.a_lambda;
        let tr: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum();
        let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let scaled = (det + tr * det_a.norm_sqr()).norm() / (1.0 + det.norm());
        worst = worst.max(scaled);
    }
    ensure(worst <= 1e-10, || format!("residual {worst:.2e} > 1e-10"))?;
    Ok(format!("max |det Q + Tr|det A|^2| / (1 + |det Q|) = {worst:.1e} over 200 draws"))
}

fn initial_state_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let form = random_form(&mut rng);
        let lambda = random_lambda(&mut rng, 0.2, 5.0);
        let q = build_q(&form, lambda).map_err(|e| e.to_string())?.q;
        let s = initial_state(&form, lambda).map_err(|e| e.to_string())?;
        let col = q.column(0);
        let scale = 1.0 / lambda.norm_sqr();
        for k in 0..6 {
            worst = worst.max((s[k] - col[k] * scale).norm() / s[k].norm().max(1.0));
        }
    }
    ensure(worst <= 1e-13, || format!("deviation {worst:.2e} > 1e-13"))?;
    Ok(format!("max deviation {worst:.1e} over 200 draws"))
}

fn trajectory_matches_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for case in FigureCase::ALL {
        let p = case.polynomial();
        let form = case.form();
        for _ in 0..20 {
            let lambda = random_lambda(&mut rng, 0.2, 5.0);
            let traj = xyz_trajectory(&form, lambda, 12).map_err(|e| e.to_string())?;
            let table = solve_alpha(&p, lambda, 12).map_err(|e| e.to_string())?;
            let sums = level_sums(&table);
            let xs = traj.x();
            for n in 0..=12 {
                let a = sums.values[n];
                let rel = (xs[n] - a).abs() / a.abs().max(f64::MIN_POSITIVE);
                ensure(rel <= 1e-10, || format!("case {case}, lambda {lambda}, n {n}: x = {} vs a = {a}", xs[n]))?;
                worst = worst.max(rel);
            }
        }
    }
    Ok(format!("x_n = a_n for n <= 12, 4 cases x 20 points, max rel. error {worst:.1e}"))
}

fn disk_degeneration() -> Outcome {
    let zero = C64::new(0.0, 0.0);
    let form = QuadraticForm::new([[zero; 2]; 2], [C64::new(3.0, 0.0), C64::new(4.0, 0.0)], zero);
    let grid = GridSpec::square(6.0, 201).map_err(|e| e.to_string())?;
    let (mut checked, mut in_band) = (0, 0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = grid.point(i, j);
            let v = quadratic::membership(&form, z, Method::Auto).verdict;
            if z.norm_sqr() > 0.0 && (25.0 / z.norm_sqr() - 1.0).abs() <= 1e-6 {
                in_band += 1;
                continue;
            }
            let expect = if z.norm() <= 5.0 { Verdict::Spectrum } else { Verdict::Resolvent };
            ensure(v == expect, || format!("lambda {z}: got {v:?}, expected {expect:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} nodes match the disk |lambda| <= 5 exactly ({in_band} in the band)"))
}

fn match_distance(closed: &[C64], numeric: &[C64]) -> f64 {
    let mut used = vec![false; numeric.len()];
    let mut worst = 0.0f64;
    for z in closed {
        let (j, d) = numeric
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn walk_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut radius_err, mut eig_err, mut poly_err) = (0.0f64, 0.0f64, 0.0f64);
    for k in [1usize, 2, 3, 5, 8] {
        let spec = WalkSpec::new(k, 1.0).unwrap();
        let mut done = 0;
        while done < 100 {
            let lambda = random_lambda(&mut rng, 0.05, 3.0);
            if (lambda.norm() - 1.0).abs() < 1e-3 {
                continue;
            }
            done += 1;
            let m = walk_m(spec, lambda);
            let r = walk_m_radius_closed(spec, lambda);
            radius_err = radius_err.max((spectral_radius(&m).map_err(|e| e.to_string())? - r).abs() / r);
            let num = eigenvalues(&m).map_err(|e| e.to_string())?.eigenvalues;
            let closed = walk_m_eigs_closed(spec, lambda);
            eig_err = eig_err.max(match_distance(&closed, &num) / r);
            for x in closed {
                let (v, scale) = walk_charpoly(spec, lambda, x);
                poly_err = poly_err.max(v.norm() / scale.max(1.0));
            }
        }
    }
    ensure(radius_err <= 1e-8, || format!("radius error {radius_err:.2e}"))?;
    ensure(eig_err <= 1e-8, || format!("eigenvalue error {eig_err:.2e}"))?;
    ensure(poly_err <= 1e-8, || format!("char-poly residual {poly_err:.2e}"))?;
    Ok(format!(
        "radius {radius_err:.1e}, eigenvalues {eig_err:.1e}, char-poly {poly_err:.1e} (relative, 5 k x 100 points)"
    ))
}

fn walk_matches_oracle() -> Outcome {
    let grid = GridSpec::new(-1.5, 3.5, -2.5, 2.5, 101, 101).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for k in [1usize, 2, 3] {
        for t in [0.5, 1.0] {
            let spec = WalkSpec::new(k, t).unwrap();
            let p = families::walk_polynomial(spec).map_err(|e| e.to_string())?;
            let t2 = t * t;
            let (mut agree, mut uncertain, mut excluded) = (0usize, 0usize, 0usize);
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let z = grid.point(i, j);
                    let g = families::walk_g(spec, z);
                    if (g - t2).abs() <= 0.05 * t2 {
                        excluded += 1;
                        continue;
                    }
                    let closed = families::walk_membership(spec, z).verdict;
                    let oracle = membership_oracle_with_budget(&p, z, 60, DEFAULT_WINDOW, DEFAULT_MARGIN, 5_000_000)
                        .map_err(|e| e.to_string())?;
                    if !oracle.is_conclusive() {
                        uncertain += 1;
                        continue;
                    }
                    ensure(oracle.verdict == closed, || {
                        format!("k {k}, t {t}, lambda {z}: oracle {:?}, closed form {closed:?}", oracle.verdict)
                    })?;
                    agree += 1;
                }
            }
            report.push(format!("k{k}/t{t}: {agree} agree, {uncertain} uncertain, {excluded} near boundary"));
        }
    }
    Ok(format!("100% agreement on conclusive points; {}", report.join("; ")))
}

/// `C_{n+1} = sum_i C_i C_{n-i}`.
fn catalan(n_max: usize) -> Vec<f64> {
    let mut c = vec![1.0f64];
    for n in 0..n_max {
        c.push((0..=n).map(|i| c[i] * c[n - i]).sum());
    }
    c
}

fn catalan_moments() -> Outcome {
    let s1 = NCPolynomial::parse("s1", 1, VariableKind::Semicircular).unwrap();
    let cat = catalan(10);
    let mut worst = 0.0f64;
    for m in 0..=21u32 {
        let tau = trace(&s1.pow(m).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if m % 2 == 1 {
            ensure(tau == C64::new(0.0, 0.0), || format!("tau(s1^{m}) = {tau}, expected exactly 0"))?;
        } else {
            let c = cat[m as usize / 2];
            let rel = (tau - c).norm() / c;
            ensure(rel <= 1e-9, || format!("tau(s1^{m}) = {tau}, Catalan {c}"))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("tau(s1^2n) = C_n for n <= 10 (max rel. error {worst:.1e}), odd moments exactly 0"))
}

fn radius_estimator() -> Outcome {
    let s1 = NCPolynomial::parse("s1", 1, VariableKind::Semicircular).unwrap();
    let est = spectral_radius_estimate(&s1, 24, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let row = est.rows.last().ok_or("no rows")?;
    ensure(row.n == 24, || format!("stopped at n = {}", row.n))?;
    // ||s1^24||_2^2 = tau(s1^48) = C_24
    let c24 = catalan(24)[24];
    let lower = c24.powf(1.0 / 48.0);
    let upper = (25f64.powf(1.5) * c24.sqrt()).powf(1.0 / 24.0);
    ensure((row.lower - lower).abs() <= 0.01 * lower, || format!("lower {} vs oracle {lower}", row.lower))?;
    ensure((row.upper - upper).abs() <= 0.01 * upper, || format!("upper {} vs oracle {upper}", row.upper))?;
    ensure((row.lower - 1.787).abs() <= 0.01 * 1.787, || format!("lower {} vs 1.787", row.lower))?;
    ensure((row.upper - 2.186).abs() <= 0.01 * 2.186, || format!("upper {} vs 2.186", row.upper))?;
    ensure(row.lower < 2.0 && 2.0 < row.upper, || "estimates do not bracket 2".into())?;
    let c1 = circ("c1", 1);
    let est_c = spectral_radius_estimate(&c1, 24, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    for r in &est_c.rows {
        ensure((r.lower - 1.0).abs() <= 1e-12, || format!("c1: lower_{} = {}", r.n, r.lower))?;
    }
    Ok(format!(
        "s1, n = 24: lower {:.4} (oracle {lower:.4}), upper {:.4} (oracle {upper:.4}); c1: lower_n = 1 for n <= 24",
        row.lower, row.upper
    ))
}

fn cross_method_agreement() -> Outcome {
    let mut report = Vec::new();
    for case in FigureCase::ALL {
        let form = case.form();
        ensure(equivalence_conditions(&form).radius_test_valid, || format!("case {case}: radius test not valid"))?;
        let grid = case.window(301);
        let limit = quadratic_raster(&form, grid, Method::Limit);
        let radius = quadratic_raster(&form, grid, Method::Radius);
        let (mut n, mut agree) = (0usize, 0usize);
        for k in 0..grid.len() {
            if (radius.values[k] - 1.0).abs() > 0.01 {
                n += 1;
                if limit.verdicts[k] == radius.verdicts[k] {
                    agree += 1;
                }
            }
        }
        let rate = agree as f64 / n as f64;
        ensure(rate >= 0.999, || format!("case {case}: agreement {rate:.5}"))?;
        report.push(format!("{case} {agree}/{n}"));
    }
    Ok(format!("limit vs radius agreement: {}", report.join(", ")))
}

fn figure_reproduction() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for case in FigureCase::ALL {
        let start = Instant::now();
        let svg = dir.join(format!("figure1_{case}.svg"));
        let out = Command::new(env!("CARGO_BIN_EXE_freespec"))
            .args(["figure1", "--case", &case.to_string(), "--n", "500", "--seed", "7", "--out"])
            .arg(&svg)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("case {case}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
        })?;
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(15 * 60), || format!("case {case} took {elapsed:?}"))?;
        let meta: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let comp = &meta["zero_component"];
        ensure(!comp.is_null(), || format!("case {case}: lambda = 0 is not in the spectrum raster"))?;
        ensure(comp["touches_border"] == false, || format!("case {case}: spectrum reaches the window edge"))?;
        ensure(meta["summary"]["spectrum_nodes"].as_u64().unwrap_or(0) > 0, || format!("case {case}: empty"))?;
        let frac = meta["containment"]["fraction"].as_f64().ok_or("missing containment")?;
        ensure(frac >= 0.98, || format!("case {case}: containment {frac}"))?;
        ensure(svg.exists() && svg.with_extension("meta.json").exists(), || "missing artifacts".into())?;
        report.push(format!("{case}: containment {frac:.3}, {} nodes, {:.1} s", comp["nodes"], elapsed.as_secs_f64()));
    }
    Ok(report.join("; "))
}

fn marching_squares() -> Outcome {
    let grid = GridSpec::square(2.0, 401).map_err(|e| e.to_string())?;
    let raster = scan(|z| z.norm() - 1.0, grid, 0.0, 0.0);
    ensure(raster.boundary.len() == 1, || format!("{} polylines", raster.boundary.len()))?;
    let line = &raster.boundary[0];
    ensure(line.closed, || "polyline is open".into())?;
    let worst = line.points.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    ensure(worst < grid.dx(), || format!("max deviation {worst} >= cell {}", grid.dx()))?;
    Ok(format!("one closed polyline, {} vertices, max ||v| - 1| = {worst:.1e} (cell {})", line.points.len(), grid.dx()))
}

fn homogeneous_oracle() -> Outcome {
    let p = circ("c1", 1);
    let inside = membership_oracle(&p, C64::new(0.8, 0.0), 60, DEFAULT_WINDOW, DEFAULT_MARGIN).map_err(|e| e.to_string())?;
    let outside = membership_oracle(&p, C64::new(1.2, 0.0), 60, DEFAULT_WINDOW, DEFAULT_MARGIN).map_err(|e| e.to_string())?;
    ensure(inside.verdict == Verdict::Spectrum, || format!("0.8: {:?}", inside.verdict))?;
    ensure(outside.verdict == Verdict::Resolvent, || format!("1.2: {:?}", outside.verdict))?;
    let at2 = membership_oracle(&p, C64::new(2.0, 0.0), 60, DEFAULT_WINDOW, DEFAULT_MARGIN).map_err(|e| e.to_string())?;
    let norm = at2.diagnostics.resolvent_norm_sq.ok_or("no partial sum")?;
    ensure((norm - 1.0 / 3.0).abs() <= 0.01 / 3.0, || format!("partial sum {norm}"))?;
    Ok(format!(
        "0.8 -> spectrum ({} levels), 1.2 -> resolvent ({} levels), ||(2 - c1)^-1||_2^2 ~ {norm:.6}",
        inside.diagnostics.levels.unwrap_or(0),
        outside.diagnostics.levels.unwrap_or(0)
    ))
}

#[test]
fn acceptance_criteria() {
    let checks: [(&str, u64, fn() -> Outcome); 12] = [
        ("determinant identity", 1, determinant_identity),
        ("initial-state identity", 1, initial_state_identity),
        ("trajectory/oracle equivalence", 30, trajectory_matches_oracle),
        ("quadratic to disk degeneration", 10, disk_degeneration),
        ("walk closed forms", 5, walk_closed_forms),
        ("walk/oracle agreement", 300, walk_matches_oracle),
        ("Catalan moments", 10, catalan_moments),
        ("spectral-radius estimator", 60, radius_estimator),
        ("cross-method quadratic agreement", 600, cross_method_agreement),
        ("figure reproduction", 4 * 15 * 60, figure_reproduction),
        ("marching squares", 5, marching_squares),
        ("homogeneous oracle", 5, homogeneous_oracle),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (k, (name, limit, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(detail) if secs > *limit as f64 => Err(format!("took {secs:.1} s, limit {limit} s ({detail})")),
            other => other,
        };
        let line = match &outcome {
            Ok(detail) => format!("PASS [{:>2}] {name}: {detail} [{secs:.2} s / {limit} s]", k + 1),
            Err(why) => format!("FAIL [{:>2}] {name}: {why} [{secs:.2} s / {limit} s]", k + 1),
        };
        // Written to the raw handle so it shows even when output is captured.
        let _ = writeln!(err, "{line}");
        if outcome.is_err() {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
