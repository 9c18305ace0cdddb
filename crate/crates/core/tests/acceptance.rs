//! Acceptance suite: one PASS/FAIL line per criterion, every tolerance pinned
//! below. Runs without the libtest harness so the lines always show.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use plurilab::abp::{abp_quantities, poisson_rhs, AbpReport};
use plurilab::calculus::{complex_hessian, laplacian};
use plurilab::catalog::{
    catalog_entries, catalog_entry, catalog_params, check_entry, scenario_entry,
};
use plurilab::cli::{execute, main_with_args, render_report, Command, RunConfig};
use plurilab::envelope::{
    build_obstacle, convex_envelope_iterative, convex_envelope_lp, default_max_iter,
    EnvelopeSolution, Obstacle, Stencil,
};
use plurilab::geometry::{sample, ComplexPoint, GridDomain, NodeClass};
use plurilab::pipeline::{
    build_v_delta, counterexample_scenario, run_extension, Conclusion, PipelineParams, Scenario,
};
use plurilab::viscosity::{certify_psh, certify_subharmonic};
use plurilab::{Function, SingularSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CALCULUS_REL_TOL: f64 = 1e-10;
const TRACE_REL_TOL: f64 = 1e-10;
const TRACE_FIELDS: usize = 100;
const ENVELOPE_TOL: f64 = 1e-12;
/// Frozen envelope-vs-LP constant: `|gamma - lp| <= C0 (h + tol)`.
const C0: f64 = 0.05;
const INVARIANT_TOL: f64 = 1e-9;
const LOWER_BOUND_TOL: f64 = 1e-10;
const TRIVIAL_EQUALITY_TOL: f64 = 1e-12;
/// Frozen ABP constants per complex dimension, measured at 17 points per axis.
const C_FROZEN: [(usize, f64); 2] = [(1, 0.17), (2, 0.09)];
const C_REFINEMENT_FACTOR: f64 = 2.0;
const ABP_DELTAS: [f64; 3] = [0.05, 0.1, 0.2];
const TRIVIAL_CONTACT_FRACTION: f64 = 0.01;
const FINAL_BOUND_TOL: f64 = 0.05;
const SEED: u64 = 42;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn grid(n: usize, center: ComplexPoint, delta: f64, ppa: usize) -> Result<GridDomain, String> {
    ok(GridDomain::new(n, center, delta, ppa))
}

fn interior(d: &GridDomain) -> impl Iterator<Item = usize> + '_ {
    (0..d.node_count()).filter(|&nd| d.cells_from_boundary(nd) >= 1)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn c1_calculus() -> Check {
    let mut worst: f64 = 0.0;
    let cases = [("norm-squared", 1), ("norm-squared", 2), ("sh-not-psh", 2)];
    for (name, n) in cases {
        let e = catalog_entry(name).ok_or("missing entry")?;
        let center = ComplexPoint::new((0..2 * n).map(|i| 0.1 * (i as f64 + 1.0)).collect())
            .map_err(|e| e.to_string())?;
        let d = grid(n, center, 0.25, 9)?;
        let f = ok(sample(&e.function(), &d))?;
        let diag: Vec<f64> = match name {
            "norm-squared" => vec![1.0; n],
            _ => vec![1.0, -1.0],
        };
        let lap_exact = 4.0 * diag.iter().sum::<f64>();
        for nd in interior(&d) {
            worst = worst.max(rel(ok(laplacian(&f, nd))?, lap_exact));
            let hs = ok(complex_hessian(&f, nd))?;
            for (j, dj) in diag.iter().enumerate() {
                for k in 0..n {
                    let exact = if j == k { *dj } else { 0.0 };
                    let got = hs.get(j, k);
                    worst = worst.max(rel(got.re, exact)).max(rel(got.im, 0.0));
                }
            }
        }
    }
    ensure(worst <= CALCULUS_REL_TOL, || {
        format!("relative error {worst:.2e}")
    })?;
    Ok(format!("max relative error {worst:.2e}"))
}

fn random_polynomial(rng: &mut ChaCha8Rng, n: usize) -> String {
    let names: Vec<String> = (1..=n)
        .flat_map(|j| [format!("x{j}"), format!("y{j}")])
        .collect();
    let mut terms = vec![format!("{:.6}", rng.gen_range(-1.0..1.0))];
    for _ in 0..rng.gen_range(3..8) {
        let mut t = format!("({:.6})", rng.gen_range(-2.0..2.0));
        for _ in 0..rng.gen_range(1..=3) {
            t.push('*');
            t.push_str(&names[rng.gen_range(0..names.len())]);
        }
        terms.push(t);
    }
    terms.join(" + ")
}

fn c2_trace_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for i in 0..TRACE_FIELDS {
        let n = 1 + i % 2;
        let text = random_polynomial(&mut rng, n);
        let f = ok(Function::parse(&text))?;
        let d = grid(n, ComplexPoint::origin(n), 0.3, 7)?;
        let field = ok(sample(&f, &d))?;
        for nd in interior(&d) {
            let lap = ok(laplacian(&field, nd))?;
            let tr = ok(complex_hessian(&field, nd))?.trace();
            worst = worst.max(rel(4.0 * tr, lap));
        }
    }
    ensure(worst <= TRACE_REL_TOL, || {
        format!("relative error {worst:.2e}")
    })?;
    Ok(format!(
        "{TRACE_FIELDS} fields, max relative error {worst:.2e}"
    ))
}

fn c3_catalog() -> Check {
    let mut count = 0;
    for e in catalog_entries() {
        let out = ok(check_entry(&e, 2, 17, SEED))?;
        ensure(out.matches, || {
            format!("{} does not match its expected verdicts", e.name)
        })?;
        count += 1;
    }
    let intro = ok(check_entry(
        &catalog_entry("intro-counterexample").ok_or("missing")?,
        2,
        17,
        SEED,
    ))?;
    let h = ok(catalog_entry("intro-counterexample")
        .ok_or("missing")?
        .grid(2, 17))?
    .h();
    let w = intro
        .subharmonic
        .witnesses
        .first()
        .ok_or("intro has no witness")?;
    let dist = (w.point.norm_squared().sqrt() - 1.0).abs();
    ensure(dist <= 2.0 * h, || {
        format!("intro witness is {dist} from the sphere")
    })?;
    ensure((intro.margin - 2.0 * h).abs() < 1e-15, || {
        "intro margin is not 2h".into()
    })?;
    let abs = ok(check_entry(
        &catalog_entry("abs-re-z1").ok_or("missing")?,
        2,
        17,
        SEED,
    ))?;
    ensure(
        abs.subharmonic.status == plurilab::viscosity::Status::Pass
            && abs.psh.status == plurilab::viscosity::Status::Pass,
        || "abs-re-z1 should pass everywhere".into(),
    )?;
    Ok(format!(
        "{count} entries match; intro witness {dist:.4} from the sphere (2h = {:.4})",
        2.0 * h
    ))
}

fn solve(o: &Obstacle) -> Result<EnvelopeSolution, String> {
    let d = o.domain();
    ok(convex_envelope_iterative(
        o,
        &Stencil::with_diagonals(d.real_dim()),
        ENVELOPE_TOL,
        default_max_iter(d),
    ))
}

fn double_well(ppa: usize) -> Result<Obstacle, String> {
    let d = grid(1, ComplexPoint::origin(1), 1.0, ppa)?;
    let f = ok(sample(&ok(Function::parse("(x1^2 - 1)^2"))?, &d))?;
    ok(Obstacle::from_values(&d, f.values()))
}

fn scenario(name: &str, n: usize) -> Result<Scenario, String> {
    Ok(scenario_entry(name, n)
        .ok_or_else(|| format!("missing scenario {name}"))?
        .scenario)
}

fn scenario_obstacle(
    s: &Scenario,
    delta: f64,
    ppa: usize,
) -> Result<(ScenarioGrid, Obstacle), String> {
    let d = grid(s.n, s.z0.clone(), delta, ppa)?;
    let v = ok(build_v_delta(s, delta, &d))?;
    let o = ok(build_obstacle(&v, &d))?;
    Ok((ScenarioGrid { domain: d, v }, o))
}

struct ScenarioGrid {
    domain: GridDomain,
    v: plurilab::ScalarField,
}

fn check_invariants(o: &Obstacle, s: &EnvelopeSolution) -> Result<(), String> {
    let d = o.domain();
    let stencil = Stencil::with_diagonals(d.real_dim());
    let ppa = d.points_per_axis() as i64;
    for (i, &nd) in o.nodes().iter().enumerate() {
        ensure(s.gamma[i] <= o.values()[i] + INVARIANT_TOL, || {
            format!("gamma above w at node {nd}")
        })?;
        if !o.is_inner(i) {
            continue;
        }
        let idx = d.multi_index(nd);
        'dirs: for e in stencil.directions() {
            let mut ends = [0usize; 2];
            for (k, sign) in [1i64, -1].into_iter().enumerate() {
                let mut j = Vec::with_capacity(idx.len());
                for (a, &b) in idx.iter().zip(e) {
                    let c = *a as i64 + sign * b;
                    if c < 0 || c >= ppa {
                        continue 'dirs;
                    }
                    j.push(c as usize);
                }
                match o.index_of(d.flat_index(&j)) {
                    Some(t) => ends[k] = t,
                    None => continue 'dirs,
                }
            }
            let avg = 0.5 * (s.gamma[ends[0]] + s.gamma[ends[1]]);
            ensure(s.gamma[i] <= avg + INVARIANT_TOL, || {
                format!("midpoint convexity fails at node {nd}")
            })?;
        }
    }
    let bumped: Vec<f64> = o
        .values()
        .iter()
        .enumerate()
        .map(|(i, w)| w + 1e-3 * (i % 5) as f64)
        .collect();
    let s2 = solve(&ok(o.with_values(bumped))?)?;
    for (a, b) in s.gamma.iter().zip(&s2.gamma) {
        ensure(*a <= b + INVARIANT_TOL, || "monotonicity fails".into())?;
    }
    let again = solve(&ok(o.with_values(s.gamma.clone()))?)?;
    for (a, b) in again.gamma.iter().zip(&s.gamma) {
        ensure((a - b).abs() <= INVARIANT_TOL, || {
            "idempotence fails".into()
        })?;
    }
    Ok(())
}

fn c4_envelope() -> Check {
    let mut worst: f64 = 0.0;
    for ppa in [17, 33] {
        let (_, trivial) = scenario_obstacle(&scenario("trivial", 1)?, 0.2, ppa)?;
        for o in [trivial, double_well(ppa)?] {
            let s = solve(&o)?;
            let h = o.domain().h();
            for (i, &nd) in o.nodes().iter().enumerate() {
                if !o.is_inner(i) {
                    continue;
                }
                let lp = ok(convex_envelope_lp(&o, nd))?;
                worst = worst.max((s.gamma[i] - lp).abs() / (h + ENVELOPE_TOL));
            }
        }
    }
    ensure(worst <= C0, || {
        format!("gap / (h + tol) = {worst:.4} exceeds C0 = {C0}")
    })?;
    let names = [
        "trivial",
        "smooth-psh",
        "smooth-psh-cantor",
        "negative-control",
        "precondition-violation",
    ];
    let mut runs = 0;
    for n in [1, 2] {
        for name in names {
            let (_, o) = scenario_obstacle(&scenario(name, n)?, 0.1, 17)?;
            let s = solve(&o)?;
            check_invariants(&o, &s).map_err(|e| format!("{name}, n = {n}: {e}"))?;
            runs += 1;
        }
    }
    Ok(format!(
        "max gap / (h + tol) = {worst:.4} (C0 = {C0}); invariants hold on {runs} runs"
    ))
}

struct Sweep {
    reports: Vec<AbpReport>,
    inner: Vec<usize>,
}

fn abp_sweep(s: &Scenario, ppa: usize) -> Result<Sweep, String> {
    let mut sweep = Sweep {
        reports: Vec::new(),
        inner: Vec::new(),
    };
    for delta in ABP_DELTAS {
        let (g, o) = scenario_obstacle(s, delta, ppa)?;
        let sol = solve(&o)?;
        let phi = ok(sample(&s.phi, &g.domain))?;
        let f = ok(poisson_rhs(&phi, delta, s.n))?;
        sweep
            .reports
            .push(ok(abp_quantities(&g.v, &o, &sol, &f, delta))?);
        sweep.inner.push(
            (0..g.domain.node_count())
                .filter(|&nd| g.domain.classify(nd) == NodeClass::Inner)
                .count(),
        );
    }
    Ok(sweep)
}

const VALID: [&str; 3] = ["trivial", "smooth-psh", "smooth-psh-cantor"];

fn c5_abp() -> Check {
    let mut summary = Vec::new();
    for (n, c_frozen) in C_FROZEN {
        let mut coarse: f64 = 0.0;
        let mut fine: f64 = 0.0;
        for name in VALID {
            let s = scenario(name, n)?;
            for r in abp_sweep(&s, 17)?.reports {
                ensure(r.sup_abs >= r.delta.powi(3) - LOWER_BOUND_TOL, || {
                    format!("{name}: lower bound fails")
                })?;
                if name == "trivial" {
                    ensure(
                        (r.sup_abs - r.delta.powi(3)).abs() <= TRIVIAL_EQUALITY_TOL,
                        || "trivial: no equality".into(),
                    )?;
                }
                ensure(r.sup_abs <= c_frozen * r.delta * r.contact_integral, || {
                    format!(
                        "{name}, n = {n}, delta = {}: implied C {:?} above {c_frozen}",
                        r.delta, r.implied_c
                    )
                })?;
                coarse = coarse.max(r.implied_c.unwrap_or(0.0));
            }
            for r in abp_sweep(&s, 25)?.reports {
                fine = fine.max(r.implied_c.unwrap_or(0.0));
            }
        }
        ensure(
            fine <= C_REFINEMENT_FACTOR * c_frozen && fine >= c_frozen / C_REFINEMENT_FACTOR,
            || format!("n = {n}: refined constant {fine:.4} not within a factor 2 of {c_frozen}"),
        )?;
        summary.push(format!(
            "n={n}: C17 {coarse:.4}, C25 {fine:.4}, frozen {c_frozen}"
        ));
    }
    Ok(summary.join("; "))
}

fn c6_contact() -> Check {
    let mut min_trivial = f64::INFINITY;
    let mut runs = 0;
    for n in [1, 2] {
        for name in VALID {
            let sweep = abp_sweep(&scenario(name, n)?, 17)?;
            for (r, inner) in sweep.reports.iter().zip(&sweep.inner) {
                ensure(r.contact_count >= 1, || {
                    format!("{name}: empty contact set at delta {}", r.delta)
                })?;
                if name == "trivial" {
                    min_trivial = min_trivial.min(r.contact_count as f64 / *inner as f64);
                }
                runs += 1;
            }
        }
    }
    for name in ["smooth-psh", "smooth-psh-cantor"] {
        let report = ok(run_extension(
            &scenario(name, 2)?,
            &PipelineParams::default(),
        ))?;
        for d in &report.deltas {
            let count = d.abp.as_ref().map_or(0, |a| a.contact_count);
            ensure(count >= 1, || {
                format!("{name}: pipeline contact set empty at delta {}", d.delta)
            })?;
            runs += 1;
        }
    }
    ensure(min_trivial >= TRIVIAL_CONTACT_FRACTION, || {
        format!("trivial contact fraction {min_trivial}")
    })?;
    Ok(format!(
        "{runs} runs with nonempty contact; trivial contact fraction >= {min_trivial:.3}"
    ))
}

fn c7_pipeline() -> Check {
    let mut lines = Vec::new();
    for name in ["smooth-psh", "smooth-psh-cantor"] {
        let s = scenario(name, 2)?;
        let params = PipelineParams::default();
        ensure(
            params.deltas == vec![0.2, 0.1, 0.05] && params.points_per_axis == 17,
            || "defaults moved".into(),
        )?;
        let r = ok(run_extension(&s, &params))?;
        ensure(r.conclusion == Conclusion::Certified, || {
            format!("{name}: {:?} {:?}", r.conclusion, r.reasons)
        })?;
        for d in &r.deltas {
            let hb = d.hessian.as_ref().ok_or("missing Hessian bound")?;
            let v = d.hessian_form_min.ok_or("missing hessian_form_min")?;
            ensure(v >= -d.delta - hb.tolerance, || {
                format!("{name}: hessian_form_min {v} at delta {}", d.delta)
            })?;
        }
        let b = r.extrapolated_bound.ok_or("no extrapolated bound")?;
        ensure((b - 1.0).abs() <= FINAL_BOUND_TOL, || {
            format!("{name}: extrapolated bound {b}")
        })?;
        ensure(r.trend_ok, || {
            format!("{name}: contact points do not approach z0")
        })?;
        lines.push(format!("{name} extrapolated {b:.4}"));
    }
    Ok(format!("Certified; {}", lines.join(", ")))
}

fn c8_guard() -> Check {
    let s = ok(counterexample_scenario(2))?;
    let r = ok(run_extension(&s, &PipelineParams::default()))?;
    ensure(r.conclusion == Conclusion::PreconditionViolated, || {
        format!("conclusion {:?}", r.conclusion)
    })?;
    ensure(r.conclusion.exit_code() == 2, || {
        "exit code is not 2".into()
    })?;
    let dir = ok(tempfile::tempdir())?;
    let out = dir.path().join("demo.json");
    let code = main_with_args([
        "plurilab",
        "demo-counterexample",
        "--out-json",
        out.to_str().ok_or("path")?,
    ]);
    ensure(code == 2, || {
        format!("demo-counterexample exited with {code}")
    })?;
    let json: serde_json::Value = ok(serde_json::from_str(&ok(std::fs::read_to_string(&out))?))?;
    let verdict = &json["result"]["pipeline"]["conclusion"];
    ensure(verdict == "PreconditionViolated", || {
        format!("report says {verdict}")
    })?;
    Ok("PreconditionViolated, exit code 2".into())
}

fn c9_dimension_one() -> Check {
    let entries: Vec<_> = catalog_entries()
        .into_iter()
        .filter(|e| e.min_n == 1)
        .take(10)
        .collect();
    ensure(entries.len() == 10, || {
        "fewer than 10 entries in dimension 1".into()
    })?;
    for e in &entries {
        let d = ok(e.grid(1, 17))?;
        let f = ok(sample(&e.function(), &d))?;
        let params = catalog_params(&d, SEED);
        let sh = ok(certify_subharmonic(&f, &params))?;
        let psh = ok(certify_psh(&f, &SingularSet::Empty, 0.0, &params))?;
        ensure(sh.status == psh.status, || {
            format!("{}: {:?} vs {:?}", e.name, sh.status, psh.status)
        })?;
    }
    Ok("10 functions, identical verdicts".into())
}

fn extend_report() -> Result<String, String> {
    let mut c = RunConfig::new(Command::Extend);
    c.target = Some("smooth-psh".into());
    c.grid.n = Some(2);
    c.seed = Some(SEED);
    let start = Instant::now();
    let out = ok(execute(&c))?;
    let text = ok(render_report(&c, &out, start.elapsed().as_secs_f64() * 1e3))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timing_ms\""))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn c10_determinism() -> Check {
    let a = extend_report()?;
    let b = extend_report()?;
    ensure(a == b, || "reports differ".into())?;
    Ok(format!(
        "identical reports ({} bytes without timing)",
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("calculus exactness", c1_calculus),
        ("trace identity", c2_trace_identity),
        ("certifier classification", c3_catalog),
        ("envelope vs oracle", c4_envelope),
        ("ABP bounds", c5_abp),
        ("contact set positivity", c6_contact),
        ("full pipeline", c7_pipeline),
        ("precondition guard", c8_guard),
        ("dimension-1 degeneracy", c9_dimension_one),
        ("determinism", c10_determinism),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of 10 passed in {:.1} s",
        10 - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
