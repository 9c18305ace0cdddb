use plurilab::abp::{abp_quantities, poisson_rhs, AbpReport};
use plurilab::catalog::scenario_entry;
use plurilab::envelope::{build_obstacle, convex_envelope_iterative, default_max_iter, Stencil};
use plurilab::geometry::{sample, GridDomain};
use plurilab::pipeline::build_v_delta;

const DELTAS: [f64; 3] = [0.05, 0.1, 0.2];
/// Band for `implied_c / delta` across the sweep and both resolutions.
const BAND: f64 = 0.5;

fn sweep(n: usize, ppa: usize) -> Vec<AbpReport> {
    let s = scenario_entry("smooth-psh", n).unwrap().scenario;
    DELTAS
        .iter()
        .map(|&delta| {
            let d = GridDomain::new(n, s.z0.clone(), delta, ppa).unwrap();
            let v = build_v_delta(&s, delta, &d).unwrap();
            let o = build_obstacle(&v, &d).unwrap();
            let st = Stencil::with_diagonals(d.real_dim());
            let sol = convex_envelope_iterative(&o, &st, 1e-12, default_max_iter(&d)).unwrap();
            let f = poisson_rhs(&sample(&s.phi, &d).unwrap(), delta, n).unwrap();
            abp_quantities(&v, &o, &sol, &f, delta).unwrap()
        })
        .collect()
}

#[test]
fn implied_constant_scales_with_delta() {
    for n in [1, 2] {
        let reports: Vec<AbpReport> = [17, 25].into_iter().flat_map(|ppa| sweep(n, ppa)).collect();
        let raw: Vec<f64> = reports.iter().map(|r| r.implied_c.unwrap()).collect();
        let scaled: Vec<f64> = reports.iter().map(|r| r.implied_c.unwrap() / r.delta).collect();
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        for s in &scaled {
            assert!((s - mean).abs() <= BAND * mean, "n = {n}: {scaled:?}");
        }
        // the unscaled ratio grows with delta, so it is not a fixed band
        let (lo, hi) = raw.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
        assert!(hi / lo > 1.0 + BAND, "n = {n}: {raw:?}");
    }
}
