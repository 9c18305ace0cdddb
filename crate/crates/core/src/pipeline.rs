//! End-to-end run of the extension argument for one scenario: guard, then
//! per delta the perturbed function, its envelope, a contact point off the
//! singular set, the circle-mean chain, and the Hessian bound; finally the
//! delta -> 0 extrapolation.

use serde::{Deserialize, Serialize};

use crate::abp::{abp_quantities, poisson_rhs, AbpReport};
use crate::calculus::{
    circle_mean, complex_hessian, default_directions, min_eigenvalue, psd_tolerance,
};
use crate::envelope::{
    build_obstacle, contact_set, convex_envelope_iterative, default_max_iter, gamma_field,
    EnvelopeSolution, Obstacle, Stencil,
};
use crate::error::{Error, Result};
use crate::expr::Function;
use crate::geometry::{sample, ComplexPoint, GridDomain, NodeClass, ScalarField};
use crate::singular_sets::{grid_fraction_on_set, SingularSet};
use crate::viscosity::{certify_psh, certify_subharmonic, MeanValueParams, Status, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub n: usize,
    pub u: Function,
    pub phi: Function,
    pub z0: ComplexPoint,
    #[serde(default = "empty_set")]
    pub singular_set: SingularSet,
    pub delta0: f64,
}

fn empty_set() -> SingularSet {
    SingularSet::Empty
}

impl Scenario {
    /// Structural checks that do not need a grid.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config(
                "scenario dimension must be at least 1".into(),
            ));
        }
        if self.z0.dim() != self.n {
            return Err(Error::Config(format!(
                "z0 has dimension {} but the scenario has n = {}",
                self.z0.dim(),
                self.n
            )));
        }
        self.u.check_dimension(self.n)?;
        self.phi.check_dimension(self.n)?;
        if !(self.delta0 > 0.0) {
            return Err(Error::Config("delta0 must be positive".into()));
        }
        Ok(())
    }

    /// `phi + delta |z - z0|^2 - delta^3 - u`, as a closed form.
    pub fn v_delta_function(&self, delta: f64) -> Function {
        let bump = Function::distance_squared_to(self.z0.coords()).scale(delta);
        self.phi
            .add(&bump)
            .sub(&self.u)
            .add(&Function::constant(-delta.powi(3)))
    }
}

/// Outcome of the touching and majorant sweeps on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantCheck {
    pub touching_gap: f64,
    /// Minimum of `phi - u` over the grid nodes.
    pub min_gap: f64,
    pub min_node: usize,
    pub ok: bool,
}

pub fn check_majorant(
    scenario: &Scenario,
    domain: &GridDomain,
    tols: &Tolerances,
) -> MajorantCheck {
    let touching_gap =
        (scenario.phi.eval(scenario.z0.coords()) - scenario.u.eval(scenario.z0.coords())).abs();
    let mut p = vec![0.0; domain.real_dim()];
    let (mut min_gap, mut min_node) = (f64::INFINITY, 0);
    for node in 0..domain.node_count() {
        domain.coords_into(node, &mut p);
        let gap = scenario.phi.eval(&p) - scenario.u.eval(&p);
        if gap < min_gap || gap.is_nan() {
            min_gap = gap;
            min_node = node;
        }
    }
    MajorantCheck {
        touching_gap,
        min_gap,
        min_node,
        ok: touching_gap <= tols.touching && min_gap >= -tols.majorant,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub envelope: f64,
    /// Contact tolerance; the envelope's default when absent.
    pub contact: Option<f64>,
    /// Per-r^2 slack on the chain steps and on the per-delta bound.
    pub chain: f64,
    /// Multiplier in the finite-difference positivity tolerance.
    pub psd_c_h: f64,
    pub final_bound: f64,
    pub certifier: f64,
    pub touching: f64,
    pub majorant: f64,
    pub collar: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            envelope: 1e-12,
            contact: None,
            chain: 0.05,
            psd_c_h: 1.0,
            final_bound: 0.05,
            certifier: 0.01,
            touching: 1e-10,
            majorant: 1e-10,
            collar: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub deltas: Vec<f64>,
    pub points_per_axis: usize,
    /// Chain radii in units of the grid spacing.
    pub radii_h: Vec<f64>,
    /// Guard radii in units of the guard grid spacing.
    pub guard_radii_h: Vec<f64>,
    /// Explicit direction sample; the seeded default when absent.
    pub directions: Option<Vec<ComplexPoint>>,
    pub seed: u64,
    pub m: usize,
    /// Required distance from the singular set, in grid spacings.
    pub margin_h: f64,
    /// Exclusion margin of the guard's psh test, in guard grid spacings.
    pub guard_margin_h: f64,
    pub max_iter: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            deltas: vec![0.2, 0.1, 0.05],
            points_per_axis: 17,
            radii_h: vec![1.0, 2.0, 4.0],
            guard_radii_h: vec![1.0, 2.0],
            directions: None,
            seed: 42,
            m: 32,
            margin_h: 1.5,
            guard_margin_h: 2.0,
            max_iter: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl PipelineParams {
    fn validate(&self, scenario: &Scenario) -> Result<()> {
        if self.deltas.len() < 2 {
            return Err(Error::Config(
                "the delta sweep needs at least two values".into(),
            ));
        }
        for pair in self.deltas.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err(Error::Config("deltas must be strictly decreasing".into()));
            }
        }
        if let Some(&d) = self
            .deltas
            .iter()
            .find(|&&d| !(d > 0.0 && d < scenario.delta0 / 2.0))
        {
            return Err(Error::Config(format!(
                "delta {d} is outside (0, delta0/2) with delta0 = {}",
                scenario.delta0
            )));
        }
        if self.radii_h.is_empty() || self.radii_h.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config(
                "chain radii must be a nonempty list of positive values".into(),
            ));
        }
        if self.guard_radii_h.is_empty() || self.guard_radii_h.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config(
                "guard radii must be a nonempty list of positive values".into(),
            ));
        }
        if !(self.margin_h >= 0.0) || !(self.guard_margin_h >= 0.0) {
            return Err(Error::Config("margins must be nonnegative".into()));
        }
        if let Some(dirs) = &self.directions {
            if dirs.is_empty() || dirs.iter().any(|t| t.dim() != scenario.n) {
                return Err(Error::Config(format!(
                    "directions must be nonempty points of C^{}",
                    scenario.n
                )));
            }
        }
        Ok(())
    }

    pub fn direction_sample(&self, n: usize) -> Vec<ComplexPoint> {
        self.directions
            .clone()
            .unwrap_or_else(|| default_directions(n, self.seed))
    }
}

pub fn build_v_delta(scenario: &Scenario, delta: f64, domain: &GridDomain) -> Result<ScalarField> {
    sample(&scenario.v_delta_function(delta), domain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollarCheck {
    pub ok: bool,
    pub worst_node: Option<usize>,
    pub worst_value: f64,
}

/// `v >= -tol` on every collar node.
pub fn verify_collar_nonnegative(v_delta: &ScalarField, tol: f64) -> CollarCheck {
    let dom = v_delta.domain();
    let mut worst: Option<(usize, f64)> = None;
    for node in 0..dom.node_count() {
        if dom.classify(node) != NodeClass::Collar {
            continue;
        }
        let v = v_delta.value(node);
        if worst.is_none_or(|(_, w)| v < w) {
            worst = Some((node, v));
        }
    }
    let worst_value = worst.map_or(f64::INFINITY, |(_, v)| v);
    CollarCheck {
        ok: worst_value >= -tol,
        worst_node: worst.map(|(n, _)| n),
        worst_value,
    }
}

/// Contact node off `E` (with `margin`) nearest the grid center, ties by index.
pub fn pick_contact_point(
    obstacle: &Obstacle,
    solution: &EnvelopeSolution,
    set: &SingularSet,
    margin: f64,
) -> Result<usize> {
    let dom = obstacle.domain();
    let mut p = vec![0.0; dom.real_dim()];
    let mut any_contact = false;
    let mut best: Option<(i64, usize)> = None;
    for (i, &node) in obstacle.nodes().iter().enumerate() {
        if !solution.contact_mask[i] {
            continue;
        }
        any_contact = true;
        dom.coords_into(node, &mut p);
        if set.contains_coords(&p, margin) {
            continue;
        }
        let key = (dom.offset_norm2(node), node);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    match best {
        Some((_, node)) => Ok(node),
        None if !any_contact => Err(Error::Selection("the discrete contact set is empty".into())),
        None => Err(Error::Selection(format!(
            "every contact node lies within {margin} of the singular set \
             ({:.3}% of grid nodes are that close)",
            100.0 * grid_fraction_on_set(set, dom, margin)
        ))),
    }
}

/// One circle of the mean-value chain at the contact point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub r: f64,
    pub t_index: usize,
    /// `mean u - u(z)`.
    pub u_gap: f64,
    /// `mean Gamma - Gamma(z)`.
    pub gamma_gap: f64,
    /// `mean v - mean Gamma`.
    pub envelope_gap: f64,
    /// `v(z) - Gamma(z)`.
    pub contact_gap: f64,
    /// `(mean phi - phi(z)) / r^2`.
    pub phi_bound: f64,
    /// `|phi_bound - assembled chain value|`.
    pub identity_residual: f64,
    pub u_ok: bool,
    pub gamma_ok: bool,
    pub bound_ok: bool,
}

/// Fields used by the chain on one delta grid.
pub struct ChainInputs<'a> {
    pub u: &'a ScalarField,
    pub phi: &'a ScalarField,
    pub v: &'a ScalarField,
    pub gamma: &'a ScalarField,
}

/// Circle-mean chain around `node` for one `(r, T)`.
#[allow(clippy::too_many_arguments)]
pub fn chain_bound(
    fields: &ChainInputs<'_>,
    node: usize,
    delta: f64,
    r: f64,
    t: &ComplexPoint,
    t_index: usize,
    m: usize,
    tol: f64,
) -> Result<ChainRecord> {
    let dom = fields.v.domain();
    let z = dom.node_point(node);
    let r2 = r * r;
    let u_gap = circle_mean(fields.u, &z, r, t, m)? - fields.u.value(node);
    let gamma_mean = circle_mean(fields.gamma, &z, r, t, m)?;
    let gamma_gap = gamma_mean - fields.gamma.value(node);
    let envelope_gap = circle_mean(fields.v, &z, r, t, m)? - gamma_mean;
    let contact_gap = fields.v.value(node) - fields.gamma.value(node);
    let phi_bound = (circle_mean(fields.phi, &z, r, t, m)? - fields.phi.value(node)) / r2;
    let assembled = (u_gap + gamma_gap + envelope_gap - contact_gap) / r2 - delta;
    Ok(ChainRecord {
        r,
        t_index,
        u_gap,
        gamma_gap,
        envelope_gap,
        contact_gap,
        phi_bound,
        identity_residual: (phi_bound - assembled).abs(),
        u_ok: u_gap >= -tol * r2,
        gamma_ok: gamma_gap >= -tol * r2,
        bound_ok: phi_bound >= -delta - tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianBound {
    /// Minimum of the quadratic form over the direction sample.
    pub sample_min: f64,
    pub argmin: usize,
    /// Smallest eigenvalue, i.e. the minimum over all unit directions.
    pub eigen_min: f64,
    /// Finite-difference slack at this node.
    pub tolerance: f64,
}

pub fn hessian_form_min(
    phi: &ScalarField,
    node: usize,
    directions: &[ComplexPoint],
    psd_c_h: f64,
) -> Result<HessianBound> {
    if directions.is_empty() {
        return Err(Error::Argument("direction sample is empty".into()));
    }
    let h = complex_hessian(phi, node)?;
    let (argmin, sample_min) = directions
        .iter()
        .map(|t| h.quadratic_form(t))
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, q)| if q < acc.1 { (i, q) } else { acc },
        );
    Ok(HessianBound {
        sample_min,
        argmin,
        eigen_min: min_eigenvalue(&h),
        tolerance: psd_tolerance(phi, node, psd_c_h),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conclusion {
    Certified,
    PreconditionViolated,
    Inconclusive,
}

impl Conclusion {
    /// Process exit code for the command line.
    pub fn exit_code(self) -> i32 {
        match self {
            Conclusion::Certified => 0,
            Conclusion::PreconditionViolated | Conclusion::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardReport {
    pub delta: f64,
    pub h: f64,
    pub subharmonic: Verdict,
    pub psh_off_set: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub iterations: usize,
    pub final_residual: f64,
    pub contact_tol: f64,
    pub contact_count: usize,
    pub inner_count: usize,
    pub contact_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub delta: f64,
    pub h: f64,
    pub majorant: MajorantCheck,
    pub v_at_z0: f64,
    pub collar: CollarCheck,
    pub envelope: Option<EnvelopeSummary>,
    pub abp: Option<AbpReport>,
    pub z_delta: Option<ComplexPoint>,
    pub z_delta_node: Option<usize>,
    pub dist_to_z0: Option<f64>,
    pub dist_to_set: Option<f64>,
    pub chain: Vec<ChainRecord>,
    /// Radii left out because their circles would read outside the outer ball.
    pub skipped_radii: Vec<f64>,
    pub hessian: Option<HessianBound>,
    pub hessian_form_min: Option<f64>,
    pub bound_ok: bool,
    pub chain_ok: bool,
    pub failure: Option<String>,
}

impl DeltaRecord {
    fn new(delta: f64, h: f64, majorant: MajorantCheck) -> Self {
        Self {
            delta,
            h,
            majorant,
            v_at_z0: f64::NAN,
            collar: CollarCheck {
                ok: false,
                worst_node: None,
                worst_value: f64::NAN,
            },
            envelope: None,
            abp: None,
            z_delta: None,
            z_delta_node: None,
            dist_to_z0: None,
            dist_to_set: None,
            chain: Vec::new(),
            skipped_radii: Vec::new(),
            hessian: None,
            hessian_form_min: None,
            bound_ok: false,
            chain_ok: false,
            failure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    pub conclusion: Conclusion,
    pub reasons: Vec<String>,
    pub guard: Option<GuardReport>,
    pub deltas: Vec<DeltaRecord>,
    pub extrapolated_bound: Option<f64>,
    pub slope: Option<f64>,
    pub trend_ok: bool,
    /// Largest implied ABP constant over the sweep.
    pub abp_constant: Option<f64>,
}

/// Least-squares line through `(x, y)`: returns `(intercept, slope)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Argument(
            "a line fit needs at least two points".into(),
        ));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument(
            "a line fit needs two distinct abscissae".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Sub-mean-value tests on `u` over a grid around `z0` at the largest delta.
pub fn run_guard(scenario: &Scenario, params: &PipelineParams) -> Result<GuardReport> {
    let delta = params.deltas[0];
    let dom = GridDomain::new(
        scenario.n,
        scenario.z0.clone(),
        delta,
        params.points_per_axis,
    )?;
    let h = dom.h();
    let u = sample(&scenario.u, &dom)?;
    let mv = MeanValueParams {
        radii: params.guard_radii_h.iter().map(|c| c * h).collect(),
        directions: params.direction_sample(scenario.n),
        m: params.m,
        tol: params.tolerances.certifier,
    };
    Ok(GuardReport {
        delta,
        h,
        subharmonic: certify_subharmonic(&u, &mv)?,
        psh_off_set: certify_psh(&u, &scenario.singular_set, params.guard_margin_h * h, &mv)?,
    })
}

fn run_delta(
    scenario: &Scenario,
    params: &PipelineParams,
    directions: &[ComplexPoint],
    delta: f64,
) -> Result<DeltaRecord> {
    let tols = &params.tolerances;
    let dom = GridDomain::new(
        scenario.n,
        scenario.z0.clone(),
        delta,
        params.points_per_axis,
    )?;
    let h = dom.h();
    let mut rec = DeltaRecord::new(delta, h, check_majorant(scenario, &dom, tols));
    if !rec.majorant.ok {
        rec.failure = Some(format!(
            "phi is not a touching majorant of u (touching gap {:.3e}, min phi - u = {:.3e})",
            rec.majorant.touching_gap, rec.majorant.min_gap
        ));
        return Ok(rec);
    }
    let u = sample(&scenario.u, &dom)?;
    let phi = sample(&scenario.phi, &dom)?;
    let v = build_v_delta(scenario, delta, &dom)?;
    rec.v_at_z0 = v.value(dom.center_node());
    rec.collar = verify_collar_nonnegative(&v, tols.collar);
    if !rec.collar.ok {
        rec.failure = Some(format!(
            "v_delta is negative on the collar ({:.3e})",
            rec.collar.worst_value
        ));
        return Ok(rec);
    }

    let obstacle = build_obstacle(&v, &dom)?;
    let stencil = Stencil::with_diagonals(dom.real_dim());
    let max_iter = params.max_iter.unwrap_or_else(|| default_max_iter(&dom));
    let mut solution = match convex_envelope_iterative(&obstacle, &stencil, tols.envelope, max_iter)
    {
        Ok(s) => s,
        Err(e @ Error::Convergence { .. }) => {
            rec.failure = Some(e.to_string());
            return Ok(rec);
        }
        Err(e) => return Err(e),
    };
    if let Some(ct) = tols.contact {
        solution.contact_mask = contact_set(&solution, &obstacle, ct).mask;
        solution.contact_tol = ct;
    }
    let contact = contact_set(&solution, &obstacle, solution.contact_tol);
    rec.envelope = Some(EnvelopeSummary {
        iterations: solution.iterations,
        final_residual: solution.final_residual,
        contact_tol: solution.contact_tol,
        contact_count: contact.count,
        inner_count: contact.inner_count,
        contact_measure: contact.measure,
    });
    let f = poisson_rhs(&phi, delta, scenario.n)?;
    rec.abp = Some(abp_quantities(&v, &obstacle, &solution, &f, delta)?);

    let margin = params.margin_h * h;
    let node = match pick_contact_point(&obstacle, &solution, &scenario.singular_set, margin) {
        Ok(node) => node,
        Err(e @ Error::Selection(_)) => {
            rec.failure = Some(e.to_string());
            return Ok(rec);
        }
        Err(e) => return Err(e),
    };
    let z = dom.node_point(node);
    rec.z_delta_node = Some(node);
    rec.dist_to_z0 = Some(z.distance(&scenario.z0));
    rec.dist_to_set = Some(scenario.singular_set.distance(z.coords()));
    rec.z_delta = Some(z);

    let gamma = gamma_field(&obstacle, &solution)?;
    let fields = ChainInputs {
        u: &u,
        phi: &phi,
        v: &v,
        gamma: &gamma,
    };
    // interpolated envelope values need the whole cell inside the outer ball
    let reach = rec.dist_to_z0.unwrap_or(0.0) + h * (dom.real_dim() as f64).sqrt();
    for &c in &params.radii_h {
        let r = c * h;
        if reach + r > 2.0 * delta * (1.0 + 1e-12) {
            rec.skipped_radii.push(r);
            continue;
        }
        for (ti, t) in directions.iter().enumerate() {
            rec.chain.push(chain_bound(
                &fields, node, delta, r, t, ti, params.m, tols.chain,
            )?);
        }
    }
    rec.chain_ok =
        !rec.chain.is_empty() && rec.chain.iter().all(|c| c.u_ok && c.gamma_ok && c.bound_ok);

    let hb = hessian_form_min(&phi, node, directions, tols.psd_c_h)?;
    rec.bound_ok = hb.sample_min >= -delta - tols.chain - hb.tolerance;
    rec.hessian_form_min = Some(hb.sample_min);
    rec.hessian = Some(hb);
    if rec.chain.is_empty() {
        rec.failure = Some("no chain radius fits inside the outer ball".into());
    }
    Ok(rec)
}

pub fn run_extension(scenario: &Scenario, params: &PipelineParams) -> Result<ExtensionReport> {
    scenario.validate()?;
    params.validate(scenario)?;
    let directions = params.direction_sample(scenario.n);
    for t in &directions {
        if (t.norm_squared().sqrt() - 1.0).abs() > 1e-12 {
            return Err(Error::Config("directions must be unit vectors".into()));
        }
    }
    let mut report = ExtensionReport {
        scenario: scenario.name.clone(),
        n: scenario.n,
        seed: params.seed,
        conclusion: Conclusion::Inconclusive,
        reasons: Vec::new(),
        guard: None,
        deltas: Vec::new(),
        extrapolated_bound: None,
        slope: None,
        trend_ok: false,
        abp_constant: None,
    };
    let finish = |mut r: ExtensionReport, c: Conclusion| {
        r.conclusion = c;
        Ok(r)
    };

    let guard = run_guard(scenario, params)?;
    let mut violated = false;
    if guard.subharmonic.status == Status::Fail {
        report.reasons.push(format!(
            "u fails the sub-mean-value test at {} node/radius pairs; subharmonicity on the whole domain is required",
            guard.subharmonic.violation_count
        ));
        violated = true;
    }
    if guard.psh_off_set.status == Status::Fail {
        report.reasons.push(format!(
            "u fails the circle sub-mean-value test off the singular set at {} circles",
            guard.psh_off_set.violation_count
        ));
        violated = true;
    }
    report.guard = Some(guard);
    if violated {
        return finish(report, Conclusion::PreconditionViolated);
    }

    for &delta in &params.deltas {
        let rec = run_delta(scenario, params, &directions, delta)?;
        let precondition = !rec.majorant.ok || !rec.collar.ok;
        let failure = rec.failure.clone();
        report.deltas.push(rec);
        if let Some(msg) = failure {
            report.reasons.push(format!("delta = {delta}: {msg}"));
            let c = if precondition {
                Conclusion::PreconditionViolated
            } else {
                Conclusion::Inconclusive
            };
            return finish(report, c);
        }
    }

    let xs: Vec<f64> = report.deltas.iter().map(|r| r.delta).collect();
    let ys: Vec<f64> = report
        .deltas
        .iter()
        .filter_map(|r| r.hessian_form_min)
        .collect();
    let (intercept, slope) = linear_fit(&xs, &ys)?;
    report.extrapolated_bound = Some(intercept);
    report.slope = Some(slope);
    report.abp_constant = report
        .deltas
        .iter()
        .filter_map(|r| r.abp.as_ref()?.implied_c)
        .reduce(f64::max);
    report.trend_ok = report.deltas.windows(2).all(|w| {
        // w[0] has the larger delta
        w[1].dist_to_z0.unwrap_or(f64::INFINITY) <= w[0].dist_to_z0.unwrap_or(0.0) + 2.0 * w[0].h
    });

    for r in &report.deltas {
        if !r.bound_ok {
            report.reasons.push(format!(
                "delta = {}: Hessian form minimum {:.6} is below -delta - tol",
                r.delta,
                r.hessian_form_min.unwrap_or(f64::NAN)
            ));
        }
        if !r.chain_ok {
            report.reasons.push(format!(
                "delta = {}: a circle-mean chain step failed its check",
                r.delta
            ));
        }
    }
    if intercept < -params.tolerances.final_bound {
        report.reasons.push(format!(
            "extrapolated bound {intercept:.6} is below -{}",
            params.tolerances.final_bound
        ));
    }
    if !report.trend_ok {
        report
            .reasons
            .push("contact points do not approach z0 as delta decreases".into());
    }
    let conclusion = if report.reasons.is_empty() {
        Conclusion::Certified
    } else {
        Conclusion::Inconclusive
    };
    finish(report, conclusion)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub n: usize,
    pub delta: f64,
    pub points_per_axis: usize,
    pub h: f64,
    pub margin: f64,
    pub subharmonic: Verdict,
    pub psh_off_sphere: Verdict,
    /// Distance of the worst subharmonicity witness to the unit sphere.
    pub witness_sphere_distance: Option<f64>,
    pub pipeline: ExtensionReport,
}

/// `min(|z|^2, 1)` with the unit sphere as singular set: psh off the sphere,
/// not subharmonic across it.
pub fn counterexample_scenario(n: usize) -> Result<Scenario> {
    let mut z0 = vec![0.0; 2 * n];
    z0[0] = 1.0;
    Ok(Scenario {
        name: "precondition-violation".into(),
        n,
        u: Function::parse("min(norm2, 1)")?,
        phi: Function::constant(1.0),
        z0: ComplexPoint::new(z0)?,
        singular_set: SingularSet::sphere(&ComplexPoint::origin(n), 1.0),
        delta0: 1.0,
    })
}

pub fn counterexample_demo(
    n: usize,
    points_per_axis: usize,
    seed: u64,
) -> Result<CounterexampleReport> {
    let delta = 0.75;
    let dom = GridDomain::new(n, ComplexPoint::origin(n), delta, points_per_axis)?;
    let h = dom.h();
    let scenario = counterexample_scenario(n)?;
    let u = sample(&scenario.u, &dom)?;
    let params = PipelineParams {
        seed,
        points_per_axis,
        ..PipelineParams::default()
    };
    let mv = MeanValueParams {
        radii: params.guard_radii_h.iter().map(|c| c * h).collect(),
        directions: params.direction_sample(n),
        m: params.m,
        tol: params.tolerances.certifier,
    };
    let margin = params.guard_margin_h * h;
    let subharmonic = certify_subharmonic(&u, &mv)?;
    let psh_off_sphere = certify_psh(&u, &scenario.singular_set, margin, &mv)?;
    let witness_sphere_distance = subharmonic
        .witnesses
        .first()
        .map(|w| (w.point.norm_squared().sqrt() - 1.0).abs());
    Ok(CounterexampleReport {
        n,
        delta,
        points_per_axis,
        h,
        margin,
        subharmonic,
        psh_off_sphere,
        witness_sphere_distance,
        pipeline: run_extension(&scenario, &params)?,
    })
}
