//! Built-in functions with expected certifier verdicts, and ready scenarios.

use serde::{Deserialize, Serialize};

use crate::calculus::default_directions;
use crate::error::{Error, Result};
use crate::expr::Function;
use crate::geometry::{sample, ComplexPoint, GridDomain};
use crate::pipeline::{Conclusion, Scenario};
use crate::singular_sets::{cantor_product, SingularSet};
use crate::viscosity::{certify_psh, certify_subharmonic, MeanValueParams, Status, Verdict};

/// Singular sets the catalog refers to by shape; resolved per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetShape {
    /// `{ Re z1 = 0 }`
    Hyperplane,
    UnitSphere,
    /// Depth-3 middle-thirds product on `[0, 1]^{2n}`.
    Cantor,
}

impl SetShape {
    pub fn build(self, n: usize) -> SingularSet {
        match self {
            SetShape::Hyperplane => SingularSet::real_hyperplane(0, 0.0),
            SetShape::UnitSphere => SingularSet::sphere(&ComplexPoint::origin(n), 1.0),
            SetShape::Cantor => cantor_product(3, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub subharmonic: Status,
    pub psh: Status,
    pub psh_off: Option<(SetShape, Status)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub formula: &'static str,
    pub min_n: usize,
    pub default_n: usize,
    /// Inner radius of the default grid, centered at the origin.
    pub delta: f64,
    pub expected: Expected,
    pub notes: &'static str,
}

impl CatalogEntry {
    pub fn function(&self) -> Function {
        Function::parse(self.formula).expect("catalog formulas parse")
    }

    pub fn grid(&self, n: usize, points_per_axis: usize) -> Result<GridDomain> {
        if n < self.min_n {
            return Err(Error::Config(format!(
                "{} needs n >= {}",
                self.name, self.min_n
            )));
        }
        GridDomain::new(n, ComplexPoint::origin(n), self.delta, points_per_axis)
    }
}

#[allow(clippy::too_many_arguments)]
const fn entry(
    name: &'static str,
    formula: &'static str,
    min_n: usize,
    delta: f64,
    subharmonic: Status,
    psh: Status,
    psh_off: Option<(SetShape, Status)>,
    notes: &'static str,
) -> CatalogEntry {
    CatalogEntry {
        name,
        formula,
        min_n,
        default_n: 2,
        delta,
        expected: Expected {
            subharmonic,
            psh,
            psh_off,
        },
        notes,
    }
}

use Status::{Fail, Pass};

pub fn catalog_entries() -> Vec<CatalogEntry> {
    vec![
        entry(
            "norm-squared",
            "norm2",
            1,
            0.5,
            Pass,
            Pass,
            None,
            "complex Hessian is the identity",
        ),
        entry(
            "re-z1",
            "x1",
            1,
            0.5,
            Pass,
            Pass,
            None,
            "pluriharmonic; every circle mean is exact",
        ),
        entry(
            "sh-not-psh",
            "x1^2 + y1^2 - x2^2 - y2^2",
            2,
            0.5,
            Pass,
            Fail,
            None,
            "harmonic with Hessian diag(1, -1); circles along e2 lose r^2",
        ),
        entry(
            "abs-re-z1",
            "abs(x1)",
            1,
            0.5,
            Pass,
            Pass,
            Some((SetShape::Hyperplane, Pass)),
            "convex with a kink on a real hypersurface",
        ),
        entry(
            "intro-counterexample",
            "min(norm2, 1)",
            1,
            0.75,
            Fail,
            Fail,
            Some((SetShape::UnitSphere, Pass)),
            "psh on each side of the sphere, concave kink across it",
        ),
        entry(
            "neg-abs-re-z1",
            "-abs(x1)",
            1,
            0.5,
            Fail,
            Fail,
            Some((SetShape::Hyperplane, Pass)),
            "pluriharmonic off the hyperplane, concave kink on it",
        ),
        entry(
            "norm-squared-cantor",
            "norm2",
            1,
            0.5,
            Pass,
            Pass,
            Some((SetShape::Cantor, Pass)),
            "smooth psh function; excluding a small Cantor product changes nothing",
        ),
        entry(
            "max-re-z1",
            "max(x1, 0)",
            1,
            0.5,
            Pass,
            Pass,
            None,
            "convex with a kink on a real hypersurface",
        ),
        entry(
            "norm-fourth",
            "norm2^2",
            1,
            0.5,
            Pass,
            Pass,
            None,
            "psh; Hessian degenerates at the origin",
        ),
        entry(
            "log-one-plus-norm",
            "log(1 + norm2)",
            1,
            0.5,
            Pass,
            Pass,
            None,
            "Hessian eigenvalues 1/(1+|z|^2) and 1/(1+|z|^2)^2",
        ),
        entry(
            "re-z1-squared",
            "x1^2 - y1^2",
            1,
            0.5,
            Pass,
            Pass,
            None,
            "real part of z1^2, pluriharmonic",
        ),
        entry(
            "exp-re-z1",
            "exp(x1)",
            1,
            0.5,
            Pass,
            Pass,
            None,
            "convex in x1, constant in the rest",
        ),
        entry(
            "neg-norm-squared",
            "-norm2",
            1,
            0.5,
            Fail,
            Fail,
            None,
            "strictly superharmonic",
        ),
        entry(
            "saddle",
            "x1^2 - 2*y1^2",
            1,
            0.5,
            Fail,
            Fail,
            None,
            "Laplacian in z1 is -2",
        ),
    ]
}

pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    catalog_entries().into_iter().find(|e| e.name == name)
}

/// Certifier settings used for catalog checks: radii `h` and `2h`, the seeded
/// default direction sample, 32 quadrature nodes, tolerance 0.01 per `r^2`.
pub fn catalog_params(domain: &GridDomain, seed: u64) -> MeanValueParams {
    let h = domain.h();
    MeanValueParams {
        radii: vec![h, 2.0 * h],
        directions: default_directions(domain.n(), seed),
        m: 32,
        tol: 0.01,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryOutcome {
    pub name: String,
    pub n: usize,
    pub subharmonic: Verdict,
    pub psh: Verdict,
    pub psh_off: Option<Verdict>,
    pub margin: f64,
    pub matches: bool,
}

/// Runs the certifiers on an entry; the exclusion margin is `2h`.
pub fn check_entry(
    entry: &CatalogEntry,
    n: usize,
    points_per_axis: usize,
    seed: u64,
) -> Result<EntryOutcome> {
    let domain = entry.grid(n, points_per_axis)?;
    let field = sample(&entry.function(), &domain)?;
    let params = catalog_params(&domain, seed);
    let margin = 2.0 * domain.h();
    let subharmonic = certify_subharmonic(&field, &params)?;
    let psh = certify_psh(&field, &SingularSet::Empty, 0.0, &params)?;
    let psh_off = match entry.expected.psh_off {
        Some((shape, _)) => Some(certify_psh(&field, &shape.build(n), margin, &params)?),
        None => None,
    };
    let matches = subharmonic.status == entry.expected.subharmonic
        && psh.status == entry.expected.psh
        && match (&entry.expected.psh_off, &psh_off) {
            (Some((_, want)), Some(v)) => v.status == *want,
            _ => true,
        };
    Ok(EntryOutcome {
        name: entry.name.to_string(),
        n,
        subharmonic,
        psh,
        psh_off,
        margin,
        matches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub scenario: Scenario,
    pub expected: Conclusion,
    pub notes: String,
}

/// Weight of the concave corruption in the negative control.
pub const NEGATIVE_CONTROL_EPS: f64 = 1e-2;

fn probe_point(n: usize) -> ComplexPoint {
    let base = [0.3, -0.1, 0.2, 0.4];
    ComplexPoint::new((0..2 * n).map(|i| base[i % base.len()]).collect()).expect("even length")
}

fn smooth_psh(n: usize, name: &str, set: SingularSet) -> Scenario {
    let z0 = probe_point(n);
    let d2 = Function::distance_squared_to(z0.coords());
    let u = Function::parse("norm2").expect("valid");
    let quartic = Function::parse(&format!("({d2})^2")).expect("valid");
    Scenario {
        name: name.into(),
        n,
        phi: u.add(&quartic),
        u,
        singular_set: set,
        z0,
        delta0: 1.0,
    }
}

pub fn scenario_entries(n: usize) -> Vec<ScenarioEntry> {
    let z0 = probe_point(n);
    let trivial = Scenario {
        name: "trivial".into(),
        n,
        u: Function::constant(0.0),
        phi: Function::constant(0.0),
        z0: ComplexPoint::origin(n),
        singular_set: SingularSet::Empty,
        delta0: 1.0,
    };
    let plane = SingularSet::real_hyperplane(0, z0.coords()[0]);
    let cantor = cantor_product(3, n)
        .translated(&z0)
        .expect("cantor sets translate");
    let mut negative = smooth_psh(n, "negative-control", plane.clone());
    let corruption = Function::parse(&format!(
        "{NEGATIVE_CONTROL_EPS}*(x1 - ({}))^2",
        z0.coords()[0]
    ))
    .expect("valid");
    negative.phi = negative.phi.sub(&corruption);
    let violation = crate::pipeline::counterexample_scenario(n).expect("valid");
    vec![
        ScenarioEntry {
            scenario: trivial,
            expected: Conclusion::Certified,
            notes: "u = phi = 0; all bounds vanish".into(),
        },
        ScenarioEntry {
            scenario: smooth_psh(n, "smooth-psh", plane),
            expected: Conclusion::Certified,
            notes: "Hessian of phi at z0 is the identity".into(),
        },
        ScenarioEntry {
            scenario: smooth_psh(n, "smooth-psh-cantor", cantor),
            expected: Conclusion::Certified,
            notes: "singular set is a Cantor product with a corner at z0".into(),
        },
        ScenarioEntry {
            scenario: negative,
            expected: Conclusion::PreconditionViolated,
            notes: "phi dips below u along Re z1 near z0".into(),
        },
        ScenarioEntry {
            scenario: violation,
            expected: Conclusion::PreconditionViolated,
            notes: "u = min(|z|^2, 1) is not subharmonic across the unit sphere".into(),
        },
    ]
}

pub fn scenario_entry(name: &str, n: usize) -> Option<ScenarioEntry> {
    scenario_entries(n)
        .into_iter()
        .find(|e| e.scenario.name == name)
}
