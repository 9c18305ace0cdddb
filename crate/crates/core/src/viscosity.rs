//! Sub-mean-value certifiers for subharmonicity and plurisubharmonicity.
//!
//! Testing against every C^2 majorant touching from above is replaced by the
//! equivalent mean-value characterizations: sphere means for the Laplacian,
//! circle means along complex lines for the complex Hessian. The deficit at a
//! node is `(F(z) - mean) / r^2`; a node fails when the deficit exceeds `tol`.

use serde::{Deserialize, Serialize};

use crate::calculus::{
    circle_mean_raw, complex_hessian, fits, min_eigenvalue, psd_tolerance, unit_circle,
};
use crate::error::{Error, Result};
use crate::geometry::{ComplexPoint, ScalarField};
use crate::singular_sets::SingularSet;

/// Witnesses kept in a failing verdict.
pub const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub node: usize,
    pub point: ComplexPoint,
    /// Index into the direction sample; `None` for sphere-mean tests.
    pub direction: Option<usize>,
    pub radius: Option<f64>,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub violation_count: usize,
    pub tested_node_count: usize,
    pub skipped_node_count: usize,
}

/// Radii, direction sample, quadrature size and per-r^2 tolerance shared by
/// the mean-value certifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanValueParams {
    pub radii: Vec<f64>,
    pub directions: Vec<ComplexPoint>,
    pub m: usize,
    pub tol: f64,
}

impl MeanValueParams {
    fn validate(&self, n: usize) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::Argument("radius list is empty".into()));
        }
        if self.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Argument("radii must be positive".into()));
        }
        if self.directions.is_empty() {
            return Err(Error::Argument("direction sample is empty".into()));
        }
        if self.m < 8 {
            return Err(Error::Argument(format!(
                "need at least 8 quadrature nodes, got {}",
                self.m
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Argument("tolerance must be nonnegative".into()));
        }
        for t in &self.directions {
            if t.dim() != n || (t.norm_squared().sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::Argument(
                    "directions must be unit vectors of C^n".into(),
                ));
            }
        }
        Ok(())
    }
}

fn worst_first(a: &Witness, b: &Witness) -> std::cmp::Ordering {
    b.violation
        .total_cmp(&a.violation)
        .then(a.node.cmp(&b.node))
        .then(a.direction.cmp(&b.direction))
        .then(a.radius.unwrap_or(0.0).total_cmp(&b.radius.unwrap_or(0.0)))
}

fn finish(mut witnesses: Vec<Witness>, tested: usize, skipped: usize) -> Verdict {
    let violation_count = witnesses.len();
    witnesses.sort_by(worst_first);
    witnesses.truncate(MAX_WITNESSES);
    let status = if !witnesses.is_empty() {
        Status::Fail
    } else if tested == 0 {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Verdict {
        status,
        witnesses,
        violation_count,
        tested_node_count: tested,
        skipped_node_count: skipped,
    }
}

enum Mode<'a> {
    Sphere,
    Circles {
        exclude: &'a SingularSet,
        margin: f64,
    },
}

fn mean_value_scan(
    field: &ScalarField,
    params: &MeanValueParams,
    mode: Mode<'_>,
) -> Result<Verdict> {
    let dom = field.domain();
    params.validate(dom.n())?;
    let angles = unit_circle(params.m);
    let mut p = vec![0.0; dom.real_dim()];
    let mut buf = vec![0.0; dom.real_dim()];
    let mut witnesses = Vec::new();
    let (mut tested, mut skipped) = (0usize, 0usize);
    for node in 0..dom.node_count() {
        dom.coords_into(node, &mut p);
        let eligible = params
            .radii
            .iter()
            .all(|&r| params.directions.iter().all(|t| fits(dom, &p, r, t)));
        let excluded = match &mode {
            Mode::Circles { exclude, margin } => exclude.contains_coords(&p, *margin),
            Mode::Sphere => false,
        };
        if !eligible || excluded {
            skipped += 1;
            continue;
        }
        tested += 1;
        let value = field.value(node);
        for &r in &params.radii {
            let r2 = r * r;
            match mode {
                Mode::Sphere => {
                    let mean = params
                        .directions
                        .iter()
                        .map(|t| circle_mean_raw(field, &p, r, t.coords(), &angles, &mut buf))
                        .sum::<f64>()
                        / params.directions.len() as f64;
                    let deficit = (value - mean) / r2;
                    if deficit > params.tol {
                        witnesses.push(Witness {
                            node,
                            point: dom.node_point(node),
                            direction: None,
                            radius: Some(r),
                            violation: deficit,
                        });
                    }
                }
                Mode::Circles { .. } => {
                    for (ti, t) in params.directions.iter().enumerate() {
                        let mean = circle_mean_raw(field, &p, r, t.coords(), &angles, &mut buf);
                        let deficit = (value - mean) / r2;
                        if deficit > params.tol {
                            witnesses.push(Witness {
                                node,
                                point: dom.node_point(node),
                                direction: Some(ti),
                                radius: Some(r),
                                violation: deficit,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(finish(witnesses, tested, skipped))
}

/// Sub-mean-value test on direction-averaged spheres.
pub fn certify_subharmonic(field: &ScalarField, params: &MeanValueParams) -> Result<Verdict> {
    mean_value_scan(field, params, Mode::Sphere)
}

/// Sub-mean-value test on every circle `z + r e^{i theta} T`, skipping nodes
/// within `margin` of `exclude`.
pub fn certify_psh(
    field: &ScalarField,
    exclude: &SingularSet,
    margin: f64,
    params: &MeanValueParams,
) -> Result<Verdict> {
    if !(margin >= 0.0) {
        return Err(Error::Argument(format!(
            "margin must be nonnegative, got {margin}"
        )));
    }
    mean_value_scan(field, params, Mode::Circles { exclude, margin })
}

/// Tolerance for the finite-difference positivity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PsdTolerance {
    Fixed(f64),
    /// `c_h * h * (1 + max |F|)` over the stencil block.
    Scaled(f64),
}

impl PsdTolerance {
    pub fn at(&self, field: &ScalarField, node: usize) -> f64 {
        match *self {
            PsdTolerance::Fixed(t) => t,
            PsdTolerance::Scaled(c) => psd_tolerance(field, node, c),
        }
    }
}

impl Default for PsdTolerance {
    fn default() -> Self {
        PsdTolerance::Scaled(1.0)
    }
}

/// `det+ (complex Hessian) >= 0` at every interior node, i.e. a
/// positive semidefinite finite-difference Hessian. Only meaningful for
/// fields sampled from twice differentiable functions.
pub fn det_plus_subsolution_check(field: &ScalarField, tol: PsdTolerance) -> Result<Verdict> {
    let dom = field.domain();
    let mut witnesses = Vec::new();
    let (mut tested, mut skipped) = (0usize, 0usize);
    for node in 0..dom.node_count() {
        if dom.cells_from_boundary(node) < 1 {
            skipped += 1;
            continue;
        }
        tested += 1;
        let h = complex_hessian(field, node)?;
        let lam = min_eigenvalue(&h);
        let t = tol.at(field, node);
        if lam < -t {
            witnesses.push(Witness {
                node,
                point: dom.node_point(node),
                direction: None,
                radius: None,
                violation: -lam,
            });
        }
    }
    Ok(finish(witnesses, tested, skipped))
}
