//! Numerical check of the ABP bound `delta^3 <= sup |v| <= C delta ||f^+||_{L^2n(contact)}`.

use serde::{Deserialize, Serialize};

use crate::calculus::laplacian;
use crate::envelope::{EnvelopeSolution, Obstacle};
use crate::error::{Error, Result};
use crate::geometry::{NodeClass, ScalarField};

/// Slack on the lower bound `delta^3 <= sup |v|`.
pub const LOWER_BOUND_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbpReport {
    pub delta: f64,
    pub sup_abs: f64,
    pub contact_integral: f64,
    /// `sup_abs / (delta * contact_integral)`; absent when the contact set is empty.
    pub implied_c: Option<f64>,
    pub lower_bound_ok: bool,
    pub contact_count: usize,
    pub contact_empty: bool,
}

/// `lap(phi) + 4 n delta` at interior nodes; boundary nodes copy their nearest
/// interior neighbour.
pub fn poisson_rhs(phi: &ScalarField, delta: f64, n: usize) -> Result<ScalarField> {
    let dom = phi.domain();
    if n != dom.n() {
        return Err(Error::Argument(format!(
            "dimension {n} does not match the grid ({})",
            dom.n()
        )));
    }
    let last = dom.points_per_axis() - 2;
    let shift = 4.0 * n as f64 * delta;
    let mut values = Vec::with_capacity(dom.node_count());
    for node in 0..dom.node_count() {
        let src = if dom.cells_from_boundary(node) >= 1 {
            node
        } else {
            let idx: Vec<usize> = dom
                .multi_index(node)
                .into_iter()
                .map(|i| i.clamp(1, last))
                .collect();
            dom.flat_index(&idx)
        };
        values.push(laplacian(phi, src)? + shift);
    }
    ScalarField::from_values(dom.clone(), values)
}

pub fn abp_quantities(
    v_delta: &ScalarField,
    obstacle: &Obstacle,
    solution: &EnvelopeSolution,
    f: &ScalarField,
    delta: f64,
) -> Result<AbpReport> {
    let dom = v_delta.domain();
    if obstacle.domain() != dom || f.domain() != dom {
        return Err(Error::Argument(
            "v_delta, obstacle and f must share one grid".into(),
        ));
    }
    if solution.contact_mask.len() != obstacle.len() {
        return Err(Error::Argument(
            "envelope solution does not match the obstacle".into(),
        ));
    }
    let sup_abs = (0..dom.node_count())
        .filter(|&node| dom.classify(node) == NodeClass::Inner)
        .map(|node| v_delta.value(node).abs())
        .fold(0.0, f64::max);
    let p = 2 * dom.n();
    let mut sum = 0.0;
    let mut contact_count = 0;
    for (i, &node) in obstacle.nodes().iter().enumerate() {
        if solution.contact_mask[i] {
            contact_count += 1;
            sum += f.value(node).max(0.0).powi(p as i32);
        }
    }
    let contact_integral = (sum * dom.cell_volume()).powf(1.0 / p as f64);
    let implied_c = (contact_integral > 0.0).then(|| sup_abs / (delta * contact_integral));
    Ok(AbpReport {
        delta,
        sup_abs,
        contact_integral,
        implied_c,
        lower_bound_ok: delta.powi(3) <= sup_abs + LOWER_BOUND_SLACK,
        contact_count,
        contact_empty: contact_count == 0,
    })
}

/// Largest implied constant over the reports that define one.
pub fn estimate_constant(reports: &[AbpReport]) -> Result<f64> {
    reports
        .iter()
        .filter_map(|r| r.implied_c)
        .reduce(f64::max)
        .ok_or_else(|| Error::Estimation("no report defines an implied constant".into()))
}
