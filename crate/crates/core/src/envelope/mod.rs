//! Constrained convex envelope as a grid obstacle problem, its LP oracle,
//! and contact-set extraction.

mod lp;

pub use lp::lower_hull_at;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridDomain, NodeClass, ScalarField};

const NO_SLOT: u32 = u32::MAX;

/// Obstacle values on the nodes of the outer ball, in ascending grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    domain: GridDomain,
    nodes: Vec<usize>,
    inner: Vec<bool>,
    w: Vec<f64>,
    slot: Vec<u32>,
}

impl Obstacle {
    /// `w = v` on the inner ball, `w = 0` on the collar.
    pub fn build(v_delta: &ScalarField, domain: &GridDomain) -> Result<Self> {
        if v_delta.domain() != domain {
            return Err(Error::Argument(
                "v_delta is sampled on a different grid".into(),
            ));
        }
        Self::assemble(domain, |node, class| match class {
            NodeClass::Inner => v_delta.value(node),
            _ => 0.0,
        })
    }

    /// Arbitrary obstacle taken from grid values on every node of the outer
    /// ball. `values` has one entry per grid node; entries outside are ignored.
    pub fn from_values(domain: &GridDomain, values: &[f64]) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::Argument(format!(
                "expected {} values, got {}",
                domain.node_count(),
                values.len()
            )));
        }
        Self::assemble(domain, |node, _| values[node])
    }

    /// Same support, new values (one per obstacle node).
    pub fn with_values(&self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.w.len() {
            return Err(Error::Argument("obstacle value count mismatch".into()));
        }
        if let Some(i) = w.iter().position(|v| !v.is_finite()) {
            return Err(non_finite(&self.domain, self.nodes[i], w[i]));
        }
        Ok(Self { w, ..self.clone() })
    }

    fn assemble(domain: &GridDomain, value: impl Fn(usize, NodeClass) -> f64) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut inner = Vec::new();
        let mut w = Vec::new();
        let mut slot = vec![NO_SLOT; domain.node_count()];
        for (node, slot_of) in slot.iter_mut().enumerate() {
            let class = domain.classify(node);
            if class == NodeClass::Outer {
                continue;
            }
            let v = value(node, class);
            if !v.is_finite() {
                return Err(non_finite(domain, node, v));
            }
            *slot_of = nodes.len() as u32;
            nodes.push(node);
            inner.push(class == NodeClass::Inner);
            w.push(v);
        }
        Ok(Self {
            domain: domain.clone(),
            nodes,
            inner,
            w,
            slot,
        })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    /// Grid indices of the obstacle nodes.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_inner(&self, i: usize) -> bool {
        self.inner[i]
    }

    /// Obstacle index of a grid node, if the node lies in the outer ball.
    pub fn index_of(&self, node: usize) -> Option<usize> {
        match self.slot.get(node) {
            Some(&s) if s != NO_SLOT => Some(s as usize),
            _ => None,
        }
    }

    fn shifted(&self, node: usize, dir: &[i64], sign: i64) -> Option<usize> {
        let idx = self.domain.multi_index(node);
        let ppa = self.domain.points_per_axis() as i64;
        let mut target = Vec::with_capacity(idx.len());
        for (i, d) in idx.iter().zip(dir) {
            let k = *i as i64 + sign * d;
            if k < 0 || k >= ppa {
                return None;
            }
            target.push(k as usize);
        }
        self.index_of(self.domain.flat_index(&target))
    }

    /// Discrete Laplacian of `w` at an inner obstacle node.
    fn laplacian_at(&self, i: usize) -> f64 {
        let dim = self.domain.real_dim();
        let h2 = self.domain.h() * self.domain.h();
        let mut acc = 0.0;
        for a in 0..dim {
            let mut e = vec![0i64; dim];
            e[a] = 1;
            let (Some(p), Some(m)) = (
                self.shifted(self.nodes[i], &e, 1),
                self.shifted(self.nodes[i], &e, -1),
            ) else {
                continue;
            };
            acc += (self.w[p] + self.w[m] - 2.0 * self.w[i]) / h2;
        }
        acc
    }
}

fn non_finite(domain: &GridDomain, node: usize, value: f64) -> Error {
    Error::Sampling {
        node,
        coords: domain.node_coords(node),
        value,
    }
}

pub fn build_obstacle(v_delta: &ScalarField, domain: &GridDomain) -> Result<Obstacle> {
    Obstacle::build(v_delta, domain)
}

/// Integer direction vectors in grid units, one per line (sign-normalized).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stencil {
    dirs: Vec<Vec<i64>>,
}

impl Stencil {
    pub fn new(dirs: Vec<Vec<i64>>) -> Result<Self> {
        let dim = dirs.first().map_or(0, Vec::len);
        if dim == 0 || dirs.iter().any(|d| d.len() != dim) {
            return Err(Error::Argument(
                "stencil directions must share a nonzero length".into(),
            ));
        }
        for a in 0..dim {
            let present = dirs.iter().any(|d| {
                d.iter()
                    .enumerate()
                    .all(|(b, &v)| if a == b { v.abs() == 1 } else { v == 0 })
            });
            if !present {
                return Err(Error::Argument(format!(
                    "stencil is missing axis direction {a}"
                )));
            }
        }
        Ok(Self { dirs })
    }

    pub fn axes(dim: usize) -> Self {
        let dirs = (0..dim)
            .map(|a| (0..dim).map(|b| i64::from(a == b)).collect())
            .collect();
        Self { dirs }
    }

    /// Axes plus every `e_a +- e_b`.
    pub fn with_diagonals(dim: usize) -> Self {
        let mut dirs = Self::axes(dim).dirs;
        for a in 0..dim {
            for b in a + 1..dim {
                for s in [1, -1] {
                    let mut d = vec![0; dim];
                    d[a] = 1;
                    d[b] = s;
                    dirs.push(d);
                }
            }
        }
        Self { dirs }
    }

    /// All primitive integer directions with entries in `[-width, width]`.
    pub fn full(dim: usize, width: u32) -> Result<Self> {
        if width == 0 {
            return Err(Error::Argument("stencil width must be at least 1".into()));
        }
        let w = width as i64;
        let side = (2 * w + 1) as usize;
        let total = side
            .checked_pow(dim as u32)
            .filter(|&t| t <= 1 << 20)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "stencil of width {width} in dimension {dim} is too large"
                ))
            })?;
        let mut dirs = Vec::new();
        for code in 0..total {
            let mut c = code;
            let d: Vec<i64> = (0..dim)
                .map(|_| {
                    let v = (c % side) as i64 - w;
                    c /= side;
                    v
                })
                .collect();
            let first = d.iter().find(|&&v| v != 0);
            if first.is_none_or(|&v| v < 0) {
                continue;
            }
            if d.iter().fold(0, |g, &v| gcd(g, v.abs())) == 1 {
                dirs.push(d);
            }
        }
        dirs.sort_by_key(|d| (d.iter().map(|v| v * v).sum::<i64>(), d.clone()));
        Self::new(dirs)
    }

    pub fn dim(&self) -> usize {
        self.dirs[0].len()
    }

    pub fn directions(&self) -> &[Vec<i64>] {
        &self.dirs
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Default iteration cap: fifty times the squared axis resolution.
pub fn default_max_iter(domain: &GridDomain) -> usize {
    50 * domain.points_per_axis() * domain.points_per_axis()
}

/// Constant affine minorant `l = b` (with `a = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunction {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffineFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.b + self.a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>()
    }
}

/// `l = min(0, min over inner nodes of w)`, admissible for both constraint
/// families.
pub fn nonvoid_witness(obstacle: &Obstacle) -> AffineFunction {
    let b = obstacle
        .w
        .iter()
        .zip(&obstacle.inner)
        .filter(|(_, &inner)| inner)
        .fold(0.0f64, |m, (&v, _)| m.min(v));
    AffineFunction {
        a: vec![0.0; obstacle.domain.real_dim()],
        b,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSolution {
    /// One value per obstacle node.
    pub gamma: Vec<f64>,
    /// Per obstacle node; always false on the collar.
    pub contact_mask: Vec<bool>,
    pub contact_tol: f64,
    pub iterations: usize,
    pub final_residual: f64,
}

/// Jacobi relaxation `g <- min(w, min_e (g(x+e) + g(x-e))/2)` from `g = w`.
pub fn convex_envelope_iterative(
    obstacle: &Obstacle,
    stencil: &Stencil,
    tol: f64,
    max_iter: usize,
) -> Result<EnvelopeSolution> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!(
            "envelope tolerance must be positive, got {tol}"
        )));
    }
    if stencil.dim() != obstacle.domain.real_dim() {
        return Err(Error::Argument(
            "stencil dimension does not match the grid".into(),
        ));
    }
    let pairs = PairTable::new(obstacle, stencil);
    let mut gamma = obstacle.w.clone();
    let mut next = gamma.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        residual = 0.0;
        for i in 0..gamma.len() {
            let mut best = obstacle.w[i];
            for &(p, m) in pairs.of(i) {
                let avg = 0.5 * (gamma[p as usize] + gamma[m as usize]);
                if avg < best {
                    best = avg;
                }
            }
            residual = f64::max(residual, (best - gamma[i]).abs());
            next[i] = best;
        }
        std::mem::swap(&mut gamma, &mut next);
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    if !(residual < tol) {
        return Err(Error::Convergence {
            residual,
            iterations,
        });
    }
    let contact_tol = default_contact_tol(obstacle, tol);
    let contact_mask = mask(obstacle, &gamma, contact_tol);
    Ok(EnvelopeSolution {
        gamma,
        contact_mask,
        contact_tol,
        iterations,
        final_residual: residual,
    })
}

struct PairTable {
    start: Vec<usize>,
    pairs: Vec<(u32, u32)>,
}

impl PairTable {
    fn new(obstacle: &Obstacle, stencil: &Stencil) -> Self {
        let mut start = Vec::with_capacity(obstacle.len() + 1);
        let mut pairs = Vec::new();
        for &node in &obstacle.nodes {
            start.push(pairs.len());
            for d in stencil.directions() {
                if let (Some(p), Some(m)) =
                    (obstacle.shifted(node, d, 1), obstacle.shifted(node, d, -1))
                {
                    pairs.push((p as u32, m as u32));
                }
            }
        }
        start.push(pairs.len());
        Self { start, pairs }
    }

    fn of(&self, i: usize) -> &[(u32, u32)] {
        &self.pairs[self.start[i]..self.start[i + 1]]
    }
}

/// `10 tol + h^2 max |lap w|` over the inner ball.
pub fn default_contact_tol(obstacle: &Obstacle, tol: f64) -> f64 {
    let h2 = obstacle.domain.h() * obstacle.domain.h();
    let curvature = (0..obstacle.len())
        .filter(|&i| obstacle.inner[i])
        .map(|i| obstacle.laplacian_at(i).abs())
        .fold(0.0, f64::max);
    10.0 * tol + h2 * curvature
}

fn mask(obstacle: &Obstacle, gamma: &[f64], contact_tol: f64) -> Vec<bool> {
    obstacle
        .w
        .iter()
        .zip(gamma)
        .zip(&obstacle.inner)
        .map(|((w, g), &inner)| inner && w - g <= contact_tol)
        .collect()
}

/// Largest affine `l(x0)` with `l <= w` at every obstacle node, by simplex.
pub fn convex_envelope_lp(obstacle: &Obstacle, node: usize) -> Result<f64> {
    let target = obstacle
        .index_of(node)
        .ok_or_else(|| Error::Argument(format!("node {node} is outside the obstacle support")))?;
    let dim = obstacle.domain.real_dim();
    let mut points = Vec::with_capacity(obstacle.len() * dim);
    for &nd in &obstacle.nodes {
        points.extend(obstacle.domain.offsets(nd).into_iter().map(|k| k as f64));
    }
    lower_hull_at(&points, dim, &obstacle.w, target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    /// Per obstacle node; false on the collar.
    pub mask: Vec<bool>,
    pub count: usize,
    pub inner_count: usize,
    /// `count * h^{2n}`.
    pub measure: f64,
}

pub fn contact_set(
    solution: &EnvelopeSolution,
    obstacle: &Obstacle,
    contact_tol: f64,
) -> ContactSet {
    let mask = mask(obstacle, &solution.gamma, contact_tol);
    let count = mask.iter().filter(|&&b| b).count();
    ContactSet {
        count,
        inner_count: obstacle.inner.iter().filter(|&&b| b).count(),
        measure: count as f64 * obstacle.domain.cell_volume(),
        mask,
    }
}

/// The envelope as a grid field; nodes outside the outer ball hold 0 and are
/// never meant to be read.
pub fn gamma_field(obstacle: &Obstacle, solution: &EnvelopeSolution) -> Result<ScalarField> {
    let mut values = vec![0.0; obstacle.domain.node_count()];
    for (&node, &g) in obstacle.nodes.iter().zip(&solution.gamma) {
        values[node] = g;
    }
    ScalarField::from_values(obstacle.domain.clone(), values)
}
