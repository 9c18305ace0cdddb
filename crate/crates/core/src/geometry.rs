//! Points of C^n as R^{2n}, uniform grids over the box circumscribing
//! B_{2delta}, sampled fields and multilinear interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Function;

/// A point of C^n stored as `(x_1, y_1, ..., x_n, y_n)` with `z_j = x_j + i y_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexPoint {
    coords: Vec<f64>,
}

impl ComplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "a point of C^n needs 2n > 0 real coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub fn origin(n: usize) -> Self {
        Self {
            coords: vec![0.0; 2 * n],
        }
    }

    /// The complex unit vector `e_j` (0-based `j`).
    pub fn unit(n: usize, j: usize) -> Self {
        let mut coords = vec![0.0; 2 * n];
        coords[2 * j] = 1.0;
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn z(&self, j: usize) -> (f64, f64) {
        (self.coords[2 * j], self.coords[2 * j + 1])
    }

    pub fn norm_squared(&self) -> f64 {
        norm_squared(&self.coords)
    }

    pub fn distance(&self, other: &ComplexPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &ComplexPoint) -> ComplexPoint {
        ComplexPoint {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Multiply by the complex scalar `e^{i theta}`.
    pub fn rotate(&self, theta: f64) -> ComplexPoint {
        let (s, c) = theta.sin_cos();
        let mut coords = self.coords.clone();
        for pair in coords.chunks_exact_mut(2) {
            let (x, y) = (pair[0], pair[1]);
            pair[0] = c * x - s * y;
            pair[1] = s * x + c * y;
        }
        ComplexPoint { coords }
    }
}

pub fn norm_squared(coords: &[f64]) -> f64 {
    coords.iter().map(|v| v * v).sum()
}

/// Position of a node relative to the concentric balls B_delta and B_{2delta}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Inner,
    Collar,
    Outer,
}

/// Uniform grid on `center + [-2 delta, 2 delta]^{2n}`.
///
/// Nodes are addressed by a flat index, with the last real coordinate
/// varying fastest. The center is always a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    n: usize,
    center: ComplexPoint,
    delta: f64,
    points_per_axis: usize,
    h: f64,
}

impl GridDomain {
    pub fn new(n: usize, center: ComplexPoint, delta: f64, points_per_axis: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config(
                "complex dimension n must be at least 1".into(),
            ));
        }
        if center.dim() != n {
            return Err(Error::Config(format!(
                "center has dimension {} but n = {n}",
                center.dim()
            )));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Config(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if points_per_axis < 5 || points_per_axis.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "points_per_axis must be odd and at least 5, got {points_per_axis}"
            )));
        }
        let node_count = (points_per_axis as f64).powi(2 * n as i32);
        if node_count > 5.0e7 {
            return Err(Error::Config(format!(
                "grid with {node_count} nodes is beyond desk scale"
            )));
        }
        let h = 4.0 * delta / (points_per_axis - 1) as f64;
        Ok(Self {
            n,
            center,
            delta,
            points_per_axis,
            h,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn center(&self) -> &ComplexPoint {
        &self.center
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half(&self) -> usize {
        (self.points_per_axis - 1) / 2
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(2 * self.n as u32)
    }

    /// Volume of one grid cell, h^{2n}.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(2 * self.n as i32)
    }

    /// Flat-index stride of each real axis.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.real_dim();
        let mut s = vec![1; d];
        for a in (0..d - 1).rev() {
            s[a] = s[a + 1] * self.points_per_axis;
        }
        s
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let d = self.real_dim();
        let mut idx = vec![0; d];
        let mut rest = node;
        for a in (0..d).rev() {
            idx[a] = rest % self.points_per_axis;
            rest /= self.points_per_axis;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Signed offsets of the node from the center, in cells.
    pub fn offsets(&self, node: usize) -> Vec<i64> {
        let half = self.half() as i64;
        self.multi_index(node)
            .into_iter()
            .map(|i| i as i64 - half)
            .collect()
    }

    pub fn center_node(&self) -> usize {
        self.flat_index(&vec![self.half(); self.real_dim()])
    }

    pub fn coords_into(&self, node: usize, out: &mut [f64]) {
        let half = self.half() as f64;
        let mut rest = node;
        for a in (0..self.real_dim()).rev() {
            let i = rest % self.points_per_axis;
            rest /= self.points_per_axis;
            out[a] = self.center.coords[a] + (i as f64 - half) * self.h;
        }
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.real_dim()];
        self.coords_into(node, &mut out);
        out
    }

    pub fn node_point(&self, node: usize) -> ComplexPoint {
        ComplexPoint {
            coords: self.node_coords(node),
        }
    }

    /// Squared distance to the center, in units of h^2 (exact integer).
    pub fn offset_norm2(&self, node: usize) -> i64 {
        self.offsets(node).iter().map(|k| k * k).sum()
    }

    /// Classification by distance to the center: `Inner` iff dist < delta,
    /// `Collar` iff delta <= dist <= 2 delta. Evaluated in exact integer
    /// arithmetic: delta = h (ppa - 1) / 4.
    pub fn classify(&self, node: usize) -> NodeClass {
        let k2 = 16 * self.offset_norm2(node);
        let r = (self.points_per_axis - 1) as i64;
        if k2 < r * r {
            NodeClass::Inner
        } else if k2 <= 4 * r * r {
            NodeClass::Collar
        } else {
            NodeClass::Outer
        }
    }

    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for node in 0..self.node_count() {
            match self.classify(node) {
                NodeClass::Inner => c.0 += 1,
                NodeClass::Collar => c.1 += 1,
                NodeClass::Outer => c.2 += 1,
            }
        }
        c
    }

    /// Minimum number of cells between the node and the box boundary.
    pub fn cells_from_boundary(&self, node: usize) -> usize {
        let last = self.points_per_axis - 1;
        self.multi_index(node)
            .into_iter()
            .map(|i| i.min(last - i))
            .min()
            .unwrap_or(0)
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        let reach = 2.0 * self.delta;
        p.iter()
            .zip(&self.center.coords)
            .all(|(x, c)| (x - c).abs() <= reach * (1.0 + 1e-12))
    }

    /// Largest multiple of `h` that fits in the box around the given point,
    /// i.e. the radius of the largest axis-aligned cube centered at `p`.
    pub fn clearance(&self, p: &[f64]) -> f64 {
        let reach = 2.0 * self.delta;
        p.iter()
            .zip(&self.center.coords)
            .map(|(x, c)| reach - (x - c).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Real values on every node of a grid, optionally with the closed form they
/// were sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    domain: GridDomain,
    values: Vec<f64>,
    source: Option<Function>,
}

impl ScalarField {
    pub fn from_values(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::Argument(format!(
                "field has {} values for {} nodes",
                values.len(),
                domain.node_count()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Sampling {
                node,
                coords: domain.node_coords(node),
                value: values[node],
            });
        }
        Ok(Self {
            domain,
            values,
            source: None,
        })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn source(&self) -> Option<&Function> {
        self.source.as_ref()
    }

    /// Drop the closed form so that every off-grid evaluation interpolates.
    pub fn without_source(mut self) -> Self {
        self.source = None;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        ScalarField {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            source: self.source.as_ref().map(|f| f.scale(factor)),
        }
    }

    /// Value at an arbitrary point of the box: the closed form when one is
    /// attached, multilinear interpolation otherwise.
    pub fn evaluate(&self, p: &[f64]) -> Result<f64> {
        match &self.source {
            Some(f) => {
                if !self.domain.contains_point(p) {
                    return Err(Error::Domain(format!(
                        "point {p:?} lies outside the grid box"
                    )));
                }
                Ok(f.eval(p))
            }
            None => interpolate(self, p),
        }
    }
}

/// Sample a closed-form function on every node.
pub fn sample(f: &Function, domain: &GridDomain) -> Result<ScalarField> {
    f.check_dimension(domain.n())?;
    let mut values = Vec::with_capacity(domain.node_count());
    let mut p = vec![0.0; domain.real_dim()];
    for node in 0..domain.node_count() {
        domain.coords_into(node, &mut p);
        let v = f.eval(&p);
        if !v.is_finite() {
            return Err(Error::Sampling {
                node,
                coords: p,
                value: v,
            });
        }
        values.push(v);
    }
    Ok(ScalarField {
        domain: domain.clone(),
        values,
        source: Some(f.clone()),
    })
}

/// Multilinear interpolation over the 2^{2n} nodes of the cell containing `p`.
pub fn interpolate(field: &ScalarField, p: &[f64]) -> Result<f64> {
    let dom = &field.domain;
    let d = dom.real_dim();
    if p.len() != d {
        return Err(Error::Argument(format!(
            "point has {} coordinates, grid has {d}",
            p.len()
        )));
    }
    if !dom.contains_point(p) {
        return Err(Error::Domain(format!(
            "point {p:?} lies outside the grid box"
        )));
    }
    let last = dom.points_per_axis - 1;
    let half = dom.half() as f64;
    let strides = dom.strides();
    let mut base = 0usize;
    // (stride, weight toward the upper node) per axis that needs blending
    let mut blend: Vec<(usize, f64)> = Vec::with_capacity(d);
    for a in 0..d {
        let s = ((p[a] - dom.center.coords[a]) / dom.h + half).clamp(0.0, last as f64);
        let mut i = s.floor() as usize;
        if i == last {
            i -= 1;
        }
        let t = s - i as f64;
        base += i * strides[a];
        if t != 0.0 {
            blend.push((strides[a], t));
        }
    }
    let mut acc = 0.0;
    for mask in 0u32..(1u32 << blend.len()) {
        let mut w = 1.0;
        let mut node = base;
        for (b, &(stride, t)) in blend.iter().enumerate() {
            if mask & (1 << b) != 0 {
                w *= t;
                node += stride;
            } else {
                w *= 1.0 - t;
            }
        }
        acc += w * field.values[node];
    }
    Ok(acc)
}
