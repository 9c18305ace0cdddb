//! Discrete second-order operators, Hermitian positivity, det+, and
//! circle/sphere means.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{interpolate, ComplexPoint, GridDomain, ScalarField};

/// n x n complex Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianForm {
    n: usize,
    entries: Vec<Complex64>,
}

impl HermitianForm {
    /// Builds the form from arbitrary entries, replacing `H` by `(H + H*)/2`
    /// so the result is Hermitian bit for bit.
    pub fn from_entries(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::Argument(format!(
                "expected {} entries for a {n}x{n} form, got {}",
                n * n,
                entries.len()
            )));
        }
        let mut sym = entries.clone();
        for j in 0..n {
            sym[j * n + j] = Complex64::new(entries[j * n + j].re, 0.0);
            for k in j + 1..n {
                let avg = (entries[j * n + k] + entries[k * n + j].conj()) * 0.5;
                sym[j * n + k] = avg;
                sym[k * n + j] = avg.conj();
            }
        }
        Ok(Self { n, entries: sym })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)))
            .collect();
        Self::from_entries(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            entries[j * n + j] = Complex64::new(1.0, 0.0);
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.n + k]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.get(j, j).re).sum()
    }

    /// `sum_{j,k} H_{jk} T_j conj(T_k)`.
    pub fn quadratic_form(&self, t: &ComplexPoint) -> f64 {
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let (a, b) = t.z(j);
            let tj = Complex64::new(a, b);
            for k in 0..n {
                let (c, d) = t.z(k);
                acc += self.get(j, k) * tj * Complex64::new(c, -d);
            }
        }
        acc.re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.n {
            1 => vec![self.entries[0].re],
            2 => {
                let a = self.get(0, 0).re;
                let d = self.get(1, 1).re;
                let b = self.get(0, 1).norm();
                let mid = 0.5 * (a + d);
                let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
                vec![mid - rad, mid + rad]
            }
            _ => self.jacobi_eigenvalues(),
        }
    }

    /// Cyclic Jacobi on the real symmetric embedding [[A, -B], [B, A]] of
    /// H = A + iB; each eigenvalue of H appears twice there.
    fn jacobi_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let mut s = vec![0.0; m * m];
        for j in 0..n {
            for k in 0..n {
                let h = self.get(j, k);
                s[j * m + k] = h.re;
                s[(j + n) * m + (k + n)] = h.re;
                s[j * m + (k + n)] = -h.im;
                s[(j + n) * m + k] = h.im;
            }
        }
        let scale = s
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for _sweep in 0..100 {
            let off: f64 = (0..m)
                .flat_map(|p| (0..m).filter(move |&q| q != p).map(move |q| (p, q)))
                .map(|(p, q)| s[p * m + q] * s[p * m + q])
                .sum();
            if off.sqrt() <= 1e-14 * scale {
                break;
            }
            for p in 0..m {
                for q in p + 1..m {
                    let apq = s[p * m + q];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (s[q * m + q] - s[p * m + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    for k in 0..m {
                        let skp = s[k * m + p];
                        let skq = s[k * m + q];
                        s[k * m + p] = c * skp - sn * skq;
                        s[k * m + q] = sn * skp + c * skq;
                    }
                    for k in 0..m {
                        let spk = s[p * m + k];
                        let sqk = s[q * m + k];
                        s[p * m + k] = c * spk - sn * sqk;
                        s[q * m + k] = sn * spk + c * sqk;
                    }
                }
            }
        }
        let mut diag: Vec<f64> = (0..m).map(|i| s[i * m + i]).collect();
        diag.sort_by(f64::total_cmp);
        diag.into_iter().step_by(2).collect()
    }

    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
                .expect("nonempty range");
            if a[pivot * n + col].norm() == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for row in col + 1..n {
                let factor = a[row * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[row * n + k] -= factor * v;
                }
            }
        }
        det.re
    }
}

pub fn min_eigenvalue(h: &HermitianForm) -> f64 {
    h.eigenvalues()[0]
}

pub fn is_psd(h: &HermitianForm, tol: f64) -> bool {
    min_eigenvalue(h) >= -tol
}

/// det on the positive semidefinite cone, minus infinity elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DetPlusValue {
    Finite(f64),
    MinusInfinity,
}

impl DetPlusValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, DetPlusValue::Finite(_))
    }
}

pub fn det_plus(h: &HermitianForm, tol: f64) -> DetPlusValue {
    if is_psd(h, tol) {
        DetPlusValue::Finite(h.determinant())
    } else {
        DetPlusValue::MinusInfinity
    }
}

fn require_interior(domain: &GridDomain, node: usize) -> Result<()> {
    if node >= domain.node_count() || domain.cells_from_boundary(node) < 1 {
        return Err(Error::Stencil { node });
    }
    Ok(())
}

fn second_difference(field: &ScalarField, node: usize, stride: usize, h2: f64) -> f64 {
    let v = field.values();
    (v[node + stride] - 2.0 * v[node] + v[node - stride]) / h2
}

fn cross_difference(field: &ScalarField, node: usize, sa: usize, sb: usize, h2: f64) -> f64 {
    let v = field.values();
    (v[node + sa + sb] - v[node + sa - sb] - v[node - sa + sb] + v[node - sa - sb]) / (4.0 * h2)
}

/// Central-difference Laplacian over the 2n real axes.
pub fn laplacian(field: &ScalarField, node: usize) -> Result<f64> {
    let dom = field.domain();
    require_interior(dom, node)?;
    let h2 = dom.h() * dom.h();
    Ok(dom
        .strides()
        .into_iter()
        .map(|s| second_difference(field, node, s, h2))
        .sum())
}

/// Finite-difference complex Hessian `d^2 / dz_j d(conj z_k)` at a node:
/// `H_jk = 1/4 [(D_{x_j x_k} + D_{y_j y_k}) + i (D_{x_j y_k} - D_{y_j x_k})]`.
pub fn complex_hessian(field: &ScalarField, node: usize) -> Result<HermitianForm> {
    let dom = field.domain();
    require_interior(dom, node)?;
    let n = dom.n();
    let h2 = dom.h() * dom.h();
    let st = dom.strides();
    let d = |a: usize, b: usize| {
        if a == b {
            second_difference(field, node, st[a], h2)
        } else {
            cross_difference(field, node, st[a], st[b], h2)
        }
    };
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        let (xj, yj) = (2 * j, 2 * j + 1);
        for k in 0..n {
            let (xk, yk) = (2 * k, 2 * k + 1);
            let re = 0.25 * (d(xj, xk) + d(yj, yk));
            let im = if j == k {
                0.0
            } else {
                0.25 * (d(xj, yk) - d(yj, xk))
            };
            entries.push(Complex64::new(re, im));
        }
    }
    HermitianForm::from_entries(n, entries)
}

/// Default positivity tolerance `c_h * h * (1 + max |F|)` over the 3^{2n}
/// block of nodes around `node`.
pub fn psd_tolerance(field: &ScalarField, node: usize, c_h: f64) -> f64 {
    let dom = field.domain();
    let st = dom.strides();
    let d = st.len();
    let mut max_abs: f64 = 0.0;
    for code in 0..3usize.pow(d as u32) {
        let mut idx = node as i64;
        let mut c = code;
        for s in &st {
            idx += (c % 3) as i64 * *s as i64 - *s as i64;
            c /= 3;
        }
        if idx >= 0 && (idx as usize) < dom.node_count() {
            max_abs = max_abs.max(field.value(idx as usize).abs());
        }
    }
    c_h * dom.h() * (1.0 + max_abs)
}

fn check_direction(t: &ComplexPoint) -> Result<()> {
    let norm2 = t.norm_squared();
    if (norm2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!(
            "direction must be a unit vector, |T| = {}",
            norm2.sqrt()
        )));
    }
    Ok(())
}

/// Largest radius for which `center + r e^{i theta} T` stays in the box.
fn circle_fits(domain: &GridDomain, center: &[f64], r: f64, t: &[f64]) -> bool {
    let reach = 2.0 * domain.delta() * (1.0 + 1e-12);
    let c0 = domain.center().coords();
    (0..domain.n()).all(|j| {
        let modulus = (t[2 * j] * t[2 * j] + t[2 * j + 1] * t[2 * j + 1]).sqrt();
        (center[2 * j] - c0[2 * j]).abs() + r * modulus <= reach
            && (center[2 * j + 1] - c0[2 * j + 1]).abs() + r * modulus <= reach
    })
}

/// Precomputed `(cos, sin)` of the m equispaced angles.
pub(crate) fn unit_circle(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|k| {
            let (s, c) = (2.0 * PI * k as f64 / m as f64).sin_cos();
            (c, s)
        })
        .collect()
}

/// Trapezoidal circle mean without argument checks. `buf` must hold 2n reals.
pub(crate) fn circle_mean_raw(
    field: &ScalarField,
    center: &[f64],
    r: f64,
    t: &[f64],
    angles: &[(f64, f64)],
    buf: &mut [f64],
) -> f64 {
    let mut acc = 0.0;
    for &(c, s) in angles {
        for j in 0..t.len() / 2 {
            let (a, b) = (t[2 * j], t[2 * j + 1]);
            buf[2 * j] = center[2 * j] + r * (c * a - s * b);
            buf[2 * j + 1] = center[2 * j + 1] + r * (c * b + s * a);
        }
        acc += match field.source() {
            Some(f) => f.eval(buf),
            None => interpolate(field, buf).unwrap_or(f64::NAN),
        };
    }
    acc / angles.len() as f64
}

/// `(1/m) sum_k F(center + r e^{2 pi i k/m} T)`, using the field's closed form
/// when it has one and multilinear interpolation otherwise.
pub fn circle_mean(
    field: &ScalarField,
    center: &ComplexPoint,
    r: f64,
    t: &ComplexPoint,
    m: usize,
) -> Result<f64> {
    let dom = field.domain();
    if center.dim() != dom.n() || t.dim() != dom.n() {
        return Err(Error::Argument("dimension mismatch in circle_mean".into()));
    }
    check_direction(t)?;
    if m < 8 {
        return Err(Error::Argument(format!(
            "need at least 8 quadrature nodes, got {m}"
        )));
    }
    if !(r >= 0.0) {
        return Err(Error::Argument(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    if !circle_fits(dom, center.coords(), r, t.coords()) {
        return Err(Error::Domain(format!(
            "circle of radius {r} around {:?} leaves the grid box",
            center.coords()
        )));
    }
    let angles = unit_circle(m);
    let mut buf = vec![0.0; dom.real_dim()];
    Ok(circle_mean_raw(
        field,
        center.coords(),
        r,
        t.coords(),
        &angles,
        &mut buf,
    ))
}

/// Average of circle means over a direction sample.
pub fn sphere_mean(
    field: &ScalarField,
    center: &ComplexPoint,
    r: f64,
    directions: &[ComplexPoint],
    m: usize,
) -> Result<f64> {
    if directions.is_empty() {
        return Err(Error::Argument("empty direction sample".into()));
    }
    let mut acc = 0.0;
    for t in directions {
        acc += circle_mean(field, center, r, t, m)?;
    }
    Ok(acc / directions.len() as f64)
}

pub(crate) fn fits(domain: &GridDomain, center: &[f64], r: f64, t: &ComplexPoint) -> bool {
    circle_fits(domain, center, r, t.coords())
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Low-discrepancy unit directions of C^n: `groups` shifted Halton points
/// mapped to the sphere, each expanded under cyclic coordinate shifts and
/// sign flips of z_2..z_n. The expansion makes `sum T T*` a multiple of the
/// identity, so direction-averaged circle means reproduce sphere means on
/// Hermitian quadratics exactly.
pub fn quasi_uniform_directions(n: usize, groups: usize, seed: u64) -> Vec<ComplexPoint> {
    assert!(
        2 * n <= PRIMES.len(),
        "dimension beyond the Halton prime table"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..2 * n).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::new();
    for g in 0..groups {
        let mut base = vec![0.0; 2 * n];
        for j in 0..n {
            let u1 = (radical_inverse(g as u64 + 1, PRIMES[2 * j]) + shift[2 * j]).fract();
            let u2 = (radical_inverse(g as u64 + 1, PRIMES[2 * j + 1]) + shift[2 * j + 1]).fract();
            let rad = (-2.0 * (1.0 - u1).ln()).sqrt();
            base[2 * j] = rad * (2.0 * PI * u2).cos();
            base[2 * j + 1] = rad * (2.0 * PI * u2).sin();
        }
        let norm = base.iter().map(|v| v * v).sum::<f64>().sqrt();
        base.iter_mut().for_each(|v| *v /= norm);
        for shift_by in 0..n {
            for signs in 0..(1usize << (n - 1)) {
                let mut c = vec![0.0; 2 * n];
                for j in 0..n {
                    let src = (j + shift_by) % n;
                    let flip = j > 0 && (signs >> (j - 1)) & 1 == 1;
                    let sgn = if flip { -1.0 } else { 1.0 };
                    c[2 * j] = sgn * base[2 * src];
                    c[2 * j + 1] = sgn * base[2 * src + 1];
                }
                out.push(ComplexPoint::new(c).expect("even length"));
            }
        }
    }
    out
}

/// The n complex coordinate axes followed by two symmetrized quasi-uniform
/// groups.
pub fn default_directions(n: usize, seed: u64) -> Vec<ComplexPoint> {
    let mut dirs: Vec<ComplexPoint> = (0..n).map(|j| ComplexPoint::unit(n, j)).collect();
    dirs.extend(quasi_uniform_directions(n, 2, seed));
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Function;
    use crate::geometry::sample;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn field(text: &str, n: usize, delta: f64, ppa: usize) -> ScalarField {
        let g = GridDomain::new(n, ComplexPoint::origin(n), delta, ppa).unwrap();
        sample(&Function::parse(text).unwrap(), &g).unwrap()
    }

    fn pt(v: &[f64]) -> ComplexPoint {
        ComplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        for n in [1, 2] {
            let f = field("norm2", n, 0.5, 9);
            let node = f.domain().flat_index(&vec![3; 2 * n]);
            assert!((laplacian(&f, node).unwrap() - 4.0 * n as f64).abs() < 1e-10);
            let f = field("3*x1 - y1 + 2", n, 0.5, 9);
            assert!(laplacian(&f, node).unwrap().abs() < 1e-10);
        }
        let f = field("norm2", 1, 0.5, 9);
        assert!(matches!(laplacian(&f, 0), Err(Error::Stencil { node: 0 })));
    }

    #[test]
    fn laplacian_of_quartic_converges() {
        // symbolic: Lap |z|^4 = (8n + 8)|z|^2 in R^{2n}; each axis adds 2h^2 of error
        for n in [1usize, 2] {
            for ppa in [9usize, 17, 33] {
                if n == 2 && ppa == 33 {
                    continue;
                }
                let f = field("norm2^2", n, 0.5, ppa);
                let g = f.domain();
                let node = g.flat_index(&vec![g.half() + 1; 2 * n]);
                let z2 = g.node_point(node).norm_squared();
                let exact = (8.0 * n as f64 + 8.0) * z2;
                let err = laplacian(&f, node).unwrap() - exact;
                let h = g.h();
                assert!(
                    (err - 2.0 * (2 * n) as f64 * h * h).abs() < 1e-9,
                    "n={n} ppa={ppa} err={err}"
                );
            }
        }
    }

    #[test]
    fn hessian_examples() {
        let f = field("norm2", 2, 0.5, 9);
        let node = f.domain().flat_index(&[4, 5, 3, 4]);
        let h = complex_hessian(&f, node).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((h.get(j, k) - c(want, 0.0)).norm() < 1e-10);
            }
        }
        let f = field("x1^2 + y1^2 - x2^2 - y2^2", 2, 0.5, 9);
        let h = complex_hessian(&f, node).unwrap();
        assert!((h.get(0, 0).re - 1.0).abs() < 1e-10);
        assert!((h.get(1, 1).re + 1.0).abs() < 1e-10);
        assert!(h.get(0, 1).norm() < 1e-10);
        // |z1 + z2|^2 = |z1|^2 + |z2|^2 + 2 Re(z1 conj z2)
        let f = field("(x1 + x2)^2 + (y1 + y2)^2", 2, 0.5, 9);
        let h = complex_hessian(&f, node).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert!((h.get(j, k) - c(1.0, 0.0)).norm() < 1e-10);
            }
        }
        let ev = h.eigenvalues();
        assert!(ev[0].abs() < 1e-10 && (ev[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn hessian_imaginary_part() {
        // |z1 - i z2|^2 has form |T1 - i T2|^2, which pins the sign of Im H_12
        let f = field("(x1 + y2)^2 + (y1 - x2)^2", 2, 0.5, 9);
        let node = f.domain().center_node();
        let h = complex_hessian(&f, node).unwrap();
        let t = pt(&[1.0 / 2f64.sqrt(), 0.0, 0.0, 1.0 / 2f64.sqrt()]); // (1, i)/sqrt2
        assert!((h.quadratic_form(&t) - 2.0).abs() < 1e-10);
        let t = pt(&[1.0 / 2f64.sqrt(), 0.0, 0.0, -1.0 / 2f64.sqrt()]);
        assert!(h.quadratic_form(&t).abs() < 1e-10);
    }

    #[test]
    fn hermitian_symmetry_exact() {
        let f = field("x1*y2 + y1^2*x2 + exp(x1 - y2)", 2, 0.5, 9);
        for node in [
            f.domain().center_node(),
            f.domain().flat_index(&[2, 5, 6, 3]),
        ] {
            let h = complex_hessian(&f, node).unwrap();
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(h.get(j, k), h.get(k, j).conj());
                }
            }
        }
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(min_eigenvalue(&HermitianForm::identity(2)), 1.0);
        let a = HermitianForm::from_entries(
            2,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(min_eigenvalue(&a).abs() < 1e-15);
        let b = HermitianForm::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!((min_eigenvalue(&b) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_matches_characteristic_structure() {
        // diag(3, -2, 5) conjugated by a unitary with complex entries
        let s = 1.0 / 2f64.sqrt();
        let u = [
            [c(s, 0.0), c(0.0, s), c(0.0, 0.0)],
            [c(0.0, s), c(s, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        ];
        let d = [3.0, -2.0, 5.0];
        let mut e = vec![c(0.0, 0.0); 9];
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    e[j * 3 + k] += u[j][l] * d[l] * u[k][l].conj();
                }
            }
        }
        let h = HermitianForm::from_entries(3, e).unwrap();
        let ev = h.eigenvalues();
        for (got, want) in ev.iter().zip([-2.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-12, "{ev:?}");
        }
        assert!((h.determinant() + 30.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_agrees_with_closed_form_on_2x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let d: f64 = rng.gen_range(-2.0..2.0);
            let b = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let h =
                HermitianForm::from_entries(2, vec![c(a, 0.0), b, b.conj(), c(d, 0.0)]).unwrap();
            let closed = h.eigenvalues();
            let jac = h.jacobi_eigenvalues();
            for (x, y) in closed.iter().zip(&jac) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!((h.determinant() - closed[0] * closed[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_and_det_plus() {
        let id = HermitianForm::identity(2);
        let diag = HermitianForm::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let ones = HermitianForm::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let edge = HermitianForm::from_entries(
            2,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(is_psd(&id, 0.0));
        assert!(!is_psd(&diag, 1e-9));
        assert!(is_psd(&edge, 0.0));
        assert_eq!(det_plus(&id, 0.0), DetPlusValue::Finite(1.0));
        assert_eq!(det_plus(&diag, 1e-9), DetPlusValue::MinusInfinity);
        match det_plus(&ones, 1e-12) {
            DetPlusValue::Finite(v) => assert!(v.abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        for h in [&id, &diag, &ones, &edge] {
            for tol in [0.0, 1e-9, 2.0] {
                assert_eq!(det_plus(h, tol).is_finite(), is_psd(h, tol));
            }
        }
    }

    #[test]
    fn circle_mean_examples() {
        let f = field("x1", 2, 0.5, 9);
        let center = pt(&[0.1, -0.2, 0.05, 0.0]);
        let e1 = ComplexPoint::unit(2, 0);
        assert!((circle_mean(&f, &center, 0.3, &e1, 64).unwrap() - 0.1).abs() < 1e-15);
        let f = field("norm2", 2, 0.5, 9);
        for t in default_directions(2, 3) {
            let m = circle_mean(&f, &ComplexPoint::origin(2), 0.4, &t, 64).unwrap();
            assert!((m - 0.16).abs() < 1e-14);
        }
    }

    #[test]
    fn circle_mean_through_interpolation_overestimates_convex() {
        let f = field("norm2", 2, 0.5, 9).without_source();
        let h = f.domain().h();
        let t = default_directions(2, 3)[3].clone();
        let m = circle_mean(&f, &ComplexPoint::origin(2), 0.4, &t, 64).unwrap();
        assert!(m >= 0.16 - 1e-14 && m <= 0.16 + 4.0 * h * h / 4.0);
    }

    #[test]
    fn circle_mean_kink_below_value() {
        // oracle: 2^14-point trapezoid on the closed form
        let g = GridDomain::new(2, ComplexPoint::origin(2), 0.75, 17).unwrap();
        let f = sample(&Function::parse("min(norm2, 1)").unwrap(), &g).unwrap();
        let center = ComplexPoint::unit(2, 0);
        let e1 = ComplexPoint::unit(2, 0);
        let mean = circle_mean(&f, &center, 0.1, &e1, 256).unwrap();
        let fine = {
            let k = 1 << 14;
            (0..k)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / k as f64;
                    let x = 1.0 + 0.1 * th.cos();
                    let y = 0.1 * th.sin();
                    (x * x + y * y).min(1.0)
                })
                .sum::<f64>()
                / k as f64
        };
        assert!(mean < 1.0);
        assert!((mean - fine).abs() < 1e-5);
        assert!(1.0 - mean > 0.01 && 1.0 - mean < 0.1);
    }

    #[test]
    fn circle_mean_argument_checks() {
        let f = field("x1", 1, 0.5, 9);
        let o = ComplexPoint::origin(1);
        let bad = pt(&[1.0, 1e-3]);
        assert!(matches!(
            circle_mean(&f, &o, 0.1, &bad, 64),
            Err(Error::Argument(_))
        ));
        let e1 = ComplexPoint::unit(1, 0);
        assert!(matches!(
            circle_mean(&f, &o, 1.5, &e1, 64),
            Err(Error::Domain(_))
        ));
        assert!(circle_mean(&f, &o, 0.1, &e1, 4).is_err());
    }

    #[test]
    fn circle_mean_linearity_and_rotation() {
        let g = GridDomain::new(2, ComplexPoint::origin(2), 0.5, 9).unwrap();
        let a = sample(&Function::parse("exp(x1) + y2^3").unwrap(), &g).unwrap();
        let b = sample(&Function::parse("abs(x2 - y1)").unwrap(), &g).unwrap();
        let sum = sample(
            &Function::parse("2*(exp(x1) + y2^3) - 3*abs(x2 - y1)").unwrap(),
            &g,
        )
        .unwrap();
        let center = pt(&[0.1, 0.2, -0.1, 0.0]);
        let t = default_directions(2, 9)[4].clone();
        let ma = circle_mean(&a, &center, 0.3, &t, 64).unwrap();
        let mb = circle_mean(&b, &center, 0.3, &t, 64).unwrap();
        let ms = circle_mean(&sum, &center, 0.3, &t, 64).unwrap();
        assert!((ms - (2.0 * ma - 3.0 * mb)).abs() < 1e-13);
        for k in 1..5 {
            let rotated = t.rotate(2.0 * PI * k as f64 / 64.0);
            let mr = circle_mean(&a, &center, 0.3, &rotated, 64).unwrap();
            assert!((mr - ma).abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_mean_examples() {
        let g = GridDomain::new(2, ComplexPoint::origin(2), 0.5, 9).unwrap();
        let one = sample(&Function::constant(1.0), &g).unwrap();
        let dirs = default_directions(2, 1);
        assert!(
            (sphere_mean(&one, &ComplexPoint::origin(2), 0.3, &dirs, 64).unwrap() - 1.0).abs()
                < 1e-15
        );
        let sq = sample(&Function::parse("norm2").unwrap(), &g).unwrap();
        assert!(
            (sphere_mean(&sq, &ComplexPoint::origin(2), 0.3, &dirs, 64).unwrap() - 0.09).abs()
                < 1e-14
        );
    }

    #[test]
    fn sphere_mean_of_harmonic_quadratic() {
        let g = GridDomain::new(2, ComplexPoint::origin(2), 0.5, 9).unwrap();
        let f = sample(&Function::parse("x1^2 + y1^2 - x2^2 - y2^2").unwrap(), &g).unwrap();
        let r = 0.3;
        let dirs = quasi_uniform_directions(2, 16, 11);
        assert_eq!(dirs.len(), 64);
        let mean = sphere_mean(&f, &ComplexPoint::origin(2), r, &dirs, 64).unwrap();
        assert!(mean.abs() < 1e-3 * r * r);
        // oracle: 10^4 random Gaussian directions, the exact circle mean is r^2 (|T1|^2 - |T2|^2)
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut acc = 0.0;
        for _ in 0..10_000 {
            let v: Vec<f64> = (0..4)
                .map(|_| {
                    let u1: f64 = rng.gen();
                    let u2: f64 = rng.gen();
                    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
                })
                .collect();
            let nn: f64 = v.iter().map(|x| x * x).sum();
            acc += r * r * (v[0] * v[0] + v[1] * v[1] - v[2] * v[2] - v[3] * v[3]) / nn;
        }
        assert!((acc / 10_000.0).abs() < 0.02 * r * r);
    }

    #[test]
    fn direction_design_is_balanced() {
        for n in [1usize, 2, 3] {
            let dirs = default_directions(n, 42);
            let mut m = vec![c(0.0, 0.0); n * n];
            for t in &dirs {
                assert!((t.norm_squared() - 1.0).abs() < 1e-14);
                for j in 0..n {
                    for k in 0..n {
                        let (a, b) = t.z(j);
                        let (p, q) = t.z(k);
                        m[j * n + k] += c(a, b) * c(p, -q);
                    }
                }
            }
            let avg = dirs.len() as f64 / n as f64;
            for j in 0..n {
                for k in 0..n {
                    let want = if j == k { avg } else { 0.0 };
                    assert!((m[j * n + k] - c(want, 0.0)).norm() < 1e-12, "n={n}");
                }
            }
            assert_eq!(default_directions(n, 42), dirs);
        }
    }

    #[test]
    fn psd_tolerance_scales_with_h() {
        let f = field("norm2", 1, 0.5, 9);
        let node = f.domain().center_node();
        let h = f.domain().h();
        // max |F| over the 3x3 block around the origin is 2 h^2
        assert!((psd_tolerance(&f, node, 1.0) - h * (1.0 + 2.0 * h * h)).abs() < 1e-15);
    }
}
