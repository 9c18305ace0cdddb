//! Representations of the exceptional set E.
//!
//! Sets are predicates with an explicit margin: `contains(p, m)` asks whether
//! `p` lies within distance `m` of the represented set. A measure-zero set
//! may still pass through grid nodes, so callers demand a quantitative
//! distance instead of consulting a node mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Function;
use crate::geometry::{ComplexPoint, GridDomain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SingularSet {
    Empty,
    /// `{ g = 0 }` with `lipschitz` a bound for |grad g| on the working box.
    Hypersurface {
        g: Function,
        lipschitz: f64,
    },
    /// Product over the 2n real axes of finite unions of closed intervals.
    CantorProduct {
        depth: usize,
        axes: Vec<Vec<(f64, f64)>>,
    },
    Union {
        members: Vec<SingularSet>,
    },
    PointCloud {
        points: Vec<ComplexPoint>,
    },
}

/// Intervals left after `depth` middle-third removals from [0, 1].
pub fn cantor_intervals(depth: usize) -> Vec<(f64, f64)> {
    let mut intervals = vec![(0.0, 1.0)];
    for _ in 0..depth {
        intervals = intervals
            .into_iter()
            .flat_map(|(a, b)| {
                let third = (b - a) / 3.0;
                [(a, a + third), (b - third, b)]
            })
            .collect();
    }
    intervals
}

fn distance_to_intervals(x: f64, intervals: &[(f64, f64)]) -> f64 {
    intervals
        .iter()
        .map(|&(a, b)| {
            if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn hypersurface_set(g: Function, lipschitz: f64) -> Result<SingularSet> {
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(Error::Argument(format!(
            "Lipschitz bound must be positive, got {lipschitz}"
        )));
    }
    Ok(SingularSet::Hypersurface { g, lipschitz })
}

/// Depth-truncated middle-third Cantor set on each of the 2n real axes of
/// the unit cube.
pub fn cantor_product(depth: usize, n: usize) -> SingularSet {
    let axis = cantor_intervals(depth);
    SingularSet::CantorProduct {
        depth,
        axes: vec![axis; 2 * n],
    }
}

impl SingularSet {
    /// `{ Re z_j = c }`, with the exact signed distance as level function.
    pub fn real_hyperplane(j: usize, c: f64) -> SingularSet {
        let coord = format!("x{}", j + 1);
        let text = if c == 0.0 {
            coord
        } else {
            format!("{coord} - {c}")
        };
        SingularSet::Hypersurface {
            g: Function::parse(&text).expect("well-formed hyperplane"),
            lipschitz: 1.0,
        }
    }

    /// Euclidean sphere `{ |z - center| = radius }`, level function
    /// `|z - center| - radius` (1-Lipschitz).
    pub fn sphere(center: &ComplexPoint, radius: f64) -> SingularSet {
        let d2 = Function::distance_squared_to(center.coords());
        let text = format!("sqrt({d2}) - {radius}");
        SingularSet::Hypersurface {
            g: Function::parse(&text).expect("well-formed sphere"),
            lipschitz: 1.0,
        }
    }

    pub fn translated(&self, offset: &ComplexPoint) -> Result<SingularSet> {
        match self {
            SingularSet::CantorProduct { depth, axes } => {
                if axes.len() != offset.coords().len() {
                    return Err(Error::Argument("offset dimension mismatch".into()));
                }
                let axes = axes
                    .iter()
                    .zip(offset.coords())
                    .map(|(ivs, o)| ivs.iter().map(|&(a, b)| (a + o, b + o)).collect())
                    .collect();
                Ok(SingularSet::CantorProduct {
                    depth: *depth,
                    axes,
                })
            }
            SingularSet::PointCloud { points } => Ok(SingularSet::PointCloud {
                points: points.iter().map(|p| p.add(offset)).collect(),
            }),
            SingularSet::Union { members } => Ok(SingularSet::Union {
                members: members
                    .iter()
                    .map(|m| m.translated(offset))
                    .collect::<Result<_>>()?,
            }),
            SingularSet::Empty => Ok(SingularSet::Empty),
            SingularSet::Hypersurface { .. } => Err(Error::Argument(
                "level-set descriptors are translated by rewriting g".into(),
            )),
        }
    }

    pub fn contains(&self, p: &ComplexPoint, margin: f64) -> Result<bool> {
        if !(margin >= 0.0) {
            return Err(Error::Argument(format!(
                "margin must be nonnegative, got {margin}"
            )));
        }
        Ok(self.contains_coords(p.coords(), margin))
    }

    /// Membership test on raw coordinates; `margin` must be nonnegative.
    pub fn contains_coords(&self, p: &[f64], margin: f64) -> bool {
        match self {
            SingularSet::Empty => false,
            SingularSet::Hypersurface { g, lipschitz } => g.eval(p).abs() <= margin * lipschitz,
            SingularSet::CantorProduct { axes, .. } => {
                // distance to a product set combines the per-axis distances
                let mut d2 = 0.0;
                for (x, ivs) in p.iter().zip(axes) {
                    let d = distance_to_intervals(*x, ivs);
                    d2 += d * d;
                    if d2 > margin * margin {
                        return false;
                    }
                }
                true
            }
            SingularSet::Union { members } => members.iter().any(|m| m.contains_coords(p, margin)),
            SingularSet::PointCloud { points } => points.iter().any(|q| {
                q.coords()
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    <= margin * margin
            }),
        }
    }

    /// Lower bound on the Euclidean distance from `p` to the set, consistent
    /// with `contains_coords`: `contains_coords(p, m)` iff `distance(p) <= m`.
    /// Infinite for the empty set.
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self {
            SingularSet::Empty => f64::INFINITY,
            SingularSet::Hypersurface { g, lipschitz } => g.eval(p).abs() / lipschitz,
            SingularSet::CantorProduct { axes, .. } => p
                .iter()
                .zip(axes)
                .map(|(x, ivs)| distance_to_intervals(*x, ivs).powi(2))
                .sum::<f64>()
                .sqrt(),
            SingularSet::Union { members } => members
                .iter()
                .map(|m| m.distance(p))
                .fold(f64::INFINITY, f64::min),
            SingularSet::PointCloud { points } => points
                .iter()
                .map(|q| {
                    q.coords()
                        .iter()
                        .zip(p)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Lebesgue outer-measure bound of the represented approximation.
    pub fn measure_upper_bound(&self) -> f64 {
        match self {
            SingularSet::Empty
            | SingularSet::Hypersurface { .. }
            | SingularSet::PointCloud { .. } => 0.0,
            SingularSet::CantorProduct { axes, .. } => axes
                .iter()
                .map(|ivs| ivs.iter().map(|(a, b)| b - a).sum::<f64>())
                .product(),
            SingularSet::Union { members } => members.iter().map(|m| m.measure_upper_bound()).sum(),
        }
    }
}

/// Fraction of grid nodes within `margin` of the set.
pub fn grid_fraction_on_set(set: &SingularSet, domain: &GridDomain, margin: f64) -> f64 {
    let mut p = vec![0.0; domain.real_dim()];
    let mut hits = 0usize;
    for node in 0..domain.node_count() {
        domain.coords_into(node, &mut p);
        if set.contains_coords(&p, margin.max(0.0)) {
            hits += 1;
        }
    }
    hits as f64 / domain.node_count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> ComplexPoint {
        ComplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn empty_contains_nothing() {
        assert!(!SingularSet::Empty.contains(&pt(&[0.0, 0.0]), 1e6).unwrap());
    }

    #[test]
    fn hyperplane_membership() {
        let e = hypersurface_set(Function::parse("x1").unwrap(), 1.0).unwrap();
        assert!(e.contains(&pt(&[0.0, 1.0, 0.0, 0.0]), 0.0).unwrap());
        assert!(!e.contains(&pt(&[0.2, 1.0, 0.0, 0.0]), 0.1).unwrap());
        assert!(e.contains(&pt(&[0.2, 1.0, 0.0, 0.0]), 0.2).unwrap());
        assert!(e.contains(&pt(&[0.0, 0.0]), -1.0).is_err());
    }

    #[test]
    fn hypersurface_constructor() {
        assert!(hypersurface_set(Function::parse("x1").unwrap(), 0.0).is_err());
        let sphere = hypersurface_set(Function::parse("norm2 - 1").unwrap(), 8.0).unwrap();
        assert!(sphere.contains(&pt(&[1.0, 0.0, 0.0, 0.0]), 0.0).unwrap());
        assert!(!sphere.contains(&pt(&[0.5, 0.0, 0.0, 0.0]), 0.0).unwrap());
        // non-regular level sets are still accepted
        let cross = hypersurface_set(Function::parse("x1 * y1").unwrap(), 4.0).unwrap();
        assert!(cross.contains(&pt(&[0.0, 0.7]), 0.0).unwrap());
    }

    #[test]
    fn cantor_measure_bookkeeping() {
        assert_eq!(cantor_product(0, 1).measure_upper_bound(), 1.0);
        let c1 = cantor_product(1, 1);
        assert!((c1.measure_upper_bound() - 4.0 / 9.0).abs() < 1e-15);
        let c3 = cantor_product(3, 1);
        assert!((c3.measure_upper_bound() - (2.0f64 / 3.0).powi(6)).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for depth in 0..8 {
            let m = cantor_product(depth, 2).measure_upper_bound();
            assert!((m - (2.0f64 / 3.0).powi(4 * depth as i32)).abs() < 1e-14);
            assert!(m <= prev);
            prev = m;
        }
    }

    #[test]
    fn cantor_removed_middle_square() {
        let c1 = cantor_product(1, 1);
        assert!(!c1.contains(&pt(&[0.5, 0.5]), 0.0).unwrap());
        assert!(c1.contains(&pt(&[0.0, 1.0]), 0.0).unwrap());
        assert!(c1
            .contains(&pt(&[0.5, 0.5]), 1.0 / 6.0 * 2f64.sqrt() + 1e-12)
            .unwrap());
    }

    #[test]
    fn cantor_translation() {
        let c = cantor_product(2, 1).translated(&pt(&[1.0, -1.0])).unwrap();
        assert!(c.contains(&pt(&[1.0, -1.0]), 0.0).unwrap());
        assert!(!c.contains(&pt(&[0.0, 0.0]), 0.0).unwrap());
    }

    #[test]
    fn grid_fraction_examples() {
        let g = GridDomain::new(2, ComplexPoint::origin(2), 0.5, 9).unwrap();
        assert_eq!(grid_fraction_on_set(&SingularSet::Empty, &g, 0.3), 0.0);
        let plane = SingularSet::real_hyperplane(0, 0.0);
        assert!((grid_fraction_on_set(&plane, &g, 0.0) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn grid_fraction_cantor_matches_box_enumeration() {
        let g = GridDomain::new(1, pt(&[0.5, 0.5]), 0.25, 27).unwrap();
        let set = cantor_product(2, 1);
        // oracle: enumerate the 16 squares of the depth-2 construction
        let ivs = cantor_intervals(2);
        let mut squares = Vec::new();
        for a in &ivs {
            for b in &ivs {
                squares.push((*a, *b));
            }
        }
        let mut hits = 0;
        for node in 0..g.node_count() {
            let p = g.node_coords(node);
            if squares.iter().any(|((a0, a1), (b0, b1))| {
                p[0] >= *a0 && p[0] <= *a1 && p[1] >= *b0 && p[1] <= *b1
            }) {
                hits += 1;
            }
        }
        let expected = hits as f64 / g.node_count() as f64;
        assert!(hits > 0);
        assert_eq!(grid_fraction_on_set(&set, &g, 0.0), expected);
    }

    #[test]
    fn point_cloud_and_union() {
        let cloud = SingularSet::PointCloud {
            points: vec![pt(&[1.0, 0.0])],
        };
        assert!(cloud.contains(&pt(&[1.0, 0.5]), 0.5).unwrap());
        assert!(!cloud.contains(&pt(&[1.0, 0.5]), 0.49).unwrap());
        let u = SingularSet::Union {
            members: vec![cloud, SingularSet::real_hyperplane(0, -1.0)],
        };
        assert!(u.contains(&pt(&[-1.0, 3.0]), 0.0).unwrap());
        assert!(!u.contains(&pt(&[0.0, 3.0]), 0.1).unwrap());
    }

    #[test]
    fn serde_descriptor() {
        let json = r#"{"kind":"hypersurface","g":"x1","lipschitz":1.0}"#;
        let s: SingularSet = serde_json::from_str(json).unwrap();
        assert!(s.contains(&pt(&[0.0, 5.0]), 0.0).unwrap());
        let back: SingularSet = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SingularSet>(
            r#"{"kind":"hypersurface","g":"x1","lipschitz":1.0,"x":1}"#
        )
        .is_err());
    }

    fn arb_set() -> impl Strategy<Value = SingularSet> {
        prop_oneof![
            Just(SingularSet::Empty),
            (-1.0f64..1.0).prop_map(|c| SingularSet::real_hyperplane(0, c)),
            (0usize..4).prop_map(|d| cantor_product(d, 1)),
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..4).prop_map(|ps| {
                SingularSet::PointCloud {
                    points: ps.into_iter().map(|(a, b)| pt(&[a, b])).collect(),
                }
            }),
        ]
    }

    proptest! {
        #[test]
        fn membership_monotone_in_margin(
            s in arb_set(), x in -1.5f64..1.5, y in -1.5f64..1.5, m1 in 0.0f64..0.5, dm in 0.0f64..0.5
        ) {
            let p = pt(&[x, y]);
            if s.contains(&p, m1).unwrap() {
                prop_assert!(s.contains(&p, m1 + dm).unwrap());
            }
        }

        #[test]
        fn union_is_disjunction(a in arb_set(), b in arb_set(), x in -1.5f64..1.5, y in -1.5f64..1.5, m in 0.0f64..0.3) {
            let p = pt(&[x, y]);
            let u = SingularSet::Union { members: vec![a.clone(), b.clone()] };
            prop_assert_eq!(
                u.contains(&p, m).unwrap(),
                a.contains(&p, m).unwrap() || b.contains(&p, m).unwrap()
            );
        }

        #[test]
        fn distance_agrees_with_membership(s in arb_set(), x in -1.5f64..1.5, y in -1.5f64..1.5, m in 0.0f64..0.5) {
            let d = s.distance(&[x, y]);
            // stay away from the boundary case where rounding decides
            prop_assume!((d - m).abs() > 1e-12);
            prop_assert_eq!(s.contains_coords(&[x, y], m), d <= m);
        }
    }
}
