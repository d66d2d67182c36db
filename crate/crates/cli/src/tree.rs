//! Deterministic embedding of synthetic trees into the 2-D ball: children
//! fan out at equal angles around the incoming edge direction, every edge
//! a geodesic of fixed length.

use crate::config::TreeSpec;
use anyhow::Result;
use poincare::ball::{exp_map, log_map, BallPoint, TangentVector};
use poincare::Curvature;

/// A rooted tree with one embedded ball point per node (BFS order, root
/// at index 0).
#[derive(Clone, Debug)]
pub struct EmbeddedTree {
    pub parents: Vec<Option<usize>>,
    pub depths: Vec<usize>,
    pub points: Vec<BallPoint>,
    pub spec: TreeSpec,
}

impl EmbeddedTree {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of the subtree rooted at `root` (including `root`).
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut members = vec![false; self.len()];
        members[root] = true;
        // parents precede children in BFS order
        for i in root + 1..self.len() {
            if let Some(p) = self.parents[i] {
                if members[p] {
                    members[i] = true;
                }
            }
        }
        members
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }
}

/// Place a complete `branching`-ary tree of the given depth in `B^2_c`.
pub fn embed_tree(spec: &TreeSpec, curvature: Curvature) -> Result<EmbeddedTree> {
    spec.validate()?;
    let b = spec.branching;
    let mut parents: Vec<Option<usize>> = vec![None];
    let mut depths = vec![0usize];
    let mut points = vec![BallPoint::origin(2, curvature)];
    // queue of (node, unit angle of the edge arriving at node)
    let mut frontier: Vec<(usize, Option<f64>)> = vec![(0, None)];

    for _ in 0..spec.depth {
        let mut next = Vec::new();
        for &(node, incoming) in &frontier {
            let base = points[node].clone();
            let lambda = base.lambda();
            let tangent_len = spec.edge_len / lambda;
            for j in 0..b {
                let angle = match incoming {
                    // root: spread over the whole circle
                    None => 2.0 * std::f64::consts::PI * j as f64 / b as f64,
                    // deeper nodes: fan around the direction away from
                    // the parent, leaving one slot for the back edge
                    Some(back) => {
                        let away = back + std::f64::consts::PI;
                        let step = 2.0 * std::f64::consts::PI / (b + 1) as f64;
                        away + step * (j as f64 - (b as f64 - 1.0) / 2.0)
                    }
                };
                let v = TangentVector::new(
                    vec![tangent_len * angle.cos(), tangent_len * angle.sin()],
                    base.clone(),
                )?;
                let child_point = exp_map(&base, &v)?;
                let child = points.len();
                // outgoing direction seen from the child
                let back_v = log_map(&child_point, &base)?;
                let back_angle = back_v.coords()[1].atan2(back_v.coords()[0]);
                parents.push(Some(node));
                depths.push(depths[node] + 1);
                points.push(child_point);
                next.push((child, Some(back_angle)));
            }
        }
        frontier = next;
    }

    Ok(EmbeddedTree {
        parents,
        depths,
        points,
        spec: spec.clone(),
    })
}

/// Write the embedding as CSV: `node,parent,depth,x1,x2`.
pub fn write_tree_csv<W: std::io::Write>(
    mut w: W,
    tree: &EmbeddedTree,
    hash: &str,
) -> std::io::Result<()> {
    writeln!(w, "# config_hash={hash}")?;
    writeln!(w, "node,parent,depth,x1,x2")?;
    for i in 0..tree.len() {
        let parent = tree.parents[i]
            .map(|p| p.to_string())
            .unwrap_or_else(|| "-1".to_string());
        writeln!(
            w,
            "{i},{parent},{},{},{}",
            tree.depths[i],
            tree.points[i].coords()[0],
            tree.points[i].coords()[1]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use poincare::ball::distance;

    #[test]
    fn root_sits_at_origin() {
        let spec = TreeSpec::default();
        let tree = embed_tree(&spec, Curvature::new(1.0).unwrap()).unwrap();
        assert!(tree.points[0].norm() < 1e-15);
        let expected: usize = (0..=spec.depth).map(|d| spec.branching.pow(d as u32)).sum();
        assert_eq!(tree.len(), expected);
    }

    #[test]
    fn depth_two_binary_tree_children_are_antipodal() {
        let spec = TreeSpec {
            depth: 2,
            branching: 2,
            seed: 0,
            edge_len: 1.0,
        };
        let c = Curvature::new(1.0).unwrap();
        let tree = embed_tree(&spec, c).unwrap();
        let a = &tree.points[1];
        let b = &tree.points[2];
        assert!((distance(&tree.points[0], a).unwrap() - 1.0).abs() < 1e-6);
        assert!((distance(&tree.points[0], b).unwrap() - 1.0).abs() < 1e-6);
        // angle pi apart: opposite directions from the origin
        let angle_a = a.coords()[1].atan2(a.coords()[0]);
        let angle_b = b.coords()[1].atan2(b.coords()[0]);
        let gap = (angle_a - angle_b).abs();
        assert!((gap - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn every_edge_has_the_requested_length() {
        let spec = TreeSpec {
            depth: 4,
            branching: 3,
            seed: 7,
            edge_len: 0.8,
        };
        let c = Curvature::new(1.0).unwrap();
        let tree = embed_tree(&spec, c).unwrap();
        for i in 1..tree.len() {
            let p = tree.parents[i].unwrap();
            let d = distance(&tree.points[i], &tree.points[p]).unwrap();
            assert!((d - 0.8).abs() < 1e-6, "edge {p}->{i} has length {d}");
        }
    }

    #[test]
    fn sibling_fan_angles_are_equal() {
        let spec = TreeSpec {
            depth: 3,
            branching: 3,
            seed: 0,
            edge_len: 1.0,
        };
        let c = Curvature::new(1.0).unwrap();
        let tree = embed_tree(&spec, c).unwrap();
        // children of node 1 are found by scanning parents
        let kids: Vec<usize> = (0..tree.len())
            .filter(|&i| tree.parents[i] == Some(1))
            .collect();
        assert_eq!(kids.len(), 3);
        let base = &tree.points[1];
        let angles: Vec<f64> = kids
            .iter()
            .map(|&k| {
                let v = log_map(base, &tree.points[k]).unwrap();
                v.coords()[1].atan2(v.coords()[0])
            })
            .collect();
        let gap01 = (angles[1] - angles[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let gap12 = (angles[2] - angles[1]).rem_euclid(2.0 * std::f64::consts::PI);
        assert!((gap01 - gap12).abs() < 1e-9, "gaps {gap01} vs {gap12}");
    }

    #[test]
    fn subtree_membership() {
        let spec = TreeSpec {
            depth: 2,
            branching: 2,
            seed: 0,
            edge_len: 1.0,
        };
        let tree = embed_tree(&spec, Curvature::new(1.0).unwrap()).unwrap();
        // nodes: 0 root; 1,2 depth-1; 3,4 children of 1; 5,6 children of 2
        assert_eq!(tree.subtree(1), vec![1, 3, 4]);
        assert_eq!(tree.subtree(0).len(), 7);
    }
}
