//! Uniform symmetric inventory lattice shared by the solver, the policy
//! tables and the simulator.

use crate::model::SizeGrid;
use thiserror::Error;

/// Errors raised when constructing or querying an inventory grid.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("inventory limit must be finite and strictly positive, got {q_max}")]
    BadBounds { q_max: f64 },
    #[error("grid needs at least 3 nodes, got {n}")]
    TooFewNodes { n: usize },
    #[error("grid must be symmetric about zero, which requires an odd node count, got {n}")]
    EvenNodeCount { n: usize },
    #[error("trade size {size} is not an integer multiple of the grid step {step}")]
    SizeOffGrid { size: f64, step: f64 },
}

/// Uniform inventory lattice spanning `[-q_max, q_max]` inclusive, symmetric
/// about zero (odd node count). Trade sizes must land on nodes so that every
/// fill maps one node to another; see [`InventoryGrid::size_offsets`].
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryGrid {
    nodes: Vec<f64>,
    step: f64,
    q_max: f64,
}

impl InventoryGrid {
    pub fn new(q_max: f64, n_nodes: usize) -> Result<Self, GridError> {
        if !q_max.is_finite() || q_max <= 0.0 {
            return Err(GridError::BadBounds { q_max });
        }
        if n_nodes < 3 {
            return Err(GridError::TooFewNodes { n: n_nodes });
        }
        if n_nodes % 2 == 0 {
            return Err(GridError::EvenNodeCount { n: n_nodes });
        }
        let half = ((n_nodes - 1) / 2) as f64;
        // (i - half)/half negates exactly under i -> n-1-i, so the lattice is
        // symmetric to the last bit and hits both endpoints exactly.
        let nodes: Vec<f64> = (0..n_nodes)
            .map(|i| (i as f64 - half) / half * q_max)
            .collect();
        Ok(Self {
            nodes,
            step: q_max / half,
            q_max,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Grid spacing, M$.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Inventory limit, M$.
    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    /// Index of the node nearest to `q`, clamped to the grid.
    pub fn nearest_index(&self, q: f64) -> usize {
        let i = ((q - self.nodes[0]) / self.step).round();
        (i.max(0.0) as usize).min(self.nodes.len() - 1)
    }

    /// Index of the node equal to `q` within 1e-9, if any.
    pub fn index_of(&self, q: f64) -> Option<usize> {
        let i = self.nearest_index(q);
        ((self.nodes[i] - q).abs() <= 1e-9).then_some(i)
    }

    /// Node-index offset of each trade size, checking that every size is an
    /// integer multiple of the step (so `q ± z` maps node to node).
    pub fn size_offsets(&self, sizes: &SizeGrid) -> Result<Vec<usize>, GridError> {
        sizes
            .sizes()
            .iter()
            .map(|&z| {
                let offset = (z / self.step).round();
                if (offset * self.step - z).abs() > 1e-9 * z.abs().max(1.0) || offset < 1.0 {
                    Err(GridError::SizeOffGrid {
                        size: z,
                        step: self.step,
                    })
                } else {
                    Ok(offset as usize)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_sizes() -> SizeGrid {
        SizeGrid::new(vec![1.0, 5.0, 10.0, 20.0], vec![0.76, 0.15, 0.075, 0.015]).unwrap()
    }

    #[test]
    fn reference_grid_shape() {
        let g = InventoryGrid::new(100.0, 201).unwrap();
        assert_eq!(g.n_nodes(), 201);
        assert_eq!(g.step(), 1.0);
        assert_eq!(g.node(0), -100.0);
        assert_eq!(g.node(100), 0.0);
        assert_eq!(g.node(200), 100.0);
    }

    #[test]
    fn grid_is_exactly_symmetric_and_uniform() {
        for (q_max, n) in [(100.0, 201), (100.0, 401), (7.0, 15), (3.3, 23)] {
            let g = InventoryGrid::new(q_max, n).unwrap();
            assert_eq!(g.node(0), -q_max);
            assert_eq!(g.node(n - 1), q_max);
            for i in 0..n {
                assert_eq!(g.node(i), -g.node(n - 1 - i), "mirror node {i}");
            }
            for w in g.nodes().windows(2) {
                assert!((w[1] - w[0] - g.step()).abs() < 1e-12 * q_max);
            }
        }
    }

    #[test]
    fn nearest_index_rounds_and_clamps() {
        let g = InventoryGrid::new(100.0, 201).unwrap();
        assert_eq!(g.nearest_index(0.0), 100);
        assert_eq!(g.nearest_index(0.49), 100);
        assert_eq!(g.nearest_index(0.51), 101);
        assert_eq!(g.nearest_index(-3.2), 97);
        assert_eq!(g.nearest_index(250.0), 200);
        assert_eq!(g.nearest_index(-250.0), 0);
    }

    #[test]
    fn index_of_requires_a_node() {
        let g = InventoryGrid::new(100.0, 201).unwrap();
        assert_eq!(g.index_of(17.0), Some(117));
        assert_eq!(g.index_of(17.0 + 5e-10), Some(117));
        assert_eq!(g.index_of(17.3), None);
    }

    #[test]
    fn size_offsets_for_reference_sizes() {
        let g = InventoryGrid::new(100.0, 201).unwrap();
        assert_eq!(g.size_offsets(&reference_sizes()).unwrap(), vec![1, 5, 10, 20]);
        let fine = InventoryGrid::new(100.0, 401).unwrap();
        assert_eq!(
            fine.size_offsets(&reference_sizes()).unwrap(),
            vec![2, 10, 20, 40]
        );
    }

    #[test]
    fn size_offsets_reject_off_grid_sizes() {
        let g = InventoryGrid::new(100.0, 201).unwrap();
        let bad = SizeGrid::new(vec![1.0, 2.5], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            g.size_offsets(&bad),
            Err(GridError::SizeOffGrid { .. })
        ));
        // A size smaller than the step cannot map node to node either.
        let coarse = InventoryGrid::new(100.0, 101).unwrap();
        let tiny = SizeGrid::new(vec![1.0], vec![1.0]).unwrap();
        assert!(coarse.size_offsets(&tiny).is_err());
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(InventoryGrid::new(0.0, 201).is_err());
        assert!(InventoryGrid::new(-5.0, 201).is_err());
        assert!(InventoryGrid::new(f64::NAN, 201).is_err());
        assert!(InventoryGrid::new(100.0, 2).is_err());
        assert!(InventoryGrid::new(100.0, 200).is_err());
    }
}
