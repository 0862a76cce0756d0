//! Discrete carrier for trajectories and controls: a strictly increasing
//! node vector with one value row per node.

use super::ProblemError;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    nodes: Vec<f64>,
    values: Vec<Vec<f64>>,
    dim: usize,
}

impl GridFn {
    pub fn new(nodes: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self, ProblemError> {
        if nodes.len() < 2 {
            return Err(ProblemError::TooFewNodes(nodes.len()));
        }
        if values.len() != nodes.len() {
            return Err(ProblemError::RowCountMismatch {
                nodes: nodes.len(),
                rows: values.len(),
            });
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(ProblemError::NonIncreasingNodes { index: i + 1 });
            }
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(ProblemError::RaggedValues {
                row: 0,
                got: 0,
                expected: 1,
            });
        }
        for (row, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(ProblemError::RaggedValues {
                    row,
                    got: v.len(),
                    expected: dim,
                });
            }
        }
        Ok(GridFn { nodes, values, dim })
    }

    /// Uniform grid on `[a, b]` with `nodes` node values produced by `f`.
    pub fn sampled(
        a: f64,
        b: f64,
        node_count: usize,
        mut f: impl FnMut(f64) -> Vec<f64>,
    ) -> Result<Self, ProblemError> {
        let nodes = uniform_nodes(a, b, node_count);
        let values = nodes.iter().map(|&t| f(t)).collect();
        GridFn::new(nodes, values)
    }

    /// Constant value on the given nodes.
    pub fn constant(nodes: Vec<f64>, value: Vec<f64>) -> Result<Self, ProblemError> {
        let values = vec![value; nodes.len()];
        GridFn::new(nodes, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Index of the interval containing `t`, clamped to `[0, len-2]`.
    /// A node belongs to the interval it opens (left semantics).
    pub fn segment_index(&self, t: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.nodes.len() - 2),
        }
    }

    /// Piecewise-linear interpolation (state semantics), clamped at the
    /// ends. Exact at nodes.
    pub fn eval_linear(&self, t: f64) -> Vec<f64> {
        if let Ok(i) = self
            .nodes
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            return self.values[i].clone();
        }
        let i = self.segment_index(t);
        let (t0, t1) = (self.nodes[i], self.nodes[i + 1]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.values[i]
            .iter()
            .zip(&self.values[i + 1])
            .map(|(a, b)| a + s * (b - a))
            .collect()
    }

    /// Piecewise-constant left-value lookup (control semantics): the value
    /// on `[nodes[i], nodes[i+1])` is row `i`; past the last node the final
    /// interval's value applies.
    pub fn eval_step(&self, t: f64) -> &[f64] {
        &self.values[self.segment_index(t)]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|row| row.iter().all(|v| v.is_finite()))
    }
}

/// Uniform node vector `a + i (b - a) / (count - 1)` with the endpoints
/// pinned bitwise.
pub fn uniform_nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    let n = count.max(2) - 1;
    let mut nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    nodes[0] = a;
    nodes[n] = b;
    nodes
}
