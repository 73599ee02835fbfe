use ndarray::Array2;

/// Pairwise origin labels over a list of embeddings: entry (i, j) is
/// positive iff rows i and j come from the same source sequence. Symmetric,
/// with a positive diagonal.
#[derive(Debug, Clone)]
pub struct PairLabels {
    positive: Array2<bool>,
    n_sources: usize,
}

impl PairLabels {
    /// Builds labels from per-row origin indices.
    pub fn from_origins(origins: &[usize]) -> Self {
        let n = origins.len();
        let mut positive = Array2::from_elem((n, n), false);
        for i in 0..n {
            for j in 0..n {
                positive[(i, j)] = origins[i] == origins[j];
            }
        }
        let mut distinct: Vec<usize> = origins.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        PairLabels {
            positive,
            n_sources: distinct.len(),
        }
    }

    /// Identity labels: row i pairs only with itself (alignment of two
    /// encoders over one batch).
    pub fn identity(n: usize) -> Self {
        PairLabels::from_origins(&(0..n).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.positive.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    /// Number of distinct source sequences |C|.
    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn is_positive(&self, i: usize, j: usize) -> bool {
        self.positive[(i, j)]
    }

    /// z ∈ {1, 0} convention.
    pub fn z01(&self, i: usize, j: usize) -> f64 {
        if self.positive[(i, j)] {
            1.0
        } else {
            0.0
        }
    }

    /// z ∈ {1, −1} convention.
    pub fn zpm(&self, i: usize, j: usize) -> f64 {
        if self.positive[(i, j)] {
            1.0
        } else {
            -1.0
        }
    }
}
