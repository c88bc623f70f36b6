use serde::{Deserialize, Serialize};

use crate::tensor::{Tensor, TensorError};

/// Dense `rows × dim` block of `f32` embeddings, one item per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self, TensorError> {
        if dim == 0 || rows * dim != data.len() {
            return Err(TensorError::InvalidShape {
                rows,
                cols: dim,
                len: data.len(),
            });
        }
        Ok(Self { rows, dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self, TensorError> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(TensorError::Empty { op: "EmbeddingMatrix::from_rows" })?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(TensorError::ShapeMismatch {
                    op: "EmbeddingMatrix::from_rows",
                    left: [1, dim],
                    right: [1, r.len()],
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, data)
    }

    /// Narrows a tensor to `f32` storage.
    pub fn from_tensor(t: &Tensor) -> Self {
        Self {
            rows: t.rows(),
            dim: t.cols(),
            data: t.to_f32(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.rows);
        Self {
            rows: n,
            dim: self.dim,
            data: self.data[..n * self.dim].to_vec(),
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            dim: self.dim,
            data,
        }
    }

    pub fn to_tensor(&self) -> Result<Tensor, TensorError> {
        Tensor::from_f32(self.rows, self.dim, &self.data)
    }
}
