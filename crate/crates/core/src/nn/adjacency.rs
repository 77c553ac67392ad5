use ndarray::{Array2, ArrayView2};

use crate::graphrep::Graph;

/// Symmetrically normalized adjacency with self-loops, in CSR form.
///
/// `Â = A + I`, `D̂ = diag(rowsum Â)`, stored matrix `D̂^-1/2 Â D̂^-1/2`. A node
/// that already has a self-loop gets one more unit, for a self weight of 2
/// before normalization. Since a self-loop counts once in the degree, every
/// node ends up with `D̂_ii = degree + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormAdj {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl NormAdj {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.num_nodes();
        let inv_sqrt: Vec<f64> = g
            .degrees()
            .iter()
            .map(|&d| 1.0 / ((d + 1) as f64).sqrt())
            .collect();
        let nnz: usize = g.degrees().iter().map(|&d| d + 1).sum();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for i in 0..n {
            let mut self_done = false;
            let self_weight = if g.has_self_loop(i) { 2.0 } else { 1.0 };
            for &j in g.neighbors(i) {
                if j == i {
                    continue;
                }
                if j > i && !self_done {
                    indices.push(i as u32);
                    values.push(self_weight * inv_sqrt[i] * inv_sqrt[i]);
                    self_done = true;
                }
                indices.push(j as u32);
                values.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            if !self_done {
                indices.push(i as u32);
                values.push(self_weight * inv_sqrt[i] * inv_sqrt[i]);
            }
            indptr.push(indices.len());
        }
        Self {
            indptr,
            indices,
            values,
        }
    }

    /// Block-diagonal concatenation; block `b` occupies the rows after blocks `0..b`.
    pub fn block_diag<'a, I>(blocks: I) -> Self
    where
        I: IntoIterator<Item = &'a NormAdj>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut offset = 0u32;
        for b in blocks {
            let base = indices.len();
            indices.extend(b.indices.iter().map(|&j| j + offset));
            values.extend_from_slice(&b.values);
            indptr.extend(b.indptr[1..].iter().map(|&p| p + base));
            offset += b.num_nodes() as u32;
        }
        Self {
            indptr,
            indices,
            values,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(column, weight)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .map(|&j| j as usize)
            .zip(self.values[r].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut d = Array2::zeros((n, n));
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[[i, j]] = v;
            }
        }
        d
    }

    /// `Â_norm · x`. The matrix is symmetric, so this is also the transpose product.
    pub fn aggregate(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.num_nodes(), "aggregate: row count mismatch");
        let c = x.ncols();
        let n = self.num_nodes();
        let owned;
        let xs = match x.as_slice() {
            Some(s) => s,
            None => {
                owned = x.as_standard_layout().into_owned();
                owned.as_slice().expect("standard layout")
            }
        };
        let mut out = vec![0.0; n * c];
        for (i, orow) in out.chunks_exact_mut(c.max(1)).enumerate().take(n) {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k] as usize;
                let v = self.values[k];
                let xr = &xs[j * c..(j + 1) * c];
                for (o, &xv) in orow.iter_mut().zip(xr) {
                    *o += v * xv;
                }
            }
        }
        Array2::from_shape_vec((n, c), out).expect("shape matches buffer")
    }
}
