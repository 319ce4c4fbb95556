//! Compressed-row view of a dense [`Operator`] for fast repeated products.

use crate::fockspace::Operator;
use crate::C64;

#[derive(Debug, Clone)]
pub(crate) struct Csr {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    pub(crate) fn from_operator(op: &Operator) -> Self {
        let dim = op.dim();
        let m = op.matrix();
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let z = m[(i, j)];
                if z.re != 0.0 || z.im != 0.0 {
                    cols.push(j);
                    vals.push(z);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            dim,
            row_start,
            cols,
            vals,
        }
    }

    #[cfg(test)]
    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out += scale · A x`
    pub(crate) fn mul_add(&self, scale: C64, x: &[C64], out: &mut [C64]) {
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            out[i] += scale * acc;
        }
    }

    /// `out += scale · A† x`
    pub(crate) fn adjoint_mul_add(&self, scale: C64, x: &[C64], out: &mut [C64]) {
        for i in 0..self.dim {
            let xi = scale * x[i];
            for k in self.row_start[i]..self.row_start[i + 1] {
                out[self.cols[k]] += self.vals[k].conj() * xi;
            }
        }
    }

    /// `⟨x|A|x⟩`
    pub(crate) fn expectation(&self, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            let mut row = C64::new(0.0, 0.0);
            for k in self.row_start[i]..self.row_start[i + 1] {
                row += self.vals[k] * x[self.cols[k]];
            }
            acc += x[i].conj() * row;
        }
        acc
    }
}
