use serde::{Deserialize, Serialize};

/// Dense row-major 2-D array of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data length");
        Self { rows, cols, data }
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Self::from_vec(1, data.len(), data)
    }

    pub fn scalar(v: f64) -> Self {
        Self::from_vec(1, 1, vec![v])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|&x| f(x)).collect(),
        )
    }

    pub fn zip(&self, o: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.shape(), o.shape(), "elementwise shape");
        Self::from_vec(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&o.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add_assign(&mut self, o: &Self) {
        assert_eq!(self.shape(), o.shape(), "add_assign shape");
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += b;
        }
    }

    /// `self · o`.
    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "matmul inner dims");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * o.cols..(i + 1) * o.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(o.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · o`.
    pub fn t_matmul(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows, "t_matmul dims");
        let mut out = Self::zeros(self.cols, o.cols);
        for k in 0..self.rows {
            let b = o.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * o.cols..(i + 1) * o.cols];
                for (d, &bv) in dst.iter_mut().zip(b) {
                    *d += a * bv;
                }
            }
        }
        out
    }

    /// `self · oᵀ`.
    pub fn matmul_t(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.cols, "matmul_t dims");
        let mut out = Self::zeros(self.rows, o.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..o.rows {
                out.data[i * o.rows + j] = a.iter().zip(o.row(j)).map(|(x, y)| x * y).sum();
            }
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
