//! Dense complex matrices stored as paired real/imaginary row-major arrays.

use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

/// Absolute tolerance on `|A - Aᴴ|` accepted by the Hermitian consumers.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Dense complex matrix. Real-valued data is represented with an all-zero
/// imaginary plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != rows * cols || im.len() != rows * cols {
            return Err(dim_err(
                "new",
                format!(
                    "{}x{} needs {} entries, got re={} im={}",
                    rows,
                    cols,
                    rows * cols,
                    re.len(),
                    im.len()
                ),
            ));
        }
        Ok(Self { rows, cols, re, im })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            re: vec![0.0; rows * cols],
            im: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.re[i * n + i] = 1.0;
        }
        m
    }

    /// Real matrix from row-major data.
    pub fn from_real(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(rows, cols, data, vec![0.0; n])
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            re: vec![value],
            im: vec![0.0],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = f(i, j);
                m.re[i * cols + j] = z.re;
                m.im[i * cols + j] = z.im;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.cols + j;
        Complex64::new(self.re[k], self.im[k])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        let k = i * self.cols + j;
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    /// Value of a 1×1 matrix's real part.
    pub fn scalar_value(&self) -> f64 {
        debug_assert_eq!(self.len(), 1);
        self.re[0]
    }

    pub fn is_real(&self) -> bool {
        self.im.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).all(|v| v.is_finite())
    }

    /// Drops the imaginary plane.
    pub fn real_part(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.clone(),
            im: vec![0.0; self.len()],
        }
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(dim_err(
                op,
                format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "subtract")?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.iter().zip(&other.re).map(|(&a, &b)| f(a, b)).collect(),
            im: self.im.iter().zip(&other.im).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other, "add")?;
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += b;
        }
        for (a, b) in self.im.iter_mut().zip(&other.im) {
            *a += b;
        }
        Ok(())
    }

    /// In-place `self += s * other` for real `s`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other, "axpy")?;
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += s * b;
        }
        for (a, b) in self.im.iter_mut().zip(&other.im) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.iter().map(|v| v * s).collect(),
            im: self.im.iter().map(|v| v * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for k in 0..self.len() {
            let (a, b) = (self.re[k], self.im[k]);
            out.re[k] = a * s.re - b * s.im;
            out.im[k] = a * s.im + b * s.re;
        }
        out
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "hadamard")?;
        let mut out = Self::zeros(self.rows, self.cols);
        for k in 0..self.len() {
            let (a, b) = (self.re[k], self.im[k]);
            let (c, d) = (other.re[k], other.im[k]);
            out.re[k] = a * c - b * d;
            out.im[k] = a * d + b * c;
        }
        Ok(out)
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.clone(),
            im: self.im.iter().map(|v| -v).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let src = i * self.cols + j;
                let dst = j * self.rows + i;
                out.re[dst] = self.re[src];
                out.im[dst] = -self.im[src];
            }
        }
        out
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let src = i * self.cols + j;
                let dst = j * self.rows + i;
                out.re[dst] = self.re[src];
                out.im[dst] = self.im[src];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(dim_err(
                "matmul",
                format!(
                    "{}x{} times {}x{}: inner dimensions {} != {}",
                    self.rows, self.cols, other.rows, other.cols, self.cols, other.rows
                ),
            ));
        }
        let (m, n, p) = (self.rows, self.cols, other.cols);
        let mut out = Self::zeros(m, p);
        let a_real = self.is_real();
        let b_real = other.is_real();
        for i in 0..m {
            let (cr, ci) = (
                &mut out.re[i * p..(i + 1) * p],
                &mut out.im[i * p..(i + 1) * p],
            );
            for k in 0..n {
                let ar = self.re[i * n + k];
                let ai = self.im[i * n + k];
                let br = &other.re[k * p..(k + 1) * p];
                let bi = &other.im[k * p..(k + 1) * p];
                if a_real && b_real {
                    for j in 0..p {
                        cr[j] += ar * br[j];
                    }
                } else {
                    for j in 0..p {
                        cr[j] += ar * br[j] - ai * bi[j];
                        ci[j] += ar * bi[j] + ai * br[j];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Real part of the trace.
    pub fn trace_real(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(dim_err("trace-real", format!("{}x{} is not square", self.rows, self.cols)));
        }
        Ok((0..self.rows).map(|i| self.re[i * self.cols + i]).sum())
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.re.iter().chain(self.im.iter()).map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let a = self.get(i, j);
                let b = self.get(j, i).conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// Checks Hermitian structure within [`HERMITIAN_TOL`] and returns `(A + Aᴴ)/2`.
    pub fn hermitian_checked(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(dim_err("hermitian check", format!("{}x{} is not square", self.rows, self.cols)));
        }
        let asym = self.hermitian_asymmetry();
        if !(asym <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            out.im[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let a = self.get(i, j);
                let b = self.get(j, i).conj();
                let avg = (a + b) * 0.5;
                out.set(i, j, avg);
                out.set(j, i, avg.conj());
            }
        }
        Ok(out)
    }

    /// Lower-triangular Cholesky factor `L` with `A = L Lᴴ`.
    pub fn cholesky(&self) -> Result<Self> {
        let a = self.hermitian_checked()?;
        let n = a.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = a.re[j * n + j];
            for k in 0..j {
                let v = l.get(j, k);
                d -= v.norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Singular { pivot: j });
            }
            let ljj = d.sqrt();
            l.re[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / ljj);
            }
        }
        Ok(l)
    }

    /// Natural log-determinant of a Hermitian positive definite matrix.
    pub fn logdet_hpd(&self) -> Result<f64> {
        let l = self.cholesky()?;
        let n = l.rows;
        Ok(2.0 * (0..n).map(|i| l.re[i * n + i].ln()).sum::<f64>())
    }

    /// Inverse of a Hermitian positive definite matrix through its Cholesky factor.
    pub fn inverse_hpd(&self) -> Result<Self> {
        let l = self.cholesky()?;
        let n = l.rows;
        // Forward substitution for L⁻¹ (lower triangular).
        let mut linv = Self::zeros(n, n);
        for col in 0..n {
            linv.re[col * n + col] = 1.0 / l.re[col * n + col];
            for i in (col + 1)..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in col..i {
                    s -= l.get(i, k) * linv.get(k, col);
                }
                linv.set(i, col, s / l.re[i * n + i]);
            }
        }
        let inv = linv.hermitian().matmul(&linv)?;
        inv.hermitian_checked()
    }

    /// Rows `start..start+count`.
    pub fn row_block(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.rows {
            return Err(dim_err(
                "row block",
                format!("rows {}..{} of a {}-row matrix", start, start + count, self.rows),
            ));
        }
        let c = self.cols;
        Ok(Self {
            rows: count,
            cols: c,
            re: self.re[start * c..(start + count) * c].to_vec(),
            im: self.im[start * c..(start + count) * c].to_vec(),
        })
    }

    pub fn column(&self, j: usize) -> Self {
        Self::from_fn(self.rows, 1, |i, _| self.get(i, j))
    }

    /// Stacks matrices vertically.
    pub fn concat_rows(parts: &[Self]) -> Result<Self> {
        let cols = parts.first().map(|p| p.cols).unwrap_or(0);
        let mut out = Self::zeros(0, cols);
        for p in parts {
            if p.cols != cols {
                return Err(dim_err("concat-rows", format!("{} vs {} columns", p.cols, cols)));
            }
            out.re.extend_from_slice(&p.re);
            out.im.extend_from_slice(&p.im);
            out.rows += p.rows;
        }
        Ok(out)
    }

    /// Places matrices side by side.
    pub fn concat_cols(parts: &[Self]) -> Result<Self> {
        let rows = parts.first().map(|p| p.rows).unwrap_or(0);
        if let Some(bad) = parts.iter().find(|p| p.rows != rows) {
            return Err(dim_err("concat-columns", format!("{} vs {} rows", bad.rows, rows)));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            for i in 0..rows {
                for j in 0..p.cols {
                    out.re[i * cols + offset + j] = p.re[i * p.cols + j];
                    out.im[i * cols + offset + j] = p.im[i * p.cols + j];
                }
            }
            offset += p.cols;
        }
        Ok(out)
    }

    /// Columns `start..start+count`.
    pub fn col_block(&self, start: usize, count: usize) -> Result<Self> {
        if start + count > self.cols {
            return Err(dim_err(
                "column block",
                format!("columns {}..{} of a {}-column matrix", start, start + count, self.cols),
            ));
        }
        Ok(Self::from_fn(self.rows, count, |i, j| self.get(i, start + j)))
    }

    /// `[Re A | Im A]`, a real matrix with twice the columns.
    pub fn split_real_imag(&self) -> Self {
        let (r, c) = self.shape();
        let mut out = Self::zeros(r, 2 * c);
        for i in 0..r {
            for j in 0..c {
                out.re[i * 2 * c + j] = self.re[i * c + j];
                out.re[i * 2 * c + c + j] = self.im[i * c + j];
            }
        }
        out
    }

    /// Inverse of [`split_real_imag`](Self::split_real_imag): left half becomes
    /// the real part, right half the imaginary part. Imaginary input is ignored.
    pub fn join_real_imag(&self) -> Result<Self> {
        if self.cols % 2 != 0 {
            return Err(dim_err("join-real-imag", format!("odd column count {}", self.cols)));
        }
        let (r, c2) = self.shape();
        let c = c2 / 2;
        let mut out = Self::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                out.re[i * c + j] = self.re[i * c2 + j];
                out.im[i * c + j] = self.re[i * c2 + c + j];
            }
        }
        Ok(out)
    }

    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            re: self.re.iter().map(|&v| f(v)).collect(),
            im: vec![0.0; self.len()],
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.re
            .iter()
            .zip(&other.re)
            .chain(self.im.iter().zip(&other.im))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
