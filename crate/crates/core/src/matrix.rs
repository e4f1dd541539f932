//! Dense row-major node × channel matrices and their TSV persistence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Deref;
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed;

/// A dense `rows × cols` matrix of nonnegative reals, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidValue(format!("matrix entry {v} is not a finite nonnegative number")));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    /// Entrywise Uniform(0, 1) draw.
    pub fn random_uniform(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let data = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
        Matrix { rows, cols, data }
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
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.cols + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        self.data[i * self.cols + k] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols.max(1)) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Multiply every entry by `c`.
    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Rows and columns reordered: output row `r` is input row `row_order[r]`.
    pub fn permuted(&self, row_order: &[usize], col_order: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(row_order.len() * col_order.len());
        for &i in row_order {
            let row = self.row(i);
            data.extend(col_order.iter().map(|&k| row[k]));
        }
        Matrix {
            rows: row_order.len(),
            cols: col_order.len(),
            data,
        }
    }

    /// One row per line, tab-separated, 17 significant digits.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join("\t"))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_tsv(BufWriter::new(file))
    }

    pub fn parse_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = data.len();
            for tok in line.split('\t') {
                let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("`{tok}` is not a number"),
                })?;
                data.push(v);
            }
            let width = data.len() - before;
            match cols {
                None => cols = Some(width),
                Some(c) if c != width => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected {c} columns, found {width}"),
                    })
                }
                _ => {}
            }
            rows += 1;
        }
        Matrix::from_vec(rows, cols.unwrap_or(0), data)
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Matrix::parse_tsv(BufReader::new(file))
    }
}

/// LCN channel-attachment probabilities `p[i][k]`, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMatrix(Matrix);

impl ParamMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if let Some(v) = m.as_slice().iter().find(|v| **v > 1.0) {
            return Err(Error::InvalidValue(format!("probability {v} exceeds 1")));
        }
        Ok(ParamMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        ParamMatrix::new(Matrix::from_rows(rows)?)
    }

    pub fn random_uniform(num_nodes: usize, num_channels: usize, seed: u64) -> Self {
        ParamMatrix(Matrix::random_uniform(num_nodes, num_channels, seed))
    }

    pub fn zeros(num_nodes: usize, num_channels: usize) -> Self {
        ParamMatrix(Matrix::zeros(num_nodes, num_channels))
    }

    pub fn num_channels(&self) -> usize {
        self.0.cols()
    }

    pub fn num_nodes(&self) -> usize {
        self.0.rows()
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        ParamMatrix::new(Matrix::load_tsv(path)?)
    }

    /// Caller guarantees every entry is within `[0, 1]`.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert!(m.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        ParamMatrix(m)
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }
}

impl Deref for ParamMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(ParamMatrix::from_rows(&[vec![0.5, 1.5]]).is_err());
        assert!(Matrix::from_rows(&[vec![-0.1]]).is_err());
        assert!(Matrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(Matrix::from_rows(&[vec![0.1], vec![0.2, 0.3]]).is_err());
    }

    #[test]
    fn tsv_uses_seventeen_significant_digits() {
        let m = Matrix::from_rows(&[vec![0.1, 1.0]]).unwrap();
        let mut buf = Vec::new();
        m.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1.0000000000000001e-1\t1.0000000000000000e0\n"
        );
    }

    #[test]
    fn tsv_rejects_ragged_rows() {
        assert!(Matrix::parse_tsv("0.1\t0.2\n0.3\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn tsv_round_trip_is_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in any::<u64>(),
        ) {
            let m = Matrix::random_uniform(rows, cols, seed).scaled(7.0);
            let mut buf = Vec::new();
            m.write_tsv(&mut buf).unwrap();
            prop_assert_eq!(Matrix::parse_tsv(buf.as_slice()).unwrap(), m);
        }
    }
}
