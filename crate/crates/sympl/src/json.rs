//! Serde adapters for dense matrices and vectors.
//!
//! Matrices serialize as `{"rows", "cols", "data"}` with `data` row-major.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Option<DMatrix<f64>> {
    if data.len() != rows * cols {
        return None;
    }
    Some(DMatrix::from_row_slice(rows, cols, data))
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: m.nrows(),
            cols: m.ncols(),
            data: row_major(m),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        from_row_major(r.rows, r.cols, &r.data)
            .ok_or_else(|| serde::de::Error::custom("data length does not match rows*cols"))
    }
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}

pub mod matrix_list {
    use super::*;

    struct Ref<'a>(&'a DMatrix<f64>);

    impl Serialize for Ref<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::matrix::serialize(self.0, s)
        }
    }

    #[derive(Deserialize)]
    struct Own(#[serde(with = "super::matrix")] DMatrix<f64>);

    pub fn serialize<S: Serializer>(v: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        let refs: Vec<Ref<'_>> = v.iter().map(Ref).collect();
        refs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let v = Vec::<Own>::deserialize(d)?;
        Ok(v.into_iter().map(|o| o.0).collect())
    }
}
