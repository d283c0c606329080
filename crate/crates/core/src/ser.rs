//! Serialization of `ndarray` values as plain JSON arrays.

use ndarray::Array1;
use serde::Serializer;

pub fn array1<S: Serializer>(a: &Array1<f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(a.iter())
}

