#![allow(dead_code)]

pub mod quad;

use lorenzfit::{FamilySpec, GroupedDataset};

pub fn exact_deciles(spec: &FamilySpec, mean: Option<f64>) -> GroupedDataset {
    let u: Vec<f64> = (1..=10).map(|j| j as f64 / 10.0).collect();
    let s: Vec<f64> = u.iter().map(|&x| spec.lorenz(x).unwrap()).collect();
    GroupedDataset::new(spec.to_string(), u, s, mean, None).unwrap()
}
