//! Population spectra used in the simulation designs.
//!
//! | name              | spectrum                                              |
//! |-------------------|-------------------------------------------------------|
//! | `model1`/`table1` | `0.5 delta_0.5 + 0.5 delta_1.5`                       |
//! | `model2`/`table2` | `0.3 delta_0.2 + 0.4 delta_1 + 0.3 delta_1.8`         |
//! | `model3`          | `0.5 delta_{1-x} + 0.5 delta_{1+x}`                   |
//! | `model4`          | quarter masses at `0.5 -+ x` and `1.5 -+ x`           |
//!
//! Coinciding atoms (e.g. `x = 0`) are merged, so `model3` at `x = 0` is the
//! spherical case.

use crate::error::{Error, Result};
use crate::psd::DiscretePsd;

/// A named spectrum, possibly indexed by a separation parameter `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Model1,
    Model2,
    Model3,
    Model4,
}

const MODELS: &[(&str, Model)] = &[
    ("model1", Model::Model1),
    ("table1", Model::Model1),
    ("model2", Model::Model2),
    ("table2", Model::Model2),
    ("model3", Model::Model3),
    ("model4", Model::Model4),
];

pub fn model_names() -> Vec<&'static str> {
    MODELS.iter().map(|(n, _)| *n).collect()
}

impl Model {
    pub fn by_name(name: &str) -> Result<Self> {
        MODELS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, m)| *m)
            .ok_or_else(|| Error::UnknownName {
                kind: "model",
                name: name.to_string(),
                available: model_names().join(", "),
            })
    }

    /// Whether the spectrum depends on `x`.
    pub fn takes_x(self) -> bool {
        matches!(self, Model::Model3 | Model::Model4)
    }

    /// Order under the null hypothesis of the test design.
    pub fn null_order(self) -> usize {
        match self {
            Model::Model1 | Model::Model4 => 2,
            Model::Model2 => 3,
            Model::Model3 => 1,
        }
    }

    pub fn psd(self, x: f64) -> Result<DiscretePsd> {
        let (atoms, weights) = match self {
            Model::Model1 => (vec![0.5, 1.5], vec![0.5, 0.5]),
            Model::Model2 => (vec![0.2, 1.0, 1.8], vec![0.3, 0.4, 0.3]),
            Model::Model3 => {
                check_x(x, 1.0)?;
                (vec![1.0 - x, 1.0 + x], vec![0.5, 0.5])
            }
            Model::Model4 => {
                check_x(x, 0.5)?;
                (vec![0.5 - x, 0.5 + x, 1.5 - x, 1.5 + x], vec![0.25; 4])
            }
        };
        merged(atoms, weights)
    }

    /// Default ratios, sample sizes and `x` grid of the corresponding design.
    pub fn defaults(self) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
        match self {
            Model::Model1 => (vec![2.0], vec![100, 200, 400], vec![]),
            Model::Model2 => (vec![0.25], vec![400, 800, 1600], vec![]),
            Model::Model3 => (
                vec![0.5, 1.0, 2.0],
                vec![400],
                (0..10).map(|i| i as f64 / 50.0).collect(),
            ),
            Model::Model4 => (
                vec![0.5, 1.0, 2.0],
                vec![400],
                (0..10).map(|i| i as f64 / 20.0).collect(),
            ),
        }
    }
}

fn check_x(x: f64, bound: f64) -> Result<()> {
    if !(0.0..bound).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "separation x must lie in [0, {bound}), got {x}"
        )));
    }
    Ok(())
}

/// Builds a normalised PSD, pooling the weights of atoms closer than 1e-12.
pub fn merged(atoms: Vec<f64>, weights: Vec<f64>) -> Result<DiscretePsd> {
    let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pooled: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (a, w) in pairs {
        match pooled.last_mut() {
            Some(last) if (a - last.0).abs() <= 1e-12 * a.abs().max(1.0) => last.1 += w,
            _ => pooled.push((a, w)),
        }
    }
    let (atoms, weights) = pooled.into_iter().unzip();
    DiscretePsd::normalized(atoms, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coinciding_atoms_merge() {
        assert_eq!(Model::Model3.psd(0.0).unwrap(), DiscretePsd::unit());
        let m4 = Model::Model4.psd(0.0).unwrap();
        assert_eq!(m4.atoms(), &[0.5, 1.5]);
        assert_eq!(m4.weights(), &[0.5, 0.5]);
        assert_eq!(Model::Model4.psd(0.2).unwrap().order(), 4);
    }

    #[test]
    fn names_resolve() {
        assert_eq!(Model::by_name("table1").unwrap(), Model::Model1);
        assert_eq!(Model::by_name("Model2").unwrap(), Model::Model2);
        assert!(Model::by_name("model9").is_err());
        assert!(Model::Model3.psd(1.0).is_err());
    }
}
