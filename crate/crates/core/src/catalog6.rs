//! A small catalog of 6x6 complex Hadamard matrices, scaled into `U(6)`, and the
//! vanishing check for `m1`, `m2` and the per-permutation inner sums.
//!
//! Family formulas are transcribed from the published 6x6 catalog. None of them
//! is trusted: every generated matrix is checked with `is_scaled_hadamard` before
//! it is handed out, so a transcription error fails loudly instead of feeding a
//! wrong matrix to the conjecture check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, Tolerance};
use crate::witness::{all_inner_sums, m1, m2, WitnessError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown Hadamard family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` takes {expected} parameters, got {got}")]
    ParameterCount {
        family: String,
        expected: usize,
        got: usize,
    },
    #[error("family `{family}` at {params:?} is not a scaled Hadamard matrix (unitarity defect {unitary_defect:e}, modulus defect {modulus_defect:e}); the formula is wrong")]
    ValidationFailed {
        family: String,
        params: Vec<f64>,
        unitary_defect: f64,
        modulus_defect: f64,
    },
    #[error("target {index} is not a scaled Hadamard matrix")]
    NotHadamard { index: usize },
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

/// `ω^{jk} / sqrt(d)` with `ω = exp(2πi/d)`.
pub fn fourier(d: usize) -> Matrix {
    Matrix::from_fn(d, |j, k| {
        Complex64::from_polar(
            1.0 / (d as f64).sqrt(),
            2.0 * PI * ((j * k) % d) as f64 / d as f64,
        )
    })
}

/// A registered family of 6x6 complex Hadamard matrices.
#[derive(Debug, Clone, Copy)]
pub struct HadamardFamily {
    pub name: &'static str,
    pub n_params: usize,
    pub description: &'static str,
    pub citation: &'static str,
    /// Unscaled (unimodular) matrix from phases in radians.
    unscaled: fn(&[f64]) -> Vec<Complex64>,
}

const CATALOG_CITATION: &str =
    "W. Tadej, K. Zyczkowski, A concise guide to complex Hadamard matrices, Open Syst. Inf. Dyn. 13 (2006) 133-177";

fn unit(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

fn fourier_unscaled(j: usize, k: usize) -> Complex64 {
    unit(2.0 * PI * ((j * k) % 6) as f64 / 6.0)
}

/// `F6 ∘ exp(iR(a,b))`: odd rows pick up phases `(0, a, b, 0, a, b)`.
fn f6ab(params: &[f64]) -> Vec<Complex64> {
    let (a, b) = (params[0], params[1]);
    let pattern = [0.0, a, b, 0.0, a, b];
    (0..36)
        .map(|t| {
            let (j, k) = (t / 6, t % 6);
            let phase = if j % 2 == 1 { pattern[k] } else { 0.0 };
            fourier_unscaled(j, k) * unit(phase)
        })
        .collect()
}

fn f6ab_transposed(params: &[f64]) -> Vec<Complex64> {
    let m = f6ab(params);
    (0..36).map(|t| m[(t % 6) * 6 + t / 6]).collect()
}

fn d6_base() -> [[Complex64; 6]; 6] {
    let o = Complex64::new(1.0, 0.0);
    let m = -o;
    let i = Complex64::new(0.0, 1.0);
    let n = -i;
    [
        [o, o, o, o, o, o],
        [o, m, i, n, n, i],
        [o, i, m, i, n, n],
        [o, n, i, m, i, n],
        [o, n, n, i, m, i],
        [o, i, n, n, i, m],
    ]
}

/// Affine one-parameter family through Diță's matrix `D6`: `D6 ∘ exp(i c E)`.
fn d6c(params: &[f64]) -> Vec<Complex64> {
    const E: [[i8; 6]; 6] = [
        [0, 0, 0, 0, 0, 0],
        [0, 0, -1, -1, 0, 0],
        [0, 1, 0, 0, 1, 0],
        [0, 1, 0, 0, 1, 0],
        [0, 0, -1, -1, 0, 0],
        [0, 0, 0, 0, 0, 0],
    ];
    let c = params[0];
    let base = d6_base();
    (0..36)
        .map(|t| {
            let (j, k) = (t / 6, t % 6);
            base[j][k] * unit(c * E[j][k] as f64)
        })
        .collect()
}

/// Björck's circulant matrix: first row `(1, id, -d, -i, -conj d, i conj d)` with
/// `d = (1 - √3)/2 + i·sqrt(√3/2)`.
fn c6(_: &[f64]) -> Vec<Complex64> {
    let s3 = 3f64.sqrt();
    let d = Complex64::new((1.0 - s3) / 2.0, (s3 / 2.0).sqrt());
    let i = Complex64::new(0.0, 1.0);
    let row = [
        Complex64::new(1.0, 0.0),
        i * d,
        -d,
        -i,
        -d.conj(),
        i * d.conj(),
    ];
    (0..36).map(|t| row[(t % 6 + 6 - t / 6) % 6]).collect()
}

/// Tao's spectral matrix built from cube roots of unity.
fn s6(_: &[f64]) -> Vec<Complex64> {
    const EXP: [[u8; 6]; 6] = [
        [0, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 2, 2],
        [0, 1, 0, 2, 2, 1],
        [0, 1, 2, 0, 1, 2],
        [0, 2, 2, 1, 0, 1],
        [0, 2, 1, 2, 1, 0],
    ];
    (0..36)
        .map(|t| unit(2.0 * PI * EXP[t / 6][t % 6] as f64 / 3.0))
        .collect()
}

fn fourier6(_: &[f64]) -> Vec<Complex64> {
    (0..36).map(|t| fourier_unscaled(t / 6, t % 6)).collect()
}

pub const FAMILIES: &[HadamardFamily] = &[
    HadamardFamily {
        name: "F6",
        n_params: 0,
        description: "Fourier matrix",
        citation: CATALOG_CITATION,
        unscaled: fourier6,
    },
    HadamardFamily {
        name: "F6ab",
        n_params: 2,
        description: "two-parameter affine Fourier family F6(a,b)",
        citation: CATALOG_CITATION,
        unscaled: f6ab,
    },
    HadamardFamily {
        name: "F6abT",
        n_params: 2,
        description: "transposed Fourier family F6(a,b)^T",
        citation: CATALOG_CITATION,
        unscaled: f6ab_transposed,
    },
    HadamardFamily {
        name: "D6c",
        n_params: 1,
        description: "one-parameter Dita family D6(c)",
        citation: CATALOG_CITATION,
        unscaled: d6c,
    },
    HadamardFamily {
        name: "C6",
        n_params: 0,
        description: "Bjorck circulant matrix",
        citation: CATALOG_CITATION,
        unscaled: c6,
    },
    HadamardFamily {
        name: "S6",
        n_params: 0,
        description: "Tao's spectral matrix from cube roots of unity",
        citation: CATALOG_CITATION,
        unscaled: s6,
    },
];

pub fn lookup(name: &str) -> Result<&'static HadamardFamily, CatalogError> {
    FAMILIES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| CatalogError::UnknownFamily(name.to_string()))
}

impl HadamardFamily {
    /// The scaled member at `params`, validated as a scaled Hadamard matrix.
    pub fn generate(&self, params: &[f64]) -> Result<Matrix, CatalogError> {
        if params.len() != self.n_params {
            return Err(CatalogError::ParameterCount {
                family: self.name.to_string(),
                expected: self.n_params,
                got: params.len(),
            });
        }
        let scale = 1.0 / 6f64.sqrt();
        let entries = (self.unscaled)(params)
            .into_iter()
            .map(|z| z * scale)
            .collect();
        let m = Matrix::from_entries(6, entries).map_err(|_| CatalogError::ValidationFailed {
            family: self.name.to_string(),
            params: params.to_vec(),
            unitary_defect: f64::NAN,
            modulus_defect: f64::NAN,
        })?;
        let tol = Tolerance::default();
        if !m.is_scaled_hadamard(&tol) {
            return Err(CatalogError::ValidationFailed {
                family: self.name.to_string(),
                params: params.to_vec(),
                unitary_defect: m.unitarity_defect(),
                modulus_defect: m.hadamard_defect(),
            });
        }
        Ok(m)
    }

    /// A `points`-per-parameter grid over `[0, 2π)^n_params`, with parameters.
    pub fn grid(&self, points: usize) -> Result<Vec<(Vec<f64>, Matrix)>, CatalogError> {
        phase_grid(self.n_params, points)
            .into_iter()
            .map(|params| {
                let m = self.generate(&params)?;
                Ok((params, m))
            })
            .collect()
    }
}

/// All points of the uniform grid `{2πk/points}^n`, last parameter varying fastest.
pub fn phase_grid(n_params: usize, points: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..points)
        .map(|k| 2.0 * PI * k as f64 / points as f64)
        .collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n_params {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn family(name: &str, params: &[f64]) -> Result<Matrix, CatalogError> {
    lookup(name)?.generate(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRecord {
    pub m1: f64,
    pub m2: f64,
    /// Max modulus over all 720 inner sums of the matrix and of its adjoint.
    pub max_inner_sum: f64,
    pub vanishes: bool,
}

/// Evaluates `m1`, `m2` and every inner sum on each target. A record with
/// `vanishes == false` is a finding about the conjecture, not an error.
pub fn conjecture_check(
    targets: &[Matrix],
    tol: f64,
) -> Result<Vec<ConjectureRecord>, CatalogError> {
    let hadamard_tol = Tolerance::default();
    for (index, t) in targets.iter().enumerate() {
        if !t.is_scaled_hadamard(&hadamard_tol) {
            return Err(CatalogError::NotHadamard { index });
        }
    }
    targets
        .par_iter()
        .map(|z| {
            let m1 = m1(z)?;
            let m2 = m2(z)?;
            let max_inner_sum = all_inner_sums(z)?
                .into_iter()
                .chain(all_inner_sums(&z.adjoint())?)
                .map(|s| s.norm())
                .fold(0.0, f64::max);
            Ok(ConjectureRecord {
                m1,
                m2,
                max_inner_sum,
                vanishes: m1.abs() <= tol && m2.abs() <= tol && max_inner_sum <= tol,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_small_cases() {
        assert_eq!(fourier(1), Matrix::identity(1));
        let s = 1.0 / 2f64.sqrt();
        let f2 = fourier(2);
        assert!(
            f2.max_abs_diff(&Matrix::from_real(2, &[s, s, s, -s]).unwrap())
                .unwrap()
                < 1e-15
        );
        assert!(fourier(6).is_scaled_hadamard(&Tolerance::default()));
        assert!(crate::witness::h(&fourier(6)).abs() < 1e-14);
    }

    #[test]
    fn f6ab_anchored_at_fourier() {
        let m = family("F6ab", &[0.0, 0.0]).unwrap();
        assert!(m.max_abs_diff(&fourier(6)).unwrap() <= 1e-12);
        assert!(family("F6ab", &[0.3, 1.1]).is_ok());
        let t = family("F6abT", &[0.3, 1.1]).unwrap();
        assert_eq!(t, family("F6ab", &[0.3, 1.1]).unwrap().transpose());
    }

    #[test]
    fn zero_parameter_members_validate() {
        for name in ["F6", "C6", "S6"] {
            assert!(family(name, &[]).is_ok(), "{name}");
        }
        let s6 = family("S6", &[]).unwrap();
        // every entry is a cube root of unity over sqrt(6)
        for z in s6.entries() {
            let w = z * 6f64.sqrt();
            assert!((w.powu(3) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn family_errors() {
        assert!(matches!(
            family("X6", &[]),
            Err(CatalogError::UnknownFamily(_))
        ));
        assert!(matches!(
            family("F6ab", &[0.1]),
            Err(CatalogError::ParameterCount {
                expected: 2,
                got: 1,
                ..
            })
        ));
    }

    #[test]
    fn broken_formula_is_caught() {
        let bogus = HadamardFamily {
            name: "bogus",
            n_params: 0,
            description: "",
            citation: "",
            unscaled: |_| {
                let mut m = fourier6(&[]);
                m[7] = -m[7];
                m
            },
        };
        assert!(matches!(
            bogus.generate(&[]),
            Err(CatalogError::ValidationFailed { .. })
        ));
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(phase_grid(0, 11), vec![Vec::<f64>::new()]);
        assert_eq!(phase_grid(1, 4).len(), 4);
        let g = phase_grid(2, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![0.0, 2.0 * PI / 3.0]);
    }

    #[test]
    fn conjecture_check_on_fourier() {
        let rec = &conjecture_check(&[fourier(6)], 1e-10).unwrap()[0];
        assert!(rec.m1.abs() <= 1e-12 && rec.m2.abs() <= 1e-12);
        assert!(rec.max_inner_sum <= 1e-12);
        assert!(rec.vanishes);
    }

    #[test]
    fn conjecture_check_rejects_non_hadamard() {
        assert_eq!(
            conjecture_check(&[fourier(6), Matrix::identity(6)], 1e-8),
            Err(CatalogError::NotHadamard { index: 1 })
        );
    }
}
