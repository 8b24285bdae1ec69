//! Complete systems of mutually unbiased bases and their verification.
//!
//! A basis is stored as a unitary whose columns are the basis vectors. Two bases
//! `U`, `V` are unbiased exactly when `U* V` is a unitary with all entries of
//! modulus `1/sqrt(d)`.
//!
//! Constructions cover `d = 2`, odd primes and odd prime powers via quadratic
//! Gauss sums. Even prime powers `2^k` with `k ≥ 2` need Galois rings and are
//! not supported.

pub mod field;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, Tolerance};
use field::{is_prime, prime_power, FieldError, GaloisField};

/// Largest field order accepted by [`construct_prime_power`].
pub const MAX_PRIME_POWER: u32 = 49;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MubError {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u32),
    #[error("even prime powers (q = {0}) are not supported")]
    EvenPrimePower(u32),
    #[error("field order {q} exceeds the cap {cap}")]
    AboveCap { q: u32, cap: u32 },
    #[error("no complete MUB construction for dimension {0}")]
    UnsupportedDimension(usize),
    #[error("basis {index} is not unitary (defect {defect:e})")]
    NotUnitary { index: usize, defect: f64 },
    #[error("basis {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A dimension and an ordered list of unitaries claimed to be pairwise unbiased.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MubSystemJson", into = "MubSystemJson")]
pub struct MubSystem {
    dim: usize,
    bases: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
struct MubSystemJson {
    dim: usize,
    bases: Vec<Matrix>,
}

impl TryFrom<MubSystemJson> for MubSystem {
    type Error = MubError;

    fn try_from(raw: MubSystemJson) -> Result<Self, Self::Error> {
        MubSystem::new(raw.dim, raw.bases)
    }
}

impl From<MubSystem> for MubSystemJson {
    fn from(s: MubSystem) -> Self {
        MubSystemJson {
            dim: s.dim,
            bases: s.bases,
        }
    }
}

impl MubSystem {
    /// Checks dimensions and unitarity (default tolerance) of every member.
    pub fn new(dim: usize, bases: Vec<Matrix>) -> Result<Self, MubError> {
        if dim == 0 {
            return Err(LinalgError::ZeroDimension.into());
        }
        let tol = Tolerance::default();
        for (index, b) in bases.iter().enumerate() {
            if b.dim() != dim {
                return Err(MubError::DimensionMismatch {
                    index,
                    expected: dim,
                    got: b.dim(),
                });
            }
            let defect = b.unitarity_defect();
            if defect > tol.unitary_tol {
                return Err(MubError::NotUnitary { index, defect });
            }
        }
        Ok(Self { dim, bases })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bases(&self) -> &[Matrix] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Multiplies every basis on the left by `v`; pairwise quotients are unchanged.
    pub fn left_translate(&self, v: &Matrix) -> Result<Self, MubError> {
        let bases = self
            .bases
            .iter()
            .map(|b| v.matmul(b))
            .collect::<Result<Vec<_>, _>>()?;
        MubSystem::new(self.dim, bases)
    }
}

/// `exp(2πi t / p) / sqrt(n)`, computed from the reduced exponent.
fn scaled_root(t: u64, p: u64, n: usize) -> Complex64 {
    Complex64::from_polar(
        1.0 / (n as f64).sqrt(),
        2.0 * PI * (t % p) as f64 / p as f64,
    )
}

/// `p + 1` bases for an odd prime `p`: the standard basis followed by, for each
/// `k ∈ F_p`, the basis with vectors `(v_j)_l = ω^{k l² + j l} / sqrt(p)`.
pub fn construct_prime(p: u32) -> Result<MubSystem, MubError> {
    if p == 2 || !is_prime(p) {
        return Err(MubError::NotOddPrime(p));
    }
    let n = p as usize;
    let pp = p as u64;
    let mut bases = vec![Matrix::identity(n)];
    for k in 0..pp {
        bases.push(Matrix::from_fn(n, |l, j| {
            let (l, j) = (l as u64, j as u64);
            scaled_root(k * l * l + j * l, pp, n)
        }));
    }
    MubSystem::new(n, bases)
}

/// The three eigenbases of the Pauli matrices in dimension 2.
pub fn construct_d2() -> MubSystem {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let bases = vec![
        Matrix::identity(2),
        Matrix::from_rows(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]).expect("2x2"),
        Matrix::from_rows(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(0.0, s), c(0.0, -s)]]).expect("2x2"),
    ];
    MubSystem::new(2, bases).expect("Pauli eigenbases are unitary")
}

/// `q + 1` bases for `q = p^k`, `p` odd: the standard basis followed by, for each
/// `a ∈ F_q`, the basis with vectors `(v_b)_x = ω_p^{tr(a x² + b x)} / sqrt(q)`.
/// Rows and columns are indexed by field elements in [`GaloisField::element`] order.
pub fn construct_prime_power(p: u32, k: u32) -> Result<MubSystem, MubError> {
    if p == 2 {
        return Err(MubError::EvenPrimePower(2u32.saturating_pow(k)));
    }
    if !is_prime(p) {
        return Err(MubError::NotOddPrime(p));
    }
    let q = p
        .checked_pow(k)
        .filter(|&q| q <= MAX_PRIME_POWER)
        .ok_or(MubError::AboveCap {
            q: p.saturating_pow(k),
            cap: MAX_PRIME_POWER,
        })?;
    let field = GaloisField::new(p, k)?;
    let n = q as usize;
    let elems: Vec<_> = field.elements().collect();
    // trace_of_product[a][y] = tr(a·y)
    let trace_of_product: Vec<Vec<u64>> = elems
        .iter()
        .map(|a| {
            elems
                .iter()
                .map(|y| field.trace(&field.mul(a, y)) as u64)
                .collect()
        })
        .collect();
    let squares: Vec<usize> = elems
        .iter()
        .map(|x| field.index_of(&field.mul(x, x)))
        .collect();
    let mut bases = vec![Matrix::identity(n)];
    for a in 0..n {
        bases.push(Matrix::from_fn(n, |x, b| {
            let t = trace_of_product[a][squares[x]] + trace_of_product[b][x];
            scaled_root(t, p as u64, n)
        }));
    }
    MubSystem::new(n, bases)
}

/// A complete system for any supported dimension.
pub fn construct_complete(dim: usize) -> Result<MubSystem, MubError> {
    let d = u32::try_from(dim).map_err(|_| MubError::UnsupportedDimension(dim))?;
    match prime_power(d) {
        Some((2, 1)) => Ok(construct_d2()),
        Some((2, _)) => Err(MubError::EvenPrimePower(d)),
        Some((p, 1)) => construct_prime(p),
        Some((p, k)) => construct_prime_power(p, k),
        None => Err(MubError::UnsupportedDimension(dim)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubVerification {
    pub ok: bool,
    pub n_bases: usize,
    /// Pair `(i, j)`, `i < j`, attaining the worst deviation.
    pub worst_pair: Option<(usize, usize)>,
    /// Max over pairs and entries of `| |(b_i* b_j)_{rs}| - 1/sqrt(d) |`.
    pub worst_deviation: f64,
}

/// Checks that every quotient `b_i* b_j` (`i ≠ j`) is a scaled Hadamard matrix.
pub fn verify_mub(b: &MubSystem, tol: &Tolerance) -> MubVerification {
    let n = b.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let results: Vec<(bool, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let quotient = b.bases[i]
                .adjoint_mul(&b.bases[j])
                .expect("members share the system dimension");
            (quotient.is_scaled_hadamard(tol), quotient.hadamard_defect())
        })
        .collect();
    let mut ok = true;
    let mut worst: Option<((usize, usize), f64)> = None;
    for (&pair, &(pair_ok, deviation)) in pairs.iter().zip(&results) {
        ok &= pair_ok;
        if worst.is_none_or(|(_, w)| deviation > w) {
            worst = Some((pair, deviation));
        }
    }
    MubVerification {
        ok,
        n_bases: n,
        worst_pair: worst.map(|(p, _)| p),
        worst_deviation: worst.map_or(0.0, |(_, w)| w),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog6::fourier;

    #[test]
    fn d2_inner_products() {
        let sys = construct_d2();
        assert_eq!(sys.len(), 3);
        let report = verify_mub(&sys, &Tolerance::default());
        assert!(report.ok);
        assert!(report.worst_deviation < 1e-15);
    }

    #[test]
    fn prime_three_by_inner_products() {
        let sys = construct_prime(3).unwrap();
        assert_eq!(sys.len(), 4);
        let target = 1.0 / 3f64.sqrt();
        for i in 0..4 {
            for k in i + 1..4 {
                for a in 0..3 {
                    for b in 0..3 {
                        let e = sys.bases()[i].column(a);
                        let f = sys.bases()[k].column(b);
                        let ip: Complex64 = e.iter().zip(&f).map(|(x, y)| x.conj() * y).sum();
                        assert!((ip.norm() - target).abs() <= 1e-10);
                    }
                }
            }
        }
        assert!(verify_mub(&sys, &Tolerance::default()).worst_deviation <= 1e-10);
    }

    #[test]
    fn constructions_reject_bad_input() {
        assert_eq!(construct_prime(2).unwrap_err(), MubError::NotOddPrime(2));
        assert_eq!(construct_prime(9).unwrap_err(), MubError::NotOddPrime(9));
        assert_eq!(
            construct_prime_power(2, 2).unwrap_err(),
            MubError::EvenPrimePower(4)
        );
        assert!(matches!(
            construct_prime_power(3, 4),
            Err(MubError::AboveCap { q: 81, .. })
        ));
        assert_eq!(
            construct_complete(6).unwrap_err(),
            MubError::UnsupportedDimension(6)
        );
        assert_eq!(
            construct_complete(8).unwrap_err(),
            MubError::EvenPrimePower(8)
        );
    }

    #[test]
    fn degree_one_field_matches_prime_construction() {
        for p in [3, 5, 7] {
            assert_eq!(
                construct_prime_power(p, 1).unwrap(),
                construct_prime(p).unwrap()
            );
        }
    }

    #[test]
    fn duplicate_basis_is_not_unbiased() {
        let sys = MubSystem::new(3, vec![Matrix::identity(3), Matrix::identity(3)]).unwrap();
        let report = verify_mub(&sys, &Tolerance::default());
        assert!(!report.ok);
        assert_eq!(report.worst_pair, Some((0, 1)));
    }

    #[test]
    fn identity_and_fourier_in_d6() {
        let sys = MubSystem::new(6, vec![Matrix::identity(6), fourier(6)]).unwrap();
        let report = verify_mub(&sys, &Tolerance::default());
        assert!(report.ok);
        assert_eq!(report.n_bases, 2);
    }

    #[test]
    fn system_rejects_non_unitary_members() {
        let bad = Matrix::identity(2).scale(Complex64::new(2.0, 0.0));
        assert!(matches!(
            MubSystem::new(2, vec![Matrix::identity(2), bad]),
            Err(MubError::NotUnitary { index: 1, .. })
        ));
        assert!(matches!(
            MubSystem::new(2, vec![Matrix::identity(3)]),
            Err(MubError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let sys = construct_prime(3).unwrap();
        let text = serde_json::to_string(&sys).unwrap();
        let back: MubSystem = serde_json::from_str(&text).unwrap();
        assert!(back.bases()[1].max_abs_diff(&sys.bases()[1]).unwrap() == 0.0);
        let bad = r#"{"dim": 1, "bases": [{"dim": 1, "entries": [[2.0, 0.0]]}]}"#;
        assert!(serde_json::from_str::<MubSystem>(bad).is_err());
    }
}
