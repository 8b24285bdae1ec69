//! Small prime-power fields `F_q = F_p[x] / (f)` with `f` found by exhaustive
//! search. Only meant for the tiny fields behind the MUB constructions.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be between 1 and {max}, got {got}")]
    BadDegree { got: u32, max: u32 },
    #[error("modulus {0:?} is not a monic irreducible polynomial")]
    Reducible(Vec<u32>),
}

/// Largest extension degree supported by the exhaustive irreducibility test.
pub const MAX_DEGREE: u32 = 4;

pub fn is_prime(n: u32) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

/// `Some((p, k))` when `n = p^k` with `p` prime and `k ≥ 1`.
pub fn prime_power(n: u32) -> Option<(u32, u32)> {
    let p = (2..=n).find(|&d| n.is_multiple_of(d))?;
    let mut rest = n;
    let mut k = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

/// An element of `F_q` as coefficients `c_0 + c_1 x + … + c_{k-1} x^{k-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldElement(Vec<u32>);

impl FieldElement {
    pub fn coeffs(&self) -> &[u32] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisField {
    p: u32,
    k: u32,
    /// Monic, low-to-high, length `k + 1`.
    modulus: Vec<u32>,
}

/// Remainder of `a` modulo the monic polynomial `m` over `F_p`. Low-to-high.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r: Vec<u32> = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().expect("non-empty");
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &c) in m.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * c) % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Monic polynomial of degree `deg` whose lower coefficients are the base-`p`
/// digits of `index`, most significant digit on `x^{deg-1}`.
fn monic_from_index(index: u64, deg: u32, p: u32) -> Vec<u32> {
    let mut coeffs = vec![0u32; deg as usize + 1];
    coeffs[deg as usize] = 1;
    let mut t = index;
    for c in coeffs.iter_mut().take(deg as usize) {
        *c = (t % p as u64) as u32;
        t /= p as u64;
    }
    coeffs
}

/// Irreducible iff no monic polynomial of degree `1..=deg/2` divides it.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len().saturating_sub(1) as u32;
    if deg == 0 || f[deg as usize] != 1 {
        return false;
    }
    for d in 1..=deg / 2 {
        for index in 0..(p as u64).pow(d) {
            let g = monic_from_index(index, d, p);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl GaloisField {
    /// `F_{p^k}` with the lexicographically smallest monic irreducible modulus,
    /// ordering candidates by their coefficients from `x^{k-1}` down to `x^0`.
    pub fn new(p: u32, k: u32) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if k == 0 || k > MAX_DEGREE {
            return Err(FieldError::BadDegree {
                got: k,
                max: MAX_DEGREE,
            });
        }
        let modulus = (0..(p as u64).pow(k))
            .map(|index| monic_from_index(index, k, p))
            .find(|f| is_irreducible(f, p))
            .expect("an irreducible polynomial of every degree exists");
        Ok(Self { p, k, modulus })
    }

    pub fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let k = modulus.len().saturating_sub(1) as u32;
        if k == 0 || k > MAX_DEGREE {
            return Err(FieldError::BadDegree {
                got: k,
                max: MAX_DEGREE,
            });
        }
        if modulus.iter().any(|&c| c >= p) || !is_irreducible(&modulus, p) {
            return Err(FieldError::Reducible(modulus));
        }
        Ok(Self { p, k, modulus })
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn order(&self) -> usize {
        (self.p as usize).pow(self.k)
    }

    /// Elements are numbered by reading coefficients as base-`p` digits, `c_0` least significant.
    pub fn element(&self, index: usize) -> FieldElement {
        let mut t = index;
        FieldElement(
            (0..self.k)
                .map(|_| {
                    let c = (t % self.p as usize) as u32;
                    t /= self.p as usize;
                    c
                })
                .collect(),
        )
    }

    pub fn index_of(&self, a: &FieldElement) -> usize {
        a.0.iter()
            .rev()
            .fold(0usize, |acc, &c| acc * self.p as usize + c as usize)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(|i| self.element(i))
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement(vec![0; self.k as usize])
    }

    pub fn one(&self) -> FieldElement {
        let mut c = vec![0; self.k as usize];
        c[0] = 1;
        FieldElement(c)
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement(
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| (x + y) % self.p)
                .collect(),
        )
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let k = self.k as usize;
        let mut prod = vec![0u32; 2 * k - 1];
        for (i, &x) in a.0.iter().enumerate() {
            for (j, &y) in b.0.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        let mut r = poly_rem(&prod, &self.modulus, self.p);
        r.resize(k, 0);
        FieldElement(r)
    }

    pub fn pow(&self, a: &FieldElement, mut e: u64) -> FieldElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Absolute trace `a + a^p + … + a^{p^{k-1}}`, which lies in the prime field.
    pub fn trace(&self, a: &FieldElement) -> u32 {
        let mut term = a.clone();
        let mut sum = a.clone();
        for _ in 1..self.k {
            term = self.pow(&term, self.p as u64);
            sum = self.add(&sum, &term);
        }
        debug_assert!(
            sum.0[1..].iter().all(|&c| c == 0),
            "trace left the prime field"
        );
        sum.0[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_and_powers() {
        let primes: Vec<u32> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(25), Some((5, 2)));
        assert_eq!(prime_power(7), Some((7, 1)));
        assert_eq!(prime_power(6), None);
        assert_eq!(prime_power(1), None);
    }

    #[test]
    fn f9_uses_x2_plus_1() {
        let f = GaloisField::new(3, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 0, 1]);
        // x^2 + 1 has no root in F_3.
        assert!((0..3).all(|x| (x * x + 1) % 3 != 0));
        assert_eq!(f.order(), 9);
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 - 1 = (x - 1)(x + 1)
        assert_eq!(
            GaloisField::with_modulus(3, vec![2, 0, 1]),
            Err(FieldError::Reducible(vec![2, 0, 1]))
        );
        // (x^2 + 1)^2 over F_3 has no roots but is reducible.
        assert!(!is_irreducible(&[1, 0, 2, 0, 1], 3));
        assert!(GaloisField::new(4, 2).is_err());
        assert!(GaloisField::new(3, 5).is_err());
    }

    #[test]
    fn field_axioms_hold_exhaustively() {
        for (p, k) in [(3, 2), (5, 2), (3, 3), (2, 3)] {
            let f = GaloisField::new(p, k).unwrap();
            let elems: Vec<_> = f.elements().collect();
            for a in &elems {
                assert_eq!(f.element(f.index_of(a)), *a);
                if *a != f.zero() {
                    // every non-zero element has an inverse
                    assert!(elems.iter().any(|b| f.mul(a, b) == f.one()));
                    // a^(q-1) = 1
                    assert_eq!(f.pow(a, f.order() as u64 - 1), f.one());
                }
            }
        }
    }

    #[test]
    fn trace_is_additive_and_onto() {
        let f = GaloisField::new(3, 2).unwrap();
        let elems: Vec<_> = f.elements().collect();
        for a in &elems {
            for b in &elems {
                assert_eq!(f.trace(&f.add(a, b)), (f.trace(a) + f.trace(b)) % 3);
            }
        }
        let mut counts = [0; 3];
        for a in &elems {
            counts[f.trace(a) as usize] += 1;
        }
        assert_eq!(counts, [3, 3, 3]);
    }
}
