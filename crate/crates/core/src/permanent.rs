//! Matrix permanents via Ryser's formula.
//!
//! `perm(A) = (-1)^n * sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij`, walking
//! the column subsets `S` in Gray-code order so that each step adds or
//! removes one column from the running row sums. Cost is `O(2^n n)`.

use alloc::vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

/// Largest dimension accepted by [`permanent`].
pub const DEFAULT_PERMANENT_CAP: usize = 20;

/// Hard ceiling for the configurable cap; the subset counter is a `u64`.
const MAX_PERMANENT_CAP: usize = 48;

pub fn permanent(a: &ComplexMatrix) -> Result<C64> {
    permanent_with_cap(a, DEFAULT_PERMANENT_CAP)
}

pub fn permanent_with_cap(a: &ComplexMatrix, cap: usize) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::shape(alloc::format!(
            "permanent needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    check_cap(a.rows(), cap)?;
    Ok(ryser(a.rows(), |r, c| a.get(r, c)))
}

/// Permanent of an `n x n` row-major real matrix.
pub fn permanent_real(n: usize, entries: &[f64], cap: usize) -> Result<f64> {
    if entries.len() != n * n {
        return Err(Error::shape("entry count does not match n*n"));
    }
    check_cap(n, cap)?;
    Ok(ryser(n, |r, c| entries[r * n + c]))
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    let cap = cap.min(MAX_PERMANENT_CAP);
    if n > cap {
        return Err(Error::Capacity {
            what: "permanent dimension",
            requested: n as u128,
            cap: cap as u128,
        });
    }
    Ok(())
}

/// Ryser with Gray-code subset updates over any ring-like scalar.
pub(crate) fn ryser<T, F>(n: usize, entry: F) -> T
where
    T: Copy + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
    F: Fn(usize, usize) -> T,
{
    if n == 0 {
        return T::one();
    }
    let mut row_sums = vec![T::zero(); n];
    let mut total = T::zero();
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let col = k.trailing_zeros() as usize;
        gray ^= 1 << col;
        if gray & (1 << col) != 0 {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s = *s + entry(r, col);
            }
        } else {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s = *s - entry(r, col);
            }
        }
        let prod = row_sums.iter().fold(T::one(), |acc, &s| acc * s);
        if gray.count_ones() % 2 == 0 {
            total = total + prod;
        } else {
            total = total - prod;
        }
    }
    if n % 2 == 0 {
        total
    } else {
        -total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use alloc::vec::Vec;
    use proptest::prelude::*;
    use rand::Rng;

    /// Definition-sum oracle: sum over all permutations.
    fn permanent_by_definition(a: &ComplexMatrix) -> C64 {
        let n = a.rows();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut total = C64::new(0.0, 0.0);
        heap_permutations(&mut idx, n, &mut |p| {
            let mut prod = C64::new(1.0, 0.0);
            for (r, &c) in p.iter().enumerate() {
                prod *= a.get(r, c);
            }
            total += prod;
        });
        total
    }

    fn heap_permutations(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k <= 1 {
            f(v);
            return;
        }
        for i in 0..k {
            heap_permutations(v, k - 1, f);
            if k % 2 == 0 {
                v.swap(i, k - 1);
            } else {
                v.swap(0, k - 1);
            }
        }
    }

    fn random_complex(n: usize, s: u64) -> ComplexMatrix {
        let mut rng = seed::rng_for(s, 99, 0);
        ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_has_unit_permanent() {
        for n in 1..8 {
            let p = permanent(&ComplexMatrix::identity(n)).unwrap();
            assert!((p - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn all_ones_gives_factorial() {
        let mut fact = 1.0;
        for n in 1..10 {
            fact *= n as f64;
            let ones = ComplexMatrix::from_fn(n, n, |_, _| C64::new(1.0, 0.0));
            let p = permanent(&ones).unwrap();
            assert!((p.re - fact).abs() < 1e-9 * fact && p.im.abs() < 1e-9);
        }
    }

    #[test]
    fn matches_definition_on_random_5x5() {
        let a = random_complex(5, 11);
        let p = permanent(&a).unwrap();
        let q = permanent_by_definition(&a);
        assert!((p - q).norm() / q.norm() < 1e-12);
    }

    #[test]
    fn rejects_non_square_and_oversized() {
        assert!(matches!(
            permanent(&ComplexMatrix::zeros(2, 3)),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            permanent_with_cap(&ComplexMatrix::identity(4), 3),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn real_permanent_of_doubly_stochastic() {
        let e = [0.5, 0.5, 0.5, 0.5];
        assert!((permanent_real(2, &e, 20).unwrap() - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn invariant_under_row_and_column_permutations(
            n in 1usize..=6,
            s in any::<u64>(),
            rot_r in 0usize..6,
            rot_c in 0usize..6,
        ) {
            let a = random_complex(n, s);
            let pr: Vec<usize> = (0..n).map(|i| (i + rot_r) % n).collect();
            let mut pc: Vec<usize> = (0..n).collect();
            pc.reverse();
            pc.rotate_left(rot_c % n);
            let b = a.submatrix(&pr, &pc).unwrap();
            let pa = permanent(&a).unwrap();
            let pb = permanent(&b).unwrap();
            prop_assert!((pa - pb).norm() <= 1e-12 * (1.0 + pa.norm()));
        }

        #[test]
        fn zero_row_gives_zero(n in 1usize..=6, s in any::<u64>(), r in 0usize..6) {
            let mut a = random_complex(n, s);
            for c in 0..n {
                a.set(r % n, c, C64::new(0.0, 0.0));
            }
            prop_assert!(permanent(&a).unwrap().norm() < 1e-14);
        }
    }
}
