//! Pattern generators for the built-in structure classes.

use rand::Rng;

use crate::error::{Error, Result};
use crate::pattern::CooPattern;

/// Main diagonal (`offset == 0`) or a secondary diagonal of an n×n matrix.
///
/// Positive offsets move the diagonal above the main one: entry `(i, i + offset)`.
pub fn gen_diagonal(n: usize, offset: i64) -> Result<CooPattern> {
    if n == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if offset.unsigned_abs() >= n as u64 {
        return Err(Error::invalid(format!(
            "diagonal offset {offset} out of range for dimension {n}"
        )));
    }
    let shift = offset.unsigned_abs() as usize;
    let len = n - shift;
    let (rows, cols) = if offset >= 0 {
        ((0..len).collect(), (shift..n).collect())
    } else {
        ((shift..n).collect(), (0..len).collect())
    };
    CooPattern::new(rows, cols, (n, n))
}

/// Every cell included independently with probability `density`.
pub fn gen_random<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Result<CooPattern> {
    if n == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::invalid(format!("density {density} outside [0, 1]")));
    }
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if rng.gen_bool(density) {
                rows.push(x);
                cols.push(y);
            }
        }
    }
    CooPattern::new(rows, cols, (n, n))
}

/// Random cells plus the full main diagonal.
///
/// Cell `(x, y)` is kept when a uniform draw from `0..=10` is at most
/// `threshold`, or when `x == y`. A draw is taken for every cell, diagonal
/// included, in row-major order.
pub fn gen_random_plus_diag<R: Rng + ?Sized>(
    n: usize,
    threshold: u32,
    rng: &mut R,
) -> Result<CooPattern> {
    if n == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if threshold > 10 {
        return Err(Error::invalid(format!(
            "threshold {threshold} outside [0, 10]"
        )));
    }
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let draw: u32 = rng.gen_range(0..=10);
            if draw <= threshold || x == y {
                rows.push(x);
                cols.push(y);
            }
        }
    }
    CooPattern::new(rows, cols, (n, n))
}

/// Kronecker product of two patterns.
///
/// Entry `(ia * mb + ib, ja * nb + jb)` is present iff `(ia, ja)` is in `a`
/// and `(ib, jb)` is in `b`, where `(mb, nb)` is the shape of `b`.
pub fn kron_product(a: &CooPattern, b: &CooPattern) -> CooPattern {
    let (ma, na) = a.shape();
    let (mb, nb) = b.shape();
    let mut rows = Vec::with_capacity(a.nnz() * b.nnz());
    let mut cols = Vec::with_capacity(a.nnz() * b.nnz());
    for (ia, ja) in a.positions() {
        for (ib, jb) in b.positions() {
            rows.push(ia * mb + ib);
            cols.push(ja * nb + jb);
        }
    }
    // distinct (ia, ib) pairs map to distinct rows, so no duplicates can appear
    CooPattern::new(rows, cols, (ma * mb, na * nb))
        .expect("kronecker product of valid patterns is valid")
        .sorted()
}

/// `power`-fold Kronecker product of `base` with itself.
pub fn kron_power(base: &CooPattern, power: u32, max_dim: usize) -> Result<CooPattern> {
    if power == 0 {
        return Err(Error::invalid("kronecker power must be at least 1"));
    }
    let (m, n) = base.shape();
    let too_big = |d: usize| {
        d.checked_pow(power)
            .is_none_or(|total| total > max_dim)
    };
    if too_big(m) || too_big(n) {
        return Err(Error::invalid(format!(
            "{m}x{n} base to the power {power} exceeds maximum dimension {max_dim}"
        )));
    }
    let mut acc = base.clone();
    for _ in 1..power {
        acc = kron_product(&acc, base);
    }
    Ok(acc)
}

/// True when every row and every column holds exactly one entry.
fn is_permutation(p: &CooPattern) -> bool {
    let (m, n) = p.shape();
    if m != n || p.nnz() != n {
        return false;
    }
    let mut row_hit = vec![false; m];
    let mut col_hit = vec![false; n];
    for (r, c) in p.positions() {
        if row_hit[r] || col_hit[c] {
            return false;
        }
        row_hit[r] = true;
        col_hit[c] = true;
    }
    true
}

/// Draws a random square base pattern, retrying until it is nonempty and not a
/// permutation pattern (which includes the identity).
pub fn random_kron_base<R: Rng + ?Sized>(
    base_dim: usize,
    density: f64,
    rng: &mut R,
) -> Result<CooPattern> {
    if !(2..=4).contains(&base_dim) {
        return Err(Error::invalid(format!(
            "kronecker base dimension {base_dim} outside [2, 4]"
        )));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(format!(
            "kronecker base density {density} outside (0, 1]"
        )));
    }
    loop {
        let base = gen_random(base_dim, density, rng)?;
        if base.nnz() > 0 && !is_permutation(&base) {
            return Ok(base);
        }
    }
}

/// Power-fold Kronecker product of a freshly drawn random base.
pub fn gen_kronecker<R: Rng + ?Sized>(
    base_dim: usize,
    base_density: f64,
    power: u32,
    max_dim: usize,
    rng: &mut R,
) -> Result<CooPattern> {
    if power == 0 {
        return Err(Error::invalid("kronecker power must be at least 1"));
    }
    if base_dim.checked_pow(power).is_none_or(|d| d > max_dim) {
        return Err(Error::invalid(format!(
            "{base_dim}^{power} exceeds maximum dimension {max_dim}"
        )));
    }
    let base = random_kron_base(base_dim, base_density, rng)?;
    kron_power(&base, power, max_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn set(p: &CooPattern) -> Vec<(usize, usize)> {
        p.position_set().into_iter().collect()
    }

    #[test]
    fn diagonal_examples() {
        assert_eq!(
            set(&gen_diagonal(4, 0).unwrap()),
            vec![(0, 0), (1, 1), (2, 2), (3, 3)]
        );
        assert_eq!(
            set(&gen_diagonal(4, 1).unwrap()),
            vec![(0, 1), (1, 2), (2, 3)]
        );
        assert_eq!(
            set(&gen_diagonal(4, -2).unwrap()),
            vec![(2, 0), (3, 1)]
        );
        assert_eq!(set(&gen_diagonal(1, 0).unwrap()), vec![(0, 0)]);
        assert!(matches!(gen_diagonal(4, 4), Err(Error::InvalidParameter(_))));
        assert!(matches!(gen_diagonal(4, -4), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn random_extremes() {
        let mut r = rng::stream(1, 0);
        assert_eq!(gen_random(3, 1.0, &mut r).unwrap().nnz(), 9);
        assert_eq!(gen_random(3, 0.0, &mut r).unwrap().nnz(), 0);
        assert!(gen_random(3, 1.5, &mut r).is_err());
        assert!(gen_random(3, -0.1, &mut r).is_err());
    }

    #[test]
    fn random_plus_diag_examples() {
        let mut r = rng::stream(2, 0);
        assert_eq!(gen_random_plus_diag(5, 10, &mut r).unwrap().nnz(), 25);
        for n in [1, 7, 30] {
            for t in [0, 2, 5] {
                let p = gen_random_plus_diag(n, t, &mut r).unwrap();
                let s = p.position_set();
                assert!((0..n).all(|i| s.contains(&(i, i))));
            }
        }
        assert!(gen_random_plus_diag(5, 11, &mut r).is_err());
    }

    #[test]
    fn kron_examples() {
        let i2 = CooPattern::identity(2);
        assert_eq!(kron_product(&i2, &i2), CooPattern::identity(4));
        let ones = gen_random(2, 1.0, &mut rng::stream(0, 0)).unwrap();
        let k = kron_product(&ones, &ones);
        assert_eq!((k.nnz(), k.shape()), (16, (4, 4)));
        assert_eq!(kron_power(&i2, 3, 8).unwrap(), CooPattern::identity(8));
        assert!(kron_power(&i2, 4, 8).is_err());
    }

    #[test]
    fn kron_matches_bruteforce_enumeration() {
        // a = {(0,0),(0,1),(1,0)}; a ⊗ a enumerated by hand from the dense blocks
        let a = CooPattern::new(vec![0, 0, 1], vec![0, 1, 0], (2, 2)).unwrap();
        let dense_a = [[1, 1], [1, 0]];
        let mut expected = Vec::new();
        for r in 0..4 {
            for c in 0..4 {
                if dense_a[r / 2][c / 2] * dense_a[r % 2][c % 2] == 1 {
                    expected.push((r, c));
                }
            }
        }
        let k = kron_product(&a, &a);
        assert_eq!(expected.len(), 9);
        assert_eq!(set(&k), expected);
        assert_eq!(k.shape(), (4, 4));
    }

    #[test]
    fn kronecker_shapes_and_bases() {
        let mut r = rng::stream(3, 0);
        for k in 1..=7u32 {
            let p = gen_kronecker(2, 0.7, k, 1 << 10, &mut r).unwrap();
            assert_eq!(p.shape(), (1 << k, 1 << k));
        }
        for _ in 0..200 {
            let b = random_kron_base(2, 0.7, &mut r).unwrap();
            assert!(b.nnz() > 0 && !is_permutation(&b));
        }
        assert!(gen_kronecker(2, 0.7, 11, 1024, &mut r).is_err());
        assert!(random_kron_base(5, 0.7, &mut r).is_err());
    }

    #[test]
    fn permutation_detection() {
        assert!(is_permutation(&CooPattern::identity(3)));
        let anti = CooPattern::new(vec![0, 1], vec![1, 0], (2, 2)).unwrap();
        assert!(is_permutation(&anti));
        let not = CooPattern::new(vec![0, 0], vec![0, 1], (2, 2)).unwrap();
        assert!(!is_permutation(&not));
    }
}
