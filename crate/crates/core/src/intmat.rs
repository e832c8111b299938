//! Exact integer linear algebra: Hermite normal form, kernels, saturation.
//!
//! Matrices are row-major `Vec<Vec<Integer>>`; lattices are always spanned by rows.

use rug::{Assign, Integer};

pub type IMat = Vec<Vec<Integer>>;

pub fn from_i64(rows: &[Vec<i64>]) -> IMat {
    rows.iter().map(|r| r.iter().map(|&x| Integer::from(x)).collect()).collect()
}

pub fn to_i64(rows: &IMat) -> Vec<Vec<i64>> {
    rows.iter()
        .map(|r| r.iter().map(|x| x.to_i64().expect("entry fits in i64")).collect())
        .collect()
}

pub fn identity(n: usize) -> IMat {
    (0..n)
        .map(|i| (0..n).map(|j| Integer::from((i == j) as i32)).collect())
        .collect()
}

pub fn transpose(a: &IMat, ncols: usize) -> IMat {
    (0..ncols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &IMat, b: &IMat, inner: usize, ncols: usize) -> IMat {
    a.iter()
        .map(|r| {
            (0..ncols)
                .map(|j| {
                    let mut s = Integer::new();
                    for k in 0..inner {
                        s += &r[k] * &b[k][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn is_zero_row(r: &[Integer]) -> bool {
    r.iter().all(|x| *x == 0)
}

/// Replaces rows `(i, j)` of `m` by `(s r_i + t r_j, x r_i + y r_j)`.
fn combine(m: &mut IMat, i: usize, j: usize, s: &Integer, t: &Integer, x: &Integer, y: &Integer) {
    for c in 0..m[i].len() {
        let a = m[i][c].clone();
        let b = m[j][c].clone();
        m[i][c] = Integer::from(s * &a) + t * &b;
        m[j][c] = Integer::from(x * &a) + y * &b;
    }
}

fn sub_multiple(m: &mut IMat, target: usize, src: usize, q: &Integer) {
    for c in 0..m[target].len() {
        let d = Integer::from(q * &m[src][c]);
        m[target][c] -= d;
    }
}

/// Row Hermite normal form with transform: returns `(H, U)` with `U A = H`, `U` unimodular.
/// Nonzero rows of `H` come first, have positive pivots, and entries above each pivot
/// are reduced into `[0, pivot)`.
pub fn hnf_with_transform(a: &IMat, ncols: usize) -> (IMat, IMat) {
    let r = a.len();
    let mut h = a.clone();
    let mut u = identity(r);
    let mut row = 0;
    for col in 0..ncols {
        if row == r {
            break;
        }
        for i in row + 1..r {
            if h[i][col] == 0 {
                continue;
            }
            let a0 = h[row][col].clone();
            let b0 = h[i][col].clone();
            let (g, s, t) = a0.clone().gcd_cofactors(b0.clone(), Integer::new());
            let x = -Integer::from(&b0 / &g);
            let y = Integer::from(&a0 / &g);
            combine(&mut h, row, i, &s, &t, &x, &y);
            combine(&mut u, row, i, &s, &t, &x, &y);
        }
        if h[row][col] == 0 {
            continue;
        }
        if h[row][col] < 0 {
            for v in h[row].iter_mut() {
                *v = -v.clone();
            }
            for v in u[row].iter_mut() {
                *v = -v.clone();
            }
        }
        for i in 0..row {
            let q = h[i][col].clone().div_rem_floor(h[row][col].clone()).0;
            if q != 0 {
                sub_multiple(&mut h, i, row, &q);
                sub_multiple(&mut u, i, row, &q);
            }
        }
        row += 1;
    }
    (h, u)
}

/// Nonzero rows of the Hermite normal form.
pub fn hnf(a: &IMat, ncols: usize) -> IMat {
    let (h, _) = hnf_with_transform(a, ncols);
    h.into_iter().filter(|r| !is_zero_row(r)).collect()
}

pub fn rank(a: &IMat, ncols: usize) -> usize {
    hnf(a, ncols).len()
}

/// Basis (in Hermite form) of the integer kernel `{x : A x = 0}`; always saturated.
pub fn kernel(a: &IMat, ncols: usize) -> IMat {
    if a.is_empty() {
        return identity(ncols);
    }
    let at = transpose(a, ncols);
    let (h, u) = hnf_with_transform(&at, a.len());
    let ker: IMat = h
        .iter()
        .zip(u)
        .filter(|(hr, _)| is_zero_row(hr))
        .map(|(_, ur)| ur)
        .collect();
    hnf(&ker, ncols)
}

/// `(L ⊗ Q) ∩ Z^n` for the row lattice `L`.
pub fn saturate(a: &IMat, ncols: usize) -> IMat {
    let k = kernel(a, ncols);
    if k.is_empty() {
        return identity(ncols);
    }
    kernel(&k, ncols)
}

/// Membership of `v` in the lattice whose Hermite basis is `basis`.
pub fn contains(basis: &IMat, v: &[Integer]) -> bool {
    let mut w: Vec<Integer> = v.to_vec();
    for row in basis {
        let Some(col) = row.iter().position(|x| *x != 0) else { continue };
        let (q, r) = w[col].clone().div_rem_floor(row[col].clone());
        if r != 0 {
            return false;
        }
        for c in 0..w.len() {
            let d = Integer::from(&q * &row[c]);
            w[c] -= d;
        }
    }
    w.iter().all(|x| *x == 0)
}

pub fn same_lattice(a: &IMat, b: &IMat, ncols: usize) -> bool {
    hnf(a, ncols) == hnf(b, ncols)
}

pub fn is_saturated(a: &IMat, ncols: usize) -> bool {
    same_lattice(a, &saturate(a, ncols), ncols)
}

/// For a full-row-rank `B` (r x n) whose row lattice is saturated, returns `Y` (n x r)
/// with `B Y = I`. Returns `None` if the lattice is not saturated.
pub fn right_inverse(b: &IMat, ncols: usize) -> Option<IMat> {
    let r = b.len();
    let bt = transpose(b, ncols);
    let (h, u) = hnf_with_transform(&bt, r);
    // B U^T = H^T; the top r x r block of H is upper triangular.
    for i in 0..r {
        if h[i][i] != 1 {
            return None;
        }
    }
    let v = transpose(&u, ncols);
    // T^T lower unitriangular; invert by forward substitution.
    let mut tinv = identity(r);
    for col in 0..r {
        for i in 0..r {
            let mut s = Integer::from((i == col) as i32);
            for k in 0..i {
                // (T^T)[i][k] = h[k][i]
                s -= Integer::from(&h[k][i] * &tinv[k][col]);
            }
            tinv[i][col].assign(s);
        }
    }
    let vr: IMat = v.iter().map(|row| row[..r].to_vec()).collect();
    Some(mat_mul(&vr, &tinv, r, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IMat {
        from_i64(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn hnf_basic() {
        let a = m(&[&[2, 4, 4], &[-6, 6, 12], &[10, 4, 16]]);
        let h = hnf(&a, 3);
        assert_eq!(to_i64(&h), vec![vec![2, 0, 120], vec![0, 2, 20], vec![0, 0, 156]]);
        let (h2, u) = hnf_with_transform(&a, 3);
        assert_eq!(mat_mul(&u, &a, 3, 3), h2);
    }

    #[test]
    fn kernel_and_saturation() {
        let a = m(&[&[1, 1, 1]]);
        let k = kernel(&a, 3);
        assert_eq!(k.len(), 2);
        for r in &k {
            let s: Integer = r.iter().sum();
            assert_eq!(s, 0);
        }
        let l = m(&[&[2, 0], &[0, 3]]);
        assert_eq!(to_i64(&saturate(&l, 2)), vec![vec![1, 0], vec![0, 1]]);
        let l = m(&[&[2, 2, 0]]);
        assert_eq!(to_i64(&saturate(&l, 3)), vec![vec![1, 1, 0]]);
        assert!(!is_saturated(&l, 3));
    }

    #[test]
    fn membership() {
        let b = hnf(&m(&[&[1, 1, -2], &[0, 3, -3]]), 3);
        assert!(contains(&b, &[Integer::from(1), Integer::from(4), Integer::from(-5)]));
        assert!(!contains(&b, &[Integer::from(0), Integer::from(1), Integer::from(-1)]));
    }

    #[test]
    fn right_inverse_works() {
        let b = m(&[&[1, 2, 3], &[0, 1, 4]]);
        let y = right_inverse(&b, 3).unwrap();
        assert_eq!(mat_mul(&b, &y, 3, 2), identity(2));
        assert!(right_inverse(&m(&[&[2, 0, 0]]), 3).is_none());
    }
}
