//! Exact integral LLL reduction (all Gram–Schmidt data kept as integers).

use rug::Integer;

use crate::intmat::IMat;

fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    let mut s = Integer::new();
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Nearest integer to `a / b` for `b > 0`.
fn round_div(a: &Integer, b: &Integer) -> Integer {
    let two_a = Integer::from(a * 2u32) + b;
    two_a.div_rem_floor(Integer::from(b * 2u32)).0
}

/// LLL-reduces the rows of `basis` in place with parameter `δ = num/den`.
/// Rows must be linearly independent; returns `false` otherwise.
pub fn lll_reduce_with(basis: &mut IMat, num: u32, den: u32) -> bool {
    let n = basis.len();
    if n <= 1 {
        return n == 0 || basis[0].iter().any(|x| *x != 0);
    }
    // d[i+1] = Gram determinant of the first i+1 rows; d[0] = 1.
    let mut d: Vec<Integer> = vec![Integer::new(); n + 1];
    let mut lam: Vec<Vec<Integer>> = vec![vec![Integer::new(); n]; n];
    d[0] = Integer::from(1);
    d[1] = dot(&basis[0], &basis[0]);
    if d[1] == 0 {
        return false;
    }
    let mut k = 1usize;
    let mut kmax = 0usize;

    let red = |basis: &mut IMat, lam: &mut Vec<Vec<Integer>>, d: &[Integer], k: usize, l: usize| {
        let twice = Integer::from(&lam[k][l] * 2u32).abs();
        if twice > d[l + 1] {
            let q = round_div(&lam[k][l], &d[l + 1]);
            let (lo, hi) = basis.split_at_mut(k);
            for (x, y) in hi[0].iter_mut().zip(&lo[l]) {
                *x -= Integer::from(&q * y);
            }
            lam[k][l] -= Integer::from(&q * &d[l + 1]);
            for i in 0..l {
                let t = Integer::from(&q * &lam[l][i]);
                lam[k][i] -= t;
            }
        }
    };

    while k < n {
        if k > kmax {
            kmax = k;
            for j in 0..=k {
                let mut u = dot(&basis[k], &basis[j]);
                for i in 0..j {
                    u = (Integer::from(&d[i + 1] * &u) - Integer::from(&lam[k][i] * &lam[j][i])) / &d[i];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if u == 0 {
                        return false;
                    }
                    d[k + 1] = u;
                }
            }
        }
        loop {
            red(basis, &mut lam, &d, k, k - 1);
            // Lovász: den·d_{k+1}·d_{k-1} < num·d_k² − den·λ²  ⇒ swap
            let lhs = Integer::from(&d[k + 1] * &d[k - 1]) * den;
            let l2 = Integer::from(lam[k][k - 1].square_ref());
            let rhs = Integer::from(d[k].square_ref()) * num - l2 * den;
            if lhs < rhs {
                basis.swap(k, k - 1);
                for j in 0..k - 1 {
                    let t = std::mem::take(&mut lam[k][j]);
                    lam[k][j] = std::mem::replace(&mut lam[k - 1][j], t);
                }
                let l = lam[k][k - 1].clone();
                let b = (Integer::from(&d[k - 1] * &d[k + 1]) + Integer::from(l.square_ref())) / &d[k];
                for i in k + 1..=kmax {
                    let t = lam[i][k].clone();
                    lam[i][k] = (Integer::from(&d[k + 1] * &lam[i][k - 1]) - Integer::from(&l * &t)) / &d[k];
                    lam[i][k - 1] = (Integer::from(&b * &t) + Integer::from(&l * &lam[i][k])) / &d[k + 1];
                }
                d[k] = b;
                if k > 1 {
                    k -= 1;
                }
            } else {
                break;
            }
        }
        for l in (0..k - 1).rev() {
            red(basis, &mut lam, &d, k, l);
        }
        k += 1;
    }
    true
}

/// LLL with `δ = 99/100`.
pub fn lll_reduce(basis: &mut IMat) -> bool {
    lll_reduce_with(basis, 99, 100)
}

/// Integer-relation search on rows `[e_i | x_i]`, where `x_i` holds the values scaled by
/// `2^bits`. The value columns are revealed `step` bits at a time and the unimodular
/// transform is carried between stages, so every stage works on small integers.
/// Returns the reduced rows at full scale.
pub fn integer_relation_basis(x: &[Vec<Integer>], bits: u32, step: u32) -> Option<IMat> {
    let n = x.len();
    let c = x.first().map_or(0, |r| r.len());
    let mut u: IMat = crate::intmat::identity(n);
    let mut t = step.min(bits);
    loop {
        let shift = bits - t;
        let mut rows: IMat = u
            .iter()
            .map(|ur| {
                let mut r = ur.clone();
                for col in 0..c {
                    let mut s = Integer::new();
                    for (a, xr) in ur.iter().zip(x) {
                        if *a != 0 {
                            s += Integer::from(a * &xr[col]);
                        }
                    }
                    r.push(s >> shift);
                }
                r
            })
            .collect();
        if !lll_reduce(&mut rows) {
            return None;
        }
        if t == bits {
            return Some(rows);
        }
        u = rows.into_iter().map(|mut r| {
            r.truncate(n);
            r
        }).collect();
        t = (t + step).min(bits);
    }
}
