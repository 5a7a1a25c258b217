//! Stack-allocated `N×N` complex matrices for the propagation hot loops.

use crate::linalg::{ComplexMatrix, C64};

pub type Small<const N: usize> = [[C64; N]; N];

pub fn zero<const N: usize>() -> Small<N> {
    [[C64::new(0.0, 0.0); N]; N]
}

pub fn identity<const N: usize>() -> Small<N> {
    let mut m = zero::<N>();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

#[inline]
pub fn mul<const N: usize>(a: &Small<N>, b: &Small<N>) -> Small<N> {
    let mut out = zero::<N>();
    for i in 0..N {
        for k in 0..N {
            let x = a[i][k];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for j in 0..N {
                out[i][j] += x * b[k][j];
            }
        }
    }
    out
}

fn norm_one<const N: usize>(a: &Small<N>) -> f64 {
    (0..N)
        .map(|c| (0..N).map(|r| a[r][c].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring with a Taylor series, as [`ComplexMatrix::expm`].
pub fn expm<const N: usize>(a: &Small<N>) -> Small<N> {
    let norm = norm_one(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let s = 0.5f64.powi(squarings);
    let mut scaled = *a;
    for row in scaled.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    let mut result = identity::<N>();
    let mut term = identity::<N>();
    for k in 1..=30 {
        term = mul(&term, &scaled);
        let inv = 1.0 / k as f64;
        let mut size: f64 = 0.0;
        for (rrow, trow) in result.iter_mut().zip(term.iter_mut()) {
            for (r, t) in rrow.iter_mut().zip(trow.iter_mut()) {
                *t *= inv;
                *r += *t;
                size = size.max(t.norm());
            }
        }
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}

pub fn from_matrix<const N: usize>(m: &ComplexMatrix) -> Small<N> {
    assert_eq!(m.dim(), N);
    let mut out = zero::<N>();
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)];
        }
    }
    out
}

pub fn to_matrix<const N: usize>(a: &Small<N>) -> ComplexMatrix {
    ComplexMatrix::from_rows(N, a.iter().flat_map(|r| r.iter().cloned()).collect())
}
