//! Smith normal form over the integers with transformation matrices.
//!
//! For a square integer matrix `A` this computes unimodular `U`, `V` and a
//! diagonal `D = U * A * V` with `d_0 | d_1 | ...` and nonnegative entries.
//! All arithmetic is checked `i128`.

use crate::error::{LatticeError, Result};

#[derive(Debug, Clone)]
pub(crate) struct Smith {
    pub diag: Vec<i128>,
    /// Row transform `U`.
    pub left: Vec<Vec<i128>>,
    /// Column transform `V`.
    pub right: Vec<Vec<i128>>,
}

fn identity(n: usize) -> Vec<Vec<i128>> {
    (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect()
}

fn mul_sub(x: i128, q: i128, y: i128) -> Result<i128> {
    q.checked_mul(y)
        .and_then(|p| x.checked_sub(p))
        .ok_or(LatticeError::Overflow)
}

/// `row[dst] -= q * row[src]`
fn row_axpy(m: &mut [Vec<i128>], dst: usize, src: usize, q: i128) -> Result<()> {
    for j in 0..m[dst].len() {
        m[dst][j] = mul_sub(m[dst][j], q, m[src][j])?;
    }
    Ok(())
}

/// `col[dst] -= q * col[src]`
fn col_axpy(m: &mut [Vec<i128>], dst: usize, src: usize, q: i128) -> Result<()> {
    for row in m.iter_mut() {
        row[dst] = mul_sub(row[dst], q, row[src])?;
    }
    Ok(())
}

fn swap_cols(m: &mut [Vec<i128>], a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

pub(crate) fn smith_normal_form(input: &[Vec<i128>]) -> Result<Smith> {
    let n = input.len();
    let mut a: Vec<Vec<i128>> = input.to_vec();
    let mut left = identity(n);
    let mut right = identity(n);

    for k in 0..n {
        loop {
            // smallest nonzero entry of the trailing block
            let mut pivot: Option<(usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(k) {
                for (j, &v) in row.iter().enumerate().skip(k) {
                    if v != 0 && pivot.is_none_or(|(pi, pj)| v.abs() < a[pi][pj].abs()) {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                return finish(a, left, right);
            };
            a.swap(k, pi);
            left.swap(k, pi);
            swap_cols(&mut a, k, pj);
            swap_cols(&mut right, k, pj);

            let p = a[k][k];
            let mut clean = true;
            for i in k + 1..n {
                let q = a[i][k] / p;
                if q != 0 {
                    row_axpy(&mut a, i, k, q)?;
                    row_axpy(&mut left, i, k, q)?;
                }
                clean &= a[i][k] == 0;
            }
            for j in k + 1..n {
                let q = a[k][j] / p;
                if q != 0 {
                    col_axpy(&mut a, j, k, q)?;
                    col_axpy(&mut right, j, k, q)?;
                }
                clean &= a[k][j] == 0;
            }
            if !clean {
                continue;
            }
            // the pivot must divide the whole trailing block
            let offender = (k + 1..n).find(|&i| (k + 1..n).any(|j| a[i][j] % p != 0));
            match offender {
                Some(i) => {
                    row_axpy(&mut a, k, i, -1)?;
                    row_axpy(&mut left, k, i, -1)?;
                }
                None => break,
            }
        }
        if a[k][k] < 0 {
            for v in a[k].iter_mut() {
                *v = -*v;
            }
            for v in left[k].iter_mut() {
                *v = -*v;
            }
        }
    }
    finish(a, left, right)
}

fn finish(a: Vec<Vec<i128>>, left: Vec<Vec<i128>>, right: Vec<Vec<i128>>) -> Result<Smith> {
    let diag = (0..a.len()).map(|i| a[i][i]).collect();
    Ok(Smith { diag, left, right })
}
