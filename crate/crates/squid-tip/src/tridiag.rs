//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the lowest
//! eigenvalues, inverse iteration for eigenvectors.

use crate::error::{Result, SquidError};

/// Number of eigenvalues of `T - x I` that are negative, via the Sturm
/// sequence of leading principal minors.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let e2 = off[i - 1] * off[i - 1];
        // Guard against exact zero pivots.
        let denom = if q.abs() < f64::MIN_POSITIVE {
            f64::MIN_POSITIVE.copysign(q)
        } else {
            q
        };
        q = diag[i] - x - e2 / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// Bisect for the k-th (0-based, ascending) eigenvalue.
fn bisect_kth(diag: &[f64], off: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    // ~90 halvings take the interval to round-off for any f64 range.
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve (T - shift I) x = b with partial-pivoting LU for tridiagonal T.
/// Returns false if the system is numerically singular beyond use.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, b: &mut [f64]) -> bool {
    let n = diag.len();
    // Bands: sub (len n-1), main, sup1 (len n-1), sup2 (len n-2, fill-in).
    let mut d = vec![0.0; n];
    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    let mut low = vec![0.0; n];
    let mut swapped = vec![false; n];
    for i in 0..n {
        d[i] = diag[i] - shift;
        u1[i] = if i < n - 1 { off[i] } else { 0.0 };
        low[i] = if i < n - 1 { off[i] } else { 0.0 };
    }
    // Forward elimination with row swaps.
    for i in 0..n - 1 {
        if low[i].abs() > d[i].abs() {
            swapped[i] = true;
            std::mem::swap(&mut d[i], &mut low[i]);
            let t = u1[i];
            u1[i] = d[i + 1];
            d[i + 1] = t;
            if i < n - 2 {
                u2[i] = u1[i + 1];
                u1[i + 1] = 0.0;
            }
            b.swap(i, i + 1);
        }
        let piv = if d[i].abs() < f64::MIN_POSITIVE {
            f64::MIN_POSITIVE.copysign(d[i])
        } else {
            d[i]
        };
        let m = low[i] / piv;
        d[i + 1] -= m * u1[i];
        if i < n - 2 {
            u1[i + 1] -= m * u2[i];
        }
        b[i + 1] -= m * b[i];
    }
    // Back substitution.
    for i in (0..n).rev() {
        let mut s = b[i];
        if i < n - 1 {
            s -= u1[i] * b[i + 1];
        }
        if i < n - 2 {
            s -= u2[i] * b[i + 2];
        }
        let piv = if d[i].abs() < f64::MIN_POSITIVE {
            f64::MIN_POSITIVE.copysign(d[i])
        } else {
            d[i]
        };
        b[i] = s / piv;
        if !b[i].is_finite() {
            return false;
        }
    }
    true
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lowest `k` eigenpairs of the symmetric tridiagonal matrix (`diag`, `off`).
/// Eigenvectors are returned unit-normalized in the Euclidean sense and
/// mutually orthogonalized.
pub fn lowest_eigenpairs(diag: &[f64], off: &[f64], k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = diag.len();
    if off.len() + 1 != n {
        return Err(SquidError::Numerical("band length mismatch".into()));
    }
    if k == 0 || k > n {
        return Err(SquidError::Numerical(format!(
            "requested {k} eigenpairs of an order-{n} matrix"
        )));
    }
    let (lo, hi) = gershgorin(diag, off);
    let scale = hi.abs().max(lo.abs()).max(1.0);

    let mut values = Vec::with_capacity(k);
    for j in 0..k {
        values.push(bisect_kth(diag, off, j, lo, hi));
    }

    // Deterministic pseudo-random start vector for inverse iteration; a
    // structured start can be accidentally orthogonal to the target mode.
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = (i as u64).wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407 + j as u64);
                s ^= s >> 33;
                (s % 10_000) as f64 / 10_000.0 - 0.5
            })
            .collect();
        let mut lambda = values[j];
        let mut ok = false;
        for _ in 0..6 {
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            let mut w = v.clone();
            if !solve_shifted(diag, off, lambda, &mut w) {
                break;
            }
            let nw = norm(&w);
            // Residual of the previous iterate is 1/||w||.
            if nw > 1.0 / (1e3 * f64::EPSILON * scale) {
                v = w;
                let nv = norm(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                ok = true;
                break;
            }
            v = w;
            // Rayleigh-quotient refinement of the shift.
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            lambda = rayleigh_quotient(diag, off, &v);
        }
        if !ok {
            // Accept the last iterate if its residual is still acceptable.
            let r = residual(diag, off, values[j], &v);
            if r > 1e-8 * scale {
                return Err(SquidError::Numerical(format!(
                    "inverse iteration failed to converge for eigenvalue {j} \
                     (residual {r:.3e}, scale {scale:.3e})"
                )));
            }
        }
        // Orthogonalize against previously found vectors (twice, for the
        // nearly degenerate doublets).
        for _ in 0..2 {
            for prev in &vectors {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            let nv = norm(&v);
            if nv < 1e-8 {
                return Err(SquidError::Numerical(format!(
                    "eigenvector {j} collapsed during orthogonalization"
                )));
            }
            v.iter_mut().for_each(|x| *x /= nv);
        }
        values[j] = rayleigh_quotient(diag, off, &v);
        vectors.push(v);
    }
    // Bisection can only misorder within round-off; enforce ascending output.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values = order.iter().map(|&i| values[i]).collect();
    let vectors = order.iter().map(|&i| std::mem::take(&mut vectors[i])).collect();
    Ok((values, vectors))
}

pub fn rayleigh_quotient(diag: &[f64], off: &[f64], v: &[f64]) -> f64 {
    let n = diag.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let mut tv = diag[i] * v[i];
        if i > 0 {
            tv += off[i - 1] * v[i - 1];
        }
        if i < n - 1 {
            tv += off[i] * v[i + 1];
        }
        num += v[i] * tv;
        den += v[i] * v[i];
    }
    num / den
}

fn residual(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut r2 = 0.0;
    for i in 0..n {
        let mut tv = diag[i] * v[i] - lambda * v[i];
        if i > 0 {
            tv += off[i - 1] * v[i - 1];
        }
        if i < n - 1 {
            tv += off[i] * v[i + 1];
        }
        r2 += tv * tv;
    }
    r2.sqrt() / norm(v)
}
