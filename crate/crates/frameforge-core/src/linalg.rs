//! Small dense linear algebra: Cholesky solves for the greedy refits and
//! shifted-base fits (systems stay well under 100×100), and a Jacobi
//! eigenvalue sweep for the ≤3×3 Hessians the activation checks produce.
//! Hand-rolled on purpose — pulling in a matrix crate for this would cost
//! more in `no_std` plumbing than these ~100 lines.

use alloc::vec;
use alloc::vec::Vec;

/// Solve `A x = b` for symmetric positive definite `A` (row-major, n×n)
/// via Cholesky. Returns `None` when a pivot underflows, i.e. the matrix
/// is numerically semidefinite or indefinite.
pub fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    // Factor A = L L^T, L lower triangular, in place on a copy.
    let mut l = a.to_vec();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = libm::sqrt(d);
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    // Forward substitution: L y = b.
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[i * n + k] * y[k];
            y[i] -= t;
        }
        y[i] /= l[i * n + i];
    }
    // Back substitution: L^T x = y.
    let mut x = y;
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[k * n + i] * x[k];
            x[i] -= t;
        }
        x[i] /= l[i * n + i];
    }
    Some(x)
}

/// Solve an SPD system, retrying once with a ridge `λ = rel_ridge·tr(A)/n`
/// added to the diagonal when the plain factorization fails. Returns
/// `None` only if the ridged system is still singular.
pub fn solve_spd_ridged(a: &[f64], b: &[f64], n: usize, rel_ridge: f64) -> Option<Vec<f64>> {
    if let Some(x) = solve_spd(a, b, n) {
        return Some(x);
    }
    let mut trace = 0.0;
    for i in 0..n {
        trace += a[i * n + i];
    }
    let lambda = rel_ridge * trace / n as f64;
    let mut ridged = a.to_vec();
    for i in 0..n {
        ridged[i * n + i] += lambda;
    }
    solve_spd(&ridged, b, n)
}

/// Largest absolute eigenvalue of a small symmetric matrix (row-major,
/// n×n, n ≤ 4 in practice) via cyclic Jacobi rotations.
pub fn sym_eig_max_abs(a: &[f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    if n == 1 {
        return libm::fabs(a[0]);
    }
    let mut m = a.to_vec();
    for _sweep in 0..32 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if libm::fabs(apq) < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * libm::atan2(2.0 * apq, aqq - app);
                let (s, c) = (libm::sin(theta), libm::cos(theta));
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut best = 0.0;
    for i in 0..n {
        let v = libm::fabs(m[i * n + i]);
        if v > best {
            best = v;
        }
    }
    best
}

/// Gaussian-elimination solve with partial pivoting for general square
/// systems (used by the vector-weight rewrite tests and as a fallback
/// oracle). Returns `None` on a zero pivot.
pub fn solve_general(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if libm::fabs(m[r * n + col]) > libm::fabs(m[piv * n + col]) {
                piv = r;
            }
        }
        if libm::fabs(m[piv * n + col]) < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            rhs.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = m[r * n + col] / m[col * n + col];
            for k in col..n {
                let t = f * m[col * n + k];
                m[r * n + k] -= t;
            }
            let t = f * rhs[col];
            rhs[r] -= t;
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}
