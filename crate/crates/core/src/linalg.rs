//! Thin helpers over `faer` for the dense complex algebra used everywhere
//! else: eigendecompositions, norms, the matrix exponential and a few
//! structural checks.

use alloc::vec::Vec;

use faer::linalg::solvers::Solve;
use faer::Side;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{CMat, Error, Result, C64};

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };
pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn zeros(n: usize, m: usize) -> CMat {
    CMat::zeros(n, m)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    CMat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn transpose(a: &CMat) -> CMat {
    CMat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// `a + s * b`
pub fn axpy(a: &CMat, s: C64, b: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + s * b[(i, j)])
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Largest elementwise modulus.
pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Induced 1-norm (max column sum).
pub fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `max |A - A†|`
pub fn hermiticity_error(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

/// `(A + A†) / 2`
pub fn hermitian_part(a: &CMat) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| {
        (a[(i, j)] + a[(j, i)].conj()) * 0.5
    })
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn matvec(a: &CMat, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), v.len());
    let mut out = alloc::vec![ZERO; a.nrows()];
    for (j, &x) in v.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * x;
        }
    }
    out
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &[C64], v: &[C64]) -> CMat {
    CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NumericalFailure {
            context: "hermitian eigendecomposition",
            residual: f64::NAN,
        })?;
    let s = evd.S().column_vector();
    let values = (0..a.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NumericalFailure {
            context: "hermitian eigenvalues",
            residual: f64::NAN,
        })
}

/// Eigendecomposition of a general complex matrix (right eigenvectors as
/// columns, unsorted).
pub fn eigen(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let evd = a.eigen().map_err(|_| Error::NumericalFailure {
        context: "eigendecomposition",
        residual: f64::NAN,
    })?;
    let s = evd.S().column_vector();
    let values = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(|_| Error::NumericalFailure {
        context: "eigenvalues",
        residual: f64::NAN,
    })
}

/// Singular values in non-increasing order.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    let mut s = a.singular_values().map_err(|_| Error::NumericalFailure {
        context: "singular values",
        residual: f64::NAN,
    })?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Full SVD `A = U diag(s) V†` with singular values non-increasing.
pub fn svd(a: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let dec = a.svd().map_err(|_| Error::NumericalFailure {
        context: "singular value decomposition",
        residual: f64::NAN,
    })?;
    let s = dec.S().column_vector();
    let k = a.nrows().min(a.ncols());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| s[y].re.total_cmp(&s[x].re));
    let u = dec.U();
    let v = dec.V();
    let mut uu = CMat::zeros(u.nrows(), u.ncols());
    let mut vv = CMat::zeros(v.nrows(), v.ncols());
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..u.nrows() {
            uu[(i, dst)] = u[(i, src)];
        }
        for i in 0..v.nrows() {
            vv[(i, dst)] = v[(i, src)];
        }
    }
    for j in k..u.ncols() {
        for i in 0..u.nrows() {
            uu[(i, j)] = u[(i, j)];
        }
    }
    for j in k..v.ncols() {
        for i in 0..v.nrows() {
            vv[(i, j)] = v[(i, j)];
        }
    }
    let values = order.iter().map(|&i| s[i].re).collect();
    Ok((uu, values, vv))
}

/// 2-norm condition number.
pub fn condition_number(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    Ok(if smin > 0.0 { smax / smin } else { f64::INFINITY })
}

pub fn spectral_norm(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Lower estimate of the 2-norm by power iteration on `A†A`; cheap for
/// matrices too large for a full SVD.
pub fn spectral_norm_estimate(a: &CMat, iterations: usize) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05))
        .collect();
    let ah = dagger(a);
    let mut est = 0.0;
    for _ in 0..iterations.max(1) {
        let nv = norm2(&v);
        if nv == 0.0 {
            return 0.0;
        }
        for z in v.iter_mut() {
            *z /= nv;
        }
        let av = matvec(a, &v);
        est = norm2(&av);
        v = matvec(&ah, &av);
    }
    est
}

/// Solves `A X = B` by partial-pivot LU.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;

    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scale(a, C64::new(2f64.powi(-s), 0.0));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> CMat {
        CMat::from_fn(n, n, |i, j| {
            a6[(i, j)] * c6 + a4[(i, j)] * c4 + a2[(i, j)] * c2 + id[(i, j)] * c0
        })
    };
    let u_inner = &a6 * &lin(B[13], B[11], B[9], 0.0) + lin(B[7], B[5], B[3], B[1]);
    let u = &a * &u_inner;
    let v = &a6 * &lin(B[12], B[10], B[8], 0.0) + lin(B[6], B[4], B[2], B[0]);

    let mut r = solve(&(&v - &u), &(&v + &u));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `exp(-i G)` for Hermitian `G` through its eigendecomposition.
pub fn unitary_from_hermitian(g: &CMat) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(g)?;
    let n = g.nrows();
    let phases: Vec<C64> = vals.iter().map(|&v| C64::new(0.0, -v).exp()).collect();
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let c = phases[k] * vecs[(j, k)].conj();
            for i in 0..n {
                out[(i, j)] += vecs[(i, k)] * c;
            }
        }
    }
    Ok(out)
}

/// Column-stacking vectorization.
pub fn vectorize(a: &CMat) -> Vec<C64> {
    let n = a.nrows();
    let mut v = alloc::vec![ZERO; n * a.ncols()];
    for j in 0..a.ncols() {
        for i in 0..n {
            v[i + n * j] = a[(i, j)];
        }
    }
    v
}

/// Inverse of [`vectorize`] for square matrices.
pub fn unvectorize(v: &[C64], n: usize) -> CMat {
    assert_eq!(v.len(), n * n);
    CMat::from_fn(n, n, |i, j| v[i + n * j])
}

/// Lexicographic order on (re, im).
pub fn cmp_re_im(a: &C64, b: &C64) -> core::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Largest distance in a greedy nearest-neighbour matching of two
/// equally sized multisets of complex numbers.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = alloc::vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}
