//! Real symmetric eigensolvers: Householder tridiagonalization, implicit QL
//! on tridiagonal matrices, and a Lanczos iteration for the low end of large
//! sparse spectra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// `self · otherᵀ`, skipping structural zeros of `self`.
    pub fn mul_transpose(&self, other: &SquareMatrix) -> SquareMatrix {
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        let nonzero: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|k| {
                        let v = self.get(i, k);
                        (v != 0.0).then_some((k, v))
                    })
                    .collect()
            })
            .collect();
        let other_rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|j| {
                (0..n)
                    .filter_map(|k| {
                        let v = other.get(j, k);
                        (v != 0.0).then_some((k, v))
                    })
                    .collect()
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                let (a, b) = (&nonzero[i], &other_rows[j]);
                let (mut p, mut q) = (0, 0);
                while p < a.len() && q < b.len() {
                    match a[p].0.cmp(&b[q].0) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += a[p].1 * b[q].1;
                            p += 1;
                            q += 1;
                        }
                    }
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Largest absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Half-bandwidth: the largest `|i - j|` with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        let mut band = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) != 0.0 {
                    band = band.max(i.abs_diff(j));
                }
            }
        }
        band
    }

    /// Permutes rows and columns: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> SquareMatrix {
        SquareMatrix::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn mat_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.data[i * self.n..(i + 1) * self.n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// Dense text dump, one row per line. Signed zeros print as `0`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:.16e}", self.get(i, j) + 0.0)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Eigenvalues in ascending order with optional eigenvectors (column `k` ↔ value `k`).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Option<SquareMatrix>,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Option<Vec<f64>> {
        self.vectors
            .as_ref()
            .map(|v| (0..v.dim()).map(|i| v.get(i, k)).collect())
    }
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn symmetric_eigen(matrix: &SquareMatrix, want_vectors: bool) -> Result<SymmetricEigen> {
    if !matrix.is_symmetric() {
        return Err(Error::NumericalIntegrity("matrix is not symmetric".into()));
    }
    let n = matrix.dim();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: want_vectors.then(|| SquareMatrix::zeros(0)),
        });
    }
    if matrix.bandwidth() <= 1 {
        let diag: Vec<f64> = (0..n).map(|i| matrix.get(i, i)).collect();
        let off: Vec<f64> = (1..n).map(|i| matrix.get(i, i - 1)).collect();
        return tridiagonal_eigen(&diag, &off, want_vectors);
    }
    let mut v = matrix.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut v, &mut d, &mut e, want_vectors);
    implicit_ql(&mut d, &mut e, if want_vectors { Some(&mut v) } else { None })?;
    Ok(sorted(d, want_vectors.then_some(v)))
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal `diag`
/// and sub/super-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<SymmetricEigen> {
    let n = diag.len();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: None,
        });
    }
    if off.len() + 1 != n {
        return Err(Error::InvalidInput(format!(
            "tridiagonal with {n} diagonal entries needs {} off-diagonal entries, got {}",
            n - 1,
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    // implicit_ql expects e[i] to couple rows i-1 and i.
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(off);
    let mut v = want_vectors.then(|| SquareMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 }));
    implicit_ql(&mut d, &mut e, v.as_mut())?;
    Ok(sorted(d, v))
}

fn sorted(values: Vec<f64>, vectors: Option<SquareMatrix>) -> SymmetricEigen {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = vectors.map(|v| SquareMatrix::from_fn(v.dim(), |i, j| v.get(i, order[j])));
    SymmetricEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// Householder reduction to tridiagonal form. On return `v` holds the
/// orthogonal transformation, `d` the diagonal and `e[1..]` the sub-diagonal.
fn householder_tridiagonalize(v: &mut SquareMatrix, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = v.dim();
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v.set(j, i, f);
                g = e[j] + v.get(j, j) * f;
                for k in j + 1..i {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v.add_to(k, j, -(f * e[k] + g * d[k]));
                }
                d[j] = v.get(i - 1, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }
    if !accumulate {
        for j in 0..n {
            d[j] = v.get(j, j);
        }
        e[0] = 0.0;
        return;
    }
    for i in 0..n - 1 {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for k in 0..=i {
                    v.add_to(k, j, -g * d[k]);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

/// Implicit QL iteration with Wilkinson-type shifts on a symmetric tridiagonal
/// matrix, accumulating rotations into `v` when given.
fn implicit_ql(d: &mut [f64], e: &mut [f64], mut v: Option<&mut SquareMatrix>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > 60 {
                    return Err(Error::NumericalIntegrity(
                        "tridiagonal QL iteration did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let h = v.get(k, i + 1);
                            let vi = v.get(k, i);
                            v.set(k, i + 1, s * vi + c * h);
                            v.set(k, i, c * vi - s * h);
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Settings for [`lanczos_lowest`].
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_krylov: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_krylov: 400,
            tolerance: 1e-12,
            seed: 0x5eed,
        }
    }
}

/// Lowest eigenpair of the symmetric operator `apply` (y = A·x) on the
/// orthogonal complement of `deflate` (orthonormal vectors). Uses full
/// reorthogonalization, so the result is reliable for clustered spectra.
pub fn lanczos_lowest<F>(
    dim: usize,
    apply: F,
    deflate: &[Vec<f64>],
    options: LanczosOptions,
) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    if dim <= deflate.len() {
        return Err(Error::InvalidInput("no space left after deflation".into()));
    }
    // A fresh start per deflation depth: reusing one start vector would give it
    // no component along an exactly degenerate partner of a deflated vector.
    let mut rng = ChaCha8Rng::seed_from_u64(
        options.seed ^ (deflate.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    );
    let mut q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    orthogonalize(&mut q, deflate);
    orthogonalize(&mut q, deflate);
    normalize(&mut q)?;

    let max_krylov = options.max_krylov.min(dim - deflate.len());
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_krylov);
    let mut alphas = Vec::with_capacity(max_krylov);
    let mut betas: Vec<f64> = Vec::with_capacity(max_krylov);
    let mut w = vec![0.0; dim];
    basis.push(q);

    loop {
        let k = basis.len() - 1;
        apply(&basis[k], &mut w);
        let alpha = dot(&w, &basis[k]);
        alphas.push(alpha);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, deflate);
        }
        let beta = norm(&w);

        let m = alphas.len();
        let check = m == max_krylov || beta < 1e-14 || m % 8 == 0;
        if check {
            let ritz = tridiagonal_eigen(&alphas, &betas, true)?;
            let theta = ritz.values[0];
            let y = ritz.vector(0).expect("vectors requested");
            let residual = (beta * y[m - 1]).abs();
            let converged = residual <= options.tolerance * theta.abs().max(1.0);
            if converged || m == max_krylov || beta < 1e-14 {
                if !converged && beta >= 1e-14 {
                    log::warn!("Lanczos stopped at {m} vectors with residual {residual:e}");
                }
                let mut vector = vec![0.0; dim];
                for (b, c) in basis.iter().zip(&y) {
                    for (v, bi) in vector.iter_mut().zip(b) {
                        *v += c * bi;
                    }
                }
                normalize(&mut vector)?;
                return Ok((theta, vector));
            }
        }
        betas.push(beta);
        let next: Vec<f64> = w.iter().map(|x| x / beta).collect();
        basis.push(next);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) -> Result<()> {
    let n = norm(a);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::NumericalIntegrity("cannot normalize a zero vector".into()));
    }
    a.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    for b in against {
        let c = dot(w, b);
        for (x, y) in w.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_symmetric(n: usize, seed: u64) -> SquareMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    fn check_decomposition(m: &SquareMatrix, eig: &SymmetricEigen) {
        let n = m.dim();
        let v = eig.vectors.as_ref().unwrap();
        for k in 0..n {
            let x = eig.vector(k).unwrap();
            let mut y = vec![0.0; n];
            m.mat_vec(&x, &mut y);
            for i in 0..n {
                assert_abs_diff_eq!(y[i], eig.values[k] * x[i], epsilon = 1e-10);
            }
            for j in 0..n {
                let d: f64 = (0..n).map(|i| v.get(i, k) * v.get(i, j)).sum();
                assert_abs_diff_eq!(d, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dense_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let m = random_symmetric(n, seed);
            let eig = symmetric_eigen(&m, true).unwrap();
            check_decomposition(&m, &eig);
            let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
            assert_abs_diff_eq!(eig.values.iter().sum::<f64>(), trace, epsilon = 1e-10);
        }
    }

    #[test]
    fn tridiagonal_path_matches_known_spectrum() {
        // Path graph Laplacian-like: eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 30;
        let eig = tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1], false).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n + 1) as f64).cos();
            assert_abs_diff_eq!(*v, exact, epsilon = 1e-12);
        }
        let m = SquareMatrix::from_fn(6, |i, j| match i.abs_diff(j) {
            0 => i as f64,
            1 => 0.5,
            _ => 0.0,
        });
        check_decomposition(&m, &symmetric_eigen(&m, true).unwrap());
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let m = SquareMatrix::from_fn(4, |i, j| if i == j { [3.0, -1.0, 3.0, 0.0][i] } else { 0.0 });
        let eig = symmetric_eigen(&m, true).unwrap();
        assert_eq!(eig.values, vec![-1.0, 0.0, 3.0, 3.0]);
        let asym = SquareMatrix::from_fn(2, |i, j| (i * 2 + j) as f64);
        assert!(symmetric_eigen(&asym, false).is_err());
    }

    #[test]
    fn lanczos_finds_lowest_pair() {
        let n = 60;
        let m = random_symmetric(n, 8);
        let exact = symmetric_eigen(&m, true).unwrap();
        let apply = |x: &[f64], y: &mut [f64]| m.mat_vec(x, y);
        let (e0, v0) = lanczos_lowest(n, apply, &[], LanczosOptions::default()).unwrap();
        assert_abs_diff_eq!(e0, exact.values[0], epsilon = 1e-10);
        let (e1, _) = lanczos_lowest(n, apply, &[v0], LanczosOptions::default()).unwrap();
        assert_abs_diff_eq!(e1, exact.values[1], epsilon = 1e-10);
    }

    #[test]
    fn lanczos_resolves_exact_degeneracy_with_deflation() {
        let m = SquareMatrix::from_fn(10, |i, j| if i == j { [1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0][i] } else { 0.0 });
        let apply = |x: &[f64], y: &mut [f64]| m.mat_vec(x, y);
        let (e0, v0) = lanczos_lowest(10, apply, &[], LanczosOptions::default()).unwrap();
        let (e1, _) = lanczos_lowest(10, apply, &[v0], LanczosOptions::default()).unwrap();
        assert_abs_diff_eq!(e0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn banded_product() {
        let a = SquareMatrix::from_fn(5, |i, j| if j == i || j == i + 1 { (i + j + 1) as f64 } else { 0.0 });
        let p = a.mul_transpose(&a);
        let naive = SquareMatrix::from_fn(5, |i, j| (0..5).map(|k| a.get(i, k) * a.get(j, k)).sum());
        assert_eq!(p, naive);
        assert_eq!(p.bandwidth(), 1);
    }
}
