use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{ensure, Result};

/// A linear map `C^cols -> C^rows` with its adjoint.
pub trait LinearOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64>;

    /// Largest eigenvalue of `A^H A`. The default runs 50 power iterations.
    fn gram_norm(&self) -> f64 {
        let n = self.cols();
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.1))
            .collect();
        let mut est = 0.0;
        for _ in 0..50 {
            let nv = norm_sqr(&v).sqrt();
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let w = self.apply_adjoint(&self.apply(&v));
            est = dot(&v, &w).re;
            v = w;
        }
        est
    }

    /// Solves `(A^H A + rho I) x = b`, starting from `warm`.
    ///
    /// The default runs conjugate gradients; structured operators override it with an exact solve.
    fn solve_normal(&self, rho: f64, b: &[Complex64], warm: &[Complex64]) -> Vec<Complex64> {
        conjugate_gradient(
            |v| {
                let mut out = self.apply_adjoint(&self.apply(v));
                for (o, x) in out.iter_mut().zip(v) {
                    *o += rho * x;
                }
                out
            },
            b,
            warm,
            1e-12,
            4 * self.cols().max(16),
        )
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

/// Conjugate gradients for a Hermitian positive-definite map.
pub(crate) fn conjugate_gradient(
    op: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    warm: &[Complex64],
    rel_tol: f64,
    max_iter: usize,
) -> Vec<Complex64> {
    let mut x = warm.to_vec();
    let ax = op(&x);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rs = norm_sqr(&r);
    let target = rel_tol * rel_tol * norm_sqr(b).max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rs <= target {
            break;
        }
        let ap = op(&p);
        let alpha = rs / dot(&p, &ap).re;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = norm_sqr(&r);
        let beta = rs_new / rs;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    x
}

/// Operator given by a pair of closures.
pub struct FnOperator<F, G> {
    rows: usize,
    cols: usize,
    forward: F,
    adjoint: G,
}

impl<F, G> FnOperator<F, G>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Sync,
    G: Fn(&[Complex64]) -> Vec<Complex64> + Sync,
{
    pub fn new(rows: usize, cols: usize, forward: F, adjoint: G) -> Self {
        Self {
            rows,
            cols,
            forward,
            adjoint,
        }
    }
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Sync,
    G: Fn(&[Complex64]) -> Vec<Complex64> + Sync,
{
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.forward)(x)
    }
    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        (self.adjoint)(y)
    }
}

/// Explicit matrix, with an eigendecomposition of `A^H A` for exact normal solves at any `rho`.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    a: DMatrix<Complex64>,
    eig_vectors: DMatrix<Complex64>,
    eig_values: Vec<f64>,
}

impl DenseOperator {
    pub fn new(a: DMatrix<Complex64>) -> Self {
        let gram = a.adjoint() * &a;
        let eig = SymmetricEigen::new(gram);
        Self {
            eig_values: eig.eigenvalues.iter().map(|v| v.max(0.0)).collect(),
            eig_vectors: eig.eigenvectors,
            a,
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.a
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.a.nrows()
    }
    fn cols(&self) -> usize {
        self.a.ncols()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (&self.a * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }
    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        (self.a.adjoint() * DVector::from_column_slice(y))
            .as_slice()
            .to_vec()
    }
    fn gram_norm(&self) -> f64 {
        self.eig_values.iter().copied().fold(0.0, f64::max)
    }
    fn solve_normal(&self, rho: f64, b: &[Complex64], _warm: &[Complex64]) -> Vec<Complex64> {
        let w = &self.eig_vectors;
        let mut c = w.adjoint() * DVector::from_column_slice(b);
        for (ci, e) in c.iter_mut().zip(&self.eig_values) {
            *ci /= rho + e;
        }
        (w * c).as_slice().to_vec()
    }
}

/// Separable operator `Y = A_row X A_col^T` on row-major matrices.
///
/// `X` is `A_row.ncols() x A_col.ncols()`, `Y` is `A_row.nrows() x A_col.nrows()`. The
/// delay/Doppler dictionary of the sparse feature estimator has this form, and the
/// normal equations are solved exactly through thin singular value decompositions of both
/// factors, so wide factors never form their full Gram matrix.
#[derive(Debug, Clone)]
pub struct KroneckerOperator {
    a_row: DMatrix<Complex64>,
    a_col: DMatrix<Complex64>,
    a_row_h: DMatrix<Complex64>,
    a_col_t: DMatrix<Complex64>,
    a_col_conj: DMatrix<Complex64>,
    /// Thin Gram bases of both factors, see [`gram_basis`].
    u: DMatrix<Complex64>,
    s: Vec<f64>,
    v: DMatrix<Complex64>,
    t: Vec<f64>,
}

fn from_row_major(v: &[Complex64], rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(rows, cols, v)
}

fn to_row_major(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    m.transpose().as_slice().to_vec()
}

/// Thin right singular vectors and squared singular values: `A^H A = V diag(s) V^H`.
fn gram_basis(a: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    (
        v_t.adjoint(),
        svd.singular_values.iter().map(|v| v * v).collect(),
    )
}

/// `a * b * c`, multiplied in the cheaper order.
fn triple(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let left = a.nrows() * a.ncols() * b.ncols() + a.nrows() * b.ncols() * c.ncols();
    let right = b.nrows() * b.ncols() * c.ncols() + a.nrows() * a.ncols() * c.ncols();
    if left <= right {
        (a * b) * c
    } else {
        a * (b * c)
    }
}

impl KroneckerOperator {
    pub fn new(a_row: DMatrix<Complex64>, a_col: DMatrix<Complex64>) -> Result<Self> {
        ensure(
            a_row.nrows() > 0 && a_row.ncols() > 0 && a_col.nrows() > 0 && a_col.ncols() > 0,
            || "Kronecker factors must be non-empty".to_string(),
        )?;
        let (u, s) = gram_basis(&a_row);
        let (v, t) = gram_basis(&a_col);
        Ok(Self {
            a_row_h: a_row.adjoint(),
            a_col_t: a_col.transpose(),
            a_col_conj: a_col.map(|v| v.conj()),
            u,
            s,
            v,
            t,
            a_row,
            a_col,
        })
    }

    pub fn row_factor(&self) -> &DMatrix<Complex64> {
        &self.a_row
    }

    pub fn col_factor(&self) -> &DMatrix<Complex64> {
        &self.a_col
    }
}

impl LinearOperator for KroneckerOperator {
    fn rows(&self) -> usize {
        self.a_row.nrows() * self.a_col.nrows()
    }
    fn cols(&self) -> usize {
        self.a_row.ncols() * self.a_col.ncols()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let x = from_row_major(x, self.a_row.ncols(), self.a_col.ncols());
        to_row_major(&triple(&self.a_row, &x, &self.a_col_t))
    }
    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let y = from_row_major(y, self.a_row.nrows(), self.a_col.nrows());
        to_row_major(&triple(&self.a_row_h, &y, &self.a_col_conj))
    }
    fn gram_norm(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max) * self.t.iter().copied().fold(0.0, f64::max)
    }
    fn solve_normal(&self, rho: f64, b: &[Complex64], _warm: &[Complex64]) -> Vec<Complex64> {
        // A^H A X = G_row X conj(G_col) with G_row = U S U^H and G_col = V T V^H. Outside the
        // span of U and conj(V) the system is rho X = B; inside it is diagonal.
        let m = from_row_major(b, self.a_row.ncols(), self.a_col.ncols());
        let vc = self.v.map(|v| v.conj());
        let mut z = triple(&self.u.adjoint(), &m, &vc);
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                z[(i, j)] *= 1.0 / (rho + self.s[i] * self.t[j]) - 1.0 / rho;
            }
        }
        let x = m / Complex64::new(rho, 0.0) + triple(&self.u, &z, &self.v.transpose());
        to_row_major(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::rng_from_seed;
    use rand::Rng;

    fn random_matrix(r: usize, c: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        random_matrix(n, 1, seed).as_slice().to_vec()
    }

    #[test]
    fn kronecker_matches_dense() {
        let a = random_matrix(5, 3, 1);
        let b = random_matrix(4, 6, 2);
        let k = KroneckerOperator::new(a.clone(), b.clone()).unwrap();
        // Row-major vec(A X B^T) = (A kron B) vec(X).
        let dense = a.kronecker(&b);
        let x = random_vec(18, 3);
        let y1 = k.apply(&x);
        let y2 = (&dense * DVector::from_column_slice(&x))
            .as_slice()
            .to_vec();
        for (p, q) in y1.iter().zip(&y2) {
            assert!((p - q).norm() < 1e-12);
        }
        let y = random_vec(20, 4);
        let z1 = k.apply_adjoint(&y);
        let z2 = (dense.adjoint() * DVector::from_column_slice(&y))
            .as_slice()
            .to_vec();
        for (p, q) in z1.iter().zip(&z2) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn normal_solves_agree() {
        let a = random_matrix(5, 3, 5);
        let b = random_matrix(4, 6, 6);
        let k = KroneckerOperator::new(a.clone(), b.clone()).unwrap();
        let d = DenseOperator::new(a.kronecker(&b));
        let f = FnOperator::new(20, 18, |x| d.apply(x), |y| d.apply_adjoint(y));
        let rhs = random_vec(18, 7);
        let zero = vec![Complex64::new(0.0, 0.0); 18];
        let x1 = k.solve_normal(0.7, &rhs, &zero);
        let x2 = d.solve_normal(0.7, &rhs, &zero);
        let x3 = f.solve_normal(0.7, &rhs, &zero);
        for i in 0..18 {
            assert!((x1[i] - x2[i]).norm() < 1e-10);
            assert!((x1[i] - x3[i]).norm() < 1e-8);
        }
    }
}
