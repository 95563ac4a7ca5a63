//! Dense real-matrix kernel: arithmetic, Kronecker/vec machinery, spectra,
//! linear solves and the spectral functionals used for gain selection.

mod eigen;
mod matrix;

pub use eigen::{multiset_distance, singular_values, spectrum, symmetric_eigenvalues, Spectrum};
pub use matrix::{kron, unvec, vec, Matrix};
pub use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// `max |λ|² / Re(λ)` over the spectrum of `a`.
///
/// Undefined when some eigenvalue has a non-positive real part.
pub fn rho(a: &Matrix) -> Result<f64> {
    rho_of(&spectrum(a)?)
}

pub fn rho_of(sp: &Spectrum) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for z in sp.eigenvalues() {
        if z.re <= 0.0 {
            return Err(Error::Domain(format!(
                "eigenvalue {:.6}{:+.6}i has non-positive real part",
                z.re, z.im
            )));
        }
        best = best.max(z.norm_sqr() / z.re);
    }
    Ok(best)
}

/// Spectral radius of a square matrix.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(spectrum(a)?.spectral_radius())
}

/// True iff every eigenvalue satisfies `|λ| < 1 - margin`.
pub fn is_schur(a: &Matrix, margin: f64) -> Result<bool> {
    Ok(spectral_radius(a)? < 1.0 - margin)
}

/// LU factorization with partial pivoting, packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU of non-square {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("non-empty pivot column");
            if pmax == 0.0 {
                return Err(Error::Singular {
                    cond: f64::INFINITY,
                });
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let mut x = Matrix::zeros(n, b.cols());
        for c in 0..b.cols() {
            let mut y: Vec<f64> = self.perm.iter().map(|&p| b[(p, c)]).collect();
            for i in 0..n {
                for k in 0..i {
                    y[i] -= self.lu[(i, k)] * y[k];
                }
            }
            for i in (0..n).rev() {
                for k in (i + 1)..n {
                    y[i] -= self.lu[(i, k)] * y[k];
                }
                y[i] /= self.lu[(i, i)];
            }
            for (i, v) in y.into_iter().enumerate() {
                x[(i, c)] = v;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.lu.rows()))
    }
}

/// 1-norm condition number `‖a‖₁ ‖a⁻¹‖₁`; infinite for exactly singular input.
pub fn condition_number(a: &Matrix) -> Result<f64> {
    match Lu::factor(a) {
        Ok(lu) => Ok(a.norm1() * lu.inverse()?.norm1()),
        Err(Error::Singular { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Solves `a x = b`, refusing systems whose condition estimate exceeds
/// [`tol::CONDITION_LIMIT`].
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    solve_linear_with_limit(a, b, tol::CONDITION_LIMIT)
}

pub fn solve_linear_with_limit(a: &Matrix, b: &Matrix, cond_limit: f64) -> Result<Matrix> {
    let lu = Lu::factor(a)?;
    let cond = a.norm1() * lu.inverse()?.norm1();
    if !cond.is_finite() || cond > cond_limit {
        return Err(Error::Singular { cond });
    }
    lu.solve(b)
}

/// Numerical rank from singular values: counts values above
/// `max(rows, cols) * eps * σ_max`.
pub fn numerical_rank(a: &Matrix) -> Result<usize> {
    let sv = singular_values(a)?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let thresh = a.rows().max(a.cols()) as f64 * f64::EPSILON * smax;
    Ok(sv.iter().filter(|&&s| s > thresh).count())
}

/// Numerical rank of the complex matrix `re + i·im` via its real embedding
/// `[[re, -im], [im, re]]`, whose singular values are those of the complex
/// matrix, each repeated twice.
pub fn complex_rank(re: &Matrix, im: &Matrix) -> Result<usize> {
    if re.shape() != im.shape() {
        return Err(Error::Dimension(
            "real and imaginary parts differ in shape".into(),
        ));
    }
    let emb = Matrix::block2x2(re, &im.scale(-1.0), im, re)?;
    Ok(numerical_rank(&emb)? / 2)
}
