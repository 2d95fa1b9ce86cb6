//! Dense complex matrices and the small numeric kernels the toolkit needs:
//! a cyclic-Jacobi Hermitian eigensolver and a Cholesky log-determinant.
//!
//! Matrices here are tiny (at most 256x256), so everything is plain
//! row-major storage and O(n^3) loops; no BLAS.

use num_complex::Complex64;

use crate::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat { nrows, ncols, data: vec![Complex64::new(0.0, 0.0); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        CMat { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.ncols, rhs.nrows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.ncols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// A^H A, Hermitian by construction (upper triangle computed, mirrored).
    pub fn gram(&self) -> CMat {
        let n = self.ncols;
        let mut g = CMat::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..self.nrows {
                    acc += self[(r, a)].conj() * self[(r, b)];
                }
                g[(a, b)] = acc;
                g[(b, a)] = acc.conj();
            }
        }
        g
    }

    /// A A^H (the frame operator when A is a frame).
    pub fn frame_operator(&self) -> CMat {
        let m = self.nrows;
        let mut g = CMat::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..self.ncols {
                    acc += self[(a, c)] * self[(b, c)].conj();
                }
                g[(a, b)] = acc;
                g[(b, a)] = acc.conj();
            }
        }
        g
    }

    pub fn select_rows(&self, rows: &[usize]) -> CMat {
        CMat::from_fn(rows.len(), self.ncols, |i, j| self[(rows[i], j)])
    }

    pub fn select_columns(&self, cols: &[usize]) -> CMat {
        CMat::from_fn(self.nrows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |a_ij - conj(a_ji)| over the upper triangle; 0 for exactly
    /// Hermitian matrices.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for j in i..self.ncols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.ncols + j]
    }
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi rotations.
///
/// Off-diagonal mass shrinks quadratically once small; termination is at
/// off-Frobenius <= 1e-15 * ||A||_F, far inside the 1e-8 backward-error
/// budget the callers rely on.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.nrows, a.ncols
        )));
    }
    let n = a.nrows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let defect = a.hermitian_defect();
    let fro = a.frobenius_norm();
    if defect > 1e-10 * (1.0 + fro) {
        return Err(Error::Numerical(format!(
            "eigensolver input is not Hermitian: defect {defect:.3e}, norm {fro:.3e}"
        )));
    }

    let mut m = a.clone();
    // Symmetrize exactly so rounding in the input cannot drift the sweep.
    for p in 0..n {
        m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
        for q in p + 1..n {
            let avg = (m[(p, q)] + m[(q, p)].conj()) * 0.5;
            m[(p, q)] = avg;
            m[(q, p)] = avg.conj();
        }
    }

    let tol_sq = (1e-15 * fro).powi(2).max(f64::MIN_POSITIVE);
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off_sq += m[(p, q)].norm_sqr();
            }
        }
        if off_sq <= tol_sq {
            let mut eigs: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, p, q);
            }
        }
    }
    Err(Error::Numerical(format!(
        "Jacobi eigensolver failed to converge in {MAX_JACOBI_SWEEPS} sweeps (n = {n}, ||A||_F = {fro:.3e})"
    )))
}

/// One Jacobi rotation zeroing m[p][q] (and its mirror) in place.
fn rotate(m: &mut CMat, p: usize, q: usize) {
    let z = m[(p, q)];
    let r = z.norm();
    if r == 0.0 {
        return;
    }
    let alpha = m[(p, p)].re;
    let beta = m[(q, q)].re;
    // t = tan(theta) is the small-magnitude root of t^2 - 2*tau*t - 1 = 0.
    let tau = (alpha - beta) / (2.0 * r);
    let t = if tau >= 0.0 {
        -1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let u = z / r; // phase e^{i phi}

    let n = m.nrows();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let new_kp = akp * c - akq * (u.conj() * s);
        let new_kq = akp * (u * s) + akq * c;
        m[(k, p)] = new_kp;
        m[(p, k)] = new_kp.conj();
        m[(k, q)] = new_kq;
        m[(q, k)] = new_kq.conj();
    }
    let cs2r = 2.0 * c * s * r;
    m[(p, p)] = Complex64::new(c * c * alpha + s * s * beta - cs2r, 0.0);
    m[(q, q)] = Complex64::new(s * s * alpha + c * c * beta + cs2r, 0.0);
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
}

/// ln det of a Hermitian positive-definite matrix via complex Cholesky.
///
/// Errors if a pivot is not strictly positive, which callers treat as "the
/// matrix was not positive definite after all".
pub fn hermitian_ln_det(a: &CMat) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!(
            "Cholesky needs a square matrix, got {}x{}",
            a.nrows, a.ncols
        )));
    }
    let mut l = a.data.clone();
    cholesky_ln_det_in_place(&mut l, a.nrows)
}

/// In-place lower Cholesky on a row-major s x s buffer (only the lower
/// triangle is read), returning ln det. Allocation-free for hot loops.
pub(crate) fn cholesky_ln_det_in_place(a: &mut [Complex64], s: usize) -> Result<f64> {
    debug_assert_eq!(a.len(), s * s);
    let mut ln_det = 0.0;
    for j in 0..s {
        let mut d = a[j * s + j].re;
        for k in 0..j {
            d -= a[j * s + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numerical(format!(
                "Cholesky pivot {j} is {d:.3e}; matrix not positive definite"
            )));
        }
        let root = d.sqrt();
        ln_det += d.ln();
        a[j * s + j] = Complex64::new(root, 0.0);
        for i in j + 1..s {
            let mut v = a[i * s + j];
            for k in 0..j {
                v -= a[i * s + k] * a[j * s + k].conj();
            }
            a[i * s + j] = v / root;
        }
    }
    Ok(ln_det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Random unitary as a product of complex Givens rotations; conjugating a
    /// diagonal matrix by it yields a Hermitian matrix with known spectrum.
    fn known_spectrum_matrix(eigs: &[f64], rng: &mut StdRng) -> CMat {
        let n = eigs.len();
        let mut m = CMat::zeros(n, n);
        for (i, &e) in eigs.iter().enumerate() {
            m[(i, i)] = c(e, 0.0);
        }
        for _ in 0..3 * n {
            let p = rng.gen_range(0..n);
            let mut q = rng.gen_range(0..n);
            while q == p {
                q = rng.gen_range(0..n);
            }
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (cth, sth) = (theta.cos(), theta.sin());
            let u = Complex64::from_polar(1.0, phi);
            // m <- J^H m J with J the rotation acting on columns p, q
            let n_all = n;
            for k in 0..n_all {
                let mkp = m[(k, p)];
                let mkq = m[(k, q)];
                m[(k, p)] = mkp * cth - mkq * (u.conj() * sth);
                m[(k, q)] = mkp * (u * sth) + mkq * cth;
            }
            for k in 0..n_all {
                let mpk = m[(p, k)];
                let mqk = m[(q, k)];
                m[(p, k)] = mpk * cth - mqk * (u * sth);
                m[(q, k)] = mpk * (u.conj() * sth) + mqk * cth;
            }
        }
        m
    }

    #[test]
    fn eigenvalues_of_diagonal_are_sorted_diagonal() {
        let mut m = CMat::zeros(4, 4);
        for (i, v) in [3.0, -1.0, 2.5, 0.0].iter().enumerate() {
            m[(i, i)] = c(*v, 0.0);
        }
        let e = hermitian_eigenvalues(&m).unwrap();
        assert_eq!(e, vec![-1.0, 0.0, 2.5, 3.0]);
    }

    #[test]
    fn eigenvalues_of_2x2_complex_pair() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(2.0, 0.0);
        m[(0, 1)] = c(0.0, 1.0);
        m[(1, 0)] = c(0.0, -1.0);
        m[(1, 1)] = c(2.0, 0.0);
        let e = hermitian_eigenvalues(&m).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_known_spectrum_after_unitary_conjugation() {
        let mut rng = StdRng::seed_from_u64(42);
        for n in [3usize, 8, 17, 64] {
            let mut eigs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let m = known_spectrum_matrix(&eigs, &mut rng);
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let got = hermitian_eigenvalues(&m).unwrap();
            for (g, e) in got.iter().zip(&eigs) {
                assert!((g - e).abs() < 1e-10, "n={n}: {g} vs {e}");
            }
        }
    }

    #[test]
    fn handles_contract_maximum_size() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut eigs: Vec<f64> = (0..256).map(|_| rng.gen_range(0.0..10.0)).collect();
        let m = known_spectrum_matrix(&eigs, &mut rng);
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let got = hermitian_eigenvalues(&m).unwrap();
        let worst = got
            .iter()
            .zip(&eigs)
            .map(|(g, e)| (g - e).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-8, "worst eigenvalue error {worst:.3e}");
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        m[(1, 0)] = c(0.5, 0.0);
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::Numerical(_))));
    }

    #[test]
    fn trace_is_preserved_by_the_sweep() {
        let mut rng = StdRng::seed_from_u64(3);
        let eigs: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let m = known_spectrum_matrix(&eigs, &mut rng);
        let got = hermitian_eigenvalues(&m).unwrap();
        let tr: f64 = m.trace().re;
        assert!((got.iter().sum::<f64>() - tr).abs() < 1e-10);
    }

    #[test]
    fn ln_det_matches_direct_determinant() {
        // [[2, i], [-i, 2]] has det 3.
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(2.0, 0.0);
        m[(0, 1)] = c(0.0, 1.0);
        m[(1, 0)] = c(0.0, -1.0);
        m[(1, 1)] = c(2.0, 0.0);
        assert!((hermitian_ln_det(&m).unwrap() - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_det_agrees_with_eigenvalue_product() {
        let mut rng = StdRng::seed_from_u64(9);
        let eigs: Vec<f64> = (0..20).map(|_| rng.gen_range(0.1..4.0)).collect();
        let m = known_spectrum_matrix(&eigs, &mut rng);
        let expect: f64 = eigs.iter().map(|e| e.ln()).sum();
        assert!((hermitian_ln_det(&m).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn ln_det_rejects_indefinite_matrices() {
        let mut m = CMat::identity(2);
        m[(1, 1)] = c(-1.0, 0.0);
        assert!(matches!(hermitian_ln_det(&m), Err(Error::Numerical(_))));
    }

    #[test]
    fn gram_and_frame_operator_share_trace() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = CMat::from_fn(3, 7, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let g = a.gram();
        let t = a.frame_operator();
        assert!(g.hermitian_defect() == 0.0 && t.hermitian_defect() == 0.0);
        assert!((g.trace().re - t.trace().re).abs() < 1e-12);
        let prod = a.adjoint().matmul(&a);
        for i in 0..7 {
            for j in 0..7 {
                assert!((g[(i, j)] - prod[(i, j)]).norm() < 1e-12);
            }
        }
    }
}
