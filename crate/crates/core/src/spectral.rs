//! Dense eigen-decompositions.
//!
//! Two independent solvers live here. [`eig_symmetric`] is a cyclic Jacobi
//! method returning orthonormal eigenvectors; it is the workhorse for
//! Laplacians and for the symmetrized products `L^{1/2} D L^{1/2}`.
//! [`eig_general`] balances, reduces to Hessenberg form and runs the
//! Francis double-shift QR iteration; it returns eigenvalues only and serves as
//! a cross-check on nonsymmetric products such as `D·L` or `L_m⁻¹ R`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Sorted real spectrum of a matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Ascending, repeated according to multiplicity.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`. Only
    /// present for symmetric input.
    pub eigenvectors: Option<DMatrix<f64>>,
    pub symmetric: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue.
    pub fn radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-12;

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(())
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    check_square(a)?;
    let scale = a.amax();
    let n = a.nrows();
    let mut asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asymmetry = asymmetry.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Full eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-14·‖A‖_F`. The result is sorted ascending with the eigenvector columns
/// permuted alongside.
pub fn eig_symmetric(a: &DMatrix<f64>) -> Result<Spectrum> {
    check_symmetric(a)?;
    let (values, vectors) = jacobi(a, true)?;
    Ok(sorted_spectrum(values, vectors))
}

/// Eigenvalues of a symmetric matrix, ascending. Same algorithm as
/// [`eig_symmetric`] without accumulating rotations.
pub fn eigenvalues_symmetric(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    let (mut values, _) = jacobi(a, false)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn sorted_spectrum(values: Vec<f64>, vectors: Option<DMatrix<f64>>) -> Spectrum {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors =
        vectors.map(|v| DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, order[c])]));
    Spectrum {
        eigenvalues,
        eigenvectors,
        symmetric: true,
    }
}

fn jacobi(input: &DMatrix<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let n = input.nrows();
    // symmetrize so that round-off in the input cannot bias the rotations
    let mut a = DMatrix::from_fn(n, n, |i, j| 0.5 * (input[(i, j)] + input[(j, i)]));
    let mut v = want_vectors.then(|| DMatrix::<f64>::identity(n, n));
    let norm = a.norm();
    if norm == 0.0 || n < 2 {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
    }
    let threshold = JACOBI_TOL * norm;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= threshold {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    Err(Error::NoConvergence {
        algorithm: "cyclic Jacobi",
        iterations: JACOBI_MAX_SWEEPS,
    })
}

/// Eigenvalues of a general real matrix, unordered.
pub fn eig_general(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    check_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(h)
}

/// Real eigenvalues of a general matrix, ascending.
///
/// Imaginary parts up to `1e-8·‖A‖_F` are treated as round-off and dropped;
/// anything larger is an [`Error::ComplexSpectrum`].
pub fn real_eigenvalues_general(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let tol = 1e-8 * a.norm();
    let mut out = Vec::with_capacity(a.nrows());
    for z in eig_general(a)? {
        if z.im.abs() > tol {
            return Err(Error::ComplexSpectrum { re: z.re, im: z.im });
        }
        out.push(z.re);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch).
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = a.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x = a.view((k + 1, k), (n - k - 1, 1)).clone_owned();
        let alpha = x.norm();
        if alpha == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -alpha } else { alpha };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v /= vnorm;
        // A ← H A H with H = I − 2 v vᵀ acting on rows/cols k+1..n
        let rows = k + 1..n;
        for j in 0..n {
            let dot: f64 = rows.clone().map(|i| v[i - k - 1] * a[(i, j)]).sum();
            for i in rows.clone() {
                a[(i, j)] -= 2.0 * v[i - k - 1] * dot;
            }
        }
        for i in 0..n {
            let dot: f64 = rows.clone().map(|j| a[(i, j)] * v[j - k - 1]).sum();
            for j in rows.clone() {
                a[(i, j)] -= 2.0 * dot * v[j - k - 1];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (EISPACK `hqr`).
fn hqr(mut h: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    const MAX_ITS: usize = 60;
    let n = h.nrows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[(i, j)].abs();
        }
    }

    // 1-based indices, mirroring the reference algorithm
    macro_rules! a {
        ($i:expr, $j:expr) => {
            h[($i - 1, $j - 1)]
        };
    }

    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a!(l - 1, l - 1).abs() + a!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a!(l, l - 1).abs() <= f64::EPSILON * s {
                    a!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a!(nn, nn);
            if l == nn {
                wr[nn - 1] = x + t;
                wi[nn - 1] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a!(nn - 1, nn - 1);
            let mut w = a!(nn, nn - 1) * a!(nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 2] = x + z;
                    wr[nn - 1] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nn - 2] = 0.0;
                    wi[nn - 1] = 0.0;
                } else {
                    wr[nn - 2] = x + p;
                    wr[nn - 1] = x + p;
                    wi[nn - 2] = -z;
                    wi[nn - 1] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_ITS {
                return Err(Error::NoConvergence {
                    algorithm: "Hessenberg QR",
                    iterations: MAX_ITS,
                });
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a!(i, i) -= x;
                }
                let s = a!(nn, nn - 1).abs() + a!(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a!(m, m);
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a!(m + 1, m) + a!(m, m + 1);
                q = a!(m + 1, m + 1) - z - r - s;
                r = a!(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a!(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (a!(m - 1, m - 1).abs() + z.abs() + a!(m + 1, m + 1).abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a!(i, i - 2) = 0.0;
                if i != m + 2 {
                    a!(i, i - 3) = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                let mut xk = 0.0;
                if k != m {
                    p = a!(k, k - 1);
                    q = a!(k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = a!(k + 2, k - 1);
                    }
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a!(k, k - 1) = -a!(k, k - 1);
                        }
                    } else {
                        a!(k, k - 1) = -s * xk;
                    }
                    p += s;
                    let xx = p / s;
                    let yy = q / s;
                    let zz = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a!(k, j) + q * a!(k + 1, j);
                        if k != nn - 1 {
                            pp += r * a!(k + 2, j);
                            a!(k + 2, j) -= pp * zz;
                        }
                        a!(k + 1, j) -= pp * yy;
                        a!(k, j) -= pp * xx;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = xx * a!(i, k) + yy * a!(i, k + 1);
                        if k != nn - 1 {
                            pp += zz * a!(i, k + 2);
                            a!(i, k + 2) -= pp * r;
                        }
                        a!(i, k + 1) -= pp * q;
                        a!(i, k) -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex::new(re, im))
        .collect())
}

/// Principal square root of a symmetric positive-semidefinite matrix.
/// Negative round-off eigenvalues are clamped to zero.
pub fn sqrt_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spec = eig_symmetric(a)?;
    let u = spec
        .eigenvectors
        .expect("symmetric spectrum has eigenvectors");
    let roots = DVector::from_iterator(
        spec.eigenvalues.len(),
        spec.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()),
    );
    let mut s = &u * DMatrix::from_diagonal(&roots) * u.transpose();
    symmetrize(&mut s);
    Ok(s)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `S D S` for symmetric `S` and diagonal `D`, symmetrized.
pub(crate) fn congruence(s: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let n = s.nrows();
    let mut sd = s.clone();
    for j in 0..n {
        sd.column_mut(j).scale_mut(d[j]);
    }
    let mut m = sd * s;
    symmetrize(&mut m);
    m
}

/// Spectrum of the product `D·L` computed along two independent routes.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpectrum {
    /// Eigenvalues of `L^{1/2} D L^{1/2}`, ascending. These are the values
    /// reported for `D·L`.
    pub spectrum: Spectrum,
    /// Eigenvalues of `D·L` from the nonsymmetric QR solver, ascending.
    pub general: Vec<f64>,
    /// Largest absolute difference between the two routes.
    pub max_discrepancy: f64,
    /// True when some diagonal entry of `D` is zero.
    pub singular_d: bool,
}

impl ProductSpectrum {
    pub fn lambda2_symmetric(&self) -> f64 {
        self.spectrum.eigenvalues[1]
    }

    pub fn lambda2_general(&self) -> f64 {
        self.general[1]
    }
}

/// Relative tolerance between the symmetric and QR routes in [`eig_product`].
pub const PRODUCT_ROUTE_TOL: f64 = 1e-6;

/// Real spectrum of `D·L` for a nonnegative diagonal `D` and a Laplacian `L`.
///
/// `D·L`, `L·D`, `D^{1/2} L D^{1/2}` and `L^{1/2} D L^{1/2}` share one
/// characteristic polynomial, so the symmetric matrix `L^{1/2} D L^{1/2}`
/// gives the full spectrum even when `D` has zero entries. The result is
/// cross-checked against QR iterations on `D·L` itself; a disagreement above
/// `1e-6` relative to the spectral radius is an error.
pub fn eig_product(d: &[f64], laplacian: &DMatrix<f64>) -> Result<ProductSpectrum> {
    check_symmetric(laplacian)?;
    let n = laplacian.nrows();
    if d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} diagonal entries"),
            got: d.len().to_string(),
        });
    }
    if let Some(bad) = d.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "diagonal entries must be nonnegative, got {bad}"
        )));
    }
    let root = sqrt_psd(laplacian)?;
    let spectrum = eig_symmetric(&congruence(&root, d))?;

    let mut dl = laplacian.clone();
    for (i, &di) in d.iter().enumerate() {
        dl.row_mut(i).scale_mut(di);
    }
    let general = real_eigenvalues_general(&dl)?;

    let scale = spectrum.radius().max(f64::MIN_POSITIVE);
    let mut max_discrepancy: f64 = 0.0;
    for (index, (&s, &g)) in spectrum.eigenvalues.iter().zip(&general).enumerate() {
        let diff = (s - g).abs();
        max_discrepancy = max_discrepancy.max(diff);
        if diff > PRODUCT_ROUTE_TOL * scale {
            return Err(Error::RouteDisagreement {
                index,
                symmetric: s,
                general: g,
            });
        }
    }
    Ok(ProductSpectrum {
        spectrum,
        general,
        max_discrepancy,
        singular_d: d.contains(&0.0),
    })
}

/// λ₂ of a Laplacian-like spectrum and, when available, its Fiedler vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Connectivity {
    pub value: f64,
    pub fiedler: Option<DVector<f64>>,
}

/// Second entry of the ascending spectrum (multiplicity counted).
///
/// Fails when the smallest eigenvalue is not zero to within
/// `1e-8·max(1, λ_max)`.
pub fn algebraic_connectivity(s: &Spectrum) -> Result<Connectivity> {
    if s.len() < 2 {
        return Err(Error::InvalidArgument(
            "algebraic connectivity needs at least 2 eigenvalues".into(),
        ));
    }
    let smallest = s.eigenvalues[0];
    if smallest.abs() > 1e-8 * s.radius().max(1.0) {
        return Err(Error::NotLaplacian { smallest });
    }
    Ok(Connectivity {
        value: s.eigenvalues[1],
        fiedler: s.eigenvectors.as_ref().map(|v| v.column(1).clone_owned()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn check_decomposition(a: &DMatrix<f64>, spec: &Spectrum) {
        let u = spec.eigenvectors.as_ref().unwrap();
        let n = a.nrows();
        let norm = a.norm().max(1e-300);
        let ortho = u.transpose() * u - DMatrix::identity(n, n);
        assert!(ortho.amax() <= 1e-10, "orthonormality {}", ortho.amax());
        for (i, &lambda) in spec.eigenvalues.iter().enumerate() {
            let v = u.column(i);
            let residual = (a * v - v * lambda).norm();
            assert!(residual <= 1e-10 * norm, "residual {residual}");
        }
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let lam = DMatrix::from_diagonal(&DVector::from_vec(spec.eigenvalues.clone()));
        let recon = u * lam * u.transpose();
        assert!((a - recon).norm() <= 1e-9 * norm);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        let s = eig_symmetric(&a).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
        check_decomposition(&a, &s);
    }

    #[test]
    fn complete_four_spectrum() {
        let a = DMatrix::from_fn(4, 4, |i, j| if i == j { 3.0 } else { -1.0 });
        let s = eig_symmetric(&a).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-14);
        for v in &s.eigenvalues[1..] {
            assert!((v - 4.0).abs() < 1e-14);
        }
        check_decomposition(&a, &s);
        let c = algebraic_connectivity(&s).unwrap();
        assert!((c.value - 4.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_up_to_fifty() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 5, 8, 13, 21, 34, 50] {
            let a = random_symmetric(n, &mut rng);
            let s = eig_symmetric(&a).unwrap();
            check_decomposition(&a, &s);
        }
    }

    #[test]
    fn zero_and_diagonal_matrices() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(eig_symmetric(&z).unwrap().eigenvalues, vec![0.0; 3]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        assert_eq!(eig_symmetric(&d).unwrap().eigenvalues, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eig_symmetric(&a), Err(Error::NotSymmetric { .. })));
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            eig_symmetric(&rect),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn general_solver_matches_jacobi_on_symmetric_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 4, 7, 12, 20] {
            let a = random_symmetric(n, &mut rng);
            let sym = eigenvalues_symmetric(&a).unwrap();
            let gen = real_eigenvalues_general(&a).unwrap();
            for (x, y) in sym.iter().zip(&gen) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn general_solver_finds_complex_pairs() {
        // rotation-like block: eigenvalues 1 ± 2i and 3
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 3.0]);
        let mut ev = eig_general(&a).unwrap();
        ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        assert!((ev[0] - Complex::new(1.0, -2.0)).norm() < 1e-12);
        assert!((ev[1] - Complex::new(1.0, 2.0)).norm() < 1e-12);
        assert!((ev[2] - Complex::new(3.0, 0.0)).norm() < 1e-12);
        assert!(matches!(
            real_eigenvalues_general(&a),
            Err(Error::ComplexSpectrum { .. })
        ));
    }

    #[test]
    fn general_solver_on_nonnormal_triangular() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 100.0, -50.0, 0.0, 1.0, 1e3, 0.0, 0.0, 5.0]);
        let ev = real_eigenvalues_general(&a).unwrap();
        for (x, y) in ev.iter().zip([1.0, 2.0, 5.0]) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn product_with_scalar_diagonal_scales_spectrum() {
        let l = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let base = eigenvalues_symmetric(&l).unwrap();
        let p = eig_product(&[2e-3; 3], &l).unwrap();
        for (x, y) in p.spectrum.eigenvalues.iter().zip(&base) {
            assert!((x - 2e-3 * y).abs() < 1e-15);
        }
        assert!(!p.singular_d);
    }

    #[test]
    fn product_two_node_closed_form() {
        // characteristic polynomial of diag(a,b)·[[1,-1],[-1,1]] is x(x - (a+b))
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        for (a, b) in [(1.0, 2.0), (0.3, 0.0), (5e-3, 1e-3)] {
            let p = eig_product(&[a, b], &l).unwrap();
            assert!(p.spectrum.eigenvalues[0].abs() < 1e-14);
            assert!((p.lambda2_symmetric() - (a + b)).abs() < 1e-13 * (a + b));
            assert!((p.lambda2_general() - (a + b)).abs() < 1e-13 * (a + b));
        }
    }

    #[test]
    fn product_with_singular_diagonal() {
        // star with leaves 9, 5, 7 and the center last; with the center at
        // zero the spectrum is {0, d1/9, d2/5, d3/7}
        let g = [1.0 / 9.0, 1.0 / 5.0, 1.0 / 7.0];
        let mut l = DMatrix::zeros(4, 4);
        for (i, &w) in g.iter().enumerate() {
            l[(i, i)] += w;
            l[(3, 3)] += w;
            l[(i, 3)] -= w;
            l[(3, i)] -= w;
        }
        let d = [2.20, 1.23, 1.57, 0.0];
        let p = eig_product(&d, &l).unwrap();
        assert!(p.singular_d);
        let mut expected = [0.0, 2.20 / 9.0, 1.23 / 5.0, 1.57 / 7.0];
        expected.sort_by(f64::total_cmp);
        for (x, y) in p.spectrum.eigenvalues.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        assert!((p.lambda2_general() - p.lambda2_symmetric()).abs() < 1e-10);
    }

    #[test]
    fn product_rejects_negative_diagonal() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(eig_product(&[1.0, -1.0], &l).is_err());
        assert!(eig_product(&[1.0], &l).is_err());
    }

    #[test]
    fn connectivity_rejects_non_laplacian() {
        let s = Spectrum {
            eigenvalues: vec![0.5, 1.0],
            eigenvectors: None,
            symmetric: true,
        };
        assert!(matches!(
            algebraic_connectivity(&s),
            Err(Error::NotLaplacian { .. })
        ));
        let path2 = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let c = algebraic_connectivity(&eig_symmetric(&path2).unwrap()).unwrap();
        assert!((c.value - 2.0).abs() < 1e-15);
        let f = c.fiedler.unwrap();
        assert!((f[0] + f[1]).abs() < 1e-15);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let psd = &a * a.transpose();
        let s = sqrt_psd(&psd).unwrap();
        assert!((&s * &s - &psd).amax() < 1e-12);
    }
}
