//! Rest points, Jacobians, spectra and stability.

mod jacobian;
mod rest_points;
mod stability;
mod symmetric;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub use jacobian::{jacobian_logit, jacobian_numeric, max_abs, BlockJacobian, RestPoint, REST_TOL};
pub use rest_points::{find_rest_points, structured_seeds, RestPointSearch, DEDUP_RADIUS};
pub use stability::{
    classify_spectrum, classify_stability, config1_eigenvalues, match_configuration, star_state,
    star_stability_analytic, Classification, Configuration, StabilityReport, StarSpectrum, ABSENT,
    CONNECTED, STABILITY_TOL,
};
pub use symmetric::{
    critical_temperature, jacobian_analytic_sym3, symmetric_fixed_point, symmetric_roots_logit, ROOT_GRID,
};

/// Eigenvalues of a square matrix via the real Schur form.
///
/// The shifted QR iteration can stall on highly symmetric matrices (the
/// uniform network produces several). When it does, the same spectrum is
/// requested from a fixed Householder similarity of the matrix and then from
/// its transpose.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let v = DMatrix::from_fn(n, 1, |i, _| 1.0 + 0.37 * i as f64);
    let reflector = DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared());
    let candidates = [m.clone(), &reflector * m * &reflector, m.transpose()];
    candidates
        .into_iter()
        .find_map(|c| c.try_schur(f64::EPSILON, 10_000))
        .map(|schur| schur.complex_eigenvalues().iter().copied().collect())
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))
}

/// Sorts by descending real part, then descending imaginary part.
pub fn sort_spectrum(eigs: &mut [Complex<f64>]) {
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Largest real part, `-inf` for an empty spectrum.
pub fn max_real(eigs: &[Complex<f64>]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_of_a_rotation_block() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, -2.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let mut eig = eigenvalues(&m).unwrap();
        sort_spectrum(&mut eig);
        assert!((eig[0] - Complex::new(0.0, 2.0)).norm() < 1e-12);
        assert!((eig[1] - Complex::new(0.0, -2.0)).norm() < 1e-12);
        assert!((eig[2] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn symmetric_structure_that_stalls_plain_schur() {
        // cyclic-symmetric Jacobian of a uniform three-agent rest point
        let m = DMatrix::from_row_slice(
            6,
            6,
            &[
                -0.1, -0.015741, 0.015741, 0.159180, 0.359505, -0.019291, //
                -0.015741, -0.1, -0.015741, 0.019291, -0.159180, -0.359505, //
                0.015741, -0.015741, -0.1, 0.359505, -0.019291, 0.159180, //
                0.114508, 0.006493, 0.121001, -0.1, 0.016237, 0.016237, //
                0.121001, -0.114508, -0.006493, 0.016237, -0.1, 0.016237, //
                -0.006493, -0.121001, 0.114508, 0.016237, 0.016237, -0.1,
            ],
        );
        let eig = eigenvalues(&m).unwrap();
        assert_eq!(eig.len(), 6);
        let trace: f64 = eig.iter().map(|z| z.re).sum();
        assert!((trace + 0.6).abs() < 1e-10);
    }
}
