//! Nonlinear least squares and the critical-field, resonator and
//! conductivity models.

pub mod lm;
pub mod models;
pub mod regimes;

pub use lm::{model_jacobian, nlls_fit, r_squared, Bound, DataPoint, FitModel, FitOptions, FitResult, ParamSpec};
pub use models::{
    guess_gl_hc2, guess_inv_s21, guess_powerlaw_hc2, model_gl_hc2, model_inv_s21, model_powerlaw_hc2, Basis, GlHc2,
    InvS21, Line, PowerLawHc2,
};
pub use regimes::{fit_conductivity_regimes, ConductivityRegimes, LinearFit, RegimeWindows};

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gl_data(n: usize) -> Vec<DataPoint> {
        (0..n)
            .map(|k| {
                let t = 0.4 + 2.6 * k as f64 / (n - 1) as f64;
                DataPoint::real(t, model_gl_hc2(t, 7.7e-9, 3.2))
            })
            .collect()
    }

    #[test]
    fn gl_noiseless_recovery() {
        let fit = nlls_fit(&GlHc2, &gl_data(20), &[5e-9, 3.0], &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] / 7.7e-9 - 1.0).abs() < 1e-6, "{:?}", fit.params);
        assert!((fit.params[1] / 3.2 - 1.0).abs() < 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn residual_norm_never_increases() {
        let fit = nlls_fit(&PowerLawHc2, &gl_data(30), &[3.0, 2.5, 0.8, 3.5], &FitOptions::default()).unwrap();
        assert!(fit.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.cost_history.len() > 2);
    }

    #[test]
    fn line_matches_closed_form() {
        let data: Vec<DataPoint> = (0..15).map(|k| {
            let x = k as f64 * 0.7 - 2.0;
            DataPoint::real(x, 3.25 - 1.5 * x + 0.01 * ((k * 7) % 5) as f64)
        }).collect();
        // Closed-form OLS oracle, normal equations by hand.
        let n = data.len() as f64;
        let (sx, sy) = data.iter().fold((0.0, 0.0), |a, d| (a.0 + d.x, a.1 + d.y.re));
        let (sxx, sxy) = data.iter().fold((0.0, 0.0), |a, d| (a.0 + d.x * d.x, a.1 + d.x * d.y.re));
        let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let a = (sy - b * sx) / n;
        let fit = nlls_fit(&Line { basis: Basis::Linear }, &data, &[0.0, 0.0], &FitOptions::default()).unwrap();
        assert!((fit.params[0] - a).abs() < 1e-10 && (fit.params[1] - b).abs() < 1e-10, "{:?} vs {a} {b}", fit.params);
    }

    #[test]
    fn perfect_fit_has_unit_r2() {
        let data: Vec<DataPoint> = (0..6).map(|k| DataPoint::real(k as f64, 2.0 + 0.5 * k as f64)).collect();
        let fit = nlls_fit(&Line { basis: Basis::Linear }, &data, &[2.0, 0.5], &FitOptions::default()).unwrap();
        assert_eq!(fit.rss, 0.0);
        assert_eq!(fit.r_squared, 1.0);
        assert!(fit.covariance.iter().all(|&c| c == 0.0));
        let pred: Vec<Complex64> = data.iter().map(|d| d.y + 0.1).collect();
        assert!(r_squared(&data, &pred) < 1.0);
    }

    #[test]
    fn r2_matches_hand_computation() {
        let data: Vec<DataPoint> = [(0.0, 1.0), (1.0, 2.9), (2.0, 5.2), (3.0, 6.8)]
            .iter()
            .map(|&(x, y)| DataPoint::real(x, y))
            .collect();
        let fit = nlls_fit(&Line { basis: Basis::Linear }, &data, &[0.0, 1.0], &FitOptions::default()).unwrap();
        let mean = (1.0 + 2.9 + 5.2 + 6.8) / 4.0;
        let ss_tot: f64 = data.iter().map(|d| (d.y.re - mean).powi(2)).sum();
        let ss_res: f64 = data.iter().map(|d| (d.y.re - fit.params[0] - fit.params[1] * d.x).powi(2)).sum();
        assert!((fit.r_squared - (1.0 - ss_res / ss_tot)).abs() < 1e-12);
    }

    #[test]
    fn singular_problem_is_reported() {
        let data: Vec<DataPoint> = (0..5).map(|k| DataPoint::real(1.0, k as f64)).collect();
        match nlls_fit(&Line { basis: Basis::Linear }, &data, &[0.0, 1.0], &FitOptions::default()) {
            Err(crate::Error::Singular { condition }) => assert!(condition > 1e14),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let opts = FitOptions { max_iterations: 1, ..FitOptions::default() };
        let fit = nlls_fit(&GlHc2, &gl_data(20), &[3e-9, 2.5], &opts).unwrap();
        assert!(!fit.converged);
        assert!(!fit.warnings.is_empty());
    }

    #[test]
    fn fixed_parameters_stay_put() {
        let opts = FitOptions::default().fixing(vec![false, true]);
        let fit = nlls_fit(&GlHc2, &gl_data(20), &[5e-9, 3.2], &opts).unwrap();
        assert_eq!(fit.params[1], 3.2);
        assert_eq!(fit.covariance[(1, 1)], 0.0);
        assert!((fit.params[0] / 7.7e-9 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn reordering_data_leaves_fit_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut data: Vec<DataPoint> = gl_data(25)
            .into_iter()
            .map(|d| DataPoint::real(d.x, d.y.re * (1.0 + noise.sample(&mut rng))))
            .collect();
        let a = nlls_fit(&GlHc2, &data, &[6e-9, 3.0], &FitOptions::default()).unwrap();
        data.reverse();
        data.swap(3, 17);
        let b = nlls_fit(&GlHc2, &data, &[6e-9, 3.0], &FitOptions::default()).unwrap();
        for (x, y) in a.params.iter().zip(&b.params) {
            assert!((x - y).abs() <= 1e-8 * x.abs());
        }
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let data: Vec<DataPoint> = gl_data(20)
            .into_iter()
            .map(|d| DataPoint::real(d.x, d.y.re * (1.0 + noise.sample(&mut rng))))
            .collect();
        let fit = nlls_fit(&PowerLawHc2, &data, &[5.0, 2.0, 1.0, 3.2], &FitOptions::default()).unwrap();
        let c = &fit.covariance;
        assert!((c - c.transpose()).abs().max() <= 1e-12 * c.abs().max());
        let eig = nalgebra::SymmetricEigen::new(c.clone()).eigenvalues;
        assert!(eig.iter().all(|&e| e >= -1e-12 * c.abs().max()));
        assert!(fit.r_squared <= 1.0);
    }

    /// Central finite differences of the model at a relative step of 1e-6
    /// of each parameter's natural scale.
    fn fd_jacobian<M: FitModel>(m: &M, xs: &[f64], p: &[f64]) -> DMatrix<f64> {
        let rows = xs.len() * if m.is_complex() { 2 } else { 1 };
        let mut jac = DMatrix::zeros(rows, p.len());
        for j in 0..p.len() {
            let h = 1e-6 * m.param_scale(p, j);
            let (mut up, mut dn) = (p.to_vec(), p.to_vec());
            up[j] += h;
            dn[j] -= h;
            let mut row = 0;
            for &x in xs {
                let d = (m.eval(&up, x) - m.eval(&dn, x)) / (2.0 * h);
                jac[(row, j)] = d.re;
                row += 1;
                if m.is_complex() {
                    jac[(row, j)] = d.im;
                    row += 1;
                }
            }
        }
        jac
    }

    fn check_jacobian<M: FitModel>(m: &M, xs: &[f64], p: &[f64]) {
        let a = model_jacobian(m, xs, p);
        let b = fd_jacobian(m, xs, p);
        for j in 0..p.len() {
            let col_scale = b.column(j).abs().max();
            for i in 0..a.nrows() {
                assert!(
                    (a[(i, j)] - b[(i, j)]).abs() <= 1e-4 * col_scale,
                    "{} param {j} row {i}: {} vs {}",
                    m.name(),
                    a[(i, j)],
                    b[(i, j)]
                );
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let ts: Vec<f64> = (0..15).map(|k| 0.2 + 0.2 * k as f64).collect();
        check_jacobian(&GlHc2, &ts, &[7.7e-9, 3.2]);
        check_jacobian(&PowerLawHc2, &ts, &[4.0, 3.6, 1.1, 3.2]);
        let f0 = 6e9;
        let fs: Vec<f64> = (0..41).map(|k| f0 + (k as f64 - 20.0) * 2e3).collect();
        check_jacobian(&InvS21, &fs, &[2.7e5, 1e5, 0.1, f0]);
        check_jacobian(&Line { basis: Basis::Sqrt }, &ts, &[1.0e5, 2.1e3]);
    }
}
