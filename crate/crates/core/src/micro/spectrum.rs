//! Power-spectrum length scale of a composition field.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ScalarField2D;

/// In-place iterative radix-2 FFT (forward, unnormalized).
pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, ang * k as f64))
            .collect();
        for chunk in buf.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                let t = hi[k] * twiddles[k];
                hi[k] = lo[k] - t;
                lo[k] += t;
            }
        }
        len <<= 1;
    }
}

/// 2D forward transform of a row-major `nx * ny` array.
pub(crate) fn fft2(data: &mut [Complex64], nx: usize, ny: usize) {
    for row in data.chunks_mut(nx) {
        fft_in_place(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = data[j * nx + i];
        }
        fft_in_place(&mut col);
        for j in 0..ny {
            data[j * nx + i] = col[j];
        }
    }
}

/// Angular wavenumber of FFT bin `m` on an axis of `n` cells.
fn wavenumber(m: usize, n: usize, h: f64) -> f64 {
    let folded = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * PI * folded / (n as f64 * h)
}

/// `L = 2 pi sum S(k) / sum |k| S(k)` over all nonzero wavevectors, with
/// `S(k)` the power spectrum of `x - mean(x)`.
pub fn characteristic_length(f: &ScalarField2D) -> Result<f64> {
    let spec = f.spec();
    if !spec.is_pow2() {
        return Err(Error::InvalidGrid(format!(
            "spectral analysis needs power-of-two sides, got {}x{}",
            spec.nx, spec.ny
        )));
    }
    let mean = f.mean();
    let mut data: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .collect();
    fft2(&mut data, spec.nx, spec.ny);

    let (mut s_sum, mut ks_sum) = (0.0, 0.0);
    for j in 0..spec.ny {
        let ky = wavenumber(j, spec.ny, spec.h);
        for i in 0..spec.nx {
            if i == 0 && j == 0 {
                continue;
            }
            let kx = wavenumber(i, spec.nx, spec.h);
            let s = data[j * spec.nx + i].norm_sqr();
            s_sum += s;
            ks_sum += kx.hypot(ky) * s;
        }
    }
    // Anything below this is round-off on a constant field.
    let scale = f.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if s_sum <= (1e-24 * scale * scale) * spec.len() as f64 {
        return Err(Error::NoStructure);
    }
    Ok(2.0 * PI * s_sum / ks_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_field, GridSpec};

    fn dft_naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn fft_matches_naive_dft() {
        let x: Vec<Complex64> = (0..64)
            .map(|t| Complex64::new((t as f64 * 0.37).sin(), (t as f64 * 1.3).cos()))
            .collect();
        let mut y = x.clone();
        fft_in_place(&mut y);
        for (a, b) in y.iter().zip(dft_naive(&x)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn sinusoid_recovers_wavelength() {
        for n in [64usize, 128, 256] {
            let spec = GridSpec::square(n).unwrap();
            let lambda = n as f64 / 8.0;
            let f = ScalarField2D::from_fn(spec, |i, _| 0.5 + 0.1 * (2.0 * PI * i as f64 / lambda).sin());
            let l = characteristic_length(&f).unwrap();
            assert!((l - lambda).abs() < 0.05 * lambda, "n = {n}: {l} vs {lambda}");
        }
    }

    #[test]
    fn white_noise_is_short() {
        let f = gaussian_field(GridSpec::square(256).unwrap(), 0.5, 1e-2, 4).unwrap();
        let l = characteristic_length(&f).unwrap();
        assert!(l < 4.0, "{l}");
    }

    #[test]
    fn rejects_constant_and_odd_grids() {
        let spec = GridSpec::square(16).unwrap();
        assert!(matches!(
            characteristic_length(&ScalarField2D::constant(spec, 0.48)),
            Err(Error::NoStructure)
        ));
        let odd = GridSpec::new(12, 16, 1.0).unwrap();
        let f = ScalarField2D::from_fn(odd, |i, _| i as f64);
        assert!(matches!(characteristic_length(&f), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn invariant_under_shift_and_exchange() {
        let f = gaussian_field(GridSpec::new(64, 32, 1.0).unwrap(), 0.48, 1e-3, 8).unwrap();
        let l = characteristic_length(&f).unwrap();
        let shifted = characteristic_length(&f.shifted(5, 17)).unwrap();
        let flipped = characteristic_length(&f.map(|x| 1.0 - x)).unwrap();
        assert!((l - shifted).abs() < 1e-10 * l);
        assert!((l - flipped).abs() < 1e-10 * l);
    }
}
