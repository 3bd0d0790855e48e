//! Critical-field, resonator and conductivity models.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::lm::{DataPoint, FitModel, ParamSpec};
use crate::error::{Error, Result};
use crate::transport::constants::FLUX_QUANTUM;

/// Ginzburg-Landau parallel upper critical field,
/// `mu0 Hc2(T) = Phi0 / (2 pi xi^2) [1 - (T/Tc)^2]`, in tesla.
/// Temperatures above `T_c` clamp to zero.
pub fn model_gl_hc2(t: f64, xi: f64, t_c: f64) -> f64 {
    if t >= t_c {
        return 0.0;
    }
    FLUX_QUANTUM / (2.0 * PI * xi * xi) * (1.0 - (t / t_c).powi(2))
}

/// Empirical power law `mu0 Hc2(T) = mu0 H0 [1 - (T/Tc)^alpha]^beta`.
pub fn model_powerlaw_hc2(t: f64, h0: f64, alpha: f64, beta: f64, t_c: f64) -> f64 {
    if t >= t_c {
        return 0.0;
    }
    h0 * (1.0 - (t / t_c).powf(alpha)).powf(beta)
}

/// Inverse transmission of a notch-coupled resonator,
/// `1 + (Qi/Qc*) e^{i phi} / (1 + 2i Qi (f - f0)/f0)`.
pub fn model_inv_s21(f: f64, q_i: f64, q_c: f64, phi: f64, f0: f64) -> Complex64 {
    let den = Complex64::new(1.0, 2.0 * q_i * (f - f0) / f0);
    1.0 + Complex64::from_polar(q_i / q_c, phi) / den
}

fn above_tc(model: &str, xs: &[f64], t_c: f64) -> Vec<String> {
    let n = xs.iter().filter(|&&t| t > t_c).count();
    if n == 0 {
        Vec::new()
    } else {
        vec![format!("{model}: {n} point(s) above T_c = {t_c} K clamped to zero field")]
    }
}

/// Parameters `[xi (m), T_c (K)]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GlHc2;

const GL_PARAMS: [ParamSpec; 2] = [ParamSpec::free("xi_GL", "m"), ParamSpec::free("T_c", "K")];

impl FitModel for GlHc2 {
    fn name(&self) -> &str {
        "gl_hc2"
    }

    fn params(&self) -> &[ParamSpec] {
        &GL_PARAMS
    }

    fn eval(&self, p: &[f64], t: f64) -> Complex64 {
        Complex64::new(model_gl_hc2(t, p[0], p[1]), 0.0)
    }

    fn gradient(&self, p: &[f64], t: f64) -> Option<Vec<Complex64>> {
        let (xi, t_c) = (p[0], p[1]);
        if t >= t_c {
            return Some(vec![Complex64::new(0.0, 0.0); 2]);
        }
        let h0 = FLUX_QUANTUM / (2.0 * PI * xi * xi);
        let shape = 1.0 - (t / t_c).powi(2);
        let d_xi = -2.0 * h0 * shape / xi;
        let d_tc = h0 * 2.0 * t * t / (t_c * t_c * t_c);
        Some(vec![Complex64::new(d_xi, 0.0), Complex64::new(d_tc, 0.0)])
    }

    fn domain_warnings(&self, p: &[f64], xs: &[f64]) -> Vec<String> {
        above_tc(self.name(), xs, p[1])
    }
}

/// Parameters `[H0 (T), alpha, beta, T_c (K)]`; exponents bounded to (0, 10).
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerLawHc2;

const POWERLAW_PARAMS: [ParamSpec; 4] = [
    ParamSpec::free("H0", "T"),
    ParamSpec::bounded("alpha", "", 0.0, 10.0),
    ParamSpec::bounded("beta", "", 0.0, 10.0),
    ParamSpec::free("T_c", "K"),
];

impl FitModel for PowerLawHc2 {
    fn name(&self) -> &str {
        "powerlaw_hc2"
    }

    fn params(&self) -> &[ParamSpec] {
        &POWERLAW_PARAMS
    }

    fn eval(&self, p: &[f64], t: f64) -> Complex64 {
        Complex64::new(model_powerlaw_hc2(t, p[0], p[1], p[2], p[3]), 0.0)
    }

    fn domain_warnings(&self, p: &[f64], xs: &[f64]) -> Vec<String> {
        above_tc(self.name(), xs, p[3])
    }
}

/// Parameters `[Q_i, Q_c*, phi (rad), f0 (Hz)]`, complex valued.
#[derive(Debug, Clone, Copy, Default)]
pub struct InvS21;

const INV_S21_PARAMS: [ParamSpec; 4] = [
    ParamSpec::free("Q_i", ""),
    ParamSpec::free("Q_c*", ""),
    ParamSpec::free("phi", "rad"),
    ParamSpec::free("f0", "Hz"),
];

impl FitModel for InvS21 {
    fn name(&self) -> &str {
        "inv_s21"
    }

    fn params(&self) -> &[ParamSpec] {
        &INV_S21_PARAMS
    }

    fn is_complex(&self) -> bool {
        true
    }

    fn eval(&self, p: &[f64], f: f64) -> Complex64 {
        model_inv_s21(f, p[0], p[1], p[2], p[3])
    }

    fn gradient(&self, p: &[f64], f: f64) -> Option<Vec<Complex64>> {
        let (q_i, q_c, phi, f0) = (p[0], p[1], p[2], p[3]);
        let i = Complex64::i();
        let x = (f - f0) / f0;
        let den = 1.0 + 2.0 * i * q_i * x;
        let rot = Complex64::from_polar(1.0, phi);
        let amp = rot * (q_i / q_c);
        let d_qi = rot / (q_c * den) - amp * 2.0 * i * x / (den * den);
        let d_qc = -amp / (q_c * den);
        let d_phi = i * amp / den;
        let d_f0 = amp * 2.0 * i * q_i * f / (f0 * f0 * den * den);
        Some(vec![d_qi, d_qc, d_phi, d_f0])
    }

    fn param_scale(&self, p: &[f64], j: usize) -> f64 {
        match j {
            // Linewidth, not the carrier frequency.
            3 => p[3] / p[0].abs().max(1.0),
            2 => 1.0,
            _ => p[j].abs().max(1e-300),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Linear,
    Sqrt,
}

impl Basis {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Basis::Linear => t,
            Basis::Sqrt => t.sqrt(),
        }
    }
}

/// `y = intercept + slope * g(x)`; parameters `[intercept, slope]`.
#[derive(Debug, Clone, Copy)]
pub struct Line {
    pub basis: Basis,
}

const LINE_PARAMS: [ParamSpec; 2] = [ParamSpec::free("intercept", ""), ParamSpec::free("slope", "")];

impl FitModel for Line {
    fn name(&self) -> &str {
        match self.basis {
            Basis::Linear => "line",
            Basis::Sqrt => "line_sqrt",
        }
    }

    fn params(&self) -> &[ParamSpec] {
        &LINE_PARAMS
    }

    fn eval(&self, p: &[f64], x: f64) -> Complex64 {
        Complex64::new(p[0] + p[1] * self.basis.apply(x), 0.0)
    }
}

/// Closed-form initial guess `[xi, T_c]` from a line fit of H against T^2.
pub fn guess_gl_hc2(data: &[(f64, f64)]) -> Result<[f64; 2]> {
    let (intercept, slope) = ols(data.iter().map(|&(t, h)| (t * t, h)))?;
    if !(intercept > 0.0 && slope < 0.0) {
        return Err(Error::InvalidInput(
            "H_c2 data do not decrease with temperature; cannot seed the fit".into(),
        ));
    }
    let xi = (FLUX_QUANTUM / (2.0 * PI * intercept)).sqrt();
    Ok([xi, (-intercept / slope).sqrt()])
}

/// Initial guess `[H0, alpha, beta, T_c]` for the power law, seeded from the
/// GL form (`alpha = 2, beta = 1`).
pub fn guess_powerlaw_hc2(data: &[(f64, f64)]) -> Result<[f64; 4]> {
    let [xi, t_c] = guess_gl_hc2(data)?;
    Ok([FLUX_QUANTUM / (2.0 * PI * xi * xi), 2.0, 1.0, t_c])
}

/// Initial guess `[Q_i, Q_c*, phi, f0]` from inverse-S21 data: `f0` at the
/// peak of `|S21^-1 - 1|`, `Q_i` from its half-power width, and the complex
/// peak value giving `Q_i/Q_c*` and `phi`.
pub fn guess_inv_s21(data: &[DataPoint]) -> Result<[f64; 4]> {
    if data.len() < 5 {
        return Err(Error::TooFewPoints(format!("{} resonance points", data.len())));
    }
    let mut pts: Vec<(f64, Complex64)> = data.iter().map(|d| (d.x, d.y - 1.0)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (k0, &(f0, peak)) = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.norm().total_cmp(&b.1 .1.norm()))
        .expect("non-empty");
    let half = peak.norm_sqr() / 2.0;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k0;
        for k in range {
            let (a, b) = (pts[prev].1.norm_sqr(), pts[k].1.norm_sqr());
            if b <= half {
                let w = (a - half) / (a - b);
                return Some(pts[prev].0 + w * (pts[k].0 - pts[prev].0));
            }
            prev = k;
        }
        None
    };
    let lo = crossing(&mut (0..k0).rev());
    let hi = crossing(&mut (k0 + 1..pts.len()));
    let fwhm = match (lo, hi) {
        (Some(a), Some(b)) => b - a,
        (Some(a), None) => 2.0 * (f0 - a),
        (None, Some(b)) => 2.0 * (b - f0),
        (None, None) => pts[pts.len() - 1].0 - pts[0].0,
    };
    let q_i = f0 / fwhm;
    Ok([q_i, q_i / peak.norm(), peak.arg(), f0])
}

/// Ordinary least squares `y = a + b x`; returns `(a, b)`.
pub(crate) fn ols(points: impl Iterator<Item = (f64, f64)>) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.collect();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints(format!("{} points for a line", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}
