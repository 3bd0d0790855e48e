//! Free-electron and superconducting parameters from transport data.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// CODATA 2018 values, SI units.
pub mod constants {
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;
    pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;
}

use constants::*;

/// Weak-coupling BCS ratio `Delta / (k_B T_c)`.
pub const BCS_RATIO: f64 = 1.764;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportRecord {
    pub label: String,
    /// Film thickness, m.
    pub d: f64,
    /// Sheet resistance, ohm per square.
    pub r_s: f64,
    /// Transition temperature, K.
    pub t_c: f64,
    /// `dR_xy / d(mu0 H)`, ohm per tesla.
    pub hall_slope: f64,
}

impl TransportRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) || !(self.r_s > 0.0) || !(self.t_c >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "{}: need d > 0, R_s > 0, T_c >= 0",
                self.label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeElectronParams {
    /// m^-3
    pub n_e: f64,
    /// m^-1
    pub k_f: f64,
    /// m/s
    pub v_f: f64,
    /// s
    pub tau: f64,
    /// Elastic mean free path, m.
    pub l: f64,
    /// Ioffe-Regel parameter.
    pub k_f_l: f64,
    /// ohm m
    pub rho_xx: f64,
}

/// Electron density from the Hall slope: `n_e = 1 / (slope e d)`.
pub fn hall_carrier_density(hall_slope: f64, d: f64) -> Result<f64> {
    if !(hall_slope > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Hall slope {hall_slope} ohm/T is not electron-like (must be > 0)"
        )));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("thickness {d} m")));
    }
    Ok(1.0 / (hall_slope * ELEMENTARY_CHARGE * d))
}

/// Ordinary least-squares line through `(mu0 H, R_xy)` pairs; returns
/// `(slope, offset)`.
pub fn hall_slope_ols(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(format!("{} Hall points", points.len())));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all Hall fields identical".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

pub fn free_electron_params(n_e: f64, r_s: f64, d: f64) -> Result<FreeElectronParams> {
    if !(n_e > 0.0 && r_s > 0.0 && d > 0.0) {
        return Err(Error::InvalidInput(format!(
            "free-electron inputs must be positive (n_e = {n_e}, R_s = {r_s}, d = {d})"
        )));
    }
    let k_f = (3.0 * PI * PI * n_e).cbrt();
    let v_f = HBAR * k_f / ELECTRON_MASS;
    let rho_xx = r_s * d;
    let tau = ELECTRON_MASS / (n_e * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * rho_xx);
    let l = v_f * tau;
    Ok(FreeElectronParams {
        n_e,
        k_f,
        v_f,
        tau,
        l,
        k_f_l: k_f * l,
        rho_xx,
    })
}

/// Zero-temperature gap `1.764 k_B T_c`, in joules.
pub fn bcs_gap(t_c: f64) -> f64 {
    BCS_RATIO * BOLTZMANN * t_c
}

/// Sheet kinetic inductance `hbar R_s / (pi Delta)`, H per square.
pub fn sheet_kinetic_inductance(r_s: f64, t_c: f64) -> Result<f64> {
    if !(r_s > 0.0 && t_c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need R_s > 0 and T_c > 0 (got {r_s}, {t_c})"
        )));
    }
    Ok(HBAR * r_s / (PI * bcs_gap(t_c)))
}

/// Thickness-normalized inductance `L_s t`, H m.
pub fn specific_inductance(l_s: f64, t: f64) -> f64 {
    l_s * t
}

/// Sheet inductance of a film of thickness `t` and penetration depth
/// `lambda`: `(mu0 lambda / 2) coth(t / 2 lambda)`.
pub fn sheet_inductance_from_lambda(lambda: f64, t: f64) -> f64 {
    0.5 * VACUUM_PERMEABILITY * lambda / (t / (2.0 * lambda)).tanh()
}

/// Fraction of the hottest samples whose median sets the normal-state resistance.
pub const NORMAL_STATE_FRACTION: f64 = 0.1;

/// Temperature at which `R` falls to half its normal-state value.
///
/// `R_normal` is the median of the hottest 10% of samples. Scans down from
/// the top of the trace for the first half-height crossing and interpolates
/// linearly within that interval.
pub fn tc_midpoint(trace: &[(f64, f64)]) -> Result<f64> {
    tc_midpoint_with(trace, NORMAL_STATE_FRACTION)
}

pub fn tc_midpoint_with(trace: &[(f64, f64)], normal_fraction: f64) -> Result<f64> {
    if trace.len() < 3 {
        return Err(Error::TooFewPoints(format!("{} R(T) samples", trace.len())));
    }
    if trace.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::InvalidInput("R(T) trace must be sorted by temperature".into()));
    }
    let n_top = ((trace.len() as f64 * normal_fraction).ceil() as usize).clamp(1, trace.len());
    let mut top: Vec<f64> = trace[trace.len() - n_top..].iter().map(|p| p.1).collect();
    top.sort_by(f64::total_cmp);
    let r_normal = if n_top % 2 == 1 {
        top[n_top / 2]
    } else {
        0.5 * (top[n_top / 2 - 1] + top[n_top / 2])
    };
    if !(r_normal > 0.0) {
        return Err(Error::NoCrossing);
    }
    let half = 0.5 * r_normal;
    for k in (1..trace.len()).rev() {
        let (t_hi, r_hi) = trace[k];
        let (t_lo, r_lo) = trace[k - 1];
        if r_hi >= half && r_lo < half {
            return Ok(t_lo + (half - r_lo) * (t_hi - t_lo) / (r_hi - r_lo));
        }
    }
    Err(Error::NoCrossing)
}

/// One row of the extracted-parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportReport {
    pub record: TransportRecord,
    pub electrons: FreeElectronParams,
    pub gap: f64,
    pub kinetic_inductance: f64,
}

impl TransportReport {
    pub const HEADER: &'static str =
        "label,d_nm,Tc_K,Rs_ohm,ne_1e28_m3,Lk_pH_sq,l_nm,kFl,kF_per_m,vF_m_per_s,tau_s,gap_J";

    pub fn to_csv(&self) -> String {
        let r = &self.record;
        let e = &self.electrons;
        format!(
            "{},{},{},{},{},{},{},{},{:e},{},{:e},{:e}",
            r.label,
            r.d * 1e9,
            r.t_c,
            r.r_s,
            e.n_e / 1e28,
            self.kinetic_inductance * 1e12,
            e.l * 1e9,
            e.k_f_l,
            e.k_f,
            e.v_f,
            e.tau,
            self.gap
        )
    }
}

pub fn extract(record: &TransportRecord) -> Result<TransportReport> {
    record.validate()?;
    let n_e = hall_carrier_density(record.hall_slope, record.d)?;
    Ok(TransportReport {
        record: record.clone(),
        electrons: free_electron_params(n_e, record.r_s, record.d)?,
        gap: bcs_gap(record.t_c),
        kinetic_inductance: sheet_kinetic_inductance(record.r_s, record.t_c)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn flux_quantum_is_h_over_2e() {
        assert!(rel(FLUX_QUANTUM, PLANCK / (2.0 * ELEMENTARY_CHARGE)) < 1e-9);
        assert!(rel(HBAR, PLANCK / (2.0 * PI)) < 1e-9);
    }

    #[test]
    fn hall_density() {
        let n = hall_carrier_density(3.90e-3, 100e-9).unwrap();
        assert!(rel(n, 1.60e28) < 0.005, "{n:e}");
        let n2 = hall_carrier_density(3.90e-3, 200e-9).unwrap();
        assert_relative_eq!(n2, n / 2.0, max_relative = 1e-15);
        // TiN: slope that yields 4.46e28 at 98 nm, evaluated directly.
        let slope = 1.0 / (4.46e28 * ELEMENTARY_CHARGE * 98e-9);
        assert!(rel(slope, 1.4280e-3) < 1e-4, "{slope:e}");
        assert!(rel(hall_carrier_density(slope, 98e-9).unwrap(), 4.46e28) < 1e-12);
        assert!(hall_carrier_density(-1e-3, 1e-7).is_err());
        assert!(hall_carrier_density(0.0, 1e-7).is_err());
    }

    #[test]
    fn hall_ols_reports_offset() {
        let pts: Vec<(f64, f64)> = (0..11).map(|k| {
            let b = -5.0 + k as f64;
            (b, 0.02 + 3.9e-3 * b)
        }).collect();
        let (s, off) = hall_slope_ols(&pts).unwrap();
        assert_relative_eq!(s, 3.9e-3, max_relative = 1e-12);
        assert_relative_eq!(off, 0.02, max_relative = 1e-12);
    }

    #[test]
    fn free_electron_rows() {
        let tan = free_electron_params(1.60e28, 132.3, 100e-9).unwrap();
        assert!(rel(tan.k_f, 7.79e9) < 0.005, "{:e}", tan.k_f);
        assert!(rel(tan.l, 0.151e-9) < 0.01, "{:e}", tan.l);
        assert!(rel(tan.k_f_l, 1.18) < 0.01, "{}", tan.k_f_l);
        assert_relative_eq!(tan.l, tan.v_f * tan.tau, max_relative = 1e-15);
        assert_relative_eq!(tan.rho_xx, 132.3 * 100e-9, max_relative = 1e-15);

        let tin = free_electron_params(4.46e28, 8.5, 98e-9).unwrap();
        assert!(rel(tin.l, 1.21e-9) < 0.01, "{:e}", tin.l);
        assert!(rel(tin.k_f_l, 13.3) < 0.01, "{}", tin.k_f_l);
        assert!(rel(tin.l, 1.33e-9) < 0.15 && rel(tin.k_f_l, 14.6) < 0.15);

        let eight = free_electron_params(8.0 * 1.60e28, 132.3, 100e-9).unwrap();
        assert_relative_eq!(eight.k_f, 2.0 * tan.k_f, max_relative = 1e-15);
    }

    #[test]
    fn gap_values() {
        assert!(rel(bcs_gap(3.2), 7.80e-23) < 0.001, "{:e}", bcs_gap(3.2));
        assert_eq!(bcs_gap(0.0), 0.0);
        assert_relative_eq!(bcs_gap(6.4), 2.0 * bcs_gap(3.2), max_relative = 1e-15);
    }

    #[test]
    fn kinetic_inductance_rows() {
        let tan = sheet_kinetic_inductance(132.3, 3.2).unwrap();
        assert!(rel(tan, 57.0e-12) < 0.01, "{tan:e}");
        let tin = sheet_kinetic_inductance(8.5, 3.8).unwrap();
        assert!(rel(tin, 3.0e-12) < 0.05, "{tin:e}");
        let c = 2.7;
        assert_relative_eq!(sheet_kinetic_inductance(c * 132.3, 3.2).unwrap(), c * tan, max_relative = 1e-14);
        assert_relative_eq!(sheet_kinetic_inductance(132.3, c * 3.2).unwrap(), tan / c, max_relative = 1e-14);
        assert!(sheet_kinetic_inductance(0.0, 3.2).is_err());
    }

    #[test]
    fn specific_inductance_values() {
        let li = specific_inductance(57.4e-12, 100e-9);
        // nH nm = 1e-18 H m
        assert!(rel(li / 1e-18, 5.74) < 1e-12);
        assert!(rel(li / 1e-18, 5.7) < 0.01);

        let lambda = 500e-9;
        let t = 1e-3 * lambda;
        let thin = sheet_inductance_from_lambda(lambda, t) * t;
        let mu_l2 = VACUUM_PERMEABILITY * lambda * lambda;
        assert!(rel(thin, mu_l2) < 1e-4);

        let t = 2.0 * lambda;
        let coth1 = 1.0 / 1.0_f64.tanh();
        assert!((coth1 - 1.3130352855).abs() < 1e-9);
        let thick = sheet_inductance_from_lambda(lambda, t) * t;
        assert_relative_eq!(thick, coth1 * mu_l2, max_relative = 1e-14);
    }

    fn tanh_trace(t_c: f64, width: f64, r_n: f64) -> Vec<(f64, f64)> {
        (0..=2000)
            .map(|k| {
                let t = 2.5 + k as f64 * 0.001;
                (t, r_n * (1.0 + ((t - t_c) / width).tanh()) / 2.0)
            })
            .collect()
    }

    #[test]
    fn midpoint_of_tanh_step() {
        let tc = tc_midpoint(&tanh_trace(3.2, 0.05, 130.0)).unwrap();
        assert!((tc - 3.2).abs() < 1e-3, "{tc}");
    }

    #[test]
    fn midpoint_of_linear_ramp() {
        let trace: Vec<(f64, f64)> = (0..=60)
            .map(|k| {
                let t = 2.9 + k as f64 * 0.01;
                let r = ((t - 3.0) / 0.4).clamp(0.0, 1.0) * 100.0;
                (t, r)
            })
            .collect();
        let tc = tc_midpoint(&trace).unwrap();
        assert!((tc - 3.2).abs() < 1e-9, "{tc}");
    }

    #[test]
    fn midpoint_errors() {
        let flat: Vec<(f64, f64)> = (0..50).map(|k| (k as f64, 10.0)).collect();
        assert!(matches!(tc_midpoint(&flat), Err(Error::NoCrossing)));
        let unsorted = vec![(3.0, 1.0), (2.0, 0.0), (4.0, 1.0)];
        assert!(tc_midpoint(&unsorted).is_err());
    }

    #[test]
    fn midpoint_scale_invariant() {
        let base = tanh_trace(3.17, 0.08, 1.0);
        let tc = tc_midpoint(&base).unwrap();
        for c in [1e-3, 7.0, 1e5] {
            let scaled: Vec<(f64, f64)> = base.iter().map(|&(t, r)| (t, c * r)).collect();
            assert!((tc_midpoint(&scaled).unwrap() - tc).abs() < 1e-12);
        }
    }

    #[test]
    fn hall_round_trip() {
        let slope = 3.9e-3;
        let n = hall_carrier_density(slope, 100e-9).unwrap();
        let p = free_electron_params(n, 132.3, 100e-9).unwrap();
        let back = 1.0 / (p.n_e * ELEMENTARY_CHARGE * 100e-9);
        assert!(rel(back, slope) < 1e-12);
    }

    #[test]
    fn ioffe_regel_is_unit_free() {
        let si = free_electron_params(1.6e28, 132.3, 100e-9).unwrap();
        // Same film with lengths in nm: n in nm^-3, rho in ohm nm. Since
        // l = hbar k_F / (n e^2 rho), l comes out in nm with SI hbar and e.
        let n_nm = 1.6e28 * 1e-27;
        let rho_nm = 132.3 * 100.0;
        let k_f_nm = (3.0 * PI * PI * n_nm).cbrt();
        let l_nm = HBAR * k_f_nm / (n_nm * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * rho_nm);
        assert_relative_eq!(k_f_nm * 1e9, si.k_f, max_relative = 1e-12);
        assert_relative_eq!(l_nm * 1e-9, si.l, max_relative = 1e-12);
        assert_relative_eq!(k_f_nm * l_nm, si.k_f_l, max_relative = 1e-12);
        let direct = (3.0 * PI * PI * si.n_e).cbrt() * si.v_f * si.tau;
        assert_relative_eq!(direct, si.k_f_l, max_relative = 1e-14);
    }

    #[test]
    fn extract_tan_row() {
        let rec = TransportRecord {
            label: "TAN".into(),
            d: 100e-9,
            r_s: 132.3,
            t_c: 3.2,
            hall_slope: 3.90e-3,
        };
        let rep = extract(&rec).unwrap();
        assert!(rel(rep.kinetic_inductance, 57e-12) < 0.01);
        assert_eq!(rep.to_csv().split(',').count(), TransportReport::HEADER.split(',').count());
    }
}
