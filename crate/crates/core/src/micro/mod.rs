//! Microstructure descriptors: coarsening length, phase clusters,
//! percolation and effective sheet resistance.
//!
//! Cluster and network analyses use open boundaries (electrodes break
//! periodicity) even though the composition field itself is periodic.

pub mod clusters;
pub mod network;
pub mod percolation;
pub mod spectrum;

pub use clusters::{label_clusters, label_mask, spans, Axis, Labeling, Phase, PhaseMap};
pub use network::{effective_sheet_resistance, ConductivityMap};
pub use percolation::{percolation_threshold_mc, spanning_probability};
pub use spectrum::characteristic_length;

use crate::error::Result;
use crate::field::ScalarField2D;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Al-rich to Ti-rich conductivity ratio.
pub const DEFAULT_CONTRAST: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub threshold: f64,
    pub contrast: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            threshold: DEFAULT_THRESHOLD,
            contrast: DEFAULT_CONTRAST,
        }
    }
}

/// One row of the per-snapshot analysis report.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub time: f64,
    pub char_length: f64,
    pub ti_fraction: f64,
    pub n_clusters: usize,
    pub largest_cluster: usize,
    pub spans_x: bool,
    pub spans_y: bool,
    pub r_eff_x: f64,
    pub r_eff_y: f64,
}

impl AnalysisRow {
    pub const HEADER: &'static str =
        "time,char_length,ti_fraction,n_clusters,largest_cluster,spans_x,spans_y,R_eff_x,R_eff_y";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.time,
            self.char_length,
            self.ti_fraction,
            self.n_clusters,
            self.largest_cluster,
            self.spans_x,
            self.spans_y,
            self.r_eff_x,
            self.r_eff_y
        )
    }
}

/// Runs every descriptor on one snapshot. Resistances are per square in
/// units of `1 / sigma_Ti`.
pub fn analyze_snapshot(time: f64, f: &ScalarField2D, settings: AnalysisSettings) -> Result<AnalysisRow> {
    let char_length = characteristic_length(f)?;
    let phases = PhaseMap::from_field(f, settings.threshold);
    let ti = label_clusters(&phases, Phase::TiRich);
    let sigma = ConductivityMap::two_phase(&phases, 1.0, settings.contrast)?;
    Ok(AnalysisRow {
        time,
        char_length,
        ti_fraction: phases.fraction(Phase::TiRich),
        n_clusters: ti.n_clusters(),
        largest_cluster: ti.largest(),
        spans_x: spans(&ti, Axis::X),
        spans_y: spans(&ti, Axis::Y),
        r_eff_x: effective_sheet_resistance(&sigma, Axis::X)?,
        r_eff_y: effective_sheet_resistance(&sigma, Axis::Y)?,
    })
}
