//! Asymptotic diagnostics for generalized eigenfunctions: sinusoidal fits,
//! growth exponents of running `L²` norms, subordinacy-type comparisons of
//! solution pairs, scans for square-integrable solutions at positive energy,
//! and the iterated-integral expansion of the phase-stripped Krein solution.

mod fit;
mod scan;
mod series;

pub use fit::{
    fit_sin, growth_exponent, solution_pair, subordinacy_sandwich, AsymptoticFit, FitWindow,
    PanelFit, SolutionTrajectory, SubordinacyDiagnostics,
};
pub use scan::{embedded_scan, transfer_bound_scan, BoundSample, Dip, EmbeddedScan, ScanPoint};
pub use series::{ck_series_q, SeriesEvaluation};
