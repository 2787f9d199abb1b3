//! Polyconvex integrands, discrete minimization and the gap experiments.

mod experiments;
mod integrand;
mod minimize;
mod stripes;

pub use experiments::{
    competitor_energy_semianalytic, competitor_parts, degree_integral, det_blowup, det_energy,
    extrapolated_disc_area, fit_exponent, gap_experiment, richardson, BlowupRow, CompetitorParts, GapRecord,
};
pub use integrand::{
    example_lagrangian, kconvexity_sample_check, superlinearity_check, ConvexityWitness, IntegrandSpec,
    KConvexityReport, SuperlinearityReport,
};
pub use minimize::{
    energy_gradient, minimize, report_csv, IterationRecord, MinimizeOptions, MinimizeResult, Termination,
};
pub use stripes::{
    decreasing_beyond, minor_pairing_difference, stripe_kr_sequence, weak_minor_convergence_experiment,
    StripePair, TestFunction, WeakMinorRow,
};

#[cfg(test)]
mod tests;
