//! Lattice points in thin annuli for planar lattices `⟨1, α+iβ⟩`.
//!
//! The crate is organized by experiment:
//!
//! * [`lattice`]: exact disc and annulus counts, squared-norm spectra, norm gaps.
//! * [`smooth`]: the band-limited counting function built from dual-lattice sums.
//! * [`ensemble`]: averages over `t ∈ [T, 2T]`, moments, KS distance, variance laws.
//! * [`close_pairs`]: pairs of points with nearly equal norms and the form `Q₁`.
//! * [`dioph`]: empirical Diophantine exponents and signed square-root sums.
//! * [`geometry`]: successive minima, box counts and stretched sublattices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod close_pairs;
pub mod dioph;
pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod numeric;
pub mod smooth;

pub use error::{Budget, Error, Result};
pub use lattice::{
    count_annulus, count_disc, disc_error, enumerate_norms, enumerate_points, norm_gap,
    normalized_disc_error, sharp_statistic, AnnulusQuery, DualPoint, LatticePoint, LatticeSpec,
    NormGap, NormShell, SquaredRadius, Which,
};
pub use smooth::{
    default_kernel, smooth_disc_count, smooth_statistic, smooth_statistic_two_call, DualSpectrum,
    Kernel, SmoothingParams,
};
pub use ensemble::{
    difference_second_moment, gaussian_moment, ks_distance, mean_decay_check, moment_report,
    predicted_sigma_squared, sample_points, sharp_series, sharp_smooth_difference_moment,
    smooth_series, spectral_sigma_squared, EnsembleConfig, MomentReport, RhoRule, Sample,
    SampleSeries, Weighting,
};
pub use close_pairs::{
    close_pair_scaling_study, close_pairs_list, count_close_pairs, count_shell_solutions,
    shell_solution_stats, ClosePairQuery, QuadFormQ1, ScalingRow, ShellStats, SHELL_T_CAP,
};
pub use dioph::{
    linear_form_minimum, polynomial_minimum, signed_sqrt_sum, sqrt_sum_gap, DiophQuery,
    ExponentFit, ExtReal, Relation, SqrtSumGap, VectorFilter,
};
pub use geometry::{
    count_box_points, minkowski_bounds, stretch_determinant_check, successive_minima, BoxSpec,
    GeneralLattice, MinimumVector,
};
