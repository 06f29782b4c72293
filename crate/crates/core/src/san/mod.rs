//! Stochastic automata networks assembled from Kronecker sums and
//! products of symbolic factors.

mod expm;
mod kron;
mod model;
mod orbit;
mod sweep;

pub use expm::{check_exponential_identity, expm, is_generator, random_generator, ExpIdentityReport};
pub use kron::{kron_prod, kron_prod_expr, kron_sum, kron_sum_expr, make_generator, make_generator_f64, max_row_sum, GeneratorMatrix};
pub use model::{compose_spectrum, FactorJson, SanModel, SanModelJson, SpectralMap, SpectralMode, Term, TermKind};
pub use orbit::{build_orbit_matrix, check_r_linearity, involutions, multiset_distance, OrbitMatrix, RLinearityReport, Verdict};
pub use sweep::{
    check_continuity, composed_local_spectrum, render_svg, sweep_F, uniform_grid, write_csv, ContinuityReport, EntryFn,
    SweepConfig, SweepFactor, SweepRow,
};
