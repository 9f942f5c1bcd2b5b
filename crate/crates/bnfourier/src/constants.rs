//! Every numeric threshold and tolerance checked by tests, the CLI and the
//! acceptance suite. Values marked "implementation" are pinned choices of
//! this crate (sample sizes, seeds); the rest are the claimed bounds.

pub const VERSION: u32 = 1;

// claimed values
pub const UNBOUNDED_CHAIN_STEP: f64 = 1.2;
pub const PRODUCT_LITERAL_L1: f64 = 1.2;
pub const PRODUCT_L1_BASE: f64 = 1.21;
pub const CHAIN_NONEMPTY_L1: f64 = 1.07147;
pub const GSTAR_BASE: f64 = 1.05;
pub const PTF_LINF_FACTOR: f64 = 5.0;
pub const KM_LIST_FACTOR: f64 = 4.0;
pub const Z3_VARIANCE: f64 = 1.25;
pub const CHAIN_731: f64 = 0.731;

// tolerances
pub const TOL_ORTHO: f64 = 1e-10;
pub const TOL_ORTHO_PRODUCT: f64 = 1e-12;
pub const TOL_PARSEVAL: f64 = 1e-10;
pub const TOL_CLOSED_FORM: f64 = 1e-9;
pub const TOL_PRODUCT_NORM: f64 = 1e-10;
pub const TOL_RECONSTRUCT: f64 = 1e-9;
pub const TOL_EDGE_GRID: f64 = 1e-6;
pub const TOL_BISECT: f64 = 1e-10;
pub const Z3_VARIANCE_SLACK: f64 = 0.1;

// implementation: statistical criteria
pub const SUCCESS_FRACTION: f64 = 0.9;
pub const STAT_SEEDS: u64 = 100;
pub const MASTER_SEED: u64 = 20240601;
pub const KM_OVERRIDE_M1: u64 = 20_000;
pub const KM_OVERRIDE_M2: u64 = 4_000;
pub const TREE_M_REALIZABLE: usize = 20_000;
pub const TREE_KL_REALIZABLE: f64 = 0.05;
pub const TREE_KL_UNREALIZABLE: f64 = 0.05;
pub const GRID_STEP: f64 = 1e-3;
pub const EDGE_GRID_STEP: f64 = 1e-4;
