//! Thread-parallel trajectory ensembles.
//!
//! Leaves are evaluated in parallel, collected in index order and reduced
//! with the fixed pairwise tree, so the result does not depend on the
//! number of threads.

use rayon::prelude::*;
use skinlab_core::lattice::LatticeOperators;
use skinlab_core::trajectories::{self, EnsemblePlan, Partial, TrajectoryEnsemble};
use skinlab_core::{Result, C64};

/// One partial sum per leaf, in leaf order.
pub fn leaf_partials(ops: &LatticeOperators, psi0: &[C64], plan: &EnsemblePlan) -> Result<Vec<Partial>> {
    plan.leaves()
        .into_par_iter()
        .map(|r| trajectories::run_leaf(ops, psi0, plan, r))
        .collect()
}

pub fn run_parallel(ops: &LatticeOperators, psi0: &[C64], plan: &EnsemblePlan) -> Result<TrajectoryEnsemble> {
    let parts = leaf_partials(ops, psi0, plan)?;
    let total = trajectories::reduce_tree(parts).expect("plan has at least one leaf");
    Ok(trajectories::finalize(plan, total))
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> std::result::Result<T, rayon::ThreadPoolBuildError> {
    match threads {
        None => Ok(f()),
        Some(k) => Ok(rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build()?.install(f)),
    }
}
