use anyhow::Result;
use pplaw_core::fit::fit_with;
use pplaw_core::{FitConfig, FitResult, LawForm, Observation};
use rayon::prelude::*;

/// [`pplaw_core::fit`] with restarts spread over a rayon pool of `threads`
/// workers (all cores when `None`). The result does not depend on the
/// thread count.
pub fn fit_parallel(
    train: &[Observation],
    form: LawForm,
    config: &FitConfig,
    threads: Option<usize>,
) -> Result<FitResult> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build()?;
    let result = pool.install(|| {
        fit_with(train, form, config, &|f| {
            (0..f.n_starts())
                .into_par_iter()
                .map(|i| f.run_start(i))
                .collect()
        })
    })?;
    Ok(result)
}
