//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the work runs on rayon; without it
//! everything degrades to plain iteration. [`map_mode`] lets callers and the
//! benchmark suite pick the mode at runtime.

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl ExecMode {
    pub fn name(&self) -> &'static str {
        match self {
            ExecMode::Sequential => "sequential",
            ExecMode::Parallel => "parallel",
        }
    }
}

/// Order-preserving map in the requested mode.
pub fn map_mode<T: Sync, U: Send>(mode: ExecMode, items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    match mode {
        ExecMode::Sequential => items.iter().map(f).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.iter().map(f).collect()
            }
        }
    }
}

/// Default map: parallel when the feature is enabled.
pub fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    map_mode(ExecMode::Parallel, items, f)
}
