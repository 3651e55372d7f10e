//! Data-parallel helpers.
//!
//! Every grid sweep in the crate goes through these functions. With the
//! `parallel` feature (default) they fan out over rayon's global pool;
//! without it, or after [`set_mode`]`(Mode::Sequential)`, they run on the
//! calling thread. Output order always matches input order, so results are
//! identical in both modes.

use std::sync::atomic::{AtomicU8, Ordering};

/// Execution strategy for grid sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    Parallel,
}

static MODE: AtomicU8 = AtomicU8::new(1);

/// Select the execution strategy process-wide.
///
/// `Mode::Parallel` silently degrades to sequential when the crate is built
/// without the `parallel` feature.
pub fn set_mode(mode: Mode) {
    MODE.store(
        match mode {
            Mode::Sequential => 0,
            Mode::Parallel => 1,
        },
        Ordering::Relaxed,
    );
}

/// The strategy actually in effect.
pub fn mode() -> Mode {
    if cfg!(feature = "parallel") && MODE.load(Ordering::Relaxed) == 1 {
        Mode::Parallel
    } else {
        Mode::Sequential
    }
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode() == Mode::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Order-preserving map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode() == Mode::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Fallible order-preserving map; returns the first error in input order.
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        set_mode(Mode::Sequential);
        let a = map(&xs, |x| x * x);
        set_mode(Mode::Parallel);
        let b = map(&xs, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(map_range(5, |i| i + 1), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn try_map_reports_first_error() {
        let xs = [1, 2, 3, 4];
        let r: Result<Vec<i32>, i32> = try_map(&xs, |&x| if x >= 3 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(3));
    }
}
