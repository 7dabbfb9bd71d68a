//! Execution policy for the data-parallel loops (fuzz trials, covering
//! search branches, curve sweeps).
//!
//! With the `parallel` feature disabled, `Exec::Parallel` silently runs
//! sequentially, so callers never need their own `cfg` switches.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// True when work will actually be spread over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, U, F>(self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// First item (in input order) for which `f` returns `Some`.
    pub fn find_map_first<T, U, F>(self, items: Vec<T>, f: F) -> Option<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> Option<U> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.into_par_iter().find_map_first(f);
        }
        items.into_iter().find_map(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        for exec in [Exec::Parallel, Exec::Sequential] {
            let out = exec.map((0..1000u64).collect(), |x| x * x);
            assert_eq!(out, (0..1000u64).map(|x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn find_map_first_is_leftmost() {
        for exec in [Exec::Parallel, Exec::Sequential] {
            let hit = exec.find_map_first((0..10_000u32).collect(), |x| {
                (x % 97 == 96).then_some(x)
            });
            assert_eq!(hit, Some(96));
            assert_eq!(exec.find_map_first(vec![1, 2, 3], |_: i32| None::<i32>), None);
        }
    }
}
