//! Bounded worker pool over independent sweep points.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Applies `task` to every item on up to `workers` threads and returns the
/// results in input order, whatever order the workers finish in.
pub fn map_ordered<T, R, F>(items: &[T], workers: usize, task: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&task).collect();
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(items.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(index) else {
                    break;
                };
                let result = task(item);
                results.lock().expect("result lock").push((index, result));
            });
        }
    });
    let mut results = results.into_inner().expect("result lock");
    results.sort_by_key(|(index, _)| *index);
    results.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        for workers in [1, 2, 7, 500] {
            let out = map_ordered(&items, workers, |&x| {
                if x % 3 == 0 {
                    std::thread::yield_now();
                }
                x * x
            });
            assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
        assert!(map_ordered(&[] as &[u8], 4, |&x| x).is_empty());
    }
}
