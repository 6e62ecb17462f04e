use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Maps `f` over `items` on up to `jobs` scoped threads. Results come back in
/// input order regardless of scheduling.
pub fn par_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = jobs.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let out = f(&items[k]);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(out);
            });
        }
    });
    slots.into_inner().expect("workers finished").into_iter().map(|r| r.expect("every item is processed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let items: Vec<u64> = (0..37).collect();
        for jobs in [1, 3, 64] {
            assert_eq!(par_map(&items, jobs, |v| v * v), items.iter().map(|v| v * v).collect::<Vec<_>>());
        }
        assert!(par_map(&[] as &[u8], 4, |v| *v).is_empty());
    }
}
