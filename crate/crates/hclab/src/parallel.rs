//! Index-ordered parallel map with a thread budget capped by HCLAB_THREADS.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

pub(crate) fn thread_budget() -> usize {
    if let Ok(v) = std::env::var("HCLAB_THREADS") {
        if let Ok(k) = v.trim().parse::<usize>() {
            return k.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
}

/// Applies `f` to every element and returns results in input order. Work is
/// pulled from a shared counter, so scheduling cannot change the output.
pub(crate) fn parallel_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let n = items.len();
    let threads = thread_budget().min(n.max(1));
    if threads <= 1 || n <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, U)>();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                if tx.send((i, f(&items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
    });
    let mut out: Vec<Option<U>> = (0..n).map(|_| None).collect();
    for (i, v) in rx {
        out[i] = Some(v);
    }
    out.into_iter()
        .map(|v| v.expect("every index produced"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let xs: Vec<i64> = (0..257).collect();
        let ys = parallel_map(&xs, |x| x * x);
        for (i, y) in ys.iter().enumerate() {
            assert_eq!(*y, (i * i) as i64);
        }
    }
}
