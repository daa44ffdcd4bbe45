//! Bounded queue that discards its oldest entry instead of blocking the
//! producer.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

#[derive(Debug)]
pub struct DropOldest<T> {
    capacity: usize,
    inner: Mutex<Inner<T>>,
    ready: Condvar,
}

#[derive(Debug)]
struct Inner<T> {
    items: VecDeque<T>,
    dropped: u64,
    closed: bool,
}

impl<T> DropOldest<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            capacity,
            inner: Mutex::new(Inner { items: VecDeque::with_capacity(capacity), dropped: 0, closed: false }),
            ready: Condvar::new(),
        }
    }

    /// Appends `item`, evicting the oldest entry when full. Returns false
    /// once the queue is closed.
    pub fn push(&self, item: T) -> bool {
        let mut inner = self.inner.lock().unwrap();
        if inner.closed {
            return false;
        }
        if inner.items.len() == self.capacity {
            inner.items.pop_front();
            inner.dropped += 1;
        }
        inner.items.push_back(item);
        drop(inner);
        self.ready.notify_one();
        true
    }

    /// Waits up to `timeout` for an item. `None` on timeout, or when closed
    /// and drained.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<T> {
        let inner = self.inner.lock().unwrap();
        let (mut inner, _) = self
            .ready
            .wait_timeout_while(inner, timeout, |i| i.items.is_empty() && !i.closed)
            .unwrap();
        inner.items.pop_front()
    }

    pub fn close(&self) {
        self.inner.lock().unwrap().closed = true;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.inner.lock().unwrap().closed
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries evicted so far.
    pub fn dropped(&self) -> u64 {
        self.inner.lock().unwrap().dropped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use std::thread;

    #[test]
    fn evicts_oldest_when_full() {
        let q = DropOldest::new(3);
        for i in 0..5 {
            assert!(q.push(i));
        }
        assert_eq!(q.dropped(), 2);
        let got: Vec<i32> = std::iter::from_fn(|| q.pop_timeout(Duration::ZERO)).collect();
        assert_eq!(got, vec![2, 3, 4]);
    }

    #[test]
    fn closed_queue_refuses_and_wakes() {
        let q = Arc::new(DropOldest::<u8>::new(1));
        let waiter = {
            let q = Arc::clone(&q);
            thread::spawn(move || q.pop_timeout(Duration::from_secs(10)))
        };
        thread::sleep(Duration::from_millis(20));
        q.close();
        assert_eq!(waiter.join().unwrap(), None);
        assert!(!q.push(1));
    }

    #[test]
    fn hands_items_across_threads_in_order() {
        let q = Arc::new(DropOldest::new(10_000));
        let producer = {
            let q = Arc::clone(&q);
            thread::spawn(move || (0..1000).for_each(|i| assert!(q.push(i))))
        };
        let mut got = Vec::new();
        while got.len() < 1000 {
            if let Some(v) = q.pop_timeout(Duration::from_secs(1)) {
                got.push(v);
            }
        }
        producer.join().unwrap();
        assert_eq!(got, (0..1000).collect::<Vec<_>>());
    }
}
