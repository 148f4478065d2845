//! Process-wide count of outbound HTTP requests.
//!
//! Every remote client bumps this counter before touching the network, which
//! lets the offline test suites assert that no connection was ever opened.

use std::sync::atomic::{AtomicUsize, Ordering};

static HTTP_REQUESTS: AtomicUsize = AtomicUsize::new(0);

pub(crate) fn record_request() {
    HTTP_REQUESTS.fetch_add(1, Ordering::SeqCst);
}

/// Number of HTTP requests issued by this process so far.
pub fn http_request_count() -> usize {
    HTTP_REQUESTS.load(Ordering::SeqCst)
}
