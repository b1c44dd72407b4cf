use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::Integer;

use crate::error::{domain, Result};

/// Largest row size accepted by [`binomial_coeff`].
pub const MAX_N: u32 = 100_000;

const CACHE_ROWS: usize = 128;

/// Exact `C(n, k)`.
pub fn binomial_coeff(n: u32, k: u32) -> Result<Integer> {
    if n > MAX_N {
        return domain(format!("n = {n} exceeds {MAX_N}"));
    }
    if k > n {
        return domain(format!("k = {k} outside [0, {n}]"));
    }
    Ok(Integer::from(Integer::binomial_u(n, k)))
}

/// The whole row `C(n, 0..=n)`, cached.
pub fn binomial_row(n: u32) -> Arc<Vec<Integer>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Integer>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(row) = cache.lock().expect("binomial cache").get(&n) {
        return Arc::clone(row);
    }
    let row = Arc::new(compute_row(n));
    let mut guard = cache.lock().expect("binomial cache");
    if guard.len() >= CACHE_ROWS {
        guard.clear();
    }
    guard.insert(n, Arc::clone(&row));
    row
}

fn compute_row(n: u32) -> Vec<Integer> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = Integer::from(1);
    row.push(c.clone());
    for k in 0..n {
        c *= n - k;
        c.div_exact_u_mut(k + 1);
        row.push(c.clone());
    }
    row
}
