//! Colexicographic ranking of fixed-size index subsets.

/// `C(n, k)` table for `n <= max_n`, saturating at `u64::MAX`.
#[derive(Debug, Clone)]
pub(crate) struct Binomials {
    rows: Vec<Vec<u64>>,
}

impl Binomials {
    pub(crate) fn new(max_n: usize) -> Self {
        let mut rows = vec![vec![1u64]];
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = vec![1u64; n + 1];
            for k in 1..n {
                row[k] = prev[k - 1].saturating_add(prev[k]);
            }
            rows.push(row);
        }
        Binomials { rows }
    }

    pub(crate) fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.rows[n][k]
        }
    }
}

/// Exact `C(n, k)` as `u128`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Rank of a strictly increasing index list among all subsets of its size.
pub(crate) fn rank(sorted: &[usize], table: &Binomials) -> usize {
    sorted.iter().enumerate().map(|(i, &c)| table.get(c, i + 1) as usize).sum()
}

/// Inverse of [`rank`] for subsets of size `m`.
pub(crate) fn unrank(mut r: usize, m: usize, table: &Binomials) -> Vec<usize> {
    let mut out = vec![0; m];
    for i in (0..m).rev() {
        let mut c = i;
        while table.get(c + 1, i + 1) as usize <= r {
            c += 1;
        }
        r -= table.get(c, i + 1) as usize;
        out[i] = c;
    }
    out
}
