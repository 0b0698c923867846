//! Flat indexing of forward/backward path segments.
//!
//! A window of `W` time points holds one pair `(j⁺, j⁻)` per point. Tuples are
//! ordered lexicographically as `(j₀⁺, j₀⁻, j₁⁺, j₁⁻, …)`, so the oldest time
//! point is the most significant digit and the newest the least significant.
//! Each pair is folded into one base-`M²` digit `j⁺·M + j⁻`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathIndexer {
    m: usize,
    window: usize,
}

impl PathIndexer {
    pub fn new(m: usize, window: usize) -> Self {
        assert!(m > 0, "dimension must be positive");
        PathIndexer { m, window }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of flat indices, M^{2W}.
    pub fn len(&self) -> usize {
        (self.m * self.m).pow(self.window as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, tuple: &[(usize, usize)]) -> usize {
        assert_eq!(
            tuple.len(),
            self.window,
            "tuple length must equal the window"
        );
        let d = self.m * self.m;
        tuple.iter().fold(0, |acc, &(p, q)| {
            debug_assert!(p < self.m && q < self.m);
            acc * d + p * self.m + q
        })
    }

    pub fn decode(&self, mut flat: usize) -> Vec<(usize, usize)> {
        let d = self.m * self.m;
        let mut out = vec![(0, 0); self.window];
        for slot in out.iter_mut().rev() {
            let digit = flat % d;
            flat /= d;
            *slot = (digit / self.m, digit % self.m);
        }
        out
    }
}
