/// Doubling batch schedule: `M = ceil(log2(T/2 + 1))` batches with
/// boundaries `T_m = min(2(2^m - 1), T)` and `T_M = T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchSchedule {
    horizon: usize,
    boundaries: Vec<usize>,
}

impl BatchSchedule {
    pub fn new(horizon: usize) -> Self {
        assert!(horizon >= 1, "horizon must be at least 1");
        // Smallest M with 2(2^M - 1) >= T, i.e. 2^M >= T/2 + 1.
        let mut m = 1u32;
        while 2 * ((1usize << m) - 1) < horizon {
            m += 1;
        }
        let boundaries = (1..=m)
            .map(|k| if k == m { horizon } else { 2 * ((1usize << k) - 1) })
            .collect();
        Self { horizon, boundaries }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of batches `M`.
    pub fn num_batches(&self) -> usize {
        self.boundaries.len()
    }

    /// `T_1, ..., T_M`.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// `T_m` for 1-based `m`; `T_0 = 0`.
    pub fn end(&self, m: usize) -> usize {
        if m == 0 {
            0
        } else {
            self.boundaries[m - 1]
        }
    }

    pub fn batch_len(&self, m: usize) -> usize {
        self.end(m) - self.end(m - 1)
    }

    /// 1-based batch containing 1-based round `t`.
    pub fn batch_of(&self, t: usize) -> usize {
        self.boundaries.partition_point(|&b| b < t) + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_20000() {
        let s = BatchSchedule::new(20_000);
        assert_eq!(s.num_batches(), 14);
        assert_eq!(
            s.boundaries(),
            &[2, 6, 14, 30, 62, 126, 254, 510, 1022, 2046, 4094, 8190, 16382, 20000]
        );
    }

    #[test]
    fn short_horizons() {
        assert_eq!(BatchSchedule::new(2).boundaries(), &[2]);
        assert_eq!(BatchSchedule::new(1).boundaries(), &[1]);
        // ceil(log2(4.5)) = 3
        assert_eq!(BatchSchedule::new(7).boundaries(), &[2, 6, 7]);
        assert_eq!(BatchSchedule::new(6).boundaries(), &[2, 6]);
    }

    #[test]
    fn batch_lookup() {
        let s = BatchSchedule::new(7);
        assert_eq!(s.batch_of(1), 1);
        assert_eq!(s.batch_of(2), 1);
        assert_eq!(s.batch_of(3), 2);
        assert_eq!(s.batch_of(7), 3);
        assert_eq!(s.batch_len(3), 1);
    }

    #[test]
    fn matches_log_formula() {
        for t in 1..3000usize {
            let s = BatchSchedule::new(t);
            let m = ((t as f64) / 2.0 + 1.0).log2().ceil() as usize;
            assert_eq!(s.num_batches(), m, "T = {t}");
            assert!(s.boundaries().windows(2).all(|w| w[0] < w[1]));
            for k in 1..=m {
                assert!(s.batch_len(k) <= 1 << k);
            }
        }
    }
}
