use rand::Rng;

use crate::data::EventSequence;
use crate::error::{Error, Result};

/// Draws `k` contiguous sub-sequence views of one sequence.
///
/// View lengths are uniform in [⌈lo·n⌉, ⌊hi·n⌋] and starts uniform over the
/// valid range, so views may overlap and event order is preserved. When the
/// computed range is degenerate (very short sequences), each view is the
/// whole sequence rather than discarding the sample.
pub fn sample_subsequences(
    sequence: &EventSequence,
    k: usize,
    len_range: (f64, f64),
    rng: &mut impl Rng,
) -> Result<Vec<EventSequence>> {
    let (lo, hi) = len_range;
    if k < 2 {
        return Err(Error::InvalidArgument("need at least 2 views".into()));
    }
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid length range ({lo}, {hi}): need 0 < lo <= hi <= 1"
        )));
    }
    let n = sequence.len();
    let lo_len = ((lo * n as f64).ceil() as usize).max(1);
    let hi_len = (hi * n as f64).floor() as usize;

    let mut views = Vec::with_capacity(k);
    for _ in 0..k {
        if hi_len < lo_len || n == 1 {
            views.push(sequence.clone());
            continue;
        }
        let len = rng.random_range(lo_len..=hi_len);
        let start = rng.random_range(0..=n - len);
        views.push(sequence.slice(start, len));
    }
    Ok(views)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn seq(n: usize) -> EventSequence {
        EventSequence {
            id: "s".into(),
            times: (0..n).map(|j| j as f64).collect(),
            cat_values: vec![(1..=n as u32).collect()],
            num_values: vec![(0..n).map(|j| j as f64 * 0.1).collect()],
            target: None,
        }
    }

    #[test]
    fn view_lengths_respect_range() {
        let s = seq(10);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..100 {
            for view in sample_subsequences(&s, 2, (0.4, 0.8), &mut rng).unwrap() {
                assert!((4..=8).contains(&view.len()));
                for w in view.times.windows(2) {
                    assert!(w[0] <= w[1]);
                }
            }
        }
    }

    #[test]
    fn views_are_contiguous_slices() {
        let s = seq(12);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for view in sample_subsequences(&s, 4, (0.3, 0.6), &mut rng).unwrap() {
            let start = view.times[0] as usize;
            for (offset, &t) in view.times.iter().enumerate() {
                assert_eq!(t as usize, start + offset);
                assert_eq!(view.cat_values[0][offset], (start + offset) as u32 + 1);
            }
        }
    }

    #[test]
    fn singleton_sequence_returns_itself() {
        let s = seq(1);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let views = sample_subsequences(&s, 2, (0.4, 0.8), &mut rng).unwrap();
        assert_eq!(views.len(), 2);
        for v in views {
            assert_eq!(v, s);
        }
    }

    #[test]
    fn bad_ranges_rejected() {
        let s = seq(5);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(sample_subsequences(&s, 1, (0.4, 0.8), &mut rng).is_err());
        assert!(sample_subsequences(&s, 2, (0.0, 0.8), &mut rng).is_err());
        assert!(sample_subsequences(&s, 2, (0.9, 0.8), &mut rng).is_err());
        assert!(sample_subsequences(&s, 2, (0.4, 1.1), &mut rng).is_err());
    }
}
