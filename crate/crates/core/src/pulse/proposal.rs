//! Proposal kernels for the two kinds of chain update.

use rand::Rng;

/// The window `[l, l + 2ω]` with `l = max(lower_bound, current - ω)`.
pub fn count_window(current: u64, lower_bound: u64, window: u64) -> (u64, u64) {
    let l = lower_bound.max(current.saturating_sub(window));
    (l, l + 2 * window)
}

/// Draws uniformly from [`count_window`].
pub fn propose_block_count<R: Rng + ?Sized>(
    current: u64,
    lower_bound: u64,
    window: u64,
    rng: &mut R,
) -> u64 {
    let (lo, hi) = count_window(current, lower_bound, window);
    rng.random_range(lo..=hi)
}

/// `ln g(to → from) - ln g(from → to)` for the windowed proposal: zero when
/// `from` lies in the window around `to`, negative infinity otherwise.
pub fn count_log_proposal_ratio(from: u64, to: u64, lower_bound: u64, window: u64) -> f64 {
    let (lo, hi) = count_window(to, lower_bound, window);
    if (lo..=hi).contains(&from) {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Number of ordered block pairs `(i, j)`, `i != j`, with `y_i > 0` and
/// `y_j < ntilde_j`: the one-unit moves available from this allocation.
pub fn avail(y_v: &[u64], ntilde: &[u64]) -> u64 {
    let donors = y_v.iter().filter(|&&x| x > 0).count() as u64;
    let receivers = y_v.iter().zip(ntilde).filter(|(y, n)| y < n).count() as u64;
    let both = y_v
        .iter()
        .zip(ntilde)
        .filter(|(&y, &n)| y > 0 && y < n)
        .count() as u64;
    donors * receivers - both
}

/// One unit moved from block `from` to block `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendantMove {
    pub from: usize,
    pub to: usize,
    /// `ln Avail(old) - ln Avail(new)`.
    pub log_ratio: f64,
}

/// Chooses an admissible ordered pair uniformly by drawing distinct pairs
/// until one admits a move. Returns `None` when no move exists.
pub fn draw_pendant_move<R: Rng + ?Sized>(
    y_v: &[u64],
    ntilde: &[u64],
    rng: &mut R,
) -> Option<PendantMove> {
    let k = y_v.len();
    let before = avail(y_v, ntilde);
    if k < 2 || before == 0 {
        return None;
    }
    let (from, to) = loop {
        let i = rng.random_range(0..k);
        let mut j = rng.random_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        if y_v[i] > 0 && y_v[j] < ntilde[j] {
            break (i, j);
        }
    };
    let after = avail_after_move(y_v, ntilde, from, to);
    Some(PendantMove {
        from,
        to,
        log_ratio: (before as f64).ln() - (after as f64).ln(),
    })
}

fn avail_after_move(y_v: &[u64], ntilde: &[u64], from: usize, to: usize) -> u64 {
    let mut donors = 0u64;
    let mut receivers = 0u64;
    let mut both = 0u64;
    for i in 0..y_v.len() {
        let y = if i == from {
            y_v[i] - 1
        } else if i == to {
            y_v[i] + 1
        } else {
            y_v[i]
        };
        let d = y > 0;
        let r = y < ntilde[i];
        donors += u64::from(d);
        receivers += u64::from(r);
        both += u64::from(d && r);
    }
    donors * receivers - both
}

/// Proposes a new allocation for one vertex. Returns the moved allocation
/// and `ln[Avail(old) / Avail(new)]`, or `None` when no move is admissible.
pub fn propose_pendant_move<R: Rng + ?Sized>(
    y_v: &[u64],
    ntilde: &[u64],
    rng: &mut R,
) -> Option<(Vec<u64>, f64)> {
    draw_pendant_move(y_v, ntilde, rng).map(|m| {
        let mut next = y_v.to_vec();
        next[m.from] -= 1;
        next[m.to] += 1;
        (next, m.log_ratio)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn window_cases() {
        assert_eq!(count_window(10, 0, 2), (8, 12));
        assert_eq!(count_window(3, 3, 2), (3, 7));
        assert_eq!(count_window(1, 0, 4), (0, 8));
    }

    #[test]
    fn proposal_ratio_near_lower_bound() {
        // from 3 (window [3,7]) to 7 (window [5,9]): 3 is not reachable back
        assert_eq!(count_log_proposal_ratio(3, 7, 3, 2), f64::NEG_INFINITY);
        assert_eq!(count_log_proposal_ratio(10, 12, 0, 2), 0.0);
    }

    #[test]
    fn avail_examples() {
        assert_eq!(avail(&[2, 0], &[5, 3]), 1);
        assert_eq!(avail(&[1, 1], &[5, 3]), 2);
        assert_eq!(avail(&[0, 0], &[5, 3]), 0);
        assert_eq!(avail(&[1, 1, 0], &[1, 1, 1]), 2);
    }

    #[test]
    fn two_block_move() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (next, ratio) = propose_pendant_move(&[2, 0], &[5, 3], &mut rng).unwrap();
        assert_eq!(next, vec![1, 1]);
        assert!((ratio - 0.5f64.ln()).abs() < 1e-15);
        assert!(propose_pendant_move(&[0, 0], &[5, 3], &mut rng).is_none());
        assert!(propose_pendant_move(&[4], &[5], &mut rng).is_none());
    }

    #[test]
    fn fast_avail_after_move_matches_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let k = rng.random_range(2..5);
            let ntilde: Vec<u64> = (0..k).map(|_| rng.random_range(0..4)).collect();
            let y: Vec<u64> = ntilde.iter().map(|&n| rng.random_range(0..=n)).collect();
            if let Some(m) = draw_pendant_move(&y, &ntilde, &mut rng) {
                let mut next = y.clone();
                next[m.from] -= 1;
                next[m.to] += 1;
                assert_eq!(
                    avail_after_move(&y, &ntilde, m.from, m.to),
                    avail(&next, &ntilde)
                );
            }
        }
    }
}
