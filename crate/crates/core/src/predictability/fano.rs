use crate::error::{Error, Result};

/// Residual target of the bisection.
pub const FANO_TOLERANCE: f64 = 1e-9;

fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// `H(p) + (1 - p) log2(N - 1) - h`, decreasing in `p` on `[1/N, 1]`.
pub fn fano_residual(p: f64, h_rate: f64, n_distinct: usize) -> f64 {
    binary_entropy(p) + (1.0 - p) * ((n_distinct - 1) as f64).log2() - h_rate
}

/// Upper bound on next-symbol predictability for entropy rate `h_rate` (bits)
/// over `n_distinct` symbols. Rates above `log2 N` are clamped with a warning.
pub fn fano_bound(h_rate: f64, n_distinct: usize) -> Result<f64> {
    if n_distinct < 2 {
        return Err(Error::invalid(format!("predictability bound needs N >= 2, got {n_distinct}")));
    }
    if !(h_rate >= 0.0) || !h_rate.is_finite() {
        return Err(Error::invalid(format!("entropy rate must be finite and non-negative, got {h_rate}")));
    }
    if h_rate == 0.0 {
        return Ok(1.0);
    }
    let n = n_distinct as f64;
    let max = n.log2();
    let h = if h_rate > max {
        log::warn!("entropy rate {h_rate} exceeds log2({n_distinct}) = {max}; clamped");
        max
    } else {
        h_rate
    };
    // the residual peaks at 1/N, so the root there is a tangency
    if h >= max {
        return Ok(1.0 / n);
    }
    let (mut lo, mut hi) = (1.0 / n, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = fano_residual(mid, h, n_distinct);
        if f == 0.0 || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    if fano_residual(p, h, n_distinct).abs() >= FANO_TOLERANCE {
        return Err(Error::numerical(format!("bisection did not converge for h={h}, N={n_distinct}")));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense scan over [1/N, 1] in steps of 1e-6 for the smallest |residual|.
    fn grid_oracle(h: f64, n: usize) -> f64 {
        let lo = 1.0 / n as f64;
        let steps = ((1.0 - lo) / 1e-6).ceil() as usize;
        (0..=steps)
            .map(|k| (lo + k as f64 * 1e-6).min(1.0))
            .min_by(|a, b| fano_residual(*a, h, n).abs().total_cmp(&fano_residual(*b, h, n).abs()))
            .unwrap()
    }

    #[test]
    fn zero_entropy_is_certain() {
        for n in [2, 3, 50] {
            assert_eq!(fano_bound(0.0, n).unwrap(), 1.0);
        }
    }

    #[test]
    fn one_bit_over_two_symbols() {
        assert!((fano_bound(1.0, 2).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_grid_scan() {
        let p = fano_bound(1.0, 10).unwrap();
        assert!((p - grid_oracle(1.0, 10)).abs() < 1e-5);
        assert!(fano_residual(p, 1.0, 10).abs() < FANO_TOLERANCE);
    }

    #[test]
    fn maximal_entropy_gives_uniform_guess() {
        for n in [2usize, 5, 10, 37] {
            let p = fano_bound((n as f64).log2(), n).unwrap();
            assert!((p - 1.0 / n as f64).abs() < 1e-9, "N={n}: {p}");
        }
    }

    #[test]
    fn clamps_excess_entropy() {
        assert_eq!(fano_bound(5.0, 4).unwrap(), fano_bound(2.0, 4).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fano_bound(1.0, 1).is_err());
        assert!(fano_bound(-0.1, 4).is_err());
        assert!(fano_bound(f64::NAN, 4).is_err());
    }

    proptest! {
        #[test]
        fn decreasing_in_entropy(n in 2usize..60, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let max = (n as f64).log2();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let p_lo = fano_bound(lo * max, n).unwrap();
            let p_hi = fano_bound(hi * max, n).unwrap();
            prop_assert!(p_hi < p_lo);
            prop_assert!(p_hi >= 1.0 / n as f64 - 1e-12 && p_lo <= 1.0);
        }

        #[test]
        fn residual_within_tolerance(n in 2usize..200, frac in 0.0f64..=1.0) {
            let h = frac * (n as f64).log2();
            let p = fano_bound(h, n).unwrap();
            prop_assert!(fano_residual(p, h, n).abs() < FANO_TOLERANCE);
        }
    }
}
