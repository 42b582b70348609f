//! Orthonormal Haar (Daubechies-1) wavelet transform.
//!
//! Coefficient layout for `levels = L` is the usual multilevel ordering
//! `[cA_L, cD_L, cD_{L-1}, ..., cD_1]`; for a 24-hour profile at three levels
//! that is 3 approximation, 3, 6 and 12 detail coefficients.

use std::f64::consts::FRAC_1_SQRT_2;

use super::DailyProfile;
use crate::error::{Error, Result};

pub const PROFILE_LEVELS: u32 = 3;

fn check(len: usize, levels: u32) -> Result<()> {
    let block = 1usize << levels;
    if len == 0 || len % block != 0 {
        return Err(Error::invalid(format!(
            "signal length {len} is not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

pub fn haar_dwt(signal: &[f64], levels: u32) -> Result<Vec<f64>> {
    check(signal.len(), levels)?;
    let mut out = signal.to_vec();
    let mut len = signal.len();
    let mut tmp = vec![0.0; len];
    for _ in 0..levels {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (out[2 * i], out[2 * i + 1]);
            tmp[i] = (a + b) * FRAC_1_SQRT_2;
            tmp[half + i] = (a - b) * FRAC_1_SQRT_2;
        }
        out[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
    Ok(out)
}

pub fn haar_idwt(coeffs: &[f64], levels: u32) -> Result<Vec<f64>> {
    check(coeffs.len(), levels)?;
    let mut out = coeffs.to_vec();
    let mut len = coeffs.len() >> levels;
    let mut tmp = vec![0.0; coeffs.len()];
    for _ in 0..levels {
        for i in 0..len {
            let (a, d) = (out[i], out[len + i]);
            tmp[2 * i] = (a + d) * FRAC_1_SQRT_2;
            tmp[2 * i + 1] = (a - d) * FRAC_1_SQRT_2;
        }
        len *= 2;
        out[..len].copy_from_slice(&tmp[..len]);
    }
    Ok(out)
}

/// Three-level Haar coefficients of a daily profile.
pub fn dwt_haar(profile: &DailyProfile) -> Vec<f64> {
    haar_dwt(&profile.fractions, PROFILE_LEVELS).expect("24 is divisible by 8")
}
