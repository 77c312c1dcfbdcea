//! Log-gamma, digamma and trigamma for positive real arguments.
//!
//! `log_gamma` uses the Lanczos approximation (g = 7, nine coefficients).
//! `digamma` and `trigamma` shift the argument upward with the recurrences
//! `psi(x) = psi(x + 1) - 1/x` and `psi'(x) = psi'(x + 1) + 1/x^2` until it
//! reaches [`ASYMPTOTIC_FROM`], then sum the Bernoulli asymptotic series.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

const ASYMPTOTIC_FROM: f64 = 10.0;

fn check(function: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain { function, x });
    }
    if x.is_infinite() {
        return Err(Error::NonFinite {
            what: "special-function argument",
            index: 0,
        });
    }
    Ok(())
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check("log_gamma", x)?;
    Ok(ln_gamma(x))
}

/// Digamma `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check("digamma", x)?;
    Ok(psi(x))
}

/// Trigamma `psi'(x)` for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    check("trigamma", x)?;
    Ok(psi1(x))
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
        let s = libm::sin(core::f64::consts::PI * x);
        return libm::log(core::f64::consts::PI / s) - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (z + 0.5) * libm::log(t) - t + libm::log(acc)
}

pub(crate) fn psi(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < ASYMPTOTIC_FROM {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // B2/2, B4/4, ... B12/12
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32_760.0))))));
    shift + libm::log(x) - 0.5 * inv - series
}

pub(crate) fn psi1(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < ASYMPTOTIC_FROM {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
    let series = inv
        * inv2
        * (1.0 / 6.0
            - inv2
                * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0)))));
    shift + inv + 0.5 * inv2 + series
}
