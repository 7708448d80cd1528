//! Bessel functions of the first and second kind, orders 0 and 1.
//!
//! Power series for small arguments, Miller's backward recurrence with the
//! Neumann series for `Y` at moderate arguments, and the Hankel asymptotic
//! expansion for large ones.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use crate::error::{domain, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// `(J0, J1, Y0, Y1)` at `x > 0`.
fn all(x: f64) -> (f64, f64, f64, f64) {
    if x < SERIES_LIMIT {
        series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller(x)
    } else {
        let (j0, y0) = hankel(x, 0.0);
        let (j1, y1) = hankel(x, 4.0);
        (j0, j1, y0, y1)
    }
}

fn series(x: f64) -> (f64, f64, f64, f64) {
    let q = -0.25 * x * x;
    let half = 0.5 * x;
    let log_term = (half).ln() + EULER_GAMMA;

    // term_k = q^k / (k!)^2 for order 0, q^k (x/2) / (k!(k+1)!) for order 1.
    let (mut j0, mut j1) = (0.0, 0.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    let mut t0 = 1.0;
    let mut t1 = half;
    let mut harmonic = 0.0; // H_k
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            t0 *= q / (kf * kf);
            t1 *= q / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        j0 += t0;
        j1 += t1;
        s0 += harmonic * t0;
        // ψ(k+1) + ψ(k+2) = 2H_k + 1/(k+1) − 2γ
        s1 += (2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA) * t1;
        if t0.abs() < 1e-18 * j0.abs().max(1e-300) && t1.abs() < 1e-18 * j1.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    let y0 = 2.0 / PI * (log_term * j0 - s0);
    let y1 = -2.0 / (PI * x) + 2.0 / PI * half.ln() * j1 - s1 / PI;
    (j0, j1, y0, y1)
}

fn miller(x: f64) -> (f64, f64, f64, f64) {
    let mut top = (x as usize) + 50;
    if top % 2 == 1 {
        top += 1;
    }
    let mut values = vec![0.0; top + 2];
    values[top] = 1e-30;
    for k in (1..=top).rev() {
        values[k - 1] = 2.0 * k as f64 / x * values[k] - values[k + 1];
        if values[k - 1].abs() > 1e250 {
            for v in values[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = values[0] + 2.0 * values[2..=top].iter().step_by(2).sum::<f64>();
    for v in &mut values {
        *v /= norm;
    }
    let (j0, j1) = (values[0], values[1]);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut sign = -1.0;
    for k in 1..top / 2 {
        let kf = k as f64;
        s0 += sign * values[2 * k] / kf;
        s1 += sign * (values[2 * k - 1] - values[2 * k + 1]) / kf;
        sign = -sign;
    }
    let y0 = 2.0 / PI * log_term * j0 - 4.0 / PI * s0;
    let y1 = 2.0 / PI * log_term * j1 - 2.0 * j0 / (PI * x) + 2.0 / PI * s1;
    (j0, j1, y0, y1)
}

/// Hankel expansion; `mu = 4ν²`. Returns `(J_ν, Y_ν)` for ν ∈ {0, 1}.
fn hankel(x: f64, mu: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut previous = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * x * k as f64);
        if term.abs() > previous || term == 0.0 {
            break;
        }
        previous = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    let (cos_chi, sin_chi) = if mu == 0.0 {
        ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2)
    } else {
        ((s - c) * FRAC_1_SQRT_2, -(s + c) * FRAC_1_SQRT_2)
    };
    let amp = (2.0 / (PI * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return 1.0;
    }
    all(x).0
}

pub fn bessel_j1(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    x.signum() * all(x.abs()).1
}

pub fn bessel_y0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("Y0 needs x > 0, got {x}"));
    }
    Ok(all(x).2)
}

pub fn bessel_y1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("Y1 needs x > 0, got {x}"));
    }
    Ok(all(x).3)
}

/// `(J1(x), Y1(x))` in one evaluation, `x > 0`.
pub(crate) fn order_one(x: f64) -> (f64, f64) {
    let (_, j1, _, y1) = all(x);
    (j1, y1)
}

/// Checks `J1 Y0 − J0 Y1 = 2/(πx)` across all evaluation branches. Runs once.
pub fn wronskian_self_test() -> Result<()> {
    static OUTCOME: OnceLock<Result<()>> = OnceLock::new();
    OUTCOME
        .get_or_init(|| {
            let points = [
                0.01, 0.3, 1.0, 2.7, 5.5, 7.99, 8.0, 12.3, 19.0, 24.99, 25.0, 40.0, 333.0, 5000.0,
            ];
            for x in points {
                let (j0, j1, y0, y1) = all(x);
                let expected = 2.0 / (PI * x);
                let got = j1 * y0 - j0 * y1;
                if ((got - expected) / expected).abs() > 1e-11 {
                    return Err(Error::Domain(format!(
                        "Bessel self-test failed at x = {x}: Wronskian {got} vs {expected}"
                    )));
                }
            }
            Ok(())
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values from an independent library implementation.
    const REFERENCE: [(f64, f64, f64); 18] = [
        (0.001, 0.0004999999375000026, -636.6221672311395),
        (0.5, 0.24226845767487387, -1.4714723926702433),
        (1.0, 0.44005058574493355, -0.7812128213002888),
        (2.5, 0.497094102464274, 0.14591813796678577),
        (5.0, -0.3275791375914653, 0.14786314339122691),
        (7.9, 0.21917939992175126, -0.1817210772805731),
        (8.0, 0.2346363468539146, -0.15806046173124746),
        (8.1, 0.24760776698159287, -0.13314879595249587),
        (10.0, 0.04347274616886141, 0.24901542420695388),
        (20.0, 0.0668331241758502, -0.1655116143625212),
        (24.9, -0.1348556995314088, -0.0860025575955544),
        (25.0, -0.1253502495802898, -0.09882996478323755),
        (25.1, -0.11463478413442246, -0.11062223322783109),
        (50.0, -0.09751182812517509, -0.05679566856201487),
        (100.0, -0.0771453520141123, -0.02037231200275932),
        (1000.0, 0.00472831190708902, -0.024784331292351868),
        (4000.0, 0.0004131197821533662, 0.012608896814062786),
        (1e4, 0.0036474507555281114, 0.00709634275253725),
    ];

    #[test]
    fn matches_reference_values() {
        for (x, j, y) in REFERENCE {
            let gj = bessel_j1(x);
            let gy = bessel_y1(x).unwrap();
            assert!(((gj - j) / j).abs() < 1e-10, "J1({x}) = {gj}, want {j}");
            assert!(((gy - y) / y).abs() < 1e-10, "Y1({x}) = {gy}, want {y}");
        }
    }

    #[test]
    fn trivial_values_and_domain() {
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(-2.0), -bessel_j1(2.0));
        assert!(matches!(bessel_y1(0.0), Err(Error::Domain(_))));
        assert!(bessel_y1(-1.0).is_err());
        assert!(bessel_y0(0.0).is_err());
    }

    #[test]
    fn first_zero_of_j1() {
        // Bisection on the power series alone.
        let f = |x: f64| series(x).1;
        let (mut lo, mut hi) = (3.0, 4.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lo - 3.831705970207513).abs() < 1e-12);
        assert!(bessel_j1(3.831705970207513).abs() < 1e-14);
    }

    #[test]
    fn branches_agree_at_the_crossovers() {
        for x in [7.5, 8.0, 9.0] {
            let a = series(x);
            let b = miller(x);
            assert!((a.1 - b.1).abs() < 1e-13 && (a.3 - b.3).abs() < 1e-13, "{x}");
        }
        for x in [24.0, 25.0, 26.0] {
            let a = miller(x);
            let b = hankel(x, 4.0);
            assert!((a.1 - b.0).abs() < 1e-14 && (a.3 - b.1).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn self_test_passes() {
        wronskian_self_test().unwrap();
    }

    proptest! {
        #[test]
        fn wronskian_identity(x in 0.5f64..100.0) {
            let (j0, j1, y0, y1) = all(x);
            // J1 Y1' − J1' Y1 with Y1' = Y0 − Y1/x and J1' = J0 − J1/x.
            let w = j1 * (y0 - y1 / x) - (j0 - j1 / x) * y1;
            let expected = 2.0 / (PI * x);
            prop_assert!(((w - expected) / expected).abs() < 1e-9);
        }
    }
}
