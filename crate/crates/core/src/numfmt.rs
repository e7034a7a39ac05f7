//! Fixed-point decimal formatting for reported numbers.

use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};

/// Tie-handling when the dropped digits are exactly half a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    HalfAwayFromZero,
    HalfEven,
}

/// Decimal places kept before rounding; strips binary noise such as
/// `20.680499999999999` so ties are judged on the intended decimal value.
const SNAP_PLACES: usize = 9;

/// Formats `value` with exactly `places` decimals.
pub fn format_fixed(value: f64, places: u32, mode: Rounding) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let snapped = format!("{value:.SNAP_PLACES$}");
    let Ok(dec) = Decimal::from_str(&snapped) else {
        return format!("{value:.prec$}", prec = places as usize);
    };
    let strategy = match mode {
        Rounding::HalfAwayFromZero => RoundingStrategy::MidpointAwayFromZero,
        Rounding::HalfEven => RoundingStrategy::MidpointNearestEven,
    };
    let rounded = dec.round_dp_with_strategy(places, strategy);
    format!("{rounded:.prec$}", prec = places as usize)
}

/// A fraction in `[0, 1]` as a percentage with 3 decimals, ties to even.
pub fn percent3(fraction: f64) -> String {
    format_fixed(fraction * 100.0, 3, Rounding::HalfEven)
}

/// Rounds to 6 significant digits, the precision of report JSON numbers.
pub fn sig6(value: f64) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    format!("{value:.5e}").parse().unwrap_or(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_away_and_half_even_differ_only_on_ties() {
        assert_eq!(format_fixed(0.125, 2, Rounding::HalfAwayFromZero), "0.13");
        assert_eq!(format_fixed(0.125, 2, Rounding::HalfEven), "0.12");
        assert_eq!(format_fixed(0.126, 2, Rounding::HalfEven), "0.13");
        assert_eq!(format_fixed(-0.125, 2, Rounding::HalfAwayFromZero), "-0.13");
        assert_eq!(format_fixed(1.0, 2, Rounding::HalfEven), "1.00");
    }

    #[test]
    fn binary_noise_does_not_decide_ties() {
        let noisy = (0.10734 + 0.30627) / 2.0 * 100.0;
        assert_eq!(format_fixed(noisy, 3, Rounding::HalfEven), "20.680");
        assert_eq!(
            format_fixed(20.6805 + 1e-13, 3, Rounding::HalfEven),
            "20.680"
        );
        assert_eq!(format_fixed(20.6815, 3, Rounding::HalfEven), "20.682");
    }

    #[test]
    fn sig6_is_idempotent() {
        for v in [0.123456789, 1.0 / 3.0, 2.0 / 3.0, 12345.678, 1e-7 / 3.0] {
            let once = sig6(v);
            assert_eq!(sig6(once), once);
            assert_eq!(once.to_string().parse::<f64>().unwrap(), once);
        }
        assert_eq!(sig6(1.0 / 3.0).to_string(), "0.333333");
    }
}
