//! Physical quantities written as `<number><unit>`, e.g. `0.5ns`,
//! `-90 dBm/GHz`, `0.2/m`. Values are converted to SI on parse and written
//! back in the SI base unit, so a written value parses to the same `f64`.

use std::fmt;

/// Physical dimension of a config value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Frequency,
    Length,
    PerLength,
    Power,
    Gain,
    NoisePsd,
    Energy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError {
    pub input: String,
    pub expected: Dimension,
    pub reason: String,
}

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot read {:?} as {:?}: {}", self.input, self.expected, self.reason)
    }
}

impl std::error::Error for UnitError {}

enum Scale {
    /// `x · 10^k`.
    Linear(i32),
    /// `10^(x/10 + k)`, for dB-scaled units.
    Decibel(i32),
}

fn units(dim: Dimension) -> &'static [(&'static str, Scale)] {
    use Scale::{Decibel, Linear};
    match dim {
        Dimension::Time => &[
            ("s", Linear(0)),
            ("ms", Linear(-3)),
            ("us", Linear(-6)),
            ("µs", Linear(-6)),
            ("ns", Linear(-9)),
            ("ps", Linear(-12)),
            ("fs", Linear(-15)),
        ],
        Dimension::Frequency => &[
            ("Hz", Linear(0)),
            ("kHz", Linear(3)),
            ("MHz", Linear(6)),
            ("GHz", Linear(9)),
            ("THz", Linear(12)),
        ],
        Dimension::Length => &[("m", Linear(0)), ("km", Linear(3)), ("cm", Linear(-2)), ("mm", Linear(-3))],
        Dimension::PerLength => &[("/m", Linear(0)), ("1/m", Linear(0)), ("/km", Linear(-3)), ("/cm", Linear(2))],
        Dimension::Power => &[
            ("W", Linear(0)),
            ("mW", Linear(-3)),
            ("uW", Linear(-6)),
            ("dBm", Decibel(-3)),
            ("dBW", Decibel(0)),
        ],
        Dimension::Gain => &[("dBi", Linear(0)), ("dB", Linear(0))],
        Dimension::NoisePsd => &[
            ("W/Hz", Linear(0)),
            ("dBm/Hz", Decibel(-3)),
            ("dBm/MHz", Decibel(-9)),
            ("dBm/GHz", Decibel(-12)),
            ("dBW/Hz", Decibel(0)),
        ],
        Dimension::Energy => &[
            ("J", Linear(0)),
            ("mJ", Linear(-3)),
            ("uJ", Linear(-6)),
            ("nJ", Linear(-9)),
            ("pJ", Linear(-12)),
            ("fJ", Linear(-15)),
        ],
    }
}

/// SI spelling used when writing a value back out.
pub fn si_unit(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Time => "s",
        Dimension::Frequency => "Hz",
        Dimension::Length => "m",
        Dimension::PerLength => "/m",
        Dimension::Power => "W",
        Dimension::Gain => "dBi",
        Dimension::NoisePsd => "W/Hz",
        Dimension::Energy => "J",
    }
}

/// Parses `<number><unit>`; whitespace between the two is allowed. The unit
/// is mandatory so that a bare `0.5` is never silently read as seconds.
pub fn parse_quantity(input: &str, dim: Dimension) -> Result<f64, UnitError> {
    let err = |reason: &str| UnitError { input: input.to_string(), expected: dim, reason: reason.to_string() };
    let s = input.trim();
    // Longest numeric prefix that parses; units never start with a digit,
    // but `e` inside a mantissa must not be mistaken for a unit.
    let split = s
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(s.len()))
        .filter(|&i| s[..i].trim_end().parse::<f64>().is_ok())
        .max()
        .ok_or_else(|| err("no leading number"))?;
    let number = s[..split].trim_end();
    let value: f64 = number.parse().map_err(|_| err("no leading number"))?;
    if !value.is_finite() {
        return Err(err("value is not finite"));
    }
    let unit = s[split..].trim();
    if unit.is_empty() {
        return Err(err(&format!("missing unit (e.g. {})", si_unit(dim))));
    }
    match units(dim).iter().find(|(name, _)| *name == unit) {
        Some((_, scale)) => {
            let si = match scale {
                Scale::Linear(k) => shift_exponent(number, *k),
                Scale::Decibel(k) => 10f64.powf(value / 10.0 + f64::from(*k)),
            };
            if si.is_finite() {
                Ok(si)
            } else {
                Err(err("value overflows in SI units"))
            }
        }
        None => {
            let known: Vec<&str> = units(dim).iter().map(|(n, _)| *n).collect();
            Err(err(&format!("unknown unit {unit:?}; expected one of {}", known.join(", "))))
        }
    }
}

/// Scales a decimal literal by `10^k` by rewriting its exponent, so that
/// `1.12THz` gives exactly the double nearest to 1.12e12.
fn shift_exponent(number: &str, k: i32) -> f64 {
    let (mantissa, exp) = match number.find(['e', 'E']) {
        Some(i) => (&number[..i], number[i + 1..].parse::<i32>().unwrap_or(0)),
        None => (number, 0),
    };
    format!("{mantissa}e{}", exp + k).parse().expect("valid decimal literal")
}

/// Writes `value` in the SI unit of `dim`; parses back to the same `f64`.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:?}{}", si_unit(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reference_values() {
        assert_eq!(parse_quantity("0.5ns", Dimension::Time).unwrap(), 0.5e-9);
        assert_eq!(parse_quantity("2.5 ns", Dimension::Time).unwrap(), 2.5e-9);
        assert_eq!(parse_quantity("1.12THz", Dimension::Frequency).unwrap(), 1.12e12);
        assert_eq!(parse_quantity("45GHz", Dimension::Frequency).unwrap(), 45e9);
        assert!((parse_quantity("10dBm", Dimension::Power).unwrap() - 0.01).abs() < 1e-18);
        assert_eq!(parse_quantity("20dBi", Dimension::Gain).unwrap(), 20.0);
        let n0 = parse_quantity("-90dBm/GHz", Dimension::NoisePsd).unwrap();
        assert!((n0 - 1e-21).abs() < 1e-33, "{n0}");
        assert_eq!(parse_quantity("0.2/m", Dimension::PerLength).unwrap(), 0.2);
        assert_eq!(parse_quantity("1e-3 /m", Dimension::PerLength).unwrap(), 1e-3);
        assert_eq!(parse_quantity("15m", Dimension::Length).unwrap(), 15.0);
        assert_eq!(parse_quantity("1pJ", Dimension::Energy).unwrap(), 1e-12);
        assert_eq!(parse_quantity("5e-10s", Dimension::Time).unwrap(), 5e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_quantity("0.5", Dimension::Time).is_err());
        assert!(parse_quantity("0.5nm", Dimension::Time).is_err());
        assert!(parse_quantity("ns", Dimension::Time).is_err());
        assert!(parse_quantity("infs", Dimension::Time).is_err());
        let msg = parse_quantity("3 furlongs", Dimension::Length).unwrap_err().to_string();
        assert!(msg.contains("unknown unit"), "{msg}");
        assert!(parse_quantity("1e300THz", Dimension::Frequency).is_err());
    }

    #[test]
    fn formatted_values_round_trip() {
        for (v, d) in [(5e-10, Dimension::Time), (1.12e12, Dimension::Frequency), (1e-21, Dimension::NoisePsd), (0.1 + 0.2, Dimension::Power)] {
            assert_eq!(parse_quantity(&format_quantity(v, d), d).unwrap(), v);
        }
    }
}
