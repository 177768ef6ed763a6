use std::str::FromStr;

use num_integer::Integer;
use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::protocol::derive_key;

/// Processor speeds, held as exact rationals normalized so the slowest node
/// has speed 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    speeds: Vec<Rational64>,
    floats: Vec<f64>,
    total: Rational64,
    max: Rational64,
    epsilon: Rational64,
    multipliers: Vec<i64>,
}

impl SpeedProfile {
    /// All speeds equal to 1.
    pub fn uniform(n: usize) -> SpeedProfile {
        SpeedProfile::from_rationals(vec![Rational64::from_integer(1); n])
            .expect("uniform speeds are valid")
    }

    pub fn from_integers(speeds: &[i64]) -> Result<SpeedProfile> {
        SpeedProfile::from_rationals(speeds.iter().copied().map(Rational64::from_integer).collect())
    }

    /// Integer speeds drawn uniformly from `1..=max`, keyed by `seed`.
    pub fn random_integers(n: usize, max: i64, seed: u64) -> Result<SpeedProfile> {
        if max < 1 {
            return Err(Error::InvalidSpeed(format!("maximum speed must be at least 1, got {max}")));
        }
        let speeds: Vec<i64> = (0..n as u64)
            .map(|i| 1 + (derive_key(&[seed, 0x0073_7065_6564, i]) % max as u64) as i64)
            .collect();
        SpeedProfile::from_integers(&speeds)
    }

    /// Normalizes by the minimum speed. Fails on empty or non-positive input.
    pub fn from_rationals(raw: Vec<Rational64>) -> Result<SpeedProfile> {
        let min = *raw
            .iter()
            .min()
            .ok_or_else(|| Error::InvalidSpeed("empty speed list".into()))?;
        if min <= Rational64::from_integer(0) {
            return Err(Error::InvalidSpeed(format!("speeds must be positive, got {min}")));
        }
        let speeds: Vec<Rational64> = raw.into_iter().map(|s| s / min).collect();
        let (epsilon, multipliers) = granularity_of(&speeds)?;
        let total = speeds.iter().sum();
        let max = *speeds.iter().max().expect("non-empty");
        Ok(SpeedProfile {
            floats: speeds.iter().map(|&s| to_f64(s)).collect(),
            speeds,
            total,
            max,
            epsilon,
            multipliers,
        })
    }

    /// Parses one speed per whitespace/comma separated token (`3`, `3/2`, `1.5`).
    pub fn parse_list(text: &str) -> Result<SpeedProfile> {
        let speeds = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(parse_speed)
            .collect::<Result<Vec<_>>>()?;
        SpeedProfile::from_rationals(speeds)
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn rational(&self, i: usize) -> Rational64 {
        self.speeds[i]
    }

    pub fn rationals(&self) -> &[Rational64] {
        &self.speeds
    }

    /// `s_i` as a float.
    pub fn get(&self, i: usize) -> f64 {
        self.floats[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.floats
    }

    /// Total capacity `S`.
    pub fn total(&self) -> f64 {
        to_f64(self.total)
    }

    pub fn total_rational(&self) -> Rational64 {
        self.total
    }

    pub fn max(&self) -> f64 {
        to_f64(self.max)
    }

    /// Always 1 after normalization.
    pub fn min(&self) -> f64 {
        1.0
    }

    pub fn arithmetic_mean(&self) -> f64 {
        self.total() / self.len() as f64
    }

    pub fn harmonic_mean(&self) -> f64 {
        self.len() as f64 / self.floats.iter().map(|s| 1.0 / s).sum::<f64>()
    }

    /// Granularity ε: the largest rational dividing every speed.
    pub fn granularity(&self) -> Rational64 {
        self.epsilon
    }

    pub fn granularity_f64(&self) -> f64 {
        to_f64(self.epsilon)
    }

    /// `n_i = s_i / ε`.
    pub fn multipliers(&self) -> &[i64] {
        &self.multipliers
    }

    pub fn is_uniform(&self) -> bool {
        self.speeds.iter().all(|s| *s.numer() == 1 && *s.denom() == 1)
    }

    /// Renders the profile in the `p/q` list format.
    pub fn to_list(&self) -> String {
        self.speeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub(crate) fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parses `p`, `p/q` or a finite decimal like `1.25` into an exact rational.
pub fn parse_speed(token: &str) -> Result<Rational64> {
    let bad = || Error::InvalidSpeed(format!("'{token}' is not an exact rational"));
    let token = token.trim();
    if let Some((p, q)) = token.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(p, q));
    }
    if let Some((int, frac)) = token.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        if int < 0 || token.starts_with('-') {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let num: i64 = frac.parse().map_err(|_| bad())?;
        return int
            .checked_mul(den)
            .and_then(|v| v.checked_add(num))
            .map(|v| Rational64::new(v, den))
            .ok_or_else(bad);
    }
    token.parse::<i64>().map(Rational64::from_integer).map_err(|_| bad())
}

/// Greatest common rational divisor ε of `speeds` and the integer multipliers
/// `n_i = s_i / ε`.
pub fn granularity_of(speeds: &[Rational64]) -> Result<(Rational64, Vec<i64>)> {
    if speeds.is_empty() {
        return Err(Error::InvalidSpeed("empty speed list".into()));
    }
    let mut num_gcd = 0i64;
    let mut den_lcm = 1i64;
    for s in speeds {
        if *s <= Rational64::from_integer(0) {
            return Err(Error::InvalidSpeed(format!("speeds must be positive, got {s}")));
        }
        num_gcd = num_gcd.gcd(s.numer());
        den_lcm = den_lcm.lcm(s.denom());
    }
    let epsilon = Rational64::new(num_gcd, den_lcm);
    let multipliers = speeds
        .iter()
        .map(|s| {
            let m = s / epsilon;
            debug_assert!(m.is_integer());
            m.to_integer()
        })
        .collect();
    Ok((epsilon, multipliers))
}

impl FromStr for SpeedProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<SpeedProfile> {
        SpeedProfile::parse_list(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational64 {
        Rational64::new(p, q)
    }

    #[test]
    fn granularity_examples() {
        let (eps, n) = granularity_of(&[r(1, 1), r(3, 2), r(2, 1)]).unwrap();
        assert_eq!(eps, r(1, 2));
        assert_eq!(n, vec![2, 3, 4]);
        let (eps, n) = granularity_of(&[r(1, 1); 3]).unwrap();
        assert_eq!(eps, r(1, 1));
        assert_eq!(n, vec![1, 1, 1]);
        let (eps, n) = granularity_of(&[r(1, 1), r(3, 1)]).unwrap();
        assert_eq!(eps, r(1, 1));
        assert_eq!(n, vec![1, 3]);
    }

    #[test]
    fn granularity_is_maximal() {
        let (eps, n) = granularity_of(&[r(2, 3), r(4, 9)]).unwrap();
        assert_eq!(eps, r(2, 9));
        assert_eq!(n, vec![3, 2]);
    }

    #[test]
    fn normalization_divides_by_minimum() {
        let sp = SpeedProfile::from_integers(&[2, 4, 3]).unwrap();
        assert_eq!(sp.rationals(), &[r(1, 1), r(2, 1), r(3, 2)]);
        assert_eq!(sp.max(), 2.0);
        assert_eq!(sp.total(), 4.5);
        assert_eq!(sp.granularity(), r(1, 2));
        assert!(sp.harmonic_mean() <= sp.arithmetic_mean());
    }

    #[test]
    fn parse_formats() {
        assert_eq!(parse_speed("3").unwrap(), r(3, 1));
        assert_eq!(parse_speed("3/2").unwrap(), r(3, 2));
        assert_eq!(parse_speed("1.25").unwrap(), r(5, 4));
        assert_eq!(parse_speed(".5").unwrap(), r(1, 2));
        for bad in ["nan", "inf", "1e3", "1/0", "1.", "x/2", "-1.5"] {
            assert!(parse_speed(bad).is_err(), "{bad}");
        }
        let sp: SpeedProfile = "1 3/2, 2".parse().unwrap();
        assert_eq!(sp.len(), 3);
        assert_eq!(sp.to_list(), "1 3/2 2");
    }

    #[test]
    fn rejects_non_positive() {
        assert!(SpeedProfile::from_integers(&[1, 0]).is_err());
        assert!(SpeedProfile::from_integers(&[]).is_err());
        assert!(SpeedProfile::parse_list("1 -2").is_err());
    }

    #[test]
    fn random_integers_are_seeded_and_bounded() {
        let a = SpeedProfile::random_integers(50, 4, 9).unwrap();
        assert_eq!(a, SpeedProfile::random_integers(50, 4, 9).unwrap());
        assert!(a.as_slice().iter().all(|&s| (1.0..=4.0).contains(&s)));
        assert!(SpeedProfile::random_integers(3, 0, 9).is_err());
    }
}
