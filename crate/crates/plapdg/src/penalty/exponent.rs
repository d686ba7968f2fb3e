//! Exact rational bookkeeping for the nonlinearity index p.

use crate::error::ExponentError;
use num_rational::Ratio;

/// The exponent p > 2 as an exact rational, together with the unique pair
/// (k_p, l_p) of coprime positive integers with p = 2 + 2 k_p / l_p and the
/// conjugate p' = p / (p - 1).
///
/// p = 2 is accepted as a documented linear mode: the scheme degenerates to
/// plain SIPG and no (k_p, l_p) pair exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RationalExponent {
    p: Ratio<i64>,
    p_conj: Ratio<i64>,
    /// (k_p, l_p); `None` exactly in the linear mode p = 2.
    kl: Option<(i64, i64)>,
}

impl RationalExponent {
    pub fn new(p_num: i64, p_den: i64) -> Result<Self, ExponentError> {
        if p_den == 0 {
            return Err(ExponentError::ZeroDenominator);
        }
        let p = Ratio::new(p_num, p_den);
        if p < Ratio::from_integer(2) {
            return Err(ExponentError::OutOfRange {
                num: p_num,
                den: p_den,
            });
        }
        let p_conj = p / (p - Ratio::from_integer(1));
        let kl = if p == Ratio::from_integer(2) {
            None
        } else {
            // (p - 2) / 2 = k / l in lowest terms; Ratio keeps it reduced.
            let half_excess = (p - Ratio::from_integer(2)) / Ratio::from_integer(2);
            Some((*half_excess.numer(), *half_excess.denom()))
        };
        Ok(RationalExponent { p, p_conj, kl })
    }

    pub fn from_ratio(p: Ratio<i64>) -> Result<Self, ExponentError> {
        Self::new(*p.numer(), *p.denom())
    }

    /// Parses a decimal ("2.5") or fractional ("5/2") exponent exactly.
    pub fn parse(text: &str) -> Result<Self, ExponentError> {
        let text = text.trim();
        let parse_err = || ExponentError::Parse(text.to_string());
        if let Some((num, den)) = text.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| parse_err())?;
            let den: i64 = den.trim().parse().map_err(|_| parse_err())?;
            return Self::new(num, den);
        }
        if let Some((int, frac)) = text.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(parse_err());
            }
            let int: i64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| parse_err())?
            };
            let frac_digits = frac.len() as u32;
            let frac_value: i64 = frac.parse().map_err(|_| parse_err())?;
            let den = 10i64.checked_pow(frac_digits).ok_or_else(parse_err)?;
            return Self::new(int * den + frac_value, den);
        }
        let int: i64 = text.parse().map_err(|_| parse_err())?;
        Self::new(int, 1)
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.p
    }

    pub fn value(&self) -> f64 {
        *self.p.numer() as f64 / *self.p.denom() as f64
    }

    pub fn conjugate(&self) -> Ratio<i64> {
        self.p_conj
    }

    pub fn conjugate_value(&self) -> f64 {
        *self.p_conj.numer() as f64 / *self.p_conj.denom() as f64
    }

    pub fn is_linear(&self) -> bool {
        self.kl.is_none()
    }

    /// The pair (k_p, l_p); errors in linear mode.
    pub fn quasi_exponents(&self) -> Result<(i64, i64), ExponentError> {
        self.kl.ok_or(ExponentError::LinearMode)
    }
}

impl std::fmt::Display for RationalExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.p.is_integer() {
            write!(f, "{}", self.p.numer())
        } else {
            write!(f, "{}/{}", self.p.numer(), self.p.denom())
        }
    }
}
