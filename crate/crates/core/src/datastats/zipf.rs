use serde::Serialize;

use super::StatsError;
use crate::json::Fixed6;

pub const ZIPF_COUNT_FLOOR: u64 = 5;
pub const ZIPF_MIN_RANKS: usize = 10;

/// Least-squares line `ln count = intercept - exponent * ln rank`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZipfFit {
    pub exponent: f64,
    pub intercept: f64,
    /// 1 when the counts are all equal (the flat line fits exactly).
    pub r_squared: f64,
    pub ranks: usize,
}

/// Fits `counts` (descending) over the leading ranks whose count reaches `floor`.
pub fn zipf_fit(counts: &[u64], floor: u64) -> Result<ZipfFit, StatsError> {
    let real: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    zipf_fit_real(&real, floor)
}

/// [`zipf_fit`] over real-valued frequencies.
pub fn zipf_fit_real(counts: &[f64], floor: u64) -> Result<ZipfFit, StatsError> {
    let used: Vec<(f64, f64)> = counts
        .iter()
        .take_while(|&&c| c >= floor as f64 && c > 0.0)
        .enumerate()
        .map(|(i, &c)| (((i + 1) as f64).ln(), c.ln()))
        .collect();
    if used.len() < ZIPF_MIN_RANKS {
        return Err(StatsError::InsufficientRanks {
            found: used.len(),
            floor,
            needed: ZIPF_MIN_RANKS,
        });
    }
    // offsets from the first point keep equal counts exactly flat
    let y0 = used[0].1;
    let used: Vec<(f64, f64)> = used.iter().map(|&(x, y)| (x, y - y0)).collect();
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let intercept = intercept + y0;
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ZipfFit {
        exponent: -slope,
        intercept,
        r_squared,
        ranks: used.len(),
    })
}

#[derive(Serialize)]
struct ZipfJson {
    exponent: Fixed6,
    intercept: Fixed6,
    r_squared: Fixed6,
    ranks: usize,
}

impl Serialize for ZipfFit {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ZipfJson {
            exponent: Fixed6(self.exponent),
            intercept: Fixed6(self.intercept),
            r_squared: Fixed6(self.r_squared),
            ranks: self.ranks,
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let counts: Vec<f64> = (1..=100).map(|r| 1000.0 / r as f64).collect();
        let fit = zipf_fit_real(&counts, ZIPF_COUNT_FLOOR).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-9, "{}", fit.exponent);
        assert!((fit.intercept - 1000f64.ln()).abs() < 1e-9);
        assert_eq!(fit.ranks, 100);
    }

    #[test]
    fn real_valued_power_law_recovers_exponent() {
        // counts large enough that integer rounding is negligible
        let counts: Vec<u64> = (1..=40).map(|r: u64| (1e12 / r as f64).round() as u64).collect();
        let fit = zipf_fit(&counts, ZIPF_COUNT_FLOOR).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-9, "{}", fit.exponent);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn uniform_counts_have_zero_exponent() {
        let fit = zipf_fit(&[50; 30], ZIPF_COUNT_FLOOR).unwrap();
        assert_eq!(fit.exponent, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn floor_limits_ranks() {
        let mut counts = vec![100; 9];
        counts.extend([4, 3, 2]);
        assert_eq!(
            zipf_fit(&counts, 5).unwrap_err(),
            StatsError::InsufficientRanks { found: 9, floor: 5, needed: 10 }
        );
    }
}
