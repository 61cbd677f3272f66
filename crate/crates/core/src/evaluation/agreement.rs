use crate::error::{Error, Result};
use crate::evaluation::distance::mean_and_sample_sd;
use crate::scalar::Scalar;

/// Multiplier of the SD for 95% limits of agreement.
pub const LOA_Z: f64 = 1.96;

/// Bias and 95% limits of agreement of `automatic - manual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementReport<T> {
    pub bias: T,
    pub sd_of_differences: T,
    pub loa_low: T,
    pub loa_high: T,
    pub n_pairs: usize,
}

/// `pairs` holds `(manual, automatic)`. SD uses the n - 1 denominator.
pub fn bland_altman<T: Scalar>(pairs: &[(T, T)]) -> Result<AgreementReport<T>> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pairs.len(),
        });
    }
    let differences: Vec<T> = pairs.iter().map(|&(manual, auto)| auto - manual).collect();
    let (bias, sd) = mean_and_sample_sd(&differences);
    let half_width = T::of(LOA_Z) * sd;
    Ok(AgreementReport {
        bias,
        sd_of_differences: sd,
        loa_low: bias - half_width,
        loa_high: bias + half_width,
        n_pairs: pairs.len(),
    })
}

/// Segments whose reference peak |SLS| falls below `threshold_percent`.
pub fn infarcted_segments<T: Scalar>(labels: &[String], reference_peaks: &[T], threshold_percent: T) -> Vec<String> {
    labels
        .iter()
        .zip(reference_peaks)
        .filter(|(_, p)| p.abs() < threshold_percent)
        .map(|(l, _)| l.clone())
        .collect()
}

/// Default subgroup threshold for infarcted segments, percent.
pub const INFARCT_SLS_THRESHOLD: f64 = 5.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pairs() {
        let r = bland_altman(&[(1.0, 1.0), (-3.0, -3.0), (2.5, 2.5)]).unwrap();
        assert_eq!((r.bias, r.loa_low, r.loa_high), (0.0, 0.0, 0.0));
    }

    #[test]
    fn plus_minus_one() {
        let r = bland_altman(&[(0.0, 1.0), (0.0, -1.0)]).unwrap();
        assert_eq!(r.bias, 0.0);
        assert!((r.sd_of_differences - 2f64.sqrt()).abs() < 1e-15);
        assert!((r.loa_high - 2.772).abs() < 1e-3);
        assert!((r.loa_low + 2.772).abs() < 1e-3);
    }

    #[test]
    fn needs_two_pairs() {
        assert!(matches!(
            bland_altman(&[(0.0, 1.0)]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn subgroup_threshold() {
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let picked = infarcted_segments(&labels, &[-20.0, -4.0, 4.9], INFARCT_SLS_THRESHOLD);
        assert_eq!(picked, vec!["b".to_string(), "c".to_string()]);
    }
}
