use std::fmt;

/// Two-decimal display that rounds the exact binary value half away from
/// zero, so an exactly representable `0.125` prints as `0.13`.
pub fn fmt_score(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    // `{:.N}` prints the exact decimal expansion for large N.
    let digits = format!("{:.60}", x.abs());
    let (int, frac) = digits.split_once('.').expect("fixed-point output");
    let frac = frac.as_bytes();
    let mut hundredths: u64 = int.parse::<u64>().expect("finite magnitude") * 100
        + u64::from(frac[0] - b'0') * 10
        + u64::from(frac[1] - b'0');
    if frac[2] >= b'5' {
        hundredths += 1;
    }
    let sign = if x < 0.0 && hundredths > 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
}

/// One line of an evaluation report:
/// `metric\tdataset\tvalue\tci_lo\tci_hi\tcoverage`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportLine {
    pub metric: String,
    pub dataset: String,
    pub value: f64,
    pub ci: Option<(f64, f64)>,
    pub covered: usize,
    pub total: usize,
}

impl fmt::Display for ReportLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{:.4}\t", self.metric, self.dataset, self.value)?;
        match self.ci {
            Some((lo, hi)) => write!(f, "{lo:.4}\t{hi:.4}")?,
            None => write!(f, "NA\tNA")?,
        }
        write!(f, "\t{}/{}", self.covered, self.total)
    }
}

pub const REPORT_COLUMNS: &str = "metric\tdataset\tvalue\tci_lo\tci_hi\tcoverage";
