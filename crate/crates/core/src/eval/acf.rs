use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Autocorrelation and partial autocorrelation at lags `0..=max_lag`, with
/// the half-width of the 95% white-noise band.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlogram {
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub band: f64,
}

fn check(series: &[f64], max_lag: usize) -> Result<()> {
    if series.len() <= max_lag + 2 {
        return Err(Error::invalid(format!(
            "series of length {} is too short for {max_lag} lags",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    Ok(())
}

/// Sample autocorrelation with the biased (divide by n) autocovariance.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    check(series, max_lag)?;
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let d: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = d.iter().map(|v| v * v).sum::<f64>() / n;
    if c0 <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                return 1.0;
            }
            let ck = d.iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / n;
            ck / c0
        })
        .collect())
}

/// Partial autocorrelation by the Durbin–Levinson recursion on [`acf`].
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let r = acf(series, max_lag)?;
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = r[k] - phi.iter().enumerate().map(|(j, p)| p * r[k - 1 - j]).sum::<f64>();
        let den = 1.0 - phi.iter().enumerate().map(|(j, p)| p * r[j + 1]).sum::<f64>();
        let kk = if den.abs() > f64::EPSILON { num / den } else { 0.0 };
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kk * prev[prev.len() - 1 - j];
        }
        phi.push(kk);
        out.push(kk);
    }
    Ok(out)
}

pub fn correlogram(series: &[f64], max_lag: usize) -> Result<Correlogram> {
    Ok(Correlogram {
        acf: acf(series, max_lag)?,
        pacf: pacf(series, max_lag)?,
        band: 1.96 / (series.len() as f64).sqrt(),
    })
}

impl Correlogram {
    /// First lag at which the ACF is negative.
    pub fn first_negative_lag(&self) -> Option<usize> {
        self.acf.iter().position(|&v| v < 0.0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("lag,acf,pacf,band\n");
        for (k, (a, p)) in self.acf.iter().zip(&self.pacf).enumerate() {
            s.push_str(&format!("{k},{a},{p},{}\n", self.band));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(s.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_is_uncorrelated() {
        let r = acf(&noise(10_000, 1), 48).unwrap();
        assert_eq!(r[0], 1.0);
        assert!(r[1..].iter().all(|v| v.abs() < 0.05));
    }

    #[test]
    fn ar1_signature() {
        let e = noise(50_000, 2);
        let mut x = vec![0.0; e.len()];
        for t in 1..x.len() {
            x[t] = 0.9 * x[t - 1] + e[t];
        }
        let c = correlogram(&x, 20).unwrap();
        for k in 0..=10 {
            assert!((c.acf[k] - 0.9f64.powi(k as i32)).abs() < 0.02, "lag {k}: {}", c.acf[k]);
        }
        assert!((c.pacf[1] - 0.9).abs() < 0.02);
        assert!(c.pacf[2..].iter().all(|v| v.abs() < 0.02));
    }

    #[test]
    fn daily_sinusoid() {
        let x: Vec<f64> = (0..24 * 60).map(|t| (t as f64 * std::f64::consts::TAU / 24.0).sin()).collect();
        let c = correlogram(&x, 48).unwrap();
        assert!(c.acf[12] < 0.0 && c.acf[24] > 0.9);
        assert!(matches!(c.first_negative_lag(), Some(6..=7)));
        assert!(c.acf.iter().chain(&c.pacf).all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(acf(&[3.0; 50], 5), Err(Error::UndefinedCorrelation)));
        assert!(acf(&[1.0, 2.0, 3.0], 5).is_err());
    }
}
