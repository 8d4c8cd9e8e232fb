//! Scaling fits of memory time against code length and inverse temperature.

use serde::{Deserialize, Serialize};

use layercode::fit::{polyfit, LinearFit};

use crate::experiment::SummaryRow;
use crate::BenchError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: f64,
    /// Grid argmax of the mean failure time; ties go to the smaller n.
    pub n_star: usize,
    pub t_star: f64,
    /// Slope of log t against log n over n <= n*; `None` when n* is the
    /// smallest length on the grid.
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    /// Grid points used for the slope.
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub per_beta: Vec<BetaFit>,
    /// log n* = c0 + c1 beta.
    pub n_star_fit: LinearFit<f64>,
    /// log t* = c0 + c1 beta + c2 beta^2.
    pub t_star_fit: LinearFit<f64>,
    /// slope = c0 + c1 beta, over the betas that have a slope.
    pub slope_law: LinearFit<f64>,
}

/// Per-beta optimum and slope, in order of first appearance of each beta.
pub fn beta_fits(rows: &[SummaryRow]) -> Result<Vec<BetaFit>, BenchError> {
    let mut betas: Vec<f64> = Vec::new();
    for r in rows {
        if !betas.iter().any(|b| b.to_bits() == r.beta.to_bits()) {
            betas.push(r.beta);
        }
    }
    betas
        .into_iter()
        .map(|beta| {
            let mut pts: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.beta.to_bits() == beta.to_bits())
                .map(|r| (r.n, r.mean_tfail))
                .collect();
            pts.sort_by_key(|p| p.0);
            if pts.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(BenchError::DegenerateGrid(format!("repeated n at beta {beta}")));
            }
            if let Some(p) = pts.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
                return Err(BenchError::DegenerateGrid(format!("mean {} at n {} is not positive", p.1, p.0)));
            }
            let (star, &(n_star, t_star)) = pts
                .iter()
                .enumerate()
                .fold(None, |best: Option<(usize, &(usize, f64))>, (i, p)| match best {
                    Some((_, b)) if b.1 >= p.1 => best,
                    _ => Some((i, p)),
                })
                .expect("beta present in rows");
            let used = &pts[..=star];
            let (slope, slope_se) = if used.len() >= 2 {
                let x: Vec<f64> = used.iter().map(|p| (p.0 as f64).ln()).collect();
                let y: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
                let f = polyfit(&x, &y, 1)?;
                (Some(f.coefficients[1]), f.std_errors.map(|s| s[1]))
            } else {
                (None, None)
            };
            Ok(BetaFit {
                beta,
                n_star,
                t_star,
                slope,
                slope_se,
                points: used.len(),
            })
        })
        .collect()
}

/// All scaling fits. Needs at least three betas, and at least two of them
/// with an optimum beyond the smallest length.
pub fn fit_report(rows: &[SummaryRow]) -> Result<FitReport, BenchError> {
    let per_beta = beta_fits(rows)?;
    if per_beta.len() < 3 {
        return Err(BenchError::DegenerateGrid(format!(
            "{} beta values, at least 3 needed",
            per_beta.len()
        )));
    }
    let beta: Vec<f64> = per_beta.iter().map(|b| b.beta).collect();
    let log_n: Vec<f64> = per_beta.iter().map(|b| (b.n_star as f64).ln()).collect();
    let log_t: Vec<f64> = per_beta.iter().map(|b| b.t_star.ln()).collect();
    let (sb, s): (Vec<f64>, Vec<f64>) = per_beta.iter().filter_map(|b| b.slope.map(|s| (b.beta, s))).unzip();
    if sb.len() < 2 {
        return Err(BenchError::DegenerateGrid(format!(
            "{} betas with a slope, at least 2 needed",
            sb.len()
        )));
    }
    Ok(FitReport {
        n_star_fit: polyfit(&beta, &log_n, 1)?,
        t_star_fit: polyfit(&beta, &log_t, 2)?,
        slope_law: polyfit(&sb, &s, 1)?,
        per_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, beta: f64, t: f64) -> SummaryRow {
        SummaryRow {
            n,
            beta,
            mean_tfail: t,
            sem: 0.0,
            trials: 1,
            censored: 0,
            mean_tfail_uncensored: Some(t),
            sem_uncensored: None,
        }
    }

    #[test]
    fn argmax_ties_go_to_smaller_n() {
        let rows = [row(5, 1.0, 2.0), row(7, 1.0, 3.0), row(9, 1.0, 3.0), row(11, 1.0, 1.0)];
        let f = &beta_fits(&rows).unwrap()[0];
        assert_eq!((f.n_star, f.t_star, f.points), (7, 3.0, 2));
        let slope = (3.0f64 / 2.0).ln() / (7.0f64 / 5.0).ln();
        assert!((f.slope.unwrap() - slope).abs() < 1e-12);
        assert_eq!(f.slope_se, None);
    }

    #[test]
    fn optimum_at_smallest_length_has_no_slope() {
        let f = &beta_fits(&[row(5, 1.0, 9.0), row(7, 1.0, 3.0)]).unwrap()[0];
        assert_eq!((f.n_star, f.slope), (5, None));
    }

    #[test]
    fn constant_times_give_zero_slope() {
        let rows: Vec<SummaryRow> = [3.0, 4.0, 5.0]
            .iter()
            .flat_map(|&b| [5, 7, 9].map(|n| row(n, b, 100.0)))
            .collect();
        // Flat data: n* is the smallest n and no slope exists.
        assert!(beta_fits(&rows).unwrap().iter().all(|f| f.n_star == 5 && f.slope.is_none()));
        let rising: Vec<SummaryRow> = [3.0, 4.0, 5.0]
            .iter()
            .flat_map(|&b| [row(5, b, 100.0), row(7, b, 100.0 + 1e-9), row(9, b, 100.0 + 2e-9)])
            .collect();
        for f in beta_fits(&rising).unwrap() {
            assert!(f.slope.unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        let two = [row(5, 1.0, 1.0), row(7, 1.0, 2.0), row(5, 2.0, 1.0), row(7, 2.0, 3.0)];
        assert!(matches!(fit_report(&two), Err(BenchError::DegenerateGrid(_))));
        assert!(matches!(
            beta_fits(&[row(5, 1.0, 0.0)]),
            Err(BenchError::DegenerateGrid(_))
        ));
        assert!(matches!(
            beta_fits(&[row(5, 1.0, 1.0), row(5, 1.0, 2.0)]),
            Err(BenchError::DegenerateGrid(_))
        ));
    }
}
