//! Error norms and least-squares convergence fits.

use std::fmt;

use crate::error::{NlhError, Result};
use crate::C64;

/// `max_m |field_m - reference_m|`.
pub fn linf_error(field: &[C64], reference: &[C64]) -> Result<f64> {
    if field.len() != reference.len() {
        return Err(NlhError::LengthMismatch { expected: reference.len(), got: field.len() });
    }
    Ok(field.iter().zip(reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitModel {
    /// `error = C h^p`: the slope is fitted freely in log space and `C` is
    /// fitted with `p` held at the given value.
    PureOrder(f64),
    /// `error = a h^p + b h^q`, weighted by `1 / error^2`.
    MixedOrder(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFit {
    pub model: FitModel,
    /// `(order, coefficient)` terms of the fitted model.
    pub terms: Vec<(f64, f64)>,
    /// Slope of the free log-log least-squares line through all points.
    pub observed_order: f64,
    /// Slope between the two finest resolutions.
    pub fine_slope: f64,
}

impl ConvergenceFit {
    pub fn coefficient(&self, order: f64) -> Option<f64> {
        self.terms.iter().find(|t| t.0 == order).map(|t| t.1)
    }

    pub fn predict(&self, h: f64) -> f64 {
        self.terms.iter().map(|(p, c)| c * h.powf(*p)).sum()
    }
}

impl fmt::Display for ConvergenceFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|(p, c)| format!("{c:.3e}*h^{p}")).collect();
        write!(f, "{} (observed order {:.3})", parts.join(" + "), self.observed_order)
    }
}

fn log_slope(data: &[(f64, f64)]) -> (f64, f64) {
    let n = data.len() as f64;
    let xs: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, (my - slope * mx).exp())
}

/// Fits `data = [(h_tilde, error)]`.
pub fn fit_convergence(data: &[(f64, f64)], model: FitModel) -> Result<ConvergenceFit> {
    if data.len() < 3 {
        return Err(NlhError::IllConditionedFit(format!("need at least 3 points, got {}", data.len())));
    }
    if data.iter().any(|(h, e)| !(h.is_finite() && *h > 0.0 && e.is_finite() && *e > 0.0)) {
        return Err(NlhError::IllConditionedFit("resolutions and errors must be positive and finite".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(NlhError::IllConditionedFit("repeated resolution".into()));
    }
    let (observed_order, _) = log_slope(&sorted);
    let (h1, e1) = sorted[sorted.len() - 2];
    let (h2, e2) = sorted[sorted.len() - 1];
    let fine_slope = (e1 / e2).ln() / (h1 / h2).ln();
    let terms = match model {
        FitModel::PureOrder(p) => {
            let n = sorted.len() as f64;
            let log_c = sorted.iter().map(|(h, e)| e.ln() - p * h.ln()).sum::<f64>() / n;
            vec![(p, log_c.exp())]
        }
        FitModel::MixedOrder(p, q) => {
            // minimise sum ((a h^p + b h^q - e) / e)^2
            let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (h, e) in &sorted {
                let u = h.powf(p) / e;
                let v = h.powf(q) / e;
                s11 += u * u;
                s12 += u * v;
                s22 += v * v;
                r1 += u;
                r2 += v;
            }
            let det = s11 * s22 - s12 * s12;
            if !(det.abs() > 1e-12 * s11 * s22) {
                return Err(NlhError::IllConditionedFit("basis columns are nearly dependent".into()));
            }
            vec![(p, (r1 * s22 - r2 * s12) / det), (q, (s11 * r2 - s12 * r1) / det)]
        }
    };
    Ok(ConvergenceFit { model, terms, observed_order, fine_slope })
}
