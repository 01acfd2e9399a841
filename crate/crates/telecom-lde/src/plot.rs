//! Long-form plot table `(series, x, y, y_low, y_high)` derived from a
//! results table by column arithmetic.

use std::collections::HashSet;

use serde::Serialize;

use crate::output::Row;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub y_low: f64,
    pub y_high: f64,
}

pub const PLOT_HEADER: [&str; 5] = ["series", "x", "y", "y_low", "y_high"];

#[derive(Default)]
struct Table {
    rows: Vec<PlotRow>,
    seen: HashSet<(String, u64)>,
}

impl Table {
    fn push(&mut self, series: String, x: f64, y: f64, lo: f64, hi: f64) {
        // A theory value shared by several rows is emitted once.
        if self.seen.insert((series.clone(), x.to_bits())) {
            self.rows.push(PlotRow { series, x, y, y_low: lo, y_high: hi });
        }
    }

    fn point(&mut self, series: String, x: f64, y: f64) {
        self.push(series, x, y, y, y);
    }
}

/// `gamma` is needed only to rescale intermediate-deviation rows.
pub fn plot_rows(rows: &[Row], gamma: Option<f64>) -> Vec<PlotRow> {
    let mut out = Table::default();
    for r in rows {
        match r.experiment.as_str() {
            "limit-check" => {
                let label = if r.method == "workload" { "workload" } else { "telecom" };
                let t = r.t;
                out.push(format!("{label}_cdf t={t}"), r.rho, 1.0 - r.p_hat, 1.0 - r.ci_high, 1.0 - r.ci_low);
                let reference =
                    if r.method == "workload" { format!("telecom_reference_cdf t={t}") } else { "stable_cdf".into() };
                out.point(reference, r.rho, 1.0 - r.theory);
            }
            "ld-intermediate" if gamma.is_some() => {
                let s = r.t.powf(gamma.unwrap_or(f64::NAN) - 1.0);
                out.push("p_hat*t^(gamma-1)".into(), r.t, r.p_hat * s, r.ci_low * s, r.ci_high * s);
                out.point("Q*D1".into(), r.t, r.theory * s);
            }
            "ld-intermediate" | "ld-multisession" => {
                out.push("p_hat".into(), r.t, r.p_hat, r.ci_low, r.ci_high);
                out.point("theory".into(), r.t, r.theory);
                out.push("ratio".into(), r.t, r.ratio, r.ci_low / r.theory, r.ci_high / r.theory);
            }
            "constants" => {
                out.push(r.method.clone(), r.rho, r.p_hat, r.ci_low, r.ci_high);
                out.point("theory".into(), r.rho, r.theory);
            }
            "measure-selftest" => out.point(format!("{} t={}", r.method, r.t), r.rho, r.ratio),
            _ => {
                let t = r.t;
                out.push(format!("p_hat t={t}"), r.rho, r.p_hat, r.ci_low, r.ci_high);
                out.point(format!("theory t={t}"), r.rho, r.theory);
                out.push(format!("ratio t={t}"), r.rho, r.ratio, r.ci_low / r.theory, r.ci_high / r.theory);
            }
        }
    }
    out.rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(experiment: &str, t: f64, rho: f64, p: f64, theory: f64, method: &str) -> Row {
        Row {
            experiment: experiment.into(),
            t,
            rho,
            p_hat: p,
            ci_low: 0.9 * p,
            ci_high: 1.1 * p,
            theory,
            ratio: p / theory,
            method: method.into(),
            replicates: 10,
            seed: 1,
        }
    }

    #[test]
    fn intermediate_rows_are_rescaled() {
        let rows = [row("ld-intermediate", 100.0, 50.0, 0.02, 0.1, "conditional")];
        let out = plot_rows(&rows, Some(1.5));
        assert_eq!(out[0].series, "p_hat*t^(gamma-1)");
        assert!((out[0].y - 0.2).abs() < 1e-12);
        assert!((out[1].y - 1.0).abs() < 1e-12);
        assert_eq!(out[1].y_low, out[1].y_high);
    }

    #[test]
    fn limit_rows_become_a_cdf_pair() {
        let rows =
            [row("limit-check", 10.0, 1.0, 0.25, 0.2, "telecom"), row("limit-check", 100.0, 1.0, 0.22, 0.2, "telecom")];
        let out = plot_rows(&rows, None);
        let series: Vec<&str> = out.iter().map(|p| p.series.as_str()).collect();
        assert_eq!(series, ["telecom_cdf t=10", "stable_cdf", "telecom_cdf t=100"]);
        assert!((out[0].y - 0.75).abs() < 1e-12);
        assert!(out[0].y_low <= out[0].y && out[0].y <= out[0].y_high);
    }
}
