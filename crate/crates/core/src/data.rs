//! Two-group bivariate data: loading, pooled fit and the estimates table.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, BaseEstimator, EstimatorSpec, PriorSpec};
use crate::improvement::{applicable_case, improve, Truncation};
use crate::selection::{select, SelectionSummary};
use crate::sim::fmt_g;
use crate::types::{CovarianceSpec, LinexParams, ObservationPair, Pair};

/// Egg weight and cholesterol for the organic and inorganic feed groups.
pub const POULTRY_CSV: &str = include_str!("../data/poultry.csv");

/// A cholesterol value printed as `1745.46` among values near 145.
pub const RAW_OUTLIER: f64 = 1745.46;
pub const CLEANED_VALUE: f64 = 145.46;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    /// population names in order of first appearance
    pub labels: [String; 2],
    /// `(weight, cholesterol)` as `(x, y)`
    pub group1: Vec<Pair>,
    pub group2: Vec<Pair>,
}

#[derive(Deserialize)]
struct Row {
    group: String,
    weight: f64,
    cholesterol: f64,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<GroupedDataset> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_dataset(f)
}

pub fn poultry_fixture() -> GroupedDataset {
    read_dataset(POULTRY_CSV.as_bytes()).expect("bundled fixture parses")
}

/// Reads `group,weight,cholesterol` rows; exactly two groups of equal size.
pub fn read_dataset<R: Read>(reader: R) -> Result<GroupedDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Parse { line: 1, message: "empty file".into() });
    }
    for col in ["group", "weight", "cholesterol"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing column '{col}' (header is '{}')", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
    }
    let mut labels: Vec<String> = Vec::new();
    let mut groups: [Vec<Pair>; 2] = [Vec::new(), Vec::new()];
    for rec in rdr.deserialize::<Row>() {
        let row = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !(row.weight.is_finite() && row.cholesterol.is_finite()) {
            return Err(Error::Dataset(format!("non-finite value in group '{}'", row.group)));
        }
        let idx = match labels.iter().position(|l| *l == row.group) {
            Some(i) => i,
            None if labels.len() < 2 => {
                labels.push(row.group.clone());
                labels.len() - 1
            }
            None => {
                return Err(Error::Dataset(format!(
                    "expected two groups, found a third: '{}' (after '{}', '{}')",
                    row.group, labels[0], labels[1]
                )))
            }
        };
        groups[idx].push(Pair::new(row.weight, row.cholesterol));
    }
    if labels.len() < 2 {
        return Err(Error::Dataset(format!("expected two groups, found {}", labels.len())));
    }
    let [g1, g2] = groups;
    if g1.len() != g2.len() {
        return Err(Error::UnequalGroups {
            first: labels[0].clone(),
            first_len: g1.len(),
            second: labels[1].clone(),
            second_len: g2.len(),
        });
    }
    let [l1, l2]: [String; 2] = labels.try_into().expect("two labels");
    Ok(GroupedDataset {
        labels: [l1, l2],
        group1: g1,
        group2: g2,
    })
}

impl GroupedDataset {
    /// Replaces every `1745.46` cholesterol reading with `145.46`; returns the count.
    pub fn clean(&mut self) -> usize {
        let mut n = 0;
        for p in self.group1.iter_mut().chain(self.group2.iter_mut()) {
            if p.y == RAW_OUTLIER {
                p.y = CLEANED_VALUE;
                n += 1;
            }
        }
        n
    }

    pub fn swapped(&self) -> Self {
        GroupedDataset {
            labels: [self.labels[1].clone(), self.labels[0].clone()],
            group1: self.group2.clone(),
            group2: self.group1.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub labels: [String; 2],
    pub theta_hat_1: Pair,
    pub theta_hat_2: Pair,
    pub cov_hat: CovarianceSpec,
    pub n: usize,
    /// always `"n-1"`: each group's covariance uses `n - 1`, then the two are averaged
    pub denominator: String,
}

fn mean_and_cov(g: &[Pair]) -> (Pair, [f64; 3]) {
    let n = g.len() as f64;
    let mx = g.iter().map(|p| p.x).sum::<f64>() / n;
    let my = g.iter().map(|p| p.y).sum::<f64>() / n;
    let mut s = [0.0; 3];
    for p in g {
        let (dx, dy) = (p.x - mx, p.y - my);
        s[0] += dx * dx;
        s[1] += dx * dy;
        s[2] += dy * dy;
    }
    (Pair::new(mx, my), s.map(|v| v / (n - 1.0)))
}

pub fn fit(data: &GroupedDataset) -> Result<FittedModel> {
    let (n1, n2) = (data.group1.len(), data.group2.len());
    if n1 != n2 {
        return Err(Error::UnequalGroups {
            first: data.labels[0].clone(),
            first_len: n1,
            second: data.labels[1].clone(),
            second_len: n2,
        });
    }
    if n1 < 2 {
        return Err(Error::Dataset(format!("each group needs at least 2 rows, got {n1}")));
    }
    let (m1, s1) = mean_and_cov(&data.group1);
    let (m2, s2) = mean_and_cov(&data.group2);
    let pooled = [0, 1, 2].map(|i| 0.5 * (s1[i] + s2[i]));
    Ok(FittedModel {
        labels: data.labels.clone(),
        theta_hat_1: m1,
        theta_hat_2: m2,
        cov_hat: CovarianceSpec::new(pooled[0], pooled[1], pooled[2])?,
        n: n1,
        denominator: "n-1".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub label: String,
    pub value: f64,
    /// set for improved estimators
    pub truncation: Option<Truncation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub a: LinexParams,
    pub c: f64,
    pub selected_label: String,
    pub summary: SelectionSummary,
    pub rows: Vec<EstimateRow>,
}

impl AnalysisReport {
    pub fn value(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.value)
    }
}

/// Every estimate for one observation pair, with the improved variant
/// that applies to `(a, rho)` after each base.
pub fn estimate_all(
    obs: &ObservationPair,
    a: LinexParams,
    c: f64,
    cov: &CovarianceSpec,
    prior: Option<&PriorSpec>,
) -> Result<(SelectionSummary, Vec<EstimateRow>)> {
    let s = select(obs);
    let mut rows = Vec::new();
    for base in [BaseEstimator::N1, BaseEstimator::N2, BaseEstimator::N3, BaseEstimator::N4 { c }] {
        let spec = EstimatorSpec::from(base);
        spec.validate()?;
        rows.push(EstimateRow {
            label: match base {
                BaseEstimator::N4 { .. } => "N4".into(),
                _ => base.to_string(),
            },
            value: estimators::evaluate(&spec, &s, a, cov)?,
            truncation: None,
        });
        if let Some(case) = applicable_case(base, a, cov.rho()) {
            let o = improve(base, &s, a, cov);
            rows.push(EstimateRow {
                label: case.label(),
                value: o.value,
                truncation: Some(o.truncated),
            });
        }
    }
    if let Some(p) = prior {
        rows.push(EstimateRow {
            label: "Bayes".into(),
            value: estimators::est_bayes(&s, p, a, cov)?,
            truncation: None,
        });
    }
    Ok((s, rows))
}

/// Treats the two fitted mean vectors as the observed pair.
pub fn analyze(model: &FittedModel, a: LinexParams, c: f64, prior: Option<&PriorSpec>) -> Result<AnalysisReport> {
    let obs = ObservationPair::new(model.theta_hat_1, model.theta_hat_2)?;
    let (summary, rows) = estimate_all(&obs, a, c, &model.cov_hat, prior)?;
    Ok(AnalysisReport {
        a,
        c,
        selected_label: model.labels[summary.selected as usize - 1].clone(),
        summary,
        rows,
    })
}

pub fn write_fit_text<W: Write>(m: &FittedModel, mut out: W) -> Result<()> {
    writeln!(out, "Estimated parameters (n = {} per group, pooled covariance with {} denominators)", m.n, m.denominator)?;
    writeln!(out, "{:<12} {:>12} {:>12}", "population", "mean x", "mean y")?;
    for (l, t) in m.labels.iter().zip([m.theta_hat_1, m.theta_hat_2]) {
        writeln!(out, "{l:<12} {:>12.4} {:>12.4}", t.x, t.y)?;
    }
    let c = &m.cov_hat;
    writeln!(out, "sigma_xx = {:.4}, sigma_xy = {:.4}, sigma_yy = {:.4}, rho = {:.4}", c.sigma_xx(), c.sigma_xy(), c.sigma_yy(), c.rho())?;
    Ok(())
}

pub fn write_fit_csv<W: Write>(m: &FittedModel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["parameter", "value"]).map_err(io)?;
    let c = &m.cov_hat;
    let rows = [
        ("theta1_x", m.theta_hat_1.x),
        ("theta1_y", m.theta_hat_1.y),
        ("theta2_x", m.theta_hat_2.x),
        ("theta2_y", m.theta_hat_2.y),
        ("sigma_xx", c.sigma_xx()),
        ("sigma_xy", c.sigma_xy()),
        ("sigma_yy", c.sigma_yy()),
        ("rho", c.rho()),
    ];
    for (k, v) in rows {
        w.write_record([k.to_string(), format!("{v:.6}")]).map_err(io)?;
    }
    w.write_record(["denominator", m.denominator.as_str()]).map_err(io)?;
    w.flush()?;
    Ok(())
}

fn truncation_str(t: Option<Truncation>) -> &'static str {
    match t {
        None => "",
        Some(Truncation::None) => "none",
        Some(Truncation::ClippedToPhiInf) => "clipped_to_phi_inf",
        Some(Truncation::ClippedToPhiSup) => "clipped_to_phi_sup",
    }
}

pub fn write_report_text<W: Write>(r: &AnalysisReport, mut out: W) -> Result<()> {
    writeln!(
        out,
        "Selected population {} ({}); a = {}, c = {}, T1 = {:.4}, T2 = {:.4}",
        r.summary.selected,
        r.selected_label,
        r.a.a(),
        fmt_g(r.c),
        r.summary.t1,
        r.summary.t2
    )?;
    write_rows_text(&r.rows, &mut out)
}

pub fn write_rows_text<W: Write>(rows: &[EstimateRow], mut out: W) -> Result<()> {
    writeln!(out, "{:<10} {:>14}  truncation", "estimator", "estimate")?;
    for row in rows {
        writeln!(out, "{:<10} {:>14.4}  {}", row.label, row.value, truncation_str(row.truncation))?;
    }
    Ok(())
}

pub fn write_rows_csv<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["estimator", "estimate", "truncation"]).map_err(io)?;
    for row in rows {
        w.write_record([row.label.clone(), format!("{:.6}", row.value), truncation_str(row.truncation).to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_loads_verbatim() {
        let d = poultry_fixture();
        assert_eq!(d.labels, ["organic".to_string(), "inorganic".to_string()]);
        assert_eq!((d.group1.len(), d.group2.len()), (48, 48));
        assert_eq!(d.group1.iter().filter(|p| p.y == RAW_OUTLIER).count(), 1);
    }

    #[test]
    fn cleaned_fit_reproduces_estimated_parameters() {
        let mut d = poultry_fixture();
        assert_eq!(d.clean(), 1);
        let m = fit(&d).unwrap();
        assert!((m.theta_hat_1.x - 59.0997).abs() < 1e-3);
        assert!((m.theta_hat_1.y - 131.4569).abs() < 1e-3);
        assert!((m.theta_hat_2.x - 58.3516).abs() < 1e-3);
        assert!((m.theta_hat_2.y - 195.7275).abs() < 1e-3);
        assert!((m.cov_hat.sigma_xx() - 8.1645).abs() < 1e-3);
        assert!((m.cov_hat.sigma_xy() - 40.0655).abs() < 1e-3);
        assert!((m.cov_hat.sigma_yy() - 952.9425).abs() < 1e-3);
    }

    #[test]
    fn raw_fit_is_off_by_the_outlier() {
        let m = fit(&poultry_fixture()).unwrap();
        assert!((m.theta_hat_1.y - 131.4569 - 1600.0 / 48.0).abs() < 1e-3);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(read_dataset("".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let bad = "group,weight,cholesterol\na,1,2\na,x,3\n";
        assert!(matches!(read_dataset(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let uneven = "group,weight,cholesterol\na,1,2\na,2,3\nb,1,1\n";
        match read_dataset(uneven.as_bytes()) {
            Err(Error::UnequalGroups { first_len: 2, second_len: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let three = "group,weight,cholesterol\na,1,2\nb,2,3\nc,1,1\n";
        assert!(matches!(read_dataset(three.as_bytes()), Err(Error::Dataset(_))));
        let flat = "group,weight,cholesterol\na,1,2\na,1,3\nb,1,1\nb,1,5\n";
        assert!(fit(&read_dataset(flat.as_bytes()).unwrap()).is_err());
    }

    #[test]
    fn identical_groups_pool_to_either() {
        let g = vec![Pair::new(1.0, 2.0), Pair::new(2.0, 1.0), Pair::new(4.0, 4.5)];
        let d = GroupedDataset {
            labels: ["p".into(), "q".into()],
            group1: g.clone(),
            group2: g.clone(),
        };
        let (_, s) = mean_and_cov(&g);
        let m = fit(&d).unwrap();
        assert!((m.cov_hat.sigma_xx() - s[0]).abs() < 1e-15);
        assert!((m.cov_hat.sigma_xy() - s[1]).abs() < 1e-15);
        assert!((m.cov_hat.sigma_yy() - s[2]).abs() < 1e-15);
    }

    #[test]
    fn swap_is_stable() {
        let mut d = poultry_fixture();
        d.clean();
        let (m, s) = (fit(&d).unwrap(), fit(&d.swapped()).unwrap());
        assert_eq!(m.theta_hat_1, s.theta_hat_2);
        assert!((m.cov_hat.sigma_xy() - s.cov_hat.sigma_xy()).abs() < 1e-12);
    }

    #[test]
    fn report_tables() {
        let mut d = poultry_fixture();
        d.clean();
        let m = fit(&d).unwrap();
        let r = analyze(&m, LinexParams::new(1.0).unwrap(), 1.0, None).unwrap();
        assert_eq!(r.selected_label, "organic");
        let labels: Vec<&str> = r.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["N1", "N1^I1", "N2", "N2^I2", "N3", "N3^I1", "N4", "N4^I1"]);
        let r2 = analyze(&m, LinexParams::new(-1.0).unwrap(), 1.0, None).unwrap();
        let labels: Vec<&str> = r2.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["N1", "N1^I3", "N2", "N3", "N3^I2", "N4", "N4^I3"]);
        // N2 values straddle the selected Y symmetrically
        let y = r.summary.y_sel;
        assert!((r.value("N2").unwrap() + r2.value("N2").unwrap() - 2.0 * y).abs() < 1e-9);
    }
}
