//! The association problem: limits, the binary association matrix and an
//! independent feasibility audit of any candidate matrix.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, LinkMetrics};
use crate::error::{invalid, io_err, Error, Result};
use crate::matrix::Matrix;

/// Relative slack allowed before a constraint counts as violated.
pub const FEASIBILITY_RTOL: f64 = 1e-6;

/// Per-NFP and network-wide limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLimits {
    /// Backhaul rate R, bit/s.
    pub backhaul_rate: f64,
    /// B_j, Hz.
    pub nfp_bandwidth: Vec<f64>,
    /// N_l_j.
    pub nfp_max_links: Vec<usize>,
    /// Linear SINR threshold.
    pub sinr_min: f64,
}

impl NetworkLimits {
    pub fn uniform(n_d: usize, backhaul_rate: f64, bandwidth: f64, max_links: usize, sinr_min: f64) -> Self {
        Self {
            backhaul_rate,
            nfp_bandwidth: vec![bandwidth; n_d],
            nfp_max_links: vec![max_links; n_d],
            sinr_min,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.backhaul_rate.is_nan() || self.backhaul_rate <= 0.0 {
            return Err(invalid("backhaul_rate", "must be > 0"));
        }
        if self.nfp_bandwidth.iter().any(|b| b.is_nan() || *b <= 0.0) {
            return Err(invalid("nfp_bandwidth", "must be > 0"));
        }
        if self.nfp_max_links.contains(&0) {
            return Err(invalid("nfp_max_links", "must be > 0"));
        }
        if !(self.sinr_min > 0.0 && self.sinr_min.is_finite()) {
            return Err(invalid("sinr_min", "must be > 0"));
        }
        if self.nfp_bandwidth.len() != self.nfp_max_links.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} bandwidth limits, {} link limits",
                self.nfp_bandwidth.len(),
                self.nfp_max_links.len()
            )));
        }
        Ok(())
    }
}

/// Limits shared by every NFP, as written in configuration files. The SINR
/// threshold is given in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetricLimits {
    /// bit/s
    pub backhaul_rate: f64,
    /// Hz
    pub nfp_bandwidth: f64,
    pub nfp_max_links: usize,
    pub sinr_min_db: f64,
}

impl Default for SymmetricLimits {
    fn default() -> Self {
        Self {
            backhaul_rate: 2.9e9,
            nfp_bandwidth: 1e9,
            nfp_max_links: 16,
            sinr_min_db: -5.0,
        }
    }
}

impl SymmetricLimits {
    pub fn sinr_min(&self) -> f64 {
        db_to_linear(self.sinr_min_db)
    }

    pub fn for_nfps(&self, n_d: usize) -> NetworkLimits {
        NetworkLimits::uniform(
            n_d,
            self.backhaul_rate,
            self.nfp_bandwidth,
            self.nfp_max_links,
            self.sinr_min(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sinr_min_db.is_finite() {
            return Err(invalid("sinr_min_db", "must be finite"));
        }
        self.for_nfps(1).validate()
    }
}

/// Link metrics paired with the limits they are solved under.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationInstance {
    pub metrics: LinkMetrics,
    pub limits: NetworkLimits,
}

impl AssociationInstance {
    pub fn new(metrics: LinkMetrics, limits: NetworkLimits) -> Result<Self> {
        limits.validate()?;
        if limits.nfp_bandwidth.len() != metrics.n_d {
            return Err(Error::DimensionMismatch(format!(
                "limits cover {} NFPs, metrics {}",
                limits.nfp_bandwidth.len(),
                metrics.n_d
            )));
        }
        Ok(Self { metrics, limits })
    }

    pub fn n_sc(&self) -> usize {
        self.metrics.n_sc
    }

    pub fn n_d(&self) -> usize {
        self.metrics.n_d
    }
}

/// Binary small-cell × NFP association matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationMatrix {
    cells: Matrix<bool>,
}

impl AssociationMatrix {
    pub fn zeros(n_sc: usize, n_d: usize) -> Self {
        Self {
            cells: Matrix::filled(n_sc, n_d, false),
        }
    }

    /// Builds a matrix from a per-cell serving NFP.
    pub fn from_assignment(n_d: usize, assignment: &[Option<usize>]) -> Self {
        let mut a = Self::zeros(assignment.len(), n_d);
        for (i, j) in assignment.iter().enumerate() {
            if let Some(j) = *j {
                a.set(i, j, true);
            }
        }
        a
    }

    pub fn n_sc(&self) -> usize {
        self.cells.rows()
    }

    pub fn n_d(&self) -> usize {
        self.cells.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.cells[(i, j)] = value;
    }

    /// First NFP serving cell `i`, if any.
    pub fn serving(&self, i: usize) -> Option<usize> {
        self.cells.row(i).iter().position(|&v| v)
    }

    pub fn assignment(&self) -> Vec<Option<usize>> {
        (0..self.n_sc()).map(|i| self.serving(i)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["sc".to_string()];
        header.extend((0..self.n_d()).map(|j| format!("nfp{j}")));
        wtr.write_record(&header)?;
        for i in 0..self.n_sc() {
            let mut row = vec![i.to_string()];
            row.extend(self.cells.row(i).iter().map(|&v| if v { "1" } else { "0" }.to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let n_d = rdr.headers()?.len().saturating_sub(1);
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != n_d + 1 {
                return Err(Error::MalformedCsv(format!("row {k} has {} fields", rec.len())));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|f| match f.trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::MalformedCsv(format!("row {k}: entry `{other}` not 0/1"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self {
            cells: Matrix::from_fn(rows.len(), n_d, |i, j| rows[i][j]),
        })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Number of associated pairs, i.e. served small cells when rows sum to ≤ 1.
pub fn objective(a: &AssociationMatrix) -> usize {
    a.cells.iter().filter(|&&v| v).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Rate,
    Bandwidth,
    Sinr,
    Links,
    SingleAssoc,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Rate => "rate",
            ConstraintKind::Bandwidth => "bandwidth",
            ConstraintKind::Sinr => "sinr",
            ConstraintKind::Links => "links",
            ConstraintKind::SingleAssoc => "single-assoc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub sc: Option<usize>,
    pub nfp: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violated: Vec<Violation>,
    /// R − Σ r_ij A_ij, bit/s.
    pub rate_slack: f64,
    /// B_j − Σ_i b_ij A_ij, Hz.
    pub bandwidth_slack: Vec<f64>,
    /// N_l_j − Σ_i A_ij.
    pub link_slack: Vec<i64>,
}

fn exceeds(used: f64, limit: f64) -> bool {
    used - limit > FEASIBILITY_RTOL * limit.abs()
}

/// Audits `a` against every constraint of the problem, recomputing all sums
/// from scratch.
pub fn check_feasibility(inst: &AssociationInstance, a: &AssociationMatrix) -> Result<FeasibilityReport> {
    let m = &inst.metrics;
    let lim = &inst.limits;
    if a.n_sc() != m.n_sc || a.n_d() != m.n_d {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, instance is {}x{}",
            a.n_sc(),
            a.n_d(),
            m.n_sc,
            m.n_d
        )));
    }

    let mut violated = Vec::new();
    let mut rate_used = 0.0;
    let mut bw_used = vec![0.0; m.n_d];
    let mut links_used = vec![0usize; m.n_d];

    for i in 0..m.n_sc {
        let mut row_sum = 0;
        for j in 0..m.n_d {
            if !a.get(i, j) {
                continue;
            }
            row_sum += 1;
            rate_used += m.rate[(i, j)];
            bw_used[j] += m.bandwidth[(i, j)];
            links_used[j] += 1;
            if m.sinr[(i, j)] < lim.sinr_min * (1.0 - FEASIBILITY_RTOL) {
                violated.push(Violation {
                    kind: ConstraintKind::Sinr,
                    sc: Some(i),
                    nfp: Some(j),
                });
            }
        }
        if row_sum > 1 {
            violated.push(Violation {
                kind: ConstraintKind::SingleAssoc,
                sc: Some(i),
                nfp: None,
            });
        }
    }

    if exceeds(rate_used, lim.backhaul_rate) {
        violated.push(Violation {
            kind: ConstraintKind::Rate,
            sc: None,
            nfp: None,
        });
    }
    for j in 0..m.n_d {
        if exceeds(bw_used[j], lim.nfp_bandwidth[j]) {
            violated.push(Violation {
                kind: ConstraintKind::Bandwidth,
                sc: None,
                nfp: Some(j),
            });
        }
        if links_used[j] > lim.nfp_max_links[j] {
            violated.push(Violation {
                kind: ConstraintKind::Links,
                sc: None,
                nfp: Some(j),
            });
        }
    }

    Ok(FeasibilityReport {
        feasible: violated.is_empty(),
        violated,
        rate_slack: lim.backhaul_rate - rate_used,
        bandwidth_slack: (0..m.n_d).map(|j| lim.nfp_bandwidth[j] - bw_used[j]).collect(),
        link_slack: (0..m.n_d)
            .map(|j| lim.nfp_max_links[j] as i64 - links_used[j] as i64)
            .collect(),
    })
}

/// Metrics-level instance file: per-cell rates and a linear SINR matrix.
/// Lets fixed instances be solved without going through the channel model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    /// bit/s, one per small cell.
    pub sc_rates: Vec<f64>,
    /// Linear SINR, one row per small cell, one column per NFP.
    pub sinr: Vec<Vec<f64>>,
}

impl InstanceFile {
    pub fn from_metrics(m: &LinkMetrics) -> Self {
        Self {
            sc_rates: (0..m.n_sc)
                .map(|i| if m.n_d > 0 { m.rate[(i, 0)] } else { 0.0 })
                .collect(),
            sinr: (0..m.n_sc).map(|i| m.sinr.row(i).to_vec()).collect(),
        }
    }

    pub fn n_d(&self) -> usize {
        self.sinr.first().map_or(0, Vec::len)
    }

    pub fn to_metrics(&self, sinr_min: f64) -> Result<LinkMetrics> {
        let n_d = self.n_d();
        if let Some(k) = self.sinr.iter().position(|row| row.len() != n_d) {
            return Err(Error::DimensionMismatch(format!("sinr row {k} is ragged")));
        }
        let sinr = Matrix::from_fn(self.sinr.len(), n_d, |i, j| self.sinr[i][j]);
        LinkMetrics::from_sc_rates(&self.sc_rates, sinr, sinr_min)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("instance serializes");
        std::fs::write(path, text + "\n").map_err(io_err(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(rates: &[f64], sinr: f64, n_d: usize, limits: NetworkLimits) -> AssociationInstance {
        let m = LinkMetrics::from_sc_rates(rates, Matrix::filled(rates.len(), n_d, sinr), limits.sinr_min).unwrap();
        AssociationInstance::new(m, limits).unwrap()
    }

    #[test]
    fn objective_counts_ones() {
        assert_eq!(objective(&AssociationMatrix::zeros(4, 2)), 0);
        let mut a = AssociationMatrix::zeros(3, 3);
        for k in 0..3 {
            a.set(k, k, true);
        }
        assert_eq!(objective(&a), 3);
    }

    #[test]
    fn empty_association_has_full_slack() {
        let lim = NetworkLimits::uniform(2, 1e9, 5e8, 4, 0.5);
        let inst = instance(&[1e8, 2e8], 3.0, 2, lim);
        let rep = check_feasibility(&inst, &AssociationMatrix::zeros(2, 2)).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.rate_slack, 1e9);
        assert_eq!(rep.bandwidth_slack, vec![5e8, 5e8]);
        assert_eq!(rep.link_slack, vec![4, 4]);
    }

    #[test]
    fn limits_are_inclusive() {
        // SINR = 1 gives η = 1, so b = r.
        let lim = NetworkLimits::uniform(1, 3e7, 3e7, 1, 1.0);
        let inst = instance(&[3e7], 1.0, 1, lim);
        let mut a = AssociationMatrix::zeros(1, 1);
        a.set(0, 0, true);
        let rep = check_feasibility(&inst, &a).unwrap();
        assert!(rep.feasible, "{:?}", rep.violated);
        assert_eq!(rep.rate_slack, 0.0);
        assert_eq!(rep.link_slack, vec![0]);
    }

    #[test]
    fn link_limit_violation_names_the_nfp() {
        let lim = NetworkLimits::uniform(2, 1e12, 1e12, 1, 0.5);
        let inst = instance(&[1e6, 1e6], 3.0, 2, lim);
        let mut a = AssociationMatrix::zeros(2, 2);
        a.set(0, 1, true);
        a.set(1, 1, true);
        let rep = check_feasibility(&inst, &a).unwrap();
        assert!(!rep.feasible);
        assert_eq!(
            rep.violated,
            vec![Violation {
                kind: ConstraintKind::Links,
                sc: None,
                nfp: Some(1)
            }]
        );
    }

    #[test]
    fn detects_every_constraint_kind() {
        let lim = NetworkLimits::uniform(2, 1e6, 1e6, 5, 2.0);
        let inst = instance(&[1e6, 1e6], 1.0, 2, lim);
        let mut a = AssociationMatrix::zeros(2, 2);
        a.set(0, 0, true);
        a.set(0, 1, true);
        a.set(1, 0, true);
        let rep = check_feasibility(&inst, &a).unwrap();
        let kinds: Vec<_> = rep.violated.iter().map(|v| v.kind).collect();
        for k in [
            ConstraintKind::Rate,
            ConstraintKind::Bandwidth,
            ConstraintKind::Sinr,
            ConstraintKind::SingleAssoc,
        ] {
            assert!(kinds.contains(&k), "missing {k}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let lim = NetworkLimits::uniform(2, 1e9, 1e9, 2, 0.5);
        let inst = instance(&[1e6], 3.0, 2, lim);
        assert!(matches!(
            check_feasibility(&inst, &AssociationMatrix::zeros(1, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let a = AssociationMatrix::from_assignment(3, &[Some(2), None]);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "sc,nfp0,nfp1,nfp2\n0,0,0,1\n1,0,0,0\n"
        );
        assert_eq!(AssociationMatrix::read_csv(buf.as_slice()).unwrap(), a);
    }
}
