//! Closed-form cost sweeps over (hit ratio, fpr, fnr) grids. No simulation:
//! costs come straight from the homogeneous model, so sweeps are instant.

use indicache::beliefs::{is_sufficiently_accurate, IndicatorAccuracy};
use indicache::homo::{expected_cost, pif_cost, HomoPolicy};
use indicache::{Error, Result};

/// Grid specification for the closed-form sweep.
#[derive(Debug, Clone)]
pub struct AnalysisGrid {
    pub hit_ratios: Vec<f64>,
    pub fprs: Vec<f64>,
    pub fnrs: Vec<f64>,
    pub num_caches: u32,
    pub miss_penalty: f64,
}

impl AnalysisGrid {
    /// The reference grid: h = 0.5, fpr and fnr from 0 to 0.045 in steps of
    /// 0.005, three caches, miss penalty 100.
    pub fn reference() -> Self {
        let steps: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.005).collect();
        Self {
            hit_ratios: vec![0.5],
            fprs: steps.clone(),
            fnrs: steps,
            num_caches: 3,
            miss_penalty: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hit_ratios.is_empty() || self.fprs.is_empty() || self.fnrs.is_empty() {
            return Err(Error::InvalidArgument(
                "analysis grid axes must be nonempty".into(),
            ));
        }
        for (name, values) in [
            ("hit_ratio", &self.hit_ratios),
            ("fpr", &self.fprs),
            ("fnr", &self.fnrs),
        ] {
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidArgument(format!(
                    "{name}: values must lie in [0,1]"
                )));
            }
        }
        if self.num_caches == 0 {
            return Err(Error::InvalidArgument("num_caches must be >= 1".into()));
        }
        if !(self.miss_penalty >= 1.0) {
            return Err(Error::InvalidArgument("miss_penalty must be >= 1".into()));
        }
        Ok(())
    }
}

/// One grid point: absolute and normalized expected costs for both
/// homogeneous policies alongside the perfect-indicator floor.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub h: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub num_caches: u32,
    pub miss_penalty: f64,
    pub cost_fna: f64,
    pub cost_fno: f64,
    pub cost_pif: f64,
    pub normalized_fna: f64,
    pub normalized_fno: f64,
    pub sufficiently_accurate: bool,
}

/// Evaluates the closed forms over the grid, fnr-major then fpr then h, so
/// output order is stable.
pub fn analysis_rows(grid: &AnalysisGrid) -> Result<Vec<AnalysisRow>> {
    grid.validate()?;
    let mut rows = Vec::with_capacity(grid.hit_ratios.len() * grid.fprs.len() * grid.fnrs.len());
    for &h in &grid.hit_ratios {
        for &fnr in &grid.fnrs {
            for &fpr in &grid.fprs {
                let acc = IndicatorAccuracy::new(fpr, fnr)?;
                let pif = pif_cost(h, grid.num_caches, grid.miss_penalty);
                let fna = expected_cost(
                    HomoPolicy::Aware,
                    h,
                    acc,
                    grid.num_caches,
                    grid.miss_penalty,
                );
                let fno = expected_cost(
                    HomoPolicy::Oblivious,
                    h,
                    acc,
                    grid.num_caches,
                    grid.miss_penalty,
                );
                rows.push(AnalysisRow {
                    h,
                    fpr,
                    fnr,
                    num_caches: grid.num_caches,
                    miss_penalty: grid.miss_penalty,
                    cost_fna: fna,
                    cost_fno: fno,
                    cost_pif: pif,
                    normalized_fna: fna / pif,
                    normalized_fno: fno / pif,
                    sufficiently_accurate: is_sufficiently_accurate(acc),
                });
            }
        }
    }
    Ok(rows)
}

pub const ANALYSIS_HEADER: &str =
    "h,fpr,fnr,num_caches,miss_penalty,cost_fna,cost_fno,cost_pif,normalized_fna,normalized_fno,sufficiently_accurate";

/// Renders the grid as CSV with fixed 6-decimal numeric formatting.
pub fn emit_analysis(grid: &AnalysisGrid) -> Result<String> {
    let rows = analysis_rows(grid)?;
    let mut out = String::with_capacity(rows.len() * 96 + 128);
    out.push_str(ANALYSIS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            r.h,
            r.fpr,
            r.fnr,
            r.num_caches,
            r.miss_penalty,
            r.cost_fna,
            r.cost_fno,
            r.cost_pif,
            r.normalized_fna,
            r.normalized_fno,
            u8::from(r.sufficiently_accurate),
        ));
    }
    Ok(out)
}
