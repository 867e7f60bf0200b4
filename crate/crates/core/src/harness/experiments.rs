//! Named experiment suites with their default parameters and verdicts.
//!
//! Each suite produces one or more [`Table`]s (CSV rows plus the same records
//! as JSON) and an overall pass flag. Everything is a pure function of the
//! [`SuiteParams`], so identical parameters give byte-identical files.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::lemmas::{
    failure_trend_nonincreasing, fooling_cases, random_quadratics, test_bounds, test_decomposition,
    test_indicator_poly_fooling, test_one_step, BoundRow, DecompositionRow, FoolingReport,
};
use super::report::{discrepancy_report, DiscrepancyReport, Tolerance};
use super::sampler::GeneratorSampler;
use super::suite::standard_suite;
use crate::error::{invalid, Error, Result};
use crate::generator::GeneratorConfig;
use crate::rng::derive_key;

/// Failure-fraction bound for the decomposition suite at the largest `r`.
pub const DECOMPOSITION_BOUND: f64 = 0.05;
pub const DECOMPOSITION_RS: [usize; 3] = [5, 10, 20];
pub const ANTICONCENTRATION_EPS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
pub const CONCENTRATION_N: [f64; 3] = [2.0, 4.0, 6.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Standard,
    Onestep,
    Decomposition,
    Fooling,
    Bounds,
}

impl SuiteName {
    pub const ALL: [SuiteName; 5] = [
        SuiteName::Standard,
        SuiteName::Onestep,
        SuiteName::Decomposition,
        SuiteName::Fooling,
        SuiteName::Bounds,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Standard => "standard",
            SuiteName::Onestep => "onestep",
            SuiteName::Decomposition => "decomposition",
            SuiteName::Fooling => "fooling",
            SuiteName::Bounds => "bounds",
        }
    }
}

impl std::str::FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown suite {s:?} (expected standard, onestep, decomposition, fooling or bounds)")))
    }
}

/// Suite-specific knobs; the generator configuration is passed separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub trials: u64,
    pub seed: u64,
    /// `onestep`: the `δ` sweep.
    pub deltas: Vec<f64>,
    /// `decomposition`: dimension, `δ`, `κ`, `r` values and polynomial count.
    /// `trials` is the total number of restrictions, split evenly.
    pub decomposition_n: usize,
    pub decomposition_delta: f64,
    pub kappa: f64,
    pub rs: Vec<usize>,
    pub decomposition_polys: usize,
    pub decomposition_bound: f64,
    /// `bounds`: dimension and number of random quadratics.
    pub bounds_n: usize,
    pub bounds_polys: usize,
    /// `fooling`: the locality `r` of the indicator.
    pub fooling_r: usize,
}

impl SuiteParams {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            deltas: vec![0.4, 0.2, 0.1],
            decomposition_n: 64,
            decomposition_delta: 0.1,
            kappa: 0.25,
            rs: DECOMPOSITION_RS.to_vec(),
            decomposition_polys: 10,
            decomposition_bound: DECOMPOSITION_BOUND,
            bounds_n: 8,
            bounds_polys: 20,
            fooling_r: 2,
        }
    }
}

/// One output table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: String,
    pub rows: Vec<String>,
    pub records: Value,
    pub pass: bool,
}

impl Table {
    fn new<T: Serialize>(name: impl Into<String>, columns: &str, items: &[T], row: impl Fn(&T) -> String, pass: bool) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_string(),
            rows: items.iter().map(row).collect(),
            records: serde_json::to_value(items).expect("records serialize"),
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub suite: SuiteName,
    pub tables: Vec<Table>,
    pub pass: bool,
}

impl SuiteRun {
    fn new(suite: SuiteName, tables: Vec<Table>) -> Self {
        let pass = tables.iter().all(|t| t.pass);
        Self { suite, tables, pass }
    }
}

fn discrepancy_table(name: String, rows: &[DiscrepancyReport]) -> Table {
    let pass = rows.iter().all(|r| r.pass);
    Table::new(name, DiscrepancyReport::CSV_HEADER, rows, DiscrepancyReport::csv_row, pass)
}

/// Runs `suite`. `config` supplies `n`, and for `onestep` the `ℓ, δ₁, δ₂, M`
/// that each swept `δ` is combined with.
pub fn run_suite(suite: SuiteName, config: &GeneratorConfig, params: &SuiteParams) -> Result<SuiteRun> {
    let tables = match suite {
        SuiteName::Standard => {
            let cases = standard_suite(config.n)?;
            let rows = discrepancy_report(config, &cases, params.trials, params.seed)?;
            vec![discrepancy_table("discrepancy".into(), &rows)]
        }
        SuiteName::Onestep => {
            if params.deltas.is_empty() {
                return Err(invalid("onestep needs at least one delta"));
            }
            let cases = standard_suite(config.n)?;
            params
                .deltas
                .iter()
                .map(|&delta| {
                    let cfg = GeneratorConfig::empirical_with_c1(
                        config.n,
                        delta,
                        config.ell,
                        config.delta1,
                        config.delta2,
                        config.memory_bits,
                        config.c1,
                    )?;
                    let rows = test_one_step(&cases, &cfg, params.trials, params.seed)?;
                    Ok(discrepancy_table(format!("delta_{delta}"), &rows))
                })
                .collect::<Result<Vec<_>>>()?
        }
        SuiteName::Decomposition => decomposition_tables(params)?,
        SuiteName::Fooling => {
            let sampler = GeneratorSampler::family(config, params.seed, 0);
            let rows = fooling_cases(config.n)?
                .iter()
                .map(|case| {
                    test_indicator_poly_fooling(case, params.fooling_r, &sampler, params.trials, params.seed, Tolerance::STANDARD)
                })
                .collect::<Result<Vec<FoolingReport>>>()?;
            let pass = rows.iter().all(|r| r.pass);
            vec![Table::new("fooling", FoolingReport::CSV_HEADER, &rows, FoolingReport::csv_row, pass)]
        }
        SuiteName::Bounds => bounds_tables(params)?,
    };
    Ok(SuiteRun::new(suite, tables))
}

/// A bound row tagged with the polynomial it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexedRow<T> {
    pub poly: usize,
    #[serde(flatten)]
    pub row: T,
}

fn bounds_tables(params: &SuiteParams) -> Result<Vec<Table>> {
    let polys = random_quadratics(params.bounds_n, params.bounds_polys, params.seed);
    let mut anti = Vec::new();
    let mut conc = Vec::new();
    for (i, p) in polys.iter().enumerate() {
        let (a, c) = test_bounds(p, &ANTICONCENTRATION_EPS, &CONCENTRATION_N, params.trials, derive_key(params.seed, 100 + i as u64))?;
        anti.extend(a.into_iter().map(|row| IndexedRow { poly: i, row }));
        conc.extend(c.into_iter().map(|row| IndexedRow { poly: i, row }));
    }
    let columns = format!("poly,{}", BoundRow::CSV_HEADER);
    let row = |r: &IndexedRow<BoundRow>| format!("{},{}", r.poly, r.row.csv_row());
    Ok(vec![
        Table::new("anticoncentration", &columns, &anti, row, anti.iter().all(|r| r.row.pass)),
        Table::new("concentration", &columns, &conc, row, conc.iter().all(|r| r.row.pass)),
    ])
}

fn decomposition_tables(params: &SuiteParams) -> Result<Vec<Table>> {
    if params.decomposition_polys == 0 {
        return Err(invalid("decomposition needs at least one polynomial"));
    }
    let per_poly = params.trials / params.decomposition_polys as u64;
    if per_poly == 0 {
        return Err(invalid("fewer restrictions than polynomials"));
    }
    let polys = random_quadratics(params.decomposition_n, params.decomposition_polys, params.seed);
    let mut per = Vec::new();
    for (i, p) in polys.iter().enumerate() {
        let rows = test_decomposition(
            p,
            params.decomposition_delta,
            &params.rs,
            params.kappa,
            per_poly,
            derive_key(params.seed, 200 + i as u64),
        )?;
        per.extend(rows.into_iter().map(|row| IndexedRow { poly: i, row }));
    }
    let total = aggregate_decomposition(&per, &params.rs);
    let worst = params.rs.iter().max().copied().unwrap_or(0);
    let bound_ok = total.iter().filter(|r| r.r == worst).all(|r| r.fraction <= params.decomposition_bound);
    let trend_ok = failure_trend_nonincreasing(&total);
    let columns = format!("poly,{}", DecompositionRow::CSV_HEADER);
    Ok(vec![
        Table::new(
            "per_polynomial",
            &columns,
            &per,
            |r| format!("{},{}", r.poly, r.row.csv_row()),
            true,
        ),
        Table::new(
            "aggregate",
            DecompositionRow::CSV_HEADER,
            &total,
            DecompositionRow::csv_row,
            bound_ok && trend_ok,
        ),
    ])
}

/// Pools the per-polynomial failure counts for each `r`.
fn aggregate_decomposition(rows: &[IndexedRow<DecompositionRow>], rs: &[usize]) -> Vec<DecompositionRow> {
    rs.iter()
        .filter_map(|&r| {
            let mine: Vec<&DecompositionRow> = rows.iter().map(|x| &x.row).filter(|x| x.r == r).collect();
            let first = *mine.first()?;
            let trials: u64 = mine.iter().map(|x| x.trials).sum();
            let failures: u64 = mine.iter().map(|x| x.failures).sum();
            let fraction = failures as f64 / trials as f64;
            Some(DecompositionRow {
                trials,
                failures,
                fraction,
                stderr: super::stats::binomial_stderr(fraction, trials),
                max_ratio: mine.iter().map(|x| x.max_ratio).fold(0.0, f64::max),
                ..*first
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> GeneratorConfig {
        GeneratorConfig::empirical(4, 0.3, 3, 1e-3, 1e-3, 4).unwrap()
    }

    #[test]
    fn suite_names_round_trip() {
        for s in SuiteName::ALL {
            assert_eq!(s.as_str().parse::<SuiteName>().unwrap(), s);
        }
        assert!("nope".parse::<SuiteName>().is_err());
    }

    #[test]
    fn every_suite_runs_small_and_deterministically() {
        let cfg = small_config();
        let mut params = SuiteParams::new(2000, 11);
        params.decomposition_n = 6;
        params.decomposition_polys = 2;
        params.bounds_polys = 2;
        for s in SuiteName::ALL {
            let a = run_suite(s, &cfg, &params).unwrap();
            let b = run_suite(s, &cfg, &params).unwrap();
            assert_eq!(a, b, "{}", s.as_str());
            assert!(!a.tables.is_empty());
            for t in &a.tables {
                assert_eq!(t.rows.len(), t.records.as_array().unwrap().len());
                let width = t.columns.split(',').count();
                assert!(t.rows.iter().all(|r| r.split(',').count() == width), "{}", t.name);
            }
        }
    }

    #[test]
    fn decomposition_aggregate_pools_counts() {
        let cfg = small_config();
        let mut params = SuiteParams::new(400, 3);
        params.decomposition_n = 5;
        params.decomposition_polys = 4;
        let run = run_suite(SuiteName::Decomposition, &cfg, &params).unwrap();
        let agg = run.tables[1].records.as_array().unwrap();
        assert_eq!(agg.len(), 3);
        for a in agg {
            assert_eq!(a["trials"], 400);
        }
    }
}
