//! Experiment harness: seeded scenario sweeps comparing two solution
//! methods, with per-instance cost components, (B-A)/A ratios, phase
//! timings, transfer counts, and CSV reports.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::eval::{plan_cost, CostBreakdown};
use crate::heuristic::{phase1_construct, phase2_improve};
use crate::instance::{generate_instance, GenerateConfig, Instance, Weights};
use crate::oracle::{exact_pdp, exact_pdpset, OracleLimits};
use crate::plan::Plan;

/// A solution method the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Construction phase only (no transfers).
    HeuristicPdp,
    /// Both heuristic phases.
    HeuristicPdpset,
    /// Exhaustive transfer-free optimum.
    OraclePdp,
    /// Exhaustive optimum with one pairwise transfer.
    OraclePdpset,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::HeuristicPdp => "heuristic-pdp",
            Method::HeuristicPdpset => "heuristic-pdpset",
            Method::OraclePdp => "oracle-pdp",
            Method::OraclePdpset => "oracle-pdpset",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "heuristic-pdp" => Ok(Method::HeuristicPdp),
            "heuristic-pdpset" => Ok(Method::HeuristicPdpset),
            "oracle-pdp" => Ok(Method::OraclePdp),
            "oracle-pdpset" => Ok(Method::OraclePdpset),
            other => Err(format!(
                "unknown method `{other}`; expected heuristic-pdp, heuristic-pdpset, oracle-pdp, or oracle-pdpset"
            )),
        }
    }
}

/// A seeded sweep: one instance per (request count, seed) combination.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub rows: u32,
    pub cols: u32,
    pub vehicles: u32,
    /// One sub-scenario per entry.
    pub requests: Vec<u32>,
    pub seeds: Vec<u64>,
    pub capacity: u32,
    pub weights: Weights,
    pub d_max: f64,
    pub t_range: f64,
    pub method_a: Method,
    pub method_b: Option<Method>,
    /// Run instances on the rayon pool; rows stay ordered by instance id.
    pub parallel: bool,
    pub time_limit: Option<Duration>,
}

/// Result of one method on one instance.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub cost: CostBreakdown,
    pub seconds: f64,
    pub phase1_seconds: Option<f64>,
    pub phase2_seconds: Option<f64>,
    /// Accepted transfer meetings and the vehicles involved in them.
    pub transfers: u32,
    pub vehicles_involved: u32,
    pub plan: Plan,
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub instance_id: u32,
    pub seed: u64,
    pub vehicles: u32,
    pub requests: u32,
    pub a: Option<MethodOutcome>,
    pub b: Option<MethodOutcome>,
    /// `(cost_b - cost_a) / cost_a`.
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub grid: (u32, u32),
    pub method_a: Method,
    pub method_b: Option<Method>,
    pub rows: Vec<ReportRow>,
}

/// Mean and population standard deviation (N divisor).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn round_ms(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

fn count_transfers(plan: &Plan) -> (u32, u32) {
    let mut meetings = 0u32;
    let mut involved = 0u32;
    for route in &plan.routes {
        let t = route.iter().filter(|e| e.is_transfer()).count() as u32;
        meetings += t;
        if t > 0 {
            involved += 1;
        }
    }
    // each meeting appears as a mirrored event on both routes
    (meetings / 2, involved)
}

fn run_method(
    inst: &Instance,
    method: Method,
    time_limit: Option<Duration>,
) -> Result<MethodOutcome, String> {
    match method {
        Method::HeuristicPdp => {
            let t0 = Instant::now();
            let plan = phase1_construct(inst).map_err(|e| e.to_string())?;
            let dt = round_ms(t0.elapsed().as_secs_f64());
            let cost = plan_cost(inst, &plan).map_err(|e| e.to_string())?;
            Ok(MethodOutcome {
                cost,
                seconds: dt,
                phase1_seconds: Some(dt),
                phase2_seconds: None,
                transfers: 0,
                vehicles_involved: 0,
                plan,
            })
        }
        Method::HeuristicPdpset => {
            let t0 = Instant::now();
            let p1 = phase1_construct(inst).map_err(|e| e.to_string())?;
            let dt1 = round_ms(t0.elapsed().as_secs_f64());
            let t1 = Instant::now();
            let plan = phase2_improve(inst, &p1);
            let dt2 = round_ms(t1.elapsed().as_secs_f64());
            let cost = plan_cost(inst, &plan).map_err(|e| e.to_string())?;
            let (transfers, involved) = count_transfers(&plan);
            Ok(MethodOutcome {
                cost,
                seconds: round_ms(dt1 + dt2),
                phase1_seconds: Some(dt1),
                phase2_seconds: Some(dt2),
                transfers,
                vehicles_involved: involved,
                plan,
            })
        }
        Method::OraclePdp | Method::OraclePdpset => {
            let mut limits = if method == Method::OraclePdp {
                OracleLimits::pdp()
            } else {
                OracleLimits::pdpset()
            };
            limits.time_budget = time_limit;
            let t0 = Instant::now();
            let sol = if method == Method::OraclePdp {
                exact_pdp(inst, &limits)
            } else {
                exact_pdpset(inst, &limits)
            }
            .map_err(|e| e.to_string())?;
            let dt = round_ms(t0.elapsed().as_secs_f64());
            let (transfers, involved) = count_transfers(&sol.plan);
            Ok(MethodOutcome {
                cost: sol.cost,
                seconds: dt,
                phase1_seconds: None,
                phase2_seconds: None,
                transfers,
                vehicles_involved: involved,
                plan: sol.plan,
            })
        }
    }
}

/// Runs the sweep. Per-instance failures land in the row's `error` column
/// and the sweep continues.
pub fn run_scenario(spec: &ScenarioSpec) -> ComparisonReport {
    let jobs: Vec<(u32, u32, u64)> = spec
        .requests
        .iter()
        .flat_map(|&r| spec.seeds.iter().map(move |&s| (r, s)))
        .enumerate()
        .map(|(i, (r, s))| (i as u32 + 1, r, s))
        .collect();

    let run_one = |&(instance_id, requests, seed): &(u32, u32, u64)| -> ReportRow {
        let cfg = GenerateConfig {
            rows: spec.rows,
            cols: spec.cols,
            vehicles: spec.vehicles,
            requests,
            capacity: spec.capacity,
            weights: spec.weights,
            d_max: spec.d_max,
            t_range: spec.t_range,
            seed,
        };
        let mut row = ReportRow {
            instance_id,
            seed,
            vehicles: spec.vehicles,
            requests,
            a: None,
            b: None,
            ratio: None,
            error: None,
        };
        let inst = match generate_instance(&cfg) {
            Ok(inst) => inst,
            Err(e) => {
                row.error = Some(e.to_string());
                return row;
            }
        };
        let mut errors = Vec::new();
        match run_method(&inst, spec.method_a, spec.time_limit) {
            Ok(out) => row.a = Some(out),
            Err(e) => errors.push(format!("{}: {e}", spec.method_a)),
        }
        if let Some(mb) = spec.method_b {
            match run_method(&inst, mb, spec.time_limit) {
                Ok(out) => row.b = Some(out),
                Err(e) => errors.push(format!("{mb}: {e}")),
            }
        }
        if let (Some(a), Some(b)) = (&row.a, &row.b) {
            if a.cost.total != 0.0 {
                row.ratio = Some((b.cost.total - a.cost.total) / a.cost.total);
            }
        }
        if !errors.is_empty() {
            row.error = Some(errors.join("; "));
        }
        row
    };

    let mut rows: Vec<ReportRow> = if spec.parallel {
        jobs.par_iter().map(run_one).collect()
    } else {
        jobs.iter().map(run_one).collect()
    };
    rows.sort_by_key(|r| r.instance_id);
    ComparisonReport {
        grid: (spec.rows, spec.cols),
        method_a: spec.method_a,
        method_b: spec.method_b,
        rows,
    }
}

/// Frozen CSV column set of the comparison report.
pub const REPORT_HEADER: [&str; 30] = [
    "instance_id",
    "seed",
    "grid_rows",
    "grid_cols",
    "vehicles",
    "requests",
    "method_a",
    "cost_a",
    "vd_a",
    "wt_a",
    "td_a",
    "tt_a",
    "time_a_s",
    "phase1_a_s",
    "phase2_a_s",
    "transfers_a",
    "vehicles_involved_a",
    "method_b",
    "cost_b",
    "vd_b",
    "wt_b",
    "td_b",
    "tt_b",
    "time_b_s",
    "phase1_b_s",
    "phase2_b_s",
    "transfers_b",
    "vehicles_involved_b",
    "ratio",
    "error",
];

impl ComparisonReport {
    fn outcome_fields(method: Option<Method>, out: &Option<MethodOutcome>) -> Vec<String> {
        let mut fields = Vec::with_capacity(11);
        fields.push(method.map(|m| m.to_string()).unwrap_or_default());
        match out {
            Some(o) => {
                fields.push(o.cost.total.to_string());
                fields.push(o.cost.vehicle_travel_distance.to_string());
                fields.push(o.cost.customer_wait_time.to_string());
                fields.push(o.cost.customer_travel_distance.to_string());
                fields.push(o.cost.vehicle_transfer_time.to_string());
                fields.push(o.seconds.to_string());
                fields.push(o.phase1_seconds.map(|v| v.to_string()).unwrap_or_default());
                fields.push(o.phase2_seconds.map(|v| v.to_string()).unwrap_or_default());
                fields.push(o.transfers.to_string());
                fields.push(o.vehicles_involved.to_string());
            }
            None => fields.extend(std::iter::repeat_n(String::new(), 10)),
        }
        fields
    }

    /// Serializes the report: one row per instance, then `mean` and `std`
    /// footer rows aggregating the numeric columns (population standard
    /// deviation).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_HEADER).unwrap();
        for row in &self.rows {
            let mut record: Vec<String> = vec![
                row.instance_id.to_string(),
                row.seed.to_string(),
                self.grid.0.to_string(),
                self.grid.1.to_string(),
                row.vehicles.to_string(),
                row.requests.to_string(),
            ];
            record.extend(Self::outcome_fields(Some(self.method_a), &row.a));
            record.extend(Self::outcome_fields(self.method_b, &row.b));
            record.push(row.ratio.map(|v| v.to_string()).unwrap_or_default());
            record.push(row.error.clone().unwrap_or_default());
            w.write_record(&record).unwrap();
        }
        for (label, pick) in [("mean", 0usize), ("std", 1usize)] {
            let mut record = vec![label.to_string()];
            record.extend(std::iter::repeat_n(String::new(), 5));
            for side in [true, false] {
                record.push(String::new()); // method name column
                let outs: Vec<&MethodOutcome> = self
                    .rows
                    .iter()
                    .filter_map(|r| if side { r.a.as_ref() } else { r.b.as_ref() })
                    .collect();
                let cols: [Box<dyn Fn(&MethodOutcome) -> Option<f64>>; 10] = [
                    Box::new(|o| Some(o.cost.total)),
                    Box::new(|o| Some(o.cost.vehicle_travel_distance)),
                    Box::new(|o| Some(o.cost.customer_wait_time)),
                    Box::new(|o| Some(o.cost.customer_travel_distance)),
                    Box::new(|o| Some(o.cost.vehicle_transfer_time)),
                    Box::new(|o| Some(o.seconds)),
                    Box::new(|o| o.phase1_seconds),
                    Box::new(|o| o.phase2_seconds),
                    Box::new(|o| Some(o.transfers as f64)),
                    Box::new(|o| Some(o.vehicles_involved as f64)),
                ];
                for col in cols {
                    let values: Vec<f64> = outs.iter().filter_map(|o| col(o)).collect();
                    if values.is_empty() {
                        record.push(String::new());
                    } else {
                        let (mean, std) = mean_std(&values);
                        record.push(if pick == 0 { mean } else { std }.to_string());
                    }
                }
            }
            let ratios: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).collect();
            if ratios.is_empty() {
                record.push(String::new());
            } else {
                let (mean, std) = mean_std(&ratios);
                record.push(if pick == 0 { mean } else { std }.to_string());
            }
            record.push(String::new());
            w.write_record(&record).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Per-instance component table: one row per (instance, method) with
    /// the four cost components and the total.
    pub fn components_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance_id", "seed", "method", "vd", "wt", "td", "tt", "total"])
            .unwrap();
        for row in &self.rows {
            for (method, out) in [
                (Some(self.method_a), &row.a),
                (self.method_b, &row.b),
            ] {
                let (Some(m), Some(o)) = (method, out) else { continue };
                w.write_record([
                    row.instance_id.to_string(),
                    row.seed.to_string(),
                    m.to_string(),
                    o.cost.vehicle_travel_distance.to_string(),
                    o.cost.customer_wait_time.to_string(),
                    o.cost.customer_travel_distance.to_string(),
                    o.cost.vehicle_transfer_time.to_string(),
                    o.cost.total.to_string(),
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Mean and population std of the ratio column.
    pub fn ratio_stats(&self) -> Option<(f64, f64)> {
        let ratios: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).collect();
        (!ratios.is_empty()).then(|| mean_std(&ratios))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ScenarioSpec {
        ScenarioSpec {
            rows: 5,
            cols: 5,
            vehicles: 2,
            requests: vec![3],
            seeds: (0..5).collect(),
            capacity: 6,
            weights: Weights::unit(),
            d_max: 2.0,
            t_range: 8.0,
            method_a: Method::HeuristicPdp,
            method_b: Some(Method::HeuristicPdpset),
            parallel: false,
            time_limit: None,
        }
    }

    #[test]
    fn header_is_frozen() {
        let expected = "instance_id,seed,grid_rows,grid_cols,vehicles,requests,\
method_a,cost_a,vd_a,wt_a,td_a,tt_a,time_a_s,phase1_a_s,phase2_a_s,transfers_a,vehicles_involved_a,\
method_b,cost_b,vd_b,wt_b,td_b,tt_b,time_b_s,phase1_b_s,phase2_b_s,transfers_b,vehicles_involved_b,\
ratio,error";
        assert_eq!(REPORT_HEADER.join(","), expected);
        let report = run_scenario(&ScenarioSpec { seeds: vec![1], ..small_spec() });
        let csv = report.to_csv();
        assert_eq!(csv.lines().next().unwrap(), expected);
    }

    #[test]
    fn sweep_rows_and_improvement() {
        let report = run_scenario(&small_spec());
        assert_eq!(report.rows.len(), 5);
        for row in &report.rows {
            let a = row.a.as_ref().unwrap();
            let b = row.b.as_ref().unwrap();
            assert!(b.cost.total <= a.cost.total, "instance {}", row.instance_id);
            assert!(row.error.is_none());
            let ratio = row.ratio.unwrap();
            assert!(ratio <= 0.0);
            // weighted identity plumbed through from the evaluator
            let c = &b.cost;
            assert_eq!(
                c.total,
                c.vehicle_travel_distance
                    + c.customer_wait_time
                    + c.customer_travel_distance
                    + c.vehicle_transfer_time
            );
        }
    }

    #[test]
    fn aggregates_match_recomputation() {
        let report = run_scenario(&small_spec());
        let totals: Vec<f64> =
            report.rows.iter().map(|r| r.a.as_ref().unwrap().cost.total).collect();
        let (mean, std) = mean_std(&totals);
        let csv = report.to_csv();
        let mean_row: Vec<&str> =
            csv.lines().find(|l| l.starts_with("mean,")).unwrap().split(',').collect();
        let std_row: Vec<&str> =
            csv.lines().find(|l| l.starts_with("std,")).unwrap().split(',').collect();
        // cost_a is column 7 (0-based)
        assert_eq!(mean_row[7].parse::<f64>().unwrap(), mean);
        assert_eq!(std_row[7].parse::<f64>().unwrap(), std);
    }

    #[test]
    fn single_method_has_empty_ratio() {
        let mut spec = small_spec();
        spec.method_b = None;
        let report = run_scenario(&spec);
        assert!(report.rows.iter().all(|r| r.ratio.is_none()));
        let csv = report.to_csv();
        for line in csv.lines().skip(1).take(5) {
            assert!(line.ends_with(",,"), "ratio and error must be empty: {line}");
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let serial = run_scenario(&small_spec());
        let parallel = run_scenario(&ScenarioSpec { parallel: true, ..small_spec() });
        for (s, p) in serial.rows.iter().zip(&parallel.rows) {
            assert_eq!(s.instance_id, p.instance_id);
            assert_eq!(s.a.as_ref().unwrap().cost, p.a.as_ref().unwrap().cost);
            assert_eq!(s.b.as_ref().unwrap().cost, p.b.as_ref().unwrap().cost);
            assert_eq!(s.b.as_ref().unwrap().plan, p.b.as_ref().unwrap().plan);
        }
    }

    #[test]
    fn oracle_errors_are_recorded_per_row() {
        let mut spec = small_spec();
        spec.requests = vec![5]; // beyond the transfer-free oracle limit
        spec.method_a = Method::OraclePdp;
        spec.method_b = None;
        spec.seeds = vec![1, 2];
        let report = run_scenario(&spec);
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(row.a.is_none());
            assert!(row.error.as_ref().unwrap().contains("limits"));
        }
    }

    #[test]
    fn components_csv_layout() {
        let report = run_scenario(&ScenarioSpec { seeds: vec![3], ..small_spec() });
        let csv = report.components_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "instance_id,seed,method,vd,wt,td,tt,total");
        assert_eq!(csv.lines().count(), 3); // header + one row per method
    }

    #[test]
    fn mean_std_population_convention() {
        let (mean, std) = mean_std(&[2.0, 4.0]);
        assert_eq!(mean, 3.0);
        assert_eq!(std, 1.0); // population: sqrt(((1)^2 + (1)^2) / 2)
    }
}
