//! Instance files, CSV tables and the parameter sweeps behind them.
//!
//! An instance file is a block of `key = value` globals followed by a
//! `[routes]` CSV table:
//!
//! ```text
//! # times in minutes, money in generic units
//! F = 4
//! t1 = 0
//! t2 = 420
//! D = 1000
//! eta_E = 0.61
//! eta_L = 2.4
//! eta_T = 2.5
//! money_per_minute = 2.5
//! [routes]
//! id,fare,travel_time,trip_cost,Lambda,outside_cost,S
//! a,10,8,32,5000,24,
//! b,20,12,64,4000,,15
//! ```
//!
//! `money_per_minute` defaults to `eta_T`. The `S` column is optional; a
//! non-empty `S` cell takes precedence over `outside_cost`.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::ratio_report;
use crate::error::Error;
use crate::model::{Instance, InstanceConfig, OutsideOption, RouteParams};
use crate::optimize::{objective_value, optimize_allocation, Objective};
use crate::stackelberg::{run, Algorithm, BRUTE_MAX_ROUTES};

pub const DRIVER_SWEEP_HEADER: &str = "D,algo,profit_ratio,welfare_ratio,eq_profit_per_driver";
pub const ALPHA_SWEEP_HEADER: &str = "alpha,algo,objective,ratio";
const ROUTE_COLUMNS: [&str; 6] = ["id", "fare", "travel_time", "trip_cost", "Lambda", "outside_cost"];
const GLOBAL_KEYS: [&str; 8] = ["F", "t1", "t2", "D", "eta_E", "eta_L", "eta_T", "money_per_minute"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl ScenarioError {
    /// 2 for malformed text, 1 for a well-formed but invalid instance.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse { .. } => 2,
            ScenarioError::Invalid(_) => 1,
        }
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_number(text: &str, line: usize, column: usize, what: &str) -> Result<f64, ScenarioError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, column, format!("`{text}` is not a finite number for {what}")))
}

/// Split a CSV line into trimmed cells with their 1-based starting columns.
fn cells(raw: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in raw.split(',') {
        let lead = piece.len() - piece.trim_start().len();
        out.push((start + lead + 1, piece.trim()));
        start += piece.len() + 1;
    }
    out
}

pub fn parse_instance(text: &str) -> Result<Instance, ScenarioError> {
    let mut globals: [Option<f64>; 8] = [None; 8];
    let mut in_routes = false;
    let mut header: Option<bool> = None;
    let mut routes = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw.len() - raw.trim_start().len() + 1;
        if !in_routes {
            if trimmed == "[routes]" {
                in_routes = true;
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| parse_err(line, indent, "expected `key = value` or `[routes]`"))?;
            let key = key.trim();
            let slot = GLOBAL_KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| parse_err(line, indent, format!("unknown key `{key}`")))?;
            if globals[slot].is_some() {
                return Err(parse_err(line, indent, format!("duplicate key `{key}`")));
            }
            let vcol = raw.find('=').unwrap() + 2 + (value.len() - value.trim_start().len());
            globals[slot] = Some(parse_number(value.trim(), line, vcol, key)?);
            continue;
        }
        let row = cells(raw);
        match header {
            None => {
                let names: Vec<&str> = row.iter().map(|c| c.1).collect();
                let with_s = names.len() == 7 && names[6] == "S";
                if names[..names.len().min(6)] != ROUTE_COLUMNS[..] || !(names.len() == 6 || with_s) {
                    return Err(parse_err(
                        line,
                        indent,
                        format!("route header must be `{}` with optional `,S`", ROUTE_COLUMNS.join(",")),
                    ));
                }
                header = Some(with_s);
            }
            Some(with_s) => {
                let width = if with_s { 7 } else { 6 };
                if row.len() != width {
                    return Err(parse_err(
                        line,
                        indent,
                        format!("expected {width} fields, found {}", row.len()),
                    ));
                }
                let (_, id) = row[0];
                if id.is_empty() {
                    return Err(parse_err(line, row[0].0, "empty route id"));
                }
                let mut nums = [0.0; 4];
                for (k, slot) in nums.iter_mut().enumerate() {
                    let (col, text) = row[k + 1];
                    *slot = parse_number(text, line, col, ROUTE_COLUMNS[k + 1])?;
                }
                let (ocol, otext) = row[5];
                let s_cell = if with_s { Some(row[6]) } else { None };
                let outside = match s_cell {
                    Some((scol, stext)) if !stext.is_empty() => {
                        OutsideOption::Direct(parse_number(stext, line, scol, "S")?)
                    }
                    _ => OutsideOption::Cost(parse_number(otext, line, ocol, "outside_cost")?),
                };
                routes.push(RouteParams {
                    id: id.to_string(),
                    fare: nums[0],
                    travel_time: nums[1],
                    trip_cost: nums[2],
                    total_demand: nums[3],
                    outside,
                });
            }
        }
    }

    let end = last_line + 1;
    for (k, key) in GLOBAL_KEYS.iter().enumerate().take(7) {
        if globals[k].is_none() {
            return Err(parse_err(end, 1, format!("missing required key `{key}`")));
        }
    }
    if !in_routes || header.is_none() {
        return Err(parse_err(end, 1, "missing `[routes]` table"));
    }
    let g = |k: usize| globals[k].unwrap();
    let config = InstanceConfig {
        capacity: g(0),
        t1: g(1),
        t2: g(2),
        total_drivers: g(3),
        eta_e: g(4),
        eta_l: g(5),
        eta_t: g(6),
        money_per_minute: globals[7].unwrap_or(g(6)),
    };
    Ok(Instance::new(config, routes)?)
}

/// Inverse of [`parse_instance`]; numbers use the shortest exact representation.
pub fn serialize_instance(inst: &Instance) -> String {
    let c = &inst.config;
    let mut out = String::from("# times in minutes, money in generic units, demand in riders, supply in drivers\n");
    let values = [
        c.capacity,
        c.t1,
        c.t2,
        c.total_drivers,
        c.eta_e,
        c.eta_l,
        c.eta_t,
        c.money_per_minute,
    ];
    for (k, v) in GLOBAL_KEYS.iter().zip(values) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("[routes]\n");
    let with_s = inst
        .routes
        .iter()
        .any(|r| matches!(r.outside, OutsideOption::Direct(_)));
    out.push_str(&ROUTE_COLUMNS.join(","));
    out.push_str(if with_s { ",S\n" } else { "\n" });
    for r in &inst.routes {
        let _ = write!(
            out,
            "{},{},{},{},{},",
            r.id, r.fare, r.travel_time, r.trip_cost, r.total_demand
        );
        match r.outside {
            OutsideOption::Cost(v) if with_s => {
                let _ = writeln!(out, "{v},");
            }
            OutsideOption::Cost(v) => {
                let _ = writeln!(out, "{v}");
            }
            OutsideOption::Direct(s) => {
                let _ = writeln!(out, ",{s}");
            }
        }
    }
    out
}

/// Twelve significant digits, plain notation for moderate magnitudes.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let plain = format!("{x:.decimals$}");
        trim_zeros(&plain).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rows of `(sweep value, algorithm tag, numeric columns)` under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: &'static str,
    pub rows: Vec<(f64, String, Vec<f64>)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(self.header);
        out.push('\n');
        for (v, tag, cols) in &self.rows {
            out.push_str(&format_number(*v));
            out.push(',');
            out.push_str(tag);
            for c in cols {
                out.push(',');
                out.push_str(&format_number(*c));
            }
            out.push('\n');
        }
        out
    }
}

/// `from, from + step, …` up to `to` (inclusive, tolerant of rounding).
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Error> {
    if !(from <= to) || !(step > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "grid needs from <= to and step > 0, got {from}..{to} by {step}"
        )));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| from + k as f64 * step).collect())
}

/// Ratio report at each driver mass on the grid.
pub fn sweep_drivers(inst: &Instance, from: f64, to: f64, step: f64) -> Result<SweepTable, Error> {
    if !(from > 0.0) {
        return Err(Error::NonPositiveMass(from));
    }
    let rows = grid(from, to, step)?
        .into_par_iter()
        .map(|d| {
            let r = ratio_report(&inst.with_total_drivers(d)?)?;
            Ok((
                d,
                "equilibrium".to_string(),
                vec![r.profit_ratio, r.welfare_ratio, r.eq_per_driver_profit],
            ))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(SweepTable {
        header: DRIVER_SWEEP_HEADER,
        rows,
    })
}

/// Objective and optimum-to-outcome ratio for each `(alpha, algorithm)` pair.
pub fn sweep_alpha(
    inst: &Instance,
    algos: &[Algorithm],
    alphas: &[f64],
    obj: Objective,
    brute_step: Option<f64>,
) -> Result<SweepTable, Error> {
    if algos.contains(&Algorithm::Brute) && inst.len() > BRUTE_MAX_ROUTES {
        return Err(Error::DimensionTooLarge(inst.len()));
    }
    let opt = optimize_allocation(inst, obj, inst.total_drivers(), None, None)?;
    let best = objective_value(inst, &opt.x, obj);
    let cells: Vec<(f64, Algorithm)> = alphas
        .iter()
        .flat_map(|&a| algos.iter().map(move |&g| (a, g)))
        .collect();
    let rows = cells
        .into_par_iter()
        .map(|(alpha, algo)| {
            let out = run(algo, inst, alpha, obj, brute_step)?;
            Ok((alpha, algo.tag().to_string(), vec![out.objective_value, best / out.objective_value]))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(SweepTable {
        header: ALPHA_SWEEP_HEADER,
        rows,
    })
}
