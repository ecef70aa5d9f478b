//! Plain-text routing instances.
//!
//! ```text
//! # comment
//! alpha 0.75
//! capacity 2 2
//! cost 3 2
//! 0.10 0.50
//! 0.20 0.40
//! 0.30 0.90
//! capability 3 2
//! 0.6 0.9
//! 0.5 1.0
//! 0.1 0.8
//! ```

use std::fmt::Write as _;

use super::{OptimizerError, RoutingInstance};

fn perr(line: usize, message: impl Into<String>) -> OptimizerError {
    OptimizerError::Parse {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<Vec<T>, OptimizerError> {
    fields
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| perr(line, format!("bad number `{f}`")))
        })
        .collect()
}

pub fn parse_instance(text: &str) -> Result<RoutingInstance, OptimizerError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut alpha = None;
    let mut capacity: Option<Vec<u32>> = None;
    let mut cost = None;
    let mut capability = None;
    let mut shape = None;

    while let Some((no, line)) = lines.next() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "alpha" => {
                let v: Vec<f64> = numbers(no, &fields[1..])?;
                if v.len() != 1 {
                    return Err(perr(no, "alpha takes one value"));
                }
                alpha = Some(v[0]);
            }
            "capacity" => capacity = Some(numbers(no, &fields[1..])?),
            key @ ("cost" | "capability") => {
                let dims: Vec<usize> = numbers(no, &fields[1..])?;
                let [n, m] = dims[..] else {
                    return Err(perr(no, format!("{key} header needs rows and columns")));
                };
                if shape.is_some_and(|s| s != (n, m)) {
                    return Err(perr(
                        no,
                        format!("{key} is {n} x {m}, other matrix differs"),
                    ));
                }
                shape = Some((n, m));
                let mut flat = Vec::with_capacity(n * m);
                for _ in 0..n {
                    let (row_no, row) = lines
                        .next()
                        .ok_or_else(|| perr(no, format!("{key} matrix ends early")))?;
                    let fields: Vec<&str> = row.split_whitespace().collect();
                    let values: Vec<f64> = numbers(row_no, &fields)?;
                    if values.len() != m {
                        return Err(perr(
                            row_no,
                            format!("expected {m} values, found {}", values.len()),
                        ));
                    }
                    flat.extend(values);
                }
                if key == "cost" {
                    cost = Some(flat);
                } else {
                    capability = Some(flat);
                }
            }
            other => return Err(perr(no, format!("unknown section `{other}`"))),
        }
    }
    let (n, m) = shape.ok_or_else(|| perr(0, "missing cost and capability matrices"))?;
    RoutingInstance::new(
        n,
        m,
        cost.ok_or_else(|| perr(0, "missing cost matrix"))?,
        capability.ok_or_else(|| perr(0, "missing capability matrix"))?,
        alpha.ok_or_else(|| perr(0, "missing alpha"))?,
        capacity.ok_or_else(|| perr(0, "missing capacity"))?,
    )
}

/// Inverse of [`parse_instance`]; floats use shortest round-trip formatting.
pub fn write_instance(instance: &RoutingInstance) -> String {
    let (n, m) = (instance.n_queries(), instance.n_models());
    let mut out = String::new();
    let _ = writeln!(out, "alpha {}", instance.alpha());
    let caps: Vec<String> = instance.capacity().iter().map(u32::to_string).collect();
    let _ = writeln!(out, "capacity {}", caps.join(" "));
    for (key, get) in [
        (
            "cost",
            RoutingInstance::cost_row as fn(&RoutingInstance, usize) -> &[f64],
        ),
        ("capability", RoutingInstance::capability_row),
    ] {
        let _ = writeln!(out, "{key} {n} {m}");
        for i in 0..n {
            let row: Vec<String> = get(instance, i).iter().map(f64::to_string).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}
