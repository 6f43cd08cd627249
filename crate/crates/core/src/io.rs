//! JSON formats for families, distributions and circuit bases.
//!
//! A family file is one of
//!
//! ```text
//! {"labels": [...], "nu": [...], "A": [[...], ...]}
//! {"partition": [[0, 1], [2, 3]]}
//! {"hierarchical": {"cardinalities": [2, 2], "complex": [[1], [2]]}}
//! ```
//!
//! Rational entries are JSON numbers or strings such as `"1/3"`. `labels` is
//! optional and defaults to `"0"`, `"1"`, ... Distributions are a bare array
//! or `{"p": [...]}`.

use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use crate::circuits::{CircuitBasis, CircuitVector};
use crate::error::{Error, Result};
use crate::family::{ExponentialFamily, Measure, ProbabilityVector, StateSpace, SufficientStatistics};
use crate::rational::{self, Q};
use crate::zoo::{hierarchical_family, partition_family, HierarchicalSpec, Partition};

/// A parsed family file together with the model that produced it.
#[derive(Debug, Clone)]
pub struct FamilyDoc {
    pub family: ExponentialFamily,
    pub partition: Option<Partition>,
    pub hierarchical: Option<HierarchicalSpec>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses JSON text, reporting syntax errors by line and column.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| schema(format!("line {}, column {}", e.line(), e.column()), e.to_string()))
}

pub fn parse_family(text: &str) -> Result<FamilyDoc> {
    family_from_value(&parse_json(text)?)
}

pub fn family_from_value(v: &Value) -> Result<FamilyDoc> {
    let obj = v.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    if let Some(p) = obj.get("partition") {
        let blocks = index_lists(p, "partition")?;
        let n = blocks.iter().map(Vec::len).sum();
        let partition = Partition::new(blocks, n).map_err(|e| schema("partition", e.to_string()))?;
        let space = match obj.get("labels") {
            Some(l) => StateSpace::new(labels(l, n)?)?,
            None => StateSpace::indexed(n)?,
        };
        let family = partition_family(&partition, space)?;
        return Ok(FamilyDoc {
            family,
            partition: Some(partition),
            hierarchical: None,
        });
    }
    if let Some(h) = obj.get("hierarchical") {
        let spec: HierarchicalSpec =
            serde_json::from_value(h.clone()).map_err(|e| schema("hierarchical", e.to_string()))?;
        let family = hierarchical_family(&spec)?;
        return Ok(FamilyDoc {
            family,
            partition: None,
            hierarchical: Some(spec),
        });
    }
    let a = obj.get("A").ok_or_else(|| schema("A", "missing field"))?;
    let rows = a.as_array().ok_or_else(|| schema("A", "expected an array of rows"))?;
    let nu_v = obj.get("nu").ok_or_else(|| schema("nu", "missing field"))?;
    let nu_list = nu_v.as_array().ok_or_else(|| schema("nu", "expected an array"))?;
    let n = nu_list.len();
    if n == 0 {
        return Err(schema("nu", "empty state space"));
    }
    let nu = nu_list
        .iter()
        .enumerate()
        .map(|(i, x)| rational_value(x, &format!("nu[{i}]")).map(|q| rational::to_f64(&q)))
        .collect::<Result<Vec<f64>>>()?;
    let mut stats = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let entries = row.as_array().ok_or_else(|| schema(format!("A[{r}]"), "expected an array"))?;
        if entries.len() != n {
            return Err(schema(
                format!("A[{r}]"),
                format!("row has {} entries, nu has {n}", entries.len()),
            ));
        }
        stats.push(
            entries
                .iter()
                .enumerate()
                .map(|(c, x)| rational_value(x, &format!("A[{r}][{c}]")))
                .collect::<Result<Vec<Q>>>()?,
        );
    }
    let space = match obj.get("labels") {
        Some(l) => StateSpace::new(labels(l, n)?)?,
        None => StateSpace::indexed(n)?,
    };
    let family = ExponentialFamily::build(space, Measure::new(nu)?, SufficientStatistics::new(stats, n)?)?;
    Ok(FamilyDoc {
        family,
        partition: None,
        hierarchical: None,
    })
}

fn labels(v: &Value, n: usize) -> Result<Vec<String>> {
    let list = v.as_array().ok_or_else(|| schema("labels", "expected an array"))?;
    if list.len() != n {
        return Err(schema("labels", format!("{} labels for {n} states", list.len())));
    }
    list.iter()
        .enumerate()
        .map(|(i, l)| match l {
            Value::String(s) => Ok(s.clone()),
            Value::Number(x) => Ok(x.to_string()),
            _ => Err(schema(format!("labels[{i}]"), "expected a string")),
        })
        .collect()
}

fn index_lists(v: &Value, field: &str) -> Result<Vec<Vec<usize>>> {
    let outer = v.as_array().ok_or_else(|| schema(field, "expected an array of arrays"))?;
    outer
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let inner = b
                .as_array()
                .ok_or_else(|| schema(format!("{field}[{i}]"), "expected an array"))?;
            inner
                .iter()
                .enumerate()
                .map(|(j, x)| {
                    x.as_u64()
                        .map(|x| x as usize)
                        .ok_or_else(|| schema(format!("{field}[{i}][{j}]"), "expected a nonnegative integer"))
                })
                .collect()
        })
        .collect()
}

fn rational_value(v: &Value, field: &str) -> Result<Q> {
    match v {
        Value::Number(x) => rational::parse(&x.to_string()).map_err(|e| schema(field, e.to_string())),
        Value::String(s) => rational::parse(s).map_err(|e| schema(field, e.to_string())),
        _ => Err(schema(field, "expected a number or a rational string")),
    }
}

pub fn parse_distribution(text: &str) -> Result<ProbabilityVector> {
    distribution_from_value(&parse_json(text)?)
}

pub fn distribution_from_value(v: &Value) -> Result<ProbabilityVector> {
    let (list, field) = match v {
        Value::Array(a) => (a, "$"),
        Value::Object(o) => (
            o.get("p")
                .and_then(Value::as_array)
                .ok_or_else(|| schema("p", "expected an array"))?,
            "p",
        ),
        _ => return Err(schema("$", "expected an array or an object with field p")),
    };
    let values = list
        .iter()
        .enumerate()
        .map(|(i, x)| rational_value(x, &format!("{field}[{i}]")).map(|q| rational::to_f64(&q)))
        .collect::<Result<Vec<f64>>>()?;
    ProbabilityVector::new(values).map_err(|e| schema(field, e.to_string()))
}

fn rational_json(x: &Q) -> Value {
    if x.is_integer() {
        match x.numer().to_i64() {
            Some(i) => Value::from(i),
            None => Value::String(rational::format(x)),
        }
    } else {
        Value::String(rational::format(x))
    }
}

/// Canonical `{"labels", "nu", "A"}` form of a family.
pub fn family_to_value(family: &ExponentialFamily) -> Value {
    let a: Vec<Value> = family
        .stats()
        .rows()
        .map(|r| Value::Array(r.iter().map(rational_json).collect()))
        .collect();
    let mut m = Map::new();
    m.insert("labels".into(), json!(family.space().labels()));
    m.insert("nu".into(), json!(family.nu().values()));
    m.insert("A".into(), Value::Array(a));
    Value::Object(m)
}

pub fn circuits_to_value(basis: &CircuitBasis) -> Value {
    serde_json::to_value(basis).expect("circuits serialize")
}

/// Reads a circuit basis export and checks every vector against the family.
/// Accepts a bare list or a report carrying it under `circuits` or
/// `result.circuits`.
pub fn parse_circuits(text: &str, family: &ExponentialFamily) -> Result<Vec<CircuitVector>> {
    let v = parse_json(text)?;
    let v = v
        .pointer("/result/circuits")
        .or_else(|| v.get("circuits"))
        .unwrap_or(&v);
    let list = v.as_array().ok_or_else(|| schema("$", "expected an array"))?;
    list.iter()
        .enumerate()
        .map(|(i, c)| {
            let vector = c
                .get("vector")
                .and_then(Value::as_array)
                .ok_or_else(|| schema(format!("[{i}].vector"), "expected an array"))?;
            let q = vector
                .iter()
                .enumerate()
                .map(|(j, x)| rational_value(x, &format!("[{i}].vector[{j}]")))
                .collect::<Result<Vec<Q>>>()?;
            if !family.in_normal_space_exact(&q) {
                return Err(schema(format!("[{i}].vector"), "not in the normal space"));
            }
            Ok(CircuitVector::from_vector(q))
        })
        .collect()
}
