//! On-disk formats: training and regression CSV, model bundles, labeled
//! states and trace tables.

use std::collections::BTreeMap;
use std::io::Read;

use nalgebra::DVector;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::finstoch::{FinSpace, Kernel, State};
use crate::gauss::RegressionData;
use crate::learning::{Model, PosteriorTrace, TrainingSet};
use crate::rat::Rat;

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

/// Training observations from a CSV with header `x,y`.
pub fn read_training_csv<R: Read>(reader: R) -> Result<TrainingSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y"] {
        return Err(Error::Parse(format!(
            "training csv header must be `x,y`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut items = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        items.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(TrainingSet::new(items))
}

/// Regression data from a CSV with header `x1,...,xn,y`.
pub fn read_regression_csv<R: Read>(reader: R) -> Result<RegressionData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = header.iter().collect();
    let n = names.len().saturating_sub(1);
    let expected: Vec<String> = (1..=n).map(|i| format!("x{i}")).chain(["y".to_string()]).collect();
    if n == 0 || names != expected {
        return Err(Error::Parse(format!(
            "regression csv header must be `x1,...,xn,y`, found `{}`",
            names.join(",")
        )));
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let values = record
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse(format!("row {}: `{v}` is not a finite number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        inputs.push(DVector::from_column_slice(&values[..n]));
        targets.push(values[n]);
    }
    RegressionData::new(inputs, targets)
}

/// Space reference in a bundle: one name, or several for a left-nested product.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Name(String),
    Product(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub space: String,
    pub probs: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub source: SpaceRef,
    pub target: SpaceRef,
    pub rows: Vec<Vec<Rat>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    pub kernel: String,
    pub prior: String,
    pub input_state: String,
}

/// A learning model on disk: named spaces, states and kernels plus the
/// names that make up the model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    pub spaces: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub states: BTreeMap<String, StateEntry>,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelEntry>,
    pub model: ModelRef,
}

impl ModelBundle {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model bundle: {e}")))
    }

    pub fn from_model(model: &Model) -> Self {
        let mut spaces = BTreeMap::new();
        for s in [model.params(), model.input(), model.output()] {
            spaces.insert(s.name().to_string(), s.elements().to_vec());
        }
        let entry = |s: &State| StateEntry {
            space: s.space().name().to_string(),
            probs: s.probs().to_vec(),
        };
        let states = BTreeMap::from([
            ("prior".to_string(), entry(model.prior())),
            ("input_state".to_string(), entry(model.input_state())),
        ]);
        let kernels = BTreeMap::from([(
            "f".to_string(),
            KernelEntry {
                source: SpaceRef::Product(vec![
                    model.params().name().to_string(),
                    model.input().name().to_string(),
                ]),
                target: SpaceRef::Name(model.output().name().to_string()),
                rows: model.kernel().rows().to_vec(),
            },
        )]);
        ModelBundle {
            spaces,
            states,
            kernels,
            model: ModelRef {
                kernel: "f".into(),
                prior: "prior".into(),
                input_state: "input_state".into(),
            },
        }
    }

    fn space_table(&self) -> Result<BTreeMap<&str, FinSpace>> {
        self.spaces
            .iter()
            .map(|(name, labels)| Ok((name.as_str(), FinSpace::new(name, labels.iter().cloned())?)))
            .collect()
    }

    fn lookup<'a>(table: &'a BTreeMap<&str, FinSpace>, name: &str) -> Result<&'a FinSpace> {
        table
            .get(name)
            .ok_or_else(|| Error::InvalidSpace(format!("bundle references undefined space `{name}`")))
    }

    fn resolve_space(table: &BTreeMap<&str, FinSpace>, r: &SpaceRef) -> Result<FinSpace> {
        match r {
            SpaceRef::Name(n) => Self::lookup(table, n).cloned(),
            SpaceRef::Product(names) => {
                let (first, rest) = names
                    .split_first()
                    .ok_or_else(|| Error::InvalidSpace("empty product space reference".into()))?;
                rest.iter().try_fold(Self::lookup(table, first)?.clone(), |acc, n| {
                    Ok(FinSpace::product(&acc, Self::lookup(table, n)?))
                })
            }
        }
    }

    pub fn state(&self, name: &str) -> Result<State> {
        let table = self.space_table()?;
        self.state_in(&table, name)
    }

    fn state_in(&self, table: &BTreeMap<&str, FinSpace>, name: &str) -> Result<State> {
        let entry = self
            .states
            .get(name)
            .ok_or_else(|| Error::Parse(format!("bundle references undefined state `{name}`")))?;
        State::new(Self::lookup(table, &entry.space)?.clone(), entry.probs.clone())
    }

    pub fn kernel(&self, name: &str) -> Result<Kernel> {
        let table = self.space_table()?;
        self.kernel_in(&table, name)
    }

    fn kernel_in(&self, table: &BTreeMap<&str, FinSpace>, name: &str) -> Result<Kernel> {
        let entry = self
            .kernels
            .get(name)
            .ok_or_else(|| Error::Parse(format!("bundle references undefined kernel `{name}`")))?;
        Kernel::new(
            Self::resolve_space(table, &entry.source)?,
            Self::resolve_space(table, &entry.target)?,
            entry.rows.clone(),
        )
    }

    /// Resolve and validate everything in the bundle, returning the model.
    pub fn resolve(&self) -> Result<Model> {
        let table = self.space_table()?;
        for name in self.states.keys() {
            self.state_in(&table, name)?;
        }
        for name in self.kernels.keys() {
            self.kernel_in(&table, name)?;
        }
        Model::new(
            self.state_in(&table, &self.model.prior)?,
            self.state_in(&table, &self.model.input_state)?,
            self.kernel_in(&table, &self.model.kernel)?,
        )
    }
}

/// A state written as `{label: "p/q", ...}` in element order.
#[derive(Clone, Copy, Debug)]
pub struct Labeled<'a>(pub &'a State);

impl Serialize for Labeled<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let space = self.0.space();
        let mut map = serializer.serialize_map(Some(space.len()))?;
        for (label, p) in space.elements().iter().zip(self.0.probs()) {
            map.serialize_entry(label, p)?;
        }
        map.end()
    }
}

/// Inverse of [`Labeled`]: every label of `space` must be present.
pub fn state_from_labels(space: &FinSpace, labels: &BTreeMap<String, Rat>) -> Result<State> {
    for label in labels.keys() {
        space.require_index(label)?;
    }
    let probs = space
        .elements()
        .iter()
        .map(|l| {
            labels.get(l).cloned().ok_or_else(|| Error::UnknownLabel {
                space: space.name().to_string(),
                label: l.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    State::new(space.clone(), probs)
}

/// Tab-separated table of a trace: one row per step, one column per label.
pub fn trace_tsv(trace: &PosteriorTrace) -> String {
    let mut out = String::from("step");
    if let Some(first) = trace.states.first() {
        for label in first.space().elements() {
            out.push('\t');
            out.push_str(label);
        }
    }
    out.push('\n');
    for (step, state) in trace.states.iter().enumerate() {
        out.push_str(&step.to_string());
        for p in state.probs() {
            out.push('\t');
            out.push_str(&p.to_string());
        }
        out.push('\n');
    }
    out
}
