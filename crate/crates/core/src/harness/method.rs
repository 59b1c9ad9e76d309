use std::fmt;
use std::str::FromStr;

use fsltr_tensor::optim::AdamConfig;
use fsltr_tensor::{ParamStore, RngState, Tensor};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QueryGroup};
use crate::error::{invalid, Result};
use crate::ltr::RankerModel;
use crate::model::{Model, Selection, SelectionKind};
use crate::selectors::{Cae, GL2x, Ifg, Invase, L2x, LassoNet, TabNet, TabNetConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Dnn,
    L2x,
    Gl2x,
    Cae,
    Ifg,
    Invase,
    Lassonet,
    Tabnet,
}

impl MethodName {
    pub const ALL: [MethodName; 8] = [
        MethodName::Dnn,
        MethodName::L2x,
        MethodName::Gl2x,
        MethodName::Cae,
        MethodName::Ifg,
        MethodName::Invase,
        MethodName::Lassonet,
        MethodName::Tabnet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Dnn => "dnn",
            MethodName::L2x => "l2x",
            MethodName::Gl2x => "gl2x",
            MethodName::Cae => "cae",
            MethodName::Ifg => "ifg",
            MethodName::Invase => "invase",
            MethodName::Lassonet => "lassonet",
            MethodName::Tabnet => "tabnet",
        }
    }

    pub fn properties(self) -> MethodProperties {
        let (global, local, sampling, regularization, fixed_budget, composable) = match self {
            MethodName::Dnn => (false, false, false, false, false, false),
            MethodName::L2x => (false, true, true, false, true, true),
            MethodName::Gl2x => (true, false, true, false, true, true),
            MethodName::Cae => (true, false, true, false, true, true),
            MethodName::Ifg => (false, true, true, false, false, true),
            MethodName::Invase => (false, true, true, true, false, true),
            MethodName::Lassonet => (true, false, false, true, false, true),
            MethodName::Tabnet => (false, true, false, true, false, false),
        };
        MethodProperties {
            global,
            local,
            sampling,
            regularization,
            fixed_budget,
            composable,
        }
    }

    /// Whether a budget fixes the number of selected features.
    pub fn is_fixed_budget(self) -> bool {
        self.properties().fixed_budget
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodName {
    type Err = crate::error::CoreError;

    fn from_str(s: &str) -> Result<Self> {
        MethodName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = MethodName::ALL.iter().map(|m| m.as_str()).collect();
                crate::error::CoreError::Config(vec![format!(
                    "method: unknown method {s:?}, expected one of {}",
                    names.join(", ")
                )])
            })
    }
}

/// Taxonomy of a selection method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodProperties {
    /// One feature subset for all documents.
    pub global: bool,
    /// A feature subset per document.
    pub local: bool,
    pub sampling: bool,
    pub regularization: bool,
    pub fixed_budget: bool,
    /// Usable with an arbitrary downstream ranker.
    pub composable: bool,
}

/// Method hyperparameters needed to rebuild a model's architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum MethodSpec {
    Dnn,
    L2x { k: usize },
    Gl2x { k: usize },
    Cae { k: usize },
    Ifg { groups: usize, group_budget: usize, lambda_rec: f64 },
    Invase { lambda: f64 },
    Lassonet { hierarchy: f64, lambda: f64 },
    Tabnet(TabNetConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub input_width: usize,
    pub widths: Vec<usize>,
    pub adam: AdamConfig,
    pub hyper: MethodSpec,
}

impl ModelSpec {
    pub fn method(&self) -> MethodName {
        match self.hyper {
            MethodSpec::Dnn => MethodName::Dnn,
            MethodSpec::L2x { .. } => MethodName::L2x,
            MethodSpec::Gl2x { .. } => MethodName::Gl2x,
            MethodSpec::Cae { .. } => MethodName::Cae,
            MethodSpec::Ifg { .. } => MethodName::Ifg,
            MethodSpec::Invase { .. } => MethodName::Invase,
            MethodSpec::Lassonet { .. } => MethodName::Lassonet,
            MethodSpec::Tabnet(_) => MethodName::Tabnet,
        }
    }
}

/// Any trainable model, dispatching to the concrete method.
#[derive(Clone, Debug)]
pub enum AnyModel {
    Dnn(RankerModel),
    L2x(L2x),
    Gl2x(GL2x),
    Cae(Cae),
    Ifg(Ifg),
    Invase(Invase),
    Lassonet(LassoNet),
    Tabnet(TabNet),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Dnn($m) => $body,
            AnyModel::L2x($m) => $body,
            AnyModel::Gl2x($m) => $body,
            AnyModel::Cae($m) => $body,
            AnyModel::Ifg($m) => $body,
            AnyModel::Invase($m) => $body,
            AnyModel::Lassonet($m) => $body,
            AnyModel::Tabnet($m) => $body,
        }
    };
}

impl AnyModel {
    pub fn build(spec: &ModelSpec, rng: &mut RngState) -> Result<AnyModel> {
        let (d, w, adam) = (spec.input_width, spec.widths.as_slice(), spec.adam);
        if d == 0 {
            return Err(invalid("input width must be >= 1"));
        }
        Ok(match spec.hyper {
            MethodSpec::Dnn => AnyModel::Dnn(RankerModel::new(d, w, adam, rng)),
            MethodSpec::L2x { k } => AnyModel::L2x(L2x::new(d, k, w, adam, rng)?),
            MethodSpec::Gl2x { k } => AnyModel::Gl2x(GL2x::new(d, k, w, adam, rng)?),
            MethodSpec::Cae { k } => AnyModel::Cae(Cae::new(d, k, w, adam, rng)?),
            MethodSpec::Ifg {
                groups,
                group_budget,
                lambda_rec,
            } => AnyModel::Ifg(Ifg::new(d, groups, group_budget, lambda_rec, w, adam, rng)?),
            MethodSpec::Invase { lambda } => AnyModel::Invase(Invase::new(d, lambda, w, adam, rng)?),
            MethodSpec::Lassonet { hierarchy, lambda } => {
                AnyModel::Lassonet(LassoNet::new(d, w, hierarchy, lambda, adam, rng)?)
            }
            MethodSpec::Tabnet(ref cfg) => AnyModel::Tabnet(TabNet::new(d, cfg.clone(), adam, rng)?),
        })
    }

    /// What the trained model selects and how it ranks features.
    pub fn extract_selection(&self, train: &Dataset) -> Result<Selection> {
        match self {
            AnyModel::Dnn(m) => {
                let d = m.input_width();
                Ok(Selection {
                    kind: SelectionKind::Importance,
                    values: vec![1.0; d],
                    selected: (0..d).collect(),
                })
            }
            AnyModel::L2x(m) => m.extract_selection(train),
            AnyModel::Gl2x(m) => m.extract_selection(),
            AnyModel::Cae(m) => m.extract_selection(),
            AnyModel::Ifg(m) => m.extract_selection(train),
            AnyModel::Invase(m) => m.extract_selection(train),
            AnyModel::Lassonet(m) => m.extract_selection(),
            AnyModel::Tabnet(m) => m.extract_selection(train),
        }
    }
}

impl Model for AnyModel {
    fn input_width(&self) -> usize {
        dispatch!(self, m => m.input_width())
    }

    fn train_step(&mut self, group: &QueryGroup, tau: f64, rng: &mut RngState) -> Result<f64> {
        dispatch!(self, m => m.train_step(group, tau, rng))
    }

    fn score(&self, features: &Tensor) -> Result<Vec<f64>> {
        dispatch!(self, m => m.score(features))
    }

    fn score_sampled(&self, features: &Tensor, tau: f64, rng: &mut RngState) -> Result<Vec<f64>> {
        dispatch!(self, m => m.score_sampled(features, tau, rng))
    }

    fn store(&self) -> &ParamStore {
        dispatch!(self, m => m.store())
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        dispatch!(self, m => m.store_mut())
    }
}
