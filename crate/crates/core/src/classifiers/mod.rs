//! Black-box classifiers loaded from JSON model files.
//!
//! A model only exposes `predict(point) -> label`; labels are `1..=K` and
//! score ties go to the smallest label.

mod fixtures;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub use fixtures::{
    fixture, fixture_forest_2d, fixture_linear_2d, fixture_nn_2d, fixture_qda_2d,
    fixture_step_1d, qda_linf_lower_bound, qda_radius_closed_form, FIXTURE_NAMES,
    QDA_CIRCLE_RADIUS,
};

/// Anything that maps a point of `[0, 1]^d` to a label in `1..=K`.
pub trait Classifier: Sync {
    fn dimension(&self) -> usize;

    /// Label for a point of the right dimension. Callers check the dimension.
    fn label(&self, point: &[f64]) -> usize;
}

/// A closure-backed classifier, handy for synthetic test models.
pub struct FnClassifier<F> {
    dimension: usize,
    f: F,
}

impl<F> FnClassifier<F>
where
    F: Fn(&[f64]) -> usize + Sync,
{
    pub fn new(dimension: usize, f: F) -> Self {
        FnClassifier { dimension, f }
    }
}

impl<F> Classifier for FnClassifier<F>
where
    F: Fn(&[f64]) -> usize + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn label(&self, point: &[f64]) -> usize {
        (self.f)(point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Qda,
    TreeEnsemble,
    Mlp,
}

/// Per-class affine score `w . x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearClass {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Per-class quadratic discriminant `x' Q x + l . x + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QdaClass {
    pub quadratic: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

/// A tree node: either a split (`x[feature] <= threshold` goes left) or a leaf label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: usize,
    },
}

/// Nodes stored flat; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_for(&self, point: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { leaf } => return *leaf,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if point[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

/// Affine layer `matrix . x + bias`; `matrix` has one row per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub matrix: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpWeights {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestWeights {
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelWeights {
    Linear(Vec<LinearClass>),
    Qda(Vec<QdaClass>),
    TreeEnsemble(ForestWeights),
    Mlp(MlpWeights),
}

/// A validated classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    dimension: usize,
    num_classes: usize,
    weights: ModelWeights,
    note: Option<String>,
}

/// On-disk layout: `{"kind", "dimension", "num_classes", "weights"}`.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    kind: ModelKind,
    dimension: usize,
    num_classes: usize,
    weights: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

/// Label and optional per-class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub scores: Option<Vec<f64>>,
}

/// First index of the maximum, as a 1-based label.
pub fn argmax_label(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best + 1
}

impl ClassifierModel {
    pub fn new(dimension: usize, num_classes: usize, weights: ModelWeights) -> Result<Self> {
        let m = ClassifierModel {
            dimension,
            num_classes,
            weights,
            note: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn kind(&self) -> ModelKind {
        match self.weights {
            ModelWeights::Linear(_) => ModelKind::Linear,
            ModelWeights::Qda(_) => ModelKind::Qda,
            ModelWeights::TreeEnsemble(_) => ModelKind::TreeEnsemble,
            ModelWeights::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dimension;
        let k = self.num_classes;
        if d == 0 {
            return Err(Error::Shape("dimension must be >= 1".into()));
        }
        if k < 2 {
            return Err(Error::Shape(format!("num_classes must be >= 2 (got {k})")));
        }
        let finite = |v: f64, field: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{field} is not finite")))
            }
        };
        match &self.weights {
            ModelWeights::Linear(classes) => {
                if classes.len() != k {
                    return Err(Error::Shape(format!(
                        "weights: expected {k} classes, found {}",
                        classes.len()
                    )));
                }
                for (c, cl) in classes.iter().enumerate() {
                    if cl.weights.len() != d {
                        return Err(Error::Shape(format!(
                            "weights[{c}].weights has length {}, expected {d}",
                            cl.weights.len()
                        )));
                    }
                    cl.weights.iter().try_for_each(|&w| finite(w, "weights"))?;
                    finite(cl.bias, "bias")?;
                }
            }
            ModelWeights::Qda(classes) => {
                if classes.len() != k {
                    return Err(Error::Shape(format!(
                        "weights: expected {k} classes, found {}",
                        classes.len()
                    )));
                }
                for (c, cl) in classes.iter().enumerate() {
                    if cl.quadratic.len() != d || cl.quadratic.iter().any(|r| r.len() != d) {
                        return Err(Error::Shape(format!(
                            "weights[{c}].quadratic must be {d}x{d}"
                        )));
                    }
                    if cl.linear.len() != d {
                        return Err(Error::Shape(format!(
                            "weights[{c}].linear has length {}, expected {d}",
                            cl.linear.len()
                        )));
                    }
                    cl.quadratic
                        .iter()
                        .flatten()
                        .chain(&cl.linear)
                        .try_for_each(|&w| finite(w, "qda coefficient"))?;
                    finite(cl.constant, "constant")?;
                }
            }
            ModelWeights::TreeEnsemble(forest) => {
                if forest.trees.is_empty() {
                    return Err(Error::Shape("trees: at least one tree is required".into()));
                }
                for (t, tree) in forest.trees.iter().enumerate() {
                    validate_tree(tree, t, d, k)?;
                }
            }
            ModelWeights::Mlp(mlp) => {
                if mlp.layers.is_empty() {
                    return Err(Error::Shape("layers: at least one layer is required".into()));
                }
                let mut width = d;
                for (i, layer) in mlp.layers.iter().enumerate() {
                    if layer.matrix.is_empty() {
                        return Err(Error::Shape(format!("layers[{i}].matrix is empty")));
                    }
                    if layer.matrix.iter().any(|r| r.len() != width) {
                        return Err(Error::Shape(format!(
                            "layers[{i}].matrix rows must have length {width}"
                        )));
                    }
                    if layer.bias.len() != layer.matrix.len() {
                        return Err(Error::Shape(format!(
                            "layers[{i}].bias has length {}, expected {}",
                            layer.bias.len(),
                            layer.matrix.len()
                        )));
                    }
                    layer
                        .matrix
                        .iter()
                        .flatten()
                        .chain(&layer.bias)
                        .try_for_each(|&w| finite(w, "layer weight"))?;
                    width = layer.matrix.len();
                }
                if width != k {
                    return Err(Error::Shape(format!(
                        "last layer has {width} outputs, expected num_classes = {k}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Label (and scores where the model has them) for `point`.
    pub fn predict(&self, point: &[f64]) -> Result<Prediction> {
        if point.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                got: point.len(),
            });
        }
        Ok(self.predict_unchecked(point))
    }

    fn predict_unchecked(&self, x: &[f64]) -> Prediction {
        let scores = match &self.weights {
            ModelWeights::Linear(classes) => classes
                .iter()
                .map(|c| c.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + c.bias)
                .collect(),
            ModelWeights::Qda(classes) => classes
                .iter()
                .map(|c| {
                    let quad: f64 = c
                        .quadratic
                        .iter()
                        .zip(x)
                        .map(|(row, xi)| xi * row.iter().zip(x).map(|(q, xj)| q * xj).sum::<f64>())
                        .sum();
                    let lin: f64 = c.linear.iter().zip(x).map(|(l, v)| l * v).sum();
                    quad + lin + c.constant
                })
                .collect(),
            ModelWeights::TreeEnsemble(forest) => {
                let mut votes = vec![0.0; self.num_classes];
                for t in &forest.trees {
                    votes[t.leaf_for(x) - 1] += 1.0;
                }
                votes
            }
            ModelWeights::Mlp(mlp) => {
                let last = mlp.layers.len() - 1;
                let mut h = x.to_vec();
                for (i, layer) in mlp.layers.iter().enumerate() {
                    h = layer.apply(&h);
                    if i < last {
                        h.iter_mut().for_each(|v| *v = v.max(0.0));
                    }
                }
                h
            }
        };
        Prediction {
            label: argmax_label(&scores),
            scores: Some(scores),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelParse(e.to_string()))?;
        let field = |e: serde_json::Error| Error::ModelParse(format!("weights: {e}"));
        let weights = match file.kind {
            ModelKind::Linear => ModelWeights::Linear(serde_json::from_value(file.weights).map_err(field)?),
            ModelKind::Qda => ModelWeights::Qda(serde_json::from_value(file.weights).map_err(field)?),
            ModelKind::TreeEnsemble => {
                ModelWeights::TreeEnsemble(serde_json::from_value(file.weights).map_err(field)?)
            }
            ModelKind::Mlp => ModelWeights::Mlp(serde_json::from_value(file.weights).map_err(field)?),
        };
        let mut m = ClassifierModel::new(file.dimension, file.num_classes, weights)?;
        m.note = file.note;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let weights = match &self.weights {
            ModelWeights::Linear(c) => serde_json::to_value(c),
            ModelWeights::Qda(c) => serde_json::to_value(c),
            ModelWeights::TreeEnsemble(f) => serde_json::to_value(f),
            ModelWeights::Mlp(m) => serde_json::to_value(m),
        }
        .expect("model weights serialize");
        let file = ModelFile {
            kind: self.kind(),
            dimension: self.dimension,
            num_classes: self.num_classes,
            weights,
            note: self.note.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model file serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn validate_tree(tree: &Tree, t: usize, d: usize, k: usize) -> Result<()> {
    let n = tree.nodes.len();
    if n == 0 {
        return Err(Error::Shape(format!("trees[{t}].nodes is empty")));
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        match node {
            TreeNode::Leaf { leaf } => {
                if *leaf < 1 || *leaf > k {
                    return Err(Error::Validation(format!(
                        "trees[{t}].nodes[{i}].leaf = {leaf} is not a label in 1..={k}"
                    )));
                }
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= d {
                    return Err(Error::Validation(format!(
                        "trees[{t}].nodes[{i}].feature = {feature} must be < dimension {d}"
                    )));
                }
                if !(0.0..=1.0).contains(threshold) {
                    return Err(Error::Validation(format!(
                        "trees[{t}].nodes[{i}].threshold = {threshold} must lie in [0, 1]"
                    )));
                }
                for (side, c) in [("left", left), ("right", right)] {
                    if *c >= n {
                        return Err(Error::Validation(format!(
                            "trees[{t}].nodes[{i}].{side} = {c} is out of range"
                        )));
                    }
                }
            }
        }
    }
    // every path from the root must end in a leaf
    let mut state = vec![0u8; n]; // 0 unseen, 1 on stack, 2 done
    let mut stack = vec![(0usize, false)];
    while let Some((i, exiting)) = stack.pop() {
        if exiting {
            state[i] = 2;
            continue;
        }
        match state[i] {
            1 => {
                return Err(Error::Validation(format!(
                    "trees[{t}] contains a cycle through node {i}"
                )))
            }
            2 => continue,
            _ => {}
        }
        state[i] = 1;
        stack.push((i, true));
        if let TreeNode::Split { left, right, .. } = tree.nodes[i] {
            for c in [left, right] {
                if state[c] == 1 {
                    return Err(Error::Validation(format!(
                        "trees[{t}] contains a cycle through node {c}"
                    )));
                }
                if state[c] == 0 {
                    stack.push((c, false));
                }
            }
        }
    }
    Ok(())
}

impl Classifier for ClassifierModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn label(&self, point: &[f64]) -> usize {
        self.predict_unchecked(point).label
    }
}
