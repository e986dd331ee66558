//! Built-in models with explicit weights.

use super::{
    ClassifierModel, ForestWeights, Layer, LinearClass, MlpWeights, ModelWeights, QdaClass, Tree,
    TreeNode,
};

pub const FIXTURE_NAMES: [&str; 5] = ["nn2d", "qda2d", "step1d", "linear2d", "forest2d"];

/// Radius of the circle separating the two QDA fixture classes,
/// centred at `(-1, -1)`: `2 sqrt(1 + ln 2)`.
pub const QDA_CIRCLE_RADIUS: f64 = 2.602_419_782_095_075_6;

pub fn fixture(name: &str) -> Option<ClassifierModel> {
    match name {
        "nn2d" => Some(fixture_nn_2d()),
        "qda2d" => Some(fixture_qda_2d()),
        "step1d" => Some(fixture_step_1d()),
        "linear2d" => Some(fixture_linear_2d()),
        "forest2d" => Some(fixture_forest_2d()),
        _ => None,
    }
}

/// The 2-2-2 ReLU network `a2(ReLU(a1(x)))`.
pub fn fixture_nn_2d() -> ClassifierModel {
    ClassifierModel::new(
        2,
        2,
        ModelWeights::Mlp(MlpWeights {
            layers: vec![
                Layer {
                    matrix: vec![vec![-1.86, -2.09], vec![0.12, -0.46]],
                    bias: vec![3.71, -0.08],
                },
                Layer {
                    matrix: vec![vec![-3.05, 0.40], vec![4.02, -0.22]],
                    bias: vec![0.94, -0.58],
                },
            ],
        }),
    )
    .expect("fixture is well formed")
}

/// Two Gaussian classes with equal priors: `N((0,0), I)` and `N((1,1), 2I)`.
///
/// `h1 = -(u^2 + v^2)/2 + ln 0.5`,
/// `h2 = -((u-1)^2 + (v-1)^2)/4 - ln 4 / 2 + ln 0.5`.
pub fn fixture_qda_2d() -> ClassifierModel {
    let ln_half = 0.5f64.ln();
    ClassifierModel::new(
        2,
        2,
        ModelWeights::Qda(vec![
            QdaClass {
                quadratic: vec![vec![-0.5, 0.0], vec![0.0, -0.5]],
                linear: vec![0.0, 0.0],
                constant: ln_half,
            },
            QdaClass {
                quadratic: vec![vec![-0.25, 0.0], vec![0.0, -0.25]],
                linear: vec![0.5, 0.5],
                constant: -0.5 - 0.5 * 4.0f64.ln() + ln_half,
            },
        ]),
    )
    .expect("fixture is well formed")
}

/// One-dimensional classifier: class 1 on `(0.2, 0.8]`, class 2 elsewhere.
pub fn fixture_step_1d() -> ClassifierModel {
    ClassifierModel::new(
        1,
        2,
        ModelWeights::TreeEnsemble(ForestWeights {
            trees: vec![Tree {
                nodes: vec![
                    TreeNode::Split { feature: 0, threshold: 0.2, left: 1, right: 2 },
                    TreeNode::Leaf { leaf: 2 },
                    TreeNode::Split { feature: 0, threshold: 0.8, left: 3, right: 4 },
                    TreeNode::Leaf { leaf: 1 },
                    TreeNode::Leaf { leaf: 2 },
                ],
            }],
        }),
    )
    .expect("fixture is well formed")
}

/// Stand-in linear model (not trained on any dataset).
pub fn fixture_linear_2d() -> ClassifierModel {
    ClassifierModel::new(
        2,
        2,
        ModelWeights::Linear(vec![
            LinearClass { weights: vec![0.0, 0.0], bias: 0.9 },
            LinearClass { weights: vec![1.0, 0.5], bias: 0.0 },
        ]),
    )
    .expect("fixture is well formed")
    .with_note("stand-in demonstration model; not trained on real data")
}

/// Stand-in three-tree majority-vote ensemble (not trained on any dataset).
pub fn fixture_forest_2d() -> ClassifierModel {
    let stump = |feature, threshold| Tree {
        nodes: vec![
            TreeNode::Split { feature, threshold, left: 1, right: 2 },
            TreeNode::Leaf { leaf: 1 },
            TreeNode::Leaf { leaf: 2 },
        ],
    };
    ClassifierModel::new(
        2,
        2,
        ModelWeights::TreeEnsemble(ForestWeights {
            trees: vec![
                stump(0, 0.75),
                stump(1, 0.8),
                Tree {
                    nodes: vec![
                        TreeNode::Split { feature: 0, threshold: 0.3, left: 1, right: 4 },
                        TreeNode::Split { feature: 1, threshold: 0.3, left: 2, right: 3 },
                        TreeNode::Leaf { leaf: 2 },
                        TreeNode::Leaf { leaf: 1 },
                        TreeNode::Leaf { leaf: 1 },
                    ],
                },
            ],
        }),
    )
    .expect("fixture is well formed")
    .with_note("stand-in demonstration model; not trained on real data")
}

/// Closed-form l2 robustness radius of the QDA fixture at `point`:
/// distance to the separating circle.
pub fn qda_radius_closed_form(point: [f64; 2]) -> f64 {
    let r = (point[0] + 1.0).hypot(point[1] + 1.0);
    (QDA_CIRCLE_RADIUS - r).abs()
}

/// The l_inf radius implied by the l2 one (`theta / sqrt 2`).
pub fn qda_linf_lower_bound(point: [f64; 2]) -> f64 {
    qda_radius_closed_form(point) * std::f64::consts::FRAC_1_SQRT_2
}
