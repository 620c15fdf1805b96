//! Canned sweep configurations for the figures the CLI can reproduce.
//!
//! Each recipe bundles one or two [`ExperimentSpec`]s with the metric the
//! figure plots. Full-scale runs use 10,000 samples over 100 nu points;
//! `--quick` shrinks every spec via [`ExperimentSpec::quicken`].

use super::ExperimentSpec;
use crate::maps::MapFlavor;
use crate::{Error, Result};

/// The recipe names `recipe` accepts, in presentation order.
pub const RECIPE_NAMES: [&str; 12] = [
    "fig4", "fig6", "fig7", "fig8", "fig9", "fig10", "fig13", "fig14", "fig15", "fig16",
    "fig17", "fig18",
];

const SAMPLES: usize = 10_000;
const NU_POINTS: usize = 100;
const SEED: u64 = 7;

/// A named sweep plus the column the figure reads.
#[derive(Clone, Debug)]
pub struct Recipe {
    pub name: &'static str,
    /// Which MSE column the figure plots, "mse_x" or "mse_beta".
    pub focus: &'static str,
    pub specs: Vec<ExperimentSpec>,
}

fn cautious(betas: Vec<f64>, bits: usize, epsilons: Vec<f64>, modes: Vec<u8>) -> ExperimentSpec {
    ExperimentSpec {
        flavor: MapFlavor::Cautious,
        betas,
        bits,
        nu_points: NU_POINTS,
        nu_band: None,
        epsilons,
        modes,
        samples: SAMPLES,
        seed: SEED,
        use_estimated_beta: false,
        scale: None,
    }
}

fn negative(betas: Vec<f64>, bits: usize, epsilons: Vec<f64>, modes: Vec<u8>) -> ExperimentSpec {
    ExperimentSpec {
        flavor: MapFlavor::NegativeBeta,
        betas,
        bits,
        nu_points: NU_POINTS,
        nu_band: None,
        epsilons,
        modes,
        samples: SAMPLES,
        seed: SEED,
        use_estimated_beta: false,
        scale: Some(2.0),
    }
}

fn estimated(mut spec: ExperimentSpec) -> ExperimentSpec {
    spec.use_estimated_beta = true;
    spec
}

/// Looks up a reproduction recipe by name.
pub fn recipe(name: &str) -> Result<Recipe> {
    let recipe = match name {
        // Decode-mode comparison across the nu band, exact beta.
        "fig4" => Recipe {
            name: "fig4",
            focus: "mse_x",
            specs: vec![cautious(vec![1.5], 16, vec![0.0], vec![0, 1, 2])],
        },
        // Estimation quality across the nu band at a longer word.
        "fig6" => Recipe {
            name: "fig6",
            focus: "mse_beta",
            specs: vec![estimated(cautious(
                vec![1.77777],
                32,
                vec![0.0],
                vec![0, 1, 2],
            ))],
        },
        "fig7" => Recipe {
            name: "fig7",
            focus: "mse_x",
            specs: vec![estimated(cautious(
                vec![1.77777],
                32,
                vec![0.0],
                vec![0, 1, 2],
            ))],
        },
        // Robustness to threshold flakiness, exact beta.
        "fig8" => Recipe {
            name: "fig8",
            focus: "mse_x",
            specs: vec![cautious(
                vec![1.5],
                16,
                vec![0.0, 0.1, 0.2, 0.3, 0.4],
                vec![0, 1],
            )],
        },
        // Flakiness with estimated beta.
        "fig9" => Recipe {
            name: "fig9",
            focus: "mse_beta",
            specs: vec![estimated(cautious(
                vec![1.5],
                16,
                vec![0.0, 0.2, 0.3, 0.4],
                vec![0, 1],
            ))],
        },
        "fig10" => Recipe {
            name: "fig10",
            focus: "mse_x",
            specs: vec![estimated(cautious(
                vec![1.5],
                16,
                vec![0.0, 0.2, 0.3, 0.4],
                vec![0, 1],
            ))],
        },
        // Negative flavor against its ordinary counterpart, exact beta.
        "fig13" => Recipe {
            name: "fig13",
            focus: "mse_x",
            specs: vec![
                negative(vec![1.5], 16, vec![0.0, 0.2, 0.3, 0.4], vec![1]),
                cautious(vec![1.5], 16, vec![0.0, 0.2, 0.3, 0.4], vec![1]),
            ],
        },
        // Negative flavor with estimated beta.
        "fig14" => Recipe {
            name: "fig14",
            focus: "mse_beta",
            specs: vec![estimated(negative(
                vec![1.5],
                16,
                vec![0.0, 0.2, 0.3, 0.4],
                vec![1],
            ))],
        },
        "fig15" => Recipe {
            name: "fig15",
            focus: "mse_x",
            specs: vec![estimated(negative(
                vec![1.5],
                16,
                vec![0.0, 0.2, 0.3, 0.4],
                vec![1],
            ))],
        },
        // Head-to-head at a sharp threshold.
        "fig16" => Recipe {
            name: "fig16",
            focus: "mse_x",
            specs: vec![
                cautious(vec![1.5], 16, vec![0.0], vec![1]),
                negative(vec![1.5], 16, vec![0.0], vec![1]),
            ],
        },
        "fig17" => Recipe {
            name: "fig17",
            focus: "mse_x",
            specs: vec![
                estimated(cautious(vec![1.5], 16, vec![0.0], vec![1])),
                estimated(negative(vec![1.5], 16, vec![0.0], vec![1])),
            ],
        },
        "fig18" => Recipe {
            name: "fig18",
            focus: "mse_beta",
            specs: vec![
                estimated(cautious(vec![1.5], 16, vec![0.0], vec![1])),
                estimated(negative(vec![1.5], 16, vec![0.0], vec![1])),
            ],
        },
        other => return Err(Error::UnknownRecipe(other.into())),
    };
    Ok(recipe)
}
