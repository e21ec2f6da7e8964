//! One-command reproductions of the figure scenarios, with the caption
//! parameters hard-coded as printed.

use cfnet::quantum::{Cavity, TruncationPolicy};
use cfnet::semiclassical::P1Form;
use cfnet::validation::{bistability_grid, fig3_params, fig4_params, linspace, qubit_grid};
use serde::Deserialize;

use crate::config::{Experiment, Field, Grids, Scenario, UnitMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Figure {
    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
        }
    }
}

/// K ∈ [0, 3] in steps of 0.05.
fn k_axis() -> Vec<f64> {
    linspace(0.0, 3.0, 61)
}

pub fn recipe(fig: Figure) -> Scenario {
    // Figs. 4-8 quote only γ and γ_f per 2π; Fig. 3 quotes every rate and detuning that way
    let quantum_two_pi = vec![Field::Gamma, Field::GammaF];
    let base = Scenario {
        name: fig.as_str().to_string(),
        experiment: Experiment::G2Ksweep,
        params: fig4_params(),
        grids: Grids::default(),
        cavities: vec![Cavity::A],
        truncation: TruncationPolicy::default(),
        p1_form: P1Form::Printed,
        qubit_coupling: None,
        kerr: None,
        per_two_pi: quantum_two_pi,
        unit_mode: UnitMode::Verbatim,
        output: None,
    };
    match fig {
        Figure::Fig3 => Scenario {
            experiment: Experiment::Bistability,
            params: fig3_params(),
            grids: Grids { epsilon: Some(bistability_grid()), ..Grids::default() },
            per_two_pi: vec![Field::Gamma, Field::GammaF, Field::Kappa, Field::Chi, Field::DeltaS, Field::Delta],
            ..base
        },
        Figure::Fig4 => Scenario { grids: Grids { k: Some(k_axis()), delta_s: Some(vec![50.0]), ..Grids::default() }, ..base },
        Figure::Fig5 => Scenario {
            grids: Grids { k: Some(k_axis()), delta_s: Some(vec![50.0, 10.0]), ..Grids::default() },
            cavities: vec![Cavity::A, Cavity::C],
            ..base
        },
        Figure::Fig6 => Scenario {
            experiment: Experiment::G2Map,
            grids: Grids {
                k: Some(linspace(0.0, 3.0, 31)),
                delta_s: Some((1..=10).map(|i| 10.0 * i as f64).collect()),
                ..Grids::default()
            },
            ..base
        },
        Figure::Fig7 => Scenario {
            experiment: Experiment::G2DriveSweep,
            grids: Grids {
                epsilon: Some((1..=20).map(|i| 0.1 * i as f64).collect()),
                k: Some(vec![1.0, 2.0]),
                delta_s: Some(vec![10.0, 30.0, 50.0]),
                ..Grids::default()
            },
            ..base
        },
        Figure::Fig8 => {
            let (g, omega, delta_qt) = qubit_grid();
            let kerr = cfnet::circuit::kerr_from_qubit(g, omega, delta_qt[0]).expect("recipe qubit values are valid");
            let mut params = fig4_params();
            params.chi = kerr.chi;
            Scenario {
                experiment: Experiment::G2ChiSweep,
                params,
                grids: Grids { delta_qt: Some(delta_qt), ..Grids::default() },
                qubit_coupling: Some((g, omega)),
                kerr: Some(kerr),
                ..base
            }
        }
    }
}
