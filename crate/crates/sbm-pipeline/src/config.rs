//! Run configuration: a single JSON document per experiment.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sbm_core::geometry::{EmbeddedShape, ParamRange};
use sbm_core::math::Vec2;
use sbm_core::mesh::Rect;
use sbm_core::solver::SolverKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Moving rectangle: the parameter is the y-coordinate of its center.
    RectYcenter,
    /// Rectangle with parametrized aspect ratio, fixed at the box center.
    RectAspect,
    /// Fixed disc hole, manufactured-solution mesh refinement study.
    DiscConvergence,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Direct,
    Cg,
}

impl SolverChoice {
    pub fn kind(self) -> SolverKind {
        match self {
            SolverChoice::Direct => SolverKind::Direct,
            SolverChoice::Cg => SolverKind::ConjugateGradient {
                rel_tol: 1e-12,
                max_iters: 200_000,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Background box as [x0, x1, y0, y1].
    pub background: [f64; 4],
    pub h: f64,
    pub mu_range: [f64; 2],
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_mode_counts")]
    pub mode_counts: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_quadrature_order")]
    pub quadrature_order: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub solver: SolverChoice,
    /// Mesh sizes for the convergence study, finest last.
    #[serde(default = "default_h_list")]
    pub h_list: Vec<f64>,
    #[serde(default = "default_disc_radius")]
    pub disc_radius: f64,
    /// Parameter values whose fields are exported to VTK by `report`.
    #[serde(default)]
    pub export_mu: Option<Vec<f64>>,
}

fn default_n_test() -> usize {
    50
}

fn default_mode_counts() -> Vec<usize> {
    vec![2, 5, 10, 20, 30, 40, 50, 100]
}

fn default_alpha() -> f64 {
    4.0
}

fn default_quadrature_order() -> usize {
    3
}

fn default_h_list() -> Vec<f64> {
    vec![0.14, 0.07, 0.035]
}

fn default_disc_radius() -> f64 {
    0.5
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("writing config {}", path.display()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            bail!("mesh size h must be positive");
        }
        if self.background[1] <= self.background[0] || self.background[3] <= self.background[2] {
            bail!("background box must have positive extent");
        }
        if self.mu_range[1] < self.mu_range[0] {
            bail!("mu_range is empty");
        }
        if !(1..=3).contains(&self.quadrature_order) {
            bail!("quadrature_order must be 1, 2 or 3");
        }
        if !(self.alpha > 0.0) {
            bail!("alpha must be positive");
        }
        if self.experiment != Experiment::DiscConvergence {
            if self.n_train == 0 {
                bail!("n_train must be at least 1");
            }
            if self.mode_counts.is_empty() {
                bail!("mode_counts must not be empty");
            }
            let max_modes = *self.mode_counts.iter().max().unwrap();
            if max_modes > self.n_train {
                bail!(
                    "largest requested mode count ({max_modes}) exceeds the training size ({})",
                    self.n_train
                );
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.background[0],
            self.background[1],
            self.background[2],
            self.background[3],
        )
    }

    pub fn mu_range(&self) -> ParamRange {
        ParamRange::new(self.mu_range[0], self.mu_range[1])
    }

    pub fn shape(&self) -> Result<EmbeddedShape> {
        match self.experiment {
            Experiment::RectYcenter => Ok(EmbeddedShape::rect_ycenter(self.mu_range())),
            Experiment::RectAspect => Ok(EmbeddedShape::rect_aspect(
                self.bounds().center(),
                self.mu_range(),
            )),
            Experiment::DiscConvergence => {
                bail!("the convergence experiment has no parametrized shape")
            }
        }
    }

    /// Seed for drawing the test set, distinct from the training stream.
    pub fn test_seed(&self) -> u64 {
        self.seed ^ 0x9e37_79b9_7f4a_7c15
    }

    /// Parameter values exported to VTK by `report`.
    pub fn export_parameters(&self) -> Vec<f64> {
        if let Some(list) = &self.export_mu {
            return list.clone();
        }
        match self.experiment {
            Experiment::RectYcenter => vec![0.403, -0.015],
            Experiment::RectAspect => vec![1.0, 4.0],
            Experiment::DiscConvergence => vec![],
        }
    }

    /// Moving-rectangle reference setup: 400 training samples on the
    /// [-2,2]x[-1,1] box at h = 0.035.
    pub fn experiment1(output_dir: PathBuf) -> Self {
        RunConfig {
            experiment: Experiment::RectYcenter,
            background: [-2.0, 2.0, -1.0, 1.0],
            h: 0.035,
            mu_range: [-0.5, 0.5],
            n_train: 400,
            n_test: 50,
            mode_counts: vec![2, 5, 10, 20, 30, 40, 50, 100, 200, 300],
            alpha: 4.0,
            quadrature_order: 3,
            seed: 7,
            output_dir,
            solver: SolverChoice::Direct,
            h_list: default_h_list(),
            disc_radius: default_disc_radius(),
            export_mu: None,
        }
    }

    /// Aspect-ratio reference setup on the [-0.7,0.7]^2 box.
    pub fn experiment2(output_dir: PathBuf) -> Self {
        RunConfig {
            experiment: Experiment::RectAspect,
            background: [-0.7, 0.7, -0.7, 0.7],
            h: 0.035,
            mu_range: [0.29, 6.67],
            n_train: 400,
            n_test: 50,
            mode_counts: vec![2, 5, 10, 20, 50],
            alpha: 4.0,
            quadrature_order: 3,
            seed: 11,
            output_dir,
            solver: SolverChoice::Direct,
            h_list: default_h_list(),
            disc_radius: default_disc_radius(),
            export_mu: None,
        }
    }

    /// Disc-hole manufactured-solution refinement study.
    pub fn convergence_study(output_dir: PathBuf) -> Self {
        RunConfig {
            experiment: Experiment::DiscConvergence,
            background: [-2.0, 2.0, -1.0, 1.0],
            h: 0.035,
            mu_range: [0.5, 0.5],
            n_train: 1,
            n_test: 0,
            mode_counts: vec![1],
            alpha: 4.0,
            quadrature_order: 3,
            seed: 1,
            output_dir,
            solver: SolverChoice::Direct,
            h_list: default_h_list(),
            disc_radius: default_disc_radius(),
            export_mu: None,
        }
    }

    /// Disc shape used by the convergence study.
    pub fn disc_hole(&self) -> sbm_core::geometry::Hole {
        sbm_core::geometry::Hole::Disc {
            center: Vec2::new(
                0.5 * (self.background[0] + self.background[1]),
                0.5 * (self.background[2] + self.background[3]),
            ),
            radius: self.disc_radius,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_preserves_config() {
        let config = RunConfig::experiment1(PathBuf::from("runs/exp1"));
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.experiment, Experiment::RectYcenter);
        assert_eq!(back.mode_counts, config.mode_counts);
        assert_eq!(back.seed, config.seed);
    }

    #[test]
    fn defaults_fill_in_optional_fields() {
        let text = r#"{
            "experiment": "rect_ycenter",
            "background": [-2.0, 2.0, -1.0, 1.0],
            "h": 0.1,
            "mu_range": [-0.5, 0.5],
            "n_train": 150,
            "seed": 3,
            "output_dir": "out"
        }"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.n_test, 50);
        assert_eq!(config.alpha, 4.0);
        assert_eq!(config.quadrature_order, 3);
        assert_eq!(config.solver, SolverChoice::Direct);
        assert!(config.validate().is_ok());
    }

    #[test]
    fn validation_rejects_oversized_mode_counts() {
        let mut config = RunConfig::experiment1(PathBuf::from("out"));
        config.n_train = 50;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("mode count"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "experiment": "rect_ycenter",
            "background": [-2.0, 2.0, -1.0, 1.0],
            "h": 0.1,
            "mu_range": [-0.5, 0.5],
            "n_train": 20,
            "seed": 3,
            "output_dir": "out",
            "typo_field": 1
        }"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn export_parameters_defaults_per_experiment() {
        let exp1 = RunConfig::experiment1(PathBuf::from("out"));
        assert_eq!(exp1.export_parameters(), vec![0.403, -0.015]);
        let mut custom = exp1.clone();
        custom.export_mu = Some(vec![0.1]);
        assert_eq!(custom.export_parameters(), vec![0.1]);
    }
}
