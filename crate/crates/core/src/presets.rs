//! The three benchmark plants used throughout the experiments.

use serde::{Deserialize, Serialize};

use crate::arx::ArxParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Example1,
    Example2,
    Example3,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Example1, Preset::Example2, Preset::Example3];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Example1 => "example1",
            Preset::Example2 => "example2",
            Preset::Example3 => "example3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn coefficients(self) -> (&'static [f64], &'static [f64]) {
        match self {
            Preset::Example1 => (&[1.18, -0.48, 0.45, -0.41], &[0.28, 0.14, 0.16, 0.03]),
            Preset::Example2 => (&[-0.01, -0.46], &[0.1, 0.086, 0.02]),
            // a3 = -0.2, a4 = +0.03: the sign pattern with a3 = +0.2, a4 = -0.03
            // has an output pole outside the unit circle (|z| = 1.0216).
            Preset::Example3 => (&[-0.66, -0.79, -0.2, 0.03, 0.0, 0.09], &[0.32, 0.06, -0.2, -0.01, -0.03, 0.001]),
        }
    }

    pub fn params(self) -> ArxParams {
        let (a, b) = self.coefficients();
        ArxParams::new(a.to_vec(), b.to_vec()).expect("preset coefficients are valid")
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}
