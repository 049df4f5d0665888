use crate::grid::TorusGrid;
use crate::poisson::PotentialField;
use serde::{Deserialize, Serialize};

/// Sign convention of the gravitational kick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gravity {
    /// Cosmological sign: kick `-dt p`, action adds `+dt D(p)`.
    Attractive,
    /// Plasma sign: kick `+dt p`, action adds `-dt D(p)`.
    Repulsive,
    /// No gravity: pure transport.
    Off,
}

impl Gravity {
    pub fn sign(self) -> f64 {
        match self {
            Gravity::Attractive => 1.0,
            Gravity::Repulsive => -1.0,
            Gravity::Off => 0.0,
        }
    }
}

/// Potentials `p(t_i)` at the interior times `t_1 .. t_{N-1}` with the kick sign.
#[derive(Debug, Clone, PartialEq)]
pub struct KickSet {
    pub potentials: Vec<PotentialField>,
    pub gravity: Gravity,
}

impl KickSet {
    pub fn zeros(grid: TorusGrid, gravity: Gravity) -> Self {
        Self { potentials: (1..grid.steps).map(|_| PotentialField::zeros(grid)).collect(), gravity }
    }

    pub fn grid(&self) -> TorusGrid {
        self.potentials[0].grid()
    }

    /// Kick strength `T / N`.
    pub fn coefficient(&self) -> f64 {
        self.grid().dt()
    }

    /// Potential at interior time `t_i`, `i = 1..N-1`.
    pub fn p(&self, i: usize) -> &PotentialField {
        &self.potentials[i - 1]
    }

    /// Signed kick field `k_i = sign * p(t_i)`: paths pay `-dt k_i(X_i)` and
    /// the potential jumps by `-dt k_i`.
    pub fn kick_field(&self, i: usize) -> Vec<f64> {
        let s = self.gravity.sign();
        self.p(i).values().iter().map(|v| s * v).collect()
    }

    pub fn kick_fields(&self) -> Vec<Vec<f64>> {
        (1..=self.potentials.len()).map(|i| self.kick_field(i)).collect()
    }
}
