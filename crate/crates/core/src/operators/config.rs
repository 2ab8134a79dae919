use crate::error::{Error, Result};
use crate::netcore::{MlpShape, Subnet, DEFAULT_HARMONICS, DEFAULT_SCALE};

/// Architecture of a branch/trunk operator network.
///
/// `layers` counts weight layers per sub-network (`L`), so each sub-network
/// has `L - 1` hidden layers of `width` neurons followed by a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub layers: usize,
    pub width: usize,
    pub branch_inputs: usize,
    pub coord_dim: usize,
    pub n_vars: usize,
    pub latent: usize,
    pub fusion_enabled: bool,
    /// Also condition the last trunk hidden layer (with `S^{L-2}`).
    pub condition_last_hidden: bool,
    pub harmonics: usize,
    pub rowdy_scale: f64,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            layers: 4,
            width: 64,
            branch_inputs: 2,
            coord_dim: 2,
            n_vars: 4,
            latent: 64,
            fusion_enabled: true,
            condition_last_hidden: false,
            harmonics: DEFAULT_HARMONICS,
            rowdy_scale: DEFAULT_SCALE,
            seed: 0,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 {
            return Err(Error::contract(format!(
                "layers must be >= 2, got {}",
                self.layers
            )));
        }
        for (name, v) in [
            ("width", self.width),
            ("branch_inputs", self.branch_inputs),
            ("coord_dim", self.coord_dim),
            ("n_vars", self.n_vars),
            ("latent", self.latent),
        ] {
            if v == 0 {
                return Err(Error::contract(format!("{name} must be positive")));
            }
        }
        if !(self.rowdy_scale > 0.0) {
            return Err(Error::contract("rowdy_scale must be positive"));
        }
        Ok(())
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers - 1
    }

    /// Number of trunk hidden layers that receive branch conditioning.
    pub fn conditioned_layers(&self) -> usize {
        if !self.fusion_enabled {
            0
        } else if self.condition_last_hidden {
            self.layers - 1
        } else {
            self.layers - 2
        }
    }

    pub fn branch_shape(&self) -> MlpShape {
        let mut widths = vec![self.branch_inputs];
        widths.extend(std::iter::repeat_n(self.width, self.hidden_layers()));
        widths.push(self.latent * self.n_vars);
        MlpShape {
            subnet: Subnet::Branch,
            widths,
            harmonics: self.harmonics,
        }
    }

    pub fn trunk_shape(&self) -> MlpShape {
        let mut widths = vec![self.coord_dim];
        widths.extend(std::iter::repeat_n(self.width, self.hidden_layers()));
        widths.push(self.latent);
        MlpShape {
            subnet: Subnet::Trunk,
            widths,
            harmonics: self.harmonics,
        }
    }
}
