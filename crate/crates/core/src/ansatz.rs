//! Hamiltonian-variational ansatz for the boundary-field chain.
//!
//! The circuit starts from a Hadamard layer on `|0…0⟩` and repeats, per layer:
//! `RX(θ_x)` on every site, `RZZ(θ_zz)` on the pairs (1,2),(3,4),… then
//! (2,3),(4,5),…, and a boundary `RZ` on sites 1 and L. In tied mode the two
//! boundary rotations share one parameter with opposite signs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::IsingChainSpec;
use crate::statevector::{Circuit, Gate, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// `RZ(φ)` on site 1 and `RZ(-φ)` on site L.
    Tied,
    /// Independent left and right boundary angles.
    Untied,
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::Tied => "tied",
            BoundaryMode::Untied => "untied",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tied" => Ok(BoundaryMode::Tied),
            "untied" => Ok(BoundaryMode::Untied),
            other => Err(Error::Config(format!("unknown boundary mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HvaConfig {
    pub layers: usize,
    pub boundary_mode: BoundaryMode,
}

impl HvaConfig {
    pub fn new(layers: usize, boundary_mode: BoundaryMode) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidParameter("ansatz needs at least one layer".into()));
        }
        Ok(Self {
            layers,
            boundary_mode,
        })
    }

    pub fn tied(layers: usize) -> Result<Self> {
        Self::new(layers, BoundaryMode::Tied)
    }

    pub fn params_per_layer(&self) -> usize {
        match self.boundary_mode {
            BoundaryMode::Tied => 3,
            BoundaryMode::Untied => 4,
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers * self.params_per_layer()
    }

    /// `layer{i}.zz`, `layer{i}.x`, `layer{i}.z` and, untied, `layer{i}.zr`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.num_params());
        for layer in 1..=self.layers {
            names.push(format!("layer{layer}.zz"));
            names.push(format!("layer{layer}.x"));
            names.push(format!("layer{layer}.z"));
            if self.boundary_mode == BoundaryMode::Untied {
                names.push(format!("layer{layer}.zr"));
            }
        }
        names
    }

    /// Total gate count for a chain of `length` sites.
    pub fn gate_count(&self, length: usize) -> usize {
        length + self.layers * (length + (length - 1) + 2)
    }
}

/// Variational angles in layer-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(config: &HvaConfig) -> Self {
        Self(vec![0.0; config.num_params()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Negates the boundary-rotation angles, mapping the state to its global spin flip.
    pub fn with_flipped_boundary(&self, config: &HvaConfig) -> Self {
        let per = config.params_per_layer();
        let values = self
            .0
            .iter()
            .enumerate()
            .map(|(k, &v)| if k % per >= 2 { -v } else { v })
            .collect();
        Self(values)
    }
}

pub fn build_circuit(config: &HvaConfig, length: usize, params: &ParamVector) -> Result<Circuit> {
    if length < 2 {
        return Err(Error::InvalidSize(length));
    }
    if params.len() != config.num_params() {
        return Err(Error::ParameterCount {
            expected: config.num_params(),
            found: params.len(),
        });
    }
    let mut circuit = Circuit::new(length, config.param_names());
    for site in 1..=length {
        circuit.push(Gate::Hadamard(site))?;
    }
    let per = config.params_per_layer();
    for layer in 0..config.layers {
        let base = layer * per;
        let (zz, x, z) = (base, base + 1, base + 2);
        for site in 1..=length {
            circuit.push_param(Gate::Rx(site, 0.0), x, 1.0)?;
        }
        for start in [1, 2] {
            for left in (start..length).step_by(2) {
                circuit.push_param(Gate::Rzz(left, left + 1, 0.0), zz, 1.0)?;
            }
        }
        circuit.push_param(Gate::Rz(1, 0.0), z, 1.0)?;
        match config.boundary_mode {
            BoundaryMode::Tied => circuit.push_param(Gate::Rz(length, 0.0), z, -1.0)?,
            BoundaryMode::Untied => circuit.push_param(Gate::Rz(length, 0.0), base + 3, 1.0)?,
        }
    }
    circuit.bind(params.as_slice())?;
    Ok(circuit)
}

pub fn run_ansatz(config: &HvaConfig, length: usize, params: &ParamVector) -> Result<StateVector> {
    build_circuit(config, length, params)?.run()
}

/// Optimal parameters keyed by name, with enough metadata to replay the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub length: usize,
    pub layers: usize,
    pub boundary_mode: BoundaryMode,
    pub spec: IsingChainSpec,
    pub params: BTreeMap<String, f64>,
}

impl ParamRecord {
    pub fn new(config: &HvaConfig, spec: &IsingChainSpec, params: &ParamVector) -> Result<Self> {
        if params.len() != config.num_params() {
            return Err(Error::ParameterCount {
                expected: config.num_params(),
                found: params.len(),
            });
        }
        Ok(Self {
            length: spec.length,
            layers: config.layers,
            boundary_mode: config.boundary_mode,
            spec: *spec,
            params: config
                .param_names()
                .into_iter()
                .zip(params.as_slice().iter().copied())
                .collect(),
        })
    }

    pub fn config(&self) -> Result<HvaConfig> {
        HvaConfig::new(self.layers, self.boundary_mode)
    }

    pub fn param_vector(&self) -> Result<ParamVector> {
        let config = self.config()?;
        config
            .param_names()
            .iter()
            .map(|name| {
                self.params
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("missing parameter `{name}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(ParamVector)
    }
}
