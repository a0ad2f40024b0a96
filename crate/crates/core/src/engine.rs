//! Compact climate-economy dynamics.
//!
//! Each region runs a Cobb-Douglas economy with exogenous productivity,
//! population and emission-intensity paths. Mitigation costs a share of
//! output and removes emissions; saving converts net output into capital.
//! A single carbon box feeds a one-equation temperature response, and
//! temperature feeds back through a quadratic damage term.
//!
//! [`step_world`] is a pure function: it never mutates its input.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Number of regions in every world.
pub const NUM_REGIONS: usize = 27;

/// Static per-region calibration.
///
/// Serialized names follow the calibration file columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub id: usize,
    /// Initial total factor productivity.
    #[serde(rename = "A0")]
    pub tfp0: f64,
    /// Productivity growth per year.
    #[serde(rename = "gA")]
    pub tfp_growth: f64,
    /// Initial population, millions.
    #[serde(rename = "L0")]
    pub population0: f64,
    #[serde(rename = "gL")]
    pub population_growth: f64,
    #[serde(rename = "K0")]
    pub capital0: f64,
    /// Initial emission intensity, GtC per output unit.
    #[serde(rename = "sigma0")]
    pub intensity0: f64,
    /// Yearly intensity decline.
    #[serde(rename = "gSigma")]
    pub intensity_decline: f64,
    /// Abatement cost at full mitigation, as a fraction of output.
    #[serde(rename = "theta1")]
    pub abatement_coeff: f64,
    #[serde(rename = "gamma", default = "default_gamma")]
    pub capital_elasticity: f64,
    #[serde(rename = "delta", default = "default_delta")]
    pub depreciation: f64,
}

fn default_gamma() -> f64 {
    0.3
}

fn default_delta() -> f64 {
    0.1
}

impl RegionParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.tfp0,
            self.tfp_growth,
            self.population0,
            self.population_growth,
            self.capital0,
            self.intensity0,
            self.intensity_decline,
            self.abatement_coeff,
            self.capital_elasticity,
            self.depreciation,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return invalid(format!("region {}: non-finite parameter", self.id));
        }
        if self.tfp0 <= 0.0 || self.population0 <= 0.0 {
            return invalid(format!("region {}: A0 and L0 must be positive", self.id));
        }
        if self.capital0 < 0.0 || self.intensity0 < 0.0 || self.abatement_coeff < 0.0 {
            return invalid(format!(
                "region {}: K0, sigma0 and theta1 must be non-negative",
                self.id
            ));
        }
        if !(self.capital_elasticity > 0.0 && self.capital_elasticity < 1.0) {
            return invalid(format!("region {}: gamma must lie in (0, 1)", self.id));
        }
        if !(0.0..=1.0).contains(&self.depreciation) {
            return invalid(format!("region {}: delta must lie in [0, 1]", self.id));
        }
        Ok(())
    }
}

/// Evolving per-region state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionState {
    pub capital: f64,
    pub productivity: f64,
    pub population: f64,
    pub intensity: f64,
    pub mitigation_rate: f64,
    pub savings_rate: f64,
    pub last_gross_output: f64,
    pub last_net_output: f64,
    pub last_emissions: f64,
}

impl RegionState {
    pub fn initial(params: &RegionParams) -> Self {
        RegionState {
            capital: params.capital0,
            productivity: params.tfp0,
            population: params.population0,
            intensity: params.intensity0,
            mitigation_rate: 0.0,
            savings_rate: 0.0,
            last_gross_output: 0.0,
            last_net_output: 0.0,
            last_emissions: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        [
            self.capital,
            self.productivity,
            self.population,
            self.intensity,
            self.mitigation_rate,
            self.savings_rate,
            self.last_gross_output,
            self.last_net_output,
            self.last_emissions,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Carbon above the pre-industrial reference and warming above pre-industrial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateState {
    pub carbon_stock: f64,
    pub temperature: f64,
}

impl ClimateState {
    /// State whose temperature is in equilibrium with the given carbon stock,
    /// so a zero-emission path can only cool.
    pub fn at_equilibrium(carbon_stock: f64, params: &ClimateParams) -> Self {
        ClimateState {
            carbon_stock,
            temperature: params.forcing(carbon_stock) / params.feedback(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClimateParams {
    /// Pre-industrial carbon reference, GtC.
    pub preindustrial_carbon: f64,
    /// Fraction of the carbon stock removed per step.
    pub carbon_decay: f64,
    /// Forcing for a doubling of atmospheric carbon, W/m².
    pub forcing_per_doubling: f64,
    /// Equilibrium warming per doubling, °C.
    pub climate_sensitivity: f64,
    /// Temperature response per unit forcing imbalance per step.
    pub thermal_inertia: f64,
    /// Quadratic damage coefficient.
    pub damage_coeff: f64,
    pub abatement_exponent: f64,
    pub step_years: f64,
    pub horizon: usize,
    /// Carbon stock at the start of an episode; temperature starts in
    /// equilibrium with it.
    pub initial_carbon: f64,
}

impl Default for ClimateParams {
    fn default() -> Self {
        ClimateParams {
            preindustrial_carbon: 588.0,
            carbon_decay: 0.02,
            forcing_per_doubling: 3.7,
            climate_sensitivity: 3.0,
            thermal_inertia: 0.2,
            damage_coeff: 0.003,
            abatement_exponent: 2.6,
            step_years: 5.0,
            horizon: 20,
            initial_carbon: 180.0,
        }
    }
}

impl ClimateParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.preindustrial_carbon,
            self.carbon_decay,
            self.forcing_per_doubling,
            self.climate_sensitivity,
            self.thermal_inertia,
            self.damage_coeff,
            self.abatement_exponent,
            self.step_years,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return invalid("climate parameters must be finite and positive");
        }
        if self.carbon_decay > 1.0 {
            return invalid("carbon_decay must not exceed 1");
        }
        if self.horizon < 1 {
            return invalid("horizon must be at least 1");
        }
        if !(self.initial_carbon.is_finite() && self.initial_carbon >= 0.0) {
            return invalid("initial_carbon must be non-negative");
        }
        Ok(())
    }

    /// Radiative forcing for a carbon stock above pre-industrial.
    pub fn forcing(&self, carbon_stock: f64) -> f64 {
        self.forcing_per_doubling
            * ((carbon_stock + self.preindustrial_carbon) / self.preindustrial_carbon).log2()
    }

    /// Forcing per degree of warming, F2x / ECS.
    pub fn feedback(&self) -> f64 {
        self.forcing_per_doubling / self.climate_sensitivity
    }

    pub fn initial_climate(&self) -> ClimateState {
        ClimateState::at_equilibrium(self.initial_carbon, self)
    }
}

/// Mitigation and savings rates chosen by one region for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub mitigation: f64,
    pub savings: f64,
}

impl Action {
    pub fn new(mitigation: f64, savings: f64) -> Self {
        Action {
            mitigation,
            savings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub regions: Vec<RegionState>,
    pub climate: ClimateState,
}

impl World {
    pub fn initial(regions: &[RegionParams], climate: &ClimateParams) -> Self {
        World {
            regions: regions.iter().map(RegionState::initial).collect(),
            climate: climate.initial_climate(),
        }
    }

    pub fn total_emissions(&self) -> f64 {
        self.regions.iter().map(|r| r.last_emissions).sum()
    }

    pub fn total_net_output(&self) -> f64 {
        self.regions.iter().map(|r| r.last_net_output).sum()
    }

    pub fn total_gross_output(&self) -> f64 {
        self.regions.iter().map(|r| r.last_gross_output).sum()
    }

    /// Consumption `(1 − s)·Q` of the last step; logged as a reward proxy,
    /// never used by any policy.
    pub fn total_consumption(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| (1.0 - r.savings_rate) * r.last_net_output)
            .sum()
    }
}

/// Cobb-Douglas gross output `A·K^γ·L^(1−γ)`.
pub fn production(params: &RegionParams, state: &RegionState) -> f64 {
    let gamma = params.capital_elasticity;
    if state.capital <= 0.0 {
        return 0.0;
    }
    state.productivity * state.capital.powf(gamma) * state.population.powf(1.0 - gamma)
}

/// Output after quadratic damages and abatement spending.
pub fn net_output(
    gross: f64,
    mitigation: f64,
    temperature: f64,
    region: &RegionParams,
    climate: &ClimateParams,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&mitigation) {
        return invalid(format!("mitigation rate {mitigation} outside [0, 1]"));
    }
    let damage_factor = 1.0 / (1.0 + climate.damage_coeff * temperature * temperature);
    let abatement = region.abatement_coeff * mitigation.powf(climate.abatement_exponent);
    Ok(gross * damage_factor * (1.0 - abatement))
}

/// Advances the world by one step under the given per-region actions.
pub fn step_world(
    world: &World,
    actions: &[Action],
    regions: &[RegionParams],
    climate: &ClimateParams,
) -> Result<World> {
    if actions.len() != world.regions.len() || regions.len() != world.regions.len() {
        return invalid(format!(
            "expected {} actions and region parameter sets, got {} and {}",
            world.regions.len(),
            actions.len(),
            regions.len()
        ));
    }
    if !world.climate.carbon_stock.is_finite() || !world.climate.temperature.is_finite() {
        return invalid("non-finite climate state");
    }
    let dt = climate.step_years;
    let temperature = world.climate.temperature;
    let mut next_regions = Vec::with_capacity(world.regions.len());
    let mut emissions_total = 0.0;
    for ((state, params), action) in world.regions.iter().zip(regions).zip(actions) {
        if !state.is_finite() {
            return invalid(format!("region {}: non-finite state", params.id));
        }
        if !(0.0..=1.0).contains(&action.savings) {
            return invalid(format!(
                "region {}: savings rate {} outside [0, 1]",
                params.id, action.savings
            ));
        }
        let gross = production(params, state);
        let net = net_output(gross, action.mitigation, temperature, params, climate)?;
        let emissions = state.intensity * (1.0 - action.mitigation) * gross * dt;
        emissions_total += emissions;
        let capital =
            (1.0 - params.depreciation).powf(dt) * state.capital + dt * action.savings * net;
        next_regions.push(RegionState {
            capital: capital.max(0.0),
            productivity: state.productivity * (1.0 + params.tfp_growth).powf(dt),
            population: state.population * (1.0 + params.population_growth).powf(dt),
            intensity: state.intensity * (1.0 - params.intensity_decline).powf(dt),
            mitigation_rate: action.mitigation,
            savings_rate: action.savings,
            last_gross_output: gross,
            last_net_output: net,
            last_emissions: emissions,
        });
    }
    let carbon_stock =
        ((1.0 - climate.carbon_decay) * world.climate.carbon_stock + emissions_total).max(0.0);
    let forcing = climate.forcing(carbon_stock);
    let temperature =
        temperature + climate.thermal_inertia * (forcing - climate.feedback() * temperature);
    Ok(World {
        regions: next_regions,
        climate: ClimateState {
            carbon_stock,
            temperature,
        },
    })
}
