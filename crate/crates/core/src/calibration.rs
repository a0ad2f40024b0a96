//! Region calibration: CSV loading and a seeded synthetic generator.
//!
//! The calibration file has one header line followed by one record per region:
//!
//! ```text
//! id,A0,gA,L0,gL,K0,sigma0,gSigma,theta1,gamma,delta
//! ```
//!
//! Exactly 27 records with ids 0..26 are required.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{RegionParams, NUM_REGIONS};
use crate::error::{Error, Result};

pub const CALIBRATION_COLUMNS: [&str; 11] = [
    "id", "A0", "gA", "L0", "gL", "K0", "sigma0", "gSigma", "theta1", "gamma", "delta",
];

/// Synthetic region archetypes, nine of each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Archetype {
    HighCapital,
    HighPopulation,
    Small,
}

impl Archetype {
    fn template(self, id: usize) -> RegionParams {
        let (tfp0, tfp_growth, population0, population_growth, capital0, intensity0, theta1) =
            match self {
                Archetype::HighCapital => (0.16, 0.012, 25.0, 0.003, 100.0, 0.072, 0.05),
                Archetype::HighPopulation => (0.085, 0.018, 100.0, 0.008, 25.0, 0.108, 0.09),
                Archetype::Small => (0.125, 0.015, 10.0, 0.010, 8.0, 0.084, 0.12),
            };
        RegionParams {
            id,
            tfp0,
            tfp_growth,
            population0,
            population_growth,
            capital0,
            intensity0,
            intensity_decline: 0.01,
            abatement_coeff: theta1,
            capital_elasticity: 0.3,
            depreciation: 0.1,
        }
    }
}

/// Seeded synthetic calibration: 9 high-capital, 9 high-population and
/// 9 small regions, shuffled over ids, each level jittered by ±10%.
pub fn synthetic(seed: u64) -> Vec<RegionParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled_archetypes(&mut rng)
        .into_iter()
        .enumerate()
        .map(|(id, kind)| {
            let mut p = kind.template(id);
            let mut jitter = |v: f64| v * rng.gen_range(0.9..1.1);
            p.tfp0 = jitter(p.tfp0);
            p.population0 = jitter(p.population0);
            p.capital0 = jitter(p.capital0);
            p.intensity0 = jitter(p.intensity0);
            p.abatement_coeff = jitter(p.abatement_coeff);
            p
        })
        .collect()
}

/// Archetype of each region in [`synthetic`] output, recovered from the same seed.
pub fn synthetic_archetypes(seed: u64) -> Vec<Archetype> {
    shuffled_archetypes(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn shuffled_archetypes(rng: &mut ChaCha8Rng) -> Vec<Archetype> {
    let mut kinds: Vec<Archetype> = [
        Archetype::HighCapital,
        Archetype::HighPopulation,
        Archetype::Small,
    ]
    .iter()
    .flat_map(|k| std::iter::repeat_n(*k, NUM_REGIONS / 3))
    .collect();
    kinds.shuffle(rng);
    kinds
}

/// Checks the record count, the id set and every record's parameter ranges.
pub fn validate(regions: &[RegionParams]) -> Result<()> {
    if regions.len() != NUM_REGIONS {
        return Err(Error::Calibration(format!(
            "expected {NUM_REGIONS} regions, found {}",
            regions.len()
        )));
    }
    for (i, r) in regions.iter().enumerate() {
        if r.id != i {
            return Err(Error::Calibration(format!(
                "record {i} has id {}; ids must be 0..26 in order",
                r.id
            )));
        }
        r.validate()
            .map_err(|e| Error::Calibration(e.to_string()))?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RegionParams>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != CALIBRATION_COLUMNS {
        return Err(Error::Calibration(format!(
            "header must be {}, found {}",
            CALIBRATION_COLUMNS.join(","),
            found.join(",")
        )));
    }
    let mut regions: Vec<RegionParams> = rdr
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Calibration(e.to_string()))?;
    regions.sort_by_key(|r| r.id);
    for pair in regions.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(Error::Calibration(format!("duplicate id {}", pair[0].id)));
        }
    }
    validate(&regions)?;
    Ok(regions)
}

pub fn load(path: &Path) -> Result<Vec<RegionParams>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))?;
    read_csv(file)
}

pub fn write_csv<W: Write>(regions: &[RegionParams], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in regions {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
