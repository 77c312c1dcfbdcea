//! Seeded synthetic fixtures.
//!
//! Every generator draws from xoshiro256++ seeded through SplitMix64
//! (`seed_from_u64`). Independent streams are split by the xoshiro jump
//! function: stream `i` is the base generator advanced by `i` jumps of
//! `2^128` steps. Uniforms take the top 53 bits of `next_u64`; normals use
//! Box-Muller (one variate per pair, the sine branch is discarded); gammas
//! use Marsaglia-Tsang, with `Gamma(a) = Gamma(a + 1) * U^(1/a)` for `a < 1`.

use alloc::format;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::dirichlet::{EvidenceRecord, Group};
use crate::error::{Error, Result};

pub type ForgeRng = Xoshiro256PlusPlus;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Stream `index` of the generator family rooted at `seed`.
pub fn stream(seed: u64, index: usize) -> ForgeRng {
    let mut rng = ForgeRng::seed_from_u64(seed);
    for _ in 0..index {
        rng.jump();
    }
    rng
}

/// Uniform on `[0, 1)`.
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_POW_M53
}

/// Uniform on `(0, 1)`.
pub fn uniform_open(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
}

/// Uniform integer in `0..n`.
pub fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    ((uniform(rng) * n as f64) as usize).min(n - 1)
}

pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let u1 = uniform_open(rng);
    let u2 = uniform(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Gamma(shape, scale) variate.
pub fn gamma(rng: &mut impl RngCore, shape: f64, scale: f64) -> f64 {
    if shape < 1.0 {
        let boost = libm::pow(uniform_open(rng), 1.0 / shape);
        return gamma(rng, shape + 1.0, scale) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / libm::sqrt(9.0 * d);
    loop {
        let x = standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = uniform_open(rng);
        if libm::log(u) < 0.5 * x * x + d - d * v + d * libm::log(v) {
            return d * v * scale;
        }
    }
}

/// Parameters of a synthetic ID/OOD evidence population.
///
/// ID records draw one "correct" component from `Gamma(id_correct_shape)`
/// and the rest from `Gamma(id_wrong_shape)`; OOD records draw all `k`
/// components from `Gamma(ood_shape)`. All gammas share `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationParams {
    pub n_id: usize,
    pub n_ood: usize,
    pub k: usize,
    pub id_correct_shape: f64,
    pub id_wrong_shape: f64,
    pub ood_shape: f64,
    pub scale: f64,
    pub seed: u64,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            n_id: 500,
            n_ood: 500,
            k: 4,
            id_correct_shape: 20.0,
            id_wrong_shape: 0.5,
            ood_shape: 2.0,
            scale: 1.0,
            seed: 42,
        }
    }
}

impl PopulationParams {
    /// OOD evidence whose total strength overlaps the ID strength, so that
    /// matched-K vacuity separates the groups only weakly (AUROC near 0.6).
    /// This is the fixture used for expansion sweeps.
    pub fn near_ood() -> Self {
        PopulationParams {
            ood_shape: 5.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_id == 0 || self.n_ood == 0 {
            return Err(Error::InvalidParameter {
                name: "population size",
                detail: format!(
                    "n_id = {}, n_ood = {}; both must be > 0",
                    self.n_id, self.n_ood
                ),
            });
        }
        if self.k < 2 {
            return Err(Error::TooFewClasses { found: self.k });
        }
        let positive = [
            ("id_correct_shape", self.id_correct_shape),
            ("id_wrong_shape", self.id_wrong_shape),
            ("ood_shape", self.ood_shape),
            ("scale", self.scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    detail: format!("{v} must be a positive finite number"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub id: Vec<EvidenceRecord>,
    pub ood: Vec<EvidenceRecord>,
}

/// ID records come from stream 0, OOD records from stream 1. Every record
/// carries a gold label drawn uniformly (ID: the boosted class).
pub fn generate_evidence_population(params: &PopulationParams) -> Result<Population> {
    params.validate()?;
    let k = params.k;

    let mut rng = stream(params.seed, 0);
    let mut id = Vec::with_capacity(params.n_id);
    for i in 0..params.n_id {
        let correct = uniform_index(&mut rng, k);
        let evidence = (0..k)
            .map(|j| {
                let shape = if j == correct {
                    params.id_correct_shape
                } else {
                    params.id_wrong_shape
                };
                gamma(&mut rng, shape, params.scale)
            })
            .collect();
        id.push(EvidenceRecord::with_letter_classes(
            format!("id-{i:05}"),
            Group::Id,
            evidence,
            Some(correct),
        )?);
    }

    let mut rng = stream(params.seed, 1);
    let mut ood = Vec::with_capacity(params.n_ood);
    for i in 0..params.n_ood {
        let label = uniform_index(&mut rng, k);
        let evidence = (0..k)
            .map(|_| gamma(&mut rng, params.ood_shape, params.scale))
            .collect();
        ood.push(EvidenceRecord::with_letter_classes(
            format!("ood-{i:05}"),
            Group::Ood,
            evidence,
            Some(label),
        )?);
    }
    Ok(Population { id, ood })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub x: [f64; 2],
    pub label: usize,
}

/// Two unit-variance Gaussian blobs centred at `(-separation/2, 0)` (label 0,
/// stream 0) and `(+separation/2, 0)` (label 1, stream 1).
pub fn generate_toy_classification(
    n_per_class: usize,
    separation: f64,
    seed: u64,
) -> Result<Vec<LabeledPoint>> {
    if n_per_class == 0 {
        return Err(Error::Empty {
            what: "toy classification class",
        });
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(Error::InvalidParameter {
            name: "separation",
            detail: format!("{separation} must be a positive finite number"),
        });
    }
    let mut points = Vec::with_capacity(2 * n_per_class);
    for label in 0..2 {
        let mut rng = stream(seed, label);
        let cx = if label == 0 {
            -separation / 2.0
        } else {
            separation / 2.0
        };
        for _ in 0..n_per_class {
            let x = cx + standard_normal(&mut rng);
            let y = standard_normal(&mut rng);
            points.push(LabeledPoint { x: [x, y], label });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn populations_are_deterministic() {
        let p = PopulationParams::default();
        assert_eq!(
            generate_evidence_population(&p).unwrap(),
            generate_evidence_population(&p).unwrap()
        );
    }

    #[test]
    fn counts_follow_params() {
        let p = PopulationParams {
            n_id: 3,
            n_ood: 7,
            ..PopulationParams::default()
        };
        let pop = generate_evidence_population(&p).unwrap();
        assert_eq!(pop.id.len(), 3);
        assert_eq!(pop.ood.len(), 7);
        assert!(pop.id.iter().all(|r| r.group() == Group::Id && r.k() == 4));
        assert!(pop.ood.iter().all(|r| r.group() == Group::Ood));
    }

    #[test]
    fn default_population_separates_by_vacuity() {
        let pop = generate_evidence_population(&PopulationParams::default()).unwrap();
        let mean = |rs: &[EvidenceRecord]| {
            rs.iter().map(|r| r.to_dirichlet().vacuity()).sum::<f64>() / rs.len() as f64
        };
        assert!(mean(&pop.ood) > mean(&pop.id));
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = PopulationParams {
            ood_shape: 0.0,
            ..PopulationParams::default()
        };
        assert!(matches!(
            generate_evidence_population(&bad),
            Err(Error::InvalidParameter {
                name: "ood_shape",
                ..
            })
        ));
        let bad = PopulationParams {
            n_ood: 0,
            ..PopulationParams::default()
        };
        assert!(generate_evidence_population(&bad).is_err());
    }

    #[test]
    fn toy_points_counts_and_determinism() {
        let a = generate_toy_classification(1, 4.0, 9).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a, generate_toy_classification(1, 4.0, 9).unwrap());
        assert_ne!(a, generate_toy_classification(1, 4.0, 10).unwrap());
        assert!(generate_toy_classification(0, 4.0, 9).is_err());
        assert!(generate_toy_classification(3, -1.0, 9).is_err());
    }

    #[test]
    fn streams_differ() {
        let mut a = stream(1, 0);
        let mut b = stream(1, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn gamma_moments() {
        let mut rng = stream(5, 0);
        for &shape in &[0.5, 2.0, 20.0] {
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| gamma(&mut rng, shape, 1.5)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            let se = (shape * 1.5 * 1.5 / n as f64).sqrt();
            assert!(
                (mean - shape * 1.5).abs() < 5.0 * se,
                "shape {shape}: mean {mean}"
            );
            assert!(
                (var / (shape * 2.25) - 1.0).abs() < 0.05,
                "shape {shape}: var {var}"
            );
            assert!(xs.iter().all(|&x| x >= 0.0));
        }
    }
}
