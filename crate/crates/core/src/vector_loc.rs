//! Self-stabilising positioning with vector queries.
//!
//! The initiator learns the vector to the responder and the responder's
//! label, and raises each of its label coordinates to the responder's label
//! minus that vector. The per-coordinate maximum of `label - position` over
//! the population never changes, and agents attaining it spread that value
//! by one-way epidemic, so all labels end up as the true positions shifted by
//! one common vector.

use rand::Rng;

use crate::engine::{Configuration, GroundTruth, Protocol, ProtocolFault, Query, QueryModel, Update};
use crate::geometry::Point;

pub type VectorLabel = Point;

/// Per-coordinate `max_i (x_i[j] - p_i[j])`.
pub type OffsetVector = Point;

/// `x_u[j] <- max(x_u[j], x_r[j] - v_ur[j])` for every coordinate `j`.
pub fn transition_vector(u_label: &VectorLabel, r_label: &VectorLabel, v_ur: &Point) -> VectorLabel {
    let mut out = u_label.clone();
    for j in 0..out.dim() {
        let candidate = r_label[j] - v_ur[j];
        if candidate > out[j] {
            out[j] = candidate;
        }
    }
    out
}

fn raises(u_label: &VectorLabel, r_label: &VectorLabel, v_ur: &Point) -> bool {
    (0..u_label.dim()).any(|j| r_label[j] - v_ur[j] > u_label[j])
}

pub fn compute_offsets(config: &[VectorLabel], gt: &GroundTruth) -> OffsetVector {
    let k = gt.k();
    let mut m = Point::new(std::iter::repeat_n(f64::NEG_INFINITY, k));
    for (i, x) in config.iter().enumerate() {
        let p = gt.position(i);
        for j in 0..k {
            m[j] = m[j].max(x[j] - p[j]);
        }
    }
    m
}

fn scaled(tol: f64, a: f64) -> f64 {
    tol * (1.0 + a.abs())
}

/// True iff every agent attains the maximal offset in every coordinate.
pub fn oracle_vector_converged(config: &[VectorLabel], gt: &GroundTruth, tol: f64) -> bool {
    if config.len() != gt.n() {
        return false;
    }
    let m = compute_offsets(config, gt);
    config.iter().enumerate().all(|(i, x)| {
        let p = gt.position(i);
        (0..gt.k()).all(|j| (x[j] - p[j] - m[j]).abs() <= scaled(tol, m[j]))
    })
}

/// Whether agent `i` is in the maximal-offset set for coordinate `j`.
pub fn attains_offset(label: &VectorLabel, position: &[f64], offsets: &OffsetVector, j: usize, tol: f64) -> bool {
    (label[j] - position[j] - offsets[j]).abs() <= scaled(tol, offsets[j])
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VectorPositioning;

impl Protocol for VectorPositioning {
    type State = VectorLabel;

    fn query_model(&self) -> QueryModel {
        QueryModel::InitiatorVector
    }

    #[inline]
    fn interact(
        &self,
        initiator: &VectorLabel,
        responder: &VectorLabel,
        query: &Query<'_>,
    ) -> Result<Update<VectorLabel>, ProtocolFault> {
        let v = query.vector()?;
        if !raises(initiator, responder, &v) {
            return Ok(Update::Unchanged);
        }
        Ok(Update::Initiator(transition_vector(initiator, responder, &v)))
    }
}

/// Grid spacing for drawn labels. Positions and labels on a common dyadic
/// grid of bounded magnitude make every label update exact in `f64`.
pub const LABEL_GRID: f64 = 1.0 / (1u64 << 40) as f64;

/// Named initial-label recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRecipe {
    /// Uniform in `[-range, range]^k`.
    Uniform,
    /// Every agent holds the same label.
    AllEqual,
    /// Labels equal positions except one agent pushed far up.
    SingleOutlier,
}

impl LabelRecipe {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "uniform" | "random" => Some(LabelRecipe::Uniform),
            "all-equal" => Some(LabelRecipe::AllEqual),
            "single-outlier" => Some(LabelRecipe::SingleOutlier),
            _ => None,
        }
    }
}

fn grid_uniform<R: Rng + ?Sized>(rng: &mut R, range: f64) -> f64 {
    let steps = (range / LABEL_GRID) as i64;
    rng.gen_range(-steps..=steps) as f64 * LABEL_GRID
}

pub fn initial_labels<R: Rng + ?Sized>(
    gt: &GroundTruth,
    recipe: LabelRecipe,
    range: f64,
    rng: &mut R,
) -> Configuration<VectorLabel> {
    let k = gt.k();
    match recipe {
        LabelRecipe::Uniform => (0..gt.n())
            .map(|_| Point::new((0..k).map(|_| grid_uniform(rng, range))))
            .collect(),
        LabelRecipe::AllEqual => {
            let x = Point::new((0..k).map(|_| grid_uniform(rng, range)));
            (0..gt.n()).map(|_| x.clone()).collect()
        }
        LabelRecipe::SingleOutlier => {
            let outlier = rng.gen_range(0..gt.n());
            (0..gt.n())
                .map(|i| {
                    let mut x = gt.point(i);
                    if i == outlier {
                        for j in 0..k {
                            x[j] += range;
                        }
                    }
                    x
                })
                .collect()
        }
    }
}

/// Parallel time bound `ln n` with unit constant.
pub fn time_bound(n: usize) -> f64 {
    (n as f64).ln()
}
