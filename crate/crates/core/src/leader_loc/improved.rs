//! Faster positioning on the line.
//!
//! A blue agent's first green contact makes it greenish: it then knows it is
//! at one of two candidate positions. A second distinct green settles it, and
//! so do most meetings between two greenish agents.

use crate::engine::{Protocol, ProtocolFault, Query, QueryModel, Update};
use crate::geometry::{self, Anchor, AnchorSet, GeometryError, Point};

use super::{leader_meets_blue, pack, LocParams, LocRole};

#[derive(Debug, Clone, PartialEq)]
pub struct GreenishState {
    /// Label of the single green contact.
    pub anchor_label: f64,
    /// Distance to it.
    pub anchor_distance: f64,
}

impl GreenishState {
    pub fn candidates(&self) -> [f64; 2] {
        [
            self.anchor_label - self.anchor_distance,
            self.anchor_label + self.anchor_distance,
        ]
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Enumerates the four sign choices for two greenish agents and keeps those
/// whose candidate positions are `d_uv` apart. An agent is resolved when all
/// surviving choices agree on its position.
pub fn resolve_greenish_pair(
    g_u: f64,
    d_u: f64,
    g_v: f64,
    d_v: f64,
    d_uv: f64,
    tol: f64,
) -> Result<(Option<f64>, Option<f64>), GeometryError> {
    let mut survivors: Vec<(f64, f64)> = Vec::with_capacity(4);
    for s_u in [1.0, -1.0] {
        for s_v in [1.0, -1.0] {
            let x_u = g_u + s_u * d_u;
            let x_v = g_v + s_v * d_v;
            if ((x_u - x_v).abs() - d_uv).abs() <= tol * (1.0 + d_uv) {
                survivors.push((x_u, x_v));
            }
        }
    }
    let Some(&(first_u, first_v)) = survivors.first() else {
        let residual = [1.0, -1.0]
            .iter()
            .flat_map(|s_u| [1.0, -1.0].map(|s_v| (s_u, s_v)))
            .map(|(s_u, s_v)| (((g_u + s_u * d_u) - (g_v + s_v * d_v)).abs() - d_uv).abs())
            .fold(f64::INFINITY, f64::min);
        return Err(GeometryError::InconsistentAnchors { residual });
    };
    let u = survivors
        .iter()
        .all(|&(x, _)| close(x, first_u, tol))
        .then_some(first_u);
    let v = survivors
        .iter()
        .all(|&(_, x)| close(x, first_v, tol))
        .then_some(first_v);
    Ok((u, v))
}

fn label_1d(role: &LocRole) -> Option<f64> {
    role.label().map(|p| p[0])
}

fn blue_meets_positioned(label: f64, d: f64) -> LocRole {
    LocRole::Greenish(GreenishState {
        anchor_label: label,
        anchor_distance: d,
    })
}

fn greenish_meets_positioned(
    g: &GreenishState,
    label: f64,
    d: f64,
    tol: f64,
) -> Result<Option<LocRole>, ProtocolFault> {
    if close(g.anchor_label, label, tol) {
        return Ok(None);
    }
    let anchors: AnchorSet = [
        Anchor::new([g.anchor_label], g.anchor_distance),
        Anchor::new([label], d),
    ]
    .into_iter()
    .collect();
    let x = geometry::multilaterate(&anchors, 1, tol)?;
    Ok(Some(LocRole::green(x)))
}

fn greenish_pair(
    a: &GreenishState,
    b: &GreenishState,
    d: f64,
    tol: f64,
) -> Result<(Option<LocRole>, Option<LocRole>), ProtocolFault> {
    let (x_a, x_b) = resolve_greenish_pair(
        a.anchor_label,
        a.anchor_distance,
        b.anchor_label,
        b.anchor_distance,
        d,
        tol,
    )?;
    let to_green = |x: f64| LocRole::green(Point::from([x]));
    Ok((x_a.map(to_green), x_b.map(to_green)))
}

/// One symmetric interaction of the improved line protocol.
pub fn transition_improved1d(
    u: &LocRole,
    v: &LocRole,
    d_uv: f64,
    tol: f64,
) -> Result<Update<LocRole>, ProtocolFault> {
    let p = LocParams { k: 1, tol };
    Ok(match (u, v) {
        (LocRole::Leader(l), LocRole::Blue(b)) if l.registry.is_empty() => {
            let (l2, b2) = leader_meets_blue(l, b, d_uv, p)?;
            pack(l2.map(LocRole::Leader), b2)
        }
        (LocRole::Blue(b), LocRole::Leader(l)) if l.registry.is_empty() => {
            let (l2, b2) = leader_meets_blue(l, b, d_uv, p)?;
            pack(b2, l2.map(LocRole::Leader))
        }
        (LocRole::Blue(_), w) if w.is_positioned() => {
            pack(Some(blue_meets_positioned(label_1d(w).unwrap_or(0.0), d_uv)), None)
        }
        (w, LocRole::Blue(_)) if w.is_positioned() => {
            pack(None, Some(blue_meets_positioned(label_1d(w).unwrap_or(0.0), d_uv)))
        }
        (LocRole::Greenish(g), w) if w.is_positioned() => {
            pack(greenish_meets_positioned(g, label_1d(w).unwrap_or(0.0), d_uv, tol)?, None)
        }
        (w, LocRole::Greenish(g)) if w.is_positioned() => {
            pack(None, greenish_meets_positioned(g, label_1d(w).unwrap_or(0.0), d_uv, tol)?)
        }
        (LocRole::Greenish(a), LocRole::Greenish(b)) => {
            let (a2, b2) = greenish_pair(a, b, d_uv, tol)?;
            pack(a2, b2)
        }
        _ => Update::Unchanged,
    })
}

fn improved_active(u: &LocRole, v: &LocRole) -> bool {
    let waiting = |r: &LocRole| matches!(r, LocRole::Blue(_) | LocRole::Greenish(_));
    match (u, v) {
        (LocRole::Blue(_), LocRole::Blue(_))
        | (LocRole::Blue(_), LocRole::Greenish(_))
        | (LocRole::Greenish(_), LocRole::Blue(_)) => false,
        _ => waiting(u) || waiting(v),
    }
}

/// The improved line protocol (`k = 1`).
#[derive(Debug, Clone, Copy)]
pub struct ImprovedLine {
    pub tol: f64,
}

impl Protocol for ImprovedLine {
    type State = LocRole;

    fn query_model(&self) -> QueryModel {
        QueryModel::SymmetricDistance
    }

    fn interact(
        &self,
        initiator: &LocRole,
        responder: &LocRole,
        query: &Query<'_>,
    ) -> Result<Update<LocRole>, ProtocolFault> {
        if !improved_active(initiator, responder) {
            return Ok(Update::Unchanged);
        }
        transition_improved1d(initiator, responder, query.distance()?, self.tol)
    }
}

/// Parallel time bound `(n ln n)^(1/3)` with unit constant.
pub fn time_bound(n: usize) -> f64 {
    let n = n as f64;
    (n * n.ln()).cbrt()
}
