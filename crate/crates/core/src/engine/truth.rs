use thiserror::Error;

use crate::geometry::{self, GeometryError, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TruthError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("agent {index}: expected {expected} coordinates, got {actual}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("agent {index}: non-finite coordinate")]
    NonFinite { index: usize },
    #[error("agents {first} and {second} share a position")]
    Duplicate { first: usize, second: usize },
    #[error("agents {indices:?} are not in general position ({source})")]
    Degenerate {
        indices: Vec<usize>,
        source: GeometryError,
    },
    #[error("leader index {leader} out of range for {n} agents")]
    LeaderOutOfRange { leader: usize, n: usize },
}

/// Hidden true positions of the population.
///
/// Only the engine (to answer queries) and test oracles read this; protocol
/// transitions see nothing but the answers to their queries.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    k: usize,
    coords: Vec<f64>,
    leader: Option<usize>,
}

impl GroundTruth {
    pub fn new(k: usize, points: &[Point], leader: Option<usize>) -> Result<Self, TruthError> {
        let mut coords = Vec::with_capacity(points.len() * k);
        for (index, p) in points.iter().enumerate() {
            if p.dim() != k {
                return Err(TruthError::DimensionMismatch {
                    index,
                    expected: k,
                    actual: p.dim(),
                });
            }
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(k, coords, leader)
    }

    /// Builds from row-major coordinates (`n * k` values).
    pub fn from_flat(k: usize, coords: Vec<f64>, leader: Option<usize>) -> Result<Self, TruthError> {
        if k == 0 {
            return Err(TruthError::ZeroDimension);
        }
        if !coords.len().is_multiple_of(k) {
            return Err(TruthError::DimensionMismatch {
                index: coords.len() / k,
                expected: k,
                actual: coords.len() % k,
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(TruthError::NonFinite { index: i / k });
        }
        let n = coords.len() / k;
        if let Some(leader) = leader {
            if leader >= n {
                return Err(TruthError::LeaderOutOfRange { leader, n });
            }
        }
        let gt = GroundTruth { k, coords, leader };
        gt.check_distinct()?;
        Ok(gt)
    }

    fn check_distinct(&self) -> Result<(), TruthError> {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| {
            self.position(a)
                .iter()
                .zip(self.position(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if self.position(w[0]) == self.position(w[1]) {
                let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(TruthError::Duplicate { first, second });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn leader(&self) -> Option<usize> {
        self.leader
    }

    #[inline]
    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.k..(i + 1) * self.k]
    }

    pub fn point(&self, i: usize) -> Point {
        Point::from_slice(self.position(i))
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.position(i)
            .iter()
            .zip(self.position(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `p_j - p_i`.
    #[inline]
    pub fn vector(&self, i: usize, j: usize) -> Point {
        Point::new(self.position(i).iter().zip(self.position(j)).map(|(a, b)| b - a))
    }

    /// Checks that the given `k + 1` agents are affinely independent.
    pub fn check_affine_independent(&self, indices: &[usize]) -> Result<(), TruthError> {
        if indices.len() != self.k + 1 {
            return Err(TruthError::Degenerate {
                indices: indices.to_vec(),
                source: GeometryError::AnchorCount {
                    expected: self.k + 1,
                    actual: indices.len(),
                },
            });
        }
        let base = self.position(indices[0]);
        let mut a = Vec::with_capacity(self.k * self.k);
        for &j in &indices[1..] {
            a.extend(self.position(j).iter().zip(base).map(|(x, b)| x - b));
        }
        let rhs = vec![0.0; self.k];
        geometry::solve_linear(&a, &rhs)
            .map(|_| ())
            .map_err(|source| TruthError::Degenerate {
                indices: indices.to_vec(),
                source,
            })
    }

    /// Exhaustive general-position check over every `(k + 1)`-subset.
    ///
    /// Returns `Ok(false)` without checking when there are more than
    /// `max_subsets` subsets.
    pub fn check_general_position(&self, max_subsets: u64) -> Result<bool, TruthError> {
        let n = self.n();
        let m = self.k + 1;
        if n < m {
            return Ok(true);
        }
        if binomial(n as u64, m as u64) > max_subsets {
            return Ok(false);
        }
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            self.check_affine_independent(&idx)?;
            // next combination in lexicographic order
            let mut pos = m;
            loop {
                if pos == 0 {
                    return Ok(true);
                }
                pos -= 1;
                if idx[pos] < n - m + pos {
                    break;
                }
            }
            idx[pos] += 1;
            for j in pos + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
}

fn binomial(n: u64, m: u64) -> u64 {
    if m > n {
        return 0;
    }
    let m = m.min(n - m);
    let mut acc: u64 = 1;
    for i in 0..m {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Which geometric datum an interaction reveals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryModel {
    /// Both parties learn the distance between them.
    SymmetricDistance,
    /// The initiator learns the vector from its own position to the responder's.
    InitiatorVector,
}

/// Answer to a geometric query.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Distance(f64),
    Vector(Point),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("an agent cannot interact with itself")]
    SelfInteraction,
    #[error("protocol asked for a {requested:?} datum under the {model:?} model")]
    WrongModel {
        model: QueryModel,
        requested: QueryModel,
    },
}

/// Evaluates the query for the ordered pair `(initiator, responder)`.
pub fn evaluate_query(
    gt: &GroundTruth,
    initiator: usize,
    responder: usize,
    model: QueryModel,
) -> Result<Datum, QueryError> {
    if initiator == responder {
        return Err(QueryError::SelfInteraction);
    }
    Ok(match model {
        QueryModel::SymmetricDistance => Datum::Distance(gt.distance(initiator, responder)),
        QueryModel::InitiatorVector => Datum::Vector(gt.vector(initiator, responder)),
    })
}

#[derive(Clone, Copy)]
enum Source<'a> {
    Truth {
        gt: &'a GroundTruth,
        initiator: usize,
        responder: usize,
        model: QueryModel,
    },
    Given(&'a Datum),
}

/// Lazily evaluated query handle handed to a transition.
///
/// It exposes only the datum permitted by the active query model. Agent
/// indices stay private so transitions cannot depend on them.
#[derive(Clone, Copy)]
pub struct Query<'a>(Source<'a>);

impl<'a> Query<'a> {
    pub(crate) fn truth(gt: &'a GroundTruth, initiator: usize, responder: usize, model: QueryModel) -> Self {
        Query(Source::Truth {
            gt,
            initiator,
            responder,
            model,
        })
    }

    /// Wraps an explicit datum, for driving transitions by hand.
    pub fn given(datum: &'a Datum) -> Self {
        Query(Source::Given(datum))
    }

    pub fn distance(&self) -> Result<f64, QueryError> {
        match self.0 {
            Source::Truth {
                gt,
                initiator,
                responder,
                model: QueryModel::SymmetricDistance,
            } => Ok(gt.distance(initiator, responder)),
            Source::Truth { model, .. } => Err(QueryError::WrongModel {
                model,
                requested: QueryModel::SymmetricDistance,
            }),
            Source::Given(Datum::Distance(d)) => Ok(*d),
            Source::Given(Datum::Vector(_)) => Err(QueryError::WrongModel {
                model: QueryModel::InitiatorVector,
                requested: QueryModel::SymmetricDistance,
            }),
        }
    }

    pub fn vector(&self) -> Result<Point, QueryError> {
        match self.0 {
            Source::Truth {
                gt,
                initiator,
                responder,
                model: QueryModel::InitiatorVector,
            } => Ok(gt.vector(initiator, responder)),
            Source::Truth { model, .. } => Err(QueryError::WrongModel {
                model,
                requested: QueryModel::InitiatorVector,
            }),
            Source::Given(Datum::Vector(v)) => Ok(v.clone()),
            Source::Given(Datum::Distance(_)) => Err(QueryError::WrongModel {
                model: QueryModel::SymmetricDistance,
                requested: QueryModel::InitiatorVector,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(points: &[&[f64]]) -> Result<GroundTruth, TruthError> {
        let k = points[0].len();
        GroundTruth::new(k, &points.iter().map(|p| Point::from_slice(p)).collect::<Vec<_>>(), None)
    }

    #[test]
    fn distance_query() {
        let g = gt(&[&[0.0, 0.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(
            evaluate_query(&g, 0, 1, QueryModel::SymmetricDistance).unwrap(),
            Datum::Distance(5.0)
        );
    }

    #[test]
    fn vector_query() {
        let t = 0.375;
        let g = gt(&[&[1.0, 1.0], &[1.0, 1.0 + t]]).unwrap();
        assert_eq!(
            evaluate_query(&g, 0, 1, QueryModel::InitiatorVector).unwrap(),
            Datum::Vector(Point::from([0.0, t]))
        );
        assert_eq!(
            evaluate_query(&g, 1, 0, QueryModel::InitiatorVector).unwrap(),
            Datum::Vector(Point::from([0.0, -t]))
        );
    }

    #[test]
    fn self_query_rejected() {
        let g = gt(&[&[0.0], &[1.0]]).unwrap();
        assert_eq!(
            evaluate_query(&g, 1, 1, QueryModel::SymmetricDistance),
            Err(QueryError::SelfInteraction)
        );
    }

    #[test]
    fn lazy_query_enforces_model() {
        let g = gt(&[&[0.0], &[2.0]]).unwrap();
        let q = Query::truth(&g, 0, 1, QueryModel::SymmetricDistance);
        assert_eq!(q.distance().unwrap(), 2.0);
        assert!(matches!(q.vector(), Err(QueryError::WrongModel { .. })));
    }

    #[test]
    fn duplicates_rejected() {
        assert_eq!(
            gt(&[&[0.5, 0.5], &[0.1, 0.2], &[0.5, 0.5]]),
            Err(TruthError::Duplicate { first: 0, second: 2 })
        );
    }

    #[test]
    fn collinear_triple_reported_with_indices() {
        let g = gt(&[&[0.0, 0.3], &[0.0, 0.0], &[0.5, 0.9], &[1.0, 0.0], &[2.0, 0.0]]).unwrap();
        match g.check_general_position(1000) {
            Err(TruthError::Degenerate { indices, .. }) => assert_eq!(indices, vec![1, 3, 4]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(1024, 3), 178_433_024);
    }
}
