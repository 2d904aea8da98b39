use serde::{Deserialize, Serialize};

use super::HerbrandError;
use crate::logic::eval::Mode;
use crate::scalar::{format_f64, parse_f64};

/// Nondecreasing piecewise-linear `α : [0,1] → [0,1]` with `α(0) = 0`,
/// constant after its last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEnvelope {
    /// Knots `(s, α(s))` with strictly increasing `s`, starting at `(0, 0)`.
    pub knots: Vec<(f64, f64)>,
    /// Sampled pairs at `s = 0` with positive second coordinate, which no
    /// admissible `α` dominates.
    pub unattained: Vec<(f64, f64)>,
}

impl AlphaEnvelope {
    pub fn zero() -> Self {
        AlphaEnvelope {
            knots: vec![(0.0, 0.0)],
            unattained: Vec::new(),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let k = &self.knots;
        match k.iter().position(|&(x, _)| x >= s) {
            None => k.last().map_or(0.0, |p| p.1),
            Some(0) => k[0].1,
            Some(i) => {
                let (x0, y0) = k[i - 1];
                let (x1, y1) = k[i];
                y0 + (y1 - y0) * (s - x0) / (x1 - x0)
            }
        }
    }

    pub fn dominates(&self, pairs: &[(f64, f64)], tol: f64) -> bool {
        pairs
            .iter()
            .filter(|p| p.0 > 0.0 || p.1 <= tol)
            .all(|&(s, b)| self.eval(s) + tol >= b)
    }
}

/// Knots serialized as decimal-string pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRecord {
    pub knots: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unattained: Vec<[String; 2]>,
}

fn strings(ps: &[(f64, f64)]) -> Vec<[String; 2]> {
    ps.iter()
        .map(|(a, b)| [format_f64(*a), format_f64(*b)])
        .collect()
}

fn floats(ps: &[[String; 2]]) -> Option<Vec<(f64, f64)>> {
    ps.iter()
        .map(|[a, b]| Some((parse_f64(a)?, parse_f64(b)?)))
        .collect()
}

impl AlphaEnvelope {
    pub fn to_record(&self) -> AlphaRecord {
        AlphaRecord {
            knots: strings(&self.knots),
            unattained: strings(&self.unattained),
        }
    }

    pub fn from_record(r: &AlphaRecord) -> Option<Self> {
        Some(AlphaEnvelope {
            knots: floats(&r.knots)?,
            unattained: floats(&r.unattained)?,
        })
    }
}

/// The running-maximum envelope of `pairs = (inf_ȳ φ, min_i φ ∸ ε)`: knots at
/// each distinct first coordinate carry the largest second coordinate seen at
/// or before it, joined linearly from `(0, 0)`.
pub fn fit_alpha(
    pairs: &[(f64, f64)],
    mode: Mode,
    tol: f64,
) -> Result<AlphaEnvelope, HerbrandError> {
    if pairs.is_empty() {
        return Err(HerbrandError::NoPairs);
    }
    let mut unattained = Vec::new();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &(s, b) in pairs {
        if !(0.0..=1.0).contains(&s) {
            return Err(HerbrandError::PairOutOfRange(s));
        }
        if s == 0.0 {
            if b > tol {
                if mode == Mode::Exact {
                    return Err(HerbrandError::Contradiction {
                        residual: format_f64(b),
                    });
                }
                unattained.push((s, b));
            }
            continue;
        }
        pts.push((s, b.clamp(0.0, 1.0)));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots = vec![(0.0, 0.0)];
    let mut running: f64 = 0.0;
    for (s, b) in pts {
        running = running.max(b);
        match knots.last_mut() {
            Some(last) if last.0 == s => last.1 = running,
            _ => knots.push((s, running)),
        }
    }
    let flat = |i: usize| {
        i > 0 && i + 1 < knots.len() && knots[i - 1].1 == knots[i].1 && knots[i].1 == knots[i + 1].1
    };
    let keep: Vec<bool> = (0..knots.len()).map(|i| !flat(i)).collect();
    let knots = knots
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p)
        .collect();
    Ok(AlphaEnvelope { knots, unattained })
}
