use nalgebra::{DMatrix, DVector, RealField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HerbrandError;
use crate::logic::sampling::uniform_sphere;
use crate::logic::signature::Field;
use crate::logic::structure::Vector;
use crate::scalar::Complex64;

/// One piece `x ↦ λx + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece<T: RealField> {
    pub lambda: T,
    pub v: DVector<T>,
}

fn to_f64<T: RealField + Copy>(x: T) -> f64 {
    x.to_subset().unwrap_or(f64::NAN)
}

/// Pieces `λx + v_i` whose offsets form an `eps`-net of `K(B_radius)`, so that
/// every `a` in the ball has some `i` with `‖(λI + K)a − (λa + v_i)‖ ≤ eps`.
/// The ellipsoid is gridded along its singular axes with mesh `2 eps / √r`
/// for `r` nonzero axes, keeping only cells that can meet it; at most
/// `max_grid` grid points are visited.
pub fn compact_epsilon_net<T: RealField + Copy>(
    k: &DMatrix<T>,
    lambda: T,
    radius: T,
    eps: T,
    max_grid: usize,
) -> Result<Vec<Piece<T>>, HerbrandError> {
    if eps <= T::zero() {
        return Err(HerbrandError::NonPositiveEpsilon);
    }
    let rows = k.nrows();
    let svd = k.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let tiny = nalgebra::convert::<f64, T>(1e-12);
    let axes: Vec<(usize, T)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| (i, *s * radius))
        .filter(|(_, e)| *e > tiny)
        .collect();
    if axes.is_empty() {
        return Ok(vec![Piece {
            lambda,
            v: DVector::zeros(rows),
        }]);
    }
    let two = nalgebra::convert::<f64, T>(2.0);
    let h = two * eps / nalgebra::convert::<f64, T>(axes.len() as f64).sqrt();
    let mut coords: Vec<(Vec<T>, T)> = Vec::new();
    let mut total: usize = 1;
    for &(_, extent) in &axes {
        if extent <= h / two {
            coords.push((vec![T::zero()], T::zero()));
            continue;
        }
        let m = to_f64(two * extent / h).ceil() as usize;
        let step = two * extent / nalgebra::convert::<f64, T>(m as f64);
        let pts = (0..=m)
            .map(|j| -extent + step * nalgebra::convert::<f64, T>(j as f64))
            .collect();
        total = total.saturating_mul(m + 1);
        coords.push((pts, step));
    }
    if total > max_grid {
        return Err(HerbrandError::TooManyCandidates(max_grid));
    }
    let mut pieces = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    'grid: loop {
        let mut load = T::zero();
        for (a, &(_, extent)) in axes.iter().enumerate() {
            let (pts, step) = &coords[a];
            let slack = (pts[idx[a]].abs() - *step / two).max(T::zero()) / extent;
            load += slack * slack;
        }
        if load <= T::one() {
            let mut v = DVector::zeros(rows);
            for (a, &(col, _)) in axes.iter().enumerate() {
                v += u.column(col) * coords[a].0[idx[a]];
            }
            pieces.push(Piece { lambda, v });
        }
        let mut a = axes.len();
        loop {
            if a == 0 {
                break 'grid;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < coords[a].0.len() {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(pieces)
}

/// Smallest `m` for which `f(a) ≈ λ a` on the sampled part of the ball
/// orthogonal to `e_1, …, e_m`, with the scalars used there.
#[derive(Debug, Clone, PartialEq)]
pub struct TailPieces {
    pub m: usize,
    /// Scalars from the net needed to cover the samples, in greedy order.
    pub lambdas: Vec<Complex64>,
}

/// Searches `m = 0, 1, …, max_m` for a coordinate subspace whose orthogonal
/// complement is handled by the pieces `λ_i x` at level `eps` on `samples`
/// radially stratified points.
#[allow(clippy::too_many_arguments)]
pub fn tail_pieces(
    f: &dyn Fn(&Vector) -> Vector,
    dim: usize,
    field: Field,
    eps: f64,
    lambdas: &[Complex64],
    max_m: usize,
    samples: usize,
    seed: u64,
) -> Result<TailPieces, HerbrandError> {
    if eps <= 0.0 {
        return Err(HerbrandError::NonPositiveEpsilon);
    }
    'outer: for m in 0..=max_m.min(dim.saturating_sub(1)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fits: Vec<Vec<bool>> = Vec::with_capacity(samples);
        for i in 0..samples {
            let r = (i as f64 + rng.random::<f64>()) / samples as f64;
            let tail = uniform_sphere(dim - m, field, &mut rng).scale(r);
            let mut a = Vector::zeros(dim);
            a.rows_mut(m, dim - m).copy_from(&tail);
            let fa = f(&a);
            let row: Vec<bool> = lambdas
                .iter()
                .map(|l| (&fa - &a * *l).norm() < eps)
                .collect();
            if !row.iter().any(|b| *b) {
                continue 'outer;
            }
            fits.push(row);
        }
        let mut covered = vec![false; fits.len()];
        let mut used = Vec::new();
        while covered.iter().any(|c| !c) {
            let gain = |j: usize| {
                (0..fits.len())
                    .filter(|&i| !covered[i] && fits[i][j])
                    .count()
            };
            let best = (0..lambdas.len())
                .max_by(|&a, &b| gain(a).cmp(&gain(b)).then(b.cmp(&a)))
                .expect("nonempty net");
            for i in 0..fits.len() {
                covered[i] |= fits[i][best];
            }
            used.push(lambdas[best]);
        }
        return Ok(TailPieces { m, lambdas: used });
    }
    Err(HerbrandError::NoTail { max_m })
}
