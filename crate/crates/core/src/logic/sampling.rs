//! Random points and δ-nets of unit balls.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::signature::Field;
use super::structure::Vector;
use crate::scalar::Complex64;

fn gaussian<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Vector {
    Vector::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if field == Field::Complex {
            StandardNormal.sample(rng)
        } else {
            0.0
        };
        Complex64::new(re, im)
    })
}

fn direction<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Vector {
    loop {
        let g = gaussian(dim, field, rng);
        let n = g.norm();
        if n > 1e-12 {
            return g.unscale(n);
        }
    }
}

pub fn uniform_sphere<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Vector {
    direction(dim, field, rng)
}

/// Uniform with respect to volume.
pub fn uniform_ball<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Vector {
    let d = (dim * field.real_factor()) as f64;
    let r = rng.random::<f64>().powf(1.0 / d);
    direction(dim, field, rng).scale(r)
}

/// Uniform direction, radius uniform on `[0, 1]`.
pub fn radial_uniform<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Vector {
    let r = rng.random::<f64>();
    direction(dim, field, rng).scale(r)
}

pub fn project_to_ball(v: &mut Vector) {
    let n = v.norm();
    if n > 1.0 {
        v.unscale_mut(n);
    }
}

/// A `delta`-net of the closed unit ball: every point of the ball lies within
/// `delta` of some net point. Grid points of spacing `2δ/√D` near the ball are
/// radially projected into it. Returns `None` once more than `max_points`
/// points would be produced.
pub fn ball_net(dim: usize, field: Field, delta: f64, max_points: usize) -> Option<Vec<Vector>> {
    let d = dim * field.real_factor();
    if d == 0 || delta <= 0.0 {
        return None;
    }
    let h = 2.0 * delta / (d as f64).sqrt();
    let reach = 1.0 + delta;
    let m = (reach / h).ceil() as i64;
    let approx = unit_ball_volume(d) * reach.powi(d as i32) / h.powi(d as i32);
    if approx > 4.0 * max_points as f64 + 1000.0 {
        return None;
    }
    let mut out = Vec::new();
    let mut idx = vec![-m; d];
    loop {
        let sq: f64 = idx.iter().map(|&k| (k as f64 * h).powi(2)).sum();
        if sq <= reach * reach {
            if out.len() == max_points {
                return None;
            }
            let mut v = Vector::from_fn(dim, |i, _| match field {
                Field::Real => Complex64::new(idx[i] as f64 * h, 0.0),
                Field::Complex => Complex64::new(idx[2 * i] as f64 * h, idx[2 * i + 1] as f64 * h),
            });
            project_to_ball(&mut v);
            out.push(v);
        }
        let mut k = 0;
        loop {
            if k == d {
                return Some(out);
            }
            idx[k] += 1;
            if idx[k] <= m {
                break;
            }
            idx[k] = -m;
            k += 1;
        }
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    let (mut even, mut odd) = (1.0, 2.0);
    for k in 2..=d {
        let next = if k % 2 == 0 { even } else { odd } * 2.0 * std::f64::consts::PI / k as f64;
        if k % 2 == 0 {
            even = next;
        } else {
            odd = next;
        }
    }
    if d.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samplers_stay_in_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert!(uniform_ball(5, Field::Complex, &mut rng).norm() <= 1.0 + 1e-12);
            assert!((uniform_sphere(3, Field::Real, &mut rng).norm() - 1.0).abs() < 1e-12);
            let r = radial_uniform(4, Field::Real, &mut rng);
            assert!(r.iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn net_covers_ball() {
        let net = ball_net(2, Field::Real, 0.05, 100_000).unwrap();
        assert!(net.len() > 500 && net.len() < 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = uniform_ball(2, Field::Real, &mut rng);
            let best = net
                .iter()
                .map(|p| (p - &x).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 0.05 + 1e-12);
        }
        assert!(ball_net(4, Field::Real, 0.05, 1000).is_none());
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
