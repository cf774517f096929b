use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{ControlSet, Shape, StateVec};
use crate::paths::AdjointVec;

pub(crate) fn normal_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub(crate) fn random_state(rng: &mut ChaCha8Rng, shape: &Shape, scale: f64) -> StateVec {
    let flat = normal_vec(rng, shape.state_size(), scale);
    StateVec::from_flat(shape, &flat)
}

pub(crate) fn random_adjoint(rng: &mut ChaCha8Rng, shape: &Shape, scale: f64) -> AdjointVec {
    let mut a = AdjointVec::zeros(shape);
    for block in [&mut a.p, &mut a.big_p, &mut a.q, &mut a.big_q, &mut a.big_v] {
        let len = block.len();
        *block = normal_vec(rng, len, scale);
    }
    a
}

/// Uniform on bounded coordinates of the box, standard normal on unbounded
/// ones, clamped into the set.
pub(crate) fn random_control(rng: &mut ChaCha8Rng, set: &ControlSet) -> Vec<f64> {
    match set {
        ControlSet::Point(c) => c.clone(),
        ControlSet::Box { lo, hi } => {
            let raw: Vec<f64> = lo
                .iter()
                .zip(hi)
                .map(|(a, b)| {
                    if a.is_finite() && b.is_finite() {
                        if a == b {
                            *a
                        } else {
                            rng.random_range(*a..=*b)
                        }
                    } else {
                        rng.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect();
            set.project(&raw)
        }
    }
}
