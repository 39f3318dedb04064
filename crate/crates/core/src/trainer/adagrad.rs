use super::grad::{GradientBuffer, SparseRows};
use crate::model::ModelParams;

/// Per-scalar sums of squared gradients for every parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaGradState {
    pub nouns: Vec<f64>,
    pub predicates: Vec<f64>,
    pub phrases: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AdaGradState {
    pub fn for_params(p: &ModelParams) -> Self {
        Self {
            nouns: vec![0.0; p.nouns.data().len()],
            predicates: vec![0.0; p.predicates.data().len()],
            phrases: vec![0.0; p.phrases.data().len()],
            weights: vec![0.0; p.weights.len()],
        }
    }
}

#[inline]
fn update(param: &mut f64, acc: &mut f64, g: f64, lr: f64) {
    if g == 0.0 {
        return;
    }
    *acc += g * g;
    *param -= lr * g / acc.sqrt();
}

fn step_block(params: &mut [f64], acc: &mut [f64], grads: &SparseRows, scale: f64, lr: f64) {
    let w = grads.width();
    for &row in grads.touched() {
        let row = row as usize;
        let g = grads.row(row);
        let span = row * w..(row + 1) * w;
        for ((p, a), &gi) in params[span.clone()].iter_mut().zip(&mut acc[span]).zip(g) {
            update(p, a, gi * scale, lr);
        }
    }
}

/// Apply one AdaGrad update from the summed batch gradient in `buf`.
///
/// Gradients are averaged over `batch_count` tuples. The scorer weights also
/// receive the L2 term `l2 * W` (every nonzero weight, once per batch).
/// Scalars whose resulting gradient is exactly zero are left untouched.
pub fn adagrad_step(
    params: &mut ModelParams,
    buf: &GradientBuffer,
    state: &mut AdaGradState,
    lr: f64,
    l2: f64,
    batch_count: usize,
) {
    assert!(batch_count > 0, "empty batch");
    let scale = 1.0 / batch_count as f64;
    step_block(
        params.nouns.data_mut(),
        &mut state.nouns,
        &buf.nouns,
        scale,
        lr,
    );
    step_block(
        params.predicates.data_mut(),
        &mut state.predicates,
        &buf.predicates,
        scale,
        lr,
    );
    step_block(
        params.phrases.data_mut(),
        &mut state.phrases,
        &buf.phrases,
        scale,
        lr,
    );

    if l2 == 0.0 {
        step_block(
            &mut params.weights,
            &mut state.weights,
            &buf.weights,
            scale,
            lr,
        );
    } else {
        for (i, (w, a)) in params
            .weights
            .iter_mut()
            .zip(&mut state.weights)
            .enumerate()
        {
            let data = if buf.weights.is_touched(i) {
                buf.weights.row(i)[0] * scale
            } else {
                0.0
            };
            let g = data + l2 * *w;
            update(w, a, g, lr);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamBlock;

    fn params() -> ModelParams {
        ModelParams {
            dim: 2,
            n_verbs: 1,
            nouns: ParamBlock::from_data(2, vec![1.0, 2.0, 3.0, 4.0]),
            predicates: ParamBlock::from_data(4, vec![0.5; 4]),
            phrases: ParamBlock::from_data(2, vec![0.0; 2]),
            weights: vec![0.0, 0.25, 0.0],
            seed: 0,
        }
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let mut p = params();
        let mut state = AdaGradState::for_params(&p);
        let mut buf = GradientBuffer::for_params(&p);
        buf.nouns.row_mut(1).copy_from_slice(&[0.37, -12.0]);
        adagrad_step(&mut p, &buf, &mut state, 0.05, 0.0, 1);
        assert_eq!(p.nouns.row(0), &[1.0, 2.0]);
        assert!((p.nouns.row(1)[0] - (3.0 - 0.05)).abs() < 1e-15);
        assert!((p.nouns.row(1)[1] - (4.0 + 0.05)).abs() < 1e-15);
        assert_eq!(p.predicates.data(), &[0.5; 4]);
    }

    #[test]
    fn second_identical_gradient_step() {
        // acc_2 = 2 g^2, so the second step is lr * g / (sqrt(2) |g|).
        let mut p = params();
        let mut state = AdaGradState::for_params(&p);
        let mut buf = GradientBuffer::for_params(&p);
        buf.nouns.row_mut(0)[0] = 0.8;
        adagrad_step(&mut p, &buf, &mut state, 0.1, 0.0, 1);
        let before = p.nouns.row(0)[0];
        adagrad_step(&mut p, &buf, &mut state, 0.1, 0.0, 1);
        let step = before - p.nouns.row(0)[0];
        assert!((step - 0.1 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(state.nouns[0], 2.0 * 0.8 * 0.8);
    }

    #[test]
    fn batch_mean_and_zero_entries() {
        let mut p = params();
        let mut state = AdaGradState::for_params(&p);
        let mut buf = GradientBuffer::for_params(&p);
        buf.phrases.row_mut(0).copy_from_slice(&[4.0, 0.0]);
        adagrad_step(&mut p, &buf, &mut state, 0.01, 0.0, 4);
        assert_eq!(state.phrases, vec![1.0, 0.0]);
        assert_eq!(p.phrases.row(0), &[-0.01, 0.0]);
    }

    #[test]
    fn l2_applies_to_weights_only() {
        let mut p = params();
        let mut state = AdaGradState::for_params(&p);
        let buf = GradientBuffer::for_params(&p);
        adagrad_step(&mut p, &buf, &mut state, 0.01, 1e-3, 1);
        assert_eq!(p.weights[0], 0.0);
        assert_eq!(p.weights[2], 0.0);
        assert!((p.weights[1] - (0.25 - 0.01)).abs() < 1e-15);
        assert_eq!(p.nouns.data(), params().nouns.data());

        let mut q = params();
        let mut state = AdaGradState::for_params(&q);
        adagrad_step(&mut q, &buf, &mut state, 0.01, 0.0, 1);
        assert_eq!(q.weights, params().weights);
    }

    #[test]
    fn accumulators_never_decrease() {
        let mut p = params();
        let mut state = AdaGradState::for_params(&p);
        let mut buf = GradientBuffer::for_params(&p);
        let mut prev = state.clone();
        for k in 0..20 {
            buf.clear();
            let x = ((k * 7) % 5) as f64 - 2.0;
            buf.nouns.row_mut(k % 2).copy_from_slice(&[x, -x * 0.5]);
            buf.weights.row_mut(k % 3)[0] = x;
            adagrad_step(&mut p, &buf, &mut state, 0.05, 1e-4, 3);
            for (a, b) in state.nouns.iter().zip(&prev.nouns) {
                assert!(a >= b);
            }
            for (a, b) in state.weights.iter().zip(&prev.weights) {
                assert!(a >= b);
            }
            prev = state.clone();
        }
    }
}
