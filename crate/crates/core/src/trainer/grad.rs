//! Plausibility cost and its analytic gradients.

use super::negatives::{Instance, NegativeSamples};
use crate::corpus::Svo;
use crate::model::math::{axpy, dot, hadamard, log_sigmoid, matvec, matvec_t, sigmoid};
use crate::model::{AlphaMode, Model, ModelParams, PhraseVectors};

/// Dense storage with a record of which rows were written since the last
/// clear.
#[derive(Clone, Debug)]
pub struct SparseRows {
    width: usize,
    data: Vec<f64>,
    touched: Vec<u32>,
    mark: Vec<bool>,
}

impl SparseRows {
    pub fn new(rows: usize, width: usize) -> Self {
        Self {
            width,
            data: vec![0.0; rows * width],
            touched: Vec::new(),
            mark: vec![false; rows],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        if !self.mark[i] {
            self.mark[i] = true;
            self.touched.push(i as u32);
        }
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn touched(&self) -> &[u32] {
        &self.touched
    }

    pub fn is_touched(&self, i: usize) -> bool {
        self.mark[i]
    }

    pub fn clear(&mut self) {
        for &i in &self.touched {
            let i = i as usize;
            self.mark[i] = false;
            self.data[i * self.width..(i + 1) * self.width].fill(0.0);
        }
        self.touched.clear();
    }
}

/// Summed gradients of the batch cost, mirroring the parameter blocks.
#[derive(Clone, Debug)]
pub struct GradientBuffer {
    pub nouns: SparseRows,
    pub predicates: SparseRows,
    pub phrases: SparseRows,
    pub weights: SparseRows,
}

impl GradientBuffer {
    pub fn for_params(p: &ModelParams) -> Self {
        Self {
            nouns: SparseRows::new(p.nouns.rows(), p.dim),
            predicates: SparseRows::new(p.predicates.rows(), p.dim * p.dim),
            phrases: SparseRows::new(p.phrases.rows(), p.dim),
            weights: SparseRows::new(p.weights.len(), 1),
        }
    }

    pub fn clear(&mut self) {
        self.nouns.clear();
        self.predicates.clear();
        self.phrases.clear();
        self.weights.clear();
    }
}

fn vo(model: &Model, svo: &Svo) -> PhraseVectors {
    model
        .vo_embedding(svo.verb, svo.object)
        .expect("tuple ids resolve in the lexicon")
}

/// Plausibility score of a tuple under the current parameters.
pub fn instance_score(model: &Model, inst: &Instance) -> f64 {
    let p = &model.params;
    match inst {
        Instance::Svo(t) => dot(p.noun(t.subject), &vo(model, t).v),
        Instance::Svopn(t) => {
            let v_svo = hadamard(p.noun(t.svo.subject), &vo(model, &t.svo).v);
            dot(&v_svo, &matvec(p.prep_matrix(t.prep), p.noun(t.noun)))
        }
    }
}

/// `-ln sigmoid(s_obs) - sum ln sigmoid(-s_neg)` given precomputed scores.
pub fn cost_from_scores(observed: f64, negatives: [f64; 3]) -> f64 {
    -log_sigmoid(observed) - negatives.iter().map(|&s| log_sigmoid(-s)).sum::<f64>()
}

/// Negative-sampling cost of one observed tuple and its corruptions.
pub fn tuple_cost(model: &Model, observed: &Instance, negatives: &NegativeSamples) -> f64 {
    let s_obs = instance_score(model, observed);
    let s_neg = negatives.0.map(|n| instance_score(model, &n));
    cost_from_scores(s_obs, s_neg)
}

/// Add the gradient of [`tuple_cost`] to `buf`; returns the cost.
pub fn backward(
    model: &Model,
    observed: &Instance,
    negatives: &NegativeSamples,
    buf: &mut GradientBuffer,
) -> f64 {
    let s_obs = instance_score(model, observed);
    accumulate(model, observed, -(1.0 - sigmoid(s_obs)), buf);
    let mut s_neg = [0.0; 3];
    for (s, neg) in s_neg.iter_mut().zip(&negatives.0) {
        *s = instance_score(model, neg);
        accumulate(model, neg, sigmoid(*s), buf);
    }
    cost_from_scores(s_obs, s_neg)
}

/// Add `g * d s(inst) / d theta` to `buf`.
fn accumulate(model: &Model, inst: &Instance, g: f64, buf: &mut GradientBuffer) {
    let p = &model.params;
    match inst {
        Instance::Svo(t) => {
            let pv = vo(model, t);
            let v_s = p.noun(t.subject);
            axpy(buf.nouns.row_mut(t.subject as usize), g, &pv.v);
            let delta_p: Vec<f64> = v_s.iter().map(|x| g * x).collect();
            backprop_vo(model, t, &pv, &delta_p, buf);
        }
        Instance::Svopn(t) => {
            let pv = vo(model, &t.svo);
            let v_s = p.noun(t.svo.subject);
            let v_n = p.noun(t.noun);
            let m_p = p.prep_matrix(t.prep);
            let v_svo = hadamard(v_s, &pv.v);
            let u = matvec(m_p, v_n);
            let delta_svo: Vec<f64> = u.iter().map(|x| g * x).collect();

            let pred_row = p.n_verbs + t.prep as usize;
            add_outer(buf.predicates.row_mut(pred_row), g, &v_svo, v_n);
            axpy(
                buf.nouns.row_mut(t.noun as usize),
                g,
                &matvec_t(m_p, &v_svo),
            );
            axpy(
                buf.nouns.row_mut(t.svo.subject as usize),
                1.0,
                &hadamard(&delta_svo, &pv.v),
            );
            let delta_vo = hadamard(&delta_svo, v_s);
            backprop_vo(model, &t.svo, &pv, &delta_vo, buf);
        }
    }
}

/// Route `delta_p = dJ/dv(VO)` into `n(VO)`, `W` and the composition
/// `M(V) v(O)`.
fn backprop_vo(
    model: &Model,
    t: &Svo,
    pv: &PhraseVectors,
    delta_p: &[f64],
    buf: &mut GradientBuffer,
) {
    let p = &model.params;
    let grad_c: Vec<f64> = match (pv.phrase, &pv.n) {
        (Some(phrase), Some(n)) => {
            let alpha = pv.alpha;
            if alpha != 1.0 {
                axpy(buf.phrases.row_mut(phrase as usize), 1.0 - alpha, delta_p);
            }
            if model.alpha_mode == AlphaMode::Learned {
                let diff: Vec<f64> = pv.c.iter().zip(n).map(|(c, n)| c - n).collect();
                let delta_alpha = alpha * (1.0 - alpha) * dot(delta_p, &diff);
                for &(i, x) in model.features.row(phrase) {
                    buf.weights.row_mut(i as usize)[0] += delta_alpha * x;
                }
            }
            if alpha == 0.0 {
                return;
            }
            delta_p.iter().map(|d| alpha * d).collect()
        }
        _ => delta_p.to_vec(),
    };
    let m_v = p.verb_matrix(t.verb);
    add_outer(
        buf.predicates.row_mut(t.verb as usize),
        1.0,
        &grad_c,
        p.noun(t.object),
    );
    let grad_o = matvec_t(m_v, &grad_c);
    axpy(buf.nouns.row_mut(t.object as usize), 1.0, &grad_o);
}

/// `m += scale * a b^T` for a row-major square matrix.
fn add_outer(m: &mut [f64], scale: f64, a: &[f64], b: &[f64]) {
    let d = b.len();
    for (row, &ai) in m.chunks_exact_mut(d).zip(a) {
        axpy(row, scale * ai, b);
    }
}
