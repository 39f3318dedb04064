//! Dense vector helpers and numerically stable logistic functions.
//!
//! Matrices are row-major `d * d` slices.

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln sigmoid(x)`, stable for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `m * v` for a row-major square matrix.
pub fn matvec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    assert_eq!(m.len(), d * d, "matvec: shape mismatch");
    m.chunks_exact(d).map(|row| dot(row, v)).collect()
}

/// `m^T * v` for a row-major square matrix.
pub fn matvec_t(m: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    assert_eq!(m.len(), d * d, "matvec_t: shape mismatch");
    let mut out = vec![0.0; d];
    for (row, &vi) in m.chunks_exact(d).zip(v) {
        for (o, &mij) in out.iter_mut().zip(row) {
            *o += mij * vi;
        }
    }
    out
}

pub fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "hadamard: dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

/// `acc += scale * x`
pub fn axpy(acc: &mut [f64], scale: f64, x: &[f64]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += scale * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_of_ln3() {
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-12);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(-800.0).is_finite());
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + 2f64.ln()).abs() < 1e-15);
        assert!((log_sigmoid(-1000.0) + 1000.0).abs() < 1e-9);
        assert!(log_sigmoid(1000.0) <= 0.0 && log_sigmoid(1000.0) > -1e-300);
        for x in [-20.0, -3.0, -0.5, 0.5, 3.0, 20.0] {
            assert!((log_sigmoid(x) - sigmoid(x).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn matvec_by_hand() {
        let m = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(matvec(&m, &[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(matvec_t(&m, &[1.0, 1.0]), vec![4.0, 6.0]);
    }

    proptest! {
        #[test]
        fn sigmoid_symmetry(x in -30.0f64..30.0) {
            prop_assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn sigmoid_monotone(x in -20.0f64..20.0, dx in 1e-3f64..5.0) {
            prop_assert!(sigmoid(x + dx) > sigmoid(x));
        }
    }
}
