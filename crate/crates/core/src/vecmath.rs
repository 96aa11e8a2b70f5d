//! Dense vector helpers. Points, gradients and offsets are plain `Vec<f64>`
//! of a fixed dimension; these free functions are the only linear algebra
//! the crate needs.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_l1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_linf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// `a + c * b`.
pub fn axpy(a: &[f64], c: f64, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

pub fn zeros(d: usize) -> Vec<f64> {
    vec![0.0; d]
}

/// Arithmetic mean of a nonempty set of equal-length vectors.
pub fn mean(vs: &[Vec<f64>]) -> Vec<f64> {
    assert!(!vs.is_empty(), "mean of empty vector set");
    let d = vs[0].len();
    let mut out = vec![0.0; d];
    for v in vs {
        debug_assert_eq!(v.len(), d);
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    let inv = 1.0 / vs.len() as f64;
    for o in &mut out {
        *o *= inv;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(norm_l1(&[1.0, -2.0, 0.0]), 3.0);
        assert_eq!(norm_linf(&[1.0, -2.0, 0.0]), 2.0);
        assert_eq!(axpy(&[1.0, 1.0], 2.0, &[1.0, -1.0]), vec![3.0, -1.0]);
    }

    #[test]
    fn mean_of_vectors() {
        let m = mean(&[vec![1.0, 0.0], vec![3.0, 2.0]]);
        assert_eq!(m, vec![2.0, 1.0]);
    }
}
