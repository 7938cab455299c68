//! Central-difference gradient oracle, independent of the tape's backward.

use super::tape::{Executor, Tape, Var};
use super::Tensor;

/// Compare the tape gradient of `sum(f(x))` against central differences,
/// coordinate by coordinate, and return the worst relative error.
///
/// Non-scalar outputs are summed before differentiation. The relative
/// error denominator is `max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_diff_check<F>(f: F, x: &Tensor, h: f64) -> f64
where
    F: Fn(&mut Tape, Var) -> Var,
{
    let scalar_eval = |t: &Tensor| -> f64 {
        let mut tape = Tape::new();
        let v = tape.leaf(t.clone());
        let out = f(&mut tape, v);
        tape.value(&out).data().iter().sum()
    };

    let mut tape = Tape::new();
    let v = tape.leaf(x.clone());
    let out = f(&mut tape, v);
    let loss = tape.sum_all(&out);
    let grads = tape
        .backward(loss)
        .expect("finite_diff_check: backward failed");
    let analytic = grads.get_or_zeros(v, x.shape());

    let mut worst = 0.0f64;
    for i in 0..x.numel() {
        let mut plus = x.clone();
        plus.data_mut()[i] += h;
        let mut minus = x.clone();
        minus.data_mut()[i] -= h;
        let numeric = (scalar_eval(&plus) - scalar_eval(&minus)) / (2.0 * h);
        let a = analytic.data()[i];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let err = finite_diff_check(
            |tape, x| tape.mul(&x, &x).unwrap(),
            &Tensor::scalar(3.0),
            1e-5,
        );
        assert!(err <= 1e-8, "relative error {err}");
    }

    #[test]
    fn relu_away_from_kink() {
        let err = finite_diff_check(|tape, x| tape.relu(&x), &Tensor::scalar(1.0), 1e-5);
        assert!(err <= 1e-8, "relative error {err}");
    }

    #[test]
    fn matmul_gradient_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = Tensor::matrix(3, 4, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let b = Tensor::matrix(4, 2, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        // gradient w.r.t. the left operand
        let err = finite_diff_check(
            |tape, x| {
                let bv = tape.leaf(b.clone());
                tape.matmul(&x, &bv).unwrap()
            },
            &a,
            1e-6,
        );
        assert!(err <= 1e-6, "left-operand gradient error {err}");
        // and w.r.t. the right operand
        let err = finite_diff_check(
            |tape, x| {
                let av = tape.leaf(a.clone());
                tape.matmul(&av, &x).unwrap()
            },
            &b,
            1e-6,
        );
        assert!(err <= 1e-6, "right-operand gradient error {err}");
    }

    #[test]
    fn concat_gradient_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let left = Tensor::matrix(3, 2, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let right =
            Tensor::matrix(3, 3, (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let w = Tensor::matrix(5, 2, (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let err = finite_diff_check(
            |tape, x| {
                let r = tape.leaf(right.clone());
                let cat = tape.concat_rows(&[&x, &r]).unwrap();
                let wv = tape.leaf(w.clone());
                tape.matmul(&cat, &wv).unwrap()
            },
            &left,
            1e-6,
        );
        assert!(err <= 1e-6, "concat gradient error {err}");
    }
}
