//! Pure forward kernels shared by the tape and by tape-free inference.

use super::{Tensor, TensorError};

/// Reduction mode for segment and readout operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduce {
    Max,
    Sum,
    Mean,
}

/// What a segment reduction does with segments that received no rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmptySegment {
    /// Write this value into every column of the empty segment's row.
    Fill(f64),
    /// Refuse to reduce: empty segments are a caller bug.
    Error,
}

pub(crate) fn check_2d(op: &'static str, t: &Tensor) -> Result<(usize, usize), TensorError> {
    match t.shape() {
        [r] => Ok((*r, 1)),
        [r, c] => Ok((*r, *c)),
        other => Err(TensorError::ShapeMismatch {
            op,
            left: other.to_vec(),
            right: vec![],
        }),
    }
}

/// `[m,k] . [k,n] -> [m,n]`. The only hot loop in the crate: a
/// register-blocked micro-kernel over 4 output rows, with rows split
/// across threads for large products. Each output row is computed in a
/// fixed sequential order, so results are bit-identical regardless of
/// thread count.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    let (m, k) = check_2d("matmul", a)?;
    let (kb, n) = check_2d("matmul", b)?;
    if k != kb {
        return Err(TensorError::ShapeMismatch {
            op: "matmul",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    const PAR_THRESHOLD: usize = 1 << 19;
    if m * k * n >= PAR_THRESHOLD && m >= 8 {
        use rayon::prelude::*;
        const ROWS_PER_JOB: usize = 32;
        out.par_chunks_mut(ROWS_PER_JOB * n)
            .enumerate()
            .for_each(|(job, chunk)| {
                let i0 = job * ROWS_PER_JOB;
                let rows = chunk.len() / n;
                matmul_block(&ad[i0 * k..(i0 + rows) * k], bd, chunk, rows, k, n);
            });
    } else {
        matmul_block(ad, bd, &mut out, m, k, n);
    }
    Tensor::new(vec![m, n], out)
}

/// C[rows,n] = A[rows,k] . B[k,n], C pre-zeroed.
fn matmul_block(a: &[f64], b: &[f64], c: &mut [f64], rows: usize, k: usize, n: usize) {
    let mut i = 0;
    // 4 rows at a time: each loaded B row feeds four accumulator rows
    while i + 4 <= rows {
        let (a0, a1, a2, a3) = (
            &a[i * k..(i + 1) * k],
            &a[(i + 1) * k..(i + 2) * k],
            &a[(i + 2) * k..(i + 3) * k],
            &a[(i + 3) * k..(i + 4) * k],
        );
        let mut j = 0;
        while j + 8 <= n {
            let mut acc = [[0.0f64; 8]; 4];
            for p in 0..k {
                let brow = &b[p * n + j..p * n + j + 8];
                let (v0, v1, v2, v3) = (a0[p], a1[p], a2[p], a3[p]);
                for x in 0..8 {
                    acc[0][x] += v0 * brow[x];
                    acc[1][x] += v1 * brow[x];
                    acc[2][x] += v2 * brow[x];
                    acc[3][x] += v3 * brow[x];
                }
            }
            for r in 0..4 {
                c[(i + r) * n + j..(i + r) * n + j + 8].copy_from_slice(&acc[r]);
            }
            j += 8;
        }
        if j < n {
            let rem = n - j;
            for p in 0..k {
                let brow = &b[p * n + j..p * n + j + rem];
                let (v0, v1, v2, v3) = (a0[p], a1[p], a2[p], a3[p]);
                for x in 0..rem {
                    c[i * n + j + x] += v0 * brow[x];
                    c[(i + 1) * n + j + x] += v1 * brow[x];
                    c[(i + 2) * n + j + x] += v2 * brow[x];
                    c[(i + 3) * n + j + x] += v3 * brow[x];
                }
            }
        }
        i += 4;
    }
    // leftover rows: plain axpy order
    while i < rows {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in crow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
        i += 1;
    }
}

pub fn transpose(t: &Tensor) -> Tensor {
    let (r, c) = check_2d("transpose", t).expect("transpose needs a 2-d tensor");
    let mut out = vec![0.0; r * c];
    let d = t.data();
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = d[i * c + j];
        }
    }
    Tensor::new(vec![c, r], out).unwrap()
}

fn zip_same_shape(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor, TensorError> {
    if !a.same_shape(b) {
        return Err(TensorError::ShapeMismatch {
            op,
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data)
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    zip_same_shape("add", a, b, |x, y| x + y)
}

pub fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    zip_same_shape("sub", a, b, |x, y| x - y)
}

pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    zip_same_shape("mul", a, b, |x, y| x * y)
}

/// Elementwise `max(a, b)`; ties favour `a`, matching the backward rule.
pub fn max_elem(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    zip_same_shape("max_elem", a, b, |x, y| if x >= y { x } else { y })
}

/// `mul * x + add`, elementwise with constants.
pub fn affine(x: &Tensor, mul: f64, add: f64) -> Tensor {
    x.map(|v| mul * v + add)
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { slope * v })
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(|v| 1.0 / (1.0 + (-v).exp()))
}

pub fn abs(x: &Tensor) -> Tensor {
    x.map(f64::abs)
}

/// Add a `[1,d]` bias row to every row of `x`.
pub fn add_bias(x: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    let (r, c) = check_2d("add_bias", x)?;
    let (br, bc) = check_2d("add_bias", b)?;
    if br != 1 || bc != c {
        return Err(TensorError::ShapeMismatch {
            op: "add_bias",
            left: x.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let bd = b.data();
    let mut out = x.data().to_vec();
    for i in 0..r {
        for j in 0..c {
            out[i * c + j] += bd[j];
        }
    }
    Tensor::new(vec![r, c], out)
}

/// Column-wise concatenation of parts with equal row counts:
/// `[N,d1] ++ [N,d2] ++ ... -> [N, d1+d2+...]`.
pub fn concat_rows(parts: &[&Tensor]) -> Result<Tensor, TensorError> {
    if parts.is_empty() {
        return Err(TensorError::Invalid("concat_rows of no parts".into()));
    }
    let (n, _) = check_2d("concat_rows", parts[0])?;
    let mut widths = Vec::with_capacity(parts.len());
    for p in parts {
        let (r, c) = check_2d("concat_rows", p)?;
        if r != n {
            return Err(TensorError::ShapeMismatch {
                op: "concat_rows",
                left: parts[0].shape().to_vec(),
                right: p.shape().to_vec(),
            });
        }
        widths.push(c);
    }
    let total: usize = widths.iter().sum();
    let mut out = vec![0.0; n * total];
    for i in 0..n {
        let mut off = 0;
        for (p, &w) in parts.iter().zip(&widths) {
            out[i * total + off..i * total + off + w].copy_from_slice(p.row(i));
            off += w;
        }
    }
    Tensor::new(vec![n, total], out)
}

/// Select rows of `x` by index: output row i is `x.row(idx[i])`.
pub fn gather_rows(x: &Tensor, idx: &[usize]) -> Result<Tensor, TensorError> {
    let (n, c) = check_2d("gather_rows", x)?;
    let mut out = vec![0.0; idx.len() * c];
    for (i, &r) in idx.iter().enumerate() {
        if r >= n {
            return Err(TensorError::IndexOutOfRange {
                op: "gather_rows",
                index: r,
                bound: n,
            });
        }
        out[i * c..(i + 1) * c].copy_from_slice(x.row(r));
    }
    Tensor::new(vec![idx.len(), c], out)
}

/// Scale row i of `x` by `s[i]`; `s` is `[N]` or `[N,1]`.
pub fn scale_rows(x: &Tensor, s: &Tensor) -> Result<Tensor, TensorError> {
    let (n, c) = check_2d("scale_rows", x)?;
    if s.numel() != n {
        return Err(TensorError::ShapeMismatch {
            op: "scale_rows",
            left: x.shape().to_vec(),
            right: s.shape().to_vec(),
        });
    }
    let sd = s.data();
    let mut out = x.data().to_vec();
    for i in 0..n {
        for v in &mut out[i * c..(i + 1) * c] {
            *v *= sd[i];
        }
    }
    Tensor::new(vec![n, c], out)
}

pub(crate) fn validate_segments(
    op: &'static str,
    rows: usize,
    ids: &[usize],
    segments: usize,
) -> Result<(), TensorError> {
    if ids.len() != rows {
        return Err(TensorError::Invalid(format!(
            "{op}: {} segment ids for {} rows",
            ids.len(),
            rows
        )));
    }
    for &s in ids {
        if s >= segments {
            return Err(TensorError::IndexOutOfRange {
                op,
                index: s,
                bound: segments,
            });
        }
    }
    Ok(())
}

/// Per-segment row reduction: `[E,d]` with ids in `[0,S)` -> `[S,d]`.
///
/// For `Reduce::Max` the per-(segment, column) attaining row index is
/// returned so the tape can route gradients to the first maximizer.
pub fn segment_reduce(
    values: &Tensor,
    ids: &[usize],
    segments: usize,
    mode: Reduce,
    empty: EmptySegment,
) -> Result<(Tensor, Option<Vec<usize>>), TensorError> {
    let (e, d) = check_2d("segment_reduce", values)?;
    validate_segments("segment_reduce", e, ids, segments)?;
    let vd = values.data();
    let mut counts = vec![0usize; segments];
    for &s in ids {
        counts[s] += 1;
    }
    match mode {
        Reduce::Sum | Reduce::Mean => {
            let mut out = vec![0.0; segments * d];
            for (i, &s) in ids.iter().enumerate() {
                for j in 0..d {
                    out[s * d + j] += vd[i * d + j];
                }
            }
            for s in 0..segments {
                if counts[s] == 0 {
                    match empty {
                        EmptySegment::Fill(f) => out[s * d..(s + 1) * d].fill(f),
                        EmptySegment::Error => return Err(TensorError::EmptyMaxSegment(s)),
                    }
                } else if mode == Reduce::Mean {
                    let inv = 1.0 / counts[s] as f64;
                    for v in &mut out[s * d..(s + 1) * d] {
                        *v *= inv;
                    }
                }
            }
            Ok((Tensor::new(vec![segments, d], out)?, None))
        }
        Reduce::Max => {
            let mut out = vec![f64::NEG_INFINITY; segments * d];
            // usize::MAX marks "no row yet"; first attaining row wins ties.
            let mut arg = vec![usize::MAX; segments * d];
            for (i, &s) in ids.iter().enumerate() {
                for j in 0..d {
                    let v = vd[i * d + j];
                    if v > out[s * d + j] || arg[s * d + j] == usize::MAX {
                        out[s * d + j] = v;
                        arg[s * d + j] = i;
                    }
                }
            }
            for s in 0..segments {
                if counts[s] == 0 {
                    match empty {
                        EmptySegment::Fill(f) => out[s * d..(s + 1) * d].fill(f),
                        EmptySegment::Error => return Err(TensorError::EmptyMaxSegment(s)),
                    }
                }
            }
            Ok((Tensor::new(vec![segments, d], out)?, Some(arg)))
        }
    }
}

/// Keep row i of `a` where `mask[i]`, else row i of `b`.
pub fn where_rows(mask: &[bool], a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    if !a.same_shape(b) {
        return Err(TensorError::ShapeMismatch {
            op: "where_rows",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let (n, c) = check_2d("where_rows", a)?;
    if mask.len() != n {
        return Err(TensorError::Invalid(format!(
            "where_rows: {} mask entries for {} rows",
            mask.len(),
            n
        )));
    }
    let mut out = b.data().to_vec();
    for i in 0..n {
        if mask[i] {
            out[i * c..(i + 1) * c].copy_from_slice(a.row(i));
        }
    }
    Tensor::new(a.shape().to_vec(), out)
}

/// Saved forward state of a (possibly range-normalized) per-segment softmax.
#[derive(Debug, Clone)]
pub struct SoftmaxState {
    /// Per segment: index of the first row attaining the max score.
    pub arg_hi: Vec<usize>,
    /// Per segment: index of the first row attaining the min score.
    pub arg_lo: Vec<usize>,
    /// Per segment: `max - min` of the raw scores (1.0 stands in where unused).
    pub range: Vec<f64>,
    /// True where the segment's scores were all equal (uniform output).
    pub degenerate: Vec<bool>,
}

/// Per-segment softmax over scores `[E]` or `[E,1]`.
///
/// With `scale_invariant`, scores are first divided by the per-segment
/// range `max-min`, which makes the weights invariant under positive
/// scaling of the scores; a zero range skips the division and yields the
/// uniform distribution.
pub fn segment_softmax(
    scores: &Tensor,
    ids: &[usize],
    segments: usize,
    scale_invariant: bool,
) -> Result<(Tensor, SoftmaxState), TensorError> {
    let (e, c) = check_2d("segment_softmax", scores)?;
    if c != 1 {
        return Err(TensorError::ShapeMismatch {
            op: "segment_softmax",
            left: scores.shape().to_vec(),
            right: vec![e, 1],
        });
    }
    validate_segments("segment_softmax", e, ids, segments)?;
    let sd = scores.data();
    let mut hi = vec![f64::NEG_INFINITY; segments];
    let mut lo = vec![f64::INFINITY; segments];
    let mut arg_hi = vec![usize::MAX; segments];
    let mut arg_lo = vec![usize::MAX; segments];
    for (i, &s) in ids.iter().enumerate() {
        if sd[i] > hi[s] || arg_hi[s] == usize::MAX {
            hi[s] = sd[i];
            arg_hi[s] = i;
        }
        if sd[i] < lo[s] || arg_lo[s] == usize::MAX {
            lo[s] = sd[i];
            arg_lo[s] = i;
        }
    }
    let mut range = vec![1.0; segments];
    let mut degenerate = vec![false; segments];
    let mut out = vec![0.0; e];
    // exp(normalized - segment max) then normalize, per segment
    let mut denom = vec![0.0; segments];
    for s in 0..segments {
        if arg_hi[s] == usize::MAX {
            continue; // empty segment: no rows to weight
        }
        let r = hi[s] - lo[s];
        degenerate[s] = r == 0.0;
        if scale_invariant && !degenerate[s] {
            range[s] = r;
        }
    }
    for (i, &s) in ids.iter().enumerate() {
        let v = if degenerate[s] {
            0.0
        } else {
            (sd[i] - hi[s]) / range[s]
        };
        out[i] = v.exp();
        denom[s] += out[i];
    }
    for (i, &s) in ids.iter().enumerate() {
        out[i] /= denom[s];
    }
    Ok((
        Tensor::new(vec![e, 1], out)?,
        SoftmaxState {
            arg_hi,
            arg_lo,
            range,
            degenerate,
        },
    ))
}

pub fn sum_all(x: &Tensor) -> Tensor {
    Tensor::scalar(x.data().iter().sum())
}

/// Divide every row by its largest-magnitude entry, making the row
/// invariant under positive scaling. All-zero rows stay zero. Returns
/// the scaled tensor plus the per-row argmax index and signed maximum
/// for the backward pass.
pub fn normalize_rows_maxabs(x: &Tensor) -> (Tensor, Vec<usize>, Vec<f64>) {
    let (r, c) = check_2d("normalize_rows_maxabs", x).expect("2-d input");
    let mut out = x.data().to_vec();
    let mut arg = vec![usize::MAX; r];
    let mut signed_max = vec![0.0; r];
    for i in 0..r {
        let row = &mut out[i * c..(i + 1) * c];
        let mut best = 0.0f64;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                arg[i] = j;
                signed_max[i] = *v;
            }
        }
        if best > 0.0 {
            for v in row.iter_mut() {
                *v /= best;
            }
        }
    }
    (
        Tensor::new(vec![r, c], out).expect("same shape"),
        arg,
        signed_max,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::matrix(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_identity_and_hand_case() {
        let id = t(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let v = t(2, 1, &[3.0, 4.0]);
        assert_eq!(matmul(&id, &v).unwrap().data(), &[3.0, 4.0]);
        let a = t(1, 2, &[1.0, 2.0]);
        assert_eq!(matmul(&a, &v).unwrap().data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = t(2, 3, &[0.0; 6]);
        let b = t(2, 2, &[0.0; 4]);
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[2, 2]"), "{err}");
    }

    #[test]
    fn relu_is_positive_homogeneous() {
        let x = t(1, 4, &[-1.5, 0.0, 0.25, 7.0]);
        let lhs = relu(&affine(&x, 3.0, 0.0));
        let rhs = affine(&relu(&x), 3.0, 0.0);
        assert_eq!(lhs.data(), rhs.data());
        assert_eq!(relu(&t(1, 2, &[-1.0, 2.0])).data(), &[0.0, 2.0]);
    }

    #[test]
    fn sigmoid_at_zero() {
        assert_eq!(sigmoid(&Tensor::scalar(0.0)).item(), 0.5);
    }

    #[test]
    fn segment_reduce_modes() {
        let v = t(3, 1, &[1.0, 5.0, 2.0]);
        let ids = [0usize, 0, 1];
        let (mx, arg) = segment_reduce(&v, &ids, 2, Reduce::Max, EmptySegment::Error).unwrap();
        assert_eq!(mx.data(), &[5.0, 2.0]);
        assert_eq!(arg.unwrap(), vec![1, 2]);
        let (sm, _) = segment_reduce(&v, &ids, 2, Reduce::Sum, EmptySegment::Error).unwrap();
        assert_eq!(sm.data(), &[6.0, 2.0]);
        let (mn, _) = segment_reduce(&v, &ids, 2, Reduce::Mean, EmptySegment::Error).unwrap();
        assert_eq!(mn.data(), &[3.0, 2.0]);
    }

    #[test]
    fn segment_reduce_rejects_bad_ids_and_empty_max() {
        let v = t(2, 1, &[1.0, 2.0]);
        assert!(segment_reduce(&v, &[0, 5], 2, Reduce::Sum, EmptySegment::Error).is_err());
        let r = segment_reduce(&v, &[0, 0], 2, Reduce::Max, EmptySegment::Error);
        assert!(matches!(r, Err(TensorError::EmptyMaxSegment(1))));
        let (f, _) = segment_reduce(&v, &[0, 0], 2, Reduce::Max, EmptySegment::Fill(0.0)).unwrap();
        assert_eq!(f.data(), &[2.0, 0.0]);
    }

    #[test]
    fn concat_rows_basics() {
        let a = t(2, 1, &[1.0, 2.0]);
        let b = t(2, 1, &[3.0, 4.0]);
        let c = concat_rows(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), &[2, 2]);
        assert_eq!(c.data(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(concat_rows(&[&a]).unwrap().data(), a.data());
        let bad = t(3, 1, &[0.0; 3]);
        assert!(concat_rows(&[&a, &bad]).is_err());
    }

    #[test]
    fn softmax_uniform_cases() {
        let s = t(3, 1, &[1.0, 1.0, 9.0]);
        let (w, _) = segment_softmax(&s, &[0, 0, 1], 2, false).unwrap();
        assert_eq!(w.data()[0], 0.5);
        assert_eq!(w.data()[1], 0.5);
        assert_eq!(w.data()[2], 1.0);
    }

    #[test]
    fn scale_invariant_softmax_ignores_scaling() {
        let s = t(3, 1, &[0.3, -1.2, 2.0]);
        let ids = [0usize, 0, 0];
        let (w1, _) = segment_softmax(&s, &ids, 1, true).unwrap();
        let (w10, _) = segment_softmax(&affine(&s, 10.0, 0.0), &ids, 1, true).unwrap();
        for (a, b) in w1.data().iter().zip(w10.data()) {
            assert!((a - b).abs() < 1e-15);
        }
        let sum: f64 = w1.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
