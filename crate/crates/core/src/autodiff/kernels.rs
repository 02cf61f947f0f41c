//! Value-level kernels shared by the graph forward pass.

use super::{AutodiffError, Tensor};

pub(crate) fn zip_same(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor, AutodiffError> {
    if a.shape() != b.shape() {
        return Err(AutodiffError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::new(a.shape().to_vec(), data)
}

pub(crate) fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, AutodiffError> {
    let mismatch = || AutodiffError::ShapeMismatch {
        op: "matmul",
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    };
    if a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0] {
        return Err(mismatch());
    }
    let (n, k, m) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    let mut out = vec![0.0; n * m];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let av = ad[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &bd[p * m..(p + 1) * m];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![n, m], out)
}

pub(crate) fn transpose(a: &Tensor) -> Result<Tensor, AutodiffError> {
    if a.rank() != 2 {
        return Err(AutodiffError::InvalidShape {
            shape: a.shape().to_vec(),
            reason: "transpose needs a matrix".into(),
        });
    }
    let (r, c) = (a.shape()[0], a.shape()[1]);
    let d = a.data();
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = d[i * c + j];
        }
    }
    Tensor::new(vec![c, r], out)
}

/// Leading shape (all but the last axis) and last-axis size.
fn split_last(shape: &[usize]) -> (&[usize], usize) {
    match shape.split_last() {
        Some((&last, lead)) => (lead, last),
        None => (&[], 1),
    }
}

pub(crate) fn concat_last(parts: &[&Tensor]) -> Result<Tensor, AutodiffError> {
    let first = parts.first().ok_or_else(|| AutodiffError::InvalidShape {
        shape: Vec::new(),
        reason: "concat needs at least one input".into(),
    })?;
    if first.rank() == 0 {
        return Err(AutodiffError::InvalidShape {
            shape: Vec::new(),
            reason: "concat needs rank >= 1".into(),
        });
    }
    let (lead, _) = split_last(first.shape());
    let rows: usize = lead.iter().product();
    let mut total = 0;
    for p in parts {
        let (l, w) = split_last(p.shape());
        if l != lead || p.rank() != first.rank() {
            return Err(AutodiffError::ShapeMismatch {
                op: "concat",
                lhs: first.shape().to_vec(),
                rhs: p.shape().to_vec(),
            });
        }
        total += w;
    }
    let mut out = Vec::with_capacity(rows * total);
    for r in 0..rows {
        for p in parts {
            let w = p.last_dim();
            out.extend_from_slice(&p.data()[r * w..(r + 1) * w]);
        }
    }
    let mut shape = lead.to_vec();
    shape.push(total);
    Tensor::new(shape, out)
}

pub(crate) fn slice_last(a: &Tensor, start: usize, end: usize) -> Result<Tensor, AutodiffError> {
    let (lead, w) = split_last(a.shape());
    if a.rank() == 0 || start >= end || end > w {
        return Err(AutodiffError::InvalidShape {
            shape: a.shape().to_vec(),
            reason: format!("slice [{start}, {end}) out of range"),
        });
    }
    let rows: usize = lead.iter().product();
    let mut out = Vec::with_capacity(rows * (end - start));
    for r in 0..rows {
        out.extend_from_slice(&a.data()[r * w + start..r * w + end]);
    }
    let mut shape = lead.to_vec();
    shape.push(end - start);
    Tensor::new(shape, out)
}

pub(crate) fn pad_last(a: &Tensor, start: usize, total: usize) -> Result<Tensor, AutodiffError> {
    let (lead, w) = split_last(a.shape());
    if a.rank() == 0 || start + w > total {
        return Err(AutodiffError::InvalidShape {
            shape: a.shape().to_vec(),
            reason: format!("cannot pad to width {total} at offset {start}"),
        });
    }
    let rows: usize = lead.iter().product();
    let mut out = vec![0.0; rows * total];
    for r in 0..rows {
        out[r * total + start..r * total + start + w].copy_from_slice(&a.data()[r * w..(r + 1) * w]);
    }
    let mut shape = lead.to_vec();
    shape.push(total);
    Tensor::new(shape, out)
}

/// Strides of `from` aligned to the trailing axes of `to`, with 0 on broadcast axes.
fn broadcast_strides(from: &[usize], to: &[usize]) -> Option<Vec<usize>> {
    if from.len() > to.len() {
        return None;
    }
    let offset = to.len() - from.len();
    let mut strides = vec![0; to.len()];
    let mut acc = 1;
    for i in (0..from.len()).rev() {
        let (f, t) = (from[i], to[i + offset]);
        if f == t {
            strides[i + offset] = acc;
        } else if f != 1 {
            return None;
        }
        acc *= f;
    }
    Some(strides)
}

/// Calls `visit(out_index, in_index)` for every element of `to`.
fn for_each_broadcast(strides: &[usize], to: &[usize], mut visit: impl FnMut(usize, usize)) {
    let total: usize = to.iter().product();
    let mut counter = vec![0usize; to.len()];
    let mut src = 0usize;
    for out in 0..total {
        visit(out, src);
        for ax in (0..to.len()).rev() {
            counter[ax] += 1;
            src += strides[ax];
            if counter[ax] < to[ax] {
                break;
            }
            src -= strides[ax] * counter[ax];
            counter[ax] = 0;
        }
    }
}

pub(crate) fn broadcast_to(a: &Tensor, shape: &[usize]) -> Result<Tensor, AutodiffError> {
    let strides = broadcast_strides(a.shape(), shape).ok_or_else(|| AutodiffError::ShapeMismatch {
        op: "broadcast_to",
        lhs: a.shape().to_vec(),
        rhs: shape.to_vec(),
    })?;
    let mut out = vec![0.0; shape.iter().product()];
    let src = a.data();
    for_each_broadcast(&strides, shape, |o, i| out[o] = src[i]);
    Tensor::new(shape.to_vec(), out)
}

pub(crate) fn sum_to(a: &Tensor, shape: &[usize]) -> Result<Tensor, AutodiffError> {
    let strides = broadcast_strides(shape, a.shape()).ok_or_else(|| AutodiffError::ShapeMismatch {
        op: "sum_to",
        lhs: a.shape().to_vec(),
        rhs: shape.to_vec(),
    })?;
    let mut out = vec![0.0; shape.iter().product()];
    let src = a.data();
    for_each_broadcast(&strides, a.shape(), |o, i| out[i] += src[o]);
    Tensor::new(shape.to_vec(), out)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `1/x`, with `1/0` defined as 0 so that zero-norm and zero-length
/// derivatives vanish instead of producing Inf.
pub(crate) fn recip_or_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        1.0 / x
    }
}

/// `x^p` for `x >= 0`; a zero base with negative exponent yields 0 (see [`recip_or_zero`]).
pub(crate) fn pow_nonneg(x: f64, p: f64) -> f64 {
    if x == 0.0 && p < 0.0 {
        0.0
    } else {
        x.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_and_sum_to_are_adjoint_shapes() {
        let row = Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let b = broadcast_to(&row, &[2, 3]).unwrap();
        assert_eq!(b.data(), &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        let s = sum_to(&b, &[1, 3]).unwrap();
        assert_eq!(s.data(), &[2.0, 4.0, 6.0]);
        let col = sum_to(&b, &[2, 1]).unwrap();
        assert_eq!(col.data(), &[6.0, 6.0]);
        let all = sum_to(&b, &[]).unwrap();
        assert_eq!(all.data(), &[12.0]);
        let expanded = broadcast_to(&Tensor::scalar(2.0), &[2, 2]).unwrap();
        assert_eq!(expanded.data(), &[2.0; 4]);
    }

    #[test]
    fn broadcast_rejects_incompatible() {
        let a = Tensor::matrix(2, 3, vec![0.0; 6]).unwrap();
        assert!(broadcast_to(&a, &[3, 3]).is_err());
        assert!(sum_to(&a, &[2, 2]).is_err());
    }

    #[test]
    fn pad_inverts_slice() {
        let a = Tensor::matrix(2, 4, (0..8).map(f64::from).collect()).unwrap();
        let s = slice_last(&a, 1, 3).unwrap();
        assert_eq!(s.data(), &[1.0, 2.0, 5.0, 6.0]);
        let p = pad_last(&s, 1, 4).unwrap();
        assert_eq!(p.data(), &[0.0, 1.0, 2.0, 0.0, 0.0, 5.0, 6.0, 0.0]);
    }
}
