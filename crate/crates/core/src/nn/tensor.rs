use num_traits::Float;

use crate::error::{Error, Result};

/// Dense channel-last tensor with shape `(N, D1, D2, D3, C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub shape: [usize; 5],
    pub data: Vec<T>,
}

impl<T: Float> Tensor<T> {
    pub fn zeros(shape: [usize; 5]) -> Tensor<T> {
        Tensor { shape, data: vec![T::zero(); shape.iter().product()] }
    }

    pub fn from_vec(shape: [usize; 5], data: Vec<T>) -> Result<Tensor<T>> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{shape:?}"),
                got: format!("{} elements", data.len()),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn spatial(&self) -> [usize; 3] {
        [self.shape[1], self.shape[2], self.shape[3]]
    }

    pub fn channels(&self) -> usize {
        self.shape[4]
    }

    /// Cells per sample, excluding channels.
    pub fn volume(&self) -> usize {
        self.shape[1] * self.shape[2] * self.shape[3]
    }

    pub fn index(&self, n: usize, i: usize, j: usize, k: usize, c: usize) -> usize {
        let [_, d1, d2, d3, ch] = self.shape;
        (((n * d1 + i) * d2 + j) * d3 + k) * ch + c
    }

    pub fn get(&self, n: usize, i: usize, j: usize, k: usize, c: usize) -> T {
        self.data[self.index(n, i, j, k, c)]
    }

    pub fn set(&mut self, n: usize, i: usize, j: usize, k: usize, c: usize, v: T) {
        let idx = self.index(n, i, j, k, c);
        self.data[idx] = v;
    }

    /// Stacks single-sample tensors of equal shape along the batch axis.
    pub fn stack(items: &[Tensor<T>]) -> Result<Tensor<T>> {
        let first = items.first().ok_or_else(|| Error::InvalidParameter("empty batch".into()))?;
        let mut shape = first.shape;
        let mut data = Vec::with_capacity(first.data.len() * items.len());
        let mut n = 0;
        for t in items {
            if t.shape[1..] != shape[1..] {
                return Err(Error::ShapeMismatch { expected: format!("{shape:?}"), got: format!("{:?}", t.shape) });
            }
            n += t.shape[0];
            data.extend_from_slice(&t.data);
        }
        shape[0] = n;
        Ok(Tensor { shape, data })
    }

    /// Samples `lo..hi` as a new tensor.
    pub fn slice_batch(&self, lo: usize, hi: usize) -> Tensor<T> {
        let per = self.volume() * self.channels();
        let mut shape = self.shape;
        shape[0] = hi - lo;
        Tensor { shape, data: self.data[lo * per..hi * per].to_vec() }
    }

    pub fn cast<U: Float>(&self) -> Tensor<U> {
        Tensor { shape: self.shape, data: self.data.iter().map(|v| U::from(*v).unwrap()).collect() }
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }
}
