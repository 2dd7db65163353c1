//! Dense row-major f64 tensors.
//!
//! Everything numerical in this crate (images, feature maps, cost volumes,
//! network parameters) lives in a [`Tensor`]: a shape plus a flat `Vec<f64>`
//! in row-major order. Images are `[channels, height, width]`, depth maps are
//! `[height, width]`, plane-sweep volumes are `[channels, planes, height,
//! width]`. No strides, no views; slicing that matters is explicit.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "shape {:?} wants {} elements, got {}",
                shape,
                len,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Dimension `i` of the shape.
    pub fn dim(&self, i: usize) -> usize {
        self.shape[i]
    }

    #[inline]
    pub fn at2(&self, y: usize, x: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[y * self.shape[1] + x]
    }

    #[inline]
    pub fn set2(&mut self, y: usize, x: usize, v: f64) {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[y * self.shape[1] + x] = v;
    }

    #[inline]
    pub fn at3(&self, c: usize, y: usize, x: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 3);
        self.data[(c * self.shape[1] + y) * self.shape[2] + x]
    }

    #[inline]
    pub fn set3(&mut self, c: usize, y: usize, x: usize, v: f64) {
        debug_assert_eq!(self.shape.len(), 3);
        self.data[(c * self.shape[1] + y) * self.shape[2] + x] = v;
    }

    #[inline]
    pub fn add3(&mut self, c: usize, y: usize, x: usize, v: f64) {
        debug_assert_eq!(self.shape.len(), 3);
        self.data[(c * self.shape[1] + y) * self.shape[2] + x] += v;
    }

    #[inline]
    pub fn at4(&self, c: usize, d: usize, y: usize, x: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 4);
        self.data[((c * self.shape[1] + d) * self.shape[2] + y) * self.shape[3] + x]
    }

    #[inline]
    pub fn set4(&mut self, c: usize, d: usize, y: usize, x: usize, v: f64) {
        debug_assert_eq!(self.shape.len(), 4);
        self.data[((c * self.shape[1] + d) * self.shape[2] + y) * self.shape[3] + x] = v;
    }

    #[inline]
    pub fn add4(&mut self, c: usize, d: usize, y: usize, x: usize, v: f64) {
        debug_assert_eq!(self.shape.len(), 4);
        self.data[((c * self.shape[1] + d) * self.shape[2] + y) * self.shape[3] + x] += v;
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    pub fn ensure_same_shape(&self, other: &Tensor, what: &str) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in self.data.iter_mut() {
            *v *= alpha;
        }
    }

    pub fn fill(&mut self, value: f64) {
        for v in self.data.iter_mut() {
            *v = value;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Channel `c` of a `[C, H, W]` tensor as a fresh `[H, W]` tensor.
    pub fn channel(&self, c: usize) -> Tensor {
        debug_assert_eq!(self.shape.len(), 3);
        let hw = self.shape[1] * self.shape[2];
        Tensor {
            shape: vec![self.shape[1], self.shape[2]],
            data: self.data[c * hw..(c + 1) * hw].to_vec(),
        }
    }

    /// Concatenate `[C, H, W]` tensors along the channel axis.
    pub fn concat_channels(parts: &[&Tensor]) -> Tensor {
        debug_assert!(!parts.is_empty());
        let h = parts[0].shape[1];
        let w = parts[0].shape[2];
        let total: usize = parts.iter().map(|p| p.shape[0]).sum();
        let mut data = Vec::with_capacity(total * h * w);
        for p in parts {
            debug_assert_eq!(p.shape[1], h);
            debug_assert_eq!(p.shape[2], w);
            data.extend_from_slice(&p.data);
        }
        Tensor {
            shape: vec![total, h, w],
            data,
        }
    }

    /// Split a `[C, H, W]` tensor into chunks of the given channel counts.
    pub fn split_channels(&self, counts: &[usize]) -> Vec<Tensor> {
        debug_assert_eq!(self.shape.len(), 3);
        debug_assert_eq!(counts.iter().sum::<usize>(), self.shape[0]);
        let hw = self.shape[1] * self.shape[2];
        let mut out = Vec::with_capacity(counts.len());
        let mut offset = 0;
        for &c in counts {
            out.push(Tensor {
                shape: vec![c, self.shape[1], self.shape[2]],
                data: self.data[offset * hw..(offset + c) * hw].to_vec(),
            });
            offset += c;
        }
        out
    }
}

/// Mean absolute difference between two tensors of the same shape.
pub fn mean_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
    debug_assert!(a.same_shape(b));
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| (x - y).abs())
        .sum();
    sum / a.len() as f64
}

/// Largest absolute difference between two tensors of the same shape.
pub fn max_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
    debug_assert!(a.same_shape(b));
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
