//! Rank-parameterized, allocator-backed tensors.
//!
//! A [`Tensor<T, N, A>`] owns a contiguous row-major buffer of `T` acquired
//! from an allocator `A`; `N` is the rank and is fixed at compile time.
//! Slicing and reshaping hand out [`TensorView`]s that borrow the parent's
//! storage without copying or allocating. Operations that produce a new
//! tensor allocate exactly once, through the allocator of the left operand.

mod allocator;
mod element;
mod storage;
mod view;

pub use allocator::{CountingAllocator, CpuAllocator, TensorAllocator, TensorAllocatorError};
pub use element::{BinaryOp, FloatElement, TensorElement};
pub use storage::TensorStorage;
pub use view::{TensorView, ViewIter};

use std::ops::Range;

/// Errors raised by tensor construction and operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("data length {actual} does not match shape numel {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of bounds for axis {axis} with extent {extent}")]
    IndexOutOfBounds {
        axis: usize,
        index: usize,
        extent: usize,
    },

    #[error("cannot reshape {from} elements into {to}")]
    NumelMismatch { from: usize, to: usize },

    #[error("operation requires a contiguous row-major layout")]
    NonContiguous,

    #[error("range {start}..{end} out of bounds for axis {axis} with extent {extent}")]
    RangeOutOfBounds {
        axis: usize,
        start: usize,
        end: usize,
        extent: usize,
    },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("integer division by zero")]
    DivisionByZero,

    #[error("operation undefined on an empty tensor")]
    EmptyTensor,

    #[error(transparent)]
    Alloc(#[from] TensorAllocatorError),
}

/// Number of elements addressed by `shape`.
#[inline]
pub fn numel<const N: usize>(shape: &[usize; N]) -> usize {
    shape.iter().product()
}

/// Row-major strides, in elements, for `shape`.
pub fn row_major_strides<const N: usize>(shape: &[usize; N]) -> [usize; N] {
    let mut strides = [0usize; N];
    let mut acc = 1usize;
    for i in (0..N).rev() {
        strides[i] = acc;
        acc *= shape[i];
    }
    strides
}

/// Linear offset of `index`, checked against `shape`.
pub(crate) fn checked_offset<const N: usize>(
    index: &[usize; N],
    shape: &[usize; N],
    strides: &[usize; N],
) -> Result<usize, TensorError> {
    let mut offset = 0;
    for axis in 0..N {
        if index[axis] >= shape[axis] {
            return Err(TensorError::IndexOutOfBounds {
                axis,
                index: index[axis],
                extent: shape[axis],
            });
        }
        offset += index[axis] * strides[axis];
    }
    Ok(offset)
}

/// A rank-`N` tensor of `T` whose storage is owned through allocator `A`.
pub struct Tensor<T: TensorElement, const N: usize, A: TensorAllocator = CpuAllocator> {
    storage: TensorStorage<T, A>,
    shape: [usize; N],
    strides: [usize; N],
}

impl<T: TensorElement, const N: usize, A: TensorAllocator> Tensor<T, N, A> {
    /// Builds a row-major tensor by copying `data`.
    pub fn from_shape_slice(shape: [usize; N], data: &[T], alloc: A) -> Result<Self, TensorError> {
        let expected = numel(&shape);
        if data.len() != expected {
            return Err(TensorError::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            storage: TensorStorage::from_slice(data, alloc)?,
            shape,
            strides: row_major_strides(&shape),
        })
    }

    /// Builds a tensor filled with `value`.
    pub fn from_shape_val(shape: [usize; N], value: T, alloc: A) -> Result<Self, TensorError> {
        Ok(Self {
            storage: TensorStorage::from_fn(numel(&shape), alloc, |_| value)?,
            shape,
            strides: row_major_strides(&shape),
        })
    }

    /// Builds a tensor whose element at each multi-index is `f(index)`.
    pub fn from_shape_fn(
        shape: [usize; N],
        alloc: A,
        mut f: impl FnMut([usize; N]) -> T,
    ) -> Result<Self, TensorError> {
        let mut index = [0usize; N];
        let storage = TensorStorage::from_fn(numel(&shape), alloc, |_| {
            let v = f(index);
            advance_index(&mut index, &shape);
            v
        })?;
        Ok(Self {
            storage,
            shape,
            strides: row_major_strides(&shape),
        })
    }

    #[inline]
    pub fn shape(&self) -> [usize; N] {
        self.shape
    }

    #[inline]
    pub fn strides(&self) -> [usize; N] {
        self.strides
    }

    #[inline]
    pub fn numel(&self) -> usize {
        numel(&self.shape)
    }

    #[inline]
    pub fn storage(&self) -> &TensorStorage<T, A> {
        &self.storage
    }

    #[inline]
    pub fn allocator(&self) -> &A {
        self.storage.alloc()
    }

    /// Elements in row-major order.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        self.storage.as_slice()
    }

    #[inline]
    pub fn as_slice_mut(&mut self) -> &mut [T] {
        self.storage.as_mut_slice()
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.storage.as_bytes()
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        self.storage.as_bytes_mut()
    }

    /// Element at `index`.
    pub fn get(&self, index: [usize; N]) -> Result<T, TensorError> {
        let offset = checked_offset(&index, &self.shape, &self.strides)?;
        Ok(self.as_slice()[offset])
    }

    pub fn get_mut(&mut self, index: [usize; N]) -> Result<&mut T, TensorError> {
        let offset = checked_offset(&index, &self.shape, &self.strides)?;
        Ok(&mut self.as_slice_mut()[offset])
    }

    /// A view over the whole tensor.
    pub fn view(&self) -> TensorView<'_, T, N, A> {
        TensorView::new(&self.storage, 0, self.shape, self.strides)
    }

    /// A zero-copy view over the half-open `ranges`, one per axis.
    pub fn slice_view(&self, ranges: [Range<usize>; N]) -> Result<TensorView<'_, T, N, A>, TensorError> {
        self.view().slice_view(ranges)
    }

    /// Reinterprets the storage with a new shape of rank `M` without copying.
    pub fn reshape<const M: usize>(self, shape: [usize; M]) -> Result<Tensor<T, M, A>, TensorError> {
        let (from, to) = (self.numel(), numel(&shape));
        if from != to {
            return Err(TensorError::NumelMismatch { from, to });
        }
        Ok(Tensor {
            storage: self.storage,
            shape,
            strides: row_major_strides(&shape),
        })
    }

    fn zip_map<B: TensorAllocator>(
        &self,
        other: &Tensor<T, N, B>,
        op: BinaryOp,
    ) -> Result<Self, TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                left: self.shape.to_vec(),
                right: other.shape.to_vec(),
            });
        }
        if matches!(op, BinaryOp::Div) {
            // check up front so a failed division allocates nothing
            for (&a, &b) in self.as_slice().iter().zip(other.as_slice()) {
                a.binary(b, op)?;
            }
        }
        let (lhs, rhs) = (self.as_slice(), other.as_slice());
        let storage = TensorStorage::from_fn(lhs.len(), self.allocator().clone(), |i| {
            lhs[i].binary(rhs[i], op).unwrap_or_default()
        })?;
        Ok(Self {
            storage,
            shape: self.shape,
            strides: self.strides,
        })
    }

    /// Element-wise `self ⊙ other` for the given operation kind.
    pub fn elementwise<B: TensorAllocator>(
        &self,
        other: &Tensor<T, N, B>,
        op: BinaryOp,
    ) -> Result<Self, TensorError> {
        self.zip_map(other, op)
    }

    pub fn add<B: TensorAllocator>(&self, other: &Tensor<T, N, B>) -> Result<Self, TensorError> {
        self.zip_map(other, BinaryOp::Add)
    }

    pub fn sub<B: TensorAllocator>(&self, other: &Tensor<T, N, B>) -> Result<Self, TensorError> {
        self.zip_map(other, BinaryOp::Sub)
    }

    pub fn mul<B: TensorAllocator>(&self, other: &Tensor<T, N, B>) -> Result<Self, TensorError> {
        self.zip_map(other, BinaryOp::Mul)
    }

    pub fn div<B: TensorAllocator>(&self, other: &Tensor<T, N, B>) -> Result<Self, TensorError> {
        self.zip_map(other, BinaryOp::Div)
    }

    /// Arithmetic mean of all elements, accumulated in `f64`.
    pub fn mean(&self) -> Result<f64, TensorError> {
        if self.numel() == 0 {
            return Err(TensorError::EmptyTensor);
        }
        let sum: f64 = self.as_slice().iter().map(|v| v.to_f64()).sum();
        Ok(sum / self.numel() as f64)
    }

    /// Converts every element to `U`; see [`TensorElement::from_f64`] for the
    /// rounding and saturation rules.
    pub fn cast<U: TensorElement>(&self) -> Result<Tensor<U, N, A>, TensorError> {
        let src = self.as_slice();
        let storage = TensorStorage::from_fn(src.len(), self.allocator().clone(), |i| {
            U::from_f64(src[i].to_f64())
        })?;
        Ok(Tensor {
            storage,
            shape: self.shape,
            strides: self.strides,
        })
    }
}

impl<T: FloatElement, const N: usize, A: TensorAllocator> Tensor<T, N, A> {
    /// Raises every element to `exponent`.
    pub fn powf(&self, exponent: T) -> Result<Self, TensorError> {
        let src = self.as_slice();
        let storage =
            TensorStorage::from_fn(src.len(), self.allocator().clone(), |i| src[i].powf(exponent))?;
        Ok(Self {
            storage,
            shape: self.shape,
            strides: self.strides,
        })
    }
}

impl<T: TensorElement, const N: usize, A: TensorAllocator> Clone for Tensor<T, N, A> {
    fn clone(&self) -> Self {
        Self {
            storage: TensorStorage::from_slice(self.as_slice(), self.allocator().clone())
                .expect("tensor clone allocation failed"),
            shape: self.shape,
            strides: self.strides,
        }
    }
}

impl<T: TensorElement, const N: usize, A: TensorAllocator> std::fmt::Debug for Tensor<T, N, A> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("strides", &self.strides)
            .finish_non_exhaustive()
    }
}

/// Advances a row-major multi-index; wraps to all zeros after the last index.
#[inline]
pub(crate) fn advance_index<const N: usize>(index: &mut [usize; N], shape: &[usize; N]) {
    for axis in (0..N).rev() {
        index[axis] += 1;
        if index[axis] < shape[axis] {
            return;
        }
        index[axis] = 0;
    }
}
