use std::ops::Range;

use super::{
    advance_index, checked_offset, numel, row_major_strides, Tensor, TensorAllocator,
    TensorElement, TensorError, TensorStorage,
};

/// A borrowed, strided window into a tensor's storage.
///
/// Creating a view copies no elements and acquires no memory; the borrow
/// ties its lifetime to the parent tensor.
pub struct TensorView<'a, T: TensorElement, const N: usize, A: TensorAllocator> {
    storage: &'a TensorStorage<T, A>,
    offset: usize,
    shape: [usize; N],
    strides: [usize; N],
}

impl<T: TensorElement, const N: usize, A: TensorAllocator> Clone for TensorView<'_, T, N, A> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T: TensorElement, const N: usize, A: TensorAllocator> Copy for TensorView<'_, T, N, A> {}

impl<T: TensorElement, const N: usize, A: TensorAllocator> std::fmt::Debug for TensorView<'_, T, N, A> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TensorView")
            .field("offset", &self.offset)
            .field("shape", &self.shape)
            .field("strides", &self.strides)
            .finish()
    }
}

impl<'a, T: TensorElement, const N: usize, A: TensorAllocator> TensorView<'a, T, N, A> {
    pub(crate) fn new(
        storage: &'a TensorStorage<T, A>,
        offset: usize,
        shape: [usize; N],
        strides: [usize; N],
    ) -> Self {
        Self {
            storage,
            offset,
            shape,
            strides,
        }
    }

    #[inline]
    pub fn shape(&self) -> [usize; N] {
        self.shape
    }

    #[inline]
    pub fn strides(&self) -> [usize; N] {
        self.strides
    }

    /// Offset of the first element inside the parent storage.
    #[inline]
    pub fn offset(&self) -> usize {
        self.offset
    }

    #[inline]
    pub fn numel(&self) -> usize {
        numel(&self.shape)
    }

    pub fn get(&self, index: [usize; N]) -> Result<T, TensorError> {
        let offset = checked_offset(&index, &self.shape, &self.strides)?;
        Ok(self.storage.as_slice()[self.offset + offset])
    }

    /// True when the view's elements form one gap-free row-major run.
    pub fn is_contiguous(&self) -> bool {
        if self.numel() <= 1 {
            return true;
        }
        let expected = row_major_strides(&self.shape);
        (0..N).all(|axis| self.shape[axis] == 1 || self.strides[axis] == expected[axis])
    }

    /// The viewed elements as a slice, when the view is contiguous.
    pub fn as_slice(&self) -> Option<&'a [T]> {
        if !self.is_contiguous() {
            return None;
        }
        let storage: &'a TensorStorage<T, A> = self.storage;
        Some(&storage.as_slice()[self.offset..self.offset + self.numel()])
    }

    /// A sub-view over the half-open `ranges`, one per axis.
    pub fn slice_view(&self, ranges: [Range<usize>; N]) -> Result<Self, TensorError> {
        let mut shape = [0usize; N];
        let mut offset = self.offset;
        for (axis, range) in ranges.iter().enumerate() {
            let extent = self.shape[axis];
            if range.start > range.end || range.end > extent {
                return Err(TensorError::RangeOutOfBounds {
                    axis,
                    start: range.start,
                    end: range.end,
                    extent,
                });
            }
            shape[axis] = range.end - range.start;
            if range.end > range.start {
                offset += range.start * self.strides[axis];
            }
        }
        Ok(Self {
            storage: self.storage,
            offset,
            shape,
            strides: self.strides,
        })
    }

    /// Reinterprets a contiguous view with a new shape.
    pub fn reshape<const M: usize>(&self, shape: [usize; M]) -> Result<TensorView<'a, T, M, A>, TensorError> {
        let (from, to) = (self.numel(), numel(&shape));
        if from != to {
            return Err(TensorError::NumelMismatch { from, to });
        }
        if !self.is_contiguous() {
            return Err(TensorError::NonContiguous);
        }
        Ok(TensorView {
            storage: self.storage,
            offset: self.offset,
            shape,
            strides: row_major_strides(&shape),
        })
    }

    /// Elements in row-major order of the view.
    pub fn iter(&self) -> ViewIter<'a, T, N, A> {
        ViewIter {
            view: *self,
            index: [0; N],
            remaining: self.numel(),
        }
    }

    /// Copies the viewed elements into a fresh contiguous tensor.
    pub fn to_tensor(&self) -> Result<Tensor<T, N, A>, TensorError> {
        let mut it = self.iter();
        Tensor::from_shape_fn(self.shape, self.storage.alloc().clone(), |_| {
            it.next().unwrap_or_default()
        })
    }
}

/// Row-major iterator over a [`TensorView`].
pub struct ViewIter<'a, T: TensorElement, const N: usize, A: TensorAllocator> {
    view: TensorView<'a, T, N, A>,
    index: [usize; N],
    remaining: usize,
}

impl<T: TensorElement, const N: usize, A: TensorAllocator> Iterator for ViewIter<'_, T, N, A> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        if self.remaining == 0 {
            return None;
        }
        let offset: usize = (0..N).map(|a| self.index[a] * self.view.strides[a]).sum();
        let value = self.view.storage.as_slice()[self.view.offset + offset];
        advance_index(&mut self.index, &self.view.shape);
        self.remaining -= 1;
        Some(value)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl<T: TensorElement, const N: usize, A: TensorAllocator> ExactSizeIterator for ViewIter<'_, T, N, A> {}
