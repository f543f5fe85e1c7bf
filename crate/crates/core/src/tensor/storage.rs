use std::alloc::Layout;
use std::ptr::NonNull;

use super::allocator::{TensorAllocator, TensorAllocatorError};
use super::element::TensorElement;

/// A contiguous, allocator-owned buffer of `len` elements.
///
/// The region is acquired once at construction and released through the same
/// allocator when the storage is dropped.
pub struct TensorStorage<T, A: TensorAllocator> {
    ptr: NonNull<T>,
    len: usize,
    layout: Layout,
    alloc: A,
}

// SAFETY: the storage uniquely owns its region; sharing follows T and A.
unsafe impl<T: Send, A: TensorAllocator + Send> Send for TensorStorage<T, A> {}
unsafe impl<T: Sync, A: TensorAllocator + Sync> Sync for TensorStorage<T, A> {}

impl<T: TensorElement, A: TensorAllocator> TensorStorage<T, A> {
    /// Acquires a region for `len` elements and initializes element `i` with `f(i)`.
    pub(crate) fn from_fn(
        len: usize,
        alloc: A,
        mut f: impl FnMut(usize) -> T,
    ) -> Result<Self, TensorAllocatorError> {
        let layout = Layout::array::<T>(len).map_err(|_| TensorAllocatorError::LayoutError)?;
        let raw = alloc.alloc(layout)?;
        let ptr = NonNull::new(raw as *mut T).ok_or(TensorAllocatorError::NullPointer(0))?;
        // constructed before filling so a panicking `f` still releases the region
        let storage = Self {
            ptr,
            len,
            layout,
            alloc,
        };
        for i in 0..len {
            // SAFETY: i < len and the region holds len elements.
            unsafe { storage.ptr.as_ptr().add(i).write(f(i)) };
        }
        Ok(storage)
    }

    pub(crate) fn from_slice(data: &[T], alloc: A) -> Result<Self, TensorAllocatorError> {
        let layout =
            Layout::array::<T>(data.len()).map_err(|_| TensorAllocatorError::LayoutError)?;
        let raw = alloc.alloc(layout)?;
        let ptr = NonNull::new(raw as *mut T).ok_or(TensorAllocatorError::NullPointer(0))?;
        // SAFETY: fresh region of data.len() elements, cannot overlap data.
        unsafe { std::ptr::copy_nonoverlapping(data.as_ptr(), ptr.as_ptr(), data.len()) };
        Ok(Self {
            ptr,
            len: data.len(),
            layout,
            alloc,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        // SAFETY: ptr is valid and initialized for len elements.
        unsafe { std::slice::from_raw_parts(self.ptr.as_ptr(), self.len) }
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        // SAFETY: as above, and &mut self guarantees exclusivity.
        unsafe { std::slice::from_raw_parts_mut(self.ptr.as_ptr(), self.len) }
    }

    /// Raw byte view of the buffer.
    pub fn as_bytes(&self) -> &[u8] {
        // SAFETY: TensorElement types are padding-free plain data.
        unsafe {
            std::slice::from_raw_parts(
                self.ptr.as_ptr() as *const u8,
                self.len * std::mem::size_of::<T>(),
            )
        }
    }

    /// Mutable raw byte view of the buffer.
    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        // SAFETY: TensorElement types accept any bit pattern.
        unsafe {
            std::slice::from_raw_parts_mut(
                self.ptr.as_ptr() as *mut u8,
                self.len * std::mem::size_of::<T>(),
            )
        }
    }

    #[inline]
    pub fn alloc(&self) -> &A {
        &self.alloc
    }
}

impl<T, A: TensorAllocator> Drop for TensorStorage<T, A> {
    fn drop(&mut self) {
        // SAFETY: the region was acquired from this allocator with this layout
        // in the constructor and is released only here.
        unsafe { self.alloc.dealloc(self.ptr.as_ptr() as *mut u8, self.layout) };
    }
}
