use std::alloc::Layout;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// An error raised when a storage region cannot be acquired.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TensorAllocatorError {
    /// The requested layout could not be constructed (size overflow).
    #[error("invalid tensor layout")]
    LayoutError,

    /// The backing allocator returned a null pointer.
    #[error("null pointer returned for a {0}-byte allocation")]
    NullPointer(usize),
}

/// A source of storage regions for tensors.
///
/// A region acquired through an allocator must be released through the same
/// allocator (or a clone of it) exactly once.
pub trait TensorAllocator: Clone {
    /// Acquires a region described by `layout`.
    fn alloc(&self, layout: Layout) -> Result<*mut u8, TensorAllocatorError>;

    /// Releases a region previously returned by [`TensorAllocator::alloc`].
    ///
    /// # Safety
    ///
    /// `ptr` must have been returned by `alloc` on this allocator (or a clone)
    /// with the same `layout`, and must not be released twice.
    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout);
}

/// The default allocator, backed by the global heap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CpuAllocator;

impl TensorAllocator for CpuAllocator {
    fn alloc(&self, layout: Layout) -> Result<*mut u8, TensorAllocatorError> {
        if layout.size() == 0 {
            // a well-aligned dangling pointer stands in for an empty region
            return Ok(layout.align() as *mut u8);
        }
        // SAFETY: layout has non-zero size.
        let ptr = unsafe { std::alloc::alloc(layout) };
        if ptr.is_null() {
            return Err(TensorAllocatorError::NullPointer(layout.size()));
        }
        Ok(ptr)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        if layout.size() == 0 {
            return;
        }
        // SAFETY: the caller guarantees ptr came from `alloc` with this non-zero layout.
        unsafe { std::alloc::dealloc(ptr, layout) }
    }
}

#[derive(Debug, Default)]
struct Counters {
    acquired: AtomicUsize,
    released: AtomicUsize,
}

/// An allocator that delegates to an inner allocator and counts every
/// acquire and release.
///
/// Clones share the same counters, so a tensor built with a clone is still
/// observed by the original handle.
#[derive(Debug, Clone, Default)]
pub struct CountingAllocator<A: TensorAllocator = CpuAllocator> {
    inner: A,
    counters: Arc<Counters>,
}

impl<A: TensorAllocator> CountingAllocator<A> {
    pub fn new(inner: A) -> Self {
        Self {
            inner,
            counters: Arc::new(Counters::default()),
        }
    }

    /// Number of regions acquired since construction.
    pub fn acquire_count(&self) -> usize {
        self.counters.acquired.load(Ordering::SeqCst)
    }

    /// Number of regions released since construction.
    pub fn release_count(&self) -> usize {
        self.counters.released.load(Ordering::SeqCst)
    }

    /// Number of regions currently alive.
    pub fn live_regions(&self) -> usize {
        self.acquire_count() - self.release_count()
    }
}

impl<A: TensorAllocator> TensorAllocator for CountingAllocator<A> {
    fn alloc(&self, layout: Layout) -> Result<*mut u8, TensorAllocatorError> {
        let ptr = self.inner.alloc(layout)?;
        self.counters.acquired.fetch_add(1, Ordering::SeqCst);
        Ok(ptr)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        // SAFETY: forwarded caller contract; regions are acquired through `inner`.
        unsafe { self.inner.dealloc(ptr, layout) };
        self.counters.released.fetch_add(1, Ordering::SeqCst);
    }
}
