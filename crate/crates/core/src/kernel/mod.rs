//! Base kernels, time-delay embeddings and the recursive gamma-kernel stack.
//!
//! Tap states follow `phi^1_n = psi(x_n)` and
//! `phi^i_n = (1 - mu) phi^i_{n-1} + mu phi^{i-1}_{n-1}` with zero states before
//! the first sample. Their inner products obey a four-term recursion in the
//! kernel values of the current and previous tap, which is what every
//! evaluator in this module computes without ever forming a state.

mod base;
mod recursive;
mod stream;

pub use base::{embed, BaseKernel, DelayLine, Points};
pub use recursive::{
    base_gram, composite_average, kernel_block, kernel_block_with, kernel_stack_fast,
    kernel_stack_fast_with, kernel_stack_naive, ConvolutionMode, KernelStack, RecursiveKernelConfig,
};
pub(crate) use recursive::composite_of;
pub use stream::{StreamColumns, StreamKernelState};
