//! A small dense reverse-mode differentiation engine.
//!
//! Operations are recorded on a [`Tape`] as they execute (define-by-run).
//! Each recorded node keeps its forward value and the rule needed to push
//! an incoming gradient to its parents. [`Tape::backward`] walks the tape in
//! reverse, summing contributions where a value feeds several consumers.
//!
//! ```
//! use subtreegen::autodiff::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let w = tape.leaf(Tensor::new(1, 2, vec![2.0, -1.0]).unwrap());
//! let x = tape.constant(Tensor::new(2, 1, vec![3.0, 4.0]).unwrap());
//! let y = tape.matmul(w, x).unwrap();
//! let grads = tape.backward(y).unwrap();
//! assert_eq!(tape.value(y).item(), 2.0);
//! assert_eq!(grads.get(w).unwrap().data(), &[3.0, 4.0]);
//! ```

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use tape::{Fault, Gradients, Mask, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("buffer of length {len} cannot hold a {rows}x{cols} tensor")]
    BadBuffer {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("mask selects no entries")]
    EmptyMask,
    #[error("loss must be 1x1, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("backward already ran on this tape")]
    DoubleBackward,
    #[error("{0}: argument list is empty")]
    NoInputs(&'static str),
    #[error("{op}: index {index} out of range for {len}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
}
