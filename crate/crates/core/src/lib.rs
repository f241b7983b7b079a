#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Float math comes from `num_traits::Float` (libm). When std is linked into the
// same build its inherent methods win, so those imports are marked
// `allow(unused_imports)`.
extern crate alloc;

pub mod absorption;
pub mod avalanche;
pub mod bath;
pub mod numerics;
pub mod pipeline;
pub mod pointer;
pub mod transport;
pub mod twoslit;
pub mod unraveling;
