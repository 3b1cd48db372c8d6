//! Dual-loop coupling (in progress).
