//! Pebbling contradictions, resolution space, and the black, black-white and
//! blob pebble games on layered DAGs.

pub mod blob;
pub mod dag;
pub mod formula;
pub mod hiding;
pub mod induced;
pub mod pebbling;
pub mod resolution;
