//! Design-to-fabrication pipeline for layered assemblies built from
//! reclaimed dimensional lumber.
//!
//! The crate is organized along the pipeline stages: a lofted design
//! surface is sliced into planar layers (`geom`), each layer is
//! subdivided into stock-length elements (`layout`), overlapping
//! elements of neighboring layers are joined with nails
//! (`connections`), the stack is partitioned into liftable and
//! transportable subassemblies (`modularize`), elements are matched
//! against a bin inventory of reclaimed boards (`inventory`), and the
//! co-robotic assembly process is simulated end to end (`perception`,
//! `fabsim`). `pipeline` wires the stages together behind a single
//! config file and `report` renders the run artifacts.

pub mod config;
pub mod connections;
pub mod fabsim;
pub mod fixtures;
pub mod geom;
pub mod inventory;
pub mod layout;
pub mod modularize;
pub mod perception;
pub mod pipeline;
pub mod report;
