//! Structure-aware protein self-supervised pretraining.
//!
//! Backbone geometry, residue graphs, a small reverse-mode autodiff engine
//! with second-order support, the encoder/head models, the two structural
//! pretext losses, the Jensen-Shannon mutual-information bridge between the
//! sequence and structure encoders, the pseudo bi-level trainer, and a
//! downstream finetuning harness.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, PDB ingestion
//! and the command-line driver live in the `protssl` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod config;
pub mod error;
pub mod finetune;
pub mod geometry;
pub mod gradcheck;
pub mod graph;
pub mod matrix;
pub mod models;
pub mod pretrain;
pub mod seed;
pub mod structure;
pub mod tensor;

pub use config::{FinetuneMode, SeqMode, TrainConfig};
pub use error::{Error, Result};
pub use geometry::{DihedralPair, DistanceMatrix, RbfConfig, Vec3};
pub use graph::{MaskedGraph, ProteinGraph};
pub use matrix::Matrix;
pub use structure::{ProteinSequence, ProteinStructure, Residue};
pub use tensor::{grad, Adam, ParamSet, Role, Tensor};
