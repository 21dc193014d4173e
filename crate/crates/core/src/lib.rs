//! Hourly precipitation nowcasting: station CSV ingestion and sliding-window
//! datasets, from-scratch BiLSTM and 1D-CNN classifiers, training, and an
//! experiment grid runner.

pub mod harness;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod training;
