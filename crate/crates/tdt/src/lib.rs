//! File formats, solver pipelines and reports for the `tdt` command.

pub mod config;
pub mod instance_io;
pub mod pipeline;
pub mod plan_io;
pub mod report;
pub mod result;
