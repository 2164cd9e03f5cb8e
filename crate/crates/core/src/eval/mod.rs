pub mod experiments;
pub mod metrics;
pub mod report;
