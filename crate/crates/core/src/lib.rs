pub mod angular;
pub mod ensemble;
pub mod error;
pub mod quadrature;
pub mod quantum;
pub mod bell;
pub mod montecarlo;
pub mod config;
pub mod commands;
pub mod output;
