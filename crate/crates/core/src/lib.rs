//! Multi-agent refactoring engine for Java projects: static analysis,
//! design-quality measurement, LLM-driven refactoring sessions with bounded
//! compile/test feedback loops, and evaluation utilities.

pub mod config;
pub mod depgraph;
pub mod evaluation;
pub mod llm;
pub mod metrics;
pub mod orchestrator;
pub mod quality;
pub mod smells;
pub mod source_model;
pub mod toolchain;
