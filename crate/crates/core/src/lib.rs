//! A simulated writer's room: independently prompted writer agents ideate
//! narrative elements, deliberate to consensus in round-robin turns that end
//! when everyone yields, then co-write a story one sentence per turn.

pub mod cli;
pub mod consensus;
pub mod demo;
pub mod ideation;
pub mod prompts;
pub mod provider;
pub mod room;
pub mod session;
pub mod text;
pub mod transcript;
pub mod writing;
