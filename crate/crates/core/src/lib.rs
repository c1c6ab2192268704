//! Agent simulation core: layered affect, memory, cognition, social
//! interaction and the tick-based world, all talking to language generation
//! through [`backend::Gateway`].

pub mod affect;
pub mod backend;
pub mod clock;
pub mod cognition;
pub mod memory;
pub mod sim;
pub mod social;
