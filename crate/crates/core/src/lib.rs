pub mod alignment;
pub mod ontology;
pub mod pipeline;
pub mod planner;
pub mod sim;
pub mod similarity;
pub mod task;
pub mod time;
