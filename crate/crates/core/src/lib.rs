pub mod expr;
pub mod fleet;
pub mod games;
pub mod geometry;
pub mod normal_cones;
pub mod preferences;
pub mod reformulation;
pub mod vi;
