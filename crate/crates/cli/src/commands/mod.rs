pub mod evaluate;
pub mod fit;
pub mod predict;
pub mod reproduce;
pub mod simulate;
