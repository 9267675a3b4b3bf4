pub mod compare;
pub mod data;
pub mod homotopy;
pub mod landscape;
pub mod stationary;
