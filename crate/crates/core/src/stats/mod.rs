//! Independence testing and distances between one-dimensional samples.

pub mod distance;
pub mod hoeffding;
pub mod hoeffding_table;

pub use distance::{bounded_lipschitz_distance, kl_and_l1, wasserstein2_1d, EmpiricalMeasure1D};
pub use hoeffding::{hoeffding_d, hoeffding_test, HoeffdingResult, PMethod};
