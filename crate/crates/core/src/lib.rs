pub mod cli;
pub mod curves;
pub mod hermitian;
pub mod io;
pub mod isoparametric;
pub mod knots;
pub mod reconstruct;
pub mod report;
pub mod sphere;
pub mod strain;
