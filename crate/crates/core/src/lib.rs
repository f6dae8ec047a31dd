pub mod analytic;
pub mod bounds;
pub mod fdm;
pub mod fourier;
pub mod geometry;
pub mod numfmt;
pub mod quadrature;
pub mod report;
pub mod scan;
pub mod special;
pub mod spectrum;
