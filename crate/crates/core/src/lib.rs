//! Numerical machinery for divisors on the unit disk, finite Blaschke products,
//! mapping schemes, disk-model dynamics (linearization, internal rays, continuation),
//! polynomial dynamics, perturbed-parabolic numerics, and Hausdorff-dimension
//! estimation for conformal repelling systems.
//!
//! The library is organized around a few value types — [`divisor::Divisor`],
//! [`blaschke::BlaschkeProduct`], [`scheme::MappingScheme`], [`polydyn::Polynomial`],
//! [`parabolic::PerturbedParabolic`], [`dimension::RepellingSystem`] — and pure
//! operations on them. Every operation documents its tolerances; audit data
//! (residuals, winding counts, convergence reports) is returned alongside results
//! rather than hidden.

pub mod blaschke;
pub mod dimension;
pub mod divisor;
pub mod io;
pub mod model;
pub mod parabolic;
pub mod poly;
pub mod polydyn;
pub mod scheme;

use num_complex::Complex64;

/// Shorthand used throughout: all numerics are double precision complex.
pub type C64 = Complex64;

/// Builds a rayon thread pool honoring the `BLASCHKE_DIV_THREADS` environment
/// variable; falls back to rayon's default when unset or unparsable.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BLASCHKE_DIV_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                builder = builder.num_threads(n);
            }
        }
    }
    builder.build().expect("thread pool construction cannot fail with these settings")
}
