//! Topological features for images.
//!
//! The crate computes 0- and 1-dimensional persistence diagrams of the
//! sublevel-set filtration of grayscale images (pixels as closed unit squares,
//! coefficients in Z/2), turns diagrams into fixed-length feature vectors
//! (persistence statistics and persistence curves), segments dark lesion-like
//! regions with a life-interval filtration, and provides two classifiers that
//! consume the features: a one-against-one linear SVM and a small fusion head
//! that learns a sigmoid-parameterized rate weighting topological features
//! against backbone features.
//!
//! ```
//! use topofeat::image_io::GrayImage;
//! use topofeat::persistence::sublevel_persistence;
//!
//! // 3x3 ring of value 1 around a center of value 7
//! let img = GrayImage::new(3, 3, vec![1., 1., 1., 1., 7., 1., 1., 1., 1.]).unwrap();
//! let (p0, p1) = sublevel_persistence(&img);
//! assert_eq!(p0.points().len(), 1);
//! assert_eq!(p1.points()[0].birth, 1);
//! ```

pub mod cubical;
pub mod curves;
pub mod error;
pub mod features;
pub mod fusion;
pub mod image_io;
pub mod persistence;
pub mod segmentation;
pub mod selftest;
pub mod stats;
pub mod svm;
pub mod synthetic;

pub use error::{Error, Result};
