//! Numerical toolkit for the splitting of second fundamental forms and for
//! warped products of isometric immersions into space forms.
//!
//! * [`forms`]: symmetric bilinear forms, the Gauss-equation tensor, s-nullities.
//! * [`splitting`]: the splitting lemma for forms satisfying curvature
//!   vanishing conditions, adapted splittings, and a falsification harness.
//! * [`spaceforms`]: quadric models of space forms and warped product
//!   representations.
//! * [`warped`]: warped product metrics, their connection and curvature.
//! * [`immersions`]: numerical immersions, fundamental forms, warped
//!   compositions and the decomposition pipeline.
//! * [`harness`]: configuration, JSON documents, reports and brute-force oracles.

pub mod forms;
pub mod spaceforms;
pub mod warped;
pub mod splitting;
pub mod immersions;
pub mod linalg;
pub mod harness;
