//! Exact computations with Λ-trees for Λ = ℚⁿ under the lexicographic order.
//!
//! Modules, bottom up:
//! - [`ordgroup`]: the ordered group ℚⁿ.
//! - [`lambdatree`]: finite Λ-trees, medians, projections, base change.
//! - [`groups`]: word problems, Britton reduction, Smith normal form.
//! - [`bruhat`]: valued fields and SL₂ translation lengths.
//! - [`isometry`]: partial isometries, classification, ball certification.
//! - [`gluing`]: graphs of actions, dual distances, transverse coverings.
//! - [`devissage`]: graph-of-groups decomposition checks.
//! - [`markedgroups`]: relation balls and convergence tables.
//! - [`cli`]: the command-line front end.

pub mod ordgroup;
pub mod lambdatree;
pub mod groups;
pub mod bruhat;
pub mod isometry;
pub mod gluing;
pub mod devissage;
pub mod markedgroups;
pub mod cli;
