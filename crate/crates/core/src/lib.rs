//! Leader-follower formation control of unicycle robots with time-varying
//! relative distance and bearing.
//!
//! The crate covers the robot kinematics, the formation geometry and its
//! error dynamics, a backstepping controller with an optional fuzzy gain
//! tuner, a small expression language for time profiles, and a fixed-step
//! simulation engine with trace output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controllers;
pub mod exprlang;
pub mod formation;
pub mod fuzzy;
pub mod kinematics;
pub mod ode;
pub mod sim;
pub mod trace_csv;
