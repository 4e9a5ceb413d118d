#![allow(dead_code)]

pub mod chunking;
pub mod cka;
pub mod gradcheck;
pub mod pipeline;
pub mod tracking;
