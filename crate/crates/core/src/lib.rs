//! Definability of relations over reducts of finitely bounded ordered
//! homogeneous structures, decided by searching for canonical behaviors.

pub mod age;
pub mod cli;
pub mod behavior;
pub mod decide;
pub mod formula;
pub mod oracle;
pub mod pointed;
pub mod types;
