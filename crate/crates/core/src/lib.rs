//! Mod-p cohomology data of central Frattini extensions of elementary
//! abelian p-groups.

pub mod bocksteindga;
pub mod extalg;
pub mod fplin;
pub mod jobs;
pub mod koszul;
pub mod pgroups;
pub mod series;
pub mod younghook;
