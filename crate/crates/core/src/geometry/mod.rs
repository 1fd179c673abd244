//! Meshes, electrodes, chords and line clipping.

pub mod chord;
pub mod clip;
pub mod electrodes;
pub mod mesh;
pub mod point;

pub use chord::{enumerate_chords, Chord};
pub use clip::{clip_chord, ChordClipper, Segment};
pub use electrodes::{place_electrodes, ElectrodeLayout};
pub use mesh::{build_disk_mesh, build_disk_mesh_rings, TriMesh};
pub use point::Point2;
