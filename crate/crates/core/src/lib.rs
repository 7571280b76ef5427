pub mod heptagrid;
pub mod tiles;
pub mod mantilla;
pub mod harp;
pub mod reduction;
pub mod cli;
