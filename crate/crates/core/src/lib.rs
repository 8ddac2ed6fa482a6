pub mod banded;
pub mod continuation;
pub mod basis;
pub mod colloc;
pub mod fd;
pub mod lsq;
pub mod problems;
