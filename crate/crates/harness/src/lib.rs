pub mod compare;
pub mod episode;
pub mod oracle;
pub mod pca;
pub mod pilot;
