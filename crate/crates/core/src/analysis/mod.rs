//! Representation and error analysis: linear CKA, 1-NN probing, Spearman
//! correlation and CSV/JSON exports for plotting.

pub mod cka;
pub mod export;
pub mod knn;
pub mod spearman;

pub use cka::{cka_matrix, linear_cka, mean_pool_bundle};
pub use export::{
    confusion_percent_csv, distance_accuracy_rows, embeddings_csv, knn_csv, write_cka_csv,
    CkaTable, DistanceRow,
};
pub use knn::{knn_probe, nearest_neighbours, KnnReport};
pub use spearman::{mid_ranks, spearman, spearman_permutation, SpearmanResult};
