//! Metrics and analysis exports over trained tables.

mod classify;
mod cluster;
mod neighbors;
mod pca;
mod report;
mod series;
mod stats;

pub use classify::{classify_contexts, permutation_baseline};
pub use cluster::{kmeans_cosine, kmeans_silhouette, silhouette, Clustering};
pub use neighbors::{
    base_neighbors, clustering_consistency, default_sample, hit_at_k, nearest_neighbors, NeighborList,
};
pub use pca::{pca_2d, pca_table, Pca2d, PcaRow};
pub use report::{hit_at_k_csv, pca_csv, series_csv, EvalReport, HitRow, SeriesRow};
pub use series::{narrative_prompt, similarity_series, top_pairs, NARRATIVE_HEADER};
pub use stats::{rand_index, rank_average, spearman};
