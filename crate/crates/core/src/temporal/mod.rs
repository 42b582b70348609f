//! Periodicity, daily profiles and temporal clustering of device traffic.

mod dwt;
mod kmeans;
mod metrics;
mod profile;
mod spectrum;
mod ward;

pub use dwt::{dwt_haar, haar_dwt, haar_idwt, PROFILE_LEVELS};
pub use kmeans::{bisecting_kmeans, cluster_profiles, BisectingFit, ClusterModel, KMeansConfig, Partition};
pub use metrics::{adjusted_rand_index, davies_bouldin, silhouette, silhouettes};
pub use profile::{daily_profile, daily_profiles, DailyProfile};
pub use spectrum::{hourly_series, periodogram, periodogram_peak, Direction, HourlySeries, SpectrumPeak};
pub use ward::{ward_linkage, ward_oracle, Dendrogram, Merge, WardFit};
