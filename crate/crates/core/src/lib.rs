//! Single-pass streaming PCA under the spiked covariance model.
//!
//! Samples are consumed one at a time in blocks; working memory is `O(kp)`.
//! Start with [`algorithm::block_orthogonal_iteration`] or the rank-one
//! [`algorithm::block_power_method_rank1`].

pub mod algorithm;
pub mod baseline;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod perturbation;
pub mod rng;
pub mod stream;
pub mod theory;

pub use algorithm::{
    block_orthogonal_iteration, block_power_method_rank1, boosted_recovery, empirical_schedule,
    oja_baseline, theorem1_schedule, theorem2_schedule, BlockSchedule, RunReport,
    ScheduleConstants, StepRule, SubspaceEstimate,
};
pub use baseline::{batch_pca, batch_pca_on_matrix, BatchPca};
pub use error::{Error, Result};
pub use linalg::{Matrix, OrthonormalBasis};
pub use metrics::{explained_variance, principal_angle_distance, rank1_recovery_error};
pub use model::{ModelConfig, SpikedModel};
pub use stream::{
    BagOfWordsCorpus, CorpusStream, InMemoryStream, ModelStream, Orientation, SampleStream,
};
