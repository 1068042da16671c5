//! Proximity features, linear SVM and nearest-neighbor classifiers, and
//! late fusion over body parts.

mod fusion;
mod knn;
mod parts;
mod proximity;
mod svm;

pub(crate) use fusion::first_max;
pub use fusion::{fuse_predict, fuse_probabilities, FusionEnsemble, PartModel, PROB_FLOOR};
pub use knn::{knn_classify, knn_from_distances};
pub use parts::{decompose_parts, part_frames};
pub use proximity::{
    cross_proximity_grid, proximity_grid, proximity_matrix, proximity_matrix_with,
    proximity_vector, ProximityMatrix, ProximityVector,
};
pub use svm::{
    argmax_lowest, train_ppfsvm, train_svm, PairModel, Prediction, Scaling, SvmModel, SvmParams,
    TIE_TOL,
};
