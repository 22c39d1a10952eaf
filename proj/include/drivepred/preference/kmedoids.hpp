#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace drivepred::preference {

// Euclidean distance matrix between rows.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);

struct KMedoidsOptions {
  int restarts = 10;  // random initializations tried in addition to BUILD
  std::uint64_t seed = 1;
};

struct KMedoidsResult {
  std::vector<int> medoids;  // ascending row indices
  std::vector<int> labels;   // index into medoids
  double cost = 0.0;         // sum of distances to assigned medoid
  std::vector<double> cost_trace;  // after BUILD and after each accepted swap
};

// PAM: greedy BUILD initialization, then best-improvement SWAP until no swap
// lowers the cost.
KMedoidsResult pam(const Eigen::MatrixXd& dist, int k, const KMedoidsOptions& options = {});

// Mean silhouette with the given distances. Singleton clusters score 0.
double silhouette(const Eigen::MatrixXd& dist, const std::vector<int>& labels);

struct PreferenceModel {
  int k = 0;
  std::vector<int> medoids;
  std::vector<int> labels;
  std::vector<int> candidate_k;
  std::vector<double> silhouettes;
};

// Runs PAM for every K in [k_min, k_max] and keeps the silhouette maximizer
// (ties go to the smaller K).
PreferenceModel cluster_kmedoids(const Eigen::MatrixXd& points, int k_min, int k_max,
                                 const KMedoidsOptions& options = {});
PreferenceModel cluster_kmedoids_dist(const Eigen::MatrixXd& dist, int k_min, int k_max,
                                      const KMedoidsOptions& options = {});

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace drivepred::preference
