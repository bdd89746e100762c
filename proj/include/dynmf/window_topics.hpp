// First layer: per-window topic model with coherence-driven selection of the
// number of topics, top-term descriptors and single-membership assignment.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dynmf/corpus.hpp"
#include "dynmf/embedding.hpp"
#include "dynmf/nmf.hpp"

namespace dynmf::window_topics {

struct KRange {
    int min = 2;
    int max = 2;
};

struct WindowTopicModel {
    int window_id = 0;
    std::string label;
    int k_selected = 0;
    nmf::TopicModelFactors factors;
    std::vector<std::string> terms;    // column dictionary for factors.H
    std::map<int, double> coherence_by_k;
    std::vector<std::vector<std::string>> descriptors;  // top-t terms per topic
    std::vector<bool> short_descriptor;                 // fewer than t nonzero terms
    std::vector<std::string> row_ids;  // speech ids, aligned with factors.W rows
    std::vector<int> assignments;      // row -> topic index
    std::vector<bool> weak_assignment; // all-zero W row, assignment is arbitrary
};

// Terms of the t largest weights in descending order, ties broken
// lexicographically. Only nonzero-weight terms are returned, so the list may
// be shorter than t.
std::vector<std::string> top_terms(const Eigen::VectorXd& row,
                                   const std::vector<std::string>& terms, int t);

std::vector<std::vector<std::string>> descriptors_of(const nmf::TopicModelFactors& factors,
                                                     const std::vector<std::string>& terms, int t,
                                                     std::vector<bool>* short_flags = nullptr);

// Argmax over each W row; ties go to the lowest topic index and all-zero rows
// are flagged as weak.
std::vector<int> assign_speeches(const Eigen::MatrixXd& W, std::vector<bool>* weak = nullptr);

// Factorizes the window for every k in [range.min, range.max], scores each
// model with the mean coherence of its top-t descriptors and keeps the
// argmax; ties prefer the smaller k. The sweep runs on `threads` threads
// (0 = hardware concurrency).
WindowTopicModel select_k(const corpus::DocTermMatrix& matrix, KRange range, int t_coherence,
                          const embedding::EmbeddingSpace& space,
                          const nmf::NmfConfig& config = {}, int threads = 0);

// Per-window JSON artifact (sweep scores, selected k, descriptors,
// assignments) plus the factors and term dictionary as sidecars.
void save_window_model(const WindowTopicModel& model, const std::string& prefix);
WindowTopicModel load_window_model(const std::string& prefix);

}  // namespace dynmf::window_topics
