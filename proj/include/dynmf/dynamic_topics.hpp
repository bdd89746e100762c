// Second layer: stack truncated window-topic term vectors into a condensed
// topic-document matrix, factorize it and derive dynamic topics with their
// temporal structure.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dynmf/embedding.hpp"
#include "dynmf/nmf.hpp"
#include "dynmf/window_topics.hpp"

namespace dynmf::dynamic_topics {

struct TopicRef {
    int window_id = 0;
    int topic = 0;

    auto operator<=>(const TopicRef&) const = default;
};

struct TopicDocumentMatrix {
    std::vector<TopicRef> rows;      // one per window topic, n' = sum of k_i
    std::vector<std::string> terms;  // union of surviving top terms, lexicographic
    Eigen::SparseMatrix<double> values;

    Eigen::Index rows_count() const { return values.rows(); }
};

// Keeps the top-t weights of every window topic's H row, zeroes the rest,
// stacks the rows and drops columns that never received a nonzero weight.
// Rows are L2-normalized when normalize is set.
TopicDocumentMatrix build_topic_document_matrix(
    const std::vector<window_topics::WindowTopicModel>& models, int t_stack = 20,
    bool normalize = true);

struct DynamicModel {
    int k_prime = 0;
    nmf::TopicModelFactors factors;  // over B
    std::vector<TopicRef> rows;      // B's row metadata
    std::vector<std::string> terms;  // B's columns
    std::map<int, double> coherence_by_k;
    std::vector<std::vector<std::string>> descriptors;
    std::vector<bool> short_descriptor;
    std::vector<int> assignment;  // window topic row -> dynamic topic
    std::vector<int> frequency;   // dynamic topic -> count of distinct windows
};

// NMF with NNDSVD over B; k' chosen by coherence argmax over the range with
// ties to the smaller value.
DynamicModel fit_dynamic(const TopicDocumentMatrix& b, window_topics::KRange range,
                         int t_coherence, const embedding::EmbeddingSpace& space,
                         const nmf::NmfConfig& config = {}, int threads = 0);

// Argmax over each second-layer W row, ties to the lowest index.
std::vector<int> assign_window_topics(const Eigen::MatrixXd& W);

// Distinct time windows contributing at least one window topic per dynamic
// topic.
std::vector<int> topic_frequency(const std::vector<int>& assignment,
                                 const std::vector<TopicRef>& rows, int k_prime);

// Union of the speech sets of the window topics assigned to the dynamic
// topic.
std::set<std::string> collect_speeches(const DynamicModel& model, int dynamic_topic,
                                       const std::vector<window_topics::WindowTopicModel>& models);

struct TimeSeries {
    std::vector<int> window_ids;      // ascending
    std::vector<std::string> labels;  // per window
    // counts[d][w] = speeches of dynamic topic d in window w (zero-filled)
    std::vector<std::vector<long>> counts;
};

TimeSeries topic_time_series(const DynamicModel& model,
                             const std::vector<window_topics::WindowTopicModel>& models);

void save_time_series_csv(const TimeSeries& series, const std::string& path);

// dynamic-topic JSON (descriptors, members, frequency, assignment) plus the
// factors, B and term dictionary as sidecars under the given prefix.
void save_dynamic_model(const DynamicModel& model, const std::string& prefix);
DynamicModel load_dynamic_model(const std::string& prefix);

void save_topic_document_matrix(const TopicDocumentMatrix& b, const std::string& prefix);
TopicDocumentMatrix load_topic_document_matrix(const std::string& prefix);

}  // namespace dynmf::dynamic_topics
