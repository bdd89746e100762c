// Distributional semantic space and the embedding-based topic coherence
// measure used for all model selection.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace dynmf::embedding {

struct EmbeddingSpace {
    int dims = 0;
    std::vector<std::string> vocab;              // deterministic order
    std::unordered_map<std::string, int> index;  // term -> row of vectors
    Eigen::MatrixXd vectors;                     // vocab_size x dims

    std::size_t vocab_size() const { return vocab.size(); }
    bool contains(const std::string& term) const { return index.count(term) > 0; }
    int row_of(const std::string& term) const {
        auto it = index.find(term);
        return it == index.end() ? -1 : it->second;
    }
};

struct SkipgramConfig {
    int dims = 100;
    int context_window = 5;
    int negatives = 5;
    int epochs = 5;
    int min_count = 5;
    std::uint64_t seed = 1;
    double learning_rate = 0.025;
};

// Skip-gram with negative sampling, single-threaded so that a seed fully
// determines the result. Vocabulary keeps terms with count >= min_count,
// ordered by (count desc, term asc). Throws when the vocabulary is empty.
EmbeddingSpace train_skipgram(const std::vector<std::vector<std::string>>& docs,
                              const SkipgramConfig& config);

// word2vec text format: header "vocab dims", then "term v1 ... vd" per line.
// Duplicate terms: last one wins with a warning. A line with the wrong number
// of values is an error naming the line.
EmbeddingSpace load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingSpace& space, const std::string& path);

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct CoherenceResult {
    double value = 0.0;
    bool degenerate = false;  // fewer than two in-vocabulary terms
};

// Mean pairwise cosine similarity over all unordered pairs of in-vocabulary
// terms; pairs with an out-of-vocabulary member are skipped.
CoherenceResult topic_coherence(const std::vector<std::string>& terms,
                                const EmbeddingSpace& space);

// Mean of the per-topic coherence scores; degenerate topics contribute 0.
double model_coherence(const std::vector<std::vector<std::string>>& topic_terms,
                       const EmbeddingSpace& space);

}  // namespace dynmf::embedding
