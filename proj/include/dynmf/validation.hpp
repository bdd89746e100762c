// Semantic and construct validity tooling: average-linkage clustering of
// dynamic topics, taxonomy matching and recall curves.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynmf/corpus.hpp"

namespace dynmf::validation {

struct Merge {
    int a = 0;  // node ids: leaves are 0..k'-1, merge i creates node k'+i
    int b = 0;
    double height = 0.0;
    int size = 0;  // leaves under the merged node
};

struct Dendrogram {
    int leaves = 0;
    std::vector<Merge> merges;  // exactly leaves-1, heights non-decreasing

    // Newick string with optional leaf labels (defaults to t<i>).
    std::string newick(const std::vector<std::string>& labels = {}) const;
};

// Average-linkage agglomerative clustering over the dynamic-topic term
// vectors (rows of the second-layer H). Similarity is (Pearson(x,y)+1)/2 and
// distance 1 - similarity; a zero-variance row has undefined correlation and
// falls back to similarity 0.5 with a warning.
Dendrogram cluster_topics(const Eigen::MatrixXd& H);

struct TaxonomySubject {
    std::string code;
    std::string title;
    std::string subject_document;  // description of the subject and all descendants
};

// JSON tree of {code, title, description, children}; either a top-level array
// of nodes or an object with a "children" array. The level of a node is the
// number of dot-separated components in its code ("3.20" sits at level 2).
std::vector<TaxonomySubject> load_taxonomy(const std::string& path, int level = 2);

struct SubjectMatch {
    std::string code;
    int best_topic = -1;
    double similarity = 0.0;
};

// Cosine between each subject document (term frequencies after the corpus
// preprocessing pipeline, no IDF) and each topic's top-top_t term list
// (binary presence). Ties go to the lowest topic index. A subject document
// that is empty after tokenization is an error.
std::vector<SubjectMatch> match_taxonomy(
    const std::vector<std::vector<std::string>>& descriptors,
    const std::vector<TaxonomySubject>& subjects, const corpus::PreprocessConfig& config,
    int top_t = 10);

// Fraction of subjects whose best similarity reaches each threshold.
std::vector<std::pair<double, double>> recall_curve(const std::vector<SubjectMatch>& matches,
                                                    const std::vector<double>& thresholds);

void save_dendrogram_json(const Dendrogram& dendrogram, const std::string& path);
void save_recall_csv(const std::vector<std::pair<double, double>>& curve,
                     const std::string& path);
void save_matches_json(const std::vector<SubjectMatch>& matches, const std::string& path);

}  // namespace dynmf::validation
