// Synthetic corpus generator with planted window/dynamic topic structure,
// used as the ground-truth oracle in end-to-end tests.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dynmf/corpus.hpp"

namespace dynmf::synth {

struct PlantedTopic {
    std::string name;
    std::vector<std::string> vocabulary;
    std::vector<int> active_windows;
    std::vector<int> burst_profile;  // docs per active window, parallel to active_windows
};

struct PlantedSpec {
    int n_windows = 1;
    std::vector<PlantedTopic> topics;
    std::vector<std::string> background_vocab;
    std::pair<int, int> doc_length_range{20, 40};
    double topic_term_fraction = 0.8;  // remainder drawn from the background
    double zipf_skew = 0.0;  // 0 = uniform; >0 ranks topic terms by 1/(r+1)^skew
    // Optional window-specific shared vocabulary, mimicking period-bound
    // events that cut across topics. Carved out of the background fraction.
    int window_vocab_size = 0;
    double window_term_fraction = 0.0;
    std::uint64_t seed = 1;
};

struct GroundTruth {
    std::map<std::string, int> doc_theme;  // document id -> planted topic index
};

struct SynthResult {
    corpus::Corpus corpus;
    GroundTruth truth;
};

// Every document draws its terms from one planted topic's vocabulary (plus
// background noise) and is timestamped into that topic's window. Windows are
// consecutive quarters starting 2000-Q1. Requires every window to have at
// least two active topics and non-empty vocabularies.
SynthResult generate(const PlantedSpec& spec);

// Convenience fixture: `themes` planted topics with disjoint generated
// vocabularies, all active in all `windows` windows at `docs_per_window`
// documents split evenly.
PlantedSpec uniform_fixture(int themes, int windows, int docs_per_window, int vocab_per_theme,
                            int background_vocab, std::uint64_t seed);

void save_corpus_jsonl(const corpus::Corpus& corpus, const std::string& path);
void save_labels_json(const GroundTruth& truth, const std::string& path);

}  // namespace dynmf::synth
