#include "dynmf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

namespace dynmf::synth {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

void validate(const PlantedSpec& spec) {
    if (spec.n_windows < 1) throw std::invalid_argument("PlantedSpec: n_windows must be >= 1");
    if (spec.topics.empty()) throw std::invalid_argument("PlantedSpec: no planted topics");
    if (spec.doc_length_range.first < 1 ||
        spec.doc_length_range.second < spec.doc_length_range.first)
        throw std::invalid_argument("PlantedSpec: bad doc_length_range");
    if (spec.topic_term_fraction < 0.0 || spec.topic_term_fraction > 1.0)
        throw std::invalid_argument("PlantedSpec: topic_term_fraction outside [0,1]");
    if (spec.window_term_fraction < 0.0 ||
        spec.topic_term_fraction + spec.window_term_fraction > 1.0)
        throw std::invalid_argument("PlantedSpec: term fractions exceed 1");
    if (spec.window_term_fraction > 0.0 && spec.window_vocab_size < 1)
        throw std::invalid_argument("PlantedSpec: window vocabulary too small for document length");
    if (spec.topic_term_fraction + spec.window_term_fraction < 1.0 &&
        spec.background_vocab.empty())
        throw std::invalid_argument("PlantedSpec: background vocabulary too small for document length");
    std::vector<int> active_count(static_cast<std::size_t>(spec.n_windows), 0);
    for (const auto& topic : spec.topics) {
        if (topic.vocabulary.empty())
            throw std::invalid_argument("PlantedSpec: vocabulary too small for document length (topic '" +
                                        topic.name + "')");
        if (topic.burst_profile.size() != topic.active_windows.size())
            throw std::invalid_argument("PlantedSpec: burst_profile does not match active_windows");
        for (int w : topic.active_windows) {
            if (w < 0 || w >= spec.n_windows)
                throw std::invalid_argument("PlantedSpec: active window out of range");
            ++active_count[static_cast<std::size_t>(w)];
        }
    }
    for (int w = 0; w < spec.n_windows; ++w)
        if (active_count[static_cast<std::size_t>(w)] < 2)
            throw std::invalid_argument("PlantedSpec: window " + std::to_string(w) +
                                        " has fewer than 2 active topics");
}

corpus::Date window_date(int window, int doc_index) {
    corpus::Date d;
    d.year = 2000 + window / 4;
    d.month = (window % 4) * 3 + 1;
    d.day = 1 + doc_index % 28;
    return d;
}

std::string base26(int value, int width) {
    std::string s(static_cast<std::size_t>(width), 'a');
    for (int i = width - 1; i >= 0 && value > 0; --i) {
        s[static_cast<std::size_t>(i)] = static_cast<char>('a' + value % 26);
        value /= 26;
    }
    return s;
}

}  // namespace

SynthResult generate(const PlantedSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    SynthResult result;

    // Per-topic cumulative sampling weights; rank r gets 1/(r+1)^skew.
    std::vector<std::vector<double>> cumulative(spec.topics.size());
    for (std::size_t t = 0; t < spec.topics.size(); ++t) {
        double total = 0.0;
        for (std::size_t r = 0; r < spec.topics[t].vocabulary.size(); ++r) {
            total += std::pow(static_cast<double>(r + 1), -spec.zipf_skew);
            cumulative[t].push_back(total);
        }
    }
    auto sample_topic_term = [&](std::size_t t) -> const std::string& {
        const auto& cum = cumulative[t];
        const double r = uniform01(rng) * cum.back();
        const auto it = std::lower_bound(cum.begin(), cum.end(), r);
        return spec.topics[t].vocabulary[static_cast<std::size_t>(it - cum.begin())];
    };

    std::vector<std::vector<std::string>> window_vocab(
        static_cast<std::size_t>(spec.n_windows));
    for (int w = 0; w < spec.n_windows; ++w)
        for (int v = 0; v < spec.window_vocab_size; ++v)
            window_vocab[static_cast<std::size_t>(w)].push_back("period" + base26(w, 2) +
                                                                base26(v, 3));

    int doc_counter = 0;
    for (int w = 0; w < spec.n_windows; ++w) {
        for (std::size_t t = 0; t < spec.topics.size(); ++t) {
            const PlantedTopic& topic = spec.topics[t];
            auto it = std::find(topic.active_windows.begin(), topic.active_windows.end(), w);
            if (it == topic.active_windows.end()) continue;
            const int docs = topic.burst_profile[static_cast<std::size_t>(
                it - topic.active_windows.begin())];
            for (int d = 0; d < docs; ++d) {
                const int len =
                    spec.doc_length_range.first +
                    static_cast<int>(pick(rng, static_cast<std::size_t>(
                                                   spec.doc_length_range.second -
                                                   spec.doc_length_range.first + 1)));
                std::string text;
                for (int i = 0; i < len; ++i) {
                    const double r = uniform01(rng);
                    if (i > 0) text += ' ';
                    if (r < spec.topic_term_fraction) {
                        text += sample_topic_term(t);
                    } else if (r < spec.topic_term_fraction + spec.window_term_fraction) {
                        const auto& pool = window_vocab[static_cast<std::size_t>(w)];
                        text += pool[pick(rng, pool.size())];
                    } else {
                        text += spec.background_vocab[pick(rng, spec.background_vocab.size())];
                    }
                }
                char id[40];
                std::snprintf(id, sizeof(id), "w%02d_t%02zu_d%05d", w, t, doc_counter++);
                corpus::Speech speech;
                speech.id = id;
                speech.date = window_date(w, d);
                speech.text = std::move(text);
                result.truth.doc_theme[speech.id] = static_cast<int>(t);
                result.corpus.speeches.push_back(std::move(speech));
            }
        }
    }
    std::stable_sort(
        result.corpus.speeches.begin(), result.corpus.speeches.end(),
        [](const corpus::Speech& a, const corpus::Speech& b) { return a.date < b.date; });
    return result;
}

PlantedSpec uniform_fixture(int themes, int windows, int docs_per_window, int vocab_per_theme,
                            int background_vocab, std::uint64_t seed) {
    static const char* kPrefixes[] = {"alpha", "bravo", "carol", "delta",
                                      "ember", "frost", "gleam", "haven"};
    PlantedSpec spec;
    spec.n_windows = windows;
    spec.seed = seed;
    for (int t = 0; t < themes; ++t) {
        PlantedTopic topic;
        topic.name = kPrefixes[t % 8];
        for (int v = 0; v < vocab_per_theme; ++v)
            topic.vocabulary.push_back(topic.name + base26(v, 3));
        const int share = docs_per_window / themes + (t < docs_per_window % themes ? 1 : 0);
        for (int w = 0; w < windows; ++w) {
            topic.active_windows.push_back(w);
            topic.burst_profile.push_back(share);
        }
        spec.topics.push_back(std::move(topic));
    }
    for (int v = 0; v < background_vocab; ++v)
        spec.background_vocab.push_back("zumnoise" + base26(v, 3));
    return spec;
}

void save_corpus_jsonl(const corpus::Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& s : corpus.speeches) {
        nlohmann::json rec;
        rec["id"] = s.id;
        rec["date"] = s.date.to_string();
        if (!s.speaker_id.empty()) rec["speaker_id"] = s.speaker_id;
        rec["text"] = s.text;
        out << rec.dump() << '\n';
    }
}

void save_labels_json(const GroundTruth& truth, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    nlohmann::json doc;
    doc["doc_theme"] = truth.doc_theme;
    out << doc.dump(2) << '\n';
}

}  // namespace dynmf::synth
