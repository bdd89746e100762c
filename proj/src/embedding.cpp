#include "dynmf/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace dynmf::embedding {

namespace {

// Uniform double in [0,1) from the top 53 bits of the generator; keeps the
// sampling fully specified rather than relying on distribution internals.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

EmbeddingSpace train_skipgram(const std::vector<std::vector<std::string>>& docs,
                              const SkipgramConfig& config) {
    if (config.dims < 1 || config.context_window < 1 || config.negatives < 1 ||
        config.epochs < 1 || config.min_count < 1 || config.learning_rate <= 0.0)
        throw std::invalid_argument("SkipgramConfig: all parameters must be positive");

    std::map<std::string, long long> counts;
    for (const auto& doc : docs)
        for (const auto& token : doc) ++counts[token];

    std::vector<std::pair<std::string, long long>> kept;
    for (const auto& [term, count] : counts)
        if (count >= config.min_count) kept.emplace_back(term, count);
    if (kept.empty()) throw std::runtime_error("train_skipgram: empty vocabulary");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    EmbeddingSpace space;
    space.dims = config.dims;
    for (const auto& [term, count] : kept) {
        space.index[term] = static_cast<int>(space.vocab.size());
        space.vocab.push_back(term);
    }
    const int vocab_size = static_cast<int>(space.vocab.size());

    // Cumulative unigram distribution raised to 3/4 for negative sampling.
    std::vector<double> cumulative(static_cast<std::size_t>(vocab_size));
    double total = 0.0;
    for (int i = 0; i < vocab_size; ++i) {
        total += std::pow(static_cast<double>(kept[static_cast<std::size_t>(i)].second), 0.75);
        cumulative[static_cast<std::size_t>(i)] = total;
    }

    std::vector<std::vector<int>> encoded;
    long long corpus_tokens = 0;
    for (const auto& doc : docs) {
        std::vector<int> ids;
        for (const auto& token : doc) {
            auto it = space.index.find(token);
            if (it != space.index.end()) ids.push_back(it->second);
        }
        corpus_tokens += static_cast<long long>(ids.size());
        if (ids.size() >= 2) encoded.push_back(std::move(ids));
    }

    std::mt19937_64 rng(config.seed);
    Eigen::MatrixXd syn0(vocab_size, config.dims);
    for (int i = 0; i < vocab_size; ++i)
        for (int d = 0; d < config.dims; ++d)
            syn0(i, d) = (uniform01(rng) - 0.5) / config.dims;
    Eigen::MatrixXd syn1 = Eigen::MatrixXd::Zero(vocab_size, config.dims);

    auto sample_negative = [&]() {
        const double r = uniform01(rng) * total;
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
        return static_cast<int>(it - cumulative.begin());
    };

    const double total_words =
        std::max<double>(1.0, static_cast<double>(corpus_tokens) * config.epochs);
    long long processed = 0;
    Eigen::VectorXd grad_in(config.dims);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (const auto& ids : encoded) {
            const int len = static_cast<int>(ids.size());
            for (int pos = 0; pos < len; ++pos) {
                const double alpha =
                    config.learning_rate *
                    std::max(1.0 - static_cast<double>(processed) / total_words, 1e-4);
                ++processed;
                const int center = ids[static_cast<std::size_t>(pos)];
                const int lo = std::max(0, pos - config.context_window);
                const int hi = std::min(len - 1, pos + config.context_window);
                for (int ctx_pos = lo; ctx_pos <= hi; ++ctx_pos) {
                    if (ctx_pos == pos) continue;
                    const int context = ids[static_cast<std::size_t>(ctx_pos)];
                    grad_in.setZero();
                    for (int s = 0; s <= config.negatives; ++s) {
                        int target;
                        double label;
                        if (s == 0) {
                            target = context;
                            label = 1.0;
                        } else {
                            target = sample_negative();
                            if (target == context) continue;
                            label = 0.0;
                        }
                        const double dot = syn0.row(center).dot(syn1.row(target));
                        const double pred = 1.0 / (1.0 + std::exp(-dot));
                        const double g = (label - pred) * alpha;
                        grad_in += g * syn1.row(target).transpose();
                        syn1.row(target) += g * syn0.row(center);
                    }
                    syn0.row(center) += grad_in.transpose();
                }
            }
        }
    }
    space.vectors = std::move(syn0);
    if (!space.vectors.allFinite())
        throw std::runtime_error("train_skipgram: training produced non-finite vectors");
    return space;
}

EmbeddingSpace load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_embeddings: " + path + " is empty");
    std::istringstream header(line);
    std::size_t declared_vocab = 0;
    int dims = 0;
    if (!(header >> declared_vocab >> dims) || dims < 1)
        throw std::runtime_error("load_embeddings: bad header in " + path);

    EmbeddingSpace space;
    space.dims = dims;
    std::vector<Eigen::VectorXd> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string term;
        ss >> term;
        Eigen::VectorXd vec(dims);
        for (int d = 0; d < dims; ++d) {
            if (!(ss >> vec(d)))
                throw std::runtime_error("load_embeddings: " + path + " line " +
                                         std::to_string(line_no) + ": expected " +
                                         std::to_string(dims) + " values");
        }
        double extra;
        if (ss >> extra)
            throw std::runtime_error("load_embeddings: " + path + " line " +
                                     std::to_string(line_no) + ": expected " +
                                     std::to_string(dims) + " values");
        auto it = space.index.find(term);
        if (it != space.index.end()) {
            std::cerr << "[warn] " << path << " line " << line_no << ": duplicate term '" << term
                      << "', keeping the last occurrence\n";
            rows[static_cast<std::size_t>(it->second)] = std::move(vec);
        } else {
            space.index[term] = static_cast<int>(space.vocab.size());
            space.vocab.push_back(term);
            rows.push_back(std::move(vec));
        }
    }
    if (rows.size() != declared_vocab)
        std::cerr << "[warn] " << path << ": header declares " << declared_vocab
                  << " terms, file has " << rows.size() << '\n';
    space.vectors.resize(static_cast<Eigen::Index>(rows.size()), dims);
    for (std::size_t i = 0; i < rows.size(); ++i)
        space.vectors.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    if (!space.vectors.allFinite())
        throw std::runtime_error("load_embeddings: " + path + " contains non-finite values");
    return space;
}

void save_embeddings(const EmbeddingSpace& space, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_embeddings: cannot write " + path);
    out << space.vocab_size() << ' ' << space.dims << '\n';
    for (std::size_t i = 0; i < space.vocab.size(); ++i) {
        out << space.vocab[i];
        for (int d = 0; d < space.dims; ++d)
            out << ' ' << fmt_double(space.vectors(static_cast<Eigen::Index>(i), d));
        out << '\n';
    }
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double denom = a.norm() * b.norm();
    return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

CoherenceResult topic_coherence(const std::vector<std::string>& terms,
                                const EmbeddingSpace& space) {
    std::vector<int> rows;
    for (const auto& term : terms) {
        const int r = space.row_of(term);
        if (r >= 0) rows.push_back(r);
    }
    if (rows.size() < 2) return {0.0, true};
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t j = 1; j < rows.size(); ++j)
        for (std::size_t i = 0; i < j; ++i) {
            sum += cosine(space.vectors.row(rows[i]).transpose(),
                          space.vectors.row(rows[j]).transpose());
            ++pairs;
        }
    return {sum / pairs, false};
}

double model_coherence(const std::vector<std::vector<std::string>>& topic_terms,
                       const EmbeddingSpace& space) {
    if (topic_terms.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& terms : topic_terms) sum += topic_coherence(terms, space).value;
    return sum / static_cast<double>(topic_terms.size());
}

}  // namespace dynmf::embedding
