#include "dynmf/dynamic_topics.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace dynmf::dynamic_topics {

TopicDocumentMatrix build_topic_document_matrix(
    const std::vector<window_topics::WindowTopicModel>& models, int t_stack, bool normalize) {
    if (models.empty())
        throw std::invalid_argument("build_topic_document_matrix: no window models");
    if (t_stack < 1) throw std::invalid_argument("build_topic_document_matrix: t must be >= 1");

    // Collect per window topic the surviving (term, weight) pairs.
    struct Row {
        TopicRef ref;
        std::vector<std::pair<std::string, double>> weights;
    };
    std::vector<Row> stacked;
    std::set<std::string> term_union;
    for (const auto& model : models) {
        for (Eigen::Index topic = 0; topic < model.factors.H.rows(); ++topic) {
            Row row;
            row.ref = {model.window_id, static_cast<int>(topic)};
            auto terms = window_topics::top_terms(model.factors.H.row(topic).transpose(),
                                                  model.terms, t_stack);
            for (const auto& term : terms) {
                const auto it = std::lower_bound(model.terms.begin(), model.terms.end(), term);
                const auto col = static_cast<Eigen::Index>(it - model.terms.begin());
                row.weights.emplace_back(term, model.factors.H(topic, col));
                term_union.insert(term);
            }
            stacked.push_back(std::move(row));
        }
    }

    TopicDocumentMatrix b;
    b.terms.assign(term_union.begin(), term_union.end());
    std::unordered_map<std::string, int> col;
    for (std::size_t j = 0; j < b.terms.size(); ++j) col[b.terms[j]] = static_cast<int>(j);

    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t i = 0; i < stacked.size(); ++i) {
        b.rows.push_back(stacked[i].ref);
        double sq = 0.0;
        for (const auto& [term, w] : stacked[i].weights) sq += w * w;
        const double inv = (normalize && sq > 0.0) ? 1.0 / std::sqrt(sq) : 1.0;
        for (const auto& [term, w] : stacked[i].weights)
            entries.emplace_back(static_cast<Eigen::Index>(i), col.at(term), w * inv);
    }
    b.values.resize(static_cast<Eigen::Index>(stacked.size()),
                    static_cast<Eigen::Index>(b.terms.size()));
    b.values.setFromTriplets(entries.begin(), entries.end());
    b.values.makeCompressed();
    return b;
}

DynamicModel fit_dynamic(const TopicDocumentMatrix& b, window_topics::KRange range,
                         int t_coherence, const embedding::EmbeddingSpace& space,
                         const nmf::NmfConfig& config, int threads) {
    const int bound = static_cast<int>(std::min(b.values.rows(), b.values.cols()));
    if (range.min < 2) throw std::invalid_argument("fit_dynamic: k'_min must be >= 2");
    if (range.max < range.min) throw std::invalid_argument("fit_dynamic: empty k' range");
    if (range.max > bound)
        throw std::invalid_argument("fit_dynamic: k'_max=" + std::to_string(range.max) +
                                    " exceeds min(n',m')=" + std::to_string(bound));

    const int count = range.max - range.min + 1;
    std::vector<nmf::TopicModelFactors> sweep(static_cast<std::size_t>(count));
    std::vector<double> scores(static_cast<std::size_t>(count));

    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, count));
    std::atomic<int> next(0);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                    const int k = range.min + i;
                    auto factors = nmf::factorize(b.values, k, config);
                    auto descriptors = window_topics::descriptors_of(factors, b.terms, t_coherence);
                    scores[static_cast<std::size_t>(i)] =
                        embedding::model_coherence(descriptors, space);
                    sweep[static_cast<std::size_t>(i)] = std::move(factors);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    DynamicModel model;
    model.rows = b.rows;
    model.terms = b.terms;
    int best = 0;
    for (int i = 0; i < count; ++i) {
        model.coherence_by_k[range.min + i] = scores[static_cast<std::size_t>(i)];
        if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
    }
    model.k_prime = range.min + best;
    model.factors = std::move(sweep[static_cast<std::size_t>(best)]);
    model.descriptors = window_topics::descriptors_of(model.factors, model.terms, t_coherence,
                                                      &model.short_descriptor);
    model.assignment = assign_window_topics(model.factors.W);
    model.frequency = topic_frequency(model.assignment, model.rows, model.k_prime);
    return model;
}

std::vector<int> assign_window_topics(const Eigen::MatrixXd& W) {
    return nmf::argmax_rows(W);
}

std::vector<int> topic_frequency(const std::vector<int>& assignment,
                                 const std::vector<TopicRef>& rows, int k_prime) {
    if (assignment.size() != rows.size())
        throw std::invalid_argument("topic_frequency: assignment does not cover the rows");
    std::vector<std::set<int>> windows(static_cast<std::size_t>(k_prime));
    for (std::size_t i = 0; i < rows.size(); ++i)
        windows[static_cast<std::size_t>(assignment[i])].insert(rows[i].window_id);
    std::vector<int> frequency;
    frequency.reserve(windows.size());
    for (const auto& w : windows) frequency.push_back(static_cast<int>(w.size()));
    return frequency;
}

std::set<std::string> collect_speeches(
    const DynamicModel& model, int dynamic_topic,
    const std::vector<window_topics::WindowTopicModel>& models) {
    if (dynamic_topic < 0 || dynamic_topic >= model.k_prime)
        throw std::invalid_argument("collect_speeches: dynamic topic out of range");
    std::unordered_map<int, const window_topics::WindowTopicModel*> by_window;
    for (const auto& m : models) by_window[m.window_id] = &m;
    std::set<std::string> speeches;
    for (std::size_t i = 0; i < model.rows.size(); ++i) {
        if (model.assignment[i] != dynamic_topic) continue;
        const auto it = by_window.find(model.rows[i].window_id);
        if (it == by_window.end())
            throw std::invalid_argument("collect_speeches: missing window model " +
                                        std::to_string(model.rows[i].window_id));
        const auto& wm = *it->second;
        for (std::size_t r = 0; r < wm.assignments.size(); ++r)
            if (wm.assignments[r] == model.rows[i].topic) speeches.insert(wm.row_ids[r]);
    }
    return speeches;
}

TimeSeries topic_time_series(const DynamicModel& model,
                             const std::vector<window_topics::WindowTopicModel>& models) {
    TimeSeries series;
    std::map<int, std::string> labels;
    for (const auto& m : models) labels[m.window_id] = m.label;
    std::unordered_map<int, std::size_t> window_pos;
    for (const auto& [id, label] : labels) {
        window_pos[id] = series.window_ids.size();
        series.window_ids.push_back(id);
        series.labels.push_back(label);
    }
    series.counts.assign(static_cast<std::size_t>(model.k_prime),
                         std::vector<long>(series.window_ids.size(), 0));

    std::unordered_map<int, const window_topics::WindowTopicModel*> by_window;
    for (const auto& m : models) by_window[m.window_id] = &m;
    // per window topic: count of assigned speeches
    for (std::size_t i = 0; i < model.rows.size(); ++i) {
        const auto& wm = *by_window.at(model.rows[i].window_id);
        long count = 0;
        for (int a : wm.assignments)
            if (a == model.rows[i].topic) ++count;
        series.counts[static_cast<std::size_t>(model.assignment[i])]
                     [window_pos.at(model.rows[i].window_id)] += count;
    }
    return series;
}

void save_time_series_csv(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "window_id,label";
    for (std::size_t d = 0; d < series.counts.size(); ++d) out << ",topic_" << d;
    out << '\n';
    for (std::size_t w = 0; w < series.window_ids.size(); ++w) {
        out << series.window_ids[w] << ',' << series.labels[w];
        for (std::size_t d = 0; d < series.counts.size(); ++d) out << ',' << series.counts[d][w];
        out << '\n';
    }
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_topic_document_matrix(const TopicDocumentMatrix& b, const std::string& prefix) {
    std::ofstream out(prefix + ".mtx");
    if (!out) throw std::runtime_error("cannot write " + prefix + ".mtx");
    out << b.values.rows() << ' ' << b.values.cols() << ' ' << b.values.nonZeros() << " 0\n";
    for (int k = 0; k < b.values.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(b.values, k); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << fmt_double(it.value()) << '\n';
    std::ofstream rows(prefix + ".rows.txt");
    if (!rows) throw std::runtime_error("cannot write " + prefix + ".rows.txt");
    for (const auto& r : b.rows) rows << r.window_id << ' ' << r.topic << '\n';
    std::ofstream terms(prefix + ".terms.txt");
    if (!terms) throw std::runtime_error("cannot write " + prefix + ".terms.txt");
    for (const auto& t : b.terms) terms << t << '\n';
}

TopicDocumentMatrix load_topic_document_matrix(const std::string& prefix) {
    TopicDocumentMatrix b;
    std::ifstream in(prefix + ".mtx");
    if (!in) throw std::runtime_error("cannot read " + prefix + ".mtx");
    Eigen::Index rows, cols;
    std::size_t nnz;
    int tag;
    if (!(in >> rows >> cols >> nnz >> tag)) throw std::runtime_error(prefix + ".mtx: bad header");
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::Index r, c;
    double v;
    while (in >> r >> c >> v) entries.emplace_back(r, c, v);
    if (entries.size() != nnz) throw std::runtime_error(prefix + ".mtx: truncated triplets");
    b.values.resize(rows, cols);
    b.values.setFromTriplets(entries.begin(), entries.end());
    b.values.makeCompressed();
    std::ifstream rows_in(prefix + ".rows.txt");
    if (!rows_in) throw std::runtime_error("cannot read " + prefix + ".rows.txt");
    TopicRef ref;
    while (rows_in >> ref.window_id >> ref.topic) b.rows.push_back(ref);
    std::ifstream terms_in(prefix + ".terms.txt");
    if (!terms_in) throw std::runtime_error("cannot read " + prefix + ".terms.txt");
    std::string line;
    while (std::getline(terms_in, line)) b.terms.push_back(line);
    if (static_cast<Eigen::Index>(b.rows.size()) != rows ||
        static_cast<Eigen::Index>(b.terms.size()) != cols)
        throw std::runtime_error(prefix + ": sidecars do not match the matrix header");
    return b;
}

void save_dynamic_model(const DynamicModel& model, const std::string& prefix) {
    nmf::save_factors(model.factors, prefix);
    {
        std::ofstream terms(prefix + ".terms.txt");
        if (!terms) throw std::runtime_error("cannot write " + prefix + ".terms.txt");
        for (const auto& t : model.terms) terms << t << '\n';
    }
    nlohmann::json doc;
    doc["k_prime"] = model.k_prime;
    std::vector<std::pair<int, double>> sweep(model.coherence_by_k.begin(),
                                              model.coherence_by_k.end());
    doc["coherence_by_k"] = sweep;
    doc["descriptors"] = model.descriptors;
    doc["short_descriptor"] = model.short_descriptor;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < model.rows.size(); ++i)
        rows.push_back({model.rows[i].window_id, model.rows[i].topic, model.assignment[i]});
    doc["rows"] = rows;  // [window_id, topic, dynamic_topic]
    doc["frequency"] = model.frequency;
    std::ofstream out(prefix + ".model.json");
    if (!out) throw std::runtime_error("cannot write " + prefix + ".model.json");
    out << doc.dump(2) << '\n';
}

DynamicModel load_dynamic_model(const std::string& prefix) {
    DynamicModel model;
    model.factors = nmf::load_factors(prefix);
    std::ifstream terms(prefix + ".terms.txt");
    if (!terms) throw std::runtime_error("cannot read " + prefix + ".terms.txt");
    std::string line;
    while (std::getline(terms, line)) model.terms.push_back(line);
    std::ifstream in(prefix + ".model.json");
    if (!in) throw std::runtime_error("cannot read " + prefix + ".model.json");
    nlohmann::json doc = nlohmann::json::parse(in);
    model.k_prime = doc.at("k_prime").get<int>();
    for (const auto& pair : doc.at("coherence_by_k"))
        model.coherence_by_k[pair.at(0).get<int>()] = pair.at(1).get<double>();
    model.descriptors = doc.at("descriptors").get<std::vector<std::vector<std::string>>>();
    model.short_descriptor = doc.at("short_descriptor").get<std::vector<bool>>();
    for (const auto& row : doc.at("rows")) {
        model.rows.push_back({row.at(0).get<int>(), row.at(1).get<int>()});
        model.assignment.push_back(row.at(2).get<int>());
    }
    model.frequency = doc.at("frequency").get<std::vector<int>>();
    return model;
}

}  // namespace dynmf::dynamic_topics
