#include "dynmf/window_topics.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace dynmf::window_topics {

std::vector<std::string> top_terms(const Eigen::VectorXd& row,
                                   const std::vector<std::string>& terms, int t) {
    if (t < 1) throw std::invalid_argument("top_terms: t must be >= 1");
    if (row.size() != static_cast<Eigen::Index>(terms.size()))
        throw std::invalid_argument("top_terms: row length does not match the dictionary");
    std::vector<int> order;
    for (Eigen::Index j = 0; j < row.size(); ++j)
        if (row(j) > 0.0) order.push_back(static_cast<int>(j));
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (row(a) != row(b)) return row(a) > row(b);
        return terms[static_cast<std::size_t>(a)] < terms[static_cast<std::size_t>(b)];
    });
    if (order.size() > static_cast<std::size_t>(t)) order.resize(static_cast<std::size_t>(t));
    std::vector<std::string> result;
    result.reserve(order.size());
    for (int j : order) result.push_back(terms[static_cast<std::size_t>(j)]);
    return result;
}

std::vector<std::vector<std::string>> descriptors_of(const nmf::TopicModelFactors& factors,
                                                     const std::vector<std::string>& terms, int t,
                                                     std::vector<bool>* short_flags) {
    std::vector<std::vector<std::string>> descriptors;
    if (short_flags) short_flags->clear();
    for (Eigen::Index topic = 0; topic < factors.H.rows(); ++topic) {
        auto list = top_terms(factors.H.row(topic).transpose(), terms, t);
        if (short_flags) short_flags->push_back(list.size() < static_cast<std::size_t>(t));
        descriptors.push_back(std::move(list));
    }
    return descriptors;
}

std::vector<int> assign_speeches(const Eigen::MatrixXd& W, std::vector<bool>* weak) {
    return nmf::argmax_rows(W, weak);
}

WindowTopicModel select_k(const corpus::DocTermMatrix& matrix, KRange range, int t_coherence,
                          const embedding::EmbeddingSpace& space, const nmf::NmfConfig& config,
                          int threads) {
    const int bound = static_cast<int>(std::min(matrix.rows(), matrix.cols()));
    if (range.min < 2) throw std::invalid_argument("select_k: k_min must be >= 2");
    if (range.max < range.min) throw std::invalid_argument("select_k: empty k range");
    if (range.max > bound)
        throw std::invalid_argument("select_k: k_max=" + std::to_string(range.max) +
                                    " exceeds min(n,m)=" + std::to_string(bound) + " for window " +
                                    std::to_string(matrix.window_id));
    if (t_coherence < 2) throw std::invalid_argument("select_k: t must be >= 2");

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
                    auto factors = nmf::factorize(matrix.values, k, config);
                    auto descriptors = descriptors_of(factors, matrix.terms, t_coherence);
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

    WindowTopicModel model;
    model.window_id = matrix.window_id;
    model.terms = matrix.terms;
    model.row_ids = matrix.row_ids;
    int best = 0;
    for (int i = 0; i < count; ++i) {
        model.coherence_by_k[range.min + i] = scores[static_cast<std::size_t>(i)];
        if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)])
            best = i;  // strict comparison keeps the smaller k on ties
    }
    model.k_selected = range.min + best;
    model.factors = std::move(sweep[static_cast<std::size_t>(best)]);
    model.descriptors =
        descriptors_of(model.factors, model.terms, t_coherence, &model.short_descriptor);
    model.assignments = assign_speeches(model.factors.W, &model.weak_assignment);
    return model;
}

void save_window_model(const WindowTopicModel& model, const std::string& prefix) {
    nmf::save_factors(model.factors, prefix);
    {
        std::ofstream out(prefix + ".terms.txt");
        if (!out) throw std::runtime_error("cannot write " + prefix + ".terms.txt");
        for (const auto& t : model.terms) out << t << '\n';
    }
    nlohmann::json doc;
    doc["window_id"] = model.window_id;
    doc["label"] = model.label;
    doc["k_selected"] = model.k_selected;
    std::vector<std::pair<int, double>> sweep(model.coherence_by_k.begin(),
                                              model.coherence_by_k.end());
    doc["coherence_by_k"] = sweep;
    doc["descriptors"] = model.descriptors;
    doc["short_descriptor"] = model.short_descriptor;
    nlohmann::json assignments = nlohmann::json::object();
    nlohmann::json weak = nlohmann::json::array();
    for (std::size_t i = 0; i < model.row_ids.size(); ++i) {
        assignments[model.row_ids[i]] = model.assignments[i];
        if (model.weak_assignment[i]) weak.push_back(model.row_ids[i]);
    }
    doc["assignments"] = assignments;
    doc["weak_assignments"] = weak;
    doc["row_ids"] = model.row_ids;
    std::ofstream out(prefix + ".model.json");
    if (!out) throw std::runtime_error("cannot write " + prefix + ".model.json");
    out << doc.dump(2) << '\n';
}

WindowTopicModel load_window_model(const std::string& prefix) {
    WindowTopicModel model;
    model.factors = nmf::load_factors(prefix);
    {
        std::ifstream in(prefix + ".terms.txt");
        if (!in) throw std::runtime_error("cannot read " + prefix + ".terms.txt");
        std::string line;
        while (std::getline(in, line)) model.terms.push_back(line);
    }
    std::ifstream in(prefix + ".model.json");
    if (!in) throw std::runtime_error("cannot read " + prefix + ".model.json");
    nlohmann::json doc = nlohmann::json::parse(in);
    model.window_id = doc.at("window_id").get<int>();
    model.label = doc.at("label").get<std::string>();
    model.k_selected = doc.at("k_selected").get<int>();
    for (const auto& pair : doc.at("coherence_by_k"))
        model.coherence_by_k[pair.at(0).get<int>()] = pair.at(1).get<double>();
    model.descriptors = doc.at("descriptors").get<std::vector<std::vector<std::string>>>();
    model.short_descriptor = doc.at("short_descriptor").get<std::vector<bool>>();
    model.row_ids = doc.at("row_ids").get<std::vector<std::string>>();
    const auto& assignments = doc.at("assignments");
    const auto& weak = doc.at("weak_assignments");
    model.assignments.resize(model.row_ids.size());
    model.weak_assignment.assign(model.row_ids.size(), false);
    for (std::size_t i = 0; i < model.row_ids.size(); ++i) {
        model.assignments[i] = assignments.at(model.row_ids[i]).get<int>();
        for (const auto& id : weak)
            if (id.get<std::string>() == model.row_ids[i]) model.weak_assignment[i] = true;
    }
    return model;
}

}  // namespace dynmf::window_topics
